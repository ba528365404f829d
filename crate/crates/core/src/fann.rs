//! Fair approximate near-neighbor queries over the LSH index.
//!
//! Two modes:
//!
//! * Approximate neighborhood: one-shot almost-uniform sampling from some
//!   set S with N(q,r) ⊆ S ⊆ N(q,cr), realized by the outlier-aware union
//!   sampler over the query's buckets ([`FairAnnIndex::approx_query`]).
//! * Exact neighborhood: a [`QuerySession`] maintains per-bucket active
//!   weights and discovered-outlier sets; structures that surface too many
//!   outliers are retired, and samples falling in the (r, cr] annulus can
//!   be rejected by the caller via [`QuerySession::fair_query`] to get
//!   almost-uniform samples from N(q,r) itself.
//!
//! A session mutates the index's shared bucket storage while alive (outlier
//! deactivation), so sessions require exclusive access to the index; all
//! deactivations are rolled back when the session is dropped. Concurrent
//! query throughput needs independent index replicas.

use rand::Rng;
use thiserror::Error;

use crate::lsh::{dist_l2, LshError, LshIndex, Points};
use crate::scalar::Real;
use crate::sets::{ElementId, SetHandle, SetStore};
use crate::union::{urn_probe_bit, SubCollection, UnionError, UrnConfig};
use crate::weighted::WeightedIndex;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum FannError {
    #[error("no non-outlier point in the query's buckets")]
    EmptyNeighborhood,
    #[error("outlier budget exceeded; retry with a fresh index seed")]
    TooManyOutliers,
    #[error("every data structure was retired")]
    AllStructuresRetired,
    #[error("round budget exhausted")]
    RoundBudgetExhausted,
    #[error(transparent)]
    Lsh(#[from] LshError),
}

/// Which neighborhood guarantee a sample carries.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SampleMode {
    /// Distance at most c*r.
    ApproximateNeighborhood,
    /// Distance at most r.
    ExactNeighborhood,
}

/// One fair near-neighbor sample with its cost counters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FairSample<F> {
    pub point: ElementId,
    pub distance: F,
    pub mode: SampleMode,
    pub rounds: u64,
    pub probes: u64,
    pub outliers_removed: u64,
}

/// LSH index plus the fairness parameter eps.
#[derive(Debug, Clone)]
pub struct FairAnnIndex<F> {
    lsh: LshIndex<F>,
    eps: f64,
}

impl<F: Real> FairAnnIndex<F> {
    pub fn new(lsh: LshIndex<F>, eps: f64) -> Self {
        assert!(eps > 0.0 && eps < 1.0, "eps must lie in (0,1)");
        Self { lsh, eps }
    }

    pub fn lsh(&self) -> &LshIndex<F> {
        &self.lsh
    }

    pub fn eps(&self) -> f64 {
        self.eps
    }

    /// Almost-uniform sample from some S with N(q,r) ⊆ S ⊆ N(q,cr).
    ///
    /// Outliers (points beyond c*r sharing a bucket by hash collision) are
    /// skipped with a discovery budget of `4*t*L`; bucket state is restored
    /// before returning.
    pub fn approx_query<R: Rng + ?Sized>(
        &mut self,
        q: &[F],
        rng: &mut R,
    ) -> Result<FairSample<F>, FannError> {
        let buckets = self.lsh.query_buckets(q)?;
        let handles: Vec<SetHandle> = buckets.iter().map(|b| b.set).collect();
        let (store, points, params) = self.lsh.split_mut();
        let cr = params.c * params.r;
        let budget = 4 * (params.t * params.l) as u64;
        let mut sub = SubCollection::new(store, handles);
        let max_rounds = sub.default_max_rounds(self.eps);
        let report = sub
            .sample_outliers(
                |x| dist_l2(points.row(x.0), q) > cr,
                budget,
                self.eps,
                rng,
                max_rounds,
            )
            .map_err(|e| match e {
                UnionError::EmptyUnion => FannError::EmptyNeighborhood,
                UnionError::TooManyOutliers(_) => FannError::TooManyOutliers,
                UnionError::RoundBudgetExhausted(_) => FannError::RoundBudgetExhausted,
                UnionError::EmptyEstimate => FannError::EmptyNeighborhood,
            })?;
        Ok(FairSample {
            point: report.element,
            distance: dist_l2(points.row(report.element.0), q),
            mode: SampleMode::ApproximateNeighborhood,
            rounds: report.rounds,
            probes: report.probes,
            outliers_removed: report.outliers_removed,
        })
    }

    /// Opens an exact-neighborhood query session. The session borrows the
    /// index exclusively until dropped.
    pub fn session<'a>(&'a mut self, q: &[F]) -> Result<QuerySession<'a, F>, FannError> {
        let buckets = self.lsh.query_buckets(q)?;
        let handles: Vec<SetHandle> = buckets.iter().map(|b| b.set).collect();
        let eps = self.eps;
        let (store, points, params) = self.lsh.split_mut();
        let weights: Vec<f64> = handles
            .iter()
            .map(|&h| store.active_count(h) as f64)
            .collect();
        let weight_index = WeightedIndex::new(&weights).expect("counts nonnegative");
        let n = points.len();
        let cfg = UrnConfig::new(eps / (4.0 * (params.t * params.l) as f64));
        Ok(QuerySession {
            store,
            points,
            q: q.to_vec(),
            buckets: handles,
            weights: weight_index,
            outlier_counts: vec![0; params.t],
            active_structures: (0..params.t).collect(),
            touched: Vec::new(),
            l: params.l,
            t: params.t,
            r: params.r,
            cr: params.c * params.r,
            cfg,
            n,
        })
    }
}

/// Per-query mutable state for exact-neighborhood sampling.
///
/// Invariants kept across rounds: each bucket's weight equals its active
/// size |H_i^j(q)| − |O_i^j| while structure j is active and 0 afterwards;
/// structure j is active iff it has surfaced fewer than 3L outliers.
#[derive(Debug)]
pub struct QuerySession<'a, F: Real> {
    store: &'a mut SetStore,
    points: &'a Points<F>,
    q: Vec<F>,
    buckets: Vec<SetHandle>,
    weights: WeightedIndex,
    outlier_counts: Vec<usize>,
    active_structures: Vec<usize>,
    /// (bucket position, active count at session start) for rollback.
    touched: Vec<(usize, usize)>,
    l: usize,
    t: usize,
    r: F,
    cr: F,
    cfg: UrnConfig,
    n: usize,
}

impl<'a, F: Real> QuerySession<'a, F> {
    pub fn total_weight(&self) -> f64 {
        self.weights.total()
    }

    pub fn bucket_weight(&self, structure: usize, table: usize) -> f64 {
        self.weights.get(structure * self.l + table)
    }

    pub fn is_structure_active(&self, structure: usize) -> bool {
        self.active_structures.contains(&structure)
    }

    pub fn outliers_discovered(&self, structure: usize) -> usize {
        self.outlier_counts[structure]
    }

    /// Round budget mirroring the union sampler's default:
    /// `64 * backoff * t * L * log2(n + 2)`.
    pub fn default_max_rounds(&self) -> u64 {
        let tl = (self.t * self.l) as f64;
        (64.0 * self.cfg.backoff as f64 * tl * (self.n as f64 + 2.0).log2()).ceil() as u64
    }

    fn retire(&mut self, structure: usize) {
        self.active_structures.retain(|&j| j != structure);
        for i in 0..self.l {
            self.weights
                .update(structure * self.l + i, 0.0)
                .expect("zero is a valid weight");
        }
    }

    /// One almost-uniform sample from the non-outlier points of the active
    /// buckets: uniform up to (1+O(eps)) factors on N(q,r), never beyond
    /// c*r. The returned distance may fall in the (r, cr] annulus.
    pub fn exact_sample<R: Rng + ?Sized>(
        &mut self,
        rng: &mut R,
        max_rounds: u64,
    ) -> Result<FairSample<F>, FannError> {
        let mut probes = 0u64;
        let mut removed = 0u64;
        for round in 1..=max_rounds {
            if self.active_structures.is_empty() {
                return Err(FannError::AllStructuresRetired);
            }
            let b = match self.weights.sample(rng) {
                Ok(b) => b,
                Err(_) => return Err(FannError::EmptyNeighborhood),
            };
            let x = self
                .store
                .sample_uniform(self.buckets[b], rng)
                .expect("positive weight implies active members");
            let dist = dist_l2(self.points.row(x.0), &self.q);
            if dist > self.cr {
                // Outlier: remove from this bucket, charge its structure.
                if !self.touched.iter().any(|&(pos, _)| pos == b) {
                    self.touched
                        .push((b, self.store.active_count(self.buckets[b])));
                }
                self.store.deactivate(self.buckets[b], x);
                self.weights
                    .update(b, self.store.active_count(self.buckets[b]) as f64)
                    .expect("count nonnegative");
                let j = b / self.l;
                self.outlier_counts[j] += 1;
                removed += 1;
                if self.outlier_counts[j] >= 3 * self.l && self.is_structure_active(j) {
                    self.retire(j);
                }
                continue;
            }
            let m = self.active_structures.len() * self.l;
            let store = &*self.store;
            let buckets = &self.buckets;
            let active = &self.active_structures;
            let l = self.l;
            let (accept, used) = urn_probe_bit(
                m,
                |u| {
                    let j = active[u / l];
                    store.contains(buckets[j * l + u % l], x)
                },
                self.cfg,
                rng,
            );
            probes += used;
            if accept {
                return Ok(FairSample {
                    point: x,
                    distance: dist,
                    mode: SampleMode::ApproximateNeighborhood,
                    rounds: round,
                    probes,
                    outliers_removed: removed,
                });
            }
        }
        Err(FannError::RoundBudgetExhausted)
    }

    /// Loops [`exact_sample`](Self::exact_sample), discarding samples beyond
    /// r, until a point of N(q,r) is accepted. Budget exhaustion is reported
    /// as an empty neighborhood; callers needing certainty can verify by a
    /// linear scan.
    pub fn fair_query<R: Rng + ?Sized>(
        &mut self,
        rng: &mut R,
        max_rounds: u64,
    ) -> Result<FairSample<F>, FannError> {
        let mut rounds = 0u64;
        let mut probes = 0u64;
        let mut removed = 0u64;
        while rounds < max_rounds {
            match self.exact_sample(rng, max_rounds - rounds) {
                Ok(s) => {
                    rounds += s.rounds;
                    probes += s.probes;
                    removed += s.outliers_removed;
                    if s.distance <= self.r {
                        return Ok(FairSample {
                            point: s.point,
                            distance: s.distance,
                            mode: SampleMode::ExactNeighborhood,
                            rounds,
                            probes,
                            outliers_removed: removed,
                        });
                    }
                }
                Err(FannError::RoundBudgetExhausted) => break,
                Err(e) => return Err(e),
            }
        }
        Err(FannError::EmptyNeighborhood)
    }

    /// Rolls back all bucket deactivations and ends the session. Dropping
    /// the session does the same.
    pub fn finish(self) {}
}

impl<F: Real> Drop for QuerySession<'_, F> {
    fn drop(&mut self) {
        for &(pos, count) in &self.touched {
            self.store.restore_to(self.buckets[pos], count);
        }
    }
}
