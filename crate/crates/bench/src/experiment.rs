//! The four-algorithm fairness benchmark.
//!
//! For each query q the harness computes M(q) — the near neighbors of q
//! (distance at most r) that share at least one hash bucket with q — then
//! draws `draws_multiplier * |M(q)|` samples with each algorithm and reports
//! the total variation distance between the empirical histogram on M(q) and
//! the uniform distribution. Draws landing outside M(q) are discarded and
//! reported as a rate, keeping every histogram on the common support.

use std::collections::HashMap;
use std::io::Write;
use std::time::Instant;

use fairsample::rng::derive_stream;
use fairsample::{dist_l2, ElementId, LshIndex, LshParams, Points, SetHandle, WeightedIndex};
use rand::Rng;
use thiserror::Error;

use crate::stats::tvd_to_uniform;

#[derive(Debug, Error)]
pub enum BenchError {
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error("empty dataset")]
    EmptyDataset,
    #[error("query {0} has dimension {1}, dataset has {2}")]
    QueryDimension(usize, usize, usize),
    #[error("retry budget exhausted for algorithm {0} on query {1}")]
    BudgetExhausted(Algorithm, usize),
}

/// The four sampling strategies of the comparison.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Algorithm {
    /// Bucket uniform among non-empty buckets, then element uniform.
    UniformUniform,
    /// Bucket proportional to size, then element uniform.
    WeightedUniform,
    /// Size-weighted proposal accepted with probability 1/deg(p), deg exact.
    Optimal,
    /// Size-weighted proposal; degree estimated as deg'(p) = L/i from the
    /// first containing bucket found at probe i; accepted with probability
    /// min(1, i/L).
    DegreeApprox,
}

pub const ALL_ALGORITHMS: [Algorithm; 4] = [
    Algorithm::UniformUniform,
    Algorithm::WeightedUniform,
    Algorithm::Optimal,
    Algorithm::DegreeApprox,
];

impl Algorithm {
    pub fn name(self) -> &'static str {
        match self {
            Algorithm::UniformUniform => "uniform-uniform",
            Algorithm::WeightedUniform => "weighted-uniform",
            Algorithm::Optimal => "optimal",
            Algorithm::DegreeApprox => "degree-approx",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        ALL_ALGORITHMS.iter().copied().find(|a| a.name() == s)
    }
}

impl std::fmt::Display for Algorithm {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

/// Everything one experiment run needs besides the data itself.
#[derive(Debug, Clone)]
pub struct ExperimentConfig {
    pub dataset_name: String,
    pub r: f64,
    pub c: f64,
    pub k: usize,
    pub l: usize,
    pub t: usize,
    pub w: f64,
    pub eps: f64,
    pub draws_multiplier: u64,
    pub repeats: u64,
    pub seed: u64,
    pub algorithms: Vec<Algorithm>,
    /// Precompute exact degrees per query for the optimal algorithm
    /// (affects its timing, not its distribution).
    pub precompute_degrees: bool,
    /// Report measured wall time; off by default so equal seeds give
    /// byte-identical CSV.
    pub timings: bool,
}

impl ExperimentConfig {
    pub fn validate(&self) {
        assert!(self.draws_multiplier >= 1, "draws multiplier >= 1");
        assert!(self.repeats >= 1, "repeats >= 1");
        assert!(!self.algorithms.is_empty(), "at least one algorithm");
    }
}

pub const CSV_HEADER: &str =
    "dataset,algorithm,k,L,w,r,query,repeat,m_q,tvd,mean_probes,discard_rate,wall_time_s";

/// M(q): indices of points within r of q that occupy at least one of q's
/// buckets, ascending.
pub fn compute_mq(index: &LshIndex<f64>, q: &[f64]) -> Vec<usize> {
    let buckets = index
        .query_buckets(q)
        .expect("query dimension checked by caller");
    let mut seen: Vec<usize> = buckets
        .iter()
        .flat_map(|b| index.store().active_members(b.set))
        .map(|e| e.0)
        .collect();
    seen.sort_unstable();
    seen.dedup();
    seen.retain(|&p| dist_l2(index.points().row(p), q) <= index.params().r);
    seen
}

/// Histogram over M(q) plus cost counters for one algorithm run.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AlgoOutcome {
    /// Accepted draws per M(q) element, positionally aligned with `mq`.
    pub counts: Vec<u64>,
    /// Accepted draws that fell outside M(q).
    pub discards: u64,
    /// Bucket membership probes across all draws, including rejected
    /// proposals' retries.
    pub probes: u64,
}

/// Exact single-attempt acceptance probability of the degree-approx rule
/// for a point lying in `g` of `l_total` buckets:
/// `sum_{i>=1} (1-g/L)^(i-1) (g/L) min(1, i/L)`; the tail beyond i = L sums
/// to `(1-g/L)^L` since the clamp makes those terms certain.
pub fn degree_approx_accept_prob(l_total: usize, g: usize) -> f64 {
    assert!(g >= 1 && g <= l_total);
    let p = g as f64 / l_total as f64;
    let mut total = 0.0;
    let mut tail = 1.0; // (1-p)^(i-1)
    for i in 1..=l_total {
        total += tail * p * (i as f64 / l_total as f64);
        tail *= 1.0 - p;
    }
    total + tail
}

struct QueryContext<'a> {
    index: &'a LshIndex<f64>,
    buckets: Vec<SetHandle>,
    /// Positions of non-empty buckets.
    nonempty: Vec<usize>,
    size_index: WeightedIndex,
    /// Exact degree per point, filled when precompute_degrees is set.
    degrees: Option<HashMap<usize, u64>>,
}

impl<'a> QueryContext<'a> {
    fn new(index: &'a LshIndex<f64>, q: &[f64], precompute: bool) -> Self {
        let buckets: Vec<SetHandle> = index
            .query_buckets(q)
            .expect("query dimension checked by caller")
            .iter()
            .map(|b| b.set)
            .collect();
        let sizes: Vec<f64> = buckets
            .iter()
            .map(|&b| index.store().active_count(b) as f64)
            .collect();
        let nonempty = (0..buckets.len()).filter(|&i| sizes[i] > 0.0).collect();
        let size_index = WeightedIndex::new(&sizes).expect("counts nonnegative");
        let mut ctx = Self {
            index,
            buckets,
            nonempty,
            size_index,
            degrees: None,
        };
        if precompute {
            let mut degrees = HashMap::new();
            for &b in &ctx.buckets {
                for e in index.store().active_members(b) {
                    *degrees.entry(e.0).or_insert(0u64) += 1;
                }
            }
            ctx.degrees = Some(degrees);
        }
        ctx
    }

    fn num_buckets(&self) -> usize {
        self.buckets.len()
    }

    fn contains(&self, bucket: usize, p: usize) -> bool {
        self.index
            .store()
            .contains(self.buckets[bucket], ElementId(p))
    }

    fn uniform_bucket_draw<R: Rng + ?Sized>(&self, rng: &mut R) -> usize {
        let b = self.nonempty[rng.gen_range(0..self.nonempty.len())];
        self.element_of(b, rng)
    }

    fn weighted_bucket_draw<R: Rng + ?Sized>(&self, rng: &mut R) -> usize {
        let b = self.size_index.sample(rng).expect("non-empty union");
        self.element_of(b, rng)
    }

    fn element_of<R: Rng + ?Sized>(&self, bucket: usize, rng: &mut R) -> usize {
        self.index
            .store()
            .sample_uniform(self.buckets[bucket], rng)
            .expect("bucket is non-empty")
            .0
    }

    fn degree(&self, p: usize, probes: &mut u64) -> u64 {
        if let Some(map) = &self.degrees {
            map[&p]
        } else {
            *probes += self.buckets.len() as u64;
            self.buckets
                .iter()
                .filter(|&&b| self.index.store().contains(b, ElementId(p)))
                .count() as u64
        }
    }
}

/// Runs one algorithm for `draws` accepted samples. Returns None when the
/// query's buckets are all empty.
pub fn run_algorithm<R: Rng + ?Sized>(
    alg: Algorithm,
    index: &LshIndex<f64>,
    q: &[f64],
    mq: &[usize],
    draws: u64,
    precompute_degrees: bool,
    rng: &mut R,
) -> Result<Option<AlgoOutcome>, BenchError> {
    let ctx = QueryContext::new(index, q, precompute_degrees && alg == Algorithm::Optimal);
    if ctx.nonempty.is_empty() {
        return Ok(None);
    }
    let pos: HashMap<usize, usize> = mq.iter().enumerate().map(|(i, &p)| (p, i)).collect();
    let mut counts = vec![0u64; mq.len()];
    let mut discards = 0u64;
    let mut probes = 0u64;
    // Generous per-draw cap; hitting it means the instance is pathological.
    let max_attempts = 100_000u64 * ctx.num_buckets() as u64;

    for _ in 0..draws {
        let p = match alg {
            Algorithm::UniformUniform => {
                probes += 1;
                ctx.uniform_bucket_draw(rng)
            }
            Algorithm::WeightedUniform => {
                probes += 1;
                ctx.weighted_bucket_draw(rng)
            }
            Algorithm::Optimal => {
                let mut attempts = 0u64;
                loop {
                    attempts += 1;
                    if attempts > max_attempts {
                        return Err(BenchError::BudgetExhausted(alg, 0));
                    }
                    probes += 1;
                    let p = ctx.weighted_bucket_draw(rng);
                    let deg = ctx.degree(p, &mut probes);
                    if rng.gen_range(0..deg) == 0 {
                        break p;
                    }
                }
            }
            Algorithm::DegreeApprox => {
                let l_total = ctx.num_buckets();
                let mut attempts = 0u64;
                loop {
                    attempts += 1;
                    if attempts > max_attempts {
                        return Err(BenchError::BudgetExhausted(alg, 0));
                    }
                    probes += 1;
                    let p = ctx.weighted_bucket_draw(rng);
                    // probe buckets uniformly until one containing p appears
                    let mut i = 0u64;
                    loop {
                        i += 1;
                        probes += 1;
                        if ctx.contains(rng.gen_range(0..l_total), p) {
                            break;
                        }
                    }
                    // deg'(p) = L/i, acceptance 1/deg' clamped to 1
                    let accept = (i as f64 / l_total as f64).min(1.0);
                    if rng.gen::<f64>() < accept {
                        break p;
                    }
                }
            }
        };
        match pos.get(&p) {
            Some(&i) => counts[i] += 1,
            None => discards += 1,
        }
    }
    Ok(Some(AlgoOutcome {
        counts,
        discards,
        probes,
    }))
}

/// One emitted CSV row; `None` numeric fields render empty (skipped rows).
#[derive(Debug, Clone)]
pub struct ResultRow {
    pub dataset: String,
    pub algorithm: String,
    pub k: usize,
    pub l: usize,
    pub w: f64,
    pub r: f64,
    pub query: String,
    pub repeat: String,
    pub m_q: f64,
    pub tvd: Option<f64>,
    pub mean_probes: Option<f64>,
    pub discard_rate: Option<f64>,
    pub wall_time_s: Option<f64>,
}

impl ResultRow {
    fn write_csv<W: Write>(&self, out: &mut W) -> std::io::Result<()> {
        fn opt(v: Option<f64>) -> String {
            v.map(|x| format!("{x:.6}")).unwrap_or_default()
        }
        writeln!(
            out,
            "{},{},{},{},{},{},{},{},{},{},{},{},{}",
            self.dataset,
            self.algorithm,
            self.k,
            self.l,
            format_args!("{:.6}", self.w),
            format_args!("{:.6}", self.r),
            self.query,
            self.repeat,
            format_args!("{:.6}", self.m_q),
            opt(self.tvd),
            opt(self.mean_probes),
            opt(self.discard_rate),
            opt(self.wall_time_s),
        )
    }
}

/// Streams one experiment as CSV rows; `write_header` lets sweep callers
/// share a single header line across runs.
pub fn run_experiment<W: Write>(
    cfg: &ExperimentConfig,
    points: &Points<f64>,
    queries: &Points<f64>,
    write_header: bool,
    out: &mut W,
) -> Result<Vec<ResultRow>, BenchError> {
    cfg.validate();
    if points.is_empty() {
        return Err(BenchError::EmptyDataset);
    }
    if queries.dim() != points.dim() && !queries.is_empty() {
        return Err(BenchError::QueryDimension(0, queries.dim(), points.dim()));
    }
    let params = LshParams {
        dim: points.dim(),
        k: cfg.k,
        l: cfg.l,
        t: cfg.t,
        w: cfg.w,
        r: cfg.r,
        c: cfg.c,
        seed: fairsample::rng::derive_seed(cfg.seed, &[0]),
    };
    let index = LshIndex::build(points.clone(), params).expect("finite dataset");

    if write_header {
        writeln!(out, "{CSV_HEADER}")?;
    }

    let mut rows: Vec<ResultRow> = Vec::new();
    for rep in 0..cfg.repeats {
        for (qi, q) in queries.rows().enumerate() {
            let mq = compute_mq(&index, q);
            if mq.is_empty() {
                let row = ResultRow {
                    dataset: cfg.dataset_name.clone(),
                    algorithm: "skipped".to_string(),
                    k: cfg.k,
                    l: cfg.l,
                    w: cfg.w,
                    r: cfg.r,
                    query: qi.to_string(),
                    repeat: rep.to_string(),
                    m_q: 0.0,
                    tvd: None,
                    mean_probes: None,
                    discard_rate: None,
                    wall_time_s: None,
                };
                row.write_csv(out)?;
                rows.push(row);
                continue;
            }
            let draws = cfg.draws_multiplier * mq.len() as u64;
            for (ai, &alg) in cfg.algorithms.iter().enumerate() {
                let mut rng = derive_stream(cfg.seed, &[1, rep, qi as u64, ai as u64]);
                let start = Instant::now();
                let outcome =
                    run_algorithm(alg, &index, q, &mq, draws, cfg.precompute_degrees, &mut rng)?
                        .expect("non-empty M(q) implies non-empty buckets");
                let elapsed = start.elapsed().as_secs_f64();
                debug_assert_eq!(outcome.counts.iter().sum::<u64>() + outcome.discards, draws);
                let tvd = tvd_to_uniform(&outcome.counts).unwrap_or(1.0);
                debug_assert!((0.0..=1.0).contains(&tvd));
                let row = ResultRow {
                    dataset: cfg.dataset_name.clone(),
                    algorithm: alg.name().to_string(),
                    k: cfg.k,
                    l: cfg.l,
                    w: cfg.w,
                    r: cfg.r,
                    query: qi.to_string(),
                    repeat: rep.to_string(),
                    m_q: mq.len() as f64,
                    tvd: Some(tvd),
                    mean_probes: Some(outcome.probes as f64 / draws as f64),
                    discard_rate: Some(outcome.discards as f64 / draws as f64),
                    wall_time_s: Some(if cfg.timings { elapsed } else { 0.0 }),
                };
                row.write_csv(out)?;
                rows.push(row);
            }
        }
    }

    // Aggregate mean row per algorithm over all non-skipped rows.
    for alg in &cfg.algorithms {
        let group: Vec<&ResultRow> = rows.iter().filter(|r| r.algorithm == alg.name()).collect();
        if group.is_empty() {
            continue;
        }
        let mean =
            |f: fn(&ResultRow) -> f64| group.iter().map(|r| f(r)).sum::<f64>() / group.len() as f64;
        let row = ResultRow {
            dataset: cfg.dataset_name.clone(),
            algorithm: alg.name().to_string(),
            k: cfg.k,
            l: cfg.l,
            w: cfg.w,
            r: cfg.r,
            query: "all".to_string(),
            repeat: "all".to_string(),
            m_q: mean(|r| r.m_q),
            tvd: Some(mean(|r| r.tvd.unwrap_or(0.0))),
            mean_probes: Some(mean(|r| r.mean_probes.unwrap_or(0.0))),
            discard_rate: Some(mean(|r| r.discard_rate.unwrap_or(0.0))),
            wall_time_s: Some(mean(|r| r.wall_time_s.unwrap_or(0.0))),
        };
        row.write_csv(out)?;
        rows.push(row);
    }
    Ok(rows)
}

/// Mean TVD of the aggregate row for one algorithm, if present.
pub fn aggregate_tvd(rows: &[ResultRow], alg: Algorithm) -> Option<f64> {
    rows.iter()
        .find(|r| r.query == "all" && r.algorithm == alg.name())
        .and_then(|r| r.tvd)
}
