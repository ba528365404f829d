//! Euclidean (L2) locality-sensitive hashing.
//!
//! Each hash function is a concatenation of k unit hashes; a unit hash
//! projects a point onto a random Gaussian direction and buckets the
//! projection on a randomly shifted grid of width w. The index keeps t
//! independent data structures of L tables each, with every bucket stored
//! as a set in a shared [`SetStore`] so the sampling machinery can draw
//! from buckets directly.
//!
//! All randomness is derived from `params.seed` via per-unit-hash ChaCha8
//! streams labeled `(structure, table, unit)`, so two builds with equal
//! seeds over equal data are identical on every platform.

use std::collections::HashMap;

use thiserror::Error;

use crate::rng::derive_stream;
use crate::scalar::Real;
use crate::sets::{ElementId, SetHandle, SetStore};

#[derive(Debug, Error, PartialEq, Eq)]
pub enum LshError {
    #[error("point has dimension {got}, index expects {expected}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("non-finite coordinate in point {0}")]
    NonFiniteInput(usize),
}

/// Index parameters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LshParams<F> {
    pub dim: usize,
    /// Unit hashes per concatenated hash function.
    pub k: usize,
    /// Hash tables per data structure.
    pub l: usize,
    /// Independent data structures.
    pub t: usize,
    /// Grid width.
    pub w: F,
    /// Near radius.
    pub r: F,
    /// Approximation factor (> 1).
    pub c: F,
    pub seed: u64,
}

impl<F: Real> LshParams<F> {
    fn validate(&self) {
        assert!(self.k >= 1 && self.l >= 1 && self.t >= 1, "k, L, t >= 1");
        assert!(self.w > F::zero(), "w > 0");
        assert!(self.r > F::zero(), "r > 0");
        assert!(self.c > F::one(), "c > 1");
    }
}

/// Dense row-major point matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct Points<F> {
    data: Vec<F>,
    dim: usize,
}

impl<F: Real> Points<F> {
    pub fn new(data: Vec<F>, dim: usize) -> Self {
        assert!(dim > 0 && data.len() % dim == 0, "data must be n*dim");
        Self { data, dim }
    }

    pub fn from_rows(rows: Vec<Vec<F>>) -> Self {
        let dim = rows.first().map_or(1, |r| r.len().max(1));
        let mut data = Vec::with_capacity(rows.len() * dim);
        for r in &rows {
            assert_eq!(r.len(), dim, "ragged rows");
            data.extend_from_slice(r);
        }
        Self { data, dim }
    }

    pub fn len(&self) -> usize {
        self.data.len() / self.dim
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn row(&self, i: usize) -> &[F] {
        &self.data[i * self.dim..(i + 1) * self.dim]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[F]> {
        self.data.chunks_exact(self.dim)
    }
}

/// Euclidean distance.
pub fn dist_l2<F: Real>(p: &[F], q: &[F]) -> F {
    assert_eq!(p.len(), q.len(), "dimension mismatch");
    p.iter()
        .zip(q)
        .map(|(&a, &b)| (a - b) * (a - b))
        .fold(F::zero(), |acc, d| acc + d)
        .sqrt()
}

/// One randomly shifted grid projection.
#[derive(Debug, Clone)]
pub struct UnitHash<F> {
    pub direction: Vec<F>,
    /// Uniform in [0, w).
    pub shift: F,
}

impl<F: Real> UnitHash<F> {
    /// `floor((<direction, x> + shift) / w)`.
    pub fn eval(&self, x: &[F], w: F) -> i64 {
        assert_eq!(x.len(), self.direction.len(), "dimension mismatch");
        let dot = self
            .direction
            .iter()
            .zip(x)
            .map(|(&d, &v)| d * v)
            .fold(F::zero(), |acc, p| acc + p);
        ((dot + self.shift) / w)
            .floor()
            .to_i64()
            .expect("projection in i64 range")
    }
}

/// Concatenated key of k unit-hash values, order preserving.
pub fn concat_hash_eval<F: Real>(hashes: &[UnitHash<F>], x: &[F], w: F) -> Vec<i64> {
    hashes.iter().map(|h| h.eval(x, w)).collect()
}

#[derive(Debug, Clone)]
struct Table<F> {
    hashes: Vec<UnitHash<F>>,
    buckets: HashMap<Vec<i64>, SetHandle>,
}

/// A bucket returned for a query, labeled by its (structure, table) pair.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct QueryBucket {
    pub structure: usize,
    pub table: usize,
    pub set: SetHandle,
}

/// t * L hash tables over a stored dataset, with buckets as sets.
#[derive(Debug, Clone)]
pub struct LshIndex<F> {
    params: LshParams<F>,
    tables: Vec<Table<F>>,
    store: SetStore,
    points: Points<F>,
    empty_set: SetHandle,
}

impl<F: Real> LshIndex<F> {
    /// Hashes every point into all t*L tables. Deterministic in
    /// `params.seed`.
    pub fn build(points: Points<F>, params: LshParams<F>) -> Result<Self, LshError> {
        params.validate();
        assert_eq!(points.dim(), params.dim, "points must match params.dim");
        for (i, row) in points.rows().enumerate() {
            if row.iter().any(|v| !v.is_finite()) {
                return Err(LshError::NonFiniteInput(i));
            }
        }

        let mut store = SetStore::new();
        let empty_set = store.add_set(std::iter::empty());
        let mut tables = Vec::with_capacity(params.t * params.l);
        for j in 0..params.t {
            for i in 0..params.l {
                let hashes: Vec<UnitHash<F>> = (0..params.k)
                    .map(|u| {
                        let mut rng = derive_stream(params.seed, &[j as u64, i as u64, u as u64]);
                        let direction = (0..params.dim)
                            .map(|_| F::standard_normal(&mut rng))
                            .collect();
                        let shift = F::uniform_to(&mut rng, params.w);
                        UnitHash { direction, shift }
                    })
                    .collect();
                let mut grouped: HashMap<Vec<i64>, Vec<ElementId>> = HashMap::new();
                for (p, row) in points.rows().enumerate() {
                    let key = concat_hash_eval(&hashes, row, params.w);
                    grouped.entry(key).or_default().push(ElementId(p));
                }
                let mut keys: Vec<Vec<i64>> = grouped.keys().cloned().collect();
                keys.sort_unstable(); // bucket handles independent of map order
                let mut buckets = HashMap::with_capacity(keys.len());
                for key in keys {
                    let members = grouped.remove(&key).unwrap();
                    let handle = store.add_set(members);
                    buckets.insert(key, handle);
                }
                tables.push(Table { hashes, buckets });
            }
        }
        Ok(Self {
            params,
            tables,
            store,
            points,
            empty_set,
        })
    }

    pub fn params(&self) -> &LshParams<F> {
        &self.params
    }

    pub fn points(&self) -> &Points<F> {
        &self.points
    }

    pub fn store(&self) -> &SetStore {
        &self.store
    }

    pub fn point(&self, id: ElementId) -> &[F] {
        self.points.row(id.0)
    }

    /// Distance from a stored point to an arbitrary point.
    pub fn dist_to(&self, id: ElementId, q: &[F]) -> F {
        dist_l2(self.point(id), q)
    }

    /// The bucket of `q` in every table, in (structure, table) lexicographic
    /// order. Tables where `q`'s key is unoccupied yield a shared empty set,
    /// so the result always has t*L entries.
    pub fn query_buckets(&self, q: &[F]) -> Result<Vec<QueryBucket>, LshError> {
        if q.len() != self.params.dim {
            return Err(LshError::DimensionMismatch {
                expected: self.params.dim,
                got: q.len(),
            });
        }
        let mut out = Vec::with_capacity(self.tables.len());
        for (idx, table) in self.tables.iter().enumerate() {
            let key = concat_hash_eval(&table.hashes, q, self.params.w);
            let set = table.buckets.get(&key).copied().unwrap_or(self.empty_set);
            out.push(QueryBucket {
                structure: idx / self.params.l,
                table: idx % self.params.l,
                set,
            });
        }
        Ok(out)
    }

    /// Splits the index into the pieces a query session needs: mutable
    /// bucket storage plus read-only points and parameters.
    pub(crate) fn split_mut(&mut self) -> (&mut SetStore, &Points<F>, &LshParams<F>) {
        (&mut self.store, &self.points, &self.params)
    }
}
