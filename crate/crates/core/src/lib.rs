//! Uniform sampling from unions of sets, and fair near-neighbor queries on
//! top of a Euclidean LSH index.
//!
//! The library answers two kinds of queries:
//!
//! * Given a sub-family of sets, draw an element of their union with
//!   (almost) uniform probability without materializing the union
//!   ([`union::SubCollection`]).
//! * Given a dataset of points and a query point, report a point of the
//!   query's `r`-neighborhood with (almost) uniform probability
//!   ([`fann::FairAnnIndex`]).
//!
//! Geometry is generic over the scalar type through the [`scalar::Real`]
//! trait; `f32` and `f64` are supported, with concrete aliases exported at
//! the crate root.

pub mod estimate;
pub mod fann;
pub mod lsh;
pub mod rng;
pub mod scalar;
pub mod sets;
pub mod union;
pub mod weighted;

pub use estimate::{estimate_subset_size, SizeEstimate};
pub use fann::{FairAnnIndex, FairSample, FannError, QuerySession, SampleMode};
pub use lsh::{dist_l2, LshIndex, LshParams, Points, UnitHash};
pub use scalar::Real;
pub use sets::{ElementId, SetHandle, SetStore};
pub use union::{
    urn_probe_bit, urn_probe_value, SampleReport, SubCollection, UnionError, UrnConfig,
};
pub use weighted::{WeightedError, WeightedIndex};

/// Single-precision LSH index.
pub type LshIndex32 = lsh::LshIndex<f32>;
/// Double-precision LSH index.
pub type LshIndex64 = lsh::LshIndex<f64>;
/// Single-precision point matrix.
pub type Points32 = lsh::Points<f32>;
/// Double-precision point matrix.
pub type Points64 = lsh::Points<f64>;
/// Single-precision fair near-neighbor index.
pub type FairAnnIndex32 = fann::FairAnnIndex<f32>;
/// Double-precision fair near-neighbor index.
pub type FairAnnIndex64 = fann::FairAnnIndex<f64>;
