//! Benchmark harness comparing four bucket-sampling algorithms by the total
//! variation distance of their output distributions to uniform over each
//! query's near-neighborhood.

pub mod experiment;
pub mod io;
pub mod stats;
pub mod synth;

pub use experiment::{
    aggregate_tvd, compute_mq, degree_approx_accept_prob, run_algorithm, run_experiment,
    AlgoOutcome, Algorithm, BenchError, ExperimentConfig, ResultRow, ALL_ALGORITHMS, CSV_HEADER,
};
pub use io::{
    load_fvecs, load_idx_images, load_text_embeddings, read_fvecs, read_idx_images,
    read_text_embeddings, write_fvecs, DataError,
};
pub use stats::tvd_to_uniform;
pub use synth::{synth_generate, SynthData, SynthSpec};
