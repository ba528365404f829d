//! `bench` CLI: dataset loading or synthesis, experiment runs, and quick
//! dataset inspection.
//!
//! Exit codes: 0 success, 1 usage error, 2 data/format error, 3 runtime
//! budget exhausted.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::PathBuf;

use clap::error::ErrorKind;
use clap::{Args, Parser, Subcommand, ValueEnum};
use fairsample::Points;
use fairsample_bench::{
    load_fvecs, load_idx_images, load_text_embeddings, run_experiment, synth_generate, write_fvecs,
    Algorithm, BenchError, DataError, ExperimentConfig, SynthSpec, ALL_ALGORITHMS,
};

const EXIT_USAGE: i32 = 1;
const EXIT_DATA: i32 = 2;
const EXIT_BUDGET: i32 = 3;

#[derive(Debug, Parser)]
#[command(
    name = "bench",
    about = "Fairness benchmark for bucket-sampling algorithms over an LSH index"
)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Debug, Subcommand)]
enum Cmd {
    /// Run the four-algorithm comparison and emit CSV.
    Run(RunArgs),
    /// Generate a synthetic clustered dataset (fvecs) plus planted queries.
    Synth(SynthArgs),
    /// Print summary statistics of a dataset file.
    Inspect(InspectArgs),
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Format {
    Fvecs,
    Idx,
    Text,
}

#[derive(Debug, Args)]
struct RunArgs {
    /// Dataset file.
    #[arg(long)]
    dataset: PathBuf,
    /// Dataset (and query file) format.
    #[arg(long, value_enum, default_value = "fvecs")]
    format: Format,
    /// Query file in the same format; defaults to the first --num-queries
    /// dataset points.
    #[arg(long)]
    queries: Option<PathBuf>,
    /// Number of leading dataset points used as queries when --queries is
    /// absent.
    #[arg(long, default_value_t = 10)]
    num_queries: usize,
    /// Near radius.
    #[arg(long, default_value_t = 1.0)]
    r: f64,
    /// Approximation factor (> 1).
    #[arg(long, default_value_t = 2.0)]
    c: f64,
    /// Unit hashes per table.
    #[arg(long, default_value_t = 4)]
    k: usize,
    /// Hash tables per structure.
    #[arg(long = "L", default_value_t = 30)]
    l: usize,
    /// Independent structures.
    #[arg(long, default_value_t = 1)]
    t: usize,
    /// Grid width.
    #[arg(long, default_value_t = 4.0)]
    w: f64,
    /// Fairness parameter.
    #[arg(long, default_value_t = 0.1)]
    eps: f64,
    /// Draws per query = draws-mult * |M(q)|.
    #[arg(long = "draws-mult", default_value_t = 100)]
    draws_mult: u64,
    #[arg(long, default_value_t = 10)]
    repeats: u64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Comma-separated subset of: uniform-uniform, weighted-uniform,
    /// optimal, degree-approx.
    #[arg(
        long,
        default_value = "uniform-uniform,weighted-uniform,optimal,degree-approx"
    )]
    algos: String,
    /// Output CSV path; stdout when absent.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Parameter sweep, e.g. "k=10,12,15" or "L=100,200,300" or
    /// "w=2.0,4.0"; one run per value, all rows in one CSV.
    #[arg(long)]
    sweep: Option<String>,
    /// Precompute exact degrees for the optimal algorithm's timing rows.
    #[arg(long)]
    precompute_degrees: bool,
    /// Report measured wall time (breaks byte-identical reruns).
    #[arg(long)]
    timings: bool,
    /// Normalize text-embedding rows to unit norm.
    #[arg(long)]
    normalize: bool,
}

#[derive(Debug, Args)]
struct SynthArgs {
    #[arg(long, default_value_t = 1000)]
    n: usize,
    #[arg(long, default_value_t = 8)]
    dim: usize,
    #[arg(long, default_value_t = 4)]
    clusters: usize,
    /// Near radius the planted queries are built for.
    #[arg(long, default_value_t = 1.0)]
    radius: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Dataset output path (fvecs).
    #[arg(long)]
    out: PathBuf,
    /// Planted-query output path (fvecs); skipped when absent.
    #[arg(long)]
    queries_out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct InspectArgs {
    #[arg(long)]
    dataset: PathBuf,
    #[arg(long, value_enum, default_value = "fvecs")]
    format: Format,
    #[arg(long)]
    normalize: bool,
}

fn main() {
    std::process::exit(real_main());
}

fn real_main() -> i32 {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => EXIT_USAGE,
            };
            let _ = e.print();
            return code;
        }
    };
    let result = match cli.cmd {
        Cmd::Run(args) => cmd_run(args),
        Cmd::Synth(args) => cmd_synth(args),
        Cmd::Inspect(args) => cmd_inspect(args),
    };
    match result {
        Ok(()) => 0,
        Err(code) => code,
    }
}

fn data_err(e: impl std::fmt::Display) -> i32 {
    eprintln!("error: {e}");
    EXIT_DATA
}

fn usage_err(msg: impl std::fmt::Display) -> i32 {
    eprintln!("usage error: {msg}");
    EXIT_USAGE
}

fn load(path: &PathBuf, format: Format, normalize: bool) -> Result<Points<f64>, i32> {
    let loaded: Result<Points<f64>, DataError> = match format {
        Format::Fvecs => load_fvecs(path),
        Format::Idx => load_idx_images(path),
        Format::Text => load_text_embeddings(path, normalize),
    };
    loaded.map_err(data_err)
}

fn cmd_run(args: RunArgs) -> Result<(), i32> {
    let points = load(&args.dataset, args.format, args.normalize)?;
    if points.is_empty() {
        return Err(data_err("dataset is empty"));
    }
    let queries = match &args.queries {
        Some(path) => load(path, args.format, args.normalize)?,
        None => {
            let n = args.num_queries.min(points.len());
            Points::from_rows((0..n).map(|i| points.row(i).to_vec()).collect())
        }
    };
    if queries.is_empty() {
        return Err(usage_err("no queries: empty query file or --num-queries 0"));
    }

    let algorithms = parse_algos(&args.algos).map_err(usage_err)?;
    let sweep = parse_sweep(args.sweep.as_deref()).map_err(usage_err)?;

    let base = ExperimentConfig {
        dataset_name: args
            .dataset
            .file_name()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_else(|| "dataset".to_string()),
        r: args.r,
        c: args.c,
        k: args.k,
        l: args.l,
        t: args.t,
        w: args.w,
        eps: args.eps,
        draws_multiplier: args.draws_mult,
        repeats: args.repeats,
        seed: args.seed,
        algorithms,
        precompute_degrees: args.precompute_degrees,
        timings: args.timings,
    };

    let configs: Vec<ExperimentConfig> = match sweep {
        None => vec![base],
        Some((param, values)) => values
            .into_iter()
            .map(|v| {
                let mut cfg = base.clone();
                match param {
                    SweepParam::K => cfg.k = v as usize,
                    SweepParam::L => cfg.l = v as usize,
                    SweepParam::W => cfg.w = v,
                }
                cfg
            })
            .collect(),
    };

    let mut out: Box<dyn Write> = match &args.out {
        Some(path) => Box::new(BufWriter::new(File::create(path).map_err(data_err)?)),
        None => Box::new(std::io::stdout().lock()),
    };
    for (i, cfg) in configs.iter().enumerate() {
        run_experiment(cfg, &points, &queries, i == 0, &mut out).map_err(|e| match e {
            BenchError::BudgetExhausted(..) => {
                eprintln!("error: {e}");
                EXIT_BUDGET
            }
            other => data_err(other),
        })?;
    }
    out.flush().map_err(data_err)?;
    Ok(())
}

fn cmd_synth(args: SynthArgs) -> Result<(), i32> {
    let data = synth_generate(SynthSpec {
        n: args.n,
        dim: args.dim,
        clusters: args.clusters,
        radius: args.radius,
        seed: args.seed,
    });
    let mut out = BufWriter::new(File::create(&args.out).map_err(data_err)?);
    write_fvecs(&mut out, &data.points).map_err(data_err)?;
    out.flush().map_err(data_err)?;
    if let Some(qpath) = &args.queries_out {
        let mut qout = BufWriter::new(File::create(qpath).map_err(data_err)?);
        write_fvecs(&mut qout, &data.queries).map_err(data_err)?;
        qout.flush().map_err(data_err)?;
    }
    println!(
        "wrote {} points (dim {}) in {} clusters to {}",
        data.points.len(),
        data.points.dim(),
        args.clusters,
        args.out.display()
    );
    Ok(())
}

fn cmd_inspect(args: InspectArgs) -> Result<(), i32> {
    let points = load(&args.dataset, args.format, args.normalize)?;
    println!("points: {}", points.len());
    if points.is_empty() {
        println!("dim: n/a (empty dataset)");
        return Ok(());
    }
    println!("dim: {}", points.dim());
    let norms: Vec<f64> = points
        .rows()
        .map(|r| r.iter().map(|v| v * v).sum::<f64>().sqrt())
        .collect();
    let min = norms.iter().cloned().fold(f64::INFINITY, f64::min);
    let max = norms.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let mean = norms.iter().sum::<f64>() / norms.len() as f64;
    println!("norm min/mean/max: {min:.6}/{mean:.6}/{max:.6}");
    Ok(())
}

fn parse_algos(s: &str) -> Result<Vec<Algorithm>, String> {
    let mut out = Vec::new();
    for name in s.split(',').map(str::trim).filter(|n| !n.is_empty()) {
        let alg = Algorithm::parse(name).ok_or_else(|| {
            format!(
                "unknown algorithm {name:?}; expected one of {}",
                ALL_ALGORITHMS.map(|a| a.name()).join(", ")
            )
        })?;
        if !out.contains(&alg) {
            out.push(alg);
        }
    }
    if out.is_empty() {
        return Err("no algorithms selected".to_string());
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy)]
enum SweepParam {
    K,
    L,
    W,
}

fn parse_sweep(s: Option<&str>) -> Result<Option<(SweepParam, Vec<f64>)>, String> {
    let Some(s) = s else { return Ok(None) };
    let (name, rest) = s
        .split_once('=')
        .ok_or_else(|| format!("sweep must look like k=10,12,15; got {s:?}"))?;
    let param = match name.trim() {
        "k" => SweepParam::K,
        "L" => SweepParam::L,
        "w" => SweepParam::W,
        other => return Err(format!("sweep parameter must be k, L, or w; got {other:?}")),
    };
    let values: Result<Vec<f64>, _> = rest.split(',').map(|v| v.trim().parse::<f64>()).collect();
    let values = values.map_err(|e| format!("bad sweep value in {rest:?}: {e}"))?;
    if values.is_empty() {
        return Err("sweep needs at least one value".to_string());
    }
    if matches!(param, SweepParam::K | SweepParam::L)
        && values.iter().any(|v| v.fract() != 0.0 || *v < 1.0)
    {
        return Err("k and L sweep values must be positive integers".to_string());
    }
    Ok(Some((param, values)))
}
