//! Synthetic datasets: well-separated clusters with planted queries whose
//! inner neighborhoods are known by construction.

use fairsample::rng::derive_stream;
use fairsample::Points;
use rand::Rng;

/// Generation parameters. `radius` is the near radius r the planted queries
/// are built for.
#[derive(Debug, Clone, Copy)]
pub struct SynthSpec {
    pub n: usize,
    pub dim: usize,
    pub clusters: usize,
    pub radius: f64,
    pub seed: u64,
}

/// Generated dataset plus its ground truth.
#[derive(Debug, Clone)]
pub struct SynthData {
    pub points: Points<f64>,
    /// One planted query per cluster (the cluster center).
    pub queries: Points<f64>,
    /// For each query, the indices of points within `radius` of it.
    pub inner: Vec<Vec<usize>>,
}

/// Cluster centers sit on coordinate axes at magnitudes that keep any two
/// centers at least 50 radii apart, so each query's neighborhood is exactly
/// its own cluster's inner points. Points are drawn at an exact distance
/// from their center (uniform direction, uniform distance in (0, 2r)
/// avoiding a 2% band around r), making the inner sets unambiguous.
pub fn synth_generate(spec: SynthSpec) -> SynthData {
    assert!(spec.n >= 1 && spec.dim >= 1 && spec.clusters >= 1);
    assert!(spec.radius > 0.0);
    let mut rng = derive_stream(spec.seed, &[0x53]);

    let centers: Vec<Vec<f64>> = (0..spec.clusters)
        .map(|j| {
            let mut c = vec![0.0; spec.dim];
            c[j % spec.dim] = (1 + j) as f64 * 50.0 * spec.radius;
            c
        })
        .collect();

    let mut rows = Vec::with_capacity(spec.n);
    let mut inner: Vec<Vec<usize>> = vec![Vec::new(); spec.clusters];
    for p in 0..spec.n {
        let j = p % spec.clusters;
        let u = loop {
            let u: f64 = rng.gen_range(0.0..2.0);
            if (u - 1.0).abs() >= 0.02 && u >= 0.05 {
                break u;
            }
        };
        let dir = random_direction(spec.dim, &mut rng);
        let row: Vec<f64> = centers[j]
            .iter()
            .zip(&dir)
            .map(|(&c, &d)| c + d * u * spec.radius)
            .collect();
        if u <= 1.0 {
            inner[j].push(p);
        }
        rows.push(row);
    }

    SynthData {
        points: Points::from_rows(rows),
        queries: Points::from_rows(centers),
        inner,
    }
}

fn random_direction<R: Rng + ?Sized>(dim: usize, rng: &mut R) -> Vec<f64> {
    loop {
        let v: Vec<f64> = (0..dim).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm > 1e-6 {
            return v.into_iter().map(|x| x / norm).collect();
        }
    }
}
