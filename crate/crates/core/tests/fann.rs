//! Fair near-neighbor behavior on planted instances with brute-force
//! neighborhood oracles.

use std::collections::HashMap;

use fairsample::rng::derive_stream;
use fairsample::{
    dist_l2, ElementId, FairAnnIndex, FannError, LshIndex, LshParams, Points, SampleMode,
};
use rand::Rng;
use rand_chacha::ChaCha8Rng;

const DIM: usize = 4;

fn params(k: usize, l: usize, t: usize, w: f64, r: f64, c: f64, seed: u64) -> LshParams<f64> {
    LshParams {
        dim: DIM,
        k,
        l,
        t,
        w,
        r,
        c,
        seed,
    }
}

/// Random point at the given distance from the origin.
fn at_distance(dist: f64, rng: &mut ChaCha8Rng) -> Vec<f64> {
    loop {
        let v: Vec<f64> = (0..DIM).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let norm: f64 = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm > 1e-6 {
            return v.into_iter().map(|x| x * dist / norm).collect();
        }
    }
}

/// 20 points within r, `annulus` points in (r, cr], 500 points far beyond cr.
fn planted_instance(annulus: usize, seed: u64) -> (Points<f64>, Vec<usize>, Vec<usize>) {
    let mut rng = derive_stream(seed, &[0]);
    let mut rows = Vec::new();
    let mut inner = Vec::new();
    let mut ring = Vec::new();
    for _ in 0..20 {
        inner.push(rows.len());
        let d = rng.gen_range(0.2..0.9);
        rows.push(at_distance(d, &mut rng));
    }
    for _ in 0..annulus {
        ring.push(rows.len());
        let d = rng.gen_range(1.2..1.9);
        rows.push(at_distance(d, &mut rng));
    }
    for _ in 0..500 {
        let d = rng.gen_range(40.0..60.0);
        rows.push(at_distance(d, &mut rng));
    }
    (Points::from_rows(rows), inner, ring)
}

fn tvd_to_uniform(counts: &HashMap<ElementId, u64>, support: &[usize]) -> f64 {
    let total: u64 = counts.values().sum();
    let u = 1.0 / support.len() as f64;
    0.5 * support
        .iter()
        .map(|&p| {
            let c = counts.get(&ElementId(p)).copied().unwrap_or(0);
            (c as f64 / total as f64 - u).abs()
        })
        .sum::<f64>()
}

#[test]
fn approx_query_single_near_point() {
    let pts = Points::from_rows(vec![vec![0.1, 0.0, 0.0, 0.0]]);
    let lsh = LshIndex::build(pts, params(4, 10, 1, 4.0, 1.0, 2.0, 50)).unwrap();
    let mut index = FairAnnIndex::new(lsh, 0.1);
    let mut rng = derive_stream(51, &[]);
    let q = [0.0; DIM];
    for _ in 0..20 {
        let s = index.approx_query(&q, &mut rng).unwrap();
        assert_eq!(s.point, ElementId(0));
        assert!(s.distance <= 2.0);
        assert_eq!(s.mode, SampleMode::ApproximateNeighborhood);
    }
}

#[test]
fn approx_query_all_far_never_samples() {
    let mut rng = derive_stream(52, &[]);
    let rows: Vec<Vec<f64>> = (0..30).map(|_| at_distance(5.0, &mut rng)).collect();
    let pts = Points::from_rows(rows);
    // w large enough that far points still collide with q, forcing the
    // outlier machinery to see them
    let lsh = LshIndex::build(pts, params(2, 5, 1, 100.0, 0.01, 2.0, 53)).unwrap();
    let mut index = FairAnnIndex::new(lsh, 0.1);
    let q = [0.0; DIM];
    for _ in 0..10 {
        match index.approx_query(&q, &mut rng) {
            Err(FannError::EmptyNeighborhood) | Err(FannError::TooManyOutliers) => {}
            other => panic!("expected failure, got {other:?}"),
        }
    }
}

// Planted cluster, no annulus: S = N(q,r) exactly, TVD <= 0.1 over 100*20
// accepted samples against the brute-force inner set.
#[test]
fn approx_query_planted_cluster_fairness() {
    let (pts, inner, _) = planted_instance(0, 54);
    // brute-force oracle confirms the construction
    let q = [0.0; DIM];
    for (i, row) in pts.rows().enumerate() {
        let d = dist_l2(row, &q);
        assert_eq!(inner.contains(&i), d <= 1.0);
        assert!(d <= 1.0 || d > 2.0);
    }
    let lsh = LshIndex::build(pts, params(4, 30, 1, 4.0, 1.0, 2.0, 55)).unwrap();
    let mut index = FairAnnIndex::new(lsh, 0.1);
    let mut rng = derive_stream(56, &[]);
    let mut counts = HashMap::new();
    for _ in 0..100 * inner.len() {
        let s = index.approx_query(&q, &mut rng).unwrap();
        assert!(inner.contains(&s.point.0), "non-inner point sampled");
        *counts.entry(s.point).or_insert(0u64) += 1;
    }
    let tvd = tvd_to_uniform(&counts, &inner);
    assert!(tvd <= 0.1, "TVD {tvd} too large");
}

#[test]
fn session_initial_state() {
    // empty buckets: total weight 0
    let pts = Points::from_rows(vec![vec![1e6; DIM]]);
    let mut index = FairAnnIndex::new(
        LshIndex::build(pts, params(4, 6, 2, 1.0, 1.0, 2.0, 57)).unwrap(),
        0.2,
    );
    let q = [0.0; DIM];
    let session = index.session(&q).unwrap();
    assert_eq!(session.total_weight(), 0.0);
    drop(session);

    // one point sharing every bucket with q: total weight t*L
    let pts = Points::from_rows(vec![vec![0.0; DIM]]);
    let mut index = FairAnnIndex::new(
        LshIndex::build(pts, params(4, 6, 2, 1.0, 1.0, 2.0, 58)).unwrap(),
        0.2,
    );
    let s1 = index.session(&q).unwrap();
    assert_eq!(s1.total_weight(), 12.0);
    let w1: Vec<f64> = (0..2)
        .flat_map(|j| (0..6).map(move |i| (j, i)))
        .map(|(j, i)| s1.bucket_weight(j, i))
        .collect();
    drop(s1);
    let s2 = index.session(&q).unwrap();
    let w2: Vec<f64> = (0..2)
        .flat_map(|j| (0..6).map(move |i| (j, i)))
        .map(|(j, i)| s2.bucket_weight(j, i))
        .collect();
    assert_eq!(w1, w2);
}

#[test]
fn exact_sample_single_point() {
    let pts = Points::from_rows(vec![vec![0.1, 0.0, 0.0, 0.0]]);
    let mut index = FairAnnIndex::new(
        LshIndex::build(pts, params(4, 8, 1, 4.0, 1.0, 2.0, 59)).unwrap(),
        0.1,
    );
    let q = [0.0; DIM];
    let mut session = index.session(&q).unwrap();
    let max = session.default_max_rounds();
    let mut rng = derive_stream(60, &[]);
    for _ in 0..50 {
        let s = session.exact_sample(&mut rng, max).unwrap();
        assert_eq!(s.point, ElementId(0));
        assert!(s.distance <= 2.0);
    }
}

// A structure seeing 3L outliers is retired: its weights drop to zero and,
// with t=1, the session reports every structure gone.
#[test]
fn structure_retirement() {
    let l = 4;
    let mut rng = derive_stream(61, &[]);
    // 3L + 10 far points that all collide with q thanks to a huge w
    let rows: Vec<Vec<f64>> = (0..3 * l + 10)
        .map(|_| at_distance(5.0, &mut rng))
        .collect();
    let pts = Points::from_rows(rows);
    let mut index = FairAnnIndex::new(
        LshIndex::build(pts, params(2, l, 1, 500.0, 0.01, 2.0, 62)).unwrap(),
        0.1,
    );
    let q = [0.0; DIM];
    let mut session = index.session(&q).unwrap();
    assert!(session.total_weight() > 0.0);
    let max = session.default_max_rounds();
    let err = session.exact_sample(&mut rng, max).unwrap_err();
    assert_eq!(err, FannError::AllStructuresRetired);
    assert!(!session.is_structure_active(0));
    assert_eq!(session.outliers_discovered(0), 3 * l);
    assert_eq!(session.total_weight(), 0.0);
}

// 10 inner + 10 annulus points: inner frequencies mutually within
// (1+O(eps)) factors; annulus points never returned by fair_query.
#[test]
fn fair_query_inner_uniformity() {
    let (pts, inner, _ring) = planted_instance(20, 63);
    let q = [0.0; DIM];
    let lsh = LshIndex::build(pts, params(4, 30, 1, 4.0, 1.0, 2.0, 64)).unwrap();
    let mut index = FairAnnIndex::new(lsh, 0.1);
    let mut session = index.session(&q).unwrap();
    let max = session.default_max_rounds();
    let mut rng = derive_stream(65, &[]);
    let mut counts = HashMap::new();
    let draws = 100 * inner.len();
    for _ in 0..draws {
        let s = session.fair_query(&mut rng, max).unwrap();
        assert!(s.distance <= 1.0);
        assert_eq!(s.mode, SampleMode::ExactNeighborhood);
        assert!(inner.contains(&s.point.0));
        *counts.entry(s.point).or_insert(0u64) += 1;
    }
    let tvd = tvd_to_uniform(&counts, &inner);
    assert!(tvd <= 0.1, "TVD {tvd} too large");
}

// N(q,r) = {p1} plus 9 annulus points: fair_query always returns p1, and
// the mean number of exact-sample loops is within 2x of the size ratio 10.
#[test]
fn fair_query_loop_count_matches_ratio() {
    let mut rng = derive_stream(66, &[]);
    let mut rows = vec![at_distance(0.5, &mut rng)];
    for _ in 0..9 {
        rows.push(at_distance(1.5, &mut rng));
    }
    let pts = Points::from_rows(rows);
    let lsh = LshIndex::build(pts, params(4, 30, 1, 4.0, 1.0, 2.0, 67)).unwrap();
    let mut index = FairAnnIndex::new(lsh, 0.1);
    let q = [0.0; DIM];
    let mut session = index.session(&q).unwrap();
    let max = session.default_max_rounds();
    let trials = 400;
    let mut loops = 0u64;
    for _ in 0..trials {
        loop {
            loops += 1;
            let s = session.exact_sample(&mut rng, max).unwrap();
            if s.distance <= 1.0 {
                assert_eq!(s.point, ElementId(0));
                break;
            }
        }
    }
    let mean = loops as f64 / trials as f64;
    assert!(mean >= 5.0 && mean <= 20.0, "mean loops {mean}");
}

// Bucket storage is shared with the index; dropping a session rolls back
// every outlier deactivation.
#[test]
fn session_restores_store_state() {
    let mut rng = derive_stream(68, &[]);
    // Few enough far points that their discoveries stay under the 3L
    // retirement threshold.
    let mut rows = vec![at_distance(0.5, &mut rng)];
    for _ in 0..2 {
        rows.push(at_distance(5.0, &mut rng));
    }
    let pts = Points::from_rows(rows);
    let lsh = LshIndex::build(pts, params(2, 6, 1, 500.0, 1.0, 2.0, 69)).unwrap();
    let mut index = FairAnnIndex::new(lsh, 0.1);
    let q = [0.0; DIM];
    let before: Vec<usize> = index
        .lsh()
        .query_buckets(&q)
        .unwrap()
        .iter()
        .map(|b| index.lsh().store().active_count(b.set))
        .collect();
    {
        let mut session = index.session(&q).unwrap();
        let max = session.default_max_rounds();
        let s = session.fair_query(&mut rng, max).unwrap();
        assert_eq!(s.point, ElementId(0));
        assert!(
            s.outliers_removed > 0,
            "construction should surface outliers"
        );
    }
    let after: Vec<usize> = index
        .lsh()
        .query_buckets(&q)
        .unwrap()
        .iter()
        .map(|b| index.lsh().store().active_count(b.set))
        .collect();
    assert_eq!(before, after);
}

#[test]
fn sessions_are_deterministic() {
    let run = |seed: u64| {
        let (pts, _, _) = planted_instance(10, 70);
        let lsh = LshIndex::build(pts, params(4, 20, 1, 4.0, 1.0, 2.0, 71)).unwrap();
        let mut index = FairAnnIndex::new(lsh, 0.1);
        let q = [0.0; DIM];
        let mut session = index.session(&q).unwrap();
        let max = session.default_max_rounds();
        let mut rng = derive_stream(seed, &[]);
        (0..32)
            .map(|_| session.fair_query(&mut rng, max).unwrap().point)
            .collect::<Vec<_>>()
    };
    assert_eq!(run(72), run(72));
}
