//! Subset-size estimation through a membership oracle.
//!
//! Sequential (inverse-binomial) scheme: probe uniform positions with
//! replacement, counting oracle hits, until the hit count reaches
//! `ceil(3 * eps^-2 * ln(2/delta))`; the estimate is then
//! `hits * n / probes`. Expected probe count is
//! O((n/|B|) * eps^-2 * log(1/delta)).

use rand::Rng;

/// Outcome of a size estimation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SizeEstimate {
    /// `hits * n / probes`, or 0 when no hit was seen within the probe cap.
    pub estimate: f64,
    pub probes: u64,
    pub hits: u64,
    /// Set when the probe cap was exhausted with zero hits (the target set
    /// is empty or vanishingly small).
    pub is_empty: bool,
    /// Set when the caller's `delta` violated `delta < 1/log2(n)` and was
    /// clamped to `1/(2 log2 n)`.
    pub delta_clamped: bool,
}

/// Estimates `|B|` for an implicit subset `B` of `{0..n-1}` given a
/// membership oracle over positions.
///
/// With probability at least `1 - delta` the estimate lies within a
/// `(1 +- eps)` factor of `|B|`. Probing stops at a hard cap of
/// `64 * n * eps^-2 * ln(2/delta)` probes; on exhaustion with zero hits the
/// estimate is 0 and `is_empty` is set.
pub fn estimate_subset_size<R, O>(
    universe_size: usize,
    mut membership_oracle: O,
    eps: f64,
    delta: f64,
    rng: &mut R,
) -> SizeEstimate
where
    R: Rng + ?Sized,
    O: FnMut(usize) -> bool,
{
    assert!(universe_size > 0, "universe must be non-empty");
    assert!(eps > 0.0 && eps < 1.0, "eps must lie in (0,1)");
    assert!(delta > 0.0 && delta < 1.0, "delta must lie in (0,1)");

    let n = universe_size as f64;
    let delta_bound = 1.0 / n.log2().max(1.0);
    let (delta, delta_clamped) = if delta >= delta_bound {
        (delta_bound / 2.0, true)
    } else {
        (delta, false)
    };

    let target_hits = (3.0 * eps.powi(-2) * (2.0 / delta).ln()).ceil() as u64;
    let probe_cap = (64.0 * n * eps.powi(-2) * (2.0 / delta).ln()).ceil() as u64;

    let mut hits = 0u64;
    let mut probes = 0u64;
    while probes < probe_cap {
        probes += 1;
        if membership_oracle(rng.gen_range(0..universe_size)) {
            hits += 1;
            if hits == target_hits {
                break;
            }
        }
    }

    if hits == 0 {
        return SizeEstimate {
            estimate: 0.0,
            probes,
            hits,
            is_empty: true,
            delta_clamped,
        };
    }
    SizeEstimate {
        estimate: hits as f64 * n / probes as f64,
        probes,
        hits,
        is_empty: false,
        delta_clamped,
    }
}
