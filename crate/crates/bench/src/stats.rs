//! Total variation distance against the uniform distribution.

/// `0.5 * sum_x |empirical(x) - 1/|X||` where `counts[x]` is the empirical
/// histogram over the support X. Returns `None` on an empty support or an
/// all-zero histogram.
pub fn tvd_to_uniform(counts: &[u64]) -> Option<f64> {
    if counts.is_empty() {
        return None;
    }
    let total: u64 = counts.iter().sum();
    if total == 0 {
        return None;
    }
    let u = 1.0 / counts.len() as f64;
    Some(
        0.5 * counts
            .iter()
            .map(|&c| (c as f64 / total as f64 - u).abs())
            .sum::<f64>(),
    )
}
