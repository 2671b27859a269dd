use thiserror::Error;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Error)]
#[error("all importance weights vanished")]
pub struct DegenerateWeights;

/// Exponentiates and normalizes log-weights after subtracting their maximum.
/// NaN entries count as zero weight.
pub fn normalize_log_weights(log_w: &[f64]) -> Result<Vec<f64>, DegenerateWeights> {
    let max = log_w.iter().copied().filter(|v| !v.is_nan()).fold(f64::NEG_INFINITY, f64::max);
    if !max.is_finite() {
        return Err(DegenerateWeights);
    }
    let mut w: Vec<f64> = log_w.iter().map(|&v| if v.is_nan() { 0.0 } else { (v - max).exp() }).collect();
    let sum: f64 = w.iter().sum();
    for v in &mut w {
        *v /= sum;
    }
    Ok(w)
}

/// `1 / sum W_i^2`, clamped to `[1, N]` against rounding.
pub fn effective_sample_size(weights: &[f64]) -> f64 {
    let s2: f64 = weights.iter().map(|w| w * w).sum();
    (1.0 / s2).clamp(1.0, weights.len() as f64)
}
