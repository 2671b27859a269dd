use rand::Rng;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ResamplingScheme {
    #[default]
    Systematic,
    Multinomial,
    Stratified,
}

/// Draws `N` ancestor indices from normalized weights.
pub fn resample<R: Rng + ?Sized>(weights: &[f64], scheme: ResamplingScheme, rng: &mut R) -> Vec<usize> {
    let n = weights.len();
    match scheme {
        ResamplingScheme::Systematic => {
            let u: f64 = rng.random();
            inverse_cdf(weights, (0..n).map(|i| (i as f64 + u) / n as f64))
        }
        ResamplingScheme::Stratified => {
            let points: Vec<f64> = (0..n).map(|i| (i as f64 + rng.random::<f64>()) / n as f64).collect();
            inverse_cdf(weights, points.into_iter())
        }
        ResamplingScheme::Multinomial => {
            let mut points: Vec<f64> = (0..n).map(|_| rng.random::<f64>()).collect();
            points.sort_unstable_by(f64::total_cmp);
            inverse_cdf(weights, points.into_iter())
        }
    }
}

/// Maps ascending points of `[0, 1)` through the inverse weight CDF.
fn inverse_cdf(weights: &[f64], points: impl Iterator<Item = f64>) -> Vec<usize> {
    // never step past the last index carrying weight, whatever the rounding
    let last = weights.iter().rposition(|&w| w > 0.0).unwrap_or(weights.len() - 1);
    let mut out = Vec::with_capacity(weights.len());
    let mut j = 0;
    let mut cum = weights[0];
    for p in points {
        while p >= cum && j < last {
            j += 1;
            cum += weights[j];
        }
        out.push(j);
    }
    out
}

/// Number of times each index appears.
pub fn offspring_counts(ancestors: &[usize], n: usize) -> Vec<usize> {
    let mut counts = vec![0; n];
    for &a in ancestors {
        counts[a] += 1;
    }
    counts
}
