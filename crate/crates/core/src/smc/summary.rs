use rayon::prelude::*;
use serde::{Deserialize, Serialize};

/// Weighted mean and percentile band of one scalar coordinate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Marginal {
    pub mean: f64,
    pub p5: f64,
    pub p25: f64,
    pub p75: f64,
    pub p95: f64,
}

impl Marginal {
    pub fn point(v: f64) -> Self {
        Self { mean: v, p5: v, p25: v, p75: v, p95: v }
    }
}

/// Marginal posterior summaries at one step.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PosteriorSummary {
    pub t: usize,
    pub marginals: Vec<Marginal>,
    pub ess: f64,
    pub rel_ess: f64,
}

pub const PERCENTILES: [f64; 4] = [0.05, 0.25, 0.75, 0.95];

/// Smallest value whose cumulative weight reaches each requested level.
/// `pairs` is sorted in place by value.
pub fn weighted_percentiles<const K: usize>(pairs: &mut [(f64, f64)], levels: [f64; K]) -> [f64; K] {
    pairs.sort_unstable_by(|a, b| a.0.total_cmp(&b.0));
    let mut out = [f64::NAN; K];
    let mut cum = 0.0;
    let mut k = 0;
    for &(v, w) in pairs.iter() {
        cum += w;
        while k < K && cum >= levels[k] {
            out[k] = v;
            k += 1;
        }
        if k == K {
            break;
        }
    }
    // rounding can leave the total a hair below the top level
    let top = pairs.iter().rev().find(|p| p.1 > 0.0).map_or(f64::NAN, |p| p.0);
    for o in out.iter_mut().skip(k) {
        *o = top;
    }
    out
}

fn marginal(values: &[f64], dims: usize, coord: usize, weights: &[f64]) -> Marginal {
    let mut mean = 0.0;
    let mut pairs: Vec<(f64, f64)> = Vec::with_capacity(weights.len());
    for (i, &w) in weights.iter().enumerate() {
        let v = values[i * dims + coord];
        mean += w * v;
        pairs.push((v, w));
    }
    let [p5, p25, p75, p95] = weighted_percentiles(&mut pairs, PERCENTILES);
    Marginal { mean, p5, p25, p75, p95 }
}

/// Per-coordinate summaries of `N` particles projected to `dims` scalars each,
/// stored row-major in `values`.
pub fn summarize_projected(values: &[f64], dims: usize, weights: &[f64], parallel: bool) -> Vec<Marginal> {
    debug_assert_eq!(values.len(), dims * weights.len());
    if parallel {
        (0..dims).into_par_iter().map(|c| marginal(values, dims, c, weights)).collect()
    } else {
        (0..dims).map(|c| marginal(values, dims, c, weights)).collect()
    }
}
