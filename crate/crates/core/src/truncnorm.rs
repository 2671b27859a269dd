//! Exact sampling from normal distributions truncated to an interval.
//!
//! Inverse-CDF sampling on the tail-side orientation of the interval, so both
//! CDF values stay representable with full relative precision. When the
//! interval carries less than [`MIN_INVERSE_CDF_MASS`] of the standard normal
//! mass, rejection sampling with a uniform or translated-exponential envelope
//! takes over.

use rand::Rng;
use rand_distr::{Distribution, Exp};
use statrs::function::erf::{erfc, erfc_inv};
use std::f64::consts::SQRT_2;

pub const MIN_INVERSE_CDF_MASS: f64 = 1e-10;

/// Standard normal CDF.
pub fn std_normal_cdf(x: f64) -> f64 {
    0.5 * erfc(-x / SQRT_2)
}

/// Standard normal survival function `1 - Phi(x)`.
pub fn std_normal_sf(x: f64) -> f64 {
    0.5 * erfc(x / SQRT_2)
}

fn std_normal_quantile(p: f64) -> f64 {
    -SQRT_2 * erfc_inv(2.0 * p)
}

fn std_normal_isf(q: f64) -> f64 {
    SQRT_2 * erfc_inv(2.0 * q)
}

/// Draws from `N(mu, sigma^2)` restricted to `[lo, hi]`. `hi` may be `+inf`
/// and `lo` may be `-inf`.
pub fn sample_truncated_normal<R: Rng + ?Sized>(mu: f64, sigma: f64, lo: f64, hi: f64, rng: &mut R) -> f64 {
    debug_assert!(lo < hi, "empty truncation interval [{lo}, {hi}]");
    if !(sigma > 0.0) {
        return mu.clamp(lo, hi);
    }
    let a = (lo - mu) / sigma;
    let b = (hi - mu) / sigma;
    // Work on [a, b] with a >= 0 whenever the interval misses zero.
    let (a, b, sign) = if b < 0.0 { (-b, -a, -1.0) } else { (a, b, 1.0) };
    let z = standard_truncated(a, b, rng);
    (mu + sigma * sign * z).clamp(lo, hi)
}

fn standard_truncated<R: Rng + ?Sized>(a: f64, b: f64, rng: &mut R) -> f64 {
    if a > 0.0 {
        let (qa, qb) = (std_normal_sf(a), std_normal_sf(b));
        let mass = qa - qb;
        if mass >= MIN_INVERSE_CDF_MASS {
            let u: f64 = rng.random();
            return std_normal_isf(qa - u * mass).clamp(a, b);
        }
        upper_tail_rejection(a, b, rng)
    } else {
        let (pa, pb) = (std_normal_cdf(a), std_normal_cdf(b));
        let mass = pb - pa;
        if mass >= MIN_INVERSE_CDF_MASS {
            let u: f64 = rng.random();
            return std_normal_quantile(pa + u * mass).clamp(a, b);
        }
        // A zero-containing interval this light is extremely narrow.
        loop {
            let z = a + (b - a) * rng.random::<f64>();
            if rng.random::<f64>() <= (-0.5 * z * z).exp() {
                return z;
            }
        }
    }
}

fn upper_tail_rejection<R: Rng + ?Sized>(a: f64, b: f64, rng: &mut R) -> f64 {
    if b - a < 1.0 / a {
        // density ratio against a uniform envelope peaks at z = a
        loop {
            let z = a + (b - a) * rng.random::<f64>();
            if rng.random::<f64>() <= (0.5 * (a * a - z * z)).exp() {
                return z;
            }
        }
    }
    let rate = 0.5 * (a + (a * a + 4.0).sqrt());
    let exp = Exp::new(rate).expect("positive rate");
    loop {
        let z = a + exp.sample(rng);
        if z > b {
            continue;
        }
        if rng.random::<f64>() <= (-0.5 * (z - rate) * (z - rate)).exp() {
            return z;
        }
    }
}
