//! Linear-Gaussian models and their exact Kalman filters.

#![allow(dead_code)]

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use vfm_calib::rng::StreamRng;
use vfm_calib::smc::StateSpaceModel;

/// `x_t = a x_{t-1} + N(0, q)`, `y_t = x_t + N(0, r)`, `x_0 ~ N(m0, p0)`.
#[derive(Debug, Clone, Copy)]
pub struct Scalar {
    pub a: f64,
    pub q: f64,
    pub r: f64,
    pub m0: f64,
    pub p0: f64,
}

impl Scalar {
    pub fn simulate(&self, steps: usize, seed: u64) -> Vec<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut x = self.m0 + self.p0.sqrt() * rng.sample::<f64, _>(StandardNormal);
        let mut ys = Vec::with_capacity(steps);
        for t in 0..steps {
            if t > 0 {
                x = self.a * x + self.q.sqrt() * rng.sample::<f64, _>(StandardNormal);
            }
            ys.push(x + self.r.sqrt() * rng.sample::<f64, _>(StandardNormal));
        }
        ys
    }

    /// Filtering means and variances.
    pub fn kalman(&self, ys: &[f64]) -> Vec<(f64, f64)> {
        let (mut m, mut p) = (self.m0, self.p0);
        let mut out = Vec::with_capacity(ys.len());
        for (t, &y) in ys.iter().enumerate() {
            if t > 0 {
                m *= self.a;
                p = self.a * self.a * p + self.q;
            }
            let k = p / (p + self.r);
            m += k * (y - m);
            p *= 1.0 - k;
            out.push((m, p));
        }
        out
    }
}

impl StateSpaceModel for Scalar {
    type State = f64;
    type Observation = f64;

    fn sample_initial(&self, rng: &mut StreamRng) -> f64 {
        self.m0 + self.p0.sqrt() * rng.sample::<f64, _>(StandardNormal)
    }

    fn sample_transition(&self, prev: &f64, rng: &mut StreamRng) -> f64 {
        self.a * prev + self.q.sqrt() * rng.sample::<f64, _>(StandardNormal)
    }

    fn log_likelihood(&self, x: &f64, y: &f64) -> f64 {
        -0.5 * (y - x).powi(2) / self.r
    }

    fn dimension(&self) -> usize {
        1
    }

    fn project(&self, x: &f64, out: &mut [f64]) {
        out[0] = *x;
    }
}

pub type M2 = [[f64; 2]; 2];

fn mul(a: &M2, b: &M2) -> M2 {
    let mut c = [[0.0; 2]; 2];
    for i in 0..2 {
        for j in 0..2 {
            c[i][j] = a[i][0] * b[0][j] + a[i][1] * b[1][j];
        }
    }
    c
}

fn transpose(a: &M2) -> M2 {
    [[a[0][0], a[1][0]], [a[0][1], a[1][1]]]
}

fn add(a: &M2, b: &M2) -> M2 {
    [[a[0][0] + b[0][0], a[0][1] + b[0][1]], [a[1][0] + b[1][0], a[1][1] + b[1][1]]]
}

fn inverse(a: &M2) -> M2 {
    let det = a[0][0] * a[1][1] - a[0][1] * a[1][0];
    [[a[1][1] / det, -a[0][1] / det], [-a[1][0] / det, a[0][0] / det]]
}

fn apply(a: &M2, x: &[f64; 2]) -> [f64; 2] {
    [a[0][0] * x[0] + a[0][1] * x[1], a[1][0] * x[0] + a[1][1] * x[1]]
}

/// Lower Cholesky factor of a 2x2 SPD matrix.
fn chol(a: &M2) -> M2 {
    let l00 = a[0][0].sqrt();
    let l10 = a[1][0] / l00;
    [[l00, 0.0], [l10, (a[1][1] - l10 * l10).sqrt()]]
}

/// `x_t = A x_{t-1} + N(0, Q)`, `y_t = x_t + N(0, R)` in two dimensions.
#[derive(Debug, Clone, Copy)]
pub struct Planar {
    pub a: M2,
    pub q: M2,
    pub r: M2,
    pub m0: [f64; 2],
    pub p0: M2,
}

fn gaussian(rng: &mut impl Rng, mean: &[f64; 2], cov: &M2) -> [f64; 2] {
    let l = chol(cov);
    let z = [rng.sample::<f64, _>(StandardNormal), rng.sample::<f64, _>(StandardNormal)];
    let e = apply(&l, &z);
    [mean[0] + e[0], mean[1] + e[1]]
}

impl Planar {
    pub fn simulate(&self, steps: usize, seed: u64) -> Vec<[f64; 2]> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut x = gaussian(&mut rng, &self.m0, &self.p0);
        let mut ys = Vec::with_capacity(steps);
        for t in 0..steps {
            if t > 0 {
                x = gaussian(&mut rng, &apply(&self.a, &x), &self.q);
            }
            ys.push(gaussian(&mut rng, &x, &self.r));
        }
        ys
    }

    pub fn kalman(&self, ys: &[[f64; 2]]) -> Vec<([f64; 2], M2)> {
        let (mut m, mut p) = (self.m0, self.p0);
        let mut out = Vec::with_capacity(ys.len());
        for (t, y) in ys.iter().enumerate() {
            if t > 0 {
                m = apply(&self.a, &m);
                p = add(&mul(&mul(&self.a, &p), &transpose(&self.a)), &self.q);
            }
            let k = mul(&p, &inverse(&add(&p, &self.r)));
            let innov = [y[0] - m[0], y[1] - m[1]];
            let dm = apply(&k, &innov);
            m = [m[0] + dm[0], m[1] + dm[1]];
            let i_k = [[1.0 - k[0][0], -k[0][1]], [-k[1][0], 1.0 - k[1][1]]];
            p = mul(&i_k, &p);
            out.push((m, p));
        }
        out
    }
}

impl StateSpaceModel for Planar {
    type State = [f64; 2];
    type Observation = [f64; 2];

    fn sample_initial(&self, rng: &mut StreamRng) -> [f64; 2] {
        gaussian(rng, &self.m0, &self.p0)
    }

    fn sample_transition(&self, prev: &[f64; 2], rng: &mut StreamRng) -> [f64; 2] {
        gaussian(rng, &apply(&self.a, prev), &self.q)
    }

    fn log_likelihood(&self, x: &[f64; 2], y: &[f64; 2]) -> f64 {
        let d = [y[0] - x[0], y[1] - x[1]];
        let ri = inverse(&self.r);
        let s = apply(&ri, &d);
        -0.5 * (d[0] * s[0] + d[1] * s[1])
    }

    fn dimension(&self) -> usize {
        2
    }

    fn project(&self, x: &[f64; 2], out: &mut [f64]) {
        out.copy_from_slice(x);
    }
}

/// Weighted mean and variance of one coordinate.
pub fn weighted_moments(values: impl Iterator<Item = f64> + Clone, weights: &[f64]) -> (f64, f64) {
    let mean: f64 = values.clone().zip(weights).map(|(v, w)| v * w).sum();
    let var: f64 = values.zip(weights).map(|(v, w)| w * (v - mean).powi(2)).sum();
    (mean, var)
}

/// Standardized mean errors and the worst relative variance error of a
/// particle filter against the exact filter, over coordinates and steps. The
/// Monte Carlo standard error of the mean is taken as `sqrt(var / ESS)`.
#[derive(Debug, Clone, Copy, Default)]
pub struct OracleFit {
    pub max_mean_z: f64,
    pub sum_sq_z: f64,
    pub count: usize,
    pub max_var_rel: f64,
}

impl OracleFit {
    pub fn update(&mut self, pf_mean: f64, pf_var: f64, ess: f64, exact_mean: f64, exact_var: f64) {
        let z = (pf_mean - exact_mean).abs() / (exact_var / ess).sqrt();
        self.max_mean_z = self.max_mean_z.max(z);
        self.sum_sq_z += z * z;
        self.count += 1;
        self.max_var_rel = self.max_var_rel.max((pf_var / exact_var - 1.0).abs());
    }

    pub fn rms_z(&self) -> f64 {
        (self.sum_sq_z / self.count as f64).sqrt()
    }

    /// Holds for an unbiased filter. Its true Monte Carlo error exceeds the
    /// ESS-based one by a modest factor on average and by more at outlying
    /// observations, so single-step maxima are not checked.
    pub fn consistent(&self) -> bool {
        self.rms_z() < 1.6 && self.max_var_rel < 0.10
    }
}

pub mod choke_cases {
    use rand::Rng;
    use vfm_calib::choke::{Composition, FluidProperties, WellFeatures};

    pub struct OracleCase {
        pub x: WellFeatures,
        pub phi: Composition,
        pub props: FluidProperties,
        pub flow: f64,
    }

    /// Cases evaluated in high precision by an independent implementation.
    pub fn oracle_cases() -> Vec<OracleCase> {
        let path = concat!(env!("CARGO_MANIFEST_DIR"), "/tests/fixtures/choke_oracle.csv");
        let mut reader = csv::Reader::from_path(path).unwrap();
        reader
            .records()
            .map(|rec| {
                let rec = rec.unwrap();
                let f = |k: usize| -> f64 { rec[k].parse().unwrap() };
                OracleCase {
                    x: WellFeatures { u: f(0), p1: f(1), p2: f(2), temperature: f(3) },
                    phi: Composition { gas: f(4), oil: f(5), water: f(6) },
                    props: FluidProperties {
                        rho_oil: f(7),
                        rho_water: f(8),
                        kappa: f(9),
                        z: f(10),
                        molar_mass: f(11),
                        gas_constant: f(12),
                        critical_ratio: f(13),
                        discharge_coefficient: f(14),
                        max_area: f(15),
                        ..FluidProperties::default()
                    },
                    flow: f(16),
                }
            })
            .collect()
    }

    /// A valid input drawn over wide physical ranges; one in ten draws puts
    /// all mass in a single phase.
    pub fn random_input(rng: &mut impl Rng) -> (WellFeatures, Composition, FluidProperties) {
        let p1 = rng.random_range(1e5..2e7);
        let x = WellFeatures {
            u: rng.random_range(0.0..=1.0),
            p1,
            p2: p1 * rng.random_range(0.01..=1.0),
            temperature: rng.random_range(250.0..450.0),
        };
        let phi = if rng.random_bool(0.1) {
            match rng.random_range(0..3) {
                0 => Composition { gas: 1.0, oil: 0.0, water: 0.0 },
                1 => Composition { gas: 0.0, oil: 1.0, water: 0.0 },
                _ => Composition { gas: 0.0, oil: 0.0, water: 1.0 },
            }
        } else {
            let gas: f64 = rng.random();
            let oil = (1.0 - gas) * rng.random::<f64>();
            Composition { gas, oil, water: 1.0 - gas - oil }
        };
        let props = FluidProperties {
            rho_oil: rng.random_range(600.0..1000.0),
            rho_water: rng.random_range(990.0..1100.0),
            kappa: rng.random_range(1.05..1.7),
            z: rng.random_range(0.7..1.1),
            critical_ratio: rng.random_range(0.3..0.9),
            ..FluidProperties::default()
        };
        (x, phi, props)
    }
}

pub mod ks {
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use statrs::distribution::{ContinuousCDF, Normal};
    use vfm_calib::truncnorm::sample_truncated_normal;

    /// CDF of `N(mu, sigma^2)` truncated to `[lo, hi]`, evaluated through the
    /// survival function when the interval lies above the mean so that far
    /// tails keep their precision.
    pub fn truncated_normal_cdf(x: f64, mu: f64, sigma: f64, lo: f64, hi: f64) -> f64 {
        let n = Normal::new(0.0, 1.0).unwrap();
        let (a, b, z) = ((lo - mu) / sigma, (hi - mu) / sigma, (x.clamp(lo, hi) - mu) / sigma);
        if a > 0.0 {
            (n.sf(a) - n.sf(z)) / (n.sf(a) - n.sf(b))
        } else {
            (n.cdf(z) - n.cdf(a)) / (n.cdf(b) - n.cdf(a))
        }
    }

    /// Kolmogorov-Smirnov distance between a sample and a continuous CDF.
    pub fn ks_statistic(mut sample: Vec<f64>, cdf: impl Fn(f64) -> f64) -> f64 {
        sample.sort_by(f64::total_cmp);
        let n = sample.len() as f64;
        sample
            .iter()
            .enumerate()
            .map(|(i, &x)| {
                let f = cdf(x);
                (f - i as f64 / n).max((i + 1) as f64 / n - f)
            })
            .fold(0.0, f64::max)
    }

    /// Asymptotic one-sample critical value at significance 0.001.
    pub fn ks_critical_001(n: usize) -> f64 {
        1.9495 / (n as f64).sqrt()
    }

    /// Standardized truncation intervals covering the inverse-CDF and the
    /// rejection paths on both sides of the mean.
    const INTERVALS: [(f64, f64); 9] = [
        (-1.0, 1.0),
        (0.0, f64::INFINITY),
        (f64::NEG_INFINITY, 0.5),
        (2.0, 3.0),
        (5.0, 5.5),
        (8.0, f64::INFINITY),
        (-9.0, -7.0),
        (-0.05, 0.05),
        (0.5, 30.0),
    ];

    #[derive(Debug)]
    pub struct Failure {
        pub mu: f64,
        pub sigma: f64,
        pub lo: f64,
        pub hi: f64,
        pub d: f64,
        pub critical: f64,
    }

    /// KS test of the sampler on every grid cell; returns the cells that fail.
    pub fn run_grid(n: usize, seed: u64) -> Vec<Failure> {
        let mut failures = Vec::new();
        let mut cell = 0;
        for &(mu, sigma) in &[(0.0, 1.0), (0.7, 0.05), (-2.0, 3.0)] {
            for &(a, b) in &INTERVALS {
                let (lo, hi) = (mu + sigma * a, mu + sigma * b);
                let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_add(cell));
                cell += 1;
                let draws: Vec<f64> = (0..n).map(|_| sample_truncated_normal(mu, sigma, lo, hi, &mut rng)).collect();
                let d = ks_statistic(draws, |x| truncated_normal_cdf(x, mu, sigma, lo, hi));
                let critical = ks_critical_001(n);
                if d > critical {
                    failures.push(Failure { mu, sigma, lo, hi, d, critical });
                }
            }
        }
        failures
    }

    pub const GRID_CELLS: usize = 27;
}
