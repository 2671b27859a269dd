//! Synthetic datasets: the constructed three-well case and the two ten-well
//! benchmarks derived from a frozen reference table of well tests.
//!
//! Features follow bounded random walks with occasional one-step shut-ins.
//! A well scheduled for a test at step `t` is taken off the production
//! separator at `t - 1` and produces alone at `t`. Observations are the exact
//! sum of the producing wells' flow meter rates plus, optionally, noise drawn
//! from the filter's own noise model.

use std::collections::BTreeMap;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::choke::{FluidProperties, WellFeatures};
use crate::dataset::{Dataset, FeatureRecord};
use crate::error::{Error, Result};
use crate::state_space::{
    predicted_well_rates, NoiseConfig, Observation, ObservationKind, SeparatorVariance, WellParameters,
};

const REFERENCE_CSV: &str = include_str!("../data/reference_welltests.csv");

/// Number of steps in the ten-well benchmark horizon.
pub const BENCHMARK_STEPS: usize = 840;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WalkSpec {
    pub start: f64,
    pub lo: f64,
    pub hi: f64,
    pub step_sd: f64,
}

impl WalkSpec {
    pub fn constant(v: f64) -> Self {
        Self { start: v, lo: v, hi: v, step_sd: 0.0 }
    }

    fn next<R: Rng + ?Sized>(&self, prev: f64, rng: &mut R) -> f64 {
        let z: f64 = rng.sample(StandardNormal);
        (prev + self.step_sd * z).clamp(self.lo, self.hi)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FeatureSpec {
    pub u: WalkSpec,
    pub p1: WalkSpec,
    pub p2: WalkSpec,
    pub temperature: WalkSpec,
    /// Chance per step that the well is shut in (closed choke).
    pub shut_in_probability: f64,
}

impl FeatureSpec {
    fn validate(&self) -> Result<()> {
        for (name, w) in [("u", self.u), ("p1", self.p1), ("p2", self.p2), ("temperature", self.temperature)] {
            if !(w.lo <= w.start && w.start <= w.hi && w.step_sd >= 0.0) {
                return Err(Error::Config(format!("bad random walk for {name}: {w:?}")));
            }
        }
        if self.u.lo < 0.0 || self.u.hi > 1.0 {
            return Err(Error::Config("choke opening walk must stay in [0, 1]".into()));
        }
        if self.p1.lo <= 0.0 || self.p2.lo <= 0.0 || self.temperature.lo <= 0.0 {
            return Err(Error::Config("pressures and temperature must stay positive".into()));
        }
        if !(0.0..=1.0).contains(&self.shut_in_probability) {
            return Err(Error::Config("shut-in probability outside [0, 1]".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Interpolation {
    /// Hold each knot's value until the next knot.
    #[default]
    Step,
    Linear,
}

/// Parameter trajectory of one well defined by knots. Values before the first
/// knot and after the last are held constant.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    pub interpolation: Interpolation,
    /// `(t, parameters)`, strictly increasing in `t`.
    pub knots: Vec<(usize, WellParameters)>,
}

impl Trajectory {
    pub fn constant(p: WellParameters) -> Self {
        Self { interpolation: Interpolation::Step, knots: vec![(0, p)] }
    }

    pub fn at(&self, t: usize) -> WellParameters {
        let k = self.knots.partition_point(|(tk, _)| *tk <= t);
        if k == 0 {
            return self.knots[0].1;
        }
        let (t0, p0) = self.knots[k - 1];
        if k == self.knots.len() || self.interpolation == Interpolation::Step {
            return p0;
        }
        let (t1, p1) = self.knots[k];
        let s = (t - t0) as f64 / (t1 - t0) as f64;
        let lerp = |a: f64, b: f64| if s == 0.0 { a } else { a + s * (b - a) };
        WellParameters {
            beta: lerp(p0.beta, p1.beta),
            gamma: lerp(p0.gamma, p1.gamma),
            lambda: lerp(p0.lambda, p1.lambda),
        }
    }

    fn validate(&self) -> Result<()> {
        if self.knots.is_empty() {
            return Err(Error::Config("trajectory without knots".into()));
        }
        if self.knots.windows(2).any(|w| w[0].0 >= w[1].0) {
            return Err(Error::Config("trajectory knots must be strictly increasing".into()));
        }
        for (_, p) in &self.knots {
            p.validate()?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GenerationNoise {
    pub enabled: bool,
    /// Include the per-well terms in addition to the separator term.
    pub well_terms: bool,
    pub config: NoiseConfig,
}

impl GenerationNoise {
    pub fn disabled() -> Self {
        Self { enabled: false, well_terms: false, config: NoiseConfig::default() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioSpec {
    pub wells: usize,
    pub steps: usize,
    pub truth: Vec<Trajectory>,
    /// `(t, well)` pairs, at most one test per step.
    pub welltest_schedule: Vec<(usize, usize)>,
    pub features: Vec<FeatureSpec>,
    pub noise: GenerationNoise,
    pub fluid: FluidProperties,
    pub seed: u64,
}

impl ScenarioSpec {
    pub fn validate(&self) -> Result<()> {
        if self.wells == 0 || self.steps == 0 {
            return Err(Error::Config("scenario needs at least one well and one step".into()));
        }
        if self.truth.len() != self.wells || self.features.len() != self.wells {
            return Err(Error::Config("truth and feature specs must cover every well".into()));
        }
        for tr in &self.truth {
            tr.validate()?;
        }
        for f in &self.features {
            f.validate()?;
            if f.p2.hi > f.p1.lo {
                log::debug!("overlapping pressure ranges; downstream pressure will be clamped");
            }
        }
        let mut seen = std::collections::BTreeSet::new();
        for &(t, j) in &self.welltest_schedule {
            if t >= self.steps || j >= self.wells {
                return Err(Error::Config(format!("well test ({t}, {j}) outside the scenario")));
            }
            if !seen.insert(t) {
                return Err(Error::Config(format!("two well tests scheduled at step {t}")));
            }
        }
        self.noise.config.validate()?;
        self.fluid.validate()
    }

    pub fn truth_at(&self, t: usize) -> Vec<WellParameters> {
        self.truth.iter().map(|tr| tr.at(t)).collect()
    }
}

/// Feature trajectories, shut-ins and test-separator moves for a scenario.
pub fn generate_features<R: Rng + ?Sized>(spec: &ScenarioSpec, rng: &mut R) -> Vec<Vec<FeatureRecord>> {
    let (m, n) = (spec.wells, spec.steps);
    let mut state: Vec<[f64; 4]> =
        spec.features.iter().map(|f| [f.u.start, f.p1.start, f.p2.start, f.temperature.start]).collect();
    let mut rows = Vec::with_capacity(n);
    for t in 0..n {
        let mut row = Vec::with_capacity(m);
        for (j, f) in spec.features.iter().enumerate() {
            let s = &mut state[j];
            if t > 0 {
                s[0] = f.u.next(s[0], rng);
                s[1] = f.p1.next(s[1], rng);
                s[2] = f.p2.next(s[2], rng);
                s[3] = f.temperature.next(s[3], rng);
            }
            let shut = rng.random::<f64>() < f.shut_in_probability;
            let x = WellFeatures { u: s[0], p1: s[1], p2: s[2].min(s[1]), temperature: s[3] };
            row.push((x, shut));
        }
        rows.push(row);
    }

    let tests: BTreeMap<usize, usize> = spec.welltest_schedule.iter().copied().collect();
    let mut out: Vec<Vec<FeatureRecord>> = rows
        .iter()
        .map(|row| {
            row.iter()
                .map(|&(x, shut)| {
                    if shut {
                        FeatureRecord { x: WellFeatures { u: 0.0, ..x }, active: false }
                    } else {
                        FeatureRecord { x, active: true }
                    }
                })
                .collect()
        })
        .collect();

    for t in 0..n {
        if let Some(&j) = tests.get(&t) {
            for (k, rec) in out[t].iter_mut().enumerate() {
                rec.active = k == j;
            }
            out[t][j].x = rows[t][j].0;
            continue;
        }
        // the well about to be tested is on the test separator already
        let leaving = tests.get(&(t + 1)).copied();
        if let Some(j) = leaving {
            out[t][j].active = false;
        }
        let count = out[t].iter().filter(|r| r.active).count();
        if count == 1 {
            // a production step with one producer would look like a well test
            for k in 0..m {
                if !out[t][k].active && Some(k) != leaving {
                    out[t][k] = FeatureRecord { x: rows[t][k].0, active: true };
                }
            }
            if out[t].iter().filter(|r| r.active).count() == 1 {
                out[t].iter_mut().for_each(|r| r.active = false);
            }
        }
    }
    out
}

fn observe<R: Rng + ?Sized>(
    t: usize,
    row: &[FeatureRecord],
    truth: &[WellParameters],
    kind: ObservationKind,
    noise: &GenerationNoise,
    fluid: &FluidProperties,
    rng: &mut R,
) -> Result<Observation> {
    let active: Vec<usize> = (0..row.len()).filter(|&j| row[j].active).collect();
    let mut y = [0.0; 3];
    let mut well_noise = [0.0; 3];
    for &j in &active {
        let rates = predicted_well_rates(&truth[j], &row[j].x, fluid).map_err(|e| e.for_well(j))?;
        for k in 0..3 {
            y[k] += rates[k];
        }
        if noise.enabled && noise.well_terms {
            let phi = truth[j].composition().as_array();
            let common: f64 = rng.sample(StandardNormal);
            for k in 0..3 {
                let z: f64 = rng.sample(StandardNormal);
                well_noise[k] += noise.config.sigma_well * z + noise.config.sigma_vfm * truth[j].beta * phi[k] * common;
            }
        }
    }
    if noise.enabled {
        let c = &noise.config;
        for k in 0..3 {
            let var = match c.separator_variance {
                SeparatorVariance::Proportional => c.sigma_separator.powi(2) * y[k],
                SeparatorVariance::Squared => (c.sigma_separator * y[k]).powi(2),
            };
            let z: f64 = rng.sample(StandardNormal);
            y[k] = (y[k] + well_noise[k] + var.sqrt() * z).max(0.0);
        }
    }
    Ok(Observation { t, y, kind, active })
}

/// Features, truth and observations for a scenario.
pub fn generate_dataset(spec: &ScenarioSpec) -> Result<Dataset> {
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let features = generate_features(spec, &mut rng);
    let tests: BTreeMap<usize, usize> = spec.welltest_schedule.iter().copied().collect();
    let truth: Vec<Vec<WellParameters>> = (0..spec.steps).map(|t| spec.truth_at(t)).collect();
    let mut observations = Vec::with_capacity(spec.steps);
    for t in 0..spec.steps {
        let kind = if tests.contains_key(&t) { ObservationKind::WellTest } else { ObservationKind::Production };
        observations.push(observe(t, &features[t], &truth[t], kind, &spec.noise, &spec.fluid, &mut rng)?);
    }
    let ds = Dataset { wells: spec.wells, features, observations, truth: Some(truth) };
    ds.validate()?;
    Ok(ds)
}

/// Scenario families shipped with the crate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ScenarioKind {
    Constructed,
    Copy,
    Random,
}

impl ScenarioSpec {
    pub fn for_kind(kind: ScenarioKind, seed: u64) -> Result<Self> {
        match kind {
            ScenarioKind::Constructed => Ok(Self::constructed(seed)),
            ScenarioKind::Copy => Self::synthetic_copy(&ReferenceWellTests::frozen(), seed),
            ScenarioKind::Random => Self::synthetic_random(&ReferenceWellTests::frozen(), seed),
        }
    }

    /// Three wells over 50 steps. All parameters are constant except the oil
    /// factor of the second well, which drops at step 10. The first well is
    /// taken off production at step 24 and tested alone at step 25. Only the
    /// separator is noisy.
    pub fn constructed(seed: u64) -> Self {
        let params = |beta, gamma, lambda| WellParameters { beta, gamma, lambda };
        let truth = vec![
            Trajectory::constant(params(1.0, 0.12, 0.85)),
            Trajectory {
                interpolation: Interpolation::Step,
                knots: vec![(0, params(1.0, 0.12, 0.85)), (CONSTRUCTED_JUMP_STEP, params(1.0, 0.12, 0.70))],
            },
            Trajectory::constant(params(1.0, 0.20, 0.80)),
        ];
        let steady = |u: f64| FeatureSpec {
            u: WalkSpec::constant(u),
            p1: WalkSpec::constant(50e5),
            p2: WalkSpec::constant(25e5),
            temperature: WalkSpec::constant(340.0),
            shut_in_probability: 0.0,
        };
        let varying = |u: f64| FeatureSpec {
            u: WalkSpec { start: u, lo: 0.1, hi: 1.0, step_sd: 0.01 },
            p1: WalkSpec { start: 50e5, lo: 40e5, hi: 60e5, step_sd: 0.3e5 },
            p2: WalkSpec { start: 25e5, lo: 20e5, hi: 30e5, step_sd: 0.2e5 },
            temperature: WalkSpec { start: 340.0, lo: 330.0, hi: 350.0, step_sd: 0.5 },
            shut_in_probability: 0.0,
        };
        Self {
            wells: 3,
            steps: 50,
            truth,
            welltest_schedule: vec![(CONSTRUCTED_TEST_STEP, 0)],
            features: vec![steady(0.8), steady(0.3), varying(0.12)],
            noise: GenerationNoise { enabled: true, well_terms: false, config: NoiseConfig::default() },
            fluid: FluidProperties::default(),
            seed,
        }
    }

    /// Ten wells whose compositions interpolate the reference well tests
    /// linearly, with unit tuning factors.
    pub fn synthetic_copy(reference: &ReferenceWellTests, seed: u64) -> Result<Self> {
        let truth = (0..reference.wells())
            .map(|j| {
                let nodes = reference.nodes(j);
                if nodes.len() < 2 {
                    return Err(Error::Config(format!("well {j} has fewer than two reference tests")));
                }
                Ok(linear_trajectory(nodes.iter().map(|n| (n.t, n.gamma, n.lambda))))
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self::benchmark(reference, truth, seed))
    }

    /// Like [`synthetic_copy`](Self::synthetic_copy), but each well starts
    /// from a uniform random composition and moves by a shuffled copy of its
    /// reference increments, clamped to `[0, 1]`.
    pub fn synthetic_random(reference: &ReferenceWellTests, seed: u64) -> Result<Self> {
        // composition draws use their own stream so feature noise is shared
        // with the copy case for the same seed
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5eed_c0de_0000_0001);
        let truth = (0..reference.wells())
            .map(|j| {
                let nodes = reference.nodes(j);
                if nodes.len() < 2 {
                    return Err(Error::Config(format!("well {j} has fewer than two reference tests")));
                }
                let gammas: Vec<f64> = nodes.iter().map(|n| n.gamma).collect();
                let lambdas: Vec<f64> = nodes.iter().map(|n| n.lambda).collect();
                let g = shuffled_path(&gammas, &mut rng).0;
                let l = shuffled_path(&lambdas, &mut rng).0;
                Ok(linear_trajectory(nodes.iter().zip(g.iter().zip(&l)).map(|(n, (&g, &l))| (n.t, g, l))))
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self::benchmark(reference, truth, seed))
    }

    fn benchmark(reference: &ReferenceWellTests, truth: Vec<Trajectory>, seed: u64) -> Self {
        let m = reference.wells();
        let features = (0..m)
            .map(|j| {
                let u = 0.35 + 0.4 * (j as f64 / (m.max(2) - 1) as f64);
                FeatureSpec {
                    u: WalkSpec { start: u, lo: 0.1, hi: 1.0, step_sd: 0.01 },
                    p1: WalkSpec { start: 50e5 + 1e5 * j as f64, lo: 40e5, hi: 70e5, step_sd: 0.3e5 },
                    p2: WalkSpec { start: 25e5, lo: 18e5, hi: 32e5, step_sd: 0.2e5 },
                    temperature: WalkSpec { start: 340.0, lo: 325.0, hi: 355.0, step_sd: 0.5 },
                    shut_in_probability: BENCHMARK_SHUT_IN.get(j).copied().unwrap_or(0.02),
                }
            })
            .collect();
        Self {
            wells: m,
            steps: reference.horizon,
            truth,
            welltest_schedule: reference.tests.iter().map(|r| (r.t, r.well)).collect(),
            features,
            noise: GenerationNoise { enabled: true, well_terms: true, config: NoiseConfig::default() },
            fluid: FluidProperties::default(),
            seed,
        }
    }
}

pub const CONSTRUCTED_JUMP_STEP: usize = 10;
pub const CONSTRUCTED_TEST_STEP: usize = 25;

/// Per-well shut-in probabilities of the ten-well benchmark, matching the
/// share of production steps each field well missed.
const BENCHMARK_SHUT_IN: [f64; 10] = [0.04, 0.0, 0.01, 0.01, 0.02, 0.01, 0.13, 0.0, 0.24, 0.18];

fn linear_trajectory(nodes: impl Iterator<Item = (usize, f64, f64)>) -> Trajectory {
    Trajectory {
        interpolation: Interpolation::Linear,
        knots: nodes.map(|(t, gamma, lambda)| (t, WellParameters { beta: 1.0, gamma, lambda })).collect(),
    }
}

/// Random start in `[0, 1]` followed by a permutation of the increments of
/// `reference`, accumulated with clamping. Returns the path and the permuted
/// increments.
pub fn shuffled_path<R: Rng + ?Sized>(reference: &[f64], rng: &mut R) -> (Vec<f64>, Vec<f64>) {
    let mut increments: Vec<f64> = reference.windows(2).map(|w| w[1] - w[0]).collect();
    increments.shuffle(rng);
    let mut v: f64 = rng.random();
    let mut path = Vec::with_capacity(reference.len());
    path.push(v);
    for d in &increments {
        v = (v + d).clamp(0.0, 1.0);
        path.push(v);
    }
    (path, increments)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ReferenceTest {
    pub t: usize,
    pub well: usize,
    pub gamma: f64,
    pub lambda: f64,
}

/// Schedule and composition values of well tests that the ten-well
/// benchmarks are built around.
#[derive(Debug, Clone, PartialEq)]
pub struct ReferenceWellTests {
    pub horizon: usize,
    pub tests: Vec<ReferenceTest>,
}

impl ReferenceWellTests {
    /// The table committed with the crate.
    pub fn frozen() -> Self {
        Self::parse(REFERENCE_CSV, BENCHMARK_STEPS).expect("bundled reference table is valid")
    }

    pub fn parse(csv_text: &str, horizon: usize) -> Result<Self> {
        let mut reader = csv::Reader::from_reader(csv_text.as_bytes());
        let mut tests = Vec::new();
        for rec in reader.records() {
            let rec = rec?;
            let field = |k: usize| -> Result<&str> {
                rec.get(k).ok_or_else(|| Error::Config(format!("reference row {rec:?} is short")))
            };
            let parse_f = |k: usize| -> Result<f64> {
                field(k)?.trim().parse().map_err(|e| Error::Config(format!("reference table: {e}")))
            };
            let parse_u = |k: usize| -> Result<usize> {
                field(k)?.trim().parse().map_err(|e| Error::Config(format!("reference table: {e}")))
            };
            tests.push(ReferenceTest { t: parse_u(0)?, well: parse_u(1)?, gamma: parse_f(2)?, lambda: parse_f(3)? });
        }
        tests.sort_by_key(|r| r.t);
        if tests.iter().any(|r| r.t >= horizon) {
            return Err(Error::Config("reference test beyond the horizon".into()));
        }
        Ok(Self { horizon, tests })
    }

    pub fn wells(&self) -> usize {
        self.tests.iter().map(|r| r.well + 1).max().unwrap_or(0)
    }

    pub fn nodes(&self, well: usize) -> Vec<ReferenceTest> {
        self.tests.iter().filter(|r| r.well == well).copied().collect()
    }
}

pub fn generate_constructed_case(seed: u64) -> Result<Dataset> {
    generate_dataset(&ScenarioSpec::constructed(seed))
}

pub fn generate_synthetic_copy(reference: &ReferenceWellTests, seed: u64) -> Result<Dataset> {
    generate_dataset(&ScenarioSpec::synthetic_copy(reference, seed)?)
}

pub fn generate_synthetic_random(reference: &ReferenceWellTests, seed: u64) -> Result<Dataset> {
    generate_dataset(&ScenarioSpec::synthetic_random(reference, seed)?)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sorted(mut v: Vec<f64>) -> Vec<f64> {
        v.sort_by(f64::total_cmp);
        v
    }

    #[test]
    fn frozen_reference_mirrors_field_counts() {
        let r = ReferenceWellTests::frozen();
        assert_eq!(r.wells(), 10);
        assert_eq!(r.tests.len(), 190);
        let counts: Vec<usize> = (0..10).map(|j| r.nodes(j).len()).collect();
        assert_eq!(counts, vec![14, 21, 22, 29, 14, 15, 17, 7, 18, 33]);
        assert!(r.nodes(7)[0].t >= BENCHMARK_STEPS / 2);
    }

    #[test]
    fn constant_walks_give_constant_features() {
        let mut spec = ScenarioSpec::constructed(1);
        spec.features = vec![
            FeatureSpec {
                u: WalkSpec::constant(0.5),
                p1: WalkSpec::constant(50e5),
                p2: WalkSpec::constant(20e5),
                temperature: WalkSpec::constant(340.0),
                shut_in_probability: 0.0,
            };
            3
        ];
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let f = generate_features(&spec, &mut rng);
        for row in &f {
            for r in row {
                assert_eq!(r.x, f[0][0].x);
            }
        }
    }

    #[test]
    fn downstream_pressure_never_exceeds_upstream() {
        let mut spec = ScenarioSpec::constructed(2);
        for f in &mut spec.features {
            f.p2 = WalkSpec { start: 45e5, lo: 30e5, hi: 60e5, step_sd: 2e5 };
        }
        spec.steps = 2000;
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for row in generate_features(&spec, &mut rng) {
            for r in row {
                assert!(r.x.p2 <= r.x.p1);
            }
        }
    }

    #[test]
    fn trajectory_interpolation() {
        let p = |g, l| WellParameters { beta: 1.0, gamma: g, lambda: l };
        let tr = Trajectory { interpolation: Interpolation::Linear, knots: vec![(10, p(0.1, 0.8)), (20, p(0.3, 0.6))] };
        assert_eq!(tr.at(0), p(0.1, 0.8));
        assert_eq!(tr.at(10), p(0.1, 0.8));
        assert_eq!(tr.at(20), p(0.3, 0.6));
        assert_eq!(tr.at(99), p(0.3, 0.6));
        let mid = tr.at(15);
        assert!((mid.gamma - 0.2).abs() < 1e-15 && (mid.lambda - 0.7).abs() < 1e-15);
        let step = Trajectory { interpolation: Interpolation::Step, ..tr };
        assert_eq!(step.at(19), p(0.1, 0.8));
    }

    #[test]
    fn constructed_case_layout() {
        let ds = generate_constructed_case(3).unwrap();
        assert_eq!((ds.wells, ds.len()), (3, 50));
        let truth = ds.truth.as_ref().unwrap();
        let jumps: Vec<usize> = (1..50).filter(|&t| truth[t][1].lambda != truth[t - 1][1].lambda).collect();
        assert_eq!(jumps, vec![CONSTRUCTED_JUMP_STEP]);
        for t in [24, 25] {
            assert!(!ds.observations[t].active.contains(&0) || ds.observations[t].kind == ObservationKind::WellTest);
        }
        assert_eq!(ds.observations[24].active, vec![1, 2]);
        assert_eq!(ds.observations[25].kind, ObservationKind::WellTest);
        assert_eq!(ds.observations[25].active, vec![0]);
        assert_eq!(ds.welltests().count(), 1);
    }

    #[test]
    fn copy_case_interpolates_tests() {
        let reference = ReferenceWellTests::frozen();
        let ds = generate_synthetic_copy(&reference, 4).unwrap();
        let truth = ds.truth.as_ref().unwrap();
        for r in &reference.tests {
            assert_eq!(truth[r.t][r.well].gamma, r.gamma);
            assert_eq!(truth[r.t][r.well].lambda, r.lambda);
        }
        assert!(truth.iter().flatten().all(|p| p.beta == 1.0));
        let nodes = reference.nodes(3);
        let (a, b) = (nodes[0], nodes[1]);
        if (b.t - a.t) % 2 == 0 {
            let mid = truth[(a.t + b.t) / 2][3];
            assert!((mid.gamma - 0.5 * (a.gamma + b.gamma)).abs() < 1e-12);
        }
        for obs in ds.welltests() {
            assert_eq!(obs.active.len(), 1);
        }
    }

    #[test]
    fn shuffled_increments_are_a_permutation() {
        let reference = [0.2, 0.5, 0.4, 0.9, 0.1];
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let (path, inc) = shuffled_path(&reference, &mut rng);
        let expected: Vec<f64> = reference.windows(2).map(|w| w[1] - w[0]).collect();
        assert_eq!(sorted(inc), sorted(expected));
        assert!(path.iter().all(|v| (0.0..=1.0).contains(v)));
    }

    #[test]
    fn random_case_is_seeded() {
        let reference = ReferenceWellTests::frozen();
        let a = ScenarioSpec::synthetic_random(&reference, 6).unwrap();
        let b = ScenarioSpec::synthetic_random(&reference, 6).unwrap();
        let c = ScenarioSpec::synthetic_random(&reference, 7).unwrap();
        assert_eq!(a, b);
        assert_ne!(a.truth[0].knots[0], c.truth[0].knots[0]);
        for tr in &a.truth {
            for (_, p) in &tr.knots {
                assert!((0.0..=1.0).contains(&p.gamma) && (0.0..=1.0).contains(&p.lambda));
            }
        }
    }

    #[test]
    fn shut_in_rate_matches_probability() {
        // ten wells make a lone producer, which forces reopening, negligible
        let mut spec = ScenarioSpec::constructed(8);
        spec.features = vec![spec.features[0]; 10];
        for f in &mut spec.features {
            f.shut_in_probability = 0.05;
        }
        spec.truth = vec![spec.truth[0].clone(); 10];
        spec.wells = 10;
        spec.steps = 6_000;
        spec.welltest_schedule.clear();
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let f = generate_features(&spec, &mut rng);
        let shut = f.iter().flatten().filter(|r| r.x.u == 0.0).count();
        let n = (10 * 6_000) as f64;
        let p = shut as f64 / n;
        let se = (0.05 * 0.95 / n).sqrt();
        assert!((p - 0.05).abs() < 3.0 * se, "shut-in rate {p}");
    }
}
