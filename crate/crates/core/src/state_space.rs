//! Latent well parameters, their jump-diffusion dynamics and the separator
//! observation model.
//!
//! Each well carries a tuning factor `beta`, a gas mass fraction `gamma` and
//! an oil factor `lambda` (oil over liquid). At every step a Bernoulli jump
//! indicator decides per well whether all three parameters move together,
//! each by a normal step truncated to its support. The separator measures the
//! sum of the producing wells' phase rates under a Gaussian noise model whose
//! covariance combines a separator term with one term per producing well.

use nalgebra::{Matrix3, Vector3};
use rand::Rng;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

use crate::choke::{total_flow, Composition, FluidProperties, WellFeatures};
use crate::error::{Error, Result};
pub use crate::truncnorm::sample_truncated_normal;

/// Phase rates in the order gas, oil, water.
pub type Rates = [f64; 3];

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WellParameters {
    /// Tuning factor applied to the flow meter's total flow.
    pub beta: f64,
    /// Gas mass fraction.
    pub gamma: f64,
    /// Oil mass over liquid mass.
    pub lambda: f64,
}

impl WellParameters {
    pub fn new(beta: f64, gamma: f64, lambda: f64) -> Result<Self> {
        let p = Self { beta, gamma, lambda };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.beta > 0.0 && self.beta.is_finite()) {
            return Err(Error::invalid(format!("tuning factor {} must be positive", self.beta)));
        }
        if !(0.0..=1.0).contains(&self.gamma) || !(0.0..=1.0).contains(&self.lambda) {
            return Err(Error::invalid(format!(
                "gas fraction {} / oil factor {} outside [0, 1]",
                self.gamma, self.lambda
            )));
        }
        Ok(())
    }

    pub fn composition(&self) -> Composition {
        composition_unchecked(self.gamma, self.lambda)
    }

    pub fn get(&self, p: Parameter) -> f64 {
        match p {
            Parameter::Beta => self.beta,
            Parameter::Gamma => self.gamma,
            Parameter::Lambda => self.lambda,
        }
    }
}

/// The three per-well parameters, in storage order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Parameter {
    Beta,
    Gamma,
    Lambda,
}

impl Parameter {
    pub const ALL: [Parameter; 3] = [Parameter::Beta, Parameter::Gamma, Parameter::Lambda];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn name(self) -> &'static str {
        match self {
            Parameter::Beta => "beta",
            Parameter::Gamma => "gamma",
            Parameter::Lambda => "lambda",
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            Parameter::Beta => "Tuning factor",
            Parameter::Gamma => "Gas fraction",
            Parameter::Lambda => "Oil factor",
        }
    }

    pub fn from_name(s: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|p| p.name() == s)
    }
}

/// Joint state of all wells at one time step.
#[derive(Debug, Clone, PartialEq)]
pub struct AssetState {
    pub wells: Vec<WellParameters>,
    /// Whether each well jumped on the transition into this state.
    pub jump_flags: Vec<bool>,
}

impl AssetState {
    pub fn new(wells: Vec<WellParameters>) -> Self {
        let jump_flags = vec![false; wells.len()];
        Self { wells, jump_flags }
    }

    pub fn len(&self) -> usize {
        self.wells.len()
    }

    pub fn is_empty(&self) -> bool {
        self.wells.is_empty()
    }
}

/// Prior and jump-transition settings.
///
/// `mu_gamma0` and `mu_lambda0` are normally left unset and filled from the
/// separator composition of the first observation, see
/// [`TransitionConfig::with_prior_from_rates`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TransitionConfig {
    pub p_jump: f64,
    pub sigma_beta: f64,
    pub sigma_gamma: f64,
    pub sigma_lambda: f64,
    pub mu_beta0: f64,
    pub sigma_beta0: f64,
    pub mu_gamma0: Option<f64>,
    pub sigma_gamma0: f64,
    pub mu_lambda0: Option<f64>,
    pub sigma_lambda0: f64,
}

impl Default for TransitionConfig {
    fn default() -> Self {
        Self {
            p_jump: 0.1,
            sigma_beta: 0.05,
            sigma_gamma: 0.05,
            sigma_lambda: 0.05,
            mu_beta0: 1.0,
            sigma_beta0: 0.1,
            mu_gamma0: None,
            sigma_gamma0: 0.1,
            mu_lambda0: None,
            sigma_lambda0: 0.1,
        }
    }
}

impl TransitionConfig {
    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.p_jump) {
            return Err(Error::Config(format!("p_jump {} outside [0, 1]", self.p_jump)));
        }
        let sigmas = [
            ("sigma_beta", self.sigma_beta),
            ("sigma_gamma", self.sigma_gamma),
            ("sigma_lambda", self.sigma_lambda),
            ("sigma_beta0", self.sigma_beta0),
            ("sigma_gamma0", self.sigma_gamma0),
            ("sigma_lambda0", self.sigma_lambda0),
        ];
        for (name, s) in sigmas {
            if !(s > 0.0 && s.is_finite()) {
                return Err(Error::Config(format!("{name} must be positive, got {s}")));
            }
        }
        for (name, mu) in [("mu_gamma0", self.mu_gamma0), ("mu_lambda0", self.mu_lambda0)] {
            if let Some(mu) = mu {
                if !(0.0..=1.0).contains(&mu) {
                    return Err(Error::Config(format!("{name} {mu} outside [0, 1]")));
                }
            }
        }
        Ok(())
    }

    /// Fills unset composition prior means with the gas fraction and oil
    /// factor of the given separator rates.
    pub fn with_prior_from_rates(mut self, y: &Rates) -> Result<Self> {
        if self.mu_gamma0.is_some() && self.mu_lambda0.is_some() {
            return Ok(self);
        }
        let f = factors_from_rates(y[0], y[1], y[2])?;
        self.mu_gamma0.get_or_insert(f.gamma);
        // an all-gas separator says nothing about the liquid split
        self.mu_lambda0.get_or_insert(f.lambda.unwrap_or(0.5));
        Ok(self)
    }

    fn prior_means(&self) -> Result<(f64, f64, f64)> {
        match (self.mu_gamma0, self.mu_lambda0) {
            (Some(g), Some(l)) => Ok((self.mu_beta0, g, l)),
            _ => Err(Error::Config("composition prior means are unresolved".into())),
        }
    }
}

/// How the separator measurement variance scales with the measured rate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SeparatorVariance {
    /// `sigma^2 * y`
    #[default]
    Proportional,
    /// `sigma^2 * y^2`
    Squared,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct NoiseConfig {
    /// Separator measurement noise coefficient.
    pub sigma_separator: f64,
    /// Static per-well process disturbance.
    pub sigma_well: f64,
    /// Relative prediction error of the flow meter.
    pub sigma_vfm: f64,
    pub separator_variance: SeparatorVariance,
}

impl Default for NoiseConfig {
    fn default() -> Self {
        Self {
            sigma_separator: 0.05,
            sigma_well: 0.05,
            sigma_vfm: 0.05,
            separator_variance: SeparatorVariance::Proportional,
        }
    }
}

impl NoiseConfig {
    pub fn validate(&self) -> Result<()> {
        for (name, s) in
            [("sigma_separator", self.sigma_separator), ("sigma_well", self.sigma_well), ("sigma_vfm", self.sigma_vfm)]
        {
            if !(s >= 0.0 && s.is_finite()) {
                return Err(Error::Config(format!("{name} must be non-negative, got {s}")));
            }
        }
        Ok(())
    }

    fn separator_variance(&self, y: f64) -> f64 {
        let s2 = self.sigma_separator * self.sigma_separator;
        match self.separator_variance {
            SeparatorVariance::Proportional => s2 * y,
            SeparatorVariance::Squared => s2 * y * y,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ObservationKind {
    Production,
    #[serde(rename = "welltest")]
    WellTest,
}

impl ObservationKind {
    pub fn as_str(self) -> &'static str {
        match self {
            ObservationKind::Production => "production",
            ObservationKind::WellTest => "welltest",
        }
    }
}

/// One separator measurement.
#[derive(Debug, Clone, PartialEq)]
pub struct Observation {
    pub t: usize,
    pub y: Rates,
    pub kind: ObservationKind,
    /// Producing wells, ascending.
    pub active: Vec<usize>,
}

impl Observation {
    pub fn validate(&self) -> Result<()> {
        if self.y.iter().any(|v| !(*v >= 0.0 && v.is_finite())) {
            return Err(Error::Consistency {
                t: self.t,
                msg: format!("rates {:?} must be finite and non-negative", self.y),
            });
        }
        let is_test = self.kind == ObservationKind::WellTest;
        if is_test != (self.active.len() == 1) {
            return Err(Error::Consistency {
                t: self.t,
                msg: format!("{} observation with {} active wells", self.kind.as_str(), self.active.len()),
            });
        }
        Ok(())
    }

    pub fn tested_well(&self) -> Option<usize> {
        match self.kind {
            ObservationKind::WellTest => self.active.first().copied(),
            ObservationKind::Production => None,
        }
    }
}

fn composition_unchecked(gamma: f64, lambda: f64) -> Composition {
    Composition { gas: gamma, oil: (1.0 - gamma) * lambda, water: (1.0 - gamma) * (1.0 - lambda) }
}

/// `phi = [gamma, (1 - gamma) lambda, (1 - gamma)(1 - lambda)]`.
pub fn composition_from_factors(gamma: f64, lambda: f64) -> Result<Composition> {
    if !(0.0..=1.0).contains(&gamma) || !(0.0..=1.0).contains(&lambda) {
        return Err(Error::invalid(format!("gas fraction {gamma} / oil factor {lambda} outside [0, 1]")));
    }
    Ok(composition_unchecked(gamma, lambda))
}

/// Gas fraction and oil factor of a set of phase rates.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Factors {
    pub gamma: f64,
    /// `None` when there is no liquid.
    pub lambda: Option<f64>,
}

pub fn factors_from_rates(y_gas: f64, y_oil: f64, y_water: f64) -> Result<Factors> {
    if !(y_gas >= 0.0 && y_oil >= 0.0 && y_water >= 0.0) {
        return Err(Error::invalid(format!("negative phase rate ({y_gas}, {y_oil}, {y_water})")));
    }
    let total = y_gas + y_oil + y_water;
    if !(total > 0.0) {
        return Err(Error::invalid("zero total rate"));
    }
    let liquid = y_oil + y_water;
    Ok(Factors { gamma: y_gas / total, lambda: (liquid > 0.0).then(|| y_oil / liquid) })
}

pub fn sample_prior<R: Rng + ?Sized>(cfg: &TransitionConfig, wells: usize, rng: &mut R) -> Result<AssetState> {
    let (mu_beta, mu_gamma, mu_lambda) = cfg.prior_means()?;
    let params = (0..wells)
        .map(|_| WellParameters {
            beta: sample_truncated_normal(mu_beta, cfg.sigma_beta0, 0.0, f64::INFINITY, rng),
            gamma: sample_truncated_normal(mu_gamma, cfg.sigma_gamma0, 0.0, 1.0, rng),
            lambda: sample_truncated_normal(mu_lambda, cfg.sigma_lambda0, 0.0, 1.0, rng),
        })
        .collect();
    Ok(AssetState::new(params))
}

pub fn sample_transition<R: Rng + ?Sized>(prev: &AssetState, cfg: &TransitionConfig, rng: &mut R) -> AssetState {
    let mut wells = Vec::with_capacity(prev.wells.len());
    let mut jump_flags = Vec::with_capacity(prev.wells.len());
    for w in &prev.wells {
        let jump = rng.random_bool(cfg.p_jump);
        jump_flags.push(jump);
        if !jump {
            wells.push(*w);
            continue;
        }
        let beta = sample_truncated_normal(w.beta, cfg.sigma_beta, 0.0, f64::INFINITY, rng);
        let gamma = sample_truncated_normal(w.gamma, cfg.sigma_gamma, 0.0, 1.0, rng);
        // The oil factor of a liquid-free well is unobservable; leave it be.
        let lambda =
            if w.gamma < 1.0 { sample_truncated_normal(w.lambda, cfg.sigma_lambda, 0.0, 1.0, rng) } else { w.lambda };
        wells.push(WellParameters { beta, gamma, lambda });
    }
    AssetState { wells, jump_flags }
}

/// Phase rates of one well predicted by its flow meter: `beta phi f(x, phi)`.
pub fn predicted_well_rates(params: &WellParameters, x: &WellFeatures, props: &FluidProperties) -> Result<Rates> {
    let phi = params.composition();
    let total = params.beta * total_flow(x, &phi, props)?;
    Ok([total * phi.gas, total * phi.oil, total * phi.water])
}

/// Mean separator rates: the sum of the active wells' predicted rates.
pub fn predicted_separator_rates(
    state: &AssetState,
    features: &[WellFeatures],
    active: &[usize],
    props: &FluidProperties,
) -> Result<Rates> {
    let mut sum = [0.0; 3];
    for &j in active {
        let (params, x) = match (state.wells.get(j), features.get(j)) {
            (Some(p), Some(x)) => (p, x),
            _ => return Err(Error::invalid(format!("active well {j} out of range"))),
        };
        let rates = predicted_well_rates(params, x, props).map_err(|e| e.for_well(j))?;
        for (s, r) in sum.iter_mut().zip(rates) {
            *s += r;
        }
    }
    Ok(sum)
}

/// `Sigma = Sigma_sep(y) + sum_active [sigma_e^2 I + sigma_f^2 (beta phi)(beta phi)^T]`.
pub fn observation_covariance(
    state: &AssetState,
    y_meas: &Rates,
    active: &[usize],
    noise: &NoiseConfig,
) -> Matrix3<f64> {
    let mut cov = Matrix3::from_diagonal(&Vector3::from_iterator(y_meas.iter().map(|&y| noise.separator_variance(y))));
    let se2 = noise.sigma_well * noise.sigma_well;
    let sf2 = noise.sigma_vfm * noise.sigma_vfm;
    for &j in active {
        let w = &state.wells[j];
        let phi = w.composition();
        let v = Vector3::new(phi.gas, phi.oil, phi.water) * w.beta;
        cov += Matrix3::identity() * se2 + v * v.transpose() * sf2;
    }
    cov
}

/// Log-density of a 3-variate normal.
pub fn log_likelihood(y: &Rates, mean: &Rates, cov: &Matrix3<f64>) -> Result<f64> {
    let chol = cov
        .cholesky()
        .ok_or_else(|| Error::NumericalDomain(format!("observation covariance is not positive definite: {cov:?}")))?;
    let r = Vector3::new(y[0] - mean[0], y[1] - mean[1], y[2] - mean[2]);
    let l = chol.l();
    let z = l.solve_lower_triangular(&r).ok_or_else(|| Error::NumericalDomain("singular Cholesky factor".into()))?;
    let log_det = 2.0 * l.diagonal().iter().map(|d| d.ln()).sum::<f64>();
    Ok(-0.5 * (3.0 * (2.0 * PI).ln() + log_det + z.norm_squared()))
}
