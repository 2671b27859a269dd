//! Runs the particle filter over a dataset, one summary per step.

use serde::{Deserialize, Serialize};

use crate::choke::FluidProperties;
use crate::dataset::Dataset;
use crate::error::{Error, Result};
use crate::model::{VfmModel, VfmStep};
use crate::smc::{FilterConfig, ParticleFilter, PosteriorSummary};
use crate::state_space::{NoiseConfig, ObservationKind, TransitionConfig};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunSettings {
    pub filter: FilterConfig,
    pub transition: TransitionConfig,
    pub noise: NoiseConfig,
    pub fluid: FluidProperties,
    /// Feed well-test observations to the filter.
    pub include_welltests: bool,
    /// Multiplies every measured rate before filtering and evaluation.
    pub rate_scale: f64,
}

impl Default for RunSettings {
    fn default() -> Self {
        Self {
            filter: FilterConfig::default(),
            transition: TransitionConfig::default(),
            noise: NoiseConfig::default(),
            fluid: FluidProperties::default(),
            include_welltests: true,
            rate_scale: 1.0,
        }
    }
}

impl RunSettings {
    pub fn validate(&self) -> Result<()> {
        if !(self.rate_scale > 0.0 && self.rate_scale.is_finite()) {
            return Err(Error::Config(format!("rate scale {} must be positive", self.rate_scale)));
        }
        self.filter.validate()?;
        self.transition.validate()?;
        self.noise.validate()?;
        self.fluid.validate()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunOutput {
    /// `summaries[t]` describes the filter after step `t`. Steps the filter
    /// skipped repeat the previous summary under their own `t`.
    pub summaries: Vec<PosteriorSummary>,
    /// Whether the filter processed the observation at each step.
    pub updated: Vec<bool>,
    /// Steps where every particle had zero likelihood; the filter propagated
    /// without weighting there.
    pub degenerate_steps: Vec<usize>,
    /// Transition settings with the prior means actually used.
    pub transition: TransitionConfig,
}

impl RunOutput {
    pub fn mean_rel_ess(&self) -> f64 {
        let v: Vec<f64> =
            self.summaries.iter().zip(&self.updated).filter(|(_, &u)| u).map(|(s, _)| s.rel_ess).collect();
        if v.is_empty() {
            f64::NAN
        } else {
            v.iter().sum::<f64>() / v.len() as f64
        }
    }
}

/// Copy of the dataset with every measured rate multiplied by `scale`.
pub fn scale_rates(ds: &Dataset, scale: f64) -> Dataset {
    let mut out = ds.clone();
    if scale != 1.0 {
        for obs in &mut out.observations {
            obs.y.iter_mut().for_each(|v| *v *= scale);
        }
    }
    out
}

/// Unset composition prior means are taken from the first observation with
/// positive production.
pub fn resolve_prior(ds: &Dataset, transition: TransitionConfig) -> Result<TransitionConfig> {
    if transition.mu_gamma0.is_some() && transition.mu_lambda0.is_some() {
        return Ok(transition);
    }
    let obs = ds
        .observations
        .iter()
        .find(|o| o.y.iter().sum::<f64>() > 0.0)
        .ok_or_else(|| Error::Config("no observation with positive production to set the prior from".into()))?;
    transition.with_prior_from_rates(&obs.y)
}

/// Filters `ds`, which must already be rate-scaled.
pub fn run_filter(ds: &Dataset, settings: &RunSettings) -> Result<RunOutput> {
    settings.validate()?;
    ds.validate()?;
    if ds.is_empty() {
        return Err(Error::invalid("empty dataset"));
    }
    let transition = resolve_prior(ds, settings.transition)?;
    let model = VfmModel::new(ds.wells, transition, settings.noise, settings.fluid)?;
    let included = |t: usize| settings.include_welltests || ds.observations[t].kind != ObservationKind::WellTest;
    let step_at = |t: usize| VfmStep::new(ds.observations[t].clone(), ds.features_at(t));

    let mut degenerate_steps = Vec::new();
    let first = if included(0) { Some(step_at(0)?) } else { None };
    let (mut pf, s0) = match ParticleFilter::init(&model, settings.filter, 0, first.as_ref()) {
        Ok(v) => v,
        Err(e @ Error::DegenerateFilter { .. }) => {
            log::error!("{e}; starting from the unweighted prior");
            degenerate_steps.push(0);
            ParticleFilter::init(&model, settings.filter, 0, None)?
        }
        Err(e) => return Err(e),
    };
    let mut summaries = vec![s0];
    let mut updated = vec![first.is_some()];
    for t in 1..ds.len() {
        if !included(t) {
            let mut carried = summaries[t - 1].clone();
            carried.t = t;
            summaries.push(carried);
            updated.push(false);
            continue;
        }
        let step = step_at(t)?;
        let summary = match pf.step(&step, t) {
            Ok(s) => s,
            Err(e @ Error::DegenerateFilter { .. }) => {
                log::error!("{e}; propagating without the observation");
                degenerate_steps.push(t);
                pf.predict(t)
            }
            Err(e) => return Err(e),
        };
        log::debug!("step {t}: relative ESS {:.3}", summary.rel_ess);
        summaries.push(summary);
        updated.push(true);
    }
    Ok(RunOutput { summaries, updated, degenerate_steps, transition })
}
