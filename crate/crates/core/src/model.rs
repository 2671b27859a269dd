//! The virtual-flow-meter calibration problem as a filterable model.

use crate::choke::{FluidProperties, WellFeatures};
use crate::error::{Error, Result};
use crate::rng::StreamRng;
use crate::smc::{PosteriorSummary, StateSpaceModel};
use crate::state_space::{
    log_likelihood, observation_covariance, predicted_separator_rates, sample_prior, sample_transition, AssetState,
    NoiseConfig, Observation, Parameter, TransitionConfig,
};

#[derive(Debug, Clone)]
pub struct VfmModel {
    wells: usize,
    transition: TransitionConfig,
    noise: NoiseConfig,
    props: FluidProperties,
}

/// Everything the likelihood needs at one step.
#[derive(Debug, Clone)]
pub struct VfmStep {
    pub observation: Observation,
    pub features: Vec<WellFeatures>,
}

impl VfmStep {
    pub fn new(observation: Observation, features: Vec<WellFeatures>) -> Result<Self> {
        observation.validate()?;
        for &j in &observation.active {
            features
                .get(j)
                .ok_or_else(|| Error::invalid(format!("no features for active well {j}")))?
                .validate()
                .map_err(|e| e.for_well(j))?;
        }
        Ok(Self { observation, features })
    }
}

impl VfmModel {
    /// `transition` must have its composition prior means resolved.
    pub fn new(wells: usize, transition: TransitionConfig, noise: NoiseConfig, props: FluidProperties) -> Result<Self> {
        if wells == 0 {
            return Err(Error::Config("at least one well is required".into()));
        }
        transition.validate()?;
        if transition.mu_gamma0.is_none() || transition.mu_lambda0.is_none() {
            return Err(Error::Config("composition prior means are unresolved".into()));
        }
        noise.validate()?;
        props.validate()?;
        Ok(Self { wells, transition, noise, props })
    }

    pub fn wells(&self) -> usize {
        self.wells
    }

    pub fn transition(&self) -> &TransitionConfig {
        &self.transition
    }

    pub fn try_log_likelihood(&self, state: &AssetState, step: &VfmStep) -> Result<f64> {
        let obs = &step.observation;
        if obs.active.is_empty() {
            // an idle separator carries no information about the wells
            return Ok(0.0);
        }
        let mean = predicted_separator_rates(state, &step.features, &obs.active, &self.props)?;
        let cov = observation_covariance(state, &obs.y, &obs.active, &self.noise);
        log_likelihood(&obs.y, &mean, &cov)
    }
}

/// Position of a well parameter among the summary coordinates.
pub fn coordinate(well: usize, p: Parameter) -> usize {
    3 * well + p.index()
}

pub fn posterior_mean(summary: &PosteriorSummary, well: usize, p: Parameter) -> f64 {
    summary.marginals[coordinate(well, p)].mean
}

impl StateSpaceModel for VfmModel {
    type State = AssetState;
    type Observation = VfmStep;

    fn sample_initial(&self, rng: &mut StreamRng) -> AssetState {
        sample_prior(&self.transition, self.wells, rng).expect("prior means resolved in VfmModel::new")
    }

    fn sample_transition(&self, prev: &AssetState, rng: &mut StreamRng) -> AssetState {
        sample_transition(prev, &self.transition, rng)
    }

    fn log_likelihood(&self, state: &AssetState, step: &VfmStep) -> f64 {
        // inputs are checked in VfmStep::new; a singular covariance is the
        // only failure left and means the observation is impossible
        self.try_log_likelihood(state, step).unwrap_or(f64::NEG_INFINITY)
    }

    fn dimension(&self) -> usize {
        3 * self.wells
    }

    fn project(&self, state: &AssetState, out: &mut [f64]) {
        for (w, chunk) in state.wells.iter().zip(out.chunks_mut(3)) {
            chunk[0] = w.beta;
            chunk[1] = w.gamma;
            chunk[2] = w.lambda;
        }
    }
}
