//! Generic bootstrap particle filter.
//!
//! The proposal is the model's transition density, so the incremental
//! importance weight of a particle is its observation likelihood. Weights are
//! kept in log space and normalized with the max-subtraction trick. Ancestors
//! are resampled before every propagation unless the ESS-threshold mode is
//! switched on.

mod resample;
mod summary;
mod weights;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::{self, Purpose, StreamRng};

pub use resample::{offspring_counts, resample, ResamplingScheme};
pub use summary::{summarize_projected, weighted_percentiles, Marginal, PosteriorSummary, PERCENTILES};
pub use weights::{effective_sample_size, normalize_log_weights, DegenerateWeights};

/// A Markovian state-space model the filter can run on.
pub trait StateSpaceModel: Sync {
    type State: Clone + Send + Sync;
    type Observation: Sync;

    fn sample_initial(&self, rng: &mut StreamRng) -> Self::State;

    fn sample_transition(&self, prev: &Self::State, rng: &mut StreamRng) -> Self::State;

    /// `log p(y | state)`; `-inf` for impossible observations.
    fn log_likelihood(&self, state: &Self::State, obs: &Self::Observation) -> f64;

    /// Number of scalar coordinates reported in posterior summaries.
    fn dimension(&self) -> usize;

    fn project(&self, state: &Self::State, out: &mut [f64]);
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FilterConfig {
    pub n_particles: usize,
    pub resampling: ResamplingScheme,
    pub seed: u64,
    pub resample_every_step: bool,
    /// Relative ESS below which to resample when not resampling every step.
    pub ess_threshold: f64,
    /// Propagate and weight particles on the rayon pool.
    pub parallel: bool,
}

impl Default for FilterConfig {
    fn default() -> Self {
        Self {
            n_particles: 10_000,
            resampling: ResamplingScheme::Systematic,
            seed: 0,
            resample_every_step: true,
            ess_threshold: 0.5,
            parallel: false,
        }
    }
}

impl FilterConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n_particles < 2 {
            return Err(Error::Config(format!("at least two particles are required, got {}", self.n_particles)));
        }
        if !(0.0..=1.0).contains(&self.ess_threshold) {
            return Err(Error::Config(format!("ess_threshold {} outside [0, 1]", self.ess_threshold)));
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct ParticleSet<S> {
    pub particles: Vec<S>,
    pub log_weights: Vec<f64>,
    pub weights: Vec<f64>,
    /// Index into the previous generation each particle descends from.
    pub ancestors: Vec<usize>,
    pub t: usize,
}

impl<S> ParticleSet<S> {
    pub fn len(&self) -> usize {
        self.particles.len()
    }

    pub fn is_empty(&self) -> bool {
        self.particles.is_empty()
    }

    pub fn ess(&self) -> f64 {
        effective_sample_size(&self.weights)
    }
}

pub struct ParticleFilter<'m, M: StateSpaceModel> {
    model: &'m M,
    cfg: FilterConfig,
    set: ParticleSet<M::State>,
}

impl<'m, M: StateSpaceModel> ParticleFilter<'m, M> {
    /// Draws the initial particles from the prior and, if an observation is
    /// given for step `t0`, weights them by its likelihood.
    pub fn init(
        model: &'m M,
        cfg: FilterConfig,
        t0: usize,
        first: Option<&M::Observation>,
    ) -> Result<(Self, PosteriorSummary)> {
        cfg.validate()?;
        let n = cfg.n_particles;
        let draw = |i: usize| {
            let mut rng = rng::stream(cfg.seed, t0, i, Purpose::Initial);
            let s = model.sample_initial(&mut rng);
            let lw = first.map_or(0.0, |y| model.log_likelihood(&s, y));
            (s, lw)
        };
        let (particles, log_weights): (Vec<_>, Vec<_>) =
            if cfg.parallel { (0..n).into_par_iter().map(draw).unzip() } else { (0..n).map(draw).unzip() };
        let weights = normalize_log_weights(&log_weights).map_err(|_| Error::DegenerateFilter {
            t: t0,
            reason: "every initial particle has zero likelihood".into(),
        })?;
        let set = ParticleSet { particles, log_weights, weights, ancestors: (0..n).collect(), t: t0 };
        let filter = Self { model, cfg, set };
        let summary = filter.summarize();
        Ok((filter, summary))
    }

    /// Advances the filter to step `t`: resample, propagate through the
    /// transition, weight by the likelihood of `obs`. On error the particle
    /// set is left at its previous step.
    pub fn step(&mut self, obs: &M::Observation, t: usize) -> Result<PosteriorSummary> {
        self.advance(Some(obs), t)
    }

    /// Advances the filter to step `t` without an observation.
    pub fn predict(&mut self, t: usize) -> PosteriorSummary {
        self.advance(None, t).expect("unweighted propagation keeps finite weights")
    }

    fn advance(&mut self, obs: Option<&M::Observation>, t: usize) -> Result<PosteriorSummary> {
        let n = self.set.len();
        let model = self.model;
        let cfg = self.cfg;

        let resample_now = cfg.resample_every_step || self.set.ess() < cfg.ess_threshold * n as f64;
        let (ancestors, carried): (Vec<usize>, Vec<f64>) = if resample_now {
            let mut rng = rng::stream(cfg.seed, t, 0, Purpose::Resample);
            (resample(&self.set.weights, cfg.resampling, &mut rng), vec![0.0; n])
        } else {
            ((0..n).collect(), self.set.weights.iter().map(|w| w.ln()).collect())
        };

        let prev = &self.set.particles;
        let propagate = |i: usize| {
            let mut rng = rng::stream(cfg.seed, t, i, Purpose::Propagate);
            let s = model.sample_transition(&prev[ancestors[i]], &mut rng);
            let lw = carried[i] + obs.map_or(0.0, |y| model.log_likelihood(&s, y));
            (s, lw)
        };
        let (particles, log_weights): (Vec<_>, Vec<_>) =
            if cfg.parallel { (0..n).into_par_iter().map(propagate).unzip() } else { (0..n).map(propagate).unzip() };

        let weights = normalize_log_weights(&log_weights).map_err(|_| Error::DegenerateFilter {
            t,
            reason: "every propagated particle has zero likelihood".into(),
        })?;
        self.set = ParticleSet { particles, log_weights, weights, ancestors, t };
        Ok(self.summarize())
    }

    pub fn summarize(&self) -> PosteriorSummary {
        let dims = self.model.dimension();
        let n = self.set.len();
        let mut values = vec![0.0; n * dims];
        for (p, row) in self.set.particles.iter().zip(values.chunks_mut(dims.max(1))) {
            self.model.project(p, row);
        }
        let ess = self.set.ess();
        PosteriorSummary {
            t: self.set.t,
            marginals: summarize_projected(&values, dims, &self.set.weights, self.cfg.parallel),
            ess,
            rel_ess: ess / n as f64,
        }
    }

    pub fn particles(&self) -> &ParticleSet<M::State> {
        &self.set
    }

    pub fn config(&self) -> &FilterConfig {
        &self.cfg
    }
}
