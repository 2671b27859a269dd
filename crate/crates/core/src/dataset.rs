use crate::choke::WellFeatures;
use crate::error::{Error, Result};
use crate::state_space::{Observation, ObservationKind, WellParameters};

/// A well's measured inputs at one step and whether it produces to the
/// separator observed at that step.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FeatureRecord {
    pub x: WellFeatures,
    pub active: bool,
}

/// Time-indexed separator observations with per-well features, plus the true
/// parameters for synthetic data.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub wells: usize,
    /// `features[t][j]`
    pub features: Vec<Vec<FeatureRecord>>,
    /// `observations[t]` is the observation at step `t`.
    pub observations: Vec<Observation>,
    /// `truth[t][j]`
    pub truth: Option<Vec<Vec<WellParameters>>>,
}

impl Dataset {
    pub fn len(&self) -> usize {
        self.observations.len()
    }

    pub fn is_empty(&self) -> bool {
        self.observations.is_empty()
    }

    pub fn features_at(&self, t: usize) -> Vec<WellFeatures> {
        self.features[t].iter().map(|r| r.x).collect()
    }

    pub fn validate(&self) -> Result<()> {
        if self.features.len() != self.observations.len() {
            return Err(Error::invalid(format!(
                "{} feature steps but {} observations",
                self.features.len(),
                self.observations.len()
            )));
        }
        for (t, (row, obs)) in self.features.iter().zip(&self.observations).enumerate() {
            if obs.t != t {
                return Err(Error::Consistency { t, msg: format!("observation labelled t={}", obs.t) });
            }
            if row.len() != self.wells {
                return Err(Error::Consistency {
                    t,
                    msg: format!("{} feature rows for {} wells", row.len(), self.wells),
                });
            }
            obs.validate()?;
            let active: Vec<usize> = (0..self.wells).filter(|&j| row[j].active).collect();
            if active != obs.active {
                return Err(Error::Consistency {
                    t,
                    msg: format!("active wells {:?} disagree with observation {:?}", active, obs.active),
                });
            }
            for &j in &active {
                row[j].x.validate().map_err(|e| Error::Consistency { t, msg: format!("well {j}: {e}") })?;
            }
        }
        if let Some(truth) = &self.truth {
            if truth.len() != self.len() || truth.iter().any(|r| r.len() != self.wells) {
                return Err(Error::invalid("truth table shape does not match the dataset"));
            }
            for (t, row) in truth.iter().enumerate() {
                for p in row {
                    p.validate().map_err(|e| Error::Consistency { t, msg: e.to_string() })?;
                }
            }
        }
        Ok(())
    }

    pub fn welltests(&self) -> impl Iterator<Item = &Observation> {
        self.observations.iter().filter(|o| o.kind == ObservationKind::WellTest)
    }
}
