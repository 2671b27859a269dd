//! Validation against well tests.
//!
//! Each well test defines reference values for the tested well. The estimate
//! compared with it is the posterior mean one step before the test, so the
//! test itself never informs its own error.

use serde::{Deserialize, Serialize};
use statrs::statistics::{Data, Max, Min, OrderStatistics};

use crate::choke::{total_flow, FluidProperties, WellFeatures};
use crate::dataset::Dataset;
use crate::error::{Error, Result};
use crate::model::posterior_mean;
use crate::smc::PosteriorSummary;
use crate::state_space::{composition_from_factors, factors_from_rates, Observation, ObservationKind, Parameter};

/// Reference parameter values of the tested well. `None` marks a value the
/// test cannot determine.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WellTestTarget {
    pub t: usize,
    pub well: usize,
    pub beta: Option<f64>,
    pub gamma: Option<f64>,
    pub lambda: Option<f64>,
}

impl WellTestTarget {
    pub fn get(&self, p: Parameter) -> Option<f64> {
        match p {
            Parameter::Beta => self.beta,
            Parameter::Gamma => self.gamma,
            Parameter::Lambda => self.lambda,
        }
    }
}

/// Inverts the measured rates of a well test into composition factors and
/// the tuning factor that reproduces the measured total.
pub fn welltest_target(obs: &Observation, x: &WellFeatures, props: &FluidProperties) -> Result<WellTestTarget> {
    let well = obs
        .tested_well()
        .filter(|_| obs.kind == ObservationKind::WellTest)
        .ok_or_else(|| Error::Consistency { t: obs.t, msg: "not a well test".into() })?;
    let total: f64 = obs.y.iter().sum();
    let mut target = WellTestTarget { t: obs.t, well, beta: None, gamma: None, lambda: None };
    if !(total > 0.0) {
        return Ok(target);
    }
    let f = factors_from_rates(obs.y[0], obs.y[1], obs.y[2])?;
    target.gamma = Some(f.gamma);
    target.lambda = f.lambda;
    // without liquid the oil factor does not enter the composition
    let phi = composition_from_factors(f.gamma, f.lambda.unwrap_or(0.0))?;
    let flow = total_flow(x, &phi, props).map_err(|e| e.for_well(well))?;
    if flow > 0.0 {
        target.beta = Some(total / flow);
    }
    Ok(target)
}

/// Targets derived from every well-test observation in the dataset.
pub fn welltest_targets(ds: &Dataset, props: &FluidProperties) -> Result<Vec<WellTestTarget>> {
    ds.welltests()
        .map(|obs| {
            let j = obs.tested_well().expect("validated well test");
            welltest_target(obs, &ds.features[obs.t][j].x, props)
        })
        .collect()
}

/// Targets read from the generating parameters of a synthetic dataset.
pub fn truth_targets(ds: &Dataset) -> Result<Vec<WellTestTarget>> {
    let truth = ds.truth.as_ref().ok_or_else(|| Error::invalid("dataset has no truth table"))?;
    Ok(ds
        .welltests()
        .map(|obs| {
            let j = obs.tested_well().expect("validated well test");
            let p = truth[obs.t][j];
            WellTestTarget { t: obs.t, well: j, beta: Some(p.beta), gamma: Some(p.gamma), lambda: Some(p.lambda) }
        })
        .collect())
}

/// Absolute errors of one well test, indexed by [`Parameter::index`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ValidationError {
    pub t: usize,
    pub well: usize,
    pub errors: [Option<f64>; 3],
}

/// Errors of the posterior means at `t - 1` against each target at `t`.
/// Targets at `t = 0` have no preceding estimate and are skipped.
pub fn validation_errors(summaries: &[PosteriorSummary], targets: &[WellTestTarget]) -> Result<Vec<ValidationError>> {
    let mut out = Vec::with_capacity(targets.len());
    for target in targets {
        if target.t == 0 {
            log::warn!("well test at t=0 for well {} has no prior estimate; skipped", target.well);
            continue;
        }
        let s = summaries
            .get(target.t - 1)
            .ok_or_else(|| Error::invalid(format!("no posterior summary for step {}", target.t - 1)))?;
        if s.marginals.len() < 3 * (target.well + 1) {
            return Err(Error::invalid(format!("summary at step {} lacks well {}", s.t, target.well)));
        }
        let errors = Parameter::ALL.map(|p| target.get(p).map(|v| (posterior_mean(s, target.well, p) - v).abs()));
        out.push(ValidationError { t: target.t, well: target.well, errors });
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct ErrorStats {
    /// Mean absolute error, `None` without defined errors.
    pub mad: Option<f64>,
    pub count: usize,
    pub undefined: usize,
}

impl ErrorStats {
    fn from_errors<'a>(errors: impl Iterator<Item = &'a Option<f64>>) -> Self {
        let (mut sum, mut count, mut undefined) = (0.0, 0, 0);
        for e in errors {
            match e {
                Some(v) => {
                    sum += v;
                    count += 1;
                }
                None => undefined += 1,
            }
        }
        Self { mad: (count > 0).then(|| sum / count as f64), count, undefined }
    }
}

/// Box-plot statistics of the absolute errors of tests falling in one time
/// bucket.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoxStats {
    pub count: usize,
    pub min: f64,
    pub p25: f64,
    pub median: f64,
    pub p75: f64,
    pub max: f64,
}

impl BoxStats {
    fn from_values(v: Vec<f64>) -> Option<Self> {
        if v.is_empty() {
            return None;
        }
        let count = v.len();
        let mut d = Data::new(v);
        Some(Self {
            count,
            min: d.min(),
            p25: d.lower_quartile(),
            median: d.median(),
            p75: d.upper_quartile(),
            max: d.max(),
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Bucket {
    pub index: usize,
    /// First step of the bucket.
    pub start: usize,
    /// One past the last step of the bucket.
    pub end: usize,
    /// Per parameter, `None` when no defined error falls in the bucket.
    pub errors: [Option<BoxStats>; 3],
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvaluationReport {
    pub horizon: usize,
    pub bucket_steps: usize,
    /// Per parameter, over all tests.
    pub overall: [ErrorStats; 3],
    /// `per_well[j][p]`
    pub per_well: Vec<[ErrorStats; 3]>,
    pub mean_rel_ess: f64,
    pub buckets: Vec<Bucket>,
}

pub fn bucket_index(t: usize, bucket_steps: usize) -> usize {
    t / bucket_steps
}

/// Aggregates validation errors. `rel_ess` holds the relative ESS of every
/// step the filter processed.
pub fn mad_report(
    errors: &[ValidationError],
    rel_ess: &[f64],
    wells: usize,
    horizon: usize,
    bucket_steps: usize,
) -> Result<EvaluationReport> {
    if bucket_steps == 0 {
        return Err(Error::Config("bucket width must be positive".into()));
    }
    if let Some(e) = errors.iter().find(|e| e.well >= wells || e.t >= horizon) {
        return Err(Error::invalid(format!("well test ({}, {}) outside the report range", e.t, e.well)));
    }
    let by_param = |p: Parameter| ErrorStats::from_errors(errors.iter().map(|e| &e.errors[p.index()]));
    let overall = Parameter::ALL.map(by_param);
    let per_well = (0..wells)
        .map(|j| {
            Parameter::ALL
                .map(|p| ErrorStats::from_errors(errors.iter().filter(|e| e.well == j).map(|e| &e.errors[p.index()])))
        })
        .collect();
    let n_buckets = horizon.div_ceil(bucket_steps);
    let buckets = (0..n_buckets)
        .map(|b| {
            let in_bucket: Vec<&ValidationError> =
                errors.iter().filter(|e| bucket_index(e.t, bucket_steps) == b).collect();
            Bucket {
                index: b,
                start: b * bucket_steps,
                end: ((b + 1) * bucket_steps).min(horizon),
                errors: Parameter::ALL
                    .map(|p| BoxStats::from_values(in_bucket.iter().filter_map(|e| e.errors[p.index()]).collect())),
            }
        })
        .collect();
    let mean_rel_ess = if rel_ess.is_empty() { f64::NAN } else { rel_ess.iter().sum::<f64>() / rel_ess.len() as f64 };
    Ok(EvaluationReport { horizon, bucket_steps, overall, per_well, mean_rel_ess, buckets })
}

/// Side-by-side MAD table, one column per labelled report.
pub fn format_table(columns: &[(&str, &EvaluationReport)]) -> String {
    let fmt = |v: Option<f64>| v.map_or_else(|| "-".to_string(), |x| format!("{x:.3}"));
    let mut out = format!("{:<14}", "");
    for (label, _) in columns {
        out.push_str(&format!("{label:>14}"));
    }
    out.push('\n');
    for p in Parameter::ALL {
        out.push_str(&format!("{:<14}", p.label()));
        for (_, r) in columns {
            out.push_str(&format!("{:>14}", fmt(r.overall[p.index()].mad)));
        }
        out.push('\n');
    }
    out.push_str(&format!("{:<14}", "Rel. ESS"));
    for (_, r) in columns {
        out.push_str(&format!("{:>14}", fmt(Some(r.mean_rel_ess).filter(|v| v.is_finite()))));
    }
    out.push('\n');
    out
}

/// Where validation targets come from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TargetSource {
    /// Generating parameters when the dataset has them, else well tests.
    #[default]
    Auto,
    Truth,
    WellTests,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EvaluationSettings {
    pub targets: TargetSource,
    /// Well tests at or before this step are left out.
    pub burn_in: usize,
    pub bucket_steps: usize,
}

impl Default for EvaluationSettings {
    fn default() -> Self {
        Self { targets: TargetSource::Auto, burn_in: 0, bucket_steps: 50 }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Evaluation {
    pub errors: Vec<ValidationError>,
    pub report: EvaluationReport,
}

/// Validation errors and report for a filter run over `ds`. `updated[t]`
/// tells whether the filter processed step `t`; only those steps enter the
/// mean relative ESS.
pub fn evaluate(
    ds: &Dataset,
    summaries: &[PosteriorSummary],
    updated: &[bool],
    settings: &EvaluationSettings,
    fluid: &FluidProperties,
) -> Result<Evaluation> {
    let targets = match (settings.targets, ds.truth.is_some()) {
        (TargetSource::Truth, _) | (TargetSource::Auto, true) => truth_targets(ds)?,
        (TargetSource::WellTests, _) | (TargetSource::Auto, false) => welltest_targets(ds, fluid)?,
    };
    let targets: Vec<WellTestTarget> = targets.into_iter().filter(|t| t.t > settings.burn_in).collect();
    let errors = validation_errors(summaries, &targets)?;
    let rel_ess: Vec<f64> = summaries.iter().zip(updated).filter(|(_, &u)| u).map(|(s, _)| s.rel_ess).collect();
    let report = mad_report(&errors, &rel_ess, ds.wells, ds.len(), settings.bucket_steps)?;
    Ok(Evaluation { errors, report })
}
