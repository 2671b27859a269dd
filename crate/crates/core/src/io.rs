//! File formats and run orchestration.
//!
//! Datasets are three CSV files: per-well features, per-step separator
//! observations and, for synthetic data, the generating parameters. Runs are
//! configured by a TOML file and write their results as CSV and JSON next to
//! a manifest that echoes the resolved configuration.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::choke::{FluidProperties, WellFeatures};
use crate::dataset::{Dataset, FeatureRecord};
use crate::error::{Error, Result};
use crate::eval::{evaluate, format_table, Evaluation, EvaluationReport, EvaluationSettings, ValidationError};
use crate::model::coordinate;
use crate::run::{run_filter, scale_rates, RunOutput, RunSettings};
use crate::smc::{FilterConfig, Marginal, PosteriorSummary};
use crate::state_space::{NoiseConfig, Observation, ObservationKind, Parameter, TransitionConfig, WellParameters};
use crate::synth::ScenarioSpec;

pub const FEATURES_FILE: &str = "features.csv";
pub const OBSERVATIONS_FILE: &str = "observations.csv";
pub const TRUTH_FILE: &str = "truth.csv";
pub const SCENARIO_FILE: &str = "scenario.json";
pub const SUMMARIES_FILE: &str = "summaries.csv";
pub const ESS_FILE: &str = "ess.csv";
pub const ERRORS_FILE: &str = "errors.csv";
pub const REPORT_JSON_FILE: &str = "report.json";
pub const REPORT_TEXT_FILE: &str = "report.txt";
pub const MANIFEST_FILE: &str = "manifest.json";

pub const FEATURE_COLUMNS: [&str; 7] = ["t", "well_id", "u", "p1", "p2", "T", "active"];
pub const OBSERVATION_COLUMNS: [&str; 6] = ["t", "y_gas", "y_oil", "y_water", "kind", "tested_well"];
pub const TRUTH_COLUMNS: [&str; 5] = ["t", "well_id", "beta", "gamma", "lambda"];
pub const SUMMARY_COLUMNS: [&str; 8] = ["t", "well", "parameter", "mean", "p5", "p25", "p75", "p95"];
pub const ESS_COLUMNS: [&str; 4] = ["t", "ess", "rel_ess", "updated"];
pub const ERROR_COLUMNS: [&str; 5] = ["t", "well", "beta_error", "gamma_error", "lambda_error"];

/// Reads a CSV file and hands each record's required fields, in the order of
/// `columns`, to `row` together with the record's line number.
fn read_table(
    path: &Path,
    columns: &[&str],
    mut row: impl FnMut(u64, &[&str]) -> std::result::Result<(), String>,
) -> Result<()> {
    let parse_err = |line: u64, msg: String| Error::Parse { path: path.to_path_buf(), line, msg };
    let mut reader = csv::ReaderBuilder::new().trim(csv::Trim::All).from_path(path).map_err(|e| match e.kind() {
        csv::ErrorKind::Io(_) => Error::Io(std::io::Error::other(format!("{}: {e}", path.display()))),
        _ => parse_err(1, e.to_string()),
    })?;
    let headers = reader.headers().map_err(|e| parse_err(1, e.to_string()))?.clone();
    let index = columns
        .iter()
        .map(|c| headers.iter().position(|h| h == *c).ok_or_else(|| parse_err(1, format!("missing column '{c}'"))))
        .collect::<Result<Vec<_>>>()?;
    for rec in reader.records() {
        let rec = rec.map_err(|e| {
            let line = e.position().map_or(0, |p| p.line());
            parse_err(line, e.to_string())
        })?;
        let line = rec.position().map_or(0, |p| p.line());
        let fields: Vec<&str> = index.iter().map(|&i| rec.get(i).unwrap_or("")).collect();
        row(line, &fields).map_err(|msg| parse_err(line, msg))?;
    }
    Ok(())
}

fn num<T: std::str::FromStr>(field: &str, name: &str) -> std::result::Result<T, String>
where
    T::Err: std::fmt::Display,
{
    field.parse().map_err(|e| format!("column '{name}': cannot parse '{field}': {e}"))
}

fn flag(field: &str, name: &str) -> std::result::Result<bool, String> {
    match field {
        "0" | "false" => Ok(false),
        "1" | "true" => Ok(true),
        _ => Err(format!("column '{name}': expected 0 or 1, got '{field}'")),
    }
}

/// Collects `(t, well) -> value` rows into a dense `t × well` table.
fn densify<T: Copy>(
    path: &Path,
    cells: BTreeMap<(usize, usize), T>,
    steps: usize,
    wells: usize,
) -> Result<Vec<Vec<T>>> {
    let mut table = Vec::with_capacity(steps);
    for t in 0..steps {
        let mut row = Vec::with_capacity(wells);
        for j in 0..wells {
            let v = cells.get(&(t, j)).ok_or_else(|| Error::Parse {
                path: path.to_path_buf(),
                line: 0,
                msg: format!("no row for t={t}, well_id={j}"),
            })?;
            row.push(*v);
        }
        table.push(row);
    }
    Ok(table)
}

/// Reads features and observations. A downstream pressure above the
/// upstream pressure is clamped to it with a warning.
pub fn read_dataset(features_path: &Path, observations_path: &Path) -> Result<Dataset> {
    let mut cells = BTreeMap::new();
    read_table(features_path, &FEATURE_COLUMNS, |line, f| {
        let t: usize = num(f[0], "t")?;
        let well: usize = num(f[1], "well_id")?;
        let mut x = WellFeatures {
            u: num(f[2], "u")?,
            p1: num(f[3], "p1")?,
            p2: num(f[4], "p2")?,
            temperature: num(f[5], "T")?,
        };
        if x.p2 > x.p1 {
            log::warn!("{}:{line}: p2 {} above p1 {}; clamped", features_path.display(), x.p2, x.p1);
            x.p2 = x.p1;
        }
        let active = flag(f[6], "active")?;
        if cells.insert((t, well), FeatureRecord { x, active }).is_some() {
            return Err(format!("duplicate row for t={t}, well_id={well}"));
        }
        Ok(())
    })?;

    let mut raw = BTreeMap::new();
    read_table(observations_path, &OBSERVATION_COLUMNS, |_, f| {
        let t: usize = num(f[0], "t")?;
        let y = [num(f[1], "y_gas")?, num(f[2], "y_oil")?, num(f[3], "y_water")?];
        let kind = match f[4] {
            "production" => ObservationKind::Production,
            "welltest" => ObservationKind::WellTest,
            other => return Err(format!("column 'kind': unknown value '{other}'")),
        };
        let tested: Option<usize> = if f[5].is_empty() { None } else { Some(num(f[5], "tested_well")?) };
        match (kind, tested) {
            (ObservationKind::WellTest, None) => return Err("well test without tested_well".into()),
            (ObservationKind::Production, Some(_)) => return Err("tested_well set on a production row".into()),
            _ => {}
        }
        if raw.insert(t, (y, kind, tested)).is_some() {
            return Err(format!("duplicate observation for t={t}"));
        }
        Ok(())
    })?;

    let steps = raw.len();
    if raw.keys().copied().ne(0..steps) {
        return Err(Error::Parse {
            path: observations_path.to_path_buf(),
            line: 0,
            msg: "observation times must be 0, 1, 2, ... without gaps".into(),
        });
    }
    let wells = cells.keys().map(|&(_, j)| j + 1).max().unwrap_or(0);
    let features = densify(features_path, cells, steps, wells)?;
    let mut observations = Vec::with_capacity(steps);
    for (t, (y, kind, tested)) in raw {
        let active: Vec<usize> = (0..wells).filter(|&j| features[t][j].active).collect();
        if let Some(j) = tested {
            if active != [j] {
                return Err(Error::Consistency {
                    t,
                    msg: format!("well test of well {j} but active wells are {active:?}"),
                });
            }
        }
        observations.push(Observation { t, y, kind, active });
    }
    let ds = Dataset { wells, features, observations, truth: None };
    ds.validate()?;
    Ok(ds)
}

/// Attaches the generating parameters in `path` to `ds`.
pub fn read_truth(path: &Path, ds: &mut Dataset) -> Result<()> {
    let mut cells = BTreeMap::new();
    read_table(path, &TRUTH_COLUMNS, |_, f| {
        let key = (num(f[0], "t")?, num(f[1], "well_id")?);
        let p = WellParameters { beta: num(f[2], "beta")?, gamma: num(f[3], "gamma")?, lambda: num(f[4], "lambda")? };
        if cells.insert(key, p).is_some() {
            return Err(format!("duplicate row for t={}, well_id={}", key.0, key.1));
        }
        Ok(())
    })?;
    if cells.keys().any(|&(t, j)| t >= ds.len() || j >= ds.wells) {
        return Err(Error::Parse { path: path.to_path_buf(), line: 0, msg: "truth row outside the dataset".into() });
    }
    ds.truth = Some(densify(path, cells, ds.len(), ds.wells)?);
    ds.validate()
}

fn writer(path: &Path, columns: &[&str]) -> Result<csv::Writer<fs::File>> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(columns)?;
    Ok(w)
}

/// Writes `features.csv`, `observations.csv` and, with truth present,
/// `truth.csv` into `dir`.
pub fn write_dataset(ds: &Dataset, dir: &Path) -> Result<()> {
    fs::create_dir_all(dir)?;
    let mut w = writer(&dir.join(FEATURES_FILE), &FEATURE_COLUMNS)?;
    for (t, row) in ds.features.iter().enumerate() {
        for (j, r) in row.iter().enumerate() {
            let active = if r.active { "1" } else { "0" };
            w.write_record([
                t.to_string(),
                j.to_string(),
                r.x.u.to_string(),
                r.x.p1.to_string(),
                r.x.p2.to_string(),
                r.x.temperature.to_string(),
                active.to_string(),
            ])?;
        }
    }
    w.flush()?;

    let mut w = writer(&dir.join(OBSERVATIONS_FILE), &OBSERVATION_COLUMNS)?;
    for o in &ds.observations {
        let tested =
            o.tested_well().filter(|_| o.kind == ObservationKind::WellTest).map_or(String::new(), |j| j.to_string());
        w.write_record([
            o.t.to_string(),
            o.y[0].to_string(),
            o.y[1].to_string(),
            o.y[2].to_string(),
            o.kind.as_str().to_string(),
            tested,
        ])?;
    }
    w.flush()?;

    if let Some(truth) = &ds.truth {
        let mut w = writer(&dir.join(TRUTH_FILE), &TRUTH_COLUMNS)?;
        for (t, row) in truth.iter().enumerate() {
            for (j, p) in row.iter().enumerate() {
                w.write_record([
                    t.to_string(),
                    j.to_string(),
                    p.beta.to_string(),
                    p.gamma.to_string(),
                    p.lambda.to_string(),
                ])?;
            }
        }
        w.flush()?;
    }
    Ok(())
}

/// Writes the dataset generated from `spec` plus the spec itself.
pub fn write_scenario(spec: &ScenarioSpec, ds: &Dataset, dir: &Path) -> Result<()> {
    write_dataset(ds, dir)?;
    fs::write(dir.join(SCENARIO_FILE), serde_json::to_string_pretty(spec)? + "\n")?;
    Ok(())
}

/// Reads a scenario specification from a TOML file.
pub fn load_scenario(path: &Path) -> Result<ScenarioSpec> {
    let text = fs::read_to_string(path).map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
    let spec: ScenarioSpec = toml::from_str(&text).map_err(|e| Error::Config(e.to_string()))?;
    spec.validate()?;
    Ok(spec)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DataPaths {
    pub features: PathBuf,
    pub observations: PathBuf,
    #[serde(default)]
    pub truth: Option<PathBuf>,
}

impl DataPaths {
    /// The standard file names inside `dir`, with truth if present.
    pub fn in_dir(dir: &Path) -> Self {
        let truth = dir.join(TRUTH_FILE);
        Self {
            features: dir.join(FEATURES_FILE),
            observations: dir.join(OBSERVATIONS_FILE),
            truth: truth.exists().then_some(truth),
        }
    }

    fn resolve(&mut self, base: &Path) {
        for p in [&mut self.features, &mut self.observations].into_iter().chain(self.truth.as_mut()) {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        }
    }
}

/// Everything a run needs. Relative paths in a configuration file are
/// resolved against the file's directory.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub data: DataPaths,
    pub output_dir: PathBuf,
    #[serde(default)]
    pub filter: FilterConfig,
    #[serde(default)]
    pub transition: TransitionConfig,
    #[serde(default)]
    pub noise: NoiseConfig,
    #[serde(default)]
    pub fluid: FluidProperties,
    #[serde(default = "default_true")]
    pub include_welltests: bool,
    #[serde(default = "default_scale")]
    pub rate_scale: f64,
    #[serde(default)]
    pub evaluation: EvaluationSettings,
}

fn default_true() -> bool {
    true
}

fn default_scale() -> f64 {
    1.0
}

impl RunConfig {
    pub fn new(data: DataPaths, output_dir: PathBuf) -> Self {
        let s = RunSettings::default();
        Self {
            data,
            output_dir,
            filter: s.filter,
            transition: s.transition,
            noise: s.noise,
            fluid: s.fluid,
            include_welltests: s.include_welltests,
            rate_scale: s.rate_scale,
            evaluation: EvaluationSettings::default(),
        }
    }

    /// Parses a TOML document; relative paths are taken from `base`.
    pub fn from_toml(text: &str, base: &Path) -> Result<Self> {
        let value: toml::Table = text.parse().map_err(|e: toml::de::Error| Error::Config(e.to_string()))?;
        Self::from_table(value, base)
    }

    pub fn from_table(table: toml::Table, base: &Path) -> Result<Self> {
        let mut cfg: Self = table.try_into().map_err(|e: toml::de::Error| Error::Config(e.to_string()))?;
        cfg.data.resolve(base);
        if cfg.output_dir.is_relative() {
            cfg.output_dir = base.join(&cfg.output_dir);
        }
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text =
            fs::read_to_string(path).map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::from_toml(&text, path.parent().unwrap_or(Path::new(".")))
    }

    pub fn settings(&self) -> RunSettings {
        RunSettings {
            filter: self.filter,
            transition: self.transition,
            noise: self.noise,
            fluid: self.fluid,
            include_welltests: self.include_welltests,
            rate_scale: self.rate_scale,
        }
    }

    pub fn validate(&self) -> Result<()> {
        for p in [&self.data.features, &self.data.observations].into_iter().chain(self.data.truth.as_ref()) {
            if !p.is_file() {
                return Err(Error::Config(format!("input file {} does not exist", p.display())));
            }
        }
        if self.evaluation.bucket_steps == 0 {
            return Err(Error::Config("evaluation.bucket_steps must be positive".into()));
        }
        self.settings().validate()
    }
}

pub fn load_dataset(paths: &DataPaths) -> Result<Dataset> {
    let mut ds = read_dataset(&paths.features, &paths.observations)?;
    if let Some(truth) = &paths.truth {
        read_truth(truth, &mut ds)?;
    }
    Ok(ds)
}

#[derive(Debug, Serialize)]
struct Manifest<'a> {
    package: &'static str,
    version: &'static str,
    seed: u64,
    config: &'a RunConfig,
    resolved_transition: &'a TransitionConfig,
    wells: usize,
    steps: usize,
    degenerate_steps: &'a [usize],
}

/// What a run produced, besides the files.
#[derive(Debug, Clone)]
pub struct RunArtifacts {
    pub output: RunOutput,
    pub evaluation: Evaluation,
}

/// Loads the data, filters it, evaluates against well tests and writes all
/// result files into the configured output directory.
pub fn run(cfg: &RunConfig) -> Result<RunArtifacts> {
    cfg.validate()?;
    let ds = scale_rates(&load_dataset(&cfg.data)?, cfg.rate_scale);
    let output = run_filter(&ds, &cfg.settings())?;
    let evaluation = evaluate(&ds, &output.summaries, &output.updated, &cfg.evaluation, &cfg.fluid)?;

    let dir = &cfg.output_dir;
    fs::create_dir_all(dir)?;
    write_summaries(&dir.join(SUMMARIES_FILE), &output.summaries, ds.wells)?;
    write_ess(&dir.join(ESS_FILE), &output.summaries, &output.updated)?;
    write_errors(&dir.join(ERRORS_FILE), &evaluation.errors)?;
    write_report(dir, &evaluation.report)?;
    let manifest = Manifest {
        package: env!("CARGO_PKG_NAME"),
        version: env!("CARGO_PKG_VERSION"),
        seed: cfg.filter.seed,
        config: cfg,
        resolved_transition: &output.transition,
        wells: ds.wells,
        steps: ds.len(),
        degenerate_steps: &output.degenerate_steps,
    };
    fs::write(dir.join(MANIFEST_FILE), serde_json::to_string_pretty(&manifest)? + "\n")?;
    Ok(RunArtifacts { output, evaluation })
}

/// Re-evaluates the summaries of an earlier run in `run_dir`, writing the
/// report files to the configured output directory.
pub fn evaluate_run(cfg: &RunConfig, run_dir: &Path) -> Result<Evaluation> {
    let ds = scale_rates(&load_dataset(&cfg.data)?, cfg.rate_scale);
    let summaries = read_summaries(&run_dir.join(SUMMARIES_FILE), &run_dir.join(ESS_FILE))?;
    if summaries.summaries.len() != ds.len() {
        return Err(Error::invalid(format!(
            "run has {} steps but the dataset has {}",
            summaries.summaries.len(),
            ds.len()
        )));
    }
    let evaluation = evaluate(&ds, &summaries.summaries, &summaries.updated, &cfg.evaluation, &cfg.fluid)?;
    fs::create_dir_all(&cfg.output_dir)?;
    write_errors(&cfg.output_dir.join(ERRORS_FILE), &evaluation.errors)?;
    write_report(&cfg.output_dir, &evaluation.report)?;
    Ok(evaluation)
}

fn write_report(dir: &Path, report: &EvaluationReport) -> Result<()> {
    fs::write(dir.join(REPORT_JSON_FILE), serde_json::to_string_pretty(report)? + "\n")?;
    fs::write(dir.join(REPORT_TEXT_FILE), format_table(&[("MAD", report)]))?;
    Ok(())
}

pub fn write_summaries(path: &Path, summaries: &[PosteriorSummary], wells: usize) -> Result<()> {
    let mut w = writer(path, &SUMMARY_COLUMNS)?;
    for s in summaries {
        for j in 0..wells {
            for p in Parameter::ALL {
                let m = s.marginals[coordinate(j, p)];
                w.write_record([
                    s.t.to_string(),
                    j.to_string(),
                    p.name().to_string(),
                    m.mean.to_string(),
                    m.p5.to_string(),
                    m.p25.to_string(),
                    m.p75.to_string(),
                    m.p95.to_string(),
                ])?;
            }
        }
    }
    w.flush()?;
    Ok(())
}

pub fn write_ess(path: &Path, summaries: &[PosteriorSummary], updated: &[bool]) -> Result<()> {
    let mut w = writer(path, &ESS_COLUMNS)?;
    for (s, u) in summaries.iter().zip(updated) {
        w.write_record([s.t.to_string(), s.ess.to_string(), s.rel_ess.to_string(), u8::from(*u).to_string()])?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_errors(path: &Path, errors: &[ValidationError]) -> Result<()> {
    let mut w = writer(path, &ERROR_COLUMNS)?;
    let cell = |v: Option<f64>| v.map_or(String::new(), |x| x.to_string());
    for e in errors {
        w.write_record([e.t.to_string(), e.well.to_string(), cell(e.errors[0]), cell(e.errors[1]), cell(e.errors[2])])?;
    }
    w.flush()?;
    Ok(())
}

/// Summaries read back from a run directory.
#[derive(Debug, Clone, PartialEq)]
pub struct StoredRun {
    pub summaries: Vec<PosteriorSummary>,
    pub updated: Vec<bool>,
}

pub fn read_summaries(summaries_path: &Path, ess_path: &Path) -> Result<StoredRun> {
    let mut cells: BTreeMap<(usize, usize, usize), Marginal> = BTreeMap::new();
    read_table(summaries_path, &SUMMARY_COLUMNS, |_, f| {
        let p = Parameter::from_name(f[2]).ok_or_else(|| format!("column 'parameter': unknown value '{}'", f[2]))?;
        let m = Marginal {
            mean: num(f[3], "mean")?,
            p5: num(f[4], "p5")?,
            p25: num(f[5], "p25")?,
            p75: num(f[6], "p75")?,
            p95: num(f[7], "p95")?,
        };
        cells.insert((num(f[0], "t")?, num(f[1], "well")?, p.index()), m);
        Ok(())
    })?;
    let mut ess = Vec::new();
    read_table(ess_path, &ESS_COLUMNS, |_, f| {
        ess.push((
            num::<usize>(f[0], "t")?,
            num::<f64>(f[1], "ess")?,
            num::<f64>(f[2], "rel_ess")?,
            flag(f[3], "updated")?,
        ));
        Ok(())
    })?;
    let wells = cells.keys().map(|k| k.1 + 1).max().unwrap_or(0);
    let mut summaries = Vec::with_capacity(ess.len());
    let mut updated = Vec::with_capacity(ess.len());
    for (i, &(t, e, rel, u)) in ess.iter().enumerate() {
        if t != i {
            return Err(Error::Parse {
                path: ess_path.to_path_buf(),
                line: 0,
                msg: "steps must be 0, 1, 2, ...".into(),
            });
        }
        let marginals = (0..wells)
            .flat_map(|j| (0..3).map(move |k| (j, k)))
            .map(|(j, k)| {
                cells.get(&(t, j, k)).copied().ok_or_else(|| Error::Parse {
                    path: summaries_path.to_path_buf(),
                    line: 0,
                    msg: format!("no summary for t={t}, well={j}"),
                })
            })
            .collect::<Result<Vec<_>>>()?;
        summaries.push(PosteriorSummary { t, marginals, ess: e, rel_ess: rel });
        updated.push(u);
    }
    Ok(StoredRun { summaries, updated })
}
