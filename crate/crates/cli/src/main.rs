use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use toml::{Table, Value};

use vfm_calib::eval::format_table;
use vfm_calib::io::{self, DataPaths, RunConfig};
use vfm_calib::synth::{generate_dataset, ScenarioKind, ScenarioSpec};

const OUTPUT_DIR_ENV: &str = "VFMCAL_OUTPUT_DIR";

/// Particle-filter calibration of choke-model virtual flow meters.
#[derive(Debug, Parser)]
#[command(name = "vfmcal", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Write a synthetic dataset with its generating parameters.
    Generate(GenerateArgs),
    /// Filter a dataset and evaluate it against its well tests.
    Run(RunArgs),
    /// Re-evaluate the summaries of an earlier run.
    Evaluate(EvaluateArgs),
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Scenario {
    Constructed,
    Copy,
    Random,
    /// Read the scenario from --spec.
    Custom,
}

#[derive(Debug, Args)]
struct GenerateArgs {
    scenario: Scenario,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Scenario file (TOML), required for `custom`.
    #[arg(long)]
    spec: Option<PathBuf>,
    #[arg(long, env = OUTPUT_DIR_ENV)]
    out: PathBuf,
    /// Observations are the exact sum of the well rates.
    #[arg(long)]
    no_noise: bool,
    /// Keep only the separator noise term.
    #[arg(long)]
    no_well_noise: bool,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Resampling {
    Systematic,
    Multinomial,
    Stratified,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Targets {
    Auto,
    Truth,
    Welltests,
}

/// Run configuration: a TOML file, adjusted by flags and `--set` overrides.
#[derive(Debug, Args)]
struct ConfigArgs {
    #[arg(long)]
    config: Option<PathBuf>,
    /// Directory holding features.csv, observations.csv and optionally truth.csv.
    #[arg(long, conflicts_with_all = ["features", "observations", "truth"])]
    data_dir: Option<PathBuf>,
    #[arg(long)]
    features: Option<PathBuf>,
    #[arg(long)]
    observations: Option<PathBuf>,
    #[arg(long)]
    truth: Option<PathBuf>,
    #[arg(long, env = OUTPUT_DIR_ENV)]
    output_dir: Option<PathBuf>,
    #[arg(long)]
    particles: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long, value_enum)]
    resampling: Option<Resampling>,
    /// Resample only when the relative ESS drops below this value.
    #[arg(long)]
    ess_threshold: Option<f64>,
    #[arg(long)]
    parallel: bool,
    /// Withhold well-test observations from the filter.
    #[arg(long)]
    no_welltests: bool,
    #[arg(long)]
    rate_scale: Option<f64>,
    #[arg(long, value_enum)]
    targets: Option<Targets>,
    #[arg(long)]
    burn_in: Option<usize>,
    #[arg(long)]
    bucket_steps: Option<usize>,
    /// Override any configuration key, e.g. `transition.p_jump=0.2`.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    overrides: Vec<String>,
}

#[derive(Debug, Args)]
struct RunArgs {
    #[command(flatten)]
    config: ConfigArgs,
}

#[derive(Debug, Args)]
struct EvaluateArgs {
    /// Output directory of the run to evaluate.
    #[arg(long)]
    run_dir: PathBuf,
    #[command(flatten)]
    config: ConfigArgs,
}

fn absolute(p: &Path) -> Result<PathBuf> {
    Ok(if p.is_absolute() { p.to_path_buf() } else { std::env::current_dir()?.join(p) })
}

fn path_value(p: &Path) -> Result<Value> {
    Ok(Value::String(absolute(p)?.to_string_lossy().into_owned()))
}

/// Sets `value` at a dotted `key`, creating intermediate tables.
fn set_key(table: &mut Table, key: &str, value: Value) -> Result<()> {
    let mut parts: Vec<&str> = key.split('.').collect();
    let last = parts.pop().filter(|k| !k.is_empty()).with_context(|| format!("empty key in '{key}'"))?;
    let mut cur = table;
    for part in parts {
        cur = cur
            .entry(part)
            .or_insert_with(|| Value::Table(Table::new()))
            .as_table_mut()
            .with_context(|| format!("'{part}' in '{key}' is not a table"))?;
    }
    cur.insert(last.to_string(), value);
    Ok(())
}

/// Parses the right-hand side of `--set` as a TOML value, falling back to a
/// bare string.
fn parse_value(raw: &str) -> Value {
    format!("v = {raw}")
        .parse::<Table>()
        .ok()
        .and_then(|mut t| t.remove("v"))
        .unwrap_or_else(|| Value::String(raw.to_string()))
}

impl ConfigArgs {
    fn resolve(&self, default_output: Option<&Path>) -> Result<RunConfig> {
        let (mut table, base) = match &self.config {
            Some(path) => {
                let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
                let table: Table = text.parse().with_context(|| format!("parsing {}", path.display()))?;
                (table, absolute(path)?.parent().map(Path::to_path_buf).unwrap_or_default())
            }
            None => (Table::new(), std::env::current_dir()?),
        };
        if let Some(dir) = &self.data_dir {
            let paths = DataPaths::in_dir(&absolute(dir)?);
            set_key(&mut table, "data.features", path_value(&paths.features)?)?;
            set_key(&mut table, "data.observations", path_value(&paths.observations)?)?;
            if let Some(t) = &paths.truth {
                set_key(&mut table, "data.truth", path_value(t)?)?;
            }
        }
        for (key, path) in
            [("data.features", &self.features), ("data.observations", &self.observations), ("data.truth", &self.truth)]
        {
            if let Some(p) = path {
                set_key(&mut table, key, path_value(p)?)?;
            }
        }
        if let Some(p) = self.output_dir.as_deref().or(default_output) {
            set_key(&mut table, "output_dir", path_value(p)?)?;
        }
        if let Some(n) = self.particles {
            set_key(&mut table, "filter.n_particles", Value::Integer(n.try_into()?))?;
        }
        if let Some(s) = self.seed {
            let s: i64 = s.try_into().context("TOML configuration holds seeds up to 2^63 - 1")?;
            set_key(&mut table, "filter.seed", Value::Integer(s))?;
        }
        if let Some(r) = self.resampling {
            let name = match r {
                Resampling::Systematic => "systematic",
                Resampling::Multinomial => "multinomial",
                Resampling::Stratified => "stratified",
            };
            set_key(&mut table, "filter.resampling", Value::String(name.into()))?;
        }
        if let Some(x) = self.ess_threshold {
            set_key(&mut table, "filter.resample_every_step", Value::Boolean(false))?;
            set_key(&mut table, "filter.ess_threshold", Value::Float(x))?;
        }
        if self.parallel {
            set_key(&mut table, "filter.parallel", Value::Boolean(true))?;
        }
        if self.no_welltests {
            set_key(&mut table, "include_welltests", Value::Boolean(false))?;
        }
        if let Some(x) = self.rate_scale {
            set_key(&mut table, "rate_scale", Value::Float(x))?;
        }
        if let Some(t) = self.targets {
            let name = match t {
                Targets::Auto => "auto",
                Targets::Truth => "truth",
                Targets::Welltests => "welltests",
            };
            set_key(&mut table, "evaluation.targets", Value::String(name.into()))?;
        }
        if let Some(n) = self.burn_in {
            set_key(&mut table, "evaluation.burn_in", Value::Integer(n.try_into()?))?;
        }
        if let Some(n) = self.bucket_steps {
            set_key(&mut table, "evaluation.bucket_steps", Value::Integer(n.try_into()?))?;
        }
        for item in &self.overrides {
            let (key, raw) = item.split_once('=').with_context(|| format!("--set expects KEY=VALUE, got '{item}'"))?;
            set_key(&mut table, key.trim(), parse_value(raw.trim()))?;
        }
        Ok(RunConfig::from_table(table, &base)?)
    }
}

fn generate(args: &GenerateArgs) -> Result<()> {
    let mut spec = match (args.scenario, &args.spec) {
        (Scenario::Custom, Some(path)) => io::load_scenario(path)?,
        (Scenario::Custom, None) => bail!("the custom scenario needs --spec"),
        (_, Some(_)) => bail!("--spec only applies to the custom scenario"),
        (Scenario::Constructed, None) => ScenarioSpec::for_kind(ScenarioKind::Constructed, args.seed)?,
        (Scenario::Copy, None) => ScenarioSpec::for_kind(ScenarioKind::Copy, args.seed)?,
        (Scenario::Random, None) => ScenarioSpec::for_kind(ScenarioKind::Random, args.seed)?,
    };
    if args.no_noise {
        spec.noise.enabled = false;
    }
    if args.no_well_noise {
        spec.noise.well_terms = false;
    }
    let ds = generate_dataset(&spec)?;
    io::write_scenario(&spec, &ds, &args.out)?;
    log::info!("wrote {} wells x {} steps to {}", ds.wells, ds.len(), args.out.display());
    Ok(())
}

fn run(args: &RunArgs) -> Result<()> {
    let cfg = args.config.resolve(None)?;
    let artifacts = io::run(&cfg)?;
    print!("{}", format_table(&[("MAD", &artifacts.evaluation.report)]));
    if !artifacts.output.degenerate_steps.is_empty() {
        log::warn!("filter degenerated at steps {:?}", artifacts.output.degenerate_steps);
    }
    Ok(())
}

fn evaluate(args: &EvaluateArgs) -> Result<()> {
    let cfg = args.config.resolve(Some(&args.run_dir))?;
    let evaluation = io::evaluate_run(&cfg, &args.run_dir)?;
    print!("{}", format_table(&[("MAD", &evaluation.report)]));
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Generate(a) => generate(a),
        Command::Run(a) => run(a),
        Command::Evaluate(a) => evaluate(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            log::error!("{e:#}");
            ExitCode::FAILURE
        }
    }
}
