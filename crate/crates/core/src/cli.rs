//! Command-line front end: `thresholds`, `fuzz`, `trace` and `report`.

use std::collections::BTreeMap;
use std::ffi::OsString;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::Arc;

use clap::{Args, Parser, Subcommand};
use serde::{Deserialize, Serialize};

use crate::abstraction::{series, stepwise_change, AbstractionId, ComponentId, SeriesKey, Span};
use crate::coverage::{default_metrics, estimate_thresholds, Bounds, ConditionSet, MetricSpec, ThresholdConfig, Thresholds};
use crate::error::{Error, Result};
use crate::fuzzer::{self, Corpus, FuzzConfig};
use crate::input::InputSequence;
use crate::io::{labeled_inputs_from_slice, load_inputs};
use crate::lstm::{run_model, ModelSpec, Prediction};
use crate::model_io::load_model;
use crate::mutation::{substitution_table_from_slice, CommandSource, MutationConfig, Mutator};

pub const EXIT_OK: u8 = 0;
pub const EXIT_CONFIG: u8 = 1;
pub const EXIT_BUDGET: u8 = 2;

/// Threshold settings applied on top of estimation.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ThresholdOverrides {
    #[serde(default)]
    pub tau: Option<f64>,
    #[serde(default)]
    pub alphabet_size: Option<usize>,
    #[serde(default)]
    pub tc_span: Option<Span>,
    /// Replaces the estimated `v_sc` of a component.
    #[serde(default)]
    pub v_sc: BTreeMap<ComponentId, f64>,
    /// Replaces the estimated bounds of an `"s.a"` series.
    #[serde(default)]
    pub bc: BTreeMap<String, Bounds>,
}

/// One JSON document describing a run. Relative paths resolve against the
/// directory holding the config file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default)]
    pub model_path: Option<PathBuf>,
    #[serde(default)]
    pub seeds_path: Option<PathBuf>,
    #[serde(default)]
    pub training_path: Option<PathBuf>,
    /// Precomputed thresholds; estimated from `training_path` when absent.
    #[serde(default)]
    pub thresholds_path: Option<PathBuf>,
    #[serde(default = "default_metrics")]
    pub metrics: Vec<MetricSpec>,
    #[serde(default)]
    pub thresholds: ThresholdOverrides,
    #[serde(default)]
    pub mutation: MutationConfig,
    #[serde(default)]
    pub substitution_table_path: Option<PathBuf>,
    /// External equivalence mutator: program followed by its arguments.
    #[serde(default)]
    pub equivalence_command: Option<Vec<String>>,
    #[serde(default)]
    pub fuzz: FuzzConfig,
    #[serde(default = "RunConfig::default_output")]
    pub output_dir: PathBuf,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            model_path: None,
            seeds_path: None,
            training_path: None,
            thresholds_path: None,
            metrics: default_metrics(),
            thresholds: ThresholdOverrides::default(),
            mutation: MutationConfig::default(),
            substitution_table_path: None,
            equivalence_command: None,
            fuzz: FuzzConfig::default(),
            output_dir: Self::default_output(),
        }
    }
}

impl RunConfig {
    fn default_output() -> PathBuf {
        PathBuf::from("out")
    }

    pub fn from_slice(bytes: &[u8]) -> Result<Self> {
        serde_json::from_slice(bytes).map_err(|e| Error::json("run config", e))
    }

    /// Loads a config and resolves its relative paths against its directory.
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
        let mut cfg = Self::from_slice(&bytes).map_err(|e| match e {
            Error::Json { source, .. } => Error::Json {
                context: path.display().to_string(),
                source,
            },
            other => other,
        })?;
        let base = path.parent().unwrap_or(Path::new("."));
        cfg.resolve_paths(base);
        Ok(cfg)
    }

    pub fn resolve_paths(&mut self, base: &Path) {
        let fix = |p: &mut Option<PathBuf>| {
            if let Some(q) = p {
                if q.is_relative() {
                    *q = base.join(&*q);
                }
            }
        };
        fix(&mut self.model_path);
        fix(&mut self.seeds_path);
        fix(&mut self.training_path);
        fix(&mut self.thresholds_path);
        fix(&mut self.substitution_table_path);
        if self.output_dir.is_relative() {
            self.output_dir = base.join(&self.output_dir);
        }
    }

    pub fn threshold_config(&self) -> ThresholdConfig {
        let d = ThresholdConfig::default();
        ThresholdConfig {
            tau: self.thresholds.tau.unwrap_or(d.tau),
            alphabet_size: self.thresholds.alphabet_size.unwrap_or(d.alphabet_size),
            tc_span: self.thresholds.tc_span,
            metrics: self.metrics.clone(),
        }
    }

    fn require(p: &Option<PathBuf>, what: &str) -> Result<PathBuf> {
        let p = p
            .clone()
            .ok_or_else(|| Error::Config(format!("{what} is not set")))?;
        if !p.exists() {
            return Err(Error::Config(format!("{what} {} does not exist", p.display())));
        }
        Ok(p)
    }
}

#[derive(Debug, Parser)]
#[command(name = "lstmcov", version, about = "Coverage-guided testing for LSTM networks")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args, Clone, Default)]
pub struct Common {
    /// Run config (JSON).
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Model file; overrides the config.
    #[arg(long)]
    pub model: Option<PathBuf>,
    /// Output file or directory, depending on the command.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// RNG seed for the fuzz loop.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Budget of generated cases.
    #[arg(long)]
    pub max_cases: Option<usize>,
    /// Stop once the overall coverage rate reaches this value.
    #[arg(long)]
    pub target_rate: Option<f64>,
    /// Worker threads; 0 uses every core.
    #[arg(long)]
    pub workers: Option<usize>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Estimate coverage thresholds from the training data.
    Thresholds {
        #[command(flatten)]
        common: Common,
        /// Training inputs (JSON lines); overrides the config.
        #[arg(long)]
        training: Option<PathBuf>,
    },
    /// Generate a test suite and write corpus, report and coverage tables.
    Fuzz {
        #[command(flatten)]
        common: Common,
        /// Seed inputs (JSON lines); overrides the config.
        #[arg(long)]
        seeds: Option<PathBuf>,
        /// Precomputed thresholds; estimated from the training data when absent.
        #[arg(long)]
        thresholds: Option<PathBuf>,
    },
    /// Dump the abstraction series and symbols of one input.
    Trace {
        #[command(flatten)]
        common: Common,
        /// A JSON input, or a JSON-lines file whose first line is used.
        #[arg(long)]
        input: PathBuf,
        /// Thresholds used to symbolize the series.
        #[arg(long)]
        thresholds: Option<PathBuf>,
    },
    /// Replay a corpus and write its ledger and coverage tables.
    Report {
        #[command(flatten)]
        common: Common,
        /// Corpus to replay; defaults to corpus.jsonl in the output directory.
        #[arg(long)]
        corpus: Option<PathBuf>,
        /// Thresholds; defaults to thresholds.json in the output directory.
        #[arg(long)]
        thresholds: Option<PathBuf>,
    },
}

fn base_config(common: &Common) -> Result<RunConfig> {
    let mut cfg = match &common.config {
        Some(p) => RunConfig::load(p)?,
        None => RunConfig::default(),
    };
    if let Some(m) = &common.model {
        cfg.model_path = Some(m.clone());
    }
    if let Some(s) = common.seed {
        cfg.fuzz.rng_seed = s;
    }
    if let Some(n) = common.max_cases {
        cfg.fuzz.max_cases = n;
    }
    if let Some(r) = common.target_rate {
        cfg.fuzz.target_coverage_rate = r;
    }
    if let Some(w) = common.workers {
        cfg.fuzz.worker_count = w;
    }
    Ok(cfg)
}

/// Obtains thresholds from a file or by estimation, then applies overrides.
enum ThresholdSource {
    File(PathBuf),
    Estimate(PathBuf),
}

fn threshold_source(cfg: &RunConfig, flag: &Option<PathBuf>) -> Result<ThresholdSource> {
    if let Some(p) = flag.clone().or_else(|| cfg.thresholds_path.clone()) {
        if !p.exists() {
            return Err(Error::Config(format!("thresholds file {} does not exist", p.display())));
        }
        return Ok(ThresholdSource::File(p));
    }
    Ok(ThresholdSource::Estimate(RunConfig::require(&cfg.training_path, "training_path")?))
}

fn resolve_thresholds(model: &ModelSpec, cfg: &RunConfig, src: &ThresholdSource) -> Result<Thresholds> {
    let mut th = match src {
        ThresholdSource::File(p) => Thresholds::load(p)?,
        ThresholdSource::Estimate(p) => estimate_thresholds(model, &load_inputs(p)?, &cfg.threshold_config())?,
    };
    for (c, v) in &cfg.thresholds.v_sc {
        th.v_sc.insert(*c, *v);
    }
    for (k, b) in &cfg.thresholds.bc {
        th.bc.insert(k.parse::<SeriesKey>()?, *b);
    }
    th.validate()?;
    Ok(th)
}

fn check_common(cfg: &RunConfig, model: &ModelSpec) -> Result<()> {
    cfg.threshold_config().validate(model.n_steps)?;
    cfg.fuzz.validate()?;
    cfg.mutation.validate()?;
    for k in cfg.thresholds.bc.keys() {
        k.parse::<SeriesKey>()?;
    }
    Ok(())
}

fn build_mutator(cfg: &RunConfig) -> Result<Mutator> {
    let mut mc = cfg.mutation.clone();
    if let Some(p) = &cfg.substitution_table_path {
        let bytes = std::fs::read(p).map_err(|e| Error::io(p, e))?;
        mc.substitution_table.extend(substitution_table_from_slice(&bytes)?);
    }
    mc.validate()?;
    let mut m = Mutator::new(mc);
    if let Some(argv) = &cfg.equivalence_command {
        m = m.with_source(Arc::new(CommandSource::from_argv(argv)?));
    }
    Ok(m)
}

fn write_file(path: &Path, body: &str) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    std::fs::write(path, body).map_err(|e| Error::io(path, e))
}

pub fn cmd_thresholds(common: &Common, training: &Option<PathBuf>) -> Result<u8> {
    let mut cfg = base_config(common)?;
    if let Some(t) = training {
        cfg.training_path = Some(t.clone());
    }
    let model = load_model(RunConfig::require(&cfg.model_path, "model_path")?)?;
    let training = RunConfig::require(&cfg.training_path, "training_path")?;
    check_common(&cfg, &model)?;
    let out = common
        .out
        .clone()
        .unwrap_or_else(|| cfg.output_dir.join("thresholds.json"));
    let th = resolve_thresholds(&model, &cfg, &ThresholdSource::Estimate(training))?;
    write_file(&out, &(th.to_json() + "\n"))?;
    println!("wrote {}", out.display());
    Ok(EXIT_OK)
}

pub fn cmd_fuzz(common: &Common, seeds: &Option<PathBuf>, thresholds: &Option<PathBuf>) -> Result<u8> {
    let mut cfg = base_config(common)?;
    if let Some(s) = seeds {
        cfg.seeds_path = Some(s.clone());
    }
    let model = load_model(RunConfig::require(&cfg.model_path, "model_path")?)?;
    let seeds_path = RunConfig::require(&cfg.seeds_path, "seeds_path")?;
    check_common(&cfg, &model)?;
    let src = threshold_source(&cfg, thresholds)?;
    let mutator = build_mutator(&cfg)?;
    let seeds = load_inputs(&seeds_path)?;
    for (k, s) in seeds.iter().enumerate() {
        s.validate_for(&model)
            .map_err(|e| Error::Input(format!("seed {k}: {e}")))?;
    }
    let out = common.out.clone().unwrap_or_else(|| cfg.output_dir.clone());

    let th = resolve_thresholds(&model, &cfg, &src)?;
    let set = ConditionSet::build(&th, &cfg.metrics, model.n_steps)?;
    let mut outcome = fuzzer::run(&model, &seeds, set, &mutator, &cfg.fuzz)?;
    fuzzer::write_outputs(&out, &mut outcome)?;
    write_file(&out.join("thresholds.json"), &(th.to_json() + "\n"))?;
    let r = &outcome.report;
    println!(
        "generated {} cases, coverage {:.4} ({}/{}), adversarial {} (rate {:.4}), target {}",
        r.generated,
        r.coverage_rate,
        r.covered,
        r.conditions,
        r.adversarial_count,
        r.adversary_rate,
        if r.target_reached { "reached" } else { "not reached" }
    );
    Ok(if r.target_reached { EXIT_OK } else { EXIT_BUDGET })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceRow {
    pub t: usize,
    pub h_positive: f64,
    pub h_negative: f64,
    pub h_delta: f64,
    pub f_average: f64,
    /// Symbol of each fitted series at this step.
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub symbols: BTreeMap<String, String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceDump {
    pub prediction: Prediction,
    pub output: Vec<f64>,
    pub rows: Vec<TraceRow>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub span: Option<Span>,
    /// Symbolic word of each fitted series over the span.
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub words: BTreeMap<String, String>,
}

/// Per-step abstraction values of one input, plus symbols when thresholds
/// are given.
pub fn trace_dump(model: &ModelSpec, input: &InputSequence, thresholds: Option<&Thresholds>) -> Result<TraceDump> {
    let trace = run_model(model, input)?;
    let hp = series(&trace, ComponentId::H, AbstractionId::Positive);
    let hn = series(&trace, ComponentId::H, AbstractionId::Negative);
    let fa = series(&trace, ComponentId::F, AbstractionId::Average);
    let delta = stepwise_change(&hp, &hn)?;
    let sym_series: Vec<(String, Vec<f64>, &crate::abstraction::Symbolizer)> = thresholds
        .map(|th| {
            th.symbolizers
                .iter()
                .map(|(k, s)| (k.to_string(), series(&trace, k.component, k.abstraction).values, s))
                .collect()
        })
        .unwrap_or_default();
    let rows = (1..=trace.n_steps())
        .map(|t| TraceRow {
            t,
            h_positive: hp.values[t],
            h_negative: hn.values[t],
            h_delta: delta[t - 1],
            f_average: fa.values[t],
            symbols: sym_series
                .iter()
                .map(|(k, v, s)| (k.clone(), crate::abstraction::render_letters(&[s.symbol(v[t])])))
                .collect(),
        })
        .collect();
    let (span, words) = match thresholds {
        Some(th) => {
            th.tc_span.check(trace.n_steps())?;
            let words = sym_series
                .iter()
                .map(|(k, v, s)| {
                    let w: Vec<u8> = th.tc_span.steps().map(|t| s.symbol(v[t])).collect();
                    (k.clone(), crate::abstraction::render_letters(&w))
                })
                .collect();
            (Some(th.tc_span), words)
        }
        None => (None, BTreeMap::new()),
    };
    Ok(TraceDump {
        prediction: trace.prediction,
        output: trace.output.clone(),
        rows,
        span,
        words,
    })
}

fn read_single_input(path: &Path) -> Result<InputSequence> {
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    if let Ok(x) = serde_json::from_slice::<InputSequence>(&bytes) {
        x.validate()?;
        return Ok(x);
    }
    #[derive(Deserialize)]
    struct Wrapped {
        input: InputSequence,
    }
    if let Ok(w) = serde_json::from_slice::<Wrapped>(&bytes) {
        w.input.validate()?;
        return Ok(w.input);
    }
    labeled_inputs_from_slice(&bytes)?
        .into_iter()
        .next()
        .map(|l| l.input)
        .ok_or_else(|| Error::Input(format!("{} holds no input", path.display())))
}

pub fn cmd_trace(common: &Common, input: &Path, thresholds: &Option<PathBuf>) -> Result<u8> {
    let cfg = base_config(common)?;
    let model = load_model(RunConfig::require(&cfg.model_path, "model_path")?)?;
    let th_path = thresholds.clone().or_else(|| cfg.thresholds_path.clone());
    let th = th_path.map(Thresholds::load).transpose()?;
    let x = read_single_input(input)?;
    x.validate_for(&model)?;
    let dump = trace_dump(&model, &x, th.as_ref())?;
    let body = serde_json::to_string_pretty(&dump).expect("trace serializes") + "\n";
    match &common.out {
        Some(p) => write_file(p, &body)?,
        None => print!("{body}"),
    }
    Ok(EXIT_OK)
}

pub fn cmd_report(common: &Common, corpus: &Option<PathBuf>, thresholds: &Option<PathBuf>) -> Result<u8> {
    let cfg = base_config(common)?;
    let model = load_model(RunConfig::require(&cfg.model_path, "model_path")?)?;
    check_common(&cfg, &model)?;
    let out = common.out.clone().unwrap_or_else(|| cfg.output_dir.clone());
    let corpus_path = corpus.clone().unwrap_or_else(|| out.join("corpus.jsonl"));
    if !corpus_path.exists() {
        return Err(Error::Config(format!("corpus {} does not exist", corpus_path.display())));
    }
    let written = out.join("thresholds.json");
    let flag = thresholds
        .clone()
        .or_else(|| (cfg.thresholds_path.is_none() && written.exists()).then_some(written));
    let src = threshold_source(&cfg, &flag)?;
    let corpus = Corpus::load(&corpus_path)?;
    let th = resolve_thresholds(&model, &cfg, &src)?;
    let set = ConditionSet::build(&th, &cfg.metrics, model.n_steps)?;
    let ledger = fuzzer::replay_ledger(&model, set, &corpus)?;
    write_file(
        &out.join("ledger.json"),
        &(serde_json::to_string_pretty(&ledger.report()).expect("ledger serializes") + "\n"),
    )?;
    write_file(
        &out.join("coverage_times.csv"),
        &fuzzer::coverage_times_csv(&ledger.coverage_times()),
    )?;
    let summary = serde_json::json!({
        "cases": corpus.cases.len(),
        "seed_count": corpus.seed_count,
        "coverage_rate": ledger.coverage_rate(),
        "per_metric": ledger.rates_by_metric().into_iter().collect::<BTreeMap<_, _>>(),
        "adversary_rate": fuzzer::adversary_rate(&corpus),
    });
    println!("{}", serde_json::to_string_pretty(&summary).expect("summary serializes"));
    Ok(EXIT_OK)
}

pub fn execute(cli: &Cli) -> Result<u8> {
    match &cli.command {
        Command::Thresholds { common, training } => cmd_thresholds(common, training),
        Command::Fuzz {
            common,
            seeds,
            thresholds,
        } => cmd_fuzz(common, seeds, thresholds),
        Command::Trace {
            common,
            input,
            thresholds,
        } => cmd_trace(common, input, thresholds),
        Command::Report {
            common,
            corpus,
            thresholds,
        } => cmd_report(common, corpus, thresholds),
    }
}

/// Parses `args`, runs the command and maps failures to exit code 1.
pub fn main_with_args<I, T>(args: I) -> ExitCode
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_CONFIG } else { EXIT_OK };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match execute(&cli) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(EXIT_CONFIG)
        }
    }
}
