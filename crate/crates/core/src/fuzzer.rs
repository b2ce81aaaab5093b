//! The testing loop: evaluate seeds, then repeatedly select, mutate,
//! evaluate, record coverage and check the oracle until the target coverage
//! rate is reached or the case budget runs out.

use std::collections::BTreeMap;
use std::path::Path;
use std::time::{Duration, Instant};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::coverage::{ConditionSet, CoverageLedger, CoverageTimesRow, TraceFeatures};
use crate::error::{Error, Result};
use crate::input::InputSequence;
use crate::lstm::{run_model, ModelSpec, Prediction};
use crate::mutation::{targeted_mutate, MutationConfig, Mutator};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TestCase {
    pub id: u64,
    pub input: InputSequence,
    /// Seed this case descends from; seeds point at themselves.
    pub origin_id: u64,
    pub prediction: Prediction,
    pub distance_to_origin: f64,
    /// Condition ids first covered by this case.
    pub satisfied_new: Vec<usize>,
    #[serde(default)]
    pub adversarial: bool,
}

impl TestCase {
    pub fn is_seed(&self) -> bool {
        self.id == self.origin_id
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Corpus {
    pub cases: Vec<TestCase>,
    pub seed_count: usize,
    pub adversarial_ids: Vec<u64>,
}

impl Corpus {
    pub fn seeds(&self) -> &[TestCase] {
        &self.cases[..self.seed_count]
    }

    pub fn generated(&self) -> &[TestCase] {
        &self.cases[self.seed_count..]
    }

    pub fn origin(&self, case: &TestCase) -> &TestCase {
        &self.cases[case.origin_id as usize]
    }

    pub fn to_jsonl(&self) -> String {
        let mut s = String::new();
        for c in &self.cases {
            s.push_str(&serde_json::to_string(c).expect("test case serializes"));
            s.push('\n');
        }
        s
    }

    /// Parses a corpus file, checking ids run 0.. in order, seeds come first
    /// and every origin resolves to a seed.
    pub fn from_jsonl(bytes: &[u8]) -> Result<Self> {
        let text = std::str::from_utf8(bytes).map_err(|e| Error::Input(format!("corpus is not UTF-8: {e}")))?;
        let mut cases = Vec::new();
        for (k, line) in text.lines().enumerate() {
            if line.trim().is_empty() {
                continue;
            }
            let case: TestCase = serde_json::from_str(line).map_err(|e| Error::json(format!("corpus line {}", k + 1), e))?;
            cases.push(case);
        }
        let seed_count = cases.iter().take_while(|c| c.is_seed()).count();
        for (k, c) in cases.iter().enumerate() {
            if c.id != k as u64 {
                return Err(Error::Input(format!("corpus case {k} has id {}", c.id)));
            }
            if (c.origin_id as usize) >= seed_count {
                return Err(Error::Input(format!(
                    "case {} has origin {} which is not a seed",
                    c.id, c.origin_id
                )));
            }
            c.input
                .validate()
                .map_err(|e| Error::Input(format!("case {}: {e}", c.id)))?;
        }
        let adversarial_ids = cases.iter().filter(|c| c.adversarial).map(|c| c.id).collect();
        Ok(Corpus {
            cases,
            seed_count,
            adversarial_ids,
        })
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
        Self::from_jsonl(&bytes)
    }
}

/// Selection weights for closeness to unfulfilled conditions, adversarial
/// cases, and new coverage.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Weights {
    pub closeness: f64,
    pub adversarial: f64,
    pub novelty: f64,
}

impl Default for Weights {
    fn default() -> Self {
        Weights {
            closeness: 1.0,
            adversarial: 2.0,
            novelty: 1.0,
        }
    }
}

mod radius {
    use serde::{Deserialize, Deserializer, Serializer};

    #[derive(Deserialize)]
    #[serde(untagged)]
    enum Raw {
        Num(f64),
        Text(String),
    }

    pub fn serialize<S: Serializer>(v: &Option<f64>, s: S) -> Result<S::Ok, S::Error> {
        match v {
            Some(a) => s.serialize_f64(*a),
            None => s.serialize_str("inf"),
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Option<f64>, D::Error> {
        match Option::<Raw>::deserialize(d)? {
            None => Ok(None),
            Some(Raw::Num(a)) => Ok(Some(a)),
            Some(Raw::Text(t)) if matches!(t.as_str(), "inf" | "infinity" | "unbounded") => Ok(None),
            Some(Raw::Text(t)) => Err(serde::de::Error::custom(format!("invalid oracle radius {t:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FuzzConfig {
    /// `None` (written as `"inf"`) removes the distance constraint.
    #[serde(default = "FuzzConfig::default_radius", with = "radius")]
    pub oracle_radius: Option<f64>,
    #[serde(default = "FuzzConfig::default_target")]
    pub target_coverage_rate: f64,
    #[serde(default = "FuzzConfig::default_max_cases")]
    pub max_cases: usize,
    /// Random-phase cases after which targeted mutation is used whenever
    /// coverage does not improve.
    #[serde(default)]
    pub random_phase_budget: Option<usize>,
    #[serde(default = "FuzzConfig::default_stall")]
    pub stall_window: usize,
    #[serde(default = "FuzzConfig::default_epsilon")]
    pub regression_epsilon: f64,
    #[serde(default)]
    pub rng_seed: u64,
    /// Zero uses all cores.
    #[serde(default)]
    pub worker_count: usize,
    /// Cases evaluated per round; results do not depend on `worker_count`.
    #[serde(default = "FuzzConfig::default_batch")]
    pub batch_size: usize,
    #[serde(default = "FuzzConfig::default_targeted")]
    pub targeted: bool,
    #[serde(default)]
    pub weights: Weights,
}

impl FuzzConfig {
    fn default_radius() -> Option<f64> {
        Some(0.005)
    }
    fn default_target() -> f64 {
        1.0
    }
    fn default_max_cases() -> usize {
        2000
    }
    fn default_stall() -> usize {
        200
    }
    fn default_epsilon() -> f64 {
        0.1
    }
    fn default_batch() -> usize {
        8
    }
    fn default_targeted() -> bool {
        true
    }

    pub fn validate(&self) -> Result<()> {
        if let Some(a) = self.oracle_radius {
            if a.is_nan() || a < 0.0 {
                return Err(Error::Config(format!("oracle_radius must be >= 0, got {a}")));
            }
        }
        if !(self.target_coverage_rate > 0.0 && self.target_coverage_rate <= 1.0) {
            return Err(Error::Config(format!(
                "target_coverage_rate must lie in (0, 1], got {}",
                self.target_coverage_rate
            )));
        }
        if self.stall_window == 0 {
            return Err(Error::Config("stall_window must be positive".into()));
        }
        if self.batch_size == 0 {
            return Err(Error::Config("batch_size must be positive".into()));
        }
        if !(self.regression_epsilon >= 0.0 && self.regression_epsilon.is_finite()) {
            return Err(Error::Config(format!(
                "regression_epsilon must be finite and >= 0, got {}",
                self.regression_epsilon
            )));
        }
        let w = self.weights;
        if [w.closeness, w.adversarial, w.novelty].iter().any(|v| !(v.is_finite() && *v >= 0.0)) {
            return Err(Error::Config("selection weights must be finite and >= 0".into()));
        }
        Ok(())
    }
}

impl Default for FuzzConfig {
    fn default() -> Self {
        FuzzConfig {
            oracle_radius: Self::default_radius(),
            target_coverage_rate: Self::default_target(),
            max_cases: Self::default_max_cases(),
            random_phase_budget: None,
            stall_window: Self::default_stall(),
            regression_epsilon: Self::default_epsilon(),
            rng_seed: 0,
            worker_count: 0,
            batch_size: Self::default_batch(),
            targeted: Self::default_targeted(),
            weights: Weights::default(),
        }
    }
}

/// Class change, or a regression output moving by more than `epsilon`.
pub fn predictions_differ(a: Prediction, b: Prediction, epsilon: f64) -> bool {
    match (a, b) {
        (Prediction::Class(x), Prediction::Class(y)) => x != y,
        (Prediction::Value(x), Prediction::Value(y)) => (x - y).abs() > epsilon,
        _ => true,
    }
}

/// True when `candidate` fails the oracle: it lies within `radius` of its
/// seed yet the prediction differs.
pub fn fails_oracle(candidate: &TestCase, seed: &TestCase, radius: Option<f64>, epsilon: f64) -> bool {
    if candidate.is_seed() {
        return false;
    }
    let within = match radius {
        None => true,
        Some(a) => candidate.input.distance(&seed.input) <= a,
    };
    within && predictions_differ(candidate.prediction, seed.prediction, epsilon)
}

pub fn oracle_check(candidate: &TestCase, seed: &TestCase, cfg: &FuzzConfig) -> bool {
    fails_oracle(candidate, seed, cfg.oracle_radius, cfg.regression_epsilon)
}

/// Adversarial ids of a fixed corpus under a different oracle radius.
pub fn adversarial_at(corpus: &Corpus, radius: Option<f64>, epsilon: f64) -> Vec<u64> {
    corpus
        .generated()
        .iter()
        .filter(|c| fails_oracle(c, corpus.origin(c), radius, epsilon))
        .map(|c| c.id)
        .collect()
}

/// |adversarial| / |generated|; seeds are excluded from the denominator.
pub fn adversary_rate(corpus: &Corpus) -> f64 {
    let generated = corpus.cases.len() - corpus.seed_count;
    if generated == 0 {
        return 0.0;
    }
    corpus.adversarial_ids.len() as f64 / generated as f64
}

/// Smallest loss over unfulfilled conditions, with the condition attaining it
/// (lowest id on ties).
pub fn min_unfulfilled_loss(ledger: &CoverageLedger, features: &TraceFeatures) -> Option<(f64, usize)> {
    let set = ledger.conditions();
    let mut best: Option<(f64, usize)> = None;
    for id in ledger.unfulfilled() {
        let l = set.loss(&set.conditions[id], features);
        if best.is_none_or(|(b, _)| l < b) {
            best = Some((l, id));
        }
    }
    best
}

pub fn selection_score(case: &TestCase, min_loss: Option<f64>, w: &Weights) -> f64 {
    let closeness = min_loss.map_or(0.0, |l| 1.0 / (1.0 + l));
    let adversarial = if case.adversarial { 1.0 } else { 0.0 };
    let novelty = (case.satisfied_new.len() as f64).ln_1p();
    w.closeness * closeness + w.adversarial * adversarial + w.novelty * novelty
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoverageLogEntry {
    /// Generated cases so far (seeds excluded).
    pub generated: usize,
    pub coverage_rate: f64,
    pub per_metric: BTreeMap<String, f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub seed_count: usize,
    pub generated: usize,
    pub random_cases: usize,
    pub targeted_cases: usize,
    pub conditions: usize,
    pub covered: usize,
    pub coverage_rate: f64,
    pub per_metric: BTreeMap<String, f64>,
    pub target_reached: bool,
    pub adversarial_count: usize,
    pub adversary_rate: f64,
    pub adversarial_ids: Vec<u64>,
    pub coverage_log: Vec<CoverageLogEntry>,
    pub coverage_times: Vec<CoverageTimesRow>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub adversarial_dump: Option<String>,
    pub fuzz_config: FuzzConfig,
    pub mutation_config: MutationConfig,
    /// Kept out of the JSON document so repeated runs compare equal.
    #[serde(skip)]
    pub wall_clock: Duration,
}

#[derive(Debug, Clone)]
pub struct FuzzOutcome {
    pub corpus: Corpus,
    pub report: RunReport,
    pub ledger: CoverageLedger,
}

struct Entry {
    features: TraceFeatures,
    min_loss: Option<(f64, usize)>,
    stale: bool,
    score: f64,
    selected: u64,
}

enum Job {
    Random { parent: usize, index: u64 },
    Targeted { condition: usize, start: usize, index: u64 },
}

impl Job {
    fn root(&self) -> usize {
        match *self {
            Job::Random { parent, .. } => parent,
            Job::Targeted { start, .. } => start,
        }
    }
}

struct Evaluated {
    input: InputSequence,
    prediction: Prediction,
    features: TraceFeatures,
    satisfied: Vec<usize>,
}

fn job_rng(fuzz_seed: u64, mutation_seed: u64, index: u64) -> ChaCha8Rng {
    let mut key = [0u8; 32];
    key[..8].copy_from_slice(&fuzz_seed.to_le_bytes());
    key[8..16].copy_from_slice(&mutation_seed.to_le_bytes());
    let mut rng = ChaCha8Rng::from_seed(key);
    rng.set_stream(index);
    rng
}

fn evaluate(model: &ModelSpec, set: &ConditionSet, input: InputSequence) -> Result<Evaluated> {
    let trace = run_model(model, &input)?;
    let features = set.features(&trace);
    let satisfied = set.evaluate_features(&features);
    Ok(Evaluated {
        input,
        prediction: trace.prediction,
        features,
        satisfied,
    })
}

fn log_entry(ledger: &CoverageLedger, generated: usize) -> CoverageLogEntry {
    CoverageLogEntry {
        generated,
        coverage_rate: ledger.coverage_rate(),
        per_metric: ledger.rates_by_metric().into_iter().collect(),
    }
}

/// Runs the testing loop from `seeds`.
///
/// Random mutation is used until overall coverage has not improved for
/// `stall_window` generated cases; then each round targets the least-tried
/// unfulfilled conditions until coverage improves again. Rounds of
/// `batch_size` jobs are evaluated in parallel and applied in submission
/// order, so the outcome depends only on the seeds and configuration.
pub fn run(model: &ModelSpec, seeds: &[InputSequence], set: ConditionSet, mutator: &Mutator, cfg: &FuzzConfig) -> Result<FuzzOutcome> {
    let started = Instant::now();
    cfg.validate()?;
    mutator.config.validate()?;
    if seeds.is_empty() {
        return Err(Error::Config("seed set is empty".into()));
    }
    if set.n_steps != model.n_steps {
        return Err(Error::Config(format!(
            "conditions built for {} steps, model has {}",
            set.n_steps, model.n_steps
        )));
    }
    for (k, s) in seeds.iter().enumerate() {
        s.validate_for(model)
            .map_err(|e| Error::Input(format!("seed {k}: {e}")))?;
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cfg.worker_count)
        .build()
        .map_err(|e| Error::Config(format!("worker pool: {e}")))?;

    let mut ledger = CoverageLedger::new(set);
    let mut cases: Vec<TestCase> = Vec::new();
    let mut entries: Vec<Entry> = Vec::new();

    let evaluated: Vec<Result<Evaluated>> = pool.install(|| {
        seeds
            .par_iter()
            .map(|s| evaluate(model, ledger.conditions(), s.clone()))
            .collect()
    });
    for ev in evaluated {
        let ev = ev?;
        let id = cases.len() as u64;
        let fresh = ledger.update(&ev.satisfied, id);
        cases.push(TestCase {
            id,
            input: ev.input,
            origin_id: id,
            prediction: ev.prediction,
            distance_to_origin: 0.0,
            satisfied_new: fresh,
            adversarial: false,
        });
        entries.push(Entry {
            features: ev.features,
            min_loss: None,
            stale: true,
            score: 0.0,
            selected: 0,
        });
    }
    let seed_count = cases.len();

    let mut log = vec![log_entry(&ledger, 0)];
    let mut attempts = vec![0u64; ledger.conditions().len()];
    let (mut generated, mut random_cases, mut targeted_cases, mut stall) = (0usize, 0usize, 0usize, 0usize);
    let mut adversarial_ids = Vec::new();
    let mut reached = ledger.coverage_rate() >= cfg.target_coverage_rate;

    while !reached && generated < cfg.max_cases {
        let n_jobs = cfg.batch_size.min(cfg.max_cases - generated);
        let budget_spent = cfg.random_phase_budget.is_some_and(|b| random_cases >= b);
        let unfulfilled: Vec<usize> = ledger.unfulfilled().collect();
        let targeted = cfg.targeted && (stall >= cfg.stall_window || budget_spent) && !unfulfilled.is_empty();

        let jobs: Vec<Job> = if targeted {
            (0..n_jobs)
                .map(|k| {
                    let &condition = unfulfilled
                        .iter()
                        .min_by_key(|&&id| (attempts[id], id))
                        .expect("unfulfilled is non-empty");
                    attempts[condition] += 1;
                    let cond = &ledger.conditions().conditions[condition];
                    let start = closest_case(&ledger, &entries, cond);
                    Job::Targeted {
                        condition,
                        start,
                        index: (generated + k) as u64,
                    }
                })
                .collect()
        } else {
            rescore(&pool, &ledger, &cases, &mut entries, &cfg.weights);
            (0..n_jobs)
                .map(|k| {
                    let parent = pick(&mut entries);
                    Job::Random {
                        parent,
                        index: (generated + k) as u64,
                    }
                })
                .collect()
        };

        let set = ledger.conditions();
        let results: Vec<Result<Evaluated>> = pool.install(|| {
            jobs.par_iter()
                .map(|job| match *job {
                    Job::Random { parent, index } => {
                        let mut rng = job_rng(cfg.rng_seed, mutator.config.rng_seed, index);
                        let (x, _) = mutator.mutate(&cases[parent].input, &mut rng)?;
                        evaluate(model, set, x)
                    }
                    Job::Targeted { condition, start, index } => {
                        let mut rng = job_rng(cfg.rng_seed, mutator.config.rng_seed, index);
                        let out = targeted_mutate(
                            &cases[start].input,
                            &set.conditions[condition],
                            set,
                            model,
                            mutator,
                            mutator.config.max_iters,
                            &mut rng,
                        )?;
                        let features = set.features(&out.trace);
                        let satisfied = set.evaluate_features(&features);
                        Ok(Evaluated {
                            input: out.input,
                            prediction: out.trace.prediction,
                            features,
                            satisfied,
                        })
                    }
                })
                .collect()
        });

        for (job, ev) in jobs.iter().zip(results) {
            let ev = ev?;
            let id = cases.len() as u64;
            let origin = &cases[cases[job.root()].origin_id as usize];
            let distance_to_origin = ev.input.distance(&origin.input);
            let origin_id = origin.id;
            let fresh = ledger.update(&ev.satisfied, id);
            let mut case = TestCase {
                id,
                input: ev.input,
                origin_id,
                prediction: ev.prediction,
                distance_to_origin,
                satisfied_new: fresh,
                adversarial: false,
            };
            case.adversarial = oracle_check(&case, &cases[origin_id as usize], cfg);
            if case.adversarial {
                adversarial_ids.push(id);
            }
            generated += 1;
            match job {
                Job::Random { .. } => random_cases += 1,
                Job::Targeted { .. } => targeted_cases += 1,
            }
            let improved = !case.satisfied_new.is_empty();
            cases.push(case);
            entries.push(Entry {
                features: ev.features,
                min_loss: None,
                stale: true,
                score: 0.0,
                selected: 0,
            });
            if improved {
                stall = 0;
                log.push(log_entry(&ledger, generated));
            } else {
                stall += 1;
            }
            if ledger.coverage_rate() >= cfg.target_coverage_rate {
                reached = true;
                break;
            }
        }
    }
    if log.last().map(|e| e.generated) != Some(generated) {
        log.push(log_entry(&ledger, generated));
    }

    let corpus = Corpus {
        cases,
        seed_count,
        adversarial_ids,
    };
    let report = RunReport {
        seed_count,
        generated,
        random_cases,
        targeted_cases,
        conditions: ledger.conditions().len(),
        covered: ledger.covered(),
        coverage_rate: ledger.coverage_rate(),
        per_metric: ledger.rates_by_metric().into_iter().collect(),
        target_reached: reached,
        adversarial_count: corpus.adversarial_ids.len(),
        adversary_rate: adversary_rate(&corpus),
        adversarial_ids: corpus.adversarial_ids.clone(),
        coverage_log: log,
        coverage_times: ledger.coverage_times(),
        adversarial_dump: None,
        fuzz_config: cfg.clone(),
        mutation_config: mutator.config.clone(),
        wall_clock: started.elapsed(),
    };
    Ok(FuzzOutcome { corpus, report, ledger })
}

/// Corpus element closest to satisfying `cond`, lowest id on ties.
fn closest_case(ledger: &CoverageLedger, entries: &[Entry], cond: &crate::coverage::TestCondition) -> usize {
    let set = ledger.conditions();
    let mut best = (f64::INFINITY, 0);
    for (k, e) in entries.iter().enumerate() {
        let l = set.loss(cond, &e.features);
        if l < best.0 {
            best = (l, k);
        }
    }
    best.1
}

fn rescore(pool: &rayon::ThreadPool, ledger: &CoverageLedger, cases: &[TestCase], entries: &mut [Entry], w: &Weights) {
    pool.install(|| {
        entries.par_iter_mut().zip(cases).for_each(|(e, case)| {
            // the unfulfilled set only shrinks, so a still-unfulfilled argmin stays minimal
            let keep = !e.stale && e.min_loss.is_some_and(|(_, id)| !ledger.is_covered(id));
            if !keep {
                e.min_loss = min_unfulfilled_loss(ledger, &e.features);
                e.stale = false;
            }
            e.score = selection_score(case, e.min_loss.map(|(l, _)| l), w);
        })
    });
}

/// Highest `score / (1 + times selected)`, lowest id on ties.
fn pick(entries: &mut [Entry]) -> usize {
    let mut best = (f64::NEG_INFINITY, 0);
    for (k, e) in entries.iter().enumerate() {
        let p = e.score / (1.0 + e.selected as f64);
        if p > best.0 {
            best = (p, k);
        }
    }
    entries[best.1].selected += 1;
    best.1
}

/// Re-evaluates every corpus case in id order against `set`.
pub fn replay_ledger(model: &ModelSpec, set: ConditionSet, corpus: &Corpus) -> Result<CoverageLedger> {
    let mut ledger = CoverageLedger::new(set);
    let satisfied: Vec<Result<Vec<usize>>> = corpus
        .cases
        .par_iter()
        .map(|c| {
            let tr = run_model(model, &c.input)?;
            Ok(ledger.conditions().evaluate_features(&ledger.conditions().features(&tr)))
        })
        .collect();
    for (c, s) in corpus.cases.iter().zip(satisfied) {
        ledger.update(&s?, c.id);
    }
    Ok(ledger)
}

pub fn coverage_times_csv(rows: &[CoverageTimesRow]) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["metric", "component", "abstraction", "t", "hit_count"])
        .expect("in-memory write");
    for r in rows {
        w.write_record([
            r.metric.to_string(),
            r.component.clone(),
            r.abstraction.clone(),
            r.t.to_string(),
            r.hit_count.to_string(),
        ])
        .expect("in-memory write");
    }
    String::from_utf8(w.into_inner().expect("in-memory flush")).expect("ascii csv")
}

/// Writes `corpus.jsonl`, `adversarial.jsonl`, `report.json`,
/// `coverage_times.csv`, `ledger.json` and `timing.json` into `dir`.
pub fn write_outputs(dir: &Path, outcome: &mut FuzzOutcome) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let write = |name: &str, body: String| {
        let p = dir.join(name);
        std::fs::write(&p, body).map_err(|e| Error::io(p, e))
    };
    write("corpus.jsonl", outcome.corpus.to_jsonl())?;
    let mut adv = String::new();
    for id in &outcome.corpus.adversarial_ids {
        adv.push_str(&serde_json::to_string(&outcome.corpus.cases[*id as usize]).expect("test case serializes"));
        adv.push('\n');
    }
    write("adversarial.jsonl", adv)?;
    outcome.report.adversarial_dump = Some("adversarial.jsonl".into());
    write("report.json", serde_json::to_string_pretty(&outcome.report).expect("report serializes") + "\n")?;
    write("coverage_times.csv", coverage_times_csv(&outcome.report.coverage_times))?;
    write(
        "ledger.json",
        serde_json::to_string_pretty(&outcome.ledger.report()).expect("ledger serializes") + "\n",
    )?;
    write(
        "timing.json",
        serde_json::json!({ "wall_clock_secs": outcome.report.wall_clock.as_secs_f64() }).to_string() + "\n",
    )
}
