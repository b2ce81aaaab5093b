//! Input mutation: Gaussian noise for continuous inputs, edit operations for
//! token inputs, and coverage-loss guided greedy search.

use std::collections::BTreeMap;
use std::io::Write;
use std::process::{Command, Stdio};
use std::sync::Arc;

use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::coverage::{ConditionSet, TestCondition};
use crate::error::{Error, Result};
pub use crate::input::InputSequence;
use crate::lstm::{run_model, ModelSpec, Trace};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TokenOp {
    Substitute,
    Insert,
    Swap,
    Delete,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MutationConfig {
    /// Noise standard deviation as a fraction of the clamp width.
    #[serde(default = "MutationConfig::default_sigma")]
    pub gaussian_sigma: f64,
    #[serde(default = "MutationConfig::default_ops")]
    pub token_ops: Vec<TokenOp>,
    #[serde(default)]
    pub substitution_table: BTreeMap<u32, Vec<u32>>,
    #[serde(default)]
    pub rng_seed: u64,
    /// Iteration bound for targeted mutation.
    #[serde(default = "MutationConfig::default_max_iters")]
    pub max_iters: usize,
}

impl MutationConfig {
    fn default_sigma() -> f64 {
        0.05
    }

    fn default_ops() -> Vec<TokenOp> {
        vec![TokenOp::Substitute, TokenOp::Insert, TokenOp::Swap, TokenOp::Delete]
    }

    fn default_max_iters() -> usize {
        100
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.gaussian_sigma.is_finite() && self.gaussian_sigma > 0.0) {
            return Err(Error::Config(format!("gaussian_sigma must be positive, got {}", self.gaussian_sigma)));
        }
        if self.token_ops.contains(&TokenOp::Substitute) {
            if let Some((tok, _)) = self.substitution_table.iter().find(|(_, v)| v.is_empty()) {
                return Err(Error::Config(format!("substitution list for token {tok} is empty")));
            }
        }
        Ok(())
    }
}

impl Default for MutationConfig {
    fn default() -> Self {
        MutationConfig {
            gaussian_sigma: Self::default_sigma(),
            token_ops: Self::default_ops(),
            substitution_table: BTreeMap::new(),
            rng_seed: 0,
            max_iters: Self::default_max_iters(),
        }
    }
}

/// Parses a substitution table file: a JSON object from token id to the ids
/// that may replace it.
pub fn substitution_table_from_slice(bytes: &[u8]) -> Result<BTreeMap<u32, Vec<u32>>> {
    let table: BTreeMap<u32, Vec<u32>> =
        serde_json::from_slice(bytes).map_err(|e| Error::json("substitution table", e))?;
    if let Some((tok, _)) = table.iter().find(|(_, v)| v.is_empty()) {
        return Err(Error::Config(format!("substitution list for token {tok} is empty")));
    }
    Ok(table)
}

/// What a mutation actually did.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Applied {
    Gaussian,
    Token { op: TokenOp, position: usize, fell_back: bool },
    Equivalent,
    Unchanged,
}

pub fn random_mutate<R: Rng + ?Sized>(x: &InputSequence, cfg: &MutationConfig, rng: &mut R) -> InputSequence {
    random_mutate_traced(x, cfg, rng).0
}

pub fn random_mutate_traced<R: Rng + ?Sized>(x: &InputSequence, cfg: &MutationConfig, rng: &mut R) -> (InputSequence, Applied) {
    match x {
        InputSequence::Continuous { values, clamp } => {
            let [lo, hi] = *clamp;
            let sd = cfg.gaussian_sigma * (hi - lo);
            let noise = Normal::new(0.0, sd.max(0.0)).expect("finite sigma");
            let values = values
                .iter()
                .map(|row| row.iter().map(|v| (v + noise.sample(rng)).clamp(lo, hi)).collect())
                .collect();
            (
                InputSequence::Continuous {
                    values,
                    clamp: *clamp,
                },
                Applied::Gaussian,
            )
        }
        InputSequence::Tokens { ids, vocab_size, pad_id } => {
            let mut ops = cfg.token_ops.clone();
            ops.sort();
            ops.dedup();
            if ids.is_empty() || ops.is_empty() {
                return (x.clone(), Applied::Unchanged);
            }
            let mut fell_back = false;
            let mut op = ops[rng.random_range(0..ops.len())];
            let mut p = rng.random_range(0..ids.len());
            if op == TokenOp::Substitute && !cfg.substitution_table.contains_key(&ids[p]) {
                let others: Vec<TokenOp> = ops.iter().copied().filter(|&o| o != TokenOp::Substitute).collect();
                if others.is_empty() {
                    return (x.clone(), Applied::Unchanged);
                }
                op = others[rng.random_range(0..others.len())];
                p = rng.random_range(0..ids.len());
                fell_back = true;
            }
            let mut out = ids.clone();
            match op {
                TokenOp::Substitute => {
                    let subs = &cfg.substitution_table[&ids[p]];
                    out[p] = subs[rng.random_range(0..subs.len())];
                }
                TokenOp::Insert => {
                    out.insert(p, random_token(*vocab_size, *pad_id, rng));
                    out.pop();
                }
                TokenOp::Swap => {
                    if ids.len() > 1 {
                        let mut q = rng.random_range(0..ids.len() - 1);
                        if q >= p {
                            q += 1;
                        }
                        out.swap(p, q);
                    }
                }
                TokenOp::Delete => {
                    out.remove(p);
                    out.push(*pad_id);
                }
            }
            (
                InputSequence::Tokens {
                    ids: out,
                    vocab_size: *vocab_size,
                    pad_id: *pad_id,
                },
                Applied::Token {
                    op,
                    position: p,
                    fell_back,
                },
            )
        }
    }
}

fn random_token<R: Rng + ?Sized>(vocab: u32, pad: u32, rng: &mut R) -> u32 {
    if vocab <= 1 {
        return 0;
    }
    let t = rng.random_range(0..vocab - 1);
    if t >= pad {
        t + 1
    } else {
        t
    }
}

/// A source of semantically equivalent variants of an input, e.g. alternative
/// encodings of the same object.
pub trait EquivalenceSource: Send + Sync {
    fn variants(&self, x: &InputSequence) -> Result<Vec<InputSequence>>;
}

/// Runs an external command: one JSON input on stdin, one JSON variant per
/// stdout line.
#[derive(Debug, Clone)]
pub struct CommandSource {
    pub program: String,
    pub args: Vec<String>,
}

impl CommandSource {
    pub fn from_argv(argv: &[String]) -> Result<Self> {
        let (program, args) = argv
            .split_first()
            .ok_or_else(|| Error::Config("equivalence command is empty".into()))?;
        Ok(CommandSource {
            program: program.clone(),
            args: args.to_vec(),
        })
    }
}

pub fn parse_variants(stdout: &[u8]) -> Result<Vec<InputSequence>> {
    let text = std::str::from_utf8(stdout).map_err(|e| Error::Plugin(format!("output is not UTF-8: {e}")))?;
    text.lines()
        .filter(|l| !l.trim().is_empty())
        .map(|l| serde_json::from_str::<InputSequence>(l).map_err(|e| Error::json("variant", e)))
        .collect()
}

impl EquivalenceSource for CommandSource {
    fn variants(&self, x: &InputSequence) -> Result<Vec<InputSequence>> {
        let mut child = Command::new(&self.program)
            .args(&self.args)
            .stdin(Stdio::piped())
            .stdout(Stdio::piped())
            .stderr(Stdio::inherit())
            .spawn()
            .map_err(|e| Error::Plugin(format!("{}: {e}", self.program)))?;
        let mut line = serde_json::to_string(x).expect("input serializes");
        line.push('\n');
        {
            let mut stdin = child.stdin.take().expect("piped stdin");
            stdin
                .write_all(line.as_bytes())
                .map_err(|e| Error::Plugin(format!("{}: {e}", self.program)))?;
        }
        let out = child
            .wait_with_output()
            .map_err(|e| Error::Plugin(format!("{}: {e}", self.program)))?;
        if !out.status.success() {
            return Err(Error::Plugin(format!("{} exited with {}", self.program, out.status)));
        }
        parse_variants(&out.stdout)
    }
}

/// Fixed lookup from an input to its variants.
#[derive(Debug, Clone, Default)]
pub struct TableSource {
    pub entries: Vec<(InputSequence, Vec<InputSequence>)>,
}

impl EquivalenceSource for TableSource {
    fn variants(&self, x: &InputSequence) -> Result<Vec<InputSequence>> {
        Ok(self
            .entries
            .iter()
            .find(|(k, _)| k == x)
            .map(|(_, v)| v.clone())
            .unwrap_or_default())
    }
}

/// Random mutation, optionally drawing from an equivalence source first.
#[derive(Clone)]
pub struct Mutator {
    pub config: MutationConfig,
    source: Option<Arc<dyn EquivalenceSource>>,
}

impl std::fmt::Debug for Mutator {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Mutator")
            .field("config", &self.config)
            .field("source", &self.source.is_some())
            .finish()
    }
}

impl Mutator {
    pub fn new(config: MutationConfig) -> Self {
        Mutator { config, source: None }
    }

    pub fn with_source(mut self, source: Arc<dyn EquivalenceSource>) -> Self {
        self.source = Some(source);
        self
    }

    /// Picks a valid equivalent variant when a source is configured and
    /// yields one; otherwise applies [`random_mutate`].
    pub fn mutate<R: Rng + ?Sized>(&self, x: &InputSequence, rng: &mut R) -> Result<(InputSequence, Applied)> {
        if let Some(src) = &self.source {
            let variants: Vec<_> = src
                .variants(x)?
                .into_iter()
                .filter(|v| v.len() == x.len() && v.validate().is_ok())
                .collect();
            if !variants.is_empty() {
                let k = rng.random_range(0..variants.len());
                return Ok((variants[k].clone(), Applied::Equivalent));
            }
        }
        Ok(random_mutate_traced(x, &self.config, rng))
    }
}

/// Distance from `trace` to satisfying `condition`.
pub fn coverage_loss(set: &ConditionSet, condition: &TestCondition, trace: &Trace) -> f64 {
    set.loss(condition, &set.features(trace))
}

#[derive(Debug, Clone)]
pub struct TargetedOutcome {
    pub input: InputSequence,
    pub trace: Trace,
    pub loss: f64,
    pub iterations: usize,
    /// Loss of the starting input followed by each accepted candidate's loss.
    pub accepted_losses: Vec<f64>,
}

impl TargetedOutcome {
    pub fn satisfied(&self) -> bool {
        self.loss == 0.0
    }
}

/// Greedy search toward `condition`: mutate the current best, keep the
/// candidate only if its loss is strictly smaller, stop once satisfied or
/// after `max_iters` candidates.
pub fn targeted_mutate<R: Rng + ?Sized>(
    x_best: &InputSequence,
    condition: &TestCondition,
    set: &ConditionSet,
    model: &ModelSpec,
    mutator: &Mutator,
    max_iters: usize,
    rng: &mut R,
) -> Result<TargetedOutcome> {
    let mut best = x_best.clone();
    let mut trace = run_model(model, &best)?;
    let mut loss = coverage_loss(set, condition, &trace);
    let mut accepted_losses = vec![loss];
    let mut iterations = 0;
    while loss > 0.0 && iterations < max_iters {
        let (cand, _) = mutator.mutate(&best, rng)?;
        let cand_trace = run_model(model, &cand)?;
        let cand_loss = coverage_loss(set, condition, &cand_trace);
        if cand_loss < loss {
            best = cand;
            trace = cand_trace;
            loss = cand_loss;
            accepted_losses.push(loss);
        }
        iterations += 1;
    }
    Ok(TargetedOutcome {
        input: best,
        trace,
        loss,
        iterations,
        accepted_losses,
    })
}
