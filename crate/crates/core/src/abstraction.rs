//! Scalar abstractions of LSTM components and their symbolic discretization.
//!
//! Every component vector at a step collapses to one number: the sum of its
//! positive entries, the sum of its negative entries, or its mean. Tracking
//! that number across steps gives a series of length `n_steps + 1` whose
//! entry 0 belongs to the zero initial state.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal};

use crate::error::{Error, Result};
use crate::lstm::{StepTrace, Trace};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ComponentId {
    F,
    I,
    O,
    C,
    H,
}

impl ComponentId {
    pub const ALL: [ComponentId; 5] = [ComponentId::F, ComponentId::I, ComponentId::O, ComponentId::C, ComponentId::H];

    pub fn of<'a>(&self, step: &'a StepTrace) -> &'a [f64] {
        match self {
            ComponentId::F => &step.f,
            ComponentId::I => &step.i,
            ComponentId::O => &step.o,
            ComponentId::C => &step.c,
            ComponentId::H => &step.h,
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            ComponentId::F => "f",
            ComponentId::I => "i",
            ComponentId::O => "o",
            ComponentId::C => "c",
            ComponentId::H => "h",
        }
    }

    fn index(&self) -> usize {
        *self as usize
    }
}

impl fmt::Display for ComponentId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ComponentId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        ComponentId::ALL
            .into_iter()
            .find(|c| c.name() == s)
            .ok_or_else(|| Error::Config(format!("unknown component {s:?}")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AbstractionId {
    Positive,
    Negative,
    Average,
}

impl AbstractionId {
    pub const ALL: [AbstractionId; 3] = [AbstractionId::Positive, AbstractionId::Negative, AbstractionId::Average];

    pub fn name(&self) -> &'static str {
        match self {
            AbstractionId::Positive => "positive",
            AbstractionId::Negative => "negative",
            AbstractionId::Average => "average",
        }
    }

    pub fn apply(&self, v: &[f64]) -> f64 {
        match self {
            AbstractionId::Positive => aggregate_positive(v),
            AbstractionId::Negative => aggregate_negative(v),
            AbstractionId::Average => {
                if v.is_empty() {
                    0.0
                } else {
                    v.iter().sum::<f64>() / v.len() as f64
                }
            }
        }
    }

    fn index(&self) -> usize {
        *self as usize
    }
}

impl fmt::Display for AbstractionId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for AbstractionId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "positive" | "+" | "pos" => Ok(AbstractionId::Positive),
            "negative" | "-" | "neg" => Ok(AbstractionId::Negative),
            "average" | "avg" => Ok(AbstractionId::Average),
            _ => Err(Error::Config(format!("unknown abstraction {s:?}"))),
        }
    }
}

/// A (component, abstraction) pair, written `s.a` in files (`h.positive`).
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct SeriesKey {
    pub component: ComponentId,
    pub abstraction: AbstractionId,
}

impl SeriesKey {
    pub fn new(component: ComponentId, abstraction: AbstractionId) -> Self {
        SeriesKey { component, abstraction }
    }

    pub(crate) fn slot(&self) -> usize {
        self.component.index() * 3 + self.abstraction.index()
    }
}

impl fmt::Display for SeriesKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}.{}", self.component, self.abstraction)
    }
}

impl FromStr for SeriesKey {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let (c, a) = s
            .split_once('.')
            .ok_or_else(|| Error::Config(format!("expected `component.abstraction`, got {s:?}")))?;
        Ok(SeriesKey::new(c.parse()?, a.parse()?))
    }
}

/// Sum of strictly positive entries.
pub fn aggregate_positive(v: &[f64]) -> f64 {
    v.iter().filter(|&&x| x > 0.0).fold(0.0, |a, x| a + x)
}

/// Sum of strictly negative entries.
pub fn aggregate_negative(v: &[f64]) -> f64 {
    v.iter().filter(|&&x| x < 0.0).fold(0.0, |a, x| a + x)
}

pub fn gate_average(v: &[f64]) -> Result<f64> {
    if v.is_empty() {
        return Err(Error::Series("average of an empty vector".into()));
    }
    Ok(AbstractionId::Average.apply(v))
}

#[derive(Debug, Clone, PartialEq)]
pub struct AbstractionSeries {
    pub component: ComponentId,
    pub abstraction: AbstractionId,
    /// `values[0]` is the initial state, `values[t]` step `t`.
    pub values: Vec<f64>,
}

impl AbstractionSeries {
    pub fn key(&self) -> SeriesKey {
        SeriesKey::new(self.component, self.abstraction)
    }

    pub fn n_steps(&self) -> usize {
        self.values.len() - 1
    }
}

/// Abstraction series of `s` under `a`. The initial entry is 0 for every pair.
pub fn series(trace: &Trace, s: ComponentId, a: AbstractionId) -> AbstractionSeries {
    let mut values = Vec::with_capacity(trace.steps.len() + 1);
    values.push(0.0);
    values.extend(trace.steps.iter().map(|st| a.apply(s.of(st))));
    AbstractionSeries {
        component: s,
        abstraction: a,
        values,
    }
}

/// `Δξ_t = |ξ⁺_t − ξ⁺_{t−1}| + |ξ⁻_t − ξ⁻_{t−1}|` for `t = 1..n`.
pub fn stepwise_change(plus: &AbstractionSeries, minus: &AbstractionSeries) -> Result<Vec<f64>> {
    if plus.component != minus.component {
        return Err(Error::Series(format!(
            "components differ: {} vs {}",
            plus.component, minus.component
        )));
    }
    if plus.abstraction != AbstractionId::Positive || minus.abstraction != AbstractionId::Negative {
        return Err(Error::Series(format!(
            "expected positive and negative series, got {} and {}",
            plus.abstraction, minus.abstraction
        )));
    }
    if plus.values.len() != minus.values.len() {
        return Err(Error::Series(format!(
            "lengths differ: {} vs {}",
            plus.values.len(),
            minus.values.len()
        )));
    }
    Ok(stepwise_change_values(&plus.values, &minus.values))
}

pub(crate) fn stepwise_change_values(plus: &[f64], minus: &[f64]) -> Vec<f64> {
    (1..plus.len())
        .map(|t| (plus[t] - plus[t - 1]).abs() + (minus[t] - minus[t - 1]).abs())
        .collect()
}

/// Inclusive, 1-based step range.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(from = "[usize; 2]", into = "[usize; 2]")]
pub struct Span {
    pub t1: usize,
    pub t2: usize,
}

impl Span {
    pub fn new(t1: usize, t2: usize) -> Self {
        Span { t1, t2 }
    }

    pub fn len(&self) -> usize {
        (self.t2 + 1).saturating_sub(self.t1)
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn check(&self, n_steps: usize) -> Result<()> {
        if self.t1 >= 1 && self.t1 <= self.t2 && self.t2 <= n_steps {
            Ok(())
        } else {
            Err(Error::Span {
                t1: self.t1,
                t2: self.t2,
                n_steps,
            })
        }
    }

    /// `len` consecutive steps centred in a sequence of `n` (whole sequence if shorter).
    pub fn centered(n: usize, len: usize) -> Span {
        if len >= n {
            return Span::new(1, n);
        }
        let t1 = (n - len) / 2 + 1;
        Span::new(t1, t1 + len - 1)
    }

    pub fn steps(&self) -> std::ops::RangeInclusive<usize> {
        self.t1..=self.t2
    }
}

impl From<[usize; 2]> for Span {
    fn from(v: [usize; 2]) -> Self {
        Span::new(v[0], v[1])
    }
}

impl From<Span> for [usize; 2] {
    fn from(s: Span) -> Self {
        [s.t1, s.t2]
    }
}

impl fmt::Display for Span {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[{},{}]", self.t1, self.t2)
    }
}

/// Symbols render as the letters `a..=z`.
pub const MAX_ALPHABET: usize = 26;

/// Gaussian equiprobable discretizer: `alphabet_size` symbols whose regions
/// each carry probability `1/alphabet_size` under `N(mu, sigma²)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "SymbolizerFile")]
pub struct Symbolizer {
    alphabet_size: usize,
    mu: f64,
    sigma: f64,
    breakpoints: Vec<f64>,
}

#[derive(Deserialize)]
struct SymbolizerFile {
    alphabet_size: usize,
    mu: f64,
    sigma: f64,
    breakpoints: Vec<f64>,
}

impl TryFrom<SymbolizerFile> for Symbolizer {
    type Error = Error;

    fn try_from(f: SymbolizerFile) -> Result<Self> {
        if !(2..=MAX_ALPHABET).contains(&f.alphabet_size) {
            return Err(Error::Fit(format!(
                "alphabet_size must lie in 2..={MAX_ALPHABET}, got {}",
                f.alphabet_size
            )));
        }
        if f.breakpoints.len() != f.alphabet_size - 1 {
            return Err(Error::Fit(format!(
                "expected {} breakpoints, found {}",
                f.alphabet_size - 1,
                f.breakpoints.len()
            )));
        }
        if !f.breakpoints.iter().all(|b| b.is_finite()) || f.breakpoints.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::Fit("breakpoints must be finite and strictly increasing".into()));
        }
        if !(f.mu.is_finite() && f.sigma.is_finite() && f.sigma > 0.0) {
            return Err(Error::Fit(format!("invalid gaussian mu={} sigma={}", f.mu, f.sigma)));
        }
        Ok(Symbolizer {
            alphabet_size: f.alphabet_size,
            mu: f.mu,
            sigma: f.sigma,
            breakpoints: f.breakpoints,
        })
    }
}

impl Symbolizer {
    pub fn new(alphabet_size: usize, mu: f64, sigma: f64) -> Result<Self> {
        if !(2..=MAX_ALPHABET).contains(&alphabet_size) {
            return Err(Error::Fit(format!("alphabet_size must lie in 2..={MAX_ALPHABET}, got {alphabet_size}")));
        }
        let normal = Normal::new(mu, sigma).map_err(|e| Error::Fit(format!("mu={mu} sigma={sigma}: {e}")))?;
        let breakpoints: Vec<f64> = (1..alphabet_size)
            .map(|k| normal.inverse_cdf(k as f64 / alphabet_size as f64))
            .collect();
        if breakpoints.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::Fit(format!("sigma {sigma} too small to separate breakpoints")));
        }
        Ok(Symbolizer {
            alphabet_size,
            mu,
            sigma,
            breakpoints,
        })
    }

    pub fn alphabet_size(&self) -> usize {
        self.alphabet_size
    }

    pub fn mu(&self) -> f64 {
        self.mu
    }

    pub fn sigma(&self) -> f64 {
        self.sigma
    }

    pub fn breakpoints(&self) -> &[f64] {
        &self.breakpoints
    }

    /// Number of breakpoints strictly below `x`.
    pub fn symbol(&self, x: f64) -> u8 {
        self.breakpoints.partition_point(|&b| b < x) as u8
    }
}

/// Fits `N(mean, sample stddev)` to `samples` and places the breakpoints at
/// its `k/alphabet_size` quantiles.
pub fn fit_symbolizer(samples: &[f64], alphabet_size: usize) -> Result<Symbolizer> {
    if samples.len() < 2 {
        return Err(Error::Fit(format!("need at least 2 samples, got {}", samples.len())));
    }
    let n = samples.len() as f64;
    let mu = samples.iter().sum::<f64>() / n;
    let var = samples.iter().map(|x| (x - mu) * (x - mu)).sum::<f64>() / (n - 1.0);
    if !var.is_finite() || var <= 0.0 {
        return Err(Error::Fit("samples have zero variance".into()));
    }
    Symbolizer::new(alphabet_size, mu, var.sqrt())
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct SymbolicWord {
    pub symbols: Vec<u8>,
    pub span: Span,
}

impl SymbolicWord {
    /// Letters `a, b, c, …` for display.
    pub fn letters(&self) -> String {
        render_letters(&self.symbols)
    }

    pub fn hamming(&self, other: &[u8]) -> usize {
        self.symbols.iter().zip(other).filter(|(a, b)| a != b).count()
            + self.symbols.len().abs_diff(other.len())
    }
}

pub fn render_letters(symbols: &[u8]) -> String {
    symbols.iter().map(|&s| (b'a' + s) as char).collect()
}

pub fn symbolize(series: &AbstractionSeries, sym: &Symbolizer, span: Span) -> Result<SymbolicWord> {
    span.check(series.n_steps())?;
    Ok(SymbolicWord {
        symbols: symbolize_values(&series.values, sym, span),
        span,
    })
}

pub(crate) fn symbolize_values(values: &[f64], sym: &Symbolizer, span: Span) -> Vec<u8> {
    span.steps().map(|t| sym.symbol(values[t])).collect()
}
