use std::collections::BTreeMap;
use std::fmt;
use std::fs;
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::abstraction::{fit_symbolizer, MAX_ALPHABET, series, stepwise_change_values, AbstractionId, ComponentId, SeriesKey, Span, Symbolizer};
use crate::error::{Error, Result};
use crate::input::InputSequence;
use crate::lstm::{run_model, ModelSpec};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Metric {
    BC,
    SC,
    TC,
}

impl fmt::Display for Metric {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Metric::BC => "BC",
            Metric::SC => "SC",
            Metric::TC => "TC",
        })
    }
}

/// One enabled metric: BC and TC take a (component, abstraction) pair, SC a
/// component only.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MetricSpec {
    pub metric: Metric,
    pub component: ComponentId,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub abstraction: Option<AbstractionId>,
}

impl MetricSpec {
    pub fn bc(component: ComponentId, abstraction: AbstractionId) -> Self {
        MetricSpec {
            metric: Metric::BC,
            component,
            abstraction: Some(abstraction),
        }
    }

    pub fn sc(component: ComponentId) -> Self {
        MetricSpec {
            metric: Metric::SC,
            component,
            abstraction: None,
        }
    }

    pub fn tc(component: ComponentId, abstraction: AbstractionId) -> Self {
        MetricSpec {
            metric: Metric::TC,
            component,
            abstraction: Some(abstraction),
        }
    }

    pub fn key(&self) -> Result<SeriesKey> {
        match (self.metric, self.abstraction) {
            (Metric::SC, _) => Err(Error::Config("SC has no abstraction".into())),
            (_, Some(a)) => Ok(SeriesKey::new(self.component, a)),
            (m, None) => Err(Error::Config(format!("{m} on {} needs an abstraction", self.component))),
        }
    }

    pub fn validate(&self) -> Result<()> {
        match self.metric {
            Metric::SC if self.abstraction.is_some() => Err(Error::Config(format!(
                "SC on {} takes no abstraction",
                self.component
            ))),
            Metric::SC => Ok(()),
            _ => self.key().map(|_| ()),
        }
    }

    pub fn label(&self) -> String {
        match self.abstraction {
            Some(a) if self.metric != Metric::SC => format!("{}:{}.{}", self.metric, self.component, a),
            _ => format!("{}:{}", self.metric, self.component),
        }
    }
}

/// BC on `f.average`, SC on `h`, TC on `h.positive` and `h.negative`.
pub fn default_metrics() -> Vec<MetricSpec> {
    vec![
        MetricSpec::bc(ComponentId::F, AbstractionId::Average),
        MetricSpec::sc(ComponentId::H),
        MetricSpec::tc(ComponentId::H, AbstractionId::Positive),
        MetricSpec::tc(ComponentId::H, AbstractionId::Negative),
    ]
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ThresholdConfig {
    #[serde(default = "ThresholdConfig::default_tau")]
    pub tau: f64,
    #[serde(default = "ThresholdConfig::default_alphabet")]
    pub alphabet_size: usize,
    /// Defaults to five steps centred in the sequence.
    #[serde(default)]
    pub tc_span: Option<Span>,
    #[serde(default = "default_metrics")]
    pub metrics: Vec<MetricSpec>,
}

impl ThresholdConfig {
    fn default_tau() -> f64 {
        0.8
    }

    fn default_alphabet() -> usize {
        3
    }

    pub fn validate(&self, n_steps: usize) -> Result<()> {
        if !(self.tau > 0.0 && self.tau <= 1.0) {
            return Err(Error::Config(format!("tau must lie in (0, 1], got {}", self.tau)));
        }
        if !(2..=MAX_ALPHABET).contains(&self.alphabet_size) {
            return Err(Error::Config(format!(
                "alphabet_size must lie in 2..={MAX_ALPHABET}, got {}",
                self.alphabet_size
            )));
        }
        if self.metrics.is_empty() {
            return Err(Error::Config("at least one metric must be enabled".into()));
        }
        for m in &self.metrics {
            m.validate()?;
        }
        self.span(n_steps).check(n_steps)
    }

    pub fn span(&self, n_steps: usize) -> Span {
        self.tc_span.unwrap_or_else(|| Span::centered(n_steps, 5))
    }
}

impl Default for ThresholdConfig {
    fn default() -> Self {
        ThresholdConfig {
            tau: Self::default_tau(),
            alphabet_size: Self::default_alphabet(),
            tc_span: None,
            metrics: default_metrics(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Bounds {
    pub v_max: f64,
    pub v_min: f64,
}

/// Estimated thresholds for every enabled metric.
#[derive(Debug, Clone, PartialEq)]
pub struct Thresholds {
    pub tau: f64,
    pub v_sc: BTreeMap<ComponentId, f64>,
    pub bc: BTreeMap<SeriesKey, Bounds>,
    pub symbolizers: BTreeMap<SeriesKey, Symbolizer>,
    pub tc_span: Span,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ThresholdsFile {
    tau: f64,
    v_sc: BTreeMap<String, f64>,
    bc: BTreeMap<String, Bounds>,
    symbolizers: BTreeMap<String, Symbolizer>,
    tc_span: Span,
}

impl Thresholds {
    pub fn validate(&self) -> Result<()> {
        if !(self.tau > 0.0 && self.tau <= 1.0) {
            return Err(Error::Config(format!("tau must lie in (0, 1], got {}", self.tau)));
        }
        for (c, v) in &self.v_sc {
            if !(v.is_finite() && *v > 0.0) {
                return Err(Error::Config(format!("v_sc.{c} must be positive, got {v}")));
            }
        }
        for (k, b) in &self.bc {
            if !(b.v_min.is_finite() && b.v_max.is_finite() && b.v_min <= b.v_max) {
                return Err(Error::Config(format!("bc.{k}: need v_min <= v_max, got {b:?}")));
            }
        }
        if self.tc_span.t1 < 1 || self.tc_span.t1 > self.tc_span.t2 {
            return Err(Error::Config(format!("invalid tc_span {}", self.tc_span)));
        }
        Ok(())
    }

    pub fn to_json(&self) -> String {
        let file = ThresholdsFile {
            tau: self.tau,
            v_sc: self.v_sc.iter().map(|(k, v)| (k.to_string(), *v)).collect(),
            bc: self.bc.iter().map(|(k, v)| (k.to_string(), *v)).collect(),
            symbolizers: self.symbolizers.iter().map(|(k, v)| (k.to_string(), v.clone())).collect(),
            tc_span: self.tc_span,
        };
        serde_json::to_string_pretty(&file).expect("thresholds serialize")
    }

    pub fn from_slice(bytes: &[u8]) -> Result<Self> {
        let f: ThresholdsFile = serde_json::from_slice(bytes).map_err(|e| Error::json("thresholds", e))?;
        let v_sc = f
            .v_sc
            .into_iter()
            .map(|(k, v)| Ok((k.parse::<ComponentId>()?, v)))
            .collect::<Result<_>>()?;
        let bc = f
            .bc
            .into_iter()
            .map(|(k, v)| Ok((k.parse::<SeriesKey>()?, v)))
            .collect::<Result<_>>()?;
        let symbolizers = f
            .symbolizers
            .into_iter()
            .map(|(k, v)| Ok((k.parse::<SeriesKey>()?, v)))
            .collect::<Result<_>>()?;
        let t = Thresholds {
            tau: f.tau,
            v_sc,
            bc,
            symbolizers,
            tc_span: f.tc_span,
        };
        t.validate()?;
        Ok(t)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
        Self::from_slice(&bytes)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        fs::write(path, self.to_json()).map_err(|e| Error::io(path, e))
    }
}

/// Measures thresholds over the training traces.
///
/// `v_max`/`v_min` are the extremes of the series over steps `1..=n`,
/// `v_sc = tau · max Δξ`, and each TC symbolizer is fitted to the pooled
/// series values inside the span.
pub fn estimate_thresholds(model: &ModelSpec, training: &[InputSequence], config: &ThresholdConfig) -> Result<Thresholds> {
    if training.is_empty() {
        return Err(Error::Estimation("training set is empty".into()));
    }
    let n = model.n_steps;
    config.validate(n)?;
    let span = config.span(n);

    let traces = training
        .par_iter()
        .enumerate()
        .map(|(k, x)| run_model(model, x).map_err(|e| Error::Estimation(format!("training input {k}: {e}"))))
        .collect::<Result<Vec<_>>>()?;

    let mut bc = BTreeMap::new();
    let mut v_sc = BTreeMap::new();
    let mut symbolizers = BTreeMap::new();
    for spec in &config.metrics {
        match spec.metric {
            Metric::BC => {
                let key = spec.key()?;
                if bc.contains_key(&key) {
                    continue;
                }
                let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
                for tr in &traces {
                    let s = series(tr, key.component, key.abstraction);
                    for &v in &s.values[1..] {
                        lo = lo.min(v);
                        hi = hi.max(v);
                    }
                }
                bc.insert(key, Bounds { v_max: hi, v_min: lo });
            }
            Metric::SC => {
                let c = spec.component;
                if v_sc.contains_key(&c) {
                    continue;
                }
                let mut max_delta = 0.0f64;
                for tr in &traces {
                    let p = series(tr, c, AbstractionId::Positive);
                    let m = series(tr, c, AbstractionId::Negative);
                    for d in stepwise_change_values(&p.values, &m.values) {
                        max_delta = max_delta.max(d);
                    }
                }
                let v = config.tau * max_delta;
                if v.is_nan() || v <= 0.0 {
                    return Err(Error::Estimation(format!(
                        "SC on {c}: step-wise change is identically zero over the training set"
                    )));
                }
                v_sc.insert(c, v);
            }
            Metric::TC => {
                let key = spec.key()?;
                if symbolizers.contains_key(&key) {
                    continue;
                }
                let pooled: Vec<f64> = traces
                    .iter()
                    .flat_map(|tr| {
                        let s = series(tr, key.component, key.abstraction);
                        span.steps().map(move |t| s.values[t])
                    })
                    .collect();
                let sym = fit_symbolizer(&pooled, config.alphabet_size)
                    .map_err(|e| Error::Estimation(format!("TC on {key}: {e}")))?;
                symbolizers.insert(key, sym);
            }
        }
    }
    Ok(Thresholds {
        tau: config.tau,
        v_sc,
        bc,
        symbolizers,
        tc_span: span,
    })
}
