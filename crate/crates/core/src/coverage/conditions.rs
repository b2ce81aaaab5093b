use std::collections::BTreeMap;

use serde::Serialize;

use super::thresholds::{Metric, MetricSpec, Thresholds};
use crate::abstraction::{render_letters, stepwise_change_values, symbolize_values, AbstractionId, ComponentId, SeriesKey, Span, Symbolizer};
use crate::error::{Error, Result};
use crate::lstm::Trace;

pub const DEFAULT_CONDITION_CAP: usize = 1_000_000;

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ConditionKind {
    BcUpper { key: SeriesKeyJson, t: usize, v_max: f64 },
    BcLower { key: SeriesKeyJson, t: usize, v_min: f64 },
    Sc { component: ComponentId, t: usize, v_sc: f64 },
    Tc { key: SeriesKeyJson, span: Span, word: Vec<u8> },
}

/// [`SeriesKey`] rendered as `"s.a"` in JSON.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct SeriesKeyJson(pub SeriesKey);

impl Serialize for SeriesKeyJson {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_str(&self.0)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TestCondition {
    pub id: usize,
    /// Index of the metric this condition belongs to in [`ConditionSet::metrics`].
    pub group: usize,
    #[serde(flatten)]
    pub kind: ConditionKind,
}

impl TestCondition {
    pub fn kind_name(&self) -> &'static str {
        match self.kind {
            ConditionKind::BcUpper { .. } => "bc_upper",
            ConditionKind::BcLower { .. } => "bc_lower",
            ConditionKind::Sc { .. } => "sc",
            ConditionKind::Tc { .. } => "tc",
        }
    }

    /// Step for BC/SC conditions; `None` for TC.
    pub fn step(&self) -> Option<usize> {
        match self.kind {
            ConditionKind::BcUpper { t, .. } | ConditionKind::BcLower { t, .. } | ConditionKind::Sc { t, .. } => Some(t),
            ConditionKind::Tc { .. } => None,
        }
    }

    pub fn t_or_span(&self) -> serde_json::Value {
        match &self.kind {
            ConditionKind::Tc { span, .. } => serde_json::json!([span.t1, span.t2]),
            _ => serde_json::json!(self.step()),
        }
    }

    pub fn describe(&self) -> String {
        match &self.kind {
            ConditionKind::BcUpper { key, t, v_max } => format!("xi[{}]_{t} >= {v_max}", key.0),
            ConditionKind::BcLower { key, t, v_min } => format!("xi[{}]_{t} <= {v_min}", key.0),
            ConditionKind::Sc { component, t, v_sc } => format!("dxi[{component}]_{t} >= {v_sc}"),
            ConditionKind::Tc { key, span, word } => format!("word[{}]{span} = {}", key.0, render_letters(word)),
        }
    }
}

/// Conditions of every enabled metric, with the symbolizers TC needs.
#[derive(Debug, Clone, PartialEq)]
pub struct ConditionSet {
    pub conditions: Vec<TestCondition>,
    pub metrics: Vec<MetricSpec>,
    pub symbolizers: BTreeMap<SeriesKey, Symbolizer>,
    pub n_steps: usize,
}

/// Conditions of one metric, ids starting at `first_id`.
pub fn build_conditions(
    thresholds: &Thresholds,
    spec: &MetricSpec,
    n_steps: usize,
    first_id: usize,
    group: usize,
    cap: usize,
) -> Result<Vec<TestCondition>> {
    spec.validate()?;
    let mut out = Vec::new();
    let mut push = |kind| {
        let id = first_id + out.len();
        out.push(TestCondition { id, group, kind })
    };
    match spec.metric {
        Metric::BC => {
            let key = spec.key()?;
            let b = thresholds
                .bc
                .get(&key)
                .ok_or_else(|| Error::Config(format!("no BC thresholds for {key}")))?;
            for t in 1..=n_steps {
                push(ConditionKind::BcUpper {
                    key: SeriesKeyJson(key),
                    t,
                    v_max: b.v_max,
                });
                push(ConditionKind::BcLower {
                    key: SeriesKeyJson(key),
                    t,
                    v_min: b.v_min,
                });
            }
        }
        Metric::SC => {
            let v = *thresholds
                .v_sc
                .get(&spec.component)
                .ok_or_else(|| Error::Config(format!("no SC threshold for {}", spec.component)))?;
            for t in 1..=n_steps {
                push(ConditionKind::Sc {
                    component: spec.component,
                    t,
                    v_sc: v,
                });
            }
        }
        Metric::TC => {
            let key = spec.key()?;
            let sym = thresholds
                .symbolizers
                .get(&key)
                .ok_or_else(|| Error::Config(format!("no symbolizer for {key}")))?;
            let span = thresholds.tc_span;
            span.check(n_steps)?;
            let k = sym.alphabet_size();
            let len = span.len();
            let count = u32::try_from(len)
                .ok()
                .and_then(|l| (k as u128).checked_pow(l))
                .unwrap_or(u128::MAX);
            if count > cap as u128 {
                return Err(Error::TooManyConditions { count, cap });
            }
            let mut word = vec![0u8; len];
            for _ in 0..count {
                push(ConditionKind::Tc {
                    key: SeriesKeyJson(key),
                    span,
                    word: word.clone(),
                });
                // odometer increment, last position fastest
                for pos in (0..len).rev() {
                    word[pos] += 1;
                    if (word[pos] as usize) < k {
                        break;
                    }
                    word[pos] = 0;
                }
            }
        }
    }
    Ok(out)
}

impl ConditionSet {
    pub fn build(thresholds: &Thresholds, metrics: &[MetricSpec], n_steps: usize) -> Result<Self> {
        Self::build_with_cap(thresholds, metrics, n_steps, DEFAULT_CONDITION_CAP)
    }

    /// Metrics are deduplicated and sorted so ids follow (metric, s, a, t, word).
    pub fn build_with_cap(thresholds: &Thresholds, metrics: &[MetricSpec], n_steps: usize, cap: usize) -> Result<Self> {
        if metrics.is_empty() {
            return Err(Error::Config("at least one metric must be enabled".into()));
        }
        let mut metrics = metrics.to_vec();
        metrics.sort();
        metrics.dedup();
        let mut conditions = Vec::new();
        for (g, spec) in metrics.iter().enumerate() {
            let built = build_conditions(thresholds, spec, n_steps, conditions.len(), g, cap)?;
            conditions.extend(built);
            if conditions.len() > cap {
                return Err(Error::TooManyConditions {
                    count: conditions.len() as u128,
                    cap,
                });
            }
        }
        let symbolizers = metrics
            .iter()
            .filter(|m| m.metric == Metric::TC)
            .filter_map(|m| m.key().ok())
            .filter_map(|k| thresholds.symbolizers.get(&k).map(|s| (k, s.clone())))
            .collect();
        Ok(ConditionSet {
            conditions,
            metrics,
            symbolizers,
            n_steps,
        })
    }

    pub fn len(&self) -> usize {
        self.conditions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.conditions.is_empty()
    }

    pub fn span(&self) -> Option<Span> {
        self.conditions.iter().find_map(|c| match c.kind {
            ConditionKind::Tc { span, .. } => Some(span),
            _ => None,
        })
    }

    /// Extracts exactly the series this set reads from a trace.
    pub fn features(&self, trace: &Trace) -> TraceFeatures {
        let mut f = TraceFeatures::default();
        for spec in &self.metrics {
            match spec.metric {
                Metric::BC | Metric::TC => {
                    let key = spec.key().expect("validated metric");
                    f.ensure_series(trace, key);
                }
                Metric::SC => {
                    let c = spec.component;
                    let p = f.ensure_series(trace, SeriesKey::new(c, AbstractionId::Positive)).to_vec();
                    let m = f.ensure_series(trace, SeriesKey::new(c, AbstractionId::Negative)).to_vec();
                    f.delta[c as usize] = Some(stepwise_change_values(&p, &m));
                }
            }
        }
        if let Some(span) = self.span() {
            for (key, sym) in &self.symbolizers {
                let values = f.series[key.slot()].as_ref().expect("TC series extracted");
                f.words.insert(*key, symbolize_values(values, sym, span));
            }
        }
        f
    }

    pub fn is_satisfied(&self, cond: &TestCondition, f: &TraceFeatures) -> bool {
        self.loss(cond, f) == 0.0
    }

    /// Distance to satisfying `cond`: shortfall for BC/SC, Hamming distance
    /// for TC. Zero exactly when satisfied.
    pub fn loss(&self, cond: &TestCondition, f: &TraceFeatures) -> f64 {
        match &cond.kind {
            ConditionKind::BcUpper { key, t, v_max } => {
                let v = f.value(key.0, *t);
                if v >= *v_max {
                    0.0
                } else {
                    v_max - v
                }
            }
            ConditionKind::BcLower { key, t, v_min } => {
                let v = f.value(key.0, *t);
                if v <= *v_min {
                    0.0
                } else {
                    v - v_min
                }
            }
            ConditionKind::Sc { component, t, v_sc } => {
                let d = f.delta(*component, *t);
                if d >= *v_sc {
                    0.0
                } else {
                    v_sc - d
                }
            }
            ConditionKind::Tc { key, word, .. } => {
                let got = f.words.get(&key.0).expect("TC word extracted");
                got.iter().zip(word).filter(|(a, b)| a != b).count() as f64
            }
        }
    }

    /// Ids of all conditions `trace` satisfies, ascending.
    pub fn evaluate_features(&self, f: &TraceFeatures) -> Vec<usize> {
        self.conditions
            .iter()
            .filter(|c| self.is_satisfied(c, f))
            .map(|c| c.id)
            .collect()
    }
}

/// Satisfied condition ids for one trace.
pub fn evaluate_trace(set: &ConditionSet, trace: &Trace) -> Vec<usize> {
    set.evaluate_features(&set.features(trace))
}

/// The abstraction series, step-wise changes and TC words a condition set
/// reads from one trace.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct TraceFeatures {
    series: [Option<Vec<f64>>; 15],
    delta: [Option<Vec<f64>>; 5],
    pub words: BTreeMap<SeriesKey, Vec<u8>>,
}

impl TraceFeatures {
    fn ensure_series(&mut self, trace: &Trace, key: SeriesKey) -> &[f64] {
        self.series[key.slot()].get_or_insert_with(|| crate::abstraction::series(trace, key.component, key.abstraction).values)
    }

    pub fn series(&self, key: SeriesKey) -> Option<&[f64]> {
        self.series[key.slot()].as_deref()
    }

    pub fn value(&self, key: SeriesKey, t: usize) -> f64 {
        self.series(key).expect("series extracted")[t]
    }

    /// `Δξ_t` for `t` in `1..=n`.
    pub fn delta(&self, c: ComponentId, t: usize) -> f64 {
        self.delta[c as usize].as_ref().expect("delta extracted")[t - 1]
    }
}
