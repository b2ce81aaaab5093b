use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::conditions::{ConditionKind, ConditionSet};
use super::thresholds::Metric;
use crate::abstraction::render_letters;

/// Hit counts and first witnesses for a condition set.
///
/// Single writer: callers evaluate traces anywhere, then apply the satisfied
/// id sets here in a fixed order.
#[derive(Debug, Clone, PartialEq)]
pub struct CoverageLedger {
    set: ConditionSet,
    hit_count: Vec<u64>,
    first_hit: Vec<Option<u64>>,
    covered: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoverageTimesRow {
    pub metric: Metric,
    pub component: String,
    pub abstraction: String,
    pub t: usize,
    pub hit_count: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConditionReport {
    pub id: usize,
    pub kind: String,
    pub t_or_span: serde_json::Value,
    pub hit_count: u64,
    pub first_hit: Option<u64>,
    pub metric: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub word: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LedgerSummary {
    pub conditions: usize,
    pub covered: usize,
    pub coverage_rate: f64,
    pub per_metric: BTreeMap<String, f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LedgerReport {
    pub summary: LedgerSummary,
    pub conditions: Vec<ConditionReport>,
}

impl CoverageLedger {
    pub fn new(set: ConditionSet) -> Self {
        let n = set.len();
        CoverageLedger {
            set,
            hit_count: vec![0; n],
            first_hit: vec![None; n],
            covered: 0,
        }
    }

    pub fn conditions(&self) -> &ConditionSet {
        &self.set
    }

    pub fn hit_count(&self, id: usize) -> u64 {
        self.hit_count[id]
    }

    pub fn first_hit(&self, id: usize) -> Option<u64> {
        self.first_hit[id]
    }

    pub fn is_covered(&self, id: usize) -> bool {
        self.hit_count[id] > 0
    }

    /// Records one test case's satisfied ids; returns those hit for the first time.
    pub fn update(&mut self, satisfied: &[usize], test_case_id: u64) -> Vec<usize> {
        let mut fresh = Vec::new();
        for &id in satisfied {
            if self.hit_count[id] == 0 {
                self.first_hit[id] = Some(test_case_id);
                self.covered += 1;
                fresh.push(id);
            }
            self.hit_count[id] += 1;
        }
        fresh
    }

    pub fn coverage_rate(&self) -> f64 {
        if self.hit_count.is_empty() {
            return 0.0;
        }
        self.covered as f64 / self.hit_count.len() as f64
    }

    pub fn covered(&self) -> usize {
        self.covered
    }

    pub fn unfulfilled(&self) -> impl Iterator<Item = usize> + '_ {
        (0..self.hit_count.len()).filter(|&id| self.hit_count[id] == 0)
    }

    /// Coverage rate of each metric, in [`ConditionSet::metrics`] order.
    pub fn rates_by_metric(&self) -> Vec<(String, f64)> {
        let mut totals = vec![(0usize, 0usize); self.set.metrics.len()];
        for c in &self.set.conditions {
            totals[c.group].0 += 1;
            if self.hit_count[c.id] > 0 {
                totals[c.group].1 += 1;
            }
        }
        self.set
            .metrics
            .iter()
            .zip(totals)
            .map(|(m, (n, k))| (m.label(), if n == 0 { 0.0 } else { k as f64 / n as f64 }))
            .collect()
    }

    /// Hit counts summed per (metric, step) for BC and SC.
    pub fn coverage_times(&self) -> Vec<CoverageTimesRow> {
        let mut acc: BTreeMap<(usize, usize), u64> = BTreeMap::new();
        for c in &self.set.conditions {
            if let Some(t) = c.step() {
                *acc.entry((c.group, t)).or_default() += self.hit_count[c.id];
            }
        }
        acc.into_iter()
            .map(|((g, t), hit_count)| {
                let m = &self.set.metrics[g];
                CoverageTimesRow {
                    metric: m.metric,
                    component: m.component.to_string(),
                    abstraction: match m.metric {
                        Metric::SC => "delta".to_string(),
                        _ => m.abstraction.map(|a| a.to_string()).unwrap_or_default(),
                    },
                    t,
                    hit_count,
                }
            })
            .collect()
    }

    pub fn report(&self) -> LedgerReport {
        let conditions = self
            .set
            .conditions
            .iter()
            .map(|c| ConditionReport {
                id: c.id,
                kind: c.kind_name().to_string(),
                t_or_span: c.t_or_span(),
                hit_count: self.hit_count[c.id],
                first_hit: self.first_hit[c.id],
                metric: self.set.metrics[c.group].label(),
                word: match &c.kind {
                    ConditionKind::Tc { word, .. } => Some(render_letters(word)),
                    _ => None,
                },
            })
            .collect();
        LedgerReport {
            summary: LedgerSummary {
                conditions: self.set.len(),
                covered: self.covered,
                coverage_rate: self.coverage_rate(),
                per_metric: self.rates_by_metric().into_iter().collect(),
            },
            conditions,
        }
    }
}
