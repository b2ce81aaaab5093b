//! Boundary, step-wise and temporal coverage: thresholds, condition sets,
//! the hit ledger, and the neuron-coverage baseline.

mod conditions;
mod ledger;
mod neuron;
mod thresholds;

pub use conditions::{
    build_conditions, evaluate_trace, ConditionKind, ConditionSet, SeriesKeyJson, TestCondition, TraceFeatures,
    DEFAULT_CONDITION_CAP,
};
pub use ledger::{ConditionReport, CoverageLedger, CoverageTimesRow, LedgerReport, LedgerSummary};
pub use neuron::{neuron_coverage, NeuronCoverage};
pub use thresholds::{default_metrics, estimate_thresholds, Bounds, Metric, MetricSpec, ThresholdConfig, Thresholds};
