//! Coverage-guided testing for LSTM networks.
//!
//! A forward pass records every gate and state vector per step; abstraction
//! series summarize them; boundary, step-wise and temporal coverage conditions
//! are derived from training-set statistics; a fuzzer mutates seeds toward
//! unfulfilled conditions and flags prediction changes within an oracle radius.

pub mod abstraction;
pub mod cli;
pub mod coverage;
pub mod error;
pub mod fuzzer;
pub mod input;
pub mod io;
pub mod lstm;
pub mod model_io;
pub mod mutation;

pub use abstraction::{AbstractionId, AbstractionSeries, ComponentId, SeriesKey, Span, SymbolicWord, Symbolizer};
pub use coverage::{ConditionSet, CoverageLedger, MetricSpec, TestCondition, ThresholdConfig, Thresholds};
pub use error::{Error, Result};
pub use input::InputSequence;
pub use lstm::{run_model, LstmLayerParams, ModelSpec, Prediction, StepTrace, Trace};
pub use model_io::{load_model, save_model};
