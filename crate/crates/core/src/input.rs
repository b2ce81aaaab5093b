use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lstm::{InputKind, ModelSpec};

fn default_clamp() -> [f64; 2] {
    [0.0, 1.0]
}

/// A model input: either a `n_steps × input_dim` block of reals with a valid
/// value range, or a fixed-length token sequence.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum InputSequence {
    Continuous {
        values: Vec<Vec<f64>>,
        #[serde(default = "default_clamp")]
        clamp: [f64; 2],
    },
    Tokens {
        ids: Vec<u32>,
        vocab_size: u32,
        #[serde(default)]
        pad_id: u32,
    },
}

impl InputSequence {
    pub fn continuous(values: Vec<Vec<f64>>, clamp: [f64; 2]) -> Self {
        InputSequence::Continuous { values, clamp }
    }

    pub fn len(&self) -> usize {
        match self {
            InputSequence::Continuous { values, .. } => values.len(),
            InputSequence::Tokens { ids, .. } => ids.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            InputSequence::Continuous { values, clamp } => {
                let [lo, hi] = *clamp;
                if !(lo.is_finite() && hi.is_finite() && lo <= hi) {
                    return Err(Error::Input(format!("invalid clamp [{lo}, {hi}]")));
                }
                let width = values.first().map(Vec::len).unwrap_or(0);
                for (t, row) in values.iter().enumerate() {
                    if row.len() != width {
                        return Err(Error::Input(format!("ragged step {}: {} vs {width}", t + 1, row.len())));
                    }
                    if let Some(v) = row.iter().find(|v| !(lo..=hi).contains(*v)) {
                        return Err(Error::Input(format!("value {v} at step {} outside clamp [{lo}, {hi}]", t + 1)));
                    }
                }
                Ok(())
            }
            InputSequence::Tokens { ids, vocab_size, pad_id } => {
                if pad_id >= vocab_size {
                    return Err(Error::Input(format!("pad_id {pad_id} outside vocabulary of {vocab_size}")));
                }
                if let Some(id) = ids.iter().find(|&&id| id >= *vocab_size) {
                    return Err(Error::Input(format!("token {id} outside vocabulary of {vocab_size}")));
                }
                Ok(())
            }
        }
    }

    /// Checks both the input's own invariants and its fit to `model`.
    pub fn validate_for(&self, model: &ModelSpec) -> Result<()> {
        self.validate()?;
        if self.len() != model.n_steps {
            return Err(Error::shape("input steps", model.n_steps, self.len()));
        }
        match (self, model.input_kind) {
            (InputSequence::Continuous { values, .. }, InputKind::Continuous) => {
                let dim = model.step_input_dim();
                if values[0].len() != dim {
                    return Err(Error::shape("input width", dim, values[0].len()));
                }
                Ok(())
            }
            (InputSequence::Tokens { vocab_size, .. }, InputKind::Token) => match model.vocab_size() {
                Some(v) if *vocab_size as usize <= v => Ok(()),
                Some(v) => Err(Error::shape("vocab_size", v, vocab_size)),
                None => Err(Error::Model("token model requires token_embedding".into())),
            },
            _ => Err(Error::Input("input kind does not match model".into())),
        }
    }

    /// Distance used by the oracle: L2 over flattened values for continuous
    /// inputs, fraction of positions that differ for tokens.
    pub fn distance(&self, other: &InputSequence) -> f64 {
        match (self, other) {
            (InputSequence::Continuous { values: a, .. }, InputSequence::Continuous { values: b, .. }) => a
                .iter()
                .flatten()
                .zip(b.iter().flatten())
                .map(|(x, y)| (x - y) * (x - y))
                .sum::<f64>()
                .sqrt(),
            (InputSequence::Tokens { ids: a, .. }, InputSequence::Tokens { ids: b, .. }) => {
                let n = a.len().max(b.len());
                if n == 0 {
                    return 0.0;
                }
                let changed = (0..n).filter(|&k| a.get(k) != b.get(k)).count();
                changed as f64 / n as f64
            }
            _ => f64::INFINITY,
        }
    }
}
