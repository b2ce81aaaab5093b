//! Seed and training data: JSON-lines, one `{input, label}` object per line.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::input::InputSequence;
use crate::lstm::Prediction;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LabeledInput {
    pub input: InputSequence,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub label: Option<Prediction>,
}

/// Parses JSON-lines; blank lines and `#` comment lines are skipped.
pub fn labeled_inputs_from_slice(bytes: &[u8]) -> Result<Vec<LabeledInput>> {
    let text = std::str::from_utf8(bytes).map_err(|e| Error::Input(format!("not UTF-8: {e}")))?;
    let mut out = Vec::new();
    for (k, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let item: LabeledInput = serde_json::from_str(line).map_err(|e| Error::json(format!("line {}", k + 1), e))?;
        item.input
            .validate()
            .map_err(|e| Error::Input(format!("line {}: {e}", k + 1)))?;
        out.push(item);
    }
    Ok(out)
}

pub fn load_labeled_inputs(path: impl AsRef<Path>) -> Result<Vec<LabeledInput>> {
    let path = path.as_ref();
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    labeled_inputs_from_slice(&bytes).map_err(|e| match e {
        Error::Json { context, source } => Error::Json {
            context: format!("{}: {context}", path.display()),
            source,
        },
        Error::Input(m) => Error::Input(format!("{}: {m}", path.display())),
        other => other,
    })
}

pub fn load_inputs(path: impl AsRef<Path>) -> Result<Vec<InputSequence>> {
    Ok(load_labeled_inputs(path)?.into_iter().map(|l| l.input).collect())
}

pub fn labeled_inputs_to_string(items: &[LabeledInput]) -> String {
    let mut s = String::new();
    for item in items {
        s.push_str(&serde_json::to_string(item).expect("labeled input serializes"));
        s.push('\n');
    }
    s
}
