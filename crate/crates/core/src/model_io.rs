//! Canonical JSON model format.
//!
//! ```json
//! {"format_version":1,"task":"classification","input_kind":"continuous","n_steps":28,
//!  "pre_layers":[{"rows":..,"cols":..,"weights":[..],"bias":[..],"activation":"tanh"}],
//!  "lstm":{"units":..,"input_dim":..,"forget":{"w_input":[..],"w_hidden":[..],"bias":[..]},
//!          "input":{..},"candidate":{..},"output":{..}},
//!  "post_layers":[..],
//!  "token_embedding":{"vocab":..,"dim":..,"weights":[..]}}
//! ```
//!
//! All arrays are flat row-major. Dense layer weights are `rows = outputs`,
//! `cols = inputs`.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lstm::{Activation, DenseLayerParams, GateWeights, InputKind, LstmLayerParams, Matrix, ModelSpec, Task};

pub const FORMAT_VERSION: u32 = 1;

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ModelFile {
    format_version: u32,
    task: Task,
    input_kind: InputKind,
    n_steps: usize,
    pre_layers: Vec<DenseFile>,
    lstm: LstmFile,
    post_layers: Vec<DenseFile>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    token_embedding: Option<EmbeddingFile>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct DenseFile {
    rows: usize,
    cols: usize,
    weights: Vec<f64>,
    bias: Vec<f64>,
    activation: Activation,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct LstmFile {
    units: usize,
    input_dim: usize,
    forget: GateFile,
    input: GateFile,
    candidate: GateFile,
    output: GateFile,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct GateFile {
    w_input: Vec<f64>,
    w_hidden: Vec<f64>,
    bias: Vec<f64>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct EmbeddingFile {
    vocab: usize,
    dim: usize,
    weights: Vec<f64>,
}

fn matrix(field: &str, rows: usize, cols: usize, data: Vec<f64>) -> Result<Matrix> {
    if rows.checked_mul(cols) != Some(data.len()) {
        return Err(Error::shape(field, format!("{rows}x{cols} entries"), data.len()));
    }
    Matrix::new(rows, cols, data).map_err(|_| Error::shape(field, "positive dimensions", format!("{rows}x{cols}")))
}

impl DenseFile {
    fn into_params(self, field: &str) -> Result<DenseLayerParams> {
        Ok(DenseLayerParams {
            weights: matrix(&format!("{field}.weights"), self.rows, self.cols, self.weights)?,
            bias: self.bias,
            activation: self.activation,
        })
    }

    fn from_params(l: &DenseLayerParams) -> Self {
        DenseFile {
            rows: l.weights.rows(),
            cols: l.weights.cols(),
            weights: l.weights.as_slice().to_vec(),
            bias: l.bias.clone(),
            activation: l.activation,
        }
    }
}

impl GateFile {
    fn into_params(self, name: &str, units: usize, input_dim: usize) -> Result<GateWeights> {
        Ok(GateWeights {
            w_input: matrix(&format!("lstm.{name}.w_input"), units, input_dim, self.w_input)?,
            w_hidden: matrix(&format!("lstm.{name}.w_hidden"), units, units, self.w_hidden)?,
            bias: self.bias,
        })
    }

    fn from_params(g: &GateWeights) -> Self {
        GateFile {
            w_input: g.w_input.as_slice().to_vec(),
            w_hidden: g.w_hidden.as_slice().to_vec(),
            bias: g.bias.clone(),
        }
    }
}

impl ModelFile {
    fn into_model(self) -> Result<ModelSpec> {
        if self.format_version != FORMAT_VERSION {
            return Err(Error::Model(format!(
                "format_version: expected {FORMAT_VERSION}, found {}",
                self.format_version
            )));
        }
        let l = self.lstm;
        let (u, d) = (l.units, l.input_dim);
        let lstm = LstmLayerParams {
            units: u,
            input_dim: d,
            forget: l.forget.into_params("forget", u, d)?,
            input: l.input.into_params("input", u, d)?,
            candidate: l.candidate.into_params("candidate", u, d)?,
            output: l.output.into_params("output", u, d)?,
        };
        let pre_layers = self
            .pre_layers
            .into_iter()
            .enumerate()
            .map(|(i, f)| f.into_params(&format!("pre_layers[{i}]")))
            .collect::<Result<_>>()?;
        let post_layers = self
            .post_layers
            .into_iter()
            .enumerate()
            .map(|(i, f)| f.into_params(&format!("post_layers[{i}]")))
            .collect::<Result<_>>()?;
        let token_embedding = self
            .token_embedding
            .map(|e| matrix("token_embedding.weights", e.vocab, e.dim, e.weights))
            .transpose()?;
        let model = ModelSpec {
            task: self.task,
            input_kind: self.input_kind,
            n_steps: self.n_steps,
            pre_layers,
            lstm,
            post_layers,
            token_embedding,
        };
        model.validate()?;
        Ok(model)
    }

    fn from_model(m: &ModelSpec) -> Self {
        let g = &m.lstm;
        ModelFile {
            format_version: FORMAT_VERSION,
            task: m.task,
            input_kind: m.input_kind,
            n_steps: m.n_steps,
            pre_layers: m.pre_layers.iter().map(DenseFile::from_params).collect(),
            lstm: LstmFile {
                units: g.units,
                input_dim: g.input_dim,
                forget: GateFile::from_params(&g.forget),
                input: GateFile::from_params(&g.input),
                candidate: GateFile::from_params(&g.candidate),
                output: GateFile::from_params(&g.output),
            },
            post_layers: m.post_layers.iter().map(DenseFile::from_params).collect(),
            token_embedding: m.token_embedding.as_ref().map(|e| EmbeddingFile {
                vocab: e.rows(),
                dim: e.cols(),
                weights: e.as_slice().to_vec(),
            }),
        }
    }
}

/// Parse and validate a model from JSON bytes.
pub fn model_from_slice(bytes: &[u8]) -> Result<ModelSpec> {
    let file: ModelFile = serde_json::from_slice(bytes).map_err(|e| Error::json("model", e))?;
    file.into_model()
}

pub fn model_to_string(model: &ModelSpec) -> String {
    serde_json::to_string(&ModelFile::from_model(model)).expect("model serializes")
}

pub fn load_model(path: impl AsRef<Path>) -> Result<ModelSpec> {
    let path = path.as_ref();
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    model_from_slice(&bytes)
}

/// Writes the canonical form. The model is validated first so an invalid
/// model never reaches disk.
pub fn save_model(model: &ModelSpec, path: impl AsRef<Path>) -> Result<()> {
    model.validate()?;
    let path = path.as_ref();
    fs::write(path, model_to_string(model)).map_err(|e| Error::io(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lstm::ModelShape;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn sample() -> ModelSpec {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        ModelSpec::random(
            &ModelShape {
                input_dim: 3,
                units: 4,
                pre_widths: vec![5],
                hidden_post_widths: vec![6],
                classes: 3,
                ..Default::default()
            },
            &mut rng,
        )
    }

    #[test]
    fn round_trip_is_bit_identical() {
        let m = sample();
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("m.json");
        save_model(&m, &p).unwrap();
        let back = load_model(&p).unwrap();
        assert_eq!(back, m);
        for ((_, a), (_, b)) in m.lstm.gates().iter().zip(back.lstm.gates().iter()) {
            let bits = |g: &GateWeights| g.w_input.as_slice().iter().map(|v| v.to_bits()).collect::<Vec<_>>();
            assert_eq!(bits(a), bits(b));
        }
        let p2 = dir.path().join("m2.json");
        save_model(&back, &p2).unwrap();
        assert_eq!(fs::read(&p).unwrap(), fs::read(&p2).unwrap());
    }

    #[test]
    fn wrong_forget_rows_is_shape_error() {
        let m = sample();
        let mut v: serde_json::Value = serde_json::from_str(&model_to_string(&m)).unwrap();
        let w = v["lstm"]["forget"]["w_input"].as_array_mut().unwrap();
        w.truncate(w.len() - 5);
        let err = model_from_slice(v.to_string().as_bytes()).unwrap_err();
        assert!(matches!(err, Error::Shape { .. }), "{err}");
        assert!(err.to_string().contains("lstm.forget.w_input"), "{err}");
    }

    #[test]
    fn broken_chain_is_rejected() {
        let m = sample();
        let mut v: serde_json::Value = serde_json::from_str(&model_to_string(&m)).unwrap();
        v["post_layers"][0]["cols"] = 3.into();
        v["post_layers"][0]["rows"] = 8.into();
        let err = model_from_slice(v.to_string().as_bytes()).unwrap_err();
        assert!(err.to_string().contains("post_layers[0]"), "{err}");
    }

    #[test]
    fn missing_field_and_version_errors_name_the_field() {
        let m = sample();
        let mut v: serde_json::Value = serde_json::from_str(&model_to_string(&m)).unwrap();
        v.as_object_mut().unwrap().remove("n_steps");
        let err = model_from_slice(v.to_string().as_bytes()).unwrap_err();
        assert!(err.to_string().contains("n_steps"), "{err}");

        let mut v: serde_json::Value = serde_json::from_str(&model_to_string(&m)).unwrap();
        v["format_version"] = 2.into();
        let err = model_from_slice(v.to_string().as_bytes()).unwrap_err();
        assert!(err.to_string().contains("format_version"), "{err}");
    }

    #[test]
    fn non_finite_weight_is_rejected() {
        let m = sample();
        let text = model_to_string(&m);
        let bad = text.replacen("\"bias\":[", "\"bias\":[1e999,", 1);
        assert!(model_from_slice(bad.as_bytes()).is_err());
    }

    #[test]
    fn token_model_requires_embedding() {
        let mut m = sample();
        m.input_kind = InputKind::Token;
        let text = model_to_string(&m);
        let err = model_from_slice(text.as_bytes()).unwrap_err();
        assert!(err.to_string().contains("token_embedding"), "{err}");
    }
}
