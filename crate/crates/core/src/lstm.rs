//! LSTM layer, surrounding dense layers, and the traced forward pass.
//!
//! A model is `post ∘ lstm ∘ (pre applied per step)`. Running it records the
//! forget/input/output gate activations, cell state and hidden output at every
//! step, which is what all coverage metrics are computed from.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::input::InputSequence;

pub type Vector = Vec<f64>;

/// Dense row-major matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct Matrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Matrix {
    pub fn new(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if rows == 0 || cols == 0 {
            return Err(Error::shape("matrix", "positive dimensions", format!("{rows}x{cols}")));
        }
        if rows.checked_mul(cols) != Some(data.len()) {
            return Err(Error::shape(
                format!("{rows}x{cols} matrix data"),
                format!("{rows}x{cols} entries"),
                data.len(),
            ));
        }
        Ok(Matrix { rows, cols, data })
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        Matrix {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Matrix::zeros(n, n);
        for i in 0..n {
            m.data[i * n + i] = 1.0;
        }
        m
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for r in 0..rows {
            for c in 0..cols {
                data.push(f(r, c));
            }
        }
        Matrix { rows, cols, data }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn get(&self, r: usize, c: usize) -> f64 {
        self.data[r * self.cols + c]
    }

    pub fn row(&self, r: usize) -> &[f64] {
        &self.data[r * self.cols..(r + 1) * self.cols]
    }

    pub fn set(&mut self, r: usize, c: usize, v: f64) {
        self.data[r * self.cols + c] = v;
    }

    /// `out[r] += Σ_c self[r,c] * x[c]`
    fn mul_add_into(&self, x: &[f64], out: &mut [f64]) {
        debug_assert_eq!(x.len(), self.cols);
        debug_assert_eq!(out.len(), self.rows);
        for (o, row) in out.iter_mut().zip(self.data.chunks_exact(self.cols)) {
            *o += row.iter().zip(x).map(|(w, v)| w * v).sum::<f64>();
        }
    }

    fn all_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Activation {
    Linear,
    Relu,
    Sigmoid,
    Tanh,
    Softmax,
}

impl Activation {
    fn apply(self, z: &[f64]) -> Vector {
        match self {
            Activation::Linear => z.to_vec(),
            Activation::Relu => z.iter().map(|v| v.max(0.0)).collect(),
            Activation::Sigmoid => z.iter().map(|&v| sigmoid(v)).collect(),
            Activation::Tanh => z.iter().map(|v| v.tanh()).collect(),
            Activation::Softmax => {
                let m = z.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
                let e: Vec<f64> = z.iter().map(|v| (v - m).exp()).collect();
                let s: f64 = e.iter().sum();
                e.into_iter().map(|v| v / s).collect()
            }
        }
    }
}

#[inline]
pub(crate) fn sigmoid(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

/// One gate's parameters, stored split as `w_input·x + w_hidden·h + bias`.
#[derive(Debug, Clone, PartialEq)]
pub struct GateWeights {
    pub w_input: Matrix,
    pub w_hidden: Matrix,
    pub bias: Vector,
}

impl GateWeights {
    pub fn zeros(units: usize, input_dim: usize) -> Self {
        GateWeights {
            w_input: Matrix::zeros(units, input_dim),
            w_hidden: Matrix::zeros(units, units),
            bias: vec![0.0; units],
        }
    }

    fn pre_activation(&self, x: &[f64], h: &[f64]) -> Vector {
        let mut z = self.bias.clone();
        self.w_input.mul_add_into(x, &mut z);
        self.w_hidden.mul_add_into(h, &mut z);
        z
    }

    fn check(&self, name: &str, units: usize, input_dim: usize) -> Result<()> {
        if self.w_input.rows != units || self.w_input.cols != input_dim {
            return Err(Error::shape(
                format!("lstm.{name}.w_input"),
                format!("{units}x{input_dim}"),
                format!("{}x{}", self.w_input.rows, self.w_input.cols),
            ));
        }
        if self.w_hidden.rows != units || self.w_hidden.cols != units {
            return Err(Error::shape(
                format!("lstm.{name}.w_hidden"),
                format!("{units}x{units}"),
                format!("{}x{}", self.w_hidden.rows, self.w_hidden.cols),
            ));
        }
        if self.bias.len() != units {
            return Err(Error::shape(format!("lstm.{name}.bias"), units, self.bias.len()));
        }
        if !self.w_input.all_finite() || !self.w_hidden.all_finite() || !self.bias.iter().all(|v| v.is_finite()) {
            return Err(Error::Model(format!("lstm.{name}: non-finite weight")));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LstmLayerParams {
    pub units: usize,
    pub input_dim: usize,
    pub forget: GateWeights,
    pub input: GateWeights,
    pub candidate: GateWeights,
    pub output: GateWeights,
}

impl LstmLayerParams {
    pub fn zeros(units: usize, input_dim: usize) -> Self {
        LstmLayerParams {
            units,
            input_dim,
            forget: GateWeights::zeros(units, input_dim),
            input: GateWeights::zeros(units, input_dim),
            candidate: GateWeights::zeros(units, input_dim),
            output: GateWeights::zeros(units, input_dim),
        }
    }

    pub fn gates(&self) -> [(&'static str, &GateWeights); 4] {
        [
            ("forget", &self.forget),
            ("input", &self.input),
            ("candidate", &self.candidate),
            ("output", &self.output),
        ]
    }

    pub fn validate(&self) -> Result<()> {
        if self.units == 0 || self.input_dim == 0 {
            return Err(Error::Model("lstm units and input_dim must be positive".into()));
        }
        for (name, g) in self.gates() {
            g.check(name, self.units, self.input_dim)?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DenseLayerParams {
    pub weights: Matrix,
    pub bias: Vector,
    pub activation: Activation,
}

impl DenseLayerParams {
    pub fn input_dim(&self) -> usize {
        self.weights.cols
    }

    pub fn output_dim(&self) -> usize {
        self.weights.rows
    }

    fn pre_activation(&self, x: &[f64]) -> Vector {
        let mut z = self.bias.clone();
        self.weights.mul_add_into(x, &mut z);
        z
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Task {
    Classification,
    Regression,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum InputKind {
    Continuous,
    Token,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ModelSpec {
    pub task: Task,
    pub input_kind: InputKind,
    pub n_steps: usize,
    pub pre_layers: Vec<DenseLayerParams>,
    pub lstm: LstmLayerParams,
    pub post_layers: Vec<DenseLayerParams>,
    pub token_embedding: Option<Matrix>,
}

impl ModelSpec {
    /// Width of one raw input step: embedding rows for token models, otherwise
    /// the first pre-layer's input (or the LSTM's when there is none).
    pub fn step_input_dim(&self) -> usize {
        self.pre_layers
            .first()
            .map(|l| l.input_dim())
            .unwrap_or(self.lstm.input_dim)
    }

    pub fn output_dim(&self) -> usize {
        self.post_layers.last().map(|l| l.output_dim()).unwrap_or(self.lstm.units)
    }

    pub fn vocab_size(&self) -> Option<usize> {
        self.token_embedding.as_ref().map(|e| e.rows)
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_steps == 0 {
            return Err(Error::Model("n_steps must be positive".into()));
        }
        self.lstm.validate()?;
        if self.post_layers.is_empty() {
            return Err(Error::Model("post_layers must be non-empty".into()));
        }
        let mut width = match (&self.input_kind, &self.token_embedding) {
            (InputKind::Token, None) => {
                return Err(Error::Model("token model requires token_embedding".into()))
            }
            (InputKind::Token, Some(e)) => {
                if !e.all_finite() {
                    return Err(Error::Model("token_embedding: non-finite weight".into()));
                }
                e.cols
            }
            (InputKind::Continuous, _) => self.step_input_dim(),
        };
        let n_layers = self.pre_layers.len() + self.post_layers.len();
        for (idx, (section, i, layer)) in self
            .pre_layers
            .iter()
            .enumerate()
            .map(|(i, l)| ("pre_layers", i, l))
            .chain(self.post_layers.iter().enumerate().map(|(i, l)| ("post_layers", i, l)))
            .enumerate()
        {
            if section == "post_layers" && i == 0 {
                if width != self.lstm.input_dim {
                    return Err(Error::shape("lstm.input_dim", width, self.lstm.input_dim));
                }
                width = self.lstm.units;
            }
            let name = format!("{section}[{i}]");
            if layer.input_dim() != width {
                return Err(Error::shape(format!("{name}.cols"), width, layer.input_dim()));
            }
            if layer.bias.len() != layer.output_dim() {
                return Err(Error::shape(format!("{name}.bias"), layer.output_dim(), layer.bias.len()));
            }
            if !layer.weights.all_finite() || !layer.bias.iter().all(|v| v.is_finite()) {
                return Err(Error::Model(format!("{name}: non-finite weight")));
            }
            if layer.activation == Activation::Softmax && idx + 1 != n_layers {
                return Err(Error::Model(format!("{name}: softmax permitted only as the final layer")));
            }
            width = layer.output_dim();
        }
        if self.task == Task::Classification
            && self.post_layers.last().map(|l| l.activation) != Some(Activation::Softmax)
        {
            return Err(Error::Model("classification requires a final softmax layer".into()));
        }
        Ok(())
    }

    /// Zero-weight model with a `linear` identity readout; every gate sits at 0.5.
    pub fn zeros(units: usize, input_dim: usize, n_steps: usize) -> Self {
        ModelSpec {
            task: Task::Regression,
            input_kind: InputKind::Continuous,
            n_steps,
            pre_layers: Vec::new(),
            lstm: LstmLayerParams::zeros(units, input_dim),
            post_layers: vec![DenseLayerParams {
                weights: Matrix::identity(units),
                bias: vec![0.0; units],
                activation: Activation::Linear,
            }],
            token_embedding: None,
        }
    }

    /// Synthesize a model with uniform random weights in `[-scale, scale]`.
    pub fn random<R: Rng + ?Sized>(shape: &ModelShape, rng: &mut R) -> Self {
        let s = shape.weight_scale;
        let mat = |r: usize, c: usize, rng: &mut R| Matrix::from_fn(r, c, |_, _| rng.random_range(-s..=s));
        let vecr = |n: usize, rng: &mut R| (0..n).map(|_| rng.random_range(-s..=s)).collect::<Vector>();

        let mut width = shape.input_dim;
        let mut pre_layers = Vec::new();
        for &out in &shape.pre_widths {
            pre_layers.push(DenseLayerParams {
                weights: mat(out, width, rng),
                bias: vecr(out, rng),
                activation: Activation::Tanh,
            });
            width = out;
        }
        let units = shape.units;
        let gate = |rng: &mut R| GateWeights {
            w_input: mat(units, width, rng),
            w_hidden: mat(units, units, rng),
            bias: vecr(units, rng),
        };
        let lstm = LstmLayerParams {
            units,
            input_dim: width,
            forget: gate(rng),
            input: gate(rng),
            candidate: gate(rng),
            output: gate(rng),
        };
        width = units;
        let mut post_layers = Vec::new();
        for &out in &shape.hidden_post_widths {
            post_layers.push(DenseLayerParams {
                weights: mat(out, width, rng),
                bias: vecr(out, rng),
                activation: Activation::Relu,
            });
            width = out;
        }
        let (out, act) = match shape.task {
            Task::Classification => (shape.classes.max(2), Activation::Softmax),
            Task::Regression => (1, Activation::Linear),
        };
        post_layers.push(DenseLayerParams {
            weights: mat(out, width, rng),
            bias: vecr(out, rng),
            activation: act,
        });
        ModelSpec {
            task: shape.task,
            input_kind: InputKind::Continuous,
            n_steps: shape.n_steps,
            pre_layers,
            lstm,
            post_layers,
            token_embedding: None,
        }
    }
}

/// Architecture knobs for [`ModelSpec::random`].
#[derive(Debug, Clone)]
pub struct ModelShape {
    pub input_dim: usize,
    pub units: usize,
    pub n_steps: usize,
    pub pre_widths: Vec<usize>,
    pub hidden_post_widths: Vec<usize>,
    pub task: Task,
    pub classes: usize,
    pub weight_scale: f64,
}

impl Default for ModelShape {
    fn default() -> Self {
        ModelShape {
            input_dim: 2,
            units: 3,
            n_steps: 4,
            pre_widths: Vec::new(),
            hidden_post_widths: Vec::new(),
            task: Task::Classification,
            classes: 2,
            weight_scale: 1.0,
        }
    }
}

/// Values of every structural component at one step.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StepTrace {
    /// 1-based step index.
    pub t: usize,
    pub f: Vector,
    pub i: Vector,
    pub o: Vector,
    pub c: Vector,
    pub h: Vector,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Prediction {
    Class(usize),
    Value(f64),
}

#[derive(Debug, Clone, PartialEq)]
pub struct Trace {
    pub steps: Vec<StepTrace>,
    pub output: Vector,
    pub prediction: Prediction,
    /// Pre-activations of every pre-layer at every step, `[step][layer]`.
    pub pre_layer_z: Vec<Vec<Vector>>,
    /// Pre-activations of every post-layer.
    pub post_layer_z: Vec<Vector>,
}

impl Trace {
    pub fn n_steps(&self) -> usize {
        self.steps.len()
    }

    pub fn final_hidden(&self) -> &[f64] {
        &self.steps.last().expect("trace has at least one step").h
    }
}

/// One step of the LSTM recurrence.
pub fn lstm_cell_step(params: &LstmLayerParams, x_t: &[f64], c_prev: &[f64], h_prev: &[f64]) -> Result<StepTrace> {
    if x_t.len() != params.input_dim {
        return Err(Error::shape("x_t", params.input_dim, x_t.len()));
    }
    if c_prev.len() != params.units {
        return Err(Error::shape("c_prev", params.units, c_prev.len()));
    }
    if h_prev.len() != params.units {
        return Err(Error::shape("h_prev", params.units, h_prev.len()));
    }
    Ok(cell_step_unchecked(params, x_t, c_prev, h_prev, 0))
}

fn cell_step_unchecked(p: &LstmLayerParams, x: &[f64], c_prev: &[f64], h_prev: &[f64], t: usize) -> StepTrace {
    let f: Vector = p.forget.pre_activation(x, h_prev).into_iter().map(sigmoid).collect();
    let i: Vector = p.input.pre_activation(x, h_prev).into_iter().map(sigmoid).collect();
    let g = p.candidate.pre_activation(x, h_prev);
    let o: Vector = p.output.pre_activation(x, h_prev).into_iter().map(sigmoid).collect();
    let c: Vector = (0..p.units).map(|j| f[j] * c_prev[j] + i[j] * g[j].tanh()).collect();
    let h: Vector = (0..p.units).map(|j| o[j] * c[j].tanh()).collect();
    StepTrace { t, f, i, o, c, h }
}

fn ensure_finite(v: &[f64], step: usize, component: &str) -> Result<()> {
    if v.iter().all(|x| x.is_finite()) {
        Ok(())
    } else {
        Err(Error::NonFinite {
            step,
            component: component.to_string(),
        })
    }
}

/// Run the whole model from the zero state, recording every step.
pub fn run_model(model: &ModelSpec, input: &InputSequence) -> Result<Trace> {
    let raw_steps: Vec<Vector> = match (model.input_kind, input) {
        (InputKind::Continuous, InputSequence::Continuous { values, .. }) => {
            if values.len() != model.n_steps {
                return Err(Error::shape("input steps", model.n_steps, values.len()));
            }
            let dim = model.step_input_dim();
            for (t, row) in values.iter().enumerate() {
                if row.len() != dim {
                    return Err(Error::shape(format!("input step {}", t + 1), dim, row.len()));
                }
            }
            values.clone()
        }
        (InputKind::Token, InputSequence::Tokens { ids, .. }) => {
            let emb = model
                .token_embedding
                .as_ref()
                .ok_or_else(|| Error::Model("token model requires token_embedding".into()))?;
            if ids.len() != model.n_steps {
                return Err(Error::shape("input steps", model.n_steps, ids.len()));
            }
            ids.iter()
                .map(|&id| {
                    let id = id as usize;
                    if id >= emb.rows {
                        Err(Error::Input(format!("token id {id} out of vocabulary of {}", emb.rows)))
                    } else {
                        Ok(emb.row(id).to_vec())
                    }
                })
                .collect::<Result<_>>()?
        }
        (kind, _) => {
            return Err(Error::Input(format!("input kind does not match model input_kind {kind:?}")));
        }
    };

    let units = model.lstm.units;
    let mut c = vec![0.0; units];
    let mut h = vec![0.0; units];
    let mut steps = Vec::with_capacity(model.n_steps);
    let mut pre_layer_z = Vec::with_capacity(model.n_steps);
    for (idx, raw) in raw_steps.iter().enumerate() {
        let t = idx + 1;
        ensure_finite(raw, t, "x")?;
        let mut x = raw.clone();
        let mut zs = Vec::with_capacity(model.pre_layers.len());
        for (li, layer) in model.pre_layers.iter().enumerate() {
            let z = layer.pre_activation(&x);
            x = layer.activation.apply(&z);
            ensure_finite(&x, t, &format!("pre_layers[{li}]"))?;
            zs.push(z);
        }
        pre_layer_z.push(zs);
        let step = cell_step_unchecked(&model.lstm, &x, &c, &h, t);
        for (name, v) in [("f", &step.f), ("i", &step.i), ("o", &step.o), ("c", &step.c), ("h", &step.h)] {
            ensure_finite(v, t, name)?;
        }
        c.clone_from(&step.c);
        h.clone_from(&step.h);
        steps.push(step);
    }

    let mut y = h;
    let mut post_layer_z = Vec::with_capacity(model.post_layers.len());
    for (li, layer) in model.post_layers.iter().enumerate() {
        let z = layer.pre_activation(&y);
        y = layer.activation.apply(&z);
        ensure_finite(&y, model.n_steps, &format!("post_layers[{li}]"))?;
        post_layer_z.push(z);
    }
    let prediction = match model.task {
        Task::Classification => Prediction::Class(argmax(&y)),
        Task::Regression => Prediction::Value(y[0]),
    };
    Ok(Trace {
        steps,
        output: y,
        prediction,
        pre_layer_z,
        post_layer_z,
    })
}

/// Index of the first maximal entry.
pub fn argmax(v: &[f64]) -> usize {
    let mut best = 0;
    for (k, &x) in v.iter().enumerate() {
        if x > v[best] {
            best = k;
        }
    }
    best
}
