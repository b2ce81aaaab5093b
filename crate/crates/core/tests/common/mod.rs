//! Independent reference routines shared by the integration tests. Nothing
//! here calls into the library's numerics; only its data types are read.
#![allow(dead_code)]

use std::path::PathBuf;

use lstmcov::lstm::{Activation, DenseLayerParams, Matrix, ModelSpec};

pub fn fixture(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("fixtures").join("toy_mnist_rows").join(name)
}

fn to_rows(m: &Matrix) -> Vec<Vec<f64>> {
    (0..m.rows()).map(|r| (0..m.cols()).map(|c| m.get(r, c)).collect()).collect()
}

fn sig(z: f64) -> f64 {
    1.0 / (1.0 + (-z).exp())
}

fn dense(layer: &DenseLayerParams, x: &[f64]) -> Vec<f64> {
    let w = to_rows(&layer.weights);
    let mut z = vec![0.0; w.len()];
    for r in 0..w.len() {
        let mut acc = layer.bias[r];
        for c in 0..x.len() {
            acc += w[r][c] * x[c];
        }
        z[r] = acc;
    }
    match layer.activation {
        Activation::Linear => z,
        Activation::Relu => z.iter().map(|v| if *v > 0.0 { *v } else { 0.0 }).collect(),
        Activation::Sigmoid => z.iter().map(|v| sig(*v)).collect(),
        Activation::Tanh => z.iter().map(|v| v.tanh()).collect(),
        Activation::Softmax => {
            let mut m = z[0];
            for v in &z {
                if *v > m {
                    m = *v;
                }
            }
            let e: Vec<f64> = z.iter().map(|v| (v - m).exp()).collect();
            let s: f64 = e.iter().sum();
            e.iter().map(|v| v / s).collect()
        }
    }
}

#[derive(Debug, Clone)]
pub struct RefStep {
    pub f: Vec<f64>,
    pub i: Vec<f64>,
    pub o: Vec<f64>,
    pub c: Vec<f64>,
    pub h: Vec<f64>,
}

/// Gate weights as one `[W_h | W_x]` matrix acting on the concatenated `[h; x]`.
fn stacked(w_hidden: &Matrix, w_input: &Matrix) -> Vec<Vec<f64>> {
    let h = to_rows(w_hidden);
    let x = to_rows(w_input);
    h.into_iter().zip(x).map(|(mut a, b)| {
        a.extend(b);
        a
    }).collect()
}

/// Straight-loop forward pass of a continuous-input model.
pub fn reference_forward(model: &ModelSpec, xs: &[Vec<f64>]) -> (Vec<RefStep>, Vec<f64>) {
    let l = &model.lstm;
    let n = l.units;
    let wf = stacked(&l.forget.w_hidden, &l.forget.w_input);
    let wi = stacked(&l.input.w_hidden, &l.input.w_input);
    let wg = stacked(&l.candidate.w_hidden, &l.candidate.w_input);
    let wo = stacked(&l.output.w_hidden, &l.output.w_input);
    let mut h = vec![0.0; n];
    let mut c = vec![0.0; n];
    let mut steps = Vec::new();
    for x0 in xs {
        let mut x = x0.clone();
        for layer in &model.pre_layers {
            x = dense(layer, &x);
        }
        let mut hx = h.clone();
        hx.extend(&x);
        let mut step = RefStep {
            f: vec![0.0; n],
            i: vec![0.0; n],
            o: vec![0.0; n],
            c: vec![0.0; n],
            h: vec![0.0; n],
        };
        for u in 0..n {
            let mut zf = l.forget.bias[u];
            let mut zi = l.input.bias[u];
            let mut zg = l.candidate.bias[u];
            let mut zo = l.output.bias[u];
            for k in 0..hx.len() {
                zf += wf[u][k] * hx[k];
                zi += wi[u][k] * hx[k];
                zg += wg[u][k] * hx[k];
                zo += wo[u][k] * hx[k];
            }
            step.f[u] = sig(zf);
            step.i[u] = sig(zi);
            step.o[u] = sig(zo);
            step.c[u] = step.f[u] * c[u] + step.i[u] * zg.tanh();
            step.h[u] = step.o[u] * step.c[u].tanh();
        }
        h = step.h.clone();
        c = step.c.clone();
        steps.push(step);
    }
    let mut y = h;
    for layer in &model.post_layers {
        y = dense(layer, &y);
    }
    (steps, y)
}

/// Standard normal CDF by composite Simpson integration of the density.
pub fn normal_cdf(z: f64) -> f64 {
    let lo = -12.0;
    if z <= lo {
        return 0.0;
    }
    let n = 20_000;
    let h = (z - lo) / n as f64;
    let pdf = |x: f64| (-0.5 * x * x).exp() / (2.0 * std::f64::consts::PI).sqrt();
    let mut s = pdf(lo) + pdf(z);
    for k in 1..n {
        let x = lo + k as f64 * h;
        s += if k % 2 == 1 { 4.0 } else { 2.0 } * pdf(x);
    }
    s * h / 3.0
}

/// `p`-quantile of `N(mu, sigma²)` by bisection on [`normal_cdf`].
pub fn normal_quantile(p: f64, mu: f64, sigma: f64) -> f64 {
    let (mut a, mut b) = (-10.0, 10.0);
    for _ in 0..80 {
        let m = 0.5 * (a + b);
        if normal_cdf(m) < p {
            a = m;
        } else {
            b = m;
        }
    }
    mu + sigma * 0.5 * (a + b)
}

pub fn positive_sum(v: &[f64]) -> f64 {
    let mut s = 0.0;
    for x in v {
        if *x > 0.0 {
            s += *x;
        }
    }
    s
}

pub fn negative_sum(v: &[f64]) -> f64 {
    let mut s = 0.0;
    for x in v {
        if *x < 0.0 {
            s += *x;
        }
    }
    s
}

pub fn mean(v: &[f64]) -> f64 {
    v.iter().sum::<f64>() / v.len() as f64
}
