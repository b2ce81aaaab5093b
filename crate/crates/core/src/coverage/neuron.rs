use crate::lstm::{ModelSpec, Trace};

/// Classic neuron coverage over the dense layers (pre and post). A neuron
/// counts once its pre-activation exceeds `threshold` on any trace, at any step.
#[derive(Debug, Clone)]
pub struct NeuronCoverage {
    threshold: f64,
    pre: Vec<Vec<bool>>,
    post: Vec<Vec<bool>>,
}

impl NeuronCoverage {
    pub fn new(model: &ModelSpec, threshold: f64) -> Self {
        NeuronCoverage {
            threshold,
            pre: model.pre_layers.iter().map(|l| vec![false; l.output_dim()]).collect(),
            post: model.post_layers.iter().map(|l| vec![false; l.output_dim()]).collect(),
        }
    }

    pub fn observe(&mut self, trace: &Trace) {
        let th = self.threshold;
        for step in &trace.pre_layer_z {
            for (hit, z) in self.pre.iter_mut().zip(step) {
                for (h, &v) in hit.iter_mut().zip(z) {
                    *h |= v > th;
                }
            }
        }
        for (hit, z) in self.post.iter_mut().zip(&trace.post_layer_z) {
            for (h, &v) in hit.iter_mut().zip(z) {
                *h |= v > th;
            }
        }
    }

    pub fn neurons(&self) -> usize {
        self.pre.iter().chain(&self.post).map(Vec::len).sum()
    }

    pub fn rate(&self) -> f64 {
        let total = self.neurons();
        if total == 0 {
            return 0.0;
        }
        let hit = self.pre.iter().chain(&self.post).flatten().filter(|&&h| h).count();
        hit as f64 / total as f64
    }
}

pub fn neuron_coverage<'a>(model: &ModelSpec, traces: impl IntoIterator<Item = &'a Trace>, threshold: f64) -> f64 {
    let mut nc = NeuronCoverage::new(model, threshold);
    for tr in traces {
        nc.observe(tr);
    }
    nc.rate()
}
