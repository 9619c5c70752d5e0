use rand::Rng;

use super::{bce_with_logits, sigmoid, ParamVector, PredictorSpec};
use crate::data::Example;
use crate::seed::{self, tag};
use crate::{Error, Result};

/// Row-major feature matrix with one label per row.
#[derive(Debug, Clone, PartialEq)]
pub struct Batch {
    dim: usize,
    features: Vec<f64>,
    labels: Vec<f64>,
}

impl Batch {
    pub fn new(dim: usize, features: Vec<f64>, labels: Vec<f64>) -> Result<Self> {
        if dim == 0 || features.len() != dim * labels.len() {
            return Err(Error::Shape {
                expected: dim * labels.len(),
                actual: features.len(),
            });
        }
        Ok(Self {
            dim,
            features,
            labels,
        })
    }

    pub fn from_examples<'a, I>(dim: usize, examples: I) -> Self
    where
        I: IntoIterator<Item = &'a Example>,
    {
        let mut features = Vec::new();
        let mut labels = Vec::new();
        for ex in examples {
            debug_assert_eq!(ex.features.len(), dim);
            features.extend_from_slice(&ex.features);
            labels.push(ex.label.as_f64());
        }
        Self {
            dim,
            features,
            labels,
        }
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn labels(&self) -> &[f64] {
        &self.labels
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.features[i * self.dim..(i + 1) * self.dim]
    }
}

/// Weights uniform in `±init_scale * gain / sqrt(fan_in)` where `gain` is
/// `sqrt(6)` ahead of a ReLU and `1` on the output layer; biases zero.
pub fn init_params(spec: &PredictorSpec, seed: u64) -> Result<ParamVector> {
    spec.validate()?;
    let mut params = ParamVector::zeros(spec);
    let mut rng = seed::rng(seed, &[tag::INIT]);
    let sizes = spec.layer_sizes();
    let n_layers = sizes.len() - 1;
    let layout = params.layout().to_vec();
    let values = params.values_mut();
    for (layer, w) in sizes.windows(2).enumerate() {
        let fan_in = w[0] as f64;
        let gain = if layer + 1 < n_layers { 6f64.sqrt() } else { 1.0 };
        let bound = spec.init_scale * gain / fan_in.sqrt();
        if bound == 0.0 {
            continue;
        }
        for v in &mut values[layout[2 * layer].range()] {
            *v = rng.random_range(-bound..bound);
        }
    }
    Ok(params)
}

fn check(params: &ParamVector, spec: &PredictorSpec, batch: &Batch) -> Result<()> {
    if batch.dim() != spec.input_dim {
        return Err(Error::Shape {
            expected: spec.input_dim,
            actual: batch.dim(),
        });
    }
    if !params.matches(spec) {
        return Err(Error::Shape {
            expected: spec.n_params(),
            actual: params.len(),
        });
    }
    Ok(())
}

/// Per-layer (weight, bias) slices.
fn layers(params: &ParamVector) -> Vec<(&[f64], &[f64])> {
    let values = params.values();
    params
        .layout()
        .chunks(2)
        .map(|pair| (&values[pair[0].range()], &values[pair[1].range()]))
        .collect()
}

/// Runs one row forward, keeping every layer's activations (post-ReLU for
/// hidden layers, raw logit for the last).
fn forward_row(layers: &[(&[f64], &[f64])], sizes: &[usize], x: &[f64]) -> Vec<Vec<f64>> {
    let mut acts: Vec<Vec<f64>> = Vec::with_capacity(sizes.len());
    acts.push(x.to_vec());
    let last = layers.len() - 1;
    for (l, (weight, bias)) in layers.iter().enumerate() {
        let (fan_in, fan_out) = (sizes[l], sizes[l + 1]);
        let input = &acts[l];
        let out: Vec<f64> = (0..fan_out)
            .map(|o| {
                let row = &weight[o * fan_in..(o + 1) * fan_in];
                let pre = bias[o] + row.iter().zip(input).map(|(w, a)| w * a).sum::<f64>();
                if l < last {
                    pre.max(0.0)
                } else {
                    pre
                }
            })
            .collect();
        acts.push(out);
    }
    acts
}

/// One logit per batch row.
pub fn forward_logits(params: &ParamVector, spec: &PredictorSpec, batch: &Batch) -> Result<Vec<f64>> {
    check(params, spec, batch)?;
    let layers = layers(params);
    let sizes = spec.layer_sizes();
    Ok((0..batch.len())
        .map(|i| forward_row(&layers, &sizes, batch.row(i)).last().unwrap()[0])
        .collect())
}

pub fn predict_proba(params: &ParamVector, spec: &PredictorSpec, batch: &Batch) -> Result<Vec<f64>> {
    Ok(forward_logits(params, spec, batch)?
        .into_iter()
        .map(sigmoid)
        .collect())
}

/// Mean BCE-with-logits loss over the batch and its exact gradient with
/// respect to every parameter.
pub fn backward(params: &ParamVector, spec: &PredictorSpec, batch: &Batch) -> Result<(f64, Vec<f64>)> {
    check(params, spec, batch)?;
    if batch.is_empty() {
        return Err(Error::InvalidInput("empty batch".into()));
    }
    let layers = layers(params);
    let sizes = spec.layer_sizes();
    let layout = params.layout();
    let rows: Vec<Vec<Vec<f64>>> = (0..batch.len())
        .map(|i| forward_row(&layers, &sizes, batch.row(i)))
        .collect();
    let logits: Vec<f64> = rows.iter().map(|a| a.last().unwrap()[0]).collect();
    let (loss, dlogits) = bce_with_logits(&logits, batch.labels())?;

    let mut grad = vec![0.0; params.len()];
    for (acts, dz) in rows.iter().zip(dlogits) {
        // delta holds dL/d(pre-activation) of the current layer.
        let mut delta = vec![dz];
        for l in (0..layers.len()).rev() {
            let (fan_in, fan_out) = (sizes[l], sizes[l + 1]);
            let input = &acts[l];
            let w_off = layout[2 * l].offset;
            let b_off = layout[2 * l + 1].offset;
            for o in 0..fan_out {
                let d = delta[o];
                if d == 0.0 {
                    continue;
                }
                grad[b_off + o] += d;
                let g = &mut grad[w_off + o * fan_in..w_off + (o + 1) * fan_in];
                for (gi, a) in g.iter_mut().zip(input) {
                    *gi += d * a;
                }
            }
            if l == 0 {
                break;
            }
            let weight = layers[l].0;
            delta = (0..fan_in)
                .map(|i| {
                    if input[i] <= 0.0 {
                        return 0.0;
                    }
                    (0..fan_out).map(|o| weight[o * fan_in + i] * delta[o]).sum()
                })
                .collect();
        }
    }
    Ok((loss, grad))
}
