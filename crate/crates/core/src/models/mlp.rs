//! Fully connected GELU network with a two-logit softmax output.
//!
//! Training uses minibatch AdamW on cross-entropy, inverted dropout after
//! every hidden activation, and early stopping on validation error. The
//! returned weights are those of the best validation checkpoint.

use rand::seq::SliceRandom;
use rand::RngExt;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{seeded_rng, Dataset};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EvalSchedule {
    /// Validate after every epoch.
    Epoch,
    /// Validate after every `n` optimizer steps (and once at the end).
    Steps(usize),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct MlpConfig {
    pub hidden: Vec<usize>,
    pub dropout: f64,
    pub learning_rate: f64,
    pub weight_decay: f64,
    pub batch_size: usize,
    pub max_epochs: usize,
    /// Validations without improvement before stopping.
    pub patience: usize,
    pub eval: EvalSchedule,
}

impl Default for MlpConfig {
    fn default() -> Self {
        Self {
            hidden: vec![128, 128, 128],
            dropout: 0.1,
            learning_rate: 1e-3,
            weight_decay: 1e-2,
            batch_size: 64,
            max_epochs: 200,
            patience: 10,
            eval: EvalSchedule::Epoch,
        }
    }
}

impl MlpConfig {
    /// Head used on fused embedding + feature vectors.
    pub fn fusion_head() -> Self {
        Self {
            hidden: vec![256, 256],
            max_epochs: 10,
            eval: EvalSchedule::Steps(600),
            ..Self::default()
        }
    }

    fn check(&self) -> Result<()> {
        if self.hidden.contains(&0) {
            return Err(Error::param("hidden layers must be non-empty"));
        }
        if !(0.0..1.0).contains(&self.dropout) {
            return Err(Error::param("dropout must lie in [0, 1)"));
        }
        if self.batch_size == 0 || self.max_epochs == 0 {
            return Err(Error::param("batch_size and max_epochs must be at least 1"));
        }
        if matches!(self.eval, EvalSchedule::Steps(0)) {
            return Err(Error::param("validation interval must be at least 1 step"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Architecture {
    pub input: usize,
    pub hidden: Vec<usize>,
    pub output: usize,
    pub activation: String,
    pub dropout: f64,
}

impl Architecture {
    fn sizes(&self) -> Vec<usize> {
        let mut s = vec![self.input];
        s.extend(&self.hidden);
        s.push(self.output);
        s
    }
}

/// Dense layer; `weights` is `out x in`, row-major.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Dense {
    pub input: usize,
    pub output: usize,
    pub weights: Vec<f64>,
    pub bias: Vec<f64>,
}

impl Dense {
    fn init(input: usize, output: usize, rng: &mut ChaCha8Rng) -> Self {
        let bound = 1.0 / (input as f64).sqrt();
        let mut u = || rng.random_range(-bound..bound);
        let weights = (0..input * output).map(|_| u()).collect();
        let bias = (0..output).map(|_| u()).collect();
        Self {
            input,
            output,
            weights,
            bias,
        }
    }

    fn forward(&self, x: &[f64], out: &mut Vec<f64>) {
        out.clear();
        for o in 0..self.output {
            let row = &self.weights[o * self.input..(o + 1) * self.input];
            out.push(self.bias[o] + row.iter().zip(x).map(|(w, v)| w * v).sum::<f64>());
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MlpModel {
    pub architecture: Architecture,
    pub layers: Vec<Dense>,
}

const SQRT_2: f64 = std::f64::consts::SQRT_2;
const INV_SQRT_2PI: f64 = 0.398_942_280_401_432_7;

fn gelu(x: f64) -> f64 {
    0.5 * x * (1.0 + libm::erf(x / SQRT_2))
}

fn gelu_grad(x: f64) -> f64 {
    0.5 * (1.0 + libm::erf(x / SQRT_2)) + x * INV_SQRT_2PI * (-0.5 * x * x).exp()
}

fn softmax2(z: &[f64]) -> [f64; 2] {
    let m = z[0].max(z[1]);
    let a = (z[0] - m).exp();
    let b = (z[1] - m).exp();
    [a / (a + b), b / (a + b)]
}

impl MlpModel {
    fn new(arch: Architecture, rng: &mut ChaCha8Rng) -> Self {
        let sizes = arch.sizes();
        let layers = sizes
            .windows(2)
            .map(|w| Dense::init(w[0], w[1], rng))
            .collect();
        Self {
            architecture: arch,
            layers,
        }
    }

    /// Logits for one input, no dropout.
    pub fn logits(&self, x: &[f64]) -> Vec<f64> {
        let mut cur = x.to_vec();
        let mut next = Vec::new();
        let last = self.layers.len() - 1;
        for (l, layer) in self.layers.iter().enumerate() {
            layer.forward(&cur, &mut next);
            if l < last {
                next.iter_mut().for_each(|v| *v = gelu(*v));
            }
            std::mem::swap(&mut cur, &mut next);
        }
        cur
    }

    /// Softmax probability of the fake class.
    pub fn score(&self, x: &[f64]) -> f64 {
        softmax2(&self.logits(x))[1]
    }

    fn error_rate(&self, data: &Dataset) -> f64 {
        let wrong = data
            .rows()
            .zip(data.labels())
            .filter(|(r, &y)| (self.score(r) > 0.5) != y)
            .count();
        100.0 * wrong as f64 / data.len() as f64
    }

    pub fn n_parameters(&self) -> usize {
        self.layers
            .iter()
            .map(|l| l.weights.len() + l.bias.len())
            .sum()
    }
}

/// Validation history of one training run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainLog {
    /// `(optimizer step, validation error %)` in order.
    pub validations: Vec<(usize, f64)>,
    pub best_step: usize,
    pub best_validation_error: f64,
    pub steps: usize,
    pub stopped_early: bool,
}

struct Adam {
    m: Vec<Vec<f64>>,
    v: Vec<Vec<f64>>,
    t: i32,
}

const BETA1: f64 = 0.9;
const BETA2: f64 = 0.999;
const ADAM_EPS: f64 = 1e-8;

impl Adam {
    fn new(model: &MlpModel) -> Self {
        let shapes: Vec<usize> = model
            .layers
            .iter()
            .flat_map(|l| [l.weights.len(), l.bias.len()])
            .collect();
        Self {
            m: shapes.iter().map(|&n| vec![0.0; n]).collect(),
            v: shapes.iter().map(|&n| vec![0.0; n]).collect(),
            t: 0,
        }
    }

    fn step(&mut self, model: &mut MlpModel, grads: &[Vec<f64>], lr: f64, wd: f64) {
        self.t += 1;
        let c1 = 1.0 - BETA1.powi(self.t);
        let c2 = 1.0 - BETA2.powi(self.t);
        let params = model
            .layers
            .iter_mut()
            .flat_map(|l| [&mut l.weights, &mut l.bias]);
        for (k, p) in params.enumerate() {
            let (m, v, g) = (&mut self.m[k], &mut self.v[k], &grads[k]);
            for j in 0..p.len() {
                p[j] *= 1.0 - lr * wd;
                m[j] = BETA1 * m[j] + (1.0 - BETA1) * g[j];
                v[j] = BETA2 * v[j] + (1.0 - BETA2) * g[j] * g[j];
                p[j] -= lr * (m[j] / c1) / ((v[j] / c2).sqrt() + ADAM_EPS);
            }
        }
    }
}

/// Per-sample activations kept for backpropagation.
struct Trace {
    /// Input to each layer (post-activation, post-dropout of the previous one).
    inputs: Vec<Vec<f64>>,
    /// Pre-activations of each hidden layer.
    pre: Vec<Vec<f64>>,
    /// Dropout multipliers (0 or 1/(1-p)) for each hidden layer.
    masks: Vec<Vec<f64>>,
    logits: Vec<f64>,
}

fn forward_train(model: &MlpModel, x: &[f64], dropout: f64, rng: &mut ChaCha8Rng) -> Trace {
    let last = model.layers.len() - 1;
    let keep = 1.0 - dropout;
    let mut inputs = vec![x.to_vec()];
    let mut pre = Vec::with_capacity(last);
    let mut masks = Vec::with_capacity(last);
    let mut z = Vec::new();
    for (l, layer) in model.layers.iter().enumerate() {
        layer.forward(inputs.last().expect("input"), &mut z);
        if l == last {
            break;
        }
        let mask: Vec<f64> = if dropout > 0.0 {
            (0..z.len())
                .map(|_| {
                    if rng.random::<f64>() < keep {
                        1.0 / keep
                    } else {
                        0.0
                    }
                })
                .collect()
        } else {
            vec![1.0; z.len()]
        };
        let a: Vec<f64> = z.iter().zip(&mask).map(|(v, m)| gelu(*v) * m).collect();
        pre.push(z.clone());
        masks.push(mask);
        inputs.push(a);
    }
    Trace {
        inputs,
        pre,
        masks,
        logits: z,
    }
}

fn backward(model: &MlpModel, trace: &Trace, label: bool, scale: f64, grads: &mut [Vec<f64>]) {
    let p = softmax2(&trace.logits);
    let mut delta = vec![p[0] * scale, p[1] * scale];
    delta[usize::from(label)] -= scale;
    for l in (0..model.layers.len()).rev() {
        let layer = &model.layers[l];
        let input = &trace.inputs[l];
        {
            let (gw, rest) = grads[2 * l..].split_at_mut(1);
            let gw = &mut gw[0];
            let gb = &mut rest[0];
            for o in 0..layer.output {
                let d = delta[o];
                if d == 0.0 {
                    continue;
                }
                gb[o] += d;
                let row = &mut gw[o * layer.input..(o + 1) * layer.input];
                for (g, x) in row.iter_mut().zip(input) {
                    *g += d * x;
                }
            }
        }
        if l == 0 {
            break;
        }
        let mut prev = vec![0.0; layer.input];
        for o in 0..layer.output {
            let d = delta[o];
            if d == 0.0 {
                continue;
            }
            let row = &layer.weights[o * layer.input..(o + 1) * layer.input];
            for (p, w) in prev.iter_mut().zip(row) {
                *p += d * w;
            }
        }
        let h = l - 1;
        for (j, v) in prev.iter_mut().enumerate() {
            *v *= trace.masks[h][j] * gelu_grad(trace.pre[h][j]);
        }
        delta = prev;
    }
}

/// Trains an MLP classifier with early stopping on `validation`.
pub fn train_mlp(
    train: &Dataset,
    validation: &Dataset,
    config: &MlpConfig,
    seed: u64,
) -> Result<(MlpModel, TrainLog)> {
    if train.is_empty() {
        return Err(Error::EmptyDataset);
    }
    if validation.is_empty() {
        return Err(Error::param("validation split is empty"));
    }
    if validation.n_features() != train.n_features() {
        return Err(Error::Dimension {
            expected: train.n_features(),
            got: validation.n_features(),
        });
    }
    config.check()?;
    let mut rng = seeded_rng(seed);
    let arch = Architecture {
        input: train.n_features(),
        hidden: config.hidden.clone(),
        output: 2,
        activation: "gelu".into(),
        dropout: config.dropout,
    };
    let mut model = MlpModel::new(arch, &mut rng);
    let mut adam = Adam::new(&model);
    let mut grads: Vec<Vec<f64>> = model
        .layers
        .iter()
        .flat_map(|l| [vec![0.0; l.weights.len()], vec![0.0; l.bias.len()]])
        .collect();

    let mut best = model.clone();
    let mut best_err = f64::INFINITY;
    let mut best_step = 0;
    let mut since_best = 0;
    let mut validations = Vec::new();
    let mut step = 0usize;
    let mut last_validated = usize::MAX;
    let mut stopped_early = false;
    let mut order: Vec<usize> = (0..train.len()).collect();

    let mut validate =
        |model: &MlpModel, step: usize, validations: &mut Vec<(usize, f64)>| -> bool {
            let err = model.error_rate(validation);
            validations.push((step, err));
            if err < best_err {
                best_err = err;
                best = model.clone();
                best_step = step;
                since_best = 0;
            } else {
                since_best += 1;
            }
            since_best >= config.patience.max(1)
        };

    'epochs: for _ in 0..config.max_epochs {
        order.shuffle(&mut rng);
        for batch in order.chunks(config.batch_size) {
            grads
                .iter_mut()
                .for_each(|g| g.iter_mut().for_each(|v| *v = 0.0));
            let scale = 1.0 / batch.len() as f64;
            for &i in batch {
                let trace = forward_train(&model, train.row(i), config.dropout, &mut rng);
                backward(&model, &trace, train.label(i), scale, &mut grads);
            }
            adam.step(
                &mut model,
                &grads,
                config.learning_rate,
                config.weight_decay,
            );
            step += 1;
            if let EvalSchedule::Steps(n) = config.eval {
                if step.is_multiple_of(n) {
                    last_validated = step;
                    if validate(&model, step, &mut validations) {
                        stopped_early = true;
                        break 'epochs;
                    }
                }
            }
        }
        if config.eval == EvalSchedule::Epoch {
            last_validated = step;
            if validate(&model, step, &mut validations) {
                stopped_early = true;
                break;
            }
        }
    }
    if last_validated != step {
        validate(&model, step, &mut validations);
    }
    Ok((
        best,
        TrainLog {
            validations,
            best_step,
            best_validation_error: best_err,
            steps: step,
            stopped_early,
        },
    ))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn blobs(n: usize, seed: u64) -> Dataset {
        let mut rng = seeded_rng(seed);
        let mut rows = Vec::new();
        let mut labels = Vec::new();
        for i in 0..n {
            let y = i % 2 == 0;
            let c = if y { 1.5 } else { -1.5 };
            rows.push(vec![
                c + rng.random_range(-1.0..1.0),
                rng.random_range(-1.0..1.0),
            ]);
            labels.push(y);
        }
        Dataset::from_rows(&rows, &labels).unwrap()
    }

    fn small() -> MlpConfig {
        MlpConfig {
            hidden: vec![16, 16],
            max_epochs: 30,
            batch_size: 16,
            learning_rate: 1e-2,
            ..Default::default()
        }
    }

    #[test]
    fn gelu_derivative_matches_finite_difference() {
        for &x in &[-3.0, -0.7, 0.0, 0.4, 2.5] {
            let h = 1e-6;
            let fd = (gelu(x + h) - gelu(x - h)) / (2.0 * h);
            assert!((fd - gelu_grad(x)).abs() < 1e-8, "x={x}");
        }
    }

    #[test]
    fn backprop_matches_finite_difference() {
        let data = blobs(4, 1);
        let mut rng = seeded_rng(3);
        let arch = Architecture {
            input: 2,
            hidden: vec![3, 3],
            output: 2,
            activation: "gelu".into(),
            dropout: 0.0,
        };
        let model = MlpModel::new(arch, &mut rng);
        let loss = |m: &MlpModel| -> f64 {
            (0..data.len())
                .map(|i| -softmax2(&m.logits(data.row(i)))[usize::from(data.label(i))].ln())
                .sum::<f64>()
        };
        let mut grads: Vec<Vec<f64>> = model
            .layers
            .iter()
            .flat_map(|l| [vec![0.0; l.weights.len()], vec![0.0; l.bias.len()]])
            .collect();
        for i in 0..data.len() {
            let t = forward_train(&model, data.row(i), 0.0, &mut rng);
            backward(&model, &t, data.label(i), 1.0, &mut grads);
        }
        let h = 1e-6;
        for l in 0..model.layers.len() {
            for j in 0..model.layers[l].weights.len() {
                let mut plus = model.clone();
                plus.layers[l].weights[j] += h;
                let mut minus = model.clone();
                minus.layers[l].weights[j] -= h;
                let fd = (loss(&plus) - loss(&minus)) / (2.0 * h);
                assert!(
                    (fd - grads[2 * l][j]).abs() < 1e-6,
                    "layer {l} w{j}: {fd} vs {}",
                    grads[2 * l][j]
                );
            }
            for j in 0..model.layers[l].bias.len() {
                let mut plus = model.clone();
                plus.layers[l].bias[j] += h;
                let mut minus = model.clone();
                minus.layers[l].bias[j] -= h;
                let fd = (loss(&plus) - loss(&minus)) / (2.0 * h);
                assert!((fd - grads[2 * l + 1][j]).abs() < 1e-6);
            }
        }
    }

    #[test]
    fn learns_blobs_and_is_deterministic() {
        let train = blobs(200, 1);
        let valid = blobs(100, 2);
        let test = blobs(200, 3);
        let (m, log) = train_mlp(&train, &valid, &small(), 11).unwrap();
        assert!(m.error_rate(&test) < 5.0);
        let (m2, log2) = train_mlp(&train, &valid, &small(), 11).unwrap();
        assert_eq!(m, m2);
        assert_eq!(log, log2);
        // Inference uses no dropout.
        assert_eq!(m.score(test.row(0)), m.score(test.row(0)));
    }

    #[test]
    fn best_checkpoint_is_returned() {
        let train = blobs(100, 4);
        let valid = blobs(60, 5);
        let cfg = MlpConfig {
            eval: EvalSchedule::Steps(3),
            ..small()
        };
        let (m, log) = train_mlp(&train, &valid, &cfg, 2).unwrap();
        let min = log
            .validations
            .iter()
            .map(|v| v.1)
            .fold(f64::INFINITY, f64::min);
        assert_eq!(log.best_validation_error, min);
        assert_eq!(m.error_rate(&valid), min);
        assert!(log
            .validations
            .iter()
            .all(|v| v.0 % 3 == 0 || v.0 == log.steps));
    }

    #[test]
    fn architecture_and_errors() {
        let train = blobs(10, 1);
        let (m, _) = train_mlp(
            &train,
            &blobs(4, 2),
            &MlpConfig {
                max_epochs: 1,
                ..Default::default()
            },
            0,
        )
        .unwrap();
        let sizes: Vec<(usize, usize)> = m.layers.iter().map(|l| (l.input, l.output)).collect();
        assert_eq!(sizes, vec![(2, 128), (128, 128), (128, 128), (128, 2)]);
        let empty = Dataset::new(vec![], 2, vec![]).unwrap();
        assert!(train_mlp(&empty, &train, &small(), 0).is_err());
        assert!(train_mlp(&train, &empty, &small(), 0).is_err());
    }
}
