#![allow(dead_code)]

use std::io::Write;
use std::sync::{Mutex, MutexGuard};

use hlsrnn::model::{DenseWeights, Layer, LayerSpec, LayerWeights, Matrix, RecurrentWeights};
use hlsrnn::{LayerKind, NetworkModel};
use rand::Rng;
use rand_chacha::ChaCha8Rng;

static SERIAL: Mutex<()> = Mutex::new(());

/// Keeps timed tests from sharing the CPU.
pub fn serial() -> MutexGuard<'static, ()> {
    SERIAL.lock().unwrap_or_else(|e| e.into_inner())
}

/// Writes to the stdout handle directly so the line survives test capture.
pub fn report(criterion: u32, title: &str, pass: bool, detail: &str) {
    let mut out = std::io::stdout().lock();
    let _ = writeln!(
        out,
        "criterion {criterion:>2} [{}] {title}: {detail}",
        if pass { "PASS" } else { "FAIL" }
    );
    let _ = out.flush();
}

#[derive(Debug, Clone, Copy)]
pub struct ModelShape {
    pub max_seq: usize,
    pub max_input: usize,
    pub max_hidden: usize,
    pub max_dense: usize,
    pub max_dense_layers: usize,
    pub max_outputs: usize,
}

pub const SMALL: ModelShape = ModelShape {
    max_seq: 8,
    max_input: 5,
    max_hidden: 8,
    max_dense: 8,
    max_dense_layers: 2,
    max_outputs: 4,
};

fn matrix(rows: usize, cols: usize, scale: f64, rng: &mut ChaCha8Rng) -> Matrix {
    Matrix::from_fn(rows, cols, |_, _| rng.gen_range(-scale..scale))
}

fn vector(n: usize, scale: f64, rng: &mut ChaCha8Rng) -> Vec<f64> {
    (0..n).map(|_| rng.gen_range(-scale..scale)).collect()
}

/// An arbitrary recurrent network: an LSTM or GRU (either reset placement),
/// optional dense layers with random activations, and a random head.
pub fn random_model(rng: &mut ChaCha8Rng, shape: ModelShape) -> NetworkModel {
    let cell = if rng.gen_bool(0.5) {
        LayerKind::Lstm
    } else {
        LayerKind::Gru
    };
    let seq_len = rng.gen_range(1..=shape.max_seq);
    let input = rng.gen_range(1..=shape.max_input);
    let hidden = rng.gen_range(1..=shape.max_hidden);
    let mut spec = LayerSpec::recurrent(cell, input, hidden, seq_len);
    if cell == LayerKind::Gru {
        spec.reset_after = rng.gen_bool(0.5);
    }
    let g = cell.gates() * hidden;
    let scale = (6.0 / (input + hidden + g) as f64).sqrt();
    let mut layers = vec![Layer {
        spec,
        weights: LayerWeights::Recurrent(RecurrentWeights {
            kernel: matrix(input, g, scale, rng),
            recurrent_kernel: matrix(hidden, g, scale, rng),
            bias: vector(spec.bias_len(), 0.2, rng),
        }),
    }];
    let mut width = hidden;
    let n_dense = rng.gen_range(0..=shape.max_dense_layers);
    for i in 0..=n_dense {
        let last = i == n_dense;
        let units = if last {
            rng.gen_range(1..=shape.max_outputs)
        } else {
            rng.gen_range(1..=shape.max_dense)
        };
        let s = (6.0 / (width + units) as f64).sqrt();
        layers.push(Layer {
            spec: LayerSpec::dense(width, units),
            weights: LayerWeights::Dense(DenseWeights {
                kernel: matrix(width, units, s, rng),
                bias: vector(units, 0.2, rng),
            }),
        });
        let act = if last {
            [LayerKind::Sigmoid, LayerKind::Softmax, LayerKind::Tanh][rng.gen_range(0..3)]
        } else {
            [LayerKind::Relu, LayerKind::Tanh, LayerKind::Sigmoid][rng.gen_range(0..3)]
        };
        layers.push(Layer {
            spec: LayerSpec::activation(act, units),
            weights: LayerWeights::None,
        });
        width = units;
    }
    NetworkModel::new("random", layers).expect("generated model is valid")
}

pub fn random_sequence(model: &NetworkModel, range: f64, rng: &mut ChaCha8Rng) -> Vec<f64> {
    vector(model.seq_len() * model.input_dim(), range, rng)
}

fn sigmoid(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

/// `x^T M` for a row-major `[len(x) x cols]` matrix.
fn vecmat(x: &[f64], m: &Matrix) -> Vec<f64> {
    (0..m.cols())
        .map(|c| x.iter().enumerate().map(|(r, xr)| xr * m.get(r, c)).sum())
        .collect()
}

/// Plain double-precision forward pass written from the Keras cell
/// equations.
pub fn oracle_forward(model: &NetworkModel, seq: &[f64]) -> Vec<f64> {
    let mut v: Vec<f64> = Vec::new();
    for layer in &model.layers {
        let spec = layer.spec;
        v = match (&layer.weights, spec.kind) {
            (LayerWeights::Recurrent(w), LayerKind::Lstm) => {
                let n = spec.output_dim;
                let (mut h, mut c) = (vec![0.0; n], vec![0.0; n]);
                for x in seq.chunks(spec.input_dim) {
                    let a = vecmat(x, &w.kernel);
                    let b = vecmat(&h, &w.recurrent_kernel);
                    let z: Vec<f64> = (0..4 * n).map(|k| a[k] + b[k] + w.bias[k]).collect();
                    for j in 0..n {
                        let i = sigmoid(z[j]);
                        let f = sigmoid(z[n + j]);
                        let g = z[2 * n + j].tanh();
                        let o = sigmoid(z[3 * n + j]);
                        c[j] = f * c[j] + i * g;
                        h[j] = o * c[j].tanh();
                    }
                }
                h
            }
            (LayerWeights::Recurrent(w), LayerKind::Gru) => {
                let n = spec.output_dim;
                let mut h = vec![0.0; n];
                for x in seq.chunks(spec.input_dim) {
                    let a = vecmat(x, &w.kernel);
                    let next: Vec<f64> = if spec.reset_after {
                        let b = vecmat(&h, &w.recurrent_kernel);
                        let (bi, br) = w.bias.split_at(3 * n);
                        (0..n)
                            .map(|j| {
                                let z = sigmoid(a[j] + bi[j] + b[j] + br[j]);
                                let r = sigmoid(a[n + j] + bi[n + j] + b[n + j] + br[n + j]);
                                let cand = (a[2 * n + j] + bi[2 * n + j] + r * (b[2 * n + j] + br[2 * n + j])).tanh();
                                z * h[j] + (1.0 - z) * cand
                            })
                            .collect()
                    } else {
                        let b = vecmat(&h, &w.recurrent_kernel);
                        let z: Vec<f64> = (0..n).map(|j| sigmoid(a[j] + b[j] + w.bias[j])).collect();
                        let r: Vec<f64> = (0..n).map(|j| sigmoid(a[n + j] + b[n + j] + w.bias[n + j])).collect();
                        let rh: Vec<f64> = (0..n).map(|j| r[j] * h[j]).collect();
                        (0..n)
                            .map(|j| {
                                let u: f64 = (0..n).map(|k| rh[k] * w.recurrent_kernel.get(k, 2 * n + j)).sum();
                                let cand = (a[2 * n + j] + u + w.bias[2 * n + j]).tanh();
                                z[j] * h[j] + (1.0 - z[j]) * cand
                            })
                            .collect()
                    };
                    h = next;
                }
                h
            }
            (LayerWeights::Dense(w), LayerKind::Dense) => {
                let y = vecmat(&v, &w.kernel);
                y.iter().zip(&w.bias).map(|(a, b)| a + b).collect()
            }
            (_, LayerKind::Relu) => v.iter().map(|x| x.max(0.0)).collect(),
            (_, LayerKind::Sigmoid) => v.iter().map(|&x| sigmoid(x)).collect(),
            (_, LayerKind::Tanh) => v.iter().map(|x| x.tanh()).collect(),
            (_, LayerKind::Softmax) => {
                let m = v.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
                let e: Vec<f64> = v.iter().map(|x| (x - m).exp()).collect();
                let s: f64 = e.iter().sum();
                e.iter().map(|x| x / s).collect()
            }
            other => panic!("unexpected layer {other:?}"),
        };
    }
    v
}

/// Mann-Whitney AUC by enumerating every (positive, negative) pair.
pub fn brute_force_auc(scores: &[f64], labels: &[bool]) -> f64 {
    let mut twice_wins: u64 = 0;
    let mut pairs: u64 = 0;
    for (i, &si) in scores.iter().enumerate() {
        if !labels[i] {
            continue;
        }
        for (j, &sj) in scores.iter().enumerate() {
            if labels[j] {
                continue;
            }
            pairs += 1;
            twice_wins += if si > sj {
                2
            } else if si == sj {
                1
            } else {
                0
            };
        }
    }
    twice_wins as f64 / (2 * pairs) as f64
}
