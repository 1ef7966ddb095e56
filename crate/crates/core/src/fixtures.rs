//! Benchmark-shaped models and synthetic sequence datasets.
//!
//! Randomness comes from ChaCha8 (`rand_chacha::ChaCha8Rng`) seeded with a
//! `u64` through `SeedableRng::seed_from_u64`; normal variates use
//! `rand_distr::StandardNormal`. Both are fixed algorithms, so a seed always
//! produces the same weights and samples.
//!
//! Synthetic data: each class `c` owns per-feature AR(1) coefficients
//! `phi[c][f]` and means `mu[c][f]`, and a sequence is
//!
//! ```text
//! x_0 = mu + e_0 / sqrt(1 - phi^2)
//! x_t = mu + phi * (x_{t-1} - mu) + e_t,   e_t ~ N(0, 1)
//! ```
//!
//! so classes differ in both autocorrelation and level.

use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use thiserror::Error;

use crate::data::Dataset;
use crate::model::{
    DenseWeights, Layer, LayerKind, LayerSpec, LayerWeights, Matrix, ModelError, NetworkModel, RecurrentWeights,
};

/// Seed used when none is given.
pub const DEFAULT_SEED: u64 = 20_210_504;

const TOP_TAGGING_LSTM: &str = include_str!("../data/surrogates/top_tagging_lstm.json");
const TOP_TAGGING_GRU: &str = include_str!("../data/surrogates/top_tagging_gru.json");

#[derive(Debug, Error)]
pub enum FixtureError {
    #[error("unknown benchmark {0:?}; expected top_tagging, flavor_tagging or quickdraw")]
    UnknownBenchmark(String),
    #[error("unknown task {0:?}; expected binary_seq or multiclass_seq")]
    UnknownTask(String),
    #[error("cell must be lstm or gru, got {0}")]
    NotRecurrent(LayerKind),
    #[error("dataset size must be at least 1")]
    EmptyDataset,
    #[error("no committed surrogate for {0}")]
    NoSurrogate(String),
    #[error("weights do not match the {bench} architecture: {reason}")]
    Architecture { bench: Benchmark, reason: String },
    #[error(transparent)]
    Model(#[from] ModelError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Benchmark {
    TopTagging,
    FlavorTagging,
    Quickdraw,
}

impl Benchmark {
    pub const ALL: [Benchmark; 3] = [Benchmark::TopTagging, Benchmark::FlavorTagging, Benchmark::Quickdraw];

    pub fn as_str(self) -> &'static str {
        match self {
            Benchmark::TopTagging => "top_tagging",
            Benchmark::FlavorTagging => "flavor_tagging",
            Benchmark::Quickdraw => "quickdraw",
        }
    }

    pub fn architecture(self, cell: LayerKind) -> Result<Architecture, FixtureError> {
        if !cell.is_recurrent() {
            return Err(FixtureError::NotRecurrent(cell));
        }
        let (seq_len, input_dim, hidden, dense, outputs): (usize, usize, usize, &[usize], usize) = match self {
            Benchmark::TopTagging => (20, 6, 20, &[64], 1),
            Benchmark::FlavorTagging => (15, 6, 120, &[50, 10], 3),
            Benchmark::Quickdraw => (100, 3, 128, &[256, 128], 5),
        };
        Ok(Architecture {
            cell,
            seq_len,
            input_dim,
            hidden,
            dense: dense.to_vec(),
            outputs,
        })
    }
}

impl fmt::Display for Benchmark {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Benchmark {
    type Err = FixtureError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().replace('-', "_").as_str() {
            "top_tagging" | "top" => Ok(Benchmark::TopTagging),
            "flavor_tagging" | "flavor" => Ok(Benchmark::FlavorTagging),
            "quickdraw" => Ok(Benchmark::Quickdraw),
            _ => Err(FixtureError::UnknownBenchmark(s.to_string())),
        }
    }
}

/// Recurrent layer, ReLU dense layers, and a sigmoid (one output) or
/// softmax (several) classifier.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Architecture {
    pub cell: LayerKind,
    pub seq_len: usize,
    pub input_dim: usize,
    pub hidden: usize,
    pub dense: Vec<usize>,
    pub outputs: usize,
}

impl Architecture {
    pub fn specs(&self) -> Vec<LayerSpec> {
        let mut specs = vec![LayerSpec::recurrent(
            self.cell,
            self.input_dim,
            self.hidden,
            self.seq_len,
        )];
        let mut width = self.hidden;
        for &d in &self.dense {
            specs.push(LayerSpec::dense(width, d));
            specs.push(LayerSpec::activation(LayerKind::Relu, d));
            width = d;
        }
        specs.push(LayerSpec::dense(width, self.outputs));
        let head = if self.outputs == 1 {
            LayerKind::Sigmoid
        } else {
            LayerKind::Softmax
        };
        specs.push(LayerSpec::activation(head, self.outputs));
        specs
    }

    /// Glorot-uniform kernels and `U(-0.1, 0.1)` biases.
    pub fn build(&self, name: &str, seed: u64) -> Result<NetworkModel, FixtureError> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let layers = self
            .specs()
            .into_iter()
            .map(|spec| random_layer(spec, &mut rng))
            .collect();
        let mut model = NetworkModel::new(name, layers)?;
        model.metadata.insert("seed".into(), seed.into());
        Ok(model)
    }

    /// Checks that `model` has exactly this layer sequence.
    pub fn matches(&self, model: &NetworkModel) -> Result<(), String> {
        let expected = self.specs();
        if model.layers.len() != expected.len() {
            return Err(format!("{} layers, expected {}", model.layers.len(), expected.len()));
        }
        for (i, (l, e)) in model.layers.iter().zip(&expected).enumerate() {
            let s = &l.spec;
            if (s.kind, s.input_dim, s.output_dim) != (e.kind, e.input_dim, e.output_dim)
                || (s.kind.is_recurrent() && s.seq_len != e.seq_len)
            {
                return Err(format!(
                    "layer {i} is {} {}->{}, expected {} {}->{}",
                    s.kind, s.input_dim, s.output_dim, e.kind, e.input_dim, e.output_dim
                ));
            }
        }
        Ok(())
    }
}

fn glorot(rows: usize, cols: usize, fan_in: usize, fan_out: usize, rng: &mut ChaCha8Rng) -> Matrix {
    let a = (6.0 / (fan_in + fan_out) as f64).sqrt();
    Matrix::from_fn(rows, cols, |_, _| rng.gen_range(-a..a))
}

fn small_bias(n: usize, rng: &mut ChaCha8Rng) -> Vec<f64> {
    (0..n).map(|_| rng.gen_range(-0.1..0.1)).collect()
}

fn random_layer(spec: LayerSpec, rng: &mut ChaCha8Rng) -> Layer {
    let weights = match spec.kind {
        LayerKind::Lstm | LayerKind::Gru => {
            let g = spec.kind.gates() * spec.output_dim;
            LayerWeights::Recurrent(RecurrentWeights {
                kernel: glorot(spec.input_dim, g, spec.input_dim, g, rng),
                recurrent_kernel: glorot(spec.output_dim, g, spec.output_dim, g, rng),
                bias: small_bias(spec.bias_len(), rng),
            })
        }
        LayerKind::Dense => LayerWeights::Dense(DenseWeights {
            kernel: glorot(spec.input_dim, spec.output_dim, spec.input_dim, spec.output_dim, rng),
            bias: small_bias(spec.output_dim, rng),
        }),
        _ => LayerWeights::None,
    };
    Layer { spec, weights }
}

/// A benchmark-shaped model with weights drawn from [`DEFAULT_SEED`].
pub fn make_benchmark_shape(bench: Benchmark, cell: LayerKind) -> Result<NetworkModel, FixtureError> {
    make_benchmark_shape_seeded(bench, cell, DEFAULT_SEED)
}

pub fn make_benchmark_shape_seeded(bench: Benchmark, cell: LayerKind, seed: u64) -> Result<NetworkModel, FixtureError> {
    let name = format!("{}_{}", bench, cell);
    bench.architecture(cell)?.build(&name, seed)
}

/// Uses `model` as the weights for `bench`, after checking its architecture.
pub fn with_weights(bench: Benchmark, cell: LayerKind, model: NetworkModel) -> Result<NetworkModel, FixtureError> {
    bench
        .architecture(cell)?
        .matches(&model)
        .map_err(|reason| FixtureError::Architecture { bench, reason })?;
    Ok(model)
}

/// Trained weights shipped with the crate. Only top tagging has them; they
/// were fit on [`Task::BinarySeq`] data.
pub fn surrogate_model(bench: Benchmark, cell: LayerKind) -> Result<NetworkModel, FixtureError> {
    let text = match (bench, cell) {
        (Benchmark::TopTagging, LayerKind::Lstm) => TOP_TAGGING_LSTM,
        (Benchmark::TopTagging, LayerKind::Gru) => TOP_TAGGING_GRU,
        _ => return Err(FixtureError::NoSurrogate(format!("{bench}_{cell}"))),
    };
    with_weights(bench, cell, NetworkModel::from_json_str(text)?)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Task {
    /// Two classes, top-tagging shape (20 x 6).
    BinarySeq,
    /// Three classes, flavor-tagging shape (15 x 6).
    MulticlassSeq,
}

impl Task {
    pub fn as_str(self) -> &'static str {
        match self {
            Task::BinarySeq => "binary_seq",
            Task::MulticlassSeq => "multiclass_seq",
        }
    }

    pub fn default_shape(self) -> SyntheticShape {
        match self {
            Task::BinarySeq => SyntheticShape {
                seq_len: 20,
                input_dim: 6,
                classes: 2,
            },
            Task::MulticlassSeq => SyntheticShape {
                seq_len: 15,
                input_dim: 6,
                classes: 3,
            },
        }
    }
}

impl fmt::Display for Task {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Task {
    type Err = FixtureError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().replace('-', "_").as_str() {
            "binary_seq" | "binary" => Ok(Task::BinarySeq),
            "multiclass_seq" | "multiclass" => Ok(Task::MulticlassSeq),
            _ => Err(FixtureError::UnknownTask(s.to_string())),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SyntheticShape {
    pub seq_len: usize,
    pub input_dim: usize,
    pub classes: usize,
}

/// AR(1) coefficient and mean of feature `f` for class `c`.
///
/// Feature `f` carries signal in its coefficient when `f % 3 == 0`, in its
/// mean when `f % 3 == 1`, and is pure noise otherwise.
fn class_process(c: usize, f: usize) -> (f64, f64) {
    let c = c as f64;
    match f % 3 {
        0 => (0.15 + 0.3 * c, 0.0),
        1 => (0.3, 0.18 * c),
        _ => (0.3, 0.0),
    }
}

pub fn make_synthetic_dataset(task: Task, n: usize, seed: u64) -> Result<Dataset, FixtureError> {
    make_synthetic_dataset_shaped(task.default_shape(), n, seed)
}

/// Labels cycle through the classes in a seeded shuffle so every class is
/// present once `n >= classes`.
pub fn make_synthetic_dataset_shaped(shape: SyntheticShape, n: usize, seed: u64) -> Result<Dataset, FixtureError> {
    if n == 0 {
        return Err(FixtureError::EmptyDataset);
    }
    let SyntheticShape {
        seq_len,
        input_dim,
        classes,
    } = shape;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut labels: Vec<usize> = (0..n).map(|i| i % classes.max(1)).collect();
    // Fisher-Yates with the same generator.
    for i in (1..n).rev() {
        let j = rng.gen_range(0..=i);
        labels.swap(i, j);
    }
    let mut rows = Vec::with_capacity(n);
    for &c in &labels {
        let mut row = vec![0.0; seq_len * input_dim];
        let mut prev = vec![0.0; input_dim];
        for t in 0..seq_len {
            for f in 0..input_dim {
                let (phi, mu) = class_process(c, f);
                let e: f64 = rng.sample(StandardNormal);
                let x = if t == 0 {
                    mu + e / (1.0 - phi * phi).sqrt()
                } else {
                    mu + phi * (prev[f] - mu) + e
                };
                prev[f] = x;
                row[t * input_dim + f] = x;
            }
        }
        rows.push(row);
    }
    Ok(Dataset::new(seq_len, input_dim, rows, labels).expect("generated rows are well formed"))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::count_parameters;

    #[test]
    fn table_shapes() {
        let cases = [
            (Benchmark::TopTagging, LayerKind::Lstm, 2160, 1409),
            (Benchmark::TopTagging, LayerKind::Gru, 1680, 1409),
            (Benchmark::FlavorTagging, LayerKind::Lstm, 60960, 6593),
            (Benchmark::FlavorTagging, LayerKind::Gru, 46080, 6593),
            (Benchmark::Quickdraw, LayerKind::Lstm, 67584, 66565),
            (Benchmark::Quickdraw, LayerKind::Gru, 51072, 66565),
        ];
        for (b, cell, rnn, rest) in cases {
            let m = make_benchmark_shape(b, cell).unwrap();
            let p = count_parameters(&m);
            assert_eq!((p.recurrent, p.non_recurrent), (rnn, rest), "{b} {cell}");
        }
        let q = make_benchmark_shape(Benchmark::Quickdraw, LayerKind::Lstm).unwrap();
        assert_eq!((q.seq_len(), q.input_dim(), q.output_dim()), (100, 3, 5));
    }

    #[test]
    fn names_and_errors() {
        assert_eq!("flavor_tagging".parse::<Benchmark>().unwrap(), Benchmark::FlavorTagging);
        assert!(matches!(
            "jets".parse::<Benchmark>(),
            Err(FixtureError::UnknownBenchmark(_))
        ));
        assert!(make_benchmark_shape(Benchmark::TopTagging, LayerKind::Dense).is_err());
        assert!(matches!(
            make_synthetic_dataset(Task::BinarySeq, 0, 1),
            Err(FixtureError::EmptyDataset)
        ));
    }

    #[test]
    fn deterministic_under_seed() {
        let a = make_synthetic_dataset(Task::MulticlassSeq, 30, 7).unwrap();
        let b = make_synthetic_dataset(Task::MulticlassSeq, 30, 7).unwrap();
        let c = make_synthetic_dataset(Task::MulticlassSeq, 30, 8).unwrap();
        let mut ba = Vec::new();
        let mut bb = Vec::new();
        a.write_csv(&mut ba).unwrap();
        b.write_csv(&mut bb).unwrap();
        assert_eq!(ba, bb);
        assert_ne!(a, c);
        assert_eq!(a.num_classes(), 3);
        assert_eq!(
            make_benchmark_shape(Benchmark::Quickdraw, LayerKind::Gru).unwrap(),
            make_benchmark_shape(Benchmark::Quickdraw, LayerKind::Gru).unwrap()
        );
    }

    #[test]
    fn surrogates_load() {
        for cell in [LayerKind::Lstm, LayerKind::Gru] {
            let m = surrogate_model(Benchmark::TopTagging, cell).unwrap();
            assert_eq!(
                count_parameters(&m).total,
                if cell == LayerKind::Lstm { 3569 } else { 3089 }
            );
        }
        assert!(surrogate_model(Benchmark::Quickdraw, LayerKind::Lstm).is_err());
    }
}
