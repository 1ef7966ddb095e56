//! Network representation and the JSON weight exchange format.
//!
//! Weights follow the Keras layout: a recurrent kernel `W` is
//! `[input_dim x G*n_h]` and the recurrent kernel `U` is `[n_h x G*n_h]`,
//! with gate blocks packed along the columns. LSTM gates are ordered
//! `i, f, c~, o` (`G = 4`), GRU gates `z, r, h~` (`G = 3`). A GRU with
//! `reset_after` carries `2*G*n_h` biases: the input bias followed by the
//! recurrent bias.
//!
//! ```json
//! { "name": "top_tagging_lstm",
//!   "layers": [
//!     { "kind": "lstm", "input_dim": 6, "units": 20, "seq_len": 20,
//!       "weights": { "kernel": [[...]], "recurrent_kernel": [[...]], "bias": [...] } },
//!     { "kind": "dense", "input_dim": 20, "units": 64,
//!       "weights": { "kernel": [[...]], "bias": [...] } },
//!     { "kind": "relu", "input_dim": 64, "units": 64 } ] }
//! ```
//!
//! Matrices are row-major and the row index is the input neuron.

use std::collections::BTreeMap;
use std::fmt;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ModelError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("cannot parse model JSON: {0}")]
    Parse(#[from] serde_json::Error),
    #[error("model has no layers")]
    Empty,
    #[error("layer {index}: unknown layer kind {kind:?}")]
    UnknownKind { index: usize, kind: String },
    #[error("layer {index} ({kind}): {tensor} has shape {actual}, expected {expected}")]
    ShapeMismatch {
        index: usize,
        kind: LayerKind,
        tensor: &'static str,
        expected: Shape,
        actual: Shape,
    },
    #[error("layer {index} ({kind}): input_dim {actual} does not match previous output {expected}")]
    Chain {
        index: usize,
        kind: LayerKind,
        expected: usize,
        actual: usize,
    },
    #[error("layer {index} ({kind}): {reason}")]
    Invalid {
        index: usize,
        kind: LayerKind,
        reason: String,
    },
}

/// Tensor shape used in error messages: `[rows x cols]` or `[len]`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Shape {
    Matrix(usize, usize),
    Vector(usize),
}

impl fmt::Display for Shape {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Shape::Matrix(r, c) => write!(f, "[{r} x {c}]"),
            Shape::Vector(n) => write!(f, "[{n}]"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LayerKind {
    Lstm,
    Gru,
    Dense,
    Relu,
    Sigmoid,
    Tanh,
    Softmax,
}

impl LayerKind {
    pub fn is_recurrent(self) -> bool {
        matches!(self, LayerKind::Lstm | LayerKind::Gru)
    }

    pub fn is_activation(self) -> bool {
        matches!(
            self,
            LayerKind::Relu | LayerKind::Sigmoid | LayerKind::Tanh | LayerKind::Softmax
        )
    }

    /// Number of packed gate blocks for recurrent kinds.
    pub fn gates(self) -> usize {
        match self {
            LayerKind::Lstm => 4,
            LayerKind::Gru => 3,
            _ => 0,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            LayerKind::Lstm => "lstm",
            LayerKind::Gru => "gru",
            LayerKind::Dense => "dense",
            LayerKind::Relu => "relu",
            LayerKind::Sigmoid => "sigmoid",
            LayerKind::Tanh => "tanh",
            LayerKind::Softmax => "softmax",
        }
    }

    fn parse(s: &str) -> Option<Self> {
        Some(match s.to_ascii_lowercase().as_str() {
            "lstm" => LayerKind::Lstm,
            "gru" => LayerKind::Gru,
            "dense" => LayerKind::Dense,
            "relu" => LayerKind::Relu,
            "sigmoid" => LayerKind::Sigmoid,
            "tanh" => LayerKind::Tanh,
            "softmax" => LayerKind::Softmax,
            _ => return None,
        })
    }
}

impl fmt::Display for LayerKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Dense row-major matrix of `f64`.
#[derive(Debug, Clone, PartialEq)]
pub struct Matrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Matrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for r in 0..rows {
            for c in 0..cols {
                data.push(f(r, c));
            }
        }
        Self { rows, cols, data }
    }

    /// `None` when the rows are ragged.
    pub fn from_rows(rows: &[Vec<f64>]) -> Option<Self> {
        let cols = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != cols) {
            return None;
        }
        Some(Self {
            rows: rows.len(),
            cols,
            data: rows.concat(),
        })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn shape(&self) -> Shape {
        Shape::Matrix(self.rows, self.cols)
    }

    pub fn get(&self, r: usize, c: usize) -> f64 {
        self.data[r * self.cols + c]
    }

    pub fn set(&mut self, r: usize, c: usize, v: f64) {
        self.data[r * self.cols + c] = v;
    }

    pub fn row(&self, r: usize) -> &[f64] {
        &self.data[r * self.cols..(r + 1) * self.cols]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn to_rows(&self) -> Vec<Vec<f64>> {
        (0..self.rows).map(|r| self.row(r).to_vec()).collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DenseWeights {
    /// `[input_dim x units]`
    pub kernel: Matrix,
    pub bias: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RecurrentWeights {
    /// `[input_dim x G*n_h]`
    pub kernel: Matrix,
    /// `[n_h x G*n_h]`
    pub recurrent_kernel: Matrix,
    /// `[G*n_h]`, or `[2*G*n_h]` (input then recurrent) for a reset-after GRU.
    pub bias: Vec<f64>,
}

impl RecurrentWeights {
    pub fn zeros(kind: LayerKind, input_dim: usize, units: usize, reset_after: bool) -> Self {
        let g = kind.gates();
        let bias_len = if kind == LayerKind::Gru && reset_after {
            2 * g * units
        } else {
            g * units
        };
        Self {
            kernel: Matrix::zeros(input_dim, g * units),
            recurrent_kernel: Matrix::zeros(units, g * units),
            bias: vec![0.0; bias_len],
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum LayerWeights {
    None,
    Dense(DenseWeights),
    Recurrent(RecurrentWeights),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct LayerSpec {
    pub kind: LayerKind,
    pub input_dim: usize,
    /// Hidden units `n_h` for recurrent kinds.
    pub output_dim: usize,
    /// Recurrent kinds only.
    pub seq_len: usize,
    pub return_sequences: bool,
    pub reset_after: bool,
}

impl LayerSpec {
    pub fn recurrent(kind: LayerKind, input_dim: usize, units: usize, seq_len: usize) -> Self {
        Self {
            kind,
            input_dim,
            output_dim: units,
            seq_len,
            return_sequences: false,
            reset_after: kind == LayerKind::Gru,
        }
    }

    pub fn dense(input_dim: usize, units: usize) -> Self {
        Self {
            kind: LayerKind::Dense,
            input_dim,
            output_dim: units,
            seq_len: 1,
            return_sequences: false,
            reset_after: false,
        }
    }

    pub fn activation(kind: LayerKind, dim: usize) -> Self {
        Self {
            kind,
            input_dim: dim,
            output_dim: dim,
            seq_len: 1,
            return_sequences: false,
            reset_after: false,
        }
    }

    /// Bias entries a well-formed layer carries.
    pub fn bias_len(&self) -> usize {
        match self.kind {
            LayerKind::Gru if self.reset_after => 2 * 3 * self.output_dim,
            LayerKind::Lstm | LayerKind::Gru => self.kind.gates() * self.output_dim,
            LayerKind::Dense => self.output_dim,
            _ => 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Layer {
    pub spec: LayerSpec,
    pub weights: LayerWeights,
}

impl Layer {
    pub fn recurrent_weights(&self) -> Option<&RecurrentWeights> {
        match &self.weights {
            LayerWeights::Recurrent(w) => Some(w),
            _ => None,
        }
    }

    pub fn dense_weights(&self) -> Option<&DenseWeights> {
        match &self.weights {
            LayerWeights::Dense(w) => Some(w),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct NetworkModel {
    pub name: String,
    pub layers: Vec<Layer>,
    pub metadata: BTreeMap<String, serde_json::Value>,
}

impl NetworkModel {
    /// Builds and validates a model.
    pub fn new(name: impl Into<String>, layers: Vec<Layer>) -> Result<Self, ModelError> {
        let model = Self {
            name: name.into(),
            layers,
            metadata: BTreeMap::new(),
        };
        model.validate()?;
        Ok(model)
    }

    pub fn recurrent_layer(&self) -> Option<&Layer> {
        self.layers.iter().find(|l| l.spec.kind.is_recurrent())
    }

    /// Timesteps consumed per inference (1 for purely feed-forward models).
    pub fn seq_len(&self) -> usize {
        self.recurrent_layer().map_or(1, |l| l.spec.seq_len)
    }

    pub fn input_dim(&self) -> usize {
        self.layers[0].spec.input_dim
    }

    pub fn output_dim(&self) -> usize {
        self.layers.last().map_or(0, |l| l.spec.output_dim)
    }

    pub fn validate(&self) -> Result<(), ModelError> {
        if self.layers.is_empty() {
            return Err(ModelError::Empty);
        }
        let mut prev_out: Option<usize> = None;
        for (index, layer) in self.layers.iter().enumerate() {
            let spec = &layer.spec;
            let kind = spec.kind;
            let invalid = |reason: String| ModelError::Invalid { index, kind, reason };
            if spec.input_dim == 0 || spec.output_dim == 0 {
                return Err(invalid("dimensions must be at least 1".into()));
            }
            if let Some(expected) = prev_out {
                if spec.input_dim != expected {
                    return Err(ModelError::Chain {
                        index,
                        kind,
                        expected,
                        actual: spec.input_dim,
                    });
                }
            }
            if kind.is_recurrent() {
                if index != 0 {
                    return Err(invalid("the recurrent layer must be the first layer".into()));
                }
                if spec.seq_len == 0 {
                    return Err(invalid("seq_len must be at least 1".into()));
                }
                if spec.return_sequences {
                    return Err(invalid("return_sequences is not supported".into()));
                }
            }
            if kind.is_activation() && spec.input_dim != spec.output_dim {
                return Err(invalid(format!(
                    "activation maps {} inputs to {} outputs",
                    spec.input_dim, spec.output_dim
                )));
            }
            check_weights(index, layer)?;
            prev_out = Some(spec.output_dim);
        }
        Ok(())
    }

    pub fn from_json_str(s: &str) -> Result<Self, ModelError> {
        let raw: JsonModel = serde_json::from_str(s)?;
        raw.into_model()
    }

    pub fn to_json_string(&self) -> String {
        serde_json::to_string_pretty(&JsonModel::from_model(self)).expect("model serialization cannot fail")
    }
}

fn check_weights(index: usize, layer: &Layer) -> Result<(), ModelError> {
    let spec = &layer.spec;
    let kind = spec.kind;
    let mismatch = |tensor, expected, actual| ModelError::ShapeMismatch {
        index,
        kind,
        tensor,
        expected,
        actual,
    };
    let missing = |what: &str| ModelError::Invalid {
        index,
        kind,
        reason: format!("missing {what}"),
    };
    match (&layer.weights, kind) {
        (LayerWeights::Recurrent(w), LayerKind::Lstm | LayerKind::Gru) => {
            let cols = kind.gates() * spec.output_dim;
            let k = Shape::Matrix(spec.input_dim, cols);
            if w.kernel.shape() != k {
                return Err(mismatch("kernel", k, w.kernel.shape()));
            }
            let u = Shape::Matrix(spec.output_dim, cols);
            if w.recurrent_kernel.shape() != u {
                return Err(mismatch("recurrent_kernel", u, w.recurrent_kernel.shape()));
            }
            let b = Shape::Vector(spec.bias_len());
            if w.bias.len() != spec.bias_len() {
                return Err(mismatch("bias", b, Shape::Vector(w.bias.len())));
            }
        }
        (LayerWeights::Dense(w), LayerKind::Dense) => {
            let k = Shape::Matrix(spec.input_dim, spec.output_dim);
            if w.kernel.shape() != k {
                return Err(mismatch("kernel", k, w.kernel.shape()));
            }
            if w.bias.len() != spec.output_dim {
                return Err(mismatch(
                    "bias",
                    Shape::Vector(spec.output_dim),
                    Shape::Vector(w.bias.len()),
                ));
            }
        }
        (LayerWeights::None, k) if k.is_activation() => {}
        (_, LayerKind::Lstm | LayerKind::Gru) => return Err(missing("recurrent weights")),
        (_, LayerKind::Dense) => return Err(missing("dense weights")),
        (_, _) => {
            return Err(ModelError::Invalid {
                index,
                kind,
                reason: "activation layers carry no weights".into(),
            })
        }
    }
    Ok(())
}

/// Loads and validates a model file.
pub fn load_model(path: impl AsRef<Path>) -> Result<NetworkModel, ModelError> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|source| ModelError::Io {
        path: path.display().to_string(),
        source,
    })?;
    NetworkModel::from_json_str(&text)
}

pub fn save_model(model: &NetworkModel, path: impl AsRef<Path>) -> Result<(), ModelError> {
    let path = path.as_ref();
    fs::write(path, model.to_json_string()).map_err(|source| ModelError::Io {
        path: path.display().to_string(),
        source,
    })
}

#[derive(Debug, Serialize, Deserialize)]
struct JsonModel {
    name: String,
    layers: Vec<JsonLayer>,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    metadata: BTreeMap<String, serde_json::Value>,
}

#[derive(Debug, Serialize, Deserialize)]
struct JsonLayer {
    kind: String,
    input_dim: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    units: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    seq_len: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    return_sequences: Option<bool>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    reset_after: Option<bool>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    weights: Option<JsonWeights>,
}

#[derive(Debug, Serialize, Deserialize)]
struct JsonWeights {
    kernel: Vec<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    recurrent_kernel: Option<Vec<Vec<f64>>>,
    bias: Vec<f64>,
}

impl JsonModel {
    fn into_model(self) -> Result<NetworkModel, ModelError> {
        let mut layers = Vec::with_capacity(self.layers.len());
        for (index, raw) in self.layers.into_iter().enumerate() {
            let kind = LayerKind::parse(&raw.kind).ok_or_else(|| ModelError::UnknownKind {
                index,
                kind: raw.kind.clone(),
            })?;
            let invalid = |reason: &str| ModelError::Invalid {
                index,
                kind,
                reason: reason.to_string(),
            };
            let units = match raw.units {
                Some(u) => u,
                None if kind.is_activation() => raw.input_dim,
                None => return Err(invalid("missing units")),
            };
            let spec = LayerSpec {
                kind,
                input_dim: raw.input_dim,
                output_dim: units,
                seq_len: if kind.is_recurrent() {
                    raw.seq_len.ok_or_else(|| invalid("missing seq_len"))?
                } else {
                    1
                },
                return_sequences: raw.return_sequences.unwrap_or(false),
                reset_after: kind == LayerKind::Gru && raw.reset_after.unwrap_or(true),
            };
            let ragged = |tensor: &str| invalid(&format!("{tensor} rows have unequal lengths"));
            let weights = match (raw.weights, kind) {
                (None, _) => LayerWeights::None,
                (Some(w), LayerKind::Lstm | LayerKind::Gru) => {
                    let kernel = Matrix::from_rows(&w.kernel).ok_or_else(|| ragged("kernel"))?;
                    let rec = w.recurrent_kernel.ok_or_else(|| invalid("missing recurrent_kernel"))?;
                    let recurrent_kernel = Matrix::from_rows(&rec).ok_or_else(|| ragged("recurrent_kernel"))?;
                    LayerWeights::Recurrent(RecurrentWeights {
                        kernel,
                        recurrent_kernel,
                        bias: w.bias,
                    })
                }
                (Some(w), LayerKind::Dense) => LayerWeights::Dense(DenseWeights {
                    kernel: Matrix::from_rows(&w.kernel).ok_or_else(|| ragged("kernel"))?,
                    bias: w.bias,
                }),
                (Some(_), _) => return Err(invalid("activation layers carry no weights")),
            };
            layers.push(Layer { spec, weights });
        }
        let mut model = NetworkModel::new(self.name, layers)?;
        model.metadata = self.metadata;
        Ok(model)
    }

    fn from_model(model: &NetworkModel) -> Self {
        let layers = model
            .layers
            .iter()
            .map(|layer| {
                let spec = &layer.spec;
                let recurrent = spec.kind.is_recurrent();
                JsonLayer {
                    kind: spec.kind.as_str().to_string(),
                    input_dim: spec.input_dim,
                    units: Some(spec.output_dim),
                    seq_len: recurrent.then_some(spec.seq_len),
                    return_sequences: recurrent.then_some(spec.return_sequences),
                    reset_after: (spec.kind == LayerKind::Gru).then_some(spec.reset_after),
                    weights: match &layer.weights {
                        LayerWeights::None => None,
                        LayerWeights::Dense(w) => Some(JsonWeights {
                            kernel: w.kernel.to_rows(),
                            recurrent_kernel: None,
                            bias: w.bias.clone(),
                        }),
                        LayerWeights::Recurrent(w) => Some(JsonWeights {
                            kernel: w.kernel.to_rows(),
                            recurrent_kernel: Some(w.recurrent_kernel.to_rows()),
                            bias: w.bias.clone(),
                        }),
                    },
                }
            })
            .collect();
        Self {
            name: model.name.clone(),
            layers,
            metadata: model.metadata.clone(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct LayerParameters {
    pub index: usize,
    pub kind: LayerKind,
    pub count: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ParameterCounts {
    pub layers: Vec<LayerParameters>,
    pub recurrent: usize,
    pub non_recurrent: usize,
    pub total: usize,
}

/// Trainable parameters of one layer, from its shape alone.
pub fn layer_parameters(spec: &LayerSpec) -> usize {
    let (n, h) = (spec.input_dim, spec.output_dim);
    match spec.kind {
        LayerKind::Lstm | LayerKind::Gru => spec.kind.gates() * (n * h + h * h) + spec.bias_len(),
        LayerKind::Dense => n * h + h,
        _ => 0,
    }
}

pub fn count_parameters(model: &NetworkModel) -> ParameterCounts {
    let layers: Vec<_> = model
        .layers
        .iter()
        .enumerate()
        .map(|(index, l)| LayerParameters {
            index,
            kind: l.spec.kind,
            count: layer_parameters(&l.spec),
        })
        .collect();
    let recurrent = layers.iter().filter(|l| l.kind.is_recurrent()).map(|l| l.count).sum();
    let total: usize = layers.iter().map(|l| l.count).sum();
    ParameterCounts {
        layers,
        recurrent,
        non_recurrent: total - recurrent,
        total,
    }
}

/// Multiplications one layer performs; recurrent counts are per timestep.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
pub struct LayerMultiplies {
    pub index: usize,
    pub kernel_per_step: usize,
    pub recurrent_per_step: usize,
    pub dense: usize,
}

impl LayerMultiplies {
    pub fn total_per_step(&self) -> usize {
        self.kernel_per_step + self.recurrent_per_step + self.dense
    }
}

pub fn layer_multiplies(index: usize, spec: &LayerSpec) -> LayerMultiplies {
    let (n, h) = (spec.input_dim, spec.output_dim);
    let mut out = LayerMultiplies {
        index,
        ..Default::default()
    };
    match spec.kind {
        LayerKind::Lstm | LayerKind::Gru => {
            let g = spec.kind.gates();
            out.kernel_per_step = g * n * h;
            out.recurrent_per_step = g * h * h;
        }
        LayerKind::Dense => out.dense = n * h,
        _ => {}
    }
    out
}

pub fn count_multiplies(model: &NetworkModel) -> Vec<LayerMultiplies> {
    model
        .layers
        .iter()
        .enumerate()
        .map(|(i, l)| layer_multiplies(i, &l.spec))
        .collect()
}
