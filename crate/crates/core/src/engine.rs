//! Fixed-point execution of LSTM/GRU networks.
//!
//! Every tensor (inputs, weights, biases, states, activations) lives in one
//! uniform working format. Results are rounded at three kinds of points:
//!
//! * once per output of each matrix-vector product, after exact
//!   accumulation of all products and the bias;
//! * once per activation output;
//! * once per element of each Hadamard product and each vector sum.
//!
//! The kernel (`W x + b`) and recurrent (`U h`) products are separate
//! matrix-vector products, each with its own rounding point, whose results
//! are then added.
//!
//! LSTM (Keras gate order `i, f, c~, o`):
//!
//! ```text
//! i = sig(W_i x + U_i h + b_i)     f = sig(W_f x + U_f h + b_f)
//! c~ = tanh(W_c x + U_c h + b_c)   o = sig(W_o x + U_o h + b_o)
//! c' = f * c + i * c~              h' = o * tanh(c')
//! ```
//!
//! GRU (Keras gate order `z, r, h~`), with `reset_after`:
//!
//! ```text
//! z = sig(W_z x + b_z + U_z h + b'_z)   r = sig(W_r x + b_r + U_r h + b'_r)
//! h~ = tanh(W_h x + b_h + r * (U_h h + b'_h))
//! h' = z * h + (1 - z) * h~
//! ```
//!
//! and without it `h~ = tanh(W_h x + b_h + U_h (r * h))`.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::activation::{ActivationError, ActivationSet, SoftmaxUnit, TableFn, Unit};
use crate::fxp::{quantize, FxpError, FxpFormat, FxpValue, QuantPolicy};
use crate::model::{DenseWeights, LayerKind, LayerSpec, LayerWeights, Matrix, NetworkModel, RecurrentWeights};

#[derive(Debug, Error)]
pub enum EngineError {
    #[error("dimension mismatch in {what}: expected {expected}, got {actual}")]
    Dimension {
        what: &'static str,
        expected: usize,
        actual: usize,
    },
    #[error("layer {index}: unsupported layer kind {kind}")]
    Unsupported { index: usize, kind: LayerKind },
    #[error("row {index}: {source}")]
    Row {
        index: usize,
        #[source]
        source: Box<EngineError>,
    },
    #[error(transparent)]
    Activation(#[from] ActivationError),
    #[error(transparent)]
    Fxp(#[from] FxpError),
}

/// Hardware schedule of the recurrent layer.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RnnMode {
    /// One block iterated over the sequence, state held internally.
    #[default]
    Static,
    /// One block per timestep, state passed from block to block.
    NonStatic,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EngineConfig {
    pub precision: FxpFormat,
    #[serde(default)]
    pub policy: QuantPolicy,
    #[serde(default)]
    pub activations: ActivationSet,
    #[serde(default)]
    pub mode: RnnMode,
}

impl EngineConfig {
    pub fn new(precision: FxpFormat) -> Self {
        Self {
            precision,
            policy: QuantPolicy::default(),
            activations: ActivationSet::default(),
            mode: RnnMode::Static,
        }
    }

    pub fn with_mode(mut self, mode: RnnMode) -> Self {
        self.mode = mode;
        self
    }

    pub fn with_policy(mut self, policy: QuantPolicy) -> Self {
        self.policy = policy;
        self
    }

    pub fn with_activations(mut self, activations: ActivationSet) -> Self {
        self.activations = activations;
        self
    }
}

/// Recurrent state between timesteps.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CellState {
    pub h: Vec<FxpValue>,
    /// LSTM only.
    pub c: Option<Vec<FxpValue>>,
}

impl CellState {
    pub fn zeros(kind: LayerKind, units: usize, fmt: FxpFormat) -> Self {
        let zero = vec![FxpValue::zero(fmt); units];
        Self {
            c: (kind == LayerKind::Lstm).then(|| zero.clone()),
            h: zero,
        }
    }

    fn to_raw(&self, fmt: FxpFormat, policy: QuantPolicy) -> RawState {
        let conv = |v: &[FxpValue]| v.iter().map(|x| x.requantize(fmt, policy).raw()).collect();
        RawState {
            h: conv(&self.h),
            c: self.c.as_deref().map(conv).unwrap_or_default(),
        }
    }

    fn from_raw(raw: RawState, kind: LayerKind, fmt: FxpFormat) -> Self {
        let conv = |v: Vec<i64>| v.into_iter().map(|r| FxpValue::from_raw_unchecked(r, fmt)).collect();
        Self {
            h: conv(raw.h),
            c: (kind == LayerKind::Lstm).then(|| conv(raw.c)),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
struct RawState {
    h: Vec<i64>,
    c: Vec<i64>,
}

/// Working format plus rounding policy, shared by all kernels.
#[derive(Debug, Clone, Copy)]
struct Arith {
    fmt: FxpFormat,
    policy: QuantPolicy,
}

impl Arith {
    fn quantize(&self, x: f64) -> Result<i64, FxpError> {
        quantize(x, self.fmt, self.policy).map(|v| v.raw())
    }

    fn add(&self, a: i64, b: i64) -> i64 {
        self.fmt
            .requantize(a as i128 + b as i128, self.fmt.frac_bits(), self.policy)
    }

    fn mul(&self, a: i64, b: i64) -> i64 {
        self.fmt
            .requantize(a as i128 * b as i128, 2 * self.fmt.frac_bits(), self.policy)
    }

    fn one(&self) -> i64 {
        self.fmt.requantize(1, 0, self.policy)
    }

    fn hadamard(&self, a: &[i64], b: &[i64]) -> Vec<i64> {
        a.iter().zip(b).map(|(&x, &y)| self.mul(x, y)).collect()
    }

    fn vadd(&self, a: &[i64], b: &[i64]) -> Vec<i64> {
        a.iter().zip(b).map(|(&x, &y)| self.add(x, y)).collect()
    }
}

/// Weight matrix stored output-major (`[out][in]`) in raw working units.
#[derive(Debug, Clone)]
struct QMatrix {
    outputs: usize,
    inputs: usize,
    data: Vec<i64>,
    /// Products and their sum fit an `i64` accumulator.
    narrow: bool,
}

impl QMatrix {
    fn from_keras(m: &Matrix, ar: &Arith) -> Result<Self, FxpError> {
        let (inputs, outputs) = (m.rows(), m.cols());
        let mut data = Vec::with_capacity(inputs * outputs);
        for o in 0..outputs {
            for i in 0..inputs {
                data.push(ar.quantize(m.get(i, o))?);
            }
        }
        // 2W bits per product, ceil(log2(n + 1)) for the sum incl. bias.
        let terms = (inputs + 1) as u32;
        let growth = u32::BITS - (terms - 1).leading_zeros();
        let narrow = 2 * ar.fmt.total_bits() + growth < 63;
        Ok(Self {
            outputs,
            inputs,
            data,
            narrow,
        })
    }

    /// `W^T x + b`, rounded once per output.
    fn matvec(&self, x: &[i64], bias: Option<&[i64]>, ar: &Arith) -> Vec<i64> {
        let frac = ar.fmt.frac_bits();
        (0..self.outputs)
            .map(|o| {
                let row = &self.data[o * self.inputs..(o + 1) * self.inputs];
                let b = bias.map_or(0, |b| b[o]);
                let acc: i128 = if self.narrow {
                    let s: i64 = row.iter().zip(x).map(|(&w, &v)| w * v).sum();
                    (s + (b << frac)) as i128
                } else {
                    row.iter().zip(x).fold((b as i128) << frac, |acc, (&w, &v)| {
                        acc.saturating_add(w as i128 * v as i128)
                    })
                };
                ar.fmt.requantize(acc, 2 * frac, ar.policy)
            })
            .collect()
    }
}

fn quantize_vec(v: &[f64], ar: &Arith) -> Result<Vec<i64>, FxpError> {
    v.iter().map(|&x| ar.quantize(x)).collect()
}

#[derive(Debug, Clone)]
struct QRecurrent {
    kind: LayerKind,
    input_dim: usize,
    units: usize,
    reset_after: bool,
    kernel: QMatrix,
    recurrent: QMatrix,
    /// Input-side bias, `G * n_h`.
    bias_in: Vec<i64>,
    /// Recurrent-side bias for a reset-after GRU.
    bias_rec: Option<Vec<i64>>,
    /// `U_h` alone, for the GRU form that resets before the product.
    candidate: Option<QMatrix>,
}

impl QRecurrent {
    fn new(spec: &LayerSpec, w: &RecurrentWeights, ar: &Arith) -> Result<Self, EngineError> {
        let g = spec.kind.gates();
        let n = spec.output_dim;
        check_dim("kernel rows", spec.input_dim, w.kernel.rows())?;
        check_dim("kernel columns", g * n, w.kernel.cols())?;
        check_dim("recurrent kernel rows", n, w.recurrent_kernel.rows())?;
        check_dim("recurrent kernel columns", g * n, w.recurrent_kernel.cols())?;
        check_dim("bias", spec.bias_len(), w.bias.len())?;
        let split = spec.kind == LayerKind::Gru && spec.reset_after;
        let recurrent = QMatrix::from_keras(&w.recurrent_kernel, ar)?;
        let candidate = (spec.kind == LayerKind::Gru && !spec.reset_after).then(|| QMatrix {
            outputs: n,
            inputs: n,
            data: recurrent.data[2 * n * n..].to_vec(),
            narrow: recurrent.narrow,
        });
        Ok(Self {
            kind: spec.kind,
            input_dim: spec.input_dim,
            units: n,
            reset_after: spec.reset_after,
            kernel: QMatrix::from_keras(&w.kernel, ar)?,
            recurrent,
            candidate,
            bias_in: quantize_vec(&w.bias[..g * n], ar)?,
            bias_rec: if split {
                Some(quantize_vec(&w.bias[g * n..], ar)?)
            } else {
                None
            },
        })
    }

    fn step(&self, x: &[i64], state: RawState, act: &Activations, ar: &Arith) -> RawState {
        match self.kind {
            LayerKind::Lstm => self.lstm_step(x, state, act, ar),
            _ => self.gru_step(x, state, act, ar),
        }
    }

    fn lstm_step(&self, x: &[i64], state: RawState, act: &Activations, ar: &Arith) -> RawState {
        let n = self.units;
        let wx = self.kernel.matvec(x, Some(&self.bias_in), ar);
        let uh = self.recurrent.matvec(&state.h, None, ar);
        let pre = ar.vadd(&wx, &uh);
        let i = act.sigmoid(&pre[..n], ar);
        let f = act.sigmoid(&pre[n..2 * n], ar);
        let cand = act.tanh(&pre[2 * n..3 * n], ar);
        let o = act.sigmoid(&pre[3 * n..], ar);
        let c = ar.vadd(&ar.hadamard(&f, &state.c), &ar.hadamard(&i, &cand));
        let h = ar.hadamard(&o, &act.tanh(&c, ar));
        RawState { h, c }
    }

    fn gru_step(&self, x: &[i64], state: RawState, act: &Activations, ar: &Arith) -> RawState {
        let n = self.units;
        let wx = self.kernel.matvec(x, Some(&self.bias_in), ar);
        let (z, cand) = if self.reset_after {
            let uh = self.recurrent.matvec(&state.h, self.bias_rec.as_deref(), ar);
            let z = act.sigmoid(&ar.vadd(&wx[..n], &uh[..n]), ar);
            let r = act.sigmoid(&ar.vadd(&wx[n..2 * n], &uh[n..2 * n]), ar);
            let gated = ar.hadamard(&r, &uh[2 * n..]);
            (z, act.tanh(&ar.vadd(&wx[2 * n..], &gated), ar))
        } else {
            // Only the z and r blocks of U h are needed before the reset.
            let uh = self.recurrent.matvec(&state.h, None, ar);
            let z = act.sigmoid(&ar.vadd(&wx[..n], &uh[..n]), ar);
            let r = act.sigmoid(&ar.vadd(&wx[n..2 * n], &uh[n..2 * n]), ar);
            let rh = ar.hadamard(&r, &state.h);
            let u_h = self
                .candidate
                .as_ref()
                .expect("built for reset-before GRUs")
                .matvec(&rh, None, ar);
            (z, act.tanh(&ar.vadd(&wx[2 * n..], &u_h), ar))
        };
        let one = ar.one();
        let keep = ar.hadamard(&z, &state.h);
        let one_minus_z: Vec<i64> = z.iter().map(|&zk| ar.add(one, -zk)).collect();
        let h = ar.vadd(&keep, &ar.hadamard(&one_minus_z, &cand));
        RawState { h, c: Vec::new() }
    }

    fn zero_state(&self) -> RawState {
        RawState {
            h: vec![0; self.units],
            c: if self.kind == LayerKind::Lstm {
                vec![0; self.units]
            } else {
                Vec::new()
            },
        }
    }
}

fn check_dim(what: &'static str, expected: usize, actual: usize) -> Result<(), EngineError> {
    if expected == actual {
        Ok(())
    } else {
        Err(EngineError::Dimension { what, expected, actual })
    }
}

#[derive(Debug, Clone)]
struct Activations {
    sigmoid: Unit,
    tanh: Unit,
    softmax: SoftmaxUnit,
}

impl Activations {
    fn new(set: &ActivationSet, policy: QuantPolicy) -> Result<Self, ActivationError> {
        Ok(Self {
            sigmoid: Unit::build(TableFn::Sigmoid, &set.sigmoid, policy)?,
            tanh: Unit::build(TableFn::Tanh, &set.tanh, policy)?,
            softmax: SoftmaxUnit::build(&set.softmax, policy)?,
        })
    }

    fn apply(unit: &Unit, v: &[i64], ar: &Arith) -> Vec<i64> {
        v.iter().map(|&x| unit.eval_raw(x, ar.fmt, ar.fmt, ar.policy)).collect()
    }

    fn sigmoid(&self, v: &[i64], ar: &Arith) -> Vec<i64> {
        Self::apply(&self.sigmoid, v, ar)
    }

    fn tanh(&self, v: &[i64], ar: &Arith) -> Vec<i64> {
        Self::apply(&self.tanh, v, ar)
    }
}

#[derive(Debug, Clone)]
enum HeadLayer {
    Dense { kernel: QMatrix, bias: Vec<i64> },
    Relu,
    Sigmoid,
    Tanh,
    Softmax,
}

/// Elementwise product of two equal-length vectors, each element rounded
/// into `fmt`.
pub fn hadamard(
    a: &[FxpValue],
    b: &[FxpValue],
    fmt: FxpFormat,
    policy: QuantPolicy,
) -> Result<Vec<FxpValue>, EngineError> {
    check_dim("hadamard operands", a.len(), b.len())?;
    Ok(a.iter()
        .zip(b)
        .map(|(&x, &y)| crate::fxp::fxp_mul(x, y, fmt, policy))
        .collect())
}

fn recurrent_step(
    kind: LayerKind,
    x_t: &[FxpValue],
    state: &CellState,
    w: &RecurrentWeights,
    cfg: &EngineConfig,
    reset_after: bool,
) -> Result<CellState, EngineError> {
    let ar = Arith {
        fmt: cfg.precision,
        policy: cfg.policy,
    };
    let units = w.recurrent_kernel.rows();
    let mut spec = LayerSpec::recurrent(kind, x_t.len(), units, 1);
    spec.reset_after = reset_after;
    let layer = QRecurrent::new(&spec, w, &ar)?;
    check_dim("hidden state", units, state.h.len())?;
    if kind == LayerKind::Lstm {
        check_dim("cell state", units, state.c.as_ref().map_or(0, Vec::len))?;
    }
    let act = Activations::new(&cfg.activations, cfg.policy)?;
    let x: Vec<i64> = x_t.iter().map(|v| v.requantize(ar.fmt, ar.policy).raw()).collect();
    let next = layer.step(&x, state.to_raw(ar.fmt, ar.policy), &act, &ar);
    Ok(CellState::from_raw(next, kind, ar.fmt))
}

/// One LSTM state update.
pub fn lstm_step(
    x_t: &[FxpValue],
    state: &CellState,
    w: &RecurrentWeights,
    cfg: &EngineConfig,
) -> Result<CellState, EngineError> {
    recurrent_step(LayerKind::Lstm, x_t, state, w, cfg, false)
}

/// One GRU state update. The bias length selects the `reset_after` form.
pub fn gru_step(
    x_t: &[FxpValue],
    state: &CellState,
    w: &RecurrentWeights,
    cfg: &EngineConfig,
) -> Result<CellState, EngineError> {
    let units = w.recurrent_kernel.rows();
    let reset_after = w.bias.len() == 6 * units;
    recurrent_step(LayerKind::Gru, x_t, state, w, cfg, reset_after)
}

/// A model with weights quantized and tables built for one configuration.
#[derive(Debug, Clone)]
pub struct Engine {
    cfg: EngineConfig,
    ar: Arith,
    act: Activations,
    recurrent: Option<QRecurrent>,
    seq_len: usize,
    input_dim: usize,
    output_dim: usize,
    head: Vec<HeadLayer>,
}

impl Engine {
    pub fn new(model: &NetworkModel, cfg: EngineConfig) -> Result<Self, EngineError> {
        let ar = Arith {
            fmt: cfg.precision,
            policy: cfg.policy,
        };
        let act = Activations::new(&cfg.activations, cfg.policy)?;
        let mut recurrent = None;
        let mut head = Vec::new();
        for (index, layer) in model.layers.iter().enumerate() {
            let kind = layer.spec.kind;
            match (&layer.weights, kind) {
                (LayerWeights::Recurrent(w), LayerKind::Lstm | LayerKind::Gru) => {
                    if index != 0 || layer.spec.return_sequences {
                        return Err(EngineError::Unsupported { index, kind });
                    }
                    recurrent = Some(QRecurrent::new(&layer.spec, w, &ar)?);
                }
                (LayerWeights::Dense(DenseWeights { kernel, bias }), LayerKind::Dense) => head.push(HeadLayer::Dense {
                    kernel: QMatrix::from_keras(kernel, &ar)?,
                    bias: quantize_vec(bias, &ar)?,
                }),
                (_, LayerKind::Relu) => head.push(HeadLayer::Relu),
                (_, LayerKind::Sigmoid) => head.push(HeadLayer::Sigmoid),
                (_, LayerKind::Tanh) => head.push(HeadLayer::Tanh),
                (_, LayerKind::Softmax) => head.push(HeadLayer::Softmax),
                _ => return Err(EngineError::Unsupported { index, kind }),
            }
        }
        Ok(Self {
            cfg,
            ar,
            act,
            recurrent,
            seq_len: model.seq_len(),
            input_dim: model.input_dim(),
            output_dim: model.output_dim(),
            head,
        })
    }

    pub fn config(&self) -> &EngineConfig {
        &self.cfg
    }

    pub fn seq_len(&self) -> usize {
        self.seq_len
    }

    pub fn input_dim(&self) -> usize {
        self.input_dim
    }

    pub fn output_dim(&self) -> usize {
        self.output_dim
    }

    /// Runs one flattened `[seq_len x input_dim]` sequence.
    pub fn run_sequence(&self, seq: &[f64]) -> Result<Vec<FxpValue>, EngineError> {
        let raw = self.run_raw(seq)?;
        Ok(raw
            .into_iter()
            .map(|r| FxpValue::from_raw_unchecked(r, self.ar.fmt))
            .collect())
    }

    /// Same as [`Engine::run_sequence`], converted to `f64`.
    pub fn run_sequence_f64(&self, seq: &[f64]) -> Result<Vec<f64>, EngineError> {
        let raw = self.run_raw(seq)?;
        Ok(raw.into_iter().map(|r| self.ar.fmt.raw_to_f64(r)).collect())
    }

    fn run_raw(&self, seq: &[f64]) -> Result<Vec<i64>, EngineError> {
        check_dim("input sequence", self.seq_len * self.input_dim, seq.len())?;
        let x = quantize_vec(seq, &self.ar)?;
        let features = match &self.recurrent {
            Some(layer) => match self.cfg.mode {
                RnnMode::Static => self.run_static(layer, &x),
                RnnMode::NonStatic => self.run_non_static(layer, &x),
            },
            None => x,
        };
        Ok(self.run_head(features))
    }

    /// One block whose stored state is updated in place at every timestep.
    fn run_static(&self, layer: &QRecurrent, x: &[i64]) -> Vec<i64> {
        let mut state = layer.zero_state();
        for x_t in x.chunks(layer.input_dim) {
            state = layer.step(
                x_t,
                std::mem::replace(&mut state, layer.zero_state()),
                &self.act,
                &self.ar,
            );
        }
        state.h
    }

    /// A chain of per-timestep blocks, each handing its state to the next.
    fn run_non_static(&self, layer: &QRecurrent, x: &[i64]) -> Vec<i64> {
        let blocks: Vec<StepBlock<'_>> = x
            .chunks(layer.input_dim)
            .map(|input| StepBlock { layer, input })
            .collect();
        blocks
            .iter()
            .fold(layer.zero_state(), |state, block| {
                block.process(state, &self.act, &self.ar)
            })
            .h
    }

    fn run_head(&self, mut v: Vec<i64>) -> Vec<i64> {
        let ar = &self.ar;
        for layer in &self.head {
            v = match layer {
                HeadLayer::Dense { kernel, bias } => kernel.matvec(&v, Some(bias), ar),
                HeadLayer::Relu => v.into_iter().map(|x| x.max(0)).collect(),
                HeadLayer::Sigmoid => self.act.sigmoid(&v, ar),
                HeadLayer::Tanh => self.act.tanh(&v, ar),
                HeadLayer::Softmax => self.act.softmax.apply_raw(&v, ar.fmt, ar.policy),
            };
        }
        v
    }

    /// Row-wise [`Engine::run_sequence_f64`]; rows may run concurrently but
    /// the output order always matches the input order.
    pub fn run_batch(&self, rows: &[Vec<f64>]) -> Result<Vec<Vec<f64>>, EngineError> {
        rows.par_iter()
            .enumerate()
            .map(|(index, row)| {
                self.run_sequence_f64(row).map_err(|e| EngineError::Row {
                    index,
                    source: Box::new(e),
                })
            })
            .collect()
    }
}

/// A per-timestep instance of the recurrent block in non-static mode.
struct StepBlock<'a> {
    layer: &'a QRecurrent,
    input: &'a [i64],
}

impl StepBlock<'_> {
    fn process(&self, state: RawState, act: &Activations, ar: &Arith) -> RawState {
        self.layer.step(self.input, state, act, ar)
    }
}

pub fn run_sequence(model: &NetworkModel, seq: &[f64], cfg: &EngineConfig) -> Result<Vec<FxpValue>, EngineError> {
    Engine::new(model, *cfg)?.run_sequence(seq)
}

pub fn run_batch(model: &NetworkModel, rows: &[Vec<f64>], cfg: &EngineConfig) -> Result<Vec<Vec<f64>>, EngineError> {
    Engine::new(model, *cfg)?.run_batch(rows)
}

/// Double-precision forward pass with exact activations; the floating-point
/// baseline quantized runs are compared against.
pub fn run_sequence_float(model: &NetworkModel, seq: &[f64]) -> Result<Vec<f64>, EngineError> {
    check_dim("input sequence", model.seq_len() * model.input_dim(), seq.len())?;
    let sig = crate::activation::sigmoid;
    let mut v = seq.to_vec();
    for (index, layer) in model.layers.iter().enumerate() {
        let spec = &layer.spec;
        v = match (&layer.weights, spec.kind) {
            (LayerWeights::Recurrent(w), kind @ (LayerKind::Lstm | LayerKind::Gru)) => {
                let n = spec.output_dim;
                let g = kind.gates();
                let mut h = vec![0.0; n];
                let mut c = vec![0.0; n];
                for x in v.chunks(spec.input_dim) {
                    let wx = float_matvec(&w.kernel, x, Some(&w.bias[..g * n]));
                    if kind == LayerKind::Lstm {
                        let uh = float_matvec(&w.recurrent_kernel, &h, None);
                        let pre: Vec<f64> = wx.iter().zip(&uh).map(|(a, b)| a + b).collect();
                        for k in 0..n {
                            let i = sig(pre[k]);
                            let f = sig(pre[n + k]);
                            let cand = pre[2 * n + k].tanh();
                            let o = sig(pre[3 * n + k]);
                            c[k] = f * c[k] + i * cand;
                            h[k] = o * c[k].tanh();
                        }
                    } else if spec.reset_after {
                        let uh = float_matvec(&w.recurrent_kernel, &h, Some(&w.bias[g * n..]));
                        h = (0..n)
                            .map(|k| {
                                let z = sig(wx[k] + uh[k]);
                                let r = sig(wx[n + k] + uh[n + k]);
                                let cand = (wx[2 * n + k] + r * uh[2 * n + k]).tanh();
                                z * h[k] + (1.0 - z) * cand
                            })
                            .collect();
                    } else {
                        let uh = float_matvec(&w.recurrent_kernel, &h, None);
                        let z: Vec<f64> = (0..n).map(|k| sig(wx[k] + uh[k])).collect();
                        let r: Vec<f64> = (0..n).map(|k| sig(wx[n + k] + uh[n + k])).collect();
                        let rh: Vec<f64> = r.iter().zip(&h).map(|(a, b)| a * b).collect();
                        h = (0..n)
                            .map(|k| {
                                let u: f64 = (0..n).map(|j| rh[j] * w.recurrent_kernel.get(j, 2 * n + k)).sum();
                                let cand = (wx[2 * n + k] + u).tanh();
                                z[k] * h[k] + (1.0 - z[k]) * cand
                            })
                            .collect();
                    }
                }
                h
            }
            (LayerWeights::Dense(w), LayerKind::Dense) => float_matvec(&w.kernel, &v, Some(&w.bias)),
            (_, LayerKind::Relu) => v.into_iter().map(|x| x.max(0.0)).collect(),
            (_, LayerKind::Sigmoid) => v.into_iter().map(sig).collect(),
            (_, LayerKind::Tanh) => v.into_iter().map(f64::tanh).collect(),
            (_, LayerKind::Softmax) => {
                let max = v.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
                let e: Vec<f64> = v.iter().map(|x| (x - max).exp()).collect();
                let s: f64 = e.iter().sum();
                e.into_iter().map(|x| x / s).collect()
            }
            (_, kind) => return Err(EngineError::Unsupported { index, kind }),
        };
    }
    Ok(v)
}

fn float_matvec(m: &Matrix, x: &[f64], bias: Option<&[f64]>) -> Vec<f64> {
    (0..m.cols())
        .map(|o| {
            let b = bias.map_or(0.0, |b| b[o]);
            x.iter().enumerate().fold(b, |acc, (i, &xi)| acc + xi * m.get(i, o))
        })
        .collect()
}
