//! First-order FPGA cost model for hls4ml-style RNN designs.
//!
//! Resources scale with the number of multipliers instantiated, which is the
//! multiply count of each matrix-vector product divided by its reuse factor:
//! `R = (X, Y)` for the kernel and recurrent kernel of the recurrent layer,
//! `X` for the dense head. Multipliers wider than the DSP input port take two
//! DSPs. In non-static mode every timestep gets its own copy of the
//! recurrent layer, multiplying its cost by the sequence length.
//!
//! Latency under the resource strategy is
//!
//! ```text
//! L_step = step_c0 + step_c1 * max(X, Y)
//! L_head = sum over dense layers of (head_c0 + head_c1 * min(X, mults))
//! latency_min = seq_len * L_step + L_head
//! latency_max = latency_min + seq_len * (band_c0 + band_c1 * n_h)
//! ```
//!
//! and `seq_len * pipe_step_cycles` under the latency strategy. The nominal
//! latency is the midpoint of the band. A static design cannot accept a new
//! inference until the last one finishes, so its II is the nominal latency;
//! a non-static design accepts one as soon as the first block is free, so its
//! II is the per-step initiation interval (`L_step`, or 1 for a fully
//! pipelined latency-strategy block).

use std::collections::BTreeMap;
use std::fmt;
use std::fs;
use std::path::Path;
use std::str::FromStr;

use num_rational::Ratio;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::activation::{ActivationImpl, ActivationSet, LutConfig, SoftmaxImpl};
use crate::engine::RnnMode;
use crate::fxp::FxpFormat;
use crate::model::{count_parameters, layer_multiplies, layer_parameters, LayerKind, NetworkModel};

const DEFAULT_DEVICES: &str = include_str!("../data/devices.json");
/// The shipped calibration file, equal to `Calibration::default()`.
pub const DEFAULT_CALIBRATION: &str = include_str!("../data/calibration.toml");

#[derive(Debug, Error)]
pub enum PerfError {
    #[error("invalid reuse {0:?}: expected X:Y, (X,Y) or (X,Y [Z]) with positive integers")]
    Reuse(String),
    #[error("invalid hardware configuration: {0}")]
    Config(String),
    #[error("unknown device {name:?}; known devices: {known}")]
    UnknownDevice { name: String, known: String },
    #[error("cannot read {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("cannot parse {what}: {message}")]
    Parse { what: &'static str, message: String },
}

/// Kernel and recurrent-kernel reuse factors `R = (X, Y)`.
///
/// `lstm_recurrent` records the bracketed alternate of `(X,Y [Z])`, where an
/// LSTM layer uses `Z` in place of `Y`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct ReusePair {
    pub kernel: u32,
    pub recurrent: u32,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lstm_recurrent: Option<u32>,
}

impl ReusePair {
    pub fn new(kernel: u32, recurrent: u32) -> Self {
        Self {
            kernel,
            recurrent,
            lstm_recurrent: None,
        }
    }

    pub fn fully_parallel() -> Self {
        Self::new(1, 1)
    }

    /// `(X, Y)` as applied to a layer of `kind`.
    pub fn for_kind(&self, kind: LayerKind) -> (u32, u32) {
        match (kind, self.lstm_recurrent) {
            (LayerKind::Lstm, Some(z)) => (self.kernel, z),
            _ => (self.kernel, self.recurrent),
        }
    }

    pub fn scaled(&self, factor: u32) -> Self {
        Self {
            kernel: self.kernel * factor,
            recurrent: self.recurrent * factor,
            lstm_recurrent: self.lstm_recurrent.map(|z| z * factor),
        }
    }
}

impl fmt::Display for ReusePair {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.lstm_recurrent {
            Some(z) => write!(f, "({},{} [{}])", self.kernel, self.recurrent, z),
            None => write!(f, "({},{})", self.kernel, self.recurrent),
        }
    }
}

impl FromStr for ReusePair {
    type Err = PerfError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let err = || PerfError::Reuse(s.to_string());
        let t = s.trim();
        let t = t.strip_prefix('(').and_then(|t| t.strip_suffix(')')).unwrap_or(t);
        let (x, rest) = t.split_once([':', ',']).ok_or_else(err)?;
        let (y, alt) = match rest.split_once('[') {
            Some((y, alt)) => (y, Some(alt.trim().strip_suffix(']').ok_or_else(err)?)),
            None => (rest, None),
        };
        let num = |v: &str| -> Result<u32, PerfError> {
            match v.trim().parse::<u32>() {
                Ok(n) if n >= 1 => Ok(n),
                _ => Err(err()),
            }
        };
        Ok(Self {
            kernel: num(x)?,
            recurrent: num(y)?,
            lstm_recurrent: alt.map(num).transpose()?,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Strategy {
    Latency,
    #[default]
    Resource,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct DeviceBudget {
    pub dsp: u64,
    pub ff: u64,
    pub lut: u64,
    pub bram: u64,
}

/// Resource budgets keyed by part number.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct DeviceDb {
    devices: BTreeMap<String, DeviceBudget>,
}

impl DeviceDb {
    /// The built-in table of target parts.
    pub fn builtin() -> Self {
        Self::from_json_str(DEFAULT_DEVICES).expect("built-in device table is valid")
    }

    pub fn from_json_str(s: &str) -> Result<Self, PerfError> {
        serde_json::from_str(s).map_err(|e| PerfError::Parse {
            what: "device database",
            message: e.to_string(),
        })
    }

    pub fn from_path(path: impl AsRef<Path>) -> Result<Self, PerfError> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|source| PerfError::Io {
            path: path.display().to_string(),
            source,
        })?;
        Self::from_json_str(&text)
    }

    pub fn get(&self, name: &str) -> Result<DeviceBudget, PerfError> {
        self.devices.get(name).copied().ok_or_else(|| PerfError::UnknownDevice {
            name: name.to_string(),
            known: self.names().collect::<Vec<_>>().join(", "),
        })
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.devices.keys().map(String::as_str)
    }
}

/// Tunable constants of the cost model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct Calibration {
    pub step_c0: f64,
    pub step_c1: f64,
    pub pipe_step_cycles: u64,
    pub head_c0: f64,
    pub head_c1: f64,
    pub band_c0: f64,
    pub band_c1: f64,
    pub ff_per_mult_bit: f64,
    pub lut_per_mult_bit: f64,
    /// Table bits one LUT stores when used as ROM.
    pub lut_rom_bits: u64,
    pub bram_block_bits: u64,
    pub latency_strategy_max_params: usize,
    /// Optional post-synthesis multipliers applied to HLS FF/LUT estimates.
    pub vivado_ff_factor: Option<f64>,
    pub vivado_lut_factor: Option<f64>,
}

/// Same values as the shipped `data/calibration.toml`.
impl Default for Calibration {
    fn default() -> Self {
        Self {
            step_c0: 18.0,
            step_c1: 1.0,
            pipe_step_cycles: 17,
            head_c0: 2.0,
            head_c1: 1.0,
            band_c0: 0.0,
            band_c1: 2.0,
            ff_per_mult_bit: 4.0,
            lut_per_mult_bit: 8.0,
            lut_rom_bits: 64,
            bram_block_bits: 36_864,
            latency_strategy_max_params: 40_000,
            vivado_ff_factor: None,
            vivado_lut_factor: None,
        }
    }
}

impl Calibration {
    pub fn from_path(path: impl AsRef<Path>) -> Result<Self, PerfError> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|source| PerfError::Io {
            path: path.display().to_string(),
            source,
        })?;
        let is_json = path.extension().is_some_and(|e| e == "json");
        if is_json {
            serde_json::from_str(&text).map_err(|e| PerfError::Parse {
                what: "calibration",
                message: e.to_string(),
            })
        } else {
            toml::from_str(&text).map_err(|e| PerfError::Parse {
                what: "calibration",
                message: e.to_string(),
            })
        }
    }

    /// Cycles for one recurrent step under the resource strategy.
    pub fn step_cycles(&self, reuse: (u32, u32)) -> u64 {
        let r = reuse.0.max(reuse.1) as f64;
        (self.step_c0 + self.step_c1 * r).ceil().max(1.0) as u64
    }

    fn band_cycles(&self, units: usize) -> u64 {
        (self.band_c0 + self.band_c1 * units as f64).ceil().max(0.0) as u64
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HardwareConfig {
    pub reuse: ReusePair,
    #[serde(default)]
    pub strategy: Strategy,
    #[serde(default)]
    pub mode: RnnMode,
    #[serde(default = "default_clock")]
    pub clock_mhz: f64,
    #[serde(default = "default_dsp_width")]
    pub dsp_input_width: u32,
    #[serde(default)]
    pub budget: Option<DeviceBudget>,
    /// Activation tables whose storage is charged to LUTs.
    #[serde(default)]
    pub tables: ActivationSet,
}

fn default_clock() -> f64 {
    200.0
}

fn default_dsp_width() -> u32 {
    18
}

impl HardwareConfig {
    pub fn new(reuse: ReusePair) -> Self {
        Self {
            reuse,
            strategy: Strategy::Resource,
            mode: RnnMode::Static,
            clock_mhz: default_clock(),
            dsp_input_width: default_dsp_width(),
            budget: None,
            tables: ActivationSet::default(),
        }
    }

    pub fn with_strategy(mut self, strategy: Strategy) -> Self {
        self.strategy = strategy;
        self
    }

    pub fn with_mode(mut self, mode: RnnMode) -> Self {
        self.mode = mode;
        self
    }

    pub fn with_budget(mut self, budget: DeviceBudget) -> Self {
        self.budget = Some(budget);
        self
    }

    pub fn validate(&self) -> Result<(), PerfError> {
        let r = self.reuse;
        if r.kernel == 0 || r.recurrent == 0 || r.lstm_recurrent == Some(0) {
            return Err(PerfError::Config("reuse factors must be at least 1".into()));
        }
        if !(self.clock_mhz.is_finite() && self.clock_mhz > 0.0) {
            return Err(PerfError::Config(format!(
                "clock must be positive, got {} MHz",
                self.clock_mhz
            )));
        }
        if (self.clock_mhz * 1e6).fract() != 0.0 {
            return Err(PerfError::Config(format!(
                "clock must be a whole number of hertz, got {} MHz",
                self.clock_mhz
            )));
        }
        if self.dsp_input_width == 0 {
            return Err(PerfError::Config("DSP input width must be positive".into()));
        }
        Ok(())
    }

    /// Clock in whole hertz.
    pub fn clock_hz(&self) -> u64 {
        (self.clock_mhz * 1e6).round() as u64
    }
}

/// Cost of one layer of the design.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LayerCost {
    pub index: usize,
    pub kind: LayerKind,
    pub dsp: u64,
    /// FF/LUT attributable to multipliers (the part that scales as `W/R`).
    pub ff_mult: f64,
    pub lut_mult: f64,
    pub ff: f64,
    pub lut: f64,
    pub bram: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ResourceFit {
    pub used: u64,
    pub available: u64,
    pub utilization: f64,
    pub fits: bool,
}

impl ResourceFit {
    fn new(used: u64, available: u64) -> Self {
        Self {
            used,
            available,
            utilization: if available == 0 {
                if used == 0 {
                    0.0
                } else {
                    f64::INFINITY
                }
            } else {
                used as f64 / available as f64
            },
            fits: used <= available,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BudgetReport {
    pub dsp: ResourceFit,
    pub ff: ResourceFit,
    pub lut: ResourceFit,
    pub bram: ResourceFit,
}

impl BudgetReport {
    pub fn all_fit(&self) -> bool {
        self.dsp.fits && self.ff.fits && self.lut.fits && self.bram.fits
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LatencyEstimate {
    /// Latency of one recurrent block for one timestep.
    pub step_latency_cycles: u64,
    /// Cycles between inputs one recurrent block can accept.
    pub step_ii_cycles: u64,
    pub head_cycles: u64,
    pub latency_cycles_min: u64,
    pub latency_cycles_max: u64,
    /// Midpoint of the band; the expected latency.
    pub latency_cycles: u64,
    pub ii_cycles: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PerfEstimate {
    pub dsp: u64,
    pub ff: u64,
    pub lut: u64,
    pub bram: u64,
    pub latency_cycles_min: u64,
    pub latency_cycles_max: u64,
    pub latency_cycles: u64,
    pub latency_us_min: f64,
    pub latency_us_max: f64,
    pub step_latency_cycles: u64,
    pub step_ii_cycles: u64,
    pub ii_cycles: u64,
    pub clock_hz: u64,
    /// `clock_hz / ii_cycles` rounded to the nearest double.
    pub throughput_hz: f64,
    pub fits: Option<BudgetReport>,
    pub layers: Vec<LayerCost>,
    pub warnings: Vec<String>,
}

impl PerfEstimate {
    /// Throughput as the exact ratio `clock_hz / ii_cycles`.
    pub fn throughput(&self) -> Ratio<u64> {
        Ratio::new(self.clock_hz, self.ii_cycles)
    }

    pub fn recurrent_layer(&self) -> Option<&LayerCost> {
        self.layers.iter().find(|l| l.kind.is_recurrent())
    }
}

/// Cost model with a fixed set of calibration constants.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Estimator {
    pub calibration: Calibration,
}

impl Estimator {
    pub fn new(calibration: Calibration) -> Self {
        Self { calibration }
    }

    fn dsp_per_mult(hw: &HardwareConfig, precision: FxpFormat) -> u64 {
        if precision.total_bits() > hw.dsp_input_width {
            2
        } else {
            1
        }
    }

    fn recurrent_copies(model: &NetworkModel, hw: &HardwareConfig) -> u64 {
        match hw.mode {
            RnnMode::Static => 1,
            RnnMode::NonStatic => model.seq_len() as u64,
        }
    }

    pub fn layer_costs(&self, model: &NetworkModel, hw: &HardwareConfig, precision: FxpFormat) -> Vec<LayerCost> {
        let cal = &self.calibration;
        let width = precision.total_bits() as f64;
        let per_mult = Self::dsp_per_mult(hw, precision);
        let copies = Self::recurrent_copies(model, hw);
        let bram_of = |params: usize| -> u64 {
            match hw.strategy {
                Strategy::Resource => {
                    let bits = params as u64 * precision.total_bits() as u64;
                    bits.div_ceil(cal.bram_block_bits)
                }
                Strategy::Latency => 0,
            }
        };
        model
            .layers
            .iter()
            .enumerate()
            .map(|(index, layer)| {
                let spec = &layer.spec;
                let kind = spec.kind;
                let mults = layer_multiplies(index, spec);
                let mut cost = LayerCost {
                    index,
                    kind,
                    dsp: 0,
                    ff_mult: 0.0,
                    lut_mult: 0.0,
                    ff: 0.0,
                    lut: 0.0,
                    bram: 0,
                };
                match kind {
                    LayerKind::Lstm | LayerKind::Gru => {
                        let (x, y) = hw.reuse.for_kind(kind);
                        let kernel = mults.kernel_per_step as u64;
                        let recurrent = mults.recurrent_per_step as u64;
                        let dsp = (kernel.div_ceil(x as u64) + recurrent.div_ceil(y as u64)) * per_mult;
                        let mult_share = kernel as f64 / x as f64 + recurrent as f64 / y as f64;
                        let states = if kind == LayerKind::Lstm { 2.0 } else { 1.0 };
                        let state_bits = states * spec.output_dim as f64 * width;
                        let tables = table_luts(&hw.tables.sigmoid, cal) + table_luts(&hw.tables.tanh, cal);
                        let c = copies as f64;
                        cost.dsp = dsp * copies;
                        cost.ff_mult = (cal.ff_per_mult_bit * width) * mult_share * c;
                        cost.lut_mult = (cal.lut_per_mult_bit * width) * mult_share * c;
                        cost.ff = cost.ff_mult + state_bits * c;
                        cost.lut = cost.lut_mult + tables * c;
                        cost.bram = bram_of(layer_parameters(spec)) * copies;
                    }
                    LayerKind::Dense => {
                        let x = hw.reuse.kernel as u64;
                        let n = mults.dense as u64;
                        let share = n as f64 / x as f64;
                        cost.dsp = n.div_ceil(x) * per_mult;
                        cost.ff_mult = (cal.ff_per_mult_bit * width) * share;
                        cost.lut_mult = (cal.lut_per_mult_bit * width) * share;
                        cost.ff = cost.ff_mult + spec.output_dim as f64 * width;
                        cost.lut = cost.lut_mult;
                        cost.bram = bram_of(layer_parameters(spec));
                    }
                    LayerKind::Sigmoid => cost.lut = table_luts(&hw.tables.sigmoid, cal),
                    LayerKind::Tanh => cost.lut = table_luts(&hw.tables.tanh, cal),
                    LayerKind::Softmax => {
                        cost.lut = match &hw.tables.softmax {
                            SoftmaxImpl::Lut { exp, inv } => rom_luts(exp, cal) + rom_luts(inv, cal),
                            SoftmaxImpl::Direct => 0.0,
                        }
                    }
                    LayerKind::Relu => {}
                }
                if let Some(f) = cal.vivado_ff_factor {
                    cost.ff *= f;
                    cost.ff_mult *= f;
                }
                if let Some(f) = cal.vivado_lut_factor {
                    cost.lut *= f;
                    cost.lut_mult *= f;
                }
                cost
            })
            .collect()
    }

    pub fn estimate_dsp(&self, model: &NetworkModel, hw: &HardwareConfig, precision: FxpFormat) -> u64 {
        self.layer_costs(model, hw, precision).iter().map(|l| l.dsp).sum()
    }

    pub fn estimate_ff_lut_bram(
        &self,
        model: &NetworkModel,
        hw: &HardwareConfig,
        precision: FxpFormat,
    ) -> (u64, u64, u64) {
        let layers = self.layer_costs(model, hw, precision);
        let ff: f64 = layers.iter().map(|l| l.ff).sum();
        let lut: f64 = layers.iter().map(|l| l.lut).sum();
        let bram = layers.iter().map(|l| l.bram).sum();
        (ff.ceil() as u64, lut.ceil() as u64, bram)
    }

    pub fn estimate_latency_ii(&self, model: &NetworkModel, hw: &HardwareConfig) -> LatencyEstimate {
        let cal = &self.calibration;
        let seq_len = model.seq_len() as u64;
        let rnn = model.recurrent_layer();
        let (step_latency, step_ii, head, band) = match hw.strategy {
            Strategy::Latency => (cal.pipe_step_cycles, 1, 0, 0),
            Strategy::Resource => {
                let step = rnn.map_or(0, |l| cal.step_cycles(hw.reuse.for_kind(l.spec.kind)));
                let head: u64 = model
                    .layers
                    .iter()
                    .enumerate()
                    .filter(|(_, l)| l.spec.kind == LayerKind::Dense)
                    .map(|(i, l)| {
                        let mults = layer_multiplies(i, &l.spec).dense as u64;
                        let r = (hw.reuse.kernel as u64).min(mults.max(1)) as f64;
                        (cal.head_c0 + cal.head_c1 * r).ceil() as u64
                    })
                    .sum();
                let band = rnn.map_or(0, |l| seq_len * cal.band_cycles(l.spec.output_dim));
                (step, step, head, band)
            }
        };
        let (step_latency, step_ii) = if rnn.is_some() { (step_latency, step_ii) } else { (0, 0) };
        let min = (seq_len * step_latency + head).max(1);
        let max = min + band;
        let nominal = min + band.div_ceil(2);
        // With a single timestep both modes build the same circuit.
        let ii = match hw.mode {
            RnnMode::NonStatic if rnn.is_some() && seq_len > 1 => step_ii,
            _ => nominal,
        };
        LatencyEstimate {
            step_latency_cycles: step_latency,
            step_ii_cycles: step_ii,
            head_cycles: head,
            latency_cycles_min: min,
            latency_cycles_max: max,
            latency_cycles: nominal,
            ii_cycles: ii,
        }
    }

    pub fn estimate(
        &self,
        model: &NetworkModel,
        hw: &HardwareConfig,
        precision: FxpFormat,
    ) -> Result<PerfEstimate, PerfError> {
        hw.validate()?;
        let layers = self.layer_costs(model, hw, precision);
        let dsp = layers.iter().map(|l| l.dsp).sum();
        let ff = layers.iter().map(|l| l.ff).sum::<f64>().ceil() as u64;
        let lut = layers.iter().map(|l| l.lut).sum::<f64>().ceil() as u64;
        let bram = layers.iter().map(|l| l.bram).sum();
        let lat = self.estimate_latency_ii(model, hw);
        let clock_hz = hw.clock_hz();
        let to_us = |cycles: u64| cycles as f64 / hw.clock_mhz;
        let mut warnings = Vec::new();
        let params = count_parameters(model).total;
        if hw.strategy == Strategy::Latency && params >= self.calibration.latency_strategy_max_params {
            warnings.push(format!(
                "latency strategy requested for a model with {params} trainable parameters \
                 (>= {}); synthesis is unlikely to succeed, use the resource strategy",
                self.calibration.latency_strategy_max_params
            ));
        }
        let mut est = PerfEstimate {
            dsp,
            ff,
            lut,
            bram,
            latency_cycles_min: lat.latency_cycles_min,
            latency_cycles_max: lat.latency_cycles_max,
            latency_cycles: lat.latency_cycles,
            latency_us_min: to_us(lat.latency_cycles_min),
            latency_us_max: to_us(lat.latency_cycles_max),
            step_latency_cycles: lat.step_latency_cycles,
            step_ii_cycles: lat.step_ii_cycles,
            ii_cycles: lat.ii_cycles,
            clock_hz,
            throughput_hz: clock_hz as f64 / lat.ii_cycles as f64,
            fits: None,
            layers,
            warnings,
        };
        est.fits = hw.budget.map(|b| check_budget(&est, &b));
        Ok(est)
    }
}

fn rom_luts(cfg: &LutConfig, cal: &Calibration) -> f64 {
    let bits = cfg.table_size as u64 * cfg.entry_format.total_bits() as u64;
    bits.div_ceil(cal.lut_rom_bits) as f64
}

fn table_luts(imp: &ActivationImpl, cal: &Calibration) -> f64 {
    match imp {
        ActivationImpl::Lut(cfg) => rom_luts(cfg, cal),
        ActivationImpl::Direct => 0.0,
    }
}

pub fn check_budget(est: &PerfEstimate, budget: &DeviceBudget) -> BudgetReport {
    BudgetReport {
        dsp: ResourceFit::new(est.dsp, budget.dsp),
        ff: ResourceFit::new(est.ff, budget.ff),
        lut: ResourceFit::new(est.lut, budget.lut),
        bram: ResourceFit::new(est.bram, budget.bram),
    }
}

/// [`Estimator::estimate_dsp`] with the default calibration.
pub fn estimate_dsp(model: &NetworkModel, hw: &HardwareConfig, precision: FxpFormat) -> u64 {
    Estimator::default().estimate_dsp(model, hw, precision)
}

pub fn estimate_latency_ii(model: &NetworkModel, hw: &HardwareConfig) -> LatencyEstimate {
    Estimator::default().estimate_latency_ii(model, hw)
}

pub fn estimate_ff_lut_bram(model: &NetworkModel, hw: &HardwareConfig, precision: FxpFormat) -> (u64, u64, u64) {
    Estimator::default().estimate_ff_lut_bram(model, hw, precision)
}

pub fn estimate(model: &NetworkModel, hw: &HardwareConfig, precision: FxpFormat) -> Result<PerfEstimate, PerfError> {
    Estimator::default().estimate(model, hw, precision)
}
