//! Table-driven nonlinearities.
//!
//! Sigmoid, tanh and the two halves of softmax (exponential and reciprocal)
//! are evaluated by indexing a table of precomputed, quantized function
//! values, the way a synthesized design does it. A table covers
//! `[lo, hi)` with `table_size` equal bins; inputs outside the range use
//! the nearest boundary bin.
//!
//! For a table with bin width `s` whose entries carry `F_e` fractional
//! bits, every in-range input satisfies
//!
//! ```text
//! |lut(x) - f(x)| <= k * s * sup|f'| + 2^-F_e
//! ```
//!
//! with `k = 1/2` for midpoint sampling and `k = 1` for left-edge sampling.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::fxp::{quantize, FxpError, FxpFormat, FxpValue, QuantPolicy};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ActivationError {
    #[error("invalid table configuration: {0}")]
    InvalidConfig(String),
    #[error("softmax of an empty vector")]
    EmptyInput,
    #[error(transparent)]
    Fxp(#[from] FxpError),
}

/// Functions that can be tabulated.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TableFn {
    Sigmoid,
    Tanh,
    Exp,
    Reciprocal,
}

impl TableFn {
    pub fn eval(self, x: f64) -> f64 {
        match self {
            TableFn::Sigmoid => sigmoid(x),
            TableFn::Tanh => x.tanh(),
            TableFn::Exp => x.exp(),
            TableFn::Reciprocal => 1.0 / x,
        }
    }

    /// `sup |f'|` over `[lo, hi]`; infinite when the interval touches a pole.
    pub fn sup_derivative(self, lo: f64, hi: f64) -> f64 {
        match self {
            TableFn::Sigmoid => {
                if lo <= 0.0 && hi >= 0.0 {
                    0.25
                } else {
                    let x = lo.abs().min(hi.abs());
                    let s = sigmoid(x);
                    s * (1.0 - s)
                }
            }
            TableFn::Tanh => {
                if lo <= 0.0 && hi >= 0.0 {
                    1.0
                } else {
                    let t = lo.abs().min(hi.abs()).tanh();
                    1.0 - t * t
                }
            }
            TableFn::Exp => hi.exp(),
            TableFn::Reciprocal => {
                if lo <= 0.0 && hi >= 0.0 {
                    f64::INFINITY
                } else {
                    let a = lo.abs().min(hi.abs());
                    1.0 / (a * a)
                }
            }
        }
    }
}

pub fn sigmoid(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

/// Where inside its bin each table entry is sampled.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SamplePoint {
    #[default]
    Midpoint,
    LeftEdge,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LutConfig {
    pub table_size: usize,
    pub lo: f64,
    pub hi: f64,
    pub entry_format: FxpFormat,
    #[serde(default)]
    pub sample: SamplePoint,
}

impl LutConfig {
    /// Table over `[-r, r)`.
    pub fn symmetric(table_size: usize, r: f64, entry_format: FxpFormat) -> Self {
        Self {
            table_size,
            lo: -r,
            hi: r,
            entry_format,
            sample: SamplePoint::Midpoint,
        }
    }

    pub fn with_sample(mut self, sample: SamplePoint) -> Self {
        self.sample = sample;
        self
    }

    /// Defaults: 1024 entries over `[-8, 8)` in `fixed<18,8>` for sigmoid
    /// and tanh; 4096 entries of 18 bits for the softmax exponential
    /// (over `[-8, 0)`, applied after max subtraction) and reciprocal
    /// (over `[0, 16)`).
    pub fn default_for(func: TableFn) -> Self {
        let f18_8 = FxpFormat::signed(18, 8).expect("valid format");
        let u18_1 = FxpFormat::unsigned(18, 1).expect("valid format");
        match func {
            TableFn::Sigmoid | TableFn::Tanh => Self::symmetric(1024, 8.0, f18_8),
            TableFn::Exp => Self {
                table_size: 4096,
                lo: -8.0,
                hi: 0.0,
                entry_format: u18_1,
                sample: SamplePoint::Midpoint,
            },
            TableFn::Reciprocal => Self {
                table_size: 4096,
                lo: 0.0,
                hi: 16.0,
                entry_format: u18_1,
                sample: SamplePoint::Midpoint,
            },
        }
    }

    pub fn validate(&self) -> Result<(), ActivationError> {
        if self.table_size < 2 || !self.table_size.is_power_of_two() {
            return Err(ActivationError::InvalidConfig(format!(
                "table size {} is not a power of two >= 2",
                self.table_size
            )));
        }
        if !(self.lo.is_finite() && self.hi.is_finite() && self.lo < self.hi) {
            return Err(ActivationError::InvalidConfig(format!(
                "empty or non-finite range [{}, {})",
                self.lo, self.hi
            )));
        }
        Ok(())
    }

    pub fn bin_width(&self) -> f64 {
        (self.hi - self.lo) / self.table_size as f64
    }

    pub fn sample_point(&self, bin: usize) -> f64 {
        let offset = match self.sample {
            SamplePoint::Midpoint => 0.5,
            SamplePoint::LeftEdge => 0.0,
        };
        self.lo + (bin as f64 + offset) * self.bin_width()
    }

    /// Worst-case `|lut(x) - f(x)|` for `x` in `[lo, hi)`.
    pub fn error_bound(&self, func: TableFn) -> f64 {
        self.error_bound_on(func, self.lo, self.hi)
    }

    /// Worst-case error for inputs restricted to `[a, b]` inside the table.
    pub fn error_bound_on(&self, func: TableFn, a: f64, b: f64) -> f64 {
        let w = self.bin_width();
        // Samples lie within one bin of the inputs they serve.
        let sup = func.sup_derivative((a - w).max(self.lo), (b + w).min(self.hi));
        let k = match self.sample {
            SamplePoint::Midpoint => 0.5,
            SamplePoint::LeftEdge => 1.0,
        };
        k * w * sup + self.entry_format.step()
    }
}

/// A built lookup table.
#[derive(Debug, Clone, PartialEq)]
pub struct Lut {
    func: TableFn,
    cfg: LutConfig,
    scale: f64,
    entries: Vec<i64>,
}

impl Lut {
    pub fn build(func: TableFn, cfg: LutConfig, policy: QuantPolicy) -> Result<Self, ActivationError> {
        cfg.validate()?;
        let entries = (0..cfg.table_size)
            .map(|bin| {
                let y = func.eval(cfg.sample_point(bin));
                let y = if y.is_finite() { y } else { cfg.entry_format.max_value() };
                quantize(y, cfg.entry_format, policy).map(|v| v.raw())
            })
            .collect::<Result<Vec<_>, _>>()?;
        Ok(Self {
            func,
            cfg,
            scale: cfg.table_size as f64 / (cfg.hi - cfg.lo),
            entries,
        })
    }

    pub fn func(&self) -> TableFn {
        self.func
    }

    pub fn config(&self) -> &LutConfig {
        &self.cfg
    }

    pub fn entries(&self) -> &[i64] {
        &self.entries
    }

    pub fn index(&self, x: f64) -> usize {
        let pos = ((x - self.cfg.lo) * self.scale).floor();
        if pos <= 0.0 {
            0
        } else {
            (pos as usize).min(self.entries.len() - 1)
        }
    }

    /// Raw entry (in the entry format) for a real input.
    pub fn eval_raw(&self, x: f64) -> i64 {
        self.entries[self.index(x)]
    }

    pub fn eval(&self, x: FxpValue) -> FxpValue {
        FxpValue::from_raw_unchecked(self.eval_raw(x.to_f64()), self.cfg.entry_format)
    }
}

/// Table lookup of `f` at `x`; the result carries the entry format.
pub fn lut_eval(func: TableFn, x: FxpValue, cfg: &LutConfig) -> Result<FxpValue, ActivationError> {
    Ok(Lut::build(func, *cfg, QuantPolicy::default())?.eval(x))
}

pub fn relu(x: FxpValue) -> FxpValue {
    FxpValue::from_raw_unchecked(x.raw().max(0), x.format())
}

/// Exponential and reciprocal tables backing a softmax.
#[derive(Debug, Clone, PartialEq)]
pub struct SoftmaxTables {
    exp: Lut,
    inv: Lut,
}

impl SoftmaxTables {
    pub fn build(cfg_exp: LutConfig, cfg_inv: LutConfig, policy: QuantPolicy) -> Result<Self, ActivationError> {
        Ok(Self {
            exp: Lut::build(TableFn::Exp, cfg_exp, policy)?,
            inv: Lut::build(TableFn::Reciprocal, cfg_inv, policy)?,
        })
    }

    /// `y_k = exp(v_k - max v) * inv(sum_j exp(v_j - max v))`, clamped to `[0, 1]`.
    pub fn apply_raw(&self, raw: &[i64], fmt: FxpFormat, out: FxpFormat, policy: QuantPolicy) -> Vec<i64> {
        let Some(&max) = raw.iter().max() else {
            return Vec::new();
        };
        let exps: Vec<i64> = raw
            .iter()
            .map(|&r| self.exp.eval_raw(fmt.raw_to_f64(r - max)))
            .collect();
        let exp_fmt = self.exp.cfg.entry_format;
        let sum: i128 = exps.iter().map(|&e| e as i128).sum();
        let sum_real = sum as f64 * exp_fmt.step();
        let inv = self.inv.eval_raw(sum_real) as i128;
        let frac = exp_fmt.frac_bits() + self.inv.cfg.entry_format.frac_bits();
        let one = unit_raw(out);
        exps.iter()
            .map(|&e| out.requantize(e as i128 * inv, frac, policy).clamp(0, one))
            .collect()
    }

    pub fn apply(&self, v: &[FxpValue], policy: QuantPolicy) -> Result<Vec<FxpValue>, ActivationError> {
        let first = v.first().ok_or(ActivationError::EmptyInput)?;
        let fmt = first.format();
        let raw: Vec<i64> = v.iter().map(|x| x.requantize(fmt, policy).raw()).collect();
        Ok(self
            .apply_raw(&raw, fmt, fmt, policy)
            .into_iter()
            .map(|r| FxpValue::from_raw_unchecked(r, fmt))
            .collect())
    }

    /// Worst-case deviation from the exact softmax for an `n`-vector whose
    /// outputs land in `out`.
    pub fn error_bound(&self, n: usize, out: FxpFormat) -> f64 {
        softmax_error_bound(&self.exp.cfg, &self.inv.cfg, n, out)
    }
}

/// Largest raw value not exceeding 1.0 in `fmt`.
fn unit_raw(fmt: FxpFormat) -> i64 {
    let frac = fmt.frac_bits();
    if frac >= 63 {
        fmt.raw_max()
    } else {
        (1i64 << frac).min(fmt.raw_max())
    }
}

/// Error budget of the two-table softmax.
///
/// Each exponential entry is off by at most `e1` (in-table error plus the
/// clamp below `lo`), so the sum is off by `n * e1`. The reciprocal then adds
/// its table error `e2` on top of the propagated sum error, and the final
/// product picks up one output quantization step.
pub fn softmax_error_bound(cfg_exp: &LutConfig, cfg_inv: &LutConfig, n: usize, out: FxpFormat) -> f64 {
    let n = n as f64;
    let e1 = cfg_exp.error_bound(TableFn::Exp) + (cfg_exp.lo + cfg_exp.bin_width()).exp();
    let s_lo = 1.0 - e1;
    let s_hi = n * (1.0 + e1);
    if s_lo <= cfg_inv.lo.max(0.0) || s_hi >= cfg_inv.hi {
        return f64::INFINITY;
    }
    let e2 = cfg_inv.error_bound_on(TableFn::Reciprocal, s_lo, s_hi);
    let d_inv = e2 + n * e1 / s_lo;
    e1 * (1.0 / s_lo + d_inv) + d_inv + out.step()
}

pub fn softmax_lut(v: &[FxpValue], cfg_exp: &LutConfig, cfg_inv: &LutConfig) -> Result<Vec<FxpValue>, ActivationError> {
    let policy = QuantPolicy::default();
    SoftmaxTables::build(*cfg_exp, *cfg_inv, policy)?.apply(v, policy)
}

/// How the engine evaluates one nonlinearity.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "impl")]
pub enum ActivationImpl {
    Lut(LutConfig),
    /// Quantized exact function value, i.e. an ideal table of unbounded size.
    Direct,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "impl")]
pub enum SoftmaxImpl {
    Lut { exp: LutConfig, inv: LutConfig },
    Direct,
}

/// Per-function activation choices for an engine run.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ActivationSet {
    pub sigmoid: ActivationImpl,
    pub tanh: ActivationImpl,
    pub softmax: SoftmaxImpl,
}

impl Default for ActivationSet {
    fn default() -> Self {
        Self {
            sigmoid: ActivationImpl::Lut(LutConfig::default_for(TableFn::Sigmoid)),
            tanh: ActivationImpl::Lut(LutConfig::default_for(TableFn::Tanh)),
            softmax: SoftmaxImpl::Lut {
                exp: LutConfig::default_for(TableFn::Exp),
                inv: LutConfig::default_for(TableFn::Reciprocal),
            },
        }
    }
}

impl ActivationSet {
    /// Default tables sampled at the left edge of each bin, so that 0 is a
    /// sample point of the sigmoid and tanh tables.
    pub fn left_edge() -> Self {
        let edge = |f| ActivationImpl::Lut(LutConfig::default_for(f).with_sample(SamplePoint::LeftEdge));
        Self {
            sigmoid: edge(TableFn::Sigmoid),
            tanh: edge(TableFn::Tanh),
            softmax: Self::default().softmax,
        }
    }

    pub fn direct() -> Self {
        Self {
            sigmoid: ActivationImpl::Direct,
            tanh: ActivationImpl::Direct,
            softmax: SoftmaxImpl::Direct,
        }
    }
}

/// Ready-to-evaluate form of an [`ActivationImpl`].
#[derive(Debug, Clone, PartialEq)]
pub(crate) enum Unit {
    Lut(Lut),
    Direct(TableFn),
}

impl Unit {
    pub(crate) fn build(func: TableFn, imp: &ActivationImpl, policy: QuantPolicy) -> Result<Self, ActivationError> {
        Ok(match imp {
            ActivationImpl::Lut(cfg) => Unit::Lut(Lut::build(func, *cfg, policy)?),
            ActivationImpl::Direct => Unit::Direct(func),
        })
    }

    /// Evaluates at a raw input of `fmt`, returning a raw value of `out`.
    pub(crate) fn eval_raw(&self, raw: i64, fmt: FxpFormat, out: FxpFormat, policy: QuantPolicy) -> i64 {
        let x = fmt.raw_to_f64(raw);
        match self {
            Unit::Lut(lut) => out.requantize(lut.eval_raw(x) as i128, lut.cfg.entry_format.frac_bits(), policy),
            Unit::Direct(func) => quantize(func.eval(x), out, policy)
                .expect("sigmoid and tanh are finite")
                .raw(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub(crate) enum SoftmaxUnit {
    Lut(SoftmaxTables),
    Direct,
}

impl SoftmaxUnit {
    pub(crate) fn build(imp: &SoftmaxImpl, policy: QuantPolicy) -> Result<Self, ActivationError> {
        Ok(match imp {
            SoftmaxImpl::Lut { exp, inv } => SoftmaxUnit::Lut(SoftmaxTables::build(*exp, *inv, policy)?),
            SoftmaxImpl::Direct => SoftmaxUnit::Direct,
        })
    }

    pub(crate) fn apply_raw(&self, raw: &[i64], fmt: FxpFormat, policy: QuantPolicy) -> Vec<i64> {
        match self {
            SoftmaxUnit::Lut(t) => t.apply_raw(raw, fmt, fmt, policy),
            SoftmaxUnit::Direct => {
                let xs: Vec<f64> = raw.iter().map(|&r| fmt.raw_to_f64(r)).collect();
                let max = xs.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
                let exps: Vec<f64> = xs.iter().map(|x| (x - max).exp()).collect();
                let sum: f64 = exps.iter().sum();
                exps.iter()
                    .map(|e| quantize(e / sum, fmt, policy).expect("finite").raw())
                    .collect()
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fxp::{Overflow, Rounding};

    const RNE: QuantPolicy = QuantPolicy::new(Rounding::NearestEven, Overflow::Saturate);

    fn input(x: f64) -> FxpValue {
        quantize(x, FxpFormat::signed(32, 8).unwrap(), QuantPolicy::default()).unwrap()
    }

    #[test]
    fn tanh_zero_with_left_edge_entry() {
        let cfg = LutConfig::default_for(TableFn::Tanh).with_sample(SamplePoint::LeftEdge);
        assert_eq!(lut_eval(TableFn::Tanh, input(0.0), &cfg).unwrap().to_f64(), 0.0);
    }

    #[test]
    fn sigmoid_zero_is_half() {
        let cfg = LutConfig::default_for(TableFn::Sigmoid).with_sample(SamplePoint::LeftEdge);
        assert_eq!(lut_eval(TableFn::Sigmoid, input(0.0), &cfg).unwrap().to_f64(), 0.5);
        let mid = LutConfig::default_for(TableFn::Sigmoid);
        let y = lut_eval(TableFn::Sigmoid, input(0.0), &mid).unwrap().to_f64();
        assert!((y - 0.5).abs() <= mid.error_bound(TableFn::Sigmoid));
    }

    #[test]
    fn out_of_range_clamps_to_last_bin() {
        let fmt = FxpFormat::signed(32, 8).unwrap();
        let cfg = LutConfig::symmetric(1024, 8.0, fmt).with_sample(SamplePoint::LeftEdge);
        let y = lut_eval(TableFn::Tanh, input(10.0), &cfg).unwrap();
        let expected = quantize((8.0f64 - 16.0 / 1024.0).tanh(), fmt, QuantPolicy::default()).unwrap();
        assert_eq!(y, expected);
        let low = lut_eval(TableFn::Tanh, input(-100.0), &cfg).unwrap();
        assert_eq!(
            low.raw(),
            quantize((-8.0f64).tanh(), fmt, QuantPolicy::default()).unwrap().raw()
        );
    }

    #[test]
    fn relu_examples() {
        assert_eq!(relu(input(-1.5)).to_f64(), 0.0);
        assert_eq!(relu(input(0.0)).to_f64(), 0.0);
        assert_eq!(relu(input(2.25)).to_f64(), 2.25);
    }

    #[test]
    fn config_validation() {
        let f = FxpFormat::signed(18, 8).unwrap();
        assert!(LutConfig::symmetric(1000, 8.0, f).validate().is_err());
        assert!(LutConfig::symmetric(1, 8.0, f).validate().is_err());
        assert!(LutConfig::symmetric(1024, 0.0, f).validate().is_err());
        assert!(LutConfig::symmetric(1024, f64::NAN, f).validate().is_err());
        assert!(LutConfig::symmetric(2, 1.0, f).validate().is_ok());
    }

    #[test]
    fn tanh_midpoint_table_is_odd() {
        let lut = Lut::build(TableFn::Tanh, LutConfig::default_for(TableFn::Tanh), RNE).unwrap();
        let e = lut.entries();
        for k in 0..e.len() / 2 {
            assert_eq!(e[k], -e[e.len() - 1 - k], "bin {k}");
        }
    }

    #[test]
    fn tables_are_monotone() {
        for func in [TableFn::Sigmoid, TableFn::Tanh, TableFn::Exp] {
            let lut = Lut::build(func, LutConfig::default_for(func), QuantPolicy::default()).unwrap();
            assert!(lut.entries().windows(2).all(|w| w[0] <= w[1]), "{func:?}");
        }
    }

    #[test]
    fn softmax_of_equal_inputs_is_uniform() {
        let cfg_e = LutConfig::default_for(TableFn::Exp);
        let cfg_i = LutConfig::default_for(TableFn::Reciprocal);
        let fmt = FxpFormat::signed(18, 8).unwrap();
        let v: Vec<_> = (0..3)
            .map(|_| quantize(1.25, fmt, QuantPolicy::default()).unwrap())
            .collect();
        let y = softmax_lut(&v, &cfg_e, &cfg_i).unwrap();
        let eps = softmax_error_bound(&cfg_e, &cfg_i, 3, fmt);
        for yk in &y {
            assert!((yk.to_f64() - 1.0 / 3.0).abs() <= eps, "{yk} vs eps {eps}");
        }
    }

    #[test]
    fn softmax_saturates_to_one_hot() {
        let cfg_e = LutConfig::default_for(TableFn::Exp);
        let cfg_i = LutConfig::default_for(TableFn::Reciprocal);
        let fmt = FxpFormat::signed(18, 8).unwrap();
        let q = |x| quantize(x, fmt, QuantPolicy::default()).unwrap();
        let y = softmax_lut(&[q(20.0), q(-5.0), q(-6.0)], &cfg_e, &cfg_i).unwrap();
        let eps = softmax_error_bound(&cfg_e, &cfg_i, 3, fmt);
        assert!((y[0].to_f64() - 1.0).abs() <= eps);
        assert!(y[1].to_f64() <= eps && y[2].to_f64() <= eps);
        assert!(y.iter().all(|v| (0.0..=1.0).contains(&v.to_f64())));
    }

    #[test]
    fn softmax_rejects_empty_input() {
        let cfg_e = LutConfig::default_for(TableFn::Exp);
        let cfg_i = LutConfig::default_for(TableFn::Reciprocal);
        assert_eq!(softmax_lut(&[], &cfg_e, &cfg_i), Err(ActivationError::EmptyInput));
    }

    #[test]
    fn bound_is_infinite_when_sum_escapes_table() {
        let cfg_e = LutConfig::default_for(TableFn::Exp);
        let cfg_i = LutConfig::default_for(TableFn::Reciprocal);
        let fmt = FxpFormat::signed(18, 8).unwrap();
        assert!(softmax_error_bound(&cfg_e, &cfg_i, 5, fmt).is_finite());
        assert!(softmax_error_bound(&cfg_e, &cfg_i, 40, fmt).is_infinite());
    }
}
