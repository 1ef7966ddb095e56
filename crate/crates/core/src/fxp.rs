//! Fixed-point numbers with configurable width, rounding and overflow.
//!
//! A format `fixed<W,I>` has `W` total bits of which `I` are integer bits
//! (the sign bit included for signed formats), leaving `F = W - I`
//! fractional bits. Values are stored as a raw integer count of `2^-F`
//! units, so a value is exactly `raw * 2^-F`.
//!
//! Signed formats cover `[-2^(I-1), 2^(I-1) - 2^-F]`, unsigned formats cover
//! `[0, 2^I - 2^-F]`. Raw values are held in an `i64`, which limits unsigned
//! formats to 63 bits; signed formats may use the full 64.
//!
//! All arithmetic is exact in a widened intermediate (`i128`) and rounded
//! only once, when the result is forced into its output format.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

pub const MAX_TOTAL_BITS: u32 = 64;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum FxpError {
    #[error("non-finite input")]
    NonFinite,
    #[error("invalid fixed-point format: {0}")]
    InvalidFormat(String),
    #[error("cannot parse fixed-point format {0:?}: expected fixed<W,I> or ufixed<W,I>")]
    Parse(String),
    #[error("raw value {raw} out of range for {format}")]
    RawOutOfRange { raw: i64, format: FxpFormat },
}

/// Rounding applied when discarding fractional bits.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Rounding {
    /// Round toward negative infinity (drop the low bits).
    #[default]
    Truncate,
    /// Round to nearest, ties to the even raw value.
    NearestEven,
}

/// Behavior when a result does not fit the destination format.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Overflow {
    /// Clamp to the nearest representable bound.
    #[default]
    Saturate,
    /// Keep the low `W` bits (two's complement wrap-around).
    Wrap,
}

/// Rounding and overflow modes applied at every quantization point.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
pub struct QuantPolicy {
    #[serde(default)]
    pub rounding: Rounding,
    #[serde(default)]
    pub overflow: Overflow,
}

impl QuantPolicy {
    pub const fn new(rounding: Rounding, overflow: Overflow) -> Self {
        Self { rounding, overflow }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct FxpFormat {
    signed: bool,
    total_bits: u32,
    integer_bits: u32,
}

impl FxpFormat {
    pub fn new(signed: bool, total_bits: u32, integer_bits: u32) -> Result<Self, FxpError> {
        if total_bits == 0 || total_bits > MAX_TOTAL_BITS {
            return Err(FxpError::InvalidFormat(format!(
                "total width {total_bits} outside 1..={MAX_TOTAL_BITS}"
            )));
        }
        if !signed && total_bits == MAX_TOTAL_BITS {
            return Err(FxpError::InvalidFormat(
                "unsigned formats are limited to 63 bits".to_string(),
            ));
        }
        if integer_bits > total_bits {
            return Err(FxpError::InvalidFormat(format!(
                "integer bits {integer_bits} exceed total width {total_bits}"
            )));
        }
        Ok(Self {
            signed,
            total_bits,
            integer_bits,
        })
    }

    /// Signed two's complement `fixed<W,I>`.
    pub fn signed(total_bits: u32, integer_bits: u32) -> Result<Self, FxpError> {
        Self::new(true, total_bits, integer_bits)
    }

    /// Unsigned `ufixed<W,I>`.
    pub fn unsigned(total_bits: u32, integer_bits: u32) -> Result<Self, FxpError> {
        Self::new(false, total_bits, integer_bits)
    }

    pub fn is_signed(&self) -> bool {
        self.signed
    }

    pub fn total_bits(&self) -> u32 {
        self.total_bits
    }

    pub fn integer_bits(&self) -> u32 {
        self.integer_bits
    }

    pub fn frac_bits(&self) -> u32 {
        self.total_bits - self.integer_bits
    }

    /// Granularity `2^-F`.
    pub fn step(&self) -> f64 {
        pow2(-(self.frac_bits() as i32))
    }

    pub fn raw_min(&self) -> i64 {
        if self.signed {
            (-(1i128 << (self.total_bits - 1))) as i64
        } else {
            0
        }
    }

    pub fn raw_max(&self) -> i64 {
        if self.signed {
            ((1i128 << (self.total_bits - 1)) - 1) as i64
        } else {
            ((1i128 << self.total_bits) - 1) as i64
        }
    }

    pub fn min_value(&self) -> f64 {
        self.raw_to_f64(self.raw_min())
    }

    pub fn max_value(&self) -> f64 {
        self.raw_to_f64(self.raw_max())
    }

    pub fn contains_raw(&self, raw: i64) -> bool {
        (self.raw_min()..=self.raw_max()).contains(&raw)
    }

    /// Real value of a raw count. Exact whenever `|raw| < 2^53`.
    pub fn raw_to_f64(&self, raw: i64) -> f64 {
        raw as f64 * self.step()
    }

    /// Forces an exact integer count of `2^-frac` units into this format.
    pub fn requantize(&self, value: i128, frac: u32, policy: QuantPolicy) -> i64 {
        let target = self.frac_bits();
        if frac >= target {
            let v = shift_right_rounded(value, frac - target, policy.rounding);
            return match policy.overflow {
                Overflow::Saturate => self.saturate(v),
                Overflow::Wrap => self.wrap(v),
            };
        }
        let amount = target - frac;
        match policy.overflow {
            Overflow::Saturate => match shift_left(value, amount) {
                Some(v) => self.saturate(v),
                None if value < 0 => self.raw_min(),
                None => self.raw_max(),
            },
            // The low W bits survive a wrapping shift unchanged.
            Overflow::Wrap if amount < 128 => self.wrap(value.wrapping_shl(amount)),
            Overflow::Wrap => 0,
        }
    }

    fn saturate(&self, v: i128) -> i64 {
        v.clamp(self.raw_min() as i128, self.raw_max() as i128) as i64
    }

    fn wrap(&self, v: i128) -> i64 {
        let modulus = 1i128 << self.total_bits;
        let low = v & (modulus - 1);
        if self.signed && low >= modulus >> 1 {
            (low - modulus) as i64
        } else {
            low as i64
        }
    }
}

/// `None` when the result does not fit an `i128`.
fn shift_left(value: i128, amount: u32) -> Option<i128> {
    if value == 0 {
        return Some(0);
    }
    if amount >= 127 {
        return None;
    }
    let r = value << amount;
    (r >> amount == value).then_some(r)
}

fn shift_right_rounded(value: i128, amount: u32, rounding: Rounding) -> i128 {
    if amount == 0 {
        return value;
    }
    if amount >= 128 {
        // |value| <= 2^127 <= 2^amount: the quotient lies in [-1, 1), and a
        // tie (-1/2) can only round to the even neighbour 0.
        return match rounding {
            Rounding::Truncate if value < 0 => -1,
            _ => 0,
        };
    }
    let floor = value >> amount;
    match rounding {
        Rounding::Truncate => floor,
        Rounding::NearestEven => {
            let rem = value - (floor << amount);
            let half = 1i128 << (amount - 1);
            if rem > half || (rem == half && floor & 1 == 1) {
                floor + 1
            } else {
                floor
            }
        }
    }
}

fn pow2(exp: i32) -> f64 {
    2f64.powi(exp)
}

impl fmt::Display for FxpFormat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let prefix = if self.signed { "fixed" } else { "ufixed" };
        write!(f, "{prefix}<{},{}>", self.total_bits, self.integer_bits)
    }
}

impl FromStr for FxpFormat {
    type Err = FxpError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let compact: String = s.chars().filter(|c| !c.is_whitespace()).collect();
        let (signed, rest) = if let Some(rest) = compact.strip_prefix("ufixed<") {
            (false, rest)
        } else if let Some(rest) = compact.strip_prefix("fixed<") {
            (true, rest)
        } else {
            return Err(FxpError::Parse(s.to_string()));
        };
        let body = rest.strip_suffix('>').ok_or_else(|| FxpError::Parse(s.to_string()))?;
        let (w, i) = body.split_once(',').ok_or_else(|| FxpError::Parse(s.to_string()))?;
        let w: u32 = w.parse().map_err(|_| FxpError::Parse(s.to_string()))?;
        let i: u32 = i.parse().map_err(|_| FxpError::Parse(s.to_string()))?;
        Self::new(signed, w, i)
    }
}

impl Serialize for FxpFormat {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for FxpFormat {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// A raw fixed-point value tagged with its format.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct FxpValue {
    raw: i64,
    format: FxpFormat,
}

impl FxpValue {
    pub fn from_raw(raw: i64, format: FxpFormat) -> Result<Self, FxpError> {
        if !format.contains_raw(raw) {
            return Err(FxpError::RawOutOfRange { raw, format });
        }
        Ok(Self { raw, format })
    }

    /// Caller guarantees `raw` is inside the format's range.
    pub(crate) fn from_raw_unchecked(raw: i64, format: FxpFormat) -> Self {
        debug_assert!(format.contains_raw(raw));
        Self { raw, format }
    }

    pub fn zero(format: FxpFormat) -> Self {
        Self { raw: 0, format }
    }

    pub fn raw(&self) -> i64 {
        self.raw
    }

    pub fn format(&self) -> FxpFormat {
        self.format
    }

    pub fn to_f64(&self) -> f64 {
        self.format.raw_to_f64(self.raw)
    }

    pub fn requantize(&self, out: FxpFormat, policy: QuantPolicy) -> Self {
        let raw = out.requantize(self.raw as i128, self.format.frac_bits(), policy);
        Self { raw, format: out }
    }
}

impl fmt::Display for FxpValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.to_f64())
    }
}

/// Converts a real number into `fmt`.
pub fn quantize(x: f64, fmt: FxpFormat, policy: QuantPolicy) -> Result<FxpValue, FxpError> {
    if !x.is_finite() {
        return Err(FxpError::NonFinite);
    }
    let frac = fmt.frac_bits() as i32;
    let mut scaled = x * pow2(frac);
    if scaled.is_infinite() {
        // Only the low W bits survive a wrap; reducing by 2^I first is exact.
        match policy.overflow {
            Overflow::Saturate => {
                let raw = if x < 0.0 { fmt.raw_min() } else { fmt.raw_max() };
                return Ok(FxpValue::from_raw_unchecked(raw, fmt));
            }
            Overflow::Wrap => scaled = (x % pow2(fmt.integer_bits() as i32)) * pow2(frac),
        }
    }
    let rounded = match policy.rounding {
        Rounding::Truncate => scaled.floor(),
        Rounding::NearestEven => scaled.round_ties_even(),
    };
    const EXACT_LIMIT: f64 = 1.2676506002282294e30; // 2^100
    let int = if rounded.abs() < EXACT_LIMIT {
        rounded as i128
    } else {
        match policy.overflow {
            Overflow::Saturate => {
                if rounded < 0.0 {
                    i128::MIN
                } else {
                    i128::MAX
                }
            }
            // Integer-valued already; fmod by a power of two is exact.
            Overflow::Wrap => (rounded % pow2(fmt.total_bits() as i32)) as i128,
        }
    };
    let raw = fmt.requantize(int, fmt.frac_bits(), policy);
    Ok(FxpValue::from_raw_unchecked(raw, fmt))
}

/// Exact sum, rounded once into `out`.
pub fn fxp_add(a: FxpValue, b: FxpValue, out: FxpFormat, policy: QuantPolicy) -> FxpValue {
    let fa = a.format.frac_bits();
    let fb = b.format.frac_bits();
    let frac = fa.max(fb);
    let sum = (a.raw as i128)
        .saturating_mul(1i128 << (frac - fa))
        .saturating_add((b.raw as i128).saturating_mul(1i128 << (frac - fb)));
    FxpValue::from_raw_unchecked(out.requantize(sum, frac, policy), out)
}

/// Exact product, rounded once into `out`.
pub fn fxp_mul(a: FxpValue, b: FxpValue, out: FxpFormat, policy: QuantPolicy) -> FxpValue {
    let product = a.raw as i128 * b.raw as i128;
    let frac = a.format.frac_bits() + b.format.frac_bits();
    FxpValue::from_raw_unchecked(out.requantize(product, frac, policy), out)
}
