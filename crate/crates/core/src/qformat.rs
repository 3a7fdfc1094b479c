// SPDX-License-Identifier: Apache-2.0

//! Signed two's-complement fixed-point words.
//!
//! A [`QFormat`] pairs a total bit width with a fraction width; [`FixedWord`]
//! is a raw integer tagged with its format. Decoding is always exact. Encoding
//! rounds according to a [`RoundingMode`] and saturates at the format limits.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Signed fixed-point format with `total_bits` bits of which `frac_bits` are fractional.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct QFormat {
    total_bits: u32,
    frac_bits: u32,
}

impl QFormat {
    /// Q2.13: sign bit, two integer bits, thirteen fraction bits.
    pub const Q2_13: QFormat = QFormat {
        total_bits: 16,
        frac_bits: 13,
    };

    pub fn new(total_bits: u32, frac_bits: u32) -> Result<Self> {
        if !(2..=32).contains(&total_bits) {
            return Err(Error::config(format!(
                "total bits must be in 2..=32, got {total_bits}"
            )));
        }
        if frac_bits < 1 || frac_bits >= total_bits {
            return Err(Error::config(format!(
                "fraction bits must be in 1..{total_bits}, got {frac_bits}"
            )));
        }
        Ok(QFormat {
            total_bits,
            frac_bits,
        })
    }

    pub fn total_bits(self) -> u32 {
        self.total_bits
    }

    pub fn frac_bits(self) -> u32 {
        self.frac_bits
    }

    /// Integer bits, excluding the sign bit.
    pub fn int_bits(self) -> u32 {
        self.total_bits - 1 - self.frac_bits
    }

    /// Number of magnitude bits (everything but the sign).
    pub fn magnitude_bits(self) -> u32 {
        self.total_bits - 1
    }

    pub fn min_raw(self) -> i32 {
        (-(1i64 << (self.total_bits - 1))) as i32
    }

    pub fn max_raw(self) -> i32 {
        ((1i64 << (self.total_bits - 1)) - 1) as i32
    }

    /// Weight of one least-significant bit.
    pub fn ulp(self) -> f64 {
        (-(self.frac_bits as f64)).exp2()
    }

    /// Magnitude of the most negative representable value, e.g. 4.0 for Q2.13.
    pub fn range_max(self) -> f64 {
        (self.int_bits() as f64).exp2()
    }

    pub fn contains_raw(self, raw: i64) -> bool {
        raw >= self.min_raw() as i64 && raw <= self.max_raw() as i64
    }

    pub fn saturate(self, raw: i64) -> i32 {
        raw.clamp(self.min_raw() as i64, self.max_raw() as i64) as i32
    }

    /// Every raw code of the format, ascending.
    pub fn codes(self) -> std::ops::RangeInclusive<i32> {
        self.min_raw()..=self.max_raw()
    }

    pub fn code_count(self) -> usize {
        1usize << self.total_bits
    }
}

impl Default for QFormat {
    fn default() -> Self {
        QFormat::Q2_13
    }
}

impl fmt::Display for QFormat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Q{}.{}", self.int_bits(), self.frac_bits)
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RoundingMode {
    #[default]
    NearestEven,
    NearestAway,
    Truncate,
}

impl RoundingMode {
    pub const ALL: [RoundingMode; 3] = [
        RoundingMode::NearestEven,
        RoundingMode::NearestAway,
        RoundingMode::Truncate,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            RoundingMode::NearestEven => "nearest-even",
            RoundingMode::NearestAway => "nearest-away",
            RoundingMode::Truncate => "truncate",
        }
    }

    /// Rounds a real number to an integer.
    pub fn round_f64(self, v: f64) -> f64 {
        match self {
            RoundingMode::NearestEven => v.round_ties_even(),
            RoundingMode::NearestAway => v.round(),
            RoundingMode::Truncate => v.trunc(),
        }
    }

    /// Computes `value / 2^shift` rounded to an integer, exactly.
    pub fn round_shift(self, value: i64, shift: u32) -> i64 {
        if shift == 0 {
            return value;
        }
        let floor = value >> shift;
        let rem = value - (floor << shift);
        let half = 1i64 << (shift - 1);
        match self {
            RoundingMode::Truncate => {
                if value < 0 && rem != 0 {
                    floor + 1
                } else {
                    floor
                }
            }
            RoundingMode::NearestAway => {
                if rem > half || (rem == half && value >= 0) {
                    floor + 1
                } else {
                    floor
                }
            }
            RoundingMode::NearestEven => {
                if rem > half || (rem == half && floor & 1 == 1) {
                    floor + 1
                } else {
                    floor
                }
            }
        }
    }
}

impl fmt::Display for RoundingMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for RoundingMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "nearest-even" => Ok(RoundingMode::NearestEven),
            "nearest-away" => Ok(RoundingMode::NearestAway),
            "truncate" => Ok(RoundingMode::Truncate),
            other => Err(Error::config(format!("unknown rounding mode `{other}`"))),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct FixedWord {
    raw: i32,
    fmt: QFormat,
}

impl FixedWord {
    /// Wraps a raw integer, rejecting values that do not fit the format.
    pub fn from_raw(raw: i64, fmt: QFormat) -> Result<Self> {
        if !fmt.contains_raw(raw) {
            return Err(Error::config(format!(
                "raw value {raw} does not fit {fmt} ({}..={})",
                fmt.min_raw(),
                fmt.max_raw()
            )));
        }
        Ok(FixedWord {
            raw: raw as i32,
            fmt,
        })
    }

    pub fn saturating_from_raw(raw: i64, fmt: QFormat) -> Self {
        FixedWord {
            raw: fmt.saturate(raw),
            fmt,
        }
    }

    pub fn raw(self) -> i32 {
        self.raw
    }

    pub fn format(self) -> QFormat {
        self.fmt
    }
}

pub fn encode(value: f64, fmt: QFormat, mode: RoundingMode) -> Result<FixedWord> {
    if value.is_nan() {
        return Err(Error::NotANumber);
    }
    // Scaling by a power of two is exact; infinities saturate below.
    let scaled = mode.round_f64(value * (fmt.frac_bits as f64).exp2());
    let raw = scaled.clamp(fmt.min_raw() as f64, fmt.max_raw() as f64) as i64;
    Ok(FixedWord {
        raw: raw as i32,
        fmt,
    })
}

pub fn decode(word: FixedWord) -> f64 {
    decode_raw(word.raw as i64, word.fmt)
}

pub fn decode_raw(raw: i64, fmt: QFormat) -> f64 {
    raw as f64 * fmt.ulp()
}

/// Two's-complement negation that maps the format minimum to the maximum.
pub fn negate_saturating(word: FixedWord) -> FixedWord {
    FixedWord::saturating_from_raw(-(word.raw as i64), word.fmt)
}
