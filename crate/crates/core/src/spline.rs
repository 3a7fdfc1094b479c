// SPDX-License-Identifier: Apache-2.0

//! Real-valued reference models: tanh, the Catmull-Rom basis, and the
//! control-point table both interpolators read from.
//!
//! The table stores samples for `x >= 0` only. Negative inputs are folded
//! through odd symmetry, the neighbor below the origin is `P[-1] = -P[1]`,
//! and two samples past `range_max` serve the last segment.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::qformat::{decode_raw, encode, QFormat, RoundingMode};

/// Sampling periods with published error figures.
pub const TABLE_PERIODS: [f64; 4] = [0.5, 0.25, 0.125, 0.0625];

/// Interpolation kernel.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    Pwl,
    #[default]
    CatmullRom,
}

impl Method {
    pub const ALL: [Method; 2] = [Method::Pwl, Method::CatmullRom];

    pub fn as_str(self) -> &'static str {
        match self {
            Method::Pwl => "pwl",
            Method::CatmullRom => "catmull-rom",
        }
    }

    pub fn eval_real(self, x: f64, table: &ControlPointTable) -> f64 {
        match self {
            Method::Pwl => pwl_eval_real(x, table),
            Method::CatmullRom => cr_eval_real(x, table),
        }
    }
}

impl std::fmt::Display for Method {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "pwl" => Ok(Method::Pwl),
            "catmull-rom" | "cr" => Ok(Method::CatmullRom),
            other => Err(Error::config(format!("unknown method `{other}`"))),
        }
    }
}

pub fn tanh_ref(x: f64) -> f64 {
    x.tanh()
}

/// Quantization applied to a control-point table.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Quantization {
    pub fmt: QFormat,
    pub rounding: RoundingMode,
}

impl Quantization {
    pub fn new(fmt: QFormat, rounding: RoundingMode) -> Self {
        Quantization { fmt, rounding }
    }
}

/// Uniform tanh samples `P[i] = tanh(i * period)` for `i = 0..=N+1`, `N = range_max / period`.
#[derive(Clone, Debug, PartialEq)]
pub struct ControlPointTable {
    period: f64,
    range_max: f64,
    segments: usize,
    values: Vec<f64>,
    raw: Option<Vec<i32>>,
    quantization: Option<Quantization>,
}

pub fn build_control_table(
    period: f64,
    range_max: f64,
    quantization: Option<Quantization>,
) -> Result<ControlPointTable> {
    let segments = segment_count(period, range_max)?;
    let exact: Vec<f64> = (0..segments + 2)
        .map(|i| tanh_ref(i as f64 * period))
        .collect();
    let (values, raw) = match quantization {
        None => (exact, None),
        Some(q) => {
            let raw = exact
                .iter()
                .map(|&v| encode(v, q.fmt, q.rounding).map(|w| w.raw()))
                .collect::<Result<Vec<_>>>()?;
            let values = raw.iter().map(|&r| decode_raw(r as i64, q.fmt)).collect();
            (values, Some(raw))
        }
    };
    Ok(ControlPointTable {
        period,
        range_max,
        segments,
        values,
        raw,
        quantization,
    })
}

/// Number of in-range segments, `range_max / period`, which must be a positive integer.
pub fn segment_count(period: f64, range_max: f64) -> Result<usize> {
    if !(period.is_finite() && period > 0.0 && range_max.is_finite() && range_max > 0.0) {
        return Err(Error::config(format!(
            "period {period} and range {range_max} must be positive and finite"
        )));
    }
    let ratio = range_max / period;
    let n = ratio.round();
    if n < 1.0 || (ratio - n).abs() > 1e-9 * n || n > (1u64 << 24) as f64 {
        return Err(Error::config(format!(
            "range {range_max} is not a whole number of {period} periods"
        )));
    }
    Ok(n as usize)
}

impl ControlPointTable {
    pub fn real(period: f64, range_max: f64) -> Result<Self> {
        build_control_table(period, range_max, None)
    }

    pub fn quantized(
        period: f64,
        range_max: f64,
        fmt: QFormat,
        rounding: RoundingMode,
    ) -> Result<Self> {
        build_control_table(period, range_max, Some(Quantization::new(fmt, rounding)))
    }

    pub fn period(&self) -> f64 {
        self.period
    }

    pub fn range_max(&self) -> f64 {
        self.range_max
    }

    /// In-range sample count `N` (the LUT depth).
    pub fn depth(&self) -> usize {
        self.segments
    }

    /// Stored entries, `N + 2`.
    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Entries as reals (decoded when quantized).
    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Raw words when quantized.
    pub fn raw(&self) -> Option<&[i32]> {
        self.raw.as_deref()
    }

    pub fn quantization(&self) -> Option<Quantization> {
        self.quantization
    }

    pub fn is_quantized(&self) -> bool {
        self.quantization.is_some()
    }

    /// `P[i]` for `i` in `-1..=N+1`, with `P[-1] = -P[1]`.
    pub fn point(&self, i: isize) -> f64 {
        if i < 0 {
            debug_assert_eq!(i, -1);
            -self.values[1]
        } else {
            self.values[i as usize]
        }
    }

    /// The four neighbors `P[k-1], P[k], P[k+1], P[k+2]` of segment `k`.
    pub fn neighbors(&self, k: usize) -> [f64; 4] {
        let k = k as isize;
        [
            self.point(k - 1),
            self.point(k),
            self.point(k + 1),
            self.point(k + 2),
        ]
    }
}

/// Catmull-Rom weights on `P[k-1], P[k], P[k+1], P[k+2]`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BasisWeightsReal(pub [f64; 4]);

impl BasisWeightsReal {
    pub fn sum(&self) -> f64 {
        self.0.iter().sum()
    }

    pub fn dot(&self, p: &[f64; 4]) -> f64 {
        self.0.iter().zip(p).map(|(w, p)| w * p).sum()
    }
}

/// Halved cubic basis polynomials of the uniform Catmull-Rom spline.
pub fn cr_basis(t: f64) -> BasisWeightsReal {
    assert!((0.0..=1.0).contains(&t), "t = {t} outside [0, 1]");
    let t2 = t * t;
    let t3 = t2 * t;
    BasisWeightsReal([
        0.5 * (-t3 + 2.0 * t2 - t),
        0.5 * (3.0 * t3 - 5.0 * t2 + 2.0),
        0.5 * (-3.0 * t3 + 4.0 * t2 + t),
        0.5 * (t3 - t2),
    ])
}

/// Maps a non-negative input to its segment index and fraction.
///
/// Inputs at or beyond `range_max` clamp to the end of the last segment.
pub fn segment_locate(x: f64, period: f64, range_max: f64) -> (usize, f64) {
    assert!(
        x >= 0.0,
        "segment_locate expects a folded, non-negative input, got {x}"
    );
    let n = (range_max / period).round() as usize;
    if x >= range_max {
        return (n - 1, 1.0);
    }
    let s = x / period;
    let k = (s.floor() as usize).min(n - 1);
    (k, (s - k as f64).clamp(0.0, 1.0))
}

pub fn cr_eval_real(x: f64, table: &ControlPointTable) -> f64 {
    if x < 0.0 {
        return -cr_eval_real(-x, table);
    }
    let (k, t) = segment_locate(x, table.period, table.range_max);
    cr_basis(t).dot(&table.neighbors(k))
}

pub fn pwl_eval_real(x: f64, table: &ControlPointTable) -> f64 {
    if x < 0.0 {
        return -pwl_eval_real(-x, table);
    }
    let (k, t) = segment_locate(x, table.period, table.range_max);
    (1.0 - t) * table.point(k as isize) + t * table.point(k as isize + 1)
}
