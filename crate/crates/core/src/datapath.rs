// SPDX-License-Identifier: Apache-2.0

//! Bit-accurate model of the fixed-point tanh evaluator.
//!
//! The input magnitude is split into a segment index (high bits) and an
//! interpolation fraction `u` (low bits, `t = u / 2^t_bits`). Four control
//! points are dotted with integer basis numerators in an exact wide
//! accumulator, and the result is rounded once back to the output format.
//!
//! For the default configuration (period 0.125, Q2.13) the index is five
//! bits, `u` is ten bits, basis numerators carry scale `2^31` and the
//! accumulator carries scale `2^44`.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::qformat::{FixedWord, QFormat, RoundingMode};
use crate::spline::{segment_count, ControlPointTable, Method};

/// Largest fraction width whose basis numerators fit an `i64`.
pub const MAX_T_BITS: u32 = 20;

/// How the four basis values for `u` are obtained.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TStrategy {
    /// Evaluate the cubic polynomials in integer arithmetic.
    #[default]
    Computed,
    /// Read precomputed rows from a [`BasisRom`].
    Rom,
}

impl TStrategy {
    pub fn as_str(self) -> &'static str {
        match self {
            TStrategy::Computed => "computed",
            TStrategy::Rom => "rom",
        }
    }
}

impl fmt::Display for TStrategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for TStrategy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "computed" => Ok(TStrategy::Computed),
            "rom" => Ok(TStrategy::Rom),
            other => Err(Error::config(format!(
                "unknown t-vector strategy `{other}`"
            ))),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DatapathConfig {
    pub period: f64,
    pub index_bits: u32,
    pub t_bits: u32,
    pub t_strategy: TStrategy,
    pub rounding: RoundingMode,
    pub fmt: QFormat,
    pub method: Method,
}

impl Default for DatapathConfig {
    /// 32-entry table, 5/10 bit split, Q2.13 in and out.
    fn default() -> Self {
        DatapathConfig {
            period: 0.125,
            index_bits: 5,
            t_bits: 10,
            t_strategy: TStrategy::Computed,
            rounding: RoundingMode::NearestEven,
            fmt: QFormat::Q2_13,
            method: Method::CatmullRom,
        }
    }
}

impl DatapathConfig {
    /// Derives the bit split for `period`, which must divide the format range
    /// into a power-of-two number of segments.
    pub fn for_period(period: f64, fmt: QFormat) -> Result<Self> {
        let segments = segment_count(period, fmt.range_max())?;
        if !segments.is_power_of_two() {
            return Err(Error::config(format!(
                "{segments} segments is not a power of two; the input cannot be split by bits"
            )));
        }
        let index_bits = segments.trailing_zeros();
        if index_bits > fmt.magnitude_bits() {
            return Err(Error::config(format!(
                "period {period} is finer than one {fmt} code"
            )));
        }
        let cfg = DatapathConfig {
            period,
            index_bits,
            t_bits: fmt.magnitude_bits() - index_bits,
            fmt,
            ..DatapathConfig::default()
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn with_strategy(mut self, t_strategy: TStrategy) -> Self {
        self.t_strategy = t_strategy;
        self
    }

    pub fn with_rounding(mut self, rounding: RoundingMode) -> Self {
        self.rounding = rounding;
        self
    }

    pub fn with_method(mut self, method: Method) -> Self {
        self.method = method;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.index_bits + self.t_bits != self.fmt.magnitude_bits() {
            return Err(Error::config(format!(
                "index bits {} + t bits {} must equal the {} magnitude bits of {}",
                self.index_bits,
                self.t_bits,
                self.fmt.magnitude_bits(),
                self.fmt
            )));
        }
        if self.t_bits > MAX_T_BITS {
            return Err(Error::config(format!(
                "{} fraction bits exceeds the supported {MAX_T_BITS}",
                self.t_bits
            )));
        }
        let segments = segment_count(self.period, self.range_max())?;
        if segments != 1usize << self.index_bits {
            return Err(Error::config(format!(
                "period {} gives {segments} segments but {} index bits address {}",
                self.period,
                self.index_bits,
                1usize << self.index_bits
            )));
        }
        Ok(())
    }

    pub fn range_max(&self) -> f64 {
        self.fmt.range_max()
    }

    pub fn segments(&self) -> usize {
        1 << self.index_bits
    }

    /// Shift that removes the basis scale: `3 * t_bits + 1` (31 for ten bits).
    pub fn basis_shift(&self) -> u32 {
        basis_shift(self.t_bits)
    }

    /// Splits a raw input into sign, segment index and fraction.
    pub fn split(&self, raw: i32) -> InputSplit {
        let magnitude = (raw as i64).unsigned_abs().min(self.fmt.max_raw() as u64) as u32;
        InputSplit {
            negative: raw < 0,
            k: magnitude >> self.t_bits,
            u: magnitude & ((1u32 << self.t_bits) - 1),
        }
    }
}

pub fn basis_shift(t_bits: u32) -> u32 {
    3 * t_bits + 1
}

/// Sign, segment index and fraction numerator of an input word.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct InputSplit {
    pub negative: bool,
    pub k: u32,
    pub u: u32,
}

/// Splits a Q2.13 word with the default five-bit index.
pub fn split_input(x: FixedWord) -> InputSplit {
    let cfg = DatapathConfig {
        fmt: x.format(),
        t_bits: x.format().magnitude_bits().saturating_sub(5),
        ..DatapathConfig::default()
    };
    cfg.split(x.raw())
}

/// Integer basis numerators on `P[k-1], P[k], P[k+1], P[k+2]`.
///
/// The real weights are `n[i] / 2^(3 * t_bits + 1)`; the numerators always sum
/// to exactly that power of two.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash)]
pub struct BasisFixed(pub [i64; 4]);

impl BasisFixed {
    pub fn compute(u: u32, t_bits: u32) -> BasisFixed {
        assert!(t_bits <= MAX_T_BITS, "t_bits {t_bits} > {MAX_T_BITS}");
        assert!(
            u < (1u32 << t_bits),
            "u = {u} out of range for {t_bits} bits"
        );
        let u = u as i64;
        let one = 1i64 << t_bits;
        let u2 = u * u;
        let u3 = u2 * u;
        let u2_one = u2 * one;
        let u_one2 = u * one * one;
        BasisFixed([
            -u3 + 2 * u2_one - u_one2,
            3 * u3 - 5 * u2_one + 2 * one * one * one,
            -3 * u3 + 4 * u2_one + u_one2,
            u3 - u2_one,
        ])
    }

    pub fn sum(&self) -> i64 {
        self.0.iter().sum()
    }
}

/// Basis numerators for a ten-bit fraction.
pub fn t_vector_compute(u: u32) -> BasisFixed {
    BasisFixed::compute(u, 10)
}

/// Precomputed basis rows indexed by `u`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BasisRom {
    t_bits: u32,
    rows: Vec<BasisFixed>,
}

impl BasisRom {
    pub fn build(t_bits: u32) -> BasisRom {
        BasisRom {
            t_bits,
            rows: (0..1u32 << t_bits)
                .map(|u| BasisFixed::compute(u, t_bits))
                .collect(),
        }
    }

    /// Wraps externally supplied rows, e.g. read back from a memh file.
    pub fn from_rows(t_bits: u32, rows: Vec<BasisFixed>) -> Result<BasisRom> {
        if t_bits > MAX_T_BITS || rows.len() != 1usize << t_bits {
            return Err(Error::config(format!(
                "a {t_bits}-bit ROM needs {} rows, got {}",
                1usize << t_bits.min(MAX_T_BITS),
                rows.len()
            )));
        }
        Ok(BasisRom { t_bits, rows })
    }

    pub fn t_bits(&self) -> u32 {
        self.t_bits
    }

    pub fn rows(&self) -> &[BasisFixed] {
        &self.rows
    }

    pub fn row(&self, u: u32) -> BasisFixed {
        self.rows[u as usize]
    }

    pub fn set_row(&mut self, u: u32, row: BasisFixed) {
        self.rows[u as usize] = row;
    }
}

/// The 1024-row ROM for a ten-bit fraction.
pub fn build_basis_rom() -> BasisRom {
    BasisRom::build(10)
}

/// Exact four-term dot product.
pub fn mac_dot(p: [i64; 4], b: BasisFixed) -> i128 {
    p.iter().zip(b.0).map(|(&p, n)| p as i128 * n as i128).sum()
}

/// Intermediate values of one evaluation.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Trace {
    pub split: InputSplit,
    pub points: [i64; 4],
    pub basis: BasisFixed,
    pub acc: i128,
    /// Rounded magnitude before output saturation.
    pub rounded: i64,
    pub saturated: bool,
    pub output: i32,
}

/// A configured evaluator over a quantized control-point table.
#[derive(Clone, Debug)]
pub struct Datapath {
    cfg: DatapathConfig,
    /// `P[-1] ..= P[N+1]`, offset by one.
    points: Vec<i64>,
    rom: Option<BasisRom>,
}

impl Datapath {
    /// Builds an evaluator; a ROM is built on demand for [`TStrategy::Rom`].
    pub fn new(
        cfg: DatapathConfig,
        table: &ControlPointTable,
        rom: Option<BasisRom>,
    ) -> Result<Self> {
        cfg.validate()?;
        let raw = match (table.raw(), table.quantization()) {
            (Some(raw), Some(q)) if q.fmt == cfg.fmt => raw,
            (Some(_), Some(q)) => {
                return Err(Error::config(format!(
                    "table is quantized to {} but the datapath uses {}",
                    q.fmt, cfg.fmt
                )))
            }
            _ => return Err(Error::config("the datapath needs a quantized table")),
        };
        if (table.period() - cfg.period).abs() > 1e-12 || table.depth() != cfg.segments() {
            return Err(Error::config(format!(
                "table period {} (depth {}) does not match datapath period {} (depth {})",
                table.period(),
                table.depth(),
                cfg.period,
                cfg.segments()
            )));
        }
        if (table.range_max() - cfg.range_max()).abs() > 1e-12 {
            return Err(Error::config(format!(
                "table range {} does not match the {} range {}",
                table.range_max(),
                cfg.fmt,
                cfg.range_max()
            )));
        }
        let rom = match (cfg.t_strategy, rom) {
            (_, Some(rom)) if rom.t_bits() != cfg.t_bits => {
                return Err(Error::config(format!(
                    "ROM has {} fraction bits, datapath needs {}",
                    rom.t_bits(),
                    cfg.t_bits
                )))
            }
            (TStrategy::Rom, None) => Some(BasisRom::build(cfg.t_bits)),
            (_, rom) => rom,
        };

        let mut points = Vec::with_capacity(raw.len() + 1);
        points.push(cfg.fmt.saturate(-(raw[1] as i64)) as i64);
        points.extend(raw.iter().map(|&r| r as i64));
        Ok(Datapath { cfg, points, rom })
    }

    pub fn config(&self) -> &DatapathConfig {
        &self.cfg
    }

    pub fn rom(&self) -> Option<&BasisRom> {
        self.rom.as_ref()
    }

    /// Raw table words `P[k-1], P[k], P[k+1], P[k+2]`.
    pub fn fetch(&self, k: u32) -> [i64; 4] {
        let k = k as usize;
        [
            self.points[k],
            self.points[k + 1],
            self.points[k + 2],
            self.points[k + 3],
        ]
    }

    pub fn basis(&self, u: u32) -> BasisFixed {
        match (self.cfg.t_strategy, &self.rom) {
            (TStrategy::Rom, Some(rom)) => rom.row(u),
            _ => BasisFixed::compute(u, self.cfg.t_bits),
        }
    }

    pub fn trace(&self, raw: i32) -> Trace {
        let split = self.cfg.split(raw);
        let points = self.fetch(split.k);
        let (basis, acc, shift) = match self.cfg.method {
            Method::CatmullRom => {
                let basis = self.basis(split.u);
                (basis, mac_dot(points, basis), self.cfg.basis_shift())
            }
            Method::Pwl => {
                let one = 1i64 << self.cfg.t_bits;
                let u = split.u as i64;
                let basis = BasisFixed([0, one - u, u, 0]);
                (basis, mac_dot(points, basis), self.cfg.t_bits)
            }
        };
        let rounded = round_shift_wide(acc, shift, self.cfg.rounding);
        let magnitude = self.cfg.fmt.saturate(rounded);
        let output = if split.negative {
            self.cfg.fmt.saturate(-(magnitude as i64))
        } else {
            magnitude
        };
        Trace {
            split,
            points,
            basis,
            acc,
            rounded,
            saturated: magnitude as i64 != rounded,
            output,
        }
    }

    pub fn eval_raw(&self, raw: i32) -> i32 {
        self.trace(raw).output
    }

    pub fn eval(&self, x: FixedWord) -> FixedWord {
        debug_assert_eq!(x.format(), self.cfg.fmt);
        FixedWord::saturating_from_raw(self.eval_raw(x.raw()) as i64, self.cfg.fmt)
    }
}

fn round_shift_wide(acc: i128, shift: u32, mode: RoundingMode) -> i64 {
    // The accumulator fits comfortably in i64 for every supported split.
    let acc = i64::try_from(acc).expect("accumulator exceeds 64 bits");
    mode.round_shift(acc, shift)
}

/// One-shot evaluation; builds the evaluator for every call.
pub fn tanh_eval_fixed(
    x: FixedWord,
    cfg: &DatapathConfig,
    table: &ControlPointTable,
    rom: Option<&BasisRom>,
) -> Result<FixedWord> {
    Ok(Datapath::new(*cfg, table, rom.cloned())?.eval(x))
}
