// SPDX-License-Identifier: Apache-2.0

//! Exhaustive error measurement and table reproduction.
//!
//! Every sweep visits all `2^16` Q2.13 input codes and compares against
//! [`tanh_ref`]. Three measurement modes are supported:
//!
//! * `real`: real-valued control points, no output quantization;
//! * `quantized-lut`: control points rounded to the format, real arithmetic;
//! * `fixed-datapath`: the bit-accurate evaluator, rounded output.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::datapath::{BasisRom, Datapath, DatapathConfig, TStrategy};
use crate::error::{Error, Result};
use crate::qformat::{decode_raw, QFormat, RoundingMode};
use crate::spline::{tanh_ref, ControlPointTable, Method, TABLE_PERIODS};
use crate::sweep;

/// Relative tolerance for Catmull-Rom and PWL error cells.
pub const CELL_TOLERANCE: f64 = 0.20;
/// Relative tolerance for accuracy-gain ratios.
pub const GAIN_TOLERANCE: f64 = 0.25;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Mode {
    #[default]
    Real,
    QuantizedLut,
    FixedDatapath,
}

impl Mode {
    pub const ALL: [Mode; 3] = [Mode::Real, Mode::QuantizedLut, Mode::FixedDatapath];

    pub fn as_str(self) -> &'static str {
        match self {
            Mode::Real => "real",
            Mode::QuantizedLut => "quantized-lut",
            Mode::FixedDatapath => "fixed-datapath",
        }
    }
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Mode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Mode::ALL
            .into_iter()
            .find(|m| m.as_str() == s)
            .ok_or_else(|| Error::config(format!("unknown mode `{s}`")))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepConfig {
    pub method: Method,
    pub mode: Mode,
    pub period: f64,
    pub fmt: QFormat,
    pub rounding: RoundingMode,
    pub t_strategy: TStrategy,
}

impl Default for SweepConfig {
    fn default() -> Self {
        SweepConfig {
            method: Method::CatmullRom,
            mode: Mode::Real,
            period: 0.125,
            fmt: QFormat::Q2_13,
            rounding: RoundingMode::NearestEven,
            t_strategy: TStrategy::Computed,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ErrorReport {
    pub period: f64,
    pub depth: usize,
    pub method: Method,
    pub mode: Mode,
    pub rounding: RoundingMode,
    pub rms: f64,
    pub max_abs: f64,
    pub argmax_input: i32,
    pub n_points: u64,
}

impl ErrorReport {
    fn from_stats(cfg: &SweepConfig, depth: usize, stats: sweep::ErrorStats) -> Self {
        ErrorReport {
            period: cfg.period,
            depth,
            method: cfg.method,
            mode: cfg.mode,
            rounding: cfg.rounding,
            rms: stats.rms(),
            max_abs: stats.max_abs(),
            argmax_input: stats.argmax(),
            n_points: stats.count(),
        }
    }
}

/// A sweep ready to run: the approximation for each input code.
pub enum Approximation {
    Real {
        method: Method,
        table: ControlPointTable,
        fmt: QFormat,
    },
    Fixed(Datapath),
}

impl Approximation {
    pub fn new(cfg: &SweepConfig) -> Result<Self> {
        let range_max = cfg.fmt.range_max();
        Ok(match cfg.mode {
            Mode::Real => Approximation::Real {
                method: cfg.method,
                table: ControlPointTable::real(cfg.period, range_max)?,
                fmt: cfg.fmt,
            },
            Mode::QuantizedLut => Approximation::Real {
                method: cfg.method,
                table: ControlPointTable::quantized(cfg.period, range_max, cfg.fmt, cfg.rounding)?,
                fmt: cfg.fmt,
            },
            Mode::FixedDatapath => {
                let dp_cfg = DatapathConfig::for_period(cfg.period, cfg.fmt)?
                    .with_method(cfg.method)
                    .with_rounding(cfg.rounding)
                    .with_strategy(cfg.t_strategy);
                let table =
                    ControlPointTable::quantized(cfg.period, range_max, cfg.fmt, cfg.rounding)?;
                Approximation::Fixed(Datapath::new(dp_cfg, &table, None)?)
            }
        })
    }

    pub fn fmt(&self) -> QFormat {
        match self {
            Approximation::Real { fmt, .. } => *fmt,
            Approximation::Fixed(dp) => dp.config().fmt,
        }
    }

    pub fn eval(&self, raw: i32) -> f64 {
        match self {
            Approximation::Real { method, table, fmt } => {
                method.eval_real(decode_raw(raw as i64, *fmt), table)
            }
            Approximation::Fixed(dp) => decode_raw(dp.eval_raw(raw) as i64, dp.config().fmt),
        }
    }

    pub fn error(&self, raw: i32) -> f64 {
        self.eval(raw) - tanh_ref(decode_raw(raw as i64, self.fmt()))
    }
}

pub fn sweep_error(cfg: &SweepConfig) -> Result<ErrorReport> {
    let approx = Approximation::new(cfg)?;
    let depth = crate::spline::segment_count(cfg.period, cfg.fmt.range_max())?;
    let stats = sweep::run(cfg.fmt.codes(), |x| approx.error(x));
    Ok(ErrorReport::from_stats(cfg, depth, stats))
}

/// Error over a grid `oversample` times finer than the format's codes.
///
/// Only the real-valued modes are meaningful here; the argmax is reported as
/// a real input.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DenseReport {
    pub period: f64,
    pub method: Method,
    pub mode: Mode,
    pub oversample: u32,
    pub rms: f64,
    pub max_abs: f64,
    pub argmax_x: f64,
    pub n_points: u64,
}

pub fn sweep_dense(cfg: &SweepConfig, oversample: u32) -> Result<DenseReport> {
    if cfg.mode == Mode::FixedDatapath {
        return Err(Error::config("dense sweeps need a real-valued mode"));
    }
    if !(1..=64).contains(&oversample) || !oversample.is_power_of_two() {
        return Err(Error::config(format!(
            "oversample must be a power of two in 1..=64, got {oversample}"
        )));
    }
    let approx = Approximation::new(cfg)?;
    let Approximation::Real { method, table, .. } = &approx else {
        unreachable!()
    };
    let step = cfg.fmt.ulp() / oversample as f64;
    let half = (cfg.fmt.code_count() / 2) as i64 * oversample as i64;
    let lo = -half as i32;
    let hi = (half - 1) as i32;
    let stats = sweep::run(lo..=hi, |i| {
        let x = i as f64 * step;
        method.eval_real(x, table) - tanh_ref(x)
    });
    Ok(DenseReport {
        period: cfg.period,
        method: cfg.method,
        mode: cfg.mode,
        oversample,
        rms: stats.rms(),
        max_abs: stats.max_abs(),
        argmax_x: stats.argmax() as f64 * step,
        n_points: stats.count(),
    })
}

/// Published error figures for one sampling period.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PublishedRow {
    pub period: f64,
    pub depth: usize,
    pub pwl_rms: f64,
    pub cr_rms: f64,
    pub gain_rms: f64,
    pub pwl_max: f64,
    pub cr_max: f64,
    pub gain_max: f64,
}

pub const PUBLISHED: [PublishedRow; 4] = [
    PublishedRow {
        period: 0.5,
        depth: 8,
        pwl_rms: 0.008201,
        cr_rms: 0.001462,
        gain_rms: 5.61,
        pwl_max: 0.023330,
        cr_max: 0.005179,
        gain_max: 4.50,
    },
    PublishedRow {
        period: 0.25,
        depth: 16,
        pwl_rms: 0.002078,
        cr_rms: 0.000147,
        gain_rms: 14.16,
        pwl_max: 0.006015,
        cr_max: 0.000602,
        gain_max: 9.99,
    },
    PublishedRow {
        period: 0.125,
        depth: 32,
        pwl_rms: 0.000523,
        cr_rms: 0.000052,
        gain_rms: 10.02,
        pwl_max: 0.001584,
        cr_max: 0.000152,
        gain_max: 10.42,
    },
    PublishedRow {
        period: 0.0625,
        depth: 64,
        pwl_rms: 0.000135,
        cr_rms: 0.000049,
        gain_rms: 2.76,
        pwl_max: 0.000470,
        cr_max: 0.000122,
        gain_max: 3.84,
    },
];

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Metric {
    Rms,
    Max,
}

impl Metric {
    pub fn as_str(self) -> &'static str {
        match self {
            Metric::Rms => "rms",
            Metric::Max => "max",
        }
    }
}

/// One measured figure next to its published counterpart.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Cell {
    pub period: f64,
    pub method: Method,
    pub metric: Metric,
    pub measured: f64,
    pub published: f64,
}

impl Cell {
    pub fn relative_deviation(&self) -> f64 {
        (self.measured - self.published) / self.published
    }

    pub fn within(&self, tolerance: f64) -> bool {
        self.relative_deviation().abs() <= tolerance
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TableRow {
    pub period: f64,
    pub depth: usize,
    pub pwl: ErrorReport,
    pub cr: ErrorReport,
    pub gain_rms: f64,
    pub gain_max: f64,
    pub published: PublishedRow,
}

impl TableRow {
    pub fn cells(&self) -> [Cell; 4] {
        let cell = |method, metric, measured, published| Cell {
            period: self.period,
            method,
            metric,
            measured,
            published,
        };
        let p = &self.published;
        [
            cell(Method::Pwl, Metric::Rms, self.pwl.rms, p.pwl_rms),
            cell(Method::CatmullRom, Metric::Rms, self.cr.rms, p.cr_rms),
            cell(Method::Pwl, Metric::Max, self.pwl.max_abs, p.pwl_max),
            cell(Method::CatmullRom, Metric::Max, self.cr.max_abs, p.cr_max),
        ]
    }

    /// Gain ratios as cells, tagged with the Catmull-Rom method.
    pub fn gain_cells(&self) -> [Cell; 2] {
        [
            Cell {
                period: self.period,
                method: Method::CatmullRom,
                metric: Metric::Rms,
                measured: self.gain_rms,
                published: self.published.gain_rms,
            },
            Cell {
                period: self.period,
                method: Method::CatmullRom,
                metric: Metric::Max,
                measured: self.gain_max,
                published: self.published.gain_max,
            },
        ]
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TableReport {
    pub mode: Mode,
    pub rounding: RoundingMode,
    pub rows: Vec<TableRow>,
}

impl TableReport {
    pub fn cells(&self) -> impl Iterator<Item = Cell> + '_ {
        self.rows.iter().flat_map(|r| r.cells())
    }

    pub fn cr_cells_within(&self, tolerance: f64) -> bool {
        self.cells()
            .filter(|c| c.method == Method::CatmullRom)
            .all(|c| c.within(tolerance))
    }
}

pub fn reproduce_tables(mode: Mode, fmt: QFormat, rounding: RoundingMode) -> Result<TableReport> {
    let rows = PUBLISHED
        .iter()
        .map(|published| {
            debug_assert!(TABLE_PERIODS.contains(&published.period));
            let cfg = SweepConfig {
                mode,
                period: published.period,
                fmt,
                rounding,
                ..SweepConfig::default()
            };
            let pwl = sweep_error(&SweepConfig {
                method: Method::Pwl,
                ..cfg
            })?;
            let cr = sweep_error(&SweepConfig {
                method: Method::CatmullRom,
                ..cfg
            })?;
            Ok(TableRow {
                period: published.period,
                depth: cr.depth,
                gain_rms: pwl.rms / cr.rms,
                gain_max: pwl.max_abs / cr.max_abs,
                pwl,
                cr,
                published: *published,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(TableReport {
        mode,
        rounding,
        rows,
    })
}

/// The mode whose measurement lands closest to a published cell.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CellMatch {
    pub cell: Cell,
    pub best_mode: Mode,
}

/// For each cell, picks the report with the smallest relative deviation.
pub fn best_mode_per_cell(reports: &[TableReport]) -> Vec<CellMatch> {
    let Some(first) = reports.first() else {
        return Vec::new();
    };
    let n = first.cells().count();
    (0..n)
        .map(|i| {
            reports
                .iter()
                .map(|r| CellMatch {
                    cell: r.cells().nth(i).expect("reports share a shape"),
                    best_mode: r.mode,
                })
                .min_by(|a, b| {
                    a.cell
                        .relative_deviation()
                        .abs()
                        .total_cmp(&b.cell.relative_deviation().abs())
                })
                .expect("at least one report")
        })
        .collect()
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Divergence {
    pub input: i32,
    pub u: u32,
    pub computed: i32,
    pub rom: i32,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct EquivalenceReport {
    pub total: usize,
    pub matched: usize,
    pub first_divergence: Option<Divergence>,
    /// First ROM row that differs from the computed basis, if any.
    pub first_row_mismatch: Option<u32>,
}

impl EquivalenceReport {
    pub fn passed(&self) -> bool {
        self.matched == self.total && self.first_row_mismatch.is_none()
    }
}

/// Compares the computed and ROM t-vector strategies over every input.
pub fn verify_equivalence(
    cfg: &DatapathConfig,
    table: &ControlPointTable,
    rom: BasisRom,
) -> Result<EquivalenceReport> {
    let computed = Datapath::new(cfg.with_strategy(TStrategy::Computed), table, None)?;
    let first_row_mismatch = (0..1u32 << cfg.t_bits).find(|&u| rom.row(u) != computed.basis(u));
    let stored = Datapath::new(cfg.with_strategy(TStrategy::Rom), table, Some(rom))?;
    let pairs = sweep::map_codes(cfg.fmt.codes(), |x| {
        (computed.eval_raw(x), stored.eval_raw(x))
    });
    let first_divergence =
        cfg.fmt
            .codes()
            .zip(&pairs)
            .find(|(_, (a, b))| a != b)
            .map(|(input, &(computed, rom))| Divergence {
                input,
                u: cfg.split(input).u,
                computed,
                rom,
            });
    Ok(EquivalenceReport {
        total: pairs.len(),
        matched: pairs.iter().filter(|(a, b)| a == b).count(),
        first_divergence,
        first_row_mismatch,
    })
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct MonotonicityReport {
    pub pairs_checked: usize,
    /// Inputs `x` where `f(next) < f(x)` for the following input `next`.
    pub violations: Vec<i32>,
}

/// Checks consecutive pairs of an ascending input list.
pub fn check_monotonicity_on<F>(inputs: &[i32], f: F) -> MonotonicityReport
where
    F: Fn(i32) -> f64 + Sync,
{
    let values = sweep::map_codes(0..=inputs.len() as i32 - 1, |i| f(inputs[i as usize]));
    let violations = inputs
        .windows(2)
        .zip(values.windows(2))
        .filter(|(_, v)| v[1] < v[0])
        .map(|(x, _)| x[0])
        .collect();
    MonotonicityReport {
        pairs_checked: inputs.len().saturating_sub(1),
        violations,
    }
}

/// Checks every adjacent pair of input codes of the datapath.
pub fn check_monotonicity(dp: &Datapath) -> MonotonicityReport {
    let outputs = sweep::map_codes(dp.config().fmt.codes(), |x| dp.eval_raw(x));
    let lo = dp.config().fmt.min_raw();
    let violations = outputs
        .windows(2)
        .enumerate()
        .filter(|(_, w)| w[1] < w[0])
        .map(|(i, _)| lo + i as i32)
        .collect();
    MonotonicityReport {
        pairs_checked: outputs.len() - 1,
        violations,
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CheckResult {
    pub name: String,
    pub passed: bool,
    /// Whether a failure makes the whole verification fail.
    pub gated: bool,
    pub detail: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VerificationReport {
    pub checks: Vec<CheckResult>,
}

impl VerificationReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed || !c.gated)
    }
}

/// Runs every hard invariant of the datapath over all inputs.
///
/// `rom` is the ROM compared against the computed basis; `None` builds a
/// fresh one.
pub fn run_verification(cfg: &DatapathConfig, rom: Option<BasisRom>) -> Result<VerificationReport> {
    let fmt = cfg.fmt;
    let table = ControlPointTable::quantized(cfg.period, fmt.range_max(), fmt, cfg.rounding)?;
    let rom = rom.unwrap_or_else(|| BasisRom::build(cfg.t_bits));
    let mut checks = Vec::new();

    let eq = verify_equivalence(cfg, &table, rom.clone())?;
    checks.push(CheckResult {
        name: "strategy-equivalence".into(),
        passed: eq.passed(),
        gated: true,
        detail: match (eq.first_divergence, eq.first_row_mismatch) {
            (None, None) => format!("{}/{} outputs identical", eq.matched, eq.total),
            (div, row) => format!(
                "{}/{} outputs identical; first divergence {}; first ROM row mismatch {}",
                eq.matched,
                eq.total,
                div.map_or("none".into(), |d| format!(
                    "at input {} (u = {}): computed {} vs rom {}",
                    d.input, d.u, d.computed, d.rom
                )),
                row.map_or("none".into(), |u| format!("u = {u}")),
            ),
        },
    });

    let rom = (cfg.t_strategy == TStrategy::Rom).then_some(rom);
    let dp = Datapath::new(*cfg, &table, rom)?;
    let traces = sweep::map_codes(fmt.codes(), |x| dp.trace(x));
    let at = |raw: i32| &traces[(raw - fmt.min_raw()) as usize];

    let asymmetric: Vec<i32> = (fmt.min_raw() + 1..=fmt.max_raw())
        .filter(|&x| at(-x).output != -at(x).output)
        .collect();
    let edge_ok = at(fmt.min_raw()).output == fmt.saturate(-(at(fmt.max_raw()).output as i64));
    checks.push(CheckResult {
        name: "odd-symmetry".into(),
        passed: asymmetric.is_empty() && edge_ok,
        gated: true,
        detail: format!(
            "{} asymmetric inputs{}; min-code edge {}",
            asymmetric.len(),
            asymmetric
                .first()
                .map_or(String::new(), |x| format!(" (first {x})")),
            if edge_ok { "ok" } else { "mismatch" }
        ),
    });

    let raw = table.raw().expect("quantized");
    let off_grid: Vec<usize> = (0..cfg.segments())
        .filter(|&k| at((k as i32) << cfg.t_bits).output != raw[k])
        .collect();
    checks.push(CheckResult {
        name: "grid-points".into(),
        passed: off_grid.is_empty(),
        gated: true,
        detail: format!(
            "{}/{} grid inputs return their table entry",
            cfg.segments() - off_grid.len(),
            cfg.segments()
        ),
    });

    let one = 1i32 << fmt.frac_bits();
    let saturations = traces.iter().filter(|t| t.saturated).count();
    let out_of_range = traces.iter().filter(|t| t.output.abs() >= one).count();
    checks.push(CheckResult {
        name: "output-range".into(),
        passed: saturations == 0 && out_of_range == 0,
        gated: true,
        detail: format!("{out_of_range} outputs outside (-1, 1); {saturations} saturation events"),
    });

    let bound_log2 = accumulator_bound_log2(cfg);
    let peak = traces
        .iter()
        .map(|t| t.acc.unsigned_abs())
        .max()
        .unwrap_or(0);
    checks.push(CheckResult {
        name: "accumulator-bound".into(),
        passed: peak < 1u128 << bound_log2,
        gated: true,
        detail: format!(
            "peak |acc| = {peak} ({:.2} bits) < 2^{bound_log2}",
            (peak as f64).log2()
        ),
    });

    let mono = check_monotonicity(&dp);
    checks.push(CheckResult {
        name: "monotonicity".into(),
        passed: mono.violations.is_empty(),
        gated: false,
        detail: format!(
            "{} decreasing pairs out of {}{}",
            mono.violations.len(),
            mono.pairs_checked,
            mono.violations
                .first()
                .map_or(String::new(), |x| format!(" (first at {x})"))
        ),
    });

    Ok(VerificationReport { checks })
}

/// Accumulator magnitude limit: `2^(frac_bits + basis shift + 3)`, i.e. `2^47` for the default split.
pub fn accumulator_bound_log2(cfg: &DatapathConfig) -> u32 {
    cfg.fmt.frac_bits() + cfg.basis_shift() + 3
}
