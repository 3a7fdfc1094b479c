// SPDX-License-Identifier: Apache-2.0

//! Command-line front end. The defaults describe the 32-entry Q2.13 unit.

use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};

use crate::analysis::{
    best_mode_per_cell, reproduce_tables, run_verification, sweep_dense, sweep_error, Cell,
    CellMatch, Metric, Mode, SweepConfig, TableReport, CELL_TOLERANCE, GAIN_TOLERANCE,
};
use crate::datapath::{BasisFixed, BasisRom, Datapath, DatapathConfig, TStrategy};
use crate::error::{Error, Result};
use crate::export::{
    emit_memh, emit_report, emit_sidecar, render_report, render_table_csv, write_file, MemhSource,
    Report, ReportFormat,
};
use crate::qformat::{decode_raw, encode, FixedWord, QFormat, RoundingMode};
use crate::spline::{tanh_ref, ControlPointTable, Method};

#[derive(Debug, Parser)]
#[command(
    name = "cr-tanh",
    version,
    about = "Catmull-Rom spline tanh unit: bit-accurate model and error analysis"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate the control-point table (memh, sidecar JSON, CSV) and optionally the basis ROM.
    GenLut(GenLutArgs),
    /// Evaluate the fixed-point unit on one input.
    Eval(EvalArgs),
    /// Reproduce the RMS and maximum error tables for all sampling periods.
    Tables(TablesArgs),
    /// Check the datapath invariants over every input code.
    Verify(VerifyArgs),
    /// Measure the error of one configuration over every input code.
    Sweep(SweepArgs),
}

#[derive(Debug, Clone, Args)]
pub struct CommonArgs {
    /// Sampling period of the control points.
    #[arg(long, default_value_t = 0.125)]
    pub period: f64,
    /// Fraction bits of the 16-bit input/output words.
    #[arg(long, default_value_t = 13)]
    pub frac_bits: u32,
    /// Rounding for table quantization and the final output: nearest-even, nearest-away, truncate.
    #[arg(long, default_value = "nearest-even")]
    pub rounding: RoundingMode,
    /// Basis generation: computed polynomials or a precomputed ROM.
    #[arg(long, default_value = "computed")]
    pub t_strategy: TStrategy,
}

impl CommonArgs {
    fn fmt(&self) -> Result<QFormat> {
        QFormat::new(16, self.frac_bits)
    }

    fn datapath_config(&self, method: Method) -> Result<DatapathConfig> {
        Ok(DatapathConfig::for_period(self.period, self.fmt()?)?
            .with_rounding(self.rounding)
            .with_strategy(self.t_strategy)
            .with_method(method))
    }
}

#[derive(Debug, Args)]
pub struct GenLutArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    /// Control-point memh file; a `.json` sidecar is written next to it.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Control-point CSV listing.
    #[arg(long)]
    pub csv: Option<PathBuf>,
    /// Basis ROM memh file.
    #[arg(long)]
    pub rom: Option<PathBuf>,
}

#[derive(Debug, Args)]
#[command(group(clap::ArgGroup::new("input").required(true).args(["raw", "real"])))]
pub struct EvalArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    /// Raw input word, hex (0x-prefixed) or decimal.
    #[arg(long, allow_hyphen_values = true)]
    pub raw: Option<String>,
    /// Real input, rounded to the input format.
    #[arg(long, allow_hyphen_values = true)]
    pub real: Option<f64>,
    /// Interpolation method: catmull-rom or pwl.
    #[arg(long, default_value = "catmull-rom")]
    pub method: Method,
}

#[derive(Debug, Args)]
pub struct TablesArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    /// Measurement mode: real, quantized-lut, fixed-datapath, or all.
    #[arg(long, default_value = "real")]
    pub mode: String,
    /// Report file.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Report format: csv or json.
    #[arg(long, default_value = "csv")]
    pub format: ReportFormat,
}

#[derive(Debug, Args)]
pub struct VerifyArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    /// Corrupt this basis ROM row before checking (fault injection).
    #[arg(long, hide = true)]
    pub inject_rom_fault: Option<u32>,
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    /// Interpolation method: catmull-rom or pwl.
    #[arg(long, default_value = "catmull-rom")]
    pub method: Method,
    /// Measurement mode: real, quantized-lut, or fixed-datapath.
    #[arg(long, default_value = "real")]
    pub mode: Mode,
    /// Evaluate on a grid this many times finer than the input codes (real modes only).
    #[arg(long)]
    pub oversample: Option<u32>,
    /// Report file.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Report format: csv or json.
    #[arg(long, default_value = "csv")]
    pub format: ReportFormat,
}

/// Runs a parsed command, writing human-readable output to `out`.
/// Returns the process exit code.
pub fn run(cli: Cli, out: &mut dyn Write) -> Result<i32> {
    match cli.command {
        Command::GenLut(args) => gen_lut(&args, out),
        Command::Eval(args) => eval(&args, out),
        Command::Tables(args) => tables(&args, out),
        Command::Verify(args) => verify(&args, out),
        Command::Sweep(args) => sweep(&args, out),
    }
}

fn io(e: std::io::Error) -> Error {
    Error::io("<stdout>", e)
}

fn gen_lut(args: &GenLutArgs, out: &mut dyn Write) -> Result<i32> {
    let c = &args.common;
    let fmt = c.fmt()?;
    let table = ControlPointTable::quantized(c.period, fmt.range_max(), fmt, c.rounding)?;
    writeln!(
        out,
        "entries: {} ({} in range + {} extension), period {}, {fmt}, {}",
        table.len(),
        table.depth(),
        table.len() - table.depth(),
        c.period,
        c.rounding
    )
    .map_err(io)?;
    if let Some(path) = &args.out {
        emit_memh(&MemhSource::Table(&table), path)?;
        let sidecar = path.with_extension("json");
        emit_sidecar(&table, &sidecar)?;
        writeln!(out, "wrote {} and {}", path.display(), sidecar.display()).map_err(io)?;
    }
    if let Some(path) = &args.csv {
        write_file(path, render_table_csv(&table).as_bytes())?;
        writeln!(out, "wrote {}", path.display()).map_err(io)?;
    }
    if let Some(path) = &args.rom {
        let cfg = DatapathConfig::for_period(c.period, fmt)?;
        let rom = BasisRom::build(cfg.t_bits);
        emit_memh(&MemhSource::Rom(&rom), path)?;
        writeln!(
            out,
            "wrote {} ({} rows x 4 words, {} bits)",
            path.display(),
            rom.rows().len(),
            crate::export::rom_word_bits(cfg.t_bits)
        )
        .map_err(io)?;
    }
    if args.out.is_none() && args.csv.is_none() {
        for (i, r) in table.raw().expect("quantized").iter().enumerate() {
            writeln!(out, "{i:3} {}", hex_word(*r, fmt)).map_err(io)?;
        }
    }
    Ok(0)
}

/// Parses `0x`-prefixed hex (two's complement of the word width) or signed decimal.
pub fn parse_raw(text: &str, fmt: QFormat) -> Result<FixedWord> {
    let t = text.trim();
    let (neg, body) = match t.strip_prefix('-') {
        Some(rest) => (true, rest),
        None => (false, t),
    };
    let bad = || Error::config(format!("cannot parse raw input `{text}`"));
    let value = if let Some(hex) = body.strip_prefix("0x").or_else(|| body.strip_prefix("0X")) {
        let v = i64::from_str_radix(hex, 16).map_err(|_| bad())?;
        // Bare hex words are two's complement of the format width.
        if !neg && v >> (fmt.total_bits() - 1) == 1 && v < 1i64 << fmt.total_bits() {
            v - (1i64 << fmt.total_bits())
        } else {
            v
        }
    } else {
        body.parse::<i64>().map_err(|_| bad())?
    };
    FixedWord::from_raw(if neg { -value } else { value }, fmt)
}

fn hex_word(raw: i32, fmt: QFormat) -> String {
    let mask = (1u64 << fmt.total_bits()) - 1;
    format!(
        "0x{:0w$x} ({raw})",
        raw as i64 as u64 & mask,
        w = fmt.total_bits().div_ceil(4) as usize
    )
}

fn eval(args: &EvalArgs, out: &mut dyn Write) -> Result<i32> {
    let c = &args.common;
    let cfg = c.datapath_config(args.method)?;
    let fmt = cfg.fmt;
    let x = match (&args.raw, args.real) {
        (Some(raw), _) => parse_raw(raw, fmt)?,
        (None, Some(v)) => encode(v, fmt, c.rounding)?,
        (None, None) => return Err(Error::config("pass --raw or --real")),
    };
    let table = ControlPointTable::quantized(c.period, fmt.range_max(), fmt, c.rounding)?;
    let dp = Datapath::new(cfg, &table, None)?;
    let y = dp.eval(x);
    let xv = decode_raw(x.raw() as i64, fmt);
    let yv = decode_raw(y.raw() as i64, fmt);
    let reference = tanh_ref(xv);
    writeln!(out, "input raw:  {}", hex_word(x.raw(), fmt)).map_err(io)?;
    writeln!(out, "input:      {xv}").map_err(io)?;
    writeln!(out, "output raw: {}", hex_word(y.raw(), fmt)).map_err(io)?;
    writeln!(out, "output:     {yv}").map_err(io)?;
    writeln!(out, "tanh:       {reference}").map_err(io)?;
    writeln!(out, "error:      {:e}", yv - reference).map_err(io)?;
    Ok(0)
}

fn print_table(report: &TableReport, out: &mut dyn Write) -> Result<()> {
    writeln!(
        out,
        "mode {} ({}), tolerance {:.0}% per cell, {:.0}% per gain",
        report.mode,
        report.rounding,
        CELL_TOLERANCE * 100.0,
        GAIN_TOLERANCE * 100.0
    )
    .map_err(io)?;
    writeln!(
        out,
        "{:>7} {:>5} {:>12} {:>6} {:>12} {:>12} {:>9}",
        "period", "depth", "method", "metric", "measured", "published", "deviation"
    )
    .map_err(io)?;
    for row in &report.rows {
        let labelled = row
            .cells()
            .map(|c| (c.method.as_str(), c, CELL_TOLERANCE))
            .into_iter()
            .chain(row.gain_cells().map(|c| ("gain", c, GAIN_TOLERANCE)));
        for (label, cell, tol) in labelled {
            writeln!(
                out,
                "{:>7} {:>5} {:>12} {:>6} {:>12.6} {:>12.6} {:>+8.1}% {}",
                row.period,
                row.depth,
                label,
                cell.metric.as_str(),
                cell.measured,
                cell.published,
                cell.relative_deviation() * 100.0,
                if cell.within(tol) { "ok" } else { "off" }
            )
            .map_err(io)?;
        }
    }
    Ok(())
}

fn tables(args: &TablesArgs, out: &mut dyn Write) -> Result<i32> {
    let c = &args.common;
    let fmt = c.fmt()?;
    if args.mode == "all" {
        let reports = Mode::ALL
            .iter()
            .map(|&m| reproduce_tables(m, fmt, c.rounding))
            .collect::<Result<Vec<_>>>()?;
        for r in &reports {
            print_table(r, out)?;
            writeln!(out).map_err(io)?;
        }
        let best = best_mode_per_cell(&reports);
        writeln!(out, "best mode per cell:").map_err(io)?;
        for m in &best {
            writeln!(
                out,
                "{:>7} {:>12} {:>4} {:>15} {:>+8.1}%",
                m.cell.period,
                m.cell.method.as_str(),
                m.cell.metric.as_str(),
                m.best_mode.as_str(),
                m.cell.relative_deviation() * 100.0
            )
            .map_err(io)?;
        }
        if let Some(path) = &args.out {
            write_best(&reports, &best, args.format, path)?;
        }
        let ok = best
            .iter()
            .filter(|m| m.cell.method == Method::CatmullRom)
            .all(|m| m.cell.within(CELL_TOLERANCE));
        return Ok(if ok { 0 } else { 1 });
    }

    let mode: Mode = args.mode.parse()?;
    let report = reproduce_tables(mode, fmt, c.rounding)?;
    print_table(&report, out)?;
    if let Some(path) = &args.out {
        emit_report(&Report::Table(&report), args.format, path)?;
        writeln!(out, "wrote {}", path.display()).map_err(io)?;
    }
    Ok(if report.cr_cells_within(CELL_TOLERANCE) {
        0
    } else {
        1
    })
}

fn write_best(
    reports: &[TableReport],
    best: &[CellMatch],
    format: ReportFormat,
    path: &Path,
) -> Result<()> {
    let text = match format {
        ReportFormat::Json => {
            #[derive(serde::Serialize)]
            struct Combined<'a> {
                reports: &'a [TableReport],
                best: &'a [CellMatch],
            }
            let mut s = serde_json::to_string_pretty(&Combined { reports, best })
                .expect("reports serialize");
            s.push('\n');
            s
        }
        ReportFormat::Csv => {
            let mut s = String::new();
            for r in reports {
                s.push_str(&render_report(&Report::Table(r), ReportFormat::Csv));
            }
            s.push_str("\nperiod,method,metric,best_mode,measured,published,relative_deviation\n");
            for m in best {
                let Cell {
                    period,
                    method,
                    metric,
                    measured,
                    published,
                } = m.cell;
                s.push_str(&format!(
                    "{period},{method},{},{},{measured},{published},{}\n",
                    match metric {
                        Metric::Rms => "rms",
                        Metric::Max => "max",
                    },
                    m.best_mode,
                    m.cell.relative_deviation()
                ));
            }
            s
        }
    };
    write_file(path, text.as_bytes())
}

fn verify(args: &VerifyArgs, out: &mut dyn Write) -> Result<i32> {
    let cfg = args.common.datapath_config(Method::CatmullRom)?;
    let rom = args.inject_rom_fault.map(|u| {
        let mut rom = BasisRom::build(cfg.t_bits);
        let u = u.min((1 << cfg.t_bits) - 1);
        let BasisFixed([a, b, c, d]) = rom.row(u);
        rom.set_row(u, BasisFixed([a, c, b, d]));
        if rom.row(u) == BasisRom::build(cfg.t_bits).row(u) {
            rom.set_row(u, BasisFixed([a, b + (1 << cfg.basis_shift()), c, d]));
        }
        rom
    });
    let report = run_verification(&cfg, rom)?;
    for check in &report.checks {
        let tag = match (check.passed, check.gated) {
            (true, _) => "PASS",
            (false, true) => "FAIL",
            (false, false) => "INFO",
        };
        writeln!(out, "[{tag}] {}: {}", check.name, check.detail).map_err(io)?;
    }
    Ok(if report.passed() { 0 } else { 1 })
}

fn sweep(args: &SweepArgs, out: &mut dyn Write) -> Result<i32> {
    let c = &args.common;
    let cfg = SweepConfig {
        method: args.method,
        mode: args.mode,
        period: c.period,
        fmt: c.fmt()?,
        rounding: c.rounding,
        t_strategy: c.t_strategy,
    };
    if let Some(oversample) = args.oversample {
        let r = sweep_dense(&cfg, oversample)?;
        writeln!(
            out,
            "{} {} period {} x{}: rms {:e}, max {:e} at x = {}, {} points",
            r.method, r.mode, r.period, r.oversample, r.rms, r.max_abs, r.argmax_x, r.n_points
        )
        .map_err(io)?;
        if let Some(path) = &args.out {
            let mut s = serde_json::to_string_pretty(&r).expect("report serializes");
            s.push('\n');
            write_file(path, s.as_bytes())?;
        }
        return Ok(0);
    }
    let r = sweep_error(&cfg)?;
    writeln!(
        out,
        "{} {} period {} ({}): rms {:e}, max {:e} at raw {}, {} points",
        r.method, r.mode, r.period, r.rounding, r.rms, r.max_abs, r.argmax_input, r.n_points
    )
    .map_err(io)?;
    if let Some(path) = &args.out {
        emit_report(&Report::Error(&r), args.format, path)?;
    }
    Ok(0)
}
