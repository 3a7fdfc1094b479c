// SPDX-License-Identifier: Apache-2.0

//! File writers: `$readmemh` tables, sidecar descriptions and reports.
//!
//! memh files hold one lowercase, zero-padded two's-complement word per line
//! in ascending address order with no comments. Control-point words are the
//! format width (four digits for Q2.13). Basis ROM words are
//! `3 * t_bits + 3` bits wide (33 bits, nine digits, for a ten-bit fraction),
//! laid out `u`-major with the four coefficients in neighbor order.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::analysis::{ErrorReport, Mode, TableReport};
use crate::datapath::{basis_shift, BasisFixed, BasisRom};
use crate::error::{Error, Result};
use crate::qformat::RoundingMode;
use crate::spline::{ControlPointTable, Method};

pub enum MemhSource<'a> {
    Table(&'a ControlPointTable),
    Rom(&'a BasisRom),
}

/// Bit width of one ROM word for the given fraction width.
pub fn rom_word_bits(t_bits: u32) -> u32 {
    basis_shift(t_bits) + 2
}

fn hex_digits(bits: u32) -> usize {
    bits.div_ceil(4) as usize
}

fn push_word(out: &mut String, value: i64, bits: u32) {
    let mask = if bits >= 64 {
        u64::MAX
    } else {
        (1u64 << bits) - 1
    };
    let _ = writeln!(
        out,
        "{:0width$x}",
        value as u64 & mask,
        width = hex_digits(bits)
    );
}

pub fn render_memh(source: &MemhSource<'_>) -> Result<String> {
    let mut out = String::new();
    match source {
        MemhSource::Table(table) => {
            let (raw, q) = match (table.raw(), table.quantization()) {
                (Some(raw), Some(q)) => (raw, q),
                _ => {
                    return Err(Error::config(
                        "only quantized tables can be written as memh",
                    ))
                }
            };
            for &r in raw {
                push_word(&mut out, r as i64, q.fmt.total_bits());
            }
        }
        MemhSource::Rom(rom) => {
            let bits = rom_word_bits(rom.t_bits());
            for row in rom.rows() {
                for n in row.0 {
                    push_word(&mut out, n, bits);
                }
            }
        }
    }
    Ok(out)
}

pub fn emit_memh(source: &MemhSource<'_>, path: &Path) -> Result<()> {
    write_file(path, render_memh(source)?.as_bytes())
}

/// Parses memh text, sign-extending each `word_bits`-wide word.
pub fn parse_memh(text: &str, word_bits: u32) -> std::result::Result<Vec<i64>, String> {
    let digits = hex_digits(word_bits);
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, line)| {
            let line = line.trim();
            if line.len() != digits {
                return Err(format!(
                    "line {}: expected {digits} hex digits, got `{line}`",
                    i + 1
                ));
            }
            let v = u64::from_str_radix(line, 16).map_err(|e| format!("line {}: {e}", i + 1))?;
            if word_bits < 64 && v >> word_bits != 0 {
                return Err(format!("line {}: `{line}` exceeds {word_bits} bits", i + 1));
            }
            let shift = 64 - word_bits;
            Ok(((v << shift) as i64) >> shift)
        })
        .collect()
}

pub fn read_memh(path: &Path, word_bits: u32) -> Result<Vec<i64>> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_memh(&text, word_bits).map_err(|message| Error::Parse {
        path: path.to_path_buf(),
        message,
    })
}

/// Reads a basis ROM back from a memh file.
pub fn read_rom_memh(path: &Path, t_bits: u32) -> Result<BasisRom> {
    let words = read_memh(path, rom_word_bits(t_bits))?;
    if words.len() % 4 != 0 {
        return Err(Error::Parse {
            path: path.to_path_buf(),
            message: format!("{} words is not a whole number of rows", words.len()),
        });
    }
    let rows = words
        .chunks_exact(4)
        .map(|c| BasisFixed([c[0], c[1], c[2], c[3]]))
        .collect();
    BasisRom::from_rows(t_bits, rows)
}

/// Describes a control-point memh file so consumers can skip extension entries.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TableSidecar {
    pub format: String,
    pub total_bits: u32,
    pub frac_bits: u32,
    pub rounding: RoundingMode,
    pub origin: f64,
    pub period: f64,
    pub range_max: f64,
    pub depth: usize,
    pub entries: usize,
    pub extension_entries: usize,
    pub negative_neighbor: String,
}

impl TableSidecar {
    pub fn for_table(table: &ControlPointTable) -> Result<Self> {
        let q = table
            .quantization()
            .ok_or_else(|| Error::config("sidecar describes quantized tables only"))?;
        Ok(TableSidecar {
            format: q.fmt.to_string(),
            total_bits: q.fmt.total_bits(),
            frac_bits: q.fmt.frac_bits(),
            rounding: q.rounding,
            origin: 0.0,
            period: table.period(),
            range_max: table.range_max(),
            depth: table.depth(),
            entries: table.len(),
            extension_entries: table.len() - table.depth(),
            negative_neighbor: "P[-1] = -P[1]".into(),
        })
    }
}

pub fn emit_sidecar(table: &ControlPointTable, path: &Path) -> Result<()> {
    let mut json =
        serde_json::to_string_pretty(&TableSidecar::for_table(table)?).expect("sidecar serializes");
    json.push('\n');
    write_file(path, json.as_bytes())
}

/// `index,x,value,raw` listing of a table; `raw` is empty for real tables.
pub fn render_table_csv(table: &ControlPointTable) -> String {
    let mut out = String::from("index,x,value,raw\n");
    for (i, v) in table.values().iter().enumerate() {
        let raw = table.raw().map_or(String::new(), |r| r[i].to_string());
        let _ = writeln!(out, "{i},{},{v},{raw}", i as f64 * table.period());
    }
    out
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ReportFormat {
    Csv,
    Json,
}

impl FromStr for ReportFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "csv" => Ok(ReportFormat::Csv),
            "json" => Ok(ReportFormat::Json),
            other => Err(Error::config(format!("unknown report format `{other}`"))),
        }
    }
}

pub enum Report<'a> {
    Error(&'a ErrorReport),
    Table(&'a TableReport),
}

/// One CSV line of a report. Gains are filled on Catmull-Rom rows of table reports.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReportRow {
    pub period: f64,
    pub depth: usize,
    pub method: Method,
    pub mode: Mode,
    pub rounding: RoundingMode,
    pub rms: f64,
    pub max_abs: f64,
    pub argmax_input: i32,
    pub n_points: u64,
    pub gain_rms: Option<f64>,
    pub gain_max: Option<f64>,
}

impl ReportRow {
    fn from_error(r: &ErrorReport, gains: Option<(f64, f64)>) -> Self {
        ReportRow {
            period: r.period,
            depth: r.depth,
            method: r.method,
            mode: r.mode,
            rounding: r.rounding,
            rms: r.rms,
            max_abs: r.max_abs,
            argmax_input: r.argmax_input,
            n_points: r.n_points,
            gain_rms: gains.map(|g| g.0),
            gain_max: gains.map(|g| g.1),
        }
    }

    pub fn to_error_report(&self) -> ErrorReport {
        ErrorReport {
            period: self.period,
            depth: self.depth,
            method: self.method,
            mode: self.mode,
            rounding: self.rounding,
            rms: self.rms,
            max_abs: self.max_abs,
            argmax_input: self.argmax_input,
            n_points: self.n_points,
        }
    }
}

pub fn report_rows(report: &Report<'_>) -> Vec<ReportRow> {
    match report {
        Report::Error(r) => vec![ReportRow::from_error(r, None)],
        Report::Table(t) => t
            .rows
            .iter()
            .flat_map(|row| {
                [
                    ReportRow::from_error(&row.pwl, None),
                    ReportRow::from_error(&row.cr, Some((row.gain_rms, row.gain_max))),
                ]
            })
            .collect(),
    }
}

pub fn render_report(report: &Report<'_>, format: ReportFormat) -> String {
    match format {
        ReportFormat::Csv => {
            let mut w = csv::Writer::from_writer(Vec::new());
            for row in report_rows(report) {
                w.serialize(row).expect("in-memory csv write");
            }
            String::from_utf8(w.into_inner().expect("in-memory csv flush")).expect("utf-8 csv")
        }
        ReportFormat::Json => {
            let mut s = match report {
                Report::Error(r) => serde_json::to_string_pretty(r),
                Report::Table(t) => serde_json::to_string_pretty(t),
            }
            .expect("reports serialize");
            s.push('\n');
            s
        }
    }
}

pub fn emit_report(report: &Report<'_>, format: ReportFormat, path: &Path) -> Result<()> {
    write_file(path, render_report(report, format).as_bytes())
}

pub fn parse_report_csv(text: &str) -> std::result::Result<Vec<ReportRow>, String> {
    csv::Reader::from_reader(text.as_bytes())
        .deserialize()
        .collect::<std::result::Result<Vec<ReportRow>, _>>()
        .map_err(|e| e.to_string())
}

pub fn parse_error_report_json(text: &str) -> std::result::Result<ErrorReport, String> {
    serde_json::from_str(text).map_err(|e| e.to_string())
}

/// Writes through a temporary sibling so a failed write leaves no partial file.
pub fn write_file(path: &Path, bytes: &[u8]) -> Result<()> {
    if path.as_os_str().is_empty() {
        return Err(Error::config("empty output path"));
    }
    let file_name = path
        .file_name()
        .ok_or_else(|| Error::config(format!("{} is not a file path", path.display())))?;
    let mut tmp_name = file_name.to_os_string();
    tmp_name.push(".partial");
    let tmp = path.with_file_name(tmp_name);
    fs::write(&tmp, bytes).map_err(|e| Error::io(&tmp, e))?;
    fs::rename(&tmp, path).map_err(|e| {
        let _ = fs::remove_file(&tmp);
        Error::io(path, e)
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::analysis::{reproduce_tables, sweep_error, SweepConfig};
    use crate::qformat::QFormat;

    fn table() -> ControlPointTable {
        ControlPointTable::quantized(0.125, 4.0, QFormat::Q2_13, RoundingMode::NearestEven).unwrap()
    }

    #[test]
    fn table_memh_layout() {
        let text = render_memh(&MemhSource::Table(&table())).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines.len(), 34);
        assert_eq!(lines[0], "0000");
        assert_eq!(lines[8], "185f");
        assert!(lines.iter().all(|l| l.len() == 4));
        assert!(render_memh(&MemhSource::Table(
            &ControlPointTable::real(0.125, 4.0).unwrap()
        ))
        .is_err());
    }

    #[test]
    fn rom_memh_layout() {
        let rom = BasisRom::build(10);
        let text = render_memh(&MemhSource::Rom(&rom)).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines.len(), 4096);
        assert!(lines.iter().all(|l| l.len() == 9));
        assert_eq!(lines[0], "000000000");
        assert_eq!(lines[1], "080000000");
        // u = 512: -2^27 in 33-bit two's complement.
        assert_eq!(lines[2048], "1f8000000");
    }

    #[test]
    fn memh_reader_round_trips() {
        let t = table();
        let words = parse_memh(&render_memh(&MemhSource::Table(&t)).unwrap(), 16).unwrap();
        assert_eq!(
            words,
            t.raw()
                .unwrap()
                .iter()
                .map(|&r| r as i64)
                .collect::<Vec<_>>()
        );

        let rom = BasisRom::build(10);
        let words = parse_memh(&render_memh(&MemhSource::Rom(&rom)).unwrap(), 33).unwrap();
        let flat: Vec<i64> = rom.rows().iter().flat_map(|r| r.0).collect();
        assert_eq!(words, flat);

        assert!(parse_memh("12345\n", 16).is_err());
        assert!(parse_memh("zzzz\n", 16).is_err());
        assert!(parse_memh("3ffffffff\n", 33).is_err());
        assert_eq!(parse_memh("ffff\n8000\n", 16).unwrap(), vec![-1, -32768]);
    }

    #[test]
    fn table_csv_lists_every_entry() {
        let csv = render_table_csv(&table());
        assert_eq!(csv.lines().count(), 35);
        assert!(csv.lines().nth(9).unwrap().ends_with(",6239"));
    }

    #[test]
    fn sidecar_describes_extension() {
        let s = TableSidecar::for_table(&table()).unwrap();
        assert_eq!((s.depth, s.entries, s.extension_entries), (32, 34, 2));
        assert_eq!(s.format, "Q2.13");
    }

    #[test]
    fn error_report_round_trips() {
        let r = sweep_error(&SweepConfig::default()).unwrap();
        let csv = render_report(&Report::Error(&r), ReportFormat::Csv);
        assert!(csv.starts_with(
            "period,depth,method,mode,rounding,rms,max_abs,argmax_input,n_points,gain_rms,gain_max\n"
        ));
        let rows = parse_report_csv(&csv).unwrap();
        assert_eq!(rows.len(), 1);
        assert_eq!(rows[0].to_error_report(), r);
        assert_eq!(rows[0].gain_rms, None);

        let json = render_report(&Report::Error(&r), ReportFormat::Json);
        assert_eq!(parse_error_report_json(&json).unwrap(), r);
    }

    #[test]
    fn table_report_rows_carry_gains() {
        let t = reproduce_tables(Mode::Real, QFormat::Q2_13, RoundingMode::NearestEven).unwrap();
        let rows = parse_report_csv(&render_report(&Report::Table(&t), ReportFormat::Csv)).unwrap();
        assert_eq!(rows.len(), 8);
        for pair in rows.chunks(2) {
            let (pwl, cr) = (&pair[0], &pair[1]);
            assert_eq!(pwl.method, Method::Pwl);
            assert_eq!(cr.gain_rms, Some(pwl.rms / cr.rms));
            assert_eq!(cr.gain_max, Some(pwl.max_abs / cr.max_abs));
        }
        let back: TableReport =
            serde_json::from_str(&render_report(&Report::Table(&t), ReportFormat::Json)).unwrap();
        assert_eq!(back, t);
    }

    #[test]
    fn measured_numbers_keep_nine_digits() {
        let r = sweep_error(&SweepConfig::default()).unwrap();
        let csv = render_report(&Report::Error(&r), ReportFormat::Csv);
        let rms_field = csv.lines().nth(1).unwrap().split(',').nth(5).unwrap();
        let digits = rms_field
            .trim_start_matches(['0', '.'])
            .chars()
            .take_while(|c| c.is_ascii_digit())
            .count();
        assert!(digits >= 9, "{rms_field}");
    }

    #[test]
    fn empty_path_is_rejected() {
        let err = write_file(Path::new(""), b"x").unwrap_err();
        assert!(matches!(err, Error::Config(_)));
    }

    #[test]
    fn write_failure_names_the_path() {
        let dir = tempfile::tempdir().unwrap();
        let target = dir.path().join("missing").join("out.memh");
        let err = emit_memh(&MemhSource::Table(&table()), &target).unwrap_err();
        assert!(err.to_string().contains("missing"));
        assert!(!target.exists());
    }
}
