//! Benchmark tables in Markdown, CSV and JSON.
//!
//! Every format echoes the configuration, lists the simulated designs in
//! table order and carries the published reference figures alongside.

use std::fmt::Write as _;
use std::str::FromStr;

use serde::Serialize;

use crate::adders::AdderKind;
use crate::bench::{BenchConfig, BenchError, CellResult};
use crate::oracle::Mismatch;

/// Label attached to every published reference value.
pub const PAPER_LABEL: &str = "paper (HSPICE, ref model)";

/// One published row, values kept as printed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct PaperRow {
    pub design: &'static str,
    pub power: &'static str,
    pub delay: &'static str,
    pub pdp: &'static str,
}

const fn row(design: &'static str, power: &'static str, delay: &'static str, pdp: &'static str) -> PaperRow {
    PaperRow {
        design,
        power,
        delay,
        pdp,
    }
}

const PAPER_09: [PaperRow; 9] = [
    row("C-CMOS", "6.26E-07", "5.27E-11", "3.30E-17"),
    row("CPL", "4.87E-07", "1.57E-10", "7.63E-17"),
    row("TFA", "6.32E-07", "2.89E-10", "1.83E-16"),
    row("TGA", "6.68E-07", "3.46E-10", "2.31E-16"),
    row("Hybrid", "4.96E-07", "2.93E-10", "1.45E-16"),
    row("CNT-FA1", "1.05E-06", "7.83E-11", "8.20E-17"),
    row("CNT-FA2", "3.32E-07", "1.14E-10", "3.80E-17"),
    row("CNT-FA3", "7.83E-07", "5.36E-11", "4.20E-17"),
    row("Proposed Adder", "8.40E-07", "1.25E-11", "6.17E-18"),
];

const PAPER_065: [PaperRow; 9] = [
    row("C-CMOS", "2.94E-07", "1.46E-10", "4.28E-17"),
    row("CPL", "2.08E-07", "4.65E-10", "9.67E-17"),
    row("TFA", "1.52E-07", "8.45E-10", "1.29E-16"),
    row("TGA", "1.21E-07", "4.76E-10", "5.77E-17"),
    row("Hybrid", "1.71E-07", "1.10E-09", "1.88E-16"),
    row("CNT-FA1", "5.23E-07", "7.97E-11", "4.17E-17"),
    row("CNT-FA2", "4.71E-07", "8.82E-11", "4.15E-17"),
    row("CNT-FA3", "7.12E-07", "7.51E-11", "5.35E-17"),
    row("Proposed Adder", "4.80E-07", "1.29E-11", "1.05E-17"),
];

/// Published rows for a supply, if that supply was published.
pub fn paper_reference(vdd: f64) -> Option<&'static [PaperRow]> {
    if (vdd - 0.9).abs() < 1e-9 {
        Some(&PAPER_09)
    } else if (vdd - 0.65).abs() < 1e-9 {
        Some(&PAPER_065)
    } else {
        None
    }
}

/// Published row for one design at one supply.
pub fn paper_row(design: &str, vdd: f64) -> Option<PaperRow> {
    paper_reference(vdd)?.iter().find(|r| r.design == design).copied()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Format {
    Markdown,
    Csv,
    Json,
}

impl FromStr for Format {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "md" | "markdown" => Ok(Format::Markdown),
            "csv" => Ok(Format::Csv),
            "json" => Ok(Format::Json),
            _ => Err(format!("unknown format `{s}` (expected md, csv or json)")),
        }
    }
}

/// Measured figures for one row.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Figures {
    pub power_w: f64,
    pub delay_s: f64,
    pub pdp_j: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ReportRow {
    pub design: String,
    pub id: String,
    pub vdd: f64,
    /// `None` when the cell failed.
    pub measured: Option<Figures>,
    pub error: Option<String>,
    /// Logic mismatches behind a failed row.
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub mismatches: Vec<Mismatch>,
    pub paper: Option<PaperRow>,
}

impl ReportRow {
    pub fn from_outcome(kind: AdderKind, vdd: f64, outcome: &Result<CellResult, BenchError>) -> Self {
        let (measured, error, mismatches) = match outcome {
            Ok(cell) => {
                let m = &cell.measurement;
                let f = Figures {
                    power_w: m.avg_power,
                    delay_s: m.worst_delay,
                    pdp_j: m.avg_power * m.worst_delay,
                };
                (Some(f), None, Vec::new())
            }
            Err(e) => {
                let mismatches = match e {
                    BenchError::Logic(r) => r.mismatches.clone(),
                    _ => Vec::new(),
                };
                (None, Some(e.to_string()), mismatches)
            }
        };
        Self {
            design: kind.label().to_string(),
            id: kind.id().to_string(),
            vdd,
            measured,
            error,
            mismatches,
            paper: paper_row(kind.label(), vdd),
        }
    }
}

/// All rows of one benchmark run plus the configuration that produced them.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Report {
    pub config: String,
    pub supplies: Vec<f64>,
    pub rows: Vec<ReportRow>,
    pub paper_label: &'static str,
    /// Published designs with no simulated counterpart, per supply.
    pub paper_only: Vec<(f64, Vec<PaperRow>)>,
}

impl Report {
    /// Rows in the order given by `outcomes` (see `run_matrix`).
    pub fn new(cfg: &BenchConfig, supplies: &[f64], outcomes: &[(AdderKind, f64, Result<CellResult, BenchError>)]) -> Self {
        let rows: Vec<ReportRow> = outcomes
            .iter()
            .map(|(k, v, r)| ReportRow::from_outcome(*k, *v, r))
            .collect();
        let paper_only = supplies
            .iter()
            .map(|&v| {
                let extra = paper_reference(v)
                    .unwrap_or(&[])
                    .iter()
                    .filter(|p| !AdderKind::ALL.iter().any(|k| k.label() == p.design))
                    .copied()
                    .collect();
                (v, extra)
            })
            .collect();
        Self {
            config: cfg.to_toml(),
            supplies: supplies.to_vec(),
            rows,
            paper_label: PAPER_LABEL,
            paper_only,
        }
    }

    pub fn failures(&self) -> impl Iterator<Item = &ReportRow> {
        self.rows.iter().filter(|r| r.measured.is_none())
    }

    pub fn render(&self, format: Format) -> String {
        match format {
            Format::Markdown => self.markdown(),
            Format::Csv => self.csv(),
            Format::Json => serde_json::to_string_pretty(self).expect("report serializes") + "\n",
        }
    }

    fn rows_at(&self, vdd: f64) -> impl Iterator<Item = &ReportRow> {
        self.rows.iter().filter(move |r| r.vdd == vdd)
    }

    fn markdown(&self) -> String {
        let mut s = String::new();
        s.push_str("# Full adder benchmark\n\nConfiguration:\n\n```toml\n");
        s.push_str(&self.config);
        if !self.config.ends_with('\n') {
            s.push('\n');
        }
        s.push_str("```\n");
        for &vdd in &self.supplies {
            let _ = writeln!(s, "\n## VDD = {vdd} V\n");
            s.push_str("| Design | Power (W) | Delay (s) | PDP (J) |\n|---|---|---|---|\n");
            let mut notes = Vec::new();
            for r in self.rows_at(vdd) {
                match &r.measured {
                    Some(f) => {
                        let _ = writeln!(s, "| {} | {} | {} | {} |", r.design, sci(f.power_w), sci(f.delay_s), sci(f.pdp_j));
                    }
                    None => {
                        let _ = writeln!(s, "| {} | failed | failed | failed |", r.design);
                        notes.push(format!("{}: {}", r.design, r.error.as_deref().unwrap_or("")));
                        for m in &r.mismatches {
                            notes.push(format!("  {}{}{} {}: expected {}, got {}", bit(m.inputs[0]), bit(m.inputs[1]), bit(m.inputs[2]), m.output, bit(m.expected), bit(m.actual)));
                        }
                    }
                }
            }
            if !notes.is_empty() {
                s.push_str("\nFailures:\n\n```\n");
                for n in notes {
                    s.push_str(&n);
                    s.push('\n');
                }
                s.push_str("```\n");
            }
            if let Some(paper) = paper_reference(vdd) {
                let _ = writeln!(s, "\nReference values, {PAPER_LABEL}:\n");
                s.push_str("| Design | Power (W) | Delay (s) | PDP (J) |\n|---|---|---|---|\n");
                for p in paper {
                    let _ = writeln!(s, "| {} | {} | {} | {} |", p.design, p.power, p.delay, p.pdp);
                }
                let extra: Vec<&str> = paper
                    .iter()
                    .filter(|p| !self.rows_at(vdd).any(|r| r.design == p.design))
                    .map(|p| p.design)
                    .collect();
                if !extra.is_empty() {
                    let _ = writeln!(s, "\nNot simulated here: {}.", extra.join(", "));
                }
            }
        }
        s
    }

    fn csv(&self) -> String {
        let mut s = String::new();
        for line in self.config.lines() {
            let _ = writeln!(s, "# {line}");
        }
        let _ = writeln!(s, "# paper columns: {PAPER_LABEL}");
        s.push_str("design,vdd_v,status,power_w,delay_s,pdp_j,paper_power_w,paper_delay_s,paper_pdp_j\n");
        for &vdd in &self.supplies {
            for r in self.rows_at(vdd) {
                let (status, p, d, e) = match &r.measured {
                    Some(f) => ("ok", sci(f.power_w), sci(f.delay_s), sci(f.pdp_j)),
                    None => ("failed", String::new(), String::new(), String::new()),
                };
                let _ = writeln!(s, "{},{vdd},{status},{p},{d},{e},{}", r.design, paper_cells(r.paper));
            }
            for (_, extra) in self.paper_only.iter().filter(|(v, _)| *v == vdd) {
                for p in extra {
                    let _ = writeln!(s, "{},{vdd},not_simulated,,,,{}", p.design, paper_cells(Some(*p)));
                }
            }
        }
        s
    }
}

fn paper_cells(p: Option<PaperRow>) -> String {
    match p {
        Some(p) => format!("{},{},{}", p.power, p.delay, p.pdp),
        None => ",,".to_string(),
    }
}

fn bit(b: bool) -> char {
    if b {
        '1'
    } else {
        '0'
    }
}

/// Four significant digits in the `1.234E-05` style of the published tables.
pub fn sci(x: f64) -> String {
    if x == 0.0 || !x.is_finite() {
        return format!("{x:.3E}");
    }
    let s = format!("{x:.3E}");
    let (mantissa, exp) = s.split_once('E').expect("exponent");
    let exp: i32 = exp.parse().expect("integer exponent");
    let sign = if exp < 0 { '-' } else { '+' };
    format!("{mantissa}E{sign}{:02}", exp.abs())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn scientific_format() {
        assert_eq!(sci(6.26e-7), "6.260E-07");
        assert_eq!(sci(1.25e-11), "1.250E-11");
        assert_eq!(sci(12345.0), "1.234E+04");
    }

    #[test]
    fn reference_rows() {
        let c = paper_row("C-CMOS", 0.9).unwrap();
        assert_eq!((c.power, c.delay, c.pdp), ("6.26E-07", "5.27E-11", "3.30E-17"));
        assert_eq!(paper_row("Proposed Adder", 0.9).unwrap().delay, "1.25E-11");
        assert_eq!(paper_row("CNT-FA2", 0.65).unwrap().power, "4.71E-07");
        assert!(paper_row("C-CMOS", 1.2).is_none());
        for vdd in [0.9, 0.65] {
            for k in AdderKind::ALL {
                assert!(paper_row(k.label(), vdd).is_some(), "{k:?}");
            }
        }
    }

    #[test]
    fn formats_parse() {
        assert_eq!("md".parse::<Format>().unwrap(), Format::Markdown);
        assert_eq!("json".parse::<Format>().unwrap(), Format::Json);
        assert!("xml".parse::<Format>().is_err());
    }
}
