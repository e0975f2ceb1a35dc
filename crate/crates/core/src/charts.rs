//! Grouped bar charts (log-scale y) of one metric at one supply, as SVG
//! plus the CSV behind it.

use std::fmt::Write as _;
use std::io;
use std::path::{Path, PathBuf};

use crate::report::{sci, PaperRow, Report, ReportRow, PAPER_LABEL};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Metric {
    Power,
    Delay,
    Pdp,
}

impl Metric {
    pub const ALL: [Metric; 3] = [Metric::Power, Metric::Delay, Metric::Pdp];

    pub fn name(self) -> &'static str {
        match self {
            Metric::Power => "power",
            Metric::Delay => "delay",
            Metric::Pdp => "pdp",
        }
    }

    pub fn title(self) -> &'static str {
        match self {
            Metric::Power => "Average power (W)",
            Metric::Delay => "Propagation delay (s)",
            Metric::Pdp => "Power-delay product (J)",
        }
    }

    fn measured(self, r: &ReportRow) -> Option<f64> {
        let f = r.measured?;
        Some(match self {
            Metric::Power => f.power_w,
            Metric::Delay => f.delay_s,
            Metric::Pdp => f.pdp_j,
        })
    }

    fn paper(self, p: &PaperRow) -> Option<f64> {
        let s = match self {
            Metric::Power => p.power,
            Metric::Delay => p.delay,
            Metric::Pdp => p.pdp,
        };
        s.parse().ok()
    }
}

/// One group of bars: a design with its measured and published values.
#[derive(Debug, Clone, PartialEq)]
pub struct Group {
    pub design: String,
    pub measured: Option<f64>,
    pub paper: Option<f64>,
}

pub fn groups(report: &Report, metric: Metric, vdd: f64) -> Vec<Group> {
    report
        .rows
        .iter()
        .filter(|r| r.vdd == vdd)
        .map(|r| Group {
            design: r.design.clone(),
            measured: metric.measured(r),
            paper: r.paper.as_ref().and_then(|p| metric.paper(p)),
        })
        .collect()
}

/// `<metric>_<vdd>` as used in file names.
pub fn stem(metric: Metric, vdd: f64) -> String {
    format!("{}_{vdd}", metric.name())
}

pub fn chart_csv(groups: &[Group]) -> String {
    let mut s = String::from("design,measured,paper\n");
    for g in groups {
        let cell = |v: Option<f64>| v.map(sci).unwrap_or_default();
        let _ = writeln!(s, "{},{},{}", g.design, cell(g.measured), cell(g.paper));
    }
    s
}

const WIDTH: f64 = 720.0;
const HEIGHT: f64 = 400.0;
const LEFT: f64 = 80.0;
const RIGHT: f64 = 20.0;
const TOP: f64 = 40.0;
const BOTTOM: f64 = 80.0;
const MEASURED_FILL: &str = "#3b6ea5";
const PAPER_FILL: &str = "#c9822b";

pub fn chart_svg(title: &str, groups: &[Group]) -> String {
    let values: Vec<f64> = groups
        .iter()
        .flat_map(|g| [g.measured, g.paper])
        .flatten()
        .filter(|v| *v > 0.0)
        .collect();
    let (lo, hi) = if values.is_empty() {
        (-12, -11)
    } else {
        let min = values.iter().cloned().fold(f64::INFINITY, f64::min);
        let max = values.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let lo = min.log10().floor() as i32;
        let hi = (max.log10().ceil() as i32).max(lo + 1);
        (lo, hi)
    };
    let plot_h = HEIGHT - TOP - BOTTOM;
    let plot_w = WIDTH - LEFT - RIGHT;
    let y = |v: f64| TOP + plot_h * (1.0 - (v.log10() - lo as f64) / (hi - lo) as f64);

    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="11">"#
    );
    let _ = writeln!(s, r#"<rect width="{WIDTH}" height="{HEIGHT}" fill="white"/>"#);
    let _ = writeln!(s, r#"<text x="{}" y="20" text-anchor="middle" font-size="14">{}</text>"#, WIDTH / 2.0, escape(title));
    for e in lo..=hi {
        let ty = y(10f64.powi(e));
        let _ = writeln!(s, r##"<line x1="{LEFT}" y1="{ty:.1}" x2="{:.1}" y2="{ty:.1}" stroke="#ddd"/>"##, WIDTH - RIGHT);
        let _ = writeln!(s, r#"<text x="{:.1}" y="{:.1}" text-anchor="end">1E{e}</text>"#, LEFT - 6.0, ty + 4.0);
    }
    let _ = writeln!(s, r#"<line x1="{LEFT}" y1="{TOP}" x2="{LEFT}" y2="{:.1}" stroke="black"/>"#, TOP + plot_h);
    let _ = writeln!(s, r#"<line x1="{LEFT}" y1="{:.1}" x2="{:.1}" y2="{:.1}" stroke="black"/>"#, TOP + plot_h, WIDTH - RIGHT, TOP + plot_h);

    let slot = plot_w / groups.len().max(1) as f64;
    let bar = slot * 0.35;
    let base = TOP + plot_h;
    for (i, g) in groups.iter().enumerate() {
        let x0 = LEFT + slot * i as f64 + slot * 0.15;
        for (j, (v, fill)) in [(g.measured, MEASURED_FILL), (g.paper, PAPER_FILL)].into_iter().enumerate() {
            let Some(v) = v.filter(|v| *v > 0.0) else { continue };
            let top = y(v).min(base);
            let x = x0 + bar * j as f64;
            let _ = writeln!(
                s,
                r#"<rect x="{x:.1}" y="{top:.1}" width="{bar:.1}" height="{:.1}" fill="{fill}"><title>{} {}</title></rect>"#,
                base - top,
                escape(&g.design),
                sci(v)
            );
        }
        let _ = writeln!(
            s,
            r#"<text x="{:.1}" y="{:.1}" text-anchor="middle">{}</text>"#,
            x0 + bar,
            base + 16.0,
            escape(&g.design)
        );
    }
    let ly = HEIGHT - 24.0;
    let _ = writeln!(s, r#"<rect x="{LEFT}" y="{:.1}" width="12" height="12" fill="{MEASURED_FILL}"/>"#, ly - 10.0);
    let _ = writeln!(s, r#"<text x="{:.1}" y="{ly:.1}">measured</text>"#, LEFT + 16.0);
    let _ = writeln!(s, r#"<rect x="{:.1}" y="{:.1}" width="12" height="12" fill="{PAPER_FILL}"/>"#, LEFT + 110.0, ly - 10.0);
    let _ = writeln!(s, r#"<text x="{:.1}" y="{ly:.1}">{}</text>"#, LEFT + 126.0, escape(PAPER_LABEL));
    s.push_str("</svg>\n");
    s
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

/// Writes `<metric>_<vdd>.svg` and `.csv` for every metric and supply.
pub fn write_charts(report: &Report, dir: &Path) -> io::Result<Vec<PathBuf>> {
    std::fs::create_dir_all(dir)?;
    let mut written = Vec::new();
    for &vdd in &report.supplies {
        for metric in Metric::ALL {
            let g = groups(report, metric, vdd);
            let stem = stem(metric, vdd);
            let title = format!("{} at {vdd} V", metric.title());
            for (ext, body) in [("svg", chart_svg(&title, &g)), ("csv", chart_csv(&g))] {
                let path = dir.join(format!("{stem}.{ext}"));
                std::fs::write(&path, body)?;
                written.push(path);
            }
        }
    }
    Ok(written)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> Vec<Group> {
        vec![
            Group {
                design: "C-CMOS".into(),
                measured: Some(4.3e-6),
                paper: Some(6.26e-7),
            },
            Group {
                design: "Proposed Adder".into(),
                measured: None,
                paper: Some(8.4e-7),
            },
        ]
    }

    #[test]
    fn csv_leaves_failed_cells_empty() {
        assert_eq!(
            chart_csv(&sample()),
            "design,measured,paper\nC-CMOS,4.300E-06,6.260E-07\nProposed Adder,,8.400E-07\n"
        );
    }

    #[test]
    fn svg_has_one_bar_per_value() {
        let svg = chart_svg("t", &sample());
        assert!(svg.starts_with("<svg"));
        assert_eq!(svg.matches("<title>").count(), 3);
        assert!(svg.contains("1E-7") && svg.contains("1E-5"));
    }

    #[test]
    fn file_stem() {
        assert_eq!(stem(Metric::Pdp, 0.65), "pdp_0.65");
        assert_eq!(stem(Metric::Delay, 0.9), "delay_0.9");
    }
}
