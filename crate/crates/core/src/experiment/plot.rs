//! Static SVG rendering of runner output.

use std::fmt::Write as _;
use std::str::FromStr;

use super::report::CsvTable;
use crate::error::{Result, SimError};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PlotKind {
    Line,
    Heatmap,
}

impl FromStr for PlotKind {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "line" => Ok(PlotKind::Line),
            "heatmap" => Ok(PlotKind::Heatmap),
            other => Err(format!("unknown plot kind `{other}` (expected line or heatmap)")),
        }
    }
}

const WIDTH: f64 = 800.0;
const HEIGHT: f64 = 520.0;
const LEFT: f64 = 80.0;
const RIGHT: f64 = 170.0;
const TOP: f64 = 30.0;
const BOTTOM: f64 = 60.0;
const PALETTE: [&str; 8] = [
    "#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b", "#e377c2", "#17becf",
];

fn axis_label(column: &str) -> &str {
    match column {
        "t_over_tau" => "t/τ",
        "theta" => "θ",
        "phi" => "φ",
        "eta_ratio" => "η₁/η₃",
        other => other,
    }
}

fn nice_step(span: f64, target: usize) -> f64 {
    let raw = span / target as f64;
    let mag = 10f64.powf(raw.log10().floor());
    let frac = raw / mag;
    let nice = if frac <= 1.0 {
        1.0
    } else if frac <= 2.0 {
        2.0
    } else if frac <= 5.0 {
        5.0
    } else {
        10.0
    };
    nice * mag
}

fn ticks(lo: f64, hi: f64) -> Vec<f64> {
    let step = nice_step(hi - lo, 5);
    let first = (lo / step).ceil() as i64;
    let last = (hi / step + 1e-9).floor() as i64;
    (first..=last).map(|k| k as f64 * step).collect()
}

fn tick_text(v: f64) -> String {
    let s = format!("{v:.4}");
    let s = s.trim_end_matches('0').trim_end_matches('.');
    if s == "-0" { "0".into() } else { s.into() }
}

fn padded_range(values: impl Iterator<Item = f64>) -> (f64, f64) {
    let (lo, hi) = values.fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), v| (a.min(v), b.max(v)));
    if hi > lo {
        (lo, hi)
    } else {
        (lo - 0.5, hi + 0.5)
    }
}

struct Frame {
    x: (f64, f64),
    y: (f64, f64),
}

impl Frame {
    fn px(&self, x: f64) -> f64 {
        LEFT + (x - self.x.0) / (self.x.1 - self.x.0) * (WIDTH - LEFT - RIGHT)
    }

    fn py(&self, y: f64) -> f64 {
        HEIGHT - BOTTOM - (y - self.y.0) / (self.y.1 - self.y.0) * (HEIGHT - TOP - BOTTOM)
    }

    fn axes(&self, svg: &mut String, x_label: &str, y_label: &str) {
        let (x0, x1) = (LEFT, WIDTH - RIGHT);
        let (y0, y1) = (HEIGHT - BOTTOM, TOP);
        let _ = writeln!(
            svg,
            r#"<rect x="{x0:.2}" y="{y1:.2}" width="{:.2}" height="{:.2}" fill="none" stroke="black"/>"#,
            x1 - x0,
            y0 - y1
        );
        for t in ticks(self.x.0, self.x.1) {
            let x = self.px(t);
            let _ = writeln!(svg, r#"<line x1="{x:.2}" y1="{y0:.2}" x2="{x:.2}" y2="{:.2}" stroke="black"/>"#, y0 + 5.0);
            let _ = writeln!(
                svg,
                r#"<text x="{x:.2}" y="{:.2}" text-anchor="middle" font-size="12">{}</text>"#,
                y0 + 20.0,
                tick_text(t)
            );
        }
        for t in ticks(self.y.0, self.y.1) {
            let y = self.py(t);
            let _ = writeln!(svg, r#"<line x1="{:.2}" y1="{y:.2}" x2="{x0:.2}" y2="{y:.2}" stroke="black"/>"#, x0 - 5.0);
            let _ = writeln!(
                svg,
                r#"<text x="{:.2}" y="{:.2}" text-anchor="end" font-size="12">{}</text>"#,
                x0 - 8.0,
                y + 4.0,
                tick_text(t)
            );
        }
        let _ = writeln!(
            svg,
            r#"<text x="{:.2}" y="{:.2}" text-anchor="middle" font-size="15">{}</text>"#,
            (x0 + x1) / 2.0,
            HEIGHT - 15.0,
            escape(x_label)
        );
        let _ = writeln!(
            svg,
            r#"<text x="20" y="{:.2}" text-anchor="middle" font-size="15" transform="rotate(-90 20 {:.2})">{}</text>"#,
            (y0 + y1) / 2.0,
            (y0 + y1) / 2.0,
            escape(y_label)
        );
    }
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

fn header() -> String {
    format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{WIDTH}\" height=\"{HEIGHT}\" viewBox=\"0 0 {WIDTH} {HEIGHT}\">\n\
         <rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n"
    )
}

/// First column against every other numeric column.
pub fn line_svg(table: &CsvTable) -> Result<String> {
    if table.rows.is_empty() {
        return Err(SimError::Format("CSV has no data rows".into()));
    }
    if table.columns.len() < 2 {
        return Err(SimError::Format("line plot needs at least two columns".into()));
    }
    let x = table.numeric_column(0)?;
    let series: Vec<(String, Vec<f64>)> = (1..table.columns.len())
        .filter_map(|j| table.numeric_column(j).ok().map(|v| (table.columns[j].clone(), v)))
        .collect();
    if series.is_empty() {
        return Err(SimError::Format("no numeric series to plot".into()));
    }
    let frame = Frame {
        x: padded_range(x.iter().copied()),
        y: padded_range(series.iter().flat_map(|(_, v)| v.iter().copied())),
    };
    let y_label = if series.iter().all(|(n, _)| n.starts_with("dFdt")) {
        "dF/dt"
    } else if series.iter().all(|(n, _)| n.starts_with("min_F")) {
        "min F"
    } else {
        "F"
    };
    let mut svg = header();
    frame.axes(&mut svg, axis_label(&table.columns[0]), y_label);
    for (k, (name, values)) in series.iter().enumerate() {
        let color = PALETTE[k % PALETTE.len()];
        let points: Vec<String> = x
            .iter()
            .zip(values)
            .map(|(a, b)| format!("{:.2},{:.2}", frame.px(*a), frame.py(*b)))
            .collect();
        let _ = writeln!(
            svg,
            r#"<polyline fill="none" stroke="{color}" stroke-width="1.5" points="{}"/>"#,
            points.join(" ")
        );
        let ly = TOP + 20.0 + 20.0 * k as f64;
        let lx = WIDTH - RIGHT + 15.0;
        let _ = writeln!(svg, r#"<line x1="{lx:.2}" y1="{ly:.2}" x2="{:.2}" y2="{ly:.2}" stroke="{color}" stroke-width="2"/>"#, lx + 25.0);
        let _ = writeln!(svg, r#"<text x="{:.2}" y="{:.2}" font-size="12">{}</text>"#, lx + 32.0, ly + 4.0, escape(name));
    }
    svg.push_str("</svg>\n");
    Ok(svg)
}

const STOPS: [(f64, [f64; 3]); 5] = [
    (0.0, [68.0, 1.0, 84.0]),
    (0.25, [59.0, 82.0, 139.0]),
    (0.5, [33.0, 145.0, 140.0]),
    (0.75, [94.0, 201.0, 98.0]),
    (1.0, [253.0, 231.0, 37.0]),
];

fn color(u: f64) -> String {
    let u = u.clamp(0.0, 1.0);
    let k = STOPS.iter().position(|s| s.0 >= u).unwrap_or(STOPS.len() - 1).max(1);
    let (a, b) = (STOPS[k - 1], STOPS[k]);
    let w = (u - a.0) / (b.0 - a.0);
    let c: Vec<u8> = (0..3).map(|i| (a.1[i] + w * (b.1[i] - a.1[i])).round() as u8).collect();
    format!("#{:02x}{:02x}{:02x}", c[0], c[1], c[2])
}

fn distinct_sorted(v: &[f64]) -> Vec<f64> {
    let mut out = v.to_vec();
    out.sort_by(f64::total_cmp);
    out.dedup();
    out
}

/// `fidelity` over `(phi, theta)` from a long-format sweep table.
pub fn heatmap_svg(table: &CsvTable) -> Result<String> {
    if table.rows.is_empty() {
        return Err(SimError::Format("CSV has no data rows".into()));
    }
    let col = |name: &str| {
        table
            .column_index(name)
            .ok_or_else(|| SimError::Format(format!("heatmap needs a `{name}` column")))
    };
    let theta = table.numeric_column(col("theta")?)?;
    let phi = table.numeric_column(col("phi")?)?;
    let value = table.numeric_column(col("fidelity")?)?;
    let thetas = distinct_sorted(&theta);
    let phis = distinct_sorted(&phi);
    let step = |v: &[f64]| if v.len() > 1 { v[1] - v[0] } else { 1.0 };
    let (dt, dp) = (step(&thetas), step(&phis));
    let frame = Frame {
        x: (phis[0] - dp / 2.0, phis[phis.len() - 1] + dp / 2.0),
        y: (thetas[0] - dt / 2.0, thetas[thetas.len() - 1] + dt / 2.0),
    };
    let (lo, hi) = padded_range(value.iter().copied());
    let mut svg = header();
    for ((th, ph), v) in theta.iter().zip(&phi).zip(&value) {
        let x0 = frame.px(ph - dp / 2.0);
        let x1 = frame.px(ph + dp / 2.0);
        let y0 = frame.py(th + dt / 2.0);
        let y1 = frame.py(th - dt / 2.0);
        let _ = writeln!(
            svg,
            r#"<rect x="{x0:.2}" y="{y0:.2}" width="{:.2}" height="{:.2}" fill="{}"/>"#,
            x1 - x0,
            y1 - y0,
            color((v - lo) / (hi - lo))
        );
    }
    frame.axes(&mut svg, "φ", "θ");
    let bar_x = WIDTH - RIGHT + 30.0;
    let bar_h = HEIGHT - TOP - BOTTOM;
    let bands = 64;
    for k in 0..bands {
        let u = k as f64 / (bands - 1) as f64;
        let y = TOP + bar_h * (1.0 - (k + 1) as f64 / bands as f64);
        let _ = writeln!(
            svg,
            r#"<rect x="{bar_x:.2}" y="{y:.2}" width="20" height="{:.2}" fill="{}"/>"#,
            bar_h / bands as f64 + 0.5,
            color(u)
        );
    }
    for (v, y) in [(hi, TOP + 4.0), (lo, TOP + bar_h)] {
        let _ = writeln!(
            svg,
            r#"<text x="{:.2}" y="{y:.2}" font-size="12">{}</text>"#,
            bar_x + 26.0,
            tick_text_precise(v)
        );
    }
    let _ = writeln!(
        svg,
        r#"<text x="{:.2}" y="{:.2}" font-size="13">F</text>"#,
        bar_x + 4.0,
        TOP + bar_h + 22.0
    );
    svg.push_str("</svg>\n");
    Ok(svg)
}

fn tick_text_precise(v: f64) -> String {
    format!("{v:.4}")
}

pub fn render(table: &CsvTable, kind: PlotKind) -> Result<String> {
    match kind {
        PlotKind::Line => line_svg(table),
        PlotKind::Heatmap => heatmap_svg(table),
    }
}

/// Reads a runner CSV and writes an SVG next to `out`.
pub fn emit_plot(csv: impl AsRef<std::path::Path>, kind: PlotKind, out: impl AsRef<std::path::Path>) -> Result<()> {
    let table = CsvTable::load(csv)?;
    std::fs::write(out, render(&table, kind)?)?;
    Ok(())
}
