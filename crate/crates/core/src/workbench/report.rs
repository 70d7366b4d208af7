//! Energy-vs-step CSV and an SVG convergence plot from a run directory.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use crate::error::{Error, Result};

use super::io;

/// One row of `trace.csv`, reduced to what the report needs.
#[derive(Clone, Debug, PartialEq)]
pub struct TraceRow {
    pub step: usize,
    pub value: f64,
    pub delta_e: Option<f64>,
    pub stddev: f64,
    pub discard_fraction: f64,
}

pub fn read_trace(path: &Path) -> Result<Vec<TraceRow>> {
    let src = path.display().to_string();
    let mut rdr = csv::Reader::from_path(path)
        .map_err(|e| Error::parse(&src, e))?;
    let headers = rdr.headers().map_err(|e| Error::parse(&src, e))?.clone();
    let col = |name: &str| {
        headers
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| Error::validation(&src, format!("missing column {name}")))
    };
    let (c_step, c_value, c_delta, c_std, c_disc) = (
        col("step")?,
        col("value")?,
        col("delta_e")?,
        col("stddev")?,
        col("discard_fraction")?,
    );
    let mut rows = Vec::new();
    for (i, rec) in rdr.records().enumerate() {
        let loc = format!("{src}: row {}", i + 1);
        let rec = rec.map_err(|e| Error::parse(&loc, e))?;
        let num = |c: usize| -> Result<f64> {
            rec.get(c)
                .unwrap_or("")
                .parse()
                .map_err(|e| Error::parse(&loc, format!("column {}: {e}", headers.get(c).unwrap_or("?"))))
        };
        let delta = rec.get(c_delta).unwrap_or("");
        rows.push(TraceRow {
            step: num(c_step)? as usize,
            value: num(c_value)?,
            delta_e: if delta.is_empty() { None } else { Some(num(c_delta)?) },
            stddev: num(c_std)?,
            discard_fraction: num(c_disc)?,
        });
    }
    Ok(rows)
}

pub fn report_csv(rows: &[TraceRow]) -> String {
    let mut s = String::from("step,energy_kj_mol,delta_e_kj_mol,stddev_kj_mol,discard_fraction\n");
    for r in rows {
        let d = r.delta_e.map(|d| format!("{d:.4}")).unwrap_or_default();
        let _ = writeln!(
            s,
            "{},{:.4},{},{:.4},{:.6}",
            r.step, r.value, d, r.stddev, r.discard_fraction
        );
    }
    s
}

/// Tick positions covering `[lo, hi]` with a 1-2-5 step.
fn ticks(lo: f64, hi: f64, target: usize) -> Vec<f64> {
    let span = (hi - lo).max(1e-12);
    let raw = span / target.max(1) as f64;
    let mag = 10f64.powf(raw.log10().floor());
    let step = [1.0, 2.0, 5.0, 10.0]
        .iter()
        .map(|m| m * mag)
        .find(|s| *s >= raw)
        .unwrap_or(10.0 * mag);
    let start = (lo / step).ceil() as i64;
    let end = (hi / step).floor() as i64;
    (start..=end).map(|k| k as f64 * step).collect()
}

fn label(v: f64) -> String {
    let s = format!("{v:.3}");
    let s = s.trim_end_matches('0').trim_end_matches('.');
    if s == "-0" { "0".into() } else { s.to_string() }
}

/// Energy (or ΔE when a reference is known) against step, with ±σ bars.
pub fn convergence_svg(rows: &[TraceRow], title: &str) -> String {
    const W: f64 = 640.0;
    const H: f64 = 400.0;
    const L: f64 = 80.0;
    const R: f64 = 20.0;
    const T: f64 = 40.0;
    const B: f64 = 50.0;
    let use_delta = !rows.is_empty() && rows.iter().all(|r| r.delta_e.is_some());
    let y_of = |r: &TraceRow| if use_delta { r.delta_e.unwrap() } else { r.value };
    let mut y_lo = rows.iter().map(|r| y_of(r) - r.stddev).fold(f64::INFINITY, f64::min);
    let mut y_hi = rows.iter().map(|r| y_of(r) + r.stddev).fold(f64::NEG_INFINITY, f64::max);
    if !y_lo.is_finite() {
        (y_lo, y_hi) = (0.0, 1.0);
    }
    if y_hi - y_lo < 1e-9 {
        y_lo -= 1.0;
        y_hi += 1.0;
    }
    let pad = 0.05 * (y_hi - y_lo);
    let (y_lo, y_hi) = (y_lo - pad, y_hi + pad);
    let x_hi = rows.iter().map(|r| r.step).max().unwrap_or(1).max(1) as f64;
    let px = |x: f64| L + (W - L - R) * x / x_hi;
    let py = |y: f64| T + (H - T - B) * (y_hi - y) / (y_hi - y_lo);

    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" viewBox="0 0 {W} {H}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(s, r#"<rect width="{W}" height="{H}" fill="white"/>"#);
    let _ = writeln!(s, r#"<text x="{}" y="22" text-anchor="middle" font-size="14">{}</text>"#, W / 2.0, escape(title));
    let _ = writeln!(
        s,
        r#"<path d="M{L},{T} L{L},{} L{},{}" fill="none" stroke="black"/>"#,
        H - B,
        W - R,
        H - B
    );
    for y in ticks(y_lo, y_hi, 6) {
        let _ = writeln!(
            s,
            r##"<line x1="{}" y1="{:.2}" x2="{L}" y2="{:.2}" stroke="black"/><text x="{}" y="{:.2}" text-anchor="end">{}</text>"##,
            L - 5.0,
            py(y),
            py(y),
            L - 8.0,
            py(y) + 4.0,
            label(y)
        );
    }
    for x in ticks(0.0, x_hi, 8).into_iter().filter(|x| x.fract() == 0.0) {
        let _ = writeln!(
            s,
            r#"<line x1="{:.2}" y1="{}" x2="{:.2}" y2="{}" stroke="black"/><text x="{:.2}" y="{}" text-anchor="middle">{}</text>"#,
            px(x),
            H - B,
            px(x),
            H - B + 5.0,
            px(x),
            H - B + 20.0,
            label(x)
        );
    }
    let _ = writeln!(s, r#"<text x="{}" y="{}" text-anchor="middle">step</text>"#, (L + W - R) / 2.0, H - 10.0);
    let y_name = if use_delta { "ΔE / kJ mol⁻¹" } else { "E / kJ mol⁻¹" };
    let _ = writeln!(
        s,
        r#"<text x="18" y="{}" text-anchor="middle" transform="rotate(-90 18 {})">{y_name}</text>"#,
        (T + H - B) / 2.0,
        (T + H - B) / 2.0
    );
    for r in rows.iter().filter(|r| r.stddev > 0.0) {
        let y = y_of(r);
        let _ = writeln!(
            s,
            r##"<line x1="{x:.2}" y1="{:.2}" x2="{x:.2}" y2="{:.2}" stroke="#1f77b4" stroke-opacity="0.6"/>"##,
            py(y - r.stddev),
            py(y + r.stddev),
            x = px(r.step as f64)
        );
    }
    if !rows.is_empty() {
        let pts: Vec<String> = rows
            .iter()
            .map(|r| format!("{:.2},{:.2}", px(r.step as f64), py(y_of(r))))
            .collect();
        let _ = writeln!(
            s,
            r##"<polyline points="{}" fill="none" stroke="#1f77b4" stroke-width="1.5"/>"##,
            pts.join(" ")
        );
        for r in rows {
            let _ = writeln!(
                s,
                r##"<circle cx="{:.2}" cy="{:.2}" r="3" fill="#1f77b4"/>"##,
                px(r.step as f64),
                py(y_of(r))
            );
        }
    }
    s.push_str("</svg>\n");
    s
}

fn escape(t: &str) -> String {
    t.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

/// Writes `report.csv` and `convergence.svg` into `run_dir`.
pub fn write_report(run_dir: &Path) -> Result<(PathBuf, PathBuf)> {
    let rows = read_trace(&run_dir.join("trace.csv"))?;
    let title = match io::read_json::<serde_json::Value>(&run_dir.join("result.json")) {
        Ok(v) => format!(
            "{} ({}, {})",
            v["problem"].as_str().unwrap_or("run"),
            v["backend"].as_str().unwrap_or("?"),
            v["mitigation"].as_str().unwrap_or("?")
        ),
        Err(_) => "convergence".to_string(),
    };
    let csv_path = run_dir.join("report.csv");
    let svg_path = run_dir.join("convergence.svg");
    io::write_text(&csv_path, &report_csv(&rows))?;
    io::write_text(&svg_path, &convergence_svg(&rows, &title))?;
    Ok((csv_path, svg_path))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn row(step: usize, value: f64) -> TraceRow {
        TraceRow {
            step,
            value,
            delta_e: Some(value + 10.0),
            stddev: 0.5,
            discard_fraction: 0.0,
        }
    }

    #[test]
    fn tick_steps() {
        assert_eq!(ticks(0.0, 10.0, 5), vec![0.0, 2.0, 4.0, 6.0, 8.0, 10.0]);
        let t = ticks(-221.0, -3.0, 6);
        assert!(t.windows(2).all(|w| (w[1] - w[0] - 50.0).abs() < 1e-9));
    }

    #[test]
    fn svg_is_well_formed() {
        let svg = convergence_svg(&[row(0, -1.0), row(1, -2.0), row(2, -2.5)], "a < b");
        assert!(svg.starts_with("<svg"));
        assert!(svg.trim_end().ends_with("</svg>"));
        assert_eq!(svg.matches("<circle").count(), 3);
        assert!(svg.contains("a &lt; b"));
        assert!(svg.contains("ΔE"));
    }

    #[test]
    fn empty_trace_still_renders() {
        let svg = convergence_svg(&[], "empty");
        assert!(svg.contains("</svg>"));
    }

    #[test]
    fn csv_rows() {
        let s = report_csv(&[row(0, -1.0)]);
        assert_eq!(s.lines().nth(1).unwrap(), "0,-1.0000,9.0000,0.5000,0.000000");
    }
}
