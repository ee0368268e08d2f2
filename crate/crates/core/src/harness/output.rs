//! CSV and SVG writers. CSV is the canonical output; the SVG charts are
//! plain hand-built documents so no plotting toolchain is needed.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use serde::Serialize;

use crate::error::{Error, Result};

pub fn write_csv<T: Serialize>(path: &Path, rows: &[T]) -> Result<()> {
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir)?;
    }
    let mut w = csv::Writer::from_path(path).map_err(csv_err)?;
    for r in rows {
        w.serialize(r).map_err(csv_err)?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_csv<T: serde::de::DeserializeOwned>(path: &Path) -> Result<Vec<T>> {
    let mut r = csv::Reader::from_path(path).map_err(csv_err)?;
    r.deserialize().map(|row| row.map_err(csv_err)).collect()
}

fn csv_err(e: csv::Error) -> Error {
    match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::Io(io),
        other => Error::InvalidConfig(format!("csv: {other:?}")),
    }
}

const W: f64 = 640.0;
const H: f64 = 400.0;
const PAD_L: f64 = 70.0;
const PAD_R: f64 = 150.0;
const PAD_T: f64 = 40.0;
const PAD_B: f64 = 60.0;
const COLORS: [&str; 6] = ["#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd", "#8c564b"];

pub struct Series {
    pub label: String,
    pub points: Vec<(f64, f64)>,
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

fn range(vals: impl Iterator<Item = f64>) -> (f64, f64) {
    let (lo, hi) = vals
        .filter(|v| v.is_finite())
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| (lo.min(v), hi.max(v)));
    if !lo.is_finite() {
        return (0.0, 1.0);
    }
    if hi - lo < 1e-12 {
        return (lo - 0.5, hi + 0.5);
    }
    let pad = 0.05 * (hi - lo);
    (lo - pad, hi + pad)
}

fn frame(out: &mut String, title: &str, x_label: &str, y_label: &str, y: (f64, f64)) {
    let _ = writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" viewBox="0 0 {W} {H}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(out, r#"<rect width="100%" height="100%" fill="white"/>"#);
    let _ = writeln!(out, r#"<text x="{}" y="22" text-anchor="middle" font-size="14">{}</text>"#, W / 2.0, escape(title));
    let (x0, x1, y0, y1) = (PAD_L, W - PAD_R, PAD_T, H - PAD_B);
    let _ = writeln!(out, r#"<path d="M{x0},{y0} L{x0},{y1} L{x1},{y1}" fill="none" stroke="black"/>"#);
    let _ = writeln!(out, r#"<text x="{}" y="{}" text-anchor="middle">{}</text>"#, (x0 + x1) / 2.0, H - 15.0, escape(x_label));
    let _ = writeln!(
        out,
        r#"<text x="18" y="{}" text-anchor="middle" transform="rotate(-90 18 {})">{}</text>"#,
        (y0 + y1) / 2.0,
        (y0 + y1) / 2.0,
        escape(y_label)
    );
    for k in 0..=4 {
        let v = y.0 + (y.1 - y.0) * k as f64 / 4.0;
        let py = y1 - (y1 - y0) * k as f64 / 4.0;
        let _ = writeln!(out, r#"<text x="{}" y="{}" text-anchor="end">{v:.3}</text>"#, x0 - 6.0, py + 4.0);
        let _ = writeln!(out, r##"<line x1="{x0}" y1="{py}" x2="{x1}" y2="{py}" stroke="#ddd"/>"##);
    }
}

fn legend(out: &mut String, labels: &[&str]) {
    for (i, l) in labels.iter().enumerate() {
        let y = PAD_T + 10.0 + 18.0 * i as f64;
        let x = W - PAD_R + 12.0;
        let _ = writeln!(out, r#"<rect x="{x}" y="{}" width="12" height="12" fill="{}"/>"#, y - 10.0, COLORS[i % COLORS.len()]);
        let _ = writeln!(out, r#"<text x="{}" y="{y}">{}</text>"#, x + 18.0, escape(l));
    }
}

/// Line chart; `log_x` spaces the x axis logarithmically.
pub fn line_chart(title: &str, x_label: &str, y_label: &str, series: &[Series], log_x: bool) -> String {
    let tx = |x: f64| if log_x { x.ln() } else { x };
    let xr = range(series.iter().flat_map(|s| s.points.iter().map(|p| tx(p.0))));
    let yr = range(series.iter().flat_map(|s| s.points.iter().map(|p| p.1)));
    let mut out = String::new();
    frame(&mut out, title, x_label, y_label, yr);
    let px = |x: f64| PAD_L + (tx(x) - xr.0) / (xr.1 - xr.0) * (W - PAD_R - PAD_L);
    let py = |y: f64| H - PAD_B - (y - yr.0) / (yr.1 - yr.0) * (H - PAD_B - PAD_T);
    let mut ticks: Vec<f64> = series.iter().flat_map(|s| s.points.iter().map(|p| p.0)).collect();
    ticks.sort_by(f64::total_cmp);
    ticks.dedup();
    let stride = ticks.len().div_ceil(10).max(1);
    for x in ticks.iter().step_by(stride) {
        let _ = writeln!(out, r#"<text x="{}" y="{}" text-anchor="middle">{}</text>"#, px(*x), H - PAD_B + 16.0, x);
    }
    for (i, s) in series.iter().enumerate() {
        let pts: Vec<String> = s
            .points
            .iter()
            .filter(|p| p.1.is_finite())
            .map(|&(x, y)| format!("{:.2},{:.2}", px(x), py(y)))
            .collect();
        let c = COLORS[i % COLORS.len()];
        let _ = writeln!(out, r#"<polyline points="{}" fill="none" stroke="{c}" stroke-width="1.5"/>"#, pts.join(" "));
        if s.points.len() <= 20 {
            for p in &pts {
                let (x, y) = p.split_once(',').unwrap();
                let _ = writeln!(out, r#"<circle cx="{x}" cy="{y}" r="3" fill="{c}"/>"#);
            }
        }
    }
    let labels: Vec<&str> = series.iter().map(|s| s.label.as_str()).collect();
    legend(&mut out, &labels);
    out.push_str("</svg>\n");
    out
}

/// Grouped bars with standard-deviation whiskers. `values[g][s]` is the
/// (mean, std) of series `s` in group `g`.
pub fn grouped_bars(
    title: &str,
    y_label: &str,
    groups: &[String],
    series_labels: &[String],
    values: &[Vec<(f64, f64)>],
) -> String {
    let top = values
        .iter()
        .flatten()
        .map(|(m, s)| m + s)
        .fold(0.0f64, |a, b| if b.is_finite() { a.max(b) } else { a });
    let yr = (0.0, if top > 0.0 { top * 1.1 } else { 1.0 });
    let mut out = String::new();
    frame(&mut out, title, "", y_label, yr);
    let py = |y: f64| H - PAD_B - (y - yr.0) / (yr.1 - yr.0) * (H - PAD_B - PAD_T);
    let gw = (W - PAD_R - PAD_L) / groups.len().max(1) as f64;
    let bw = gw * 0.8 / series_labels.len().max(1) as f64;
    for (g, name) in groups.iter().enumerate() {
        let gx = PAD_L + gw * g as f64 + gw * 0.1;
        let _ = writeln!(out, r#"<text x="{}" y="{}" text-anchor="middle">{}</text>"#, gx + gw * 0.4, H - PAD_B + 16.0, escape(name));
        for (s, &(m, sd)) in values[g].iter().enumerate() {
            let x = gx + bw * s as f64;
            let c = COLORS[s % COLORS.len()];
            let _ = writeln!(
                out,
                r#"<rect x="{x:.2}" y="{:.2}" width="{:.2}" height="{:.2}" fill="{c}"/>"#,
                py(m),
                bw * 0.9,
                (py(0.0) - py(m)).max(0.0)
            );
            let cx = x + bw * 0.45;
            let _ = writeln!(
                out,
                r#"<line x1="{cx:.2}" y1="{:.2}" x2="{cx:.2}" y2="{:.2}" stroke="black"/>"#,
                py((m - sd).max(0.0)),
                py(m + sd)
            );
        }
    }
    let labels: Vec<&str> = series_labels.iter().map(|s| s.as_str()).collect();
    legend(&mut out, &labels);
    out.push_str("</svg>\n");
    out
}

pub fn write_text(path: &Path, text: &str) -> Result<()> {
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir)?;
    }
    fs::write(path, text)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn line_chart_is_well_formed() {
        let s = Series {
            label: "a<b".into(),
            points: vec![(1.0, 2.0), (2.0, 3.0), (5.0, f64::NAN)],
        };
        let svg = line_chart("t", "x", "y", &[s], true);
        assert!(svg.starts_with("<svg") && svg.ends_with("</svg>\n"));
        assert!(svg.contains("a&lt;b"));
        assert_eq!(svg.matches("<circle").count(), 2);
    }

    #[test]
    fn bars_have_one_whisker_each() {
        let svg = grouped_bars(
            "t",
            "y",
            &["g1".into(), "g2".into()],
            &["s1".into(), "s2".into(), "s3".into()],
            &[vec![(1.0, 0.5); 3], vec![(2.0, 0.1); 3]],
        );
        assert_eq!(svg.matches("<line").count() - 5, 6);
    }
}
