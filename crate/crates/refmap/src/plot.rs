//! Minimal SVG line charts for the per-window metric series.

use std::fmt::Write as _;

use crate::error::{Error, Result};

const W: f64 = 800.0;
const H: f64 = 480.0;
const ML: f64 = 70.0;
const MR: f64 = 20.0;
const MT: f64 = 40.0;
const MB: f64 = 50.0;

/// One metric over window labels as a standalone SVG line chart.
/// Deterministic byte output for fixed input.
pub fn line_chart_string(title: &str, series: &[(i32, f64)]) -> Result<String> {
    if series.is_empty() {
        return Err(Error::InsufficientData(format!(
            "no points to plot for {title}"
        )));
    }
    let x_min = series.iter().map(|p| p.0).min().unwrap() as f64;
    let x_max = series.iter().map(|p| p.0).max().unwrap() as f64;
    let y_min = series.iter().map(|p| p.1).fold(f64::INFINITY, f64::min);
    let y_max = series.iter().map(|p| p.1).fold(f64::NEG_INFINITY, f64::max);
    let (y_lo, y_hi) = pad_range(y_min.min(0.0), y_max);
    let x_span = (x_max - x_min).max(1.0);

    let px = |x: f64| ML + (x - x_min) / x_span * (W - ML - MR);
    let py = |y: f64| H - MB - (y - y_lo) / (y_hi - y_lo) * (H - MT - MB);

    let mut out = String::new();
    let _ = writeln!(
        out,
        "<svg xmlns=\"http://www.w3.org/2000/svg\" version=\"1.1\" width=\"{W}\" height=\"{H}\" viewBox=\"0 0 {W} {H}\">"
    );
    out.push_str("<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n");
    let _ = writeln!(
        out,
        "<text x=\"{:.1}\" y=\"24\" font-family=\"sans-serif\" font-size=\"16\" text-anchor=\"middle\">{}</text>",
        W / 2.0,
        title
    );
    // Axes.
    let _ = writeln!(
        out,
        "<line x1=\"{ML}\" y1=\"{MT}\" x2=\"{ML}\" y2=\"{:.1}\" stroke=\"black\"/>",
        H - MB
    );
    let _ = writeln!(
        out,
        "<line x1=\"{ML}\" y1=\"{:.1}\" x2=\"{:.1}\" y2=\"{:.1}\" stroke=\"black\"/>",
        H - MB,
        W - MR,
        H - MB
    );
    // Y ticks.
    for i in 0..=4 {
        let y = y_lo + (y_hi - y_lo) * i as f64 / 4.0;
        let yp = py(y);
        let _ = writeln!(
            out,
            "<line x1=\"{:.1}\" y1=\"{yp:.1}\" x2=\"{ML}\" y2=\"{yp:.1}\" stroke=\"black\"/>",
            ML - 5.0
        );
        let _ = writeln!(
            out,
            "<text x=\"{:.1}\" y=\"{:.1}\" font-family=\"sans-serif\" font-size=\"11\" text-anchor=\"end\">{}</text>",
            ML - 8.0,
            yp + 4.0,
            trim_number(y)
        );
    }
    // X ticks: at most ~8, on whole labels.
    let step = ((x_span / 8.0).ceil() as i64).max(1);
    let mut x = x_min as i64;
    while x <= x_max as i64 {
        let xp = px(x as f64);
        let _ = writeln!(
            out,
            "<line x1=\"{xp:.1}\" y1=\"{:.1}\" x2=\"{xp:.1}\" y2=\"{:.1}\" stroke=\"black\"/>",
            H - MB,
            H - MB + 5.0
        );
        let _ = writeln!(
            out,
            "<text x=\"{xp:.1}\" y=\"{:.1}\" font-family=\"sans-serif\" font-size=\"11\" text-anchor=\"middle\">{x}</text>",
            H - MB + 20.0
        );
        x += step;
    }
    // The series.
    let points: Vec<String> = series
        .iter()
        .map(|&(x, y)| format!("{:.1},{:.1}", px(x as f64), py(y)))
        .collect();
    let _ = writeln!(
        out,
        "<polyline points=\"{}\" fill=\"none\" stroke=\"#4e79a7\" stroke-width=\"2\"/>",
        points.join(" ")
    );
    for &(x, y) in series {
        let _ = writeln!(
            out,
            "<circle cx=\"{:.1}\" cy=\"{:.1}\" r=\"3\" fill=\"#4e79a7\"/>",
            px(x as f64),
            py(y)
        );
    }
    out.push_str("</svg>\n");
    Ok(out)
}

fn pad_range(lo: f64, hi: f64) -> (f64, f64) {
    if (hi - lo).abs() < 1e-12 {
        (lo - 1.0, hi + 1.0)
    } else {
        (lo, hi + (hi - lo) * 0.05)
    }
}

fn trim_number(v: f64) -> String {
    if v.abs() >= 100.0 || v == v.trunc() {
        format!("{v:.0}")
    } else {
        format!("{v:.3}")
    }
}

pub fn write_line_chart(title: &str, series: &[(i32, f64)], path: &std::path::Path) -> Result<()> {
    std::fs::write(path, line_chart_string(title, series)?)?;
    Ok(())
}
