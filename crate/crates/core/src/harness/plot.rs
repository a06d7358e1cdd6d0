use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use super::{fmt_float, load_summary};
use crate::error::{Error, Result};

/// A named log-log series.
#[derive(Debug, Clone, PartialEq)]
pub struct PlotSeries {
    pub label: String,
    pub points: Vec<(f64, f64)>,
}

/// Expands a glob pattern into the matching files, sorted.
pub fn expand_glob(pattern: &str) -> Result<Vec<PathBuf>> {
    let paths = glob::glob(pattern).map_err(|e| Error::config(format!("bad pattern {pattern:?}: {e}")))?;
    let mut out: Vec<PathBuf> = paths.filter_map(|p| p.ok()).filter(|p| p.is_file()).collect();
    out.sort();
    Ok(out)
}

/// Reads run summaries matching `pattern` and writes one `<label>.dat` file per
/// series plus an overlaid `gap_vs_T.svg` into `out`. Returns the written paths.
pub fn plot(pattern: &str, out: &Path) -> Result<Vec<PathBuf>> {
    let inputs = expand_glob(pattern)?;
    if inputs.is_empty() {
        return Err(Error::config(format!("no summaries match {pattern:?}")));
    }
    let mut series = Vec::with_capacity(inputs.len());
    for path in &inputs {
        let s = load_summary(path)?;
        let points: Vec<(f64, f64)> = s
            .checkpoints
            .iter()
            .zip(&s.mean_gap)
            .filter(|(_, g)| **g > 0.0 && g.is_finite())
            .map(|(t, g)| (*t as f64, *g))
            .collect();
        if points.is_empty() {
            return Err(Error::config(format!("{} has no positive gaps to plot", path.display())));
        }
        series.push(PlotSeries { label: s.label, points });
    }
    fs::create_dir_all(out)?;
    let mut written = Vec::new();
    for s in &series {
        let mut text = String::from("# T gap\n");
        for (t, g) in &s.points {
            let _ = writeln!(text, "{t} {}", fmt_float(*g));
        }
        let path = out.join(format!("{}.dat", s.label));
        fs::write(&path, text)?;
        written.push(path);
    }
    let svg = out.join("gap_vs_T.svg");
    fs::write(&svg, render_svg(&series)?)?;
    written.push(svg);
    Ok(written)
}

const PALETTE: [&str; 8] = [
    "#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b", "#e377c2", "#17becf",
];

/// Standalone log-log SVG of gap Δ(T) against T.
pub fn render_svg(series: &[PlotSeries]) -> Result<String> {
    let all: Vec<(f64, f64)> = series
        .iter()
        .flat_map(|s| s.points.iter().cloned())
        .filter(|(t, g)| *t > 0.0 && *g > 0.0)
        .collect();
    if all.is_empty() {
        return Err(Error::config("nothing to plot"));
    }
    let decade = |v: f64, up: bool| if up { v.log10().ceil() } else { v.log10().floor() };
    let x0 = decade(all.iter().map(|p| p.0).fold(f64::INFINITY, f64::min), false);
    let mut x1 = decade(all.iter().map(|p| p.0).fold(0.0, f64::max), true);
    let y0 = decade(all.iter().map(|p| p.1).fold(f64::INFINITY, f64::min), false);
    let mut y1 = decade(all.iter().map(|p| p.1).fold(0.0, f64::max), true);
    if x1 <= x0 {
        x1 = x0 + 1.0;
    }
    if y1 <= y0 {
        y1 = y0 + 1.0;
    }
    let (w, h, left, right, top, bottom) = (720.0, 480.0, 80.0, 170.0, 20.0, 50.0);
    let pw = w - left - right;
    let ph = h - top - bottom;
    let px = |t: f64| left + (t.log10() - x0) / (x1 - x0) * pw;
    let py = |g: f64| top + (y1 - g.log10()) / (y1 - y0) * ph;

    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{w}" height="{h}" viewBox="0 0 {w} {h}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(s, r#"<rect width="{w}" height="{h}" fill="white"/>"#);
    let _ = writeln!(
        s,
        r#"<rect x="{left}" y="{top}" width="{pw}" height="{ph}" fill="none" stroke="black"/>"#
    );
    let mut k = x0;
    while k <= x1 {
        let x = left + (k - x0) / (x1 - x0) * pw;
        let _ = writeln!(
            s,
            r##"<line x1="{x:.1}" y1="{top}" x2="{x:.1}" y2="{}" stroke="#ddd"/><text x="{x:.1}" y="{}" text-anchor="middle">1e{k}</text>"##,
            top + ph,
            top + ph + 18.0
        );
        k += 1.0;
    }
    let ystep = ((y1 - y0) / 10.0).ceil().max(1.0);
    let mut k = y0;
    while k <= y1 {
        let y = top + (y1 - k) / (y1 - y0) * ph;
        let _ = writeln!(
            s,
            r##"<line x1="{left}" y1="{y:.1}" x2="{}" y2="{y:.1}" stroke="#ddd"/><text x="{}" y="{:.1}" text-anchor="end">1e{k}</text>"##,
            left + pw,
            left - 6.0,
            y + 4.0
        );
        k += ystep;
    }
    let _ = writeln!(
        s,
        r#"<text x="{}" y="{}" text-anchor="middle">T</text>"#,
        left + pw / 2.0,
        h - 10.0
    );
    let _ = writeln!(
        s,
        r#"<text x="18" y="{}" text-anchor="middle" transform="rotate(-90 18 {})">Δ(T)</text>"#,
        top + ph / 2.0,
        top + ph / 2.0
    );
    for (i, series) in series.iter().enumerate() {
        let color = PALETTE[i % PALETTE.len()];
        let pts: Vec<String> = series
            .points
            .iter()
            .filter(|(t, g)| *t > 0.0 && *g > 0.0)
            .map(|(t, g)| format!("{:.2},{:.2}", px(*t), py(*g)))
            .collect();
        let _ = writeln!(
            s,
            r#"<polyline fill="none" stroke="{color}" stroke-width="1.5" points="{}"/>"#,
            pts.join(" ")
        );
        let ly = top + 16.0 + 18.0 * i as f64;
        let lx = left + pw + 12.0;
        let _ = writeln!(
            s,
            r#"<line x1="{lx}" y1="{ly}" x2="{}" y2="{ly}" stroke="{color}" stroke-width="2"/><text x="{}" y="{}">{}</text>"#,
            lx + 20.0,
            lx + 26.0,
            ly + 4.0,
            escape(&series.label)
        );
    }
    s.push_str("</svg>\n");
    Ok(s)
}

fn escape(text: &str) -> String {
    text.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}
