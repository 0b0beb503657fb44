//! Minimal standalone SVG line charts for per-layer metric curves.
//!
//! Output depends only on the input values: coordinates are printed with a
//! fixed precision and nothing time- or environment-dependent is embedded.

use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fsio::write_atomic;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Series {
    pub name: String,
    pub points: Vec<(f64, f64)>,
}

impl Series {
    pub fn new(name: impl Into<String>, points: Vec<(f64, f64)>) -> Self {
        Self {
            name: name.into(),
            points,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ChartOptions {
    pub title: String,
    pub x_label: String,
    pub y_label: String,
    pub width: f64,
    pub height: f64,
}

impl Default for ChartOptions {
    fn default() -> Self {
        Self {
            title: String::new(),
            x_label: "layer".into(),
            y_label: "score".into(),
            width: 640.0,
            height: 400.0,
        }
    }
}

const PALETTE: [&str; 8] = [
    "#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd", "#8c564b", "#e377c2", "#7f7f7f",
];
const MARGIN_LEFT: f64 = 60.0;
const MARGIN_RIGHT: f64 = 150.0;
const MARGIN_TOP: f64 = 40.0;
const MARGIN_BOTTOM: f64 = 50.0;
const TICKS: usize = 5;

fn escape(s: &str) -> String {
    s.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
        .replace('"', "&quot;")
}

fn padded_range(values: impl Iterator<Item = f64>) -> (f64, f64) {
    let (lo, hi) = values.fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| (lo.min(v), hi.max(v)));
    if lo == hi {
        (lo - 0.5, hi + 0.5)
    } else {
        (lo, hi)
    }
}

pub fn render_linechart(series: &[Series], opts: &ChartOptions) -> Result<String> {
    if series.is_empty()
        || series.iter().any(|s| s.points.is_empty())
        || series
            .iter()
            .flat_map(|s| &s.points)
            .any(|(x, y)| !x.is_finite() || !y.is_finite())
    {
        return Err(Error::EmptySeries);
    }
    let all = || series.iter().flat_map(|s| s.points.iter());
    let (x_lo, x_hi) = padded_range(all().map(|p| p.0));
    let (y_lo, y_hi) = padded_range(all().map(|p| p.1));
    let plot_w = opts.width - MARGIN_LEFT - MARGIN_RIGHT;
    let plot_h = opts.height - MARGIN_TOP - MARGIN_BOTTOM;
    let px = |x: f64| MARGIN_LEFT + (x - x_lo) / (x_hi - x_lo) * plot_w;
    let py = |y: f64| MARGIN_TOP + (1.0 - (y - y_lo) / (y_hi - y_lo)) * plot_h;

    let mut svg = String::new();
    let w = &mut svg;
    // fmt::Write into a String cannot fail.
    let _ = writeln!(
        w,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{:.0}" height="{:.0}" viewBox="0 0 {:.0} {:.0}" font-family="sans-serif" font-size="12">"#,
        opts.width, opts.height, opts.width, opts.height
    );
    let _ = writeln!(w, r#"<rect width="100%" height="100%" fill="white"/>"#);
    if !opts.title.is_empty() {
        let _ = writeln!(
            w,
            r#"<text x="{:.2}" y="20" text-anchor="middle" font-size="14">{}</text>"#,
            MARGIN_LEFT + plot_w / 2.0,
            escape(&opts.title)
        );
    }

    // axes
    let (x0, x1, y0, y1) = (MARGIN_LEFT, MARGIN_LEFT + plot_w, MARGIN_TOP + plot_h, MARGIN_TOP);
    let _ = writeln!(w, r#"<g class="axes" stroke="black" stroke-width="1">"#);
    let _ = writeln!(w, r#"<line x1="{x0:.2}" y1="{y0:.2}" x2="{x1:.2}" y2="{y0:.2}"/>"#);
    let _ = writeln!(w, r#"<line x1="{x0:.2}" y1="{y0:.2}" x2="{x0:.2}" y2="{y1:.2}"/>"#);
    let _ = writeln!(w, "</g>");
    let _ = writeln!(w, r#"<g class="ticks">"#);
    for t in 0..=TICKS {
        let frac = t as f64 / TICKS as f64;
        let yv = y_lo + frac * (y_hi - y_lo);
        let y = py(yv);
        let _ = writeln!(w, r#"<line x1="{:.2}" y1="{y:.2}" x2="{x0:.2}" y2="{y:.2}" stroke="black"/>"#, x0 - 4.0);
        let _ = writeln!(w, r#"<text x="{:.2}" y="{:.2}" text-anchor="end">{yv:.3}</text>"#, x0 - 6.0, y + 4.0);
        let xv = x_lo + frac * (x_hi - x_lo);
        let x = px(xv);
        let _ = writeln!(w, r#"<line x1="{x:.2}" y1="{y0:.2}" x2="{x:.2}" y2="{:.2}" stroke="black"/>"#, y0 + 4.0);
        let _ = writeln!(w, r#"<text x="{x:.2}" y="{:.2}" text-anchor="middle">{xv:.2}</text>"#, y0 + 18.0);
    }
    let _ = writeln!(w, "</g>");
    let _ = writeln!(
        w,
        r#"<text x="{:.2}" y="{:.2}" text-anchor="middle">{}</text>"#,
        MARGIN_LEFT + plot_w / 2.0,
        opts.height - 10.0,
        escape(&opts.x_label)
    );
    let _ = writeln!(
        w,
        r#"<text x="15" y="{:.2}" text-anchor="middle" transform="rotate(-90 15 {:.2})">{}</text>"#,
        MARGIN_TOP + plot_h / 2.0,
        MARGIN_TOP + plot_h / 2.0,
        escape(&opts.y_label)
    );

    for (i, s) in series.iter().enumerate() {
        let color = PALETTE[i % PALETTE.len()];
        let pts: Vec<String> = s.points.iter().map(|&(x, y)| format!("{:.2},{:.2}", px(x), py(y))).collect();
        let _ = writeln!(w, r#"<g class="series" data-name="{}">"#, escape(&s.name));
        let _ = writeln!(
            w,
            r#"<polyline fill="none" stroke="{color}" stroke-width="2" points="{}"/>"#,
            pts.join(" ")
        );
        for &(x, y) in &s.points {
            let _ = writeln!(w, r#"<circle cx="{:.2}" cy="{:.2}" r="3" fill="{color}"/>"#, px(x), py(y));
        }
        let _ = writeln!(w, "</g>");
    }

    let _ = writeln!(w, r#"<g class="legend">"#);
    for (i, s) in series.iter().enumerate() {
        let color = PALETTE[i % PALETTE.len()];
        let lx = x1 + 15.0;
        let ly = MARGIN_TOP + 10.0 + 20.0 * i as f64;
        let _ = writeln!(w, r#"<line x1="{lx:.2}" y1="{ly:.2}" x2="{:.2}" y2="{ly:.2}" stroke="{color}" stroke-width="2"/>"#, lx + 20.0);
        let _ = writeln!(w, r#"<text x="{:.2}" y="{:.2}">{}</text>"#, lx + 26.0, ly + 4.0, escape(&s.name));
    }
    let _ = writeln!(w, "</g>");
    let _ = writeln!(w, "</svg>");
    Ok(svg)
}

pub fn emit_linechart(series: &[Series], opts: &ChartOptions, path: impl AsRef<Path>) -> Result<()> {
    let svg = render_linechart(series, opts)?;
    write_atomic(path.as_ref(), svg.as_bytes())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_point_has_one_marker() {
        let svg = render_linechart(&[Series::new("ami", vec![(0.0, 0.4)])], &ChartOptions::default()).unwrap();
        assert!(svg.starts_with("<svg"));
        assert!(svg.trim_end().ends_with("</svg>"));
        assert_eq!(svg.matches("<circle").count(), 1);
        assert_eq!(svg.matches("<polyline").count(), 1);
    }

    #[test]
    fn two_series_two_legend_entries() {
        let a = Series::new("AMI", (0..10).map(|i| (i as f64, i as f64 * 0.1)).collect());
        let b = Series::new("purity <raw>", (0..10).map(|i| (i as f64, 0.2 + i as f64 * 0.05)).collect());
        let svg = render_linechart(&[a, b], &ChartOptions::default()).unwrap();
        assert_eq!(svg.matches("<polyline").count(), 2);
        let legend = &svg[svg.find(r#"<g class="legend">"#).unwrap()..];
        assert_eq!(legend.matches("<text").count(), 2);
        assert!(svg.contains("purity &lt;raw&gt;"));
    }

    #[test]
    fn rejects_empty_or_non_finite() {
        let opts = ChartOptions::default();
        assert!(matches!(render_linechart(&[], &opts), Err(Error::EmptySeries)));
        assert!(render_linechart(&[Series::new("a", vec![])], &opts).is_err());
        assert!(render_linechart(&[Series::new("a", vec![(0.0, f64::NAN)])], &opts).is_err());
    }
}
