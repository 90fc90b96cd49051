//! Minimal deterministic SVG charts: multi-series lines, stacked bars and
//! diverging bars. Coordinates are printed with two decimals so equal input
//! gives byte-equal output.

use std::fmt::Write as _;

use crate::error::{Error, Result};

const WIDTH: f64 = 640.0;
const HEIGHT: f64 = 400.0;
const LEFT: f64 = 64.0;
const RIGHT: f64 = 140.0;
const TOP: f64 = 40.0;
const BOTTOM: f64 = 48.0;

const PALETTE: [&str; 10] = [
    "#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b", "#e377c2", "#7f7f7f",
    "#bcbd22", "#17becf",
];

fn colour(n: usize) -> &'static str {
    PALETTE[n % PALETTE.len()]
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
        .replace('"', "&quot;")
}

#[derive(Debug, Clone, PartialEq)]
pub struct Series {
    pub name: String,
    pub points: Vec<(f64, f64)>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Axes {
    pub title: String,
    pub x_label: String,
    pub y_label: String,
}

impl Axes {
    pub fn new(title: &str, x_label: &str, y_label: &str) -> Self {
        Axes {
            title: title.into(),
            x_label: x_label.into(),
            y_label: y_label.into(),
        }
    }
}

struct Canvas {
    out: String,
}

impl Canvas {
    fn new(axes: &Axes) -> Self {
        let mut out = String::new();
        writeln!(
            out,
            r#"<?xml version="1.0" encoding="UTF-8"?>
<svg xmlns="http://www.w3.org/2000/svg" version="1.1" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="12">
<rect x="0" y="0" width="{WIDTH}" height="{HEIGHT}" fill="white"/>
<text x="{:.2}" y="24" text-anchor="middle" font-size="15">{}</text>
<text x="{:.2}" y="{:.2}" text-anchor="middle">{}</text>
<text x="16" y="{:.2}" text-anchor="middle" transform="rotate(-90 16 {:.2})">{}</text>"#,
            WIDTH / 2.0,
            escape(&axes.title),
            LEFT + (WIDTH - LEFT - RIGHT) / 2.0,
            HEIGHT - 12.0,
            escape(&axes.x_label),
            TOP + (HEIGHT - TOP - BOTTOM) / 2.0,
            TOP + (HEIGHT - TOP - BOTTOM) / 2.0,
            escape(&axes.y_label),
        )
        .expect("writing to a String");
        Canvas { out }
    }

    fn frame(&mut self) {
        let (x0, y0, x1, y1) = (LEFT, TOP, WIDTH - RIGHT, HEIGHT - BOTTOM);
        writeln!(
            self.out,
            r#"<path d="M{x0:.2} {y0:.2} L{x0:.2} {y1:.2} L{x1:.2} {y1:.2}" fill="none" stroke="black"/>"#
        )
        .expect("writing to a String");
    }

    fn tick_y(&mut self, y: f64, label: &str) {
        writeln!(
            self.out,
            r#"<text x="{:.2}" y="{:.2}" text-anchor="end">{}</text>"#,
            LEFT - 6.0,
            y + 4.0,
            escape(label)
        )
        .expect("writing to a String");
    }

    fn tick_x(&mut self, x: f64, label: &str) {
        writeln!(
            self.out,
            r#"<text x="{x:.2}" y="{:.2}" text-anchor="middle">{}</text>"#,
            HEIGHT - BOTTOM + 16.0,
            escape(label)
        )
        .expect("writing to a String");
    }

    fn legend(&mut self, n: usize, name: &str) {
        let y = TOP + 16.0 * n as f64;
        let x = WIDTH - RIGHT + 12.0;
        writeln!(
            self.out,
            r#"<rect class="legend" x="{x:.2}" y="{:.2}" width="10" height="10" fill="{}"/><text x="{:.2}" y="{:.2}">{}</text>"#,
            y,
            colour(n),
            x + 14.0,
            y + 9.0,
            escape(name)
        )
        .expect("writing to a String");
    }

    fn finish(mut self) -> String {
        self.out.push_str("</svg>\n");
        self.out
    }
}

fn span(lo: f64, hi: f64) -> (f64, f64) {
    if hi > lo {
        (lo, hi)
    } else {
        (lo - 0.5, lo + 0.5)
    }
}

fn format_tick(v: f64) -> String {
    let s = format!("{v:.3}");
    let s = s.trim_end_matches('0').trim_end_matches('.');
    if s == "-0" {
        "0".into()
    } else {
        s.into()
    }
}

fn finite(values: impl IntoIterator<Item = f64>) -> Result<()> {
    if values.into_iter().all(f64::is_finite) {
        Ok(())
    } else {
        Err(Error::Input(
            "chart data contains a non-finite value".into(),
        ))
    }
}

/// One polyline per series plus a circle per point.
pub fn line_chart(axes: &Axes, series: &[Series]) -> Result<String> {
    if series.is_empty() || series.iter().all(|s| s.points.is_empty()) {
        return Err(Error::Input("line chart needs at least one point".into()));
    }
    finite(
        series
            .iter()
            .flat_map(|s| s.points.iter().flat_map(|&(x, y)| [x, y])),
    )?;
    let all = || series.iter().flat_map(|s| s.points.iter());
    let (x_lo, x_hi) = span(
        all().map(|p| p.0).fold(f64::INFINITY, f64::min),
        all().map(|p| p.0).fold(f64::NEG_INFINITY, f64::max),
    );
    let (y_lo, y_hi) = span(
        all().map(|p| p.1).fold(f64::INFINITY, f64::min).min(0.0),
        all().map(|p| p.1).fold(f64::NEG_INFINITY, f64::max),
    );
    let px = |x: f64| LEFT + (x - x_lo) / (x_hi - x_lo) * (WIDTH - LEFT - RIGHT);
    let py = |y: f64| HEIGHT - BOTTOM - (y - y_lo) / (y_hi - y_lo) * (HEIGHT - TOP - BOTTOM);
    let mut c = Canvas::new(axes);
    c.frame();
    for n in 0..=4 {
        let v = y_lo + (y_hi - y_lo) * n as f64 / 4.0;
        c.tick_y(py(v), &format_tick(v));
    }
    for n in 0..=4 {
        let v = x_lo + (x_hi - x_lo) * n as f64 / 4.0;
        c.tick_x(px(v), &format_tick(v));
    }
    for (n, s) in series.iter().enumerate() {
        let pts: Vec<String> = s
            .points
            .iter()
            .map(|&(x, y)| format!("{:.2},{:.2}", px(x), py(y)))
            .collect();
        writeln!(
            c.out,
            r#"<polyline class="series" points="{}" fill="none" stroke="{}" stroke-width="2"/>"#,
            pts.join(" "),
            colour(n)
        )
        .expect("writing to a String");
        for &(x, y) in &s.points {
            writeln!(
                c.out,
                r#"<circle class="mark" cx="{:.2}" cy="{:.2}" r="3" fill="{}"/>"#,
                px(x),
                py(y),
                colour(n)
            )
            .expect("writing to a String");
        }
        c.legend(n, &s.name);
    }
    Ok(c.finish())
}

/// `values[series][category]`, stacked bottom-up in series order per category.
pub fn stacked_bar_chart(
    axes: &Axes,
    categories: &[String],
    series_names: &[String],
    values: &[Vec<f64>],
) -> Result<String> {
    if categories.is_empty() || values.is_empty() {
        return Err(Error::Input("stacked bar chart needs data".into()));
    }
    if values.len() != series_names.len() || values.iter().any(|v| v.len() != categories.len()) {
        return Err(Error::Input(
            "stacked bar data does not match its labels".into(),
        ));
    }
    finite(values.iter().flatten().copied())?;
    if values.iter().flatten().any(|&v| v < 0.0) {
        return Err(Error::Input("stacked bars need non-negative values".into()));
    }
    let totals: Vec<f64> = (0..categories.len())
        .map(|k| values.iter().map(|v| v[k]).sum())
        .collect();
    let top = totals.iter().copied().fold(0.0, f64::max);
    let top = if top > 0.0 { top } else { 1.0 };
    let plot_w = WIDTH - LEFT - RIGHT;
    let plot_h = HEIGHT - TOP - BOTTOM;
    let slot = plot_w / categories.len() as f64;
    let mut c = Canvas::new(axes);
    c.frame();
    for n in 0..=4 {
        let v = top * n as f64 / 4.0;
        c.tick_y(HEIGHT - BOTTOM - plot_h * n as f64 / 4.0, &format_tick(v));
    }
    for (k, cat) in categories.iter().enumerate() {
        let x = LEFT + slot * k as f64 + slot * 0.15;
        let mut base = HEIGHT - BOTTOM;
        for (s, v) in values.iter().enumerate() {
            let h = v[k] / top * plot_h;
            if h > 0.0 {
                writeln!(
                    c.out,
                    r#"<rect class="bar" x="{x:.2}" y="{:.2}" width="{:.2}" height="{h:.2}" fill="{}"/>"#,
                    base - h,
                    slot * 0.7,
                    colour(s)
                )
                .expect("writing to a String");
            }
            base -= h;
        }
        c.tick_x(LEFT + slot * (k as f64 + 0.5), cat);
    }
    for (s, name) in series_names.iter().enumerate() {
        c.legend(s, name);
    }
    Ok(c.finish())
}

/// Vertical bars up from zero for positive values and down for negative ones.
pub fn diverging_bar_chart(axes: &Axes, labels: &[String], values: &[f64]) -> Result<String> {
    if values.is_empty() {
        return Err(Error::Input("diverging bar chart needs data".into()));
    }
    if labels.len() != values.len() {
        return Err(Error::Input(
            "diverging bar data does not match its labels".into(),
        ));
    }
    finite(values.iter().copied())?;
    let reach = values.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let reach = if reach > 0.0 { reach } else { 1.0 };
    let plot_w = WIDTH - LEFT - RIGHT;
    let half = (HEIGHT - TOP - BOTTOM) / 2.0;
    let zero = TOP + half;
    let slot = plot_w / values.len() as f64;
    let mut c = Canvas::new(axes);
    c.frame();
    writeln!(
        c.out,
        r#"<line x1="{LEFT:.2}" y1="{zero:.2}" x2="{:.2}" y2="{zero:.2}" stroke="black"/>"#,
        WIDTH - RIGHT
    )
    .expect("writing to a String");
    for (v, y) in [(reach, TOP), (0.0, zero), (-reach, zero + half)] {
        c.tick_y(y, &format_tick(v));
    }
    for (k, (&v, label)) in values.iter().zip(labels).enumerate() {
        let h = v.abs() / reach * half;
        let y = if v >= 0.0 { zero - h } else { zero };
        let fill = if v >= 0.0 { "#2ca02c" } else { "#d62728" };
        writeln!(
            c.out,
            r#"<rect class="bar" x="{:.2}" y="{y:.2}" width="{:.2}" height="{h:.2}" fill="{fill}"/>"#,
            LEFT + slot * k as f64 + slot * 0.15,
            slot * 0.7
        )
        .expect("writing to a String");
        c.tick_x(LEFT + slot * (k as f64 + 0.5), label);
    }
    Ok(c.finish())
}
