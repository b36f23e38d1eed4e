//! Self-contained deterministic SVG plots.

use std::fmt::Write as _;

use crate::degree::DegreeField;
use crate::{Error, Result};

const WIDTH: f64 = 640.0;
const HEIGHT: f64 = 420.0;
const MARGIN: [f64; 4] = [60.0, 20.0, 30.0, 50.0]; // left, right, top, bottom
const COLORS: [&str; 6] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#17becf"];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Style {
    Markers,
    Line,
    Dashed,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Series {
    pub name: String,
    pub points: Vec<(f64, f64)>,
    pub style: Style,
}

impl Series {
    pub fn new(name: impl Into<String>, points: Vec<(f64, f64)>, style: Style) -> Self {
        Self { name: name.into(), points, style }
    }
}

/// An x-y chart.
#[derive(Debug, Clone, PartialEq)]
pub struct Plot {
    pub title: String,
    pub x_label: String,
    pub y_label: String,
    pub series: Vec<Series>,
}

fn ticks(lo: f64, hi: f64) -> Vec<f64> {
    let span = hi - lo;
    let raw = span / 5.0;
    let mag = 10f64.powf(raw.log10().floor());
    let step = [1.0, 2.0, 5.0, 10.0].iter().map(|m| m * mag).find(|s| span / s <= 6.0).unwrap_or(10.0 * mag);
    let mut t = (lo / step).ceil() * step;
    let mut out = Vec::new();
    while t <= hi + 1e-9 * step {
        out.push(if t.abs() < 1e-12 * step { 0.0 } else { t });
        t += step;
    }
    out
}

fn fmt_num(v: f64) -> String {
    let s = format!("{v:.4}");
    let s = s.trim_end_matches('0').trim_end_matches('.');
    if s == "-0" {
        "0".into()
    } else {
        s.to_string()
    }
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

impl Plot {
    pub fn new(title: impl Into<String>, x_label: impl Into<String>, y_label: impl Into<String>) -> Self {
        Self { title: title.into(), x_label: x_label.into(), y_label: y_label.into(), series: Vec::new() }
    }

    pub fn with(mut self, s: Series) -> Self {
        self.series.push(s);
        self
    }

    pub fn to_svg(&self) -> Result<String> {
        let pts: Vec<(f64, f64)> =
            self.series.iter().flat_map(|s| s.points.iter().copied()).filter(|p| p.0.is_finite() && p.1.is_finite()).collect();
        if pts.is_empty() {
            return Err(Error::InvalidParameter("nothing to plot".into()));
        }
        let (mut x0, mut x1, mut y0, mut y1) = (f64::INFINITY, f64::NEG_INFINITY, f64::INFINITY, f64::NEG_INFINITY);
        for (x, y) in &pts {
            x0 = x0.min(*x);
            x1 = x1.max(*x);
            y0 = y0.min(*y);
            y1 = y1.max(*y);
        }
        let pad = |a: f64, b: f64| {
            let d = if b > a { 0.05 * (b - a) } else { 0.5 * a.abs().max(1.0) };
            (a - d, b + d)
        };
        let (x0, x1) = pad(x0, x1);
        let (y0, y1) = pad(y0, y1);
        let pw = WIDTH - MARGIN[0] - MARGIN[1];
        let ph = HEIGHT - MARGIN[2] - MARGIN[3];
        let sx = |x: f64| MARGIN[0] + (x - x0) / (x1 - x0) * pw;
        let sy = |y: f64| MARGIN[2] + (1.0 - (y - y0) / (y1 - y0)) * ph;

        let mut s = String::new();
        let _ = writeln!(
            s,
            r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="11">"#
        );
        let _ = writeln!(s, r#"<rect width="{WIDTH}" height="{HEIGHT}" fill="white"/>"#);
        let _ = writeln!(s, r#"<text x="{}" y="18" text-anchor="middle" font-size="13">{}</text>"#, WIDTH / 2.0, escape(&self.title));
        let _ = writeln!(
            s,
            r#"<rect x="{}" y="{}" width="{pw}" height="{ph}" fill="none" stroke="black"/>"#,
            MARGIN[0], MARGIN[2]
        );
        for t in ticks(x0, x1) {
            let x = sx(t);
            let _ = writeln!(s, r#"<line x1="{x:.2}" y1="{:.2}" x2="{x:.2}" y2="{:.2}" stroke="black"/>"#, MARGIN[2] + ph, MARGIN[2] + ph + 4.0);
            let _ = writeln!(s, r#"<text x="{x:.2}" y="{:.2}" text-anchor="middle">{}</text>"#, MARGIN[2] + ph + 16.0, fmt_num(t));
        }
        for t in ticks(y0, y1) {
            let y = sy(t);
            let _ = writeln!(s, r#"<line x1="{:.2}" y1="{y:.2}" x2="{:.2}" y2="{y:.2}" stroke="black"/>"#, MARGIN[0] - 4.0, MARGIN[0]);
            let _ = writeln!(s, r#"<text x="{:.2}" y="{:.2}" text-anchor="end">{}</text>"#, MARGIN[0] - 6.0, y + 4.0, fmt_num(t));
        }
        let _ = writeln!(s, r#"<text x="{}" y="{}" text-anchor="middle">{}</text>"#, MARGIN[0] + pw / 2.0, HEIGHT - 12.0, escape(&self.x_label));
        let _ = writeln!(
            s,
            r#"<text x="14" y="{0}" text-anchor="middle" transform="rotate(-90 14 {0})">{1}</text>"#,
            MARGIN[2] + ph / 2.0,
            escape(&self.y_label)
        );
        for (i, ser) in self.series.iter().enumerate() {
            let color = COLORS[i % COLORS.len()];
            let fin: Vec<(f64, f64)> = ser.points.iter().copied().filter(|p| p.0.is_finite() && p.1.is_finite()).collect();
            match ser.style {
                Style::Markers => {
                    for (x, y) in &fin {
                        let _ = writeln!(s, r#"<circle cx="{:.2}" cy="{:.2}" r="3" fill="{color}"/>"#, sx(*x), sy(*y));
                    }
                }
                Style::Line | Style::Dashed => {
                    let path: Vec<String> = fin.iter().map(|(x, y)| format!("{:.2},{:.2}", sx(*x), sy(*y))).collect();
                    let dash = if ser.style == Style::Dashed { r#" stroke-dasharray="6 4""# } else { "" };
                    let _ = writeln!(s, r#"<polyline points="{}" fill="none" stroke="{color}" stroke-width="1.5"{dash}/>"#, path.join(" "));
                }
            }
            let ly = MARGIN[2] + 14.0 + 14.0 * i as f64;
            let lx = MARGIN[0] + 10.0;
            let _ = writeln!(s, r#"<rect x="{lx}" y="{}" width="10" height="3" fill="{color}"/>"#, ly - 4.0);
            let _ = writeln!(s, r#"<text x="{}" y="{ly}">{}</text>"#, lx + 14.0, escape(&ser.name));
        }
        s.push_str("</svg>\n");
        Ok(s)
    }
}

/// Heat map of a planar degree field (masked cells grey), at most `max_px`
/// samples per axis.
pub fn field_heatmap(field: &DegreeField, title: &str, max_px: usize) -> Result<String> {
    let g = &field.grid;
    if g.n != 2 || g.is_empty() {
        return Err(Error::InvalidParameter("heat maps need a nonempty planar field".into()));
    }
    let stride = g.dims[0].max(g.dims[1]).div_ceil(max_px.max(1)).max(1);
    let (nx, ny) = (g.dims[0].div_ceil(stride), g.dims[1].div_ceil(stride));
    let vmax = field.values.iter().map(|v| v.unsigned_abs()).max().unwrap_or(0).max(1) as f64;
    let px = (WIDTH - 40.0) / nx.max(ny) as f64;
    let mut s = String::new();
    let (w, h) = (nx as f64 * px + 40.0, ny as f64 * px + 50.0);
    let _ = writeln!(s, r#"<svg xmlns="http://www.w3.org/2000/svg" width="{w:.0}" height="{h:.0}" viewBox="0 0 {w:.0} {h:.0}" font-family="sans-serif" font-size="11">"#);
    let _ = writeln!(s, r#"<rect width="{w:.0}" height="{h:.0}" fill="white"/>"#);
    let _ = writeln!(s, r#"<text x="{:.1}" y="18" text-anchor="middle" font-size="13">{}</text>"#, w / 2.0, escape(title));
    for j in 0..ny {
        for i in 0..nx {
            let c = g.flatten([(i * stride).min(g.dims[0] - 1), (j * stride).min(g.dims[1] - 1), 0]);
            let fill = if field.mask[c] {
                "#bbbbbb".to_string()
            } else {
                let v = field.values[c] as f64 / vmax;
                let (r, gg, b) = if v >= 0.0 {
                    (255.0 * (1.0 - v), 255.0 * (1.0 - 0.6 * v), 255.0)
                } else {
                    (255.0, 255.0 * (1.0 + v), 255.0 * (1.0 + v))
                };
                format!("#{:02x}{:02x}{:02x}", r as u8, gg as u8, b as u8)
            };
            let y = 30.0 + (ny - 1 - j) as f64 * px;
            let _ = writeln!(s, r#"<rect x="{:.2}" y="{y:.2}" width="{:.2}" height="{:.2}" fill="{fill}"/>"#, 20.0 + i as f64 * px, px + 0.05, px + 0.05);
        }
    }
    let _ = writeln!(s, r#"<text x="20" y="{:.1}">max |deg| = {}</text>"#, h - 6.0, vmax);
    s.push_str("</svg>\n");
    Ok(s)
}
