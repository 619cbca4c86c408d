//! Minimal SVG plotting: axes, polylines, markers and rect heatmaps.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SvgOptions {
    pub width: f64,
    pub height: f64,
}

impl Default for SvgOptions {
    fn default() -> Self {
        SvgOptions { width: 720.0, height: 480.0 }
    }
}

const MARGIN_LEFT: f64 = 70.0;
const MARGIN_RIGHT: f64 = 20.0;
const MARGIN_TOP: f64 = 20.0;
const MARGIN_BOTTOM: f64 = 50.0;

/// Viridis anchors, interpolated to the 256-entry table.
const ANCHORS: [(f64, f64, f64); 5] =
    [(68.0, 1.0, 84.0), (59.0, 82.0, 139.0), (33.0, 145.0, 140.0), (94.0, 201.0, 98.0), (253.0, 231.0, 37.0)];

/// Colour for `t ∈ [0, 1]` from a fixed 256-step table.
pub fn colormap(t: f64) -> String {
    let t = if t.is_finite() { t.clamp(0.0, 1.0) } else { 0.0 };
    let idx = (t * 255.0).round() as usize;
    let x = idx as f64 / 255.0 * (ANCHORS.len() - 1) as f64;
    let i = (x.floor() as usize).min(ANCHORS.len() - 2);
    let u = x - i as f64;
    let (a, b) = (ANCHORS[i], ANCHORS[i + 1]);
    let mix = |p: f64, q: f64| (p + (q - p) * u).round() as u8;
    format!("#{:02x}{:02x}{:02x}", mix(a.0, b.0), mix(a.1, b.1), mix(a.2, b.2))
}

const LINE_COLORS: [&str; 6] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#17becf"];

pub(crate) fn line_color(i: usize) -> &'static str {
    LINE_COLORS[i % LINE_COLORS.len()]
}

fn padded(lo: f64, hi: f64) -> (f64, f64) {
    if !(lo.is_finite() && hi.is_finite()) {
        return (0.0, 1.0);
    }
    if hi - lo < 1e-12 {
        let pad = lo.abs().max(1.0) * 1e-3;
        (lo - pad, hi + pad)
    } else {
        (lo, hi)
    }
}

fn nice_ticks(lo: f64, hi: f64) -> (Vec<f64>, usize) {
    let raw = (hi - lo) / 5.0;
    let mag = 10f64.powf(raw.log10().floor());
    let step = [1.0, 2.0, 5.0, 10.0].iter().map(|m| m * mag).find(|s| *s >= raw).unwrap_or(10.0 * mag);
    let decimals = (-step.log10().floor()).max(0.0) as usize;
    let first = (lo / step).ceil() as i64;
    let last = (hi / step).floor() as i64;
    ((first..=last).map(|i| i as f64 * step).collect(), decimals)
}

pub(crate) struct Plot {
    opts: SvgOptions,
    x: (f64, f64),
    y: (f64, f64),
    x_label: String,
    y_label: String,
    body: String,
}

impl Plot {
    pub(crate) fn new(opts: SvgOptions, x: (f64, f64), y: (f64, f64), x_label: &str, y_label: &str) -> Self {
        Plot {
            opts,
            x: padded(x.0, x.1),
            y: padded(y.0, y.1),
            x_label: x_label.into(),
            y_label: y_label.into(),
            body: String::new(),
        }
    }

    fn px(&self, x: f64) -> f64 {
        let w = self.opts.width - MARGIN_LEFT - MARGIN_RIGHT;
        MARGIN_LEFT + (x - self.x.0) / (self.x.1 - self.x.0) * w
    }

    fn py(&self, y: f64) -> f64 {
        let h = self.opts.height - MARGIN_TOP - MARGIN_BOTTOM;
        MARGIN_TOP + (1.0 - (y - self.y.0) / (self.y.1 - self.y.0)) * h
    }

    pub(crate) fn polyline(&mut self, xs: &[f64], ys: &[f64], color: &str) {
        let mut pts = String::new();
        for (&x, &y) in xs.iter().zip(ys) {
            let _ = write!(pts, "{:.2},{:.2} ", self.px(x), self.py(y));
        }
        let _ = writeln!(
            self.body,
            r#"<polyline fill="none" stroke="{color}" stroke-width="1.2" points="{}"/>"#,
            pts.trim_end()
        );
    }

    pub(crate) fn marker(&mut self, x: f64, y: f64, r: f64, color: &str) {
        let _ = writeln!(
            self.body,
            r#"<circle cx="{:.2}" cy="{:.2}" r="{:.2}" fill="{color}" fill-opacity="0.8"/>"#,
            self.px(x),
            self.py(y),
            r
        );
    }

    /// Heatmap cell spanning `[x0, x1] × [y0, y1]`.
    pub(crate) fn cell(&mut self, x0: f64, x1: f64, y0: f64, y1: f64, color: &str) {
        let (a, b) = (self.px(x0), self.px(x1));
        let (c, d) = (self.py(y1), self.py(y0));
        let _ = writeln!(
            self.body,
            r#"<rect x="{:.2}" y="{:.2}" width="{:.2}" height="{:.2}" fill="{color}"/>"#,
            a.min(b),
            c.min(d),
            (b - a).abs(),
            (d - c).abs()
        );
    }

    pub(crate) fn finish(self) -> String {
        let (w, h) = (self.opts.width, self.opts.height);
        let mut s = String::new();
        let _ = writeln!(
            s,
            r#"<svg xmlns="http://www.w3.org/2000/svg" width="{w}" height="{h}" viewBox="0 0 {w} {h}" font-family="sans-serif" font-size="11">"#
        );
        let _ = writeln!(s, r#"<rect width="{w}" height="{h}" fill="white"/>"#);
        s.push_str(&self.body);
        let (x0, x1) = (MARGIN_LEFT, w - MARGIN_RIGHT);
        let (y0, y1) = (h - MARGIN_BOTTOM, MARGIN_TOP);
        let _ = writeln!(
            s,
            r#"<rect x="{x0}" y="{y1}" width="{:.2}" height="{:.2}" fill="none" stroke="black"/>"#,
            x1 - x0,
            y0 - y1
        );
        let (xt, xd) = nice_ticks(self.x.0, self.x.1);
        for t in xt {
            let p = self.px(t);
            let _ = writeln!(
                s,
                r#"<line x1="{p:.2}" y1="{y0}" x2="{p:.2}" y2="{:.2}" stroke="black"/>"#,
                y0 + 5.0
            );
            let _ =
                writeln!(s, r#"<text x="{p:.2}" y="{:.2}" text-anchor="middle">{t:.xd$}</text>"#, y0 + 18.0);
        }
        let (yt, yd) = nice_ticks(self.y.0, self.y.1);
        for t in yt {
            let p = self.py(t);
            let _ = writeln!(
                s,
                r#"<line x1="{:.2}" y1="{p:.2}" x2="{x0}" y2="{p:.2}" stroke="black"/>"#,
                x0 - 5.0
            );
            let _ = writeln!(
                s,
                r#"<text x="{:.2}" y="{:.2}" text-anchor="end">{t:.yd$}</text>"#,
                x0 - 8.0,
                p + 4.0
            );
        }
        let _ = writeln!(
            s,
            r#"<text x="{:.2}" y="{:.2}" text-anchor="middle">{}</text>"#,
            0.5 * (x0 + x1),
            h - 12.0,
            xml_escape(&self.x_label)
        );
        let _ = writeln!(
            s,
            r#"<text transform="translate(16,{:.2}) rotate(-90)" text-anchor="middle">{}</text>"#,
            0.5 * (y0 + y1),
            xml_escape(&self.y_label)
        );
        s.push_str("</svg>\n");
        s
    }
}

fn xml_escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}
