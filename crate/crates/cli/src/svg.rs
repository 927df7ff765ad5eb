//! Minimal SVG plots: polylines, closed curves and dot clouds on labelled
//! axes.

use std::fmt::Write;

const WIDTH: f64 = 640.0;
const HEIGHT: f64 = 480.0;
const MARGIN: f64 = 56.0;
const PALETTE: [&str; 6] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#17becf"];

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Style {
    Line,
    Closed,
    Dots,
}

#[derive(Clone, Debug)]
pub struct Series {
    pub label: String,
    pub style: Style,
    pub points: Vec<(f64, f64)>,
}

impl Series {
    pub fn new(label: impl Into<String>, style: Style, points: Vec<(f64, f64)>) -> Self {
        Self { label: label.into(), style, points }
    }
}

#[derive(Clone, Debug, Default)]
pub struct Plot {
    pub title: String,
    pub x_label: String,
    pub y_label: String,
    /// Same scale on both axes (complex-plane plots).
    pub equal_aspect: bool,
    pub series: Vec<Series>,
}

struct Frame {
    x0: f64,
    x1: f64,
    y0: f64,
    y1: f64,
}

impl Frame {
    fn px(&self, x: f64) -> f64 {
        MARGIN + (x - self.x0) / (self.x1 - self.x0) * (WIDTH - 2.0 * MARGIN)
    }

    fn py(&self, y: f64) -> f64 {
        HEIGHT - MARGIN - (y - self.y0) / (self.y1 - self.y0) * (HEIGHT - 2.0 * MARGIN)
    }
}

fn padded(lo: f64, hi: f64) -> (f64, f64) {
    let span = hi - lo;
    if span <= 1e-12 * (lo.abs() + hi.abs()).max(1.0) {
        let mid = 0.5 * (lo + hi);
        let half = 0.5 * mid.abs().max(1.0);
        return (mid - half, mid + half);
    }
    (lo - 0.05 * span, hi + 0.05 * span)
}

impl Plot {
    fn frame(&self) -> Frame {
        let pts = self.series.iter().flat_map(|s| s.points.iter()).filter(|p| p.0.is_finite() && p.1.is_finite());
        let (mut x0, mut x1, mut y0, mut y1) = (f64::INFINITY, f64::NEG_INFINITY, f64::INFINITY, f64::NEG_INFINITY);
        for &(x, y) in pts {
            x0 = x0.min(x);
            x1 = x1.max(x);
            y0 = y0.min(y);
            y1 = y1.max(y);
        }
        if !x0.is_finite() {
            (x0, x1, y0, y1) = (-1.0, 1.0, -1.0, 1.0);
        }
        let (mut x0, mut x1) = padded(x0, x1);
        let (mut y0, mut y1) = padded(y0, y1);
        if self.equal_aspect {
            // Units per pixel equal on both axes.
            let (w, h) = (WIDTH - 2.0 * MARGIN, HEIGHT - 2.0 * MARGIN);
            let scale = ((x1 - x0) / w).max((y1 - y0) / h);
            let (cx, cy) = (0.5 * (x0 + x1), 0.5 * (y0 + y1));
            (x0, x1) = (cx - 0.5 * scale * w, cx + 0.5 * scale * w);
            (y0, y1) = (cy - 0.5 * scale * h, cy + 0.5 * scale * h);
        }
        Frame { x0, x1, y0, y1 }
    }

    pub fn render(&self) -> String {
        let f = self.frame();
        let mut out = String::new();
        let _ = writeln!(
            out,
            r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="11">"#
        );
        let _ = writeln!(out, r#"<rect width="100%" height="100%" fill="white"/>"#);
        let (left, right, top, bottom) = (MARGIN, WIDTH - MARGIN, MARGIN, HEIGHT - MARGIN);
        let _ = writeln!(
            out,
            r#"<rect x="{left}" y="{top}" width="{}" height="{}" fill="none" stroke="black"/>"#,
            right - left,
            bottom - top
        );
        for i in 0..=4 {
            let t = i as f64 / 4.0;
            let x = f.x0 + t * (f.x1 - f.x0);
            let y = f.y0 + t * (f.y1 - f.y0);
            let (px, py) = (f.px(x), f.py(y));
            let _ = writeln!(out, r##"<line x1="{px:.2}" y1="{bottom}" x2="{px:.2}" y2="{top}" stroke="#ddd"/>"##);
            let _ = writeln!(out, r##"<line x1="{left}" y1="{py:.2}" x2="{right}" y2="{py:.2}" stroke="#ddd"/>"##);
            let _ = writeln!(out, r#"<text x="{px:.2}" y="{}" text-anchor="middle">{x:.3}</text>"#, bottom + 16.0);
            let _ = writeln!(out, r#"<text x="{}" y="{:.2}" text-anchor="end">{y:.3}</text>"#, left - 4.0, py + 4.0);
        }
        if f.x0 < 0.0 && f.x1 > 0.0 {
            let px = f.px(0.0);
            let _ = writeln!(out, r##"<line x1="{px:.2}" y1="{bottom}" x2="{px:.2}" y2="{top}" stroke="#888"/>"##);
        }
        if f.y0 < 0.0 && f.y1 > 0.0 {
            let py = f.py(0.0);
            let _ = writeln!(out, r##"<line x1="{left}" y1="{py:.2}" x2="{right}" y2="{py:.2}" stroke="#888"/>"##);
        }
        let _ = writeln!(out, r#"<text x="{}" y="{}" text-anchor="middle" font-size="13">{}</text>"#, WIDTH / 2.0, top - 16.0, escape(&self.title));
        let _ = writeln!(out, r#"<text x="{}" y="{}" text-anchor="middle">{}</text>"#, WIDTH / 2.0, HEIGHT - 12.0, escape(&self.x_label));
        let _ = writeln!(
            out,
            r#"<text x="14" y="{}" text-anchor="middle" transform="rotate(-90 14 {})">{}</text>"#,
            HEIGHT / 2.0,
            HEIGHT / 2.0,
            escape(&self.y_label)
        );

        for (k, s) in self.series.iter().enumerate() {
            let color = PALETTE[k % PALETTE.len()];
            let coords: Vec<String> = s
                .points
                .iter()
                .filter(|p| p.0.is_finite() && p.1.is_finite())
                .map(|&(x, y)| format!("{:.2},{:.2}", f.px(x), f.py(y)))
                .collect();
            match s.style {
                Style::Line => {
                    let _ = writeln!(out, r#"<polyline points="{}" fill="none" stroke="{color}" stroke-width="1.5"/>"#, coords.join(" "));
                }
                Style::Closed => {
                    let _ = writeln!(out, r#"<polygon points="{}" fill="none" stroke="{color}" stroke-width="1.5"/>"#, coords.join(" "));
                }
                Style::Dots => {
                    for c in &coords {
                        let (x, y) = c.split_once(',').expect("formatted pair");
                        let _ = writeln!(out, r#"<circle cx="{x}" cy="{y}" r="2" fill="{color}"/>"#);
                    }
                }
            }
            let ly = top + 14.0 + 14.0 * k as f64;
            let _ = writeln!(out, r#"<rect x="{}" y="{}" width="10" height="10" fill="{color}"/>"#, right - 150.0, ly - 9.0);
            let _ = writeln!(out, r#"<text x="{}" y="{ly}">{}</text>"#, right - 135.0, escape(&s.label));
        }
        out.push_str("</svg>\n");
        out
    }
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}
