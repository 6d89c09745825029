//! Minimal SVG emitter.

use crate::geom::P2;
use std::fmt::Write;

pub struct Svg {
    min: P2,
    scale: f64,
    size: f64,
    body: String,
}

impl Svg {
    /// Canvas showing the square [c - half, c + half]².
    pub fn new(c: P2, half: f64, size: f64) -> Svg {
        Svg { min: c - P2::new(half, half), scale: size / (2.0 * half), size, body: String::new() }
    }

    fn tr(&self, p: P2) -> (f64, f64) {
        ((p.x - self.min.x) * self.scale, self.size - (p.y - self.min.y) * self.scale)
    }

    pub fn line(&mut self, a: P2, b: P2, color: &str, width: f64) {
        let (x1, y1) = self.tr(a);
        let (x2, y2) = self.tr(b);
        let _ = writeln!(
            self.body,
            r#"<line x1="{x1:.3}" y1="{y1:.3}" x2="{x2:.3}" y2="{y2:.3}" stroke="{color}" stroke-width="{width}"/>"#
        );
    }

    pub fn circle(&mut self, c: P2, r: f64, stroke: &str, fill: &str, width: f64) {
        let (cx, cy) = self.tr(c);
        let _ = writeln!(
            self.body,
            r#"<circle cx="{cx:.3}" cy="{cy:.3}" r="{:.3}" stroke="{stroke}" fill="{fill}" stroke-width="{width}"/>"#,
            r * self.scale
        );
    }

    pub fn polygon(&mut self, pts: &[P2], stroke: &str, fill: &str, width: f64) {
        let mut s = String::new();
        for p in pts {
            let (x, y) = self.tr(*p);
            let _ = write!(s, "{x:.3},{y:.3} ");
        }
        let _ = writeln!(
            self.body,
            r#"<polygon points="{}" stroke="{stroke}" fill="{fill}" stroke-width="{width}"/>"#,
            s.trim_end()
        );
    }

    pub fn text(&mut self, p: P2, s: &str) {
        let (x, y) = self.tr(p);
        let _ = writeln!(self.body, r#"<text x="{x:.3}" y="{y:.3}" font-size="12">{s}</text>"#);
    }

    pub fn finish(self) -> String {
        format!(
            "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{s}\" height=\"{s}\" viewBox=\"0 0 {s} {s}\">\n<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n{}</svg>\n",
            self.body,
            s = self.size
        )
    }
}

/// Distinct color for an index.
pub fn palette(i: usize) -> &'static str {
    const C: [&str; 10] = ["#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd", "#8c564b", "#e377c2", "#7f7f7f", "#bcbd22", "#17becf"];
    C[i % C.len()]
}

/// Hue encoding of a vector's direction in its first two components.
pub fn vector_color(v: &[f64]) -> String {
    let (x, y) = (v.first().copied().unwrap_or(0.0), v.get(1).copied().unwrap_or(0.0));
    let h = (y.atan2(x).to_degrees() + 360.0) % 360.0;
    format!("hsl({h:.0},70%,45%)")
}
