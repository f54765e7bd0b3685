//! Minimal SVG scatter plots for the worst-case SVM experiment.

use std::fmt::Write as _;

const SIZE: f64 = 480.0;
const MARGIN: f64 = 40.0;
const POSITIVE: &str = "#1f77b4";
const NEGATIVE: &str = "#d62728";

/// Affine map from a padded data box onto the square canvas.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Frame {
    pub x_min: f64,
    pub x_max: f64,
    pub y_min: f64,
    pub y_max: f64,
}

impl Frame {
    /// Smallest square box around `points`, padded by 10%.
    pub fn fit(points: &[[f64; 2]]) -> Self {
        let (mut x0, mut x1, mut y0, mut y1) = (f64::INFINITY, f64::NEG_INFINITY, f64::INFINITY, f64::NEG_INFINITY);
        for p in points {
            x0 = x0.min(p[0]);
            x1 = x1.max(p[0]);
            y0 = y0.min(p[1]);
            y1 = y1.max(p[1]);
        }
        if !x0.is_finite() {
            (x0, x1, y0, y1) = (-1.0, 1.0, -1.0, 1.0);
        }
        let half = 0.55 * (x1 - x0).max(y1 - y0).max(1e-9);
        let (cx, cy) = (0.5 * (x0 + x1), 0.5 * (y0 + y1));
        Frame {
            x_min: cx - half,
            x_max: cx + half,
            y_min: cy - half,
            y_max: cy + half,
        }
    }

    pub fn px(&self, x: f64, y: f64) -> (f64, f64) {
        let w = SIZE - 2.0 * MARGIN;
        (
            MARGIN + w * (x - self.x_min) / (self.x_max - self.x_min),
            SIZE - MARGIN - w * (y - self.y_min) / (self.y_max - self.y_min),
        )
    }

    /// Segment of `β₁x + β₂y + b = 0` inside the frame, if any.
    pub fn clip_line(&self, beta: [f64; 2], b: f64) -> Option<([f64; 2], [f64; 2])> {
        let mut hits: Vec<[f64; 2]> = Vec::new();
        if beta[1] != 0.0 {
            for x in [self.x_min, self.x_max] {
                let y = -(beta[0] * x + b) / beta[1];
                if y >= self.y_min && y <= self.y_max {
                    hits.push([x, y]);
                }
            }
        }
        if beta[0] != 0.0 {
            for y in [self.y_min, self.y_max] {
                let x = -(beta[1] * y + b) / beta[0];
                if x >= self.x_min && x <= self.x_max {
                    hits.push([x, y]);
                }
            }
        }
        hits.dedup();
        (hits.len() >= 2).then(|| (hits[0], hits[hits.len() - 1]))
    }
}

fn header(out: &mut String, title: &str) {
    let _ = writeln!(
        out,
        r#"<?xml version="1.0" encoding="UTF-8"?>
<svg xmlns="http://www.w3.org/2000/svg" width="{SIZE}" height="{SIZE}" viewBox="0 0 {SIZE} {SIZE}">
<rect x="0" y="0" width="{SIZE}" height="{SIZE}" fill="white"/>
<text x="{}" y="24" font-family="sans-serif" font-size="14" text-anchor="middle">{}</text>"#,
        SIZE / 2.0,
        escape(title)
    );
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
        .replace('"', "&quot;")
}

/// Labelled points `(x₁, x₂, y)` with the line `β₁x₁ + β₂x₂ + b = 0`.
pub fn scatter_with_boundary(points: &[[f64; 3]], frame: &Frame, beta: [f64; 2], b: f64, title: &str) -> String {
    let mut out = String::new();
    header(&mut out, title);
    if let Some((p, q)) = frame.clip_line(beta, b) {
        let (x1, y1) = frame.px(p[0], p[1]);
        let (x2, y2) = frame.px(q[0], q[1]);
        let _ = writeln!(
            out,
            r#"<line x1="{x1:.3}" y1="{y1:.3}" x2="{x2:.3}" y2="{y2:.3}" stroke="black" stroke-width="1.5"/>"#
        );
    }
    for p in points {
        let (x, y) = frame.px(p[0], p[1]);
        let color = if p[2] > 0.0 { POSITIVE } else { NEGATIVE };
        let _ = writeln!(out, r#"<circle cx="{x:.3}" cy="{y:.3}" r="4" fill="{color}"/>"#);
    }
    out.push_str("</svg>\n");
    out
}

/// Points `(x₁, x₂, w)` shaded from white (`w = 0`) to black (largest `w`).
pub fn weight_map(points: &[[f64; 3]], frame: &Frame, title: &str) -> String {
    let mut out = String::new();
    header(&mut out, title);
    let top = points.iter().map(|p| p[2]).fold(0.0, f64::max);
    for p in points {
        let (x, y) = frame.px(p[0], p[1]);
        let level = if top > 0.0 { p[2] / top } else { 0.0 };
        let shade = (255.0 * (1.0 - level)).round().clamp(0.0, 255.0) as u8;
        let _ = writeln!(
            out,
            r##"<circle cx="{x:.3}" cy="{y:.3}" r="5" fill="#{shade:02x}{shade:02x}{shade:02x}" stroke="black" stroke-width="0.5"/>"##
        );
    }
    out.push_str("</svg>\n");
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn frame_is_square_and_contains_points() {
        let f = Frame::fit(&[[0.0, 0.0], [2.0, 1.0]]);
        assert!((f.x_max - f.x_min - (f.y_max - f.y_min)).abs() < 1e-12);
        let (x, y) = f.px(2.0, 1.0);
        assert!(x > MARGIN && x < SIZE - MARGIN && y > MARGIN && y < SIZE - MARGIN);
    }

    #[test]
    fn diagonal_boundary_is_clipped() {
        let f = Frame {
            x_min: -1.0,
            x_max: 1.0,
            y_min: -1.0,
            y_max: 1.0,
        };
        let (p, q) = f.clip_line([1.0, -1.0], 0.0).unwrap();
        assert_eq!(p, [-1.0, -1.0]);
        assert_eq!(q, [1.0, 1.0]);
        assert!(f.clip_line([1.0, 0.0], -5.0).is_none());
    }
}
