//! SVG 1.1 polyline documents for frames and curves.

use std::fmt::Write as _;

use crate::error::{Error, Result};
use crate::fractal::CurveSamples;
use crate::scheme::SequenceFrame;

const WIDTH: f64 = 800.0;
const HEIGHT: f64 = 400.0;
const MARGIN: f64 = 40.0;

struct Bounds {
    x: (f64, f64),
    y: (f64, f64),
}

impl Bounds {
    fn of(points: &[(f64, f64)]) -> Self {
        let fold = |sel: fn(&(f64, f64)) -> f64| {
            points
                .iter()
                .map(sel)
                .filter(|v| v.is_finite())
                .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| {
                    (lo.min(v), hi.max(v))
                })
        };
        let widen = |(lo, hi): (f64, f64)| {
            if !lo.is_finite() {
                (0.0, 1.0)
            } else if hi - lo < 1e-12 {
                (lo - 0.5, hi + 0.5)
            } else {
                (lo, hi)
            }
        };
        Bounds {
            x: widen(fold(|p| p.0)),
            y: widen(fold(|p| p.1)),
        }
    }

    fn map(&self, (x, y): (f64, f64)) -> (f64, f64) {
        let sx = MARGIN + (x - self.x.0) / (self.x.1 - self.x.0) * (WIDTH - 2.0 * MARGIN);
        let sy = HEIGHT - MARGIN - (y - self.y.0) / (self.y.1 - self.y.0) * (HEIGHT - 2.0 * MARGIN);
        (sx, sy)
    }
}

fn document(points: &[(f64, f64)], include_zero: bool, title: &str) -> String {
    let mut all = points.to_vec();
    if include_zero {
        if let Some(&(x, _)) = points.first() {
            all.push((x, 0.0));
        }
    }
    let b = Bounds::of(&all);
    let mut out = String::new();
    let _ = writeln!(out, r#"<?xml version="1.0" encoding="UTF-8"?>"#);
    let _ = writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" version="1.1" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}">"#
    );
    let _ = writeln!(out, "<title>{}</title>", escape(title));
    let _ = writeln!(out, r#"<rect width="100%" height="100%" fill="white"/>"#);
    if include_zero {
        let (x0, y0) = b.map((b.x.0, 0.0));
        let (x1, _) = b.map((b.x.1, 0.0));
        let _ = writeln!(
            out,
            r##"<line x1="{x0:.3}" y1="{y0:.3}" x2="{x1:.3}" y2="{y0:.3}" stroke="#999" stroke-width="1"/>"##
        );
    }
    let coords: Vec<String> = points
        .iter()
        .filter(|p| p.0.is_finite() && p.1.is_finite())
        .map(|&p| {
            let (x, y) = b.map(p);
            format!("{x:.3},{y:.3}")
        })
        .collect();
    let _ = writeln!(
        out,
        r##"<polyline fill="none" stroke="#1f4e9c" stroke-width="1" points="{}"/>"##,
        coords.join(" ")
    );
    let _ = writeln!(out, "</svg>");
    out
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
}

/// Piecewise-linear plot of a frame over `[0, M)`.
pub fn frame_svg(frame: &SequenceFrame, title: &str) -> String {
    let step = 0.5f64.powi(frame.resolution() as i32);
    let points: Vec<(f64, f64)> = frame
        .values()
        .iter()
        .enumerate()
        .map(|(k, &v)| (k as f64 * step, v))
        .collect();
    document(&points, true, title)
}

/// Plots coordinate `x` against coordinate `y` (1-based). A one-dimensional
/// curve is drawn against `t` instead.
pub fn curve_svg(curve: &CurveSamples, x: usize, y: usize, title: &str) -> Result<String> {
    let d = curve.dimension();
    if d == 1 {
        let step = 0.5f64.powi(curve.depth as i32);
        let points: Vec<(f64, f64)> = curve
            .points
            .iter()
            .enumerate()
            .map(|(j, p)| (j as f64 * step, p[0]))
            .collect();
        return Ok(document(&points, true, title));
    }
    for c in [x, y] {
        if c == 0 || c > d {
            return Err(Error::DimensionMismatch(format!(
                "coordinate {c} is outside 1..={d}"
            )));
        }
    }
    let points: Vec<(f64, f64)> = curve.points.iter().map(|p| (p[x - 1], p[y - 1])).collect();
    Ok(document(&points, false, title))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fractal::{sample_curve, AffineOperator, AffinePair};
    use crate::linalg::{Matrix, Vector};
    use crate::scheme::Mode;

    #[test]
    fn frame_document() {
        let f = SequenceFrame::new(1, 1, Mode::Dyadic, vec![1.0, 0.5]).unwrap();
        let svg = frame_svg(&f, "a<b");
        assert!(svg.starts_with("<?xml"));
        assert!(svg.contains("<polyline"));
        assert!(svg.contains("a&lt;b"));
        assert!(svg.trim_end().ends_with("</svg>"));
        assert_eq!(svg, frame_svg(&f, "a<b"));
    }

    #[test]
    fn curve_documents() {
        let op = |t: [f64; 2]| {
            AffineOperator::new(Matrix::identity(2, 2) * 0.5, Vector::from_row_slice(&t)).unwrap()
        };
        let pair = AffinePair::new(op([0.0, 0.0]), op([0.5, 0.5])).unwrap();
        let c = sample_curve(&pair, 4).unwrap();
        assert!(curve_svg(&c, 1, 2, "c").unwrap().contains("<polyline"));
        assert!(curve_svg(&c, 1, 3, "c").is_err());
        assert!(curve_svg(&c, 0, 1, "c").is_err());
    }
}
