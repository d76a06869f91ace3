//! Boundary terms: integrals of geodesic curvature along piecewise smooth
//! curves plus the turning angles at their corners.

use std::sync::Arc;

use serde::Serialize;

use crate::curvature::{kg_parametric, metric_angle, metric_norm};
use crate::error::{Error, Result};
use crate::frames::{FramePair, Point};
use crate::quadrature::{integrate_pieces, QuadOptions};
use crate::roots::brent;

/// Parameterized curve `t ↦ (point, velocity, acceleration)`.
pub type CurveFn = Arc<dyn Fn(f64) -> (Point, [f64; 2], [f64; 2]) + Send + Sync>;

#[derive(Clone)]
pub enum BoundaryPiece {
    Segment { from: Point, to: Point },
    Curve { f: CurveFn, t0: f64, t1: f64 },
}

impl std::fmt::Debug for BoundaryPiece {
    fn fmt(&self, fm: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            BoundaryPiece::Segment { from, to } => write!(fm, "Segment({from:?} -> {to:?})"),
            BoundaryPiece::Curve { t0, t1, .. } => write!(fm, "Curve([{t0}, {t1}])"),
        }
    }
}

impl BoundaryPiece {
    fn eval(&self, t: f64) -> (Point, [f64; 2], [f64; 2]) {
        match self {
            BoundaryPiece::Segment { from, to } => {
                let v = [to[0] - from[0], to[1] - from[1]];
                ([from[0] + t * v[0], from[1] + t * v[1]], v, [0.0, 0.0])
            }
            BoundaryPiece::Curve { f, .. } => f(t),
        }
    }

    fn range(&self) -> (f64, f64) {
        match self {
            BoundaryPiece::Segment { .. } => (0.0, 1.0),
            BoundaryPiece::Curve { t0, t1, .. } => (*t0, *t1),
        }
    }

    fn start(&self) -> (Point, [f64; 2]) {
        let (p, v, _) = self.eval(self.range().0);
        (p, v)
    }

    fn end(&self) -> (Point, [f64; 2]) {
        let (p, v, _) = self.eval(self.range().1);
        (p, v)
    }

    /// Axis-aligned rectangle `[x0,x1]×[y0,y1]` as four segments,
    /// counterclockwise from the lower left corner (clockwise if `clockwise`).
    pub fn rectangle(x: [f64; 2], y: [f64; 2], clockwise: bool) -> Vec<BoundaryPiece> {
        let mut corners = [[x[0], y[0]], [x[1], y[0]], [x[1], y[1]], [x[0], y[1]]];
        if clockwise {
            corners.reverse();
        }
        (0..4)
            .map(|k| BoundaryPiece::Segment {
                from: corners[k],
                to: corners[(k + 1) % 4],
            })
            .collect()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BoundaryTerm {
    /// `∫ k_g dσ` over the smooth pieces.
    pub smooth: f64,
    /// Turning angles at the corners, in traversal order.
    pub corner_angles: Vec<f64>,
}

impl BoundaryTerm {
    pub fn corner_sum(&self) -> f64 {
        self.corner_angles.iter().sum()
    }

    pub fn total(&self) -> f64 {
        self.smooth + self.corner_sum()
    }
}

/// Parameters where the piece crosses `Z`, found by sampling `det` on a
/// uniform grid and refining sign changes.
fn z_crossings(frame: &FramePair, piece: &BoundaryPiece, samples: usize) -> Result<Vec<f64>> {
    let (t0, t1) = piece.range();
    let det = |t: f64| frame.det_at(piece.eval(t).0).ok();
    let mut out = Vec::new();
    let mut prev = (t0, frame.det_at(piece.eval(t0).0)?);
    for k in 1..=samples {
        let t = t0 + (t1 - t0) * k as f64 / samples as f64;
        let d = frame.det_at(piece.eval(t).0)?;
        if d == 0.0 {
            out.push(t);
        } else if prev.1 != 0.0 && d.signum() != prev.1.signum() {
            if let Some(r) = brent(det, prev.0, t, 1e-15, 0.0) {
                out.push(r);
            }
        }
        prev = (t, d);
    }
    Ok(out)
}

/// `∫ k_g dσ` along one smooth piece in the chart orientation, weighted by
/// the side sign of `αD` when `signed`.
pub fn piece_kg_integral(frame: &FramePair, piece: &BoundaryPiece, signed: bool, quad: &QuadOptions) -> Result<f64> {
    let (t0, t1) = piece.range();
    let mut breaks = vec![t0];
    breaks.extend(z_crossings(frame, piece, 64)?);
    breaks.push(t1);
    let alpha = frame.orientation_sign() as f64;
    let mut f = |t: f64| -> Result<f64> {
        let (p, v, w) = piece.eval(t);
        let kg = kg_parametric(frame, p, v, w)?;
        let speed = metric_norm(frame, p, v)?;
        let weight = if signed {
            (alpha * frame.det_at(p)?).signum()
        } else {
            1.0
        };
        Ok(weight * kg * speed)
    };
    Ok(integrate_pieces(&mut f, &breaks, quad)?.value)
}

/// Geodesic-curvature integral plus corner angles of a piecewise smooth
/// curve. Corners sit between consecutive pieces (and between the last and
/// the first when `closed`). With `signed`, every contribution is weighted
/// by the sign of `αD` at its location, so that parts in `M⁻` count
/// negatively.
pub fn boundary_term(
    frame: &FramePair,
    pieces: &[BoundaryPiece],
    closed: bool,
    signed: bool,
    quad: &QuadOptions,
) -> Result<BoundaryTerm> {
    if pieces.is_empty() {
        return Err(Error::Precondition("boundary curve has no pieces".into()));
    }
    let alpha = frame.orientation_sign() as f64;
    let mut smooth = 0.0;
    for piece in pieces {
        smooth += piece_kg_integral(frame, piece, signed, quad)?;
    }
    let mut corner_angles = Vec::new();
    let n = pieces.len();
    let joints = if closed { n } else { n - 1 };
    for k in 0..joints {
        let (p, vin) = pieces[k].end();
        let (q, vout) = pieces[(k + 1) % n].start();
        if (p[0] - q[0]).hypot(p[1] - q[1]) > 1e-9 * (1.0 + p[0].hypot(p[1])) {
            return Err(Error::Precondition(format!(
                "boundary pieces {k} and {} do not meet",
                (k + 1) % n
            )));
        }
        let d = frame.det_at(p)?;
        if d == 0.0 {
            return Err(Error::OnSingularLocus { point: p });
        }
        let angle = metric_angle(frame, p, vin, vout)?;
        let weight = if signed { (alpha * d).signum() } else { 1.0 };
        corner_angles.push(weight * angle);
    }
    Ok(BoundaryTerm {
        smooth,
        corner_angles,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::integrals::fronts::shoot;
    use proptest::prelude::*;
    use std::f64::consts::PI;

    fn f3(alpha: i8) -> FramePair {
        FramePair::parse(["1", "0"], ["0", "y - x^2"], alpha).unwrap()
    }

    fn quad() -> QuadOptions {
        QuadOptions::with_tol(1e-12, 1e-14)
    }

    #[test]
    fn f3_box_corners_are_right_angles_turning_right() {
        let frame = f3(-1);
        let pieces = BoundaryPiece::rectangle([-0.3, 0.3], [-0.01, 0.01], true);
        let t = boundary_term(&frame, &pieces, true, true, &quad()).unwrap();
        for a in &t.corner_angles {
            assert!((a + PI / 2.0).abs() < 1e-12, "{a}");
        }
        assert!((t.corner_sum() + 2.0 * PI).abs() < 1e-12);
    }

    #[test]
    fn euclidean_square() {
        let pieces = BoundaryPiece::rectangle([0.0, 1.0], [0.0, 1.0], false);
        let t = boundary_term(&FramePair::euclidean(), &pieces, true, false, &quad()).unwrap();
        assert_eq!(t.smooth, 0.0);
        assert!((t.total() - 2.0 * PI).abs() < 1e-12);
    }

    #[test]
    fn horizontal_edges_contribute_nothing() {
        let frame = f3(1);
        for y in [-0.02, 0.01, 0.02] {
            for (from, to) in [([-0.3, y], [0.3, y]), ([0.3, y], [-0.3, y])] {
                let v = piece_kg_integral(&frame, &BoundaryPiece::Segment { from, to }, true, &quad()).unwrap();
                assert!(v.abs() < 1e-12, "{y}: {v}");
            }
        }
    }

    #[test]
    fn corner_on_z_is_an_error() {
        let pieces = BoundaryPiece::rectangle([0.0, 0.5], [0.0, 0.5], false);
        let r = boundary_term(&f3(1), &pieces, true, false, &quad());
        assert!(matches!(r, Err(Error::OnSingularLocus { .. })));
    }

    #[test]
    fn open_pieces_must_meet() {
        let pieces = vec![
            BoundaryPiece::Segment { from: [0.0, -1.0], to: [0.5, -1.0] },
            BoundaryPiece::Segment { from: [0.6, -1.0], to: [0.6, -0.5] },
        ];
        let r = boundary_term(&f3(1), &pieces, false, false, &quad());
        assert!(matches!(r, Err(Error::Precondition(_))));
    }

    proptest! {
        // Upward along x = c in F3: k_g = -D_x/D and ds = dy/|D|, so
        // ∫ k_g ds = [2c/D] between the ends while D < 0.
        #[test]
        fn vertical_edge_closed_form(c in 0.2f64..0.8, y0 in -0.5f64..0.0, len in 0.01f64..0.03) {
            let y1 = y0 + len;
            let piece = BoundaryPiece::Segment { from: [c, y0], to: [c, y1] };
            let v = piece_kg_integral(&f3(1), &piece, false, &quad()).unwrap();
            let exact = 2.0 * c / (y1 - c * c) - 2.0 * c / (y0 - c * c);
            prop_assert!((v - exact).abs() < 1e-10 * exact.abs().max(1.0), "{} vs {}", v, exact);
        }
    }

    // X = (1,0), Y = (0, x e^x): the ε-fronts are x = ±ε and the boundary
    // terms of M± offset: ε|∫∂M⁺ k_g − ∫∂M⁻ k_g| = |(1-ε)e^ε − (1+ε)e^{-ε}|/ε,
    // which is 2ε²/3 + O(ε⁴).
    #[test]
    fn grushin_boundary_terms_offset() {
        let frame = FramePair::parse(["1", "0"], ["0", "x*exp(x)"], 1).unwrap();
        let mut prev = f64::INFINITY;
        for eps in [0.1, 0.05, 0.02, 0.01] {
            let ends = |side: f64| -> [Point; 2] {
                let a = shoot(&frame, [0.0, 0.0], side, eps, 16).unwrap().q;
                let b = shoot(&frame, [0.0, 1.0], side, eps, 16).unwrap().q;
                [a, b]
            };
            let [p0, p1] = ends(1.0);
            let [m0, m1] = ends(-1.0);
            assert!((p0[0] - eps).abs() < 1e-12 && (m1[0] + eps).abs() < 1e-12);
            // boundary orientation: M⁺ = {x > ε} on the left going down
            let plus = piece_kg_integral(&frame, &BoundaryPiece::Segment { from: p1, to: p0 }, false, &quad()).unwrap();
            let minus = piece_kg_integral(&frame, &BoundaryPiece::Segment { from: m0, to: m1 }, false, &quad()).unwrap();
            let d = eps * (plus - minus).abs();
            let exact = ((1.0 - eps) * eps.exp() - (1.0 + eps) * (-eps).exp()).abs() / eps;
            assert!((d - exact).abs() < 1e-8 * exact, "{eps}: {d} vs {exact}");
            assert!(d < prev);
            prev = d;
        }
        assert!(prev < 1e-4);
    }
}
