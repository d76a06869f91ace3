//! ε-fronts near the tangency point of the model `X = (1,0)`,
//! `Y = (0, y - x²)`, and the defect `ε(∫_{γ⁺} k_g − ∫_{γ⁻} k_g)`.
//!
//! `γ⁺` (resp. `γ⁻`) is the part of `∂M⁺_ε` (resp. `∂M⁻_ε`) between the
//! cut locus `x = 0` and the point `P±` at distance `ε` on the geodesic
//! leaving `(a, a²)`, oriented as the boundary of `M±_ε` (the region on
//! the left): `γ⁺` runs from the axis to `P⁺`, `γ⁻` from `P⁻` to the axis.
//! With this orientation the leading `ε⁻²` parts offset, as they do along
//! the Grushin line. Their geodesic
//! curvature is recovered from Gauss–Bonnet on
//!
//! * `Ω⁺ = {0 ≤ x ≤ x(P⁺), front⁺(x) ≤ y ≤ 1}`
//! * `Ω⁻ = {0 ≤ x ≤ x(P⁻), −1 ≤ y ≤ front⁻(x)}`
//!
//! whose other sides are straight.

use std::f64::consts::PI;

use serde::Serialize;

use super::boundary::{piece_kg_integral, BoundaryPiece};
use super::fronts::{front_tangent, shoot, Shot};
use crate::curvature::metric_angle;
use crate::error::{Error, Result};
use crate::frames::{FramePair, Point};
use crate::quadrature::{integrate, QuadOptions};
use crate::roots::brent;

#[derive(Clone, Copy, Debug)]
pub struct DivergenceOptions {
    /// RK4 steps per shot of length `ε`.
    pub steps: usize,
    pub quad: QuadOptions,
    /// Set to false to replace `K` by 0 (pipeline check).
    pub include_curvature: bool,
}

impl Default for DivergenceOptions {
    fn default() -> Self {
        DivergenceOptions {
            steps: 64,
            quad: QuadOptions::with_tol(1e-11, 1e-12),
            include_curvature: true,
        }
    }
}

/// One side of the construction.
#[derive(Clone, Debug, Serialize)]
pub struct SideTerms {
    pub p: Point,
    /// Where the front meets the axis.
    pub axis_point: Point,
    pub curvature_integral: f64,
    pub segment_terms: f64,
    pub corner_angles: Vec<f64>,
    /// `∫_γ k_g` along the boundary orientation of `M±_ε`.
    pub front_kg: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct DivergenceRow {
    pub eps: f64,
    pub plus: SideTerms,
    pub minus: SideTerms,
    /// `ε(∫_{γ⁺} k_g − ∫_{γ⁻} k_g)`.
    pub value: f64,
}

pub fn model_frame() -> FramePair {
    FramePair::parse(["1", "0"], ["0", "y - x^2"], 1).expect("model frame")
}

struct Front<'a> {
    frame: &'a FramePair,
    side: f64,
    eps: f64,
    steps: usize,
    /// Parameter range `[s_axis, a]` of the `Z` points whose shots land in
    /// `0 ≤ x ≤ x(P)`.
    s_axis: f64,
    a: f64,
}

impl Front<'_> {
    fn shot(&self, s: f64) -> Result<Shot> {
        shoot(self.frame, [s, s * s], self.side, self.eps, self.steps)
    }

    /// The parameter whose shot lands on the vertical line `x = c`.
    fn param_at(&self, c: f64) -> Result<f64> {
        let f = |s: f64| self.shot(s).ok().map(|sh| sh.q[0] - c);
        brent(f, self.s_axis, self.a, 1e-15, 0.0).ok_or_else(|| {
            Error::Unconverged(format!("front at x = {c} not bracketed"))
        })
    }

    fn height_at(&self, c: f64) -> Result<f64> {
        Ok(self.shot(self.param_at(c)?)?.q[1])
    }
}

fn locate_axis(frame: &FramePair, side: f64, eps: f64, steps: usize, a: f64) -> Result<f64> {
    let x_end = |s: f64| shoot(frame, [s, s * s], side, eps, steps).map(|sh| sh.q[0]);
    if x_end(a)? <= 0.0 {
        return Err(Error::Precondition(format!(
            "the front point for a = {a}, eps = {eps} is not right of the axis"
        )));
    }
    // Walk down from `a` until the shot lands left of the axis.
    let mut hi = a;
    let mut lo = None;
    for k in 1..=200 {
        let s = a * (0.93f64).powi(k);
        match x_end(s) {
            Ok(x) if x <= 0.0 => {
                lo = Some(s);
                break;
            }
            Ok(_) => hi = s,
            Err(_) => break,
        }
    }
    let lo = lo.ok_or_else(|| Error::Unconverged(format!("front for eps = {eps} never reaches the axis")))?;
    brent(|s| x_end(s).ok(), lo, hi, 1e-15, 0.0)
        .ok_or_else(|| Error::Unconverged("axis crossing of the front".into()))
}

fn side_terms(frame: &FramePair, a: f64, eps: f64, side: f64, opts: &DivergenceOptions) -> Result<SideTerms> {
    let s_axis = locate_axis(frame, side, eps, opts.steps, a)?;
    let front = Front {
        frame,
        side,
        eps,
        steps: opts.steps,
        s_axis,
        a,
    };
    let p_shot = front.shot(a)?;
    let axis_shot = front.shot(s_axis)?;
    let p = p_shot.q;
    let axis_point = [0.0, axis_shot.q[1]];
    let t_p = front_tangent(frame, &p_shot, 0)?;
    let t_a = front_tangent(frame, &axis_shot, 0)?;
    let k = frame.curvature();

    // ∫∫ K |dA| by slices x = c.
    let far = side; // y = 1 above, y = -1 below
    let curvature_integral = if opts.include_curvature {
        integrate(
            |c| {
                let h = front.height_at(c)?;
                let (lo, hi) = if side > 0.0 { (h, far) } else { (far, h) };
                let e = integrate(
                    |y| {
                        let d = frame.det_at([c, y])?;
                        Ok(k.eval(c, y)? / d.abs())
                    },
                    lo,
                    hi,
                    &opts.quad,
                )?;
                Ok(e.value)
            },
            0.0,
            p[0],
            &opts.quad,
        )?
        .value
    } else {
        0.0
    };

    let seg = |from: Point, to: Point| piece_kg_integral(frame, &BoundaryPiece::Segment { from, to }, false, &opts.quad);
    let ang = |q: Point, u: [f64; 2], v: [f64; 2]| metric_angle(frame, q, u, v);
    let (up, down, left, right) = ([0.0, 1.0], [0.0, -1.0], [-1.0, 0.0], [1.0, 0.0]);
    let neg = |t: [f64; 2]| [-t[0], -t[1]];
    let (segment_terms, corner_angles) = if side > 0.0 {
        // counterclockwise: front (axis → P), up, left along y = 1, down the axis
        let segs = seg(p, [p[0], far])? + seg([p[0], far], [0.0, far])? + seg([0.0, far], axis_point)?;
        let angles = vec![
            ang(p, t_p, up)?,
            ang([p[0], far], up, left)?,
            ang([0.0, far], left, down)?,
            ang(axis_point, down, t_a)?,
        ];
        (segs, angles)
    } else {
        // counterclockwise: down the axis, right along y = -1, up, front (P → axis)
        let segs = seg(axis_point, [0.0, far])? + seg([0.0, far], [p[0], far])? + seg([p[0], far], p)?;
        let angles = vec![
            ang([0.0, far], down, right)?,
            ang([p[0], far], right, up)?,
            ang(p, up, neg(t_p))?,
            ang(axis_point, neg(t_a), down)?,
        ];
        (segs, angles)
    };
    // Both Ω± traverse their front in the boundary orientation of M±_ε.
    let front_kg = 2.0 * PI - curvature_integral - segment_terms - corner_angles.iter().sum::<f64>();
    Ok(SideTerms {
        p,
        axis_point,
        curvature_integral,
        segment_terms,
        corner_angles,
        front_kg,
    })
}

/// The series `ε(∫_{γ⁺} k_g − ∫_{γ⁻} k_g)` for the given `ε` values.
pub fn tangency_divergence_experiment(a: f64, eps_list: &[f64], opts: &DivergenceOptions) -> Result<Vec<DivergenceRow>> {
    if !(a > 0.0 && a < 1.0) {
        return Err(Error::Precondition(format!("need 0 < a < 1, got {a}")));
    }
    let frame = model_frame();
    eps_list
        .iter()
        .map(|&eps| {
            if !(eps > 0.0) {
                return Err(Error::Precondition(format!("eps must be positive, got {eps}")));
            }
            let plus = side_terms(&frame, a, eps, 1.0, opts)?;
            let minus = side_terms(&frame, a, eps, -1.0, opts)?;
            let value = eps * (plus.front_kg - minus.front_kg);
            Ok(DivergenceRow {
                eps,
                plus,
                minus,
                value,
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::curvature::{kg_parametric, metric_norm};

    // ∫ k_g along the front computed directly from its parameterization by
    // the foot point (s, s²), derivatives by central differences.
    fn direct_front_kg(a: f64, eps: f64, side: f64) -> f64 {
        let frame = model_frame();
        let steps = 64;
        let s_axis = locate_axis(&frame, side, eps, steps, a).unwrap();
        let q = |s: f64| shoot(&frame, [s, s * s], side, eps, steps).unwrap().q;
        let quad = QuadOptions::with_tol(1e-10, 1e-12);
        // the foot points of the minus front crowd towards the tangency point
        let e = integrate(
            |s| {
                let (h1, h2) = (1e-4 * s.min(0.1), 1e-2 * s.min(0.1));
                let (qm, q0, qp) = (q(s - h1), q(s), q(s + h1));
                let v = [(qp[0] - qm[0]) / (2.0 * h1), (qp[1] - qm[1]) / (2.0 * h1)];
                let (wm, wp) = (q(s - h2), q(s + h2));
                let w = [
                    (wp[0] - 2.0 * q0[0] + wm[0]) / (h2 * h2),
                    (wp[1] - 2.0 * q0[1] + wm[1]) / (h2 * h2),
                ];
                // γ⁺ runs with s, γ⁻ against it
                let v = [side * v[0], side * v[1]];
                Ok(kg_parametric(&frame, q0, v, w)? * metric_norm(&frame, q0, v)?)
            },
            s_axis,
            a,
            &quad,
        )
        .unwrap();
        e.value
    }

    #[test]
    fn gauss_bonnet_matches_direct_front_integral() {
        let (a, eps) = (0.1, 0.02);
        let rows = tangency_divergence_experiment(a, &[eps], &DivergenceOptions::default()).unwrap();
        for (terms, side) in [(&rows[0].plus, 1.0), (&rows[0].minus, -1.0)] {
            let direct = direct_front_kg(a, eps, side);
            assert!(
                (terms.front_kg - direct).abs() < 1e-4 * direct.abs().max(1.0),
                "side {side}: {} vs {direct}",
                terms.front_kg
            );
        }
    }

    #[test]
    fn without_curvature_only_straight_sides_remain() {
        let opts = DivergenceOptions {
            include_curvature: false,
            ..Default::default()
        };
        let rows = tangency_divergence_experiment(0.1, &[0.02, 0.03], &opts).unwrap();
        for r in rows {
            let rest = |t: &SideTerms| -t.segment_terms - t.corner_angles.iter().sum::<f64>();
            assert_eq!(r.plus.curvature_integral, 0.0);
            assert_eq!(r.minus.curvature_integral, 0.0);
            let expected = r.eps * (rest(&r.plus) - rest(&r.minus));
            assert!((r.value - expected).abs() < 1e-12 * expected.abs().max(1.0));
        }
    }

    #[test]
    fn halving_the_step_changes_little() {
        let eps = [0.01, 0.04];
        let fine = tangency_divergence_experiment(0.1, &eps, &DivergenceOptions::default()).unwrap();
        let coarse = DivergenceOptions {
            steps: 32,
            quad: QuadOptions::with_tol(1e-9, 1e-10),
            ..Default::default()
        };
        let coarse = tangency_divergence_experiment(0.1, &eps, &coarse).unwrap();
        for (f, c) in fine.iter().zip(&coarse) {
            assert!((f.value - c.value).abs() < 0.01 * f.value.abs(), "{} vs {}", f.value, c.value);
        }
    }

    #[test]
    fn rejects_bad_parameters() {
        let o = DivergenceOptions::default();
        assert!(matches!(tangency_divergence_experiment(1.5, &[0.01], &o), Err(Error::Precondition(_))));
        assert!(matches!(tangency_divergence_experiment(0.1, &[-0.01], &o), Err(Error::Precondition(_))));
    }
}
