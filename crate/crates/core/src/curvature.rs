//! Gaussian curvature, area form and geodesic curvature of the metric that
//! makes `(X, Y)` orthonormal off `Z`.

use crate::error::{Error, Result};
use crate::expr::ScalarField;
use crate::frames::{FramePair, Point};

/// Coefficients of `[X, Y] = c1·X + c2·Y`, valid off `Z`.
#[derive(Clone, Debug, PartialEq)]
pub struct StructureConstants {
    pub c1: ScalarField,
    pub c2: ScalarField,
}

/// Solves `[X, Y] = c1·X + c2·Y` by Cramer's rule over `det(X, Y)`.
pub fn structure_constants(frame: &FramePair) -> StructureConstants {
    let [x0, x1] = &frame.x().0;
    let [y0, y1] = &frame.y().0;
    let [b0, b1] = &frame.bracket().0;
    let d = frame.det();
    StructureConstants {
        c1: (b0 * y1 - b1 * y0) / d,
        c2: (x0 * b1 - x1 * b0) / d,
    }
}

/// `K = X(c2) - Y(c1) - c1² - c2²`.
pub fn gauss_curvature(frame: &FramePair) -> ScalarField {
    let StructureConstants { c1, c2 } = frame.structure_constants();
    frame.x().apply(c2) - frame.y().apply(c1) - c1.powi(2) - c2.powi(2)
}

/// Chart density of `dA_s = dx∧dy / det(X, Y)`, signed by the chart orientation.
pub fn area_density(frame: &FramePair) -> ScalarField {
    ScalarField::one() / frame.det()
}

/// Unsigned density `1/|det(X, Y)|` at `p`.
pub fn density_at(frame: &FramePair, p: Point) -> Result<f64> {
    let d = frame.det_at(p)?;
    if d == 0.0 {
        return Err(Error::OnSingularLocus { point: p });
    }
    Ok(1.0 / d.abs())
}

/// `+1` on `M⁺`, `-1` on `M⁻`, `0` on `Z`.
pub fn side_at(frame: &FramePair, p: Point) -> Result<i8> {
    let s = frame.signed_det_at(p)?;
    Ok(if s > 0.0 {
        1
    } else if s < 0.0 {
        -1
    } else {
        0
    })
}

/// Components of a chart vector in the frame `(X, Y)`.
pub fn frame_coords(frame: &FramePair, p: Point, u: [f64; 2]) -> Result<[f64; 2]> {
    let [x, y] = frame.eval_frame(p)?;
    let d = x[0] * y[1] - x[1] * y[0];
    if d == 0.0 {
        return Err(Error::OnSingularLocus { point: p });
    }
    Ok([(u[0] * y[1] - u[1] * y[0]) / d, (x[0] * u[1] - x[1] * u[0]) / d])
}

/// Metric tensor `g_ij` in chart coordinates.
pub fn metric_at(frame: &FramePair, p: Point) -> Result<[[f64; 2]; 2]> {
    let e0 = frame_coords(frame, p, [1.0, 0.0])?;
    let e1 = frame_coords(frame, p, [0.0, 1.0])?;
    let dot = |a: [f64; 2], b: [f64; 2]| a[0] * b[0] + a[1] * b[1];
    Ok([[dot(e0, e0), dot(e0, e1)], [dot(e1, e0), dot(e1, e1)]])
}

/// Metric length of the chart vector `u` at `p`.
pub fn metric_norm(frame: &FramePair, p: Point, u: [f64; 2]) -> Result<f64> {
    let a = frame_coords(frame, p, u)?;
    Ok(a[0].hypot(a[1]))
}

/// Signed metric angle from `u` to `v` at `p`, positive when `v` turns to
/// the left of `u` in the chart orientation.
pub fn metric_angle(frame: &FramePair, p: Point, u: [f64; 2], v: [f64; 2]) -> Result<f64> {
    let a = frame_coords(frame, p, u)?;
    let b = frame_coords(frame, p, v)?;
    let sign = frame.det_at(p)?.signum();
    Ok(sign * (a[0] * b[1] - a[1] * b[0]).atan2(a[0] * b[0] + a[1] * b[1]))
}

/// Geodesic curvature at `p` of a parameterized curve with chart velocity
/// `v` and acceleration `w`, positive when curving to the left.
pub fn kg_parametric(frame: &FramePair, p: Point, v: [f64; 2], w: [f64; 2]) -> Result<f64> {
    let [x, y] = frame.eval_frame(p)?;
    let d = x[0] * y[1] - x[1] * y[0];
    if d == 0.0 {
        return Err(Error::OnSingularLocus { point: p });
    }
    let inv = |u: [f64; 2]| [(u[0] * y[1] - u[1] * y[0]) / d, (x[0] * u[1] - x[1] * u[0]) / d];
    let a = inv(v);
    // F' = Σ_j ∂_j F v_j, with F the matrix of columns X and Y.
    let jac = frame.jacobians();
    let mut fprime = [[0.0; 2]; 2];
    for (k, jk) in jac.iter().enumerate() {
        for (i, row) in jk.iter().enumerate() {
            fprime[i][k] = row[0].eval_at(p)? * v[0] + row[1].eval_at(p)? * v[1];
        }
    }
    let fa = [
        fprime[0][0] * a[0] + fprime[0][1] * a[1],
        fprime[1][0] * a[0] + fprime[1][1] * a[1],
    ];
    let da = inv([w[0] - fa[0], w[1] - fa[1]]);
    let speed2 = a[0] * a[0] + a[1] * a[1];
    let speed = speed2.sqrt();
    let dtheta_dt = (a[0] * da[1] - a[1] * da[0]) / speed2;
    let (cos, sin) = (a[0] / speed, a[1] / speed);
    let sc = frame.structure_constants();
    let (c1, c2) = (sc.c1.eval_at(p)?, sc.c2.eval_at(p)?);
    Ok(d.signum() * (dtheta_dt / speed - c1 * cos - c2 * sin))
}

/// Geodesic curvature at every vertex of a polyline.
///
/// The frame angle of the tangent is differentiated with respect to metric
/// arclength by centered differences; ends of open curves use one-sided
/// second-order stencils.
pub fn geodesic_curvature(frame: &FramePair, points: &[Point], closed: bool) -> Result<Vec<f64>> {
    let n = points.len();
    if n < 3 {
        return Err(Error::Precondition("a curve needs at least three vertices".into()));
    }
    for &p in points {
        if frame.det_at(p)? == 0.0 {
            return Err(Error::OnSingularLocus { point: p });
        }
    }
    let idx = |k: isize| -> usize { k.rem_euclid(n as isize) as usize };
    let seg_len = |a: Point, b: Point| -> Result<f64> {
        let mid = [(a[0] + b[0]) / 2.0, (a[1] + b[1]) / 2.0];
        metric_norm(frame, mid, [b[0] - a[0], b[1] - a[1]])
    };
    // Cumulative metric arclength (extended by one period for closed curves).
    let mut s = vec![0.0; n + 1];
    for k in 0..n {
        let next = if k + 1 < n {
            points[k + 1]
        } else if closed {
            points[0]
        } else {
            s[n] = s[n - 1];
            break;
        };
        s[k + 1] = s[k] + seg_len(points[k], next)?;
    }
    let period = s[n];
    let arc = |k: isize| -> f64 {
        if closed {
            let m = k.div_euclid(n as isize) as f64;
            s[idx(k)] + m * period
        } else {
            s[k as usize]
        }
    };
    let tangent = |k: usize| -> [f64; 2] {
        let (a, b) = if closed {
            (points[idx(k as isize - 1)], points[idx(k as isize + 1)])
        } else if k == 0 {
            (points[0], points[1])
        } else if k == n - 1 {
            (points[n - 2], points[n - 1])
        } else {
            (points[k - 1], points[k + 1])
        };
        [b[0] - a[0], b[1] - a[1]]
    };
    let mut theta: Vec<f64> = Vec::with_capacity(n);
    for (k, &p) in points.iter().enumerate() {
        let a = frame_coords(frame, p, tangent(k))?;
        let mut t = a[1].atan2(a[0]);
        if let Some(&prev) = theta.last() {
            t += ((prev - t) / std::f64::consts::TAU).round() * std::f64::consts::TAU;
        }
        theta.push(t);
    }
    let theta_at = |k: isize| -> f64 {
        if closed {
            // Total turning of the frame angle over one loop, continued.
            let m = k.div_euclid(n as isize);
            let last = theta[n - 1];
            let first_again = {
                let mut t = theta[0];
                t += ((last - t) / std::f64::consts::TAU).round() * std::f64::consts::TAU;
                t
            };
            let turn = first_again - theta[0];
            theta[idx(k)] + m as f64 * turn
        } else {
            theta[k as usize]
        }
    };
    let sc = frame.structure_constants();
    let mut out = Vec::with_capacity(n);
    for (k, &p) in points.iter().enumerate() {
        let k = k as isize;
        let last = n as isize - 1;
        let (i0, i1, i2) = if closed || (k > 0 && k < last) {
            (k - 1, k, k + 1)
        } else if k == 0 {
            (0, 1, 2)
        } else {
            (last - 2, last - 1, last)
        };
        let (s0, s1, s2) = (arc(i0), arc(i1), arc(i2));
        let (t0, t1, t2) = (theta_at(i0), theta_at(i1), theta_at(i2));
        // Derivative of the interpolating parabola at arc(k).
        let sk = arc(k);
        let dtheta = t0 * (2.0 * sk - s1 - s2) / ((s0 - s1) * (s0 - s2))
            + t1 * (2.0 * sk - s0 - s2) / ((s1 - s0) * (s1 - s2))
            + t2 * (2.0 * sk - s0 - s1) / ((s2 - s0) * (s2 - s1));
        let th = theta_at(k);
        let (c1, c2) = (sc.c1.eval_at(p)?, sc.c2.eval_at(p)?);
        let d = frame.det_at(p)?;
        out.push(d.signum() * (dtheta - c1 * th.cos() - c2 * th.sin()));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::ScalarField;
    use std::f64::consts::PI;

    fn f3() -> FramePair {
        FramePair::parse(["1", "0"], ["0", "y - x^2"], 1).unwrap()
    }

    #[test]
    fn structure_constant_examples() {
        let g = FramePair::parse(["1", "0"], ["0", "x"], 1).unwrap();
        let sc = g.structure_constants();
        assert!(sc.c1.is_zero());
        assert!((sc.c2.eval(0.5, 3.0).unwrap() - 2.0).abs() < 1e-15);
        let sc = f3().structure_constants().clone();
        assert!(sc.c1.is_zero());
        let expected = ScalarField::parse("-2*x/(y - x^2)").unwrap();
        assert!(sc.c2.max_grid_difference(&expected, [-1.0, 1.0, -1.0, 1.0], 40) < 1e-12);
        let e = FramePair::euclidean();
        assert!(e.structure_constants().c1.is_zero() && e.structure_constants().c2.is_zero());
        assert!(e.curvature().is_zero());
    }

    #[test]
    fn curvature_examples() {
        let g = FramePair::parse(["1", "0"], ["0", "x"], 1).unwrap();
        assert!((g.curvature().eval(1.0, 7.0).unwrap() + 2.0).abs() < 1e-14);
        assert!((f3().curvature().eval(1.0, 0.0).unwrap() + 6.0).abs() < 1e-13);
    }

    #[test]
    fn density_examples() {
        let g = FramePair::parse(["1", "0"], ["0", "x"], 1).unwrap();
        assert_eq!(density_at(&g, [2.0, 0.0]).unwrap(), 0.5);
        assert_eq!(density_at(&f3(), [0.0, 1.0]).unwrap(), 1.0);
        assert_eq!(area_density(&FramePair::euclidean()).as_constant(), Some(1.0));
        assert_eq!(side_at(&f3(), [0.0, 1.0]).unwrap(), 1);
        assert_eq!(side_at(&f3(), [0.0, -1.0]).unwrap(), -1);
    }

    #[test]
    fn circle_has_curvature_one_over_r() {
        let r = 0.5;
        let pts: Vec<Point> = (0..400)
            .map(|k| {
                let t = 2.0 * PI * k as f64 / 400.0;
                [r * t.cos(), r * t.sin()]
            })
            .collect();
        let kg = geodesic_curvature(&FramePair::euclidean(), &pts, true).unwrap();
        assert!(kg.iter().all(|k| (k - 1.0 / r).abs() < 1e-4));
        let back: Vec<Point> = pts.iter().rev().copied().collect();
        let kg = geodesic_curvature(&FramePair::euclidean(), &back, true).unwrap();
        assert!(kg.iter().all(|k| (k + 1.0 / r).abs() < 1e-4));
    }

    #[test]
    fn horizontal_lines_are_geodesic() {
        for frame in [f3(), FramePair::parse(["1", "0"], ["0", "x"], 1).unwrap()] {
            let y = 0.37;
            let pts: Vec<Point> = (0..50).map(|k| [0.1 + 0.01 * k as f64, y]).collect();
            let kg = geodesic_curvature(&frame, &pts, false).unwrap();
            assert!(kg.iter().all(|k| k.abs() < 1e-8), "{kg:?}");
            let k = kg_parametric(&frame, [0.3, y], [1.0, 0.0], [0.0, 0.0]).unwrap();
            assert!(k.abs() < 1e-12);
        }
    }

    #[test]
    fn parametric_and_polyline_agree_on_f3_vertical_line() {
        // Vertical line x = 0.5 in the F3 model, inside M⁺.
        let frame = f3();
        let x = 0.5;
        let pts: Vec<Point> = (0..200).map(|k| [x, 0.5 + 0.002 * k as f64]).collect();
        let kg = geodesic_curvature(&frame, &pts, false).unwrap();
        for (k, p) in pts.iter().enumerate().skip(1).take(198) {
            let exact = kg_parametric(&frame, *p, [0.0, 1.0], [0.0, 0.0]).unwrap();
            assert!((kg[k] - exact).abs() < 1e-5 * exact.abs().max(1.0), "{} {}", kg[k], exact);
        }
    }

    #[test]
    fn rotation_of_frame_leaves_kg_angle_invariant() {
        let frame = f3();
        let p = [0.2, 0.7];
        let a = metric_angle(&frame, p, [1.0, 0.0], [0.0, 1.0]).unwrap();
        // Orthogonal in the metric: g = diag(1, 1/D²).
        assert!((a - PI / 2.0).abs() < 1e-14);
        let g = metric_at(&frame, p).unwrap();
        let d = 0.7 - 0.04;
        assert!((g[1][1] - 1.0 / (d * d)).abs() < 1e-12 && g[0][1].abs() < 1e-15);
    }
}
