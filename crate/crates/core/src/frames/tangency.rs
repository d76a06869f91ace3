//! Points of `Z` where the distribution is tangent to `Z`.

use super::{project_to_zero_set, Chart, FramePair, Point, SingularCurve};
use crate::error::{Error, Result};
use crate::topology::{tau_at, TangencyRecord};

/// Unit vector spanning `Δ` at a point of `Z`, taken from the longer of
/// `X` and `Y` and flipped to agree with `reference` when given.
pub(crate) fn distribution_direction(
    frame: &FramePair,
    p: Point,
    reference: Option<[f64; 2]>,
) -> Result<[f64; 2]> {
    let [x, y] = frame.eval_frame(p)?;
    let (nx, ny) = (x[0].hypot(x[1]), y[0].hypot(y[1]));
    let (v, n) = if nx >= ny { (x, nx) } else { (y, ny) };
    if n == 0.0 {
        return Err(Error::H0Violation {
            point: p,
            reason: "X and Y vanish simultaneously, so Z is not an embedded one-dimensional submanifold"
                .into(),
        });
    }
    let mut v = [v[0] / n, v[1] / n];
    if let Some(r) = reference {
        if v[0] * r[0] + v[1] * r[1] < 0.0 {
            v = [-v[0], -v[1]];
        }
    }
    Ok(v)
}

/// `cos` of the angle between `Δ` and `∇D` at a point of `Z`: vanishes
/// exactly where `Δ` is tangent to `Z`. Returns the value and the
/// direction of `Δ` used.
pub fn tangency_indicator(
    frame: &FramePair,
    p: Point,
    reference: Option<[f64; 2]>,
) -> Result<(f64, [f64; 2])> {
    let v = distribution_direction(frame, p, reference)?;
    let g = frame.det_grad_at(p)?;
    let gn = g[0].hypot(g[1]);
    if gn == 0.0 {
        return Err(Error::NonTransversal { point: p });
    }
    Ok(((v[0] * g[0] + v[1] * g[1]) / gn, v))
}

/// Locates tangency points along a traced curve by sign changes of the
/// tangency indicator, refined by bisection to `1e-10` in arclength, and
/// attaches `τ_q` to each.
pub fn find_tangency_points(curve: &SingularCurve, chart: &Chart) -> Result<Vec<TangencyRecord>> {
    let frame = &chart.frame;
    let vertices = curve.segment_count() + 1;
    if curve.points.len() < 2 {
        return Ok(Vec::new());
    }
    let mut g = Vec::with_capacity(vertices);
    let mut dirs: Vec<[f64; 2]> = Vec::with_capacity(vertices);
    for k in 0..vertices {
        let p = curve.vertex(k as isize);
        let (val, v) = tangency_indicator(frame, p, dirs.last().copied())?;
        g.push(val);
        dirs.push(v);
    }
    if !curve.closed {
        for &k in &[0, vertices - 1] {
            if g[k].abs() < 1e-6 {
                return Err(Error::UnresolvedTangency {
                    point: curve.vertex(k as isize),
                });
            }
        }
    }
    let mut records = Vec::new();
    for k in 0..vertices - 1 {
        if (g[k] >= 0.0) == (g[k + 1] >= 0.0) {
            continue;
        }
        let a = curve.vertex(k as isize);
        let b = curve.vertex(k as isize + 1);
        let len = (b[0] - a[0]).hypot(b[1] - a[1]);
        let at = |s: f64| -> Result<(Point, f64)> {
            let p = project_to_zero_set(frame, [a[0] + s * (b[0] - a[0]), a[1] + s * (b[1] - a[1])])?;
            let (val, _) = tangency_indicator(frame, p, Some(dirs[k]))?;
            Ok((p, val))
        };
        let (mut lo, mut hi) = (0.0, 1.0);
        let lo_sign = g[k] >= 0.0;
        while (hi - lo) * len > 1e-10 && hi - lo > 1e-15 {
            let mid = 0.5 * (lo + hi);
            if (at(mid)?.1 >= 0.0) == lo_sign {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        let (p, _) = at(0.5 * (lo + hi))?;
        let location = chart.wrap(p);
        let tau_q = tau_at(chart, location)?;
        records.push(TangencyRecord {
            location,
            curve: 0,
            tau_q,
            index_sigma: None,
        });
    }
    Ok(records)
}
