//! Normal geodesics through Hamilton's equations of
//! `H = ½((p·X)² + (p·Y)²)`, distance to `Z` by geodesic fans, and the
//! boundary of `M_ε`.

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::frames::{trace_singular_locus, Chart, FramePair, Point};
use crate::roots::{brent, golden_min};

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct GeodesicState {
    pub t: f64,
    pub q: Point,
    pub p: [f64; 2],
    pub h: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct GeodesicPath {
    pub states: Vec<GeodesicState>,
    pub step: f64,
    pub length: f64,
}

impl GeodesicPath {
    pub fn end(&self) -> &GeodesicState {
        self.states.last().expect("paths are never empty")
    }
}

pub fn hamiltonian(frame: &FramePair, q: Point, p: [f64; 2]) -> Result<f64> {
    let [x, y] = frame.eval_frame(q)?;
    let (u, v) = (p[0] * x[0] + p[1] * x[1], p[0] * y[0] + p[1] * y[1]);
    Ok(0.5 * (u * u + v * v))
}

/// Rescales `p` so that `H(q, p) = 1/2`.
pub fn normalize_covector(frame: &FramePair, q: Point, p: [f64; 2]) -> Result<[f64; 2]> {
    let h = hamiltonian(frame, q, p)?;
    if h <= 0.0 {
        return Err(Error::Transversality { point: q });
    }
    let s = (2.0 * h).sqrt();
    Ok([p[0] / s, p[1] / s])
}

fn rhs(frame: &FramePair, q: Point, p: [f64; 2]) -> Result<([f64; 2], [f64; 2])> {
    let [x, y] = frame.eval_frame(q)?;
    let u = p[0] * x[0] + p[1] * x[1];
    let v = p[0] * y[0] + p[1] * y[1];
    let qdot = [u * x[0] + v * y[0], u * x[1] + v * y[1]];
    let jac = frame.jacobians();
    let mut pdot = [0.0; 2];
    for (j, pd) in pdot.iter_mut().enumerate() {
        // p·∂_j X and p·∂_j Y
        let dx = p[0] * jac[0][0][j].eval_at(q)? + p[1] * jac[0][1][j].eval_at(q)?;
        let dy = p[0] * jac[1][0][j].eval_at(q)? + p[1] * jac[1][1][j].eval_at(q)?;
        *pd = -(u * dx + v * dy);
    }
    Ok((qdot, pdot))
}

/// One classical Runge-Kutta step of size `h`.
pub fn rk4_step(frame: &FramePair, q: Point, p: [f64; 2], h: f64) -> Result<(Point, [f64; 2])> {
    let add = |a: [f64; 2], b: [f64; 2], s: f64| [a[0] + s * b[0], a[1] + s * b[1]];
    let (k1q, k1p) = rhs(frame, q, p)?;
    let (k2q, k2p) = rhs(frame, add(q, k1q, h / 2.0), add(p, k1p, h / 2.0))?;
    let (k3q, k3p) = rhs(frame, add(q, k2q, h / 2.0), add(p, k2p, h / 2.0))?;
    let (k4q, k4p) = rhs(frame, add(q, k3q, h), add(p, k3p, h))?;
    let comb = |a: [f64; 2], k1: [f64; 2], k2: [f64; 2], k3: [f64; 2], k4: [f64; 2]| {
        [
            a[0] + h / 6.0 * (k1[0] + 2.0 * k2[0] + 2.0 * k3[0] + k4[0]),
            a[1] + h / 6.0 * (k1[1] + 2.0 * k2[1] + 2.0 * k3[1] + k4[1]),
        ]
    };
    Ok((comb(q, k1q, k2q, k3q, k4q), comb(p, k1p, k2p, k3p, k4p)))
}

/// Integrates the arclength-parameterized geodesic with initial covector
/// `p0` (normalized to `H = 1/2`) for time `total` (negative runs
/// backwards), with steps of at most `step`.
pub fn integrate_geodesic(chart: &Chart, q0: Point, p0: [f64; 2], total: f64, step: f64) -> Result<GeodesicPath> {
    if !(step > 0.0) || !total.is_finite() {
        return Err(Error::Precondition("step must be positive and the length finite".into()));
    }
    let frame = &chart.frame;
    let h0 = hamiltonian(frame, q0, p0)?;
    if (h0 - 0.5).abs() > 1e-9 {
        return Err(Error::Precondition(format!(
            "initial covector must satisfy H = 1/2, got {h0}"
        )));
    }
    let n = ((total.abs() / step).ceil() as usize).max(1);
    let h = total / n as f64;
    let mut states = Vec::with_capacity(n + 1);
    states.push(GeodesicState { t: 0.0, q: q0, p: p0, h: h0 });
    let (mut q, mut p) = (q0, p0);
    for k in 1..=n {
        let (nq, np) = rk4_step(frame, q, p, h)?;
        let t = k as f64 * h;
        if !chart.contains(nq) {
            return Err(Error::ExitedDomain { time: t, point: nq });
        }
        q = nq;
        p = np;
        states.push(GeodesicState {
            t,
            q,
            p,
            h: hamiltonian(frame, q, p)?,
        });
    }
    Ok(GeodesicPath {
        states,
        step: h.abs(),
        length: total.abs(),
    })
}

/// Unit-speed covector at `w(s)` annihilating `ẇ(s)`, pointing to the right
/// of `w` for `side = 1` and to the left for `side = -1`.
pub fn transversal_covector<W>(frame: &FramePair, w: &W, s: f64, side: i8) -> Result<(Point, [f64; 2])>
where
    W: Fn(f64) -> Point,
{
    let q = w(s);
    let e = 1e-4 * (1.0 + s.abs());
    let (a1, b1, a2, b2) = (w(s - e), w(s + e), w(s - 2.0 * e), w(s + 2.0 * e));
    let vel = [0, 1].map(|k| (8.0 * (b1[k] - a1[k]) - (b2[k] - a2[k])) / (12.0 * e));
    let side = side as f64;
    let p = [side * vel[1], -side * vel[0]];
    let h = hamiltonian(frame, q, p)?;
    let [x, y] = frame.eval_frame(q)?;
    let scale = (vel[0] * vel[0] + vel[1] * vel[1])
        * (x[0] * x[0] + x[1] * x[1] + y[0] * y[0] + y[1] * y[1]);
    if h <= 1e-12 * scale {
        return Err(Error::Transversality { point: q });
    }
    Ok((q, normalize_covector(frame, q, p)?))
}

/// The geodesic `γ_s` leaving the transversal curve `w` at `w(s)`.
pub fn geodesics_from_transversal<W>(
    chart: &Chart,
    w: &W,
    s: f64,
    side: i8,
    length: f64,
    step: f64,
) -> Result<GeodesicPath>
where
    W: Fn(f64) -> Point,
{
    let (q, p) = transversal_covector(&chart.frame, w, s, side)?;
    integrate_geodesic(chart, q, p, length, step)
}

/// Options for [`distance_to_z`].
#[derive(Clone, Copy, Debug)]
pub struct DistanceOptions {
    pub fan: usize,
    /// Step of the coarse fan scan.
    pub coarse_step: f64,
    /// Step used when refining the best direction.
    pub fine_step: f64,
    /// Longest geodesic tried.
    pub max_length: f64,
}

impl Default for DistanceOptions {
    fn default() -> Self {
        DistanceOptions {
            fan: 720,
            coarse_step: 1e-2,
            fine_step: 1e-3,
            max_length: 4.0,
        }
    }
}

/// Arclength at which the geodesic from `q` with covector direction
/// `theta` first reaches `Z`, if it does within `cap`.
fn first_hit(chart: &Chart, q: Point, theta: f64, cap: f64, step: f64) -> Result<Option<f64>> {
    let frame = &chart.frame;
    let p = match normalize_covector(frame, q, [theta.cos(), theta.sin()]) {
        Ok(p) => p,
        Err(_) => return Ok(None),
    };
    let side = frame.det_at(q)?.signum();
    let (mut cq, mut cp) = (q, p);
    let mut t = 0.0;
    while t < cap {
        let h = step.min(cap - t);
        let (nq, np) = match rk4_step(frame, cq, cp, h) {
            Ok(v) => v,
            Err(_) => return Ok(None),
        };
        if !chart.contains(nq) {
            return Ok(None);
        }
        let d = frame.det_at(nq)?;
        if d * side <= 0.0 {
            let at = |tau: f64| -> Option<f64> {
                let (mq, _) = rk4_step(frame, cq, cp, tau).ok()?;
                frame.det_at(mq).ok()
            };
            let tau = brent(at, 0.0, h, 1e-15, 0.0).unwrap_or(h);
            return Ok(Some(t + tau));
        }
        cq = nq;
        cp = np;
        t += h;
    }
    Ok(None)
}

/// First-hitting lengths for every direction of a uniform covector fan.
pub fn fan_hits(chart: &Chart, q: Point, fan: usize, cap: f64, step: f64) -> Result<Vec<Option<f64>>> {
    (0..fan)
        .into_par_iter()
        .map(|k| first_hit(chart, q, 2.0 * std::f64::consts::PI * k as f64 / fan as f64, cap, step))
        .collect()
}

/// Almost-Riemannian distance from `q` to `Z`: shortest first-hitting
/// length over a fan of geodesics, refined by golden-section search on
/// the direction around the best fan member.
pub fn distance_to_z(chart: &Chart, q: Point, opts: DistanceOptions) -> Result<f64> {
    if chart.frame.det_at(q)? == 0.0 {
        return Err(Error::OnSingularLocus { point: q });
    }
    let tau = 2.0 * std::f64::consts::PI;
    // A sparse fan first bounds the search length for the dense one.
    let sparse = fan_hits(chart, q, 48, opts.max_length, opts.coarse_step)?;
    let bound = sparse.iter().flatten().fold(opts.max_length, |m, &v| m.min(v));
    let cap = (bound * 1.05 + 2.0 * opts.coarse_step).min(opts.max_length);
    let hits = fan_hits(chart, q, opts.fan, cap, opts.coarse_step)?;
    let mut best: Option<(usize, f64)> = None;
    for (k, h) in hits.iter().enumerate() {
        if let Some(v) = h {
            if best.is_none_or(|(_, b)| *v < b) {
                best = Some((k, *v));
            }
        }
    }
    let (k, coarse) = best.ok_or(Error::NoHit { cap: opts.max_length })?;
    let dtheta = tau / opts.fan as f64;
    let theta0 = k as f64 * dtheta;
    let fine_cap = coarse * 1.5 + 4.0 * opts.coarse_step;
    let objective = |theta: f64| -> f64 {
        first_hit(chart, q, theta, fine_cap, opts.fine_step)
            .ok()
            .flatten()
            .unwrap_or(f64::INFINITY)
    };
    let (_, value) = golden_min(objective, theta0 - dtheta, theta0 + dtheta, 1e-9);
    let center = objective(theta0);
    let value = value.min(center);
    if !value.is_finite() {
        return Err(Error::NoHit { cap: fine_cap });
    }
    Ok(value)
}

/// Fronts at distance `ε` from `Z` on the `M⁺` and `M⁻` sides.
#[derive(Clone, Debug, Default)]
pub struct EpsBoundary {
    pub plus: Vec<Vec<Point>>,
    pub minus: Vec<Vec<Point>>,
}

/// Builds `∂M⁺_ε` and `∂M⁻_ε` by flowing geodesics orthogonal to `Z` for
/// arclength `ε`. Points of `Z` where the distribution is nearly tangent
/// are skipped, and swallowtails at cut points are cut off, leaving a
/// corner.
pub fn m_eps_boundary(chart: &Chart, eps: f64, grid: usize, step: f64) -> Result<EpsBoundary> {
    let frame = &chart.frame;
    let curves = trace_singular_locus(chart, grid)?;
    let mut out = EpsBoundary::default();
    for curve in &curves {
        let n = curve.segment_count() + usize::from(!curve.closed);
        let starts: Vec<Point> = (0..n).map(|k| curve.vertex(k as isize)).collect();
        for side in [1.0, -1.0] {
            let front: Vec<Option<Point>> = starts
                .par_iter()
                .map(|&z| -> Result<Option<Point>> {
                    let g = frame.det_grad_at(z)?;
                    let gn = g[0].hypot(g[1]);
                    let dir = [side * g[0] / gn, side * g[1] / gn];
                    let h = hamiltonian(frame, z, dir)?;
                    if h < 1e-6 {
                        return Ok(None);
                    }
                    let p = normalize_covector(frame, z, dir)?;
                    match integrate_geodesic(chart, z, p, eps, step) {
                        Ok(path) => Ok(Some(path.end().q)),
                        Err(Error::ExitedDomain { .. }) => Ok(None),
                        Err(e) => Err(e),
                    }
                })
                .collect::<Result<_>>()?;
            let mut pieces: Vec<Vec<Point>> = Vec::new();
            let mut current = Vec::new();
            for p in front {
                match p {
                    Some(p) => current.push(p),
                    None => {
                        if current.len() > 1 {
                            pieces.push(std::mem::take(&mut current));
                        }
                        current.clear();
                    }
                }
            }
            if current.len() > 1 {
                pieces.push(current);
            }
            // Join pieces separated by skipped near-tangency points, then
            // remove the loops created past the cut locus.
            let joined: Vec<Point> = pieces.concat();
            if joined.len() < 2 {
                continue;
            }
            let trimmed = remove_loops(&joined);
            let positive = frame.signed_det_at(trimmed[trimmed.len() / 2])? > 0.0;
            if positive {
                out.plus.push(trimmed);
            } else {
                out.minus.push(trimmed);
            }
        }
    }
    Ok(out)
}

fn segment_intersection(a: Point, b: Point, c: Point, d: Point) -> Option<Point> {
    let r = [b[0] - a[0], b[1] - a[1]];
    let s = [d[0] - c[0], d[1] - c[1]];
    let den = r[0] * s[1] - r[1] * s[0];
    if den == 0.0 {
        return None;
    }
    let qp = [c[0] - a[0], c[1] - a[1]];
    let t = (qp[0] * s[1] - qp[1] * s[0]) / den;
    let u = (qp[0] * r[1] - qp[1] * r[0]) / den;
    ((0.0..=1.0).contains(&t) && (0.0..=1.0).contains(&u)).then(|| [a[0] + t * r[0], a[1] + t * r[1]])
}

/// Removes self-intersection loops of a polyline, keeping the crossing point.
pub fn remove_loops(points: &[Point]) -> Vec<Point> {
    let mut out: Vec<Point> = Vec::with_capacity(points.len());
    let mut i = 0;
    while i < points.len() {
        out.push(points[i]);
        if i + 1 >= points.len() {
            break;
        }
        let (a, b) = (points[i], points[i + 1]);
        // Last segment crossing [a, b] that is not adjacent to it.
        let mut jump = None;
        for j in (i + 2..points.len().saturating_sub(1)).rev() {
            if let Some(x) = segment_intersection(a, b, points[j], points[j + 1]) {
                jump = Some((j, x));
                break;
            }
        }
        match jump {
            Some((j, x)) => {
                out.push(x);
                i = j + 1;
            }
            None => i += 1,
        }
    }
    out
}

#[cfg(test)]
mod tests;
