//! Points at distance `ε` from `Z` reached by geodesics leaving `Z`
//! orthogonally.

use crate::error::{Error, Result};
use crate::frames::{FramePair, Point};
use crate::geodesics::{hamiltonian, normalize_covector, rk4_step};

/// State at the end of a shot: position and covector.
#[derive(Clone, Copy, Debug)]
pub struct Shot {
    pub q: Point,
    pub p: [f64; 2],
}

/// Follows the geodesic leaving the point `z` of `Z` into `{side·D > 0}`
/// for arclength `eps`, using `steps` RK4 steps.
pub fn shoot(frame: &FramePair, z: Point, side: f64, eps: f64, steps: usize) -> Result<Shot> {
    let g = frame.det_grad_at(z)?;
    let gn = g[0].hypot(g[1]);
    if gn == 0.0 {
        return Err(Error::OnSingularLocus { point: z });
    }
    let dir = [side * g[0] / gn, side * g[1] / gn];
    if hamiltonian(frame, z, dir)? < 1e-14 {
        return Err(Error::Transversality { point: z });
    }
    let mut p = normalize_covector(frame, z, dir)?;
    let mut q = z;
    let h = eps / steps as f64;
    for _ in 0..steps {
        (q, p) = rk4_step(frame, q, p, h)?;
    }
    Ok(Shot { q, p })
}

/// Chart velocity of the unit-speed geodesic with covector `p` at `q`.
pub fn velocity(frame: &FramePair, q: Point, p: [f64; 2]) -> Result<[f64; 2]> {
    let [x, y] = frame.eval_frame(q)?;
    let u = p[0] * x[0] + p[1] * x[1];
    let v = p[0] * y[0] + p[1] * y[1];
    Ok([u * x[0] + v * y[0], u * x[1] + v * y[1]])
}

/// Tangent of the level set of the distance at the end of a shot: the
/// metric rotation of the geodesic velocity by a right angle, with the
/// sign chosen so that its component along `axis` is positive.
pub fn front_tangent(frame: &FramePair, shot: &Shot, axis: usize) -> Result<[f64; 2]> {
    let [x, y] = frame.eval_frame(shot.q)?;
    let u = shot.p[0] * x[0] + shot.p[1] * x[1];
    let v = shot.p[0] * y[0] + shot.p[1] * y[1];
    // frame coordinates (-v, u)
    let t = [-v * x[0] + u * y[0], -v * x[1] + u * y[1]];
    Ok(if t[axis] < 0.0 { [-t[0], -t[1]] } else { t })
}
