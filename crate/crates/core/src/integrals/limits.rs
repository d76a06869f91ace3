//! Schedules for the iterated limits `δ1 → 0`, `δ2 → 0`, `ε → 0` and the
//! fit `A + B h^p` used to extrapolate each level.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::roots::golden_min;

/// The three scales, listed innermost first in [`LimitSchedule::order`].
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum Scale {
    Eps,
    Delta2,
    Delta1,
}

/// How box heights are chosen.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub enum Delta2 {
    /// `δ2` taken literally.
    Absolute(Vec<f64>),
    /// `δ2 = c ψ_q δ1²`, where `y = ψ_q x²` is the osculating parabola of
    /// `Z` at the tangency point: keeps `Z ∩ ∂B` on a horizontal edge.
    Relative(Vec<f64>),
}

impl Delta2 {
    pub fn values(&self) -> &[f64] {
        match self {
            Delta2::Absolute(v) | Delta2::Relative(v) => v,
        }
    }

    /// Box half-height for the given `δ1` and `ψ_q`.
    pub fn height(&self, k: usize, delta1: f64, psi: f64) -> f64 {
        match self {
            Delta2::Absolute(v) => v[k],
            Delta2::Relative(v) => v[k] * psi * delta1 * delta1,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct LimitSchedule {
    pub eps: Vec<f64>,
    pub delta2: Delta2,
    pub delta1: Vec<f64>,
    /// Order in which limits are taken, innermost first.
    pub order: [Scale; 3],
}

impl Default for LimitSchedule {
    fn default() -> Self {
        LimitSchedule {
            eps: vec![4e-3, 2e-3, 1e-3, 5e-4],
            delta2: Delta2::Relative(vec![0.1, 0.05, 0.025, 0.0125]),
            delta1: vec![0.6, 0.5, 0.4, 0.3],
            order: [Scale::Eps, Scale::Delta2, Scale::Delta1],
        }
    }
}

impl LimitSchedule {
    /// Only the ε level is used (surfaces without tangency points).
    pub fn eps_only(eps: Vec<f64>) -> Self {
        LimitSchedule {
            eps,
            ..Default::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.order != [Scale::Eps, Scale::Delta2, Scale::Delta1] {
            return Err(Error::LimitOrder(format!(
                "limits must be taken as eps, then delta2, then delta1 (innermost first); got {:?}",
                self.order
            )));
        }
        check_sequence("eps", &self.eps)?;
        check_sequence("delta2", self.delta2.values())?;
        check_sequence("delta1", &self.delta1)?;
        if let Delta2::Relative(c) = &self.delta2 {
            if c[0] >= 1.0 {
                return Err(Error::Precondition(format!(
                    "relative delta2 factors must be below 1, got {}",
                    c[0]
                )));
            }
        }
        Ok(())
    }
}

fn check_sequence(name: &str, v: &[f64]) -> Result<()> {
    if v.len() < 4 {
        return Err(Error::Precondition(format!("{name} schedule needs at least 4 values, got {}", v.len())));
    }
    if v.iter().any(|x| !(x.is_finite() && *x > 0.0)) {
        return Err(Error::Precondition(format!("{name} schedule must be positive")));
    }
    if v.windows(2).any(|w| w[1] >= w[0]) {
        return Err(Error::Precondition(format!("{name} schedule must be strictly decreasing")));
    }
    Ok(())
}

/// Result of fitting `A + B h^p` to the tail of a sequence.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct LevelFit {
    pub h: Vec<f64>,
    pub values: Vec<f64>,
    /// Extrapolated limit `A`.
    pub limit: f64,
    pub b: f64,
    /// Fitted exponent; 0 when the sequence is constant.
    pub p: f64,
    /// RMS residual of the fit.
    pub residual: f64,
}

const P_RANGE: (f64, f64) = (0.5, 4.0);

// Least squares A, B for fixed p; returns (A, B, sum of squared residuals).
fn linear_fit(h: &[f64], v: &[f64], p: f64) -> (f64, f64, f64) {
    let n = h.len() as f64;
    let x: Vec<f64> = h.iter().map(|t| t.powf(p)).collect();
    let mx = x.iter().sum::<f64>() / n;
    let mv = v.iter().sum::<f64>() / n;
    let sxx: f64 = x.iter().map(|a| (a - mx) * (a - mx)).sum();
    let sxv: f64 = x.iter().zip(v).map(|(a, b)| (a - mx) * (b - mv)).sum();
    let b = if sxx > 0.0 { sxv / sxx } else { 0.0 };
    let a = mv - b * mx;
    let ss = x.iter().zip(v).map(|(xi, vi)| (a + b * xi - vi).powi(2)).sum();
    (a, b, ss)
}

/// Fits `v ≈ A + B h^p` over the last 4 points, `p ∈ [0.5, 4]` by a scan
/// followed by golden section.
pub fn extrapolate(h: &[f64], v: &[f64]) -> Result<LevelFit> {
    if h.len() != v.len() || h.len() < 4 {
        return Err(Error::Precondition(format!(
            "extrapolation needs at least 4 matching points, got {} and {}",
            h.len(),
            v.len()
        )));
    }
    if v.iter().any(|x| !x.is_finite()) {
        return Err(Error::Unconverged("non-finite value in limit sequence".into()));
    }
    let h = &h[h.len() - 4..];
    let v = &v[v.len() - 4..];
    let scale = v.iter().fold(0.0f64, |m, x| m.max(x.abs()));
    let spread = v.iter().fold(f64::NEG_INFINITY, |m, x| m.max(*x)) - v.iter().fold(f64::INFINITY, |m, x| m.min(*x));
    if spread <= 1e-13 * scale.max(1e-300) {
        return Ok(LevelFit {
            h: h.to_vec(),
            values: v.to_vec(),
            limit: v[3],
            b: 0.0,
            p: 0.0,
            residual: 0.0,
        });
    }
    let n = 70;
    let step = (P_RANGE.1 - P_RANGE.0) / n as f64;
    let best = (0..=n)
        .map(|k| P_RANGE.0 + step * k as f64)
        .map(|p| (p, linear_fit(h, v, p).2))
        .fold((P_RANGE.0, f64::INFINITY), |acc, c| if c.1 < acc.1 { c } else { acc });
    let lo = (best.0 - step).max(P_RANGE.0);
    let hi = (best.0 + step).min(P_RANGE.1);
    let (p, _) = golden_min(|p| linear_fit(h, v, p).2, lo, hi, 1e-10);
    let (a, b, ss) = linear_fit(h, v, p);
    Ok(LevelFit {
        h: h.to_vec(),
        values: v.to_vec(),
        limit: a,
        b,
        p,
        residual: (ss / 4.0).sqrt(),
    })
}
