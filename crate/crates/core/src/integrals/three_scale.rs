//! Boxes around tangency points, the box-boundary limit and the iterated
//! ε, δ2, δ1 limits of `∫ K dA_s` over a whole surface.

use std::f64::consts::PI;

use serde::Serialize;

use super::boundary::{boundary_term, BoundaryPiece};
use super::limits::{extrapolate, LevelFit, LimitSchedule};
use super::region::{integrate_K, Rect, Region};
use crate::catalog::Surface;
use crate::error::{Error, Result};
use crate::frames::{classify_point, Chart, Ownership, PointClass, Point};
use crate::quadrature::QuadOptions;
use crate::topology::{euler_char, tangency_records, tau_at};

/// A tangency point prepared for boxing.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BoxSite {
    pub chart: usize,
    pub location: Point,
    /// `|D_xx / (2 D_y)|`: near the point `Z` is `|y - q_y| ≈ ψ (x - q_x)²`.
    pub psi: f64,
    pub tau_q: i8,
}

/// Checks that `Z` is horizontal at `q` and returns `|D_xx / (2 D_y)|`.
pub fn osculating_psi(chart: &Chart, q: Point) -> Result<f64> {
    let frame = &chart.frame;
    let g = frame.det_grad_at(q)?;
    let n = g[0].hypot(g[1]);
    if n == 0.0 || g[0].abs() > 1e-6 * n {
        return Err(Error::Precondition(format!(
            "Z is not horizontal at the tangency point ({}, {}); boxes need the chart of a normal form",
            q[0], q[1]
        )));
    }
    let h = 1e-5 * (1.0 + q[0].abs());
    let dxx = (frame.det_grad_at([q[0] + h, q[1]])?[0] - frame.det_grad_at([q[0] - h, q[1]])?[0]) / (2.0 * h);
    let psi = (dxx / (2.0 * g[1])).abs();
    if !(psi > 1e-8) {
        return Err(Error::Precondition(format!(
            "Z has a degenerate contact with the horizontal at ({}, {})",
            q[0], q[1]
        )));
    }
    Ok(psi)
}

fn sign_changes(chart: &Chart, from: Point, to: Point, samples: usize) -> Result<usize> {
    let mut count = 0;
    let mut prev = chart.frame.det_at(from)?;
    for k in 1..=samples {
        let t = k as f64 / samples as f64;
        let d = chart.frame.det_at([from[0] + t * (to[0] - from[0]), from[1] + t * (to[1] - from[1])])?;
        if d == 0.0 || d.signum() != prev.signum() {
            count += 1;
        }
        prev = d;
    }
    Ok(count)
}

/// The box `[q_x ± δ1] × [q_y ± δ2]`, checked to meet `Z` only along one
/// horizontal edge.
pub fn tangency_box(chart: &Chart, q: Point, delta1: f64, delta2: f64) -> Result<Rect> {
    let b = Rect::centered(q, [delta1, delta2]);
    let n = 256;
    let vertical = sign_changes(chart, [b.x[0], b.y[0]], [b.x[0], b.y[1]], n)?
        + sign_changes(chart, [b.x[1], b.y[0]], [b.x[1], b.y[1]], n)?;
    let bottom = sign_changes(chart, [b.x[0], b.y[0]], [b.x[1], b.y[0]], n)?;
    let top = sign_changes(chart, [b.x[0], b.y[1]], [b.x[1], b.y[1]], n)?;
    if vertical > 0 || (bottom > 0) == (top > 0) {
        return Err(Error::Precondition(format!(
            "Z must cross the box around ({}, {}) on one horizontal edge only \
             (delta1 = {delta1}, delta2 = {delta2}; crossings: vertical {vertical}, bottom {bottom}, top {top})",
            q[0], q[1]
        )));
    }
    for axis in 0..2 {
        let (r, lo, hi) = if axis == 0 {
            (b.x, chart.domain[0], chart.domain[1])
        } else {
            (b.y, chart.domain[2], chart.domain[3])
        };
        if chart.period(axis).is_none() && (r[0] < lo || r[1] > hi) {
            return Err(Error::Precondition(format!(
                "box around ({}, {}) leaves the chart",
                q[0], q[1]
            )));
        }
    }
    Ok(b)
}

/// Tangency points owned by each chart of the surface. Disk-owned charts
/// are required to stay away from `Z`, which region integration checks.
pub fn box_sites(surface: &Surface) -> Result<Vec<BoxSite>> {
    let mut sites = Vec::new();
    for (i, chart) in surface.charts.iter().enumerate() {
        if !matches!(chart.ownership, Ownership::Domain) {
            continue;
        }
        let (_, records) = tangency_records(chart, surface.grid)?;
        for r in records {
            if !chart.owns(r.location) {
                continue;
            }
            sites.push(BoxSite {
                chart: i,
                location: r.location,
                psi: osculating_psi(chart, r.location)?,
                tau_q: r.tau_q,
            });
        }
    }
    Ok(sites)
}

/// `∫ K dA_s` over all charts of the surface minus the ε-band and boxes.
pub fn surface_integral(surface: &Surface, eps: f64, boxes: &[Vec<Rect>], quad: Option<QuadOptions>) -> Result<f64> {
    let mut total = 0.0;
    for (i, chart) in surface.charts.iter().enumerate() {
        let mut region = Region::new(chart).with_eps(eps);
        if let Some(b) = boxes.get(i) {
            region = region.with_boxes(b.clone());
        }
        if let Some(q) = quad {
            region = region.with_quad(q);
        }
        total += integrate_K(&region)?.value;
    }
    Ok(total)
}

/// ε-limit at one box size.
#[derive(Clone, Debug, Serialize)]
pub struct EpsLevel {
    pub delta1: f64,
    /// Schedule entry for `δ2` (a factor in relative mode).
    pub delta2: f64,
    pub boxes: Vec<Rect>,
    pub fit: LevelFit,
}

#[derive(Clone, Debug, Serialize)]
pub struct Delta2Level {
    pub delta1: f64,
    pub fit: LevelFit,
}

#[derive(Clone, Debug, Serialize)]
pub struct ThreeScale {
    pub value: f64,
    pub sites: Vec<BoxSite>,
    pub eps_levels: Vec<EpsLevel>,
    pub delta2_levels: Vec<Delta2Level>,
    /// Absent when there are no tangency points: the box limits are then
    /// trivial and the result is the plain ε-limit.
    pub delta1_fit: Option<LevelFit>,
}

/// Boxes for every site at the given scales, grouped by chart.
fn build_boxes(surface: &Surface, sites: &[BoxSite], schedule: &LimitSchedule, k: usize, delta1: f64) -> Result<Vec<Vec<Rect>>> {
    let mut boxes = vec![Vec::new(); surface.charts.len()];
    for s in sites {
        let d2 = schedule.delta2.height(k, delta1, s.psi);
        boxes[s.chart].push(tangency_box(&surface.charts[s.chart], s.location, delta1, d2)?);
    }
    Ok(boxes)
}

fn eps_limit(surface: &Surface, schedule: &LimitSchedule, boxes: &[Vec<Rect>], quad: Option<QuadOptions>) -> Result<LevelFit> {
    let values = schedule
        .eps
        .iter()
        .map(|&e| surface_integral(surface, e, boxes, quad))
        .collect::<Result<Vec<_>>>()?;
    extrapolate(&schedule.eps, &values)
}

/// `lim_{δ1} lim_{δ2} lim_{ε} ∫_{M_{ε,δ1,δ2}} K dA_s`, each limit
/// extrapolated from the schedule.
pub fn three_scale_integral(surface: &Surface, schedule: &LimitSchedule) -> Result<ThreeScale> {
    schedule.validate()?;
    let sites = box_sites(surface)?;
    if sites.is_empty() {
        let boxes = vec![Vec::new(); surface.charts.len()];
        let fit = eps_limit(surface, schedule, &boxes, None)?;
        return Ok(ThreeScale {
            value: fit.limit,
            sites,
            eps_levels: vec![EpsLevel {
                delta1: f64::NAN,
                delta2: f64::NAN,
                boxes: Vec::new(),
                fit,
            }],
            delta2_levels: Vec::new(),
            delta1_fit: None,
        });
    }
    let mut eps_levels = Vec::new();
    let mut delta2_levels = Vec::new();
    for &d1 in &schedule.delta1 {
        let mut inner = Vec::new();
        for (k, &d2) in schedule.delta2.values().iter().enumerate() {
            let boxes = build_boxes(surface, &sites, schedule, k, d1)?;
            let fit = eps_limit(surface, schedule, &boxes, None)?;
            inner.push(fit.limit);
            eps_levels.push(EpsLevel {
                delta1: d1,
                delta2: d2,
                boxes: boxes.concat(),
                fit,
            });
        }
        delta2_levels.push(Delta2Level {
            delta1: d1,
            fit: extrapolate(schedule.delta2.values(), &inner)?,
        });
    }
    let outer: Vec<f64> = delta2_levels.iter().map(|l| l.fit.limit).collect();
    let delta1_fit = extrapolate(&schedule.delta1, &outer)?;
    Ok(ThreeScale {
        value: delta1_fit.limit,
        sites,
        eps_levels,
        delta2_levels,
        delta1_fit: Some(delta1_fit),
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct GbCheck {
    pub fit: LevelFit,
    pub chi_plus: i64,
    pub chi_minus: i64,
    /// `2π(χ(M⁺) − χ(M⁻))`.
    pub expected: f64,
    pub residual: f64,
}

/// Compares the ε-limit of `∫_{M_ε} K dA_s` with `2π(χ(M⁺) − χ(M⁻))` on a
/// surface without tangency points.
pub fn gb_check_no_tangency(surface: &Surface, schedule: &LimitSchedule) -> Result<GbCheck> {
    schedule.validate()?;
    let sites = box_sites(surface)?;
    if let Some(s) = sites.first() {
        return Err(Error::Precondition(format!(
            "{} has {} tangency point(s), e.g. ({}, {}) in chart {}",
            surface.name,
            sites.len(),
            s.location[0],
            s.location[1],
            surface.charts[s.chart].name
        )));
    }
    let boxes = vec![Vec::new(); surface.charts.len()];
    let fit = eps_limit(surface, schedule, &boxes, None)?;
    let chi_plus = euler_char(surface, 1)?;
    let chi_minus = euler_char(surface, -1)?;
    let expected = 2.0 * PI * (chi_plus - chi_minus) as f64;
    Ok(GbCheck {
        residual: (fit.limit - expected).abs(),
        fit,
        chi_plus,
        chi_minus,
        expected,
    })
}

/// Boundary term of one box at fixed scales.
#[derive(Clone, Debug, Serialize)]
pub struct BoxRow {
    pub delta1: f64,
    pub delta2: f64,
    pub corner_sum: f64,
    pub edges: f64,
    pub total: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct BoxLimit {
    pub value: f64,
    pub tau_q: i8,
    /// `−2π τ_q`.
    pub expected: f64,
    pub rows: Vec<BoxRow>,
    pub delta2_fits: Vec<LevelFit>,
    pub delta1_fit: LevelFit,
}

/// `lim_{δ1} lim_{δ2} ∫_{∂B} k_g dσ_s` for the box around the tangency point
/// at the origin of the chart. `∂B` is oriented as the boundary of the
/// complement of the box and every contribution carries the sign of `αD`.
pub fn box_boundary_limit(chart: &Chart, schedule: &LimitSchedule) -> Result<BoxLimit> {
    schedule.validate()?;
    let q = [0.0, 0.0];
    if chart.frame.det_at(q)?.abs() > 1e-12 || classify_point(chart, q)? != PointClass::Tangency {
        return Err(Error::Precondition("the origin of the chart is not a tangency point".into()));
    }
    let psi = osculating_psi(chart, q)?;
    let tau_q = tau_at(chart, q)?;
    let quad = QuadOptions::with_tol(1e-12, 1e-14);
    let mut rows = Vec::new();
    let mut delta2_fits = Vec::new();
    for &d1 in &schedule.delta1 {
        let mut totals = Vec::new();
        let mut edges = Vec::new();
        for k in 0..schedule.delta2.values().len() {
            let d2 = schedule.delta2.height(k, d1, psi);
            let b = tangency_box(chart, q, d1, d2)?;
            let pieces = BoundaryPiece::rectangle(b.x, b.y, true);
            let t = boundary_term(&chart.frame, &pieces, true, true, &quad)?;
            totals.push(t.total());
            edges.push(t.smooth);
            rows.push(BoxRow {
                delta1: d1,
                delta2: d2,
                corner_sum: t.corner_sum(),
                edges: t.smooth,
                total: t.total(),
            });
        }
        if edges.last().unwrap().abs() > edges[0].abs() + 1e-12 {
            return Err(Error::Unconverged(format!(
                "vertical-edge k_g integral grows as delta2 -> 0 at delta1 = {d1}"
            )));
        }
        delta2_fits.push(extrapolate(schedule.delta2.values(), &totals)?);
    }
    let outer: Vec<f64> = delta2_fits.iter().map(|f| f.limit).collect();
    let delta1_fit = extrapolate(&schedule.delta1, &outer)?;
    Ok(BoxLimit {
        value: delta1_fit.limit,
        tau_q,
        expected: -2.0 * PI * tau_q as f64,
        rows,
        delta2_fits,
        delta1_fit,
    })
}
