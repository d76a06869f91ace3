//! Tangency signs `τ_q`, the section `σ` built from `Z`, winding indices,
//! Euler characteristics of `M±` and the integer identity
//! `χ(M⁺) - χ(M⁻) + τ(S) = e(E)`.

use std::collections::BTreeSet;
use std::f64::consts::PI;
use std::sync::Arc;

use rayon::prelude::*;
use serde::Serialize;

use crate::catalog::Surface;
use crate::error::{Error, Result};
use crate::frames::{
    find_tangency_points, project_to_zero_set, trace_singular_locus, Chart, Edge, FramePair, Point,
    SingularCurve,
};
use crate::curvature::frame_coords;

/// A tangency point with its sign and, once computed, its section index.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TangencyRecord {
    pub location: Point,
    /// Index of the host curve in the list returned by the tracer.
    pub curve: usize,
    pub tau_q: i8,
    pub index_sigma: Option<i64>,
}

/// Unit tangent of the level set of `D` through `p`, oriented so that `M⁺`
/// (where `αD > 0`) lies on its left.
pub(crate) fn oriented_level_tangent(frame: &FramePair, p: Point) -> Result<[f64; 2]> {
    let g = frame.det_grad_at(p)?;
    let n = g[0].hypot(g[1]);
    if n == 0.0 {
        return Err(Error::NonTransversal { point: p });
    }
    let alpha = frame.orientation_sign() as f64;
    Ok([alpha * g[1] / n, -alpha * g[0] / n])
}

// Sine of the line angle from the Z tangent to Δ, in (-π/2, π/2].
fn relative_sine(frame: &FramePair, p: Point, direction: f64) -> Result<f64> {
    let t = oriented_level_tangent(frame, p)?;
    let t = [direction * t[0], direction * t[1]];
    let v = crate::frames::tangency::distribution_direction(frame, p, Some(t))?;
    Ok(t[0] * v[1] - t[1] * v[0])
}

/// `τ_q` for the orientation of `Z` induced by `M⁺`.
pub fn tau_at(chart: &Chart, q: Point) -> Result<i8> {
    tau_with_orientation(chart, q, 1)
}

/// `τ_q` for `Z` oriented along (`direction = 1`) or against (`-1`) the
/// orientation induced by `M⁺`.
///
/// The sign of the derivative of the relative angle is estimated by
/// centered differences along `Z`, halving the step until the sign has been
/// the same over three consecutive refinements.
pub fn tau_with_orientation(chart: &Chart, q: Point, direction: i8) -> Result<i8> {
    let frame = &chart.frame;
    let dir = direction as f64;
    let t = oriented_level_tangent(frame, q)?;
    let t = [dir * t[0], dir * t[1]];
    let mut h = 1e-3 * (chart.width().min(chart.height()));
    let mut history: Vec<i8> = Vec::new();
    for _ in 0..30 {
        let plus = project_to_zero_set(frame, [q[0] + h * t[0], q[1] + h * t[1]])?;
        let minus = project_to_zero_set(frame, [q[0] - h * t[0], q[1] - h * t[1]])?;
        let diff = relative_sine(frame, plus, dir)? - relative_sine(frame, minus, dir)?;
        let s = if diff > 0.0 {
            1
        } else if diff < 0.0 {
            -1
        } else {
            0
        };
        history.push(s);
        let n = history.len();
        if n >= 3 && s != 0 && history[n - 3..].iter().all(|&v| v == s) {
            return Ok(s);
        }
        h *= 0.5;
    }
    Err(Error::UnstableSign {
        what: "tau_q",
        point: q,
    })
}

/// Total rotation of `Δ` relative to the tangent of a closed traced curve,
/// in half-turns. Equals the sum of `τ_q` over the tangency points on it.
pub fn component_degree(chart: &Chart, curve: &SingularCurve) -> Result<i64> {
    if !curve.closed {
        return Err(Error::Precondition("degree needs a closed curve".into()));
    }
    let frame = &chart.frame;
    let mut total = 0.0;
    let mut prev: Option<f64> = None;
    for k in 0..=curve.points.len() {
        let p = curve.vertex(k as isize);
        let t = oriented_level_tangent(frame, p)?;
        let v = crate::frames::tangency::distribution_direction(frame, p, None)?;
        let psi = (t[0] * v[1] - t[1] * v[0]).atan2(t[0] * v[0] + t[1] * v[1]);
        if let Some(last) = prev {
            let mut d = psi - last;
            d -= (d / PI).round() * PI;
            total += d;
        }
        prev = Some(psi);
    }
    let deg = total / PI;
    if (deg - deg.round()).abs() > 0.05 {
        return Err(Error::Resolution(format!(
            "non-integer rotation {deg} of the distribution along a component of Z"
        )));
    }
    Ok(deg.round() as i64)
}

/// Section of `E` near `Z`, given in the frame coordinates `(ζ, ρ)`.
#[derive(Clone)]
pub struct SectionField {
    field: Arc<dyn Fn(Point) -> Result<[f64; 2]> + Send + Sync>,
    orientation_sign: i8,
}

impl std::fmt::Debug for SectionField {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("SectionField")
            .field("orientation_sign", &self.orientation_sign)
            .finish_non_exhaustive()
    }
}

impl SectionField {
    pub fn new<F>(orientation_sign: i8, field: F) -> Self
    where
        F: Fn(Point) -> Result<[f64; 2]> + Send + Sync + 'static,
    {
        SectionField {
            field: Arc::new(field),
            orientation_sign,
        }
    }

    pub fn constant(v: [f64; 2]) -> Self {
        let n = v[0].hypot(v[1]);
        Self::new(1, move |_| Ok([v[0] / n, v[1] / n]))
    }

    pub fn eval(&self, p: Point) -> Result<[f64; 2]> {
        (self.field)(p)
    }

    pub fn orientation_sign(&self) -> i8 {
        self.orientation_sign
    }
}

/// The section obtained by rotating the lifted tangent of the curves
/// parallel to `Z` by a quarter turn, with the sign flipped across `Z`.
///
/// The parallel curves are the level sets of `D`. Undefined on `Z` itself
/// and where `∇D` vanishes.
pub fn build_sigma(chart: &Chart) -> SectionField {
    let frame = chart.frame.clone();
    let alpha = frame.orientation_sign();
    SectionField::new(alpha, move |p| {
        let sd = frame.signed_det_at(p)?;
        if sd == 0.0 {
            return Err(Error::OnSingularLocus { point: p });
        }
        let t = oriented_level_tangent(&frame, p)?;
        let [a, b] = frame_coords(&frame, p, t)?;
        let n = a.hypot(b);
        let s = alpha as f64 * sd.signum();
        Ok([-s * b / n, s * a / n])
    })
}

/// Degree of the section along the counterclockwise circle of the given
/// radius, measured in the orientation of `E`.
pub fn winding_index(section: &SectionField, center: Point, radius: f64) -> Result<i64> {
    const SAMPLES: usize = 512;
    let angles: Vec<f64> = (0..=SAMPLES)
        .into_par_iter()
        .map(|k| {
            let t = 2.0 * PI * k as f64 / SAMPLES as f64;
            let v = section.eval([center[0] + radius * t.cos(), center[1] + radius * t.sin()])?;
            Ok(v[1].atan2(v[0]))
        })
        .collect::<Result<_>>()?;
    let mut total = 0.0;
    for w in angles.windows(2) {
        let mut d = w[1] - w[0];
        d -= (d / (2.0 * PI)).round() * 2.0 * PI;
        if d.abs() > 0.9 * PI {
            return Err(Error::Resolution(format!(
                "phase jump of {d} between consecutive samples around ({}, {})",
                center[0], center[1]
            )));
        }
        total += d;
    }
    let turns = total / (2.0 * PI);
    if (turns - turns.round()).abs() > 0.05 {
        return Err(Error::Resolution(format!(
            "fractional winding {turns} around ({}, {})",
            center[0], center[1]
        )));
    }
    Ok(section.orientation_sign as i64 * turns.round() as i64)
}

/// Traces `Z` on the chart and returns curves with all tangency records.
pub fn tangency_records(chart: &Chart, grid: usize) -> Result<(Vec<SingularCurve>, Vec<TangencyRecord>)> {
    let curves = trace_singular_locus(chart, grid)?;
    let mut records = Vec::new();
    for (i, c) in curves.iter().enumerate() {
        for mut r in find_tangency_points(c, chart)? {
            r.curve = i;
            records.push(r);
        }
    }
    Ok((curves, records))
}

/// Fills in `index_sigma` for each record, using circles well inside the
/// distance to the nearest other tangency point.
pub fn attach_indices(chart: &Chart, records: &mut [TangencyRecord]) -> Result<()> {
    let sigma = build_sigma(chart);
    let locations: Vec<Point> = records.iter().map(|r| r.location).collect();
    for (i, r) in records.iter_mut().enumerate() {
        let nearest = locations
            .iter()
            .enumerate()
            .filter(|(j, _)| *j != i)
            .map(|(_, q)| (q[0] - r.location[0]).hypot(q[1] - r.location[1]))
            .fold(f64::INFINITY, f64::min);
        let radius = (0.25 * nearest).min(0.05 * chart.width().min(chart.height()));
        r.index_sigma = Some(winding_index(&sigma, r.location, radius)?);
    }
    Ok(())
}

/// `τ(S)`: sum of `τ_q` over all tangency points of the surface.
pub fn tau_total(surface: &Surface) -> Result<i64> {
    let (_, records) = tangency_records(surface.topology_chart(), surface.grid)?;
    Ok(records.iter().map(|r| r.tau_q as i64).sum())
}

fn vertex_point(chart: &Chart, n: usize, i: usize, j: usize) -> Point {
    let [x0, x1, y0, y1] = chart.domain;
    chart.nudge([
        x0 + (x1 - x0) * i as f64 / n as f64,
        y0 + (y1 - y0) * j as f64 / n as f64,
    ])
}

fn canonical_vertex(chart: &Chart, n: usize, i: usize, j: usize) -> (usize, usize) {
    let (mut i, mut j) = (i, j);
    if chart.periodic[0] {
        i %= n;
    }
    if chart.periodic[1] {
        j %= n;
    }
    for e in &chart.collapsed {
        match e {
            Edge::Left if i == 0 => j = 0,
            Edge::Right if i == n => j = 0,
            Edge::Bottom if j == 0 => i = 0,
            Edge::Top if j == n => i = 0,
            _ => {}
        }
    }
    (i, j)
}

/// Euler characteristic of the subcomplex of an `n × n` grid spanned by the
/// vertices on the requested side (`+1` for `M⁺`, `-1` for `M⁻`).
pub fn euler_char_at(chart: &Chart, side: i8, n: usize) -> Result<i64> {
    let frame = &chart.frame;
    let signs: Vec<Vec<bool>> = (0..=n)
        .into_par_iter()
        .map(|i| {
            (0..=n)
                .map(|j| {
                    let (ci, cj) = canonical_vertex(chart, n, i, j);
                    let v = frame.signed_det_at(vertex_point(chart, n, ci, cj))?;
                    Ok(v * side as f64 > 0.0)
                })
                .collect::<Result<Vec<bool>>>()
        })
        .collect::<Result<_>>()?;
    let inside = |v: (usize, usize)| signs[v.0][v.1];
    let mut vertices = BTreeSet::new();
    let mut edges = BTreeSet::new();
    let mut faces = 0i64;
    let cells_x = n;
    let cells_y = n;
    for i in 0..=n {
        for j in 0..=n {
            let v = canonical_vertex(chart, n, i, j);
            if inside(v) {
                vertices.insert(v);
            }
            for (di, dj) in [(1, 0), (0, 1)] {
                if i + di > n || j + dj > n {
                    continue;
                }
                let w = canonical_vertex(chart, n, i + di, j + dj);
                if v != w && inside(v) && inside(w) {
                    edges.insert(if v < w { (v, w) } else { (w, v) });
                }
            }
        }
    }
    for i in 0..cells_x {
        for j in 0..cells_y {
            let corners = [(i, j), (i + 1, j), (i + 1, j + 1), (i, j + 1)]
                .map(|(a, b)| canonical_vertex(chart, n, a, b));
            let distinct: BTreeSet<_> = corners.iter().collect();
            if distinct.len() >= 3 && corners.iter().all(|&c| inside(c)) {
                faces += 1;
            }
        }
    }
    Ok(vertices.len() as i64 - edges.len() as i64 + faces)
}

/// Euler characteristic of `M⁺` (`side = 1`) or `M⁻` (`side = -1`),
/// checked for stability under one grid refinement.
pub fn euler_char(surface: &Surface, side: i8) -> Result<i64> {
    let chart = surface.topology_chart();
    let n = surface.grid;
    let coarse = euler_char_at(chart, side, n)?;
    let fine = euler_char_at(chart, side, 2 * n)?;
    if coarse != fine {
        return Err(Error::Resolution(format!(
            "Euler characteristic changed from {coarse} to {fine} under refinement"
        )));
    }
    Ok(fine)
}

/// Everything the integer identity needs, for reporting.
#[derive(Clone, Debug, Serialize)]
pub struct TopologyReport {
    pub chi_plus: i64,
    pub chi_minus: i64,
    pub tau_total: i64,
    pub component_tau: Vec<i64>,
    pub component_degree: Vec<Option<i64>>,
    pub tangencies: Vec<TangencyRecord>,
    pub euler_number: i64,
    pub declared_euler_number: Option<i64>,
    pub residual: Option<i64>,
}

pub fn topology_report(surface: &Surface) -> Result<TopologyReport> {
    let chart = surface.topology_chart();
    let (curves, mut records) = tangency_records(chart, surface.grid)?;
    attach_indices(chart, &mut records)?;
    let chi_plus = euler_char(surface, 1)?;
    let chi_minus = euler_char(surface, -1)?;
    let tau: i64 = records.iter().map(|r| r.tau_q as i64).sum();
    let component_tau = (0..curves.len())
        .map(|i| {
            records
                .iter()
                .filter(|r| r.curve == i)
                .map(|r| r.tau_q as i64)
                .sum()
        })
        .collect();
    let component_degree = curves
        .iter()
        .map(|c| {
            if c.closed {
                component_degree(chart, c).map(Some)
            } else {
                Ok(None)
            }
        })
        .collect::<Result<_>>()?;
    let euler_number = chi_plus - chi_minus + tau;
    Ok(TopologyReport {
        chi_plus,
        chi_minus,
        tau_total: tau,
        component_tau,
        component_degree,
        tangencies: records,
        euler_number,
        declared_euler_number: surface.e_e,
        residual: surface.e_e.map(|e| euler_number - e),
    })
}

/// `χ(M⁺) - χ(M⁻) + τ(S)`, required to equal the declared `e(E)`.
pub fn euler_number_via_theorem(surface: &Surface) -> Result<i64> {
    let chi_plus = euler_char(surface, 1)?;
    let chi_minus = euler_char(surface, -1)?;
    let e = chi_plus - chi_minus + tau_total(surface)?;
    let declared = surface
        .e_e
        .ok_or_else(|| Error::Precondition(format!("surface `{}` declares no Euler number", surface.name)))?;
    if e != declared {
        return Err(Error::EulerMismatch {
            computed: e,
            declared,
        });
    }
    Ok(e)
}
