//! Sampled checks of the genericity condition (H0).

use serde::Serialize;

use super::Surface;
use crate::error::{Error, Result};
use crate::expr::Var;
use crate::frames::{classify_point, find_tangency_points, trace_singular_locus, Chart, Point};

#[derive(Clone, Debug, Serialize)]
pub struct Violation {
    pub chart: String,
    pub point: Point,
    pub reason: String,
}

#[derive(Clone, Debug, Default, Serialize)]
pub struct ValidationReport {
    pub violations: Vec<Violation>,
    pub z_components: usize,
    pub tangency_points: usize,
}

impl ValidationReport {
    pub fn passed(&self) -> bool {
        self.violations.is_empty()
    }
}

const SAMPLES: usize = 64;

/// Checks every chart of the surface on a sample grid and along the traced
/// singular locus.
pub fn validate(surface: &Surface) -> Result<ValidationReport> {
    let mut report = ValidationReport::default();
    let mut seen_topology = false;
    for chart in surface.charts.iter().chain(surface.topology.iter()) {
        let is_topology = std::ptr::eq(chart, surface.topology_chart());
        seen_topology |= is_topology;
        validate_chart(chart, surface.grid, is_topology, &mut report)?;
    }
    if !seen_topology {
        validate_chart(surface.topology_chart(), surface.grid, true, &mut report)?;
    }
    if let Some(expected) = surface.tangency_count {
        if report.violations.is_empty() && report.tangency_points != expected {
            report.violations.push(Violation {
                chart: surface.topology_chart().name.clone(),
                point: [f64::NAN, f64::NAN],
                reason: format!(
                    "declared {expected} tangency points, found {}",
                    report.tangency_points
                ),
            });
        }
    }
    Ok(report)
}

fn push(report: &mut ValidationReport, chart: &Chart, point: Point, reason: impl Into<String>) {
    report.violations.push(Violation {
        chart: chart.name.clone(),
        point,
        reason: reason.into(),
    });
}

fn validate_chart(chart: &Chart, grid: usize, count: bool, report: &mut ValidationReport) -> Result<()> {
    let frame = &chart.frame;
    let [x0, x1, y0, y1] = chart.domain;
    let n = SAMPLES;
    let mut values = vec![vec![0.0; n + 1]; n + 1];
    for (i, row) in values.iter_mut().enumerate() {
        for (j, v) in row.iter_mut().enumerate() {
            let p = chart.nudge([
                x0 + (x1 - x0) * i as f64 / n as f64,
                y0 + (y1 - y0) * j as f64 / n as f64,
            ]);
            let [x, y] = match frame.eval_frame(p) {
                Ok(f) => f,
                Err(e) => {
                    push(report, chart, p, format!("frame not defined: {e}"));
                    return Ok(());
                }
            };
            if x[0].hypot(x[1]) + y[0].hypot(y[1]) == 0.0 {
                push(report, chart, p, "X and Y vanish simultaneously");
            }
            *v = frame.det_at(p)?;
        }
    }
    // Degenerate zeros: local minima of |D| without a sign change nearby.
    let scale = values.iter().flatten().fold(0.0f64, |m, v| m.max(v.abs())).max(1e-300);
    for i in 1..n {
        for j in 1..n {
            let v = values[i][j];
            let neighbours = [
                values[i - 1][j],
                values[i + 1][j],
                values[i][j - 1],
                values[i][j + 1],
            ];
            let same_sign = neighbours.iter().all(|w| (w >= &0.0) == (v >= 0.0));
            let local_min = neighbours.iter().all(|w| w.abs() >= v.abs());
            if same_sign && local_min && v.abs() < 0.1 * scale {
                let p = [
                    x0 + (x1 - x0) * i as f64 / n as f64,
                    y0 + (y1 - y0) * j as f64 / n as f64,
                ];
                if let Some(q) = degenerate_zero(chart, p, scale)? {
                    push(
                        report,
                        chart,
                        q,
                        "det(X, Y) has a zero without sign change, so Z is not an embedded \
                         one-dimensional submanifold along which det changes sign",
                    );
                    return Ok(());
                }
            }
        }
    }
    let curves = match trace_singular_locus(chart, grid) {
        Ok(c) => c,
        Err(Error::NonTransversal { point }) => {
            push(report, chart, point, "det(X, Y) does not cross zero transversally");
            return Ok(());
        }
        Err(e) => return Err(e),
    };
    for c in &curves {
        for &p in c.points.iter().step_by(4) {
            let p = chart.wrap(p);
            match classify_point(chart, p) {
                Ok(_) | Err(Error::RankIndeterminate { .. }) => {}
                Err(Error::H0Violation { reason, .. }) => {
                    push(report, chart, p, reason);
                    return Ok(());
                }
                Err(e) => return Err(e),
            }
            let g = frame.det_grad_at(p)?;
            if g[0].hypot(g[1]) < 1e-9 * scale {
                push(report, chart, p, "grad det(X, Y) vanishes on Z");
                return Ok(());
            }
        }
    }
    if count {
        report.z_components += curves.len();
        for c in &curves {
            match find_tangency_points(c, chart) {
                Ok(records) => {
                    for w in records.windows(2) {
                        let (a, b) = (w[0].location, w[1].location);
                        if (a[0] - b[0]).hypot(a[1] - b[1]) < 1e-6 {
                            push(report, chart, a, "tangency points are not isolated");
                        }
                    }
                    report.tangency_points += records.len();
                }
                Err(Error::UnstableSign { point, .. }) => {
                    push(report, chart, point, "degenerate tangency point");
                }
                Err(Error::UnresolvedTangency { point }) => {
                    push(report, chart, point, "tangency point on the chart boundary");
                }
                Err(e) => return Err(e),
            }
        }
    }
    Ok(())
}

// Damped Newton iteration on grad D = 0 from `p`; returns the limit if D
// vanishes there.
fn degenerate_zero(chart: &Chart, p: Point, scale: f64) -> Result<Option<Point>> {
    let frame = &chart.frame;
    let g = frame.det_grad();
    let h = [
        [g[0].diff(Var::X), g[0].diff(Var::Y)],
        [g[1].diff(Var::X), g[1].diff(Var::Y)],
    ];
    let mut q = p;
    for _ in 0..100 {
        let d = frame.det_at(q)?;
        if d.abs() < 1e-10 * scale {
            return Ok(Some(q));
        }
        let gr = frame.det_grad_at(q)?;
        let m = [
            [h[0][0].eval_at(q)?, h[0][1].eval_at(q)?],
            [h[1][0].eval_at(q)?, h[1][1].eval_at(q)?],
        ];
        // Levenberg-Marquardt step on the gradient system.
        let lambda = 1e-8 * (m[0][0].abs() + m[1][1].abs() + 1e-30);
        let a = [
            [m[0][0] * m[0][0] + m[1][0] * m[1][0] + lambda, m[0][0] * m[0][1] + m[1][0] * m[1][1]],
            [m[0][1] * m[0][0] + m[1][1] * m[1][0], m[0][1] * m[0][1] + m[1][1] * m[1][1] + lambda],
        ];
        let rhs = [
            -(m[0][0] * gr[0] + m[1][0] * gr[1]),
            -(m[0][1] * gr[0] + m[1][1] * gr[1]),
        ];
        let det = a[0][0] * a[1][1] - a[0][1] * a[1][0];
        if det == 0.0 {
            break;
        }
        let step = [
            (rhs[0] * a[1][1] - rhs[1] * a[0][1]) / det,
            (a[0][0] * rhs[1] - a[1][0] * rhs[0]) / det,
        ];
        q = [q[0] + step[0], q[1] + step[1]];
        if !chart.contains(q) {
            return Ok(None);
        }
        if step[0].hypot(step[1]) < 1e-15 {
            break;
        }
    }
    let d = frame.det_at(q)?;
    Ok((d.abs() < 1e-10 * scale).then_some(q))
}
