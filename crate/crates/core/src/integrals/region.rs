//! `∫ K dA_s` over a chart minus an ε-band around `Z` and a set of boxes.
//!
//! Integration is iterated: the inner variable runs along the chart axis
//! that `Z` crosses transversally, so each slice meets `Z` at isolated
//! points. Around each crossing the band `{d(·, Z) < ε}` is bounded by the
//! landing points of the two geodesics that leave `Z` orthogonally and hit
//! the slice after arclength `ε`.

use serde::Serialize;

use super::fronts::shoot;
use crate::error::{Error, Result};
use crate::frames::{trace_singular_locus, Chart, FramePair, Ownership, Point};
use crate::quadrature::{integrate, integrate_pieces, integrate_scaled, Estimate, QuadOptions};
use crate::roots::brent;

/// Axis-aligned chart rectangle `[x0,x1]×[y0,y1]`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Rect {
    pub x: [f64; 2],
    pub y: [f64; 2],
}

impl Rect {
    pub fn centered(center: Point, half: [f64; 2]) -> Rect {
        Rect {
            x: [center[0] - half[0], center[0] + half[0]],
            y: [center[1] - half[1], center[1] + half[1]],
        }
    }

    fn range(&self, axis: usize) -> [f64; 2] {
        if axis == 0 {
            self.x
        } else {
            self.y
        }
    }
}

/// Which part of the chart is integrated.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum SideFilter {
    Both,
    Plus,
    Minus,
}

#[derive(Clone, Debug)]
pub struct Region<'a> {
    pub chart: &'a Chart,
    /// Width of the excluded band around `Z`; required when `Z` meets the chart.
    pub eps: Option<f64>,
    pub boxes: Vec<Rect>,
    pub side: SideFilter,
    pub quad: QuadOptions,
    /// RK4 steps for a geodesic of length `ε`.
    pub shot_steps: usize,
    /// Samples of `det` along a slice when locating `Z`.
    pub slice_samples: usize,
}

impl<'a> Region<'a> {
    pub fn new(chart: &'a Chart) -> Self {
        Region {
            chart,
            eps: None,
            boxes: Vec::new(),
            side: SideFilter::Both,
            quad: QuadOptions::with_tol(1e-9, 1e-12),
            shot_steps: 8,
            slice_samples: 96,
        }
    }

    pub fn with_eps(mut self, eps: f64) -> Self {
        self.eps = Some(eps);
        self
    }

    pub fn with_boxes(mut self, boxes: Vec<Rect>) -> Self {
        self.boxes = boxes;
        self
    }

    pub fn with_side(mut self, side: SideFilter) -> Self {
        self.side = side;
        self
    }

    pub fn with_quad(mut self, quad: QuadOptions) -> Self {
        self.quad = quad;
        self
    }

    fn check(&self) -> Result<()> {
        if let Some(e) = self.eps {
            if !(e > 0.0) {
                return Err(Error::Precondition(format!("eps must be positive, got {e}")));
            }
        }
        for (i, a) in self.boxes.iter().enumerate() {
            if !(a.x[1] > a.x[0] && a.y[1] > a.y[0]) {
                return Err(Error::Precondition(format!("box {i} is empty")));
            }
            for (j, b) in self.boxes.iter().enumerate().skip(i + 1) {
                let overlap = |axis: usize| {
                    let (p, q) = (a.range(axis), b.range(axis));
                    match self.chart.period(axis) {
                        Some(per) => {
                            let shift = ((q[0] - p[0]) / per).round() * per;
                            p[0] < q[1] - shift && q[0] - shift < p[1]
                                || p[0] < q[1] - shift + per && q[0] - shift + per < p[1]
                                || p[0] < q[1] - shift - per && q[0] - shift - per < p[1]
                        }
                        None => p[0] < q[1] && q[0] < p[1],
                    }
                };
                if overlap(0) && overlap(1) {
                    return Err(Error::Precondition(format!("boxes {i} and {j} overlap")));
                }
            }
        }
        Ok(())
    }
}

/// Chooses the inner axis: the one along which `Z` is most transversal.
fn inner_axis(chart: &Chart, boxes: &[Rect]) -> Result<usize> {
    let curves = trace_singular_locus(chart, 64)?;
    let frame = &chart.frame;
    let mut worst = [f64::INFINITY; 2];
    for c in &curves {
        for &p in &c.points {
            let inside = boxes.iter().any(|b| {
                (0..2).all(|k| {
                    let r = b.range(k);
                    let m = 0.25 * (r[1] - r[0]);
                    p[k] > r[0] - m && p[k] < r[1] + m
                })
            });
            if inside {
                continue;
            }
            let g = frame.det_grad_at(p)?;
            let n = g[0].hypot(g[1]);
            for k in 0..2 {
                worst[k] = worst[k].min(g[k].abs() / n);
            }
        }
    }
    Ok(if worst[1] >= worst[0] { 1 } else { 0 })
}

fn point(axis: usize, outer: f64, inner: f64) -> Point {
    if axis == 1 {
        [outer, inner]
    } else {
        [inner, outer]
    }
}

/// Picks a start for a periodic window `[s, s + period)` in the middle of
/// the largest gap between obstacles.
fn window_start(obstacles: &[[f64; 2]], lo: f64, period: f64) -> f64 {
    if obstacles.is_empty() {
        return lo;
    }
    let mut iv: Vec<[f64; 2]> = obstacles
        .iter()
        .map(|o| {
            let s = lo + (o[0] - lo).rem_euclid(period);
            [s, s + (o[1] - o[0])]
        })
        .collect();
    iv.sort_by(|a, b| a[0].total_cmp(&b[0]));
    let mut best = (f64::NEG_INFINITY, lo);
    let mut reach = iv[0][1];
    for w in 1..=iv.len() {
        let next = if w < iv.len() { iv[w][0] } else { iv[0][0] + period };
        let gap = next - reach;
        if gap > best.0 {
            best = (gap, 0.5 * (reach + next));
        }
        if w < iv.len() {
            reach = reach.max(iv[w][1]);
        }
    }
    best.1
}

/// Copies of `[a, b]` shifted by multiples of `period` that meet `[lo, hi]`.
fn periodic_copies(iv: [f64; 2], period: Option<f64>, lo: f64, hi: f64) -> Vec<[f64; 2]> {
    match period {
        None => vec![iv],
        Some(p) => {
            let k0 = ((lo - iv[1]) / p).floor() as i64;
            let k1 = ((hi - iv[0]) / p).ceil() as i64;
            (k0..=k1)
                .map(|k| [iv[0] + k as f64 * p, iv[1] + k as f64 * p])
                .filter(|c| c[1] > lo && c[0] < hi)
                .collect()
        }
    }
}

struct Slicer<'r, 'a> {
    region: &'r Region<'a>,
    frame: &'r FramePair,
    inner: usize,
    outer: usize,
    alpha: f64,
}

impl Slicer<'_, '_> {
    fn at(&self, outer: f64, inner: f64) -> Point {
        point(self.inner, outer, inner)
    }

    fn det(&self, outer: f64, inner: f64) -> Result<f64> {
        Ok(self.frame.det_at(self.at(outer, inner))?)
    }

    /// Point of `Z` on the slice `outer = c` near `guess`, by Newton's
    /// method along the inner axis.
    fn z_on_slice(&self, c: f64, guess: f64) -> Result<f64> {
        let mut t = guess;
        for _ in 0..40 {
            let p = self.at(c, t);
            let d = self.frame.det_at(p)?;
            let g = self.frame.det_grad_at(p)?[self.inner];
            if g == 0.0 {
                break;
            }
            let step = d / g;
            t -= step;
            if step.abs() <= 1e-15 * (1.0 + t.abs()) {
                return Ok(t);
            }
        }
        Err(Error::Unconverged(format!(
            "singular locus not resolved on slice {c} near {guess}"
        )))
    }

    /// Inner coordinate where the ε-front on side `side` meets the slice
    /// `outer = c`, for the crossing at inner coordinate `t`.
    fn landing(&self, c: f64, t: f64, side: f64, eps: f64) -> Result<f64> {
        let steps = self.region.shot_steps;
        let mut guess = t;
        let mut land = |cz: f64| -> Result<(f64, f64)> {
            let tz = self.z_on_slice(cz, guess)?;
            guess = tz;
            let s = shoot(self.frame, self.at(cz, tz), side, eps, steps)?;
            Ok((s.q[self.outer] - c, s.q[self.inner]))
        };
        let (mut c0, (mut f0, mut l0)) = (c, land(c)?);
        let tol = 1e-15 * (1.0 + c.abs());
        if f0.abs() <= tol {
            return Ok(l0);
        }
        let mut c1 = c - f0;
        for _ in 0..30 {
            let (f1, l1) = land(c1)?;
            if f1.abs() <= tol || f1 == f0 {
                return Ok(l1);
            }
            let c2 = c1 - f1 * (c1 - c0) / (f1 - f0);
            (c0, f0, l0) = (c1, f1, l1);
            c1 = c2;
        }
        let _ = l0;
        Err(Error::Unconverged(format!(
            "epsilon front not located on slice {c} near {t}"
        )))
    }

    /// Rough bound for the inner extent of the band at a crossing, from
    /// the slope and bending of `Z` relative to the slices.
    fn band_reach(&self, c: f64, t: f64, eps: f64) -> Result<f64> {
        let slope = |cz: f64| -> Result<f64> {
            let tz = self.z_on_slice(cz, t)?;
            let g = self.frame.det_grad_at(self.at(cz, tz))?;
            Ok(g[self.outer] / g[self.inner])
        };
        let s0 = slope(c)?;
        let bend = (slope(c + eps)? - slope(c - eps)?).abs() / (2.0 * eps);
        Ok(eps * s0.abs() + eps * eps * bend + 1e-12)
    }

    /// Outer coordinates where `Z` or the edges of its ε-band cross the
    /// line `inner = e` within `[c0, c1]`; the slice integral has kinks there.
    fn edge_kinks(&self, e: f64, c0: f64, c1: f64, eps: f64) -> Result<Vec<f64>> {
        let n = 64;
        let det = |c: f64| self.det(c, e);
        let mut out = Vec::new();
        let mut prev = (c0, det(c0)?);
        for k in 1..=n {
            let c = c0 + (c1 - c0) * k as f64 / n as f64;
            let d = det(c)?;
            if prev.1 != 0.0 && d != 0.0 && d.signum() != prev.1.signum() {
                if let Some(cz) = brent(|u| det(u).ok(), prev.0, c, 1e-15, 0.0) {
                    out.push(cz);
                    for side in [1.0, -1.0] {
                        if let Some(ck) = self.edge_landing(cz, e, side, eps)? {
                            out.push(ck);
                        }
                    }
                }
            }
            prev = (c, d);
        }
        Ok(out)
    }

    /// Outer coordinate where the ε-front of side `side` meets the line
    /// `inner = e`, starting from the crossing of `Z` with that line at `cz`.
    fn edge_landing(&self, cz: f64, e: f64, side: f64, eps: f64) -> Result<Option<f64>> {
        let steps = self.region.shot_steps;
        let mut guess = e;
        let mut land = |c: f64| -> Result<(f64, f64)> {
            let tz = self.z_on_slice(c, guess)?;
            guess = tz;
            let s = shoot(self.frame, self.at(c, tz), side, eps, steps)?;
            Ok((s.q[self.inner] - e, s.q[self.outer]))
        };
        let (mut c0, (mut f0, _)) = (cz, land(cz)?);
        let mut c1 = cz + eps;
        for _ in 0..40 {
            let (f1, l1) = match land(c1) {
                Ok(v) => v,
                Err(_) => return Ok(None),
            };
            if f1.abs() <= 1e-15 * (1.0 + e.abs()) || f1 == f0 {
                return Ok(Some(l1));
            }
            let c2 = c1 - f1 * (c1 - c0) / (f1 - f0);
            (c0, f0) = (c1, f1);
            c1 = c2;
            if (c1 - cz).abs() > 100.0 * eps {
                return Ok(None);
            }
        }
        Ok(None)
    }

    fn crossings(&self, c: f64, lo: f64, hi: f64) -> Result<Vec<f64>> {
        let n = self.region.slice_samples;
        let mut out = Vec::new();
        let mut prev = (lo, self.det(c, lo)?);
        for k in 1..=n {
            let t = lo + (hi - lo) * k as f64 / n as f64;
            let d = self.det(c, t)?;
            if d == 0.0 {
                out.push(t);
            } else if prev.1 != 0.0 && d.signum() != prev.1.signum() {
                let r = brent(|u| self.det(c, u).ok(), prev.0, t, 1e-15, 0.0)
                    .ok_or_else(|| Error::NonTransversal { point: self.at(c, t) })?;
                out.push(r);
            }
            prev = (t, d);
        }
        Ok(out)
    }

    fn density(&self, c: f64, t: f64) -> Result<f64> {
        let p = self.at(c, t);
        let d = self.frame.det_at(p)?;
        let k = self.frame.curvature().eval_at(p)?;
        Ok(self.alpha * k / d)
    }

    /// Slice integral and the integral of `|density|` over the slice.
    fn slice(&self, c: f64) -> Result<(f64, f64)> {
        let chart = self.region.chart;
        let dom = chart.domain;
        let (lo, hi) = (dom[2 * self.inner], dom[2 * self.inner + 1]);
        let period = chart.period(self.inner);
        let outer_period = chart.period(self.outer);
        let mut boxes = Vec::new();
        for b in &self.region.boxes {
            let r = b.range(self.outer);
            let on = match outer_period {
                None => r[0] <= c && c <= r[1],
                Some(p) => (c - r[0]).rem_euclid(p) <= r[1] - r[0],
            };
            if on {
                boxes.push(b.range(self.inner));
            }
        }
        let raw = self.crossings(c, lo, hi)?;
        // Integration window.
        let (w0, w1) = match period {
            None => (lo, hi),
            Some(p) => {
                let mut obstacles: Vec<[f64; 2]> = raw.iter().map(|&t| [t, t]).collect();
                obstacles.extend(boxes.iter().copied());
                let s = window_start(&obstacles, lo, p);
                (s, s + p)
            }
        };
        let mut crossings: Vec<f64> = raw
            .iter()
            .map(|&t| match period {
                None => t,
                Some(p) => w0 + (t - w0).rem_euclid(p),
            })
            .collect();
        crossings.sort_by(f64::total_cmp);
        let mut excluded: Vec<[f64; 2]> = Vec::new();
        for b in &boxes {
            excluded.extend(periodic_copies(*b, period, w0, w1));
        }
        for &t in &crossings {
            let inside = excluded.iter().find(|e| t > e[0] && t < e[1]).copied();
            let eps = match (self.region.eps, inside) {
                (Some(e), _) => e,
                (None, Some(_)) => continue,
                (None, None) => {
                    return Err(Error::Precondition(format!(
                        "Z crosses the region at {:?}; an epsilon band is required",
                        self.at(c, t)
                    )))
                }
            };
            if let Some(e) = inside {
                // Skip the band when it cannot reach the box edge.
                if (t - e[0]).min(e[1] - t) > 3.0 * self.band_reach(c, t, eps)? {
                    continue;
                }
            }
            let a = self.landing(c, t, 1.0, eps)?;
            let b = self.landing(c, t, -1.0, eps)?;
            excluded.push([t.min(a).min(b), t.max(a).max(b)]);
        }
        excluded.sort_by(|a, b| a[0].total_cmp(&b[0]));
        // Complement of the excluded set inside the window.
        let mut pieces = Vec::new();
        let mut cursor = w0;
        for e in &excluded {
            if e[0] > cursor {
                pieces.push([cursor, e[0].min(w1)]);
            }
            cursor = cursor.max(e[1]);
        }
        if cursor < w1 {
            pieces.push([cursor, w1]);
        }
        let (mut total, mut magnitude) = (0.0, 0.0);
        for piece in pieces {
            if piece[1] <= piece[0] {
                continue;
            }
            if self.region.side != SideFilter::Both {
                let mid = 0.5 * (piece[0] + piece[1]);
                let s = self.alpha * self.det(c, mid)?;
                let keep = match self.region.side {
                    SideFilter::Plus => s > 0.0,
                    _ => s < 0.0,
                };
                if !keep {
                    continue;
                }
            }
            let mut f = |t: f64| self.density(c, t);
            // nearest crossings outside the piece, wrapping around a period
            let left = crossings
                .iter()
                .rev()
                .find(|&&z| z <= piece[0])
                .copied()
                .or_else(|| period.and_then(|p| crossings.last().map(|z| z - p)));
            let right = crossings
                .iter()
                .find(|&&z| z >= piece[1])
                .copied()
                .or_else(|| period.and_then(|p| crossings.first().map(|z| z + p)));
            let (v, m) = graded(&mut f, piece, left, right, &self.region.quad)?;
            total += v;
            magnitude += m;
        }
        Ok((total, magnitude))
    }
}

/// Integral of `f` over `piece` where `f` may blow up at the anchors just
/// outside its ends. Halves near an anchor `z` are integrated in
/// `u = ln|t - z|`.
fn graded<F>(f: &mut F, piece: [f64; 2], left: Option<f64>, right: Option<f64>, quad: &QuadOptions) -> Result<(f64, f64)>
where
    F: FnMut(f64) -> Result<f64>,
{
    let [a, b] = piece;
    let m = 0.5 * (a + b);
    let (mut v, mut mag) = (0.0, 0.0);
    for (lo, hi, anchor, dir) in [(a, m, left, 1.0), (m, b, right, -1.0)] {
        // `near` is the end next to the anchor
        let near = if dir > 0.0 { lo } else { hi };
        let far = if dir > 0.0 { hi } else { lo };
        let e = match anchor {
            Some(z) if (far - z).abs() > 4.0 * (near - z).abs() && near != z => {
                let mut g = |u: f64| {
                    let r = u.exp();
                    f(z + dir * r).map(|w| w * r)
                };
                integrate_pieces(&mut g, &[(near - z).abs().ln(), (far - z).abs().ln()], quad)?
            }
            _ => integrate_pieces(f, &[lo, hi], quad)?,
        };
        v += e.value;
        mag += e.magnitude;
    }
    Ok((v, mag))
}

fn integrate_domain(region: &Region) -> Result<Estimate> {
    let chart = region.chart;
    let inner = inner_axis(chart, &region.boxes)?;
    let outer = 1 - inner;
    let slicer = Slicer {
        region,
        frame: &chart.frame,
        inner,
        outer,
        alpha: chart.frame.orientation_sign() as f64,
    };
    let dom = chart.domain;
    let (lo, hi) = (dom[2 * outer], dom[2 * outer + 1]);
    let period = chart.period(outer);
    let box_ranges: Vec<[f64; 2]> = region.boxes.iter().map(|b| b.range(outer)).collect();
    let (w0, w1) = match period {
        None => (lo, hi),
        Some(p) => {
            let s = window_start(&box_ranges, lo, p);
            (s, s + p)
        }
    };
    let mut breaks = vec![w0, w1];
    for r in &box_ranges {
        for c in periodic_copies(*r, period, w0, w1) {
            breaks.extend([c[0], c[1]].into_iter().filter(|&v| v > w0 && v < w1));
        }
    }
    if let Some(eps) = region.eps {
        for b in &region.boxes {
            let r = b.range(outer);
            for e in b.range(inner) {
                for k in slicer.edge_kinks(e, r[0], r[1], eps)? {
                    let shift = k - r[0];
                    for c in periodic_copies([r[0], r[1]], period, w0, w1) {
                        let v = c[0] + shift;
                        if v > w0 && v < w1 {
                            breaks.push(v);
                        }
                    }
                }
            }
        }
    }
    breaks.sort_by(f64::total_cmp);
    breaks.dedup();
    let mut f = |c: f64| slicer.slice(c);
    integrate_scaled(&mut f, &breaks, &region.quad)
}

fn integrate_disk(region: &Region, center: Point, radius: f64) -> Result<Estimate> {
    let frame = &region.chart.frame;
    let alpha = frame.orientation_sign() as f64;
    let at = |r: f64, phi: f64| [center[0] + r * phi.cos(), center[1] + r * phi.sin()];
    let s0 = frame.det_at(center)?.signum();
    for i in 0..=16 {
        for j in 0..32 {
            let p = at(radius * i as f64 / 16.0, std::f64::consts::TAU * j as f64 / 32.0);
            if frame.det_at(p)?.signum() != s0 {
                return Err(Error::Precondition(format!(
                    "Z meets the owned disk of chart `{}`",
                    region.chart.name
                )));
            }
        }
    }
    if !region.boxes.is_empty() {
        return Err(Error::Precondition("boxes are not supported in disk charts".into()));
    }
    let keep = match region.side {
        SideFilter::Both => true,
        SideFilter::Plus => alpha * s0 > 0.0,
        SideFilter::Minus => alpha * s0 < 0.0,
    };
    if !keep {
        return Ok(Estimate {
            value: 0.0,
            error: 0.0,
            magnitude: 0.0,
            evals: 0,
        });
    }
    let k = frame.curvature();
    integrate(
        |phi| {
            let e = integrate(
                |r| {
                    let p = at(r, phi);
                    Ok(alpha * k.eval_at(p)? / frame.det_at(p)? * r)
                },
                0.0,
                radius,
                &region.quad,
            )?;
            Ok(e.value)
        },
        0.0,
        std::f64::consts::TAU,
        &region.quad,
    )
}

/// `∫ K dA_s` over the region, `dA_s = α dx∧dy / det(X, Y)` (positive on
/// `M⁺`, negative on `M⁻`).
#[allow(non_snake_case)]
pub fn integrate_K(region: &Region) -> Result<Estimate> {
    region.check()?;
    match region.chart.ownership {
        Ownership::Domain => integrate_domain(region),
        Ownership::Disk { center, radius } => integrate_disk(region, center, radius),
    }
}


#[cfg(test)]
mod tests {
    use super::*;
    use crate::catalog::{round_sphere, tangency_plane};
    use crate::frames::FramePair;

    // X = (1,0), Y = (0, x e^x) on [-1,1]×[0,1]. The ε-fronts are the lines
    // x = ±ε and αK/D = -∂²_x(1/f), so each half integrates in closed form.
    fn f2_chart() -> Chart {
        let frame = FramePair::parse(["1", "0"], ["0", "x*exp(x)"], 1).unwrap();
        Chart::new("f2", [-1.0, 1.0, 0.0, 1.0], frame).unwrap()
    }

    fn g(x: f64) -> f64 {
        -(-x).exp() * (1.0 / x + 1.0 / (x * x))
    }

    #[test]
    fn euclidean_frame_integrates_to_zero() {
        let chart = Chart::new("plane", [-1.0, 2.0, 0.0, 1.0], FramePair::euclidean()).unwrap();
        let e = integrate_K(&Region::new(&chart)).unwrap();
        assert_eq!(e.value, 0.0);
    }

    #[test]
    fn round_sphere_atlas_gives_4pi() {
        let s = round_sphere().unwrap();
        let total: f64 = s
            .charts
            .iter()
            .map(|c| integrate_K(&Region::new(c).with_eps(1e-3)).unwrap().value)
            .sum();
        assert!((total - 4.0 * std::f64::consts::PI).abs() < 1e-6, "{total}");
    }

    #[test]
    fn halves_match_closed_form() {
        let chart = f2_chart();
        for eps in [0.1, 0.05, 0.02, 0.01] {
            let r = Region::new(&chart).with_eps(eps);
            let plus = integrate_K(&r.clone().with_side(SideFilter::Plus)).unwrap().value;
            let minus = integrate_K(&r.clone().with_side(SideFilter::Minus)).unwrap().value;
            let both = integrate_K(&r).unwrap().value;
            let (p, m) = (g(eps) - g(1.0), g(-1.0) - g(-eps));
            assert!((plus - p).abs() < 1e-8 * p.abs(), "{eps}: {plus} vs {p}");
            assert!((minus - m).abs() < 1e-8 * m.abs(), "{eps}: {minus} vs {m}");
            assert!((both - (p + m)).abs() < 1e-8 * p.abs(), "{eps}: {both} vs {}", p + m);
        }
    }

    #[test]
    fn grushin_sequence_converges() {
        let chart = f2_chart();
        let v: Vec<f64> = [0.04, 0.02, 0.01, 0.005]
            .iter()
            .map(|&e| integrate_K(&Region::new(&chart).with_eps(e)).unwrap().value)
            .collect();
        let fit = super::super::extrapolate(&[0.04, 0.02, 0.01, 0.005], &v).unwrap();
        let limit = g(-1.0) - g(1.0);
        assert!((fit.limit - limit).abs() < 1e-5, "{fit:?} vs {limit}");
    }

    #[test]
    fn signed_split_is_consistent() {
        let quad = QuadOptions::with_tol(1e-13, 1e-15);
        let split = |r: Region| {
            let plus = integrate_K(&r.clone().with_side(SideFilter::Plus)).unwrap();
            let minus = integrate_K(&r.clone().with_side(SideFilter::Minus)).unwrap();
            let both = integrate_K(&r).unwrap();
            (plus.value + minus.value - both.value, both.magnitude)
        };
        let chart = f2_chart();
        let (d, _) = split(Region::new(&chart).with_eps(0.1).with_quad(quad));
        assert!(d.abs() < 1e-10, "{d}");
        // near a tangency the halves are large and cancel; compare relatively
        let s = tangency_plane(1).unwrap();
        let r = Region::new(&s.charts[0])
            .with_eps(0.01)
            .with_boxes(vec![Rect::centered([0.0, 0.0], [0.5, 0.02])])
            .with_quad(quad);
        let (d, mag) = split(r);
        assert!(d.abs() < 1e-12 * mag, "{d} vs {mag}");
    }

    #[test]
    fn band_is_required_when_z_crosses() {
        let chart = f2_chart();
        assert!(matches!(integrate_K(&Region::new(&chart)), Err(Error::Precondition(_))));
    }

    #[test]
    fn overlapping_boxes_are_rejected() {
        let s = tangency_plane(1).unwrap();
        let r = Region::new(&s.charts[0])
            .with_eps(0.01)
            .with_boxes(vec![Rect::centered([0.0, 0.0], [0.2, 0.01]), Rect::centered([0.1, 0.0], [0.2, 0.01])]);
        assert!(matches!(integrate_K(&r), Err(Error::Precondition(_))));
    }
}
