//! Marching-squares tracing of `Z = {det(X, Y) = 0}`.

use std::collections::BTreeMap;

use rayon::prelude::*;

use super::{Chart, FramePair, Point};
use crate::error::{Error, Result};
use crate::roots::brent;

/// Polyline approximating one component of `Z` inside a chart, oriented so
/// that `M⁺` lies on its left.
#[derive(Clone, Debug, PartialEq)]
pub struct SingularCurve {
    pub points: Vec<Point>,
    pub closed: bool,
    /// For closed curves, the vertex following the last one is
    /// `points[0] + shift`. Nonzero when the curve winds around a periodic
    /// direction of the chart.
    pub shift: [f64; 2],
}

impl SingularCurve {
    pub fn segment_count(&self) -> usize {
        if self.closed {
            self.points.len()
        } else {
            self.points.len().saturating_sub(1)
        }
    }

    /// Vertex `i`, continued periodically past the ends of a closed curve.
    pub fn vertex(&self, i: isize) -> Point {
        let n = self.points.len() as isize;
        if !self.closed {
            return self.points[i.clamp(0, n - 1) as usize];
        }
        let k = i.div_euclid(n);
        let p = self.points[i.rem_euclid(n) as usize];
        [p[0] + k as f64 * self.shift[0], p[1] + k as f64 * self.shift[1]]
    }

    pub fn reversed(&self) -> SingularCurve {
        let mut points = self.points.clone();
        points.reverse();
        SingularCurve {
            points,
            closed: self.closed,
            shift: [-self.shift[0], -self.shift[1]],
        }
    }

    /// Euclidean length in chart coordinates.
    pub fn chart_length(&self) -> f64 {
        (0..self.segment_count() as isize)
            .map(|i| {
                let (a, b) = (self.vertex(i), self.vertex(i + 1));
                (b[0] - a[0]).hypot(b[1] - a[1])
            })
            .sum()
    }
}

/// Newton projection onto `{D = 0}` along `∇D`.
pub fn project_to_zero_set(frame: &FramePair, p: Point) -> Result<Point> {
    let mut q = p;
    for _ in 0..60 {
        let d = frame.det_at(q)?;
        if d.abs() < 1e-14 {
            return Ok(q);
        }
        let g = frame.det_grad_at(q)?;
        let g2 = g[0] * g[0] + g[1] * g[1];
        if g2 == 0.0 {
            return Err(Error::NonTransversal { point: q });
        }
        let step = [d * g[0] / g2, d * g[1] / g2];
        q = [q[0] - step[0], q[1] - step[1]];
        if step[0].hypot(step[1]) < 1e-16 * (1.0 + q[0].hypot(q[1])) {
            return Ok(q);
        }
    }
    if frame.det_at(q)?.abs() < 1e-10 {
        Ok(q)
    } else {
        Err(Error::NonTransversal { point: p })
    }
}

// Grid edge: (kind, i, j) with kind 0 = from (i,j) to (i+1,j), kind 1 = from
// (i,j) to (i,j+1). Indices are canonical modulo periodic wrap.
type EdgeKey = (u8, usize, usize);

/// Traces `Z` on an `n × n` cell grid, refining each vertex so `|D| < 1e-10`.
pub fn trace_singular_locus(chart: &Chart, n: usize) -> Result<Vec<SingularCurve>> {
    if n < 2 {
        return Err(Error::Precondition("grid resolution must be at least 2".into()));
    }
    let frame = &chart.frame;
    let [x0, x1, y0, y1] = chart.domain;
    let coord = |i: usize, j: usize| -> Point {
        [
            x0 + (x1 - x0) * i as f64 / n as f64,
            y0 + (y1 - y0) * j as f64 / n as f64,
        ]
    };
    let canon = |i: usize, axis: usize| -> usize {
        if chart.periodic[axis] {
            i % n
        } else {
            i
        }
    };

    let values: Vec<Vec<f64>> = (0..=n)
        .into_par_iter()
        .map(|i| {
            (0..=n)
                .map(|j| frame.det_at(chart.nudge(coord(canon(i, 0), canon(j, 1)))))
                .collect::<std::result::Result<Vec<_>, _>>()
        })
        .collect::<std::result::Result<_, _>>()?;
    let value = |i: usize, j: usize| values[canon(i, 0)][canon(j, 1)];
    let positive = |i: usize, j: usize| value(i, j) >= 0.0;
    let scale = values
        .iter()
        .flatten()
        .fold(0.0f64, |m, v| m.max(v.abs()))
        .max(1e-300);

    let key = |kind: u8, i: usize, j: usize| -> EdgeKey { (kind, canon(i, 0), canon(j, 1)) };
    let crosses = |k: EdgeKey| -> bool {
        let (kind, i, j) = k;
        let (i2, j2) = if kind == 0 { (i + 1, j) } else { (i, j + 1) };
        positive(i, j) != positive(i2, j2)
    };

    // Segments inside cells, tagged by cell index.
    let mut adjacency: BTreeMap<EdgeKey, Vec<(EdgeKey, usize)>> = BTreeMap::new();
    for i in 0..n {
        for j in 0..n {
            let cell = i * n + j;
            let bottom = key(0, i, j);
            let right = key(1, i + 1, j);
            let top = key(0, i, j + 1);
            let left = key(1, i, j);
            let edges = [bottom, right, top, left];
            let hits: Vec<EdgeKey> = edges.iter().copied().filter(|&e| crosses(e)).collect();
            let pairs: Vec<(EdgeKey, EdgeKey)> = match hits.len() {
                0 => continue,
                2 => vec![(hits[0], hits[1])],
                4 => {
                    let center = [
                        x0 + (x1 - x0) * (i as f64 + 0.5) / n as f64,
                        y0 + (y1 - y0) * (j as f64 + 0.5) / n as f64,
                    ];
                    let c = frame.det_at(center)?;
                    if c.abs() < 1e-9 * scale {
                        return Err(Error::NonTransversal { point: center });
                    }
                    if (c >= 0.0) == positive(i, j) {
                        vec![(bottom, right), (top, left)]
                    } else {
                        vec![(bottom, left), (top, right)]
                    }
                }
                _ => unreachable!("a cell has an even number of sign changes"),
            };
            for (a, b) in pairs {
                adjacency.entry(a).or_default().push((b, cell));
                adjacency.entry(b).or_default().push((a, cell));
            }
        }
    }

    let keys: Vec<EdgeKey> = adjacency.keys().copied().collect();
    let crossings: BTreeMap<EdgeKey, Point> = keys
        .par_iter()
        .map(|&(kind, i, j)| {
            let (i2, j2) = if kind == 0 { (i + 1, j) } else { (i, j + 1) };
            let (a, b) = (coord(i, j), coord(i2, j2));
            let (va, vb) = (value(i, j), value(i2, j2));
            let along = |t: f64| [a[0] + t * (b[0] - a[0]), a[1] + t * (b[1] - a[1])];
            // Endpoint values come from the canonical vertices so that the
            // sign pattern matches the one used for the cells.
            let f = |t: f64| match t {
                0.0 => Some(va),
                1.0 => Some(vb),
                _ => frame.det_at(along(t)).ok(),
            };
            let t = brent(f, 0.0, 1.0, 1e-15, 1e-12)
                .ok_or(Error::NonTransversal { point: a })?;
            Ok(((kind, i, j), along(t)))
        })
        .collect::<Result<Vec<_>>>()?
        .into_iter()
        .collect();

    let mut visited: BTreeMap<EdgeKey, bool> = keys.iter().map(|&k| (k, false)).collect();
    let mut curves = Vec::new();
    let starts: Vec<EdgeKey> = keys
        .iter()
        .copied()
        .filter(|k| adjacency[k].len() == 1)
        .chain(keys.iter().copied())
        .collect();
    for start in starts {
        if visited[&start] {
            continue;
        }
        let open = adjacency[&start].len() == 1;
        let mut chain = vec![start];
        visited.insert(start, true);
        let mut current = start;
        let mut came_through: Option<usize> = None;
        let mut closed = false;
        loop {
            let next = adjacency[&current]
                .iter()
                .find(|(_, cell)| Some(*cell) != came_through)
                .copied();
            let Some((next, cell)) = next else { break };
            if next == start && !open {
                closed = true;
                break;
            }
            if visited[&next] {
                break;
            }
            visited.insert(next, true);
            chain.push(next);
            came_through = Some(cell);
            current = next;
        }
        curves.push(assemble(chart, &chain, &crossings, closed)?);
    }
    Ok(curves)
}

fn unwrap_near(chart: &Chart, p: Point, reference: Point) -> Point {
    let mut q = p;
    for axis in 0..2 {
        if let Some(period) = chart.period(axis) {
            q[axis] += ((reference[axis] - q[axis]) / period).round() * period;
        }
    }
    q
}

fn assemble(
    chart: &Chart,
    chain: &[EdgeKey],
    crossings: &BTreeMap<EdgeKey, Point>,
    closed: bool,
) -> Result<SingularCurve> {
    let mut points: Vec<Point> = Vec::with_capacity(chain.len());
    for k in chain {
        let p = crossings[k];
        let p = match points.last() {
            Some(&last) => unwrap_near(chart, p, last),
            None => p,
        };
        if let Some(&last) = points.last() {
            if (p[0] - last[0]).hypot(p[1] - last[1]) < 1e-13 {
                continue;
            }
        }
        points.push(p);
    }
    let mut shift = [0.0, 0.0];
    if closed && points.len() > 1 {
        let first = points[0];
        let again = unwrap_near(chart, first, *points.last().unwrap());
        shift = [again[0] - first[0], again[1] - first[1]];
        if shift[0].hypot(shift[1]) < 1e-9 {
            shift = [0.0, 0.0];
            let last = *points.last().unwrap();
            if (last[0] - first[0]).hypot(last[1] - first[1]) < 1e-13 {
                points.pop();
            }
        }
    }
    let curve = SingularCurve {
        points,
        closed,
        shift,
    };
    // Orient so that αD increases to the left.
    let alpha = chart.frame.orientation_sign() as f64;
    let mut vote = 0.0;
    for s in 0..curve.segment_count() as isize {
        let (a, b) = (curve.vertex(s), curve.vertex(s + 1));
        let mid = chart.wrap([(a[0] + b[0]) / 2.0, (a[1] + b[1]) / 2.0]);
        let g = chart.frame.det_grad_at(mid)?;
        let t = [b[0] - a[0], b[1] - a[1]];
        vote += alpha * (t[0] * g[1] - t[1] * g[0]);
    }
    Ok(if vote < 0.0 { curve.reversed() } else { curve })
}
