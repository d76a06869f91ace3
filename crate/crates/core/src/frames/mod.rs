//! Orthonormal frames, Lie brackets, the flag of the distribution, point
//! classification and the singular locus `Z = {det(X, Y) = 0}`.

pub(crate) mod tangency;
mod trace;

use std::sync::{Arc, OnceLock};

use crate::curvature::{self, StructureConstants};
use crate::error::{Error, Result};
use crate::expr::{EvalError, ScalarField, Var};

pub use tangency::{find_tangency_points, tangency_indicator};
pub use trace::{project_to_zero_set, trace_singular_locus, SingularCurve};

pub type Point = [f64; 2];

/// Relative rank tolerance for spanning sets of vectors.
pub const RANK_TOL: f64 = 1e-9;

/// A vector field in chart coordinates.
#[derive(Clone, Debug, PartialEq)]
pub struct VectorField(pub [ScalarField; 2]);

impl VectorField {
    pub fn new(a: ScalarField, b: ScalarField) -> Self {
        VectorField([a, b])
    }

    pub fn parse(a: &str, b: &str) -> Result<Self> {
        Ok(VectorField([ScalarField::parse(a)?, ScalarField::parse(b)?]))
    }

    pub fn zero() -> Self {
        VectorField([ScalarField::zero(), ScalarField::zero()])
    }

    pub fn is_zero(&self) -> bool {
        self.0[0].is_zero() && self.0[1].is_zero()
    }

    pub fn eval(&self, p: Point) -> std::result::Result<[f64; 2], EvalError> {
        Ok([self.0[0].eval_at(p)?, self.0[1].eval_at(p)?])
    }

    /// Directional derivative `V(f)`.
    pub fn apply(&self, f: &ScalarField) -> ScalarField {
        &self.0[0] * f.diff(Var::X) + &self.0[1] * f.diff(Var::Y)
    }
}

/// `[V, W] = (DW)V - (DV)W`.
pub fn lie_bracket(v: &VectorField, w: &VectorField) -> VectorField {
    VectorField([
        v.apply(&w.0[0]) - w.apply(&v.0[0]),
        v.apply(&w.0[1]) - w.apply(&v.0[1]),
    ])
}

#[derive(Debug)]
struct Cache {
    det: ScalarField,
    grad: [ScalarField; 2],
    bracket: VectorField,
    second: OnceLock<[VectorField; 2]>,
    jacobians: OnceLock<[[[ScalarField; 2]; 2]; 2]>,
    structure: OnceLock<StructureConstants>,
    curvature: OnceLock<ScalarField>,
}

/// Orthonormal frame `(X, Y)` together with the orientation sign `α`
/// telling whether the frame comes from a positively oriented frame of `E`.
#[derive(Clone, Debug)]
pub struct FramePair {
    x: VectorField,
    y: VectorField,
    orientation_sign: i8,
    cache: Arc<Cache>,
}

impl FramePair {
    pub fn new(x: VectorField, y: VectorField, orientation_sign: i8) -> Result<Self> {
        if orientation_sign != 1 && orientation_sign != -1 {
            return Err(Error::Schema(format!(
                "orientation_sign must be 1 or -1, got {orientation_sign}"
            )));
        }
        let det = &x.0[0] * &y.0[1] - &x.0[1] * &y.0[0];
        let grad = [det.diff(Var::X), det.diff(Var::Y)];
        let bracket = lie_bracket(&x, &y);
        Ok(FramePair {
            x,
            y,
            orientation_sign,
            cache: Arc::new(Cache {
                det,
                grad,
                bracket,
                second: OnceLock::new(),
                jacobians: OnceLock::new(),
                structure: OnceLock::new(),
                curvature: OnceLock::new(),
            }),
        })
    }

    pub fn parse(x: [&str; 2], y: [&str; 2], orientation_sign: i8) -> Result<Self> {
        Self::new(
            VectorField::parse(x[0], x[1])?,
            VectorField::parse(y[0], y[1])?,
            orientation_sign,
        )
    }

    /// Euclidean frame `X = (1,0)`, `Y = (0,1)`.
    pub fn euclidean() -> Self {
        Self::parse(["1", "0"], ["0", "1"], 1).expect("valid frame")
    }

    pub fn x(&self) -> &VectorField {
        &self.x
    }

    pub fn y(&self) -> &VectorField {
        &self.y
    }

    pub fn orientation_sign(&self) -> i8 {
        self.orientation_sign
    }

    pub fn with_orientation(&self, orientation_sign: i8) -> Result<Self> {
        Self::new(self.x.clone(), self.y.clone(), orientation_sign)
    }

    /// `D = det(X, Y)`.
    pub fn det(&self) -> &ScalarField {
        &self.cache.det
    }

    pub fn det_grad(&self) -> &[ScalarField; 2] {
        &self.cache.grad
    }

    /// `[X, Y]`.
    pub fn bracket(&self) -> &VectorField {
        &self.cache.bracket
    }

    /// `[X, [X, Y]]` and `[Y, [X, Y]]`.
    pub fn second_brackets(&self) -> &[VectorField; 2] {
        self.cache.second.get_or_init(|| {
            [
                lie_bracket(&self.x, &self.cache.bracket),
                lie_bracket(&self.y, &self.cache.bracket),
            ]
        })
    }

    /// `jacobians()[k][i][j] = ∂_j V_k^i` with `V_0 = X`, `V_1 = Y`.
    pub fn jacobians(&self) -> &[[[ScalarField; 2]; 2]; 2] {
        self.cache.jacobians.get_or_init(|| {
            let jac = |v: &VectorField| {
                [
                    [v.0[0].diff(Var::X), v.0[0].diff(Var::Y)],
                    [v.0[1].diff(Var::X), v.0[1].diff(Var::Y)],
                ]
            };
            [jac(&self.x), jac(&self.y)]
        })
    }

    pub fn structure_constants(&self) -> &StructureConstants {
        self.cache
            .structure
            .get_or_init(|| curvature::structure_constants(self))
    }

    pub fn curvature(&self) -> &ScalarField {
        self.cache
            .curvature
            .get_or_init(|| curvature::gauss_curvature(self))
    }

    pub fn eval_frame(&self, p: Point) -> std::result::Result<[[f64; 2]; 2], EvalError> {
        Ok([self.x.eval(p)?, self.y.eval(p)?])
    }

    pub fn det_at(&self, p: Point) -> std::result::Result<f64, EvalError> {
        self.cache.det.eval_at(p)
    }

    pub fn det_grad_at(&self, p: Point) -> std::result::Result<[f64; 2], EvalError> {
        Ok([self.cache.grad[0].eval_at(p)?, self.cache.grad[1].eval_at(p)?])
    }

    /// `α·det(X,Y)`: positive exactly on `M⁺`.
    pub fn signed_det_at(&self, p: Point) -> std::result::Result<f64, EvalError> {
        Ok(self.orientation_sign as f64 * self.det_at(p)?)
    }
}

/// Chart edge, named by the coordinate it fixes.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Edge {
    /// `x = x0`
    Left,
    /// `x = x1`
    Right,
    /// `y = y0`
    Bottom,
    /// `y = y1`
    Top,
}

impl Edge {
    pub fn name(self) -> &'static str {
        match self {
            Edge::Left => "x0",
            Edge::Right => "x1",
            Edge::Bottom => "y0",
            Edge::Top => "y1",
        }
    }

    pub fn from_name(name: &str) -> Option<Edge> {
        match name {
            "x0" | "left" => Some(Edge::Left),
            "x1" | "right" => Some(Edge::Right),
            "y0" | "bottom" => Some(Edge::Bottom),
            "y1" | "top" => Some(Edge::Top),
            _ => None,
        }
    }

    pub fn opposite(self) -> Edge {
        match self {
            Edge::Left => Edge::Right,
            Edge::Right => Edge::Left,
            Edge::Bottom => Edge::Top,
            Edge::Top => Edge::Bottom,
        }
    }
}

/// Which part of a chart is counted when integrating over an atlas.
#[derive(Clone, Debug, PartialEq)]
pub enum Ownership {
    /// The whole coordinate rectangle.
    Domain,
    /// A closed disk inside the rectangle.
    Disk { center: Point, radius: f64 },
}

/// Coordinate rectangle carrying an orthonormal frame.
#[derive(Clone, Debug)]
pub struct Chart {
    pub name: String,
    /// `[x0, x1, y0, y1]`
    pub domain: [f64; 4],
    pub frame: FramePair,
    /// Periodic gluing of the opposite edges in `x` and in `y`.
    pub periodic: [bool; 2],
    /// Edges collapsed to a single point (coordinate poles).
    pub collapsed: Vec<Edge>,
    pub ownership: Ownership,
}

impl Chart {
    pub fn new(name: impl Into<String>, domain: [f64; 4], frame: FramePair) -> Result<Self> {
        let [x0, x1, y0, y1] = domain;
        if !(x0 < x1 && y0 < y1) || domain.iter().any(|v| !v.is_finite()) {
            return Err(Error::Schema(format!("degenerate chart domain {domain:?}")));
        }
        Ok(Chart {
            name: name.into(),
            domain,
            frame,
            periodic: [false, false],
            collapsed: Vec::new(),
            ownership: Ownership::Domain,
        })
    }

    pub fn with_periodic(mut self, x: bool, y: bool) -> Self {
        self.periodic = [x, y];
        self
    }

    pub fn with_frame(mut self, frame: FramePair) -> Self {
        self.frame = frame;
        self
    }

    pub fn width(&self) -> f64 {
        self.domain[1] - self.domain[0]
    }

    pub fn height(&self) -> f64 {
        self.domain[3] - self.domain[2]
    }

    pub fn period(&self, axis: usize) -> Option<f64> {
        if self.periodic[axis] {
            Some(self.domain[2 * axis + 1] - self.domain[2 * axis])
        } else {
            None
        }
    }

    /// Reduces periodic coordinates into the fundamental domain.
    pub fn wrap(&self, p: Point) -> Point {
        let mut q = p;
        for (axis, v) in q.iter_mut().enumerate() {
            if let Some(period) = self.period(axis) {
                let lo = self.domain[2 * axis];
                *v = lo + (*v - lo).rem_euclid(period);
            }
        }
        q
    }

    /// True if `p` lies in the closed rectangle (always true along periodic axes).
    pub fn contains(&self, p: Point) -> bool {
        (0..2).all(|axis| {
            self.periodic[axis]
                || (p[axis] >= self.domain[2 * axis] && p[axis] <= self.domain[2 * axis + 1])
        })
    }

    /// Moves a point lying on a collapsed edge slightly into the chart, where
    /// the frame is defined.
    pub fn nudge(&self, p: Point) -> Point {
        let mut q = p;
        let [x0, x1, y0, y1] = self.domain;
        let (hx, hy) = (1e-6 * (x1 - x0), 1e-6 * (y1 - y0));
        for e in &self.collapsed {
            match e {
                Edge::Left if (q[0] - x0).abs() < hx => q[0] = x0 + hx,
                Edge::Right if (q[0] - x1).abs() < hx => q[0] = x1 - hx,
                Edge::Bottom if (q[1] - y0).abs() < hy => q[1] = y0 + hy,
                Edge::Top if (q[1] - y1).abs() < hy => q[1] = y1 - hy,
                _ => {}
            }
        }
        q
    }

    pub fn owns(&self, p: Point) -> bool {
        match &self.ownership {
            Ownership::Domain => self.contains(p),
            Ownership::Disk { center, radius } => {
                (p[0] - center[0]).hypot(p[1] - center[1]) <= *radius
            }
        }
    }
}

/// Local type of a point.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PointClass {
    Ordinary,
    Grushin,
    Tangency,
}

impl PointClass {
    pub fn name(self) -> &'static str {
        match self {
            PointClass::Ordinary => "ordinary",
            PointClass::Grushin => "grushin",
            PointClass::Tangency => "tangency",
        }
    }
}

/// Numerical rank of a set of plane vectors, or the offending singular
/// value and tolerance when the decision is too close to call.
fn rank(vectors: &[[f64; 2]]) -> std::result::Result<usize, (f64, f64)> {
    let (mut a, mut b, mut c) = (0.0, 0.0, 0.0);
    for v in vectors {
        a += v[0] * v[0];
        b += v[0] * v[1];
        c += v[1] * v[1];
    }
    // Cauchy-Binet: det(M Mᵀ) is the sum of squared 2×2 minors.
    let mut minors = 0.0;
    for i in 0..vectors.len() {
        for j in i + 1..vectors.len() {
            let m = vectors[i][0] * vectors[j][1] - vectors[i][1] * vectors[j][0];
            minors += m * m;
        }
    }
    let half = 0.5 * (a + c);
    let sigma_max = (half + (0.25 * (a - c) * (a - c) + b * b).sqrt()).sqrt();
    let tol = RANK_TOL * (sigma_max + 1.0);
    if sigma_max < tol {
        return Ok(0);
    }
    let sigma_min = minors.sqrt() / sigma_max;
    if sigma_min < tol {
        Ok(1)
    } else if sigma_min < 1e3 * tol {
        Err((sigma_min, tol))
    } else {
        Ok(2)
    }
}

/// Dimensions of `Δ(q)`, `Δ₂(q)`, `Δ₃(q)`.
pub fn flag_dims(chart: &Chart, q: Point) -> Result<(usize, usize, usize)> {
    let frame = &chart.frame;
    let [x, y] = frame.eval_frame(q)?;
    let b = frame.bracket().eval(q)?;
    let [bx, by] = frame.second_brackets();
    let (bx, by) = (bx.eval(q)?, by.eval(q)?);
    let indeterminate = |(sigma, tol): (f64, f64)| Error::RankIndeterminate {
        point: q,
        sigma,
        tol,
    };
    let d1 = rank(&[x, y]).map_err(indeterminate)?;
    let d2 = rank(&[x, y, b]).map_err(indeterminate)?;
    let d3 = rank(&[x, y, b, bx, by]).map_err(indeterminate)?;
    Ok((d1, d2.max(d1), d3.max(d2).max(d1)))
}

/// Classifies `q` as ordinary, Grushin or tangency point.
pub fn classify_point(chart: &Chart, q: Point) -> Result<PointClass> {
    match flag_dims(chart, q)? {
        (2, _, _) => Ok(PointClass::Ordinary),
        (1, 2, _) => Ok(PointClass::Grushin),
        (1, 1, 2) => Ok(PointClass::Tangency),
        (0, _, _) => Err(Error::H0Violation {
            point: q,
            reason: "X and Y vanish simultaneously, so Z is not an embedded one-dimensional submanifold"
                .into(),
        }),
        dims => Err(Error::H0Violation {
            point: q,
            reason: format!(
                "flag dimensions {dims:?}: the distribution is not bracket generating in three steps, \
                 so Z is not an embedded one-dimensional submanifold with isolated tangency points"
            ),
        }),
    }
}

/// Local normal forms of a generic structure.
#[derive(Clone, Debug)]
pub enum NormalForm {
    /// `X = (1,0)`, `Y = (0, e^φ)`
    F1 { phi: ScalarField },
    /// `X = (1,0)`, `Y = (0, x e^φ)`
    F2 { phi: ScalarField },
    /// `X = (1,0)`, `Y = (0, (y - x²ψ(x)) e^ξ)`
    F3 { psi: ScalarField, xi: ScalarField },
}

/// Builds the chart `[-1,1]²` (or `domain`) carrying a normal-form frame.
pub fn make_normal_form(form: &NormalForm, domain: Option<[f64; 4]>) -> Result<Chart> {
    let domain = domain.unwrap_or([-1.0, 1.0, -1.0, 1.0]);
    let [_, _, y0, y1] = domain;
    let samples = |lo: f64, hi: f64| (0..=64).map(move |k| lo + (hi - lo) * k as f64 / 64.0);
    let one = ScalarField::one;
    let (second, name) = match form {
        NormalForm::F1 { phi } | NormalForm::F2 { phi } => {
            for y in samples(y0, y1) {
                let v = phi.eval(0.0, y)?;
                if v.abs() > 1e-12 {
                    return Err(Error::Precondition(format!("phi(0, {y}) = {v}, expected 0")));
                }
            }
            let factor = if phi.is_zero() { one() } else { phi.exp() };
            match form {
                NormalForm::F1 { .. } => (factor, "F1"),
                _ => (ScalarField::x() * factor, "F2"),
            }
        }
        NormalForm::F3 { psi, xi } => {
            let psi0 = psi.eval(0.0, 0.0)?;
            if psi0 <= 0.0 {
                return Err(Error::Precondition(format!("psi(0) = {psi0}, expected > 0")));
            }
            for y in samples(y0, y1) {
                if (psi.eval(0.3, y)? - psi.eval(0.3, 0.0)?).abs() > 1e-12 {
                    return Err(Error::Precondition("psi must depend on x only".into()));
                }
            }
            let core = ScalarField::y() - ScalarField::x().powi(2) * psi;
            let factor = if xi.is_zero() { core } else { core * xi.exp() };
            (factor, "F3")
        }
    };
    let frame = FramePair::new(
        VectorField::new(one(), ScalarField::zero()),
        VectorField::new(ScalarField::zero(), second),
        1,
    )?;
    Chart::new(format!("normal-form-{name}"), domain, frame)
}

#[cfg(test)]
mod tests;
