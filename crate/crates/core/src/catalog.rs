//! Built-in surfaces and the JSON surface format.

mod spec;
mod validate;

use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::frames::{Chart, Edge, FramePair, Ownership};

pub use spec::{load, ChartSpec, IdentificationSpec, SurfaceSpec};
pub use validate::{validate, ValidationReport, Violation};

/// How two chart edges are glued.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum GlueMap {
    /// Opposite edges of one chart, or matching edges of two charts, glued
    /// by translation.
    Periodic,
    /// The edge is a single point.
    Collapse,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Identification {
    pub chart: String,
    pub edge: Edge,
    pub to_chart: String,
    pub to_edge: Edge,
    pub map: GlueMap,
}

/// A surface given by an atlas of frame charts.
#[derive(Clone, Debug)]
pub struct Surface {
    pub name: String,
    /// Charts used for integration; ownership rules make them a partition.
    pub charts: Vec<Chart>,
    pub identifications: Vec<Identification>,
    /// Declared Euler number of `E` (absent for non-compact surfaces).
    pub e_e: Option<i64>,
    /// Declared number of tangency points, when known.
    pub tangency_count: Option<usize>,
    pub notes: String,
    /// Chart covering the whole surface, used for tracing `Z` and for
    /// Euler characteristics. Defaults to the first chart.
    pub topology: Option<Chart>,
    /// Default grid resolution (cells per axis) for tracing and topology.
    pub grid: usize,
}

impl Surface {
    pub fn topology_chart(&self) -> &Chart {
        self.topology.as_ref().unwrap_or(&self.charts[0])
    }

    pub fn chart(&self, name: &str) -> Option<&Chart> {
        self.charts.iter().find(|c| c.name == name)
    }

    /// True if every chart is compact after identifications (no free edges).
    pub fn is_closed(&self) -> bool {
        let chart = self.topology_chart();
        [Edge::Left, Edge::Right, Edge::Bottom, Edge::Top]
            .iter()
            .all(|&e| {
                let axis = matches!(e, Edge::Bottom | Edge::Top) as usize;
                chart.periodic[axis] || chart.collapsed.contains(&e)
            })
    }
}

/// Optional parameters of the built-in surfaces.
#[derive(Clone, Copy, Debug, Default)]
pub struct BuiltinParams {
    /// Torus amplitude `a ∈ (0, 1)`.
    pub a: Option<f64>,
    /// Orientation sign of the frame for the planar models.
    pub alpha: Option<i8>,
}

pub const BUILTIN_NAMES: [&str; 5] = [
    "grushin-plane",
    "tangency-plane",
    "sphere-two-rotations",
    "torus-tangency",
    "round-sphere",
];

/// Half-width of the polar caps cut out of the spherical band charts.
pub const CAP_ANGLE: f64 = 0.2;

/// Looks up a built-in surface. `torus-tangency(0.3)` is accepted as an
/// alternative to passing `a` in the parameters.
pub fn builtin(name: &str, params: BuiltinParams) -> Result<Surface> {
    let (base, inline) = match name.split_once('(') {
        Some((b, rest)) => {
            let v = rest
                .strip_suffix(')')
                .and_then(|v| v.trim().parse::<f64>().ok())
                .ok_or_else(|| Error::UnknownSurface(name.to_string()))?;
            (b.trim(), Some(v))
        }
        None => (name.trim(), None),
    };
    let alpha = params.alpha.unwrap_or(1);
    match base {
        "grushin-plane" => grushin_plane(alpha),
        "tangency-plane" => tangency_plane(alpha),
        "sphere-two-rotations" => sphere_two_rotations(),
        "torus-tangency" => torus_tangency(inline.or(params.a).unwrap_or(0.5)),
        "round-sphere" => round_sphere(),
        _ => Err(Error::UnknownSurface(name.to_string())),
    }
}

fn single_chart(name: &str, chart: Chart, e_e: Option<i64>, tangencies: usize, notes: &str, grid: usize) -> Surface {
    let mut identifications = Vec::new();
    for (axis, (lo, hi)) in [(0, (Edge::Left, Edge::Right)), (1, (Edge::Bottom, Edge::Top))] {
        if chart.periodic[axis] {
            identifications.push(Identification {
                chart: chart.name.clone(),
                edge: lo,
                to_chart: chart.name.clone(),
                to_edge: hi,
                map: GlueMap::Periodic,
            });
        }
    }
    Surface {
        name: name.to_string(),
        charts: vec![chart],
        identifications,
        e_e,
        tangency_count: Some(tangencies),
        notes: notes.to_string(),
        topology: None,
        grid,
    }
}

pub fn grushin_plane(alpha: i8) -> Result<Surface> {
    let frame = FramePair::parse(["1", "0"], ["0", "x"], alpha)?;
    let chart = Chart::new("grushin", [-1.0, 1.0, -1.0, 1.0], frame)?;
    Ok(single_chart(
        "grushin-plane",
        chart,
        None,
        0,
        "Grushin plane on [-1,1]^2; Z is the y-axis",
        128,
    ))
}

pub fn tangency_plane(alpha: i8) -> Result<Surface> {
    let frame = FramePair::parse(["1", "0"], ["0", "y - x^2"], alpha)?;
    let chart = Chart::new("tangency", [-1.0, 1.0, -1.0, 1.0], frame)?;
    Ok(single_chart(
        "tangency-plane",
        chart,
        None,
        1,
        "model with a tangency point at the origin; Z is the parabola y = x^2",
        128,
    ))
}

pub fn torus_tangency(a: f64) -> Result<Surface> {
    if !(a > 0.0 && a < 1.0) {
        return Err(Error::Precondition(format!(
            "torus-tangency needs 0 < a < 1, got {a}"
        )));
    }
    let y = format!("sin(y) - {a:?}*sin(x)^2");
    let frame = FramePair::parse(["1", "0"], ["0", &y], 1)?;
    let chart = Chart::new("torus", [0.0, 2.0 * PI, 0.0, 2.0 * PI], frame)?.with_periodic(true, true);
    let mut s = single_chart(
        "torus-tangency",
        chart,
        Some(0),
        8,
        "flat torus with two components of Z, four tangency points on each",
        192,
    );
    s.name = format!("torus-tangency({a})");
    Ok(s)
}

fn band_chart(name: &str, x: [&str; 2], y: [&str; 2], full: bool) -> Result<Chart> {
    let frame = FramePair::parse(x, y, 1)?;
    let (lo, hi) = if full { (0.0, PI) } else { (CAP_ANGLE, PI - CAP_ANGLE) };
    let mut chart = Chart::new(name, [lo, hi, 0.0, 2.0 * PI], frame)?.with_periodic(false, true);
    if full {
        chart.collapsed = vec![Edge::Left, Edge::Right];
    }
    Ok(chart)
}

fn cap_chart(name: &str, x: [&str; 2], y: [&str; 2]) -> Result<Chart> {
    let frame = FramePair::parse(x, y, 1)?;
    let r = (CAP_ANGLE / 2.0).tan();
    let h = 1.5 * r;
    let mut chart = Chart::new(name, [-h, h, -h, h], frame)?;
    chart.ownership = Ownership::Disk {
        center: [0.0, 0.0],
        radius: r,
    };
    Ok(chart)
}

fn sphere_surface(name: &str, band: [[&str; 2]; 2], north: [[&str; 2]; 2], south: [[&str; 2]; 2], e_e: i64, notes: &str) -> Result<Surface> {
    let charts = vec![
        band_chart("band", band[0], band[1], false)?,
        cap_chart("north-cap", north[0], north[1])?,
        cap_chart("south-cap", south[0], south[1])?,
    ];
    let identifications = vec![
        Identification {
            chart: "band".into(),
            edge: Edge::Bottom,
            to_chart: "band".into(),
            to_edge: Edge::Top,
            map: GlueMap::Periodic,
        },
    ];
    Ok(Surface {
        name: name.to_string(),
        charts,
        identifications,
        e_e: Some(e_e),
        tangency_count: Some(0),
        notes: notes.to_string(),
        topology: Some(band_chart("polar", band[0], band[1], true)?),
        grid: 128,
    })
}

/// Unit sphere with `X = e_z × p`, `Y = e_x × p`.
///
/// The band chart uses polar angle `x = θ` from the `+e_y` axis and
/// longitude `y = φ` with `p = (sin θ sin φ, cos θ, sin θ cos φ)`; the caps
/// are stereographic charts around `±e_y`.
pub fn sphere_two_rotations() -> Result<Surface> {
    sphere_surface(
        "sphere-two-rotations",
        [
            ["-sin(y)", "-cos(x)*cos(y)/sin(x)"],
            ["cos(y)", "-cos(x)*sin(y)/sin(x)"],
        ],
        [["-x*y", "(x^2 - y^2 - 1)/2"], ["(x^2 - y^2 + 1)/2", "x*y"]],
        [["(x^2 - y^2 + 1)/2", "x*y"], ["-x*y", "(x^2 - y^2 - 1)/2"]],
        0,
        "rotation fields about the z- and x-axes; Z is the great circle {y = 0}",
    )
}

/// Unit sphere with its round metric.
pub fn round_sphere() -> Result<Surface> {
    sphere_surface(
        "round-sphere",
        [["1", "0"], ["0", "1/sin(x)"]],
        [["(1 + x^2 + y^2)/2", "0"], ["0", "(1 + x^2 + y^2)/2"]],
        [["(1 + x^2 + y^2)/2", "0"], ["0", "(1 + x^2 + y^2)/2"]],
        2,
        "round unit sphere; Z is empty",
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    fn all_builtins() -> Vec<Surface> {
        let mut v: Vec<Surface> = BUILTIN_NAMES
            .iter()
            .map(|n| builtin(n, BuiltinParams::default()).unwrap())
            .collect();
        v.push(builtin("torus-tangency(0.3)", BuiltinParams::default()).unwrap());
        v.push(builtin("tangency-plane", BuiltinParams { a: None, alpha: Some(-1) }).unwrap());
        v
    }

    #[test]
    fn builtins_validate_with_declared_tangency_counts() {
        for s in all_builtins() {
            let r = validate(&s).unwrap();
            assert!(r.passed(), "{}: {:?}", s.name, r.violations);
            assert_eq!(Some(r.tangency_points), s.tangency_count, "{}", s.name);
        }
    }

    #[test]
    fn unknown_names_and_bad_parameters() {
        assert!(matches!(
            builtin("klein-bottle", BuiltinParams::default()),
            Err(Error::UnknownSurface(_))
        ));
        assert!(builtin("torus-tangency", BuiltinParams { a: Some(1.5), alpha: None }).is_err());
    }

    #[test]
    fn double_zero_is_reported() {
        let json = r#"{"name": "bad", "charts": [{"name": "c", "domain": [-1, 1, -1, 1],
            "X": ["1", "0"], "Y": ["0", "x^2"], "orientation_sign": 1}]}"#;
        let s = SurfaceSpec::from_json(json).unwrap().build().unwrap();
        let r = validate(&s).unwrap();
        assert!(!r.passed());
        assert!(r.violations[0].point[0].abs() < 1e-4, "{:?}", r.violations);
    }

    #[test]
    fn grushin_spec_loads_and_validates() {
        let json = r#"{"name": "g", "e_E": null, "charts": [{"name": "c", "domain": [-1, 1, -1, 1],
            "X": ["1", "0"], "Y": ["0", "x"], "orientation_sign": 1}], "identifications": []}"#;
        let s = SurfaceSpec::from_json(json).unwrap().build().unwrap();
        assert!(validate(&s).unwrap().passed());
    }

    #[test]
    fn schema_errors() {
        let missing = r#"{"name": "g", "charts": [{"name": "c", "domain": [-1, 1, -1, 1],
            "X": ["1", "0"], "orientation_sign": 1}]}"#;
        assert!(matches!(SurfaceSpec::from_json(missing), Err(Error::Schema(_))));
        let bad_expr = r#"{"name": "g", "charts": [{"name": "c", "domain": [-1, 1, -1, 1],
            "X": ["1", "0"], "Y": ["0", "z"], "orientation_sign": 1}]}"#;
        assert!(matches!(
            SurfaceSpec::from_json(bad_expr).unwrap().build(),
            Err(Error::Schema(_))
        ));
        let bad_edge = r#"{"name": "g", "charts": [{"name": "c", "domain": [0, 1, 0, 1],
            "X": ["1", "0"], "Y": ["0", "1"], "orientation_sign": 1}],
            "identifications": [{"chart": "c", "edge": "north", "map": "periodic"}]}"#;
        assert!(SurfaceSpec::from_json(bad_edge).unwrap().build().is_err());
    }

    #[test]
    fn json_round_trip_preserves_surfaces() {
        for s in all_builtins() {
            let text = serde_json::to_string(&SurfaceSpec::from_surface(&s)).unwrap();
            let back = SurfaceSpec::from_json(&text).unwrap().build().unwrap();
            assert_eq!(back.charts.len(), s.charts.len());
            assert_eq!(back.e_e, s.e_e);
            for (a, b) in s.charts.iter().zip(&back.charts) {
                assert_eq!(a.periodic, b.periodic);
                assert_eq!(a.ownership, b.ownership);
                assert!(a.frame.det().max_grid_difference(b.frame.det(), a.domain, 16) < 1e-12);
            }
            let (ta, tb) = (s.topology_chart(), back.topology_chart());
            assert_eq!(ta.collapsed, tb.collapsed);
            assert_eq!(ta.periodic, tb.periodic);
        }
    }

    #[test]
    fn two_rotation_frame_matches_cross_products() {
        // p = (sin θ sin φ, cos θ, sin θ cos φ); X = e_z × p, Y = e_x × p
        // pulled back through the chart differential.
        let s = sphere_two_rotations().unwrap();
        let band = s.chart("band").unwrap();
        for (th, ph) in [(0.7, 0.3), (2.1, 4.0), (1.2, 5.5)] {
            let (st, ct, sp, cp): (f64, f64, f64, f64) = (
                f64::sin(th),
                f64::cos(th),
                f64::sin(ph),
                f64::cos(ph),
            );
            let p = [st * sp, ct, st * cp];
            let d_th = [ct * sp, -st, ct * cp];
            let d_ph = [st * cp, 0.0, -st * sp];
            let push = |v: [f64; 2]| -> [f64; 3] {
                [0, 1, 2].map(|k| v[0] * d_th[k] + v[1] * d_ph[k])
            };
            let [x, y] = band.frame.eval_frame([th, ph]).unwrap();
            let ez = [-p[1], p[0], 0.0];
            let ex = [0.0, -p[2], p[1]];
            let (px, py) = (push(x), push(y));
            for k in 0..3 {
                assert!((px[k] - ez[k]).abs() < 1e-12);
                assert!((py[k] - ex[k]).abs() < 1e-12);
            }
        }
    }
}
