use super::*;
use crate::frames::FramePair;

fn chart(y: &str, domain: [f64; 4]) -> Chart {
    Chart::new("c", domain, FramePair::parse(["1", "0"], ["0", y], 1).unwrap()).unwrap()
}

#[test]
fn horizontal_lines_in_f3_model() {
    let c = chart("y - x^2", [-1.0, 1.0, -1.0, 1.0]);
    let path = integrate_geodesic(&c, [-1.0, 0.5], [1.0, 0.0], 1.9, 1e-3).unwrap();
    assert!(path.states.iter().all(|s| (s.q[1] - 0.5).abs() < 1e-12));
    assert!((path.end().q[0] - 0.9).abs() < 1e-12);
}

#[test]
fn euclidean_lines_are_straight() {
    let c = chart("1", [-5.0, 5.0, -5.0, 5.0]);
    let p = [0.6, 0.8];
    let path = integrate_geodesic(&c, [0.1, -0.2], p, 3.0, 1e-2).unwrap();
    let e = path.end().q;
    assert!((e[0] - (0.1 + 1.8)).abs() < 1e-12 && (e[1] - (-0.2 + 2.4)).abs() < 1e-12);
    assert!((path.length - 3.0).abs() < 1e-15);
}

#[test]
fn grushin_geodesic_matches_closed_form() {
    let c = chart("x", [-2.0, 2.0, -10.0, 10.0]);
    let path = integrate_geodesic(&c, [1.0, 0.0], [0.0, 1.0], 10.0, 1e-3).unwrap();
    for s in path.states.iter().step_by(500) {
        let t = s.t;
        assert!((s.q[0] - t.cos()).abs() < 1e-10);
        assert!((s.q[1] - (t / 2.0 + (2.0 * t).sin() / 4.0)).abs() < 1e-10);
        assert!((s.h - 0.5).abs() < 1e-10);
    }
    let drift = path.states.iter().map(|s| (s.h - 0.5).abs()).fold(0.0, f64::max);
    assert!(drift < 1e-9);
}

#[test]
fn fourth_order_convergence() {
    let c = chart("x", [-2.0, 2.0, -10.0, 10.0]);
    let exact = |t: f64| [t.cos(), t / 2.0 + (2.0 * t).sin() / 4.0];
    let err = |step: f64| {
        let e = integrate_geodesic(&c, [1.0, 0.0], [0.0, 1.0], 3.0, step).unwrap();
        let q = e.end().q;
        let x = exact(3.0);
        (q[0] - x[0]).hypot(q[1] - x[1])
    };
    let (a, b) = (err(0.1), err(0.05));
    assert!(a / b > 12.0, "{a} {b}");
}

#[test]
fn time_reversal() {
    let c = chart("y - x^2", [-3.0, 3.0, -3.0, 3.0]);
    let q0 = [0.2, 0.9];
    let p0 = normalize_covector(&c.frame, q0, [0.3, 1.0]).unwrap();
    let fwd = integrate_geodesic(&c, q0, p0, 1.0, 1e-3).unwrap();
    let end = fwd.end();
    let back = integrate_geodesic(&c, end.q, end.p, -1.0, 1e-3).unwrap();
    let q = back.end().q;
    assert!((q[0] - q0[0]).hypot(q[1] - q0[1]) < 1e-8);
}

#[test]
fn leaving_the_chart_is_reported() {
    let c = chart("x", [-1.0, 1.0, -1.0, 1.0]);
    match integrate_geodesic(&c, [0.5, 0.0], [1.0, 0.0], 2.0, 1e-2) {
        Err(Error::ExitedDomain { time, .. }) => assert!((time - 0.5).abs() < 0.011),
        other => panic!("{other:?}"),
    }
}

#[test]
fn transversal_shots() {
    let c = chart("y - x^2", [-1.0, 1.0, -1.0, 1.0]);
    let w = |s: f64| [0.0, s];
    let (q, p) = transversal_covector(&c.frame, &w, 0.5, 1).unwrap();
    assert_eq!(q, [0.0, 0.5]);
    assert!((p[0] - 1.0).abs() < 1e-10 && p[1].abs() < 1e-10);
    let g = chart("x", [-1.0, 1.0, -1.0, 1.0]);
    let path = geodesics_from_transversal(&g, &w, 0.3, 1, 0.8, 1e-3).unwrap();
    for s in &path.states {
        assert!((s.q[1] - 0.3).abs() < 1e-12);
        assert!((s.q[0] - s.t).abs() < 1e-12);
    }
    // The x-axis is tangent to the distribution of the F3 model at the origin.
    let along_x = |s: f64| [s, 0.0];
    let tangent = |s: f64| [s, s * s];
    assert!(transversal_covector(&c.frame, &along_x, 0.3, 1).is_ok());
    assert!(matches!(
        transversal_covector(&c.frame, &tangent, 0.0, 1),
        Err(Error::Transversality { .. })
    ));
}

#[test]
fn grushin_distance_is_abs_x() {
    let g = chart("x", [-1.0, 1.0, -1.0, 1.0]);
    for (x, y) in [(0.3, 0.1), (-0.25, -0.6), (0.05, 0.4)] {
        let d = distance_to_z(&g, [x, y], DistanceOptions::default()).unwrap();
        assert!((d - f64::abs(x)).abs() < 1e-6, "{d} vs {x}");
    }
    assert!(matches!(
        distance_to_z(&g, [0.0, 0.2], DistanceOptions::default()),
        Err(Error::OnSingularLocus { .. })
    ));
}

#[test]
fn f3_axis_point_has_two_symmetric_minimizers() {
    let c = chart("y - x^2", [-1.0, 1.0, -1.0, 1.0]);
    let q = [0.0, 0.05];
    let fan = 360;
    let hits = fan_hits(&c, q, fan, 1.0, 2e-3).unwrap();
    let best = hits.iter().flatten().fold(f64::INFINITY, |m, &v| m.min(v));
    let argmins: Vec<usize> = (0..fan)
        .filter(|&k| hits[k].is_some_and(|v| v < best + 1e-6))
        .collect();
    // θ ↦ π − θ is the mirror x ↦ −x.
    for &k in &argmins {
        let mirror = (fan + fan / 2 - k) % fan;
        let m = hits[mirror].unwrap();
        assert!((m - hits[k].unwrap()).abs() < 1e-9);
    }
    let d = distance_to_z(&c, q, DistanceOptions::default()).unwrap();
    assert!(d <= best + 1e-9 && d > 0.0);
    // The minimizers are not the vertical direction.
    let vertical = hits[fan / 4].unwrap_or(f64::INFINITY);
    assert!(vertical > d + 1e-4);
}

#[test]
fn grushin_fronts_are_vertical_lines() {
    let g = chart("x", [-1.0, 1.0, -1.0, 1.0]);
    let eps = 0.03;
    let b = m_eps_boundary(&g, eps, 32, 1e-3).unwrap();
    assert_eq!(b.plus.len(), 1);
    assert_eq!(b.minus.len(), 1);
    assert!(b.plus[0].iter().all(|p| (p[0] - eps).abs() < 1e-6));
    assert!(b.minus[0].iter().all(|p| (p[0] + eps).abs() < 1e-6));
}

#[test]
fn f3_inner_front_has_corner_on_axis() {
    let c = chart("y - x^2", [-1.0, 1.0, -1.0, 1.0]);
    let b = m_eps_boundary(&c, 0.02, 400, 1e-4).unwrap();
    let front = &b.plus[0];
    let k = front
        .iter()
        .position(|p| p[0].abs() < 1e-9)
        .expect("corner on the axis");
    let before = front[k - 1];
    let after = front[k + 1];
    let s1 = (front[k][1] - before[1]) / (front[k][0] - before[0]);
    let s2 = (after[1] - front[k][1]) / (after[0] - front[k][0]);
    assert!(s1 * s2 < 0.0 || (s1 - s2).abs() > 0.1, "{s1} {s2}");
}

#[test]
fn loop_removal() {
    let pts = [[0.0, 0.0], [2.0, 0.0], [2.0, 1.0], [1.0, -1.0], [1.0, -2.0]];
    let out = remove_loops(&pts);
    assert_eq!(out.len(), 4);
    assert!((out[1][0] - 1.5).abs() < 1e-12 && out[1][1].abs() < 1e-12);
}
