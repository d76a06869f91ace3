use super::*;
use crate::catalog::{builtin, BuiltinParams};

fn grushin() -> Chart {
    make_normal_form(&NormalForm::F2 { phi: ScalarField::zero() }, None).unwrap()
}

fn f3(alpha: i8) -> Chart {
    let c = make_normal_form(
        &NormalForm::F3 {
            psi: ScalarField::one(),
            xi: ScalarField::zero(),
        },
        None,
    )
    .unwrap();
    let frame = c.frame.with_orientation(alpha).unwrap();
    c.with_frame(frame)
}

fn euclid() -> Chart {
    make_normal_form(&NormalForm::F1 { phi: ScalarField::zero() }, None).unwrap()
}

fn eval(v: &VectorField, p: Point) -> [f64; 2] {
    v.eval(p).unwrap()
}

#[test]
fn bracket_examples() {
    let g = grushin();
    assert_eq!(eval(g.frame.bracket(), [0.3, 0.2]), [0.0, 1.0]);
    let f = f3(1);
    assert_eq!(eval(f.frame.bracket(), [0.25, 0.7]), [0.0, -0.5]);
    let v = VectorField::parse("x*y", "sin(x) + y^2").unwrap();
    let b = lie_bracket(&v, &v);
    for p in [[0.1, 0.2], [-0.7, 1.3]] {
        let r = eval(&b, p);
        assert!(r[0].abs() < 1e-15 && r[1].abs() < 1e-15);
    }
}

#[test]
fn bracket_is_antisymmetric_and_satisfies_jacobi() {
    let u = VectorField::parse("y", "x^2").unwrap();
    let v = VectorField::parse("sin(y)", "x*y").unwrap();
    let w = VectorField::parse("exp(x)", "1 - y").unwrap();
    let p = [0.3, -0.4];
    let a = eval(&lie_bracket(&u, &v), p);
    let b = eval(&lie_bracket(&v, &u), p);
    assert!((a[0] + b[0]).abs() < 1e-14 && (a[1] + b[1]).abs() < 1e-14);
    let j1 = eval(&lie_bracket(&u, &lie_bracket(&v, &w)), p);
    let j2 = eval(&lie_bracket(&v, &lie_bracket(&w, &u)), p);
    let j3 = eval(&lie_bracket(&w, &lie_bracket(&u, &v)), p);
    for k in 0..2 {
        assert!((j1[k] + j2[k] + j3[k]).abs() < 1e-12);
    }
}

#[test]
fn flag_and_classification_examples() {
    assert_eq!(flag_dims(&grushin(), [0.0, 0.0]).unwrap(), (1, 2, 2));
    assert_eq!(flag_dims(&f3(1), [0.0, 0.0]).unwrap(), (1, 1, 2));
    assert_eq!(flag_dims(&grushin(), [1.0, 5.0]).unwrap(), (2, 2, 2));
    assert_eq!(classify_point(&grushin(), [0.0, 3.0]).unwrap(), PointClass::Grushin);
    assert_eq!(classify_point(&f3(1), [0.0, 0.0]).unwrap(), PointClass::Tangency);
    assert_eq!(classify_point(&f3(1), [0.5, 0.1]).unwrap(), PointClass::Ordinary);
    assert_eq!(classify_point(&f3(1), [0.5, 0.25]).unwrap(), PointClass::Grushin);
}

#[test]
fn flat_line_field_violates_h0() {
    let frame = FramePair::parse(["1", "0"], ["0", "y"], 1).unwrap();
    let chart = Chart::new("bad", [-1.0, 1.0, -1.0, 1.0], frame).unwrap();
    match classify_point(&chart, [0.3, 0.0]) {
        Err(Error::H0Violation { reason, .. }) => {
            assert!(reason.contains("embedded one-dimensional submanifold"))
        }
        other => panic!("{other:?}"),
    }
}

#[test]
fn rank_near_tolerance_is_reported() {
    let frame = FramePair::parse(["1", "0"], ["0", "x"], 1).unwrap();
    let chart = Chart::new("g", [-1.0, 1.0, -1.0, 1.0], frame).unwrap();
    assert!(matches!(
        flag_dims(&chart, [1e-7, 0.0]),
        Err(Error::RankIndeterminate { .. })
    ));
}

#[test]
fn traces_grushin_axis() {
    let curves = trace_singular_locus(&grushin(), 64).unwrap();
    assert_eq!(curves.len(), 1);
    let c = &curves[0];
    assert!(!c.closed);
    assert!(c.points.iter().all(|p| p[0].abs() < 1e-8));
    // M⁺ = {x > 0} on the left: the curve runs downwards.
    assert!(c.points[0][1] > c.points[c.points.len() - 1][1]);
    let span = c.points[0][1] - c.points.last().unwrap()[1];
    assert!((span - 2.0).abs() < 1e-9);
}

#[test]
fn traces_parabola() {
    for alpha in [1, -1] {
        let chart = f3(alpha);
        let curves = trace_singular_locus(&chart, 80).unwrap();
        assert_eq!(curves.len(), 1);
        for p in &curves[0].points {
            assert!((p[1] - p[0] * p[0]).abs() < 1e-8);
            assert!(chart.frame.det_at(*p).unwrap().abs() < 1e-10);
        }
        // M⁺ lies to the left of each segment.
        let c = &curves[0];
        for w in c.points.windows(2).step_by(7) {
            let mid = [(w[0][0] + w[1][0]) / 2.0, (w[0][1] + w[1][1]) / 2.0];
            let t = [w[1][0] - w[0][0], w[1][1] - w[0][1]];
            let n = t[0].hypot(t[1]);
            let left = [mid[0] - 1e-3 * t[1] / n, mid[1] + 1e-3 * t[0] / n];
            let right = [mid[0] + 1e-3 * t[1] / n, mid[1] - 1e-3 * t[0] / n];
            assert!(chart.frame.signed_det_at(left).unwrap() > 0.0);
            assert!(chart.frame.signed_det_at(right).unwrap() < 0.0);
        }
    }
}

#[test]
fn euclidean_frame_has_empty_locus() {
    assert!(trace_singular_locus(&euclid(), 32).unwrap().is_empty());
}

#[test]
fn torus_locus_wraps_around() {
    let s = builtin("torus-tangency", BuiltinParams { a: Some(0.5), alpha: None }).unwrap();
    let chart = s.topology_chart();
    let curves = trace_singular_locus(chart, 96).unwrap();
    assert_eq!(curves.len(), 2);
    for c in &curves {
        assert!(c.closed);
        assert!((c.shift[0].abs() - 2.0 * std::f64::consts::PI).abs() < 1e-12);
        assert_eq!(c.shift[1], 0.0);
    }
}

#[test]
fn tangency_points_of_examples() {
    let chart = f3(1);
    let c = &trace_singular_locus(&chart, 64).unwrap()[0];
    let t = find_tangency_points(c, &chart).unwrap();
    assert_eq!(t.len(), 1);
    assert!(t[0].location[0].abs() < 1e-9 && t[0].location[1].abs() < 1e-9);
    let g = grushin();
    let c = &trace_singular_locus(&g, 64).unwrap()[0];
    assert!(find_tangency_points(c, &g).unwrap().is_empty());
}

#[test]
fn torus_has_four_tangencies_per_component() {
    use std::f64::consts::FRAC_PI_2;
    let s = builtin("torus-tangency", BuiltinParams { a: Some(0.5), alpha: None }).unwrap();
    let chart = s.topology_chart();
    for c in trace_singular_locus(chart, 128).unwrap() {
        let t = find_tangency_points(&c, chart).unwrap();
        let mut xs: Vec<f64> = t.iter().map(|r| r.location[0]).collect();
        xs.sort_by(f64::total_cmp);
        assert_eq!(xs.len(), 4, "{xs:?}");
        for (k, x) in xs.iter().enumerate() {
            let d = (x - k as f64 * FRAC_PI_2).abs();
            assert!(d < 1e-8 || (x - 2.0 * std::f64::consts::PI).abs() < 1e-8, "{xs:?}");
        }
    }
}

#[test]
fn det_changes_sign_across_traced_curves() {
    let chart = f3(1);
    let c = &trace_singular_locus(&chart, 64).unwrap()[0];
    for &p in c.points.iter().step_by(5) {
        let g = chart.frame.det_grad_at(p).unwrap();
        let n = g[0].hypot(g[1]);
        let h = 1e-4;
        let a = chart.frame.det_at([p[0] + h * g[0] / n, p[1] + h * g[1] / n]).unwrap();
        let b = chart.frame.det_at([p[0] - h * g[0] / n, p[1] - h * g[1] / n]).unwrap();
        assert!(a > 0.0 && b < 0.0);
        assert_eq!(flag_dims(&chart, p).map(|d| d.0).unwrap_or(1), 1);
    }
}

#[test]
fn normal_form_preconditions() {
    assert!(make_normal_form(&NormalForm::F2 { phi: ScalarField::parse("y").unwrap() }, None).is_err());
    assert!(make_normal_form(
        &NormalForm::F3 {
            psi: ScalarField::parse("-1").unwrap(),
            xi: ScalarField::zero()
        },
        None
    )
    .is_err());
    let g = grushin();
    assert_eq!(g.frame.y().0[1], ScalarField::x());
    let e = euclid();
    assert_eq!(e.frame.y().0[1].as_constant(), Some(1.0));
    let f = f3(1);
    assert!(f.frame.y().0[1].max_grid_difference(&ScalarField::parse("y - x^2").unwrap(), f.domain, 20) < 1e-15);
}
