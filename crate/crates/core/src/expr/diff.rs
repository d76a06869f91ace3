use super::{Func, Node, ScalarField, Var};

pub(super) fn diff(f: &ScalarField, var: Var) -> ScalarField {
    match f.node() {
        Node::Const(_) => ScalarField::zero(),
        Node::Var(v) => {
            if *v == var {
                ScalarField::one()
            } else {
                ScalarField::zero()
            }
        }
        Node::Neg(a) => -diff(a, var),
        Node::Add(a, b) => diff(a, var) + diff(b, var),
        Node::Sub(a, b) => diff(a, var) - diff(b, var),
        Node::Mul(a, b) => diff(a, var) * b + a * diff(b, var),
        Node::Div(a, b) => {
            let da = diff(a, var);
            let db = diff(b, var);
            if db.is_zero() {
                da / b
            } else {
                (da * b - a * db) / b.powi(2)
            }
        }
        Node::Pow(a, n) => {
            let da = diff(a, var);
            if da.is_zero() {
                return ScalarField::zero();
            }
            ScalarField::constant(*n as f64) * a.powi(n - 1) * da
        }
        Node::Call(func, a) => {
            let da = diff(a, var);
            if da.is_zero() {
                return ScalarField::zero();
            }
            let outer = match func {
                Func::Sin => a.cos(),
                Func::Cos => -a.sin(),
                Func::Exp => f.clone(),
                Func::Asin => ScalarField::one() / (ScalarField::one() - a.powi(2)).sqrt(),
                Func::Sqrt => ScalarField::constant(0.5) / f,
            };
            outer * da
        }
    }
}

#[cfg(test)]
mod tests {
    use super::super::*;
    use proptest::prelude::*;

    // Random polynomial-ish fields with bounded size.
    fn arb_field() -> impl Strategy<Value = ScalarField> {
        let leaf = prop_oneof![
            (-3.0f64..3.0).prop_map(ScalarField::constant),
            Just(ScalarField::x()),
            Just(ScalarField::y()),
        ];
        leaf.prop_recursive(4, 24, 2, |inner| {
            prop_oneof![
                (inner.clone(), inner.clone()).prop_map(|(a, b)| a + b),
                (inner.clone(), inner.clone()).prop_map(|(a, b)| a - b),
                (inner.clone(), inner.clone()).prop_map(|(a, b)| a * b),
                (inner.clone(), 0i32..4).prop_map(|(a, n)| a.powi(n)),
                inner.clone().prop_map(|a| a.sin()),
            ]
        })
    }

    proptest! {
        #[test]
        fn derivative_matches_central_difference(
            f in arb_field(),
            x in -1.5f64..1.5,
            y in -1.5f64..1.5,
        ) {
            let h = 1e-5;
            for (ex, ey) in [(1.0, 0.0), (0.0, 1.0)] {
                let var = if ex > 0.0 { Var::X } else { Var::Y };
                let exact = f.diff(var).eval(x, y).unwrap();
                let fd = |h: f64| {
                    (f.eval(x + ex * h, y + ey * h).unwrap() - f.eval(x - ex * h, y - ey * h).unwrap()) / (2.0 * h)
                };
                let (fine, coarse) = (fd(h), fd(2.0 * h));
                // truncation error of the fine difference is about |fine - coarse| / 3
                let scale = exact.abs().max(f.eval(x, y).unwrap().abs()).max(1.0);
                let tol = 1e-6 * scale + (fine - coarse).abs();
                prop_assert!((exact - fine).abs() < tol, "{f}: {exact} vs {fine}");
            }
        }

        #[test]
        fn mixed_partials_commute(
            f in arb_field(),
            x in -1.5f64..1.5,
            y in -1.5f64..1.5,
        ) {
            let xy = f.diff(Var::X).diff(Var::Y).eval(x, y).unwrap();
            let yx = f.diff(Var::Y).diff(Var::X).eval(x, y).unwrap();
            prop_assert!((xy - yx).abs() <= 1e-12 * xy.abs().max(1.0));
        }
    }

    #[test]
    fn arcsin_and_sqrt_derivatives() {
        let f = ScalarField::parse("arcsin(0.5*sin(x)^2)").unwrap();
        let d = f.diff(Var::X);
        let x = 0.7;
        let h = 1e-6;
        let fd = (f.eval(x + h, 0.0).unwrap() - f.eval(x - h, 0.0).unwrap()) / (2.0 * h);
        assert!((d.eval(x, 0.0).unwrap() - fd).abs() < 1e-8);
        let g = ScalarField::parse("sqrt(1 + x^2)").unwrap();
        assert!((g.diff(Var::X).eval(1.0, 0.0).unwrap() - 1.0 / 2f64.sqrt()).abs() < 1e-14);
    }
}
