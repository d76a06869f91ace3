//! Scalar fields in the two chart variables `x` and `y`.
//!
//! A [`ScalarField`] is an immutable expression tree. Trees built by the
//! parser mirror the input text exactly; trees built through the arithmetic
//! operators and [`ScalarField::diff`] go through light canonicalization
//! (constant folding and the 0/1 identities) so that derivatives of
//! derivatives stay small.

mod diff;
mod eval;
mod parse;

use std::fmt;
use std::ops::{Add, Div, Mul, Neg, Sub};
use std::sync::{Arc, OnceLock};

pub use eval::EvalError;
pub use parse::ParseError;

use eval::Program;

/// Chart coordinate.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Var {
    X,
    Y,
}

impl Var {
    pub fn name(self) -> &'static str {
        match self {
            Var::X => "x",
            Var::Y => "y",
        }
    }
}

/// Elementary functions understood by the grammar.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Func {
    Sin,
    Cos,
    Exp,
    Asin,
    Sqrt,
}

impl Func {
    pub fn name(self) -> &'static str {
        match self {
            Func::Sin => "sin",
            Func::Cos => "cos",
            Func::Exp => "exp",
            Func::Asin => "arcsin",
            Func::Sqrt => "sqrt",
        }
    }

    pub(crate) fn from_name(name: &str) -> Option<Func> {
        match name {
            "sin" => Some(Func::Sin),
            "cos" => Some(Func::Cos),
            "exp" => Some(Func::Exp),
            "arcsin" | "asin" => Some(Func::Asin),
            "sqrt" => Some(Func::Sqrt),
            _ => None,
        }
    }
}

#[derive(Debug, PartialEq)]
pub(crate) enum Node {
    Const(f64),
    Var(Var),
    Neg(ScalarField),
    Add(ScalarField, ScalarField),
    Sub(ScalarField, ScalarField),
    Mul(ScalarField, ScalarField),
    Div(ScalarField, ScalarField),
    Pow(ScalarField, i32),
    Call(Func, ScalarField),
}

struct Inner {
    node: Node,
    program: OnceLock<Program>,
}

/// Expression tree over the variables `x` and `y`.
///
/// Cloning is cheap (reference counted). Evaluation compiles the tree to a
/// flat stack program on first use.
#[derive(Clone)]
pub struct ScalarField(Arc<Inner>);

impl PartialEq for ScalarField {
    fn eq(&self, other: &Self) -> bool {
        Arc::ptr_eq(&self.0, &other.0) || self.0.node == other.0.node
    }
}

impl fmt::Debug for ScalarField {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "ScalarField({self})")
    }
}

impl ScalarField {
    pub(crate) fn from_node(node: Node) -> Self {
        ScalarField(Arc::new(Inner {
            node,
            program: OnceLock::new(),
        }))
    }

    pub(crate) fn node(&self) -> &Node {
        &self.0.node
    }

    pub fn constant(value: f64) -> Self {
        Self::from_node(Node::Const(value))
    }

    pub fn var(v: Var) -> Self {
        Self::from_node(Node::Var(v))
    }

    pub fn x() -> Self {
        Self::var(Var::X)
    }

    pub fn y() -> Self {
        Self::var(Var::Y)
    }

    pub fn zero() -> Self {
        Self::constant(0.0)
    }

    pub fn one() -> Self {
        Self::constant(1.0)
    }

    /// Parses the infix grammar documented in the README.
    pub fn parse(text: &str) -> Result<Self, ParseError> {
        parse::parse(text)
    }

    /// Value if the tree is a literal constant.
    pub fn as_constant(&self) -> Option<f64> {
        match self.node() {
            Node::Const(c) => Some(*c),
            _ => None,
        }
    }

    pub fn is_zero(&self) -> bool {
        self.as_constant() == Some(0.0)
    }

    pub fn is_one(&self) -> bool {
        self.as_constant() == Some(1.0)
    }

    pub fn powi(&self, n: i32) -> Self {
        match (self.node(), n) {
            (_, 0) => Self::one(),
            (_, 1) => self.clone(),
            (Node::Const(c), _) => Self::constant(c.powi(n)),
            (Node::Pow(base, m), _) => base.powi(m * n),
            _ => Self::from_node(Node::Pow(self.clone(), n)),
        }
    }

    pub fn apply(&self, func: Func) -> Self {
        if let Some(c) = self.as_constant() {
            let v = match func {
                Func::Sin => c.sin(),
                Func::Cos => c.cos(),
                Func::Exp => c.exp(),
                Func::Asin => c.asin(),
                Func::Sqrt => c.sqrt(),
            };
            if v.is_finite() {
                return Self::constant(v);
            }
        }
        Self::from_node(Node::Call(func, self.clone()))
    }

    pub fn sin(&self) -> Self {
        self.apply(Func::Sin)
    }

    pub fn cos(&self) -> Self {
        self.apply(Func::Cos)
    }

    pub fn exp(&self) -> Self {
        self.apply(Func::Exp)
    }

    pub fn asin(&self) -> Self {
        self.apply(Func::Asin)
    }

    pub fn sqrt(&self) -> Self {
        self.apply(Func::Sqrt)
    }

    /// Number of nodes in the tree.
    pub fn size(&self) -> usize {
        match self.node() {
            Node::Const(_) | Node::Var(_) => 1,
            Node::Neg(a) | Node::Pow(a, _) | Node::Call(_, a) => 1 + a.size(),
            Node::Add(a, b) | Node::Sub(a, b) | Node::Mul(a, b) | Node::Div(a, b) => {
                1 + a.size() + b.size()
            }
        }
    }

    /// Evaluates at `(x, y)`.
    pub fn eval(&self, x: f64, y: f64) -> Result<f64, EvalError> {
        self.0.program.get_or_init(|| Program::compile(self)).run(x, y)
    }

    /// Evaluates at a point given as an array.
    pub fn eval_at(&self, p: [f64; 2]) -> Result<f64, EvalError> {
        self.eval(p[0], p[1])
    }

    /// Partial derivative with respect to `var`.
    pub fn diff(&self, var: Var) -> Self {
        diff::diff(self, var)
    }

    /// Compares two fields by evaluation on a dense grid of the rectangle
    /// `[x0,x1]×[y0,y1]`. Points where either side fails to evaluate are
    /// skipped; returns the largest absolute difference seen.
    pub fn max_grid_difference(&self, other: &ScalarField, domain: [f64; 4], n: usize) -> f64 {
        let [x0, x1, y0, y1] = domain;
        let mut worst: f64 = 0.0;
        for i in 0..n {
            let x = x0 + (x1 - x0) * (i as f64 + 0.5) / n as f64;
            for j in 0..n {
                let y = y0 + (y1 - y0) * (j as f64 + 0.5) / n as f64;
                if let (Ok(a), Ok(b)) = (self.eval(x, y), other.eval(x, y)) {
                    worst = worst.max((a - b).abs());
                }
            }
        }
        worst
    }
}

impl From<f64> for ScalarField {
    fn from(value: f64) -> Self {
        ScalarField::constant(value)
    }
}

impl Neg for &ScalarField {
    type Output = ScalarField;
    fn neg(self) -> ScalarField {
        match self.node() {
            Node::Const(c) => ScalarField::constant(-c),
            Node::Neg(a) => a.clone(),
            _ => ScalarField::from_node(Node::Neg(self.clone())),
        }
    }
}

impl Add for &ScalarField {
    type Output = ScalarField;
    fn add(self, rhs: &ScalarField) -> ScalarField {
        match (self.as_constant(), rhs.as_constant()) {
            (Some(a), Some(b)) => ScalarField::constant(a + b),
            (Some(0.0), _) => rhs.clone(),
            (_, Some(0.0)) => self.clone(),
            _ => match rhs.node() {
                Node::Neg(r) => self - r,
                _ => ScalarField::from_node(Node::Add(self.clone(), rhs.clone())),
            },
        }
    }
}

impl Sub for &ScalarField {
    type Output = ScalarField;
    fn sub(self, rhs: &ScalarField) -> ScalarField {
        match (self.as_constant(), rhs.as_constant()) {
            (Some(a), Some(b)) => ScalarField::constant(a - b),
            (Some(0.0), _) => -rhs,
            (_, Some(0.0)) => self.clone(),
            _ => match rhs.node() {
                Node::Neg(r) => self + r,
                _ => ScalarField::from_node(Node::Sub(self.clone(), rhs.clone())),
            },
        }
    }
}

impl Mul for &ScalarField {
    type Output = ScalarField;
    fn mul(self, rhs: &ScalarField) -> ScalarField {
        match (self.as_constant(), rhs.as_constant()) {
            (Some(a), Some(b)) => ScalarField::constant(a * b),
            (Some(0.0), _) | (_, Some(0.0)) => ScalarField::zero(),
            (Some(1.0), _) => rhs.clone(),
            (_, Some(1.0)) => self.clone(),
            (Some(-1.0), _) => -rhs,
            (_, Some(-1.0)) => -self,
            _ => match (self.node(), rhs.node()) {
                (Node::Neg(a), Node::Neg(b)) => a * b,
                (Node::Neg(a), _) => -&(a * rhs),
                (_, Node::Neg(b)) => -&(self * b),
                _ => ScalarField::from_node(Node::Mul(self.clone(), rhs.clone())),
            },
        }
    }
}

impl Div for &ScalarField {
    type Output = ScalarField;
    fn div(self, rhs: &ScalarField) -> ScalarField {
        match (self.as_constant(), rhs.as_constant()) {
            (Some(a), Some(b)) if b != 0.0 => ScalarField::constant(a / b),
            (Some(0.0), _) => ScalarField::zero(),
            (_, Some(1.0)) => self.clone(),
            (_, Some(-1.0)) => -self,
            _ => match (self.node(), rhs.node()) {
                (Node::Neg(a), Node::Neg(b)) => a / b,
                (Node::Neg(a), _) => -&(a / rhs),
                (_, Node::Neg(b)) => -&(self / b),
                _ => ScalarField::from_node(Node::Div(self.clone(), rhs.clone())),
            },
        }
    }
}

macro_rules! forward_owned {
    ($tr:ident, $m:ident) => {
        impl $tr<ScalarField> for ScalarField {
            type Output = ScalarField;
            fn $m(self, rhs: ScalarField) -> ScalarField {
                (&self).$m(&rhs)
            }
        }
        impl $tr<&ScalarField> for ScalarField {
            type Output = ScalarField;
            fn $m(self, rhs: &ScalarField) -> ScalarField {
                (&self).$m(rhs)
            }
        }
        impl $tr<ScalarField> for &ScalarField {
            type Output = ScalarField;
            fn $m(self, rhs: ScalarField) -> ScalarField {
                self.$m(&rhs)
            }
        }
        impl $tr<f64> for &ScalarField {
            type Output = ScalarField;
            fn $m(self, rhs: f64) -> ScalarField {
                self.$m(&ScalarField::constant(rhs))
            }
        }
        impl $tr<f64> for ScalarField {
            type Output = ScalarField;
            fn $m(self, rhs: f64) -> ScalarField {
                (&self).$m(&ScalarField::constant(rhs))
            }
        }
    };
}

forward_owned!(Add, add);
forward_owned!(Sub, sub);
forward_owned!(Mul, mul);
forward_owned!(Div, div);

impl Neg for ScalarField {
    type Output = ScalarField;
    fn neg(self) -> ScalarField {
        -&self
    }
}

// Binding strength used when printing; higher binds tighter.
fn precedence(node: &Node) -> u8 {
    match node {
        Node::Add(..) | Node::Sub(..) => 1,
        Node::Mul(..) | Node::Div(..) => 2,
        Node::Neg(_) => 3,
        Node::Pow(..) => 4,
        Node::Const(c) if *c < 0.0 => 3,
        Node::Const(_) | Node::Var(_) | Node::Call(..) => 5,
    }
}

fn write_operand(f: &mut fmt::Formatter<'_>, e: &ScalarField, paren: bool) -> fmt::Result {
    if paren {
        write!(f, "({e})")
    } else {
        write!(f, "{e}")
    }
}

impl fmt::Display for ScalarField {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let me = precedence(self.node());
        match self.node() {
            Node::Const(c) if *c < 0.0 => write!(f, "-{}", -c),
            Node::Const(c) => write!(f, "{c}"),
            Node::Var(v) => f.write_str(v.name()),
            Node::Neg(a) => {
                f.write_str("-")?;
                write_operand(f, a, precedence(a.node()) < 4)
            }
            Node::Add(a, b) | Node::Sub(a, b) | Node::Mul(a, b) | Node::Div(a, b) => {
                let op = match self.node() {
                    Node::Add(..) => " + ",
                    Node::Sub(..) => " - ",
                    Node::Mul(..) => "*",
                    _ => "/",
                };
                // Left-associative: the right operand needs parentheses at equal precedence.
                write_operand(f, a, precedence(a.node()) < me)?;
                f.write_str(op)?;
                write_operand(f, b, precedence(b.node()) <= me)
            }
            Node::Pow(a, n) => {
                write_operand(f, a, precedence(a.node()) <= 4)?;
                if *n < 0 {
                    write!(f, "^({n})")
                } else {
                    write!(f, "^{n}")
                }
            }
            Node::Call(func, a) => write!(f, "{}({a})", func.name()),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p(s: &str) -> ScalarField {
        ScalarField::parse(s).unwrap()
    }

    #[test]
    fn evaluates_basic_examples() {
        assert_eq!(p("y - x^2").eval(1.0, 2.0).unwrap(), 1.0);
        assert_eq!(p("sin(y) - 0.5*sin(x)^2").eval(0.0, 0.0).unwrap(), 0.0);
        assert_eq!(p("x*exp(y)").eval(2.0, 0.0).unwrap(), 2.0);
        assert_eq!(p("x^2 - y").eval(1.0, 1.0).unwrap(), 0.0);
        assert_eq!(p("exp(0)").eval(0.3, 0.7).unwrap(), 1.0);
    }

    #[test]
    fn domain_violations_are_errors() {
        assert!(matches!(
            p("1/x").eval(0.0, 4.0),
            Err(EvalError::DivisionByZero { .. })
        ));
        assert!(matches!(
            p("arcsin(x)").eval(1.5, 0.0),
            Err(EvalError::Domain { .. })
        ));
        assert!(p("arcsin(x)").eval(1.0, 0.0).is_ok());
    }

    #[test]
    fn derivative_examples() {
        let f = p("y - x^2");
        assert_eq!(f.diff(Var::X).eval(3.0, 0.0).unwrap(), -6.0);
        assert_eq!(p("sin(y)").diff(Var::Y).eval(0.0, 0.0).unwrap(), 1.0);
        let fxx = f.diff(Var::X).diff(Var::X);
        assert_eq!(fxx.as_constant(), Some(-2.0));
    }

    #[test]
    fn canonicalization_folds_identities() {
        let x = ScalarField::x();
        assert_eq!(&x * 1.0, x);
        assert!((&x * 0.0).is_zero());
        assert_eq!(&x + 0.0, x);
        assert_eq!(-(-&x), x);
        assert_eq!((ScalarField::constant(2.0) * 3.0).as_constant(), Some(6.0));
    }

    #[test]
    fn display_round_trips() {
        for s in [
            "y - x^2",
            "a",
            "x - (y - x)",
            "-x^2",
            "(-x)^2",
            "x^(-3)*sin(y)/(1 + x)",
            "arcsin(0.5*sin(x)^2)",
            "x/(y/x)",
            "--x",
            "2^2^1",
        ] {
            let Ok(f) = ScalarField::parse(s) else { continue };
            let printed = f.to_string();
            assert_eq!(ScalarField::parse(&printed).unwrap(), f, "{s} -> {printed}");
        }
    }
}
