//! Numerical toolkit for two-dimensional almost-Riemannian structures.

pub mod catalog;
pub mod curvature;
pub mod error;
pub mod expr;
pub mod frames;
pub mod geodesics;
pub mod integrals;
pub mod quadrature;
pub mod roots;
pub mod topology;

pub use error::{Error, Result};
pub use expr::{EvalError, Func, ParseError, ScalarField, Var};
