use super::{Func, Node, ScalarField, Var};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum EvalError {
    #[error("division by zero at ({x}, {y})")]
    DivisionByZero { x: f64, y: f64 },
    #[error("{func} argument {arg} outside its domain at ({x}, {y})")]
    Domain {
        func: &'static str,
        arg: f64,
        x: f64,
        y: f64,
    },
    #[error("non-finite value at ({x}, {y})")]
    NonFinite { x: f64, y: f64 },
}

#[derive(Debug, Clone, Copy)]
enum Op {
    Const(f64),
    Var(Var),
    Neg,
    Add,
    Sub,
    Mul,
    Div,
    Pow(i32),
    Call(Func),
}

const INLINE_STACK: usize = 48;

/// Postfix program for one expression tree.
#[derive(Debug)]
pub(crate) struct Program {
    ops: Vec<Op>,
    depth: usize,
}

impl Program {
    pub(crate) fn compile(field: &ScalarField) -> Program {
        let mut ops = Vec::with_capacity(field.size());
        let depth = emit(field, &mut ops);
        Program { ops, depth }
    }

    pub(crate) fn run(&self, x: f64, y: f64) -> Result<f64, EvalError> {
        if self.depth <= INLINE_STACK {
            let mut stack = [0.0f64; INLINE_STACK];
            self.exec(&mut stack, x, y)
        } else {
            let mut stack = vec![0.0f64; self.depth];
            self.exec(&mut stack, x, y)
        }
    }

    fn exec(&self, stack: &mut [f64], x: f64, y: f64) -> Result<f64, EvalError> {
        let mut top = 0usize;
        for op in &self.ops {
            match *op {
                Op::Const(c) => {
                    stack[top] = c;
                    top += 1;
                }
                Op::Var(Var::X) => {
                    stack[top] = x;
                    top += 1;
                }
                Op::Var(Var::Y) => {
                    stack[top] = y;
                    top += 1;
                }
                Op::Neg => stack[top - 1] = -stack[top - 1],
                Op::Add | Op::Sub | Op::Mul | Op::Div => {
                    let b = stack[top - 1];
                    let a = stack[top - 2];
                    top -= 1;
                    stack[top - 1] = match *op {
                        Op::Add => a + b,
                        Op::Sub => a - b,
                        Op::Mul => a * b,
                        _ => {
                            if b == 0.0 {
                                return Err(EvalError::DivisionByZero { x, y });
                            }
                            a / b
                        }
                    };
                }
                Op::Pow(n) => {
                    let a = stack[top - 1];
                    if n < 0 && a == 0.0 {
                        return Err(EvalError::DivisionByZero { x, y });
                    }
                    stack[top - 1] = a.powi(n);
                }
                Op::Call(func) => {
                    let a = stack[top - 1];
                    stack[top - 1] = match func {
                        Func::Sin => a.sin(),
                        Func::Cos => a.cos(),
                        Func::Exp => a.exp(),
                        Func::Asin => {
                            if !(-1.0..=1.0).contains(&a) {
                                return Err(EvalError::Domain {
                                    func: "arcsin",
                                    arg: a,
                                    x,
                                    y,
                                });
                            }
                            a.asin()
                        }
                        Func::Sqrt => {
                            if a < 0.0 {
                                return Err(EvalError::Domain {
                                    func: "sqrt",
                                    arg: a,
                                    x,
                                    y,
                                });
                            }
                            a.sqrt()
                        }
                    };
                }
            }
        }
        let v = stack[0];
        if v.is_finite() {
            Ok(v)
        } else {
            Err(EvalError::NonFinite { x, y })
        }
    }
}

// Emits postfix code and returns the stack depth needed.
fn emit(field: &ScalarField, ops: &mut Vec<Op>) -> usize {
    match field.node() {
        Node::Const(c) => {
            ops.push(Op::Const(*c));
            1
        }
        Node::Var(v) => {
            ops.push(Op::Var(*v));
            1
        }
        Node::Neg(a) => {
            let d = emit(a, ops);
            ops.push(Op::Neg);
            d
        }
        Node::Pow(a, n) => {
            let d = emit(a, ops);
            ops.push(Op::Pow(*n));
            d
        }
        Node::Call(f, a) => {
            let d = emit(a, ops);
            ops.push(Op::Call(*f));
            d
        }
        Node::Add(a, b) | Node::Sub(a, b) | Node::Mul(a, b) | Node::Div(a, b) => {
            let da = emit(a, ops);
            let db = emit(b, ops);
            ops.push(match field.node() {
                Node::Add(..) => Op::Add,
                Node::Sub(..) => Op::Sub,
                Node::Mul(..) => Op::Mul,
                _ => Op::Div,
            });
            da.max(db + 1)
        }
    }
}
