//! Recursive-descent parser.
//!
//! ```text
//! expr    := term (('+' | '-') term)*
//! term    := unary (('*' | '/') unary)*
//! unary   := '-' unary | power
//! power   := atom ('^' exponent)?
//! exponent:= integer | '-' integer | '(' '-'? integer ')'
//! atom    := number | 'x' | 'y' | 'pi' | func '(' expr ')' | '(' expr ')'
//! ```

use super::{Func, Node, ScalarField, Var};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ParseError {
    #[error("syntax error at position {pos}: {msg}")]
    Syntax { pos: usize, msg: String },
    #[error("unknown identifier `{name}` at position {pos}")]
    UnknownIdentifier { pos: usize, name: String },
}

pub(super) fn parse(text: &str) -> Result<ScalarField, ParseError> {
    let mut p = Parser {
        src: text.as_bytes(),
        pos: 0,
    };
    let e = p.expr()?;
    p.skip_ws();
    if p.pos != p.src.len() {
        return Err(p.syntax("unexpected trailing input"));
    }
    Ok(e)
}

struct Parser<'a> {
    src: &'a [u8],
    pos: usize,
}

impl Parser<'_> {
    fn syntax(&self, msg: &str) -> ParseError {
        ParseError::Syntax {
            pos: self.pos,
            msg: msg.to_string(),
        }
    }

    fn skip_ws(&mut self) {
        while self.pos < self.src.len() && self.src[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
    }

    fn peek(&mut self) -> Option<u8> {
        self.skip_ws();
        self.src.get(self.pos).copied()
    }

    fn eat(&mut self, c: u8) -> bool {
        if self.peek() == Some(c) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn expect(&mut self, c: u8) -> Result<(), ParseError> {
        if self.eat(c) {
            Ok(())
        } else {
            Err(self.syntax(&format!("expected `{}`", c as char)))
        }
    }

    fn expr(&mut self) -> Result<ScalarField, ParseError> {
        let mut lhs = self.term()?;
        loop {
            if self.eat(b'+') {
                let rhs = self.term()?;
                lhs = ScalarField::from_node(Node::Add(lhs, rhs));
            } else if self.eat(b'-') {
                let rhs = self.term()?;
                lhs = ScalarField::from_node(Node::Sub(lhs, rhs));
            } else {
                return Ok(lhs);
            }
        }
    }

    fn term(&mut self) -> Result<ScalarField, ParseError> {
        let mut lhs = self.unary()?;
        loop {
            if self.eat(b'*') {
                let rhs = self.unary()?;
                lhs = ScalarField::from_node(Node::Mul(lhs, rhs));
            } else if self.eat(b'/') {
                let rhs = self.unary()?;
                lhs = ScalarField::from_node(Node::Div(lhs, rhs));
            } else {
                return Ok(lhs);
            }
        }
    }

    fn unary(&mut self) -> Result<ScalarField, ParseError> {
        if self.eat(b'-') {
            let inner = self.unary()?;
            Ok(ScalarField::from_node(Node::Neg(inner)))
        } else if self.eat(b'+') {
            self.unary()
        } else {
            self.power()
        }
    }

    fn power(&mut self) -> Result<ScalarField, ParseError> {
        let base = self.atom()?;
        if !self.eat(b'^') {
            return Ok(base);
        }
        let n = if self.eat(b'(') {
            let n = self.integer()?;
            self.expect(b')')?;
            n
        } else {
            self.integer()?
        };
        Ok(ScalarField::from_node(Node::Pow(base, n)))
    }

    fn integer(&mut self) -> Result<i32, ParseError> {
        let negative = self.eat(b'-');
        self.skip_ws();
        let start = self.pos;
        let value = self.number_literal()?;
        if value.fract() != 0.0 || value.abs() > i32::MAX as f64 {
            self.pos = start;
            return Err(self.syntax("exponent must be an integer"));
        }
        let n = value as i32;
        Ok(if negative { -n } else { n })
    }

    fn number_literal(&mut self) -> Result<f64, ParseError> {
        self.skip_ws();
        let start = self.pos;
        let digits = |p: &mut Self| {
            while p.pos < p.src.len() && p.src[p.pos].is_ascii_digit() {
                p.pos += 1;
            }
        };
        digits(self);
        if self.pos < self.src.len() && self.src[self.pos] == b'.' {
            self.pos += 1;
            digits(self);
        }
        if self.pos == start || (self.pos == start + 1 && self.src[start] == b'.') {
            self.pos = start;
            return Err(self.syntax("expected a number"));
        }
        if self.pos < self.src.len() && matches!(self.src[self.pos], b'e' | b'E') {
            let save = self.pos;
            self.pos += 1;
            if self.pos < self.src.len() && matches!(self.src[self.pos], b'+' | b'-') {
                self.pos += 1;
            }
            let exp_start = self.pos;
            digits(self);
            if self.pos == exp_start {
                self.pos = save;
            }
        }
        let text = std::str::from_utf8(&self.src[start..self.pos]).expect("ascii");
        text.parse::<f64>().map_err(|_| ParseError::Syntax {
            pos: start,
            msg: format!("malformed number `{text}`"),
        })
    }

    fn atom(&mut self) -> Result<ScalarField, ParseError> {
        match self.peek() {
            Some(b'(') => {
                self.pos += 1;
                let e = self.expr()?;
                self.expect(b')')?;
                Ok(e)
            }
            Some(c) if c.is_ascii_digit() || c == b'.' => {
                Ok(ScalarField::constant(self.number_literal()?))
            }
            Some(c) if c.is_ascii_alphabetic() || c == b'_' => {
                let start = self.pos;
                while self.pos < self.src.len()
                    && (self.src[self.pos].is_ascii_alphanumeric() || self.src[self.pos] == b'_')
                {
                    self.pos += 1;
                }
                let name = std::str::from_utf8(&self.src[start..self.pos]).expect("ascii");
                match name {
                    "x" => Ok(ScalarField::var(Var::X)),
                    "y" => Ok(ScalarField::var(Var::Y)),
                    "pi" => Ok(ScalarField::constant(std::f64::consts::PI)),
                    _ => match Func::from_name(name) {
                        Some(func) => {
                            self.expect(b'(')?;
                            let arg = self.expr()?;
                            self.expect(b')')?;
                            Ok(ScalarField::from_node(Node::Call(func, arg)))
                        }
                        None => Err(ParseError::UnknownIdentifier {
                            pos: start,
                            name: name.to_string(),
                        }),
                    },
                }
            }
            Some(_) => Err(self.syntax("unexpected character")),
            None => Err(self.syntax("unexpected end of input")),
        }
    }
}
