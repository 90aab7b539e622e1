//! Text syntax for [`Expr`]: `+ - * / ^`, parentheses, numbers, `t`, `pi`,
//! the functions `sin cos exp ln sqrt sinh cosh tanh coth`, and `$name`
//! parameters bound by the caller.

use crate::expr::Expr;
use crate::scalar::Real;
use std::fmt;
use std::str::FromStr;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ParseExprError {
    pub position: usize,
    pub message: String,
}

impl fmt::Display for ParseExprError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "at column {}: {}", self.position + 1, self.message)
    }
}

impl std::error::Error for ParseExprError {}

impl<T: Real> FromStr for Expr<T> {
    type Err = ParseExprError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        parse_expr(s, &|_| None)
    }
}

/// Parses `src`, resolving `$name` through `vars`.
pub fn parse_expr<T: Real>(src: &str, vars: &dyn Fn(&str) -> Option<T>) -> Result<Expr<T>, ParseExprError> {
    let mut p = Parser { src: src.as_bytes(), pos: 0, vars };
    let e = p.sum()?;
    p.skip_ws();
    if p.pos < p.src.len() {
        return Err(p.error(format!("unexpected `{}`", p.src[p.pos] as char)));
    }
    Ok(e)
}

struct Parser<'a, T> {
    src: &'a [u8],
    pos: usize,
    vars: &'a dyn Fn(&str) -> Option<T>,
}

impl<T: Real> Parser<'_, T> {
    fn error(&self, message: impl Into<String>) -> ParseExprError {
        ParseExprError { position: self.pos, message: message.into() }
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

    fn sum(&mut self) -> Result<Expr<T>, ParseExprError> {
        let mut acc = self.product()?;
        loop {
            if self.eat(b'+') {
                acc = acc + self.product()?;
            } else if self.eat(b'-') {
                acc = acc - self.product()?;
            } else {
                return Ok(acc);
            }
        }
    }

    fn product(&mut self) -> Result<Expr<T>, ParseExprError> {
        let mut acc = self.unary()?;
        loop {
            if self.eat(b'*') {
                acc = acc * self.unary()?;
            } else if self.eat(b'/') {
                acc = acc / self.unary()?;
            } else {
                return Ok(acc);
            }
        }
    }

    fn unary(&mut self) -> Result<Expr<T>, ParseExprError> {
        if self.eat(b'-') {
            return Ok(-self.unary()?);
        }
        if self.eat(b'+') {
            return self.unary();
        }
        self.power()
    }

    fn power(&mut self) -> Result<Expr<T>, ParseExprError> {
        let base = self.atom()?;
        if !self.eat(b'^') {
            return Ok(base);
        }
        let at = self.pos;
        let exponent = self.unary()?;
        match exponent.as_const() {
            Some(k) => Ok(base.powf(k)),
            None => {
                if base.as_const().is_some_and(|b| b <= T::zero()) {
                    return Err(ParseExprError { position: at, message: "variable exponent needs a positive base".into() });
                }
                Ok((exponent * base.ln()).exp())
            }
        }
    }

    fn ident(&mut self) -> String {
        let start = self.pos;
        while self.pos < self.src.len() && (self.src[self.pos].is_ascii_alphanumeric() || self.src[self.pos] == b'_') {
            self.pos += 1;
        }
        String::from_utf8_lossy(&self.src[start..self.pos]).into_owned()
    }

    fn number(&mut self) -> Result<Expr<T>, ParseExprError> {
        let start = self.pos;
        let digits = |p: &mut Self| {
            while p.pos < p.src.len() && p.src[p.pos].is_ascii_digit() {
                p.pos += 1;
            }
        };
        digits(self);
        if self.src.get(self.pos) == Some(&b'.') {
            self.pos += 1;
            digits(self);
        }
        if matches!(self.src.get(self.pos), Some(b'e' | b'E')) {
            let save = self.pos;
            self.pos += 1;
            if matches!(self.src.get(self.pos), Some(b'+' | b'-')) {
                self.pos += 1;
            }
            let before = self.pos;
            digits(self);
            if self.pos == before {
                self.pos = save;
            }
        }
        let text = std::str::from_utf8(&self.src[start..self.pos]).unwrap_or("");
        text.parse::<f64>()
            .map(Expr::lit)
            .map_err(|_| ParseExprError { position: start, message: format!("bad number `{text}`") })
    }

    fn atom(&mut self) -> Result<Expr<T>, ParseExprError> {
        match self.peek() {
            Some(b'(') => {
                self.pos += 1;
                let e = self.sum()?;
                if !self.eat(b')') {
                    return Err(self.error("expected `)`"));
                }
                Ok(e)
            }
            Some(b'$') => {
                self.pos += 1;
                let start = self.pos;
                let name = self.ident();
                match (self.vars)(&name) {
                    Some(x) => Ok(Expr::c(x)),
                    None => Err(ParseExprError { position: start, message: format!("unbound parameter `${name}`") }),
                }
            }
            Some(c) if c.is_ascii_digit() || c == b'.' => self.number(),
            Some(c) if c.is_ascii_alphabetic() => {
                let start = self.pos;
                let name = self.ident();
                match name.as_str() {
                    "t" | "r" => return Ok(Expr::t()),
                    "pi" => return Ok(Expr::c(T::PI())),
                    _ => {}
                }
                if !self.eat(b'(') {
                    return Err(ParseExprError { position: start, message: format!("unknown name `{name}`") });
                }
                let arg = self.sum()?;
                if !self.eat(b')') {
                    return Err(self.error("expected `)`"));
                }
                Ok(match name.as_str() {
                    "sin" => arg.sin(),
                    "cos" => arg.cos(),
                    "exp" => arg.exp(),
                    "ln" | "log" => arg.ln(),
                    "sqrt" => arg.sqrt(),
                    "sinh" => arg.sinh(),
                    "cosh" => arg.cosh(),
                    "tanh" => arg.clone().sinh() / arg.cosh(),
                    "coth" => arg.clone().cosh() / arg.sinh(),
                    _ => return Err(ParseExprError { position: start, message: format!("unknown function `{name}`") }),
                })
            }
            Some(c) => Err(self.error(format!("unexpected `{}`", c as char))),
            None => Err(self.error("unexpected end of expression")),
        }
    }
}
