//! Closed-form scalar expressions over domain coordinates.
//!
//! Scale functions and displacements are written in a small language (see
//! `docs/grammar.md`): numeric literals, coordinates `x1..xm`, `+ - * /`,
//! powers with a positive literal exponent, `sin`, `cos` and parentheses.
//! Constant sub-terms are folded while parsing, so `sin(x1)/4` becomes
//! `Mul(Const(0.25), Sin(Var(1)))`.

mod parse;
pub(crate) mod shape;

use std::fmt;

pub use parse::{parse_expr, ParseError, ParseErrorKind};
pub use shape::{
    audit_shape, holder_seminorm_estimate, inf_abs, range_bracket, sup_norm, BracketError, Holder,
    ShapeFacts, ShapeViolation,
};

/// Expression tree. Build through [`Expr::add`], [`Expr::mul`] and friends to
/// keep constants folded; the parser does this automatically.
#[derive(Debug, Clone, PartialEq)]
pub enum Expr {
    Const(f64),
    /// Coordinate `x_u`, 1-based.
    Var(usize),
    /// `|t|^a` for `a > 0`; integral exponents keep the sign of `t`.
    Pow(Box<Expr>, f64),
    Sin(Box<Expr>),
    Cos(Box<Expr>),
    Neg(Box<Expr>),
    Add(Box<Expr>, Box<Expr>),
    Mul(Box<Expr>, Box<Expr>),
}

impl Expr {
    pub fn constant(c: f64) -> Expr {
        Expr::Const(c)
    }

    pub fn var(axis: usize) -> Expr {
        Expr::Var(axis)
    }

    pub fn add(a: Expr, b: Expr) -> Expr {
        match (a, b) {
            (Expr::Const(x), Expr::Const(y)) => Expr::Const(x + y),
            (Expr::Const(z), e) | (e, Expr::Const(z)) if z == 0.0 => e,
            (a, b) => Expr::Add(Box::new(a), Box::new(b)),
        }
    }

    pub fn sub(a: Expr, b: Expr) -> Expr {
        Expr::add(a, Expr::neg(b))
    }

    pub fn neg(a: Expr) -> Expr {
        match a {
            Expr::Const(c) => Expr::Const(-c),
            Expr::Neg(e) => *e,
            Expr::Mul(l, r) => match *l {
                Expr::Const(c) => Expr::Mul(Box::new(Expr::Const(-c)), r),
                l => Expr::Neg(Box::new(Expr::Mul(Box::new(l), r))),
            },
            e => Expr::Neg(Box::new(e)),
        }
    }

    pub fn mul(a: Expr, b: Expr) -> Expr {
        match (a, b) {
            (Expr::Const(x), Expr::Const(y)) => Expr::Const(x * y),
            (e, Expr::Const(c)) => Expr::scale(c, e),
            (Expr::Const(c), e) => Expr::scale(c, e),
            (a, b) => Expr::Mul(Box::new(a), Box::new(b)),
        }
    }

    fn scale(c: f64, e: Expr) -> Expr {
        if c == 0.0 {
            return Expr::Const(0.0);
        }
        if c == 1.0 {
            return e;
        }
        match e {
            Expr::Const(x) => Expr::Const(c * x),
            Expr::Neg(inner) => Expr::scale(-c, *inner),
            Expr::Mul(l, r) => match *l {
                Expr::Const(x) => Expr::scale(c * x, *r),
                l => Expr::Mul(Box::new(Expr::Const(c)), Box::new(Expr::Mul(Box::new(l), r))),
            },
            e => Expr::Mul(Box::new(Expr::Const(c)), Box::new(e)),
        }
    }

    pub fn pow(base: Expr, exponent: f64) -> Expr {
        match base {
            Expr::Const(c) => Expr::Const(power(c, exponent)),
            b => Expr::Pow(Box::new(b), exponent),
        }
    }

    pub fn sin(a: Expr) -> Expr {
        match a {
            Expr::Const(c) => Expr::Const(c.sin()),
            e => Expr::Sin(Box::new(e)),
        }
    }

    pub fn cos(a: Expr) -> Expr {
        match a {
            Expr::Const(c) => Expr::Const(c.cos()),
            e => Expr::Cos(Box::new(e)),
        }
    }

    /// `c0 + sum_u c_u x_u`, skipping zero coefficients.
    pub fn affine(constant: f64, coefficients: &[f64]) -> Expr {
        let mut e = Expr::Const(constant);
        for (u, &c) in coefficients.iter().enumerate() {
            e = Expr::add(e, Expr::mul(Expr::Const(c), Expr::Var(u + 1)));
        }
        e
    }

    /// `sum_J e_J prod_{j in J} x_j` with subsets `J` encoded as bit masks
    /// (bit `u` set means axis `u + 1` is in the product).
    pub fn multilinear(coefficients: &[(u32, f64)]) -> Expr {
        let mut e = Expr::Const(0.0);
        for &(mask, c) in coefficients {
            if c == 0.0 {
                continue;
            }
            let mut term = Expr::Const(c);
            let mut bits = mask;
            let mut u = 0;
            while bits != 0 {
                if bits & 1 == 1 {
                    term = Expr::mul(term, Expr::Var(u + 1));
                }
                bits >>= 1;
                u += 1;
            }
            e = Expr::add(e, term);
        }
        e
    }

    pub fn as_constant(&self) -> Option<f64> {
        match self {
            Expr::Const(c) => Some(*c),
            _ => None,
        }
    }

    /// Structural constancy (no coordinate occurs after folding).
    pub fn is_constant(&self) -> bool {
        self.max_axis() == 0
    }

    /// Largest coordinate index used, 0 for constants.
    pub fn max_axis(&self) -> usize {
        match self {
            Expr::Const(_) => 0,
            Expr::Var(u) => *u,
            Expr::Pow(e, _) | Expr::Sin(e) | Expr::Cos(e) | Expr::Neg(e) => e.max_axis(),
            Expr::Add(a, b) | Expr::Mul(a, b) => a.max_axis().max(b.max_axis()),
        }
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        match self {
            Expr::Const(c) => *c,
            Expr::Var(u) => x[*u - 1],
            Expr::Pow(e, a) => power(e.eval(x), *a),
            Expr::Sin(e) => e.eval(x).sin(),
            Expr::Cos(e) => e.eval(x).cos(),
            Expr::Neg(e) => -e.eval(x),
            Expr::Add(a, b) => a.eval(x) + b.eval(x),
            Expr::Mul(a, b) => a.eval(x) * b.eval(x),
        }
    }
}

fn power(t: f64, a: f64) -> f64 {
    if a.fract() == 0.0 && a <= 64.0 {
        t.powi(a as i32)
    } else {
        t.abs().powf(a)
    }
}

/// Prints fully parenthesised text that parses back to the same tree.
impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Expr::Const(c) if c.is_sign_negative() => write!(f, "(-{:?})", -c),
            Expr::Const(c) => write!(f, "{c:?}"),
            Expr::Var(u) => write!(f, "x{u}"),
            Expr::Pow(e, a) => write!(f, "({e})^{a:?}"),
            Expr::Sin(e) => write!(f, "sin({e})"),
            Expr::Cos(e) => write!(f, "cos({e})"),
            Expr::Neg(e) => write!(f, "(-{e})"),
            Expr::Add(a, b) => write!(f, "({a} + {b})"),
            Expr::Mul(a, b) => write!(f, "({a} * {b})"),
        }
    }
}

/// Serialized as its printed text.
impl serde::Serialize for Expr {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn eval_basics() {
        let p = Expr::pow(Expr::var(1), 0.8);
        assert_eq!(p.eval(&[0.0]), 0.0);
        let s = parse_expr("sin(x1)/4").unwrap();
        assert!((s.eval(&[1.0]) - 0.210_367_746_201_974_5).abs() < 1e-15);
        assert_eq!(Expr::constant(0.3).eval(&[0.7]), 0.3);
    }

    #[test]
    fn integral_powers_keep_sign() {
        let e = parse_expr("x1^3").unwrap();
        assert_eq!(e.eval(&[-2.0]), -8.0);
        let g = parse_expr("x1^0.5").unwrap();
        assert_eq!(g.eval(&[-4.0]), 2.0);
    }

    #[test]
    fn multilinear_builder() {
        let e = Expr::multilinear(&[(0, 1.0), (1, 2.0), (2, 3.0), (3, 4.0)]);
        assert_eq!(e.eval(&[0.5, 0.25]), 1.0 + 1.0 + 0.75 + 0.5);
        assert_eq!(e.max_axis(), 2);
    }

    #[test]
    fn display_round_trips_negative_constants() {
        let e = Expr::add(Expr::mul(Expr::constant(-1.0 / 3.0), Expr::var(1)), Expr::constant(-0.0));
        let back = parse_expr(&e.to_string()).unwrap();
        assert_eq!(back, e);
    }
}
