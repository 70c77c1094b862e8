use thiserror::Error;

use super::Expr;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ParseErrorKind {
    UnexpectedChar(char),
    UnexpectedEnd,
    UnexpectedToken(String),
    BadNumber,
    UnknownIdentifier(String),
    NonPositiveExponent,
    NonConstantDivisor,
    DivisionByZero,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("{kind:?} at byte {offset}")]
pub struct ParseError {
    pub offset: usize,
    pub kind: ParseErrorKind,
}

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Num(f64),
    Ident(String),
    Plus,
    Minus,
    Star,
    Slash,
    Caret,
    LParen,
    RParen,
}

fn lex(text: &str) -> Result<Vec<(usize, Tok)>, ParseError> {
    let bytes = text.as_bytes();
    let mut out = Vec::new();
    let mut i = 0;
    while i < bytes.len() {
        let c = bytes[i];
        match c {
            b' ' | b'\t' | b'\n' | b'\r' => i += 1,
            b'+' | b'-' | b'*' | b'/' | b'^' | b'(' | b')' => {
                let t = match c {
                    b'+' => Tok::Plus,
                    b'-' => Tok::Minus,
                    b'*' => Tok::Star,
                    b'/' => Tok::Slash,
                    b'^' => Tok::Caret,
                    b'(' => Tok::LParen,
                    _ => Tok::RParen,
                };
                out.push((i, t));
                i += 1;
            }
            b'0'..=b'9' | b'.' => {
                let start = i;
                while i < bytes.len() && (bytes[i].is_ascii_digit() || bytes[i] == b'.') {
                    i += 1;
                }
                if i < bytes.len() && (bytes[i] == b'e' || bytes[i] == b'E') {
                    let mut j = i + 1;
                    if j < bytes.len() && (bytes[j] == b'+' || bytes[j] == b'-') {
                        j += 1;
                    }
                    if j < bytes.len() && bytes[j].is_ascii_digit() {
                        while j < bytes.len() && bytes[j].is_ascii_digit() {
                            j += 1;
                        }
                        i = j;
                    }
                }
                let v: f64 = text[start..i]
                    .parse()
                    .map_err(|_| ParseError { offset: start, kind: ParseErrorKind::BadNumber })?;
                out.push((start, Tok::Num(v)));
            }
            c if c.is_ascii_alphabetic() => {
                let start = i;
                while i < bytes.len() && bytes[i].is_ascii_alphanumeric() {
                    i += 1;
                }
                out.push((start, Tok::Ident(text[start..i].to_string())));
            }
            _ => {
                let ch = text[i..].chars().next().unwrap_or('?');
                return Err(ParseError { offset: i, kind: ParseErrorKind::UnexpectedChar(ch) });
            }
        }
    }
    Ok(out)
}

struct Parser {
    toks: Vec<(usize, Tok)>,
    pos: usize,
    end: usize,
}

impl Parser {
    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.pos).map(|(_, t)| t)
    }

    fn offset(&self) -> usize {
        self.toks.get(self.pos).map(|(o, _)| *o).unwrap_or(self.end)
    }

    fn err<T>(&self, kind: ParseErrorKind) -> Result<T, ParseError> {
        Err(ParseError { offset: self.offset(), kind })
    }

    fn unexpected<T>(&self) -> Result<T, ParseError> {
        match self.peek() {
            None => self.err(ParseErrorKind::UnexpectedEnd),
            Some(t) => self.err(ParseErrorKind::UnexpectedToken(format!("{t:?}"))),
        }
    }

    fn expect(&mut self, t: Tok) -> Result<(), ParseError> {
        if self.peek() == Some(&t) {
            self.pos += 1;
            Ok(())
        } else {
            self.unexpected()
        }
    }

    // expr = term { ("+" | "-") term }
    fn expr(&mut self) -> Result<Expr, ParseError> {
        let mut lhs = self.term()?;
        loop {
            match self.peek() {
                Some(Tok::Plus) => {
                    self.pos += 1;
                    lhs = Expr::add(lhs, self.term()?);
                }
                Some(Tok::Minus) => {
                    self.pos += 1;
                    lhs = Expr::sub(lhs, self.term()?);
                }
                _ => return Ok(lhs),
            }
        }
    }

    // term = unary { ("*" | "/") unary }
    fn term(&mut self) -> Result<Expr, ParseError> {
        let mut lhs = self.unary()?;
        loop {
            match self.peek() {
                Some(Tok::Star) => {
                    self.pos += 1;
                    lhs = Expr::mul(lhs, self.unary()?);
                }
                Some(Tok::Slash) => {
                    self.pos += 1;
                    let at = self.offset();
                    let d = self.unary()?;
                    match d.as_constant() {
                        Some(0.0) => {
                            return Err(ParseError { offset: at, kind: ParseErrorKind::DivisionByZero })
                        }
                        Some(c) => {
                            lhs = match lhs {
                                Expr::Const(x) => Expr::Const(x / c),
                                l => Expr::mul(l, Expr::Const(1.0 / c)),
                            }
                        }
                        None => {
                            return Err(ParseError {
                                offset: at,
                                kind: ParseErrorKind::NonConstantDivisor,
                            })
                        }
                    }
                }
                _ => return Ok(lhs),
            }
        }
    }

    // unary = "-" unary | power
    fn unary(&mut self) -> Result<Expr, ParseError> {
        if self.peek() == Some(&Tok::Minus) {
            self.pos += 1;
            return Ok(Expr::neg(self.unary()?));
        }
        self.power()
    }

    // power = primary [ "^" ["+"|"-"] number ]
    fn power(&mut self) -> Result<Expr, ParseError> {
        let base = self.primary()?;
        if self.peek() != Some(&Tok::Caret) {
            return Ok(base);
        }
        self.pos += 1;
        let at = self.offset();
        let mut sign = 1.0;
        match self.peek() {
            Some(Tok::Minus) => {
                sign = -1.0;
                self.pos += 1;
            }
            Some(Tok::Plus) => self.pos += 1,
            _ => {}
        }
        let a = match self.peek() {
            Some(Tok::Num(v)) => sign * *v,
            _ => return self.unexpected(),
        };
        self.pos += 1;
        if !(a > 0.0) {
            return Err(ParseError { offset: at, kind: ParseErrorKind::NonPositiveExponent });
        }
        Ok(Expr::pow(base, a))
    }

    fn primary(&mut self) -> Result<Expr, ParseError> {
        let at = self.offset();
        match self.peek().cloned() {
            Some(Tok::Num(v)) => {
                self.pos += 1;
                Ok(Expr::Const(v))
            }
            Some(Tok::LParen) => {
                self.pos += 1;
                let e = self.expr()?;
                self.expect(Tok::RParen)?;
                Ok(e)
            }
            Some(Tok::Ident(name)) => {
                self.pos += 1;
                match name.as_str() {
                    "sin" | "cos" => {
                        self.expect(Tok::LParen)?;
                        let e = self.expr()?;
                        self.expect(Tok::RParen)?;
                        Ok(if name == "sin" { Expr::sin(e) } else { Expr::cos(e) })
                    }
                    "x" => Ok(Expr::Var(1)),
                    "y" => Ok(Expr::Var(2)),
                    "z" => Ok(Expr::Var(3)),
                    _ => match name.strip_prefix('x').and_then(|d| d.parse::<usize>().ok()) {
                        Some(u) if u >= 1 => Ok(Expr::Var(u)),
                        _ => Err(ParseError { offset: at, kind: ParseErrorKind::UnknownIdentifier(name) }),
                    },
                }
            }
            _ => self.unexpected(),
        }
    }
}

/// Parses an expression. Whitespace is ignored, `+ -` and `* /` associate to
/// the left and unary minus binds tighter than `+` but looser than `^`.
pub fn parse_expr(text: &str) -> Result<Expr, ParseError> {
    let toks = lex(text)?;
    let mut p = Parser { toks, pos: 0, end: text.len() };
    let e = p.expr()?;
    if p.pos != p.toks.len() {
        return p.unexpected();
    }
    Ok(e)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn scalar_division_folds() {
        let e = parse_expr("sin(x1)/4").unwrap();
        assert_eq!(
            e,
            Expr::Mul(Box::new(Expr::Const(0.25)), Box::new(Expr::Sin(Box::new(Expr::Var(1)))))
        );
    }

    #[test]
    fn zero_literal() {
        assert_eq!(parse_expr("0").unwrap(), Expr::Const(0.0));
    }

    #[test]
    fn negated_power_over_scalar() {
        let e = parse_expr("-(x1^0.8)/3 + 1/3").unwrap();
        let want = Expr::Add(
            Box::new(Expr::Mul(
                Box::new(Expr::Const(-1.0 / 3.0)),
                Box::new(Expr::Pow(Box::new(Expr::Var(1)), 0.8)),
            )),
            Box::new(Expr::Const(1.0 / 3.0)),
        );
        assert_eq!(e, want);
    }

    #[test]
    fn fractions_are_correctly_rounded_quotients() {
        assert_eq!(parse_expr("4/15").unwrap(), Expr::Const(4.0 / 15.0));
        assert_eq!(parse_expr(" 3 / 5 ").unwrap(), Expr::Const(0.6));
    }

    #[test]
    fn precedence_and_associativity() {
        let e = parse_expr("1 - 2 - 3").unwrap();
        assert_eq!(e, Expr::Const(-4.0));
        let e = parse_expr("-x1^2").unwrap();
        assert_eq!(e.eval(&[3.0]), -9.0);
        let e = parse_expr("2*x1*3").unwrap();
        assert_eq!(e.eval(&[1.0]), 6.0);
        let e = parse_expr("x1*x2 + 3/4 + 0*x1").unwrap();
        assert_eq!(e.eval(&[2.0, 5.0]), 10.75);
    }

    #[test]
    fn syntax_errors_carry_offsets() {
        let err = parse_expr("x1 + * 2").unwrap_err();
        assert_eq!(err.offset, 5);
        let err = parse_expr("x1^0").unwrap_err();
        assert_eq!(err.kind, ParseErrorKind::NonPositiveExponent);
        assert_eq!(err.offset, 3);
        let err = parse_expr("x1^-0.5").unwrap_err();
        assert_eq!(err.kind, ParseErrorKind::NonPositiveExponent);
        let err = parse_expr("1/x1").unwrap_err();
        assert_eq!(err.kind, ParseErrorKind::NonConstantDivisor);
        assert_eq!(err.offset, 2);
        let err = parse_expr("(x1 + 1").unwrap_err();
        assert_eq!(err.kind, ParseErrorKind::UnexpectedEnd);
        assert_eq!(err.offset, 7);
        let err = parse_expr("tan(x1)").unwrap_err();
        assert!(matches!(err.kind, ParseErrorKind::UnknownIdentifier(_)));
        let err = parse_expr("x1 $").unwrap_err();
        assert_eq!(err, ParseError { offset: 3, kind: ParseErrorKind::UnexpectedChar('$') });
    }

    #[test]
    fn scientific_literals() {
        assert_eq!(parse_expr("1e-3").unwrap(), Expr::Const(1e-3));
        assert_eq!(parse_expr("2.5E+2").unwrap(), Expr::Const(250.0));
    }
}
