//! Recursive-descent parser for the expression grammar.
//!
//! ```text
//! sum     := product (('+' | '-') product)*
//! product := unary (('*' | '/') unary)*
//! unary   := '-' unary | power
//! power   := primary ('^' unary)?          // right-associative
//! primary := number | ident | ident '(' args ')' | '(' sum ')'
//! ```
//!
//! `y'`, `y''` (and the primed unicode forms) are accepted as aliases for
//! `yp` and `ypp`.

use super::{Expr, ExprError, Func, Result, Symbol};
use num_rational::Rational64;

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Int(i64),
    Float(f64),
    Ident(String),
    Op(char),
    LParen,
    RParen,
    Comma,
}

struct Lexer<'a> {
    src: &'a str,
    pos: usize,
}

impl<'a> Lexer<'a> {
    fn tokens(src: &'a str) -> Result<Vec<(usize, Tok)>> {
        let mut lx = Lexer { src, pos: 0 };
        let mut out = Vec::new();
        while let Some((p, t)) = lx.next()? {
            out.push((p, t));
        }
        Ok(out)
    }

    fn peek_char(&self) -> Option<char> {
        self.src[self.pos..].chars().next()
    }

    fn next(&mut self) -> Result<Option<(usize, Tok)>> {
        while let Some(c) = self.peek_char() {
            if c.is_whitespace() {
                self.pos += c.len_utf8();
            } else {
                break;
            }
        }
        let start = self.pos;
        let Some(c) = self.peek_char() else {
            return Ok(None);
        };
        let tok = match c {
            '0'..='9' | '.' => self.number()?,
            c if c.is_ascii_alphabetic() || c == '_' => {
                let mut end = self.pos;
                for ch in self.src[self.pos..].chars() {
                    if ch.is_ascii_alphanumeric() || ch == '_' {
                        end += ch.len_utf8();
                    } else {
                        break;
                    }
                }
                let mut name = self.src[self.pos..end].to_string();
                self.pos = end;
                if name == "y" {
                    let mut primes = 0;
                    while let Some(ch) = self.peek_char() {
                        match ch {
                            '\'' | '′' => {
                                primes += 1;
                                self.pos += ch.len_utf8();
                            }
                            '″' => {
                                primes += 2;
                                self.pos += ch.len_utf8();
                            }
                            _ => break,
                        }
                    }
                    match primes {
                        0 => {}
                        1 => name = "yp".into(),
                        2 => name = "ypp".into(),
                        _ => {
                            return Err(ExprError::Syntax {
                                position: start,
                                message: "derivatives above y'' are not supported".into(),
                            })
                        }
                    }
                }
                Tok::Ident(name)
            }
            '+' | '-' | '*' | '/' | '^' => {
                self.pos += 1;
                Tok::Op(c)
            }
            '−' => {
                self.pos += c.len_utf8();
                Tok::Op('-')
            }
            '(' => {
                self.pos += 1;
                Tok::LParen
            }
            ')' => {
                self.pos += 1;
                Tok::RParen
            }
            ',' => {
                self.pos += 1;
                Tok::Comma
            }
            other => {
                return Err(ExprError::Syntax {
                    position: start,
                    message: format!("unexpected character `{other}`"),
                })
            }
        };
        Ok(Some((start, tok)))
    }

    fn number(&mut self) -> Result<Tok> {
        let start = self.pos;
        let bytes = self.src.as_bytes();
        let mut end = start;
        let mut is_float = false;
        while end < bytes.len() && bytes[end].is_ascii_digit() {
            end += 1;
        }
        if end < bytes.len() && bytes[end] == b'.' {
            is_float = true;
            end += 1;
            while end < bytes.len() && bytes[end].is_ascii_digit() {
                end += 1;
            }
        }
        if end < bytes.len() && (bytes[end] == b'e' || bytes[end] == b'E') {
            let mut k = end + 1;
            if k < bytes.len() && (bytes[k] == b'+' || bytes[k] == b'-') {
                k += 1;
            }
            if k < bytes.len() && bytes[k].is_ascii_digit() {
                is_float = true;
                end = k;
                while end < bytes.len() && bytes[end].is_ascii_digit() {
                    end += 1;
                }
            }
        }
        let text = &self.src[start..end];
        self.pos = end;
        let bad = || ExprError::Syntax {
            position: start,
            message: format!("malformed number `{text}`"),
        };
        if is_float {
            text.parse::<f64>().map(Tok::Float).map_err(|_| bad())
        } else {
            text.parse::<i64>().map(Tok::Int).map_err(|_| bad())
        }
    }
}

struct Parser {
    toks: Vec<(usize, Tok)>,
    at: usize,
    len: usize,
}

impl Parser {
    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.at).map(|(_, t)| t)
    }

    fn pos(&self) -> usize {
        self.toks.get(self.at).map(|(p, _)| *p).unwrap_or(self.len)
    }

    fn bump(&mut self) -> Option<Tok> {
        let t = self.toks.get(self.at).map(|(_, t)| t.clone());
        self.at += 1;
        t
    }

    fn expect(&mut self, want: Tok, what: &str) -> Result<()> {
        let pos = self.pos();
        match self.bump() {
            Some(t) if t == want => Ok(()),
            _ => Err(ExprError::Syntax {
                position: pos,
                message: format!("expected {what}"),
            }),
        }
    }

    fn sum(&mut self) -> Result<Expr> {
        let mut acc = self.product()?;
        while let Some(Tok::Op(c @ ('+' | '-'))) = self.peek().cloned() {
            self.bump();
            let rhs = self.product()?;
            acc = if c == '+' {
                Expr::add(acc, rhs)
            } else {
                Expr::sub(acc, rhs)
            };
        }
        Ok(acc)
    }

    fn product(&mut self) -> Result<Expr> {
        let mut acc = self.unary()?;
        while let Some(Tok::Op(c @ ('*' | '/'))) = self.peek().cloned() {
            self.bump();
            let rhs = self.unary()?;
            acc = if c == '*' {
                Expr::mul(acc, rhs)
            } else {
                Expr::div(acc, rhs)
            };
        }
        Ok(acc)
    }

    fn unary(&mut self) -> Result<Expr> {
        if let Some(Tok::Op('-')) = self.peek() {
            self.bump();
            return Ok(Expr::neg(self.unary()?));
        }
        if let Some(Tok::Op('+')) = self.peek() {
            self.bump();
            return self.unary();
        }
        self.power()
    }

    fn power(&mut self) -> Result<Expr> {
        let base = self.primary()?;
        if let Some(Tok::Op('^')) = self.peek() {
            self.bump();
            let exponent = self.unary()?;
            return Ok(Expr::pow(base, exponent));
        }
        Ok(base)
    }

    fn primary(&mut self) -> Result<Expr> {
        let pos = self.pos();
        match self.bump() {
            Some(Tok::Int(n)) => Ok(Expr::Rational(Rational64::from_integer(n))),
            Some(Tok::Float(v)) => Ok(Expr::Float(v)),
            Some(Tok::LParen) => {
                let e = self.sum()?;
                self.expect(Tok::RParen, "`)`")?;
                Ok(e)
            }
            Some(Tok::Ident(name)) => {
                if let Some(Tok::LParen) = self.peek() {
                    self.bump();
                    return self.call(&name, pos);
                }
                Ok(Expr::Sym(match name.as_str() {
                    "x" => Symbol::X,
                    "y" => Symbol::Y,
                    "yp" => Symbol::Yp,
                    "ypp" => Symbol::Ypp,
                    "vbar" => Symbol::Vbar,
                    "vbarp" => Symbol::VbarP,
                    other => Symbol::param(other).map_err(|_| ExprError::Syntax {
                        position: pos,
                        message: format!("`{other}` cannot be used as a parameter name"),
                    })?,
                }))
            }
            Some(t) => Err(ExprError::Syntax {
                position: pos,
                message: format!("unexpected token {t:?}"),
            }),
            None => Err(ExprError::Syntax {
                position: pos,
                message: "unexpected end of input".into(),
            }),
        }
    }

    fn call(&mut self, name: &str, pos: usize) -> Result<Expr> {
        let func = match name {
            "exp" => Func::Exp,
            "ln" | "log" => Func::Ln,
            "sin" => Func::Sin,
            "cos" => Func::Cos,
            "int" => {
                let integrand = self.sum()?;
                self.expect(Tok::Comma, "`,` between integrand and anchor")?;
                let anchor_pos = self.pos();
                let anchor = self.sum()?;
                self.expect(Tok::RParen, "`)`")?;
                let a = anchor.as_constant().ok_or_else(|| ExprError::Syntax {
                    position: anchor_pos,
                    message: "integral anchor must be a numeric constant".into(),
                })?;
                return Expr::integral(integrand, a).map_err(|e| ExprError::Syntax {
                    position: pos,
                    message: e.to_string(),
                });
            }
            _ => {
                return Err(ExprError::UnknownFunction {
                    name: name.to_string(),
                    position: pos,
                })
            }
        };
        let arg = self.sum()?;
        self.expect(Tok::RParen, "`)`")?;
        Ok(Expr::call(func, arg))
    }
}

/// Parse an expression from text.
pub fn parse(text: &str) -> Result<Expr> {
    let toks = Lexer::tokens(text)?;
    let mut p = Parser {
        toks,
        at: 0,
        len: text.len(),
    };
    let e = p.sum()?;
    if p.at < p.toks.len() {
        return Err(ExprError::Syntax {
            position: p.pos(),
            message: "trailing input".into(),
        });
    }
    Ok(e)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reciprocal() {
        assert_eq!(
            parse("1/x").unwrap(),
            Expr::Quotient(Box::new(Expr::int(1)), Box::new(Expr::x()))
        );
    }

    #[test]
    fn general_bessel_coefficient() {
        let e = parse("beta - mu^2/x^2").unwrap();
        let expected = Expr::Sum(vec![
            Expr::param("beta"),
            Expr::Neg(Box::new(Expr::Quotient(
                Box::new(Expr::Pow(
                    Box::new(Expr::param("mu")),
                    Box::new(Expr::int(2)),
                )),
                Box::new(Expr::Pow(Box::new(Expr::x()), Box::new(Expr::int(2)))),
            ))),
        ]);
        assert_eq!(e, expected);
    }

    #[test]
    fn legendre_first_derivative_coefficient() {
        let e = parse("-2*x/(1-x^2)").unwrap();
        let expected = Expr::neg(Expr::div(
            Expr::mul(Expr::int(2), Expr::x()),
            Expr::sub(Expr::one(), Expr::pow(Expr::x(), Expr::int(2))),
        ));
        assert_eq!(e, expected);
    }

    #[test]
    fn precedence_and_associativity() {
        // ^ binds tighter than unary minus, and is right-associative.
        assert_eq!(
            parse("-x^2").unwrap(),
            Expr::neg(Expr::pow(Expr::x(), Expr::int(2)))
        );
        assert_eq!(
            parse("x^y^2").unwrap(),
            Expr::pow(Expr::x(), Expr::pow(Expr::y(), Expr::int(2)))
        );
        assert_eq!(parse("2^-1").unwrap(), Expr::ratio(1, 2));
        assert_eq!(parse("  x   *  y ").unwrap(), parse("x*y").unwrap());
    }

    #[test]
    fn primes_alias_derivative_slots() {
        assert_eq!(parse("y'").unwrap(), Expr::yp());
        assert_eq!(parse("y''").unwrap(), Expr::ypp());
        assert_eq!(parse("y′").unwrap(), Expr::yp());
    }

    #[test]
    fn errors_carry_positions() {
        match parse("1 + * x") {
            Err(ExprError::Syntax { position, .. }) => assert_eq!(position, 4),
            other => panic!("unexpected {other:?}"),
        }
        match parse("tan(x)") {
            Err(ExprError::UnknownFunction { name, position }) => {
                assert_eq!(name, "tan");
                assert_eq!(position, 0);
            }
            other => panic!("unexpected {other:?}"),
        }
        assert!(parse("(x + 1").is_err());
        assert!(parse("x y").is_err());
        assert!(parse("").is_err());
    }

    #[test]
    fn integral_nodes_parse() {
        let e = parse("int(1/x, 1.0)").unwrap();
        assert!(matches!(e, Expr::Integral { anchor, .. } if anchor == 1.0));
        assert!(parse("int(y, 1)").is_err());
    }
}
