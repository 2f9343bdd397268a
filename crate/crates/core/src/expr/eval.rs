use super::quadrature::integral_from_anchor;
use super::{Expr, ExprError, Func, Result, Symbol};
use num_traits::ToPrimitive;
use std::collections::BTreeMap;

/// Values for the symbols of an expression. Evaluation fails on any symbol
/// left unbound; there is no implicit zero.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Bindings {
    pub x: Option<f64>,
    pub y: Option<f64>,
    pub yp: Option<f64>,
    pub ypp: Option<f64>,
    pub vbar: Option<f64>,
    pub vbarp: Option<f64>,
    pub params: BTreeMap<String, f64>,
}

impl Bindings {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn with_params(params: BTreeMap<String, f64>) -> Self {
        Bindings {
            params,
            ..Default::default()
        }
    }

    pub fn at(mut self, x: f64) -> Self {
        self.x = Some(x);
        self
    }

    pub fn param(mut self, name: &str, v: f64) -> Self {
        self.params.insert(name.to_string(), v);
        self
    }

    pub fn path(mut self, y: f64, yp: f64) -> Self {
        self.y = Some(y);
        self.yp = Some(yp);
        self
    }

    pub fn second(mut self, ypp: f64) -> Self {
        self.ypp = Some(ypp);
        self
    }

    pub fn aux(mut self, vbar: f64, vbarp: f64) -> Self {
        self.vbar = Some(vbar);
        self.vbarp = Some(vbarp);
        self
    }

    pub fn set(&mut self, sym: &Symbol, v: f64) {
        match sym {
            Symbol::X => self.x = Some(v),
            Symbol::Y => self.y = Some(v),
            Symbol::Yp => self.yp = Some(v),
            Symbol::Ypp => self.ypp = Some(v),
            Symbol::Vbar => self.vbar = Some(v),
            Symbol::VbarP => self.vbarp = Some(v),
            Symbol::Param(p) => {
                self.params.insert(p.to_string(), v);
            }
        }
    }

    pub fn get(&self, sym: &Symbol) -> Result<f64> {
        let v = match sym {
            Symbol::X => self.x,
            Symbol::Y => self.y,
            Symbol::Yp => self.yp,
            Symbol::Ypp => self.ypp,
            Symbol::Vbar => self.vbar,
            Symbol::VbarP => self.vbarp,
            Symbol::Param(p) => self.params.get(&**p).copied(),
        };
        v.ok_or_else(|| ExprError::Unbound(sym.name().to_string()))
    }
}

impl Expr {
    /// IEEE double evaluation. Non-finite intermediate or final values are
    /// reported as domain errors.
    pub fn eval(&self, b: &Bindings) -> Result<f64> {
        let v = self.eval_inner(b)?;
        check(v, "non-finite result", b)
    }

    fn eval_inner(&self, b: &Bindings) -> Result<f64> {
        Ok(match self {
            Expr::Rational(r) => r.to_f64().unwrap_or(f64::NAN),
            Expr::Float(v) => *v,
            Expr::Sym(s) => b.get(s)?,
            Expr::Sum(terms) => {
                let mut acc = 0.0;
                for t in terms {
                    acc += t.eval_inner(b)?;
                }
                acc
            }
            Expr::Product(factors) => {
                let mut acc = 1.0;
                for t in factors {
                    acc *= t.eval_inner(b)?;
                }
                acc
            }
            Expr::Neg(a) => -a.eval_inner(b)?,
            Expr::Quotient(n, d) => {
                let den = d.eval_inner(b)?;
                if den == 0.0 {
                    return Err(ExprError::Domain {
                        what: format!("division by zero in `{self}`"),
                        x: b.x,
                    });
                }
                n.eval_inner(b)? / den
            }
            Expr::Pow(base, exponent) => {
                let e = exponent.eval_inner(b)?;
                let bv = base.eval_inner(b)?;
                let v = if let Some(n) = integer_exponent(exponent, e) {
                    bv.powi(n)
                } else {
                    if bv < 0.0 {
                        return Err(ExprError::Domain {
                            what: format!("negative base with non-integer exponent in `{self}`"),
                            x: b.x,
                        });
                    }
                    bv.powf(e)
                };
                check(v, "pole in power", b)?
            }
            Expr::Call(func, a) => {
                let v = a.eval_inner(b)?;
                match func {
                    Func::Exp => check(v.exp(), "overflow in exp", b)?,
                    Func::Ln => {
                        if v <= 0.0 {
                            return Err(ExprError::Domain {
                                what: format!("ln of non-positive value {v}"),
                                x: b.x,
                            });
                        }
                        v.ln()
                    }
                    Func::Sin => v.sin(),
                    Func::Cos => v.cos(),
                }
            }
            Expr::Integral { integrand, anchor } => {
                let x = b.get(&Symbol::X)?;
                integral_from_anchor(integrand, *anchor, x, b)?
            }
        })
    }
}

fn integer_exponent(exponent: &Expr, value: f64) -> Option<i32> {
    let exact = matches!(exponent, Expr::Rational(r) if r.is_integer());
    if (exact || value.fract() == 0.0) && value.abs() <= i32::MAX as f64 {
        Some(value as i32)
    } else {
        None
    }
}

fn check(v: f64, what: &str, b: &Bindings) -> Result<f64> {
    if v.is_finite() {
        Ok(v)
    } else {
        Err(ExprError::Domain {
            what: what.to_string(),
            x: b.x,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::super::parse;
    use super::*;

    #[test]
    fn reciprocal_at_two() {
        let b = Bindings::new().at(2.0);
        assert_eq!(parse("1/x").unwrap().eval(&b).unwrap(), 0.5);
    }

    #[test]
    fn bessel_coefficient_vanishes() {
        let b = Bindings::new().at(1.0).param("beta", 1.0).param("mu", 1.0);
        assert_eq!(parse("beta - mu^2/x^2").unwrap().eval(&b).unwrap(), 0.0);
    }

    #[test]
    fn rational_power() {
        let b = Bindings::new().at(4.0).param("alpha", 1.5);
        assert_eq!(parse("x^alpha").unwrap().eval(&b).unwrap(), 8.0);
        assert_eq!(parse("x^(3/2)").unwrap().eval(&b).unwrap(), 8.0);
    }

    #[test]
    fn unbound_symbols_fail_loudly() {
        let e = parse("x + mu").unwrap();
        assert_eq!(
            e.eval(&Bindings::new().at(1.0)),
            Err(ExprError::Unbound("mu".into()))
        );
        assert!(matches!(
            e.eval(&Bindings::new()),
            Err(ExprError::Unbound(_))
        ));
    }

    #[test]
    fn domain_violations() {
        let b = Bindings::new().at(0.0);
        assert!(matches!(
            parse("ln(x)").unwrap().eval(&b),
            Err(ExprError::Domain { .. })
        ));
        assert!(matches!(
            parse("1/x").unwrap().eval(&b),
            Err(ExprError::Domain { .. })
        ));
        assert!(matches!(
            parse("x^(-2)").unwrap().eval(&b),
            Err(ExprError::Domain { .. })
        ));
        let b = Bindings::new().at(-1.0);
        assert!(matches!(
            parse("x^(1/2)").unwrap().eval(&b),
            Err(ExprError::Domain { .. })
        ));
        assert_eq!(parse("x^2").unwrap().eval(&b).unwrap(), 1.0);
    }

    #[test]
    fn evaluation_is_deterministic() {
        let e = parse("sin(x)^2 + exp(-x/3)*cos(2*x) - ln(1 + x^2)").unwrap();
        let b = Bindings::new().at(0.731);
        let first = e.eval(&b).unwrap().to_bits();
        for _ in 0..10 {
            assert_eq!(e.eval(&b).unwrap().to_bits(), first);
        }
    }
}
