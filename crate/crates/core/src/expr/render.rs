use super::Expr;
use std::fmt;

// Binding strength of the rendered form of each node.
const SUM: u8 = 1;
const PRODUCT: u8 = 2;
const UNARY: u8 = 3;
const POWER: u8 = 4;
const ATOM: u8 = 5;

fn precedence(e: &Expr) -> u8 {
    match e {
        Expr::Rational(r) => {
            if *r.numer() < 0 {
                UNARY.min(if r.is_integer() { UNARY } else { PRODUCT })
            } else if r.is_integer() {
                ATOM
            } else {
                PRODUCT
            }
        }
        Expr::Float(f) => {
            if *f < 0.0 {
                UNARY
            } else {
                ATOM
            }
        }
        Expr::Sym(_) | Expr::Call(..) | Expr::Integral { .. } => ATOM,
        Expr::Sum(_) => SUM,
        Expr::Product(_) | Expr::Quotient(..) => PRODUCT,
        Expr::Neg(_) => UNARY,
        Expr::Pow(..) => POWER,
    }
}

fn write_at(f: &mut fmt::Formatter<'_>, e: &Expr, min: u8) -> fmt::Result {
    if precedence(e) < min {
        write!(f, "(")?;
        write_expr(f, e)?;
        write!(f, ")")
    } else {
        write_expr(f, e)
    }
}

fn write_float(f: &mut fmt::Formatter<'_>, v: f64) -> fmt::Result {
    // `{:?}` is the shortest representation that round-trips.
    write!(f, "{v:?}")
}

fn write_expr(f: &mut fmt::Formatter<'_>, e: &Expr) -> fmt::Result {
    match e {
        Expr::Rational(r) => {
            if r.is_integer() {
                write!(f, "{}", r.numer())
            } else {
                write!(f, "{}/{}", r.numer(), r.denom())
            }
        }
        Expr::Float(v) => write_float(f, *v),
        Expr::Sym(s) => write!(f, "{s}"),
        Expr::Sum(terms) => {
            for (i, t) in terms.iter().enumerate() {
                match (i, t) {
                    (0, _) => write_at(f, t, SUM)?,
                    (_, Expr::Neg(inner)) => {
                        write!(f, " - ")?;
                        write_at(f, inner, PRODUCT)?;
                    }
                    _ => {
                        write!(f, " + ")?;
                        write_at(f, t, PRODUCT)?;
                    }
                }
            }
            Ok(())
        }
        Expr::Product(factors) => {
            for (i, t) in factors.iter().enumerate() {
                if i > 0 {
                    write!(f, "*")?;
                }
                write_at(f, t, UNARY)?;
            }
            Ok(())
        }
        Expr::Quotient(a, b) => {
            write_at(f, a, PRODUCT)?;
            write!(f, "/")?;
            write_at(f, b, UNARY)
        }
        Expr::Neg(a) => {
            write!(f, "-")?;
            write_at(f, a, PRODUCT)
        }
        Expr::Pow(a, b) => {
            write_at(f, a, ATOM)?;
            write!(f, "^")?;
            write_at(f, b, ATOM)
        }
        Expr::Call(func, a) => {
            write!(f, "{}(", func.name())?;
            write_expr(f, a)?;
            write!(f, ")")
        }
        Expr::Integral { integrand, anchor } => {
            write!(f, "int(")?;
            write_expr(f, integrand)?;
            write!(f, ", ")?;
            write_float(f, *anchor)?;
            write!(f, ")")
        }
    }
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write_expr(f, self)
    }
}
