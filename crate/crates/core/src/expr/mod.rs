//! Symbolic expressions over the independent variable `x`, the dependent
//! slots `y`, `y'`, `y''`, an auxiliary solution `vbar`/`vbar'`, and named
//! real parameters.
//!
//! Expressions are immutable values. All constructors apply a light
//! normalization (flattening of sums and products, constant folding, sign
//! extraction) so that `parse(render(e)) == e` holds for every expression
//! built through them. No canonical simplification is attempted; symbolic
//! identities are certified by sampled equality instead (see [`sample`]).

mod antideriv;
mod diff;
mod eval;
mod parse;
mod quadrature;
mod render;
pub mod sample;

pub use antideriv::{antiderivative, closed_form_primitive, exp_of_primitive, AntiderivativeFn};
pub use eval::Bindings;
pub use parse::parse;
pub use quadrature::adaptive_simpson;
pub use sample::{compare_on_domain, equivalent_on_domain, Comparison, SampleSpace, SYMBOLIC_TOL};

use num_rational::Rational64;
use num_traits::{CheckedAdd, CheckedMul, Signed, ToPrimitive, Zero};
use std::fmt;
use std::sync::Arc;
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ExprError {
    #[error("syntax error at byte {position}: {message}")]
    Syntax { position: usize, message: String },

    #[error("unknown function `{name}` at byte {position}")]
    UnknownFunction { name: String, position: usize },

    #[error("unbound symbol `{0}`")]
    Unbound(String),

    #[error("domain error: {what} at x = {x:?}")]
    Domain { what: String, x: Option<f64> },

    #[error("total x-derivative of an expression containing `{0}` requires a path")]
    TotalDerivative(String),

    #[error("integrand pole inside [{lo}, {hi}]")]
    IntegrandPole { lo: f64, hi: f64 },

    #[error("integrand must depend on x and parameters only, found `{0}`")]
    IntegrandSymbol(String),

    #[error("invalid parameter name `{0}`")]
    InvalidParameter(String),
}

pub type Result<T, E = ExprError> = std::result::Result<T, E>;

/// Names that cannot be used as parameters.
pub const RESERVED: &[&str] = &[
    "x", "y", "yp", "ypp", "vbar", "vbarp", "exp", "ln", "sin", "cos", "int",
];

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Symbol {
    X,
    Y,
    Yp,
    Ypp,
    /// Auxiliary solution of the same equation (nonstandard Lagrangians).
    Vbar,
    VbarP,
    Param(Arc<str>),
}

impl Symbol {
    pub fn param(name: &str) -> Result<Symbol> {
        validate_param_name(name)?;
        Ok(Symbol::Param(Arc::from(name)))
    }

    pub fn name(&self) -> &str {
        match self {
            Symbol::X => "x",
            Symbol::Y => "y",
            Symbol::Yp => "yp",
            Symbol::Ypp => "ypp",
            Symbol::Vbar => "vbar",
            Symbol::VbarP => "vbarp",
            Symbol::Param(p) => p,
        }
    }

    /// True for the path-dependent slots `y`, `y'`, `y''`, `vbar`, `vbar'`.
    pub fn is_dependent(&self) -> bool {
        !matches!(self, Symbol::X | Symbol::Param(_))
    }
}

impl fmt::Display for Symbol {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

pub fn validate_param_name(name: &str) -> Result<()> {
    let mut chars = name.chars();
    let ok_first = chars
        .next()
        .map(|c| c.is_ascii_alphabetic() || c == '_')
        .unwrap_or(false);
    if !ok_first
        || !chars.all(|c| c.is_ascii_alphanumeric() || c == '_')
        || RESERVED.contains(&name)
    {
        return Err(ExprError::InvalidParameter(name.to_string()));
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Func {
    Exp,
    Ln,
    Sin,
    Cos,
}

impl Func {
    pub fn name(self) -> &'static str {
        match self {
            Func::Exp => "exp",
            Func::Ln => "ln",
            Func::Sin => "sin",
            Func::Cos => "cos",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Expr {
    Rational(Rational64),
    Float(f64),
    Sym(Symbol),
    Sum(Vec<Expr>),
    Product(Vec<Expr>),
    Pow(Box<Expr>, Box<Expr>),
    Neg(Box<Expr>),
    Quotient(Box<Expr>, Box<Expr>),
    Call(Func, Box<Expr>),
    /// `int(f, a)`: the definite integral of `f` from `a` to `x`, evaluated
    /// by adaptive quadrature. Used when no closed-form primitive is known.
    Integral {
        integrand: Box<Expr>,
        anchor: f64,
    },
}

enum Num {
    R(Rational64),
    F(f64),
}

impl Num {
    fn to_f64(&self) -> f64 {
        match self {
            Num::R(r) => r.to_f64().unwrap_or(f64::NAN),
            Num::F(f) => *f,
        }
    }

    fn add(self, other: Num) -> Num {
        match (self, other) {
            (Num::R(a), Num::R(b)) => match a.checked_add(&b) {
                Some(r) => Num::R(r),
                None => Num::F(a.to_f64().unwrap() + b.to_f64().unwrap()),
            },
            (a, b) => Num::F(a.to_f64() + b.to_f64()),
        }
    }

    fn mul(self, other: Num) -> Num {
        match (self, other) {
            (Num::R(a), Num::R(b)) => match a.checked_mul(&b) {
                Some(r) => Num::R(r),
                None => Num::F(a.to_f64().unwrap() * b.to_f64().unwrap()),
            },
            (a, b) => Num::F(a.to_f64() * b.to_f64()),
        }
    }

    fn is_zero(&self) -> bool {
        match self {
            Num::R(r) => r.is_zero(),
            Num::F(f) => *f == 0.0,
        }
    }

    fn is_one(&self) -> bool {
        match self {
            Num::R(r) => *r == Rational64::from_integer(1),
            Num::F(f) => *f == 1.0,
        }
    }

    fn is_negative(&self) -> bool {
        match self {
            Num::R(r) => r.is_negative(),
            Num::F(f) => *f < 0.0,
        }
    }

    fn abs(self) -> Num {
        match self {
            Num::R(r) => Num::R(r.abs()),
            Num::F(f) => Num::F(f.abs()),
        }
    }

    fn into_expr(self) -> Expr {
        match self {
            Num::R(r) => Expr::Rational(r),
            Num::F(f) => Expr::Float(f),
        }
    }
}

impl Expr {
    pub fn int(n: i64) -> Expr {
        Expr::Rational(Rational64::from_integer(n))
    }

    pub fn ratio(num: i64, den: i64) -> Expr {
        Expr::Rational(Rational64::new(num, den))
    }

    pub fn zero() -> Expr {
        Expr::int(0)
    }

    pub fn one() -> Expr {
        Expr::int(1)
    }

    pub fn half() -> Expr {
        Expr::ratio(1, 2)
    }

    /// Float constant; integral values are stored as exact rationals.
    pub fn float(v: f64) -> Expr {
        if v.fract() == 0.0 && v.abs() < 1e15 {
            Expr::int(v as i64)
        } else {
            Expr::Float(v)
        }
    }

    pub fn x() -> Expr {
        Expr::Sym(Symbol::X)
    }

    pub fn y() -> Expr {
        Expr::Sym(Symbol::Y)
    }

    pub fn yp() -> Expr {
        Expr::Sym(Symbol::Yp)
    }

    pub fn ypp() -> Expr {
        Expr::Sym(Symbol::Ypp)
    }

    pub fn vbar() -> Expr {
        Expr::Sym(Symbol::Vbar)
    }

    pub fn vbarp() -> Expr {
        Expr::Sym(Symbol::VbarP)
    }

    /// Parameter reference. Panics on a reserved or malformed name; use
    /// [`Symbol::param`] for fallible construction.
    pub fn param(name: &str) -> Expr {
        Expr::Sym(Symbol::param(name).expect("invalid parameter name"))
    }

    fn as_num(&self) -> Option<Num> {
        match self {
            Expr::Rational(r) => Some(Num::R(*r)),
            Expr::Float(f) => Some(Num::F(*f)),
            _ => None,
        }
    }

    /// Numeric value of a constant node.
    pub fn as_constant(&self) -> Option<f64> {
        self.as_num().map(|n| n.to_f64())
    }

    pub fn is_zero(&self) -> bool {
        self.as_num().map(|n| n.is_zero()).unwrap_or(false)
    }

    pub fn is_one(&self) -> bool {
        self.as_num().map(|n| n.is_one()).unwrap_or(false)
    }

    pub fn sum(terms: Vec<Expr>) -> Expr {
        let mut flat = Vec::with_capacity(terms.len());
        let mut constant: Option<Num> = None;
        for t in terms {
            match t {
                Expr::Sum(inner) => {
                    for u in inner {
                        match u.as_num() {
                            Some(n) => constant = Some(fold_add(constant, n)),
                            None => flat.push(u),
                        }
                    }
                }
                other => match other.as_num() {
                    Some(n) => constant = Some(fold_add(constant, n)),
                    None => flat.push(other),
                },
            }
        }
        if let Some(c) = constant {
            if !c.is_zero() || flat.is_empty() {
                flat.insert(0, c.into_expr());
            }
        }
        match flat.len() {
            0 => Expr::zero(),
            1 => flat.pop().unwrap(),
            _ => Expr::Sum(flat),
        }
    }

    pub fn product(factors: Vec<Expr>) -> Expr {
        let mut flat = Vec::with_capacity(factors.len());
        let mut constant = Num::R(Rational64::from_integer(1));
        let mut negative = false;
        let mut stack: Vec<Expr> = factors.into_iter().rev().collect();
        while let Some(f) = stack.pop() {
            match f {
                Expr::Product(inner) => stack.extend(inner.into_iter().rev()),
                Expr::Neg(inner) => {
                    negative = !negative;
                    stack.push(*inner);
                }
                other => match other.as_num() {
                    Some(n) => constant = constant.mul(n),
                    None => flat.push(other),
                },
            }
        }
        if constant.is_zero() {
            return Expr::zero();
        }
        if constant.is_negative() {
            negative = !negative;
            constant = constant.abs();
        }
        if !constant.is_one() || flat.is_empty() {
            flat.insert(0, constant.into_expr());
        }
        let body = if flat.len() == 1 {
            flat.pop().unwrap()
        } else {
            Expr::Product(flat)
        };
        if negative {
            Expr::neg(body)
        } else {
            body
        }
    }

    pub fn neg(e: Expr) -> Expr {
        match e {
            Expr::Rational(r) => Expr::Rational(-r),
            Expr::Float(f) => {
                if f == 0.0 {
                    Expr::zero()
                } else {
                    Expr::Float(-f)
                }
            }
            Expr::Neg(inner) => *inner,
            other => Expr::Neg(Box::new(other)),
        }
    }

    pub fn add(a: Expr, b: Expr) -> Expr {
        Expr::sum(vec![a, b])
    }

    pub fn sub(a: Expr, b: Expr) -> Expr {
        Expr::sum(vec![a, Expr::neg(b)])
    }

    pub fn mul(a: Expr, b: Expr) -> Expr {
        Expr::product(vec![a, b])
    }

    pub fn div(a: Expr, b: Expr) -> Expr {
        if let Expr::Neg(inner) = a {
            return Expr::neg(Expr::div(*inner, b));
        }
        if let Expr::Neg(inner) = b {
            return Expr::neg(Expr::div(a, *inner));
        }
        if b.is_one() {
            return a;
        }
        match (a.as_num(), b.as_num()) {
            (Some(Num::R(p)), Some(Num::R(q))) if !q.is_zero() => return Expr::Rational(p / q),
            (Some(p), Some(q)) if !q.is_zero() => {
                return Expr::float_const(p.to_f64() / q.to_f64())
            }
            (Some(p), _) if p.is_zero() => return Expr::zero(),
            _ => {}
        }
        if let Some(q) = b.as_num() {
            if q.is_negative() {
                return Expr::neg(Expr::div(a, q.abs().into_expr()));
            }
        }
        Expr::Quotient(Box::new(a), Box::new(b))
    }

    fn float_const(v: f64) -> Expr {
        if v < 0.0 {
            Expr::Float(v)
        } else if v == 0.0 {
            Expr::zero()
        } else {
            Expr::Float(v)
        }
    }

    pub fn pow(base: Expr, exponent: Expr) -> Expr {
        if exponent.is_zero() {
            return Expr::one();
        }
        if exponent.is_one() {
            return base;
        }
        if base.is_one() {
            return Expr::one();
        }
        if let (Some(Num::R(b)), Some(Num::R(e))) = (base.as_num(), exponent.as_num()) {
            if e.is_integer() && e.to_integer().abs() <= 64 && !(b.is_zero() && e.is_negative()) {
                let n = e.to_integer();
                let mut acc = Some(Rational64::from_integer(1));
                for _ in 0..n.abs() {
                    acc = acc.and_then(|a| a.checked_mul(&b));
                }
                if let Some(a) = acc {
                    return Expr::Rational(if n < 0 { a.recip() } else { a });
                }
            }
        }
        if base.is_zero() {
            if let Some(e) = exponent.as_num() {
                if !e.is_negative() {
                    return Expr::zero();
                }
            }
        }
        Expr::Pow(Box::new(base), Box::new(exponent))
    }

    pub fn call(f: Func, arg: Expr) -> Expr {
        match (f, &arg) {
            (Func::Exp, a) if a.is_zero() => Expr::one(),
            (Func::Ln, a) if a.is_one() => Expr::zero(),
            (Func::Sin, a) if a.is_zero() => Expr::zero(),
            (Func::Cos, a) if a.is_zero() => Expr::one(),
            (Func::Exp, Expr::Call(Func::Ln, inner)) => (**inner).clone(),
            (Func::Ln, Expr::Call(Func::Exp, inner)) => (**inner).clone(),
            _ => Expr::Call(f, Box::new(arg)),
        }
    }

    pub fn exp(arg: Expr) -> Expr {
        Expr::call(Func::Exp, arg)
    }

    pub fn ln(arg: Expr) -> Expr {
        Expr::call(Func::Ln, arg)
    }

    pub fn sin(arg: Expr) -> Expr {
        Expr::call(Func::Sin, arg)
    }

    pub fn cos(arg: Expr) -> Expr {
        Expr::call(Func::Cos, arg)
    }

    pub fn integral(integrand: Expr, anchor: f64) -> Result<Expr> {
        if let Some(s) = integrand.symbols().into_iter().find(|s| s.is_dependent()) {
            return Err(ExprError::IntegrandSymbol(s.name().to_string()));
        }
        if integrand.is_zero() {
            return Ok(Expr::zero());
        }
        Ok(Expr::Integral {
            integrand: Box::new(integrand),
            anchor,
        })
    }

    /// All symbols occurring in the expression, in sorted order.
    pub fn symbols(&self) -> Vec<Symbol> {
        let mut out = Vec::new();
        self.visit(&mut |e| {
            if let Expr::Sym(s) = e {
                out.push(s.clone());
            }
            if let Expr::Integral { .. } = e {
                out.push(Symbol::X);
            }
        });
        out.sort();
        out.dedup();
        out
    }

    pub fn contains(&self, sym: &Symbol) -> bool {
        let mut found = false;
        self.visit(&mut |e| match e {
            Expr::Sym(s) if s == sym => found = true,
            Expr::Integral { .. } if *sym == Symbol::X => found = true,
            _ => {}
        });
        found
    }

    pub fn params(&self) -> Vec<String> {
        self.symbols()
            .into_iter()
            .filter_map(|s| match s {
                Symbol::Param(p) => Some(p.to_string()),
                _ => None,
            })
            .collect()
    }

    pub fn has_dependent_symbols(&self) -> bool {
        self.symbols().iter().any(Symbol::is_dependent)
    }

    fn visit(&self, f: &mut impl FnMut(&Expr)) {
        f(self);
        match self {
            Expr::Sum(v) | Expr::Product(v) => v.iter().for_each(|c| c.visit(f)),
            Expr::Pow(a, b) | Expr::Quotient(a, b) => {
                a.visit(f);
                b.visit(f);
            }
            Expr::Neg(a) | Expr::Call(_, a) => a.visit(f),
            Expr::Integral { integrand, .. } => integrand.visit(f),
            Expr::Rational(_) | Expr::Float(_) | Expr::Sym(_) => {}
        }
    }

    /// Replace every occurrence of `sym` with `with`, re-normalizing on the
    /// way up. Substituting `x` inside an `int(..)` node is rejected by
    /// evaluating the integral at the substituted point instead.
    pub fn substitute(&self, sym: &Symbol, with: &Expr) -> Expr {
        match self {
            Expr::Sym(s) if s == sym => with.clone(),
            Expr::Rational(_) | Expr::Float(_) | Expr::Sym(_) => self.clone(),
            Expr::Sum(v) => Expr::sum(v.iter().map(|c| c.substitute(sym, with)).collect()),
            Expr::Product(v) => Expr::product(v.iter().map(|c| c.substitute(sym, with)).collect()),
            Expr::Pow(a, b) => Expr::pow(a.substitute(sym, with), b.substitute(sym, with)),
            Expr::Quotient(a, b) => Expr::div(a.substitute(sym, with), b.substitute(sym, with)),
            Expr::Neg(a) => Expr::neg(a.substitute(sym, with)),
            Expr::Call(func, a) => Expr::call(*func, a.substitute(sym, with)),
            Expr::Integral { integrand, anchor } => {
                if *sym == Symbol::X {
                    // Only constant substitutions make sense here.
                    match with.as_constant() {
                        Some(v) if v == *anchor => Expr::zero(),
                        _ => self.clone(),
                    }
                } else {
                    Expr::Integral {
                        integrand: Box::new(integrand.substitute(sym, with)),
                        anchor: *anchor,
                    }
                }
            }
        }
    }

    /// Replace every parameter that has a value in `values` by a constant.
    pub fn bind_params(&self, values: &std::collections::BTreeMap<String, f64>) -> Expr {
        let mut out = self.clone();
        for (name, v) in values {
            if let Ok(sym) = Symbol::param(name) {
                if out.contains(&sym) {
                    out = out.substitute(&sym, &Expr::float(*v));
                }
            }
        }
        out
    }

    /// Number of nodes, for diagnostics and benchmarks.
    pub fn size(&self) -> usize {
        let mut n = 0;
        self.visit(&mut |_| n += 1);
        n
    }
}

fn fold_add(acc: Option<Num>, n: Num) -> Num {
    match acc {
        None => n,
        Some(a) => a.add(n),
    }
}

impl From<i64> for Expr {
    fn from(n: i64) -> Self {
        Expr::int(n)
    }
}

impl From<Symbol> for Expr {
    fn from(s: Symbol) -> Self {
        Expr::Sym(s)
    }
}

macro_rules! binop {
    ($tr:ident, $method:ident, $ctor:path) => {
        impl std::ops::$tr for Expr {
            type Output = Expr;
            fn $method(self, rhs: Expr) -> Expr {
                $ctor(self, rhs)
            }
        }
        impl std::ops::$tr<&Expr> for &Expr {
            type Output = Expr;
            fn $method(self, rhs: &Expr) -> Expr {
                $ctor(self.clone(), rhs.clone())
            }
        }
        impl std::ops::$tr<&Expr> for Expr {
            type Output = Expr;
            fn $method(self, rhs: &Expr) -> Expr {
                $ctor(self, rhs.clone())
            }
        }
        impl std::ops::$tr<Expr> for &Expr {
            type Output = Expr;
            fn $method(self, rhs: Expr) -> Expr {
                $ctor(self.clone(), rhs)
            }
        }
    };
}

binop!(Add, add, Expr::add);
binop!(Sub, sub, Expr::sub);
binop!(Mul, mul, Expr::mul);
binop!(Div, div, Expr::div);

impl std::ops::Neg for Expr {
    type Output = Expr;
    fn neg(self) -> Expr {
        Expr::neg(self)
    }
}

impl std::ops::Neg for &Expr {
    type Output = Expr;
    fn neg(self) -> Expr {
        Expr::neg(self.clone())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn constants_fold_in_sums() {
        let e = Expr::sum(vec![Expr::int(1), Expr::x(), Expr::int(-1)]);
        assert_eq!(e, Expr::x());
        let e = Expr::add(Expr::ratio(1, 2), Expr::ratio(1, 3));
        assert_eq!(e, Expr::ratio(5, 6));
    }

    #[test]
    fn products_pull_out_signs() {
        let e = Expr::mul(Expr::int(-2), Expr::x());
        assert_eq!(e, Expr::neg(Expr::Product(vec![Expr::int(2), Expr::x()])));
        let e = Expr::mul(Expr::neg(Expr::x()), Expr::neg(Expr::y()));
        assert_eq!(e, Expr::Product(vec![Expr::x(), Expr::y()]));
        assert_eq!(Expr::mul(Expr::zero(), Expr::x()), Expr::zero());
    }

    #[test]
    fn integer_literals_stay_exact() {
        assert_eq!(Expr::float(3.0), Expr::int(3));
        assert_eq!(Expr::div(Expr::int(3), Expr::int(2)), Expr::ratio(3, 2));
        assert_eq!(Expr::pow(Expr::ratio(1, 2), Expr::int(-2)), Expr::int(4));
    }

    #[test]
    fn reserved_names_are_not_parameters() {
        assert!(Symbol::param("x").is_err());
        assert!(Symbol::param("yp").is_err());
        assert!(Symbol::param("").is_err());
        assert!(Symbol::param("2a").is_err());
        assert!(Symbol::param("mu").is_ok());
    }

    #[test]
    fn substitution_renormalizes() {
        let e = Expr::sub(Expr::param("m"), Expr::x());
        let s = e.substitute(&Symbol::param("m").unwrap(), &Expr::x());
        assert_eq!(s, Expr::sum(vec![Expr::x(), Expr::neg(Expr::x())]));
    }
}
