//! Antiderivatives in `x`: a closed-form table for the shapes that occur in
//! practice (constants, monomials `c x^n`, `c/x`, logarithmic derivatives
//! `k u'/u`, and sums of these), with adaptive quadrature as fallback.

use super::{Bindings, Expr, ExprError, Func, Result, Symbol};

/// `F(x) = int_anchor^x f`, closed-form when the integrand is recognized.
#[derive(Debug, Clone, PartialEq)]
pub struct AntiderivativeFn {
    integrand: Expr,
    anchor: f64,
    /// Indefinite primitive, when the table recognized the integrand.
    primitive: Option<Expr>,
    anchored: Expr,
}

impl AntiderivativeFn {
    pub fn anchor(&self) -> f64 {
        self.anchor
    }

    pub fn integrand(&self) -> &Expr {
        &self.integrand
    }

    pub fn is_closed_form(&self) -> bool {
        self.primitive.is_some()
    }

    /// Indefinite primitive (closed-form case only).
    pub fn primitive(&self) -> Option<&Expr> {
        self.primitive.as_ref()
    }

    /// `F` as an expression with `F(anchor) = 0`.
    pub fn as_expr(&self) -> &Expr {
        &self.anchored
    }

    /// The same function built on the quadrature path, for cross-checks.
    pub fn quadrature(&self) -> AntiderivativeFn {
        AntiderivativeFn {
            integrand: self.integrand.clone(),
            anchor: self.anchor,
            primitive: None,
            anchored: Expr::integral(self.integrand.clone(), self.anchor)
                .expect("validated integrand"),
        }
    }

    pub fn eval(&self, x: f64, params: &Bindings) -> Result<f64> {
        check_interval(&self.integrand, self.anchor, x, params)?;
        let mut b = params.clone();
        b.x = Some(x);
        self.anchored.eval(&b).map_err(|e| match e {
            ExprError::Domain { .. } => ExprError::IntegrandPole {
                lo: self.anchor.min(x),
                hi: self.anchor.max(x),
            },
            other => other,
        })
    }
}

/// Build `F` with `F(anchor) = 0` and `F' = e`.
pub fn antiderivative(e: &Expr, anchor: f64) -> Result<AntiderivativeFn> {
    if let Some(s) = e.symbols().into_iter().find(Symbol::is_dependent) {
        return Err(ExprError::IntegrandSymbol(s.name().to_string()));
    }
    match closed_form_primitive(e, anchor) {
        Some(p) => {
            let at_anchor = p.substitute(&Symbol::X, &Expr::Float(anchor));
            let anchored = if at_anchor.is_zero() {
                p.clone()
            } else {
                Expr::sub(p.clone(), at_anchor)
            };
            Ok(AntiderivativeFn {
                integrand: e.clone(),
                anchor,
                primitive: Some(p),
                anchored,
            })
        }
        None => Ok(AntiderivativeFn {
            integrand: e.clone(),
            anchor,
            primitive: None,
            anchored: Expr::integral(e.clone(), anchor)?,
        }),
    }
}

/// Indefinite primitive from the closed-form table, or `None`. Logarithm
/// arguments are sign-adjusted to be positive at `anchor`.
pub fn closed_form_primitive(e: &Expr, anchor: f64) -> Option<Expr> {
    if !e.contains(&Symbol::X) {
        return Some(Expr::mul(e.clone(), Expr::x()));
    }
    if let Some((coef, power)) = monomial(e) {
        if power.as_constant() == Some(-1.0) {
            return Some(Expr::mul(coef, log_of(Expr::x(), anchor)));
        }
        let p1 = Expr::add(power, Expr::one());
        return Some(Expr::div(
            Expr::mul(coef, Expr::pow(Expr::x(), p1.clone())),
            p1,
        ));
    }
    match e {
        Expr::Sum(terms) => {
            let parts: Option<Vec<Expr>> = terms
                .iter()
                .map(|t| closed_form_primitive(t, anchor))
                .collect();
            parts.map(Expr::sum)
        }
        Expr::Neg(a) => closed_form_primitive(a, anchor).map(Expr::neg),
        Expr::Product(factors) => {
            let (consts, rest): (Vec<Expr>, Vec<Expr>) = factors
                .iter()
                .cloned()
                .partition(|f| !f.contains(&Symbol::X));
            if rest.len() == 1 && !consts.is_empty() {
                closed_form_primitive(&rest[0], anchor).map(|p| Expr::mul(Expr::product(consts), p))
            } else {
                None
            }
        }
        Expr::Quotient(n, d) => {
            if !d.contains(&Symbol::X) {
                return closed_form_primitive(n, anchor).map(|p| Expr::div(p, (**d).clone()));
            }
            log_derivative(n, d).map(|k| Expr::mul(k, log_of((**d).clone(), anchor)))
        }
        _ => None,
    }
}

/// `e = coef * x^power` with `coef`, `power` free of `x`.
fn monomial(e: &Expr) -> Option<(Expr, Expr)> {
    match e {
        Expr::Sym(Symbol::X) => Some((Expr::one(), Expr::one())),
        Expr::Pow(b, p) if **b == Expr::x() && !p.contains(&Symbol::X) => {
            Some((Expr::one(), (**p).clone()))
        }
        Expr::Neg(a) => monomial(a).map(|(c, p)| (Expr::neg(c), p)),
        Expr::Product(factors) => {
            let mut coef = Vec::new();
            let mut power = Vec::new();
            for f in factors {
                if !f.contains(&Symbol::X) {
                    coef.push(f.clone());
                } else {
                    let (c, p) = monomial(f)?;
                    coef.push(c);
                    power.push(p);
                }
            }
            Some((Expr::product(coef), Expr::sum(power)))
        }
        Expr::Quotient(n, d) => {
            let (cn, pn) = if n.contains(&Symbol::X) {
                monomial(n)?
            } else {
                ((**n).clone(), Expr::zero())
            };
            let (cd, pd) = monomial(d)?;
            Some((Expr::div(cn, cd), Expr::sub(pn, pd)))
        }
        _ => None,
    }
}

/// Constant `k` with `n = k d'`, matched structurally up to numeric factors.
fn log_derivative(n: &Expr, d: &Expr) -> Option<Expr> {
    let dd = d.partial(&Symbol::X);
    let (cn, rn) = split_numeric(n);
    let (cd, rd) = split_numeric(&dd);
    if rn == rd && cd != 0.0 {
        Some(Expr::float(cn / cd))
    } else {
        None
    }
}

fn split_numeric(e: &Expr) -> (f64, Expr) {
    match e {
        Expr::Neg(a) => {
            let (c, r) = split_numeric(a);
            (-c, r)
        }
        Expr::Product(f) => match f[0].as_constant() {
            Some(c) => (c, Expr::product(f[1..].to_vec())),
            None => (1.0, e.clone()),
        },
        other => match other.as_constant() {
            Some(c) => (c, Expr::one()),
            None => (1.0, other.clone()),
        },
    }
}

fn log_of(u: Expr, anchor: f64) -> Expr {
    let b = Bindings::new().at(anchor);
    match u.eval(&b) {
        Ok(v) if v < 0.0 => Expr::ln(Expr::neg(u)),
        _ => Expr::ln(u),
    }
}

/// Exponential of `factor * primitive`, turning `k ln u` terms into powers
/// `u^(k factor)`.
pub fn exp_of_primitive(primitive: &Expr, factor: &Expr) -> Expr {
    let terms: Vec<Expr> = match primitive {
        Expr::Sum(t) => t.clone(),
        other => vec![other.clone()],
    };
    let mut factors = Vec::new();
    let mut rest = Vec::new();
    for t in terms {
        match log_term(&t) {
            Some((k, u)) => factors.push(Expr::pow(u, Expr::mul(k, factor.clone()))),
            None => rest.push(t),
        }
    }
    if !rest.is_empty() {
        factors.push(Expr::exp(Expr::mul(factor.clone(), Expr::sum(rest))));
    }
    Expr::product(factors)
}

fn log_term(t: &Expr) -> Option<(Expr, Expr)> {
    match t {
        Expr::Call(Func::Ln, u) => Some((Expr::one(), (**u).clone())),
        Expr::Neg(a) => log_term(a).map(|(k, u)| (Expr::neg(k), u)),
        Expr::Product(f) => {
            let idx = f
                .iter()
                .position(|g| matches!(g, Expr::Call(Func::Ln, _)))?;
            let Expr::Call(Func::Ln, u) = &f[idx] else {
                unreachable!()
            };
            let mut k = f.clone();
            k.remove(idx);
            let k = Expr::product(k);
            if k.contains(&Symbol::X) {
                return None;
            }
            Some((k, (**u).clone()))
        }
        _ => None,
    }
}

/// Reject intervals across which a denominator, a log argument or the base
/// of a negative power changes sign or vanishes.
fn check_interval(e: &Expr, anchor: f64, x: f64, params: &Bindings) -> Result<()> {
    let mut guards = Vec::new();
    collect_guards(e, &mut guards);
    if guards.is_empty() || anchor == x {
        return Ok(());
    }
    let pole = ExprError::IntegrandPole {
        lo: anchor.min(x),
        hi: anchor.max(x),
    };
    const N: usize = 65;
    for g in guards {
        let mut sign = 0.0f64;
        for i in 0..N {
            let t = anchor + (x - anchor) * i as f64 / (N - 1) as f64;
            let mut b = params.clone();
            b.x = Some(t);
            let v = g.eval(&b).map_err(|_| pole.clone())?;
            if v == 0.0 || (sign != 0.0 && v.signum() != sign) {
                return Err(pole);
            }
            sign = v.signum();
        }
    }
    Ok(())
}

fn denominator_factors(d: &Expr, out: &mut Vec<Expr>) {
    match d {
        Expr::Pow(b, _) => denominator_factors(b, out),
        Expr::Product(f) => f.iter().for_each(|g| denominator_factors(g, out)),
        Expr::Neg(a) => denominator_factors(a, out),
        other if other.contains(&Symbol::X) => out.push(other.clone()),
        _ => {}
    }
}

fn collect_guards(e: &Expr, out: &mut Vec<Expr>) {
    match e {
        Expr::Quotient(n, d) => {
            if d.contains(&Symbol::X) {
                denominator_factors(d, out);
            }
            collect_guards(n, out);
            collect_guards(d, out);
        }
        Expr::Pow(b, p) => {
            let negative = p.as_constant().map(|v| v < 0.0 || v.fract() != 0.0);
            if b.contains(&Symbol::X) && negative.unwrap_or(true) {
                denominator_factors(b, out);
            }
            collect_guards(b, out);
            collect_guards(p, out);
        }
        Expr::Call(Func::Ln, a) => {
            if a.contains(&Symbol::X) {
                out.push((**a).clone());
            }
            collect_guards(a, out);
        }
        Expr::Sum(v) | Expr::Product(v) => v.iter().for_each(|c| collect_guards(c, out)),
        Expr::Neg(a) | Expr::Call(_, a) => collect_guards(a, out),
        Expr::Integral { integrand, .. } => collect_guards(integrand, out),
        Expr::Rational(_) | Expr::Float(_) | Expr::Sym(_) => {}
    }
}

#[cfg(test)]
mod tests {
    use super::super::parse;
    use super::*;

    #[test]
    fn reciprocal_gives_logarithm() {
        let f = antiderivative(&parse("alpha/x").unwrap(), 1.0).unwrap();
        assert!(f.is_closed_form());
        let b = Bindings::new().param("alpha", 1.5);
        for &x in &[0.5, 2.0, 7.0] {
            let v = f.eval(x, &b).unwrap();
            assert!((v - 1.5 * f64::ln(x)).abs() < 1e-14);
        }
    }

    #[test]
    fn zero_integrand() {
        let f = antiderivative(&Expr::zero(), 1.0).unwrap();
        assert_eq!(f.eval(5.0, &Bindings::new()).unwrap(), 0.0);
        assert_eq!(f.eval(-3.0, &Bindings::new()).unwrap(), 0.0);
    }

    #[test]
    fn legendre_coefficient_is_a_log_derivative() {
        let e = parse("-2*x/(1 - x^2)").unwrap();
        let f = antiderivative(&e, 0.0).unwrap();
        assert!(f.is_closed_form());
        let v = f.eval(0.5, &Bindings::new()).unwrap();
        // ln(1 - 0.25)
        assert!((v - (-0.287_682_072_451_780_9)).abs() < 1e-14);
        // independent quadrature route
        let q = f.quadrature().eval(0.5, &Bindings::new()).unwrap();
        assert!((q - v).abs() <= 1e-10 * v.abs());
    }

    #[test]
    fn closed_form_and_quadrature_agree_on_table_shapes() {
        let b = Bindings::new().param("a", 0.7);
        for src in [
            "3",
            "a/x",
            "x^2 - 3*x + 1",
            "2*x^(-3)",
            "a*x^(5/2)",
            "1/(2*x)",
        ] {
            let f = antiderivative(&parse(src).unwrap(), 1.0).unwrap();
            assert!(f.is_closed_form(), "{src}");
            for &x in &[0.6, 1.9, 4.3] {
                let c = f.eval(x, &b).unwrap();
                let q = f.quadrature().eval(x, &b).unwrap();
                assert!(
                    (c - q).abs() <= 1e-10 * c.abs().max(1e-300),
                    "{src} at {x}: {c} vs {q}"
                );
            }
        }
    }

    #[test]
    fn unrecognized_shapes_fall_back_to_quadrature() {
        let f = antiderivative(&parse("exp(-x^2)").unwrap(), 0.0).unwrap();
        assert!(!f.is_closed_form());
        let v = f.eval(1.0, &Bindings::new()).unwrap();
        assert!((v - 0.746_824_132_812_427).abs() < 1e-11);
    }

    #[test]
    fn poles_inside_the_interval_are_reported() {
        let f = antiderivative(&parse("1/x^2").unwrap(), -1.0).unwrap();
        assert!(matches!(
            f.eval(2.0, &Bindings::new()),
            Err(ExprError::IntegrandPole { .. })
        ));
        let f = antiderivative(&parse("-2*x/(1 - x^2)").unwrap(), 0.0).unwrap();
        assert!(matches!(
            f.eval(1.5, &Bindings::new()),
            Err(ExprError::IntegrandPole { .. })
        ));
    }

    #[test]
    fn exponentials_of_log_primitives_become_powers() {
        let p = closed_form_primitive(&parse("alpha/x").unwrap(), 0.5).unwrap();
        let e = exp_of_primitive(&p, &Expr::one());
        assert_eq!(e, parse("x^alpha").unwrap());
        let e = exp_of_primitive(&p, &Expr::int(-2));
        let b = Bindings::new().at(3.0).param("alpha", 1.5);
        assert!((e.eval(&b).unwrap() - 3f64.powf(-3.0)).abs() < 1e-15);
    }
}
