use super::{Expr, ExprError, Func, Result, Symbol};

impl Expr {
    /// Partial derivative treating `x`, the dependent slots and every
    /// parameter as independent variables.
    pub fn partial(&self, wrt: &Symbol) -> Expr {
        if !self.contains(wrt) {
            return Expr::zero();
        }
        match self {
            Expr::Rational(_) | Expr::Float(_) => Expr::zero(),
            Expr::Sym(s) => {
                if s == wrt {
                    Expr::one()
                } else {
                    Expr::zero()
                }
            }
            Expr::Sum(terms) => Expr::sum(terms.iter().map(|t| t.partial(wrt)).collect()),
            Expr::Product(factors) => {
                let mut terms = Vec::new();
                for (i, f) in factors.iter().enumerate() {
                    let d = f.partial(wrt);
                    if d.is_zero() {
                        continue;
                    }
                    let mut parts: Vec<Expr> = Vec::with_capacity(factors.len());
                    for (j, g) in factors.iter().enumerate() {
                        parts.push(if i == j { d.clone() } else { g.clone() });
                    }
                    terms.push(Expr::product(parts));
                }
                Expr::sum(terms)
            }
            Expr::Neg(a) => Expr::neg(a.partial(wrt)),
            Expr::Quotient(n, d) => {
                let dn = n.partial(wrt);
                let dd = d.partial(wrt);
                if dd.is_zero() {
                    return Expr::div(dn, (**d).clone());
                }
                Expr::div(
                    Expr::sub(Expr::mul(dn, (**d).clone()), Expr::mul((**n).clone(), dd)),
                    Expr::pow((**d).clone(), Expr::int(2)),
                )
            }
            Expr::Pow(base, exponent) => {
                let db = base.partial(wrt);
                let de = exponent.partial(wrt);
                let (u, v) = ((**base).clone(), (**exponent).clone());
                if de.is_zero() {
                    // v u^(v-1) u'
                    Expr::product(vec![v.clone(), Expr::pow(u, Expr::sub(v, Expr::one())), db])
                } else if db.is_zero() {
                    // u^v ln(u) v'
                    Expr::product(vec![self.clone(), Expr::ln(u), de])
                } else {
                    Expr::mul(
                        self.clone(),
                        Expr::add(
                            Expr::mul(de, Expr::ln(u.clone())),
                            Expr::div(Expr::mul(v, db), u),
                        ),
                    )
                }
            }
            Expr::Call(func, a) => {
                let da = a.partial(wrt);
                let a = (**a).clone();
                let outer = match func {
                    Func::Exp => self.clone(),
                    Func::Ln => return Expr::div(da, a),
                    Func::Sin => Expr::cos(a),
                    Func::Cos => Expr::neg(Expr::sin(a)),
                };
                Expr::mul(outer, da)
            }
            Expr::Integral { integrand, anchor } => match wrt {
                Symbol::X => (**integrand).clone(),
                Symbol::Param(_) => Expr::integral(integrand.partial(wrt), *anchor)
                    .expect("integrand stays free of dependent symbols"),
                _ => Expr::zero(),
            },
        }
    }

    /// Symbolic derivative. With respect to `x` this is the ordinary
    /// derivative and is rejected when the expression contains path slots
    /// (`y`, `y'`, ...), whose total derivative needs a path.
    pub fn differentiate(&self, wrt: &Symbol) -> Result<Expr> {
        if *wrt == Symbol::X {
            if let Some(s) = self.symbols().into_iter().find(Symbol::is_dependent) {
                return Err(ExprError::TotalDerivative(s.name().to_string()));
            }
        }
        Ok(self.partial(wrt))
    }
}
