//! The Riccati construction and the nonstandard Lagrangian built on an
//! auxiliary solution `vbar`.

use super::el::{interior_points, ElForm};
use super::{envelope_ens, CheckOutcome, LagrangianError, LagrangianKind, LagrangianSpec, Result};
use crate::expr::{Bindings, Expr, Symbol};
use crate::ode::{integrate, ode_residual, OdeOperator, Trajectory};

/// `u' + u²/3 - u B/3 - (2B²/3 + 2B' - 3C)` at `x`, with `C` including `λ`.
pub fn riccati_residual(u: &Expr, o: &OdeOperator, x: f64) -> Result<f64> {
    let params = o.bindings().params;
    let u = u.bind_params(&params);
    let du = u.differentiate(&Symbol::X)?;
    let (b, c) = o.bound_coefficients();
    let db = b.partial(&Symbol::X);
    let at = Bindings::new().at(x);
    let (uv, duv) = (u.eval(&at)?, du.eval(&at)?);
    let (bv, dbv, cv) = (b.eval(&at)?, db.eval(&at)?, c.eval(&at)?);
    Ok(riccati_terms(uv, duv, bv, dbv, cv).0)
}

fn riccati_terms(u: f64, du: f64, b: f64, db: f64, c: f64) -> (f64, f64) {
    let terms = [
        du,
        u * u / 3.0,
        -u * b / 3.0,
        -2.0 * b * b / 3.0,
        -2.0 * db,
        3.0 * c,
    ];
    (
        terms.iter().sum(),
        1.0 + terms.iter().map(|t| t.abs()).sum::<f64>(),
    )
}

/// `u = 3 vbar'/vbar + k B` built on a numeric `vbar`; `k = 2` is the
/// transformation that solves the Riccati equation.
#[derive(Debug, Clone)]
pub struct RiccatiSolution {
    vbar: Trajectory,
    b: Expr,
    db: Expr,
    c: Expr,
    k: f64,
}

impl RiccatiSolution {
    pub fn vbar(&self) -> &Trajectory {
        &self.vbar
    }

    /// Same `vbar` with a different coefficient in front of `B`.
    pub fn with_b_coefficient(mut self, k: f64) -> Self {
        self.k = k;
        self
    }

    fn parts(&self, x: f64) -> Result<(f64, f64, f64, f64, f64)> {
        let (v, vp, vpp) = self.vbar.state(x)?;
        let at = Bindings::new().at(x);
        let (b, db, c) = (self.b.eval(&at)?, self.db.eval(&at)?, self.c.eval(&at)?);
        let q = vp / v;
        let u = 3.0 * q + self.k * b;
        let du = 3.0 * (vpp / v - q * q) + self.k * db;
        Ok((u, du, b, db, c))
    }

    pub fn u(&self, x: f64) -> Result<f64> {
        Ok(self.parts(x)?.0)
    }

    /// Residual and scale at `x`.
    pub fn residual(&self, x: f64) -> Result<(f64, f64)> {
        let (u, du, b, db, c) = self.parts(x)?;
        Ok(riccati_terms(u, du, b, db, c))
    }

    /// Worst absolute residual over interior points of `vbar`'s span.
    pub fn check(&self, points: usize, tol: f64) -> Result<CheckOutcome> {
        let (lo, hi) = self.vbar.span();
        let mut out = CheckOutcome::new(tol);
        for x in interior_points(lo, hi, points) {
            let (r, _) = self.residual(x)?;
            out.observe(r, 1.0, x, "u = 3 vbar'/vbar + 2B");
        }
        Ok(out)
    }
}

fn check_vbar(o: &OdeOperator, vbar: &Trajectory) -> Result<()> {
    let ys = vbar.y_nodes();
    for (i, &x) in vbar.grid().iter().enumerate() {
        if ys[i] == 0.0 || (i > 0 && ys[i].signum() != ys[i - 1].signum()) {
            return Err(LagrangianError::VbarZero { x });
        }
        let ypp = vbar.ypp_nodes()[i];
        let r = ode_residual(o, ys[i], vbar.yp_nodes()[i], ypp, x)?;
        if r.abs() > 1e-7 * (1.0 + ypp.abs()) {
            return Err(LagrangianError::VbarNotASolution { x, residual: r });
        }
    }
    Ok(())
}

/// `u = 3 vbar'/vbar + 2B` for a nonvanishing solution `vbar` of `o`.
pub fn riccati_solution(o: &OdeOperator, vbar: &Trajectory) -> Result<RiccatiSolution> {
    check_vbar(o, vbar)?;
    let (b, c) = o.bound_coefficients();
    Ok(RiccatiSolution {
        vbar: vbar.clone(),
        db: b.partial(&Symbol::X),
        b,
        c,
        k: 2.0,
    })
}

/// The solution with `vbar(lo) = 1`, `vbar'(lo) = 0`, cut short of its
/// first zero (keeping 80% of the distance to it).
pub fn default_vbar(o: &OdeOperator) -> Result<Trajectory> {
    let (lo, hi) = o.window();
    let t = integrate(o, lo, 1.0, 0.0, hi)?;
    let ys = t.y_nodes();
    match (1..ys.len()).find(|&i| ys[i] <= 0.0) {
        None => Ok(t),
        Some(i) => {
            let cut = lo + 0.8 * (t.grid()[i] - lo);
            Ok(t.restrict(lo, cut)?)
        }
    }
}

/// `L_ns = E_ns / ((y' vbar - y vbar') vbar²)` with `E_ns = exp(-2 int B)`.
pub fn nonstandard_lagrangian(o: &OdeOperator, vbar: &Trajectory) -> Result<LagrangianSpec> {
    check_vbar(o, vbar)?;
    let ens = envelope_ens(o)?;
    let w = Expr::sub(
        Expr::mul(Expr::yp(), Expr::vbar()),
        Expr::mul(Expr::y(), Expr::vbarp()),
    );
    let body = Expr::div(ens, Expr::mul(w, Expr::pow(Expr::vbar(), Expr::int(2))));
    Ok(LagrangianSpec {
        kind: LagrangianKind::Nonstandard,
        body,
        a1: 1.0,
        a2: 0.0,
        source: o.clone(),
        auxiliary: Some(vbar.clone()),
    })
}

/// EL residual of a nonstandard Lagrangian along a solution `y`, at
/// interior points of the common span.
pub fn nonstandard_check(
    spec: &LagrangianSpec,
    y: &Trajectory,
    points: usize,
    tol: f64,
) -> Result<CheckOutcome> {
    let aux = spec.auxiliary().ok_or(LagrangianError::MissingAuxiliary)?;
    let form = ElForm::new(spec)?;
    let (a, b) = aux.span();
    let (c, d) = y.span();
    let (lo, hi) = (a.max(c), b.min(d));
    let mut out = CheckOutcome::new(tol);
    for x in interior_points(lo, hi, points) {
        let (r, s) = form.residual_on(y, x)?;
        out.observe(r, s, x, "independent solution");
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::parse;
    use crate::lagrangian::euler_lagrange_residual;
    use crate::ode::builtin_registry;

    fn op(name: &str) -> OdeOperator {
        builtin_registry().get(name).unwrap().operator.clone()
    }

    #[test]
    fn analytic_witness() {
        let h = op("harmonic");
        let u = parse("3*cos(x)/sin(x)").unwrap();
        for x in [0.5, 1.0, 1.7, 2.5] {
            assert!(riccati_residual(&u, &h, x).unwrap().abs() < 1e-10);
        }
        let wrong = parse("cos(x)/sin(x)").unwrap();
        assert!(riccati_residual(&wrong, &h, 1.0).unwrap().abs() > 0.1);
        assert_eq!(
            riccati_residual(&Expr::zero(), &op("identity"), 0.3).unwrap(),
            0.0
        );
    }

    #[test]
    fn sign_of_the_b_term() {
        let o = op("regular-bessel").with_param_value("mu", 0.5).unwrap();
        let o = o.with_window(1.0, 3.0).unwrap();
        let t = integrate(&o, 1.0, 1f64.sin(), 1f64.cos() - 0.5 * 1f64.sin(), 3.0).unwrap();
        let s = riccati_solution(&o, &t).unwrap();
        assert!(s.check(32, 1e-6).unwrap().pass);
        let flipped = s.with_b_coefficient(-2.0);
        assert!(!flipped.check(32, 1e-6).unwrap().pass);
    }

    #[test]
    fn vbar_must_not_vanish() {
        let h = op("harmonic").with_window(0.0, 3.0).unwrap();
        let t = integrate(&h, 0.0, 0.0, 1.0, 3.0).unwrap();
        assert!(matches!(
            riccati_solution(&h, &t),
            Err(LagrangianError::VbarZero { .. })
        ));
        let d = default_vbar(&h).unwrap();
        let (_, hi) = d.span();
        assert!(hi < std::f64::consts::FRAC_PI_2);
        assert!(riccati_solution(&h, &d).is_ok());
    }

    #[test]
    fn harmonic_nonstandard() {
        let h = op("harmonic").with_window(0.1, 3.0).unwrap();
        let vbar = integrate(&h, 0.1, 0.1f64.sin(), 0.1f64.cos(), 3.0).unwrap();
        let l = nonstandard_lagrangian(&h, &vbar).unwrap();
        let y = integrate(&h, 0.1, 0.1f64.cos(), -0.1f64.sin(), 3.0).unwrap();
        assert!(nonstandard_check(&l, &y, 32, 1e-5).unwrap().pass);
        assert!(matches!(
            euler_lagrange_residual(&l, &vbar, 1.0),
            Err(LagrangianError::DegeneratePair { .. })
        ));
    }
}
