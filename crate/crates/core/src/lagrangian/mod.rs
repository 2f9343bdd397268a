//! Inverse variational problem: standard, null and nonstandard
//! Lagrangians, gauge functions and the checks that certify them.

mod el;
mod riccati;

pub use el::{
    el_identically_zero, euler_lagrange_residual, gauge_check, gauge_check_against,
    helmholtz_third_condition, helmholtz_third_condition_closed, interior_points, ElForm, Path,
    TestPath, TestPathSet, EL_NULL_TOL, GAUGE_TOL,
};
pub use riccati::{
    default_vbar, nonstandard_check, nonstandard_lagrangian, riccati_residual, riccati_solution,
    RiccatiSolution,
};

use crate::expr::{compare_on_domain, Comparison, Expr, ExprError, Symbol};
use crate::ode::{OdeError, OdeOperator, Trajectory};
use serde::Serialize;
use std::fmt;
use std::str::FromStr;
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum LagrangianError {
    #[error(transparent)]
    Expr(#[from] ExprError),
    #[error(transparent)]
    Ode(#[from] OdeError),
    #[error("{0} is not a valid kind here")]
    WrongKind(LagrangianKind),
    #[error("a1 must be positive, got {0}")]
    NonPositiveA1(f64),
    #[error("y and vbar are linearly dependent near x = {x}")]
    DegeneratePair { x: f64 },
    #[error("vbar vanishes near x = {x}")]
    VbarZero { x: f64 },
    #[error("vbar does not solve the equation: residual {residual} at x = {x}")]
    VbarNotASolution { x: f64, residual: f64 },
    #[error("nonstandard Lagrangian needs its auxiliary solution vbar")]
    MissingAuxiliary,
}

pub type Result<T, E = LagrangianError> = std::result::Result<T, E>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum LagrangianKind {
    Minimal,
    Middle,
    Maximal,
    NullMid,
    NullMax,
    Nonstandard,
}

impl LagrangianKind {
    pub const STANDARD: [LagrangianKind; 3] = [
        LagrangianKind::Minimal,
        LagrangianKind::Middle,
        LagrangianKind::Maximal,
    ];
    pub const NULL: [LagrangianKind; 2] = [LagrangianKind::NullMid, LagrangianKind::NullMax];

    pub fn as_str(self) -> &'static str {
        match self {
            LagrangianKind::Minimal => "minimal",
            LagrangianKind::Middle => "middle",
            LagrangianKind::Maximal => "maximal",
            LagrangianKind::NullMid => "null_mid",
            LagrangianKind::NullMax => "null_max",
            LagrangianKind::Nonstandard => "nonstandard",
        }
    }
}

impl fmt::Display for LagrangianKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for LagrangianKind {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        Ok(match s {
            "minimal" => LagrangianKind::Minimal,
            "middle" => LagrangianKind::Middle,
            "maximal" => LagrangianKind::Maximal,
            "null_mid" | "null-mid" => LagrangianKind::NullMid,
            "null_max" | "null-max" => LagrangianKind::NullMax,
            "nonstandard" => LagrangianKind::Nonstandard,
            other => return Err(format!("unknown Lagrangian kind `{other}`")),
        })
    }
}

/// A synthesized Lagrangian. The body is an expression in `x`, `y`, `y'`,
/// parameters and, for the nonstandard kind, `vbar`, `vbarp`.
#[derive(Debug, Clone, PartialEq)]
pub struct LagrangianSpec {
    kind: LagrangianKind,
    body: Expr,
    a1: f64,
    a2: f64,
    source: OdeOperator,
    auxiliary: Option<Trajectory>,
}

impl LagrangianSpec {
    pub fn kind(&self) -> LagrangianKind {
        self.kind
    }

    pub fn body(&self) -> &Expr {
        &self.body
    }

    pub fn a1(&self) -> f64 {
        self.a1
    }

    pub fn a2(&self) -> f64 {
        self.a2
    }

    pub fn source(&self) -> &OdeOperator {
        &self.source
    }

    pub fn auxiliary(&self) -> Option<&Trajectory> {
        self.auxiliary.as_ref()
    }

    /// The same spec with a different body; for planted-defect tests.
    pub fn with_body(mut self, body: Expr) -> Self {
        self.body = body;
        self
    }
}

/// `E_s = exp(int B)`.
pub fn envelope_es(o: &OdeOperator) -> Result<Expr> {
    Ok(o.envelope(&Expr::one())?)
}

/// `E_ns = exp(-2 int B)`.
pub fn envelope_ens(o: &OdeOperator) -> Result<Expr> {
    Ok(o.envelope(&Expr::int(-2))?)
}

fn half_const(a: f64) -> Expr {
    Expr::mul(Expr::float(a), Expr::half())
}

fn minimal_body(o: &OdeOperator, a1: f64, es: &Expr) -> Expr {
    let c = o.c_eff();
    Expr::product(vec![
        half_const(a1),
        Expr::sub(
            Expr::pow(Expr::yp(), Expr::int(2)),
            Expr::mul(c, Expr::pow(Expr::y(), Expr::int(2))),
        ),
        es.clone(),
    ])
}

fn null_mid_body(a2: f64) -> Expr {
    Expr::product(vec![half_const(a2), Expr::yp(), Expr::y()])
}

fn null_max_body(o: &OdeOperator, a1: f64, es: &Expr) -> Expr {
    let b = o.b();
    if b.is_zero() {
        return Expr::zero();
    }
    let db = b.partial(&Symbol::X);
    let inner = Expr::add(
        Expr::mul(b.clone(), Expr::yp()),
        Expr::product(vec![
            Expr::add(db, Expr::pow(b.clone(), Expr::int(2))),
            Expr::y(),
            Expr::half(),
        ]),
    );
    Expr::product(vec![half_const(a1), inner, Expr::y(), es.clone()])
}

fn check_a1(a1: f64) -> Result<()> {
    if a1 > 0.0 && a1.is_finite() {
        Ok(())
    } else {
        Err(LagrangianError::NonPositiveA1(a1))
    }
}

/// Minimal `(a1/2)[y'² - C y²] E_s`, middle `+ (a2/2) y' y`, maximal
/// `+ (a1/2)[B y' + (B' + B²) y/2] y E_s`. `C` includes `λ`.
pub fn standard_lagrangian(
    o: &OdeOperator,
    kind: LagrangianKind,
    a1: f64,
    a2: f64,
) -> Result<LagrangianSpec> {
    check_a1(a1)?;
    let es = envelope_es(o)?;
    let min = minimal_body(o, a1, &es);
    let body = match kind {
        LagrangianKind::Minimal => min,
        LagrangianKind::Middle => Expr::add(min, null_mid_body(a2)),
        LagrangianKind::Maximal => Expr::add(min, null_max_body(o, a1, &es)),
        other => return Err(LagrangianError::WrongKind(other)),
    };
    Ok(LagrangianSpec {
        kind,
        body,
        a1,
        a2,
        source: o.clone(),
        auxiliary: None,
    })
}

/// `null_mid = (a2/2) y' y`, `null_max = (a1/2)[B y' + (B' + B²) y/2] y E_s`.
pub fn null_lagrangian(
    o: &OdeOperator,
    kind: LagrangianKind,
    a1: f64,
    a2: f64,
) -> Result<LagrangianSpec> {
    check_a1(a1)?;
    let body = match kind {
        LagrangianKind::NullMid => null_mid_body(a2),
        LagrangianKind::NullMax => null_max_body(o, a1, &envelope_es(o)?),
        other => return Err(LagrangianError::WrongKind(other)),
    };
    Ok(LagrangianSpec {
        kind,
        body,
        a1,
        a2,
        source: o.clone(),
        auxiliary: None,
    })
}

/// Which difference of standard Lagrangians a gauge function generates.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum GaugeRole {
    MidMinusMin,
    MaxMinusMin,
    MaxMinusMid,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GaugeFunction {
    pub phi: Expr,
    pub role: GaugeRole,
    /// The null Lagrangian `dphi/dx` should reproduce.
    pub target: Expr,
    pub source: OdeOperator,
}

/// `Φ1 = a2 y²/4` for `null_mid`, `Φ2 = (a1/4) B E_s y²` for `null_max`.
pub fn gauge_function(spec: &LagrangianSpec) -> Result<GaugeFunction> {
    let o = &spec.source;
    let y2 = Expr::pow(Expr::y(), Expr::int(2));
    let (phi, role) = match spec.kind {
        LagrangianKind::NullMid => (
            Expr::product(vec![Expr::float(spec.a2), Expr::ratio(1, 4), y2]),
            GaugeRole::MidMinusMin,
        ),
        LagrangianKind::NullMax => {
            let phi = if o.b().is_zero() {
                Expr::zero()
            } else {
                Expr::product(vec![
                    Expr::float(spec.a1),
                    Expr::ratio(1, 4),
                    o.b().clone(),
                    envelope_es(o)?,
                    y2,
                ])
            };
            (phi, GaugeRole::MaxMinusMin)
        }
        other => return Err(LagrangianError::WrongKind(other)),
    };
    Ok(GaugeFunction {
        phi,
        role,
        target: spec.body.clone(),
        source: o.clone(),
    })
}

/// `Φ3 = Φ2 - Φ1`, generating `maximal - middle`.
pub fn gauge_max_minus_mid(o: &OdeOperator, a1: f64, a2: f64) -> Result<GaugeFunction> {
    let g1 = gauge_function(&null_lagrangian(o, LagrangianKind::NullMid, a1, a2)?)?;
    let g2 = gauge_function(&null_lagrangian(o, LagrangianKind::NullMax, a1, a2)?)?;
    Ok(GaugeFunction {
        phi: Expr::sub(g2.phi, g1.phi),
        role: GaugeRole::MaxMinusMid,
        target: Expr::sub(g2.target, g1.target),
        source: o.clone(),
    })
}

/// Coefficients of `L = ½[f1 y'² + f2 y' y + f3 y²]`.
pub fn quadratic_coefficients(body: &Expr) -> (Expr, Expr, Expr) {
    let lp = body.partial(&Symbol::Yp);
    let f1 = lp.partial(&Symbol::Yp);
    let f2 = Expr::mul(Expr::int(2), lp.partial(&Symbol::Y));
    let f3 = body.partial(&Symbol::Y).partial(&Symbol::Y);
    (f1, f2, f3)
}

/// The two constraints a standard Lagrangian must satisfy:
/// `f1' = B f1` and `f2'/2 - f3 = C f1`, each as a sampled comparison over
/// the operator's parameter ranges.
pub fn prop1_constraints(
    spec: &LagrangianSpec,
    trials: usize,
    seed: u64,
    tol: f64,
) -> Result<(Comparison, Comparison)> {
    let o = &spec.source;
    let (f1, f2, f3) = quadratic_coefficients(&spec.body);
    let sp = o.sample_space();
    let first = compare_on_domain(
        &f1.partial(&Symbol::X),
        &Expr::mul(o.b().clone(), f1.clone()),
        &sp,
        trials,
        seed,
        tol,
    )?;
    let second = compare_on_domain(
        &Expr::sub(Expr::mul(Expr::half(), f2.partial(&Symbol::X)), f3),
        &Expr::mul(o.c_eff(), f1),
        &sp,
        trials,
        seed,
        tol,
    )?;
    Ok((first, second))
}

/// Worst-case result of a battery of pointwise checks.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CheckOutcome {
    pub pass: bool,
    /// Raw residual at the worst point.
    pub worst: f64,
    /// Residual divided by its scale at the worst point; compared to
    /// `tolerance`.
    pub normalized: f64,
    pub tolerance: f64,
    pub witness_x: f64,
    pub witness: String,
}

impl CheckOutcome {
    pub fn new(tolerance: f64) -> Self {
        CheckOutcome {
            pass: true,
            worst: 0.0,
            normalized: 0.0,
            tolerance,
            witness_x: f64::NAN,
            witness: String::new(),
        }
    }

    /// Folds one observation in; ties keep the earlier point.
    pub fn observe(&mut self, residual: f64, scale: f64, x: f64, label: &str) {
        let n = residual.abs() / scale;
        let n = if n.is_nan() { f64::INFINITY } else { n };
        if self.witness.is_empty() || n > self.normalized {
            self.normalized = n;
            self.worst = residual;
            self.witness_x = x;
            self.witness = label.to_string();
        }
        self.pass = self.normalized <= self.tolerance;
    }

    pub fn from_comparison(c: &Comparison) -> Self {
        CheckOutcome {
            pass: c.pass,
            worst: c.lhs - c.rhs,
            normalized: c.worst,
            tolerance: c.tolerance,
            witness_x: c.witness_x,
            witness: format!("lhs = {:e}, rhs = {:e}", c.lhs, c.rhs),
        }
    }

    /// Combined outcome: worst of both, passing only if both pass.
    pub fn merge(mut self, other: CheckOutcome) -> Self {
        let pass = self.pass && other.pass;
        if other.normalized > self.normalized || self.witness.is_empty() {
            self = other;
        }
        self.pass = pass;
        self
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::{equivalent_on_domain, parse};
    use crate::ode::builtin_registry;

    fn op(name: &str) -> OdeOperator {
        builtin_registry().get(name).unwrap().operator.clone()
    }

    #[test]
    fn envelopes() {
        let gb = op("general-bessel");
        let es = envelope_es(&gb).unwrap();
        let sp = gb.sample_space();
        assert!(equivalent_on_domain(&es, &parse("x^alpha").unwrap(), &sp, 64, 1).unwrap());
        let ens = envelope_ens(&gb).unwrap();
        assert!(equivalent_on_domain(&ens, &parse("x^(-2*alpha)").unwrap(), &sp, 64, 1).unwrap());
        assert_eq!(envelope_es(&op("harmonic")).unwrap(), Expr::one());
        let leg = op("regular-legendre");
        let es = envelope_es(&leg).unwrap();
        assert!(
            equivalent_on_domain(&es, &parse("1 - x^2").unwrap(), &leg.sample_space(), 64, 1)
                .unwrap()
        );
    }

    #[test]
    fn general_bessel_bodies() {
        let gb = op("general-bessel");
        let sp = gb.sample_space();
        let min = standard_lagrangian(&gb, LagrangianKind::Minimal, 1.0, 1.0).unwrap();
        let expected = parse("1/2*(yp^2 - (beta - mu^2/x^2)*y^2)*x^alpha").unwrap();
        assert!(equivalent_on_domain(min.body(), &expected, &sp, 64, 2).unwrap());
        let max = standard_lagrangian(&gb, LagrangianKind::Maximal, 1.0, 1.0).unwrap();
        let expected = Expr::add(
            expected,
            parse("alpha/(2*x)*(yp + (alpha - 1)/(2*x)*y)*x^alpha*y").unwrap(),
        );
        assert!(equivalent_on_domain(max.body(), &expected, &sp, 64, 2).unwrap());
    }

    #[test]
    fn identity_bodies_collapse() {
        let id = op("identity");
        for kind in LagrangianKind::STANDARD {
            let l = standard_lagrangian(&id, kind, 1.0, 0.0).unwrap();
            assert!(equivalent_on_domain(
                l.body(),
                &parse("yp^2/2").unwrap(),
                &id.sample_space(),
                16,
                0
            )
            .unwrap());
        }
        let nm = null_lagrangian(&id, LagrangianKind::NullMax, 1.0, 1.0).unwrap();
        assert!(nm.body().is_zero());
    }

    #[test]
    fn gauge_functions() {
        let gb = op("general-bessel");
        let g = gauge_function(&null_lagrangian(&gb, LagrangianKind::NullMid, 1.0, 1.0).unwrap())
            .unwrap();
        assert!(
            equivalent_on_domain(&g.phi, &parse("y^2/4").unwrap(), &gb.sample_space(), 16, 0)
                .unwrap()
        );
        let g = gauge_function(&null_lagrangian(&gb, LagrangianKind::NullMax, 1.0, 1.0).unwrap())
            .unwrap();
        let expected = parse("alpha/4*x^(alpha - 1)*y^2").unwrap();
        assert!(equivalent_on_domain(&g.phi, &expected, &gb.sample_space(), 64, 5).unwrap());
        let g = gauge_function(
            &null_lagrangian(&op("harmonic"), LagrangianKind::NullMax, 1.0, 1.0).unwrap(),
        )
        .unwrap();
        assert!(g.phi.is_zero());
    }

    #[test]
    fn kinds_are_checked() {
        let h = op("harmonic");
        assert!(matches!(
            standard_lagrangian(&h, LagrangianKind::NullMid, 1.0, 1.0),
            Err(LagrangianError::WrongKind(_))
        ));
        assert!(matches!(
            null_lagrangian(&h, LagrangianKind::Minimal, 1.0, 1.0),
            Err(LagrangianError::WrongKind(_))
        ));
        assert!(matches!(
            standard_lagrangian(&h, LagrangianKind::Minimal, 0.0, 1.0),
            Err(LagrangianError::NonPositiveA1(_))
        ));
        assert_eq!(
            "null-max".parse::<LagrangianKind>().unwrap(),
            LagrangianKind::NullMax
        );
    }

    #[test]
    fn constraints_hold_for_every_builtin() {
        for e in builtin_registry().entries() {
            for kind in LagrangianKind::STANDARD {
                let l = standard_lagrangian(&e.operator, kind, 1.3, 0.7).unwrap();
                let (c1, c2) = prop1_constraints(&l, 48, 9, 1e-9).unwrap();
                assert!(c1.pass && c2.pass, "{} {kind}: {c1:?} {c2:?}", e.name);
            }
        }
    }
}
