//! Second canonical form, ladder operators and factorizability, plus the
//! Bessel-function oracle and the plane-wave checks.

mod bessel;
mod families;
mod ladder;
mod plane_wave;

pub use bessel::{bessel_j, bessel_j_derivative, bessel_self_check};
pub use families::{
    classify_factorization, classify_with_catalog, closure_identity, consistency_identity,
    FactorizationVerdict, FamilyCatalog, FamilyFile, FamilyTemplate, LadderPair,
};
pub use ladder::{
    apply_ladder, proportionality, LadderDirection, Proportionality, SampledFunction,
};
pub use plane_wave::{
    jacobi_anger_reconstruction, plane_wave_bessel_coefficients, plane_wave_irrep_check,
    PlaneWaveReport,
};

use crate::expr::{Bindings, Expr, ExprError, Symbol};
use crate::lagrangian::{interior_points, CheckOutcome};
use crate::ode::{OdeError, OdeOperator, Trajectory};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum FactorizationError {
    #[error(transparent)]
    Expr(#[from] ExprError),
    #[error(transparent)]
    Ode(#[from] OdeError),
    #[error("{0} out of range")]
    OutOfRange(String),
    #[error("grid too coarse near x = {x}: differentiation error estimate {estimate:e}")]
    GridTooCoarse { x: f64, estimate: f64 },
    #[error("samples must lie on a uniform grid with at least {0} points")]
    BadGrid(usize),
    #[error("trapezoid rule did not converge with {0} nodes")]
    QuadratureNotConverged(usize),
    #[error("family catalog: {0}")]
    Catalog(String),
}

pub type Result<T, E = FactorizationError> = std::result::Result<T, E>;

/// `z'' + (λ + r) z = 0` with `y = z · multiplier`.
#[derive(Debug, Clone, PartialEq)]
pub struct CanonicalForm {
    r: Expr,
    lambda: f64,
    multiplier: Expr,
    source: OdeOperator,
}

impl CanonicalForm {
    /// Builds a canonical form directly from `r` (`B = 0`, `C = r`).
    pub fn from_operator_r(o: &OdeOperator) -> Self {
        CanonicalForm {
            r: o.c().clone(),
            lambda: o.lambda(),
            multiplier: Expr::one(),
            source: o.clone(),
        }
    }

    pub fn r(&self) -> &Expr {
        &self.r
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    /// `exp(-½ int B)`.
    pub fn multiplier(&self) -> &Expr {
        &self.multiplier
    }

    pub fn source(&self) -> &OdeOperator {
        &self.source
    }

    /// Checks that `z = y / multiplier` solves `z'' + (λ + r) z = 0` at
    /// interior points of a solution `y` of the source equation. The
    /// derivatives of `z` come from the product rule applied to the
    /// multiplier, independently of how `r` was derived.
    pub fn transform_check(&self, y: &Trajectory, points: usize, tol: f64) -> Result<CheckOutcome> {
        let params = self.source.bindings().params;
        let m = self.multiplier.bind_params(&params);
        let dm = m.partial(&Symbol::X);
        let ddm = dm.partial(&Symbol::X);
        let r = self.r.bind_params(&params);
        let (lo, hi) = y.span();
        let mut out = CheckOutcome::new(tol);
        for x in interior_points(lo, hi, points) {
            let at = Bindings::new().at(x);
            let (mv, dmv, ddmv) = (m.eval(&at)?, dm.eval(&at)?, ddm.eval(&at)?);
            let n = 1.0 / mv;
            let dn = -dmv / (mv * mv);
            let ddn = (2.0 * dmv * dmv - mv * ddmv) / (mv * mv * mv);
            let (yv, ypv, yppv) = y.state(x)?;
            let z = yv * n;
            let zpp = yppv * n + 2.0 * ypv * dn + yv * ddn;
            let pot = (self.lambda + r.eval(&at)?) * z;
            out.observe(
                zpp + pot,
                1.0 + zpp.abs() + pot.abs(),
                x,
                "z = y / multiplier",
            );
        }
        Ok(out)
    }
}

/// `r = C - ½(B' + ½B²)`, λ passed through, multiplier `exp(-½ int B)`
/// anchored at the window's left end.
pub fn to_second_canonical(o: &OdeOperator) -> Result<CanonicalForm> {
    let b = o.b();
    let r = if b.is_zero() {
        o.c().clone()
    } else {
        let db = b.differentiate(&Symbol::X)?;
        Expr::sub(
            o.c().clone(),
            Expr::mul(
                Expr::half(),
                Expr::add(
                    db,
                    Expr::mul(Expr::half(), Expr::pow(b.clone(), Expr::int(2))),
                ),
            ),
        )
    };
    Ok(CanonicalForm {
        r,
        lambda: o.lambda(),
        multiplier: o.envelope(&Expr::ratio(-1, 2))?,
        source: o.clone(),
    })
}
