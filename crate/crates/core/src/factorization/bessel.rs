//! Bessel functions of the first kind by their power series.

use super::{FactorizationError, Result};

const X_MAX: f64 = 12.0;
const MU_MAX: f64 = 5.0;
/// Relative size below which the series is cut, once terms are shrinking.
const TRUNCATION: f64 = 1e-17;

fn check(mu: f64, x: f64) -> Result<()> {
    if !(0.0..=X_MAX).contains(&x) {
        return Err(FactorizationError::OutOfRange(format!("x = {x}")));
    }
    // Integer orders are also needed up to 12 by the plane-wave expansion.
    let integer_ok = mu.fract() == 0.0 && mu.abs() <= 12.0;
    if !(mu.abs() <= MU_MAX || integer_ok) {
        return Err(FactorizationError::OutOfRange(format!("mu = {mu}")));
    }
    Ok(())
}

pub(crate) fn series(mu: f64, x: f64) -> f64 {
    let h = 0.5 * x;
    let h2 = h * h;
    let mut term = h.powf(mu) / libm::tgamma(mu + 1.0);
    let mut sum = term;
    let mut peak = term.abs();
    for k in 0..200 {
        let k = k as f64;
        let next = term * (-h2) / ((k + 1.0) * (k + 1.0 + mu));
        sum += next;
        peak = peak.max(next.abs());
        let shrinking = next.abs() < term.abs();
        term = next;
        if shrinking && term.abs() <= TRUNCATION * peak.max(1e-300) {
            break;
        }
    }
    sum
}

/// `J_mu(x)` for `x ∈ [0, 12]`, `mu ∈ [-5, 5]`. At `x = 0` the limit is
/// returned; negative integer orders use `J_{-n} = (-1)^n J_n`.
pub fn bessel_j(mu: f64, x: f64) -> Result<f64> {
    check(mu, x)?;
    if mu < 0.0 && mu.fract() == 0.0 {
        let n = -mu;
        let sign = if n % 2.0 == 0.0 { 1.0 } else { -1.0 };
        return Ok(sign * bessel_j(n, x)?);
    }
    if x == 0.0 {
        return Ok(if mu == 0.0 {
            1.0
        } else if mu > 0.0 {
            0.0
        } else {
            f64::INFINITY
        });
    }
    Ok(series(mu, x))
}

/// `J_mu'(x) = (J_{mu-1}(x) - J_{mu+1}(x)) / 2`.
pub fn bessel_j_derivative(mu: f64, x: f64) -> Result<f64> {
    check(mu, x)?;
    Ok(0.5 * (order(mu - 1.0, x)? - order(mu + 1.0, x)?))
}

fn second_derivative(mu: f64, x: f64) -> Result<f64> {
    Ok(0.25 * (order(mu - 2.0, x)? - 2.0 * bessel_j(mu, x)? + order(mu + 2.0, x)?))
}

/// Neighbouring orders may fall just outside `[-5, 5]`; the series itself
/// has no such limit.
fn order(mu: f64, x: f64) -> Result<f64> {
    if mu.abs() <= MU_MAX {
        bessel_j(mu, x)
    } else if mu < 0.0 && mu.fract() == 0.0 {
        let sign = if (-mu) % 2.0 == 0.0 { 1.0 } else { -1.0 };
        Ok(sign * series(-mu, x))
    } else {
        Ok(series(mu, x))
    }
}

/// Residual of `x² J'' + x J' + (x² - mu²) J = 0` divided by `x²`, i.e.
/// the regular Bessel operator with `B = 1/x`, `C = 1 - mu²/x²`.
pub fn bessel_self_check(mu: f64, x: f64) -> Result<f64> {
    check(mu, x)?;
    if x == 0.0 {
        return Err(FactorizationError::OutOfRange("x = 0".into()));
    }
    let j = bessel_j(mu, x)?;
    let jp = bessel_j_derivative(mu, x)?;
    let jpp = second_derivative(mu, x)?;
    Ok(jpp + jp / x + (1.0 - mu * mu / (x * x)) * j)
}
