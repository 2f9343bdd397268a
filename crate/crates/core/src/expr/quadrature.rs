use super::{Bindings, Expr, ExprError, Result};
use std::collections::HashMap;
use std::sync::{Mutex, OnceLock};

/// Absolute tolerance per cached panel.
pub const PANEL_TOL: f64 = 1e-12;
const PANEL_WIDTH: f64 = 0.25;
const MAX_DEPTH: u32 = 48;

/// Adaptive Simpson quadrature of `f` over `[a, b]` (signed).
pub fn adaptive_simpson<F>(f: &F, a: f64, b: f64, tol: f64) -> Result<f64>
where
    F: Fn(f64) -> Result<f64>,
{
    if a == b {
        return Ok(0.0);
    }
    let pole = || ExprError::IntegrandPole {
        lo: a.min(b),
        hi: a.max(b),
    };
    let eval = |t: f64| -> Result<f64> {
        match f(t) {
            Ok(v) if v.is_finite() => Ok(v),
            _ => Err(pole()),
        }
    };
    let fa = eval(a)?;
    let fb = eval(b)?;
    let m = 0.5 * (a + b);
    let fm = eval(m)?;
    let whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    simpson_step(&eval, a, b, fa, fm, fb, whole, tol, MAX_DEPTH).map_err(|_| pole())
}

#[allow(clippy::too_many_arguments)]
fn simpson_step<F>(
    f: &F,
    a: f64,
    b: f64,
    fa: f64,
    fm: f64,
    fb: f64,
    whole: f64,
    tol: f64,
    depth: u32,
) -> Result<f64>
where
    F: Fn(f64) -> Result<f64>,
{
    let m = 0.5 * (a + b);
    let lm = 0.5 * (a + m);
    let rm = 0.5 * (m + b);
    let flm = f(lm)?;
    let frm = f(rm)?;
    let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
    let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
    let delta = left + right - whole;
    if delta.abs() <= 15.0 * tol {
        return Ok(left + right + delta / 15.0);
    }
    if depth == 0 {
        return Err(ExprError::IntegrandPole {
            lo: a.min(b),
            hi: a.max(b),
        });
    }
    Ok(
        simpson_step(f, a, m, fa, flm, fm, left, tol / 2.0, depth - 1)?
            + simpson_step(f, m, b, fm, frm, fb, right, tol / 2.0, depth - 1)?,
    )
}

#[derive(Hash, PartialEq, Eq)]
struct PanelKey {
    integrand: String,
    anchor: u64,
    params: Vec<(String, u64)>,
    index: i64,
}

fn panel_cache() -> &'static Mutex<HashMap<PanelKey, f64>> {
    static CACHE: OnceLock<Mutex<HashMap<PanelKey, f64>>> = OnceLock::new();
    CACHE.get_or_init(|| Mutex::new(HashMap::new()))
}

/// `int_anchor^x integrand`, assembled from fixed-width panels aligned to
/// the anchor. Each panel is a pure function of its key, so the memo table
/// never changes results: concurrent and serial callers see identical bits.
pub(crate) fn integral_from_anchor(
    integrand: &Expr,
    anchor: f64,
    x: f64,
    b: &Bindings,
) -> Result<f64> {
    let f = |t: f64| {
        let mut bt = b.clone();
        bt.x = Some(t);
        integrand.eval(&bt)
    };
    let span = x - anchor;
    let n = (span / PANEL_WIDTH).trunc() as i64;
    let text = integrand.to_string();
    let params: Vec<(String, u64)> = integrand
        .params()
        .into_iter()
        .map(|p| {
            let v = b.params.get(&p).copied().unwrap_or(f64::NAN);
            (p, v.to_bits())
        })
        .collect();
    if params.iter().any(|(_, v)| f64::from_bits(*v).is_nan()) {
        // Surface the unbound parameter through ordinary evaluation.
        f(anchor)?;
    }
    let mut total = 0.0;
    let range: Box<dyn Iterator<Item = i64>> = if n >= 0 {
        Box::new(0..n)
    } else {
        Box::new(n..0)
    };
    for k in range {
        let key = PanelKey {
            integrand: text.clone(),
            anchor: anchor.to_bits(),
            params: params.clone(),
            index: k,
        };
        let cached = panel_cache().lock().unwrap().get(&key).copied();
        let value = match cached {
            Some(v) => v,
            None => {
                let lo = anchor + k as f64 * PANEL_WIDTH;
                let v = adaptive_simpson(&f, lo, lo + PANEL_WIDTH, PANEL_TOL)?;
                panel_cache().lock().unwrap().insert(key, v);
                v
            }
        };
        if n >= 0 {
            total += value;
        } else {
            total -= value;
        }
    }
    let start = anchor + n as f64 * PANEL_WIDTH;
    total += adaptive_simpson(&f, start, x, PANEL_TOL)?;
    Ok(total)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn simpson_polynomial_exact() {
        let v = adaptive_simpson(&|t: f64| Ok(t * t * t), 0.0, 2.0, 1e-12).unwrap();
        assert!((v - 4.0).abs() < 1e-14);
        let v = adaptive_simpson(&|t: f64| Ok(t * t * t), 2.0, 0.0, 1e-12).unwrap();
        assert!((v + 4.0).abs() < 1e-14);
    }

    #[test]
    fn simpson_reports_pole() {
        let r = adaptive_simpson(&|t: f64| Ok(1.0 / t), -1.0, 1.0, 1e-12);
        assert!(matches!(r, Err(ExprError::IntegrandPole { .. })));
    }

    #[test]
    fn panels_in_both_directions() {
        let e = super::super::parse("cos(x)").unwrap();
        let b = Bindings::new();
        for &x in &[2.7, -1.9, 0.1, 0.0] {
            let v = integral_from_anchor(&e, 0.3, x, &b).unwrap();
            let exact = x.sin() - 0.3f64.sin();
            assert!((v - exact).abs() < 1e-11, "x={x}: {v} vs {exact}");
        }
    }
}
