//! Dormand-Prince 5(4) integration of `y'' = -B y' - (C + λ) y` with cubic
//! Hermite interpolation between accepted steps.

use super::{OdeError, OdeOperator, Result};
use crate::expr::{Bindings, Expr};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IntegrateOptions {
    pub rtol: f64,
    pub atol: f64,
    /// Upper bound on the step; keeps the Hermite interpolant accurate.
    pub max_step: f64,
    pub max_steps: usize,
}

impl Default for IntegrateOptions {
    fn default() -> Self {
        IntegrateOptions {
            rtol: 1e-10,
            atol: 1e-10,
            max_step: 1.0 / 128.0,
            max_steps: 2_000_000,
        }
    }
}

/// A numerically integrated solution on an ascending grid.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    grid: Vec<f64>,
    y: Vec<f64>,
    yp: Vec<f64>,
    /// `y''` as computed by the integrator at each node.
    ypp: Vec<f64>,
    operator: OdeOperator,
    initial: (f64, f64, f64),
    b: Expr,
    c: Expr,
}

impl Trajectory {
    pub fn grid(&self) -> &[f64] {
        &self.grid
    }

    pub fn y_nodes(&self) -> &[f64] {
        &self.y
    }

    pub fn yp_nodes(&self) -> &[f64] {
        &self.yp
    }

    pub fn ypp_nodes(&self) -> &[f64] {
        &self.ypp
    }

    pub fn operator(&self) -> &OdeOperator {
        &self.operator
    }

    /// `(x0, y0, y0')`.
    pub fn initial(&self) -> (f64, f64, f64) {
        self.initial
    }

    pub fn span(&self) -> (f64, f64) {
        (self.grid[0], *self.grid.last().unwrap())
    }

    fn locate(&self, x: f64) -> Result<usize> {
        let (lo, hi) = self.span();
        if !(x >= lo && x <= hi) {
            return Err(OdeError::OutsideWindow { x, lo, hi });
        }
        let i = self.grid.partition_point(|&g| g <= x);
        Ok(i.saturating_sub(1).min(self.grid.len().saturating_sub(2)))
    }

    fn hermite(&self, i: usize, x: f64, f: &[f64], df: &[f64]) -> f64 {
        if self.grid.len() == 1 {
            return f[0];
        }
        let (x0, x1) = (self.grid[i], self.grid[i + 1]);
        let h = x1 - x0;
        let t = (x - x0) / h;
        let t2 = t * t;
        let t3 = t2 * t;
        let h00 = 2.0 * t3 - 3.0 * t2 + 1.0;
        let h10 = t3 - 2.0 * t2 + t;
        let h01 = -2.0 * t3 + 3.0 * t2;
        let h11 = t3 - t2;
        h00 * f[i] + h10 * h * df[i] + h01 * f[i + 1] + h11 * h * df[i + 1]
    }

    pub fn y(&self, x: f64) -> Result<f64> {
        let i = self.locate(x)?;
        Ok(self.hermite(i, x, &self.y, &self.yp))
    }

    pub fn yp(&self, x: f64) -> Result<f64> {
        let i = self.locate(x)?;
        Ok(self.hermite(i, x, &self.yp, &self.ypp))
    }

    /// `-B y' - C y - λ y` from the interpolated `y`, `y'`.
    pub fn ypp(&self, x: f64) -> Result<f64> {
        let (y, yp) = (self.y(x)?, self.yp(x)?);
        self.reconstruct_ypp(x, y, yp)
    }

    pub fn reconstruct_ypp(&self, x: f64, y: f64, yp: f64) -> Result<f64> {
        let at = Bindings::new().at(x);
        Ok(-self.b.eval(&at)? * yp - self.c.eval(&at)? * y)
    }

    /// The nodes lying in `[lo, hi]`.
    pub fn restrict(&self, lo: f64, hi: f64) -> Result<Trajectory> {
        let keep: Vec<usize> = (0..self.grid.len())
            .filter(|&i| self.grid[i] >= lo && self.grid[i] <= hi)
            .collect();
        if keep.len() < 2 {
            let (a, b) = self.span();
            return Err(OdeError::OutsideWindow {
                x: lo,
                lo: a,
                hi: b,
            });
        }
        let pick = |v: &[f64]| keep.iter().map(|&i| v[i]).collect::<Vec<f64>>();
        Ok(Trajectory {
            grid: pick(&self.grid),
            y: pick(&self.y),
            yp: pick(&self.yp),
            ypp: pick(&self.ypp),
            ..self.clone()
        })
    }

    /// `(y, y', y'')` at `x`.
    pub fn state(&self, x: f64) -> Result<(f64, f64, f64)> {
        let (y, yp) = (self.y(x)?, self.yp(x)?);
        Ok((y, yp, self.reconstruct_ypp(x, y, yp)?))
    }
}

pub fn integrate(o: &OdeOperator, x0: f64, y0: f64, yp0: f64, x_end: f64) -> Result<Trajectory> {
    integrate_with(o, x0, y0, yp0, x_end, &IntegrateOptions::default())
}

const C2: f64 = 1.0 / 5.0;
const C3: f64 = 3.0 / 10.0;
const C4: f64 = 4.0 / 5.0;
const C5: f64 = 8.0 / 9.0;
const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const B1: f64 = 35.0 / 384.0;
const B3: f64 = 500.0 / 1113.0;
const B4: f64 = 125.0 / 192.0;
const B5: f64 = -2187.0 / 6784.0;
const B6: f64 = 11.0 / 84.0;
const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;

type State = [f64; 2];

fn axpy(s: &State, h: f64, terms: &[(f64, &State)]) -> State {
    let mut out = *s;
    for (c, k) in terms {
        out[0] += h * c * k[0];
        out[1] += h * c * k[1];
    }
    out
}

/// Adaptive integration from `x0` to `x_end` (either direction). Errors
/// with the last accepted `x` when the step size collapses, which is what
/// happens on approach to a singular point of the coefficients.
pub fn integrate_with(
    o: &OdeOperator,
    x0: f64,
    y0: f64,
    yp0: f64,
    x_end: f64,
    opts: &IntegrateOptions,
) -> Result<Trajectory> {
    o.check_x(x0)?;
    o.check_x(x_end)?;
    let (b, c) = o.bound_coefficients();
    let rhs = |x: f64, s: &State| -> Result<State> {
        let at = Bindings::new().at(x);
        Ok([s[1], -b.eval(&at)? * s[1] - c.eval(&at)? * s[0]])
    };
    let mut xs = vec![x0];
    let mut ys = vec![y0];
    let mut yps = vec![yp0];
    let mut k1 = rhs(x0, &[y0, yp0])?;
    let mut ypps = vec![k1[1]];

    let span = x_end - x0;
    let dir = span.signum();
    let mut x = x0;
    let mut s: State = [y0, yp0];
    let mut h = dir * (0.1 * opts.max_step).min(span.abs());
    let mut steps = 0usize;
    while (x_end - x) * dir > 0.0 {
        steps += 1;
        if steps > opts.max_steps {
            return Err(OdeError::StepUnderflow { last_x: x });
        }
        let remaining = x_end - x;
        let last = h.abs() >= remaining.abs();
        if last {
            h = remaining;
        }
        let hmin = 1e-14 * x.abs().max(1.0);
        if h.abs() < hmin {
            return Err(OdeError::StepUnderflow { last_x: x });
        }
        let trial = (|| -> Result<(State, State, f64)> {
            let k2 = rhs(x + C2 * h, &axpy(&s, h, &[(A21, &k1)]))?;
            let k3 = rhs(x + C3 * h, &axpy(&s, h, &[(A31, &k1), (A32, &k2)]))?;
            let k4 = rhs(
                x + C4 * h,
                &axpy(&s, h, &[(A41, &k1), (A42, &k2), (A43, &k3)]),
            )?;
            let k5 = rhs(
                x + C5 * h,
                &axpy(&s, h, &[(A51, &k1), (A52, &k2), (A53, &k3), (A54, &k4)]),
            )?;
            let k6 = rhs(
                x + h,
                &axpy(
                    &s,
                    h,
                    &[(A61, &k1), (A62, &k2), (A63, &k3), (A64, &k4), (A65, &k5)],
                ),
            )?;
            let next = axpy(
                &s,
                h,
                &[(B1, &k1), (B3, &k3), (B4, &k4), (B5, &k5), (B6, &k6)],
            );
            let xn = if last { x_end } else { x + h };
            let k7 = rhs(xn, &next)?;
            if !(next.iter().chain(k7.iter()).all(|v| v.is_finite())) {
                return Ok((next, k7, f64::INFINITY));
            }
            let mut err: f64 = 0.0;
            for i in 0..2 {
                let e = h
                    * (E1 * k1[i] + E3 * k3[i] + E4 * k4[i] + E5 * k5[i] + E6 * k6[i] + E7 * k7[i]);
                let sc = opts.atol + opts.rtol * s[i].abs().max(next[i].abs());
                err = err.max((e / sc).abs());
            }
            Ok((next, k7, err))
        })();
        match trial {
            Ok((next, k7, err)) if err <= 1.0 && err.is_finite() => {
                x = if last { x_end } else { x + h };
                s = next;
                k1 = k7;
                xs.push(x);
                ys.push(s[0]);
                yps.push(s[1]);
                ypps.push(k1[1]);
                let grow = if err == 0.0 {
                    5.0
                } else {
                    (0.9 * err.powf(-0.2)).clamp(0.2, 5.0)
                };
                h = dir * (h.abs() * grow).min(opts.max_step);
            }
            Ok((_, _, err)) if err.is_finite() => {
                h *= (0.9 * err.powf(-0.2)).clamp(0.1, 0.9);
            }
            _ => h *= 0.2,
        }
    }
    if dir < 0.0 {
        xs.reverse();
        ys.reverse();
        yps.reverse();
        ypps.reverse();
    }
    Ok(Trajectory {
        grid: xs,
        y: ys,
        yp: yps,
        ypp: ypps,
        operator: o.clone(),
        initial: (x0, y0, yp0),
        b,
        c,
    })
}
