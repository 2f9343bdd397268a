//! Plane waves `exp(i k·r)` as translation eigenfunctions, and their
//! expansion in Bessel functions.

use super::{bessel_j, FactorizationError, Result};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use std::f64::consts::PI;

const POINTS: usize = 64;
const TRANSLATION_TOL: f64 = 1e-12;
const EIGEN_TOL: f64 = 1e-10;
const STEP: f64 = 1e-3;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PlaneWaveReport {
    pub k: (f64, f64),
    pub a: (f64, f64),
    pub points: usize,
    /// Worst `|phi(r + a) - e^{ik·a} phi(r)|`.
    pub translation_residual: f64,
    pub translation_pass: bool,
    /// Worst `|grad phi - i k phi|` per component, numeric gradient.
    pub eigen_residual: f64,
    pub eigen_pass: bool,
    /// The same with `-i k`, to show which sign holds.
    pub opposite_sign_residual: f64,
    pub convention: &'static str,
}

impl PlaneWaveReport {
    pub fn pass(&self) -> bool {
        self.translation_pass && self.eigen_pass
    }
}

type C = (f64, f64);

fn cmul(a: C, b: C) -> C {
    (a.0 * b.0 - a.1 * b.1, a.0 * b.1 + a.1 * b.0)
}

fn cabs(a: C) -> f64 {
    a.0.hypot(a.1)
}

fn phi(k: C, r: C) -> C {
    let t = k.0 * r.0 + k.1 * r.1;
    (t.cos(), t.sin())
}

/// Checks `phi(r + a) = e^{ik·a} phi(r)` and `grad phi = i k phi` at 64
/// seeded points of `[-5, 5]²`. The gradient is differenced numerically
/// (Richardson-extrapolated centered differences).
pub fn plane_wave_irrep_check(k: (f64, f64), a: (f64, f64)) -> PlaneWaveReport {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let phase = phi(k, a);
    let mut trans: f64 = 0.0;
    let mut eigen: f64 = 0.0;
    let mut opposite: f64 = 0.0;
    for _ in 0..POINTS {
        let r = (rng.gen_range(-5.0..5.0), rng.gen_range(-5.0..5.0));
        let p = phi(k, r);
        let shifted = phi(k, (r.0 + a.0, r.1 + a.1));
        let expect = cmul(phase, p);
        trans = trans.max(cabs((shifted.0 - expect.0, shifted.1 - expect.1)));

        for axis in 0..2 {
            let at = |h: f64| {
                let q = if axis == 0 {
                    (r.0 + h, r.1)
                } else {
                    (r.0, r.1 + h)
                };
                phi(k, q)
            };
            let d = |h: f64| {
                let (p, m) = (at(h), at(-h));
                ((p.0 - m.0) / (2.0 * h), (p.1 - m.1) / (2.0 * h))
            };
            let (d1, d2) = (d(STEP), d(2.0 * STEP));
            let grad = ((4.0 * d1.0 - d2.0) / 3.0, (4.0 * d1.1 - d2.1) / 3.0);
            let kc = if axis == 0 { k.0 } else { k.1 };
            let ikp = cmul((0.0, kc), p);
            eigen = eigen.max(cabs((grad.0 - ikp.0, grad.1 - ikp.1)));
            opposite = opposite.max(cabs((grad.0 + ikp.0, grad.1 + ikp.1)));
        }
    }
    PlaneWaveReport {
        k,
        a,
        points: POINTS,
        translation_residual: trans,
        translation_pass: trans <= TRANSLATION_TOL,
        eigen_residual: eigen,
        eigen_pass: eigen <= EIGEN_TOL,
        opposite_sign_residual: opposite,
        convention: "grad phi = i k phi",
    }
}

/// `c_n = (1/2π) ∮ e^{i x sinθ} e^{-inθ} dθ` for `n = 0..=n_max` by the
/// trapezoid rule, doubling the node count until the coefficients settle.
pub fn plane_wave_bessel_coefficients(x: f64, n_max: usize) -> Result<Vec<f64>> {
    if !(0.0..=12.0).contains(&x) {
        return Err(FactorizationError::OutOfRange(format!("x = {x}")));
    }
    if n_max > 12 {
        return Err(FactorizationError::OutOfRange(format!("n_max = {n_max}")));
    }
    let trapezoid = |nodes: usize| -> Vec<f64> {
        (0..=n_max)
            .map(|n| {
                let s: f64 = (0..nodes)
                    .map(|j| {
                        let th = 2.0 * PI * j as f64 / nodes as f64;
                        (x * th.sin() - n as f64 * th).cos()
                    })
                    .sum();
                s / nodes as f64
            })
            .collect()
    };
    let mut nodes = 16;
    let mut prev = trapezoid(nodes);
    while nodes < 4096 {
        nodes *= 2;
        let next = trapezoid(nodes);
        let change = prev
            .iter()
            .zip(&next)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        prev = next;
        if change <= 1e-13 {
            return Ok(prev);
        }
    }
    Err(FactorizationError::QuadratureNotConverged(nodes))
}

/// Worst `|Σ_{n=-N}^{N} c_n e^{inθ} - e^{i x sinθ}|` over `samples` angles,
/// with `c_{-n} = (-1)^n c_n` and `c_n = J_n(x)`.
pub fn jacobi_anger_reconstruction(x: f64, n: usize, samples: usize) -> Result<f64> {
    let c = (0..=n)
        .map(|k| bessel_j(k as f64, x))
        .collect::<Result<Vec<_>>>()?;
    let mut worst: f64 = 0.0;
    for s in 0..samples {
        let th = 2.0 * PI * s as f64 / samples as f64;
        let mut sum = (c[0], 0.0);
        for (k, ck) in c.iter().enumerate().skip(1) {
            let kt = k as f64 * th;
            let neg = if k % 2 == 0 { *ck } else { -*ck };
            sum.0 += ck * kt.cos() + neg * kt.cos();
            sum.1 += ck * kt.sin() - neg * kt.sin();
        }
        let exact = ((x * th.sin()).cos(), (x * th.sin()).sin());
        worst = worst.max(cabs((sum.0 - exact.0, sum.1 - exact.1)));
    }
    Ok(worst)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::factorization::bessel::series;

    #[test]
    fn half_period() {
        let r = plane_wave_irrep_check((1.0, 0.0), (PI, 0.0));
        assert!(r.pass());
        let p = phi((1.0, 0.0), (0.3, 0.0));
        let q = phi((1.0, 0.0), (0.3 + PI, 0.0));
        assert!((p.0 + q.0).abs() < 1e-15 && (p.1 + q.1).abs() < 1e-15);
    }

    #[test]
    fn generic_wave_vector() {
        let r = plane_wave_irrep_check((2.0, 1.0), (0.3, -0.2));
        assert!(
            r.translation_residual <= 1e-12 && r.eigen_residual <= 1e-10,
            "{r:?}"
        );
        assert!(r.opposite_sign_residual > 1.0);
    }

    #[test]
    fn zero_wave_vector() {
        let r = plane_wave_irrep_check((0.0, 0.0), (1.0, 2.0));
        assert!(r.pass());
        assert_eq!(r.eigen_residual, 0.0);
    }

    #[test]
    fn coefficients_are_bessel_values() {
        let c = plane_wave_bessel_coefficients(1.0, 12).unwrap();
        assert!((c[0] - 0.7651976866).abs() < 1e-10);
        for (n, cn) in c.iter().enumerate() {
            assert!((cn - bessel_j(n as f64, 1.0).unwrap()).abs() < 1e-8);
        }
        let c = plane_wave_bessel_coefficients(1e-9, 3).unwrap();
        assert!((c[0] - 1.0).abs() < 1e-12 && c[1..].iter().all(|v| v.abs() < 1e-8));
        assert!(plane_wave_bessel_coefficients(1.0, 13).is_err());
    }

    #[test]
    fn reconstruction() {
        // The error is the dropped tail 2 Σ_{n>N} |J_n(x)|, about 1.1e-8 at
        // x = 1 but 2.4e-3 at x = 4 for N = 8.
        assert!(jacobi_anger_reconstruction(1.0, 8, 97).unwrap() <= 1e-6);
        for (x, n) in [(2.0, 8), (4.0, 8), (4.0, 12)] {
            let tail: f64 = 2.0 * (n + 1..40).map(|k| series(k as f64, x).abs()).sum::<f64>();
            let err = jacobi_anger_reconstruction(x, n, 97).unwrap();
            assert!(
                err <= tail + 1e-12 && err >= 0.3 * tail,
                "x {x} n {n}: {err} vs {tail}"
            );
        }
    }
}
