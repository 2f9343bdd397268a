//! Sampled equality: symbolic identities are certified numerically at
//! quasi-random points (a Halton sequence with a seeded random shift).

use super::{Bindings, Expr, ExprError, Result, Symbol};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use std::collections::BTreeMap;

/// Default relative tolerance for symbolic identities.
pub const SYMBOLIC_TOL: f64 = 1e-9;

const PRIMES: [u32; 16] = [2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37, 41, 43, 47, 53];

/// Where sample points are drawn from. Every symbol of the compared
/// expressions must have a range here (or be fixed).
#[derive(Debug, Clone, PartialEq)]
pub struct SampleSpace {
    pub window: (f64, f64),
    pub ranges: BTreeMap<Symbol, (f64, f64)>,
}

impl SampleSpace {
    /// Window for `x`; path slots get default ranges chosen so that the
    /// nonstandard-Lagrangian denominator `y' vbar - y vbar'` stays positive.
    pub fn new(lo: f64, hi: f64) -> Self {
        let mut ranges = BTreeMap::new();
        ranges.insert(Symbol::Y, (0.5, 1.5));
        ranges.insert(Symbol::Yp, (0.5, 1.5));
        ranges.insert(Symbol::Ypp, (-1.0, 1.0));
        ranges.insert(Symbol::Vbar, (0.5, 1.5));
        ranges.insert(Symbol::VbarP, (-1.5, -0.5));
        SampleSpace {
            window: (lo, hi),
            ranges,
        }
    }

    pub fn with_param(mut self, name: &str, lo: f64, hi: f64) -> Self {
        if let Ok(s) = Symbol::param(name) {
            self.ranges.insert(s, (lo, hi));
        }
        self
    }

    pub fn with_fixed(self, name: &str, v: f64) -> Self {
        self.with_param(name, v, v)
    }

    pub fn with_range(mut self, sym: Symbol, lo: f64, hi: f64) -> Self {
        self.ranges.insert(sym, (lo, hi));
        self
    }

    /// `trials` sample bindings covering every symbol in `symbols`.
    pub fn points(&self, symbols: &[Symbol], trials: usize, seed: u64) -> Result<Vec<Bindings>> {
        let mut dims: Vec<(Symbol, (f64, f64))> = vec![(Symbol::X, self.window)];
        for s in symbols {
            if *s == Symbol::X {
                continue;
            }
            let r = self
                .ranges
                .get(s)
                .copied()
                .ok_or_else(|| ExprError::Unbound(s.name().to_string()))?;
            dims.push((s.clone(), r));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let shifts: Vec<f64> = dims.iter().map(|_| rng.gen::<f64>()).collect();
        let mut out = Vec::with_capacity(trials);
        for i in 0..trials {
            let mut b = Bindings::new();
            for (d, (sym, (lo, hi))) in dims.iter().enumerate() {
                let base = PRIMES[d % PRIMES.len()];
                let u = (radical_inverse(i as u64 + 1, base) + shifts[d]).fract();
                b.set(sym, lo + (hi - lo) * u);
            }
            out.push(b);
        }
        Ok(out)
    }
}

fn radical_inverse(mut i: u64, base: u32) -> f64 {
    let b = base as f64;
    let mut inv = 1.0 / b;
    let mut out = 0.0;
    while i > 0 {
        out += (i % base as u64) as f64 * inv;
        i /= base as u64;
        inv /= b;
    }
    out
}

/// Worst-case outcome of comparing two expressions on sample points.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Comparison {
    pub pass: bool,
    /// Largest `|e1 - e2| / (1 + |e1|)` seen.
    pub worst: f64,
    pub tolerance: f64,
    /// `x` at the worst point.
    pub witness_x: f64,
    pub lhs: f64,
    pub rhs: f64,
}

pub fn compare_on_domain(
    e1: &Expr,
    e2: &Expr,
    space: &SampleSpace,
    trials: usize,
    seed: u64,
    tol: f64,
) -> Result<Comparison> {
    let mut symbols = e1.symbols();
    symbols.extend(e2.symbols());
    symbols.sort();
    symbols.dedup();
    let points = space.points(&symbols, trials, seed)?;
    let mut cmp = Comparison {
        pass: true,
        worst: 0.0,
        tolerance: tol,
        witness_x: space.window.0,
        lhs: 0.0,
        rhs: 0.0,
    };
    for (i, b) in points.iter().enumerate() {
        let a = e1.eval(b)?;
        let c = e2.eval(b)?;
        let dev = (a - c).abs() / (1.0 + a.abs());
        if i == 0 || dev > cmp.worst {
            cmp.worst = dev;
            cmp.witness_x = b.x.unwrap_or(f64::NAN);
            cmp.lhs = a;
            cmp.rhs = c;
        }
    }
    cmp.pass = cmp.worst <= tol;
    Ok(cmp)
}

/// True iff `|e1 - e2| <= 1e-9 (1 + |e1|)` at every sample point.
pub fn equivalent_on_domain(
    e1: &Expr,
    e2: &Expr,
    space: &SampleSpace,
    trials: usize,
    seed: u64,
) -> Result<bool> {
    Ok(compare_on_domain(e1, e2, space, trials, seed, SYMBOLIC_TOL)?.pass)
}

#[cfg(test)]
mod tests {
    use super::super::parse;
    use super::*;

    #[test]
    fn power_product_identity() {
        let sp = SampleSpace::new(0.5, 10.0).with_param("alpha", 0.0, 3.0);
        let e1 = parse("x^alpha*x").unwrap();
        let e2 = parse("x^(alpha + 1)").unwrap();
        assert!(equivalent_on_domain(&e1, &e2, &sp, 64, 1).unwrap());
    }

    #[test]
    fn small_offsets_are_detected() {
        let sp = SampleSpace::new(0.5, 10.0);
        let e1 = parse("x").unwrap();
        let e2 = parse("x + 0.001").unwrap();
        assert!(!equivalent_on_domain(&e1, &e2, &sp, 16, 1).unwrap());
    }

    #[test]
    fn undeclared_parameter_is_an_error() {
        let sp = SampleSpace::new(0.5, 1.0);
        let e = parse("mu*x").unwrap();
        assert!(equivalent_on_domain(&e, &e, &sp, 4, 0).is_err());
    }

    #[test]
    fn pole_in_window_is_an_error() {
        let sp = SampleSpace::new(-1.0, 1.0);
        let e = parse("ln(x)").unwrap();
        assert!(equivalent_on_domain(&e, &e, &sp, 64, 0).is_err());
    }

    #[test]
    fn points_are_seed_deterministic() {
        let sp = SampleSpace::new(0.0, 1.0).with_param("a", 1.0, 2.0);
        let syms = vec![Symbol::X, Symbol::param("a").unwrap()];
        let p1 = sp.points(&syms, 10, 42).unwrap();
        let p2 = sp.points(&syms, 10, 42).unwrap();
        let p3 = sp.points(&syms, 10, 43).unwrap();
        assert_eq!(p1, p2);
        assert_ne!(p1, p3);
        for b in &p1 {
            let x = b.x.unwrap();
            assert!((0.0..=1.0).contains(&x));
        }
    }
}
