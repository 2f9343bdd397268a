//! Ladder operators acting on sampled functions.

use super::{FactorizationError, LadderPair, Result};

/// Function values on a uniform grid `lo + i·step`.
#[derive(Debug, Clone, PartialEq)]
pub struct SampledFunction {
    lo: f64,
    step: f64,
    values: Vec<f64>,
}

/// Smallest differencing step; finer grids difference over several cells.
const MIN_STEP: f64 = 1e-5;
const DIFF_TOL: f64 = 1e-7;

impl SampledFunction {
    /// `n` samples of `f` on `[lo, hi]`, endpoints included.
    pub fn from_fn<F>(lo: f64, hi: f64, n: usize, f: F) -> Result<Self>
    where
        F: Fn(f64) -> Result<f64>,
    {
        if n < 2 || !(hi > lo) {
            return Err(FactorizationError::BadGrid(2));
        }
        let step = (hi - lo) / (n - 1) as f64;
        let values = (0..n)
            .map(|i| f(lo + i as f64 * step))
            .collect::<Result<Vec<_>>>()?;
        Ok(SampledFunction { lo, step, values })
    }

    /// From explicit `(x, value)` samples, which must be uniformly spaced.
    pub fn from_samples(grid: &[f64], values: &[f64]) -> Result<Self> {
        if grid.len() < 2 || grid.len() != values.len() {
            return Err(FactorizationError::BadGrid(2));
        }
        let step = (grid[grid.len() - 1] - grid[0]) / (grid.len() - 1) as f64;
        if !(step > 0.0) {
            return Err(FactorizationError::BadGrid(2));
        }
        for (i, x) in grid.iter().enumerate() {
            if (x - (grid[0] + i as f64 * step)).abs() > 1e-9 * step {
                return Err(FactorizationError::BadGrid(2));
            }
        }
        Ok(SampledFunction {
            lo: grid[0],
            step,
            values: values.to_vec(),
        })
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn step(&self) -> f64 {
        self.step
    }

    pub fn x(&self, i: usize) -> f64 {
        self.lo + i as f64 * self.step
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn span(&self) -> (f64, f64) {
        (self.lo, self.x(self.len() - 1))
    }

    pub fn grid(&self) -> Vec<f64> {
        (0..self.len()).map(|i| self.x(i)).collect()
    }

    fn stride(&self) -> usize {
        (MIN_STEP / self.step).ceil().max(1.0) as usize
    }

    /// Centered difference at node `i` with Richardson extrapolation over
    /// steps `h`, `2h`, `4h`; returns the derivative and an error estimate.
    fn derivative_at(&self, i: usize, s: usize) -> (f64, f64) {
        let f = &self.values;
        let d = |k: usize| (f[i + k * s] - f[i - k * s]) / (2.0 * (k * s) as f64 * self.step);
        let (d1, d2, d4) = (d(1), d(2), d(4));
        let r1 = (4.0 * d1 - d2) / 3.0;
        let r2 = (4.0 * d2 - d4) / 3.0;
        (r1, (r1 - r2).abs() / 15.0)
    }

    /// Derivative on the nodes at least `4h` from either end.
    pub fn derivative(&self) -> Result<SampledFunction> {
        let s = self.stride();
        let margin = 4 * s;
        if self.len() <= 2 * margin {
            return Err(FactorizationError::BadGrid(2 * margin + 1));
        }
        let mut values = Vec::with_capacity(self.len() - 2 * margin);
        for i in margin..self.len() - margin {
            let (d, est) = self.derivative_at(i, s);
            if est > DIFF_TOL * (1.0 + d.abs()) {
                return Err(FactorizationError::GridTooCoarse {
                    x: self.x(i),
                    estimate: est,
                });
            }
            values.push(d);
        }
        Ok(SampledFunction {
            lo: self.x(margin),
            step: self.step,
            values,
        })
    }

    fn node_slope(&self, i: usize) -> f64 {
        let f = &self.values;
        let n = f.len();
        let h = self.step;
        if n < 3 {
            return (f[n - 1] - f[0]) / (h * (n - 1) as f64);
        }
        if i >= 2 && i + 2 < n {
            (f[i - 2] - 8.0 * f[i - 1] + 8.0 * f[i + 1] - f[i + 2]) / (12.0 * h)
        } else if i == 0 {
            (-3.0 * f[0] + 4.0 * f[1] - f[2]) / (2.0 * h)
        } else if i == n - 1 {
            (3.0 * f[n - 1] - 4.0 * f[n - 2] + f[n - 3]) / (2.0 * h)
        } else {
            (f[i + 1] - f[i - 1]) / (2.0 * h)
        }
    }

    /// Cubic Hermite interpolation with node slopes from finite
    /// differences.
    pub fn at(&self, x: f64) -> Result<f64> {
        let (lo, hi) = self.span();
        if !(x >= lo - 1e-12 * (1.0 + lo.abs()) && x <= hi + 1e-12 * (1.0 + hi.abs())) {
            return Err(FactorizationError::OutOfRange(format!("x = {x}")));
        }
        let u = ((x - self.lo) / self.step).clamp(0.0, (self.len() - 1) as f64);
        let i = (u.floor() as usize).min(self.len() - 2);
        let t = u - i as f64;
        let (y0, y1) = (self.values[i], self.values[i + 1]);
        let (m0, m1) = (
            self.node_slope(i) * self.step,
            self.node_slope(i + 1) * self.step,
        );
        let t2 = t * t;
        let t3 = t2 * t;
        Ok((2.0 * t3 - 3.0 * t2 + 1.0) * y0
            + (t3 - 2.0 * t2 + t) * m0
            + (-2.0 * t3 + 3.0 * t2) * y1
            + (t3 - t2) * m1)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LadderDirection {
    /// `m -> m + 1` with `-d/dx + k(x, m + 1)`.
    Up,
    /// `m -> m - 1` with `d/dx + k(x, m)`.
    Down,
}

impl std::str::FromStr for LadderDirection {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "up" => Ok(LadderDirection::Up),
            "down" => Ok(LadderDirection::Down),
            other => Err(format!("unknown direction `{other}` (expected up or down)")),
        }
    }
}

/// Applies the ladder operator to `z`, taken to be the index-`m` state.
/// The result lives on the nodes where the derivative is available.
pub fn apply_ladder(
    lp: &LadderPair,
    z: &SampledFunction,
    m: f64,
    direction: LadderDirection,
) -> Result<SampledFunction> {
    let dz = z.derivative()?;
    let s = z.stride();
    let (sign, m_k) = match direction {
        LadderDirection::Up => (-1.0, m + 1.0),
        LadderDirection::Down => (1.0, m),
    };
    let mut values = Vec::with_capacity(dz.len());
    for (j, d) in dz.values.iter().enumerate() {
        let x = dz.x(j);
        let zv = z.values[j + 4 * s];
        values.push(sign * d + lp.k_at(x, m_k)? * zv);
    }
    Ok(SampledFunction {
        lo: dz.lo,
        step: dz.step,
        values,
    })
}

/// Pointwise ratio `w / target` summarized by its median and relative
/// spread `(max - min) / |median|`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Proportionality {
    pub ratio: f64,
    pub spread: f64,
    pub points: usize,
}

/// Compares `w` with `target` on the nodes of `w` inside `[lo, hi]`,
/// skipping nodes where `|target|` is below 1% of its maximum there (near
/// zeros the ratio is dominated by differencing noise).
pub fn proportionality<F>(
    w: &SampledFunction,
    target: F,
    lo: f64,
    hi: f64,
) -> Result<Proportionality>
where
    F: Fn(f64) -> Result<f64>,
{
    let mut pairs = Vec::new();
    for (i, v) in w.values.iter().enumerate() {
        let x = w.x(i);
        if x >= lo - 1e-12 && x <= hi + 1e-12 {
            pairs.push((*v, target(x)?));
        }
    }
    let peak = pairs.iter().map(|(_, t)| t.abs()).fold(0.0, f64::max);
    let mut ratios: Vec<f64> = pairs
        .iter()
        .filter(|(_, t)| t.abs() >= 1e-2 * peak && *t != 0.0)
        .map(|(v, t)| v / t)
        .collect();
    if ratios.is_empty() {
        return Err(FactorizationError::OutOfRange(format!(
            "no usable samples in [{lo}, {hi}]"
        )));
    }
    ratios.sort_by(f64::total_cmp);
    let median = ratios[ratios.len() / 2];
    let spread = (ratios[ratios.len() - 1] - ratios[0]) / median.abs();
    Ok(Proportionality {
        ratio: median,
        spread,
        points: ratios.len(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::parse;
    use crate::factorization::{bessel_j, classify_factorization, to_second_canonical};
    use crate::ode::builtin_registry;

    fn bessel_ladder() -> LadderPair {
        let e = builtin_registry()
            .get("regular-bessel")
            .unwrap()
            .operator
            .clone();
        let v = classify_factorization(&to_second_canonical(&e).unwrap());
        v.ladder.unwrap()
    }

    fn z(mu: f64) -> SampledFunction {
        SampledFunction::from_fn(0.95, 8.05, 7101, |x| Ok(x.sqrt() * bessel_j(mu, x)?)).unwrap()
    }

    fn target(mu: f64) -> impl Fn(f64) -> Result<f64> {
        move |x| Ok(x.sqrt() * bessel_j(mu, x)?)
    }

    #[test]
    fn raising_and_lowering_bessel() {
        let lp = bessel_ladder();
        let up = apply_ladder(&lp, &z(1.0), 1.0, LadderDirection::Up).unwrap();
        let p = proportionality(&up, target(2.0), 1.0, 8.0).unwrap();
        assert!(p.spread <= 1e-5, "{p:?}");
        assert!((p.ratio - 1.0).abs() <= 1e-5);
        let down = apply_ladder(&lp, &z(1.5), 1.5, LadderDirection::Down).unwrap();
        let p = proportionality(&down, target(0.5), 1.0, 8.0).unwrap();
        assert!(p.spread <= 1e-5 && (p.ratio - 1.0).abs() <= 1e-5, "{p:?}");
    }

    #[test]
    fn down_then_up_is_a_multiple() {
        let lp = bessel_ladder();
        let lam = lp.lambda_shift;
        let m = 2.0;
        let down = apply_ladder(&lp, &z(m), m, LadderDirection::Down).unwrap();
        let back = apply_ladder(&lp, &down, m - 1.0, LadderDirection::Up).unwrap();
        let p = proportionality(&back, target(m), 1.0, 8.0).unwrap();
        let expected = lam - lp.chi_at(m).unwrap();
        assert!(
            p.spread <= 1e-5 && (p.ratio - expected).abs() <= 1e-5,
            "{p:?}"
        );
    }

    #[test]
    fn pure_derivative() {
        let lp = LadderPair {
            family: "constant".into(),
            index: "m".into(),
            k: parse("0").unwrap(),
            chi: parse("0").unwrap(),
            r: parse("1").unwrap(),
            lambda_shift: 0.0,
            index_map: None,
            window: (0.0, 6.0),
            index_range: (0.0, 1.0),
            closes: true,
        };
        let s = SampledFunction::from_fn(0.0, 6.0, 6001, |x| Ok(x.sin())).unwrap();
        let w = apply_ladder(&lp, &s, 0.0, LadderDirection::Down).unwrap();
        for (i, v) in w.values().iter().enumerate() {
            assert!((v - w.x(i).cos()).abs() < 1e-9);
        }
        let up = apply_ladder(&lp, &s, 0.0, LadderDirection::Up).unwrap();
        assert!((up.values()[100] + up.x(100).cos()).abs() < 1e-9);
    }

    #[test]
    fn coarse_grid_is_reported() {
        let s = SampledFunction::from_fn(0.0, 20.0, 41, |x| Ok((3.0 * x).sin())).unwrap();
        assert!(matches!(
            s.derivative(),
            Err(FactorizationError::GridTooCoarse { .. })
        ));
        let tiny = SampledFunction::from_fn(0.0, 1.0, 5, Ok).unwrap();
        assert!(matches!(
            tiny.derivative(),
            Err(FactorizationError::BadGrid(_))
        ));
    }

    #[test]
    fn samples_and_interpolation() {
        let g = [0.0, 0.5, 1.0, 1.5];
        let s = SampledFunction::from_samples(&g, &[0.0, 0.25, 1.0, 2.25]).unwrap();
        assert!((s.at(0.75).unwrap() - 0.5625).abs() < 0.02);
        assert!(s.at(2.0).is_err());
        assert!(SampledFunction::from_samples(&[0.0, 0.5, 1.2], &[0.0; 3]).is_err());
        let fine = SampledFunction::from_fn(0.0, 3.0, 301, |x| Ok(x.exp())).unwrap();
        assert!((fine.at(1.2345).unwrap() - 1.2345f64.exp()).abs() < 1e-8);
    }
}
