//! Ladder families and the factorizability verdict.
//!
//! A ladder for `z'' + (λ + r(x, m)) z = 0` is `A±(x, m) = ±d/dx + k(x, m)`
//! together with `χ(m)` such that
//! `-k'(x, m+1) - k(x, m+1)² - χ(m+1) = r(x, m)`. The built-in families are
//! detected from `r` alone; extra families can be loaded from a JSON catalog
//! of templates whose placeholders are fitted numerically.

use super::{CanonicalForm, FactorizationError, Result};
use crate::expr::{
    compare_on_domain, parse, Bindings, Comparison, Expr, SampleSpace, Symbol, SYMBOLIC_TOL,
};
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;

const TRIALS: usize = 64;
const SEED: u64 = 17;
const DEFAULT_INDEX: &str = "m";
const DEFAULT_INDEX_RANGE: (f64, f64) = (0.0, 3.0);

#[derive(Debug, Clone, PartialEq)]
pub struct LadderPair {
    pub family: String,
    /// Name of the ladder index symbol in `k`, `chi` and `r`.
    pub index: String,
    pub k: Expr,
    pub chi: Expr,
    /// The `r` the ladder factorizes, after `lambda_shift` has been moved
    /// into the eigenvalue.
    pub r: Expr,
    pub lambda_shift: f64,
    /// The ladder index as a function of the operator's own index, when
    /// they differ.
    pub index_map: Option<Expr>,
    pub window: (f64, f64),
    pub index_range: (f64, f64),
    /// Whether `k'(m) - k(m)² - χ(m) = r(m)` also holds, so that both
    /// compositions of the pair reduce to `λ - χ`.
    pub closes: bool,
}

impl LadderPair {
    pub fn index_symbol(&self) -> Symbol {
        Symbol::param(&self.index).expect("validated index name")
    }

    /// Window for `x` and the index range for the index symbol.
    pub fn sample_space(&self) -> SampleSpace {
        SampleSpace::new(self.window.0, self.window.1).with_param(
            &self.index,
            self.index_range.0,
            self.index_range.1,
        )
    }

    fn shifted(&self, e: &Expr, by: i64) -> Expr {
        let s = self.index_symbol();
        e.substitute(&s, &Expr::add(Expr::Sym(s.clone()), Expr::int(by)))
    }

    /// `k(x, m)` with `x` and `m` bound.
    pub fn k_at(&self, x: f64, m: f64) -> Result<f64> {
        Ok(self.k.eval(&self.point(x, m))?)
    }

    /// `∂k/∂x` at `(x, m)`.
    pub fn dk_at(&self, x: f64, m: f64) -> Result<f64> {
        Ok(self.k.differentiate(&Symbol::X)?.eval(&self.point(x, m))?)
    }

    pub fn chi_at(&self, m: f64) -> Result<f64> {
        Ok(self.chi.eval(&self.point(self.window.0, m))?)
    }

    fn point(&self, x: f64, m: f64) -> Bindings {
        Bindings::new().at(x).param(&self.index, m)
    }
}

/// `-k'(x, m+1) - k(x, m+1)² - χ(m+1)` against `r(x, m)`.
pub fn consistency_identity(lp: &LadderPair, space: &SampleSpace) -> Result<Comparison> {
    let k1 = lp.shifted(&lp.k, 1);
    let lhs = Expr::sum(vec![
        Expr::neg(k1.differentiate(&Symbol::X)?),
        Expr::neg(Expr::pow(k1, Expr::int(2))),
        Expr::neg(lp.shifted(&lp.chi, 1)),
    ]);
    Ok(compare_on_domain(
        &lhs,
        &lp.r,
        space,
        TRIALS,
        SEED,
        SYMBOLIC_TOL,
    )?)
}

/// `k'(x, m) - k(x, m)² - χ(m)` against `r(x, m)`.
pub fn closure_identity(lp: &LadderPair, space: &SampleSpace) -> Result<Comparison> {
    let lhs = Expr::sum(vec![
        lp.k.differentiate(&Symbol::X)?,
        Expr::neg(Expr::pow(lp.k.clone(), Expr::int(2))),
        Expr::neg(lp.chi.clone()),
    ]);
    Ok(compare_on_domain(
        &lhs,
        &lp.r,
        space,
        TRIALS,
        SEED,
        SYMBOLIC_TOL,
    )?)
}

#[derive(Debug, Clone, PartialEq)]
pub struct FactorizationVerdict {
    pub factorizable: bool,
    pub matched_family: Option<String>,
    pub ladder: Option<LadderPair>,
    pub reason: String,
}

impl FactorizationVerdict {
    fn matched(lp: LadderPair) -> Self {
        let reason = format!("{} family: k = {}, chi = {}", lp.family, lp.k, lp.chi);
        FactorizationVerdict {
            factorizable: true,
            matched_family: Some(lp.family.clone()),
            ladder: Some(lp),
            reason,
        }
    }

    fn rejected(reason: &str) -> Self {
        FactorizationVerdict {
            factorizable: false,
            matched_family: None,
            ladder: None,
            reason: reason.to_string(),
        }
    }
}

/// The problem handed to each family: `r` with every parameter but the
/// index bound, plus the sampling domain.
struct Target {
    r: Expr,
    index: String,
    window: (f64, f64),
    index_range: (f64, f64),
}

impl Target {
    fn from_canonical(cf: &CanonicalForm) -> Self {
        let o = cf.source();
        let (index, index_range) = match o.index_param() {
            Some(name) => {
                let range = o
                    .params()
                    .get(name)
                    .map(|p| p.sample_range())
                    .unwrap_or(DEFAULT_INDEX_RANGE);
                (name.to_string(), range)
            }
            None => (DEFAULT_INDEX.to_string(), DEFAULT_INDEX_RANGE),
        };
        let mut params = o.bindings().params;
        params.remove(&index);
        Target {
            r: cf.r().bind_params(&params),
            index,
            window: o.window(),
            index_range,
        }
    }

    fn symbol(&self) -> Symbol {
        Symbol::param(&self.index).expect("validated index name")
    }

    fn space(&self) -> SampleSpace {
        SampleSpace::new(self.window.0, self.window.1).with_param(
            &self.index,
            self.index_range.0,
            self.index_range.1,
        )
    }

    /// Off-centre, so symmetric windows do not pin `x` to zero.
    fn x_ref(&self) -> f64 {
        self.window.0 + 0.618 * (self.window.1 - self.window.0)
    }

    /// `e` with `x` pinned to the window midpoint, if `e` does not depend
    /// on `x` on the sampled domain.
    fn x_free(&self, e: &Expr) -> Option<Expr> {
        let pinned = e.substitute(&Symbol::X, &Expr::float(self.x_ref()));
        let same = compare_on_domain(e, &pinned, &self.space(), TRIALS, SEED, SYMBOLIC_TOL).ok()?;
        same.pass.then_some(pinned)
    }

    /// Constant value of `e`, if it depends on neither `x` nor the index.
    fn constant(&self, e: &Expr) -> Option<f64> {
        let pinned = self.x_free(e)?;
        let m_mid = 0.5 * (self.index_range.0 + self.index_range.1);
        let v = pinned
            .eval(&Bindings::new().at(self.x_ref()).param(&self.index, m_mid))
            .ok()?;
        let c = Expr::float(v);
        compare_on_domain(&pinned, &c, &self.space(), TRIALS, SEED, SYMBOLIC_TOL)
            .ok()?
            .pass
            .then_some(v)
    }

    fn index_samples(&self, n: usize) -> Vec<f64> {
        let (lo, hi) = self.index_range;
        (0..n)
            .map(|i| lo + (hi - lo) * i as f64 / (n - 1).max(1) as f64)
            .collect()
    }

    fn eval_m(&self, e: &Expr, m: f64) -> Option<f64> {
        e.eval(&Bindings::new().at(self.x_ref()).param(&self.index, m))
            .ok()
    }
}

/// Rational constants with small denominators are kept exact.
fn nice_const(v: f64) -> Expr {
    for den in 1..=64i64 {
        let num = (v * den as f64).round();
        if (num / den as f64 - v).abs() <= 1e-9 * (1.0 + v.abs()) && num.abs() < 1e12 {
            return Expr::ratio(num as i64, den);
        }
    }
    Expr::float(v)
}

/// `χ(m)` from the consistency identity: `χ(m+1) = -k'(m+1) - k(m+1)² - r(m)`,
/// required to be `x`-independent.
fn derive_chi(t: &Target, k: &Expr, r: &Expr) -> Result<Option<Expr>> {
    let s = t.symbol();
    let up = Expr::add(Expr::Sym(s.clone()), Expr::one());
    let k1 = k.substitute(&s, &up);
    let chi_next = Expr::sum(vec![
        Expr::neg(k1.differentiate(&Symbol::X)?),
        Expr::neg(Expr::pow(k1, Expr::int(2))),
        Expr::neg(r.clone()),
    ]);
    let Some(pinned) = t.x_free(&chi_next) else {
        return Ok(None);
    };
    let down = Expr::sub(Expr::Sym(s.clone()), Expr::one());
    let chi = pinned.substitute(&s, &down);
    let zero = compare_on_domain(&chi, &Expr::zero(), &t.space(), TRIALS, SEED, SYMBOLIC_TOL)?;
    Ok(Some(if zero.pass { Expr::zero() } else { chi }))
}

fn finish(
    t: &Target,
    family: &str,
    k: Expr,
    r: Expr,
    lambda_shift: f64,
    index: Option<(String, (f64, f64), Expr)>,
) -> Result<Option<LadderPair>> {
    // The ladder may use its own index; `Target` then describes that one.
    let lt = match &index {
        Some((name, range, _)) => Target {
            r: r.clone(),
            index: name.clone(),
            window: t.window,
            index_range: *range,
        },
        None => Target {
            r: r.clone(),
            index: t.index.clone(),
            window: t.window,
            index_range: t.index_range,
        },
    };
    let Some(chi) = derive_chi(&lt, &k, &r)? else {
        return Ok(None);
    };
    let mut lp = LadderPair {
        family: family.to_string(),
        index: lt.index.clone(),
        k,
        chi,
        r,
        lambda_shift,
        index_map: index.map(|(_, _, map)| map),
        window: t.window,
        index_range: lt.index_range,
        closes: false,
    };
    let space = lp.sample_space();
    if !consistency_identity(&lp, &space)?.pass {
        return Ok(None);
    }
    lp.closes = closure_identity(&lp, &space)?.pass;
    Ok(Some(lp))
}

/// `r = c(m)`: `k = 0`, `χ(m) = -c(m - 1)`.
fn constant_family(t: &Target) -> Result<Option<LadderPair>> {
    if t.x_free(&t.r).is_none() {
        return Ok(None);
    }
    finish(t, "constant", Expr::zero(), t.r.clone(), 0.0, None)
}

/// `r = A(m)/x² + c0(m)` with `¼ - A(m) ≥ 0`: `k = (q - ½)/x` where
/// `q² = ¼ - A`. When `q` is affine in the index, `q = m + c` is used
/// directly; otherwise the ladder runs in `ν = q(m)`.
fn inverse_square_family(t: &Target) -> Result<Option<LadderPair>> {
    let x = Expr::x();
    let dr = t.r.differentiate(&Symbol::X)?;
    let a = Expr::mul(
        Expr::ratio(-1, 2),
        Expr::mul(Expr::pow(x.clone(), Expr::int(3)), dr.clone()),
    );
    let c0 = Expr::add(
        t.r.clone(),
        Expr::mul(Expr::half(), Expr::mul(x.clone(), dr)),
    );
    let (Some(a), Some(c0)) = (t.x_free(&a), t.x_free(&c0)) else {
        return Ok(None);
    };
    if t.constant(&a).is_some_and(|v| v.abs() < 1e-12) {
        return Ok(None);
    }
    let s = Expr::sub(Expr::ratio(1, 4), a);
    let samples = t.index_samples(9);
    let mut s_values = Vec::new();
    for &m in &samples {
        match t.eval_m(&s, m) {
            Some(v) if v >= -1e-12 => s_values.push(v.max(0.0)),
            _ => return Ok(None),
        }
    }

    let (lambda_shift, r) = match t.constant(&c0) {
        Some(v) => {
            let c = nice_const(v);
            (c.as_constant().unwrap_or(v), Expr::sub(t.r.clone(), c))
        }
        None => (0.0, t.r.clone()),
    };
    let m_sym = Expr::Sym(t.symbol());

    let m0 = samples[samples.len() / 2];
    let q0 = s_values[samples.len() / 2].sqrt();
    for c in [q0 - m0, -q0 - m0] {
        let c = nice_const(c);
        let q = Expr::add(m_sym.clone(), c);
        let sq = Expr::pow(q.clone(), Expr::int(2));
        if compare_on_domain(&s, &sq, &t.space(), TRIALS, SEED, SYMBOLIC_TOL)?.pass {
            let k = Expr::div(Expr::sub(q, Expr::half()), x.clone());
            return finish(t, "inverse-square", k, r, lambda_shift, None);
        }
    }

    // Non-affine q: change the ladder index to ν = q(m). This needs the
    // remaining constant to be index-free.
    if t.constant(&c0).is_none() {
        return Ok(None);
    }
    let nu_name = if t.index == "nu" { "nu_" } else { "nu" };
    let nu = Expr::param(nu_name);
    let map = Expr::pow(s, Expr::half());
    let q_lo = s_values
        .iter()
        .cloned()
        .fold(f64::INFINITY, f64::min)
        .sqrt();
    let q_hi = s_values
        .iter()
        .cloned()
        .fold(f64::NEG_INFINITY, f64::max)
        .sqrt();
    let k = Expr::div(Expr::sub(nu.clone(), Expr::half()), x.clone());
    let r_nu = Expr::add(
        Expr::neg(Expr::div(
            Expr::sub(Expr::pow(nu, Expr::int(2)), Expr::ratio(1, 4)),
            Expr::pow(x, Expr::int(2)),
        )),
        Expr::sub(c0, nice_const(lambda_shift)),
    );
    let r_nu = r_nu.substitute(&t.symbol(), &Expr::float(m0));
    finish(
        t,
        "inverse-square",
        k,
        r_nu,
        lambda_shift,
        Some((nu_name.to_string(), (q_lo, q_hi.max(q_lo + 1e-9)), map)),
    )
}

/// `r = -a²x² + c(m)`: `k = a x`, `χ(m + 1) = -a - c(m)`.
fn quadratic_family(t: &Target) -> Result<Option<LadderPair>> {
    let x = Expr::x();
    let dr = t.r.differentiate(&Symbol::X)?;
    let p = Expr::div(dr.clone(), Expr::mul(Expr::int(2), x.clone()));
    let Some(p) = t.constant(&p) else {
        return Ok(None);
    };
    if p >= 0.0 {
        return Ok(None);
    }
    let a = nice_const((-p).sqrt());
    let k = Expr::mul(a, x);
    finish(t, "quadratic", k, t.r.clone(), 0.0, None)
}

/// Matches `r` against the built-in families (constant, inverse-square,
/// quadratic), in that order.
pub fn classify_factorization(cf: &CanonicalForm) -> FactorizationVerdict {
    classify_with_catalog(cf, &FamilyCatalog::default())
}

type FamilyFn = fn(&Target) -> Result<Option<LadderPair>>;

/// Built-in families first, then the templates of `catalog`.
pub fn classify_with_catalog(cf: &CanonicalForm, catalog: &FamilyCatalog) -> FactorizationVerdict {
    let t = Target::from_canonical(cf);
    let builtins: [FamilyFn; 3] = [constant_family, inverse_square_family, quadratic_family];
    for family in builtins {
        if let Ok(Some(lp)) = family(&t) {
            return FactorizationVerdict::matched(lp);
        }
    }
    for template in &catalog.templates {
        if let Ok(Some(lp)) = template.try_match(&t) {
            return FactorizationVerdict::matched(lp);
        }
    }
    FactorizationVerdict::rejected("r outside catalog families")
}

/// One entry of a family catalog file. Templates are expressions in `x`,
/// the index `m` and placeholders, which must all have a domain.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FamilyFile {
    pub tag: String,
    pub r_template: String,
    pub k_template: String,
    pub chi_template: String,
    #[serde(default)]
    pub placeholder_domains: BTreeMap<String, [f64; 2]>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FamilyTemplate {
    pub tag: String,
    pub r: Expr,
    pub k: Expr,
    pub chi: Expr,
    pub domains: BTreeMap<String, (f64, f64)>,
}

impl FamilyTemplate {
    pub fn from_file(f: &FamilyFile) -> Result<Self> {
        let bad = |what: String| FactorizationError::Catalog(format!("{}: {what}", f.tag));
        let r = parse(&f.r_template)?;
        let k = parse(&f.k_template)?;
        let chi = parse(&f.chi_template)?;
        for e in [&r, &k, &chi] {
            if e.has_dependent_symbols() {
                return Err(bad("templates may only use x, m and placeholders".into()));
            }
            for p in e.params() {
                if p != DEFAULT_INDEX && !f.placeholder_domains.contains_key(&p) {
                    return Err(bad(format!("placeholder `{p}` has no domain")));
                }
            }
        }
        if chi.contains(&Symbol::X) {
            return Err(bad("chi_template must not depend on x".into()));
        }
        let mut domains = BTreeMap::new();
        for (name, [lo, hi]) in &f.placeholder_domains {
            if name == DEFAULT_INDEX {
                return Err(bad("`m` is the ladder index, not a placeholder".into()));
            }
            if !(lo.is_finite() && hi.is_finite() && lo <= hi) {
                return Err(bad(format!("bad domain for `{name}`")));
            }
            domains.insert(name.clone(), (*lo, *hi));
        }
        Ok(FamilyTemplate {
            tag: f.tag.clone(),
            r,
            k,
            chi,
            domains,
        })
    }

    pub fn to_file(&self) -> FamilyFile {
        FamilyFile {
            tag: self.tag.clone(),
            r_template: self.r.to_string(),
            k_template: self.k.to_string(),
            chi_template: self.chi.to_string(),
            placeholder_domains: self
                .domains
                .iter()
                .map(|(k, (a, b))| (k.clone(), [*a, *b]))
                .collect(),
        }
    }

    fn bind(&self, e: &Expr, theta: &[f64]) -> Expr {
        let values = self
            .domains
            .keys()
            .cloned()
            .zip(theta.iter().copied())
            .collect();
        e.bind_params(&values)
    }

    /// Fits the placeholders to `r` by damped Gauss-Newton, then certifies
    /// the fit by sampled equality and the consistency identity.
    fn try_match(&self, t: &Target) -> Result<Option<LadderPair>> {
        let m_sym = t.symbol();
        let target_r = t.r.substitute(&m_sym, &Expr::param(DEFAULT_INDEX));
        let mt = Target {
            r: target_r,
            index: DEFAULT_INDEX.to_string(),
            window: t.window,
            index_range: t.index_range,
        };
        let names: Vec<String> = self.domains.keys().cloned().collect();
        let partials: Vec<Expr> = names
            .iter()
            .map(|n| {
                self.r
                    .partial(&Symbol::param(n).expect("validated placeholder"))
            })
            .collect();

        let xs = super::interior_points(t.window.0, t.window.1, 8);
        let ms = mt.index_samples(5);
        let mut pts = Vec::new();
        for &x in &xs {
            for &m in &ms {
                let b = Bindings::new().at(x).param(DEFAULT_INDEX, m);
                pts.push((b.clone(), mt.r.eval(&b)?));
            }
        }

        for start in [0.5, 0.25, 0.75] {
            let theta0: Vec<f64> = self
                .domains
                .values()
                .map(|(lo, hi)| lo + start * (hi - lo))
                .collect();
            let Some(theta) = self.fit(&names, &partials, &pts, theta0) else {
                continue;
            };
            let inside = self.domains.values().zip(&theta).all(|((lo, hi), v)| {
                let slack = 1e-6 * (1.0 + (hi - lo).abs());
                *v >= lo - slack && *v <= hi + slack
            });
            if !inside {
                continue;
            }
            let theta: Vec<f64> = theta
                .iter()
                .map(|v| nice_const(*v).as_constant().unwrap_or(*v))
                .collect();
            let r = self.bind(&self.r, &theta);
            if !compare_on_domain(&r, &mt.r, &mt.space(), TRIALS, SEED, SYMBOLIC_TOL)?.pass {
                continue;
            }
            let mut lp = LadderPair {
                family: self.tag.clone(),
                index: DEFAULT_INDEX.to_string(),
                k: self.bind(&self.k, &theta),
                chi: self.bind(&self.chi, &theta),
                r: mt.r.clone(),
                lambda_shift: 0.0,
                index_map: (t.index != DEFAULT_INDEX).then(|| Expr::param(&t.index)),
                window: t.window,
                index_range: t.index_range,
                closes: false,
            };
            let space = lp.sample_space();
            if !consistency_identity(&lp, &space)?.pass {
                continue;
            }
            lp.closes = closure_identity(&lp, &space)?.pass;
            return Ok(Some(lp));
        }
        Ok(None)
    }

    fn fit(
        &self,
        names: &[String],
        partials: &[Expr],
        pts: &[(Bindings, f64)],
        mut theta: Vec<f64>,
    ) -> Option<Vec<f64>> {
        let n = names.len();
        let eval_at = |e: &Expr, b: &Bindings, th: &[f64]| {
            let mut b = b.clone();
            for (name, v) in names.iter().zip(th) {
                b = b.param(name, *v);
            }
            e.eval(&b).ok()
        };
        let cost = |th: &[f64]| -> Option<f64> {
            let mut c = 0.0;
            for (b, target) in pts {
                let d = eval_at(&self.r, b, th)? - target;
                c += d * d;
            }
            Some(c)
        };
        if n == 0 {
            return Some(theta);
        }
        let mut damping = 1e-3;
        let mut current = cost(&theta)?;
        for _ in 0..200 {
            if current < 1e-26 {
                break;
            }
            let mut jtj = vec![vec![0.0; n]; n];
            let mut jtf = vec![0.0; n];
            for (b, target) in pts {
                let f = eval_at(&self.r, b, &theta)? - target;
                let row: Option<Vec<f64>> =
                    partials.iter().map(|p| eval_at(p, b, &theta)).collect();
                let row = row?;
                for i in 0..n {
                    jtf[i] += row[i] * f;
                    for j in 0..n {
                        jtj[i][j] += row[i] * row[j];
                    }
                }
            }
            let mut improved = false;
            for _ in 0..30 {
                let mut a = jtj.clone();
                for (i, row) in a.iter_mut().enumerate() {
                    row[i] += damping * (1.0 + jtj[i][i]);
                }
                let rhs: Vec<f64> = jtf.iter().map(|v| -v).collect();
                let Some(step) = solve(a, rhs) else {
                    damping *= 10.0;
                    continue;
                };
                let trial: Vec<f64> = theta.iter().zip(&step).map(|(a, b)| a + b).collect();
                match cost(&trial) {
                    Some(c) if c < current => {
                        theta = trial;
                        current = c;
                        damping = (damping * 0.3).max(1e-12);
                        improved = true;
                        break;
                    }
                    _ => damping *= 10.0,
                }
            }
            if !improved {
                break;
            }
        }
        Some(theta)
    }
}

/// Gaussian elimination with partial pivoting.
fn solve(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Option<Vec<f64>> {
    let n = b.len();
    for col in 0..n {
        let pivot = (col..n).max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs()))?;
        if a[pivot][col].abs() < 1e-300 {
            return None;
        }
        a.swap(col, pivot);
        b.swap(col, pivot);
        let pivot_row = a[col].clone();
        for row in col + 1..n {
            let f = a[row][col] / pivot_row[col];
            for (k, p) in pivot_row.iter().enumerate().skip(col) {
                a[row][k] -= f * p;
            }
            b[row] -= f * b[col];
        }
    }
    let mut x = vec![0.0; n];
    for row in (0..n).rev() {
        let s: f64 = (row + 1..n).map(|k| a[row][k] * x[k]).sum();
        x[row] = (b[row] - s) / a[row][row];
    }
    x.iter().all(|v| v.is_finite()).then_some(x)
}

/// Extra ladder families loaded from JSON.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct FamilyCatalog {
    pub templates: Vec<FamilyTemplate>,
}

impl FamilyCatalog {
    pub fn from_json(text: &str) -> Result<Self> {
        let files: Vec<FamilyFile> =
            serde_json::from_str(text).map_err(|e| FactorizationError::Catalog(e.to_string()))?;
        let mut templates = Vec::new();
        for f in &files {
            if templates.iter().any(|t: &FamilyTemplate| t.tag == f.tag) {
                return Err(FactorizationError::Catalog(format!(
                    "duplicate tag `{}`",
                    f.tag
                )));
            }
            templates.push(FamilyTemplate::from_file(f)?);
        }
        Ok(FamilyCatalog { templates })
    }

    pub fn to_json(&self) -> String {
        let files: Vec<FamilyFile> = self.templates.iter().map(|t| t.to_file()).collect();
        serde_json::to_string_pretty(&files).expect("plain data")
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::equivalent_on_domain;
    use crate::factorization::to_second_canonical;
    use crate::ode::{builtin_registry, OdeOperator, ParamSpec};

    fn flat(
        c: &str,
        params: &[(&str, ParamSpec)],
        window: (f64, f64),
        index: Option<&str>,
    ) -> CanonicalForm {
        let params = params.iter().map(|(n, p)| (n.to_string(), *p)).collect();
        let mut o = OdeOperator::new(Expr::zero(), parse(c).unwrap(), params, window).unwrap();
        if let Some(i) = index {
            o = o.with_index_param(i).unwrap();
        }
        to_second_canonical(&o).unwrap()
    }

    fn m_range() -> ParamSpec {
        ParamSpec::ranged(1.0, 0.0, 3.0)
    }

    #[test]
    fn shifted_inverse_square() {
        let cf = flat(
            "-(m^2 - 1/4)/x^2 + 1",
            &[("m", m_range())],
            (0.5, 10.0),
            Some("m"),
        );
        let v = classify_factorization(&cf);
        assert!(v.factorizable, "{}", v.reason);
        assert_eq!(v.matched_family.as_deref(), Some("inverse-square"));
        let lp = v.ladder.unwrap();
        let sp = lp.sample_space();
        assert!(equivalent_on_domain(&lp.k, &parse("(m - 1/2)/x").unwrap(), &sp, 32, 1).unwrap());
        assert!(lp.chi.is_zero());
        assert_eq!(lp.lambda_shift, 1.0);
        assert!(lp.closes);
        for m in [0.0, 0.5, 1.0, 2.0, 3.0] {
            let at = SampleSpace::new(0.5, 10.0).with_fixed("m", m);
            assert!(consistency_identity(&lp, &at).unwrap().pass, "m = {m}");
        }
        // The identity fixes χ: any other constant breaks it.
        let mut wrong = lp.clone();
        wrong.chi = Expr::float(0.1);
        assert!(!consistency_identity(&wrong, &sp).unwrap().pass);
    }

    #[test]
    fn exponential_potential_is_rejected() {
        let cf = flat("exp(x)/x", &[], (0.5, 5.0), None);
        let v = classify_factorization(&cf);
        assert!(!v.factorizable);
        assert!(v.ladder.is_none());
        assert_eq!(v.reason, "r outside catalog families");
    }

    #[test]
    fn constant_potential() {
        let cf = flat("5", &[], (0.0, 1.0), None);
        let v = classify_factorization(&cf);
        assert!(v.factorizable);
        assert_eq!(v.matched_family.as_deref(), Some("constant"));
        let lp = v.ladder.unwrap();
        assert!(lp.k.is_zero());
        assert_eq!(lp.chi_at(2.0).unwrap(), -5.0);
    }

    #[test]
    fn oscillator_potential() {
        let cf = flat("2*m + 1 - x^2", &[("m", m_range())], (-4.0, 4.0), Some("m"));
        let v = classify_factorization(&cf);
        assert_eq!(
            v.matched_family.as_deref(),
            Some("quadratic"),
            "{}",
            v.reason
        );
        let lp = v.ladder.unwrap();
        assert!(lp.closes);
        assert_eq!(lp.k_at(2.0, 0.0).unwrap(), 2.0);
        assert!((lp.chi_at(1.0).unwrap() + 2.0).abs() < 1e-12);
    }

    #[test]
    fn every_bessel_and_euler_row_is_inverse_square() {
        let reg = builtin_registry();
        for row in crate::ode::BESSEL_EULER_ROWS {
            let e = reg.get(row.name).unwrap();
            let cf = to_second_canonical(&e.operator).unwrap();
            let v = classify_factorization(&cf);
            assert_eq!(
                v.matched_family.as_deref(),
                Some("inverse-square"),
                "{}: {}",
                row.name,
                v.reason
            );
            let lp = v.ladder.unwrap();
            assert!(consistency_identity(&lp, &lp.sample_space()).unwrap().pass);
            assert_eq!(lp.lambda_shift, row.beta());
        }
        let gb = reg.get("general-bessel").unwrap();
        let v = classify_factorization(&to_second_canonical(&gb.operator).unwrap());
        assert!(v.factorizable);
    }

    #[test]
    fn legendre_is_not_factorizable_in_x() {
        let reg = builtin_registry();
        let e = reg.get("associated-legendre").unwrap();
        let v = classify_factorization(&to_second_canonical(&e.operator).unwrap());
        assert!(!v.factorizable);
    }

    #[test]
    fn catalog_template_is_fitted() {
        let json = r#"[{
            "tag": "morse",
            "r_template": "-a^2*exp(-2*x) + a*(2*m + 1)*exp(-x)",
            "k_template": "m - a*exp(-x)",
            "chi_template": "-m^2",
            "placeholder_domains": {"a": [0.5, 3]}
        }]"#;
        let cat = FamilyCatalog::from_json(json).unwrap();
        let cf = flat(
            "-4*exp(-2*x) + 2*(2*m + 1)*exp(-x)",
            &[("m", m_range())],
            (-1.0, 3.0),
            Some("m"),
        );
        assert!(!classify_factorization(&cf).factorizable);
        let v = classify_with_catalog(&cf, &cat);
        assert_eq!(v.matched_family.as_deref(), Some("morse"), "{}", v.reason);
        let lp = v.ladder.unwrap();
        assert!(equivalent_on_domain(
            &lp.k,
            &parse("m - 2*exp(-x)").unwrap(),
            &lp.sample_space(),
            32,
            2
        )
        .unwrap());
        let back = FamilyCatalog::from_json(&cat.to_json()).unwrap();
        assert_eq!(back, cat);
    }

    #[test]
    fn catalog_errors() {
        let missing =
            r#"[{"tag": "t", "r_template": "b/x^2", "k_template": "0", "chi_template": "0"}]"#;
        assert!(matches!(
            FamilyCatalog::from_json(missing),
            Err(FactorizationError::Catalog(_))
        ));
        let chi_x = r#"[{"tag": "t", "r_template": "1", "k_template": "0", "chi_template": "x"}]"#;
        assert!(FamilyCatalog::from_json(chi_x).is_err());
        assert!(FamilyCatalog::from_json("{").is_err());
    }
}
