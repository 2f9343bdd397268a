//! Second-order linear operators `y'' + B y' + C y (+ λ y)`, the semigroup
//! addition, the named-equation catalog, residuals and trajectories.

mod catalog;
mod integrate;

pub use catalog::{
    bessel_form, builtin_registry, rational_label, table_name, CatalogEntry, ParamDecl, Registry,
    RegistryEntryFile, TableRow, ADDITION_ROWS, BESSEL_EULER_ROWS,
};
pub use integrate::{integrate, integrate_with, IntegrateOptions, Trajectory};

use crate::expr::{
    antiderivative, exp_of_primitive, Bindings, Expr, ExprError, SampleSpace, Symbol,
};
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum OdeError {
    #[error(transparent)]
    Expr(#[from] ExprError),
    #[error("invalid operator: {0}")]
    InvalidOperator(String),
    #[error("domain windows [{0}, {1}] and [{2}, {3}] do not overlap")]
    EmptyWindow(f64, f64, f64, f64),
    #[error("incompatible declarations for parameter `{0}`")]
    IncompatibleParams(String),
    #[error("unknown equation `{0}`")]
    UnknownEquation(String),
    #[error("duplicate equation name `{0}`")]
    DuplicateName(String),
    #[error("registry: {0}")]
    Registry(String),
    #[error("step size underflow; last good x = {last_x}")]
    StepUnderflow { last_x: f64 },
    #[error("x = {x} outside [{lo}, {hi}]")]
    OutsideWindow { x: f64, lo: f64, hi: f64 },
}

pub type Result<T, E = OdeError> = std::result::Result<T, E>;

/// A declared parameter: the value used for numeric work and, optionally,
/// the range property batteries sample from.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ParamSpec {
    pub value: f64,
    pub range: Option<(f64, f64)>,
}

impl ParamSpec {
    pub fn fixed(value: f64) -> Self {
        ParamSpec { value, range: None }
    }

    pub fn ranged(value: f64, lo: f64, hi: f64) -> Self {
        ParamSpec {
            value,
            range: Some((lo, hi)),
        }
    }

    /// Sampling range; a fixed parameter has the degenerate range `[v, v]`.
    pub fn sample_range(&self) -> (f64, f64) {
        self.range.unwrap_or((self.value, self.value))
    }
}

/// How two operators combine.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AdditionMode {
    /// Halved sums of the coefficients.
    #[default]
    Average,
    /// Plain sums; associative.
    Sum,
}

impl FromStr for AdditionMode {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "average" => Ok(AdditionMode::Average),
            "sum" => Ok(AdditionMode::Sum),
            other => Err(format!("unknown mode `{other}` (expected average|sum)")),
        }
    }
}

impl fmt::Display for AdditionMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            AdditionMode::Average => "average",
            AdditionMode::Sum => "sum",
        })
    }
}

/// `D y = y'' + B(x) y' + C(x) y + λ y`.
#[derive(Debug, Clone, PartialEq)]
pub struct OdeOperator {
    b: Expr,
    c: Expr,
    params: BTreeMap<String, ParamSpec>,
    lambda: f64,
    window: (f64, f64),
    index_param: Option<String>,
}

const POLE_SAMPLES: usize = 257;

impl OdeOperator {
    /// Validates that `B` and `C` are free of path symbols, every parameter
    /// is declared, and both coefficients evaluate finitely across the
    /// window (endpoints included).
    pub fn new(
        b: Expr,
        c: Expr,
        params: BTreeMap<String, ParamSpec>,
        window: (f64, f64),
    ) -> Result<Self> {
        let op = OdeOperator {
            b,
            c,
            params,
            lambda: 0.0,
            window,
            index_param: None,
        };
        op.validate()?;
        Ok(op)
    }

    pub fn with_lambda(mut self, lambda: f64) -> Result<Self> {
        if !lambda.is_finite() {
            return Err(OdeError::InvalidOperator(format!("lambda = {lambda}")));
        }
        self.lambda = lambda;
        Ok(self)
    }

    /// Marks the parameter that plays the role of the ladder index `m`.
    pub fn with_index_param(mut self, name: &str) -> Result<Self> {
        if !self.params.contains_key(name) {
            return Err(OdeError::InvalidOperator(format!(
                "index parameter `{name}` is not declared"
            )));
        }
        self.index_param = Some(name.to_string());
        Ok(self)
    }

    pub fn with_window(mut self, lo: f64, hi: f64) -> Result<Self> {
        self.window = (lo, hi);
        self.validate()?;
        Ok(self)
    }

    /// Replaces the declared value of a parameter.
    pub fn with_param_value(mut self, name: &str, value: f64) -> Result<Self> {
        match self.params.get_mut(name) {
            Some(p) => p.value = value,
            None => {
                return Err(OdeError::InvalidOperator(format!(
                    "parameter `{name}` is not declared"
                )))
            }
        }
        self.validate()?;
        Ok(self)
    }

    /// The same equation written as `y'' + B y' + (C - s) y + (λ + s) y`.
    pub fn split_eigenvalue(&self, s: f64) -> Result<Self> {
        let mut out = self.clone();
        out.c = Expr::sub(self.c.clone(), Expr::float(s));
        out.lambda = self.lambda + s;
        out.validate()?;
        Ok(out)
    }

    fn validate(&self) -> Result<()> {
        let (lo, hi) = self.window;
        if !(lo.is_finite() && hi.is_finite() && lo < hi) {
            return Err(OdeError::InvalidOperator(format!(
                "window [{lo}, {hi}] is not a proper interval"
            )));
        }
        for (label, e) in [("B", &self.b), ("C", &self.c)] {
            if let Some(s) = e.symbols().into_iter().find(Symbol::is_dependent) {
                return Err(OdeError::InvalidOperator(format!(
                    "{label} depends on `{}`",
                    s.name()
                )));
            }
            for p in e.params() {
                if !self.params.contains_key(&p) {
                    return Err(OdeError::InvalidOperator(format!(
                        "{label} uses undeclared parameter `{p}`"
                    )));
                }
            }
        }
        for (name, spec) in &self.params {
            crate::expr::validate_param_name(name)?;
            if !spec.value.is_finite() {
                return Err(OdeError::InvalidOperator(format!(
                    "parameter `{name}` is not finite"
                )));
            }
            if let Some((a, b)) = spec.range {
                if !(a <= b) {
                    return Err(OdeError::InvalidOperator(format!(
                        "parameter `{name}` has empty range [{a}, {b}]"
                    )));
                }
            }
        }
        let bind = self.bindings();
        let b = self.b.bind_params(&bind.params);
        let c = self.c.bind_params(&bind.params);
        for i in 0..POLE_SAMPLES {
            let x = lo + (hi - lo) * i as f64 / (POLE_SAMPLES - 1) as f64;
            let at = Bindings::new().at(x);
            for (label, e) in [("B", &b), ("C", &c)] {
                e.eval(&at).map_err(|err| {
                    OdeError::InvalidOperator(format!(
                        "{label} is singular in the window near x = {x}: {err}"
                    ))
                })?;
            }
        }
        Ok(())
    }

    pub fn b(&self) -> &Expr {
        &self.b
    }

    pub fn c(&self) -> &Expr {
        &self.c
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn window(&self) -> (f64, f64) {
        self.window
    }

    pub fn params(&self) -> &BTreeMap<String, ParamSpec> {
        &self.params
    }

    pub fn index_param(&self) -> Option<&str> {
        self.index_param.as_deref()
    }

    /// `C + λ`, the full coefficient of `y`.
    pub fn c_eff(&self) -> Expr {
        if self.lambda == 0.0 {
            self.c.clone()
        } else {
            Expr::add(self.c.clone(), Expr::float(self.lambda))
        }
    }

    /// `B` is identically zero (checked structurally and on samples).
    pub fn b_vanishes(&self) -> bool {
        if self.b.is_zero() {
            return true;
        }
        crate::expr::equivalent_on_domain(&self.b, &Expr::zero(), &self.sample_space(), 64, 0)
            .unwrap_or(false)
    }

    /// Declared parameter values.
    pub fn bindings(&self) -> Bindings {
        Bindings::with_params(
            self.params
                .iter()
                .map(|(k, v)| (k.clone(), v.value))
                .collect(),
        )
    }

    /// Window plus declared parameter ranges.
    pub fn sample_space(&self) -> SampleSpace {
        let mut sp = SampleSpace::new(self.window.0, self.window.1);
        for (k, v) in &self.params {
            let (a, b) = v.sample_range();
            sp = sp.with_param(k, a, b);
        }
        sp
    }

    /// Same as [`sample_space`](Self::sample_space) but with every
    /// parameter pinned to its declared value.
    pub fn fixed_space(&self) -> SampleSpace {
        let mut sp = SampleSpace::new(self.window.0, self.window.1);
        for (k, v) in &self.params {
            sp = sp.with_fixed(k, v.value);
        }
        sp
    }

    /// `B` and `C + λ` with declared parameter values substituted.
    pub fn bound_coefficients(&self) -> (Expr, Expr) {
        let p = &self.bindings().params;
        (self.b.bind_params(p), self.c_eff().bind_params(p))
    }

    /// `exp(factor * int B)`, anchored at the window's left end. When the
    /// antiderivative is closed-form the anchor constant is dropped, so that
    /// `B = α/x` gives exactly `x^α` and the Legendre `B` gives `1 - x²`.
    pub fn envelope(&self, factor: &Expr) -> Result<Expr> {
        if self.b.is_zero() {
            return Ok(Expr::one());
        }
        let (lo, hi) = self.window;
        let f = antiderivative(&self.b, lo)?;
        let env = match f.primitive() {
            Some(p) => exp_of_primitive(p, factor),
            None => Expr::exp(Expr::mul(factor.clone(), f.as_expr().clone())),
        };
        let bind = self.bindings();
        for i in 0..=32 {
            let x = lo + (hi - lo) * i as f64 / 32.0;
            let v = env.eval(&bind.clone().at(x))?;
            if !(v > 0.0) {
                return Err(OdeError::InvalidOperator(format!(
                    "envelope exp({factor} int B) is not positive at x = {x}"
                )));
            }
        }
        Ok(env)
    }

    fn check_x(&self, x: f64) -> Result<()> {
        let (lo, hi) = self.window;
        if x < lo || x > hi || x.is_nan() {
            return Err(OdeError::OutsideWindow { x, lo, hi });
        }
        Ok(())
    }
}

impl fmt::Display for OdeOperator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "B = {}, C = {}", self.b, self.c)?;
        if self.lambda != 0.0 {
            write!(f, ", lambda = {}", self.lambda)?;
        }
        Ok(())
    }
}

/// Combines two operators coefficient-wise. Windows are intersected;
/// parameters shared by name must carry identical declarations.
pub fn semigroup_add(
    o1: &OdeOperator,
    o2: &OdeOperator,
    mode: AdditionMode,
) -> Result<OdeOperator> {
    let lo = o1.window.0.max(o2.window.0);
    let hi = o1.window.1.min(o2.window.1);
    if !(lo < hi) {
        return Err(OdeError::EmptyWindow(
            o1.window.0,
            o1.window.1,
            o2.window.0,
            o2.window.1,
        ));
    }
    let mut params = o1.params.clone();
    for (k, v) in &o2.params {
        match params.get(k) {
            Some(existing) if existing != v => return Err(OdeError::IncompatibleParams(k.clone())),
            _ => {
                params.insert(k.clone(), *v);
            }
        }
    }
    let combine = |a: &Expr, b: &Expr| match mode {
        AdditionMode::Average => Expr::mul(Expr::half(), Expr::add(a.clone(), b.clone())),
        AdditionMode::Sum => Expr::add(a.clone(), b.clone()),
    };
    let lambda = match mode {
        AdditionMode::Average => 0.5 * (o1.lambda + o2.lambda),
        AdditionMode::Sum => o1.lambda + o2.lambda,
    };
    let index_param = match (&o1.index_param, &o2.index_param) {
        (Some(a), Some(b)) if a != b => None,
        (Some(a), _) => Some(a.clone()),
        (None, b) => b.clone(),
    };
    let out = OdeOperator {
        b: combine(&o1.b, &o2.b),
        c: combine(&o1.c, &o2.c),
        params,
        lambda,
        window: (lo, hi),
        index_param,
    };
    // Closure is constructive, but the result goes through the same
    // validation as any other operator.
    out.validate()?;
    Ok(out)
}

/// `y'' + B y' + C y + λ y` at `x`, with declared parameter values.
pub fn ode_residual(o: &OdeOperator, y: f64, yp: f64, ypp: f64, x: f64) -> Result<f64> {
    o.check_x(x)?;
    let b = o.bindings().at(x);
    let bv = o.b.eval(&b)?;
    let cv = o.c.eval(&b)?;
    Ok(ypp + bv * yp + cv * y + o.lambda * y)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::{equivalent_on_domain, parse};

    fn op(b: &str, c: &str, params: &[(&str, f64)], window: (f64, f64)) -> OdeOperator {
        let params = params
            .iter()
            .map(|(k, v)| (k.to_string(), ParamSpec::fixed(*v)))
            .collect();
        OdeOperator::new(parse(b).unwrap(), parse(c).unwrap(), params, window).unwrap()
    }

    #[test]
    fn construction_rejects_path_symbols_and_poles() {
        let e = OdeOperator::new(
            parse("y").unwrap(),
            Expr::zero(),
            BTreeMap::new(),
            (0.0, 1.0),
        );
        assert!(matches!(e, Err(OdeError::InvalidOperator(_))));
        let e = OdeOperator::new(
            parse("1/x").unwrap(),
            Expr::zero(),
            BTreeMap::new(),
            (-1.0, 1.0),
        );
        assert!(matches!(e, Err(OdeError::InvalidOperator(_))));
        let e = OdeOperator::new(
            parse("mu").unwrap(),
            Expr::zero(),
            BTreeMap::new(),
            (0.0, 1.0),
        );
        assert!(matches!(e, Err(OdeError::InvalidOperator(_))));
        let e = OdeOperator::new(Expr::zero(), Expr::zero(), BTreeMap::new(), (1.0, 1.0));
        assert!(matches!(e, Err(OdeError::InvalidOperator(_))));
    }

    #[test]
    fn residual_examples() {
        let id = op("0", "0", &[], (-10.0, 10.0));
        assert_eq!(ode_residual(&id, 0.3, 1.0, 0.0, 0.3).unwrap(), 0.0);
        let euler = op("1/x", "-1/x^2", &[], (0.5, 10.0));
        assert_eq!(ode_residual(&euler, 2.0, 1.0, 0.0, 2.0).unwrap(), 0.0);
        let h = op("0", "1", &[], (-10.0, 10.0));
        let x = 1.0f64;
        assert!(
            ode_residual(&h, x.sin(), x.cos(), -x.sin(), x)
                .unwrap()
                .abs()
                < 1e-15
        );
        assert!(matches!(
            ode_residual(&h, 0.0, 0.0, 0.0, 11.0),
            Err(OdeError::OutsideWindow { .. })
        ));
    }

    #[test]
    fn average_of_self_is_self() {
        let o = op("1/x", "1 - mu^2/x^2", &[("mu", 1.0)], (0.5, 10.0));
        let s = semigroup_add(&o, &o, AdditionMode::Average).unwrap();
        let sp = o.sample_space();
        assert!(equivalent_on_domain(s.b(), o.b(), &sp, 32, 1).unwrap());
        assert!(equivalent_on_domain(s.c(), o.c(), &sp, 32, 1).unwrap());
    }

    #[test]
    fn windows_intersect_or_fail() {
        let a = op("0", "1", &[], (0.0, 2.0));
        let b = op("0", "1", &[], (1.0, 3.0));
        assert_eq!(
            semigroup_add(&a, &b, AdditionMode::Sum).unwrap().window(),
            (1.0, 2.0)
        );
        let c = op("0", "1", &[], (2.5, 3.0));
        assert!(matches!(
            semigroup_add(&a, &c, AdditionMode::Sum),
            Err(OdeError::EmptyWindow(..))
        ));
    }

    #[test]
    fn conflicting_parameters_are_rejected() {
        let a = op("0", "mu", &[("mu", 1.0)], (0.0, 2.0));
        let b = op("0", "mu", &[("mu", 2.0)], (0.0, 2.0));
        assert_eq!(
            semigroup_add(&a, &b, AdditionMode::Average),
            Err(OdeError::IncompatibleParams("mu".into()))
        );
    }

    #[test]
    fn lambda_combines_with_the_mode() {
        let a = op("0", "1", &[], (0.0, 2.0)).with_lambda(2.0).unwrap();
        let b = op("0", "1", &[], (0.0, 2.0)).with_lambda(4.0).unwrap();
        assert_eq!(
            semigroup_add(&a, &b, AdditionMode::Average)
                .unwrap()
                .lambda(),
            3.0
        );
        assert_eq!(
            semigroup_add(&a, &b, AdditionMode::Sum).unwrap().lambda(),
            6.0
        );
    }

    #[test]
    fn eigenvalue_split_keeps_the_equation() {
        let o = op("1/x", "1 - mu^2/x^2", &[("mu", 1.5)], (0.5, 10.0));
        let s = o.split_eigenvalue(1.0).unwrap();
        assert_eq!(s.lambda(), 1.0);
        for x in [0.7, 3.0, 9.0] {
            let r1 = ode_residual(&o, 1.2, -0.4, 0.3, x).unwrap();
            let r2 = ode_residual(&s, 1.2, -0.4, 0.3, x).unwrap();
            assert!((r1 - r2).abs() < 1e-14);
        }
    }

    #[test]
    fn mode_parses() {
        assert_eq!("sum".parse::<AdditionMode>().unwrap(), AdditionMode::Sum);
        assert!("mean".parse::<AdditionMode>().is_err());
    }
}
