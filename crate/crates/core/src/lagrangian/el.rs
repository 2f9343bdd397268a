//! Euler-Lagrange residuals along paths, null-Lagrangian and gauge
//! batteries, and the third Helmholtz condition.

use super::{CheckOutcome, GaugeFunction, LagrangianError, LagrangianKind, LagrangianSpec, Result};
use crate::expr::{
    compare_on_domain, parse, Bindings, Comparison, Expr, ExprError, SampleSpace, Symbol,
    SYMBOLIC_TOL,
};
use crate::ode::{OdeOperator, Trajectory};

/// Null Lagrangians must satisfy the EL equation to this relative level.
pub const EL_NULL_TOL: f64 = 1e-10;
/// `dΦ/dx` versus the null Lagrangian.
pub const GAUGE_TOL: f64 = 1e-8;

/// Anything that supplies `(y, y', y'')` at `x`.
pub trait Path {
    fn state(&self, x: f64) -> Result<(f64, f64, f64)>;
    fn label(&self) -> String;
}

impl Path for Trajectory {
    fn state(&self, x: f64) -> Result<(f64, f64, f64)> {
        Ok(Trajectory::state(self, x)?)
    }

    fn label(&self) -> String {
        let (x0, y0, yp0) = self.initial();
        format!("solution through ({x0}, {y0}, {yp0})")
    }
}

/// A smooth closed-form path with exact derivatives.
#[derive(Debug, Clone, PartialEq)]
pub struct TestPath {
    label: String,
    y: Expr,
    yp: Expr,
    ypp: Expr,
}

impl TestPath {
    pub fn new(text: &str) -> Result<Self> {
        let y = parse(text)?;
        if y.symbols().iter().any(|s| *s != Symbol::X) {
            return Err(ExprError::InvalidParameter(format!(
                "test path `{text}` must depend on x only"
            ))
            .into());
        }
        let yp = y.differentiate(&Symbol::X)?;
        let ypp = yp.differentiate(&Symbol::X)?;
        Ok(TestPath {
            label: text.to_string(),
            y,
            yp,
            ypp,
        })
    }
}

impl Path for TestPath {
    fn state(&self, x: f64) -> Result<(f64, f64, f64)> {
        let b = Bindings::new().at(x);
        Ok((self.y.eval(&b)?, self.yp.eval(&b)?, self.ypp.eval(&b)?))
    }

    fn label(&self) -> String {
        self.label.clone()
    }
}

/// Paths plus the number of interior sample points per path.
#[derive(Debug, Clone, PartialEq)]
pub struct TestPathSet {
    pub paths: Vec<TestPath>,
    pub points: usize,
}

impl TestPathSet {
    /// `1, x, x², sin x, cos 2x, e^(x/5), x sin x, 1/(1+x²)` at 16 points.
    pub fn standard() -> Self {
        let paths = [
            "1",
            "x",
            "x^2",
            "sin(x)",
            "cos(2*x)",
            "exp(x/5)",
            "x*sin(x)",
            "1/(1 + x^2)",
        ]
        .iter()
        .map(|t| TestPath::new(t).expect("static path"))
        .collect();
        TestPathSet { paths, points: 16 }
    }

    pub fn single(text: &str) -> Result<Self> {
        Ok(TestPathSet {
            paths: vec![TestPath::new(text)?],
            points: 16,
        })
    }
}

/// `n` points strictly inside `[lo, hi]` (cell midpoints).
pub fn interior_points(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    (0..n)
        .map(|i| lo + (i as f64 + 0.5) * (hi - lo) / n as f64)
        .collect()
}

/// Symbolic partials needed for `d/dx(∂L/∂y') - ∂L/∂y`, with parameters
/// bound to their declared values.
#[derive(Debug, Clone)]
pub struct ElForm {
    lp_x: Expr,
    lp_y: Expr,
    lp_yp: Expr,
    lp_v: Expr,
    lp_vp: Expr,
    ly: Expr,
    kind: LagrangianKind,
    aux: Option<Trajectory>,
    b: Expr,
    c: Expr,
}

impl ElForm {
    pub fn new(spec: &LagrangianSpec) -> Result<Self> {
        let params = spec.source().bindings().params;
        let body = spec.body().bind_params(&params);
        let lp = body.partial(&Symbol::Yp);
        let (b, c) = spec.source().bound_coefficients();
        let uses_aux = body.contains(&Symbol::Vbar) || body.contains(&Symbol::VbarP);
        if uses_aux && spec.auxiliary().is_none() {
            return Err(LagrangianError::MissingAuxiliary);
        }
        Ok(ElForm {
            lp_x: lp.partial(&Symbol::X),
            lp_y: lp.partial(&Symbol::Y),
            lp_yp: lp.partial(&Symbol::Yp),
            lp_v: lp.partial(&Symbol::Vbar),
            lp_vp: lp.partial(&Symbol::VbarP),
            ly: body.partial(&Symbol::Y),
            kind: spec.kind(),
            aux: if uses_aux {
                spec.auxiliary().cloned()
            } else {
                None
            },
            b,
            c,
        })
    }

    /// Residual and its scale `1 + Σ|terms|` at one point of a path.
    pub fn residual(&self, x: f64, y: f64, yp: f64, ypp: f64) -> Result<(f64, f64)> {
        let mut bind = Bindings::new().at(x).path(y, yp).second(ypp);
        let mut aux = None;
        if let Some(v) = &self.aux {
            let (vb, vbp, _) = v.state(x)?;
            if self.kind == LagrangianKind::Nonstandard {
                let w = yp * vb - y * vbp;
                if w.abs() <= 1e-10 * ((yp * vb).abs() + (y * vbp).abs()) {
                    return Err(LagrangianError::DegeneratePair { x });
                }
            }
            // vbar'' from the equation vbar solves
            let at = Bindings::new().at(x);
            let vbpp = -self.b.eval(&at)? * vbp - self.c.eval(&at)? * vb;
            bind = bind.aux(vb, vbp);
            aux = Some((vbp, vbpp));
        }
        let mut terms = vec![
            self.lp_x.eval(&bind)?,
            self.lp_y.eval(&bind)? * yp,
            self.lp_yp.eval(&bind)? * ypp,
            -self.ly.eval(&bind)?,
        ];
        if let Some((vbp, vbpp)) = aux {
            terms.push(self.lp_v.eval(&bind)? * vbp);
            terms.push(self.lp_vp.eval(&bind)? * vbpp);
        }
        let r: f64 = terms.iter().sum();
        let scale = 1.0 + terms.iter().map(|t| t.abs()).sum::<f64>();
        Ok((r, scale))
    }

    pub fn residual_on(&self, path: &dyn Path, x: f64) -> Result<(f64, f64)> {
        let (y, yp, ypp) = path.state(x)?;
        self.residual(x, y, yp, ypp)
    }

    /// Worst `|residual| / scale` over interior points of each path.
    pub fn battery(
        &self,
        window: (f64, f64),
        paths: &TestPathSet,
        tol: f64,
    ) -> Result<CheckOutcome> {
        let mut out = CheckOutcome::new(tol);
        for p in &paths.paths {
            for x in interior_points(window.0, window.1, paths.points) {
                let (r, s) = self.residual_on(p, x)?;
                out.observe(r, s, x, &p.label());
            }
        }
        Ok(out)
    }
}

/// `d/dx(∂L/∂y') - ∂L/∂y` at `x`, the total derivative expanded through
/// the path's `y'` and `y''` (and the auxiliary solution for `vbar`).
pub fn euler_lagrange_residual(spec: &LagrangianSpec, path: &dyn Path, x: f64) -> Result<f64> {
    Ok(ElForm::new(spec)?.residual_on(path, x)?.0)
}

/// True iff the EL residual is at most `1e-10` of its scale at every
/// sample point of every path.
pub fn el_identically_zero(spec: &LagrangianSpec, paths: &TestPathSet) -> bool {
    let Ok(form) = ElForm::new(spec) else {
        return false;
    };
    match form.battery(spec.source().window(), paths, EL_NULL_TOL) {
        Ok(out) => out.pass,
        Err(_) => false,
    }
}

/// `|dΦ/dx - L_null| <= 1e-8 (1 + |L_null|)` along the paths.
pub fn gauge_check(g: &GaugeFunction, paths: &TestPathSet) -> Result<CheckOutcome> {
    gauge_check_against(g, &g.target, &g.source, paths, GAUGE_TOL)
}

/// As [`gauge_check`] but against an arbitrary null-Lagrangian body.
pub fn gauge_check_against(
    g: &GaugeFunction,
    null_body: &Expr,
    o: &OdeOperator,
    paths: &TestPathSet,
    tol: f64,
) -> Result<CheckOutcome> {
    let params = o.bindings().params;
    let phi = g.phi.bind_params(&params);
    let phi_x = phi.partial(&Symbol::X);
    let phi_y = phi.partial(&Symbol::Y);
    let target = null_body.bind_params(&params);
    let (lo, hi) = o.window();
    let mut out = CheckOutcome::new(tol);
    for p in &paths.paths {
        for x in interior_points(lo, hi, paths.points) {
            let (y, yp, _) = p.state(x)?;
            let b = Bindings::new().at(x).path(y, yp);
            let d = phi_x.eval(&b)? + phi_y.eval(&b)? * yp;
            let l = target.eval(&b)?;
            out.observe(d - l, 1.0 + l.abs(), x, &p.label());
        }
    }
    Ok(out)
}

fn helmholtz(f: &Expr, space: &SampleSpace, closure: Option<&OdeOperator>) -> Result<Comparison> {
    let g = f.partial(&Symbol::Ypp);
    if g.contains(&Symbol::Ypp) {
        return Err(ExprError::InvalidParameter(
            "expression is not linear in the second derivative".into(),
        )
        .into());
    }
    let mut dg = vec![
        g.partial(&Symbol::X),
        Expr::mul(g.partial(&Symbol::Y), Expr::yp()),
        Expr::mul(g.partial(&Symbol::Yp), Expr::ypp()),
    ];
    let uses_aux = g.contains(&Symbol::Vbar) || g.contains(&Symbol::VbarP);
    if uses_aux {
        let Some(o) = closure else {
            return Err(LagrangianError::MissingAuxiliary);
        };
        let vbpp = Expr::neg(Expr::add(
            Expr::mul(o.b().clone(), Expr::vbarp()),
            Expr::mul(o.c_eff(), Expr::vbar()),
        ));
        dg.push(Expr::mul(g.partial(&Symbol::Vbar), Expr::vbarp()));
        dg.push(Expr::mul(g.partial(&Symbol::VbarP), vbpp));
    }
    Ok(compare_on_domain(
        &f.partial(&Symbol::Yp),
        &Expr::sum(dg),
        space,
        64,
        0,
        SYMBOLIC_TOL,
    )?)
}

/// Third Helmholtz condition for `F(x, y, y', y'')` linear in `y''`:
/// `∂F/∂y' ≡ d/dx(∂F/∂y'')`, certified by sampled equality.
pub fn helmholtz_third_condition(f: &Expr, space: &SampleSpace) -> Result<Comparison> {
    helmholtz(f, space, None)
}

/// As [`helmholtz_third_condition`] for expressions that also involve the
/// auxiliary solution `vbar` of `o`; its second derivative is eliminated
/// through the equation.
pub fn helmholtz_third_condition_closed(
    f: &Expr,
    space: &SampleSpace,
    o: &OdeOperator,
) -> Result<Comparison> {
    helmholtz(f, space, Some(o))
}
