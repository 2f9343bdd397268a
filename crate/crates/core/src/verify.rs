//! The verification battery behind `verify`: per-operator checks plus the
//! table, oracle and plane-wave checks, collected into a report.

use crate::expr::{compare_on_domain, parse, Comparison, Expr, SampleSpace};
use crate::factorization::{
    apply_ladder, bessel_j, bessel_self_check, classify_factorization, consistency_identity,
    plane_wave_bessel_coefficients, plane_wave_irrep_check, proportionality, to_second_canonical,
    LadderDirection, SampledFunction,
};
use crate::lagrangian::{
    default_vbar, envelope_es, gauge_function, gauge_max_minus_mid, interior_points,
    nonstandard_check, nonstandard_lagrangian, null_lagrangian, prop1_constraints,
    riccati_solution, standard_lagrangian, CheckOutcome, ElForm, LagrangianKind, Path, TestPathSet,
    EL_NULL_TOL, GAUGE_TOL,
};
use crate::ode::{
    builtin_registry, integrate, semigroup_add, AdditionMode, CatalogEntry, OdeOperator, Registry,
    ADDITION_ROWS,
};
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::fmt;

pub const PLUMBING: &str = "plumbing";

const PAIRWISE_TOL: f64 = 1e-8;
const RICCATI_TOL: f64 = 1e-6;
const NONSTANDARD_TOL: f64 = 1e-5;
const CANONICAL_TOL: f64 = 1e-6;
const LADDER_TOL: f64 = 1e-5;
const POINTS: usize = 64;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerifyConfig {
    pub seed: u64,
    /// Relative EL residual along numeric solutions.
    pub tol_el: f64,
    /// Sampled-equality tolerance.
    pub tol_sym: f64,
    pub trials: usize,
    pub a1: f64,
    pub a2: f64,
}

impl Default for VerifyConfig {
    fn default() -> Self {
        VerifyConfig {
            seed: 0,
            tol_el: 1e-6,
            tol_sym: crate::expr::SYMBOLIC_TOL,
            trials: 64,
            a1: 1.0,
            a2: 1.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Status {
    Pass,
    Fail,
}

impl fmt::Display for Status {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Status::Pass => "pass",
            Status::Fail => "fail",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckRecord {
    pub check_id: String,
    /// The claim being checked, or `plumbing`.
    pub anchor: String,
    pub status: Status,
    /// Normalized worst residual; absent when the check could not run.
    pub worst_residual: Option<f64>,
    pub tolerance: f64,
    pub witness: String,
}

impl CheckRecord {
    pub fn passed(&self) -> bool {
        self.status == Status::Pass
    }

    pub fn from_outcome(id: String, anchor: &str, o: &CheckOutcome) -> Self {
        CheckRecord {
            check_id: id,
            anchor: anchor.to_string(),
            status: if o.pass { Status::Pass } else { Status::Fail },
            worst_residual: Some(o.normalized),
            tolerance: o.tolerance,
            witness: if o.witness_x.is_finite() {
                format!("x = {}: {}", o.witness_x, o.witness)
            } else {
                o.witness.clone()
            },
        }
    }

    pub fn from_comparison(id: String, anchor: &str, c: &Comparison) -> Self {
        CheckRecord {
            check_id: id,
            anchor: anchor.to_string(),
            status: if c.pass { Status::Pass } else { Status::Fail },
            worst_residual: Some(c.worst),
            tolerance: c.tolerance,
            witness: format!("x = {}: lhs = {:e}, rhs = {:e}", c.witness_x, c.lhs, c.rhs),
        }
    }

    pub fn error(id: String, anchor: &str, tol: f64, e: impl fmt::Display) -> Self {
        CheckRecord {
            check_id: id,
            anchor: anchor.to_string(),
            status: Status::Fail,
            worst_residual: None,
            tolerance: tol,
            witness: e.to_string(),
        }
    }

    pub fn scalar(id: String, anchor: &str, worst: f64, tol: f64, witness: String) -> Self {
        CheckRecord {
            check_id: id,
            anchor: anchor.to_string(),
            status: if worst <= tol {
                Status::Pass
            } else {
                Status::Fail
            },
            worst_residual: Some(worst),
            tolerance: tol,
            witness,
        }
    }
}

/// Derived results shown alongside the check records (expressions, table
/// rows, coefficients).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportTable {
    pub title: String,
    pub columns: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl ReportTable {
    pub fn new(title: &str, columns: &[&str]) -> Self {
        ReportTable {
            title: title.to_string(),
            columns: columns.iter().map(|c| c.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<String>) {
        self.rows.push(row);
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub tool_version: String,
    pub config: BTreeMap<String, String>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub tables: Vec<ReportTable>,
    pub records: Vec<CheckRecord>,
}

impl Report {
    pub fn new(config: BTreeMap<String, String>, records: Vec<CheckRecord>) -> Self {
        Report {
            tool_version: env!("CARGO_PKG_VERSION").to_string(),
            config,
            tables: Vec::new(),
            records,
        }
    }

    pub fn with_tables(mut self, tables: Vec<ReportTable>) -> Self {
        self.tables = tables;
        self
    }

    pub fn passed(&self) -> bool {
        self.records.iter().all(CheckRecord::passed)
    }

    pub fn failures(&self) -> impl Iterator<Item = &CheckRecord> {
        self.records.iter().filter(|r| !r.passed())
    }
}

/// Runs the battery for every entry matching `pattern` (in name order).
/// `all` also runs the table, oracle and plane-wave checks.
pub fn verify(
    registry: &Registry,
    pattern: &str,
    cfg: &VerifyConfig,
) -> crate::ode::Result<Vec<CheckRecord>> {
    let entries = registry.select(pattern)?;
    let mut records = verify_entries(&entries, cfg);
    if pattern == "all" {
        records.extend(global_checks(registry, cfg));
    }
    Ok(records)
}

/// Per-operator batteries, run on worker threads and assembled in input
/// order.
pub fn verify_entries(entries: &[&CatalogEntry], cfg: &VerifyConfig) -> Vec<CheckRecord> {
    let shipped = builtin_registry();
    std::thread::scope(|s| {
        let handles: Vec<_> = entries
            .iter()
            .map(|e| {
                let reference = shipped.get(&e.name).ok();
                s.spawn(move || operator_checks(e, reference, cfg))
            })
            .collect();
        handles
            .into_iter()
            .flat_map(|h| h.join().expect("check battery panicked"))
            .collect()
    })
}

struct Battery<'a> {
    name: &'a str,
    out: Vec<CheckRecord>,
}

impl Battery<'_> {
    fn id(&self, check: &str) -> String {
        format!("{}/{}", self.name, check)
    }

    fn outcome<E: fmt::Display>(
        &mut self,
        check: &str,
        anchor: &str,
        tol: f64,
        r: Result<CheckOutcome, E>,
    ) {
        let rec = match r {
            Ok(o) => CheckRecord::from_outcome(self.id(check), anchor, &o),
            Err(e) => CheckRecord::error(self.id(check), anchor, tol, e),
        };
        self.out.push(rec);
    }

    fn comparison<E: fmt::Display>(
        &mut self,
        check: &str,
        anchor: &str,
        tol: f64,
        r: Result<Comparison, E>,
    ) {
        let rec = match r {
            Ok(c) => CheckRecord::from_comparison(self.id(check), anchor, &c),
            Err(e) => CheckRecord::error(self.id(check), anchor, tol, e),
        };
        self.out.push(rec);
    }

    fn push(&mut self, rec: CheckRecord) {
        self.out.push(rec);
    }
}

fn boxed<T, E: fmt::Display>(r: Result<T, E>) -> Result<T, String> {
    r.map_err(|e| e.to_string())
}

/// Every check for one operator. `reference` is the shipped entry of the
/// same name, if any; an override that changes its coefficients fails
/// the first record.
pub fn operator_checks(
    entry: &CatalogEntry,
    reference: Option<&CatalogEntry>,
    cfg: &VerifyConfig,
) -> Vec<CheckRecord> {
    let o = &entry.operator;
    let mut bat = Battery {
        name: &entry.name,
        out: Vec::new(),
    };
    let sp = o.sample_space();
    let (trials, seed, tol) = (cfg.trials, cfg.seed, cfg.tol_sym);

    if let Some(r) = reference {
        let b = compare_on_domain(o.b(), r.operator.b(), &sp, trials, seed, tol);
        let c = compare_on_domain(o.c(), r.operator.c(), &sp, trials, seed, tol);
        bat.comparison("shipped.B", PLUMBING, tol, b);
        bat.comparison("shipped.C", PLUMBING, tol, c);
    }
    if entry.alpha_beta.is_some() {
        let rec = match entry.check_alpha_beta() {
            Ok(()) => CheckRecord::scalar(
                bat.id("alpha-beta"),
                "B = alpha/x, C = beta - mu^2/x^2",
                0.0,
                tol,
                String::new(),
            ),
            Err(e) => CheckRecord::error(
                bat.id("alpha-beta"),
                "B = alpha/x, C = beta - mu^2/x^2",
                tol,
                e,
            ),
        };
        bat.push(rec);
    }

    lagrangian_checks(&mut bat, o, cfg);
    canonical_checks(&mut bat, entry, cfg);
    bat.out
}

fn lagrangian_checks(bat: &mut Battery, o: &OdeOperator, cfg: &VerifyConfig) {
    let (trials, seed, tol) = (cfg.trials, cfg.seed, cfg.tol_sym);
    let (lo, hi) = o.window();
    let paths = TestPathSet::standard();
    let solution = integrate(o, lo, 1.0, 0.0, hi);

    let mut forms = Vec::new();
    for kind in LagrangianKind::STANDARD {
        let k = kind.as_str();
        let spec = match standard_lagrangian(o, kind, cfg.a1, cfg.a2) {
            Ok(s) => s,
            Err(e) => {
                bat.push(CheckRecord::error(
                    bat.id(&format!("{k}.synthesis")),
                    PLUMBING,
                    tol,
                    e,
                ));
                continue;
            }
        };
        match prop1_constraints(&spec, trials, seed, tol) {
            Ok((first, second)) => {
                bat.push(CheckRecord::from_comparison(
                    bat.id(&format!("{k}.f1")),
                    "f1' = B f1",
                    &first,
                ));
                bat.push(CheckRecord::from_comparison(
                    bat.id(&format!("{k}.f2-f3")),
                    "f2'/2 - f3 = C f1",
                    &second,
                ));
            }
            Err(e) => bat.push(CheckRecord::error(
                bat.id(&format!("{k}.f1")),
                "f1' = B f1",
                tol,
                e,
            )),
        }
        let form = ElForm::new(&spec);
        let along = match (&form, &solution) {
            (Ok(f), Ok(t)) => {
                let mut out = CheckOutcome::new(cfg.tol_el);
                let mut err = None;
                for x in interior_points(lo, hi, POINTS) {
                    match f.residual_on(t, x) {
                        Ok((r, s)) => out.observe(r, s, x, "numeric solution"),
                        Err(e) => {
                            err = Some(e.to_string());
                            break;
                        }
                    }
                }
                err.map_or(Ok(out), Err)
            }
            (Err(e), _) => Err(e.to_string()),
            (_, Err(e)) => Err(e.to_string()),
        };
        bat.outcome(
            &format!("{k}.el-solution"),
            "its Euler-Lagrange equation is the ODE",
            cfg.tol_el,
            along,
        );
        if let Ok(f) = form {
            forms.push((k, f));
        }
    }

    // The three standard Lagrangians differ by null Lagrangians, so their
    // EL expressions agree on arbitrary paths.
    for i in 0..forms.len() {
        for j in i + 1..forms.len() {
            let (ka, fa) = &forms[i];
            let (kb, fb) = &forms[j];
            let mut out = CheckOutcome::new(PAIRWISE_TOL);
            let mut err = None;
            'paths: for p in &paths.paths {
                for x in interior_points(lo, hi, paths.points) {
                    match (fa.residual_on(p, x), fb.residual_on(p, x)) {
                        (Ok((ra, sa)), Ok((rb, sb))) => {
                            out.observe(ra - rb, sa + sb, x, &p.label())
                        }
                        (Err(e), _) | (_, Err(e)) => {
                            err = Some(e.to_string());
                            break 'paths;
                        }
                    }
                }
            }
            bat.outcome(
                &format!("el-pairwise.{ka}-{kb}"),
                "minimal, middle and maximal Lagrangians are equivalent",
                PAIRWISE_TOL,
                err.map_or(Ok(out), Err),
            );
        }
    }

    for kind in LagrangianKind::NULL {
        let k = kind.as_str();
        let spec = null_lagrangian(o, kind, cfg.a1, cfg.a2);
        let r = boxed(spec.clone()).and_then(|s| {
            boxed(ElForm::new(&s).and_then(|f| f.battery(o.window(), &paths, EL_NULL_TOL)))
        });
        bat.outcome(
            &format!("{k}.identically-null"),
            "null Lagrangians satisfy the Euler-Lagrange equation identically",
            EL_NULL_TOL,
            r,
        );
        let (id, anchor) = match kind {
            LagrangianKind::NullMid => ("gauge.phi1", "Phi1 = a2 y^2/4"),
            _ => ("gauge.phi2", "Phi2 = (a1/4) B E_s y^2"),
        };
        let g = boxed(spec.clone()).and_then(|s| boxed(gauge_function(&s)));
        let r = g.and_then(|g| boxed(crate::lagrangian::gauge_check(&g, &paths)));
        bat.outcome(id, anchor, GAUGE_TOL, r);
        if kind == LagrangianKind::NullMax && o.b().is_zero() {
            let zero = spec.map(|s| s.body().is_zero()).unwrap_or(false);
            bat.push(CheckRecord::scalar(
                bat.id("null_max.zero"),
                "all their null Lagrangians are zero",
                if zero { 0.0 } else { 1.0 },
                0.0,
                if zero {
                    "0".into()
                } else {
                    "null_max body is not the zero expression".into()
                },
            ));
        }
    }
    let g3 = boxed(gauge_max_minus_mid(o, cfg.a1, cfg.a2))
        .and_then(|g| boxed(crate::lagrangian::gauge_check(&g, &paths)));
    bat.outcome("gauge.phi3", "Phi3 = Phi2 - Phi1", GAUGE_TOL, g3);

    helmholtz_checks(bat, o, cfg);

    let vbar = default_vbar(o);
    let riccati = boxed(vbar.clone())
        .and_then(|v| boxed(riccati_solution(o, &v)))
        .and_then(|s| boxed(s.check(POINTS, RICCATI_TOL)));
    bat.outcome(
        "riccati",
        "u = 3 vbar'/vbar + 2B solves the Riccati equation",
        RICCATI_TOL,
        riccati,
    );

    let ns = boxed(vbar).and_then(|v| {
        let l = boxed(nonstandard_lagrangian(o, &v))?;
        let (a, b) = v.span();
        let y = boxed(integrate(o, a, 0.0, 1.0, b))?;
        boxed(nonstandard_check(&l, &y, POINTS, NONSTANDARD_TOL))
    });
    bat.outcome(
        "nonstandard.el-solution",
        "L_ns = E_ns / ((y' vbar - y vbar') vbar^2)",
        NONSTANDARD_TOL,
        ns,
    );
}

/// `D y` itself satisfies the third Helmholtz condition only when `B ≡ 0`;
/// `E_s D y` always does.
fn helmholtz_checks(bat: &mut Battery, o: &OdeOperator, cfg: &VerifyConfig) {
    let anchor = "consistent with the third Helmholtz condition";
    let dy = Expr::sum(vec![
        Expr::ypp(),
        Expr::mul(o.b().clone(), Expr::yp()),
        Expr::mul(o.c_eff(), Expr::y()),
    ]);
    let sp = o.sample_space();
    let bare = crate::lagrangian::helmholtz_third_condition(&dy, &sp);
    let expect_pass = o.b_vanishes();
    let rec = match bare {
        Ok(c) => CheckRecord {
            check_id: bat.id("helmholtz.bare"),
            anchor: anchor.to_string(),
            status: if c.pass == expect_pass {
                Status::Pass
            } else {
                Status::Fail
            },
            worst_residual: Some(c.worst),
            tolerance: c.tolerance,
            witness: format!(
                "expected {}, got {} (worst {:e} at x = {})",
                if expect_pass { "pass" } else { "fail" },
                if c.pass { "pass" } else { "fail" },
                c.worst,
                c.witness_x
            ),
        },
        Err(e) => CheckRecord::error(bat.id("helmholtz.bare"), anchor, cfg.tol_sym, e),
    };
    bat.push(rec);
    let weighted = boxed(envelope_es(o)).and_then(|es| {
        boxed(crate::lagrangian::helmholtz_third_condition(
            &Expr::mul(es, dy),
            &sp,
        ))
    });
    bat.comparison("helmholtz.weighted", anchor, cfg.tol_sym, weighted);
}

fn canonical_checks(bat: &mut Battery, entry: &CatalogEntry, cfg: &VerifyConfig) {
    let o = &entry.operator;
    let (lo, hi) = o.window();
    let cf = match to_second_canonical(o) {
        Ok(cf) => cf,
        Err(e) => {
            bat.push(CheckRecord::error(
                bat.id("canonical"),
                "second canonical form",
                cfg.tol_sym,
                e,
            ));
            return;
        }
    };
    let transform = boxed(integrate(o, lo, 1.0, 0.0, hi))
        .and_then(|t| boxed(cf.transform_check(&t, POINTS, CANONICAL_TOL)));
    bat.outcome(
        "canonical.transform",
        "can be cast into their second canonical form",
        CANONICAL_TOL,
        transform,
    );

    if let Some((alpha, beta)) = entry.alpha_beta {
        // With β split off into λ, r is the pure inverse-square term.
        let anchor = if alpha == 1.0 {
            "r(x, m) = -(m^2 - 1/4)/x^2"
        } else {
            "r = C - (B' + B^2/2)/2"
        };
        let expected = format!("-(mu^2 + {a}^2/4 - {a}/2)/x^2", a = alpha);
        let r = boxed(o.split_eigenvalue(beta))
            .and_then(|s| boxed(to_second_canonical(&s)))
            .and_then(|c| {
                let e = boxed(parse(&expected))?;
                boxed(compare_on_domain(
                    c.r(),
                    &e,
                    &o.sample_space(),
                    cfg.trials,
                    cfg.seed,
                    cfg.tol_sym,
                ))
            });
        bat.comparison("canonical.r", anchor, cfg.tol_sym, r);
    }

    let verdict = classify_factorization(&cf);
    let anchor = "not all equations of the semigroup can be factorized";
    let rec = match &verdict.ladder {
        Some(lp) => match consistency_identity(lp, &lp.sample_space()) {
            Ok(c) => {
                let mut rec = CheckRecord::from_comparison(bat.id("factorization"), anchor, &c);
                rec.witness = format!("{}; {}", verdict.reason, rec.witness);
                if entry.alpha_beta.is_some()
                    && verdict.matched_family.as_deref() != Some("inverse-square")
                {
                    rec.status = Status::Fail;
                }
                rec
            }
            Err(e) => CheckRecord::error(bat.id("factorization"), anchor, cfg.tol_sym, e),
        },
        None => CheckRecord {
            check_id: bat.id("factorization"),
            anchor: anchor.to_string(),
            status: if entry.alpha_beta.is_some() {
                Status::Fail
            } else {
                Status::Pass
            },
            worst_residual: None,
            tolerance: cfg.tol_sym,
            witness: format!("not factorizable: {}", verdict.reason),
        },
    };
    bat.push(rec);

    // Ladder action on √x J_μ for the regular Bessel form.
    if entry.alpha_beta == Some((1.0, 1.0)) {
        if let Some(lp) = &verdict.ladder {
            let anchor = "z(lambda, m+1) = A-(x, m+1) z(lambda, m)";
            for mu in [0.0, 1.0, 2.0] {
                for (dir, label, target) in [
                    (LadderDirection::Up, "up", mu + 1.0),
                    (LadderDirection::Down, "down", mu - 1.0),
                ] {
                    let r = ladder_ratio(lp, mu, dir, target);
                    let id = bat.id(&format!("ladder.{label}.mu={mu}"));
                    bat.push(match r {
                        Ok((ratio, spread)) => CheckRecord::scalar(
                            id,
                            anchor,
                            spread.max((ratio - 1.0).abs()),
                            LADDER_TOL,
                            format!("ratio {ratio}, spread {spread:e}"),
                        ),
                        Err(e) => CheckRecord::error(id, anchor, LADDER_TOL, e),
                    });
                }
            }
            let r = ladder_composition(lp, 2.0);
            let id = bat.id("ladder.down-up.mu=2");
            bat.push(match r {
                Ok((ratio, expected, spread)) => CheckRecord::scalar(
                    id,
                    "the composition returns (lambda - chi) z",
                    spread.max((ratio - expected).abs()),
                    LADDER_TOL,
                    format!("ratio {ratio}, lambda - chi = {expected}"),
                ),
                Err(e) => CheckRecord::error(id, anchor, LADDER_TOL, e),
            });
        }
    }
}

fn sampled_bessel(mu: f64) -> crate::factorization::Result<SampledFunction> {
    SampledFunction::from_fn(0.95, 8.05, 7101, |x| Ok(x.sqrt() * bessel_j(mu, x)?))
}

fn ladder_ratio(
    lp: &crate::factorization::LadderPair,
    mu: f64,
    dir: LadderDirection,
    target: f64,
) -> crate::factorization::Result<(f64, f64)> {
    let w = apply_ladder(lp, &sampled_bessel(mu)?, mu, dir)?;
    let p = proportionality(&w, |x| Ok(x.sqrt() * bessel_j(target, x)?), 1.0, 8.0)?;
    Ok((p.ratio, p.spread))
}

fn ladder_composition(
    lp: &crate::factorization::LadderPair,
    mu: f64,
) -> crate::factorization::Result<(f64, f64, f64)> {
    let down = apply_ladder(lp, &sampled_bessel(mu)?, mu, LadderDirection::Down)?;
    let back = apply_ladder(lp, &down, mu - 1.0, LadderDirection::Up)?;
    let p = proportionality(&back, |x| Ok(x.sqrt() * bessel_j(mu, x)?), 1.0, 8.0)?;
    Ok((p.ratio, lp.lambda_shift - lp.chi_at(mu)?, p.spread))
}

/// Checks that do not belong to a single operator.
pub fn global_checks(registry: &Registry, cfg: &VerifyConfig) -> Vec<CheckRecord> {
    let mut out = Vec::new();
    let (trials, seed, tol) = (cfg.trials, cfg.seed, cfg.tol_sym);
    let get = |n: &str| registry.get(n).map(|e| e.operator.clone());

    for (i, (a, b, target, label)) in ADDITION_ROWS.iter().enumerate() {
        let id = format!("tables/additions.row{}", i + 1);
        let anchor = format!(
            "{label}: {}",
            registry
                .get(target)
                .map(|e| e.title.clone())
                .unwrap_or_default()
        );
        let r = (|| -> Result<Comparison, String> {
            let s = boxed(semigroup_add(
                &boxed(get(a))?,
                &boxed(get(b))?,
                AdditionMode::Average,
            ))?;
            let t = boxed(get(target))?;
            let sp = t.sample_space();
            let cb = boxed(compare_on_domain(s.b(), t.b(), &sp, trials, seed, tol))?;
            let cc = boxed(compare_on_domain(s.c(), t.c(), &sp, trials, seed, tol))?;
            Ok(if cb.worst >= cc.worst { cb } else { cc })
        })();
        out.push(match r {
            Ok(c) => CheckRecord::from_comparison(id, &anchor, &c),
            Err(e) => CheckRecord::error(id, &anchor, tol, e),
        });
    }

    let euler = (|| -> Result<Comparison, String> {
        let s = boxed(semigroup_add(
            &boxed(get("regular-bessel"))?,
            &boxed(get("modified-bessel"))?,
            AdditionMode::Average,
        ))?;
        let sp = s.sample_space();
        let cb = boxed(compare_on_domain(
            s.b(),
            &boxed(parse("1/x"))?,
            &sp,
            trials,
            seed,
            tol,
        ))?;
        let cc = boxed(compare_on_domain(
            s.c(),
            &boxed(parse("-mu^2/x^2"))?,
            &sp,
            trials,
            seed,
            tol,
        ))?;
        if s.lambda() != 0.0 {
            return Err(format!("lambda = {}", s.lambda()));
        }
        Ok(if cb.worst >= cc.worst { cb } else { cc })
    })();
    push_cmp(
        &mut out,
        "tables/euler-emergence",
        "it is known as the Euler equation",
        tol,
        euler,
    );

    let legendre = (|| -> Result<Comparison, String> {
        let s = boxed(semigroup_add(
            &boxed(get("regular-legendre"))?,
            &boxed(get("associated-legendre"))?,
            AdditionMode::Average,
        ))?;
        let expected = boxed(parse("l*(l + 1)/(1 - x^2) - (m^2/2)/(1 - x^2)^2"))?;
        let sp = s.sample_space().clone();
        boxed(compare_on_domain(
            s.c(),
            &expected,
            &SampleSpace {
                window: (-0.9, 0.9),
                ..sp
            },
            trials,
            seed,
            tol,
        ))
    })();
    push_cmp(
        &mut out,
        "tables/legendre-addition",
        "mbar^2 = m^2/2",
        tol,
        legendre,
    );

    let half: f64 = [1.0, 2.0, 3.0]
        .iter()
        .map(|&x| match bessel_j(0.5, x) {
            Ok(v) => (v - (2.0 / (PI * x)).sqrt() * x.sin()).abs(),
            Err(_) => f64::INFINITY,
        })
        .fold(0.0, f64::max);
    out.push(CheckRecord::scalar(
        "oracle/bessel-half-order".into(),
        "J_1/2(x) = sqrt(2/(pi x)) sin x",
        half,
        1e-10,
        "x in {1, 2, 3}".into(),
    ));
    let self_check = bessel_self_check(1.0, 2.0)
        .map(f64::abs)
        .unwrap_or(f64::INFINITY);
    out.push(CheckRecord::scalar(
        "oracle/bessel-residual".into(),
        PLUMBING,
        self_check,
        1e-9,
        "mu = 1, x = 2".into(),
    ));
    let mut worst: f64 = 0.0;
    let mut witness = String::new();
    for x in [0.5, 1.0, 2.0, 3.0, 4.0] {
        match plane_wave_bessel_coefficients(x, 8) {
            Ok(c) => {
                for (n, cn) in c.iter().enumerate() {
                    let d = (cn - bessel_j(n as f64, x).unwrap_or(f64::NAN)).abs();
                    let d = if d.is_nan() { f64::INFINITY } else { d };
                    if d > worst || witness.is_empty() {
                        worst = d;
                        witness = format!("x = {x}, n = {n}");
                    }
                }
            }
            Err(e) => {
                worst = f64::INFINITY;
                witness = e.to_string();
            }
        }
    }
    out.push(CheckRecord::scalar(
        "oracle/jacobi-anger".into(),
        "one of these coefficients is proportional to J_mu(x)",
        worst,
        1e-8,
        witness,
    ));

    for (label, k, a) in [
        ("half-period", (1.0, 0.0), (PI, 0.0)),
        ("generic", (2.0, 1.0), (0.3, -0.2)),
        ("zero", (0.0, 0.0), (1.0, 2.0)),
    ] {
        let r = plane_wave_irrep_check(k, a);
        let worst = (r.translation_residual / 1e-12).max(r.eigen_residual / 1e-10);
        out.push(CheckRecord {
            check_id: format!("plane-wave/{label}"),
            anchor: "transforms as the irreps of T(2)".into(),
            status: if r.pass() { Status::Pass } else { Status::Fail },
            worst_residual: Some(r.translation_residual.max(r.eigen_residual)),
            tolerance: 1e-10,
            witness: format!(
                "{}; translation {:e}, gradient {:e}, opposite sign {:e} ({worst:.2} of tolerance)",
                r.convention, r.translation_residual, r.eigen_residual, r.opposite_sign_residual
            ),
        });
    }

    let negative = (|| -> Result<bool, String> {
        let o = boxed(OdeOperator::new(
            Expr::zero(),
            boxed(parse("exp(x)/x"))?,
            BTreeMap::new(),
            (0.5, 5.0),
        ))?;
        Ok(classify_factorization(&boxed(to_second_canonical(&o))?).factorizable)
    })();
    let anchor = "cannot be factorized by the IH method";
    out.push(match negative {
        Ok(f) => CheckRecord::scalar(
            "factorization/negative-control".into(),
            anchor,
            if f { 1.0 } else { 0.0 },
            0.0,
            format!(
                "r = exp(x)/x classified {}",
                if f {
                    "factorizable"
                } else {
                    "not factorizable"
                }
            ),
        ),
        Err(e) => CheckRecord::error("factorization/negative-control".into(), anchor, 0.0, e),
    });
    out
}

fn push_cmp(
    out: &mut Vec<CheckRecord>,
    id: &str,
    anchor: &str,
    tol: f64,
    r: Result<Comparison, String>,
) {
    out.push(match r {
        Ok(c) => CheckRecord::from_comparison(id.to_string(), anchor, &c),
        Err(e) => CheckRecord::error(id.to_string(), anchor, tol, e),
    });
}
