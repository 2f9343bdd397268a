use anyhow::{anyhow, bail, Context};
use odekit_core::expr::compare_on_domain;
use odekit_core::factorization::{
    bessel_j, bessel_self_check, classify_with_catalog, consistency_identity,
    plane_wave_bessel_coefficients, to_second_canonical, FamilyCatalog,
};
use odekit_core::lagrangian::{
    default_vbar, gauge_check, gauge_function, gauge_max_minus_mid, interior_points,
    nonstandard_check, nonstandard_lagrangian, null_lagrangian, prop1_constraints,
    standard_lagrangian, CheckOutcome, ElForm, LagrangianKind, TestPathSet, EL_NULL_TOL, GAUGE_TOL,
};
use odekit_core::ode::{
    bessel_form, integrate, rational_label, semigroup_add, table_name, AdditionMode, CatalogEntry,
    OdeOperator, Registry, ADDITION_ROWS, BESSEL_EULER_ROWS,
};
use odekit_core::verify::{self, CheckRecord, ReportTable, Status, VerifyConfig, PLUMBING};
use std::path::Path;

type Output = (Vec<ReportTable>, Vec<CheckRecord>);

fn entry<'a>(reg: &'a Registry, name: &str) -> anyhow::Result<&'a CatalogEntry> {
    reg.get(name).map_err(|e| anyhow!(e))
}

fn lower_first(s: &str) -> String {
    let mut c = s.chars();
    match c.next() {
        Some(f) => f.to_lowercase().collect::<String>() + c.as_str(),
        None => String::new(),
    }
}

/// Registry entries whose coefficients agree with `o` on its window.
fn identify(reg: &Registry, o: &OdeOperator, cfg: &VerifyConfig) -> Option<String> {
    let sp = o.sample_space();
    reg.entries()
        .filter(|e| e.operator.params().keys().eq(o.params().keys()))
        .find(|e| {
            let same = |a, b| {
                compare_on_domain(a, b, &sp, cfg.trials, cfg.seed, cfg.tol_sym)
                    .map(|c| c.pass)
                    .unwrap_or(false)
            };
            same(e.operator.b(), o.b()) && same(e.operator.c(), o.c())
        })
        .map(|e| e.name.clone())
}

pub fn add(
    reg: &Registry,
    names: &[String],
    mode: AdditionMode,
    cfg: &VerifyConfig,
    save: Option<&Path>,
    new_name: &str,
) -> anyhow::Result<Output> {
    let entries = names
        .iter()
        .map(|n| entry(reg, n))
        .collect::<anyhow::Result<Vec<_>>>()?;
    let mut acc = entries[0].operator.clone();
    let mut ab = entries[0].alpha_beta;
    for e in &entries[1..] {
        acc = semigroup_add(&acc, &e.operator, mode).map_err(|e| anyhow!(e))?;
        ab = match (ab, e.alpha_beta, mode) {
            (Some((a1, b1)), Some((a2, b2)), AdditionMode::Average) => {
                Some((0.5 * (a1 + a2), 0.5 * (b1 + b2)))
            }
            (Some((a1, b1)), Some((a2, b2)), AdditionMode::Sum) => Some((a1 + a2, b1 + b2)),
            _ => None,
        };
    }

    let anchor = match mode {
        AdditionMode::Average => "B(x) = [B_1(x) + B_2(x)]/2",
        AdditionMode::Sum => "B(x) = B_1(x) + B_2(x)",
    };
    let mut records = Vec::new();
    let mut summary = None;
    let mut title = None;
    // (α, β) only carry over when the sum is again of the general Bessel form.
    if let Some((alpha, beta)) = ab {
        let (b, c) = bessel_form(alpha, beta);
        let sp = acc.sample_space();
        let cb = compare_on_domain(acc.b(), &b, &sp, cfg.trials, cfg.seed, cfg.tol_sym)?;
        let cc = compare_on_domain(acc.c(), &c, &sp, cfg.trials, cfg.seed, cfg.tol_sym)?;
        if cb.pass && cc.pass {
            let (al, bl) = (rational_label(alpha), rational_label(beta));
            let label = match table_name(alpha, beta) {
                Some(row) => {
                    title = Some(row.title.to_string());
                    format!("{}, α={al}, β={bl}", lower_first(row.title))
                }
                None => format!("general Bessel form, α={al}, β={bl}"),
            };
            records.push(CheckRecord::from_comparison(
                "add/alpha-beta".into(),
                "B = alpha/x, C = beta - mu^2/x^2",
                if cb.worst >= cc.worst { &cb } else { &cc },
            ));
            summary = Some(label);
        } else {
            ab = None;
        }
    }
    let summary = match summary {
        Some(s) => s,
        None => match identify(reg, &acc, cfg) {
            Some(n) => {
                title = reg.get(&n).ok().map(|e| e.title.clone());
                n
            }
            None => "no catalog match".to_string(),
        },
    };
    records.push(CheckRecord {
        check_id: "add/result".into(),
        anchor: anchor.into(),
        status: Status::Pass,
        worst_residual: None,
        tolerance: cfg.tol_sym,
        witness: summary.clone(),
    });

    let mut t = ReportTable::new("Sum", &["quantity", "value"]);
    t.push(vec!["inputs".into(), names.join(" + ")]);
    t.push(vec!["mode".into(), mode.to_string()]);
    t.push(vec!["B".into(), acc.b().to_string()]);
    t.push(vec!["C".into(), acc.c().to_string()]);
    t.push(vec!["lambda".into(), acc.lambda().to_string()]);
    t.push(vec![
        "window".into(),
        format!("[{}, {}]", acc.window().0, acc.window().1),
    ]);
    if let Some((a, b)) = ab {
        t.push(vec!["alpha".into(), rational_label(a)]);
        t.push(vec!["beta".into(), rational_label(b)]);
    }
    t.push(vec!["equation".into(), summary]);

    if let Some(path) = save {
        let e = CatalogEntry {
            name: new_name.to_string(),
            title: title.unwrap_or_else(|| new_name.to_string()),
            operator: acc.clone(),
            alpha_beta: ab,
            novel: false,
            note: format!("{} of {}", mode, names.join(", ")),
        };
        let json = serde_json::to_string_pretty(&[e.to_file()])?;
        std::fs::write(path, json + "\n").with_context(|| path.display().to_string())?;
    }
    Ok((vec![t], records))
}

fn el_along_solution(
    spec: &odekit_core::lagrangian::LagrangianSpec,
    tol: f64,
) -> Result<CheckOutcome, String> {
    let o = spec.source();
    let (lo, hi) = o.window();
    let t = integrate(o, lo, 1.0, 0.0, hi).map_err(|e| e.to_string())?;
    let form = ElForm::new(spec).map_err(|e| e.to_string())?;
    let mut out = CheckOutcome::new(tol);
    for x in interior_points(lo, hi, 64) {
        let (r, s) = form.residual_on(&t, x).map_err(|e| e.to_string())?;
        out.observe(r, s, x, "numeric solution");
    }
    Ok(out)
}

fn outcome_record(
    id: String,
    anchor: &str,
    tol: f64,
    r: Result<CheckOutcome, String>,
) -> CheckRecord {
    match r {
        Ok(o) => CheckRecord::from_outcome(id, anchor, &o),
        Err(e) => CheckRecord::error(id, anchor, tol, e),
    }
}

pub fn derive(
    reg: &Registry,
    name: &str,
    kinds: &[String],
    a1: f64,
    a2: f64,
    cfg: &VerifyConfig,
) -> anyhow::Result<Output> {
    let e = entry(reg, name)?;
    let o = &e.operator;
    let paths = TestPathSet::standard();
    let mut t = ReportTable::new(
        &format!("Lagrangians for {}", e.title),
        &["kind", "expression"],
    );
    let mut records = Vec::new();
    for k in kinds {
        let id = |check: &str| format!("{name}/{k}.{check}");
        if k == "gauge" {
            let g1 = gauge_function(&null_lagrangian(o, LagrangianKind::NullMid, a1, a2)?)?;
            let g2 = gauge_function(&null_lagrangian(o, LagrangianKind::NullMax, a1, a2)?)?;
            let g3 = gauge_max_minus_mid(o, a1, a2)?;
            for (label, g, anchor) in [
                ("Phi1", g1, "Phi1 = a2 y^2/4"),
                ("Phi2", g2, "Phi2 = (a1/4) B E_s y^2"),
                ("Phi3", g3, "Phi3 = Phi2 - Phi1"),
            ] {
                t.push(vec![label.into(), g.phi.to_string()]);
                let r = gauge_check(&g, &paths).map_err(|e| e.to_string());
                records.push(outcome_record(id(label), anchor, GAUGE_TOL, r));
            }
            continue;
        }
        let kind: LagrangianKind = k.parse().map_err(|e: String| anyhow!(e))?;
        match kind {
            LagrangianKind::Minimal | LagrangianKind::Middle | LagrangianKind::Maximal => {
                let spec = standard_lagrangian(o, kind, a1, a2)?;
                t.push(vec![k.clone(), spec.body().to_string()]);
                let (first, second) = prop1_constraints(&spec, cfg.trials, cfg.seed, cfg.tol_sym)?;
                records.push(CheckRecord::from_comparison(id("f1"), "f1' = B f1", &first));
                records.push(CheckRecord::from_comparison(
                    id("f2-f3"),
                    "f2'/2 - f3 = C f1",
                    &second,
                ));
                records.push(outcome_record(
                    id("el-solution"),
                    "its Euler-Lagrange equation is the ODE",
                    cfg.tol_el,
                    el_along_solution(&spec, cfg.tol_el),
                ));
            }
            LagrangianKind::NullMid | LagrangianKind::NullMax => {
                let spec = null_lagrangian(o, kind, a1, a2)?;
                t.push(vec![k.clone(), spec.body().to_string()]);
                let r = ElForm::new(&spec)
                    .and_then(|f| f.battery(o.window(), &paths, EL_NULL_TOL))
                    .map_err(|e| e.to_string());
                records.push(outcome_record(
                    id("identically-null"),
                    "null Lagrangians satisfy the Euler-Lagrange equation identically",
                    EL_NULL_TOL,
                    r,
                ));
            }
            LagrangianKind::Nonstandard => {
                let vbar =
                    default_vbar(o).context("no nonvanishing auxiliary solution on the window")?;
                let spec = nonstandard_lagrangian(o, &vbar)
                    .context("no nonvanishing auxiliary solution on the window")?;
                t.push(vec![k.clone(), spec.body().to_string()]);
                let (lo, hi) = vbar.span();
                let r = integrate(o, lo, 0.0, 1.0, hi)
                    .map_err(|e| e.to_string())
                    .and_then(|y| {
                        nonstandard_check(&spec, &y, 64, 1e-5).map_err(|e| e.to_string())
                    });
                records.push(outcome_record(
                    id("el-solution"),
                    "L_ns = E_ns / ((y' vbar - y vbar') vbar^2)",
                    1e-5,
                    r,
                ));
            }
        }
    }
    Ok((vec![t], records))
}

pub fn verify(reg: &Registry, names: &[String], cfg: &VerifyConfig) -> anyhow::Result<Output> {
    let mut records = Vec::new();
    for n in names {
        records.extend(verify::verify(reg, n, cfg).map_err(|e| anyhow!(e))?);
    }
    Ok((Vec::new(), records))
}

pub fn tables(reg: &Registry, cfg: &VerifyConfig) -> anyhow::Result<Output> {
    let mut t1 = ReportTable::new(
        "Bessel and Euler equations",
        &["Equation", "alpha", "beta", "B", "C", "novel"],
    );
    let mut records = Vec::new();
    for row in BESSEL_EULER_ROWS {
        let e = entry(reg, row.name)?;
        let star = if row.novel { "*" } else { "" };
        t1.push(vec![
            row.title.into(),
            rational_label(row.alpha()),
            rational_label(row.beta()),
            e.operator.b().to_string(),
            e.operator.c().to_string(),
            star.into(),
        ]);
        let id = format!("tables/catalog.{}", row.name);
        let anchor = "Bessel and Euler equations";
        records.push(match e.check_alpha_beta() {
            Ok(()) => CheckRecord::scalar(
                id,
                anchor,
                0.0,
                cfg.tol_sym,
                format!(
                    "alpha = {}, beta = {}",
                    rational_label(row.alpha()),
                    rational_label(row.beta())
                ),
            ),
            Err(err) => CheckRecord::error(id, anchor, cfg.tol_sym, err),
        });
    }
    let mut t2 = ReportTable::new(
        "Derivation of novel Bessel and Euler equations",
        &[
            "Derived equation",
            "Addition of Bessel equations",
            "alpha",
            "beta",
            "novel",
        ],
    );
    for (a, b, _, label) in ADDITION_ROWS {
        let (ea, eb) = (entry(reg, a)?, entry(reg, b)?);
        let (Some((a1, b1)), Some((a2, b2))) = (ea.alpha_beta, eb.alpha_beta) else {
            bail!("`{a}` and `{b}` must carry alpha and beta");
        };
        let (alpha, beta) = (0.5 * (a1 + a2), 0.5 * (b1 + b2));
        let row = table_name(alpha, beta);
        t2.push(vec![
            row.map_or("(not in the catalog)".to_string(), |r| r.title.to_string()),
            label.to_string(),
            rational_label(alpha),
            rational_label(beta),
            if row.is_some_and(|r| r.novel) {
                "*".into()
            } else {
                String::new()
            },
        ]);
    }
    records.extend(
        verify::global_checks(reg, cfg)
            .into_iter()
            .filter(|r| r.check_id.starts_with("tables/")),
    );
    Ok((vec![t1, t2], records))
}

pub fn canonicalize(
    reg: &Registry,
    name: &str,
    families: Option<&Path>,
    cfg: &VerifyConfig,
) -> anyhow::Result<Output> {
    let e = entry(reg, name)?;
    let o = &e.operator;
    let catalog = match families {
        Some(p) => {
            let text = std::fs::read_to_string(p).with_context(|| p.display().to_string())?;
            FamilyCatalog::from_json(&text).map_err(|e| anyhow!("{}: {e}", p.display()))?
        }
        None => FamilyCatalog::default(),
    };
    let cf = to_second_canonical(o)?;
    let v = classify_with_catalog(&cf, &catalog);
    let mut t = ReportTable::new(
        &format!("Second canonical form of {}", e.title),
        &["quantity", "value"],
    );
    t.push(vec!["r".into(), cf.r().to_string()]);
    t.push(vec!["lambda".into(), cf.lambda().to_string()]);
    t.push(vec!["multiplier".into(), cf.multiplier().to_string()]);
    t.push(vec!["factorizable".into(), v.factorizable.to_string()]);
    t.push(vec!["reason".into(), v.reason.clone()]);
    let mut records = Vec::new();
    let (lo, hi) = o.window();
    let transform = integrate(o, lo, 1.0, 0.0, hi)
        .map_err(|e| e.to_string())
        .and_then(|y| cf.transform_check(&y, 64, 1e-6).map_err(|e| e.to_string()));
    records.push(outcome_record(
        format!("{name}/canonical.transform"),
        "can be cast into their second canonical form",
        1e-6,
        transform,
    ));
    if let Some(lp) = &v.ladder {
        t.push(vec!["family".into(), lp.family.clone()]);
        t.push(vec!["index".into(), lp.index.clone()]);
        t.push(vec!["k".into(), lp.k.to_string()]);
        t.push(vec!["chi".into(), lp.chi.to_string()]);
        t.push(vec!["ladder r".into(), lp.r.to_string()]);
        t.push(vec!["lambda shift".into(), lp.lambda_shift.to_string()]);
        if let Some(m) = &lp.index_map {
            t.push(vec!["index map".into(), m.to_string()]);
        }
        t.push(vec!["closes".into(), lp.closes.to_string()]);
        let anchor = "-k'(x, m+1) - k(x, m+1)^2 - chi(m+1) = r(x, m)";
        records.push(match consistency_identity(lp, &lp.sample_space()) {
            Ok(c) => CheckRecord::from_comparison(format!("{name}/ladder.consistency"), anchor, &c),
            Err(err) => CheckRecord::error(
                format!("{name}/ladder.consistency"),
                anchor,
                cfg.tol_sym,
                err,
            ),
        });
    }
    records.push(CheckRecord {
        check_id: format!("{name}/factorization"),
        anchor: "not all equations of the semigroup can be factorized".into(),
        status: Status::Pass,
        worst_residual: None,
        tolerance: cfg.tol_sym,
        witness: v.reason,
    });
    Ok((vec![t], records))
}

pub fn bessel(mu: f64, x: f64, n_max: usize) -> anyhow::Result<Output> {
    let j = bessel_j(mu, x)?;
    let coeffs = plane_wave_bessel_coefficients(x, n_max)?;
    let mut t = ReportTable::new(
        &format!("Bessel functions at x = {x}"),
        &["order", "J (series)", "c_n (trapezoid)", "difference"],
    );
    t.push(vec![
        mu.to_string(),
        format!("{j:.15e}"),
        String::new(),
        String::new(),
    ]);
    let mut worst: f64 = 0.0;
    let mut witness = String::new();
    for (n, c) in coeffs.iter().enumerate() {
        let jn = bessel_j(n as f64, x)?;
        let d = (c - jn).abs();
        if d > worst || witness.is_empty() {
            worst = d;
            witness = format!("n = {n}");
        }
        t.push(vec![
            n.to_string(),
            format!("{jn:.15e}"),
            format!("{c:.15e}"),
            format!("{d:.1e}"),
        ]);
    }
    let mut records = vec![CheckRecord::scalar(
        "bessel/jacobi-anger".into(),
        "one of these coefficients is proportional to J_mu(x)",
        worst,
        1e-8,
        witness,
    )];
    if x > 0.0 {
        let r = bessel_self_check(mu, x)?.abs();
        records.push(CheckRecord::scalar(
            "bessel/residual".into(),
            PLUMBING,
            r,
            1e-9,
            format!("mu = {mu}, x = {x}"),
        ));
    }
    Ok((vec![t], records))
}
