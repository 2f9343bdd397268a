use super::{OdeError, OdeOperator, ParamSpec, Result};
use crate::expr::{equivalent_on_domain, parse, Expr};
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;

/// A row of the Bessel/Euler table: `B = α/x`, `C = β - μ²/x²`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TableRow {
    pub name: &'static str,
    pub title: &'static str,
    pub alpha: (i64, i64),
    pub beta: i64,
    /// Rows first obtained through the semigroup addition.
    pub novel: bool,
}

impl TableRow {
    pub fn alpha(&self) -> f64 {
        self.alpha.0 as f64 / self.alpha.1 as f64
    }

    pub fn beta(&self) -> f64 {
        self.beta as f64
    }
}

const fn row(
    name: &'static str,
    title: &'static str,
    alpha: (i64, i64),
    beta: i64,
    novel: bool,
) -> TableRow {
    TableRow {
        name,
        title,
        alpha,
        beta,
        novel,
    }
}

pub const BESSEL_EULER_ROWS: [TableRow; 9] = [
    row("regular-bessel", "Regular Bessel", (1, 1), 1, false),
    row("modified-bessel", "Modified Bessel", (1, 1), -1, false),
    row("spherical-bessel", "Spherical Bessel", (2, 1), 1, false),
    row(
        "modified-spherical-bessel",
        "Modified spherical Bessel",
        (2, 1),
        -1,
        false,
    ),
    row(
        "semi-spherical-bessel",
        "Semi-spherical Bessel",
        (3, 2),
        1,
        true,
    ),
    row(
        "modified-semi-spherical-bessel",
        "Modified semi-spherical Bessel",
        (3, 2),
        -1,
        true,
    ),
    row("regular-euler", "Regular Euler", (1, 1), 0, false),
    row("spherical-euler", "Spherical Euler", (2, 1), 0, true),
    row(
        "semi-spherical-euler",
        "Semi-spherical Euler",
        (3, 2),
        0,
        true,
    ),
];

/// The addition table: `(first, second, derived, label)` where `derived` is the
/// average-mode sum of the first two.
pub const ADDITION_ROWS: [(&str, &str, &str, &str); 6] = [
    (
        "regular-bessel",
        "spherical-bessel",
        "semi-spherical-bessel",
        "Regular and spherical",
    ),
    (
        "modified-bessel",
        "modified-spherical-bessel",
        "modified-semi-spherical-bessel",
        "Modified and modified spherical",
    ),
    (
        "regular-bessel",
        "modified-bessel",
        "regular-euler",
        "Regular and modified",
    ),
    (
        "spherical-bessel",
        "modified-spherical-bessel",
        "spherical-euler",
        "Spherical and modified spherical",
    ),
    (
        "regular-bessel",
        "modified-spherical-bessel",
        "semi-spherical-euler",
        "Regular and modified spherical",
    ),
    (
        "modified-bessel",
        "spherical-bessel",
        "semi-spherical-euler",
        "Modified and spherical",
    ),
];

/// The table row with the given `(α, β)`, if any.
pub fn table_name(alpha: f64, beta: f64) -> Option<&'static TableRow> {
    BESSEL_EULER_ROWS
        .iter()
        .find(|r| (r.alpha() - alpha).abs() < 1e-12 && (r.beta() - beta).abs() < 1e-12)
}

/// `3/2`, `-1`, ... for values with a small denominator; plain decimal
/// otherwise.
pub fn rational_label(v: f64) -> String {
    for den in 1..=64i64 {
        let num = (v * den as f64).round();
        if (num - v * den as f64).abs() < 1e-9 {
            let num = num as i64;
            return if den == 1 {
                num.to_string()
            } else {
                format!("{num}/{den}")
            };
        }
    }
    format!("{v}")
}

#[derive(Debug, Clone, PartialEq)]
pub struct CatalogEntry {
    pub name: String,
    pub title: String,
    pub operator: OdeOperator,
    /// `(α, β)` for members of the general Bessel form.
    pub alpha_beta: Option<(f64, f64)>,
    pub novel: bool,
    pub note: String,
}

impl CatalogEntry {
    /// Checks the `(α, β)` metadata against the coefficients.
    pub fn check_alpha_beta(&self) -> Result<()> {
        let Some((alpha, beta)) = self.alpha_beta else {
            return Ok(());
        };
        let op = &self.operator;
        if !op.params().contains_key("mu") {
            return Err(OdeError::Registry(format!(
                "`{}` carries (alpha, beta) but declares no `mu`",
                self.name
            )));
        }
        let (b, c) = bessel_form(alpha, beta);
        let sp = op.sample_space();
        let ok = equivalent_on_domain(op.b(), &b, &sp, 64, 0)?
            && equivalent_on_domain(op.c(), &c, &sp, 64, 0)?;
        if ok {
            Ok(())
        } else {
            Err(OdeError::Registry(format!(
                "`{}`: coefficients do not match alpha = {}, beta = {}",
                self.name,
                rational_label(alpha),
                rational_label(beta)
            )))
        }
    }

    pub fn to_file(&self) -> RegistryEntryFile {
        let op = &self.operator;
        RegistryEntryFile {
            name: self.name.clone(),
            title: Some(self.title.clone()),
            b: op.b().to_string(),
            c: op.c().to_string(),
            params: op
                .params()
                .iter()
                .map(|(k, v)| {
                    let decl = match v.range {
                        Some((min, max)) => ParamDecl::Ranged {
                            value: Some(v.value),
                            min,
                            max,
                        },
                        None => ParamDecl::Fixed(v.value),
                    };
                    (k.clone(), decl)
                })
                .collect(),
            lambda: op.lambda(),
            window: [op.window().0, op.window().1],
            note: self.note.clone(),
            alpha: self.alpha_beta.map(|p| p.0),
            beta: self.alpha_beta.map(|p| p.1),
            index: op.index_param().map(str::to_string),
            novel: self.novel,
        }
    }
}

/// `B = α/x`, `C = β - μ²/x²`.
pub fn bessel_form(alpha: f64, beta: f64) -> (Expr, Expr) {
    let b = parse(&format!("({})/x", rational_label(alpha))).expect("static form");
    let c = parse(&format!("({}) - mu^2/x^2", rational_label(beta))).expect("static form");
    (b, c)
}

/// A parameter declaration in a registry file: a bare number is fixed,
/// an object gives a range and optionally the working value (midpoint by
/// default).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ParamDecl {
    Fixed(f64),
    Ranged {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        value: Option<f64>,
        min: f64,
        max: f64,
    },
}

impl ParamDecl {
    fn spec(&self) -> ParamSpec {
        match *self {
            ParamDecl::Fixed(v) => ParamSpec::fixed(v),
            ParamDecl::Ranged { value, min, max } => {
                ParamSpec::ranged(value.unwrap_or(0.5 * (min + max)), min, max)
            }
        }
    }
}

/// One element of the registry JSON array.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RegistryEntryFile {
    pub name: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub title: Option<String>,
    #[serde(rename = "B")]
    pub b: String,
    #[serde(rename = "C")]
    pub c: String,
    #[serde(default)]
    pub params: BTreeMap<String, ParamDecl>,
    #[serde(default)]
    pub lambda: f64,
    pub window: [f64; 2],
    #[serde(default)]
    pub note: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub alpha: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub beta: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub index: Option<String>,
    #[serde(default)]
    pub novel: bool,
}

impl RegistryEntryFile {
    pub fn into_entry(self) -> Result<CatalogEntry> {
        let ctx = |e: crate::expr::ExprError| OdeError::Registry(format!("`{}`: {e}", self.name));
        let b = parse(&self.b).map_err(ctx)?;
        let c = parse(&self.c).map_err(ctx)?;
        let params = self
            .params
            .iter()
            .map(|(k, v)| (k.clone(), v.spec()))
            .collect();
        let mut op = OdeOperator::new(b, c, params, (self.window[0], self.window[1]))?
            .with_lambda(self.lambda)?;
        if let Some(i) = &self.index {
            op = op.with_index_param(i)?;
        }
        let alpha_beta = match (self.alpha, self.beta) {
            (Some(a), Some(b)) => Some((a, b)),
            (None, None) => None,
            _ => {
                return Err(OdeError::Registry(format!(
                    "`{}`: alpha and beta must be given together",
                    self.name
                )))
            }
        };
        let entry = CatalogEntry {
            title: self.title.clone().unwrap_or_else(|| self.name.clone()),
            name: self.name,
            operator: op,
            alpha_beta,
            novel: self.novel,
            note: self.note,
        };
        entry.check_alpha_beta()?;
        Ok(entry)
    }
}

/// Named equations, unique by name and iterated in name order.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Registry {
    entries: BTreeMap<String, CatalogEntry>,
}

impl Registry {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn get(&self, name: &str) -> Result<&CatalogEntry> {
        self.entries
            .get(name)
            .ok_or_else(|| OdeError::UnknownEquation(name.to_string()))
    }

    pub fn contains(&self, name: &str) -> bool {
        self.entries.contains_key(name)
    }

    /// Adds a new entry; names must be unique.
    pub fn insert(&mut self, entry: CatalogEntry) -> Result<()> {
        if self.entries.contains_key(&entry.name) {
            return Err(OdeError::DuplicateName(entry.name));
        }
        entry.check_alpha_beta()?;
        self.entries.insert(entry.name.clone(), entry);
        Ok(())
    }

    /// Adds or replaces by name.
    pub fn upsert(&mut self, entry: CatalogEntry) -> Result<()> {
        entry.check_alpha_beta()?;
        self.entries.insert(entry.name.clone(), entry);
        Ok(())
    }

    /// Parses a registry file. Names must be unique within one file.
    pub fn parse_file(text: &str) -> Result<Vec<CatalogEntry>> {
        let raw: Vec<RegistryEntryFile> =
            serde_json::from_str(text).map_err(|e| OdeError::Registry(e.to_string()))?;
        let mut seen = std::collections::BTreeSet::new();
        let mut out = Vec::with_capacity(raw.len());
        for r in raw {
            if !seen.insert(r.name.clone()) {
                return Err(OdeError::DuplicateName(r.name));
            }
            out.push(r.into_entry()?);
        }
        Ok(out)
    }

    /// Merges a registry file; its entries shadow existing ones by name.
    pub fn merge_json(&mut self, text: &str) -> Result<()> {
        for e in Self::parse_file(text)? {
            self.upsert(e)?;
        }
        Ok(())
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.entries.keys().map(String::as_str)
    }

    pub fn entries(&self) -> impl Iterator<Item = &CatalogEntry> {
        self.entries.values()
    }

    /// `all`, an exact name, or every entry whose name contains `pattern`.
    pub fn select(&self, pattern: &str) -> Result<Vec<&CatalogEntry>> {
        if pattern == "all" {
            return Ok(self.entries.values().collect());
        }
        if let Some(e) = self.entries.get(pattern) {
            return Ok(vec![e]);
        }
        let hits: Vec<_> = self
            .entries
            .values()
            .filter(|e| e.name.contains(pattern))
            .collect();
        if hits.is_empty() {
            Err(OdeError::UnknownEquation(pattern.to_string()))
        } else {
            Ok(hits)
        }
    }
}

fn mu_spec() -> ParamSpec {
    ParamSpec::ranged(1.0, 0.0, 4.0)
}

#[allow(clippy::too_many_arguments)]
fn entry(
    name: &str,
    title: &str,
    b: &str,
    c: &str,
    params: &[(&str, ParamSpec)],
    window: (f64, f64),
    index: Option<&str>,
    note: &str,
) -> CatalogEntry {
    let params = params.iter().map(|(k, v)| (k.to_string(), *v)).collect();
    let mut op = OdeOperator::new(parse(b).unwrap(), parse(c).unwrap(), params, window)
        .expect("built-in operator is valid");
    if let Some(i) = index {
        op = op.with_index_param(i).unwrap();
    }
    CatalogEntry {
        name: name.to_string(),
        title: title.to_string(),
        operator: op,
        alpha_beta: None,
        novel: false,
        note: note.to_string(),
    }
}

/// The shipped equations: the nine Bessel/Euler rows, the general Bessel
/// form, the Legendre pair, the identity and the harmonic oscillator.
pub fn builtin_registry() -> Registry {
    let mut reg = Registry::new();
    for r in &BESSEL_EULER_ROWS {
        let (b, c) = bessel_form(r.alpha(), r.beta());
        let op = OdeOperator::new(
            b,
            c,
            [("mu".to_string(), mu_spec())].into_iter().collect(),
            (0.5, 10.0),
        )
        .and_then(|o| o.with_index_param("mu"))
        .expect("built-in operator is valid");
        reg.insert(CatalogEntry {
            name: r.name.to_string(),
            title: r.title.to_string(),
            operator: op,
            alpha_beta: Some((r.alpha(), r.beta())),
            novel: r.novel,
            note: format!(
                "alpha = {}, beta = {}",
                rational_label(r.alpha()),
                rational_label(r.beta())
            ),
        })
        .expect("unique built-in names");
    }
    let extra = [
        entry(
            "general-bessel",
            "General Bessel",
            "alpha/x",
            "beta - mu^2/x^2",
            &[
                ("alpha", ParamSpec::ranged(1.0, 1.0, 2.0)),
                ("beta", ParamSpec::ranged(1.0, -1.0, 1.0)),
                ("mu", mu_spec()),
            ],
            (0.5, 10.0),
            Some("mu"),
            "B = alpha/x, C = beta - mu^2/x^2",
        ),
        entry(
            "regular-legendre",
            "Legendre",
            "-2*x/(1 - x^2)",
            "l*(l + 1)/(1 - x^2)",
            &[("l", ParamSpec::ranged(2.0, 1.0, 3.0))],
            (-0.9, 0.9),
            Some("l"),
            "",
        ),
        entry(
            "associated-legendre",
            "Associated Legendre",
            "-2*x/(1 - x^2)",
            "l*(l + 1)/(1 - x^2) - m^2/(1 - x^2)^2",
            &[
                ("l", ParamSpec::ranged(2.0, 1.0, 3.0)),
                ("m", ParamSpec::ranged(1.0, 0.0, 2.0)),
            ],
            (-0.9, 0.9),
            Some("m"),
            "",
        ),
        entry(
            "identity",
            "Identity",
            "0",
            "0",
            &[],
            (-10.0, 10.0),
            None,
            "solutions y = a0*x + b0",
        ),
        entry(
            "harmonic",
            "Harmonic oscillator",
            "0",
            "omega^2",
            &[("omega", ParamSpec::ranged(1.0, 0.5, 2.0))],
            (-10.0, 10.0),
            None,
            "",
        ),
    ];
    for e in extra {
        reg.insert(e).expect("unique built-in names");
    }
    reg
}
