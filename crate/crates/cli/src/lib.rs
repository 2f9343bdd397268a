//! `odekit` command line: registry management, derivations, verification
//! runs and table reproduction.

mod commands;
mod output;

pub use output::{parse_csv, render, Format};

use clap::{Args, Parser, Subcommand};
use odekit_core::ode::{builtin_registry, AdditionMode, Registry};
use odekit_core::verify::{Report, VerifyConfig};
use std::collections::BTreeMap;
use std::ffi::OsString;
use std::io::Write;
use std::path::PathBuf;

/// Exit status when every record passes.
pub const EXIT_PASS: i32 = 0;
/// Exit status when at least one record fails.
pub const EXIT_FAIL: i32 = 1;
/// Exit status for usage and I/O errors.
pub const EXIT_USAGE: i32 = 2;

#[derive(Debug, Parser)]
#[command(
    name = "odekit",
    version,
    about = "Semigroup algebra, Lagrangians and ladder factorization for y'' + B y' + C y = 0"
)]
pub struct Cli {
    #[command(flatten)]
    pub global: GlobalArgs,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Args)]
pub struct GlobalArgs {
    /// Registry JSON file overriding built-in equations by name; repeatable,
    /// later files win.
    #[arg(long = "registry", global = true)]
    pub registries: Vec<PathBuf>,
    /// Addition mode for `add`.
    #[arg(long, global = true, default_value = "average")]
    pub mode: AdditionMode,
    /// Relative Euler-Lagrange residual tolerance along solutions.
    #[arg(long = "tol-el", global = true, default_value_t = 1e-6)]
    pub tol_el: f64,
    /// Sampled-equality tolerance.
    #[arg(long = "tol-sym", global = true, default_value_t = 1e-9)]
    pub tol_sym: f64,
    /// Seed for every sampled comparison.
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, global = true, value_enum, default_value = "json")]
    pub format: Format,
    /// Write the report here instead of stdout.
    #[arg(long, global = true)]
    pub output: Option<PathBuf>,
    /// Extra ladder families (JSON) for `canonicalize`.
    #[arg(long, global = true)]
    pub families: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Left-fold the semigroup addition over the named equations.
    Add {
        #[arg(required = true, num_args = 1..)]
        names: Vec<String>,
        /// Write the resulting equation as a registry file.
        #[arg(long)]
        save: Option<PathBuf>,
        /// Registry name for the saved result.
        #[arg(long, default_value = "sum")]
        name: String,
    },
    /// Build Lagrangians and gauge functions for one equation and check them.
    Derive {
        name: String,
        /// minimal, middle, maximal, null_mid, null_max, nonstandard, gauge
        #[arg(long, value_delimiter = ',', default_value = "minimal,middle,maximal")]
        kinds: Vec<String>,
        #[arg(long, default_value_t = 1.0)]
        a1: f64,
        #[arg(long, default_value_t = 1.0)]
        a2: f64,
    },
    /// Run the full check battery (`all`, names or name fragments).
    Verify {
        #[arg(default_value = "all")]
        names: Vec<String>,
    },
    /// Recompute the Bessel/Euler catalog table and the addition table.
    Tables,
    /// Second canonical form and factorizability verdict.
    Canonicalize { name: String },
    /// Bessel function values and plane-wave expansion coefficients.
    Bessel {
        #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
        mu: f64,
        #[arg(long, default_value_t = 1.0)]
        x: f64,
        #[arg(long = "n-max", default_value_t = 8)]
        n_max: usize,
    },
}

impl GlobalArgs {
    pub fn verify_config(&self) -> VerifyConfig {
        VerifyConfig {
            seed: self.seed,
            tol_el: self.tol_el,
            tol_sym: self.tol_sym,
            ..VerifyConfig::default()
        }
    }

    pub fn load_registry(&self) -> anyhow::Result<Registry> {
        let mut reg = builtin_registry();
        for path in &self.registries {
            let text = std::fs::read_to_string(path)
                .map_err(|e| anyhow::anyhow!("{}: {e}", path.display()))?;
            reg.merge_json(&text)
                .map_err(|e| anyhow::anyhow!("{}: {e}", path.display()))?;
        }
        Ok(reg)
    }

    fn echo(&self, command: &Command) -> BTreeMap<String, String> {
        let mut m = BTreeMap::new();
        let (name, args) = match command {
            Command::Add { names, .. } => ("add", names.join(" ")),
            Command::Derive {
                name,
                kinds,
                a1,
                a2,
            } => (
                "derive",
                format!("{name} kinds={} a1={a1} a2={a2}", kinds.join(",")),
            ),
            Command::Verify { names } => ("verify", names.join(" ")),
            Command::Tables => ("tables", String::new()),
            Command::Canonicalize { name } => ("canonicalize", name.clone()),
            Command::Bessel { mu, x, n_max } => ("bessel", format!("mu={mu} x={x} n_max={n_max}")),
        };
        m.insert("subcommand".into(), name.into());
        m.insert("arguments".into(), args);
        m.insert("mode".into(), self.mode.to_string());
        m.insert("seed".into(), self.seed.to_string());
        m.insert("tol_el".into(), format!("{:e}", self.tol_el));
        m.insert("tol_sym".into(), format!("{:e}", self.tol_sym));
        m.insert("format".into(), self.format.to_string());
        let regs: Vec<String> = self
            .registries
            .iter()
            .map(|p| p.display().to_string())
            .collect();
        m.insert("registries".into(), regs.join(","));
        if let Some(f) = &self.families {
            m.insert("families".into(), f.display().to_string());
        }
        m
    }
}

/// Runs one command and returns the report.
pub fn execute(cli: &Cli) -> anyhow::Result<Report> {
    let g = &cli.global;
    let reg = g.load_registry()?;
    let cfg = g.verify_config();
    let (tables, records) = match &cli.command {
        Command::Add { names, save, name } => {
            commands::add(&reg, names, g.mode, &cfg, save.as_deref(), name)?
        }
        Command::Derive {
            name,
            kinds,
            a1,
            a2,
        } => commands::derive(&reg, name, kinds, *a1, *a2, &cfg)?,
        Command::Verify { names } => commands::verify(&reg, names, &cfg)?,
        Command::Tables => commands::tables(&reg, &cfg)?,
        Command::Canonicalize { name } => {
            commands::canonicalize(&reg, name, g.families.as_deref(), &cfg)?
        }
        Command::Bessel { mu, x, n_max } => commands::bessel(*mu, *x, *n_max)?,
    };
    Ok(Report::new(g.echo(&cli.command), records).with_tables(tables))
}

/// Parses arguments, runs, writes the report and returns the exit status.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                EXIT_USAGE
            } else {
                EXIT_PASS
            };
        }
    };
    let report = match execute(&cli) {
        Ok(r) => r,
        Err(e) => {
            eprintln!("error: {e:#}");
            return EXIT_USAGE;
        }
    };
    let text = match render(&report, cli.global.format) {
        Ok(t) => t,
        Err(e) => {
            eprintln!("error: {e:#}");
            return EXIT_USAGE;
        }
    };
    let written = match &cli.global.output {
        Some(path) => {
            std::fs::write(path, &text).map_err(|e| anyhow::anyhow!("{}: {e}", path.display()))
        }
        None => std::io::stdout()
            .write_all(text.as_bytes())
            .map_err(Into::into),
    };
    if let Err(e) = written {
        eprintln!("error: {e:#}");
        return EXIT_USAGE;
    }
    for f in report.failures() {
        eprintln!("FAIL {}: {}", f.check_id, f.witness);
    }
    if report.passed() {
        EXIT_PASS
    } else {
        EXIT_FAIL
    }
}
