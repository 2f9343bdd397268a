use clap::ValueEnum;
use odekit_core::verify::{CheckRecord, Report};
use std::fmt;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Csv,
    Markdown,
}

impl fmt::Display for Format {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Format::Json => "json",
            Format::Csv => "csv",
            Format::Markdown => "markdown",
        })
    }
}

pub fn render(report: &Report, format: Format) -> anyhow::Result<String> {
    match format {
        Format::Json => Ok(serde_json::to_string_pretty(report)? + "\n"),
        Format::Csv => csv_records(&report.records),
        Format::Markdown => Ok(markdown(report)),
    }
}

/// One row per check record.
fn csv_records(records: &[CheckRecord]) -> anyhow::Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for r in records {
        w.serialize(r)?;
    }
    if records.is_empty() {
        w.write_record([
            "check_id",
            "anchor",
            "status",
            "worst_residual",
            "tolerance",
            "witness",
        ])?;
    }
    Ok(String::from_utf8(w.into_inner()?)?)
}

/// Inverse of the CSV output.
pub fn parse_csv(text: &str) -> anyhow::Result<Vec<CheckRecord>> {
    let mut r = csv::Reader::from_reader(text.as_bytes());
    let mut out = Vec::new();
    for rec in r.deserialize() {
        out.push(rec?);
    }
    Ok(out)
}

fn cell(s: &str) -> String {
    s.replace('|', "\\|").replace('\n', " ")
}

fn markdown(report: &Report) -> String {
    let mut s = format!("# odekit {}\n\n", report.tool_version);
    for (k, v) in &report.config {
        s += &format!("- {k}: {}\n", cell(v));
    }
    for t in &report.tables {
        s += &format!("\n## {}\n\n", t.title);
        s += &format!(
            "| {} |\n",
            t.columns
                .iter()
                .map(|c| cell(c))
                .collect::<Vec<_>>()
                .join(" | ")
        );
        s += &format!("|{}\n", " --- |".repeat(t.columns.len()));
        for row in &t.rows {
            s += &format!(
                "| {} |\n",
                row.iter().map(|c| cell(c)).collect::<Vec<_>>().join(" | ")
            );
        }
    }
    if !report.records.is_empty() {
        s += "\n## Checks\n\n| check | anchor | status | worst | tolerance | witness |\n| --- | --- | --- | --- | --- | --- |\n";
        for r in &report.records {
            let worst = r
                .worst_residual
                .map_or_else(|| "n/a".to_string(), |w| format!("{w:.3e}"));
            s += &format!(
                "| {} | {} | {} | {} | {:.1e} | {} |\n",
                cell(&r.check_id),
                cell(&r.anchor),
                r.status,
                worst,
                r.tolerance,
                cell(&r.witness)
            );
        }
    }
    let failed = report.failures().count();
    s += &format!("\n{} checks, {} failed\n", report.records.len(), failed);
    s
}
