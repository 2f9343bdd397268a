use odekit_cli::parse_csv;
use serde_json::Value;
use std::process::{Command, Output};

fn odekit(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_odekit"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn json(args: &[&str]) -> (i32, Value) {
    let o = odekit(args);
    let v = serde_json::from_slice(&o.stdout)
        .unwrap_or_else(|e| panic!("{e}: {}", String::from_utf8_lossy(&o.stderr)));
    (o.status.code().unwrap(), v)
}

fn records(v: &Value) -> &Vec<Value> {
    v["records"].as_array().unwrap()
}

fn record<'a>(v: &'a Value, id: &str) -> &'a Value {
    records(v)
        .iter()
        .find(|r| r["check_id"] == id)
        .unwrap_or_else(|| panic!("no record {id}"))
}

fn table_value(v: &Value, key: &str) -> String {
    v["tables"][0]["rows"]
        .as_array()
        .unwrap()
        .iter()
        .find(|r| r[0] == key)
        .map(|r| r[1].as_str().unwrap().to_string())
        .unwrap_or_else(|| panic!("no row {key}"))
}

#[test]
fn add_names_the_semi_spherical_row() {
    let (code, v) = json(&["add", "regular-bessel", "spherical-bessel"]);
    assert_eq!(code, 0);
    assert_eq!(
        record(&v, "add/result")["witness"],
        "semi-spherical Bessel, α=3/2, β=1"
    );
    assert_eq!(table_value(&v, "alpha"), "3/2");
    assert_eq!(v["config"]["mode"], "average");
}

#[test]
fn add_every_table_pair() {
    let pairs = [
        (
            "regular-bessel",
            "spherical-bessel",
            "semi-spherical Bessel",
        ),
        (
            "modified-bessel",
            "modified-spherical-bessel",
            "modified semi-spherical Bessel",
        ),
        ("regular-bessel", "modified-bessel", "regular Euler"),
        (
            "spherical-bessel",
            "modified-spherical-bessel",
            "spherical Euler",
        ),
        (
            "regular-bessel",
            "modified-spherical-bessel",
            "semi-spherical Euler",
        ),
        (
            "modified-bessel",
            "spherical-bessel",
            "semi-spherical Euler",
        ),
        ("regular-euler", "spherical-euler", "semi-spherical Euler"),
        ("regular-bessel", "regular-euler", "general Bessel form"),
        (
            "spherical-bessel",
            "semi-spherical-euler",
            "general Bessel form",
        ),
    ];
    for (a, b, want) in pairs {
        let (code, v) = json(&["add", a, b]);
        assert_eq!(code, 0, "{a} + {b}");
        let w = record(&v, "add/result")["witness"]
            .as_str()
            .unwrap()
            .to_string();
        assert!(w.starts_with(want), "{a} + {b}: {w}");
    }
}

#[test]
fn add_sum_mode_and_identity() {
    let (_, v) = json(&["add", "identity", "identity"]);
    assert_eq!(record(&v, "add/result")["witness"], "identity");
    let (code, v) = json(&["add", "regular-bessel", "spherical-bessel", "--mode", "sum"]);
    assert_eq!(code, 0);
    // C = 2 - 2 mu^2/x^2 is outside the Bessel family, so no (alpha, beta)
    assert!(records(&v)
        .iter()
        .all(|r| r["check_id"] != "add/alpha-beta"));
    assert_eq!(record(&v, "add/result")["witness"], "no catalog match");
    assert_eq!(record(&v, "add/result")["anchor"], "B(x) = B_1(x) + B_2(x)");
}

#[test]
fn saved_sum_loads_as_a_registry() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("sum.json");
    let p = path.to_str().unwrap();
    let (code, _) = json(&[
        "add",
        "regular-bessel",
        "spherical-bessel",
        "--save",
        p,
        "--name",
        "half",
    ]);
    assert_eq!(code, 0);
    let (code, v) = json(&["verify", "half", "--registry", p]);
    assert_eq!(code, 0, "{v}");
    assert!(records(&v)
        .iter()
        .any(|r| r["check_id"] == "half/canonical.transform"));
}

#[test]
fn derive_null_max_of_identity_is_zero() {
    let (code, v) = json(&["derive", "identity", "--kinds", "null_max"]);
    assert_eq!(code, 0);
    assert_eq!(table_value(&v, "null_max"), "0");
}

#[test]
fn derive_standard_nonstandard_and_gauge() {
    let (code, v) = json(&[
        "derive",
        "general-bessel",
        "--kinds",
        "minimal,maximal,nonstandard,gauge",
    ]);
    assert_eq!(code, 0);
    for id in [
        "general-bessel/minimal.f1",
        "general-bessel/maximal.el-solution",
        "general-bessel/nonstandard.el-solution",
        "general-bessel/gauge.Phi3",
    ] {
        assert_eq!(record(&v, id)["status"], "pass", "{id}");
    }
    let o = odekit(&["derive", "general-bessel", "--kinds", "quartic"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn verify_reports_the_bessel_potential() {
    let (code, v) = json(&["verify", "regular-bessel"]);
    assert_eq!(code, 0);
    let r = record(&v, "regular-bessel/canonical.r");
    assert_eq!(r["status"], "pass");
    assert_eq!(r["anchor"], "r(x, m) = -(m^2 - 1/4)/x^2");
}

#[test]
fn planted_registry_error_fails_verify() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bad.json");
    std::fs::write(
        &path,
        r#"[{"name": "associated-legendre", "B": "-2*x/(1 - x^2)",
             "C": "l*(l + 1)/(1 - x^2) - m^2/(1 - x^2)^2 + 0.01",
             "params": {"l": {"value": 2, "min": 1, "max": 3}, "m": {"value": 1, "min": 0, "max": 2}},
             "index": "m", "window": [-0.9, 0.9]}]"#,
    )
    .unwrap();
    let o = odekit(&["verify", "legendre", "--registry", path.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
    let v: Value = serde_json::from_slice(&o.stdout).unwrap();
    let bad = record(&v, "associated-legendre/shipped.C");
    assert_eq!(bad["status"], "fail");
    assert!(!bad["witness"].as_str().unwrap().is_empty());
    assert!(String::from_utf8_lossy(&o.stderr).contains("FAIL associated-legendre/shipped.C"));
}

#[test]
fn tables_markdown() {
    let o = odekit(&["tables", "--format", "markdown"]);
    assert_eq!(o.status.code(), Some(0));
    let md = stdout(&o);
    assert!(md.contains("| Semi-spherical Bessel | Regular and spherical | 3/2 | 1 | * |"));
    assert!(md.contains("| Regular Euler | 1 | 0 | 1/x |"));
    assert!(md.contains(", 0 failed"));
}

#[test]
fn csv_round_trip() {
    let o = odekit(&["verify", "harmonic", "--format", "csv"]);
    assert_eq!(o.status.code(), Some(0));
    let parsed = parse_csv(&stdout(&o)).unwrap();
    let (_, v) = json(&["verify", "harmonic"]);
    assert_eq!(parsed.len(), records(&v).len());
    assert_eq!(serde_json::to_value(&parsed).unwrap(), v["records"]);
}

#[test]
fn verify_all_is_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let paths: Vec<_> = ["a.json", "b.json"]
        .iter()
        .map(|n| dir.path().join(n))
        .collect();
    for p in &paths {
        let o = odekit(&[
            "verify",
            "all",
            "--seed",
            "5",
            "--output",
            p.to_str().unwrap(),
        ]);
        assert_eq!(
            o.status.code(),
            Some(0),
            "{}",
            String::from_utf8_lossy(&o.stderr)
        );
    }
    let (a, b) = (
        std::fs::read(&paths[0]).unwrap(),
        std::fs::read(&paths[1]).unwrap(),
    );
    assert!(!a.is_empty());
    assert_eq!(a, b);
}

#[test]
fn bessel_subcommand() {
    let (code, v) = json(&["bessel", "--mu", "-0.5", "--x", "2"]);
    assert_eq!(code, 0);
    assert_eq!(record(&v, "bessel/jacobi-anger")["status"], "pass");
    let o = odekit(&["bessel", "--x", "2", "--n-max", "13"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn usage_errors_exit_two() {
    assert_eq!(odekit(&["frobnicate"]).status.code(), Some(2));
    assert_eq!(
        odekit(&["verify", "no-such-equation"]).status.code(),
        Some(2)
    );
    assert_eq!(odekit(&["add"]).status.code(), Some(2));
    assert_eq!(
        odekit(&["verify", "--registry", "/nonexistent.json"])
            .status
            .code(),
        Some(2)
    );
    assert_eq!(odekit(&["--help"]).status.code(), Some(0));
}
