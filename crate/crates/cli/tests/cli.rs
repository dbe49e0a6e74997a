use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;
use tempfile::TempDir;

fn bin() -> Command {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_susykit"));
    cmd.env_remove("SUSYKIT_THREADS");
    cmd
}

fn core_tests(rel: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("../core/tests")
        .join(rel)
}

fn run(args: &[&str], config: &Path, out: &Path) -> Output {
    bin()
        .args(&args[..1])
        .arg(config)
        .arg("-o")
        .arg(out)
        .args(&args[1..])
        .output()
        .unwrap()
}

fn write_config(dir: &TempDir, name: &str, text: &str) -> PathBuf {
    let path = dir.path().join(name);
    fs::write(&path, text).unwrap();
    path
}

fn edit_config(rel: &str, edit: impl FnOnce(&mut Value)) -> String {
    let mut v: Value = serde_json::from_str(&fs::read_to_string(core_tests(rel)).unwrap()).unwrap();
    edit(&mut v);
    v.to_string()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn read_csv(path: &Path) -> (Vec<String>, Vec<Vec<String>>) {
    let mut r = csv::Reader::from_path(path).unwrap();
    let header = r.headers().unwrap().iter().map(String::from).collect();
    let rows = r
        .records()
        .map(|rec| rec.unwrap().iter().map(String::from).collect())
        .collect();
    (header, rows)
}

fn column(header: &[String], name: &str) -> usize {
    header.iter().position(|h| h == name).unwrap()
}

/// Values of one side from `spectrum.csv`.
fn side_values(path: &Path, side: &str) -> Vec<f64> {
    let (h, rows) = read_csv(path);
    let (s, v) = (column(&h, "side"), column(&h, "value"));
    rows.iter()
        .filter(|r| r[s] == side)
        .map(|r| r[v].parse().unwrap())
        .collect()
}

#[test]
fn construct_writes_harmonic_potentials() {
    let out = TempDir::new().unwrap();
    let o = run(
        &["construct"],
        &core_tests("corpus/nd01_harmonic.json"),
        out.path(),
    );
    assert!(o.status.success(), "{}", stderr(&o));
    let (h, rows) = read_csv(&out.path().join("potentials.csv"));
    let (q, vp, vm) = (
        column(&h, "q"),
        column(&h, "vplus_0"),
        column(&h, "vminus_0"),
    );
    assert!(rows.len() > 190);
    for r in &rows {
        let x: f64 = r[q].parse().unwrap();
        let plus: f64 = r[vp].parse().unwrap();
        let minus: f64 = r[vm].parse().unwrap();
        assert!(
            (plus - (x * x / 2.0 - 1.0)).abs() <= 1e-12,
            "q = {x}: {plus}"
        );
        assert!(
            (minus - (x * x / 2.0 + 1.0)).abs() <= 1e-12,
            "q = {x}: {minus}"
        );
    }
    for name in ["summary.json", "supercharge.csv"] {
        assert!(out.path().join(name).exists(), "{name}");
    }
}

#[test]
fn degenerate_config_with_c10_is_rejected() {
    let dir = TempDir::new().unwrap();
    let text = edit_config("corpus/dg01_quadratic_linear.json", |v| {
        v["C10"] = 0.5.into()
    });
    let o = run(
        &["construct"],
        &write_config(&dir, "c10.json", &text),
        dir.path(),
    );
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("C10"), "{}", stderr(&o));
}

#[test]
fn missing_field_names_the_field() {
    let dir = TempDir::new().unwrap();
    let text = edit_config("corpus/nd02_tanh_sine.json", |v| {
        v.as_object_mut().unwrap().remove("v1");
    });
    let o = run(
        &["verify"],
        &write_config(&dir, "nov1.json", &text),
        dir.path(),
    );
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("field `v1`"), "{}", stderr(&o));
}

#[test]
fn malformed_json_is_a_config_error() {
    let dir = TempDir::new().unwrap();
    let o = run(
        &["verify"],
        &write_config(&dir, "bad.json", "{\"branch\": "),
        dir.path(),
    );
    assert_eq!(o.status.code(), Some(2));
    let o = run(&["verify"], &dir.path().join("absent.json"), dir.path());
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn harmonic_verify_passes() {
    let out = TempDir::new().unwrap();
    let o = run(
        &["verify"],
        &core_tests("corpus/nd01_harmonic.json"),
        out.path(),
    );
    assert!(o.status.success(), "{}{}", stdout(&o), stderr(&o));
    let report: Value =
        serde_json::from_str(&fs::read_to_string(out.path().join("report.json")).unwrap()).unwrap();
    assert_eq!(report["pass"], Value::Bool(true));
    assert!(report["spectral"].is_object());
    assert!(out.path().join("spectrum.csv").exists());
    assert!(out.path().join("timings.json").exists());
}

#[test]
fn perturbed_witness_fails_with_conditions_flagged() {
    let out = TempDir::new().unwrap();
    let config = core_tests("witness/w00_sine.json");
    let o = run(&["verify", "--allow-perturb"], &config, out.path());
    assert_eq!(o.status.code(), Some(1), "{}", stderr(&o));
    let report: Value =
        serde_json::from_str(&fs::read_to_string(out.path().join("report.json")).unwrap()).unwrap();
    let entries = report["conditions"]["entries"].as_array().unwrap();
    let failing: Vec<&str> = entries
        .iter()
        .filter(|e| e["pass"] == Value::Bool(false))
        .map(|e| e["id"].as_str().unwrap())
        .collect();
    assert!(
        failing.contains(&"co2") && failing.contains(&"co5"),
        "{failing:?}"
    );
    assert!(stdout(&o).contains("FAIL"));

    let o = run(&["verify"], &config, out.path());
    assert_eq!(
        o.status.code(),
        Some(0),
        "perturb block is ignored without the flag"
    );
    assert!(stdout(&o).contains("perturb"), "{}", stdout(&o));
}

#[test]
fn skip_spectral_leaves_out_the_section() {
    let out = TempDir::new().unwrap();
    let o = run(
        &["verify", "--skip-spectral"],
        &core_tests("corpus/nd01_harmonic.json"),
        out.path(),
    );
    assert!(o.status.success(), "{}", stderr(&o));
    let report: Value =
        serde_json::from_str(&fs::read_to_string(out.path().join("report.json")).unwrap()).unwrap();
    assert!(report.get("spectral").is_none());
    assert!(report["verdicts"]
        .as_array()
        .unwrap()
        .iter()
        .all(|v| v["name"] != "almost_isospectral"));
}

#[test]
fn harmonic_spectrum_has_two_extra_plus_levels() {
    let out = TempDir::new().unwrap();
    let o = run(
        &["spectrum", "--levels", "8"],
        &core_tests("corpus/nd01_harmonic.json"),
        out.path(),
    );
    assert!(o.status.success(), "{}", stderr(&o));
    let summary: Value =
        serde_json::from_str(&fs::read_to_string(out.path().join("spectrum.json")).unwrap())
            .unwrap();
    let unmatched: Vec<f64> = summary["spectrum"]["matching"]["unmatched_plus"]
        .as_array()
        .unwrap()
        .iter()
        .map(|l| l["value"].as_f64().unwrap())
        .collect();
    assert_eq!(unmatched.len(), 2, "{unmatched:?}");
    assert!((unmatched[0] + 0.5).abs() < 1e-3 && (unmatched[1] - 0.5).abs() < 1e-3);

    let csv = out.path().join("spectrum.csv");
    let (h, rows) = read_csv(&csv);
    let (side, partner) = (column(&h, "side"), column(&h, "matched_index"));
    let unmatched_rows = rows
        .iter()
        .filter(|r| r[side] == "plus" && r[partner] == "none")
        .count();
    assert_eq!(unmatched_rows, 4, "two doubly degenerate levels");
    assert!(out.path().join("potentials.dat").exists());
}

#[test]
fn small_box_warns_about_wall_leakage() {
    let dir = TempDir::new().unwrap();
    let text = edit_config("corpus/nd01_harmonic.json", |v| {
        v["grid"] = serde_json::json!({"a": -2, "b": 2, "M": 200});
    });
    let o = run(
        &["spectrum", "--levels", "4"],
        &write_config(&dir, "box.json", &text),
        dir.path(),
    );
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(
        stdout(&o).contains("warning:") && stdout(&o).contains("wall"),
        "{}",
        stdout(&o)
    );
}

#[test]
fn free_particle_box_levels() {
    let out = TempDir::new().unwrap();
    let o = run(
        &["spectrum"],
        &core_tests("custom/free_particle.json"),
        out.path(),
    );
    assert!(o.status.success(), "{}", stderr(&o));
    let plus = side_values(&out.path().join("spectrum.csv"), "plus");
    assert_eq!(plus.len(), 4);
    let length = 2.0;
    for (k, e) in plus.iter().enumerate() {
        let n = (k + 1) as f64;
        let exact = n * n * std::f64::consts::PI.powi(2) / (2.0 * length * length);
        assert!(
            (e - exact).abs() / exact < 1e-3,
            "level {k}: {e} vs {exact}"
        );
    }
}

#[test]
fn reports_are_reproducible_for_a_seed() {
    let (a, b) = (TempDir::new().unwrap(), TempDir::new().unwrap());
    let config = core_tests("corpus/dg01_quadratic_linear.json");
    for out in [&a, &b] {
        let o = run(&["verify", "--seed", "7"], &config, out.path());
        assert!(o.status.success(), "{}", stderr(&o));
    }
    let read = |d: &TempDir| fs::read(d.path().join("report.json")).unwrap();
    assert_eq!(read(&a), read(&b));
}

#[test]
fn singular_potential_in_box_is_rejected() {
    let dir = TempDir::new().unwrap();
    let text = r#"{"branch": "custom-nfold", "n": 1, "N": 1,
        "Vplus": [["1/q"]], "Vminus": [["1/q"]],
        "Pminus": [[["0"]], [["1"]]], "C": [[[0]]],
        "domain": {"a": -1, "b": 1}, "grid": {"a": -1, "b": 1, "M": 199}}"#;
    let o = run(
        &["spectrum"],
        &write_config(&dir, "sing.json", text),
        dir.path(),
    );
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("singular"), "{}", stderr(&o));
}

#[test]
fn thread_cap_must_be_a_positive_integer() {
    let out = TempDir::new().unwrap();
    let config = core_tests("corpus/nd01_harmonic.json");
    for bad in ["abc", "0"] {
        let o = bin()
            .env("SUSYKIT_THREADS", bad)
            .args(["construct"])
            .arg(&config)
            .arg("-o")
            .arg(out.path())
            .output()
            .unwrap();
        assert_eq!(o.status.code(), Some(2), "{bad}");
        assert!(stderr(&o).contains("SUSYKIT_THREADS"));
    }
    let o = bin()
        .env("SUSYKIT_THREADS", "2")
        .args(["verify", "--skip-spectral"])
        .arg(&config)
        .arg("-o")
        .arg(out.path())
        .output()
        .unwrap();
    assert!(o.status.success(), "{}", stderr(&o));
}

#[test]
fn unknown_subcommand_is_a_usage_error() {
    let o = bin().arg("frobnicate").output().unwrap();
    assert_eq!(o.status.code(), Some(2));
}
