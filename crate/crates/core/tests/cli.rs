use std::path::PathBuf;
use std::process::Command;

use gsrisk::cli::{run_with, table::TABLE_VERSION};

fn fixture(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("tests/fixtures")
        .join(name)
}

fn golden(name: &str) -> String {
    std::fs::read_to_string(
        PathBuf::from(env!("CARGO_MANIFEST_DIR"))
            .join("tests/golden")
            .join(name),
    )
    .unwrap()
}

fn gsrisk(args: &[&str]) -> (i32, String, String) {
    let mut out = Vec::new();
    let mut err = Vec::new();
    let mut argv = vec!["gsrisk"];
    argv.extend_from_slice(args);
    let code = run_with(argv, &mut out, &mut err);
    (code, String::from_utf8(out).unwrap(), String::from_utf8(err).unwrap())
}

fn write_config(dir: &tempfile::TempDir, name: &str, text: &str) -> String {
    let p = dir.path().join(name);
    std::fs::write(&p, text).unwrap();
    p.to_str().unwrap().to_string()
}

fn model_a_with(edit: impl FnOnce(&mut serde_json::Value)) -> String {
    let mut v: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(fixture("model_a.json")).unwrap()).unwrap();
    edit(&mut v);
    v.to_string()
}

fn csv_rows(text: &str) -> Vec<Vec<String>> {
    text.split("\r\n")
        .skip(1)
        .filter(|l| !l.is_empty())
        .map(|l| l.split(',').map(str::to_string).collect())
        .collect()
}

#[test]
fn validate_reports_two_positive_roots() {
    let (code, out, _) = gsrisk(&["validate", fixture("model_a.json").to_str().unwrap()]);
    assert_eq!(code, 0);
    assert!(out.contains("positive roots: 2"), "{out}");
    assert!(out.contains("loading margin: base = 0.25"), "{out}");
}

#[test]
fn input_errors_exit_one() {
    let dir = tempfile::tempdir().unwrap();
    let bad = write_config(&dir, "bad.json", "{ \"premium_rate\": 1.0,");
    let (code, _, err) = gsrisk(&["validate", &bad]);
    assert_eq!(code, 1);
    assert!(err.contains("ParseError"), "{err}");

    let poor = write_config(&dir, "poor.json", &model_a_with(|v| v["premium_rate"] = 0.5.into()));
    let (code, _, err) = gsrisk(&["validate", &poor]);
    assert_eq!(code, 1);
    assert!(err.contains("SafetyLoadingViolated") && err.contains("-0.25"), "{err}");

    let extra = write_config(&dir, "extra.json", &model_a_with(|v| v["colour"] = "red".into()));
    let (code, _, err) = gsrisk(&["validate", &extra]);
    assert_eq!(code, 1);
    assert!(err.contains("SchemaError"), "{err}");

    let kind = write_config(
        &dir,
        "kind.json",
        &model_a_with(|v| v["heavy_tail"]["kind"] = "cauchy".into()),
    );
    assert_eq!(gsrisk(&["validate", &kind]).0, 1);

    let missing = dir.path().join("nope.json");
    assert_eq!(gsrisk(&["validate", missing.to_str().unwrap()]).0, 1);
    assert_eq!(gsrisk(&["frobnicate"]).0, 1);
    assert_eq!(
        gsrisk(&[
            "compute",
            fixture("model_a.json").to_str().unwrap(),
            "--u-grid",
            "3:1:1"
        ])
        .0,
        1
    );
}

#[test]
fn help_and_version_exit_zero() {
    let (code, out, _) = gsrisk(&["--help"]);
    assert_eq!(code, 0);
    assert!(out.contains("asymptotics"));
    let (code, out, _) = gsrisk(&["--version"]);
    assert_eq!(code, 0);
    assert!(out.contains(TABLE_VERSION), "{out}");
}

#[test]
fn compute_matches_golden_files() {
    let a = fixture("model_a.json");
    let (code, out, _) = gsrisk(&["compute", a.to_str().unwrap(), "--u-grid", "0:5:0.5"]);
    assert_eq!(code, 0);
    assert_eq!(out, golden("model_a_compute.csv"));

    let cl = fixture("cl_exp.json");
    let (code, out, _) = gsrisk(&[
        "compute",
        cl.to_str().unwrap(),
        "--u-grid",
        "0:10:2",
        "--format",
        "json",
    ]);
    assert_eq!(code, 0);
    assert_eq!(out, golden("cl_exp_compute.json"));
}

#[test]
fn golden_values_are_the_library_values() {
    let model = gsrisk::cli::Loaded::from_path(&fixture("model_a.json")).unwrap();
    let rows = csv_rows(&golden("model_a_compute.csv"));
    let solver = gsrisk::GsSolver::new(&model.model, model.penalty.clone(), model.grid(5.0)).unwrap();
    for u in [0.0, 1.0, 2.0, 5.0] {
        let row = &rows[(u * 2.0) as usize];
        let got: f64 = row[4].parse().unwrap();
        let want = solver.evaluate(u).unwrap().corrected;
        assert!((got - want).abs() <= 1e-11 * want.abs(), "u={u}: {got} vs {want}");
    }
}

#[test]
fn compute_is_deterministic_and_out_matches_stdout() {
    let a = fixture("model_a.json");
    let dir = tempfile::tempdir().unwrap();
    let file = dir.path().join("t.csv");
    let first = gsrisk(&["compute", a.to_str().unwrap(), "--u-grid", "0:3:1"]).1;
    let second = gsrisk(&["compute", a.to_str().unwrap(), "--u-grid", "0:3:1"]).1;
    assert_eq!(first, second);
    let (code, out, _) = gsrisk(&[
        "compute",
        a.to_str().unwrap(),
        "--u-grid",
        "0:3:1",
        "--out",
        file.to_str().unwrap(),
    ]);
    assert_eq!(code, 0);
    assert!(out.is_empty());
    assert_eq!(std::fs::read_to_string(&file).unwrap(), first);
}

#[test]
fn zero_eps_gives_base_equal_corrected() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(&dir, "e0.json", &model_a_with(|v| v["epsilon"] = 0.0.into()));
    let (code, out, _) = gsrisk(&["compute", &cfg, "--u-grid", "0:6:1.5"]);
    assert_eq!(code, 0);
    for row in csv_rows(&out) {
        assert_eq!(row[2], row[4]);
    }
}

#[test]
fn classical_exponential_column() {
    let cl = fixture("cl_exp.json");
    let (code, out, _) = gsrisk(&["compute", cl.to_str().unwrap(), "--u-grid", "0:10:0.5"]);
    assert_eq!(code, 0);
    let rows = csv_rows(&out);
    assert_eq!(rows.len(), 21);
    for row in rows {
        let u: f64 = row[0].parse().unwrap();
        let v: f64 = row[4].parse().unwrap();
        assert!((v - 0.8 * (-0.2 * u).exp()).abs() < 1e-8, "u={u}: {v}");
    }
}

#[test]
fn compare_single_point_and_noise_floor() {
    let a = fixture("model_a.json");
    let (code, out, err) = gsrisk(&[
        "compare",
        a.to_str().unwrap(),
        "--u-grid",
        "1",
        "--eps-ladder",
        "0.1",
        "--paths",
        "2000",
    ]);
    assert_eq!(code, 0);
    assert_eq!(csv_rows(&out).len(), 1);
    assert!(err.contains("slope |corrected - MC| = unavailable"), "{err}");

    let (code, out, err) = gsrisk(&["compare", a.to_str().unwrap(), "--u-grid", "1", "--paths", "100"]);
    assert_eq!(code, 0);
    assert_eq!(csv_rows(&out).len(), 3);
    assert!(err.contains("noise floor: every point"), "{err}");
}

#[test]
fn compare_tolerance_failure_exits_three() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(&dir, "tol.json", &model_a_with(|v| v["mc"]["tolerance"] = 1e-6.into()));
    let (code, _, err) = gsrisk(&["compare", &cfg, "--u-grid", "1", "--paths", "500"]);
    assert_eq!(code, 3);
    assert!(err.contains("InsufficientPaths"), "{err}");
}

#[test]
fn compare_needs_mc_section() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        &dir,
        "nomc.json",
        &model_a_with(|v| {
            v.as_object_mut().unwrap().remove("mc");
        }),
    );
    assert_eq!(gsrisk(&["compare", &cfg, "--u-grid", "1"]).0, 1);
}

#[test]
fn q_zero_outside_the_classical_case_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(&dir, "q0.json", &model_a_with(|v| v["q"] = 0.0.into()));
    let (code, _, err) = gsrisk(&["compute", &cfg, "--u-grid", "1"]);
    assert_eq!(code, 1);
    assert!(err.contains("PreconditionViolated"), "{err}");
}

#[test]
fn asymptotics_emits_the_table_then_reports_the_bound() {
    let a = fixture("model_a.json");
    let (code, out, err) = gsrisk(&["asymptotics", a.to_str().unwrap(), "--u-grid", "10:30:10"]);
    assert_eq!(code, 2);
    assert_eq!(csv_rows(&out).len(), 3);
    assert!(err.contains("NonIntegrableKappa"), "{err}");

    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        &dir,
        "clb.json",
        &std::fs::read_to_string(fixture("cl_exp.json"))
            .unwrap()
            .replace("\"epsilon\": 0.0", "\"epsilon\": 0.1"),
    );
    let (code, out, err) = gsrisk(&["asymptotics", &cfg, "--u-grid", "50:200:50"]);
    assert_eq!(code, 0, "{err}");
    assert!(err.contains("asymptotic bound: 0.4"), "{err}");
    assert!(!err.contains("VIOLATION"), "{err}");
    // approaches the bound from above like 1/u
    let ratios: Vec<f64> = csv_rows(&out).iter().map(|r| r[7].parse().unwrap()).collect();
    assert!(ratios.windows(2).all(|w| w[1] < w[0] && w[1] > 0.4));
    assert!(err.contains("extrapolated limit of the ratio: 0.39"), "{err}");
}

#[test]
fn binary_output_does_not_depend_on_thread_count() {
    let a = fixture("model_a.json");
    let run = |threads: &str| {
        let out = Command::new(env!("CARGO_BIN_EXE_gsrisk"))
            .args([
                "compare",
                a.to_str().unwrap(),
                "--u-grid",
                "1",
                "--paths",
                "10000",
                "--format",
                "json",
            ])
            .env("GSRISK_THREADS", threads)
            .output()
            .unwrap();
        assert_eq!(out.status.code(), Some(0));
        out.stdout
    };
    let one = run("1");
    assert_eq!(one, run("4"));
    assert_eq!(one, run("1"));
}
