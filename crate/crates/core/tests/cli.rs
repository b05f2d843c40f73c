use std::path::Path;
use std::process::{Command, Output};

use fetalsim::volume::load_intensity;

const SMALL: &str = r#"{"schema": 1, "seed": 9,
  "phantom": {"dims": [32, 32, 32], "spacing_mm": [2.0, 2.0, 2.0]},
  "solver": {"max_iterations": 5, "lambda": 0.5}}"#;

fn run(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_fetalsim"))
        .current_dir(dir)
        .args(args)
        .env("FETALSIM_LOG", "error")
        .output()
        .unwrap()
}

fn ok(out: &Output) {
    assert!(out.status.success(), "stderr: {}", String::from_utf8_lossy(&out.stderr));
}

fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

fn count(dir: &Path, suffix: &str) -> usize {
    std::fs::read_dir(dir)
        .unwrap()
        .filter(|e| e.as_ref().unwrap().file_name().to_string_lossy().ends_with(suffix))
        .count()
}

#[test]
fn phantom_is_reproducible_and_creates_output() {
    let d = tempfile::tempdir().unwrap();
    ok(&run(d.path(), &["phantom", "--seed", "42", "-o", "a"]));
    ok(&run(d.path(), &["phantom", "--seed", "42", "-o", "b/c/d"]));
    let a = std::fs::read(d.path().join("a/phantom_labels.nii.gz")).unwrap();
    let b = std::fs::read(d.path().join("b/c/d/phantom_labels.nii.gz")).unwrap();
    assert_eq!(a, b);
    assert!(d.path().join("a/phantom_manifest.json").exists());
}

#[test]
fn invalid_phantom_names_invariant() {
    let d = tempfile::tempdir().unwrap();
    std::fs::write(d.path().join("c.json"), r#"{"schema": 1, "phantom": {"cortical_thickness_mm": 100.0}}"#).unwrap();
    let out = run(d.path(), &["phantom", "--config", "c.json", "-o", "o"]);
    assert!(!out.status.success());
    assert!(stderr(&out).contains("cortical shell thickness"), "{}", stderr(&out));
}

#[test]
fn simulate_and_reconstruct() {
    let d = tempfile::tempdir().unwrap();
    std::fs::write(d.path().join("c.json"), SMALL).unwrap();
    ok(&run(d.path(), &["simulate", "--config", "c.json", "-o", "s"]));
    let stacks = d.path().join("s/stacks");
    assert_eq!(count(&stacks, "_labels.nii.gz"), 6);
    assert_eq!(count(&stacks, ".nii.gz"), 12);
    assert_eq!(count(&stacks, ".json"), 6);

    ok(&run(d.path(), &["reconstruct", "--config", "c.json", "-o", "s", "--lambda", "0.25"]));
    let sr = load_intensity(d.path().join("s/sr.nii.gz")).unwrap();
    for s in sr.spacing() {
        assert!((s - 0.8).abs() < 1e-6, "{s}");
    }
    assert!(d.path().join("s/sr_labels.nii.gz").exists());
    let log = std::fs::read_to_string(d.path().join("s/convergence.csv")).unwrap();
    assert!(log.starts_with("iteration,objective,step\n"));
    let manifest: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(d.path().join("s/reconstruct_manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["config"]["solver"]["lambda"], 0.25);

    std::fs::remove_file(stacks.join("stack-03_coronal.json")).unwrap();
    let out = run(d.path(), &["reconstruct", "--config", "c.json", "-o", "s"]);
    assert!(!out.status.success());
    assert!(stderr(&out).contains("stack-03_coronal.json"), "{}", stderr(&out));
}

#[test]
fn noiseless_simulation_is_bit_exact_and_presets_differ() {
    let d = tempfile::tempdir().unwrap();
    std::fs::write(d.path().join("c.json"), SMALL).unwrap();
    for o in ["x", "y"] {
        ok(&run(d.path(), &["simulate", "--config", "c.json", "--motion", "none", "--snr", "inf", "-o", o]));
    }
    for e in std::fs::read_dir(d.path().join("x/stacks")).unwrap() {
        let name = e.unwrap().file_name();
        let a = std::fs::read(d.path().join("x/stacks").join(&name)).unwrap();
        let b = std::fs::read(d.path().join("y/stacks").join(&name)).unwrap();
        assert_eq!(a, b, "{name:?}");
    }
    let mut means = Vec::new();
    for preset in ["target-like", "source-like"] {
        ok(&run(d.path(), &["simulate", "--config", "c.json", "--preset", preset, "-o", preset]));
        let v = load_intensity(d.path().join(preset).join("stacks/stack-01_axial.nii.gz")).unwrap();
        means.push(v.data().iter().map(|&x| x as f64).sum::<f64>() / v.data().len() as f64);
    }
    assert!((means[0] - means[1]).abs() > 0.01 * means[0], "{means:?}");
}

#[test]
fn evaluate_reports_and_line_numbers() {
    let d = tempfile::tempdir().unwrap();
    let mut csv = String::from("subject,cohort,configuration,tissue,dsc\n");
    for s in 0..4 {
        for t in 1..=7 {
            csv += &format!("s{s},,A,{t},{:.2}\n", 0.5 + 0.01 * t as f64);
            csv += &format!("s{s},,B,{t},{:.2}\n", 0.6 + 0.01 * t as f64 + 0.01 * s as f64);
        }
    }
    std::fs::write(d.path().join("dsc.csv"), &csv).unwrap();
    let out = run(d.path(), &["evaluate", "dsc.csv", "--compare", "B:A", "-o", "r"]);
    ok(&out);
    let table = String::from_utf8_lossy(&out.stdout);
    for row in ["CSF", "Cortical GM", "WM", "Ventricles", "Cerebellum", "Deep GM", "Brain stem", "Overall"] {
        assert!(table.lines().any(|l| l.starts_with(row)), "{row} missing:\n{table}");
    }
    let cmp = std::fs::read_to_string(d.path().join("r/comparisons.csv")).unwrap();
    // four positive differences: p = 2/16, adjusted 7·0.125 = 0.875
    assert!(cmp.contains("all,WM,B,A,4,0,1.250000e-1,8.750000e-1,n.s."), "{cmp}");
    let json: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(d.path().join("r/report.json")).unwrap()).unwrap();
    assert_eq!(json["cohorts"][0]["comparisons"][0]["p_adjusted"], 0.875);

    std::fs::write(d.path().join("bad.csv"), "subject,cohort,configuration,tissue,dsc\ns0,,A,WM,0.5\ns0,,A,WM,0.6\n").unwrap();
    let out = run(d.path(), &["evaluate", "bad.csv", "-o", "r2"]);
    assert!(!out.status.success());
    assert!(stderr(&out).contains("bad.csv:3"), "{}", stderr(&out));
}

#[test]
fn manifest_replays_config() {
    let d = tempfile::tempdir().unwrap();
    ok(&run(d.path(), &["phantom", "--seed", "5", "-o", "a"]));
    ok(&run(d.path(), &["phantom", "--config", "a/phantom_manifest.json", "-o", "b"]));
    let a = std::fs::read(d.path().join("a/phantom_labels.nii.gz")).unwrap();
    let b = std::fs::read(d.path().join("b/phantom_labels.nii.gz")).unwrap();
    assert_eq!(a, b);
}
