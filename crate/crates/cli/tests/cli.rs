use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_geomqm"))
}

fn scenario(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../scenarios").join(name)
}

fn run(path: &Path, out: &Path, extra: &[&str]) -> Output {
    bin().arg("run").arg(path).arg("--out").arg(out).args(extra).output().unwrap()
}

fn report(out: &Path) -> Value {
    serde_json::from_str(&fs::read_to_string(out.join("report.json")).unwrap()).unwrap()
}

fn check<'a>(r: &'a Value, name: &str) -> &'a Value {
    r["checks"].as_array().unwrap().iter().find(|c| c["name"] == name).unwrap()
}

#[test]
fn roundtrip_scenario_passes() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(&scenario("roundtrip.toml"), dir.path(), &[]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let r = report(dir.path());
    assert_eq!(r["task"], "roundtrip");
    assert_eq!(r["passed"], true);
    for name in ["e_g", "e_F", "e_phi"] {
        assert!(check(&r, name)["value"].as_f64().unwrap() <= 1e-9);
    }
    assert!(dir.path().join("hamiltonian.txt").exists());
}

#[test]
fn ring_spectrum_at_pi_matches_twisted_fourier_modes() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(&scenario("holonomy.toml"), dir.path(), &[]);
    assert_eq!(o.status.code(), Some(0));
    let csv = fs::read_to_string(dir.path().join("spectral_flow.csv")).unwrap();
    let row: Vec<f64> = csv
        .lines()
        .skip(1)
        .map(|l| l.split(',').map(|x| x.parse().unwrap()).collect::<Vec<f64>>())
        .find(|r| (r[0] - std::f64::consts::PI).abs() < 1e-12)
        .expect("row at pi");
    // Eigenvalues 1 - cos(k), k = (2 pi n + pi) / 4.
    let mut want: Vec<f64> = (0..4).map(|n| 1.0 - ((2.0 * n as f64 + 1.0) * std::f64::consts::PI / 4.0).cos()).collect();
    want.sort_by(f64::total_cmp);
    for (a, b) in row[1..].iter().zip(want) {
        assert!((a - b).abs() < 1e-10, "{a} vs {b}");
    }
}

#[test]
fn negative_mass_is_a_config_error() {
    let dir = tempfile::tempdir().unwrap();
    let text = fs::read_to_string(scenario("build.toml")).unwrap().replace("mass = 1.0", "mass = -1.0");
    let path = dir.path().join("bad.toml");
    fs::write(&path, text).unwrap();
    let o = run(&path, &dir.path().join("out"), &[]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("mass"));
    let v = bin().arg("validate").arg(&path).output().unwrap();
    assert_eq!(v.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&v.stderr).contains("mass"));
}

#[test]
fn schema_violation_names_the_path() {
    let dir = tempfile::tempdir().unwrap();
    let text = fs::read_to_string(scenario("evolve.toml")).unwrap().replace("delta = 0.1", "delta = \"small\"");
    let path = dir.path().join("bad.toml");
    fs::write(&path, text).unwrap();
    let o = bin().arg("validate").arg(&path).output().unwrap();
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("evolve.delta"));
}

#[test]
fn failed_check_exits_one() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(&scenario("evolve.toml"), dir.path(), &["--tol-scale", "1e-9"]);
    assert_eq!(o.status.code(), Some(1));
    let r = report(dir.path());
    assert_eq!(r["passed"], false);
    assert_eq!(r["tol_scale"], 1e-9);
}

#[test]
fn numerical_failure_exits_one_with_the_invariant() {
    let dir = tempfile::tempdir().unwrap();
    let text = fs::read_to_string(scenario("build.toml")).unwrap().replace("holonomy = [0.4, -0.7]", "holonomy = [20.0, -0.7]");
    let path = dir.path().join("phase.toml");
    fs::write(&path, text).unwrap();
    let out = dir.path().join("out");
    let o = run(&path, &out, &[]);
    assert_eq!(o.status.code(), Some(1));
    let r = report(&out);
    assert!(r["error"].as_str().unwrap().contains("Peierls phase"));
    assert!(r["result"].is_null());
}

fn strip_wall_time(mut r: Value) -> Value {
    r.as_object_mut().unwrap().remove("wall_time_s");
    r
}

#[test]
fn reports_are_deterministic() {
    for name in ["maxwell.toml", "geodesic.toml"] {
        let a = tempfile::tempdir().unwrap();
        let b = tempfile::tempdir().unwrap();
        assert_eq!(run(&scenario(name), a.path(), &["--seed", "11"]).status.code(), Some(0));
        assert_eq!(run(&scenario(name), b.path(), &["--seed", "11"]).status.code(), Some(0));
        let (ra, rb) = (report(a.path()), report(b.path()));
        assert_eq!(ra["seed"], 11);
        assert_eq!(strip_wall_time(ra), strip_wall_time(rb));
        for entry in fs::read_dir(a.path()).unwrap() {
            let file = entry.unwrap().file_name();
            if file != "report.json" {
                assert_eq!(fs::read(a.path().join(&file)).unwrap(), fs::read(b.path().join(&file)).unwrap());
            }
        }
    }
}

#[test]
fn every_example_scenario_validates_and_passes() {
    let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../scenarios");
    let mut names: Vec<_> = fs::read_dir(&dir).unwrap().map(|e| e.unwrap().path()).collect();
    names.sort();
    assert!(names.len() >= 7);
    for path in names {
        let v = bin().arg("validate").arg(&path).output().unwrap();
        assert_eq!(v.status.code(), Some(0), "{}", path.display());
        let out = tempfile::tempdir().unwrap();
        let o = run(&path, out.path(), &[]);
        assert_eq!(o.status.code(), Some(0), "{}: {}", path.display(), String::from_utf8_lossy(&o.stderr));
    }
}

#[test]
fn maxwell_writes_cochains() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(run(&scenario("maxwell.toml"), dir.path(), &[]).status.code(), Some(0));
    let f = fs::read_to_string(dir.path().join("cochains.csv")).unwrap();
    assert!(f.starts_with("# complex "));
    assert!(f.lines().nth(1).unwrap().starts_with("cell_id,value"));
    assert!(dir.path().join("current.csv").exists());
}

#[test]
fn reconstruct_reads_an_operator_dump() {
    let dir = tempfile::tempdir().unwrap();
    let built = dir.path().join("built");
    assert_eq!(run(&scenario("build.toml"), &built, &[]).status.code(), Some(0));
    let text = fs::read_to_string(scenario("build.toml"))
        .unwrap()
        .replace("task = \"build\"", "task = \"reconstruct\"")
        + "\n[input]\noperator = \"built/hamiltonian.txt\"\n\n[tolerances]\ncure = 1.0\n";
    let path = dir.path().join("rec.toml");
    fs::write(&path, text).unwrap();
    let out = dir.path().join("rec");
    let o = run(&path, &out, &[]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let r = report(&out);
    assert_eq!(check(&r, "positivity")["passed"], true);
    let angles = r["result"]["holonomy"]["angles"].as_array().unwrap();
    assert_eq!(angles.len(), 2);
}

#[test]
fn schema_command_prints_the_document() {
    let o = bin().arg("schema").output().unwrap();
    assert_eq!(o.status.code(), Some(0));
    let text = String::from_utf8(o.stdout).unwrap();
    assert!(text.contains("report.json"));
    assert!(text.contains("gaussian_bump"));
}
