use std::path::Path;
use std::process::{Command, Output};

fn fieldforge(args: &[&str], out: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_fieldforge"))
        .args(args)
        .arg("--out")
        .arg(out)
        .output()
        .unwrap()
}

fn bare(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_fieldforge")).args(args).output().unwrap()
}

#[test]
fn design_writes_the_analytic_length() {
    let dir = tempfile::tempdir().unwrap();
    let o = fieldforge(&["design", "--f0", "28e9"], dir.path());
    assert!(o.status.success());
    let csv = std::fs::read_to_string(dir.path().join("design.csv")).unwrap();
    let mut rows = csv::Reader::from_reader(csv.as_bytes());
    let header = rows.headers().unwrap().clone();
    let row = rows.records().next().unwrap().unwrap();
    let col = |name: &str| row[header.iter().position(|h| h == name).unwrap()].parse::<f64>().unwrap();
    assert!((col("length_mm") - 2.145_670_340_626).abs() < 1e-9);
    assert_eq!(col("eps_eff"), 6.225);
    let manifest: serde_json::Value =
        serde_json::from_slice(&std::fs::read(dir.path().join("manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["status"], "ok");
    assert!(manifest["outputs"].as_array().unwrap().len() >= 2);
}

#[test]
fn design_json_is_parseable() {
    let dir = tempfile::tempdir().unwrap();
    let o = fieldforge(&["design", "--f0", "28e9", "--json"], dir.path());
    assert!(o.status.success());
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert!((v["design"]["length_mm"].as_f64().unwrap() - 2.1457).abs() < 1e-4);
    assert_eq!(v["reference_impedance"].as_array().unwrap().len(), 21);
}

#[test]
fn missing_frequency_is_a_usage_error() {
    assert_eq!(bare(&["design"]).status.code(), Some(2));
    assert_eq!(bare(&["design", "--f0", "-1"]).status.code(), Some(2));
    assert_eq!(bare(&["no-such-command"]).status.code(), Some(2));
}

#[test]
fn cavity_rejects_zero_radius() {
    let dir = tempfile::tempdir().unwrap();
    let o = fieldforge(&["cavity", "--radius", "0"], dir.path());
    assert_eq!(o.status.code(), Some(2));
    let o = fieldforge(&["cavity", "--rect", "0.01,0,0.006"], dir.path());
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn cavity_reports_modes_and_density() {
    let dir = tempfile::tempdir().unwrap();
    let o = fieldforge(
        &["cavity", "--heights", "0.10", "--focus", "5e9", "--span", "1e9", "--json"],
        dir.path(),
    );
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    let r = &v[0];
    assert_eq!(r["lowest_mode"], "TM010");
    assert!((r["lowest_frequency_hz"].as_f64().unwrap() - 0.76495e9).abs() < 1e5);
    assert!(dir.path().join("density.csv").exists());
    let svg = std::fs::read_to_string(dir.path().join("density_cyl_r0.150_h0.100m.svg")).unwrap();
    assert!(svg.starts_with("<svg") || svg.starts_with("<?xml"));
}

#[test]
fn cavity_mode_budget_is_refused() {
    let dir = tempfile::tempdir().unwrap();
    let o = fieldforge(&["cavity", "--focus", "2e12", "--span", "1e9"], dir.path());
    assert_eq!(o.status.code(), Some(4));
}

#[test]
fn empty_thickness_list_is_a_usage_error() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(fieldforge(&["sweep-thickness", "--thickness", ""], dir.path()).status.code(), Some(2));
    assert_eq!(fieldforge(&["sweep-thickness"], dir.path()).status.code(), Some(2));
}

#[test]
fn bad_scene_file_exits_with_scene_status() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bad.json");
    std::fs::write(&path, r#"{"schema": 9, "units": "m", "name": "x", "temperature": "room"}"#).unwrap();
    let o = fieldforge(&["simulate", "--scene", path.to_str().unwrap()], &dir.path().join("out"));
    assert_eq!(o.status.code(), Some(3));
}

#[test]
fn cell_budget_is_enforced() {
    let dir = tempfile::tempdir().unwrap();
    let o = Command::new(env!("CARGO_BIN_EXE_fieldforge"))
        .args(["simulate", "--preset", "hertzian-dipole", "--out"])
        .arg(dir.path())
        .env("FIELDFORGE_CELL_BUDGET", "100")
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(4));
}

#[test]
fn exported_scene_round_trips_and_hash_follows_content() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a.json");
    let b = dir.path().join("b.json");
    for (path, gap) in [(&a, "0.1e-3"), (&b, "0.2e-3")] {
        let o = bare(&["scene", "export", "--preset", "thin-dipole", "--gap", gap, "--out", path.to_str().unwrap()]);
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
        assert_eq!(bare(&["scene", "check", path.to_str().unwrap()]).status.code(), Some(0));
    }
    let hash = |p: &Path| {
        let o = bare(&["scene", "check", p.to_str().unwrap(), "--json"]);
        let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
        v["hash"].as_str().unwrap().to_string()
    };
    assert_ne!(hash(&a), hash(&b));
    assert_eq!(hash(&a), hash(&a));
}

#[test]
fn simulate_writes_every_output_and_is_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let args = ["simulate", "--preset", "hertzian-dipole", "--resolution", "10", "--field-step", "4e9", "--pattern-step", "3"];
    for run in ["one", "two"] {
        let o = fieldforge(&args, &dir.path().join(run));
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    }
    for name in ["s-params.csv", "efficiency.csv", "sweep.csv", "pattern.csv", "port1.csv", "energy.csv"] {
        let one = std::fs::read(dir.path().join("one").join(name)).unwrap();
        let two = std::fs::read(dir.path().join("two").join(name)).unwrap();
        assert!(!one.is_empty());
        assert_eq!(one, two, "{name} differs between runs");
    }
    for name in ["s-params.svg", "efficiency.svg", "pattern.svg", "summary.json", "manifest.json"] {
        assert!(dir.path().join("one").join(name).exists(), "{name}");
    }
    let pattern = std::fs::read_to_string(dir.path().join("one/pattern.csv")).unwrap();
    assert!(pattern.starts_with("phi_deg,theta_deg,directivity_dbi,gain_dbi\n"));
}

#[test]
fn materials_json_lists_both_temperatures() {
    let o = bare(&["materials", "--json"]);
    assert!(o.status.success());
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    let cu: Vec<f64> = v
        .as_array()
        .unwrap()
        .iter()
        .filter(|r| r["name"] == "Cu")
        .map(|r| r["sigma"].as_f64().unwrap())
        .collect();
    assert_eq!(cu.len(), 2);
    assert!(cu.contains(&2.9e8) && cu.contains(&5.9e7));
}
