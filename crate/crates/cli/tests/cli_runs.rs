use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;
use tempfile::TempDir;

fn shocklab(out: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_shocklab"))
        .args(args)
        .arg("--out")
        .arg(out)
        .output()
        .unwrap()
}

fn json(path: &Path) -> Value {
    serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

#[test]
fn linear_burgers_data_focus_at_time_one() {
    let tmp = TempDir::new().unwrap();
    let o = shocklab(
        tmp.path(),
        &["burgers", "--set", "burgers.profile=linear", "--set", "burgers.slope=-1", "--set", "burgers.t_end=0.9"],
    );
    assert!(o.status.success(), "{}", stderr(&o));
    let r = json(&tmp.path().join("burgers_report.json"));
    assert!((r["t_star"].as_f64().unwrap() - 1.0).abs() < 1e-12);
    assert!((r["t_star_detected"].as_f64().unwrap() - 1.0).abs() <= 1e-3);
    assert!(r["max_abs_error"].as_f64().unwrap() < 1e-10);
    assert_eq!(r["passed"], Value::Bool(true));
    let chars = fs::read_to_string(tmp.path().join("burgers_characteristics.csv")).unwrap();
    assert_eq!(chars.lines().next().unwrap(), "x0,u0,du0");
    assert_eq!(chars.lines().count(), 1025);
}

#[test]
fn zero_seed_gives_trivial_data() {
    let tmp = TempDir::new().unwrap();
    let o = shocklab(tmp.path(), &["datagen", "--set", "seed.family=zero", "--set", "grid.cells_per_delta=64"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let csv = fs::read_to_string(tmp.path().join("initial_data.csv")).unwrap();
    let mut lines = csv.lines();
    assert_eq!(lines.next().unwrap(), "r,phi,dtphi,drphi");
    for line in lines {
        let f: Vec<f64> = line.split(',').map(|x| x.parse().unwrap()).collect();
        assert_eq!(&f[1..], &[0.0, 0.0, 0.0]);
    }
    let s = json(&tmp.path().join("initial_data.json"));
    assert_eq!(s["ratio1"].as_f64(), Some(0.0));
    assert_eq!(s["ratio2"].as_f64(), Some(0.0));
    assert_eq!(s["t_star_predicted"], Value::Null);
    let m = json(&tmp.path().join("manifest.json"));
    assert_eq!(m["status"], "ok");
    assert_eq!(m["mode"], "datagen");
}

#[test]
fn default_preset_forms_a_shock() {
    let tmp = TempDir::new().unwrap();
    let o = shocklab(tmp.path(), &["evolve", "--set", "grid.cells_per_delta=128"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let report = json(&tmp.path().join("shock_report.json"));
    assert_eq!(report["fired"], Value::Bool(true));
    let run = json(&tmp.path().join("run.json"));
    assert_eq!(run["stop_reason"], "mu_below_threshold");
    let m = json(&tmp.path().join("manifest.json"));
    assert_eq!(m["stop_reason"], "mu_below_threshold");
    for name in ["trajectory.csv", "fan.csv", "mu_min.csv", "energies.csv", "initial_data.csv"] {
        assert!(tmp.path().join(name).exists(), "{name}");
        assert!(m["outputs"].as_array().unwrap().iter().any(|v| v == name));
    }
}

#[test]
fn repeated_runs_are_byte_identical() {
    let a = TempDir::new().unwrap();
    let b = TempDir::new().unwrap();
    let args = [
        "evolve",
        "--set",
        "seed.margin=-0.5",
        "--set",
        "grid.cells_per_delta=64",
        "--set",
        "evolve.t_end=-8.0",
    ];
    assert!(shocklab(a.path(), &args).status.success());
    assert!(shocklab(b.path(), &args).status.success());
    for name in ["initial_data.csv", "trajectory.csv", "fan.csv", "mu_min.csv", "energies.csv", "run.json"] {
        assert_eq!(
            fs::read(a.path().join(name)).unwrap(),
            fs::read(b.path().join(name)).unwrap(),
            "{name}"
        );
    }
}

#[test]
fn empty_sweep_list_is_rejected() {
    let tmp = TempDir::new().unwrap();
    let o = shocklab(tmp.path(), &["sweep", "--set", "sweep.values=[]"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("`sweep.values`"), "{}", stderr(&o));
}

#[test]
fn config_errors_name_the_field() {
    let tmp = TempDir::new().unwrap();
    let o = shocklab(tmp.path(), &["evolve", "--set", "model.delta=\"oops\""]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("`model.delta`"), "{}", stderr(&o));
    let o = shocklab(tmp.path(), &["evolve", "--set", "grid.cfl=3"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("`grid.cfl`"), "{}", stderr(&o));
    let o = shocklab(tmp.path(), &["datagen", "--set", "grid.typo=1"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("typo"), "{}", stderr(&o));
}

#[test]
fn config_file_and_overrides_combine() {
    let tmp = TempDir::new().unwrap();
    let cfg = tmp.path().join("run.toml");
    fs::write(&cfg, "[seed]\nfamily = \"zero\"\n[grid]\ncells_per_delta = 64\n").unwrap();
    let out = tmp.path().join("out");
    let o = shocklab(&out, &["datagen", "--config", cfg.to_str().unwrap(), "--set", "model.r0=20"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let m = json(&out.join("manifest.json"));
    assert_eq!(m["config"]["seed"]["family"], "zero");
    assert_eq!(m["config"]["model"]["r0"].as_f64(), Some(20.0));
}

#[test]
fn partial_sweep_failure_still_writes_the_table() {
    let tmp = TempDir::new().unwrap();
    let o = shocklab(
        tmp.path(),
        &["sweep-delta", "--values", "0.05,-1", "--set", "sweep.evolve=false", "--set", "grid.cells_per_delta=64"],
    );
    assert_eq!(o.status.code(), Some(3));
    let table = fs::read_to_string(tmp.path().join("sweep.csv")).unwrap();
    let rows: Vec<&str> = table.lines().skip(1).collect();
    assert_eq!(rows.len(), 2);
    assert!(rows[0].starts_with("delta,0.05,ok,"));
    assert!(rows[1].starts_with("delta,-1.0,failed,"));
    assert_eq!(json(&tmp.path().join("manifest.json"))["status"], "failed");
}

#[test]
fn radius_sweep_writes_the_scattering_table() {
    let tmp = TempDir::new().unwrap();
    let o = shocklab(
        tmp.path(),
        &["sweep-r0", "--values", "10,20,40", "--set", "sweep.evolve=false", "--set", "grid.cells_per_delta=64"],
    );
    assert!(o.status.success(), "{}", stderr(&o));
    let t = json(&tmp.path().join("scattering.json"));
    let rows = t["rows"].as_array().unwrap();
    assert_eq!(rows.len(), 3);
    let errs: Vec<f64> = rows.iter().map(|r| r["relative_error"].as_f64().unwrap()).collect();
    assert!(errs.windows(2).all(|w| w[1] < w[0]), "{errs:?}");
    for k in 0..3 {
        assert!(tmp.path().join("points").join(format!("{k:03}_r0_{}", [10, 20, 40][k])).join("manifest.json").exists());
    }
}
