use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_disc-holonomy"))
}

fn scratch(name: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("disc-holonomy-cli-{}-{name}", std::process::id()));
    let _ = fs::remove_dir_all(&dir);
    fs::create_dir_all(&dir).unwrap();
    dir
}

fn run(dir: &Path, config: &str, args: &[&str]) -> Output {
    let cfg = dir.join("run.toml");
    fs::write(&cfg, config).unwrap();
    bin().arg("--config").arg(&cfg).arg("--out").arg(dir.join("out")).args(args).output().unwrap()
}

/// Data rows of a CSV artifact, skipping `#` metadata and the header.
fn rows(path: &Path) -> Vec<Vec<String>> {
    fs::read_to_string(path)
        .unwrap()
        .lines()
        .filter(|l| !l.starts_with('#'))
        .skip(1)
        .map(|l| l.split(',').map(str::to_owned).collect())
        .collect()
}

const UNIFORM: &str = "[base_flow]\nalpha = 2.0\n[[deformation.modes]]\nm = 2\n";

#[test]
fn modes_table_for_uniform_vorticity() {
    let dir = scratch("modes");
    let out = run(&dir, UNIFORM, &["modes"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let table = rows(&dir.join("out/modes.csv"));
    assert_eq!(table.len(), 1);
    let got: Vec<f64> = table[0].iter().map(|c| c.parse().unwrap()).collect();
    assert_eq!(got, vec![2.0, 2.0, 2.0, 0.5, 0.0, 4.0]);
}

#[test]
fn csv_starts_with_metadata() {
    let dir = scratch("meta");
    assert!(run(&dir, UNIFORM, &["modes"]).status.success());
    let text = fs::read_to_string(dir.join("out/modes.csv")).unwrap();
    let header: Vec<&str> = text.lines().take_while(|l| l.starts_with('#')).collect();
    for key in ["generator", "version", "config_sha256", "command", "provenance"] {
        assert!(header.iter().any(|l| l.starts_with(&format!("# {key}: "))), "missing {key}");
    }
}

#[test]
fn repeated_runs_are_byte_identical() {
    let config = "[base_flow]\nalpha = 0.5\n[deformation]\ndelta = 0.05\n\
                  [[deformation.modes]]\nm = 3\n[run]\ngrid = 21\n";
    let a = scratch("det-a");
    let b = scratch("det-b");
    for cmd in ["geo-angle", "fields", "second-order"] {
        assert!(run(&a, config, &[cmd]).status.success());
        assert!(run(&b, config, &[cmd]).status.success());
    }
    let mut names: Vec<_> = fs::read_dir(a.join("out")).unwrap().map(|e| e.unwrap().file_name()).collect();
    names.sort();
    assert!(names.len() >= 5);
    for name in names {
        let x = fs::read(a.join("out").join(&name)).unwrap();
        let y = fs::read(b.join("out").join(&name)).unwrap();
        assert!(x == y, "{name:?} differs between runs");
    }
}

#[test]
fn empty_mode_set_gives_the_base_flow() {
    let dir = scratch("empty");
    let out = run(&dir, "[base_flow]\nalpha = 0.5\n[deformation]\ndelta = 0.1\n[run]\ngrid = 9\n", &["fields"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let mut inside = 0;
    for row in rows(&dir.join("out/fields.csv")) {
        let v: Vec<f64> = row.iter().map(|c| c.parse().unwrap_or(f64::NAN)).collect();
        if v[4] != 1.0 {
            continue;
        }
        inside += 1;
        let r = v[0].hypot(v[1]);
        assert!((v[3] - r.sqrt()).abs() < 1e-12, "psi at r = {r}");
        assert!((v[2] - 0.25 * r.powf(-1.5)).abs() < 1e-9 * r.powf(-1.5), "omega at r = {r}");
    }
    assert!(inside > 20);
}

#[test]
fn invalid_config_names_the_key() {
    let dir = scratch("bad");
    let out = run(&dir, "[base_flow]\nalpha = 0.5\n[[deformation.modes]]\nm = 2\n[[deformation.modes]]\nm = -2\n", &["modes"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("deformation.modes[1].m"));

    let out = run(&dir, "[numerics]\nn_radial = 64\nbogus = 1\n", &["modes"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("bogus"));
}

#[test]
fn ellipse_check_matches_the_asymptotic_angle() {
    let dir = scratch("ellipse");
    let out = bin().arg("--out").arg(dir.join("out")).arg("ellipse-check").output().unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let text = fs::read_to_string(dir.join("out/ellipse_check.json")).unwrap();
    let v: serde_json::Value = serde_json::from_str(&text).unwrap();
    let res = &v["result"];
    let delta = 0.05;
    let target = -2.0 * std::f64::consts::PI + 16.0 * std::f64::consts::PI * delta * delta;
    assert!((res["asymptotic_target"].as_f64().unwrap() - target).abs() < 1e-12);
    let exact = res["exact_geometric_angle"].as_f64().unwrap();
    assert!((exact - target).abs() < 5.0 * delta * delta);
    let err = res["max_position_error"].as_f64().unwrap();
    let bound = res["position_error_bound"].as_f64().unwrap();
    assert!(err <= bound);
}
