use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn qpwh(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_qpwh")).args(args).output().expect("binary runs")
}

fn manifest(dir: &Path) -> Value {
    serde_json::from_str(&std::fs::read_to_string(dir.join("manifest.json")).unwrap()).unwrap()
}

fn write(dir: &Path, name: &str, text: &str) -> String {
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p.to_str().unwrap().to_string()
}

#[test]
fn wh1d_default_writes_csv() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("o");
    let o = qpwh(&["--task", "wh1d", "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let csv = std::fs::read_to_string(out.join("wh1d.csv")).unwrap();
    assert!(csv.starts_with("word,re_xi,im_xi,re_val,im_val,re_check,im_check"));
    assert!(csv.lines().count() > 10);
    let m = manifest(&out);
    assert_eq!(m["passed"], Value::Bool(true));
    let hash = m["config_hash"].as_str().unwrap();
    assert_eq!(hash.len(), 64);
    for a in m["artifacts"].as_array().unwrap() {
        assert_eq!(a["config_hash"].as_str().unwrap(), hash);
    }
}

#[test]
fn config_errors_exit_2_naming_the_field() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("o");
    let cfg = write(tmp.path(), "neg.toml", "task = \"solve\"\n[params]\neps = -1.0\nk1 = [0.3, 0.8]\nk2 = [0.3, 0.8]\n");
    let o = qpwh(&["--config", &cfg, "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("params.eps"));
    assert!(!out.join("manifest.json").exists());

    let cfg = write(tmp.path(), "kappa.toml", "task = \"wh1d\"\n[params]\neps = 2.0\nk1 = [0.3, 0.8]\nk2 = [0.3, 0.8]\nkappa = 0.3\n");
    let o = qpwh(&["--config", &cfg]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("params.kappa"));

    let cfg = write(tmp.path(), "typo.toml", "task = \"wh1d\"\n[grid]\nnode = 64\n");
    let o = qpwh(&["--config", &cfg]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("node"));

    let o = qpwh(&["--task", "nonsense"]);
    assert_eq!(o.status.code(), Some(2));
    let o = qpwh(&[]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("task"));
}

#[test]
fn numerical_failure_exits_3_with_diagnostic() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("o");
    // on the pole line xi1 = -k1 the continued function does not exist
    let cfg = write(tmp.path(), "pole.toml", "task = \"continue\"\n[grid]\nnodes = 32\n[continue]\npoints = [[-0.3, -0.8, 0.2, 0.1]]\n");
    let o = qpwh(&["--config", &cfg, "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(3), "{}", String::from_utf8_lossy(&o.stderr));
    let d: Value = serde_json::from_str(&std::fs::read_to_string(out.join("diagnostic.json")).unwrap()).unwrap();
    assert_eq!(d["kind"], "numerical");
    assert!(d["error"].as_str().unwrap().contains("pole"));
}

#[test]
fn deterministic_runs_are_bit_identical() {
    let tmp = tempfile::tempdir().unwrap();
    let mut bytes = Vec::new();
    for (i, workers) in ["1", "3"].iter().enumerate() {
        let out = tmp.path().join(format!("o{i}"));
        let o = qpwh(&["--task", "solve", "--deterministic", "--workers", workers, "--out", out.to_str().unwrap()]);
        assert!(matches!(o.status.code(), Some(0) | Some(1)));
        bytes.push(std::fs::read(out.join("grid.csv")).unwrap());
        assert_eq!(manifest(&out)["workers"], 1);
    }
    assert_eq!(bytes[0], bytes[1]);
}

#[test]
fn solve_then_reuse_and_compare() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("solve");
    let cfg = write(tmp.path(), "solve.toml", "task = \"solve\"\n[grid]\nnodes = 64\n");
    let o = qpwh(&["--config", &cfg, "--out", out.to_str().unwrap()]);
    let m = manifest(&out);
    // exit status follows the in-run checks
    let passed = m["passed"].as_bool().unwrap();
    assert_eq!(o.status.code(), Some(if passed { 0 } else { 1 }));
    let grid = out.join("grid.csv");
    let csv = std::fs::read_to_string(&grid).unwrap();
    assert!(csv.starts_with("re_xi1,im_xi1,re_xi2,im_xi2,re_val,im_val,sheet_tag"));
    assert_eq!(csv.lines().count(), 64 * 64 + 1);
    let hist: Value = serde_json::from_str(&std::fs::read_to_string(out.join("history.json")).unwrap()).unwrap();
    assert!(!hist["report"]["history"].as_array().unwrap().is_empty());
    assert_eq!(hist["config_hash"], m["config_hash"]);

    // identical files: zero difference
    let g = grid.to_str().unwrap();
    let o = qpwh(&["compare", g, g]);
    assert_eq!(o.status.code(), Some(0));
    let r: Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(r["max_abs"].as_f64().unwrap(), 0.0);
    assert_eq!(r["points"], 64 * 64);

    // a grid on another pair of contours is rejected
    let shifted: String = csv
        .lines()
        .enumerate()
        .map(|(i, l)| {
            if i == 0 {
                return format!("{l}\n");
            }
            let mut f: Vec<String> = l.split(',').map(str::to_string).collect();
            f[1] = "1e-1".into();
            format!("{}\n", f.join(","))
        })
        .collect();
    let other = write(tmp.path(), "other.csv", &shifted);
    let o = qpwh(&["compare", g, &other]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("incompatible"));

    // downstream tasks reuse the grid
    let cfg = write(tmp.path(), "reuse.toml", &format!("[grid]\ninput = {:?}\n", g));
    for task in ["continue", "field"] {
        let dir = tmp.path().join(task);
        let o = qpwh(&["--config", &cfg, "--task", task, "--out", dir.to_str().unwrap()]);
        assert!(matches!(o.status.code(), Some(0) | Some(1)), "{task}: {}", String::from_utf8_lossy(&o.stderr));
        let m = manifest(&dir);
        assert_eq!(m["notes"]["strip"]["source"], g);
        assert!(!m["artifacts"].as_array().unwrap().is_empty());
    }
    let f = std::fs::read_to_string(tmp.path().join("field").join("field.csv")).unwrap();
    assert!(f.starts_with("x1,x2,x3,re_u,im_u"));
}
