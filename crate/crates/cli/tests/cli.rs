use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn bin(args: &[&str], out: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_lpp-duality"))
        .args(args)
        .env("LPP_DUALITY_OUT", out)
        .output()
        .expect("binary runs")
}

fn run_dirs(root: &Path) -> Vec<PathBuf> {
    let mut v: Vec<PathBuf> = match fs::read_dir(root) {
        Ok(rd) => rd.map(|e| e.unwrap().path()).collect(),
        Err(_) => vec![],
    };
    v.sort();
    v
}

#[test]
fn reruns_are_byte_identical_across_worker_counts() {
    let tmp = tempfile::tempdir().unwrap();
    let args = ["duality", "--m", "2", "--n", "8", "--samples", "300", "--seed", "42"];
    let a = bin(&[&args[..], &["--workers", "1"]].concat(), tmp.path());
    let b = bin(&[&args[..], &["--workers", "3"]].concat(), tmp.path());
    assert!(matches!(a.status.code(), Some(0 | 1)), "{a:?}");
    assert_eq!(a.status.code(), b.status.code());
    let dirs = run_dirs(tmp.path());
    assert_eq!(dirs.len(), 2, "a rerun gets its own directory");
    let csv = |d: &Path| fs::read(d.join("duality.csv")).unwrap();
    assert_eq!(csv(&dirs[0]), csv(&dirs[1]));
    assert_eq!(fs::read(dirs[0].join("config.json")).unwrap(), fs::read(dirs[1].join("config.json")).unwrap());
    let manifest: serde_json::Value = serde_json::from_slice(&fs::read(dirs[0].join("manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["master_seed"], 42);
    assert_eq!(manifest["config_hash"].as_str().unwrap().len(), 64);
    let text = String::from_utf8(csv(&dirs[0])).unwrap();
    assert!(text.starts_with("m,n,S,p_lhs,se_lhs,p_rhs,se_rhs,z\n"));
}

#[test]
fn usage_errors_exit_2_without_outputs() {
    let tmp = tempfile::tempdir().unwrap();
    let out = bin(&["duality", "--m", "8"], tmp.path());
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("--n"));
    let out = bin(&["duality", "--m", "8", "--n", "8"], tmp.path());
    assert_eq!(out.status.code(), Some(2));
    let out = bin(&["duality", "--m", "eight", "--n", "8"], tmp.path());
    assert_eq!(out.status.code(), Some(2));
    let out = bin(&["duality", "--m", "2", "--n", "8", "--coalescence", "guess"], tmp.path());
    assert_eq!(out.status.code(), Some(2));
    let out = bin(&["fcdf", "--n", "64", "--coalescence", "stationary"], tmp.path());
    assert_eq!(out.status.code(), Some(2));
    let out = bin(&["frobnicate"], tmp.path());
    assert_eq!(out.status.code(), Some(2));
    assert!(run_dirs(tmp.path()).is_empty());
}

#[test]
fn validate_reports_violations() {
    let tmp = tempfile::tempdir().unwrap();
    let out = bin(&["validate", "duality", "--m", "8", "--n", "8"], tmp.path());
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("for n > m"));
    let out = bin(&["validate", "gcurve", "--m", "16", "--r-grid", "1,0.5"], tmp.path());
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("increasing"));
    let out = bin(&["validate", "duality", "--m", "8", "--n", "64"], tmp.path());
    assert_eq!(out.status.code(), Some(0));
    assert!(run_dirs(tmp.path()).is_empty());
}

#[test]
fn config_file_is_overridden_by_flags() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = tmp.path().join("cfg.json");
    fs::write(&cfg, r#"{"m": 2, "n": 6, "samples": 200, "seed": 7}"#).unwrap();
    let out_root = tmp.path().join("runs");
    let out = bin(&["duality", "--config", cfg.to_str().unwrap(), "--n", "8"], &out_root);
    assert!(matches!(out.status.code(), Some(0 | 1)), "{out:?}");
    let dir = &run_dirs(&out_root)[0];
    let resolved: serde_json::Value = serde_json::from_slice(&fs::read(dir.join("config.json")).unwrap()).unwrap();
    assert_eq!(resolved["command"], "duality");
    assert_eq!((resolved["m"].as_i64(), resolved["n"].as_i64()), (Some(2), Some(8)));
    assert_eq!(resolved["samples"], 200);

    fs::write(&cfg, r#"{"m": 2, "bogus": 1}"#).unwrap();
    let out = bin(&["validate", "duality", "--config", cfg.to_str().unwrap()], &out_root);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn failed_gates_exit_1_with_failures_json() {
    let tmp = tempfile::tempdir().unwrap();
    // With cap = n0 no replicate can be checked at a second scale.
    let args = ["tree-check", "--m", "2", "--n", "8", "--samples", "5", "--width", "32", "--n0", "32", "--cap", "32"];
    let out = bin(&args, tmp.path());
    assert_eq!(out.status.code(), Some(1), "{out:?}");
    let dir = &run_dirs(tmp.path())[0];
    let failures: serde_json::Value = serde_json::from_slice(&fs::read(dir.join("failures.json")).unwrap()).unwrap();
    assert!(failures.as_array().unwrap().iter().any(|g| g["name"] == "treecheck_failure_rate"));
    assert!(fs::read_to_string(dir.join("treecheck.csv")).unwrap().starts_with("replicate,lhs,rhs,"));
}

#[test]
fn small_runs_of_every_command_write_their_tables() {
    let tmp = tempfile::tempdir().unwrap();
    let cases: &[(&[&str], &str, &str)] = &[
        (&["gcurve", "--m", "16", "--samples", "100"], "gcurve.csv", "r,m,S,G_hat,dkw"),
        (&["fcdf", "--n", "64", "--samples", "100"], "fcdf.csv", "s,n,S,F_hat,dkw"),
        (&["lowtail", "--m", "16", "--n", "64", "--samples", "100"], "lowtail.csv", "r,lhs,rhs,pass"),
        (&["profiles", "--n", "32", "--samples", "20", "--u-grid", "-0.5,0,0.5"], "profiles.csv", "n,u,A_n,B_n"),
        (&["profiles", "--n", "32", "--samples", "20", "--u-grid", "-0.5,0,0.5"], "scalars.csv", "n,C_n,U_n"),
        (&["burke", "--samples", "200", "--n", "20"], "burke.csv", "check,statistic,threshold,samples,pass"),
        (&["tasep", "--samples", "100", "--half-width", "64"], "tasep.csv", "replicate,i,j,G_value,valid"),
        (&["massfield", "--samples", "1", "--n", "4"], "massfield.csv", "replicate,site,mass"),
    ];
    for (i, (args, file, header)) in cases.iter().enumerate() {
        let root = tmp.path().join(i.to_string());
        let out = bin(args, &root);
        assert!(matches!(out.status.code(), Some(0 | 1)), "{args:?}: {out:?}");
        let dir = &run_dirs(&root)[0];
        let text = fs::read_to_string(dir.join(file)).unwrap();
        assert_eq!(text.lines().next(), Some(*header), "{args:?}");
        assert!(dir.join("manifest.json").exists());
    }
}
