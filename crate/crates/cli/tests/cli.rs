use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::{json, Value};
use tempfile::TempDir;

fn monfer(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_monfer")).args(args).output().expect("spawn monfer")
}

fn stdout_json(out: &Output) -> Value {
    assert!(
        out.status.success(),
        "status {:?}\nstderr: {}",
        out.status,
        String::from_utf8_lossy(&out.stderr)
    );
    serde_json::from_slice(&out.stdout).expect("json on stdout")
}

fn write_config(dir: &Path, name: &str, cfg: &Value) -> PathBuf {
    let p = dir.join(name);
    fs::write(&p, serde_json::to_vec_pretty(cfg).unwrap()).unwrap();
    p
}

fn small_config(out: &Path) -> Value {
    json!({
        "params": {
            "l": 16, "gamma": 1.0, "model": "FermionCounting", "n_traj": 6, "seed": 11,
            "t_burn": 4.0, "t_sample": 6.0, "dt_sample": 0.5
        },
        "observables": ["correlation", "entropy", "layouts", "k", "q"],
        "measurement": {
            "n_ell": 6, "coverage": 2, "max_lag": 4,
            "layouts": [
                {"family": "scan", "ell": 1, "ells_b": [1, 2, 4]},
                {"family": "explicit", "ell_a": 2, "ell_b": 3, "ell_c": 2}
            ]
        },
        "output_dir": out,
        "checkpoint_every": 2
    })
}

const DATA: [&str; 7] = [
    "correlation.csv",
    "entropy.csv",
    "central_charge.csv",
    "i2.csv",
    "i3.csv",
    "k.csv",
    "q.csv",
];

fn assert_same_data(a: &Path, b: &Path) {
    for f in DATA {
        let x = fs::read_to_string(a.join(f)).unwrap();
        let y = fs::read_to_string(b.join(f)).unwrap();
        assert!(x == y, "{f} differs:\n{x}\n{y}");
    }
}

#[test]
fn oracle_check_passes_for_both_models() {
    for model in ["fc", "om"] {
        let out = monfer(&["oracle-check", "--l", "6", "--model", model, "--jumps", "200", "--seed", "3"]);
        let r = stdout_json(&out);
        assert_eq!(r["passed"], true, "{r}");
        assert_eq!(r["n_jumps"], 200);
        assert!(r["max_density_diff"].as_f64().unwrap() < 1e-10);
        assert!(r["max_trace_drift"].as_f64().unwrap() < 1e-8);
    }
}

#[test]
fn oracle_check_refuses_large_systems() {
    let out = monfer(&["oracle-check", "--l", "12"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("capacity"));
}

#[test]
fn theory_manifest_reports_scales() {
    let tmp = TempDir::new().unwrap();
    let dir = tmp.path().join("theory");
    let out = monfer(&[
        "theory",
        "--gamma",
        "0.1",
        "--q",
        "0.01,0.1,1",
        "--l",
        "1,3",
        "--ell",
        "80,160",
        "--s0",
        "0.2",
        "--output-dir",
        dir.to_str().unwrap(),
    ]);
    let scales = stdout_json(&out);
    let manifest: Value = serde_json::from_slice(&fs::read(dir.join("manifest.json")).unwrap()).unwrap();
    let l0 = manifest["scales"]["l0"].as_f64().unwrap();
    assert!((l0 - 7.07).abs() < 0.01, "{l0}");
    assert_eq!(scales["l0"], manifest["scales"]["l0"]);
    for f in ["cq.csv", "cq_renormalized.csv", "cl.csv", "entropy_gaussian.csv", "central_charge.csv", "entropy.csv"] {
        assert!(dir.join(f).exists(), "{f}");
    }
    // q = 1 lies outside the one-loop range q l₀ < 1
    let renorm = fs::read_to_string(dir.join("cq_renormalized.csv")).unwrap();
    assert_eq!(renorm.lines().count(), 3);
}

#[test]
fn simulate_is_deterministic_across_worker_counts() {
    let tmp = TempDir::new().unwrap();
    let a = tmp.path().join("a");
    let b = tmp.path().join("b");
    let cfg = write_config(tmp.path(), "cfg.json", &small_config(&a));
    let run = |dir: &Path, workers: &str| {
        let out = monfer(&[
            "simulate",
            "--config",
            cfg.to_str().unwrap(),
            "--workers",
            workers,
            "--output-dir",
            dir.to_str().unwrap(),
        ]);
        assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    };
    run(&a, "1");
    run(&b, "2");
    assert_same_data(&a, &b);

    let manifest: Value = serde_json::from_slice(&fs::read(a.join("manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["n_traj"], 6);
    assert_eq!(manifest["params"]["seed"], 11);
    assert_eq!(manifest["config"]["params"]["seed"], 11);
    assert_eq!(manifest["layouts"].as_array().unwrap().len(), 4);
    assert!(manifest["units"].as_str().unwrap().contains("J = 1"));
    let header = fs::read_to_string(a.join("k.csv")).unwrap();
    assert!(header.starts_with("abscissa,mean,stderr,n_samples\n"));
}

#[test]
fn seed_flag_changes_the_ensemble() {
    let tmp = TempDir::new().unwrap();
    let a = tmp.path().join("a");
    let b = tmp.path().join("b");
    let cfg = write_config(tmp.path(), "cfg.json", &small_config(&a));
    for (dir, seed) in [(&a, "11"), (&b, "12")] {
        let out = monfer(&[
            "simulate",
            "--config",
            cfg.to_str().unwrap(),
            "--seed",
            seed,
            "--output-dir",
            dir.to_str().unwrap(),
        ]);
        assert!(out.status.success());
    }
    assert_ne!(fs::read(a.join("k.csv")).unwrap(), fs::read(b.join("k.csv")).unwrap());
}

#[test]
fn resume_after_interruption_matches_uninterrupted_run() {
    let tmp = TempDir::new().unwrap();
    let full = tmp.path().join("full");
    let part = tmp.path().join("part");
    let cfg = write_config(tmp.path(), "cfg.json", &small_config(&full));
    let cfg = cfg.to_str().unwrap();
    assert!(monfer(&["simulate", "--config", cfg]).status.success());

    let p = part.to_str().unwrap();
    let halted = monfer(&["simulate", "--config", cfg, "--output-dir", p, "--halt-after", "1"]);
    assert!(!halted.status.success());
    let ckpt: Value = serde_json::from_slice(&fs::read(part.join("checkpoint.json")).unwrap()).unwrap();
    assert_eq!(ckpt["trajectories"].as_array().unwrap().len(), 2);
    assert!(!part.join("manifest.json").exists());

    let resumed = monfer(&["simulate", "--config", cfg, "--output-dir", p, "--resume"]);
    assert!(resumed.status.success());
    assert!(String::from_utf8_lossy(&resumed.stderr).contains("resuming from 2"));
    assert_same_data(&full, &part);
}

#[test]
fn resume_rejects_a_foreign_checkpoint() {
    let tmp = TempDir::new().unwrap();
    let dir = tmp.path().join("run");
    let cfg = write_config(tmp.path(), "cfg.json", &small_config(&dir));
    let cfg = cfg.to_str().unwrap();
    assert!(!monfer(&["simulate", "--config", cfg, "--halt-after", "1"]).status.success());
    let out = monfer(&["simulate", "--config", cfg, "--seed", "99", "--resume"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("different configuration"));
}

#[test]
fn invalid_configurations_are_rejected() {
    let tmp = TempDir::new().unwrap();
    let mut cfg = small_config(&tmp.path().join("x"));
    cfg["params"]["model"] = json!("OccupationMeasurement");
    let p = write_config(tmp.path(), "om_q.json", &cfg);
    let out = monfer(&["simulate", "--config", p.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("fermion-counting"));

    let mut cfg = small_config(&tmp.path().join("y"));
    cfg["measurement"]["layouts"] = json!([{"family": "explicit", "ell_a": 8, "ell_b": 8, "ell_c": 8}]);
    let p = write_config(tmp.path(), "big_layout.json", &cfg);
    assert_eq!(monfer(&["simulate", "--config", p.to_str().unwrap()]).status.code(), Some(2));

    let mut cfg = small_config(&tmp.path().join("z"));
    cfg["params"]["typo"] = json!(1);
    let p = write_config(tmp.path(), "typo.json", &cfg);
    assert_eq!(monfer(&["simulate", "--config", p.to_str().unwrap()]).status.code(), Some(2));
}

#[test]
fn analyze_reads_simulation_output() {
    let tmp = TempDir::new().unwrap();
    let dir = tmp.path().join("run");
    let cfg = write_config(tmp.path(), "cfg.json", &small_config(&dir));
    assert!(monfer(&["simulate", "--config", cfg.to_str().unwrap()]).status.success());
    let d = dir.to_str().unwrap();

    // lossless round trip: parsing and re-serializing reproduces the bytes
    for f in DATA {
        let bytes = fs::read(dir.join(f)).unwrap();
        let mut r = csv::Reader::from_reader(bytes.as_slice());
        let rows: Vec<(f64, f64, f64, usize)> = r.deserialize().map(|x| x.unwrap()).collect();
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(["abscissa", "mean", "stderr", "n_samples"]).unwrap();
        for row in &rows {
            w.serialize(row).unwrap();
        }
        assert_eq!(w.into_inner().unwrap(), bytes, "{f}");
    }

    let fit = stdout_json(&monfer(&["analyze", "power-law", d, "--file", "entropy.csv", "--lo", "1", "--hi", "8"]));
    assert_eq!(fit["task"], "power-law");
    assert!(fit["result"]["exponent"].as_f64().unwrap().is_finite());

    let c = stdout_json(&monfer(&["analyze", "crossover", d, "--x-min", "1"]));
    assert_eq!(c["result"]["per_gamma"].as_array().unwrap().len(), 1);
    assert!(c["result"]["gamma_scaling"].is_null());

    let m = stdout_json(&monfer(&["analyze", "maximum", d]));
    assert!(m["result"]["per_gamma"][0]["value"]["y_max"].as_f64().is_some());

    let col = stdout_json(&monfer(&["analyze", "cft-collapse", d, "--c", "1", "--l-c", "6", "--a", "1"]));
    let pts = col["result"]["points"].as_array().unwrap();
    assert_eq!(pts.len(), 4);
    assert!(pts.iter().any(|p| p["in_window"] == true));

    // tampering is detected through the manifest hashes
    let k = dir.join("k.csv");
    let mut text = fs::read_to_string(&k).unwrap();
    text.push_str("9,0,0,1\n");
    fs::write(&k, text).unwrap();
    let out = monfer(&["analyze", "power-law", d, "--file", "k.csv"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("hash"));
}

#[test]
fn analyze_fits_gamma_scaling_over_several_runs() {
    let tmp = TempDir::new().unwrap();
    let mut dirs = Vec::new();
    for g in [0.5, 1.0, 2.0] {
        let dir = tmp.path().join(format!("g{g}"));
        let mut cfg = small_config(&dir);
        cfg["params"]["gamma"] = json!(g);
        cfg["params"]["n_traj"] = json!(4);
        cfg["observables"] = json!(["entropy"]);
        let p = write_config(tmp.path(), &format!("g{g}.json"), &cfg);
        assert!(monfer(&["simulate", "--config", p.to_str().unwrap()]).status.success());
        dirs.push(dir.to_str().unwrap().to_string());
    }
    let mut args = vec!["analyze", "maximum"];
    args.extend(dirs.iter().map(|s| s.as_str()));
    let r = stdout_json(&monfer(&args));
    let per = r["result"]["per_gamma"].as_array().unwrap();
    assert_eq!(per.len(), 3);
    assert_eq!(per[2]["gamma"], 2.0);
}
