use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

const TWO_MODEL: &str = r#"{"decisions":2,"models":[
  {"outcomes":[{"kind":"bernoulli","mu":0.6},{"kind":"bernoulli","mu":0.5}]},
  {"outcomes":[{"kind":"bernoulli","mu":0.5},{"kind":"bernoulli","mu":0.6}]}]}"#;

fn declab(args: &[&str], cwd: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_declab")).args(args).current_dir(cwd).output().unwrap()
}

fn stdout_json(o: &Output) -> Value {
    assert!(o.status.success(), "stderr: {}", String::from_utf8_lossy(&o.stderr));
    serde_json::from_slice(&o.stdout).unwrap()
}

fn mab5_class() -> String {
    let models: Vec<String> = (0..5)
        .map(|i| {
            let outs: Vec<String> = (0..5)
                .map(|a| format!(r#"{{"kind":"bernoulli","mu":{}}}"#, if a == i { 0.7 } else { 0.5 }))
                .collect();
            format!(r#"{{"outcomes":[{}]}}"#, outs.join(","))
        })
        .collect();
    format!(r#"{{"decisions":5,"models":[{}],"truth":2}}"#, models.join(","))
}

fn write_mab5(dir: &Path) {
    std::fs::write(dir.join("mab5_class.json"), mab5_class()).unwrap();
    std::fs::write(
        dir.join("mab5.json"),
        r#"{"schema_version":1,"class":"mab5_class.json","experiment":{"rounds":200,"gamma":25.0,"option":"I","seed":7}}"#,
    )
    .unwrap();
}

#[test]
fn dec_two_model_squared() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("two_model.json"), TWO_MODEL).unwrap();
    let v = stdout_json(&declab(
        &["dec", "--class", "two_model.json", "--ref", "0", "--gamma", "1", "--divergence", "squared"],
        dir.path(),
    ));
    assert!((v["value"].as_f64().unwrap() - 0.045).abs() < 1e-9);
    assert!((v["p"][0].as_f64().unwrap() - 0.55).abs() < 1e-6);
    assert!((v["p"][1].as_f64().unwrap() - 0.45).abs() < 1e-6);
    assert_eq!(v["method"], "LP");

    let dual = stdout_json(&declab(
        &["dec", "--class", "two_model.json", "--ref", "0", "--gamma", "1", "--divergence", "squared", "--method", "dual"],
        dir.path(),
    ));
    assert!((dual["value"].as_f64().unwrap() - 0.045).abs() < 1e-9);
}

#[test]
fn run_is_deterministic_and_prefix_summed() {
    let dir = tempfile::tempdir().unwrap();
    write_mab5(dir.path());
    for out in ["a", "b"] {
        let o = declab(&["run", "--config", "mab5.json", "--out", out], dir.path());
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    }
    let a = std::fs::read(dir.path().join("a/trace.csv")).unwrap();
    let b = std::fs::read(dir.path().join("b/trace.csv")).unwrap();
    assert_eq!(a, b);

    let text = String::from_utf8(a).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next().unwrap(), "t,pi,r,inst_regret,dec_value,hell_inc,cum_regret,cum_est");
    let (mut reg, mut est) = (0.0f64, 0.0f64);
    let mut rows = 0;
    for line in lines {
        let f: Vec<f64> = line.split(',').map(|x| x.parse().unwrap()).collect();
        reg += f[3];
        est += f[5];
        assert_eq!(f[6], reg);
        assert_eq!(f[7], est);
        assert!(f[3] <= f[4] + 25.0 * f[5] + 1e-9);
        rows += 1;
    }
    assert_eq!(rows, 200);

    let summary: Value = serde_json::from_slice(&std::fs::read(dir.path().join("a/summary.json")).unwrap()).unwrap();
    for key in ["cum_regret", "est_h", "reg_kl", "bound_rhs"] {
        assert!(summary[key].is_number(), "{key}");
    }
    assert_eq!(summary["cum_regret"].as_f64().unwrap(), reg);
    let again: declab::e2d::TraceSummary = serde_json::from_value(summary).unwrap();
    assert_eq!(again.rounds, 200);
}

#[test]
fn bench_respects_thread_cap() {
    let dir = tempfile::tempdir().unwrap();
    write_mab5(dir.path());
    std::fs::write(
        dir.path().join("bench.json"),
        r#"{"schema_version":1,"class":"mab5_class.json","experiment":{"rounds":50,"gamma":10.0,"option":"I"},"runs":4,"write_traces":true}"#,
    )
    .unwrap();
    let o = Command::new(env!("CARGO_BIN_EXE_declab"))
        .args(["bench", "--config", "bench.json", "--out", "out"])
        .current_dir(dir.path())
        .env("DECLAB_THREADS", "2")
        .output()
        .unwrap();
    let v = stdout_json(&o);
    assert_eq!(v["threads"], 2);
    assert_eq!(v["runs"], 4);
    assert_eq!(v["summaries"].as_array().unwrap().len(), 4);
    assert!(dir.path().join("out/trace_run3.csv").exists());
    let from_file: Value = serde_json::from_slice(&std::fs::read(dir.path().join("out/bench.json")).unwrap()).unwrap();
    assert_eq!(from_file, v);

    let bad = Command::new(env!("CARGO_BIN_EXE_declab"))
        .args(["bench", "--config", "bench.json", "--out", "out"])
        .current_dir(dir.path())
        .env("DECLAB_THREADS", "zero")
        .output()
        .unwrap();
    assert_eq!(bad.status.code(), Some(2));
}

#[test]
fn family_mab_report() {
    let dir = tempfile::tempdir().unwrap();
    let v = stdout_json(&declab(
        &["family", "--kind", "mab", "--A", "3", "--delta", "0.1", "--gamma", "5", "--verify"],
        dir.path(),
    ));
    assert_eq!(v["passes"], true);
    assert!(v["lower_bound"].as_f64().unwrap().abs() < 1e-12);
    assert!((v["alpha"].as_f64().unwrap() - 0.1).abs() < 1e-15);
    assert!((v["beta"].as_f64().unwrap() - 0.03).abs() < 1e-15);
    assert_eq!(v["delta"].as_f64().unwrap(), 0.0);
    assert!(v["dual_lp_value"].as_f64().unwrap() >= -1e-9);

    let tree = stdout_json(&declab(
        &["family", "--kind", "tree", "--S", "4", "--A", "2", "--H", "2", "--delta", "0.1", "--verify", "--samples", "50"],
        dir.path(),
    ));
    assert_eq!(tree["passes"], true);
    assert_eq!(tree["report"]["sampled"], true);
    assert!(tree["dual_lp_value"].is_null());
}

#[test]
fn pcigw_outputs_cover() {
    let dir = tempfile::tempdir().unwrap();
    let mdp = r#"{"H":2,"S":2,"A":2,
      "P":[[[[0.9,0.1],[0.2,0.8]],[[0.5,0.5],[0.0,1.0]]],[[[1,0],[1,0]],[[0,1],[0,1]]]],
      "R":[[[{"kind":"bernoulli","mu":0.1},{"kind":"bernoulli","mu":0.3}],[{"kind":"bernoulli","mu":0.0},{"kind":"bernoulli","mu":0.2}]],
           [[{"kind":"bernoulli","mu":0.5},{"kind":"bernoulli","mu":0.0}],[{"kind":"bernoulli","mu":0.4},{"kind":"bernoulli","mu":0.1}]]],
      "d1":[0.5,0.5]}"#;
    std::fs::write(dir.path().join("m.json"), mdp).unwrap();
    let o = declab(&["pcigw", "--mdp", "m.json", "--gamma", "84", "--out", "cover.json"], dir.path());
    assert!(o.status.success() && o.stdout.is_empty());
    let cover: Value = serde_json::from_slice(&std::fs::read(dir.path().join("cover.json")).unwrap()).unwrap();
    let lambda = cover["lambda"].as_f64().unwrap();
    assert!((1.0..=16.0).contains(&lambda));
    assert!((cover["eta"].as_f64().unwrap() - 1.0).abs() < 1e-12);
    let w: Vec<f64> = cover["weights"].as_array().unwrap().iter().map(|x| x.as_f64().unwrap()).collect();
    assert!((w.iter().sum::<f64>() - 1.0).abs() < 1e-9);
    assert_eq!(w.len(), cover["policies"].as_array().unwrap().len());
}

#[test]
fn error_exit_codes_and_json() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("bad.json"), r#"{"decisions":2,"models":[],"bogus":1}"#).unwrap();
    let o = declab(&["dec", "--class", "bad.json", "--ref", "0", "--gamma", "1"], dir.path());
    assert_eq!(o.status.code(), Some(2));
    let err: Value = serde_json::from_slice(&o.stderr).unwrap();
    assert_eq!(err["exit_code"], 2);
    assert!(err["error"].is_string() && err["message"].is_string());

    let o = declab(&["dec", "--class", "missing.json", "--ref", "0", "--gamma", "1"], dir.path());
    assert_eq!(o.status.code(), Some(2));

    let o = declab(&["family", "--kind", "mab", "--A", "3", "--delta", "0.7"], dir.path());
    assert_eq!(o.status.code(), Some(2));

    let o = declab(&["frobnicate"], dir.path());
    assert_eq!(o.status.code(), Some(2));
    let err: Value = serde_json::from_slice(&o.stderr).unwrap();
    assert_eq!(err["error"], "usage");

    // Infinite KL between the two models.
    std::fs::write(
        dir.path().join("kl.json"),
        r#"{"decisions":1,"models":[{"outcomes":[{"kind":"bernoulli","mu":1.0}]},{"outcomes":[{"kind":"bernoulli","mu":0.0}]}]}"#,
    )
    .unwrap();
    let o = declab(&["dec", "--class", "kl.json", "--ref", "0", "--gamma", "1", "--divergence", "kl"], dir.path());
    assert!(matches!(o.status.code(), Some(2) | Some(3)));
    let err: Value = serde_json::from_slice(&o.stderr).unwrap();
    assert_eq!(err["exit_code"].as_i64(), o.status.code().map(i64::from));
}

#[test]
fn kl_divergence_in_run_config() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("c.json"), mab5_class()).unwrap();
    std::fs::write(
        dir.path().join("r.json"),
        r#"{"schema_version":1,"class":"c.json","experiment":{"rounds":5,"gamma":2.0,"option":"I","divergence":"kl"}}"#,
    )
    .unwrap();
    let o = declab(&["run", "--config", "r.json", "--out", "o"], dir.path());
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
}
