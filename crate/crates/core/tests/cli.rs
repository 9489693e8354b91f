use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn epiflux(args: &[&str], config: &Path, out: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_epiflux"))
        .args(args)
        .arg("--config")
        .arg(config)
        .arg("--out")
        .arg(out)
        .output()
        .unwrap()
}

fn write_config(dir: &Path, text: &str) -> std::path::PathBuf {
    let path = dir.join("config.json");
    std::fs::write(&path, text).unwrap();
    path
}

fn stderr_record(out: &Output) -> Value {
    let text = String::from_utf8_lossy(&out.stderr);
    let line = text.lines().last().expect("error record on stderr");
    serde_json::from_str(line).unwrap()
}

#[test]
fn trajectory_study_writes_grid_and_metadata() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(
        tmp.path(),
        r#"{"beta0":20,"beta1":0.4,"gamma":10,"nu":1,"s0_frac":0.92,"i0_frac":0.08,"r0_frac":0.0,"n":10000}"#,
    );
    let out = tmp.path().join("traj");
    let res = epiflux(&["simulate"], &cfg, &out);
    assert!(res.status.success(), "{}", String::from_utf8_lossy(&res.stderr));

    let grid = std::fs::read_to_string(out.join("grid.csv")).unwrap();
    let lines: Vec<&str> = grid.lines().collect();
    assert_eq!(lines[0], "t,s,i,r,x,y,z");
    assert_eq!(lines.len(), 1 + 201);
    assert!(lines[1].starts_with("0.0000000000000000e0,9200,800,0,"));
    assert!(!grid.contains('\r'));

    let meta: Value = serde_json::from_str(&std::fs::read_to_string(out.join("metadata.json")).unwrap()).unwrap();
    assert_eq!(meta["study"], "trajectory");
    assert_eq!(meta["seed"], 1);
    for key in ["h", "dt", "runs", "t_end", "t_obs", "event_budget", "component"] {
        assert!(meta["config"].get(key).is_some(), "default {key} not echoed");
    }
    assert_eq!(meta["config"]["h"], 1e-3);
    assert_eq!(meta["config"]["runs"], 500);
    assert!(meta["wall_time_seconds"].as_f64().unwrap() >= 0.0);
}

#[test]
fn metadata_config_reruns_the_study() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), r#"{"n": 500, "t_end": 0.5, "seed": 9}"#);
    let first = tmp.path().join("a");
    assert!(epiflux(&["simulate", "--seed", "31"], &cfg, &first).status.success());
    let meta: Value = serde_json::from_str(&std::fs::read_to_string(first.join("metadata.json")).unwrap()).unwrap();
    assert_eq!(meta["seed"], 31, "flag overrides file");

    // feed the echoed config back in, pointing at a new directory
    let second = tmp.path().join("b");
    let mut echoed = meta["config"].clone();
    echoed["out_dir"] = Value::String(second.to_string_lossy().into_owned());
    let cfg2 = tmp.path().join("echoed.json");
    std::fs::write(&cfg2, serde_json::to_string(&echoed).unwrap()).unwrap();
    let res = Command::new(env!("CARGO_BIN_EXE_epiflux"))
        .args(["simulate", "--config"])
        .arg(&cfg2)
        .output()
        .unwrap();
    assert!(res.status.success(), "{}", String::from_utf8_lossy(&res.stderr));
    for file in ["grid.csv", "ode.csv", "summary.json"] {
        assert_eq!(
            std::fs::read(first.join(file)).unwrap(),
            std::fs::read(second.join(file)).unwrap(),
            "{file}"
        );
    }
}

#[test]
fn ode_study_covers_horizon() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), r#"{"t_end": 1.0, "h": 0.01}"#);
    let out = tmp.path().join("ode");
    assert!(epiflux(&["ode"], &cfg, &out).status.success());
    let text = std::fs::read_to_string(out.join("ode.csv")).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "t,x,y,z");
    assert_eq!(lines.len(), 1 + 101);
    assert!(lines[101].starts_with("1.0000000000000000e0,"));
}

#[test]
fn config_errors_exit_with_2() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("never");
    for (text, needle) in [
        (r#"{"beta1": 1.5}"#, "beta1"),
        (r#"{"betta0": 20}"#, "betta0"),
        ("{\n\"nu\": 1,\n\"gamma\": }", "line 3"),
    ] {
        let cfg = write_config(tmp.path(), text);
        let res = epiflux(&["ode"], &cfg, &out);
        assert_eq!(res.status.code(), Some(2), "{text}");
        let rec = stderr_record(&res);
        assert_eq!(rec["exit_code"], 2);
        assert!(rec["message"].as_str().unwrap().contains(needle), "{rec}");
    }
    let cfg = write_config(tmp.path(), r#"{"study": "scaling"}"#);
    assert_eq!(epiflux(&["ode"], &cfg, &out).status.code(), Some(2));
    assert!(!out.exists(), "no output before the config is valid");
}

#[test]
fn runtime_errors_exit_with_3() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), r#"{"n": 10000, "event_budget": 100}"#);
    let res = epiflux(&["simulate"], &cfg, &tmp.path().join("o"));
    assert_eq!(res.status.code(), Some(3));
    assert_eq!(stderr_record(&res)["kind"], "budget_exceeded");
}

#[test]
fn failed_gate_exits_with_4_only_when_requested() {
    let tmp = tempfile::tempdir().unwrap();
    // frozen dynamics: every deviation is zero, so the means cannot decrease
    let cfg = write_config(
        tmp.path(),
        r#"{"nu": 0, "gamma": 0, "beta0": 0, "runs": 2, "n_values": [100, 200], "t_end": 0.5}"#,
    );
    let out = tmp.path().join("e");
    assert!(epiflux(&["ensemble"], &cfg, &out).status.success());
    let res = epiflux(&["ensemble", "--gate"], &cfg, &out);
    assert_eq!(res.status.code(), Some(4));
    let rec = stderr_record(&res);
    assert_eq!(rec["failed"][0]["name"], "mean_deviation_decreasing");
    let summary: Value = serde_json::from_str(&std::fs::read_to_string(out.join("summary.json")).unwrap()).unwrap();
    assert_eq!(summary["gates"][0]["passed"], false);
}

#[test]
fn desk_scaling_study_passes_its_gate() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), r#"{"runs": 500, "seed": 3}"#);
    let out = tmp.path().join("s");
    let res = epiflux(&["scaling", "--gate"], &cfg, &out);
    assert!(res.status.success(), "{}", String::from_utf8_lossy(&res.stderr));
    let summary: Value = serde_json::from_str(&std::fs::read_to_string(out.join("summary.json")).unwrap()).unwrap();
    let slope = summary["slope"].as_f64().unwrap();
    assert!((-0.6..=-0.4).contains(&slope), "{slope}");
    let csv = std::fs::read_to_string(out.join("scaling.csv")).unwrap();
    assert_eq!(csv.lines().count(), 1 + 5);
    assert!(csv.starts_with("n,sigma_i,f_i,ratio\n1000,"));
}

#[test]
fn fluctuation_study_exports() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), r#"{"n": 5000, "runs": 300}"#);
    let out = tmp.path().join("f");
    let res = epiflux(&["fluctuation", "--gate"], &cfg, &out);
    assert!(res.status.success(), "{}", String::from_utf8_lossy(&res.stderr));
    let w = std::fs::read_to_string(out.join("w_samples.csv")).unwrap();
    assert_eq!(w.lines().count(), 301);
    assert!(w.starts_with("run_index,t,w1,w2,w3\n0,"));
    let sigma = std::fs::read_to_string(out.join("sigma.csv")).unwrap();
    assert!(sigma.starts_with("t,s11,s12,s13,s22,s23,s33\n"));
    let hist = std::fs::read_to_string(out.join("histogram.csv")).unwrap();
    assert!(hist.starts_with("left,right,count,density,fitted_pdf,theory_pdf\n"));
    let summary: Value = serde_json::from_str(&std::fs::read_to_string(out.join("summary.json")).unwrap()).unwrap();
    for key in ["ks_p", "means", "variances", "limit_variance"] {
        assert!(summary.get(key).is_some(), "{key}");
    }
}
