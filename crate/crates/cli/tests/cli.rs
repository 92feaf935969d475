use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn overpen(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_overpen"))
        .args(args)
        .env_remove("OVERPEN_SEED")
        .output()
        .expect("binary runs")
}

fn write(dir: &Path, name: &str, text: &str) -> String {
    let p = dir.join(name);
    fs::write(&p, text).unwrap();
    p.to_str().unwrap().to_string()
}

fn stdout_json(o: &Output) -> serde_json::Value {
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    serde_json::from_slice(&o.stdout).expect("stdout is JSON")
}

#[test]
fn select_on_four_samples_reports_selected_dim() {
    let dir = tempfile::tempdir().unwrap();
    let input = write(dir.path(), "s.txt", "0.1\n0.2\n0.7\n0.9\n");
    let hist = dir.path().join("h.json");
    let o = overpen(&["select", "--input", &input, "--criterion", "aic", "--histogram-out", hist.to_str().unwrap()]);
    let v = stdout_json(&o);
    assert!(v["selected_dim"].is_u64());
    assert_eq!(v["criterion"], "aic");
    let h: serde_json::Value = serde_json::from_str(&fs::read_to_string(hist).unwrap()).unwrap();
    assert_eq!(h["support"], serde_json::json!([0.0, 1.0]));
}

#[test]
fn overpen_one_is_aic1() {
    let dir = tempfile::tempdir().unwrap();
    let samples = overpen(&["densities", "sample", "--id", "beta22", "--n", "300", "--seed", "5"]);
    let input = write(dir.path(), "s.txt", &String::from_utf8(samples.stdout).unwrap());
    let a = overpen(&["select", "--input", &input, "--criterion", "overpen:1.0", "--quiet"]);
    let b = overpen(&["select", "--input", &input, "--criterion", "aic1", "--quiet"]);
    assert!(a.status.success());
    assert_eq!(a.stdout, b.stdout);
}

#[test]
fn out_of_support_sample_exits_2_and_names_the_value() {
    let dir = tempfile::tempdir().unwrap();
    let input = write(dir.path(), "s.txt", "0.25\n1.75\n");
    let o = overpen(&["select", "--input", &input]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("1.75"));
    assert!(o.stdout.is_empty());
}

#[test]
fn unknown_criterion_is_a_usage_error() {
    let dir = tempfile::tempdir().unwrap();
    let input = write(dir.path(), "s.txt", "0.5\n");
    assert_eq!(overpen(&["select", "--input", &input, "--criterion", "bic"]).status.code(), Some(2));
    assert_eq!(overpen(&["benchmark", "--criteria", "aic,nope"]).status.code(), Some(2));
}

#[test]
fn csv_column_and_support_override() {
    let dir = tempfile::tempdir().unwrap();
    let input = write(dir.path(), "s.csv", "id,x\n1,-0.5\n2,0.25\n3,0.5\n4,1.5\n");
    let o = overpen(&["select", "--input", &input, "--column", "x", "--support", "-1,2", "--max-cells", "3", "--quiet"]);
    let v = stdout_json(&o);
    assert_eq!(v["support"], serde_json::json!([-1.0, 2.0]));
    assert_eq!(v["crit_values"].as_array().unwrap().len(), 3);
}

#[test]
fn benchmark_rows_and_repeatability() {
    let dir = tempfile::tempdir().unwrap();
    let run = |name: &str| {
        let out = dir.path().join(name);
        let o = overpen(&[
            "benchmark", "--densities", "beta22", "--n", "50", "--trials", "3", "--criteria", "aic,aic1", "--seed", "1",
            "--out", out.to_str().unwrap(),
        ]);
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
        // progress goes to stderr only; stdout is a single JSON line
        assert!(!o.stderr.is_empty());
        stdout_json(&o);
        (fs::read(out.join("trials.csv")).unwrap(), fs::read(out.join("summary.csv")).unwrap())
    };
    let (t1, s1) = run("a");
    let (t2, s2) = run("b");
    assert_eq!(String::from_utf8_lossy(&t1).lines().count(), 1 + 6);
    assert_eq!(t1, t2);
    assert_eq!(s1, s2);
    assert!(dir.path().join("a/summary.json").exists());
    assert!(dir.path().join("a/plotdata_kl.csv").exists());
}

#[test]
fn verify_passes_and_falsified_run_fails() {
    let dir = tempfile::tempdir().unwrap();
    let report = dir.path().join("r.json");
    let o = overpen(&["verify", "--suite", "identities", "--reps", "100", "--seed", "1", "--report", report.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0));
    let v: serde_json::Value = serde_json::from_str(&fs::read_to_string(&report).unwrap()).unwrap();
    assert_eq!(v["suite"], "identities");
    for c in v["checks"].as_array().unwrap() {
        for key in ["id", "params", "empirical", "bound", "pass"] {
            assert!(c.get(key).is_some(), "missing {key}");
        }
    }
    let bad = overpen(&["verify", "--suite", "identities", "--reps", "100", "--falsify", "--quiet"]);
    assert_eq!(bad.status.code(), Some(1));
    assert_eq!(overpen(&["verify", "--suite", "everything"]).status.code(), Some(2));
}

#[test]
fn config_file_supplies_defaults_and_flags_win() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "c.txt", "# sampling\nid = uniform\nn = 4\nseed = 9\n");
    let from_file = overpen(&["densities", "sample", "--config", &cfg]);
    assert!(from_file.status.success(), "{}", String::from_utf8_lossy(&from_file.stderr));
    assert_eq!(String::from_utf8_lossy(&from_file.stdout).lines().count(), 4);
    let overridden = overpen(&["densities", "sample", "--config", &cfg, "--n", "2"]);
    let lines: Vec<String> = String::from_utf8_lossy(&overridden.stdout).lines().map(String::from).collect();
    assert_eq!(lines.len(), 2);
    let direct = overpen(&["densities", "sample", "--id", "uniform", "--n", "2", "--seed", "9"]);
    assert_eq!(overridden.stdout, direct.stdout);
}

#[test]
fn seed_falls_back_to_environment() {
    let with_env = Command::new(env!("CARGO_BIN_EXE_overpen"))
        .args(["densities", "sample", "--id", "tilted", "--n", "3"])
        .env("OVERPEN_SEED", "42")
        .output()
        .unwrap();
    let explicit = overpen(&["densities", "sample", "--id", "tilted", "--n", "3", "--seed", "42"]);
    assert_eq!(with_env.stdout, explicit.stdout);
}

#[test]
fn sampled_values_round_trip_exactly() {
    let o = overpen(&["densities", "sample", "--id", "inf_peak", "--n", "50", "--seed", "3"]);
    let text = String::from_utf8(o.stdout).unwrap();
    let parsed: Vec<f64> = text.lines().map(|l| l.parse().unwrap()).collect();
    let target = overpen::density::lookup("inf_peak").unwrap();
    assert_eq!(parsed, overpen::density::draw_samples(&target, 3, 50));
}

#[test]
fn plotdata_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("b");
    let o = overpen(&["benchmark", "--densities", "triangle", "--n", "60", "--trials", "2", "--criteria", "aic", "--quiet", "--out", out.to_str().unwrap()]);
    assert!(o.status.success());
    let kl = overpen(&["plotdata", "kl", "--trials", out.join("trials.csv").to_str().unwrap()]);
    assert!(kl.status.success());
    assert_eq!(String::from_utf8_lossy(&kl.stdout).lines().count(), 3);

    let samples = overpen(&["densities", "sample", "--id", "beta22", "--n", "200", "--seed", "2"]);
    let input = write(dir.path(), "s.txt", &String::from_utf8(samples.stdout).unwrap());
    let ad = overpen(&["plotdata", "adaptive", "--input", &input, "--density", "beta22"]);
    assert!(ad.status.success(), "{}", String::from_utf8_lossy(&ad.stderr));
    let text = String::from_utf8(ad.stdout).unwrap();
    assert!(text.starts_with("alpha,c_hat_alpha"));
    assert_eq!(text.lines().count(), 1 + 19);
    let not_adaptive = overpen(&["plotdata", "adaptive", "--input", &input, "--criterion", "aic"]);
    assert_eq!(not_adaptive.status.code(), Some(2));
}
