use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::{json, Value};
use tempfile::TempDir;

fn ftc(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_ftc"))
        .current_dir(dir)
        .env_remove("FTC_RATIONAL")
        .args(args)
        .output()
        .expect("ftc runs")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exit code")
}

fn read(dir: &Path, name: &str) -> Value {
    serde_json::from_str(&std::fs::read_to_string(dir.join(name)).unwrap()).unwrap()
}

fn stdout_json(o: &Output) -> Value {
    serde_json::from_slice(&o.stdout).unwrap_or_else(|e| panic!("{e}: {}", String::from_utf8_lossy(&o.stdout)))
}

fn write(dir: &Path, name: &str, v: &Value) -> PathBuf {
    let p = dir.join(name);
    std::fs::write(&p, v.to_string()).unwrap();
    p
}

fn adversarial(dir: &Path) {
    let o = ftc(dir, &["gen", "adversarial", "--K", "14", "--N", "4", "--out", "adv.json"]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
}

#[test]
fn build2_then_verify_and_count_pieces() {
    let tmp = TempDir::new().unwrap();
    let dir = tmp.path();
    adversarial(dir);
    let o = ftc(dir, &["build2", "--instance", "adv.json", "--out", "net.json", "--report", "rep.json"]);
    assert_eq!(code(&o), 0);
    assert!(dir.join("net.json.manifest.json").exists());
    let o = ftc(dir, &["verify", "--net", "net.json", "--instance", "adv.json"]);
    assert_eq!(code(&o), 0);
    assert_eq!(stdout_json(&o)["pass"], true);

    let o = ftc(dir, &["pieces", "--net", "net.json", "--instance", "adv.json"]);
    assert_eq!(code(&o), 0);
    let v = stdout_json(&o);
    let m = read(dir, "rep.json")["neurons"].as_u64().unwrap();
    let pieces = v["pieces"].as_u64().unwrap();
    assert!(pieces >= 13 && pieces <= m + 1, "{v}");
    assert_eq!(v["budget"], 13);
}

#[test]
fn verify_exit_codes() {
    let tmp = TempDir::new().unwrap();
    let dir = tmp.path();
    adversarial(dir);
    write(dir, "zero.json", &json!({"input_dim": 1, "layers": [], "output_weights": [0.0], "output_bias": 0.0}));
    let o = ftc(dir, &["verify", "--net", "zero.json", "--instance", "adv.json"]);
    assert_eq!(code(&o), 1);
    assert_eq!(stdout_json(&o)["pass"], false);
    std::fs::write(dir.join("broken.json"), "{\"input_dim\": 1,").unwrap();
    assert_eq!(code(&ftc(dir, &["verify", "--net", "broken.json", "--instance", "adv.json"])), 2);
    assert_eq!(code(&ftc(dir, &["verify", "--net", "missing.json", "--instance", "adv.json"])), 2);
    assert_eq!(code(&ftc(dir, &["verify", "--net", "zero.json"])), 2);
}

#[test]
fn piece_counts_of_simple_networks() {
    let tmp = TempDir::new().unwrap();
    let dir = tmp.path();
    write(dir, "const.json", &json!({"input_dim": 2, "layers": [], "output_weights": [0.0, 0.0], "output_bias": 1.5}));
    let o = ftc(dir, &["pieces", "--net", "const.json", "--direction", "1,-2"]);
    assert_eq!(code(&o), 0);
    assert_eq!(stdout_json(&o)["pieces"], 1);

    // Eight ReLUs with scattered kinks and alternating output weights.
    let w: Vec<Value> = (0..8).map(|i| json!([1.0 + i as f64 * 0.25])).collect();
    let b: Vec<f64> = (0..8).map(|i| -(i as f64) * 0.7 + 0.3).collect();
    let out: Vec<f64> = (0..8).map(|i| if i % 2 == 0 { 1.5 } else { -2.0 }).collect();
    write(
        dir,
        "m8.json",
        &json!({"input_dim": 1, "layers": [{"W": w, "b": b, "activation": {"kind": "relu"}}], "output_weights": out, "output_bias": 0.0}),
    );
    let o = ftc(dir, &["pieces", "--net", "m8.json"]);
    assert_eq!(code(&o), 0);
    let v = stdout_json(&o);
    assert!(v["pieces"].as_u64().unwrap() <= 9);
    assert_eq!(v["ceiling"], 9);
    assert_eq!(code(&ftc(dir, &["pieces", "--net", "const.json"])), 2);
}

#[test]
fn report_table_and_flags() {
    let tmp = TempDir::new().unwrap();
    let dir = tmp.path();
    let o = ftc(dir, &["gen", "synthetic", "--K", "30", "--d", "2", "--seed", "3", "--out", "syn.json"]);
    assert_eq!(code(&o), 0);
    // Scale the label changes into [-1, 1] for the three-layer builders.
    let mut inst = read(dir, "syn.json");
    let tuned = [3usize, 11, 17, 25];
    for (j, t) in tuned.iter().enumerate() {
        inst["targets"][t - 1] = json!(0.2 * j as f64 - 0.5);
    }
    inst["tune_set"] = json!(tuned);
    write(dir, "inst.json", &inst);
    for (method, name) in [("grid", "g"), ("sparse", "s"), ("compact", "c")] {
        let o = ftc(dir, &["build3", "--method", method, "--instance", "inst.json", "--out", &format!("{name}.json"), "--report", &format!("{name}.rep.json")]);
        assert_eq!(code(&o), 0, "{method}: {}", String::from_utf8_lossy(&o.stderr));
    }
    let o = ftc(dir, &["report", "g.rep.json", "s.rep.json", "c.rep.json", "--csv", "table.csv"]);
    assert_eq!(code(&o), 0);
    let text = String::from_utf8_lossy(&o.stdout);
    assert_eq!(text.lines().count(), 4, "{text}");
    assert_eq!(std::fs::read_to_string(dir.join("table.csv")).unwrap().lines().count(), 4);

    let mut bad = read(dir, "g.rep.json");
    bad["relu_count"] = json!(bad["bound"].as_u64().unwrap() + 1);
    write(dir, "bad.rep.json", &bad);
    let o = ftc(dir, &["report", "g.rep.json", "bad.rep.json"]);
    assert_eq!(code(&o), 1);
    assert!(String::from_utf8_lossy(&o.stdout).contains("FLAGGED"));

    let o = ftc(dir, &["report"]);
    assert_eq!(code(&o), 0);
    assert_eq!(String::from_utf8_lossy(&o.stdout).lines().count(), 1);
}

#[test]
fn rational_mode_and_deep_builds() {
    let tmp = TempDir::new().unwrap();
    let dir = tmp.path();
    let pts: Vec<Vec<f64>> = (0..20).map(|i| vec![i as f64 * 0.5, (i * i % 7) as f64]).collect();
    let mut z = vec![0.0; 20];
    for (t, v) in [(2, 0.5), (5, -1.0), (9, 0.25), (13, 1.0), (17, -0.75)] {
        z[t - 1] = v;
    }
    write(dir, "inst.json", &json!({"d": 2, "K": 20, "points": pts, "targets": z, "tune_set": [2, 5, 9, 13, 17]}));
    let exact = |args: &[&str]| {
        Command::new(env!("CARGO_BIN_EXE_ftc")).current_dir(dir).env("FTC_RATIONAL", "1").args(args).output().unwrap()
    };
    let o = exact(&["build3", "--instance", "inst.json", "--out", "q.json", "--report", "q.rep.json"]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    assert_eq!(read(dir, "q.json")["numeric"], "rational");
    let o = exact(&["verify", "--net", "q.json", "--instance", "inst.json"]);
    assert_eq!(code(&o), 0);
    assert_eq!(stdout_json(&o)["tolerance"], 0.0);

    let o = ftc(dir, &["deep", "--L", "6", "--instance", "inst.json", "--out", "d.json", "--report", "d.rep.json"]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let rep = read(dir, "d.rep.json");
    assert_eq!(rep["L"], 6);
    assert_eq!(read(dir, "d.json")["layers"].as_array().unwrap().len(), 5);
    assert_eq!(code(&ftc(dir, &["report", "d.rep.json", "q.rep.json"])), 0);
    assert_eq!(code(&ftc(dir, &["deep", "--L", "3", "--instance", "inst.json", "--out", "x.json"])), 2);
}

#[test]
fn outputs_are_reproducible_without_timestamps() {
    let tmp = TempDir::new().unwrap();
    let dir = tmp.path();
    let run = |tag: &str| {
        let out = format!("syn{tag}.json");
        let o = ftc(dir, &["--no-timestamps", "gen", "synthetic", "--K", "25", "--d", "3", "--seed", "9", "--N", "4", "--out", &out]);
        assert_eq!(code(&o), 0);
        let net = format!("n{tag}.json");
        ftc(dir, &["--no-timestamps", "build2", "--instance", &out, "--out", &net]);
        (
            std::fs::read(dir.join(&out)).unwrap(),
            std::fs::read(dir.join(&net)).unwrap(),
            read(dir, &format!("{net}.manifest.json")),
        )
    };
    let (a_inst, a_net, a_man) = run("a");
    let (b_inst, b_net, b_man) = run("b");
    assert_eq!(a_inst, b_inst);
    assert_eq!(a_net, b_net);
    assert!(a_man.get("started_unix").is_none());
    assert_eq!(a_man["outputs"][0]["sha256"], b_man["outputs"][0]["sha256"]);
    let inst = read(dir, "syna.json");
    assert_eq!(inst["tune_set"].as_array().unwrap().len(), 4);
    assert_eq!(inst["generator"], "synthetic");
}

#[test]
fn bounds_and_partition_tables() {
    let tmp = TempDir::new().unwrap();
    let dir = tmp.path();
    let o = ftc(dir, &["bounds", "--depth", "2", "--solve-for", "m", "--N", "4", "--K", "14", "--json"]);
    assert_eq!(code(&o), 0);
    let v = stdout_json(&o);
    assert_eq!(v[0]["lower"], 12.0);
    assert_eq!(v[0]["upper"], 13.0);
    let o = ftc(dir, &["bounds", "--depth", "3", "--solve-for", "N", "--m", "12", "--K", "9,100"]);
    assert_eq!(code(&o), 0);
    let text = String::from_utf8_lossy(&o.stdout);
    assert_eq!(text.lines().count(), 3);
    assert!(text.contains("memorization") && text.contains("few_neurons"));
    assert_eq!(code(&ftc(dir, &["bounds", "--depth", "4", "--solve-for", "m", "--N", "1", "--K", "5"])), 2);
    assert_eq!(code(&ftc(dir, &["bounds", "--depth", "2", "--solve-for", "m", "--N", "9", "--K", "5"])), 2);

    let o = ftc(dir, &["partition", "--K", "14", "--T", "4,7,9,14"]);
    assert_eq!(code(&o), 0);
    let v = stdout_json(&o);
    assert_eq!(v["J"], json!([1, 3, 4, 5, 6, 7, 8, 9, 10, 13, 14]));
}

#[test]
fn small_experiment_writes_csv_and_summary() {
    let tmp = TempDir::new().unwrap();
    let dir = tmp.path();
    let o = ftc(
        dir,
        &["experiment", "--K", "40", "--d", "3", "--N-list", "4,8,16,32", "--m-max", "16", "--seeds", "1", "--epochs", "300", "--out", "res.csv"],
    );
    assert!(code(&o) == 0 || code(&o) == 1, "{}", String::from_utf8_lossy(&o.stderr));
    let csv = std::fs::read_to_string(dir.join("res.csv")).unwrap();
    assert!(csv.starts_with("N,m,seed,loss_ft,passed\n"));
    assert!(csv.lines().count() > 4);
    let summary = read(dir, "res.csv.summary.json");
    assert_eq!(summary["f_unchanged"], true);
    assert_eq!(summary["min_widths"].as_array().unwrap().len(), 4);
    assert!(dir.join("res.csv.manifest.json").exists());
}
