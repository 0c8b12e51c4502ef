use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;
use tempfile::TempDir;

fn gkcm(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_gkcm"))
        .args(args)
        .env_remove("GKCM_THREADS")
        .output()
        .expect("binary runs")
}

fn ok(args: &[&str]) -> Value {
    let out = gkcm(args);
    assert!(
        out.status.success(),
        "{args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    serde_json::from_slice(&out.stdout).expect("JSON record")
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exit code")
}

fn path(dir: &TempDir, name: &str) -> String {
    dir.path().join(name).to_string_lossy().into_owned()
}

fn write(dir: &TempDir, name: &str, text: &str) -> String {
    let p = path(dir, name);
    std::fs::write(&p, text).unwrap();
    p
}

fn complete_graph(n: usize) -> String {
    let mut edges = Vec::new();
    for a in 1..=n {
        for b in a + 1..=n {
            for c in b + 1..=n {
                edges.push(format!("e {a} {b} {c}"));
            }
        }
    }
    format!("p hcq {n} {} 3\n{}\n", edges.len(), edges.join("\n"))
}

#[test]
fn solves_a_complete_graph() {
    let dir = TempDir::new().unwrap();
    let g = write(&dir, "k5.hcq", &complete_graph(5));
    for solver in ["exact", "heuristic", "bruteforce", "kcore"] {
        let r = ok(&["solve", &g, "--solver", solver]);
        assert_eq!(r["size"], 5, "{solver}");
        assert_eq!(r["clique"], serde_json::json!([1, 2, 3, 4, 5]));
        assert_eq!(r["valid"], true);
    }
}

#[test]
fn exit_codes() {
    let dir = TempDir::new().unwrap();
    let big = write(&dir, "big.hcq", &complete_graph(25));
    let out = gkcm(&["solve", &big, "--solver", "bruteforce"]);
    assert_eq!(code(&out), 3);
    assert!(String::from_utf8_lossy(&out.stderr).contains("limited to 24"));

    let bad = write(&dir, "bad.hcq", "p hcq 3 1 2\ne 1 9\n");
    let out = gkcm(&["solve", &bad]);
    assert_eq!(code(&out), 2);
    assert!(String::from_utf8_lossy(&out.stderr).contains("bad.hcq:2:"));

    let k5 = write(&dir, "k5.hcq", &complete_graph(5));
    assert_eq!(code(&gkcm(&["solve", &k5, "--solver", "nope"])), 1);
    assert_eq!(code(&gkcm(&["solve", &k5, "--frobnicate"])), 1);
    assert_eq!(code(&gkcm(&["solve", &path(&dir, "missing.hcq")])), 2);
    assert_eq!(code(&gkcm(&["--help"])), 0);
}

#[test]
fn thread_env_var_is_a_default_the_flag_overrides() {
    let dir = TempDir::new().unwrap();
    let g = write(&dir, "k5.hcq", &complete_graph(5));
    let run = |extra: &[&str]| {
        let mut args = vec!["solve", g.as_str()];
        args.extend_from_slice(extra);
        Command::new(env!("CARGO_BIN_EXE_gkcm"))
            .args(&args)
            .env("GKCM_THREADS", "0")
            .output()
            .unwrap()
    };
    assert_eq!(code(&run(&[])), 1);
    assert_eq!(code(&run(&["--threads", "2"])), 0);
}

#[test]
fn simulate_is_deterministic_per_seed() {
    let dir = TempDir::new().unwrap();
    let read = |p: &str| std::fs::read(format!("{p}.measurements.jsonl")).unwrap();
    let (a, b, c) = (path(&dir, "a"), path(&dir, "b"), path(&dir, "c"));
    for (out, seed) in [(&a, "7"), (&b, "7"), (&c, "8")] {
        ok(&["simulate", "--kind", "range2d", "--poses", "20", "--outliers", "10", "--seed", seed, "-o", out]);
    }
    assert_eq!(read(&a), read(&b));
    assert_ne!(read(&a), read(&c));
    assert_eq!(
        std::fs::read(format!("{a}.truth.jsonl")).unwrap(),
        std::fs::read(format!("{b}.truth.jsonl")).unwrap()
    );
}

#[test]
fn hierarchical_and_direct_builds_write_identical_files() {
    let dir = TempDir::new().unwrap();
    let w = path(&dir, "w");
    ok(&["simulate", "--kind", "range2d", "--poses", "24", "--outliers", "16", "--seed", "3", "-o", &w]);
    let m = format!("{w}.measurements.jsonl");
    let direct = path(&dir, "direct.hcq");
    let hier = path(&dir, "hier.hcq");
    let inc = path(&dir, "inc.hcq");
    let d = ok(&["build", &m, "--metric", "range", "-o", &direct]);
    let h = ok(&["build", &m, "--metric", "range", "--k", "4", "--hierarchical", "-o", &hier]);
    ok(&["build", &m, "--metric", "range", "--hierarchical", "--incremental", "-o", &inc]);
    let bytes = |p: &str| std::fs::read(p).unwrap();
    assert_eq!(bytes(&direct), bytes(&hier));
    assert_eq!(bytes(&direct), bytes(&inc));
    assert_eq!(d["budget"], 10626);
    assert_eq!(d["checks"]["4"], 10626);
    assert!(h["checks"]["4"].as_u64().unwrap() < 10626);
    let text = String::from_utf8(bytes(&direct)).unwrap();
    assert!(text.lines().any(|l| l.starts_with("c ") && l.contains("gamma 3.841459")), "{text}");

    assert_eq!(code(&gkcm(&["build", &m, "--metric", "scalar", "-o", &direct])), 2);
    assert_eq!(code(&gkcm(&["build", &m, "--metric", "range", "--k", "3", "-o", &direct])), 1);
}

#[test]
fn pairwise_metric_over_identical_measurements_is_complete() {
    let dir = TempDir::new().unwrap();
    let line = r#"{"type":"relpose","from":[0,0],"to":[1,0],"translation":[1.0,2.0],"rotation":0.5,"cov":[0.01,0.0,0.01,0.0,0.0,0.001]}"#;
    let odo = |r: usize| {
        format!(
            r#"{{"type":"odometry","robot":{r},"start":{{"translation":[0.0,0.0],"rotation":0.0}},"steps":[{{"translation":[1.0,0.0],"rotation":0.1,"cov":[0.01,0.0,0.01,0.0,0.0,0.001]}}]}}"#
        )
    };
    let text = format!("{}\n{}\n{line}\n{line}\n{line}\n{line}\n", odo(0), odo(1));
    let m = write(&dir, "m.jsonl", &text);
    let g = path(&dir, "g.hcq");
    let r = ok(&["build", &m, "--metric", "relpose", "-o", &g]);
    assert_eq!(r["edges"], 6);
    assert_eq!(ok(&["solve", &g, "--solver", "exact"])["size"], 4);
}

#[test]
fn simulate_build_solve_eval_pipeline() {
    let dir = TempDir::new().unwrap();
    for seed in 0..2 {
        let w = path(&dir, &format!("w{seed}"));
        let seed = seed.to_string();
        ok(&["simulate", "--kind", "range2d", "--outliers", "60", "--seed", &seed, "-o", &w]);
        let m = format!("{w}.measurements.jsonl");
        let g = format!("{w}.hcq");
        let built = ok(&["build", &m, "--metric", "range", "--hierarchical", "-o", &g]);
        assert_eq!(built["vertices"], 75);
        let sol = ok(&["solve", &g]);
        assert_eq!(sol["valid"], true);
        let sel = write(&dir, "sel.json", &serde_json::to_string(&sol).unwrap());
        let r = ok(&["eval", &sel, "--truth", &format!("{w}.truth.jsonl"), "--measurements", &m]);
        let tp = r["true_positives"].as_u64().unwrap();
        let fp = r["false_positives"].as_u64().unwrap();
        assert_eq!(tp + fp, sol["size"].as_u64().unwrap());
        assert!((r["tpr"].as_f64().unwrap() - tp as f64 / 15.0).abs() < 1e-12);
        assert!(tp >= 8 && fp <= 2, "{r}");
        assert!(r["chi2"].as_f64().unwrap() < 5.0, "{r}");
    }
}

#[test]
fn planted_graph_is_recovered() {
    let dir = TempDir::new().unwrap();
    let w = path(&dir, "p");
    let s = ok(&["simulate", "--kind", "planted", "--n", "40", "--k", "3", "--clique", "12", "--density", "0.1", "--seed", "2", "-o", &w]);
    assert_eq!(s["edges"], 988);
    let g = format!("{w}.hcq");
    let heur = ok(&["solve", &g, "--solver", "heuristic"]);
    let exact = ok(&["solve", &g, "--solver", "exact", "--deterministic"]);
    assert_eq!(heur["size"], 12);
    assert_eq!(exact["size"], 12);
    let sel = write(&dir, "sel.json", &serde_json::to_string(&heur).unwrap());
    let r = ok(&["eval", &sel, "--truth", &format!("{w}.truth.jsonl")]);
    assert_eq!((r["tpr"].as_f64(), r["fpr"].as_f64()), (Some(1.0), Some(0.0)));
}

#[test]
fn eval_edge_cases() {
    let dir = TempDir::new().unwrap();
    let w = path(&dir, "w");
    ok(&["simulate", "--kind", "one-d", "--poses", "6", "--outliers", "4", "--seed", "1", "-o", &w]);
    let m = format!("{w}.measurements.jsonl");
    let truth = format!("{w}.truth.jsonl");
    let labels: Vec<bool> = std::fs::read_to_string(&truth)
        .unwrap()
        .lines()
        .filter_map(|l| serde_json::from_str::<Value>(l).ok())
        .filter(|v| v["type"] == "label")
        .map(|v| v["inlier"].as_bool().unwrap())
        .collect();
    let perfect: Vec<String> = (1..=labels.len()).filter(|&i| labels[i - 1]).map(|i| i.to_string()).collect();
    let sel = write(&dir, "perfect.txt", &perfect.join(" "));
    let r = ok(&["eval", &sel, "--truth", &truth, "--measurements", &m]);
    assert_eq!((r["tpr"].as_f64(), r["fpr"].as_f64()), (Some(1.0), Some(0.0)));

    let empty = write(&dir, "empty.txt", "");
    let r = ok(&["eval", &empty, "--truth", &truth, "--measurements", &m]);
    assert_eq!(r["tpr"].as_f64(), Some(0.0));
    assert!(r["chi2"].is_null());

    let far = write(&dir, "far.txt", "1 99");
    let out = gkcm(&["eval", &far, "--truth", &truth, "--measurements", &m]);
    assert_eq!(code(&out), 2);
    assert!(String::from_utf8_lossy(&out.stderr).contains("out of range"));
}

#[test]
fn bench_writes_csv_and_guards_repeats() {
    let dir = TempDir::new().unwrap();
    let csv = path(&dir, "b.csv");
    let out = gkcm(&["bench", "hierarchy", "--m-min", "12", "--m-max", "16", "--m-step", "4", "--repeats", "2", "-o", &csv]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let text = std::fs::read_to_string(&csv).unwrap();
    let rows: Vec<&str> = text.lines().collect();
    assert_eq!(rows[0], "config,mode,mean_ms,std_ms");
    assert_eq!(rows.len(), 1 + 2 * 3);
    assert!(rows[1].starts_with("12,g4,") && rows[6].starts_with("16,g2+g3+g4,"));

    let out = gkcm(&["bench", "incremental", "--m-min", "12", "--m-max", "12", "--repeats", "1"]);
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.contains("12,incremental,") && text.contains("12,batch,"), "{text}");

    assert_eq!(code(&gkcm(&["bench", "hierarchy", "--repeats", "0"])), 1);
    assert!(!Path::new(&path(&dir, "none.csv")).exists());
}
