use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

fn dilato(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_dilato")).args(args).env_remove("DILATO_DEFAULT_N").output().expect("binary runs")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exited normally")
}

fn write(dir: &Path, name: &str, body: &str) -> PathBuf {
    let p = dir.join(name);
    std::fs::write(&p, body).unwrap();
    p
}

fn scalar_instance(dir: &Path, name: &str, t1: f64, t2: f64) -> PathBuf {
    write(dir, name, &format!(r#"{{"schema":"pair-v1","dim":1,"t1":[[[{t1},0]]],"t2":[[[{t2},0]]]}}"#))
}

fn json(o: &Output) -> Value {
    serde_json::from_slice(&o.stdout).unwrap_or_else(|e| panic!("{e}: {}", String::from_utf8_lossy(&o.stdout)))
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

#[test]
fn generate_is_deterministic_and_valid() {
    let dir = tempfile::tempdir().unwrap();
    let (a, b) = (dir.path().join("a.json"), dir.path().join("b.json"));
    for f in [&a, &b] {
        let o = dilato(&["generate", "--dim", "3", "--seed", "7", "--scheme", "poly", "--out", p(f)]);
        assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    }
    let text = std::fs::read_to_string(&a).unwrap();
    assert_eq!(text, std::fs::read_to_string(&b).unwrap());
    let file = dilato::instance::InstanceFile::parse(&text).unwrap();
    assert_eq!(file.schema, "pair-v1");
    let pair = file.to_pair().unwrap();
    assert!(dilato::linalg::fro(&(pair.t1() * pair.t2() - pair.t2() * pair.t1())) <= 1e-12);

    let o = dilato(&["generate", "--dim", "1", "--seed", "0"]);
    assert_eq!(code(&o), 0);
    assert_eq!(json(&o)["dim"], 1);
}

#[test]
fn dilate_reports_and_exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let half = scalar_instance(dir.path(), "half.json", 0.5, 0.5);
    let o = dilato(&["dilate", p(&half), "--model", "schaffer", "-N", "12", "--format", "json"]);
    assert_eq!(code(&o), 0);
    let doc = json(&o);
    assert_eq!(doc["degree"], 12);
    for c in doc["checks"].as_array().unwrap() {
        assert!(c["passed"].as_bool().unwrap(), "{c}");
        if c["threshold"].as_f64().unwrap() < 0.5 {
            assert!(c["value"].as_f64().unwrap() <= 1e-8, "{c}");
        }
    }
    assert_eq!(doc["matrices"]["v1"].as_array().unwrap().len(), 1 + 12 * 2);

    let unitaries = write(
        dir.path(),
        "u.json",
        r#"{"schema":"pair-v1","dim":2,"t1":[[[0,1],[0,0]],[[0,0],[-1,0]]],"t2":[[[1,0],[0,0]],[[0,0],[1,0]]]}"#,
    );
    let o = dilato(&["dilate", p(&unitaries), "--model", "douglas", "--format", "json"]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stdout));
    let doc = json(&o);
    assert_eq!(doc["dims"]["hardy_fiber"], 0);
    assert_eq!(doc["dims"]["r"], 2);

    let nc = write(
        dir.path(),
        "nc.json",
        r#"{"schema":"pair-v1","dim":2,"t1":[[[0,0],[0.5,0]],[[0,0],[0,0]]],"t2":[[[0,0],[0,0]],[[0.5,0],[0,0]]]}"#,
    );
    let o = dilato(&["dilate", p(&nc)]);
    assert_eq!(code(&o), 2);
    assert!(String::from_utf8_lossy(&o.stderr).contains("do not commute"));

    assert_eq!(code(&dilato(&["dilate", p(&dir.path().join("missing.json"))])), 2);
    assert_eq!(code(&dilato(&["dilate", p(&half), "-N", "1"])), 2);
    assert_eq!(code(&dilato(&["dilate", p(&half), "--tol", "-1"])), 2);
    // an impossible tolerance turns passing residuals into failures
    assert_eq!(code(&dilato(&["dilate", p(&half), "--tol", "1e-300"])), 1);
}

#[test]
fn verify_suites() {
    let dir = tempfile::tempdir().unwrap();
    let o = dilato(&["verify", "--random", "12", "--dim", "4", "--seed", "1", "--suite", "all", "--format", "json"]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stdout));
    let doc = json(&o);
    assert_eq!(doc["summary"]["failed"], 0);
    let idx: Vec<u64> = doc["instances"].as_array().unwrap().iter().map(|r| r["index"].as_u64().unwrap()).collect();
    assert_eq!(idx, (0..12).collect::<Vec<_>>());

    let u = scalar_instance(dir.path(), "u.json", -1.0, 1.0);
    let o = dilato(&["verify", p(&u), "--suite", "model", "--format", "json"]);
    assert_eq!(code(&o), 0);
    let skipped = &json(&o)["instances"][0]["suites"][0]["skipped"];
    assert!(skipped.as_str().unwrap().contains("not pure"));

    let half = scalar_instance(dir.path(), "half.json", 0.5, 0.5);
    let o = dilato(&["verify", p(&half), "--suite", "uniqueness", "--format", "json"]);
    assert_eq!(code(&o), 0);
    let checks = json(&o)["instances"][0]["suites"][0]["checks"].clone();
    let omega = checks.as_array().unwrap().iter().find(|c| c["name"] == "alignment_intertwining").unwrap();
    assert!(omega["value"].as_f64().unwrap() <= 1e-8);

    let out = dir.path().join("report.txt");
    let o = dilato(&["verify", p(&half), "--out", p(&out)]);
    assert_eq!(code(&o), 0);
    assert!(std::fs::read_to_string(&out).unwrap().contains("1 instances: 1 passed"));

    assert_eq!(code(&dilato(&["verify"])), 2);
    assert_eq!(code(&dilato(&["verify", p(&half), "--random", "3"])), 2);
}

#[test]
fn degree_from_environment() {
    let dir = tempfile::tempdir().unwrap();
    let half = scalar_instance(dir.path(), "half.json", 0.5, 0.5);
    let run = |n: &str| {
        Command::new(env!("CARGO_BIN_EXE_dilato"))
            .args(["dilate", p(&half), "--format", "json"])
            .env("DILATO_DEFAULT_N", n)
            .output()
            .unwrap()
    };
    assert_eq!(json(&run("9"))["degree"], 9);
    assert_eq!(code(&run("nine")), 2);
}

#[test]
fn char_reports_and_comparisons() {
    let dir = tempfile::tempdir().unwrap();
    let quarter = scalar_instance(dir.path(), "q.json", 0.25, 1.0);
    let csv = dir.path().join("plot.csv");
    let o = dilato(&["char", p(&quarter), "--format", "json", "--emit-plot-data", p(&csv)]);
    assert_eq!(code(&o), 0);
    let doc = json(&o);
    let theta0 = doc["theta_at_zero"][0][0].as_array().unwrap().clone();
    assert!((theta0[0].as_f64().unwrap() + 0.25).abs() < 1e-12 && theta0[1].as_f64().unwrap().abs() < 1e-12);
    let table = std::fs::read_to_string(&csv).unwrap();
    let mut lines = table.lines();
    assert_eq!(lines.next(), Some("theta,radius,sigma_1"));
    assert_eq!(lines.count(), dilato::cli::PLOT_SAMPLES);

    let a = dir.path().join("a.json");
    let c = dir.path().join("c.json");
    let other = dir.path().join("o.json");
    assert_eq!(code(&dilato(&["generate", "--dim", "3", "--seed", "4", "--out", p(&a)])), 0);
    assert_eq!(code(&dilato(&["generate", "--conjugate", p(&a), "--seed", "9", "--out", p(&c)])), 0);
    assert_eq!(code(&dilato(&["generate", "--dim", "3", "--seed", "5", "--out", p(&other)])), 0);

    let o = dilato(&["char", p(&a), "--compare", p(&c), "--format", "json"]);
    assert_eq!(code(&o), 0);
    let found = json(&o)["coincidence"].clone();
    assert_eq!(found["outcome"], "found", "{found}");
    assert!(found["residual"].as_f64().unwrap() <= 1e-9);

    let o = dilato(&["char", p(&a), "--compare", p(&other), "--format", "json"]);
    assert_eq!(code(&o), 0);
    assert_eq!(json(&o)["coincidence"]["outcome"], "not_found");
}

#[test]
fn usage_errors_exit_2() {
    assert_eq!(code(&dilato(&["frobnicate"])), 2);
    assert_eq!(code(&dilato(&["verify", "--suite", "everything"])), 2);
    assert_eq!(code(&dilato(&["--help"])), 0);
}
