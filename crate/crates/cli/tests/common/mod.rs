//! Helpers for driving the `bilinas` binary from integration tests.
#![allow(dead_code)]

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

pub fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_bilinas")).args(args).output().expect("binary runs")
}

pub fn ok(args: &[&str]) -> Output {
    let out = run(args);
    assert!(out.status.success(), "{args:?} failed: {}", String::from_utf8_lossy(&out.stderr));
    out
}

pub fn p(dir: &Path, name: &str) -> String {
    dir.join(name).to_str().unwrap().to_string()
}

/// Every file under `dir`, relative path -> bytes.
pub fn snapshot(dir: &Path) -> BTreeMap<PathBuf, Vec<u8>> {
    let mut out = BTreeMap::new();
    let mut stack = vec![dir.to_path_buf()];
    while let Some(d) = stack.pop() {
        for e in fs::read_dir(&d).unwrap() {
            let path = e.unwrap().path();
            if path.is_dir() {
                stack.push(path);
            } else {
                out.insert(path.strip_prefix(dir).unwrap().to_path_buf(), fs::read(&path).unwrap());
            }
        }
    }
    out
}

/// gen, estimate, fit (both families, sampled and reloaded data), search
/// with every solver, eval and report with ablations.
pub fn pipeline(dir: &Path, seed: &str) {
    let d = |n: &str| p(dir, n);
    ok(&["gen", "--preset", "small", "--seed", seed, "--noise-std", "0.05", "--epsilon", "0.001", "--out", &d("")]);
    let (space, oracle, latency) = (d("space.json"), d("oracle.json"), d("latency.csv"));
    ok(&["estimate", "--space", &space, "--oracle", &oracle, "--n-per-probe", "20", "--n-repeats", "2", "--seed", seed, "--out", &d("est.json")]);
    ok(&[
        "fit", "--space", &space, "--oracle", &oracle, "--n", "300", "--n-test", "100", "--k-grid", "5,20,40", "--seed", seed,
        "--save-dataset", &d("data"), "--out", &d("bilinear.json"),
    ]);
    ok(&[
        "fit", "--space", &space, "--dataset", &d("data/dataset.csv"), "--split", &d("data/split.json"), "--family",
        "full-quadratic", "--k-grid", "5,20,40", "--seed", seed, "--out", &d("quadratic.json"),
    ]);
    ok(&[
        "search", "--space", &space, "--estimator", &d("est.json"), "--latency", &latency, "--target", "22", "--solver", "all",
        "--iterations", "300", "--generations", "40", "--seed", seed, "--out", &d("search"),
    ]);
    ok(&["eval", "--space", &space, "--oracle", &oracle, "--estimator", &d("est.json"), "--n", "200", "--seed", seed, "--out", &d("eval_est.json")]);
    ok(&[
        "eval", "--space", &space, "--oracle", &oracle, "--predictor", &d("quadratic.json"), "--n", "200", "--noisy-targets", "--seed",
        seed, "--out", &d("eval_quad.json"),
    ]);
    ok(&[
        "report", "--space", &space, "--estimator", &d("est.json"), "--latency", &latency, "--ablate", "--oracle", &oracle, "--n", "200",
        "--seed", seed, "--out", &d("report"),
    ]);
}
