mod common;

use std::fs;
use std::path::Path;

use bilinas::solvers::{exact_search, Problem, SearchResult, DEFAULT_EXACT_CAP};
use bilinas::space::enumerate;
use bilinas::{Estimator, Latency, SearchSpace};
use common::{ok, p, pipeline, run, snapshot};
use tempfile::TempDir;

#[test]
fn every_command_is_byte_reproducible() {
    let (a, b) = (TempDir::new().unwrap(), TempDir::new().unwrap());
    pipeline(a.path(), "7");
    pipeline(b.path(), "7");
    let (sa, sb) = (snapshot(a.path()), snapshot(b.path()));
    assert!(sa.len() >= 19, "{:?}", sa.keys().collect::<Vec<_>>());
    assert_eq!(sa.keys().collect::<Vec<_>>(), sb.keys().collect::<Vec<_>>());
    for (k, v) in &sa {
        assert!(v == &sb[k], "{} differs between reruns", k.display());
    }
    // a different seed changes the outputs
    let c = TempDir::new().unwrap();
    pipeline(c.path(), "8");
    assert_ne!(sa[Path::new("oracle.json")], fs::read(c.path().join("oracle.json")).unwrap());
}

#[test]
fn every_artifact_records_the_seed() {
    let dir = TempDir::new().unwrap();
    pipeline(dir.path(), "31");
    for name in [
        "gen.json", "oracle.json", "bilinear.json", "quadratic.json", "eval_est.json", "eval_quad.json", "search/best.json",
        "search/summary.json", "report/insights.json", "report/ablation.json",
    ] {
        let v: serde_json::Value = serde_json::from_str(&fs::read_to_string(dir.path().join(name)).unwrap()).unwrap();
        assert_eq!(v["seed"], 31, "{name}");
    }
    let est: serde_json::Value = serde_json::from_str(&fs::read_to_string(dir.path().join("est.json")).unwrap()).unwrap();
    assert_eq!(est["meta"]["seed"], 31);
}

#[test]
fn paper_preset_reports_255_decisions() {
    let dir = TempDir::new().unwrap();
    let out = ok(&["gen", "--preset", "paper", "--out", dir.path().to_str().unwrap()]);
    assert!(String::from_utf8_lossy(&out.stdout).contains("N = 255"));
    let m: serde_json::Value = serde_json::from_str(&fs::read_to_string(dir.path().join("gen.json")).unwrap()).unwrap();
    assert_eq!(m["num_decisions"], 255);

    let tiny = TempDir::new().unwrap();
    ok(&["gen", "--preset", "tiny", "--out", tiny.path().to_str().unwrap()]);
    let m: serde_json::Value = serde_json::from_str(&fs::read_to_string(tiny.path().join("gen.json")).unwrap()).unwrap();
    assert_eq!(m["num_architectures"], "6");
}

#[test]
fn paper_targets_search_within_budget() {
    let dir = TempDir::new().unwrap();
    let d = |n: &str| p(dir.path(), n);
    ok(&["gen", "--preset", "paper", "--seed", "2", "--out", &d("")]);
    ok(&["estimate", "--space", &d("space.json"), "--oracle", &d("oracle.json"), "--n-per-probe", "10", "--n-repeats", "2", "--out", &d("est.json")]);
    let space: SearchSpace = serde_json::from_str(&fs::read_to_string(d("space.json")).unwrap()).unwrap();
    for target in ["40", "45"] {
        let out_dir = d(&format!("search_{target}"));
        ok(&[
            "search", "--space", &d("space.json"), "--estimator", &d("est.json"), "--latency", &d("latency.csv"), "--target", target,
            "--generations", "50", "--out", &out_dir,
        ]);
        let best = SearchResult::from_json(&space, &fs::read_to_string(Path::new(&out_dir).join("best.json")).unwrap()).unwrap();
        assert!(best.latency_ms <= target.parse::<f64>().unwrap());
        // exact refuses the paper space, the others run
        let summary = fs::read_to_string(Path::new(&out_dir).join("summary.json")).unwrap();
        assert!(summary.contains("exceeds cap"));
    }
}

#[test]
fn exact_search_on_tiny_matches_exhaustive_scan() {
    let dir = TempDir::new().unwrap();
    let d = |n: &str| p(dir.path(), n);
    ok(&["gen", "--preset", "tiny", "--seed", "4", "--out", &d("")]);
    ok(&["estimate", "--space", &d("space.json"), "--oracle", &d("oracle.json"), "--exact", "--out", &d("est.json")]);
    let space: SearchSpace = serde_json::from_str(&fs::read_to_string(d("space.json")).unwrap()).unwrap();
    let est = Estimator::from_json(&space, &fs::read_to_string(d("est.json")).unwrap()).unwrap();
    let lat = Latency::read_csv(&space, fs::File::open(d("latency.csv")).unwrap()).unwrap();
    let archs: Vec<_> = enumerate(&space, 100).unwrap().collect();
    let mut lats: Vec<f64> = archs.iter().map(|a| lat.of_arch(&space, a)).collect();
    lats.sort_by(f64::total_cmp);
    for target in lats {
        let t = format!("{target:?}");
        ok(&["search", "--space", &d("space.json"), "--estimator", &d("est.json"), "--latency", &d("latency.csv"), "--solver", "all", "--target", &t, "--out", &d("s")]);
        // every solver copes with targets that sit exactly on an achievable latency
        let summary: serde_json::Value = serde_json::from_str(&fs::read_to_string(d("s/summary.json")).unwrap()).unwrap();
        assert_eq!(summary["errors"], serde_json::json!({}), "target {t}");
        let got = SearchResult::from_json(&space, &fs::read_to_string(d("s/exact.json")).unwrap()).unwrap();
        let best = archs
            .iter()
            .filter(|a| lat.of_arch(&space, a) <= target)
            .map(|a| est.of_arch(&space, a))
            .fold(f64::NEG_INFINITY, f64::max);
        assert_eq!(got.predicted_acc, bilinas::io::fmt_num(best).parse::<f64>().unwrap());
        let pr = Problem { space: &space, est: &est, lat: &lat, target };
        assert_eq!(got.arch, exact_search(&pr, DEFAULT_EXACT_CAP, 0).unwrap().arch);
    }
}

#[test]
fn exit_codes_follow_the_contract() {
    let dir = TempDir::new().unwrap();
    let d = |n: &str| p(dir.path(), n);
    ok(&["gen", "--preset", "tiny", "--out", &d("")]);
    ok(&["estimate", "--space", &d("space.json"), "--oracle", &d("oracle.json"), "--out", &d("est.json")]);
    let search = |target: &str, solver: &str| {
        run(&["search", "--space", &d("space.json"), "--estimator", &d("est.json"), "--latency", &d("latency.csv"), "--target", target, "--solver", solver, "--out", &d("s")])
    };
    for solver in ["bcfw", "evo", "exact", "all"] {
        assert_eq!(search("1", solver).status.code(), Some(2), "{solver}");
    }
    assert_eq!(search("-3", "all").status.code(), Some(3));
    // missing input file
    let out = run(&["estimate", "--space", &d("nope.json"), "--oracle", &d("oracle.json"), "--out", &d("e.json")]);
    assert_eq!(out.status.code(), Some(4));
    // malformed input
    fs::write(d("bad.json"), "{ not json").unwrap();
    let out = run(&["estimate", "--space", &d("bad.json"), "--oracle", &d("oracle.json"), "--out", &d("e.json")]);
    assert_eq!(out.status.code(), Some(3));
    // unknown flag
    assert_eq!(run(&["gen", "--bogus"]).status.code(), Some(3));
    // empty component grid
    let out = run(&["fit", "--space", &d("space.json"), "--oracle", &d("oracle.json"), "--k-grid", "", "--out", &d("f.json")]);
    assert_eq!(out.status.code(), Some(3));
    assert_eq!(run(&["--help"]).status.code(), Some(0));
}
