//! Command-level behavior: exit codes, determinism, and the exported
//! artifacts' internal consistency.

use std::path::Path;
use std::process::Output;

use mpsched_core::graphs::AppGraph;
use mpsched_core::sim::SimResult;

fn run_bin(args: &[&str]) -> Output {
    std::process::Command::new(env!("CARGO_BIN_EXE_mpsched"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn s(p: &Path) -> String {
    p.to_string_lossy().into_owned()
}

fn sha256(path: &Path) -> String {
    use sha2::{Digest, Sha256};
    let mut hasher = Sha256::new();
    hasher.update(std::fs::read(path).unwrap());
    hex::encode(hasher.finalize())
}

#[test]
fn generate_single_graph_is_deterministic() {
    let tmp = tempfile::tempdir().unwrap();
    let out1 = tmp.path().join("a");
    let out2 = tmp.path().join("b");
    for out in [&out1, &out2] {
        let r = run_bin(&["generate", "--out", &s(out), "--n", "40", "--seed", "7"]);
        assert!(r.status.success());
    }
    let g1 = out1.join("graph_n40.json");
    let g2 = out2.join("graph_n40.json");
    assert_eq!(sha256(&g1), sha256(&g2));
    let app = AppGraph::from_json_str(&std::fs::read_to_string(&g1).unwrap()).unwrap();
    assert_eq!(app.n_tasks(), 40);
}

#[test]
fn generate_corpus_spans_requested_sizes() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("corpus");
    let r = run_bin(&[
        "generate",
        "--out",
        &s(&out),
        "--corpus",
        "10",
        "--min",
        "6",
        "--max",
        "85",
        "--seed",
        "1",
    ]);
    assert!(r.status.success());
    let mut sizes = Vec::new();
    for entry in std::fs::read_dir(&out).unwrap() {
        let path = entry.unwrap().path();
        if path.file_name().unwrap() == "manifest.json" {
            continue;
        }
        let app = AppGraph::from_json_str(&std::fs::read_to_string(&path).unwrap()).unwrap();
        sizes.push(app.n_tasks());
    }
    sizes.sort_unstable();
    assert_eq!(sizes.len(), 10);
    assert_eq!(*sizes.first().unwrap(), 6);
    assert_eq!(*sizes.last().unwrap(), 85);
}

#[test]
fn generate_rejects_zero_tasks_with_exit_code_2() {
    let tmp = tempfile::tempdir().unwrap();
    let r = run_bin(&[
        "generate",
        "--out",
        &s(tmp.path()),
        "--n",
        "0",
        "--seed",
        "1",
    ]);
    assert_eq!(
        r.status.code(),
        Some(2),
        "{}",
        String::from_utf8_lossy(&r.stderr)
    );
}

#[test]
fn generate_requires_seed() {
    let tmp = tempfile::tempdir().unwrap();
    let r = run_bin(&["generate", "--out", &s(tmp.path()), "--n", "5"]);
    assert_eq!(r.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&r.stderr).contains("--seed"));
}

#[test]
fn train_missing_arch_file_names_path() {
    let tmp = tempfile::tempdir().unwrap();
    let graphs = tmp.path().join("g");
    assert!(
        run_bin(&["generate", "--out", &s(&graphs), "--n", "6", "--seed", "2"])
            .status
            .success()
    );
    let r = run_bin(&[
        "train",
        "--out",
        &s(&tmp.path().join("t")),
        "--corpus",
        &s(&graphs),
        "--seed",
        "1",
        "--arch",
        "/nonexistent/arch.json",
        "--pop",
        "4",
        "--generations",
        "1",
    ]);
    assert_eq!(r.status.code(), Some(4));
    assert!(String::from_utf8_lossy(&r.stderr).contains("/nonexistent/arch.json"));
}

// Smoke measurement: a tiny training run completes quickly and emits a
// 625-gene rule base; rerunning the identical command reproduces it.
#[test]
fn train_smoke_budget_and_determinism() {
    let started = std::time::Instant::now();
    let tmp = tempfile::tempdir().unwrap();
    let graphs = tmp.path().join("g");
    assert!(
        run_bin(&["generate", "--out", &s(&graphs), "--n", "6", "--seed", "3"])
            .status
            .success()
    );
    let t1 = tmp.path().join("t1");
    let t2 = tmp.path().join("t2");
    for t in [&t1, &t2] {
        let r = run_bin(&[
            "train",
            "--out",
            &s(t),
            "--corpus",
            &s(&graphs),
            "--seed",
            "5",
            "--pop",
            "20",
            "--generations",
            "10",
            "--jobs",
            "2",
        ]);
        assert!(r.status.success(), "{}", String::from_utf8_lossy(&r.stderr));
    }
    assert_eq!(
        sha256(&t1.join("rulebase.json")),
        sha256(&t2.join("rulebase.json"))
    );
    let rb = mpsched_core::fuzzy::RuleBase::from_json_str(
        &std::fs::read_to_string(t1.join("rulebase.json")).unwrap(),
    )
    .unwrap();
    assert_eq!(rb.rule_count(), 625);
    assert!(
        started.elapsed().as_secs_f64() < 60.0,
        "smoke training exceeded 60 s"
    );
}

fn fixture_run(tmp: &Path) -> (std::path::PathBuf, std::path::PathBuf) {
    let graphs = tmp.join("g");
    assert!(run_bin(&[
        "generate",
        "--out",
        &s(&graphs),
        "--corpus",
        "2",
        "--min",
        "8",
        "--max",
        "12",
        "--seed",
        "9"
    ])
    .status
    .success());
    let train = tmp.join("train");
    assert!(run_bin(&[
        "train",
        "--out",
        &s(&train),
        "--corpus",
        &s(&graphs),
        "--seed",
        "5",
        "--pop",
        "8",
        "--generations",
        "2",
        "--jobs",
        "2",
    ])
    .status
    .success());
    (graphs, train.join("rulebase.json"))
}

#[test]
fn schedule_exports_are_consistent() {
    let tmp = tempfile::tempdir().unwrap();
    let (graphs, rulebase) = fixture_run(tmp.path());
    let app_path = graphs.join("corpus_00_n8.json");
    let out = tmp.path().join("sched");
    let r = run_bin(&[
        "schedule",
        "--out",
        &s(&out),
        "--app",
        &s(&app_path),
        "--rulebase",
        &s(&rulebase),
        "--trace",
    ]);
    assert!(r.status.success(), "{}", String::from_utf8_lossy(&r.stderr));

    // The result parses back and carries all four objectives.
    let result: SimResult =
        serde_json::from_str(&std::fs::read_to_string(out.join("result.json")).unwrap()).unwrap();
    assert!(result.makespan > 0.0);
    assert!(result.avg_power > 0.0);
    assert!(result.avg_temp > 0.0);
    assert!(result.gsfr > 0.0);

    // Gantt rows cover every task exactly once.
    let app = AppGraph::from_json_str(&std::fs::read_to_string(&app_path).unwrap()).unwrap();
    let mut rdr = csv::Reader::from_path(out.join("gantt.csv")).unwrap();
    let tasks: Vec<String> = rdr
        .records()
        .map(|r| r.unwrap().get(0).unwrap().to_string())
        .collect();
    assert_eq!(tasks.len(), app.n_tasks());

    // Trace-integration oracle: summed slice power x dt equals
    // avg_power x makespan.
    let mut rdr = csv::Reader::from_path(out.join("trace.csv")).unwrap();
    let mut energy = 0.0f64;
    let mut prev: std::collections::BTreeMap<String, f64> = Default::default();
    for row in rdr.records() {
        let row = row.unwrap();
        let time: f64 = row.get(0).unwrap().parse().unwrap();
        let core = row.get(1).unwrap().to_string();
        let event = row.get(2).unwrap();
        let power: f64 = row.get(4).unwrap().parse().unwrap();
        match event {
            "init" => {
                prev.insert(core, time);
            }
            "slice" => {
                let p = prev.insert(core, time).expect("init row first");
                energy += power * (time - p);
            }
            _ => {}
        }
    }
    let expect = result.avg_power * result.makespan;
    assert!(
        (energy - expect).abs() / expect.abs() < 1e-6,
        "trace energy {energy} vs {expect}"
    );
}

#[test]
fn schedule_baselines_are_valid_and_random_needs_seed() {
    let tmp = tempfile::tempdir().unwrap();
    let (graphs, _) = fixture_run(tmp.path());
    let app_path = graphs.join("corpus_01_n12.json");

    let r = run_bin(&[
        "schedule",
        "--out",
        &s(&tmp.path().join("eft")),
        "--app",
        &s(&app_path),
        "--policy",
        "greedy-eft",
    ]);
    assert!(r.status.success());

    let r = run_bin(&[
        "schedule",
        "--out",
        &s(&tmp.path().join("rnd")),
        "--app",
        &s(&app_path),
        "--policy",
        "random",
        "--seed",
        "3",
    ]);
    assert!(r.status.success());

    let r = run_bin(&[
        "schedule",
        "--out",
        &s(&tmp.path().join("rnd2")),
        "--app",
        &s(&app_path),
        "--policy",
        "random",
    ]);
    assert_eq!(r.status.code(), Some(2));
}

#[test]
fn evaluate_emits_consistent_tables() {
    let tmp = tempfile::tempdir().unwrap();
    let (graphs, rulebase) = fixture_run(tmp.path());
    let out = tmp.path().join("eval");
    let r = run_bin(&[
        "evaluate",
        "--out",
        &s(&out),
        "--corpus",
        &s(&graphs),
        "--rulebase",
        &s(&rulebase),
        "--policies",
        "fnn",
        "greedy-eft",
        "--seed",
        "4",
    ]);
    assert!(r.status.success(), "{}", String::from_utf8_lossy(&r.stderr));

    // 2 graphs x 2 policies = 4 rows.
    let mut rdr = csv::Reader::from_path(out.join("table.csv")).unwrap();
    let rows: Vec<csv::StringRecord> = rdr.records().map(|r| r.unwrap()).collect();
    assert_eq!(rows.len(), 4);

    // Recomputation oracle: the emitted table matches the stored results.
    for row in &rows {
        let graph = row.get(0).unwrap();
        let policy = row.get(1).unwrap();
        let stored: SimResult = serde_json::from_str(
            &std::fs::read_to_string(out.join(format!("results/{graph}__{policy}.json"))).unwrap(),
        )
        .unwrap();
        let theta: f64 = row.get(2).unwrap().parse().unwrap();
        let power: f64 = row.get(3).unwrap().parse().unwrap();
        let gsfr: f64 = row.get(4).unwrap().parse().unwrap();
        let exec: f64 = row.get(5).unwrap().parse().unwrap();
        assert_eq!(theta, stored.avg_temp);
        assert_eq!(power, stored.avg_power);
        assert_eq!(gsfr, stored.gsfr);
        assert_eq!(exec, stored.makespan);
    }

    // Normalized columns lie in (0, 1] and each graph has a 1.0 per
    // objective.
    let mut rdr = csv::Reader::from_path(out.join("normalized.csv")).unwrap();
    let mut max_per_graph: std::collections::BTreeMap<String, [f64; 4]> = Default::default();
    for row in rdr.records() {
        let row = row.unwrap();
        let graph = row.get(0).unwrap().to_string();
        let entry = max_per_graph.entry(graph).or_insert([0.0; 4]);
        for (k, slot) in entry.iter_mut().enumerate() {
            let v: f64 = row.get(2 + k).unwrap().parse().unwrap();
            assert!(v > 0.0 && v <= 1.0, "normalized value {v} outside (0,1]");
            *slot = slot.max(v);
        }
    }
    assert_eq!(max_per_graph.len(), 2);
    for (graph, maxima) in max_per_graph {
        for (k, m) in maxima.iter().enumerate() {
            assert_eq!(*m, 1.0, "graph {graph} objective {k} max {m} != 1");
        }
    }
}

#[test]
fn evaluate_rerun_from_manifest_is_identical() {
    let tmp = tempfile::tempdir().unwrap();
    let (graphs, rulebase) = fixture_run(tmp.path());
    let e1 = tmp.path().join("e1");
    let r = run_bin(&[
        "evaluate",
        "--out",
        &s(&e1),
        "--corpus",
        &s(&graphs),
        "--rulebase",
        &s(&rulebase),
        "--policies",
        "fnn",
        "random",
        "--seed",
        "8",
    ]);
    assert!(r.status.success());
    let e2 = tmp.path().join("e2");
    let r = run_bin(&[
        "evaluate",
        "--config",
        &s(&e1.join("manifest.json")),
        "--out",
        &s(&e2),
    ]);
    assert!(r.status.success(), "{}", String::from_utf8_lossy(&r.stderr));
    for f in ["table.csv", "normalized.csv"] {
        assert_eq!(sha256(&e1.join(f)), sha256(&e2.join(f)), "{f} differs");
    }
}

#[test]
fn train_exports_parse_back() {
    let tmp = tempfile::tempdir().unwrap();
    let (_, rulebase) = fixture_run(tmp.path());
    let train = rulebase.parent().unwrap();

    // Pareto CSV rows parse, and each genes_file is a loadable rule base.
    let mut rdr = csv::Reader::from_path(train.join("pareto_00.csv")).unwrap();
    let mut rows = 0;
    for row in rdr.records() {
        let row = row.unwrap();
        for k in 0..4 {
            row.get(k).unwrap().parse::<f64>().unwrap();
        }
        let genes_file = train.join(row.get(4).unwrap());
        let rb = mpsched_core::fuzzy::RuleBase::from_json_str(
            &std::fs::read_to_string(genes_file).unwrap(),
        )
        .unwrap();
        assert_eq!(rb.rule_count(), 625);
        rows += 1;
    }
    assert!(rows > 0);

    // Stats CSV parses with one row per generation (initial + iterations).
    let mut rdr = csv::Reader::from_path(train.join("stats_00.csv")).unwrap();
    let stats_rows: Vec<_> = rdr.records().map(|r| r.unwrap()).collect();
    assert_eq!(stats_rows.len(), 3);
    for row in &stats_rows {
        for k in 2..10 {
            row.get(k).unwrap().parse::<f64>().unwrap();
        }
    }
}

#[test]
fn fired_rules_export_parses_back() {
    let tmp = tempfile::tempdir().unwrap();
    let (graphs, rulebase) = fixture_run(tmp.path());
    let out = tmp.path().join("sched");
    assert!(run_bin(&[
        "schedule",
        "--out",
        &s(&out),
        "--app",
        &s(&graphs.join("corpus_00_n8.json")),
        "--rulebase",
        &s(&rulebase),
    ])
    .status
    .success());
    let mut rdr = csv::Reader::from_path(out.join("fired_rules.csv")).unwrap();
    let labels = ["VL", "L", "M", "H", "VH"];
    let mut rows = 0;
    for row in rdr.records() {
        let row = row.unwrap();
        let idx: usize = row.get(0).unwrap().parse().unwrap();
        assert_eq!(idx, rows);
        for k in 1..=4 {
            assert!(labels.contains(&row.get(k).unwrap()));
        }
        row.get(5).unwrap().parse::<f64>().unwrap();
        let mean: f64 = row.get(6).unwrap().parse().unwrap();
        assert!((0.0..=1.0).contains(&mean));
        rows += 1;
    }
    assert_eq!(rows, 625);
}

#[test]
fn checkpoint_resume_reuses_completed_graphs() {
    let tmp = tempfile::tempdir().unwrap();
    let graphs = tmp.path().join("g");
    assert!(run_bin(&[
        "generate",
        "--out",
        &s(&graphs),
        "--corpus",
        "2",
        "--min",
        "6",
        "--max",
        "8",
        "--seed",
        "21"
    ])
    .status
    .success());
    let train = tmp.path().join("t");
    let args = [
        "train",
        "--out",
        &s(&train),
        "--corpus",
        &s(&graphs),
        "--seed",
        "5",
        "--pop",
        "8",
        "--generations",
        "2",
        "--jobs",
        "2",
    ];
    assert!(run_bin(&args).status.success());
    let digest_before = sha256(&train.join("rulebase.json"));

    // Remove the combined artifact but keep checkpoints; the rerun restores
    // from them and reports doing so.
    std::fs::remove_file(train.join("rulebase.json")).unwrap();
    let r = run_bin(&args);
    assert!(r.status.success());
    assert!(String::from_utf8_lossy(&r.stdout).contains("resuming"));
    assert_eq!(sha256(&train.join("rulebase.json")), digest_before);
}
