use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use instsel::io::{load_clustering, read_index_list, save_clustering, save_features, save_labels};
use instsel::{Clustering, FeatureSet};
use serde_json::Value;

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_instsel"))
        .args(args)
        .env_remove("RAZOR_WORKERS")
        .output()
        .unwrap()
}

fn ok(args: &[&str]) -> Output {
    let out = run(args);
    assert!(
        out.status.success(),
        "{args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    out
}

fn code(args: &[&str]) -> i32 {
    run(args).status.code().unwrap()
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn json(p: &Path) -> Value {
    serde_json::from_slice(&std::fs::read(p).unwrap()).unwrap()
}

/// Two tight blobs of `per` points each in 8-D with opposite feature profiles.
fn two_blobs(dir: &Path, per: usize) -> PathBuf {
    let mut rows = Vec::new();
    for b in 0..2 {
        for i in 0..per {
            let row = (0..8)
                .map(|j| {
                    let base = if b == 0 {
                        j as f64
                    } else {
                        (7 - j) as f64 * 2.0 + 5.0
                    };
                    base + 0.05 * ((i * 8 + j) as f64 * 0.91).sin()
                })
                .collect();
            rows.push(row);
        }
    }
    let p = dir.join("blobs.csv");
    save_features(&FeatureSet::from_rows(&rows).unwrap(), &p).unwrap();
    p
}

#[test]
fn synth_writes_dataset_and_is_repeatable() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a");
    let b = dir.path().join("b");
    for d in [&a, &b] {
        ok(&[
            "synth",
            "--nc",
            "5",
            "--ns",
            "10",
            "--m",
            "3",
            "--mu",
            "0.01",
            "--seed",
            "1",
            "--out",
            s(d),
        ]);
    }
    let fs: FeatureSet = instsel::io::load_features(a.join("features.csv")).unwrap();
    assert_eq!((fs.n(), fs.m()), (50, 3));
    for f in ["features.csv", "labels.csv"] {
        assert_eq!(
            std::fs::read(a.join(f)).unwrap(),
            std::fs::read(b.join(f)).unwrap()
        );
    }
    let m = json(&a.join("manifest.json"));
    assert_eq!(m["command"], "synth");
    assert_eq!(m["outputs"].as_array().unwrap().len(), 2);
}

#[test]
fn synth_rejects_negative_mu() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("x");
    assert_eq!(
        code(&[
            "synth",
            "--nc",
            "5",
            "--ns",
            "10",
            "--m",
            "3",
            "--mu",
            "-1",
            "--out",
            s(&out)
        ]),
        2
    );
}

#[test]
fn cluster_two_blobs() {
    let dir = tempfile::tempdir().unwrap();
    let input = two_blobs(dir.path(), 30);
    let out = dir.path().join("c");
    ok(&["cluster", "--input", s(&input), "--out", s(&out)]);
    let c: Clustering<f64> = load_clustering(out.join("clustering.json")).unwrap();
    assert_eq!(c.len(), 2);
    let trace = json(&out.join("trace.json"));
    assert!(trace["records"].as_array().unwrap().len() <= 10);
    let m = json(&out.join("manifest.json"));
    assert_eq!(m["inputs"][0]["sha256"].as_str().unwrap().len(), 64);
}

#[test]
fn cluster_output_independent_of_workers() {
    let dir = tempfile::tempdir().unwrap();
    ok(&[
        "synth",
        "--nc",
        "12",
        "--ns",
        "40",
        "--m",
        "16",
        "--mu",
        "0.01",
        "--seed",
        "3",
        "--out",
        s(&dir.path().join("d")),
    ]);
    let input = dir.path().join("d/features.csv");
    let mut bytes = Vec::new();
    for w in ["1", "4"] {
        let out = dir.path().join(format!("w{w}"));
        ok(&[
            "cluster",
            "--input",
            s(&input),
            "--workers",
            w,
            "--out",
            s(&out),
        ]);
        bytes.push(std::fs::read(out.join("clustering.json")).unwrap());
    }
    assert_eq!(bytes[0], bytes[1]);
}

#[test]
fn workers_default_comes_from_environment() {
    let dir = tempfile::tempdir().unwrap();
    let input = two_blobs(dir.path(), 10);
    let out = dir.path().join("c");
    let st = Command::new(env!("CARGO_BIN_EXE_instsel"))
        .args(["cluster", "--input", s(&input), "--out", s(&out)])
        .env("RAZOR_WORKERS", "3")
        .status()
        .unwrap();
    assert!(st.success());
    assert_eq!(json(&out.join("manifest.json"))["config"]["workers"], 3);
}

#[test]
fn cluster_error_codes() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("c");
    assert_eq!(code(&["cluster", "--out", s(&out)]), 2);
    assert_eq!(
        code(&[
            "cluster",
            "--input",
            s(&dir.path().join("missing.csv")),
            "--out",
            s(&out)
        ]),
        2
    );
    let bad = dir.path().join("bad.csv");
    std::fs::write(&bad, "1,2\n3,inf\n").unwrap();
    assert_eq!(code(&["cluster", "--input", s(&bad), "--out", s(&out)]), 3);
    let input = two_blobs(dir.path(), 5);
    assert_eq!(
        code(&[
            "cluster",
            "--input",
            s(&input),
            "--set",
            "epsilon=2",
            "--out",
            s(&out)
        ]),
        2
    );
    assert_eq!(
        code(&[
            "cluster",
            "--input",
            s(&input),
            "--set",
            "nonsense",
            "--out",
            s(&out)
        ]),
        2
    );
}

#[test]
fn config_file_and_overrides_reach_the_manifest() {
    let dir = tempfile::tempdir().unwrap();
    let input = two_blobs(dir.path(), 10);
    let cfg = dir.path().join("run.cfg");
    std::fs::write(&cfg, "seed = 9\nmax_iter = 4\n").unwrap();
    let out = dir.path().join("c");
    ok(&[
        "cluster",
        "--input",
        s(&input),
        "--config",
        s(&cfg),
        "--set",
        "max_iter=3",
        "--out",
        s(&out),
    ]);
    let m = json(&out.join("manifest.json"));
    assert_eq!(m["config"]["seed"], 9);
    assert_eq!(m["config"]["max_iter"], 3);
}

#[test]
fn select_single_cluster_fifteen_percent() {
    let dir = tempfile::tempdir().unwrap();
    let rows: Vec<Vec<f64>> = (0..100)
        .map(|i| vec![(i as f64 * 0.7).sin(), (i as f64 * 1.3).cos()])
        .collect();
    let fs = FeatureSet::from_rows(&rows).unwrap();
    let input = dir.path().join("x.csv");
    save_features(&fs, &input).unwrap();
    let cpath = dir.path().join("one.json");
    save_clustering(
        &Clustering::from_groups(vec![(0..100).collect()], &fs),
        &cpath,
    )
    .unwrap();
    let out = dir.path().join("s");
    ok(&[
        "select",
        "--input",
        s(&input),
        "--clustering",
        s(&cpath),
        "--tau",
        "0.15",
        "--out",
        s(&out),
    ]);
    assert_eq!(
        read_index_list(out.join("selection.idx")).unwrap().len(),
        15
    );
}

#[test]
fn select_counts_match_ceiling_sum() {
    let dir = tempfile::tempdir().unwrap();
    ok(&[
        "synth",
        "--nc",
        "7",
        "--ns",
        "23",
        "--m",
        "8",
        "--mu",
        "0.02",
        "--seed",
        "4",
        "--out",
        s(&dir.path().join("d")),
    ]);
    let input = dir.path().join("d/features.csv");
    let out = dir.path().join("s");
    ok(&[
        "select",
        "--input",
        s(&input),
        "--tau",
        "0.1",
        "--out",
        s(&out),
    ]);
    let c: Clustering<f64> = load_clustering(out.join("clustering.json")).unwrap();
    let want: usize = c.sizes().iter().map(|&n| n.div_ceil(10)).sum();
    assert_eq!(
        read_index_list(out.join("selection.idx")).unwrap().len(),
        want
    );
}

#[test]
fn select_rejects_tau_out_of_range() {
    let dir = tempfile::tempdir().unwrap();
    let input = two_blobs(dir.path(), 5);
    let out = dir.path().join("s");
    for t in ["0", "1.5", "-0.1"] {
        assert_eq!(
            code(&["select", "--input", s(&input), "--tau", t, "--out", s(&out)]),
            2,
            "tau {t}"
        );
    }
}

#[test]
fn per_label_selections_stay_inside_labels() {
    let dir = tempfile::tempdir().unwrap();
    let input = two_blobs(dir.path(), 20);
    // Labels cut across the blobs on purpose.
    let labels: Vec<usize> = (0..40).map(|i| i % 2).collect();
    let lpath = dir.path().join("labels.csv");
    save_labels(&labels, &lpath).unwrap();
    let out = dir.path().join("s");
    ok(&[
        "select",
        "--input",
        s(&input),
        "--per-label",
        s(&lpath),
        "--tau",
        "0.2",
        "--out",
        s(&out),
    ]);
    let report = json(&out.join("per_label.json"));
    let mut union = Vec::new();
    for entry in report.as_array().unwrap() {
        let l = entry["label"].as_u64().unwrap() as usize;
        for i in entry["selected"].as_array().unwrap() {
            let i = i.as_u64().unwrap() as usize;
            assert_eq!(labels[i], l);
            union.push(i);
        }
    }
    union.sort_unstable();
    assert_eq!(union, read_index_list(out.join("selection.idx")).unwrap());
    let c: Clustering<f64> = load_clustering(out.join("clustering.json")).unwrap();
    assert!(c.clusters.iter().all(|cl| cl
        .members
        .iter()
        .all(|&i| labels[i] == labels[cl.members[0]])));
}

#[test]
fn per_label_length_mismatch_is_data_error() {
    let dir = tempfile::tempdir().unwrap();
    let input = two_blobs(dir.path(), 5);
    let lpath = dir.path().join("labels.csv");
    save_labels(&[0, 1, 0], &lpath).unwrap();
    let out = dir.path().join("s");
    assert_eq!(
        code(&[
            "select",
            "--input",
            s(&input),
            "--per-label",
            s(&lpath),
            "--out",
            s(&out)
        ]),
        3
    );
}

#[test]
fn eval_modes() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a.csv");
    let b = dir.path().join("b.csv");
    save_labels(&[0, 0, 1, 1, 2], &a).unwrap();
    let out = ok(&["eval", "--mode", "ami", "--pred", s(&a), "--truth", s(&a)]);
    let v: Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(v["ami"], 1.0);

    save_labels(&[0, 0, 1, 1], &a).unwrap();
    save_labels(&[0, 1, 1, 1], &b).unwrap();
    let out = ok(&["eval", "--mode", "seg", "--pred", s(&a), "--truth", s(&b)]);
    let v: Value = serde_json::from_slice(&out.stdout).unwrap();
    let c1 = v["per_class"]
        .as_array()
        .unwrap()
        .iter()
        .find(|c| c["class"] == 1)
        .unwrap();
    assert_eq!(c1["iou"].as_f64().unwrap(), 2.0 / 3.0);

    save_labels(&[0, 0, 0, 1], &b).unwrap();
    save_labels(&[0, 1, 1], &a).unwrap();
    assert_eq!(
        code(&["eval", "--mode", "ami", "--pred", s(&a), "--truth", s(&b)]),
        3
    );
    assert_eq!(code(&["eval", "--mode", "ami", "--truth", s(&b)]), 2);
}

#[test]
fn eval_balance_at_full_selection() {
    let dir = tempfile::tempdir().unwrap();
    ok(&[
        "synth",
        "--nc",
        "3",
        "--ns",
        "10",
        "--m",
        "4",
        "--mu",
        "0.01",
        "--out",
        s(&dir.path().join("d")),
    ]);
    let input = dir.path().join("d/features.csv");
    let out = dir.path().join("s");
    ok(&[
        "select",
        "--input",
        s(&input),
        "--tau",
        "1",
        "--out",
        s(&out),
    ]);
    let r = ok(&[
        "eval",
        "--mode",
        "balance",
        "--selection",
        s(&out.join("selection.json")),
        "--truth",
        s(&dir.path().join("d/labels.csv")),
    ]);
    let v: Value = serde_json::from_slice(&r.stdout).unwrap();
    assert_eq!(v["std"], 0.0);
    assert_eq!(v["mean"], 1.0);
}

#[test]
fn bench_grid_rows() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("b");
    ok(&[
        "bench",
        "--nc",
        "10",
        "--ns",
        "20",
        "--m",
        "8,64",
        "--out",
        s(&out),
    ]);
    let text = std::fs::read_to_string(out.join("bench.csv")).unwrap();
    let rows: Vec<&str> = text.lines().skip(1).collect();
    assert_eq!(rows.len(), 2);
    let ami: Vec<f64> = rows
        .iter()
        .map(|r| r.split(',').nth(5).unwrap().parse().unwrap())
        .collect();
    assert!(ami[1] >= ami[0] - 0.02, "{ami:?}");
}
