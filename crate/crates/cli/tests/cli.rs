use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use spectral_labels::load_model;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_spectral-labels"))
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().unwrap()
}

fn ok(args: &[&str]) -> Output {
    let out = run(args);
    assert!(out.status.success(), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
    out
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

struct Synth {
    dir: tempfile::TempDir,
}

impl Synth {
    fn new(k: &str, n: &str, extra: &[&str]) -> Self {
        let dir = tempfile::tempdir().unwrap();
        let (c, t) = (dir.path().join("corpus.txt"), dir.path().join("truth.bin"));
        let mut args = vec!["synth", "--out", s(&c), "--truth", s(&t), "--k", k, "--n", n];
        args.extend_from_slice(extra);
        ok(&args);
        Synth { dir }
    }

    fn path(&self, name: &str) -> PathBuf {
        self.dir.path().join(name)
    }
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn field(report: &str, key: &str) -> f64 {
    report
        .lines()
        .find_map(|l| l.strip_prefix(key).filter(|r| r.starts_with(' ')))
        .unwrap_or_else(|| panic!("no {key} in {report}"))
        .split_whitespace()
        .next()
        .unwrap()
        .parse()
        .unwrap()
}

#[test]
fn zero_topics_is_a_usage_error() {
    let out = run(&["train", "--data", "x", "--model", "y", "--k", "0"]);
    assert_eq!(out.status.code(), Some(2));
    let out = run(&["bounds", "--data", "x", "--k", "0"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn unreadable_and_malformed_data_exit_3() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(&["train", "--data", s(&dir.path().join("missing")), "--model", "m", "--k", "2"]);
    assert_eq!(out.status.code(), Some(3));

    let bad = dir.path().join("bad.txt");
    std::fs::write(&bad, "2 4 2\n0 1:1 2:1\n1 9:1\n").unwrap();
    let out = run(&["train", "--data", s(&bad), "--model", s(&dir.path().join("m")), "--k", "2"]);
    assert_eq!(out.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&out.stderr).contains("line 3"));
}

#[test]
fn rank_deficiency_exits_4_and_names_the_stage() {
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("d.txt");
    let mut text = String::from("20 3 2\n");
    for _ in 0..20 {
        text.push_str("0 0:1 1:1\n");
    }
    std::fs::write(&data, text).unwrap();
    let out = run(&["train", "--data", s(&data), "--model", s(&dir.path().join("m")), "--k", "2"]);
    assert_eq!(out.status.code(), Some(4));
    assert!(String::from_utf8_lossy(&out.stderr).contains("eigendecomposition"));
}

#[test]
fn train_reports_three_passes_and_warns_on_small_n() {
    let sy = Synth::new("3", "6", &["--d", "20", "--l", "5"]);
    let out = run(&["train", "--data", s(&sy.path("corpus.txt")), "--model", s(&sy.path("m.bin")), "--k", "3"]);
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("below K²"), "{err}");

    let sy = Synth::new("3", "3000", &["--d", "30", "--l", "8"]);
    let out = ok(&["train", "--data", s(&sy.path("corpus.txt")), "--model", s(&sy.path("m.bin")), "--k", "3"]);
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("passes over data: 3"), "{err}");
    for stage in ["pass 1", "eigendecomposition", "pass 2", "tensor power method", "pass 3", "sigma_1", "lambda min"] {
        assert!(err.contains(stage), "missing {stage} in {err}");
    }
    assert!(!err.contains("below K²"));
}

#[test]
fn predictions_are_ranked_tsv() {
    let sy = Synth::new("3", "2000", &["--d", "30", "--l", "8"]);
    let (c, m) = (sy.path("corpus.txt"), sy.path("m.bin"));
    ok(&["train", "--data", s(&c), "--model", s(&m), "--k", "3"]);
    let all = stdout(&ok(&["predict", "--data", s(&c), "--model", s(&m)]));
    let lines: Vec<&str> = all.lines().collect();
    assert_eq!(lines.len(), 2000);
    for (i, line) in lines.iter().enumerate() {
        let mut parts = line.split('\t');
        assert_eq!(parts.next().unwrap(), i.to_string());
        let pairs: Vec<(u32, f64)> = parts
            .map(|p| {
                let (l, v) = p.split_once(':').unwrap();
                (l.parse().unwrap(), v.parse().unwrap())
            })
            .collect();
        assert_eq!(pairs.len(), 8);
        assert!(pairs.windows(2).all(|w| w[0].1 >= w[1].1));
        let total: f64 = pairs.iter().map(|p| p.1).sum();
        assert!((total - 1.0).abs() < 1e-4);
        // six significant digits
        assert!(pairs.iter().all(|p| p.1.to_string().trim_start_matches("0.").len() <= 12));
    }
    let out_path = sy.path("pred.tsv");
    ok(&["predict", "--data", s(&c), "--model", s(&m), "--top", "2", "--out", s(&out_path)]);
    let top = std::fs::read_to_string(&out_path).unwrap();
    assert!(top.lines().all(|l| l.split('\t').count() == 3));
    let first: Vec<&str> = top.lines().next().unwrap().split('\t').collect();
    assert_eq!(first[..], lines[0].split('\t').collect::<Vec<_>>()[..3]);
}

#[test]
fn trained_model_ranks_close_to_the_truth() {
    let sy = Synth::new("5", "50000", &["--seed", "42"]);
    let (c, m, t) = (sy.path("corpus.txt"), sy.path("m.bin"), sy.path("truth.bin"));
    ok(&["train", "--data", s(&c), "--model", s(&m), "--k", "5"]);
    let csv = sy.path("eval.csv");
    let trained = stdout(&ok(&["eval", "--data", s(&c), "--model", s(&m), "--out", s(&csv)]));
    let truth = stdout(&ok(&["eval", "--data", s(&c), "--model", s(&t)]));
    assert_eq!(field(&trained, "skipped"), 0.0);
    let (a, b) = (field(&trained, "macro_auc"), field(&truth, "macro_auc"));
    assert!(b - a <= 0.05, "trained {a}, truth {b}");
    assert!(std::fs::read_to_string(&csv).unwrap().starts_with("metric,value\nmacro_auc,"));
}

#[test]
fn single_topic_recovers_word_distribution() {
    // a diffuse topic: with K = 1 the estimate is the top eigenvector of M̂2,
    // whose retained diagonal and deduplicated draws bias peaked topics
    let sy = Synth::new("1", "100000", &["--concentration", "5"]);
    let (c, m) = (sy.path("corpus.txt"), sy.path("m.bin"));
    ok(&["train", "--data", s(&c), "--model", s(&m), "--k", "1"]);
    let read = |p: &Path| load_model(std::fs::File::open(p).unwrap()).unwrap();
    let (model, truth) = (read(&m), read(&sy.path("truth.bin")));
    let l1: f64 = (&model.o - &truth.o).abs().sum();
    assert!(l1 <= 0.05, "L1 distance {l1}");
}

#[test]
fn bounds_report() {
    let sy = Synth::new("3", "5000", &["--d", "30", "--l", "8"]);
    let c = sy.path("corpus.txt");
    let out = stdout(&ok(&["bounds", "--data", s(&c), "--k", "3", "--delta", "0.5"]));
    assert!((field(&out, "eps1") - (1.0 + (2f64.ln() / 2.0).sqrt())).abs() < 1e-5);
    assert_eq!(field(&out, "N"), 5000.0);
    for key in ["mu_bound", "gamma_bound", "pi_bound", "n1", "n2", "n3"] {
        assert!(field(&out, key).is_finite());
    }
    assert!(out.contains("up to constants"));
    for bad in ["0", "1.5"] {
        assert_eq!(run(&["bounds", "--data", s(&c), "--k", "3", "--delta", bad]).status.code(), Some(2));
    }
}

#[test]
fn experiment_writes_csv() {
    let out = stdout(&ok(&[
        "experiment",
        "--k",
        "2",
        "--d",
        "20",
        "--l",
        "4",
        "--concentration",
        "1",
        "--grid",
        "500,2000",
        "--trials",
        "2",
        "--words-per-doc",
        "5",
        "--labels-per-doc",
        "1",
    ]));
    let lines: Vec<&str> = out.lines().collect();
    assert_eq!(lines[0], "N,mu_err,gamma_err,pi_err");
    assert!(lines[1].starts_with("500,") && lines[2].starts_with("2000,"));
}

#[test]
fn runs_are_byte_identical() {
    let sy = Synth::new("4", "4000", &["--d", "40", "--l", "10"]);
    let c = sy.path("corpus.txt");
    let again = Synth::new("4", "4000", &["--d", "40", "--l", "10"]);
    assert_eq!(std::fs::read(&c).unwrap(), std::fs::read(again.path("corpus.txt")).unwrap());
    let mut outputs = Vec::new();
    for run_id in 0..2 {
        let m = sy.path(&format!("m{run_id}.bin"));
        ok(&["train", "--data", s(&c), "--model", s(&m), "--k", "4", "--threads", "1"]);
        let p = stdout(&ok(&["predict", "--data", s(&c), "--model", s(&m), "--threads", "1"]));
        outputs.push((std::fs::read(&m).unwrap(), p));
    }
    assert_eq!(outputs[0], outputs[1]);
}
