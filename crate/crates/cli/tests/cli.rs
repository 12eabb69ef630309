use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use colband::formats::{read_events, read_matrix, read_similarity};
use colband_cli::metrics::{parse_metrics, MetricsRow, METRICS_HEADER, REGRET_HEADER};
use tempfile::TempDir;

fn colband(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_colband"))
        .args(args)
        .env("RUST_LOG", "off")
        .output()
        .expect("binary runs")
}

fn ok(args: &[&str]) -> String {
    let out = colband(args);
    assert!(
        out.status.success(),
        "{args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).unwrap()
}

fn code(args: &[&str]) -> i32 {
    colband(args).status.code().expect("exit code")
}

struct Work {
    dir: TempDir,
}

impl Work {
    fn new() -> Self {
        Self {
            dir: tempfile::tempdir().unwrap(),
        }
    }

    fn p(&self, name: &str) -> PathBuf {
        self.dir.path().join(name)
    }

    fn s(&self, name: &str) -> String {
        self.p(name).to_str().unwrap().to_string()
    }

    fn write(&self, name: &str, text: &str) -> String {
        std::fs::write(self.p(name), text).unwrap();
        self.s(name)
    }

    fn read(&self, name: &str) -> String {
        std::fs::read_to_string(self.p(name)).unwrap()
    }

    fn genlog(&self, name: &str, horizon: usize, clusters: usize, seed: u64) -> String {
        let out = self.s(name);
        ok(&[
            "genlog",
            "--horizon",
            &horizon.to_string(),
            "--clusters",
            &clusters.to_string(),
            "--seed",
            &seed.to_string(),
            "--out",
            &out,
            "--truth-centroids",
            &format!("{out}.centroids"),
        ]);
        out
    }
}

fn metrics(path: &Path) -> Vec<MetricsRow> {
    parse_metrics(&std::fs::read_to_string(path).unwrap(), path).unwrap()
}

fn permutations(n: usize) -> Vec<Vec<usize>> {
    if n == 0 {
        return vec![vec![]];
    }
    let mut out = Vec::new();
    for p in permutations(n - 1) {
        for i in 0..n {
            let mut q = p.clone();
            q.insert(i, n - 1);
            out.push(q);
        }
    }
    out
}

#[test]
fn cluster_recovers_true_centroids() {
    let w = Work::new();
    let log = w.genlog("log.tsv", 3000, 5, 4);
    let cents = w.s("c.csv");
    ok(&[
        "cluster", "--log", &log, "--k", "5", "--seed", "2", "--out", &cents,
    ]);
    let got = read_matrix(std::fs::File::open(&cents).unwrap()).unwrap();
    let truth = read_matrix(std::fs::File::open(format!("{log}.centroids")).unwrap()).unwrap();
    // best assignment over all permutations
    let best = permutations(5)
        .into_iter()
        .map(|perm| {
            (0..5)
                .flat_map(|i| {
                    let (a, b) = (got.row(i).to_vec(), truth.row(perm[i]).to_vec());
                    a.into_iter().zip(b).map(|(x, y)| (x - y).abs())
                })
                .fold(0.0, f64::max)
        })
        .fold(f64::INFINITY, f64::min);
    assert!(best < 1e-6, "{best}");
}

#[test]
fn single_cluster_is_the_mean() {
    let w = Work::new();
    let log = w.genlog("log.tsv", 500, 3, 1);
    ok(&["cluster", "--log", &log, "--k", "1", "--out", &w.s("c.csv")]);
    let c = read_matrix(std::fs::File::open(w.p("c.csv")).unwrap()).unwrap();
    let events = read_events(std::io::BufReader::new(std::fs::File::open(&log).unwrap())).unwrap();
    for j in 0..c.cols() {
        let mean = events.iter().map(|e| e.user_features[j]).sum::<f64>() / events.len() as f64;
        assert!((c.get(0, j) - mean).abs() < 1e-12);
    }
}

#[test]
fn standardized_clustering_writes_and_uses_scaling() {
    let w = Work::new();
    let log = w.genlog("log.tsv", 2000, 4, 6);
    let cents = w.s("c.csv");
    ok(&[
        "cluster",
        "--log",
        &log,
        "--k",
        "4",
        "--standardize",
        "--out",
        &cents,
    ]);
    assert!(w.p("c.csv.scaling").exists());
    ok(&[
        "replay",
        "--log",
        &log,
        "--algo",
        "mlinucb",
        "--centroids",
        &cents,
        "--out",
        &w.s("m.csv"),
    ]);
    ok(&["cluster", "--log", &log, "--k", "4", "--out", &cents]);
    assert!(!w.p("c.csv.scaling").exists());
}

#[test]
fn buildw_reproduces_the_hand_example() {
    let w = Work::new();
    let cents = w.write("c.csv", "4,2\n2,0\n1.5,0\n1,0\n0.5,0\n");
    ok(&[
        "buildw",
        "--centroids",
        &cents,
        "--sparsity",
        "50",
        "--out",
        &w.s("w.csv"),
    ]);
    let sim = read_similarity(std::fs::File::open(w.p("w.csv")).unwrap()).unwrap();
    let col = sim.column(0);
    let want = [4.0 / 7.0, 3.0 / 7.0, 0.0, 0.0];
    for (a, b) in col.iter().zip(want) {
        assert!((a - b).abs() < 1e-15, "{col:?}");
    }
    assert!(ok(&["validate-w", "--w", &w.s("w.csv")]).starts_with("ok: 4x4"));
}

#[test]
fn buildw_full_density_is_stable() {
    let w = Work::new();
    let log = w.genlog("log.tsv", 1000, 6, 2);
    ok(&["cluster", "--log", &log, "--k", "6", "--out", &w.s("c.csv")]);
    ok(&[
        "buildw",
        "--centroids",
        &w.s("c.csv"),
        "--sparsity",
        "100",
        "--out",
        &w.s("w1.csv"),
    ]);
    ok(&[
        "buildw",
        "--centroids",
        &w.s("c.csv"),
        "--sparsity",
        "100",
        "--out",
        &w.s("w2.csv"),
    ]);
    assert_eq!(w.read("w1.csv"), w.read("w2.csv"));
    let sim = read_similarity(std::fs::File::open(w.p("w1.csv")).unwrap()).unwrap();
    for c in 0..sim.m() {
        assert!((sim.column(c).iter().sum::<f64>() - 1.0).abs() < 1e-12);
    }
}

#[test]
fn random_replay_ctr_matches_log_ctr() {
    let w = Work::new();
    let log = w.genlog("log.tsv", 60_000, 4, 9);
    ok(&[
        "replay",
        "--log",
        &log,
        "--algo",
        "random",
        "--seed",
        "5",
        "--out",
        &w.s("r.csv"),
    ]);
    let rows = metrics(&w.p("r.csv"));
    let est = rows.last().unwrap().cumulative_ctr;
    let matched: u64 = rows.iter().map(|r| r.matched).sum();
    let events = read_events(std::io::BufReader::new(std::fs::File::open(&log).unwrap())).unwrap();
    let p = events.iter().map(|e| f64::from(e.click)).sum::<f64>() / events.len() as f64;
    let half = 2.576 * (p * (1.0 - p) / matched as f64).sqrt();
    assert!((est - p).abs() < half, "{est} vs {p} ± {half}");
}

#[test]
fn colin_on_identity_matches_mlinucb_end_to_end() {
    let w = Work::new();
    let log = w.genlog("log.tsv", 20_000, 4, 3);
    ok(&["cluster", "--log", &log, "--k", "4", "--out", &w.s("c.csv")]);
    let ident = w.write("i.csv", "4,4\n1,0,0,0\n0,1,0,0\n0,0,1,0\n0,0,0,1\n");
    let c = w.s("c.csv");
    ok(&[
        "replay",
        "--log",
        &log,
        "--algo",
        "colin",
        "--centroids",
        &c,
        "--w",
        &ident,
        "--bucket",
        "100",
        "--out",
        &w.s("a.csv"),
    ]);
    ok(&[
        "replay",
        "--log",
        &log,
        "--algo",
        "mlinucb",
        "--centroids",
        &c,
        "--bucket",
        "100",
        "--out",
        &w.s("b.csv"),
    ]);
    let a: Vec<f64> = metrics(&w.p("a.csv"))
        .iter()
        .map(|r| r.bucket_ctr)
        .collect();
    let b: Vec<f64> = metrics(&w.p("b.csv"))
        .iter()
        .map(|r| r.bucket_ctr)
        .collect();
    assert!(!a.is_empty());
    assert_eq!(a, b);
}

#[test]
fn empty_log_gives_header_only() {
    let w = Work::new();
    let log = w.write("empty.tsv", "");
    ok(&[
        "replay",
        "--log",
        &log,
        "--algo",
        "linucb",
        "--out",
        &w.s("m.csv"),
    ]);
    assert_eq!(w.read("m.csv"), format!("{METRICS_HEADER}\n"));
}

#[test]
fn malformed_lines_are_skipped_and_counted() {
    let w = Work::new();
    let log = w.genlog("log.tsv", 300, 2, 5);
    let mut text = w.read("log.tsv");
    text.push_str("not an event\n");
    text.push_str("1\tzz\t1\tu:0.1\ta:1,2\n");
    text.push_str("2\ta1\t7\tu:0.1,0.2,0.3,0.4,0.5\ta1:1,0,0,0,0\n");
    let bad = w.write("bad.tsv", &text);
    let _ = log;
    ok(&[
        "replay",
        "--log",
        &bad,
        "--algo",
        "random",
        "--out",
        &w.s("m.csv"),
    ]);
    let meta = w.read("m.csv.meta");
    assert!(meta.contains("skipped=3"), "{meta}");
    ok(&["cluster", "--log", &bad, "--k", "2", "--out", &w.s("c.csv")]);
}

#[test]
fn oracle_simulation_has_no_regret() {
    let w = Work::new();
    ok(&[
        "simulate",
        "--oracle",
        "--horizon",
        "2000",
        "--seed",
        "4",
        "--out",
        &w.s("s.csv"),
    ]);
    let text = w.read("s.csv");
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some(REGRET_HEADER));
    let mut n = 0;
    for l in lines {
        let f: Vec<&str> = l.split(',').collect();
        assert_eq!(f[2], "0");
        n += 1;
    }
    assert_eq!(n, 2000);
}

#[test]
fn simulate_runs_every_learning_policy() {
    let w = Work::new();
    for algo in ["random", "linucb", "mlinucb", "colin", "factorucb"] {
        ok(&[
            "simulate",
            "--algo",
            algo,
            "--latent-dim",
            "2",
            "--env-latent-dim",
            "2",
            "--horizon",
            "500",
            "--out",
            &w.s(&format!("{algo}.csv")),
        ]);
    }
    assert_eq!(
        code(&[
            "simulate",
            "--algo",
            "factorucb",
            "--horizon",
            "5",
            "--out",
            &w.s("x.csv")
        ]),
        2
    );
}

#[test]
fn report_against_itself_is_flat() {
    let w = Work::new();
    let log = w.genlog("log.tsv", 20_000, 3, 8);
    ok(&[
        "replay",
        "--log",
        &log,
        "--algo",
        "random",
        "--bucket",
        "100",
        "--out",
        &w.s("r.csv"),
    ]);
    let summary = ok(&[
        "report",
        "--runs",
        &w.s("r.csv"),
        "--random",
        &w.s("r.csv"),
        "--out",
        &w.s("rep.csv"),
    ]);
    assert_eq!(summary.lines().nth(1), Some("random,1,,,0"));
    for l in w.read("rep.csv").lines().skip(1) {
        assert!(l.ends_with(",1,1"), "{l}");
    }
}

#[test]
fn snapshot_resume_equals_one_long_run() {
    let w = Work::new();
    let log = w.genlog("log.tsv", 4000, 3, 12);
    let text = w.read("log.tsv");
    let lines: Vec<&str> = text.lines().collect();
    let first = w.write("a.tsv", &(lines[..1700].join("\n") + "\n"));
    let second = w.write("b.tsv", &(lines[1700..].join("\n") + "\n"));
    ok(&["cluster", "--log", &log, "--k", "3", "--out", &w.s("c.csv")]);
    ok(&[
        "buildw",
        "--centroids",
        &w.s("c.csv"),
        "--out",
        &w.s("w.csv"),
    ]);
    let common = |log: &str, out: &str| {
        vec![
            "replay".to_string(),
            "--log".into(),
            log.into(),
            "--algo".into(),
            "factorucb".into(),
            "--latent-dim".into(),
            "2".into(),
            "--centroids".into(),
            w.s("c.csv"),
            "--w".into(),
            w.s("w.csv"),
            "--out".into(),
            w.s(out),
        ]
    };
    let run = |v: Vec<String>| ok(&v.iter().map(String::as_str).collect::<Vec<_>>());
    let mut full = common(&log, "full.csv");
    full.extend(["--snapshot-out".into(), w.s("full.snap")]);
    run(full);
    let mut a = common(&first, "a.csv");
    a.extend(["--snapshot-out".into(), w.s("a.snap")]);
    run(a);
    let mut b = common(&second, "b.csv");
    b.extend([
        "--snapshot-in".into(),
        w.s("a.snap"),
        "--snapshot-out".into(),
        w.s("b.snap"),
    ]);
    run(b);
    assert_eq!(w.read("full.snap"), w.read("b.snap"));
}

#[test]
fn config_file_is_overridden_by_flags() {
    let w = Work::new();
    let log = w.genlog("log.tsv", 500, 2, 1);
    let cfg = w.write(
        "run.cfg",
        "# replay settings\nalgo=linucb\nalpha=0.2\nbucket=50\n",
    );
    ok(&[
        "replay",
        "--config",
        &cfg,
        "--log",
        &log,
        "--alpha",
        "0.7",
        "--out",
        &w.s("m.csv"),
    ]);
    let meta = w.read("m.csv.meta");
    assert!(
        meta.contains("algo=linucb") && meta.contains("alpha=0.7"),
        "{meta}"
    );
}

#[test]
fn exit_codes_follow_the_error_kind() {
    let w = Work::new();
    let log = w.genlog("log.tsv", 200, 2, 1);
    // config: colin without W, unknown flag, missing file
    assert_eq!(
        code(&[
            "replay",
            "--log",
            &log,
            "--algo",
            "colin",
            "--out",
            &w.s("m.csv")
        ]),
        2
    );
    assert_eq!(
        code(&["replay", "--log", &log, "--bogus", "--out", &w.s("m.csv")]),
        2
    );
    assert_eq!(
        code(&[
            "replay",
            "--log",
            &w.s("nope.tsv"),
            "--algo",
            "random",
            "--out",
            &w.s("m.csv")
        ]),
        2
    );
    // parse: malformed matrix
    let bad = w.write("bad.csv", "2,2\n1,x\n0,1\n");
    assert_eq!(
        code(&["buildw", "--centroids", &bad, "--out", &w.s("w.csv")]),
        3
    );
    // numeric: columns that do not sum to one, and an all-zero W column
    let skew = w.write("skew.csv", "2,2\n0.5,0\n0.2,1\n");
    assert_eq!(code(&["validate-w", "--w", &skew]), 4);
    let zero = w.write("zero.csv", "2,2\n1,0\n0,0\n");
    assert_eq!(
        code(&["buildw", "--centroids", &zero, "--out", &w.s("w.csv")]),
        4
    );
}

#[test]
fn grid_emits_one_summary_row_per_cell() {
    let w = Work::new();
    let log = w.genlog("log.tsv", 6000, 6, 2);
    ok(&[
        "grid",
        "--log",
        &log,
        "--clusters",
        "3,6",
        "--bucket",
        "100",
        "--window",
        "5",
        "--jobs",
        "2",
        "--out-dir",
        &w.s("g"),
    ]);
    let summary = w.read("g/summary.csv");
    assert_eq!(summary.lines().count(), 1 + 2 * 3 * 2 * 3);
    for l in summary.lines().skip(1) {
        let f: Vec<&str> = l.split(',').collect();
        assert_eq!(f.len(), 5);
        assert!(f[4].parse::<f64>().is_ok(), "{l}");
    }
}
