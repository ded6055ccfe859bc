use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use dyngraph_anomaly::cli::AttributionReport;
use dyngraph_anomaly::detector::DetectionReport;
use dyngraph_anomaly::stats::StatisticId;
use dyngraph_anomaly::synthgen::{distribution_of, sample_snapshot, stream_rng, GeneratorSpec};
use tempfile::TempDir;

const ANOMALY_T: i64 = 15;

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_dyngraph"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

/// 30 windows of 400 edges from a 2-block model; the window at `ANOMALY_T`
/// comes from a skewed model instead.
fn write_stream(dir: &Path) -> PathBuf {
    let base: GeneratorSpec = "sbm n=20 blocks=2 within=3 cross=1".parse().unwrap();
    let odd: GeneratorSpec = "sbm n=20 blocks=4 shift=0.6".parse().unwrap();
    let mut rng = stream_rng(5, &[]);
    let d_base = distribution_of(&base, &mut rng).unwrap();
    let d_odd = distribution_of(&odd, &mut rng).unwrap();
    let mut text = String::from("# t src dst count\n");
    for t in 0..30i64 {
        let d = if t == ANOMALY_T { &d_odd } else { &d_base };
        let snap = sample_snapshot(d, 400, &mut rng);
        for &(p, c) in snap.edges() {
            writeln!(text, "{t} n{} n{} {c}", p.lo().index(), p.hi().index()).unwrap();
        }
    }
    let path = dir.join("edges.txt");
    std::fs::write(&path, text).unwrap();
    path
}

/// Five windows over four nodes; window 3 adds a heavy triangle on a, b, c.
fn write_triangle_stream(dir: &Path) -> PathBuf {
    let mut text = String::new();
    for t in 0..5 {
        text.push_str(&format!("{t} a b 1\n{t} b c 1\n{t} c d 1\n{t} a d 1\n"));
        if t == 3 {
            text.push_str("3 a b 10\n3 b c 10\n3 a c 10\n");
        }
    }
    let path = dir.join("tri.txt");
    std::fs::write(&path, text).unwrap();
    path
}

#[test]
fn invalid_alpha_is_a_config_error() {
    let dir = TempDir::new().unwrap();
    let input = write_stream(dir.path());
    let o = run(&["detect", "--input", s(&input), "--out", s(dir.path()), "--alpha", "1.5"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("alpha"), "{}", stderr(&o));
}

#[test]
fn missing_input_is_a_config_error() {
    let dir = TempDir::new().unwrap();
    let missing = dir.path().join("nope.txt");
    let o = run(&["detect", "--input", s(&missing), "--out", s(dir.path())]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn empty_input_is_a_data_error() {
    let dir = TempDir::new().unwrap();
    let input = dir.path().join("empty.txt");
    std::fs::write(&input, "# nothing\n").unwrap();
    let o = run(&["detect", "--input", s(&input), "--out", s(dir.path())]);
    assert_eq!(o.status.code(), Some(3), "{}", stderr(&o));
}

#[test]
fn malformed_line_names_its_line() {
    let dir = TempDir::new().unwrap();
    let input = dir.path().join("bad.txt");
    std::fs::write(&input, "0 a b\n1 a\n").unwrap();
    let o = run(&["detect", "--input", s(&input), "--out", s(dir.path())]);
    assert_eq!(o.status.code(), Some(3));
    assert!(stderr(&o).contains('2'), "{}", stderr(&o));
}

#[test]
fn injected_anomaly_is_flagged() {
    let dir = TempDir::new().unwrap();
    let input = write_stream(dir.path());
    let out = dir.path().join("out");
    let o = run(&["detect", "--input", s(&input), "--out", s(&out), "--stats", "MS,DS"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let report: DetectionReport =
        serde_json::from_str(&std::fs::read_to_string(out.join("report.json")).unwrap()).unwrap();
    let ms = report.get(StatisticId::Ms).unwrap();
    let flagged = ms.flagged_times();
    assert!(flagged.contains(&ANOMALY_T), "{flagged:?}");
    assert!(flagged.len() <= 4, "{flagged:?}");

    let timeline = std::fs::read_to_string(out.join("timeline.csv")).unwrap();
    assert!(timeline.starts_with("t,statistic,value,z,flag"));
    assert!(timeline.contains(&format!("{ANOMALY_T},MS,")));
    assert!(timeline.contains("0,MS,,,undefined"), "{timeline}");
}

#[test]
fn detect_is_deterministic_and_json_round_trips() {
    let dir = TempDir::new().unwrap();
    let input = write_stream(dir.path());
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    for out in [&a, &b] {
        let o = run(&["detect", "--input", s(&input), "--out", s(out), "--detrend", "linear"]);
        assert!(o.status.success(), "{}", stderr(&o));
    }
    let ja = std::fs::read_to_string(a.join("report.json")).unwrap();
    assert_eq!(ja, std::fs::read_to_string(b.join("report.json")).unwrap());
    let report: DetectionReport = serde_json::from_str(&ja).unwrap();
    assert_eq!(serde_json::to_string_pretty(&report).unwrap() + "\n", ja);
}

#[test]
fn config_file_and_flag_precedence() {
    let dir = TempDir::new().unwrap();
    let input = write_stream(dir.path());
    let conf = dir.path().join("run.conf");
    std::fs::write(
        &conf,
        format!("input = {}\nstatistics = TP\nalpha = 0.01\nformat = csv\n", s(&input)),
    )
    .unwrap();
    let out = dir.path().join("o");
    let o = run(&["detect", "--config", s(&conf), "--out", s(&out), "--alpha", "0.2"]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(out.join("report.csv").exists());
    let timeline = std::fs::read_to_string(out.join("timeline.csv")).unwrap();
    assert!(timeline.lines().skip(1).all(|l| l.split(',').nth(1) == Some("TP")));

    std::fs::write(&conf, "statistics = TP\nunknown_key = 1\n").unwrap();
    let o = run(&["detect", "--config", s(&conf), "--input", s(&input), "--out", s(&out)]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("unknown_key"), "{}", stderr(&o));
}

#[test]
fn attribute_rejects_unsupported_requests() {
    let dir = TempDir::new().unwrap();
    let input = write_triangle_stream(dir.path());
    let out = s(dir.path());
    let cb = run(&["attribute", "--input", s(&input), "--out", out, "--t", "3", "--stat", "CB"]);
    assert_eq!(cb.status.code(), Some(2));
    let first = run(&["attribute", "--input", s(&input), "--out", out, "--t", "0", "--stat", "MS"]);
    assert_eq!(first.status.code(), Some(2));
    let late = run(&["attribute", "--input", s(&input), "--out", out, "--t", "99", "--stat", "TP"]);
    assert_eq!(late.status.code(), Some(2));
}

#[test]
fn attribute_finds_planted_triangle() {
    let dir = TempDir::new().unwrap();
    let input = write_triangle_stream(dir.path());
    for (stat, target) in [("TP", "0.5"), ("MS", "1.0")] {
        let out = dir.path().join(stat);
        let o = run(&[
            "attribute", "--input", s(&input), "--out", s(&out), "--t", "3", "--stat", stat,
            "--target", target,
        ]);
        assert!(o.status.success(), "{}", stderr(&o));
        let rep: AttributionReport =
            serde_json::from_str(&std::fs::read_to_string(out.join("attribution.json")).unwrap())
                .unwrap();
        let mut labels: Vec<&str> = rep.labels.iter().map(|l| l.label.as_str()).collect();
        labels.sort();
        if stat == "TP" {
            assert_eq!(labels, ["a", "b", "c"]);
        } else {
            assert_eq!(rep.subgraph.covered_fraction, 1.0);
            assert!(rep.subgraph.target_met);
        }
    }
}

fn small_benchmark(dir: &Path) -> PathBuf {
    let conf = dir.join("bench.conf");
    std::fs::write(
        &conf,
        "seed = 3\nalpha = 0.05\nn_null_samples = 20\nn_test_samples = 20\n\
         edge_ranges = 100-200\nstatistics = MS, TP\n\
         family.f = sbm n=10 blocks=2 within=1 cross=1; sbm n=10 blocks=2 within=4 cross=1\n\
         use.MS = f\nuse.TP = f\n\
         bias.model = sbm n=10 blocks=2 within=2 cross=1\nbias.edges = 30\nbias.trials = 1000\n",
    )
    .unwrap();
    conf
}

#[test]
fn benchmark_is_deterministic() {
    let dir = TempDir::new().unwrap();
    let conf = small_benchmark(dir.path());
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    for out in [&a, &b] {
        let o = run(&["benchmark", "--config", s(&conf), "--out", s(out)]);
        assert!(o.status.success(), "{}", stderr(&o));
    }
    for f in ["recall.csv", "bias.csv"] {
        let x = std::fs::read_to_string(a.join(f)).unwrap();
        assert_eq!(x, std::fs::read_to_string(b.join(f)).unwrap());
    }
    let recall = std::fs::read_to_string(a.join("recall.csv")).unwrap();
    assert!(recall.starts_with("statistic,edge_lo,edge_hi,recall,stderr,n"));
    assert_eq!(recall.lines().count(), 3);
}

#[test]
fn benchmark_rejects_tiny_null_sample() {
    let dir = TempDir::new().unwrap();
    let conf = small_benchmark(dir.path());
    let o = run(&[
        "benchmark", "--config", s(&conf), "--out", s(dir.path()), "--n-null-samples", "2",
    ]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("n_null_samples"), "{}", stderr(&o));
}
