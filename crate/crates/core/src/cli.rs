//! Command-line front end: `detect`, `attribute`, `benchmark`.
//!
//! Settings come from an optional flat config file (`--config`) and are then
//! overridden by any command-line flag that is given. Files are written into
//! the `--out` directory, which is created if missing.

use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde::{Deserialize, Serialize};

use crate::attribution::{
    decompose, extract_subgraph, AnomalySubgraph, DEFAULT_MAX_ELEMENTS, DEFAULT_TARGET_FRACTION,
};
use crate::benchmark::{bias_csv, recall_csv, run_benchmark, BenchmarkConfig, DEFAULT_CONFIG};
use crate::config::FlatConfig;
use crate::detector::{detect, DetectionReport, DetectorConfig, NullPolicy, PointResult};
use crate::error::{Error, Result};
use crate::graph::{DynamicNetwork, NodeId};
use crate::ingest::load_network;
use crate::stats::StatisticId;

#[derive(Debug, Parser)]
#[command(name = "dyngraph", version, about = "Anomaly detection for dynamic multigraph streams")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Score every time step and flag anomalies.
    Detect(DetectArgs),
    /// Extract the subgraph responsible for an anomaly at one time step.
    Attribute(AttributeArgs),
    /// Run the synthetic recall and bias experiments.
    Benchmark(BenchmarkArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OutputFormat {
    Json,
    Csv,
}

impl std::str::FromStr for OutputFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "json" => Ok(OutputFormat::Json),
            "csv" => Ok(OutputFormat::Csv),
            other => Err(Error::config(format!("format: expected json|csv, got `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, Args)]
pub struct InputArgs {
    /// Edge list: `timestamp src dst [count]` per line.
    #[arg(long)]
    pub input: Option<PathBuf>,
    /// Window width in timestamp units.
    #[arg(long)]
    pub window: Option<String>,
    /// Node universe size (at least the number of distinct labels).
    #[arg(long)]
    pub nodes: Option<String>,
    /// Flat key=value settings file; flags take precedence.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long)]
    pub format: Option<String>,
}

#[derive(Debug, Clone, Args)]
pub struct DetectArgs {
    #[command(flatten)]
    pub io: InputArgs,
    #[arg(long)]
    pub alpha: Option<String>,
    /// Comma list of GED,DD,CB,MS,MSC,DS,DSC,TP.
    #[arg(long)]
    pub stats: Option<String>,
    /// none | linear
    #[arg(long)]
    pub detrend: Option<String>,
    /// loo | learning:<t1>..<t2>
    #[arg(long)]
    pub null: Option<String>,
    /// error | skip
    #[arg(long = "empty-snapshots")]
    pub empty_snapshots: Option<String>,
}

#[derive(Debug, Clone, Args)]
pub struct AttributeArgs {
    #[command(flatten)]
    pub io: InputArgs,
    #[arg(long)]
    pub t: Option<String>,
    /// MS, DS or TP.
    #[arg(long)]
    pub stat: Option<String>,
    /// Fraction of the total score the subgraph must cover.
    #[arg(long)]
    pub target: Option<String>,
    #[arg(long = "max-elements")]
    pub max_elements: Option<String>,
}

#[derive(Debug, Clone, Args)]
pub struct BenchmarkArgs {
    /// Experiment file; the shipped grid is used when absent.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long)]
    pub format: Option<String>,
    #[arg(long)]
    pub seed: Option<String>,
    #[arg(long)]
    pub alpha: Option<String>,
    #[arg(long)]
    pub stats: Option<String>,
    #[arg(long = "n-null-samples")]
    pub n_null_samples: Option<String>,
    #[arg(long = "n-test-samples")]
    pub n_test_samples: Option<String>,
}

fn read_text(path: &Path, what: &str) -> Result<String> {
    fs::read_to_string(path).map_err(|e| match e.kind() {
        std::io::ErrorKind::NotFound => {
            Error::config(format!("{what} `{}` does not exist", path.display()))
        }
        _ => Error::Io(e),
    })
}

fn load_flat(path: Option<&Path>) -> Result<FlatConfig> {
    match path {
        Some(p) => FlatConfig::parse(&read_text(p, "config file")?),
        None => Ok(FlatConfig::default()),
    }
}

fn apply(c: &mut FlatConfig, key: &str, flag: &Option<String>) {
    if let Some(v) = flag {
        c.set(key, v.clone());
    }
}

/// Input, windowing and output settings shared by `detect` and `attribute`.
#[derive(Debug, Clone)]
struct IoSettings {
    input: PathBuf,
    window: i64,
    nodes: Option<usize>,
    out: PathBuf,
    format: OutputFormat,
}

fn io_settings(c: &mut FlatConfig, io: &InputArgs) -> Result<IoSettings> {
    if let Some(p) = &io.input {
        c.set("input", p.to_string_lossy());
    }
    if let Some(p) = &io.out {
        c.set("out", p.to_string_lossy());
    }
    apply(c, "window", &io.window);
    apply(c, "nodes", &io.nodes);
    apply(c, "format", &io.format);
    let input = c
        .take_raw("input")
        .map(PathBuf::from)
        .ok_or_else(|| Error::config("no input given (`--input` or `input =`)"))?;
    if !input.is_file() {
        return Err(Error::config(format!("input `{}` is not a readable file", input.display())));
    }
    Ok(IoSettings {
        input,
        window: c.take("window")?.unwrap_or(1),
        nodes: c.take("nodes")?,
        out: c.take_raw("out").map(PathBuf::from).unwrap_or_else(|| PathBuf::from(".")),
        format: c.take("format")?.unwrap_or(OutputFormat::Json),
    })
}

fn load(io: &IoSettings) -> Result<DynamicNetwork> {
    let text = read_text(&io.input, "input")?;
    Ok(load_network(&text, io.window, io.nodes)?.network)
}

fn write_out(dir: &Path, name: &str, contents: &str) -> Result<PathBuf> {
    fs::create_dir_all(dir)?;
    let path = dir.join(name);
    fs::write(&path, contents)?;
    Ok(path)
}

pub fn detector_config(c: &mut FlatConfig) -> Result<DetectorConfig> {
    let d = DetectorConfig::default();
    let cfg = DetectorConfig {
        alpha: c.take("alpha")?.unwrap_or(d.alpha),
        statistics: match c.take_raw("statistics") {
            Some(s) => StatisticId::parse_list(&s)?,
            None => d.statistics,
        },
        null_policy: match c.take_raw("null") {
            Some(s) => NullPolicy::parse(&s)?,
            None => d.null_policy,
        },
        detrend: c.take("detrend")?.unwrap_or(d.detrend),
        empty_snapshot_policy: c.take("empty_snapshots")?.unwrap_or(d.empty_snapshot_policy),
    };
    cfg.validate()?;
    Ok(cfg)
}

/// Pretty JSON with a trailing newline.
pub fn to_json<T: Serialize>(value: &T) -> Result<String> {
    let mut s = serde_json::to_string_pretty(value)?;
    s.push('\n');
    Ok(s)
}

fn csv_string(build: impl FnOnce(&mut csv::Writer<Vec<u8>>) -> csv::Result<()>) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    build(&mut w)?;
    let bytes = w.into_inner().map_err(|e| Error::Io(e.into_error()))?;
    Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
}

/// Plot-ready rows: `t, statistic, value, z, flag`. Unscored points carry
/// their status in the flag column.
pub fn timeline_csv(report: &DetectionReport) -> Result<String> {
    csv_string(|w| {
        w.write_record(["t", "statistic", "value", "z", "flag"])?;
        for sr in &report.statistics {
            for p in &sr.points {
                let code = sr.statistic.code();
                match p {
                    PointResult::Scored {
                        t, raw, z, flagged, ..
                    } => w.write_record([
                        t.to_string(),
                        code.to_owned(),
                        raw.to_string(),
                        z.to_string(),
                        u8::from(*flagged).to_string(),
                    ])?,
                    PointResult::Skipped { t } => {
                        w.write_record([&t.to_string(), code, "", "", "skipped"])?
                    }
                    PointResult::Undefined { t } => {
                        w.write_record([&t.to_string(), code, "", "", "undefined"])?
                    }
                }
            }
        }
        Ok(())
    })
}

/// Full per-point table, the CSV form of the report.
pub fn report_csv(report: &DetectionReport) -> Result<String> {
    csv_string(|w| {
        w.write_record([
            "statistic", "t", "status", "raw", "detrended", "z", "phi_lower", "phi_upper", "flagged",
        ])?;
        for sr in &report.statistics {
            let code = sr.statistic.code();
            for p in &sr.points {
                match p {
                    PointResult::Scored {
                        t,
                        raw,
                        detrended,
                        z,
                        phi_lower,
                        phi_upper,
                        flagged,
                    } => w.write_record([
                        code.to_owned(),
                        t.to_string(),
                        "scored".to_owned(),
                        raw.to_string(),
                        detrended.to_string(),
                        z.to_string(),
                        phi_lower.to_string(),
                        phi_upper.to_string(),
                        flagged.to_string(),
                    ])?,
                    PointResult::Skipped { t } => {
                        w.write_record([code, &t.to_string(), "skipped", "", "", "", "", "", ""])?
                    }
                    PointResult::Undefined { t } => {
                        w.write_record([code, &t.to_string(), "undefined", "", "", "", "", "", ""])?
                    }
                }
            }
        }
        Ok(())
    })
}

pub fn cmd_detect(args: &DetectArgs) -> Result<Vec<PathBuf>> {
    let mut c = load_flat(args.io.config.as_deref())?;
    apply(&mut c, "alpha", &args.alpha);
    apply(&mut c, "statistics", &args.stats);
    apply(&mut c, "detrend", &args.detrend);
    apply(&mut c, "null", &args.null);
    apply(&mut c, "empty_snapshots", &args.empty_snapshots);
    let io = io_settings(&mut c, &args.io)?;
    let cfg = detector_config(&mut c)?;
    c.finish()?;

    let net = load(&io)?;
    let report = detect(&net, &cfg)?;
    let report_file = match io.format {
        OutputFormat::Json => write_out(&io.out, "report.json", &to_json(&report)?)?,
        OutputFormat::Csv => write_out(&io.out, "report.csv", &report_csv(&report)?)?,
    };
    let timeline = write_out(&io.out, "timeline.csv", &timeline_csv(&report)?)?;
    Ok(vec![report_file, timeline])
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NodeLabel {
    pub id: NodeId,
    pub label: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AttributionReport {
    pub subgraph: AnomalySubgraph,
    /// Labels of the subgraph's nodes, in node order.
    pub labels: Vec<NodeLabel>,
}

pub fn cmd_attribute(args: &AttributeArgs) -> Result<Vec<PathBuf>> {
    let mut c = load_flat(args.io.config.as_deref())?;
    apply(&mut c, "t", &args.t);
    apply(&mut c, "statistic", &args.stat);
    apply(&mut c, "target", &args.target);
    apply(&mut c, "max_elements", &args.max_elements);
    let io = io_settings(&mut c, &args.io)?;
    let t: i64 = c
        .take("t")?
        .ok_or_else(|| Error::config("no time step given (`--t` or `t =`)"))?;
    let id: StatisticId = c
        .take("statistic")?
        .ok_or_else(|| Error::config("no statistic given (`--stat` or `statistic =`)"))?;
    let target = c.take("target")?.unwrap_or(DEFAULT_TARGET_FRACTION);
    let max_elements = c.take("max_elements")?.unwrap_or(DEFAULT_MAX_ELEMENTS);
    c.finish()?;

    let net = load(&io)?;
    let cm = decompose(id, &net, t)?;
    let subgraph = extract_subgraph(&cm, &net, target, max_elements)?;
    let labels = subgraph
        .nodes
        .iter()
        .map(|&id| NodeLabel {
            id,
            label: net.label(id),
        })
        .collect();
    let report = AttributionReport { subgraph, labels };
    let path = match io.format {
        OutputFormat::Json => write_out(&io.out, "attribution.json", &to_json(&report)?)?,
        OutputFormat::Csv => {
            let text = csv_string(|w| {
                w.write_record(["element", "labels", "score"])?;
                for (e, s) in &report.subgraph.contributing_elements {
                    let (name, labels) = match e {
                        crate::attribution::Element::Node(n) => (n.to_string(), net.label(*n)),
                        crate::attribution::Element::Pair(p) => (
                            p.to_string(),
                            format!("{}-{}", net.label(p.lo()), net.label(p.hi())),
                        ),
                    };
                    w.write_record([name, labels, s.to_string()])?;
                }
                Ok(())
            })?;
            write_out(&io.out, "attribution.csv", &text)?
        }
    };
    Ok(vec![path])
}

pub fn cmd_benchmark(args: &BenchmarkArgs) -> Result<Vec<PathBuf>> {
    let mut c = match &args.config {
        Some(p) => FlatConfig::parse(&read_text(p, "config file")?)?,
        None => FlatConfig::parse(DEFAULT_CONFIG)?,
    };
    apply(&mut c, "seed", &args.seed);
    apply(&mut c, "alpha", &args.alpha);
    apply(&mut c, "statistics", &args.stats);
    apply(&mut c, "n_null_samples", &args.n_null_samples);
    apply(&mut c, "n_test_samples", &args.n_test_samples);
    apply(&mut c, "format", &args.format);
    if let Some(p) = &args.out {
        c.set("out", p.to_string_lossy());
    }
    let out = c.take_raw("out").map(PathBuf::from).unwrap_or_else(|| PathBuf::from("."));
    let format = c.take("format")?.unwrap_or(OutputFormat::Csv);
    let cfg = BenchmarkConfig::from_flat(c)?;

    let results = run_benchmark(&cfg)?;
    match format {
        OutputFormat::Csv => Ok(vec![
            write_out(&out, "recall.csv", &recall_csv(&results.recall)?)?,
            write_out(&out, "bias.csv", &bias_csv(&results.bias)?)?,
        ]),
        OutputFormat::Json => Ok(vec![write_out(&out, "benchmark.json", &to_json(&results)?)?]),
    }
}

pub fn run(cli: &Cli) -> Result<Vec<PathBuf>> {
    match &cli.command {
        Command::Detect(a) => cmd_detect(a),
        Command::Attribute(a) => cmd_attribute(a),
        Command::Benchmark(a) => cmd_benchmark(a),
    }
}
