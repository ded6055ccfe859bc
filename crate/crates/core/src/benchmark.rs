//! Recall / bias benchmark driven by a flat config file.
//!
//! ```text
//! seed = 42
//! alpha = 0.05
//! n_null_samples = 100
//! n_test_samples = 100
//! edge_ranges = 1000-2000, 3000-5000
//! statistics = GED, MS
//! family.skew = sbm n=20 blocks=4 shift=0.05; sbm n=20 blocks=4 shift=0.2
//! use.GED = skew
//! use.MS = skew
//! bias.model = sbm n=20 blocks=2 within=3 cross=1
//! bias.edges = 20, 100
//! bias.trials = 10000
//! ```
//!
//! Each statistic is evaluated on the family named by its `use.` key; the
//! family serves as both the null and the alternative parameter set.

use std::collections::BTreeMap;

use serde::Serialize;

use crate::config::FlatConfig;
use crate::error::{Error, Result};
use crate::stats::StatisticId;
use crate::synthgen::{
    distribution_of, run_bias_suite, run_recall_experiment, stream_rng, BiasRow, EdgeCountRange,
    GeneratorSpec, RecallExperimentSpec, RecallResult,
};

/// The shipped experiment grid.
pub const DEFAULT_CONFIG: &str = include_str!("../configs/benchmark.conf");

#[derive(Debug, Clone, PartialEq)]
pub struct BiasConfig {
    pub model: GeneratorSpec,
    pub edges: Vec<u64>,
    pub trials: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BenchmarkConfig {
    pub seed: u64,
    pub alpha: f64,
    pub n_null_samples: usize,
    pub n_test_samples: usize,
    pub edge_ranges: Vec<EdgeCountRange>,
    pub statistics: Vec<StatisticId>,
    pub families: BTreeMap<String, Vec<GeneratorSpec>>,
    pub family_of: BTreeMap<StatisticId, String>,
    pub bias: Option<BiasConfig>,
}

fn comma_list<T, F>(raw: &str, key: &str, f: F) -> Result<Vec<T>>
where
    F: Fn(&str) -> Result<T>,
{
    let items = raw
        .split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(&f)
        .collect::<Result<Vec<T>>>()
        .map_err(|e| Error::config(format!("{key}: {e}")))?;
    if items.is_empty() {
        return Err(Error::config(format!("{key}: empty list")));
    }
    Ok(items)
}

fn required<T>(v: Option<T>, key: &str) -> Result<T> {
    v.ok_or_else(|| Error::config(format!("missing key `{key}`")))
}

impl BenchmarkConfig {
    pub fn parse(text: &str) -> Result<BenchmarkConfig> {
        Self::from_flat(FlatConfig::parse(text)?)
    }

    pub fn from_flat(mut c: FlatConfig) -> Result<BenchmarkConfig> {
        let seed = c.take::<u64>("seed")?.unwrap_or(42);
        let alpha = c.take::<f64>("alpha")?.unwrap_or(0.05);
        if !(alpha > 0.0 && alpha < 1.0) {
            return Err(Error::config(format!("alpha must be in (0, 1), got {alpha}")));
        }
        let n_null_samples = required(c.take::<usize>("n_null_samples")?, "n_null_samples")?;
        if n_null_samples < 10 {
            return Err(Error::config(format!(
                "n_null_samples must be at least 10, got {n_null_samples}"
            )));
        }
        let n_test_samples = required(c.take::<usize>("n_test_samples")?, "n_test_samples")?;
        if n_test_samples == 0 {
            return Err(Error::config("n_test_samples must be positive"));
        }
        let edge_ranges = comma_list(
            &required(c.take_raw("edge_ranges"), "edge_ranges")?,
            "edge_ranges",
            |s| s.parse(),
        )?;
        let statistics = StatisticId::parse_list(&required(c.take_raw("statistics"), "statistics")?)?;

        let mut families = BTreeMap::new();
        for (name, raw) in c.take_prefixed("family") {
            let models = raw
                .split(';')
                .map(str::trim)
                .filter(|s| !s.is_empty())
                .map(str::parse::<GeneratorSpec>)
                .collect::<Result<Vec<_>>>()
                .map_err(|e| Error::config(format!("family.{name}: {e}")))?;
            if models.is_empty() {
                return Err(Error::config(format!("family.{name}: no models")));
            }
            families.insert(name, models);
        }
        let mut family_of = BTreeMap::new();
        for (stat, name) in c.take_prefixed("use") {
            let id: StatisticId = stat
                .parse()
                .map_err(|e| Error::config(format!("use.{stat}: {e}")))?;
            if !families.contains_key(&name) {
                return Err(Error::config(format!("use.{stat}: unknown family `{name}`")));
            }
            family_of.insert(id, name);
        }
        if let Some(id) = statistics.iter().find(|id| !family_of.contains_key(id)) {
            return Err(Error::config(format!("statistic {id} has no `use.{id}` family")));
        }

        let bias_model = c.take_raw("bias.model");
        let bias_edges = c.take_raw("bias.edges");
        let bias_trials = c.take::<usize>("bias.trials")?;
        let bias = match (bias_model, bias_edges, bias_trials) {
            (None, None, None) => None,
            (Some(m), Some(e), Some(trials)) => {
                if trials < 1000 {
                    return Err(Error::config(format!(
                        "bias.trials must be at least 1000, got {trials}"
                    )));
                }
                Some(BiasConfig {
                    model: m.parse().map_err(|e| Error::config(format!("bias.model: {e}")))?,
                    edges: comma_list(&e, "bias.edges", |s| {
                        s.parse::<u64>()
                            .ok()
                            .filter(|&m| m > 0)
                            .ok_or_else(|| Error::config(format!("`{s}` is not a positive integer")))
                    })?,
                    trials,
                })
            }
            _ => {
                return Err(Error::config(
                    "bias.model, bias.edges and bias.trials must be given together",
                ))
            }
        };
        c.finish()?;
        Ok(BenchmarkConfig {
            seed,
            alpha,
            n_null_samples,
            n_test_samples,
            edge_ranges,
            statistics,
            families,
            family_of,
            bias,
        })
    }

    pub fn experiment(&self, id: StatisticId, range: EdgeCountRange) -> RecallExperimentSpec {
        let family = self.families[&self.family_of[&id]].clone();
        RecallExperimentSpec {
            statistic: id,
            null_family: family.clone(),
            alt_family: family,
            edge_range: range,
            n_null_samples: self.n_null_samples,
            n_test_samples: self.n_test_samples,
            alpha: self.alpha,
            seed: self.seed,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BenchmarkResults {
    pub recall: Vec<RecallResult>,
    pub bias: Vec<BiasRow>,
}

impl BenchmarkResults {
    pub fn recall_of(&self, id: StatisticId, range: EdgeCountRange) -> Option<&RecallResult> {
        self.recall
            .iter()
            .find(|r| r.statistic == id && r.edge_range == range)
    }
}

/// Recall for every statistic × edge range, then the bias suite.
pub fn run_benchmark(cfg: &BenchmarkConfig) -> Result<BenchmarkResults> {
    let mut recall = Vec::new();
    for &id in &cfg.statistics {
        for &range in &cfg.edge_ranges {
            recall.push(run_recall_experiment(&cfg.experiment(id, range))?);
        }
    }
    let bias = match &cfg.bias {
        None => Vec::new(),
        Some(b) => {
            let d = distribution_of(&b.model, &mut stream_rng(cfg.seed, &[0]))?;
            run_bias_suite(&d, &b.edges, b.trials, cfg.seed)?
        }
    };
    Ok(BenchmarkResults { recall, bias })
}

pub fn recall_csv(rows: &[RecallResult]) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["statistic", "edge_lo", "edge_hi", "recall", "stderr", "n"])?;
    for r in rows {
        w.write_record([
            r.statistic.code().to_owned(),
            r.edge_range.lo.to_string(),
            r.edge_range.hi.to_string(),
            r.recall.to_string(),
            r.stderr.to_string(),
            r.n_tests.to_string(),
        ])?;
    }
    into_string(w)
}

pub fn bias_csv(rows: &[BiasRow]) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record([
        "statistic",
        "edges",
        "n_trials",
        "mean",
        "sd",
        "true_value",
        "expected_mean",
    ])?;
    for r in rows {
        w.write_record([
            r.statistic.code().to_owned(),
            r.edges.to_string(),
            r.n_trials.to_string(),
            r.mean.to_string(),
            r.sd.to_string(),
            r.true_value.to_string(),
            r.expected_mean.to_string(),
        ])?;
    }
    into_string(w)
}

fn into_string(w: csv::Writer<Vec<u8>>) -> Result<String> {
    let bytes = w
        .into_inner()
        .map_err(|e| Error::Io(e.into_error()))?;
    Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_config_parses() {
        let cfg = BenchmarkConfig::parse(DEFAULT_CONFIG).unwrap();
        assert_eq!(cfg.seed, 42);
        assert_eq!(cfg.statistics.len(), 6);
        assert_eq!(cfg.edge_ranges.len(), 3);
        assert!(cfg.bias.is_some());
    }

    #[test]
    fn rejects_small_null_and_unknown_keys() {
        let base = "n_null_samples = 2\nn_test_samples = 5\nedge_ranges = 10-20\nstatistics = MS\n\
                    family.f = sbm n=4\nuse.MS = f\n";
        let err = BenchmarkConfig::parse(base).unwrap_err();
        assert!(err.to_string().contains("n_null_samples"));
        let ok = base.replace("n_null_samples = 2", "n_null_samples = 10");
        BenchmarkConfig::parse(&ok).unwrap();
        let err = BenchmarkConfig::parse(&format!("{ok}colour = red\n")).unwrap_err();
        assert!(err.to_string().contains("colour"));
        let err = BenchmarkConfig::parse(&ok.replace("use.MS = f", "use.MS = g")).unwrap_err();
        assert!(err.to_string().contains("unknown family"));
    }

    #[test]
    fn csv_shape() {
        let text = recall_csv(&[RecallResult {
            statistic: StatisticId::Ms,
            edge_range: EdgeCountRange::new(1, 2).unwrap(),
            recall: 0.5,
            stderr: 0.1,
            n_pairs: 1,
            n_tests: 25,
            per_pair: vec![0.5],
        }])
        .unwrap();
        assert_eq!(text, "statistic,edge_lo,edge_hi,recall,stderr,n\nMS,1,2,0.5,0.1,25\n");
    }
}
