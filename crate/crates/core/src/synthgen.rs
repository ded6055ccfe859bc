//! Synthetic multigraph generation and the recall / bias experiments.
//!
//! Graphs are drawn by placing a random number of edges independently on
//! node pairs according to an [`EdgeDistribution`]; repeated draws of the
//! same pair accumulate into its multiplicity. Distributions come from a
//! stochastic blockmodel or from Chung-Lu weights with power-law node
//! weights.
//!
//! All randomness flows from [`stream_rng`]: one ChaCha stream per
//! `(seed, key)` so every trial is reproducible regardless of scheduling.

use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::detector::fit_null;
use crate::error::{Error, Result};
use crate::graph::{DynamicNetwork, EdgeDistribution, Pair, Snapshot};
use crate::stats::{self, StatisticId};

pub type SimRng = ChaCha8Rng;

/// Independent generator for `key` under `seed`.
pub fn stream_rng(seed: u64, key: &[u64]) -> SimRng {
    // splitmix64 fold of the key into a 64-bit stream id
    let mut h = 0x9E37_79B9_7F4A_7C15u64;
    for &k in key {
        h ^= k;
        h = h.wrapping_add(0x9E37_79B9_7F4A_7C15);
        h = (h ^ (h >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
        h = (h ^ (h >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
        h ^= h >> 31;
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(h);
    rng
}

#[derive(Debug, Clone, PartialEq)]
pub struct BlockModelSpec {
    pub n_nodes: usize,
    pub block_of: Vec<usize>,
    /// Symmetric, non-negative block-pair weights.
    pub block_probs: Vec<Vec<f64>>,
}

impl BlockModelSpec {
    /// `n_blocks` contiguous, near-equal blocks with one weight inside
    /// blocks and another across.
    pub fn planted(n_nodes: usize, n_blocks: usize, within: f64, cross: f64) -> Result<Self> {
        if n_blocks == 0 || n_blocks > n_nodes {
            return Err(Error::InvalidSpec(format!(
                "need 1..={n_nodes} blocks, got {n_blocks}"
            )));
        }
        let block_of = (0..n_nodes).map(|i| i * n_blocks / n_nodes).collect();
        let block_probs = (0..n_blocks)
            .map(|a| (0..n_blocks).map(|b| if a == b { within } else { cross }).collect())
            .collect();
        let spec = BlockModelSpec {
            n_nodes,
            block_of,
            block_probs,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn n_blocks(&self) -> usize {
        self.block_probs.len()
    }

    fn validate(&self) -> Result<()> {
        let k = self.n_blocks();
        if self.n_nodes < 2 {
            return Err(Error::InvalidSpec("a blockmodel needs at least 2 nodes".into()));
        }
        if self.block_of.len() != self.n_nodes {
            return Err(Error::InvalidSpec(format!(
                "block assignment covers {} nodes, expected {}",
                self.block_of.len(),
                self.n_nodes
            )));
        }
        if let Some(&b) = self.block_of.iter().find(|&&b| b >= k) {
            return Err(Error::InvalidSpec(format!("block {b} out of range for {k} blocks")));
        }
        for (a, row) in self.block_probs.iter().enumerate() {
            if row.len() != k {
                return Err(Error::InvalidSpec("block weight matrix is not square".into()));
            }
            for (b, &w) in row.iter().enumerate() {
                if !w.is_finite() || w < 0.0 {
                    return Err(Error::InvalidSpec(format!("block weight [{a}][{b}] = {w}")));
                }
                if w != self.block_probs[b][a] {
                    return Err(Error::InvalidSpec("block weight matrix is not symmetric".into()));
                }
            }
        }
        Ok(())
    }

    fn pair_counts(&self) -> Vec<Vec<f64>> {
        let k = self.n_blocks();
        let mut size = vec![0usize; k];
        for &b in &self.block_of {
            size[b] += 1;
        }
        (0..k)
            .map(|a| {
                (0..k)
                    .map(|b| {
                        if a == b {
                            (size[a] * size[a].saturating_sub(1) / 2) as f64
                        } else {
                            (size[a] * size[b]) as f64
                        }
                    })
                    .collect()
            })
            .collect()
    }

    /// Raises the weight inside block 0 so that a fraction `shift` of the
    /// total mass moves onto block-0 pairs: the new distribution equals
    /// `(1 - shift) P + shift U_0` with `U_0` uniform on those pairs.
    pub fn with_block0_shift(mut self, shift: f64) -> Result<Self> {
        if !(0.0..1.0).contains(&shift) {
            return Err(Error::InvalidSpec(format!("shift must be in [0, 1), got {shift}")));
        }
        if shift == 0.0 {
            return Ok(self);
        }
        let counts = self.pair_counts();
        let k = self.n_blocks();
        let mut inside = 0.0;
        let mut rest = 0.0;
        for a in 0..k {
            for b in a..k {
                let w = self.block_probs[a][b] * counts[a][b];
                if a == 0 && b == 0 {
                    inside += w;
                } else {
                    rest += w;
                }
            }
        }
        if counts[0][0] == 0.0 || rest <= 0.0 {
            return Err(Error::InvalidSpec(
                "block 0 shift needs block 0 pairs and mass elsewhere".into(),
            ));
        }
        let m0 = inside / (inside + rest);
        let target = (1.0 - shift) * m0 + shift;
        self.block_probs[0][0] = target * rest / (1.0 - target) / counts[0][0];
        Ok(self)
    }

    pub fn distribution(&self) -> Result<EdgeDistribution> {
        self.validate()?;
        let n = self.n_nodes;
        let mut weights = Vec::with_capacity(n * (n - 1) / 2);
        for i in 0..n {
            for j in i + 1..n {
                let w = self.block_probs[self.block_of[i]][self.block_of[j]];
                if w > 0.0 {
                    weights.push((Pair::of(i, j).expect("i < j"), w));
                }
            }
        }
        if weights.is_empty() {
            return Err(Error::InvalidSpec("block weights put no mass on any pair".into()));
        }
        EdgeDistribution::from_weights(n, weights)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PowerLawSpec {
    pub n_nodes: usize,
    pub exponent: f64,
    pub min_degree_weight: f64,
}

impl PowerLawSpec {
    /// Node weights by inverse-CDF of a continuous power law with lower
    /// cutoff, then Chung-Lu pair weights `w_i w_j`.
    pub fn distribution(&self, rng: &mut SimRng) -> Result<EdgeDistribution> {
        if self.n_nodes < 2 {
            return Err(Error::InvalidSpec("a power-law graph needs at least 2 nodes".into()));
        }
        if !(self.exponent > 1.0) || !self.exponent.is_finite() {
            return Err(Error::InvalidSpec(format!(
                "power-law exponent must exceed 1, got {}",
                self.exponent
            )));
        }
        if !(self.min_degree_weight > 0.0) || !self.min_degree_weight.is_finite() {
            return Err(Error::InvalidSpec(format!(
                "minimum degree weight must be positive, got {}",
                self.min_degree_weight
            )));
        }
        let inv = -1.0 / (self.exponent - 1.0);
        let w: Vec<f64> = (0..self.n_nodes)
            .map(|_| {
                let u: f64 = rng.gen();
                self.min_degree_weight * (1.0 - u).powf(inv)
            })
            .collect();
        let n = self.n_nodes;
        let pairs = (0..n).flat_map(|i| (i + 1..n).map(move |j| (i, j)));
        EdgeDistribution::from_weights(
            n,
            pairs.map(|(i, j)| (Pair::of(i, j).expect("i < j"), w[i] * w[j])),
        )
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum GeneratorSpec {
    BlockModel(BlockModelSpec),
    PowerLaw(PowerLawSpec),
}

impl GeneratorSpec {
    pub fn n_nodes(&self) -> usize {
        match self {
            GeneratorSpec::BlockModel(s) => s.n_nodes,
            GeneratorSpec::PowerLaw(s) => s.n_nodes,
        }
    }
}

/// Edge distribution of a generator. Blockmodels ignore `rng`.
pub fn distribution_of(spec: &GeneratorSpec, rng: &mut SimRng) -> Result<EdgeDistribution> {
    match spec {
        GeneratorSpec::BlockModel(s) => s.distribution(),
        GeneratorSpec::PowerLaw(s) => s.distribution(rng),
    }
}

/// Text form: `sbm n=20 blocks=4 within=1 cross=1 [shift=0.05]` or
/// `powerlaw n=20 exponent=2.3 [wmin=1]`.
impl FromStr for GeneratorSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let mut words = s.split_whitespace();
        let kind = words
            .next()
            .ok_or_else(|| Error::config("empty model description"))?;
        let mut params = std::collections::BTreeMap::new();
        for w in words {
            let (k, v) = w
                .split_once('=')
                .ok_or_else(|| Error::config(format!("model parameter `{w}` is not key=value")))?;
            let v: f64 = v
                .parse()
                .map_err(|_| Error::config(format!("model parameter `{k}`: `{v}` is not a number")))?;
            params.insert(k.to_owned(), v);
        }
        let mut take = |key: &str, default: Option<f64>| {
            params
                .remove(key)
                .or(default)
                .ok_or_else(|| Error::config(format!("model `{kind}` is missing `{key}`")))
        };
        let as_count = |v: f64, key: &str| {
            if v >= 1.0 && v.fract() == 0.0 {
                Ok(v as usize)
            } else {
                Err(Error::config(format!("model parameter `{key}` must be a positive integer")))
            }
        };
        let spec = match kind {
            "sbm" => {
                let n = as_count(take("n", None)?, "n")?;
                let blocks = as_count(take("blocks", Some(1.0))?, "blocks")?;
                let within = take("within", Some(1.0))?;
                let cross = take("cross", Some(1.0))?;
                let shift = take("shift", Some(0.0))?;
                GeneratorSpec::BlockModel(
                    BlockModelSpec::planted(n, blocks, within, cross)?.with_block0_shift(shift)?,
                )
            }
            "powerlaw" => GeneratorSpec::PowerLaw(PowerLawSpec {
                n_nodes: as_count(take("n", None)?, "n")?,
                exponent: take("exponent", None)?,
                min_degree_weight: take("wmin", Some(1.0))?,
            }),
            other => {
                return Err(Error::config(format!(
                    "unknown model kind `{other}` (expected sbm or powerlaw)"
                )))
            }
        };
        if let Some(k) = params.keys().next() {
            return Err(Error::config(format!("model `{kind}`: unknown parameter `{k}`")));
        }
        Ok(spec)
    }
}

/// Categorical sampler over the support of a distribution by binary search
/// on cumulative weights.
#[derive(Debug, Clone)]
pub struct EdgeSampler {
    n_nodes: usize,
    pairs: Vec<Pair>,
    cumulative: Vec<f64>,
}

impl EdgeSampler {
    pub fn new(d: &EdgeDistribution) -> EdgeSampler {
        let mut acc = 0.0;
        let mut pairs = Vec::with_capacity(d.probs().len());
        let mut cumulative = Vec::with_capacity(d.probs().len());
        for &(p, w) in d.probs() {
            acc += w;
            pairs.push(p);
            cumulative.push(acc);
        }
        EdgeSampler {
            n_nodes: d.n_nodes(),
            pairs,
            cumulative,
        }
    }

    /// Snapshot with exactly `m` edges placed independently.
    pub fn sample(&self, t: i64, m: u64, rng: &mut SimRng) -> Snapshot {
        let total = *self.cumulative.last().expect("non-empty distribution");
        let last = self.pairs.len() - 1;
        let mut counts = vec![0u64; self.pairs.len()];
        for _ in 0..m {
            let u = rng.gen::<f64>() * total;
            let idx = self.cumulative.partition_point(|&c| c <= u).min(last);
            counts[idx] += 1;
        }
        let edges = self
            .pairs
            .iter()
            .zip(counts)
            .filter(|&(_, c)| c > 0)
            .map(|(&p, c)| (p, c))
            .collect();
        Snapshot::from_sorted(t, self.n_nodes, edges)
    }
}

pub fn sample_snapshot(d: &EdgeDistribution, m: u64, rng: &mut SimRng) -> Snapshot {
    EdgeSampler::new(d).sample(0, m, rng)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct EdgeCountRange {
    pub lo: u64,
    pub hi: u64,
}

impl EdgeCountRange {
    pub fn new(lo: u64, hi: u64) -> Result<Self> {
        if lo == 0 || lo > hi {
            return Err(Error::config(format!("invalid edge range {lo}-{hi}")));
        }
        Ok(EdgeCountRange { lo, hi })
    }

    pub fn draw(&self, rng: &mut SimRng) -> u64 {
        rng.gen_range(self.lo..=self.hi)
    }
}

impl fmt::Display for EdgeCountRange {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}-{}", self.lo, self.hi)
    }
}

impl FromStr for EdgeCountRange {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let (a, b) = s
            .trim()
            .split_once('-')
            .ok_or_else(|| Error::config(format!("edge range `{s}` is not lo-hi")))?;
        let parse = |x: &str| {
            x.trim()
                .parse::<u64>()
                .map_err(|_| Error::config(format!("edge range `{s}`: `{x}` is not an integer")))
        };
        EdgeCountRange::new(parse(a)?, parse(b)?)
    }
}

/// A stream of `steps` snapshots from one distribution with edge counts
/// drawn uniformly from `range`.
pub fn generate_stream(
    d: &EdgeDistribution,
    range: EdgeCountRange,
    steps: usize,
    rng: &mut SimRng,
) -> Result<DynamicNetwork> {
    let sampler = EdgeSampler::new(d);
    let snaps = (0..steps)
        .map(|t| {
            let m = range.draw(rng);
            sampler.sample(t as i64, m, rng)
        })
        .collect();
    DynamicNetwork::new(d.n_nodes(), snaps)
}

#[derive(Debug, Clone)]
pub struct RecallExperimentSpec {
    pub statistic: StatisticId,
    pub null_family: Vec<GeneratorSpec>,
    pub alt_family: Vec<GeneratorSpec>,
    pub edge_range: EdgeCountRange,
    pub n_null_samples: usize,
    pub n_test_samples: usize,
    pub alpha: f64,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RecallResult {
    pub statistic: StatisticId,
    pub edge_range: EdgeCountRange,
    pub recall: f64,
    /// Binomial standard error over all test decisions.
    pub stderr: f64,
    pub n_pairs: usize,
    pub n_tests: usize,
    pub per_pair: Vec<f64>,
}

const DIST_KEY: u64 = 1;
const TRIAL_KEY: u64 = 2;
const BIAS_KEY: u64 = 3;

/// Model pairs `(null, alt)` that differ; when every combination is the same
/// model (a calibration run) the identical pairs are used.
fn model_pairs(spec: &RecallExperimentSpec) -> Vec<(usize, usize)> {
    let all: Vec<(usize, usize)> = (0..spec.null_family.len())
        .flat_map(|i| (0..spec.alt_family.len()).map(move |j| (i, j)))
        .collect();
    let distinct: Vec<(usize, usize)> = all
        .iter()
        .copied()
        .filter(|&(i, j)| spec.null_family[i] != spec.alt_family[j])
        .collect();
    if distinct.is_empty() {
        all
    } else {
        distinct
    }
}

/// One statistic value from freshly drawn graphs. Delta statistics compare a
/// graph from `first` with a graph from `second`.
fn draw_statistic(
    id: StatisticId,
    first: &EdgeSampler,
    second: &EdgeSampler,
    range: EdgeCountRange,
    rng: &mut SimRng,
) -> Result<f64> {
    if id.is_delta() {
        let m_prev = range.draw(rng);
        let prev = first.sample(0, m_prev, rng);
        let m_cur = range.draw(rng);
        let cur = second.sample(1, m_cur, rng);
        stats::evaluate(id, &cur, Some(&prev))
    } else {
        let m = range.draw(rng);
        stats::evaluate(id, &second.sample(0, m, rng), None)
    }
}

/// Every model of a family draws its random parameters from the same seeded
/// stream, so models differ only by their parameters.
fn family_samplers(family: &[GeneratorSpec], seed: u64) -> Result<Vec<EdgeSampler>> {
    family
        .iter()
        .map(|g| {
            let mut rng = stream_rng(seed, &[DIST_KEY]);
            distribution_of(g, &mut rng).map(|d| EdgeSampler::new(&d))
        })
        .collect()
}

pub fn run_recall_experiment(spec: &RecallExperimentSpec) -> Result<RecallResult> {
    if spec.n_null_samples < 10 {
        return Err(Error::config(format!(
            "n_null_samples must be at least 10, got {}",
            spec.n_null_samples
        )));
    }
    if spec.n_test_samples == 0 {
        return Err(Error::config("n_test_samples must be positive"));
    }
    if spec.null_family.is_empty() || spec.alt_family.is_empty() {
        return Err(Error::config("model families must be non-empty"));
    }
    if !(spec.alpha > 0.0 && spec.alpha < 1.0) {
        return Err(Error::config(format!("alpha must be in (0, 1), got {}", spec.alpha)));
    }
    let n_nodes = spec.null_family[0].n_nodes();
    if spec
        .null_family
        .iter()
        .chain(&spec.alt_family)
        .any(|g| g.n_nodes() != n_nodes)
    {
        return Err(Error::config("all models of an experiment must share the node count"));
    }
    let null_samplers = family_samplers(&spec.null_family, spec.seed)?;
    let alt_samplers = family_samplers(&spec.alt_family, spec.seed)?;
    let id = spec.statistic;

    let per_pair = model_pairs(spec)
        .into_iter()
        .enumerate()
        .map(|(k, (i, j))| {
            let null_s = &null_samplers[i];
            let alt_s = &alt_samplers[j];
            let null_values = (0..spec.n_null_samples)
                .into_par_iter()
                .map(|s| {
                    let mut rng = stream_rng(spec.seed, &[TRIAL_KEY, k as u64, 0, s as u64]);
                    draw_statistic(id, null_s, null_s, spec.edge_range, &mut rng)
                })
                .collect::<Result<Vec<f64>>>()?;
            let null = fit_null(&null_values, spec.alpha).map_err(|e| e.into_error(id))?;
            let rejected = (0..spec.n_test_samples)
                .into_par_iter()
                .map(|s| {
                    let mut rng = stream_rng(spec.seed, &[TRIAL_KEY, k as u64, 1, s as u64]);
                    draw_statistic(id, null_s, alt_s, spec.edge_range, &mut rng)
                        .map(|v| null.rejects(v) as usize)
                })
                .collect::<Result<Vec<usize>>>()?
                .into_iter()
                .sum::<usize>();
            Ok(rejected as f64 / spec.n_test_samples as f64)
        })
        .collect::<Result<Vec<f64>>>()?;

    let recall = per_pair.iter().sum::<f64>() / per_pair.len() as f64;
    let n_tests = per_pair.len() * spec.n_test_samples;
    Ok(RecallResult {
        statistic: id,
        edge_range: spec.edge_range,
        recall,
        stderr: (recall * (1.0 - recall) / n_tests as f64).sqrt(),
        n_pairs: per_pair.len(),
        n_tests,
        per_pair,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BiasRow {
    pub statistic: StatisticId,
    pub edges: u64,
    pub n_trials: usize,
    pub mean: f64,
    pub sd: f64,
    /// Value of the statistic on the true distribution.
    pub true_value: f64,
    /// Analytic expectation of the estimator at this edge count.
    pub expected_mean: f64,
}

impl BiasRow {
    pub fn standard_error(&self) -> f64 {
        self.sd / (self.n_trials as f64).sqrt()
    }
}

pub const BIAS_SUITE_STATISTICS: [StatisticId; 5] = [
    StatisticId::Ms,
    StatisticId::MsCorrected,
    StatisticId::Ds,
    StatisticId::DsCorrected,
    StatisticId::Tp,
];

fn mean_sd(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}

/// Monte-Carlo moments of the density-consistent estimators when both
/// snapshots are independent draws of `edges` edges from `d`.
pub fn run_bias_suite(
    d: &EdgeDistribution,
    edge_counts: &[u64],
    n_trials: usize,
    seed: u64,
) -> Result<Vec<BiasRow>> {
    if n_trials < 1000 {
        return Err(Error::config(format!(
            "bias suite needs at least 1000 trials, got {n_trials}"
        )));
    }
    if edge_counts.is_empty() || edge_counts.contains(&0) {
        return Err(Error::config("bias suite edge counts must be positive"));
    }
    let sampler = EdgeSampler::new(d);
    let pair_var: f64 = d.probs().iter().map(|&(_, p)| p * (1.0 - p)).sum();
    let node_var: f64 = d
        .probabilistic_degrees()
        .into_iter()
        .map(|pd| pd * (1.0 - pd))
        .sum();
    let tp = stats::triangle_probability(d);

    let mut rows = Vec::new();
    for (ci, &m) in edge_counts.iter().enumerate() {
        let samples = (0..n_trials)
            .into_par_iter()
            .map(|trial| {
                let mut rng = stream_rng(seed, &[BIAS_KEY, ci as u64, trial as u64]);
                let prev = sampler.sample(0, m, &mut rng);
                let cur = sampler.sample(1, m, &mut rng);
                BIAS_SUITE_STATISTICS
                    .iter()
                    .map(|&id| stats::evaluate(id, &cur, Some(&prev)))
                    .collect::<Result<Vec<f64>>>()
            })
            .collect::<Result<Vec<Vec<f64>>>>()?;
        for (k, &id) in BIAS_SUITE_STATISTICS.iter().enumerate() {
            let values: Vec<f64> = samples.iter().map(|row| row[k]).collect();
            let (mean, sd) = mean_sd(&values);
            let (true_value, expected_mean) = match id {
                StatisticId::Ms => (0.0, 2.0 * pair_var / m as f64),
                StatisticId::Ds => (0.0, 2.0 * node_var / m as f64),
                StatisticId::Tp => (tp, tp),
                _ => (0.0, 0.0),
            };
            rows.push(BiasRow {
                statistic: id,
                edges: m,
                n_trials,
                mean,
                sd,
                true_value,
                expected_mean,
            });
        }
    }
    Ok(rows)
}
