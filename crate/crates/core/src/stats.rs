//! Network statistics for anomaly detection.
//!
//! Two families are provided. The density-dependent baselines, graph edit
//! distance ([`ged`]), degree distribution difference ([`degree_dist_diff`])
//! and Barrat weighted clustering ([`barrat_clustering`]), operate on raw
//! edge counts. The density-consistent statistics, mass shift
//! ([`mass_shift`]), probabilistic degree shift ([`degree_shift`]) and
//! triangle probability ([`triangle_probability`]), operate on edge
//! distributions: given true distributions they are the true values, given
//! empirical distributions `p̂_ij = e_ij / |E|` they are the estimators.
//!
//! The corrected estimators subtract an unbiased estimate of the sampling
//! bias. For a pair probability, `E[p̂(1-p̂)] = p(1-p)(|E|-1)/|E|`, hence
//! the `|E| - 1` denominators in [`mass_shift_corrected`]. Node degrees
//! `D_i` are `Binomial(|E|, PD_i)`, so [`degree_shift_corrected`] uses the
//! node-level variance `PD̂_i(1-PD̂_i)/(|E|-1)` rather than a sum of per-pair
//! variances, which would ignore the negative covariance between pairs that
//! share a node.

use std::fmt;
use std::str::FromStr;

use itertools::{EitherOrBoth, Itertools};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{DynamicNetwork, EdgeDistribution, NodeId, Pair, Snapshot};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum StatisticId {
    #[serde(rename = "GED")]
    Ged,
    #[serde(rename = "DD")]
    Dd,
    #[serde(rename = "CB")]
    Cb,
    #[serde(rename = "MS")]
    Ms,
    #[serde(rename = "MSC")]
    MsCorrected,
    #[serde(rename = "DS")]
    Ds,
    #[serde(rename = "DSC")]
    DsCorrected,
    #[serde(rename = "TP")]
    Tp,
}

impl StatisticId {
    pub const ALL: [StatisticId; 8] = [
        StatisticId::Ged,
        StatisticId::Dd,
        StatisticId::Cb,
        StatisticId::Ms,
        StatisticId::MsCorrected,
        StatisticId::Ds,
        StatisticId::DsCorrected,
        StatisticId::Tp,
    ];

    /// Delta statistics compare snapshot `t` with `t - 1`.
    pub fn is_delta(self) -> bool {
        !matches!(self, StatisticId::Cb | StatisticId::Tp)
    }

    pub fn is_density_consistent(self) -> bool {
        !matches!(self, StatisticId::Ged | StatisticId::Dd | StatisticId::Cb)
    }

    /// Whether the statistic is computed on empirical distributions and so
    /// needs non-empty snapshots.
    pub fn needs_edges(self) -> bool {
        self.is_density_consistent()
    }

    pub fn code(self) -> &'static str {
        match self {
            StatisticId::Ged => "GED",
            StatisticId::Dd => "DD",
            StatisticId::Cb => "CB",
            StatisticId::Ms => "MS",
            StatisticId::MsCorrected => "MSC",
            StatisticId::Ds => "DS",
            StatisticId::DsCorrected => "DSC",
            StatisticId::Tp => "TP",
        }
    }

    /// Parses a comma-separated list, e.g. `GED,MS,TP`.
    pub fn parse_list(s: &str) -> Result<Vec<StatisticId>> {
        let mut out = Vec::new();
        for part in s.split(',').map(str::trim).filter(|p| !p.is_empty()) {
            let id: StatisticId = part.parse()?;
            if !out.contains(&id) {
                out.push(id);
            }
        }
        if out.is_empty() {
            return Err(Error::config("statistic list is empty"));
        }
        Ok(out)
    }
}

impl fmt::Display for StatisticId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.code())
    }
}

impl FromStr for StatisticId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s.trim().to_ascii_uppercase().as_str() {
            "GED" => StatisticId::Ged,
            "DD" => StatisticId::Dd,
            "CB" => StatisticId::Cb,
            "MS" => StatisticId::Ms,
            "MSC" | "MS_CORRECTED" => StatisticId::MsCorrected,
            "DS" => StatisticId::Ds,
            "DSC" | "DS_CORRECTED" => StatisticId::DsCorrected,
            "TP" => StatisticId::Tp,
            other => {
                return Err(Error::config(format!(
                    "unknown statistic `{other}` (expected one of GED,DD,CB,MS,MSC,DS,DSC,TP)"
                )))
            }
        })
    }
}

fn check_same_universe(a: usize, b: usize) -> Result<()> {
    if a != b {
        return Err(Error::Incompatible { left: a, right: b });
    }
    Ok(())
}

/// Walks the union of two sorted supports.
fn union_support<'a, A: Copy + 'a, B: Copy + 'a>(
    a: &'a [(Pair, A)],
    b: &'a [(Pair, B)],
) -> impl Iterator<Item = EitherOrBoth<A, B>> + 'a {
    a.iter()
        .merge_join_by(b.iter(), |x, y| x.0.cmp(&y.0))
        .map(|e| e.map_any(|x| x.1, |y| y.1))
}

/// Graph edit distance with a fixed node universe:
/// `|E_t| + |E_{t-1}| - 2 |E_t ∩ E_{t-1}|` with multiset intersection,
/// which equals `Σ_{i<j} |e_ij,t - e_ij,t-1|`.
pub fn ged(s_t: &Snapshot, s_prev: &Snapshot) -> Result<u64> {
    check_same_universe(s_t.n_nodes(), s_prev.n_nodes())?;
    Ok(union_support(s_t.edges(), s_prev.edges())
        .map(|e| match e {
            EitherOrBoth::Both(a, b) => a.abs_diff(b),
            EitherOrBoth::Left(a) => a,
            EitherOrBoth::Right(b) => b,
        })
        .sum())
}

fn degree_histogram(s: &Snapshot) -> Vec<i64> {
    let degrees = s.degrees();
    let max = degrees.iter().copied().max().unwrap_or(0) as usize;
    let mut hist = vec![0i64; max + 1];
    for d in degrees {
        hist[d as usize] += 1;
    }
    hist
}

/// Squared difference of degree histograms over degrees `1..=max`.
/// Isolated nodes are not counted.
pub fn degree_dist_diff(s_t: &Snapshot, s_prev: &Snapshot) -> Result<u64> {
    check_same_universe(s_t.n_nodes(), s_prev.n_nodes())?;
    let h_t = degree_histogram(s_t);
    let h_prev = degree_histogram(s_prev);
    let max = h_t.len().max(h_prev.len());
    Ok((1..max)
        .map(|k| {
            let d = h_t.get(k).copied().unwrap_or(0) - h_prev.get(k).copied().unwrap_or(0);
            (d * d) as u64
        })
        .sum())
}

/// Calls `f(i, j, k, w_ij, w_ik, w_jk)` once for every triangle `i < j < k`
/// of the support, by intersecting forward adjacency lists.
fn for_each_triangle<W, F>(n_nodes: usize, pairs: &[(Pair, W)], mut f: F)
where
    W: Copy,
    F: FnMut(NodeId, NodeId, NodeId, W, W, W),
{
    let mut forward: Vec<Vec<(NodeId, W)>> = vec![Vec::new(); n_nodes];
    // pairs are sorted by (lo, hi), so each list comes out sorted by hi
    for &(p, w) in pairs {
        forward[p.lo().index()].push((p.hi(), w));
    }
    for &(p, w_ij) in pairs {
        let (i, j) = (p.lo(), p.hi());
        let a = &forward[i.index()];
        let b = &forward[j.index()];
        // neighbours of i beyond j
        let start = a.partition_point(|&(n, _)| n <= j);
        let (mut x, mut y) = (start, 0);
        while x < a.len() && y < b.len() {
            match a[x].0.cmp(&b[y].0) {
                std::cmp::Ordering::Less => x += 1,
                std::cmp::Ordering::Greater => y += 1,
                std::cmp::Ordering::Equal => {
                    f(i, j, a[x].0, w_ij, a[x].1, b[y].1);
                    x += 1;
                    y += 1;
                }
            }
        }
    }
}

/// Barrat weighted clustering averaged over all `N` nodes of the universe.
///
/// Per node, `c_i = 1/((k_i - 1) s_i) Σ_{j≠k} (e_ij + e_ik)/2 · a_ij a_ik a_jk`
/// over ordered neighbour pairs; nodes with `k_i < 2` contribute 0.
pub fn barrat_clustering(s: &Snapshot) -> f64 {
    let n = s.n_nodes();
    if n == 0 {
        return 0.0;
    }
    let mut binary_degree = vec![0u64; n];
    for &(p, _) in s.edges() {
        binary_degree[p.lo().index()] += 1;
        binary_degree[p.hi().index()] += 1;
    }
    let strength = s.degrees();
    // Σ over ordered pairs of (e_ij + e_ik)/2 equals Σ over unordered pairs of (e_ij + e_ik).
    let mut numer = vec![0.0f64; n];
    for_each_triangle(n, s.edges(), |i, j, k, e_ij, e_ik, e_jk| {
        numer[i.index()] += (e_ij + e_ik) as f64;
        numer[j.index()] += (e_ij + e_jk) as f64;
        numer[k.index()] += (e_ik + e_jk) as f64;
    });
    let total: f64 = (0..n)
        .filter(|&i| binary_degree[i] >= 2)
        .map(|i| numer[i] / ((binary_degree[i] - 1) as f64 * strength[i] as f64))
        .sum();
    total / n as f64
}

/// `Σ_{i<j} (p_ij,t - p_ij,t-1)^2`.
pub fn mass_shift(d_t: &EdgeDistribution, d_prev: &EdgeDistribution) -> Result<f64> {
    check_same_universe(d_t.n_nodes(), d_prev.n_nodes())?;
    Ok(union_support(d_t.probs(), d_prev.probs())
        .map(|e| {
            let (a, b) = e.or(0.0, 0.0);
            (a - b) * (a - b)
        })
        .sum())
}

/// Unbiased estimate of `Σ p(1-p) / |E|` from one snapshot.
fn pair_variance_term(s: &Snapshot) -> Result<f64> {
    let d = EdgeDistribution::empirical(s)?;
    let m = s.edge_count();
    if m < 2 {
        // a single edge gives p̂ = 1 on its pair, so the term vanishes
        return Ok(0.0);
    }
    let sum: f64 = d.probs().iter().map(|&(_, p)| p * (1.0 - p)).sum();
    Ok(sum / (m - 1) as f64)
}

/// Unbiased estimate of `Σ_i PD_i(1-PD_i) / |E|` from one snapshot.
fn node_variance_term(s: &Snapshot) -> Result<f64> {
    let d = EdgeDistribution::empirical(s)?;
    let m = s.edge_count();
    if m < 2 {
        return Ok(0.0);
    }
    let sum: f64 = d
        .probabilistic_degrees()
        .into_iter()
        .map(|pd| pd * (1.0 - pd))
        .sum();
    Ok(sum / (m - 1) as f64)
}

/// Empirical mass shift minus the estimated sampling bias of both snapshots.
pub fn mass_shift_corrected(s_t: &Snapshot, s_prev: &Snapshot) -> Result<f64> {
    check_same_universe(s_t.n_nodes(), s_prev.n_nodes())?;
    let raw = mass_shift(
        &EdgeDistribution::empirical(s_t)?,
        &EdgeDistribution::empirical(s_prev)?,
    )?;
    Ok(raw - pair_variance_term(s_t)? - pair_variance_term(s_prev)?)
}

/// `Σ_i (PD_t(i) - PD_{t-1}(i))^2`.
pub fn degree_shift(d_t: &EdgeDistribution, d_prev: &EdgeDistribution) -> Result<f64> {
    check_same_universe(d_t.n_nodes(), d_prev.n_nodes())?;
    Ok(d_t
        .probabilistic_degrees()
        .into_iter()
        .zip(d_prev.probabilistic_degrees())
        .map(|(a, b)| (a - b) * (a - b))
        .sum())
}

/// Empirical degree shift minus the estimated sampling bias of both snapshots.
pub fn degree_shift_corrected(s_t: &Snapshot, s_prev: &Snapshot) -> Result<f64> {
    check_same_universe(s_t.n_nodes(), s_prev.n_nodes())?;
    let raw = degree_shift(
        &EdgeDistribution::empirical(s_t)?,
        &EdgeDistribution::empirical(s_prev)?,
    )?;
    Ok(raw - node_variance_term(s_t)? - node_variance_term(s_prev)?)
}

/// `Σ` over unordered triples `{i,j,k}` of `p_ij p_ik p_jk`.
pub fn triangle_probability(d: &EdgeDistribution) -> f64 {
    let mut total = 0.0;
    for_each_triangle(d.n_nodes(), d.probs(), |_, _, _, a, b, c| total += a * b * c);
    total
}

/// `|E| (|E|-1) (|E|-2)`, the expected-value scale of a triple product of
/// multinomial counts on three distinct pairs.
pub fn triangle_normalizer(edge_count: u64) -> f64 {
    let m = edge_count as f64;
    m * (m - 1.0) * (m - 2.0)
}

/// Empirical triangle probability `Σ e_ij e_ik e_jk / (|E| (|E|-1) (|E|-2))`.
///
/// Plain `|E|^3` normalization is biased low by `(|E|-1)(|E|-2)/|E|^2`
/// because multinomial counts are negatively correlated; the falling
/// factorial removes that exactly. Fewer than three edges cannot close a
/// triangle and give 0.
pub fn empirical_triangle_probability(s: &Snapshot) -> Result<f64> {
    if s.is_empty() {
        return Err(Error::EmptySnapshot { t: s.t() });
    }
    if s.edge_count() < 3 {
        return Ok(0.0);
    }
    let mut total = 0u128;
    for_each_triangle(s.n_nodes(), s.edges(), |_, _, _, a, b, c| {
        total += a as u128 * b as u128 * c as u128;
    });
    Ok(total as f64 / triangle_normalizer(s.edge_count()))
}

/// Evaluates a statistic on a current snapshot and, for delta statistics,
/// its predecessor.
pub fn evaluate(id: StatisticId, s_t: &Snapshot, s_prev: Option<&Snapshot>) -> Result<f64> {
    let prev = || {
        s_prev.ok_or_else(|| Error::TimeOutOfRange {
            t: s_t.t(),
            reason: format!("{id} needs a previous time step"),
        })
    };
    match id {
        StatisticId::Ged => Ok(ged(s_t, prev()?)? as f64),
        StatisticId::Dd => Ok(degree_dist_diff(s_t, prev()?)? as f64),
        StatisticId::Cb => Ok(barrat_clustering(s_t)),
        StatisticId::Ms => mass_shift(
            &EdgeDistribution::empirical(s_t)?,
            &EdgeDistribution::empirical(prev()?)?,
        ),
        StatisticId::MsCorrected => mass_shift_corrected(s_t, prev()?),
        StatisticId::Ds => degree_shift(
            &EdgeDistribution::empirical(s_t)?,
            &EdgeDistribution::empirical(prev()?)?,
        ),
        StatisticId::DsCorrected => degree_shift_corrected(s_t, prev()?),
        StatisticId::Tp => empirical_triangle_probability(s_t),
    }
}

/// Statistic `id` at time `t` of a stream.
pub fn compute(id: StatisticId, net: &DynamicNetwork, t: i64) -> Result<f64> {
    let s_t = net.snapshot(t).ok_or_else(|| Error::TimeOutOfRange {
        t,
        reason: format!("stream covers {}..={}", net.first_t(), net.last_t()),
    })?;
    let s_prev = if id.is_delta() { net.previous(t) } else { None };
    evaluate(id, s_t, s_prev)
}
