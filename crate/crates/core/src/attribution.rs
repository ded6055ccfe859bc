//! Localizing a flagged time step.
//!
//! Mass shift, degree shift and triangle probability are sums over pairs or
//! nodes, so each can be split into per-element contributions. The subgraph
//! spanned by the highest-scoring elements is the part of the network whose
//! edge probabilities changed the most.

use std::cmp::Ordering;
use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{DynamicNetwork, EdgeDistribution, NodeId, Pair, Snapshot};
use crate::stats::{triangle_normalizer, StatisticId};

pub const DEFAULT_TARGET_FRACTION: f64 = 0.5;
pub const DEFAULT_MAX_ELEMENTS: usize = 50;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Element {
    Node(NodeId),
    Pair(Pair),
}

impl Element {
    fn endpoints(self) -> Vec<NodeId> {
        match self {
            Element::Node(n) => vec![n],
            Element::Pair(p) => vec![p.lo(), p.hi()],
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ContributionKind {
    PerPair,
    PerNode,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ContributionMap {
    pub statistic: StatisticId,
    pub t: i64,
    pub kind: ContributionKind,
    /// Sorted by element.
    pub scores: Vec<(Element, f64)>,
    pub total: f64,
}

fn snapshot_pair(net: &DynamicNetwork, id: StatisticId, t: i64) -> Result<(&Snapshot, Option<&Snapshot>)> {
    let cur = net.snapshot(t).ok_or_else(|| Error::TimeOutOfRange {
        t,
        reason: format!("stream covers {}..={}", net.first_t(), net.last_t()),
    })?;
    let prev = net.previous(t);
    if id.is_delta() && prev.is_none() {
        return Err(Error::TimeOutOfRange {
            t,
            reason: format!("{id} needs a previous time step"),
        });
    }
    Ok((cur, prev))
}

/// Splits the uncorrected statistic at `t` into per-element scores.
pub fn decompose(id: StatisticId, net: &DynamicNetwork, t: i64) -> Result<ContributionMap> {
    let (cur, prev) = snapshot_pair(net, id, t)?;
    let (kind, scores): (ContributionKind, Vec<(Element, f64)>) = match id {
        StatisticId::Ms => {
            let d_t = EdgeDistribution::empirical(cur)?;
            let d_prev = EdgeDistribution::empirical(prev.expect("checked"))?;
            let pairs: BTreeSet<Pair> = d_t
                .probs()
                .iter()
                .chain(d_prev.probs())
                .map(|&(p, _)| p)
                .collect();
            let scores = pairs
                .into_iter()
                .map(|p| {
                    let diff = d_t.prob(p) - d_prev.prob(p);
                    (Element::Pair(p), diff * diff)
                })
                .collect();
            (ContributionKind::PerPair, scores)
        }
        StatisticId::Ds => {
            let d_t = EdgeDistribution::empirical(cur)?;
            let d_prev = EdgeDistribution::empirical(prev.expect("checked"))?;
            let touched: BTreeSet<NodeId> = d_t
                .probs()
                .iter()
                .chain(d_prev.probs())
                .flat_map(|&(p, _)| [p.lo(), p.hi()])
                .collect();
            let pd_t = d_t.probabilistic_degrees();
            let pd_prev = d_prev.probabilistic_degrees();
            let scores = touched
                .into_iter()
                .map(|n| {
                    let diff = pd_t[n.index()] - pd_prev[n.index()];
                    (Element::Node(n), diff * diff)
                })
                .collect();
            (ContributionKind::PerNode, scores)
        }
        StatisticId::Tp => {
            if cur.is_empty() {
                return Err(Error::EmptySnapshot { t });
            }
            let norm = triangle_normalizer(cur.edge_count());
            let mut shares = std::collections::BTreeMap::<Pair, f64>::new();
            for &(p, _) in cur.edges() {
                shares.insert(p, 0.0);
            }
            if cur.edge_count() >= 3 {
                triangle_shares(cur, |pair, share| {
                    *shares.get_mut(&pair).expect("supported") += share / norm
                });
            }
            let scores = shares.into_iter().map(|(p, s)| (Element::Pair(p), s)).collect();
            (ContributionKind::PerPair, scores)
        }
        other => {
            return Err(Error::Unsupported(format!(
                "{other} cannot be decomposed: only the density-consistent sums MS, DS and TP \
                 split into per-edge or per-node contributions"
            )))
        }
    };
    let total = scores.iter().map(|&(_, s)| s).sum();
    Ok(ContributionMap {
        statistic: id,
        t,
        kind,
        scores,
        total,
    })
}

/// Each triangle's multiplicity product, split equally onto its three pairs.
fn triangle_shares<F: FnMut(Pair, f64)>(s: &Snapshot, mut add: F) {
    let n = s.n_nodes();
    let mut forward: Vec<Vec<(NodeId, f64)>> = vec![Vec::new(); n];
    for &(p, w) in s.edges() {
        forward[p.lo().index()].push((p.hi(), w as f64));
    }
    for &(p, w_ij) in s.edges() {
        let w_ij = w_ij as f64;
        let (i, j) = (p.lo(), p.hi());
        for &(k, w_ik) in forward[i.index()].iter().filter(|(k, _)| *k > j) {
            if let Ok(pos) = forward[j.index()].binary_search_by(|(x, _)| x.cmp(&k)) {
                let w_jk = forward[j.index()][pos].1;
                let share = w_ij * w_ik * w_jk / 3.0;
                add(p, share);
                add(Pair::new(i, k).expect("distinct"), share);
                add(Pair::new(j, k).expect("distinct"), share);
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnomalySubgraph {
    pub statistic: StatisticId,
    pub t: i64,
    pub target_fraction: f64,
    pub total: f64,
    pub covered_fraction: f64,
    /// False only when `max_elements` stopped the selection early.
    pub target_met: bool,
    pub nodes: Vec<NodeId>,
    /// Snapshot `t - 1` restricted to `nodes`; absent at the first step.
    pub edges_before: Option<Vec<(Pair, u64)>>,
    pub edges_after: Vec<(Pair, u64)>,
    /// Selected elements, highest score first.
    pub contributing_elements: Vec<(Element, f64)>,
}

/// Greedy selection by descending score, ties broken by smallest element.
pub fn extract_subgraph(
    cm: &ContributionMap,
    net: &DynamicNetwork,
    target_fraction: f64,
    max_elements: usize,
) -> Result<AnomalySubgraph> {
    if !(target_fraction > 0.0 && target_fraction <= 1.0) {
        return Err(Error::config(format!(
            "target fraction must be in (0, 1], got {target_fraction}"
        )));
    }
    if max_elements == 0 {
        return Err(Error::config("max_elements must be positive"));
    }
    if !(cm.total > 0.0) {
        return Err(Error::NothingToAttribute { t: cm.t });
    }
    let mut ranked = cm.scores.clone();
    ranked.sort_by(|a, b| {
        b.1.partial_cmp(&a.1)
            .unwrap_or(Ordering::Equal)
            .then(a.0.cmp(&b.0))
    });

    let goal = target_fraction * cm.total;
    // relative slack so a target of 1.0 is not defeated by summation rounding
    let slack = 1e-12 * cm.total;
    let mut covered = 0.0;
    let mut selected = Vec::new();
    for &(e, s) in &ranked {
        if covered + slack >= goal || selected.len() == max_elements {
            break;
        }
        covered += s;
        selected.push((e, s));
    }
    let target_met = covered + slack >= goal;
    let mut covered_fraction = (covered / cm.total).min(1.0);
    if (1.0 - covered_fraction).abs() <= 1e-12 {
        covered_fraction = 1.0;
    }

    let nodes: Vec<NodeId> = selected
        .iter()
        .flat_map(|(e, _)| e.endpoints())
        .collect::<BTreeSet<_>>()
        .into_iter()
        .collect();
    let (cur, prev) = snapshot_pair(net, cm.statistic, cm.t)?;
    Ok(AnomalySubgraph {
        statistic: cm.statistic,
        t: cm.t,
        target_fraction,
        total: cm.total,
        covered_fraction,
        target_met,
        edges_before: prev.map(|p| p.restricted_to(&nodes)),
        edges_after: cur.restricted_to(&nodes),
        nodes,
        contributing_elements: selected,
    })
}
