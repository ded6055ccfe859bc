//! Dynamic multigraph data model.
//!
//! A stream is a sequence of [`Snapshot`]s over a fixed node universe. Each
//! snapshot is an undirected multigraph stored as a sorted list of canonical
//! node pairs `(lo, hi)`, `lo < hi`, with multiplicities `>= 1`. Pairs that
//! are absent have multiplicity zero.

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Tolerance on the total mass of an [`EdgeDistribution`].
pub const MASS_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct NodeId(pub u32);

impl NodeId {
    #[inline]
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

impl From<usize> for NodeId {
    fn from(i: usize) -> Self {
        NodeId(u32::try_from(i).expect("node index exceeds u32"))
    }
}

impl fmt::Display for NodeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// Canonical unordered node pair with `lo < hi`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Pair {
    lo: NodeId,
    hi: NodeId,
}

impl Pair {
    /// Returns `None` for a self-loop.
    pub fn new(a: NodeId, b: NodeId) -> Option<Pair> {
        match a.cmp(&b) {
            std::cmp::Ordering::Less => Some(Pair { lo: a, hi: b }),
            std::cmp::Ordering::Greater => Some(Pair { lo: b, hi: a }),
            std::cmp::Ordering::Equal => None,
        }
    }

    pub fn of(a: usize, b: usize) -> Option<Pair> {
        Pair::new(NodeId::from(a), NodeId::from(b))
    }

    #[inline]
    pub fn lo(self) -> NodeId {
        self.lo
    }

    #[inline]
    pub fn hi(self) -> NodeId {
        self.hi
    }

    pub fn contains(self, n: NodeId) -> bool {
        self.lo == n || self.hi == n
    }
}

impl fmt::Display for Pair {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}-{}", self.lo, self.hi)
    }
}

/// One time step of the stream.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Snapshot {
    t: i64,
    n_nodes: usize,
    edges: Vec<(Pair, u64)>,
    edge_count: u64,
}

impl Snapshot {
    pub fn empty(t: i64, n_nodes: usize) -> Snapshot {
        Snapshot {
            t,
            n_nodes,
            edges: Vec::new(),
            edge_count: 0,
        }
    }

    /// Builds a snapshot from `(a, b, count)` triples. Repeated pairs
    /// accumulate, direction is collapsed and zero counts are ignored.
    /// Self-loops are dropped; their number is returned alongside.
    pub fn from_counts<I>(t: i64, n_nodes: usize, counts: I) -> Result<(Snapshot, u64)>
    where
        I: IntoIterator<Item = (NodeId, NodeId, u64)>,
    {
        let mut acc: BTreeMap<Pair, u64> = BTreeMap::new();
        let mut self_loops = 0;
        for (a, b, c) in counts {
            for n in [a, b] {
                if n.index() >= n_nodes {
                    return Err(Error::NodeIndex {
                        index: n.index(),
                        n_nodes,
                    });
                }
            }
            match Pair::new(a, b) {
                Some(p) if c > 0 => *acc.entry(p).or_insert(0) += c,
                Some(_) => {}
                None => self_loops += c,
            }
        }
        let edges: Vec<(Pair, u64)> = acc.into_iter().collect();
        Ok((Snapshot::from_sorted(t, n_nodes, edges), self_loops))
    }

    /// `edges` must be sorted by pair, duplicate-free, with counts >= 1.
    pub(crate) fn from_sorted(t: i64, n_nodes: usize, edges: Vec<(Pair, u64)>) -> Snapshot {
        debug_assert!(edges.windows(2).all(|w| w[0].0 < w[1].0));
        debug_assert!(edges.iter().all(|&(p, c)| c > 0 && p.hi().index() < n_nodes));
        let edge_count = edges.iter().map(|&(_, c)| c).sum();
        Snapshot {
            t,
            n_nodes,
            edges,
            edge_count,
        }
    }

    pub fn t(&self) -> i64 {
        self.t
    }

    pub fn n_nodes(&self) -> usize {
        self.n_nodes
    }

    /// Stored pairs in ascending order.
    pub fn edges(&self) -> &[(Pair, u64)] {
        &self.edges
    }

    /// Total number of edges `|E_t|`, counting multiplicity.
    pub fn edge_count(&self) -> u64 {
        self.edge_count
    }

    pub fn is_empty(&self) -> bool {
        self.edge_count == 0
    }

    pub fn multiplicity(&self, pair: Pair) -> u64 {
        self.edges
            .binary_search_by(|(p, _)| p.cmp(&pair))
            .map(|i| self.edges[i].1)
            .unwrap_or(0)
    }

    pub fn degree(&self, i: NodeId) -> Result<u64> {
        self.check_node(i)?;
        Ok(self
            .edges
            .iter()
            .filter(|(p, _)| p.contains(i))
            .map(|&(_, c)| c)
            .sum())
    }

    /// Degrees of every node in the universe.
    pub fn degrees(&self) -> Vec<u64> {
        let mut d = vec![0u64; self.n_nodes];
        for &(p, c) in &self.edges {
            d[p.lo().index()] += c;
            d[p.hi().index()] += c;
        }
        d
    }

    /// Copy with every multiplicity multiplied by `factor`.
    pub fn scaled(&self, factor: u64) -> Snapshot {
        assert!(factor > 0, "scale factor must be positive");
        let edges = self.edges.iter().map(|&(p, c)| (p, c * factor)).collect();
        Snapshot::from_sorted(self.t, self.n_nodes, edges)
    }

    /// Stored pairs with both endpoints in `keep`.
    pub fn restricted_to(&self, keep: &[NodeId]) -> Vec<(Pair, u64)> {
        let mut mask = vec![false; self.n_nodes];
        for n in keep {
            if let Some(m) = mask.get_mut(n.index()) {
                *m = true;
            }
        }
        self.edges
            .iter()
            .filter(|(p, _)| mask[p.lo().index()] && mask[p.hi().index()])
            .copied()
            .collect()
    }

    #[cfg(test)]
    pub(crate) fn with_t(mut self, t: i64) -> Snapshot {
        self.t = t;
        self
    }

    fn check_node(&self, i: NodeId) -> Result<()> {
        if i.index() >= self.n_nodes {
            return Err(Error::NodeIndex {
                index: i.index(),
                n_nodes: self.n_nodes,
            });
        }
        Ok(())
    }
}

/// Probability matrix over node pairs; total mass is 1.
#[derive(Debug, Clone, PartialEq)]
pub struct EdgeDistribution {
    n_nodes: usize,
    probs: Vec<(Pair, f64)>,
}

impl EdgeDistribution {
    /// Validates explicit probabilities. Zero entries are dropped.
    pub fn new<I>(n_nodes: usize, probs: I) -> Result<EdgeDistribution>
    where
        I: IntoIterator<Item = (Pair, f64)>,
    {
        let mut acc: BTreeMap<Pair, f64> = BTreeMap::new();
        for (p, v) in probs {
            if p.hi().index() >= n_nodes {
                return Err(Error::NodeIndex {
                    index: p.hi().index(),
                    n_nodes,
                });
            }
            if !v.is_finite() || !(0.0..=1.0).contains(&v) {
                return Err(Error::InvalidDistribution(format!(
                    "probability {v} for pair {p} is outside [0, 1]"
                )));
            }
            if acc.insert(p, v).is_some() {
                return Err(Error::InvalidDistribution(format!("pair {p} listed twice")));
            }
        }
        let probs: Vec<(Pair, f64)> = acc.into_iter().filter(|&(_, v)| v > 0.0).collect();
        let mass: f64 = probs.iter().map(|&(_, v)| v).sum();
        if probs.is_empty() {
            return Err(Error::InvalidDistribution("distribution has no mass".into()));
        }
        if (mass - 1.0).abs() > MASS_TOLERANCE {
            return Err(Error::InvalidDistribution(format!(
                "total mass is {mass}, expected 1"
            )));
        }
        Ok(EdgeDistribution { n_nodes, probs })
    }

    /// Normalizes non-negative pair weights into a distribution.
    pub fn from_weights<I>(n_nodes: usize, weights: I) -> Result<EdgeDistribution>
    where
        I: IntoIterator<Item = (Pair, f64)>,
    {
        let weights: Vec<(Pair, f64)> = weights.into_iter().collect();
        if let Some((p, w)) = weights.iter().find(|(_, w)| !w.is_finite() || *w < 0.0) {
            return Err(Error::InvalidDistribution(format!(
                "weight {w} for pair {p} is negative or not finite"
            )));
        }
        let total: f64 = weights.iter().map(|&(_, w)| w).sum();
        if total <= 0.0 {
            return Err(Error::InvalidDistribution("all pair weights are zero".into()));
        }
        EdgeDistribution::new(n_nodes, weights.into_iter().map(|(p, w)| (p, w / total)))
    }

    /// Empirical distribution `p̂_ij = e_ij / |E_t|`.
    pub fn empirical(s: &Snapshot) -> Result<EdgeDistribution> {
        if s.is_empty() {
            return Err(Error::EmptySnapshot { t: s.t() });
        }
        let m = s.edge_count() as f64;
        Ok(EdgeDistribution {
            n_nodes: s.n_nodes(),
            probs: s.edges().iter().map(|&(p, c)| (p, c as f64 / m)).collect(),
        })
    }

    pub fn n_nodes(&self) -> usize {
        self.n_nodes
    }

    /// Supported pairs in ascending order.
    pub fn probs(&self) -> &[(Pair, f64)] {
        &self.probs
    }

    pub fn prob(&self, pair: Pair) -> f64 {
        self.probs
            .binary_search_by(|(p, _)| p.cmp(&pair))
            .map(|i| self.probs[i].1)
            .unwrap_or(0.0)
    }

    pub fn mass(&self) -> f64 {
        self.probs.iter().map(|&(_, v)| v).sum()
    }

    pub fn probabilistic_degree(&self, i: NodeId) -> Result<f64> {
        if i.index() >= self.n_nodes {
            return Err(Error::NodeIndex {
                index: i.index(),
                n_nodes: self.n_nodes,
            });
        }
        Ok(self
            .probs
            .iter()
            .filter(|(p, _)| p.contains(i))
            .map(|&(_, v)| v)
            .sum())
    }

    /// `PD(v_i)` for every node; sums to 2.
    pub fn probabilistic_degrees(&self) -> Vec<f64> {
        let mut d = vec![0.0; self.n_nodes];
        for &(p, v) in &self.probs {
            d[p.lo().index()] += v;
            d[p.hi().index()] += v;
        }
        d
    }
}

/// Shorthand for [`EdgeDistribution::empirical`].
pub fn empirical_distribution(s: &Snapshot) -> Result<EdgeDistribution> {
    EdgeDistribution::empirical(s)
}

/// Ordered snapshots with contiguous time indices over one node universe.
#[derive(Debug, Clone, PartialEq)]
pub struct DynamicNetwork {
    n_nodes: usize,
    snapshots: Vec<Snapshot>,
    labels: Vec<String>,
}

impl DynamicNetwork {
    /// Snapshots must share `n_nodes` and have strictly increasing `t`.
    pub fn new(n_nodes: usize, snapshots: Vec<Snapshot>) -> Result<DynamicNetwork> {
        if snapshots.is_empty() {
            return Err(Error::NoRecords);
        }
        for s in &snapshots {
            if s.n_nodes() != n_nodes {
                return Err(Error::Incompatible {
                    left: n_nodes,
                    right: s.n_nodes(),
                });
            }
        }
        if let Some(w) = snapshots.windows(2).find(|w| w[0].t() >= w[1].t()) {
            return Err(Error::config(format!(
                "snapshot times must be strictly increasing ({} then {})",
                w[0].t(),
                w[1].t()
            )));
        }
        Ok(DynamicNetwork {
            n_nodes,
            snapshots,
            labels: Vec::new(),
        })
    }

    pub fn with_labels(mut self, labels: Vec<String>) -> DynamicNetwork {
        self.labels = labels;
        self
    }

    pub fn n_nodes(&self) -> usize {
        self.n_nodes
    }

    pub fn snapshots(&self) -> &[Snapshot] {
        &self.snapshots
    }

    pub fn len(&self) -> usize {
        self.snapshots.len()
    }

    pub fn is_empty(&self) -> bool {
        self.snapshots.is_empty()
    }

    pub fn first_t(&self) -> i64 {
        self.snapshots[0].t()
    }

    pub fn last_t(&self) -> i64 {
        self.snapshots[self.snapshots.len() - 1].t()
    }

    pub fn snapshot(&self, t: i64) -> Option<&Snapshot> {
        self.snapshots
            .binary_search_by(|s| s.t().cmp(&t))
            .ok()
            .map(|i| &self.snapshots[i])
    }

    /// Snapshot preceding `t` in the stream.
    pub fn previous(&self, t: i64) -> Option<&Snapshot> {
        let i = self.snapshots.binary_search_by(|s| s.t().cmp(&t)).ok()?;
        i.checked_sub(1).map(|j| &self.snapshots[j])
    }

    /// Interned label of a node, or its index when the stream had none.
    pub fn label(&self, n: NodeId) -> String {
        self.labels
            .get(n.index())
            .cloned()
            .unwrap_or_else(|| n.to_string())
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn n(i: u32) -> NodeId {
        NodeId(i)
    }

    fn snap(t: i64, nodes: usize, e: &[(u32, u32, u64)]) -> Snapshot {
        Snapshot::from_counts(t, nodes, e.iter().map(|&(a, b, c)| (n(a), n(b), c)))
            .unwrap()
            .0
    }

    #[test]
    fn pair_is_canonical() {
        assert_eq!(Pair::new(n(3), n(1)), Pair::new(n(1), n(3)));
        assert_eq!(Pair::new(n(2), n(2)), None);
        let p = Pair::of(4, 1).unwrap();
        assert_eq!((p.lo(), p.hi()), (n(1), n(4)));
    }

    #[test]
    fn snapshot_accumulates_and_drops_loops() {
        let (s, loops) =
            Snapshot::from_counts(0, 3, [(n(1), n(0), 1), (n(0), n(1), 2), (n(2), n(2), 4)])
                .unwrap();
        assert_eq!(loops, 4);
        assert_eq!(s.edges(), &[(Pair::of(0, 1).unwrap(), 3)]);
        assert_eq!(s.edge_count(), 3);
    }

    #[test]
    fn snapshot_rejects_out_of_range_node() {
        let err = Snapshot::from_counts(0, 2, [(n(0), n(2), 1)]).unwrap_err();
        assert!(matches!(err, Error::NodeIndex { index: 2, n_nodes: 2 }));
    }

    #[test]
    fn degree_examples() {
        // a=0, b=1, c=2
        let s = snap(0, 3, &[(0, 1, 2), (0, 2, 1)]);
        assert_eq!(s.degree(n(0)).unwrap(), 3);
        assert_eq!(s.degree(n(1)).unwrap(), 2);
        let s2 = snap(0, 3, &[(0, 1, 2)]);
        assert_eq!(s2.degree(n(2)).unwrap(), 0);
        assert!(s.degree(n(3)).is_err());
    }

    #[test]
    fn empirical_distribution_examples() {
        let d = empirical_distribution(&snap(0, 2, &[(0, 1, 1)])).unwrap();
        assert_eq!(d.probs(), &[(Pair::of(0, 1).unwrap(), 1.0)]);

        let d = empirical_distribution(&snap(0, 3, &[(0, 1, 1), (1, 2, 3)])).unwrap();
        assert_eq!(d.prob(Pair::of(0, 1).unwrap()), 0.25);
        assert_eq!(d.prob(Pair::of(1, 2).unwrap()), 0.75);

        let err = empirical_distribution(&Snapshot::empty(7, 3)).unwrap_err();
        assert!(matches!(err, Error::EmptySnapshot { t: 7 }));
    }

    #[test]
    fn probabilistic_degree_examples() {
        let ab = Pair::of(0, 1).unwrap();
        let bc = Pair::of(1, 2).unwrap();
        let d = EdgeDistribution::new(3, [(ab, 1.0)]).unwrap();
        assert_eq!(d.probabilistic_degree(n(0)).unwrap(), 1.0);

        let d = EdgeDistribution::new(3, [(ab, 0.5), (bc, 0.5)]).unwrap();
        assert_eq!(d.probabilistic_degree(n(1)).unwrap(), 1.0);
        assert_eq!(d.probabilistic_degree(n(2)).unwrap(), 0.5);
        assert!(d.probabilistic_degree(n(3)).is_err());
    }

    #[test]
    fn distribution_validation() {
        let ab = Pair::of(0, 1).unwrap();
        let bc = Pair::of(1, 2).unwrap();
        assert!(EdgeDistribution::new(3, [(ab, 0.5)]).is_err());
        assert!(EdgeDistribution::new(3, []).is_err());
        assert!(EdgeDistribution::new(3, [(ab, 1.5), (bc, -0.5)]).is_err());
        assert!(EdgeDistribution::from_weights(3, [(ab, 0.0)]).is_err());
        let d = EdgeDistribution::from_weights(3, [(ab, 2.0), (bc, 6.0)]).unwrap();
        assert_eq!(d.prob(bc), 0.75);
    }

    #[test]
    fn network_lookup() {
        let net = DynamicNetwork::new(
            3,
            vec![snap(4, 3, &[(0, 1, 1)]), snap(5, 3, &[]), snap(6, 3, &[(1, 2, 1)])],
        )
        .unwrap();
        assert_eq!(net.first_t(), 4);
        assert_eq!(net.last_t(), 6);
        assert!(net.snapshot(5).unwrap().is_empty());
        assert_eq!(net.previous(6).unwrap().t(), 5);
        assert!(net.previous(4).is_none());
        assert!(net.snapshot(7).is_none());
        assert_eq!(net.label(NodeId(2)), "2");

        let bad = DynamicNetwork::new(3, vec![snap(1, 3, &[]), snap(1, 3, &[])]);
        assert!(bad.is_err());
    }
}
