//! Anomaly detection for dynamic multigraph streams whose edge volume varies
//! over time.
//!
//! A stream of timestamped edges is windowed into snapshots
//! ([`ingest`], [`graph`]); each snapshot (or consecutive pair) is reduced to
//! a scalar statistic ([`stats`]); a normal null model over the series flags
//! outlying time steps ([`detector`]); flagged steps can be traced back to the
//! responsible subgraph ([`attribution`]). [`synthgen`] and [`benchmark`]
//! generate synthetic streams and measure recall and estimator bias.
//!
//! ```
//! use dyngraph_anomaly::{detect, load_network, DetectorConfig, NullPolicy, StatisticId};
//!
//! let mut text = String::new();
//! for t in 0..12 {
//!     text += &format!("{t} a b {}\n{t} b c {}\n{t} a c 1\n", 3 + t % 2, 2 + t % 3);
//! }
//! let net = load_network(&text, 1, None).unwrap().network;
//! let cfg = DetectorConfig {
//!     statistics: vec![StatisticId::Ms],
//!     null_policy: NullPolicy::LeaveOneOut,
//!     ..DetectorConfig::default()
//! };
//! let report = detect(&net, &cfg).unwrap();
//! assert_eq!(report.statistics[0].points.len(), 12);
//! ```

pub mod attribution;
pub mod benchmark;
pub mod cli;
pub mod config;
pub mod detector;
pub mod error;
pub mod graph;
pub mod ingest;
pub mod stats;
pub mod synthgen;

pub use attribution::{decompose, extract_subgraph, AnomalySubgraph, ContributionMap, Element};
pub use detector::{
    detect, fit_null, fit_trend, DetectionReport, DetectorConfig, Detrend, EmptySnapshotPolicy,
    NullModel, NullPolicy, TrendFit,
};
pub use error::{Error, Result};
pub use graph::{DynamicNetwork, EdgeDistribution, NodeId, Pair, Snapshot};
pub use ingest::load_network;
pub use stats::StatisticId;
