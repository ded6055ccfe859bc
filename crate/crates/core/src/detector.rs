//! Statistic-based hypothesis testing over a dynamic network.
//!
//! For each requested statistic the series is computed over the stream, an
//! optional linear trend is removed, a normal null is fitted to learning
//! points and every time step is tested with a two-tailed Z-test.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::DynamicNetwork;
use crate::stats::{self, StatisticId};

/// Inverse of the standard normal CDF (Acklam's rational approximation,
/// relative error below 1.2e-9 over (0, 1)).
pub fn normal_quantile(p: f64) -> f64 {
    const A: [f64; 6] = [
        -3.969683028665376e+01,
        2.209460984245205e+02,
        -2.759285104469687e+02,
        1.383577518672690e+02,
        -3.066479806614716e+01,
        2.506628277459239e+00,
    ];
    const B: [f64; 5] = [
        -5.447609879822406e+01,
        1.615858368580409e+02,
        -1.556989798598866e+02,
        6.680131188771972e+01,
        -1.328068155288572e+01,
    ];
    const C: [f64; 6] = [
        -7.784894002430293e-03,
        -3.223964580411365e-01,
        -2.400758277161838e+00,
        -2.549732539343734e+00,
        4.374664141464968e+00,
        2.938163982698783e+00,
    ];
    const D: [f64; 4] = [
        7.784695709041462e-03,
        3.224671290700398e-01,
        2.445134137142996e+00,
        3.754408661907416e+00,
    ];
    const P_LOW: f64 = 0.02425;

    assert!(p > 0.0 && p < 1.0, "quantile argument must be in (0, 1)");
    if p < P_LOW {
        let q = (-2.0 * p.ln()).sqrt();
        (((((C[0] * q + C[1]) * q + C[2]) * q + C[3]) * q + C[4]) * q + C[5])
            / ((((D[0] * q + D[1]) * q + D[2]) * q + D[3]) * q + 1.0)
    } else if p <= 1.0 - P_LOW {
        let q = p - 0.5;
        let r = q * q;
        (((((A[0] * r + A[1]) * r + A[2]) * r + A[3]) * r + A[4]) * r + A[5]) * q
            / (((((B[0] * r + B[1]) * r + B[2]) * r + B[3]) * r + B[4]) * r + 1.0)
    } else {
        -normal_quantile(1.0 - p)
    }
}

/// Two-tailed critical value `z(1 - alpha/2)`.
pub fn critical_z(alpha: f64) -> f64 {
    normal_quantile(1.0 - alpha / 2.0)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NullPolicy {
    LearningWindow(Vec<i64>),
    LeaveOneOut,
}

impl NullPolicy {
    /// Parses `loo` or `learning:<t1>..<t2>` (inclusive).
    pub fn parse(s: &str) -> Result<NullPolicy> {
        let s = s.trim();
        if s.eq_ignore_ascii_case("loo") || s.eq_ignore_ascii_case("leave_one_out") {
            return Ok(NullPolicy::LeaveOneOut);
        }
        let range = s
            .strip_prefix("learning:")
            .ok_or_else(|| Error::config(format!("null: expected `loo` or `learning:<t1>..<t2>`, got `{s}`")))?;
        let (a, b) = range
            .split_once("..")
            .ok_or_else(|| Error::config(format!("null: malformed range `{range}`")))?;
        let parse = |x: &str| {
            x.trim()
                .parse::<i64>()
                .map_err(|_| Error::config(format!("null: `{x}` is not an integer")))
        };
        let (a, b) = (parse(a)?, parse(b)?);
        if a > b {
            return Err(Error::config(format!("null: empty range {a}..{b}")));
        }
        Ok(NullPolicy::LearningWindow((a..=b).collect()))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Detrend {
    None,
    Linear,
}

impl std::str::FromStr for Detrend {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "none" => Ok(Detrend::None),
            "linear" => Ok(Detrend::Linear),
            other => Err(Error::config(format!("detrend: expected none|linear, got `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EmptySnapshotPolicy {
    Error,
    Skip,
}

impl std::str::FromStr for EmptySnapshotPolicy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "error" => Ok(EmptySnapshotPolicy::Error),
            "skip" => Ok(EmptySnapshotPolicy::Skip),
            other => Err(Error::config(format!(
                "empty_snapshots: expected error|skip, got `{other}`"
            ))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DetectorConfig {
    pub alpha: f64,
    pub statistics: Vec<StatisticId>,
    pub null_policy: NullPolicy,
    pub detrend: Detrend,
    pub empty_snapshot_policy: EmptySnapshotPolicy,
}

impl Default for DetectorConfig {
    fn default() -> Self {
        DetectorConfig {
            alpha: 0.05,
            statistics: vec![StatisticId::Ms, StatisticId::Ds, StatisticId::Tp],
            null_policy: NullPolicy::LeaveOneOut,
            detrend: Detrend::None,
            empty_snapshot_policy: EmptySnapshotPolicy::Error,
        }
    }
}

impl DetectorConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return Err(Error::config(format!("alpha must be in (0, 1), got {}", self.alpha)));
        }
        if self.statistics.is_empty() {
            return Err(Error::config("no statistics requested"));
        }
        if let NullPolicy::LearningWindow(ts) = &self.null_policy {
            if ts.is_empty() {
                return Err(Error::config("learning window is empty"));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrendFit {
    pub intercept: f64,
    pub slope: f64,
}

impl TrendFit {
    pub const ZERO: TrendFit = TrendFit {
        intercept: 0.0,
        slope: 0.0,
    };

    pub fn at(&self, t: f64) -> f64 {
        self.intercept + self.slope * t
    }
}

/// Least-squares line through `(t, value)` points, or the zero fit.
pub fn fit_trend(points: &[(f64, f64)], mode: Detrend) -> Result<TrendFit> {
    if mode == Detrend::None {
        return Ok(TrendFit::ZERO);
    }
    let n = points.len() as f64;
    let t_mean = points.iter().map(|p| p.0).sum::<f64>() / n;
    let v_mean = points.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = points.iter().map(|p| (p.0 - t_mean).powi(2)).sum();
    if points.len() < 2 || sxx <= 0.0 {
        return Err(Error::config(
            "linear detrending needs at least two distinct learning time steps",
        ));
    }
    let sxy: f64 = points.iter().map(|p| (p.0 - t_mean) * (p.1 - v_mean)).sum();
    let slope = sxy / sxx;
    Ok(TrendFit {
        intercept: v_mean - slope * t_mean,
        slope,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NullModel {
    pub mean: f64,
    pub sd: f64,
    pub phi_lower: f64,
    pub phi_upper: f64,
}

impl NullModel {
    pub fn z_score(&self, x: f64) -> f64 {
        (x - self.mean) / self.sd
    }

    pub fn rejects(&self, x: f64) -> bool {
        x < self.phi_lower || x > self.phi_upper
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum NullFitError {
    TooFewValues(usize),
    ZeroVariance,
}

impl NullFitError {
    pub fn into_error(self, statistic: impl std::fmt::Display) -> Error {
        match self {
            NullFitError::TooFewValues(n) => Error::DegenerateNull {
                statistic: statistic.to_string(),
                reason: format!("{n} learning value(s); at least 3 are needed"),
            },
            NullFitError::ZeroVariance => Error::DegenerateNull {
                statistic: statistic.to_string(),
                reason: "learning values have zero variance".into(),
            },
        }
    }
}

/// Normal null from sample mean and sample standard deviation.
pub fn fit_null(values: &[f64], alpha: f64) -> std::result::Result<NullModel, NullFitError> {
    if values.len() < 3 {
        return Err(NullFitError::TooFewValues(values.len()));
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
    let sd = var.sqrt();
    // spread at rounding level means the inputs were equal up to summation error
    if !(sd > 1e-12 * mean.abs()) || !sd.is_finite() {
        return Err(NullFitError::ZeroVariance);
    }
    let z = critical_z(alpha);
    Ok(NullModel {
        mean,
        sd,
        phi_lower: mean - z * sd,
        phi_upper: mean + z * sd,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum SeriesValue {
    Value { value: f64 },
    /// Touched an empty snapshot under the skip policy.
    Skipped,
    /// No predecessor for a delta statistic.
    Undefined,
}

#[derive(Debug, Clone, PartialEq)]
pub struct StatisticSeries {
    pub statistic: StatisticId,
    pub points: Vec<(i64, SeriesValue)>,
}

impl StatisticSeries {
    pub fn compute(
        id: StatisticId,
        net: &DynamicNetwork,
        empty: EmptySnapshotPolicy,
    ) -> Result<StatisticSeries> {
        let points = net
            .snapshots()
            .par_iter()
            .enumerate()
            .map(|(i, s)| {
                let t = s.t();
                let prev = if id.is_delta() {
                    match i.checked_sub(1) {
                        Some(j) => Some(&net.snapshots()[j]),
                        None => return Ok((t, SeriesValue::Undefined)),
                    }
                } else {
                    None
                };
                match stats::evaluate(id, s, prev) {
                    Ok(value) => Ok((t, SeriesValue::Value { value })),
                    Err(Error::EmptySnapshot { .. }) if empty == EmptySnapshotPolicy::Skip => {
                        Ok((t, SeriesValue::Skipped))
                    }
                    Err(e) => Err(e),
                }
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(StatisticSeries {
            statistic: id,
            points,
        })
    }

    /// `(t, value)` for every scored point.
    pub fn values(&self) -> Vec<(i64, f64)> {
        self.points
            .iter()
            .filter_map(|&(t, v)| match v {
                SeriesValue::Value { value } => Some((t, value)),
                _ => None,
            })
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum PointResult {
    Scored {
        t: i64,
        raw: f64,
        detrended: f64,
        z: f64,
        phi_lower: f64,
        phi_upper: f64,
        flagged: bool,
    },
    Skipped {
        t: i64,
    },
    Undefined {
        t: i64,
    },
}

impl PointResult {
    pub fn t(&self) -> i64 {
        match *self {
            PointResult::Scored { t, .. } | PointResult::Skipped { t } | PointResult::Undefined { t } => t,
        }
    }

    pub fn is_flagged(&self) -> bool {
        matches!(self, PointResult::Scored { flagged: true, .. })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StatisticReport {
    pub statistic: StatisticId,
    /// Present for a learning-window null; leave-one-out refits per point.
    pub null: Option<NullModel>,
    pub trend: Option<TrendFit>,
    pub points: Vec<PointResult>,
}

impl StatisticReport {
    pub fn flagged_times(&self) -> Vec<i64> {
        self.points
            .iter()
            .filter(|p| p.is_flagged())
            .map(PointResult::t)
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DetectionReport {
    pub config: DetectorConfig,
    pub critical_z: f64,
    pub n_nodes: usize,
    pub first_t: i64,
    pub last_t: i64,
    pub statistics: Vec<StatisticReport>,
}

impl DetectionReport {
    pub fn get(&self, id: StatisticId) -> Option<&StatisticReport> {
        self.statistics.iter().find(|r| r.statistic == id)
    }
}

fn scored(t: i64, raw: f64, trend: &TrendFit, null: &NullModel) -> PointResult {
    let detrended = raw - trend.at(t as f64);
    PointResult::Scored {
        t,
        raw,
        detrended,
        z: null.z_score(detrended),
        phi_lower: null.phi_lower,
        phi_upper: null.phi_upper,
        flagged: null.rejects(detrended),
    }
}

fn fit_on(
    learning: &[(i64, f64)],
    cfg: &DetectorConfig,
    id: StatisticId,
) -> Result<(TrendFit, NullModel)> {
    let pts: Vec<(f64, f64)> = learning.iter().map(|&(t, v)| (t as f64, v)).collect();
    let trend = fit_trend(&pts, cfg.detrend)?;
    let residuals: Vec<f64> = pts.iter().map(|&(t, v)| v - trend.at(t)).collect();
    let null = fit_null(&residuals, cfg.alpha).map_err(|e| e.into_error(id))?;
    Ok((trend, null))
}

fn detect_one(net: &DynamicNetwork, cfg: &DetectorConfig, id: StatisticId) -> Result<StatisticReport> {
    let series = StatisticSeries::compute(id, net, cfg.empty_snapshot_policy)?;
    let values = series.values();

    match &cfg.null_policy {
        NullPolicy::LearningWindow(ts) => {
            let mut learning = Vec::with_capacity(ts.len());
            for &t in ts {
                if net.snapshot(t).is_none() {
                    return Err(Error::config(format!(
                        "learning time {t} is outside the stream ({}..={})",
                        net.first_t(),
                        net.last_t()
                    )));
                }
                if id.is_delta() && t == net.first_t() {
                    return Err(Error::config(format!(
                        "learning time {t} has no previous step for delta statistic {id}"
                    )));
                }
                if let Some(&(_, v)) = values.iter().find(|(vt, _)| *vt == t) {
                    learning.push((t, v));
                }
            }
            let (trend, null) = fit_on(&learning, cfg, id)?;
            let points = series
                .points
                .iter()
                .map(|&(t, v)| match v {
                    SeriesValue::Value { value } => scored(t, value, &trend, &null),
                    SeriesValue::Skipped => PointResult::Skipped { t },
                    SeriesValue::Undefined => PointResult::Undefined { t },
                })
                .collect();
            Ok(StatisticReport {
                statistic: id,
                null: Some(null),
                trend: (cfg.detrend == Detrend::Linear).then_some(trend),
                points,
            })
        }
        NullPolicy::LeaveOneOut => {
            let points = series
                .points
                .par_iter()
                .map(|&(t, v)| match v {
                    SeriesValue::Value { value } => {
                        let others: Vec<(i64, f64)> =
                            values.iter().copied().filter(|&(u, _)| u != t).collect();
                        let (trend, null) = fit_on(&others, cfg, id)?;
                        Ok(scored(t, value, &trend, &null))
                    }
                    SeriesValue::Skipped => Ok(PointResult::Skipped { t }),
                    SeriesValue::Undefined => Ok(PointResult::Undefined { t }),
                })
                .collect::<Result<Vec<_>>>()?;
            Ok(StatisticReport {
                statistic: id,
                null: None,
                trend: None,
                points,
            })
        }
    }
}

pub fn detect(net: &DynamicNetwork, cfg: &DetectorConfig) -> Result<DetectionReport> {
    cfg.validate()?;
    let statistics = cfg
        .statistics
        .iter()
        .map(|&id| detect_one(net, cfg, id))
        .collect::<Result<Vec<_>>>()?;
    Ok(DetectionReport {
        config: cfg.clone(),
        critical_z: critical_z(cfg.alpha),
        n_nodes: net.n_nodes(),
        first_t: net.first_t(),
        last_t: net.last_t(),
        statistics,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{NodeId, Snapshot};
    use approx::assert_abs_diff_eq;

    #[test]
    fn quantile_values() {
        assert_abs_diff_eq!(critical_z(0.05), 1.959963984540054, epsilon = 1e-8);
        assert_abs_diff_eq!(normal_quantile(0.5), 0.0, epsilon = 1e-12);
        assert_abs_diff_eq!(normal_quantile(0.995), 2.5758293035489, epsilon = 1e-8);
        assert_abs_diff_eq!(normal_quantile(0.001), -3.090232306167813, epsilon = 1e-8);
        assert_abs_diff_eq!(normal_quantile(0.84134474606854293), 1.0, epsilon = 1e-8);
    }

    #[test]
    fn trend_examples() {
        let t = fit_trend(&[(0.0, 1.0), (1.0, 2.0), (2.0, 3.0)], Detrend::Linear).unwrap();
        assert_abs_diff_eq!(t.intercept, 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(t.slope, 1.0, epsilon = 1e-12);
        assert_eq!(fit_trend(&[(0.0, 9.0)], Detrend::None).unwrap(), TrendFit::ZERO);
        let c = fit_trend(&[(0.0, 5.0), (1.0, 5.0)], Detrend::Linear).unwrap();
        assert_abs_diff_eq!(c.intercept, 5.0);
        assert_abs_diff_eq!(c.slope, 0.0);
        assert!(fit_trend(&[(3.0, 1.0), (3.0, 2.0)], Detrend::Linear).is_err());
        assert!(fit_trend(&[(3.0, 1.0)], Detrend::Linear).is_err());
    }

    #[test]
    fn null_examples() {
        let m = fit_null(&[-1.0, 0.0, 1.0], 0.05).unwrap();
        assert_eq!(m.mean, 0.0);
        assert_eq!(m.sd, 1.0);
        assert_abs_diff_eq!(m.phi_upper, 1.959964, epsilon = 1e-6);
        assert_abs_diff_eq!(m.phi_lower, -1.959964, epsilon = 1e-6);
        assert_eq!(fit_null(&[2.0; 5], 0.05), Err(NullFitError::ZeroVariance));
        assert_eq!(fit_null(&[1.0, 2.0], 0.05), Err(NullFitError::TooFewValues(2)));
    }

    #[test]
    fn null_policy_parsing() {
        assert_eq!(NullPolicy::parse("loo").unwrap(), NullPolicy::LeaveOneOut);
        assert_eq!(
            NullPolicy::parse("learning:2..4").unwrap(),
            NullPolicy::LearningWindow(vec![2, 3, 4])
        );
        assert!(NullPolicy::parse("learning:4..2").is_err());
        assert!(NullPolicy::parse("window").is_err());
    }

    #[test]
    fn config_validation() {
        let mut cfg = DetectorConfig {
            alpha: 1.5,
            ..DetectorConfig::default()
        };
        assert!(cfg.validate().unwrap_err().to_string().contains("alpha"));
        cfg.alpha = 0.05;
        cfg.null_policy = NullPolicy::LearningWindow(vec![]);
        assert!(cfg.validate().is_err());
    }

    /// Triangle stream where one step has a heavier edge, changing CB.
    fn triangle_stream(weights: &[u64]) -> DynamicNetwork {
        let snaps = weights
            .iter()
            .enumerate()
            .map(|(t, &w)| {
                Snapshot::from_counts(
                    t as i64,
                    4,
                    [
                        (NodeId(0), NodeId(1), w),
                        (NodeId(0), NodeId(2), 1),
                        (NodeId(1), NodeId(2), 1),
                        (NodeId(2), NodeId(3), 1),
                    ],
                )
                .unwrap()
                .0
            })
            .collect();
        DynamicNetwork::new(4, snaps).unwrap()
    }

    #[test]
    fn single_perturbation_is_flagged() {
        // TP values vary slightly with w; step 6 is far heavier
        let mut w = vec![2, 3, 2, 3, 2, 3, 40, 2, 3, 2, 3, 2];
        let net = triangle_stream(&w);
        let cfg = DetectorConfig {
            statistics: vec![StatisticId::Tp],
            ..DetectorConfig::default()
        };
        let report = detect(&net, &cfg).unwrap();
        assert_eq!(report.get(StatisticId::Tp).unwrap().flagged_times(), vec![6]);

        let learning: Vec<i64> = (0..12).filter(|&t| t != 6).collect();
        let cfg = DetectorConfig {
            statistics: vec![StatisticId::Tp],
            null_policy: NullPolicy::LearningWindow(learning),
            ..DetectorConfig::default()
        };
        let report = detect(&net, &cfg).unwrap();
        assert_eq!(report.get(StatisticId::Tp).unwrap().flagged_times(), vec![6]);

        // constant series is degenerate
        w.iter_mut().for_each(|x| *x = 2);
        let err = detect(&triangle_stream(&w), &cfg).unwrap_err();
        assert!(matches!(err, Error::DegenerateNull { ref statistic, .. } if statistic == "TP"));
    }

    #[test]
    fn delta_learning_window_must_have_predecessor() {
        let net = triangle_stream(&[2, 3, 2, 3, 2]);
        let cfg = DetectorConfig {
            statistics: vec![StatisticId::Ms],
            null_policy: NullPolicy::LearningWindow(vec![0, 1, 2]),
            ..DetectorConfig::default()
        };
        assert!(matches!(detect(&net, &cfg), Err(Error::Config(_))));
    }

    #[test]
    fn empty_snapshot_policies() {
        let mut snaps: Vec<Snapshot> = triangle_stream(&[2, 3, 2, 3, 2, 4, 2])
            .snapshots()
            .to_vec();
        snaps[3] = Snapshot::empty(3, 4);
        let net = DynamicNetwork::new(4, snaps).unwrap();
        let mut cfg = DetectorConfig {
            statistics: vec![StatisticId::Ms],
            ..DetectorConfig::default()
        };
        assert!(matches!(detect(&net, &cfg), Err(Error::EmptySnapshot { .. })));
        cfg.empty_snapshot_policy = EmptySnapshotPolicy::Skip;
        let rep = detect(&net, &cfg).unwrap();
        let pts = &rep.statistics[0].points;
        assert_eq!(pts[0], PointResult::Undefined { t: 0 });
        assert_eq!(pts[3], PointResult::Skipped { t: 3 });
        assert_eq!(pts[4], PointResult::Skipped { t: 4 });
        assert!(matches!(pts[5], PointResult::Scored { .. }));
    }

    #[test]
    fn loo_excludes_test_point() {
        // With detrend none, LOO thresholds for point t come from the other values only.
        let net = triangle_stream(&[2, 3, 2, 5, 2, 3, 2, 4]);
        let cfg = DetectorConfig {
            statistics: vec![StatisticId::Tp],
            ..DetectorConfig::default()
        };
        let rep = detect(&net, &cfg).unwrap();
        let series = StatisticSeries::compute(StatisticId::Tp, &net, EmptySnapshotPolicy::Error)
            .unwrap()
            .values();
        for p in &rep.statistics[0].points {
            if let PointResult::Scored { t, phi_lower, phi_upper, .. } = *p {
                let others: Vec<f64> =
                    series.iter().filter(|(u, _)| *u != t).map(|&(_, v)| v).collect();
                let m = fit_null(&others, 0.05).unwrap();
                assert_eq!((m.phi_lower, m.phi_upper), (phi_lower, phi_upper));
            }
        }
    }
}
