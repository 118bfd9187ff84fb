//! Batch statistics over per-cell fit outputs: areal normalisation,
//! box-plot summaries and Pearson correlation matrices.

use alloc::collections::BTreeMap;
use alloc::string::String;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::features::{FeatureError, FeatureSet};
use crate::model::ElectrodeParams;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum BatchError {
    #[error("no records")]
    Empty,
    #[error("need at least {required} records, found {found}")]
    TooFewRecords { found: usize, required: usize },
    #[error("cell {cell_id} has no areal basis")]
    MissingArealBasis { cell_id: String },
    #[error("metric {metric:?} is not finite for cell {cell_id}")]
    MissingMetric { metric: Metric, cell_id: String },
    #[error("cell and batch ids must be non-empty")]
    EmptyId,
    #[error(transparent)]
    Feature(#[from] FeatureError),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellRecord {
    pub cell_id: String,
    pub batch_id: String,
    pub theta: ElectrodeParams,
    pub features: FeatureSet,
    /// Coated area in cm² (`n_faces × area_per_face`).
    #[serde(default)]
    pub areal_basis: Option<f64>,
}

impl CellRecord {
    pub fn new(cell_id: impl Into<String>, batch_id: impl Into<String>, theta: ElectrodeParams) -> Self {
        Self {
            cell_id: cell_id.into(),
            batch_id: batch_id.into(),
            features: FeatureSet::from_theta_unchecked(&theta),
            theta,
            areal_basis: None,
        }
    }

    pub fn with_areal_basis(mut self, cm2: f64) -> Self {
        self.areal_basis = Some(cm2);
        self
    }

    pub fn validate(&self) -> Result<(), BatchError> {
        if self.cell_id.is_empty() || self.batch_id.is_empty() {
            return Err(BatchError::EmptyId);
        }
        if let Some(b) = self.areal_basis {
            if !(b > 0.0) {
                return Err(FeatureError::InvalidArealBasis(b).into());
            }
        }
        Ok(())
    }
}

/// Ah over cm² in mAh/cm².
pub fn areal_capacity(ah: f64, basis_cm2: f64) -> f64 {
    ah * 1000.0 / basis_cm2
}

/// The record's features with their mAh/cm² variants attached.
pub fn normalize_areal(record: &CellRecord) -> Result<FeatureSet, BatchError> {
    let basis = record.areal_basis.ok_or_else(|| BatchError::MissingArealBasis {
        cell_id: record.cell_id.clone(),
    })?;
    Ok(record.features.with_areal(&record.theta, basis)?)
}

/// A per-cell scalar that can be summarised or correlated.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Metric {
    QnTilde,
    QpTilde,
    X0Tilde,
    Y0Tilde,
    X100Tilde,
    Y100Tilde,
    QFull,
    QSei,
    QLi,
    QnExcess,
    NprPractical,
    NprConventional,
    ArealQnTilde,
    ArealQpTilde,
    ArealQFull,
    ArealQSei,
    ArealQLi,
    ArealQnExcess,
}

impl Metric {
    pub const ALL: [Metric; 18] = [
        Metric::QnTilde,
        Metric::QpTilde,
        Metric::X0Tilde,
        Metric::Y0Tilde,
        Metric::X100Tilde,
        Metric::Y100Tilde,
        Metric::QFull,
        Metric::QSei,
        Metric::QLi,
        Metric::QnExcess,
        Metric::NprPractical,
        Metric::NprConventional,
        Metric::ArealQnTilde,
        Metric::ArealQpTilde,
        Metric::ArealQFull,
        Metric::ArealQSei,
        Metric::ArealQLi,
        Metric::ArealQnExcess,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Metric::QnTilde => "qn_tilde",
            Metric::QpTilde => "qp_tilde",
            Metric::X0Tilde => "x0_tilde",
            Metric::Y0Tilde => "y0_tilde",
            Metric::X100Tilde => "x100_tilde",
            Metric::Y100Tilde => "y100_tilde",
            Metric::QFull => "q_full",
            Metric::QSei => "q_sei",
            Metric::QLi => "q_li",
            Metric::QnExcess => "qn_excess",
            Metric::NprPractical => "npr_practical",
            Metric::NprConventional => "npr_conventional",
            Metric::ArealQnTilde => "areal_qn_tilde",
            Metric::ArealQpTilde => "areal_qp_tilde",
            Metric::ArealQFull => "areal_q_full",
            Metric::ArealQSei => "areal_q_sei",
            Metric::ArealQLi => "areal_q_li",
            Metric::ArealQnExcess => "areal_qn_excess",
        }
    }

    pub fn from_name(name: &str) -> Option<Metric> {
        Metric::ALL.iter().copied().find(|m| m.name() == name)
    }

    pub fn is_areal(self) -> bool {
        matches!(
            self,
            Metric::ArealQnTilde
                | Metric::ArealQpTilde
                | Metric::ArealQFull
                | Metric::ArealQSei
                | Metric::ArealQLi
                | Metric::ArealQnExcess
        )
    }

    pub fn value(self, r: &CellRecord) -> Result<f64, BatchError> {
        let f = &r.features;
        let areal = |ah: f64| -> Result<f64, BatchError> {
            r.areal_basis
                .map(|b| areal_capacity(ah, b))
                .ok_or_else(|| BatchError::MissingArealBasis {
                    cell_id: r.cell_id.clone(),
                })
        };
        let v = match self {
            Metric::QnTilde => r.theta.qn_tilde,
            Metric::QpTilde => r.theta.qp_tilde,
            Metric::X0Tilde => r.theta.x0_tilde,
            Metric::Y0Tilde => r.theta.y0_tilde,
            Metric::X100Tilde => f.x100_tilde,
            Metric::Y100Tilde => f.y100_tilde,
            Metric::QFull => f.q_full,
            Metric::QSei => f.q_sei,
            Metric::QLi => f.q_li,
            Metric::QnExcess => f.qn_excess,
            Metric::NprPractical => f.npr_practical,
            Metric::NprConventional => f.npr_conventional,
            Metric::ArealQnTilde => areal(r.theta.qn_tilde)?,
            Metric::ArealQpTilde => areal(r.theta.qp_tilde)?,
            Metric::ArealQFull => areal(f.q_full)?,
            Metric::ArealQSei => areal(f.q_sei)?,
            Metric::ArealQLi => areal(f.q_li)?,
            Metric::ArealQnExcess => areal(f.qn_excess)?,
        };
        if v.is_finite() {
            Ok(v)
        } else {
            Err(BatchError::MissingMetric {
                metric: self,
                cell_id: r.cell_id.clone(),
            })
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BatchSummary {
    pub metric: Metric,
    pub count: usize,
    pub mean: f64,
    /// Sample standard deviation; `None` for a single record.
    pub std: Option<f64>,
    pub min: f64,
    pub q1: f64,
    pub median: f64,
    pub q3: f64,
    pub max: f64,
}

/// Quantile by linear interpolation between the closest order statistics
/// of a sorted sample (position `p·(n - 1)`).
pub fn quantile(sorted: &[f64], p: f64) -> f64 {
    let n = sorted.len();
    if n == 1 {
        return sorted[0];
    }
    let h = p * (n - 1) as f64;
    let i = libm::floor(h) as usize;
    if i + 1 >= n {
        return sorted[n - 1];
    }
    let frac = h - i as f64;
    sorted[i] + frac * (sorted[i + 1] - sorted[i])
}

pub fn summarize_values(metric: Metric, values: &[f64]) -> Result<BatchSummary, BatchError> {
    let n = values.len();
    if n == 0 {
        return Err(BatchError::Empty);
    }
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    let mean = sorted.iter().sum::<f64>() / n as f64;
    let std = (n > 1).then(|| {
        let ss: f64 = sorted.iter().map(|v| (v - mean) * (v - mean)).sum();
        libm::sqrt(ss / (n - 1) as f64)
    });
    Ok(BatchSummary {
        metric,
        count: n,
        mean,
        std,
        min: sorted[0],
        q1: quantile(&sorted, 0.25),
        median: quantile(&sorted, 0.5),
        q3: quantile(&sorted, 0.75),
        max: sorted[n - 1],
    })
}

pub fn summarize(records: &[CellRecord], metric: Metric) -> Result<BatchSummary, BatchError> {
    let values = records
        .iter()
        .map(|r| metric.value(r))
        .collect::<Result<Vec<_>, _>>()?;
    summarize_values(metric, &values)
}

/// One summary per `batch_id`, keyed in sorted order.
pub fn summarize_by_batch(
    records: &[CellRecord],
    metric: Metric,
) -> Result<BTreeMap<String, BatchSummary>, BatchError> {
    if records.is_empty() {
        return Err(BatchError::Empty);
    }
    let mut groups: BTreeMap<String, Vec<f64>> = BTreeMap::new();
    for r in records {
        groups.entry(r.batch_id.clone()).or_default().push(metric.value(r)?);
    }
    groups
        .into_iter()
        .map(|(k, v)| Ok((k, summarize_values(metric, &v)?)))
        .collect()
}

/// Pearson correlation; `None` when either sample has zero variance.
pub fn pearson(x: &[f64], y: &[f64]) -> Option<f64> {
    let n = x.len().min(y.len());
    let constant = |v: &[f64]| v.iter().all(|a| *a == v[0]);
    if n < 2 || constant(&x[..n]) || constant(&y[..n]) {
        return None;
    }
    let mx = x[..n].iter().sum::<f64>() / n as f64;
    let my = y[..n].iter().sum::<f64>() / n as f64;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for i in 0..n {
        let dx = x[i] - mx;
        let dy = y[i] - my;
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    if sxx == 0.0 || syy == 0.0 {
        return None;
    }
    Some((sxy / libm::sqrt(sxx * syy)).clamp(-1.0, 1.0))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorrelationMatrix {
    pub metrics: Vec<Metric>,
    /// Row-major; `None` where a metric has zero variance.
    pub values: Vec<Vec<Option<f64>>>,
}

impl CorrelationMatrix {
    pub fn get(&self, i: usize, j: usize) -> Option<f64> {
        self.values[i][j]
    }

    /// Metrics whose correlations are undefined.
    pub fn degenerate(&self) -> Vec<Metric> {
        (0..self.metrics.len())
            .filter(|&i| self.values[i][i].is_none())
            .map(|i| self.metrics[i])
            .collect()
    }
}

pub fn correlate(records: &[CellRecord], metrics: &[Metric]) -> Result<CorrelationMatrix, BatchError> {
    if records.len() < 3 {
        return Err(BatchError::TooFewRecords {
            found: records.len(),
            required: 3,
        });
    }
    let columns = metrics
        .iter()
        .map(|m| records.iter().map(|r| m.value(r)).collect::<Result<Vec<_>, _>>())
        .collect::<Result<Vec<_>, _>>()?;
    let k = metrics.len();
    let mut values = alloc::vec![alloc::vec![None; k]; k];
    for i in 0..k {
        let var_i = pearson(&columns[i], &columns[i]).is_some();
        for j in i..k {
            let r = if i == j {
                var_i.then_some(1.0)
            } else {
                pearson(&columns[i], &columns[j])
            };
            values[i][j] = r;
            values[j][i] = r;
        }
    }
    Ok(CorrelationMatrix {
        metrics: metrics.to_vec(),
        values,
    })
}
