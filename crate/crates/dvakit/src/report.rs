//! Per-cell report documents.

use dvakit_core::features::{
    npr_theoretical, observed_fraction, theoretical_capacity, ObservedFraction, TheoreticalCapacity,
};
use dvakit_core::fitting::StartRecord;
use dvakit_core::{CapacityUnit, ElectrodeParams, FeatureSet, FitResult};
use serde::{Deserialize, Serialize};

use crate::config::DesignPair;
use crate::error::ToolError;
use crate::json::to_canonical_string;

pub const SCHEMA_VERSION: &str = "dvakit.report/1";
pub const TOOLKIT_VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InputFile {
    pub role: String,
    pub path: String,
    pub sha256: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigEcho {
    pub path: String,
    pub sha256: String,
    /// Verbatim file contents.
    pub text: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Provenance {
    pub inputs: Vec<InputFile>,
    pub config: Option<ConfigEcho>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FitDiagnostics {
    pub converged: bool,
    pub objective: f64,
    pub rmse_voltage: f64,
    pub rmse_dvdq: f64,
    pub iterations: usize,
    pub lambda: f64,
    pub resample_points: usize,
    pub starts: Vec<StartRecord>,
}

impl FitDiagnostics {
    pub fn from_result(r: &FitResult) -> Self {
        Self {
            converged: r.converged,
            objective: r.objective,
            rmse_voltage: r.rmse_voltage,
            rmse_dvdq: r.rmse_dvdq,
            iterations: r.iterations,
            lambda: r.residual_series.lambda,
            resample_points: r.residual_series.q.len(),
            starts: r.start_records.clone(),
        }
    }
}

/// Design-based quantities and, when an areal capacity is known, the
/// share of the theoretical capacity the fit observed.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DesignFeatures {
    pub positive: TheoreticalCapacity,
    pub negative: TheoreticalCapacity,
    pub npr_theoretical: f64,
    pub observed_fraction: Option<ObservedFraction>,
}

impl DesignFeatures {
    /// `areal_basis_cm2` converts Ah parameters to mAh/cm² for the observed
    /// fraction; areal parameters are used as they are.
    pub fn compute(
        d: &DesignPair,
        theta: &ElectrodeParams,
        areal_basis_cm2: Option<f64>,
    ) -> Result<Self, ToolError> {
        let areal_theta = match (theta.unit, areal_basis_cm2) {
            (CapacityUnit::MilliAmpHourPerCm2, _) => Some(*theta),
            (CapacityUnit::AmpHour, Some(b)) => Some(ElectrodeParams {
                unit: CapacityUnit::MilliAmpHourPerCm2,
                ..theta.scaled(1000.0 / b)
            }),
            (CapacityUnit::AmpHour, None) => None,
        };
        Ok(Self {
            positive: theoretical_capacity(&d.positive)?,
            negative: theoretical_capacity(&d.negative)?,
            npr_theoretical: npr_theoretical(&d.positive, &d.negative)?,
            observed_fraction: areal_theta
                .map(|t| observed_fraction(&t, &d.positive, &d.negative))
                .transpose()?,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Report {
    pub schema_version: String,
    pub toolkit_version: String,
    pub cell_id: String,
    pub batch_id: String,
    pub seed: u64,
    pub provenance: Provenance,
    pub theta: ElectrodeParams,
    pub features: FeatureSet,
    pub areal_basis_cm2: Option<f64>,
    pub design: Option<DesignFeatures>,
    pub fit: FitDiagnostics,
    pub warnings: Vec<String>,
}

impl Report {
    pub fn to_json(&self) -> Result<String, ToolError> {
        to_canonical_string(self).map_err(|e| ToolError::Input(format!("report: {e}")))
    }

    pub fn from_json(text: &str) -> Result<Self, ToolError> {
        let r: Report =
            serde_json::from_str(text).map_err(|e| ToolError::Input(format!("report: {e}")))?;
        if r.schema_version != SCHEMA_VERSION {
            return Err(ToolError::Input(format!(
                "report schema {} is not {SCHEMA_VERSION}",
                r.schema_version
            )));
        }
        Ok(r)
    }

    pub fn load(path: &std::path::Path) -> Result<Self, ToolError> {
        let text = std::fs::read_to_string(path).map_err(|e| ToolError::io(path, e))?;
        Self::from_json(&text).map_err(|e| match e {
            ToolError::Input(m) => ToolError::Input(format!("{}: {m}", path.display())),
            other => other,
        })
    }
}
