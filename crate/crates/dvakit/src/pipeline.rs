//! Single-file pipeline steps shared by the CLI and tests.

use std::path::Path;

use dvakit_core::batch::CellRecord;
use dvakit_core::fitting::fit;
use dvakit_core::{CapacityUnit, FeatureSet, FitResult};

use crate::config::{hash_file, LoadedConfig};
use crate::csv_io::parse_full_cell_file;
use crate::error::ToolError;
use crate::report::{
    ConfigEcho, DesignFeatures, FitDiagnostics, InputFile, Provenance, Report, SCHEMA_VERSION,
    TOOLKIT_VERSION,
};

/// Ids for a report; unset fields fall back to file metadata, then to the
/// configuration, then to the file stem / `"default"`.
#[derive(Debug, Clone, Default)]
pub struct Ids {
    pub cell_id: Option<String>,
    pub batch_id: Option<String>,
}

/// Features for `theta`, with areal values attached when a basis applies.
pub fn features_for(
    theta: &dvakit_core::ElectrodeParams,
    areal_basis_cm2: Option<f64>,
) -> Result<FeatureSet, ToolError> {
    let f = FeatureSet::from_theta_unchecked(theta);
    match (theta.unit, areal_basis_cm2) {
        (CapacityUnit::AmpHour, Some(b)) => Ok(f.with_areal(theta, b)?),
        _ => Ok(f),
    }
}

/// Parses, fits and reports one full-cell file. A fit that does not
/// converge still yields a report; see [`report_status`].
pub fn fit_file(cfg: &LoadedConfig, input: &Path, ids: &Ids) -> Result<(Report, FitResult), ToolError> {
    let file = parse_full_cell_file(input)?;
    let series = &file.series;
    let c = &cfg.config;
    let result = fit(series, &cfg.u_pos, &cfg.u_neg, &c.fit)?;

    // areal series are already per cm²
    let basis = match series.meta().unit {
        CapacityUnit::AmpHour => c.areal_basis_cm2(),
        CapacityUnit::MilliAmpHourPerCm2 => None,
    };
    let features = features_for(&result.theta, basis)?;
    let design = c
        .design
        .as_ref()
        .map(|d| DesignFeatures::compute(d, &result.theta, basis))
        .transpose()?;

    let mut warnings = cfg.direction_warnings(series.meta());
    if features.q_sei_anomaly {
        warnings.push("negative q_sei".into());
    }
    if features.qn_excess_anomaly {
        warnings.push("negative qn_excess".into());
    }
    if !result.converged {
        warnings.push("fit did not converge".into());
    }

    let stem = input
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "cell".into());
    let cell_id = ids
        .cell_id
        .clone()
        .or_else(|| file.metadata.get("cell_id").cloned())
        .unwrap_or(stem);
    let batch_id = ids
        .batch_id
        .clone()
        .or_else(|| file.metadata.get("batch_id").cloned())
        .or_else(|| c.batch_id.clone())
        .unwrap_or_else(|| "default".into());

    let report = Report {
        schema_version: SCHEMA_VERSION.into(),
        toolkit_version: TOOLKIT_VERSION.into(),
        cell_id,
        batch_id,
        seed: c.fit.seed,
        provenance: Provenance {
            inputs: vec![
                InputFile {
                    role: "full_cell".into(),
                    path: input.display().to_string(),
                    sha256: hash_file(input)?,
                },
                InputFile {
                    role: "positive_reference".into(),
                    path: cfg.positive_path.display().to_string(),
                    sha256: cfg.positive_sha256.clone(),
                },
                InputFile {
                    role: "negative_reference".into(),
                    path: cfg.negative_path.display().to_string(),
                    sha256: cfg.negative_sha256.clone(),
                },
            ],
            config: Some(ConfigEcho {
                path: cfg.path.display().to_string(),
                sha256: cfg.sha256.clone(),
                text: cfg.text.clone(),
            }),
        },
        theta: result.theta,
        features,
        areal_basis_cm2: basis,
        design,
        fit: FitDiagnostics::from_result(&result),
        warnings,
    };
    Ok((report, result))
}

/// The error a finished report maps to, if any: infeasible parameters
/// before plain non-convergence.
pub fn report_status(r: &Report) -> Option<ToolError> {
    if r.fit.converged {
        return None;
    }
    let what = format!("cell {}", r.cell_id);
    if !r.theta.is_feasible() {
        Some(ToolError::Infeasible(format!("{what}: fitted parameters are infeasible")))
    } else {
        Some(ToolError::NonConvergence(format!("{what}: fit did not converge")))
    }
}

/// The batch-statistics view of a report.
pub fn cell_record(r: &Report) -> CellRecord {
    let mut rec = CellRecord::new(r.cell_id.clone(), r.batch_id.clone(), r.theta);
    rec.features = r.features;
    rec.areal_basis = r.areal_basis_cm2;
    rec
}
