use std::fs;
use std::path::{Path, PathBuf};

use dvakit_core::features::DesignParams;
use dvakit_core::{FitConfig, ReferencePotentialCurve, SeriesMeta};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::csv_io::{parse_reference, sweep_name};
use crate::error::ToolError;

/// Coated area used to turn Ah into mAh/cm².
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ArealSpec {
    pub n_faces: u32,
    pub area_per_face_cm2: f64,
}

impl ArealSpec {
    pub fn basis_cm2(&self) -> f64 {
        self.n_faces as f64 * self.area_per_face_cm2
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DesignPair {
    pub positive: DesignParams,
    pub negative: DesignParams,
}

/// The toolkit configuration file. Relative paths resolve against the
/// directory holding the file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ToolkitConfig {
    pub positive_reference: PathBuf,
    pub negative_reference: PathBuf,
    #[serde(default)]
    pub fit: FitConfig,
    /// When absent the positive electrode's design area is used, if given.
    #[serde(default)]
    pub areal: Option<ArealSpec>,
    #[serde(default)]
    pub design: Option<DesignPair>,
    #[serde(default = "default_output_dir")]
    pub output_dir: PathBuf,
    #[serde(default)]
    pub batch_id: Option<String>,
}

fn default_output_dir() -> PathBuf {
    PathBuf::from("out")
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    format!("{:x}", Sha256::digest(bytes))
}

pub fn hash_file(path: &Path) -> Result<String, ToolError> {
    fs::read(path).map(|b| sha256_hex(&b)).map_err(|e| ToolError::io(path, e))
}

impl ToolkitConfig {
    pub fn validate(&self) -> Result<(), ToolError> {
        self.fit.validate()?;
        if let Some(a) = &self.areal {
            if a.n_faces == 0 || !(a.area_per_face_cm2 > 0.0) {
                return Err(ToolError::Config(format!("invalid areal basis {a:?}")));
            }
        }
        if let Some(d) = &self.design {
            d.positive.validate()?;
            d.negative.validate()?;
        }
        Ok(())
    }

    /// Coated area in cm², from `areal` or else the positive design.
    pub fn areal_basis_cm2(&self) -> Option<f64> {
        self.areal
            .map(|a| a.basis_cm2())
            .or_else(|| self.design.map(|d| d.positive.areal_basis()))
    }
}

/// A validated configuration with its reference curves loaded.
#[derive(Debug, Clone)]
pub struct LoadedConfig {
    pub config: ToolkitConfig,
    pub path: PathBuf,
    /// The file exactly as read, echoed into reports.
    pub text: String,
    pub sha256: String,
    pub positive_path: PathBuf,
    pub negative_path: PathBuf,
    pub positive_sha256: String,
    pub negative_sha256: String,
    pub u_pos: ReferencePotentialCurve,
    pub u_neg: ReferencePotentialCurve,
}

impl LoadedConfig {
    pub fn load(path: &Path) -> Result<Self, ToolError> {
        let text = fs::read_to_string(path)
            .map_err(|e| ToolError::Config(format!("{}: {e}", path.display())))?;
        let config: ToolkitConfig = serde_json::from_str(&text)
            .map_err(|e| ToolError::Config(format!("{}: {e}", path.display())))?;
        config.validate().map_err(|e| e.context(&path.display().to_string()))?;
        let base = path.parent().unwrap_or(Path::new("."));
        let resolve = |p: &Path| -> Result<PathBuf, ToolError> {
            let full = base.join(p);
            if full.is_file() {
                Ok(full)
            } else {
                Err(ToolError::Config(format!(
                    "{}: reference file {} not found",
                    path.display(),
                    full.display()
                )))
            }
        };
        let positive_path = resolve(&config.positive_reference)?;
        let negative_path = resolve(&config.negative_reference)?;
        let u_pos = parse_reference(&positive_path)?;
        let u_neg = parse_reference(&negative_path)?;
        for (curve, want, p) in [
            (&u_pos, dvakit_core::ElectrodeRole::Positive, &positive_path),
            (&u_neg, dvakit_core::ElectrodeRole::Negative, &negative_path),
        ] {
            if curve.role() != want {
                return Err(ToolError::Config(format!(
                    "{}: role does not match its slot in {}",
                    p.display(),
                    path.display()
                )));
            }
        }
        Ok(Self {
            sha256: sha256_hex(text.as_bytes()),
            positive_sha256: hash_file(&positive_path)?,
            negative_sha256: hash_file(&negative_path)?,
            config,
            path: path.to_path_buf(),
            text,
            positive_path,
            negative_path,
            u_pos,
            u_neg,
        })
    }

    /// Output directory, relative to the configuration file.
    pub fn output_dir(&self) -> PathBuf {
        self.path
            .parent()
            .unwrap_or(Path::new("."))
            .join(&self.config.output_dir)
    }

    pub fn direction_warnings(&self, meta: &SeriesMeta) -> Vec<String> {
        direction_warnings(meta, &self.u_pos, &self.u_neg)
    }
}

/// Warnings for reference curves measured in the opposite current
/// direction to the full-cell data.
pub fn direction_warnings(
    meta: &SeriesMeta,
    u_pos: &ReferencePotentialCurve,
    u_neg: &ReferencePotentialCurve,
) -> Vec<String> {
    let (want_pos, want_neg) = meta.direction.matching_sweeps();
    let mut out = Vec::new();
    for (curve, want) in [(u_pos, want_pos), (u_neg, want_neg)] {
        let got = curve.meta().direction;
        if got != want {
            out.push(format!(
                "{} reference is a {} curve but the full-cell data is a {}; expected {}",
                crate::csv_io::role_name(curve.role()),
                sweep_name(got),
                crate::csv_io::direction_name(meta.direction),
                sweep_name(want),
            ));
        }
    }
    out
}
