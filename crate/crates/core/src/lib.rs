//! Differential voltage analysis for battery formation diagnostics.
//!
//! The crate fits half-cell reference potential curves to a near-equilibrium
//! full-cell voltage curve and derives electrode-level features from the
//! fitted parameters:
//!
//! - [`curves`]: reference and full-cell curve types, monotone interpolation,
//!   Savitzky-Golay smoothing and differentiation, resampling.
//! - [`model`]: the forward model `V(q) = U_pos(y(q)) - U_neg(x(q))` and its
//!   analytic derivative with respect to capacity.
//! - [`fitting`]: bounded multi-start Levenberg-Marquardt on the
//!   voltage + differential-voltage objective.
//! - [`features`]: lithium lost to SEI, cyclable lithium, NPR variants,
//!   window corrections and degradation modes.
//! - [`synth`]: synthetic ground-truth generation and brute-force oracles.
//! - [`batch`]: areal normalisation and batch statistics.
//!
//! All capacities are in Ah (or mAh/cm² when a series is areal) and all
//! potentials in volts. Stoichiometries are the window-relative ("tilde")
//! values throughout.
#![no_std]

extern crate alloc;

pub mod batch;
pub mod curves;
pub mod features;
pub mod fitting;
mod linalg;
pub mod model;
pub mod synth;

pub use curves::{
    CapacityUnit, CapacityVoltageSeries, CurrentDirection, CurveError, ElectrodeRole,
    ReferenceMeta, ReferencePotentialCurve, SeriesMeta, SmoothingConfig, SweepDirection,
};
pub use features::{FeatureError, FeatureSet};
pub use fitting::{FitConfig, FitError, FitResult};
pub use model::{ElectrodeParams, ModelError};
