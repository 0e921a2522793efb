//! Device-level models: add-drop resonators and their calibration, the comb
//! carrier grid, photodetection, and the nonlinear index change of
//! silicon-rich nitride under DC and AC fields.

mod comb;
mod detector;
mod nonlinear;
mod resonator;

pub use comb::{GridAxis, WdmCarrierGrid};
pub use detector::Photodetector;
pub use nonlinear::{DeltaNTerms, SrnMaterial};
pub use resonator::{
    calibrate_switch, AddDropResonator, Calibration, CalibrationSpec, Fsr, SwitchMetrics, Transfer,
    TRIM_STEP,
};

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DeviceError {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("calibration failed; best residual {residual_db:.4} dB")]
    CalibrationFailure { residual_db: f64 },
    #[error("trim target {target_m:e} m is {distance_m:e} m from the current resonance, more than one FSR ({fsr_m:e} m)")]
    TrimOutOfRange {
        target_m: f64,
        distance_m: f64,
        fsr_m: f64,
    },
    #[error("DC field {field:e} V/m exceeds breakdown field {limit:e} V/m")]
    Breakdown { field: f64, limit: f64 },
}

pub(crate) fn require(cond: bool, msg: impl FnOnce() -> String) -> Result<(), DeviceError> {
    if cond {
        Ok(())
    } else {
        Err(DeviceError::InvalidParameter(msg()))
    }
}
