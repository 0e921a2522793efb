use serde::{Deserialize, Serialize};

use super::{require, DeviceError};
use crate::units::dbm_to_mw;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Photodetector {
    /// A/W.
    pub responsivity: f64,
    pub sensitivity_dbm: f64,
}

impl Default for Photodetector {
    fn default() -> Self {
        Self {
            responsivity: 0.8,
            sensitivity_dbm: -10.0,
        }
    }
}

impl Photodetector {
    pub fn validate(&self) -> Result<(), DeviceError> {
        require(self.responsivity > 0.0, || {
            "responsivity must be > 0".into()
        })?;
        require(self.sensitivity_dbm.is_finite(), || {
            "sensitivity_dbm must be finite".into()
        })
    }

    /// Photocurrent in amperes for an optical power in watts.
    pub fn photocurrent(&self, optical_power_w: f64) -> Result<f64, DeviceError> {
        require(optical_power_w >= 0.0, || {
            "optical power must be >= 0".into()
        })?;
        Ok(self.responsivity * optical_power_w)
    }

    pub fn sensitivity_w(&self) -> f64 {
        dbm_to_mw(self.sensitivity_dbm) * 1e-3
    }
}
