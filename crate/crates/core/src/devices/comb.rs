use serde::{Deserialize, Serialize};

use super::{require, DeviceError};
use crate::units::{NM, SPEED_OF_LIGHT};

/// Axis along which carriers are equally spaced.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GridAxis {
    #[default]
    Wavelength,
    /// Equal optical-frequency spacing; `spacing` is the wavelength step at
    /// the center carrier.
    Frequency,
}

/// Static comb-source output: equal spacing, equal power per carrier.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct WdmCarrierGrid {
    pub carrier_count: usize,
    /// Meters.
    pub spacing: f64,
    /// Meters.
    pub center_wavelength: f64,
    /// Watts.
    pub power_per_carrier: f64,
    pub uniform_in: GridAxis,
}

impl Default for WdmCarrierGrid {
    fn default() -> Self {
        Self {
            carrier_count: 32,
            spacing: 0.8 * NM,
            center_wavelength: 1550.0 * NM,
            power_per_carrier: 0.5e-3,
            uniform_in: GridAxis::Wavelength,
        }
    }
}

impl WdmCarrierGrid {
    /// Frequency-uniform comb whose line spacing equals `fsr_hz`, as produced
    /// by a ring-based comb source.
    pub fn from_fsr(
        carrier_count: usize,
        center_wavelength: f64,
        fsr_hz: f64,
        power_per_carrier: f64,
    ) -> Self {
        Self {
            carrier_count,
            spacing: center_wavelength * center_wavelength * fsr_hz / SPEED_OF_LIGHT,
            center_wavelength,
            power_per_carrier,
            uniform_in: GridAxis::Frequency,
        }
    }

    pub fn validate(&self) -> Result<(), DeviceError> {
        require(self.carrier_count >= 1, || {
            "carrier_count must be >= 1".into()
        })?;
        require(self.spacing > 0.0, || "spacing must be > 0".into())?;
        require(self.center_wavelength > 0.0, || {
            "center_wavelength must be > 0".into()
        })?;
        require(self.power_per_carrier > 0.0, || {
            "power_per_carrier must be > 0".into()
        })
    }

    /// Carrier wavelengths in meters, ascending, symmetric about the center.
    pub fn carrier_wavelengths(&self) -> Vec<f64> {
        let mid = (self.carrier_count as f64 - 1.0) / 2.0;
        let offsets = (0..self.carrier_count).map(|i| i as f64 - mid);
        match self.uniform_in {
            GridAxis::Wavelength => offsets
                .map(|k| self.center_wavelength + k * self.spacing)
                .collect(),
            GridAxis::Frequency => {
                let f0 = SPEED_OF_LIGHT / self.center_wavelength;
                let df = self.frequency_spacing();
                // Descending frequency gives ascending wavelength.
                offsets.map(|k| SPEED_OF_LIGHT / (f0 - k * df)).collect()
            }
        }
    }

    /// Line spacing in Hz evaluated at the center wavelength.
    pub fn frequency_spacing(&self) -> f64 {
        SPEED_OF_LIGHT * self.spacing / (self.center_wavelength * self.center_wavelength)
    }

    pub fn total_power(&self) -> f64 {
        self.carrier_count as f64 * self.power_per_carrier
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn default_grid_span() {
        let w = WdmCarrierGrid::default().carrier_wavelengths();
        assert_eq!(w.len(), 32);
        assert_abs_diff_eq!(w[0], 1537.6 * NM, epsilon = 1e-15);
        assert_abs_diff_eq!(w[31], 1562.4 * NM, epsilon = 1e-15);
        for pair in w.windows(2) {
            assert_abs_diff_eq!(pair[1] - pair[0], 0.8 * NM, epsilon = 1e-16);
        }
    }

    #[test]
    fn single_carrier_sits_at_center() {
        let g = WdmCarrierGrid {
            carrier_count: 1,
            ..Default::default()
        };
        assert_eq!(g.carrier_wavelengths(), vec![1550.0 * NM]);
    }

    #[test]
    fn one_nm_spacing_spans_31_nm() {
        let g = WdmCarrierGrid {
            spacing: 1.0 * NM,
            ..Default::default()
        };
        let w = g.carrier_wavelengths();
        assert_abs_diff_eq!(w[31] - w[0], 31.0 * NM, epsilon = 1e-15);
    }

    #[test]
    fn frequency_grid_has_equal_frequency_steps() {
        let g = WdmCarrierGrid::from_fsr(32, 1550.0 * NM, 100e9, 0.5e-3);
        let f: Vec<f64> = g
            .carrier_wavelengths()
            .iter()
            .map(|l| SPEED_OF_LIGHT / l)
            .collect();
        for pair in f.windows(2) {
            assert_abs_diff_eq!(pair[0] - pair[1], 100e9, epsilon = 1e-2);
        }
        assert!((g.spacing - 0.8014 * NM).abs() < 0.001 * NM);
        assert_abs_diff_eq!(g.total_power(), 16e-3, epsilon = 1e-15);
    }
}
