//! Refractive-index change from second- and third-order susceptibilities,
//! reduced to a single field axis with collinear DC and AC fields.

use serde::{Deserialize, Serialize};

use super::{require, DeviceError};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SrnMaterial {
    /// m/V.
    pub chi2: f64,
    /// m²/V².
    pub chi3: f64,
    pub base_index: f64,
    /// V/m.
    pub breakdown_field: f64,
    /// Average waveguide field per applied DC volt, (V/m)/V.
    pub field_per_volt: f64,
}

impl Default for SrnMaterial {
    fn default() -> Self {
        Self {
            chi2: 3e-12,
            chi3: 12.6e-19,
            base_index: 3.1,
            breakdown_field: 1e8,
            field_per_volt: 3e5,
        }
    }
}

/// The five index contributions and their DC / modulated sums.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DeltaNTerms {
    pub dc_chi2: f64,
    pub dc_chi3: f64,
    pub ac_chi2: f64,
    pub ac_chi3: f64,
    /// AC-DC product term of χ(3).
    pub mixed: f64,
    pub dn_dc: f64,
    pub dn_ac: f64,
}

impl SrnMaterial {
    pub fn validate(&self) -> Result<(), DeviceError> {
        require(self.base_index > 1.0, || "base_index must be > 1".into())?;
        require(self.breakdown_field > 0.0, || {
            "breakdown_field must be > 0".into()
        })?;
        require(self.field_per_volt > 0.0, || {
            "field_per_volt must be > 0".into()
        })?;
        require(self.chi2.is_finite() && self.chi3.is_finite(), || {
            "susceptibilities must be finite".into()
        })
    }

    pub fn delta_n_terms(&self, e_dc: f64, e_ac: f64) -> Result<DeltaNTerms, DeviceError> {
        require(e_dc.is_finite() && e_ac.is_finite(), || {
            "fields must be finite".into()
        })?;
        if e_dc.abs() > self.breakdown_field {
            return Err(DeviceError::Breakdown {
                field: e_dc,
                limit: self.breakdown_field,
            });
        }
        let n = self.base_index;
        let dc_chi2 = self.chi2 * e_dc / n;
        let dc_chi3 = 3.0 * self.chi3 * e_dc * e_dc / (2.0 * n);
        let ac_chi2 = self.chi2 * e_ac / n;
        let ac_chi3 = 3.0 * self.chi3 * e_ac * e_ac / (2.0 * n);
        let mixed = 3.0 * self.chi3 * e_ac * e_dc / n;
        Ok(DeltaNTerms {
            dc_chi2,
            dc_chi3,
            ac_chi2,
            ac_chi3,
            mixed,
            dn_dc: dc_chi2 + dc_chi3,
            dn_ac: ac_chi2 + ac_chi3 + mixed,
        })
    }

    /// Linear field model: V/m in the waveguide for an applied DC voltage.
    pub fn dc_field_from_voltage(&self, volts: f64) -> Result<f64, DeviceError> {
        require(volts >= 0.0, || "voltage must be >= 0".into())?;
        Ok(self.field_per_volt * volts)
    }

    pub fn breakdown_voltage(&self) -> f64 {
        self.breakdown_field / self.field_per_volt
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn mixed_term_example() {
        let m = SrnMaterial::default();
        let t = m.delta_n_terms(1e8, 1e6).unwrap();
        // 3 * 12.6e-19 * 1e6 * 1e8 / 3.1
        assert_relative_eq!(t.mixed, 1.2193548387096774e-4, max_relative = 1e-12);
    }

    #[test]
    fn pure_chi2_when_chi3_vanishes() {
        let m = SrnMaterial {
            chi3: 0.0,
            ..Default::default()
        };
        let t = m.delta_n_terms(5e7, 2e5).unwrap();
        assert_eq!(t.dn_ac, m.chi2 * 2e5 / m.base_index);
    }

    #[test]
    fn breakdown_rejected() {
        let m = SrnMaterial::default();
        assert!(matches!(
            m.delta_n_terms(2e8, 0.0),
            Err(DeviceError::Breakdown { .. })
        ));
        assert!(m.delta_n_terms(-1e8, 0.0).is_ok());
    }

    #[test]
    fn field_model() {
        let m = SrnMaterial::default();
        assert_relative_eq!(
            m.dc_field_from_voltage(5.0).unwrap(),
            1.5e6,
            max_relative = 1e-12
        );
        assert_eq!(m.dc_field_from_voltage(0.0).unwrap(), 0.0);
        assert!((m.breakdown_voltage() - 333.333).abs() < 0.01);
        assert!(m.dc_field_from_voltage(-1.0).is_err());
    }
}
