//! Two-coupler add-drop resonator.
//!
//! The round-trip phase is `θ(λ) = 2π·n_g·L/λ + ψ`, where the trim phase `ψ`
//! moves every resonance by the same optical frequency. `resonance_offset`
//! records that move as the wavelength shift seen at `reference_wavelength`.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use super::{require, DeviceError};
use crate::units::{ratio_to_attenuation, NM, PM, SPEED_OF_LIGHT, UM};
use crate::xbar::SwitchLossModel;

/// Resonance trimming accuracy.
pub const TRIM_STEP: f64 = 10.0 * PM;

/// Default racetrack radius used for the switch resonators.
const SWITCH_RADIUS: f64 = 133.0 * UM;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct AddDropResonator {
    /// Self-coupling amplitude of the input (add/through) coupler.
    pub self_coupling_in: f64,
    /// Self-coupling amplitude of the drop coupler.
    pub self_coupling_drop: f64,
    /// Single-pass amplitude transmission of the cavity.
    pub round_trip_amplitude: f64,
    /// Meters.
    pub round_trip_length: f64,
    pub group_index: f64,
    /// Meters, measured at `reference_wavelength`.
    pub resonance_offset: f64,
    /// Meters.
    pub reference_wavelength: f64,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Transfer {
    pub thru: f64,
    pub drop: f64,
}

impl Transfer {
    pub fn thru_db(&self) -> f64 {
        ratio_to_attenuation(self.thru)
    }

    pub fn drop_db(&self) -> f64 {
        ratio_to_attenuation(self.drop)
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Fsr {
    /// Meters.
    pub wavelength: f64,
    /// Hz.
    pub frequency: f64,
}

impl AddDropResonator {
    /// Lossless-phase resonator with no trim, referenced at 1550 nm.
    pub fn new(
        self_coupling_in: f64,
        self_coupling_drop: f64,
        round_trip_amplitude: f64,
        round_trip_length: f64,
        group_index: f64,
    ) -> Result<Self, DeviceError> {
        let r = Self {
            self_coupling_in,
            self_coupling_drop,
            round_trip_amplitude,
            round_trip_length,
            group_index,
            resonance_offset: 0.0,
            reference_wavelength: 1550.0 * NM,
        };
        r.validate()?;
        Ok(r)
    }

    pub fn validate(&self) -> Result<(), DeviceError> {
        let open_unit = |x: f64| x > 0.0 && x < 1.0;
        require(open_unit(self.self_coupling_in), || {
            "self_coupling_in must be in (0,1)".into()
        })?;
        require(open_unit(self.self_coupling_drop), || {
            "self_coupling_drop must be in (0,1)".into()
        })?;
        require(
            self.round_trip_amplitude > 0.0 && self.round_trip_amplitude <= 1.0,
            || "round_trip_amplitude must be in (0,1]".into(),
        )?;
        require(self.round_trip_length > 0.0, || {
            "round_trip_length must be > 0".into()
        })?;
        require(self.group_index > 0.0, || "group_index must be > 0".into())?;
        require(self.reference_wavelength > 0.0, || {
            "reference_wavelength must be > 0".into()
        })?;
        require(self.resonance_offset.is_finite(), || {
            "resonance_offset must be finite".into()
        })
    }

    /// `n_g·L` in meters.
    pub fn optical_length(&self) -> f64 {
        self.group_index * self.round_trip_length
    }

    fn trim_phase(&self) -> f64 {
        let ol = self.optical_length();
        let r = self.reference_wavelength;
        2.0 * PI * ol * (1.0 / r - 1.0 / (r + self.resonance_offset))
    }

    /// Round-trip phase at `wavelength`.
    pub fn phase(&self, wavelength: f64) -> f64 {
        2.0 * PI * self.optical_length() / wavelength + self.trim_phase()
    }

    pub fn transfer(&self, wavelength: f64) -> Transfer {
        self.transfer_at_phase(self.phase(wavelength))
    }

    pub fn transfer_at_phase(&self, theta: f64) -> Transfer {
        let (t1, t2, a) = (
            self.self_coupling_in,
            self.self_coupling_drop,
            self.round_trip_amplitude,
        );
        let c = theta.cos();
        let denom = 1.0 - 2.0 * t1 * t2 * a * c + (t1 * t2 * a).powi(2);
        Transfer {
            thru: (t2 * t2 * a * a - 2.0 * t1 * t2 * a * c + t1 * t1) / denom,
            drop: (1.0 - t1 * t1) * (1.0 - t2 * t2) * a / denom,
        }
    }

    pub fn fsr(&self, around_wavelength: f64) -> Fsr {
        let ol = self.optical_length();
        Fsr {
            wavelength: around_wavelength * around_wavelength / ol,
            frequency: SPEED_OF_LIGHT / ol,
        }
    }

    /// Resonance wavelength closest (in phase) to `wavelength`.
    pub fn resonance_near(&self, wavelength: f64) -> f64 {
        let order_offset = self.trim_phase() / (2.0 * PI);
        let m = (self.optical_length() / wavelength + order_offset).round();
        self.optical_length() / (m - order_offset)
    }

    pub fn current_resonance(&self) -> f64 {
        self.resonance_near(self.reference_wavelength)
    }

    /// Moves the current resonance onto `target_resonance`, with the
    /// adjustment quantized to [`TRIM_STEP`].
    pub fn trim(&self, target_resonance: f64) -> Result<Self, DeviceError> {
        require(target_resonance > 0.0, || {
            "target wavelength must be > 0".into()
        })?;
        let current = self.current_resonance();
        let fsr = self.fsr(current).wavelength;
        let distance = (target_resonance - current).abs();
        if distance > fsr {
            return Err(DeviceError::TrimOutOfRange {
                target_m: target_resonance,
                distance_m: distance,
                fsr_m: fsr,
            });
        }
        // Every resonance moves by the same frequency; express the wanted
        // frequency move as a new wavelength offset at the reference.
        let shift_hz = SPEED_OF_LIGHT / target_resonance - SPEED_OF_LIGHT / current;
        let r = self.reference_wavelength;
        let shifted_ref_hz = SPEED_OF_LIGHT / (r + self.resonance_offset) + shift_hz;
        let exact = SPEED_OF_LIGHT / shifted_ref_hz - r;
        let steps = ((exact - self.resonance_offset) / TRIM_STEP).round();
        Ok(Self {
            resonance_offset: self.resonance_offset + steps * TRIM_STEP,
            ..*self
        })
    }
}

/// Loss levels of a resonator used as a switch, as positive attenuations in
/// dB. ON is the carrier on resonance, OFF is the carrier half an FSR away.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct SwitchMetrics {
    pub on_drop_db: f64,
    pub on_thru_db: f64,
    pub off_thru_db: f64,
    pub off_drop_db: f64,
}

impl SwitchMetrics {
    pub fn of(res: &AddDropResonator) -> Self {
        let on = res.transfer_at_phase(0.0);
        let off = res.transfer_at_phase(PI);
        Self {
            on_drop_db: on.drop_db(),
            on_thru_db: on.thru_db(),
            off_thru_db: off.thru_db(),
            off_drop_db: off.drop_db(),
        }
    }

    /// Smallest slack against the three inequality targets (negative when
    /// any is violated). The ON drop level is matched exactly by the search.
    fn worst_margin(&self, targets: &SwitchLossModel) -> f64 {
        let m_on_thru = self.on_thru_db - targets.thru_on_isolation_db;
        let m_off_thru =
            targets.thru_off_db + CalibrationSpec::PASS_TOLERANCE_DB - self.off_thru_db;
        let m_off_drop = self.off_drop_db - targets.drop_off_isolation_db;
        m_on_thru.min(m_off_thru).min(m_off_drop)
    }
}

/// Search domain for [`calibrate_switch`].
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CalibrationSpec {
    pub center_wavelength: f64,
    pub round_trip_length: f64,
    pub t_min: f64,
    pub t_max: f64,
    pub t_steps: usize,
    pub a_min: f64,
    /// Upper bound on the round-trip amplitude of a lossy cavity.
    pub a_max: f64,
}

impl CalibrationSpec {
    /// Allowed excess over the nominal pass losses.
    pub const PASS_TOLERANCE_DB: f64 = 0.05;
}

impl Default for CalibrationSpec {
    fn default() -> Self {
        Self {
            center_wavelength: 1550.0 * NM,
            round_trip_length: 2.0 * PI * SWITCH_RADIUS,
            t_min: 0.5,
            t_max: 0.999,
            t_steps: 500,
            a_min: 0.9,
            a_max: 1.0 - 1e-9,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Calibration {
    pub resonator: AddDropResonator,
    pub metrics: SwitchMetrics,
}

fn on_drop_symmetric(t: f64, a: f64) -> f64 {
    let k2 = 1.0 - t * t;
    k2 * k2 * a / (1.0 - t * t * a).powi(2)
}

/// Finds a symmetric resonator (`t1 = t2`) whose ON drop matches
/// `targets.drop_on_db`, whose other three levels satisfy the targets, and
/// whose FSR matches `fsr_target_hz`. The cavity is resonant at the calibration's
/// center wavelength.
pub fn calibrate_switch(
    targets: &SwitchLossModel,
    fsr_target_hz: f64,
    spec: &CalibrationSpec,
) -> Result<Calibration, DeviceError> {
    require(fsr_target_hz > 0.0, || "fsr target must be > 0".into())?;
    require(targets.drop_on_db.is_finite(), || {
        "drop_on_db must be finite".into()
    })?;
    require(
        spec.t_min > 0.0 && spec.t_max < 1.0 && spec.t_min < spec.t_max && spec.t_steps >= 2,
        || "invalid coupling search range".into(),
    )?;
    require(
        spec.a_min > 0.0 && spec.a_min < spec.a_max && spec.a_max <= 1.0,
        || "invalid loss search range".into(),
    )?;

    // Snap the optical length to an integer number of center wavelengths so
    // the center sits exactly on a resonance.
    let order = (SPEED_OF_LIGHT / fsr_target_hz / spec.center_wavelength)
        .round()
        .max(1.0);
    let optical_length = order * spec.center_wavelength;
    let fsr_hz = SPEED_OF_LIGHT / optical_length;
    if ((fsr_hz - fsr_target_hz) / fsr_target_hz).abs() > 0.01 {
        return Err(DeviceError::CalibrationFailure {
            residual_db: f64::INFINITY,
        });
    }

    let target_drop = 10f64.powf(-targets.drop_on_db / 10.0);
    let build = |t: f64, a: f64| AddDropResonator {
        self_coupling_in: t,
        self_coupling_drop: t,
        round_trip_amplitude: a,
        round_trip_length: spec.round_trip_length,
        group_index: optical_length / spec.round_trip_length,
        resonance_offset: 0.0,
        reference_wavelength: spec.center_wavelength,
    };

    // For a fixed t, the ON drop rises monotonically with a; bisect for the
    // amplitude that matches the target exactly. Err carries the residual.
    let solve_a = |t: f64| -> Result<f64, f64> {
        let lo_val = on_drop_symmetric(t, spec.a_min);
        let hi_val = on_drop_symmetric(t, spec.a_max);
        if target_drop < lo_val {
            return Err(targets.drop_on_db - ratio_to_attenuation(lo_val));
        }
        if target_drop > hi_val {
            return Err(ratio_to_attenuation(hi_val) - targets.drop_on_db);
        }
        let (mut lo, mut hi) = (spec.a_min, spec.a_max);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if on_drop_symmetric(t, mid) < target_drop {
                lo = mid;
            } else {
                hi = mid;
            }
            if hi - lo < 1e-16 {
                break;
            }
        }
        Ok(0.5 * (lo + hi))
    };
    let score = |t: f64| -> Result<(f64, f64), f64> {
        let a = solve_a(t)?;
        Ok((SwitchMetrics::of(&build(t, a)).worst_margin(targets), a))
    };

    let dt = (spec.t_max - spec.t_min) / (spec.t_steps - 1) as f64;
    let mut best: Option<(f64, f64, f64)> = None;
    let mut best_residual = f64::INFINITY;
    for i in 0..spec.t_steps {
        let t = spec.t_min + dt * i as f64;
        match score(t) {
            Ok((margin, a)) => {
                if best.is_none_or(|(m, _, _)| margin > m) {
                    best = Some((margin, t, a));
                }
            }
            Err(residual) => best_residual = best_residual.min(residual.abs()),
        }
    }
    let Some((_, t0, _)) = best else {
        return Err(DeviceError::CalibrationFailure {
            residual_db: best_residual,
        });
    };

    // Ternary refinement of t around the best grid point.
    let mut lo = (t0 - dt).max(spec.t_min);
    let mut hi = (t0 + dt).min(spec.t_max);
    let eval = |t: f64| score(t).map(|(m, _)| m).unwrap_or(f64::NEG_INFINITY);
    for _ in 0..60 {
        let m1 = lo + (hi - lo) / 3.0;
        let m2 = hi - (hi - lo) / 3.0;
        if eval(m1) < eval(m2) {
            lo = m1;
        } else {
            hi = m2;
        }
    }
    let t_ref = 0.5 * (lo + hi);
    let (margin, t, a) = match (score(t_ref), best) {
        (Ok((m, a)), Some((mb, _, _))) if m >= mb => (m, t_ref, a),
        (_, Some(b)) => b,
        (_, None) => unreachable!(),
    };
    if margin < 0.0 {
        return Err(DeviceError::CalibrationFailure {
            residual_db: -margin,
        });
    }
    let resonator = build(t, a);
    Ok(Calibration {
        resonator,
        metrics: SwitchMetrics::of(&resonator),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::{assert_abs_diff_eq, assert_relative_eq};

    fn ring(t: f64, a: f64) -> AddDropResonator {
        AddDropResonator::new(t, t, a, 2.0 * PI * 133.0 * UM, 3.59).unwrap()
    }

    #[test]
    fn lossless_symmetric_ring_drops_everything_on_resonance() {
        let r = ring(0.9, 1.0);
        let tr = r.transfer_at_phase(2.0 * PI * 7.0);
        assert_abs_diff_eq!(tr.drop, 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(tr.thru, 0.0, epsilon = 1e-12);
    }

    #[test]
    fn anti_resonance_passes_through() {
        // Closed form at θ = π, t = 0.9, a = 1:
        // thru = (0.81 + 1.62 + 0.81) / (1 + 0.81)^2, drop = 0.0361 / 1.81^2.
        let tr = ring(0.9, 1.0).transfer_at_phase(PI);
        assert_relative_eq!(tr.thru, 3.24 / 3.2761, max_relative = 1e-12);
        assert_relative_eq!(tr.drop, 0.0361 / 3.2761, max_relative = 1e-12);
    }

    #[test]
    fn fsr_examples() {
        let r = ring(0.9, 0.99);
        let f = r.fsr(1550.0 * NM);
        assert!(
            (f.frequency - 100e9).abs() / 100e9 < 0.01,
            "{}",
            f.frequency
        );
        let doubled = AddDropResonator {
            round_trip_length: 2.0 * r.round_trip_length,
            ..r
        };
        assert_relative_eq!(
            doubled.fsr(1550.0 * NM).frequency,
            f.frequency / 2.0,
            max_relative = 1e-12
        );
        let long = AddDropResonator {
            round_trip_length: 32.0 * r.round_trip_length,
            ..r
        };
        assert_relative_eq!(
            long.fsr(1550.0 * NM).frequency,
            f.frequency / 32.0,
            max_relative = 1e-12
        );
    }

    #[test]
    fn invalid_resonators_rejected() {
        assert!(AddDropResonator::new(1.0, 0.5, 1.0, 1e-3, 3.0).is_err());
        assert!(AddDropResonator::new(0.5, 0.5, 0.0, 1e-3, 3.0).is_err());
        assert!(AddDropResonator::new(0.5, 0.5, 1.0, 0.0, 3.0).is_err());
    }

    #[test]
    fn trim_examples() {
        let r = ring(0.9, 0.99);
        let cur = r.current_resonance();
        let same = r.trim(cur).unwrap();
        assert_eq!(same.resonance_offset, r.resonance_offset);

        let target = cur + 0.4 * NM;
        let trimmed = r.trim(target).unwrap();
        let got = trimmed.resonance_near(target);
        assert!(
            (got - target).abs() <= TRIM_STEP,
            "residual {}",
            got - target
        );
        let q = trimmed.resonance_offset / TRIM_STEP;
        assert_abs_diff_eq!(q, q.round(), epsilon = 1e-6);

        let fsr = r.fsr(cur).wavelength;
        assert!(matches!(
            r.trim(cur + 2.0 * fsr),
            Err(DeviceError::TrimOutOfRange { .. })
        ));
    }

    #[test]
    fn calibration_meets_default_levels() {
        let targets = SwitchLossModel::default();
        let cal = calibrate_switch(&targets, 100e9, &CalibrationSpec::default()).unwrap();
        let m = cal.metrics;
        assert!((m.on_drop_db - 0.5).abs() <= 0.05, "{m:?}");
        assert!(m.on_thru_db >= 24.0, "{m:?}");
        assert!(m.off_thru_db <= 0.30, "{m:?}");
        assert!(m.off_drop_db >= 15.0, "{m:?}");
        let fsr = cal.resonator.fsr(1550.0 * NM).frequency;
        assert!((fsr - 100e9).abs() / 100e9 < 0.01);
        // the center wavelength is a resonance
        let on = cal.resonator.transfer(1550.0 * NM);
        assert_abs_diff_eq!(on.drop_db(), m.on_drop_db, epsilon = 1e-6);
    }

    #[test]
    fn zero_db_drop_is_infeasible_for_lossy_ring() {
        let targets = SwitchLossModel {
            drop_on_db: 0.0,
            ..Default::default()
        };
        assert!(matches!(
            calibrate_switch(&targets, 100e9, &CalibrationSpec::default()),
            Err(DeviceError::CalibrationFailure { .. })
        ));
    }

    #[test]
    fn doubled_fsr_halves_optical_length() {
        let targets = SwitchLossModel::default();
        let spec = CalibrationSpec::default();
        let a = calibrate_switch(&targets, 100e9, &spec).unwrap().resonator;
        let b = calibrate_switch(&targets, 200e9, &spec).unwrap().resonator;
        assert_relative_eq!(
            b.optical_length(),
            a.optical_length() / 2.0,
            max_relative = 1e-3
        );
    }
}
