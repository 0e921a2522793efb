//! Unit conversions shared by the optical models.

/// Speed of light in vacuum (m/s).
pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;

pub const NM: f64 = 1e-9;
pub const PM: f64 = 1e-12;
pub const UM: f64 = 1e-6;

/// Power ratio from an attenuation in dB (`3.0` -> ~0.5).
pub fn attenuation_to_ratio(db: f64) -> f64 {
    10f64.powf(-db / 10.0)
}

/// Attenuation in dB of a power ratio (`0.5` -> ~3.01). Zero maps to +inf.
pub fn ratio_to_attenuation(ratio: f64) -> f64 {
    -10.0 * ratio.log10()
}

pub fn dbm_to_mw(dbm: f64) -> f64 {
    10f64.powf(dbm / 10.0)
}

pub fn mw_to_dbm(mw: f64) -> f64 {
    10.0 * mw.log10()
}

/// Incoherent power sum of levels given in dB. Empty input is -inf.
pub fn power_sum_db<I: IntoIterator<Item = f64>>(levels: I) -> f64 {
    let linear: f64 = levels.into_iter().map(|l| 10f64.powf(l / 10.0)).sum();
    10.0 * linear.log10()
}
