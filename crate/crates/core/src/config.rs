//! JSON run configuration.
//!
//! Every section is optional except `panel`; missing fields take their
//! defaults. Unknown keys are rejected, and every error names the offending
//! path (for example `panel.rows`).

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::budget::BudgetInput;
use crate::devices::{Photodetector, SrnMaterial, WdmCarrierGrid};
use crate::route::LossParams;
use crate::sim::{SimConfig, WorkloadParams};
use crate::topology::PanelSpec;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ConfigError {
    #[error("syntax error at line {line}, column {column}: {message}")]
    Syntax {
        line: usize,
        column: usize,
        message: String,
    },
    #[error("unknown key at `{path}`: {message}")]
    UnknownKey { path: String, message: String },
    #[error("invalid value at `{path}`: {message}")]
    InvalidValue { path: String, message: String },
    #[error("out-of-range value at `{path}`: {message}")]
    OutOfRange { path: String, message: String },
}

impl ConfigError {
    pub fn path(&self) -> Option<&str> {
        match self {
            ConfigError::Syntax { .. } => None,
            ConfigError::UnknownKey { path, .. }
            | ConfigError::InvalidValue { path, .. }
            | ConfigError::OutOfRange { path, .. } => Some(path),
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OutputFormat {
    #[default]
    Table,
    Json,
    Csv,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DeviceParams {
    pub detector: Photodetector,
    pub material: SrnMaterial,
    pub comb: WdmCarrierGrid,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub panel: PanelSpec,
    #[serde(default)]
    pub loss: LossParams,
    #[serde(default)]
    pub devices: DeviceParams,
    #[serde(default)]
    pub workload: WorkloadParams,
    #[serde(default)]
    pub sim: SimConfig,
    /// Custom link classes for `budget`.
    #[serde(default)]
    pub budget: Option<BudgetInput>,
    #[serde(default)]
    pub format: OutputFormat,
    #[serde(default)]
    pub seed: Option<u64>,
}

impl RunConfig {
    pub fn with_panel(panel: PanelSpec) -> Self {
        Self {
            panel,
            loss: LossParams::default(),
            devices: DeviceParams::default(),
            workload: WorkloadParams::default(),
            sim: SimConfig::default(),
            budget: None,
            format: OutputFormat::default(),
            seed: None,
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }
}

pub fn parse_config(text: &str) -> Result<RunConfig, ConfigError> {
    let de = &mut serde_json::Deserializer::from_str(text);
    let cfg: RunConfig = serde_path_to_error::deserialize(de).map_err(|err| {
        let path = err.path().to_string();
        let inner = err.into_inner();
        if inner.is_syntax() || inner.is_eof() {
            ConfigError::Syntax {
                line: inner.line(),
                column: inner.column(),
                message: inner.to_string(),
            }
        } else if inner.to_string().starts_with("unknown field") {
            ConfigError::UnknownKey {
                path,
                message: inner.to_string(),
            }
        } else {
            ConfigError::InvalidValue {
                path,
                message: inner.to_string(),
            }
        }
    })?;
    validate(&cfg)?;
    Ok(cfg)
}

fn check(ok: bool, path: &str, message: &str) -> Result<(), ConfigError> {
    if ok {
        Ok(())
    } else {
        Err(ConfigError::OutOfRange {
            path: path.to_owned(),
            message: message.to_owned(),
        })
    }
}

fn positive(v: f64, path: &str) -> Result<(), ConfigError> {
    check(v > 0.0 && v.is_finite(), path, "must be finite and > 0")
}

fn non_negative(v: f64, path: &str) -> Result<(), ConfigError> {
    check(v >= 0.0 && v.is_finite(), path, "must be finite and >= 0")
}

fn unit_interval(v: f64, path: &str) -> Result<(), ConfigError> {
    check((0.0..=1.0).contains(&v), path, "must be in [0, 1]")
}

/// Range checks, in document order; the first failure is reported.
pub fn validate(cfg: &RunConfig) -> Result<(), ConfigError> {
    let p = &cfg.panel;
    check(p.rows >= 1, "panel.rows", "must be >= 1")?;
    check(p.cols >= 1, "panel.cols", "must be >= 1")?;
    check(p.wg_per_bundle >= 1, "panel.wg_per_bundle", "must be >= 1")?;
    check(
        p.lambdas_per_wg >= 1,
        "panel.lambdas_per_wg",
        "must be >= 1",
    )?;
    for (i, m) in p.masked.iter().enumerate() {
        check(
            m.row < p.rows && m.col < p.cols,
            &format!("panel.masked[{i}]"),
            "tile outside the panel",
        )?;
    }

    let l = &cfg.loss;
    let sw = &l.switch;
    non_negative(sw.drop_on_db, "loss.switch.drop_on_db")?;
    non_negative(sw.thru_off_db, "loss.switch.thru_off_db")?;
    check(
        sw.thru_on_isolation_db >= 0.0,
        "loss.switch.thru_on_isolation_db",
        "must be >= 0",
    )?;
    check(
        sw.drop_off_isolation_db >= 0.0,
        "loss.switch.drop_off_isolation_db",
        "must be >= 0",
    )?;
    non_negative(l.fixed_loss_db, "loss.fixed_loss_db")?;
    non_negative(l.db_per_cm, "loss.db_per_cm")?;
    non_negative(l.tile_pitch_mm, "loss.tile_pitch_mm")?;

    let d = &cfg.devices;
    positive(d.detector.responsivity, "devices.detector.responsivity")?;
    check(
        d.detector.sensitivity_dbm.is_finite(),
        "devices.detector.sensitivity_dbm",
        "must be finite",
    )?;
    check(
        d.material.validate().is_ok(),
        "devices.material",
        "invalid material constants",
    )?;
    check(
        d.comb.validate().is_ok(),
        "devices.comb",
        "invalid carrier grid",
    )?;

    let w = &cfg.workload;
    non_negative(w.rate, "workload.rate")?;
    unit_interval(w.nearby_fraction, "workload.nearby_fraction")?;
    unit_interval(w.xpu_duty, "workload.xpu_duty")?;
    check(
        w.mean_size_bits >= 1.0 && w.mean_size_bits.is_finite(),
        "workload.mean_size_bits",
        "must be >= 1",
    )?;

    let s = &cfg.sim;
    positive(s.rate_gbps, "sim.rate_gbps")?;
    positive(s.slot_seconds, "sim.slot_seconds")?;
    non_negative(s.power_per_carrier_w, "sim.power_per_carrier_w")?;
    check(
        s.plan.wg_index < p.wg_per_bundle,
        "sim.plan.wg_index",
        "must be below panel.wg_per_bundle",
    )?;

    if let Some(b) = &cfg.budget {
        check(!b.classes.is_empty(), "budget.classes", "must be nonempty")?;
        non_negative(b.carrier_power_w, "budget.carrier_power_w")?;
        for (i, c) in b.classes.iter().enumerate() {
            let at = |f: &str| format!("budget.classes[{i}].{f}");
            check(c.link_count > 0, &at("link_count"), "must be > 0")?;
            positive(c.rate_gbps, &at("rate_gbps"))?;
            positive(c.energy_pj_per_bit, &at("energy_pj_per_bit"))?;
            non_negative(c.area_mm2_per_link, &at("area_mm2_per_link"))?;
            non_negative(c.reach_mm, &at("reach_mm"))?;
            if let crate::budget::Wiring::Wg { links_per_wire } = c.wiring {
                check(
                    links_per_wire > 0,
                    &at("wiring.links_per_wire"),
                    "must be > 0",
                )?;
            }
        }
    }
    Ok(())
}
