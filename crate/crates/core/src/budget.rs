//! Data-link budgets of a unit interposer: bandwidth, power, area and their
//! ratios, summed over link classes plus injected comb-carrier power.
//!
//! Values are carried at full `f64` precision; rounding to printed precision
//! happens only when a report is rendered.

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum BudgetError {
    #[error("link class list is empty")]
    Empty,
    #[error("total bandwidth is zero; energy efficiency is undefined")]
    ZeroBandwidth,
    #[error("total area is zero; densities are undefined")]
    ZeroArea,
    #[error("invalid link class `{name}`: {reason}")]
    InvalidClass { name: String, reason: String },
    #[error("unknown preset `{0}`")]
    UnknownPreset(String),
}

/// Physical wiring of a link class.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Wiring {
    /// One transmission line per link.
    TlSingle,
    /// Two transmission lines per link.
    TlDiff,
    /// WDM waveguide shared by `links_per_wire` links.
    Wg { links_per_wire: u32 },
}

impl Wiring {
    pub fn wires_for(&self, links: u64) -> u64 {
        match *self {
            Wiring::TlSingle => links,
            Wiring::TlDiff => 2 * links,
            Wiring::Wg { links_per_wire } => links.div_ceil(u64::from(links_per_wire)),
        }
    }

    pub fn is_waveguide(&self) -> bool {
        matches!(self, Wiring::Wg { .. })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LinkClass {
    pub name: String,
    pub link_count: u64,
    pub rate_gbps: f64,
    pub energy_pj_per_bit: f64,
    pub area_mm2_per_link: f64,
    /// Micro-bumps per link.
    pub bumps_per_link: u32,
    /// Micro-bumps charged to this class beyond its own links.
    #[serde(default)]
    pub attributed_bumps: u64,
    /// Coarse-pitch bumps per link, counted separately from micro-bumps.
    #[serde(default)]
    pub high_pitch_bumps_per_link: u32,
    pub wiring: Wiring,
    /// A relay stage re-carries traffic already counted by another class:
    /// it costs power and area but adds no bandwidth.
    #[serde(default)]
    pub relay: bool,
    pub reach_mm: f64,
}

impl LinkClass {
    fn validate(&self) -> Result<(), BudgetError> {
        let bad = |reason: &str| {
            Err(BudgetError::InvalidClass {
                name: self.name.clone(),
                reason: reason.to_owned(),
            })
        };
        if self.link_count == 0 {
            return bad("link_count must be > 0");
        }
        if !(self.rate_gbps > 0.0) {
            return bad("rate_gbps must be > 0");
        }
        if !(self.energy_pj_per_bit > 0.0) {
            return bad("energy_pj_per_bit must be > 0");
        }
        if !(self.area_mm2_per_link >= 0.0) {
            return bad("area_mm2_per_link must be >= 0");
        }
        if let Wiring::Wg { links_per_wire: 0 } = self.wiring {
            return bad("links_per_wire must be > 0");
        }
        Ok(())
    }

    pub fn bandwidth_tbps(&self) -> f64 {
        self.link_count as f64 * self.rate_gbps / 1000.0
    }

    /// pJ/b × Tb/s = W.
    pub fn power_w(&self) -> f64 {
        self.energy_pj_per_bit * self.bandwidth_tbps()
    }

    pub fn area_mm2(&self) -> f64 {
        self.link_count as f64 * self.area_mm2_per_link
    }

    pub fn micro_bumps(&self) -> u64 {
        self.link_count * u64::from(self.bumps_per_link) + self.attributed_bumps
    }

    pub fn wires(&self) -> u64 {
        self.wiring.wires_for(self.link_count)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LinkBudgetReport {
    pub total_links: u64,
    pub total_bumps: u64,
    pub total_high_pitch_bumps: u64,
    pub total_tls: u64,
    pub total_wgs: u64,
    pub total_bandwidth_tbps: f64,
    pub carrier_power_w: f64,
    pub total_power_w: f64,
    pub total_area_mm2: f64,
    pub energy_pj_per_bit: f64,
    pub bw_density_tbps_per_mm2: f64,
    pub power_density_w_per_mm2: f64,
    pub max_reach_mm: f64,
}

impl LinkBudgetReport {
    pub fn total_wires(&self) -> u64 {
        self.total_tls + self.total_wgs
    }
}

pub fn analyze(
    classes: &[LinkClass],
    carrier_power_w: f64,
) -> Result<LinkBudgetReport, BudgetError> {
    if classes.is_empty() {
        return Err(BudgetError::Empty);
    }
    for c in classes {
        c.validate()?;
    }
    if !(carrier_power_w >= 0.0) {
        return Err(BudgetError::InvalidClass {
            name: "carrier".into(),
            reason: "carrier power must be >= 0".into(),
        });
    }
    let bandwidth: f64 = classes
        .iter()
        .filter(|c| !c.relay)
        .map(LinkClass::bandwidth_tbps)
        .sum();
    if bandwidth <= 0.0 {
        return Err(BudgetError::ZeroBandwidth);
    }
    let power: f64 = classes.iter().map(LinkClass::power_w).sum::<f64>() + carrier_power_w;
    let area: f64 = classes.iter().map(LinkClass::area_mm2).sum();
    if area <= 0.0 {
        return Err(BudgetError::ZeroArea);
    }
    let (tls, wgs) = classes.iter().fold((0, 0), |(t, w), c| {
        if c.wiring.is_waveguide() {
            (t, w + c.wires())
        } else {
            (t + c.wires(), w)
        }
    });
    Ok(LinkBudgetReport {
        total_links: classes.iter().map(|c| c.link_count).sum(),
        total_bumps: classes.iter().map(LinkClass::micro_bumps).sum(),
        total_high_pitch_bumps: classes
            .iter()
            .map(|c| c.link_count * u64::from(c.high_pitch_bumps_per_link))
            .sum(),
        total_tls: tls,
        total_wgs: wgs,
        total_bandwidth_tbps: bandwidth,
        carrier_power_w,
        total_power_w: power,
        total_area_mm2: area,
        energy_pj_per_bit: power / bandwidth,
        bw_density_tbps_per_mm2: bandwidth / area,
        power_density_w_per_mm2: power / area,
        max_reach_mm: classes.iter().map(|c| c.reach_mm).fold(0.0, f64::max),
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Preset {
    SiliconUnit,
    PhotonicUnit,
}

impl std::str::FromStr for Preset {
    type Err = BudgetError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "silicon" | "silicon_unit" => Ok(Preset::SiliconUnit),
            "photonic" | "photonic_unit" => Ok(Preset::PhotonicUnit),
            other => Err(BudgetError::UnknownPreset(other.to_owned())),
        }
    }
}

/// Link classes and injected carrier power of one configuration.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BudgetInput {
    pub classes: Vec<LinkClass>,
    pub carrier_power_w: f64,
}

impl BudgetInput {
    pub fn analyze(&self) -> Result<LinkBudgetReport, BudgetError> {
        analyze(&self.classes, self.carrier_power_w)
    }
}

/// Comb power needed to light every carrier of every waveguide class.
pub fn carrier_power_w(classes: &[LinkClass], power_per_carrier_w: f64) -> f64 {
    let carriers: u64 = classes
        .iter()
        .filter_map(|c| match c.wiring {
            Wiring::Wg { links_per_wire } => Some(c.wires() * u64::from(links_per_wire)),
            _ => None,
        })
        .sum();
    carriers as f64 * power_per_carrier_w
}

pub fn preset(which: Preset) -> BudgetInput {
    match which {
        Preset::SiliconUnit => BudgetInput {
            classes: vec![
                LinkClass {
                    name: "HBM PHY".into(),
                    link_count: 12 * 32,
                    rate_gbps: 16.0,
                    energy_pj_per_bit: 1.01,
                    area_mm2_per_link: 0.03525,
                    bumps_per_link: 1,
                    attributed_bumps: 0,
                    high_pitch_bumps_per_link: 0,
                    wiring: Wiring::TlSingle,
                    relay: false,
                    reach_mm: 1.5,
                },
                LinkClass {
                    name: "UCIe PHY".into(),
                    link_count: 2 * 112,
                    rate_gbps: 32.0,
                    energy_pj_per_bit: 0.6,
                    area_mm2_per_link: 0.0045,
                    bumps_per_link: 1,
                    attributed_bumps: 0,
                    high_pitch_bumps_per_link: 0,
                    wiring: Wiring::TlSingle,
                    relay: false,
                    reach_mm: 1.5,
                },
                LinkClass {
                    name: "XSR SerDes PHY".into(),
                    link_count: 2 * 32,
                    rate_gbps: 112.0,
                    energy_pj_per_bit: 1.1,
                    area_mm2_per_link: 0.12,
                    bumps_per_link: 0,
                    // UCIe-side micro-bumps on the two SerDes dies
                    attributed_bumps: 2 * 112,
                    high_pitch_bumps_per_link: 2,
                    wiring: Wiring::TlDiff,
                    relay: true,
                    reach_mm: 50.0,
                },
            ],
            carrier_power_w: 0.0,
        },
        Preset::PhotonicUnit => {
            let wdm = |name: &str, link_count: u64| LinkClass {
                name: name.into(),
                link_count,
                rate_gbps: 32.0,
                energy_pj_per_bit: 1.15,
                area_mm2_per_link: 0.04,
                bumps_per_link: 1,
                attributed_bumps: 0,
                high_pitch_bumps_per_link: 0,
                wiring: Wiring::Wg { links_per_wire: 32 },
                relay: false,
                reach_mm: 500.0,
            };
            let classes = vec![wdm("WDM nearby", 12 * 32), wdm("WDM far-off", 448)];
            let carrier = carrier_power_w(&classes, 0.5e-3);
            BudgetInput {
                classes,
                carrier_power_w: carrier,
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MetricComparison {
    pub metric: String,
    pub a: f64,
    pub b: f64,
    /// b / a.
    pub ratio: f64,
    /// b - a.
    pub delta: f64,
}

/// Per-metric ratio and difference of `b` against `a`.
pub fn compare(a: &LinkBudgetReport, b: &LinkBudgetReport) -> Vec<MetricComparison> {
    let pairs = [
        ("total_bumps", a.total_bumps as f64, b.total_bumps as f64),
        (
            "total_wires",
            a.total_wires() as f64,
            b.total_wires() as f64,
        ),
        (
            "total_bandwidth_tbps",
            a.total_bandwidth_tbps,
            b.total_bandwidth_tbps,
        ),
        ("total_power_w", a.total_power_w, b.total_power_w),
        ("total_area_mm2", a.total_area_mm2, b.total_area_mm2),
        (
            "energy_pj_per_bit",
            a.energy_pj_per_bit,
            b.energy_pj_per_bit,
        ),
        (
            "bw_density_tbps_per_mm2",
            a.bw_density_tbps_per_mm2,
            b.bw_density_tbps_per_mm2,
        ),
        (
            "power_density_w_per_mm2",
            a.power_density_w_per_mm2,
            b.power_density_w_per_mm2,
        ),
        ("max_reach_mm", a.max_reach_mm, b.max_reach_mm),
    ];
    pairs
        .into_iter()
        .map(|(metric, x, y)| MetricComparison {
            metric: metric.to_owned(),
            a: x,
            b: y,
            ratio: y / x,
            delta: y - x,
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn silicon_preset_counts() {
        let r = preset(Preset::SiliconUnit).analyze().unwrap();
        assert_eq!(r.total_bumps, 832);
        assert_eq!(r.total_tls, 736);
        assert_eq!(r.total_high_pitch_bumps, 128);
        assert_abs_diff_eq!(r.total_bandwidth_tbps, 13.312, epsilon = 1e-12);
        assert_abs_diff_eq!(r.total_power_w, 18.39104, epsilon = 1e-12);
        assert_abs_diff_eq!(r.total_area_mm2, 22.224, epsilon = 1e-12);
    }

    #[test]
    fn photonic_preset_counts() {
        let input = preset(Preset::PhotonicUnit);
        assert_abs_diff_eq!(input.carrier_power_w, 0.416, epsilon = 1e-15);
        let r = input.analyze().unwrap();
        assert_eq!(r.total_bumps, 832);
        assert_eq!(r.total_wgs, 26);
        assert_abs_diff_eq!(r.total_bandwidth_tbps, 26.624, epsilon = 1e-12);
        assert_abs_diff_eq!(r.total_power_w, 31.0336, epsilon = 1e-12);
    }

    #[test]
    fn unit_class() {
        let c = LinkClass {
            name: "unit".into(),
            link_count: 1,
            rate_gbps: 1.0,
            energy_pj_per_bit: 1.0,
            area_mm2_per_link: 1.0,
            bumps_per_link: 1,
            attributed_bumps: 0,
            high_pitch_bumps_per_link: 0,
            wiring: Wiring::TlSingle,
            relay: false,
            reach_mm: 1.0,
        };
        let r = analyze(std::slice::from_ref(&c), 0.0).unwrap();
        assert_abs_diff_eq!(r.total_bandwidth_tbps, 0.001, epsilon = 1e-18);
        assert_abs_diff_eq!(r.total_power_w, 0.001, epsilon = 1e-18);

        assert_eq!(analyze(&[], 0.0), Err(BudgetError::Empty));
        let relay_only = LinkClass {
            relay: true,
            ..c.clone()
        };
        assert_eq!(analyze(&[relay_only], 0.0), Err(BudgetError::ZeroBandwidth));
        let broken = LinkClass {
            rate_gbps: 0.0,
            ..c
        };
        assert!(matches!(
            analyze(&[broken], 0.0),
            Err(BudgetError::InvalidClass { .. })
        ));
    }

    #[test]
    fn compare_examples() {
        let si = preset(Preset::SiliconUnit).analyze().unwrap();
        let ph = preset(Preset::PhotonicUnit).analyze().unwrap();
        let cmp = compare(&si, &ph);
        let get = |m: &str| cmp.iter().find(|c| c.metric == m).unwrap().ratio;
        assert_abs_diff_eq!(get("total_bandwidth_tbps"), 2.0, epsilon = 1e-12);
        assert_abs_diff_eq!(get("total_wires"), 26.0 / 736.0, epsilon = 1e-12);
        assert!((get("total_wires") - 0.035).abs() < 0.001);
        assert!(compare(&si, &si)
            .iter()
            .all(|c| c.ratio == 1.0 && c.delta == 0.0));
    }

    #[test]
    fn preset_names() {
        assert_eq!("silicon".parse::<Preset>().unwrap(), Preset::SiliconUnit);
        assert_eq!("photonic".parse::<Preset>().unwrap(), Preset::PhotonicUnit);
        assert!("gallium".parse::<Preset>().is_err());
    }
}
