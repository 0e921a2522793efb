//! Text rendering of reports as aligned tables, JSON, or CSV.
//!
//! JSON and CSV carry full precision and are byte-stable for identical
//! inputs; tables round each field to the precision it is usually quoted at.

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::alloc::SlotTrace;
use crate::budget::{LinkBudgetReport, MetricComparison};
use crate::config::{DeviceParams, OutputFormat};
use crate::devices::{calibrate_switch, CalibrationSpec, DeviceError, WdmCarrierGrid};
use crate::route::{LossBudget, Route};
use crate::sim::{SimReport, SweepRow};
use crate::topology::TileCoord;
use crate::units::{NM, PM};
use crate::xbar::SwitchLossModel;

fn json<T: Serialize>(v: &T) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("report serializes");
    s.push('\n');
    s
}

fn csv_cell(v: &Value) -> String {
    let raw = match v {
        Value::Null => String::new(),
        Value::String(s) => s.clone(),
        other => other.to_string(),
    };
    if raw.contains([',', '"', '\n']) {
        format!("\"{}\"", raw.replace('"', "\"\""))
    } else {
        raw
    }
}

/// Header plus one row per record; records must serialize to flat objects.
fn csv_records<T: Serialize>(records: &[T]) -> String {
    let rows: Vec<serde_json::Map<String, Value>> = records
        .iter()
        .map(
            |r| match serde_json::to_value(r).expect("report serializes") {
                Value::Object(m) => m,
                _ => unreachable!("records are structs"),
            },
        )
        .collect();
    let mut out = String::new();
    if let Some(first) = rows.first() {
        out += &first.keys().cloned().collect::<Vec<_>>().join(",");
        out.push('\n');
    }
    for row in &rows {
        out += &row.values().map(csv_cell).collect::<Vec<_>>().join(",");
        out.push('\n');
    }
    out
}

/// Fixed-point with at most `decimals` places and no trailing zeros, so
/// binary noise such as `13.312000000000001` prints as `13.312`.
fn trimmed(v: f64, decimals: usize) -> String {
    let s = format!("{v:.decimals$}");
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.').to_owned()
    } else {
        s
    }
}

fn table(rows: &[(String, String)]) -> String {
    let mut out = String::new();
    for (label, value) in rows {
        out += &format!("{label}: {value}\n");
    }
    out
}

/// One `metric,value,unit` line.
struct Metric {
    key: &'static str,
    unit: &'static str,
    label: &'static str,
    value: f64,
    decimals: usize,
}

fn budget_metrics(r: &LinkBudgetReport) -> Vec<Metric> {
    let m = |key, unit, label, value: f64, decimals| Metric {
        key,
        unit,
        label,
        value,
        decimals,
    };
    vec![
        m(
            "total_links",
            "count",
            "Total # of links",
            r.total_links as f64,
            0,
        ),
        m(
            "total_micro_bumps",
            "count",
            "Total # of micro-bumps for data links",
            r.total_bumps as f64,
            0,
        ),
        m(
            "total_high_pitch_bumps",
            "count",
            "Total # of high-pitch bumps",
            r.total_high_pitch_bumps as f64,
            0,
        ),
        m(
            "total_tls",
            "count",
            "Total # of TLs for data links",
            r.total_tls as f64,
            0,
        ),
        m(
            "total_wgs",
            "count",
            "Total # of WGs for data links",
            r.total_wgs as f64,
            0,
        ),
        m(
            "total_bandwidth",
            "Tb/s",
            "Total data bandwidth per XPU (Tb/s)",
            r.total_bandwidth_tbps,
            3,
        ),
        m(
            "carrier_power",
            "W",
            "Total WDM carrier power for data links (W)",
            r.carrier_power_w,
            3,
        ),
        m(
            "total_power",
            "W",
            "Total power of data links (W)",
            r.total_power_w,
            3,
        ),
        m(
            "total_area",
            "mm2",
            "Total area of data links (mm²)",
            r.total_area_mm2,
            3,
        ),
        m(
            "energy_efficiency",
            "pJ/b",
            "Energy efficiency of data links (pJ/b)",
            r.energy_pj_per_bit,
            2,
        ),
        m(
            "bandwidth_density",
            "Tb/s/mm2",
            "Bandwidth density of data links (Tb/s/mm²)",
            r.bw_density_tbps_per_mm2,
            2,
        ),
        m(
            "power_density",
            "W/mm2",
            "Power density of data links (W/mm²)",
            r.power_density_w_per_mm2,
            2,
        ),
        m(
            "max_reach",
            "mm",
            "Maximum far-off interconnect distance (mm)",
            r.max_reach_mm,
            0,
        ),
    ]
}

pub fn render_budget(r: &LinkBudgetReport, format: OutputFormat) -> String {
    match format {
        OutputFormat::Json => json(r),
        OutputFormat::Csv => {
            let mut out = String::from("metric,value,unit\n");
            for m in budget_metrics(r) {
                out += &format!("{},{},{}\n", m.key, trimmed(m.value, 9), m.unit);
            }
            out
        }
        OutputFormat::Table => {
            let rows: Vec<(String, String)> = budget_metrics(r)
                .into_iter()
                // zero-count rows belong to the other interposer style
                .filter(|m| m.value != 0.0 || m.decimals != 0)
                .filter(|m| m.key != "carrier_power" || m.value != 0.0)
                .map(|m| (m.label.to_owned(), format!("{:.*}", m.decimals, m.value)))
                .collect();
            table(&rows)
        }
    }
}

pub fn render_comparison(rows: &[MetricComparison], format: OutputFormat) -> String {
    match format {
        OutputFormat::Json => json(&rows),
        OutputFormat::Csv => {
            let mut out = String::from("metric,a,b,ratio,delta\n");
            for c in rows {
                let [a, b, ratio, delta] = [c.a, c.b, c.ratio, c.delta].map(|v| trimmed(v, 9));
                out += &format!(
                    "{},{a},{b},{ratio},{delta}\n",
                    csv_cell(&Value::String(c.metric.clone()))
                );
            }
            out
        }
        OutputFormat::Table => {
            let rows: Vec<(String, String)> = rows
                .iter()
                .map(|c| {
                    (
                        c.metric.clone(),
                        format!(
                            "{:.4} -> {:.4} (ratio {:.3}, delta {:+.4})",
                            c.a, c.b, c.ratio, c.delta
                        ),
                    )
                })
                .collect();
            table(&rows)
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RouteReport {
    pub src: String,
    pub dst: String,
    pub waypoints: Vec<TileCoord>,
    pub wg_index: usize,
    pub hops: usize,
    pub bypasses: usize,
    pub turns: usize,
    pub switch_loss_db: f64,
    pub propagation_loss_db: f64,
    pub fixed_loss_db: f64,
    pub total_loss_db: f64,
    pub required_carrier_dbm: f64,
    pub required_carrier_mw: f64,
}

impl RouteReport {
    pub fn new(route: &Route, budget: &LossBudget) -> Self {
        Self {
            src: route.src.clone(),
            dst: route.dst.clone(),
            waypoints: route.waypoints.clone(),
            wg_index: route.wg_index,
            hops: route.interactions.len(),
            bypasses: budget.n_bypass,
            turns: budget.n_turn,
            switch_loss_db: budget.switch_loss_db,
            propagation_loss_db: budget.propagation_loss_db,
            fixed_loss_db: budget.fixed_loss_db,
            total_loss_db: budget.total_loss_db,
            required_carrier_dbm: budget.required_carrier_dbm,
            required_carrier_mw: budget.required_carrier_mw,
        }
    }
}

pub fn render_route(r: &RouteReport, format: OutputFormat) -> String {
    match format {
        OutputFormat::Json => json(r),
        OutputFormat::Csv => {
            let path: Vec<String> = r
                .waypoints
                .iter()
                .map(|t| format!("{},{}", t.row, t.col))
                .collect();
            let flat = serde_json::json!({
                "src": r.src,
                "dst": r.dst,
                "waypoints": path.join(";"),
                "wg_index": r.wg_index,
                "hops": r.hops,
                "bypasses": r.bypasses,
                "turns": r.turns,
                "switch_loss_db": r.switch_loss_db,
                "propagation_loss_db": r.propagation_loss_db,
                "fixed_loss_db": r.fixed_loss_db,
                "total_loss_db": r.total_loss_db,
                "required_carrier_dbm": r.required_carrier_dbm,
                "required_carrier_mw": r.required_carrier_mw,
            });
            csv_records(&[flat])
        }
        OutputFormat::Table => {
            let path: Vec<String> = r
                .waypoints
                .iter()
                .map(|t| format!("({},{})", t.row, t.col))
                .collect();
            table(&[
                ("Route".into(), format!("{} -> {}", r.src, r.dst)),
                ("Waveguide index".into(), r.wg_index.to_string()),
                ("Tiles".into(), path.join(" ")),
                ("Bypasses".into(), r.bypasses.to_string()),
                ("Turns".into(), r.turns.to_string()),
                (
                    "Switch loss (dB)".into(),
                    format!("{:.2}", r.switch_loss_db),
                ),
                (
                    "Propagation loss (dB)".into(),
                    format!("{:.2}", r.propagation_loss_db),
                ),
                ("Fixed loss (dB)".into(), format!("{:.2}", r.fixed_loss_db)),
                ("Total loss (dB)".into(), format!("{:.2}", r.total_loss_db)),
                (
                    "Required carrier power (dBm)".into(),
                    format!("{:.2}", r.required_carrier_dbm),
                ),
                (
                    "Required carrier power (mW)".into(),
                    format!("{:.3}", r.required_carrier_mw),
                ),
            ])
        }
    }
}

pub fn render_slot_trace(t: &SlotTrace, format: OutputFormat) -> String {
    match format {
        OutputFormat::Json => {
            let mut s = t.to_json_line();
            s.push('\n');
            s
        }
        OutputFormat::Csv => {
            let mut out = String::from("slot,src,dst,status,turns,loss_db,reason\n");
            for g in &t.granted {
                out += &format!(
                    "{},{},{},granted,{},{},\n",
                    t.slot, g.src, g.dst, g.turns, g.loss_db
                );
            }
            for d in &t.denied {
                out += &format!(
                    "{},{},{},denied,,,{}\n",
                    t.slot,
                    d.src,
                    d.dst,
                    csv_cell(&Value::String(d.reason.clone()))
                );
            }
            out
        }
        OutputFormat::Table => {
            let mut out = format!("Slot {}\n", t.slot);
            for g in &t.granted {
                out += &format!(
                    "  granted {} -> {} ({} turns, {:.2} dB)\n",
                    g.src, g.dst, g.turns, g.loss_db
                );
            }
            for d in &t.denied {
                out += &format!("  denied  {} -> {}: {}\n", d.src, d.dst, d.reason);
            }
            out
        }
    }
}

pub fn render_sim(r: &SimReport, format: OutputFormat) -> String {
    match format {
        OutputFormat::Json => json(r),
        OutputFormat::Csv => csv_records(std::slice::from_ref(r)),
        OutputFormat::Table => {
            let mut rows = vec![
                ("Slots run".into(), r.slots_run.to_string()),
                ("Requests offered".into(), r.requests_offered.to_string()),
                ("Requests granted".into(), r.requests_granted.to_string()),
                ("Requests dropped".into(), r.requests_dropped.to_string()),
                ("Offered (bits)".into(), r.offered_bits.to_string()),
                ("Delivered (bits)".into(), r.bits_delivered.to_string()),
                ("In flight (bits)".into(), r.bits_in_flight.to_string()),
                (
                    "Blocking probability".into(),
                    format!("{:.4}", r.blocking_probability),
                ),
                (
                    "Mean wait (slots)".into(),
                    format!("{:.3}", r.mean_wait_slots),
                ),
                (
                    "Mean path loss (dB)".into(),
                    format!("{:.3}", r.mean_path_loss_db),
                ),
                (
                    "Peak concurrent routes".into(),
                    r.peak_concurrent_routes.to_string(),
                ),
                (
                    "Peak route rate (Tb/s)".into(),
                    format!("{:.3}", r.peak_route_rate_tbps),
                ),
                (
                    "Carrier energy (J)".into(),
                    format!("{:.6}", r.carrier_energy_j),
                ),
            ];
            if r.reconfig_slots > 0 {
                rows.push((
                    "Reconfiguration slots (assumed)".into(),
                    r.reconfig_slots.to_string(),
                ));
            }
            table(&rows)
        }
    }
}

#[derive(Serialize)]
struct SweepCsvRow<'a> {
    label: &'a str,
    seed: u64,
    #[serde(flatten)]
    report: &'a SimReport,
}

pub fn render_sweep(rows: &[SweepRow], format: OutputFormat) -> String {
    match format {
        OutputFormat::Json => json(&rows),
        OutputFormat::Csv => {
            let flat: Vec<SweepCsvRow> = rows
                .iter()
                .map(|r| SweepCsvRow {
                    label: &r.label,
                    seed: r.seed,
                    report: &r.report,
                })
                .collect();
            csv_records(&flat)
        }
        OutputFormat::Table => rows
            .iter()
            .map(|r| {
                format!(
                    "[{}] seed {}\n{}",
                    r.label,
                    r.seed,
                    render_sim(&r.report, OutputFormat::Table)
                )
            })
            .collect::<Vec<_>>()
            .join("\n"),
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DeviceReport {
    pub self_coupling: f64,
    pub round_trip_amplitude: f64,
    pub group_index: f64,
    pub fsr_ghz: f64,
    pub fsr_pm: f64,
    pub on_drop_db: f64,
    pub on_thru_db: f64,
    pub off_thru_db: f64,
    pub off_drop_db: f64,
    pub comb_carriers: usize,
    pub comb_first_nm: f64,
    pub comb_last_nm: f64,
    pub comb_spacing_ghz: f64,
    pub comb_total_power_mw: f64,
    pub detector_sensitivity_dbm: f64,
    pub field_at_5v_v_per_um: f64,
    pub breakdown_voltage_v: f64,
}

/// Calibrates the switch resonator against `loss`, builds a comb matched to
/// its FSR and summarizes the electro-optic material.
pub fn device_report(
    devices: &DeviceParams,
    loss: &SwitchLossModel,
    fsr_hz: f64,
) -> Result<DeviceReport, DeviceError> {
    let spec = CalibrationSpec {
        center_wavelength: devices.comb.center_wavelength,
        ..Default::default()
    };
    let cal = calibrate_switch(loss, fsr_hz, &spec)?;
    let fsr = cal.resonator.fsr(spec.center_wavelength);
    let comb = WdmCarrierGrid::from_fsr(
        devices.comb.carrier_count,
        devices.comb.center_wavelength,
        fsr.frequency,
        devices.comb.power_per_carrier,
    );
    let lambdas = comb.carrier_wavelengths();
    let m = devices.material;
    Ok(DeviceReport {
        self_coupling: cal.resonator.self_coupling_in,
        round_trip_amplitude: cal.resonator.round_trip_amplitude,
        group_index: cal.resonator.group_index,
        fsr_ghz: fsr.frequency / 1e9,
        fsr_pm: fsr.wavelength / PM,
        on_drop_db: cal.metrics.on_drop_db,
        on_thru_db: cal.metrics.on_thru_db,
        off_thru_db: cal.metrics.off_thru_db,
        off_drop_db: cal.metrics.off_drop_db,
        comb_carriers: lambdas.len(),
        comb_first_nm: lambdas[0] / NM,
        comb_last_nm: lambdas[lambdas.len() - 1] / NM,
        comb_spacing_ghz: comb.frequency_spacing() / 1e9,
        comb_total_power_mw: comb.total_power() * 1e3,
        detector_sensitivity_dbm: devices.detector.sensitivity_dbm,
        field_at_5v_v_per_um: m.dc_field_from_voltage(5.0)? * 1e-6,
        breakdown_voltage_v: m.breakdown_voltage(),
    })
}

pub fn render_devices(r: &DeviceReport, format: OutputFormat) -> String {
    match format {
        OutputFormat::Json => json(r),
        OutputFormat::Csv => csv_records(std::slice::from_ref(r)),
        OutputFormat::Table => table(&[
            (
                "Resonator self-coupling t".into(),
                format!("{:.5}", r.self_coupling),
            ),
            (
                "Round-trip amplitude a".into(),
                format!("{:.6}", r.round_trip_amplitude),
            ),
            ("Group index".into(), format!("{:.4}", r.group_index)),
            ("FSR (GHz)".into(), format!("{:.2}", r.fsr_ghz)),
            ("FSR (pm)".into(), format!("{:.1}", r.fsr_pm)),
            ("ON drop loss (dB)".into(), format!("{:.3}", r.on_drop_db)),
            (
                "ON through isolation (dB)".into(),
                format!("{:.2}", r.on_thru_db),
            ),
            (
                "OFF through loss (dB)".into(),
                format!("{:.3}", r.off_thru_db),
            ),
            (
                "OFF drop isolation (dB)".into(),
                format!("{:.2}", r.off_drop_db),
            ),
            ("Comb carriers".into(), r.comb_carriers.to_string()),
            (
                "Comb span (nm)".into(),
                format!("{:.3} - {:.3}", r.comb_first_nm, r.comb_last_nm),
            ),
            (
                "Comb spacing (GHz)".into(),
                format!("{:.2}", r.comb_spacing_ghz),
            ),
            (
                "Comb power (mW)".into(),
                format!("{:.3}", r.comb_total_power_mw),
            ),
            (
                "Detector sensitivity (dBm)".into(),
                format!("{:.1}", r.detector_sensitivity_dbm),
            ),
            (
                "DC field at 5 V (V/um)".into(),
                format!("{:.2}", r.field_at_5v_v_per_um),
            ),
            (
                "Breakdown voltage (V)".into(),
                format!("{:.1}", r.breakdown_voltage_v),
            ),
        ]),
    }
}
