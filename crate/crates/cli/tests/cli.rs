use std::path::PathBuf;
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_photonic-fabric"))
}

fn run(args: &[&str]) -> Output {
    bin()
        .args(args)
        .env_remove("PHOTONIC_FABRIC_SEED")
        .output()
        .unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn temp_file(name: &str, body: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("photonic-fabric-cli-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let p = dir.join(name);
    std::fs::write(&p, body).unwrap();
    p
}

#[test]
fn photonic_budget_table() {
    let o = run(&["budget", "--preset", "photonic"]);
    assert_eq!(o.status.code(), Some(0));
    let s = stdout(&o);
    assert!(s.contains("Energy efficiency of data links (pJ/b): 1.17\n"));
    assert!(s.contains("Total data bandwidth per XPU (Tb/s): 26.624\n"));
    assert!(s.contains("Total WDM carrier power for data links (W): 0.416\n"));
}

#[test]
fn budget_csv_is_stable() {
    let a = stdout(&run(&["budget", "--preset", "silicon", "--csv"]));
    let b = stdout(&run(&["budget", "--preset", "silicon", "--csv"]));
    assert_eq!(a, b);
    assert!(a.starts_with("metric,value,unit\n"));
    assert!(a.contains("total_bandwidth,13.312,Tb/s\n"));
    assert!(a.contains("total_tls,736,count\n"));
}

#[test]
fn budget_from_config_matches_preset() {
    let cfg = r#"{"panel":{"rows":1,"cols":1},"budget":{"carrier_power_w":0.416,"classes":[
        {"name":"near","link_count":384,"rate_gbps":32,"energy_pj_per_bit":1.15,"area_mm2_per_link":0.04,
         "bumps_per_link":1,"wiring":{"kind":"wg","links_per_wire":32},"reach_mm":500},
        {"name":"far","link_count":448,"rate_gbps":32,"energy_pj_per_bit":1.15,"area_mm2_per_link":0.04,
         "bumps_per_link":1,"wiring":{"kind":"wg","links_per_wire":32},"reach_mm":500}]}}"#;
    let p = temp_file("photonic.json", cfg);
    let custom = run(&["budget", "--config", p.to_str().unwrap(), "--csv"]);
    assert_eq!(custom.status.code(), Some(0));
    assert_eq!(
        stdout(&custom),
        stdout(&run(&["budget", "--preset", "photonic", "--csv"]))
    );
}

#[test]
fn degenerate_route_exits_3() {
    let o = run(&["route", "--from", "XPU_0_0", "--to", "XPU_0_0"]);
    assert_eq!(o.status.code(), Some(3));
}

#[test]
fn worst_case_route() {
    let o = run(&[
        "route",
        "--from",
        "XPU_0_0",
        "--to",
        "HBM_7_7_0",
        "--forced-turns",
        "2",
        "--json",
    ]);
    assert_eq!(o.status.code(), Some(0));
    let s = stdout(&o);
    assert!(s.contains("\"bypasses\": 12"));
    assert!(s.contains("\"turns\": 2"));
    assert!(s.contains("\"total_loss_db\": 7.0"));
}

#[test]
fn bad_config_exits_2_with_path() {
    let p = temp_file("bad.json", r#"{"panel":{"rows":0,"cols":2}}"#);
    let o = run(&[
        "route",
        "--config",
        p.to_str().unwrap(),
        "--from",
        "XPU_0_0",
        "--to",
        "XPU_0_1",
    ]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("panel.rows"));

    let p = temp_file(
        "typo.json",
        r#"{"panel":{"rows":2,"cols":2},"sim":{"slotz":3}}"#,
    );
    let o = run(&["simulate", "--config", p.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("sim.slotz"));
}

#[test]
fn overlapping_allocation_exits_3() {
    // Both transfers run east along row 0 on a one-waveguide bundle.
    let cfg = temp_file(
        "one_wg.json",
        r#"{"panel":{"rows":1,"cols":4,"wg_per_bundle":1}}"#,
    );
    let o = run(&[
        "allocate",
        "--config",
        cfg.to_str().unwrap(),
        "--pair",
        "XPU_0_0:HBM_0_3_0",
        "--pair",
        "XPU_0_1:HBM_0_2_0",
        "--json",
    ]);
    assert_eq!(o.status.code(), Some(3));
    let s = stdout(&o);
    assert!(s.contains("\"denied\":[{"));
    assert!(s.contains("XPU_0_0->HBM_0_3_0"));
}

#[test]
fn simulation_seed_from_env_is_deterministic() {
    let go = || {
        bin()
            .args([
                "simulate", "--rows", "3", "--cols", "3", "--slots", "300", "--json",
            ])
            .env("PHOTONIC_FABRIC_SEED", "11")
            .output()
            .unwrap()
    };
    let (a, b) = (go(), go());
    assert_eq!(a.status.code(), Some(0));
    assert_eq!(a.stdout, b.stdout);
    let other = run(&[
        "simulate", "--rows", "3", "--cols", "3", "--slots", "300", "--json", "--seed", "12",
    ]);
    assert_ne!(a.stdout, other.stdout);
}

#[test]
fn sweep_csv_has_one_row_per_point() {
    let out =
        std::env::temp_dir().join(format!("photonic-fabric-sweep-{}.csv", std::process::id()));
    let o = run(&[
        "simulate",
        "--rows",
        "2",
        "--cols",
        "2",
        "--slots",
        "100",
        "--seed",
        "1",
        "--wg-bundles",
        "1,26",
        "--csv",
        out.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(0));
    let csv = std::fs::read_to_string(&out).unwrap();
    let lines: Vec<&str> = csv.lines().collect();
    assert_eq!(lines.len(), 3);
    assert!(lines[0].starts_with("label,seed,slots_run,"));
    assert!(lines[1].starts_with("\"wg=1,"));
}

#[test]
fn devices_summary() {
    let o = run(&["devices", "--json"]);
    assert_eq!(o.status.code(), Some(0));
    let s = stdout(&o);
    assert!(s.contains("\"breakdown_voltage_v\""));
    assert!(s.contains("\"on_drop_db\""));
}
