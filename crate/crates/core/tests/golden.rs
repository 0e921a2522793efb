use fabric_core::budget::{compare, preset, Preset};
use fabric_core::report::{render_budget, render_comparison};
use fabric_core::OutputFormat;

fn check(p: Preset, format: OutputFormat, file: &str) {
    let path = format!("{}/tests/golden/{file}", env!("CARGO_MANIFEST_DIR"));
    let want = std::fs::read_to_string(&path).unwrap();
    let got = render_budget(&preset(p).analyze().unwrap(), format);
    assert_eq!(got.trim_end(), want.trim_end(), "{file} drifted");
}

#[test]
fn silicon_budget_csv() {
    check(Preset::SiliconUnit, OutputFormat::Csv, "silicon_budget.csv");
}

#[test]
fn photonic_budget_csv() {
    check(
        Preset::PhotonicUnit,
        OutputFormat::Csv,
        "photonic_budget.csv",
    );
}

#[test]
fn silicon_budget_json() {
    check(
        Preset::SiliconUnit,
        OutputFormat::Json,
        "silicon_budget.json",
    );
}

#[test]
fn photonic_budget_json() {
    check(
        Preset::PhotonicUnit,
        OutputFormat::Json,
        "photonic_budget.json",
    );
}

#[test]
fn comparison_csv() {
    let path = format!("{}/tests/golden/comparison.csv", env!("CARGO_MANIFEST_DIR"));
    let a = preset(Preset::SiliconUnit).analyze().unwrap();
    let b = preset(Preset::PhotonicUnit).analyze().unwrap();
    let got = render_comparison(&compare(&a, &b), OutputFormat::Csv);
    assert_eq!(
        got.trim_end(),
        std::fs::read_to_string(path).unwrap().trim_end()
    );
}
