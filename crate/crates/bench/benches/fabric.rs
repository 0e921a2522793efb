use criterion::{criterion_group, criterion_main, Criterion};
use std::hint::black_box;

use fabric_bench::{corner_route, panel, row_routes};
use fabric_core::alloc::SlotAllocation;
use fabric_core::devices::{calibrate_switch, CalibrationSpec};
use fabric_core::route::{plan, LossParams, PlanOptions};
use fabric_core::sim::{generate, run, SimConfig, WorkloadParams};
use fabric_core::xbar::SwitchLossModel;

fn bench_plan(c: &mut Criterion) {
    let p = panel(20, 20);
    let opts = PlanOptions::default();
    let loss = LossParams::default();
    c.bench_function("plan 20x20 corner", |b| {
        b.iter(|| {
            plan(
                &p,
                black_box("XPU_0_0"),
                black_box("XPU_19_19"),
                &opts,
                &loss,
            )
            .unwrap()
        })
    });
}

fn bench_allocate(c: &mut Criterion) {
    let p = panel(8, 8);
    let routes = row_routes(&p);
    let corner = corner_route(&p);
    c.bench_function("allocate and release row", |b| {
        b.iter(|| {
            let mut a = SlotAllocation::new(SwitchLossModel::default(), 2);
            for r in &routes {
                a.try_allocate(&p, r.clone()).unwrap();
            }
            let _ = a.try_allocate(&p, corner.clone());
            for r in &routes {
                a.release(r).unwrap();
            }
            a
        })
    });
}

fn bench_calibrate(c: &mut Criterion) {
    let lm = SwitchLossModel::default();
    let spec = CalibrationSpec::default();
    c.bench_function("calibrate switch", |b| {
        b.iter(|| calibrate_switch(&lm, black_box(100e9), &spec).unwrap())
    });
}

fn bench_simulate(c: &mut Criterion) {
    let p = panel(4, 4);
    let params = WorkloadParams {
        slots: 500,
        ..Default::default()
    };
    let wl = generate(&p, &params, 1).unwrap();
    let cfg = SimConfig::default();
    c.bench_function("simulate 4x4 500 slots", |b| {
        b.iter(|| run(&p, &wl, &cfg).unwrap())
    });
}

criterion_group!(
    benches,
    bench_plan,
    bench_allocate,
    bench_calibrate,
    bench_simulate
);
criterion_main!(benches);
