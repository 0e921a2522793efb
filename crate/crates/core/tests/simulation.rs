use fabric_core::sim::{generate, run, SimConfig, WorkloadParams};
use fabric_core::topology::{PanelSpec, PanelTopology};

fn panel(spec: PanelSpec) -> PanelTopology {
    PanelTopology::from_spec(&spec).unwrap()
}

#[test]
fn generator_hits_the_duty_scaled_rate() {
    let p = panel(PanelSpec::new(4, 4));
    for duty in [0.5, 0.7, 0.9] {
        let params = WorkloadParams {
            rate: 2.0,
            xpu_duty: duty,
            slots: 10_000,
            ..Default::default()
        };
        let wl = generate(&p, &params, 21).unwrap();
        let per_slot = wl.requests.len() as f64 / params.slots as f64;
        let want = params.rate * duty;
        assert!(
            (per_slot - want).abs() / want < 0.05,
            "duty {duty}: {per_slot} per slot"
        );
    }
}

#[test]
fn nearby_requests_stay_on_tile() {
    let p = panel(PanelSpec::new(3, 3));
    let params = WorkloadParams {
        nearby_fraction: 1.0,
        slots: 500,
        ..Default::default()
    };
    for r in generate(&p, &params, 4).unwrap().requests {
        let tile = |id: &str| p.locate_eic(id).unwrap().tile;
        assert_eq!(tile(&r.src), tile(&r.dst));
    }
}

#[test]
fn busier_xpus_move_more_bits() {
    let p = panel(PanelSpec::new(4, 4));
    let cfg = SimConfig {
        slots: Some(400),
        ..Default::default()
    };
    for seed in 0..6 {
        let go = |duty| {
            let params = WorkloadParams {
                xpu_duty: duty,
                slots: 400,
                ..Default::default()
            };
            run(&p, &generate(&p, &params, seed).unwrap(), &cfg).unwrap()
        };
        let (low, high) = (go(0.5), go(0.9));
        assert!(low.offered_bits <= high.offered_bits);
        assert!(low.bits_delivered <= high.bits_delivered, "seed {seed}");
    }
}

#[test]
fn one_waveguide_saturates() {
    let p = panel(PanelSpec {
        wg_per_bundle: 1,
        ..PanelSpec::new(1, 2)
    });
    let params = WorkloadParams {
        rate: 3.0,
        nearby_fraction: 0.0,
        xpu_duty: 0.9,
        slots: 300,
        ..Default::default()
    };
    let r = run(
        &p,
        &generate(&p, &params, 8).unwrap(),
        &SimConfig::default(),
    )
    .unwrap();
    assert!(r.blocking_probability > 0.0);
    assert!(r.peak_concurrent_routes <= 2);
}
