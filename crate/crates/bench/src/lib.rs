//! Shared fixtures for the benchmarks.

use fabric_core::route::{plan, LossParams, PlanOptions, Route};
use fabric_core::topology::{PanelSpec, PanelTopology};

pub fn panel(rows: usize, cols: usize) -> PanelTopology {
    PanelTopology::from_spec(&PanelSpec::new(rows, cols)).expect("valid panel")
}

/// Corner-to-corner XPU route on `panel`.
pub fn corner_route(panel: &PanelTopology) -> Route {
    let dst = format!("XPU_{}_{}", panel.rows() - 1, panel.cols() - 1);
    plan(
        panel,
        "XPU_0_0",
        &dst,
        &PlanOptions::default(),
        &LossParams::default(),
    )
    .expect("routable")
}

/// Every XPU-to-east-neighbour route of row 0; pairwise disjoint.
pub fn row_routes(panel: &PanelTopology) -> Vec<Route> {
    (0..panel.cols() - 1)
        .map(|c| {
            plan(
                panel,
                &format!("XPU_0_{c}"),
                &format!("XPU_0_{}", c + 1),
                &PlanOptions::default(),
                &LossParams::default(),
            )
            .expect("routable")
        })
        .collect()
}
