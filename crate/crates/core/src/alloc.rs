//! Per-slot admission control for optical paths.
//!
//! A grant claims every directed waveguide segment and crossing node its
//! route traverses. Grants are all-or-nothing: a request that clashes with
//! any granted route leaves the allocation untouched and reports every
//! clashing resource.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::route::{DirectedSegment, Route, RouteError};
use crate::topology::{NodeId, PanelTopology, TileCoord};
use crate::xbar::{granularity, Direction, Granularity, NodeKind, SwitchLossModel, XbarNodeState};

/// Exhaustive [`max_concurrent`] handles at most this many routes.
pub const EXACT_SUBSET_LIMIT: usize = 20;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Resource {
    Segment(DirectedSegment),
    Node(NodeId),
}

fn resources(route: &Route) -> impl Iterator<Item = Resource> + '_ {
    route
        .claimed_segments
        .iter()
        .map(|&s| Resource::Segment(s))
        .chain(route.claimed_nodes.iter().map(|&n| Resource::Node(n)))
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Clash {
    pub resource: Resource,
    pub holder_src: String,
    pub holder_dst: String,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConflictReport {
    pub clashes: Vec<Clash>,
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum AllocError {
    #[error("request conflicts on {} resource(s)", .0.clashes.len())]
    Conflict(ConflictReport),
    #[error("route rejected: {0}")]
    Validation(#[from] RouteError),
    #[error("route {src} -> {dst} is not granted")]
    NotFound { src: String, dst: String },
    #[error("per-wavelength switching is not schedulable")]
    Unschedulable,
}

/// Waveguide and carriers used by a grant.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct WdmPlan {
    pub wg_index: usize,
    pub lambda_set: BTreeSet<usize>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Grant {
    pub route: Route,
    pub wdm: WdmPlan,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SlotAllocation {
    pub slot: u64,
    granted: Vec<Grant>,
    node_states: BTreeMap<NodeId, XbarNodeState>,
    owners: BTreeMap<Resource, usize>,
    loss_model: SwitchLossModel,
    node_kind: NodeKind,
    max_turns: usize,
}

impl SlotAllocation {
    pub fn new(loss_model: SwitchLossModel, max_turns: usize) -> Self {
        Self {
            slot: 0,
            granted: Vec::new(),
            node_states: BTreeMap::new(),
            owners: BTreeMap::new(),
            loss_model,
            node_kind: NodeKind::Rtr,
            max_turns,
        }
    }

    pub fn with_node_kind(mut self, kind: NodeKind) -> Self {
        self.node_kind = kind;
        self
    }

    pub fn granted(&self) -> &[Grant] {
        &self.granted
    }

    pub fn node_states(&self) -> &BTreeMap<NodeId, XbarNodeState> {
        &self.node_states
    }

    pub fn is_empty(&self) -> bool {
        self.granted.is_empty()
    }

    pub fn len(&self) -> usize {
        self.granted.len()
    }

    /// Resources a request would clash on, without changing anything.
    pub fn clashes(&self, route: &Route) -> Vec<Clash> {
        resources(route)
            .filter_map(|res| {
                self.owners.get(&res).map(|&g| Clash {
                    resource: res,
                    holder_src: self.granted[g].route.src.clone(),
                    holder_dst: self.granted[g].route.dst.clone(),
                })
            })
            .collect()
    }

    pub fn try_allocate(&mut self, panel: &PanelTopology, route: Route) -> Result<(), AllocError> {
        route.validate(panel, self.max_turns)?;
        if granularity(self.node_kind) != Granularity::PerWaveguide {
            return Err(AllocError::Unschedulable);
        }
        let clashes = self.clashes(&route);
        if !clashes.is_empty() {
            return Err(AllocError::Conflict(ConflictReport { clashes }));
        }
        let idx = self.granted.len();
        for res in resources(&route) {
            self.owners.insert(res, idx);
        }
        for state in route.node_states(self.loss_model) {
            self.node_states.insert(state.node, state);
        }
        for &node in &route.claimed_nodes {
            self.node_states
                .entry(node)
                .or_insert_with(|| XbarNodeState::off(node, self.loss_model));
        }
        let wdm = WdmPlan {
            wg_index: route.wg_index,
            lambda_set: (0..panel.lambdas_per_wg()).collect(),
        };
        self.granted.push(Grant { route, wdm });
        Ok(())
    }

    pub fn release(&mut self, route: &Route) -> Result<Grant, AllocError> {
        let pos = self
            .granted
            .iter()
            .position(|g| g.route == *route)
            .ok_or_else(|| AllocError::NotFound {
                src: route.src.clone(),
                dst: route.dst.clone(),
            })?;
        let grant = self.granted.remove(pos);
        for node in &grant.route.claimed_nodes {
            self.node_states.remove(node);
        }
        self.owners.clear();
        for (i, g) in self.granted.iter().enumerate() {
            for res in resources(&g.route) {
                self.owners.insert(res, i);
            }
        }
        Ok(grant)
    }

    /// Follows the configured node states from `route`'s source tile and
    /// returns the tiles the light visits.
    pub fn trace(&self, route: &Route) -> Result<Vec<TileCoord>, String> {
        let mut tiles = vec![route.src_tile()];
        let Some(first) = route
            .claimed_segments
            .iter()
            .find(|s| s.segment.tile == route.src_tile())
        else {
            return Ok(tiles);
        };
        let mut heading = first.heading;
        let mut at = route.src_tile();
        let limit = route.waypoints.len();
        while at != route.dst_tile() {
            if tiles.len() > limit {
                return Err("trace overran the route".into());
            }
            at = neighbor(at, heading).ok_or("trace left the panel")?;
            tiles.push(at);
            let node = NodeId {
                tile: at,
                index: route.wg_index,
            };
            let state = self
                .node_states
                .get(&node)
                .ok_or_else(|| format!("no state for {node}"))?;
            heading = state
                .resolve(heading.opposite())
                .map_err(|e| e.to_string())?
                .out_dir;
        }
        Ok(tiles)
    }

    /// Checks the allocation invariants from scratch.
    pub fn validate(&self) -> Result<(), String> {
        let mut seen = BTreeSet::new();
        for g in &self.granted {
            for res in resources(&g.route) {
                if !seen.insert(res) {
                    return Err(format!("{res:?} is used by two grants"));
                }
            }
        }
        let mut expected = BTreeMap::new();
        for g in &self.granted {
            for &node in &g.route.claimed_nodes {
                expected.insert(node, XbarNodeState::off(node, self.loss_model));
            }
            for s in g.route.node_states(self.loss_model) {
                expected.insert(s.node, s);
            }
        }
        if expected != self.node_states {
            return Err("node states do not match the granted routes".into());
        }
        if seen.len() != self.owners.len() {
            return Err("owner index out of sync".into());
        }
        for g in &self.granted {
            if !g.route.claimed_segments.is_empty() {
                let tiles = self.trace(&g.route)?;
                if tiles != g.route.waypoints {
                    return Err(format!(
                        "{} -> {} is not realized by the node states",
                        g.route.src, g.route.dst
                    ));
                }
            }
        }
        Ok(())
    }
}

fn neighbor(t: TileCoord, h: Direction) -> Option<TileCoord> {
    Some(match h {
        Direction::North => TileCoord::new(t.row + 1, t.col),
        Direction::South => TileCoord::new(t.row.checked_sub(1)?, t.col),
        Direction::East => TileCoord::new(t.row, t.col + 1),
        Direction::West => TileCoord::new(t.row, t.col.checked_sub(1)?),
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PortDirection {
    Tx,
    Rx,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InterfaceState {
    Enabled,
    Disabled,
}

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct InterfaceStatus {
    pub eic: String,
    pub direction: PortDirection,
    pub resource: Resource,
    pub state: InterfaceState,
}

/// E/O and O/E settings for every EIC attached to a granted path: only the
/// route's own transmitter and receiver stay enabled.
pub fn interface_discipline(alloc: &SlotAllocation, panel: &PanelTopology) -> Vec<InterfaceStatus> {
    let mut out = Vec::new();
    for g in alloc.granted() {
        let r = &g.route;
        // Where the transmitter injects and the receiver extracts.
        let (tx_at, rx_at) = if r.interactions.is_empty() {
            let node = Resource::Node(*r.claimed_nodes.first().expect("loopback claims its node"));
            (node, node)
        } else {
            let first = r
                .claimed_segments
                .iter()
                .find(|s| s.segment.tile == r.src_tile())
                .copied()
                .expect("route leaves its source tile");
            let last_heading = r.interactions.last().unwrap().path.out_dir();
            let last = r
                .claimed_segments
                .iter()
                .find(|s| s.segment.tile == r.dst_tile() && s.heading == last_heading)
                .copied()
                .expect("route enters its destination tile");
            (Resource::Segment(first), Resource::Segment(last))
        };
        let attached: Vec<(Resource, TileCoord)> = r
            .claimed_segments
            .iter()
            .map(|s| (Resource::Segment(*s), s.segment.tile))
            .chain(
                r.claimed_nodes
                    .iter()
                    .filter(|_| r.interactions.is_empty())
                    .map(|n| (Resource::Node(*n), n.tile)),
            )
            .collect();
        for (res, tile) in attached {
            for eic in panel.eics_on(tile) {
                for direction in [PortDirection::Tx, PortDirection::Rx] {
                    let enabled = match direction {
                        PortDirection::Tx => eic.id == r.src && res == tx_at,
                        PortDirection::Rx => eic.id == r.dst && res == rx_at,
                    };
                    out.push(InterfaceStatus {
                        eic: eic.id.clone(),
                        direction,
                        resource: res,
                        state: if enabled {
                            InterfaceState::Enabled
                        } else {
                            InterfaceState::Disabled
                        },
                    });
                }
            }
        }
    }
    out.sort();
    out
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ConcurrencyMode {
    /// Exhaustive when the set is small enough, greedy otherwise.
    #[default]
    Auto,
    Exact,
    Greedy,
}

#[derive(Clone, Debug)]
pub struct MaxConcurrent {
    pub count: usize,
    pub exact: bool,
    pub witness: SlotAllocation,
}

/// Largest set of routes from `routes` that can be granted together.
pub fn max_concurrent(
    panel: &PanelTopology,
    routes: &[Route],
    loss_model: SwitchLossModel,
    max_turns: usize,
    mode: ConcurrencyMode,
) -> Result<MaxConcurrent, AllocError> {
    for r in routes {
        r.validate(panel, max_turns)?;
    }
    let exact = match mode {
        ConcurrencyMode::Exact => {
            if routes.len() > EXACT_SUBSET_LIMIT {
                return Err(AllocError::Validation(RouteError::TooLarge {
                    tiles: routes.len(),
                    limit: EXACT_SUBSET_LIMIT,
                }));
            }
            true
        }
        ConcurrencyMode::Greedy => false,
        ConcurrencyMode::Auto => routes.len() <= EXACT_SUBSET_LIMIT,
    };
    let mut witness = SlotAllocation::new(loss_model, max_turns);
    if !exact {
        for r in routes {
            match witness.try_allocate(panel, r.clone()) {
                Ok(()) | Err(AllocError::Conflict(_)) => {}
                Err(e) => return Err(e),
            }
        }
        return Ok(MaxConcurrent {
            count: witness.len(),
            exact,
            witness,
        });
    }

    let n = routes.len();
    let sets: Vec<BTreeSet<Resource>> = routes.iter().map(|r| resources(r).collect()).collect();
    let mut adj = vec![0u32; n];
    for i in 0..n {
        for j in (i + 1)..n {
            if !sets[i].is_disjoint(&sets[j]) {
                adj[i] |= 1 << j;
                adj[j] |= 1 << i;
            }
        }
    }
    let mut best = 0u32;
    for mask in 0u32..(1u32 << n) {
        if mask.count_ones() <= best.count_ones() {
            continue;
        }
        let independent = (0..n).all(|i| mask & (1 << i) == 0 || adj[i] & mask == 0);
        if independent {
            best = mask;
        }
    }
    for (i, r) in routes.iter().enumerate() {
        if best & (1 << i) != 0 {
            witness.try_allocate(panel, r.clone())?;
        }
    }
    Ok(MaxConcurrent {
        count: best.count_ones() as usize,
        exact,
        witness,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TraceEntry {
    pub src: String,
    pub dst: String,
    pub turns: usize,
    pub loss_db: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DeniedEntry {
    pub src: String,
    pub dst: String,
    pub reason: String,
}

/// One JSON-lines record of an allocation trace.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct SlotTrace {
    pub slot: u64,
    pub granted: Vec<TraceEntry>,
    pub denied: Vec<DeniedEntry>,
}

impl SlotTrace {
    pub fn to_json_line(&self) -> String {
        serde_json::to_string(self).expect("trace records always serialize")
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::route::{plan, LossParams, PlanOptions};
    use crate::topology::{build_panel, TileTemplate};

    fn tiles(v: &[(usize, usize)]) -> Vec<TileCoord> {
        v.iter().copied().map(TileCoord::from).collect()
    }

    fn panel() -> PanelTopology {
        build_panel(4, 4, &TileTemplate::default()).unwrap()
    }

    fn alloc() -> SlotAllocation {
        SlotAllocation::new(SwitchLossModel::default(), 2)
    }

    fn route(src: &str, dst: &str, wps: &[(usize, usize)]) -> Route {
        Route::from_waypoints(src, dst, tiles(wps), 0).unwrap()
    }

    #[test]
    fn overlapping_routes_conflict() {
        let p = panel();
        let mut a = alloc();
        let brown = route("XPU_0_0", "XPU_1_2", &[(0, 0), (0, 1), (1, 1), (1, 2)]);
        let pink = route("XPU_0_1", "XPU_2_1", &[(0, 1), (1, 1), (2, 1)]);
        a.try_allocate(&p, brown).unwrap();
        let before = a.clone();
        match a.try_allocate(&p, pink) {
            Err(AllocError::Conflict(rep)) => assert!(!rep.clashes.is_empty()),
            other => panic!("expected conflict, got {other:?}"),
        }
        assert_eq!(a, before);
    }

    #[test]
    fn same_route_twice_clashes_everywhere() {
        let p = panel();
        let mut a = alloc();
        let r = route(
            "XPU_0_0",
            "XPU_2_2",
            &[(0, 0), (1, 0), (2, 0), (2, 1), (2, 2)],
        );
        a.try_allocate(&p, r.clone()).unwrap();
        let Err(AllocError::Conflict(rep)) = a.try_allocate(&p, r.clone()) else {
            panic!("expected conflict");
        };
        assert_eq!(
            rep.clashes.len(),
            r.claimed_segments.len() + r.claimed_nodes.len()
        );
    }

    #[test]
    fn invalid_route_is_a_validation_error() {
        let p = panel();
        let mut a = alloc();
        let mut r = route("XPU_0_0", "XPU_0_2", &[(0, 0), (0, 1), (0, 2)]);
        r.wg_index = 99;
        assert!(matches!(
            a.try_allocate(&p, r),
            Err(AllocError::Validation(_))
        ));
    }

    #[test]
    fn release_restores_empty() {
        let p = panel();
        let mut a = alloc();
        let empty = a.clone();
        let r = route(
            "XPU_0_0",
            "XPU_2_2",
            &[(0, 0), (0, 1), (0, 2), (1, 2), (2, 2)],
        );
        a.try_allocate(&p, r.clone()).unwrap();
        a.validate().unwrap();
        a.release(&r).unwrap();
        assert_eq!(a, empty);
        assert!(matches!(a.release(&r), Err(AllocError::NotFound { .. })));
    }

    #[test]
    fn release_leaves_other_route_untouched() {
        let p = panel();
        let mut a = alloc();
        let r1 = route("XPU_0_0", "XPU_0_3", &[(0, 0), (0, 1), (0, 2), (0, 3)]);
        let r2 = route("XPU_3_0", "XPU_3_3", &[(3, 0), (3, 1), (3, 2), (3, 3)]);
        a.try_allocate(&p, r1.clone()).unwrap();
        a.try_allocate(&p, r2.clone()).unwrap();
        let mut only2 = alloc();
        only2.try_allocate(&p, r2).unwrap();
        a.release(&r1).unwrap();
        assert_eq!(a, only2);
    }

    #[test]
    fn discipline_enables_one_tx_and_one_rx_per_route() {
        let p = panel();
        let mut a = alloc();
        assert!(interface_discipline(&a, &p).is_empty());
        let opts = PlanOptions::default();
        let lp = LossParams::default();
        let r1 = plan(&p, "XPU_0_0", "HBM_2_2_3", &opts, &lp).unwrap();
        a.try_allocate(&p, r1).unwrap();
        let st = interface_discipline(&a, &p);
        let enabled: Vec<_> = st
            .iter()
            .filter(|s| s.state == InterfaceState::Enabled)
            .collect();
        assert_eq!(enabled.len(), 2);
        assert!(enabled
            .iter()
            .any(|s| s.eic == "XPU_0_0" && s.direction == PortDirection::Tx));
        assert!(enabled
            .iter()
            .any(|s| s.eic == "HBM_2_2_3" && s.direction == PortDirection::Rx));
        assert!(st.iter().any(|s| s.state == InterfaceState::Disabled));

        let r2 = plan(&p, "XPU_3_3", "XPU_3_0", &opts, &lp).unwrap();
        a.try_allocate(&p, r2).unwrap();
        let st = interface_discipline(&a, &p);
        let tx = st
            .iter()
            .filter(|s| s.state == InterfaceState::Enabled && s.direction == PortDirection::Tx)
            .count();
        let rx = st
            .iter()
            .filter(|s| s.state == InterfaceState::Enabled && s.direction == PortDirection::Rx)
            .count();
        assert_eq!((tx, rx), (2, 2));
    }

    #[test]
    fn max_concurrent_small_cases() {
        let p = panel();
        let lm = SwitchLossModel::default();
        let disjoint = vec![
            route("XPU_0_0", "XPU_0_3", &[(0, 0), (0, 1), (0, 2), (0, 3)]),
            route("XPU_3_0", "XPU_3_3", &[(3, 0), (3, 1), (3, 2), (3, 3)]),
        ];
        let m = max_concurrent(&p, &disjoint, lm, 2, ConcurrencyMode::Exact).unwrap();
        assert_eq!(m.count, 2);
        m.witness.validate().unwrap();

        let overlapping = vec![
            route("XPU_0_0", "XPU_0_3", &[(0, 0), (0, 1), (0, 2), (0, 3)]),
            route("XPU_1_1", "XPU_0_2", &[(1, 1), (0, 1), (0, 2)]),
        ];
        assert_eq!(
            max_concurrent(&p, &overlapping, lm, 2, ConcurrencyMode::Exact)
                .unwrap()
                .count,
            1
        );

        // every pair shares node (1,1)#0
        let triangle = vec![
            route("XPU_0_1", "XPU_2_1", &[(0, 1), (1, 1), (2, 1)]),
            route("XPU_1_0", "XPU_1_2", &[(1, 0), (1, 1), (1, 2)]),
            route("XPU_2_1", "XPU_1_0", &[(2, 1), (1, 1), (1, 0)]),
        ];
        let m = max_concurrent(&p, &triangle, lm, 2, ConcurrencyMode::Exact).unwrap();
        assert_eq!(m.count, 1);
        let g = max_concurrent(&p, &triangle, lm, 2, ConcurrencyMode::Greedy).unwrap();
        assert!(g.count <= m.count);
    }

    #[test]
    fn per_wavelength_nodes_are_not_schedulable() {
        let p = panel();
        let mut a = alloc().with_node_kind(NodeKind::Mrr);
        let r = route("XPU_0_0", "XPU_0_1", &[(0, 0), (0, 1)]);
        assert_eq!(a.try_allocate(&p, r), Err(AllocError::Unschedulable));
    }

    #[test]
    fn trace_line_shape() {
        let t = SlotTrace {
            slot: 3,
            granted: vec![TraceEntry {
                src: "a".into(),
                dst: "b".into(),
                turns: 1,
                loss_db: 4.0,
            }],
            denied: vec![],
        };
        assert_eq!(
            t.to_json_line(),
            r#"{"slot":3,"granted":[{"src":"a","dst":"b","turns":1,"loss_db":4.0}],"denied":[]}"#
        );
    }
}
