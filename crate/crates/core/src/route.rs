//! Optical path planning over the tile grid.
//!
//! A route is a shortest (monotone) Manhattan path. The signal is injected
//! onto the source tile's waveguide and then interacts once with the crossing
//! node of every tile it enters, so a route between tiles `Δrow + Δcol` apart
//! has exactly that many interactions. Turns happen only at intermediate
//! tiles; the destination node passes the signal straight to the local O/E.

use std::collections::{BTreeSet, HashMap};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::devices::Photodetector;
use crate::topology::{
    manhattan_hops, Axis, NodeId, PanelTopology, TileCoord, TopologyError, WgSegment,
};
use crate::units::{dbm_to_mw, power_sum_db};
use crate::xbar::{Direction, InteractionKind, PathId, SwitchLossModel, XbarNodeState};

/// Exhaustive enumeration refuses grids larger than this many tiles.
pub const ENUMERATION_TILE_LIMIT: usize = 400;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum RouteError {
    #[error("source and destination are the same interface `{0}`")]
    Degenerate(String),
    #[error("no route from {src} to {dst} within {max_turns} turns")]
    Infeasible {
        src: String,
        dst: String,
        max_turns: usize,
    },
    #[error("grid of {tiles} tiles exceeds the enumeration limit of {limit}")]
    TooLarge { tiles: usize, limit: usize },
    #[error("invalid route: {0}")]
    Invalid(String),
    #[error(transparent)]
    Topology(#[from] TopologyError),
}

/// A waveguide segment together with the heading of the light on it.
/// Opposite headings on one waveguide are distinct resources.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct DirectedSegment {
    pub segment: WgSegment,
    pub heading: Direction,
}

impl DirectedSegment {
    fn new(tile: TileCoord, heading: Direction, index: usize) -> Self {
        let axis = if heading.is_vertical() {
            Axis::Vertical
        } else {
            Axis::Horizontal
        };
        Self {
            segment: WgSegment { tile, axis, index },
            heading,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Interaction {
    pub tile: TileCoord,
    pub kind: InteractionKind,
    pub path: PathId,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Route {
    pub src: String,
    pub dst: String,
    pub waypoints: Vec<TileCoord>,
    pub interactions: Vec<Interaction>,
    pub claimed_segments: BTreeSet<DirectedSegment>,
    pub claimed_nodes: BTreeSet<NodeId>,
    pub wg_index: usize,
}

fn heading(from: TileCoord, to: TileCoord) -> Option<Direction> {
    match (
        to.row as isize - from.row as isize,
        to.col as isize - from.col as isize,
    ) {
        (1, 0) => Some(Direction::North),
        (-1, 0) => Some(Direction::South),
        (0, 1) => Some(Direction::East),
        (0, -1) => Some(Direction::West),
        _ => None,
    }
}

fn step(from: TileCoord, h: Direction) -> Option<TileCoord> {
    let TileCoord { row, col } = from;
    Some(match h {
        Direction::North => TileCoord::new(row + 1, col),
        Direction::South => TileCoord::new(row.checked_sub(1)?, col),
        Direction::East => TileCoord::new(row, col + 1),
        Direction::West => TileCoord::new(row, col.checked_sub(1)?),
    })
}

/// Headings that move from `at` toward `dst` along a shortest path.
fn forward_headings(at: TileCoord, dst: TileCoord) -> impl Iterator<Item = Direction> {
    let v = match at.row.cmp(&dst.row) {
        std::cmp::Ordering::Less => Some(Direction::North),
        std::cmp::Ordering::Greater => Some(Direction::South),
        std::cmp::Ordering::Equal => None,
    };
    let h = match at.col.cmp(&dst.col) {
        std::cmp::Ordering::Less => Some(Direction::East),
        std::cmp::Ordering::Greater => Some(Direction::West),
        std::cmp::Ordering::Equal => None,
    };
    v.into_iter().chain(h)
}

impl Route {
    /// Builds a route and its claimed resources from a tile sequence.
    pub fn from_waypoints(
        src: impl Into<String>,
        dst: impl Into<String>,
        waypoints: Vec<TileCoord>,
        wg_index: usize,
    ) -> Result<Self, RouteError> {
        let Some(&first) = waypoints.first() else {
            return Err(RouteError::Invalid("empty waypoint list".into()));
        };
        let last = *waypoints.last().unwrap();
        let mut headings = Vec::with_capacity(waypoints.len().saturating_sub(1));
        for w in waypoints.windows(2) {
            let h = heading(w[0], w[1]).ok_or_else(|| {
                RouteError::Invalid(format!("{} and {} are not adjacent", w[0], w[1]))
            })?;
            headings.push(h);
        }
        if manhattan_hops(first, last) != headings.len() {
            return Err(RouteError::Invalid(
                "waypoints do not form a shortest path".into(),
            ));
        }

        let mut interactions = Vec::with_capacity(headings.len());
        let mut claimed_segments = BTreeSet::new();
        let mut claimed_nodes = BTreeSet::new();
        if headings.is_empty() {
            // Same-tile transfer loops back through the tile's own node.
            claimed_nodes.insert(NodeId {
                tile: first,
                index: wg_index,
            });
        } else {
            claimed_segments.insert(DirectedSegment::new(first, headings[0], wg_index));
        }
        for (i, &h_in) in headings.iter().enumerate() {
            let tile = waypoints[i + 1];
            let h_out = headings.get(i + 1).copied().unwrap_or(h_in);
            let kind = if h_out == h_in {
                InteractionKind::Bypass
            } else {
                InteractionKind::Turn
            };
            let path = PathId::new(h_in.opposite(), h_out)
                .map_err(|e| RouteError::Invalid(e.to_string()))?;
            interactions.push(Interaction { tile, kind, path });
            claimed_nodes.insert(NodeId {
                tile,
                index: wg_index,
            });
            claimed_segments.insert(DirectedSegment::new(tile, h_in, wg_index));
            claimed_segments.insert(DirectedSegment::new(tile, h_out, wg_index));
        }
        Ok(Self {
            src: src.into(),
            dst: dst.into(),
            waypoints,
            interactions,
            claimed_segments,
            claimed_nodes,
            wg_index,
        })
    }

    pub fn src_tile(&self) -> TileCoord {
        self.waypoints[0]
    }

    pub fn dst_tile(&self) -> TileCoord {
        *self.waypoints.last().unwrap()
    }

    pub fn turns(&self) -> usize {
        self.interactions
            .iter()
            .filter(|i| i.kind == InteractionKind::Turn)
            .count()
    }

    pub fn bypasses(&self) -> usize {
        self.interactions.len() - self.turns()
    }

    /// Same geometry on another waveguide index.
    pub fn on_waveguide(&self, wg_index: usize) -> Self {
        Route::from_waypoints(
            self.src.clone(),
            self.dst.clone(),
            self.waypoints.clone(),
            wg_index,
        )
        .expect("geometry already validated")
    }

    /// Node states that realize this route's interactions.
    pub fn node_states(&self, loss_model: SwitchLossModel) -> Vec<XbarNodeState> {
        self.interactions
            .iter()
            .map(|i| {
                XbarNodeState::configured_for(
                    NodeId {
                        tile: i.tile,
                        index: self.wg_index,
                    },
                    i.path,
                    loss_model,
                )
            })
            .collect()
    }

    /// Checks every route invariant against `panel` and `max_turns`.
    pub fn validate(&self, panel: &PanelTopology, max_turns: usize) -> Result<(), RouteError> {
        if self.src == self.dst {
            return Err(RouteError::Degenerate(self.src.clone()));
        }
        if self.wg_index >= panel.wg_per_bundle() {
            return Err(RouteError::Invalid(format!(
                "wg_index {} outside bundle of {}",
                self.wg_index,
                panel.wg_per_bundle()
            )));
        }
        for &w in &self.waypoints {
            panel.check(w)?;
            if panel.is_masked(w) {
                return Err(RouteError::Invalid(format!("tile {w} is masked")));
            }
        }
        let src = panel.locate_eic(&self.src)?;
        let dst = panel.locate_eic(&self.dst)?;
        if src.tile != self.src_tile() || dst.tile != self.dst_tile() {
            return Err(RouteError::Invalid(
                "endpoints do not match EIC tiles".into(),
            ));
        }
        if self.turns() > max_turns {
            return Err(RouteError::Invalid(format!(
                "{} turns exceeds the limit of {max_turns}",
                self.turns()
            )));
        }
        let rebuilt = Route::from_waypoints(
            self.src.clone(),
            self.dst.clone(),
            self.waypoints.clone(),
            self.wg_index,
        )?;
        if rebuilt != *self {
            return Err(RouteError::Invalid(
                "claimed resources do not match the path".into(),
            ));
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Policy {
    #[default]
    MinLoss,
    MinTurns,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PlanOptions {
    pub policy: Policy,
    pub max_turns: usize,
    /// Require exactly this many turns.
    pub forced_turns: Option<usize>,
    pub wg_index: usize,
}

impl Default for PlanOptions {
    fn default() -> Self {
        Self {
            policy: Policy::MinLoss,
            max_turns: 2,
            forced_turns: None,
            wg_index: 0,
        }
    }
}

/// Loss parameters beyond the per-interaction switch losses.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct LossParams {
    pub switch: SwitchLossModel,
    /// Edge couplers plus waveguide allowance, independent of distance.
    pub fixed_loss_db: f64,
    pub db_per_cm: f64,
    pub tile_pitch_mm: f64,
}

impl Default for LossParams {
    fn default() -> Self {
        Self {
            switch: SwitchLossModel::default(),
            fixed_loss_db: 3.0,
            db_per_cm: 0.0,
            tile_pitch_mm: 62.0,
        }
    }
}

impl LossParams {
    /// Total loss of a route with `hops` interactions of which `turns` turn.
    pub fn total_for(&self, hops: usize, turns: usize) -> f64 {
        let bypasses = hops - turns;
        bypasses as f64 * self.switch.thru_off_db
            + turns as f64 * self.switch.drop_on_db
            + self.propagation_db(hops)
            + self.fixed_loss_db
    }

    fn propagation_db(&self, hops: usize) -> f64 {
        hops as f64 * self.tile_pitch_mm / 10.0 * self.db_per_cm
    }
}

/// Plans a route between two EICs.
///
/// Candidate turn counts are ranked by the policy (loss then turns, or turns
/// then loss); for the first count that admits a path, the lexicographically
/// smallest waypoint list is returned.
pub fn plan(
    panel: &PanelTopology,
    src: &str,
    dst: &str,
    opts: &PlanOptions,
    loss: &LossParams,
) -> Result<Route, RouteError> {
    if src == dst {
        return Err(RouteError::Degenerate(src.to_owned()));
    }
    let a = panel.locate_eic(src)?.tile;
    let b = panel.locate_eic(dst)?.tile;
    if opts.wg_index >= panel.wg_per_bundle() {
        return Err(RouteError::Invalid(format!(
            "wg_index {} outside bundle",
            opts.wg_index
        )));
    }
    let infeasible = || RouteError::Infeasible {
        src: src.to_owned(),
        dst: dst.to_owned(),
        max_turns: opts.max_turns,
    };
    if panel.is_masked(a) || panel.is_masked(b) {
        return Err(infeasible());
    }
    let hops = manhattan_hops(a, b);
    let mut candidates: Vec<usize> = match opts.forced_turns {
        Some(k) if k <= opts.max_turns => vec![k],
        Some(_) => vec![],
        None => (0..=opts.max_turns.min(hops.saturating_sub(1))).collect(),
    };
    match opts.policy {
        Policy::MinLoss => candidates.sort_by(|&x, &y| {
            loss.total_for(hops, x)
                .total_cmp(&loss.total_for(hops, y))
                .then(x.cmp(&y))
        }),
        Policy::MinTurns => candidates.sort(),
    }
    let mut search = TurnSearch::new(panel, b);
    for k in candidates {
        if let Some(waypoints) = search.lexmin_path(a, k) {
            return Route::from_waypoints(src, dst, waypoints, opts.wg_index);
        }
    }
    Err(infeasible())
}

/// Memoized "can finish with exactly `k` more turns" over
/// `(tile, incoming heading, turns left)`.
struct TurnSearch<'a> {
    panel: &'a PanelTopology,
    dst: TileCoord,
    memo: HashMap<(TileCoord, Direction, usize), bool>,
}

impl<'a> TurnSearch<'a> {
    fn new(panel: &'a PanelTopology, dst: TileCoord) -> Self {
        Self {
            panel,
            dst,
            memo: HashMap::new(),
        }
    }

    fn usable(&self, t: TileCoord) -> bool {
        self.panel.contains(t) && !self.panel.is_masked(t)
    }

    /// Arrived at `at` heading `h`; can we reach dst using exactly `left` turns?
    fn completes(&mut self, at: TileCoord, h: Direction, left: usize) -> bool {
        if at == self.dst {
            return left == 0;
        }
        if let Some(&v) = self.memo.get(&(at, h, left)) {
            return v;
        }
        let mut ok = false;
        for h2 in forward_headings(at, self.dst) {
            let cost = usize::from(h2 != h);
            if cost > left {
                continue;
            }
            if let Some(n) = step(at, h2).filter(|&n| self.usable(n)) {
                if self.completes(n, h2, left - cost) {
                    ok = true;
                    break;
                }
            }
        }
        self.memo.insert((at, h, left), ok);
        ok
    }

    fn lexmin_path(&mut self, src: TileCoord, turns: usize) -> Option<Vec<TileCoord>> {
        if src == self.dst {
            return (turns == 0).then(|| vec![src]);
        }
        let mut path = vec![src];
        let mut at = src;
        let mut cur: Option<Direction> = None;
        let mut left = turns;
        while at != self.dst {
            let mut best: Option<(TileCoord, Direction, usize)> = None;
            for h2 in forward_headings(at, self.dst) {
                let cost = match cur {
                    Some(h) => usize::from(h2 != h),
                    None => 0,
                };
                if cost > left {
                    continue;
                }
                let Some(n) = step(at, h2).filter(|&n| self.usable(n)) else {
                    continue;
                };
                if self.completes(n, h2, left - cost) && best.is_none_or(|(bn, _, _)| n < bn) {
                    best = Some((n, h2, left - cost));
                }
            }
            let (n, h2, l) = best?;
            path.push(n);
            at = n;
            cur = Some(h2);
            left = l;
        }
        Some(path)
    }
}

/// Every shortest route with at most `max_turns` turns, in lexicographic
/// waypoint order, found by exhaustive depth-first search.
pub fn enumerate_routes(
    panel: &PanelTopology,
    src: &str,
    dst: &str,
    max_turns: usize,
) -> Result<Vec<Route>, RouteError> {
    let tiles = panel.rows() * panel.cols();
    if tiles > ENUMERATION_TILE_LIMIT {
        return Err(RouteError::TooLarge {
            tiles,
            limit: ENUMERATION_TILE_LIMIT,
        });
    }
    if src == dst {
        return Err(RouteError::Degenerate(src.to_owned()));
    }
    let a = panel.locate_eic(src)?.tile;
    let b = panel.locate_eic(dst)?.tile;
    let mut out = Vec::new();
    if panel.is_masked(a) || panel.is_masked(b) {
        return Ok(out);
    }

    fn dfs(
        panel: &PanelTopology,
        dst: TileCoord,
        path: &mut Vec<TileCoord>,
        turns: usize,
        max_turns: usize,
        found: &mut Vec<Vec<TileCoord>>,
    ) {
        let at = *path.last().unwrap();
        if at == dst {
            found.push(path.clone());
            return;
        }
        // Neighbors in ascending coordinate order keep the output sorted.
        let mut next: Vec<TileCoord> = [
            at.row.checked_sub(1).map(|r| TileCoord::new(r, at.col)),
            at.col.checked_sub(1).map(|c| TileCoord::new(at.row, c)),
            Some(TileCoord::new(at.row, at.col + 1)),
            Some(TileCoord::new(at.row + 1, at.col)),
        ]
        .into_iter()
        .flatten()
        .filter(|&n| panel.contains(n) && !panel.is_masked(n))
        .filter(|&n| manhattan_hops(n, dst) + 1 == manhattan_hops(at, dst))
        .collect();
        next.sort();
        for n in next {
            let new_turns = if path.len() >= 2 {
                let prev = path[path.len() - 2];
                let straight = (prev.row == at.row && at.row == n.row)
                    || (prev.col == at.col && at.col == n.col);
                turns + usize::from(!straight)
            } else {
                turns
            };
            if new_turns > max_turns {
                continue;
            }
            path.push(n);
            dfs(panel, dst, path, new_turns, max_turns, found);
            path.pop();
        }
    }

    let mut found = Vec::new();
    dfs(panel, b, &mut vec![a], 0, max_turns, &mut found);
    for wps in found {
        out.push(Route::from_waypoints(src, dst, wps, 0)?);
    }
    Ok(out)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LossBudget {
    pub n_bypass: usize,
    pub n_turn: usize,
    pub switch_loss_db: f64,
    pub propagation_loss_db: f64,
    pub fixed_loss_db: f64,
    pub total_loss_db: f64,
    pub required_carrier_dbm: f64,
    pub required_carrier_mw: f64,
}

pub fn loss_budget(route: &Route, loss: &LossParams, pd: &Photodetector) -> LossBudget {
    let n_turn = route.turns();
    let n_bypass = route.bypasses();
    let switch_loss_db =
        n_bypass as f64 * loss.switch.thru_off_db + n_turn as f64 * loss.switch.drop_on_db;
    let propagation_loss_db = loss.propagation_db(route.interactions.len());
    let total_loss_db = switch_loss_db + propagation_loss_db + loss.fixed_loss_db;
    let required_carrier_dbm = pd.sensitivity_dbm + total_loss_db;
    LossBudget {
        n_bypass,
        n_turn,
        switch_loss_db,
        propagation_loss_db,
        fixed_loss_db: loss.fixed_loss_db,
        total_loss_db,
        required_carrier_dbm,
        required_carrier_mw: dbm_to_mw(required_carrier_dbm),
    }
}

/// Worst-case crosstalk at `route`'s receiver, in dB relative to its signal.
///
/// Every interaction of every other route leaks through its node's isolation
/// ports; a leak counts when it exits onto a directed segment claimed by
/// `route`, after which it follows `route` to the receiver. All carriers
/// launch at equal power. Returns -inf when nothing lands.
pub fn crosstalk_floor(route: &Route, other_active: &[Route], loss_model: &SwitchLossModel) -> f64 {
    let interaction_loss =
        |r: &Route, i: usize| loss_model.interaction_loss_db(r.interactions[i].kind);
    let signal_db = -(0..route.interactions.len())
        .map(|i| interaction_loss(route, i))
        .sum::<f64>();

    // Loss the victim adds downstream of one of its own segments.
    let downstream = |seg: &DirectedSegment| -> Option<f64> {
        if !route.claimed_segments.contains(seg) {
            return None;
        }
        let pos = route
            .waypoints
            .iter()
            .position(|&w| w == seg.segment.tile)?;
        Some(
            (pos..route.interactions.len())
                .map(|i| interaction_loss(route, i))
                .sum(),
        )
    };

    let mut terms = Vec::new();
    for other in other_active {
        let mut upstream = 0.0;
        for (i, state) in other.node_states(*loss_model).iter().enumerate() {
            let inter = &other.interactions[i];
            if let Ok(leaks) = state.leakage(inter.path.in_dir()) {
                for (side, leak_db) in leaks {
                    let landing = DirectedSegment::new(inter.tile, side, other.wg_index);
                    if let Some(down) = downstream(&landing) {
                        terms.push(-(upstream + leak_db + down));
                    }
                }
            }
            upstream += interaction_loss(other, i);
        }
    }
    power_sum_db(terms) - signal_db
}
