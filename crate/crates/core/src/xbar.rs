//! Crossing-node switch built from two add-drop resonators.
//!
//! Directions name the *side* of the node a signal enters or leaves through:
//! a signal entering from `West` and leaving through `East` travels eastward.
//! Straight-through paths need no resonator coupling and are shared by both
//! placements; each placement additionally couples four of the eight turns.

use std::collections::BTreeSet;
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::topology::NodeId;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SwitchError {
    #[error("{0}: both resonators ON is a forbidden configuration")]
    InvalidState(NodeId),
    #[error("{node}: state cannot realize path {path}")]
    UnreachablePath { node: NodeId, path: PathId },
    #[error("invalid switch loss model: {0}")]
    InvalidLossModel(String),
    #[error("a path must leave through a different side than it entered ({0:?})")]
    EchoPath(Direction),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Direction {
    North,
    South,
    East,
    West,
}

impl Direction {
    pub const ALL: [Direction; 4] = [
        Direction::North,
        Direction::South,
        Direction::East,
        Direction::West,
    ];

    pub const fn opposite(self) -> Self {
        match self {
            Direction::North => Direction::South,
            Direction::South => Direction::North,
            Direction::East => Direction::West,
            Direction::West => Direction::East,
        }
    }

    /// Quarter turn clockwise seen from above.
    pub const fn clockwise(self) -> Self {
        match self {
            Direction::North => Direction::East,
            Direction::East => Direction::South,
            Direction::South => Direction::West,
            Direction::West => Direction::North,
        }
    }

    pub const fn is_vertical(self) -> bool {
        matches!(self, Direction::North | Direction::South)
    }
}

impl fmt::Display for Direction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Direction::North => "N",
            Direction::South => "S",
            Direction::East => "E",
            Direction::West => "W",
        };
        f.write_str(s)
    }
}

/// A directed in/out propagation path through a node.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct PathId {
    in_dir: Direction,
    out_dir: Direction,
}

impl PathId {
    pub fn new(in_dir: Direction, out_dir: Direction) -> Result<Self, SwitchError> {
        if in_dir == out_dir {
            return Err(SwitchError::EchoPath(in_dir));
        }
        Ok(Self { in_dir, out_dir })
    }

    pub fn in_dir(self) -> Direction {
        self.in_dir
    }

    pub fn out_dir(self) -> Direction {
        self.out_dir
    }

    pub fn is_straight(self) -> bool {
        self.out_dir == self.in_dir.opposite()
    }

    /// All twelve paths in a fixed order.
    pub fn all() -> Vec<PathId> {
        let mut v = Vec::with_capacity(12);
        for i in Direction::ALL {
            for o in Direction::ALL {
                if i != o {
                    v.push(PathId {
                        in_dir: i,
                        out_dir: o,
                    });
                }
            }
        }
        v
    }
}

impl fmt::Display for PathId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}->{}", self.in_dir, self.out_dir)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Placement {
    ASouthwest,
    BNorthwest,
}

impl Placement {
    /// Side the coupled light leaves through when this resonator is ON.
    pub const fn turn_target(self, in_dir: Direction) -> Direction {
        use Direction::*;
        match (self, in_dir) {
            (Placement::ASouthwest, West) => North,
            (Placement::ASouthwest, North) => West,
            (Placement::ASouthwest, East) => South,
            (Placement::ASouthwest, South) => East,
            (Placement::BNorthwest, West) => South,
            (Placement::BNorthwest, South) => West,
            (Placement::BNorthwest, East) => North,
            (Placement::BNorthwest, North) => East,
        }
    }
}

/// Paths supported by a single resonator at `placement`: the four
/// straight-throughs plus its four coupled turns.
pub fn coverage_set(placement: Placement) -> BTreeSet<PathId> {
    PathId::all()
        .into_iter()
        .filter(|p| p.is_straight() || placement.turn_target(p.in_dir) == p.out_dir)
        .collect()
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InteractionKind {
    Bypass,
    Turn,
}

/// Per-interaction losses in dB (positive numbers are attenuation).
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SwitchLossModel {
    /// Add-to-drop loss of an ON resonator.
    pub drop_on_db: f64,
    /// Add-to-through loss with both resonators OFF.
    pub thru_off_db: f64,
    /// Residual add-to-through of an ON resonator.
    pub thru_on_isolation_db: f64,
    /// Residual add-to-drop of an OFF resonator.
    pub drop_off_isolation_db: f64,
}

impl Default for SwitchLossModel {
    fn default() -> Self {
        Self {
            drop_on_db: 0.5,
            thru_off_db: 0.25,
            thru_on_isolation_db: 24.0,
            drop_off_isolation_db: 15.0,
        }
    }
}

impl SwitchLossModel {
    pub fn validate(&self) -> Result<(), SwitchError> {
        let fields = [
            ("drop_on_db", self.drop_on_db),
            ("thru_off_db", self.thru_off_db),
            ("thru_on_isolation_db", self.thru_on_isolation_db),
            ("drop_off_isolation_db", self.drop_off_isolation_db),
        ];
        for (name, v) in fields {
            if v.is_nan() || v < 0.0 {
                return Err(SwitchError::InvalidLossModel(format!(
                    "{name} must be >= 0"
                )));
            }
        }
        if self.thru_on_isolation_db < self.thru_off_db {
            return Err(SwitchError::InvalidLossModel(
                "thru_on_isolation_db must be >= thru_off_db".into(),
            ));
        }
        if self.drop_off_isolation_db < self.drop_on_db {
            return Err(SwitchError::InvalidLossModel(
                "drop_off_isolation_db must be >= drop_on_db".into(),
            ));
        }
        Ok(())
    }

    pub fn interaction_loss_db(&self, kind: InteractionKind) -> f64 {
        match kind {
            InteractionKind::Bypass => self.thru_off_db,
            InteractionKind::Turn => self.drop_on_db,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Resolution {
    pub out_dir: Direction,
    pub loss_db: f64,
    pub kind: InteractionKind,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct XbarNodeState {
    pub node: NodeId,
    /// Southwestern resonator.
    pub resonator_a_on: bool,
    /// Northwestern resonator.
    pub resonator_b_on: bool,
    pub loss_model: SwitchLossModel,
}

impl XbarNodeState {
    pub fn off(node: NodeId, loss_model: SwitchLossModel) -> Self {
        Self {
            node,
            resonator_a_on: false,
            resonator_b_on: false,
            loss_model,
        }
    }

    /// State that realizes `path`.
    pub fn configured_for(node: NodeId, path: PathId, loss_model: SwitchLossModel) -> Self {
        let mut s = Self::off(node, loss_model);
        if !path.is_straight() {
            if Placement::ASouthwest.turn_target(path.in_dir) == path.out_dir {
                s.resonator_a_on = true;
            } else {
                s.resonator_b_on = true;
            }
        }
        s
    }

    pub fn is_valid(&self) -> bool {
        !(self.resonator_a_on && self.resonator_b_on)
    }

    pub fn is_off(&self) -> bool {
        !self.resonator_a_on && !self.resonator_b_on
    }

    fn active(&self) -> Result<Option<Placement>, SwitchError> {
        match (self.resonator_a_on, self.resonator_b_on) {
            (true, true) => Err(SwitchError::InvalidState(self.node)),
            (true, false) => Ok(Some(Placement::ASouthwest)),
            (false, true) => Ok(Some(Placement::BNorthwest)),
            (false, false) => Ok(None),
        }
    }

    pub fn resolve(&self, in_dir: Direction) -> Result<Resolution, SwitchError> {
        Ok(match self.active()? {
            None => Resolution {
                out_dir: in_dir.opposite(),
                loss_db: self.loss_model.thru_off_db,
                kind: InteractionKind::Bypass,
            },
            Some(p) => Resolution {
                out_dir: p.turn_target(in_dir),
                loss_db: self.loss_model.drop_on_db,
                kind: InteractionKind::Turn,
            },
        })
    }

    /// Resolves `path.in_dir` and checks that the state sends it to
    /// `path.out_dir`.
    pub fn route_through(&self, path: PathId) -> Result<Resolution, SwitchError> {
        let r = self.resolve(path.in_dir)?;
        if r.out_dir != path.out_dir {
            return Err(SwitchError::UnreachablePath {
                node: self.node,
                path,
            });
        }
        Ok(r)
    }

    /// Residual outputs other than the intended one, as `(side, attenuation_db)`.
    /// Infinite isolation produces no entry.
    pub fn leakage(&self, in_dir: Direction) -> Result<Vec<(Direction, f64)>, SwitchError> {
        let lm = &self.loss_model;
        let mut leaks = Vec::new();
        match self.active()? {
            Some(_) => {
                if lm.thru_on_isolation_db.is_finite() {
                    leaks.push((in_dir.opposite(), lm.thru_on_isolation_db));
                }
            }
            None => {
                if lm.drop_off_isolation_db.is_finite() {
                    for p in [Placement::ASouthwest, Placement::BNorthwest] {
                        leaks.push((p.turn_target(in_dir), lm.drop_off_isolation_db));
                    }
                }
            }
        }
        Ok(leaks)
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NodeKind {
    /// Micro-ring: FSR wider than the WDM grid, selects one carrier.
    Mrr,
    /// Racetrack: FSR matched to the WDM grid, switches every carrier at once.
    #[default]
    Rtr,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Granularity {
    PerWavelength,
    PerWaveguide,
}

pub fn granularity(kind: NodeKind) -> Granularity {
    match kind {
        NodeKind::Mrr => Granularity::PerWavelength,
        NodeKind::Rtr => Granularity::PerWaveguide,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::topology::TileCoord;
    use Direction::*;

    fn node() -> NodeId {
        NodeId {
            tile: TileCoord::new(0, 0),
            index: 0,
        }
    }

    #[test]
    fn coverage_cardinalities() {
        let a = coverage_set(Placement::ASouthwest);
        let b = coverage_set(Placement::BNorthwest);
        assert_eq!(a.len(), 8);
        assert_eq!(b.len(), 8);
        assert_eq!(a.union(&b).count(), 12);
        let shared: Vec<_> = a.intersection(&b).copied().collect();
        assert_eq!(shared.len(), 4);
        assert!(shared.iter().all(|p| p.is_straight()));
    }

    #[test]
    fn coverage_is_invariant_under_half_turn() {
        for placement in [Placement::ASouthwest, Placement::BNorthwest] {
            let set = coverage_set(placement);
            let rotated: BTreeSet<_> = set
                .iter()
                .map(|p| PathId::new(p.in_dir.opposite(), p.out_dir.opposite()).unwrap())
                .collect();
            assert_eq!(set, rotated);
        }
    }

    #[test]
    fn resolve_examples() {
        let lm = SwitchLossModel::default();
        let off = XbarNodeState::off(node(), lm);
        assert_eq!(
            off.resolve(West).unwrap(),
            Resolution {
                out_dir: East,
                loss_db: 0.25,
                kind: InteractionKind::Bypass
            }
        );
        let a_on = XbarNodeState::configured_for(node(), PathId::new(West, North).unwrap(), lm);
        assert!(a_on.resonator_a_on && !a_on.resonator_b_on);
        assert_eq!(
            a_on.resolve(West).unwrap(),
            Resolution {
                out_dir: North,
                loss_db: 0.5,
                kind: InteractionKind::Turn
            }
        );
        let both = XbarNodeState {
            resonator_a_on: true,
            resonator_b_on: true,
            ..off
        };
        assert_eq!(both.resolve(North), Err(SwitchError::InvalidState(node())));
        assert!(both.leakage(North).is_err());
    }

    #[test]
    fn route_through_rejects_uncovered_turn() {
        let lm = SwitchLossModel::default();
        let a_on = XbarNodeState::configured_for(node(), PathId::new(West, North).unwrap(), lm);
        let err = a_on.route_through(PathId::new(West, South).unwrap());
        assert!(matches!(err, Err(SwitchError::UnreachablePath { .. })));
    }

    #[test]
    fn leakage_examples() {
        let lm = SwitchLossModel::default();
        let a_on = XbarNodeState::configured_for(node(), PathId::new(West, North).unwrap(), lm);
        assert_eq!(a_on.leakage(West).unwrap(), vec![(East, 24.0)]);

        let off = XbarNodeState::off(node(), lm);
        let leaks = off.leakage(West).unwrap();
        assert_eq!(leaks, vec![(North, 15.0), (South, 15.0)]);

        let ideal = SwitchLossModel {
            thru_on_isolation_db: f64::INFINITY,
            drop_off_isolation_db: f64::INFINITY,
            ..lm
        };
        assert!(XbarNodeState::off(node(), ideal)
            .leakage(West)
            .unwrap()
            .is_empty());
        assert!(XbarNodeState {
            resonator_a_on: true,
            ..XbarNodeState::off(node(), ideal)
        }
        .leakage(West)
        .unwrap()
        .is_empty());
    }

    #[test]
    fn granularity_examples() {
        assert_eq!(granularity(NodeKind::Rtr), Granularity::PerWaveguide);
        assert_eq!(granularity(NodeKind::Mrr), Granularity::PerWavelength);
        assert_eq!(granularity(NodeKind::default()), Granularity::PerWaveguide);
    }

    #[test]
    fn loss_model_validation() {
        assert!(SwitchLossModel::default().validate().is_ok());
        let bad = SwitchLossModel {
            drop_on_db: -1.0,
            ..Default::default()
        };
        assert!(bad.validate().is_err());
        let inverted = SwitchLossModel {
            drop_off_isolation_db: 0.1,
            ..Default::default()
        };
        assert!(inverted.validate().is_err());
        assert!(PathId::new(North, North).is_err());
    }
}
