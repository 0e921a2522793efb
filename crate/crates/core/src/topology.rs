//! Panel topology: a rectangular grid of unit-interposer tiles, each with a
//! vertical and a horizontal waveguide bundle, one switch region of crossing
//! nodes, and a set of electronic chiplet (EIC) sites.
//!
//! Row 0 is the southern edge of the panel and column 0 the western edge, so
//! heading north increases the row index and heading east increases the
//! column index.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Default number of waveguides per direction per tile.
pub const DEFAULT_WG_PER_BUNDLE: usize = 26;
/// Default number of WDM carriers per waveguide.
pub const DEFAULT_LAMBDAS_PER_WG: usize = 32;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum TopologyError {
    #[error("invalid panel dimension: {0}")]
    Dimension(String),
    #[error("coordinate ({row}, {col}) is outside the {rows}x{cols} panel")]
    Coordinate {
        row: usize,
        col: usize,
        rows: usize,
        cols: usize,
    },
    #[error("no EIC named `{0}`")]
    NotFound(String),
    #[error("duplicate EIC id `{0}`")]
    DuplicateEic(String),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct TileCoord {
    pub row: usize,
    pub col: usize,
}

impl TileCoord {
    pub const fn new(row: usize, col: usize) -> Self {
        Self { row, col }
    }
}

impl fmt::Display for TileCoord {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({},{})", self.row, self.col)
    }
}

impl From<(usize, usize)> for TileCoord {
    fn from((row, col): (usize, usize)) -> Self {
        Self { row, col }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EicKind {
    Xpu,
    HbmStack,
    SwitchController,
    Other,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct EicSite {
    pub id: String,
    pub kind: EicKind,
    pub tile: TileCoord,
    /// E/O interfaces.
    pub tx_ports: u32,
    /// O/E interfaces.
    pub rx_ports: u32,
}

/// Waveguide bundle orientation inside a tile.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Axis {
    Vertical,
    Horizontal,
}

/// One physical waveguide of one tile's bundle.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct WgSegment {
    pub tile: TileCoord,
    pub axis: Axis,
    pub index: usize,
}

/// Crossing node of vertical and horizontal waveguide `index` inside a
/// tile's switch region.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct NodeId {
    pub tile: TileCoord,
    pub index: usize,
}

impl fmt::Display for NodeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "node{}#{}", self.tile, self.index)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct SwitchRegionId(pub usize);

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct UnitTile {
    pub coord: TileCoord,
    pub eic_sites: Vec<EicSite>,
    pub switch_region: SwitchRegionId,
}

/// Per-tile EIC population used by [`build_panel`].
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TileTemplate {
    pub hbm_stacks: u32,
    /// Data links terminated on the XPU (split evenly between TX and RX).
    pub xpu_links: u32,
    /// Data links per HBM stack.
    pub hbm_links: u32,
    pub switch_controller: bool,
}

impl Default for TileTemplate {
    fn default() -> Self {
        Self {
            hbm_stacks: 12,
            xpu_links: 832,
            hbm_links: 32,
            switch_controller: true,
        }
    }
}

impl TileTemplate {
    fn sites_for(&self, tile: TileCoord) -> Vec<EicSite> {
        let TileCoord { row, col } = tile;
        let mut sites = Vec::with_capacity(self.hbm_stacks as usize + 2);
        sites.push(EicSite {
            id: format!("XPU_{row}_{col}"),
            kind: EicKind::Xpu,
            tile,
            tx_ports: self.xpu_links.div_ceil(2),
            rx_ports: self.xpu_links / 2,
        });
        for k in 0..self.hbm_stacks {
            sites.push(EicSite {
                id: format!("HBM_{row}_{col}_{k}"),
                kind: EicKind::HbmStack,
                tile,
                tx_ports: self.hbm_links.div_ceil(2),
                rx_ports: self.hbm_links / 2,
            });
        }
        if self.switch_controller {
            sites.push(EicSite {
                id: format!("CTRL_{row}_{col}"),
                kind: EicKind::SwitchController,
                tile,
                tx_ports: 0,
                rx_ports: 0,
            });
        }
        sites
    }
}

/// Shape of a panel, independent of its EIC population.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PanelSpec {
    pub rows: usize,
    pub cols: usize,
    #[serde(default = "default_wg_per_bundle")]
    pub wg_per_bundle: usize,
    #[serde(default = "default_lambdas_per_wg")]
    pub lambdas_per_wg: usize,
    #[serde(default)]
    pub tile_template: TileTemplate,
    /// Tiles whose switch region is unusable for routing.
    #[serde(default)]
    pub masked: Vec<TileCoord>,
}

fn default_wg_per_bundle() -> usize {
    DEFAULT_WG_PER_BUNDLE
}

fn default_lambdas_per_wg() -> usize {
    DEFAULT_LAMBDAS_PER_WG
}

impl PanelSpec {
    pub fn new(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            wg_per_bundle: DEFAULT_WG_PER_BUNDLE,
            lambdas_per_wg: DEFAULT_LAMBDAS_PER_WG,
            tile_template: TileTemplate::default(),
            masked: Vec::new(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PanelTopology {
    rows: usize,
    cols: usize,
    wg_per_bundle: usize,
    lambdas_per_wg: usize,
    tiles: Vec<UnitTile>,
    masked: BTreeSet<TileCoord>,
    eic_index: BTreeMap<String, (usize, usize)>,
}

/// Builds a `rows` x `cols` panel with the default bundle widths.
pub fn build_panel(
    rows: usize,
    cols: usize,
    tile_template: &TileTemplate,
) -> Result<PanelTopology, TopologyError> {
    PanelTopology::from_spec(&PanelSpec {
        tile_template: tile_template.clone(),
        ..PanelSpec::new(rows, cols)
    })
}

/// `|Δrow| + |Δcol|`, the number of switch interactions along any shortest
/// route between the two tiles.
pub fn manhattan_hops(a: TileCoord, b: TileCoord) -> usize {
    a.row.abs_diff(b.row) + a.col.abs_diff(b.col)
}

/// A resource of the fabric that a route can claim.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum FabricResource {
    Segment(WgSegment),
    Node(NodeId),
}

impl PanelTopology {
    pub fn from_spec(spec: &PanelSpec) -> Result<Self, TopologyError> {
        for (name, v) in [
            ("rows", spec.rows),
            ("cols", spec.cols),
            ("wg_per_bundle", spec.wg_per_bundle),
            ("lambdas_per_wg", spec.lambdas_per_wg),
        ] {
            if v == 0 {
                return Err(TopologyError::Dimension(format!(
                    "{name} must be at least 1"
                )));
            }
        }
        let mut tiles = Vec::with_capacity(spec.rows * spec.cols);
        let mut eic_index = BTreeMap::new();
        for row in 0..spec.rows {
            for col in 0..spec.cols {
                let coord = TileCoord::new(row, col);
                let tile_idx = tiles.len();
                let eic_sites = spec.tile_template.sites_for(coord);
                for (site_idx, site) in eic_sites.iter().enumerate() {
                    if eic_index
                        .insert(site.id.clone(), (tile_idx, site_idx))
                        .is_some()
                    {
                        return Err(TopologyError::DuplicateEic(site.id.clone()));
                    }
                }
                tiles.push(UnitTile {
                    coord,
                    eic_sites,
                    switch_region: SwitchRegionId(tile_idx),
                });
            }
        }
        let mut masked = BTreeSet::new();
        for &m in &spec.masked {
            if m.row >= spec.rows || m.col >= spec.cols {
                return Err(TopologyError::Coordinate {
                    row: m.row,
                    col: m.col,
                    rows: spec.rows,
                    cols: spec.cols,
                });
            }
            masked.insert(m);
        }
        Ok(Self {
            rows: spec.rows,
            cols: spec.cols,
            wg_per_bundle: spec.wg_per_bundle,
            lambdas_per_wg: spec.lambdas_per_wg,
            tiles,
            masked,
            eic_index,
        })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn wg_per_bundle(&self) -> usize {
        self.wg_per_bundle
    }

    pub fn lambdas_per_wg(&self) -> usize {
        self.lambdas_per_wg
    }

    pub fn tile_count(&self) -> usize {
        self.tiles.len()
    }

    /// Tiles in row-major order.
    pub fn tiles(&self) -> &[UnitTile] {
        &self.tiles
    }

    pub fn contains(&self, c: TileCoord) -> bool {
        c.row < self.rows && c.col < self.cols
    }

    pub fn check(&self, c: TileCoord) -> Result<TileCoord, TopologyError> {
        if self.contains(c) {
            Ok(c)
        } else {
            Err(TopologyError::Coordinate {
                row: c.row,
                col: c.col,
                rows: self.rows,
                cols: self.cols,
            })
        }
    }

    pub fn tile(&self, c: TileCoord) -> Result<&UnitTile, TopologyError> {
        let c = self.check(c)?;
        Ok(&self.tiles[c.row * self.cols + c.col])
    }

    pub fn is_masked(&self, c: TileCoord) -> bool {
        self.masked.contains(&c)
    }

    pub fn masked(&self) -> impl Iterator<Item = TileCoord> + '_ {
        self.masked.iter().copied()
    }

    /// Bounds-checked [`manhattan_hops`].
    pub fn hops(&self, a: TileCoord, b: TileCoord) -> Result<usize, TopologyError> {
        Ok(manhattan_hops(self.check(a)?, self.check(b)?))
    }

    pub fn locate_eic(&self, id: &str) -> Result<&EicSite, TopologyError> {
        let &(t, s) = self
            .eic_index
            .get(id)
            .ok_or_else(|| TopologyError::NotFound(id.to_owned()))?;
        Ok(&self.tiles[t].eic_sites[s])
    }

    pub fn eics(&self) -> impl Iterator<Item = &EicSite> {
        self.tiles.iter().flat_map(|t| t.eic_sites.iter())
    }

    pub fn eics_on(&self, c: TileCoord) -> &[EicSite] {
        match self.tile(c) {
            Ok(t) => &t.eic_sites,
            Err(_) => &[],
        }
    }

    /// All waveguide segments, row-major by tile, vertical before horizontal,
    /// then by index.
    pub fn segments(&self) -> impl Iterator<Item = WgSegment> + '_ {
        let wgs = self.wg_per_bundle;
        self.tiles.iter().flat_map(move |t| {
            [Axis::Vertical, Axis::Horizontal]
                .into_iter()
                .flat_map(move |axis| {
                    (0..wgs).map(move |index| WgSegment {
                        tile: t.coord,
                        axis,
                        index,
                    })
                })
        })
    }

    pub fn nodes(&self) -> impl Iterator<Item = NodeId> + '_ {
        let wgs = self.wg_per_bundle;
        self.tiles.iter().flat_map(move |t| {
            (0..wgs).map(move |index| NodeId {
                tile: t.coord,
                index,
            })
        })
    }

    /// Every claimable resource: all segments followed by all crossing nodes.
    pub fn enumerate_resources(&self) -> Vec<FabricResource> {
        self.segments()
            .map(FabricResource::Segment)
            .chain(self.nodes().map(FabricResource::Node))
            .collect()
    }
}
