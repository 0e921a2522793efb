//! Simulation and planning toolkit for reconfigurable photonic interposer
//! fabrics built from waveguide meshes and dual-resonator crossbar switches.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod alloc;
pub mod budget;
pub mod config;
pub mod devices;
pub mod report;
pub mod route;
pub mod sim;
pub mod topology;
pub mod units;
pub mod xbar;

pub use alloc::{AllocError, SlotAllocation};
pub use budget::{LinkBudgetReport, LinkClass, Preset};
pub use config::{parse_config, ConfigError, OutputFormat, RunConfig};
pub use route::{plan, LossParams, PlanOptions, Policy, Route, RouteError};
pub use sim::{SimConfig, SimReport, Workload, WorkloadParams};
pub use topology::{PanelSpec, PanelTopology, TileCoord};
pub use xbar::{Direction, SwitchLossModel};
