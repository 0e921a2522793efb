//! `photonic-fabric`: link budgets, route planning, slot allocation, traffic
//! simulation and device calibration from the command line.
//!
//! Exit codes: 0 success, 2 configuration or usage error, 3 infeasible route
//! or allocation, 4 internal invariant violation.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use fabric_core::alloc::{AllocError, DeniedEntry, SlotAllocation, SlotTrace, TraceEntry};
use fabric_core::budget::{analyze, compare, preset, BudgetError, Preset};
use fabric_core::config::{parse_config, OutputFormat, RunConfig};
use fabric_core::devices::DeviceError;
use fabric_core::report::{
    device_report, render_budget, render_comparison, render_devices, render_route, render_sim,
    render_slot_trace, render_sweep, RouteReport,
};
use fabric_core::route::{loss_budget, plan, PlanOptions, Policy, RouteError};
use fabric_core::sim::{generate, run, sweep, GridPoint, SimError};
use fabric_core::topology::{PanelSpec, PanelTopology, TopologyError};

#[derive(Parser)]
#[command(
    name = "photonic-fabric",
    version,
    about = "Photonic interposer fabric toolkit"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Data-link budget of a unit interposer.
    Budget(BudgetArgs),
    /// Plan one optical route and its power budget.
    Route(RouteArgs),
    /// Grant a list of transfers in one slot.
    Allocate(AllocateArgs),
    /// Run the slotted traffic simulation.
    Simulate(SimulateArgs),
    /// Calibrate the switch resonator and summarize device models.
    Devices(DevicesArgs),
}

#[derive(Args)]
struct Common {
    /// JSON run configuration.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long, conflicts_with = "csv")]
    json: bool,
}

#[derive(Clone, Copy, ValueEnum)]
enum PresetArg {
    Silicon,
    Photonic,
}

#[derive(Args)]
struct BudgetArgs {
    #[arg(long, value_enum)]
    preset: Option<PresetArg>,
    /// Compare the photonic preset against the silicon preset.
    #[arg(long, conflicts_with = "preset")]
    compare: bool,
    #[command(flatten)]
    common: Common,
    #[arg(long)]
    csv: bool,
}

#[derive(Clone, Copy, ValueEnum)]
enum PolicyArg {
    MinLoss,
    MinTurns,
}

#[derive(Args)]
struct PanelArgs {
    /// Panel rows when no config is given.
    #[arg(long, default_value_t = 8)]
    rows: usize,
    #[arg(long, default_value_t = 8)]
    cols: usize,
}

#[derive(Args)]
struct RouteArgs {
    #[arg(long)]
    from: String,
    #[arg(long)]
    to: String,
    #[arg(long, value_enum)]
    policy: Option<PolicyArg>,
    #[arg(long)]
    max_turns: Option<usize>,
    /// Require exactly this many turns.
    #[arg(long)]
    forced_turns: Option<usize>,
    #[arg(long)]
    wg: Option<usize>,
    #[command(flatten)]
    panel: PanelArgs,
    #[command(flatten)]
    common: Common,
    #[arg(long)]
    csv: bool,
}

#[derive(Args)]
struct AllocateArgs {
    /// Transfer as SRC:DST; repeat for more.
    #[arg(long = "pair", required = true)]
    pairs: Vec<String>,
    #[arg(long, value_enum)]
    policy: Option<PolicyArg>,
    #[arg(long, default_value_t = 0)]
    slot: u64,
    #[command(flatten)]
    panel: PanelArgs,
    #[command(flatten)]
    common: Common,
    #[arg(long)]
    csv: bool,
}

#[derive(Args)]
struct SimulateArgs {
    #[arg(long)]
    slots: Option<u64>,
    #[arg(long, env = "PHOTONIC_FABRIC_SEED")]
    seed: Option<u64>,
    /// Write one CSV row per grid point to this file.
    #[arg(long, value_name = "OUT")]
    csv: Option<PathBuf>,
    /// Sweep bundle widths, e.g. `1,4,26`.
    #[arg(long, value_delimiter = ',')]
    wg_bundles: Vec<usize>,
    /// Sweep XPU duty, e.g. `0.5,0.9`.
    #[arg(long, value_delimiter = ',')]
    duties: Vec<f64>,
    #[command(flatten)]
    panel: PanelArgs,
    #[command(flatten)]
    common: Common,
}

#[derive(Args)]
struct DevicesArgs {
    /// Target free spectral range of the switch resonator.
    #[arg(long, default_value_t = 100.0)]
    fsr_ghz: f64,
    #[command(flatten)]
    common: Common,
    #[arg(long)]
    csv: bool,
}

enum Failure {
    Config(String),
    Infeasible(String),
    Internal(String),
}

impl Failure {
    fn code(&self) -> u8 {
        match self {
            Failure::Config(_) => 2,
            Failure::Infeasible(_) => 3,
            Failure::Internal(_) => 4,
        }
    }

    fn message(&self) -> &str {
        match self {
            Failure::Config(m) | Failure::Infeasible(m) | Failure::Internal(m) => m,
        }
    }
}

impl From<RouteError> for Failure {
    fn from(e: RouteError) -> Self {
        match e {
            RouteError::Degenerate(_) | RouteError::Infeasible { .. } => {
                Failure::Infeasible(e.to_string())
            }
            RouteError::Topology(_) | RouteError::Invalid(_) | RouteError::TooLarge { .. } => {
                Failure::Config(e.to_string())
            }
        }
    }
}

impl From<TopologyError> for Failure {
    fn from(e: TopologyError) -> Self {
        Failure::Config(e.to_string())
    }
}

impl From<BudgetError> for Failure {
    fn from(e: BudgetError) -> Self {
        Failure::Config(e.to_string())
    }
}

impl From<DeviceError> for Failure {
    fn from(e: DeviceError) -> Self {
        match e {
            DeviceError::CalibrationFailure { .. } => Failure::Infeasible(e.to_string()),
            _ => Failure::Config(e.to_string()),
        }
    }
}

impl From<SimError> for Failure {
    fn from(e: SimError) -> Self {
        match e {
            SimError::Invariant { .. } => Failure::Internal(e.to_string()),
            _ => Failure::Config(e.to_string()),
        }
    }
}

fn load(common: &Common, panel: Option<&PanelArgs>) -> Result<RunConfig, Failure> {
    let mut cfg = match &common.config {
        Some(path) => {
            let text = std::fs::read_to_string(path)
                .map_err(|e| Failure::Config(format!("{}: {e}", path.display())))?;
            parse_config(&text).map_err(|e| Failure::Config(format!("{}: {e}", path.display())))?
        }
        None => {
            let (rows, cols) = panel.map_or((1, 1), |p| (p.rows, p.cols));
            RunConfig::with_panel(PanelSpec::new(rows, cols))
        }
    };
    if common.json {
        cfg.format = OutputFormat::Json;
    }
    Ok(cfg)
}

fn with_csv(mut cfg: RunConfig, csv: bool) -> RunConfig {
    if csv {
        cfg.format = OutputFormat::Csv;
    }
    cfg
}

fn policy(arg: Option<PolicyArg>, fallback: Policy) -> Policy {
    match arg {
        Some(PolicyArg::MinLoss) => Policy::MinLoss,
        Some(PolicyArg::MinTurns) => Policy::MinTurns,
        None => fallback,
    }
}

fn budget(args: BudgetArgs) -> Result<String, Failure> {
    let cfg = with_csv(load(&args.common, None)?, args.csv);
    if args.compare {
        let si = preset(Preset::SiliconUnit).analyze()?;
        let ph = preset(Preset::PhotonicUnit).analyze()?;
        return Ok(render_comparison(&compare(&si, &ph), cfg.format));
    }
    let input = match (args.preset, cfg.budget) {
        (Some(PresetArg::Silicon), _) => preset(Preset::SiliconUnit),
        (Some(PresetArg::Photonic), _) => preset(Preset::PhotonicUnit),
        (None, Some(custom)) => custom,
        (None, None) => {
            return Err(Failure::Config(
                "give --preset or a config with a `budget` section".into(),
            ))
        }
    };
    let report = analyze(&input.classes, input.carrier_power_w)?;
    Ok(render_budget(&report, cfg.format))
}

fn route(args: RouteArgs) -> Result<String, Failure> {
    let cfg = with_csv(load(&args.common, Some(&args.panel))?, args.csv);
    let panel = PanelTopology::from_spec(&cfg.panel)?;
    let base = cfg.sim.plan;
    let opts = PlanOptions {
        policy: policy(args.policy, base.policy),
        max_turns: args.max_turns.unwrap_or(base.max_turns),
        forced_turns: args.forced_turns.or(base.forced_turns),
        wg_index: args.wg.unwrap_or(base.wg_index),
    };
    let r = plan(&panel, &args.from, &args.to, &opts, &cfg.loss)?;
    let b = loss_budget(&r, &cfg.loss, &cfg.devices.detector);
    Ok(render_route(&RouteReport::new(&r, &b), cfg.format))
}

fn allocate(args: AllocateArgs) -> Result<(String, bool), Failure> {
    let cfg = with_csv(load(&args.common, Some(&args.panel))?, args.csv);
    let panel = PanelTopology::from_spec(&cfg.panel)?;
    let opts = PlanOptions {
        policy: policy(args.policy, cfg.sim.plan.policy),
        ..cfg.sim.plan
    };
    let mut alloc = SlotAllocation::new(cfg.loss.switch, opts.max_turns);
    alloc.slot = args.slot;
    let mut trace = SlotTrace {
        slot: args.slot,
        ..Default::default()
    };
    for pair in &args.pairs {
        let (src, dst) = pair
            .split_once(':')
            .ok_or_else(|| Failure::Config(format!("`{pair}` is not SRC:DST")))?;
        let deny = |reason: String| DeniedEntry {
            src: src.to_owned(),
            dst: dst.to_owned(),
            reason,
        };
        let planned = match plan(&panel, src, dst, &opts, &cfg.loss) {
            Ok(r) => r,
            Err(e @ RouteError::Topology(_)) => return Err(e.into()),
            Err(e) => {
                trace.denied.push(deny(e.to_string()));
                continue;
            }
        };
        let loss_db = cfg
            .loss
            .total_for(planned.interactions.len(), planned.turns());
        let turns = planned.turns();
        // first free waveguide of the bundle
        let mut last = None;
        for wg in 0..panel.wg_per_bundle() {
            match alloc.try_allocate(&panel, planned.on_waveguide(wg)) {
                Ok(()) => {
                    last = None;
                    break;
                }
                Err(e) => last = Some(e),
            }
        }
        match last {
            None => trace.granted.push(TraceEntry {
                src: src.to_owned(),
                dst: dst.to_owned(),
                turns,
                loss_db,
            }),
            Some(AllocError::Conflict(report)) => {
                let holders: Vec<String> = report
                    .clashes
                    .iter()
                    .map(|c| format!("{}->{}", c.holder_src, c.holder_dst))
                    .collect::<std::collections::BTreeSet<_>>()
                    .into_iter()
                    .collect();
                trace.denied.push(deny(format!(
                    "{} clashing resources held by {}",
                    report.clashes.len(),
                    holders.join(" ")
                )));
            }
            Some(e) => trace.denied.push(deny(e.to_string())),
        }
    }
    alloc.validate().map_err(Failure::Internal)?;
    let all_granted = trace.denied.is_empty();
    Ok((render_slot_trace(&trace, cfg.format), all_granted))
}

fn simulate(args: SimulateArgs) -> Result<String, Failure> {
    let cfg = load(&args.common, Some(&args.panel))?;
    let seed = args.seed.or(cfg.seed).unwrap_or(0);
    let mut workload = cfg.workload;
    if let Some(n) = args.slots {
        workload.slots = n;
    }
    let mut sim = cfg.sim.clone();
    sim.slots = Some(workload.slots);
    sim.seed = seed;

    let bundles: Vec<Option<usize>> = if args.wg_bundles.is_empty() {
        vec![None]
    } else {
        args.wg_bundles.iter().copied().map(Some).collect()
    };
    let duties: Vec<f64> = if args.duties.is_empty() {
        vec![workload.xpu_duty]
    } else {
        args.duties.clone()
    };
    if bundles.len() * duties.len() == 1 && args.csv.is_none() {
        let spec = PanelSpec {
            wg_per_bundle: bundles[0].unwrap_or(cfg.panel.wg_per_bundle),
            ..cfg.panel.clone()
        };
        let panel = PanelTopology::from_spec(&spec)?;
        let wl = generate(
            &panel,
            &fabric_core::WorkloadParams {
                xpu_duty: duties[0],
                ..workload
            },
            seed,
        )?;
        return Ok(render_sim(&run(&panel, &wl, &sim)?, cfg.format));
    }
    let mut grid = Vec::new();
    for &wg in &bundles {
        for &duty in &duties {
            grid.push(GridPoint {
                label: format!("wg={},duty={duty}", wg.unwrap_or(cfg.panel.wg_per_bundle)),
                wg_per_bundle: wg,
                workload: fabric_core::WorkloadParams {
                    xpu_duty: duty,
                    ..workload
                },
                seed,
            });
        }
    }
    let rows = sweep(&cfg.panel, &grid, &sim)?;
    if let Some(path) = &args.csv {
        std::fs::write(path, render_sweep(&rows, OutputFormat::Csv))
            .map_err(|e| Failure::Config(format!("{}: {e}", path.display())))?;
    }
    Ok(render_sweep(&rows, cfg.format))
}

fn devices(args: DevicesArgs) -> Result<String, Failure> {
    let cfg = with_csv(load(&args.common, None)?, args.csv);
    if args.fsr_ghz.is_nan() || args.fsr_ghz <= 0.0 {
        return Err(Failure::Config("--fsr-ghz must be > 0".into()));
    }
    let r = device_report(&cfg.devices, &cfg.loss.switch, args.fsr_ghz * 1e9)?;
    Ok(render_devices(&r, cfg.format))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Budget(a) => budget(a).map(|s| (s, true)),
        Command::Route(a) => route(a).map(|s| (s, true)),
        Command::Allocate(a) => allocate(a),
        Command::Simulate(a) => simulate(a).map(|s| (s, true)),
        Command::Devices(a) => devices(a).map(|s| (s, true)),
    };
    match result {
        Ok((out, ok)) => {
            print!("{out}");
            if ok {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(3)
            }
        }
        Err(f) => {
            eprintln!("error: {}", f.message());
            ExitCode::from(f.code())
        }
    }
}
