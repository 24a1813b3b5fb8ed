//! Built-in test problems and the driver that runs them.

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use super::{
    exact_cell_averages, exact_cell_averages_split, linf_error_in, reconstruction_study, restrict_reference,
    ConvergenceTable, ReconCase,
};
use crate::cweno::ParamSet;
use crate::error::{Error, Result};
use crate::models::{EulerModel, ShallowWaterModel, State, StateVector, TrafficModel};
use crate::network::{Network, NodeCoupling, NodeKind, NodeSpec, StageReport};
use crate::scheme::{BoundaryClosure, EdgeGrid, EdgeState, TimeStepper};

/// Registry of built-in scenarios.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ScenarioKind {
    ReconSmooth,
    ReconDiscI25,
    ReconDiscI15,
    ShockAcoustic,
    ShockAcousticSplit,
    TrafficSmooth,
    TrafficJam,
    TrafficTdbc,
    ChannelNetwork,
    DamBreakA,
    DamBreakB,
}

impl ScenarioKind {
    pub const ALL: [ScenarioKind; 11] = [
        ScenarioKind::ReconSmooth,
        ScenarioKind::ReconDiscI25,
        ScenarioKind::ReconDiscI15,
        ScenarioKind::ShockAcoustic,
        ScenarioKind::ShockAcousticSplit,
        ScenarioKind::TrafficSmooth,
        ScenarioKind::TrafficJam,
        ScenarioKind::TrafficTdbc,
        ScenarioKind::ChannelNetwork,
        ScenarioKind::DamBreakA,
        ScenarioKind::DamBreakB,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ScenarioKind::ReconSmooth => "recon-smooth",
            ScenarioKind::ReconDiscI25 => "recon-disc-i25",
            ScenarioKind::ReconDiscI15 => "recon-disc-i15",
            ScenarioKind::ShockAcoustic => "shock-acoustic",
            ScenarioKind::ShockAcousticSplit => "shock-acoustic-split",
            ScenarioKind::TrafficSmooth => "traffic-smooth",
            ScenarioKind::TrafficJam => "traffic-jam",
            ScenarioKind::TrafficTdbc => "traffic-tdbc",
            ScenarioKind::ChannelNetwork => "channel-network",
            ScenarioKind::DamBreakA => "dam-break-a",
            ScenarioKind::DamBreakB => "dam-break-b",
        }
    }

    pub fn recon_case(self) -> Option<ReconCase> {
        match self {
            ScenarioKind::ReconSmooth => Some(ReconCase::Smooth),
            ScenarioKind::ReconDiscI25 => Some(ReconCase::DiscI25),
            ScenarioKind::ReconDiscI15 => Some(ReconCase::DiscI15),
            _ => None,
        }
    }

    pub fn spec(self) -> ScenarioSpec {
        ScenarioSpec::builtin(self)
    }
}

impl fmt::Display for ScenarioKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ScenarioKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let norm = s.to_ascii_lowercase().replace('_', "-");
        ScenarioKind::ALL
            .into_iter()
            .find(|k| k.name() == norm)
            .ok_or_else(|| {
                let known: Vec<&str> = ScenarioKind::ALL.iter().map(|k| k.name()).collect();
                Error::InvalidArgument(format!("unknown scenario '{s}' (known: {})", known.join(", ")))
            })
    }
}

/// How the error of a run is measured.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ErrorRule {
    /// The exact solution at the final time equals the initial data.
    Periodic,
    /// Restricted solution of the same problem on a finer level.
    Reference { level: u32 },
    /// No error measure (qualitative scenario).
    None,
}

/// Static description of a scenario.
#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioSpec {
    pub kind: ScenarioKind,
    pub model: &'static str,
    /// Mesh width at level 0; `h(n) = h0 * 2^-n`.
    pub h0: f64,
    pub final_time: f64,
    pub snapshot_times: Vec<f64>,
    pub stepper: Option<TimeStepper>,
    pub levels: (u32, u32),
    pub error_rule: ErrorRule,
    /// State components entering the error norm (all when empty).
    pub error_components: Vec<usize>,
}

impl ScenarioSpec {
    pub fn builtin(kind: ScenarioKind) -> Self {
        use ScenarioKind::*;
        let (model, h0, t, times, stepper, levels, rule): (_, _, _, Vec<f64>, _, _, _) = match kind {
            ReconSmooth | ReconDiscI25 | ReconDiscI15 => ("reconstruction", 0.25, 0.0, vec![], None, (1, 14), ErrorRule::None),
            ShockAcoustic | ShockAcousticSplit => (
                "euler",
                0.1,
                1.8,
                vec![1.8],
                Some(TimeStepper::FixedRatio(0.225)),
                (1, 3),
                ErrorRule::None,
            ),
            TrafficSmooth => (
                "traffic",
                0.02,
                0.4,
                vec![0.4],
                Some(TimeStepper::FixedRatio(0.5)),
                (0, 7),
                ErrorRule::Periodic,
            ),
            TrafficJam => (
                "traffic",
                0.02,
                0.15,
                vec![0.05, 0.15],
                Some(TimeStepper::FixedRatio(0.5)),
                (3, 3),
                ErrorRule::None,
            ),
            TrafficTdbc => (
                "traffic",
                0.02,
                0.4,
                vec![0.4],
                Some(TimeStepper::FixedRatio(0.5)),
                (0, 7),
                ErrorRule::Periodic,
            ),
            ChannelNetwork => (
                "shallow-water",
                0.01,
                0.2,
                vec![0.2],
                Some(TimeStepper::FixedRatio(0.5)),
                (0, 6),
                ErrorRule::Reference { level: 8 },
            ),
            DamBreakA | DamBreakB => (
                "shallow-water",
                0.02,
                0.6,
                vec![0.35, 0.6],
                Some(TimeStepper::Cfl(0.45)),
                (3, 3),
                ErrorRule::None,
            ),
        };
        // the channel study is measured in the discharge
        let error_components = if kind == ChannelNetwork { vec![1] } else { vec![] };
        Self { kind, model, h0, final_time: t, snapshot_times: times, stepper, levels, error_rule: rule, error_components }
    }

    pub fn h(&self, n: u32) -> f64 {
        self.h0 * 0.5f64.powi(n as i32)
    }
}

/// Cell data of one edge, detached from the model type.
#[derive(Debug, Clone, PartialEq)]
pub struct EdgeSnapshot {
    pub name: String,
    pub components: Vec<String>,
    pub x_center: Vec<f64>,
    /// One row per cell, one entry per component.
    pub values: Vec<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Snapshot {
    pub t: f64,
    pub edges: Vec<EdgeSnapshot>,
}

impl Snapshot {
    fn of<M: NodeCoupling>(net: &Network<M>, names: &[&str], t: f64) -> Self {
        let comps: Vec<String> = net.model.component_names().iter().map(|s| s.to_string()).collect();
        let edges = net
            .edges
            .iter()
            .zip(names)
            .map(|(e, name)| EdgeSnapshot {
                name: name.to_string(),
                components: comps.clone(),
                x_center: e.grid.centers().collect(),
                values: e.ubar.iter().map(|u| u.as_slice().to_vec()).collect(),
            })
            .collect();
        Snapshot { t, edges }
    }

    /// Min over all cells of component `k`.
    pub fn min_component(&self, k: usize) -> f64 {
        self.edges.iter().flat_map(|e| e.values.iter().map(move |v| v[k])).fold(f64::INFINITY, f64::min)
    }

    pub fn max_component(&self, k: usize) -> f64 {
        self.edges.iter().flat_map(|e| e.values.iter().map(move |v| v[k])).fold(f64::NEG_INFINITY, f64::max)
    }
}

/// Result of a single run.
#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioOutcome {
    pub snapshots: Vec<Snapshot>,
    pub steps: usize,
    /// L-infinity error at the final time, when an exact solution is known.
    pub error: Option<f64>,
}

/// Dam-break initial heights outside the dam.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum DamCase {
    A,
    B,
}

fn edge<S: StateVector>(
    x_left: f64,
    length: f64,
    h: f64,
    params: &ParamSet,
    data: Vec<S>,
    left: BoundaryClosure<S>,
    right: BoundaryClosure<S>,
) -> Result<EdgeState<S>> {
    let _ = h;
    let grid = EdgeGrid::new(x_left, length, data.len())?;
    EdgeState::new(grid, data, *params, left, right)
}

fn cells(length: f64, h: f64) -> usize {
    (length / h).round() as usize
}

const ROAD: f64 = 0.2;

fn wave(base: f64, amp: f64, s: f64) -> f64 {
    base + amp * (s - s.sin() / PI).sin()
}

/// Initial data of the traffic loop.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum TrafficInit {
    Smooth,
    Jam,
}

pub const TRAFFIC_ROADS: [&str; 3] = ["main", "upper", "lower"];

/// Main road into a dispersing node D (70% to the upper road), the upper and
/// lower roads into a merging node M, and M back into the main road.
pub fn traffic_loop(params: &ParamSet, n: u32, priority: f64, init: TrafficInit) -> Result<Network<TrafficModel>> {
    let h = 0.02 * 0.5f64.powi(n as i32);
    let g = EdgeGrid::new(0.0, ROAD, cells(ROAD, h))?;
    let port = BoundaryClosure::JunctionPort;
    let (main, upper, lower) = match init {
        TrafficInit::Smooth => (
            exact_cell_averages(|x| State([wave(0.20, 0.150, PI * x / ROAD)]), &g),
            exact_cell_averages(|x| State([wave(0.14, 0.105, PI * (x + ROAD) / ROAD)]), &g),
            exact_cell_averages(|x| State([wave(0.06, 0.045, PI * (x + ROAD) / ROAD)]), &g),
        ),
        TrafficInit::Jam => {
            let step = |a: f64, b: f64| move |x: f64| State([if x <= 0.05 { a } else { b }]);
            (
                vec![State([0.5]); g.cells],
                exact_cell_averages_split(step(0.35, 0.90), &g, &[0.05]),
                exact_cell_averages_split(step(0.15, 0.85), &g, &[0.05]),
            )
        }
    };
    // node 0 = D, node 1 = M
    let edges = vec![
        edge(0.0, ROAD, h, params, main, port(1), port(0))?,
        edge(0.0, ROAD, h, params, upper, port(0), port(1))?,
        edge(0.0, ROAD, h, params, lower, port(0), port(1))?,
    ];
    let nodes = vec![
        NodeSpec::new(NodeKind::TrafficDisperse { alpha: 0.7 }, vec![0], vec![1, 2]),
        NodeSpec::new(NodeKind::TrafficMerge { priority }, vec![1, 2], vec![0]),
    ];
    Network::new(TrafficModel::default(), edges, nodes)
}

const TDBC_LENGTH: f64 = 0.4;

/// Single road with a time-dependent inflow density and free outflow.
pub fn traffic_tdbc(params: &ParamSet, n: u32) -> Result<Network<TrafficModel>> {
    let h = 0.02 * 0.5f64.powi(n as i32);
    let l = TDBC_LENGTH;
    let g = EdgeGrid::new(0.0, l, cells(l, h))?;
    let data = exact_cell_averages(|x| State([wave(0.2, 0.15, 2.0 * PI * x / l)]), &g);
    let inflow = BoundaryClosure::dirichlet(move |t| State([wave(0.2, 0.15, -2.0 * PI * t / l)]));
    let edges = vec![edge(0.0, l, h, params, data, inflow, BoundaryClosure::FreeOutflow)?];
    Network::new(TrafficModel::default(), edges, vec![])
}

pub const CHANNELS: [(&str, usize, usize, f64); 7] = [
    ("AB", 0, 1, 0.1),
    ("BC", 1, 2, 0.05),
    ("BD", 1, 3, 0.05),
    ("BE", 1, 4, 0.15),
    ("CD", 2, 3, 0.05),
    ("DE", 3, 4, 0.05),
    ("EA", 4, 0, 0.05),
];

/// Closed network of five channel junctions A..E with a bump of water on AB.
pub fn channel_network(params: &ParamSet, n: u32) -> Result<Network<ShallowWaterModel>> {
    let h = 0.01 * 0.5f64.powi(n as i32);
    let model = ShallowWaterModel::default();
    let mut edges = Vec::new();
    let mut incoming = vec![Vec::new(); 5];
    let mut outgoing = vec![Vec::new(); 5];
    for (id, &(_, from, to, length)) in CHANNELS.iter().enumerate() {
        let g = EdgeGrid::new(0.0, length, cells(length, h))?;
        let data = if id == 0 {
            exact_cell_averages(|x| State([0.3 + 0.03 * (PI * x / 0.1).sin().powi(4), 0.0]), &g)
        } else {
            vec![State([0.3, 0.0]); g.cells]
        };
        edges.push(edge(
            0.0,
            length,
            h,
            params,
            data,
            BoundaryClosure::JunctionPort(from),
            BoundaryClosure::JunctionPort(to),
        )?);
        outgoing[from].push(id);
        incoming[to].push(id);
    }
    let nodes = incoming
        .into_iter()
        .zip(outgoing)
        .map(|(i, o)| NodeSpec::new(NodeKind::Channel { g: model.g }, i, o))
        .collect();
    Network::new(model, edges, nodes)
}

pub fn channel_names() -> Vec<&'static str> {
    CHANNELS.iter().map(|c| c.0).collect()
}

/// Euler shock-acoustic problem on `[-5, 5]` with `100 * 2^n` cells, either
/// as one domain or as two domains coupled at `x = 0`.
pub fn shock_acoustic(params: &ParamSet, n: u32, split: bool) -> Result<Network<EulerModel>> {
    let model = EulerModel::default();
    let total = 100 * (1usize << n);
    let h = 10.0 / total as f64;
    let init = move |x: f64| {
        if x < -4.0 {
            model.from_primitive(3.857143, 2.629369, 10.33333)
        } else {
            model.from_primitive(1.0 + 0.2 * (5.0 * x).sin(), 0.0, 1.0)
        }
    };
    let out = BoundaryClosure::FreeOutflow;
    let edges = if split {
        let gl = EdgeGrid::new(-5.0, 5.0, total / 2)?;
        let gr = EdgeGrid::new(0.0, 5.0, total / 2)?;
        vec![
            edge(-5.0, 5.0, h, params, exact_cell_averages_split(init, &gl, &[-4.0]), out.clone(), BoundaryClosure::InterfacePort(1))?,
            edge(0.0, 5.0, h, params, exact_cell_averages_split(init, &gr, &[-4.0]), BoundaryClosure::InterfacePort(0), out)?,
        ]
    } else {
        let g = EdgeGrid::new(-5.0, 10.0, total)?;
        vec![edge(-5.0, 10.0, h, params, exact_cell_averages_split(init, &g, &[-4.0]), out.clone(), out)?]
    };
    Network::new(model, edges, vec![])
}

/// Dam break between two walls on `[0, 1]` with `50 * 2^n` cells.
pub fn dam_break(params: &ParamSet, n: u32, case: DamCase) -> Result<Network<ShallowWaterModel>> {
    let total = 50 * (1usize << n);
    let low = match case {
        DamCase::A => 0.5,
        DamCase::B => 0.05,
    };
    let g = EdgeGrid::new(0.0, 1.0, total)?;
    let f = move |x: f64| State([if (0.4..=0.6).contains(&x) { 1.0 } else { low }, 0.0]);
    let data = exact_cell_averages_split(f, &g, &[0.4, 0.6]);
    let e = edge(0.0, 1.0, g.h(), params, data, BoundaryClosure::Wall, BoundaryClosure::Wall)?;
    Network::new(ShallowWaterModel::default(), vec![e], vec![])
}

enum Built {
    Traffic(Network<TrafficModel>, Vec<&'static str>),
    Water(Network<ShallowWaterModel>, Vec<&'static str>),
    Gas(Network<EulerModel>, Vec<&'static str>),
}

fn build(kind: ScenarioKind, params: &ParamSet, n: u32) -> Result<Built> {
    use ScenarioKind::*;
    Ok(match kind {
        TrafficSmooth => Built::Traffic(traffic_loop(params, n, 0.5, TrafficInit::Smooth)?, TRAFFIC_ROADS.to_vec()),
        TrafficJam => Built::Traffic(traffic_loop(params, n, 0.2, TrafficInit::Jam)?, TRAFFIC_ROADS.to_vec()),
        TrafficTdbc => Built::Traffic(traffic_tdbc(params, n)?, vec!["road"]),
        ChannelNetwork => Built::Water(channel_network(params, n)?, channel_names()),
        DamBreakA => Built::Water(dam_break(params, n, DamCase::A)?, vec!["channel"]),
        DamBreakB => Built::Water(dam_break(params, n, DamCase::B)?, vec!["channel"]),
        ShockAcoustic => Built::Gas(shock_acoustic(params, n, false)?, vec!["domain"]),
        ShockAcousticSplit => Built::Gas(shock_acoustic(params, n, true)?, vec!["left", "right"]),
        ReconSmooth | ReconDiscI25 | ReconDiscI15 => {
            return Err(Error::Unsupported(format!(
                "'{kind}' is a reconstruction study and has no time evolution; emit a table instead"
            )))
        }
    })
}

/// Advances `net` through the sorted `times`, recording a snapshot at each.
pub fn simulate<M: NodeCoupling>(
    net: &mut Network<M>,
    names: &[&str],
    stepper: &TimeStepper,
    times: &[f64],
) -> Result<(Vec<Snapshot>, usize)> {
    let mut sorted = times.to_vec();
    sorted.sort_by(f64::total_cmp);
    sorted.dedup();
    if sorted.first().is_some_and(|t| *t < 0.0 || !t.is_finite()) {
        return Err(Error::InvalidArgument(format!("snapshot times must be non-negative, got {sorted:?}")));
    }
    let mut t = 0.0;
    let mut steps = 0;
    let mut shots = Vec::with_capacity(sorted.len());
    let mut noop = |_: &StageReport<M::State>| Ok(());
    for target in sorted {
        steps += net.advance(t, target, stepper, &mut noop)?;
        t = target;
        shots.push(Snapshot::of(net, names, t));
    }
    Ok((shots, steps))
}

fn run_typed<M: NodeCoupling>(
    mut net: Network<M>,
    names: &[&str],
    spec: &ScenarioSpec,
    times: &[f64],
) -> Result<ScenarioOutcome> {
    let initial = net.states();
    let stepper = spec.stepper.expect("time-dependent scenarios define a stepper");
    let (snapshots, steps) = simulate(&mut net, names, &stepper, times)?;
    let at_final = times.iter().any(|t| (*t - spec.final_time).abs() <= 1e-12 * spec.final_time);
    let error = match spec.error_rule {
        ErrorRule::Periodic if at_final && times.iter().all(|t| *t <= spec.final_time) => {
            Some(linf_error_in(&net.states(), &initial, &spec.error_components)?)
        }
        _ => None,
    };
    Ok(ScenarioOutcome { snapshots, steps, error })
}

/// Runs a time-dependent scenario at level `n`, recording snapshots at
/// `times` (the scenario defaults when empty).
pub fn run_scenario(spec: &ScenarioSpec, params: &ParamSet, n: u32, times: &[f64]) -> Result<ScenarioOutcome> {
    let times = if times.is_empty() { spec.snapshot_times.as_slice() } else { times };
    match build(spec.kind, params, n)? {
        Built::Traffic(net, names) => run_typed(net, &names, spec, times),
        Built::Water(net, names) => run_typed(net, &names, spec, times),
        Built::Gas(net, names) => run_typed(net, &names, spec, times),
    }
}

fn final_states<M: NodeCoupling>(mut net: Network<M>, spec: &ScenarioSpec) -> Result<Vec<Vec<M::State>>> {
    let stepper = spec.stepper.expect("time-dependent scenarios define a stepper");
    net.advance(0.0, spec.final_time, &stepper, &mut |_| Ok(()))?;
    Ok(net.states())
}

fn typed_errors<M: NodeCoupling>(
    build: impl Fn(u32) -> Result<Network<M>> + Sync,
    spec: &ScenarioSpec,
    ns: &[u32],
    reference: Option<u32>,
) -> Result<Vec<(u32, f64, f64)>>
where
    M::State: Send,
{
    let fine = match reference {
        Some(level) => Some(final_states(build(level)?, spec)?),
        None => None,
    };
    let errors: Vec<Result<f64>> = std::thread::scope(|s| {
        let handles: Vec<_> = ns
            .iter()
            .map(|&n| {
                let (build, fine) = (&build, &fine);
                s.spawn(move || -> Result<f64> {
                    let net = build(n)?;
                    match (fine, reference) {
                        (Some(fine), Some(level)) => {
                            let factor = 1usize << (level - n);
                            let coarse = fine
                                .iter()
                                .map(|u| restrict_reference(u, factor))
                                .collect::<Result<Vec<_>>>()?;
                            linf_error_in(&final_states(net, spec)?, &coarse, &spec.error_components)
                        }
                        _ => {
                            let initial = net.states();
                            linf_error_in(&final_states(net, spec)?, &initial, &spec.error_components)
                        }
                    }
                })
            })
            .collect();
        handles.into_iter().map(|h| h.join().expect("level worker panicked")).collect()
    });
    ns.iter()
        .zip(errors)
        .map(|(&n, e)| Ok((n, spec.h(n), e?)))
        .collect()
}

/// Convergence table of a scenario over the levels `ns`. Levels run
/// concurrently. `reference_level` overrides the scenario's reference.
pub fn convergence_study(
    spec: &ScenarioSpec,
    params: &ParamSet,
    params_name: &str,
    ns: &[u32],
    reference_level: Option<u32>,
) -> Result<ConvergenceTable> {
    if let Some(case) = spec.kind.recon_case() {
        return reconstruction_study(case, params, params_name, ns.iter().copied());
    }
    let reference = match (spec.error_rule, reference_level) {
        (ErrorRule::Periodic, _) => None,
        (ErrorRule::Reference { .. }, Some(level)) | (ErrorRule::Reference { level }, None) => Some(level),
        (ErrorRule::None, _) => {
            return Err(Error::Unsupported(format!("scenario '{}' has no error measure", spec.kind)));
        }
    };
    if let Some(level) = reference {
        if let Some(bad) = ns.iter().find(|n| **n >= level) {
            return Err(Error::InvalidArgument(format!("level {bad} is not coarser than the reference level {level}")));
        }
    }
    let p = *params;
    let data = match spec.kind {
        ScenarioKind::TrafficSmooth => {
            typed_errors(|n| traffic_loop(&p, n, 0.5, TrafficInit::Smooth), spec, ns, reference)?
        }
        ScenarioKind::TrafficTdbc => typed_errors(|n| traffic_tdbc(&p, n), spec, ns, reference)?,
        ScenarioKind::ChannelNetwork => typed_errors(|n| channel_network(&p, n), spec, ns, reference)?,
        other => return Err(Error::Unsupported(format!("scenario '{other}' has no error measure"))),
    };
    Ok(ConvergenceTable::from_errors(spec.kind.name(), params_name, &data))
}
