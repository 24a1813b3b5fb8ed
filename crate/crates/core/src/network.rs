//! Networks of edges coupled at junction nodes and artificial interfaces.
//!
//! Every RK stage first reconstructs all edges, then computes the fluxes at
//! all coupled edge ends ([`assemble_stage_fluxes`]) and finally evaluates the
//! semi-discrete right-hand side of each edge with those fluxes.

use crate::error::{Error, Result, Side};
use crate::models::{ConservationLaw, EulerModel, ShallowWaterModel, State, StateVector, TrafficModel};
use crate::scheme::{self, closure_flux, semidiscrete_rhs, BoundaryClosure, EdgeState, EdgeTraces, TimeStepper};

/// Coupling rule at a node.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum NodeKind {
    /// One incoming road split onto two outgoing roads; `alpha` goes to the first.
    TrafficDisperse { alpha: f64 },
    /// Two incoming roads merging into one; `priority` belongs to the first.
    TrafficMerge { priority: f64 },
    /// Subcritical shallow-water junction with common water height.
    Channel { g: f64 },
}

/// A node and its incident edges. An edge listed in `incoming` ends at the
/// node (its right end is bound); an edge in `outgoing` starts there.
#[derive(Debug, Clone, PartialEq)]
pub struct NodeSpec {
    pub kind: NodeKind,
    pub incoming: Vec<usize>,
    pub outgoing: Vec<usize>,
}

impl NodeSpec {
    pub fn new(kind: NodeKind, incoming: Vec<usize>, outgoing: Vec<usize>) -> Self {
        Self { kind, incoming, outgoing }
    }

    /// Ports in a fixed order: incoming edges first, then outgoing.
    pub fn ports(&self) -> impl Iterator<Item = (usize, bool)> + '_ {
        self.incoming
            .iter()
            .map(|e| (*e, true))
            .chain(self.outgoing.iter().map(|e| (*e, false)))
    }

    fn validate(&self, id: usize) -> Result<()> {
        let (i, o) = (self.incoming.len(), self.outgoing.len());
        let err = |msg: String| Err(Error::Config(format!("node {id}: {msg}")));
        match self.kind {
            NodeKind::TrafficDisperse { alpha } => {
                if (i, o) != (1, 2) {
                    return err(format!("dispersing junction needs 1 in / 2 out, has {i}/{o}"));
                }
                if !(alpha > 0.0 && alpha < 1.0) {
                    return err(format!("distribution fraction must lie in (0, 1), got {alpha}"));
                }
            }
            NodeKind::TrafficMerge { priority } => {
                if (i, o) != (2, 1) {
                    return err(format!("merging junction needs 2 in / 1 out, has {i}/{o}"));
                }
                if !(priority > 0.0 && priority < 1.0) {
                    return err(format!("priority must lie in (0, 1), got {priority}"));
                }
            }
            NodeKind::Channel { g } => {
                if i + o < 2 {
                    return err(format!("channel junction needs degree >= 2, has {}", i + o));
                }
                if !(g > 0.0) {
                    return err(format!("gravity must be positive, got {g}"));
                }
            }
        }
        Ok(())
    }
}

/// One-sided boundary trace delivered to a node.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PortTrace<S> {
    pub edge: usize,
    pub incoming: bool,
    pub trace: S,
}

/// Models that know how to couple edges at a node.
pub trait NodeCoupling: ConservationLaw {
    /// Fluxes (in each edge's own orientation) for the ports of node `id`,
    /// in the order of `ports`.
    fn node_fluxes(&self, id: usize, kind: &NodeKind, ports: &[PortTrace<Self::State>]) -> Result<Vec<Self::State>>;
}

impl NodeCoupling for TrafficModel {
    fn node_fluxes(&self, id: usize, kind: &NodeKind, ports: &[PortTrace<State<1>>]) -> Result<Vec<State<1>>> {
        match *kind {
            NodeKind::TrafficDisperse { alpha } => {
                let d = self.demand(ports[0].trace[0])?;
                let s1 = self.supply(ports[1].trace[0])?;
                let s2 = self.supply(ports[2].trace[0])?;
                let (g_in, g1, g2) = disperse_flux(d, [s1, s2], alpha);
                Ok(vec![State([g_in]), State([g1]), State([g2])])
            }
            NodeKind::TrafficMerge { priority } => {
                let d1 = self.demand(ports[0].trace[0])?;
                let d2 = self.demand(ports[1].trace[0])?;
                let s = self.supply(ports[2].trace[0])?;
                let (g1, g2, g_out) = merge_flux([d1, d2], s, priority);
                Ok(vec![State([g1]), State([g2]), State([g_out])])
            }
            NodeKind::Channel { .. } => {
                Err(Error::Unsupported(format!("node {id}: channel junction on a traffic network")))
            }
        }
    }
}

impl NodeCoupling for ShallowWaterModel {
    fn node_fluxes(&self, id: usize, kind: &NodeKind, ports: &[PortTrace<State<2>>]) -> Result<Vec<State<2>>> {
        let NodeKind::Channel { g } = *kind else {
            return Err(Error::Unsupported(format!("node {id}: traffic junction on a channel network")));
        };
        let traces: Vec<(f64, f64)> = ports.iter().map(|p| (p.trace[0], p.trace[1])).collect();
        let incoming: Vec<bool> = ports.iter().map(|p| p.incoming).collect();
        let sol = channel_node_solve(&traces, &incoming, g).map_err(|e| match e {
            Error::NodeSolve { residual, .. } => Error::NodeSolve { node: id, residual },
            Error::OutOfRegime { edge, froude, .. } => Error::OutOfRegime { node: id, edge: ports[edge].edge, froude },
            other => other,
        })?;
        sol.states
            .iter()
            .map(|&(h, q)| {
                let (a, b) = self.flux_of(h, q)?;
                Ok(State([a, b]))
            })
            .collect()
    }
}

impl NodeCoupling for EulerModel {
    fn node_fluxes(&self, id: usize, _kind: &NodeKind, _ports: &[PortTrace<State<3>>]) -> Result<Vec<State<3>>> {
        Err(Error::Unsupported(format!("node {id}: no junction model for the Euler equations")))
    }
}

/// Dispersing junction: maximise the through-flux subject to the demand and
/// the two supplies under the fixed split `alpha : 1 - alpha`.
///
/// Returns `(incoming, outgoing_1, outgoing_2)`.
pub fn disperse_flux(demand: f64, supplies: [f64; 2], alpha: f64) -> (f64, f64, f64) {
    let g = demand.min(supplies[0] / alpha).min(supplies[1] / (1.0 - alpha));
    let g1 = alpha * g;
    (g, g1, g - g1)
}

/// Merging junction with priority rule: when the supply binds, the first road
/// receives `median(P S, S - D2, D1)` so that no capacity is left unused.
///
/// Returns `(incoming_1, incoming_2, outgoing)`.
pub fn merge_flux(demands: [f64; 2], supply: f64, priority: f64) -> (f64, f64, f64) {
    let [d1, d2] = demands;
    if d1 + d2 <= supply {
        return (d1, d2, d1 + d2);
    }
    let g1 = median(priority * supply, supply - d2, d1);
    (g1, supply - g1, supply)
}

fn median(a: f64, b: f64, c: f64) -> f64 {
    a.max(b).min(a.min(b).max(c))
}

/// Solution of a channel junction.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelNodeSolution {
    pub h_star: f64,
    /// Boundary state `(h*, q*_e)` per port.
    pub states: Vec<(f64, f64)>,
    /// Max-norm residual of the full system at the returned state.
    pub residual: f64,
    pub iterations: usize,
}

const NODE_MAX_ITER: usize = 50;
const NODE_TOL: f64 = 1e-12;

/// Solves the subcritical channel junction: common height `h*`, mass
/// conservation `sum_e s_e q*_e = 0` (`s_e = +1` for incoming ports) and
/// conservation of the Riemann invariant leaving each edge towards the node.
///
/// Damped Newton on the `m + 1` unknowns `(h*, q*_1, .., q*_m)`; the Jacobian
/// has arrowhead structure and is eliminated directly.
pub fn channel_node_solve(traces: &[(f64, f64)], incoming: &[bool], g: f64) -> Result<ChannelNodeSolution> {
    let m = traces.len();
    if m < 2 || incoming.len() != m {
        return Err(Error::InvalidArgument(format!(
            "channel node needs at least two ports with orientations, got {m} traces and {} flags",
            incoming.len()
        )));
    }
    let sg = g.sqrt();
    // invariant carried towards the node and +-1 signs
    let mut w = Vec::with_capacity(m);
    let mut dir = Vec::with_capacity(m);
    for (k, (&(h, q), &inc)) in traces.iter().zip(incoming).enumerate() {
        if !(h > 0.0) {
            return Err(Error::DryState(h));
        }
        let c = sg * h.sqrt();
        let v = q / h;
        let froude = v.abs() / c;
        if froude >= 1.0 {
            return Err(Error::OutOfRegime { node: 0, edge: k, froude });
        }
        let s = if inc { 1.0 } else { -1.0 };
        w.push(v + s * 2.0 * c);
        dir.push(s);
    }

    let residual = |hs: f64, q: &[f64], out: &mut [f64]| {
        out[0] = q.iter().zip(&dir).map(|(q, s)| s * q).sum();
        let c = 2.0 * sg * hs.sqrt();
        for k in 0..m {
            out[k + 1] = q[k] / hs + dir[k] * c - w[k];
        }
        out.iter().fold(0.0f64, |a, x| a.max(x.abs()))
    };

    let mut hs = traces.iter().map(|t| t.0).sum::<f64>() / m as f64;
    let mut q: Vec<f64> = traces.iter().map(|t| t.1).collect();
    let mut r = vec![0.0; m + 1];
    let mut trial_r = vec![0.0; m + 1];
    let mut norm = residual(hs, &q, &mut r);
    let mut iterations = 0;

    while norm > NODE_TOL * 1e-3 && iterations < NODE_MAX_ITER {
        iterations += 1;
        // J = [[0, s^T], [a, diag(1/h)]], a_k = -q_k/h^2 + dir_k sqrt(g/h)
        let a: Vec<f64> = (0..m).map(|k| -q[k] / (hs * hs) + dir[k] * sg / hs.sqrt()).collect();
        let sa: f64 = (0..m).map(|k| dir[k] * a[k]).sum();
        let se: f64 = (0..m).map(|k| dir[k] * r[k + 1]).sum();
        let dh = (r[0] - hs * se) / (hs * sa);
        let dq: Vec<f64> = (0..m).map(|k| -hs * (r[k + 1] + a[k] * dh)).collect();

        let mut lambda = 1.0;
        let mut accepted = false;
        for _ in 0..30 {
            let h_new = hs + lambda * dh;
            if h_new > 0.0 {
                let q_new: Vec<f64> = (0..m).map(|k| q[k] + lambda * dq[k]).collect();
                let n_new = residual(h_new, &q_new, &mut trial_r);
                if n_new < norm {
                    hs = h_new;
                    q = q_new;
                    norm = n_new;
                    std::mem::swap(&mut r, &mut trial_r);
                    accepted = true;
                    break;
                }
            }
            lambda *= 0.5;
        }
        if !accepted {
            break;
        }
    }

    if !(norm <= NODE_TOL) {
        return Err(Error::NodeSolve { node: 0, residual: norm });
    }
    Ok(ChannelNodeSolution {
        h_star: hs,
        states: q.iter().map(|q| (hs, *q)).collect(),
        residual: norm,
        iterations,
    })
}

/// Fluxes at all coupled edge ends for one RK stage.
#[derive(Debug, Clone, PartialEq)]
pub struct StageFluxTable<S> {
    pub left: Vec<Option<S>>,
    pub right: Vec<Option<S>>,
}

impl<S: Copy> StageFluxTable<S> {
    pub fn get(&self, edge: usize, side: Side) -> Option<&S> {
        match side {
            Side::Left => self.left[edge].as_ref(),
            Side::Right => self.right[edge].as_ref(),
        }
    }
}

/// A directed graph of edges sharing one physical model.
#[derive(Debug, Clone)]
pub struct Network<M: NodeCoupling> {
    pub model: M,
    pub edges: Vec<EdgeState<M::State>>,
    pub nodes: Vec<NodeSpec>,
}

/// What an observer sees at every RK stage: the stage input and the fluxes
/// applied at both ends of each edge.
#[derive(Debug)]
pub struct StageReport<'a, S> {
    pub t: f64,
    pub stage: usize,
    pub states: &'a [Vec<S>],
    pub boundary_fluxes: &'a [[S; 2]],
}

impl<M: NodeCoupling> Network<M> {
    /// Builds a network and checks that every port is bound consistently.
    pub fn new(model: M, edges: Vec<EdgeState<M::State>>, nodes: Vec<NodeSpec>) -> Result<Self> {
        let n_edges = edges.len();
        let mut bound = vec![[false; 2]; n_edges];
        for (id, node) in nodes.iter().enumerate() {
            node.validate(id)?;
            for (e, inc) in node.ports() {
                if e >= n_edges {
                    return Err(Error::Config(format!("node {id} references missing edge {e}")));
                }
                let (side, slot) = if inc { (Side::Right, 1) } else { (Side::Left, 0) };
                match edges[e].closure(side) {
                    BoundaryClosure::JunctionPort(n) if *n == id => {}
                    other => {
                        return Err(Error::Config(format!(
                            "edge {e} {side} end is {other:?}, expected JunctionPort({id})"
                        )))
                    }
                }
                if bound[e][slot] {
                    return Err(Error::Config(format!("edge {e} {side} end bound twice")));
                }
                bound[e][slot] = true;
            }
        }
        for (e, edge) in edges.iter().enumerate() {
            for (slot, side) in [(0, Side::Left), (1, Side::Right)] {
                match edge.closure(side) {
                    BoundaryClosure::JunctionPort(n) if !bound[e][slot] => {
                        return Err(Error::Config(format!("edge {e} {side} end claims node {n} but is not listed there")));
                    }
                    BoundaryClosure::InterfacePort(peer) => {
                        let peer_side = match side {
                            Side::Left => Side::Right,
                            Side::Right => Side::Left,
                        };
                        let ok = edges
                            .get(*peer)
                            .map(|p| matches!(p.closure(peer_side), BoundaryClosure::InterfacePort(x) if *x == e))
                            .unwrap_or(false);
                        if !ok || *peer == e {
                            return Err(Error::Config(format!(
                                "edge {e} {side} end is an interface to edge {peer}, which does not point back"
                            )));
                        }
                    }
                    BoundaryClosure::Wall => {
                        model.wall_ghost(&edge.ubar[0])?;
                    }
                    _ => {}
                }
            }
            edge.check(&model)?;
        }
        Ok(Self { model, edges, nodes })
    }

    pub fn states(&self) -> Vec<Vec<M::State>> {
        self.edges.iter().map(|e| e.ubar.clone()).collect()
    }

    /// Common cell width (the smallest over all edges).
    pub fn h_min(&self) -> f64 {
        self.edges.iter().map(|e| e.grid.h()).fold(f64::INFINITY, f64::min)
    }

    pub fn max_speed(&self) -> Result<f64> {
        let mut lambda: f64 = 0.0;
        for e in &self.edges {
            for u in &e.ubar {
                lambda = lambda.max(self.model.max_speed(u)?);
            }
        }
        Ok(lambda)
    }

    /// Reconstruction of every edge from stage data `u`.
    pub fn reconstruct(&self, u: &[Vec<M::State>]) -> Vec<EdgeTraces<M::State>> {
        self.edges
            .iter()
            .zip(u)
            .map(|(e, ub)| scheme::reconstruct_edge(ub, e.grid.h(), e.weights()))
            .collect()
    }

    /// Semi-discrete operator for the whole network; also returns the fluxes
    /// applied at the two ends of each edge.
    pub fn rhs(&self, u: &[Vec<M::State>], t: f64) -> Result<(Vec<Vec<M::State>>, Vec<[M::State; 2]>)> {
        if u.len() != self.edges.len() {
            return Err(Error::LengthMismatch { expected: self.edges.len(), got: u.len() });
        }
        for (e, ub) in self.edges.iter().zip(u) {
            if ub.len() != e.grid.cells {
                return Err(Error::LengthMismatch { expected: e.grid.cells, got: ub.len() });
            }
            ub.iter().try_for_each(|x| self.model.check(x))?;
        }
        let traces = self.reconstruct(u);
        let table = assemble_stage_fluxes(self, &traces, t)?;

        let mut out = Vec::with_capacity(self.edges.len());
        let mut ends = Vec::with_capacity(self.edges.len());
        for (id, (edge, tr)) in self.edges.iter().zip(&traces).enumerate() {
            let n = edge.grid.cells;
            let mut fluxes = Vec::with_capacity(n + 1);
            fluxes.push(closure_flux(
                &self.model,
                &edge.left,
                Side::Left,
                &tr.boundary(Side::Left),
                t,
                table.get(id, Side::Left),
            )?);
            for i in 1..n {
                fluxes.push(self.model.numerical_flux(&tr.hi[i - 1], &tr.lo[i])?);
            }
            fluxes.push(closure_flux(
                &self.model,
                &edge.right,
                Side::Right,
                &tr.boundary(Side::Right),
                t,
                table.get(id, Side::Right),
            )?);
            ends.push([fluxes[0], fluxes[n]]);
            out.push(semidiscrete_rhs(edge.grid.h(), &fluxes, n)?);
        }
        Ok((out, ends))
    }

    /// Advances all edges by one RK3 step of size `tau`.
    pub fn step(&mut self, t: f64, tau: f64, observer: &mut dyn FnMut(&StageReport<M::State>) -> Result<()>) -> Result<()> {
        let mut u = self.states();
        rk3_on(self, &mut u, t, tau, observer)?;
        for (e, ub) in self.edges.iter_mut().zip(u) {
            e.ubar = ub;
        }
        Ok(())
    }

    /// Integrates from `t` to `t_end`, landing exactly on `t_end`. Returns the
    /// number of steps taken.
    pub fn advance(
        &mut self,
        t: f64,
        t_end: f64,
        stepper: &TimeStepper,
        observer: &mut dyn FnMut(&StageReport<M::State>) -> Result<()>,
    ) -> Result<usize> {
        let h = self.h_min();
        let mut now = t;
        let mut steps = 0;
        while now < t_end {
            let tau = scheme::compute_timestep(stepper, h, || self.max_speed(), t_end - now)?;
            self.step(now, tau, observer)?;
            now = if tau == t_end - now { t_end } else { now + tau };
            steps += 1;
        }
        for e in &self.edges {
            e.check(&self.model)?;
        }
        Ok(steps)
    }
}

fn rk3_on<M: NodeCoupling>(
    net: &Network<M>,
    u: &mut [Vec<M::State>],
    t: f64,
    tau: f64,
    observer: &mut dyn FnMut(&StageReport<M::State>) -> Result<()>,
) -> Result<()> {
    scheme::rk3_step(u, t, tau, |x, ts, stage| {
        let (d, ends) = net.rhs(x, ts)?;
        observer(&StageReport { t: ts, stage, states: x, boundary_fluxes: &ends })?;
        Ok(d)
    })
}

/// Computes the fluxes at every edge end bound to a node or an interface.
pub fn assemble_stage_fluxes<M: NodeCoupling>(
    net: &Network<M>,
    traces: &[EdgeTraces<M::State>],
    _t: f64,
) -> Result<StageFluxTable<M::State>> {
    let n = net.edges.len();
    let mut table = StageFluxTable { left: vec![None; n], right: vec![None; n] };

    for (id, node) in net.nodes.iter().enumerate() {
        let ports: Vec<PortTrace<M::State>> = node
            .ports()
            .map(|(edge, incoming)| PortTrace {
                edge,
                incoming,
                trace: traces[edge].boundary(if incoming { Side::Right } else { Side::Left }),
            })
            .collect();
        let fluxes = net.model.node_fluxes(id, &node.kind, &ports)?;
        if fluxes.len() != ports.len() {
            return Err(Error::StageAssembly(format!("node {id} returned {} fluxes for {} ports", fluxes.len(), ports.len())));
        }
        for (p, f) in ports.iter().zip(fluxes) {
            if p.incoming {
                table.right[p.edge] = Some(f);
            } else {
                table.left[p.edge] = Some(f);
            }
        }
    }

    for (a, edge) in net.edges.iter().enumerate() {
        if let BoundaryClosure::InterfacePort(b) = edge.right {
            let f = net.model.numerical_flux(&traces[a].boundary(Side::Right), &traces[b].boundary(Side::Left))?;
            table.right[a] = Some(f);
            table.left[b] = Some(f);
        }
    }
    Ok(table)
}

/// Signed mass-flux sum at every node for a flux table (incoming positive).
pub fn node_mass_balance<S: StateVector>(nodes: &[NodeSpec], table: &StageFluxTable<S>) -> Vec<f64> {
    nodes
        .iter()
        .map(|node| {
            node.ports()
                .map(|(e, inc)| {
                    if inc {
                        table.right[e].map_or(f64::NAN, |f| f[0])
                    } else {
                        -table.left[e].map_or(f64::NAN, |f| f[0])
                    }
                })
                .sum()
        })
        .collect()
}
