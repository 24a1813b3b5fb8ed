//! Finite-volume semi-discretisation of a single edge, boundary closures and
//! the third-order SSP Runge-Kutta integrator.

use std::fmt;
use std::sync::Arc;

use crate::cweno::{self, ParamSet, StencilWeights};
use crate::error::{Error, Result, Side};
use crate::models::{ConservationLaw, StateVector};

/// Uniform grid on `[x_left, x_left + length]` with `cells` cells.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EdgeGrid {
    pub x_left: f64,
    pub length: f64,
    pub cells: usize,
}

impl EdgeGrid {
    pub fn new(x_left: f64, length: f64, cells: usize) -> Result<Self> {
        if cells < 3 {
            return Err(Error::InvalidArgument(format!(
                "an edge needs at least 3 cells for the boundary stencil, got {cells}"
            )));
        }
        if !(length > 0.0 && length.is_finite() && x_left.is_finite()) {
            return Err(Error::InvalidArgument(format!("invalid edge length {length}")));
        }
        Ok(Self { x_left, length, cells })
    }

    pub fn h(&self) -> f64 {
        self.length / self.cells as f64
    }

    pub fn x_right(&self) -> f64 {
        self.x_left + self.length
    }

    /// Interface `i` (`0..=cells`).
    pub fn interface(&self, i: usize) -> f64 {
        self.x_left + i as f64 * self.h()
    }

    /// Centre of cell `j` (`0..cells`).
    pub fn center(&self, j: usize) -> f64 {
        self.x_left + (j as f64 + 0.5) * self.h()
    }

    pub fn centers(&self) -> impl Iterator<Item = f64> + '_ {
        (0..self.cells).map(|j| self.center(j))
    }
}

pub type BoundaryData<S> = Arc<dyn Fn(f64) -> S + Send + Sync>;

/// How the flux through an edge end is closed.
#[derive(Clone)]
pub enum BoundaryClosure<S> {
    /// Reflecting wall: exterior state is the mirrored trace.
    Wall,
    /// Prescribed exterior state as a function of time.
    Dirichlet(BoundaryData<S>),
    /// Transmissive end: exterior state equals the trace.
    FreeOutflow,
    /// Flux supplied by a junction node.
    JunctionPort(usize),
    /// Flux shared with the adjacent end of another edge.
    InterfacePort(usize),
}

impl<S> BoundaryClosure<S> {
    pub fn dirichlet(f: impl Fn(f64) -> S + Send + Sync + 'static) -> Self {
        BoundaryClosure::Dirichlet(Arc::new(f))
    }

    pub fn is_external(&self) -> bool {
        matches!(self, BoundaryClosure::JunctionPort(_) | BoundaryClosure::InterfacePort(_))
    }
}

impl<S> fmt::Debug for BoundaryClosure<S> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            BoundaryClosure::Wall => f.write_str("Wall"),
            BoundaryClosure::Dirichlet(_) => f.write_str("Dirichlet(..)"),
            BoundaryClosure::FreeOutflow => f.write_str("FreeOutflow"),
            BoundaryClosure::JunctionPort(n) => write!(f, "JunctionPort({n})"),
            BoundaryClosure::InterfacePort(e) => write!(f, "InterfacePort({e})"),
        }
    }
}

/// Cell averages of one edge plus everything needed to evolve them.
#[derive(Debug, Clone)]
pub struct EdgeState<S> {
    pub grid: EdgeGrid,
    pub ubar: Vec<S>,
    pub params: ParamSet,
    pub left: BoundaryClosure<S>,
    pub right: BoundaryClosure<S>,
    weights: StencilWeights,
}

impl<S: StateVector> EdgeState<S> {
    pub fn new(
        grid: EdgeGrid,
        ubar: Vec<S>,
        params: ParamSet,
        left: BoundaryClosure<S>,
        right: BoundaryClosure<S>,
    ) -> Result<Self> {
        if ubar.len() != grid.cells {
            return Err(Error::LengthMismatch { expected: grid.cells, got: ubar.len() });
        }
        if ubar.iter().any(|u| u.as_slice().iter().any(|x| !x.is_finite())) {
            return Err(Error::InvalidArgument("non-finite cell average".into()));
        }
        let weights = params.at(grid.h())?;
        Ok(Self { grid, ubar, params, left, right, weights })
    }

    pub fn closure(&self, side: Side) -> &BoundaryClosure<S> {
        match side {
            Side::Left => &self.left,
            Side::Right => &self.right,
        }
    }

    pub fn weights(&self) -> &StencilWeights {
        &self.weights
    }

    pub fn check<M: ConservationLaw<State = S>>(&self, model: &M) -> Result<()> {
        self.ubar.iter().try_for_each(|u| model.check(u))
    }

    pub fn reconstruct(&self) -> EdgeTraces<S> {
        reconstruct_edge(&self.ubar, self.grid.h(), &self.weights)
    }
}

/// Reconstructed values at the two interfaces of every cell.
///
/// `lo[j]` is the value of cell `j`'s polynomial at its left interface and
/// `hi[j]` at its right interface. Interface `i` therefore carries
/// `u- = hi[i-1]` and `u+ = lo[i]`.
#[derive(Debug, Clone, PartialEq)]
pub struct EdgeTraces<S> {
    pub lo: Vec<S>,
    pub hi: Vec<S>,
}

impl<S: StateVector> EdgeTraces<S> {
    pub fn interfaces(&self) -> usize {
        self.lo.len() + 1
    }

    /// `(u-, u+)` at interface `i`; the outermost interfaces only have one side.
    pub fn interface(&self, i: usize) -> (Option<S>, Option<S>) {
        let n = self.lo.len();
        let minus = if i > 0 { Some(self.hi[i - 1]) } else { None };
        let plus = if i < n { Some(self.lo[i]) } else { None };
        (minus, plus)
    }

    /// One-sided trace at an edge end.
    pub fn boundary(&self, side: Side) -> S {
        match side {
            Side::Left => self.lo[0],
            Side::Right => self.hi[self.hi.len() - 1],
        }
    }
}

/// Componentwise reconstruction of a whole edge: boundary CWENO in the two
/// outermost cells, central CWENO3 elsewhere.
pub fn reconstruct_edge<S: StateVector>(ubar: &[S], h: f64, weights: &StencilWeights) -> EdgeTraces<S> {
    let n = ubar.len();
    assert!(n >= 3, "reconstruct_edge needs at least 3 cells");
    let mut lo = Vec::with_capacity(n);
    let mut hi = Vec::with_capacity(n);

    let boundary = |a: &S, b: &S, c: &S| {
        let mut outer = S::zero();
        let mut inner = S::zero();
        for k in 0..S::LEN {
            let p = cweno::boundary_local([a[k], b[k], c[k]], h, weights);
            outer[k] = p.eval_offset(-1.5 * h);
            inner[k] = p.eval_offset(-0.5 * h);
        }
        (outer, inner)
    };

    let (outer, inner) = boundary(&ubar[0], &ubar[1], &ubar[2]);
    lo.push(outer);
    hi.push(inner);

    for j in 1..n - 1 {
        let mut l = S::zero();
        let mut r = S::zero();
        for k in 0..S::LEN {
            let p = cweno::interior_with([ubar[j - 1][k], ubar[j][k], ubar[j + 1][k]], 0.0, h, weights.eps, weights.p);
            l[k] = p.eval_offset(-0.5 * h);
            r[k] = p.eval_offset(0.5 * h);
        }
        lo.push(l);
        hi.push(r);
    }

    // mirrored stencil: outermost cell first
    let (outer, inner) = boundary(&ubar[n - 1], &ubar[n - 2], &ubar[n - 3]);
    lo.push(inner);
    hi.push(outer);

    EdgeTraces { lo, hi }
}

/// Flux through an edge end closed by `bc`.
///
/// `external` carries the flux computed by the network for junction and
/// interface ports; it is ignored for the other closures.
pub fn closure_flux<M: ConservationLaw>(
    model: &M,
    bc: &BoundaryClosure<M::State>,
    side: Side,
    trace: &M::State,
    t: f64,
    external: Option<&M::State>,
) -> Result<M::State> {
    let exterior = match bc {
        BoundaryClosure::Wall => model.wall_ghost(trace)?,
        BoundaryClosure::Dirichlet(f) => f(t),
        BoundaryClosure::FreeOutflow => *trace,
        BoundaryClosure::JunctionPort(_) | BoundaryClosure::InterfacePort(_) => {
            return external.copied().ok_or_else(|| {
                Error::StageAssembly(format!("no flux supplied for {side} end closed by {bc:?}"))
            });
        }
    };
    match side {
        Side::Left => model.numerical_flux(&exterior, trace),
        Side::Right => model.numerical_flux(trace, &exterior),
    }
}

/// `du_j/dt = -(H_{j+1/2} - H_{j-1/2}) / h` for all cells.
pub fn semidiscrete_rhs<S: StateVector>(h: f64, fluxes: &[S], cells: usize) -> Result<Vec<S>> {
    if fluxes.len() != cells + 1 {
        return Err(Error::LengthMismatch { expected: cells + 1, got: fluxes.len() });
    }
    let inv = -1.0 / h;
    Ok(fluxes.windows(2).map(|w| (w[1] - w[0]) * inv).collect())
}

/// One step of the three-stage SSP (TVD) Runge-Kutta scheme.
///
/// `rhs(u, t, stage)` evaluates the semi-discrete operator; stage times are
/// `t`, `t + tau` and `t + tau/2`.
pub fn rk3_step<S, F>(u: &mut [Vec<S>], t: f64, tau: f64, mut rhs: F) -> Result<()>
where
    S: StateVector,
    F: FnMut(&[Vec<S>], f64, usize) -> Result<Vec<Vec<S>>>,
{
    if !(tau > 0.0) {
        return Err(Error::InvalidArgument(format!("time step must be positive, got {tau}")));
    }
    let wrap = |stage: usize| move |e: Error| Error::Stage { stage, source: Box::new(e) };

    let l0 = rhs(u, t, 0).map_err(wrap(0))?;
    let u1 = combine(u, &l0, |un, l| un + l * tau);

    let l1 = rhs(&u1, t + tau, 1).map_err(wrap(1))?;
    let u2: Vec<Vec<S>> = u
        .iter()
        .zip(&u1)
        .zip(&l1)
        .map(|((un, a), la)| {
            un.iter()
                .zip(a)
                .zip(la)
                .map(|((x0, x1), l)| *x0 * 0.75 + (*x1 + *l * tau) * 0.25)
                .collect()
        })
        .collect();

    let l2 = rhs(&u2, t + 0.5 * tau, 2).map_err(wrap(2))?;
    for ((un, b), lb) in u.iter_mut().zip(&u2).zip(&l2) {
        for ((x0, x2), l) in un.iter_mut().zip(b).zip(lb) {
            *x0 = *x0 * (1.0 / 3.0) + (*x2 + *l * tau) * (2.0 / 3.0);
        }
    }
    Ok(())
}

fn combine<S: StateVector>(u: &[Vec<S>], l: &[Vec<S>], f: impl Fn(S, S) -> S) -> Vec<Vec<S>> {
    u.iter()
        .zip(l)
        .map(|(a, b)| a.iter().zip(b).map(|(x, y)| f(*x, *y)).collect())
        .collect()
}

/// Time-step selection rule.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum TimeStepper {
    /// `tau = ratio * h`.
    FixedRatio(f64),
    /// `tau = cfl * h / lambda_max`, with `lambda_max` recomputed every step.
    Cfl(f64),
}

impl TimeStepper {
    pub fn validated(self) -> Result<Self> {
        let v = match self {
            TimeStepper::FixedRatio(r) | TimeStepper::Cfl(r) => r,
        };
        if v > 0.0 && v.is_finite() {
            Ok(self)
        } else {
            Err(Error::InvalidArgument(format!("time-step factor must be positive, got {v}")))
        }
    }
}

/// Relative slack under which a remaining interval is absorbed into the
/// current step instead of producing a sliver step.
const LANDING_SLACK: f64 = 1e-9;

/// Step size for grid width `h`, truncated so that the run lands exactly on
/// the target time. `lambda_max` is only consulted in CFL mode.
pub fn compute_timestep(
    ts: &TimeStepper,
    h: f64,
    lambda_max: impl FnOnce() -> Result<f64>,
    remaining: f64,
) -> Result<f64> {
    let tau = match *ts {
        TimeStepper::FixedRatio(r) => r * h,
        TimeStepper::Cfl(c) => {
            let lambda = lambda_max()?;
            if !(lambda > 0.0 && lambda.is_finite()) {
                return Err(Error::DegenerateSpeed(lambda));
            }
            c * h / lambda
        }
    };
    if remaining <= tau * (1.0 + LANDING_SLACK) {
        Ok(remaining)
    } else {
        Ok(tau)
    }
}
