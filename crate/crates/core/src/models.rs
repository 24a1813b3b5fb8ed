//! Physical models: LWR traffic, shallow water and the 1D Euler equations,
//! together with the two numerical flux functions used by the scheme.

use std::fmt::Debug;
use std::ops::{Add, AddAssign, Index, IndexMut, Mul, Sub};

use crate::error::{Error, Result};

/// Conserved variables of a system with `N` components.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct State<const N: usize>(pub [f64; N]);

pub type TrafficState = State<1>;
pub type SwState = State<2>;
pub type EulerState = State<3>;

/// Vector-space operations the scheme needs from a state type.
pub trait StateVector:
    Copy
    + Debug
    + PartialEq
    + Send
    + Sync
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<f64, Output = Self>
    + AddAssign
    + Index<usize, Output = f64>
    + IndexMut<usize>
{
    const LEN: usize;

    fn zero() -> Self;
    fn from_fn(f: impl FnMut(usize) -> f64) -> Self;
    fn as_slice(&self) -> &[f64];
}

impl<const N: usize> StateVector for State<N> {
    const LEN: usize = N;

    fn zero() -> Self {
        State([0.0; N])
    }

    fn from_fn(f: impl FnMut(usize) -> f64) -> Self {
        State(std::array::from_fn(f))
    }

    fn as_slice(&self) -> &[f64] {
        &self.0
    }
}

impl<const N: usize> Add for State<N> {
    type Output = Self;
    #[inline]
    fn add(self, rhs: Self) -> Self {
        State(std::array::from_fn(|i| self.0[i] + rhs.0[i]))
    }
}

impl<const N: usize> Sub for State<N> {
    type Output = Self;
    #[inline]
    fn sub(self, rhs: Self) -> Self {
        State(std::array::from_fn(|i| self.0[i] - rhs.0[i]))
    }
}

impl<const N: usize> Mul<f64> for State<N> {
    type Output = Self;
    #[inline]
    fn mul(self, s: f64) -> Self {
        State(self.0.map(|x| x * s))
    }
}

impl<const N: usize> AddAssign for State<N> {
    #[inline]
    fn add_assign(&mut self, rhs: Self) {
        for (a, b) in self.0.iter_mut().zip(rhs.0) {
            *a += b;
        }
    }
}

impl<const N: usize> Index<usize> for State<N> {
    type Output = f64;
    fn index(&self, i: usize) -> &f64 {
        &self.0[i]
    }
}

impl<const N: usize> IndexMut<usize> for State<N> {
    fn index_mut(&mut self, i: usize) -> &mut f64 {
        &mut self.0[i]
    }
}

/// A hyperbolic system `u_t + f(u)_x = 0`.
pub trait ConservationLaw: Send + Sync {
    type State: StateVector;

    /// Column names used when writing solution snapshots.
    fn component_names(&self) -> &'static [&'static str];

    /// Physical admissibility of a state.
    fn check(&self, u: &Self::State) -> Result<()>;

    fn flux(&self, u: &Self::State) -> Result<Self::State>;

    /// Largest characteristic speed in absolute value.
    fn max_speed(&self, u: &Self::State) -> Result<f64>;

    /// Numerical flux at an interface with left trace `um` and right trace `up`.
    fn numerical_flux(&self, um: &Self::State, up: &Self::State) -> Result<Self::State> {
        llf_flux(self, um, up)
    }

    /// Exterior state that makes an interface a reflecting wall.
    fn wall_ghost(&self, _u: &Self::State) -> Result<Self::State> {
        Err(Error::Unsupported("wall boundary".into()))
    }
}

/// Local Lax-Friedrichs flux with the two-state maximal wave speed.
pub fn llf_flux<M: ConservationLaw + ?Sized>(model: &M, um: &M::State, up: &M::State) -> Result<M::State> {
    let lambda = model.max_speed(um)?.max(model.max_speed(up)?);
    let fm = model.flux(um)?;
    let fp = model.flux(up)?;
    Ok((fm + fp) * 0.5 - (*up - *um) * (0.5 * lambda))
}

/// LWR traffic with a triangular fundamental diagram.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrafficModel {
    pub v: f64,
    pub rho_max: f64,
}

impl Default for TrafficModel {
    fn default() -> Self {
        Self { v: 1.0, rho_max: 1.0 }
    }
}

impl TrafficModel {
    pub fn new(v: f64, rho_max: f64) -> Result<Self> {
        if !(v > 0.0 && rho_max > 0.0) {
            return Err(Error::InvalidArgument(format!(
                "traffic model needs v > 0 and rho_max > 0, got v={v}, rho_max={rho_max}"
            )));
        }
        Ok(Self { v, rho_max })
    }

    /// Capacity, attained at `rho_max / 2`.
    pub fn f_max(&self) -> f64 {
        0.5 * self.v * self.rho_max
    }

    fn check_density(&self, rho: f64) -> Result<()> {
        if (0.0..=self.rho_max).contains(&rho) {
            Ok(())
        } else {
            Err(Error::InvalidState { what: "density", value: rho })
        }
    }

    pub fn flux_of(&self, rho: f64) -> Result<f64> {
        self.check_density(rho)?;
        Ok(self.flux_unchecked(rho))
    }

    #[inline]
    fn flux_unchecked(&self, rho: f64) -> f64 {
        if rho <= 0.5 * self.rho_max {
            rho * self.v
        } else {
            (self.rho_max - rho) * self.v
        }
    }

    /// Largest flux the upstream state can send.
    pub fn demand(&self, rho: f64) -> Result<f64> {
        self.check_density(rho)?;
        Ok(if rho <= 0.5 * self.rho_max { rho * self.v } else { self.f_max() })
    }

    /// Largest flux the downstream state can accept.
    pub fn supply(&self, rho: f64) -> Result<f64> {
        self.check_density(rho)?;
        Ok(if rho <= 0.5 * self.rho_max { self.f_max() } else { (self.rho_max - rho) * self.v })
    }

    /// Exact Riemann (Godunov) flux `min(D(rho-), S(rho+))`.
    pub fn godunov(&self, rho_minus: f64, rho_plus: f64) -> Result<f64> {
        Ok(self.demand(rho_minus)?.min(self.supply(rho_plus)?))
    }
}

impl ConservationLaw for TrafficModel {
    type State = TrafficState;

    fn component_names(&self) -> &'static [&'static str] {
        &["rho"]
    }

    fn check(&self, u: &TrafficState) -> Result<()> {
        self.check_density(u.0[0])
    }

    fn flux(&self, u: &TrafficState) -> Result<TrafficState> {
        Ok(State([self.flux_of(u.0[0])?]))
    }

    fn max_speed(&self, u: &TrafficState) -> Result<f64> {
        self.check(u)?;
        Ok(self.v)
    }

    fn numerical_flux(&self, um: &TrafficState, up: &TrafficState) -> Result<TrafficState> {
        Ok(State([self.godunov(um.0[0], up.0[0])?]))
    }
}

/// Shallow-water equations in conserved variables `(h, q)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ShallowWaterModel {
    pub g: f64,
}

impl Default for ShallowWaterModel {
    fn default() -> Self {
        Self { g: 1.0 }
    }
}

impl ShallowWaterModel {
    pub fn new(g: f64) -> Result<Self> {
        if !(g > 0.0) {
            return Err(Error::InvalidArgument(format!("gravity must be positive, got {g}")));
        }
        Ok(Self { g })
    }

    fn check_depth(h: f64) -> Result<()> {
        if h > 0.0 && h.is_finite() {
            Ok(())
        } else {
            Err(Error::DryState(h))
        }
    }

    pub fn flux_of(&self, h: f64, q: f64) -> Result<(f64, f64)> {
        Self::check_depth(h)?;
        Ok((q, q * q / h + 0.5 * self.g * h * h))
    }

    pub fn max_speed_of(&self, h: f64, q: f64) -> Result<f64> {
        Self::check_depth(h)?;
        Ok((q / h).abs() + (self.g * h).sqrt())
    }

    pub fn celerity(&self, h: f64) -> f64 {
        (self.g * h).sqrt()
    }
}

impl ConservationLaw for ShallowWaterModel {
    type State = SwState;

    fn component_names(&self) -> &'static [&'static str] {
        &["h", "q"]
    }

    fn check(&self, u: &SwState) -> Result<()> {
        Self::check_depth(u.0[0])?;
        if u.0[1].is_finite() {
            Ok(())
        } else {
            Err(Error::InvalidState { what: "discharge", value: u.0[1] })
        }
    }

    fn flux(&self, u: &SwState) -> Result<SwState> {
        let (a, b) = self.flux_of(u.0[0], u.0[1])?;
        Ok(State([a, b]))
    }

    fn max_speed(&self, u: &SwState) -> Result<f64> {
        self.max_speed_of(u.0[0], u.0[1])
    }

    fn wall_ghost(&self, u: &SwState) -> Result<SwState> {
        Ok(State([u.0[0], -u.0[1]]))
    }
}

/// 1D Euler equations for an ideal gas, conserved variables `(rho, m, E)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EulerModel {
    pub gamma: f64,
}

impl Default for EulerModel {
    fn default() -> Self {
        Self { gamma: 1.4 }
    }
}

impl EulerModel {
    pub fn new(gamma: f64) -> Result<Self> {
        if !(gamma > 1.0) {
            return Err(Error::InvalidArgument(format!("adiabatic index must exceed 1, got {gamma}")));
        }
        Ok(Self { gamma })
    }

    pub fn pressure(&self, rho: f64, mom: f64, energy: f64) -> Result<f64> {
        if !(rho > 0.0) {
            return Err(Error::InvalidState { what: "density", value: rho });
        }
        let p = (self.gamma - 1.0) * (energy - 0.5 * mom * mom / rho);
        if !(p > 0.0) {
            return Err(Error::InvalidState { what: "pressure", value: p });
        }
        Ok(p)
    }

    pub fn from_primitive(&self, rho: f64, v: f64, p: f64) -> EulerState {
        State([rho, rho * v, p / (self.gamma - 1.0) + 0.5 * rho * v * v])
    }

    /// `(rho, v, p)`.
    pub fn to_primitive(&self, u: &EulerState) -> Result<[f64; 3]> {
        let [rho, m, e] = u.0;
        let p = self.pressure(rho, m, e)?;
        Ok([rho, m / rho, p])
    }
}

impl ConservationLaw for EulerModel {
    type State = EulerState;

    fn component_names(&self) -> &'static [&'static str] {
        &["rho", "m", "E"]
    }

    fn check(&self, u: &EulerState) -> Result<()> {
        self.pressure(u.0[0], u.0[1], u.0[2]).map(|_| ())
    }

    fn flux(&self, u: &EulerState) -> Result<EulerState> {
        let [rho, m, e] = u.0;
        let p = self.pressure(rho, m, e)?;
        let v = m / rho;
        Ok(State([m, m * v + p, v * (e + p)]))
    }

    fn max_speed(&self, u: &EulerState) -> Result<f64> {
        let [rho, m, e] = u.0;
        let p = self.pressure(rho, m, e)?;
        Ok((m / rho).abs() + (self.gamma * p / rho).sqrt())
    }
}
