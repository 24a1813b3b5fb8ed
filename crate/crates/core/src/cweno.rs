//! Third-order CWENO reconstruction on three-cell stencils.
//!
//! Two flavours share the same weight design:
//!
//! * the one-sided boundary reconstruction, which blends the constant
//!   polynomial of the outermost cell, the linear polynomial through the two
//!   outermost cells and a parabola chosen so that the linear combination with
//!   the optimal weights reproduces the cell-average preserving parabola;
//! * the central CWENO3 reconstruction used in interior cells, with fixed
//!   optimal weights `[0.25, 0.5, 0.25]`.
//!
//! Nonlinear weights follow `alpha_i = c_i / (eps(h) + IS_i)^p`, with a
//! mesh-dependent `eps(h) = K h^q` and mesh-dependent boundary optimal weights
//! `c = [K0 h^g0, K1 h^g1, 1 - c0 - c1]` (each clamped to `clamp_cap`).
//!
//! Everything here is a pure function of its inputs.

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result, Side};

/// Optimal weights `(left, centre, right)` of the interior CWENO3 reconstruction.
pub const INTERIOR_OPTIMAL_WEIGHTS: WeightVector = WeightVector([0.25, 0.5, 0.25]);

/// Default cap applied to the mesh-dependent optimal weights `c0`, `c1`.
pub const DEFAULT_CLAMP_CAP: f64 = 0.25;

/// Full parameter bundle of the reconstruction: `eps(h)`, power `p` and the
/// optimal-weight schedule.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ParamSet {
    /// Prefactor of `eps(h) = K h^q`.
    pub k: f64,
    /// Exponent of `eps(h)`; `0` selects constant-epsilon mode.
    pub q: f64,
    /// Power in the nonlinear weight denominator.
    pub p: u32,
    pub k0: f64,
    pub gamma0: f64,
    pub k1: f64,
    pub gamma1: f64,
    /// Constant epsilon, active iff `q == 0`.
    pub eps_const: Option<f64>,
    /// Upper bound for `c0` and `c1`.
    pub clamp_cap: f64,
}

impl ParamSet {
    /// Builds a parameter set with a mesh-dependent `eps(h) = k h^q`.
    pub fn scaled(k: f64, q: f64, p: u32, k0: f64, gamma0: f64, k1: f64, gamma1: f64) -> Result<Self> {
        Self {
            k,
            q,
            p,
            k0,
            gamma0,
            k1,
            gamma1,
            eps_const: None,
            clamp_cap: DEFAULT_CLAMP_CAP,
        }
        .validated()
    }

    /// Builds a parameter set with a constant epsilon.
    pub fn constant_eps(eps: f64, p: u32, k0: f64, gamma0: f64, k1: f64, gamma1: f64) -> Result<Self> {
        Self {
            k: 1.0,
            q: 0.0,
            p,
            k0,
            gamma0,
            k1,
            gamma1,
            eps_const: Some(eps),
            clamp_cap: DEFAULT_CLAMP_CAP,
        }
        .validated()
    }

    pub fn with_clamp_cap(mut self, cap: f64) -> Result<Self> {
        self.clamp_cap = cap;
        self.validated()
    }

    /// Checks the structural invariants (not the accuracy conditions, see
    /// [`validate_conditions`]).
    pub fn validated(self) -> Result<Self> {
        let positive = |name: &str, v: f64| {
            if v.is_finite() && v > 0.0 {
                Ok(())
            } else {
                Err(Error::InvalidArgument(format!("{name} must be positive and finite, got {v}")))
            }
        };
        positive("K", self.k)?;
        positive("K0", self.k0)?;
        positive("K1", self.k1)?;
        if self.p < 1 {
            return Err(Error::InvalidArgument("p must be at least 1".into()));
        }
        for (name, g) in [("gamma0", self.gamma0), ("gamma1", self.gamma1)] {
            if !(g.is_finite() && g >= 0.0) {
                return Err(Error::InvalidArgument(format!("{name} must be nonnegative, got {g}")));
            }
        }
        if !(self.clamp_cap > 0.0 && self.clamp_cap <= 1.0 / 3.0) {
            return Err(Error::InvalidArgument(format!(
                "clamp cap must lie in (0, 1/3], got {}",
                self.clamp_cap
            )));
        }
        match self.eps_const {
            Some(e) => {
                positive("eps", e)?;
                if self.q != 0.0 {
                    return Err(Error::InvalidArgument(
                        "a constant epsilon requires q = 0".into(),
                    ));
                }
            }
            None => {
                if !(self.q > 0.0 && self.q <= 2.0) {
                    return Err(Error::InvalidArgument(format!(
                        "q must lie in (0, 2] when no constant epsilon is given, got {}",
                        self.q
                    )));
                }
            }
        }
        Ok(self)
    }

    /// Resolves the mesh-dependent quantities for cell width `h`.
    pub fn at(&self, h: f64) -> Result<StencilWeights> {
        Ok(StencilWeights {
            eps: epsilon(self, h)?,
            c: optimal_weights(self, h)?,
            p: self.p,
        })
    }
}

/// The named parameter sets used throughout the convergence studies.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum NamedSet {
    Sigma1,
    Sigma2,
    Sigma3,
    Sigma4,
    Sigma5_1,
    Sigma5_2,
    Sigma5_3,
    Sigma6_2,
}

impl NamedSet {
    pub const ALL: [NamedSet; 8] = [
        NamedSet::Sigma1,
        NamedSet::Sigma2,
        NamedSet::Sigma3,
        NamedSet::Sigma4,
        NamedSet::Sigma5_1,
        NamedSet::Sigma5_2,
        NamedSet::Sigma5_3,
        NamedSet::Sigma6_2,
    ];

    pub fn params(self) -> ParamSet {
        let set = match self {
            // eps = h,   c = [h, 0.25, .]
            NamedSet::Sigma1 => ParamSet::scaled(1.0, 1.0, 2, 1.0, 1.0, 0.25, 0.0),
            // eps = h^2, c = [h^2, 0.25, .]
            NamedSet::Sigma2 => ParamSet::scaled(1.0, 2.0, 2, 1.0, 2.0, 0.25, 0.0),
            // eps = 1e-3, c = [h^2, h, .]
            NamedSet::Sigma3 => ParamSet::constant_eps(1e-3, 2, 1.0, 2.0, 1.0, 1.0),
            // eps = 1e-6, c = [h^2, h, .]
            NamedSet::Sigma4 => ParamSet::constant_eps(1e-6, 2, 1.0, 2.0, 1.0, 1.0),
            // eps = h^2, c = [h, 0.25, .]
            NamedSet::Sigma5_1 => ParamSet::scaled(1.0, 2.0, 2, 1.0, 1.0, 0.25, 0.0),
            // eps = h^2, c = [h, h, .]
            NamedSet::Sigma5_2 => ParamSet::scaled(1.0, 2.0, 2, 1.0, 1.0, 1.0, 1.0),
            // eps = h, c = [h^1.5, h^0.5, .]
            NamedSet::Sigma5_3 => ParamSet::scaled(1.0, 1.0, 2, 1.0, 1.5, 1.0, 0.5),
            // eps = h, c = [h^2, h, .]
            NamedSet::Sigma6_2 => ParamSet::scaled(1.0, 1.0, 2, 1.0, 2.0, 1.0, 1.0),
        };
        set.expect("built-in parameter sets are valid")
    }

    pub fn name(self) -> &'static str {
        match self {
            NamedSet::Sigma1 => "sigma1",
            NamedSet::Sigma2 => "sigma2",
            NamedSet::Sigma3 => "sigma3",
            NamedSet::Sigma4 => "sigma4",
            NamedSet::Sigma5_1 => "sigma5.1",
            NamedSet::Sigma5_2 => "sigma5.2",
            NamedSet::Sigma5_3 => "sigma5.3",
            NamedSet::Sigma6_2 => "sigma6.2",
        }
    }
}

impl fmt::Display for NamedSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for NamedSet {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let norm: String = s
            .to_ascii_lowercase()
            .chars()
            .filter(|c| !matches!(c, '_' | '-'))
            .collect();
        let norm = norm.trim_start_matches("sigma").trim_start_matches('s').replace('.', "");
        Ok(match norm.as_str() {
            "1" => NamedSet::Sigma1,
            "2" => NamedSet::Sigma2,
            "3" => NamedSet::Sigma3,
            "4" => NamedSet::Sigma4,
            "51" => NamedSet::Sigma5_1,
            "52" => NamedSet::Sigma5_2,
            "53" => NamedSet::Sigma5_3,
            "62" => NamedSet::Sigma6_2,
            _ => return Err(Error::InvalidArgument(format!("unknown parameter set '{s}'"))),
        })
    }
}

/// Mesh-resolved weight parameters: `eps(h)`, the boundary optimal weights and `p`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StencilWeights {
    pub eps: f64,
    pub c: WeightVector,
    pub p: u32,
}

/// Three nonnegative weights summing to one.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WeightVector(pub [f64; 3]);

impl WeightVector {
    pub fn sum(&self) -> f64 {
        self.0.iter().sum()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IndicatorTriple(pub [f64; 3]);

/// `a0 + a1 (x - center) + a2 (x - center)^2`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadPoly {
    pub center: f64,
    pub a0: f64,
    pub a1: f64,
    pub a2: f64,
}

impl QuadPoly {
    pub fn constant(center: f64, value: f64) -> Self {
        Self { center, a0: value, a1: 0.0, a2: 0.0 }
    }

    pub fn eval(&self, x: f64) -> f64 {
        self.eval_offset(x - self.center)
    }

    /// Evaluates at `center + d`.
    #[inline]
    pub fn eval_offset(&self, d: f64) -> f64 {
        self.a0 + d * (self.a1 + d * self.a2)
    }

    pub fn derivative(&self, x: f64) -> f64 {
        self.a1 + 2.0 * self.a2 * (x - self.center)
    }

    pub fn second_derivative(&self) -> f64 {
        2.0 * self.a2
    }

    /// Exact mean of the polynomial over `[a, b]`.
    pub fn average(&self, a: f64, b: f64) -> f64 {
        let (da, db) = (a - self.center, b - self.center);
        let integral = self.a0 * (db - da)
            + self.a1 * (db * db - da * da) / 2.0
            + self.a2 * (db * db * db - da * da * da) / 3.0;
        integral / (b - a)
    }

    /// Reflection `x -> 2 center - x`, keeping the expansion point.
    pub fn mirrored(&self) -> Self {
        Self { a1: -self.a1, ..*self }
    }

    pub fn scale(&self, s: f64) -> Self {
        Self { center: self.center, a0: s * self.a0, a1: s * self.a1, a2: s * self.a2 }
    }

    /// Coefficient-wise sum; both polynomials must share the expansion point.
    pub fn add(&self, other: &Self) -> Self {
        debug_assert_eq!(self.center, other.center);
        Self {
            center: self.center,
            a0: self.a0 + other.a0,
            a1: self.a1 + other.a1,
            a2: self.a2 + other.a2,
        }
    }

    pub fn combine(weights: &WeightVector, polys: &[QuadPoly; 3]) -> Self {
        let w = &weights.0;
        Self {
            center: polys[0].center,
            a0: w[0] * polys[0].a0 + w[1] * polys[1].a0 + w[2] * polys[2].a0,
            a1: w[0] * polys[0].a1 + w[1] * polys[1].a1 + w[2] * polys[2].a1,
            a2: w[0] * polys[0].a2 + w[1] * polys[1].a2 + w[2] * polys[2].a2,
        }
    }
}

/// The three outermost cell averages of an edge, ordered from the boundary
/// inwards. For a right boundary this is the mirror image of the physical
/// ordering.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundaryStencil {
    pub ubar: [f64; 3],
    pub h: f64,
    pub side: Side,
    /// Coordinate of the boundary interface.
    pub x_boundary: f64,
}

impl BoundaryStencil {
    pub fn new(ubar: [f64; 3], h: f64, side: Side, x_boundary: f64) -> Result<Self> {
        if !(h.is_finite() && h > 0.0) {
            return Err(Error::InvalidArgument(format!("cell width must be positive, got {h}")));
        }
        if ubar.iter().any(|u| !u.is_finite()) || !x_boundary.is_finite() {
            return Err(Error::InvalidArgument("non-finite stencil data".into()));
        }
        Ok(Self { ubar, h, side, x_boundary })
    }

    /// Left-boundary stencil with the boundary at `x = 0`.
    pub fn left(ubar: [f64; 3], h: f64) -> Result<Self> {
        Self::new(ubar, h, Side::Left, 0.0)
    }

    pub fn sigma_l(&self) -> f64 {
        self.ubar[1] - self.ubar[0]
    }

    pub fn sigma_r(&self) -> f64 {
        self.ubar[2] - self.ubar[1]
    }

    /// Physical centre of the middle stencil cell; all polynomials expand here.
    pub fn center(&self) -> f64 {
        match self.side {
            Side::Left => self.x_boundary + 1.5 * self.h,
            Side::Right => self.x_boundary - 1.5 * self.h,
        }
    }

    /// Maps a polynomial built in the left-oriented frame to physical space.
    fn orient(&self, mut poly: QuadPoly) -> QuadPoly {
        poly.center = self.center();
        match self.side {
            Side::Left => poly,
            Side::Right => poly.mirrored(),
        }
    }
}

/// `eps(h)`: `K h^q`, or the constant epsilon when `q = 0`.
pub fn epsilon(params: &ParamSet, h: f64) -> Result<f64> {
    if !(h.is_finite() && h > 0.0) {
        return Err(Error::InvalidArgument(format!("cell width must be positive, got {h}")));
    }
    Ok(match params.eps_const {
        Some(e) => e,
        None => params.k * h.powf(params.q),
    })
}

/// Mesh-dependent optimal weights with the `clamp_cap` safeguard on `c0`, `c1`.
pub fn optimal_weights(params: &ParamSet, h: f64) -> Result<WeightVector> {
    if !(h.is_finite() && h > 0.0) {
        return Err(Error::InvalidArgument(format!("cell width must be positive, got {h}")));
    }
    let c0 = (params.k0 * h.powf(params.gamma0)).min(params.clamp_cap);
    let c1 = (params.k1 * h.powf(params.gamma1)).min(params.clamp_cap);
    Ok(WeightVector([c0, c1, 1.0 - c0 - c1]))
}

/// Outcome of checking a parameter set against the sufficient accuracy
/// conditions of the boundary reconstruction.
#[derive(Debug, Clone, PartialEq)]
pub struct ValidityReport {
    pub checks: Vec<ConditionCheck>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConditionCheck {
    pub condition: &'static str,
    pub lhs: f64,
    pub rhs: f64,
    pub passed: bool,
}

impl ValidityReport {
    pub fn all_passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn failures(&self) -> impl Iterator<Item = &ConditionCheck> {
        self.checks.iter().filter(|c| !c.passed)
    }

    pub fn check(&self, condition: &str) -> Option<&ConditionCheck> {
        self.checks.iter().find(|c| c.condition == condition)
    }
}

impl fmt::Display for ValidityReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, c) in self.checks.iter().enumerate() {
            if i > 0 {
                f.write_str("; ")?;
            }
            write!(
                f,
                "{} ({} vs {}): {}",
                c.condition,
                c.lhs,
                c.rhs,
                if c.passed { "ok" } else { "VIOLATED" }
            )?;
        }
        Ok(())
    }
}

/// Checks `q <= 2`, `gamma0 >= max(q, 1 + gamma1)`, `pq >= 1 + gamma0` and the
/// implied `pq >= 2 + gamma1`. Constant-epsilon sets have `q = 0` and fail the
/// `pq` conditions.
pub fn validate_conditions(params: &ParamSet) -> ValidityReport {
    let q = params.q;
    let pq = params.p as f64 * q;
    let ge = |condition, lhs: f64, rhs: f64| ConditionCheck { condition, lhs, rhs, passed: lhs >= rhs };
    ValidityReport {
        checks: vec![
            ConditionCheck { condition: "q <= 2", lhs: q, rhs: 2.0, passed: q <= 2.0 },
            ge("gamma0 >= q", params.gamma0, q),
            ge("gamma0 >= 1 + gamma1", params.gamma0, 1.0 + params.gamma1),
            ge("pq >= 1 + gamma0", pq, 1.0 + params.gamma0),
            ge("pq >= 2 + gamma1", pq, 2.0 + params.gamma1),
        ],
    }
}

/// The parabola preserving all three stencil cell averages.
pub fn optimal_parabola(st: &BoundaryStencil) -> QuadPoly {
    let [u0, u1, u2] = st.ubar;
    let h = st.h;
    let second = u2 - 2.0 * u1 + u0;
    st.orient(QuadPoly {
        center: 0.0,
        a0: u1 - second / 24.0,
        a1: (u2 - u0) / (2.0 * h),
        a2: second / (2.0 * h * h),
    })
}

/// The candidate polynomials `P0` (constant), `P1` (linear) and `P2`
/// (parabola completing the optimal combination).
pub fn boundary_polynomials(st: &BoundaryStencil, c: &WeightVector) -> Result<[QuadPoly; 3]> {
    let [c0, c1, c2] = c.0;
    if !(c2 > 0.0) {
        return Err(Error::InvalidWeights { c2 });
    }
    let [u0, u1, _] = st.ubar;
    let (sl, sr) = (st.sigma_l(), st.sigma_r());
    let h = st.h;
    let p0 = QuadPoly::constant(0.0, u0);
    let p1 = QuadPoly { center: 0.0, a0: u1, a1: sl / h, a2: 0.0 };
    let inv = 1.0 / c2;
    let p2 = QuadPoly {
        center: 0.0,
        a0: inv * (-c0 * u0 + (1.0 - c1) * u1 - (sr - sl) / 24.0),
        a1: inv * (sr + sl - 2.0 * c1 * sl) / (2.0 * h),
        a2: inv * (sr - sl) / (2.0 * h * h),
    };
    Ok([st.orient(p0), st.orient(p1), st.orient(p2)])
}

/// Closed-form smoothness indicators of the candidate polynomials, measured
/// over the outermost cell.
pub fn boundary_indicators(st: &BoundaryStencil, c: &WeightVector) -> Result<IndicatorTriple> {
    let [_, c1, c2] = c.0;
    if !(c2 > 0.0) {
        return Err(Error::InvalidWeights { c2 });
    }
    Ok(IndicatorTriple(indicators_from_slopes(st.sigma_l(), st.sigma_r(), c1, c2)))
}

#[inline]
fn indicators_from_slopes(sl: f64, sr: f64, c1: f64, c2: f64) -> [f64; 3] {
    let is2 = ((4.0 / 3.0) * sr * sr
        + (c1 - 11.0 / 3.0) * sr * sl
        + (10.0 / 3.0 - 3.0 * c1 + c1 * c1) * sl * sl)
        / (c2 * c2);
    [0.0, sl * sl, is2]
}

/// `omega_i = alpha_i / sum(alpha)`, `alpha_i = c_i / (eps + IS_i)^p`.
///
/// The denominators are rescaled by their minimum before the power is taken,
/// which leaves the normalised weights unchanged and avoids overflow for tiny
/// `eps`.
pub fn nonlinear_weights(is: &IndicatorTriple, c: &WeightVector, eps: f64, p: u32) -> WeightVector {
    let d = [eps + is.0[0], eps + is.0[1], eps + is.0[2]];
    let m = d[0].min(d[1]).min(d[2]);
    let p = p as i32;
    let alpha = [
        c.0[0] * (m / d[0]).powi(p),
        c.0[1] * (m / d[1]).powi(p),
        c.0[2] * (m / d[2]).powi(p),
    ];
    let s = alpha[0] + alpha[1] + alpha[2];
    WeightVector([alpha[0] / s, alpha[1] / s, alpha[2] / s])
}

/// Intermediate quantities of one boundary reconstruction.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundaryReconstruction {
    pub poly: QuadPoly,
    pub optimal: WeightVector,
    pub omega: WeightVector,
    pub indicators: IndicatorTriple,
}

/// One-sided reconstruction in the outermost cell of an edge.
pub fn reconstruct_boundary(st: &BoundaryStencil, params: &ParamSet) -> Result<QuadPoly> {
    let weights = params.at(st.h)?;
    Ok(reconstruct_boundary_detailed(st, &weights)?.poly)
}

pub fn reconstruct_boundary_detailed(
    st: &BoundaryStencil,
    weights: &StencilWeights,
) -> Result<BoundaryReconstruction> {
    let indicators = boundary_indicators(st, &weights.c)?;
    let omega = nonlinear_weights(&indicators, &weights.c, weights.eps, weights.p);
    let polys = boundary_polynomials(st, &weights.c)?;
    Ok(BoundaryReconstruction {
        poly: QuadPoly::combine(&omega, &polys),
        optimal: weights.c,
        omega,
        indicators,
    })
}

/// Boundary reconstruction in the left-oriented frame, expanded about the
/// middle stencil cell (offset coordinates). Used by the edge sweep, which
/// evaluates the result at fixed offsets.
#[inline]
pub(crate) fn boundary_local(ubar: [f64; 3], h: f64, w: &StencilWeights) -> QuadPoly {
    let [c0, c1, c2] = w.c.0;
    let [u0, u1, _] = ubar;
    let sl = ubar[1] - ubar[0];
    let sr = ubar[2] - ubar[1];
    let is = indicators_from_slopes(sl, sr, c1, c2);
    let om = nonlinear_weights(&IndicatorTriple(is), &w.c, w.eps, w.p).0;
    let inv = 1.0 / c2;
    let p2a0 = inv * (-c0 * u0 + (1.0 - c1) * u1 - (sr - sl) / 24.0);
    let p2a1 = inv * (sr + sl - 2.0 * c1 * sl) / (2.0 * h);
    let p2a2 = inv * (sr - sl) / (2.0 * h * h);
    QuadPoly {
        center: 0.0,
        a0: om[0] * u0 + om[1] * u1 + om[2] * p2a0,
        a1: om[1] * sl / h + om[2] * p2a1,
        a2: om[2] * p2a2,
    }
}

/// Candidate polynomials `(P_l, P_c, P_r)` of the interior reconstruction in
/// cell `j`, centred at `x_center`.
pub fn interior_polynomials(ubar: [f64; 3], x_center: f64, h: f64) -> [QuadPoly; 3] {
    let [um, u, up] = ubar;
    let w = INTERIOR_OPTIMAL_WEIGHTS.0;
    let second = up - 2.0 * u + um;
    let opt = QuadPoly {
        center: x_center,
        a0: u - second / 24.0,
        a1: (up - um) / (2.0 * h),
        a2: second / (2.0 * h * h),
    };
    let pl = QuadPoly { center: x_center, a0: u, a1: (u - um) / h, a2: 0.0 };
    let pr = QuadPoly { center: x_center, a0: u, a1: (up - u) / h, a2: 0.0 };
    let pc = opt.add(&pl.scale(-w[0])).add(&pr.scale(-w[2])).scale(1.0 / w[1]);
    [pl, pc, pr]
}

/// Smoothness indicators of `(P_l, P_c, P_r)` measured over the central cell.
pub fn interior_indicators(ubar: [f64; 3]) -> IndicatorTriple {
    let [um, u, up] = ubar;
    let second = up - 2.0 * u + um;
    let first = up - um;
    IndicatorTriple([
        (u - um) * (u - um),
        (13.0 / 3.0) * second * second + 0.25 * first * first,
        (up - u) * (up - u),
    ])
}

/// Central CWENO3 reconstruction in an interior cell.
pub fn reconstruct_interior(ubar: [f64; 3], x_center: f64, h: f64, params: &ParamSet) -> Result<QuadPoly> {
    let eps = epsilon(params, h)?;
    Ok(interior_with(ubar, x_center, h, eps, params.p))
}

#[inline]
pub(crate) fn interior_with(ubar: [f64; 3], x_center: f64, h: f64, eps: f64, p: u32) -> QuadPoly {
    let polys = interior_polynomials(ubar, x_center, h);
    let omega = nonlinear_weights(&interior_indicators(ubar), &INTERIOR_OPTIMAL_WEIGHTS, eps, p);
    QuadPoly::combine(&omega, &polys)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    fn sigma(set: NamedSet) -> ParamSet {
        set.params()
    }

    /// 5-point Gauss-Legendre on [a, b].
    fn gauss5(f: impl Fn(f64) -> f64, a: f64, b: f64) -> f64 {
        const X: [f64; 5] = [
            -0.906_179_845_938_664,
            -0.538_469_310_105_683_1,
            0.0,
            0.538_469_310_105_683_1,
            0.906_179_845_938_664,
        ];
        const W: [f64; 5] = [
            0.236_926_885_056_189_1,
            0.478_628_670_499_366_5,
            0.568_888_888_888_888_9,
            0.478_628_670_499_366_5,
            0.236_926_885_056_189_1,
        ];
        let (m, r) = ((a + b) / 2.0, (b - a) / 2.0);
        r * X.iter().zip(W).map(|(x, w)| w * f(m + r * x)).sum::<f64>()
    }

    /// Indicator straight from its defining integral over the outermost cell.
    fn indicator_by_quadrature(poly: &QuadPoly, a: f64, h: f64) -> f64 {
        let d1 = gauss5(|x| poly.derivative(x).powi(2), a, a + h);
        let d2 = gauss5(|_| poly.second_derivative().powi(2), a, a + h);
        h * d1 + h.powi(3) * d2
    }

    #[test]
    fn epsilon_examples() {
        assert_relative_eq!(epsilon(&sigma(NamedSet::Sigma1), 0.25).unwrap(), 0.25);
        assert_relative_eq!(epsilon(&sigma(NamedSet::Sigma2), 0.5).unwrap(), 0.25);
        assert_eq!(epsilon(&sigma(NamedSet::Sigma3), 0.37).unwrap(), 1e-3);
        assert!(matches!(
            epsilon(&sigma(NamedSet::Sigma1), 0.0),
            Err(Error::InvalidArgument(_))
        ));
        assert!(epsilon(&sigma(NamedSet::Sigma1), -1.0).is_err());
    }

    #[test]
    fn optimal_weight_examples() {
        let c = optimal_weights(&sigma(NamedSet::Sigma1), 0.1).unwrap().0;
        assert_relative_eq!(c[0], 0.1, max_relative = 1e-15);
        assert_eq!(c[1], 0.25);
        assert_relative_eq!(c[2], 0.65, max_relative = 1e-15);

        let c = optimal_weights(&sigma(NamedSet::Sigma1), 0.5).unwrap().0;
        assert_eq!(c, [0.25, 0.25, 0.5]);

        let c = optimal_weights(&sigma(NamedSet::Sigma3), 0.01).unwrap().0;
        assert_relative_eq!(c[0], 1e-4, max_relative = 1e-14);
        assert_relative_eq!(c[1], 1e-2, max_relative = 1e-14);
        assert_relative_eq!(c[2], 0.9899, max_relative = 1e-14);
    }

    #[test]
    fn clamp_keeps_c2_at_least_half() {
        for set in NamedSet::ALL {
            for k in 0..40 {
                let h = 2f64.powi(-k) * 4.0;
                let c = optimal_weights(&set.params(), h).unwrap().0;
                assert!(c[2] >= 0.5 - 1e-15, "{set} h={h} c={c:?}");
            }
        }
    }

    #[test]
    fn param_set_invariants() {
        assert!(ParamSet::scaled(0.0, 1.0, 2, 1.0, 1.0, 0.25, 0.0).is_err());
        assert!(ParamSet::scaled(1.0, 2.5, 2, 1.0, 1.0, 0.25, 0.0).is_err());
        assert!(ParamSet::scaled(1.0, 1.0, 0, 1.0, 1.0, 0.25, 0.0).is_err());
        assert!(ParamSet::constant_eps(-1.0, 2, 1.0, 2.0, 1.0, 1.0).is_err());
        assert!(sigma(NamedSet::Sigma1).with_clamp_cap(0.5).is_err());
        let mut bad = sigma(NamedSet::Sigma3);
        bad.q = 1.0;
        assert!(bad.validated().is_err());
    }

    #[test]
    fn named_set_parsing() {
        assert_eq!("sigma1".parse::<NamedSet>().unwrap(), NamedSet::Sigma1);
        assert_eq!("Sigma5.3".parse::<NamedSet>().unwrap(), NamedSet::Sigma5_3);
        assert_eq!("s6.2".parse::<NamedSet>().unwrap(), NamedSet::Sigma6_2);
        assert_eq!("sigma5_1".parse::<NamedSet>().unwrap(), NamedSet::Sigma5_1);
        assert!("sigma7".parse::<NamedSet>().is_err());
        for set in NamedSet::ALL {
            assert_eq!(set.name().parse::<NamedSet>().unwrap(), set);
        }
    }

    #[test]
    fn validity_examples() {
        assert!(validate_conditions(&sigma(NamedSet::Sigma1)).all_passed());
        assert!(validate_conditions(&sigma(NamedSet::Sigma2)).all_passed());

        let r = validate_conditions(&sigma(NamedSet::Sigma5_1));
        assert!(!r.check("gamma0 >= q").unwrap().passed);

        let r = validate_conditions(&sigma(NamedSet::Sigma6_2));
        assert!(!r.check("pq >= 2 + gamma1").unwrap().passed);
        assert!(r.check("gamma0 >= 1 + gamma1").unwrap().passed);

        let r = validate_conditions(&sigma(NamedSet::Sigma5_2));
        assert!(!r.check("gamma0 >= 1 + gamma1").unwrap().passed);

        let r = validate_conditions(&sigma(NamedSet::Sigma5_3));
        assert!(!r.check("pq >= 1 + gamma0").unwrap().passed);

        for set in [NamedSet::Sigma3, NamedSet::Sigma4] {
            let r = validate_conditions(&sigma(set));
            assert!(!r.check("pq >= 1 + gamma0").unwrap().passed);
            assert!(!r.check("pq >= 2 + gamma1").unwrap().passed);
        }
    }

    #[test]
    fn optimal_parabola_constant() {
        let st = BoundaryStencil::left([2.5; 3], 0.1).unwrap();
        let p = optimal_parabola(&st);
        assert_eq!((p.a0, p.a1, p.a2), (2.5, 0.0, 0.0));
    }

    #[test]
    fn optimal_parabola_recovers_x_squared() {
        let h = 0.3;
        // exact cell averages of x^2 over [0, h], [h, 2h], [2h, 3h]
        let ubar: [f64; 3] = std::array::from_fn(|j| {
            let xc = (j as f64 + 0.5) * h;
            xc * xc + h * h / 12.0
        });
        let p = optimal_parabola(&BoundaryStencil::left(ubar, h).unwrap());
        for k in 0..=10 {
            let x = 3.0 * h * k as f64 / 10.0;
            assert!((p.eval(x) - x * x).abs() < 1e-14, "x={x}");
        }
    }

    #[test]
    fn boundary_polynomials_linear_data_without_quadratic_term() {
        let h = 0.2;
        let s = 0.7;
        let st = BoundaryStencil::left([1.0, 1.0 + s, 1.0 + 2.0 * s], h).unwrap();
        let c = WeightVector([0.1, 0.0, 0.9]);
        let [_, p1, p2] = boundary_polynomials(&st, &c).unwrap();
        assert_eq!(p2.a2, 0.0);
        assert_relative_eq!(p2.a1, s / h / 0.9, max_relative = 1e-14);
        assert_relative_eq!(p1.a1, s / h, max_relative = 1e-14);
    }

    #[test]
    fn boundary_polynomials_reject_nonpositive_c2() {
        let st = BoundaryStencil::left([0.0, 1.0, 2.0], 0.1).unwrap();
        assert!(matches!(
            boundary_polynomials(&st, &WeightVector([0.5, 0.5, 0.0])),
            Err(Error::InvalidWeights { .. })
        ));
    }

    #[test]
    fn constant_data_gives_constant_candidates() {
        let st = BoundaryStencil::new([3.0; 3], 0.05, Side::Right, 1.0).unwrap();
        let c = optimal_weights(&sigma(NamedSet::Sigma1), 0.05).unwrap();
        for p in boundary_polynomials(&st, &c).unwrap() {
            assert_relative_eq!(p.a0, 3.0, max_relative = 1e-15);
            assert!(p.a1.abs() < 1e-13 && p.a2.abs() < 1e-10);
        }
        assert_eq!(boundary_indicators(&st, &c).unwrap().0, [0.0, 0.0, 0.0]);
    }

    #[test]
    fn indicator_reduction_for_linear_data() {
        let s = 0.37;
        let st = BoundaryStencil::left([0.0, s, 2.0 * s], 0.1).unwrap();
        let is = boundary_indicators(&st, &WeightVector([0.0, 0.0, 1.0])).unwrap().0;
        assert_relative_eq!(is[1], s * s, max_relative = 1e-15);
        assert_relative_eq!(is[2], s * s, max_relative = 1e-14);
    }

    #[test]
    fn nonlinear_weights_examples() {
        let c = WeightVector([0.2, 0.3, 0.5]);
        let w = nonlinear_weights(&IndicatorTriple([0.0; 3]), &c, 0.123, 2);
        for i in 0..3 {
            assert_relative_eq!(w.0[i], c.0[i], max_relative = 1e-15);
        }

        let c = WeightVector([0.25, 0.25, 0.5]);
        let w = nonlinear_weights(&IndicatorTriple([0.0, 1e6, 1e6]), &c, 1.0, 2);
        assert!(w.0[0] > 1.0 - 1e-11);
        // direct evaluation of the unnormalised weights
        let a = [0.25, 0.25 / (1.0 + 1e6f64).powi(2), 0.5 / (1.0 + 1e6f64).powi(2)];
        let s: f64 = a.iter().sum();
        for i in 0..3 {
            assert_relative_eq!(w.0[i], a[i] / s, max_relative = 1e-13);
        }
    }

    #[test]
    fn nonlinear_weights_survive_tiny_epsilon() {
        let w = nonlinear_weights(&IndicatorTriple([0.0, 0.0, 1.0]), &WeightVector([0.1, 0.4, 0.5]), 1e-200, 4);
        assert!(w.0.iter().all(|x| x.is_finite()));
        assert_relative_eq!(w.0[0], 0.2, max_relative = 1e-14);
    }

    #[test]
    fn boundary_reconstruction_table_values() {
        // |P(0)| for sin(2 pi x), Sigma1, n = 8
        let h = 0.25 * 2f64.powi(-8);
        let ubar = std::array::from_fn(|j| {
            let (a, b) = (j as f64 * h, (j + 1) as f64 * h);
            ((2.0 * std::f64::consts::PI * a).cos() - (2.0 * std::f64::consts::PI * b).cos())
                / (2.0 * std::f64::consts::PI * h)
        });
        let p = reconstruct_boundary(&BoundaryStencil::left(ubar, h).unwrap(), &sigma(NamedSet::Sigma1)).unwrap();
        let err = p.eval(0.0).abs();
        assert!((err - 1.78e-7).abs() < 0.005e-7, "err = {err:e}");
    }

    #[test]
    fn right_boundary_is_the_mirror_of_the_left() {
        let data = [0.3, 0.9, 0.1];
        let h = 0.1;
        let params = sigma(NamedSet::Sigma1);
        let left = reconstruct_boundary(&BoundaryStencil::new(data, h, Side::Left, 0.0).unwrap(), &params).unwrap();
        let right = reconstruct_boundary(&BoundaryStencil::new(data, h, Side::Right, 1.0).unwrap(), &params).unwrap();
        for k in 0..=6 {
            let d = 3.0 * h * k as f64 / 6.0;
            assert_relative_eq!(left.eval(d), right.eval(1.0 - d), max_relative = 1e-12);
        }
    }

    #[test]
    fn interior_constant_and_quadratic() {
        let params = sigma(NamedSet::Sigma2);
        let p = reconstruct_interior([4.0; 3], 0.7, 0.01, &params).unwrap();
        for d in [-0.005, 0.0, 0.003] {
            assert_eq!(p.eval(0.7 + d), 4.0);
        }

        // linear-weight mode recovers x^2 from its exact averages
        let (xc, h) = (0.4, 0.05);
        let ubar = std::array::from_fn(|k| {
            let x = xc + (k as f64 - 1.0) * h;
            x * x + h * h / 12.0
        });
        let p = QuadPoly::combine(&INTERIOR_OPTIMAL_WEIGHTS, &interior_polynomials(ubar, xc, h));
        for d in [-0.5, -0.2, 0.0, 0.3, 0.5] {
            let x = xc + d * h;
            assert!((p.eval(x) - x * x).abs() < 1e-15);
        }
    }

    #[test]
    fn interior_indicators_match_definition() {
        let (xc, h) = (0.0, 0.1);
        let ubar = [0.2, -0.4, 1.3];
        let polys = interior_polynomials(ubar, xc, h);
        let is = interior_indicators(ubar).0;
        for (poly, expected) in polys.iter().zip(is) {
            let quad = indicator_by_quadrature(poly, xc - h / 2.0, h);
            assert_relative_eq!(quad, expected, max_relative = 1e-12);
        }
    }

    #[test]
    fn boundary_local_matches_public_path() {
        let params = sigma(NamedSet::Sigma1);
        let h = 0.01;
        let ubar = [0.1, 0.4, 0.35];
        let w = params.at(h).unwrap();
        let local = boundary_local(ubar, h, &w);
        let public = reconstruct_boundary(&BoundaryStencil::left(ubar, h).unwrap(), &params).unwrap();
        for d in [-1.5 * h, -0.5 * h] {
            assert_relative_eq!(local.eval_offset(d), public.eval_offset(d), max_relative = 1e-13);
        }
    }

    fn feasible_weights() -> impl Strategy<Value = WeightVector> {
        (0.0..0.25f64, 0.0..0.25f64).prop_map(|(c0, c1)| WeightVector([c0, c1, 1.0 - c0 - c1]))
    }

    proptest! {
        #[test]
        fn convex_combination_reproduces_optimal_parabola(
            u in prop::array::uniform3(-10.0..10.0f64),
            h in 1e-4..1.0f64,
            c in feasible_weights(),
            right in any::<bool>(),
        ) {
            let side = if right { Side::Right } else { Side::Left };
            let st = BoundaryStencil::new(u, h, side, 0.3).unwrap();
            let opt = optimal_parabola(&st);
            let comb = QuadPoly::combine(&c, &boundary_polynomials(&st, &c).unwrap());
            let scale = u.iter().map(|x| x.abs()).fold(1.0, f64::max);
            prop_assert!((comb.a0 - opt.a0).abs() <= 1e-13 * scale);
            prop_assert!((comb.a1 - opt.a1).abs() <= 1e-13 * scale / h);
            prop_assert!((comb.a2 - opt.a2).abs() <= 1e-13 * scale / (h * h));
        }

        #[test]
        fn optimal_parabola_preserves_averages(
            u in prop::array::uniform3(-5.0..5.0f64),
            h in 1e-3..1.0f64,
        ) {
            let st = BoundaryStencil::left(u, h).unwrap();
            let p = optimal_parabola(&st);
            for j in 0..3 {
                let a = j as f64 * h;
                let q = gauss5(|x| p.eval(x), a, a + h) / h;
                prop_assert!((q - u[j]).abs() <= 1e-13 * (1.0 + u[j].abs()));
            }
        }

        #[test]
        fn weights_are_normalised(
            is in prop::array::uniform3(0.0..1e3f64),
            c in feasible_weights(),
            eps in 1e-12..1.0f64,
            p in 1u32..4,
        ) {
            let w = nonlinear_weights(&IndicatorTriple(is), &c, eps, p);
            prop_assert!((w.sum() - 1.0).abs() <= 1e-14);
            prop_assert!(w.0.iter().all(|x| *x >= 0.0));
        }

        #[test]
        fn constant_data_is_reproduced(
            k in -100.0..100.0f64,
            h in 1e-4..0.5f64,
            xs in prop::array::uniform10(0.0..1.0f64),
        ) {
            let params = NamedSet::Sigma1.params();
            let p = reconstruct_boundary(&BoundaryStencil::left([k; 3], h).unwrap(), &params).unwrap();
            let q = reconstruct_interior([k; 3], 0.0, h, &params).unwrap();
            for x in xs {
                prop_assert!((p.eval(x * 3.0 * h) - k).abs() <= 1e-15 * k.abs());
                prop_assert!((q.eval((x - 0.5) * h) - k).abs() <= 1e-15 * k.abs());
            }
        }

        #[test]
        fn weight_ranking_is_shift_invariant(
            u in prop::array::uniform3(-1.0..1.0f64),
            t in -50.0..50.0f64,
        ) {
            let h = 0.05;
            let w = NamedSet::Sigma1.params().at(h).unwrap();
            let rank = |data: [f64; 3]| {
                let st = BoundaryStencil::left(data, h).unwrap();
                let r = reconstruct_boundary_detailed(&st, &w).unwrap();
                let mut idx = [0usize, 1, 2];
                idx.sort_by(|a, b| r.omega.0[*a].partial_cmp(&r.omega.0[*b]).unwrap());
                (idx, r.omega)
            };
            let (r0, w0) = rank(u);
            let (r1, w1) = rank([u[0] + t, u[1] + t, u[2] + t]);
            // ties under rounding are allowed to swap
            let distinct = (0..3).all(|i| (0..i).all(|j| (w0.0[i] - w0.0[j]).abs() > 1e-9));
            if distinct {
                prop_assert_eq!(r0, r1);
            }
            for i in 0..3 {
                prop_assert!((w0.0[i] - w1.0[i]).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn indicator_closed_form_matches_quadrature() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand::rngs::StdRng::seed_from_u64(7);
        for _ in 0..1000 {
            let h: f64 = rng.gen_range(1e-3..1.0);
            let sl: f64 = rng.gen_range(-1.0..1.0);
            let sr: f64 = rng.gen_range(-1.0..1.0);
            let c0: f64 = rng.gen_range(0.0..0.25);
            let c1: f64 = rng.gen_range(0.0..0.25);
            let c = WeightVector([c0, c1, 1.0 - c0 - c1]);
            let st = BoundaryStencil::left([0.5, 0.5 + sl, 0.5 + sl + sr], h).unwrap();
            let polys = boundary_polynomials(&st, &c).unwrap();
            let is = boundary_indicators(&st, &c).unwrap().0;
            let scale = sl * sl + sr * sr;
            for i in 0..3 {
                let quad = indicator_by_quadrature(&polys[i], 0.0, h);
                assert!(
                    (quad - is[i]).abs() <= 1e-12 * scale.max(is[i]),
                    "i={i} quad={quad} closed={}",
                    is[i]
                );
            }
        }
    }
}
