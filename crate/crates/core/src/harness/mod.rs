//! Convergence studies: exact cell averages, error norms, EOC columns and the
//! reconstruction accuracy study. Time-dependent scenarios live in
//! [`scenarios`].

pub mod scenarios;

use std::f64::consts::PI;
use std::fmt;

use crate::cweno::{reconstruct_boundary, BoundaryStencil, ParamSet};
use crate::error::{Error, Result, Side};
use crate::models::StateVector;
use crate::scheme::EdgeGrid;

pub use scenarios::{run_scenario, EdgeSnapshot, ScenarioKind, ScenarioOutcome, ScenarioSpec, Snapshot};

const GAUSS5_NODES: [f64; 5] = [
    -0.906_179_845_938_664,
    -0.538_469_310_105_683,
    0.0,
    0.538_469_310_105_683,
    0.906_179_845_938_664,
];
const GAUSS5_WEIGHTS: [f64; 5] = [
    0.236_926_885_056_189_1,
    0.478_628_670_499_366_5,
    0.568_888_888_888_888_9,
    0.478_628_670_499_366_5,
    0.236_926_885_056_189_1,
];

/// Five-point Gauss-Legendre rule on `[a, b]`.
pub fn gauss5<S: StateVector>(f: &impl Fn(f64) -> S, a: f64, b: f64) -> S {
    let m = 0.5 * (a + b);
    let r = 0.5 * (b - a);
    let mut acc = S::zero();
    for (x, w) in GAUSS5_NODES.iter().zip(GAUSS5_WEIGHTS) {
        acc += f(m + r * x) * w;
    }
    acc * r
}

/// Mean of `f` over `[a, b]`, splitting the interval at every breakpoint
/// strictly inside it.
pub fn interval_average<S: StateVector>(f: &impl Fn(f64) -> S, a: f64, b: f64, breaks: &[f64]) -> S {
    let mut acc = S::zero();
    let mut lo = a;
    let mut inner: Vec<f64> = breaks.iter().copied().filter(|x| *x > a && *x < b).collect();
    inner.sort_by(f64::total_cmp);
    for x in inner.into_iter().chain(std::iter::once(b)) {
        acc += gauss5(f, lo, x);
        lo = x;
    }
    acc * (1.0 / (b - a))
}

/// Cell averages of a smooth function on every cell of `grid`.
pub fn exact_cell_averages<S: StateVector>(f: impl Fn(f64) -> S, grid: &EdgeGrid) -> Vec<S> {
    exact_cell_averages_split(f, grid, &[])
}

/// Cell averages of a piecewise smooth function with jumps at `breaks`.
pub fn exact_cell_averages_split<S: StateVector>(f: impl Fn(f64) -> S, grid: &EdgeGrid, breaks: &[f64]) -> Vec<S> {
    (0..grid.cells)
        .map(|j| interval_average(&f, grid.interface(j), grid.interface(j + 1), breaks))
        .collect()
}

/// One row of a convergence table.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConvergenceRow {
    pub n: u32,
    pub h: f64,
    pub error: f64,
    pub eoc: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConvergenceTable {
    pub scenario: String,
    pub params: String,
    pub rows: Vec<ConvergenceRow>,
}

impl ConvergenceTable {
    /// Builds the table from `(n, h, error)` triples; the EOC column is derived.
    pub fn from_errors(scenario: impl Into<String>, params: impl Into<String>, data: &[(u32, f64, f64)]) -> Self {
        let errors: Vec<f64> = data.iter().map(|r| r.2).collect();
        let eoc = eoc_column(&errors);
        let rows = data
            .iter()
            .zip(eoc)
            .map(|(&(n, h, error), eoc)| ConvergenceRow { n, h, error, eoc })
            .collect();
        Self { scenario: scenario.into(), params: params.into(), rows }
    }

    pub fn row(&self, n: u32) -> Option<&ConvergenceRow> {
        self.rows.iter().find(|r| r.n == n)
    }

    pub fn errors(&self) -> Vec<f64> {
        self.rows.iter().map(|r| r.error).collect()
    }
}

impl fmt::Display for ConvergenceTable {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "{} / {}", self.scenario, self.params)?;
        for r in &self.rows {
            match r.eoc {
                Some(e) => writeln!(f, "{:>3}  {:.4e}  {:.3e}  {:5.2}", r.n, r.h, r.error, e)?,
                None => writeln!(f, "{:>3}  {:.4e}  {:.3e}      -", r.n, r.h, r.error)?,
            }
        }
        Ok(())
    }
}

/// `eoc_n = log2(e_{n-1} / e_n)`; the first entry and entries next to a
/// non-positive error are `None`.
pub fn eoc_column(errors: &[f64]) -> Vec<Option<f64>> {
    let mut out = Vec::with_capacity(errors.len());
    for (i, e) in errors.iter().enumerate() {
        if i == 0 {
            out.push(None);
            continue;
        }
        let prev = errors[i - 1];
        out.push((prev > 0.0 && *e > 0.0).then(|| (prev / e).log2()));
    }
    out
}

/// Max over all edges, cells and components of `|u - reference|`.
pub fn linf_error<S: StateVector>(state: &[Vec<S>], reference: &[Vec<S>]) -> Result<f64> {
    linf_error_in(state, reference, &[])
}

/// As [`linf_error`], restricted to the listed components (all when empty).
pub fn linf_error_in<S: StateVector>(state: &[Vec<S>], reference: &[Vec<S>], components: &[usize]) -> Result<f64> {
    if let Some(k) = components.iter().find(|k| **k >= S::LEN) {
        return Err(Error::InvalidArgument(format!("component {k} out of range for a {}-component state", S::LEN)));
    }
    let all: Vec<usize> = (0..S::LEN).collect();
    let comps = if components.is_empty() { &all[..] } else { components };
    if state.len() != reference.len() {
        return Err(Error::GridMismatch(format!("{} edges vs {} reference edges", state.len(), reference.len())));
    }
    let mut err: f64 = 0.0;
    for (e, (u, r)) in state.iter().zip(reference).enumerate() {
        if u.len() != r.len() {
            return Err(Error::GridMismatch(format!("edge {e}: {} cells vs {} reference cells", u.len(), r.len())));
        }
        for (a, b) in u.iter().zip(r) {
            for &k in comps {
                err = err.max((a[k] - b[k]).abs());
            }
        }
    }
    Ok(err)
}

/// Coarse cell averages obtained by averaging groups of `factor` fine cells.
pub fn restrict_reference<S: StateVector>(fine: &[S], factor: usize) -> Result<Vec<S>> {
    if factor == 0 || !factor.is_power_of_two() {
        return Err(Error::InvalidArgument(format!("restriction factor must be a power of two, got {factor}")));
    }
    if fine.len() % factor != 0 {
        return Err(Error::GridMismatch(format!("{} fine cells not divisible by {factor}", fine.len())));
    }
    let inv = 1.0 / factor as f64;
    Ok(fine
        .chunks_exact(factor)
        .map(|c| {
            let mut acc = S::zero();
            for u in c {
                acc += *u;
            }
            acc * inv
        })
        .collect())
}

/// Test problems for the stand-alone boundary reconstruction.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ReconCase {
    /// `sin(2 pi x)`, stencil starting at 0, evaluated at 0.
    Smooth,
    /// Jump in the third stencil cell (at its centre).
    DiscI25,
    /// Jump in the second stencil cell (at its right face).
    DiscI15,
}

/// Jump location for the discontinuous cases.
pub const RECON_JUMP_AT: f64 = 0.1;
/// Jump height for the discontinuous cases.
pub const RECON_JUMP: f64 = 0.5;

impl ReconCase {
    pub const ALL: [ReconCase; 3] = [ReconCase::Smooth, ReconCase::DiscI25, ReconCase::DiscI15];

    pub fn h(n: u32) -> f64 {
        0.25 * 0.5f64.powi(n as i32)
    }

    fn smooth(x: f64) -> f64 {
        (2.0 * PI * x).sin()
    }

    fn data(self, x: f64) -> f64 {
        match self {
            ReconCase::Smooth => Self::smooth(x),
            _ => Self::smooth(x) + if x > RECON_JUMP_AT { RECON_JUMP } else { 0.0 },
        }
    }

    /// Stencil origin, evaluation point and target value at mesh width `h`.
    /// The target for the jump cases is the limit from the smooth side.
    fn setup(self, h: f64) -> (f64, f64, f64) {
        match self {
            ReconCase::Smooth => (0.0, 0.0, 0.0),
            ReconCase::DiscI25 => (RECON_JUMP_AT - 2.5 * h, RECON_JUMP_AT, Self::smooth(RECON_JUMP_AT)),
            ReconCase::DiscI15 => (RECON_JUMP_AT - 1.5 * h, RECON_JUMP_AT, Self::smooth(RECON_JUMP_AT)),
        }
    }

    /// Reconstruction error at refinement level `n`.
    pub fn error(self, params: &ParamSet, n: u32) -> Result<f64> {
        let h = Self::h(n);
        let (x0, x_eval, target) = self.setup(h);
        let f = |x: f64| crate::models::State([self.data(x)]);
        let breaks = [RECON_JUMP_AT];
        let ubar: [f64; 3] = std::array::from_fn(|k| {
            let a = x0 + k as f64 * h;
            interval_average(&f, a, a + h, &breaks)[0]
        });
        let poly = reconstruct_boundary(&BoundaryStencil::new(ubar, h, Side::Left, x0)?, params)?;
        Ok((poly.eval(x_eval) - target).abs())
    }

    pub fn name(self) -> &'static str {
        match self {
            ReconCase::Smooth => "recon-smooth",
            ReconCase::DiscI25 => "recon-disc-i25",
            ReconCase::DiscI15 => "recon-disc-i15",
        }
    }
}

/// Boundary reconstruction errors over the levels `ns`.
pub fn reconstruction_study(
    case: ReconCase,
    params: &ParamSet,
    params_name: &str,
    ns: impl IntoIterator<Item = u32>,
) -> Result<ConvergenceTable> {
    let data = ns
        .into_iter()
        .map(|n| Ok((n, ReconCase::h(n), case.error(params, n)?)))
        .collect::<Result<Vec<_>>>()?;
    Ok(ConvergenceTable::from_errors(case.name(), params_name, &data))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cweno::NamedSet;
    use crate::models::State;
    use approx::assert_relative_eq;

    type S1 = State<1>;

    #[test]
    fn constant_and_quadratic_averages() {
        let g = EdgeGrid::new(-1.0, 2.0, 7).unwrap();
        for u in exact_cell_averages(|_| S1::from_fn(|_| 2.5), &g) {
            assert_relative_eq!(u[0], 2.5, max_relative = 1e-15);
        }
        let h = g.h();
        for (j, u) in exact_cell_averages(|x| State([x * x]), &g).iter().enumerate() {
            let xc = g.center(j);
            assert!((u[0] - (xc * xc + h * h / 12.0)).abs() < 1e-15);
        }
    }

    #[test]
    fn sine_averages_match_midpoint_oracle() {
        let g = EdgeGrid::new(0.0, 0.2, 10).unwrap();
        let avg = exact_cell_averages(|x| State([(2.0 * PI * x).sin()]), &g);
        for (j, u) in avg.iter().enumerate() {
            let (a, b) = (g.interface(j), g.interface(j + 1));
            let m = 10_000;
            let d = (b - a) / m as f64;
            let oracle = (0..m).map(|k| (2.0 * PI * (a + (k as f64 + 0.5) * d)).sin()).sum::<f64>() / m as f64;
            assert!((u[0] - oracle).abs() < 1e-9, "{} vs {oracle}", u[0]);
            // closed form
            let exact = ((2.0 * PI * a).cos() - (2.0 * PI * b).cos()) / (2.0 * PI * (b - a));
            assert!((u[0] - exact).abs() < 1e-13);
        }
    }

    #[test]
    fn split_averages_of_a_step() {
        let f = |x: f64| State([if x > 0.3 { 1.0 } else { 0.0 }]);
        let u = interval_average(&f, 0.0, 1.0, &[0.3]);
        assert_relative_eq!(u[0], 0.7, max_relative = 1e-15);
        let u = interval_average(&f, 0.0, 1.0, &[0.3, 0.3, 2.0]);
        assert_relative_eq!(u[0], 0.7, max_relative = 1e-15);
    }

    #[test]
    fn eoc_examples() {
        let e = eoc_column(&[8e-3, 1e-3, 1.25e-4]);
        assert_eq!(e[0], None);
        assert_relative_eq!(e[1].unwrap(), 3.0, epsilon = 1e-12);
        assert_relative_eq!(e[2].unwrap(), 3.0, epsilon = 1e-12);
        assert_eq!(eoc_column(&[0.1, 0.1])[1], Some(0.0));
        assert_eq!(eoc_column(&[0.1, 0.0])[1], None);
        let e = eoc_column(&[4.54e-3, 6.88e-4]);
        assert!((e[1].unwrap() - 2.7).abs() < 0.05);
    }

    #[test]
    fn linf_examples() {
        let a = vec![vec![State([1.0, 2.0]); 4], vec![State([0.0, 0.0]); 3]];
        assert_eq!(linf_error(&a, &a).unwrap(), 0.0);
        let mut b = a.clone();
        b[1][2][1] += 1e-3;
        assert_relative_eq!(linf_error(&b, &a).unwrap(), 1e-3, max_relative = 1e-12);
        assert_eq!(linf_error_in(&b, &a, &[0]).unwrap(), 0.0);
        assert!(linf_error_in(&b, &a, &[2]).is_err());
        b[1].pop();
        assert!(matches!(linf_error(&b, &a), Err(Error::GridMismatch(_))));
    }

    #[test]
    fn restriction_examples() {
        let c = vec![State([0.7]); 8];
        assert_eq!(restrict_reference(&c, 4).unwrap(), vec![State([0.7]); 2]);
        assert_eq!(restrict_reference(&c, 1).unwrap(), c);
        assert!(restrict_reference(&c, 3).is_err());
        assert!(restrict_reference(&c[..6], 4).is_err());

        let fine = EdgeGrid::new(0.0, 1.0, 16).unwrap();
        let coarse = EdgeGrid::new(0.0, 1.0, 4).unwrap();
        let lin = |x: f64| State([3.0 * x - 1.0]);
        let r = restrict_reference(&exact_cell_averages(lin, &fine), 4).unwrap();
        let direct = exact_cell_averages(lin, &coarse);
        for (a, b) in r.iter().zip(direct) {
            assert!((a[0] - b[0]).abs() < 1e-15);
        }
    }

    #[test]
    fn reconstruction_study_anchor_values() {
        let t = reconstruction_study(ReconCase::Smooth, &NamedSet::Sigma1.params(), "sigma1", 1..=14).unwrap();
        let last = t.row(14).unwrap();
        assert!((last.error - 6.61e-13).abs() / 6.61e-13 < 0.05);
        assert!((last.eoc.unwrap() - 3.0).abs() < 0.05);

        let e = ReconCase::DiscI25.error(&NamedSet::Sigma2.params(), 8).unwrap();
        assert!((e - 7.04e-6).abs() / 7.04e-6 < 0.05);
        let e = ReconCase::DiscI15.error(&NamedSet::Sigma3.params(), 14).unwrap();
        assert!((e - 2.50e-1).abs() / 2.50e-1 < 0.05);
    }
}
