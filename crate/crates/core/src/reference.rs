//! Single-scale reference solvers and homogenization oracles: resolved
//! fine-scale FEM, the exact 1D homogenized coefficient and cell corrector
//! in closed quadrature form, the homogenized solve, and error norms.
//!
//! In one dimension the homogenized coefficient is the harmonic mean
//! A⁰(x) = (∫_Y Ã(x,y)⁻¹ dy)⁻¹ and the corrector slope is
//! ∂_yχ(x,y) = A⁰(x)/Ã(x,y) − 1 with the representative pinned by
//! χ(x,0) = 0. Both are evaluated by composite Gauss quadrature, giving an
//! oracle for the two-scale solver that shares none of its code path.

use crate::dense::solve_tridiagonal;
use crate::error::{Error, Result};
use crate::hierarchy::{basis_integrals, gram_matrix_1d, NodalFunction, SpaceKind};
use crate::quadrature::{dyadic_points, gauss5_on, integrate};
use crate::twoscale::{epsilon_exponent, EpsilonProblem, SeparableCoefficient};

/// Panels of the composite Gauss rule used for cell integrals.
const CELL_PANELS: usize = 64;

/// Evaluable function on (0,1) with a derivative.
pub trait Function1d {
    fn value(&self, x: f64) -> f64;
    fn deriv(&self, x: f64) -> f64;
}

impl Function1d for NodalFunction {
    fn value(&self, x: f64) -> f64 {
        NodalFunction::value(self, x)
    }

    fn deriv(&self, x: f64) -> f64 {
        NodalFunction::deriv(self, x)
    }
}

/// A function given by closures for value and derivative.
pub struct Closure1d<F, G> {
    pub value: F,
    pub deriv: G,
}

impl<F: Fn(f64) -> f64, G: Fn(f64) -> f64> Function1d for Closure1d<F, G> {
    fn value(&self, x: f64) -> f64 {
        (self.value)(x)
    }

    fn deriv(&self, x: f64) -> f64 {
        (self.deriv)(x)
    }
}

/// Evaluable function on the unit square with first and mixed derivatives.
pub trait Function2d {
    fn value(&self, x: f64, y: f64) -> f64;
    fn dx(&self, x: f64, y: f64) -> f64;
    fn dy(&self, x: f64, y: f64) -> f64;
    fn dxy(&self, x: f64, y: f64) -> f64;
}

/// A 2D function given by closures.
pub struct Closure2d<V, X, Y, M> {
    pub value: V,
    pub dx: X,
    pub dy: Y,
    pub dxy: M,
}

impl<V, X, Y, M> Function2d for Closure2d<V, X, Y, M>
where
    V: Fn(f64, f64) -> f64,
    X: Fn(f64, f64) -> f64,
    Y: Fn(f64, f64) -> f64,
    M: Fn(f64, f64) -> f64,
{
    fn value(&self, x: f64, y: f64) -> f64 {
        (self.value)(x, y)
    }

    fn dx(&self, x: f64, y: f64) -> f64 {
        (self.dx)(x, y)
    }

    fn dy(&self, x: f64, y: f64) -> f64 {
        (self.dy)(x, y)
    }

    fn dxy(&self, x: f64, y: f64) -> f64 {
        (self.dxy)(x, y)
    }
}

/// Sum of separable products Σ_r u_r(x)·v_r(y) of 1D mesh functions.
pub struct RankOneSum {
    factors: Vec<(NodalFunction, NodalFunction)>,
}

impl RankOneSum {
    pub fn new(factors: Vec<(NodalFunction, NodalFunction)>) -> Self {
        Self { factors }
    }
}

impl Function2d for RankOneSum {
    fn value(&self, x: f64, y: f64) -> f64 {
        self.factors.iter().map(|(u, v)| u.value(x) * v.value(y)).sum()
    }

    fn dx(&self, x: f64, y: f64) -> f64 {
        self.factors.iter().map(|(u, v)| u.deriv(x) * v.value(y)).sum()
    }

    fn dy(&self, x: f64, y: f64) -> f64 {
        self.factors.iter().map(|(u, v)| u.value(x) * v.deriv(y)).sum()
    }

    fn dxy(&self, x: f64, y: f64) -> f64 {
        self.factors.iter().map(|(u, v)| u.deriv(x) * v.deriv(y)).sum()
    }
}

/// L² and H¹-seminorm errors plus optional pointwise samples.
#[derive(Debug, Clone)]
pub struct ErrorReport {
    pub l2: f64,
    pub h1semi: f64,
    pub point_errors: Option<Vec<(f64, f64)>>,
}

impl ErrorReport {
    /// Full norm sqrt(l2² + h1semi²).
    pub fn combined(&self) -> f64 {
        self.l2.hypot(self.h1semi)
    }
}

/// Direct Galerkin solve of −(a(x) u′)′ = f with zero boundary values on
/// the level-L dyadic mesh. The hat stiffness is tridiagonal, so a Thomas
/// solve is exact to machine precision.
pub fn solve_dirichlet_1d(
    coeff: &dyn Fn(f64) -> f64,
    source: &dyn Fn(f64) -> f64,
    level: u32,
) -> Result<NodalFunction> {
    if level < 1 {
        return Err(Error::InvalidRequest("1D solve needs level >= 1".into()));
    }
    for &(x, _) in &dyadic_points(level) {
        let v = coeff(x);
        if !(v > 0.0 && v.is_finite()) {
            return Err(Error::InvalidCoefficient(format!(
                "coefficient sample {v:e} at x = {x} is not positive"
            )));
        }
    }
    let stiffness =
        gram_matrix_1d(level, SpaceKind::DirichletHat, SpaceKind::DirichletHat, coeff, 1, 1)?;
    let load = basis_integrals(level, SpaceKind::DirichletHat, source, 0)?;
    let coeffs = solve_tridiagonal(&stiffness, &load)?;
    NodalFunction::new(SpaceKind::DirichletHat, level, coeffs)
}

/// Resolved fine-scale solve of the oscillatory problem. Requires at least
/// 8 elements per ε-period (2^{-level} ≤ ε/8).
pub fn solve_fine(problem: &EpsilonProblem, level: u32) -> Result<NodalFunction> {
    let m = epsilon_exponent(problem.epsilon())?;
    if level < m + 3 {
        return Err(Error::InvalidRequest(format!(
            "level {level} under-resolves epsilon = {} (need at least {})",
            problem.epsilon(),
            m + 3
        )));
    }
    solve_dirichlet_1d(
        &|x| problem.oscillatory_coefficient(x),
        problem.source(),
        level,
    )
}

/// Harmonic-mean homogenized coefficient A⁰(x) = (∫_Y Ã(x,y)⁻¹ dy)⁻¹.
pub fn homogenized_coefficient(coeff: &SeparableCoefficient, x: f64) -> Result<f64> {
    let mut mean = 0.0;
    let width = 1.0 / CELL_PANELS as f64;
    for panel in 0..CELL_PANELS {
        let left = panel as f64 * width;
        for (y, w) in gauss5_on(left, left + width) {
            let v = coeff.value(x, y);
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::InvalidCoefficient(format!(
                    "coefficient sample {v:e} at ({x}, {y}) is not positive"
                )));
            }
            mean += w / v;
        }
    }
    Ok(1.0 / mean)
}

/// Corrector values χ(x, y_j) = ∫₀^{y_j} (A⁰(x)/Ã(x,s) − 1) ds with the
/// representative pinned by χ(x,0) = 0. Periodicity forces χ(x,1) = 0.
pub fn cell_corrector(
    coeff: &SeparableCoefficient,
    x: f64,
    y_points: &[f64],
) -> Result<Vec<f64>> {
    let a0 = homogenized_coefficient(coeff, x)?;
    Ok(y_points
        .iter()
        .map(|&y| {
            if y == 0.0 {
                0.0
            } else {
                let panels = ((CELL_PANELS as f64 * y).ceil() as usize).max(1);
                integrate(|s| a0 / coeff.value(x, s) - 1.0, 0.0, y, panels)
            }
        })
        .collect())
}

/// χ(x_i, y_j) on a tensor grid with ascending y; the cumulative sweep per
/// row keeps the cost of dense error quadratures linear in the grid size.
pub fn corrector_surface(
    coeff: &SeparableCoefficient,
    xs: &[f64],
    ys: &[f64],
) -> Result<Vec<Vec<f64>>> {
    if ys.windows(2).any(|w| w[0] > w[1]) {
        return Err(Error::InvalidRequest("corrector surface needs ascending y points".into()));
    }
    let mut out = Vec::with_capacity(xs.len());
    for &x in xs {
        let a0 = homogenized_coefficient(coeff, x)?;
        let mut row = Vec::with_capacity(ys.len());
        let mut acc = 0.0;
        let mut prev = 0.0;
        for &y in ys {
            let gap = y - prev;
            if gap > 0.0 {
                let panels = ((CELL_PANELS as f64 * gap).ceil() as usize).max(1);
                acc += integrate(|s| a0 / coeff.value(x, s) - 1.0, prev, y, panels);
            }
            row.push(acc);
            prev = y;
        }
        out.push(row);
    }
    Ok(out)
}

/// FE solve of the homogenized problem −(A⁰(x) u′)′ = f.
pub fn solve_homogenized(
    coeff: &SeparableCoefficient,
    source: &dyn Fn(f64) -> f64,
    level: u32,
) -> Result<NodalFunction> {
    // quadrature samples hit the coefficient contract before the solve does
    let a0 = |x: f64| homogenized_coefficient(coeff, x).unwrap_or(f64::NAN);
    solve_dirichlet_1d(&a0, source, level)
}

/// L² and H¹-seminorm distance between two 1D functions by composite Gauss
/// quadrature on the level-`quad_level` dyadic mesh.
pub fn error_norms(
    approx: &dyn Function1d,
    exact: &dyn Function1d,
    quad_level: u32,
) -> ErrorReport {
    error_norms_with_points(approx, exact, quad_level, None)
}

/// Same as [`error_norms`], sampling |e(x)| at the given points as well.
pub fn error_norms_with_points(
    approx: &dyn Function1d,
    exact: &dyn Function1d,
    quad_level: u32,
    points: Option<&[f64]>,
) -> ErrorReport {
    let mut l2 = 0.0;
    let mut h1 = 0.0;
    for (x, w) in dyadic_points(quad_level) {
        let e = approx.value(x) - exact.value(x);
        let de = approx.deriv(x) - exact.deriv(x);
        l2 += w * e * e;
        h1 += w * de * de;
    }
    let point_errors = points.map(|ps| {
        ps.iter()
            .map(|&x| (x, (approx.value(x) - exact.value(x)).abs()))
            .collect()
    });
    ErrorReport {
        l2: l2.sqrt(),
        h1semi: h1.sqrt(),
        point_errors,
    }
}

/// Error in the mixed norm of the corrector space: `l2` is the L²(D×Y)
/// distance and `h1semi` the L² norm of the y-derivative mismatch, so the
/// combined value is the L²(D, H¹(Y)) error.
pub fn error_norms_xy(
    approx: &dyn Function2d,
    exact: &dyn Function2d,
    quad_level: u32,
) -> ErrorReport {
    let ys: Vec<(f64, f64)> = dyadic_points(quad_level);
    let y_coords: Vec<f64> = ys.iter().map(|&(y, _)| y).collect();
    error_norms_xy_rows(
        approx,
        |x, targets: &[f64]| {
            let vals = targets.iter().map(|&y| exact.value(x, y)).collect();
            let dys = targets.iter().map(|&y| exact.dy(x, y)).collect();
            (vals, dys)
        },
        &y_coords,
        quad_level,
    )
}

/// Row-provider variant of [`error_norms_xy`]: for each quadrature abscissa
/// x the provider returns the exact values and y-derivatives at all y
/// quadrature points at once (cumulative oracles need the whole row).
pub fn error_norms_xy_rows<F>(
    approx: &dyn Function2d,
    mut exact_rows: F,
    y_coords: &[f64],
    quad_level: u32,
) -> ErrorReport
where
    F: FnMut(f64, &[f64]) -> (Vec<f64>, Vec<f64>),
{
    let xs = dyadic_points(quad_level);
    let ys = dyadic_points(quad_level);
    debug_assert_eq!(y_coords.len(), ys.len());
    let mut l2 = 0.0;
    let mut h1 = 0.0;
    for &(x, wx) in &xs {
        let (vals, dys) = exact_rows(x, y_coords);
        for (j, &(y, wy)) in ys.iter().enumerate() {
            let w = wx * wy;
            let e = approx.value(x, y) - vals[j];
            let de = approx.dy(x, y) - dys[j];
            l2 += w * e * e;
            h1 += w * de * de;
        }
    }
    ErrorReport {
        l2: l2.sqrt(),
        h1semi: h1.sqrt(),
        point_errors: None,
    }
}

/// Error in the H^{1,1} norm of tensorized H¹ spaces: `l2` is the plain L²
/// distance and `h1semi` collects the ∂x, ∂y and mixed ∂x∂y terms, so the
/// combined value is the full H^{1,1}(D×D) error.
pub fn error_norms_h11(
    approx: &dyn Function2d,
    exact: &dyn Function2d,
    quad_level: u32,
) -> ErrorReport {
    let xs = dyadic_points(quad_level);
    let ys = dyadic_points(quad_level);
    let mut l2 = 0.0;
    let mut deriv = 0.0;
    for &(x, wx) in &xs {
        for &(y, wy) in &ys {
            let w = wx * wy;
            let e = approx.value(x, y) - exact.value(x, y);
            let ex = approx.dx(x, y) - exact.dx(x, y);
            let ey = approx.dy(x, y) - exact.dy(x, y);
            let exy = approx.dxy(x, y) - exact.dxy(x, y);
            l2 += w * e * e;
            deriv += w * (ex * ex + ey * ey + exy * exy);
        }
    }
    ErrorReport {
        l2: l2.sqrt(),
        h1semi: deriv.sqrt(),
        point_errors: None,
    }
}
