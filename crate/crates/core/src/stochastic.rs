//! Deterministic computation of the mean field and two-point correlation of
//! the random elliptic solution, variance extraction, and a seeded
//! Monte-Carlo oracle.
//!
//! Random sources are finite-rank Gaussian: f = E_f + Σ_r ξ_r g_r with
//! i.i.d. standard normal amplitudes, so the source correlation is exactly
//! separable and the correlation equation is solved for the covariance (the
//! fluctuating part); the full second moment is covariance + E_u ⊗ E_u.

use ndarray::{Array1, Array2};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::hierarchy::{
    basis_integrals, gram_matrix_1d, synthesis_matrix, to_detail_basis, DyadicMesh, NodalFunction,
    SpaceKind,
};
use crate::krylov::{cg_solve, DiagonalPreconditioner, KroneckerSum};
use crate::quadrature::dyadic_points;
use crate::reference::{solve_dirichlet_1d, Function2d};
use crate::tensor_index::{build_dof_map, build_level_pairs, TensorMode};
use crate::twoscale::ScalarFn;

/// Name of the pseudo-random generator, recorded in output metadata.
pub const RNG_NAME: &str = "chacha8";

/// Finite-rank Gaussian source model: f(x,ω) = E_f(x) + Σ_r ξ_r g_r(x).
pub struct RandomSourceModel {
    mean: ScalarFn,
    modes: Vec<ScalarFn>,
}

impl RandomSourceModel {
    pub fn new(
        mean: impl Fn(f64) -> f64 + Send + Sync + 'static,
        modes: Vec<ScalarFn>,
    ) -> Self {
        Self { mean: Box::new(mean), modes }
    }

    pub fn mean(&self) -> &ScalarFn {
        &self.mean
    }

    pub fn modes(&self) -> &[ScalarFn] {
        &self.modes
    }

    /// Induced source correlation C_f(x,x′) = E_f E_f′ + Σ_r g_r g_r′.
    pub fn correlation(&self, x: f64, xp: f64) -> f64 {
        let mean = (self.mean)(x) * (self.mean)(xp);
        mean + self.modes.iter().map(|g| g(x) * g(xp)).sum::<f64>()
    }
}

/// FE solve of the mean-field equation −(A E_u′)′ = E_f.
pub fn solve_mean_field(
    coefficient: &dyn Fn(f64) -> f64,
    mean_source: &dyn Fn(f64) -> f64,
    level: u32,
) -> Result<NodalFunction> {
    solve_dirichlet_1d(coefficient, mean_source, level)
}

/// Galerkin operator of the correlation equation: the single-term Kronecker
/// sum K_A ⊗ K_A with K_A the weighted hat stiffness in the detail basis,
/// restricted to the (DirichletHat, DirichletHat) DOF map.
pub fn assemble_correlation_operator(
    coefficient: &dyn Fn(f64) -> f64,
    level: u32,
    mode: TensorMode,
) -> Result<KroneckerSum> {
    if level < 1 {
        return Err(Error::InvalidRequest("correlation assembly needs level >= 1".into()));
    }
    for &(x, _) in &dyadic_points(level) {
        let v = coefficient(x);
        if !(v > 0.0 && v.is_finite()) {
            return Err(Error::InvalidCoefficient(format!(
                "coefficient sample {v:e} at x = {x} is not positive"
            )));
        }
    }
    let kind = SpaceKind::DirichletHat;
    let stiffness = gram_matrix_1d(level, kind, kind, coefficient, 1, 1)?;
    let synth = synthesis_matrix(kind, level);
    let detail = to_detail_basis(&stiffness, &synth, &synth);
    let dof_map = build_dof_map((kind, kind), &build_level_pairs(level, mode));
    KroneckerSum::new(vec![(detail.clone(), detail)], dof_map)
}

/// Covariance of the random solution in the sparse (or full) tensor space.
pub struct CorrelationSolution {
    level: u32,
    mode: TensorMode,
    coeffs: Array1<f64>,
    /// Nodal values on the full grid (interior nodes × interior nodes).
    nodal: Array2<f64>,
    pub iterations: usize,
    pub residual: f64,
    pub converged: bool,
}

/// Solve the correlation equation for the covariance part of the model:
/// the load is Σ_r m_r ⊗ m_r with m_r the mode load vectors in the detail
/// basis. Coefficients are symmetrized across the block transpose after CG.
pub fn solve_correlation(
    op: &KroneckerSum,
    model: &RandomSourceModel,
    tol: f64,
) -> Result<CorrelationSolution> {
    let dof_map = op.dof_map().clone();
    let level = dof_map.max_level();
    let kind = SpaceKind::DirichletHat;
    let synth = synthesis_matrix(kind, level);

    let mut rhs_full = Array2::zeros(dof_map.full_dims());
    for mode_fn in model.modes() {
        let load = basis_integrals(level, kind, mode_fn, 0)?;
        let detail = synth.t().dot(&load);
        for (i, &a) in detail.iter().enumerate() {
            if a == 0.0 {
                continue;
            }
            for (j, &b) in detail.iter().enumerate() {
                rhs_full[[i, j]] += a * b;
            }
        }
    }
    let rhs = dof_map.gather(&rhs_full);

    let precond = DiagonalPreconditioner::new(op.diagonal().view())?;
    let n = dof_map.total();
    let (raw, outcome) = cg_solve(op, &precond, rhs.view(), tol, 10 * n.max(1))?;

    // CG preserves the transpose symmetry only up to the tolerance
    let full = dof_map.scatter(raw.view());
    let symmetrized = 0.5 * (&full + &full.t());
    let coeffs = dof_map.gather(&symmetrized);
    let nodal = synth.dot(&symmetrized).dot(&synth.t());

    Ok(CorrelationSolution {
        level,
        mode: dof_map.mode(),
        coeffs,
        nodal,
        iterations: outcome.iterations,
        residual: outcome.residual,
        converged: outcome.converged,
    })
}

impl CorrelationSolution {
    pub fn level(&self) -> u32 {
        self.level
    }

    pub fn mode(&self) -> TensorMode {
        self.mode
    }

    pub fn coeffs(&self) -> &Array1<f64> {
        &self.coeffs
    }

    /// Point evaluation C(x, x′), bilinear on the tensor mesh and zero on
    /// the boundary of the square.
    pub fn evaluate(&self, x: f64, xp: f64) -> f64 {
        let mesh = DyadicMesh::new(self.level);
        let (ex, ey) = (mesh.element_of(x), mesh.element_of(xp));
        let h = mesh.meshwidth();
        let tx = (x - mesh.node(ex)) / h;
        let ty = (xp - mesh.node(ey)) / h;
        let v00 = self.node(ex, ey);
        let v10 = self.node(ex + 1, ey);
        let v01 = self.node(ex, ey + 1);
        let v11 = self.node(ex + 1, ey + 1);
        (1.0 - tx) * (1.0 - ty) * v00 + tx * (1.0 - ty) * v10 + (1.0 - tx) * ty * v01 + tx * ty * v11
    }

    fn node(&self, i: usize, j: usize) -> f64 {
        let n = 1usize << self.level;
        if i == 0 || i == n || j == 0 || j == n {
            0.0
        } else {
            self.nodal[[i - 1, j - 1]]
        }
    }
}

impl Function2d for CorrelationSolution {
    fn value(&self, x: f64, y: f64) -> f64 {
        self.evaluate(x, y)
    }

    fn dx(&self, x: f64, y: f64) -> f64 {
        let mesh = DyadicMesh::new(self.level);
        let (ex, ey) = (mesh.element_of(x), mesh.element_of(y));
        let h = mesh.meshwidth();
        let ty = (y - mesh.node(ey)) / h;
        let low = (self.node(ex + 1, ey) - self.node(ex, ey)) / h;
        let high = (self.node(ex + 1, ey + 1) - self.node(ex, ey + 1)) / h;
        low + (high - low) * ty
    }

    fn dy(&self, x: f64, y: f64) -> f64 {
        let mesh = DyadicMesh::new(self.level);
        let (ex, ey) = (mesh.element_of(x), mesh.element_of(y));
        let h = mesh.meshwidth();
        let tx = (x - mesh.node(ex)) / h;
        let low = (self.node(ex, ey + 1) - self.node(ex, ey)) / h;
        let high = (self.node(ex + 1, ey + 1) - self.node(ex + 1, ey)) / h;
        low + (high - low) * tx
    }

    fn dxy(&self, x: f64, y: f64) -> f64 {
        let mesh = DyadicMesh::new(self.level);
        let (ex, ey) = (mesh.element_of(x), mesh.element_of(y));
        let h = mesh.meshwidth();
        (self.node(ex + 1, ey + 1) - self.node(ex, ey + 1) - self.node(ex + 1, ey)
            + self.node(ex, ey))
            / (h * h)
    }
}

/// Pointwise variance Var u(x) = C_u(x,x) − E_u(x)², with C_u the full
/// second moment recovered as covariance + E_u ⊗ E_u. Mild negative values
/// from discretization are clamped to zero; clearly negative values signal
/// a solver failure.
pub fn variance_field(
    mean_field: &NodalFunction,
    covariance: &CorrelationSolution,
    points: &[f64],
) -> Result<Vec<f64>> {
    if mean_field.level() != covariance.level() {
        return Err(Error::InvalidRequest(format!(
            "mean field level {} does not match covariance level {}",
            mean_field.level(),
            covariance.level()
        )));
    }
    points
        .iter()
        .map(|&x| {
            let mean = mean_field.value(x);
            let second_moment = covariance.evaluate(x, x) + mean * mean;
            let var = second_moment - mean * mean;
            if var < -1e-6 {
                Err(Error::Inconsistency(format!(
                    "variance {var:e} at x = {x} is negative beyond tolerance"
                )))
            } else {
                Ok(var.max(0.0))
            }
        })
        .collect()
}

/// Monte-Carlo estimates of the mean and second-moment grids.
pub struct McEstimate {
    pub points: Vec<f64>,
    pub mean: Vec<f64>,
    pub mean_se: Vec<f64>,
    /// Empirical second moments E[u(x_i) u(x_j)].
    pub correlation: Array2<f64>,
    pub correlation_se: Array2<f64>,
    pub samples: usize,
    pub seed: u64,
    pub rng: &'static str,
}

/// Sample the random problem: per sample draw the amplitudes, solve the
/// deterministic FE problem with f = E_f + Σ ξ_r g_r, and accumulate mean
/// and second-moment statistics at the given points. Per-sample generator
/// streams are split deterministically from the seed, so the estimate does
/// not depend on evaluation order.
pub fn mc_estimate(
    model: &RandomSourceModel,
    coefficient: &dyn Fn(f64) -> f64,
    level: u32,
    samples: usize,
    seed: u64,
    points: &[f64],
) -> Result<McEstimate> {
    if samples < 100 {
        return Err(Error::InvalidRequest(format!(
            "need at least 100 samples, got {samples}"
        )));
    }
    let kind = SpaceKind::DirichletHat;
    let stiffness = gram_matrix_1d(level, kind, kind, coefficient, 1, 1)?;
    let mean_load = basis_integrals(level, kind, model.mean(), 0)?;
    let mode_loads: Vec<Array1<f64>> = model
        .modes()
        .iter()
        .map(|g| basis_integrals(level, kind, g, 0))
        .collect::<Result<_>>()?;

    let np = points.len();
    let mut values = Array2::<f64>::zeros((samples, np));
    for s in 0..samples {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(s as u64 + 1);
        let mut load = mean_load.clone();
        for mode_load in &mode_loads {
            let xi: f64 = rng.sample(StandardNormal);
            load.scaled_add(xi, mode_load);
        }
        let coeffs = crate::dense::solve_tridiagonal(&stiffness, &load)?;
        let u = NodalFunction::new(kind, level, coeffs)?;
        for (i, &x) in points.iter().enumerate() {
            values[[s, i]] = u.value(x);
        }
    }

    // centered second pass avoids cancellation in the standard errors
    let n = samples as f64;
    let mean: Vec<f64> = (0..np).map(|i| values.column(i).sum() / n).collect();
    let mean_se: Vec<f64> = (0..np)
        .map(|i| {
            let centered: f64 = values.column(i).iter().map(|&v| (v - mean[i]).powi(2)).sum();
            (centered / (n - 1.0) / n).sqrt()
        })
        .collect();
    let mut correlation = Array2::zeros((np, np));
    let mut correlation_se = Array2::zeros((np, np));
    for i in 0..np {
        for j in 0..np {
            let avg = (0..samples).map(|s| values[[s, i]] * values[[s, j]]).sum::<f64>() / n;
            let centered: f64 = (0..samples)
                .map(|s| (values[[s, i]] * values[[s, j]] - avg).powi(2))
                .sum();
            correlation[[i, j]] = avg;
            correlation_se[[i, j]] = (centered / (n - 1.0) / n).sqrt();
        }
    }

    Ok(McEstimate {
        points: points.to_vec(),
        mean,
        mean_se,
        correlation,
        correlation_se,
        samples,
        seed,
        rng: RNG_NAME,
    })
}
