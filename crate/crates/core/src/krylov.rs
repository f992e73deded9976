//! Conjugate gradients with diagonal preconditioning and matrix-free
//! application of Kronecker-product sums restricted to a tensor DOF map.
//!
//! All operators are symmetric by contract; the Galerkin systems assembled
//! elsewhere in the crate are SPD, so plain CG applies. The 1D factor
//! matrices of a [`KroneckerSum`] live in the multilevel detail basis, which
//! makes the sparse restriction a pure index selection and lets diagonal
//! scaling act as a level-dependent preconditioner.

use ndarray::{Array1, Array2, ArrayView1};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::tensor_index::TensorDofMap;

/// Symmetric linear operator on R^n.
pub trait LinearOperator: Sync {
    fn dim(&self) -> usize;
    fn apply(&self, x: ArrayView1<f64>) -> Array1<f64>;
}

/// Dense matrix wrapped as an operator (oracles and small systems).
#[derive(Debug, Clone)]
pub struct DenseOperator {
    matrix: Array2<f64>,
}

impl DenseOperator {
    pub fn new(matrix: Array2<f64>) -> Result<Self> {
        if matrix.nrows() != matrix.ncols() {
            return Err(Error::InvalidOperator("dense operator must be square".into()));
        }
        Ok(Self { matrix })
    }

    pub fn matrix(&self) -> &Array2<f64> {
        &self.matrix
    }
}

impl LinearOperator for DenseOperator {
    fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    fn apply(&self, x: ArrayView1<f64>) -> Array1<f64> {
        self.matrix.dot(&x)
    }
}

/// Identity, mostly as the trivial preconditioner.
#[derive(Debug, Clone, Copy)]
pub struct IdentityOperator {
    dim: usize,
}

impl IdentityOperator {
    pub fn new(dim: usize) -> Self {
        Self { dim }
    }
}

impl LinearOperator for IdentityOperator {
    fn dim(&self) -> usize {
        self.dim
    }

    fn apply(&self, x: ArrayView1<f64>) -> Array1<f64> {
        x.to_owned()
    }
}

/// Entrywise division by the operator diagonal. In the detail basis this
/// realizes the level-dependent scaling, since detail-function energies
/// scale with their level.
#[derive(Debug, Clone)]
pub struct DiagonalPreconditioner {
    inv_diag: Array1<f64>,
}

impl DiagonalPreconditioner {
    pub fn new(diag: ArrayView1<f64>) -> Result<Self> {
        if let Some((i, &d)) = diag.iter().enumerate().find(|(_, &d)| d <= 0.0 || !d.is_finite()) {
            return Err(Error::InvalidOperator(format!(
                "nonpositive diagonal entry {d:e} at index {i}"
            )));
        }
        Ok(Self {
            inv_diag: diag.mapv(|d| 1.0 / d),
        })
    }

    /// Probe the diagonal of an arbitrary operator with unit vectors.
    pub fn from_operator(op: &dyn LinearOperator) -> Result<Self> {
        let n = op.dim();
        let mut diag = Array1::zeros(n);
        let mut e = Array1::zeros(n);
        for i in 0..n {
            e[i] = 1.0;
            diag[i] = op.apply(e.view())[i];
            e[i] = 0.0;
        }
        Self::new(diag.view())
    }
}

impl LinearOperator for DiagonalPreconditioner {
    fn dim(&self) -> usize {
        self.inv_diag.len()
    }

    fn apply(&self, x: ArrayView1<f64>) -> Array1<f64> {
        &self.inv_diag * &x
    }
}

/// Outcome of a CG run. `converged = false` means the iteration budget ran
/// out; the best iterate is still returned.
#[derive(Debug, Clone, Copy)]
pub struct CgOutcome {
    pub iterations: usize,
    pub residual: f64,
    pub converged: bool,
}

/// Preconditioned conjugate gradients for SPD operators, stopping at a
/// relative Euclidean residual ≤ tol.
pub fn cg_solve(
    op: &dyn LinearOperator,
    precond: &dyn LinearOperator,
    rhs: ArrayView1<f64>,
    tol: f64,
    max_iterations: usize,
) -> Result<(Array1<f64>, CgOutcome)> {
    cg_solve_observed(op, precond, rhs, tol, max_iterations, |_, _, _| {})
}

/// Same as [`cg_solve`] but reports (iteration, iterate, relative residual)
/// to an observer after every step.
pub fn cg_solve_observed<F>(
    op: &dyn LinearOperator,
    precond: &dyn LinearOperator,
    rhs: ArrayView1<f64>,
    tol: f64,
    max_iterations: usize,
    mut observe: F,
) -> Result<(Array1<f64>, CgOutcome)>
where
    F: FnMut(usize, &Array1<f64>, f64),
{
    let n = op.dim();
    if rhs.len() != n {
        return Err(Error::InvalidRequest(format!(
            "rhs length {} does not match operator dimension {n}",
            rhs.len()
        )));
    }
    if tol <= 0.0 {
        return Err(Error::InvalidRequest("tolerance must be positive".into()));
    }
    let b_norm = rhs.dot(&rhs).sqrt();
    let mut x = Array1::zeros(n);
    if b_norm == 0.0 {
        return Ok((x, CgOutcome { iterations: 0, residual: 0.0, converged: true }));
    }
    let mut r = rhs.to_owned();
    let mut z = precond.apply(r.view());
    let mut p = z.clone();
    let mut rz = r.dot(&z);
    let mut residual = r.dot(&r).sqrt() / b_norm;
    observe(0, &x, residual);
    if residual <= tol {
        return Ok((x, CgOutcome { iterations: 0, residual, converged: true }));
    }
    for iteration in 1..=max_iterations {
        let q = op.apply(p.view());
        let pq = p.dot(&q);
        if !pq.is_finite() || pq <= 0.0 {
            return Err(Error::NumericalBreakdown(format!(
                "curvature p·Ap = {pq:e} at iteration {iteration}"
            )));
        }
        let alpha = rz / pq;
        x.scaled_add(alpha, &p);
        r.scaled_add(-alpha, &q);
        residual = r.dot(&r).sqrt() / b_norm;
        if !residual.is_finite() {
            return Err(Error::NumericalBreakdown(format!(
                "non-finite residual at iteration {iteration}"
            )));
        }
        observe(iteration, &x, residual);
        if residual <= tol {
            return Ok((x, CgOutcome { iterations: iteration, residual, converged: true }));
        }
        z = precond.apply(r.view());
        let rz_next = r.dot(&z);
        let beta = rz_next / rz;
        rz = rz_next;
        p *= beta;
        p += &z;
    }
    Ok((
        x,
        CgOutcome { iterations: max_iterations, residual, converged: false },
    ))
}

/// Galerkin restriction of Σ_k M_x^{(k)} ⊗ M_y^{(k)} to the active blocks of
/// a tensor DOF map. The 1D matrices are given in the detail basis over the
/// full level range, so applying the operator is: scatter to the full detail
/// grid, multiply M_x·X·M_yᵀ per term, gather the active blocks back.
#[derive(Debug, Clone)]
pub struct KroneckerSum {
    terms: Vec<(Array2<f64>, Array2<f64>)>,
    dof_map: TensorDofMap,
}

impl KroneckerSum {
    pub fn new(terms: Vec<(Array2<f64>, Array2<f64>)>, dof_map: TensorDofMap) -> Result<Self> {
        let (nx, ny) = dof_map.full_dims();
        for (mx, my) in &terms {
            if mx.dim() != (nx, nx) || my.dim() != (ny, ny) {
                return Err(Error::InvalidOperator(format!(
                    "factor dimensions {:?}/{:?} do not match detail dimensions ({nx},{ny})",
                    mx.dim(),
                    my.dim()
                )));
            }
        }
        Ok(Self { terms, dof_map })
    }

    pub fn dof_map(&self) -> &TensorDofMap {
        &self.dof_map
    }

    pub fn terms(&self) -> &[(Array2<f64>, Array2<f64>)] {
        &self.terms
    }

    /// Apply on the full detail grid without scatter/gather; used by
    /// operators that add further blocks before restricting.
    pub fn apply_full(&self, x_full: &Array2<f64>) -> Array2<f64> {
        let mut out = Array2::zeros(x_full.dim());
        for (mx, my) in &self.terms {
            out += &mx.dot(x_full).dot(&my.t());
        }
        out
    }

    /// Diagonal of the restricted Galerkin matrix.
    pub fn diagonal(&self) -> Array1<f64> {
        let kinds = self.dof_map.kinds();
        let mut diag = Array1::zeros(self.dof_map.total());
        for block in self.dof_map.blocks() {
            let row0 = kinds.0.detail_offset(block.levels.0);
            let col0 = kinds.1.detail_offset(block.levels.1);
            for i in 0..block.dims.0 {
                for j in 0..block.dims.1 {
                    let mut v = 0.0;
                    for (mx, my) in &self.terms {
                        v += mx[[row0 + i, row0 + i]] * my[[col0 + j, col0 + j]];
                    }
                    diag[block.offset + i * block.dims.1 + j] = v;
                }
            }
        }
        diag
    }
}

impl LinearOperator for KroneckerSum {
    fn dim(&self) -> usize {
        self.dof_map.total()
    }

    fn apply(&self, x: ArrayView1<f64>) -> Array1<f64> {
        let full = self.dof_map.scatter(x);
        self.dof_map.gather(&self.apply_full(&full))
    }
}

/// Largest relative symmetry defect |⟨Ax,y⟩ − ⟨x,Ay⟩| / (‖x‖‖y‖) over
/// seeded random probe pairs.
pub fn symmetry_probe(op: &dyn LinearOperator, trials: usize, seed: u64) -> f64 {
    let n = op.dim();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst: f64 = 0.0;
    for _ in 0..trials {
        let x = Array1::from_iter((0..n).map(|_| rng.random_range(-1.0..1.0)));
        let y = Array1::from_iter((0..n).map(|_| rng.random_range(-1.0..1.0)));
        let ax = op.apply(x.view());
        let ay = op.apply(y.view());
        let defect = (ax.dot(&y) - x.dot(&ay)).abs();
        let scale = x.dot(&x).sqrt() * y.dot(&y).sqrt();
        worst = worst.max(defect / scale);
    }
    worst
}
