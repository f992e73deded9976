//! Assembly and solution of the discrete unfolded two-scale problem on
//! V_D^{L,1} × Ŝ^L (or the full tensor space), the unfolding operator, and
//! fine-scale gradient reconstruction.
//!
//! The coefficient must be supplied in separable form Σ_k a_k(x)·b_k(y),
//! which turns every Galerkin block into products of 1D integrals: the
//! macro block is a weighted hat stiffness, the coupling pairs macro
//! gradients with cell-gradient means, and the corrector block is a
//! Kronecker sum of (weighted constant mass) ⊗ (weighted periodic
//! stiffness). All blocks are stored in the multilevel detail bases so that
//! the sparse restriction is an index selection and diagonal scaling
//! preconditions the coupled system.

use ndarray::{Array1, Array2, ArrayView1};

use crate::error::{Error, Result};
use crate::hierarchy::{
    basis_integrals, gram_matrix_1d, synthesis_matrix, to_detail_basis, DyadicMesh, NodalFunction,
    SpaceKind,
};
use crate::krylov::{cg_solve, DiagonalPreconditioner, KroneckerSum, LinearOperator};
use crate::quadrature::dyadic_points;
use crate::reference::Function2d;
use crate::tensor_index::{build_dof_map, build_level_pairs, TensorDofMap, TensorMode};

/// Pointwise scalar function of one variable, shareable across threads.
pub type ScalarFn = Box<dyn Fn(f64) -> f64 + Send + Sync>;

/// One separable term a_k(x)·b_k(y).
pub struct CoefficientTerm {
    pub macro_factor: ScalarFn,
    pub cell_factor: ScalarFn,
}

impl CoefficientTerm {
    pub fn new(
        macro_factor: impl Fn(f64) -> f64 + Send + Sync + 'static,
        cell_factor: impl Fn(f64) -> f64 + Send + Sync + 'static,
    ) -> Self {
        Self {
            macro_factor: Box::new(macro_factor),
            cell_factor: Box::new(cell_factor),
        }
    }
}

/// Separable two-scale coefficient Ã(x,y) = Σ_k a_k(x)·b_k(y) with
/// ellipticity constants [α, α⁻¹].
pub struct SeparableCoefficient {
    terms: Vec<CoefficientTerm>,
    alpha: f64,
}

impl SeparableCoefficient {
    /// Build a coefficient; every cell factor must be 1-periodic
    /// (b_k(0) = b_k(1) to 1e-12).
    pub fn new(terms: Vec<CoefficientTerm>, alpha: f64) -> Result<Self> {
        if !(alpha > 0.0 && alpha <= 1.0) {
            return Err(Error::InvalidCoefficient(format!(
                "ellipticity constant alpha = {alpha} must lie in (0, 1]"
            )));
        }
        if terms.is_empty() {
            return Err(Error::InvalidCoefficient("coefficient needs at least one term".into()));
        }
        for (k, term) in terms.iter().enumerate() {
            let gap = ((term.cell_factor)(0.0) - (term.cell_factor)(1.0)).abs();
            if gap > 1e-12 {
                return Err(Error::InvalidCoefficient(format!(
                    "cell factor {k} is not 1-periodic: |b(0) - b(1)| = {gap:e}"
                )));
            }
        }
        Ok(Self { terms, alpha })
    }

    /// Constant coefficient Ã ≡ c.
    pub fn constant(c: f64) -> Result<Self> {
        if c <= 0.0 {
            return Err(Error::InvalidCoefficient(format!("constant coefficient {c} not elliptic")));
        }
        let alpha = if c >= 1.0 { 1.0 / c } else { c };
        Self::new(vec![CoefficientTerm::new(move |_| c, |_| 1.0)], alpha)
    }

    pub fn value(&self, x: f64, y: f64) -> f64 {
        self.terms
            .iter()
            .map(|t| (t.macro_factor)(x) * (t.cell_factor)(y))
            .sum()
    }

    pub fn terms(&self) -> &[CoefficientTerm] {
        &self.terms
    }

    pub fn ellipticity_lower(&self) -> f64 {
        self.alpha
    }

    pub fn ellipticity_upper(&self) -> f64 {
        1.0 / self.alpha
    }

    /// Check α ≤ Ã(x,y) ≤ α⁻¹ on a tensor grid of quadrature points.
    fn check_ellipticity(&self, level: u32) -> Result<()> {
        let xs = dyadic_points(level);
        let ys = dyadic_points(level);
        let lo = self.alpha - 1e-12;
        let hi = 1.0 / self.alpha + 1e-12;
        // evaluate factors once per axis, then scan the tensor grid
        let ax: Vec<Vec<f64>> = self
            .terms
            .iter()
            .map(|t| xs.iter().map(|&(x, _)| (t.macro_factor)(x)).collect())
            .collect();
        let by: Vec<Vec<f64>> = self
            .terms
            .iter()
            .map(|t| ys.iter().map(|&(y, _)| (t.cell_factor)(y)).collect())
            .collect();
        for ix in 0..xs.len() {
            for iy in 0..ys.len() {
                let v: f64 = (0..self.terms.len()).map(|k| ax[k][ix] * by[k][iy]).sum();
                if !(v >= lo && v <= hi) {
                    return Err(Error::InvalidCoefficient(format!(
                        "coefficient value {v:.6e} at ({:.6}, {:.6}) leaves [{lo:.3e}, {hi:.3e}]",
                        xs[ix].0, ys[iy].0
                    )));
                }
            }
        }
        Ok(())
    }
}

/// Oscillatory problem −(A(x, {x/ε}) u′)′ = f with ε an inverse power of
/// two, so every ε-cell lies inside the domain and the unfolding operator
/// never hits its zero branch.
pub struct EpsilonProblem {
    epsilon: f64,
    coefficient: SeparableCoefficient,
    source: ScalarFn,
}

/// Checks that 1/ε is a power of two; returns log2(1/ε).
pub fn epsilon_exponent(epsilon: f64) -> Result<u32> {
    if !(epsilon > 0.0 && epsilon <= 1.0) {
        return Err(Error::InvalidRequest(format!("epsilon = {epsilon} outside (0, 1]")));
    }
    let inv = 1.0 / epsilon;
    let m = inv.round() as u64;
    if (inv - m as f64).abs() > 1e-12 || !m.is_power_of_two() {
        return Err(Error::InvalidRequest(format!(
            "1/epsilon = {inv} must be a power of two"
        )));
    }
    Ok(m.trailing_zeros())
}

impl EpsilonProblem {
    pub fn new(
        epsilon: f64,
        coefficient: SeparableCoefficient,
        source: impl Fn(f64) -> f64 + Send + Sync + 'static,
    ) -> Result<Self> {
        epsilon_exponent(epsilon)?;
        Ok(Self {
            epsilon,
            coefficient,
            source: Box::new(source),
        })
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    pub fn coefficient(&self) -> &SeparableCoefficient {
        &self.coefficient
    }

    pub fn source(&self) -> &ScalarFn {
        &self.source
    }

    /// The oscillatory coefficient x ↦ Ã(x, {x/ε}).
    pub fn oscillatory_coefficient(&self, x: f64) -> f64 {
        let scaled = x / self.epsilon;
        self.coefficient.value(x, scaled - scaled.floor())
    }
}

/// Assembled blocks of the coupled system, all in detail bases.
pub struct TwoScaleSystem {
    level: u32,
    mode: TensorMode,
    dof_map: TensorDofMap,
    /// Macro stiffness Σ_k (∫b_k)·∫a_k v′u′, hierarchical basis.
    uu: Array2<f64>,
    /// Coupling factors per term: (∫a_k v′χ_c transformed, ∫b_k η′ transformed).
    coupling: Vec<(Array2<f64>, Array1<f64>)>,
    /// Corrector block Σ_k M[a_k] ⊗ K[b_k].
    phi_block: KroneckerSum,
    rhs: Array1<f64>,
    synth_u: Array2<f64>,
    synth_cells: Array2<f64>,
    synth_periodic: Array2<f64>,
}

/// Assemble the Galerkin system of the unfolded problem at level L.
pub fn assemble_two_scale(
    coeff: &SeparableCoefficient,
    source: &dyn Fn(f64) -> f64,
    level: u32,
    mode: TensorMode,
) -> Result<TwoScaleSystem> {
    if level < 1 {
        return Err(Error::InvalidRequest("two-scale assembly needs level >= 1".into()));
    }
    coeff.check_ellipticity(level)?;

    let dof_map = build_dof_map(
        (SpaceKind::PiecewiseConstant, SpaceKind::PeriodicHat),
        &build_level_pairs(level, mode),
    );
    let synth_u = synthesis_matrix(SpaceKind::DirichletHat, level);
    let synth_cells = synthesis_matrix(SpaceKind::PiecewiseConstant, level);
    let synth_periodic = synthesis_matrix(SpaceKind::PeriodicHat, level);

    let n_u = SpaceKind::DirichletHat.dimension(level);
    let mut uu_nodal = Array2::zeros((n_u, n_u));
    let mut coupling = Vec::with_capacity(coeff.terms().len());
    let mut kron_terms = Vec::with_capacity(coeff.terms().len());
    for term in coeff.terms() {
        let a = |x: f64| (term.macro_factor)(x);
        let b = |y: f64| (term.cell_factor)(y);
        let cell_mean = crate::quadrature::integrate(b, 0.0, 1.0, 64);
        let stiff_a = gram_matrix_1d(level, SpaceKind::DirichletHat, SpaceKind::DirichletHat, a, 1, 1)?;
        uu_nodal.scaled_add(cell_mean, &stiff_a);

        let couple_x =
            gram_matrix_1d(level, SpaceKind::DirichletHat, SpaceKind::PiecewiseConstant, a, 1, 0)?;
        let grad_mean_y = basis_integrals(level, SpaceKind::PeriodicHat, b, 1)?;
        coupling.push((
            synth_u.t().dot(&couple_x).dot(&synth_cells),
            synth_periodic.t().dot(&grad_mean_y),
        ));

        let mass_a =
            gram_matrix_1d(level, SpaceKind::PiecewiseConstant, SpaceKind::PiecewiseConstant, a, 0, 0)?;
        let stiff_b = gram_matrix_1d(level, SpaceKind::PeriodicHat, SpaceKind::PeriodicHat, b, 1, 1)?;
        kron_terms.push((
            to_detail_basis(&mass_a, &synth_cells, &synth_cells),
            to_detail_basis(&stiff_b, &synth_periodic, &synth_periodic),
        ));
    }
    let uu = to_detail_basis(&uu_nodal, &synth_u, &synth_u);
    let phi_block = KroneckerSum::new(kron_terms, dof_map.clone())?;

    let load_nodal = basis_integrals(level, SpaceKind::DirichletHat, source, 0)?;
    let load_u = synth_u.t().dot(&load_nodal);
    let mut rhs = Array1::zeros(n_u + dof_map.total());
    rhs.slice_mut(ndarray::s![..n_u]).assign(&load_u);
    // corrector rows of the load vanish: the source does not depend on y

    Ok(TwoScaleSystem {
        level,
        mode,
        dof_map,
        uu,
        coupling,
        phi_block,
        rhs,
        synth_u,
        synth_cells,
        synth_periodic,
    })
}

impl TwoScaleSystem {
    pub fn level(&self) -> u32 {
        self.level
    }

    pub fn mode(&self) -> TensorMode {
        self.mode
    }

    pub fn dof_map(&self) -> &TensorDofMap {
        &self.dof_map
    }

    pub fn macro_dofs(&self) -> usize {
        self.uu.nrows()
    }

    pub fn total_dofs(&self) -> usize {
        self.macro_dofs() + self.dof_map.total()
    }

    pub fn rhs(&self) -> &Array1<f64> {
        &self.rhs
    }

    pub fn operator(&self) -> TwoScaleOperator<'_> {
        TwoScaleOperator { sys: self }
    }

    /// Largest |entry| of the assembled coupling block between the macro
    /// space and the active corrector details.
    pub fn coupling_max_abs(&self) -> f64 {
        let n_u = self.macro_dofs();
        let mut worst: f64 = 0.0;
        for block in self.dof_map.blocks() {
            let row0 = SpaceKind::PiecewiseConstant.detail_offset(block.levels.0);
            let col0 = SpaceKind::PeriodicHat.detail_offset(block.levels.1);
            for i in 0..n_u {
                for bx in 0..block.dims.0 {
                    for by in 0..block.dims.1 {
                        let mut v = 0.0;
                        for (cx, dy) in &self.coupling {
                            v += cx[[i, row0 + bx]] * dy[col0 + by];
                        }
                        worst = worst.max(v.abs());
                    }
                }
            }
        }
        worst
    }
}

/// Matrix-free application of the coupled block operator
/// [[B_uu, B_uφ], [B_uφᵀ, B_φφ]] on concatenated (u, φ) coefficients.
pub struct TwoScaleOperator<'a> {
    sys: &'a TwoScaleSystem,
}

impl TwoScaleOperator<'_> {
    pub fn diagonal(&self) -> Array1<f64> {
        let n_u = self.sys.macro_dofs();
        let mut diag = Array1::zeros(n_u + self.sys.dof_map.total());
        for i in 0..n_u {
            diag[i] = self.sys.uu[[i, i]];
        }
        diag.slice_mut(ndarray::s![n_u..])
            .assign(&self.sys.phi_block.diagonal());
        diag
    }
}

impl LinearOperator for TwoScaleOperator<'_> {
    fn dim(&self) -> usize {
        self.sys.total_dofs()
    }

    fn apply(&self, x: ArrayView1<f64>) -> Array1<f64> {
        let sys = self.sys;
        let n_u = sys.macro_dofs();
        let xu = x.slice(ndarray::s![..n_u]);
        let xphi = x.slice(ndarray::s![n_u..]);

        let mut out_u = sys.uu.dot(&xu);
        let phi_full = sys.dof_map.scatter(xphi);
        let mut phi_out = sys.phi_block.apply_full(&phi_full);
        for (couple_x, grad_mean_y) in &sys.coupling {
            // u-residual: C_k · (Φ · d_k)
            let w = phi_full.dot(grad_mean_y);
            out_u += &couple_x.dot(&w);
            // φ-residual: rank-one update (C_kᵀ u) ⊗ d_k
            let s = couple_x.t().dot(&xu);
            for (i, &si) in s.iter().enumerate() {
                if si == 0.0 {
                    continue;
                }
                for (j, &dj) in grad_mean_y.iter().enumerate() {
                    phi_out[[i, j]] += si * dj;
                }
            }
        }

        let mut out = Array1::zeros(self.dim());
        out.slice_mut(ndarray::s![..n_u]).assign(&out_u);
        out.slice_mut(ndarray::s![n_u..])
            .assign(&sys.dof_map.gather(&phi_out));
        out
    }
}

/// Discrete solution (u, φ) of the unfolded problem.
pub struct TwoScaleSolution {
    level: u32,
    mode: TensorMode,
    u: NodalFunction,
    phi_detail: Array1<f64>,
    dof_map: TensorDofMap,
    /// Nodal corrector values: row = x-element, column = interior y-node.
    phi_cells: Array2<f64>,
    pub iterations: usize,
    pub residual: f64,
    pub converged: bool,
}

/// Solve an assembled system with diagonally preconditioned CG.
pub fn solve_two_scale(sys: &TwoScaleSystem, tol: f64) -> Result<TwoScaleSolution> {
    let op = sys.operator();
    let precond = DiagonalPreconditioner::new(op.diagonal().view())?;
    let n = op.dim();
    let (z, outcome) = cg_solve(&op, &precond, sys.rhs().view(), tol, 10 * n)?;

    let n_u = sys.macro_dofs();
    let u_nodal = sys.synth_u.dot(&z.slice(ndarray::s![..n_u]));
    let u = NodalFunction::new(SpaceKind::DirichletHat, sys.level, u_nodal)?;
    let phi_detail = z.slice(ndarray::s![n_u..]).to_owned();
    let full = sys.dof_map.scatter(phi_detail.view());
    let phi_cells = sys.synth_cells.dot(&full).dot(&sys.synth_periodic.t());

    Ok(TwoScaleSolution {
        level: sys.level,
        mode: sys.mode,
        u,
        phi_detail,
        dof_map: sys.dof_map.clone(),
        phi_cells,
        iterations: outcome.iterations,
        residual: outcome.residual,
        converged: outcome.converged,
    })
}

impl TwoScaleSolution {
    pub fn level(&self) -> u32 {
        self.level
    }

    pub fn mode(&self) -> TensorMode {
        self.mode
    }

    pub fn u(&self) -> &NodalFunction {
        &self.u
    }

    pub fn phi_detail(&self) -> &Array1<f64> {
        &self.phi_detail
    }

    pub fn dof_map(&self) -> &TensorDofMap {
        &self.dof_map
    }

    /// Corrector value φ(x, y): piecewise constant in x over the level-L
    /// elements, piecewise linear and pinned to zero at y = 0 in y.
    pub fn phi_value(&self, x: f64, y: f64) -> f64 {
        let mesh = DyadicMesh::new(self.level);
        let cell = mesh.element_of(x);
        let ey = mesh.element_of(y);
        let h = mesh.meshwidth();
        let left = self.phi_node(cell, ey);
        let right = self.phi_node(cell, ey + 1);
        let t = (y - mesh.node(ey)) / h;
        left + (right - left) * t
    }

    /// Cell-gradient ∂_yφ(x, y), one-sided from the right at y-nodes.
    pub fn phi_dy(&self, x: f64, y: f64) -> f64 {
        let mesh = DyadicMesh::new(self.level);
        let cell = mesh.element_of(x);
        let ey = mesh.element_of(y);
        (self.phi_node(cell, ey + 1) - self.phi_node(cell, ey)) / mesh.meshwidth()
    }

    fn phi_node(&self, cell: usize, node: usize) -> f64 {
        let n = 1usize << self.level;
        if node == 0 || node == n {
            0.0
        } else {
            self.phi_cells[[cell, node - 1]]
        }
    }

    /// View of the corrector as a function on D × Y for error measurement.
    pub fn phi(&self) -> CorrectorView<'_> {
        CorrectorView { sol: self }
    }
}

/// The corrector component exposed through the 2D evaluation trait. The
/// x-derivative of a piecewise-constant-in-x function is zero inside cells.
pub struct CorrectorView<'a> {
    sol: &'a TwoScaleSolution,
}

impl Function2d for CorrectorView<'_> {
    fn value(&self, x: f64, y: f64) -> f64 {
        self.sol.phi_value(x, y)
    }

    fn dx(&self, _x: f64, _y: f64) -> f64 {
        0.0
    }

    fn dy(&self, x: f64, y: f64) -> f64 {
        self.sol.phi_dy(x, y)
    }

    fn dxy(&self, _x: f64, _y: f64) -> f64 {
        0.0
    }
}

/// The unfolding of a mesh function: value(x, y) = g(ε⌊x/ε⌋ + εy).
pub struct Unfolded<'a> {
    g: &'a NodalFunction,
    epsilon: f64,
}

/// Unfold a fine-mesh function into a function on D × Y. The mesh of `g`
/// must resolve ε (level ≥ log2(1/ε)); because 1/ε is a power of two every
/// ε-cell lies in the domain and the zero branch of the definition is inert.
pub fn unfold(g: &NodalFunction, epsilon: f64) -> Result<Unfolded<'_>> {
    let m = epsilon_exponent(epsilon)?;
    if g.level() < m {
        return Err(Error::InvalidRequest(format!(
            "mesh level {} does not resolve epsilon = {epsilon}",
            g.level()
        )));
    }
    Ok(Unfolded { g, epsilon })
}

impl Unfolded<'_> {
    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    pub fn value(&self, x: f64, y: f64) -> f64 {
        let cells = 1.0 / self.epsilon;
        let cell = (x * cells).floor().clamp(0.0, cells - 1.0);
        self.g.value(self.epsilon * (cell + y))
    }

    /// Sample on the tensor grid given by per-axis coordinates.
    pub fn sample(&self, xs: &[f64], ys: &[f64]) -> Array2<f64> {
        let mut out = Array2::zeros((xs.len(), ys.len()));
        for (i, &x) in xs.iter().enumerate() {
            for (j, &y) in ys.iter().enumerate() {
                out[[i, j]] = self.value(x, y);
            }
        }
        out
    }
}

/// Fine-scale gradient reconstruction u′(x) + ∂_yφ(x, {x/ε}) at the given
/// points.
pub fn reconstruct_fine_gradient(
    sol: &TwoScaleSolution,
    epsilon: f64,
    points: &[f64],
) -> Result<Vec<f64>> {
    epsilon_exponent(epsilon)?;
    Ok(points
        .iter()
        .map(|&x| {
            let scaled = x / epsilon;
            sol.u().deriv(x) + sol.phi_dy(x, scaled - scaled.floor())
        })
        .collect())
}
