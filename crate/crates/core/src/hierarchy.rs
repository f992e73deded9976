//! One-dimensional dyadic meshes, the three hierarchical finite element
//! families (H¹₀ hats, periodic hats modulo constants, piecewise constants),
//! their multilevel detail decompositions, and 1D element integrals.
//!
//! Both the physical domain and the periodicity cell are the unit interval,
//! meshed uniformly with 2^ℓ elements at level ℓ. The detail (increment)
//! spaces use hierarchical surpluses for the hat families and the
//! unnormalized Haar construction for piecewise constants; the latter is
//! genuinely L²-orthogonal across levels.

use ndarray::{Array1, Array2};

use crate::error::{Error, Result};
use crate::quadrature::gauss5_on;

/// Uniform dyadic mesh of (0,1): 2^ℓ elements, nodes i·2^{-ℓ}.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct DyadicMesh {
    level: u32,
}

impl DyadicMesh {
    pub fn new(level: u32) -> Self {
        Self { level }
    }

    pub fn level(&self) -> u32 {
        self.level
    }

    /// Number of elements, 2^ℓ.
    pub fn elements(&self) -> usize {
        1usize << self.level
    }

    /// Meshwidth h_ℓ = 2^{-ℓ}, exact in binary floating point.
    pub fn meshwidth(&self) -> f64 {
        1.0 / self.elements() as f64
    }

    /// Coordinate of node i (0 ≤ i ≤ 2^ℓ).
    pub fn node(&self, i: usize) -> f64 {
        i as f64 * self.meshwidth()
    }

    /// Index of the element containing x, clamped so x = 1 maps to the last
    /// element (one-sided from the right at interior nodes).
    pub fn element_of(&self, x: f64) -> usize {
        let e = (x * self.elements() as f64).floor() as isize;
        e.clamp(0, self.elements() as isize - 1) as usize
    }
}

/// The three FE families. Polynomial degree is fixed at p = 1, so the
/// "degree p−1" family is piecewise constant.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SpaceKind {
    /// Piecewise linear, zero on both endpoints (dim 2^ℓ − 1).
    DirichletHat,
    /// Piecewise linear periodic modulo constants; the quotient is realized
    /// by pinning the value at node 0 to zero (dim 2^ℓ − 1).
    PeriodicHat,
    /// Piecewise constant per element (dim 2^ℓ).
    PiecewiseConstant,
}

impl SpaceKind {
    /// Dimension of the space at the given level.
    pub fn dimension(self, level: u32) -> usize {
        match self {
            SpaceKind::DirichletHat | SpaceKind::PeriodicHat => (1usize << level) - 1,
            SpaceKind::PiecewiseConstant => 1usize << level,
        }
    }

    /// Dimension of the level-ℓ detail space, dim(ℓ) − dim(ℓ−1).
    pub fn detail_dimension(self, level: u32) -> usize {
        if level == 0 {
            self.dimension(0)
        } else {
            self.dimension(level) - self.dimension(level - 1)
        }
    }

    /// Start of the level-ℓ detail block in the concatenated detail
    /// enumeration (blocks ordered by level).
    pub fn detail_offset(self, level: u32) -> usize {
        if level == 0 {
            0
        } else {
            self.dimension(level - 1)
        }
    }

    pub fn is_hat(self) -> bool {
        !matches!(self, SpaceKind::PiecewiseConstant)
    }
}

/// Coefficients of a 1D FE function on a dyadic mesh.
///
/// Hat kinds store values at the interior nodes 1..2^ℓ−1 (the endpoint
/// values are zero by the boundary condition resp. the quotient
/// representative); piecewise constants store one value per element.
#[derive(Debug, Clone)]
pub struct NodalFunction {
    kind: SpaceKind,
    level: u32,
    coeffs: Array1<f64>,
}

impl NodalFunction {
    pub fn new(kind: SpaceKind, level: u32, coeffs: Array1<f64>) -> Result<Self> {
        let expect = kind.dimension(level);
        if coeffs.len() != expect {
            return Err(Error::InvalidRequest(format!(
                "coefficient length {} does not match dim({kind:?}, {level}) = {expect}",
                coeffs.len()
            )));
        }
        Ok(Self { kind, level, coeffs })
    }

    pub fn zeros(kind: SpaceKind, level: u32) -> Self {
        Self {
            kind,
            level,
            coeffs: Array1::zeros(kind.dimension(level)),
        }
    }

    /// Nodal interpolant of `f`. Hat kinds sample at the interior nodes
    /// (PeriodicHat subtracts f(0) to land on the pinned representative);
    /// piecewise constants sample at element midpoints.
    pub fn interpolate<F: Fn(f64) -> f64>(kind: SpaceKind, level: u32, f: F) -> Self {
        let mesh = DyadicMesh::new(level);
        let coeffs = match kind {
            SpaceKind::DirichletHat => {
                Array1::from_iter((1..mesh.elements()).map(|i| f(mesh.node(i))))
            }
            SpaceKind::PeriodicHat => {
                let base = f(0.0);
                Array1::from_iter((1..mesh.elements()).map(|i| f(mesh.node(i)) - base))
            }
            SpaceKind::PiecewiseConstant => Array1::from_iter(
                (0..mesh.elements()).map(|e| f((e as f64 + 0.5) * mesh.meshwidth())),
            ),
        };
        Self { kind, level, coeffs }
    }

    pub fn kind(&self) -> SpaceKind {
        self.kind
    }

    pub fn level(&self) -> u32 {
        self.level
    }

    pub fn coeffs(&self) -> &Array1<f64> {
        &self.coeffs
    }

    pub fn mesh(&self) -> DyadicMesh {
        DyadicMesh::new(self.level)
    }

    /// Node values including the endpoints (hat kinds only).
    fn node_values(&self) -> Vec<f64> {
        debug_assert!(self.kind.is_hat());
        let n = 1usize << self.level;
        let mut v = vec![0.0; n + 1];
        for i in 1..n {
            v[i] = self.coeffs[i - 1];
        }
        v
    }

    /// Point evaluation: piecewise linear for hat kinds, piecewise constant
    /// otherwise. Outside [0,1] the value is extended by the nearest element.
    pub fn value(&self, x: f64) -> f64 {
        let mesh = self.mesh();
        let e = mesh.element_of(x);
        match self.kind {
            SpaceKind::PiecewiseConstant => self.coeffs[e],
            _ => {
                let h = mesh.meshwidth();
                let left = self.node_value(e);
                let right = self.node_value(e + 1);
                let t = (x - mesh.node(e)) / h;
                left + (right - left) * t
            }
        }
    }

    /// Derivative at x: slope of the containing element for hat kinds
    /// (one-sided from the right at nodes), zero for piecewise constants.
    pub fn deriv(&self, x: f64) -> f64 {
        if !self.kind.is_hat() {
            return 0.0;
        }
        let mesh = self.mesh();
        let e = mesh.element_of(x);
        (self.node_value(e + 1) - self.node_value(e)) / mesh.meshwidth()
    }

    fn node_value(&self, i: usize) -> f64 {
        if i == 0 || i == (1usize << self.level) {
            0.0
        } else {
            self.coeffs[i - 1]
        }
    }

    /// Exact embedding into a finer level (nestedness of the hierarchy).
    pub fn prolong(&self, level: u32) -> Result<NodalFunction> {
        if level < self.level {
            return Err(Error::InvalidRequest(format!(
                "cannot prolong from level {} to coarser level {level}",
                self.level
            )));
        }
        let mut current = self.clone();
        while current.level < level {
            current = current.prolong_once();
        }
        Ok(current)
    }

    fn prolong_once(&self) -> NodalFunction {
        let level = self.level + 1;
        match self.kind {
            SpaceKind::PiecewiseConstant => {
                let mut coeffs = Array1::zeros(1usize << level);
                for (e, &c) in self.coeffs.iter().enumerate() {
                    coeffs[2 * e] = c;
                    coeffs[2 * e + 1] = c;
                }
                NodalFunction { kind: self.kind, level, coeffs }
            }
            _ => {
                let v = self.node_values();
                let n = 1usize << level;
                let mut coeffs = Array1::zeros(n - 1);
                for i in 1..n {
                    coeffs[i - 1] = if i % 2 == 0 {
                        v[i / 2]
                    } else {
                        0.5 * (v[i / 2] + v[i / 2 + 1])
                    };
                }
                NodalFunction { kind: self.kind, level, coeffs }
            }
        }
    }
}

/// Per-level detail-coefficient blocks of a multilevel decomposition.
///
/// Block ℓ has length dim(kind, ℓ) − dim(kind, ℓ−1). For hat kinds the
/// entries are hierarchical surpluses at the new level-ℓ nodes (odd
/// multiples of 2^{-ℓ}); for piecewise constants block 0 is the global mean
/// and block ℓ holds Haar amplitudes (+1 on the left child, −1 on the
/// right child of each level-(ℓ−1) element).
#[derive(Debug, Clone)]
pub struct MultilevelDecomposition {
    kind: SpaceKind,
    max_level: u32,
    blocks: Vec<Array1<f64>>,
}

impl MultilevelDecomposition {
    pub fn new(kind: SpaceKind, max_level: u32, blocks: Vec<Array1<f64>>) -> Result<Self> {
        if blocks.len() != max_level as usize + 1 {
            return Err(Error::InvalidRequest(format!(
                "expected {} blocks, got {}",
                max_level + 1,
                blocks.len()
            )));
        }
        for (l, block) in blocks.iter().enumerate() {
            let expect = kind.detail_dimension(l as u32);
            if block.len() != expect {
                return Err(Error::InvalidRequest(format!(
                    "block {l} has length {}, expected {expect}",
                    block.len()
                )));
            }
        }
        Ok(Self { kind, max_level, blocks })
    }

    pub fn kind(&self) -> SpaceKind {
        self.kind
    }

    pub fn max_level(&self) -> u32 {
        self.max_level
    }

    pub fn blocks(&self) -> &[Array1<f64>] {
        &self.blocks
    }

    pub fn block(&self, level: u32) -> &Array1<f64> {
        &self.blocks[level as usize]
    }

    /// Detail coefficients concatenated by level.
    pub fn flatten(&self) -> Array1<f64> {
        let total = self.kind.dimension(self.max_level);
        let mut out = Array1::zeros(total);
        let mut at = 0;
        for block in &self.blocks {
            for &v in block {
                out[at] = v;
                at += 1;
            }
        }
        out
    }
}

/// Multilevel decomposition of `f` into detail blocks up to `max_level`.
pub fn decompose(f: &NodalFunction, max_level: u32) -> Result<MultilevelDecomposition> {
    if f.level() > max_level {
        return Err(Error::InvalidRequest(format!(
            "function level {} exceeds max level {max_level}",
            f.level()
        )));
    }
    let g = f.prolong(max_level)?;
    let kind = g.kind();
    let mut blocks = Vec::with_capacity(max_level as usize + 1);
    match kind {
        SpaceKind::PiecewiseConstant => {
            let mut means: Vec<f64> = g.coeffs().to_vec();
            let mut details: Vec<Array1<f64>> = Vec::new();
            for _l in (1..=max_level).rev() {
                let half = means.len() / 2;
                let mut parents = vec![0.0; half];
                let mut block = Array1::zeros(half);
                for k in 0..half {
                    parents[k] = 0.5 * (means[2 * k] + means[2 * k + 1]);
                    block[k] = 0.5 * (means[2 * k] - means[2 * k + 1]);
                }
                details.push(block);
                means = parents;
            }
            blocks.push(Array1::from_vec(means)); // level-0 mean
            details.reverse();
            blocks.extend(details);
        }
        _ => {
            let v = g.node_values();
            blocks.push(Array1::zeros(0)); // hat spaces are empty at level 0
            for l in 1..=max_level {
                let stride = 1usize << (max_level - l);
                let count = 1usize << (l - 1);
                let mut block = Array1::zeros(count);
                for k in 0..count {
                    let node = (2 * k + 1) * stride;
                    block[k] = v[node] - 0.5 * (v[node - stride] + v[node + stride]);
                }
                blocks.push(block);
            }
        }
    }
    MultilevelDecomposition::new(kind, max_level, blocks)
}

/// Exact left inverse of [`decompose`] (up to floating-point roundoff).
pub fn reconstruct(dec: &MultilevelDecomposition) -> Result<NodalFunction> {
    let kind = dec.kind();
    let max_level = dec.max_level();
    // Block lengths were validated at construction; re-check to honor the
    // contract for hand-built decompositions.
    for (l, block) in dec.blocks().iter().enumerate() {
        if block.len() != kind.detail_dimension(l as u32) {
            return Err(Error::InvalidRequest(format!(
                "block {l} has inconsistent length {}",
                block.len()
            )));
        }
    }
    match kind {
        SpaceKind::PiecewiseConstant => {
            let mut means = dec.block(0).to_vec();
            for l in 1..=max_level {
                let block = dec.block(l);
                let mut next = vec![0.0; 2 * means.len()];
                for (k, &m) in means.iter().enumerate() {
                    next[2 * k] = m + block[k];
                    next[2 * k + 1] = m - block[k];
                }
                means = next;
            }
            NodalFunction::new(kind, max_level, Array1::from_vec(means))
        }
        _ => {
            let n = 1usize << max_level;
            let mut v = vec![0.0; n + 1];
            for l in 1..=max_level {
                let stride = 1usize << (max_level - l);
                let block = dec.block(l);
                for (k, &s) in block.iter().enumerate() {
                    let node = (2 * k + 1) * stride;
                    v[node] = s + 0.5 * (v[node - stride] + v[node + stride]);
                }
            }
            NodalFunction::new(kind, max_level, Array1::from_iter(v[1..n].iter().copied()))
        }
    }
}

/// Local basis contributions on one element: (global index, value of
/// D^deriv b at x). At most two hat functions or one constant are active.
fn local_basis(
    kind: SpaceKind,
    level: u32,
    element: usize,
    x: f64,
    deriv: u8,
    out: &mut Vec<(usize, f64)>,
) {
    out.clear();
    let mesh = DyadicMesh::new(level);
    let h = mesh.meshwidth();
    match kind {
        SpaceKind::PiecewiseConstant => {
            out.push((element, 1.0));
        }
        _ => {
            let n = mesh.elements();
            let x_left = mesh.node(element);
            // left node of the element carries the falling shape, right node
            // the rising one; endpoint nodes are pinned to zero and skipped
            if element > 0 {
                let val = if deriv == 1 { -1.0 / h } else { (x_left + h - x) / h };
                out.push((element - 1, val));
            }
            if element + 1 < n {
                let val = if deriv == 1 { 1.0 / h } else { (x - x_left) / h };
                out.push((element, val));
            }
        }
    }
}

fn check_deriv(kind: SpaceKind, deriv: u8, role: &str) -> Result<()> {
    if deriv > 1 {
        return Err(Error::InvalidRequest(format!(
            "derivative order {deriv} not supported ({role})"
        )));
    }
    if deriv == 1 && !kind.is_hat() {
        return Err(Error::InvalidRequest(format!(
            "derivative of a piecewise-constant basis requested ({role})"
        )));
    }
    Ok(())
}

/// 1D weighted Gram matrix between the nodal bases of two families on the
/// same level: entry (i,j) = ∫₀¹ coeff·D^{d_row} b_i·D^{d_col} b_j dt,
/// assembled element by element with 5-point Gauss quadrature.
pub fn gram_matrix_1d<F: Fn(f64) -> f64>(
    level: u32,
    kind_row: SpaceKind,
    kind_col: SpaceKind,
    coeff: F,
    d_row: u8,
    d_col: u8,
) -> Result<Array2<f64>> {
    check_deriv(kind_row, d_row, "rows")?;
    check_deriv(kind_col, d_col, "columns")?;
    let mesh = DyadicMesh::new(level);
    let mut gram = Array2::zeros((kind_row.dimension(level), kind_col.dimension(level)));
    let mut rows = Vec::with_capacity(2);
    let mut cols = Vec::with_capacity(2);
    for e in 0..mesh.elements() {
        let left = mesh.node(e);
        for (x, w) in gauss5_on(left, left + mesh.meshwidth()) {
            let c = coeff(x) * w;
            local_basis(kind_row, level, e, x, d_row, &mut rows);
            local_basis(kind_col, level, e, x, d_col, &mut cols);
            for &(i, vi) in &rows {
                for &(j, vj) in &cols {
                    gram[[i, j]] += c * vi * vj;
                }
            }
        }
    }
    Ok(gram)
}

/// Weighted integrals of a single basis family: entry i = ∫ coeff·D^d b_i.
pub fn basis_integrals<F: Fn(f64) -> f64>(
    level: u32,
    kind: SpaceKind,
    coeff: F,
    deriv: u8,
) -> Result<Array1<f64>> {
    check_deriv(kind, deriv, "integrand")?;
    let mesh = DyadicMesh::new(level);
    let mut out = Array1::zeros(kind.dimension(level));
    let mut active = Vec::with_capacity(2);
    for e in 0..mesh.elements() {
        let left = mesh.node(e);
        for (x, w) in gauss5_on(left, left + mesh.meshwidth()) {
            let c = coeff(x) * w;
            local_basis(kind, level, e, x, deriv, &mut active);
            for &(i, v) in &active {
                out[i] += c * v;
            }
        }
    }
    Ok(out)
}

/// Synthesis matrix R of the multilevel basis: column p holds the nodal
/// coefficients of the p-th detail function (details enumerated by level,
/// then position). Detail coefficients c map to nodal coefficients R·c, and
/// a nodal Gram matrix G maps to Rᵀ·G·R in the detail basis.
pub fn synthesis_matrix(kind: SpaceKind, max_level: u32) -> Array2<f64> {
    let n = kind.dimension(max_level);
    let mut r = Array2::zeros((n, n));
    let mut blocks: Vec<Array1<f64>> = (0..=max_level)
        .map(|l| Array1::zeros(kind.detail_dimension(l)))
        .collect();
    let mut p = 0;
    for l in 0..=max_level {
        for i in 0..kind.detail_dimension(l) {
            blocks[l as usize][i] = 1.0;
            let dec = MultilevelDecomposition::new(kind, max_level, blocks.clone())
                .expect("block sizes are consistent by construction");
            let nodal = reconstruct(&dec).expect("reconstruct of unit details");
            for (row, &v) in nodal.coeffs().iter().enumerate() {
                r[[row, p]] = v;
            }
            blocks[l as usize][i] = 0.0;
            p += 1;
        }
    }
    r
}

/// Congruence transform of a nodal Gram matrix into the detail basis.
pub fn to_detail_basis(gram: &Array2<f64>, synth_row: &Array2<f64>, synth_col: &Array2<f64>) -> Array2<f64> {
    synth_row.t().dot(gram).dot(synth_col)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use ndarray::array;
    use proptest::prelude::*;

    #[test]
    fn dimensions_match_the_family_table() {
        assert_eq!(SpaceKind::DirichletHat.dimension(3), 7);
        assert_eq!(SpaceKind::PiecewiseConstant.dimension(3), 8);
        assert_eq!(SpaceKind::PeriodicHat.dimension(0), 0);
        assert_eq!(SpaceKind::DirichletHat.dimension(0), 0);
    }

    #[test]
    fn detail_dimensions_sum_to_space_dimension() {
        for kind in [
            SpaceKind::DirichletHat,
            SpaceKind::PeriodicHat,
            SpaceKind::PiecewiseConstant,
        ] {
            for max in 0..=6u32 {
                let sum: usize = (0..=max).map(|l| kind.detail_dimension(l)).sum();
                assert_eq!(sum, kind.dimension(max), "{kind:?} L={max}");
            }
        }
    }

    #[test]
    fn stiffness_at_level_two_is_the_classic_tridiagonal() {
        let g = gram_matrix_1d(2, SpaceKind::DirichletHat, SpaceKind::DirichletHat, |_| 1.0, 1, 1)
            .unwrap();
        for i in 0..3 {
            for j in 0..3 {
                let expect = match (i as isize - j as isize).abs() {
                    0 => 8.0,
                    1 => -4.0,
                    _ => 0.0,
                };
                assert_relative_eq!(g[[i, j]], expect, epsilon = 1e-12);
            }
        }
    }

    #[test]
    fn mass_at_level_two() {
        let g = gram_matrix_1d(2, SpaceKind::DirichletHat, SpaceKind::DirichletHat, |_| 1.0, 0, 0)
            .unwrap();
        assert_relative_eq!(g[[1, 1]], 1.0 / 6.0, epsilon = 1e-13);
        assert_relative_eq!(g[[0, 1]], 1.0 / 24.0, epsilon = 1e-13);
        assert_relative_eq!(g[[0, 2]], 0.0, epsilon = 1e-13);
    }

    #[test]
    fn periodic_stiffness_equals_dirichlet_stiffness() {
        // pinning node 0 removes the wrap-around row/column, so the two
        // families coincide as representative spaces
        let gd = gram_matrix_1d(2, SpaceKind::DirichletHat, SpaceKind::DirichletHat, |_| 1.0, 1, 1)
            .unwrap();
        let gp = gram_matrix_1d(2, SpaceKind::PeriodicHat, SpaceKind::PeriodicHat, |_| 1.0, 1, 1)
            .unwrap();
        assert_eq!(gd.shape(), gp.shape());
        for (a, b) in gd.iter().zip(gp.iter()) {
            assert_relative_eq!(a, b, epsilon = 1e-13);
        }
    }

    #[test]
    fn derivative_of_constants_is_rejected() {
        let err = gram_matrix_1d(
            2,
            SpaceKind::PiecewiseConstant,
            SpaceKind::DirichletHat,
            |_| 1.0,
            1,
            0,
        );
        assert!(matches!(err, Err(Error::InvalidRequest(_))));
    }

    #[test]
    fn haar_decompose_mean_and_half_difference() {
        let f = NodalFunction::new(SpaceKind::PiecewiseConstant, 1, array![1.0, 3.0]).unwrap();
        let dec = decompose(&f, 1).unwrap();
        assert_relative_eq!(dec.block(0)[0], 2.0);
        assert_relative_eq!(dec.block(1)[0], -1.0);
        let back = reconstruct(&dec).unwrap();
        assert_relative_eq!(back.coeffs()[0], 1.0);
        assert_relative_eq!(back.coeffs()[1], 3.0);
    }

    #[test]
    fn coarse_hat_has_vanishing_surpluses() {
        let f = NodalFunction::new(SpaceKind::DirichletHat, 2, array![0.5, 1.0, 0.5]).unwrap();
        let dec = decompose(&f, 2).unwrap();
        assert_eq!(dec.block(0).len(), 0);
        assert_relative_eq!(dec.block(1)[0], 1.0);
        assert_relative_eq!(dec.block(2)[0], 0.0);
        assert_relative_eq!(dec.block(2)[1], 0.0);
    }

    #[test]
    fn surplus_formula_by_hand() {
        let f = NodalFunction::new(SpaceKind::DirichletHat, 2, array![1.0, 0.0, 0.0]).unwrap();
        let dec = decompose(&f, 2).unwrap();
        assert_relative_eq!(dec.block(1)[0], 0.0);
        assert_relative_eq!(dec.block(2)[0], 1.0);
        assert_relative_eq!(dec.block(2)[1], 0.0);
    }

    #[test]
    fn decompose_rejects_level_above_max() {
        let f = NodalFunction::zeros(SpaceKind::DirichletHat, 3);
        assert!(matches!(decompose(&f, 2), Err(Error::InvalidRequest(_))));
    }

    #[test]
    fn reconstruct_rejects_inconsistent_blocks() {
        let blocks = vec![Array1::zeros(0), Array1::zeros(2)];
        assert!(MultilevelDecomposition::new(SpaceKind::DirichletHat, 1, blocks).is_err());
    }

    #[test]
    fn zero_blocks_reconstruct_to_zero() {
        let dec = MultilevelDecomposition::new(
            SpaceKind::PiecewiseConstant,
            3,
            (0..=3)
                .map(|l| Array1::zeros(SpaceKind::PiecewiseConstant.detail_dimension(l)))
                .collect(),
        )
        .unwrap();
        let f = reconstruct(&dec).unwrap();
        assert!(f.coeffs().iter().all(|&c| c == 0.0));
    }

    #[test]
    fn nestedness_on_the_refined_node_set() {
        for kind in [
            SpaceKind::DirichletHat,
            SpaceKind::PeriodicHat,
            SpaceKind::PiecewiseConstant,
        ] {
            for level in 0..4u32 {
                for basis in 0..kind.dimension(level) {
                    let mut coeffs = Array1::zeros(kind.dimension(level));
                    coeffs[basis] = 1.0;
                    let coarse = NodalFunction::new(kind, level, coeffs).unwrap();
                    let fine = coarse.prolong(level + 1).unwrap();
                    let m = DyadicMesh::new(level + 1);
                    for e in 0..m.elements() {
                        // midpoints catch the piecewise-constant case, the
                        // nodes the piecewise-linear one
                        let mid = (e as f64 + 0.5) * m.meshwidth();
                        assert_relative_eq!(coarse.value(mid), fine.value(mid), epsilon = 1e-14);
                        let node = m.node(e);
                        assert_relative_eq!(coarse.value(node), fine.value(node), epsilon = 1e-14);
                    }
                }
            }
        }
    }

    #[test]
    fn haar_details_are_l2_orthogonal_across_levels() {
        let level = 5;
        let kind = SpaceKind::PiecewiseConstant;
        let mass = gram_matrix_1d(level, kind, kind, |_| 1.0, 0, 0).unwrap();
        let r = synthesis_matrix(kind, level);
        let detail_mass = to_detail_basis(&mass, &r, &r);
        for l in 0..=level {
            for m in 0..=level {
                if l == m {
                    continue;
                }
                let (ro, rd) = (kind.detail_offset(l), kind.detail_dimension(l));
                let (co, cd) = (kind.detail_offset(m), kind.detail_dimension(m));
                for i in ro..ro + rd {
                    for j in co..co + cd {
                        assert!(detail_mass[[i, j]].abs() <= 1e-12);
                    }
                }
            }
        }
    }

    #[test]
    fn weighted_stiffness_is_positive_definite() {
        use crate::dense::cholesky;
        let coeff = |x: f64| 1.0 / (2.0 + (2.0 * std::f64::consts::PI * x).sin());
        for kind in [SpaceKind::DirichletHat, SpaceKind::PeriodicHat] {
            let g = gram_matrix_1d(4, kind, kind, coeff, 1, 1).unwrap();
            assert!(cholesky(&g).is_ok(), "{kind:?} stiffness not SPD");
        }
    }

    #[test]
    fn synthesis_columns_are_detail_functions() {
        // spot-check: level-1 Haar column is +1/−1 over the two halves
        let r = synthesis_matrix(SpaceKind::PiecewiseConstant, 2);
        // ordering: mean, level-1 Haar, two level-2 Haars
        assert_eq!(r.column(0).to_vec(), vec![1.0, 1.0, 1.0, 1.0]);
        assert_eq!(r.column(1).to_vec(), vec![1.0, 1.0, -1.0, -1.0]);
    }

    proptest! {
        #[test]
        fn roundtrip_is_exact(values in proptest::collection::vec(-1.0f64..1.0, 31)) {
            let f = NodalFunction::new(
                SpaceKind::DirichletHat,
                5,
                Array1::from_vec(values),
            ).unwrap();
            let back = reconstruct(&decompose(&f, 5).unwrap()).unwrap();
            for (a, b) in f.coeffs().iter().zip(back.coeffs().iter()) {
                prop_assert!((a - b).abs() <= 1e-12 * (1.0 + a.abs()));
            }
        }

        #[test]
        fn haar_roundtrip_through_finer_level(values in proptest::collection::vec(-2.0f64..2.0, 8)) {
            let f = NodalFunction::new(
                SpaceKind::PiecewiseConstant,
                3,
                Array1::from_vec(values),
            ).unwrap();
            let back = reconstruct(&decompose(&f, 5).unwrap()).unwrap();
            let fine = f.prolong(5).unwrap();
            for (a, b) in fine.coeffs().iter().zip(back.coeffs().iter()) {
                prop_assert!((a - b).abs() <= 1e-12 * (1.0 + a.abs()));
            }
        }
    }
}
