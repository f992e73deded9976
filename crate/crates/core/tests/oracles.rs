//! Cross-module oracle checks: the matrix-free Kronecker application against
//! a Galerkin matrix assembled from direct inter-level detail integrals, and
//! engineering properties of the preconditioned solver.

use ndarray::{Array1, Array2};
use std::f64::consts::PI;

use stfem::hierarchy::{reconstruct, MultilevelDecomposition, NodalFunction, SpaceKind};
use stfem::krylov::{cg_solve, DiagonalPreconditioner, IdentityOperator, LinearOperator};
use stfem::quadrature::dyadic_points;
use stfem::tensor_index::{build_dof_map, build_level_pairs, TensorMode};
use stfem::twoscale::{assemble_two_scale, CoefficientTerm, SeparableCoefficient};

/// Detail basis function (level, index) materialized as a mesh function.
fn detail_function(kind: SpaceKind, max_level: u32, level: u32, index: usize) -> NodalFunction {
    let blocks: Vec<Array1<f64>> = (0..=max_level)
        .map(|l| {
            let mut b = Array1::zeros(kind.detail_dimension(l));
            if l == level {
                b[index] = 1.0;
            }
            b
        })
        .collect();
    reconstruct(&MultilevelDecomposition::new(kind, max_level, blocks).unwrap()).unwrap()
}

/// 1D Gram matrix in the detail basis by direct pointwise integration of
/// detail-function products (no congruence transform).
fn detail_gram_direct(
    kind: SpaceKind,
    level: u32,
    coeff: impl Fn(f64) -> f64,
    deriv: bool,
) -> Array2<f64> {
    let n = kind.dimension(level);
    let functions: Vec<NodalFunction> = (0..=level)
        .flat_map(|l| {
            (0..kind.detail_dimension(l)).map(move |i| (l, i))
        })
        .map(|(l, i)| detail_function(kind, level, l, i))
        .collect();
    let points = dyadic_points(level);
    let mut gram = Array2::zeros((n, n));
    for p in 0..n {
        for q in 0..n {
            let mut sum = 0.0;
            for &(x, w) in &points {
                let (a, b) = if deriv {
                    (functions[p].deriv(x), functions[q].deriv(x))
                } else {
                    (functions[p].value(x), functions[q].value(x))
                };
                sum += w * coeff(x) * a * b;
            }
            gram[[p, q]] = sum;
        }
    }
    gram
}

#[test]
fn kronecker_apply_matches_direct_interlevel_assembly() {
    let level = 3;
    let kinds = (SpaceKind::PiecewiseConstant, SpaceKind::PeriodicHat);
    let map = build_dof_map(kinds, &build_level_pairs(level, TensorMode::Sparse));
    let a = |x: f64| 1.0 + x;
    let b = |y: f64| 2.0 + (2.0 * PI * y).cos();

    // implementation path: nodal assembly + congruence transform
    let mass = stfem::gram_matrix_1d(level, kinds.0, kinds.0, a, 0, 0).unwrap();
    let stiff = stfem::gram_matrix_1d(level, kinds.1, kinds.1, b, 1, 1).unwrap();
    let rc = stfem::hierarchy::synthesis_matrix(kinds.0, level);
    let rp = stfem::hierarchy::synthesis_matrix(kinds.1, level);
    let ks = stfem::KroneckerSum::new(
        vec![(
            stfem::hierarchy::to_detail_basis(&mass, &rc, &rc),
            stfem::hierarchy::to_detail_basis(&stiff, &rp, &rp),
        )],
        map.clone(),
    )
    .unwrap();

    // oracle: integrate detail-function products directly, then build the
    // dense Galerkin matrix over the active pairs
    let mx = detail_gram_direct(kinds.0, level, a, false);
    let my = detail_gram_direct(kinds.1, level, b, true);
    let n = map.total();
    let mut dense = Array2::zeros((n, n));
    for row_block in map.blocks() {
        let rx0 = kinds.0.detail_offset(row_block.levels.0);
        let ry0 = kinds.1.detail_offset(row_block.levels.1);
        for col_block in map.blocks() {
            let cx0 = kinds.0.detail_offset(col_block.levels.0);
            let cy0 = kinds.1.detail_offset(col_block.levels.1);
            for i in 0..row_block.dims.0 {
                for j in 0..row_block.dims.1 {
                    let r = row_block.offset + i * row_block.dims.1 + j;
                    for p in 0..col_block.dims.0 {
                        for q in 0..col_block.dims.1 {
                            let c = col_block.offset + p * col_block.dims.1 + q;
                            dense[[r, c]] = mx[[rx0 + i, cx0 + p]] * my[[ry0 + j, cy0 + q]];
                        }
                    }
                }
            }
        }
    }

    let x = Array1::from_iter((0..n).map(|i| ((3 * i + 1) as f64 * 0.37).sin()));
    let got = ks.apply(x.view());
    let expect = dense.dot(&x);
    for (g, e) in got.iter().zip(expect.iter()) {
        assert!((g - e).abs() <= 1e-11 * (1.0 + e.abs()), "got {g}, expected {e}");
    }
}

fn sin_cell() -> SeparableCoefficient {
    SeparableCoefficient::new(
        vec![CoefficientTerm::new(
            |_| 1.0,
            |y| 1.0 / (2.0 + (2.0 * PI * y).sin()),
        )],
        1.0 / 3.0,
    )
    .unwrap()
}

#[test]
fn preconditioned_iteration_counts_grow_slowly() {
    let mut base = None;
    for level in 4..=8u32 {
        let sys = assemble_two_scale(&sin_cell(), &|_| 1.0, level, TensorMode::Sparse).unwrap();
        let sol = stfem::solve_two_scale(&sys, 1e-10).unwrap();
        assert!(sol.converged, "L={level} did not converge");
        let iters = sol.iterations;
        match base {
            None => base = Some(iters),
            Some(b) => {
                let budget = b + 10 * (level as usize - 4);
                assert!(
                    iters <= budget,
                    "L={level}: {iters} iterations exceed budget {budget}"
                );
            }
        }
    }
}

#[test]
fn diagonal_preconditioning_beats_plain_cg() {
    let sys = assemble_two_scale(&sin_cell(), &|_| 1.0, 6, TensorMode::Sparse).unwrap();
    let op = sys.operator();
    let diag = DiagonalPreconditioner::new(op.diagonal().view()).unwrap();
    let n = op.dim();
    let (_, with) = cg_solve(&op, &diag, sys.rhs().view(), 1e-10, 20 * n).unwrap();
    let (_, without) =
        cg_solve(&op, &IdentityOperator::new(n), sys.rhs().view(), 1e-10, 20 * n).unwrap();
    assert!(with.converged);
    assert!(
        with.iterations < without.iterations,
        "preconditioned {} vs plain {}",
        with.iterations,
        without.iterations
    );
}

#[test]
fn galerkin_residual_functionals_vanish() {
    use rand::Rng;
    use rand::SeedableRng;
    let tol = 1e-10;
    let sys = assemble_two_scale(&sin_cell(), &|_| 1.0, 5, TensorMode::Sparse).unwrap();
    let op = sys.operator();
    let diag = DiagonalPreconditioner::new(op.diagonal().view()).unwrap();
    let (solution, outcome) = cg_solve(&op, &diag, sys.rhs().view(), tol, 10 * op.dim()).unwrap();
    assert!(outcome.converged);
    let residual = sys.rhs() - &op.apply(solution.view());
    let rhs_norm = sys.rhs().dot(sys.rhs()).sqrt();
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(17);
    for _ in 0..20 {
        let mut w = Array1::from_iter((0..op.dim()).map(|_| rng.random_range(-1.0f64..1.0)));
        let norm = w.dot(&w).sqrt();
        w /= norm;
        assert!(
            w.dot(&residual).abs() <= 10.0 * tol * rhs_norm,
            "residual functional too large"
        );
    }
}
