//! Sparse tensor-product finite elements in one dimension: the unfolded
//! two-scale elliptic problem on D × Y and deterministic moment equations
//! for elliptic problems with random sources.
//!
//! The crate is organized along the problem pipeline:
//!
//! - [`hierarchy`]: dyadic meshes, the three FE families, multilevel
//!   (detail) decompositions, 1D element integrals.
//! - [`tensor_index`]: full and sparse tensor level-pair sets and flattened
//!   DOF maps for tensor-product detail bases.
//! - [`krylov`]: preconditioned conjugate gradients and matrix-free
//!   Kronecker-sum operators restricted to a DOF map.
//! - [`twoscale`]: assembly and solution of the coupled unfolded problem,
//!   the unfolding operator, fine-scale gradient reconstruction.
//! - [`reference`]: resolved single-scale solvers, the exact 1D
//!   homogenization oracles, and error norms.
//! - [`stochastic`]: mean field, two-point correlation and variance of the
//!   random solution, plus a seeded Monte-Carlo oracle.
//! - [`dense`]: small dense helpers backing the test oracles and the
//!   tridiagonal direct solves.

pub mod dense;
pub mod error;
pub mod hierarchy;
pub mod krylov;
pub mod quadrature;
pub mod reference;
pub mod stochastic;
pub mod tensor_index;
pub mod twoscale;

pub use error::{Error, Result};
pub use hierarchy::{
    decompose, gram_matrix_1d, reconstruct, DyadicMesh, MultilevelDecomposition, NodalFunction,
    SpaceKind,
};
pub use krylov::{
    cg_solve, CgOutcome, DiagonalPreconditioner, IdentityOperator, KroneckerSum, LinearOperator,
};
pub use reference::{ErrorReport, Function1d, Function2d};
pub use stochastic::{CorrelationSolution, McEstimate, RandomSourceModel};
pub use tensor_index::{
    build_dof_map, build_level_pairs, verify_dof_bound, LevelPairSet, TensorDofMap, TensorMode,
};
pub use twoscale::{
    assemble_two_scale, reconstruct_fine_gradient, solve_two_scale, unfold, CoefficientTerm,
    EpsilonProblem, SeparableCoefficient, TwoScaleSolution, TwoScaleSystem,
};
