//! Lagrange elements, function spaces and Stokes assembly.

pub mod assembly;
pub mod element;
pub mod problem;
pub mod quadrature;
pub mod space;

pub use assembly::{
    assemble_level_operator, assemble_mass, assemble_stokes, assemble_stokes_matrix, assemble_vector_laplacian, compute_errors,
    dirichlet_mask, divergence_l2_norm, divergence_max, eliminate_homogeneous, velocity_dirichlet_mask, CellGeometry,
    SaddleSystem,
};
pub use element::{NodeEntity, ReferenceElement};
pub use problem::{BoundaryCondition, ExactSolution, Family, ProblemInstance, ScalarFn, StokesSpaces, VectorFn};
pub use quadrature::{triangle_rule, QuadratureRule};
pub use space::{Continuity, FunctionSpace};
