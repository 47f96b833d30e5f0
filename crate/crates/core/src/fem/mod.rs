//! Meshes, Lagrange spaces, SUPG assembly and the direct solver.

mod assembly;
pub mod element;
mod mesh;
pub mod quadrature;
mod solution;
mod space;
pub mod sparse;

pub use assembly::{assemble_supg, solve_supg, SupgOperator, SupgSolver};
pub use mesh::Mesh;
pub use solution::DiscreteSolution;
pub use space::{CellGeometry, FeSpace, MAX_DEGREE};
pub use sparse::{solve, CsrMatrix, LinearSystem, SparseLu};

use std::sync::Arc;

use crate::error::Result;

/// Uniform interval mesh with `n` elements.
pub fn build_interval_mesh(n: usize) -> Result<Mesh> {
    Mesh::interval(n)
}

/// Structured `n x n` triangulation of the unit square.
pub fn build_unit_square_mesh(n: usize) -> Result<Mesh> {
    Mesh::unit_square(n)
}

pub fn build_space(mesh: Arc<Mesh>, degree: usize) -> Result<Arc<FeSpace>> {
    Ok(Arc::new(FeSpace::new(mesh, degree)?))
}

/// Mesh of dimension `dim` with `n` subdivisions per axis.
pub fn build_mesh(dim: usize, n: usize) -> Result<Arc<Mesh>> {
    Ok(Arc::new(if dim == 1 {
        Mesh::interval(n)?
    } else {
        Mesh::unit_square(n)?
    }))
}
