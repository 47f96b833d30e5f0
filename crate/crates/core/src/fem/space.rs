use std::sync::Arc;

use super::element::{ReferenceElement, Tabulation};
use super::mesh::Mesh;
use crate::error::{Error, Result};

pub const MAX_DEGREE: usize = 4;

/// Affine map `x = origin + J ξ` of one cell. Intervals use `J = diag(len, 1)`.
#[derive(Debug, Clone, Copy)]
pub struct CellGeometry {
    pub origin: [f64; 2],
    pub jacobian: [[f64; 2]; 2],
    pub inverse: [[f64; 2]; 2],
    pub det: f64,
}

impl CellGeometry {
    pub fn to_physical(&self, xi: [f64; 2]) -> [f64; 2] {
        let j = &self.jacobian;
        [
            self.origin[0] + j[0][0] * xi[0] + j[0][1] * xi[1],
            self.origin[1] + j[1][0] * xi[0] + j[1][1] * xi[1],
        ]
    }

    pub fn to_reference(&self, x: [f64; 2]) -> [f64; 2] {
        let d = [x[0] - self.origin[0], x[1] - self.origin[1]];
        let k = &self.inverse;
        [k[0][0] * d[0] + k[0][1] * d[1], k[1][0] * d[0] + k[1][1] * d[1]]
    }

    /// `J⁻ᵀ g`
    pub fn map_gradient(&self, g: [f64; 2]) -> [f64; 2] {
        let k = &self.inverse;
        [k[0][0] * g[0] + k[1][0] * g[1], k[0][1] * g[0] + k[1][1] * g[1]]
    }

    /// Physical Laplacian from a reference Hessian, `tr(J⁻ᵀ H J⁻¹)`.
    pub fn map_laplacian(&self, h: [f64; 3]) -> f64 {
        let k = &self.inverse;
        let hm = [[h[0], h[1]], [h[1], h[2]]];
        let mut lap = 0.0;
        // Σ_d Σ_ab K[a][d] H[a][b] K[b][d]
        for d in 0..2 {
            for a in 0..2 {
                for b in 0..2 {
                    lap += k[a][d] * hm[a][b] * k[b][d];
                }
            }
        }
        lap
    }
}

/// Continuous Lagrange space of degree `r` over a structured mesh.
///
/// Degrees of freedom sit on the lattice of spacing `1/(r n)`; dof
/// `J (r n + 1) + I` lives at `(I, J) / (r n)`.
#[derive(Debug, Clone)]
pub struct FeSpace {
    mesh: Arc<Mesh>,
    element: ReferenceElement,
    dof_coords: Vec<[f64; 2]>,
    cell_dofs: Vec<usize>,
    boundary: Vec<bool>,
}

impl FeSpace {
    pub fn new(mesh: Arc<Mesh>, degree: usize) -> Result<Self> {
        if !(1..=MAX_DEGREE).contains(&degree) {
            return Err(Error::UnsupportedDegree(degree));
        }
        let dim = mesh.dim();
        let element = ReferenceElement::new(dim, degree);
        let m = degree * mesh.subdivisions();
        let stride = m + 1;
        let lattice_points = if dim == 1 { stride } else { stride * stride };
        let spacing = 1.0 / m as f64;

        let mut dof_coords = Vec::with_capacity(lattice_points);
        let mut boundary = Vec::with_capacity(lattice_points);
        if dim == 1 {
            for i in 0..=m {
                dof_coords.push([i as f64 * spacing, 0.0]);
                boundary.push(i == 0 || i == m);
            }
        } else {
            for j in 0..=m {
                for i in 0..=m {
                    dof_coords.push([i as f64 * spacing, j as f64 * spacing]);
                    boundary.push(i == 0 || j == 0 || i == m || j == m);
                }
            }
        }

        let grid = mesh.vertex_grid();
        let nloc = element.n_nodes();
        let mut cell_dofs = Vec::with_capacity(mesh.n_cells() * nloc);
        for cell in mesh.cells() {
            let g0 = grid[cell[0]].map(|c| (c * degree) as i64);
            let e1 = sub(grid[cell[1]], grid[cell[0]]);
            let e2 = if dim == 2 {
                sub(grid[cell[2]], grid[cell[0]])
            } else {
                [0, 0]
            };
            for &[a, b] in element.node_indices() {
                let (a, b) = (a as i64, b as i64);
                let i = g0[0] + a * e1[0] + b * e2[0];
                let j = g0[1] + a * e1[1] + b * e2[1];
                debug_assert!(i >= 0 && j >= 0);
                cell_dofs.push(j as usize * stride + i as usize);
            }
        }

        Ok(FeSpace {
            mesh,
            element,
            dof_coords,
            cell_dofs,
            boundary,
        })
    }

    pub fn mesh(&self) -> &Arc<Mesh> {
        &self.mesh
    }

    pub fn element(&self) -> &ReferenceElement {
        &self.element
    }

    pub fn degree(&self) -> usize {
        self.element.degree()
    }

    pub fn dim(&self) -> usize {
        self.mesh.dim()
    }

    pub fn n_dofs(&self) -> usize {
        self.dof_coords.len()
    }

    pub fn dofs_per_cell(&self) -> usize {
        self.element.n_nodes()
    }

    pub fn dof_coords(&self) -> &[[f64; 2]] {
        &self.dof_coords
    }

    pub fn boundary_dof_flags(&self) -> &[bool] {
        &self.boundary
    }

    pub fn cell_dofs(&self, k: usize) -> &[usize] {
        let n = self.dofs_per_cell();
        &self.cell_dofs[k * n..(k + 1) * n]
    }

    pub fn cell_geometry(&self, k: usize) -> CellGeometry {
        let mesh = &self.mesh;
        let v = mesh.vertices();
        let c = mesh.cell(k);
        let p0 = v[c[0]];
        let jacobian = if mesh.dim() == 1 {
            [[v[c[1]][0] - p0[0], 0.0], [0.0, 1.0]]
        } else {
            let p1 = v[c[1]];
            let p2 = v[c[2]];
            [
                [p1[0] - p0[0], p2[0] - p0[0]],
                [p1[1] - p0[1], p2[1] - p0[1]],
            ]
        };
        let det = jacobian[0][0] * jacobian[1][1] - jacobian[0][1] * jacobian[1][0];
        let inverse = [
            [jacobian[1][1] / det, -jacobian[0][1] / det],
            [-jacobian[1][0] / det, jacobian[0][0] / det],
        ];
        CellGeometry {
            origin: p0,
            jacobian,
            inverse,
            det,
        }
    }

    /// Value and gradient of the finite-element function with `coefficients`
    /// at `point`.
    pub fn evaluate_with_gradient(
        &self,
        coefficients: &[f64],
        point: [f64; 2],
    ) -> Result<(f64, [f64; 2])> {
        let k = self.mesh.locate(point)?;
        let geo = self.cell_geometry(k);
        let mut xi = geo.to_reference(point);
        if self.dim() == 1 {
            xi[1] = 0.0;
        }
        let mut tab = Tabulation::default();
        self.element.tabulate_into(xi, &mut tab);
        let mut value = 0.0;
        let mut grad = [0.0; 2];
        for (local, &dof) in self.cell_dofs(k).iter().enumerate() {
            let c = coefficients[dof];
            value += c * tab.values[local];
            let g = geo.map_gradient(tab.grads[local]);
            grad[0] += c * g[0];
            grad[1] += c * g[1];
        }
        Ok((value, grad))
    }
}

fn sub(a: [usize; 2], b: [usize; 2]) -> [i64; 2] {
    [a[0] as i64 - b[0] as i64, a[1] as i64 - b[1] as i64]
}

#[cfg(test)]
mod tests {
    use std::collections::HashSet;

    use super::*;

    #[test]
    fn interval_dof_counts() {
        let mesh = Arc::new(Mesh::interval(20).unwrap());
        assert_eq!(FeSpace::new(mesh.clone(), 1).unwrap().n_dofs(), 21);
        assert_eq!(FeSpace::new(mesh.clone(), 3).unwrap().n_dofs(), 61);
        assert!(matches!(FeSpace::new(mesh.clone(), 0), Err(Error::UnsupportedDegree(0))));
        assert!(matches!(FeSpace::new(mesh, 5), Err(Error::UnsupportedDegree(5))));
    }

    /// Counts vertices plus unique edges by walking the cells.
    fn vertices_plus_edges(mesh: &Mesh) -> usize {
        let mut edges = HashSet::new();
        for c in mesh.cells() {
            for a in 0..3 {
                let (p, q) = (c[a], c[(a + 1) % 3]);
                edges.insert((p.min(q), p.max(q)));
            }
        }
        mesh.vertices().len() + edges.len()
    }

    #[test]
    fn quadratic_dofs_match_vertex_and_edge_enumeration() {
        let mesh = Arc::new(Mesh::unit_square(10).unwrap());
        let expected = vertices_plus_edges(&mesh);
        assert_eq!(expected, 121 + 320);
        assert_eq!(FeSpace::new(mesh, 2).unwrap().n_dofs(), expected);
    }

    #[test]
    fn every_dof_belongs_to_a_cell_and_local_nodes_match_coordinates() {
        for mesh in [Mesh::interval(5).unwrap(), Mesh::unit_square(4).unwrap()] {
            let mesh = Arc::new(mesh);
            for r in 1..=4 {
                let space = FeSpace::new(mesh.clone(), r).unwrap();
                let mut seen = vec![false; space.n_dofs()];
                for k in 0..mesh.n_cells() {
                    let geo = space.cell_geometry(k);
                    for (local, &dof) in space.cell_dofs(k).iter().enumerate() {
                        seen[dof] = true;
                        let x = geo.to_physical(space.element().node_coords(local));
                        let y = space.dof_coords()[dof];
                        assert!((x[0] - y[0]).abs() < 1e-14 && (x[1] - y[1]).abs() < 1e-14);
                    }
                }
                assert!(seen.iter().all(|s| *s));
            }
        }
    }

    #[test]
    fn evaluation_of_constant_and_lagrange_property() {
        let mesh = Arc::new(Mesh::unit_square(3).unwrap());
        let space = FeSpace::new(mesh, 3).unwrap();
        let ones = vec![1.0; space.n_dofs()];
        for p in [[0.1, 0.9], [0.5, 0.5], [1.0, 0.0], [0.77, 0.123]] {
            let (v, g) = space.evaluate_with_gradient(&ones, p).unwrap();
            assert!((v - 1.0).abs() < 1e-12);
            assert!(g[0].abs() < 1e-9 && g[1].abs() < 1e-9);
        }
        let coeffs: Vec<f64> = (0..space.n_dofs()).map(|i| (i as f64 * 0.37).sin()).collect();
        for (i, &x) in space.dof_coords().iter().enumerate() {
            let (v, _) = space.evaluate_with_gradient(&coeffs, x).unwrap();
            assert!((v - coeffs[i]).abs() < 1e-12);
        }
    }
}
