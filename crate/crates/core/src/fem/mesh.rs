use crate::error::{Error, Result};

/// Uniform structured mesh of the unit interval or the unit square.
///
/// Square meshes split every grid square along the diagonal running from its
/// lower-left to its upper-right corner. Cell `2 (j n + i)` is the triangle
/// below that diagonal in square `(i, j)`, cell `2 (j n + i) + 1` the one above.
#[derive(Debug, Clone, PartialEq)]
pub struct Mesh {
    dim: usize,
    n: usize,
    vertices: Vec<[f64; 2]>,
    /// Integer grid coordinates of every vertex.
    grid: Vec<[usize; 2]>,
    cells: Vec<usize>,
    boundary: Vec<bool>,
    h: f64,
}

impl Mesh {
    /// `n` equal elements on `(0, 1)`, `h = 1/n`.
    pub fn interval(n: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::invalid("interval mesh needs at least one element"));
        }
        let vertices = (0..=n).map(|i| [i as f64 / n as f64, 0.0]).collect();
        let grid = (0..=n).map(|i| [i, 0]).collect();
        let cells = (0..n).flat_map(|k| [k, k + 1]).collect();
        let boundary = (0..=n).map(|i| i == 0 || i == n).collect();
        Ok(Mesh {
            dim: 1,
            n,
            vertices,
            grid,
            cells,
            boundary,
            h: 1.0 / n as f64,
        })
    }

    /// `n x n` squares on `(0, 1)²`, each split into two triangles;
    /// `h = √2/n` is the longest edge.
    pub fn unit_square(n: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::invalid("square mesh needs at least one subdivision"));
        }
        let stride = n + 1;
        let mut vertices = Vec::with_capacity(stride * stride);
        let mut grid = Vec::with_capacity(stride * stride);
        let mut boundary = Vec::with_capacity(stride * stride);
        for j in 0..=n {
            for i in 0..=n {
                vertices.push([i as f64 / n as f64, j as f64 / n as f64]);
                grid.push([i, j]);
                boundary.push(i == 0 || j == 0 || i == n || j == n);
            }
        }
        let mut cells = Vec::with_capacity(6 * n * n);
        for j in 0..n {
            for i in 0..n {
                let v00 = j * stride + i;
                let v10 = v00 + 1;
                let v01 = v00 + stride;
                let v11 = v01 + 1;
                cells.extend_from_slice(&[v00, v10, v11]);
                cells.extend_from_slice(&[v00, v11, v01]);
            }
        }
        Ok(Mesh {
            dim: 2,
            n,
            vertices,
            grid,
            cells,
            boundary,
            h: std::f64::consts::SQRT_2 / n as f64,
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Number of subdivisions per axis.
    pub fn subdivisions(&self) -> usize {
        self.n
    }

    pub fn h(&self) -> f64 {
        self.h
    }

    pub fn vertices(&self) -> &[[f64; 2]] {
        &self.vertices
    }

    pub fn vertex_grid(&self) -> &[[usize; 2]] {
        &self.grid
    }

    pub fn boundary_vertex_flags(&self) -> &[bool] {
        &self.boundary
    }

    pub fn vertices_per_cell(&self) -> usize {
        self.dim + 1
    }

    pub fn n_cells(&self) -> usize {
        self.cells.len() / self.vertices_per_cell()
    }

    pub fn cell(&self, k: usize) -> &[usize] {
        let m = self.vertices_per_cell();
        &self.cells[k * m..(k + 1) * m]
    }

    pub fn cells(&self) -> impl Iterator<Item = &[usize]> {
        self.cells.chunks_exact(self.vertices_per_cell())
    }

    /// Signed length or area of cell `k`.
    pub fn cell_measure(&self, k: usize) -> f64 {
        let c = self.cell(k);
        let a = self.vertices[c[0]];
        let b = self.vertices[c[1]];
        if self.dim == 1 {
            b[0] - a[0]
        } else {
            let p = self.vertices[c[2]];
            0.5 * ((b[0] - a[0]) * (p[1] - a[1]) - (p[0] - a[0]) * (b[1] - a[1]))
        }
    }

    /// Locates the cell containing `point` by grid arithmetic.
    /// Points on shared faces go to the cell with the larger index.
    pub fn locate(&self, point: [f64; 2]) -> Result<usize> {
        const TOL: f64 = 1e-12;
        let coords = &point[..self.dim];
        if coords
            .iter()
            .any(|&c| !c.is_finite() || c < -TOL || c > 1.0 + TOL)
        {
            return Err(Error::OutOfDomain(point));
        }
        let n = self.n as f64;
        let index = |c: f64| ((c * n).floor().max(0.0) as usize).min(self.n - 1);
        let i = index(point[0]);
        if self.dim == 1 {
            return Ok(i);
        }
        let j = index(point[1]);
        let s = point[0] * n - i as f64;
        let t = point[1] * n - j as f64;
        let square = j * self.n + i;
        Ok(if s >= t { 2 * square } else { 2 * square + 1 })
    }
}
