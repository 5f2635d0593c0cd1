//! Uniform tensor-product meshes on boxes and Q1 finite-element spaces.
//!
//! The vertical direction is always the last axis, so a 2D mesh has
//! coordinates (x₁, x₃) and a 2D vector field has components (v₁, v₃).

mod projection;
mod space;

pub use projection::{quad_integral, quad_l2, scalar_at_quad, Projector, VectorAtQuad};
pub use space::{discrete_norms, FeSpace, Norms, MAX_LOCAL, MAX_QUAD};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::quadrature::GaussLegendre;

/// Maximum number of Q1 nodes per cell (3D).
pub const MAX_CELL_NODES: usize = 8;
/// Gauss points per axis.
pub const QUAD_POINTS_1D: usize = 3;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoxMesh {
    dim: usize,
    extents: Vec<(f64, f64)>,
    cells: Vec<usize>,
    h: Vec<f64>,
}

impl BoxMesh {
    pub fn new(dim: usize, extents: &[(f64, f64)], cells: &[usize]) -> Result<Self> {
        if dim != 2 && dim != 3 {
            return Err(Error::InvalidInput(format!(
                "dimension {dim} is not 2 or 3"
            )));
        }
        if extents.len() != dim {
            return Err(Error::DimensionMismatch {
                expected: dim,
                got: extents.len(),
            });
        }
        if cells.len() != dim {
            return Err(Error::DimensionMismatch {
                expected: dim,
                got: cells.len(),
            });
        }
        for (axis, &(lo, hi)) in extents.iter().enumerate() {
            if !(hi > lo) || !lo.is_finite() || !hi.is_finite() {
                return Err(Error::BadExtents { axis, lo, hi });
            }
        }
        for (axis, &n) in cells.iter().enumerate() {
            if n < 2 {
                return Err(Error::TooFewCells { axis, got: n });
            }
        }
        let h = extents
            .iter()
            .zip(cells)
            .map(|(&(lo, hi), &n)| (hi - lo) / n as f64)
            .collect();
        Ok(BoxMesh {
            dim,
            extents: extents.to_vec(),
            cells: cells.to_vec(),
            h,
        })
    }

    pub fn unit(dim: usize, n: usize) -> Result<Self> {
        Self::new(dim, &vec![(0.0, 1.0); dim], &vec![n; dim])
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn extents(&self) -> &[(f64, f64)] {
        &self.extents
    }

    pub fn cells(&self) -> &[usize] {
        &self.cells
    }

    pub fn h(&self) -> &[f64] {
        &self.h
    }

    pub fn min_h(&self) -> f64 {
        self.h.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn vertical_range(&self) -> (f64, f64) {
        self.extents[self.dim - 1]
    }

    pub fn volume(&self) -> f64 {
        self.extents.iter().map(|(lo, hi)| hi - lo).product()
    }

    pub fn nodes_per_axis(&self, axis: usize) -> usize {
        self.cells[axis] + 1
    }

    pub fn node_count(&self) -> usize {
        self.cells.iter().map(|c| c + 1).product()
    }

    pub fn cell_count(&self) -> usize {
        self.cells.iter().product()
    }

    pub fn nodes_per_cell(&self) -> usize {
        1 << self.dim
    }

    /// Node id from per-axis indices (axis 0 fastest).
    pub fn node_id(&self, idx: &[usize]) -> usize {
        let mut id = 0;
        for axis in (0..self.dim).rev() {
            id = id * (self.cells[axis] + 1) + idx[axis];
        }
        id
    }

    pub fn node_multi_index(&self, mut id: usize) -> [usize; 3] {
        let mut idx = [0; 3];
        for (axis, slot) in idx.iter_mut().enumerate().take(self.dim) {
            let n = self.cells[axis] + 1;
            *slot = id % n;
            id /= n;
        }
        idx
    }

    /// Coordinates of a node; unused trailing entries are zero.
    pub fn node_coords(&self, id: usize) -> [f64; 3] {
        let idx = self.node_multi_index(id);
        let mut x = [0.0; 3];
        for axis in 0..self.dim {
            x[axis] = self.extents[axis].0 + idx[axis] as f64 * self.h[axis];
        }
        x
    }

    pub fn on_boundary(&self, id: usize) -> bool {
        let idx = self.node_multi_index(id);
        (0..self.dim).any(|axis| idx[axis] == 0 || idx[axis] == self.cells[axis])
    }

    pub fn cell_multi_index(&self, mut c: usize) -> [usize; 3] {
        let mut idx = [0; 3];
        for (axis, slot) in idx.iter_mut().enumerate().take(self.dim) {
            *slot = c % self.cells[axis];
            c /= self.cells[axis];
        }
        idx
    }

    /// Node ids of a cell, local node `a` having bit `axis` set when it sits at the upper face.
    pub fn cell_nodes(&self, c: usize) -> [usize; MAX_CELL_NODES] {
        let base = self.cell_multi_index(c);
        let mut out = [0; MAX_CELL_NODES];
        for (a, slot) in out.iter_mut().enumerate().take(self.nodes_per_cell()) {
            let mut idx = base;
            for (axis, v) in idx.iter_mut().enumerate().take(self.dim) {
                *v += (a >> axis) & 1;
            }
            *slot = self.node_id(&idx);
        }
        out
    }

    pub fn cell_origin(&self, c: usize) -> [f64; 3] {
        let idx = self.cell_multi_index(c);
        let mut x = [0.0; 3];
        for axis in 0..self.dim {
            x[axis] = self.extents[axis].0 + idx[axis] as f64 * self.h[axis];
        }
        x
    }

    /// Halves h on every axis.
    pub fn refined(&self) -> Self {
        let cells: Vec<usize> = self.cells.iter().map(|c| 2 * c).collect();
        BoxMesh::new(self.dim, &self.extents, &cells).expect("refinement of a valid mesh")
    }
}

/// Q1 shape data at the tensor Gauss points of one (uniform) cell.
///
/// Every cell of a uniform mesh shares these tables; only the physical
/// location of the points changes.
#[derive(Debug, Clone)]
pub struct CellQuadrature {
    pub dim: usize,
    pub nq: usize,
    pub nodes: usize,
    /// physical weights (include the cell volume)
    pub weights: Vec<f64>,
    /// offset of each point from the cell origin
    pub offsets: Vec<[f64; 3]>,
    /// phi[q][a]
    pub phi: Vec<[f64; MAX_CELL_NODES]>,
    /// grad[q][a][axis], physical
    pub grad: Vec<[[f64; 3]; MAX_CELL_NODES]>,
    /// index of the point along the vertical axis
    pub vertical_index: Vec<usize>,
}

impl CellQuadrature {
    pub fn new(mesh: &BoxMesh, points_1d: usize) -> Self {
        let rule = GaussLegendre::new(points_1d);
        // map to [0, 1]
        let pts: Vec<f64> = rule.points.iter().map(|x| 0.5 * (x + 1.0)).collect();
        let wts: Vec<f64> = rule.weights.iter().map(|w| 0.5 * w).collect();
        let dim = mesh.dim();
        let nq = points_1d.pow(dim as u32);
        let nodes = mesh.nodes_per_cell();
        let h = mesh.h();
        let vol: f64 = h.iter().product();
        let mut weights = Vec::with_capacity(nq);
        let mut offsets = Vec::with_capacity(nq);
        let mut phi = Vec::with_capacity(nq);
        let mut grad = Vec::with_capacity(nq);
        let mut vertical_index = Vec::with_capacity(nq);
        for q in 0..nq {
            let mut qi = [0usize; 3];
            let mut r = q;
            for slot in qi.iter_mut().take(dim) {
                *slot = r % points_1d;
                r /= points_1d;
            }
            let mut w = vol;
            let mut off = [0.0; 3];
            let mut xi = [0.0; 3];
            for axis in 0..dim {
                w *= wts[qi[axis]];
                xi[axis] = pts[qi[axis]];
                off[axis] = xi[axis] * h[axis];
            }
            let mut ph = [0.0; MAX_CELL_NODES];
            let mut gr = [[0.0; 3]; MAX_CELL_NODES];
            for a in 0..nodes {
                let mut val = 1.0;
                for axis in 0..dim {
                    let bit = (a >> axis) & 1;
                    val *= if bit == 1 { xi[axis] } else { 1.0 - xi[axis] };
                }
                ph[a] = val;
                for d in 0..dim {
                    let mut g = 1.0;
                    for axis in 0..dim {
                        let bit = (a >> axis) & 1;
                        g *= if axis == d {
                            (if bit == 1 { 1.0 } else { -1.0 }) / h[axis]
                        } else if bit == 1 {
                            xi[axis]
                        } else {
                            1.0 - xi[axis]
                        };
                    }
                    gr[a][d] = g;
                }
            }
            weights.push(w);
            offsets.push(off);
            phi.push(ph);
            grad.push(gr);
            vertical_index.push(qi[dim - 1]);
        }
        CellQuadrature {
            dim,
            nq,
            nodes,
            weights,
            offsets,
            phi,
            grad,
            vertical_index,
        }
    }

    /// Physical coordinates of point q in cell c.
    pub fn point(&self, mesh: &BoxMesh, c: usize, q: usize) -> [f64; 3] {
        let o = mesh.cell_origin(c);
        let mut x = [0.0; 3];
        for axis in 0..self.dim {
            x[axis] = o[axis] + self.offsets[q][axis];
        }
        x
    }
}

/// Values of a steady quantity at every (vertical cell, vertical point) pair.
///
/// On a uniform box the steady coefficients depend only on x₃, so a table of
/// `cells_z × points_1d` entries covers every quadrature point of the mesh.
#[derive(Debug, Clone)]
pub struct VerticalTable<T> {
    points_1d: usize,
    values: Vec<T>,
}

impl<T: Copy> VerticalTable<T> {
    pub fn build(
        mesh: &BoxMesh,
        quad: &CellQuadrature,
        points_1d: usize,
        f: impl Fn(f64) -> T,
    ) -> Self {
        let dim = mesh.dim();
        let nz = mesh.cells()[dim - 1];
        let (z0, _) = mesh.vertical_range();
        let hz = mesh.h()[dim - 1];
        // recover the 1D offsets from the tensor table
        let mut offs = vec![0.0; points_1d];
        for q in 0..quad.nq {
            offs[quad.vertical_index[q]] = quad.offsets[q][dim - 1];
        }
        let mut values = Vec::with_capacity(nz * points_1d);
        for iz in 0..nz {
            for off in &offs {
                values.push(f(z0 + iz as f64 * hz + off));
            }
        }
        VerticalTable { points_1d, values }
    }

    #[inline]
    pub fn get(&self, mesh: &BoxMesh, quad: &CellQuadrature, c: usize, q: usize) -> T {
        let iz = mesh.cell_multi_index(c)[mesh.dim() - 1];
        self.values[iz * self.points_1d + quad.vertical_index[q]]
    }

    #[inline]
    pub fn at(&self, iz: usize, qz: usize) -> T {
        self.values[iz * self.points_1d + qz]
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn node_counts() {
        let m = BoxMesh::unit(2, 4).unwrap();
        assert_eq!(m.node_count(), 25);
        assert_eq!(m.h(), &[0.25, 0.25]);
        assert_eq!(BoxMesh::unit(3, 2).unwrap().node_count(), 27);
        let m = BoxMesh::new(2, &[(0.0, 2.0), (0.0, 1.0)], &[8, 4]).unwrap();
        assert_eq!(m.node_count(), 45);
        assert_eq!(m.h(), &[0.25, 0.25]);
    }

    #[test]
    fn invalid_meshes() {
        assert!(matches!(
            BoxMesh::unit(2, 1),
            Err(Error::TooFewCells { .. })
        ));
        assert!(matches!(
            BoxMesh::new(2, &[(0.0, 1.0), (1.0, 1.0)], &[2, 2]),
            Err(Error::BadExtents { axis: 1, .. })
        ));
        assert!(BoxMesh::unit(4, 2).is_err());
    }

    #[test]
    fn node_indexing_round_trips() {
        let m = BoxMesh::new(3, &[(0.0, 1.0), (0.0, 2.0), (-1.0, 1.0)], &[2, 3, 4]).unwrap();
        for id in 0..m.node_count() {
            let idx = m.node_multi_index(id);
            assert_eq!(m.node_id(&idx), id);
        }
        let x = m.node_coords(m.node_count() - 1);
        assert_eq!(x, [1.0, 2.0, 1.0]);
    }

    #[test]
    fn shape_functions_partition_unity() {
        for dim in [2, 3] {
            let m = BoxMesh::unit(dim, 3).unwrap();
            let cq = CellQuadrature::new(&m, 3);
            let wsum: f64 = cq.weights.iter().sum();
            assert!((wsum - m.h().iter().product::<f64>()).abs() < 1e-15);
            for q in 0..cq.nq {
                let s: f64 = cq.phi[q][..cq.nodes].iter().sum();
                assert!((s - 1.0).abs() < 1e-14);
                for d in 0..dim {
                    let gs: f64 = (0..cq.nodes).map(|a| cq.grad[q][a][d]).sum();
                    assert!(gs.abs() < 1e-12);
                }
            }
        }
    }
}
