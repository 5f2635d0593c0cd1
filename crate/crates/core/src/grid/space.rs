use std::sync::{Arc, OnceLock};

use serde::Serialize;

use super::{BoxMesh, CellQuadrature, MAX_CELL_NODES, QUAD_POINTS_1D};
use crate::error::{Error, Result};
use crate::linalg::Pattern;

pub const MAX_QUAD: usize = 27;
pub const MAX_LOCAL: usize = MAX_CELL_NODES * 3;
const NONE: usize = usize::MAX;

/// Q1 nodal space with 1 (scalar) or `dim` (vector) components.
///
/// Dofs of free nodes are interleaved: dof = k·components + c for the k-th
/// free node.
#[derive(Debug)]
pub struct FeSpace {
    mesh: Arc<BoxMesh>,
    quad: Arc<CellQuadrature>,
    components: usize,
    constrained: bool,
    node_slot: Vec<usize>,
    free_nodes: Vec<usize>,
    pattern: OnceLock<Arc<Pattern>>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Norms {
    pub l2: f64,
    pub h1_semi: f64,
    pub div_l2: f64,
}

impl FeSpace {
    fn build(mesh: Arc<BoxMesh>, components: usize, constrained: bool) -> Self {
        let quad = Arc::new(CellQuadrature::new(&mesh, QUAD_POINTS_1D));
        let mut node_slot = vec![NONE; mesh.node_count()];
        let mut free_nodes = Vec::new();
        for (id, slot) in node_slot.iter_mut().enumerate() {
            if !(constrained && mesh.on_boundary(id)) {
                *slot = free_nodes.len();
                free_nodes.push(id);
            }
        }
        FeSpace {
            mesh,
            quad,
            components,
            constrained,
            node_slot,
            free_nodes,
            pattern: OnceLock::new(),
        }
    }

    /// Unconstrained scalar space.
    pub fn scalar(mesh: Arc<BoxMesh>) -> Self {
        Self::build(mesh, 1, false)
    }

    /// Velocity space with homogeneous Dirichlet conditions on every component.
    pub fn velocity(mesh: Arc<BoxMesh>) -> Self {
        let d = mesh.dim();
        Self::build(mesh, d, true)
    }

    /// Vector space without boundary constraints (diagnostics only).
    pub fn vector_free(mesh: Arc<BoxMesh>) -> Self {
        let d = mesh.dim();
        Self::build(mesh, d, false)
    }

    pub fn mesh(&self) -> &Arc<BoxMesh> {
        &self.mesh
    }

    pub fn quad(&self) -> &CellQuadrature {
        &self.quad
    }

    pub fn components(&self) -> usize {
        self.components
    }

    pub fn is_constrained(&self) -> bool {
        self.constrained
    }

    pub fn n_dofs(&self) -> usize {
        self.free_nodes.len() * self.components
    }

    pub fn free_nodes(&self) -> &[usize] {
        &self.free_nodes
    }

    pub fn same_mesh(&self, other: &FeSpace) -> bool {
        Arc::ptr_eq(&self.mesh, &other.mesh) || *self.mesh == *other.mesh
    }

    #[inline]
    pub fn dof(&self, node: usize, comp: usize) -> Option<usize> {
        let s = self.node_slot[node];
        (s != NONE).then(|| s * self.components + comp)
    }

    /// Local-to-global dof map of a cell; constrained entries are `usize::MAX`.
    /// Local index is `a·components + comp`.
    pub fn cell_dofs(&self, c: usize) -> [usize; MAX_LOCAL] {
        let nodes = self.mesh.cell_nodes(c);
        let mut out = [NONE; MAX_LOCAL];
        for a in 0..self.mesh.nodes_per_cell() {
            let s = self.node_slot[nodes[a]];
            if s != NONE {
                for comp in 0..self.components {
                    out[a * self.components + comp] = s * self.components + comp;
                }
            }
        }
        out
    }

    pub fn local_len(&self) -> usize {
        self.mesh.nodes_per_cell() * self.components
    }

    /// Sparsity of operators mapping this space to itself.
    pub fn pattern(&self) -> Arc<Pattern> {
        self.pattern
            .get_or_init(|| {
                let mut rows: Vec<Vec<usize>> = vec![Vec::new(); self.n_dofs()];
                let nl = self.local_len();
                for c in 0..self.mesh.cell_count() {
                    let dofs = self.cell_dofs(c);
                    for &i in dofs[..nl].iter().filter(|&&i| i != NONE) {
                        rows[i].extend(dofs[..nl].iter().copied().filter(|&j| j != NONE));
                    }
                }
                Arc::new(Pattern::from_rows(rows))
            })
            .clone()
    }

    fn check_len(&self, coeffs: &[f64]) -> Result<()> {
        if coeffs.len() != self.n_dofs() {
            return Err(Error::DimensionMismatch {
                expected: self.n_dofs(),
                got: coeffs.len(),
            });
        }
        Ok(())
    }

    /// Nodal interpolant; `f(x, comp)` gives component `comp` at `x`.
    pub fn interpolate(&self, f: impl Fn(&[f64; 3], usize) -> f64) -> Vec<f64> {
        let mut out = vec![0.0; self.n_dofs()];
        for (k, &node) in self.free_nodes.iter().enumerate() {
            let x = self.mesh.node_coords(node);
            for comp in 0..self.components {
                out[k * self.components + comp] = f(&x, comp);
            }
        }
        out
    }

    /// Value of a component at every node (zero on constrained nodes).
    pub fn nodal_component(&self, coeffs: &[f64], comp: usize) -> Vec<f64> {
        let mut out = vec![0.0; self.mesh.node_count()];
        for (k, &node) in self.free_nodes.iter().enumerate() {
            out[node] = coeffs[k * self.components + comp];
        }
        out
    }

    /// Values and gradients of the field at the quadrature points of cell `c`.
    ///
    /// `val[q][comp]`, `grad[q][comp][axis]`.
    pub fn eval_cell(
        &self,
        coeffs: &[f64],
        c: usize,
        val: &mut [[f64; 3]; MAX_QUAD],
        grad: &mut [[[f64; 3]; 3]; MAX_QUAD],
    ) {
        let dofs = self.cell_dofs(c);
        let qd = &*self.quad;
        let (nc, dim) = (self.components, self.mesh.dim());
        for q in 0..qd.nq {
            val[q] = [0.0; 3];
            grad[q] = [[0.0; 3]; 3];
            for a in 0..qd.nodes {
                for comp in 0..nc {
                    let i = dofs[a * nc + comp];
                    if i == NONE {
                        continue;
                    }
                    let u = coeffs[i];
                    val[q][comp] += u * qd.phi[q][a];
                    for axis in 0..dim {
                        grad[q][comp][axis] += u * qd.grad[q][a][axis];
                    }
                }
            }
        }
    }

    /// Quadrature L², H¹-seminorm and divergence norms.
    pub fn norms(&self, coeffs: &[f64]) -> Result<Norms> {
        self.check_len(coeffs)?;
        let (mut l2, mut h1, mut div) = (0.0, 0.0, 0.0);
        let mut val = [[0.0; 3]; MAX_QUAD];
        let mut grad = [[[0.0; 3]; 3]; MAX_QUAD];
        let dim = self.mesh.dim();
        let vector = self.components == dim && self.components > 1;
        for c in 0..self.mesh.cell_count() {
            self.eval_cell(coeffs, c, &mut val, &mut grad);
            for q in 0..self.quad.nq {
                let w = self.quad.weights[q];
                let mut d = 0.0;
                for comp in 0..self.components {
                    l2 += w * val[q][comp] * val[q][comp];
                    for axis in 0..dim {
                        h1 += w * grad[q][comp][axis] * grad[q][comp][axis];
                    }
                    if vector {
                        d += grad[q][comp][comp];
                    }
                }
                div += w * d * d;
            }
        }
        Ok(Norms {
            l2: l2.sqrt(),
            h1_semi: h1.sqrt(),
            div_l2: div.sqrt(),
        })
    }

    /// L² norm of selected components.
    pub fn component_l2(&self, coeffs: &[f64], comps: &[usize]) -> f64 {
        let mut s = 0.0;
        let mut val = [[0.0; 3]; MAX_QUAD];
        let mut grad = [[[0.0; 3]; 3]; MAX_QUAD];
        for c in 0..self.mesh.cell_count() {
            self.eval_cell(coeffs, c, &mut val, &mut grad);
            for q in 0..self.quad.nq {
                for &comp in comps {
                    s += self.quad.weights[q] * val[q][comp] * val[q][comp];
                }
            }
        }
        s.sqrt()
    }

    /// L² norm of the vertical component.
    pub fn vertical_l2(&self, coeffs: &[f64]) -> f64 {
        self.component_l2(coeffs, &[self.components - 1])
    }

    /// L² norm of the horizontal components.
    pub fn horizontal_l2(&self, coeffs: &[f64]) -> f64 {
        let comps: Vec<usize> = (0..self.components - 1).collect();
        self.component_l2(coeffs, &comps)
    }
}

/// Discrete norms of a coefficient vector (free function form).
pub fn discrete_norms(space: &FeSpace, coeffs: &[f64]) -> Result<Norms> {
    space.norms(coeffs)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn mesh(n: usize) -> Arc<BoxMesh> {
        Arc::new(BoxMesh::unit(2, n).unwrap())
    }

    #[test]
    fn dof_counts() {
        let m = mesh(4);
        assert_eq!(FeSpace::scalar(m.clone()).n_dofs(), 25);
        assert_eq!(FeSpace::velocity(m.clone()).n_dofs(), 9 * 2);
        assert_eq!(FeSpace::vector_free(m).n_dofs(), 50);
    }

    #[test]
    fn interpolation_examples() {
        let m = mesh(4);
        let s = FeSpace::scalar(m.clone());
        assert!(s.interpolate(|_, _| 0.0).iter().all(|v| *v == 0.0));
        let z = s.interpolate(|x, _| x[1]);
        for (k, &node) in s.free_nodes().iter().enumerate() {
            assert_eq!(z[k], m.node_coords(node)[1]);
        }
        let v = FeSpace::velocity(m.clone());
        let f = |x: &[f64; 3]| x[0] * (1.0 - x[0]) * x[1] * (1.0 - x[1]);
        let c = v.interpolate(|x, comp| if comp == 0 { f(x) } else { 0.0 });
        let nodal = v.nodal_component(&c, 0);
        for id in 0..m.node_count() {
            assert!((nodal[id] - f(&m.node_coords(id))).abs() < 1e-15);
        }
    }

    #[test]
    fn norms_examples() {
        let m = mesh(4);
        let s = FeSpace::scalar(m.clone());
        let n = s.norms(&vec![0.0; s.n_dofs()]).unwrap();
        assert_eq!((n.l2, n.h1_semi, n.div_l2), (0.0, 0.0, 0.0));
        let n = s.norms(&s.interpolate(|_, _| 1.0)).unwrap();
        assert!((n.l2 - 1.0).abs() < 1e-14);
        let vf = FeSpace::vector_free(m);
        let c = vf.interpolate(|x, comp| if comp == 0 { x[1] } else { 0.0 });
        let n = vf.norms(&c).unwrap();
        assert!(n.div_l2.abs() < 1e-14);
        assert!((n.h1_semi - 1.0).abs() < 1e-14);
        assert!((n.l2 - (1.0f64 / 3.0).sqrt()).abs() < 1e-14);
        assert!(matches!(
            vf.norms(&[1.0]),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn pattern_is_symmetric_and_banded() {
        let v = FeSpace::velocity(mesh(6));
        let p = v.pattern();
        for i in 0..p.n {
            for &j in &p.col_idx[p.row_ptr[i]..p.row_ptr[i + 1]] {
                assert!(p.find(j, i).is_some());
            }
        }
        // interior nodes per row = 5, two components
        assert!(p.bandwidth() < 2 * (5 + 2));
    }
}
