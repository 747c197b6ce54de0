use std::sync::Arc;

use rayon::prelude::*;

use super::element::{p2_edge_values, p2_gradients, TriangleGeometry, EDGE_RULE, TRI_RULE_DEG4};
use super::FESpace;
use crate::error::{Error, Result};
use crate::mesh::Face;
use crate::scalar::{dist, Real};
use crate::sparse::{CsrMatrix, TripletBuilder};

/// Elements per assembly work unit. Fixed so the merge order, and hence the
/// floating-point sums, do not depend on the thread count.
const CHUNK: usize = 512;

/// Discrete Stokes operators after symmetric elimination of the wall dofs:
/// Dirichlet rows and columns of `a` are zero except for a unit diagonal and
/// the matching columns of `b` are zero.
#[derive(Debug, Clone)]
pub struct StokesOperators<T> {
    pub space: Arc<FESpace<T>>,
    pub nu: T,
    /// Viscous matrix `ν ∫ ∇φ_j : ∇φ_i`.
    pub a: CsrMatrix<T>,
    /// Divergence matrix `−∫ ψ_q ∇·φ_j`.
    pub b: CsrMatrix<T>,
}

/// Local scalar stiffness (6×6, unit viscosity) and divergence blocks
/// (3×6 per component) of one element.
pub(crate) fn element_matrices<T: Real>(g: &TriangleGeometry<T>) -> ([[T; 6]; 6], [[[T; 6]; 3]; 2]) {
    let mut k = [[T::zero(); 6]; 6];
    let mut bx = [[[T::zero(); 6]; 3]; 2];
    for (l, w) in TRI_RULE_DEG4.iter() {
        let l = [T::lit(l[0]), T::lit(l[1]), T::lit(l[2])];
        let w = T::lit(*w) * g.area;
        let grads = p2_gradients(l, &g.grad_lambda);
        for i in 0..6 {
            for j in i..6 {
                k[i][j] += w * (grads[i][0] * grads[j][0] + grads[i][1] * grads[j][1]);
            }
        }
        for q in 0..3 {
            for j in 0..6 {
                bx[0][q][j] -= w * l[q] * grads[j][0];
                bx[1][q][j] -= w * l[q] * grads[j][1];
            }
        }
    }
    for i in 0..6 {
        for j in 0..i {
            k[i][j] = k[j][i];
        }
    }
    (k, bx)
}

/// Assembles the viscous and divergence matrices with symmetric wall
/// elimination. Parallel over element chunks with an ordered merge.
pub fn assemble<T: Real>(space: Arc<FESpace<T>>, nu: T) -> Result<StokesOperators<T>> {
    if !(nu > T::zero()) || !nu.is_finite() {
        return Err(Error::InvalidArgument(format!("viscosity must be positive, got {nu}")));
    }
    let nt = space.mesh.num_triangles();
    let (n_u, n_p, nn) = (space.n_u, space.n_p, space.n_nodes);
    let chunks: Vec<(TripletBuilder<T>, TripletBuilder<T>)> = (0..nt.div_ceil(CHUNK))
        .into_par_iter()
        .map(|c| {
            let range = c * CHUNK..((c + 1) * CHUNK).min(nt);
            let mut ta = TripletBuilder::with_capacity(n_u, n_u, range.len() * 72);
            let mut tb = TripletBuilder::with_capacity(n_p, n_u, range.len() * 36);
            for t in range {
                let g = TriangleGeometry::new(space.element_coords(t));
                let (k, bl) = element_matrices(&g);
                let nodes = space.element_nodes(t);
                let verts = space.mesh.triangles[t];
                for comp in 0..2 {
                    let off = comp * nn;
                    for i in 0..6 {
                        let gi = off + nodes[i];
                        if space.dirichlet[gi] {
                            continue;
                        }
                        for j in 0..6 {
                            let gj = off + nodes[j];
                            if !space.dirichlet[gj] {
                                ta.push(gi, gj, nu * k[i][j]);
                            }
                        }
                        for q in 0..3 {
                            tb.push(verts[q], gi, bl[comp][q][i]);
                        }
                    }
                }
            }
            (ta, tb)
        })
        .collect();
    let mut ta = TripletBuilder::new(n_u, n_u);
    let mut tb = TripletBuilder::new(n_p, n_u);
    for &d in &space.dirichlet_set {
        ta.push(d, d, T::one());
    }
    for (a, b) in chunks {
        ta.extend(a);
        tb.extend(b);
    }
    Ok(StokesOperators {
        space,
        nu,
        a: ta.build(),
        b: tb.build(),
    })
}

/// Load of a uniform normal traction `−p̂ n` on `face`: entry `j` is
/// `−p̂ ∫ φ_j · n`. Dirichlet entries are kept; solvers ignore them.
pub fn neumann_load<T: Real>(space: &FESpace<T>, face: &Face<T>, magnitude: T) -> Result<Vec<T>> {
    let mut f = vec![T::zero(); space.n_u];
    add_neumann_load(space, face, magnitude, &mut f)?;
    Ok(f)
}

pub(crate) fn add_neumann_load<T: Real>(space: &FESpace<T>, face: &Face<T>, magnitude: T, f: &mut [T]) -> Result<()> {
    let nn = space.n_nodes;
    for (&[a, b], n) in face.edges.iter().zip(&face.normals) {
        let m = space
            .edge_node(a, b)
            .ok_or_else(|| Error::InvalidArgument(format!("face edge ({a}, {b}) is not a mesh edge")))?;
        let len = dist(space.mesh.vertices[a], space.mesh.vertices[b]);
        let mut w3 = [T::zero(); 3];
        for &(t, w) in EDGE_RULE.iter() {
            let phi = p2_edge_values(T::lit(t));
            for k in 0..3 {
                w3[k] += T::lit(w) * len * phi[k];
            }
        }
        for (k, node) in [a, m, b].into_iter().enumerate() {
            f[node] -= magnitude * w3[k] * n[0];
            f[nn + node] -= magnitude * w3[k] * n[1];
        }
    }
    Ok(())
}

/// Flux `∫ u · n` of a velocity coefficient vector through `face`.
pub fn velocity_flux<T: Real>(space: &FESpace<T>, u: &[T], face: &Face<T>) -> Result<T> {
    let nn = space.n_nodes;
    let mut q = T::zero();
    for (&[a, b], n) in face.edges.iter().zip(&face.normals) {
        let m = space
            .edge_node(a, b)
            .ok_or_else(|| Error::InvalidArgument(format!("face edge ({a}, {b}) is not a mesh edge")))?;
        let len = dist(space.mesh.vertices[a], space.mesh.vertices[b]);
        for &(t, w) in EDGE_RULE.iter() {
            let phi = p2_edge_values(T::lit(t));
            let mut ux = T::zero();
            let mut uy = T::zero();
            for (k, node) in [a, m, b].into_iter().enumerate() {
                ux += phi[k] * u[node];
                uy += phi[k] * u[nn + node];
            }
            q += T::lit(w) * len * (ux * n[0] + uy * n[1]);
        }
    }
    Ok(q)
}

/// Row-lumped P1 pressure mass matrix.
pub(crate) fn lumped_pressure_mass<T: Real>(space: &FESpace<T>) -> Vec<T> {
    let mut m = vec![T::zero(); space.n_p];
    let third = T::one() / T::lit(3.0);
    for (t, tri) in space.mesh.triangles.iter().enumerate() {
        let area = space.mesh.signed_area(t).abs();
        for &v in tri {
            m[v] += area * third;
        }
    }
    m
}
