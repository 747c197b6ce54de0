//! Taylor–Hood (P2 velocity, P1 pressure) finite elements for 2-D Stokes
//! flow with no-slip walls and uniform normal tractions on tagged faces.

mod assemble;
mod element;
mod norms;
mod saddle;
mod space;
mod vtk;

use std::sync::Arc;

pub use assemble::{assemble, neumann_load, velocity_flux, StokesOperators};
pub use element::{p2_edge_values, p2_gradients, p2_values, TriangleGeometry, EDGE_RULE, TRI_RULE_DEG4};
pub use norms::{error_norms, norm_breakdown, BrokenField, ElementField, ElementValues, NormBreakdown};
pub use saddle::{SaddleMethod, SaddleOptions, SaddleResidual, SaddleSolver};
pub use space::FESpace;
pub use vtk::write_vtk;

use crate::error::{Error, Result};
use crate::geometry::GeometrySpec;
use crate::mesh::{Face, FaceKind, Mesh};
use crate::scalar::Real;

/// Velocity and pressure coefficients on a space. Dirichlet entries of `u`
/// are zero.
#[derive(Debug, Clone)]
pub struct FlowField<T> {
    pub space: Arc<FESpace<T>>,
    pub u: Vec<T>,
    pub p: Vec<T>,
}

impl<T: Real> FlowField<T> {
    pub fn new(space: Arc<FESpace<T>>, u: Vec<T>, p: Vec<T>) -> Self {
        debug_assert_eq!(u.len(), space.n_u);
        debug_assert_eq!(p.len(), space.n_p);
        FlowField { space, u, p }
    }

    pub fn zero(space: Arc<FESpace<T>>) -> Self {
        let (n_u, n_p) = (space.n_u, space.n_p);
        FlowField::new(space, vec![T::zero(); n_u], vec![T::zero(); n_p])
    }

    /// `self + s·other` on the same space.
    pub fn axpy(&mut self, s: T, other: &FlowField<T>) {
        for (a, &b) in self.u.iter_mut().zip(&other.u) {
            *a += s * b;
        }
        for (a, &b) in self.p.iter_mut().zip(&other.p) {
            *a += s * b;
        }
    }

    /// Velocity at vertex `v`.
    pub fn vertex_velocity(&self, v: usize) -> [T; 2] {
        [self.u[v], self.u[self.space.n_nodes + v]]
    }
}

/// Builds the P2/P1 space of a mesh.
pub fn build_space<T: Real>(mesh: &Mesh<T>) -> Arc<FESpace<T>> {
    Arc::new(FESpace::new(mesh))
}

/// Flux `∫ u_h · n` through a face of the field's mesh.
pub fn face_flux<T: Real>(field: &FlowField<T>, face: &Face<T>) -> Result<T> {
    velocity_flux(&field.space, &field.u, face)
}

/// Solves the saddle system once.
pub fn solve_saddle<T: Real>(ops: &StokesOperators<T>, rhs_u: &[T], opts: SaddleOptions) -> Result<FlowField<T>> {
    SaddleSolver::new(ops, opts)?.solve(rhs_u)
}

/// Monolithic reference solve with `p_in` on the inlet and `p_out` on the
/// outlet.
pub fn solve_global<T: Real>(mesh: &Mesh<T>, spec: &GeometrySpec<T>, opts: SaddleOptions) -> Result<FlowField<T>> {
    let inlet = mesh.face(FaceKind::Inlet, None);
    let outlet = mesh.face(FaceKind::Outlet, None);
    if inlet.edges.is_empty() || outlet.edges.is_empty() {
        return Err(Error::Mesh("global solve needs inlet and outlet edges".into()));
    }
    let space = build_space(mesh);
    let ops = assemble(Arc::clone(&space), spec.nu)?;
    let mut rhs = neumann_load(&space, &inlet, spec.p_in)?;
    assemble::add_neumann_load(&space, &outlet, spec.p_out, &mut rhs)?;
    solve_saddle(&ops, &rhs, opts)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::interface_segments;
    use crate::mesh::build_structured_mesh;

    fn channel(h: f64) -> (GeometrySpec<f64>, Mesh<f64>) {
        let spec = GeometrySpec::channel(2.0, 1.0, 1.0, 0.0, 1.0).unwrap();
        let segs = interface_segments(&spec).unwrap();
        let mesh = build_structured_mesh(&spec, &segs, h).unwrap();
        (spec, mesh)
    }

    #[test]
    fn poiseuille_is_reproduced() {
        let (spec, mesh) = channel(0.25);
        for method in [SaddleMethod::Direct, SaddleMethod::PressureSchurCg] {
            let opts = SaddleOptions { method, ..Default::default() };
            let field = solve_global(&mesh, &spec, opts).unwrap();
            let exact_u = field.space.interpolate_velocity(|x| [x[1] * (1.0 - x[1]) / 4.0, 0.0]);
            let exact_p = field.space.interpolate_pressure(|x| 1.0 - x[0] / 2.0);
            let exact = FlowField::new(Arc::clone(&field.space), exact_u, exact_p);
            let err = error_norms(&field, &exact).unwrap();
            assert!(err < 1e-10, "{method:?}: {err}");
            let q = face_flux(&field, &mesh.face(FaceKind::Outlet, None)).unwrap();
            assert!((q - 1.0 / 24.0).abs() < 1e-12);
        }
    }

    #[test]
    fn equal_pressures_give_rest() {
        let (mut spec, mesh) = channel(0.25);
        spec.p_in = 0.7;
        spec.p_out = 0.7;
        let field = solve_global(&mesh, &spec, SaddleOptions::default()).unwrap();
        assert!(field.u.iter().all(|u| u.abs() < 1e-12));
        assert!(field.p.iter().all(|p| (p - 0.7).abs() < 1e-12));
    }
}
