//! Domain-decomposition pore-network solver: per-pore unit-traction
//! responses and DtN maps, a global interface Schur system for the scalar
//! tractions, and reconstruction of the fine-scale fields.

mod interface;
mod local;

use log::info;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

pub use interface::{assemble_schur, solve_interface, InterfaceIndexing, SchurSystem};
pub use local::{dtn_map, face_loads, reconstruct, unit_responses, DtNMap, DtnTolerances, LocalProblem, UnitResponses};

use crate::error::{Error, Result};
use crate::fem::{face_flux, norm_breakdown, solve_global, BrokenField, ElementField, FlowField, SaddleOptions};
use crate::geometry::GeometrySpec;
use crate::mesh::{extract_subdomains, FaceKind, Mesh};
use crate::scalar::Real;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DdpnmOptions {
    pub saddle: SaddleOptions,
    pub dtn: DtnTolerances,
    /// Relative residual of the interface solve.
    pub interface_tol: f64,
}

impl Default for DdpnmOptions {
    fn default() -> Self {
        DdpnmOptions {
            saddle: SaddleOptions::default(),
            dtn: DtnTolerances::default(),
            interface_tol: 1e-12,
        }
    }
}

/// Result of a full DD-PNM run.
#[derive(Debug, Clone)]
pub struct DdpnmSolution<T> {
    /// Per pore, in label order. Empty when the run fell back to the
    /// monolithic solve.
    pub locals: Vec<LocalProblem<T>>,
    pub indexing: InterfaceIndexing<T>,
    pub schur: Option<SchurSystem<T>>,
    /// Interface tractions in global unknown order.
    pub tractions: Vec<T>,
    pub interface_residual: T,
    /// Per pore: outward fluxes `Q_i = G_i p_i` in local face order.
    pub fluxes: Vec<Vec<T>>,
    pub fields: BrokenField<T>,
    pub fallback: bool,
    pub p_in: T,
    pub p_out: T,
}

/// Full pipeline on a labelled mesh. Without internal interfaces the
/// monolithic solve is used instead.
pub fn run_ddpnm<T: Real>(mesh: &Mesh<T>, spec: &GeometrySpec<T>, opts: &DdpnmOptions) -> Result<DdpnmSolution<T>> {
    if mesh.interface_ids().is_empty() {
        info!("mesh has no internal interfaces; using the monolithic solve");
        return fallback(mesh, spec, opts);
    }
    let subs = extract_subdomains(mesh)?;
    let locals: Vec<LocalProblem<T>> = subs
        .into_par_iter()
        .map(|sub| LocalProblem::new(sub, spec.nu, opts.saddle, opts.dtn))
        .collect::<Result<_>>()?;
    let maps: Vec<DtNMap<T>> = locals.iter().map(|l| l.dtn.clone()).collect();
    let indexing = InterfaceIndexing::new(&maps, spec.p_in, spec.p_out)?;
    let schur = assemble_schur(&maps, &indexing)?;
    let (tractions, interface_residual) = solve_interface(&schur, T::lit(opts.interface_tol))?;
    let fluxes = interface_fluxes(&maps, &indexing, &tractions);
    let parts: Vec<FlowField<T>> = locals
        .par_iter()
        .enumerate()
        .map(|(i, l)| l.reconstruct(&indexing.local_tractions(i, &tractions)))
        .collect::<Result<_>>()?;
    let maps_t: Vec<Vec<usize>> = locals.iter().map(|l| l.sub.triangle_map.clone()).collect();
    let fields = BrokenField::new(parts, &maps_t, mesh.num_triangles())?;
    Ok(DdpnmSolution {
        locals,
        indexing,
        schur: Some(schur),
        tractions,
        interface_residual,
        fluxes,
        fields,
        fallback: false,
        p_in: spec.p_in,
        p_out: spec.p_out,
    })
}

fn fallback<T: Real>(mesh: &Mesh<T>, spec: &GeometrySpec<T>, opts: &DdpnmOptions) -> Result<DdpnmSolution<T>> {
    if mesh.num_subdomains() != 1 {
        return Err(Error::Mesh(format!(
            "{} pore labels but no interfaces between them",
            mesh.num_subdomains()
        )));
    }
    let field = solve_global(mesh, spec, opts.saddle)?;
    let q_in = face_flux(&field, &mesh.face(FaceKind::Inlet, None))?;
    let q_out = face_flux(&field, &mesh.face(FaceKind::Outlet, None))?;
    let all: Vec<usize> = (0..mesh.num_triangles()).collect();
    let fields = BrokenField::new(vec![field], &[all], mesh.num_triangles())?;
    Ok(DdpnmSolution {
        locals: Vec::new(),
        indexing: InterfaceIndexing {
            m: 0,
            interface_ids: Vec::new(),
            unknown: vec![Vec::new()],
            known: vec![vec![0, 1]],
            known_values: vec![spec.p_in, spec.p_out],
            known_faces: vec![(0, FaceKind::Inlet), (0, FaceKind::Outlet)],
        },
        schur: None,
        tractions: Vec::new(),
        interface_residual: T::zero(),
        fluxes: vec![vec![q_in, q_out]],
        fields,
        fallback: true,
        p_in: spec.p_in,
        p_out: spec.p_out,
    })
}

/// Per-pore outward face fluxes `Q_i = G_i p_i`, known faces included.
pub fn interface_fluxes<T: Real>(maps: &[DtNMap<T>], idx: &InterfaceIndexing<T>, p: &[T]) -> Vec<Vec<T>> {
    maps.iter()
        .enumerate()
        .map(|(i, d)| d.fluxes(&idx.local_tractions(i, p)))
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PoreReport {
    pub pore: usize,
    /// Area centroid of the pore region.
    pub centroid: [f64; 2],
    pub faces: Vec<String>,
    pub g: Vec<Vec<f64>>,
    pub tractions: Vec<f64>,
    pub fluxes: Vec<f64>,
    pub net_flux: f64,
    pub abs_flux: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InterfaceReport {
    /// 1-based interface label.
    pub id: usize,
    pub pores: [usize; 2],
    pub traction: f64,
    /// Outward flux seen from each pore.
    pub fluxes: [f64; 2],
    pub sum: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ErrorReport {
    pub relative: f64,
    pub velocity_h1_relative: f64,
    pub pressure_l2_relative: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DdpnmReport {
    pub p_in: f64,
    pub p_out: f64,
    pub m: usize,
    pub pores: Vec<PoreReport>,
    pub interfaces: Vec<InterfaceReport>,
    pub tractions: Vec<f64>,
    pub interface_residual: f64,
    pub inflow: f64,
    pub outflow: f64,
    pub fallback: bool,
    pub error: Option<ErrorReport>,
}

impl<T: Real> DdpnmSolution<T> {
    /// Sum of outward fluxes over faces of one kind.
    pub fn boundary_flux(&self, kind: FaceKind) -> T {
        let mut q = T::zero();
        for (i, f) in self.fluxes.iter().enumerate() {
            let kinds: Vec<FaceKind> = match self.locals.get(i) {
                Some(l) => l.dtn.faces.clone(),
                None => vec![FaceKind::Inlet, FaceKind::Outlet],
            };
            for (k, &v) in kinds.iter().zip(f) {
                if *k == kind {
                    q += v;
                }
            }
        }
        q
    }

    /// Combined and per-variable relative errors against `reference`.
    pub fn error_against(&self, reference: &dyn ElementField<T>) -> Result<ErrorReport> {
        let n = norm_breakdown(&self.fields, reference)?;
        if n.u_h1_sq + n.p_l2_sq == T::zero() {
            return Err(Error::InvalidArgument("reference field has zero norm".into()));
        }
        Ok(ErrorReport {
            relative: n.relative().as_f64(),
            velocity_h1_relative: n.velocity_relative().as_f64(),
            pressure_l2_relative: n.pressure_relative().as_f64(),
        })
    }

    pub fn report(&self, error: Option<ErrorReport>) -> DdpnmReport {
        let mut pores = Vec::with_capacity(self.locals.len());
        let mut sides: Vec<Vec<(usize, f64)>> = vec![Vec::new(); self.indexing.m];
        for (i, l) in self.locals.iter().enumerate() {
            let q = &self.fluxes[i];
            for (k, &g) in self.indexing.unknown[i].iter().enumerate() {
                sides[g].push((l.dtn.pore_id, q[k].as_f64()));
            }
            pores.push(PoreReport {
                pore: l.dtn.pore_id,
                centroid: l.sub.mesh.centroid().map(|v| v.as_f64()),
                faces: l.dtn.faces.iter().map(|f| f.to_string()).collect(),
                g: l.dtn.g.rows().iter().map(|r| r.iter().map(|v| v.as_f64()).collect()).collect(),
                tractions: self.indexing.local_tractions(i, &self.tractions).iter().map(|v| v.as_f64()).collect(),
                fluxes: q.iter().map(|v| v.as_f64()).collect(),
                net_flux: q.iter().copied().sum::<T>().as_f64(),
                abs_flux: q.iter().map(|v| v.abs()).sum::<T>().as_f64(),
            });
        }
        let interfaces = sides
            .iter()
            .enumerate()
            .map(|(g, s)| InterfaceReport {
                id: self.indexing.interface_ids[g] + 1,
                pores: [s[0].0, s[1].0],
                traction: self.tractions[g].as_f64(),
                fluxes: [s[0].1, s[1].1],
                sum: s[0].1 + s[1].1,
            })
            .collect();
        DdpnmReport {
            p_in: self.p_in.as_f64(),
            p_out: self.p_out.as_f64(),
            m: self.indexing.m,
            pores,
            interfaces,
            tractions: self.tractions.iter().map(|v| v.as_f64()).collect(),
            interface_residual: self.interface_residual.as_f64(),
            inflow: self.boundary_flux(FaceKind::Inlet).as_f64(),
            outflow: self.boundary_flux(FaceKind::Outlet).as_f64(),
            fallback: self.fallback,
            error,
        }
    }
}
