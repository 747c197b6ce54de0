use std::sync::Arc;

use log::warn;

use crate::error::{Error, Result};
use crate::fem::{assemble, build_space, neumann_load, FESpace, FlowField, SaddleOptions, SaddleSolver, StokesOperators};
use crate::mesh::{FaceKind, SubdomainMesh};
use crate::scalar::{vec_dot, vec_norm, Real};
use crate::sparse::{symmetric_eigenvalues, DenseMatrix};

/// Velocity and pressure responses of one pore to a unit normal traction on
/// each of its faces, all other faces traction-free.
#[derive(Debug, Clone)]
pub struct UnitResponses<T> {
    pub pore_id: usize,
    /// `f̃^(r)` per local face.
    pub velocity: Vec<Vec<T>>,
    /// `X^(r)` per local face.
    pub pressure: Vec<Vec<T>>,
}

/// Dirichlet-to-Neumann map of one pore: `g[k][r]` is the outward flux
/// through face `k` caused by a unit traction on face `r`.
#[derive(Debug, Clone)]
pub struct DtNMap<T> {
    pub pore_id: usize,
    /// Symmetrized map (the raw asymmetry is checked before symmetrizing).
    pub g: DenseMatrix<T>,
    pub faces: Vec<FaceKind>,
    pub n_unknown: usize,
    /// `‖G − Gᵀ‖_F / scale` of the raw map.
    pub asymmetry: T,
    /// Reference magnitude used for the relative checks: `max(‖G‖_F, ‖f‖²/max|A|)`.
    pub scale: T,
}

/// Relative tolerances of the DtN checks.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DtnTolerances {
    pub symmetry: f64,
    pub row_sum: f64,
    pub definiteness: f64,
}

impl Default for DtnTolerances {
    fn default() -> Self {
        DtnTolerances {
            symmetry: 1e-10,
            row_sum: 1e-10,
            definiteness: 1e-12,
        }
    }
}

impl<T: Real> DtNMap<T> {
    pub fn m(&self) -> usize {
        self.faces.len()
    }

    /// Eigenvalues of the symmetrized map, ascending.
    pub fn eigenvalues(&self) -> Vec<T> {
        symmetric_eigenvalues(&self.g)
    }

    /// Numerical rank with eigenvalues below `rel_tol · max|λ|` counted as
    /// zero.
    pub fn rank(&self, rel_tol: T) -> usize {
        let ev = self.eigenvalues();
        let top = ev.iter().fold(T::zero(), |m, x| m.max(x.abs()));
        ev.iter().filter(|x| x.abs() > rel_tol * top).count()
    }

    /// Fluxes `G p` for local tractions `p`.
    pub fn fluxes(&self, p: &[T]) -> Vec<T> {
        self.g.mul_vec(p)
    }
}

/// Everything DD-PNM keeps per pore: the submesh, its discrete operators, the
/// face loads, the unit responses and the DtN map.
#[derive(Debug, Clone)]
pub struct LocalProblem<T> {
    pub sub: SubdomainMesh<T>,
    pub ops: StokesOperators<T>,
    /// `f^(r)` per local face.
    pub loads: Vec<Vec<T>>,
    pub responses: UnitResponses<T>,
    pub dtn: DtNMap<T>,
}

impl<T: Real> LocalProblem<T> {
    pub fn new(sub: SubdomainMesh<T>, nu: T, saddle: SaddleOptions, tol: DtnTolerances) -> Result<Self> {
        if sub.faces.is_empty() {
            return Err(Error::Mesh(format!("pore {} has no traction face", sub.pore_id)));
        }
        let space = build_space(&sub.mesh);
        let ops = assemble(Arc::clone(&space), nu)?;
        let loads = face_loads(&space, &sub)?;
        let responses = unit_responses(sub.pore_id, &ops, &loads, saddle)?;
        let dtn = dtn_map(&sub, &ops, &responses, &loads, tol)?;
        Ok(LocalProblem {
            sub,
            ops,
            loads,
            responses,
            dtn,
        })
    }

    pub fn space(&self) -> &Arc<FESpace<T>> {
        &self.ops.space
    }

    /// `U = Σ p_r f̃^(r)`, `P = Σ p_r X^(r)`; no solve.
    pub fn reconstruct(&self, p: &[T]) -> Result<FlowField<T>> {
        reconstruct(&self.ops.space, &self.responses, p)
    }
}

/// Unit-traction loads of every face of a subdomain.
pub fn face_loads<T: Real>(space: &FESpace<T>, sub: &SubdomainMesh<T>) -> Result<Vec<Vec<T>>> {
    sub.faces.iter().map(|f| neumann_load(space, f, T::one())).collect()
}

/// Solves the local saddle problem once per face with a unit traction on
/// that face; one factorization serves all faces.
pub fn unit_responses<T: Real>(
    pore_id: usize,
    ops: &StokesOperators<T>,
    loads: &[Vec<T>],
    opts: SaddleOptions,
) -> Result<UnitResponses<T>> {
    let solver = SaddleSolver::new(ops, opts)?;
    let mut velocity = Vec::with_capacity(loads.len());
    let mut pressure = Vec::with_capacity(loads.len());
    for (r, f) in loads.iter().enumerate() {
        let field = solver
            .solve(f)
            .map_err(|e| with_context(e, &format!("pore {pore_id}, face {r}")))?;
        velocity.push(field.u);
        pressure.push(field.p);
    }
    Ok(UnitResponses {
        pore_id,
        velocity,
        pressure,
    })
}

fn with_context(e: Error, ctx: &str) -> Error {
    match e {
        Error::NonConvergence(m) => Error::NonConvergence(format!("{ctx}: {m}")),
        Error::Singular(m) => Error::Singular(format!("{ctx}: {m}")),
        other => other,
    }
}

/// `G[k][r] = −⟨f^(k), f̃^(r)⟩`, checked for symmetry, zero row sums and
/// negative semi-definiteness before it is returned.
pub fn dtn_map<T: Real>(
    sub: &SubdomainMesh<T>,
    ops: &StokesOperators<T>,
    responses: &UnitResponses<T>,
    loads: &[Vec<T>],
    tol: DtnTolerances,
) -> Result<DtNMap<T>> {
    let m = loads.len();
    if responses.velocity.len() != m {
        return Err(Error::InvalidArgument("responses and loads differ in face count".into()));
    }
    let raw = DenseMatrix::from_fn(m, m, |k, r| -vec_dot(&loads[k], &responses.velocity[r]));
    let fmax = loads.iter().map(|f| vec_norm(f)).fold(T::zero(), T::max);
    let scale = raw.frobenius_norm().max(fmax * fmax / ops.a.max_abs());
    let pore = sub.pore_id;
    let asymmetry = raw.sub(&raw.transpose()).frobenius_norm() / scale;
    if asymmetry > T::lit(tol.symmetry) {
        return Err(Error::Invariant(format!(
            "pore {pore}: DtN asymmetry {:e} exceeds {:e}",
            asymmetry.as_f64(),
            tol.symmetry
        )));
    }
    let half = T::lit(0.5);
    let g = DenseMatrix::from_fn(m, m, |i, j| (raw[(i, j)] + raw[(j, i)]) * half);
    let row = vec_norm(&g.row_sums()) / scale;
    if row > T::lit(tol.row_sum) {
        return Err(Error::Invariant(format!(
            "pore {pore}: DtN row sums {:e} exceed {:e}",
            row.as_f64(),
            tol.row_sum
        )));
    }
    let top = symmetric_eigenvalues(&g).last().copied().unwrap_or(T::zero());
    if top > T::lit(tol.definiteness) * scale {
        return Err(Error::Invariant(format!(
            "pore {pore}: DtN has positive eigenvalue {:e}",
            top.as_f64()
        )));
    }
    for k in 0..m {
        for r in 0..m {
            if k != r && g[(k, r)] < -T::lit(tol.symmetry) * scale {
                warn!(
                    "pore {pore}: negative off-diagonal DtN entry {:e} between faces {} and {}",
                    g[(k, r)].as_f64(),
                    sub.faces[k].kind,
                    sub.faces[r].kind
                );
            }
        }
    }
    Ok(DtNMap {
        pore_id: pore,
        g,
        faces: sub.face_kinds(),
        n_unknown: sub.n_unknown,
        asymmetry,
        scale,
    })
}

/// Superposes the unit responses with tractions `p`.
pub fn reconstruct<T: Real>(space: &Arc<FESpace<T>>, responses: &UnitResponses<T>, p: &[T]) -> Result<FlowField<T>> {
    if p.len() != responses.velocity.len() {
        return Err(Error::InvalidArgument(format!(
            "pore {}: {} tractions for {} faces",
            responses.pore_id,
            p.len(),
            responses.velocity.len()
        )));
    }
    let mut u = vec![T::zero(); space.n_u];
    let mut pr = vec![T::zero(); space.n_p];
    for (r, &pr_r) in p.iter().enumerate() {
        for (a, &b) in u.iter_mut().zip(&responses.velocity[r]) {
            *a += pr_r * b;
        }
        for (a, &b) in pr.iter_mut().zip(&responses.pressure[r]) {
            *a += pr_r * b;
        }
    }
    Ok(FlowField::new(Arc::clone(space), u, pr))
}
