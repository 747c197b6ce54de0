use std::sync::Arc;

use log::{debug, warn};
use serde::{Deserialize, Serialize};

use super::assemble::lumped_pressure_mass;
use super::{FlowField, StokesOperators};
use crate::error::{Error, Result};
use crate::scalar::{vec_norm, Real};
use crate::sparse::{amd_ordering, pcg, CsrMatrix, Ldlt, TripletBuilder};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum SaddleMethod {
    /// Sparse LDLᵀ of the regularized saddle matrix plus iterative
    /// refinement on the exact one.
    #[default]
    Direct,
    /// Conjugate gradients on the pressure Schur complement with direct
    /// velocity solves.
    PressureSchurCg,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SaddleOptions {
    pub method: SaddleMethod,
    /// Relative residual required of every solve.
    pub tol: f64,
    pub max_refinement_steps: usize,
    pub max_cg_iterations: usize,
}

impl Default for SaddleOptions {
    fn default() -> Self {
        SaddleOptions {
            method: SaddleMethod::Direct,
            tol: 1e-10,
            max_refinement_steps: 20,
            max_cg_iterations: 5000,
        }
    }
}

/// Residual norms of a saddle solution.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SaddleResidual<T> {
    /// `‖AU + BᵀP − f‖ / ‖f‖`.
    pub momentum: T,
    /// `‖BU‖ / (max|B| · u_ref)` with `u_ref = max(‖U‖, ‖f‖ / max|A|)`, so
    /// that fields at rest are not judged against round-off.
    pub divergence: T,
}

enum Backend<T> {
    Direct { k: CsrMatrix<T>, ldlt: Ldlt<T> },
    Schur { a: Ldlt<T>, precond: Vec<T> },
}

/// Factorized saddle operator of one (sub)problem, reused across right-hand
/// sides.
pub struct SaddleSolver<'a, T> {
    ops: &'a StokesOperators<T>,
    opts: SaddleOptions,
    /// Pressure dof fixed to zero when no traction face fixes the gauge.
    pinned: Option<usize>,
    b_scale: T,
    backend: Backend<T>,
}

impl<'a, T: Real> SaddleSolver<'a, T> {
    pub fn new(ops: &'a StokesOperators<T>, opts: SaddleOptions) -> Result<Self> {
        let space = &ops.space;
        let pinned = (!space.has_traction_face && space.n_p > 0).then_some(0);
        let b_scale = ops.b.max_abs();
        let backend = match opts.method {
            SaddleMethod::Direct => match Self::direct(ops, pinned) {
                Ok(b) => b,
                Err(e) => {
                    warn!("direct saddle factorization failed ({e}); using pressure-Schur CG");
                    Self::schur(ops)?
                }
            },
            SaddleMethod::PressureSchurCg => Self::schur(ops)?,
        };
        Ok(SaddleSolver {
            ops,
            opts,
            pinned,
            b_scale,
            backend,
        })
    }

    fn direct(ops: &StokesOperators<T>, pinned: Option<usize>) -> Result<Backend<T>> {
        let space = &ops.space;
        let (n_u, n_p) = (space.n_u, space.n_p);
        let n = n_u + n_p;
        // Schur diagonal estimate sets the pressure regularization scale.
        let adiag = ops.a.diagonal();
        let mut s_est = T::zero();
        for q in 0..n_p {
            let s: T = ops.b.row(q).map(|(j, v)| v * v / adiag[j]).sum();
            s_est = s_est.max(s);
        }
        let delta = if s_est > T::zero() { s_est * T::lit(1e-9) } else { T::one() };

        let mut exact = TripletBuilder::with_capacity(n, n, ops.a.nnz() + 2 * ops.b.nnz() + n_p);
        let mut reg = TripletBuilder::with_capacity(n, n, ops.a.nnz() + 2 * ops.b.nnz() + n_p);
        for (r, c, v) in ops.a.triplets() {
            exact.push(r, c, v);
            reg.push(r, c, v);
        }
        for (q, j, v) in ops.b.triplets() {
            if Some(q) == pinned {
                continue;
            }
            for t in [&mut exact, &mut reg] {
                t.push(n_u + q, j, v);
                t.push(j, n_u + q, v);
            }
        }
        for q in 0..n_p {
            if Some(q) == pinned {
                exact.push(n_u + q, n_u + q, T::one());
                reg.push(n_u + q, n_u + q, T::one());
            } else {
                reg.push(n_u + q, n_u + q, -delta);
            }
        }
        let k = exact.build();
        let kreg = reg.build();
        let perm = saddle_ordering(space)?;
        let ldlt = Ldlt::factor(&kreg, Some(perm))?;
        let expected = (n_u + pinned.map_or(0, |_| 1), n_p - pinned.map_or(0, |_| 1));
        if ldlt.inertia() != expected {
            return Err(Error::Singular(format!(
                "saddle inertia {:?}, expected {:?}",
                ldlt.inertia(),
                expected
            )));
        }
        debug!("saddle LDLT: n = {n}, nnz(L) = {}", ldlt.nnz_l());
        Ok(Backend::Direct { k, ldlt })
    }

    fn schur(ops: &StokesOperators<T>) -> Result<Backend<T>> {
        let a = Ldlt::factor(&ops.a, None)?;
        if a.inertia().1 != 0 {
            return Err(Error::Singular("viscous matrix is not positive definite".into()));
        }
        let precond = lumped_pressure_mass(&ops.space).into_iter().map(|m| ops.nu / m).collect();
        Ok(Backend::Schur { a, precond })
    }

    pub fn options(&self) -> &SaddleOptions {
        &self.opts
    }

    /// Solves `AU + BᵀP = f`, `BU = 0`. Dirichlet entries of `f` are ignored.
    pub fn solve(&self, rhs_u: &[T]) -> Result<FlowField<T>> {
        let space = &self.ops.space;
        if rhs_u.len() != space.n_u {
            return Err(Error::InvalidArgument(format!(
                "rhs has length {}, expected {}",
                rhs_u.len(),
                space.n_u
            )));
        }
        let mut f = rhs_u.to_vec();
        space.zero_dirichlet(&mut f);
        let fnorm = vec_norm(&f);
        if fnorm == T::zero() {
            return Ok(FlowField::zero(Arc::clone(space)));
        }
        let (u, p) = match &self.backend {
            Backend::Direct { k, ldlt } => self.solve_direct(k, ldlt, &f)?,
            Backend::Schur { a, precond } => self.solve_schur(a, precond, &f)?,
        };
        let field = FlowField::new(Arc::clone(space), u, p);
        let res = self.residual(&field, &f);
        let tol = T::lit(self.opts.tol);
        if !(res.momentum <= tol && res.divergence <= tol) {
            return Err(Error::NonConvergence(format!(
                "saddle residuals {:e} (momentum), {:e} (divergence) exceed {:e}",
                res.momentum.as_f64(),
                res.divergence.as_f64(),
                self.opts.tol
            )));
        }
        Ok(field)
    }

    /// Relative residuals of `field` for the right-hand side `rhs_u`.
    pub fn residual(&self, field: &FlowField<T>, rhs_u: &[T]) -> SaddleResidual<T> {
        residual(self.ops, self.b_scale, field, rhs_u)
    }

    fn solve_direct(&self, k: &CsrMatrix<T>, ldlt: &Ldlt<T>, f: &[T]) -> Result<(Vec<T>, Vec<T>)> {
        let n_u = self.ops.space.n_u;
        let mut b = f.to_vec();
        b.resize(k.nrows(), T::zero());
        let mut x = ldlt.solve(&b);
        let target = T::lit(self.opts.tol) * T::lit(1e-3);
        let mut last = T::infinity();
        for step in 0..self.opts.max_refinement_steps {
            let kx = k.mul_vec(&x);
            let r: Vec<T> = b.iter().zip(&kx).map(|(&bi, &ki)| bi - ki).collect();
            let (ru, rp) = r.split_at(n_u);
            let mom = vec_norm(ru) / vec_norm(f);
            let div = vec_norm(rp) / (self.b_scale * velocity_scale(self.ops, &x[..n_u], f)).max(T::min_positive_value());
            let res = mom.max(div);
            if res <= target || (res >= last * T::lit(0.5) && res <= T::lit(self.opts.tol)) {
                debug!("saddle refinement converged after {step} steps ({:e})", res.as_f64());
                break;
            }
            last = res;
            let dx = ldlt.solve(&r);
            for (xi, di) in x.iter_mut().zip(dx) {
                *xi += di;
            }
        }
        let p = x.split_off(n_u);
        Ok((x, p))
    }

    fn solve_schur(&self, a: &Ldlt<T>, precond: &[T], f: &[T]) -> Result<(Vec<T>, Vec<T>)> {
        let ops = self.ops;
        let pinned = self.pinned;
        let mask = |v: &mut Vec<T>| {
            if let Some(q) = pinned {
                v[q] = T::zero();
            }
        };
        let apply = |p: &[T]| {
            let mut bt = ops.b.mul_vec_transpose(p);
            ops.space.zero_dirichlet(&mut bt);
            let mut out = ops.b.mul_vec(&a.solve(&bt));
            mask(&mut out);
            out
        };
        let mut g = ops.b.mul_vec(&a.solve(f));
        mask(&mut g);
        let mut p = vec![T::zero(); ops.space.n_p];
        let out = pcg(
            apply,
            |r: &[T]| r.iter().zip(precond).map(|(&ri, &mi)| ri * mi).collect(),
            &g,
            &mut p,
            T::lit(self.opts.tol * 1e-3),
            self.opts.max_cg_iterations,
        );
        if !out.converged {
            return Err(Error::NonConvergence(format!(
                "pressure-Schur CG stopped at relative residual {:e} after {} iterations",
                out.relative_residual.as_f64(),
                out.iterations
            )));
        }
        let bt = ops.b.mul_vec_transpose(&p);
        let rhs: Vec<T> = f.iter().zip(&bt).map(|(&fi, &bi)| fi - bi).collect();
        let u = a.solve(&rhs);
        Ok((u, p))
    }
}

pub(crate) fn residual<T: Real>(
    ops: &StokesOperators<T>,
    b_scale: T,
    field: &FlowField<T>,
    rhs_u: &[T],
) -> SaddleResidual<T> {
    let mut f = rhs_u.to_vec();
    ops.space.zero_dirichlet(&mut f);
    let au = ops.a.mul_vec(&field.u);
    let mut btp = ops.b.mul_vec_transpose(&field.p);
    ops.space.zero_dirichlet(&mut btp);
    let r: Vec<T> = (0..f.len()).map(|i| au[i] + btp[i] - f[i]).collect();
    let fnorm = vec_norm(&f);
    let momentum = if fnorm > T::zero() { vec_norm(&r) / fnorm } else { vec_norm(&r) };
    let bu = ops.b.mul_vec(&field.u);
    let uref = velocity_scale(ops, &field.u, &f);
    let divergence = if uref > T::zero() && b_scale > T::zero() {
        vec_norm(&bu) / (b_scale * uref)
    } else {
        vec_norm(&bu)
    };
    SaddleResidual { momentum, divergence }
}

fn velocity_scale<T: Real>(ops: &StokesOperators<T>, u: &[T], f: &[T]) -> T {
    vec_norm(u).max(vec_norm(f) / ops.a.max_abs())
}

/// Symmetric ordering for the quasi-definite saddle matrix: AMD on the
/// velocity-node graph, with each pressure dof placed right after the last
/// velocity node it couples to. Pressure pivots then see their full Schur
/// complement instead of the tiny regularization.
fn saddle_ordering<T: Real>(space: &super::FESpace<T>) -> Result<Vec<usize>> {
    let nn = space.n_nodes;
    let nt = space.mesh.num_triangles();
    let mut g = TripletBuilder::<f64>::with_capacity(nn, nn, nt * 36);
    for t in 0..nt {
        let nodes = space.element_nodes(t);
        for &i in &nodes {
            for &j in &nodes {
                g.push(i, j, 1.0);
            }
        }
    }
    let g = g.build();
    let node_order = amd_ordering(nn, g.indptr(), g.indices())?;
    let mut pos = vec![0usize; nn];
    for (k, &n) in node_order.iter().enumerate() {
        pos[n] = k;
    }
    let mut last = vec![0usize; space.n_p];
    for t in 0..nt {
        let nodes = space.element_nodes(t);
        let m = nodes.iter().map(|&n| pos[n]).max().unwrap_or(0);
        for &v in &space.mesh.triangles[t] {
            last[v] = last[v].max(m);
        }
    }
    let mut by_step: Vec<Vec<usize>> = vec![Vec::new(); nn];
    for (v, &k) in last.iter().enumerate() {
        by_step[k].push(v);
    }
    let mut perm = Vec::with_capacity(space.n_u + space.n_p);
    for (k, &n) in node_order.iter().enumerate() {
        perm.push(n);
        perm.push(nn + n);
        for &v in &by_step[k] {
            perm.push(space.n_u + v);
        }
    }
    Ok(perm)
}
