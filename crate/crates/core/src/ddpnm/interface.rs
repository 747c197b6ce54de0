use std::collections::BTreeMap;

use super::DtNMap;
use crate::error::{Error, Result};
use crate::mesh::FaceKind;
use crate::scalar::{vec_norm, Real};
use crate::sparse::{lanczos_ritz_values, CsrMatrix, Ldlt, TripletBuilder};

/// Local-to-global face numbering (the Boolean restrictions in index form).
#[derive(Debug, Clone, PartialEq)]
pub struct InterfaceIndexing<T> {
    /// Number of unknown interface tractions.
    pub m: usize,
    /// Interface id of each global unknown.
    pub interface_ids: Vec<usize>,
    /// Per pore: global unknown index of each local unknown face.
    pub unknown: Vec<Vec<usize>>,
    /// Per pore: global known index of each local known face.
    pub known: Vec<Vec<usize>>,
    /// Known tractions `p^k`.
    pub known_values: Vec<T>,
    /// Owner pore and kind of each known face.
    pub known_faces: Vec<(usize, FaceKind)>,
}

impl<T: Real> InterfaceIndexing<T> {
    /// Numbers interfaces by ascending id and known faces in pore order.
    pub fn new(maps: &[DtNMap<T>], p_in: T, p_out: T) -> Result<Self> {
        let mut ids = BTreeMap::new();
        for d in maps {
            for kind in &d.faces[..d.n_unknown] {
                if let FaceKind::Interface(a) = kind {
                    *ids.entry(*a).or_insert(0usize) += 1;
                }
            }
        }
        if let Some((a, n)) = ids.iter().find(|(_, &n)| n != 2) {
            return Err(Error::Mesh(format!("interface {} is shared by {n} pores, expected 2", a + 1)));
        }
        let interface_ids: Vec<usize> = ids.keys().copied().collect();
        let global: BTreeMap<usize, usize> = interface_ids.iter().enumerate().map(|(g, &a)| (a, g)).collect();
        let mut unknown = Vec::with_capacity(maps.len());
        let mut known = Vec::with_capacity(maps.len());
        let mut known_values = Vec::new();
        let mut known_faces = Vec::new();
        for d in maps {
            let mut u = Vec::with_capacity(d.n_unknown);
            let mut k = Vec::new();
            for (r, kind) in d.faces.iter().enumerate() {
                match (r < d.n_unknown, kind) {
                    (true, FaceKind::Interface(a)) => u.push(global[a]),
                    (false, FaceKind::Inlet) | (false, FaceKind::Outlet) => {
                        k.push(known_values.len());
                        known_values.push(if *kind == FaceKind::Inlet { p_in } else { p_out });
                        known_faces.push((d.pore_id, *kind));
                    }
                    _ => {
                        return Err(Error::Mesh(format!(
                            "pore {}: face {kind} out of order",
                            d.pore_id
                        )))
                    }
                }
            }
            unknown.push(u);
            known.push(k);
        }
        Ok(InterfaceIndexing {
            m: interface_ids.len(),
            interface_ids,
            unknown,
            known,
            known_values,
            known_faces,
        })
    }

    /// Local traction vector of pore `i` (unknown faces first, then known).
    pub fn local_tractions(&self, i: usize, p: &[T]) -> Vec<T> {
        self.unknown[i]
            .iter()
            .map(|&g| p[g])
            .chain(self.known[i].iter().map(|&k| self.known_values[k]))
            .collect()
    }
}

/// Interface Schur complement `S p = F`.
#[derive(Debug, Clone)]
pub struct SchurSystem<T> {
    pub s: CsrMatrix<T>,
    pub f: Vec<T>,
    factor: Ldlt<T>,
}

impl<T: Real> SchurSystem<T> {
    pub fn dim(&self) -> usize {
        self.f.len()
    }

    /// Smallest Ritz value after `steps` Lanczos iterations from a fixed
    /// start vector.
    pub fn smallest_ritz_value(&self, steps: usize) -> T {
        let n = self.dim();
        let start: Vec<T> = (0..n).map(|i| T::one() + T::lit(((i * 7919) % 97) as f64 / 97.0)).collect();
        lanczos_ritz_values(|v| self.s.mul_vec(v), &start, steps)
            .first()
            .copied()
            .unwrap_or(T::zero())
    }
}

/// `S = −Σ Rᵀ G^uu R`, `F = Σ Rᵀ G^uk p^k` summed in pore order, then
/// checked positive definite by an LDLᵀ factorization.
pub fn assemble_schur<T: Real>(maps: &[DtNMap<T>], idx: &InterfaceIndexing<T>) -> Result<SchurSystem<T>> {
    let m = idx.m;
    if m == 0 {
        return Err(Error::InvalidArgument("no interface unknowns".into()));
    }
    let mut s = TripletBuilder::new(m, m);
    let mut f = vec![T::zero(); m];
    for (i, d) in maps.iter().enumerate() {
        let nu = d.n_unknown;
        for (k, &gk) in idx.unknown[i].iter().enumerate() {
            for (r, &gr) in idx.unknown[i].iter().enumerate() {
                s.push(gk, gr, -d.g[(k, r)]);
            }
            for (r, &kr) in idx.known[i].iter().enumerate() {
                f[gk] += d.g[(k, nu + r)] * idx.known_values[kr];
            }
        }
    }
    let s = s.build();
    let factor = Ldlt::factor(&s, None)?;
    let (pos, neg) = factor.inertia();
    if neg != 0 {
        return Err(Error::Singular(format!(
            "Schur complement is not positive definite ({pos} positive, {neg} non-positive pivots)"
        )));
    }
    Ok(SchurSystem { s, f, factor })
}

/// Solves `S p = F` by the Cholesky-type factorization with iterative
/// refinement to `‖Sp − F‖ ≤ tol·‖F‖`.
pub fn solve_interface<T: Real>(sys: &SchurSystem<T>, tol: T) -> Result<(Vec<T>, T)> {
    let fnorm = vec_norm(&sys.f);
    if fnorm == T::zero() {
        return Ok((vec![T::zero(); sys.dim()], T::zero()));
    }
    let mut p = sys.factor.solve(&sys.f);
    let mut rel = T::infinity();
    for _ in 0..10 {
        let sp = sys.s.mul_vec(&p);
        let r: Vec<T> = sys.f.iter().zip(&sp).map(|(&a, &b)| a - b).collect();
        rel = vec_norm(&r) / fnorm;
        if rel <= tol {
            return Ok((p, rel));
        }
        for (a, b) in p.iter_mut().zip(sys.factor.solve(&r)) {
            *a += b;
        }
    }
    Err(Error::NonConvergence(format!(
        "interface residual {:e} above {:e}",
        rel.as_f64(),
        tol.as_f64()
    )))
}
