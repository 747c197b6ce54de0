//! Classical pore network: Hagen–Poiseuille slot conductances on the
//! extracted topology, Dirichlet pressures at boundary pores, nodal mass
//! balance for the rest.

use std::path::Path;

use log::warn;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{GeometrySpec, NetworkTopology};
use crate::scalar::{Real, Vec2};
use crate::sparse::{Ldlt, TripletBuilder};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PoreRole {
    Interior,
    Inlet,
    Outlet,
}

#[derive(Debug, Clone, PartialEq)]
pub struct NetworkPore<T> {
    pub position: Vec2<T>,
    pub role: PoreRole,
}

#[derive(Debug, Clone, PartialEq)]
pub struct NetworkThroat<T> {
    pub pores: (usize, usize),
    pub conductance: T,
    pub length: T,
    pub width: T,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PoreNetwork<T> {
    pub pores: Vec<NetworkPore<T>>,
    pub throats: Vec<NetworkThroat<T>>,
    pub p_in: T,
    pub p_out: T,
}

#[derive(Debug, Clone, PartialEq)]
pub struct NetworkSolution<T> {
    pub pressures: Vec<T>,
    /// `q_ij = −g_ij (p̄_i − p̄_j)` per throat `(i, j)`.
    pub fluxes: Vec<T>,
}

/// Planar Poiseuille slot conductance `w³ / (12 μ L)`.
pub fn conductance_2d<T: Real>(w: T, l: T, mu: T) -> Result<T> {
    if !(w > T::zero() && l > T::zero() && mu > T::zero()) || !(w * l * mu).is_finite() {
        return Err(Error::InvalidArgument(format!(
            "conductance needs positive width, length and viscosity (got {w}, {l}, {mu})"
        )));
    }
    Ok(w * w * w / (T::lit(12.0) * mu * l))
}

impl<T: Real> PoreNetwork<T> {
    /// Geometric network of an extracted topology; the viscosity is `spec.nu`.
    pub fn from_topology(topo: &NetworkTopology<T>, spec: &GeometrySpec<T>) -> Result<Self> {
        let mut pores = Vec::with_capacity(topo.pores.len());
        for (i, p) in topo.pores.iter().enumerate() {
            let role = match (p.touches_inlet, p.touches_outlet) {
                (true, true) => {
                    return Err(Error::Network(format!("pore {i} touches both inlet and outlet")));
                }
                (true, false) => PoreRole::Inlet,
                (false, true) => PoreRole::Outlet,
                (false, false) => PoreRole::Interior,
            };
            pores.push(NetworkPore {
                position: p.position,
                role,
            });
        }
        let throats = topo
            .throats
            .iter()
            .map(|t| {
                Ok(NetworkThroat {
                    pores: t.pores,
                    conductance: conductance_2d(t.width, t.length, spec.nu)?,
                    length: t.length,
                    width: t.width,
                })
            })
            .collect::<Result<_>>()?;
        Ok(PoreNetwork {
            pores,
            throats,
            p_in: spec.p_in,
            p_out: spec.p_out,
        })
    }

    fn boundary_pressure(&self, role: PoreRole) -> Option<T> {
        match role {
            PoreRole::Inlet => Some(self.p_in),
            PoreRole::Outlet => Some(self.p_out),
            PoreRole::Interior => None,
        }
    }

    /// Writes `pores.csv` and `throats.csv` into `dir`.
    pub fn write_csv(&self, dir: &Path) -> Result<()> {
        let mut rows = Vec::new();
        for (i, p) in self.pores.iter().enumerate() {
            rows.push(PoreRow {
                id: i,
                x: p.position[0].as_f64(),
                y: p.position[1].as_f64(),
                role: p.role,
            });
        }
        write_rows(&dir.join("pores.csv"), &rows)?;
        let rows: Vec<ThroatRow> = self
            .throats
            .iter()
            .map(|t| ThroatRow {
                i: t.pores.0,
                j: t.pores.1,
                g: t.conductance.as_f64(),
                length: t.length.as_f64(),
                w: t.width.as_f64(),
            })
            .collect();
        write_rows(&dir.join("throats.csv"), &rows)
    }
}

#[derive(Serialize)]
struct PoreRow {
    id: usize,
    x: f64,
    y: f64,
    role: PoreRole,
}

#[derive(Serialize)]
struct ThroatRow {
    i: usize,
    j: usize,
    g: f64,
    #[serde(rename = "L")]
    length: f64,
    w: f64,
}

#[derive(Serialize)]
struct PressureRow {
    id: usize,
    pressure: f64,
}

#[derive(Serialize)]
struct FluxRow {
    i: usize,
    j: usize,
    flux: f64,
}

/// Serializes `rows` as CSV with a header line.
pub fn write_rows<R: Serialize>(path: &Path, rows: &[R]) -> Result<()> {
    let io = |e: csv::Error| match e.into_kind() {
        csv::ErrorKind::Io(e) => Error::io(path, e),
        other => Error::InvalidArgument(format!("csv: {other:?}")),
    };
    let mut w = csv::Writer::from_path(path).map_err(io)?;
    for r in rows {
        w.serialize(r).map_err(io)?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

impl<T: Real> NetworkSolution<T> {
    /// Writes `pressures.csv` and `fluxes.csv` into `dir`.
    pub fn write_csv(&self, net: &PoreNetwork<T>, dir: &Path) -> Result<()> {
        let rows: Vec<PressureRow> = self
            .pressures
            .iter()
            .enumerate()
            .map(|(id, p)| PressureRow { id, pressure: p.as_f64() })
            .collect();
        write_rows(&dir.join("pressures.csv"), &rows)?;
        let rows: Vec<FluxRow> = net
            .throats
            .iter()
            .zip(&self.fluxes)
            .map(|(t, q)| FluxRow {
                i: t.pores.0,
                j: t.pores.1,
                flux: q.as_f64(),
            })
            .collect();
        write_rows(&dir.join("fluxes.csv"), &rows)
    }

    /// `Σ_j q_ij` at every pore, with `q_ji = −q_ij`.
    pub fn net_fluxes(&self, net: &PoreNetwork<T>) -> Vec<T> {
        let mut s = vec![T::zero(); net.pores.len()];
        for (t, &q) in net.throats.iter().zip(&self.fluxes) {
            s[t.pores.0] += q;
            s[t.pores.1] -= q;
        }
        s
    }
}

fn find(parent: &mut [usize], mut i: usize) -> usize {
    while parent[i] != i {
        parent[i] = parent[parent[i]];
        i = parent[i];
    }
    i
}

/// Solves the reduced graph-Laplacian system for the interior pressures and
/// checks the discrete maximum principle.
pub fn solve_network<T: Real>(net: &PoreNetwork<T>) -> Result<NetworkSolution<T>> {
    let n = net.pores.len();
    let has = |r: PoreRole| net.pores.iter().any(|p| p.role == r);
    if !has(PoreRole::Inlet) || !has(PoreRole::Outlet) {
        return Err(Error::Network("network needs at least one inlet and one outlet pore".into()));
    }
    let mut active = Vec::with_capacity(net.throats.len());
    let mut parent: Vec<usize> = (0..n).collect();
    for (k, t) in net.throats.iter().enumerate() {
        let (i, j) = t.pores;
        if i >= n || j >= n || i == j {
            return Err(Error::Network(format!("throat {k} has invalid pores ({i}, {j})")));
        }
        if !(t.conductance >= T::zero()) || !t.conductance.is_finite() {
            return Err(Error::Network(format!("throat {k} has conductance {}", t.conductance)));
        }
        if t.conductance == T::zero() {
            warn!("dropping zero-conductance throat {k} ({i}, {j})");
            continue;
        }
        active.push(k);
        let (a, b) = (find(&mut parent, i), find(&mut parent, j));
        parent[a] = b;
    }
    let mut comp_boundary = vec![false; n];
    let mut comp_in = vec![false; n];
    let mut comp_out = vec![false; n];
    for (i, p) in net.pores.iter().enumerate() {
        let c = find(&mut parent, i);
        comp_boundary[c] |= p.role != PoreRole::Interior;
        comp_in[c] |= p.role == PoreRole::Inlet;
        comp_out[c] |= p.role == PoreRole::Outlet;
    }
    if !(0..n).any(|c| comp_in[c] && comp_out[c]) {
        return Err(Error::Network("no throat path connects the inlet to the outlet".into()));
    }
    for i in 0..n {
        let c = find(&mut parent, i);
        if !comp_boundary[c] {
            return Err(Error::Network(format!(
                "pore {i} lies in a component without boundary pores"
            )));
        }
    }

    let mut unknown = vec![usize::MAX; n];
    let mut m = 0;
    for (i, p) in net.pores.iter().enumerate() {
        if p.role == PoreRole::Interior {
            unknown[i] = m;
            m += 1;
        }
    }
    let mut pressures: Vec<T> = net
        .pores
        .iter()
        .map(|p| net.boundary_pressure(p.role).unwrap_or(T::zero()))
        .collect();
    if m > 0 {
        let mut lap = TripletBuilder::new(m, m);
        let mut rhs = vec![T::zero(); m];
        for &k in &active {
            let t = &net.throats[k];
            let (i, j) = t.pores;
            let g = t.conductance;
            for (a, b) in [(i, j), (j, i)] {
                if unknown[a] == usize::MAX {
                    continue;
                }
                lap.push(unknown[a], unknown[a], g);
                if unknown[b] == usize::MAX {
                    rhs[unknown[a]] += g * pressures[b];
                } else {
                    lap.push(unknown[a], unknown[b], -g);
                }
            }
        }
        let lap = lap.build();
        let fact = Ldlt::factor(&lap, None)?;
        if fact.inertia().1 != 0 {
            return Err(Error::Singular("network Laplacian is not positive definite".into()));
        }
        let mut x = fact.solve(&rhs);
        // One refinement step keeps the balance at round-off level.
        let r: Vec<T> = rhs.iter().zip(lap.mul_vec(&x)).map(|(&b, ax)| b - ax).collect();
        for (a, d) in x.iter_mut().zip(fact.solve(&r)) {
            *a += d;
        }
        for (i, &u) in unknown.iter().enumerate() {
            if u != usize::MAX {
                pressures[i] = x[u];
            }
        }
    }
    let fluxes = net
        .throats
        .iter()
        .map(|t| -t.conductance * (pressures[t.pores.0] - pressures[t.pores.1]))
        .collect();

    let lo = net.p_in.min(net.p_out);
    let hi = net.p_in.max(net.p_out);
    let slack = T::lit(1e-12) * (hi - lo).abs().max(hi.abs()).max(T::min_positive_value());
    if let Some((i, p)) = pressures.iter().enumerate().find(|(_, &p)| p < lo - slack || p > hi + slack) {
        return Err(Error::Invariant(format!(
            "pore {i} pressure {p} outside boundary range [{lo}, {hi}]"
        )));
    }
    Ok(NetworkSolution { pressures, fluxes })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn series(g1: f64, g2: f64) -> PoreNetwork<f64> {
        let pore = |x: f64, role| NetworkPore { position: [x, 0.0], role };
        let throat = |i, j, g| NetworkThroat {
            pores: (i, j),
            conductance: g,
            length: 1.0,
            width: 1.0,
        };
        PoreNetwork {
            pores: vec![pore(0.0, PoreRole::Inlet), pore(1.0, PoreRole::Interior), pore(2.0, PoreRole::Outlet)],
            throats: vec![throat(0, 1, g1), throat(1, 2, g2)],
            p_in: 1.0,
            p_out: 0.0,
        }
    }

    #[test]
    fn conductance_examples() {
        assert!((conductance_2d(1.0f64, 1.0, 1.0).unwrap() - 1.0 / 12.0).abs() < 1e-16);
        assert!((conductance_2d(0.5f64, 2.0, 1.0).unwrap() - 0.125 / 24.0).abs() < 1e-16);
        assert!(conductance_2d(0.0, 1.0, 1.0).is_err());
    }

    #[test]
    fn equal_series_splits_pressure() {
        let s = solve_network(&series(2.0, 2.0)).unwrap();
        assert!((s.pressures[1] - 0.5).abs() < 1e-15);
        assert!((s.fluxes[0] + 1.0).abs() < 1e-15);
    }

    #[test]
    fn missing_outlet_is_an_error() {
        let mut net = series(1.0, 1.0);
        net.pores[2].role = PoreRole::Interior;
        assert!(matches!(solve_network(&net), Err(Error::Network(_))));
    }
}
