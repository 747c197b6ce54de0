//! Calibrated pore network from DtN maps: per-face half-throat conductances
//! from a masked nonnegative rank-1 fit of each map's off-diagonal part,
//! harmonic aggregation across interfaces, and recovery of the interface
//! tractions from the network solution.

use log::{info, warn};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::cpnm::{solve_network, NetworkPore, NetworkThroat, PoreNetwork, PoreRole};
use crate::ddpnm::{DtNMap, InterfaceIndexing};
use crate::ddpnm::{DdpnmReport, DdpnmSolution};
use crate::error::{Error, Result};
use crate::mesh::FaceKind;
use crate::scalar::{Real, Vec2};
use crate::sparse::{symmetric_eigenvalues, DenseMatrix};

/// Nonnegative off-diagonal target `T = max(Off(G), 0)` of one pore.
#[derive(Debug, Clone, PartialEq)]
pub struct CalibrationTarget<T> {
    pub pore_id: usize,
    pub t: DenseMatrix<T>,
    /// Largest magnitude of a clamped negative entry (0 if none).
    pub clamped: T,
}

impl<T: Real> CalibrationTarget<T> {
    pub fn from_dtn(map: &DtNMap<T>) -> Self {
        let mut t = Self::from_matrix(map.pore_id, &map.g);
        if t.clamped > T::zero() {
            warn!(
                "pore {}: clamped negative off-diagonal DtN entries (largest magnitude {:e})",
                map.pore_id,
                t.clamped.as_f64()
            );
        }
        t.pore_id = map.pore_id;
        t
    }

    /// Target from any square matrix: diagonal zeroed, symmetrized, negative
    /// entries clamped to zero.
    pub fn from_matrix(pore_id: usize, g: &DenseMatrix<T>) -> Self {
        let m = g.nrows();
        let mut clamped = T::zero();
        let half = T::lit(0.5);
        let mut t = DenseMatrix::zeros(m, m);
        for i in 0..m {
            for j in 0..m {
                if i != j {
                    let v = (g[(i, j)] + g[(j, i)]) * half;
                    clamped = clamped.max(-v);
                    t[(i, j)] = v.max(T::zero());
                }
            }
        }
        CalibrationTarget { pore_id, t, clamped }
    }

    pub fn m(&self) -> usize {
        self.t.nrows()
    }

    /// `‖T‖_{F,off}`.
    pub fn off_norm(&self) -> T {
        self.t.frobenius_norm()
    }
}

/// `G*(D) = D − D11ᵀD / (1ᵀD1)` for `D = diag(g)`.
pub fn gi_star<T: Real>(g: &[T]) -> Result<DenseMatrix<T>> {
    if g.iter().any(|&x| !(x >= T::zero()) || !x.is_finite()) {
        return Err(Error::InvalidArgument("conductances must be finite and nonnegative".into()));
    }
    let total: T = g.iter().copied().sum();
    if total == T::zero() {
        return Err(Error::InvalidArgument("all conductances are zero".into()));
    }
    let m = g.len();
    Ok(DenseMatrix::from_fn(m, m, |i, j| {
        let d = if i == j { g[i] } else { T::zero() };
        d - g[i] * g[j] / total
    }))
}

/// `f(x) = Σ_{r≠s} (x_r x_s − T_rs)²`.
fn objective<T: Real>(t: &DenseMatrix<T>, x: &[T]) -> T {
    let m = x.len();
    let mut f = T::zero();
    for r in 0..m {
        for s in 0..m {
            if r != s {
                let d = x[r] * x[s] - t[(r, s)];
                f += d * d;
            }
        }
    }
    f
}

/// `∇f(x)_k = 4 Σ_{s≠k} (x_k x_s − T_ks) x_s`.
fn gradient<T: Real>(t: &DenseMatrix<T>, x: &[T]) -> Vec<T> {
    let m = x.len();
    let four = T::lit(4.0);
    (0..m)
        .map(|k| {
            let mut g = T::zero();
            for s in 0..m {
                if s != k {
                    g += (x[k] * x[s] - t[(k, s)]) * x[s];
                }
            }
            four * g
        })
        .collect()
}

/// Perron-vector initializer `x⁰ = √α* v` with `M₀ = vvᵀ/(1ᵀv)` and `α*` the
/// best off-diagonal multiple of `M₀`.
///
/// The power iteration runs on `T + sI` with `s = −λ_min(T)`, which makes the
/// Perron root dominant; plain power iteration oscillates on bipartite `T`.
pub fn perron_init<T: Real>(target: &CalibrationTarget<T>) -> Result<Vec<T>> {
    let t = &target.t;
    let m = target.m();
    if target.off_norm() == T::zero() {
        return Err(Error::InvalidArgument(format!(
            "pore {}: calibration target has no nonzero off-diagonal entry",
            target.pore_id
        )));
    }
    let shift = -symmetric_eigenvalues(t).first().copied().unwrap_or(T::zero()).min(T::zero());
    let mut v = vec![T::one() / T::lit(m as f64).sqrt(); m];
    let mut converged = false;
    for _ in 0..10_000 {
        let mut w = t.mul_vec(&v);
        for (wi, &vi) in w.iter_mut().zip(&v) {
            *wi += shift * vi;
        }
        let n = w.iter().map(|&a| a * a).sum::<T>().sqrt();
        if n == T::zero() {
            break;
        }
        w.iter_mut().for_each(|a| *a /= n);
        let change = w.iter().zip(&v).map(|(&a, &b)| (a - b) * (a - b)).sum::<T>().sqrt();
        v = w;
        if change <= T::lit(1e-12) {
            converged = true;
            break;
        }
    }
    if !converged {
        return Err(Error::NonConvergence(format!(
            "pore {}: Perron power iteration did not converge",
            target.pore_id
        )));
    }
    let sum: T = v.iter().copied().sum();
    if sum <= T::zero() {
        return Err(Error::NonConvergence(format!(
            "pore {}: Perron vector has zero sum",
            target.pore_id
        )));
    }
    let (mut num, mut den) = (T::zero(), T::zero());
    for r in 0..m {
        for s in 0..m {
            if r != s {
                let m0 = v[r] * v[s] / sum;
                num += t[(r, s)] * m0;
                den += m0 * m0;
            }
        }
    }
    let alpha = (num / den).max(T::zero());
    Ok(v.iter().map(|&vi| (alpha.sqrt() * vi).max(T::zero())).collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct FitOptions {
    pub max_iters: usize,
    /// Stop when the relative objective change falls below this.
    pub tol: f64,
    /// Armijo sufficient-decrease constant.
    pub armijo: f64,
    /// Backtracking factor.
    pub backtrack: f64,
}

impl Default for FitOptions {
    fn default() -> Self {
        FitOptions {
            max_iters: 5000,
            tol: 1e-10,
            armijo: 1e-4,
            backtrack: 0.5,
        }
    }
}

/// Result of the rank-1 fit of one pore.
#[derive(Debug, Clone, PartialEq)]
pub struct HalfThroatFit<T> {
    pub pore_id: usize,
    /// Half-throat conductances `g = (1ᵀx) x`.
    pub g: Vec<T>,
    pub x: Vec<T>,
    /// Objective after every accepted step, starting with the initializer.
    pub history: Vec<T>,
    pub iterations: usize,
    pub converged: bool,
}

impl<T: Real> HalfThroatFit<T> {
    pub fn objective(&self) -> T {
        self.history.last().copied().unwrap_or(T::zero())
    }
}

/// Projected descent with Armijo backtracking on
/// `min_{x≥0} ‖xxᵀ − T‖²_{F,off}`.
///
/// Each iteration tries a damped Gauss-Newton direction, then the gradient
/// scaled by its Gauss-Newton diagonal; both are projected onto `x ≥ 0` and
/// must pass the Armijo test against the true gradient, so the objective
/// never increases.
///
/// The iteration runs on `T/τ` with `τ = max T` so the unit trial step is
/// meaningful for any conductance scale; `x` and the history are reported
/// in the original units.
pub fn fit_half_throats<T: Real>(target: &CalibrationTarget<T>, opts: &FitOptions) -> Result<HalfThroatFit<T>> {
    let m = target.m();
    let tau = (0..m)
        .flat_map(|i| (0..m).map(move |j| (i, j)))
        .map(|(i, j)| target.t[(i, j)])
        .fold(T::zero(), T::max);
    if tau == T::zero() {
        return Ok(HalfThroatFit {
            pore_id: target.pore_id,
            g: vec![T::zero(); m],
            x: vec![T::zero(); m],
            history: vec![T::zero()],
            iterations: 0,
            converged: true,
        });
    }
    let scaled = CalibrationTarget {
        pore_id: target.pore_id,
        t: DenseMatrix::from_fn(m, m, |i, j| target.t[(i, j)] / tau),
        clamped: T::zero(),
    };
    let x0 = perron_init(&scaled)?;
    let (x, hist, iters, conv) = match pgd(&scaled.t, x0.clone(), opts)? {
        Some(r) => r,
        None => {
            warn!("pore {}: fit collapsed to zero, restarting from a perturbed start", target.pore_id);
            let x1: Vec<T> = x0
                .iter()
                .enumerate()
                .map(|(k, &v)| v * (T::one() + T::lit(0.1 * ((k % 3) as f64 + 1.0))) + T::lit(1e-3))
                .collect();
            pgd(&scaled.t, x1, opts)?.ok_or_else(|| {
                Error::NonConvergence(format!("pore {}: fit collapsed to zero twice", target.pore_id))
            })?
        }
    };
    let root = tau.sqrt();
    let x: Vec<T> = x.iter().map(|&v| v * root).collect();
    let sum: T = x.iter().copied().sum();
    let g = x.iter().map(|&v| sum * v).collect();
    Ok(HalfThroatFit {
        pore_id: target.pore_id,
        g,
        x,
        history: hist.into_iter().map(|f| f * tau * tau).collect(),
        iterations: iters,
        converged: conv,
    })
}

/// Gradient scaled by the Gauss-Newton diagonal `4 Σ_{s≠k} x_s²`.
fn scaled_gradient<T: Real>(x: &[T], g: &[T]) -> Option<Vec<T>> {
    let sq: T = x.iter().map(|&v| v * v).sum();
    Some(
        x.iter()
            .zip(g)
            .map(|(&xk, &gk)| gk / (T::lit(4.0) * (sq - xk * xk)).max(T::lit(1e-12)))
            .collect(),
    )
}

/// Damped Gauss-Newton direction for the residuals `x_r x_s − T_rs`,
/// `r < s`, in the sign convention `x − step·d`. With fewer residuals than
/// unknowns (two faces) the minimum-norm form `Jᵀ(JJᵀ + μI)⁻¹ r` is used.
/// `None` if the small system is not SPD.
fn gauss_newton_direction<T: Real>(t: &DenseMatrix<T>, x: &[T]) -> Option<Vec<T>> {
    let m = x.len();
    let pairs: Vec<(usize, usize)> = (0..m).flat_map(|r| (r + 1..m).map(move |s| (r, s))).collect();
    let p = pairs.len();
    let jac = DenseMatrix::from_fn(p, m, |q, k| {
        let (r, s) = pairs[q];
        if k == r {
            x[s]
        } else if k == s {
            x[r]
        } else {
            T::zero()
        }
    });
    let res: Vec<T> = pairs.iter().map(|&(r, s)| x[r] * x[s] - t[(r, s)]).collect();
    let damped = |mut a: DenseMatrix<T>| {
        let n = a.nrows();
        let trace: T = (0..n).map(|k| a[(k, k)]).sum();
        let mu = T::lit(1e-10) * trace / T::lit(n as f64) + T::min_positive_value();
        for k in 0..n {
            a[(k, k)] += mu;
        }
        a
    };
    let jt = jac.transpose();
    if p >= m {
        let a = DenseMatrix::from_fn(m, m, |k, l| (0..p).map(|q| jac[(q, k)] * jac[(q, l)]).sum());
        cholesky_solve(damped(a), &jt.mul_vec(&res))
    } else {
        let a = DenseMatrix::from_fn(p, p, |q, w| (0..m).map(|k| jac[(q, k)] * jac[(w, k)]).sum());
        let y = cholesky_solve(damped(a), &res)?;
        Some(jt.mul_vec(&y))
    }
}

fn cholesky_solve<T: Real>(mut a: DenseMatrix<T>, b: &[T]) -> Option<Vec<T>> {
    let n = b.len();
    for j in 0..n {
        let mut d = a[(j, j)];
        for k in 0..j {
            d -= a[(j, k)] * a[(j, k)];
        }
        if !(d > T::zero()) {
            return None;
        }
        let d = d.sqrt();
        a[(j, j)] = d;
        for i in j + 1..n {
            let mut v = a[(i, j)];
            for k in 0..j {
                v -= a[(i, k)] * a[(j, k)];
            }
            a[(i, j)] = v / d;
        }
    }
    let mut y = b.to_vec();
    for i in 0..n {
        for k in 0..i {
            y[i] = y[i] - a[(i, k)] * y[k];
        }
        y[i] = y[i] / a[(i, i)];
    }
    for i in (0..n).rev() {
        for k in i + 1..n {
            y[i] = y[i] - a[(k, i)] * y[k];
        }
        y[i] = y[i] / a[(i, i)];
    }
    Some(y)
}

type PgdOutcome<T> = Option<(Vec<T>, Vec<T>, usize, bool)>;

/// Returns `None` if the iterate collapses to zero.
fn pgd<T: Real>(t: &DenseMatrix<T>, mut x: Vec<T>, opts: &FitOptions) -> Result<PgdOutcome<T>> {
    let mut f = objective(t, &x);
    let mut history = vec![f];
    let floor = T::lit(1e-30) * (T::one() + t.frobenius_norm().powi(2));
    let sigma = T::lit(opts.armijo);
    let beta = T::lit(opts.backtrack);
    let mut converged = false;
    let mut it = 0;
    while it < opts.max_iters {
        if !f.is_finite() {
            return Err(Error::NonConvergence("non-finite calibration objective".into()));
        }
        if f <= floor {
            converged = true;
            break;
        }
        let g = gradient(t, &x);
        let mut accepted = None;
        for dir in [gauss_newton_direction(t, &x), scaled_gradient(&x, &g)].into_iter().flatten() {
            let mut step = T::one();
            for _ in 0..60 {
                let trial: Vec<T> = x.iter().zip(&dir).map(|(&xi, &di)| (xi - step * di).max(T::zero())).collect();
                let decrease: T = g.iter().zip(trial.iter().zip(&x)).map(|(&gi, (&a, &b))| gi * (a - b)).sum();
                let ft = objective(t, &trial);
                // x = 0 is a stationary point of f; never step onto it.
                let collapsed = trial.iter().all(|&v| v == T::zero());
                if !collapsed && decrease < T::zero() && ft <= f + sigma * decrease {
                    accepted = Some((trial, ft));
                    break;
                }
                step *= beta;
            }
            if accepted.is_some() {
                break;
            }
        }
        let Some((trial, ft)) = accepted else {
            converged = true;
            break;
        };
        it += 1;
        if ft > f {
            return Err(Error::Invariant(format!(
                "calibration objective increased from {:e} to {:e}",
                f.as_f64(),
                ft.as_f64()
            )));
        }
        let rel = (f - ft) / f.max(T::min_positive_value());
        x = trial;
        f = ft;
        history.push(f);
        if x.iter().all(|&v| v == T::zero()) {
            return Ok(None);
        }
        if rel < T::lit(opts.tol) {
            converged = true;
            break;
        }
    }
    Ok(Some((x, history, it, converged)))
}

/// How faces on the inlet and outlet enter the calibrated network.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum BoundaryMode {
    /// Each boundary face links its pore to a fixed-pressure terminal through
    /// the fitted half-throat conductance.
    #[default]
    Terminal,
    /// Pores owning a boundary face take its pressure directly.
    PorePressure,
}

/// Calibrated network and the quantities recovered from it.
#[derive(Debug, Clone, PartialEq)]
pub struct CalibratedNetwork<T> {
    /// Pores first, then one terminal per boundary face in terminal mode.
    pub network: PoreNetwork<T>,
    pub n_pores: usize,
    /// Aggregated conductance per interface unknown (0 if a side is zero).
    pub interface_conductance: Vec<T>,
    pub pore_pressures: Vec<T>,
    /// Recovered traction per interface unknown.
    pub tractions: Vec<T>,
}

/// Builds and solves the calibrated network.
pub fn build_npnm<T: Real>(
    fits: &[HalfThroatFit<T>],
    idx: &InterfaceIndexing<T>,
    positions: &[Vec2<T>],
    p_in: T,
    p_out: T,
    mode: BoundaryMode,
) -> Result<CalibratedNetwork<T>> {
    let n = fits.len();
    if idx.unknown.len() != n || positions.len() != n {
        return Err(Error::InvalidArgument("fits, indexing and positions differ in pore count".into()));
    }
    // Both sides of each interface: (pore, half conductance).
    let mut sides: Vec<Vec<(usize, T)>> = vec![Vec::new(); idx.m];
    for (i, fit) in fits.iter().enumerate() {
        if fit.g.len() != idx.unknown[i].len() + idx.known[i].len() {
            return Err(Error::InvalidArgument(format!("pore {i}: fit length does not match its faces")));
        }
        for (k, &gk) in idx.unknown[i].iter().enumerate() {
            sides[gk].push((i, fit.g[k]));
        }
    }
    let mut pores: Vec<NetworkPore<T>> = positions
        .iter()
        .map(|&position| NetworkPore {
            position,
            role: PoreRole::Interior,
        })
        .collect();
    let mut throats = Vec::new();
    let mut interface_conductance = Vec::with_capacity(idx.m);
    for (a, s) in sides.iter().enumerate() {
        let [(i, gi), (j, gj)] = s[..] else {
            return Err(Error::InvalidArgument(format!(
                "interface {} lacks a fit on both sides",
                idx.interface_ids[a] + 1
            )));
        };
        if gi <= T::zero() || gj <= T::zero() {
            warn!("interface {}: zero half-throat conductance, throat dropped", idx.interface_ids[a] + 1);
            interface_conductance.push(T::zero());
            continue;
        }
        let g = T::one() / (T::one() / gi + T::one() / gj);
        interface_conductance.push(g);
        let dl = crate::scalar::dist(positions[i], positions[j]);
        throats.push(NetworkThroat {
            pores: (i.min(j), i.max(j)),
            conductance: g,
            length: dl,
            width: T::zero(),
        });
    }
    for (i, fit) in fits.iter().enumerate() {
        let nu = idx.unknown[i].len();
        for (r, &kr) in idx.known[i].iter().enumerate() {
            let role = if idx.known_faces[kr].1 == FaceKind::Inlet {
                PoreRole::Inlet
            } else {
                PoreRole::Outlet
            };
            match mode {
                BoundaryMode::Terminal => {
                    let g = fit.g[nu + r];
                    if g <= T::zero() {
                        warn!("pore {i}: zero conductance on boundary face, dropped");
                        continue;
                    }
                    pores.push(NetworkPore {
                        position: positions[i],
                        role,
                    });
                    throats.push(NetworkThroat {
                        pores: (i, pores.len() - 1),
                        conductance: g,
                        length: T::zero(),
                        width: T::zero(),
                    });
                }
                BoundaryMode::PorePressure => {
                    if pores[i].role != PoreRole::Interior && pores[i].role != role {
                        return Err(Error::Network(format!("pore {i} touches both inlet and outlet")));
                    }
                    pores[i].role = role;
                }
            }
        }
    }
    let network = PoreNetwork {
        pores,
        throats,
        p_in,
        p_out,
    };
    let sol = solve_network(&network)?;
    let pore_pressures = sol.pressures[..n].to_vec();
    let tractions = sides
        .iter()
        .map(|s| {
            let (i, gi) = s[0];
            let (j, gj) = s[1];
            let den = gi + gj;
            if den > T::zero() {
                (gi * pore_pressures[i] + gj * pore_pressures[j]) / den
            } else {
                T::nan()
            }
        })
        .collect();
    info!("calibrated network: {n} pores, {} throats", network.throats.len());
    Ok(CalibratedNetwork {
        network,
        n_pores: n,
        interface_conductance,
        pore_pressures,
        tractions,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TractionPair {
    /// 1-based interface label.
    pub id: usize,
    pub p_ddpnm: f64,
    pub p_npnm: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TractionComparison {
    /// Sorted by increasing DD-PNM traction.
    pub pairs: Vec<TractionPair>,
    /// `‖p_npnm − p_ddpnm‖ / ‖p_ddpnm‖`.
    pub rms_relative: f64,
    pub max_abs_deviation: f64,
    /// Spearman rank correlation.
    pub rank_correlation: f64,
}

/// Average ranks (ties share the mean rank).
fn ranks(v: &[f64]) -> Vec<f64> {
    let mut order: Vec<usize> = (0..v.len()).collect();
    order.sort_by(|&a, &b| v[a].total_cmp(&v[b]));
    let mut r = vec![0.0; v.len()];
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && v[order[j + 1]] == v[order[i]] {
            j += 1;
        }
        let avg = (i + j) as f64 / 2.0;
        for &k in &order[i..=j] {
            r[k] = avg;
        }
        i = j + 1;
    }
    r
}

/// Spearman correlation; 1 for identical inputs even if constant.
pub fn spearman(a: &[f64], b: &[f64]) -> f64 {
    if a == b {
        return 1.0;
    }
    let (ra, rb) = (ranks(a), ranks(b));
    let n = a.len() as f64;
    let (ma, mb) = (ra.iter().sum::<f64>() / n, rb.iter().sum::<f64>() / n);
    let mut cov = 0.0;
    let mut va = 0.0;
    let mut vb = 0.0;
    for (x, y) in ra.iter().zip(&rb) {
        cov += (x - ma) * (y - mb);
        va += (x - ma) * (x - ma);
        vb += (y - mb) * (y - mb);
    }
    if va == 0.0 || vb == 0.0 {
        return 0.0;
    }
    cov / (va * vb).sqrt()
}

/// Compares recovered and DD-PNM tractions per interface unknown.
pub fn compare_tractions<T: Real>(interface_ids: &[usize], npnm: &[T], ddpnm: &[T]) -> TractionComparison {
    let a: Vec<f64> = npnm.iter().map(|v| v.as_f64()).collect();
    let b: Vec<f64> = ddpnm.iter().map(|v| v.as_f64()).collect();
    let mut pairs: Vec<TractionPair> = interface_ids
        .iter()
        .zip(a.iter().zip(&b))
        .map(|(&id, (&pn, &pd))| TractionPair {
            id: id + 1,
            p_ddpnm: pd,
            p_npnm: pn,
        })
        .collect();
    pairs.sort_by(|x, y| x.p_ddpnm.total_cmp(&y.p_ddpnm).then(x.id.cmp(&y.id)));
    let diff: f64 = a.iter().zip(&b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt();
    let nb: f64 = b.iter().map(|y| y * y).sum::<f64>().sqrt();
    TractionComparison {
        pairs,
        rms_relative: if nb > 0.0 { diff / nb } else { diff },
        max_abs_deviation: a.iter().zip(&b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max),
        rank_correlation: spearman(&a, &b),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PoreFitReport {
    pub pore: usize,
    pub faces: Vec<String>,
    pub g: Vec<f64>,
    /// Last few objective values.
    pub objective_tail: Vec<f64>,
    /// `sqrt(f) / ‖T‖_{F,off}` at the end of the fit.
    pub relative_residual: f64,
    pub iterations: usize,
    pub converged: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CalibrationReport {
    pub boundary_mode: BoundaryMode,
    pub pores: Vec<PoreFitReport>,
    pub pore_pressures: Vec<f64>,
    pub comparison: TractionComparison,
}

/// Fits, calibrated network and traction comparison of one DD-PNM run.
#[derive(Debug, Clone)]
pub struct Calibration<T> {
    /// Face labels per pore, in DtN order.
    pub faces: Vec<Vec<FaceKind>>,
    pub targets: Vec<CalibrationTarget<T>>,
    pub fits: Vec<HalfThroatFit<T>>,
    pub network: CalibratedNetwork<T>,
    pub comparison: TractionComparison,
    pub mode: BoundaryMode,
}

/// Runs the full calibration on a DD-PNM solution. Pore positions are the
/// area centroids of the pore submeshes.
pub fn calibrate<T: Real>(
    dd: &DdpnmSolution<T>,
    opts: &FitOptions,
    mode: BoundaryMode,
) -> Result<Calibration<T>> {
    if dd.locals.is_empty() {
        return Err(Error::InvalidArgument("calibration needs a DD-PNM run with interfaces".into()));
    }
    let maps: Vec<DtNMap<T>> = dd.locals.iter().map(|l| l.dtn.clone()).collect();
    let positions: Vec<Vec2<T>> = dd.locals.iter().map(|l| l.sub.mesh.centroid()).collect();
    calibrate_maps(&maps, &dd.indexing, &positions, &dd.tractions, dd.p_in, dd.p_out, opts, mode)
}

/// Calibration from a saved DD-PNM report (maps, face labels, centroids and
/// tractions).
pub fn calibrate_report(
    report: &DdpnmReport,
    opts: &FitOptions,
    mode: BoundaryMode,
) -> Result<Calibration<f64>> {
    if report.fallback || report.pores.is_empty() {
        return Err(Error::InvalidArgument("report has no interfaces to calibrate".into()));
    }
    let mut maps = Vec::with_capacity(report.pores.len());
    for pr in &report.pores {
        let faces: Vec<FaceKind> = pr.faces.iter().map(|f| f.parse()).collect::<Result<_>>()?;
        let m = faces.len();
        if pr.g.len() != m || pr.g.iter().any(|r| r.len() != m) {
            return Err(Error::parse("report", format!("pore {}: G is not {m}x{m}", pr.pore)));
        }
        let n_unknown = faces.iter().take_while(|f| !f.is_known()).count();
        let g = DenseMatrix::from_rows(&pr.g);
        maps.push(DtNMap {
            pore_id: pr.pore,
            scale: g.frobenius_norm(),
            g,
            faces,
            n_unknown,
            asymmetry: 0.0,
        });
    }
    let (p_in, p_out) = (report.p_in, report.p_out);
    let indexing = InterfaceIndexing::new(&maps, p_in, p_out)?;
    if indexing.m != report.tractions.len() {
        return Err(Error::parse(
            "report",
            format!("{} tractions for {} interfaces", report.tractions.len(), indexing.m),
        ));
    }
    let positions: Vec<Vec2<f64>> = report.pores.iter().map(|p| p.centroid).collect();
    calibrate_maps(&maps, &indexing, &positions, &report.tractions, p_in, p_out, opts, mode)
}

#[allow(clippy::too_many_arguments)]
fn calibrate_maps<T: Real>(
    maps: &[DtNMap<T>],
    indexing: &InterfaceIndexing<T>,
    positions: &[Vec2<T>],
    ddpnm_tractions: &[T],
    p_in: T,
    p_out: T,
    opts: &FitOptions,
    mode: BoundaryMode,
) -> Result<Calibration<T>> {
    let targets: Vec<CalibrationTarget<T>> = maps.iter().map(CalibrationTarget::from_dtn).collect();
    let fits: Vec<HalfThroatFit<T>> = targets
        .par_iter()
        .map(|t| fit_half_throats(t, opts))
        .collect::<Result<_>>()?;
    let network = build_npnm(&fits, indexing, positions, p_in, p_out, mode)?;
    let comparison = compare_tractions(&indexing.interface_ids, &network.tractions, ddpnm_tractions);
    Ok(Calibration {
        faces: maps.iter().map(|d| d.faces.clone()).collect(),
        targets,
        fits,
        network,
        comparison,
        mode,
    })
}

impl<T: Real> Calibration<T> {
    pub fn report(&self) -> CalibrationReport {
        let pores = self
            .fits
            .iter()
            .zip(&self.targets)
            .zip(&self.faces)
            .map(|((f, t), faces)| {
                let tn = t.off_norm();
                let tail = f.history.len().saturating_sub(5);
                PoreFitReport {
                    pore: f.pore_id,
                    faces: faces.iter().map(|k| k.to_string()).collect(),
                    g: f.g.iter().map(|v| v.as_f64()).collect(),
                    objective_tail: f.history[tail..].iter().map(|v| v.as_f64()).collect(),
                    relative_residual: if tn > T::zero() { (f.objective().sqrt() / tn).as_f64() } else { 0.0 },
                    iterations: f.iterations,
                    converged: f.converged,
                }
            })
            .collect();
        CalibrationReport {
            boundary_mode: self.mode,
            pores,
            pore_pressures: self.network.pore_pressures.iter().map(|v| v.as_f64()).collect(),
            comparison: self.comparison.clone(),
        }
    }
}
