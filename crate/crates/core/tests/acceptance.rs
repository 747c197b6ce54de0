//! Acceptance suite: one PASS/FAIL line per criterion, non-zero exit on any
//! failure. Tolerances are pinned below.

use std::time::{Duration, Instant};

use porestokes::calibrate::{calibrate, fit_half_throats, BoundaryMode, CalibrationTarget, FitOptions};
use porestokes::cpnm::{solve_network, NetworkPore, NetworkThroat, PoreNetwork, PoreRole};
use porestokes::ddpnm::{run_ddpnm, DdpnmOptions, DdpnmSolution};
use porestokes::fem::{error_norms, face_flux, solve_global, FlowField, SaddleOptions};
use porestokes::geometry::{extract_topology, interface_segments, load_geometry, perturb_interfaces, GeometrySpec};
use porestokes::mesh::{build_structured_mesh, morph_interfaces, read_mesh, FaceKind, Mesh};
use porestokes::sparse::{DenseMatrix, Ldlt};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const EXACT_TOL: f64 = 1e-8;
const DTN_TOL: f64 = 1e-10;
const RANK_TOL: f64 = 1e-8;
const ENERGY_TOL: f64 = 1e-9;
const MASS_TOL: f64 = 1e-10;
const ACCURACY_BAR: f64 = 1e-2;
const REFINEMENT_FACTOR: f64 = 3.0;
const ROUND_TRIP_TOL: f64 = 1e-6;
const SERIES_TRACTION_TOL: f64 = 1e-2;
const RANK_CORRELATION_MIN: f64 = 0.95;
const HARMONIC_TOL: f64 = 1e-12;
const FAST: Duration = Duration::from_secs(1);
const DESK: Duration = Duration::from_secs(120);

type Check = Result<String, String>;

fn ensure(ok: bool, msg: String) -> Check {
    if ok {
        Ok(msg)
    } else {
        Err(msg)
    }
}

fn fail<E: std::fmt::Display>(e: E) -> String {
    e.to_string()
}

fn fixture_path(ext: &str) -> String {
    format!("{}/fixtures/model-problem.{ext}", env!("CARGO_MANIFEST_DIR"))
}

fn fixture() -> (GeometrySpec<f64>, Mesh<f64>) {
    let spec = load_geometry(fixture_path("json")).expect("fixture geometry");
    let mesh = read_mesh(fixture_path("node"), fixture_path("ele"), fixture_path("edge")).expect("fixture mesh");
    (spec, mesh)
}

fn channel(length: f64, cuts: &[f64], h: f64) -> (GeometrySpec<f64>, Mesh<f64>) {
    let spec = GeometrySpec::channel(length, 1.0, 1.0, 0.0, 1.0)
        .unwrap()
        .with_interfaces(cuts.iter().map(|&x| [[x, 0.0], [x, 1.0]]).collect())
        .unwrap();
    let mesh = build_structured_mesh(&spec, &interface_segments(&spec).unwrap(), h).unwrap();
    (spec, mesh)
}

fn dd_vs_fem(spec: &GeometrySpec<f64>, mesh: &Mesh<f64>) -> Result<(DdpnmSolution<f64>, f64), String> {
    let dd = run_ddpnm(mesh, spec, &DdpnmOptions::default()).map_err(fail)?;
    let fem = solve_global(mesh, spec, SaddleOptions::default()).map_err(fail)?;
    let err = error_norms(&dd.fields, &fem).map_err(fail)?;
    Ok((dd, err))
}

fn perturbed(spec: &GeometrySpec<f64>, mesh: &Mesh<f64>, eps: f64) -> Result<Mesh<f64>, String> {
    let segs = interface_segments(spec).map_err(fail)?;
    let moved = perturb_interfaces(spec, &segs, eps, spec.seed).map_err(fail)?;
    morph_interfaces(mesh, spec, &segs, &moved).map_err(fail)
}

/// Interpolated plane Poiseuille flow on `[0, L] × [0, 1]`.
fn poiseuille(like: &FlowField<f64>, length: f64, dp: f64, nu: f64) -> FlowField<f64> {
    let space = like.space.clone();
    let c = dp / (2.0 * nu * length);
    let u = space.interpolate_velocity(|x| [c * x[1] * (1.0 - x[1]), 0.0]);
    let p = space.interpolate_pressure(|x| dp * (1.0 - x[0] / length));
    FlowField::new(space, u, p)
}

fn criterion_1() -> Check {
    let (spec, mesh) = channel(2.0, &[], 0.125);
    let t = Instant::now();
    let field = solve_global(&mesh, &spec, SaddleOptions::default()).map_err(fail)?;
    let q = face_flux(&field, &mesh.face(FaceKind::Outlet, None)).map_err(fail)?;
    let elapsed = t.elapsed();
    let q_exact = 1.0 / 24.0;
    let flux_rel = (q - q_exact).abs() / q_exact;
    let err = error_norms(&field, &poiseuille(&field, 2.0, 1.0, 1.0)).map_err(fail)?;
    ensure(
        flux_rel <= EXACT_TOL && err <= EXACT_TOL && elapsed < FAST,
        format!("flux rel err {flux_rel:.2e}, field err {err:.2e}, {elapsed:.2?}"),
    )
}

fn criterion_2() -> Check {
    let (spec, mesh) = channel(2.0, &[1.0], 0.125);
    let t = Instant::now();
    let (dd, err) = dd_vs_fem(&spec, &mesh)?;
    let elapsed = t.elapsed();
    let p = dd.tractions.first().copied().unwrap_or(f64::NAN);
    ensure(
        (p - 0.5).abs() <= EXACT_TOL && err <= EXACT_TOL && elapsed < FAST,
        format!("traction {p:.15}, err vs FE {err:.2e}, {elapsed:.2?}"),
    )
}

fn criterion_3(dd: &DdpnmSolution<f64>) -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let (mut worst_sym, mut worst_row, mut worst_energy) = (0.0f64, 0.0f64, 0.0f64);
    let mut rank_ok = true;
    for local in &dd.locals {
        let d = &local.dtn;
        let norm = d.g.frobenius_norm();
        // `asymmetry` is the raw ‖G − Gᵀ‖ over the DtN scale.
        worst_sym = worst_sym.max(d.asymmetry * d.scale / norm);
        let row = d.g.row_sums().iter().map(|r| r * r).sum::<f64>().sqrt();
        worst_row = worst_row.max(row / norm);
        rank_ok &= d.rank(RANK_TOL) == d.m() - 1;
        for _ in 0..20 {
            let p: Vec<f64> = (0..d.m()).map(|_| rng.random_range(-1.0..1.0)).collect();
            let pgp = d.g.quad_form(&p);
            let u = local.reconstruct(&p).map_err(fail)?.u;
            let uau = local.ops.a.quad_form(&u);
            worst_energy = worst_energy.max((pgp + uau).abs() / (pgp.abs() + 1.0));
        }
    }
    ensure(
        worst_sym <= DTN_TOL && worst_row <= DTN_TOL && rank_ok && worst_energy <= ENERGY_TOL,
        format!(
            "{} pores: max asym {worst_sym:.1e}, max row sum {worst_row:.1e}, rank m-1 {rank_ok}, energy {worst_energy:.1e}",
            dd.locals.len()
        ),
    )
}

fn criterion_4(dd: &DdpnmSolution<f64>) -> Check {
    let schur = dd.schur.as_ref().ok_or("no Schur system")?;
    let factor = Ldlt::factor(&schur.s, None).map_err(fail)?;
    let (pos, neg) = factor.inertia();
    let ritz = schur.smallest_ritz_value(20);
    ensure(
        neg == 0 && pos == schur.dim() && ritz > 0.0,
        format!("dim {}, inertia ({pos}, {neg}), min pivot {:.2e}, smallest Ritz {ritz:.3e}", schur.dim(), factor.min_pivot()),
    )
}

fn criterion_5(dd: &DdpnmSolution<f64>) -> Check {
    let r = dd.report(None);
    let pore = r.pores.iter().map(|p| p.net_flux.abs() / p.abs_flux).fold(0.0, f64::max);
    let iface = r
        .interfaces
        .iter()
        .map(|i| i.sum.abs() / (i.fluxes[0].abs() + i.fluxes[1].abs()))
        .fold(0.0, f64::max);
    let global = (r.inflow + r.outflow).abs() / (r.inflow.abs() + r.outflow.abs());
    ensure(
        pore <= MASS_TOL && iface <= MASS_TOL && global <= MASS_TOL,
        format!("max pore {pore:.1e}, max interface {iface:.1e}, global {global:.1e}"),
    )
}

fn criterion_6(err: f64, pores: usize, elapsed: Duration) -> Check {
    ensure(
        pores >= 10 && err <= ACCURACY_BAR && elapsed < DESK,
        format!("{pores} pores, relative H1xL2 error {err:.4} (bar {ACCURACY_BAR}), {elapsed:.2?}"),
    )
}

fn criterion_7(spec: &GeometrySpec<f64>, mesh: &Mesh<f64>, err0: f64) -> Check {
    let mut errs = Vec::new();
    for eps in [0.1, 0.2] {
        let m = perturbed(spec, mesh, eps)?;
        errs.push(dd_vs_fem(spec, &m)?.1);
    }
    ensure(
        errs.iter().all(|&e| e <= ACCURACY_BAR),
        format!("eps 0 / 0.1 / 0.2: {err0:.4} / {:.4} / {:.4} (seed {})", errs[0], errs[1], spec.seed),
    )
}

fn criterion_8(spec: &GeometrySpec<f64>, mesh: &Mesh<f64>, err0: f64) -> Check {
    let m1 = mesh.refine();
    let e1 = dd_vs_fem(spec, &m1)?.1;
    let e2 = dd_vs_fem(spec, &m1.refine())?.1;
    let errs = [err0, e1, e2];
    let hi = errs.iter().copied().fold(0.0, f64::max);
    let lo = errs.iter().copied().fold(f64::INFINITY, f64::min);
    ensure(
        hi <= REFINEMENT_FACTOR * lo,
        format!("h, h/2, h/4: {err0:.4}, {e1:.4}, {e2:.4} (max/min {:.2})", hi / lo),
    )
}

fn criterion_9(fixture_fits: &[Vec<f64>]) -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let mut worst = 0.0f64;
    let mut monotone = true;
    for trial in 0..300 {
        let m = 3 + trial % 3;
        let x: Vec<f64> = (0..m).map(|_| rng.random_range(0.0..2.0)).collect();
        let t = DenseMatrix::from_fn(m, m, |i, j| if i == j { 0.0 } else { x[i] * x[j] });
        if t.frobenius_norm() == 0.0 {
            continue;
        }
        let fit = fit_half_throats(&CalibrationTarget::from_matrix(trial, &t), &FitOptions::default()).map_err(fail)?;
        let fitted = DenseMatrix::from_fn(m, m, |i, j| if i == j { 0.0 } else { fit.x[i] * fit.x[j] });
        worst = worst.max(fitted.sub(&t).frobenius_norm() / t.frobenius_norm());
        monotone &= fit.history.windows(2).all(|w| w[1] <= w[0]);
    }
    monotone &= fixture_fits.iter().all(|h| h.windows(2).all(|w| w[1] <= w[0]));
    ensure(
        worst <= ROUND_TRIP_TOL && monotone,
        format!("300 random targets, worst off-diagonal rel err {worst:.1e}, histories monotone {monotone}"),
    )
}

fn criterion_10(fixture_rank: f64, fixture_rms: f64) -> Check {
    let (spec, mesh) = channel(3.0, &[1.0, 2.0], 0.125);
    let dd = run_ddpnm(&mesh, &spec, &DdpnmOptions::default()).map_err(fail)?;
    let cal = calibrate(&dd, &FitOptions::default(), BoundaryMode::Terminal).map_err(fail)?;
    let worst = cal
        .comparison
        .pairs
        .iter()
        .map(|p| (p.p_npnm - p.p_ddpnm).abs() / p.p_ddpnm.abs())
        .fold(0.0, f64::max);
    ensure(
        worst <= SERIES_TRACTION_TOL && fixture_rank >= RANK_CORRELATION_MIN,
        format!("series max rel dev {worst:.1e}; fixture rank correlation {fixture_rank:.4}, rel RMS {fixture_rms:.2e}"),
    )
}

fn criterion_11(spec: &GeometrySpec<f64>) -> Check {
    let (g1, g2) = (0.3, 1.7);
    let pore = |x: f64, role| NetworkPore { position: [x, 0.0], role };
    let throat = |i, j, g| NetworkThroat { pores: (i, j), conductance: g, length: 1.0, width: 0.0 };
    let net = PoreNetwork {
        pores: vec![pore(0.0, PoreRole::Inlet), pore(1.0, PoreRole::Interior), pore(2.0, PoreRole::Outlet)],
        throats: vec![throat(0, 1, g1), throat(1, 2, g2)],
        p_in: 1.0,
        p_out: 0.0,
    };
    let sol = solve_network(&net).map_err(fail)?;
    // q_ij = -g (p_i - p_j).
    let q = -1.0 / (1.0 / g1 + 1.0 / g2);
    let series = sol.fluxes.iter().map(|f| (f - q).abs() / q.abs()).fold(0.0, f64::max);

    let topo = extract_topology(spec).map_err(fail)?;
    let net = PoreNetwork::from_topology(&topo, spec).map_err(fail)?;
    let sol = solve_network(&net).map_err(fail)?;
    let in_range = sol.pressures.iter().all(|&p| (0.0..=1.0).contains(&p));
    let mut exact = true;
    for (p, pr) in net.pores.iter().zip(&sol.pressures) {
        match p.role {
            PoreRole::Inlet => exact &= *pr == 1.0,
            PoreRole::Outlet => exact &= *pr == 0.0,
            PoreRole::Interior => {}
        }
    }
    let n_in = net.pores.iter().filter(|p| p.role == PoreRole::Inlet).count();
    let n_out = net.pores.iter().filter(|p| p.role == PoreRole::Outlet).count();
    ensure(
        series <= HARMONIC_TOL && in_range && exact && n_in > 0 && n_out > 0,
        format!(
            "series rel err {series:.1e}; fixture {} pores in [0,1] {in_range}, {n_in} inlet / {n_out} outlet exact {exact}",
            net.pores.len()
        ),
    )
}

fn main() {
    let mut results: Vec<(u32, Check)> = vec![(1, criterion_1()), (2, criterion_2())];

    let (spec, mesh) = fixture();
    let t = Instant::now();
    match dd_vs_fem(&spec, &mesh) {
        Ok((dd, err)) => {
            let elapsed = t.elapsed();
            results.push((3, criterion_3(&dd)));
            results.push((4, criterion_4(&dd)));
            results.push((5, criterion_5(&dd)));
            results.push((6, criterion_6(err, dd.locals.len(), elapsed)));
            results.push((7, criterion_7(&spec, &mesh, err)));
            results.push((8, criterion_8(&spec, &mesh, err)));
            match calibrate(&dd, &FitOptions::default(), BoundaryMode::Terminal) {
                Ok(cal) => {
                    let hist: Vec<Vec<f64>> = cal.fits.iter().map(|f| f.history.clone()).collect();
                    results.push((9, criterion_9(&hist)));
                    results.push((10, criterion_10(cal.comparison.rank_correlation, cal.comparison.rms_relative)));
                }
                Err(e) => {
                    results.push((9, criterion_9(&[])));
                    results.push((10, Err(format!("fixture calibration: {e}"))));
                }
            }
        }
        Err(e) => {
            for id in 3..=10 {
                results.push((id, Err(format!("fixture DD-PNM: {e}"))));
            }
        }
    }
    results.push((11, criterion_11(&spec)));

    let mut failed = 0;
    for (id, r) in &results {
        match r {
            Ok(msg) => println!("criterion {id:>2}: PASS  {msg}"),
            Err(msg) => {
                failed += 1;
                println!("criterion {id:>2}: FAIL  {msg}");
            }
        }
    }
    println!("acceptance: {} passed, {failed} failed", results.len() - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
