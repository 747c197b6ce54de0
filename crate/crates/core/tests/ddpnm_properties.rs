use porestokes::ddpnm::{run_ddpnm, DdpnmOptions};
use porestokes::fem::{error_norms, solve_global, SaddleOptions};
use porestokes::geometry::{interface_segments, load_geometry, Domain, GeometrySpec, Solid};
use porestokes::mesh::{build_structured_mesh, read_mesh, Mesh};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn structured(spec: &GeometrySpec<f64>, h: f64) -> Mesh<f64> {
    build_structured_mesh(spec, &interface_segments(spec).unwrap(), h).unwrap()
}

/// Three pores around two rectangular obstacles, split by vertical
/// interfaces in the two gaps.
fn obstacle_channel() -> (GeometrySpec<f64>, Mesh<f64>) {
    let spec = GeometrySpec::new(
        Domain { x0: 0.0, y0: 0.0, x1: 3.0, y1: 1.0 },
        vec![Solid::rect(1.0, 0.0, 0.5, 0.5), Solid::rect(2.0, 0.5, 0.5, 0.5)],
        1.0,
        0.0,
        1.0,
        0,
    )
    .unwrap()
    .with_interfaces(vec![[[1.5, 0.5], [1.5, 1.0]], [[2.0, 0.0], [2.0, 0.5]]])
    .unwrap();
    let mesh = structured(&spec, 0.125);
    (spec, mesh)
}

fn fixture() -> (GeometrySpec<f64>, Mesh<f64>) {
    let dir = concat!(env!("CARGO_MANIFEST_DIR"), "/fixtures/model-problem");
    let spec = load_geometry(format!("{dir}.json")).unwrap();
    let mesh = read_mesh(format!("{dir}.node"), format!("{dir}.ele"), format!("{dir}.edge")).unwrap();
    (spec, mesh)
}

#[test]
fn series_channel_tractions_are_linear() {
    let spec = GeometrySpec::channel(3.0, 1.0, 1.0, 0.0, 1.0)
        .unwrap()
        .with_interfaces(vec![[[1.0, 0.0], [1.0, 1.0]], [[2.0, 0.0], [2.0, 1.0]]])
        .unwrap();
    let mesh = structured(&spec, 0.125);
    let dd = run_ddpnm(&mesh, &spec, &DdpnmOptions::default()).unwrap();
    assert!((dd.tractions[0] - 2.0 / 3.0).abs() < 1e-10, "{:?}", dd.tractions);
    assert!((dd.tractions[1] - 1.0 / 3.0).abs() < 1e-10, "{:?}", dd.tractions);
    let fem = solve_global(&mesh, &spec, SaddleOptions::default()).unwrap();
    assert!(error_norms(&dd.fields, &fem).unwrap() < 1e-8);
}

#[test]
fn dtn_maps_satisfy_the_energy_identity() {
    let (spec, mesh) = obstacle_channel();
    let dd = run_ddpnm(&mesh, &spec, &DdpnmOptions::default()).unwrap();
    assert_eq!(dd.locals.len(), 3);
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for local in &dd.locals {
        let m = local.dtn.m();
        for _ in 0..10 {
            let p: Vec<f64> = (0..m).map(|_| rng.random_range(-1.0..1.0)).collect();
            let pgp = local.dtn.g.quad_form(&p);
            let u = local.reconstruct(&p).unwrap().u;
            let uau = local.ops.a.quad_form(&u);
            assert!(pgp <= 1e-12 * uau.abs().max(1e-300));
            assert!((pgp + uau).abs() <= 1e-9 * (pgp.abs() + 1.0), "pore {}: {pgp} vs {uau}", local.dtn.pore_id);
        }
    }
}

#[test]
fn dtn_maps_have_constant_kernel() {
    let (spec, mesh) = obstacle_channel();
    let dd = run_ddpnm(&mesh, &spec, &DdpnmOptions::default()).unwrap();
    for local in &dd.locals {
        let g = &local.dtn.g;
        let norm = g.frobenius_norm();
        assert_eq!(local.dtn.rank(1e-8), local.dtn.m() - 1);
        assert!(g.sub(&g.transpose()).frobenius_norm() <= 1e-10 * norm);
        for r in g.row_sums() {
            assert!(r.abs() <= 1e-10 * norm);
        }
        // A uniform traction drives no flow.
        let u = local.reconstruct(&vec![1.0; local.dtn.m()]).unwrap().u;
        assert!(u.iter().all(|v| v.abs() < 1e-10));
    }
}

#[test]
fn fluxes_balance_per_pore_and_interface() {
    let (spec, mesh) = obstacle_channel();
    let dd = run_ddpnm(&mesh, &spec, &DdpnmOptions::default()).unwrap();
    let report = dd.report(None);
    for p in &report.pores {
        assert!(p.net_flux.abs() <= 1e-10 * p.abs_flux, "pore {}: {}", p.pore, p.net_flux);
    }
    for i in &report.interfaces {
        assert!(i.sum.abs() <= 1e-10 * (i.fluxes[0].abs() + i.fluxes[1].abs()));
    }
    assert!((report.inflow + report.outflow).abs() <= 1e-10 * report.outflow.abs());
    let fem = solve_global(&mesh, &spec, SaddleOptions::default()).unwrap();
    let err = error_norms(&dd.fields, &fem).unwrap();
    assert!(err < 0.1, "{err}");
}

#[test]
fn results_do_not_depend_on_worker_count() {
    let (spec, mesh) = fixture();
    let run = |n: usize| {
        let pool = rayon::ThreadPoolBuilder::new().num_threads(n).build().unwrap();
        pool.install(|| run_ddpnm(&mesh, &spec, &DdpnmOptions::default()).unwrap())
    };
    let (a, b) = (run(1), run(4));
    assert_eq!(a.tractions, b.tractions);
    assert_eq!(a.fluxes, b.fluxes);
    for (x, y) in a.locals.iter().zip(&b.locals) {
        assert_eq!(x.dtn.g, y.dtn.g);
    }
}
