use std::path::Path;

use anyhow::Context;
use log::info;
use serde::Serialize;

use porestokes::calibrate::{calibrate as run_calibration, calibrate_report};
use porestokes::Calibration;
use porestokes::cpnm::{solve_network, write_rows, PoreNetwork};
use porestokes::ddpnm::{run_ddpnm, DdpnmReport};
use porestokes::fem::{error_norms, face_flux, norm_breakdown, solve_global, write_vtk, ElementField};
use porestokes::geometry::{extract_topology, interface_segments, load_geometry, perturb_interfaces};
use porestokes::mesh::{build_pslg, build_structured_mesh, morph_interfaces, read_mesh, FaceKind};
use porestokes::{FlowField, GeometrySpec, Mesh};

use crate::config::{input_error, InputContext, MeshSource, RunArgs};

#[derive(Serialize)]
struct NormRow {
    quantity: &'static str,
    value: f64,
}

#[derive(Serialize)]
struct TractionRow {
    interface: usize,
    pore_a: usize,
    pore_b: usize,
    traction: f64,
}

#[derive(Serialize)]
struct FaceFluxRow {
    pore: usize,
    face: String,
    traction: f64,
    flux: f64,
}

fn set_workers(args: &RunArgs) -> anyhow::Result<()> {
    if let Some(n) = args.workers {
        // Only the first call per process can succeed; later calls keep the
        // existing pool.
        if rayon::ThreadPoolBuilder::new().num_threads(n).build_global().is_err() {
            log::warn!("worker pool already initialized; --workers ignored");
        }
    }
    Ok(())
}

fn load_spec(args: &RunArgs) -> anyhow::Result<GeometrySpec> {
    let path = args.geometry()?;
    load_geometry::<f64>(path).with_context(|| format!("loading geometry {}", path.display()))
}

/// Mesh from the configured source, perturbed and refined as requested.
fn build_mesh(args: &RunArgs, spec: &GeometrySpec) -> anyhow::Result<Mesh> {
    let segments = interface_segments(spec).context("placing interfaces")?;
    let mut mesh = match args.mesh_source()? {
        MeshSource::Structured(h) => build_structured_mesh(spec, &segments, h).context("building structured mesh")?,
        MeshSource::Files { nodes, eles, edges } => {
            read_mesh::<f64>(&nodes, &eles, &edges).with_context(|| format!("reading mesh {}", nodes.display()))?
        }
    };
    let eps = args.perturb.unwrap_or(0.0);
    if eps > 0.0 {
        let seed = args.seed.unwrap_or(spec.seed);
        let moved = perturb_interfaces(spec, &segments, eps, seed)?;
        mesh = morph_interfaces(&mesh, spec, &segments, &moved).context("moving interfaces")?;
        info!("interfaces perturbed with eps = {eps}, seed = {seed}");
    }
    for _ in 0..args.refine.unwrap_or(0) {
        mesh = mesh.refine();
    }
    info!(
        "mesh: {} vertices, {} triangles, {} pores",
        mesh.num_vertices(),
        mesh.num_triangles(),
        mesh.num_subdomains()
    );
    Ok(mesh)
}

fn write_json<S: Serialize>(path: &Path, value: &S) -> anyhow::Result<()> {
    let text = serde_json::to_string_pretty(value)?;
    std::fs::write(path, text + "\n").with_context(|| format!("writing {}", path.display()))
}

/// Interpolated plane Poiseuille flow for an empty rectangular channel.
fn poiseuille(spec: &GeometrySpec, like: &FlowField) -> FlowField {
    let d = spec.domain;
    let len = d.width();
    let c = (spec.p_in - spec.p_out) / (2.0 * spec.nu * len);
    let space = like.space.clone();
    let u = space.interpolate_velocity(|x| [c * (x[1] - d.y0) * (d.y1 - x[1]), 0.0]);
    let p = space.interpolate_pressure(|x| spec.p_in + (spec.p_out - spec.p_in) * (x[0] - d.x0) / len);
    FlowField::new(space, u, p)
}

fn field_norms(field: &FlowField) -> anyhow::Result<(f64, f64)> {
    let zero = FlowField::zero(field.space.clone());
    let n = norm_breakdown(&zero, field)?;
    Ok((n.u_h1_sq.sqrt(), n.p_l2_sq.sqrt()))
}

pub fn solve_fem(args: &RunArgs) -> anyhow::Result<()> {
    args.validate()?;
    set_workers(args)?;
    let out = args.out_dir()?;
    let spec = load_spec(args)?;
    let mesh = build_mesh(args, &spec)?;
    let field = solve_global(&mesh, &spec, args.saddle())?;
    let q_in = face_flux(&field, &mesh.face(FaceKind::Inlet, None))?;
    let q_out = face_flux(&field, &mesh.face(FaceKind::Outlet, None))?;
    let (u_h1, p_l2) = field_norms(&field)?;
    let mut rows = vec![
        NormRow { quantity: "velocity_h1", value: u_h1 },
        NormRow { quantity: "pressure_l2", value: p_l2 },
        NormRow { quantity: "inflow", value: -q_in },
        NormRow { quantity: "outflow", value: q_out },
    ];
    if spec.solids.is_empty() {
        let exact = poiseuille(&spec, &field);
        let err = error_norms(&field, &exact)?;
        rows.push(NormRow { quantity: "poiseuille_relative_error", value: err });
        println!("error vs Poiseuille: {err:.3e}");
        write_vtk(&out.join("fields.vtk"), &[("fem", &field as &dyn ElementField<f64>), ("poiseuille", &exact)])?;
    } else {
        write_vtk(&out.join("fields.vtk"), &[("fem", &field as &dyn ElementField<f64>)])?;
    }
    write_rows(&out.join("norms.csv"), &rows)?;
    println!("inflow {:.10e}  outflow {:.10e}", -q_in, q_out);
    Ok(())
}

fn ddpnm_outputs(report: &DdpnmReport, out: &Path) -> anyhow::Result<()> {
    write_json(&out.join("report.json"), report)?;
    let rows: Vec<TractionRow> = report
        .interfaces
        .iter()
        .map(|i| TractionRow {
            interface: i.id,
            pore_a: i.pores[0],
            pore_b: i.pores[1],
            traction: i.traction,
        })
        .collect();
    write_rows(&out.join("tractions.csv"), &rows)?;
    let mut rows = Vec::new();
    for p in &report.pores {
        for ((face, &t), &q) in p.faces.iter().zip(&p.tractions).zip(&p.fluxes) {
            rows.push(FaceFluxRow {
                pore: p.pore,
                face: face.clone(),
                traction: t,
                flux: q,
            });
        }
    }
    write_rows(&out.join("fluxes.csv"), &rows)?;
    Ok(())
}

pub fn solve_ddpnm(args: &RunArgs, reference: bool) -> anyhow::Result<()> {
    args.validate()?;
    set_workers(args)?;
    let out = args.out_dir()?;
    let spec = load_spec(args)?;
    let mesh = build_mesh(args, &spec)?;
    let dd = run_ddpnm(&mesh, &spec, &args.ddpnm())?;
    let mut error = None;
    if reference {
        let fem = solve_global(&mesh, &spec, args.saddle())?;
        let e = dd.error_against(&fem)?;
        write_rows(
            &out.join("norms.csv"),
            &[
                NormRow { quantity: "relative", value: e.relative },
                NormRow { quantity: "velocity_h1_relative", value: e.velocity_h1_relative },
                NormRow { quantity: "pressure_l2_relative", value: e.pressure_l2_relative },
            ],
        )?;
        write_vtk(&out.join("fields.vtk"), &[("ddpnm", &dd.fields as &dyn ElementField<f64>), ("fem", &fem)])?;
        println!("relative H1 x L2 error vs FEM: {:.4e}", e.relative);
        error = Some(e);
    } else {
        write_vtk(&out.join("fields.vtk"), &[("ddpnm", &dd.fields as &dyn ElementField<f64>)])?;
    }
    let report = dd.report(error);
    ddpnm_outputs(&report, &out)?;
    println!(
        "{} pores, {} interfaces, inflow {:.10e}, outflow {:.10e}",
        report.pores.len().max(1),
        report.m,
        -report.inflow,
        report.outflow
    );
    Ok(())
}

pub fn solve_cpnm(args: &RunArgs) -> anyhow::Result<()> {
    args.validate()?;
    let out = args.out_dir()?;
    let spec = load_spec(args)?;
    let topo = extract_topology(&spec).context("extracting pore network")?;
    if !topo.inlet_outlet_connected() {
        return Err(input_error("no connected path of pores from inlet to outlet"));
    }
    let net = PoreNetwork::from_topology(&topo, &spec)?;
    let sol = solve_network(&net)?;
    net.write_csv(&out)?;
    sol.write_csv(&net, &out)?;
    println!("{} pores, {} throats", net.pores.len(), net.throats.len());
    Ok(())
}

fn calibration_outputs(cal: &Calibration, out: &Path) -> anyhow::Result<()> {
    write_json(&out.join("calibration.json"), &cal.report())?;
    write_rows(&out.join("comparison.csv"), &cal.comparison.pairs)?;
    let npnm = out.join("npnm");
    std::fs::create_dir_all(&npnm).with_context(|| format!("creating {}", npnm.display()))?;
    cal.network.network.write_csv(&npnm)?;
    let c = &cal.comparison;
    println!(
        "rank correlation {:.4}, relative RMS {:.4e}, max deviation {:.4e}",
        c.rank_correlation, c.rms_relative, c.max_abs_deviation
    );
    Ok(())
}

pub fn calibrate(args: &RunArgs, from_report: Option<&Path>) -> anyhow::Result<()> {
    args.validate()?;
    set_workers(args)?;
    let mode = args.boundary_mode.unwrap_or_default();
    let fit = args.fit();
    let cal = match from_report {
        Some(path) => {
            let text = std::fs::read_to_string(path).input_context(|| format!("reading report {}", path.display()))?;
            let report: DdpnmReport =
                serde_json::from_str(&text).input_context(|| format!("parsing report {}", path.display()))?;
            calibrate_report(&report, &fit, mode)?
        }
        None => {
            let spec = load_spec(args)?;
            let mesh = build_mesh(args, &spec)?;
            let dd = run_ddpnm(&mesh, &spec, &args.ddpnm())?;
            ddpnm_outputs(&dd.report(None), &args.out_dir()?)?;
            run_calibration(&dd, &fit, mode)?
        }
    };
    calibration_outputs(&cal, &args.out_dir()?)
}

pub fn pslg(geometry: &Path, h: f64, out: &Path) -> anyhow::Result<()> {
    let spec = load_geometry::<f64>(geometry).with_context(|| format!("loading geometry {}", geometry.display()))?;
    let segments = interface_segments(&spec)?;
    let topo = if spec.interfaces.is_empty() { Some(extract_topology(&spec)?) } else { None };
    let graph = build_pslg(&spec, &segments, topo.as_ref(), h)?;
    std::fs::create_dir_all(out).with_context(|| format!("creating {}", out.display()))?;
    let path = out.join("pslg.json");
    std::fs::write(&path, graph.to_json()).with_context(|| format!("writing {}", path.display()))?;
    println!("{} vertices, {} segments", graph.vertices.len(), graph.segments.len());
    Ok(())
}
