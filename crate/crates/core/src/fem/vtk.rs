use std::fmt::Write as _;
use std::path::Path;

use super::element::p2_values;
use super::norms::ElementField;
use crate::error::{Error, Result};
use crate::scalar::Real;

const CORNERS: [[f64; 3]; 3] = [[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]];

/// Writes a legacy ASCII VTK file with element-local vertex copies, so
/// broken (per-subdomain) fields are shown without averaging. Each named
/// field contributes `<name>_velocity` and `<name>_pressure`; with two or
/// more fields the point-wise differences of the first against the second
/// are added as `error_velocity` and `error_pressure`.
pub fn write_vtk<T: Real>(path: &Path, fields: &[(&str, &dyn ElementField<T>)]) -> Result<()> {
    let Some(&(_, geom)) = fields.first() else {
        return Err(Error::InvalidArgument("no fields to write".into()));
    };
    let nt = geom.num_elements();
    if fields.iter().any(|f| f.1.num_elements() != nt) {
        return Err(Error::InvalidArgument("fields live on different meshes".into()));
    }
    // Vertex samples: (ux, uy, p) per field per element corner.
    let sample = |f: &dyn ElementField<T>, t: usize| -> [[f64; 3]; 3] {
        let e = f.element_values(t);
        CORNERS.map(|l| {
            let phi = p2_values(l);
            let ux: f64 = (0..6).map(|j| e.u[0][j].as_f64() * phi[j]).sum();
            let uy: f64 = (0..6).map(|j| e.u[1][j].as_f64() * phi[j]).sum();
            let p: f64 = (0..3).map(|q| e.p[q].as_f64() * l[q]).sum();
            [ux, uy, p]
        })
    };
    let samples: Vec<Vec<[[f64; 3]; 3]>> = fields.iter().map(|f| (0..nt).map(|t| sample(f.1, t)).collect()).collect();

    let mut s = String::new();
    let w = |s: &mut String, args: std::fmt::Arguments| s.write_fmt(args).expect("string write");
    w(&mut s, format_args!("# vtk DataFile Version 3.0\nporestokes flow field\nASCII\nDATASET UNSTRUCTURED_GRID\n"));
    w(&mut s, format_args!("POINTS {} double\n", 3 * nt));
    for t in 0..nt {
        for c in geom.element_values(t).coords {
            w(&mut s, format_args!("{:e} {:e} 0\n", c[0].as_f64(), c[1].as_f64()));
        }
    }
    w(&mut s, format_args!("CELLS {} {}\n", nt, 4 * nt));
    for t in 0..nt {
        w(&mut s, format_args!("3 {} {} {}\n", 3 * t, 3 * t + 1, 3 * t + 2));
    }
    w(&mut s, format_args!("CELL_TYPES {nt}\n"));
    for _ in 0..nt {
        s.push_str("5\n");
    }
    w(&mut s, format_args!("CELL_DATA {nt}\nSCALARS subdomain int 1\nLOOKUP_TABLE default\n"));
    for t in 0..nt {
        w(&mut s, format_args!("{}\n", geom.element_label(t)));
    }
    w(&mut s, format_args!("POINT_DATA {}\n", 3 * nt));
    let vectors = |s: &mut String, name: &str, get: &dyn Fn(usize, usize) -> [f64; 2]| {
        w(s, format_args!("VECTORS {name} double\n"));
        for t in 0..nt {
            for k in 0..3 {
                let v = get(t, k);
                w(s, format_args!("{:e} {:e} 0\n", v[0], v[1]));
            }
        }
    };
    for (i, (name, _)) in fields.iter().enumerate() {
        vectors(&mut s, &format!("{name}_velocity"), &|t, k| [samples[i][t][k][0], samples[i][t][k][1]]);
    }
    if fields.len() >= 2 {
        vectors(&mut s, "error_velocity", &|t, k| {
            [samples[0][t][k][0] - samples[1][t][k][0], samples[0][t][k][1] - samples[1][t][k][1]]
        });
    }
    let scalars = |s: &mut String, name: &str, get: &dyn Fn(usize, usize) -> f64| {
        w(s, format_args!("SCALARS {name} double 1\nLOOKUP_TABLE default\n"));
        for t in 0..nt {
            for k in 0..3 {
                w(s, format_args!("{:e}\n", get(t, k)));
            }
        }
    };
    for (i, (name, _)) in fields.iter().enumerate() {
        scalars(&mut s, &format!("{name}_pressure"), &|t, k| samples[i][t][k][2]);
    }
    if fields.len() >= 2 {
        scalars(&mut s, "error_pressure", &|t, k| samples[0][t][k][2] - samples[1][t][k][2]);
    }
    std::fs::write(path, s).map_err(|e| Error::io(path, e))
}
