//! Uniform right-triangle meshes for axis-aligned geometries.

use std::collections::BTreeMap;

use super::{edge_key, EdgeTag, Mesh};
use crate::error::{Error, Result};
use crate::geometry::{GeometrySpec, InterfaceSegment, SegmentKind, Solid};
use crate::scalar::Real;

fn grid_index<T: Real>(value: T, origin: T, h: T, what: &str) -> Result<usize> {
    let q = (value - origin) / h;
    let r = q.round();
    if (q - r).abs() > T::lit(1e-9) * (T::one() + q.abs()) || r < T::zero() {
        return Err(Error::Mesh(format!("{what} ({value}) is not aligned with pitch {h}")));
    }
    Ok(r.to_usize().unwrap())
}

fn find(parent: &mut [usize], mut i: usize) -> usize {
    while parent[i] != i {
        parent[i] = parent[parent[i]];
        i = parent[i];
    }
    i
}

/// Grid of `h × h` squares, each split along its rising diagonal, with solid
/// cells removed. Internal interface segments must lie on grid lines.
/// Subdomain labels follow a flood fill across non-interface edges, numbered
/// in order of the first triangle reached (columns left to right).
pub fn build_structured_mesh<T: Real>(
    spec: &GeometrySpec<T>,
    segments: &[InterfaceSegment<T>],
    h: T,
) -> Result<Mesh<T>> {
    if !(h > T::zero()) {
        return Err(Error::InvalidArgument(format!("mesh size {h} must be positive")));
    }
    let d = spec.domain;
    let nx = grid_index(d.x1, d.x0, h, "domain width")?;
    let ny = grid_index(d.y1, d.y0, h, "domain height")?;
    if nx == 0 || ny == 0 {
        return Err(Error::Mesh("mesh size exceeds the domain".into()));
    }
    let mut solid_cells = vec![false; nx * ny];
    for (k, s) in spec.solids.iter().enumerate() {
        let Solid::Rect { corner, extents } = *s else {
            return Err(Error::Mesh(format!("solid {k}: the structured mesher supports rectangles only")));
        };
        let x0 = corner[0].max(d.x0);
        let y0 = corner[1].max(d.y0);
        let x1 = (corner[0] + extents[0]).min(d.x1);
        let y1 = (corner[1] + extents[1]).min(d.y1);
        let (i0, i1) = (grid_index(x0, d.x0, h, "solid edge")?, grid_index(x1, d.x0, h, "solid edge")?);
        let (j0, j1) = (grid_index(y0, d.y0, h, "solid edge")?, grid_index(y1, d.y0, h, "solid edge")?);
        for i in i0..i1 {
            for j in j0..j1 {
                solid_cells[i * ny + j] = true;
            }
        }
    }

    let vid = |i: usize, j: usize| i * (ny + 1) + j;
    let mut triangles = Vec::new();
    for i in 0..nx {
        for j in 0..ny {
            if solid_cells[i * ny + j] {
                continue;
            }
            triangles.push([vid(i, j), vid(i + 1, j), vid(i + 1, j + 1)]);
            triangles.push([vid(i, j), vid(i + 1, j + 1), vid(i, j + 1)]);
        }
    }
    if triangles.is_empty() {
        return Err(Error::Mesh("no void cells".into()));
    }

    // Compact vertex numbering.
    let mut new_id = vec![usize::MAX; (nx + 1) * (ny + 1)];
    let mut vertices = Vec::new();
    for tri in &triangles {
        for &v in tri {
            new_id[v] = 0;
        }
    }
    for i in 0..=nx {
        for j in 0..=ny {
            if new_id[vid(i, j)] == 0 {
                new_id[vid(i, j)] = vertices.len() + 1;
                vertices.push([d.x0 + h * T::lit(i as f64), d.y0 + h * T::lit(j as f64)]);
            }
        }
    }
    for tri in triangles.iter_mut() {
        for v in tri.iter_mut() {
            *v = new_id[*v] - 1;
        }
    }
    let grid_vertex = |i: usize, j: usize| -> Option<usize> {
        let v = new_id[vid(i, j)];
        (v != usize::MAX).then(|| v - 1)
    };

    // Edge adjacency.
    let mut tris_of: BTreeMap<(usize, usize), Vec<usize>> = BTreeMap::new();
    for (t, tri) in triangles.iter().enumerate() {
        for k in 0..3 {
            tris_of.entry(edge_key(tri[k], tri[(k + 1) % 3])).or_default().push(t);
        }
    }

    let mut edge_tags = BTreeMap::new();
    for seg in segments.iter().filter(|s| s.kind == SegmentKind::Internal) {
        let [p, q] = seg.endpoints;
        if seg.length() < T::lit(2.0) * h * T::lit(1.0 - 1e-9) {
            return Err(Error::Mesh(format!(
                "interface {} spans a gap narrower than 2h = {}",
                seg.id + 1,
                T::lit(2.0) * h
            )));
        }
        let (pi, pj) = (grid_index(p[0], d.x0, h, "interface endpoint")?, grid_index(p[1], d.y0, h, "interface endpoint")?);
        let (qi, qj) = (grid_index(q[0], d.x0, h, "interface endpoint")?, grid_index(q[1], d.y0, h, "interface endpoint")?);
        let steps: Vec<(usize, usize)> = if pi == qi {
            (pj.min(qj)..=pj.max(qj)).map(|j| (pi, j)).collect()
        } else if pj == qj {
            (pi.min(qi)..=pi.max(qi)).map(|i| (i, pj)).collect()
        } else {
            return Err(Error::Mesh(format!("interface {} is not axis-aligned", seg.id + 1)));
        };
        for w in steps.windows(2) {
            let (a, b) = match (grid_vertex(w[0].0, w[0].1), grid_vertex(w[1].0, w[1].1)) {
                (Some(a), Some(b)) => (a, b),
                _ => return Err(Error::Mesh(format!("interface {} runs through a solid", seg.id + 1))),
            };
            let key = edge_key(a, b);
            if tris_of.get(&key).map_or(0, Vec::len) != 2 {
                return Err(Error::Mesh(format!("interface {} is not an interior grid line", seg.id + 1)));
            }
            edge_tags.insert(key, EdgeTag::Interface(seg.id));
        }
    }

    let eps = T::lit(1e-9) * h;
    for (&key, tris) in &tris_of {
        if tris.len() != 1 {
            continue;
        }
        let (a, b) = (vertices[key.0], vertices[key.1]);
        let tag = if (a[0] - d.x0).abs() < eps && (b[0] - d.x0).abs() < eps {
            EdgeTag::Inlet
        } else if (a[0] - d.x1).abs() < eps && (b[0] - d.x1).abs() < eps {
            EdgeTag::Outlet
        } else {
            EdgeTag::Wall
        };
        edge_tags.insert(key, tag);
    }

    // Void connectivity across all interior edges, then pore labels across
    // non-interface edges.
    let n = triangles.len();
    let mut all: Vec<usize> = (0..n).collect();
    let mut pores: Vec<usize> = (0..n).collect();
    for (key, tris) in &tris_of {
        if tris.len() == 2 {
            let (r0, r1) = (find(&mut all, tris[0]), find(&mut all, tris[1]));
            all[r0.max(r1)] = r0.min(r1);
            if !matches!(edge_tags.get(key), Some(EdgeTag::Interface(_))) {
                let (r0, r1) = (find(&mut pores, tris[0]), find(&mut pores, tris[1]));
                pores[r0.max(r1)] = r0.min(r1);
            }
        }
    }
    if (0..n).any(|t| find(&mut all, t) != find(&mut all, 0)) {
        return Err(Error::Mesh("void region has a disconnected component".into()));
    }
    let mut label_of_root = BTreeMap::new();
    let mut element_subdomain = Vec::with_capacity(n);
    for t in 0..n {
        let r = find(&mut pores, t);
        let next = label_of_root.len();
        element_subdomain.push(*label_of_root.entry(r).or_insert(next));
    }

    Mesh::from_parts(vertices, triangles, edge_tags, element_subdomain, h)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::interface_segments;

    fn channel() -> GeometrySpec<f64> {
        GeometrySpec::channel(2.0, 1.0, 1.0, 0.0, 1.0).unwrap()
    }

    #[test]
    fn empty_channel_counts() {
        let spec = channel();
        let segs = interface_segments(&spec).unwrap();
        let m = build_structured_mesh(&spec, &segs, 0.25).unwrap();
        assert_eq!(m.num_triangles(), 64);
        assert_eq!(m.num_vertices(), 45);
        assert_eq!(m.count_tag(EdgeTag::Inlet), 4);
        assert_eq!(m.count_tag(EdgeTag::Outlet), 4);
        assert_eq!(m.count_tag(EdgeTag::Wall), 16);
        assert_eq!(m.num_subdomains(), 1);
        assert!((m.area() - 2.0).abs() < 1e-14);
    }

    #[test]
    fn split_channel_two_labels() {
        let spec = channel().with_interfaces(vec![[[1.0, 0.0], [1.0, 1.0]]]).unwrap();
        let segs = interface_segments(&spec).unwrap();
        let m = build_structured_mesh(&spec, &segs, 0.25).unwrap();
        assert_eq!(m.num_subdomains(), 2);
        assert_eq!(m.count_tag(EdgeTag::Interface(0)), 4);
        for (t, tri) in m.triangles.iter().enumerate() {
            let cx = tri.iter().map(|&v| m.vertices[v][0]).sum::<f64>() / 3.0;
            assert_eq!(m.element_subdomain[t], usize::from(cx > 1.0));
        }
    }

    #[test]
    fn misaligned_pitch_errors() {
        let spec = channel();
        let segs = interface_segments(&spec).unwrap();
        assert!(matches!(build_structured_mesh(&spec, &segs, 0.3), Err(Error::Mesh(_))));
    }

    #[test]
    fn rect_solids_removed() {
        let spec: GeometrySpec<f64> = GeometrySpec::new(
            crate::geometry::Domain { x0: 0.0, y0: 0.0, x1: 3.0, y1: 1.0 },
            vec![Solid::rect(1.0, 0.0, 1.0, 0.25), Solid::rect(1.0, 0.75, 1.0, 0.25)],
            1.0,
            0.0,
            1.0,
            0,
        )
        .unwrap();
        let segs = interface_segments(&spec).unwrap();
        let m = build_structured_mesh(&spec, &segs, 0.25).unwrap();
        assert!((m.area() - 2.5).abs() < 1e-13);
        m.validate().unwrap();
    }
}
