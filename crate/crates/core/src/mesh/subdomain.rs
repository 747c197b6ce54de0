//! Per-pore submeshes with ordered traction faces.

use std::collections::BTreeMap;

use rayon::prelude::*;

use super::{edge_key, Face, FaceKind, Mesh};
use crate::error::{Error, Result};
use crate::scalar::Real;

/// One pore's triangles as a standalone mesh. Interface edges become
/// boundary edges that keep their `Interface(α)` tag.
#[derive(Debug, Clone, PartialEq)]
pub struct SubdomainMesh<T> {
    pub pore_id: usize,
    /// Local mesh; every triangle carries label 0.
    pub mesh: Mesh<T>,
    /// Local vertex -> parent vertex, ascending.
    pub vertex_map: Vec<usize>,
    /// Local triangle -> parent triangle, ascending.
    pub triangle_map: Vec<usize>,
    /// Unknown (interface) faces by ascending interface id, then the known
    /// inlet and outlet faces. Edges use local vertex indices.
    pub faces: Vec<Face<T>>,
    pub n_unknown: usize,
}

impl<T: Real> SubdomainMesh<T> {
    pub fn num_faces(&self) -> usize {
        self.faces.len()
    }

    pub fn num_known(&self) -> usize {
        self.faces.len() - self.n_unknown
    }

    pub fn face_kinds(&self) -> Vec<FaceKind> {
        self.faces.iter().map(|f| f.kind).collect()
    }
}

fn extract_one<T: Real>(mesh: &Mesh<T>, pore: usize, tris: &[usize]) -> Result<SubdomainMesh<T>> {
    assert!(!tris.is_empty(), "pore label {pore} without triangles");
    let mut local_of = BTreeMap::new();
    for &t in tris {
        for &v in &mesh.triangles[t] {
            local_of.insert(v, 0usize);
        }
    }
    let vertex_map: Vec<usize> = local_of.keys().copied().collect();
    for (i, &g) in vertex_map.iter().enumerate() {
        local_of.insert(g, i);
    }
    let vertices = vertex_map.iter().map(|&g| mesh.vertices[g]).collect();
    let triangles: Vec<[usize; 3]> = tris
        .iter()
        .map(|&t| {
            let [a, b, c] = mesh.triangles[t];
            [local_of[&a], local_of[&b], local_of[&c]]
        })
        .collect();
    let mut edge_tags = BTreeMap::new();
    for tri in &triangles {
        for k in 0..3 {
            let (a, b) = (tri[k], tri[(k + 1) % 3]);
            if let Some(&tag) = mesh.edge_tags.get(&edge_key(vertex_map[a], vertex_map[b])) {
                edge_tags.insert(edge_key(a, b), tag);
            }
        }
    }
    let local = Mesh {
        vertices,
        triangles,
        edge_tags,
        element_subdomain: vec![0; tris.len()],
        h: mesh.h,
    };
    local.validate_with(true).map_err(|e| Error::Mesh(format!("pore {pore}: {e}")))?;

    let mut faces = Vec::new();
    for alpha in local.interface_ids() {
        faces.push(local.face(FaceKind::Interface(alpha), None));
    }
    let n_unknown = faces.len();
    for kind in [FaceKind::Inlet, FaceKind::Outlet] {
        if local.count_tag(kind.tag()) > 0 {
            faces.push(local.face(kind, None));
        }
    }
    Ok(SubdomainMesh {
        pore_id: pore,
        mesh: local,
        vertex_map,
        triangle_map: tris.to_vec(),
        faces,
        n_unknown,
    })
}

/// Splits a mesh into one submesh per pore label, in label order.
pub fn extract_subdomains<T: Real>(mesh: &Mesh<T>) -> Result<Vec<SubdomainMesh<T>>> {
    let mut tris_of = vec![Vec::new(); mesh.num_subdomains()];
    for (t, &s) in mesh.element_subdomain.iter().enumerate() {
        tris_of[s].push(t);
    }
    tris_of
        .par_iter()
        .enumerate()
        .map(|(pore, tris)| extract_one(mesh, pore, tris))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{interface_segments, GeometrySpec};
    use crate::mesh::build_structured_mesh;

    #[test]
    fn split_channel_faces() {
        let spec = GeometrySpec::channel(2.0, 1.0, 1.0, 0.0, 1.0)
            .unwrap()
            .with_interfaces(vec![[[1.0, 0.0], [1.0, 1.0]]])
            .unwrap();
        let m = build_structured_mesh(&spec, &interface_segments(&spec).unwrap(), 0.25).unwrap();
        let subs = extract_subdomains(&m).unwrap();
        assert_eq!(subs.len(), 2);
        assert_eq!(subs[0].face_kinds(), vec![FaceKind::Interface(0), FaceKind::Inlet]);
        assert_eq!(subs[1].face_kinds(), vec![FaceKind::Interface(0), FaceKind::Outlet]);
        assert_eq!(subs[0].n_unknown, 1);
        // Outward normals: +x on the left pore's interface, -x on the right.
        for n in &subs[0].faces[0].normals {
            assert_eq!(*n, [1.0, 0.0]);
        }
        for n in &subs[1].faces[0].normals {
            assert_eq!(*n, [-1.0, 0.0]);
        }
        for n in &subs[0].faces[1].normals {
            assert_eq!(*n, [-1.0, 0.0]);
        }
        // Both sides see the same undirected edges with exactly negated normals.
        let global = |s: &SubdomainMesh<f64>, f: usize| {
            let mut v: Vec<_> = s.faces[f]
                .edges
                .iter()
                .map(|&[a, b]| edge_key(s.vertex_map[a], s.vertex_map[b]))
                .collect();
            v.sort();
            v
        };
        assert_eq!(global(&subs[0], 0), global(&subs[1], 0));
        assert_eq!(subs.iter().map(|s| s.mesh.num_triangles()).sum::<usize>(), m.num_triangles());
    }

    #[test]
    fn single_pore_has_only_known_faces() {
        let spec = GeometrySpec::channel(2.0, 1.0, 1.0, 0.0, 1.0).unwrap();
        let m = build_structured_mesh(&spec, &interface_segments(&spec).unwrap(), 0.5).unwrap();
        let subs = extract_subdomains(&m).unwrap();
        assert_eq!(subs.len(), 1);
        assert_eq!(subs[0].n_unknown, 0);
        assert_eq!(subs[0].face_kinds(), vec![FaceKind::Inlet, FaceKind::Outlet]);
    }
}
