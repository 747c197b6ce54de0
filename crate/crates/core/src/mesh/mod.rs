//! Conforming triangle meshes with wall/inlet/outlet/interface edge tags and
//! per-element pore labels.

mod io;
mod morph;
mod pslg;
mod structured;
mod subdomain;

use std::collections::{BTreeMap, BTreeSet, HashMap};

pub use io::{read_mesh, write_mesh};
pub use morph::morph_interfaces;
pub use pslg::{build_pslg, Pslg};
pub use structured::build_structured_mesh;
pub use subdomain::{extract_subdomains, SubdomainMesh};

use crate::error::{Error, Result};
use crate::scalar::{dist, orient, scale, sub, Real, Vec2};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum EdgeTag {
    Wall,
    Inlet,
    Outlet,
    /// Internal interface, numbered from 0.
    Interface(usize),
}

/// Undirected edge key with the smaller vertex first.
pub type EdgeKey = (usize, usize);

#[inline]
pub fn edge_key(a: usize, b: usize) -> EdgeKey {
    if a < b {
        (a, b)
    } else {
        (b, a)
    }
}

/// Traction face of a (sub)domain: a set of edges carrying one scalar
/// normal traction.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum FaceKind {
    Interface(usize),
    Inlet,
    Outlet,
}

impl FaceKind {
    pub fn tag(self) -> EdgeTag {
        match self {
            FaceKind::Interface(a) => EdgeTag::Interface(a),
            FaceKind::Inlet => EdgeTag::Inlet,
            FaceKind::Outlet => EdgeTag::Outlet,
        }
    }

    pub fn is_known(self) -> bool {
        !matches!(self, FaceKind::Interface(_))
    }
}

/// Same labels as the mesh edge file: `I<α+1>`, `IN`, `OUT`.
impl std::fmt::Display for FaceKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            FaceKind::Interface(a) => write!(f, "I{}", a + 1),
            FaceKind::Inlet => f.write_str("IN"),
            FaceKind::Outlet => f.write_str("OUT"),
        }
    }
}

impl std::str::FromStr for FaceKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "IN" => Ok(FaceKind::Inlet),
            "OUT" => Ok(FaceKind::Outlet),
            _ => s
                .strip_prefix('I')
                .and_then(|n| n.parse::<usize>().ok())
                .filter(|&n| n >= 1)
                .map(|n| FaceKind::Interface(n - 1))
                .ok_or_else(|| Error::parse("face label", format!("unknown face {s:?}"))),
        }
    }
}

/// Face edges oriented with the owning region on their left, so the outward
/// unit normal of edge `[a, b]` is `(b − a)` rotated clockwise.
#[derive(Debug, Clone, PartialEq)]
pub struct Face<T> {
    pub kind: FaceKind,
    pub edges: Vec<[usize; 2]>,
    pub normals: Vec<Vec2<T>>,
}

impl<T: Real> Face<T> {
    fn from_edges(kind: FaceKind, edges: Vec<[usize; 2]>, vertices: &[Vec2<T>]) -> Self {
        let normals = edges
            .iter()
            .map(|&[a, b]| {
                let d = sub(vertices[b], vertices[a]);
                let len = d[0].hypot(d[1]);
                [d[1] / len, -d[0] / len]
            })
            .collect();
        Face { kind, edges, normals }
    }

    pub fn length(&self, vertices: &[Vec2<T>]) -> T {
        self.edges.iter().map(|&[a, b]| dist(vertices[a], vertices[b])).sum()
    }

    /// Same edges seen from the other side.
    pub fn reversed(&self) -> Self {
        Face {
            kind: self.kind,
            edges: self.edges.iter().map(|&[a, b]| [b, a]).collect(),
            normals: self.normals.iter().map(|n| [-n[0], -n[1]]).collect(),
        }
    }
}

/// Edge numbering shared by the P2 space and refinement. Edges are sorted by
/// key; local edge `k` of a triangle is opposite its vertex `k`.
#[derive(Debug, Clone)]
pub struct EdgeTopology {
    pub edges: Vec<EdgeKey>,
    pub index: HashMap<EdgeKey, usize>,
    pub tri_edges: Vec<[usize; 3]>,
    /// Adjacent triangles; the second is `usize::MAX` on the boundary.
    pub edge_tris: Vec<[usize; 2]>,
}

impl EdgeTopology {
    pub fn is_boundary(&self, e: usize) -> bool {
        self.edge_tris[e][1] == usize::MAX
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Mesh<T> {
    pub vertices: Vec<Vec2<T>>,
    /// Counterclockwise vertex triples.
    pub triangles: Vec<[usize; 3]>,
    pub edge_tags: BTreeMap<EdgeKey, EdgeTag>,
    /// Pore label per triangle, contiguous from 0.
    pub element_subdomain: Vec<usize>,
    pub h: T,
}

impl<T: Real> Mesh<T> {
    /// Assembles a mesh, flipping clockwise triangles, and validates it.
    pub fn from_parts(
        vertices: Vec<Vec2<T>>,
        mut triangles: Vec<[usize; 3]>,
        edge_tags: BTreeMap<EdgeKey, EdgeTag>,
        element_subdomain: Vec<usize>,
        h: T,
    ) -> Result<Self> {
        for (t, tri) in triangles.iter_mut().enumerate() {
            if tri.iter().any(|&v| v >= vertices.len()) {
                return Err(Error::Mesh(format!("triangle {t} references a missing vertex")));
            }
            if orient(vertices[tri[0]], vertices[tri[1]], vertices[tri[2]]) < T::zero() {
                tri.swap(1, 2);
            }
        }
        let mesh = Mesh {
            vertices,
            triangles,
            edge_tags,
            element_subdomain,
            h,
        };
        mesh.validate()?;
        Ok(mesh)
    }

    pub fn num_vertices(&self) -> usize {
        self.vertices.len()
    }

    pub fn num_triangles(&self) -> usize {
        self.triangles.len()
    }

    pub fn num_subdomains(&self) -> usize {
        self.element_subdomain.iter().max().map_or(0, |&m| m + 1)
    }

    pub fn signed_area(&self, t: usize) -> T {
        let [a, b, c] = self.triangles[t];
        orient(self.vertices[a], self.vertices[b], self.vertices[c]) * T::lit(0.5)
    }

    /// Area centroid.
    pub fn centroid(&self) -> Vec2<T> {
        let mut c = [T::zero(); 2];
        let mut area = T::zero();
        let third = T::one() / T::lit(3.0);
        for (t, tri) in self.triangles.iter().enumerate() {
            let a = self.signed_area(t).abs();
            for d in 0..2 {
                c[d] += a * third * tri.iter().map(|&v| self.vertices[v][d]).sum::<T>();
            }
            area += a;
        }
        [c[0] / area, c[1] / area]
    }

    pub fn area(&self) -> T {
        (0..self.triangles.len()).map(|t| self.signed_area(t)).sum()
    }

    pub fn edge_topology(&self) -> EdgeTopology {
        let mut tris_of: BTreeMap<EdgeKey, Vec<usize>> = BTreeMap::new();
        for (t, tri) in self.triangles.iter().enumerate() {
            for k in 0..3 {
                tris_of
                    .entry(edge_key(tri[(k + 1) % 3], tri[(k + 2) % 3]))
                    .or_default()
                    .push(t);
            }
        }
        let edges: Vec<EdgeKey> = tris_of.keys().copied().collect();
        let index: HashMap<EdgeKey, usize> = edges.iter().enumerate().map(|(i, &e)| (e, i)).collect();
        let edge_tris = tris_of
            .values()
            .map(|ts| [ts[0], ts.get(1).copied().unwrap_or(usize::MAX)])
            .collect();
        let tri_edges = self
            .triangles
            .iter()
            .map(|tri| {
                let mut out = [0; 3];
                for (k, o) in out.iter_mut().enumerate() {
                    *o = index[&edge_key(tri[(k + 1) % 3], tri[(k + 2) % 3])];
                }
                out
            })
            .collect();
        EdgeTopology {
            edges,
            index,
            tri_edges,
            edge_tris,
        }
    }

    /// Interface ids present in the tags, ascending.
    pub fn interface_ids(&self) -> Vec<usize> {
        let set: BTreeSet<usize> = self
            .edge_tags
            .values()
            .filter_map(|t| match t {
                EdgeTag::Interface(a) => Some(*a),
                _ => None,
            })
            .collect();
        set.into_iter().collect()
    }

    pub fn count_tag(&self, tag: EdgeTag) -> usize {
        self.edge_tags.values().filter(|&&t| t == tag).count()
    }

    /// Checks orientation, conformity, tagging and labeling rules.
    pub fn validate(&self) -> Result<()> {
        self.validate_with(false)
    }

    pub(crate) fn validate_with(&self, interfaces_on_boundary: bool) -> Result<()> {
        if self.element_subdomain.len() != self.triangles.len() {
            return Err(Error::Mesh("one subdomain label per triangle required".into()));
        }
        if !(self.h > T::zero()) {
            return Err(Error::Mesh("mesh size h must be positive".into()));
        }
        for t in 0..self.triangles.len() {
            if !(self.signed_area(t) > T::zero()) {
                return Err(Error::Mesh(format!("triangle {} is degenerate or inverted", t + 1)));
            }
        }
        let n_sub = self.num_subdomains();
        let mut present = vec![false; n_sub];
        for &s in &self.element_subdomain {
            present[s] = true;
        }
        if let Some(s) = present.iter().position(|p| !p) {
            return Err(Error::Mesh(format!("subdomain label {s} has no triangles")));
        }

        let mut tris_of: HashMap<EdgeKey, Vec<usize>> = HashMap::new();
        for (t, tri) in self.triangles.iter().enumerate() {
            for k in 0..3 {
                tris_of.entry(edge_key(tri[k], tri[(k + 1) % 3])).or_default().push(t);
            }
        }
        for (&key, tris) in &tris_of {
            let tag = self.edge_tags.get(&key).copied();
            let (a, b) = (key.0 + 1, key.1 + 1);
            match tris.len() {
                1 => match tag {
                    Some(EdgeTag::Wall | EdgeTag::Inlet | EdgeTag::Outlet) => {}
                    Some(EdgeTag::Interface(_)) if interfaces_on_boundary => {}
                    Some(EdgeTag::Interface(_)) => {
                        return Err(Error::Mesh(format!("interface edge ({a}, {b}) lies on the boundary")))
                    }
                    None => return Err(Error::Mesh(format!("untagged boundary edge ({a}, {b})"))),
                },
                2 => {
                    let (s0, s1) = (self.element_subdomain[tris[0]], self.element_subdomain[tris[1]]);
                    match tag {
                        None if s0 != s1 => {
                            return Err(Error::Mesh(format!(
                                "edge ({a}, {b}) separates subdomains {s0} and {s1} without an interface tag"
                            )))
                        }
                        Some(EdgeTag::Interface(_)) if s0 == s1 => {
                            return Err(Error::Mesh(format!(
                                "interface edge ({a}, {b}) has subdomain {s0} on both sides"
                            )))
                        }
                        Some(EdgeTag::Wall | EdgeTag::Inlet | EdgeTag::Outlet) => {
                            return Err(Error::Mesh(format!("boundary tag on interior edge ({a}, {b})")))
                        }
                        _ => {}
                    }
                }
                _ => return Err(Error::Mesh(format!("edge ({a}, {b}) shared by more than two triangles"))),
            }
        }
        for key in self.edge_tags.keys() {
            if !tris_of.contains_key(key) {
                return Err(Error::Mesh(format!(
                    "tagged edge ({}, {}) is not a mesh edge",
                    key.0 + 1,
                    key.1 + 1
                )));
            }
        }
        for alpha in self.interface_ids() {
            self.interface_chain(alpha)?;
        }
        Ok(())
    }

    /// Vertices of interface `alpha` in path order; errors unless its edges
    /// tile one straight segment.
    pub fn interface_chain(&self, alpha: usize) -> Result<Vec<usize>> {
        let edges: Vec<EdgeKey> = self
            .edge_tags
            .iter()
            .filter(|(_, &t)| t == EdgeTag::Interface(alpha))
            .map(|(&k, _)| k)
            .collect();
        let bad = || Error::Mesh(format!("interface {} is not tiled by a single chain of edges", alpha + 1));
        let mut adj: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
        for &(a, b) in &edges {
            adj.entry(a).or_default().push(b);
            adj.entry(b).or_default().push(a);
        }
        if adj.values().any(|n| n.len() > 2) {
            return Err(bad());
        }
        let ends: Vec<usize> = adj.iter().filter(|(_, n)| n.len() == 1).map(|(&v, _)| v).collect();
        if ends.len() != 2 {
            return Err(bad());
        }
        let mut chain = vec![ends[0]];
        let mut prev = usize::MAX;
        let mut cur = ends[0];
        while let Some(&next) = adj[&cur].iter().find(|&&n| n != prev) {
            chain.push(next);
            prev = cur;
            cur = next;
            if chain.len() > edges.len() + 1 {
                return Err(bad());
            }
        }
        if chain.len() != edges.len() + 1 {
            return Err(bad());
        }
        let (p, q) = (self.vertices[chain[0]], self.vertices[*chain.last().unwrap()]);
        let len = dist(p, q);
        for &v in &chain {
            if orient(p, q, self.vertices[v]).abs() > T::lit(1e-8) * len * len {
                return Err(Error::Mesh(format!("interface {} is not straight", alpha + 1)));
            }
        }
        Ok(chain)
    }

    fn oriented_edges(&self, tag: EdgeTag, side: Option<usize>) -> Vec<[usize; 2]> {
        let mut out = Vec::new();
        for (t, tri) in self.triangles.iter().enumerate() {
            if side.is_some_and(|s| self.element_subdomain[t] != s) {
                continue;
            }
            for k in 0..3 {
                let (a, b) = (tri[k], tri[(k + 1) % 3]);
                if self.edge_tags.get(&edge_key(a, b)) == Some(&tag) {
                    out.push([a, b]);
                }
            }
        }
        out.sort_by_key(|e| edge_key(e[0], e[1]));
        out
    }

    /// All edges carrying `kind`'s tag, oriented outward from subdomain
    /// `side` (or from the whole mesh when `None`).
    pub fn face(&self, kind: FaceKind, side: Option<usize>) -> Face<T> {
        Face::from_edges(kind, self.oriented_edges(kind.tag(), side), &self.vertices)
    }

    /// Interface face with the canonical normal, pointing from the lower pore
    /// label to the higher one.
    pub fn interface_face(&self, alpha: usize) -> Result<Face<T>> {
        let labels = self.interface_sides(alpha)?;
        Ok(self.face(FaceKind::Interface(alpha), Some(labels.0)))
    }

    /// The two pore labels flanking interface `alpha`, lower first.
    pub fn interface_sides(&self, alpha: usize) -> Result<(usize, usize)> {
        let mut labels = BTreeSet::new();
        for (t, tri) in self.triangles.iter().enumerate() {
            for k in 0..3 {
                if self.edge_tags.get(&edge_key(tri[k], tri[(k + 1) % 3])) == Some(&EdgeTag::Interface(alpha)) {
                    labels.insert(self.element_subdomain[t]);
                }
            }
        }
        let v: Vec<usize> = labels.into_iter().collect();
        match v.as_slice() {
            [a, b] => Ok((*a, *b)),
            _ => Err(Error::Mesh(format!(
                "interface {} must separate exactly two subdomains, found {v:?}",
                alpha + 1
            ))),
        }
    }

    /// Uniform red refinement: every triangle split into four, tags and
    /// labels inherited, `h` halved.
    pub fn refine(&self) -> Mesh<T> {
        let topo = self.edge_topology();
        let nv = self.vertices.len();
        let mut vertices = self.vertices.clone();
        for &(a, b) in &topo.edges {
            let (p, q) = (self.vertices[a], self.vertices[b]);
            vertices.push(scale([p[0] + q[0], p[1] + q[1]], T::lit(0.5)));
        }
        let mut triangles = Vec::with_capacity(4 * self.triangles.len());
        let mut element_subdomain = Vec::with_capacity(4 * self.triangles.len());
        for (t, tri) in self.triangles.iter().enumerate() {
            let [a, b, c] = *tri;
            let [ea, eb, ec] = topo.tri_edges[t];
            // Midpoint opposite each vertex.
            let (ma, mb, mc) = (nv + ea, nv + eb, nv + ec);
            triangles.push([a, mc, mb]);
            triangles.push([mc, b, ma]);
            triangles.push([mb, ma, c]);
            triangles.push([ma, mb, mc]);
            element_subdomain.extend([self.element_subdomain[t]; 4]);
        }
        let mut edge_tags = BTreeMap::new();
        for (&(a, b), &tag) in &self.edge_tags {
            let m = nv + topo.index[&(a, b)];
            edge_tags.insert(edge_key(a, m), tag);
            edge_tags.insert(edge_key(m, b), tag);
        }
        Mesh {
            vertices,
            triangles,
            edge_tags,
            element_subdomain,
            h: self.h * T::lit(0.5),
        }
    }

    /// Checks that every interface is at least `2h` long.
    pub fn check_gap_resolution(&self) -> Result<()> {
        for alpha in self.interface_ids() {
            let chain = self.interface_chain(alpha)?;
            let len = dist(self.vertices[chain[0]], self.vertices[*chain.last().unwrap()]);
            if len < T::lit(2.0) * self.h * T::lit(1.0 - 1e-9) {
                return Err(Error::Mesh(format!(
                    "interface {} spans a gap of {len}, narrower than 2h = {}",
                    alpha + 1,
                    T::lit(2.0) * self.h
                )));
            }
        }
        Ok(())
    }
}
