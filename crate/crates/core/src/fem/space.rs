use crate::mesh::{edge_key, EdgeTag, EdgeTopology, Mesh};
use crate::scalar::{Real, Vec2};

/// Taylor–Hood P2/P1 space on a mesh.
///
/// Velocity nodes are the vertices followed by the edge midpoints (in
/// [`EdgeTopology`] order); velocity dofs are component-major, so dof
/// `c * n_nodes + node` is component `c` at `node`. Pressure dofs are the
/// vertices.
#[derive(Debug, Clone)]
pub struct FESpace<T> {
    pub mesh: Mesh<T>,
    pub edges: EdgeTopology,
    pub n_nodes: usize,
    pub n_u: usize,
    pub n_p: usize,
    /// Per velocity dof: on a wall-tagged edge.
    pub dirichlet: Vec<bool>,
    /// Sorted indices of the Dirichlet dofs.
    pub dirichlet_set: Vec<usize>,
    /// Whether any inlet, outlet or interface edge exists.
    pub has_traction_face: bool,
}

impl<T: Real> FESpace<T> {
    pub fn new(mesh: &Mesh<T>) -> Self {
        let edges = mesh.edge_topology();
        let nv = mesh.num_vertices();
        let n_nodes = nv + edges.edges.len();
        let mut wall_node = vec![false; n_nodes];
        let mut has_traction_face = false;
        for (&(a, b), tag) in &mesh.edge_tags {
            if *tag == EdgeTag::Wall {
                wall_node[a] = true;
                wall_node[b] = true;
                if let Some(&e) = edges.index.get(&(a, b)) {
                    wall_node[nv + e] = true;
                }
            } else if edges.index.contains_key(&(a, b)) {
                has_traction_face = true;
            }
        }
        let mut dirichlet = vec![false; 2 * n_nodes];
        for (n, &w) in wall_node.iter().enumerate() {
            dirichlet[n] = w;
            dirichlet[n_nodes + n] = w;
        }
        let dirichlet_set = dirichlet.iter().enumerate().filter(|p| *p.1).map(|p| p.0).collect();
        FESpace {
            mesh: mesh.clone(),
            edges,
            n_nodes,
            n_u: 2 * n_nodes,
            n_p: nv,
            dirichlet,
            dirichlet_set,
            has_traction_face,
        }
    }

    pub fn num_vertices(&self) -> usize {
        self.mesh.num_vertices()
    }

    /// The six velocity nodes of triangle `t` in local element order.
    #[inline]
    pub fn element_nodes(&self, t: usize) -> [usize; 6] {
        let tri = self.mesh.triangles[t];
        let te = self.edges.tri_edges[t];
        let nv = self.num_vertices();
        [tri[0], tri[1], tri[2], nv + te[0], nv + te[1], nv + te[2]]
    }

    pub fn element_coords(&self, t: usize) -> [Vec2<T>; 3] {
        let tri = self.mesh.triangles[t];
        [self.mesh.vertices[tri[0]], self.mesh.vertices[tri[1]], self.mesh.vertices[tri[2]]]
    }

    /// Velocity node at the midpoint of edge `[a, b]`.
    pub fn edge_node(&self, a: usize, b: usize) -> Option<usize> {
        self.edges.index.get(&edge_key(a, b)).map(|&e| self.num_vertices() + e)
    }

    /// Coordinates of a velocity node.
    pub fn node_position(&self, node: usize) -> Vec2<T> {
        let nv = self.num_vertices();
        if node < nv {
            self.mesh.vertices[node]
        } else {
            let (a, b) = self.edges.edges[node - nv];
            let (pa, pb) = (self.mesh.vertices[a], self.mesh.vertices[b]);
            let half = T::lit(0.5);
            [(pa[0] + pb[0]) * half, (pa[1] + pb[1]) * half]
        }
    }

    /// Zeroes the Dirichlet entries of a velocity vector.
    pub fn zero_dirichlet(&self, v: &mut [T]) {
        for &d in &self.dirichlet_set {
            v[d] = T::zero();
        }
    }

    /// Velocity coefficients interpolating `f` at the nodes.
    pub fn interpolate_velocity(&self, f: impl Fn(Vec2<T>) -> Vec2<T>) -> Vec<T> {
        let mut u = vec![T::zero(); self.n_u];
        for n in 0..self.n_nodes {
            let v = f(self.node_position(n));
            u[n] = v[0];
            u[self.n_nodes + n] = v[1];
        }
        u
    }

    pub fn interpolate_pressure(&self, f: impl Fn(Vec2<T>) -> T) -> Vec<T> {
        self.mesh.vertices.iter().map(|&x| f(x)).collect()
    }
}
