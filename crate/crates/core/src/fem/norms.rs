use super::element::{p2_gradients, p2_values, TriangleGeometry, TRI_RULE_DEG4};
use super::FlowField;
use crate::error::{Error, Result};
use crate::scalar::{Real, Vec2};

/// Local data of one element: vertex coordinates, the six P2 coefficients
/// per velocity component and the three P1 pressure coefficients.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ElementValues<T> {
    pub coords: [Vec2<T>; 3],
    pub u: [[T; 6]; 2],
    pub p: [T; 3],
}

/// A (possibly discontinuous across subdomains) P2/P1 field viewed element
/// by element in the parent mesh's triangle order.
pub trait ElementField<T: Real> {
    fn num_elements(&self) -> usize;
    fn element_values(&self, t: usize) -> ElementValues<T>;
    fn element_label(&self, _t: usize) -> usize {
        0
    }
}

impl<T: Real> ElementField<T> for FlowField<T> {
    fn num_elements(&self) -> usize {
        self.space.mesh.num_triangles()
    }

    fn element_values(&self, t: usize) -> ElementValues<T> {
        let s = &self.space;
        let nodes = s.element_nodes(t);
        let tri = s.mesh.triangles[t];
        ElementValues {
            coords: s.element_coords(t),
            u: [nodes.map(|n| self.u[n]), nodes.map(|n| self.u[s.n_nodes + n])],
            p: tri.map(|v| self.p[v]),
        }
    }

    fn element_label(&self, t: usize) -> usize {
        self.space.mesh.element_subdomain[t]
    }
}

/// Per-subdomain fields glued into a broken field on the parent mesh.
#[derive(Debug, Clone)]
pub struct BrokenField<T> {
    pub parts: Vec<FlowField<T>>,
    /// Per parent triangle: `(part, local triangle)`.
    pub owner: Vec<(usize, usize)>,
}

impl<T: Real> BrokenField<T> {
    /// `triangle_maps[i][k]` is the parent index of local triangle `k` of
    /// part `i`; every parent triangle must be covered once.
    pub fn new(parts: Vec<FlowField<T>>, triangle_maps: &[Vec<usize>], n_parent: usize) -> Result<Self> {
        if parts.len() != triangle_maps.len() {
            return Err(Error::InvalidArgument("one triangle map per part required".into()));
        }
        let mut owner = vec![(usize::MAX, 0); n_parent];
        for (i, map) in triangle_maps.iter().enumerate() {
            for (k, &t) in map.iter().enumerate() {
                if t >= n_parent || owner[t].0 != usize::MAX {
                    return Err(Error::InvalidArgument(format!("parent triangle {t} covered twice or out of range")));
                }
                owner[t] = (i, k);
            }
        }
        if owner.iter().any(|o| o.0 == usize::MAX) {
            return Err(Error::InvalidArgument("parts do not cover the parent mesh".into()));
        }
        Ok(BrokenField { parts, owner })
    }
}

impl<T: Real> ElementField<T> for BrokenField<T> {
    fn num_elements(&self) -> usize {
        self.owner.len()
    }

    fn element_values(&self, t: usize) -> ElementValues<T> {
        let (i, k) = self.owner[t];
        self.parts[i].element_values(k)
    }

    fn element_label(&self, t: usize) -> usize {
        self.owner[t].0
    }
}

/// Squared norms behind [`error_norms`].
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct NormBreakdown<T> {
    /// `‖u_a − u_b‖²_{H¹}` (full norm).
    pub du_h1_sq: T,
    /// `‖p_a − p_b‖²_{L²}`.
    pub dp_l2_sq: T,
    pub u_h1_sq: T,
    pub p_l2_sq: T,
}

impl<T: Real> NormBreakdown<T> {
    /// Combined relative error of the velocity–pressure pair.
    pub fn relative(&self) -> T {
        ((self.du_h1_sq + self.dp_l2_sq) / (self.u_h1_sq + self.p_l2_sq)).sqrt()
    }

    pub fn velocity_relative(&self) -> T {
        (self.du_h1_sq / self.u_h1_sq).sqrt()
    }

    pub fn pressure_relative(&self) -> T {
        (self.dp_l2_sq / self.p_l2_sq).sqrt()
    }
}

/// Element-wise exact quadrature of the difference norms of `a − b` and the
/// norms of `b`.
pub fn norm_breakdown<T: Real>(a: &dyn ElementField<T>, b: &dyn ElementField<T>) -> Result<NormBreakdown<T>> {
    if a.num_elements() != b.num_elements() {
        return Err(Error::InvalidArgument(format!(
            "fields have {} and {} elements",
            a.num_elements(),
            b.num_elements()
        )));
    }
    let mut out = NormBreakdown::default();
    for t in 0..a.num_elements() {
        let ea = a.element_values(t);
        let eb = b.element_values(t);
        if ea.coords != eb.coords {
            return Err(Error::InvalidArgument(format!("fields differ in geometry at element {t}")));
        }
        let g = TriangleGeometry::new(eb.coords);
        let area = g.area.abs();
        for (l, w) in TRI_RULE_DEG4.iter() {
            let l = [T::lit(l[0]), T::lit(l[1]), T::lit(l[2])];
            let w = T::lit(*w) * area;
            let phi = p2_values(l);
            let grads = p2_gradients(l, &g.grad_lambda);
            for c in 0..2 {
                let (mut va, mut vb) = (T::zero(), T::zero());
                let (mut ga, mut gb) = ([T::zero(); 2], [T::zero(); 2]);
                for j in 0..6 {
                    va += ea.u[c][j] * phi[j];
                    vb += eb.u[c][j] * phi[j];
                    for d in 0..2 {
                        ga[d] += ea.u[c][j] * grads[j][d];
                        gb[d] += eb.u[c][j] * grads[j][d];
                    }
                }
                let (dv, dg0, dg1) = (va - vb, ga[0] - gb[0], ga[1] - gb[1]);
                out.du_h1_sq += w * (dv * dv + dg0 * dg0 + dg1 * dg1);
                out.u_h1_sq += w * (vb * vb + gb[0] * gb[0] + gb[1] * gb[1]);
            }
            let pa: T = (0..3).map(|q| ea.p[q] * l[q]).sum();
            let pb: T = (0..3).map(|q| eb.p[q] * l[q]).sum();
            out.dp_l2_sq += w * (pa - pb) * (pa - pb);
            out.p_l2_sq += w * pb * pb;
        }
    }
    Ok(out)
}

/// `(‖u_a−u_b‖²_{H¹} + ‖p_a−p_b‖²_{L²})^{1/2} / (‖u_b‖²_{H¹} + ‖p_b‖²_{L²})^{1/2}`.
pub fn error_norms<T: Real>(a: &dyn ElementField<T>, b: &dyn ElementField<T>) -> Result<T> {
    let n = norm_breakdown(a, b)?;
    if n.u_h1_sq + n.p_l2_sq == T::zero() {
        return Err(Error::InvalidArgument("reference field has zero norm".into()));
    }
    Ok(n.relative())
}
