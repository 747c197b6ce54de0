//! Moves the interfaces of an existing mesh to new positions without
//! remeshing: interface endpoints slide along their boundary curve, the
//! other boundary vertices between fixed corners are redistributed, and
//! interior vertices follow a harmonic extension of the displacement.

use std::collections::{BTreeMap, HashMap};

use super::{EdgeTag, Mesh};
use crate::error::{Error, Result};
use crate::geometry::{GeometrySpec, InterfaceSegment, SegmentKind, Solid};
use crate::scalar::{cross, dist, dot, sub, Real, Vec2};
use crate::sparse::pcg;

enum Param<T> {
    /// Angle coordinate times `sign`, so coordinates grow along the walk.
    Circle { center: Vec2<T>, radius: T, sign: T },
    Polyline { points: Vec<Vec2<T>>, cumulative: Vec<T> },
}

impl<T: Real> Param<T> {
    fn eval(&self, s: T) -> Vec2<T> {
        match self {
            Param::Circle { center, radius, sign } => {
                let a = *sign * s;
                [center[0] + *radius * a.cos(), center[1] + *radius * a.sin()]
            }
            Param::Polyline { points, cumulative } => {
                let n = points.len();
                let s = s.max(T::zero()).min(cumulative[n - 1]);
                let k = cumulative.partition_point(|&c| c <= s).clamp(1, n - 1);
                let (c0, c1) = (cumulative[k - 1], cumulative[k]);
                let t = if c1 > c0 { (s - c0) / (c1 - c0) } else { T::zero() };
                let (p, q) = (points[k - 1], points[k]);
                [p[0] + t * (q[0] - p[0]), p[1] + t * (q[1] - p[1])]
            }
        }
    }

    /// Coordinate of the point of the curve closest to `p`; for circles the
    /// angle is unwrapped next to `near`.
    fn coordinate(&self, p: Vec2<T>, near: T) -> T {
        match self {
            Param::Circle { center, sign, .. } => {
                let a = *sign * (p[1] - center[1]).atan2(p[0] - center[0]);
                let tau = T::lit(std::f64::consts::TAU);
                let mut d = (a - near) % tau;
                if d > T::lit(std::f64::consts::PI) {
                    d -= tau;
                } else if d < -T::lit(std::f64::consts::PI) {
                    d += tau;
                }
                near + d
            }
            Param::Polyline { points, cumulative } => {
                let mut best = (T::infinity(), T::zero());
                for k in 1..points.len() {
                    let (a, b) = (points[k - 1], points[k]);
                    let ab = sub(b, a);
                    let l2 = dot(ab, ab);
                    let t = if l2 > T::zero() {
                        (dot(sub(p, a), ab) / l2).max(T::zero()).min(T::one())
                    } else {
                        T::zero()
                    };
                    let q = [a[0] + t * ab[0], a[1] + t * ab[1]];
                    let d = dist(p, q);
                    if d < best.0 {
                        best = (d, cumulative[k - 1] + t * (cumulative[k] - cumulative[k - 1]));
                    }
                }
                best.1
            }
        }
    }
}

fn interp<T: Real>(knots: &[(T, T)], s: T) -> T {
    let k = knots.partition_point(|kn| kn.0 <= s).clamp(1, knots.len() - 1);
    let ((a0, b0), (a1, b1)) = (knots[k - 1], knots[k]);
    b0 + (s - a0) * (b1 - b0) / (a1 - a0)
}

/// Returns a copy of `mesh` whose interface `α` runs between the endpoints of
/// `new[α]` instead of `old[α]`. Errors if any triangle would invert.
pub fn morph_interfaces<T: Real>(
    mesh: &Mesh<T>,
    spec: &GeometrySpec<T>,
    old: &[InterfaceSegment<T>],
    new: &[InterfaceSegment<T>],
) -> Result<Mesh<T>> {
    let nv = mesh.vertices.len();
    let scale = spec.domain.width().max(spec.domain.height());
    let tol = T::lit(1e-6) * scale;
    let old_by_id: HashMap<usize, &InterfaceSegment<T>> =
        old.iter().filter(|s| s.kind == SegmentKind::Internal).map(|s| (s.id, s)).collect();
    let new_by_id: HashMap<usize, &InterfaceSegment<T>> =
        new.iter().filter(|s| s.kind == SegmentKind::Internal).map(|s| (s.id, s)).collect();

    let mut target: Vec<Option<Vec2<T>>> = vec![None; nv];
    let mut anchors: HashMap<usize, Vec2<T>> = HashMap::new();
    let mut chains = Vec::new();
    for alpha in mesh.interface_ids() {
        let (Some(o), Some(n)) = (old_by_id.get(&alpha), new_by_id.get(&alpha)) else {
            return Err(Error::InvalidArgument(format!("no segment pair for interface {}", alpha + 1)));
        };
        let chain = mesh.interface_chain(alpha)?;
        let (va, vb) = (chain[0], *chain.last().unwrap());
        let pa = mesh.vertices[va];
        let (na, nb) = if dist(pa, o.endpoints[0]) <= dist(pa, o.endpoints[1]) {
            (n.endpoints[0], n.endpoints[1])
        } else {
            (n.endpoints[1], n.endpoints[0])
        };
        let (oa, ob) = if dist(pa, o.endpoints[0]) <= dist(pa, o.endpoints[1]) {
            (o.endpoints[0], o.endpoints[1])
        } else {
            (o.endpoints[1], o.endpoints[0])
        };
        if dist(mesh.vertices[va], oa) > tol || dist(mesh.vertices[vb], ob) > tol {
            return Err(Error::InvalidArgument(format!(
                "interface {} in the mesh does not match its segment",
                alpha + 1
            )));
        }
        anchors.insert(va, na);
        anchors.insert(vb, nb);
        chains.push((chain, na, nb));
    }
    if anchors.iter().all(|(&v, &p)| mesh.vertices[v] == p) {
        return Ok(mesh.clone());
    }

    // Boundary loops.
    let topo = mesh.edge_topology();
    let mut bnbr: BTreeMap<usize, Vec<(usize, EdgeTag)>> = BTreeMap::new();
    for (e, &(a, b)) in topo.edges.iter().enumerate() {
        if topo.is_boundary(e) {
            let tag = mesh.edge_tags[&(a, b)];
            bnbr.entry(a).or_default().push((b, tag));
            bnbr.entry(b).or_default().push((a, tag));
        }
    }
    if bnbr.values().any(|n| n.len() != 2) {
        return Err(Error::Mesh("boundary is not a union of simple loops".into()));
    }
    let on_circle = |p: Vec2<T>, center: Vec2<T>, radius: T| (dist(p, center) - radius).abs() <= T::lit(1e-6) * radius;
    // Smooth boundary vertices lie on a straight run or on one disk circle
    // together with both neighbours; everything else is a fixed corner.
    let is_corner = |v: usize| -> bool {
        let nb = &bnbr[&v];
        if nb[0].1 != nb[1].1 {
            return true;
        }
        let (p, a, b) = (mesh.vertices[v], mesh.vertices[nb[0].0], mesh.vertices[nb[1].0]);
        let (e1, e2) = (sub(p, a), sub(b, p));
        let straight = cross(e1, e2).abs() <= T::lit(1e-9) * dist(p, a) * dist(b, p) && dot(e1, e2) > T::zero();
        let round = spec.solids.iter().any(|s| match *s {
            Solid::Disk { center, radius } => {
                on_circle(p, center, radius) && on_circle(a, center, radius) && on_circle(b, center, radius)
            }
            Solid::Rect { .. } => false,
        });
        !(straight || round)
    };
    let mut visited = vec![false; nv];
    for (&start, _) in &bnbr {
        if visited[start] {
            continue;
        }
        // Collect the loop in order.
        let mut lp = vec![start];
        visited[start] = true;
        let mut prev = start;
        let mut cur = bnbr[&start][0].0;
        while cur != start {
            visited[cur] = true;
            lp.push(cur);
            let nb = &bnbr[&cur];
            let next = if nb[0].0 != prev { nb[0].0 } else { nb[1].0 };
            prev = cur;
            cur = next;
        }
        if !lp.iter().any(|v| anchors.contains_key(v)) {
            continue;
        }
        let corners: Vec<usize> = (0..lp.len()).filter(|&i| is_corner(lp[i])).collect();
        if corners.iter().any(|&i| anchors.get(&lp[i]).is_some_and(|&p| p != mesh.vertices[lp[i]])) {
            return Err(Error::Mesh("an interface endpoint sits on a boundary corner".into()));
        }
        // Stretches between consecutive corners (whole loop if none).
        let stretches: Vec<(Vec<usize>, bool)> = if corners.is_empty() {
            let mut s = lp.clone();
            s.push(lp[0]);
            vec![(s, true)]
        } else {
            let n = lp.len();
            corners
                .iter()
                .enumerate()
                .map(|(k, &c0)| {
                    let c1 = corners[(k + 1) % corners.len()];
                    let len = (c1 + n - c0 - 1) % n + 1;
                    ((0..=len).map(|j| lp[(c0 + j) % n]).collect(), false)
                })
                .collect()
        };
        for (st, periodic) in stretches {
            if !st.iter().any(|v| anchors.contains_key(v)) {
                continue;
            }
            let pts: Vec<Vec2<T>> = st.iter().map(|&v| mesh.vertices[v]).collect();
            let circle = spec.solids.iter().find_map(|s| match *s {
                Solid::Disk { center, radius } if pts.iter().all(|&p| on_circle(p, center, radius)) =>
                {
                    Some((center, radius))
                }
                _ => None,
            });
            let (param, sigma): (Param<T>, Vec<T>) = match circle {
                Some((center, radius)) => {
                    let mut p = Param::Circle { center, radius, sign: T::one() };
                    let walk = |p: &Param<T>| {
                        let mut sig = vec![p.coordinate(pts[0], T::zero())];
                        for k in 1..pts.len() {
                            let s = p.coordinate(pts[k], sig[k - 1]);
                            sig.push(s);
                        }
                        sig
                    };
                    let mut sig = walk(&p);
                    if sig[sig.len() - 1] < sig[0] {
                        p = Param::Circle { center, radius, sign: -T::one() };
                        sig = walk(&p);
                    }
                    (p, sig)
                }
                None => {
                    let mut cum = vec![T::zero()];
                    for k in 1..pts.len() {
                        let c = cum[k - 1] + dist(pts[k - 1], pts[k]);
                        cum.push(c);
                    }
                    let sig = cum.clone();
                    (Param::Polyline { points: pts.clone(), cumulative: cum }, sig)
                }
            };
            let last = st.len() - 1;
            let mut knots: Vec<(T, T)> = Vec::new();
            let mut anchor_knots: Vec<(T, T)> = Vec::new();
            for (k, v) in st.iter().enumerate() {
                if let Some(&p) = anchors.get(v) {
                    if periodic && k == last {
                        continue;
                    }
                    anchor_knots.push((sigma[k], param.coordinate(p, sigma[k])));
                }
            }
            if periodic {
                let period = sigma[last] - sigma[0];
                anchor_knots.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
                let first = anchor_knots[0];
                let lastk = *anchor_knots.last().unwrap();
                knots.push((lastk.0 - period, lastk.1 - period));
                knots.extend(anchor_knots.iter().copied());
                knots.push((first.0 + period, first.1 + period));
            } else {
                knots.push((sigma[0], sigma[0]));
                knots.extend(anchor_knots.iter().copied());
                knots.push((sigma[last], sigma[last]));
            }
            if knots.windows(2).any(|w| !(w[1].0 > w[0].0 && w[1].1 > w[0].1)) {
                return Err(Error::Mesh("perturbation moves an interface endpoint past another".into()));
            }
            for (k, &v) in st.iter().enumerate() {
                if (!periodic && (k == 0 || k == last)) || (periodic && k == last) {
                    continue;
                }
                target[v] = Some(match anchors.get(&v) {
                    Some(&p) => p,
                    None => param.eval(interp(&knots, sigma[k])),
                });
            }
        }
    }

    for (chain, na, nb) in &chains {
        let (pa, pb) = (mesh.vertices[chain[0]], mesh.vertices[*chain.last().unwrap()]);
        let len = dist(pa, pb);
        for &v in chain {
            let t = dist(mesh.vertices[v], pa) / len;
            target[v] = Some([na[0] + t * (nb[0] - na[0]), na[1] + t * (nb[1] - na[1])]);
        }
    }

    // Harmonic extension of the displacement into the interior.
    let on_constraint: Vec<bool> = (0..nv).map(|v| target[v].is_some() || bnbr.contains_key(&v)).collect();
    let disp: Vec<Vec2<T>> = (0..nv)
        .map(|v| target[v].map_or([T::zero(); 2], |p| sub(p, mesh.vertices[v])))
        .collect();
    let free: Vec<usize> = (0..nv).filter(|&v| !on_constraint[v]).collect();
    let mut free_index = vec![usize::MAX; nv];
    for (i, &v) in free.iter().enumerate() {
        free_index[v] = i;
    }
    let mut nbrs = vec![Vec::new(); nv];
    for &(a, b) in &topo.edges {
        nbrs[a].push(b);
        nbrs[b].push(a);
    }
    let mut vertices = mesh.vertices.clone();
    for v in 0..nv {
        if let Some(p) = target[v] {
            vertices[v] = p;
        }
    }
    if !free.is_empty() {
        let apply = |x: &[T]| -> Vec<T> {
            free.iter()
                .map(|&v| {
                    let mut s = T::lit(nbrs[v].len() as f64) * x[free_index[v]];
                    for &w in &nbrs[v] {
                        if free_index[w] != usize::MAX {
                            s -= x[free_index[w]];
                        }
                    }
                    s
                })
                .collect()
        };
        let precond = |r: &[T]| -> Vec<T> {
            free.iter()
                .enumerate()
                .map(|(i, &v)| r[i] / T::lit(nbrs[v].len() as f64))
                .collect()
        };
        for comp in 0..2 {
            let b: Vec<T> = free
                .iter()
                .map(|&v| {
                    nbrs[v]
                        .iter()
                        .filter(|&&w| free_index[w] == usize::MAX)
                        .map(|&w| disp[w][comp])
                        .sum()
                })
                .collect();
            let mut x = vec![T::zero(); free.len()];
            let out = pcg(&apply, &precond, &b, &mut x, T::lit(1e-12), 10 * free.len() + 100);
            if !out.converged {
                return Err(Error::NonConvergence("harmonic mesh extension did not converge".into()));
            }
            for (i, &v) in free.iter().enumerate() {
                vertices[v][comp] += x[i];
            }
        }
    }

    for (t, tri) in mesh.triangles.iter().enumerate() {
        if !(crate::scalar::orient(vertices[tri[0]], vertices[tri[1]], vertices[tri[2]]) > T::zero()) {
            return Err(Error::Mesh(format!(
                "moving the interfaces inverts triangle {}; use a finer mesh or smaller perturbation",
                t + 1
            )));
        }
    }
    Mesh::from_parts(
        vertices,
        mesh.triangles.clone(),
        mesh.edge_tags.clone(),
        mesh.element_subdomain.clone(),
        mesh.h,
    )
}
