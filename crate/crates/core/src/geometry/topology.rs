//! Pore/throat topology of a packing from a Delaunay triangulation of solid
//! centers augmented with their mirror images across the domain walls.

use delaunator::{triangulate, Point, EMPTY};

use super::interfaces::{throat_segment, Flank};
use super::{distance_to_solid, GeometrySpec, Solid, WallSide};
use crate::error::{Error, Result};
use crate::scalar::{dist, orient, Real, Vec2};

/// A pore body: site of maximal clearance inside its region.
#[derive(Debug, Clone, PartialEq)]
pub struct PoreSite<T> {
    pub position: Vec2<T>,
    /// Distance from the site to the nearest solid or no-slip wall.
    pub radius: T,
    pub touches_inlet: bool,
    pub touches_outlet: bool,
    /// Triangles (clipped to the domain) making up the pore region.
    pub cells: Vec<Vec<Vec2<T>>>,
}

impl<T: Real> PoreSite<T> {
    pub fn contains(&self, p: Vec2<T>) -> bool {
        self.cells.iter().any(|poly| point_in_convex(poly, p))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Throat<T> {
    pub pores: (usize, usize),
    pub length: T,
    pub width: T,
    pub flanks: [Flank; 2],
    /// Nearest points on the two flanks; the unperturbed interface.
    pub gap: [Vec2<T>; 2],
}

#[derive(Debug, Clone, PartialEq)]
pub struct NetworkTopology<T> {
    pub pores: Vec<PoreSite<T>>,
    pub throats: Vec<Throat<T>>,
}

impl<T: Real> NetworkTopology<T> {
    /// Pore whose region contains `p`, falling back to the nearest site.
    pub fn locate(&self, p: Vec2<T>) -> Option<usize> {
        if let Some(i) = self.pores.iter().position(|s| s.contains(p)) {
            return Some(i);
        }
        self.pores
            .iter()
            .enumerate()
            .min_by(|a, b| dist(a.1.position, p).partial_cmp(&dist(b.1.position, p)).unwrap())
            .map(|(i, _)| i)
    }

    /// True when every inlet pore reaches an outlet pore through throats.
    pub fn inlet_outlet_connected(&self) -> bool {
        let n = self.pores.len();
        let mut adj = vec![Vec::new(); n];
        for t in &self.throats {
            adj[t.pores.0].push(t.pores.1);
            adj[t.pores.1].push(t.pores.0);
        }
        let mut seen = vec![false; n];
        let mut stack: Vec<usize> = (0..n).filter(|&i| self.pores[i].touches_inlet).collect();
        if stack.is_empty() {
            return false;
        }
        for &i in &stack {
            seen[i] = true;
        }
        while let Some(i) = stack.pop() {
            for &j in &adj[i] {
                if !seen[j] {
                    seen[j] = true;
                    stack.push(j);
                }
            }
        }
        (0..n).any(|i| seen[i] && self.pores[i].touches_outlet)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Mirror {
    None,
    Left,
    Right,
    Bottom,
    Top,
    Corner,
}

#[derive(Debug, Clone, Copy)]
struct Site {
    solid: usize,
    mirror: Mirror,
}

fn point_in_convex<T: Real>(poly: &[Vec2<T>], p: Vec2<T>) -> bool {
    let n = poly.len();
    if n < 3 {
        return false;
    }
    let eps = T::lit(-1e-12);
    (0..n).all(|k| orient(poly[k], poly[(k + 1) % n], p) >= eps)
}

fn polygon_area<T: Real>(poly: &[Vec2<T>]) -> T {
    let n = poly.len();
    let mut a = T::zero();
    for k in 0..n {
        let p = poly[k];
        let q = poly[(k + 1) % n];
        a += p[0] * q[1] - q[0] * p[1];
    }
    a * T::lit(0.5)
}

/// Sutherland–Hodgman clip of a counterclockwise polygon to the domain box.
fn clip_to_box<T: Real>(poly: &[Vec2<T>], spec: &GeometrySpec<T>) -> Vec<Vec2<T>> {
    let d = spec.domain;
    // (axis, bound, keep >= bound?)
    let planes = [(0, d.x0, true), (0, d.x1, false), (1, d.y0, true), (1, d.y1, false)];
    let mut out: Vec<Vec2<T>> = poly.to_vec();
    for &(axis, bound, keep_ge) in &planes {
        let inside = |p: &Vec2<T>| if keep_ge { p[axis] >= bound } else { p[axis] <= bound };
        let input = std::mem::take(&mut out);
        let n = input.len();
        for k in 0..n {
            let cur = input[k];
            let prev = input[(k + n - 1) % n];
            let (ci, pi) = (inside(&cur), inside(&prev));
            if ci != pi {
                let t = (bound - prev[axis]) / (cur[axis] - prev[axis]);
                let mut x = [
                    prev[0] + t * (cur[0] - prev[0]),
                    prev[1] + t * (cur[1] - prev[1]),
                ];
                x[axis] = bound;
                out.push(x);
            }
            if ci {
                out.push(cur);
            }
        }
        if out.is_empty() {
            break;
        }
    }
    out
}

fn circumcenter<T: Real>(a: Vec2<T>, b: Vec2<T>, c: Vec2<T>) -> Option<Vec2<T>> {
    let d = T::lit(2.0) * orient(a, b, c);
    if d.abs() <= T::epsilon() {
        return None;
    }
    let a2 = a[0] * a[0] + a[1] * a[1];
    let b2 = b[0] * b[0] + b[1] * b[1];
    let c2 = c[0] * c[0] + c[1] * c[1];
    Some([
        (a2 * (b[1] - c[1]) + b2 * (c[1] - a[1]) + c2 * (a[1] - b[1])) / d,
        (a2 * (c[0] - b[0]) + b2 * (a[0] - c[0]) + c2 * (b[0] - a[0])) / d,
    ])
}

/// Clearance used for pore sites: distance to solids and to no-slip walls.
pub(crate) fn clearance<T: Real>(spec: &GeometrySpec<T>, p: Vec2<T>) -> T {
    let d = spec.domain;
    distance_to_solid(spec, p).min(p[1] - d.y0).min(d.y1 - p[1])
}

fn touches_wall<T: Real>(s: &Solid<T>, axis: usize, bound: T) -> bool {
    match *s {
        Solid::Disk { center, radius } => (center[axis] - bound).abs() <= radius,
        Solid::Rect { corner, extents } => corner[axis] <= bound && bound <= corner[axis] + extents[axis],
    }
}

fn find(parent: &mut [usize], mut i: usize) -> usize {
    while parent[i] != i {
        parent[i] = parent[parent[i]];
        i = parent[i];
    }
    i
}

/// True when the open segment `ab` has void on it somewhere, probed at a few
/// interior points.
fn has_void_on<T: Real>(spec: &GeometrySpec<T>, a: Vec2<T>, b: Vec2<T>) -> bool {
    (1..8).any(|k| {
        let t = T::lit(k as f64 / 8.0);
        let p = [a[0] + t * (b[0] - a[0]), a[1] + t * (b[1] - a[1])];
        distance_to_solid(spec, p) > T::zero()
    })
}

/// Extracts pore sites and throats. Without solids the whole channel is one
/// pore touching both inlet and outlet.
pub fn extract_topology<T: Real>(spec: &GeometrySpec<T>) -> Result<NetworkTopology<T>> {
    let dom = spec.domain;
    if spec.solids.is_empty() {
        let c = dom.center();
        let corners = vec![[dom.x0, dom.y0], [dom.x1, dom.y0], [dom.x1, dom.y1], [dom.x0, dom.y1]];
        return Ok(NetworkTopology {
            pores: vec![PoreSite {
                position: c,
                radius: dom.height() * T::lit(0.5),
                touches_inlet: true,
                touches_outlet: true,
                cells: vec![corners],
            }],
            throats: Vec::new(),
        });
    }

    let two = T::lit(2.0);
    let mut pts: Vec<Vec2<T>> = Vec::new();
    let mut sites: Vec<Site> = Vec::new();
    for (k, s) in spec.solids.iter().enumerate() {
        let c = s.center();
        pts.push(c);
        sites.push(Site { solid: k, mirror: Mirror::None });
        let left = !touches_wall(s, 0, dom.x0);
        let right = !touches_wall(s, 0, dom.x1);
        let bottom = !touches_wall(s, 1, dom.y0);
        let top = !touches_wall(s, 1, dom.y1);
        let mx = [(left, two * dom.x0 - c[0]), (right, two * dom.x1 - c[0])];
        let my = [(bottom, two * dom.y0 - c[1]), (top, two * dom.y1 - c[1])];
        for (i, &(ok, x)) in mx.iter().enumerate() {
            if ok {
                pts.push([x, c[1]]);
                sites.push(Site {
                    solid: k,
                    mirror: if i == 0 { Mirror::Left } else { Mirror::Right },
                });
            }
        }
        for (i, &(ok, y)) in my.iter().enumerate() {
            if ok {
                pts.push([c[0], y]);
                sites.push(Site {
                    solid: k,
                    mirror: if i == 0 { Mirror::Bottom } else { Mirror::Top },
                });
            }
        }
        for &(okx, x) in &mx {
            for &(oky, y) in &my {
                if okx && oky {
                    pts.push([x, y]);
                    sites.push(Site { solid: k, mirror: Mirror::Corner });
                }
            }
        }
    }

    let dpts: Vec<Point> = pts
        .iter()
        .map(|p| Point {
            x: p[0].as_f64(),
            y: p[1].as_f64(),
        })
        .collect();
    let tri = triangulate(&dpts);
    let ntri = tri.triangles.len() / 3;
    if ntri == 0 {
        return Err(Error::Geometry("degenerate packing: all centers collinear".into()));
    }

    // Delaunator emits clockwise triangles in y-up coordinates; flip to CCW.
    let tri_vertices = |t: usize| -> [usize; 3] {
        [tri.triangles[3 * t], tri.triangles[3 * t + 2], tri.triangles[3 * t + 1]]
    };

    let min_area = T::lit(1e-12) * dom.area();
    let mut clipped: Vec<Vec<Vec2<T>>> = Vec::with_capacity(ntri);
    let mut included = vec![false; ntri];
    for t in 0..ntri {
        let [a, b, c] = tri_vertices(t);
        let poly = clip_to_box(&[pts[a], pts[b], pts[c]], spec);
        included[t] = poly.len() >= 3 && polygon_area(&poly) > min_area;
        clipped.push(poly);
    }

    let scale = dom.width().max(dom.height());
    let side_tol = T::lit(1e-9) * scale * scale;
    let mut parent: Vec<usize> = (0..ntri).collect();
    // Halfedges of throat edges, keyed by the smaller halfedge index.
    let mut throat_edges: Vec<(usize, [Flank; 2], [Vec2<T>; 2], T)> = Vec::new();
    for e in 0..tri.halfedges.len() {
        let o = tri.halfedges[e];
        if o == EMPTY || o < e {
            continue;
        }
        let (t1, t2) = (e / 3, o / 3);
        if !included[t1] || !included[t2] {
            continue;
        }
        let pa = tri.triangles[e];
        let pb = tri.triangles[if e % 3 == 2 { e - 2 } else { e + 1 }];
        let flanks = throat_flanks(sites[pa], sites[pb]);
        let mut is_throat = false;
        if let Some(flanks) = flanks {
            let [a1, b1, c1] = tri_vertices(t1);
            let [a2, b2, c2] = tri_vertices(t2);
            let o1 = circumcenter(pts[a1], pts[b1], pts[c1]);
            let o2 = circumcenter(pts[a2], pts[b2], pts[c2]);
            if let (Some(o1), Some(o2)) = (o1, o2) {
                let s1 = orient(pts[pa], pts[pb], o1);
                let s2 = orient(pts[pa], pts[pb], o2);
                let crosses = (s1 > side_tol && s2 < -side_tol) || (s1 < -side_tol && s2 > side_tol);
                if crosses {
                    match throat_segment(spec, flanks[0], flanks[1]) {
                        Ok((saddle, gap)) => {
                            let _ = saddle;
                            let w = dist(gap[0], gap[1]);
                            throat_edges.push((e, flanks, gap, w));
                            is_throat = true;
                        }
                        Err(err) => log::info!("skipping candidate throat: {err}"),
                    }
                }
            }
        }
        if !is_throat {
            let (r1, r2) = (find(&mut parent, t1), find(&mut parent, t2));
            if r1 != r2 {
                parent[r1.max(r2)] = r1.min(r2);
            }
        }
    }

    // Group triangles into regions.
    let mut region_of = vec![usize::MAX; ntri];
    let mut regions: Vec<Vec<usize>> = Vec::new();
    let mut root_to_region = std::collections::HashMap::new();
    for t in 0..ntri {
        if !included[t] {
            continue;
        }
        let r = find(&mut parent, t);
        let id = *root_to_region.entry(r).or_insert_with(|| {
            regions.push(Vec::new());
            regions.len() - 1
        });
        regions[id].push(t);
        region_of[t] = id;
    }

    let eps_x = T::lit(1e-12) * scale;
    let mut pores: Vec<(usize, PoreSite<T>)> = Vec::new();
    for (rid, tris) in regions.iter().enumerate() {
        let mut best: Option<(T, Vec2<T>)> = None;
        let mut consider = |p: Vec2<T>| {
            if !dom.contains(p) {
                return;
            }
            let c = clearance(spec, p);
            if c > T::zero() && best.map_or(true, |(bc, _)| c > bc) {
                best = Some((c, p));
            }
        };
        for &t in tris {
            let [a, b, c] = tri_vertices(t);
            if let Some(o) = circumcenter(pts[a], pts[b], pts[c]) {
                if point_in_convex(&clipped[t], o) {
                    consider(o);
                }
            }
            let poly = &clipped[t];
            let n = T::lit(poly.len() as f64);
            let cx = poly.iter().map(|p| p[0]).sum::<T>() / n;
            let cy = poly.iter().map(|p| p[1]).sum::<T>() / n;
            consider([cx, cy]);
        }
        let Some((radius, position)) = best else {
            log::debug!("region {rid} has no void site; dropped");
            continue;
        };
        let mut touches_inlet = false;
        let mut touches_outlet = false;
        for &t in tris {
            let poly = &clipped[t];
            let n = poly.len();
            for k in 0..n {
                let (p, q) = (poly[k], poly[(k + 1) % n]);
                let on = |x: T| (p[0] - x).abs() <= eps_x && (q[0] - x).abs() <= eps_x;
                if on(dom.x0) && has_void_on(spec, p, q) {
                    touches_inlet = true;
                }
                if on(dom.x1) && has_void_on(spec, p, q) {
                    touches_outlet = true;
                }
            }
        }
        pores.push((
            rid,
            PoreSite {
                position,
                radius,
                touches_inlet,
                touches_outlet,
                cells: tris.iter().map(|&t| clipped[t].clone()).collect(),
            },
        ));
    }
    pores.sort_by(|a, b| {
        let (p, q) = (a.1.position, b.1.position);
        p[0].partial_cmp(&q[0]).unwrap().then(p[1].partial_cmp(&q[1]).unwrap())
    });
    let mut region_to_pore = vec![usize::MAX; regions.len()];
    for (i, (rid, _)) in pores.iter().enumerate() {
        region_to_pore[*rid] = i;
    }
    let pores: Vec<PoreSite<T>> = pores.into_iter().map(|(_, p)| p).collect();

    let mut throats = Vec::new();
    for (e, flanks, gap, w) in throat_edges {
        let (t1, t2) = (e / 3, tri.halfedges[e] / 3);
        let (i, j) = (region_to_pore[region_of[t1]], region_to_pore[region_of[t2]]);
        if i == usize::MAX || j == usize::MAX || i == j {
            log::warn!("throat between flanks {flanks:?} does not separate two pores; ignored");
            continue;
        }
        let (i, j, gap, flanks) = if i < j {
            (i, j, gap, flanks)
        } else {
            (j, i, gap, flanks)
        };
        let length = dist(pores[i].position, pores[j].position);
        if !(length > T::zero() && w > T::zero()) {
            return Err(Error::Geometry(format!("degenerate throat between pores {i} and {j}")));
        }
        throats.push(Throat {
            pores: (i, j),
            length,
            width: w,
            flanks,
            gap,
        });
    }
    throats.sort_by(|a, b| {
        a.pores
            .cmp(&b.pores)
            .then(a.gap[0][0].partial_cmp(&b.gap[0][0]).unwrap())
            .then(a.gap[0][1].partial_cmp(&b.gap[0][1]).unwrap())
    });

    Ok(NetworkTopology { pores, throats })
}

/// Flanks of a candidate throat: two real solids, or a solid and its own
/// mirror image across a no-slip wall.
fn throat_flanks(a: Site, b: Site) -> Option<[Flank; 2]> {
    match (a.mirror, b.mirror) {
        (Mirror::None, Mirror::None) => Some([
            Flank::Solid(a.solid.min(b.solid)),
            Flank::Solid(a.solid.max(b.solid)),
        ]),
        (Mirror::None, Mirror::Bottom) | (Mirror::Bottom, Mirror::None) if a.solid == b.solid => {
            Some([Flank::Solid(a.solid), Flank::Wall(WallSide::Bottom)])
        }
        (Mirror::None, Mirror::Top) | (Mirror::Top, Mirror::None) if a.solid == b.solid => {
            Some([Flank::Solid(a.solid), Flank::Wall(WallSide::Top)])
        }
        _ => None,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::Domain;

    fn spec(solids: Vec<Solid<f64>>, domain: [f64; 4]) -> GeometrySpec<f64> {
        GeometrySpec::new(
            Domain { x0: domain[0], y0: domain[1], x1: domain[2], y1: domain[3] },
            solids,
            1.0,
            0.0,
            1.0,
            0,
        )
        .unwrap()
    }

    #[test]
    fn no_solids_single_pore() {
        let t = extract_topology(&spec(vec![], [0.0, 0.0, 2.0, 1.0])).unwrap();
        assert_eq!(t.pores.len(), 1);
        assert!(t.throats.is_empty());
        assert!(t.pores[0].touches_inlet && t.pores[0].touches_outlet);
    }

    #[test]
    fn three_disks_triangle_has_central_pore() {
        // Equilateral triangle of disks, side 2, radius 0.5: the central pore
        // sits at the centroid (Delaunay circumcenter) with clearance
        // 2/sqrt(3) - 0.5.
        let h = 3f64.sqrt();
        let s = spec(
            vec![
                Solid::disk(2.0, 2.0, 0.5),
                Solid::disk(4.0, 2.0, 0.5),
                Solid::disk(3.0, 2.0 + h, 0.5),
            ],
            [0.0, 0.0, 6.0, 5.0],
        );
        let t = extract_topology(&s).unwrap();
        let centroid = [3.0, 2.0 + h / 3.0];
        let central = t.locate(centroid).unwrap();
        let site = &t.pores[central];
        assert!(dist(site.position, centroid) < 1e-9);
        assert!((site.radius - (2.0 / h - 0.5)).abs() < 1e-9);
        // Each of the three gaps is a throat out of the central pore.
        let n = t.throats.iter().filter(|th| th.pores.0 == central || th.pores.1 == central).count();
        assert_eq!(n, 3);
        for th in &t.throats {
            if let [Flank::Solid(_), Flank::Solid(_)] = th.flanks {
                assert!((th.width - 1.0).abs() < 1e-9);
            }
        }
        assert!(t.inlet_outlet_connected());
    }

    #[test]
    fn single_disk_has_wall_throats() {
        let s = spec(vec![Solid::disk(1.0, 0.5, 0.25)], [0.0, 0.0, 2.0, 1.0]);
        let t = extract_topology(&s).unwrap();
        assert_eq!(t.pores.len(), 2);
        assert_eq!(t.throats.len(), 2);
        for th in &t.throats {
            assert!((th.width - 0.25).abs() < 1e-9);
        }
        assert!(t.pores[0].touches_inlet && !t.pores[0].touches_outlet);
        assert!(t.pores[1].touches_outlet && !t.pores[1].touches_inlet);
        assert!(t.inlet_outlet_connected());
    }

    #[test]
    fn clip_square_to_box() {
        let s = spec(vec![], [0.0, 0.0, 1.0, 1.0]);
        let poly = clip_to_box(&[[-1.0, -1.0], [0.5, -1.0], [0.5, 0.5], [-1.0, 0.5]], &s);
        assert!((polygon_area(&poly) - 0.25).abs() < 1e-15);
    }
}
