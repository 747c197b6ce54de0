//! Planar straight-line graph of a geometry for external constrained
//! Delaunay meshers.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::geometry::{Flank, GeometrySpec, InterfaceSegment, NetworkTopology, SegmentKind, Solid};
use crate::scalar::{dist, Real, Vec2};

pub const MARKER_WALL: i32 = 1;
pub const MARKER_INLET: i32 = 2;
pub const MARKER_OUTLET: i32 = 3;
/// Interface `α` is marked `MARKER_INTERFACE + α`.
pub const MARKER_INTERFACE: i32 = 10;

/// Boundary and interface polylines with segment markers, hole points inside
/// solids, and one seed point per pore carrying the pore label.
#[derive(Debug, Clone, Serialize)]
pub struct Pslg {
    pub h: f64,
    pub vertices: Vec<[f64; 2]>,
    pub segments: Vec<[usize; 2]>,
    pub segment_markers: Vec<i32>,
    pub holes: Vec<[f64; 2]>,
    /// `[x, y, pore label]`.
    pub regions: Vec<[f64; 3]>,
}

impl Pslg {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("pslg serializes")
    }
}

struct Builder {
    h: f64,
    tol: f64,
    vertices: Vec<[f64; 2]>,
    segments: Vec<[usize; 2]>,
    markers: Vec<i32>,
}

impl Builder {
    fn point(&mut self, p: [f64; 2]) -> usize {
        if let Some(i) = self
            .vertices
            .iter()
            .position(|q| (q[0] - p[0]).abs() <= self.tol && (q[1] - p[1]).abs() <= self.tol)
        {
            return i;
        }
        self.vertices.push(p);
        self.vertices.len() - 1
    }

    fn polyline(&mut self, pts: &[[f64; 2]], marker: i32) {
        let ids: Vec<usize> = pts.iter().map(|&p| self.point(p)).collect();
        for w in ids.windows(2) {
            if w[0] != w[1] {
                self.segments.push([w[0], w[1]]);
                self.markers.push(marker);
            }
        }
    }

    /// Straight piece split evenly with spacing at most `h`.
    fn line(&mut self, a: [f64; 2], b: [f64; 2], marker: i32) {
        let len = ((b[0] - a[0]).powi(2) + (b[1] - a[1]).powi(2)).sqrt();
        let n = ((len / self.h).ceil() as usize).max(1);
        let pts: Vec<[f64; 2]> = (0..=n)
            .map(|k| {
                if k == 0 {
                    a
                } else if k == n {
                    b
                } else {
                    let t = k as f64 / n as f64;
                    [a[0] + t * (b[0] - a[0]), a[1] + t * (b[1] - a[1])]
                }
            })
            .collect();
        self.polyline(&pts, marker);
    }
}

fn in_any_solid(solids: &[Solid<f64>], p: [f64; 2]) -> bool {
    solids.iter().any(|s| s.signed_distance(p) < 0.0)
}

/// Builds the graph from the domain, solids and interface segments. Disk
/// arcs are sampled with chord spacing at most `h`, passing through every
/// interface endpoint and every wall crossing.
pub fn build_pslg<T: Real>(
    spec: &GeometrySpec<T>,
    segments: &[InterfaceSegment<T>],
    topology: Option<&NetworkTopology<T>>,
    h: T,
) -> Result<Pslg> {
    let h = h.as_f64();
    if !(h > 0.0) {
        return Err(Error::InvalidArgument("mesh size must be positive".into()));
    }
    let solids: Vec<Solid<f64>> = spec
        .solids
        .iter()
        .map(|s| match *s {
            Solid::Disk { center, radius } => Solid::disk(center[0].as_f64(), center[1].as_f64(), radius.as_f64()),
            Solid::Rect { corner, extents } => Solid::rect(
                corner[0].as_f64(),
                corner[1].as_f64(),
                extents[0].as_f64(),
                extents[1].as_f64(),
            ),
        })
        .collect();
    let d = spec.domain;
    let (x0, y0, x1, y1) = (d.x0.as_f64(), d.y0.as_f64(), d.x1.as_f64(), d.y1.as_f64());
    let scale = (x1 - x0).max(y1 - y0);
    let mut b = Builder {
        h,
        tol: 1e-10 * scale,
        vertices: Vec::new(),
        segments: Vec::new(),
        markers: Vec::new(),
    };
    let inside = |p: [f64; 2]| p[0] >= x0 - 1e-12 && p[0] <= x1 + 1e-12 && p[1] >= y0 - 1e-12 && p[1] <= y1 + 1e-12;
    let f = |p: Vec2<T>| [p[0].as_f64(), p[1].as_f64()];

    // Interface endpoints go in first so arcs and walls reuse them exactly.
    let internal: Vec<&InterfaceSegment<T>> = segments.iter().filter(|s| s.kind == SegmentKind::Internal).collect();
    for s in &internal {
        b.point(f(s.endpoints[0]));
        b.point(f(s.endpoints[1]));
    }

    // Wall crossings of each solid boundary, keyed by side.
    let mut side_breaks: [Vec<f64>; 4] = Default::default();
    for (k, s) in solids.iter().enumerate() {
        match *s {
            Solid::Disk { center, radius } => {
                let mut angles: Vec<f64> = Vec::new();
                for (axis, bound, side) in [(0, x0, 0), (0, x1, 1), (1, y0, 2), (1, y1, 3)] {
                    let dc = bound - center[axis];
                    if dc.abs() < radius {
                        let other = ((radius * radius - dc * dc).sqrt(), 1 - axis);
                        for sign in [-1.0, 1.0] {
                            let mut p = [0.0; 2];
                            p[axis] = bound;
                            p[other.1] = center[other.1] + sign * other.0;
                            if inside(p) {
                                angles.push((p[1] - center[1]).atan2(p[0] - center[0]));
                                side_breaks[side].push(p[other.1]);
                                b.point(p);
                            }
                        }
                    }
                }
                for seg in &internal {
                    for e in 0..2 {
                        if seg.flanks[e] == Flank::Solid(k) {
                            let p = f(seg.endpoints[e]);
                            angles.push((p[1] - center[1]).atan2(p[0] - center[0]));
                        }
                    }
                }
                angles.sort_by(|a, b| a.partial_cmp(b).unwrap());
                angles.dedup_by(|a, b| (*a - *b).abs() < 1e-12);
                let tau = std::f64::consts::TAU;
                if angles.is_empty() {
                    angles.push(0.0);
                }
                let at = |t: f64| [center[0] + radius * t.cos(), center[1] + radius * t.sin()];
                let n = angles.len();
                for i in 0..n {
                    let a0 = angles[i];
                    let a1 = if i + 1 < n { angles[i + 1] } else { angles[0] + tau };
                    let mid = at(0.5 * (a0 + a1));
                    if !inside(mid) {
                        continue;
                    }
                    let arc = radius * (a1 - a0);
                    let m = ((arc / h).ceil() as usize).max(if n == 1 { 3 } else { 1 });
                    let pts: Vec<[f64; 2]> = (0..=m)
                        .map(|j| {
                            // Reuse exact anchor coordinates at the ends.
                            let t = a0 + (a1 - a0) * j as f64 / m as f64;
                            let p = at(t);
                            if j == 0 || j == m {
                                let idx = b.point(p);
                                b.vertices[idx]
                            } else {
                                p
                            }
                        })
                        .collect();
                    b.polyline(&pts, MARKER_WALL);
                }
            }
            Solid::Rect { corner, extents } => {
                let cs = [
                    corner,
                    [corner[0] + extents[0], corner[1]],
                    [corner[0] + extents[0], corner[1] + extents[1]],
                    [corner[0], corner[1] + extents[1]],
                ];
                for i in 0..4 {
                    let (p, q) = (cs[i], cs[(i + 1) % 4]);
                    if inside(p) && inside(q) {
                        b.line(p, q, MARKER_WALL);
                    } else {
                        return Err(Error::Geometry(format!("rectangle {k} is clipped; not supported in PSLG export")));
                    }
                }
            }
        }
    }

    // Domain sides: left (inlet), right (outlet), bottom and top walls.
    for seg in &internal {
        for e in 0..2 {
            if let Flank::Wall(w) = seg.flanks[e] {
                let side = match w {
                    crate::geometry::WallSide::Bottom => 2,
                    crate::geometry::WallSide::Top => 3,
                };
                side_breaks[side].push(f(seg.endpoints[e])[0]);
            }
        }
    }
    let sides: [(usize, [f64; 2], [f64; 2], i32); 4] = [
        (0, [x0, y0], [x0, y1], MARKER_INLET),
        (1, [x1, y0], [x1, y1], MARKER_OUTLET),
        (2, [x0, y0], [x1, y0], MARKER_WALL),
        (3, [x0, y1], [x1, y1], MARKER_WALL),
    ];
    for (side, a, bb, marker) in sides {
        let axis = if side < 2 { 1 } else { 0 };
        let mut ts: Vec<f64> = vec![a[axis], bb[axis]];
        ts.extend(side_breaks[side].iter().copied());
        ts.sort_by(|p, q| p.partial_cmp(q).unwrap());
        ts.dedup_by(|p, q| (*p - *q).abs() < 1e-12);
        let point = |t: f64| {
            let mut p = a;
            p[axis] = t;
            p
        };
        for w in ts.windows(2) {
            let mid = point(0.5 * (w[0] + w[1]));
            if in_any_solid(&solids, mid) {
                continue;
            }
            let (pa, pb) = (point(w[0]), point(w[1]));
            let (ia, ib) = (b.point(pa), b.point(pb));
            let (pa, pb) = (b.vertices[ia], b.vertices[ib]);
            b.line(pa, pb, marker);
        }
    }

    for s in &internal {
        let (pa, pb) = (f(s.endpoints[0]), f(s.endpoints[1]));
        if dist(pa, pb) < 2.0 * h * (1.0 - 1e-9) {
            return Err(Error::Mesh(format!(
                "interface {} spans a gap narrower than 2h = {}",
                s.id + 1,
                2.0 * h
            )));
        }
        b.line(pa, pb, MARKER_INTERFACE + s.id as i32);
    }

    let holes = solids
        .iter()
        .map(|s| {
            let c = s.center();
            let r = match *s {
                Solid::Disk { radius, .. } => radius,
                Solid::Rect { extents, .. } => 0.5 * extents[0].min(extents[1]),
            };
            let m = 0.25 * r;
            [c[0].clamp(x0 + m, x1 - m), c[1].clamp(y0 + m, y1 - m)]
        })
        .collect();
    let regions = topology
        .map(|t| {
            t.pores
                .iter()
                .enumerate()
                .map(|(i, p)| [p.position[0].as_f64(), p.position[1].as_f64(), i as f64])
                .collect()
        })
        .unwrap_or_default();

    Ok(Pslg {
        h,
        vertices: b.vertices,
        segments: b.segments,
        segment_markers: b.markers,
        holes,
        regions,
    })
}
