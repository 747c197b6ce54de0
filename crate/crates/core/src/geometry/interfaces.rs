//! Interface segments: placement at distance-function saddles, boundary
//! faces on inlet/outlet, and random endpoint perturbation.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::topology::NetworkTopology;
use super::{distance_to_solid, extract_topology, GeometrySpec, Solid, WallSide};
use crate::error::{Error, Result};
use crate::scalar::{add, dist, scale, sub, Real, Vec2};

/// Boundary piece that an interface endpoint rests on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Flank {
    Solid(usize),
    Wall(WallSide),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum SegmentKind {
    Internal,
    Inlet,
    Outlet,
}

#[derive(Debug, Clone, PartialEq)]
pub struct InterfaceSegment<T> {
    /// Internal faces are numbered `0..m`; inlet/outlet faces `0..m_k`.
    pub id: usize,
    pub kind: SegmentKind,
    pub endpoints: [Vec2<T>; 2],
    pub flanks: [Flank; 2],
    /// Adjacent pores when known (explicitly placed interfaces carry none).
    pub pores: [Option<usize>; 2],
}

impl<T: Real> InterfaceSegment<T> {
    pub fn midpoint(&self) -> Vec2<T> {
        scale(add(self.endpoints[0], self.endpoints[1]), T::lit(0.5))
    }

    pub fn length(&self) -> T {
        dist(self.endpoints[0], self.endpoints[1])
    }
}

fn wall_y<T: Real>(spec: &GeometrySpec<T>, w: WallSide) -> T {
    match w {
        WallSide::Bottom => spec.domain.y0,
        WallSide::Top => spec.domain.y1,
    }
}

fn flank_sd<T: Real>(spec: &GeometrySpec<T>, f: Flank, x: Vec2<T>) -> T {
    match f {
        Flank::Solid(k) => spec.solids[k].signed_distance(x),
        Flank::Wall(WallSide::Bottom) => x[1] - spec.domain.y0,
        Flank::Wall(WallSide::Top) => spec.domain.y1 - x[1],
    }
}

fn flank_nearest<T: Real>(spec: &GeometrySpec<T>, f: Flank, x: Vec2<T>) -> Vec2<T> {
    match f {
        Flank::Solid(k) => spec.solids[k].nearest_boundary_point(x),
        Flank::Wall(w) => [x[0], wall_y(spec, w)],
    }
}

fn flank_gradient<T: Real>(spec: &GeometrySpec<T>, f: Flank, x: Vec2<T>) -> Vec2<T> {
    match f {
        Flank::Wall(WallSide::Bottom) => [T::zero(), T::one()],
        Flank::Wall(WallSide::Top) => [T::zero(), -T::one()],
        Flank::Solid(k) => {
            let p = spec.solids[k].nearest_boundary_point(x);
            let d = dist(x, p);
            if d > T::zero() {
                scale(sub(x, p), T::one() / d)
            } else {
                [T::zero(), T::zero()]
            }
        }
    }
}

fn golden_section<T: Real>(mut a: T, mut b: T, tol: T, f: impl Fn(T) -> T) -> T {
    let r = T::lit((5f64.sqrt() - 1.0) / 2.0);
    let mut c = b - r * (b - a);
    let mut d = a + r * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    while (b - a).abs() > tol {
        if fc < fd {
            b = d;
            d = c;
            fd = fc;
            c = b - r * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + r * (b - a);
            fd = f(d);
        }
    }
    (a + b) * T::lit(0.5)
}

/// Locates the saddle of the distance function between two flanks and
/// returns it with the nearest points on each flank.
pub(crate) fn throat_segment<T: Real>(
    spec: &GeometrySpec<T>,
    fa: Flank,
    fb: Flank,
) -> Result<(Vec2<T>, [Vec2<T>; 2])> {
    let half = T::lit(0.5);
    let saddle = match (fa, fb) {
        (Flank::Wall(_), Flank::Wall(_)) => {
            return Err(Error::Geometry("a throat needs at least one solid flank".into()))
        }
        (Flank::Solid(i), Flank::Solid(j)) => match (spec.solids[i], spec.solids[j]) {
            (Solid::Rect { corner: a, extents: ea }, Solid::Rect { corner: b, extents: eb }) => {
                rect_rect_saddle(a, ea, b, eb).ok_or_else(|| {
                    Error::Geometry(format!("rectangles {i} and {j} share no axis-aligned gap"))
                })?
            }
            _ => locus_saddle(spec, fa, fb)?,
        },
        (Flank::Solid(k), Flank::Wall(w)) | (Flank::Wall(w), Flank::Solid(k)) => match spec.solids[k] {
            Solid::Rect { corner, extents } => {
                let x = corner[0] + extents[0] * half;
                let y = match w {
                    WallSide::Bottom => (spec.domain.y0 + corner[1]) * half,
                    WallSide::Top => (spec.domain.y1 + corner[1] + extents[1]) * half,
                };
                [x, y]
            }
            Solid::Disk { .. } => locus_saddle(spec, fa, fb)?,
        },
    };
    let d = flank_sd(spec, fa, saddle).min(flank_sd(spec, fb, saddle));
    if !(d > T::zero()) {
        return Err(Error::Geometry(format!("throat between {fa:?} and {fb:?} is blocked")));
    }
    let others = distance_to_solid(spec, saddle);
    let tol = T::lit(1e-9) * (T::one() + d);
    if others < d - tol || spec.domain.y1 - saddle[1] < d - tol || saddle[1] - spec.domain.y0 < d - tol {
        return Err(Error::Geometry(format!(
            "ambiguous flanks {fa:?}/{fb:?}: another boundary is closer to the saddle"
        )));
    }
    Ok((saddle, [flank_nearest(spec, fa, saddle), flank_nearest(spec, fb, saddle)]))
}

fn rect_rect_saddle<T: Real>(a: Vec2<T>, ea: Vec2<T>, b: Vec2<T>, eb: Vec2<T>) -> Option<Vec2<T>> {
    let half = T::lit(0.5);
    for axis in 0..2 {
        let other = 1 - axis;
        let lo = a[other].max(b[other]);
        let hi = (a[other] + ea[other]).min(b[other] + eb[other]);
        if hi > lo {
            // Overlap across `other`; the gap runs along `axis`.
            let (g0, g1) = if a[axis] + ea[axis] <= b[axis] {
                (a[axis] + ea[axis], b[axis])
            } else if b[axis] + eb[axis] <= a[axis] {
                (b[axis] + eb[axis], a[axis])
            } else {
                return None;
            };
            let mut p = [T::zero(); 2];
            p[axis] = (g0 + g1) * half;
            p[other] = (lo + hi) * half;
            return Some(p);
        }
    }
    None
}

/// Golden-section minimization of the clearance along the equidistant locus
/// between two flanks.
fn locus_saddle<T: Real>(spec: &GeometrySpec<T>, fa: Flank, fb: Flank) -> Result<Vec2<T>> {
    let (fa, fb) = match fa {
        Flank::Wall(_) => (fb, fa),
        _ => (fa, fb),
    };
    let Flank::Solid(k) = fa else { unreachable!() };
    let ca = spec.solids[k].center();
    let cb = match fb {
        Flank::Solid(j) => spec.solids[j].center(),
        Flank::Wall(w) => [ca[0], wall_y(spec, w)],
    };
    let span = dist(ca, cb);
    if !(span > T::zero()) {
        return Err(Error::Geometry("coincident flank centers".into()));
    }
    let u = scale(sub(cb, ca), T::one() / span);
    let n = [-u[1], u[0]];
    let mid = scale(add(ca, cb), T::lit(0.5));
    let half = span * T::lit(0.5);
    let bisect_tol = T::lit(1e-14) * span;
    let on_locus = |tau: T| -> Vec2<T> {
        let base = add(mid, scale(n, tau));
        let phi = |s: T| {
            let x = add(base, scale(u, s));
            flank_sd(spec, fa, x) - flank_sd(spec, fb, x)
        };
        let (mut lo, mut hi) = (-half, half);
        while hi - lo > bisect_tol {
            let m = (lo + hi) * T::lit(0.5);
            if phi(m) < T::zero() {
                lo = m;
            } else {
                hi = m;
            }
        }
        add(base, scale(u, (lo + hi) * T::lit(0.5)))
    };
    let tau = golden_section(-half, half, T::lit(1e-10), |tau| flank_sd(spec, fa, on_locus(tau)));
    // A quadratic minimum is only located to ~sqrt(eps) by comparisons;
    // polish by bisecting on the antiparallel-gradient condition.
    let turn = |t: T| {
        let x = on_locus(t);
        let (ga, gb) = (flank_gradient(spec, fa, x), flank_gradient(spec, fb, x));
        ga[0] * gb[1] - ga[1] * gb[0]
    };
    let w = T::lit(1e-6) * half;
    let (mut lo, mut hi) = (tau - w, tau + w);
    let (flo, fhi) = (turn(lo), turn(hi));
    if flo * fhi < T::zero() {
        let rising = fhi > flo;
        for _ in 0..200 {
            let m = (lo + hi) * T::lit(0.5);
            if m <= lo || m >= hi {
                break;
            }
            if (turn(m) < T::zero()) == rising {
                lo = m;
            } else {
                hi = m;
            }
        }
        return Ok(on_locus((lo + hi) * T::lit(0.5)));
    }
    Ok(on_locus(tau))
}

/// Void intervals of the vertical line `x` clipped to `[y0, y1]`.
fn void_intervals<T: Real>(spec: &GeometrySpec<T>, x: T) -> Vec<([T; 2], [Option<Flank>; 2])> {
    let mut blocked: Vec<(T, T, usize)> = Vec::new();
    for (k, s) in spec.solids.iter().enumerate() {
        match *s {
            Solid::Disk { center, radius } => {
                let dx = (x - center[0]).abs();
                if dx < radius {
                    let h = (radius * radius - dx * dx).sqrt();
                    blocked.push((center[1] - h, center[1] + h, k));
                }
            }
            Solid::Rect { corner, extents } => {
                if corner[0] <= x && x <= corner[0] + extents[0] {
                    blocked.push((corner[1], corner[1] + extents[1], k));
                }
            }
        }
    }
    blocked.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
    let (y0, y1) = (spec.domain.y0, spec.domain.y1);
    let mut out = Vec::new();
    let mut cur = y0;
    let mut cur_flank = Some(Flank::Wall(WallSide::Bottom));
    for (lo, hi, k) in blocked {
        if lo > cur {
            out.push(([cur, lo.min(y1)], [cur_flank, Some(Flank::Solid(k))]));
        }
        if hi > cur {
            cur = hi;
            cur_flank = Some(Flank::Solid(k));
        }
    }
    if cur < y1 {
        out.push(([cur, y1], [cur_flank, Some(Flank::Wall(WallSide::Top))]));
    }
    out
}

fn boundary_segments<T: Real>(
    spec: &GeometrySpec<T>,
    topology: Option<&NetworkTopology<T>>,
) -> Vec<InterfaceSegment<T>> {
    let nudge = T::lit(1e-9) * spec.domain.width();
    let mut out = Vec::new();
    for (kind, x, inward) in [
        (SegmentKind::Inlet, spec.domain.x0, nudge),
        (SegmentKind::Outlet, spec.domain.x1, -nudge),
    ] {
        for (k, ([ya, yb], flanks)) in void_intervals(spec, x).into_iter().enumerate() {
            let mid = [x + inward, (ya + yb) * T::lit(0.5)];
            let pore = topology.and_then(|t| t.locate(mid));
            out.push(InterfaceSegment {
                id: k,
                kind,
                endpoints: [[x, ya], [x, yb]],
                flanks: [flanks[0].unwrap(), flanks[1].unwrap()],
                pores: [pore, None],
            });
        }
    }
    out
}

/// Internal interfaces (one per throat, ids following throat order) followed
/// by inlet and outlet boundary faces.
pub fn place_interfaces<T: Real>(
    spec: &GeometrySpec<T>,
    topology: &NetworkTopology<T>,
) -> Result<Vec<InterfaceSegment<T>>> {
    let mut out = Vec::with_capacity(topology.throats.len());
    for (alpha, th) in topology.throats.iter().enumerate() {
        if th.pores.0 == th.pores.1 {
            return Err(Error::Geometry(format!("throat {alpha} connects pore {} to itself", th.pores.0)));
        }
        let (_, ends) = throat_segment(spec, th.flanks[0], th.flanks[1])?;
        out.push(InterfaceSegment {
            id: alpha,
            kind: SegmentKind::Internal,
            endpoints: ends,
            flanks: th.flanks,
            pores: [Some(th.pores.0), Some(th.pores.1)],
        });
    }
    out.extend(boundary_segments(spec, Some(topology)));
    Ok(out)
}

fn infer_flank<T: Real>(spec: &GeometrySpec<T>, p: Vec2<T>) -> Result<Flank> {
    let tol = T::lit(1e-9) * spec.domain.width().max(spec.domain.height());
    if (p[1] - spec.domain.y0).abs() <= tol {
        return Ok(Flank::Wall(WallSide::Bottom));
    }
    if (p[1] - spec.domain.y1).abs() <= tol {
        return Ok(Flank::Wall(WallSide::Top));
    }
    spec.solids
        .iter()
        .position(|s| s.signed_distance(p).abs() <= tol)
        .map(Flank::Solid)
        .ok_or_else(|| Error::Geometry(format!("interface endpoint {p:?} is not on a wall or solid")))
}

/// Interfaces of a geometry: the explicit list when given, otherwise those
/// placed from the extracted topology.
pub fn interface_segments<T: Real>(spec: &GeometrySpec<T>) -> Result<Vec<InterfaceSegment<T>>> {
    if spec.interfaces.is_empty() {
        let topo = extract_topology(spec)?;
        return place_interfaces(spec, &topo);
    }
    let mut out = Vec::new();
    for (alpha, seg) in spec.interfaces.iter().enumerate() {
        out.push(InterfaceSegment {
            id: alpha,
            kind: SegmentKind::Internal,
            endpoints: *seg,
            flanks: [infer_flank(spec, seg[0])?, infer_flank(spec, seg[1])?],
            pores: [None, None],
        });
    }
    out.extend(boundary_segments(spec, None));
    Ok(out)
}

/// Moves `x0 + y` back onto the flank boundary, keeping the displacement
/// from `x0` at most `eps`.
fn reproject<T: Real>(spec: &GeometrySpec<T>, flank: Flank, x0: Vec2<T>, y: Vec2<T>, eps: T) -> Vec2<T> {
    let target = add(x0, y);
    match flank {
        Flank::Wall(w) => {
            let dx = y[0].max(-eps).min(eps);
            [x0[0] + dx, wall_y(spec, w)]
        }
        Flank::Solid(k) => match spec.solids[k] {
            Solid::Disk { center, radius } => {
                let p = spec.solids[k].nearest_boundary_point(target);
                // Chord length to x0 must not exceed eps.
                let chord = dist(p, x0);
                if chord <= eps {
                    return p;
                }
                let max_angle = T::lit(2.0) * (eps / (T::lit(2.0) * radius)).min(T::one()).asin();
                let a0 = (x0[1] - center[1]).atan2(x0[0] - center[0]);
                let cross = (x0[0] - center[0]) * (p[1] - center[1]) - (x0[1] - center[1]) * (p[0] - center[0]);
                let a = if cross >= T::zero() { a0 + max_angle } else { a0 - max_angle };
                // Step back slightly so floating error keeps the chord <= eps.
                let a = a0 + (a - a0) * T::lit(1.0 - 1e-12);
                [center[0] + radius * a.cos(), center[1] + radius * a.sin()]
            }
            Solid::Rect { corner, extents } => {
                // Slide along the side x0 lies on.
                let tol = T::lit(1e-12) * (T::one() + extents[0].max(extents[1]));
                let on_vertical = (x0[0] - corner[0]).abs() <= tol
                    || (x0[0] - corner[0] - extents[0]).abs() <= tol;
                let mut p = x0;
                let axis = if on_vertical { 1 } else { 0 };
                let lo = corner[axis];
                let hi = corner[axis] + extents[axis];
                p[axis] = (x0[axis] + y[axis].max(-eps).min(eps)).max(lo).min(hi);
                p
            }
        },
    }
}

fn segment_is_clear<T: Real>(spec: &GeometrySpec<T>, a: Vec2<T>, b: Vec2<T>) -> bool {
    const SAMPLES: usize = 64;
    let dom = spec.domain;
    (1..SAMPLES).all(|k| {
        let t = T::lit(k as f64 / SAMPLES as f64);
        let p = add(a, scale(sub(b, a), t));
        distance_to_solid(spec, p) > T::zero() && p[1] > dom.y0 && p[1] < dom.y1 && dom.contains(p)
    })
}

/// Perturbs both endpoints of every internal segment by `y`, uniform in the
/// ball of radius `r·eps` with `r ~ U[0, 1]`, then slides them back onto
/// their flanking boundary. Boundary faces are returned unchanged.
pub fn perturb_interfaces<T: Real>(
    spec: &GeometrySpec<T>,
    segments: &[InterfaceSegment<T>],
    eps: T,
    seed: u64,
) -> Result<Vec<InterfaceSegment<T>>> {
    if !(eps >= T::zero()) {
        return Err(Error::InvalidArgument(format!("perturbation magnitude {eps} must be >= 0")));
    }
    if eps == T::zero() {
        return Ok(segments.to_vec());
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = segments.to_vec();
    for seg in out.iter_mut().filter(|s| s.kind == SegmentKind::Internal) {
        for e in 0..2 {
            let r: f64 = rng.random();
            let z = loop {
                let z: [f64; 2] = [rng.random_range(-1.0..=1.0), rng.random_range(-1.0..=1.0)];
                if z[0] * z[0] + z[1] * z[1] <= 1.0 {
                    break z;
                }
            };
            let y = [T::lit(r * z[0]) * eps, T::lit(r * z[1]) * eps];
            seg.endpoints[e] = reproject(spec, seg.flanks[e], seg.endpoints[e], y, eps);
        }
        if !segment_is_clear(spec, seg.endpoints[0], seg.endpoints[1]) {
            return Err(Error::Geometry(format!(
                "perturbed interface {} crosses a solid or leaves the domain",
                seg.id
            )));
        }
    }
    Ok(out)
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
    fn two_disk_gap_segment() {
        let s = spec(
            vec![Solid::disk(0.0, 0.0, 1.0), Solid::disk(4.0, 0.0, 1.0)],
            [-3.0, -3.0, 7.0, 3.0],
        );
        let (saddle, ends) = throat_segment(&s, Flank::Solid(0), Flank::Solid(1)).unwrap();
        assert!(dist(saddle, [2.0, 0.0]) < 1e-9);
        assert!(dist(ends[0], [1.0, 0.0]) < 1e-9);
        assert!(dist(ends[1], [3.0, 0.0]) < 1e-9);
    }

    #[test]
    fn unequal_disks_saddle_on_center_line() {
        let s = spec(
            vec![Solid::disk(0.0, 0.0, 1.0), Solid::disk(4.0, 0.0, 0.5)],
            [-3.0, -3.0, 7.0, 3.0],
        );
        let (saddle, ends) = throat_segment(&s, Flank::Solid(0), Flank::Solid(1)).unwrap();
        // Equidistant point on the center line: x - 1 = 3.5 - x.
        assert!(dist(saddle, [2.25, 0.0]) < 1e-9);
        assert!(dist(ends[1], [3.5, 0.0]) < 1e-9);
    }

    #[test]
    fn disk_wall_segment() {
        let s = spec(vec![Solid::disk(1.0, 0.5, 0.25)], [0.0, 0.0, 2.0, 1.0]);
        let (_, ends) = throat_segment(&s, Flank::Solid(0), Flank::Wall(WallSide::Top)).unwrap();
        assert!(dist(ends[0], [1.0, 0.75]) < 1e-9);
        assert!(dist(ends[1], [1.0, 1.0]) < 1e-9);
    }

    #[test]
    fn rect_pair_gap_is_vertical_segment() {
        let s = spec(
            vec![Solid::rect(1.0, 0.0, 1.0, 0.5), Solid::rect(1.0, 0.75, 1.0, 0.25)],
            [0.0, 0.0, 3.0, 1.0],
        );
        let (_, ends) = throat_segment(&s, Flank::Solid(0), Flank::Solid(1)).unwrap();
        assert_eq!(ends, [[1.5, 0.5], [1.5, 0.75]]);
    }

    #[test]
    fn blocked_throat_errors() {
        let s = spec(vec![Solid::disk(1.0, 0.6, 0.4)], [0.0, 0.0, 2.0, 1.0]);
        assert!(throat_segment(&s, Flank::Solid(0), Flank::Wall(WallSide::Top)).is_err());
    }

    #[test]
    fn single_pore_channel_has_only_boundary_faces() {
        let s = spec(vec![], [0.0, 0.0, 2.0, 1.0]);
        let segs = interface_segments(&s).unwrap();
        assert_eq!(segs.len(), 2);
        assert_eq!(segs[0].kind, SegmentKind::Inlet);
        assert_eq!(segs[0].endpoints, [[0.0, 0.0], [0.0, 1.0]]);
        assert_eq!(segs[1].kind, SegmentKind::Outlet);
        assert_eq!(segs[0].pores[0], Some(0));
    }

    #[test]
    fn inlet_split_by_clipped_disk() {
        let s = spec(vec![Solid::disk(0.0, 0.5, 0.25)], [0.0, 0.0, 2.0, 1.0]);
        let segs = boundary_segments(&s, None);
        let inlet: Vec<_> = segs.iter().filter(|g| g.kind == SegmentKind::Inlet).collect();
        assert_eq!(inlet.len(), 2);
        assert_eq!(inlet[0].endpoints, [[0.0, 0.0], [0.0, 0.25]]);
        assert_eq!(inlet[1].flanks, [Flank::Solid(0), Flank::Wall(WallSide::Top)]);
    }

    #[test]
    fn placement_is_deterministic_and_midpoints_in_void() {
        let s = spec(
            vec![
                Solid::disk(1.0, 0.6, 0.35),
                Solid::disk(2.0, 1.4, 0.35),
                Solid::disk(3.0, 0.6, 0.35),
            ],
            [0.0, 0.0, 4.0, 2.0],
        );
        let a = interface_segments(&s).unwrap();
        let b = interface_segments(&s).unwrap();
        assert_eq!(a, b);
        for seg in a.iter().filter(|g| g.kind == SegmentKind::Internal) {
            assert!(distance_to_solid(&s, seg.midpoint()) > 0.0);
        }
    }

    #[test]
    fn perturbation_zero_is_identity_and_bounded_otherwise() {
        let s = spec(
            vec![Solid::disk(1.0, 0.6, 0.35), Solid::disk(2.0, 1.4, 0.35), Solid::disk(3.0, 0.6, 0.35)],
            [0.0, 0.0, 4.0, 2.0],
        );
        let segs = interface_segments(&s).unwrap();
        assert_eq!(perturb_interfaces(&s, &segs, 0.0, 1).unwrap(), segs);
        for eps in [0.1, 0.2] {
            let p = perturb_interfaces(&s, &segs, eps, 11).unwrap();
            assert_eq!(p, perturb_interfaces(&s, &segs, eps, 11).unwrap());
            for (a, b) in segs.iter().zip(&p) {
                assert_eq!(a.pores, b.pores);
                for e in 0..2 {
                    assert!(dist(a.endpoints[e], b.endpoints[e]) <= eps + 1e-12);
                }
            }
        }
        let p1 = perturb_interfaces(&s, &segs, 0.2, 1).unwrap();
        let p2 = perturb_interfaces(&s, &segs, 0.2, 2).unwrap();
        assert_ne!(p1, p2);
    }
}
