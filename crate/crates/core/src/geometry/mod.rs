//! Porous geometries: domain, solid inclusions, interface placement and
//! pore/throat topology.

mod interfaces;
mod topology;

use std::path::Path;

use serde::{Deserialize, Serialize};

pub use interfaces::{
    interface_segments, perturb_interfaces, place_interfaces, Flank, InterfaceSegment, SegmentKind,
};
pub use topology::{extract_topology, NetworkTopology, PoreSite, Throat};

use crate::error::{Error, Result};
use crate::scalar::{dist, Real, Vec2};

/// Axis-aligned rectangle `[x0, x1] × [y0, y1]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Domain<T> {
    pub x0: T,
    pub y0: T,
    pub x1: T,
    pub y1: T,
}

impl<T: Real> Domain<T> {
    pub fn width(&self) -> T {
        self.x1 - self.x0
    }

    pub fn height(&self) -> T {
        self.y1 - self.y0
    }

    pub fn area(&self) -> T {
        self.width() * self.height()
    }

    pub fn contains(&self, p: Vec2<T>) -> bool {
        p[0] >= self.x0 && p[0] <= self.x1 && p[1] >= self.y0 && p[1] <= self.y1
    }

    pub fn center(&self) -> Vec2<T> {
        let half = T::lit(0.5);
        [(self.x0 + self.x1) * half, (self.y0 + self.y1) * half]
    }
}

/// Which of the two no-slip domain walls.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum WallSide {
    Bottom,
    Top,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Solid<T> {
    Disk { center: Vec2<T>, radius: T },
    Rect { corner: Vec2<T>, extents: Vec2<T> },
}

impl<T: Real> Solid<T> {
    pub fn disk(cx: T, cy: T, r: T) -> Self {
        Solid::Disk {
            center: [cx, cy],
            radius: r,
        }
    }

    pub fn rect(x: T, y: T, w: T, h: T) -> Self {
        Solid::Rect {
            corner: [x, y],
            extents: [w, h],
        }
    }

    pub fn center(&self) -> Vec2<T> {
        match *self {
            Solid::Disk { center, .. } => center,
            Solid::Rect { corner, extents } => {
                let half = T::lit(0.5);
                [corner[0] + extents[0] * half, corner[1] + extents[1] * half]
            }
        }
    }

    /// Euclidean distance from `x` to the solid (zero inside).
    pub fn distance(&self, x: Vec2<T>) -> T {
        self.signed_distance(x).max(T::zero())
    }

    /// Signed distance to the boundary, negative inside. For rectangles the
    /// interior value is minus the distance to the nearest side.
    pub fn signed_distance(&self, x: Vec2<T>) -> T {
        match *self {
            Solid::Disk { center, radius } => dist(x, center) - radius,
            Solid::Rect { corner, extents } => {
                let dx0 = corner[0] - x[0];
                let dx1 = x[0] - (corner[0] + extents[0]);
                let dy0 = corner[1] - x[1];
                let dy1 = x[1] - (corner[1] + extents[1]);
                let ox = dx0.max(dx1);
                let oy = dy0.max(dy1);
                if ox <= T::zero() && oy <= T::zero() {
                    ox.max(oy)
                } else {
                    ox.max(T::zero()).hypot(oy.max(T::zero()))
                }
            }
        }
    }

    /// Closest point of the solid boundary to `x`.
    pub fn nearest_boundary_point(&self, x: Vec2<T>) -> Vec2<T> {
        match *self {
            Solid::Disk { center, radius } => {
                let d = dist(x, center);
                if d == T::zero() {
                    return [center[0] + radius, center[1]];
                }
                [
                    center[0] + (x[0] - center[0]) * radius / d,
                    center[1] + (x[1] - center[1]) * radius / d,
                ]
            }
            Solid::Rect { corner, extents } => {
                let (xa, xb) = (corner[0], corner[0] + extents[0]);
                let (ya, yb) = (corner[1], corner[1] + extents[1]);
                let cx = x[0].max(xa).min(xb);
                let cy = x[1].max(ya).min(yb);
                if cx != x[0] || cy != x[1] {
                    return [cx, cy];
                }
                // Inside: push to the nearest side.
                let cands = [
                    (x[0] - xa, [xa, x[1]]),
                    (xb - x[0], [xb, x[1]]),
                    (x[1] - ya, [x[0], ya]),
                    (yb - x[1], [x[0], yb]),
                ];
                cands
                    .iter()
                    .min_by(|a, b| a.0.partial_cmp(&b.0).unwrap())
                    .map(|c| c.1)
                    .unwrap()
            }
        }
    }

    pub fn area(&self) -> T {
        match *self {
            Solid::Disk { radius, .. } => T::lit(std::f64::consts::PI) * radius * radius,
            Solid::Rect { extents, .. } => extents[0] * extents[1],
        }
    }

    /// Closed contact: overlapping or touching at a point.
    fn touches(&self, other: &Solid<T>) -> bool {
        match (*self, *other) {
            (Solid::Disk { center: c1, radius: r1 }, Solid::Disk { center: c2, radius: r2 }) => {
                dist(c1, c2) <= r1 + r2
            }
            (Solid::Rect { corner: a, extents: ea }, Solid::Rect { corner: b, extents: eb }) => {
                a[0] <= b[0] + eb[0] && b[0] <= a[0] + ea[0] && a[1] <= b[1] + eb[1] && b[1] <= a[1] + ea[1]
            }
            (Solid::Disk { center, radius }, r @ Solid::Rect { .. })
            | (r @ Solid::Rect { .. }, Solid::Disk { center, radius }) => r.distance(center) <= radius,
        }
    }

    /// Vertical extent `(bottom, top)`.
    fn y_range(&self) -> (T, T) {
        match *self {
            Solid::Disk { center, radius } => (center[1] - radius, center[1] + radius),
            Solid::Rect { corner, extents } => (corner[1], corner[1] + extents[1]),
        }
    }

    fn overlaps(&self, other: &Solid<T>) -> bool {
        match (*self, *other) {
            (Solid::Disk { center: c1, radius: r1 }, Solid::Disk { center: c2, radius: r2 }) => {
                dist(c1, c2) < r1 + r2
            }
            (Solid::Rect { corner: a, extents: ea }, Solid::Rect { corner: b, extents: eb }) => {
                a[0] < b[0] + eb[0] && b[0] < a[0] + ea[0] && a[1] < b[1] + eb[1] && b[1] < a[1] + ea[1]
            }
            (Solid::Disk { center, radius }, r @ Solid::Rect { .. })
            | (r @ Solid::Rect { .. }, Solid::Disk { center, radius }) => r.distance(center) < radius,
        }
    }
}

/// Validated problem description: domain, inclusions, driving pressures.
#[derive(Debug, Clone, PartialEq)]
pub struct GeometrySpec<T> {
    pub domain: Domain<T>,
    pub solids: Vec<Solid<T>>,
    pub p_in: T,
    pub p_out: T,
    /// Viscosity; unit density, so kinematic and dynamic values coincide.
    pub nu: T,
    pub seed: u64,
    /// Explicitly placed interior interfaces; when non-empty these replace
    /// topology-derived placement.
    pub interfaces: Vec<[Vec2<T>; 2]>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
enum SolidJson {
    #[serde(rename = "disk")]
    Disk([f64; 3]),
    #[serde(rename = "rect")]
    Rect([f64; 4]),
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct GeometryJson {
    domain: [f64; 4],
    #[serde(default)]
    solids: Vec<SolidJson>,
    p_in: f64,
    p_out: f64,
    nu: f64,
    #[serde(default)]
    seed: u64,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    interfaces: Vec<[f64; 4]>,
}

impl<T: Real> GeometrySpec<T> {
    /// Builds and validates a spec.
    pub fn new(
        domain: Domain<T>,
        solids: Vec<Solid<T>>,
        p_in: T,
        p_out: T,
        nu: T,
        seed: u64,
    ) -> Result<Self> {
        let spec = Self {
            domain,
            solids,
            p_in,
            p_out,
            nu,
            seed,
            interfaces: Vec::new(),
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn with_interfaces(mut self, interfaces: Vec<[Vec2<T>; 2]>) -> Result<Self> {
        self.interfaces = interfaces;
        self.validate()?;
        Ok(self)
    }

    /// Empty rectangular channel `[0, length] × [0, width]`.
    pub fn channel(length: T, width: T, p_in: T, p_out: T, nu: T) -> Result<Self> {
        Self::new(
            Domain {
                x0: T::zero(),
                y0: T::zero(),
                x1: length,
                y1: width,
            },
            Vec::new(),
            p_in,
            p_out,
            nu,
            0,
        )
    }

    pub fn validate(&self) -> Result<()> {
        let d = &self.domain;
        let finite = [d.x0, d.y0, d.x1, d.y1, self.p_in, self.p_out, self.nu]
            .iter()
            .all(|v| v.is_finite());
        if !finite {
            return Err(Error::Geometry("non-finite number".into()));
        }
        if d.x1 <= d.x0 || d.y1 <= d.y0 {
            return Err(Error::Geometry("domain has non-positive extent".into()));
        }
        if self.nu <= T::zero() {
            return Err(Error::Geometry("viscosity must be positive".into()));
        }
        if self.p_in <= self.p_out {
            return Err(Error::Geometry(format!(
                "p_in ({}) must exceed p_out ({})",
                self.p_in, self.p_out
            )));
        }
        for (k, s) in self.solids.iter().enumerate() {
            match *s {
                Solid::Disk { center, radius } => {
                    if !(radius > T::zero()) || !center[0].is_finite() || !center[1].is_finite() {
                        return Err(Error::Geometry(format!("solid {k}: radius must be positive")));
                    }
                }
                Solid::Rect { corner, extents } => {
                    if !(extents[0] > T::zero() && extents[1] > T::zero())
                        || !corner[0].is_finite()
                        || !corner[1].is_finite()
                    {
                        return Err(Error::Geometry(format!("solid {k}: extents must be positive")));
                    }
                }
            }
            let c = s.center();
            let clamped = [c[0].max(d.x0).min(d.x1), c[1].max(d.y0).min(d.y1)];
            if s.signed_distance(clamped) >= T::zero() && !d.contains(c) {
                return Err(Error::Geometry(format!("solid {k} lies outside the domain")));
            }
        }
        for i in 0..self.solids.len() {
            for j in i + 1..self.solids.len() {
                if self.solids[i].overlaps(&self.solids[j]) {
                    return Err(Error::Geometry(format!("solids {i} and {j} overlap")));
                }
            }
        }
        if let Some(chain) = self.blocking_chain() {
            return Err(Error::Geometry(format!(
                "solids {chain:?} connect the walls and block the flow from inlet to outlet"
            )));
        }
        for (k, seg) in self.interfaces.iter().enumerate() {
            for p in seg {
                if !d.contains(*p) {
                    return Err(Error::Geometry(format!("interface {k} leaves the domain")));
                }
            }
        }
        Ok(())
    }

    /// A chain of mutually touching solids from the bottom wall to the top
    /// wall, if one exists. In a channel such a chain is exactly what cuts
    /// the inlet off from the outlet.
    pub fn blocking_chain(&self) -> Option<Vec<usize>> {
        let n = self.solids.len();
        let d = &self.domain;
        let mut parent: Vec<Option<usize>> = vec![None; n];
        let mut seen = vec![false; n];
        let mut queue = std::collections::VecDeque::new();
        for (k, s) in self.solids.iter().enumerate() {
            if s.y_range().0 <= d.y0 {
                seen[k] = true;
                queue.push_back(k);
            }
        }
        while let Some(k) = queue.pop_front() {
            if self.solids[k].y_range().1 >= d.y1 {
                let mut chain = vec![k];
                let mut c = k;
                while let Some(p) = parent[c] {
                    chain.push(p);
                    c = p;
                }
                chain.reverse();
                return Some(chain);
            }
            for j in 0..n {
                if !seen[j] && self.solids[k].touches(&self.solids[j]) {
                    seen[j] = true;
                    parent[j] = Some(k);
                    queue.push_back(j);
                }
            }
        }
        None
    }

    /// Area of the void region (solids clipped to the domain are only
    /// exact for shapes fully inside).
    pub fn void_area(&self) -> T {
        self.domain.area() - self.solids.iter().map(Solid::area).sum::<T>()
    }

    pub fn parse_json(text: &str) -> Result<Self> {
        let raw: GeometryJson =
            serde_json::from_str(text).map_err(|e| Error::parse("geometry JSON", e.to_string()))?;
        let c = T::lit;
        let domain = Domain {
            x0: c(raw.domain[0]),
            y0: c(raw.domain[1]),
            x1: c(raw.domain[2]),
            y1: c(raw.domain[3]),
        };
        let solids = raw
            .solids
            .iter()
            .map(|s| match *s {
                SolidJson::Disk([x, y, r]) => Solid::disk(c(x), c(y), c(r)),
                SolidJson::Rect([x, y, w, h]) => Solid::rect(c(x), c(y), c(w), c(h)),
            })
            .collect();
        let interfaces = raw
            .interfaces
            .iter()
            .map(|s| [[c(s[0]), c(s[1])], [c(s[2]), c(s[3])]])
            .collect();
        let spec = Self {
            domain,
            solids,
            p_in: c(raw.p_in),
            p_out: c(raw.p_out),
            nu: c(raw.nu),
            seed: raw.seed,
            interfaces,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn to_json(&self) -> String {
        let f = |v: T| v.as_f64();
        let raw = GeometryJson {
            domain: [f(self.domain.x0), f(self.domain.y0), f(self.domain.x1), f(self.domain.y1)],
            solids: self
                .solids
                .iter()
                .map(|s| match *s {
                    Solid::Disk { center, radius } => SolidJson::Disk([f(center[0]), f(center[1]), f(radius)]),
                    Solid::Rect { corner, extents } => {
                        SolidJson::Rect([f(corner[0]), f(corner[1]), f(extents[0]), f(extents[1])])
                    }
                })
                .collect(),
            p_in: f(self.p_in),
            p_out: f(self.p_out),
            nu: f(self.nu),
            seed: self.seed,
            interfaces: self
                .interfaces
                .iter()
                .map(|s| [f(s[0][0]), f(s[0][1]), f(s[1][0]), f(s[1][1])])
                .collect(),
        };
        serde_json::to_string_pretty(&raw).expect("geometry serializes")
    }
}

/// Reads and validates a geometry JSON file.
pub fn load_geometry<T: Real>(path: impl AsRef<Path>) -> Result<GeometrySpec<T>> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    GeometrySpec::parse_json(&text)
}

/// Distance from `x` to the solid phase: `min_y∈solid ‖x − y‖`, zero inside a
/// solid and `+∞` when there are no solids.
pub fn distance_to_solid<T: Real>(spec: &GeometrySpec<T>, x: Vec2<T>) -> T {
    spec.solids
        .iter()
        .map(|s| s.distance(x))
        .fold(T::infinity(), T::min)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn two_disks() -> GeometrySpec<f64> {
        GeometrySpec::new(
            Domain { x0: -3.0, y0: -3.0, x1: 7.0, y1: 3.0 },
            vec![Solid::disk(0.0, 0.0, 1.0), Solid::disk(4.0, 0.0, 1.0)],
            1.0,
            0.0,
            1.0,
            0,
        )
        .unwrap()
    }

    #[test]
    fn distance_at_disk_center_is_zero() {
        assert_eq!(distance_to_solid(&two_disks(), [0.0, 0.0]), 0.0);
    }

    #[test]
    fn distance_two_from_center_of_unit_disk() {
        let spec: GeometrySpec<f64> = GeometrySpec::new(
            Domain { x0: -5.0, y0: -5.0, x1: 5.0, y1: 5.0 },
            vec![Solid::disk(0.0, 0.0, 1.0)],
            1.0,
            0.0,
            1.0,
            0,
        )
        .unwrap();
        assert!((distance_to_solid(&spec, [0.0, 2.0]) - 1.0).abs() < 1e-15);
    }

    #[test]
    fn distance_midpoint_between_disks() {
        // Analytic minimum over both solids: |2 - 0| - 1 = |2 - 4| - 1 = 1.
        assert!((distance_to_solid(&two_disks(), [2.0, 0.0]) - 1.0).abs() < 1e-15);
    }

    #[test]
    fn rect_distance_outside_and_inside() {
        let r = Solid::rect(0.0, 0.0, 2.0, 1.0);
        assert!((r.distance([3.0, 2.0]) - 2f64.sqrt()).abs() < 1e-15);
        assert_eq!(r.distance([1.0, 0.5]), 0.0);
        assert!((r.signed_distance([1.0, 0.25]) + 0.25).abs() < 1e-15);
        assert_eq!(r.nearest_boundary_point([1.0, 0.25]), [1.0, 0.0]);
    }

    #[test]
    fn overlapping_disks_rejected() {
        let err = GeometrySpec::new(
            Domain { x0: 0.0, y0: 0.0, x1: 4.0, y1: 2.0 },
            vec![Solid::disk(1.0, 1.0, 0.5), Solid::disk(1.8, 1.0, 0.5)],
            1.0,
            0.0,
            1.0,
            0,
        );
        assert!(matches!(err, Err(Error::Geometry(_))));
    }

    #[test]
    fn touching_chain_across_channel_is_rejected() {
        let d = Domain { x0: 0.0, y0: 0.0, x1: 3.0, y1: 1.0 };
        let chain = vec![Solid::disk(1.0, 0.25, 0.25), Solid::rect(0.9, 0.5, 0.2, 0.5)];
        let err = GeometrySpec::new(d, chain, 1.0, 0.0, 1.0, 0).unwrap_err();
        assert!(err.to_string().contains("[0, 1]"), "{err}");

        let gap = vec![Solid::disk(1.0, 0.25, 0.25), Solid::rect(0.9, 0.55, 0.2, 0.45)];
        let spec = GeometrySpec::new(d, gap, 1.0, 0.0, 1.0, 0).unwrap();
        assert_eq!(spec.blocking_chain(), None);
    }

    #[test]
    fn pressure_drop_must_be_positive() {
        assert!(GeometrySpec::<f64>::channel(2.0, 1.0, 0.0, 0.0, 1.0).is_err());
        assert!(GeometrySpec::<f64>::channel(2.0, 1.0, 0.0, 1.0, 1.0).is_err());
    }

    #[test]
    fn json_round_trip() {
        let text = r#"{"domain": [0, 0, 4, 2], "solids": [{"disk": [1, 1, 0.4]}, {"rect": [2.5, 0.5, 0.5, 1.0]}],
                       "p_in": 1, "p_out": 0, "nu": 1, "seed": 7}"#;
        let spec = GeometrySpec::<f64>::parse_json(text).unwrap();
        assert_eq!(spec.solids.len(), 2);
        assert_eq!(spec.seed, 7);
        let again = GeometrySpec::<f64>::parse_json(&spec.to_json()).unwrap();
        assert_eq!(spec, again);
    }

    #[test]
    fn empty_channel_parses() {
        let text = r#"{"domain": [0, 0, 2, 1], "solids": [], "p_in": 1, "p_out": 0, "nu": 1, "seed": 0}"#;
        let spec = GeometrySpec::<f64>::parse_json(text).unwrap();
        assert!(spec.solids.is_empty());
        assert_eq!(distance_to_solid(&spec, [1.0, 0.5]), f64::INFINITY);
    }

    #[test]
    fn f32_distance() {
        let s = Solid::<f32>::disk(0.0, 0.0, 1.0);
        assert!((s.distance([3.0, 4.0]) - 4.0).abs() < 1e-6);
    }
}
