//! Quadrature rules and the quadratic/linear Lagrange element on triangles.
//!
//! Local node order: vertices 0, 1, 2, then the midpoints of the edges
//! opposite vertices 0, 1, 2.

use crate::scalar::{Real, Vec2};

/// Symmetric 6-point rule exact for degree 4: barycentric points and weights
/// summing to one (multiply by the triangle area).
pub const TRI_RULE_DEG4: [([f64; 3], f64); 6] = {
    const A1: f64 = 0.445_948_490_915_964_886_32;
    const W1: f64 = 0.223_381_589_678_011_465_70;
    const A2: f64 = 0.091_576_213_509_770_743_46;
    const W2: f64 = 0.109_951_743_655_321_867_64;
    const B1: f64 = 1.0 - 2.0 * A1;
    const B2: f64 = 1.0 - 2.0 * A2;
    [
        ([A1, A1, B1], W1),
        ([A1, B1, A1], W1),
        ([B1, A1, A1], W1),
        ([A2, A2, B2], W2),
        ([A2, B2, A2], W2),
        ([B2, A2, A2], W2),
    ]
};

/// 3-point Gauss rule on `[0, 1]`, exact for degree 5.
pub const EDGE_RULE: [(f64, f64); 3] = {
    // sqrt(3/5) / 2
    const D: f64 = 0.387_298_334_620_741_688_52;
    [(0.5 - D, 5.0 / 18.0), (0.5, 8.0 / 18.0), (0.5 + D, 5.0 / 18.0)]
};

/// Affine geometry of one triangle.
#[derive(Debug, Clone, Copy)]
pub struct TriangleGeometry<T> {
    pub area: T,
    /// Gradients of the barycentric coordinates.
    pub grad_lambda: [Vec2<T>; 3],
}

impl<T: Real> TriangleGeometry<T> {
    pub fn new(p: [Vec2<T>; 3]) -> Self {
        let two_a = (p[1][0] - p[0][0]) * (p[2][1] - p[0][1]) - (p[2][0] - p[0][0]) * (p[1][1] - p[0][1]);
        let inv = T::one() / two_a;
        let g = |i: usize, j: usize| [(p[i][1] - p[j][1]) * inv, (p[j][0] - p[i][0]) * inv];
        TriangleGeometry {
            area: two_a * T::lit(0.5),
            grad_lambda: [g(1, 2), g(2, 0), g(0, 1)],
        }
    }
}

/// Quadratic basis values at barycentric point `l`.
#[inline]
pub fn p2_values<T: Real>(l: [T; 3]) -> [T; 6] {
    let two = T::lit(2.0);
    let four = T::lit(4.0);
    [
        l[0] * (two * l[0] - T::one()),
        l[1] * (two * l[1] - T::one()),
        l[2] * (two * l[2] - T::one()),
        four * l[1] * l[2],
        four * l[2] * l[0],
        four * l[0] * l[1],
    ]
}

/// Physical gradients of the quadratic basis at barycentric point `l`.
#[inline]
pub fn p2_gradients<T: Real>(l: [T; 3], g: &[Vec2<T>; 3]) -> [Vec2<T>; 6] {
    let four = T::lit(4.0);
    let v = |k: usize| {
        let s = four * l[k] - T::one();
        [s * g[k][0], s * g[k][1]]
    };
    let e = |i: usize, j: usize| {
        [
            four * (l[i] * g[j][0] + l[j] * g[i][0]),
            four * (l[i] * g[j][1] + l[j] * g[i][1]),
        ]
    };
    [v(0), v(1), v(2), e(1, 2), e(2, 0), e(0, 1)]
}

/// Quadratic trace basis on an edge `a → b` at parameter `t`: values for
/// `a`, the midpoint, and `b`.
#[inline]
pub fn p2_edge_values<T: Real>(t: T) -> [T; 3] {
    let two = T::lit(2.0);
    [
        (T::one() - t) * (T::one() - two * t),
        T::lit(4.0) * t * (T::one() - t),
        t * (two * t - T::one()),
    ]
}
