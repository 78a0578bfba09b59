//! Sutherland-Hodgman clipping in homogeneous clip space.
//!
//! Polygons are clipped against the near plane `w >= W_EPSILON` and the six
//! frustum planes `-w <= x, y, z <= w` before perspective division.

use crate::Real;

/// Minimum clip-space `w` a visible point may have.
pub const W_EPSILON: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Plane {
    Near,
    Left,
    Right,
    Bottom,
    Top,
    Front,
    Back,
}

const PLANES: [Plane; 7] = [
    Plane::Near,
    Plane::Left,
    Plane::Right,
    Plane::Bottom,
    Plane::Top,
    Plane::Front,
    Plane::Back,
];

#[inline]
fn distance<T: Real>(p: &[T; 4], plane: Plane) -> T {
    match plane {
        Plane::Near => p[3] - T::lit(W_EPSILON),
        Plane::Left => p[3] + p[0],
        Plane::Right => p[3] - p[0],
        Plane::Bottom => p[3] + p[1],
        Plane::Top => p[3] - p[1],
        Plane::Front => p[3] + p[2],
        Plane::Back => p[3] - p[2],
    }
}

#[inline]
fn lerp4<T: Real>(a: &[T; 4], b: &[T; 4], t: T) -> [T; 4] {
    [
        a[0] + (b[0] - a[0]) * t,
        a[1] + (b[1] - a[1]) * t,
        a[2] + (b[2] - a[2]) * t,
        a[3] + (b[3] - a[3]) * t,
    ]
}

fn clip_against<T: Real>(poly: &[[T; 4]], plane: Plane, out: &mut Vec<[T; 4]>) {
    out.clear();
    let n = poly.len();
    for i in 0..n {
        let cur = &poly[i];
        let next = &poly[(i + 1) % n];
        let dc = distance(cur, plane);
        let dn = distance(next, plane);
        let cur_in = dc >= T::zero();
        if cur_in {
            out.push(*cur);
        }
        if cur_in != (dn >= T::zero()) {
            let t = dc / (dc - dn);
            out.push(lerp4(cur, next, t));
        }
    }
}

/// Whether all three vertices lie inside every clip plane.
pub fn fully_inside<T: Real>(tri: &[[T; 4]; 3]) -> bool {
    PLANES
        .iter()
        .all(|&pl| tri.iter().all(|p| distance(p, pl) >= T::zero()))
}

/// Clips a triangle to the view volume. Returns the clipped convex polygon,
/// empty when nothing remains.
pub fn clip_triangle<T: Real>(tri: &[[T; 4]; 3]) -> Vec<[T; 4]> {
    if fully_inside(tri) {
        return tri.to_vec();
    }
    let mut poly = tri.to_vec();
    let mut scratch = Vec::with_capacity(10);
    for &plane in &PLANES {
        if poly.len() < 3 {
            return Vec::new();
        }
        clip_against(&poly, plane, &mut scratch);
        std::mem::swap(&mut poly, &mut scratch);
    }
    if poly.len() < 3 {
        poly.clear();
    }
    poly
}

/// Clips the segment `a b` to the half-space `w >= W_EPSILON`. Returns `None`
/// when the whole segment lies behind the near plane.
pub fn clip_segment_near<T: Real>(a: [T; 4], b: [T; 4]) -> Option<([T; 4], [T; 4])> {
    let da = distance(&a, Plane::Near);
    let db = distance(&b, Plane::Near);
    match (da >= T::zero(), db >= T::zero()) {
        (true, true) => Some((a, b)),
        (false, false) => None,
        (true, false) => Some((a, lerp4(&a, &b, da / (da - db)))),
        (false, true) => Some((lerp4(&a, &b, da / (da - db)), b)),
    }
}

/// Signed area of a polygon given in 2D NDC coordinates.
pub fn ndc_area<T: Real>(poly: &[[T; 4]]) -> T {
    let n = poly.len();
    let mut acc = T::zero();
    for i in 0..n {
        let a = &poly[i];
        let b = &poly[(i + 1) % n];
        let (ax, ay) = (a[0] / a[3], a[1] / a[3]);
        let (bx, by) = (b[0] / b[3], b[1] / b[3]);
        acc += ax * by - bx * ay;
    }
    acc * T::lit(0.5)
}
