//! Vertex-level helpers: homogeneous transforms and reflection vectors.

use crate::buffers::ClipVertexBuffer;
use crate::{Error, Real, Result};

/// Row-major 4x4 matrix acting on column vectors.
pub type Mat4<T> = [[T; 4]; 4];

pub fn identity<T: Real>() -> Mat4<T> {
    let mut m = [[T::zero(); 4]; 4];
    for (i, row) in m.iter_mut().enumerate() {
        row[i] = T::one();
    }
    m
}

pub fn mat_mul<T: Real>(a: &Mat4<T>, b: &Mat4<T>) -> Mat4<T> {
    let mut m = [[T::zero(); 4]; 4];
    for i in 0..4 {
        for j in 0..4 {
            for k in 0..4 {
                m[i][j] += a[i][k] * b[k][j];
            }
        }
    }
    m
}

pub fn translation<T: Real>(t: [T; 3]) -> Mat4<T> {
    let mut m = identity();
    for i in 0..3 {
        m[i][3] = t[i];
    }
    m
}

/// Embeds a 3x3 linear map.
pub fn linear<T: Real>(r: [[T; 3]; 3]) -> Mat4<T> {
    let mut m = identity();
    for i in 0..3 {
        m[i][..3].copy_from_slice(&r[i]);
    }
    m
}

/// Right-handed perspective projection looking down `-z`, mapping depth
/// `[near, far]` to NDC `[-1, 1]`.
pub fn perspective<T: Real>(fov_y: T, aspect: T, near: T, far: T) -> Mat4<T> {
    let f = T::one() / (fov_y * T::lit(0.5)).tan();
    let mut m = [[T::zero(); 4]; 4];
    m[0][0] = f / aspect;
    m[1][1] = f;
    m[2][2] = (far + near) / (near - far);
    m[2][3] = T::lit(2.0) * far * near / (near - far);
    m[3][2] = -T::one();
    m
}

/// World-to-camera transform for a camera at `eye` looking at `target`.
pub fn look_at<T: Real>(eye: [T; 3], target: [T; 3], up: [T; 3]) -> Mat4<T> {
    let f = normalize3(sub3(target, eye));
    let s = normalize3(cross3(f, up));
    let u = cross3(s, f);
    let mut m = identity();
    for i in 0..3 {
        m[0][i] = s[i];
        m[1][i] = u[i];
        m[2][i] = -f[i];
    }
    m[0][3] = -dot3(s, eye);
    m[1][3] = -dot3(u, eye);
    m[2][3] = dot3(f, eye);
    m
}

/// Model, view and projection matrices.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TransformStack<T> {
    pub model: Mat4<T>,
    pub view: Mat4<T>,
    pub projection: Mat4<T>,
}

impl<T: Real> TransformStack<T> {
    pub fn identity() -> Self {
        Self {
            model: identity(),
            view: identity(),
            projection: identity(),
        }
    }

    pub fn mvp(&self) -> Mat4<T> {
        mat_mul(&self.projection, &mat_mul(&self.view, &self.model))
    }
}

/// `clip_i = M (x_i, y_i, z_i, 1)`.
pub fn transform_clip<T: Real>(points: &[[T; 3]], mvp: &Mat4<T>) -> Result<ClipVertexBuffer<T>> {
    let out = points
        .iter()
        .map(|p| {
            let mut c = [T::zero(); 4];
            for (r, cr) in c.iter_mut().enumerate() {
                *cr = mvp[r][0] * p[0] + mvp[r][1] * p[1] + mvp[r][2] * p[2] + mvp[r][3];
            }
            c
        })
        .collect();
    ClipVertexBuffer::new(out)
}

/// Gradients of [`transform_clip`] with respect to the points and the
/// matrix entries.
pub fn transform_clip_backward<T: Real>(
    points: &[[T; 3]],
    mvp: &Mat4<T>,
    dl_dclip: &[[T; 4]],
) -> Result<(Vec<[T; 3]>, Mat4<T>)> {
    if dl_dclip.len() != points.len() {
        return Err(Error::shape("clip gradient", points.len(), dl_dclip.len()));
    }
    let mut dm = [[T::zero(); 4]; 4];
    let dp = points
        .iter()
        .zip(dl_dclip)
        .map(|(p, g)| {
            let h = [p[0], p[1], p[2], T::one()];
            let mut d = [T::zero(); 3];
            for r in 0..4 {
                for c in 0..4 {
                    dm[r][c] += g[r] * h[c];
                }
                for (c, dc) in d.iter_mut().enumerate() {
                    *dc += mvp[r][c] * g[r];
                }
            }
            d
        })
        .collect();
    Ok((dp, dm))
}

/// `r = normalize(2 (n̂·v) n̂ - v)` per vertex, with `v` pointing from the
/// surface toward the viewer.
pub fn reflection_vectors<T: Real>(normals: &[[T; 3]], view: &[[T; 3]]) -> Result<Vec<[T; 3]>> {
    if normals.len() != view.len() {
        return Err(Error::shape("view directions", normals.len(), view.len()));
    }
    normals
        .iter()
        .zip(view)
        .enumerate()
        .map(|(i, (n, v))| {
            let (nh, _) = unit(*n).ok_or(Error::ZeroVector { index: i })?;
            let (r, _) = unit(reflect_raw(nh, *v)).ok_or(Error::ZeroVector { index: i })?;
            Ok(r)
        })
        .collect()
}

/// Gradients of [`reflection_vectors`] with respect to normals and view
/// directions.
pub fn reflection_vectors_backward<T: Real>(
    normals: &[[T; 3]],
    view: &[[T; 3]],
    dl_dr: &[[T; 3]],
) -> Result<(Vec<[T; 3]>, Vec<[T; 3]>)> {
    if normals.len() != view.len() || dl_dr.len() != normals.len() {
        return Err(Error::shape("reflection gradient", normals.len(), dl_dr.len()));
    }
    let two = T::lit(2.0);
    let mut dn = Vec::with_capacity(normals.len());
    let mut dv = Vec::with_capacity(normals.len());
    for (i, ((n, v), g)) in normals.iter().zip(view).zip(dl_dr).enumerate() {
        let (nh, nlen) = unit(*n).ok_or(Error::ZeroVector { index: i })?;
        let u = reflect_raw(nh, *v);
        let (r, ulen) = unit(u).ok_or(Error::ZeroVector { index: i })?;
        let gu = normalize_vjp(r, ulen, *g);
        let nv = dot3(nh, *v);
        let gun = dot3(gu, nh);
        let mut gv = [T::zero(); 3];
        let mut gnh = [T::zero(); 3];
        for k in 0..3 {
            gv[k] = two * gun * nh[k] - gu[k];
            gnh[k] = two * (v[k] * gun + nv * gu[k]);
        }
        dn.push(normalize_vjp(nh, nlen, gnh));
        dv.push(gv);
    }
    Ok((dn, dv))
}

#[inline]
fn reflect_raw<T: Real>(nh: [T; 3], v: [T; 3]) -> [T; 3] {
    let k = T::lit(2.0) * dot3(nh, v);
    [k * nh[0] - v[0], k * nh[1] - v[1], k * nh[2] - v[2]]
}

/// Backward of `y = x / |x|` given `y` and `|x|`.
#[inline]
pub(crate) fn normalize_vjp<T: Real>(y: [T; 3], len: T, g: [T; 3]) -> [T; 3] {
    let d = dot3(y, g);
    [
        (g[0] - y[0] * d) / len,
        (g[1] - y[1] * d) / len,
        (g[2] - y[2] * d) / len,
    ]
}

#[inline]
pub(crate) fn unit<T: Real>(v: [T; 3]) -> Option<([T; 3], T)> {
    let len = dot3(v, v).sqrt();
    (len > T::zero() && len.is_finite()).then(|| ([v[0] / len, v[1] / len, v[2] / len], len))
}

#[inline]
pub(crate) fn dot3<T: Real>(a: [T; 3], b: [T; 3]) -> T {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

#[inline]
fn sub3<T: Real>(a: [T; 3], b: [T; 3]) -> [T; 3] {
    [a[0] - b[0], a[1] - b[1], a[2] - b[2]]
}

#[inline]
fn cross3<T: Real>(a: [T; 3], b: [T; 3]) -> [T; 3] {
    [
        a[1] * b[2] - a[2] * b[1],
        a[2] * b[0] - a[0] * b[2],
        a[0] * b[1] - a[1] * b[0],
    ]
}

fn normalize3<T: Real>(v: [T; 3]) -> [T; 3] {
    unit(v).map_or(v, |(u, _)| u)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identity_passes_through() {
        let pts = [[0.5f64, -2.0, 3.0]];
        let c = transform_clip(&pts, &identity()).unwrap();
        assert_eq!(c.positions()[0], [0.5, -2.0, 3.0, 1.0]);
    }

    #[test]
    fn translation_offsets() {
        let c = transform_clip(&[[1.0f64, 2.0, 3.0]], &translation([0.5, -1.0, 2.0])).unwrap();
        assert_eq!(c.positions()[0], [1.5, 1.0, 5.0, 1.0]);
    }

    #[test]
    fn reflection_limits() {
        let n = [[0.0f64, 0.0, 2.0]];
        let head_on = reflection_vectors(&n, &[[0.0, 0.0, 1.0]]).unwrap();
        assert_eq!(head_on[0], [0.0, 0.0, 1.0]);
        let grazing = reflection_vectors(&n, &[[1.0, 0.0, 0.0]]).unwrap();
        assert_eq!(grazing[0], [-1.0, 0.0, 0.0]);
        assert_eq!(
            reflection_vectors(&[[0.0, 0.0, 0.0]], &[[1.0, 0.0, 0.0]]).unwrap_err(),
            Error::ZeroVector { index: 0 }
        );
    }

    #[test]
    fn perspective_maps_depth_range() {
        let p = perspective(1.0f64, 1.0, 0.5, 10.0);
        for (z, ndc) in [(-0.5, -1.0), (-10.0, 1.0)] {
            let c = transform_clip(&[[0.0, 0.0, z]], &p).unwrap().positions()[0];
            assert!((c[2] / c[3] - ndc).abs() < 1e-12);
        }
    }

    #[test]
    fn look_at_centers_target() {
        let v = look_at([3.0f64, 2.0, 1.0], [0.0, 0.0, 0.0], [0.0, 1.0, 0.0]);
        let c = transform_clip(&[[0.0, 0.0, 0.0]], &v).unwrap().positions()[0];
        assert!(c[0].abs() < 1e-12 && c[1].abs() < 1e-12);
        assert!((c[2] + 14f64.sqrt()).abs() < 1e-12);
    }
}
