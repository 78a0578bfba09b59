//! Cube-map addressing: direction vectors to face-local texture coordinates.
//!
//! Faces are ordered `+x, -x, +y, -y, +z, -z`. Within a face,
//! `s = (sc / m + 1) / 2` and `t = (tc / m + 1) / 2`, where `m` is the
//! magnitude of the major axis and `sc`, `tc` are signed copies of the other
//! two components. All three are linear in the direction, so the lookup is
//! scale invariant and `J_st` follows from the quotient rule. Face selection
//! is piecewise constant and carries no gradient.

use crate::interpolate::AttrImage;
use crate::raster::RasterGrid;
use crate::texture::{TexLookup, TexSampleRequest};
use crate::{Error, Real, Result};

/// Linear forms `(sc, tc, m)` of a face as coefficient vectors.
fn face_basis<T: Real>(face: usize) -> [[T; 3]; 3] {
    let (o, l, z) = (T::one(), -T::one(), T::zero());
    match face {
        0 => [[z, z, l], [z, l, z], [o, z, z]],
        1 => [[z, z, o], [z, l, z], [l, z, z]],
        2 => [[o, z, z], [z, z, o], [z, o, z]],
        3 => [[o, z, z], [z, z, l], [z, l, z]],
        4 => [[o, z, z], [z, l, z], [z, z, o]],
        _ => [[l, z, z], [z, l, z], [z, z, l]],
    }
}

pub fn cube_face<T: Real>(dir: [T; 3]) -> Option<usize> {
    let a = [dir[0].abs(), dir[1].abs(), dir[2].abs()];
    if !(a[0] > T::zero() || a[1] > T::zero() || a[2] > T::zero()) {
        return None;
    }
    let axis = if a[0] >= a[1] && a[0] >= a[2] {
        0
    } else if a[1] >= a[2] {
        1
    } else {
        2
    };
    Some(2 * axis + usize::from(dir[axis] < T::zero()))
}

/// Direction through face coordinates `(s, t)`, with unit major axis; the
/// inverse of [`cubemap_lookup`] up to scale.
pub fn face_direction<T: Real>(face: usize, s: T, t: T) -> [T; 3] {
    let [a, b, c] = face_basis::<T>(face);
    let two = T::lit(2.0);
    let (sc, tc) = (two * s - T::one(), two * t - T::one());
    std::array::from_fn(|i| a[i] * sc + b[i] * tc + c[i])
}

#[inline]
fn dot<T: Real>(a: [T; 3], b: [T; 3]) -> T {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

/// Screen derivative column `k` (0 for x, 1 for y) of the direction from
/// the interleaved layout `[dx/dX, dx/dY, dy/dX, dy/dY, dz/dX, dz/dY]`.
#[inline]
fn column<T: Real>(jdir: &[T; 6], k: usize) -> [T; 3] {
    [jdir[k], jdir[2 + k], jdir[4 + k]]
}

/// Single-direction lookup; `jdir` is laid out as interpolated derivatives.
pub fn cubemap_lookup<T: Real>(dir: [T; 3], jdir: [T; 6]) -> Option<TexLookup<T>> {
    let face = cube_face(dir)?;
    let [a, b, c] = face_basis::<T>(face);
    let (sc, tc, m) = (dot(a, dir), dot(b, dir), dot(c, dir));
    let half = T::lit(0.5);
    let mut jst = [T::zero(); 4];
    for k in 0..2 {
        let col = column(&jdir, k);
        let dm = dot(c, col);
        jst[k] = half * (dot(a, col) * m - sc * dm) / (m * m);
        jst[2 + k] = half * (dot(b, col) * m - tc * dm) / (m * m);
    }
    Some(TexLookup {
        face: face as u8,
        st: [half * (sc / m + T::one()), half * (tc / m + T::one())],
        jst,
    })
}

/// Backward of [`cubemap_lookup`] on its (fixed) face.
pub fn cubemap_lookup_backward<T: Real>(
    dir: [T; 3],
    jdir: [T; 6],
    dst: [T; 2],
    djst: [T; 4],
) -> ([T; 3], [T; 6]) {
    let mut gdir = [T::zero(); 3];
    let mut gj = [T::zero(); 6];
    let Some(face) = cube_face(dir) else {
        return (gdir, gj);
    };
    let [a, b, c] = face_basis::<T>(face);
    let (sc, tc, m) = (dot(a, dir), dot(b, dir), dot(c, dir));
    let half = T::lit(0.5);
    let m2 = m * m;
    let m3 = m2 * m;

    // Gradients on the linear forms sc, tc, m.
    let mut gsc = dst[0] * half / m;
    let mut gtc = dst[1] * half / m;
    let mut gm = -(dst[0] * sc + dst[1] * tc) * half / m2;

    for k in 0..2 {
        let col = column(&jdir, k);
        let (da, db, dm) = (dot(a, col), dot(b, col), dot(c, col));
        let (gs, gt) = (djst[k], djst[2 + k]);
        // jst_s = 0.5 (da / m - sc dm / m^2), same for t with (db, tc).
        gsc -= gs * half * dm / m2;
        gtc -= gt * half * dm / m2;
        gm += gs * half * (-da / m2 + T::lit(2.0) * sc * dm / m3)
            + gt * half * (-db / m2 + T::lit(2.0) * tc * dm / m3);
        let gda = gs * half / m;
        let gdb = gt * half / m;
        let gdm = -(gs * sc + gt * tc) * half / m2;
        for i in 0..3 {
            gj[2 * i + k] += gda * a[i] + gdb * b[i] + gdm * c[i];
        }
    }
    for i in 0..3 {
        gdir[i] = gsc * a[i] + gtc * b[i] + gm * c[i];
    }
    (gdir, gj)
}

/// Direction channels `[0, 3)` of `attr` and their derivatives, if the
/// first three differentiated channels are `0, 1, 2`.
fn split_dir<'a, T: Real>(attr: &'a AttrImage<T>) -> Result<Option<&'a crate::ImageGrid<T>>> {
    if attr.values.channels() < 3 {
        return Err(Error::shape("direction channels", 3, attr.values.channels()));
    }
    match &attr.derivs {
        Some(d) if attr.diff_channels.starts_with(&[0, 1, 2]) => Ok(Some(d)),
        Some(_) => Err(Error::shape("direction derivative channels", 3, attr.diff_channels.len())),
        None => Ok(None),
    }
}

fn pixel_dir<T: Real>(attr: &AttrImage<T>, derivs: Option<&crate::ImageGrid<T>>, i: usize) -> ([T; 3], [T; 6]) {
    let v = attr.values.pixel(i);
    let mut j = [T::zero(); 6];
    if let Some(d) = derivs {
        j.copy_from_slice(&d.pixel(i)[..6]);
    }
    ([v[0], v[1], v[2]], j)
}

/// Image-level addressing over covered pixels of `grid`.
pub fn cubemap_address<T: Real>(grid: &RasterGrid<T>, dir: &AttrImage<T>) -> Result<TexSampleRequest<T>> {
    let derivs = split_dir(dir)?;
    let mut pixels = Vec::new();
    let mut lookups = Vec::new();
    for (i, _) in grid.ids().iter().enumerate().filter(|(_, &id)| id != 0) {
        let (d, j) = pixel_dir(dir, derivs, i);
        lookups.push(cubemap_lookup(d, j).ok_or(Error::ZeroVector { index: i })?);
        pixels.push(i as u32);
    }
    TexSampleRequest::sparse(grid.width(), grid.height(), pixels, lookups)
}

/// Accumulates the backward of [`cubemap_address`] into attribute value and
/// derivative gradients shaped like `dir`. `dst` and `djst` are aligned with
/// the lookups of `req`.
pub fn cubemap_address_backward<T: Real>(
    req: &TexSampleRequest<T>,
    dir: &AttrImage<T>,
    dst: &[[T; 2]],
    djst: &[[T; 4]],
    dvalues: &mut crate::ImageGrid<T>,
    dderivs: Option<&mut crate::ImageGrid<T>>,
) -> Result<()> {
    let derivs = split_dir(dir)?;
    let n = req.len();
    if dst.len() != n || djst.len() != n {
        return Err(Error::shape("lookup gradient", n, dst.len().min(djst.len())));
    }
    let mut dd = dderivs;
    for (k, &p) in req.pixels().iter().enumerate() {
        let i = p as usize;
        let (d, j) = pixel_dir(dir, derivs, i);
        let (gd, gj) = cubemap_lookup_backward(d, j, dst[k], djst[k]);
        let out = dvalues.pixel_mut(i);
        for c in 0..3 {
            out[c] += gd[c];
        }
        if let (Some(dd), true) = (dd.as_deref_mut(), derivs.is_some()) {
            let out = dd.pixel_mut(i);
            for c in 0..6 {
                out[c] += gj[c];
            }
        }
    }
    Ok(())
}
