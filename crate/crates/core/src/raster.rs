//! Rasterization of clip-space triangles into a per-pixel sample grid.
//!
//! Each covered pixel stores the 1-based ID of the nearest triangle, the
//! perspective-correct barycentrics `(u, v)` of the pixel center relative to
//! the original (unclipped) triangle, the NDC depth `z_c / w_c` and the
//! Jacobian `d(u, v) / d(x, y)` in units of 1/pixel.
//!
//! Barycentrics are evaluated in homogeneous form. With `a_i = (x_i, y_i,
//! w_i)` and the NDC pixel center `q = (n_x, n_y, 1)`, the edge functions are
//! `e_i = q . (a_j x a_k)` and `b_i = e_i / sum(e)`. This is the screen-space
//! edge function divided by `w` and renormalized, but stays valid when some
//! vertices lie behind the camera. A pixel is covered when every `e_i` has
//! the sign of `det(a_0, a_1, a_2)`, which also rejects intersections behind
//! the eye, and the surface point lies inside the near and far planes.

use crate::buffers::{validate_geometry, ClipVertexBuffer, GradBuffer, IndexBuffer};
use crate::clip::{clip_triangle, ndc_area, W_EPSILON};
use crate::{par, Error, Real, Result};

/// Clipped polygons with an NDC area below this are skipped.
pub const DEGENERATE_AREA: f64 = 1e-12;

const TILE: usize = 8;
/// Slack subtracted from a triangle's minimum depth before tile culling.
const CULL_SLACK: f64 = 1e-4;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Viewport {
    pub width: usize,
    pub height: usize,
}

impl Viewport {
    pub fn new(width: usize, height: usize) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::EmptyViewport);
        }
        Ok(Self { width, height })
    }

    pub fn pixel_count(&self) -> usize {
        self.width * self.height
    }

    /// NDC coordinates of the center of pixel `(px, py)`.
    #[inline]
    pub fn pixel_ndc<T: Real>(&self, px: usize, py: usize) -> (T, T) {
        let two = T::lit(2.0);
        let nx = two * (T::lit(px as f64) + T::lit(0.5)) / T::lit(self.width as f64) - T::one();
        let ny = T::one() - two * (T::lit(py as f64) + T::lit(0.5)) / T::lit(self.height as f64);
        (nx, ny)
    }

    /// Screen position of an NDC point.
    #[inline]
    pub fn ndc_to_screen<T: Real>(&self, nx: T, ny: T) -> (T, T) {
        let half = T::lit(0.5);
        (
            T::lit(self.width as f64) * (nx + T::one()) * half,
            T::lit(self.height as f64) * (T::one() - ny) * half,
        )
    }

    /// Derivatives `(d n_x / d x, d n_y / d y)` of NDC w.r.t. screen.
    #[inline]
    pub fn ndc_per_pixel<T: Real>(&self) -> (T, T) {
        (
            T::lit(2.0 / self.width as f64),
            T::lit(-2.0 / self.height as f64),
        )
    }
}

/// Output of [`rasterize_forward`].
#[derive(Debug, Clone, PartialEq)]
pub struct RasterGrid<T> {
    viewport: Viewport,
    ids: Vec<u32>,
    uv: Vec<[T; 2]>,
    zw: Vec<T>,
    juv: Vec<[T; 4]>,
}

impl<T: Real> RasterGrid<T> {
    pub fn blank(viewport: Viewport) -> Self {
        let n = viewport.pixel_count();
        Self {
            viewport,
            ids: vec![0; n],
            uv: vec![[T::zero(); 2]; n],
            zw: vec![T::one(); n],
            juv: vec![[T::zero(); 4]; n],
        }
    }

    pub fn viewport(&self) -> Viewport {
        self.viewport
    }

    pub fn width(&self) -> usize {
        self.viewport.width
    }

    pub fn height(&self) -> usize {
        self.viewport.height
    }

    pub fn pixel_count(&self) -> usize {
        self.ids.len()
    }

    /// 1-based triangle IDs; 0 marks a blank pixel.
    pub fn ids(&self) -> &[u32] {
        &self.ids
    }

    pub fn uv(&self) -> &[[T; 2]] {
        &self.uv
    }

    pub fn zw(&self) -> &[T] {
        &self.zw
    }

    /// Per-pixel `[du/dx, du/dy, dv/dx, dv/dy]`.
    pub fn juv(&self) -> &[[T; 4]] {
        &self.juv
    }

    /// 0-based triangle index covering pixel `i`, if any.
    #[inline]
    pub fn triangle(&self, i: usize) -> Option<usize> {
        match self.ids[i] {
            0 => None,
            id => Some(id as usize - 1),
        }
    }

    pub fn covered_count(&self) -> usize {
        self.ids.iter().filter(|&&id| id != 0).count()
    }
}

#[inline]
fn cross<T: Real>(a: [T; 3], b: [T; 3]) -> [T; 3] {
    [
        a[1] * b[2] - a[2] * b[1],
        a[2] * b[0] - a[0] * b[2],
        a[0] * b[1] - a[1] * b[0],
    ]
}

#[inline]
fn dot<T: Real>(a: [T; 3], b: [T; 3]) -> T {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

#[inline]
fn xyw<T: Real>(p: &[T; 4]) -> [T; 3] {
    [p[0], p[1], p[3]]
}

/// Homogeneous edge-function setup of one triangle.
#[derive(Debug, Clone, Copy)]
struct Setup<T> {
    a: [[T; 3]; 3],
    z: [T; 3],
    n: [[T; 3]; 3],
    sum_n: [T; 3],
    sign: T,
}

impl<T: Real> Setup<T> {
    fn new(p: &[[T; 4]; 3]) -> Self {
        let a = [xyw(&p[0]), xyw(&p[1]), xyw(&p[2])];
        let n = [cross(a[1], a[2]), cross(a[2], a[0]), cross(a[0], a[1])];
        let sum_n = [
            n[0][0] + n[1][0] + n[2][0],
            n[0][1] + n[1][1] + n[2][1],
            n[0][2] + n[1][2] + n[2][2],
        ];
        let det = dot(a[0], n[0]);
        let sign = if det >= T::zero() { T::one() } else { -T::one() };
        Self {
            a,
            z: [p[0][2], p[1][2], p[2][2]],
            n,
            sum_n,
            sign,
        }
    }

    /// Top-left tie rule for a pixel that lies exactly on edge `i`.
    #[inline]
    fn owns_edge(&self, i: usize) -> bool {
        // Inward gradient in screen space; screen y runs opposite to NDC y.
        let gx = self.sign * self.n[i][0];
        let gy = -self.sign * self.n[i][1];
        gx > T::zero() || (gx == T::zero() && gy > T::zero())
    }

    /// Depth of the covered surface point at `q`, or `None` if not covered.
    #[inline]
    fn cover(&self, q: [T; 3]) -> Option<T> {
        let mut e = [T::zero(); 3];
        for i in 0..3 {
            let ei = self.sign * dot(self.n[i], q);
            if ei < T::zero() || (ei == T::zero() && !self.owns_edge(i)) {
                return None;
            }
            e[i] = ei;
        }
        let s = e[0] + e[1] + e[2];
        if s <= T::zero() {
            return None;
        }
        let b = [e[0] / s, e[1] / s, e[2] / s];
        let w = b[0] * self.a[0][2] + b[1] * self.a[1][2] + b[2] * self.a[2][2];
        if w < T::lit(W_EPSILON) {
            return None;
        }
        let z = b[0] * self.z[0] + b[1] * self.z[1] + b[2] * self.z[2];
        if z < -w || z > w {
            return None;
        }
        Some(z / w)
    }

    /// Barycentrics and their screen-space Jacobian at `q`.
    fn bary(&self, q: [T; 3], vp: &Viewport) -> ([T; 2], [T; 4]) {
        let e0 = dot(self.n[0], q);
        let e1 = dot(self.n[1], q);
        let s = dot(self.sum_n, q);
        let b0 = e0 / s;
        let b1 = e1 / s;
        let (sx, sy) = vp.ndc_per_pixel::<T>();
        let d = |n: &[T; 3], b: T, c: usize| (n[c] - b * self.sum_n[c]) / s;
        (
            [b0, b1],
            [
                d(&self.n[0], b0, 0) * sx,
                d(&self.n[0], b0, 1) * sy,
                d(&self.n[1], b1, 0) * sx,
                d(&self.n[1], b1, 1) * sy,
            ],
        )
    }

    /// Vector-Jacobian product of `(u, v, J_uv)` w.r.t. `(x, y, w)` of the
    /// three vertices.
    fn bary_vjp(&self, q: [T; 3], vp: &Viewport, gu: T, gv: T, gj: [T; 4]) -> [[T; 3]; 3] {
        let zero = T::zero();
        let e = [dot(self.n[0], q), dot(self.n[1], q)];
        let s = dot(self.sum_n, q);
        let b = [e[0] / s, e[1] / s];
        let (sx, sy) = vp.ndc_per_pixel::<T>();

        let mut gn = [[zero; 3]; 3];
        let mut gsum_n = [zero; 3];
        let mut gb = [gu, gv];
        let mut gs = zero;

        let gd = [[gj[0] * sx, gj[1] * sy], [gj[2] * sx, gj[3] * sy]];
        for i in 0..2 {
            for c in 0..2 {
                let g = gd[i][c];
                if g == zero {
                    continue;
                }
                let d = (self.n[i][c] - b[i] * self.sum_n[c]) / s;
                gn[i][c] += g / s;
                gb[i] -= g * self.sum_n[c] / s;
                gsum_n[c] -= g * b[i] / s;
                gs -= g * d / s;
            }
        }
        for i in 0..2 {
            let ge = gb[i] / s;
            gs -= gb[i] * b[i] / s;
            for c in 0..3 {
                gn[i][c] += ge * q[c];
            }
        }
        for c in 0..3 {
            gsum_n[c] += gs * q[c];
        }
        for g in gn.iter_mut() {
            for c in 0..3 {
                g[c] += gsum_n[c];
            }
        }

        let a = &self.a;
        let mut ga = [[zero; 3]; 3];
        let add = |dst: &mut [T; 3], v: [T; 3]| {
            for c in 0..3 {
                dst[c] += v[c];
            }
        };
        add(&mut ga[1], cross(a[2], gn[0]));
        add(&mut ga[2], cross(gn[0], a[1]));
        add(&mut ga[2], cross(a[0], gn[1]));
        add(&mut ga[0], cross(gn[1], a[2]));
        add(&mut ga[0], cross(a[1], gn[2]));
        add(&mut ga[1], cross(gn[2], a[0]));
        ga
    }
}

struct Prepared<T> {
    tri: usize,
    setup: Setup<T>,
    zmin: T,
    x0: usize,
    x1: usize,
    y0: usize,
    y1: usize,
}

fn prepare<T: Real>(
    positions: &[[T; 4]],
    tri_index: usize,
    tri: &[u32; 3],
    vp: &Viewport,
) -> Option<Prepared<T>> {
    let p = [
        positions[tri[0] as usize],
        positions[tri[1] as usize],
        positions[tri[2] as usize],
    ];
    let poly = clip_triangle(&p);
    if poly.is_empty() || ndc_area(&poly).abs() < T::lit(DEGENERATE_AREA) {
        return None;
    }
    let setup = Setup::new(&p);
    let (mut xmin, mut xmax) = (T::infinity(), T::neg_infinity());
    let (mut ymin, mut ymax) = (T::infinity(), T::neg_infinity());
    let mut zmin = T::infinity();
    for v in &poly {
        let (sx, sy) = vp.ndc_to_screen(v[0] / v[3], v[1] / v[3]);
        xmin = xmin.min(sx);
        xmax = xmax.max(sx);
        ymin = ymin.min(sy);
        ymax = ymax.max(sy);
        zmin = zmin.min(v[2] / v[3]);
    }
    // Pixel centers sit at +0.5; one pixel of slack absorbs rounding.
    let lo = |v: T, n: usize| -> usize {
        let f = (v - T::lit(1.5)).ceil().as_f64();
        f.clamp(0.0, (n - 1) as f64) as usize
    };
    let hi = |v: T, n: usize| -> usize {
        let f = (v + T::lit(0.5)).floor().as_f64();
        f.clamp(0.0, (n - 1) as f64) as usize
    };
    Some(Prepared {
        tri: tri_index,
        setup,
        zmin: zmin - T::lit(CULL_SLACK),
        x0: lo(xmin, vp.width),
        x1: hi(xmax, vp.width),
        y0: lo(ymin, vp.height),
        y1: hi(ymax, vp.height),
    })
}

#[inline]
fn pixel_q<T: Real>(vp: &Viewport, px: usize, py: usize) -> [T; 3] {
    let (nx, ny) = vp.pixel_ndc::<T>(px, py);
    [nx, ny, T::one()]
}

/// Rasterizes `idx` triangles of `verts` into a [`RasterGrid`].
///
/// The nearest covering triangle wins each pixel; equal depths go to the
/// lower triangle ID. Shared edges follow the top-left rule.
pub fn rasterize_forward<T: Real>(
    verts: &ClipVertexBuffer<T>,
    idx: &IndexBuffer,
    vp: Viewport,
) -> Result<RasterGrid<T>> {
    if vp.width == 0 || vp.height == 0 {
        return Err(Error::EmptyViewport);
    }
    validate_geometry(verts, idx)?;
    let positions = verts.positions();

    let mut prepared: Vec<Prepared<T>> = idx
        .triangles()
        .iter()
        .enumerate()
        .filter_map(|(t, tri)| prepare(positions, t, tri, &vp))
        .collect();
    // Front-to-back order lets tile culling skip hidden triangles early.
    // The winner per pixel is the minimum of (depth, id), so order does not
    // affect the result.
    prepared.sort_by(|a, b| a.zmin.partial_cmp(&b.zmin).unwrap().then(a.tri.cmp(&b.tri)));

    let width = vp.width;
    let band_rows = TILE;
    let tiles_x = width.div_ceil(TILE);
    let mut best_tri = vec![u32::MAX; vp.pixel_count()];
    let mut best_z = vec![T::infinity(); vp.pixel_count()];

    let band_count = vp.height.div_ceil(band_rows);
    let mut binned: Vec<Vec<u32>> = vec![Vec::new(); band_count];
    for (k, p) in prepared.iter().enumerate() {
        for band in &mut binned[p.y0 / band_rows..=p.y1 / band_rows] {
            band.push(k as u32);
        }
    }

    {
        let mut bands: Vec<(&mut [u32], &mut [T])> = best_tri
            .chunks_mut(band_rows * width)
            .zip(best_z.chunks_mut(band_rows * width))
            .collect();
        use rayon::prelude::*;
        bands.par_iter_mut().enumerate().for_each(|(band, (tris, zs))| {
            let y_start = band * band_rows;
            let rows = zs.len() / width;
            let y_end = y_start + rows - 1;
            let mut tile_max = vec![T::infinity(); tiles_x];
            for p in binned[band].iter().map(|&k| &prepared[k as usize]) {
                let ty0 = p.y0.max(y_start);
                let ty1 = p.y1.min(y_end);
                for tx in (p.x0 / TILE)..=(p.x1 / TILE) {
                    if p.zmin > tile_max[tx] {
                        continue;
                    }
                    let x_lo = p.x0.max(tx * TILE);
                    let x_hi = p.x1.min(tx * TILE + TILE - 1);
                    let mut changed = false;
                    for py in ty0..=ty1 {
                        let row = (py - y_start) * width;
                        for px in x_lo..=x_hi {
                            let i = row + px;
                            // zmin is a lower bound, so this can only reject losers.
                            if p.zmin > zs[i] {
                                continue;
                            }
                            if let Some(z) = p.setup.cover(pixel_q(&vp, px, py)) {
                                let id = p.tri as u32;
                                if z < zs[i] || (z == zs[i] && id < tris[i]) {
                                    zs[i] = z;
                                    tris[i] = id;
                                    changed = true;
                                }
                            }
                        }
                    }
                    if !changed {
                        continue;
                    }
                    let tx_end = (tx * TILE + TILE).min(width);
                    let mut m = T::neg_infinity();
                    for r in 0..rows {
                        for &z in &zs[r * width + tx * TILE..r * width + tx_end] {
                            m = m.max(z);
                        }
                    }
                    tile_max[tx] = m;
                }
            }
        });
    }

    let mut setups: Vec<Option<Setup<T>>> = vec![None; idx.len()];
    for p in &prepared {
        setups[p.tri] = Some(p.setup);
    }

    let mut grid = RasterGrid::blank(vp);
    let results = par::map_indexed(vp.pixel_count(), |i| {
        let t = best_tri[i];
        if t == u32::MAX {
            return None;
        }
        let setup = setups[t as usize].as_ref().expect("winning triangle has a setup");
        let (uv, j) = setup.bary(pixel_q(&vp, i % width, i / width), &vp);
        Some((t + 1, uv, best_z[i], j))
    });
    for (i, r) in results.into_iter().enumerate() {
        if let Some((id, uv, z, j)) = r {
            grid.ids[i] = id;
            grid.uv[i] = uv;
            grid.zw[i] = z;
            grid.juv[i] = j;
        }
    }
    Ok(grid)
}

/// Backpropagates per-pixel gradients on `(u, v)` and optionally on `J_uv`
/// to clip-space vertex positions.
///
/// The `z_c` column of the result is always zero: barycentrics do not depend
/// on it and depth carries no gradient.
pub fn rasterize_backward<T: Real>(
    verts: &ClipVertexBuffer<T>,
    idx: &IndexBuffer,
    grid: &RasterGrid<T>,
    dl_duv: &[[T; 2]],
    dl_djuv: Option<&[[T; 4]]>,
) -> Result<GradBuffer<T>> {
    let n = grid.pixel_count();
    if dl_duv.len() != n {
        return Err(Error::shape("dL/d(u,v) pixels", n, dl_duv.len()));
    }
    if let Some(dj) = dl_djuv {
        if dj.len() != n {
            return Err(Error::shape("dL/dJ_uv pixels", n, dj.len()));
        }
    }
    let vp = grid.viewport();
    let positions = verts.positions();
    let tris = idx.triangles();
    let zero = T::zero();

    let contributions = par::map_indexed(n, |i| {
        let t = grid.triangle(i)?;
        let gj = dl_djuv.map_or([zero; 4], |d| d[i]);
        let [gu, gv] = dl_duv[i];
        if gu == zero && gv == zero && gj.iter().all(|&g| g == zero) {
            return None;
        }
        let tri = tris[t];
        let setup = Setup::new(&[
            positions[tri[0] as usize],
            positions[tri[1] as usize],
            positions[tri[2] as usize],
        ]);
        let q = pixel_q(&vp, i % vp.width, i / vp.width);
        Some((tri, setup.bary_vjp(q, &vp, gu, gv, gj)))
    });

    let mut grad = GradBuffer::zeros(verts.len(), 4);
    for (tri, ga) in contributions.into_iter().flatten() {
        for k in 0..3 {
            grad.accumulate(tri[k] as usize, &[ga[k][0], ga[k][1], zero, ga[k][2]]);
        }
    }
    Ok(grad)
}
