//! Analytic post-shading edge antialiasing.
//!
//! Every horizontal and vertical neighbor pair with differing triangle IDs
//! is examined. The triangle nearer to the camera is fetched and each of its
//! silhouette edges is intersected with the segment joining the two pixel
//! centers; horizontal pairs only look at mostly vertical edges and vertical
//! pairs at the rest. A crossing at parameter `t` along the segment blends
//! the color of one pixel into the other with weight `|t - 1/2|`: zero at the
//! midpoint and one half at a pixel center. The pixel on whose half the
//! crossing lies receives the blend. Pixel colors are thereby continuous in
//! the edge endpoints, which gives visibility gradients.
//!
//! Edge lines are computed in homogeneous screen coordinates, so the forward
//! and backward passes need no perspective division of the edge endpoints.

use crate::buffers::{ClipVertexBuffer, EdgeAdjacency, GradBuffer, ImageGrid, IndexBuffer};
use crate::clip::clip_segment_near;
use crate::raster::{RasterGrid, Viewport};
use crate::{par, Error, Real, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Axis {
    /// Pair `(x, y)`, `(x + 1, y)`.
    Horizontal,
    /// Pair `(x, y)`, `(x, y + 1)`.
    Vertical,
}

/// One antialiased pixel pair.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AaEvent<T> {
    pub axis: Axis,
    /// Left or top pixel.
    pub pixel_a: usize,
    /// Right or bottom pixel.
    pub pixel_b: usize,
    /// 1-based ID of the nearer triangle.
    pub triangle: u32,
    /// Silhouette edge endpoints (position vertex indices).
    pub edge: [u32; 2],
    /// Crossing position along the segment from A's center to B's.
    pub t: T,
    pub alpha: T,
    /// `true` when B receives A's color, `false` for the reverse.
    pub into_b: bool,
}

impl<T> AaEvent<T> {
    /// `(receiving pixel, source pixel)`.
    pub fn target_source(&self) -> (usize, usize) {
        if self.into_b {
            (self.pixel_b, self.pixel_a)
        } else {
            (self.pixel_a, self.pixel_b)
        }
    }
}

/// Events of one forward call in canonical order, plus the pre-blend color
/// differences `source - target` needed by the backward pass.
#[derive(Debug, Clone, PartialEq)]
pub struct AaEventLog<T> {
    pub width: usize,
    pub height: usize,
    pub channels: usize,
    pub vertex_count: usize,
    pub events: Vec<AaEvent<T>>,
    deltas: Vec<T>,
}

impl<T: Real> AaEventLog<T> {
    pub fn delta(&self, event: usize) -> &[T] {
        &self.deltas[event * self.channels..(event + 1) * self.channels]
    }

    pub fn len(&self) -> usize {
        self.events.len()
    }

    pub fn is_empty(&self) -> bool {
        self.events.is_empty()
    }
}

/// Homogeneous screen position `(x w, y w, w)` of a clip-space vertex.
#[inline]
fn screen_h<T: Real>(p: &[T; 4], vp: &Viewport) -> [T; 3] {
    let half = T::lit(0.5);
    [
        T::lit(vp.width as f64) * (p[0] + p[3]) * half,
        T::lit(vp.height as f64) * (p[3] - p[1]) * half,
        p[3],
    ]
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
fn det3<T: Real>(a: [T; 3], b: [T; 3], c: [T; 3]) -> T {
    let n = cross(b, c);
    a[0] * n[0] + a[1] * n[1] + a[2] * n[2]
}

#[inline]
fn xyw<T: Real>(p: &[T; 4]) -> [T; 3] {
    [p[0], p[1], p[3]]
}

/// Side of the projected line `p q` on which `r` falls, up to a common
/// positive factor.
#[inline]
fn side<T: Real>(p: &[T; 4], q: &[T; 4], r: &[T; 4]) -> T {
    det3(xyw(p), xyw(q), xyw(r)) * r[3]
}

fn is_silhouette<T: Real>(
    positions: &[[T; 4]],
    tris: &[[u32; 3]],
    adj: &EdgeAdjacency,
    tri: usize,
    edge: usize,
) -> bool {
    let t = tris[tri];
    let (p, q, r) = (t[edge], t[(edge + 1) % 3], t[(edge + 2) % 3]);
    let incident = adj.incident(p, q);
    if incident.len() != 2 {
        return true;
    }
    let other = if incident[0] as usize == tri {
        incident[1]
    } else {
        incident[0]
    } as usize;
    let o = tris[other];
    let Some(&r2) = o.iter().find(|&&v| v != p && v != q) else {
        return true;
    };
    let pp = &positions[p as usize];
    let qq = &positions[q as usize];
    let s1 = side(pp, qq, &positions[r as usize]);
    let s2 = side(pp, qq, &positions[r2 as usize]);
    s1 * s2 >= T::zero()
}

/// Screen-space line `l0 x + l1 y + l2 = 0` through two clip-space points.
#[inline]
fn edge_line<T: Real>(p: &[T; 4], q: &[T; 4], vp: &Viewport) -> ([T; 3], [T; 3], [T; 3]) {
    let sp = screen_h(p, vp);
    let sq = screen_h(q, vp);
    (cross(sp, sq), sp, sq)
}

/// Screen-space extent of the visible part of the edge along `axis`
/// coordinate (0 for x, 1 for y).
fn edge_extent<T: Real>(p: &[T; 4], q: &[T; 4], vp: &Viewport, coord: usize) -> Option<(T, T)> {
    let (a, b) = clip_segment_near(*p, *q)?;
    let (ax, ay) = vp.ndc_to_screen(a[0] / a[3], a[1] / a[3]);
    let (bx, by) = vp.ndc_to_screen(b[0] / b[3], b[1] / b[3]);
    let (u, v) = if coord == 0 { (ax, bx) } else { (ay, by) };
    Some((u.min(v), u.max(v)))
}

struct Candidate<T> {
    edge: [u32; 2],
    t: T,
    alpha: T,
}

#[allow(clippy::too_many_arguments)]
fn detect_pair<T: Real>(
    grid: &RasterGrid<T>,
    positions: &[[T; 4]],
    tris: &[[u32; 3]],
    adj: &EdgeAdjacency,
    axis: Axis,
    a: usize,
    b: usize,
) -> Option<AaEvent<T>> {
    let ids = grid.ids();
    let (ia, ib) = (ids[a], ids[b]);
    if ia == ib {
        return None;
    }
    let winner = match (ia, ib) {
        (0, _) => ib,
        (_, 0) => ia,
        _ => {
            let (za, zb) = (grid.zw()[a], grid.zw()[b]);
            if za < zb || (za == zb && ia < ib) {
                ia
            } else {
                ib
            }
        }
    };
    let vp = grid.viewport();
    let tri = winner as usize - 1;
    let w = vp.width;
    let (ax, ay) = (a % w, a / w);
    // Center of A; the segment runs one pixel along the pair axis.
    let ca = (
        T::lit(ax as f64) + T::lit(0.5),
        T::lit(ay as f64) + T::lit(0.5),
    );

    let mut best: Option<Candidate<T>> = None;
    for e in 0..3 {
        let t3 = tris[tri];
        let (p, q) = (t3[e], t3[(e + 1) % 3]);
        let (pp, qq) = (&positions[p as usize], &positions[q as usize]);
        let (l, _, _) = edge_line(pp, qq, &vp);
        let (crossing, extent_coord, fixed) = match axis {
            Axis::Horizontal => {
                if !(l[0].abs() > l[1].abs()) {
                    continue;
                }
                (-(l[1] * ca.1 + l[2]) / l[0] - ca.0, 1, ca.1)
            }
            Axis::Vertical => {
                if !(l[1].abs() >= l[0].abs()) || l[1] == T::zero() {
                    continue;
                }
                (-(l[0] * ca.0 + l[2]) / l[1] - ca.1, 0, ca.0)
            }
        };
        let t = crossing;
        if !(t >= T::zero() && t <= T::one()) {
            continue;
        }
        match edge_extent(pp, qq, &vp, extent_coord) {
            Some((lo, hi)) if lo <= fixed && fixed <= hi => {}
            _ => continue,
        }
        if !is_silhouette(positions, tris, adj, tri, e) {
            continue;
        }
        let alpha = (t - T::lit(0.5)).abs();
        if best.as_ref().is_none_or(|c| alpha > c.alpha) {
            best = Some(Candidate {
                edge: [p, q],
                t,
                alpha,
            });
        }
    }
    best.map(|c| AaEvent {
        axis,
        pixel_a: a,
        pixel_b: b,
        triangle: winner,
        edge: c.edge,
        t: c.t,
        alpha: c.alpha,
        into_b: c.t >= T::lit(0.5),
    })
}

/// Antialiases shaded `color` using the visibility in `grid`.
///
/// `idx` must be the index buffer that produced `grid` and `adj` its edge
/// adjacency. Blends always read the unblended input colors.
pub fn antialias_forward<T: Real>(
    color: &ImageGrid<T>,
    grid: &RasterGrid<T>,
    verts: &ClipVertexBuffer<T>,
    idx: &IndexBuffer,
    adj: &EdgeAdjacency,
) -> Result<(ImageGrid<T>, AaEventLog<T>)> {
    let (w, h) = (grid.width(), grid.height());
    color.check_dims("antialias color", w, h)?;
    if let Some(&max_id) = grid.ids().iter().max() {
        if max_id as usize > idx.len() {
            return Err(Error::shape("antialias triangles", max_id as usize, idx.len()));
        }
    }
    idx.validate(verts.len())?;
    let positions = verts.positions();
    let tris = idx.triangles();

    let horizontal = par::flat_map_rows(h, |y| {
        (y * w..((y + 1) * w).saturating_sub(1))
            .filter_map(|i| detect_pair(grid, positions, tris, adj, Axis::Horizontal, i, i + 1))
            .collect()
    });
    let vertical = par::flat_map_rows(h.saturating_sub(1), |y| {
        (y * w..(y + 1) * w)
            .filter_map(|i| detect_pair(grid, positions, tris, adj, Axis::Vertical, i, i + w))
            .collect()
    });

    let c = color.channels();
    let mut events = horizontal;
    events.extend(vertical);
    let mut deltas = Vec::with_capacity(events.len() * c);
    let mut out = color.clone();
    for ev in &events {
        let (dst, src) = ev.target_source();
        let (cs, cd) = (color.pixel(src), color.pixel(dst));
        let o = out.pixel_mut(dst);
        for ch in 0..c {
            let d = cs[ch] - cd[ch];
            deltas.push(d);
            o[ch] += ev.alpha * d;
        }
    }
    Ok((
        out,
        AaEventLog {
            width: w,
            height: h,
            channels: c,
            vertex_count: verts.len(),
            events,
            deltas,
        },
    ))
}

/// Gradients produced by [`antialias_backward`].
#[derive(Debug, Clone, PartialEq)]
pub struct AntialiasGrad<T> {
    pub color: ImageGrid<T>,
    pub positions: GradBuffer<T>,
}

pub fn antialias_backward<T: Real>(
    log: &AaEventLog<T>,
    verts: &ClipVertexBuffer<T>,
    dl_daa: &ImageGrid<T>,
) -> Result<AntialiasGrad<T>> {
    if dl_daa.width() != log.width
        || dl_daa.height() != log.height
        || dl_daa.channels() != log.channels
        || verts.len() != log.vertex_count
    {
        return Err(Error::LogMismatch);
    }
    let vp = Viewport::new(log.width, log.height)?;
    let positions = verts.positions();
    let c = log.channels;
    let zero = T::zero();
    let half = T::lit(0.5);
    let (wf, hf) = (T::lit(vp.width as f64), T::lit(vp.height as f64));

    let mut dcolor = dl_daa.clone();
    let mut dpos = GradBuffer::zeros(verts.len(), 4);
    for (k, ev) in log.events.iter().enumerate() {
        let (dst, src) = ev.target_source();
        let g = dl_daa.pixel(dst);
        let delta = log.delta(k);
        let mut galpha = zero;
        for ch in 0..c {
            galpha += g[ch] * delta[ch];
        }
        {
            let gd: Vec<T> = g.to_vec();
            let td = dcolor.pixel_mut(dst);
            for ch in 0..c {
                td[ch] -= ev.alpha * gd[ch];
            }
            let ts = dcolor.pixel_mut(src);
            for ch in 0..c {
                ts[ch] += ev.alpha * gd[ch];
            }
        }
        if galpha == zero {
            continue;
        }
        let gt = if ev.into_b { galpha } else { -galpha };
        let [p, q] = ev.edge;
        let (pp, qq) = (&positions[p as usize], &positions[q as usize]);
        let (l, sp, sq) = edge_line(pp, qq, &vp);
        let w = vp.width;
        let (ax, ay) = (ev.pixel_a % w, ev.pixel_a / w);
        let ca = (
            T::lit(ax as f64) + half,
            T::lit(ay as f64) + half,
        );
        let gl = match ev.axis {
            Axis::Horizontal => {
                let xs = -(l[1] * ca.1 + l[2]) / l[0];
                [-gt * xs / l[0], -gt * ca.1 / l[0], -gt / l[0]]
            }
            Axis::Vertical => {
                let ys = -(l[0] * ca.0 + l[2]) / l[1];
                [-gt * ca.0 / l[1], -gt * ys / l[1], -gt / l[1]]
            }
        };
        let gsp = cross(sq, gl);
        let gsq = cross(gl, sp);
        for (v, gs) in [(p, gsp), (q, gsq)] {
            let gx = gs[0] * wf * half;
            let gy = -gs[1] * hf * half;
            let gw = gs[0] * wf * half + gs[1] * hf * half + gs[2];
            dpos.accumulate(v as usize, &[gx, gy, zero, gw]);
        }
    }
    Ok(AntialiasGrad {
        color: dcolor,
        positions: dpos,
    })
}
