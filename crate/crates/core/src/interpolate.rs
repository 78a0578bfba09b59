//! Barycentric interpolation of vertex attributes.
//!
//! `A = u A_i0 + v A_i1 + (1 - u - v) A_i2` for the triangle covering each
//! pixel. Channels listed in `diff_channels` also get screen-space
//! derivatives `dA/dx = du/dx (A_i0 - A_i2) + dv/dx (A_i1 - A_i2)` (and the
//! same for `y`), stored as interleaved `(d/dx, d/dy)` pairs in list order.

use crate::buffers::{AttributeSet, GradBuffer, ImageGrid, IndexBuffer};
use crate::raster::RasterGrid;
use crate::{par, Error, Real, Result};

/// Interpolated attributes and optional derivative planes.
#[derive(Debug, Clone, PartialEq)]
pub struct AttrImage<T> {
    pub values: ImageGrid<T>,
    pub derivs: Option<ImageGrid<T>>,
    pub diff_channels: Vec<usize>,
}

/// Gradients produced by [`interpolate_backward`].
#[derive(Debug, Clone, PartialEq)]
pub struct InterpolateGrad<T> {
    pub attrs: GradBuffer<T>,
    pub duv: Vec<[T; 2]>,
    pub djuv: Vec<[T; 4]>,
}

fn check_inputs<T: Real>(
    attrs: &AttributeSet<T>,
    idx: &IndexBuffer,
    grid: &RasterGrid<T>,
    diff_channels: &[usize],
) -> Result<()> {
    idx.validate_range(attrs.len())?;
    if let Some(max_id) = grid.ids().iter().copied().max() {
        if max_id as usize > idx.len() {
            return Err(Error::shape("attribute triangles", max_id as usize, idx.len()));
        }
    }
    if let Some(&channel) = diff_channels.iter().find(|&&c| c >= attrs.channels()) {
        return Err(Error::ChannelOutOfRange {
            channel,
            channels: attrs.channels(),
        });
    }
    Ok(())
}

pub fn interpolate_forward<T: Real>(
    attrs: &AttributeSet<T>,
    idx: &IndexBuffer,
    grid: &RasterGrid<T>,
    diff_channels: &[usize],
) -> Result<AttrImage<T>> {
    check_inputs(attrs, idx, grid, diff_channels)?;
    let (w, h) = (grid.width(), grid.height());
    let k = attrs.channels();
    let nd = diff_channels.len();
    let tris = idx.triangles();

    let mut values = ImageGrid::zeros(w, h, k);
    par::for_each_row(values.data_mut(), k, |i, out| {
        if let Some(t) = grid.triangle(i) {
            let tri = tris[t];
            let [u, v] = grid.uv()[i];
            let r = T::one() - u - v;
            let (a0, a1, a2) = (
                attrs.row(tri[0] as usize),
                attrs.row(tri[1] as usize),
                attrs.row(tri[2] as usize),
            );
            for c in 0..k {
                out[c] = u * a0[c] + v * a1[c] + r * a2[c];
            }
        }
    });

    let derivs = (nd > 0).then(|| {
        let mut d = ImageGrid::zeros(w, h, 2 * nd);
        par::for_each_row(d.data_mut(), 2 * nd, |i, out| {
            if let Some(t) = grid.triangle(i) {
                let tri = tris[t];
                let j = grid.juv()[i];
                let (a0, a1, a2) = (
                    attrs.row(tri[0] as usize),
                    attrs.row(tri[1] as usize),
                    attrs.row(tri[2] as usize),
                );
                for (slot, &c) in diff_channels.iter().enumerate() {
                    let du = a0[c] - a2[c];
                    let dv = a1[c] - a2[c];
                    out[2 * slot] = j[0] * du + j[2] * dv;
                    out[2 * slot + 1] = j[1] * du + j[3] * dv;
                }
            }
        });
        d
    });

    Ok(AttrImage {
        values,
        derivs,
        diff_channels: diff_channels.to_vec(),
    })
}

/// Backpropagates gradients on interpolated values (`dl_da`, `K` channels)
/// and on their derivatives (`dl_dja`, `2 * diff_channels.len()` channels).
pub fn interpolate_backward<T: Real>(
    attrs: &AttributeSet<T>,
    idx: &IndexBuffer,
    grid: &RasterGrid<T>,
    dl_da: &ImageGrid<T>,
    dl_dja: Option<&ImageGrid<T>>,
    diff_channels: &[usize],
) -> Result<InterpolateGrad<T>> {
    check_inputs(attrs, idx, grid, diff_channels)?;
    let (w, h) = (grid.width(), grid.height());
    let k = attrs.channels();
    let nd = diff_channels.len();
    dl_da.check_dims("dL/dA", w, h)?;
    if dl_da.channels() != k {
        return Err(Error::shape("dL/dA channels", k, dl_da.channels()));
    }
    if let Some(g) = dl_dja {
        g.check_dims("dL/dJ_A", w, h)?;
        if g.channels() != 2 * nd {
            return Err(Error::shape("dL/dJ_A channels", 2 * nd, g.channels()));
        }
    }
    let tris = idx.triangles();
    let zero = T::zero();

    struct Pixel<T> {
        tri: [u32; 3],
        duv: [T; 2],
        djuv: [T; 4],
        // Gradient on the three vertex rows, k values each.
        ga: Vec<T>,
    }

    let per_pixel = par::map_indexed(grid.pixel_count(), |i| {
        let t = grid.triangle(i)?;
        let tri = tris[t];
        let [u, v] = grid.uv()[i];
        let r = T::one() - u - v;
        let (a0, a1, a2) = (
            attrs.row(tri[0] as usize),
            attrs.row(tri[1] as usize),
            attrs.row(tri[2] as usize),
        );
        let g = dl_da.pixel(i);
        let mut ga = vec![zero; 3 * k];
        let (mut gu, mut gv) = (zero, zero);
        for c in 0..k {
            ga[c] = u * g[c];
            ga[k + c] = v * g[c];
            ga[2 * k + c] = r * g[c];
            gu += (a0[c] - a2[c]) * g[c];
            gv += (a1[c] - a2[c]) * g[c];
        }
        let mut gj = [zero; 4];
        if let Some(gd) = dl_dja {
            let j = grid.juv()[i];
            let gd = gd.pixel(i);
            for (slot, &c) in diff_channels.iter().enumerate() {
                let (gx, gy) = (gd[2 * slot], gd[2 * slot + 1]);
                let du = a0[c] - a2[c];
                let dv = a1[c] - a2[c];
                gj[0] += gx * du;
                gj[2] += gx * dv;
                gj[1] += gy * du;
                gj[3] += gy * dv;
                let gdu = gx * j[0] + gy * j[1];
                let gdv = gx * j[2] + gy * j[3];
                ga[c] += gdu;
                ga[k + c] += gdv;
                ga[2 * k + c] -= gdu + gdv;
            }
        }
        Some(Pixel {
            tri,
            duv: [gu, gv],
            djuv: gj,
            ga,
        })
    });

    let mut out = InterpolateGrad {
        attrs: GradBuffer::zeros(attrs.len(), k),
        duv: vec![[zero; 2]; grid.pixel_count()],
        djuv: vec![[zero; 4]; grid.pixel_count()],
    };
    for (i, p) in per_pixel.into_iter().enumerate() {
        if let Some(p) = p {
            out.duv[i] = p.duv;
            out.djuv[i] = p.djuv;
            for s in 0..3 {
                out.attrs
                    .accumulate(p.tri[s] as usize, &p.ga[s * k..(s + 1) * k]);
            }
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::buffers::ClipVertexBuffer;
    use crate::raster::{rasterize_forward, Viewport};

    fn scene() -> (ClipVertexBuffer<f64>, IndexBuffer, RasterGrid<f64>) {
        let verts = ClipVertexBuffer::new(vec![
            [-0.9, -0.8, 0.1, 1.0],
            [0.8, -0.7, 0.2, 1.3],
            [0.1, 0.9, 0.0, 0.8],
        ])
        .unwrap();
        let idx = IndexBuffer::new(vec![[0, 1, 2]]);
        let grid = rasterize_forward(&verts, &idx, Viewport::new(8, 8).unwrap()).unwrap();
        (verts, idx, grid)
    }

    #[test]
    fn constant_attribute_has_zero_derivative() {
        let (_, idx, grid) = scene();
        let attrs = AttributeSet::from_rows(&[[3.5], [3.5], [3.5]]).unwrap();
        let img = interpolate_forward(&attrs, &idx, &grid, &[0]).unwrap();
        let d = img.derivs.unwrap();
        for i in 0..grid.pixel_count() {
            if grid.ids()[i] != 0 {
                assert!((img.values.pixel(i)[0] - 3.5).abs() < 1e-12);
                assert!(d.pixel(i).iter().all(|v| v.abs() < 1e-9));
            } else {
                assert_eq!(img.values.pixel(i)[0], 0.0);
            }
        }
    }

    #[test]
    fn partition_of_unity() {
        let (_, idx, grid) = scene();
        let attrs = AttributeSet::from_rows(&[[1.0], [1.0], [1.0]]).unwrap();
        let img = interpolate_forward(&attrs, &idx, &grid, &[]).unwrap();
        assert!(img.derivs.is_none());
        for i in 0..grid.pixel_count() {
            if grid.ids()[i] != 0 {
                let v = img.values.pixel(i)[0];
                assert!((v - 1.0).abs() <= 4.0 * f64::EPSILON, "{v}");
            }
        }
    }

    #[test]
    fn eq4_single_pixel() {
        let (_, idx, grid) = scene();
        let attrs = AttributeSet::from_rows(&[[2.0], [5.0], [1.0]]).unwrap();
        let i = (0..grid.pixel_count()).find(|&i| grid.ids()[i] != 0).unwrap();
        let mut g = ImageGrid::zeros(8, 8, 1);
        g.pixel_mut(i)[0] = 1.0;
        let out = interpolate_backward(&attrs, &idx, &grid, &g, None, &[]).unwrap();
        assert_eq!(out.duv[i], [1.0, 4.0]);
        let [u, v] = grid.uv()[i];
        assert_eq!(out.attrs.as_slice(), &[u, v, 1.0 - u - v]);
    }

    #[test]
    fn zero_gradients_give_zero() {
        let (_, idx, grid) = scene();
        let attrs = AttributeSet::from_rows(&[[2.0, 1.0], [5.0, 0.0], [1.0, 3.0]]).unwrap();
        let out = interpolate_backward(
            &attrs,
            &idx,
            &grid,
            &ImageGrid::zeros(8, 8, 2),
            Some(&ImageGrid::zeros(8, 8, 2)),
            &[1],
        )
        .unwrap();
        assert!(out.attrs.is_zero());
        assert!(out.duv.iter().all(|g| g == &[0.0; 2]));
        assert!(out.djuv.iter().all(|g| g == &[0.0; 4]));
    }

    #[test]
    fn attribute_index_buffer_validated() {
        let (_, _, grid) = scene();
        let attrs = AttributeSet::from_rows(&[[1.0], [1.0]]).unwrap();
        let idx = IndexBuffer::new(vec![[0, 1, 2]]);
        assert_eq!(
            interpolate_forward(&attrs, &idx, &grid, &[]).unwrap_err(),
            Error::IndexOutOfRange { tri: 0, slot: 2 }
        );
    }

    #[test]
    fn flat_attribute_indices_allowed() {
        let (_, _, grid) = scene();
        let attrs = AttributeSet::from_rows(&[[0.25]]).unwrap();
        let idx = IndexBuffer::new(vec![[0, 0, 0]]);
        let img = interpolate_forward(&attrs, &idx, &grid, &[0]).unwrap();
        let i = (0..grid.pixel_count()).find(|&i| grid.ids()[i] != 0).unwrap();
        assert!((img.values.pixel(i)[0] - 0.25).abs() < 1e-12);
    }

    #[test]
    fn gradient_shape_checked() {
        let (_, idx, grid) = scene();
        let attrs = AttributeSet::from_rows(&[[1.0], [1.0], [1.0]]).unwrap();
        let bad = ImageGrid::zeros(8, 8, 2);
        assert!(matches!(
            interpolate_backward(&attrs, &idx, &grid, &bad, None, &[]),
            Err(Error::ShapeMismatch { .. })
        ));
    }
}
