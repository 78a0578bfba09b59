//! Trilinear MIP-mapped texture sampling.
//!
//! A texture is `faces` square grids of `size x size` texels with `channels`
//! values each (one face for 2D textures, six for cube maps). Coarser levels
//! are 2x2 box-filtered averages of the finer level. Sampling picks a
//! fractional level of detail from the texture-space footprint of a pixel
//! and blends bilinear lookups on the two adjacent levels.
//!
//! The backward pass accumulates texel gradients on every touched level;
//! [`flatten_gradients`] transposes the pyramid construction to bring them
//! back to full resolution.

use crate::{par, Error, Real, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum AddressMode {
    #[default]
    Clamp,
    Wrap,
}

/// A texel pyramid. Level `l` holds `faces * (size >> l)^2 * channels`
/// values, face-major, then row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct MipTexture<T> {
    size: usize,
    faces: usize,
    channels: usize,
    address: AddressMode,
    levels: Vec<Vec<T>>,
}

/// Maximum number of MIP levels for a `size x size` texture.
pub fn max_levels(size: usize) -> usize {
    if size.is_power_of_two() {
        size.trailing_zeros() as usize + 1
    } else {
        1
    }
}

fn check_levels(size: usize, levels: usize) -> Result<()> {
    if size == 0 || levels == 0 {
        return Err(Error::InvalidLevelCount { size, levels });
    }
    if levels > 1 && !size.is_power_of_two() {
        return Err(Error::NonPowerOfTwo { size, levels });
    }
    if levels > max_levels(size) {
        return Err(Error::InvalidLevelCount { size, levels });
    }
    Ok(())
}

fn downsample<T: Real>(src: &[T], faces: usize, size: usize, channels: usize) -> Vec<T> {
    let half = size / 2;
    let quarter = T::lit(0.25);
    let mut out = vec![T::zero(); faces * half * half * channels];
    par::for_each_row(&mut out, half * channels, |row, dst| {
        let (f, y) = (row / half, row % half);
        let base = f * size * size;
        for x in 0..half {
            for c in 0..channels {
                let at = |xx: usize, yy: usize| src[(base + yy * size + xx) * channels + c];
                dst[x * channels + c] = (at(2 * x, 2 * y)
                    + at(2 * x + 1, 2 * y)
                    + at(2 * x, 2 * y + 1)
                    + at(2 * x + 1, 2 * y + 1))
                    * quarter;
            }
        }
    });
    out
}

/// Builds a `levels`-deep pyramid from base texels laid out face-major,
/// row-major, channel-interleaved.
pub fn build_pyramid<T: Real>(
    base: Vec<T>,
    size: usize,
    faces: usize,
    channels: usize,
    levels: usize,
) -> Result<MipTexture<T>> {
    check_levels(size, levels)?;
    if faces == 0 || channels == 0 {
        return Err(Error::shape("texture faces/channels", 1, 0));
    }
    let expected = faces * size * size * channels;
    if base.len() != expected {
        return Err(Error::shape("texture base texels", expected, base.len()));
    }
    let mut pyramid = vec![base];
    for l in 1..levels {
        let next = downsample(&pyramid[l - 1], faces, size >> (l - 1), channels);
        pyramid.push(next);
    }
    Ok(MipTexture {
        size,
        faces,
        channels,
        address: AddressMode::Clamp,
        levels: pyramid,
    })
}

impl<T: Real> MipTexture<T> {
    pub fn with_address_mode(mut self, address: AddressMode) -> Self {
        self.address = address;
        self
    }

    pub fn size(&self) -> usize {
        self.size
    }

    pub fn faces(&self) -> usize {
        self.faces
    }

    pub fn channels(&self) -> usize {
        self.channels
    }

    pub fn level_count(&self) -> usize {
        self.levels.len()
    }

    pub fn address_mode(&self) -> AddressMode {
        self.address
    }

    pub fn level(&self, l: usize) -> &[T] {
        &self.levels[l]
    }

    pub fn levels(&self) -> &[Vec<T>] {
        &self.levels
    }

    pub fn level_size(&self, l: usize) -> usize {
        self.size >> l
    }

    pub fn base(&self) -> &[T] {
        &self.levels[0]
    }

    pub fn texel(&self, level: usize, face: usize, x: usize, y: usize) -> &[T] {
        let s = self.level_size(level);
        let i = ((face * s + y) * s + x) * self.channels;
        &self.levels[level][i..i + self.channels]
    }
}

/// Per-pixel lookup: face index, texture coordinates in `[0, 1]^2` and
/// `J_st = [ds/dx, ds/dy, dt/dx, dt/dy]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TexLookup<T> {
    pub face: u8,
    pub st: [T; 2],
    pub jst: [T; 4],
}

/// Lookups for the covered pixels of an image, in increasing pixel order.
/// Pixels without a lookup sample to zero.
#[derive(Debug, Clone, PartialEq)]
pub struct TexSampleRequest<T> {
    pub width: usize,
    pub height: usize,
    pixels: Vec<u32>,
    lookups: Vec<TexLookup<T>>,
}

impl<T: Real> TexSampleRequest<T> {
    /// Dense form: one entry per pixel, `None` for blanks.
    pub fn new(width: usize, height: usize, lookups: Vec<Option<TexLookup<T>>>) -> Result<Self> {
        if lookups.len() != width * height {
            return Err(Error::shape("texture lookups", width * height, lookups.len()));
        }
        let (pixels, lookups) = lookups
            .into_iter()
            .enumerate()
            .filter_map(|(i, l)| l.map(|l| (i as u32, l)))
            .unzip();
        Self::sparse(width, height, pixels, lookups)
    }

    /// Sparse form: `lookups[k]` belongs to pixel `pixels[k]`.
    pub fn sparse(width: usize, height: usize, pixels: Vec<u32>, lookups: Vec<TexLookup<T>>) -> Result<Self> {
        if pixels.len() != lookups.len() {
            return Err(Error::shape("texture lookups", pixels.len(), lookups.len()));
        }
        if pixels.windows(2).any(|w| w[0] >= w[1]) || pixels.last().is_some_and(|&p| p as usize >= width * height) {
            return Err(Error::UnorderedLookups);
        }
        if let Some(k) = lookups
            .iter()
            .position(|l| l.st.iter().chain(&l.jst).any(|v| !v.is_finite()))
        {
            return Err(Error::NonFiniteAttribute { index: pixels[k] as usize });
        }
        Ok(Self {
            width,
            height,
            pixels,
            lookups,
        })
    }

    pub fn pixels(&self) -> &[u32] {
        &self.pixels
    }

    pub fn lookups(&self) -> &[TexLookup<T>] {
        &self.lookups
    }

    pub fn len(&self) -> usize {
        self.lookups.len()
    }

    pub fn is_empty(&self) -> bool {
        self.lookups.is_empty()
    }
}

/// Unclamped level of detail: `log2` of the longer texel-space column of
/// `J_st`. Returns the column (0 for x, 1 for y) that governs it.
#[inline]
fn raw_lod<T: Real>(jst: [T; 4], size: usize) -> (T, usize, T) {
    let nx2 = jst[0] * jst[0] + jst[2] * jst[2];
    let ny2 = jst[1] * jst[1] + jst[3] * jst[3];
    let (n2, axis) = if nx2 >= ny2 { (nx2, 0) } else { (ny2, 1) };
    let texels = T::lit(size as f64) * n2.sqrt();
    (texels.log2(), axis, n2)
}

/// Fractional MIP level for footprint `jst` on a `size`-texel texture with
/// `levels` levels. Zero footprints select level 0.
pub fn lod_select<T: Real>(jst: [T; 4], size: usize, levels: usize) -> T {
    let (lod, _, _) = raw_lod(jst, size);
    let top = T::lit((levels.max(1) - 1) as f64);
    if lod.is_nan() || lod <= T::zero() {
        T::zero()
    } else if lod >= top {
        top
    } else {
        lod
    }
}

/// Bilinear footprint on one level.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tap<T> {
    pub level: u32,
    pub x: [u32; 2],
    pub y: [u32; 2],
    pub fx: T,
    pub fy: T,
}

impl<T: Real> Tap<T> {
    fn new(s: T, t: T, level: usize, level_size: usize, address: AddressMode) -> Self {
        let n = T::lit(level_size as f64);
        let xs = s * n - T::lit(0.5);
        let ys = t * n - T::lit(0.5);
        let (x0, y0) = (xs.floor(), ys.floor());
        let (fx, fy) = (xs - x0, ys - y0);
        let wrap = |i: i64| -> u32 {
            match address {
                AddressMode::Clamp => i.clamp(0, level_size as i64 - 1) as u32,
                AddressMode::Wrap => i.rem_euclid(level_size as i64) as u32,
            }
        };
        let (ix, iy) = (x0.as_f64() as i64, y0.as_f64() as i64);
        Self {
            level: level as u32,
            x: [wrap(ix), wrap(ix + 1)],
            y: [wrap(iy), wrap(iy + 1)],
            fx,
            fy,
        }
    }

    /// The four `(x, y, weight)` corners.
    #[inline]
    pub fn corners(&self) -> [(usize, usize, T); 4] {
        let one = T::one();
        let [x0, x1] = self.x.map(|v| v as usize);
        let [y0, y1] = self.y.map(|v| v as usize);
        [
            (x0, y0, (one - self.fx) * (one - self.fy)),
            (x1, y0, self.fx * (one - self.fy)),
            (x0, y1, (one - self.fx) * self.fy),
            (x1, y1, self.fx * self.fy),
        ]
    }
}

/// Replay data for one sampled pixel.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SampleRecord<T> {
    pub face: u8,
    pub lod: T,
    /// Weight of `taps[1]`.
    pub blend: T,
    /// Whether the blend weight depends smoothly on `J_st` at this lod.
    pub lod_active: bool,
    pub taps: [Tap<T>; 2],
}

#[derive(Debug, Clone, PartialEq)]
pub struct TextureRecord<T> {
    pub width: usize,
    pub height: usize,
    /// Aligned with the request's lookups.
    pub samples: Vec<SampleRecord<T>>,
}

fn make_record<T: Real>(tex: &MipTexture<T>, l: &TexLookup<T>) -> SampleRecord<T> {
    let levels = tex.level_count();
    let (lod, blend, l0, l1, active) = if levels == 1 {
        (T::zero(), T::zero(), 0, 0, false)
    } else {
        let (raw, _, _) = raw_lod(l.jst, tex.size);
        let top = T::lit((levels - 1) as f64);
        let lod = lod_select(l.jst, tex.size, levels);
        let l0 = (lod.floor().as_f64() as usize).min(levels - 1);
        let l1 = (l0 + 1).min(levels - 1);
        let blend = lod - T::lit(l0 as f64);
        let active = raw > T::zero() && raw < top && blend != T::zero();
        (lod, blend, l0, l1, active)
    };
    let [s, t] = l.st;
    SampleRecord {
        face: l.face,
        lod,
        blend,
        lod_active: active,
        taps: [
            Tap::new(s, t, l0, tex.level_size(l0), tex.address),
            Tap::new(s, t, l1, tex.level_size(l1), tex.address),
        ],
    }
}

fn bilerp_into<T: Real>(tex: &MipTexture<T>, face: usize, tap: &Tap<T>, weight: T, out: &mut [T]) {
    for (x, y, w) in tap.corners() {
        let w = w * weight;
        for (o, &v) in out.iter_mut().zip(tex.texel(tap.level as usize, face, x, y)) {
            *o += w * v;
        }
    }
}

fn check_request<T: Real>(tex: &MipTexture<T>, req: &TexSampleRequest<T>) -> Result<()> {
    if let Some(l) = req.lookups.iter().find(|l| l.face as usize >= tex.faces) {
        return Err(Error::shape("texture face", tex.faces, l.face as usize + 1));
    }
    Ok(())
}

/// Samples `tex` at every lookup of `req`. Returns the sampled image as a
/// flat `width * height * channels` buffer together with the replay record.
pub fn texture_forward<T: Real>(
    tex: &MipTexture<T>,
    req: &TexSampleRequest<T>,
) -> Result<(crate::ImageGrid<T>, TextureRecord<T>)> {
    check_request(tex, req)?;
    let c = tex.channels;
    let records = par::map_indexed(req.len(), |k| make_record(tex, &req.lookups[k]));
    let mut vals = vec![T::zero(); records.len() * c];
    par::for_each_row(&mut vals, c, |k, px| {
        let r = &records[k];
        let face = r.face as usize;
        if r.taps[0].level == r.taps[1].level {
            bilerp_into(tex, face, &r.taps[0], T::one(), px);
        } else {
            bilerp_into(tex, face, &r.taps[0], T::one() - r.blend, px);
            bilerp_into(tex, face, &r.taps[1], r.blend, px);
        }
    });
    let mut out = crate::ImageGrid::zeros(req.width, req.height, c);
    for (&p, v) in req.pixels.iter().zip(vals.chunks_exact(c.max(1))) {
        out.pixel_mut(p as usize).copy_from_slice(v);
    }
    Ok((
        out,
        TextureRecord {
            width: req.width,
            height: req.height,
            samples: records,
        },
    ))
}

/// Gradients produced by [`texture_backward`].
#[derive(Debug, Clone, PartialEq)]
pub struct TextureGrad<T> {
    /// Per-level texel gradients, shaped like [`MipTexture::levels`].
    pub levels: Vec<Vec<T>>,
    pub dst: Vec<[T; 2]>,
    pub djst: Vec<[T; 4]>,
}

struct PixelGrad<T> {
    dst: [T; 2],
    djst: [T; 4],
}

pub fn texture_backward<T: Real>(
    tex: &MipTexture<T>,
    req: &TexSampleRequest<T>,
    record: &TextureRecord<T>,
    dl_dg: &crate::ImageGrid<T>,
) -> Result<TextureGrad<T>> {
    check_request(tex, req)?;
    if record.width != req.width
        || record.height != req.height
        || record.samples.len() != req.lookups.len()
    {
        return Err(Error::RecordMismatch);
    }
    dl_dg.check_dims("dL/dg", req.width, req.height)?;
    let c = tex.channels;
    if dl_dg.channels() != c {
        return Err(Error::shape("dL/dg channels", c, dl_dg.channels()));
    }
    let zero = T::zero();
    let one = T::one();

    let per_pixel = par::map_indexed(record.samples.len(), |k| {
        let r = &record.samples[k];
        let l = &req.lookups[k];
        let g = dl_dg.pixel(req.pixels[k] as usize);
        let face = r.face as usize;
        let single = r.taps[0].level == r.taps[1].level;
        let weights = if single {
            [one, zero]
        } else {
            [one - r.blend, r.blend]
        };
        let mut dst = [zero; 2];
        let mut level_vals = [zero; 2];
        for (k, tap) in r.taps.iter().enumerate() {
            if single && k == 1 {
                break;
            }
            let level = tap.level as usize;
            let n = T::lit(tex.level_size(level) as f64);
            let [(x0, y0, _), (x1, _, _), (_, y1, _), _] = tap.corners();
            let mut dfx = zero;
            let mut dfy = zero;
            let mut val = zero;
            for ch in 0..c {
                let t = |x: usize, y: usize| tex.texel(level, face, x, y)[ch];
                let (c00, c10) = (t(x0, y0), t(x1, y0));
                let (c01, c11) = (t(x0, y1), t(x1, y1));
                let ddx = (one - tap.fy) * (c10 - c00) + tap.fy * (c11 - c01);
                let ddy = (one - tap.fx) * (c01 - c00) + tap.fx * (c11 - c10);
                dfx += g[ch] * ddx;
                dfy += g[ch] * ddy;
                let b = (one - tap.fx) * (one - tap.fy) * c00
                    + tap.fx * (one - tap.fy) * c10
                    + (one - tap.fx) * tap.fy * c01
                    + tap.fx * tap.fy * c11;
                val += g[ch] * b;
            }
            dst[0] += weights[k] * n * dfx;
            dst[1] += weights[k] * n * dfy;
            level_vals[k] = val;
        }
        let mut djst = [zero; 4];
        if r.lod_active {
            let glod = level_vals[1] - level_vals[0];
            let (_, axis, n2) = raw_lod(l.jst, tex.size);
            let scale = glod / (n2 * T::LN_2());
            if axis == 0 {
                djst[0] = scale * l.jst[0];
                djst[2] = scale * l.jst[2];
            } else {
                djst[1] = scale * l.jst[1];
                djst[3] = scale * l.jst[3];
            }
        }
        PixelGrad { dst, djst }
    });

    let mut levels: Vec<Vec<T>> = tex.levels.iter().map(|l| vec![zero; l.len()]).collect();
    for (r, &p) in record.samples.iter().zip(&req.pixels) {
        let g = dl_dg.pixel(p as usize);
        let face = r.face as usize;
        let single = r.taps[0].level == r.taps[1].level;
        for (k, tap) in r.taps.iter().enumerate() {
            let wk = match (single, k) {
                (true, 0) => one,
                (true, _) => break,
                (false, 0) => one - r.blend,
                (false, _) => r.blend,
            };
            let s = tex.level_size(tap.level as usize);
            let dst = &mut levels[tap.level as usize];
            for (x, y, w) in tap.corners() {
                let base = ((face * s + y) * s + x) * c;
                for ch in 0..c {
                    dst[base + ch] += wk * w * g[ch];
                }
            }
        }
    }

    let (dst, djst) = per_pixel.into_iter().map(|p| (p.dst, p.djst)).unzip();
    Ok(TextureGrad { levels, dst, djst })
}

/// Collapses per-level texel gradients onto the base level by transposing
/// the box-filter construction, coarsest level first.
pub fn flatten_gradients<T: Real>(
    levels: &[Vec<T>],
    size: usize,
    faces: usize,
    channels: usize,
) -> Result<Vec<T>> {
    check_levels(size, levels.len())?;
    for (l, g) in levels.iter().enumerate() {
        let s = size >> l;
        let expected = faces * s * s * channels;
        if g.len() != expected {
            return Err(Error::shape("level gradient", expected, g.len()));
        }
    }
    let quarter = T::lit(0.25);
    let mut acc = levels[levels.len() - 1].clone();
    for l in (0..levels.len() - 1).rev() {
        let s = size >> l;
        let coarse = s / 2;
        let mut fine = levels[l].clone();
        par::for_each_row(&mut fine, s * channels, |row, dst| {
            let (f, y) = (row / s, row % s);
            for x in 0..s {
                let src = ((f * coarse + y / 2) * coarse + x / 2) * channels;
                for ch in 0..channels {
                    dst[x * channels + ch] += acc[src + ch] * quarter;
                }
            }
        });
        acc = fine;
    }
    Ok(acc)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn checker4() -> Vec<f64> {
        (0..16).map(|i| ((i % 4 + i / 4) % 2) as f64).collect()
    }

    #[test]
    fn checkerboard_pyramid() {
        let tex = build_pyramid(checker4(), 4, 1, 1, 3).unwrap();
        assert_eq!(tex.level(1), &[0.5; 4]);
        assert_eq!(tex.level(2), &[0.5]);
    }

    #[test]
    fn constant_pyramid() {
        let tex = build_pyramid(vec![0.3f64; 64 * 2], 8, 1, 2, 4).unwrap();
        for l in 0..4 {
            assert!(tex.level(l).iter().all(|&v| (v - 0.3).abs() < 1e-15));
        }
    }

    #[test]
    fn level_count_validated() {
        assert_eq!(
            build_pyramid(vec![0.0f64; 36], 6, 1, 1, 2).unwrap_err(),
            Error::NonPowerOfTwo { size: 6, levels: 2 }
        );
        assert!(build_pyramid(vec![0.0f64; 36], 6, 1, 1, 1).is_ok());
        assert!(build_pyramid(vec![0.0f64; 16], 4, 1, 1, 4).is_err());
    }

    #[test]
    fn lod_examples() {
        assert_eq!(lod_select([1.0 / 16.0, 0.0, 0.0, 1.0 / 16.0], 16, 5), 0.0f64);
        assert_eq!(lod_select([4.0 / 16.0, 0.0, 0.0, 1.0 / 16.0], 16, 5), 2.0f64);
        assert_eq!(lod_select([8.0 / 64.0, 0.0, 0.0, 1.0 / 64.0], 64, 7), 3.0f64);
        assert_eq!(lod_select([0.0f64; 4], 64, 7), 0.0);
        assert_eq!(lod_select([1e3f64, 0.0, 0.0, 0.0], 64, 7), 6.0);
    }

    #[test]
    fn texel_center_lookup() {
        let base: Vec<f64> = (0..16).map(|i| i as f64).collect();
        let tex = build_pyramid(base, 4, 1, 1, 1).unwrap();
        let req = TexSampleRequest::new(
            1,
            1,
            vec![Some(TexLookup {
                face: 0,
                st: [2.5 / 4.0, 1.5 / 4.0],
                jst: [0.0; 4],
            })],
        )
        .unwrap();
        let (g, _) = texture_forward(&tex, &req).unwrap();
        assert_eq!(g.data(), &[6.0]);
    }

    #[test]
    fn constant_texture_has_no_coordinate_gradient() {
        let tex = build_pyramid(vec![0.7f64; 64], 8, 1, 1, 4).unwrap();
        let lookups = vec![
            Some(TexLookup {
                face: 0,
                st: [0.31, 0.77],
                jst: [0.3, 0.01, -0.02, 0.2],
            }),
            None,
        ];
        let req = TexSampleRequest::new(2, 1, lookups).unwrap();
        let (g, rec) = texture_forward(&tex, &req).unwrap();
        assert!((g.data()[0] - 0.7).abs() < 1e-14);
        assert_eq!(g.data()[1], 0.0);
        let grad = texture_backward(&tex, &req, &rec, &crate::ImageGrid::filled(2, 1, 1, 1.0)).unwrap();
        assert!(grad.dst[0].iter().all(|v| v.abs() < 1e-12));
    }

    #[test]
    fn flatten_examples() {
        let g0: Vec<f64> = (0..64).map(|i| i as f64).collect();
        let levels = vec![g0.clone(), vec![0.0; 16], vec![0.0; 4], vec![0.0]];
        assert_eq!(flatten_gradients(&levels, 8, 1, 1).unwrap(), g0);
        let levels = vec![vec![0.0; 64], vec![0.0; 16], vec![0.0; 4], vec![1.0]];
        let flat = flatten_gradients(&levels, 8, 1, 1).unwrap();
        assert!(flat.iter().all(|&v| v == 1.0 / 64.0));
    }

    #[test]
    fn record_mismatch_detected() {
        let tex = build_pyramid(vec![0.7f64; 16], 4, 1, 1, 1).unwrap();
        let l = TexLookup {
            face: 0,
            st: [0.5, 0.5],
            jst: [0.0; 4],
        };
        let req = TexSampleRequest::new(1, 1, vec![Some(l)]).unwrap();
        let (_, rec) = texture_forward(&tex, &req).unwrap();
        let other = TexSampleRequest::new(1, 1, vec![None]).unwrap();
        assert_eq!(
            texture_backward(&tex, &other, &rec, &crate::ImageGrid::zeros(1, 1, 1)).unwrap_err(),
            Error::RecordMismatch
        );
    }

    #[test]
    fn sparse_matches_dense() {
        let l = TexLookup {
            face: 0,
            st: [0.3, 0.6],
            jst: [0.0; 4],
        };
        let dense = TexSampleRequest::new(3, 1, vec![None, Some(l), None]).unwrap();
        let sparse = TexSampleRequest::sparse(3, 1, vec![1], vec![l]).unwrap();
        assert_eq!(dense, sparse);
        assert_eq!(
            TexSampleRequest::sparse(3, 1, vec![2, 1], vec![l, l]).unwrap_err(),
            Error::UnorderedLookups
        );
        assert_eq!(
            TexSampleRequest::sparse(3, 1, vec![3], vec![l]).unwrap_err(),
            Error::UnorderedLookups
        );
    }
}
