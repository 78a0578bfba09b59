//! Shading stage contract and the built-in shaders.
//!
//! A shader maps the G-buffer (interpolated attributes plus sampled
//! textures) to a color image and supplies its own backward. It only sees
//! covered pixels: the render graph overwrites blank pixels with the clear
//! color afterwards and zeroes their incoming gradient before calling
//! [`Shader::shade_backward`].

use crate::buffers::ImageGrid;
use crate::interpolate::AttrImage;
use crate::raster::RasterGrid;
use crate::{par, Error, Real, Result};

use super::geometry::{dot3, normalize_vjp, unit};

/// How a texture slot derives its lookups from an attribute slot.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TexAddress {
    /// Channels 0..3 are a direction; derivatives, if any, must cover them.
    Cubemap { attr: usize },
    /// Channels 0..2 are `(s, t)` on a single-face texture.
    Uv { attr: usize },
}

/// Per-pixel color source.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Source {
    Attribute(usize),
    Texture(usize),
}

pub struct ShadeInputs<'a, T> {
    pub grid: &'a RasterGrid<T>,
    pub attrs: &'a [AttrImage<T>],
    pub texels: &'a [ImageGrid<T>],
}

impl<T: Real> ShadeInputs<'_, T> {
    fn source(&self, s: Source) -> Result<&ImageGrid<T>> {
        match s {
            Source::Attribute(i) => self.attrs.get(i).map(|a| &a.values),
            Source::Texture(i) => self.texels.get(i),
        }
        .ok_or(Error::shape("shader source slot", i_of(s) + 1, self.slots(s)))
    }

    fn slots(&self, s: Source) -> usize {
        match s {
            Source::Attribute(_) => self.attrs.len(),
            Source::Texture(_) => self.texels.len(),
        }
    }

    fn attr(&self, i: usize, min_channels: usize) -> Result<&AttrImage<T>> {
        let a = self
            .attrs
            .get(i)
            .ok_or(Error::shape("shader attribute slot", i + 1, self.attrs.len()))?;
        if a.values.channels() < min_channels {
            return Err(Error::shape("shader attribute channels", min_channels, a.values.channels()));
        }
        Ok(a)
    }
}

fn i_of(s: Source) -> usize {
    match s {
        Source::Attribute(i) | Source::Texture(i) => i,
    }
}

/// Attribute gradient shaped like an [`AttrImage`].
#[derive(Debug, Clone, PartialEq)]
pub struct AttrGrad<T> {
    pub values: ImageGrid<T>,
    pub derivs: Option<ImageGrid<T>>,
}

impl<T: Real> AttrGrad<T> {
    pub fn zeros_like(a: &AttrImage<T>) -> Self {
        let z = |g: &ImageGrid<T>| ImageGrid::zeros(g.width(), g.height(), g.channels());
        Self {
            values: z(&a.values),
            derivs: a.derivs.as_ref().map(z),
        }
    }
}

/// Gradients of a shading stage. `attrs` and `texels` parallel the inputs;
/// `params` follows the shader's own documented parameter order.
#[derive(Debug, Clone, PartialEq)]
pub struct ShadeGrad<T> {
    pub attrs: Vec<AttrGrad<T>>,
    pub texels: Vec<ImageGrid<T>>,
    pub params: Vec<T>,
}

impl<T: Real> ShadeGrad<T> {
    pub fn zeros(inp: &ShadeInputs<T>, params: usize) -> Self {
        Self {
            attrs: inp.attrs.iter().map(AttrGrad::zeros_like).collect(),
            texels: inp
                .texels
                .iter()
                .map(|t| ImageGrid::zeros(t.width(), t.height(), t.channels()))
                .collect(),
            params: vec![T::zero(); params],
        }
    }
}

pub trait Shader<T: Real>: Sync {
    /// Output color channels.
    fn channels(&self) -> usize;

    /// One entry per texture the shader samples.
    fn addressing(&self) -> &[TexAddress] {
        &[]
    }

    fn shade(&self, inp: &ShadeInputs<T>) -> Result<ImageGrid<T>>;

    fn shade_backward(&self, inp: &ShadeInputs<T>, dl: &ImageGrid<T>) -> Result<ShadeGrad<T>>;
}

fn check_channels<T: Real>(img: &ImageGrid<T>, channels: usize) -> Result<()> {
    if img.channels() != channels {
        return Err(Error::shape("shader source channels", channels, img.channels()));
    }
    Ok(())
}


/// Copies an attribute or texture image unchanged.
#[derive(Debug, Clone)]
pub struct PassThrough {
    pub source: Source,
    pub channels: usize,
    pub addressing: Vec<TexAddress>,
}

impl PassThrough {
    pub fn attribute(slot: usize, channels: usize) -> Self {
        Self {
            source: Source::Attribute(slot),
            channels,
            addressing: Vec::new(),
        }
    }

    pub fn texture(slot: usize, channels: usize, address: TexAddress) -> Self {
        let mut addressing = vec![TexAddress::Uv { attr: 0 }; slot + 1];
        addressing[slot] = address;
        Self {
            source: Source::Texture(slot),
            channels,
            addressing,
        }
    }
}

impl<T: Real> Shader<T> for PassThrough {
    fn channels(&self) -> usize {
        self.channels
    }

    fn addressing(&self) -> &[TexAddress] {
        &self.addressing
    }

    fn shade(&self, inp: &ShadeInputs<T>) -> Result<ImageGrid<T>> {
        let src = inp.source(self.source)?;
        check_channels(src, self.channels)?;
        Ok(src.clone())
    }

    fn shade_backward(&self, inp: &ShadeInputs<T>, dl: &ImageGrid<T>) -> Result<ShadeGrad<T>> {
        let mut g = ShadeGrad::zeros(inp, 0);
        let dst = match self.source {
            Source::Attribute(i) => &mut g.attrs[i].values,
            Source::Texture(i) => &mut g.texels[i],
        };
        if !dst.same_shape(dl) {
            return Err(Error::shape("shader gradient", dst.data().len(), dl.data().len()));
        }
        dst.data_mut().copy_from_slice(dl.data());
        Ok(g)
    }
}

/// `albedo * (ambient + max(0, n̂·l))` with the normal in channels 0..3 of
/// attribute slot `normal`. Parameters: `[ambient, l_x, l_y, l_z]`.
#[derive(Debug, Clone)]
pub struct Lambert<T> {
    pub normal: usize,
    pub albedo: Source,
    pub channels: usize,
    /// Unit-free direction toward the light; used as given.
    pub light: [T; 3],
    pub ambient: T,
    pub addressing: Vec<TexAddress>,
}

impl<T: Real> Shader<T> for Lambert<T> {
    fn channels(&self) -> usize {
        self.channels
    }

    fn addressing(&self) -> &[TexAddress] {
        &self.addressing
    }

    fn shade(&self, inp: &ShadeInputs<T>) -> Result<ImageGrid<T>> {
        let albedo = inp.source(self.albedo)?;
        check_channels(albedo, self.channels)?;
        let normals = &inp.attr(self.normal, 3)?.values;
        let mut out = ImageGrid::zeros(albedo.width(), albedo.height(), self.channels);
        par::for_each_row(out.data_mut(), self.channels, |i, px| {
            if inp.grid.ids()[i] == 0 {
                return;
            }
            let n = normals.pixel(i);
            let k = match unit([n[0], n[1], n[2]]) {
                Some((nh, _)) => self.ambient + dot3(nh, self.light).max(T::zero()),
                None => self.ambient,
            };
            for (o, &a) in px.iter_mut().zip(albedo.pixel(i)) {
                *o = a * k;
            }
        });
        Ok(out)
    }

    fn shade_backward(&self, inp: &ShadeInputs<T>, dl: &ImageGrid<T>) -> Result<ShadeGrad<T>> {
        let albedo = inp.source(self.albedo)?;
        let normals = &inp.attr(self.normal, 3)?.values;
        let c = self.channels;
        let mut g = ShadeGrad::zeros(inp, 4);
        let ids = inp.grid.ids();
        let n_pix = ids.len();

        let per_pixel = |i: usize| -> Option<(T, [T; 3], [T; 3], T)> {
            if ids[i] == 0 {
                return None;
            }
            let n = normals.pixel(i);
            let a = albedo.pixel(i);
            let gi = dl.pixel(i);
            let mut ga = T::zero();
            for ch in 0..c {
                ga += gi[ch] * a[ch];
            }
            let (k, gn, gl) = match unit([n[0], n[1], n[2]]) {
                Some((nh, len)) if dot3(nh, self.light) > T::zero() => {
                    let gnh = [ga * self.light[0], ga * self.light[1], ga * self.light[2]];
                    (
                        self.ambient + dot3(nh, self.light),
                        normalize_vjp(nh, len, gnh),
                        [ga * nh[0], ga * nh[1], ga * nh[2]],
                    )
                }
                _ => (self.ambient, [T::zero(); 3], [T::zero(); 3]),
            };
            Some((k, gn, gl, ga))
        };
        let rows = par::map_indexed(n_pix, per_pixel);
        for (i, r) in rows.iter().enumerate() {
            let Some((k, gn, gl, ga)) = r else { continue };
            let gi = dl.pixel(i);
            let dst = match self.albedo {
                Source::Attribute(s) => g.attrs[s].values.pixel_mut(i),
                Source::Texture(s) => g.texels[s].pixel_mut(i),
            };
            for ch in 0..c {
                dst[ch] += gi[ch] * *k;
            }
            let dn = g.attrs[self.normal].values.pixel_mut(i);
            for j in 0..3 {
                dn[j] += gn[j];
            }
            g.params[0] += *ga;
            for j in 0..3 {
                g.params[1 + j] += gl[j];
            }
        }
        Ok(g)
    }
}

/// Mirror reflection plus a white Phong highlight:
/// `env(r) + ks * max(0, r̂·l)^shininess`, where `r` is channels 0..3 of
/// attribute slot `reflect` and `env` is texture slot 0, addressed by `r`.
/// Parameters: `[ks, shininess]`.
#[derive(Debug, Clone)]
pub struct Phong<T> {
    pub reflect: usize,
    pub channels: usize,
    pub light: [T; 3],
    pub ks: T,
    pub shininess: T,
    addressing: [TexAddress; 1],
}

impl<T: Real> Phong<T> {
    pub fn new(reflect: usize, channels: usize, light: [T; 3], ks: T, shininess: T) -> Self {
        Self {
            reflect,
            channels,
            light,
            ks,
            shininess,
            addressing: [TexAddress::Cubemap { attr: reflect }],
        }
    }

    /// `(r̂·l, |r|, r̂)` at pixel `i`.
    fn cosine(&self, r: &[T]) -> Option<(T, T, [T; 3])> {
        unit([r[0], r[1], r[2]]).map(|(rh, len)| (dot3(rh, self.light), len, rh))
    }
}

impl<T: Real> Shader<T> for Phong<T> {
    fn channels(&self) -> usize {
        self.channels
    }

    fn addressing(&self) -> &[TexAddress] {
        &self.addressing
    }

    fn shade(&self, inp: &ShadeInputs<T>) -> Result<ImageGrid<T>> {
        let env = inp.source(Source::Texture(0))?;
        check_channels(env, self.channels)?;
        let refl = &inp.attr(self.reflect, 3)?.values;
        let mut out = env.clone();
        par::for_each_row(out.data_mut(), self.channels, |i, px| {
            if inp.grid.ids()[i] == 0 {
                return;
            }
            if let Some((x, _, _)) = self.cosine(refl.pixel(i)) {
                if x > T::zero() {
                    let h = self.ks * x.powf(self.shininess);
                    px.iter_mut().for_each(|o| *o += h);
                }
            }
        });
        Ok(out)
    }

    fn shade_backward(&self, inp: &ShadeInputs<T>, dl: &ImageGrid<T>) -> Result<ShadeGrad<T>> {
        let refl = &inp.attr(self.reflect, 3)?.values;
        let ids = inp.grid.ids();
        let mut g = ShadeGrad::zeros(inp, 2);
        let texels = g
            .texels
            .get_mut(0)
            .ok_or(Error::shape("shader texture slot", 1, 0))?;
        if !texels.same_shape(dl) {
            return Err(Error::shape("shader gradient", texels.data().len(), dl.data().len()));
        }
        texels.data_mut().copy_from_slice(dl.data());
        {
            // Blank pixels received no highlight and are not env samples.
            let c = self.channels;
            for (i, &id) in ids.iter().enumerate() {
                if id == 0 {
                    texels.data_mut()[i * c..(i + 1) * c].fill(T::zero());
                }
            }
        }
        let per_pixel = |i: usize| -> Option<([T; 3], T, T)> {
            if ids[i] == 0 {
                return None;
            }
            let (x, len, rh) = self.cosine(refl.pixel(i))?;
            if x <= T::zero() {
                return None;
            }
            let gh: T = dl.pixel(i).iter().fold(T::zero(), |a, &v| a + v);
            let p = x.powf(self.shininess);
            let dx = self.ks * self.shininess * x.powf(self.shininess - T::one()) * gh;
            let grh = [dx * self.light[0], dx * self.light[1], dx * self.light[2]];
            Some((normalize_vjp(rh, len, grh), gh * p, gh * self.ks * p * x.ln()))
        };
        let rows = par::map_indexed(ids.len(), per_pixel);
        for (i, r) in rows.into_iter().enumerate() {
            let Some((gr, gks, gsh)) = r else { continue };
            let dst = g.attrs[self.reflect].values.pixel_mut(i);
            for j in 0..3 {
                dst[j] += gr[j];
            }
            g.params[0] += gks;
            g.params[1] += gsh;
        }
        Ok(g)
    }
}
