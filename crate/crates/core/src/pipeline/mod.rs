//! Deferred-shading render graphs built from the primitives.
//!
//! A [`RenderGraph`] runs rasterize → interpolate → texture addressing and
//! sampling → shade → clear-color fill → antialias, keeping every activation
//! the backward pass needs. [`RenderGraph::render_backward`] replays the
//! stages in reverse and sums gradients for inputs used by several stages
//! (clip positions feed both rasterization and antialiasing).

pub mod cubemap;
pub mod geometry;
pub mod shading;

pub use cubemap::{
    cubemap_address, cubemap_address_backward, cubemap_lookup, cubemap_lookup_backward,
    face_direction,
};
pub use geometry::{
    look_at, mat_mul, perspective, reflection_vectors, reflection_vectors_backward,
    transform_clip, transform_clip_backward, Mat4, TransformStack,
};
pub use shading::{
    AttrGrad, Lambert, PassThrough, Phong, ShadeGrad, ShadeInputs, Shader, Source, TexAddress,
};

use std::time::{Duration, Instant};

use crate::antialias::{antialias_backward, antialias_forward, AaEventLog};
use crate::buffers::{
    build_edge_adjacency, AttributeSet, ClipVertexBuffer, EdgeAdjacency, GradBuffer, ImageGrid,
    IndexBuffer,
};
use crate::interpolate::{interpolate_backward, interpolate_forward, AttrImage};
use crate::raster::{rasterize_backward, rasterize_forward, RasterGrid, Viewport};
use crate::texture::{
    flatten_gradients, texture_backward, texture_forward, MipTexture, TexLookup, TexSampleRequest,
    TextureRecord,
};
use crate::{Error, Real, Result};

/// One interpolated attribute: per-vertex values, their own index buffer
/// and the channels that get screen-space derivatives.
#[derive(Debug, Clone, Copy)]
pub struct AttributeInput<'a, T> {
    pub values: &'a AttributeSet<T>,
    pub idx: &'a IndexBuffer,
    pub diff_channels: &'a [usize],
}

#[derive(Debug, Clone)]
pub struct RenderInputs<'a, T> {
    pub verts: &'a ClipVertexBuffer<T>,
    pub idx: &'a IndexBuffer,
    /// Adjacency of `idx`; built on the fly when absent and needed.
    pub adjacency: Option<&'a EdgeAdjacency>,
    pub attributes: Vec<AttributeInput<'a, T>>,
    pub textures: Vec<&'a MipTexture<T>>,
    /// Color of blank pixels, one value per output channel.
    pub clear: Vec<T>,
}

/// Gradients for every differentiable render input.
#[derive(Debug, Clone, PartialEq)]
pub struct RenderGrad<T> {
    /// Clip positions, `verts x 4`.
    pub positions: GradBuffer<T>,
    /// Per attribute input, `vertices x channels`.
    pub attributes: Vec<GradBuffer<T>>,
    /// Per texture, flattened onto the base level.
    pub textures: Vec<Vec<T>>,
    /// Shader parameters in the shader's documented order.
    pub params: Vec<T>,
    pub clear: Vec<T>,
}

struct Saved<T> {
    grid: RasterGrid<T>,
    attrs: Vec<AttrImage<T>>,
    requests: Vec<TexSampleRequest<T>>,
    records: Vec<TextureRecord<T>>,
    texels: Vec<ImageGrid<T>>,
    log: Option<AaEventLog<T>>,
}

/// Wall time per stage of one forward or backward pass. Texture time
/// includes addressing; shade time includes the clear-color fill.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct StageTimings {
    pub rasterize: Duration,
    pub interpolate: Duration,
    pub texture: Duration,
    pub shade: Duration,
    pub antialias: Duration,
}

impl StageTimings {
    /// Everything after rasterization.
    pub fn post_raster(&self) -> Duration {
        self.interpolate + self.texture + self.shade + self.antialias
    }

    pub fn total(&self) -> Duration {
        self.rasterize + self.post_raster()
    }
}

/// A render graph holding the activations of its last forward pass. One
/// render at a time; shared inputs may feed several graphs concurrently.
pub struct RenderGraph<T> {
    viewport: Viewport,
    pub antialias: bool,
    saved: Option<Saved<T>>,
    forward_times: StageTimings,
    backward_times: StageTimings,
}

fn uv_address<T: Real>(grid: &RasterGrid<T>, attr: &AttrImage<T>) -> Result<TexSampleRequest<T>> {
    if attr.values.channels() < 2 {
        return Err(Error::shape("uv channels", 2, attr.values.channels()));
    }
    let derivs = uv_derivs(attr)?;
    let (pixels, lookups) = (0..grid.pixel_count())
        .filter(|&i| grid.ids()[i] != 0)
        .map(|i| {
            let v = attr.values.pixel(i);
            let mut jst = [T::zero(); 4];
            if let Some(d) = derivs {
                jst.copy_from_slice(&d.pixel(i)[..4]);
            }
            let l = TexLookup {
                face: 0,
                st: [v[0], v[1]],
                jst,
            };
            (i as u32, l)
        })
        .unzip();
    TexSampleRequest::sparse(grid.width(), grid.height(), pixels, lookups)
}

fn uv_derivs<T: Real>(attr: &AttrImage<T>) -> Result<Option<&ImageGrid<T>>> {
    match &attr.derivs {
        Some(d) if attr.diff_channels.starts_with(&[0, 1]) => Ok(Some(d)),
        Some(_) => Err(Error::shape("uv derivative channels", 2, attr.diff_channels.len())),
        None => Ok(None),
    }
}

fn attr_slot<T>(attrs: &[T], i: usize) -> Result<&T> {
    attrs.get(i).ok_or(Error::shape("attribute slot", i + 1, attrs.len()))
}

impl<T: Real> RenderGraph<T> {
    pub fn new(viewport: Viewport) -> Self {
        Self {
            viewport,
            antialias: true,
            saved: None,
            forward_times: StageTimings::default(),
            backward_times: StageTimings::default(),
        }
    }

    pub fn with_antialias(mut self, on: bool) -> Self {
        self.antialias = on;
        self
    }

    pub fn viewport(&self) -> Viewport {
        self.viewport
    }

    /// Raster grid of the last forward pass.
    pub fn grid(&self) -> Option<&RasterGrid<T>> {
        self.saved.as_ref().map(|s| &s.grid)
    }

    pub fn event_log(&self) -> Option<&AaEventLog<T>> {
        self.saved.as_ref().and_then(|s| s.log.as_ref())
    }

    /// Stage timings of the last completed forward pass.
    pub fn forward_timings(&self) -> StageTimings {
        self.forward_times
    }

    /// Stage timings of the last completed backward pass.
    pub fn backward_timings(&self) -> StageTimings {
        self.backward_times
    }

    pub fn render(&mut self, inp: &RenderInputs<T>, shader: &dyn Shader<T>) -> Result<ImageGrid<T>> {
        self.saved = None;
        let c = shader.channels();
        if inp.clear.len() != c {
            return Err(Error::shape("clear color", c, inp.clear.len()));
        }
        let addressing = shader.addressing();
        if addressing.len() != inp.textures.len() {
            return Err(Error::shape("textures", addressing.len(), inp.textures.len()));
        }

        let mut times = StageTimings::default();
        let mut clock = Instant::now();
        let mut lap = |slot: &mut Duration| {
            let now = Instant::now();
            *slot = now - clock;
            clock = now;
        };

        let grid = rasterize_forward(inp.verts, inp.idx, self.viewport)?;
        lap(&mut times.rasterize);
        let attrs = inp
            .attributes
            .iter()
            .map(|a| interpolate_forward(a.values, a.idx, &grid, a.diff_channels))
            .collect::<Result<Vec<_>>>()?;
        lap(&mut times.interpolate);
        let requests = addressing
            .iter()
            .map(|a| match *a {
                TexAddress::Cubemap { attr } => cubemap_address(&grid, attr_slot(&attrs, attr)?),
                TexAddress::Uv { attr } => uv_address(&grid, attr_slot(&attrs, attr)?),
            })
            .collect::<Result<Vec<_>>>()?;
        let mut texels = Vec::with_capacity(requests.len());
        let mut records = Vec::with_capacity(requests.len());
        for (tex, req) in inp.textures.iter().zip(&requests) {
            let (img, rec) = texture_forward(tex, req)?;
            texels.push(img);
            records.push(rec);
        }
        lap(&mut times.texture);

        let mut color = shader.shade(&ShadeInputs {
            grid: &grid,
            attrs: &attrs,
            texels: &texels,
        })?;
        color.check_dims("shaded image", grid.width(), grid.height())?;
        if color.channels() != c {
            return Err(Error::shape("shaded channels", c, color.channels()));
        }
        for (i, &id) in grid.ids().iter().enumerate() {
            if id == 0 {
                color.pixel_mut(i).copy_from_slice(&inp.clear);
            }
        }
        lap(&mut times.shade);

        let (out, log) = if self.antialias {
            let built;
            let adj = match inp.adjacency {
                Some(a) => a,
                None => {
                    built = build_edge_adjacency(inp.idx);
                    &built
                }
            };
            let (out, log) = antialias_forward(&color, &grid, inp.verts, inp.idx, adj)?;
            (out, Some(log))
        } else {
            (color, None)
        };
        lap(&mut times.antialias);

        self.forward_times = times;
        self.saved = Some(Saved {
            grid,
            attrs,
            requests,
            records,
            texels,
            log,
        });
        Ok(out)
    }

    /// Backward of the last [`render`](Self::render) call, which must have
    /// used the same inputs and shader. Consumes the saved activations.
    pub fn render_backward(
        &mut self,
        inp: &RenderInputs<T>,
        shader: &dyn Shader<T>,
        dl: &ImageGrid<T>,
    ) -> Result<RenderGrad<T>> {
        let saved = self.saved.take().ok_or(Error::MissingActivations)?;
        let grid = &saved.grid;
        let c = shader.channels();
        dl.check_dims("dL/dimage", grid.width(), grid.height())?;
        if dl.channels() != c {
            return Err(Error::shape("dL/dimage channels", c, dl.channels()));
        }
        if inp.attributes.len() != saved.attrs.len() || inp.textures.len() != saved.texels.len() {
            return Err(Error::MissingActivations);
        }

        let mut times = StageTimings::default();
        let mut clock = Instant::now();
        let mut lap = |slot: &mut Duration| {
            let now = Instant::now();
            *slot = now - clock;
            clock = now;
        };

        // Antialias.
        let mut positions = GradBuffer::zeros(inp.verts.len(), 4);
        let mut dcolor = match &saved.log {
            Some(log) => {
                let g = antialias_backward(log, inp.verts, dl)?;
                positions.add_assign(&g.positions);
                g.color
            }
            None => dl.clone(),
        };
        lap(&mut times.antialias);

        // Clear-color fill.
        let mut clear = vec![T::zero(); c];
        for (i, &id) in grid.ids().iter().enumerate() {
            if id == 0 {
                let px = dcolor.pixel_mut(i);
                for (a, v) in clear.iter_mut().zip(px.iter_mut()) {
                    *a += *v;
                    *v = T::zero();
                }
            }
        }

        // Shade.
        let sg = shader.shade_backward(
            &ShadeInputs {
                grid,
                attrs: &saved.attrs,
                texels: &saved.texels,
            },
            &dcolor,
        )?;
        let mut attr_grads = sg.attrs;
        if attr_grads.len() != saved.attrs.len() || sg.texels.len() != saved.texels.len() {
            return Err(Error::shape("shader gradient slots", saved.attrs.len(), attr_grads.len()));
        }
        lap(&mut times.shade);

        // Texture sampling and addressing.
        let mut textures = Vec::with_capacity(inp.textures.len());
        for (k, tex) in inp.textures.iter().enumerate() {
            let tg = texture_backward(tex, &saved.requests[k], &saved.records[k], &sg.texels[k])?;
            textures.push(flatten_gradients(&tg.levels, tex.size(), tex.faces(), tex.channels())?);
            match shader.addressing()[k] {
                TexAddress::Cubemap { attr } => {
                    let ag = &mut attr_grads[attr];
                    cubemap_address_backward(
                        &saved.requests[k],
                        &saved.attrs[attr],
                        &tg.dst,
                        &tg.djst,
                        &mut ag.values,
                        ag.derivs.as_mut(),
                    )?;
                }
                TexAddress::Uv { attr } => {
                    let a = &saved.attrs[attr];
                    let has_derivs = uv_derivs(a)?.is_some();
                    let ag = &mut attr_grads[attr];
                    for (k, &p) in saved.requests[k].pixels().iter().enumerate() {
                        let i = p as usize;
                        let v = ag.values.pixel_mut(i);
                        v[0] += tg.dst[k][0];
                        v[1] += tg.dst[k][1];
                        if let (true, Some(d)) = (has_derivs, ag.derivs.as_mut()) {
                            let d = d.pixel_mut(i);
                            for j in 0..4 {
                                d[j] += tg.djst[k][j];
                            }
                        }
                    }
                }
            }
        }

        lap(&mut times.texture);

        // Interpolate.
        let n = grid.pixel_count();
        let mut duv = vec![[T::zero(); 2]; n];
        let mut djuv = vec![[T::zero(); 4]; n];
        let mut any_j = false;
        let mut attributes = Vec::with_capacity(inp.attributes.len());
        for (a, ag) in inp.attributes.iter().zip(&attr_grads) {
            let g = interpolate_backward(
                a.values,
                a.idx,
                grid,
                &ag.values,
                ag.derivs.as_ref(),
                a.diff_channels,
            )?;
            for i in 0..n {
                for k in 0..2 {
                    duv[i][k] += g.duv[i][k];
                }
                for k in 0..4 {
                    djuv[i][k] += g.djuv[i][k];
                }
            }
            any_j |= ag.derivs.is_some();
            attributes.push(g.attrs);
        }
        lap(&mut times.interpolate);

        // Rasterize.
        let rg = rasterize_backward(inp.verts, inp.idx, grid, &duv, any_j.then_some(&djuv[..]))?;
        positions.add_assign(&rg);
        lap(&mut times.rasterize);

        self.backward_times = times;
        Ok(RenderGrad {
            positions,
            attributes,
            textures,
            params: sg.params,
            clear,
        })
    }
}
