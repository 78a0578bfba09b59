//! Learning a cube-map texture on a UV-less sphere from supersampled
//! references, with and without mipmapping.

use diffrast_core::pipeline::{face_direction, PassThrough, RenderGraph, RenderInputs, TexAddress};
use diffrast_core::pipeline::{transform_clip, AttributeInput};
use diffrast_core::texture::{build_pyramid, max_levels, MipTexture};
use diffrast_core::{build_edge_adjacency, AttributeSet, EdgeAdjacency, ImageGrid, IndexBuffer, Viewport};
use diffrast_optim::{exp_schedule, l2_image_loss, AdamConfig, AdamState};
use rand::Rng;

use super::{atlas, flat3, seeded};
use crate::camera::{random_view, to_f32, view_projection};
use crate::config::ExperimentConfig;
use crate::log::ConvergenceLog;
use crate::mesh::icosphere;
use crate::output::Output;
use crate::{psnr, ExpError, Result};

const SPHERE_SUBDIVISIONS: usize = 4;

#[derive(Debug, Clone, PartialEq)]
pub struct EarthOutcome {
    pub mipmaps: bool,
    /// Per iteration: loss and texture PSNR (dB) against the ground truth.
    pub log: ConvergenceLog,
    /// Learned base texels, face-major, RGB.
    pub texture: Vec<f32>,
    pub size: usize,
    pub initial_psnr: f64,
    pub final_psnr: f64,
}

impl EarthOutcome {
    pub fn texture_atlas(&self) -> ImageGrid<f32> {
        atlas(&self.texture, self.size, 3)
    }
}

/// Plane waves `sin(k·d + phase)` with log-uniform frequencies `|k|`.
pub(crate) fn waves(n: usize, lo: f64, hi: f64, rng: &mut impl Rng) -> Vec<([f64; 3], f64)> {
    (0..n)
        .map(|_| {
            let d = crate::camera::random_direction(rng);
            let k = lo * (hi / lo).powf(rng.random::<f64>());
            (d.map(|c| c * k), rng.random::<f64>() * std::f64::consts::TAU)
        })
        .collect()
}

pub(crate) fn wave_sum(w: &[([f64; 3], f64)], d: [f64; 3]) -> f64 {
    w.iter()
        .map(|(k, ph)| (k[0] * d[0] + k[1] * d[1] + k[2] * d[2] + ph).sin())
        .sum::<f64>()
        / (w.len() as f64).sqrt()
}

/// Unit directions through the texel centers of a cube map, face-major.
pub(crate) fn texel_directions(size: usize) -> impl Iterator<Item = [f64; 3]> {
    (0..6).flat_map(move |face| {
        (0..size * size).map(move |i| {
            let s = ((i % size) as f64 + 0.5) / size as f64;
            let t = ((i / size) as f64 + 0.5) / size as f64;
            let d = face_direction(face, s, t);
            let n = (d[0] * d[0] + d[1] * d[1] + d[2] * d[2]).sqrt();
            d.map(|c| c / n)
        })
    })
}

/// Procedural planet sampled at cube-map texel centers: continents with
/// fractal coastlines, multi-octave relief on land and sea, and polar caps.
/// Octave amplitudes fall off roughly as `1/f`, like natural imagery.
pub fn earth_texture(size: usize, seed: u64) -> Vec<f32> {
    let mut rng = seeded(seed, 1 << 32);
    let octaves: Vec<_> = [(1.5, 4.0, 8), (4.0, 16.0, 16), (16.0, 64.0, 32), (64.0, 256.0, 64)]
        .into_iter()
        .map(|(lo, hi, n)| waves(n, lo, hi, &mut rng))
        .collect();
    let relief = waves(64, 8.0, 256.0, &mut rng);
    let mut out = Vec::with_capacity(6 * size * size * 3);
    for d in texel_directions(size) {
        let c: f64 = octaves
            .iter()
            .zip([1.0, 0.5, 0.25, 0.125])
            .map(|(w, a)| a * wave_sum(w, d))
            .sum();
        let r = wave_sum(&relief, d);
        let rgb = if d[1].abs() > 0.88 + 0.04 * r {
            [0.9, 0.92, 0.95]
        } else if c < 0.0 {
            let depth = (-c).min(1.0);
            [0.05 + 0.04 * r, 0.25 - 0.15 * depth, 0.5 - 0.2 * depth]
        } else {
            let dry = (0.5 + 0.5 * r).clamp(0.0, 1.0);
            [0.15 + 0.5 * dry, 0.45 - 0.1 * dry, 0.1 + 0.2 * dry]
        };
        out.extend(rgb.map(|v: f64| v.clamp(0.0, 1.0) as f32));
    }
    out
}

struct Sphere {
    points: Vec<[f32; 3]>,
    dirs: AttributeSet<f32>,
    idx: IndexBuffer,
    adjacency: EdgeAdjacency,
}

impl Sphere {
    fn new() -> Result<Self> {
        let (points, tris) = icosphere(SPHERE_SUBDIVISIONS);
        let idx = IndexBuffer::new(tris);
        Ok(Self {
            dirs: AttributeSet::new(3, flat3(&points))?,
            adjacency: build_edge_adjacency(&idx),
            points,
            idx,
        })
    }

    fn inputs<'a>(
        &'a self,
        verts: &'a diffrast_core::ClipVertexBuffer<f32>,
        tex: &'a MipTexture<f32>,
    ) -> RenderInputs<'a, f32> {
        RenderInputs {
            verts,
            idx: &self.idx,
            adjacency: Some(&self.adjacency),
            attributes: vec![AttributeInput {
                values: &self.dirs,
                idx: &self.idx,
                diff_channels: &[0, 1, 2],
            }],
            textures: vec![tex],
            clear: vec![0.0; 3],
        }
    }
}

/// Box filter by an integer factor.
fn box_downsample(img: &ImageGrid<f32>, k: usize) -> ImageGrid<f32> {
    let (w, h, c) = (img.width() / k, img.height() / k, img.channels());
    let mut out = ImageGrid::zeros(w, h, c);
    let norm = 1.0 / (k * k) as f32;
    for y in 0..h {
        for x in 0..w {
            let dst = (y * w + x) * c;
            for yy in 0..k {
                for xx in 0..k {
                    let p = img.at(x * k + xx, y * k + yy);
                    for ch in 0..c {
                        out.data_mut()[dst + ch] += p[ch] * norm;
                    }
                }
            }
        }
    }
    out
}

struct Variant {
    mipmaps: bool,
    texels: Vec<f32>,
    adam: AdamState,
    graph: RenderGraph<f32>,
    log: ConvergenceLog,
    initial_psnr: f64,
}

fn earth_runs(cfg: &ExperimentConfig, variants: &[bool], out: &Output) -> Result<Vec<EarthOutcome>> {
    cfg.validate()?;
    let size = cfg.texture_size;
    let gt = earth_texture(size, cfg.seed);
    let gt_tex = build_pyramid(gt.clone(), size, 6, 3, max_levels(size))?;
    let sphere = Sphere::new()?;
    let shader = PassThrough::texture(0, 3, TexAddress::Cubemap { attr: 0 });
    let ss = cfg.supersample;
    let mut ref_graph = RenderGraph::new(Viewport::new(cfg.resolution * ss, cfg.resolution * ss)?);
    let vp = Viewport::new(cfg.resolution, cfg.resolution)?;
    let [lr0, lr1] = cfg.lr;
    let adam_cfg = AdamConfig {
        beta2: 0.99,
        ..AdamConfig::with_lr(lr0)
    };
    let init = vec![0.5f32; gt.len()];
    let mut runs: Vec<Variant> = variants
        .iter()
        .map(|&mipmaps| Variant {
            mipmaps,
            adam: AdamState::new(init.len(), adam_cfg),
            graph: RenderGraph::new(vp),
            log: ConvergenceLog::default(),
            initial_psnr: psnr(&init, &gt),
            texels: init.clone(),
        })
        .collect();

    for run in &mut runs {
        // Baseline before any update; no loss has been evaluated yet.
        run.log.push(0, f64::NAN, run.initial_psnr)?;
    }

    let mut rng = seeded(cfg.seed, 0);
    let [d0, d1] = cfg.distance;
    for t in 0..cfg.iterations {
        let dist = d0 * (d1 / d0).powf(rng.random::<f64>());
        let (view, _) = random_view(dist, &mut rng);
        let near = (0.5 * (dist - 1.0)).max(0.05);
        let mvp = to_f32(&view_projection(&view, near, dist + 2.0));
        let verts = transform_clip(&sphere.points, &mvp)?;
        let hi = ref_graph.render(&sphere.inputs(&verts, &gt_tex), &shader)?;
        let reference = if ss > 1 { box_downsample(&hi, ss) } else { hi };

        for (vi, run) in runs.iter_mut().enumerate() {
            run.adam.set_lr(exp_schedule(lr0, lr1, t, cfg.iterations));
            let levels = if run.mipmaps { max_levels(size) } else { 1 };
            let tex = build_pyramid(run.texels.clone(), size, 6, 3, levels)?;
            let inp = sphere.inputs(&verts, &tex);
            let img = run.graph.render(&inp, &shader)?;
            let (loss, dl) = l2_image_loss(&img, &reference)?;
            if !loss.is_finite() {
                return Err(ExpError::Diverged { iteration: t });
            }
            if vi == 0 {
                out.frame(t, &img)?;
            }
            let g = run.graph.render_backward(&inp, &shader, &dl)?;
            run.adam.step(&mut run.texels, &g.textures[0])?;
            run.log.push(t + 1, loss, psnr(&run.texels, &gt))?;
        }
    }
    Ok(runs
        .into_iter()
        .map(|r| EarthOutcome {
            mipmaps: r.mipmaps,
            final_psnr: psnr(&r.texels, &gt),
            initial_psnr: r.initial_psnr,
            log: r.log,
            texture: r.texels,
            size,
        })
        .collect())
}

/// Single run with `cfg.mipmaps`.
pub fn run_earth(cfg: &ExperimentConfig, out: &Output) -> Result<EarthOutcome> {
    Ok(earth_runs(cfg, &[cfg.mipmaps], out)?.remove(0))
}

/// Mipmapped and non-mipmapped runs sharing references, seeds and
/// schedule; returned in that order.
pub fn run_earth_pair(cfg: &ExperimentConfig, out: &Output) -> Result<(EarthOutcome, EarthOutcome)> {
    let mut v = earth_runs(cfg, &[true, false], out)?;
    let off = v.pop().unwrap();
    Ok((v.pop().unwrap(), off))
}
