//! Joint recovery of an environment map and Phong parameters on known
//! geometry.

use diffrast_core::pipeline::{
    reflection_vectors, transform_clip, AttributeInput, Mat4, Phong, RenderGraph, RenderInputs,
};
use diffrast_core::texture::{build_pyramid, max_levels, MipTexture};
use diffrast_core::{
    build_edge_adjacency, AttributeSet, EdgeAdjacency, ImageGrid, IndexBuffer, Real, Viewport,
};
use diffrast_optim::{l2_image_loss, AdamConfig, AdamState};
use rand::Rng;

use super::earth::{texel_directions, wave_sum, waves};
use super::{atlas, seeded};
use crate::camera::{random_direction, random_view, view_projection};
use crate::config::ExperimentConfig;
use crate::log::ConvergenceLog;
use crate::mesh::{bumpy_sphere, vertex_normals};
use crate::output::Output;
use crate::{psnr, ExpError, Result};

const CAMERA_DISTANCE: f64 = 3.5;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhongTruth {
    pub ks: f64,
    pub shininess: f64,
}

impl Default for PhongTruth {
    fn default() -> Self {
        Self {
            ks: 0.6,
            shininess: 24.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EnvPhongOutcome {
    /// Per iteration: loss and BRDF parameter error
    /// `sqrt((ks - ks*)^2 + (ln s - ln s*)^2)`.
    pub log: ConvergenceLog,
    /// Per iteration: loss and environment-map PSNR (dB).
    pub psnr_log: ConvergenceLog,
    pub texture: Vec<f32>,
    pub size: usize,
    pub ks: f64,
    pub shininess: f64,
    pub truth: PhongTruth,
}

impl EnvPhongOutcome {
    pub fn texture_atlas(&self) -> ImageGrid<f32> {
        atlas(&self.texture, self.size, 3)
    }
}

/// Sky-like environment: blue gradient above a dark ground, soft clouds
/// and two bright sun spots.
pub fn sky_texture(size: usize, seed: u64) -> Vec<f32> {
    let mut rng = seeded(seed, 2 << 32);
    let clouds = waves(12, 3.0, 12.0, &mut rng);
    let suns = [random_direction(&mut rng), random_direction(&mut rng)];
    let mut out = Vec::with_capacity(6 * size * size * 3);
    for d in texel_directions(size) {
        let up = d[1];
        let mut rgb = if up > 0.0 {
            [0.35 - 0.2 * up, 0.55 - 0.15 * up, 0.9]
        } else {
            [0.3 + 0.1 * up, 0.25 + 0.1 * up, 0.2]
        };
        let c = (0.5 + 0.5 * wave_sum(&clouds, d)).clamp(0.0, 1.0) * 0.25;
        for v in &mut rgb {
            *v += c;
        }
        for s in &suns {
            let cos = d[0] * s[0] + d[1] * s[1] + d[2] * s[2];
            let glow = (40.0 * (cos - 1.0)).exp();
            rgb = rgb.map(|v| v + 0.8 * glow);
        }
        out.extend(rgb.map(|v| v.clamp(0.0, 1.0) as f32));
    }
    out
}

/// Known geometry for the experiment.
pub struct EnvPhongScene<T> {
    points: Vec<[T; 3]>,
    normals: Vec<[T; 3]>,
    idx: IndexBuffer,
    adjacency: EdgeAdjacency,
    viewport: Viewport,
}

/// Camera and light of one view.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EnvView<T> {
    pub mvp: Mat4<T>,
    pub eye: [T; 3],
    pub light: [T; 3],
}

impl<T: Real> EnvView<T> {
    pub fn random(rng: &mut impl Rng) -> Self {
        let (view, eye) = random_view(CAMERA_DISTANCE, rng);
        let mvp = view_projection(&view, 0.5, 10.0);
        let lit = |v: [f64; 3]| v.map(T::lit);
        Self {
            mvp: mvp.map(lit_row),
            eye: lit(eye),
            light: lit(random_direction(rng)),
        }
    }
}

fn lit_row<T: Real>(r: [f64; 4]) -> [T; 4] {
    r.map(T::lit)
}

impl<T: Real> EnvPhongScene<T> {
    pub fn new(resolution: usize) -> Result<Self> {
        let (pos, tris) = bumpy_sphere(3);
        let normals = vertex_normals(&pos, &tris);
        let conv = |v: &[[f32; 3]]| -> Vec<[T; 3]> { v.iter().map(|p| p.map(|c| T::lit(c as f64))).collect() };
        let idx = IndexBuffer::new(tris);
        Ok(Self {
            points: conv(&pos),
            normals: conv(&normals),
            adjacency: build_edge_adjacency(&idx),
            idx,
            viewport: Viewport::new(resolution, resolution)?,
        })
    }

    pub fn viewport(&self) -> Viewport {
        self.viewport
    }

    fn reflections(&self, eye: [T; 3]) -> Result<AttributeSet<T>> {
        let view: Vec<[T; 3]> = self
            .points
            .iter()
            .map(|p| std::array::from_fn(|k| eye[k] - p[k]))
            .collect();
        let r = reflection_vectors(&self.normals, &view)?;
        Ok(AttributeSet::new(3, r.into_iter().flatten().collect())?)
    }

    /// Renders and, when `reference` is given, returns the L2 loss with its
    /// gradients on the base texels and on `[ks, shininess]`.
    pub fn evaluate(
        &self,
        graph: &mut RenderGraph<T>,
        view: &EnvView<T>,
        env: &MipTexture<T>,
        ks: T,
        shininess: T,
        reference: Option<&ImageGrid<T>>,
    ) -> Result<(ImageGrid<T>, Option<(f64, Vec<T>, [T; 2])>)> {
        let verts = transform_clip(&self.points, &view.mvp)?;
        let refl = self.reflections(view.eye)?;
        let inp = RenderInputs {
            verts: &verts,
            idx: &self.idx,
            adjacency: Some(&self.adjacency),
            attributes: vec![AttributeInput {
                values: &refl,
                idx: &self.idx,
                diff_channels: &[0, 1, 2],
            }],
            textures: vec![env],
            clear: vec![T::zero(); 3],
        };
        let shader = Phong::new(0, 3, view.light, ks, shininess);
        let img = graph.render(&inp, &shader)?;
        let Some(reference) = reference else {
            return Ok((img, None));
        };
        let (loss, dl) = l2_image_loss(&img, reference)?;
        let mut g = graph.render_backward(&inp, &shader, &dl)?;
        let params = [g.params[0], g.params[1]];
        Ok((img, Some((loss, g.textures.swap_remove(0), params))))
    }
}

/// L2 loss of one view against the render with `truth` parameters and the
/// same environment, plus its gradients; the path checked by finite
/// differences.
pub fn envphong_loss<T: Real>(
    scene: &EnvPhongScene<T>,
    view: &EnvView<T>,
    env: &MipTexture<T>,
    params: [T; 2],
    truth: [T; 2],
) -> Result<(f64, Vec<T>, [T; 2])> {
    let mut graph = RenderGraph::new(scene.viewport());
    let (reference, _) = scene.evaluate(&mut graph, view, env, truth[0], truth[1], None)?;
    let (_, g) = scene.evaluate(&mut graph, view, env, params[0], params[1], Some(&reference))?;
    Ok(g.expect("reference supplied"))
}

fn param_error(ks: f64, ln_sh: f64, truth: PhongTruth) -> f64 {
    ((ks - truth.ks).powi(2) + (ln_sh - truth.shininess.ln()).powi(2)).sqrt()
}

pub fn run_envphong(cfg: &ExperimentConfig, out: &Output) -> Result<EnvPhongOutcome> {
    run_envphong_with(cfg, PhongTruth::default(), out)
}

/// The environment map starts uniformly gray, `ks` uniform in `[0.1, 1]`
/// and the shininess log-uniform in `[2, 64]`. The shininess is optimized
/// in log space and `ks` is kept non-negative.
pub fn run_envphong_with(cfg: &ExperimentConfig, truth: PhongTruth, out: &Output) -> Result<EnvPhongOutcome> {
    cfg.validate()?;
    let size = cfg.texture_size;
    let levels = if cfg.mipmaps { max_levels(size) } else { 1 };
    let gt = sky_texture(size, cfg.seed);
    let gt_tex = build_pyramid(gt.clone(), size, 6, 3, levels)?;
    let scene = EnvPhongScene::<f32>::new(cfg.resolution)?;
    let mut rng = seeded(cfg.seed, 0);

    let mut texels = vec![0.5f32; gt.len()];
    let mut brdf = [
        rng.random_range(0.1..1.0f32),
        rng.random_range(2f32.ln()..64f32.ln()),
    ];
    let [lr0, lr1] = cfg.lr;
    let mut adam_tex = AdamState::new(texels.len(), AdamConfig::with_lr(lr0));
    let mut adam_brdf = AdamState::new(2, AdamConfig::with_lr(lr0));
    let (mut ref_graph, mut graph) = (RenderGraph::new(scene.viewport()), RenderGraph::new(scene.viewport()));
    let mut log = ConvergenceLog::default();
    let mut psnr_log = ConvergenceLog::default();

    for t in 0..cfg.iterations {
        let lr = diffrast_optim::exp_schedule(lr0, lr1, t, cfg.iterations);
        adam_tex.set_lr(lr);
        adam_brdf.set_lr(lr);
        let view = EnvView::<f32>::random(&mut rng);
        let (reference, _) = scene.evaluate(
            &mut ref_graph,
            &view,
            &gt_tex,
            truth.ks as f32,
            truth.shininess as f32,
            None,
        )?;
        let tex = build_pyramid(texels.clone(), size, 6, 3, levels)?;
        let sh = brdf[1].exp();
        let (img, g) = scene.evaluate(&mut graph, &view, &tex, brdf[0], sh, Some(&reference))?;
        let (loss, dtex, dparams) = g.expect("reference supplied");
        if !loss.is_finite() {
            return Err(ExpError::Diverged { iteration: t });
        }
        out.frame(t, &img)?;
        adam_tex.step(&mut texels, &dtex)?;
        adam_brdf.step(&mut brdf, &[dparams[0], dparams[1] * sh])?;
        brdf[0] = brdf[0].max(0.0);
        log.push(t + 1, loss, param_error(brdf[0] as f64, brdf[1] as f64, truth))?;
        psnr_log.push(t + 1, loss, psnr(&texels, &gt))?;
    }
    Ok(EnvPhongOutcome {
        log,
        psnr_log,
        texture: texels,
        size,
        ks: brdf[0] as f64,
        shininess: (brdf[1] as f64).exp(),
        truth,
    })
}
