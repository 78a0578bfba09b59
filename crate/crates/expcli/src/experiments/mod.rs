//! The four inverse-rendering experiments and the artifact-writing driver.

mod cube;
mod earth;
mod envphong;
mod pose;

pub use cube::{run_cube, vertex_error, CubeOutcome, FAILURE_THRESHOLD};
pub use earth::{earth_texture, run_earth, run_earth_pair, EarthOutcome};
pub use envphong::{
    envphong_loss, run_envphong, run_envphong_with, sky_texture, EnvPhongOutcome, EnvPhongScene, EnvView,
    PhongTruth,
};
pub use pose::{pose_cube, run_pose, run_pose_trial, PoseOutcome, TrialOutcome};

use diffrast_core::pipeline::{
    transform_clip, transform_clip_backward, AttributeInput, Mat4, RenderGraph, RenderInputs,
    Shader,
};
use diffrast_core::{
    AttributeSet, ClipVertexBuffer, EdgeAdjacency, GradBuffer, ImageGrid, IndexBuffer,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::config::{Experiment, ExperimentConfig};
use crate::io::{write_csv, write_json, write_obj, write_png, BitDepth};
use crate::log::ConvergenceLog;
use crate::output::Output;
use crate::Result;

pub(crate) fn seeded(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut r = ChaCha8Rng::seed_from_u64(seed);
    r.set_stream(stream);
    r
}

pub(crate) fn random_colors(n: usize, rng: &mut impl Rng) -> Vec<[f32; 3]> {
    (0..n).map(|_| std::array::from_fn(|_| rng.random::<f32>())).collect()
}

/// A triangle mesh with per-corner colors indexed separately from
/// positions.
pub(crate) struct ColoredMesh {
    pub idx: IndexBuffer,
    pub adjacency: EdgeAdjacency,
    pub color_idx: IndexBuffer,
}

impl ColoredMesh {
    pub fn new(tris: Vec<[u32; 3]>, color_tris: Vec<[u32; 3]>) -> Self {
        let idx = IndexBuffer::new(tris);
        Self {
            adjacency: diffrast_core::build_edge_adjacency(&idx),
            idx,
            color_idx: IndexBuffer::new(color_tris),
        }
    }

    fn inputs<'a>(&'a self, verts: &'a ClipVertexBuffer<f32>, colors: &'a AttributeSet<f32>) -> RenderInputs<'a, f32> {
        RenderInputs {
            verts,
            idx: &self.idx,
            adjacency: Some(&self.adjacency),
            attributes: vec![AttributeInput {
                values: colors,
                idx: &self.color_idx,
                diff_channels: &[],
            }],
            textures: vec![],
            clear: vec![0.0; 3],
        }
    }

    pub fn render(
        &self,
        graph: &mut RenderGraph<f32>,
        shader: &dyn Shader<f32>,
        points: &[[f32; 3]],
        colors: &AttributeSet<f32>,
        mvp: &Mat4<f32>,
    ) -> Result<(ImageGrid<f32>, ClipVertexBuffer<f32>)> {
        let verts = transform_clip(points, mvp)?;
        let img = graph.render(&self.inputs(&verts, colors), shader)?;
        Ok((img, verts))
    }

    /// Gradients on object-space points and on colors for the last render.
    #[allow(clippy::too_many_arguments)]
    pub fn backward(
        &self,
        graph: &mut RenderGraph<f32>,
        shader: &dyn Shader<f32>,
        points: &[[f32; 3]],
        colors: &AttributeSet<f32>,
        verts: &ClipVertexBuffer<f32>,
        mvp: &Mat4<f32>,
        dl: &ImageGrid<f32>,
    ) -> Result<(Vec<[f32; 3]>, GradBuffer<f32>)> {
        let mut g = graph.render_backward(&self.inputs(verts, colors), shader, dl)?;
        let (dp, _) = transform_clip_backward(points, mvp, &g.positions.to_vec4())?;
        Ok((dp, g.attributes.swap_remove(0)))
    }
}

pub(crate) fn flat3(v: &[[f32; 3]]) -> Vec<f32> {
    v.iter().flatten().copied().collect()
}

pub(crate) fn unflat3(v: &[f32]) -> Vec<[f32; 3]> {
    v.chunks_exact(3).map(|c| [c[0], c[1], c[2]]).collect()
}

/// What [`run`] produced, for reporting.
#[derive(Debug, Clone, PartialEq)]
pub struct RunSummary {
    pub log: ConvergenceLog,
    /// Final value of the experiment metric.
    pub metric: f64,
}

/// Runs the configured experiment and writes `config.json`, `log.csv`,
/// periodic frames and the final artifacts under `cfg.out_dir`.
pub fn run(cfg: &ExperimentConfig) -> Result<RunSummary> {
    cfg.validate()?;
    let out = Output::new(cfg.out_dir.as_deref(), cfg.snapshot_every)?;
    if let Some(p) = out.path("config.json") {
        write_json(cfg, &p)?;
    }
    let log = match cfg.experiment {
        Experiment::Cube => {
            let r = run_cube(cfg, &out)?;
            if let Some(p) = out.path("mesh.obj") {
                write_obj(&r.to_obj(), &p)?;
            }
            r.log
        }
        Experiment::Earth => {
            let r = run_earth(cfg, &out)?;
            if let Some(p) = out.path("texture.png") {
                write_png(&r.texture_atlas(), &p, BitDepth::Sixteen, true)?;
            }
            r.log
        }
        Experiment::Envphong => {
            let r = run_envphong(cfg, &out)?;
            if let Some(p) = out.path("texture.png") {
                write_png(&r.texture_atlas(), &p, BitDepth::Sixteen, true)?;
            }
            if let Some(p) = out.path("psnr.csv") {
                write_csv(&r.psnr_log, &p)?;
            }
            if let Some(p) = out.path("brdf.json") {
                write_json(&serde_json::json!({"ks": r.ks, "shininess": r.shininess}), &p)?;
            }
            r.log
        }
        Experiment::Pose => {
            let r = run_pose(cfg, &out)?;
            if let Some(p) = out.path("poses.json") {
                let poses: Vec<_> = r
                    .trials
                    .iter()
                    .map(|t| serde_json::json!({"truth": t.truth, "final": t.pose, "error_deg": t.error_deg}))
                    .collect();
                write_json(&poses, &p)?;
            }
            r.log
        }
    };
    if let Some(p) = out.path("log.csv") {
        write_csv(&log, &p)?;
    }
    let metric = log.last().map_or(f64::NAN, |r| r.metric);
    Ok(RunSummary { log, metric })
}

/// Faces of a cube map laid out in a horizontal strip.
pub(crate) fn atlas(texels: &[f32], size: usize, channels: usize) -> ImageGrid<f32> {
    let mut img = ImageGrid::zeros(6 * size, size, channels);
    for f in 0..6 {
        for y in 0..size {
            for x in 0..size {
                let src = ((f * size + y) * size + x) * channels;
                let dst = (y * 6 * size + f * size + x) * channels;
                img.data_mut()[dst..dst + channels].copy_from_slice(&texels[src..src + channels]);
            }
        }
    }
    img
}
