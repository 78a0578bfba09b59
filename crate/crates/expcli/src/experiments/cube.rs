//! Vertex position and color fitting of a cube from random views.

use diffrast_core::pipeline::{PassThrough, RenderGraph};
use diffrast_core::{AttributeSet, Viewport};
use diffrast_optim::{exp_schedule, l2_image_loss, AdamConfig, AdamState};
use rand::Rng;

use super::{flat3, random_colors, seeded, unflat3, ColoredMesh};
use crate::camera::{random_view_jittered, to_f32, view_projection};
use crate::config::{Coloring, ConfigError, ExperimentConfig};
use crate::io::ObjMesh;
use crate::log::ConvergenceLog;
use crate::mesh::{cube_corner_slots, cube_positions, cube_triangles};
use crate::output::Output;
use crate::{ExpError, Result};

/// Final mean vertex error above which a run counts as having folded into
/// an irrecoverable self-intersecting state.
pub const FAILURE_THRESHOLD: f64 = 0.3;

const CAMERA_DISTANCE: f64 = 3.5;
const VIEW_JITTER: f64 = 0.25;

#[derive(Debug, Clone, PartialEq)]
pub struct CubeOutcome {
    pub log: ConvergenceLog,
    pub truth: Vec<[f32; 3]>,
    pub positions: Vec<[f32; 3]>,
    pub colors: Vec<[f32; 3]>,
    pub final_error: f64,
}

impl CubeOutcome {
    pub fn self_intersected(&self) -> bool {
        self.final_error > FAILURE_THRESHOLD
    }

    pub fn to_obj(&self) -> ObjMesh {
        ObjMesh {
            positions: self.positions.clone(),
            pos_idx: cube_triangles(),
            ..ObjMesh::default()
        }
    }
}

/// Mean distance between corresponding vertices.
pub fn vertex_error(a: &[[f32; 3]], b: &[[f32; 3]]) -> f64 {
    let total: f64 = a
        .iter()
        .zip(b)
        .map(|(p, q)| (0..3).map(|k| (p[k] as f64 - q[k] as f64).powi(2)).sum::<f64>().sqrt())
        .sum();
    total / a.len() as f64
}

/// A perturbation of 0 starts from the reference itself, colors included.
pub fn run_cube(cfg: &ExperimentConfig, out: &Output) -> Result<CubeOutcome> {
    cfg.validate()?;
    if !cfg.resolution.is_power_of_two() {
        return Err(ConfigError(format!("cube resolution must be a power of two, got {}", cfg.resolution)).into());
    }
    let mut rng = seeded(cfg.seed, 0);
    let truth = cube_positions();
    let (slots, color_tris) = match cfg.coloring {
        Coloring::Continuous => (8, cube_triangles()),
        Coloring::Discontinuous => (24, cube_corner_slots()),
    };
    let mesh = ColoredMesh::new(cube_triangles(), color_tris);
    let ref_colors = AttributeSet::from_rows(&random_colors(slots, &mut rng))?;

    let p = cfg.perturbation as f32;
    let (pos0, col0) = if p == 0.0 {
        (truth.clone(), ref_colors.values().to_vec())
    } else {
        let pos: Vec<[f32; 3]> = truth
            .iter()
            .map(|v| v.map(|c| c + rng.random_range(-p..=p)))
            .collect();
        (pos, flat3(&random_colors(slots, &mut rng)))
    };
    let np = 3 * truth.len();
    let mut params = flat3(&pos0);
    params.extend(col0);

    let [lr0, lr1] = cfg.lr;
    let mut adam = AdamState::new(params.len(), AdamConfig::with_lr(lr0));
    let vp = Viewport::new(cfg.resolution, cfg.resolution)?;
    let (mut ref_graph, mut graph) = (RenderGraph::new(vp), RenderGraph::new(vp));
    let shader = PassThrough::attribute(0, 3);
    let mut log = ConvergenceLog::default();

    for t in 0..cfg.iterations {
        adam.set_lr(exp_schedule(lr0, lr1, t, cfg.iterations));
        let (view, _) = random_view_jittered(CAMERA_DISTANCE, VIEW_JITTER, &mut rng);
        let mvp = to_f32(&view_projection(&view, 0.5, 10.0));
        let (reference, _) = mesh.render(&mut ref_graph, &shader, &truth, &ref_colors, &mvp)?;

        let pts = unflat3(&params[..np]);
        let colors = AttributeSet::new(3, params[np..].to_vec())?;
        let (img, verts) = mesh.render(&mut graph, &shader, &pts, &colors, &mvp)?;
        let (loss, dl) = l2_image_loss(&img, &reference)?;
        if !loss.is_finite() {
            return Err(ExpError::Diverged { iteration: t });
        }
        out.frame(t, &img)?;
        let (dp, dc) = mesh.backward(&mut graph, &shader, &pts, &colors, &verts, &mvp, &dl)?;
        let mut grads = flat3(&dp);
        grads.extend_from_slice(dc.as_slice());
        adam.step(&mut params, &grads)?;
        log.push(t + 1, loss, vertex_error(&unflat3(&params[..np]), &truth))?;
    }

    let positions = unflat3(&params[..np]);
    let final_error = vertex_error(&positions, &truth);
    Ok(CubeOutcome {
        log,
        truth,
        positions,
        colors: unflat3(&params[np..]),
        final_error,
    })
}
