//! Cube pose recovery from a single image, with noise-based search.

use diffrast_core::pipeline::{look_at, PassThrough, RenderGraph};
use diffrast_core::{AttributeSet, ImageGrid, Viewport};
use diffrast_optim::quat::{mul, octahedral_group, to_matrix_backward, Quat};
use diffrast_optim::{exp_schedule, l2_image_loss, AdamConfig, AdamState, PoseQuat};
use rand::Rng;

use super::{seeded, ColoredMesh};
use crate::camera::{projection, to_f32};
use crate::config::{ExperimentConfig, PoseMode};
use crate::log::ConvergenceLog;
use crate::mesh::{cube_face_slots, cube_positions, cube_triangles};
use crate::output::Output;
use crate::{ExpError, Result};

const FACE_COLORS: [[f32; 3]; 6] = [
    [1.0, 0.0, 0.0],
    [0.0, 1.0, 1.0],
    [0.0, 1.0, 0.0],
    [1.0, 0.0, 1.0],
    [0.0, 0.0, 1.0],
    [1.0, 1.0, 0.0],
];

#[derive(Debug, Clone, PartialEq)]
pub struct TrialOutcome {
    pub truth: Quat,
    pub init: Quat,
    pub pose: Quat,
    pub loss: f64,
    pub error_deg: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PoseOutcome {
    /// One record per trial: final loss and pose error in degrees.
    pub log: ConvergenceLog,
    pub trials: Vec<TrialOutcome>,
    pub mean_error_deg: f64,
}

/// Cube with one flat color per face: positions, triangles, face-slot
/// triangles and the six colors.
pub fn pose_cube() -> (Vec<[f32; 3]>, Vec<[u32; 3]>, Vec<[u32; 3]>, [[f32; 3]; 6]) {
    (cube_positions(), cube_triangles(), cube_face_slots(), FACE_COLORS)
}

struct PoseScene {
    mesh: ColoredMesh,
    points: Vec<[f32; 3]>,
    colors: AttributeSet<f32>,
    mvp: [[f32; 4]; 4],
    graph: RenderGraph<f32>,
    shader: PassThrough,
}

impl PoseScene {
    fn new(resolution: usize) -> Result<Self> {
        let (points, tris, slots, colors) = pose_cube();
        let view = look_at([0.0, 0.0, 3.0], [0.0; 3], [0.0, 1.0, 0.0]);
        let mvp = diffrast_core::pipeline::mat_mul(&projection(0.5, 10.0), &view);
        Ok(Self {
            mesh: ColoredMesh::new(tris, slots),
            points,
            colors: AttributeSet::from_rows(&colors)?,
            mvp: to_f32(&mvp),
            graph: RenderGraph::new(Viewport::new(resolution, resolution)?),
            shader: PassThrough::attribute(0, 3),
        })
    }

    fn posed(&self, q: &PoseQuat) -> Vec<[f32; 3]> {
        let r = q.matrix();
        self.points
            .iter()
            .map(|p| std::array::from_fn(|i| (0..3).map(|j| r[i][j] * p[j] as f64).sum::<f64>() as f32))
            .collect()
    }

    fn render(&mut self, q: &PoseQuat) -> Result<ImageGrid<f32>> {
        let pts = self.posed(q);
        Ok(self.mesh.render(&mut self.graph, &self.shader, &pts, &self.colors, &self.mvp)?.0)
    }

    fn loss(&mut self, q: &PoseQuat, reference: &ImageGrid<f32>) -> Result<f64> {
        Ok(l2_image_loss(&self.render(q)?, reference)?.0)
    }

    /// Loss and its gradient with respect to the quaternion components.
    fn loss_grad(&mut self, q: &PoseQuat, reference: &ImageGrid<f32>) -> Result<(f64, Quat)> {
        let pts = self.posed(q);
        let (img, verts) = self.mesh.render(&mut self.graph, &self.shader, &pts, &self.colors, &self.mvp)?;
        let (loss, dl) = l2_image_loss(&img, reference)?;
        let (dp, _) =
            self.mesh
                .backward(&mut self.graph, &self.shader, &pts, &self.colors, &verts, &self.mvp, &dl)?;
        let mut dr = [[0.0f64; 3]; 3];
        for (g, p) in dp.iter().zip(&self.points) {
            for i in 0..3 {
                for j in 0..3 {
                    dr[i][j] += g[i] as f64 * p[j] as f64;
                }
            }
        }
        Ok((loss, to_matrix_backward(q.get(), &dr)))
    }
}

fn check_finite(loss: f64, iteration: usize) -> Result<()> {
    if loss.is_finite() {
        Ok(())
    } else {
        Err(ExpError::Diverged { iteration })
    }
}

/// Adam from `q` for `steps` iterations. With `noise`, each gradient is
/// evaluated at the perturbed pose `q n`, where `n` is the identity
/// slerped toward a random rotation by the scheduled strength, and pulled
/// back to `q` through the composition.
fn adam_phase(
    scene: &mut PoseScene,
    reference: &ImageGrid<f32>,
    cfg: &ExperimentConfig,
    mut q: PoseQuat,
    steps: usize,
    noise: Option<[f64; 2]>,
    rng: &mut impl Rng,
) -> Result<PoseQuat> {
    let [lr0, lr1] = cfg.lr;
    let mut adam = AdamState::new(4, AdamConfig::with_lr(lr0));
    for t in 0..steps {
        adam.set_lr(exp_schedule(lr0, lr1, t, steps));
        let g = match noise {
            Some([n0, n1]) => {
                let n = PoseQuat::identity().pose_noise(exp_schedule(n0, n1, t, steps), rng);
                let (loss, g) = scene.loss_grad(&PoseQuat::new(mul(q.get(), n.get())), reference)?;
                check_finite(loss, t)?;
                // mul(., n) is linear; column j is the image of basis e_j.
                std::array::from_fn(|j| {
                    let mut e = [0.0; 4];
                    e[j] = 1.0;
                    let col = mul(e, n.get());
                    (0..4).map(|k| col[k] * g[k]).sum::<f64>()
                })
            }
            None => {
                let (loss, g) = scene.loss_grad(&q, reference)?;
                check_finite(loss, t)?;
                g
            }
        };
        let mut p = q.get();
        adam.step(&mut p, &g)?;
        q = PoseQuat::new(p);
    }
    Ok(q)
}

/// One trial from a given initial pose toward `truth`.
pub fn run_pose_trial(
    cfg: &ExperimentConfig,
    truth: PoseQuat,
    init: PoseQuat,
    rng: &mut impl Rng,
) -> Result<TrialOutcome> {
    let mut scene = PoseScene::new(cfg.resolution)?;
    let reference = scene.render(&truth)?;
    let n = cfg.iterations;
    let pose = match cfg.mode {
        PoseMode::Plain => adam_phase(&mut scene, &reference, cfg, init, n, Some(cfg.noise), rng)?,
        PoseMode::TwoPhase | PoseMode::Symmetry => {
            let group = octahedral_group();
            let search = n / 2;
            let [n0, n1] = cfg.noise;
            let mut best = init;
            let mut best_loss = scene.loss(&best, &reference)?;
            check_finite(best_loss, 0)?;
            for t in 0..search {
                let mut prop = best.pose_noise(exp_schedule(n0, n1, t, search), rng);
                if cfg.mode == PoseMode::Symmetry {
                    prop = prop.symmetry_noise(&group, rng);
                }
                let l = scene.loss(&prop, &reference)?;
                check_finite(l, t)?;
                if l < best_loss {
                    best = prop;
                    best_loss = l;
                }
            }
            adam_phase(&mut scene, &reference, cfg, best, n - search, None, rng)?
        }
    };
    let loss = scene.loss(&pose, &reference)?;
    Ok(TrialOutcome {
        truth: truth.get(),
        init: init.get(),
        pose: pose.get(),
        loss,
        error_deg: pose.angle_to(&truth).to_degrees(),
    })
}

/// `cfg.trials` independent trials with uniformly random true and initial
/// poses; trial `k` draws from its own stream of the configured seed.
pub fn run_pose(cfg: &ExperimentConfig, out: &Output) -> Result<PoseOutcome> {
    cfg.validate()?;
    let mut log = ConvergenceLog::default();
    let mut trials = Vec::with_capacity(cfg.trials);
    for k in 0..cfg.trials {
        let mut rng = seeded(cfg.seed, k as u64);
        let truth = PoseQuat::random(&mut rng);
        let init = PoseQuat::random(&mut rng);
        let t = run_pose_trial(cfg, truth, init, &mut rng)?;
        if out.wants_frame(k) {
            let mut scene = PoseScene::new(cfg.resolution)?;
            let mut img = scene.render(&PoseQuat::new(t.pose))?;
            let reference = scene.render(&truth)?;
            // Optimized pose next to the reference.
            img = side_by_side(&img, &reference);
            out.frame(k, &img)?;
        }
        log.push(k, t.loss, t.error_deg)?;
        trials.push(t);
    }
    let mean_error_deg = trials.iter().map(|t| t.error_deg).sum::<f64>() / trials.len() as f64;
    Ok(PoseOutcome {
        log,
        trials,
        mean_error_deg,
    })
}

fn side_by_side(a: &ImageGrid<f32>, b: &ImageGrid<f32>) -> ImageGrid<f32> {
    let (w, h, c) = (a.width(), a.height(), a.channels());
    let mut out = ImageGrid::zeros(2 * w, h, c);
    for y in 0..h {
        for x in 0..w {
            let d = (y * 2 * w + x) * c;
            out.data_mut()[d..d + c].copy_from_slice(a.at(x, y));
            out.data_mut()[d + w * c..d + w * c + c].copy_from_slice(b.at(x, y));
        }
    }
    out
}
