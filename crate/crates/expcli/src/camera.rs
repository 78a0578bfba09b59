//! Cameras for the experiments.

use diffrast_core::pipeline::geometry::translation;
use diffrast_core::pipeline::{look_at, mat_mul, perspective, Mat4};
use diffrast_optim::quat::{random_uniform, to_matrix};
use rand::Rng;

/// `tan` of the half vertical field of view.
pub const TAN_HALF_FOV: f64 = 0.4;

pub fn projection(near: f64, far: f64) -> Mat4<f64> {
    perspective(2.0 * TAN_HALF_FOV.atan(), 1.0, near, far)
}

/// View transform from a uniformly random orientation: the eye lies
/// uniformly on the sphere of radius `distance` around the origin and the
/// up vector is uniformly rolled about the view axis.
pub fn random_view(distance: f64, rng: &mut impl Rng) -> (Mat4<f64>, [f64; 3]) {
    let r = to_matrix(random_uniform(rng));
    let eye = [r[0][2], r[1][2], r[2][2]].map(|c| c * distance);
    let up = [r[0][1], r[1][1], r[2][1]];
    (look_at(eye, [0.0; 3], up), eye)
}

/// [`random_view`] followed by a camera-space translation uniform in
/// `[-jitter, jitter]^3`, which varies the sub-pixel placement of the
/// target between views.
pub fn random_view_jittered(distance: f64, jitter: f64, rng: &mut impl Rng) -> (Mat4<f64>, [f64; 3]) {
    let (view, eye) = random_view(distance, rng);
    if jitter == 0.0 {
        return (view, eye);
    }
    let t: [f64; 3] = std::array::from_fn(|_| rng.random_range(-jitter..=jitter));
    (mat_mul(&translation(t), &view), eye)
}

/// Projection times view.
pub fn view_projection(view: &Mat4<f64>, near: f64, far: f64) -> Mat4<f64> {
    mat_mul(&projection(near, far), view)
}

pub fn to_f32(m: &Mat4<f64>) -> Mat4<f32> {
    m.map(|row| row.map(|v| v as f32))
}

/// Uniformly random unit vector.
pub fn random_direction(rng: &mut impl Rng) -> [f64; 3] {
    let r = to_matrix(random_uniform(rng));
    [r[0][0], r[1][0], r[2][0]]
}
