//! Unit quaternions `(w, x, y, z)` for pose fitting.

use rand::Rng;
use rand_distr::StandardNormal;

pub type Quat = [f64; 4];

pub const IDENTITY: Quat = [1.0, 0.0, 0.0, 0.0];

pub fn mul(a: Quat, b: Quat) -> Quat {
    [
        a[0] * b[0] - a[1] * b[1] - a[2] * b[2] - a[3] * b[3],
        a[0] * b[1] + a[1] * b[0] + a[2] * b[3] - a[3] * b[2],
        a[0] * b[2] - a[1] * b[3] + a[2] * b[0] + a[3] * b[1],
        a[0] * b[3] + a[1] * b[2] - a[2] * b[1] + a[3] * b[0],
    ]
}

pub fn dot(a: Quat, b: Quat) -> f64 {
    a.iter().zip(&b).map(|(x, y)| x * y).sum()
}

pub fn normalize(q: Quat) -> Quat {
    let n = dot(q, q).sqrt();
    if n > 0.0 {
        q.map(|c| c / n)
    } else {
        IDENTITY
    }
}

/// Rotation angle between the orientations of unit quaternions, in radians.
pub fn geodesic_angle(a: Quat, b: Quat) -> f64 {
    2.0 * dot(normalize(a), normalize(b)).abs().min(1.0).acos()
}

/// Rotation matrix of `q / |q|`.
pub fn to_matrix(q: Quat) -> [[f64; 3]; 3] {
    let [w, x, y, z] = normalize(q);
    [
        [1.0 - 2.0 * (y * y + z * z), 2.0 * (x * y - w * z), 2.0 * (x * z + w * y)],
        [2.0 * (x * y + w * z), 1.0 - 2.0 * (x * x + z * z), 2.0 * (y * z - w * x)],
        [2.0 * (x * z - w * y), 2.0 * (y * z + w * x), 1.0 - 2.0 * (x * x + y * y)],
    ]
}

/// Gradient of [`to_matrix`] with respect to the unnormalized `q`.
pub fn to_matrix_backward(q: Quat, dr: &[[f64; 3]; 3]) -> Quat {
    let len = dot(q, q).sqrt();
    let [w, x, y, z] = q.map(|c| c / len);
    let g = |i: usize, j: usize| 2.0 * dr[i][j];
    let gw = g(0, 2) * y - g(0, 1) * z + g(1, 0) * z - g(1, 2) * x - g(2, 0) * y + g(2, 1) * x;
    let gx = g(0, 1) * y + g(0, 2) * z + g(1, 0) * y - 2.0 * g(1, 1) * x - g(1, 2) * w
        + g(2, 0) * z + g(2, 1) * w - 2.0 * g(2, 2) * x;
    let gy = -2.0 * g(0, 0) * y + g(0, 1) * x + g(0, 2) * w + g(1, 0) * x + g(1, 2) * z
        - g(2, 0) * w + g(2, 1) * z - 2.0 * g(2, 2) * y;
    let gz = -2.0 * g(0, 0) * z - g(0, 1) * w + g(0, 2) * x + g(1, 0) * w - 2.0 * g(1, 1) * z
        + g(1, 2) * y + g(2, 0) * x + g(2, 1) * y;
    let gu = [gw, gx, gy, gz];
    let u = [w, x, y, z];
    let d = dot(u, gu);
    std::array::from_fn(|k| (gu[k] - u[k] * d) / len)
}

/// Spherical interpolation along the shorter arc.
pub fn slerp(a: Quat, b: Quat, t: f64) -> Quat {
    let mut b = b;
    let mut c = dot(a, b);
    if c < 0.0 {
        b = b.map(|v| -v);
        c = -c;
    }
    if c > 1.0 - 1e-12 {
        return normalize(std::array::from_fn(|k| a[k] + t * (b[k] - a[k])));
    }
    let theta = c.acos();
    let s = theta.sin();
    let (wa, wb) = (((1.0 - t) * theta).sin() / s, (t * theta).sin() / s);
    normalize(std::array::from_fn(|k| wa * a[k] + wb * b[k]))
}

/// Uniformly distributed unit quaternion (normalized 4-D Gaussian).
pub fn random_uniform(rng: &mut impl Rng) -> Quat {
    loop {
        let q: Quat = std::array::from_fn(|_| rng.sample(StandardNormal));
        let n = dot(q, q).sqrt();
        if n > 1e-9 {
            return q.map(|c| c / n);
        }
    }
}

/// The 24 rotations mapping the axis-aligned cube onto itself, one
/// quaternion per rotation with the first nonzero component positive.
pub fn octahedral_group() -> Vec<Quat> {
    let h = 0.5;
    let r = std::f64::consts::FRAC_1_SQRT_2;
    let mut all: Vec<Quat> = Vec::new();
    for i in 0..4 {
        let mut q = [0.0; 4];
        q[i] = 1.0;
        all.push(q);
    }
    for signs in 0..16u32 {
        all.push(std::array::from_fn(|k| if signs >> k & 1 == 1 { -h } else { h }));
    }
    for i in 0..4 {
        for j in i + 1..4 {
            for s in [1.0, -1.0] {
                let mut q = [0.0; 4];
                q[i] = r;
                q[j] = s * r;
                all.push(q);
            }
        }
    }
    let canon = |q: Quat| {
        let first = q.iter().find(|v| v.abs() > 1e-12).copied().unwrap_or(1.0);
        if first < 0.0 {
            q.map(|v| -v)
        } else {
            q
        }
    };
    let mut out: Vec<Quat> = Vec::new();
    for q in all.into_iter().map(canon) {
        if !out.iter().any(|p| dot(*p, q) > 1.0 - 1e-9) {
            out.push(q);
        }
    }
    out
}

/// Quaternion restricted to unit length after every update.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PoseQuat(Quat);

impl PoseQuat {
    pub fn new(q: Quat) -> Self {
        Self(normalize(q))
    }

    pub fn identity() -> Self {
        Self(IDENTITY)
    }

    pub fn random(rng: &mut impl Rng) -> Self {
        Self(random_uniform(rng))
    }

    pub fn get(&self) -> Quat {
        self.0
    }

    pub fn matrix(&self) -> [[f64; 3]; 3] {
        to_matrix(self.0)
    }

    /// Applies an additive update and renormalizes.
    pub fn update(&mut self, delta: Quat) {
        self.0 = normalize(std::array::from_fn(|k| self.0[k] + delta[k]));
    }

    pub fn angle_to(&self, other: &PoseQuat) -> f64 {
        geodesic_angle(self.0, other.0)
    }

    /// `slerp(q, u, strength)` toward a uniformly random `u`.
    pub fn pose_noise(&self, strength: f64, rng: &mut impl Rng) -> Self {
        let u = random_uniform(rng);
        if strength <= 0.0 {
            return *self;
        }
        Self(slerp(self.0, u, strength.min(1.0)))
    }

    /// `q g` for a uniformly drawn cube symmetry `g`: the rendered cube
    /// looks the same up to face colors.
    pub fn symmetry_noise(&self, group: &[Quat], rng: &mut impl Rng) -> Self {
        let g = group[rng.random_range(0..group.len())];
        Self(normalize(mul(self.0, g)))
    }
}
