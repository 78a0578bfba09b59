//! Seeded random instances.

use diffrast_core::{ClipVertexBuffer, IndexBuffer};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Independent triangles in clip space.
#[derive(Debug, Clone)]
pub struct RandomScene {
    pub positions: Vec<[f64; 4]>,
    pub triangles: Vec<[u32; 3]>,
}

impl RandomScene {
    /// `tris` triangles with unshared vertices, `w` in `[0.5, 3]`, NDC
    /// `x, y` in `[-1.2, 1.2]` and depth in `[-0.95, 0.95]`. With
    /// `behind_camera`, roughly one vertex in eight gets negative `w`.
    pub fn generate(rng: &mut impl Rng, tris: usize, behind_camera: bool) -> Self {
        let mut positions = Vec::with_capacity(3 * tris);
        for _ in 0..3 * tris {
            let mut w: f64 = rng.random_range(0.5..3.0);
            if behind_camera && rng.random_range(0..8) == 0 {
                w = -w;
            }
            let s = w.abs();
            positions.push([
                rng.random_range(-1.2..1.2) * s,
                rng.random_range(-1.2..1.2) * s,
                rng.random_range(-0.95..0.95) * s,
                w,
            ]);
        }
        let triangles = (0..tris as u32).map(|t| [3 * t, 3 * t + 1, 3 * t + 2]).collect();
        Self {
            positions,
            triangles,
        }
    }

    pub fn verts(&self) -> ClipVertexBuffer<f64> {
        ClipVertexBuffer::new(self.positions.clone()).expect("finite positions")
    }

    pub fn idx(&self) -> IndexBuffer {
        IndexBuffer::new(self.triangles.clone())
    }

    pub fn flat(&self) -> Vec<f64> {
        self.positions.iter().flatten().copied().collect()
    }
}

pub fn unflatten4(x: &[f64]) -> Vec<[f64; 4]> {
    x.chunks_exact(4).map(|c| [c[0], c[1], c[2], c[3]]).collect()
}

pub fn random_vec(rng: &mut impl Rng, n: usize, lo: f64, hi: f64) -> Vec<f64> {
    (0..n).map(|_| rng.random_range(lo..hi)).collect()
}
