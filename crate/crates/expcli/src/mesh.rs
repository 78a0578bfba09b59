//! Procedural test meshes.

use std::collections::HashMap;

/// Corners of the cube `[-1/2, 1/2]^3`; bit `k` of the index selects the
/// sign of axis `k`.
pub fn cube_positions() -> Vec<[f32; 3]> {
    (0..8)
        .map(|i| std::array::from_fn(|k| if i >> k & 1 == 1 { 0.5 } else { -0.5 }))
        .collect()
}

/// Faces as corner quads, counter-clockwise seen from outside, ordered
/// -x, +x, -y, +y, -z, +z.
pub const CUBE_QUADS: [[u32; 4]; 6] = [
    [0, 4, 6, 2],
    [1, 3, 7, 5],
    [0, 1, 5, 4],
    [2, 6, 7, 3],
    [0, 2, 3, 1],
    [4, 5, 7, 6],
];

pub fn cube_triangles() -> Vec<[u32; 3]> {
    CUBE_QUADS
        .iter()
        .flat_map(|q| [[q[0], q[1], q[2]], [q[0], q[2], q[3]]])
        .collect()
}

/// Triangles indexing one slot per face corner (24 slots), matching
/// [`cube_triangles`] triangle for triangle.
pub fn cube_corner_slots() -> Vec<[u32; 3]> {
    (0..6u32)
        .flat_map(|f| {
            let b = 4 * f;
            [[b, b + 1, b + 2], [b, b + 2, b + 3]]
        })
        .collect()
}

/// Triangles indexing one slot per face (6 slots).
pub fn cube_face_slots() -> Vec<[u32; 3]> {
    (0..6u32).flat_map(|f| [[f; 3], [f; 3]]).collect()
}

/// Unit icosphere after `subdivisions` rounds of 4-way splitting.
pub fn icosphere(subdivisions: usize) -> (Vec<[f32; 3]>, Vec<[u32; 3]>) {
    let t = (1.0 + 5f64.sqrt()) / 2.0;
    let mut pos: Vec<[f64; 3]> = [
        [-1.0, t, 0.0],
        [1.0, t, 0.0],
        [-1.0, -t, 0.0],
        [1.0, -t, 0.0],
        [0.0, -1.0, t],
        [0.0, 1.0, t],
        [0.0, -1.0, -t],
        [0.0, 1.0, -t],
        [t, 0.0, -1.0],
        [t, 0.0, 1.0],
        [-t, 0.0, -1.0],
        [-t, 0.0, 1.0],
    ]
    .into_iter()
    .map(unit)
    .collect();
    let mut tris: Vec<[u32; 3]> = vec![
        [0, 11, 5],
        [0, 5, 1],
        [0, 1, 7],
        [0, 7, 10],
        [0, 10, 11],
        [1, 5, 9],
        [5, 11, 4],
        [11, 10, 2],
        [10, 7, 6],
        [7, 1, 8],
        [3, 9, 4],
        [3, 4, 2],
        [3, 2, 6],
        [3, 6, 8],
        [3, 8, 9],
        [4, 9, 5],
        [2, 4, 11],
        [6, 2, 10],
        [8, 6, 7],
        [9, 8, 1],
    ];
    for _ in 0..subdivisions {
        let mut mid: HashMap<(u32, u32), u32> = HashMap::new();
        let mut midpoint = |a: u32, b: u32, pos: &mut Vec<[f64; 3]>| {
            *mid.entry((a.min(b), a.max(b))).or_insert_with(|| {
                let (p, q) = (pos[a as usize], pos[b as usize]);
                pos.push(unit(std::array::from_fn(|k| p[k] + q[k])));
                pos.len() as u32 - 1
            })
        };
        tris = tris
            .iter()
            .flat_map(|&[a, b, c]| {
                let ab = midpoint(a, b, &mut pos);
                let bc = midpoint(b, c, &mut pos);
                let ca = midpoint(c, a, &mut pos);
                [[a, ab, ca], [b, bc, ab], [c, ca, bc], [ab, bc, ca]]
            })
            .collect();
    }
    (pos.into_iter().map(|p| p.map(|c| c as f32)).collect(), tris)
}

fn unit(p: [f64; 3]) -> [f64; 3] {
    let n = (p[0] * p[0] + p[1] * p[1] + p[2] * p[2]).sqrt();
    p.map(|c| c / n)
}

/// Icosphere with a smooth radial bump pattern, for reflection tests.
pub fn bumpy_sphere(subdivisions: usize) -> (Vec<[f32; 3]>, Vec<[u32; 3]>) {
    let (pos, tris) = icosphere(subdivisions);
    let pos = pos
        .into_iter()
        .map(|p| {
            let [x, y, z] = p.map(|c| c as f64);
            let r = 1.0 + 0.12 * (3.0 * x).sin() * (2.0 * y + 1.0).sin() + 0.08 * (4.0 * z + x).cos();
            [x, y, z].map(|c| (c * r) as f32)
        })
        .collect();
    (pos, tris)
}

/// Area-weighted vertex normals.
pub fn vertex_normals(pos: &[[f32; 3]], tris: &[[u32; 3]]) -> Vec<[f32; 3]> {
    let mut n = vec![[0.0f64; 3]; pos.len()];
    for t in tris {
        let [a, b, c] = t.map(|i| pos[i as usize].map(|v| v as f64));
        let e1: [f64; 3] = std::array::from_fn(|k| b[k] - a[k]);
        let e2: [f64; 3] = std::array::from_fn(|k| c[k] - a[k]);
        let cr = [
            e1[1] * e2[2] - e1[2] * e2[1],
            e1[2] * e2[0] - e1[0] * e2[2],
            e1[0] * e2[1] - e1[1] * e2[0],
        ];
        for &i in t {
            for k in 0..3 {
                n[i as usize][k] += cr[k];
            }
        }
    }
    n.into_iter().map(|v| unit(v).map(|c| c as f32)).collect()
}

/// `n x n` quad grid over `[-1, 1]^2` at `z = 0` with texcoords in `[0, 1]^2`.
pub fn grid_plane(n: usize) -> (Vec<[f32; 3]>, Vec<[f32; 2]>, Vec<[u32; 3]>) {
    let m = n + 1;
    let mut pos = Vec::with_capacity(m * m);
    let mut uv = Vec::with_capacity(m * m);
    for j in 0..m {
        for i in 0..m {
            let (u, v) = (i as f32 / n as f32, j as f32 / n as f32);
            pos.push([2.0 * u - 1.0, 2.0 * v - 1.0, 0.0]);
            uv.push([u, v]);
        }
    }
    let mut tris = Vec::with_capacity(2 * n * n);
    for j in 0..n {
        for i in 0..n {
            let a = (j * m + i) as u32;
            let (b, c, d) = (a + 1, a + m as u32, a + m as u32 + 1);
            tris.push([a, b, d]);
            tris.push([a, d, c]);
        }
    }
    (pos, uv, tris)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cube_faces_point_outward() {
        let p = cube_positions();
        for t in cube_triangles() {
            let [a, b, c] = t.map(|i| p[i as usize]);
            let e1: [f32; 3] = std::array::from_fn(|k| b[k] - a[k]);
            let e2: [f32; 3] = std::array::from_fn(|k| c[k] - a[k]);
            let n = [
                e1[1] * e2[2] - e1[2] * e2[1],
                e1[2] * e2[0] - e1[0] * e2[2],
                e1[0] * e2[1] - e1[1] * e2[0],
            ];
            let centroid: [f32; 3] = std::array::from_fn(|k| a[k] + b[k] + c[k]);
            assert!(n.iter().zip(&centroid).map(|(x, y)| x * y).sum::<f32>() > 0.0);
        }
    }

    #[test]
    fn icosphere_counts_and_radius() {
        let (p, t) = icosphere(2);
        assert_eq!(t.len(), 20 * 16);
        assert_eq!(p.len(), 10 * 16 + 2);
        assert!(p.iter().all(|v| ((v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt() - 1.0).abs() < 1e-6));
    }

    #[test]
    fn sphere_normals_are_radial() {
        let (p, t) = icosphere(3);
        for (n, v) in vertex_normals(&p, &t).iter().zip(&p) {
            let d: f32 = n.iter().zip(v).map(|(a, b)| a * b).sum();
            assert!(d > 0.999, "{d}");
        }
    }
}
