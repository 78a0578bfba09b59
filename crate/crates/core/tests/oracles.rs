//! Primitives against independent brute-force references.

use diffrast_core::antialias::antialias_forward;
use diffrast_core::raster::rasterize_forward;
use diffrast_core::texture::{build_pyramid, flatten_gradients, max_levels, texture_forward};
use diffrast_core::texture::{AddressMode, TexLookup, TexSampleRequest};
use diffrast_core::{build_edge_adjacency, ClipVertexBuffer, ImageGrid, IndexBuffer, Viewport};
use diffrast_testkit::fd::dot;
use diffrast_testkit::oracle::{self, brute_rasterize, half_plane_coverage, plane_barycentrics};
use diffrast_testkit::scene::random_vec;
use diffrast_testkit::{rng, RandomScene};
use rand::Rng;

/// Oracle and rasterizer use different barycentric formulas, so continuous
/// outputs agree to rounding only.
const CONTINUOUS_TOL: f64 = 1e-9;

#[test]
fn rasterizer_matches_brute_force_on_random_scenes() {
    let vp = Viewport::new(32, 32).unwrap();
    for seed in 0..100 {
        let mut r = rng(seed);
        let n = r.random_range(1..=8);
        let scene = RandomScene::generate(&mut r, n, seed % 3 == 0);
        let grid = rasterize_forward(&scene.verts(), &scene.idx(), vp).unwrap();
        let o = brute_rasterize(&scene.positions, &scene.triangles, 32, 32);
        assert_eq!(grid.ids(), &o.ids[..], "scene {seed}: triangle IDs differ");
        for i in 0..vp.pixel_count() {
            if o.ids[i] == 0 {
                continue;
            }
            for k in 0..2 {
                assert!((grid.uv()[i][k] - o.uv[i][k]).abs() < CONTINUOUS_TOL, "scene {seed} pixel {i}");
            }
            assert!((grid.zw()[i] - o.zw[i]).abs() < CONTINUOUS_TOL);
        }
    }
}

#[test]
fn barycentric_jacobian_matches_screen_differences() {
    let vp = Viewport::new(20, 16).unwrap();
    let h = 1e-4;
    for seed in 0..20 {
        let mut r = rng(1000 + seed);
        let scene = RandomScene::generate(&mut r, 3, true);
        let grid = rasterize_forward(&scene.verts(), &scene.idx(), vp).unwrap();
        for i in 0..vp.pixel_count() {
            let Some(t) = grid.triangle(i) else { continue };
            let v = scene.triangles[t].map(|k| scene.positions[k as usize]);
            let (px, py) = ((i % 20) as f64 + 0.5, (i / 20) as f64 + 0.5);
            let ndc = |x: f64, y: f64| (2.0 * x / 20.0 - 1.0, 1.0 - 2.0 * y / 16.0);
            let bary = |x: f64, y: f64| {
                let (nx, ny) = ndc(x, y);
                plane_barycentrics(v, nx, ny).unwrap()
            };
            let (bxp, bxm) = (bary(px + h, py), bary(px - h, py));
            let (byp, bym) = (bary(px, py + h), bary(px, py - h));
            let fd = [
                (bxp[0] - bxm[0]) / (2.0 * h),
                (byp[0] - bym[0]) / (2.0 * h),
                (bxp[1] - bxm[1]) / (2.0 * h),
                (byp[1] - bym[1]) / (2.0 * h),
            ];
            for k in 0..4 {
                let a = grid.juv()[i][k];
                assert!((a - fd[k]).abs() <= 1e-6 + 1e-5 * fd[k].abs(), "J_uv[{k}] {a} vs {}", fd[k]);
            }
        }
    }
}

#[test]
fn trilinear_sampler_matches_scalar_reference() {
    for seed in 0..10 {
        let mut r = rng(2000 + seed);
        let (size, faces, channels) = (8, 1 + 5 * (seed as usize % 2), 3);
        let levels = max_levels(size);
        let wrap = seed % 3 == 0;
        let base = random_vec(&mut r, faces * size * size * channels, 0.0, 1.0);
        let tex = build_pyramid(base.clone(), size, faces, channels, levels)
            .unwrap()
            .with_address_mode(if wrap { AddressMode::Wrap } else { AddressMode::Clamp });
        let lookups: Vec<_> = (0..64)
            .map(|_| {
                let sc = r.random_range(-6.0..2.0f64).exp2() / size as f64;
                Some(TexLookup {
                    face: r.random_range(0..faces) as u8,
                    st: [r.random_range(-0.2..1.2), r.random_range(-0.2..1.2)],
                    jst: std::array::from_fn(|_| sc * r.random_range(-1.0..1.0)),
                })
            })
            .collect();
        let req = TexSampleRequest::new(8, 8, lookups.clone()).unwrap();
        let (img, _) = texture_forward(&tex, &req).unwrap();
        let pyr = oracle::pyramid(&base, size, faces, channels, levels);
        for (l_built, l_ref) in tex.levels().iter().zip(&pyr) {
            for (a, b) in l_built.iter().zip(l_ref) {
                assert!((a - b).abs() < 1e-14);
            }
        }
        for (i, l) in lookups.iter().enumerate() {
            let l = l.unwrap();
            let want = oracle::trilinear(&pyr, size, channels, l.face as usize, l.st, l.jst, wrap);
            for c in 0..channels {
                assert!((img.pixel(i)[c] - want[c]).abs() < 1e-12, "lookup {i}");
            }
        }
    }
}

/// The adjoint identity `<P x, y> = <x, P^T y>` for pyramid construction
/// `P` and gradient flattening `P^T`.
#[test]
fn pyramid_adjoint_identity() {
    for seed in 0..10 {
        let mut r = rng(3000 + seed);
        let (size, faces, channels) = (16, 1 + 5 * (seed as usize % 2), 2);
        let levels = 1 + seed as usize % max_levels(size);
        let x = random_vec(&mut r, faces * size * size * channels, -1.0, 1.0);
        let tex = build_pyramid(x.clone(), size, faces, channels, levels).unwrap();
        let y: Vec<Vec<f64>> = tex
            .levels()
            .iter()
            .map(|l| random_vec(&mut r, l.len(), -1.0, 1.0))
            .collect();
        let lhs: f64 = tex.levels().iter().zip(&y).map(|(a, b)| dot(a, b)).sum();
        let rhs = dot(&x, &flatten_gradients(&y, size, faces, channels).unwrap());
        assert!((lhs - rhs).abs() <= 1e-6 * lhs.abs().max(rhs.abs()), "{lhs} vs {rhs}");
    }
}

#[test]
fn trilinear_samples_are_convex_combinations() {
    let mut r = rng(4000);
    let (size, faces, channels) = (8, 6, 1);
    let base = random_vec(&mut r, faces * size * size * channels, -3.0, 5.0);
    let (lo, hi) = base.iter().fold((f64::MAX, f64::MIN), |(a, b), &v| (a.min(v), b.max(v)));
    let tex = build_pyramid(base, size, faces, channels, max_levels(size)).unwrap();
    let n = 100_000;
    let lookups = (0..n)
        .map(|_| {
            let sc = r.random_range(-8.0..3.0f64).exp2() / size as f64;
            Some(TexLookup {
                face: r.random_range(0..faces) as u8,
                st: [r.random_range(-0.5..1.5), r.random_range(-0.5..1.5)],
                jst: std::array::from_fn(|_| sc * r.random_range(-1.0..1.0)),
            })
        })
        .collect();
    let (img, _) = texture_forward(&tex, &TexSampleRequest::new(1000, 100, lookups).unwrap()).unwrap();
    for &v in img.data() {
        assert!(v >= lo - 1e-12 && v <= hi + 1e-12);
    }
}

/// Blended coverage of a triangle whose only on-screen edge is `edge`,
/// with white inside and black outside.
fn coverage_image(positions: Vec<[f64; 4]>, w: usize, h: usize) -> (ImageGrid<f64>, ImageGrid<f64>) {
    let verts = ClipVertexBuffer::new(positions).unwrap();
    let idx = IndexBuffer::new(vec![[0, 1, 2]]);
    let grid = rasterize_forward(&verts, &idx, Viewport::new(w, h).unwrap()).unwrap();
    let color = ImageGrid::from_data(w, h, 1, grid.ids().iter().map(|&i| f64::from(i.min(1))).collect()).unwrap();
    let (out, _) = antialias_forward(&color, &grid, &verts, &idx, &build_edge_adjacency(&idx)).unwrap();
    (out, color)
}

#[test]
fn axis_aligned_edges_blend_to_exact_coverage() {
    let (w, h) = (10usize, 8usize);
    for &edge in &[3.7, 4.2, 5.5, 6.01] {
        // Vertical edge at screen x = edge, triangle to its left.
        let nx = 2.0 * edge / w as f64 - 1.0;
        let (out, _) = coverage_image(vec![[nx, -4.0, 0.0, 1.0], [nx, 4.0, 0.0, 1.0], [-9.0, 0.0, 0.0, 1.0]], w, h);
        for y in 0..h {
            for x in 0..w {
                let exact = half_plane_coverage(-1.0, 0.0, edge, x as f64, y as f64);
                assert!((out.at(x, y)[0] - exact).abs() < 1e-12, "x={x} edge={edge}");
            }
        }
        // Horizontal edge at screen y = edge, triangle above it.
        let ny = 1.0 - 2.0 * edge / h as f64;
        let (out, _) = coverage_image(vec![[-4.0, ny, 0.0, 1.0], [4.0, ny, 0.0, 1.0], [0.0, 9.0, 0.0, 1.0]], w, h);
        for y in 0..h {
            for x in 0..w {
                let exact = half_plane_coverage(0.0, -1.0, edge, x as f64, y as f64);
                assert!((out.at(x, y)[0] - exact).abs() < 1e-12, "y={y} edge={edge}");
            }
        }
    }
}

#[test]
fn diagonal_edge_coverage_error_is_bounded() {
    let (w, h) = (16usize, 16usize);
    // Screen line x - y = 0.5 + 8 passes exactly between pixel centers.
    let c = 8.5;
    let to_ndc = |x: f64, y: f64| [2.0 * x / w as f64 - 1.0, 1.0 - 2.0 * y / h as f64, 0.0, 1.0];
    let (out, _) = coverage_image(vec![to_ndc(-40.0 + c, -40.0), to_ndc(40.0 + c, 40.0), to_ndc(-60.0, 60.0)], w, h);
    let mut worst: f64 = 0.0;
    for y in 1..h - 1 {
        for x in 1..w - 1 {
            // Inside is x - y < c.
            let exact = half_plane_coverage(-1.0, 1.0, c, x as f64, y as f64);
            worst = worst.max((out.at(x, y)[0] - exact).abs());
        }
    }
    assert!(worst <= 0.125 + 1e-12, "worst coverage error {worst}");
}
