//! Invariants over randomized inputs.

use diffrast_core::antialias::antialias_forward;
use diffrast_core::interpolate::interpolate_forward;
use diffrast_core::raster::rasterize_forward;
use diffrast_core::{build_edge_adjacency, AttributeSet, ClipVertexBuffer, ImageGrid, IndexBuffer, Viewport};
use diffrast_testkit::oracle::edge_incidence;
use diffrast_testkit::{rng, RandomScene};
use proptest::prelude::*;

fn scene(seed: u64, tris: usize, behind: bool) -> RandomScene {
    RandomScene::generate(&mut rng(seed), tris, behind)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn barycentrics_and_depth_in_range(seed in any::<u64>(), tris in 1usize..8, behind in any::<bool>()) {
        let s = scene(seed, tris, behind);
        let g = rasterize_forward(&s.verts(), &s.idx(), Viewport::new(24, 20).unwrap()).unwrap();
        for i in 0..g.pixel_count() {
            if g.ids()[i] == 0 {
                prop_assert_eq!(g.uv()[i], [0.0, 0.0]);
                continue;
            }
            let [u, v] = g.uv()[i];
            prop_assert!(u >= -1e-12 && v >= -1e-12 && u + v <= 1.0 + 1e-12);
            prop_assert!(g.zw()[i].abs() <= 1.0 + 1e-12);
        }
    }

    #[test]
    fn constant_attributes_interpolate_to_constants(seed in any::<u64>(), c in -5.0f64..5.0) {
        let s = scene(seed, 4, true);
        let g = rasterize_forward(&s.verts(), &s.idx(), Viewport::new(16, 16).unwrap()).unwrap();
        let a = AttributeSet::new(1, vec![c; s.positions.len()]).unwrap();
        let img = interpolate_forward(&a, &s.idx(), &g, &[0]).unwrap();
        let d = img.derivs.unwrap();
        for i in 0..g.pixel_count() {
            let want = if g.ids()[i] == 0 { 0.0 } else { c };
            prop_assert!((img.values.pixel(i)[0] - want).abs() < 1e-9);
            prop_assert!(d.pixel(i).iter().all(|v| v.abs() < 1e-9));
        }
    }

    #[test]
    fn antialias_only_touches_event_pixels(seed in any::<u64>(), tris in 1usize..6) {
        let s = scene(seed, tris, false);
        let (verts, idx) = (s.verts(), s.idx());
        let g = rasterize_forward(&verts, &idx, Viewport::new(20, 20).unwrap()).unwrap();
        let mut r = rng(seed ^ 0x5eed);
        let color = ImageGrid::from_data(20, 20, 2, diffrast_testkit::scene::random_vec(&mut r, 800, 0.0, 1.0)).unwrap();
        let (out, log) = antialias_forward(&color, &g, &verts, &idx, &build_edge_adjacency(&idx)).unwrap();
        let mut touched = vec![false; 400];
        for e in &log.events {
            prop_assert!(e.alpha >= 0.0 && e.alpha <= 0.5 + 1e-12);
            touched[e.target_source().0] = true;
        }
        for i in 0..400 {
            if !touched[i] {
                prop_assert_eq!(out.pixel(i), color.pixel(i));
            }
        }
    }

    #[test]
    fn adjacency_matches_exhaustive_enumeration(seed in any::<u64>(), tris in 1usize..10) {
        // Shared vertices so edges repeat.
        let mut r = rng(seed);
        let n = 6u32;
        let t: Vec<[u32; 3]> = (0..tris)
            .filter_map(|_| {
                use rand::Rng;
                let a = r.random_range(0..n);
                let b = r.random_range(0..n);
                let c = r.random_range(0..n);
                (a != b && b != c && a != c).then_some([a, b, c])
            })
            .collect();
        let adj = build_edge_adjacency(&IndexBuffer::new(t.clone()));
        let want = edge_incidence(&t);
        prop_assert_eq!(adj.edge_count(), want.len());
        for ((a, b), users) in want {
            let mut got = adj.incident(a, b).to_vec();
            got.sort_unstable();
            prop_assert_eq!(got, users);
        }
    }
}

#[test]
fn closed_cube_edges_have_two_triangles() {
    let quads: [[u32; 4]; 6] = [[0, 2, 3, 1], [4, 5, 7, 6], [0, 1, 5, 4], [2, 6, 7, 3], [0, 4, 6, 2], [1, 3, 7, 5]];
    let tris: Vec<[u32; 3]> = quads.iter().flat_map(|q| [[q[0], q[1], q[2]], [q[0], q[2], q[3]]]).collect();
    let adj = build_edge_adjacency(&IndexBuffer::new(tris.clone()));
    let want = edge_incidence(&tris);
    assert_eq!(want.len(), 18);
    assert_eq!(adj.edge_count(), 18);
    for ((a, b), users) in want {
        assert_eq!(users.len(), 2);
        assert_eq!(adj.incident(a, b).len(), 2);
    }
}

/// Left half-plane triangle with its right edge at screen `x = edge`.
fn half_plane(edge: f64, w: usize) -> ClipVertexBuffer<f64> {
    let nx = 2.0 * edge / w as f64 - 1.0;
    ClipVertexBuffer::new(vec![[nx, -4.0, 0.0, 1.0], [nx, 4.0, 0.0, 1.0], [-9.0, 0.0, 0.0, 1.0]]).unwrap()
}

/// Pixel (4, 1) of a sweep where the edge slides from the segment midpoint
/// (x = 4.0) over pixel 4's center and on; returns (raw, antialiased).
fn sweep(edge: f64) -> (f64, f64) {
    let (w, h) = (8, 3);
    let verts = half_plane(edge, w);
    let idx = IndexBuffer::new(vec![[0, 1, 2]]);
    let g = rasterize_forward(&verts, &idx, Viewport::new(w, h).unwrap()).unwrap();
    let color = ImageGrid::from_data(w, h, 1, g.ids().iter().map(|&i| f64::from(i.min(1))).collect()).unwrap();
    let (out, _) = antialias_forward(&color, &g, &verts, &idx, &build_edge_adjacency(&idx)).unwrap();
    (color.at(4, 1)[0], out.at(4, 1)[0])
}

#[test]
fn antialiased_color_is_continuous_where_raw_color_steps() {
    let steps = 2000;
    let (lo, hi) = (3.6, 5.4);
    let mut prev = sweep(lo);
    let (mut raw_jump, mut aa_jump): (f64, f64) = (0.0, 0.0);
    for k in 1..=steps {
        let cur = sweep(lo + (hi - lo) * k as f64 / steps as f64);
        raw_jump = raw_jump.max((cur.0 - prev.0).abs());
        aa_jump = aa_jump.max((cur.1 - prev.1).abs());
        prev = cur;
    }
    let dx = (hi - lo) / steps as f64;
    assert_eq!(raw_jump, 1.0);
    assert!(aa_jump <= dx + 1e-9, "antialiased jump {aa_jump} exceeds step {dx}");
}
