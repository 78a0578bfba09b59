//! Finite-difference gradient suite (f64), shared by the crate test targets
//! and the acceptance runner. Every check panics on mismatch.
//!
//! Each check perturbs inputs by `±H` and skips coordinates whose
//! perturbation changes the discrete structure (coverage, antialiasing
//! events or texture taps); at least half of the coordinates must survive.

use diffrast_core::antialias::{antialias_backward, antialias_forward};
use diffrast_core::interpolate::{interpolate_backward, interpolate_forward};
use diffrast_core::pipeline::{
    cubemap_lookup, cubemap_lookup_backward, look_at, mat_mul, perspective, reflection_vectors,
    reflection_vectors_backward, transform_clip, transform_clip_backward, AttributeInput, Mat4,
    PassThrough, RenderGraph, RenderInputs,
};
use diffrast_core::raster::{rasterize_backward, rasterize_forward};
use diffrast_core::texture::{build_pyramid, flatten_gradients, texture_backward, texture_forward};
use diffrast_core::texture::{TexLookup, TexSampleRequest};
use diffrast_core::{
    build_edge_adjacency, AttributeSet, ClipVertexBuffer, ImageGrid, IndexBuffer, Viewport,
};
use crate::fd::{assert_grad_close, central_diff, compare, dot};
use crate::scene::{random_vec, rng, unflatten4, RandomScene};
use diffrast_optim::deform::DeformationModel;
use diffrast_optim::quat::{to_matrix, to_matrix_backward};
use diffrast_optim::{highpass, highpass_transpose, l2_image_loss, LaplacianReg};
use nalgebra::DMatrix;
use rand::Rng;

const RTOL: f64 = 1e-3;
const ATOL: f64 = 1e-6;
const H: f64 = 1e-6;
const INSTANCES: u64 = 10;

/// Central differences over coordinates where `stable` holds on both sides.
/// Returns `(index, numeric)` pairs.
fn fd_stable<S: PartialEq>(
    x: &[f64],
    h: f64,
    mut eval: impl FnMut(&[f64]) -> (f64, S),
) -> Vec<(usize, f64)> {
    let (_, base) = eval(x);
    let mut x = x.to_vec();
    let mut out = Vec::new();
    for i in 0..x.len() {
        let x0 = x[i];
        x[i] = x0 + h;
        let (fp, sp) = eval(&x);
        x[i] = x0 - h;
        let (fm, sm) = eval(&x);
        x[i] = x0;
        if sp == base && sm == base {
            out.push((i, (fp - fm) / (2.0 * h)));
        }
    }
    out
}

fn check_subset(name: &str, analytic: &[f64], numeric: &[(usize, f64)], rtol: f64, atol: f64) {
    assert!(
        2 * numeric.len() >= analytic.len(),
        "{name}: only {} of {} coordinates were structurally stable",
        numeric.len(),
        analytic.len()
    );
    let a: Vec<f64> = numeric.iter().map(|&(i, _)| analytic[i]).collect();
    let n: Vec<f64> = numeric.iter().map(|&(_, v)| v).collect();
    let c = compare(&a, &n, rtol, atol);
    assert!(
        c.passed(),
        "{name}: coordinate {} analytic {} numeric {}",
        numeric[c.worst_index].0,
        c.analytic,
        c.numeric
    );
}

fn verts_of(x: &[f64]) -> ClipVertexBuffer<f64> {
    ClipVertexBuffer::new(unflatten4(x)).unwrap()
}

pub fn rasterize() {
    for seed in 0..INSTANCES {
        let mut r = rng(100 + seed);
        let scene = RandomScene::generate(&mut r, 1 + (seed as usize % 4), seed % 2 == 1);
        let idx = scene.idx();
        let vp = Viewport::new(16, 12).unwrap();
        let n = vp.pixel_count();
        let wu: Vec<[f64; 2]> = (0..n).map(|_| [r.random_range(-1.0..1.0), r.random_range(-1.0..1.0)]).collect();
        let wj: Vec<[f64; 4]> = (0..n)
            .map(|_| std::array::from_fn(|_| r.random_range(-0.1..0.1)))
            .collect();
        let loss = |x: &[f64]| {
            let g = rasterize_forward(&verts_of(x), &idx, vp).unwrap();
            let mut l = 0.0;
            for i in 0..n {
                if g.ids()[i] != 0 {
                    l += dot(&g.uv()[i], &wu[i]) + dot(&g.juv()[i], &wj[i]);
                }
            }
            (l, g.ids().to_vec())
        };
        let verts = scene.verts();
        let grid = rasterize_forward(&verts, &idx, vp).unwrap();
        if grid.covered_count() == 0 {
            continue;
        }
        let analytic = rasterize_backward(&verts, &idx, &grid, &wu, Some(&wj)).unwrap();
        let numeric = fd_stable(&scene.flat(), H, loss);
        check_subset("rasterize", analytic.as_slice(), &numeric, RTOL, ATOL);
    }
}

pub fn interpolate() {
    for seed in 0..INSTANCES {
        let mut r = rng(200 + seed);
        let scene = RandomScene::generate(&mut r, 1 + (seed as usize % 3), false);
        let idx = scene.idx();
        let vp = Viewport::new(12, 12).unwrap();
        let n = vp.pixel_count();
        let k = 3;
        let diff = [0usize, 2];
        let attrs0 = random_vec(&mut r, scene.positions.len() * k, -1.0, 1.0);
        let wa = random_vec(&mut r, n * k, -1.0, 1.0);
        let wd = random_vec(&mut r, n * 2 * diff.len(), -0.2, 0.2);
        let eval = |pos: &[f64], attrs: &[f64]| {
            let verts = verts_of(pos);
            let g = rasterize_forward(&verts, &idx, vp).unwrap();
            let a = AttributeSet::new(k, attrs.to_vec()).unwrap();
            let img = interpolate_forward(&a, &idx, &g, &diff).unwrap();
            let l = dot(img.values.data(), &wa) + dot(img.derivs.as_ref().unwrap().data(), &wd);
            (l, g.ids().to_vec())
        };
        let verts = scene.verts();
        let grid = rasterize_forward(&verts, &idx, vp).unwrap();
        let attrs = AttributeSet::new(k, attrs0.clone()).unwrap();
        let ga = ImageGrid::from_data(12, 12, k, wa.clone()).unwrap();
        let gd = ImageGrid::from_data(12, 12, 2 * diff.len(), wd.clone()).unwrap();
        let back = interpolate_backward(&attrs, &idx, &grid, &ga, Some(&gd), &diff).unwrap();
        let gpos = rasterize_backward(&verts, &idx, &grid, &back.duv, Some(&back.djuv)).unwrap();

        let numeric_a = fd_stable(&attrs0, 1e-5, |a| eval(&scene.flat(), a));
        check_subset("interpolate/attrs", back.attrs.as_slice(), &numeric_a, RTOL, ATOL);
        if grid.covered_count() > 0 {
            let numeric_p = fd_stable(&scene.flat(), H, |p| eval(p, &attrs0));
            check_subset("interpolate/positions", gpos.as_slice(), &numeric_p, RTOL, ATOL);
        }
    }
}

pub fn texture() {
    for seed in 0..INSTANCES {
        let mut r = rng(300 + seed);
        let (size, faces, channels) = (8usize, if seed % 2 == 0 { 1 } else { 6 }, 2usize);
        let levels = 1 + (seed as usize % 4);
        let base = random_vec(&mut r, faces * size * size * channels, 0.0, 1.0);
        let (w, h) = (4usize, 3usize);
        let lookups: Vec<Option<TexLookup<f64>>> = (0..w * h)
            .map(|_| {
                let scale = (r.random_range(-5.0..1.0f64)).exp2() / size as f64;
                Some(TexLookup {
                    face: r.random_range(0..faces) as u8,
                    st: [r.random_range(0.02..0.98), r.random_range(0.02..0.98)],
                    jst: std::array::from_fn(|_| scale * r.random_range(-1.0..1.0)),
                })
            })
            .collect();
        let wg = random_vec(&mut r, w * h * channels, -1.0, 1.0);
        let sample = |base: &[f64], lk: &[Option<TexLookup<f64>>]| {
            let tex = build_pyramid(base.to_vec(), size, faces, channels, levels).unwrap();
            let req = TexSampleRequest::new(w, h, lk.to_vec()).unwrap();
            let (img, rec) = texture_forward(&tex, &req).unwrap();
            let taps: Vec<_> = rec
                .samples
                .iter()
                .map(|p| p.taps.map(|t| (t.level, t.x, t.y)))
                .collect();
            (dot(img.data(), &wg), taps)
        };
        let tex = build_pyramid(base.clone(), size, faces, channels, levels).unwrap();
        let req = TexSampleRequest::new(w, h, lookups.clone()).unwrap();
        let (_, rec) = texture_forward(&tex, &req).unwrap();
        let g = ImageGrid::from_data(w, h, channels, wg.clone()).unwrap();
        let back = texture_backward(&tex, &req, &rec, &g).unwrap();
        let dbase = flatten_gradients(&back.levels, size, faces, channels).unwrap();

        let numeric_t = fd_stable(&base, 1e-4, |b| sample(b, &lookups));
        check_subset("texture/texels", &dbase, &numeric_t, 1e-6, 1e-9);

        // Lookup coordinates, flattened as (s, t, jst[4]) per pixel.
        let flat: Vec<f64> = lookups
            .iter()
            .flat_map(|l| {
                let l = l.unwrap();
                [l.st[0], l.st[1], l.jst[0], l.jst[1], l.jst[2], l.jst[3]]
            })
            .collect();
        let analytic: Vec<f64> = (0..w * h)
            .flat_map(|i| {
                let (s, j) = (back.dst[i], back.djst[i]);
                [s[0], s[1], j[0], j[1], j[2], j[3]]
            })
            .collect();
        let rebuild = |x: &[f64]| -> Vec<Option<TexLookup<f64>>> {
            x.chunks_exact(6)
                .zip(&lookups)
                .map(|(c, l)| {
                    Some(TexLookup {
                        face: l.unwrap().face,
                        st: [c[0], c[1]],
                        jst: [c[2], c[3], c[4], c[5]],
                    })
                })
                .collect()
        };
        let numeric_l = fd_stable(&flat, 1e-8, |x| {
            let lk = rebuild(x);
            let (l, taps) = sample(&base, &lk);
            // lod level changes alter the record blend branch too.
            let tex = build_pyramid(base.clone(), size, faces, channels, levels).unwrap();
            let req = TexSampleRequest::new(w, h, lk).unwrap();
            let (_, rec) = texture_forward(&tex, &req).unwrap();
            let active: Vec<_> = rec.samples.iter().map(|p| p.lod_active).collect();
            (l, (taps, active))
        });
        check_subset("texture/lookups", &analytic, &numeric_l, RTOL, ATOL);
    }
}

fn event_signature(
    verts: &ClipVertexBuffer<f64>,
    idx: &IndexBuffer,
    vp: Viewport,
    color: &ImageGrid<f64>,
) -> (ImageGrid<f64>, Vec<(usize, usize, [u32; 2], bool)>, Vec<u32>) {
    let grid = rasterize_forward(verts, idx, vp).unwrap();
    let (out, log) = antialias_forward(color, &grid, verts, idx, &build_edge_adjacency(idx)).unwrap();
    let sig = log
        .events
        .iter()
        .map(|e| (e.pixel_a, e.pixel_b, e.edge, e.into_b))
        .collect();
    (out, sig, grid.ids().to_vec())
}

pub fn antialias() {
    for seed in 0..INSTANCES {
        let mut r = rng(400 + seed);
        let scene = RandomScene::generate(&mut r, 1 + (seed as usize % 3), false);
        let idx = scene.idx();
        let vp = Viewport::new(16, 16).unwrap();
        let c = 3;
        let color0 = random_vec(&mut r, vp.pixel_count() * c, 0.0, 1.0);
        let wl = random_vec(&mut r, vp.pixel_count() * c, -1.0, 1.0);
        let color = ImageGrid::from_data(16, 16, c, color0.clone()).unwrap();
        let verts = scene.verts();
        let grid = rasterize_forward(&verts, &idx, vp).unwrap();
        let (_, log) = antialias_forward(&color, &grid, &verts, &idx, &build_edge_adjacency(&idx)).unwrap();
        if log.is_empty() {
            continue;
        }
        let g = ImageGrid::from_data(16, 16, c, wl.clone()).unwrap();
        let back = antialias_backward(&log, &verts, &g).unwrap();

        let numeric_p = fd_stable(&scene.flat(), H, |p| {
            let (out, sig, ids) = event_signature(&verts_of(p), &idx, vp, &color);
            (dot(out.data(), &wl), (sig, ids))
        });
        check_subset("antialias/positions", back.positions.as_slice(), &numeric_p, RTOL, ATOL);

        let numeric_c = fd_stable(&color0, 1e-4, |col| {
            let img = ImageGrid::from_data(16, 16, c, col.to_vec()).unwrap();
            let (out, sig, _) = event_signature(&verts, &idx, vp, &img);
            (dot(out.data(), &wl), sig)
        });
        check_subset("antialias/color", back.color.data(), &numeric_c, 1e-6, 1e-9);
    }
}

fn random_mat(r: &mut impl Rng) -> Mat4<f64> {
    std::array::from_fn(|_| std::array::from_fn(|_| r.random_range(-1.0..1.0)))
}

pub fn transform_clip_fd() {
    for seed in 0..INSTANCES {
        let mut r = rng(500 + seed);
        let pts: Vec<[f64; 3]> = (0..5).map(|_| std::array::from_fn(|_| r.random_range(-1.0..1.0))).collect();
        let m = random_mat(&mut r);
        let g: Vec<[f64; 4]> = (0..5).map(|_| std::array::from_fn(|_| r.random_range(-1.0..1.0))).collect();
        let gflat: Vec<f64> = g.iter().flatten().copied().collect();
        let (dp, dm) = transform_clip_backward(&pts, &m, &g).unwrap();
        let mut x: Vec<f64> = pts.iter().flatten().copied().collect();
        x.extend(m.iter().flatten());
        let mut analytic: Vec<f64> = dp.iter().flatten().copied().collect();
        analytic.extend(dm.iter().flatten());
        let numeric = fd_stable(&x, 1e-5, |x| {
            let p: Vec<[f64; 3]> = x[..15].chunks(3).map(|c| [c[0], c[1], c[2]]).collect();
            let m: Mat4<f64> = std::array::from_fn(|i| std::array::from_fn(|j| x[15 + 4 * i + j]));
            let c = transform_clip(&p, &m).unwrap();
            let flat: Vec<f64> = c.positions().iter().flatten().copied().collect();
            (dot(&flat, &gflat), ())
        });
        check_subset("transform_clip", &analytic, &numeric, 1e-5, ATOL);
    }
}

pub fn reflection_vectors_fd() {
    for seed in 0..INSTANCES {
        let mut r = rng(600 + seed);
        let n = 4;
        let x = random_vec(&mut r, 6 * n, -1.0, 1.0);
        let g: Vec<[f64; 3]> = (0..n).map(|_| std::array::from_fn(|_| r.random_range(-1.0..1.0))).collect();
        let split = |x: &[f64]| -> (Vec<[f64; 3]>, Vec<[f64; 3]>) {
            let v: Vec<[f64; 3]> = x.chunks(3).map(|c| [c[0], c[1], c[2]]).collect();
            (v[..n].to_vec(), v[n..].to_vec())
        };
        let (nn, vv) = split(&x);
        let (dn, dv) = reflection_vectors_backward(&nn, &vv, &g).unwrap();
        let analytic: Vec<f64> = dn.iter().chain(&dv).flatten().copied().collect();
        let gflat: Vec<f64> = g.iter().flatten().copied().collect();
        let numeric = fd_stable(&x, 1e-6, |x| {
            let (nn, vv) = split(x);
            let rr = reflection_vectors(&nn, &vv).unwrap();
            let flat: Vec<f64> = rr.iter().flatten().copied().collect();
            (dot(&flat, &gflat), ())
        });
        check_subset("reflection_vectors", &analytic, &numeric, 1e-4, ATOL);
    }
}

pub fn cubemap_lookup_fd() {
    for seed in 0..INSTANCES {
        let mut r = rng(700 + seed);
        let x = random_vec(&mut r, 9, -1.0, 1.0);
        let w = random_vec(&mut r, 6, -1.0, 1.0);
        let lookup = |x: &[f64]| {
            let l = cubemap_lookup([x[0], x[1], x[2]], std::array::from_fn(|k| x[3 + k])).unwrap();
            let v = [l.st[0], l.st[1], l.jst[0], l.jst[1], l.jst[2], l.jst[3]];
            (dot(&v, &w), l.face)
        };
        let (dd, dj) = cubemap_lookup_backward(
            [x[0], x[1], x[2]],
            std::array::from_fn(|k| x[3 + k]),
            [w[0], w[1]],
            [w[2], w[3], w[4], w[5]],
        );
        let analytic: Vec<f64> = dd.iter().chain(&dj).copied().collect();
        let numeric = fd_stable(&x, 1e-6, lookup);
        check_subset("cubemap_lookup", &analytic, &numeric, 1e-4, ATOL);
    }
}

/// Unit cube centered at the origin.
fn cube() -> (Vec<[f64; 3]>, IndexBuffer) {
    let p = (0..8)
        .map(|i| {
            [
                if i & 1 != 0 { 0.5 } else { -0.5 },
                if i & 2 != 0 { 0.5 } else { -0.5 },
                if i & 4 != 0 { 0.5 } else { -0.5 },
            ]
        })
        .collect();
    let quads = [
        [0, 2, 3, 1],
        [4, 5, 7, 6],
        [0, 1, 5, 4],
        [2, 6, 7, 3],
        [0, 4, 6, 2],
        [1, 3, 7, 5],
    ];
    let tris = quads
        .iter()
        .flat_map(|q: &[u32; 4]| [[q[0], q[1], q[2]], [q[0], q[2], q[3]]])
        .collect();
    (p, IndexBuffer::new(tris))
}

pub fn cube_pipeline() {
    let (pts0, idx) = cube();
    let adj = build_edge_adjacency(&idx);
    for seed in 0..INSTANCES {
        let mut r = rng(800 + seed);
        let dir: [f64; 3] = std::array::from_fn(|_| r.random_range(-1.0..1.0));
        let len = dot(&dir, &dir).sqrt();
        let eye = dir.map(|d| 3.0 * d / len);
        let mvp = mat_mul(
            &perspective(0.9, 1.0, 0.5, 10.0),
            &look_at(eye, [0.0; 3], [0.0, 1.0, 0.0]),
        );
        let pts: Vec<[f64; 3]> = pts0
            .iter()
            .map(|p| p.map(|c| c + r.random_range(-0.1..0.1)))
            .collect();
        let colors = AttributeSet::new(3, random_vec(&mut r, 24, 0.0, 1.0)).unwrap();
        let vp = Viewport::new(24, 24).unwrap();
        let wl = random_vec(&mut r, vp.pixel_count() * 3, -1.0, 1.0);
        let shader = PassThrough::attribute(0, 3);
        let render = |pts: &[[f64; 3]], graph: &mut RenderGraph<f64>| {
            let verts = transform_clip(pts, &mvp).unwrap();
            let inp = RenderInputs {
                verts: &verts,
                idx: &idx,
                adjacency: Some(&adj),
                attributes: vec![AttributeInput {
                    values: &colors,
                    idx: &idx,
                    diff_channels: &[],
                }],
                textures: vec![],
                clear: vec![0.1, 0.2, 0.3],
            };
            let img = graph.render(&inp, &shader).unwrap();
            (img, verts)
        };
        let mut graph = RenderGraph::new(vp);
        let (_, verts) = render(&pts, &mut graph);
        let inp = RenderInputs {
            verts: &verts,
            idx: &idx,
            adjacency: Some(&adj),
            attributes: vec![AttributeInput {
                values: &colors,
                idx: &idx,
                diff_channels: &[],
            }],
            textures: vec![],
            clear: vec![0.1, 0.2, 0.3],
        };
        let g = ImageGrid::from_data(24, 24, 3, wl.clone()).unwrap();
        let back = graph.render_backward(&inp, &shader, &g).unwrap();
        let (dpts, _) = transform_clip_backward(&pts, &mvp, &back.positions.to_vec4()).unwrap();
        let analytic: Vec<f64> = dpts.iter().flatten().copied().collect();
        let x: Vec<f64> = pts.iter().flatten().copied().collect();
        let numeric = fd_stable(&x, H, |x| {
            let p: Vec<[f64; 3]> = x.chunks(3).map(|c| [c[0], c[1], c[2]]).collect();
            let mut gr = RenderGraph::new(vp);
            let (img, _) = render(&p, &mut gr);
            let sig: Vec<_> = gr
                .event_log()
                .unwrap()
                .events
                .iter()
                .map(|e| (e.pixel_a, e.pixel_b, e.edge, e.into_b))
                .collect();
            (dot(img.data(), &wl), (sig, gr.grid().unwrap().ids().to_vec()))
        });
        check_subset("cube pipeline", &analytic, &numeric, RTOL, ATOL);
        assert!(analytic.iter().any(|v| v.abs() > 1e-3), "visibility gradients vanished");
    }
}

pub fn l2_loss() {
    for seed in 0..INSTANCES {
        let mut r = rng(900 + seed);
        let (w, h, c) = (5, 4, 3);
        let x = random_vec(&mut r, w * h * c, 0.0, 1.0);
        let y = ImageGrid::from_data(w, h, c, random_vec(&mut r, w * h * c, 0.0, 1.0)).unwrap();
        let img = |x: &[f64]| ImageGrid::from_data(w, h, c, x.to_vec()).unwrap();
        let (_, g) = l2_image_loss(&img(&x), &y).unwrap();
        let fd = central_diff(|x| l2_image_loss(&img(x), &y).unwrap().0, &x, 1e-6);
        assert_grad_close(g.data(), &fd, RTOL, ATOL);
    }
}

/// `d<highpass(x), y>/dx = highpass_transpose(y)`.
pub fn highpass_filter() {
    for seed in 0..INSTANCES {
        let mut r = rng(1000 + seed);
        let (w, h) = (4 + seed as usize % 5, 3 + seed as usize % 7);
        let x = random_vec(&mut r, w * h, -1.0, 1.0);
        let y = ImageGrid::from_data(w, h, 1, random_vec(&mut r, w * h, -1.0, 1.0)).unwrap();
        let f = |x: &[f64]| dot(highpass(&ImageGrid::from_data(w, h, 1, x.to_vec()).unwrap()).data(), y.data());
        assert_grad_close(highpass_transpose(&y).data(), &central_diff(f, &x, 1e-4), RTOL, ATOL);
    }
}

pub fn laplacian() {
    let (base, idx) = cube();
    let reg = LaplacianReg::from_adjacency(&build_edge_adjacency(&idx), &base).unwrap();
    let unflat = |x: &[f64]| -> Vec<[f64; 3]> { x.chunks(3).map(|c| [c[0], c[1], c[2]]).collect() };
    for seed in 0..INSTANCES {
        let mut r = rng(1100 + seed);
        let v: Vec<f64> = base.iter().flatten().map(|c| c + r.random_range(-0.3..0.3)).collect();
        let (_, g) = reg.value_and_grad(&unflat(&v)).unwrap();
        let fd = central_diff(|x| reg.value_and_grad(&unflat(x)).unwrap().0, &v, 1e-6);
        let gf: Vec<f64> = g.iter().flatten().copied().collect();
        assert_grad_close(&gf, &fd, RTOL, ATOL);
    }
}

pub fn deformation() {
    let (base, _) = cube();
    for seed in 0..INSTANCES {
        let mut r = rng(1200 + seed);
        let (frames, rank) = (4, 3);
        let mut m = DeformationModel::new(&base, frames, rank);
        let rnd = |r: &mut _, a, b| DMatrix::from_vec(a, b, random_vec(r, a * b, -1.0, 1.0));
        m.m1 = rnd(&mut r, rank, frames);
        m.m2 = rnd(&mut r, rank, rank);
        m.m3 = rnd(&mut r, 24, rank);
        m.rigid = Some(vec![std::array::from_fn(|_| std::array::from_fn(|_| r.random_range(-1.0..1.0))); 2]);
        let frame = seed as usize % frames;
        let w: Vec<[f64; 3]> = (0..8).map(|_| std::array::from_fn(|_| r.random_range(-1.0..1.0))).collect();
        let wf: Vec<f64> = w.iter().flatten().copied().collect();
        let g = m.deform_backward(frame, Some(1), &w).unwrap();
        let loss = |m: &DeformationModel| {
            let v: Vec<f64> = m.deform(frame, Some(1)).unwrap().into_iter().flatten().collect();
            dot(&v, &wf)
        };
        for (which, analytic) in [g.m1.as_slice(), g.m2.as_slice(), g.m3.as_slice()].into_iter().enumerate() {
            let x0 = [&m.m1, &m.m2, &m.m3][which].as_slice().to_vec();
            let fd = central_diff(
                |x| {
                    let mut mm = m.clone();
                    [&mut mm.m1, &mut mm.m2, &mut mm.m3][which].as_mut_slice().copy_from_slice(x);
                    loss(&mm)
                },
                &x0,
                1e-5,
            );
            assert_grad_close(analytic, &fd, RTOL, ATOL);
        }
        let r0: Vec<f64> = m.rigid.as_ref().unwrap()[1].iter().flatten().copied().collect();
        let fd = central_diff(
            |x| {
                let mut mm = m.clone();
                mm.rigid.as_mut().unwrap()[1] = std::array::from_fn(|i| std::array::from_fn(|j| x[4 * i + j]));
                loss(&mm)
            },
            &r0,
            1e-5,
        );
        let ga: Vec<f64> = g.rigid.unwrap().iter().flatten().copied().collect();
        assert_grad_close(&ga, &fd, RTOL, ATOL);
    }
}

pub fn quaternion_matrix() {
    for seed in 0..INSTANCES {
        let mut r = rng(1300 + seed);
        let q = random_vec(&mut r, 4, -1.0, 1.0);
        let w = random_vec(&mut r, 9, -1.0, 1.0);
        let dr: [[f64; 3]; 3] = std::array::from_fn(|i| std::array::from_fn(|j| w[3 * i + j]));
        let g = to_matrix_backward([q[0], q[1], q[2], q[3]], &dr);
        let fd = central_diff(
            |x| {
                let m = to_matrix([x[0], x[1], x[2], x[3]]);
                dot(&m.iter().flatten().copied().collect::<Vec<_>>(), &w)
            },
            &q,
            1e-6,
        );
        assert_grad_close(&g, &fd, RTOL, ATOL);
    }
}

/// Every check with a display name, in suite order.
pub const ALL: &[(&str, fn())] = &[
    ("rasterize", rasterize),
    ("interpolate", interpolate),
    ("texture", texture),
    ("antialias", antialias),
    ("transform_clip", transform_clip_fd),
    ("reflection_vectors", reflection_vectors_fd),
    ("cubemap_lookup", cubemap_lookup_fd),
    ("cube_pipeline", cube_pipeline),
    ("l2_loss", l2_loss),
    ("highpass", highpass_filter),
    ("laplacian", laplacian),
    ("deformation", deformation),
    ("quaternion_matrix", quaternion_matrix),
];
