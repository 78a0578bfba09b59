//! Brute-force reference implementations.

/// Per-pixel result of [`brute_rasterize`]; `ids` are 1-based, 0 is blank.
#[derive(Debug, Clone, PartialEq)]
pub struct OracleGrid {
    pub width: usize,
    pub height: usize,
    pub ids: Vec<u32>,
    pub uv: Vec<[f64; 2]>,
    pub zw: Vec<f64>,
}

/// Perspective-correct barycentrics of the point on triangle `t` that
/// projects to NDC `(px, py)`, by solving
/// `sum b_i (x_i - px w_i) = 0`, `sum b_i (y_i - py w_i) = 0`, `sum b_i = 1`
/// with Cramer's rule after eliminating `b2`.
pub fn plane_barycentrics(t: [[f64; 4]; 3], px: f64, py: f64) -> Option<[f64; 3]> {
    let f = |p: [f64; 4]| (p[0] - px * p[3], p[1] - py * p[3]);
    let (f0, f1, f2) = (f(t[0]), f(t[1]), f(t[2]));
    // b0 (f0 - f2) + b1 (f1 - f2) = -f2
    let (a, b) = (f0.0 - f2.0, f1.0 - f2.0);
    let (c, d) = (f0.1 - f2.1, f1.1 - f2.1);
    let det = a * d - b * c;
    if det == 0.0 {
        return None;
    }
    let b0 = (-f2.0 * d + b * f2.1) / det;
    let b1 = (-a * f2.1 + c * f2.0) / det;
    Some([b0, b1, 1.0 - b0 - b1])
}

/// Tests every triangle at every pixel center and keeps the nearest hit,
/// breaking depth ties toward the lower ID.
pub fn brute_rasterize(
    positions: &[[f64; 4]],
    triangles: &[[u32; 3]],
    width: usize,
    height: usize,
) -> OracleGrid {
    let n = width * height;
    let mut out = OracleGrid {
        width,
        height,
        ids: vec![0; n],
        uv: vec![[0.0; 2]; n],
        zw: vec![0.0; n],
    };
    for py in 0..height {
        for px in 0..width {
            let nx = 2.0 * (px as f64 + 0.5) / width as f64 - 1.0;
            let ny = 1.0 - 2.0 * (py as f64 + 0.5) / height as f64;
            let i = py * width + px;
            for (t, tri) in triangles.iter().enumerate() {
                let v = tri.map(|k| positions[k as usize]);
                let Some(b) = plane_barycentrics(v, nx, ny) else {
                    continue;
                };
                if b.iter().any(|&x| x < 0.0) {
                    continue;
                }
                let w: f64 = (0..3).map(|k| b[k] * v[k][3]).sum();
                let z: f64 = (0..3).map(|k| b[k] * v[k][2]).sum();
                if w < 1e-6 || z.abs() > w {
                    continue;
                }
                let zw = z / w;
                let id = t as u32 + 1;
                if out.ids[i] == 0 || zw < out.zw[i] {
                    out.ids[i] = id;
                    out.uv[i] = [b[0], b[1]];
                    out.zw[i] = zw;
                }
            }
        }
    }
    out
}

/// Box-filter pyramid over `faces` square faces, built texel by texel.
pub fn pyramid(base: &[f64], size: usize, faces: usize, channels: usize, levels: usize) -> Vec<Vec<f64>> {
    let mut out = vec![base.to_vec()];
    let mut s = size;
    for _ in 1..levels {
        let h = s / 2;
        let src = out.last().unwrap();
        let mut dst = vec![0.0; faces * h * h * channels];
        for f in 0..faces {
            for y in 0..h {
                for x in 0..h {
                    for c in 0..channels {
                        let mut acc = 0.0;
                        for (dx, dy) in [(0, 0), (1, 0), (0, 1), (1, 1)] {
                            acc += src[((f * s + 2 * y + dy) * s + 2 * x + dx) * channels + c];
                        }
                        dst[((f * h + y) * h + x) * channels + c] = acc / 4.0;
                    }
                }
            }
        }
        out.push(dst);
        s = h;
    }
    out
}

/// Level of detail: `log2` of the longer texel-space footprint axis,
/// clamped to the pyramid.
pub fn lod(jst: [f64; 4], size: usize, levels: usize) -> f64 {
    let lx = (jst[0] * jst[0] + jst[2] * jst[2]).sqrt();
    let ly = (jst[1] * jst[1] + jst[3] * jst[3]).sqrt();
    let l = (size as f64 * lx.max(ly)).log2();
    if l.is_nan() {
        0.0
    } else {
        l.clamp(0.0, (levels - 1) as f64)
    }
}

/// Bilinear sample of one level with clamp-to-edge (or wrap) addressing.
#[allow(clippy::too_many_arguments)]
pub fn bilinear(
    level: &[f64],
    size: usize,
    channels: usize,
    face: usize,
    s: f64,
    t: f64,
    wrap: bool,
) -> Vec<f64> {
    let x = s * size as f64 - 0.5;
    let y = t * size as f64 - 0.5;
    let (x0, y0) = (x.floor(), y.floor());
    let (fx, fy) = (x - x0, y - y0);
    let fix = |i: f64| -> usize {
        let i = i as i64;
        let n = size as i64;
        if wrap {
            i.rem_euclid(n) as usize
        } else {
            i.clamp(0, n - 1) as usize
        }
    };
    let mut out = vec![0.0; channels];
    for (xi, yi, wgt) in [
        (x0, y0, (1.0 - fx) * (1.0 - fy)),
        (x0 + 1.0, y0, fx * (1.0 - fy)),
        (x0, y0 + 1.0, (1.0 - fx) * fy),
        (x0 + 1.0, y0 + 1.0, fx * fy),
    ] {
        let base = ((face * size + fix(yi)) * size + fix(xi)) * channels;
        for c in 0..channels {
            out[c] += wgt * level[base + c];
        }
    }
    out
}

/// Trilinear sample from a pyramid produced by [`pyramid`].
#[allow(clippy::too_many_arguments)]
pub fn trilinear(
    levels: &[Vec<f64>],
    size: usize,
    channels: usize,
    face: usize,
    st: [f64; 2],
    jst: [f64; 4],
    wrap: bool,
) -> Vec<f64> {
    let l = lod(jst, size, levels.len());
    let l0 = l.floor() as usize;
    let f = l - l0 as f64;
    let a = bilinear(&levels[l0], size >> l0, channels, face, st[0], st[1], wrap);
    if f == 0.0 || l0 + 1 >= levels.len() {
        return a;
    }
    let b = bilinear(&levels[l0 + 1], size >> (l0 + 1), channels, face, st[0], st[1], wrap);
    a.iter().zip(&b).map(|(x, y)| (1.0 - f) * x + f * y).collect()
}

/// Exact area of `{ (x, y) : a x + b y + c >= 0 }` inside the unit pixel
/// with top-left corner `(px, py)`, by clipping the square.
pub fn half_plane_coverage(a: f64, b: f64, c: f64, px: f64, py: f64) -> f64 {
    let square = [(px, py), (px + 1.0, py), (px + 1.0, py + 1.0), (px, py + 1.0)];
    let side = |p: (f64, f64)| a * p.0 + b * p.1 + c;
    let mut poly = Vec::new();
    for k in 0..4 {
        let (p, q) = (square[k], square[(k + 1) % 4]);
        let (sp, sq) = (side(p), side(q));
        if sp >= 0.0 {
            poly.push(p);
        }
        if (sp >= 0.0) != (sq >= 0.0) {
            let t = sp / (sp - sq);
            poly.push((p.0 + t * (q.0 - p.0), p.1 + t * (q.1 - p.1)));
        }
    }
    let mut area = 0.0;
    for k in 0..poly.len() {
        let (p, q) = (poly[k], poly[(k + 1) % poly.len()]);
        area += p.0 * q.1 - q.0 * p.1;
    }
    (area / 2.0).abs()
}

/// All undirected edges of `triangles` with the triangles using each,
/// by exhaustive pairing.
pub fn edge_incidence(triangles: &[[u32; 3]]) -> Vec<((u32, u32), Vec<u32>)> {
    let mut edges: Vec<(u32, u32)> = triangles
        .iter()
        .flat_map(|t| (0..3).map(move |k| (t[k].min(t[(k + 1) % 3]), t[k].max(t[(k + 1) % 3]))))
        .collect();
    edges.sort_unstable();
    edges.dedup();
    edges
        .into_iter()
        .map(|(a, b)| {
            let users = triangles
                .iter()
                .enumerate()
                .filter(|(_, t)| t.contains(&a) && t.contains(&b))
                .map(|(i, _)| i as u32)
                .collect();
            ((a, b), users)
        })
        .collect()
}
