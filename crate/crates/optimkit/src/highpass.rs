//! `x' = x - 0.3 blur(x)`.
//!
//! The blur approximates a wide Gaussian by a pyramid: `k` rounds of 2x box
//! downsampling followed by `k` rounds of bilinear upsampling back through
//! the same sizes, for an overall factor of `2^k = 32` (or the largest power
//! of two not exceeding the smaller image dimension). Both passes are
//! separable resamplings with explicit taps, so the transpose applies the
//! same taps with source and destination swapped.

use diffrast_core::{ImageGrid, Real};

const STRENGTH: f64 = 0.3;
const MAX_FACTOR: usize = 32;

/// Taps of a 1-D resampling from `n_in` to `n_out` samples.
struct Taps {
    n_in: usize,
    n_out: usize,
    taps: Vec<[(usize, f64); 2]>,
}

impl Taps {
    /// Average of sample pairs, repeating the last sample for odd lengths.
    fn box_down(n_in: usize) -> Self {
        let n_out = n_in.div_ceil(2);
        let taps = (0..n_out)
            .map(|i| [(2 * i, 0.5), ((2 * i + 1).min(n_in - 1), 0.5)])
            .collect();
        Self { n_in, n_out, taps }
    }

    /// Linear interpolation with pixel-center alignment and edge clamping.
    fn bilinear_up(n_in: usize, n_out: usize) -> Self {
        let scale = n_in as f64 / n_out as f64;
        let taps = (0..n_out)
            .map(|x| {
                let xc = ((x as f64 + 0.5) * scale - 0.5).clamp(0.0, (n_in - 1) as f64);
                let x0 = xc.floor() as usize;
                let x1 = (x0 + 1).min(n_in - 1);
                let f = xc - x0 as f64;
                [(x0, 1.0 - f), (x1, f)]
            })
            .collect();
        Self { n_in, n_out, taps }
    }
}

#[derive(Clone)]
struct Planar<T> {
    w: usize,
    h: usize,
    c: usize,
    data: Vec<T>,
}

/// Applies `taps` along x (`axis = 0`) or y, or its transpose.
fn resample<T: Real>(img: &Planar<T>, taps: &Taps, axis: usize, transpose: bool) -> Planar<T> {
    let (n_src, n_dst) = if transpose {
        (taps.n_out, taps.n_in)
    } else {
        (taps.n_in, taps.n_out)
    };
    let (w, h) = if axis == 0 {
        debug_assert_eq!(img.w, n_src);
        (n_dst, img.h)
    } else {
        debug_assert_eq!(img.h, n_src);
        (img.w, n_dst)
    };
    let c = img.c;
    let mut out = vec![T::zero(); w * h * c];
    let lines = if axis == 0 { img.h } else { img.w };
    for line in 0..lines {
        let at = |k: usize, width: usize| {
            if axis == 0 {
                (line * width + k) * c
            } else {
                (k * width + line) * c
            }
        };
        for (o, tap) in taps.taps.iter().enumerate() {
            for &(s, wgt) in tap {
                let wgt = T::lit(wgt);
                let (src, dst) = if transpose {
                    (at(o, img.w), at(s, w))
                } else {
                    (at(s, img.w), at(o, w))
                };
                for ch in 0..c {
                    out[dst + ch] += wgt * img.data[src + ch];
                }
            }
        }
    }
    Planar { w, h, c, data: out }
}

fn octaves(w: usize, h: usize) -> Vec<(usize, usize)> {
    let limit = w.min(h).max(1);
    let mut factor = 1;
    while factor * 2 <= limit && factor * 2 <= MAX_FACTOR {
        factor *= 2;
    }
    let mut sizes = vec![(w, h)];
    while factor > 1 {
        let (pw, ph) = *sizes.last().unwrap();
        sizes.push((pw.div_ceil(2), ph.div_ceil(2)));
        factor /= 2;
    }
    sizes
}

fn blur<T: Real>(x: &ImageGrid<T>, transpose: bool) -> Vec<T> {
    let sizes = octaves(x.width(), x.height());
    let mut img = Planar {
        w: x.width(),
        h: x.height(),
        c: x.channels(),
        data: x.data().to_vec(),
    };
    let down = |img: &Planar<T>, k: usize, t: bool| {
        let (w, h) = sizes[k];
        let p = resample(img, &Taps::box_down(w), 0, t);
        resample(&p, &Taps::box_down(h), 1, t)
    };
    let up = |img: &Planar<T>, k: usize, t: bool| {
        let ((fw, fh), (cw, ch)) = (sizes[k], sizes[k + 1]);
        let p = resample(img, &Taps::bilinear_up(cw, fw), 0, t);
        resample(&p, &Taps::bilinear_up(ch, fh), 1, t)
    };
    let levels = sizes.len() - 1;
    if !transpose {
        for k in 0..levels {
            img = down(&img, k, false);
        }
        for k in (0..levels).rev() {
            img = up(&img, k, false);
        }
    } else {
        // (U_0 .. U_{L-1} D_{L-1} .. D_0)^T = D_0^T .. D_{L-1}^T U_{L-1}^T .. U_0^T
        for k in 0..levels {
            img = up(&img, k, true);
        }
        for k in (0..levels).rev() {
            img = down(&img, k, true);
        }
    }
    img.data
}

fn combine<T: Real>(x: &ImageGrid<T>, b: Vec<T>) -> ImageGrid<T> {
    let s = T::lit(STRENGTH);
    let data = x.data().iter().zip(b).map(|(&v, bv)| v - s * bv).collect();
    ImageGrid::from_data(x.width(), x.height(), x.channels(), data).expect("same shape")
}

pub fn highpass<T: Real>(x: &ImageGrid<T>) -> ImageGrid<T> {
    combine(x, blur(x, false))
}

/// Transpose of [`highpass`], i.e. its backward pass.
pub fn highpass_transpose<T: Real>(y: &ImageGrid<T>) -> ImageGrid<T> {
    combine(y, blur(y, true))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn octave_count_follows_image_size() {
        assert_eq!(octaves(64, 64).len(), 6);
        assert_eq!(octaves(20, 48).len(), 5);
        assert_eq!(octaves(1, 9).len(), 1);
    }
}
