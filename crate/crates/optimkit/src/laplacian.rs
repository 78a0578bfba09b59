//! Uniform-weight Laplacian regularizer.
//!
//! With `δ_j = v_j - mean(N_j)` over the one-ring `N_j`,
//! `L = (1/n) Σ_j |δ_j - δ_j^base|^2`. Writing `r_j = δ_j - δ_j^base`, the
//! gradient is `dL/dv_i = (2/n) (r_i - Σ_{k : i ∈ N_k} r_k / |N_k|)`.

use diffrast_core::EdgeAdjacency;

use crate::error::{shape, OptimError, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct LaplacianReg {
    rings: Vec<Vec<u32>>,
    base_delta: Vec<[f64; 3]>,
}

fn differentials(rings: &[Vec<u32>], v: &[[f64; 3]]) -> Vec<[f64; 3]> {
    rings
        .iter()
        .enumerate()
        .map(|(j, ring)| {
            let inv = 1.0 / ring.len() as f64;
            let mut d = v[j];
            for &k in ring {
                for c in 0..3 {
                    d[c] -= v[k as usize][c] * inv;
                }
            }
            d
        })
        .collect()
}

impl LaplacianReg {
    pub fn new(rings: Vec<Vec<u32>>, base: &[[f64; 3]]) -> Result<Self> {
        if rings.len() != base.len() {
            return Err(shape("one-rings", base.len(), rings.len()));
        }
        if let Some(vertex) = rings.iter().position(|r| r.is_empty()) {
            return Err(OptimError::IsolatedVertex { vertex });
        }
        if let Some(&bad) = rings.iter().flatten().find(|&&k| k as usize >= base.len()) {
            return Err(shape("one-ring vertex", base.len(), bad as usize + 1));
        }
        let base_delta = differentials(&rings, base);
        Ok(Self { rings, base_delta })
    }

    pub fn from_adjacency(adj: &EdgeAdjacency, base: &[[f64; 3]]) -> Result<Self> {
        Self::new(adj.one_rings(base.len()), base)
    }

    pub fn value_and_grad(&self, v: &[[f64; 3]]) -> Result<(f64, Vec<[f64; 3]>)> {
        let n = self.rings.len();
        if v.len() != n {
            return Err(shape("deformed vertices", n, v.len()));
        }
        let delta = differentials(&self.rings, v);
        let r: Vec<[f64; 3]> = delta
            .iter()
            .zip(&self.base_delta)
            .map(|(d, b)| [d[0] - b[0], d[1] - b[1], d[2] - b[2]])
            .collect();
        let nf = n as f64;
        let loss = r.iter().map(|x| x[0] * x[0] + x[1] * x[1] + x[2] * x[2]).sum::<f64>() / nf;
        let mut g = r.clone();
        for (k, ring) in self.rings.iter().enumerate() {
            let inv = 1.0 / ring.len() as f64;
            for &i in ring {
                for c in 0..3 {
                    g[i as usize][c] -= r[k][c] * inv;
                }
            }
        }
        for gi in &mut g {
            for c in gi.iter_mut() {
                *c *= 2.0 / nf;
            }
        }
        Ok((loss, g))
    }
}
