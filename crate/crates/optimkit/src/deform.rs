//! Overparameterized per-frame deformation `V_i = R V_base + M3 M2 M1 w_i`
//! with one-hot frame codes `w_i`.

use nalgebra::{DMatrix, DVector};

use crate::error::{shape, OptimError, Result};

/// Rigid (or general affine) `3 x 4` transform applied to the base mesh.
pub type Rigid = [[f64; 4]; 3];

#[derive(Debug, Clone, PartialEq)]
pub struct DeformationModel {
    /// Stacked `x, y, z` of every base vertex.
    pub base: DVector<f64>,
    pub m1: DMatrix<f64>,
    pub m2: DMatrix<f64>,
    pub m3: DMatrix<f64>,
    pub rigid: Option<Vec<Rigid>>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DeformGrad {
    pub m1: DMatrix<f64>,
    pub m2: DMatrix<f64>,
    pub m3: DMatrix<f64>,
    /// Gradient on the transform of the requested sequence.
    pub rigid: Option<Rigid>,
}

impl DeformationModel {
    /// `frames` frame codes through a rank-`rank` basis; `M1` and `M2` start
    /// as (rectangular) identities and `M3` at zero, so every frame equals
    /// the base mesh.
    pub fn new(base: &[[f64; 3]], frames: usize, rank: usize) -> Self {
        let n = 3 * base.len();
        Self {
            base: DVector::from_iterator(n, base.iter().flatten().copied()),
            m1: DMatrix::identity(rank, frames),
            m2: DMatrix::identity(rank, rank),
            m3: DMatrix::zeros(n, rank),
            rigid: None,
        }
    }

    pub fn frames(&self) -> usize {
        self.m1.ncols()
    }

    fn check(&self, frame: usize, sequence: Option<usize>) -> Result<()> {
        if frame >= self.frames() {
            return Err(OptimError::FrameOutOfRange {
                frame,
                frames: self.frames(),
            });
        }
        if let (Some(s), Some(r)) = (sequence, &self.rigid) {
            if s >= r.len() {
                return Err(shape("rigid sequence", r.len(), s + 1));
            }
        }
        Ok(())
    }

    fn rigid_for(&self, sequence: Option<usize>) -> Option<&Rigid> {
        Some(&self.rigid.as_ref()?[sequence?])
    }

    pub fn deform(&self, frame: usize, sequence: Option<usize>) -> Result<Vec<[f64; 3]>> {
        self.check(frame, sequence)?;
        let delta = &self.m3 * (&self.m2 * self.m1.column(frame));
        Ok((0..self.base.len() / 3)
            .map(|i| {
                let b = [self.base[3 * i], self.base[3 * i + 1], self.base[3 * i + 2]];
                let p = match self.rigid_for(sequence) {
                    Some(r) => std::array::from_fn(|k| {
                        r[k][0] * b[0] + r[k][1] * b[1] + r[k][2] * b[2] + r[k][3]
                    }),
                    None => b,
                };
                std::array::from_fn(|k| p[k] + delta[3 * i + k])
            })
            .collect())
    }

    pub fn deform_backward(
        &self,
        frame: usize,
        sequence: Option<usize>,
        dl_dv: &[[f64; 3]],
    ) -> Result<DeformGrad> {
        self.check(frame, sequence)?;
        let n = self.base.len() / 3;
        if dl_dv.len() != n {
            return Err(shape("deformation gradient", n, dl_dv.len()));
        }
        let g = DVector::from_iterator(3 * n, dl_dv.iter().flatten().copied());
        let a = self.m1.column(frame).into_owned();
        let b = &self.m2 * &a;
        let gb = self.m3.transpose() * &g;
        let ga = self.m2.transpose() * &gb;
        let mut m1 = DMatrix::zeros(self.m1.nrows(), self.m1.ncols());
        m1.set_column(frame, &ga);
        let rigid = self.rigid_for(sequence).map(|_| {
            let mut d = [[0.0; 4]; 3];
            for i in 0..n {
                let h = [self.base[3 * i], self.base[3 * i + 1], self.base[3 * i + 2], 1.0];
                for (r, row) in d.iter_mut().enumerate() {
                    for c in 0..4 {
                        row[c] += dl_dv[i][r] * h[c];
                    }
                }
            }
            d
        });
        Ok(DeformGrad {
            m1,
            m2: &gb * a.transpose(),
            m3: &g * b.transpose(),
            rigid,
        })
    }
}
