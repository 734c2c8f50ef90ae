//! Banded Cholesky factorization: the direct solver behind the dense oracle.

use crate::error::{MagError, Result};

/// Lower-triangular band factor `L` of an SPD matrix with half-bandwidth `bw`.
/// Row `i` stores columns `i - bw ..= i` contiguously.
#[derive(Debug, Clone)]
pub(crate) struct BandCholesky {
    n: usize,
    bw: usize,
    l: Vec<f64>,
}

impl BandCholesky {
    /// Factors the symmetric matrix whose lower band is given by `entry(i, j)`, `j <= i`.
    pub(crate) fn factor(n: usize, bw: usize, entry: impl Fn(usize, usize) -> f64) -> Result<Self> {
        let w = bw + 1;
        let mut l = vec![0.0; n * w];
        for i in 0..n {
            let j0 = i.saturating_sub(bw);
            for j in j0..=i {
                let k0 = j0.max(j.saturating_sub(bw));
                let ri = i * w + bw - i;
                let rj = j * w + bw - j;
                let mut s = entry(i, j);
                for k in k0..j {
                    s -= l[ri + k] * l[rj + k];
                }
                if j == i {
                    if !(s > 0.0) {
                        return Err(MagError::NotPositiveDefinite);
                    }
                    l[ri + i] = s.sqrt();
                } else {
                    l[ri + j] = s / l[rj + j];
                }
            }
        }
        Ok(BandCholesky { n, bw, l })
    }

    /// Overwrites `b` with `A^{-1} b`.
    pub(crate) fn solve(&self, b: &mut [f64]) {
        let (n, bw, w) = (self.n, self.bw, self.bw + 1);
        for i in 0..n {
            let ri = i * w + bw - i;
            let mut s = b[i];
            for k in i.saturating_sub(bw)..i {
                s -= self.l[ri + k] * b[k];
            }
            b[i] = s / self.l[ri + i];
        }
        for i in (0..n).rev() {
            b[i] /= self.l[i * w + bw];
            let v = b[i];
            let ri = i * w + bw - i;
            for k in i.saturating_sub(bw)..i {
                b[k] -= self.l[ri + k] * v;
            }
        }
    }
}
