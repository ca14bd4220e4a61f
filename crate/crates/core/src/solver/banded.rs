//! LU factorization of banded matrices with partial pivoting inside the band.

use crate::error::{Error, Result};
use crate::grid::BandedOperator;

/// Factors `P A = L U` of a banded matrix.
///
/// Row interchanges can push fill-in up to `lower` extra super-diagonals,
/// so `U` is stored with upper bandwidth `lower + upper`.
#[derive(Debug, Clone)]
pub struct BandedLu {
    size: usize,
    lower: usize,
    /// Upper bandwidth of `U` including fill-in.
    upper: usize,
    /// Row `i` covers columns `i - lower ..= i + upper`.
    factors: Vec<f64>,
    multipliers: Vec<f64>,
    pivots: Vec<usize>,
}

impl BandedLu {
    fn width(&self) -> usize {
        self.lower + self.upper + 1
    }

    fn idx(&self, i: usize, j: usize) -> usize {
        i * self.width() + j + self.lower - i
    }

    pub fn factor(matrix: &BandedOperator) -> Result<Self> {
        let n = matrix.size();
        let kl = matrix.lower();
        let ku = matrix.upper() + kl;
        let mut lu = BandedLu {
            size: n,
            lower: kl,
            upper: ku,
            factors: vec![0.0; n * (2 * kl + matrix.upper() + 1)],
            multipliers: vec![0.0; n * kl.max(1)],
            pivots: vec![0; n],
        };
        for i in 0..n {
            for (j, v) in matrix.row(i) {
                let k = lu.idx(i, j);
                lu.factors[k] = v;
            }
        }
        let scale = matrix.norm_inf();
        let tiny = f64::MIN_POSITIVE.max(1e-15 * scale);

        for k in 0..n {
            let last_row = (k + kl).min(n - 1);
            let last_col = (k + ku).min(n - 1);
            let mut p = k;
            let mut best = lu.factors[lu.idx(k, k)].abs();
            for i in k + 1..=last_row {
                let v = lu.factors[lu.idx(i, k)].abs();
                if v > best {
                    best = v;
                    p = i;
                }
            }
            if !(best > tiny) {
                return Err(Error::SingularPivot { row: k, step: None });
            }
            lu.pivots[k] = p;
            if p != k {
                for j in k..=last_col {
                    let (a, b) = (lu.idx(k, j), lu.idx(p, j));
                    lu.factors.swap(a, b);
                }
            }
            let pivot = lu.factors[lu.idx(k, k)];
            for i in k + 1..=last_row {
                let ik = lu.idx(i, k);
                let l = lu.factors[ik] / pivot;
                lu.factors[ik] = 0.0;
                lu.multipliers[k * kl + (i - k - 1)] = l;
                if l != 0.0 {
                    for j in k + 1..=last_col {
                        let kj = lu.factors[lu.idx(k, j)];
                        let ij = lu.idx(i, j);
                        lu.factors[ij] -= l * kj;
                    }
                }
            }
        }
        Ok(lu)
    }

    pub fn size(&self) -> usize {
        self.size
    }

    pub fn solve(&self, rhs: &[f64]) -> Result<Vec<f64>> {
        if rhs.len() != self.size {
            return Err(Error::invalid(format!(
                "right-hand side has length {}, system has size {}",
                rhs.len(),
                self.size
            )));
        }
        let n = self.size;
        let kl = self.lower;
        let mut x = rhs.to_vec();
        for k in 0..n {
            let p = self.pivots[k];
            if p != k {
                x.swap(k, p);
            }
            let xk = x[k];
            for i in k + 1..=(k + kl).min(n - 1) {
                x[i] -= self.multipliers[k * kl + (i - k - 1)] * xk;
            }
        }
        for k in (0..n).rev() {
            let mut s = x[k];
            for j in k + 1..=(k + self.upper).min(n - 1) {
                s -= self.factors[self.idx(k, j)] * x[j];
            }
            x[k] = s / self.factors[self.idx(k, k)];
        }
        Ok(x)
    }
}
