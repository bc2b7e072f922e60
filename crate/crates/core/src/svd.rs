//! One-sided Jacobi SVD for the small dense matrices used here.
//!
//! nalgebra's bidiagonal SVD returns wrong factors (and wrong singular
//! values) for some exactly rank-deficient inputs, e.g. integer rank-one
//! matrices, which the rank-one machinery produces on purpose. Jacobi
//! rotations have no such failure mode and give singular values to high
//! relative accuracy.

use alloc::vec::Vec;

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::math;

const MAX_SWEEPS: usize = 80;

/// `A = U diag(s) V^T` with `s` sorted descending. `U` is `m x k` and `V` is
/// `n x k`, `k = min(m, n)`. Columns of `U` paired with a zero singular value
/// are zero.
#[derive(Debug, Clone)]
pub(crate) struct Svd {
    pub u: DMatrix<f64>,
    pub s: DVector<f64>,
    pub v: DMatrix<f64>,
}

impl Svd {
    pub fn new(a: &DMatrix<f64>) -> Result<Self> {
        if a.iter().any(|x| !x.is_finite()) {
            return Err(Error::SvdFailure);
        }
        if a.nrows() >= a.ncols() {
            tall(a.clone())
        } else {
            let t = tall(a.transpose())?;
            Ok(Self { u: t.v, s: t.s, v: t.u })
        }
    }

    /// `U diag(f(s)) V^T`.
    pub fn recompose(&self, f: impl Fn(f64) -> f64) -> DMatrix<f64> {
        let mut us = self.u.clone();
        for (k, mut c) in us.column_iter_mut().enumerate() {
            c *= f(self.s[k]);
        }
        us * self.v.transpose()
    }

    /// `V diag(1/s) U^T`, dropping singular values at or below `cutoff`.
    pub fn pseudo_inverse(&self, cutoff: f64) -> DMatrix<f64> {
        let mut vs = self.v.clone();
        for (k, mut c) in vs.column_iter_mut().enumerate() {
            let s = self.s[k];
            c *= if s > cutoff { 1.0 / s } else { 0.0 };
        }
        vs * self.u.transpose()
    }
}

fn tall(mut w: DMatrix<f64>) -> Result<Svd> {
    let n = w.ncols();
    let mut v = DMatrix::<f64>::identity(n, n);
    let mut converged = n < 2;
    // Columns reduced to roundoff of the whole matrix count as zero;
    // rotating them against each other would never settle.
    let floor = (f64::EPSILON * w.norm()) * (f64::EPSILON * w.norm());
    // A computed dot product of orthogonal columns is only zero to about
    // rows * eps; a tighter test can cycle forever on long columns.
    let tol = f64::EPSILON * w.nrows() as f64;
    for _ in 0..MAX_SWEEPS {
        let mut rotated = false;
        for p in 0..n {
            for q in p + 1..n {
                let alpha = w.column(p).norm_squared();
                let beta = w.column(q).norm_squared();
                let gamma = w.column(p).dot(&w.column(q));
                if alpha <= floor || beta <= floor || gamma.abs() <= tol * math::sqrt(alpha * beta) {
                    continue;
                }
                rotated = true;
                let zeta = (beta - alpha) / (2.0 * gamma);
                let t = zeta.signum() / (zeta.abs() + math::sqrt(1.0 + zeta * zeta));
                let c = 1.0 / math::sqrt(1.0 + t * t);
                let s = c * t;
                rotate(&mut w, p, q, c, s);
                rotate(&mut v, p, q, c, s);
            }
        }
        if !rotated {
            converged = true;
            break;
        }
    }
    if !converged {
        return Err(Error::SvdFailure);
    }

    let norms: Vec<f64> = (0..n).map(|k| w.column(k).norm()).collect();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| norms[b].total_cmp(&norms[a]));
    let m = w.nrows();
    let mut u = DMatrix::zeros(m, n);
    let mut vv = DMatrix::zeros(n, n);
    let mut s = DVector::zeros(n);
    for (k, &j) in order.iter().enumerate() {
        s[k] = norms[j];
        if norms[j] > 0.0 {
            u.set_column(k, &(w.column(j) / norms[j]));
        }
        vv.set_column(k, &v.column(j));
    }
    Ok(Svd { u, s, v: vv })
}

fn rotate(a: &mut DMatrix<f64>, p: usize, q: usize, c: f64, s: f64) {
    for r in 0..a.nrows() {
        let (x, y) = (a[(r, p)], a[(r, q)]);
        a[(r, p)] = c * x - s * y;
        a[(r, q)] = s * x + c * y;
    }
}
