//! Cubic B-splines over SOC.
//!
//! Knots `z_0 <= ... <= z_{h+3}` define `h` cubic bases `g_0 .. g_{h-1}`;
//! basis `g_i` is supported on `[z_i, z_{i+4})` and the full basis spans
//! `[z_3, z_h]`. Evaluation uses the de Boor-Cox recursion with `0/0 = 0`.

use alloc::vec;
use alloc::vec::Vec;

use nalgebra::{DMatrix, DVector};

use crate::ecm::OcvFunction;
use crate::error::{Error, Result};
use crate::svd::Svd;

const DEGREE: usize = 3;

#[derive(Debug, Clone, PartialEq)]
pub struct KnotVector {
    knots: Vec<f64>,
}

impl KnotVector {
    /// Uniform breakpoints on `[lo, hi]` with both ends repeated four times.
    ///
    /// `breakpoints` counts distinct knots including the two ends, so the
    /// basis count is `h = breakpoints + 2` (21 breakpoints give 23 bases).
    pub fn clamped_uniform(lo: f64, hi: f64, breakpoints: usize) -> Result<Self> {
        if breakpoints < 2 {
            return Err(Error::InvalidKnots("need at least two breakpoints"));
        }
        if !(lo.is_finite() && hi.is_finite() && hi > lo) {
            return Err(Error::InvalidKnots("knot range must satisfy lo < hi"));
        }
        let n = breakpoints - 1;
        let mut knots = Vec::with_capacity(breakpoints + 6);
        knots.extend_from_slice(&[lo; DEGREE]);
        for k in 0..n {
            knots.push(lo + (hi - lo) * (k as f64 / n as f64));
        }
        knots.extend_from_slice(&[hi; DEGREE + 1]);
        Self::from_knots(knots)
    }

    pub fn from_knots(knots: Vec<f64>) -> Result<Self> {
        if knots.len() < 2 * (DEGREE + 1) {
            return Err(Error::InvalidKnots("need at least 8 knots (h >= 4)"));
        }
        if knots.iter().any(|z| !z.is_finite()) {
            return Err(Error::InvalidKnots("knots must be finite"));
        }
        if knots.windows(2).any(|w| w[1] < w[0]) {
            return Err(Error::InvalidKnots("knots must be non-decreasing"));
        }
        let h = knots.len() - DEGREE - 1;
        if !(knots[DEGREE] < knots[h]) {
            return Err(Error::InvalidKnots("empty support"));
        }
        Ok(Self { knots })
    }

    pub fn knots(&self) -> &[f64] {
        &self.knots
    }

    /// Number of basis functions.
    pub fn h(&self) -> usize {
        self.knots.len() - DEGREE - 1
    }

    pub fn degree(&self) -> usize {
        DEGREE
    }

    /// `[z_3, z_h]`.
    pub fn support(&self) -> (f64, f64) {
        (self.knots[DEGREE], self.knots[self.h()])
    }

    /// Index `mu` in `3..h` of the non-empty span `[z_mu, z_{mu+1})` holding
    /// `z`; the right end of the support belongs to the last span.
    fn span(&self, z: f64) -> Option<usize> {
        let (lo, hi) = self.support();
        if !(z >= lo && z <= hi) {
            return None;
        }
        let h = self.h();
        if z == hi {
            let mut mu = h - 1;
            while self.knots[mu] == self.knots[mu + 1] {
                mu -= 1;
            }
            return Some(mu);
        }
        // Largest mu in [3, h-1] with z_mu <= z.
        let (mut a, mut b) = (DEGREE, h - 1);
        while a < b {
            let mid = (a + b).div_ceil(2);
            if self.knots[mid] <= z {
                a = mid;
            } else {
                b = mid - 1;
            }
        }
        Some(a)
    }

    /// Derivatives of orders `0..=DEGREE` of the four bases active at `z`.
    ///
    /// Returns `(first, t)` where `t[d][k]` is the `d`-th derivative of
    /// `g_{first + k}`.
    fn local(&self, z: f64, index: usize) -> Result<(usize, [[f64; 4]; 4])> {
        let mu = self.span(z).ok_or(Error::OutOfSupport { index, value: z })?;
        let zk = &self.knots;
        let first = mu - DEGREE;
        // tab[d][q][k]: d-th derivative of the degree-q basis with index first + k.
        let mut tab = [[[0.0_f64; 5]; 4]; 4];
        tab[0][0][DEGREE] = 1.0;
        for q in 1..=DEGREE {
            for k in 0..4 {
                let i = first + k;
                let left = zk[i + q] - zk[i];
                let right = zk[i + q + 1] - zk[i + 1];
                let wl = if left > 0.0 { (z - zk[i]) / left } else { 0.0 };
                let wr = if right > 0.0 { (zk[i + q + 1] - z) / right } else { 0.0 };
                tab[0][q][k] = wl * tab[0][q - 1][k] + wr * tab[0][q - 1][k + 1];
                let sl = if left > 0.0 { q as f64 / left } else { 0.0 };
                let sr = if right > 0.0 { q as f64 / right } else { 0.0 };
                for d in 1..=q {
                    tab[d][q][k] = sl * tab[d - 1][q - 1][k] - sr * tab[d - 1][q - 1][k + 1];
                }
            }
        }
        let mut out = [[0.0; 4]; 4];
        for (d, row) in out.iter_mut().enumerate() {
            row.copy_from_slice(&tab[d][DEGREE][..4]);
        }
        Ok((first, out))
    }
}

/// Values of all `h` bases at `z`.
pub fn eval_basis(kv: &KnotVector, z: f64) -> Result<Vec<f64>> {
    let (first, t) = kv.local(z, 0)?;
    let mut out = vec![0.0; kv.h()];
    out[first..first + 4].copy_from_slice(&t[0]);
    Ok(out)
}

/// `d`-th derivatives (`d` in `1..=3`) of all `h` bases at `z`.
pub fn eval_deriv(kv: &KnotVector, z: f64, d: usize) -> Result<Vec<f64>> {
    if !(1..=DEGREE).contains(&d) {
        return Err(Error::BadOrder);
    }
    let (first, t) = kv.local(z, 0)?;
    let mut out = vec![0.0; kv.h()];
    out[first..first + 4].copy_from_slice(&t[d]);
    Ok(out)
}

fn fill_rows(kv: &KnotVector, soc: &[f64], d: usize) -> Result<DMatrix<f64>> {
    let mut g = DMatrix::zeros(soc.len(), kv.h());
    for (j, &z) in soc.iter().enumerate() {
        let (first, t) = kv.local(z, j)?;
        for k in 0..4 {
            g[(j, first + k)] = t[d][k];
        }
    }
    Ok(g)
}

/// `m x h` matrix whose row `j` holds the basis values at `soc[j]`.
pub fn design_matrix(kv: &KnotVector, soc: &[f64]) -> Result<DMatrix<f64>> {
    fill_rows(kv, soc, 0)
}

/// Third-derivative rows at non-decreasing SOC values.
pub fn third_deriv_matrix(kv: &KnotVector, soc_sorted: &[f64]) -> Result<DMatrix<f64>> {
    if soc_sorted.windows(2).any(|w| !(w[1] >= w[0])) {
        return Err(Error::UnsortedInput);
    }
    fill_rows(kv, soc_sorted, DEGREE)
}

/// `(m-1) x m` forward difference: `D[i,i] = 1`, `D[i,i+1] = -1`.
pub fn diff_matrix(m: usize) -> Result<DMatrix<f64>> {
    if m < 2 {
        return Err(Error::TooSmall);
    }
    let mut d = DMatrix::zeros(m - 1, m);
    for i in 0..m - 1 {
        d[(i, i)] = 1.0;
        d[(i, i + 1)] = -1.0;
    }
    Ok(d)
}

/// `diff_matrix(m) * third_deriv_matrix(kv, soc_sorted)` with the zero rows
/// removed.
///
/// The third derivative is constant on each knot span, so only pairs of
/// neighbouring samples that straddle a knot give non-zero rows. Dropping
/// the rest leaves `||D G3 gamma||_1` unchanged and keeps the matrix at
/// most `h - 3` rows tall.
pub fn jump_matrix(kv: &KnotVector, soc_sorted: &[f64]) -> Result<DMatrix<f64>> {
    if soc_sorted.len() < 2 {
        return Err(Error::TooSmall);
    }
    let g3 = third_deriv_matrix(kv, soc_sorted)?;
    let mut rows: Vec<Vec<f64>> = Vec::new();
    for j in 0..soc_sorted.len() - 1 {
        let r: Vec<f64> = (0..kv.h()).map(|c| g3[(j, c)] - g3[(j + 1, c)]).collect();
        if r.iter().any(|&x| x != 0.0) {
            rows.push(r);
        }
    }
    Ok(DMatrix::from_fn(rows.len(), kv.h(), |i, c| rows[i][c]))
}

/// `sum_i gamma_i g_i(z)`.
#[derive(Debug, Clone, PartialEq)]
pub struct SplineCurve {
    basis: KnotVector,
    gamma: Vec<f64>,
}

impl SplineCurve {
    pub fn new(basis: KnotVector, gamma: Vec<f64>) -> Result<Self> {
        if gamma.len() != basis.h() {
            return Err(Error::DimensionMismatch("gamma length must equal basis count"));
        }
        if gamma.iter().any(|g| !g.is_finite()) {
            return Err(Error::InvalidConfig("control points must be finite"));
        }
        Ok(Self { basis, gamma })
    }

    /// Least-squares control points for samples `(soc[j], values[j])`.
    pub fn fit(basis: KnotVector, soc: &[f64], values: &[f64]) -> Result<Self> {
        if soc.len() != values.len() {
            return Err(Error::LengthMismatch {
                left: soc.len(),
                right: values.len(),
            });
        }
        let g = design_matrix(&basis, soc)?;
        let y = DVector::from_column_slice(values);
        let svd = Svd::new(&g)?;
        let gamma = svd.pseudo_inverse(1e-12 * svd.s.max()) * y;
        Self::new(basis, gamma.as_slice().to_vec())
    }

    pub fn basis(&self) -> &KnotVector {
        &self.basis
    }

    pub fn gamma(&self) -> &[f64] {
        &self.gamma
    }

    pub fn value(&self, z: f64) -> Result<f64> {
        let (first, t) = self.basis.local(z, 0)?;
        Ok((0..4).map(|k| t[0][k] * self.gamma[first + k]).sum())
    }

    pub fn derivative(&self, z: f64, d: usize) -> Result<f64> {
        if !(1..=DEGREE).contains(&d) {
            return Err(Error::BadOrder);
        }
        let (first, t) = self.basis.local(z, 0)?;
        Ok((0..4).map(|k| t[d][k] * self.gamma[first + k]).sum())
    }

    /// `n` evenly spaced `(soc, ocv)` pairs across the support, `n >= 2`.
    pub fn sample(&self, n: usize) -> Vec<(f64, f64)> {
        let (lo, hi) = self.basis.support();
        let n = n.max(2);
        (0..n)
            .map(|k| {
                let z = if k + 1 == n {
                    hi
                } else {
                    lo + (hi - lo) * k as f64 / (n - 1) as f64
                };
                (z, self.value(z).unwrap_or(f64::NAN))
            })
            .collect()
    }
}

impl OcvFunction for SplineCurve {
    fn eval(&self, soc: f64) -> f64 {
        self.value(soc).unwrap_or(f64::NAN)
    }

    fn range(&self) -> (f64, f64) {
        self.basis.support()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand_chacha::ChaCha8Rng;
    use rand_core::{RngCore, SeedableRng};

    fn unit(rng: &mut ChaCha8Rng) -> f64 {
        (rng.next_u64() >> 11) as f64 / (1u64 << 53) as f64
    }

    /// Control points reproducing `z^3` exactly: the blossom
    /// `z_{i+1} z_{i+2} z_{i+3}`.
    fn cubic_gamma(kv: &KnotVector) -> Vec<f64> {
        let z = kv.knots();
        (0..kv.h()).map(|i| z[i + 1] * z[i + 2] * z[i + 3]).collect()
    }

    #[test]
    fn clamped_counts() {
        let kv = KnotVector::clamped_uniform(0.2, 0.9, 21).unwrap();
        assert_eq!(kv.h(), 23);
        assert_eq!(kv.knots().len(), 27);
        assert_eq!(kv.support(), (0.2, 0.9));
        assert!(KnotVector::clamped_uniform(0.5, 0.5, 21).is_err());
        assert!(KnotVector::from_knots(vec![0.0, 1.0, 0.5, 1.0, 2.0, 3.0, 4.0, 5.0]).is_err());
    }

    #[test]
    fn clamped_left_boundary_interpolates() {
        let kv = KnotVector::clamped_uniform(0.0, 1.0, 6).unwrap();
        let g = eval_basis(&kv, 0.0).unwrap();
        assert_eq!(g[0], 1.0);
        assert!(g[1..].iter().all(|&x| x == 0.0));
        let g = eval_basis(&kv, 1.0).unwrap();
        assert_eq!(g[kv.h() - 1], 1.0);
    }

    #[test]
    fn uniform_cubic_at_knot() {
        let kv = KnotVector::from_knots((0..8).map(|k| k as f64).collect()).unwrap();
        let g = eval_basis(&kv, 3.0).unwrap();
        let want = [1.0 / 6.0, 4.0 / 6.0, 1.0 / 6.0, 0.0];
        for (a, b) in g.iter().zip(want) {
            assert!((a - b).abs() < 1e-15);
        }
    }

    #[test]
    fn out_of_support_and_bad_order() {
        let kv = KnotVector::clamped_uniform(0.2, 0.9, 6).unwrap();
        assert!(matches!(eval_basis(&kv, 0.1), Err(Error::OutOfSupport { .. })));
        assert_eq!(eval_deriv(&kv, 0.5, 4), Err(Error::BadOrder));
        assert_eq!(eval_deriv(&kv, 0.5, 0), Err(Error::BadOrder));
        let err = design_matrix(&kv, &[0.5, 0.6, 0.95]).unwrap_err();
        assert_eq!(err, Error::OutOfSupport { index: 2, value: 0.95 });
    }

    #[test]
    fn partition_of_unity_and_local_support() {
        let kv = KnotVector::clamped_uniform(0.1, 0.95, 21).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let z = kv.knots();
        for _ in 0..1000 {
            let x = 0.1 + 0.85 * unit(&mut rng);
            let g = eval_basis(&kv, x).unwrap();
            assert!((g.iter().sum::<f64>() - 1.0).abs() < 1e-12);
            assert!(g.iter().filter(|&&v| v != 0.0).count() <= 4);
            for (i, &v) in g.iter().enumerate() {
                if !(x >= z[i] && x < z[i + 4]) {
                    assert_eq!(v, 0.0);
                }
                assert!(v >= 0.0);
            }
            let d1 = eval_deriv(&kv, x, 1).unwrap();
            assert!(d1.iter().sum::<f64>().abs() < 1e-9);
        }
    }

    #[test]
    fn derivatives_match_finite_differences() {
        let kv = KnotVector::clamped_uniform(0.0, 1.0, 11).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let step = 1e-6;
        let mut checked = 0;
        while checked < 200 {
            let x = unit(&mut rng);
            if kv.knots().iter().any(|k| (k - x).abs() < 1e-4) {
                continue;
            }
            checked += 1;
            for d in 1..=3 {
                let (up, dn) = if d == 1 {
                    (eval_basis(&kv, x + step).unwrap(), eval_basis(&kv, x - step).unwrap())
                } else {
                    (
                        eval_deriv(&kv, x + step, d - 1).unwrap(),
                        eval_deriv(&kv, x - step, d - 1).unwrap(),
                    )
                };
                let an = eval_deriv(&kv, x, d).unwrap();
                // scale-aware: derivatives grow like (1/span)^d
                let scale = an.iter().fold(1.0_f64, |m, v| m.max(v.abs()));
                for i in 0..kv.h() {
                    let fd = (up[i] - dn[i]) / (2.0 * step);
                    assert!(
                        (fd - an[i]).abs() <= 1e-5 * scale,
                        "d={d} i={i} x={x}: {fd} vs {}",
                        an[i]
                    );
                }
            }
        }
    }

    #[test]
    fn third_derivative_is_constant_per_span() {
        let kv = KnotVector::clamped_uniform(0.0, 1.0, 6).unwrap();
        let a = eval_deriv(&kv, 0.41, 3).unwrap();
        let b = eval_deriv(&kv, 0.59, 3).unwrap();
        assert_eq!(a, b);
        let g3 = third_deriv_matrix(&kv, &[0.41, 0.59]).unwrap();
        assert_eq!(g3.row(0), g3.row(1));
        assert_eq!(third_deriv_matrix(&kv, &[0.5, 0.4]), Err(Error::UnsortedInput));
    }

    #[test]
    fn design_matrix_rows() {
        let kv = KnotVector::clamped_uniform(0.0, 1.0, 8).unwrap();
        let g = design_matrix(&kv, &[0.3]).unwrap();
        assert_eq!(g.shape(), (1, kv.h()));
        assert!((g.row(0).sum() - 1.0).abs() < 1e-15);
        let g = design_matrix(&kv, &[0.7; 5]).unwrap();
        for j in 1..5 {
            assert_eq!(g.row(j), g.row(0));
        }
    }

    #[test]
    fn diff_matrix_pattern() {
        let d = diff_matrix(3).unwrap();
        assert_eq!(d, DMatrix::from_row_slice(2, 3, &[1.0, -1.0, 0.0, 0.0, 1.0, -1.0]));
        assert_eq!(diff_matrix(1), Err(Error::TooSmall));
        let d = diff_matrix(6).unwrap();
        assert!((&d * DVector::from_element(6, 2.5)).iter().all(|&x| x == 0.0));
        let ramp = DVector::from_fn(6, |i, _| i as f64);
        assert!((&d * ramp).iter().all(|&x| x == -1.0));
    }

    #[test]
    fn global_cubic_has_no_third_derivative_jumps() {
        let kv = KnotVector::clamped_uniform(0.15, 0.9, 21).unwrap();
        let gamma = DVector::from_vec(cubic_gamma(&kv));
        let curve = SplineCurve::new(kv.clone(), gamma.as_slice().to_vec()).unwrap();
        for x in [0.15, 0.3, 0.55, 0.9] {
            assert!((curve.value(x).unwrap() - x * x * x).abs() < 1e-14);
        }
        let soc: Vec<f64> = (0..500).map(|k| 0.15 + 0.75 * k as f64 / 499.0).collect();
        let g3 = third_deriv_matrix(&kv, &soc).unwrap();
        let v = &g3 * &gamma;
        assert!(v.iter().all(|x| (x - 6.0).abs() < 1e-9));
        let dg3 = &diff_matrix(soc.len()).unwrap() * &g3;
        assert!((&dg3 * &gamma).amax() < 1e-8);
        let jumps = jump_matrix(&kv, &soc).unwrap();
        assert_eq!(jumps.nrows(), 19);
        assert!((&jumps * &gamma).amax() < 1e-8);
    }

    #[test]
    fn jump_matrix_equals_dense_product_without_zero_rows() {
        let kv = KnotVector::clamped_uniform(0.0, 1.0, 6).unwrap();
        let soc = [0.05, 0.1, 0.1, 0.3, 0.31, 0.5, 0.99];
        let dense = &diff_matrix(soc.len()).unwrap() * &third_deriv_matrix(&kv, &soc).unwrap();
        let j = jump_matrix(&kv, &soc).unwrap();
        let nz: Vec<_> = (0..dense.nrows())
            .filter(|&r| dense.row(r).iter().any(|&x| x != 0.0))
            .collect();
        assert_eq!(j.nrows(), nz.len());
        for (k, &r) in nz.iter().enumerate() {
            assert_eq!(j.row(k), dense.row(r));
        }
    }

    #[test]
    fn fit_reproduces_a_spline() {
        let kv = KnotVector::clamped_uniform(0.0, 1.0, 6).unwrap();
        let gamma: Vec<f64> = (0..kv.h())
            .map(|i| 3.0 + 0.1 * i as f64 + 0.02 * (i * i) as f64)
            .collect();
        let truth = SplineCurve::new(kv.clone(), gamma.clone()).unwrap();
        let soc: Vec<f64> = (0..200).map(|k| k as f64 / 199.0).collect();
        let vals: Vec<f64> = soc.iter().map(|&z| truth.value(z).unwrap()).collect();
        let fit = SplineCurve::fit(kv, &soc, &vals).unwrap();
        for (a, b) in fit.gamma().iter().zip(&gamma) {
            assert!((a - b).abs() < 1e-10);
        }
        assert_eq!(fit.range(), (0.0, 1.0));
        assert!(fit.eval(1.5).is_nan());
    }
}
