//! Rank + L1 regularized least squares by alternating-direction proximal
//! iterations.
//!
//! The problem is
//!
//! ```text
//! min ||y - Pi phi - F vec(M)||^2 + lambda1 ||P||_* + lambda2 ||Dg3 gamma||_1
//! P = [[M, a~], [gamma^T, 1]]
//! ```
//!
//! over `x = [phi; vec(M)]`. Internally the columns of `[Pi F]` are scaled to
//! unit norm; `P` and `Dg3 gamma` are always formed from the unscaled
//! variables, so the penalties mean the same thing with or without scaling.
//! Splitting variables are `Z = P(x)` and `w = Dg3 gamma`.

use alloc::vec;
use alloc::vec::Vec;

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::regression::{IdConfig, IdProblem, N_DYN};
use crate::svd::Svd;

#[derive(Debug, Clone, PartialEq)]
pub struct SolverSettings {
    pub max_iters: usize,
    pub abs_tol: f64,
    pub rel_tol: f64,
    /// Initial penalty parameter.
    pub rho: f64,
    /// Rescale `rho` when the normalized primal and dual residuals differ
    /// by more than a factor `rho_mu`.
    pub adapt_rho: bool,
    pub rho_mu: f64,
    /// Over-relaxation weight in `[1, 2)`.
    pub relaxation: f64,
}

impl Default for SolverSettings {
    fn default() -> Self {
        Self {
            max_iters: 20_000,
            abs_tol: 1e-9,
            rel_tol: 1e-8,
            rho: 1.0,
            adapt_rho: true,
            rho_mu: 5.0,
            relaxation: 1.0,
        }
    }
}

impl SolverSettings {
    pub fn validate(&self) -> Result<()> {
        if self.max_iters == 0 {
            return Err(Error::InvalidConfig("max_iters must be positive"));
        }
        if !(self.abs_tol > 0.0 && self.rel_tol > 0.0) {
            return Err(Error::InvalidConfig("tolerances must be positive"));
        }
        if !(self.rho > 0.0 && self.rho_mu > 1.0) {
            return Err(Error::InvalidConfig("need rho > 0 and rho_mu > 1"));
        }
        if !(1.0..2.0).contains(&self.relaxation) {
            return Err(Error::InvalidConfig("relaxation must be in [1, 2)"));
        }
        Ok(())
    }
}

/// One line of the iteration log.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IterRecord {
    pub iter: usize,
    pub objective: f64,
    pub primal_residual: f64,
    pub dual_residual: f64,
    pub rho: f64,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Diagnostics {
    /// Objective at the returned point, from the full residual.
    pub objective: f64,
    /// Objective at every iterate.
    pub trace: Vec<f64>,
    pub primal_residual: f64,
    pub dual_residual: f64,
    pub iterations: usize,
    /// False when `max_iters` ran out; the best iterate seen is returned.
    pub converged: bool,
    pub rho: f64,
    /// Singular values of `P` at the returned point, descending.
    pub p_singular_values: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Solution {
    pub a_tilde: [f64; 2],
    pub b_tilde: [f64; 3],
    pub gamma: Vec<f64>,
    /// `2 x h`; free variable of the relaxation, or `a~ gamma^T` after a
    /// fixed-denominator refit.
    pub m: DMatrix<f64>,
    pub diagnostics: Diagnostics,
}

impl Solution {
    /// `[[M, a~], [gamma^T, 1]]`.
    pub fn p_matrix(&self) -> DMatrix<f64> {
        p_matrix(&self.a_tilde, &self.gamma, &self.m)
    }

    /// `[phi; vec(M)]`.
    pub fn stacked(&self) -> DVector<f64> {
        let h = self.gamma.len();
        let mut x = DVector::zeros(N_DYN + 3 * h);
        x[0] = self.a_tilde[0];
        x[1] = self.a_tilde[1];
        for k in 0..3 {
            x[2 + k] = self.b_tilde[k];
        }
        for i in 0..h {
            x[N_DYN + i] = self.gamma[i];
            x[N_DYN + h + i] = self.m[(0, i)];
            x[N_DYN + 2 * h + i] = self.m[(1, i)];
        }
        x
    }

    fn from_stacked(x: &DVector<f64>, h: usize, diagnostics: Diagnostics) -> Self {
        Self {
            a_tilde: [x[0], x[1]],
            b_tilde: [x[2], x[3], x[4]],
            gamma: x.rows(N_DYN, h).iter().copied().collect(),
            m: DMatrix::from_fn(2, h, |r, c| x[N_DYN + h + r * h + c]),
            diagnostics,
        }
    }
}

fn p_matrix(a: &[f64; 2], gamma: &[f64], m: &DMatrix<f64>) -> DMatrix<f64> {
    let h = gamma.len();
    DMatrix::from_fn(3, h + 1, |r, c| match (r, c) {
        (2, c) if c == h => 1.0,
        (2, c) => gamma[c],
        (r, c) if c == h => a[r],
        (r, c) => m[(r, c)],
    })
}

/// Singular-value soft thresholding `U max(S - t, 0) V^T`.
pub fn prox_nuclear(x: &DMatrix<f64>, t: f64) -> Result<DMatrix<f64>> {
    Ok(Svd::new(x)?.recompose(|s| (s - t).max(0.0)))
}

/// Elementwise soft threshold `sign(x) max(|x| - t, 0)`.
pub fn prox_l1(x: &DVector<f64>, t: f64) -> DVector<f64> {
    x.map(|v| {
        if v > t {
            v - t
        } else if v < -t {
            v + t
        } else {
            0.0
        }
    })
}

fn singular_values(x: &DMatrix<f64>) -> Result<Vec<f64>> {
    Ok(Svd::new(x)?.s.iter().copied().collect())
}

/// `(a~, gamma)` from the leading singular pair of `P` scaled so its corner
/// entry is 1, or straight from the solution when `enabled` is false.
pub fn extract_rank_one(sol: &Solution, enabled: bool) -> Result<([f64; 2], Vec<f64>)> {
    if !enabled {
        return Ok((sol.a_tilde, sol.gamma.clone()));
    }
    let p = sol.p_matrix();
    let h = sol.gamma.len();
    let svd = Svd::new(&p)?;
    let (s1, s2) = (svd.s[0], svd.s[1]);
    let ratio = if s2 == 0.0 { f64::INFINITY } else { s1 / s2 };
    if ratio < 1e3 {
        return Err(Error::DegenerateP { ratio });
    }
    let corner = s1 * svd.u[(2, 0)] * svd.v[(h, 0)];
    if corner == 0.0 || !corner.is_finite() {
        return Err(Error::DegenerateP { ratio });
    }
    let entry = |r: usize, c: usize| s1 * svd.u[(r, 0)] * svd.v[(c, 0)] / corner;
    Ok(([entry(0, h), entry(1, h)], (0..h).map(|c| entry(2, c)).collect()))
}

/// Least squares on `Pi` alone (M = 0), by Householder QR of the scaled
/// columns.
pub fn ols(prob: &IdProblem) -> Result<DVector<f64>> {
    let (a, y) = prob.active_system();
    let np = prob.pi().ncols();
    let s = prob.scale().rows(0, np).into_owned();
    let mut an = a.columns(0, np).into_owned();
    for c in 0..np {
        an.column_mut(c).scale_mut(1.0 / s[c]);
    }
    let qr = an.qr();
    let qty = qr.q().transpose() * y;
    let z = qr.r().solve_upper_triangular(&qty).ok_or(Error::SingularSystem)?;
    let phi = z.component_div(&s);
    if phi.iter().any(|v| !v.is_finite()) {
        return Err(Error::NumericalFailure);
    }
    Ok(phi)
}

pub fn solve(prob: &IdProblem, cfg: &IdConfig) -> Result<Solution> {
    solve_observed(prob, cfg, &mut |_| {})
}

/// [`solve`] with a callback invoked after every iteration.
pub fn solve_observed(prob: &IdProblem, cfg: &IdConfig, observer: &mut dyn FnMut(&IterRecord)) -> Result<Solution> {
    cfg.validate()?;
    let h = prob.h();
    let n = prob.n_vars();
    let (a, y) = prob.active_system();
    let s = prob.scale().clone();

    let pmap = if cfg.lambda1 > 0.0 {
        Some(PMap::new(h, &s))
    } else {
        None
    };
    let k = if cfg.lambda2 > 0.0 && prob.dg3().nrows() > 0 {
        Some(scaled_jump(prob.dg3(), &s, N_DYN))
    } else {
        None
    };

    let phi0 = ols(prob)?;
    let mut x0 = DVector::zeros(n);
    x0.rows_mut(0, N_DYN + h).copy_from(&phi0);
    for i in 0..h {
        x0[N_DYN + h + i] = phi0[0] * phi0[N_DYN + i];
        x0[N_DYN + 2 * h + i] = phi0[1] * phi0[N_DYN + i];
    }
    let x0 = x0.component_mul(&s);

    let problem = Splitting::new(&a, &y, &s, pmap, k, cfg.lambda1, cfg.lambda2)?;
    let (xs, mut diag) = problem.run(x0, &cfg.solver, observer)?;
    let x = xs.component_div(&s);
    diag.objective = prob.residual_sq(&x) + problem.penalty(&xs)?;
    let mut sol = Solution::from_stacked(&x, h, diag);
    sol.diagnostics.p_singular_values = singular_values(&sol.p_matrix())?;
    Ok(sol)
}

/// Re-solves for `b~` and `gamma` with `a~` held fixed:
///
/// ```text
/// min ||y + a~1 L1 v + a~2 L0 v - [L2 i, L1 i, L0 i] b~ - (L2 G + a~1 L1 G + a~2 L0 G) gamma||^2
///     + lambda2 ||Dg3 gamma||_1
/// ```
///
/// The returned `M` is `a~ gamma^T`, so `P` is exactly rank one.
pub fn refit_fixed_denominator(
    prob: &IdProblem,
    a_tilde: [f64; 2],
    lambda2: f64,
    settings: &SolverSettings,
    observer: &mut dyn FnMut(&IterRecord),
) -> Result<Solution> {
    settings.validate()?;
    if !(lambda2 >= 0.0) {
        return Err(Error::InvalidConfig("lambda2 must be non-negative"));
    }
    let h = prob.h();
    let rows = prob.active_rows();
    let (pi, f, yfull) = (prob.pi(), prob.f(), prob.y());
    let n = 3 + h;
    let a = DMatrix::from_fn(rows.len(), n, |r, c| {
        let j = rows[r];
        if c < 3 {
            pi[(j, 2 + c)]
        } else {
            let g = c - 3;
            pi[(j, N_DYN + g)] + a_tilde[0] * f[(j, g)] + a_tilde[1] * f[(j, h + g)]
        }
    });
    let y = DVector::from_fn(rows.len(), |r, _| {
        let j = rows[r];
        yfull[j] - pi[(j, 0)] * a_tilde[0] - pi[(j, 1)] * a_tilde[1]
    });
    let mut s = DVector::zeros(n);
    for c in 0..n {
        let norm = a.column(c).norm();
        if norm == 0.0 {
            return Err(Error::DegenerateColumn {
                column: if c < 3 { 2 + c } else { N_DYN + c - 3 },
            });
        }
        s[c] = norm;
    }
    let k = if lambda2 > 0.0 && prob.dg3().nrows() > 0 {
        Some(scaled_jump(prob.dg3(), &s, 3))
    } else {
        None
    };
    let problem = Splitting::new(&a, &y, &s, None, k, 0.0, lambda2)?;
    let (xs, mut diag) = problem.run(DVector::zeros(n), settings, observer)?;
    let z = xs.component_div(&s);

    let mut x = DVector::zeros(prob.n_vars());
    x[0] = a_tilde[0];
    x[1] = a_tilde[1];
    for c in 0..3 {
        x[2 + c] = z[c];
    }
    for g in 0..h {
        x[N_DYN + g] = z[3 + g];
        x[N_DYN + h + g] = a_tilde[0] * z[3 + g];
        x[N_DYN + 2 * h + g] = a_tilde[1] * z[3 + g];
    }
    diag.objective = prob.residual_sq(&x) + problem.penalty(&xs)?;
    let mut sol = Solution::from_stacked(&x, h, diag);
    sol.diagnostics.p_singular_values = singular_values(&sol.p_matrix())?;
    Ok(sol)
}

/// `Dg3` acting on scaled variables, placed at column offset `offset`.
fn scaled_jump(dg3: &DMatrix<f64>, s: &DVector<f64>, offset: usize) -> JumpMap {
    let h = dg3.ncols();
    let mut k = DMatrix::from_fn(dg3.nrows(), s.len(), |r, c| {
        if c >= offset && c < offset + h {
            dg3[(r, c - offset)] / s[c]
        } else {
            0.0
        }
    });
    // Unit rows; the L1 weights carry the original norms.
    let mut weight = DVector::zeros(k.nrows());
    for r in 0..k.nrows() {
        let n = k.row(r).norm();
        weight[r] = n;
        if n > 0.0 {
            k.row_mut(r).scale_mut(1.0 / n);
        }
    }
    JumpMap { k, weight }
}

/// `||Dg3 gamma||_1 = sum_r weight_r |(k x)_r|`.
struct JumpMap {
    k: DMatrix<f64>,
    weight: DVector<f64>,
}

impl JumpMap {
    fn l1(&self, x: &DVector<f64>) -> f64 {
        (&self.k * x)
            .iter()
            .zip(self.weight.iter())
            .map(|(v, w)| w * v.abs())
            .sum()
    }

    fn prox(&self, v: &DVector<f64>, t: f64) -> DVector<f64> {
        DVector::from_fn(v.len(), |r, _| {
            let th = t * self.weight[r];
            let x = v[r];
            if x > th {
                x - th
            } else if x < -th {
                x + th
            } else {
                0.0
            }
        })
    }
}

/// `gain * vec(P)` as an affine map of the scaled variables (row-major,
/// `3 x (h+1)`). `gain` brings the largest coefficient to 1.
struct PMap {
    h: usize,
    gain: f64,
    lin: DMatrix<f64>,
    constant: DVector<f64>,
}

impl PMap {
    fn new(h: usize, s: &DVector<f64>) -> Self {
        let w = h + 1;
        let mut vars = Vec::with_capacity(3 * h + 2);
        for r in 0..2 {
            for c in 0..h {
                vars.push((r * w + c, N_DYN + h + r * h + c));
            }
            vars.push((r * w + h, r));
        }
        for c in 0..h {
            vars.push((2 * w + c, N_DYN + c));
        }
        let gain = vars.iter().map(|&(_, v)| s[v]).fold(f64::INFINITY, f64::min);
        let mut lin = DMatrix::zeros(3 * w, s.len());
        for &(e, v) in &vars {
            lin[(e, v)] = gain / s[v];
        }
        let mut constant = DVector::zeros(3 * w);
        constant[2 * w + h] = gain;
        Self { h, gain, lin, constant }
    }

    fn apply(&self, x: &DVector<f64>) -> DVector<f64> {
        &self.lin * x + &self.constant
    }

    fn to_matrix(&self, v: &DVector<f64>) -> DMatrix<f64> {
        DMatrix::from_row_slice(3, self.h + 1, v.as_slice())
    }

    fn vectorize(&self, m: &DMatrix<f64>) -> DVector<f64> {
        DVector::from_iterator(3 * (self.h + 1), m.transpose().iter().copied())
    }

    fn nuclear(&self, x: &DVector<f64>) -> Result<f64> {
        Ok(singular_values(&self.to_matrix(&self.apply(x)))?.iter().sum::<f64>() / self.gain)
    }
}

/// Iterations between penalty updates.
const ADAPT_EVERY: usize = 25;

/// `||y - A x / s||^2 + lambda1 ||P(x)||_* + lambda2 ||K x||_1` in scaled
/// variables, with `A` compressed by QR.
struct Splitting {
    r: DMatrix<f64>,
    qty: DVector<f64>,
    rss0: f64,
    pmap: Option<PMap>,
    k: Option<JumpMap>,
    lambda1: f64,
    lambda2: f64,
}

impl Splitting {
    fn new(
        a: &DMatrix<f64>,
        y: &DVector<f64>,
        s: &DVector<f64>,
        pmap: Option<PMap>,
        k: Option<JumpMap>,
        lambda1: f64,
        lambda2: f64,
    ) -> Result<Self> {
        let n = a.ncols();
        if a.nrows() < n {
            return Err(Error::DimensionMismatch("fewer rows than unknowns"));
        }
        let mut an = a.clone();
        for c in 0..n {
            an.column_mut(c).scale_mut(1.0 / s[c]);
        }
        let qr = an.qr();
        let qty = qr.q().transpose() * y;
        let r = qr.r();
        let rss0 = (y.norm_squared() - qty.norm_squared()).max(0.0);
        Ok(Self {
            r,
            qty,
            rss0,
            pmap,
            k,
            lambda1,
            lambda2,
        })
    }

    fn penalty(&self, x: &DVector<f64>) -> Result<f64> {
        let mut p = 0.0;
        if let Some(pm) = &self.pmap {
            p += self.lambda1 * pm.nuclear(x)?;
        }
        if let Some(k) = &self.k {
            p += self.lambda2 * k.l1(x);
        }
        Ok(p)
    }

    fn objective(&self, x: &DVector<f64>) -> Result<f64> {
        let r = &self.r * x - &self.qty;
        Ok(r.norm_squared() + self.rss0 + self.penalty(x)?)
    }

    /// Pseudo-inverse of `[R; sqrt(rho_p/2) P_lin; sqrt(rho_k/2) K]`.
    fn x_operator(&self, rho: [f64; 2]) -> Result<DMatrix<f64>> {
        let n = self.r.ncols();
        let np = self.pmap.as_ref().map_or(0, |p| p.lin.nrows());
        let nk = self.k.as_ref().map_or(0, |k| k.k.nrows());
        let mut st = DMatrix::zeros(n + np + nk, n);
        st.rows_mut(0, n).copy_from(&self.r);
        if let Some(p) = &self.pmap {
            st.rows_mut(n, np).copy_from(&(&p.lin * libm::sqrt(rho[0] / 2.0)));
        }
        if let Some(k) = &self.k {
            st.rows_mut(n + np, nk).copy_from(&(&k.k * libm::sqrt(rho[1] / 2.0)));
        }
        let svd = Svd::new(&st)?;
        Ok(svd.pseudo_inverse(svd.s.max() * 1e-13))
    }

    fn run(
        &self,
        x0: DVector<f64>,
        st: &SolverSettings,
        observer: &mut dyn FnMut(&IterRecord),
    ) -> Result<(DVector<f64>, Diagnostics)> {
        let n = self.r.ncols();
        if self.pmap.is_none() && self.k.is_none() {
            let pinv = self.x_operator([0.0, 0.0])?;
            let x = &pinv * &self.qty;
            let obj = self.objective(&x)?;
            if !obj.is_finite() {
                return Err(Error::NumericalFailure);
            }
            return Ok((
                x,
                Diagnostics {
                    objective: obj,
                    trace: vec![obj],
                    converged: true,
                    ..Diagnostics::default()
                },
            ));
        }

        // Block 0 is Z = P(x), block 1 is w = K x; each has its own penalty.
        let mut rho = [st.rho, st.rho];
        let mut op = self.x_operator(rho)?;
        let mut x = x0;
        let mut blocks: [Option<Block>; 2] = [
            self.pmap.as_ref().map(|p| Block::new(p.apply(&x))),
            self.k.as_ref().map(|k| Block::new(&k.k * &x)),
        ];
        let m_con: usize = blocks.iter().flatten().map(|b| b.z.len()).sum();
        let lin = |k: usize| -> &DMatrix<f64> {
            if k == 0 {
                &self.pmap.as_ref().expect("block 0 exists").lin
            } else {
                &self.k.as_ref().expect("block 1 exists").k
            }
        };

        let mut trace = Vec::new();
        let mut best = (f64::INFINITY, x.clone());
        let (mut rp, mut rd) = (f64::INFINITY, f64::INFINITY);
        for iter in 1..=st.max_iters {
            // x-update: stacked least squares.
            let mut t = DVector::zeros(op.ncols());
            t.rows_mut(0, n).copy_from(&self.qty);
            let mut off = n;
            for (k, b) in blocks.iter().enumerate() {
                if let Some(b) = b {
                    let mut rhs = &b.z - &b.u;
                    if k == 0 {
                        rhs -= &self.pmap.as_ref().expect("block 0 exists").constant;
                    }
                    rhs *= libm::sqrt(rho[k] / 2.0);
                    t.rows_mut(off, rhs.len()).copy_from(&rhs);
                    off += rhs.len();
                }
            }
            x = &op * &t;

            // Relaxed proximal steps and dual updates.
            let (mut pri_sq, mut dual, mut ax_sq, mut zw_sq, mut ud) =
                (0.0, DVector::zeros(n), 0.0, 0.0, DVector::zeros(n));
            for (k, slot) in blocks.iter_mut().enumerate() {
                let Some(b) = slot.as_mut() else { continue };
                let ax = if k == 0 {
                    self.pmap.as_ref().expect("block 0 exists").apply(&x)
                } else {
                    lin(1) * &x
                };
                let relaxed = &ax * st.relaxation + &b.z * (1.0 - st.relaxation);
                let v = &relaxed + &b.u;
                let znew = if k == 0 {
                    let p = self.pmap.as_ref().expect("block 0 exists");
                    p.vectorize(&prox_nuclear(&p.to_matrix(&v), self.lambda1 / (rho[0] * p.gain))?)
                } else {
                    self.k.as_ref().expect("block 1 exists").prox(&v, self.lambda2 / rho[1])
                };
                b.u += &relaxed - &znew;
                b.pri = (&ax - &znew).norm();
                b.dual = lin(k).tr_mul(&(&znew - &b.z)) * rho[k];
                b.ax = ax.norm();
                b.zn = znew.norm();
                b.ud = lin(k).tr_mul(&b.u) * rho[k];
                b.z = znew;
                pri_sq += b.pri * b.pri;
                dual += &b.dual;
                ax_sq += b.ax * b.ax;
                zw_sq += b.zn * b.zn;
                ud += &b.ud;
            }
            rp = libm::sqrt(pri_sq);
            rd = dual.norm();

            let obj = self.objective(&x)?;
            if !obj.is_finite() || x.iter().any(|v| !v.is_finite()) {
                return Err(Error::NumericalFailure);
            }
            trace.push(obj);
            if obj < best.0 {
                best = (obj, x.clone());
            }
            observer(&IterRecord {
                iter,
                objective: obj,
                primal_residual: rp,
                dual_residual: rd,
                rho: rho[if blocks[0].is_some() { 0 } else { 1 }],
            });

            let eps_pri = libm::sqrt(m_con as f64) * st.abs_tol + st.rel_tol * libm::sqrt(ax_sq.max(zw_sq));
            let eps_dual = libm::sqrt(n as f64) * st.abs_tol + st.rel_tol * ud.norm();
            if rp <= eps_pri && rd <= eps_dual {
                let diag = Diagnostics {
                    objective: obj,
                    trace,
                    primal_residual: rp,
                    dual_residual: rd,
                    iterations: iter,
                    converged: true,
                    rho: rho[if blocks[0].is_some() { 0 } else { 1 }],
                    p_singular_values: Vec::new(),
                };
                return Ok((x, diag));
            }

            if st.adapt_rho && iter % ADAPT_EVERY == 0 {
                // Per block, compare residuals relative to the size of what
                // they measure.
                let grad = self.r.tr_mul(&(&self.r * &x - &self.qty)) * 2.0;
                let mut changed = false;
                for (k, slot) in blocks.iter_mut().enumerate() {
                    let Some(b) = slot.as_mut() else { continue };
                    let pn = b.pri / b.ax.max(b.zn).max(f64::MIN_POSITIVE);
                    let dn = b.dual.norm() / b.ud.norm().max(grad.norm()).max(f64::MIN_POSITIVE);
                    // Early residuals can be wildly unbalanced; move at most
                    // two decades per update.
                    let ratio = libm::sqrt(pn / dn.max(f64::MIN_POSITIVE)).clamp(1e-2, 1e2);
                    if ratio.is_finite() && (ratio > st.rho_mu || ratio * st.rho_mu < 1.0) {
                        let next = (rho[k] * ratio).clamp(1e-12, 1e12);
                        b.u /= next / rho[k];
                        rho[k] = next;
                        changed = true;
                    }
                }
                if changed {
                    op = self.x_operator(rho)?;
                }
            }
        }
        let diag = Diagnostics {
            objective: best.0,
            iterations: trace.len(),
            trace,
            primal_residual: rp,
            dual_residual: rd,
            converged: false,
            rho: rho[if blocks[0].is_some() { 0 } else { 1 }],
            p_singular_values: Vec::new(),
        };
        Ok((best.1, diag))
    }
}

/// Splitting variable, scaled dual and last residual pieces of one block.
struct Block {
    z: DVector<f64>,
    u: DVector<f64>,
    pri: f64,
    dual: DVector<f64>,
    ax: f64,
    zn: f64,
    ud: DVector<f64>,
}

impl Block {
    fn new(z: DVector<f64>) -> Self {
        let m = z.len();
        Self {
            z,
            u: DVector::zeros(m),
            pri: 0.0,
            dual: DVector::zeros(0),
            ax: 0.0,
            zn: 0.0,
            ud: DVector::zeros(0),
        }
    }
}
