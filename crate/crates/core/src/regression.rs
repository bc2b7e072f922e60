//! Data equation assembly.
//!
//! With `phi = [a~1, a~2, b~0, b~1, b~2, gamma_1..gamma_h]` and
//! `M = a~ gamma^T`, every sample satisfies
//!
//! ```text
//! [L2 v](t) = [-L1 v, -L0 v, L2 i, L1 i, L0 i, L2 G] phi + [L1 G, L0 G] vec(M)
//! ```
//!
//! where `G` holds the spline bases evaluated along the SOC trajectory and
//! `vec` stacks the rows of `M`.

use alloc::vec::Vec;

use nalgebra::{DMatrix, DVector};

use crate::bspline::{self, KnotVector};
use crate::error::{Error, Result};
use crate::laguerre::{self, LaguerreBank};
use crate::signals::{sort_permutation, SampledRecord};
use crate::solver::SolverSettings;

/// Number of leading entries of `phi` before the spline control points.
pub const N_DYN: usize = 5;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BurnIn {
    /// `min(ceil(5 / (nu ts)), floor(0.2 len))`.
    Auto,
    Samples(usize),
}

/// How `(a~, gamma)` are finalized after the convex solve.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Refinement {
    /// Take `a~` and `gamma` straight from `phi`.
    Direct,
    /// Leading singular pair of `P`, normalized so its corner entry is 1.
    RankOne,
    /// Keep `a~` from the solve, then re-solve for `b~` and `gamma` with the
    /// denominator fixed. That subproblem is convex and has the bilinear
    /// term in closed form.
    FixedDenominator,
}

#[derive(Debug, Clone, PartialEq)]
pub struct IdConfig {
    /// Laguerre pole, rad/s.
    pub nu: f64,
    /// Distinct spline breakpoints over the observed SOC range.
    pub knot_count: usize,
    /// Weight on the nuclear norm of `P`.
    pub lambda1: f64,
    /// Weight on the L1 norm of third-derivative jumps.
    pub lambda2: f64,
    pub burn_in: BurnIn,
    pub refinement: Refinement,
    /// Undo the residue inflation caused by treating sampled voltage as
    /// piecewise constant (see [`crate::recovery::sample_hold_correction`]).
    pub hold_correction: bool,
    /// Extra identification passes that filter voltage and the spline bases
    /// as linear between samples, splitting off `r0 i` with the previous
    /// pass's `r0`. Such passes skip the hold correction.
    pub linear_passes: usize,
    pub solver: SolverSettings,
}

impl Default for IdConfig {
    fn default() -> Self {
        Self {
            nu: 0.1,
            knot_count: 21,
            lambda1: 2e-6,
            lambda2: 1e-8,
            burn_in: BurnIn::Auto,
            refinement: Refinement::FixedDenominator,
            hold_correction: true,
            linear_passes: 1,
            solver: SolverSettings::default(),
        }
    }
}

impl IdConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.nu > 0.0 && self.nu.is_finite()) {
            return Err(Error::InvalidConfig("nu must be positive"));
        }
        if self.knot_count < 2 {
            return Err(Error::InvalidConfig("knot_count must be at least 2"));
        }
        if !(self.lambda1 >= 0.0 && self.lambda1.is_finite() && self.lambda2 >= 0.0 && self.lambda2.is_finite()) {
            return Err(Error::InvalidConfig("lambda1 and lambda2 must be non-negative"));
        }
        self.solver.validate()
    }

    pub fn burn_in_len(&self, ts: f64, len: usize) -> usize {
        match self.burn_in {
            BurnIn::Auto => laguerre::burn_in_len(self.nu, ts, len),
            BurnIn::Samples(n) => n,
        }
    }
}

/// The assembled regression. Matrices keep one row per record sample;
/// burn-in rows are flagged in `mask` and skipped by the solver.
#[derive(Debug, Clone, PartialEq)]
pub struct IdProblem {
    y: DVector<f64>,
    pi: DMatrix<f64>,
    f: DMatrix<f64>,
    dg3: DMatrix<f64>,
    mask: Vec<bool>,
    scale: DVector<f64>,
    nu: f64,
}

impl IdProblem {
    /// Builds a problem from precomputed blocks. `mask[j]` is true for rows
    /// excluded from the fit.
    pub fn from_parts(
        y: DVector<f64>,
        pi: DMatrix<f64>,
        f: DMatrix<f64>,
        dg3: DMatrix<f64>,
        mask: Vec<bool>,
        nu: f64,
    ) -> Result<Self> {
        let m = y.len();
        if pi.nrows() != m || f.nrows() != m || mask.len() != m {
            return Err(Error::DimensionMismatch("row counts of y, Pi, F and mask differ"));
        }
        if pi.ncols() < N_DYN + 4 {
            return Err(Error::DimensionMismatch("Pi needs 5 + h columns with h >= 4"));
        }
        let h = pi.ncols() - N_DYN;
        if f.ncols() != 2 * h || dg3.ncols() != h {
            return Err(Error::DimensionMismatch("F needs 2h columns and Dg3 h columns"));
        }
        let finite = |s: &[f64]| s.iter().all(|x| x.is_finite());
        if !(finite(y.as_slice()) && finite(pi.as_slice()) && finite(f.as_slice()) && finite(dg3.as_slice())) {
            return Err(Error::NumericalFailure);
        }
        if !(nu > 0.0) {
            return Err(Error::InvalidConfig("nu must be positive"));
        }
        let n_active = mask.iter().filter(|&&x| !x).count();
        if n_active < N_DYN + 3 * h {
            return Err(Error::InvalidRecord("fewer active rows than unknowns"));
        }
        let n = N_DYN + 3 * h;
        let mut scale = DVector::zeros(n);
        for c in 0..n {
            let col = if c < pi.ncols() {
                pi.column(c)
            } else {
                f.column(c - pi.ncols())
            };
            let ss: f64 = col.iter().zip(&mask).filter(|(_, &k)| !k).map(|(v, _)| v * v).sum();
            if ss == 0.0 {
                return Err(Error::DegenerateColumn { column: c });
            }
            scale[c] = libm::sqrt(ss);
        }
        Ok(Self {
            y,
            pi,
            f,
            dg3,
            mask,
            scale,
            nu,
        })
    }

    pub fn y(&self) -> &DVector<f64> {
        &self.y
    }

    pub fn pi(&self) -> &DMatrix<f64> {
        &self.pi
    }

    pub fn f(&self) -> &DMatrix<f64> {
        &self.f
    }

    /// Non-zero rows of `D G3` over the sorted active SOC values.
    pub fn dg3(&self) -> &DMatrix<f64> {
        &self.dg3
    }

    pub fn mask(&self) -> &[bool] {
        &self.mask
    }

    /// Unit-norm factors of the columns of `[Pi F]` over active rows.
    pub fn scale(&self) -> &DVector<f64> {
        &self.scale
    }

    pub fn nu(&self) -> f64 {
        self.nu
    }

    pub fn h(&self) -> usize {
        self.pi.ncols() - N_DYN
    }

    /// Length of `[phi; vec(M)]`.
    pub fn n_vars(&self) -> usize {
        N_DYN + 3 * self.h()
    }

    pub fn active_rows(&self) -> Vec<usize> {
        (0..self.mask.len()).filter(|&j| !self.mask[j]).collect()
    }

    /// `([Pi F], y)` restricted to the active rows, unscaled.
    pub fn active_system(&self) -> (DMatrix<f64>, DVector<f64>) {
        let rows = self.active_rows();
        let np = self.pi.ncols();
        let a = DMatrix::from_fn(rows.len(), self.n_vars(), |r, c| {
            if c < np {
                self.pi[(rows[r], c)]
            } else {
                self.f[(rows[r], c - np)]
            }
        });
        let y = DVector::from_fn(rows.len(), |r, _| self.y[rows[r]]);
        (a, y)
    }

    /// `||y - Pi phi - F vec(M)||^2` over active rows, with `x = [phi; vec(M)]`.
    pub fn residual_sq(&self, x: &DVector<f64>) -> f64 {
        let np = self.pi.ncols();
        let phi = x.rows(0, np);
        let mv = x.rows(np, 2 * self.h());
        let r = &self.y - &self.pi * phi - &self.f * mv;
        r.iter().zip(&self.mask).filter(|(_, &k)| !k).map(|(v, _)| v * v).sum()
    }
}

/// Filters the record and spline bases through the Laguerre bank and stacks
/// the data equation.
pub fn assemble(rec: &SampledRecord, kv: &KnotVector, cfg: &IdConfig) -> Result<IdProblem> {
    assemble_with(rec, kv, cfg, None)
}

/// Like [`assemble`], but the continuous channels are filtered as linear
/// between samples. Voltage is split as `(v - r0 i) + r0 i` with `r0` a prior
/// estimate of the series resistance: the first part is continuous, the
/// second is held like the current. The result needs no hold correction.
pub fn assemble_linear(rec: &SampledRecord, kv: &KnotVector, cfg: &IdConfig, r0: f64) -> Result<IdProblem> {
    if !r0.is_finite() {
        return Err(Error::InvalidParams("series resistance estimate is not finite"));
    }
    assemble_with(rec, kv, cfg, Some(r0))
}

fn assemble_with(rec: &SampledRecord, kv: &KnotVector, cfg: &IdConfig, r0: Option<f64>) -> Result<IdProblem> {
    cfg.validate()?;
    let soc = rec.soc().ok_or(Error::MissingSoc)?;
    let m = rec.len();
    let bank = LaguerreBank::discretize(cfg.nu, rec.ts())?;
    let fi = bank.filter_signal(rec.current())?;
    let fv = match r0 {
        None => bank.filter_signal(rec.voltage())?,
        Some(r0) => {
            let w: Vec<f64> = rec
                .voltage()
                .iter()
                .zip(rec.current())
                .map(|(v, i)| v - r0 * i)
                .collect();
            let mut fw = bank.filter_linear(&w)?;
            for (k, ch) in fw.iter_mut().enumerate() {
                for (x, l) in ch.iter_mut().zip(&fi[k]) {
                    *x += r0 * l;
                }
            }
            fw
        }
    };
    let g = bspline::design_matrix(kv, soc)?;
    let h = kv.h();

    let mut pi = DMatrix::zeros(m, N_DYN + h);
    let mut f = DMatrix::zeros(m, 2 * h);
    for j in 0..m {
        pi[(j, 0)] = -fv[1][j];
        pi[(j, 1)] = -fv[0][j];
        pi[(j, 2)] = fi[2][j];
        pi[(j, 3)] = fi[1][j];
        pi[(j, 4)] = fi[0][j];
    }
    for c in 0..h {
        let col: Vec<f64> = g.column(c).iter().copied().collect();
        let fg = if r0.is_some() {
            bank.filter_linear(&col)?
        } else {
            bank.filter_signal(&col)?
        };
        for j in 0..m {
            pi[(j, N_DYN + c)] = fg[2][j];
            f[(j, c)] = fg[1][j];
            f[(j, h + c)] = fg[0][j];
        }
    }
    let y = DVector::from_vec(fv[2].clone());

    let burn = cfg.burn_in_len(rec.ts(), m).min(m);
    let mask: Vec<bool> = (0..m).map(|j| j < burn).collect();
    let active_soc: Vec<f64> = soc[burn..].to_vec();
    let order = sort_permutation(&active_soc);
    let sorted: Vec<f64> = order.iter().map(|&k| active_soc[k]).collect();
    let dg3 = if sorted.len() >= 2 {
        bspline::jump_matrix(kv, &sorted)?
    } else {
        DMatrix::zeros(0, h)
    };
    IdProblem::from_parts(y, pi, f, dg3, mask, cfg.nu)
}

/// Clamped uniform knots over the record's SOC range.
pub fn knots_for(rec: &SampledRecord, cfg: &IdConfig) -> Result<KnotVector> {
    let (lo, hi) = rec.soc_range()?;
    if !(hi > lo) {
        return Err(Error::InvalidRecord("SOC does not change over the record"));
    }
    KnotVector::clamped_uniform(lo, hi, cfg.knot_count)
}
