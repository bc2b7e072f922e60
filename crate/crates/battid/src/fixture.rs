//! Assembled problems as JSON, for cross-checking the solver against an
//! independent convex solver.
//!
//! Matrices are stored as lists of rows. The objective is
//! `||y - Pi phi - F vec(M)||^2 + lambda1 ||P||_* + lambda2 ||Dg3 gamma||_1`
//! over unmasked rows, in the unscaled variables.

use std::path::Path;

use battid_core::regression::{IdProblem, N_DYN};
use battid_core::solver::Solution;
use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::report::{read_json, write_json};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProblemBundle {
    pub nu: f64,
    pub lambda1: f64,
    pub lambda2: f64,
    pub y: Vec<f64>,
    pub pi: Vec<Vec<f64>>,
    pub f: Vec<Vec<f64>>,
    pub dg3: Vec<Vec<f64>>,
    pub mask: Vec<bool>,
}

/// Optimal value from an external solver.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Reference {
    pub objective: f64,
    pub solver: String,
    pub status: String,
}

fn rows(m: &DMatrix<f64>) -> Vec<Vec<f64>> {
    m.row_iter().map(|r| r.iter().copied().collect()).collect()
}

fn matrix(rows: &[Vec<f64>], ncols: usize) -> Result<DMatrix<f64>> {
    if rows.iter().any(|r| r.len() != ncols) {
        return Err(Error::Config("ragged matrix in problem bundle".into()));
    }
    Ok(DMatrix::from_fn(rows.len(), ncols, |i, j| rows[i][j]))
}

impl ProblemBundle {
    pub fn new(prob: &IdProblem, lambda1: f64, lambda2: f64) -> Self {
        Self {
            nu: prob.nu(),
            lambda1,
            lambda2,
            y: prob.y().iter().copied().collect(),
            pi: rows(prob.pi()),
            f: rows(prob.f()),
            dg3: rows(prob.dg3()),
            mask: prob.mask().to_vec(),
        }
    }

    pub fn problem(&self) -> Result<IdProblem> {
        let ncols = |m: &[Vec<f64>]| m.first().map_or(0, Vec::len);
        let h = ncols(&self.pi).saturating_sub(N_DYN);
        let dg3 = matrix(&self.dg3, h)?;
        Ok(IdProblem::from_parts(
            DVector::from_vec(self.y.clone()),
            matrix(&self.pi, ncols(&self.pi))?,
            matrix(&self.f, ncols(&self.f))?,
            dg3,
            self.mask.clone(),
            self.nu,
        )?)
    }

    pub fn load(path: &Path) -> Result<Self> {
        read_json(path)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        write_json(path, self)
    }
}

/// The bundle objective at `sol`, recomputed from scratch.
pub fn objective(prob: &IdProblem, sol: &Solution, lambda1: f64, lambda2: f64) -> f64 {
    let fit = prob.residual_sq(&sol.stacked());
    // Square roots of the eigenvalues of the 3x3 Gram matrix; the absolute
    // error on tiny singular values is about sqrt(eps) ||P||.
    let p = sol.p_matrix();
    let nuclear: f64 = (&p * p.transpose())
        .symmetric_eigenvalues()
        .iter()
        .map(|e| e.max(0.0).sqrt())
        .sum();
    let jumps = (prob.dg3() * DVector::from_column_slice(&sol.gamma)).abs().sum();
    fit + lambda1 * nuclear + lambda2 * jumps
}
