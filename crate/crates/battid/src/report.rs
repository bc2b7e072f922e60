//! JSON reports and plot-ready tables.

use std::fmt::Write as _;
use std::path::Path;

use battid_core::ecm::EcmParams;
use battid_core::metrics::FitScore;
use battid_core::pipeline::Identification;
use battid_core::recovery::Recovered;
use battid_core::signals::SampledRecord;
use serde::{Deserialize, Serialize};

use crate::csvio::{atomic_write, write_table};
use crate::error::{Error, Result};

/// Points in every written OCV table.
pub const OCV_POINTS: usize = 201;

/// Tool version and config hash, first in every JSON file.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Stamp {
    pub battid_version: String,
    pub config_sha256: String,
}

impl Stamp {
    pub fn new(config_sha256: &str) -> Self {
        Self {
            battid_version: env!("CARGO_PKG_VERSION").to_string(),
            config_sha256: config_sha256.to_string(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ParamsJson {
    pub r0_ohm: f64,
    pub r1_ohm: f64,
    pub r2_ohm: f64,
    pub c1_farad: f64,
    pub c2_farad: f64,
    pub tau1_s: f64,
    pub tau2_s: f64,
}

impl From<&Recovered> for ParamsJson {
    fn from(r: &Recovered) -> Self {
        Self {
            r0_ohm: r.r0,
            r1_ohm: r.r1,
            r2_ohm: r.r2,
            c1_farad: r.c1,
            c2_farad: r.c2,
            tau1_s: r.tau1,
            tau2_s: r.tau2,
        }
    }
}

impl From<&EcmParams> for ParamsJson {
    fn from(p: &EcmParams) -> Self {
        Self {
            r0_ohm: p.r0,
            r1_ohm: p.r1,
            r2_ohm: p.r2,
            c1_farad: p.c1,
            c2_farad: p.c2,
            tau1_s: p.tau1(),
            tau2_s: p.tau2(),
        }
    }
}

impl ParamsJson {
    pub fn values(&self) -> [f64; 7] {
        [
            self.r0_ohm,
            self.r1_ohm,
            self.r2_ohm,
            self.c1_farad,
            self.c2_farad,
            self.tau1_s,
            self.tau2_s,
        ]
    }
}

pub const PARAM_NAMES: [&str; 7] = ["r0_ohm", "r1_ohm", "r2_ohm", "c1_farad", "c2_farad", "tau1_s", "tau2_s"];

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScoreJson {
    pub rmse_v: f64,
    pub vaf_percent: f64,
    pub n_samples: usize,
}

impl From<&FitScore> for ScoreJson {
    fn from(s: &FitScore) -> Self {
        Self {
            rmse_v: s.rmse,
            vaf_percent: s.vaf,
            n_samples: s.n_samples,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct FlagsJson {
    pub non_physical: bool,
    pub negative_coefficient: bool,
    pub equal_time_constants: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolverJson {
    pub converged: bool,
    pub lambda1: f64,
    pub lambda2: f64,
    pub relaxed_iterations: usize,
    pub refit_iterations: usize,
    pub relaxed_objective: f64,
    pub objective: f64,
    /// Of `P` after the convex relaxation.
    pub p_singular_values: Vec<f64>,
}

/// Everything `identify` writes to `report.json`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IdReport {
    #[serde(flatten)]
    pub stamp: Stamp,
    pub params: ParamsJson,
    /// Before the sample-hold correction.
    pub raw_params: ParamsJson,
    pub flags: FlagsJson,
    /// In-sample, after burn-in; absent when the model is not physical.
    pub fit: Option<ScoreJson>,
    pub holdout: Option<ScoreJson>,
    pub solver: SolverJson,
    pub a_tilde: [f64; 2],
    pub b_tilde: [f64; 3],
    pub burn_in_samples: usize,
    pub knots: Vec<f64>,
    pub gamma: Vec<f64>,
}

impl IdReport {
    pub fn new(id: &Identification, lambda: (f64, f64), holdout: Option<&FitScore>, config_sha256: &str) -> Self {
        let f = id.recovered.flags;
        Self {
            stamp: Stamp::new(config_sha256),
            params: (&id.recovered).into(),
            raw_params: (&id.raw).into(),
            flags: FlagsJson {
                non_physical: f.non_physical,
                negative_coefficient: f.negative_coefficient,
                equal_time_constants: f.equal_time_constants,
            },
            fit: id.score.as_ref().map(Into::into),
            holdout: holdout.map(Into::into),
            solver: SolverJson {
                converged: id.report().converged,
                lambda1: lambda.0,
                lambda2: lambda.1,
                relaxed_iterations: id.relaxed.diagnostics.iterations,
                refit_iterations: id.solution.diagnostics.iterations,
                relaxed_objective: id.relaxed.diagnostics.objective,
                objective: id.solution.diagnostics.objective,
                p_singular_values: id.relaxed.diagnostics.p_singular_values.clone(),
            },
            a_tilde: id.solution.a_tilde,
            b_tilde: id.solution.b_tilde,
            burn_in_samples: id.burn_in,
            knots: id.knots.knots().to_vec(),
            gamma: id.solution.gamma.clone(),
        }
    }

    /// Short human-readable summary.
    pub fn summary(&self) -> String {
        let p = &self.params;
        let mut s = String::new();
        let _ = writeln!(s, "R0 = {:.6} ohm", p.r0_ohm);
        let _ = writeln!(
            s,
            "R1 = {:.6} ohm   C1 = {:.4} F   tau1 = {:.4} s",
            p.r1_ohm, p.c1_farad, p.tau1_s
        );
        let _ = writeln!(
            s,
            "R2 = {:.6} ohm   C2 = {:.4} F   tau2 = {:.4} s",
            p.r2_ohm, p.c2_farad, p.tau2_s
        );
        match &self.fit {
            Some(f) => {
                let _ = writeln!(
                    s,
                    "fit: RMSE = {:.4} mV, VAF = {:.4} % over {} samples",
                    f.rmse_v * 1e3,
                    f.vaf_percent,
                    f.n_samples
                );
            }
            None => {
                let _ = writeln!(s, "fit: not scored (non-physical parameters)");
            }
        }
        if let Some(h) = &self.holdout {
            let _ = writeln!(
                s,
                "holdout: RMSE = {:.4} mV, VAF = {:.4} %",
                h.rmse_v * 1e3,
                h.vaf_percent
            );
        }
        let fl = &self.flags;
        if fl.non_physical || fl.negative_coefficient || fl.equal_time_constants {
            let _ = writeln!(
                s,
                "flags: non_physical={} negative_coefficient={} equal_time_constants={}",
                fl.non_physical, fl.negative_coefficient, fl.equal_time_constants
            );
        }
        let _ = write!(
            s,
            "solver: {} after {} + {} iterations (lambda1 = {:e}, lambda2 = {:e})",
            if self.solver.converged {
                "converged"
            } else {
                "NOT converged"
            },
            self.solver.relaxed_iterations,
            self.solver.refit_iterations,
            self.solver.lambda1,
            self.solver.lambda2
        );
        s
    }
}

/// Pretty JSON through an atomic write.
pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let text = serde_json::to_string_pretty(value).map_err(|e| Error::Parse {
        path: path.to_path_buf(),
        message: e.to_string(),
    })?;
    atomic_write(path, |w| {
        w.write_all(text.as_bytes())?;
        w.write_all(b"\n")
    })
}

pub fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    serde_json::from_str(&text).map_err(|e| Error::Parse {
        path: path.to_path_buf(),
        message: e.to_string(),
    })
}

/// `soc,ocv_v` at [`OCV_POINTS`] points across `range`.
pub fn write_ocv_table(path: &Path, header: &str, range: (f64, f64), ocv: impl Fn(f64) -> f64) -> Result<()> {
    let rows = soc_grid(range, OCV_POINTS).into_iter().map(|z| vec![z, ocv(z)]);
    write_table(path, header, &["soc", "ocv_v"], rows)
}

/// `n` evenly spaced points, both ends included.
pub fn soc_grid((lo, hi): (f64, f64), n: usize) -> Vec<f64> {
    let n = n.max(2);
    (0..n)
        .map(|k| {
            if k + 1 == n {
                hi
            } else {
                lo + (hi - lo) * k as f64 / (n - 1) as f64
            }
        })
        .collect()
}

/// Measured against predicted voltage, one row per sample.
pub fn write_prediction(path: &Path, header: &str, rec: &SampledRecord, prediction: &[f64]) -> Result<()> {
    let rows = (0..rec.len()).map(|j| {
        let v = rec.voltage()[j];
        vec![rec.time(j), rec.current()[j], v, prediction[j], v - prediction[j]]
    });
    write_table(
        path,
        header,
        &["time_s", "current_a", "voltage_v", "predicted_v", "residual_v"],
        rows,
    )
}
