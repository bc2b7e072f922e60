//! Regularization grid search and the Monte Carlo harness.
//!
//! Cells and runs are independent and run on the current rayon pool; results
//! keep input order, so tables are identical for any thread count.

use battid_core::ecm::{self, EcmParams, OcvFunction, SimConfig};
use battid_core::pipeline::{self, Identification};
use battid_core::regression::{self, IdConfig};
use battid_core::signals::SampledRecord;
use battid_core::Error as CoreError;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::report::{soc_grid, ParamsJson};

#[derive(Debug, Clone, PartialEq)]
pub struct GridSpec {
    pub lambda1: Vec<f64>,
    pub lambda2: Vec<f64>,
}

impl GridSpec {
    pub fn validate(&self) -> Result<()> {
        if self.lambda1.is_empty() || self.lambda2.is_empty() {
            return Err(Error::Config("lambda grid must be non-empty in both directions".into()));
        }
        if let Some(x) = self
            .lambda1
            .iter()
            .chain(&self.lambda2)
            .find(|x| !(**x >= 0.0 && x.is_finite()))
        {
            return Err(Error::Config(format!(
                "lambda grid values must be non-negative, got {x}"
            )));
        }
        Ok(())
    }

    /// `n` log-spaced values from `lo` to `hi`.
    pub fn log_spaced(lo: f64, hi: f64, n: usize) -> Vec<f64> {
        if n == 1 {
            return vec![lo];
        }
        let (a, b) = (lo.ln(), hi.ln());
        (0..n)
            .map(|k| (a + (b - a) * k as f64 / (n - 1) as f64).exp())
            .collect()
    }

    /// Row-major over `lambda1`.
    pub fn cells(&self) -> Vec<(f64, f64)> {
        self.lambda1
            .iter()
            .flat_map(|&l1| self.lambda2.iter().map(move |&l2| (l1, l2)))
            .collect()
    }
}

#[derive(Debug, Clone)]
pub struct GridCell {
    pub lambda1: f64,
    pub lambda2: f64,
    pub outcome: std::result::Result<Identification, CoreError>,
}

impl GridCell {
    /// RMSE when the cell produced a scorable model.
    pub fn rmse(&self) -> Option<f64> {
        self.outcome.as_ref().ok().and_then(|id| id.score).map(|s| s.rmse)
    }

    pub fn status(&self) -> &'static str {
        match &self.outcome {
            Ok(id) if id.score.is_some() => "ok",
            Ok(_) => "non-physical",
            Err(_) => "failed",
        }
    }
}

#[derive(Debug, Clone)]
pub struct GridResult {
    pub cells: Vec<GridCell>,
    /// Index into `cells`.
    pub best: usize,
}

impl GridResult {
    pub fn best(&self) -> &GridCell {
        &self.cells[self.best]
    }
}

/// Scores every `(lambda1, lambda2)` cell by in-sample RMSE and returns the
/// smallest. Ties go to the larger `lambda1`, then the larger `lambda2`.
pub fn grid_search(rec: &SampledRecord, grid: &GridSpec, cfg: &IdConfig) -> Result<GridResult> {
    grid.validate()?;
    cfg.validate()?;
    let knots = regression::knots_for(rec, cfg)?;
    let prob = regression::assemble(rec, &knots, cfg)?;
    let cells: Vec<GridCell> = grid
        .cells()
        .into_par_iter()
        .map(|(lambda1, lambda2)| {
            let c = IdConfig {
                lambda1,
                lambda2,
                ..cfg.clone()
            };
            let outcome = pipeline::identify_assembled(rec, &prob, knots.clone(), &c, &mut |_| {});
            GridCell {
                lambda1,
                lambda2,
                outcome,
            }
        })
        .collect();

    let mut best: Option<usize> = None;
    for (k, cell) in cells.iter().enumerate() {
        let Some(r) = cell.rmse() else { continue };
        let better = match best {
            None => true,
            Some(b) => {
                let (rb, cb) = (cells[b].rmse().unwrap_or(f64::INFINITY), &cells[b]);
                r < rb || (r == rb && (cell.lambda1, cell.lambda2) > (cb.lambda1, cb.lambda2))
            }
        };
        if better {
            best = Some(k);
        }
    }
    match best {
        Some(best) => Ok(GridResult { cells, best }),
        None => {
            let first = cells
                .iter()
                .find_map(|c| c.outcome.as_ref().err().cloned())
                .unwrap_or(CoreError::InvalidParams("no grid cell produced a physical model"));
            Err(Error::AllSolvesFailed { first })
        }
    }
}

/// One noise realization.
#[derive(Debug, Clone)]
pub struct McRun {
    pub seed: u64,
    pub outcome: std::result::Result<Identification, CoreError>,
}

impl McRun {
    /// All values positive and the fast branch first.
    pub fn sign_order_ok(&self) -> bool {
        match &self.outcome {
            Ok(id) => {
                let r = &id.recovered;
                !r.flags.non_physical
                    && [r.r0, r.r1, r.r2, r.c1, r.c2].iter().all(|x| *x > 0.0)
                    && r.tau1 > 0.0
                    && r.tau1 < r.tau2
            }
            Err(_) => false,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Stat {
    pub mean: f64,
    /// Sample standard deviation; zero for a single value.
    pub std: f64,
    pub min: f64,
    pub max: f64,
}

impl Stat {
    pub fn of(xs: &[f64]) -> Option<Stat> {
        if xs.is_empty() {
            return None;
        }
        let n = xs.len() as f64;
        let mean = xs.iter().sum::<f64>() / n;
        let var = if xs.len() > 1 {
            xs.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (n - 1.0)
        } else {
            0.0
        };
        Some(Stat {
            mean,
            std: var.sqrt(),
            min: xs.iter().copied().fold(f64::INFINITY, f64::min),
            max: xs.iter().copied().fold(f64::NEG_INFINITY, f64::max),
        })
    }
}

/// Pointwise OCV statistics over runs on a common SOC grid.
#[derive(Debug, Clone, PartialEq)]
pub struct OcvBand {
    pub soc: Vec<f64>,
    pub truth: Vec<f64>,
    pub mean: Vec<f64>,
    pub std: Vec<f64>,
}

#[derive(Debug, Clone)]
pub struct MonteCarloResult {
    pub truth: EcmParams,
    pub runs: Vec<McRun>,
    /// Per entry of [`crate::report::PARAM_NAMES`], over scored runs.
    pub params: Vec<Option<Stat>>,
    pub rmse: Option<Stat>,
    pub vaf: Option<Stat>,
    pub band: Option<OcvBand>,
}

impl MonteCarloResult {
    pub fn scored(&self) -> impl Iterator<Item = &Identification> {
        self.runs
            .iter()
            .filter_map(|r| r.outcome.as_ref().ok())
            .filter(|id| id.score.is_some())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MonteCarloSpec {
    pub runs: usize,
    pub noise_std: f64,
    /// Run `k` uses noise seed `base_seed + k`.
    pub base_seed: u64,
    pub initial_soc: f64,
}

/// Points in the OCV band.
pub const BAND_POINTS: usize = 101;

/// Identifies `truth` from `spec.runs` noisy simulations of `profile`.
/// Failed runs are kept in the result rather than aborting the experiment.
pub fn monte_carlo(
    truth: &EcmParams,
    ocv: &(dyn OcvFunction + Sync),
    profile: &SampledRecord,
    spec: &MonteCarloSpec,
    cfg: &IdConfig,
) -> Result<MonteCarloResult> {
    if spec.runs == 0 {
        return Err(Error::Config("experiment.runs must be at least 1".into()));
    }
    cfg.validate()?;
    truth.validate()?;
    let runs: Vec<McRun> = (0..spec.runs as u64)
        .into_par_iter()
        .map(|k| {
            let seed = spec.base_seed.wrapping_add(k);
            let sim = SimConfig {
                noise_std: spec.noise_std,
                seed,
                initial_soc: spec.initial_soc,
                initial_rc: [0.0, 0.0],
            };
            let outcome = ecm::simulate(truth, ocv, profile, &sim).and_then(|rec| pipeline::identify(&rec, cfg));
            McRun { seed, outcome }
        })
        .collect();

    let scored: Vec<&Identification> = runs
        .iter()
        .filter_map(|r| r.outcome.as_ref().ok())
        .filter(|id| id.score.is_some())
        .collect();
    let values: Vec<[f64; 7]> = scored
        .iter()
        .map(|id| ParamsJson::from(&id.recovered).values())
        .collect();
    let params = (0..7)
        .map(|j| Stat::of(&values.iter().map(|v| v[j]).collect::<Vec<_>>()))
        .collect();
    let rmse = Stat::of(
        &scored
            .iter()
            .filter_map(|id| id.score.map(|s| s.rmse))
            .collect::<Vec<_>>(),
    );
    let vaf = Stat::of(
        &scored
            .iter()
            .filter_map(|id| id.score.map(|s| s.vaf))
            .collect::<Vec<_>>(),
    );
    Ok(MonteCarloResult {
        truth: *truth,
        band: ocv_band(&scored, ocv),
        runs,
        params,
        rmse,
        vaf,
    })
}

/// Band over the intersection of the runs' OCV supports.
fn ocv_band(runs: &[&Identification], truth: &dyn OcvFunction) -> Option<OcvBand> {
    let lo = runs
        .iter()
        .map(|id| id.ocv.basis().support().0)
        .fold(f64::NEG_INFINITY, f64::max);
    let hi = runs
        .iter()
        .map(|id| id.ocv.basis().support().1)
        .fold(f64::INFINITY, f64::min);
    if runs.is_empty() || !(lo < hi) {
        return None;
    }
    let soc = soc_grid((lo, hi), BAND_POINTS);
    let mut mean = Vec::with_capacity(soc.len());
    let mut std = Vec::with_capacity(soc.len());
    for &z in &soc {
        let vals: Vec<f64> = runs.iter().map(|id| id.ocv.value(z).unwrap_or(f64::NAN)).collect();
        let s = Stat::of(&vals)?;
        mean.push(s.mean);
        std.push(s.std);
    }
    Some(OcvBand {
        truth: soc.iter().map(|&z| truth.eval(z)).collect(),
        soc,
        mean,
        std,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn stats() {
        let s = Stat::of(&[1.0, 2.0, 3.0]).unwrap();
        assert_eq!((s.mean, s.std, s.min, s.max), (2.0, 1.0, 1.0, 3.0));
        assert_eq!(Stat::of(&[4.0]).unwrap().std, 0.0);
        assert!(Stat::of(&[]).is_none());
    }

    #[test]
    fn grid_spec() {
        let g = GridSpec {
            lambda1: vec![1.0, 2.0],
            lambda2: vec![3.0],
        };
        assert_eq!(g.cells(), vec![(1.0, 3.0), (2.0, 3.0)]);
        assert!(GridSpec {
            lambda1: vec![],
            lambda2: vec![1.0]
        }
        .validate()
        .is_err());
        assert!(GridSpec {
            lambda1: vec![-1.0],
            lambda2: vec![1.0]
        }
        .validate()
        .is_err());
        let l = GridSpec::log_spaced(1e-8, 1e-6, 3);
        assert!((l[1] - 1e-7).abs() < 1e-20);
    }
}
