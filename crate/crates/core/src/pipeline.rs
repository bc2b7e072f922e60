//! Record in, circuit parameters and OCV curve out.

use alloc::vec::Vec;

use crate::bspline::{KnotVector, SplineCurve};
use crate::error::{Error, Result};
use crate::metrics::{self, FitReport, FitScore};
use crate::recovery::{self, Recovered, TfCoeffs};
use crate::regression::{self, IdConfig, IdProblem, Refinement};
use crate::signals::SampledRecord;
use crate::solver::{self, IterRecord, Solution};

#[derive(Debug, Clone, PartialEq)]
pub struct Identification {
    pub knots: KnotVector,
    pub burn_in: usize,
    /// Output of the convex relaxation.
    pub relaxed: Solution,
    /// After the configured refinement.
    pub solution: Solution,
    pub tf: TfCoeffs,
    /// Straight from the transfer function.
    pub raw: Recovered,
    /// After the optional sample-hold correction.
    pub recovered: Recovered,
    pub ocv: SplineCurve,
    /// Forward simulation with the recovered model; absent when the
    /// recovered values are not physical.
    pub prediction: Option<Vec<f64>>,
    pub score: Option<FitScore>,
}

impl Identification {
    pub fn report(&self) -> FitReport {
        FitReport {
            score: self.score,
            converged: self.relaxed.diagnostics.converged && self.solution.diagnostics.converged,
            params: self.recovered,
            ocv: self.ocv.clone(),
        }
    }

    /// Scores the identified model on another record, e.g. a held-out drive
    /// cycle. The record's SOC must stay inside the identified OCV support.
    pub fn score_on(&self, rec: &SampledRecord) -> Result<FitScore> {
        let pred = metrics::predict(&self.recovered, &self.ocv, rec)?;
        metrics::score(rec.voltage(), &pred, 0)
    }
}

pub fn identify(rec: &SampledRecord, cfg: &IdConfig) -> Result<Identification> {
    identify_observed(rec, cfg, &mut |_| {})
}

pub fn identify_observed(
    rec: &SampledRecord,
    cfg: &IdConfig,
    observer: &mut dyn FnMut(&IterRecord),
) -> Result<Identification> {
    let knots = regression::knots_for(rec, cfg)?;
    let prob = regression::assemble(rec, &knots, cfg)?;
    identify_assembled(rec, &prob, knots, cfg, observer)
}

/// [`identify_observed`] from the first-pass problem `prob`, which must come
/// from [`regression::assemble`] with these knots. Any linear passes
/// re-assemble, since they depend on the previous `r0`.
pub fn identify_assembled(
    rec: &SampledRecord,
    prob: &IdProblem,
    knots: KnotVector,
    cfg: &IdConfig,
    observer: &mut dyn FnMut(&IterRecord),
) -> Result<Identification> {
    let mut id = identify_problem(rec, prob, knots.clone(), cfg, observer)?;
    let linear = IdConfig {
        hold_correction: false,
        ..cfg.clone()
    };
    for _ in 0..cfg.linear_passes {
        let prob = regression::assemble_linear(rec, &knots, &linear, id.recovered.r0)?;
        id = identify_problem(rec, &prob, knots.clone(), &linear, observer)?;
    }
    Ok(id)
}

/// Runs the solve and recovery on an already assembled problem.
pub fn identify_problem(
    rec: &SampledRecord,
    prob: &IdProblem,
    knots: KnotVector,
    cfg: &IdConfig,
    observer: &mut dyn FnMut(&IterRecord),
) -> Result<Identification> {
    let relaxed = solver::solve_observed(prob, cfg, observer)?;
    let solution = match cfg.refinement {
        Refinement::Direct => relaxed.clone(),
        Refinement::RankOne => {
            let (a, g) = solver::extract_rank_one(&relaxed, true)?;
            let mut s = relaxed.clone();
            s.a_tilde = a;
            s.gamma = g;
            s
        }
        Refinement::FixedDenominator => {
            solver::refit_fixed_denominator(prob, relaxed.a_tilde, cfg.lambda2, &cfg.solver, observer)?
        }
    };
    let tf = recovery::tilde_to_tf(solution.a_tilde, solution.b_tilde, cfg.nu)?;
    let raw = recovery::tf_to_physical(&tf)?;
    let recovered = if cfg.hold_correction {
        recovery::sample_hold_correction(&raw, rec.ts())
    } else {
        raw
    };
    let ocv = SplineCurve::new(knots.clone(), solution.gamma.clone())?;
    let burn_in = prob.mask().iter().filter(|&&m| m).count();

    let prediction = match metrics::predict(&recovered, &ocv, rec) {
        Ok(p) => Some(p),
        Err(Error::InvalidParams(_)) => None,
        Err(e) => return Err(e),
    };
    let score = match &prediction {
        Some(p) => Some(metrics::score(rec.voltage(), p, burn_in)?),
        None => None,
    };
    Ok(Identification {
        knots,
        burn_in,
        relaxed,
        solution,
        tf,
        raw,
        recovered,
        ocv,
        prediction,
        score,
    })
}
