//! Fit scores and forward simulation of identified models.

use alloc::vec::Vec;

use crate::bspline::SplineCurve;
use crate::ecm::{self, EcmParams, OcvFunction, SimConfig};
use crate::error::{Error, Result};
use crate::math;
use crate::recovery::Recovered;
use crate::signals::SampledRecord;

fn check_lengths(v: &[f64], v_hat: &[f64]) -> Result<()> {
    if v.len() != v_hat.len() {
        return Err(Error::LengthMismatch {
            left: v.len(),
            right: v_hat.len(),
        });
    }
    if v.is_empty() {
        return Err(Error::EmptyInput);
    }
    Ok(())
}

/// Root mean squared difference.
pub fn rmse(v: &[f64], v_hat: &[f64]) -> Result<f64> {
    check_lengths(v, v_hat)?;
    let ss: f64 = v.iter().zip(v_hat).map(|(a, b)| (a - b) * (a - b)).sum();
    Ok(math::sqrt(ss / v.len() as f64))
}

fn variance(x: impl Iterator<Item = f64> + Clone) -> f64 {
    let n = x.clone().count() as f64;
    let mean = x.clone().sum::<f64>() / n;
    x.map(|v| (v - mean) * (v - mean)).sum::<f64>() / n
}

/// Variance accounted for, percent: `100 (1 - var(v - v_hat) / var(v))`.
pub fn vaf(v: &[f64], v_hat: &[f64]) -> Result<f64> {
    check_lengths(v, v_hat)?;
    let var_v = variance(v.iter().copied());
    if var_v == 0.0 {
        return Err(Error::ZeroVariance);
    }
    let var_e = variance(v.iter().zip(v_hat).map(|(a, b)| a - b));
    Ok(100.0 * (1.0 - var_e / var_v))
}

/// Noise-free simulation with identified parameters and OCV, SOC from
/// Coulomb counting at `z0`.
pub fn simulate_identified(
    params: &EcmParams,
    ocv: &dyn OcvFunction,
    current: &SampledRecord,
    z0: f64,
) -> Result<Vec<f64>> {
    let out = ecm::simulate(params, ocv, current, &SimConfig::noiseless(z0))?;
    Ok(out.voltage().to_vec())
}

/// Noise-free prediction along the SOC trajectory stored in `rec`.
pub fn predict(rec: &Recovered, ocv: &SplineCurve, data: &SampledRecord) -> Result<Vec<f64>> {
    let soc = data.soc().ok_or(Error::MissingSoc)?;
    // Capacity is unused here: SOC is taken from the record.
    let params = rec.to_params(1.0)?;
    ecm::simulate_voltage(&params, ocv, data.current(), soc, data.ts(), [0.0, 0.0])
}

/// What one identification run reports.
#[derive(Debug, Clone, PartialEq)]
pub struct FitReport {
    /// Absent when the recovered parameters cannot be simulated.
    pub score: Option<FitScore>,
    pub converged: bool,
    pub params: Recovered,
    pub ocv: SplineCurve,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FitScore {
    /// Volts.
    pub rmse: f64,
    /// Percent.
    pub vaf: f64,
    pub n_samples: usize,
}

/// Scores `prediction` against the measured voltage from sample `skip` on.
pub fn score(measured: &[f64], prediction: &[f64], skip: usize) -> Result<FitScore> {
    check_lengths(measured, prediction)?;
    let skip = skip.min(measured.len().saturating_sub(1));
    let (v, p) = (&measured[skip..], &prediction[skip..]);
    Ok(FitScore {
        rmse: rmse(v, p)?,
        vaf: vaf(v, p)?,
        n_samples: v.len(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ecm::SimulatedOcv;

    #[test]
    fn rmse_examples() {
        assert_eq!(rmse(&[1.0, 2.0], &[1.0, 2.0]).unwrap(), 0.0);
        assert_eq!(rmse(&[0.0, 0.0], &[1.0, 1.0]).unwrap(), 1.0);
        assert_eq!(rmse(&[0.0; 4], &[2.0, 0.0, 0.0, 0.0]).unwrap(), 1.0);
        assert_eq!(
            rmse(&[0.0; 3], &[0.0; 2]),
            Err(Error::LengthMismatch { left: 3, right: 2 })
        );
    }

    #[test]
    fn vaf_examples() {
        let v = [1.0, 3.0, 2.0, 5.0];
        assert!((vaf(&v, &v).unwrap() - 100.0).abs() < 1e-12);
        let shifted: Vec<f64> = v.iter().map(|x| x + 0.7).collect();
        assert!((vaf(&v, &shifted).unwrap() - 100.0).abs() < 1e-12);
        assert!(vaf(&v, &[2.75; 4]).unwrap().abs() < 1e-12);
        assert_eq!(vaf(&[1.0; 3], &[1.0; 3]), Err(Error::ZeroVariance));
    }

    fn reference_circuit() -> EcmParams {
        EcmParams::new(0.06, 0.03, 0.02, 600.0, 5000.0, 2.0).unwrap()
    }

    #[test]
    fn true_model_reproduces_simulation() {
        let cyc = ecm::gen_drive_cycle(900.0, 1.0, 2, 2.0).unwrap();
        let sim = ecm::simulate(&reference_circuit(), &SimulatedOcv, &cyc, &SimConfig::noiseless(0.8)).unwrap();
        let pred = simulate_identified(&reference_circuit(), &SimulatedOcv, &cyc, 0.8).unwrap();
        assert_eq!(pred.as_slice(), sim.voltage());
    }

    #[test]
    fn zero_current_gives_flat_ocv() {
        let rec = SampledRecord::new(1.0, 0.0, alloc::vec![0.0; 50], alloc::vec![0.0; 50]).unwrap();
        let pred = simulate_identified(&reference_circuit(), &SimulatedOcv, &rec, 0.6).unwrap();
        let v = ecm::ocv_sim_curve(0.6).unwrap();
        assert!(pred.iter().all(|&p| p == v));
    }

    #[test]
    fn r0_shift_is_additive() {
        let cyc = ecm::gen_drive_cycle(300.0, 1.0, 5, 2.0).unwrap();
        let base = simulate_identified(&reference_circuit(), &SimulatedOcv, &cyc, 0.8).unwrap();
        let mut p = reference_circuit();
        p.r0 += 0.004;
        let bumped = simulate_identified(&p, &SimulatedOcv, &cyc, 0.8).unwrap();
        for ((a, b), i) in base.iter().zip(&bumped).zip(cyc.current()) {
            assert!((b - a - 0.004 * i).abs() < 1e-14);
        }
    }

    #[test]
    fn score_skips_leading_samples() {
        let s = score(&[9.0, 1.0, 2.0, 3.0], &[0.0, 1.0, 2.0, 4.0], 1).unwrap();
        assert_eq!(s.n_samples, 3);
        assert!((s.rmse - libm::sqrt(1.0 / 3.0)).abs() < 1e-15);
        assert!(s.vaf <= 100.0);
    }

    proptest::proptest! {
        #[test]
        fn rmse_scales(v in proptest::collection::vec(-5.0f64..5.0, 1..50), alpha in -4.0f64..4.0) {
            let w: Vec<f64> = v.iter().rev().copied().collect();
            let sv: Vec<f64> = v.iter().map(|x| alpha * x).collect();
            let sw: Vec<f64> = w.iter().map(|x| alpha * x).collect();
            let (a, b) = (rmse(&sv, &sw).unwrap(), alpha.abs() * rmse(&v, &w).unwrap());
            proptest::prop_assert!((a - b).abs() <= 1e-12 * (1.0 + b));
        }

        #[test]
        fn vaf_ignores_common_shift(
            v in proptest::collection::vec(-5.0f64..5.0, 3..50), c in -10.0f64..10.0,
        ) {
            let w: Vec<f64> = v.iter().enumerate().map(|(k, x)| x + 0.1 * (k as f64).sin()).collect();
            proptest::prop_assume!(variance(v.iter().copied()) > 1e-6);
            let sv: Vec<f64> = v.iter().map(|x| x + c).collect();
            let sw: Vec<f64> = w.iter().map(|x| x + c).collect();
            let (a, b) = (vaf(&sv, &sw).unwrap(), vaf(&v, &w).unwrap());
            proptest::prop_assert!((a - b).abs() <= 1e-8 * (1.0 + b.abs()));
        }
    }
}
