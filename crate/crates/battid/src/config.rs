//! Run configuration, read from a sectioned TOML file.
//!
//! Every key is optional; omitted keys take the defaults below. Unknown keys
//! are rejected.

use std::path::{Path, PathBuf};

use battid_core::ecm::{self, EcmParams, SimConfig};
use battid_core::regression::{BurnIn, IdConfig, Refinement};
use battid_core::signals::SampledRecord;
use battid_core::solver::SolverSettings;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::csvio::{CsvSchema, Resample};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    pub battery: BatteryConfig,
    pub filter: FilterConfig,
    pub spline: SplineConfig,
    pub solver: SolverConfig,
    pub io: IoConfig,
    pub experiment: ExperimentConfig,
}

/// Battery description. The circuit values are the ground truth used by
/// `simulate` and `montecarlo`; identification ignores them.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct BatteryConfig {
    /// Ah.
    pub capacity_ah: f64,
    /// SOC at the first sample. Required to Coulomb-count a record without
    /// an SOC column; simulations start from 0.9 when unset.
    pub initial_soc: Option<f64>,
    pub r0_ohm: f64,
    pub r1_ohm: f64,
    pub r2_ohm: f64,
    pub c1_farad: f64,
    pub c2_farad: f64,
}

impl Default for BatteryConfig {
    fn default() -> Self {
        Self {
            capacity_ah: 2.0,
            initial_soc: None,
            r0_ohm: 0.06,
            r1_ohm: 0.03,
            r2_ohm: 0.02,
            c1_farad: 600.0,
            c2_farad: 5000.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct FilterConfig {
    /// Laguerre pole, rad/s.
    pub nu: f64,
}

impl Default for FilterConfig {
    fn default() -> Self {
        Self { nu: 0.1 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SplineConfig {
    pub knot_count: usize,
}

impl Default for SplineConfig {
    fn default() -> Self {
        Self { knot_count: 21 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RefinementName {
    Direct,
    RankOne,
    FixedDenominator,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SolverConfig {
    pub lambda1: f64,
    pub lambda2: f64,
    pub max_iters: usize,
    pub abs_tol: f64,
    pub rel_tol: f64,
    pub rho: f64,
    pub adapt_rho: bool,
    pub rho_mu: f64,
    pub relaxation: f64,
    pub refinement: RefinementName,
    pub hold_correction: bool,
    pub linear_passes: usize,
    /// Samples excluded at the start; automatic when unset.
    pub burn_in: Option<usize>,
}

impl Default for SolverConfig {
    fn default() -> Self {
        let id = IdConfig::default();
        let s = id.solver;
        Self {
            lambda1: id.lambda1,
            lambda2: id.lambda2,
            max_iters: s.max_iters,
            abs_tol: s.abs_tol,
            rel_tol: s.rel_tol,
            rho: s.rho,
            adapt_rho: s.adapt_rho,
            rho_mu: s.rho_mu,
            relaxation: s.relaxation,
            refinement: RefinementName::FixedDenominator,
            hold_correction: id.hold_correction,
            linear_passes: id.linear_passes,
            burn_in: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct IoConfig {
    pub data: Option<PathBuf>,
    pub out: Option<PathBuf>,
    /// Second record scored with the identified model.
    pub holdout: Option<PathBuf>,
    pub time_column: String,
    pub current_column: String,
    pub voltage_column: String,
    /// Used when present in the file.
    pub soc_column: String,
    /// Set for logs that record discharge as positive current.
    pub negate_current: bool,
    /// Resample non-uniform logs instead of rejecting them.
    pub resample: bool,
    /// Target interval for resampling, seconds; the median step when unset.
    pub resample_ts: Option<f64>,
}

impl Default for IoConfig {
    fn default() -> Self {
        Self {
            data: None,
            out: None,
            holdout: None,
            time_column: "time_s".into(),
            current_column: "current_a".into(),
            voltage_column: "voltage_v".into(),
            soc_column: "soc".into(),
            negate_current: false,
            resample: false,
            resample_ts: None,
        }
    }
}

/// Current profile for simulations.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ProfileName {
    /// Seeded synthetic drive cycle peaking at `amplitude_a`.
    DriveCycle,
    /// Rest, then a constant `-amplitude_a` discharge from 10% of the
    /// duration on.
    Step,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ExperimentConfig {
    /// Drive-cycle seed; Monte Carlo run `k` draws noise with `seed + k`.
    pub seed: u64,
    pub runs: usize,
    /// Volts.
    pub noise_std: f64,
    pub duration_s: f64,
    pub ts: f64,
    pub amplitude_a: f64,
    pub profile: ProfileName,
    pub lambda1_grid: Vec<f64>,
    pub lambda2_grid: Vec<f64>,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            seed: 1,
            runs: 20,
            noise_std: 1e-4,
            duration_s: 3600.0,
            ts: 1.0,
            amplitude_a: 2.0,
            profile: ProfileName::DriveCycle,
            lambda1_grid: vec![2e-7, 2e-6, 2e-5],
            lambda2_grid: vec![1e-9, 1e-8, 1e-7],
        }
    }
}

fn finite_positive(name: &str, v: f64) -> Result<()> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(Error::Config(format!("{name} must be positive and finite, got {v}")))
    }
}

impl RunConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: RunConfig = toml::from_str(text).map_err(|e| Error::Config(e.message().to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        Self::from_toml(&text).map_err(|e| match e {
            Error::Config(m) => Error::Config(format!("{}: {m}", path.display())),
            other => other,
        })
    }

    pub fn validate(&self) -> Result<()> {
        let b = &self.battery;
        finite_positive("battery.capacity_ah", b.capacity_ah)?;
        if let Some(z) = b.initial_soc {
            if !(0.0..=1.0).contains(&z) {
                return Err(Error::Config(format!("battery.initial_soc must be in [0, 1], got {z}")));
            }
        }
        for (name, v) in [
            ("battery.r0_ohm", b.r0_ohm),
            ("battery.r1_ohm", b.r1_ohm),
            ("battery.r2_ohm", b.r2_ohm),
            ("battery.c1_farad", b.c1_farad),
            ("battery.c2_farad", b.c2_farad),
            ("experiment.duration_s", self.experiment.duration_s),
            ("experiment.ts", self.experiment.ts),
        ] {
            finite_positive(name, v)?;
        }
        let e = &self.experiment;
        if !(e.noise_std >= 0.0 && e.noise_std.is_finite()) {
            return Err(Error::Config("experiment.noise_std must be non-negative".into()));
        }
        if !(e.amplitude_a >= 0.0 && e.amplitude_a.is_finite()) {
            return Err(Error::Config("experiment.amplitude_a must be non-negative".into()));
        }
        if let Some(ts) = self.io.resample_ts {
            finite_positive("io.resample_ts", ts)?;
        }
        self.id_config().validate().map_err(|e| Error::Config(e.to_string()))
    }

    pub fn id_config(&self) -> IdConfig {
        let s = &self.solver;
        IdConfig {
            nu: self.filter.nu,
            knot_count: self.spline.knot_count,
            lambda1: s.lambda1,
            lambda2: s.lambda2,
            burn_in: s.burn_in.map_or(BurnIn::Auto, BurnIn::Samples),
            refinement: match s.refinement {
                RefinementName::Direct => Refinement::Direct,
                RefinementName::RankOne => Refinement::RankOne,
                RefinementName::FixedDenominator => Refinement::FixedDenominator,
            },
            hold_correction: s.hold_correction,
            linear_passes: s.linear_passes,
            solver: SolverSettings {
                max_iters: s.max_iters,
                abs_tol: s.abs_tol,
                rel_tol: s.rel_tol,
                rho: s.rho,
                adapt_rho: s.adapt_rho,
                rho_mu: s.rho_mu,
                relaxation: s.relaxation,
            },
        }
    }

    pub fn truth(&self) -> Result<EcmParams> {
        let b = &self.battery;
        Ok(EcmParams::new(
            b.r0_ohm,
            b.r1_ohm,
            b.r2_ohm,
            b.c1_farad,
            b.c2_farad,
            b.capacity_ah,
        )?)
    }

    /// The simulation input; its voltage column is zero.
    pub fn profile(&self) -> Result<SampledRecord> {
        let e = &self.experiment;
        let rec = match e.profile {
            ProfileName::DriveCycle => ecm::gen_drive_cycle(e.duration_s, e.ts, e.seed, e.amplitude_a),
            ProfileName::Step => ecm::step_profile(e.duration_s, e.ts, 0.1 * e.duration_s, -e.amplitude_a),
        };
        rec.map_err(|err| Error::Config(err.to_string()))
    }

    pub fn sim_config(&self, noise_seed: u64) -> SimConfig {
        SimConfig {
            noise_std: self.experiment.noise_std,
            seed: noise_seed,
            ..SimConfig::noiseless(self.battery.initial_soc.unwrap_or(0.9))
        }
    }

    pub fn schema(&self) -> CsvSchema {
        CsvSchema {
            time: self.io.time_column.clone(),
            current: self.io.current_column.clone(),
            voltage: self.io.voltage_column.clone(),
            soc: Some(self.io.soc_column.clone()),
            negate_current: self.io.negate_current,
            resample: if self.io.resample {
                Resample::To(self.io.resample_ts)
            } else {
                Resample::Reject
            },
        }
    }

    /// SHA-256 of the canonical serialization, hex. The output directory is
    /// left out so identical runs into different places stamp the same.
    pub fn hash(&self) -> String {
        let mut c = self.clone();
        c.io.out = None;
        let text = serde_json::to_string(&c).expect("config serializes");
        format!("{:x}", Sha256::digest(text.as_bytes()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_file_is_all_defaults() {
        let cfg = RunConfig::from_toml("").unwrap();
        assert_eq!(cfg, RunConfig::default());
        assert_eq!(cfg.id_config(), IdConfig::default());
    }

    #[test]
    fn sections_parse() {
        let cfg = RunConfig::from_toml(
            r#"
            [battery]
            capacity_ah = 1.1
            initial_soc = 0.8
            [filter]
            nu = 0.5
            [solver]
            lambda1 = 1e-8
            lambda2 = 0.0
            refinement = "rank-one"
            burn_in = 10
            [io]
            current_column = "Current(A)"
            negate_current = true
            [experiment]
            lambda1_grid = [1e-8]
            "#,
        )
        .unwrap();
        assert_eq!(cfg.battery.initial_soc, Some(0.8));
        let id = cfg.id_config();
        assert_eq!((id.nu, id.lambda1, id.lambda2), (0.5, 1e-8, 0.0));
        assert_eq!(id.refinement, Refinement::RankOne);
        assert_eq!(id.burn_in, BurnIn::Samples(10));
        assert!(cfg.schema().negate_current);
    }

    #[test]
    fn unknown_keys_rejected() {
        for text in ["[solver]\nlambda3 = 1.0", "[nonsense]\n", "top = 1"] {
            assert!(matches!(RunConfig::from_toml(text), Err(Error::Config(_))), "{text}");
        }
    }

    #[test]
    fn bad_values_rejected() {
        for text in [
            "[battery]\ncapacity_ah = -1.0",
            "[battery]\ninitial_soc = 1.5",
            "[filter]\nnu = 0.0",
            "[solver]\nlambda1 = -1e-3",
            "[solver]\nrelaxation = 2.5",
            "[experiment]\nnoise_std = -1.0",
        ] {
            assert!(matches!(RunConfig::from_toml(text), Err(Error::Config(_))), "{text}");
        }
    }

    #[test]
    fn hash_tracks_content() {
        let a = RunConfig::default();
        let mut b = a.clone();
        assert_eq!(a.hash(), b.hash());
        b.solver.lambda1 = 3e-6;
        assert_ne!(a.hash(), b.hash());
        assert_eq!(a.hash().len(), 64);
    }
}
