//! Second-order equivalent circuit model: exact zero-order-hold simulation,
//! a reference OCV curve and a synthetic urban drive-cycle generator.

use alloc::vec;
use alloc::vec::Vec;

use rand_chacha::ChaCha8Rng;
use rand_core::{RngCore, SeedableRng};

use crate::error::{Error, Result};
use crate::math;
use crate::signals::{integrate_soc, BatteryMeta, SampledRecord};

/// Ohmic resistance, two RC branches and capacity of the battery.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EcmParams {
    pub r0: f64,
    pub r1: f64,
    pub r2: f64,
    pub c1: f64,
    pub c2: f64,
    pub capacity_ah: f64,
}

impl EcmParams {
    pub fn new(r0: f64, r1: f64, r2: f64, c1: f64, c2: f64, capacity_ah: f64) -> Result<Self> {
        let p = Self {
            r0,
            r1,
            r2,
            c1,
            c2,
            capacity_ah,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        let circuit = [self.r0, self.r1, self.r2, self.c1, self.c2];
        if circuit.iter().any(|&x| !(x > 0.0 && x.is_finite())) {
            return Err(Error::InvalidParams("resistances and capacitances must be positive"));
        }
        if !(self.capacity_ah > 0.0 && self.capacity_ah.is_finite()) {
            return Err(Error::InvalidParams("capacity must be positive"));
        }
        if !(self.tau1().is_finite() && self.tau2().is_finite()) {
            return Err(Error::InvalidParams("time constants must be finite"));
        }
        Ok(())
    }

    pub fn tau1(&self) -> f64 {
        self.r1 * self.c1
    }

    pub fn tau2(&self) -> f64 {
        self.r2 * self.c2
    }
}

/// A map from SOC to open-circuit voltage with a declared valid range.
pub trait OcvFunction {
    fn eval(&self, soc: f64) -> f64;

    /// Inclusive SOC range on which `eval` is valid.
    fn range(&self) -> (f64, f64);
}

/// `3 + 0.03 (1.5 - z)^-4 + 0.1 ln(z + 0.01)`.
///
/// The logarithm is natural. Finite on `(-0.01, 1.5)`.
pub fn ocv_sim_curve(z: f64) -> Result<f64> {
    if !(z > -0.01 && z < 1.5) {
        return Err(Error::DomainError { value: z });
    }
    Ok(3.0 + 0.03 * math::powi(1.5 - z, -4) + 0.1 * math::ln(z + 0.01))
}

/// [`ocv_sim_curve`] as an [`OcvFunction`] over `[0, 1]`.
#[derive(Debug, Clone, Copy, Default)]
pub struct SimulatedOcv;

impl OcvFunction for SimulatedOcv {
    fn eval(&self, soc: f64) -> f64 {
        ocv_sim_curve(soc).unwrap_or(f64::NAN)
    }

    fn range(&self) -> (f64, f64) {
        (0.0, 1.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SimConfig {
    /// Standard deviation of the additive voltage noise, volts.
    pub noise_std: f64,
    pub seed: u64,
    pub initial_soc: f64,
    /// RC branch voltages at the first sample, volts.
    pub initial_rc: [f64; 2],
}

impl SimConfig {
    pub fn noiseless(initial_soc: f64) -> Self {
        Self {
            noise_std: 0.0,
            seed: 0,
            initial_soc,
            initial_rc: [0.0, 0.0],
        }
    }
}

/// Simulates the terminal voltage for a zero-order-hold current.
///
/// Each RC branch advances by its exact discretization
/// `v[j+1] = e^{-ts/tau} v[j] + R (1 - e^{-ts/tau}) i[j]`, and the sampled
/// output is `v1 + v2 + R0 i + ocv(z) + noise`. SOC comes from Coulomb
/// counting starting at `cfg.initial_soc`.
pub fn simulate(
    params: &EcmParams,
    ocv: &dyn OcvFunction,
    current: &SampledRecord,
    cfg: &SimConfig,
) -> Result<SampledRecord> {
    params.validate()?;
    if !(cfg.noise_std >= 0.0 && cfg.noise_std.is_finite()) {
        return Err(Error::InvalidConfig("noise_std must be non-negative"));
    }
    let meta = BatteryMeta::new(params.capacity_ah, cfg.initial_soc)?;
    let soc = integrate_soc(current.current(), current.ts(), &meta)?;
    let mut voltage = simulate_voltage(params, ocv, current.current(), &soc, current.ts(), cfg.initial_rc)?;
    if cfg.noise_std > 0.0 {
        let mut noise = GaussianNoise::new(cfg.seed);
        for v in &mut voltage {
            *v += cfg.noise_std * noise.sample();
        }
    }
    current.clone().with_voltage(voltage)?.with_soc(soc)
}

/// Noise-free terminal voltage for a given SOC trajectory.
pub(crate) fn simulate_voltage(
    params: &EcmParams,
    ocv: &dyn OcvFunction,
    current: &[f64],
    soc: &[f64],
    ts: f64,
    initial_rc: [f64; 2],
) -> Result<Vec<f64>> {
    let (lo, hi) = ocv.range();
    let e1 = math::exp(-ts / params.tau1());
    let e2 = math::exp(-ts / params.tau2());
    // 1 - e^{-x} through expm1 keeps the gain exact when ts << tau.
    let g1 = -params.r1 * math::expm1(-ts / params.tau1());
    let g2 = -params.r2 * math::expm1(-ts / params.tau2());
    let [mut v1, mut v2] = initial_rc;
    let mut out = Vec::with_capacity(current.len());
    for (index, (&i, &z)) in current.iter().zip(soc).enumerate() {
        if !(z >= lo && z <= hi) {
            return Err(Error::SocRangeExceeded {
                index,
                value: z,
                lo,
                hi,
            });
        }
        let voc = ocv.eval(z);
        if !voc.is_finite() {
            return Err(Error::NonFiniteOcv { index });
        }
        out.push(v1 + v2 + params.r0 * i + voc);
        v1 = e1 * v1 + g1 * i;
        v2 = e2 * v2 + g2 * i;
    }
    Ok(out)
}

/// Standard normal draws from a seeded ChaCha8 stream.
///
/// Transform: each pair of 64-bit words `(a, b)` gives
/// `u1 = ((a >> 11) + 1) / 2^53` in `(0, 1]` and `u2 = (b >> 11) / 2^53` in
/// `[0, 1)`, then Box-Muller yields `r cos(2 pi u2)` followed by
/// `r sin(2 pi u2)` with `r = sqrt(-2 ln u1)`. All transcendental functions
/// come from `libm`, so a seed produces the same sequence on every platform.
#[derive(Debug, Clone)]
pub struct GaussianNoise {
    rng: ChaCha8Rng,
    spare: Option<f64>,
}

impl GaussianNoise {
    pub fn new(seed: u64) -> Self {
        Self {
            rng: ChaCha8Rng::seed_from_u64(seed),
            spare: None,
        }
    }

    pub fn sample(&mut self) -> f64 {
        if let Some(z) = self.spare.take() {
            return z;
        }
        let u1 = ((self.rng.next_u64() >> 11) + 1) as f64 * UNIT;
        let u2 = (self.rng.next_u64() >> 11) as f64 * UNIT;
        let r = math::sqrt(-2.0 * math::ln(u1));
        let theta = 2.0 * core::f64::consts::PI * u2;
        self.spare = Some(r * math::sin(theta));
        r * math::cos(theta)
    }
}

const UNIT: f64 = 1.0 / (1u64 << 53) as f64;

fn uniform(rng: &mut ChaCha8Rng) -> f64 {
    (rng.next_u64() >> 11) as f64 * UNIT
}

/// Share of segments that are rests.
const REST_PROBABILITY: f64 = 0.15;
/// Mean segment level as a fraction of the amplitude (negative: discharge).
const DISCHARGE_BIAS: f64 = -0.35;

/// Synthetic urban drive-cycle current.
///
/// Piecewise-constant segments lasting a uniformly random 1..=60 s. A segment
/// is a rest with probability 0.15; otherwise its level is
/// `amplitude * (-0.35 + 0.65 u)` with `u` uniform on `[-1, 1]`, i.e. a
/// discharging bias plus a zero-mean burst, always within `[-amplitude,
/// 0.3 amplitude]`. The voltage column of the returned record is zero.
pub fn gen_drive_cycle(duration_s: f64, ts: f64, seed: u64, amplitude_a: f64) -> Result<SampledRecord> {
    if !(ts > 0.0) || !(duration_s >= 10.0 * ts) {
        return Err(Error::InvalidConfig("drive cycle needs duration >= 10 ts"));
    }
    if !(amplitude_a >= 0.0 && amplitude_a.is_finite()) {
        return Err(Error::InvalidConfig("amplitude must be non-negative"));
    }
    let n = math::round(duration_s / ts) as usize;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut current = Vec::with_capacity(n);
    while current.len() < n {
        let seconds = 1 + (uniform(&mut rng) * 60.0) as usize;
        let samples = (math::ceil(seconds as f64 / ts) as usize).max(1);
        let level = if uniform(&mut rng) < REST_PROBABILITY {
            0.0
        } else {
            let u = 2.0 * uniform(&mut rng) - 1.0;
            amplitude_a * (DISCHARGE_BIAS + (1.0 + DISCHARGE_BIAS) * u)
        };
        let take = samples.min(n - current.len());
        current.extend(core::iter::repeat_n(level, take));
    }
    SampledRecord::new(ts, 0.0, current, vec![0.0; n])
}

/// Constant current `level` switched on at `start_s` and held to the end.
pub fn step_profile(duration_s: f64, ts: f64, start_s: f64, level: f64) -> Result<SampledRecord> {
    if !(ts > 0.0) || !(duration_s >= 2.0 * ts) {
        return Err(Error::InvalidConfig("step profile needs at least two samples"));
    }
    let n = math::round(duration_s / ts) as usize;
    let current = (0..n)
        .map(|j| if j as f64 * ts >= start_s { level } else { 0.0 })
        .collect();
    SampledRecord::new(ts, 0.0, current, vec![0.0; n])
}
