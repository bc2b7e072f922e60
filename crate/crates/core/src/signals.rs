//! Uniformly sampled current/voltage records and SOC by Coulomb counting.
//!
//! Current is positive when charging. All signals share one sampling
//! interval and are interpreted as zero-order-hold sequences: the value at
//! index `j` holds on `[t0 + j*ts, t0 + (j+1)*ts)`.

use alloc::vec::Vec;

use crate::error::{Error, Result};

/// Tolerance applied when validating SOC values against `[0, 1]`.
pub const SOC_TOLERANCE: f64 = 1e-9;

/// Coulomb counting may wander this far outside `[0, 1]` before it is
/// treated as an error; values inside the margin are clipped.
pub const SOC_MARGIN: f64 = 0.01;

#[derive(Debug, Clone, PartialEq)]
pub struct SampledRecord {
    ts: f64,
    t0: f64,
    current: Vec<f64>,
    voltage: Vec<f64>,
    soc: Option<Vec<f64>>,
}

impl SampledRecord {
    pub fn new(ts: f64, t0: f64, current: Vec<f64>, voltage: Vec<f64>) -> Result<Self> {
        if !(ts > 0.0 && ts.is_finite()) {
            return Err(Error::InvalidRecord("sampling interval must be positive"));
        }
        if !t0.is_finite() {
            return Err(Error::InvalidRecord("start time must be finite"));
        }
        if current.len() != voltage.len() {
            return Err(Error::InvalidRecord("current and voltage lengths differ"));
        }
        if current.len() < 2 {
            return Err(Error::InvalidRecord("record needs at least two samples"));
        }
        if current.iter().chain(voltage.iter()).any(|x| !x.is_finite()) {
            return Err(Error::InvalidRecord("non-finite sample"));
        }
        Ok(Self {
            ts,
            t0,
            current,
            voltage,
            soc: None,
        })
    }

    /// Attaches an SOC trajectory; every value must lie in `[0, 1]`.
    pub fn with_soc(mut self, soc: Vec<f64>) -> Result<Self> {
        if soc.len() != self.current.len() {
            return Err(Error::InvalidRecord("soc length differs from current"));
        }
        for (index, &value) in soc.iter().enumerate() {
            if !(-SOC_TOLERANCE..=1.0 + SOC_TOLERANCE).contains(&value) {
                return Err(Error::SocOutOfRange { index, value });
            }
        }
        self.soc = Some(soc);
        Ok(self)
    }

    pub fn with_voltage(mut self, voltage: Vec<f64>) -> Result<Self> {
        if voltage.len() != self.current.len() {
            return Err(Error::InvalidRecord("voltage length differs from current"));
        }
        if voltage.iter().any(|x| !x.is_finite()) {
            return Err(Error::InvalidRecord("non-finite sample"));
        }
        self.voltage = voltage;
        Ok(self)
    }

    pub fn ts(&self) -> f64 {
        self.ts
    }

    pub fn t0(&self) -> f64 {
        self.t0
    }

    pub fn len(&self) -> usize {
        self.current.len()
    }

    pub fn is_empty(&self) -> bool {
        self.current.is_empty()
    }

    pub fn current(&self) -> &[f64] {
        &self.current
    }

    pub fn voltage(&self) -> &[f64] {
        &self.voltage
    }

    pub fn soc(&self) -> Option<&[f64]> {
        self.soc.as_deref()
    }

    pub fn time(&self, j: usize) -> f64 {
        self.t0 + j as f64 * self.ts
    }

    /// Range `(min, max)` of the attached SOC.
    pub fn soc_range(&self) -> Result<(f64, f64)> {
        let soc = self.soc().ok_or(Error::MissingSoc)?;
        let lo = soc.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = soc.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        Ok((lo, hi))
    }

    /// Flips the current sign, for logs that record discharge as positive.
    pub fn negate_current(mut self) -> Self {
        for x in &mut self.current {
            *x = -*x;
        }
        self
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BatteryMeta {
    pub capacity_ah: f64,
    pub initial_soc: f64,
}

impl BatteryMeta {
    pub fn new(capacity_ah: f64, initial_soc: f64) -> Result<Self> {
        let meta = Self {
            capacity_ah,
            initial_soc,
        };
        meta.validate()?;
        Ok(meta)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.capacity_ah > 0.0 && self.capacity_ah.is_finite()) {
            return Err(Error::InvalidMeta("capacity must be positive"));
        }
        if !(0.0..=1.0).contains(&self.initial_soc) {
            return Err(Error::InvalidMeta("initial soc must lie in [0, 1]"));
        }
        Ok(())
    }
}

/// Integrates current into SOC with the left-rectangle rule, which is exact
/// for a zero-order-hold current: `soc[j] = z0 + ts/(3600 C) * sum_{k<j} i[k]`.
///
/// Values within [`SOC_MARGIN`] of `[0, 1]` are clipped; anything further out
/// is an error.
pub fn coulomb_count(rec: &SampledRecord, meta: &BatteryMeta) -> Result<SampledRecord> {
    let soc = integrate_soc(rec.current(), rec.ts(), meta)?;
    rec.clone().with_soc(soc)
}

pub(crate) fn integrate_soc(current: &[f64], ts: f64, meta: &BatteryMeta) -> Result<Vec<f64>> {
    meta.validate()?;
    let gain = ts / (3600.0 * meta.capacity_ah);
    let mut soc = Vec::with_capacity(current.len());
    // Kahan summation; drift otherwise shows up on day-long records.
    let mut charge = 0.0_f64;
    let mut carry = 0.0_f64;
    for (index, &i) in current.iter().enumerate() {
        let z = meta.initial_soc + gain * charge;
        if !(-SOC_MARGIN..=1.0 + SOC_MARGIN).contains(&z) {
            return Err(Error::SocOutOfRange { index, value: z });
        }
        soc.push(z.clamp(0.0, 1.0));
        let y = i - carry;
        let t = charge + y;
        carry = (t - charge) - y;
        charge = t;
    }
    Ok(soc)
}

/// Index permutation that sorts the record by SOC (stable for ties).
pub fn sort_by_soc(rec: &SampledRecord) -> Result<Vec<usize>> {
    let soc = rec.soc().ok_or(Error::MissingSoc)?;
    Ok(sort_permutation(soc))
}

pub(crate) fn sort_permutation(values: &[f64]) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..values.len()).collect();
    idx.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
    idx
}

/// Resamples an irregular log onto a uniform grid of spacing `ts` starting at
/// the first timestamp: zero-order hold for current, linear interpolation for
/// voltage.
pub fn resample_uniform(time: &[f64], current: &[f64], voltage: &[f64], ts: f64) -> Result<SampledRecord> {
    if time.len() != current.len() || time.len() != voltage.len() {
        return Err(Error::InvalidRecord("column lengths differ"));
    }
    if time.len() < 2 {
        return Err(Error::InvalidRecord("record needs at least two samples"));
    }
    if !(ts > 0.0) {
        return Err(Error::InvalidRecord("sampling interval must be positive"));
    }
    check_increasing(time)?;
    let t0 = time[0];
    let span = time[time.len() - 1] - t0;
    let n = (span / ts + 1e-9) as usize + 1;
    let mut cur = Vec::with_capacity(n);
    let mut volt = Vec::with_capacity(n);
    let mut k = 0;
    for j in 0..n {
        let t = t0 + j as f64 * ts;
        while k + 1 < time.len() && time[k + 1] <= t {
            k += 1;
        }
        cur.push(current[k]);
        if k + 1 < time.len() {
            let w = (t - time[k]) / (time[k + 1] - time[k]);
            volt.push(voltage[k] + w * (voltage[k + 1] - voltage[k]));
        } else {
            volt.push(voltage[k]);
        }
    }
    SampledRecord::new(ts, t0, cur, volt)
}

/// Errors unless `time` is strictly increasing.
pub fn check_increasing(time: &[f64]) -> Result<()> {
    for (index, w) in time.windows(2).enumerate() {
        if !(w[1] > w[0]) {
            return Err(Error::NonMonotonicTime { index: index + 1 });
        }
    }
    Ok(())
}

/// Returns the common sampling interval if every step matches the first one
/// within `rel_tol` (relative), else the first offending row.
pub fn uniform_interval(time: &[f64], rel_tol: f64) -> Result<f64> {
    check_increasing(time)?;
    if time.len() < 2 {
        return Err(Error::InvalidRecord("record needs at least two samples"));
    }
    let n = time.len() - 1;
    let ts = (time[n] - time[0]) / n as f64;
    for (index, w) in time.windows(2).enumerate() {
        if ((w[1] - w[0]) - ts).abs() > rel_tol * ts {
            return Err(Error::NonUniformSampling { index: index + 1 });
        }
    }
    Ok(ts)
}
