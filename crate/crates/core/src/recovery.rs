//! From identified Laguerre-normalized coefficients back to circuit values.
//!
//! The circuit transfer function is
//!
//! ```text
//! G(s) = R0 + R1 / (tau1 s + 1) + R2 / (tau2 s + 1)
//!      = (b0 s^2 + b1 s + b2) / (s^2 + a1 s + a2)
//! ```
//!
//! with `a1 = 1/tau1 + 1/tau2`, `a2 = 1/(tau1 tau2)`, `b0 = R0`,
//! `b1 = R0 a1 + R1/tau1 + R2/tau2` and `b2 = a2 (R0 + R1 + R2)`.

use crate::ecm::EcmParams;
use crate::error::{Error, Result};
use crate::laguerre::coeff_transform;
use crate::math;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TfCoeffs {
    pub a1: f64,
    pub a2: f64,
    pub b0: f64,
    pub b1: f64,
    pub b2: f64,
}

impl TfCoeffs {
    /// Both denominator coefficients positive (stable poles).
    pub fn is_stable(&self) -> bool {
        self.a1 > 0.0 && self.a2 > 0.0
    }

    pub fn discriminant(&self) -> f64 {
        self.a1 * self.a1 - 4.0 * self.a2
    }
}

pub fn physical_to_tf(p: &EcmParams) -> TfCoeffs {
    let (q1, q2) = (1.0 / p.tau1(), 1.0 / p.tau2());
    let a1 = q1 + q2;
    let a2 = q1 * q2;
    TfCoeffs {
        a1,
        a2,
        b0: p.r0,
        b1: p.r0 * a1 + p.r1 * q1 + p.r2 * q2,
        b2: a2 * (p.r0 + p.r1 + p.r2),
    }
}

/// Normalized Laguerre coefficients `(a~, b~)` for `tf`.
pub fn tf_to_tilde(tf: &TfCoeffs, nu: f64) -> Result<([f64; 2], [f64; 3])> {
    let c = coeff_transform(tf.a1, tf.a2, tf.b0, tf.b1, tf.b2, nu)?;
    Ok((c.a_tilde(), c.b_tilde()))
}

/// Inverts the Laguerre transform.
///
/// Since `abar0 + abar1 + abar2 = 4 nu^2`, the normalizer is
/// `abar0 = 4 nu^2 / (1 + a~1 + a~2)`; then
/// `a1 = (abar2 - abar0) / (2 nu)`, `a2 = (abar0 - abar1 + abar2) / 4`, and
/// the same three combinations of `bbar` give `b0 nu^2 4`, `2 nu b1`, `4 b2`.
pub fn tilde_to_tf(a_tilde: [f64; 2], b_tilde: [f64; 3], nu: f64) -> Result<TfCoeffs> {
    if !(nu > 0.0) {
        return Err(Error::InvalidConfig("nu must be positive"));
    }
    let den = 1.0 + a_tilde[0] + a_tilde[1];
    if !(den.abs() > 1e-14 * (1.0 + a_tilde[0].abs() + a_tilde[1].abs())) {
        return Err(Error::SingularSystem);
    }
    let nu2 = nu * nu;
    let abar0 = 4.0 * nu2 / den;
    let ab = [abar0, a_tilde[0] * abar0, a_tilde[1] * abar0];
    let bb = [b_tilde[0] * abar0, b_tilde[1] * abar0, b_tilde[2] * abar0];
    let tf = TfCoeffs {
        a1: (ab[2] - ab[0]) / (2.0 * nu),
        a2: (ab[0] - ab[1] + ab[2]) / 4.0,
        b0: (bb[0] + bb[1] + bb[2]) / (4.0 * nu2),
        b1: (bb[2] - bb[0]) / (2.0 * nu),
        b2: (bb[0] - bb[1] + bb[2]) / 4.0,
    };
    if [tf.a1, tf.a2, tf.b0, tf.b1, tf.b2].iter().any(|v| !v.is_finite()) {
        return Err(Error::SingularSystem);
    }
    Ok(tf)
}

/// `(tau1, tau2)` with `tau1 <= tau2`: reciprocals of the roots of
/// `x^2 - a1 x + a2`.
pub fn time_constants(tf: &TfCoeffs) -> Result<(f64, f64)> {
    let disc = tf.discriminant();
    // Rounding can leave a double root slightly off zero either way.
    let disc = if disc.abs() <= 1e-12 * tf.a1 * tf.a1 { 0.0 } else { disc };
    if disc < 0.0 {
        return Err(Error::ComplexTimeConstants { discriminant: disc });
    }
    // Larger root without cancellation; the smaller from the product.
    let fast = 0.5 * (tf.a1 + math::sqrt(disc));
    if fast == 0.0 {
        return Err(Error::SingularSystem);
    }
    let slow = tf.a2 / fast;
    Ok((1.0 / fast, 1.0 / slow))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct RecoveryFlags {
    /// Some recovered R or C is not strictly positive (values are raw).
    pub non_physical: bool,
    /// `a1 <= 0` or `a2 <= 0`.
    pub negative_coefficient: bool,
    /// Time constants coincide, so the R1/R2 split is not identifiable.
    pub equal_time_constants: bool,
}

/// Circuit values without capacity. Fast branch is `(r1, c1)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Recovered {
    pub r0: f64,
    pub r1: f64,
    pub r2: f64,
    pub c1: f64,
    pub c2: f64,
    pub tau1: f64,
    pub tau2: f64,
    pub flags: RecoveryFlags,
}

impl Recovered {
    pub fn to_params(&self, capacity_ah: f64) -> Result<EcmParams> {
        EcmParams::new(self.r0, self.r1, self.r2, self.c1, self.c2, capacity_ah)
    }

    fn refresh_flags(&mut self) {
        self.flags.non_physical |= ![self.r0, self.r1, self.r2, self.c1, self.c2]
            .iter()
            .all(|v| *v > 0.0 && v.is_finite());
    }
}

/// Splits `G(s)` into `R0` and two RC branches.
///
/// `R1 + R2 = b2/a2 - R0` and `R1/tau1 + R2/tau2 = b1 - R0 a1`. With equal
/// time constants the two equations coincide; if they agree the resistance
/// is split evenly, otherwise the result is flagged non-physical.
pub fn tf_to_physical(tf: &TfCoeffs) -> Result<Recovered> {
    let (tau1, tau2) = time_constants(tf)?;
    let mut flags = RecoveryFlags {
        negative_coefficient: !tf.is_stable(),
        ..RecoveryFlags::default()
    };
    let r0 = tf.b0;
    let sum = tf.b2 / tf.a2 - r0;
    let weighted = tf.b1 - r0 * tf.a1;
    let (q1, q2) = (1.0 / tau1, 1.0 / tau2);
    let (r1, r2) = if (q1 - q2).abs() <= 1e-9 * q1.abs() {
        flags.equal_time_constants = true;
        let consistent = (weighted - sum * q1).abs() <= 1e-9 * (weighted.abs() + (sum * q1).abs());
        flags.non_physical = !consistent;
        (0.5 * sum, 0.5 * sum)
    } else {
        let r1 = (weighted - sum * q2) / (q1 - q2);
        (r1, sum - r1)
    };
    let mut out = Recovered {
        r0,
        r1,
        r2,
        c1: tau1 / r1,
        c2: tau2 / r2,
        tau1,
        tau2,
        flags,
    };
    out.refresh_flags();
    Ok(out)
}

/// Removes the bias from filtering sampled voltage as if it were held
/// between samples.
///
/// The identified poles are exact, but each RC residue comes out multiplied
/// by `(e^{ts/tau} - 1) tau / ts`. Dividing that factor out of `R1`, `R2`
/// and moving the difference into `R0` keeps the DC resistance unchanged.
pub fn sample_hold_correction(r: &Recovered, ts: f64) -> Recovered {
    if !(r.tau1 > 0.0 && r.tau2 > 0.0 && ts > 0.0) {
        return *r;
    }
    let factor = |tau: f64| {
        let x = ts / tau;
        x / math::expm1(x)
    };
    let r1 = r.r1 * factor(r.tau1);
    let r2 = r.r2 * factor(r.tau2);
    let mut out = Recovered {
        r0: r.r0 + (r.r1 - r1) + (r.r2 - r2),
        r1,
        r2,
        c1: r.tau1 / r1,
        c2: r.tau2 / r2,
        ..*r
    };
    out.refresh_flags();
    out
}
