//! Laguerre filter bank `L_k(s) = 2nu/(s+nu) * ((s-nu)/(s+nu))^k`, `k = 0, 1, 2`.
//!
//! The three filters are realized as one cascade: a first-order lag
//! `2nu/(s+nu)` feeding two all-pass sections `(s-nu)/(s+nu) = 1 - 2nu/(s+nu)`.
//! With states `x = (x0, w1, w2)`:
//!
//! ```text
//! x0' = -nu x0 + 2nu u          L0 = x0
//! w1' = -nu w1 + x0             L1 = x0 - 2nu w1
//! w2' = -nu w2 + L1             L2 = x0 - 2nu w1 - 2nu w2
//! ```
//!
//! The state matrix is `-nu I + N` with `N` nilpotent (`N^3 = 0`), so the
//! zero-order-hold discretization has a closed form with no series
//! truncation beyond the scalar integrals below.

use alloc::vec::Vec;

use nalgebra::Complex;

use crate::error::{Error, Result};
use crate::math;

/// `(2nu/(s+nu)) * ((s-nu)/(s+nu))^k`.
pub fn tf_eval(k: u32, nu: f64, s: Complex<f64>) -> Result<Complex<f64>> {
    let den = s + nu;
    if den.re == 0.0 && den.im == 0.0 {
        return Err(Error::PoleEvaluation);
    }
    let lag = Complex::new(2.0 * nu, 0.0) / den;
    Ok(lag * ((s - nu) / den).powu(k))
}

/// Transfer-function coefficients expressed in the Laguerre basis.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LagCoeffs {
    pub abar: [f64; 3],
    pub bbar: [f64; 3],
}

impl LagCoeffs {
    /// `(abar1/abar0, abar2/abar0)`.
    pub fn a_tilde(&self) -> [f64; 2] {
        [self.abar[1] / self.abar[0], self.abar[2] / self.abar[0]]
    }

    /// `bbar_j / abar0`. Dividing by `abar0` (not `bbar0`) is what makes the
    /// regression form hold with `[L2 v_b]` as the target.
    pub fn b_tilde(&self) -> [f64; 3] {
        let a0 = self.abar[0];
        [self.bbar[0] / a0, self.bbar[1] / a0, self.bbar[2] / a0]
    }
}

/// Maps `(b0 s^2 + b1 s + b2) / (s^2 + a1 s + a2)` into the Laguerre basis:
///
/// ```text
/// abar0 = nu^2 - a1 nu + a2    bbar0 = b0 nu^2 - b1 nu + b2
/// abar1 = 2 nu^2 - 2 a2        bbar1 = 2 b0 nu^2 - 2 b2
/// abar2 = nu^2 + a1 nu + a2    bbar2 = b0 nu^2 + b1 nu + b2
/// ```
pub fn coeff_transform(a1: f64, a2: f64, b0: f64, b1: f64, b2: f64, nu: f64) -> Result<LagCoeffs> {
    if !(nu > 0.0) {
        return Err(Error::InvalidConfig("nu must be positive"));
    }
    let nu2 = nu * nu;
    let abar = [nu2 - a1 * nu + a2, 2.0 * nu2 - 2.0 * a2, nu2 + a1 * nu + a2];
    let bbar = [
        b0 * nu2 - b1 * nu + b2,
        2.0 * b0 * nu2 - 2.0 * b2,
        b0 * nu2 + b1 * nu + b2,
    ];
    let scale = nu2 + a1.abs() * nu + a2.abs();
    if abar[0].abs() <= 1e-14 * scale {
        return Err(Error::DegenerateBank);
    }
    Ok(LagCoeffs { abar, bbar })
}

/// Number of leading samples excluded from regression: `ceil(5 / (nu ts))`,
/// capped at 20 % of the record.
pub fn burn_in_len(nu: f64, ts: f64, len: usize) -> usize {
    let wanted = math::ceil(5.0 / (nu * ts));
    let cap = len / 5;
    if wanted.is_finite() && wanted < cap as f64 {
        wanted as usize
    } else {
        cap
    }
}

/// Zero-order-hold realization of the bank at a fixed sampling interval.
#[derive(Debug, Clone, PartialEq)]
pub struct LaguerreBank {
    nu: f64,
    ts: f64,
    ad: [[f64; 3]; 3],
    bd: [f64; 3],
    /// Input matrix for the slope `u_{j+1} - u_j` under linear interpolation.
    bl: [f64; 3],
}

impl LaguerreBank {
    /// Highest filter index; fixed by the second-order model.
    pub const ORDER: usize = 2;

    pub fn discretize(nu: f64, ts: f64) -> Result<Self> {
        if !(nu > 0.0 && nu.is_finite()) {
            return Err(Error::InvalidConfig("nu must be positive"));
        }
        if !(ts > 0.0 && nu * ts < 10.0) {
            return Err(Error::InvalidConfig("need ts > 0 and nu * ts < 10"));
        }
        let x = nu * ts;
        let e = math::exp(-x);
        // exp(A ts) = e^{-x} (I + ts N + ts^2/2 N^2)
        let t = ts;
        let ad = [
            [e, 0.0, 0.0],
            [e * t, e, 0.0],
            [e * (t - nu * t * t), -2.0 * nu * e * t, e],
        ];
        // int_0^ts exp(A tau) d tau B = (J0 I + J1 N + J2 N^2) B,
        // J_k = int_0^ts tau^k/k! e^{-nu tau} d tau = ts^{k+1} psi_k(nu ts).
        let j0 = t * psi(0, x);
        let j1 = t * t * psi(1, x);
        let j2 = t * t * t * psi(2, x);
        let bd = [2.0 * nu * j0, 2.0 * nu * j1, 2.0 * nu * j1 - 4.0 * nu * nu * j2];
        // For a ramp over the step: bd - (1/ts) int_0^ts tau exp(A tau) d tau B,
        // where the integral is (J1 I + 2 J2 N + 3 J3 N^2) B.
        let j3 = t * t * t * t * psi(3, x);
        let k = [2.0 * nu * j1, 4.0 * nu * j2, 4.0 * nu * j2 - 12.0 * nu * nu * j3];
        let bl = [bd[0] - k[0] / t, bd[1] - k[1] / t, bd[2] - k[2] / t];
        Ok(Self { nu, ts, ad, bd, bl })
    }

    pub fn nu(&self) -> f64 {
        self.nu
    }

    pub fn ts(&self) -> f64 {
        self.ts
    }

    /// Discrete pole `e^{-nu ts}` shared by all three states.
    pub fn pole(&self) -> f64 {
        self.ad[0][0]
    }

    /// Filters a zero-order-hold sequence through `L0`, `L1`, `L2` from zero
    /// initial state. Sample `j` of each output is the filter output at
    /// `t_j`, which depends on inputs `0..j`.
    pub fn filter_signal(&self, x: &[f64]) -> Result<[Vec<f64>; 3]> {
        if x.is_empty() {
            return Err(Error::EmptyInput);
        }
        let mut out = [
            Vec::with_capacity(x.len()),
            Vec::with_capacity(x.len()),
            Vec::with_capacity(x.len()),
        ];
        let two_nu = 2.0 * self.nu;
        let a = &self.ad;
        let b = &self.bd;
        let mut s = [0.0_f64; 3];
        for &u in x {
            let l1 = s[0] - two_nu * s[1];
            out[0].push(s[0]);
            out[1].push(l1);
            out[2].push(l1 - two_nu * s[2]);
            s = [
                a[0][0] * s[0] + b[0] * u,
                a[1][0] * s[0] + a[1][1] * s[1] + b[1] * u,
                a[2][0] * s[0] + a[2][1] * s[1] + a[2][2] * s[2] + b[2] * u,
            ];
        }
        Ok(out)
    }

    /// Like [`filter_signal`](Self::filter_signal), but the input is taken as
    /// linear between samples. Exact for continuous piecewise-linear inputs,
    /// and second-order accurate for smooth ones.
    pub fn filter_linear(&self, x: &[f64]) -> Result<[Vec<f64>; 3]> {
        if x.is_empty() {
            return Err(Error::EmptyInput);
        }
        let mut out = [
            Vec::with_capacity(x.len()),
            Vec::with_capacity(x.len()),
            Vec::with_capacity(x.len()),
        ];
        let two_nu = 2.0 * self.nu;
        let a = &self.ad;
        let b = &self.bd;
        let c = &self.bl;
        let mut s = [0.0_f64; 3];
        for (j, &u) in x.iter().enumerate() {
            let l1 = s[0] - two_nu * s[1];
            out[0].push(s[0]);
            out[1].push(l1);
            out[2].push(l1 - two_nu * s[2]);
            let du = x.get(j + 1).map_or(0.0, |&n| n - u);
            s = [
                a[0][0] * s[0] + b[0] * u + c[0] * du,
                a[1][0] * s[0] + a[1][1] * s[1] + b[1] * u + c[1] * du,
                a[2][0] * s[0] + a[2][1] * s[1] + a[2][2] * s[2] + b[2] * u + c[2] * du,
            ];
        }
        Ok(out)
    }
}

/// `psi_k(x) = int_0^1 s^k/k! e^{-x s} ds`.
fn psi(k: u32, x: f64) -> f64 {
    if x < 1.0 {
        // sum_j (-x)^j / j! / (k! (j + k + 1))
        let mut term = 1.0;
        let mut sum = 0.0;
        let mut j = 0u32;
        loop {
            let add = term / (j + k + 1) as f64;
            sum += add;
            if add.abs() <= 1e-18 * sum.abs() {
                break;
            }
            j += 1;
            term *= -x / j as f64;
        }
        let mut fact = 1.0;
        for i in 2..=k {
            fact *= i as f64;
        }
        sum / fact
    } else {
        // Integration by parts: psi_k = (psi_{k-1} - e^{-x}/k!) / x.
        let e = math::exp(-x);
        let mut p = -math::expm1(-x) / x;
        let mut fact = 1.0;
        for i in 1..=k {
            fact *= i as f64;
            p = (p - e / fact) / x;
        }
        p
    }
}
