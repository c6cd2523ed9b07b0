//! Laguerre-Gaussian modes in the transverse-momentum representation.
//!
//! A mode is labelled by the radial index p ≥ 0, the spiral (OAM) index
//! ℓ ∈ ℤ, and the beam waist w (μm). In momentum space the amplitude is
//!
//! ```text
//! LG_p^ℓ(q, w) = sqrt(w² p! / (2π (p+|ℓ|)!)) · (−1)^p i^ℓ · (|q| w / √2)^|ℓ|
//!                · exp(−|q|² w²/4) · L_p^{|ℓ|}(|q|² w²/2) · exp(iℓ·Arg q)
//! ```
//!
//! where the unit-modulus factor (−1)^p i^ℓ fixes the phase convention
//! exp(iπ(p + ℓ/2)). The same mode expands into a finite power series in
//! |q| with coefficients [`t_coeff`]:
//!
//! ```text
//! LG_p^ℓ(q, w) = exp(−|q|² w²/4) exp(iℓ·Arg q) Σ_{u=0}^{p} T_u^{p,ℓ}(w) |q|^{2u+|ℓ|}
//! ```
//!
//! The series form is what the analytic SPDC kernel is built on, so the two
//! evaluations must agree exactly; a test pins them against each other.

use num_complex::Complex64;
use std::f64::consts::PI;

use crate::error::{Error, Result};

/// Transverse momentum vector, components in 1/μm.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TransverseMomentum {
    pub qx: f64,
    pub qy: f64,
}

impl TransverseMomentum {
    pub fn new(qx: f64, qy: f64) -> Self {
        TransverseMomentum { qx, qy }
    }

    pub fn from_polar(magnitude: f64, azimuth: f64) -> Self {
        TransverseMomentum {
            qx: magnitude * azimuth.cos(),
            qy: magnitude * azimuth.sin(),
        }
    }

    pub fn magnitude(&self) -> f64 {
        self.qx.hypot(self.qy)
    }

    /// Arg(q), in (−π, π]. Zero at the origin.
    pub fn azimuth(&self) -> f64 {
        if self.qx == 0.0 && self.qy == 0.0 {
            0.0
        } else {
            self.qy.atan2(self.qx)
        }
    }
}

/// A validated Laguerre-Gaussian mode label (p, ℓ, w).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LgMode {
    p: u32,
    ell: i32,
    waist: f64,
}

impl LgMode {
    /// Rejects non-positive or non-finite waists. The radial index is
    /// unsigned by construction.
    pub fn new(p: u32, ell: i32, waist: f64) -> Result<Self> {
        if !waist.is_finite() || waist <= 0.0 {
            return Err(Error::InvalidMode(format!(
                "waist must be positive, got {waist}"
            )));
        }
        Ok(LgMode { p, ell, waist })
    }

    pub fn p(&self) -> u32 {
        self.p
    }

    pub fn ell(&self) -> i32 {
        self.ell
    }

    pub fn waist(&self) -> f64 {
        self.waist
    }
}

/// i^ℓ as an exact unit-axis complex number.
pub(crate) fn i_pow(ell: i32) -> Complex64 {
    match ell.rem_euclid(4) {
        0 => Complex64::new(1.0, 0.0),
        1 => Complex64::new(0.0, 1.0),
        2 => Complex64::new(-1.0, 0.0),
        _ => Complex64::new(0.0, -1.0),
    }
}

/// n! in floating point: exact for n ≤ 20, via log-gamma above.
pub fn factorial(n: u32) -> f64 {
    const EXACT: [f64; 21] = [
        1.0,
        1.0,
        2.0,
        6.0,
        24.0,
        120.0,
        720.0,
        5040.0,
        40320.0,
        362880.0,
        3628800.0,
        39916800.0,
        479001600.0,
        6227020800.0,
        87178291200.0,
        1307674368000.0,
        20922789888000.0,
        355687428096000.0,
        6402373705728000.0,
        121645100408832000.0,
        2432902008176640000.0,
    ];
    if (n as usize) < EXACT.len() {
        EXACT[n as usize]
    } else {
        ln_gamma(n as f64 + 1.0).exp()
    }
}

/// Log-gamma via the Lanczos approximation (g = 7, 9 coefficients).
/// Valid for x > 0; relative error below 1e-13 over the range used here.
#[allow(clippy::excessive_precision)] // published coefficients kept verbatim
pub(crate) fn ln_gamma(x: f64) -> f64 {
    const COEFFS: [f64; 8] = [
        676.5203681218851,
        -1259.1392167224028,
        771.32342877765313,
        -176.61502916214059,
        12.507343278686905,
        -0.13857109526572012,
        9.9843695780195716e-6,
        1.5056327351493116e-7,
    ];
    const G: f64 = 7.0;
    let z = x - 1.0;
    let mut acc = 0.99999999999980993;
    for (i, &c) in COEFFS.iter().enumerate() {
        acc += c / (z + i as f64 + 1.0);
    }
    let t = z + G + 0.5;
    0.5 * (2.0 * PI).ln() + (z + 0.5) * t.ln() - t + acc.ln()
}

/// Generalized Laguerre polynomial L_p^α(x) by the three-term recurrence.
pub(crate) fn laguerre(p: u32, alpha: f64, x: f64) -> f64 {
    if p == 0 {
        return 1.0;
    }
    let mut prev = 1.0;
    let mut current = 1.0 + alpha - x;
    for k in 1..p {
        let k = f64::from(k);
        let next = ((2.0 * k + 1.0 + alpha - x) * current - (k + alpha) * prev) / (k + 1.0);
        prev = current;
        current = next;
    }
    current
}

/// Evaluate LG_p^ℓ(q, w): the complex momentum-space mode amplitude.
pub fn eval_lg(q: TransverseMomentum, mode: &LgMode) -> Complex64 {
    let abs_ell = mode.ell.unsigned_abs();
    let w = mode.waist;
    let norm = (w * w * factorial(mode.p) / (2.0 * PI * factorial(mode.p + abs_ell))).sqrt();
    let sign = if mode.p.is_multiple_of(2) { 1.0 } else { -1.0 };
    let phase = i_pow(mode.ell) * sign;
    let mag = q.magnitude();
    let radial = (mag * w / f64::sqrt(2.0)).powi(abs_ell as i32)
        * (-mag * mag * w * w / 4.0).exp()
        * laguerre(mode.p, f64::from(abs_ell), mag * mag * w * w / 2.0);
    let azimuthal = Complex64::from_polar(1.0, f64::from(mode.ell) * q.azimuth());
    phase * norm * radial * azimuthal
}

/// Expansion coefficient T_u^{p,ℓ}(w) of the LG power series in |q|.
///
/// ```text
/// T_u^{p,ℓ}(w) = sqrt(p!(p+|ℓ|)!/π) (w/√2)^{2u+|ℓ|+1}
///                · (−1)^{p+u} i^ℓ / ((p−u)! (|ℓ|+u)! u!)
/// ```
pub fn t_coeff(u: u32, p: u32, ell: i32, waist: f64) -> Result<Complex64> {
    if u > p {
        return Err(Error::InvalidMode(format!(
            "series index u = {u} exceeds radial index p = {p}"
        )));
    }
    if !waist.is_finite() || waist <= 0.0 {
        return Err(Error::InvalidMode(format!(
            "waist must be positive, got {waist}"
        )));
    }
    let abs_ell = ell.unsigned_abs();
    let norm = (factorial(p) * factorial(p + abs_ell) / PI).sqrt();
    let power = (waist / f64::sqrt(2.0)).powi((2 * u + abs_ell + 1) as i32);
    let sign = if (p + u).is_multiple_of(2) { 1.0 } else { -1.0 };
    let denom = factorial(p - u) * factorial(abs_ell + u) * factorial(u);
    Ok(i_pow(ell) * (sign * norm * power / denom))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    const SQRT_2PI: f64 = 2.506_628_274_631_000_5;

    #[test]
    fn gaussian_at_origin() {
        let mode = LgMode::new(0, 0, 30.0).unwrap();
        let value = eval_lg(TransverseMomentum::new(0.0, 0.0), &mode);
        assert_relative_eq!(value.re, 30.0 / SQRT_2PI, max_relative = 1e-14);
        assert_eq!(value.im, 0.0);
    }

    #[test]
    fn vortex_vanishes_at_origin() {
        let mode = LgMode::new(0, 1, 30.0).unwrap();
        let value = eval_lg(TransverseMomentum::new(0.0, 0.0), &mode);
        assert_eq!(value.norm(), 0.0);
    }

    #[test]
    fn opposite_ell_conjugates_azimuthal_phase() {
        let plus = LgMode::new(0, 2, 22.0).unwrap();
        let minus = LgMode::new(0, -2, 22.0).unwrap();
        for (mag, az) in [(0.01, 0.3), (0.05, -1.2), (0.11, 2.9)] {
            let q = TransverseMomentum::from_polar(mag, az);
            let vp = eval_lg(q, &plus);
            let vm = eval_lg(q, &minus);
            assert_relative_eq!(vp.norm(), vm.norm(), max_relative = 1e-12);
            // i^ℓ and i^{−ℓ} are conjugate, so the full values conjugate too.
            assert_relative_eq!(vp.re, vm.conj().re, max_relative = 1e-12);
            assert_relative_eq!(vp.im, vm.conj().im, max_relative = 1e-12);
        }
    }

    #[test]
    fn t_coeff_reference_values() {
        let w = 17.0;
        let t00 = t_coeff(0, 0, 0, w).unwrap();
        assert_relative_eq!(t00.re, w / SQRT_2PI, max_relative = 1e-14);
        assert_eq!(t00.im, 0.0);

        let t01 = t_coeff(0, 0, 1, w).unwrap();
        assert_eq!(t01.re, 0.0);
        assert_relative_eq!(t01.im, w * w / (2.0 * PI.sqrt()), max_relative = 1e-14);
    }

    #[test]
    fn t_coeff_waist_scaling() {
        for ell in [-3, -1, 0, 2, 5] {
            let a = t_coeff(0, 0, ell, 10.0).unwrap().norm();
            let b = t_coeff(0, 0, ell, 20.0).unwrap().norm();
            let expected = 2f64.powi(ell.abs() + 1);
            assert_relative_eq!(b / a, expected, max_relative = 1e-12);
        }
    }

    #[test]
    fn t_coeff_rejects_bad_input() {
        assert!(t_coeff(1, 0, 0, 10.0).is_err());
        assert!(t_coeff(0, 0, 0, 0.0).is_err());
        assert!(LgMode::new(0, 0, -1.0).is_err());
    }

    #[test]
    fn series_decomposition_matches_direct_evaluation() {
        // LG_p^ℓ must equal its truncated power series exactly.
        for p in 0..=2u32 {
            for ell in -3..=3i32 {
                let w = 21.0;
                let mode = LgMode::new(p, ell, w).unwrap();
                for step in 0..=16 {
                    let qw = 4.0 * step as f64 / 16.0;
                    let q = TransverseMomentum::from_polar(qw / w, 0.77);
                    let direct = eval_lg(q, &mode);
                    let mag = q.magnitude();
                    let envelope = (-mag * mag * w * w / 4.0).exp();
                    let azimuthal = Complex64::from_polar(1.0, f64::from(ell) * q.azimuth());
                    let mut series = Complex64::new(0.0, 0.0);
                    // The largest term sets the cancellation scale; near the
                    // Laguerre roots the sum itself can be arbitrarily small.
                    let mut scale = 0.0f64;
                    for u in 0..=p {
                        let term = t_coeff(u, p, ell, w).unwrap()
                            * mag.powi((2 * u + ell.unsigned_abs()) as i32);
                        scale = scale.max(term.norm() * envelope);
                        series += term;
                    }
                    let series = envelope * azimuthal * series;
                    let scale = scale.max(1e-300);
                    assert!(
                        (direct - series).norm() / scale < 1e-10,
                        "p={p} ell={ell} qw={qw}: {direct} vs {series}"
                    );
                }
            }
        }
    }

    #[test]
    fn modes_are_square_normalized() {
        // ∫|LG|² d²q = 2π ∫ |radial|² q dq, azimuthal part has unit modulus.
        let rule = crate::quad::GaussLegendre::new(200);
        for p in 0..=1u32 {
            for ell in -2..=2i32 {
                let w = 18.0;
                let mode = LgMode::new(p, ell, w).unwrap();
                let q_max = 12.0 / w;
                let integral = rule.integrate(0.0, q_max, |q| {
                    let v = eval_lg(TransverseMomentum::new(q, 0.0), &mode);
                    Complex64::new(v.norm_sqr() * q, 0.0)
                });
                assert_relative_eq!(2.0 * PI * integral.re, 1.0, max_relative = 1e-6);
            }
        }
    }

    #[test]
    fn ln_gamma_matches_exact_factorials() {
        for n in 1..=25u32 {
            let exact = (1..=n).map(|k| f64::from(k).ln()).sum::<f64>();
            assert_relative_eq!(ln_gamma(n as f64 + 1.0), exact, max_relative = 1e-12);
        }
    }
}
