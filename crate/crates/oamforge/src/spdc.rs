//! SPDC expansion amplitudes on the OAM anti-diagonal.
//!
//! For a pump carrying ℓ_p, collinear quasi-phase-matched down-conversion
//! populates mode pairs (ℓ, ℓ_p−ℓ). With degenerate photons (k_s = k_i,
//! w_s = w_i) the projected p = 0 amplitude factorizes into a waist-only
//! prefactor and a crystal integral,
//!
//! ```text
//! C^{ℓs,ℓi} = T₀^{0,ℓp}(w_p) · conj(T₀^{0,ℓs}(w_s)) · conj(T₀^{0,ℓi}(w_i))
//!             · π² · ∫_{−L/2}^{L/2} G^{ℓs,ℓi}(z) dz
//! ```
//!
//! where G is rational in the two abbreviations
//!
//! ```text
//! B(z) = (w_p² + w_s²)/4 − i z (k_p − k_s) / (2 k_p k_s)
//! D(z) = −w_p²/4 − i z / (2 k_p)
//! ```
//!
//! and takes one of two closed forms depending on the signs of (ℓs, ℓi);
//! the both-negative sector follows from conjugating the mirrored indices.
//! The normalization is chosen so that the value equals the raw overlap
//! integral of the mode functions; [`oracle`] computes that integral by
//! brute force and pins this module against it.
//!
//! A consequence worth noting: amplitudes with ℓs, ℓi ≥ 0 on a common
//! anti-diagonal share the same crystal integral, so their ratios reduce to
//! the waist-independent factorial law |C₁/C₂| = sqrt(ℓs₂!ℓi₂!/(ℓs₁!ℓi₁!)).

use num_complex::Complex64;
use rayon::prelude::*;
use std::f64::consts::PI;

use crate::config::{CrystalConfig, WaistConfig};
use crate::error::{Error, Result};
use crate::lg::t_coeff;
use crate::quad::{integrate_adaptive_symmetric, QuadratureSettings};
use crate::state::OamAmplitudeTable;

pub mod oracle;

/// Combined squared amplitude allowed in the two outermost window modes,
/// relative to the diagonal total.
pub const TAIL_FRACTION_LIMIT: f64 = 1e-4;

/// Widening step and cap used when a window fails the tail check.
const WINDOW_WIDEN_STEP: i32 = 4;
const WINDOW_HALF_WIDTH_CAP: i32 = 64;

/// One requested amplitude C^{ℓs,ℓi} under pump ℓp.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct AmplitudeRequest {
    pub ell_pump: i32,
    pub ell_signal: i32,
    pub ell_idler: i32,
}

impl AmplitudeRequest {
    pub fn new(ell_pump: i32, ell_signal: i32, ell_idler: i32) -> Self {
        AmplitudeRequest {
            ell_pump,
            ell_signal,
            ell_idler,
        }
    }

    /// OAM conservation ℓp = ℓs + ℓi; everything else is structurally zero.
    pub fn conserves(&self) -> bool {
        self.ell_pump == self.ell_signal + self.ell_idler
    }

    fn mirrored(&self) -> Self {
        AmplitudeRequest {
            ell_pump: -self.ell_pump,
            ell_signal: -self.ell_signal,
            ell_idler: -self.ell_idler,
        }
    }
}

/// The kernel abbreviations B(z), D(z) evaluated at one crystal position.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KernelPoint {
    pub b: Complex64,
    pub d: Complex64,
}

impl KernelPoint {
    /// Evaluate the abbreviations at position z (μm from crystal center).
    pub fn at(z: f64, crystal: &CrystalConfig, waists: &WaistConfig) -> Self {
        let w_p2 = waists.w_pump * waists.w_pump;
        let w_s2 = waists.w_signal * waists.w_signal;
        let b = Complex64::new(
            0.25 * (w_p2 + w_s2),
            -z * (crystal.k_pump - crystal.k_signal) / (2.0 * crystal.k_pump * crystal.k_signal),
        );
        let d = Complex64::new(-0.25 * w_p2, -z / (2.0 * crystal.k_pump));
        KernelPoint { b, d }
    }

    fn check(&self) -> Result<()> {
        if (self.b - self.d).norm_sqr() == 0.0 || (self.b + self.d).norm_sqr() == 0.0 {
            return Err(Error::InvalidConfig(
                "kernel point degenerate: B ± D vanished".into(),
            ));
        }
        Ok(())
    }
}

/// Evaluate G^{ℓs,ℓi}(z), the closed-form kernel under the z-integral.
///
/// Callers must fold the both-negative sector onto the both-positive one by
/// conjugation first; requesting it here is a contract violation.
pub fn kernel_g(
    ell_signal: i32,
    ell_idler: i32,
    z: f64,
    crystal: &CrystalConfig,
    waists: &WaistConfig,
) -> Result<Complex64> {
    let point = KernelPoint::at(z, crystal, waists);
    point.check()?;
    kernel_g_at(ell_signal, ell_idler, point)
}

fn kernel_g_at(ell_signal: i32, ell_idler: i32, point: KernelPoint) -> Result<Complex64> {
    let KernelPoint { b, d } = point;
    if ell_signal < 0 && ell_idler < 0 {
        return Err(Error::InvalidMode(
            "kernel_g: both-negative indices are handled by conjugation at the caller".into(),
        ));
    }
    // Evaluated factor by factor with the factorial interleaved, so the
    // intermediates stay bounded; forming the full powers first overflows
    // the complex division for far-tail indices at large waists.
    let diff = b - d;
    let sum = b + d;
    if ell_signal >= 0 && ell_idler >= 0 {
        // n! / ((B−D)^{n+1} (B+D))
        let n = (ell_signal + ell_idler) as u32;
        let mut g = Complex64::new(1.0, 0.0) / sum;
        for k in 1..=n {
            g = g * f64::from(k) / diff;
        }
        Ok(g / diff)
    } else {
        // M! D^m / ((B−D)^{M+1} (B+D)^{m+1})
        let max = ell_signal.unsigned_abs().max(ell_idler.unsigned_abs());
        let min = ell_signal.unsigned_abs().min(ell_idler.unsigned_abs());
        let mut g = Complex64::new(1.0, 0.0) / sum;
        for k in 1..=max {
            g = g * f64::from(k) / diff;
            if k <= min {
                g = g * d / sum;
            }
        }
        Ok(g / diff)
    }
}

/// The waist-only prefactor T^{ℓp,ℓs,ℓi} · π², with the signal/idler
/// coefficients conjugated as the overlap integral demands.
fn prefactor(req: &AmplitudeRequest, waists: &WaistConfig) -> Result<Complex64> {
    let pump = t_coeff(0, 0, req.ell_pump, waists.w_pump)?;
    let signal = t_coeff(0, 0, req.ell_signal, waists.w_signal)?;
    let idler = t_coeff(0, 0, req.ell_idler, waists.w_idler)?;
    Ok(pump * signal.conj() * idler.conj() * (PI * PI))
}

/// The expansion amplitude C^{ℓs,ℓi}, un-normalized (global scale is fixed
/// only after a whole spectrum is assembled).
///
/// Non-conserving requests return exactly zero. Quadrature non-convergence
/// is a reported failure, never a silent value.
pub fn amplitude(
    req: &AmplitudeRequest,
    crystal: &CrystalConfig,
    waists: &WaistConfig,
    quad: &QuadratureSettings,
) -> Result<Complex64> {
    crystal.validate()?;
    waists.validate()?;
    if !req.conserves() {
        return Ok(Complex64::new(0.0, 0.0));
    }
    if req.ell_signal <= 0 && req.ell_idler <= 0 && (req.ell_signal < 0 || req.ell_idler < 0) {
        return Ok(amplitude(&req.mirrored(), crystal, waists, quad)?.conj());
    }
    KernelPoint::at(0.0, crystal, waists).check()?;
    let context = format!(
        "C^({},{}) under pump {}",
        req.ell_signal, req.ell_idler, req.ell_pump
    );
    let integral = integrate_adaptive_symmetric(0.5 * crystal.length_um, quad, &context, |z| {
        kernel_g_at(
            req.ell_signal,
            req.ell_idler,
            KernelPoint::at(z, crystal, waists),
        )
        .expect("sign dispatch established above")
    })?;
    Ok(prefactor(req, waists)? * integral)
}

/// An inclusive range of signal-side OAM values ℓ.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Window {
    lo: i32,
    hi: i32,
}

impl Window {
    pub fn new(lo: i32, hi: i32) -> Result<Self> {
        if lo > hi {
            return Err(Error::InvalidConfig(format!(
                "window [{lo}, {hi}] is empty"
            )));
        }
        Ok(Window { lo, hi })
    }

    /// [−half, half].
    pub fn symmetric(half: i32) -> Self {
        let half = half.abs();
        Window {
            lo: -half,
            hi: half,
        }
    }

    pub fn lo(&self) -> i32 {
        self.lo
    }

    pub fn hi(&self) -> i32 {
        self.hi
    }

    pub fn iter(&self) -> impl Iterator<Item = i32> {
        self.lo..=self.hi
    }

    fn widened(&self, by: i32) -> Self {
        Window {
            lo: self.lo - by,
            hi: self.hi + by,
        }
    }
}

impl Default for Window {
    fn default() -> Self {
        Window::symmetric(12)
    }
}

/// All amplitudes (ℓ, ℓp−ℓ) for ℓ in the window, as a raw (un-normalized)
/// sparse table. Off-line entries are implicitly zero and never stored.
pub fn anti_diagonal(
    ell_pump: i32,
    window: Window,
    crystal: &CrystalConfig,
    waists: &WaistConfig,
    quad: &QuadratureSettings,
) -> Result<OamAmplitudeTable> {
    let ells: Vec<i32> = window.iter().collect();
    let entries = ells
        .par_iter()
        .map(|&ell| {
            let req = AmplitudeRequest::new(ell_pump, ell, ell_pump - ell);
            amplitude(&req, crystal, waists, quad).map(|a| ((ell, ell_pump - ell), a))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(OamAmplitudeTable::from_entries(entries))
}

/// Outcome of the self-validating truncation check.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TailDiagnostic {
    /// The window that finally satisfied the check.
    pub window: Window,
    /// Combined probability of the two outermost ℓ values over the total.
    pub tail_fraction: f64,
}

/// Like [`anti_diagonal`], but widens the window until the two outermost ℓ
/// values carry less than [`TAIL_FRACTION_LIMIT`] of the diagonal's squared
/// amplitude, so the truncation validates itself.
pub fn anti_diagonal_checked(
    ell_pump: i32,
    window: Window,
    crystal: &CrystalConfig,
    waists: &WaistConfig,
    quad: &QuadratureSettings,
) -> Result<(OamAmplitudeTable, TailDiagnostic)> {
    let mut window = window;
    loop {
        let table = anti_diagonal(ell_pump, window, crystal, waists, quad)?;
        let total = table.norm_sqr();
        let tail = table.amplitude(window.lo, ell_pump - window.lo).norm_sqr()
            + table.amplitude(window.hi, ell_pump - window.hi).norm_sqr();
        let tail_fraction = if total == 0.0 { 0.0 } else { tail / total };
        if !tail_fraction.is_finite() {
            return Err(Error::WindowTooNarrow(format!(
                "non-finite amplitudes at window [{}, {}]",
                window.lo, window.hi
            )));
        }
        if tail_fraction < TAIL_FRACTION_LIMIT {
            return Ok((
                table,
                TailDiagnostic {
                    window,
                    tail_fraction,
                },
            ));
        }
        if window.lo <= -WINDOW_HALF_WIDTH_CAP || window.hi >= WINDOW_HALF_WIDTH_CAP {
            return Err(Error::WindowTooNarrow(format!(
                "tail fraction {tail_fraction:.3e} still above {TAIL_FRACTION_LIMIT:.1e} \
                 at window [{}, {}]",
                window.lo, window.hi
            )));
        }
        window = window.widened(WINDOW_WIDEN_STEP);
    }
}
