//! Brute-force quadrature of the raw biphoton overlap integral.
//!
//! This is the ground truth the closed-form kernel is checked against. It
//! evaluates
//!
//! ```text
//! ∫dz ∬d²q_s d²q_i  e^{iΔk_z z} · LG^{ℓp}(q_s+q_i, w_p)
//!                    · conj(LG^{ℓs}(q_s, w_s)) · conj(LG^{ℓi}(q_i, w_i))
//! ```
//!
//! with the explicit paraxial mismatch
//! Δk_z = |q_s|²/2k_s + |q_i|²/2k_i − |q_s+q_i|²/2k_p, using [`eval_lg`]
//! for the modes, deliberately independent of the analytic kernel path.
//!
//! Quadrature: Gauss-Legendre radial nodes on a truncated [0, q_max] for
//! both photons, uniform azimuthal nodes for both angles, Gauss-Legendre in
//! z. The double azimuthal sum is evaluated by exact reindexing over the
//! difference angle, which leaves OAM conservation to emerge from a
//! numerically summed phase factor instead of being imposed.

use num_complex::Complex64;
use rayon::prelude::*;
use std::f64::consts::TAU;

use crate::config::{CrystalConfig, WaistConfig};
use crate::error::{Error, Result};
use crate::lg::{eval_lg, LgMode, TransverseMomentum};
use crate::quad::GaussLegendre;
use crate::spdc::AmplitudeRequest;

/// Largest |ℓ| the desk-scale grids are sized for.
const MAX_ORACLE_ELL: i32 = 3;

/// Node counts and truncation for the brute-force integral.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OracleGrid {
    /// Gauss-Legendre nodes per radial axis.
    pub radial_nodes: usize,
    /// Uniform azimuthal nodes per angle.
    pub azimuthal_nodes: usize,
    /// Gauss-Legendre nodes along the crystal.
    pub z_nodes: usize,
    /// Radial cutoff q_max = factor / min(waist).
    pub q_max_factor: f64,
}

impl Default for OracleGrid {
    fn default() -> Self {
        OracleGrid {
            radial_nodes: 48,
            azimuthal_nodes: 64,
            z_nodes: 24,
            q_max_factor: 6.0,
        }
    }
}

impl OracleGrid {
    fn refined(&self) -> Self {
        OracleGrid {
            radial_nodes: self.radial_nodes * 3 / 2,
            azimuthal_nodes: self.azimuthal_nodes * 3 / 2,
            z_nodes: self.z_nodes * 3 / 2,
            q_max_factor: self.q_max_factor,
        }
    }
}

/// Oracle value together with its refinement-based error estimate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OracleEstimate {
    /// The refined-grid value.
    pub value: Complex64,
    /// |refined − base| / max(|refined|, |base|); 0 when both vanish.
    pub error_estimate: f64,
}

impl OracleEstimate {
    /// Fail unless the refinement error is within `tolerance`.
    pub fn require(self, tolerance: f64) -> Result<Complex64> {
        if self.error_estimate > tolerance {
            return Err(Error::OracleNotConverged {
                estimate: self.error_estimate,
                tolerance,
            });
        }
        Ok(self.value)
    }
}

/// Direct multidimensional quadrature of the raw overlap integral, with the
/// discretization error estimated from one grid refinement.
pub fn oracle_amplitude(
    req: &AmplitudeRequest,
    crystal: &CrystalConfig,
    waists: &WaistConfig,
    grid: &OracleGrid,
) -> Result<OracleEstimate> {
    crystal.validate()?;
    waists.validate()?;
    if req.ell_signal.abs() > MAX_ORACLE_ELL || req.ell_idler.abs() > MAX_ORACLE_ELL {
        return Err(Error::InvalidMode(format!(
            "oracle grids are sized for |ℓ| ≤ {MAX_ORACLE_ELL}, got ({}, {})",
            req.ell_signal, req.ell_idler
        )));
    }
    let base = raw_overlap(req, crystal, waists, grid)?;
    let fine = raw_overlap(req, crystal, waists, &grid.refined())?;
    let scale = fine.norm().max(base.norm());
    let error_estimate = if scale == 0.0 {
        0.0
    } else {
        (fine - base).norm() / scale
    };
    Ok(OracleEstimate {
        value: fine,
        error_estimate,
    })
}

fn raw_overlap(
    req: &AmplitudeRequest,
    crystal: &CrystalConfig,
    waists: &WaistConfig,
    grid: &OracleGrid,
) -> Result<Complex64> {
    let pump = LgMode::new(0, req.ell_pump, waists.w_pump)?;
    let signal = LgMode::new(0, req.ell_signal, waists.w_signal)?;
    let idler = LgMode::new(0, req.ell_idler, waists.w_idler)?;

    let min_waist = waists.w_pump.min(waists.w_signal).min(waists.w_idler);
    let q_max = grid.q_max_factor / min_waist;
    let radial = GaussLegendre::cached(grid.radial_nodes);
    let z_rule = GaussLegendre::cached(grid.z_nodes);
    let half_length = 0.5 * crystal.length_um;

    // Radial nodes and weights mapped onto [0, q_max].
    let mut nodes: Vec<(f64, f64)> = Vec::with_capacity(grid.radial_nodes);
    let half = 0.5 * q_max;
    for &(x, w) in radial.node_pairs() {
        nodes.push((half + half * x, w * half));
        nodes.push((half - half * x, w * half));
    }
    if let Some(w0) = radial.center_node_weight() {
        nodes.push((half, w0 * half));
    }
    nodes.sort_by(|a, b| a.0.partial_cmp(&b.0).expect("finite nodes"));

    let n_phi = grid.azimuthal_nodes;
    let d_phi = TAU / n_phi as f64;
    let phis: Vec<f64> = (0..n_phi).map(|j| d_phi * j as f64).collect();

    // Conservation factor Σ_k exp(i(ℓp−ℓs−ℓi)φ_k), summed numerically.
    let delta = req.ell_pump - req.ell_signal - req.ell_idler;
    let ksum: Complex64 = phis
        .iter()
        .map(|&phi| Complex64::from_polar(1.0, f64::from(delta) * phi))
        .sum();

    let k_s = crystal.k_signal;
    let k_i = crystal.k_idler;
    let k_p = crystal.k_pump;

    let row_totals: Vec<Complex64> = nodes
        .par_iter()
        .map(|&(q_a, w_a)| {
            let signal_factor =
                eval_lg(TransverseMomentum::new(q_a, 0.0), &signal).conj() * (w_a * q_a);
            let mut row = Complex64::new(0.0, 0.0);
            for &(q_b, w_b) in &nodes {
                let idler_factor =
                    eval_lg(TransverseMomentum::new(q_b, 0.0), &idler).conj() * (w_b * q_b);
                let mut inner = Complex64::new(0.0, 0.0);
                for &psi in &phis {
                    let (sin_psi, cos_psi) = psi.sin_cos();
                    let sum_x = q_a * cos_psi + q_b;
                    let sum_y = q_a * sin_psi;
                    let q_sum = TransverseMomentum::new(sum_x, sum_y);
                    let q_sum_sq = sum_x * sum_x + sum_y * sum_y;
                    let mismatch =
                        q_a * q_a / (2.0 * k_s) + q_b * q_b / (2.0 * k_i) - q_sum_sq / (2.0 * k_p);
                    let z_integral = z_rule.integrate_symmetric(half_length, |z| {
                        Complex64::from_polar(1.0, mismatch * z)
                    });
                    // eval_lg at the summed vector carries both the pump's
                    // radial profile and its e^{iℓp·Arg} factor.
                    let pump_value = eval_lg(q_sum, &pump);
                    let signal_psi = Complex64::from_polar(1.0, -f64::from(req.ell_signal) * psi);
                    inner += pump_value * z_integral * signal_psi;
                }
                row += idler_factor * inner;
            }
            row * signal_factor
        })
        .collect();

    // Deterministic reduction in node order.
    let mut total = Complex64::new(0.0, 0.0);
    for row in row_totals {
        total += row;
    }
    Ok(total * d_phi * d_phi * ksum)
}
