//! Fidelity analysis: the relative mode number, analytic fidelity bounds,
//! waist scans, and a deterministic grid-refinement optimizer.
//!
//! On a fixed anti-diagonal the sign-aligned modes (relative mode number
//! zero) keep waist-independent amplitude ratios, so the best achievable
//! fidelity to any target supported on that diagonal has a closed form:
//! suppress every tunable mode and overlap the target with the locked,
//! fixed-ratio remainder.

use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;
use std::fmt::Write as _;

use crate::config::{CrystalConfig, WaistConfig};
use crate::error::{Error, Result};
use crate::lg::t_coeff;
use crate::quad::QuadratureSettings;
use crate::setup::{compile, SetupPlan};
use crate::spdc::Window;
use crate::state::TargetState;

/// Relative mode number N_R = |ℓp| − |ℓs| − |ℓi| for a conserving triple.
/// Always zero or a negative even integer.
pub fn rmn(ell_pump: i32, ell_signal: i32, ell_idler: i32) -> Result<i32> {
    if ell_pump != ell_signal + ell_idler {
        return Err(Error::InvalidMode(format!(
            "({ell_pump}, {ell_signal}, {ell_idler}) violates OAM conservation"
        )));
    }
    Ok(ell_pump.abs() - ell_signal.abs() - ell_idler.abs())
}

/// One mode whose amplitude ratio is locked by the pump OAM.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LockedMode {
    pub ell_signal: i32,
    pub ell_idler: i32,
    /// Probability relative to the strongest locked mode.
    pub relative_probability: f64,
}

/// The supremum fidelity achievable for a target on one anti-diagonal.
#[derive(Debug, Clone, PartialEq)]
pub struct BoundReport {
    pub pump_ell: i32,
    pub target: TargetState,
    pub locked_modes: Vec<LockedMode>,
    pub f_max: f64,
}

/// Enumerate the N_R = 0 modes of the ℓp diagonal, assign them their fixed
/// relative amplitudes, assume every suppressible mode vanishes, and return
/// the best fidelity any waist choice could reach:
/// f_max = |Σ conj(t)·c|² / Σ|c|².
pub fn fidelity_bound(ell_pump: i32, target: &TargetState) -> Result<BoundReport> {
    for (a, b) in target.support() {
        if a + b != ell_pump {
            return Err(Error::InvalidMode(format!(
                "target mode ({a}, {b}) is off the ℓp = {ell_pump} anti-diagonal"
            )));
        }
    }
    // Locked = sign-aligned modes. Their amplitudes come from the waist
    // prefactor with all waists equal; the shared crystal integral cancels.
    let signal_range: Vec<i32> = if ell_pump >= 0 {
        (0..=ell_pump).collect()
    } else {
        (ell_pump..=0).collect()
    };
    let mut amplitudes: Vec<(i32, i32, Complex64)> = Vec::new();
    for ell_signal in signal_range {
        let ell_idler = ell_pump - ell_signal;
        let c = t_coeff(0, 0, ell_signal, 1.0)?.conj() * t_coeff(0, 0, ell_idler, 1.0)?.conj();
        amplitudes.push((ell_signal, ell_idler, c));
    }
    let norm_sqr: f64 = amplitudes.iter().map(|(_, _, c)| c.norm_sqr()).sum();
    let overlap: Complex64 = target
        .terms()
        .iter()
        .map(|term| {
            amplitudes
                .iter()
                .find(|&&(a, b, _)| a == term.ell_a && b == term.ell_b)
                .map(|&(_, _, c)| term.weight.conj() * c)
                .unwrap_or(Complex64::new(0.0, 0.0))
        })
        .sum();
    let f_max = overlap.norm_sqr() / norm_sqr;
    let peak = amplitudes
        .iter()
        .map(|(_, _, c)| c.norm_sqr())
        .fold(0.0, f64::max);
    let locked_modes = amplitudes
        .iter()
        .map(|&(ell_signal, ell_idler, c)| LockedMode {
            ell_signal,
            ell_idler,
            relative_probability: c.norm_sqr() / peak,
        })
        .collect();
    Ok(BoundReport {
        pump_ell: ell_pump,
        target: target.clone(),
        locked_modes,
        f_max,
    })
}

impl BoundReport {
    pub fn to_json(&self) -> String {
        #[derive(Serialize)]
        struct Repr<'a> {
            pump_ell: i32,
            locked_modes: &'a [LockedMode],
            f_max: f64,
        }
        serde_json::to_string_pretty(&Repr {
            pump_ell: self.pump_ell,
            locked_modes: &self.locked_modes,
            f_max: self.f_max,
        })
        .expect("report serializes")
    }
}

/// Scan axes: pump waists × collection waists, μm.
#[derive(Debug, Clone, PartialEq)]
pub struct ScanGrid {
    pump_waists: Vec<f64>,
    collection_waists: Vec<f64>,
}

impl ScanGrid {
    pub fn new(pump_waists: Vec<f64>, collection_waists: Vec<f64>) -> Result<Self> {
        for axis in [&pump_waists, &collection_waists] {
            if axis.is_empty() {
                return Err(Error::InvalidConfig("scan axis is empty".into()));
            }
            if axis.iter().any(|&w| !w.is_finite() || w <= 0.0) {
                return Err(Error::InvalidConfig("scan waists must be positive".into()));
            }
            if axis.windows(2).any(|w| w[0] >= w[1]) {
                return Err(Error::InvalidConfig(
                    "scan axes must be strictly increasing".into(),
                ));
            }
        }
        Ok(ScanGrid {
            pump_waists,
            collection_waists,
        })
    }

    /// n evenly spaced values per axis over [lo, hi].
    pub fn linspace(pump: (f64, f64), collection: (f64, f64), n: usize) -> Result<Self> {
        ScanGrid::new(
            linspace(pump.0, pump.1, n),
            linspace(collection.0, collection.1, n),
        )
    }

    pub fn pump_waists(&self) -> &[f64] {
        &self.pump_waists
    }

    pub fn collection_waists(&self) -> &[f64] {
        &self.collection_waists
    }
}

fn linspace(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    if n <= 1 {
        return vec![lo];
    }
    (0..n)
        .map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64)
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ScanRow {
    pub w_pump_um: f64,
    pub w_collection_um: f64,
    pub fidelity: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScanFailure {
    pub w_pump_um: f64,
    pub w_collection_um: f64,
    pub error: String,
}

/// Scan results sorted by (w_pump, w_collection); per-point failures are
/// recorded, not fatal.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScanTable {
    pub rows: Vec<ScanRow>,
    pub failures: Vec<ScanFailure>,
}

impl ScanTable {
    pub fn best(&self) -> Option<ScanRow> {
        self.rows.iter().copied().max_by(|a, b| {
            a.fidelity
                .partial_cmp(&b.fidelity)
                .expect("finite fidelities")
        })
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("w_p_um,w_c_um,fidelity\n");
        for row in &self.rows {
            writeln!(
                out,
                "{},{},{}",
                row.w_pump_um, row.w_collection_um, row.fidelity
            )
            .expect("string write");
        }
        out
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("scan serializes")
    }
}

/// Fidelity of the compiled plan at every grid point. Deterministic: rows
/// come back sorted by (w_pump, w_collection) regardless of scheduling.
pub fn waist_scan(
    target: &TargetState,
    plan: &SetupPlan,
    grid: &ScanGrid,
    crystal: &CrystalConfig,
    window: Window,
    quad: &QuadratureSettings,
) -> ScanTable {
    let points: Vec<(f64, f64)> = grid
        .pump_waists
        .iter()
        .flat_map(|&wp| grid.collection_waists.iter().map(move |&wc| (wp, wc)))
        .collect();
    let outcomes: Vec<(f64, f64, std::result::Result<f64, String>)> = points
        .par_iter()
        .map(|&(wp, wc)| {
            let waists = WaistConfig::symmetric(wp, wc);
            let outcome = compile(plan, crystal, &waists, window, quad)
                .map(|state| state.fidelity(target))
                .map_err(|e| e.to_string());
            (wp, wc, outcome)
        })
        .collect();
    let mut rows = Vec::new();
    let mut failures = Vec::new();
    for (wp, wc, outcome) in outcomes {
        match outcome {
            Ok(fidelity) => rows.push(ScanRow {
                w_pump_um: wp,
                w_collection_um: wc,
                fidelity,
            }),
            Err(error) => failures.push(ScanFailure {
                w_pump_um: wp,
                w_collection_um: wc,
                error,
            }),
        }
    }
    ScanTable { rows, failures }
}

/// Rectangular search domain for the waist optimizer, μm.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WaistBounds {
    pub pump: (f64, f64),
    pub collection: (f64, f64),
}

impl WaistBounds {
    pub fn validate(&self) -> Result<()> {
        for (lo, hi) in [self.pump, self.collection] {
            if !lo.is_finite() || !hi.is_finite() || lo <= 0.0 || hi < lo {
                return Err(Error::InvalidConfig(format!(
                    "waist bounds [{lo}, {hi}] are not a positive interval"
                )));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct WaistOptimum {
    pub w_pump_um: f64,
    pub w_collection_um: f64,
    pub fidelity: f64,
}

/// Deterministic derivative-free maximization: a coarse grid pass followed
/// by four rounds of grid halving around the incumbent. The result is never
/// worse than the best coarse-grid point.
pub fn optimize_waists(
    target: &TargetState,
    plan: &SetupPlan,
    bounds: WaistBounds,
    crystal: &CrystalConfig,
    window: Window,
    quad: &QuadratureSettings,
) -> Result<WaistOptimum> {
    const COARSE: usize = 25;
    const REFINE_ROUNDS: usize = 4;
    const REFINE_POINTS: usize = 5;
    bounds.validate()?;

    let coarse = ScanGrid::new(
        dedup(linspace(bounds.pump.0, bounds.pump.1, COARSE)),
        dedup(linspace(bounds.collection.0, bounds.collection.1, COARSE)),
    )?;
    let table = waist_scan(target, plan, &coarse, crystal, window, quad);
    let mut incumbent = table
        .best()
        .ok_or_else(|| Error::InvalidConfig("every coarse scan point failed".into()))?;

    let mut span_pump = (bounds.pump.1 - bounds.pump.0) / (COARSE.max(2) - 1) as f64;
    let mut span_coll = (bounds.collection.1 - bounds.collection.0) / (COARSE.max(2) - 1) as f64;
    for _ in 0..REFINE_ROUNDS {
        span_pump *= 0.5;
        span_coll *= 0.5;
        let pump_axis = dedup(clamped_linspace(
            incumbent.w_pump_um - span_pump,
            incumbent.w_pump_um + span_pump,
            REFINE_POINTS,
            bounds.pump,
        ));
        let coll_axis = dedup(clamped_linspace(
            incumbent.w_collection_um - span_coll,
            incumbent.w_collection_um + span_coll,
            REFINE_POINTS,
            bounds.collection,
        ));
        let grid = ScanGrid::new(pump_axis, coll_axis)?;
        let refined = waist_scan(target, plan, &grid, crystal, window, quad);
        if let Some(best) = refined.best() {
            if best.fidelity > incumbent.fidelity {
                incumbent = best;
            }
        }
    }
    Ok(WaistOptimum {
        w_pump_um: incumbent.w_pump_um,
        w_collection_um: incumbent.w_collection_um,
        fidelity: incumbent.fidelity,
    })
}

fn clamped_linspace(lo: f64, hi: f64, n: usize, bounds: (f64, f64)) -> Vec<f64> {
    linspace(lo.max(bounds.0), hi.min(bounds.1), n)
}

fn dedup(mut axis: Vec<f64>) -> Vec<f64> {
    axis.dedup();
    axis
}

/// Whether a two-crystal setup's four shifts keep the compiled four-mode
/// state non-separable on both paths:
/// |Δℓ₁+Δℓ₂| + |Δℓ₂| ≥ 2 along A and along B.
pub fn ququart_separability_check(
    delta_a1: i32,
    delta_b1: i32,
    delta_a2: i32,
    delta_b2: i32,
) -> bool {
    let path_a = (delta_a1 + delta_a2).abs() + delta_a2.abs() >= 2;
    let path_b = (delta_b1 + delta_b2).abs() + delta_b2.abs() >= 2;
    path_a && path_b
}
