//! Declarative path-identity setups and their compilation into a biphoton
//! state.
//!
//! A [`SetupPlan`] is a linear pipeline of stages. Crystal stages emit a
//! (possibly pump-superposed) biphoton state; shift and phase stages act on
//! every photon pair generated upstream. Compiling walks the pipeline, gives
//! the pairs from crystal j the cumulative shifts and phases of all later
//! stages, scales each crystal's raw amplitude table by its pump power
//! factor 𝒳_j, and coherently superposes everything with one final
//! renormalization; 𝒳 = 1 means equal pump strengths.
//!
//! Shift-free plans are equivalent to a single crystal pumped by a suitable
//! mode superposition; [`pump_equivalent`] constructs it.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::config::{CrystalConfig, WaistConfig};
use crate::error::{Error, Result};
use crate::quad::QuadratureSettings;
use crate::spdc::{anti_diagonal_checked, TailDiagnostic, Window};
use crate::state::{superpose, OamAmplitudeTable};

/// One pump mode with its complex weight a_ℓ.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PumpComponent {
    pub ell: i32,
    pub weight: Complex64,
}

/// A superposition of p = 0 pump modes sharing one waist.
#[derive(Debug, Clone, PartialEq)]
pub struct PumpSpec {
    components: Vec<PumpComponent>,
}

impl PumpSpec {
    pub fn new(components: Vec<PumpComponent>) -> Result<Self> {
        if components.is_empty() {
            return Err(Error::InvalidConfig("pump spec has no components".into()));
        }
        if components.iter().all(|c| c.weight.norm_sqr() == 0.0) {
            return Err(Error::InvalidConfig("pump weights are all zero".into()));
        }
        let mut seen = std::collections::BTreeSet::new();
        for c in &components {
            if !seen.insert(c.ell) {
                return Err(Error::InvalidConfig(format!(
                    "duplicate pump component ℓ = {}",
                    c.ell
                )));
            }
        }
        Ok(PumpSpec { components })
    }

    /// A single pump mode of unit weight.
    pub fn single(ell: i32) -> Self {
        PumpSpec {
            components: vec![PumpComponent {
                ell,
                weight: Complex64::new(1.0, 0.0),
            }],
        }
    }

    pub fn components(&self) -> &[PumpComponent] {
        &self.components
    }
}

/// One element of the optical pipeline.
#[derive(Debug, Clone, PartialEq)]
pub enum Stage {
    /// A coherently pumped crystal with relative pump amplitude `power`.
    Crystal { pump: PumpSpec, power: f64 },
    /// Adds Δℓ_A and Δℓ_B quanta of OAM to paths A and B.
    Shift { delta_a: i32, delta_b: i32 },
    /// Optical phase delays along the two paths.
    Phase { phi_a: f64, phi_b: f64 },
}

/// An ordered list of stages; at least one crystal is required.
#[derive(Debug, Clone, PartialEq)]
pub struct SetupPlan {
    stages: Vec<Stage>,
}

impl SetupPlan {
    pub fn new(stages: Vec<Stage>) -> Result<Self> {
        let plan = SetupPlan { stages };
        plan.validate()?;
        Ok(plan)
    }

    pub fn validate(&self) -> Result<()> {
        let mut crystals = 0usize;
        for stage in &self.stages {
            if let Stage::Crystal { pump, power } = stage {
                PumpSpec::new(pump.components.clone())?;
                if !power.is_finite() || *power < 0.0 {
                    return Err(Error::InvalidConfig(
                        "crystal power factor must be non-negative".into(),
                    ));
                }
                crystals += 1;
            }
        }
        if crystals == 0 {
            return Err(Error::InvalidConfig(
                "plan contains no crystal stage".into(),
            ));
        }
        Ok(())
    }

    pub fn stages(&self) -> &[Stage] {
        &self.stages
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let repr: PlanRepr = serde_json::from_str(text)?;
        SetupPlan::try_from(repr)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&PlanRepr::from(self)).expect("plan serializes")
    }
}

/// The raw (un-normalized) spectrum of one crystal: the a_ℓ-weighted sum of
/// anti-diagonals, each self-validated against window truncation.
pub fn pump_spectrum(
    pump: &PumpSpec,
    crystal: &CrystalConfig,
    waists: &WaistConfig,
    window: Window,
    quad: &QuadratureSettings,
) -> Result<(OamAmplitudeTable, TailDiagnostic)> {
    let mut pieces: Vec<((i32, i32), Complex64)> = Vec::new();
    let mut worst = TailDiagnostic {
        window,
        tail_fraction: 0.0,
    };
    for component in &pump.components {
        let (diagonal, diag) = anti_diagonal_checked(component.ell, window, crystal, waists, quad)?;
        if diag.tail_fraction > worst.tail_fraction {
            worst = diag;
        }
        for (&key, &amp) in diagonal.iter() {
            pieces.push((key, component.weight * amp));
        }
    }
    Ok((OamAmplitudeTable::from_entries(pieces), worst))
}

/// Compile a plan into the final normalized biphoton state.
pub fn compile(
    plan: &SetupPlan,
    crystal: &CrystalConfig,
    waists: &WaistConfig,
    window: Window,
    quad: &QuadratureSettings,
) -> Result<OamAmplitudeTable> {
    Ok(compile_with_diagnostics(plan, crystal, waists, window, quad)?.0)
}

/// [`compile`] plus the worst truncation diagnostic across all diagonals.
pub fn compile_with_diagnostics(
    plan: &SetupPlan,
    crystal: &CrystalConfig,
    waists: &WaistConfig,
    window: Window,
    quad: &QuadratureSettings,
) -> Result<(OamAmplitudeTable, TailDiagnostic)> {
    plan.validate()?;
    let mut components: Vec<(OamAmplitudeTable, Complex64)> = Vec::new();
    let mut worst = TailDiagnostic {
        window,
        tail_fraction: 0.0,
    };
    for (index, stage) in plan.stages.iter().enumerate() {
        let Stage::Crystal { pump, power } = stage else {
            continue;
        };
        // Everything placed after this crystal acts on its photons.
        let mut delta = (0i32, 0i32);
        let mut phase = (0.0f64, 0.0f64);
        for later in &plan.stages[index + 1..] {
            match later {
                Stage::Shift { delta_a, delta_b } => {
                    delta.0 += delta_a;
                    delta.1 += delta_b;
                }
                Stage::Phase { phi_a, phi_b } => {
                    phase.0 += phi_a;
                    phase.1 += phi_b;
                }
                Stage::Crystal { .. } => {}
            }
        }
        let (raw, diag) = pump_spectrum(pump, crystal, waists, window, quad)?;
        if diag.tail_fraction > worst.tail_fraction {
            worst = diag;
        }
        let placed = raw
            .shift_oam(delta.0, delta.1)
            .apply_phase(phase.0, phase.1);
        components.push((placed, Complex64::new(*power, 0.0)));
    }
    let state = superpose(&components)?;
    Ok((state, worst))
}

/// Result of reducing a plan to a single spatially-engineered pump.
#[derive(Debug, Clone, PartialEq)]
pub enum PumpEquivalence {
    /// The plan is shift-free; this pump reproduces its spectrum in one
    /// crystal.
    Pump(PumpSpec),
    /// Some stage moves photons off the pump-reachable anti-diagonals.
    NotRepresentable,
}

/// Reduce a shift-free plan to the equivalent single-crystal pump: each
/// crystal contributes (ℓ, 𝒳_j · a_ℓ · e^{iΣ_{k≥j} φ_k}), merged over ℓ.
///
/// Any nonzero shift makes the plan not representable; this is conservative
/// by design.
pub fn pump_equivalent(plan: &SetupPlan) -> PumpEquivalence {
    for stage in &plan.stages {
        if let Stage::Shift { delta_a, delta_b } = stage {
            if *delta_a != 0 || *delta_b != 0 {
                return PumpEquivalence::NotRepresentable;
            }
        }
    }
    let mut merged: std::collections::BTreeMap<i32, Complex64> = std::collections::BTreeMap::new();
    for (index, stage) in plan.stages.iter().enumerate() {
        let Stage::Crystal { pump, power } = stage else {
            continue;
        };
        let mut phase = 0.0f64;
        for later in &plan.stages[index + 1..] {
            if let Stage::Phase { phi_a, phi_b } = later {
                phase += phi_a + phi_b;
            }
        }
        let factor = Complex64::from_polar(*power, phase);
        for component in &pump.components {
            *merged
                .entry(component.ell)
                .or_insert(Complex64::new(0.0, 0.0)) += factor * component.weight;
        }
    }
    let components: Vec<PumpComponent> = merged
        .into_iter()
        .map(|(ell, weight)| PumpComponent { ell, weight })
        .collect();
    match PumpSpec::new(components) {
        Ok(pump) => PumpEquivalence::Pump(pump),
        Err(_) => PumpEquivalence::NotRepresentable,
    }
}

// ---- temporal coherence ----------------------------------------------------

/// Optical path bookkeeping for one crystal, lengths in meters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CrystalPaths {
    /// Source→detector length along path A.
    pub path_a_m: f64,
    /// Source→detector length along path B.
    pub path_b_m: f64,
    /// Splitter→crystal pump path length.
    pub pump_path_m: f64,
    /// Coherence length of the down-converted pair from this crystal.
    pub coherence_dc_m: f64,
}

/// Full interferometric geometry of a multi-crystal setup.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoherenceGeometry {
    pub crystals: Vec<CrystalPaths>,
    /// Path length of the down-converted photons between crystals.
    pub down_conversion_path_m: f64,
    /// Coherence length of the pump laser.
    pub pump_coherence_m: f64,
}

impl CoherenceGeometry {
    pub fn validate(&self) -> Result<()> {
        if self.crystals.is_empty() {
            return Err(Error::InvalidConfig("geometry lists no crystals".into()));
        }
        let all_lengths = self
            .crystals
            .iter()
            .flat_map(|c| [c.path_a_m, c.path_b_m, c.pump_path_m, c.coherence_dc_m])
            .chain([self.down_conversion_path_m, self.pump_coherence_m]);
        for length in all_lengths {
            if !length.is_finite() || length < 0.0 {
                return Err(Error::InvalidConfig("geometry lengths must be ≥ 0".into()));
            }
        }
        if self.down_conversion_path_m > self.crystals[0].path_a_m {
            return Err(Error::InvalidConfig(
                "down-conversion path exceeds the first crystal's path A".into(),
            ));
        }
        Ok(())
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let geometry: CoherenceGeometry = serde_json::from_str(text)?;
        geometry.validate()?;
        Ok(geometry)
    }
}

/// One evaluated indistinguishability condition.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CoherenceCheck {
    pub label: String,
    pub satisfied: bool,
    /// Inequality slack: RHS − LHS (non-negative iff satisfied, up to the
    /// strictness of the pump condition).
    pub margin_m: f64,
}

/// Pass/fail report over all temporal-coherence conditions.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CoherenceReport {
    pub checks: Vec<CoherenceCheck>,
}

impl CoherenceReport {
    pub fn all_satisfied(&self) -> bool {
        self.checks.iter().all(|c| c.satisfied)
    }
}

/// Evaluate the temporal indistinguishability conditions: per crystal the
/// signal/idler arrival times must overlap, |L_A − L_B| ≤ L_coh,DC, and per
/// adjacent crystal pair the pump must not reveal the origin,
/// |L_p^j − L_p^{j+1} − L_DC| < L_coh,pump.
pub fn check_coherence(geometry: &CoherenceGeometry) -> Result<CoherenceReport> {
    geometry.validate()?;
    let mut checks = Vec::new();
    for (j, crystal) in geometry.crystals.iter().enumerate() {
        let lhs = (crystal.path_a_m - crystal.path_b_m).abs();
        let margin = crystal.coherence_dc_m - lhs;
        checks.push(CoherenceCheck {
            label: format!("arrival-time overlap, crystal {}", j + 1),
            satisfied: lhs <= crystal.coherence_dc_m,
            margin_m: margin,
        });
    }
    for pair in geometry.crystals.windows(2).zip(1..) {
        let (window, j) = pair;
        let lhs =
            (window[0].pump_path_m - window[1].pump_path_m - geometry.down_conversion_path_m).abs();
        let margin = geometry.pump_coherence_m - lhs;
        checks.push(CoherenceCheck {
            label: format!("pump-path indistinguishability, crystals {}-{}", j, j + 1),
            satisfied: lhs < geometry.pump_coherence_m,
            margin_m: margin,
        });
    }
    Ok(CoherenceReport { checks })
}

// ---- serde representations -------------------------------------------------

#[derive(Serialize, Deserialize)]
struct PumpComponentRepr {
    l: i32,
    re: f64,
    im: f64,
}

#[derive(Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase")]
enum StageRepr {
    Crystal {
        pump: Vec<PumpComponentRepr>,
        power: f64,
    },
    Shift {
        #[serde(rename = "dA")]
        d_a: i32,
        #[serde(rename = "dB")]
        d_b: i32,
    },
    Phase {
        #[serde(rename = "phiA")]
        phi_a: f64,
        #[serde(rename = "phiB")]
        phi_b: f64,
    },
}

#[derive(Serialize, Deserialize)]
struct PlanRepr {
    stages: Vec<StageRepr>,
}

impl From<&SetupPlan> for PlanRepr {
    fn from(plan: &SetupPlan) -> Self {
        let stages = plan
            .stages
            .iter()
            .map(|stage| match stage {
                Stage::Crystal { pump, power } => StageRepr::Crystal {
                    pump: pump
                        .components
                        .iter()
                        .map(|c| PumpComponentRepr {
                            l: c.ell,
                            re: c.weight.re,
                            im: c.weight.im,
                        })
                        .collect(),
                    power: *power,
                },
                Stage::Shift { delta_a, delta_b } => StageRepr::Shift {
                    d_a: *delta_a,
                    d_b: *delta_b,
                },
                Stage::Phase { phi_a, phi_b } => StageRepr::Phase {
                    phi_a: *phi_a,
                    phi_b: *phi_b,
                },
            })
            .collect();
        PlanRepr { stages }
    }
}

impl TryFrom<PlanRepr> for SetupPlan {
    type Error = Error;

    fn try_from(repr: PlanRepr) -> Result<Self> {
        let stages = repr
            .stages
            .into_iter()
            .map(|stage| {
                Ok(match stage {
                    StageRepr::Crystal { pump, power } => Stage::Crystal {
                        pump: PumpSpec::new(
                            pump.into_iter()
                                .map(|c| PumpComponent {
                                    ell: c.l,
                                    weight: Complex64::new(c.re, c.im),
                                })
                                .collect(),
                        )?,
                        power,
                    },
                    StageRepr::Shift { d_a, d_b } => Stage::Shift {
                        delta_a: d_a,
                        delta_b: d_b,
                    },
                    StageRepr::Phase { phi_a, phi_b } => Stage::Phase { phi_a, phi_b },
                })
            })
            .collect::<Result<Vec<_>>>()?;
        SetupPlan::new(stages)
    }
}
