//! Unit-tagged run configuration: crystal, beam waists, window, tolerances.
//!
//! All lengths in configuration files carry an explicit unit tag (`nm`, `um`,
//! `mm`); everything is converted to micrometers on load. Wave numbers are
//! given directly in inverse micrometers, k = 2πn/λ.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Relative tolerance for the "equal" checks on degenerate photon parameters.
const SYMMETRY_TOL: f64 = 1e-9;

/// Default crystal length: 10 mm, expressed in micrometers.
pub const DEFAULT_LENGTH_UM: f64 = 10_000.0;

/// Default pump wave number at 405 nm in ppKTP, 1/μm.
///
/// k = 2πn/λ with n = 1.8407339 from the KTP Sellmeier relation
/// (Fan et al. 1987 coefficients, y axis).
pub const DEFAULT_K_PUMP: f64 = 28.557_215_423_896_38;

/// Default signal/idler wave number at 810 nm in ppKTP, 1/μm.
///
/// Uses n = 1.8006160, the mean of the y- and z-axis indices at 810 nm; the
/// symmetric kernel requires a single index for the degenerate pair.
pub const DEFAULT_K_SIGNAL: f64 = 13.967_412_704_273_427;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LengthUnit {
    Nm,
    Um,
    Mm,
}

/// A length with an explicit unit tag.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Length {
    pub value: f64,
    pub unit: LengthUnit,
}

impl Length {
    pub fn micrometers(&self) -> f64 {
        match self.unit {
            LengthUnit::Nm => self.value * 1e-3,
            LengthUnit::Um => self.value,
            LengthUnit::Mm => self.value * 1e3,
        }
    }

    pub fn um(value: f64) -> Self {
        Length {
            value,
            unit: LengthUnit::Um,
        }
    }

    pub fn mm(value: f64) -> Self {
        Length {
            value,
            unit: LengthUnit::Mm,
        }
    }
}

/// Nonlinear crystal parameters. Internal unit: micrometers.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CrystalConfig {
    /// Crystal length L, μm.
    pub length_um: f64,
    /// Pump wave number, 1/μm.
    pub k_pump: f64,
    /// Signal wave number, 1/μm.
    pub k_signal: f64,
    /// Idler wave number, 1/μm.
    pub k_idler: f64,
    /// Quasi-phase-matched periodic poling; the kernel assumes the
    /// longitudinal mismatch vanishes at the central frequencies.
    pub periodic_poling: bool,
}

impl CrystalConfig {
    pub fn validate(&self) -> Result<()> {
        if !self.length_um.is_finite() || self.length_um <= 0.0 {
            return Err(Error::InvalidConfig(
                "crystal length must be positive".into(),
            ));
        }
        for (name, k) in [
            ("k_pump", self.k_pump),
            ("k_signal", self.k_signal),
            ("k_idler", self.k_idler),
        ] {
            if !k.is_finite() || k <= 0.0 {
                return Err(Error::InvalidConfig(format!("{name} must be positive")));
            }
        }
        if !approx_equal(self.k_signal, self.k_idler) {
            return Err(Error::InvalidConfig(
                "symmetric kernel requires degenerate photons (k_signal = k_idler)".into(),
            ));
        }
        if !self.periodic_poling {
            return Err(Error::InvalidConfig(
                "analytic kernel assumes quasi-phase-matched periodic poling".into(),
            ));
        }
        Ok(())
    }

    pub fn with_length_um(mut self, length_um: f64) -> Self {
        self.length_um = length_um;
        self
    }
}

impl Default for CrystalConfig {
    fn default() -> Self {
        CrystalConfig {
            length_um: DEFAULT_LENGTH_UM,
            k_pump: DEFAULT_K_PUMP,
            k_signal: DEFAULT_K_SIGNAL,
            k_idler: DEFAULT_K_SIGNAL,
            periodic_poling: true,
        }
    }
}

/// Pump and collection beam waists. Internal unit: micrometers.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WaistConfig {
    pub w_pump: f64,
    pub w_signal: f64,
    pub w_idler: f64,
}

impl WaistConfig {
    /// Symmetric configuration: one pump waist, one collection waist.
    pub fn symmetric(w_pump: f64, w_collection: f64) -> Self {
        WaistConfig {
            w_pump,
            w_signal: w_collection,
            w_idler: w_collection,
        }
    }

    pub fn validate(&self) -> Result<()> {
        for (name, w) in [
            ("pump waist", self.w_pump),
            ("signal waist", self.w_signal),
            ("idler waist", self.w_idler),
        ] {
            if !w.is_finite() || w <= 0.0 {
                return Err(Error::InvalidConfig(format!("{name} must be positive")));
            }
        }
        if !approx_equal(self.w_signal, self.w_idler) {
            return Err(Error::InvalidConfig(
                "symmetric kernel requires equal collection waists (w_signal = w_idler)".into(),
            ));
        }
        Ok(())
    }
}

impl Default for WaistConfig {
    fn default() -> Self {
        WaistConfig::symmetric(15.0, 25.0)
    }
}

fn approx_equal(a: f64, b: f64) -> bool {
    (a - b).abs() <= SYMMETRY_TOL * a.abs().max(b.abs())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OutputFormat {
    Json,
    Csv,
}

/// Full run configuration as loaded from a JSON file.
#[derive(Debug, Clone)]
pub struct RunConfig {
    pub crystal: CrystalConfig,
    pub waists: WaistConfig,
    /// Half-width of the spectral window: ℓ ∈ [−window, window].
    pub window: i32,
    /// Relative tolerance for the adaptive z-quadrature.
    pub quad_tolerance: f64,
    pub format: OutputFormat,
    pub output: Option<String>,
}

impl RunConfig {
    pub fn validate(&self) -> Result<()> {
        self.crystal.validate()?;
        self.waists.validate()?;
        if self.window < 1 {
            return Err(Error::InvalidConfig("window must be at least 1".into()));
        }
        if !self.quad_tolerance.is_finite()
            || self.quad_tolerance <= 0.0
            || self.quad_tolerance > 1e-4
        {
            return Err(Error::InvalidConfig(
                "quadrature tolerance must lie in (0, 1e-4]".into(),
            ));
        }
        Ok(())
    }

    /// Parse and validate a configuration from JSON text.
    pub fn from_json(text: &str) -> Result<Self> {
        let raw: RunConfigFile = serde_json::from_str(text)?;
        let config = RunConfig::from(raw);
        config.validate()?;
        Ok(config)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&RunConfigFile::from(self)).expect("config serializes")
    }
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            crystal: CrystalConfig::default(),
            waists: WaistConfig::default(),
            window: 12,
            quad_tolerance: 1e-8,
            format: OutputFormat::Json,
            output: None,
        }
    }
}

// ---- serde representation -------------------------------------------------

#[derive(Serialize, Deserialize)]
struct CrystalFile {
    length: Length,
    k_pump_per_um: f64,
    k_signal_per_um: f64,
    k_idler_per_um: f64,
    periodic_poling: bool,
}

#[derive(Serialize, Deserialize)]
struct WaistFile {
    pump: Length,
    signal: Length,
    idler: Length,
}

#[derive(Serialize, Deserialize)]
struct RunConfigFile {
    crystal: CrystalFile,
    waists: WaistFile,
    #[serde(default = "default_window")]
    window: i32,
    #[serde(default = "default_quad_tolerance")]
    quad_tolerance: f64,
    #[serde(default = "default_format")]
    format: OutputFormat,
    #[serde(default)]
    output: Option<String>,
}

fn default_window() -> i32 {
    12
}

fn default_quad_tolerance() -> f64 {
    1e-8
}

fn default_format() -> OutputFormat {
    OutputFormat::Json
}

impl From<RunConfigFile> for RunConfig {
    fn from(raw: RunConfigFile) -> Self {
        RunConfig {
            crystal: CrystalConfig {
                length_um: raw.crystal.length.micrometers(),
                k_pump: raw.crystal.k_pump_per_um,
                k_signal: raw.crystal.k_signal_per_um,
                k_idler: raw.crystal.k_idler_per_um,
                periodic_poling: raw.crystal.periodic_poling,
            },
            waists: WaistConfig {
                w_pump: raw.waists.pump.micrometers(),
                w_signal: raw.waists.signal.micrometers(),
                w_idler: raw.waists.idler.micrometers(),
            },
            window: raw.window,
            quad_tolerance: raw.quad_tolerance,
            format: raw.format,
            output: raw.output,
        }
    }
}

impl From<&RunConfig> for RunConfigFile {
    fn from(config: &RunConfig) -> Self {
        RunConfigFile {
            crystal: CrystalFile {
                length: Length::um(config.crystal.length_um),
                k_pump_per_um: config.crystal.k_pump,
                k_signal_per_um: config.crystal.k_signal,
                k_idler_per_um: config.crystal.k_idler,
                periodic_poling: config.crystal.periodic_poling,
            },
            waists: WaistFile {
                pump: Length::um(config.waists.w_pump),
                signal: Length::um(config.waists.w_signal),
                idler: Length::um(config.waists.w_idler),
            },
            window: config.window,
            quad_tolerance: config.quad_tolerance,
            format: config.format,
            output: config.output.clone(),
        }
    }
}
