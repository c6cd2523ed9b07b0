//! Biphoton OAM engineering for collinear SPDC sources.
//!
//! This crate computes orbital-angular-momentum spectra of photon pairs
//! from spontaneous parametric down-conversion, composes multi-crystal
//! setups in which emission paths are overlapped so the pair's origin is
//! indistinguishable, and quantifies how close the resulting states come to
//! maximally entangled targets.
//!
//! The building blocks:
//!
//! * [`lg`]: Laguerre-Gaussian modes in momentum space and their finite
//!   power-series decomposition.
//! * [`spdc`]: closed-form expansion amplitudes C^{ℓs,ℓi} on the OAM
//!   anti-diagonal, plus a brute-force quadrature oracle.
//! * [`state`]: sparse biphoton state algebra: shifts, phases, coherent
//!   superposition, fidelity.
//! * [`setup`]: a declarative pipeline of crystals, mode shifters and
//!   phase shifters compiled into a final state; temporal-coherence checks.
//! * [`analysis`]: fidelity bounds from the fixed-ratio law, waist scans,
//!   and a deterministic optimizer.
//!
//! # Quick start
//!
//! ```
//! use oamforge::config::{CrystalConfig, WaistConfig};
//! use oamforge::quad::QuadratureSettings;
//! use oamforge::setup::{compile, PumpSpec, SetupPlan, Stage};
//! use oamforge::spdc::Window;
//! use oamforge::state::TargetState;
//!
//! // Two crystals pumped with one unit of OAM each; the photons from the
//! // first are shifted up by two quanta in both paths.
//! let plan = SetupPlan::new(vec![
//!     Stage::Crystal { pump: PumpSpec::single(1), power: 1.0 },
//!     Stage::Shift { delta_a: 2, delta_b: 2 },
//!     Stage::Crystal { pump: PumpSpec::single(1), power: 1.0 },
//! ])?;
//!
//! let crystal = CrystalConfig::default();
//! let waists = WaistConfig::symmetric(15.0, 25.0);
//! let state = compile(&plan, &crystal, &waists, Window::symmetric(8),
//!                     &QuadratureSettings::default())?;
//!
//! // The four strongest modes form a maximally entangled ququart.
//! let target = TargetState::equal_weights(&[(0, 1), (1, 0), (2, 3), (3, 2)])?;
//! assert!(state.fidelity(&target) > 0.9);
//! # Ok::<(), oamforge::error::Error>(())
//! ```

pub mod analysis;
pub mod config;
pub mod error;
pub mod lg;
pub mod quad;
pub mod setup;
pub mod spdc;
pub mod state;

pub use config::{CrystalConfig, RunConfig, WaistConfig};
pub use error::{Error, Result};
pub use quad::QuadratureSettings;
pub use spdc::{amplitude, anti_diagonal, AmplitudeRequest, Window};
pub use state::{superpose, OamAmplitudeTable, TargetState};

// The guide chapters double as doc-tests so their snippets can never drift
// from the library.
#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/introduction.md")]
    mod introduction {}
    #[doc = include_str!("../../../book/src/lg-modes.md")]
    mod lg_modes {}
    #[doc = include_str!("../../../book/src/spdc-spectra.md")]
    mod spdc_spectra {}
    #[doc = include_str!("../../../book/src/state-algebra.md")]
    mod state_algebra {}
    #[doc = include_str!("../../../book/src/path-identity.md")]
    mod path_identity {}
    #[doc = include_str!("../../../book/src/fidelity-bounds.md")]
    mod fidelity_bounds {}
}
