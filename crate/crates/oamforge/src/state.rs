//! Sparse biphoton OAM state algebra.
//!
//! A state is a sparse map from mode pairs (ℓ_A, ℓ_B) to complex amplitudes.
//! Tables are immutable values: every operation returns a new table, so they
//! can be shared freely across threads. Physical spectra live on narrow
//! anti-diagonal bands, which is why the representation is a sorted sparse
//! map rather than a dense matrix.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;

use crate::error::{Error, Result};

/// Norm-squared agreement required of a table that claims to be normalized.
pub const NORMALIZATION_TOL: f64 = 1e-9;

/// Residual-to-peak norm ratio below which a superposition counts as
/// destroyed by interference rather than merely small.
pub const DEGENERATE_NORM_RATIO: f64 = 1e-12;

/// Sparse complex amplitude table over (ℓ_A, ℓ_B).
#[derive(Debug, Clone, PartialEq)]
pub struct OamAmplitudeTable {
    entries: BTreeMap<(i32, i32), Complex64>,
    normalized: bool,
}

impl OamAmplitudeTable {
    /// Build an un-normalized table; entries with exactly zero amplitude are
    /// dropped to preserve sparsity.
    pub fn from_entries<I>(entries: I) -> Self
    where
        I: IntoIterator<Item = ((i32, i32), Complex64)>,
    {
        let mut map = BTreeMap::new();
        for (key, amplitude) in entries {
            if amplitude.norm_sqr() != 0.0 {
                let slot = map.entry(key).or_insert(Complex64::new(0.0, 0.0));
                *slot += amplitude;
                if slot.norm_sqr() == 0.0 {
                    map.remove(&key);
                }
            }
        }
        OamAmplitudeTable {
            entries: map,
            normalized: false,
        }
    }

    pub fn empty() -> Self {
        OamAmplitudeTable {
            entries: BTreeMap::new(),
            normalized: false,
        }
    }

    /// A single-mode normalized state |ℓ_A, ℓ_B⟩.
    pub fn basis_state(ell_a: i32, ell_b: i32) -> Self {
        let mut entries = BTreeMap::new();
        entries.insert((ell_a, ell_b), Complex64::new(1.0, 0.0));
        OamAmplitudeTable {
            entries,
            normalized: true,
        }
    }

    pub fn is_normalized(&self) -> bool {
        self.normalized
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Σ |amplitude|².
    pub fn norm_sqr(&self) -> f64 {
        self.entries.values().map(|a| a.norm_sqr()).sum()
    }

    /// Amplitude at a key, zero if absent.
    pub fn amplitude(&self, ell_a: i32, ell_b: i32) -> Complex64 {
        self.entries
            .get(&(ell_a, ell_b))
            .copied()
            .unwrap_or(Complex64::new(0.0, 0.0))
    }

    /// |amplitude|² at a key, zero if absent. Meaningful as a probability
    /// only on a normalized table.
    pub fn probability(&self, ell_a: i32, ell_b: i32) -> f64 {
        debug_assert!(
            self.normalized,
            "probability requested on an un-normalized table"
        );
        self.amplitude(ell_a, ell_b).norm_sqr()
    }

    /// Sorted iteration over stored entries.
    pub fn iter(&self) -> impl Iterator<Item = (&(i32, i32), &Complex64)> {
        self.entries.iter()
    }

    pub fn keys(&self) -> impl Iterator<Item = &(i32, i32)> {
        self.entries.keys()
    }

    /// Rescale so that Σ|amplitude|² = 1.
    pub fn normalize(mut self) -> Result<Self> {
        let norm = self.norm_sqr().sqrt();
        if norm == 0.0 {
            return Err(Error::DegenerateState { residual: 0.0 });
        }
        for amplitude in self.entries.values_mut() {
            *amplitude /= norm;
        }
        self.normalized = true;
        Ok(self)
    }

    /// Move every key (ℓ_A, ℓ_B) to (ℓ_A+Δ_A, ℓ_B+Δ_B); amplitudes unchanged.
    pub fn shift_oam(&self, delta_a: i32, delta_b: i32) -> Self {
        let entries = self
            .entries
            .iter()
            .map(|(&(a, b), &amp)| ((a + delta_a, b + delta_b), amp))
            .collect();
        OamAmplitudeTable {
            entries,
            normalized: self.normalized,
        }
    }

    /// Multiply every amplitude by exp(i(φ_A + φ_B)); only the sum of the
    /// two path phases is observable on the pair.
    pub fn apply_phase(&self, phi_a: f64, phi_b: f64) -> Self {
        let factor = Complex64::from_polar(1.0, phi_a + phi_b);
        let entries = self
            .entries
            .iter()
            .map(|(&key, &amp)| (key, factor * amp))
            .collect();
        OamAmplitudeTable {
            entries,
            normalized: self.normalized,
        }
    }

    /// Squared overlap |⟨target|state⟩|² with a normalized target.
    pub fn fidelity(&self, target: &TargetState) -> f64 {
        debug_assert!(
            self.normalized,
            "fidelity requested on an un-normalized table"
        );
        let overlap: Complex64 = target
            .terms()
            .iter()
            .map(|term| term.weight.conj() * self.amplitude(term.ell_a, term.ell_b))
            .sum();
        overlap.norm_sqr()
    }

    /// Project onto keys with both indices inside `subspace`, renormalize,
    /// then compute the fidelity. Zero if nothing survives the projection.
    pub fn subspace_fidelity(&self, target: &TargetState, subspace: &BTreeSet<i32>) -> Result<f64> {
        if subspace.is_empty() {
            return Err(Error::EmptySubspace);
        }
        let projected =
            OamAmplitudeTable::from_entries(self.entries.iter().filter_map(|(&(a, b), &amp)| {
                (subspace.contains(&a) && subspace.contains(&b)).then_some(((a, b), amp))
            }));
        match projected.normalize() {
            Ok(projected) => Ok(projected.fidelity(target)),
            Err(_) => Ok(0.0),
        }
    }

    /// Serialize to the on-disk JSON schema.
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&TableRepr::from(self)).expect("table serializes")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let repr: TableRepr = serde_json::from_str(text)?;
        let table = OamAmplitudeTable::from(repr);
        if table.normalized {
            let norm_sqr = table.norm_sqr();
            if (norm_sqr - 1.0).abs() > NORMALIZATION_TOL {
                return Err(Error::InvalidConfig(format!(
                    "table claims to be normalized but Σ|a|² = {norm_sqr}"
                )));
            }
        }
        Ok(table)
    }

    /// CSV rows `lA,lB,re,im,probability`, sorted by key. The probability
    /// column is the normalized share |a|²/Σ|a|².
    pub fn to_csv(&self) -> String {
        let norm = self.norm_sqr();
        let mut out = String::from("lA,lB,re,im,probability\n");
        for (&(a, b), amp) in &self.entries {
            let share = if norm == 0.0 {
                0.0
            } else {
                amp.norm_sqr() / norm
            };
            writeln!(out, "{a},{b},{},{},{share}", amp.re, amp.im).expect("string write");
        }
        out
    }

    pub fn from_csv(text: &str) -> Result<Self> {
        let mut entries = Vec::new();
        for (index, line) in text.lines().enumerate() {
            if index == 0 || line.trim().is_empty() {
                continue;
            }
            let fields: Vec<&str> = line.split(',').collect();
            if fields.len() < 4 {
                return Err(Error::InvalidConfig(format!("bad CSV row: {line}")));
            }
            let parse_err = |what: &str| Error::InvalidConfig(format!("bad CSV {what}: {line}"));
            let a: i32 = fields[0].trim().parse().map_err(|_| parse_err("lA"))?;
            let b: i32 = fields[1].trim().parse().map_err(|_| parse_err("lB"))?;
            let re: f64 = fields[2].trim().parse().map_err(|_| parse_err("re"))?;
            let im: f64 = fields[3].trim().parse().map_err(|_| parse_err("im"))?;
            entries.push(((a, b), Complex64::new(re, im)));
        }
        Ok(OamAmplitudeTable::from_entries(entries))
    }
}

/// Coherent weighted sum of component tables over the union of their keys,
/// renormalized at the end. Weights multiply the tables exactly as given.
///
/// Complete destructive interference (residual norm below
/// [`DEGENERATE_NORM_RATIO`] of the largest weighted component) is an error.
pub fn superpose(components: &[(OamAmplitudeTable, Complex64)]) -> Result<OamAmplitudeTable> {
    if components.is_empty() {
        return Err(Error::InvalidConfig(
            "superpose needs at least one component".into(),
        ));
    }
    let mut sum: BTreeMap<(i32, i32), Complex64> = BTreeMap::new();
    let mut largest = 0.0_f64;
    for (table, weight) in components {
        largest = largest.max(weight.norm() * table.norm_sqr().sqrt());
        for (&key, &amplitude) in &table.entries {
            *sum.entry(key).or_insert(Complex64::new(0.0, 0.0)) += weight * amplitude;
        }
    }
    let combined = OamAmplitudeTable::from_entries(sum);
    let residual = if largest == 0.0 {
        0.0
    } else {
        combined.norm_sqr().sqrt() / largest
    };
    if residual < DEGENERATE_NORM_RATIO {
        return Err(Error::DegenerateState { residual });
    }
    combined.normalize()
}

/// A named target state: weighted modes with Σ|weight|² = 1.
#[derive(Debug, Clone, PartialEq)]
pub struct TargetState {
    terms: Vec<TargetTerm>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TargetTerm {
    pub ell_a: i32,
    pub ell_b: i32,
    pub weight: Complex64,
}

impl TargetState {
    pub fn new(terms: Vec<(i32, i32, Complex64)>) -> Result<Self> {
        let mut seen = BTreeSet::new();
        for &(a, b, _) in &terms {
            if !seen.insert((a, b)) {
                return Err(Error::InvalidConfig(format!(
                    "duplicate target mode ({a}, {b})"
                )));
            }
        }
        let norm_sqr: f64 = terms.iter().map(|&(_, _, w)| w.norm_sqr()).sum();
        if (norm_sqr - 1.0).abs() > NORMALIZATION_TOL {
            return Err(Error::InvalidConfig(format!(
                "target weights must be normalized, Σ|w|² = {norm_sqr}"
            )));
        }
        let terms = terms
            .into_iter()
            .map(|(ell_a, ell_b, weight)| TargetTerm {
                ell_a,
                ell_b,
                weight,
            })
            .collect();
        Ok(TargetState { terms })
    }

    /// Equal-weight superposition 1/√d Σ |modes⟩.
    pub fn equal_weights(modes: &[(i32, i32)]) -> Result<Self> {
        let weight = Complex64::new(1.0 / (modes.len() as f64).sqrt(), 0.0);
        TargetState::new(modes.iter().map(|&(a, b)| (a, b, weight)).collect())
    }

    /// Like [`equal_weights`](Self::equal_weights) with per-mode signs.
    pub fn signed_equal_weights(modes: &[(i32, i32, f64)]) -> Result<Self> {
        let weight = 1.0 / (modes.len() as f64).sqrt();
        TargetState::new(
            modes
                .iter()
                .map(|&(a, b, sign)| (a, b, Complex64::new(sign * weight, 0.0)))
                .collect(),
        )
    }

    pub fn terms(&self) -> &[TargetTerm] {
        &self.terms
    }

    pub fn support(&self) -> impl Iterator<Item = (i32, i32)> + '_ {
        self.terms.iter().map(|t| (t.ell_a, t.ell_b))
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let repr: TargetRepr = serde_json::from_str(text)?;
        TargetState::new(
            repr.terms
                .into_iter()
                .map(|t| (t.l_a, t.l_b, Complex64::new(t.re, t.im)))
                .collect(),
        )
    }

    pub fn to_json(&self) -> String {
        let repr = TargetRepr {
            terms: self
                .terms
                .iter()
                .map(|t| EntryRepr {
                    l_a: t.ell_a,
                    l_b: t.ell_b,
                    re: t.weight.re,
                    im: t.weight.im,
                })
                .collect(),
        };
        serde_json::to_string_pretty(&repr).expect("target serializes")
    }
}

// ---- serde representations -------------------------------------------------

#[derive(Serialize, Deserialize)]
struct EntryRepr {
    #[serde(rename = "lA")]
    l_a: i32,
    #[serde(rename = "lB")]
    l_b: i32,
    re: f64,
    im: f64,
}

#[derive(Serialize, Deserialize)]
struct TableRepr {
    entries: Vec<EntryRepr>,
    normalized: bool,
}

#[derive(Serialize, Deserialize)]
struct TargetRepr {
    terms: Vec<EntryRepr>,
}

impl From<&OamAmplitudeTable> for TableRepr {
    fn from(table: &OamAmplitudeTable) -> Self {
        TableRepr {
            entries: table
                .entries
                .iter()
                .map(|(&(a, b), amp)| EntryRepr {
                    l_a: a,
                    l_b: b,
                    re: amp.re,
                    im: amp.im,
                })
                .collect(),
            normalized: table.normalized,
        }
    }
}

impl From<TableRepr> for OamAmplitudeTable {
    fn from(repr: TableRepr) -> Self {
        let mut table = OamAmplitudeTable::from_entries(
            repr.entries
                .into_iter()
                .map(|e| ((e.l_a, e.l_b), Complex64::new(e.re, e.im))),
        );
        table.normalized = repr.normalized;
        table
    }
}
