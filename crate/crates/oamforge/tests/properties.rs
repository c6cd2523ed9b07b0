//! Property tests over the module invariants.

use num_complex::Complex64;
use proptest::prelude::*;
use std::collections::BTreeSet;

use oamforge::config::{CrystalConfig, WaistConfig};
use oamforge::lg::{eval_lg, t_coeff, LgMode, TransverseMomentum};
use oamforge::quad::{GaussLegendre, QuadratureSettings};
use oamforge::spdc::{amplitude, AmplitudeRequest};
use oamforge::state::{superpose, OamAmplitudeTable, TargetState};

fn sparse_entries() -> impl Strategy<Value = Vec<((i32, i32), Complex64)>> {
    proptest::collection::vec(
        ((-8..=8i32, -8..=8i32), (-1.0..1.0f64, -1.0..1.0f64))
            .prop_map(|(key, (re, im))| (key, Complex64::new(re, im))),
        1..8,
    )
}

proptest! {
    #[test]
    fn lg_negating_ell_conjugates(
        mag in 0.0..0.3f64,
        azimuth in -3.1..3.1f64,
        ell in -4..=4i32,
        p in 0..=2u32,
    ) {
        let mode_plus = LgMode::new(p, ell, 20.0).unwrap();
        let mode_minus = LgMode::new(p, -ell, 20.0).unwrap();
        let q = TransverseMomentum::from_polar(mag, azimuth);
        let plus = eval_lg(q, &mode_plus);
        let minus = eval_lg(q, &mode_minus);
        prop_assert!((plus - minus.conj()).norm() <= 1e-12 * plus.norm().max(1e-300));
    }

    #[test]
    fn t_coeff_magnitude_tracks_waist_power(ell in -6..=6i32, scale in 1.1..4.0f64) {
        let base = t_coeff(0, 0, ell, 12.0).unwrap().norm();
        let scaled = t_coeff(0, 0, ell, 12.0 * scale).unwrap().norm();
        let expected = scale.powi(ell.abs() + 1);
        prop_assert!((scaled / base / expected - 1.0).abs() < 1e-10);
    }

    #[test]
    fn quadrature_symmetric_conjugate_integrands_are_real(
        a in 0.5..50.0f64,
        b in 0.01..1.0f64,
    ) {
        // f(−z) = conj(f(z)) ⇒ the paired rule returns an exactly real value.
        let rule = GaussLegendre::cached(64);
        let value = rule.integrate_symmetric(100.0, |z| {
            Complex64::new(1.0, 0.0) / Complex64::new(a, -b * z)
        });
        prop_assert_eq!(value.im, 0.0);
    }

    #[test]
    fn shift_and_phase_preserve_probabilities(
        entries in sparse_entries(),
        da in -6..=6i32,
        db in -6..=6i32,
        phi_a in -3.2..3.2f64,
        phi_b in -3.2..3.2f64,
    ) {
        let Ok(table) = OamAmplitudeTable::from_entries(entries).normalize() else {
            return Ok(());
        };
        let moved = table.shift_oam(da, db).apply_phase(phi_a, phi_b);
        for (&(a, b), amp) in table.iter() {
            let p = moved.probability(a + da, b + db);
            prop_assert!((p - amp.norm_sqr()).abs() < 1e-12);
        }
        // Round trip restores the original table exactly up to the phase.
        let back = moved.shift_oam(-da, -db);
        for (&(a, b), amp) in table.iter() {
            prop_assert!((back.amplitude(a, b).norm() - amp.norm()).abs() < 1e-12);
        }
    }

    #[test]
    fn global_phase_leaves_fidelity_invariant(
        entries in sparse_entries(),
        phase in -3.2..3.2f64,
    ) {
        let Ok(state) = OamAmplitudeTable::from_entries(entries).normalize() else {
            return Ok(());
        };
        let keys: Vec<(i32, i32)> = state.keys().copied().take(3).collect();
        let weight = Complex64::new(1.0 / (keys.len() as f64).sqrt(), 0.0);
        let target = TargetState::new(
            keys.iter().map(|&(a, b)| (a, b, weight)).collect(),
        ).unwrap();
        let rotated_target = TargetState::new(
            keys.iter()
                .map(|&(a, b)| (a, b, weight * Complex64::from_polar(1.0, phase)))
                .collect(),
        ).unwrap();
        let rotated_state = state.apply_phase(phase, 0.0);
        let fidelity = state.fidelity(&target);
        prop_assert!((0.0..=1.0 + 1e-12).contains(&fidelity));
        prop_assert!((rotated_state.fidelity(&rotated_target) - fidelity).abs() < 1e-12);
    }

    #[test]
    fn subspace_fidelity_never_below_full(
        entries in sparse_entries(),
    ) {
        let Ok(state) = OamAmplitudeTable::from_entries(entries).normalize() else {
            return Ok(());
        };
        let (a0, b0) = *state.keys().next().unwrap();
        let target = TargetState::new(vec![(a0, b0, Complex64::new(1.0, 0.0))]).unwrap();
        let subspace: BTreeSet<i32> = [a0, b0].into_iter().collect();
        let sub = state.subspace_fidelity(&target, &subspace).unwrap();
        prop_assert!(sub + 1e-12 >= state.fidelity(&target));
    }

    #[test]
    fn single_component_superposition_is_normalization(
        entries in sparse_entries(),
        w_re in 0.2..3.0f64,
        w_im in -2.0..2.0f64,
    ) {
        let table = OamAmplitudeTable::from_entries(entries);
        if table.is_empty() {
            return Ok(());
        }
        let combined = superpose(&[(table.clone(), Complex64::new(w_re, w_im))]).unwrap();
        prop_assert!((combined.norm_sqr() - 1.0).abs() < 1e-12);
        // Probabilities match the plain normalization of the raw table.
        let normalized = table.normalize().unwrap();
        for (&(a, b), amp) in normalized.iter() {
            prop_assert!(
                (combined.amplitude(a, b).norm() - amp.norm()).abs() < 1e-12
            );
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn amplitude_conservation_and_symmetries(
        ls in -4..=4i32,
        li in -4..=4i32,
        wp in 10.0..80.0f64,
        wc in 10.0..80.0f64,
    ) {
        let crystal = CrystalConfig::default();
        let waists = WaistConfig::symmetric(wp, wc);
        let quad = QuadratureSettings::default();

        // Conservation: a mismatched pump index yields exactly zero.
        let off = amplitude(
            &AmplitudeRequest::new(ls + li + 1, ls, li),
            &crystal,
            &waists,
            &quad,
        ).unwrap();
        prop_assert_eq!(off, Complex64::new(0.0, 0.0));

        let value = amplitude(
            &AmplitudeRequest::new(ls + li, ls, li),
            &crystal,
            &waists,
            &quad,
        ).unwrap();

        // Degenerate photons: exchanging signal and idler changes nothing.
        let swapped = amplitude(
            &AmplitudeRequest::new(ls + li, li, ls),
            &crystal,
            &waists,
            &quad,
        ).unwrap();
        prop_assert!((value - swapped).norm() <= 1e-12 * value.norm().max(1e-300));

        // Mirroring every index conjugates the amplitude exactly.
        let mirrored = amplitude(
            &AmplitudeRequest::new(-ls - li, -ls, -li),
            &crystal,
            &waists,
            &quad,
        ).unwrap();
        prop_assert_eq!(value, mirrored.conj());
    }
}

// Deterministic (non-proptest) invariants that need real quadrature.

#[test]
fn optimizer_reaches_the_bell_pair_optimum() {
    use oamforge::analysis::{optimize_waists, waist_scan, ScanGrid, WaistBounds};
    use oamforge::setup::{PumpSpec, SetupPlan, Stage};
    use oamforge::spdc::Window;

    let crystal = CrystalConfig::default();
    let quad = QuadratureSettings::default();
    let plan = SetupPlan::new(vec![Stage::Crystal {
        pump: PumpSpec::single(1),
        power: 1.0,
    }])
    .unwrap();
    let target = TargetState::equal_weights(&[(0, 1), (1, 0)]).unwrap();
    let bounds = WaistBounds {
        pump: (5.0, 100.0),
        collection: (5.0, 100.0),
    };

    let best = optimize_waists(&target, &plan, bounds, &crystal, Window::default(), &quad).unwrap();
    assert!(
        best.fidelity >= 0.98,
        "optimized fidelity {}",
        best.fidelity
    );

    // Refinement can only improve on the coarse pass.
    let coarse_grid = ScanGrid::linspace((5.0, 100.0), (5.0, 100.0), 25).unwrap();
    let coarse = waist_scan(
        &target,
        &plan,
        &coarse_grid,
        &crystal,
        Window::default(),
        &quad,
    )
    .best()
    .unwrap();
    assert!(best.fidelity >= coarse.fidelity);
}

#[test]
fn mirrored_pump_scans_are_identical() {
    use oamforge::analysis::{waist_scan, ScanGrid};
    use oamforge::setup::{PumpSpec, SetupPlan, Stage};
    use oamforge::spdc::Window;

    let crystal = CrystalConfig::default();
    let quad = QuadratureSettings::default();
    let grid = ScanGrid::new(vec![10.0, 20.0, 40.0], vec![15.0, 30.0]).unwrap();

    let plus_plan = SetupPlan::new(vec![Stage::Crystal {
        pump: PumpSpec::single(1),
        power: 1.0,
    }])
    .unwrap();
    let minus_plan = SetupPlan::new(vec![Stage::Crystal {
        pump: PumpSpec::single(-1),
        power: 1.0,
    }])
    .unwrap();
    let plus_target = TargetState::equal_weights(&[(0, 1), (1, 0)]).unwrap();
    let minus_target = TargetState::equal_weights(&[(-1, 0), (0, -1)]).unwrap();

    let plus = waist_scan(
        &plus_target,
        &plus_plan,
        &grid,
        &crystal,
        Window::symmetric(8),
        &quad,
    );
    let minus = waist_scan(
        &minus_target,
        &minus_plan,
        &grid,
        &crystal,
        Window::symmetric(8),
        &quad,
    );
    assert_eq!(plus.rows.len(), minus.rows.len());
    for (a, b) in plus.rows.iter().zip(&minus.rows) {
        assert!((a.fidelity - b.fidelity).abs() < 1e-12);
    }
}

#[test]
fn dimensionality_scales_with_crystal_count() {
    use oamforge::setup::{compile, PumpSpec, SetupPlan, Stage};
    use oamforge::spdc::Window;

    let crystal = CrystalConfig::default();
    let waists = WaistConfig::symmetric(15.0, 25.0);
    let quad = QuadratureSettings::default();
    // Four Gaussian-pumped crystals, shifts chosen so every copy of |0,0⟩
    // lands on a distinct pair.
    let plan = SetupPlan::new(vec![
        Stage::Crystal {
            pump: PumpSpec::single(0),
            power: 1.0,
        },
        Stage::Shift {
            delta_a: -6,
            delta_b: -6,
        },
        Stage::Crystal {
            pump: PumpSpec::single(0),
            power: 1.0,
        },
        Stage::Shift {
            delta_a: 9,
            delta_b: 9,
        },
        Stage::Crystal {
            pump: PumpSpec::single(0),
            power: 1.0,
        },
        Stage::Shift {
            delta_a: 3,
            delta_b: 3,
        },
        Stage::Crystal {
            pump: PumpSpec::single(0),
            power: 1.0,
        },
        Stage::Shift {
            delta_a: 0,
            delta_b: 0,
        },
    ])
    .unwrap();
    let state = compile(&plan, &crystal, &waists, Window::symmetric(8), &quad).unwrap();
    // Cumulative downstream shifts per crystal: +6, +12, +3, 0.
    let targets = [(6, 6), (12, 12), (3, 3), (0, 0)];
    let reference = state.probability(0, 0);
    let mut captured = 0.0;
    for (a, b) in targets {
        let p = state.probability(a, b);
        assert!((p - reference).abs() < 1e-9 * reference);
        assert!((p - 0.25).abs() < 0.02);
        captured += p;
    }
    assert!(captured > 0.95, "four modes carry {captured}");
}

#[test]
fn optimizer_rejects_bad_bounds() {
    use oamforge::analysis::{optimize_waists, WaistBounds};
    use oamforge::setup::{PumpSpec, SetupPlan, Stage};
    use oamforge::spdc::Window;

    let plan = SetupPlan::new(vec![Stage::Crystal {
        pump: PumpSpec::single(0),
        power: 1.0,
    }])
    .unwrap();
    let target = TargetState::equal_weights(&[(0, 0)]).unwrap();
    let bounds = WaistBounds {
        pump: (50.0, 5.0),
        collection: (5.0, 100.0),
    };
    assert!(optimize_waists(
        &target,
        &plan,
        bounds,
        &CrystalConfig::default(),
        Window::symmetric(4),
        &QuadratureSettings::default()
    )
    .is_err());
}
