//! End-to-end acceptance checks at the default desk-scale configuration
//! (2-torus, 8×8 lattice, 400 time samples, seed 7).
//!
//! Each test covers one acceptance criterion and emits a single visible
//! `acceptance N: PASS/FAIL` line.  Suites are computed once and shared.

use std::collections::BTreeMap;
use std::io::Write;
use std::sync::{Mutex, OnceLock};

use workbench::config::RunConfig;
use workbench::report::CheckRecord;
use workbench::suites::{run_suite, run_suites};

/// Writes one line straight to stdout so it stays visible under the test
/// harness's output capture.
fn emit(line: &str) {
    let mut out = std::io::stdout().lock();
    let _ = out.write_all(line.as_bytes());
    let _ = out.write_all(b"\n");
    let _ = out.flush();
}

/// Runs a suite at the default configuration, once per process.
fn records(suite: &str) -> Vec<CheckRecord> {
    static CACHE: OnceLock<Mutex<BTreeMap<String, Vec<CheckRecord>>>> = OnceLock::new();
    let cache = CACHE.get_or_init(|| Mutex::new(BTreeMap::new()));
    let mut map = cache.lock().expect("suite cache lock");
    map.entry(suite.to_string())
        .or_insert_with(|| {
            run_suite(suite, &RunConfig::default(), false)
                .unwrap_or_else(|e| panic!("suite '{suite}' failed to run: {e}"))
        })
        .clone()
}

/// Asserts that the named checks (all of the suite when `names` is empty)
/// passed, and prints the criterion verdict.
fn criterion(number: usize, label: &str, suite: &str, names: &[&str]) {
    let recs = records(suite);
    let selected: Vec<&CheckRecord> = if names.is_empty() {
        recs.iter().collect()
    } else {
        names
            .iter()
            .map(|name| {
                recs.iter()
                    .find(|r| r.name == *name)
                    .unwrap_or_else(|| panic!("missing check {suite}/{name}"))
            })
            .collect()
    };
    let failures: Vec<String> = selected
        .iter()
        .filter(|r| !r.passed)
        .map(|r| {
            format!(
                "{}/{}: residual {:.3e} > tolerance {:.3e}",
                r.suite, r.name, r.residual, r.tolerance
            )
        })
        .collect();
    if failures.is_empty() {
        emit(&format!("acceptance {number}: PASS — {label}"));
    } else {
        emit(&format!(
            "acceptance {number}: FAIL — {label}: {}",
            failures.join("; ")
        ));
        panic!("acceptance criterion {number} failed: {}", failures.join("; "));
    }
}

#[test]
fn acceptance_01_discrete_hodge_suite() {
    criterion(
        1,
        "d∘d = 0 exactly, adjointness ≤ 1e-12, Betti kernel dimensions 1/2/1",
        "geometry",
        &[
            "differential_squares_to_zero",
            "codifferential_adjoint_to_differential",
            "laplacian_kernels_have_betti_dimensions",
        ],
    );
}

#[test]
fn acceptance_02_bridge_identity() {
    criterion(
        2,
        "⟨Gf, g⟩ = σ(Ψ₀^{Gf}, Ψ₀^{Gg}) ≤ 1e-4 over 200 pairs, error ratio ≥ 4 under sample doubling",
        "propagation",
        &[
            "bridge_identity_links_pairing_and_symplectic_form",
            "bridge_quadrature_error_falls_under_sample_doubling",
        ],
    );
}

#[test]
fn acceptance_03_one_particle_structure() {
    criterion(
        3,
        "κ(□f) = 0, co-closed Krein positivity, exact-form orthogonality, G = Im⟨κ·,κ·⟩ + G_Z, G_Z = σ_Z",
        "one_particle",
        &[
            "kappa_annihilates_wave_operator_images",
            "zero_mode_map_annihilates_wave_operator_images",
            "krein_norm_is_positive_on_co_closed_forms",
            "exact_forms_are_krein_orthogonal",
            "krein_and_zero_mode_parts_decompose_the_propagator",
            "zero_mode_form_matches_the_kernel_symplectic_form",
        ],
    );
}

#[test]
fn acceptance_04_energy_suite() {
    criterion(
        4,
        "co-closed energy positivity, Hτ = i∂ₜτ ≤ 1e-6, zero-mode metric = plain Gram ≤ 1e-10",
        "one_particle",
        &[
            "energy_is_positive_on_co_closed_forms",
            "energy_generates_time_translation",
            "zero_mode_metric_is_the_plain_gram",
        ],
    );
}

#[test]
fn acceptance_05_positive_frequency() {
    criterion(
        5,
        "negative-frequency mass of t ↦ ⟨κf, e^{iHt}κg⟩ ≤ 1e-6 over 50 pairs",
        "frequency",
        &["two_point_functions_are_positive_frequency"],
    );
}

#[test]
fn acceptance_06_representation_suite() {
    criterion(
        6,
        "CCR ≤ 1e-6, zero-mode CCR ≤ 1e-8, ideal annihilation ≤ 1e-4, Gupta–Bleuler condition ≤ 1e-5, observable Gram PSD, Wick ≤ 1e-8",
        "fock",
        &[
            "field_commutators_match_the_propagator",
            "zero_mode_commutators_match_the_kernel_form",
            "ideal_generators_vanish_in_operator_norm",
            "gauge_generators_vanish_between_observable_states",
            "observable_state_gram_is_positive",
            "four_point_functions_factorize_by_wick",
        ],
    );
}

#[test]
fn acceptance_07_algebra_suite() {
    criterion(
        7,
        "normal form idempotent/confluent on 10³ words, gauge composition/transport, time-slice ≤ 1e-4, separation ≥ 10³",
        "algebra",
        &[
            "normal_form_is_idempotent_and_confluent",
            "gauge_transforms_compose_additively",
            "gauge_transforms_transport_ideal_generators",
            "time_slice_reduction_preserves_represented_fields",
            "gauge_ideal_is_numerically_null",
            "observables_separate_from_the_ideal",
        ],
    );
}

#[test]
fn acceptance_08_gauge_parameter_suite() {
    criterion(
        8,
        "ξ ∈ {0.5, 1, 2}: ξ=1 identities exact, intertwining ≤ 1e-4, composition ≤ 1e-4, twisted commutator ≤ 1e-6, L-defect ≤ 1e-4, RK4 ratio 16±25%",
        "gauge_param",
        &[],
    );
}

#[test]
fn acceptance_09_scalar_sector_compatibility() {
    criterion(
        9,
        "all scalar/vector two-point compatibility conditions ≤ 1e-4 on the mean-zero/harmonic-free corpus",
        "brst",
        &[],
    );
}

#[test]
fn acceptance_10_harmonic_duals() {
    criterion(
        10,
        "⟨F_y, f⟩ = σ_Z(𝔍y, νf) ≤ 1e-5 over 30 forms, F_y harmonic and static ≤ 1e-10",
        "one_particle",
        &[
            "harmonic_duals_realize_the_zero_mode_pairing",
            "harmonic_duals_are_harmonic_and_static",
        ],
    );
}

#[test]
fn acceptance_11_deterministic_reports() {
    let config = RunConfig {
        suites: vec![
            "geometry".to_string(),
            "one_particle".to_string(),
            "frequency".to_string(),
        ],
        ..RunConfig::default()
    };
    let serial = run_suites(&config, &[], 1, false).expect("serial run");
    let parallel = run_suites(&config, &[], 4, false).expect("parallel run");
    if serial.to_json() == parallel.to_json() && serial.all_passed() {
        emit("acceptance 11: PASS — byte-identical reports for identical (config, seed) across --jobs");
    } else {
        emit("acceptance 11: FAIL — reports differ across --jobs settings or checks failed");
        assert_eq!(serial.to_json(), parallel.to_json());
        assert!(serial.all_passed());
    }
}
