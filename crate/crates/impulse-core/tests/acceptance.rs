//! Acceptance suite: every built-in verification criterion must pass at its
//! pinned tolerance. One test per criterion; each prints its PASS/FAIL line.

use impulse_core::suite::{self, CriterionResult};

fn check(result: CriterionResult) {
    println!("{}", result.line());
    assert!(result.passed, "{}", result.line());
}

#[test]
fn criterion_01_closed_form_cdf_exact_values() {
    check(suite::criterion_closed_form_cdf());
}

#[test]
fn criterion_02_ensemble_ks_against_closed_form() {
    check(suite::criterion_ensemble_ks());
}

#[test]
fn criterion_03_operator_route_reaches_closed_form() {
    check(suite::criterion_operator_route());
}

#[test]
fn criterion_04_contraction_threshold_laws() {
    check(suite::criterion_contraction_thresholds());
}

#[test]
fn criterion_05_splitting_certificates_for_root_system() {
    check(suite::criterion_splitting_example());
}

#[test]
fn criterion_06_path_sum_oracle_matches_iterated_transfer() {
    check(suite::criterion_path_sum_oracle());
}

#[test]
fn criterion_07_state_marginal_convergence() {
    check(suite::criterion_state_marginal_convergence());
}

#[test]
fn criterion_08_reversed_chain_identities() {
    check(suite::criterion_reversed_chain_identities());
}

#[test]
fn criterion_09_geometric_times_equal_two_map_ifs() {
    check(suite::criterion_geometric_ifs_equivalence());
}

#[test]
fn criterion_10_lifted_stationary_fixed_point() {
    check(suite::criterion_lifted_fixed_point());
}

#[test]
fn criterion_11_synchronization_fractions() {
    check(suite::criterion_synchronization());
}

#[test]
fn criterion_12_non_markov_conditionals() {
    check(suite::criterion_non_markov_demo());
}
