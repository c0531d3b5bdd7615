//! Acceptance suite: one test per built-in check, each printing its own
//! pass/fail line. Run with `cargo test --test acceptance -- --nocapture`
//! to see the lines; the `sedkit selftest` subcommand prints the same
//! checks without cargo.

use sedkit_core::selftest;

fn assert_check(result: selftest::CheckResult) {
    println!("{}", result.line());
    assert!(result.passed, "{}", result.line());
}

#[test]
fn fdy_gradient_suite_matches_finite_differences() {
    assert_check(selftest::fdy_gradient_suite());
}

#[test]
fn fdy_degeneracy_oracles_hold() {
    assert_check(selftest::fdy_degeneracies());
}

#[test]
fn filter_augment_sampling_properties_hold() {
    assert_check(selftest::filter_augment_properties());
}

#[test]
fn frontend_and_model_frame_arithmetic() {
    assert_check(selftest::frontend_arithmetic());
}

#[test]
fn psds_evaluator_reproduces_hand_fixtures() {
    assert_check(selftest::psds_oracle());
}

#[test]
fn postprocessing_rules_hold() {
    assert_check(selftest::postprocessing_rules());
}

#[test]
fn pipeline_is_deterministic_and_ensemble_is_exact() {
    assert_check(selftest::determinism());
}

#[test]
fn containers_round_trip_bitwise_with_typed_errors() {
    assert_check(selftest::serialization());
}
