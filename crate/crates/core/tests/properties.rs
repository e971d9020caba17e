mod common;

use common::props;

const CASES: u32 = 1000;

#[test]
fn pretty_printed_programs_reparse_identically() {
    props::pretty_printed_programs_reparse_identically(CASES).unwrap();
}

#[test]
fn parse_never_panics_on_arbitrary_text() {
    props::parse_never_panics_on_arbitrary_text(CASES).unwrap();
}

#[test]
fn parse_never_panics_on_mutated_programs() {
    props::parse_never_panics_on_mutated_programs(CASES).unwrap();
}

#[test]
fn flat_machine_agrees_with_hierarchy() {
    props::flat_machine_agrees_with_hierarchy(CASES).unwrap();
}

#[test]
fn base_states_count_primitive_leaves() {
    props::base_states_count_primitive_leaves(CASES).unwrap();
}

#[test]
fn translation_is_deterministic() {
    props::translation_is_deterministic(CASES).unwrap();
}

#[test]
fn guard_sat_agrees_with_dense_sampling() {
    props::guard_sat_agrees_with_dense_sampling(CASES).unwrap();
}

#[test]
fn widening_support_preserves_satisfiability() {
    props::widening_support_preserves_satisfiability(CASES).unwrap();
}

#[test]
fn observed_guards_are_exact() {
    props::observed_guards_are_exact(CASES).unwrap();
}

#[test]
fn pruned_states_carry_observed_labels() {
    props::pruned_states_carry_observed_labels(CASES).unwrap();
}

#[test]
fn matches_persist_for_shorter_windows() {
    props::matches_persist_for_shorter_windows(CASES).unwrap();
}

#[test]
fn verdict_ignores_object_order() {
    props::verdict_ignores_object_order(CASES).unwrap();
}

#[test]
fn failed_queries_check_every_window() {
    props::failed_queries_check_every_window(CASES).unwrap();
}

#[test]
fn trace_json_round_trip() {
    props::trace_json_round_trip(CASES).unwrap();
}

#[test]
fn generated_traces_match_their_program() {
    props::generated_traces_match_their_program(CASES).unwrap();
}

#[test]
fn generation_is_deterministic() {
    props::generation_is_deterministic(CASES).unwrap();
}
