//! Engine gradients against central finite differences.

mod common;

use common::{FIRST_ORDER_TOL, SECOND_ORDER_TOL};

#[test]
fn op_compositions_match_central_differences() {
    let errors = common::composition_errors();
    assert!(errors.len() >= 12);
    for (name, e) in errors {
        assert!(e < FIRST_ORDER_TOL, "{name}: relative error {e}");
    }
}

#[test]
fn random_mlp_critics_first_order() {
    for (k, (params, inputs)) in common::critic_first_order_errors().into_iter().enumerate() {
        assert!(params < FIRST_ORDER_TOL, "critic {k}: relative error {params}");
        assert!(inputs < FIRST_ORDER_TOL, "critic {k} input: {inputs}");
    }
}

#[test]
fn gradient_penalty_second_order() {
    for (k, e) in common::gp_second_order_errors().into_iter().enumerate() {
        assert!(e < SECOND_ORDER_TOL, "critic {k}: GP relative error {e}");
    }
}
