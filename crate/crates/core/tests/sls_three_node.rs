mod common;

use common::*;
use locality::graph::{Graph, StructurePattern};
use locality::sls::{
    closed_loops_of, implementation_realization_sf, of_structured_implementation, recover_controller_sf,
    Controller, LtiMap, OutputFeedbackClosedLoop, Plant,
};
use locality::structure::{check_realization_structure, is_tf_structured};

fn path3() -> StructurePattern {
    StructurePattern::scalar(Graph::path(3).unwrap())
}

#[test]
fn controller_is_not_tf_structured_but_closed_loops_are() {
    assert!(!is_tf_structured(&three_node_k(), &path3()).unwrap());
    assert!(is_tf_structured(&three_node_phi_u(), &path3()).unwrap());
    assert!(is_tf_structured(&three_node_phi_x(), &path3()).unwrap());
}

#[test]
fn closing_the_loop_reproduces_printed_maps() {
    let cl = closed_loops_of(&Plant::integrators(3), &Controller::Rational(three_node_k())).unwrap();
    for s in [c(1.0, 0.0), c(2.0, 1.0)] {
        assert!(cmax(&(cl.phi_x.eval(s).unwrap() - three_node_phi_x().eval(s).unwrap())) < 1e-8);
        assert!(cmax(&(cl.phi_u.eval(s).unwrap() - three_node_phi_u().eval(s).unwrap())) < 1e-8);
    }
}

#[test]
fn recovery_matches_controller() {
    let k = recover_controller_sf(&three_node_pair()).unwrap();
    assert!(matches!(k, Controller::Rational(_)));
    for s in [c(1.0, 0.0), c(0.7, -1.3), c(2.0, 2.0)] {
        assert!(cmax(&(k.eval(s).unwrap() - three_node_k().eval(s).unwrap())) < 1e-7);
    }
}

#[test]
fn state_feedback_implementation_is_structured() {
    let ss = implementation_realization_sf(&three_node_pair(), 1e-8).unwrap();
    let w = check_realization_structure(&ss, &path3()).unwrap();
    assert!(w.structured);
    let s = c(2.0, 0.0);
    assert!(cmax(&(ss.evaluate(s).unwrap() - three_node_k().eval(s).unwrap())) < 1e-6);
}

#[test]
fn output_feedback_embedding_is_structured() {
    let phi_u = three_node_phi_u();
    let cl4 = OutputFeedbackClosedLoop {
        phi_xx: LtiMap::Rational(three_node_phi_x()),
        phi_xy: LtiMap::Rational(phi_u.clone()),
        phi_ux: LtiMap::Rational(phi_u.clone()),
        phi_uy: LtiMap::Rational(phi_u.times_s()),
    };
    let ss = of_structured_implementation(&cl4, &path3(), 1e-8).unwrap();
    assert!(check_realization_structure(&ss, &path3()).unwrap().structured);
    let s = c(1.0, 1.0);
    assert!(cmax(&(ss.evaluate(s).unwrap() - three_node_k().eval(s).unwrap())) < 1e-6);
}
