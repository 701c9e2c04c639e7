mod common;

use common::{gradcheck_sweep, random_model_and_input, GRADCHECK_TOL};
use wavrx::model::Branches;
use wavrx::training::check_gradients;

#[test]
fn analytic_gradients_match_central_differences() {
    let (worst, all) = gradcheck_sweep(0..5);
    for (b, seed, drop, c) in &all {
        assert!(
            c.rel_err < GRADCHECK_TOL,
            "{b:?} seed {seed} dropout {drop}: {} rel err {} (max abs {})",
            c.name,
            c.rel_err,
            c.max_abs_diff
        );
    }
    assert!(worst < GRADCHECK_TOL);
}

#[test]
fn every_tensor_is_exercised() {
    let (model, rep) = random_model_and_input(Branches::Both, 7);
    let report = check_gradients(&model, &rep, 1, None, 1e-4).unwrap();
    assert_eq!(report.len(), 11);
    // with both branches active no tensor should have a vanishing gradient
    let (out, trace) = model.forward_traced(&rep, None).unwrap();
    let g = model.backward(&rep, &trace, out.logit).unwrap();
    for (name, t) in g.tensors() {
        assert!(t.iter().any(|v| *v != 0.0), "{name} gradient is identically zero");
    }
}

#[test]
fn unused_branch_gets_no_gradient() {
    let (model, rep) = random_model_and_input(Branches::Temporal, 3);
    let (out, trace) = model.forward_traced(&rep, None).unwrap();
    let g = model.backward(&rep, &trace, out.logit).unwrap();
    assert!(g.attn_freq.w.iter().all(|v| *v == 0.0));
    let (model, rep) = random_model_and_input(Branches::Dynamics, 3);
    let (out, trace) = model.forward_traced(&rep, None).unwrap();
    let g = model.backward(&rep, &trace, out.logit).unwrap();
    assert!(g.attn_time.w.iter().all(|v| *v == 0.0));
}

#[test]
fn pruned_weights_get_exactly_zero_gradient() {
    let mut cfg = common::gradcheck_config(Branches::Both, 2);
    cfg.prune_pct = 0.5;
    let model = wavrx::model::Model::new(cfg).unwrap();
    let (_, rep) = random_model_and_input(Branches::Both, 2);
    let (out, trace) = model.forward_traced(&rep, None).unwrap();
    let g = model.backward(&rep, &trace, 1.0 + out.logit.abs()).unwrap();
    for (i, m) in model.params.prune_mask.iter().enumerate() {
        if *m == 0.0 {
            assert_eq!(g.out.w[(0, i)], 0.0);
        }
    }
    assert_eq!(model.params.prune_mask.iter().filter(|m| **m == 0.0).count(), 8);
}
