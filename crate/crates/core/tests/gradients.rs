mod common;

use antispoof::model::Activation;
use common::{check_model3, check_ops, gradient_suite};

const TOL: f64 = 1e-4;

#[test]
fn every_op_matches_central_differences() {
    for seed in 100..110 {
        for (name, e) in check_ops(seed) {
            assert!(e < TOL, "{name} seed {seed}: relative error {e:.3e}");
        }
    }
}

#[test]
fn relu_and_elu_variants_backpropagate() {
    for (seed, act) in [(300, Activation::Relu), (301, Activation::Elu { alpha: 1.0 })] {
        let e = check_model3(seed, act);
        assert!(e < TOL, "{act:?} seed {seed}: relative error {e:.3e}");
    }
}

#[test]
fn ops_and_model3_over_twenty_seeds() {
    gradient_suite(20, TOL).unwrap();
}
