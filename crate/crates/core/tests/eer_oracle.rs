mod common;

use antispoof::metrics::{eer, eer_interpolated, eer_rocch, EerMethod};
use common::{eer_oracle_suite, oracle_eer_hull, oracle_eer_interpolated, random_score_set, rng};

#[test]
fn both_methods_match_brute_force_on_random_sets() {
    eer_oracle_suite(1000, 1e-9).unwrap();
}

#[test]
fn oracles_agree_on_hand_cases() {
    // separable
    assert_eq!(oracle_eer_hull(&[2.0, 3.0], &[0.0, 1.0]), 0.0);
    assert_eq!(oracle_eer_interpolated(&[2.0, 3.0], &[0.0, 1.0]), 0.0);
    // fully reversed: the hull is the chance diagonal
    assert_eq!(oracle_eer_hull(&[0.0, 1.0], &[2.0, 3.0]), 0.5);
    // one interleaved pair
    assert_eq!(eer_rocch(&[1.0, 3.0], &[0.0, 2.0]).unwrap(), 0.25);
    assert_eq!(eer_interpolated(&[1.0, 3.0], &[0.0, 2.0]).unwrap(), 0.5);
}

#[test]
fn invariant_under_monotone_transforms() {
    let mut g = rng(8);
    for _ in 0..200 {
        let (genuine, spoof) = random_score_set(&mut g);
        for method in [EerMethod::Rocch, EerMethod::Interpolated] {
            let base = eer(&genuine, &spoof, method).unwrap();
            for f in [|x: f64| 2.0 * x + 5.0, |x: f64| x * x * x, |x: f64| (x / 4.0).exp()] {
                let g2: Vec<f64> = genuine.iter().map(|&x| f(x)).collect();
                let s2: Vec<f64> = spoof.iter().map(|&x| f(x)).collect();
                assert!((eer(&g2, &s2, method).unwrap() - base).abs() < 1e-12);
            }
        }
    }
}

#[test]
fn rocch_is_symmetric_under_label_and_sign_flip() {
    let mut g = rng(9);
    for _ in 0..300 {
        let (genuine, spoof) = random_score_set(&mut g);
        let neg = |v: &[f64]| v.iter().map(|x| -x).collect::<Vec<_>>();
        let a = eer_rocch(&genuine, &spoof).unwrap();
        let b = eer_rocch(&neg(&spoof), &neg(&genuine)).unwrap();
        assert!((a - b).abs() < 1e-12, "{a} vs {b}");
    }
}

#[test]
fn eer_stays_in_unit_interval() {
    let mut g = rng(10);
    for _ in 0..300 {
        let (genuine, spoof) = random_score_set(&mut g);
        for method in [EerMethod::Rocch, EerMethod::Interpolated] {
            let e = eer(&genuine, &spoof, method).unwrap();
            assert!((0.0..=1.0).contains(&e));
        }
    }
}
