mod common;

use antispoof::nn::AdamHyper;
use common::{adam_closed_form, adam_run, adam_suite, early_stopping_suite, overfit_two_samples};

#[test]
fn adam_matches_closed_form() {
    adam_suite(1e-12).unwrap();
}

#[test]
fn adam_first_step_has_size_lr_times_g_over_g_plus_eps() {
    let hyper = AdamHyper::default();
    for g in [1e-3, 0.05, 0.1, 1.0, 40.0] {
        let moved = 1.0 - adam_run(1.0, &[g], &hyper);
        assert!((moved - hyper.learning_rate * g / (g + 0.1)).abs() < 1e-15);
        assert_eq!(adam_closed_form(1.0, g, 1, &hyper), 1.0 - hyper.learning_rate * g / (g + 0.1));
    }
}

#[test]
fn early_stopping_semantics() {
    early_stopping_suite().unwrap();
}

#[test]
fn model3_overfits_two_samples() {
    let (step, loss) = overfit_two_samples(3e-3, 500, 0.01);
    assert!(step.is_some(), "loss still {loss} after 500 steps");
}

fn swap_output_units(net: &mut antispoof::Network) {
    let w = net.param_mut("fc2.weight").unwrap();
    for row in w.data_mut().chunks_mut(2) {
        row.swap(0, 1);
    }
    net.param_mut("fc2.bias").unwrap().data_mut().swap(0, 1);
}

#[test]
fn label_flipped_training_mirrors_the_model() {
    use antispoof::corpus::Label;
    use antispoof::features::Spectrogram;
    use antispoof::model::model3_default;
    use antispoof::train::{train, TrainConfig};
    use antispoof::{LabeledExample, Network};
    use rand::Rng as _;

    let mut g = common::rng(21);
    let data: Vec<LabeledExample> = (0..8)
        .map(|i| {
            let label = if i % 3 == 0 { Label::Genuine } else { Label::Spoof };
            let splits = (0..2)
                .map(|_| {
                    Spectrogram::new((0..9 * 12).map(|_| g.random_range(-1.0..1.0)).collect(), 9, 12, 0.01).unwrap()
                })
                .collect();
            LabeledExample::new(format!("u{i}"), splits, label).unwrap()
        })
        .collect();
    let flipped: Vec<LabeledExample> =
        data.iter().map(|e| LabeledExample { label: e.label.flipped(), ..e.clone() }).collect();

    let net = Network::build(model3_default().with_input(9, 12), 5).unwrap();
    let mut mirror = net.clone();
    swap_output_units(&mut mirror);
    let cfg = TrainConfig {
        batch_size: 3,
        max_epochs: 4,
        patience: 4,
        adam: AdamHyper { learning_rate: 3e-3, ..AdamHyper::default() },
        seed: 2,
        checkpoint: None,
    };
    let a = train(net, &data, &data, &cfg).unwrap();
    let b = train(mirror, &flipped, &flipped, &cfg).unwrap();
    for (la, lb) in a.logs.iter().zip(&b.logs) {
        assert_eq!((la.train_loss, la.dev_loss), (lb.train_loss, lb.dev_loss));
    }
    let x = antispoof::train::assemble_batch(&data, &[antispoof::train::SampleRef { example: 0, split: 1 }]).unwrap().0;
    let (ya, yb) = (a.best.infer(&x).unwrap(), b.best.infer(&x).unwrap());
    assert_eq!(ya.data(), &[yb.data()[1], yb.data()[0]]);
}
