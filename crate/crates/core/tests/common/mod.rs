//! Oracles and generators shared by the integration suites.
#![allow(dead_code)]

use antispoof::model::{model3_default, Activation, Network};
use antispoof::nn::{
    conv2d, conv2d_backward, dropout, dropout_backward, elu, elu_backward, linear, linear_backward, maxpool2d,
    maxpool2d_backward, mfm, mfm_backward, relative_error, relu, relu_backward, softmax_cross_entropy, Padding,
    PoolSpec, Rng, Tensor,
};
use rand::{Rng as _, SeedableRng};

pub fn rng(seed: u64) -> Rng {
    Rng::seed_from_u64(seed)
}

pub fn uniform(shape: &[usize], rng: &mut Rng) -> Tensor<f64> {
    let n = shape.iter().product();
    Tensor::new(shape.to_vec(), (0..n).map(|_| rng.random_range(-1.0..1.0)).collect()).unwrap()
}

/// Values bounded away from zero so pointwise kinks are never straddled.
pub fn away_from_zero(shape: &[usize], rng: &mut Rng) -> Tensor<f64> {
    let n = shape.iter().product();
    let data = (0..n)
        .map(|_| {
            let m: f64 = rng.random_range(0.05..1.0);
            if rng.random::<bool>() {
                m
            } else {
                -m
            }
        })
        .collect();
    Tensor::new(shape.to_vec(), data).unwrap()
}

fn weighted_sum(y: &Tensor<f64>, r: &Tensor<f64>) -> f64 {
    y.data().iter().zip(r.data()).map(|(a, b)| a * b).sum()
}

/// Central-difference step for the checks below.
pub const STEP: f64 = 1e-5;

/// Raised when a probe straddles a non-differentiable point (a max or a
/// rectifier switching branch), where no gradient exists to compare.
#[derive(Debug)]
pub struct Kink;

/// Worst relative error between the analytic gradient and central
/// differences, coordinate by coordinate. Each coordinate is also probed
/// at half the step: on a smooth piece both estimates agree to O(h²), so a
/// disagreement means the probe crossed a kink and the configuration is
/// rejected instead of scored.
pub fn checked_grad(
    f: impl Fn(&Tensor<f64>) -> antispoof::Result<(f64, Tensor<f64>)>,
    x: &Tensor<f64>,
    h: f64,
) -> Result<f64, Kink> {
    let (_, analytic) = f(x).unwrap();
    assert_eq!(analytic.shape(), x.shape(), "gradient shape");
    let mut probe = x.clone();
    let mut central = |i: usize, step: f64| {
        let orig = x.data()[i];
        probe.data_mut()[i] = orig + step;
        let up = f(&probe).unwrap().0;
        probe.data_mut()[i] = orig - step;
        let down = f(&probe).unwrap().0;
        probe.data_mut()[i] = orig;
        (up - down) / (2.0 * step)
    };
    let mut worst = 0.0f64;
    for i in 0..x.numel() {
        let (wide, narrow) = (central(i, h), central(i, h / 2.0));
        if (wide - narrow).abs() > 1e-5 * wide.abs().max(narrow.abs()) + 1e-7 {
            return Err(Kink);
        }
        worst = worst.max(relative_error(analytic.data()[i], wide));
    }
    Ok(worst)
}

/// Worst relative error per checked gradient of every op, for one random
/// configuration drawn from `seed` (redrawn when a probe hits a kink). Each
/// op is probed through the scalar `sum(op(x) * r)` with a random
/// projection `r`.
pub fn check_ops(seed: u64) -> Vec<(&'static str, f64)> {
    (0..).find_map(|attempt| check_ops_once(seed * 1000 + attempt).ok()).unwrap()
}

fn check_ops_once(seed: u64) -> Result<Vec<(&'static str, f64)>, Kink> {
    let mut g = rng(seed);
    let h = STEP;
    let mut out = Vec::new();

    // convolution: input, weight and bias gradients
    let n = g.random_range(1..=2);
    let c = g.random_range(1..=3);
    let k = g.random_range(1..=4);
    let (kh, kw) = (g.random_range(1..=3), g.random_range(1..=5));
    let padding = if g.random::<bool>() { Padding::Same } else { Padding::Valid };
    let (ih, iw) = (g.random_range(kh..=kh + 4), g.random_range(kw..=kw + 5));
    let x = uniform(&[n, c, ih, iw], &mut g);
    let w = uniform(&[k, c, kh, kw], &mut g);
    let b = uniform(&[k], &mut g);
    let y = conv2d(&x, &w, Some(&b), padding).unwrap();
    let r = uniform(y.shape(), &mut g);
    let conv_x = checked_grad(
        |t| Ok((weighted_sum(&conv2d(t, &w, Some(&b), padding)?, &r), conv2d_backward(t, &w, padding, &r)?.input)),
        &x,
        h,
    );
    let conv_w = checked_grad(
        |t| Ok((weighted_sum(&conv2d(&x, t, Some(&b), padding)?, &r), conv2d_backward(&x, t, padding, &r)?.weight)),
        &w,
        h,
    );
    let conv_b = checked_grad(
        |t| Ok((weighted_sum(&conv2d(&x, &w, Some(t), padding)?, &r), conv2d_backward(&x, &w, padding, &r)?.bias)),
        &b,
        h,
    );
    out.push(("conv2d input", conv_x?));
    out.push(("conv2d weight", conv_w?));
    out.push(("conv2d bias", conv_b?));

    // max pooling with random window, stride and rounding
    let spec = PoolSpec {
        kernel: (g.random_range(1..=3), g.random_range(1..=3)),
        stride: (g.random_range(1..=3), g.random_range(1..=3)),
        ceil_mode: g.random(),
    };
    let x =
        uniform(&[g.random_range(1..=2), g.random_range(1..=3), g.random_range(3..=8), g.random_range(3..=8)], &mut g);
    let (y, _) = maxpool2d(&x, &spec).unwrap();
    let r = uniform(y.shape(), &mut g);
    let pool = checked_grad(
        |t| {
            let (y, idx) = maxpool2d(t, &spec)?;
            Ok((weighted_sum(&y, &r), maxpool2d_backward(&r, &idx)?))
        },
        &x,
        h,
    );
    out.push(("maxpool2d", pool?));

    // max-feature-map on maps and on flat features
    for shape in [
        vec![g.random_range(1..=2), 2 * g.random_range(1..=4), g.random_range(1..=4), g.random_range(1..=4)],
        vec![g.random_range(1..=3), 2 * g.random_range(1..=8)],
    ] {
        let x = uniform(&shape, &mut g);
        let mut half = shape.clone();
        half[1] /= 2;
        let r = uniform(&half, &mut g);
        let e = checked_grad(
            |t| {
                let (y, win) = mfm(t)?;
                Ok((weighted_sum(&y, &r), mfm_backward(&r, &win)?))
            },
            &x,
            h,
        );
        out.push((if shape.len() == 4 { "mfm map" } else { "mfm flat" }, e?));
    }

    // pointwise activations
    let shape = [g.random_range(1..=3), g.random_range(1..=12)];
    let x = away_from_zero(&shape, &mut g);
    let r = uniform(&shape, &mut g);
    out.push(("relu", checked_grad(|t| Ok((weighted_sum(&relu(t), &r), relu_backward(t, &r))), &x, h)?));
    let alpha = g.random_range(0.5..2.0);
    out.push(("elu", checked_grad(|t| Ok((weighted_sum(&elu(t, alpha), &r), elu_backward(t, alpha, &r))), &x, h)?));

    // linear: input, weight and bias gradients
    let (n, d, m) = (g.random_range(1..=3), g.random_range(1..=10), g.random_range(1..=6));
    let x = uniform(&[n, d], &mut g);
    let w = uniform(&[d, m], &mut g);
    let b = uniform(&[m], &mut g);
    let r = uniform(&[n, m], &mut g);
    out.push((
        "linear input",
        checked_grad(|t| Ok((weighted_sum(&linear(t, &w, Some(&b))?, &r), linear_backward(t, &w, &r)?.input)), &x, h)?,
    ));
    out.push((
        "linear weight",
        checked_grad(|t| Ok((weighted_sum(&linear(&x, t, Some(&b))?, &r), linear_backward(&x, t, &r)?.weight)), &w, h)?,
    ));
    out.push((
        "linear bias",
        checked_grad(|t| Ok((weighted_sum(&linear(&x, &w, Some(t))?, &r), linear_backward(&x, &w, &r)?.bias)), &b, h)?,
    ));

    // dropout with the mask held fixed by reseeding
    let rate = g.random_range(0.1..0.7);
    let mask_seed: u64 = g.random();
    let x = uniform(&[g.random_range(1..=3), g.random_range(1..=16)], &mut g);
    let r = uniform(x.shape(), &mut g);
    let drop = checked_grad(
        |t| {
            let (y, mask) = dropout(t, rate, &mut rng(mask_seed), true)?;
            Ok((weighted_sum(&y, &r), dropout_backward(&r, &mask)))
        },
        &x,
        h,
    );
    out.push(("dropout", drop?));

    // softmax cross-entropy with random labels and class count
    let (n, classes) = (g.random_range(1..=4), g.random_range(2..=5));
    let logits = uniform(&[n, classes], &mut g).map(|v| 3.0 * v);
    let labels: Vec<usize> = (0..n).map(|_| g.random_range(0..classes)).collect();
    out.push(("softmax cross-entropy", checked_grad(|t| softmax_cross_entropy(t, &labels), &logits, h)?));
    Ok(out)
}

/// Worst relative error of the full training loss (dropout active, mask
/// fixed) with respect to every parameter tensor and the input, for a
/// Model 3 sized to a random small input (redrawn on kinks).
pub fn check_model3(seed: u64, activation: Activation) -> f64 {
    (0..).find_map(|attempt| check_model3_once(seed * 1000 + attempt, activation).ok()).unwrap()
}

fn check_model3_once(seed: u64, activation: Activation) -> Result<f64, Kink> {
    let mut g = rng(seed);
    let (t, f) = (g.random_range(3..=9), g.random_range(3..=12));
    let n = g.random_range(1..=2);
    let cfg = model3_default().with_input(t, f).with_activation(activation);
    let net = Network::<f64>::build(cfg, g.random()).unwrap();
    let x = uniform(&[n, 1, t, f], &mut g);
    let labels: Vec<usize> = (0..n).map(|_| g.random_range(0..2)).collect();
    let mask_seed: u64 = g.random();

    let loss_and_grads = |net: &Network<f64>, x: &Tensor<f64>| {
        let (logits, trace) = net.forward_traced(x, Some(&mut rng(mask_seed)))?;
        let (loss, grad) = softmax_cross_entropy(&logits, &labels)?;
        let (param_grads, input_grad) = net.backward(trace, &grad)?;
        Ok::<_, antispoof::Error>((loss, param_grads, input_grad))
    };

    let mut worst = checked_grad(
        |t| {
            let (loss, _, gx) = loss_and_grads(&net, t)?;
            Ok((loss, gx))
        },
        &x,
        STEP,
    )?;
    for (i, name) in net.names().iter().enumerate() {
        let e = checked_grad(
            |t| {
                let mut probe = net.clone();
                *probe.param_mut(name).unwrap() = t.clone();
                let (loss, grads, _) = loss_and_grads(&probe, &x)?;
                Ok((loss, grads[i].clone()))
            },
            &net.params()[i],
            STEP,
        )?;
        worst = worst.max(e);
    }
    Ok(worst)
}

/// Random labelled score set with 1–49 trials per class; half the sets use
/// a coarse grid so ties are common.
pub fn random_score_set(g: &mut Rng) -> (Vec<f64>, Vec<f64>) {
    let total = g.random_range(2..=50);
    let genuine_n = g.random_range(1..total);
    let coarse = g.random::<bool>();
    let shift = g.random_range(0.0..2.0);
    let mut draw = |offset: f64| {
        if coarse {
            (g.random_range(0..8) as f64 + offset.round()) / 2.0
        } else {
            g.random_range(-2.0..2.0) + offset
        }
    };
    let genuine = (0..genuine_n).map(|_| draw(shift)).collect();
    let spoof = (0..total - genuine_n).map(|_| draw(0.0)).collect();
    (genuine, spoof)
}

/// Every distinct operating point, counted directly: for each threshold `t`
/// among the scores and `+inf`, miss = #genuine below `t`, fa = #spoof at or
/// above `t`. Returned as (p_fa, p_miss) ordered by threshold.
pub fn brute_force_roc(genuine: &[f64], spoof: &[f64]) -> Vec<(f64, f64)> {
    let mut thresholds: Vec<f64> = genuine.iter().chain(spoof).copied().collect();
    thresholds.sort_by(f64::total_cmp);
    thresholds.dedup();
    thresholds.push(f64::INFINITY);
    thresholds
        .iter()
        .map(|&t| {
            let miss = genuine.iter().filter(|&&s| s < t).count() as f64 / genuine.len() as f64;
            let fa = spoof.iter().filter(|&&s| s >= t).count() as f64 / spoof.len() as f64;
            (fa, miss)
        })
        .collect()
}

/// Linear interpolation of the first sign change of miss − fa along the
/// threshold sweep.
pub fn oracle_eer_interpolated(genuine: &[f64], spoof: &[f64]) -> f64 {
    let roc = brute_force_roc(genuine, spoof);
    for w in roc.windows(2) {
        let ((fa0, m0), (fa1, m1)) = (w[0], w[1]);
        let (d0, d1) = (m0 - fa0, m1 - fa1);
        if d1 >= 0.0 {
            if d1 == 0.0 {
                return m1;
            }
            return m0 + (-d0 / (d1 - d0)) * (m1 - m0);
        }
    }
    unreachable!("last point has miss 1 and fa 0")
}

fn cross(o: (f64, f64), a: (f64, f64), b: (f64, f64)) -> f64 {
    (a.0 - o.0) * (b.1 - o.1) - (a.1 - o.1) * (b.0 - o.0)
}

/// Lower convex hull (Andrew's monotone chain) of the empirical ROC points,
/// then the abscissa where the hull meets `p_miss = p_fa`.
pub fn oracle_eer_hull(genuine: &[f64], spoof: &[f64]) -> f64 {
    let mut pts = brute_force_roc(genuine, spoof);
    pts.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.total_cmp(&b.1)));
    pts.dedup();
    let mut hull: Vec<(f64, f64)> = Vec::new();
    for p in pts {
        while hull.len() >= 2 && cross(hull[hull.len() - 2], hull[hull.len() - 1], p) <= 0.0 {
            hull.pop();
        }
        hull.push(p);
    }
    // hull runs from p_fa = 0 to p_fa = 1 with p_miss non-increasing
    for w in hull.windows(2) {
        let ((x0, y0), (x1, y1)) = (w[0], w[1]);
        let (d0, d1) = (y0 - x0, y1 - x1);
        if d0 >= 0.0 && d1 <= 0.0 {
            if d0 == d1 {
                return x0;
            }
            let a = d0 / (d0 - d1);
            return x0 + a * (x1 - x0);
        }
    }
    unreachable!("the hull starts above the diagonal and ends below it")
}

/// Outcome of a criterion check: a short measurement either way.
pub type Check = Result<String, String>;

pub fn ensure(ok: bool, detail: String) -> Check {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

/// Gradients of every op and of the full model over `seeds` random
/// configurations; fails if any relative error reaches `tol`.
pub fn gradient_suite(seeds: u64, tol: f64) -> Check {
    let mut worst = (0.0f64, String::new());
    for seed in 0..seeds {
        let mut rows = check_ops(seed);
        rows.push(("model3 mfm", check_model3(seed, Activation::Mfm)));
        for (name, e) in rows {
            if e > worst.0 {
                worst = (e, format!("{name} (seed {seed})"));
            }
        }
    }
    ensure(worst.0 < tol, format!("worst relative error {:.2e} in {} over {seeds} seeds", worst.0, worst.1))
}

/// Both EER methods against their brute-force oracles on `sets` random
/// score sets, plus the ordering rocch <= interpolated.
pub fn eer_oracle_suite(sets: usize, tol: f64) -> Check {
    use antispoof::metrics::{eer_interpolated, eer_rocch};
    let mut g = rng(20_240_601);
    let (mut worst_rocch, mut worst_interp) = (0.0f64, 0.0f64);
    for i in 0..sets {
        let (genuine, spoof) = random_score_set(&mut g);
        let r = eer_rocch(&genuine, &spoof).map_err(|e| e.to_string())?;
        let s = eer_interpolated(&genuine, &spoof).map_err(|e| e.to_string())?;
        worst_rocch = worst_rocch.max((r - oracle_eer_hull(&genuine, &spoof)).abs());
        worst_interp = worst_interp.max((s - oracle_eer_interpolated(&genuine, &spoof)).abs());
        if r > s + tol {
            return Err(format!("set {i}: rocch {r} exceeds interpolated {s}"));
        }
    }
    ensure(
        worst_rocch <= tol && worst_interp <= tol,
        format!("{sets} sets: max |rocch - hull oracle| {worst_rocch:.1e}, max |interpolated - sweep oracle| {worst_interp:.1e}"),
    )
}

/// With a constant gradient `g` the bias corrections cancel exactly, so
/// after `t` steps `p = p0 - t * lr * g / (|g| + eps)`.
pub fn adam_closed_form(p0: f64, g: f64, t: usize, hyper: &antispoof::nn::AdamHyper) -> f64 {
    p0 - t as f64 * hyper.learning_rate * g / (g.abs() + hyper.epsilon)
}

pub fn adam_run(p0: f64, grads: &[f64], hyper: &antispoof::nn::AdamHyper) -> f64 {
    use antispoof::nn::{adam_step, AdamState};
    let mut params = vec![Tensor::from_f64(&[1], &[p0]).unwrap()];
    let mut state = AdamState::new(&params);
    for &g in grads {
        params[0].grad = Some(vec![g]);
        adam_step(&mut params, &mut state, hyper).unwrap();
    }
    params[0].data()[0]
}

pub fn adam_suite(tol: f64) -> Check {
    use antispoof::nn::AdamHyper;
    let hyper = AdamHyper::default();
    // hand-derived: one step from 0.5 with g = 0.2, then a second with g = -0.4
    let one = adam_run(0.5, &[0.2], &hyper);
    let two = adam_run(0.5, &[0.2, -0.4], &hyper);
    let mut worst = (one - 0.49993333333333334).abs().max((two - 0.49996114893897686).abs());
    let mut g = rng(5);
    for _ in 0..200 {
        let p0 = g.random_range(-2.0..2.0);
        let grad = g.random_range(-3.0..3.0);
        let t = g.random_range(1..=50);
        let lr = 10f64.powf(g.random_range(-5.0..-2.0));
        let h = AdamHyper { learning_rate: lr, ..hyper };
        let got = adam_run(p0, &vec![grad; t], &h);
        worst = worst.max((got - adam_closed_form(p0, grad, t, &h)).abs());
    }
    ensure(worst <= tol, format!("max deviation from closed form {worst:.1e} (eps {})", hyper.epsilon))
}

/// `floor((T - w) / s) + 1` windows, each exactly frames `[i*s, i*s + w)`.
pub fn split_law_suite(triples: usize) -> Check {
    use antispoof::features::{split_spectrogram, Spectrogram, SplitConfig};
    let mut g = rng(77);
    for _ in 0..triples {
        let w = g.random_range(1..=120);
        let s = g.random_range(1..=w);
        let t = g.random_range(w..=w + 400);
        let bins = 2;
        let spec = Spectrogram::new((0..t * bins).map(|v| v as f64).collect(), t, bins, 0.01).unwrap();
        let cfg = SplitConfig { spec_wind: w, wind_shift: s };
        let splits = split_spectrogram(&spec, &cfg).map_err(|e| e.to_string())?;
        let expected = (t - w) / s + 1;
        if splits.len() != expected {
            return Err(format!("T={t} w={w} s={s}: {} windows, expected {expected}", splits.len()));
        }
        for (i, sp) in splits.iter().enumerate() {
            let first = (i * s * bins) as f64;
            let want: Vec<f64> = (0..w * bins).map(|v| first + v as f64).collect();
            if sp.values() != want.as_slice() {
                return Err(format!("T={t} w={w} s={s}: window {i} does not start at frame {}", i * s));
            }
        }
    }
    ensure(true, format!("{triples} random (T, w, s) triples"))
}

/// Trains Model 3 on one fixed two-sample batch in training mode and
/// returns the step (1-based) at which the batch loss first drops below
/// `target`, if it does within `max_steps`.
pub fn overfit_two_samples(learning_rate: f64, max_steps: usize, target: f64) -> (Option<usize>, f64) {
    use antispoof::nn::{adam_step, AdamHyper, AdamState};
    let net_cfg = model3_default();
    let mut net = Network::<f64>::build(net_cfg, 11).unwrap();
    let mut g = rng(12);
    let x = uniform(&[2, 1, 100, 129], &mut g);
    let labels = [0usize, 1];
    let hyper = AdamHyper { learning_rate, ..AdamHyper::default() };
    let mut state = AdamState::new(net.params());
    let mut last = f64::INFINITY;
    for step in 1..=max_steps {
        let (logits, trace) = net.forward_traced(&x, Some(&mut g)).unwrap();
        let (loss, grad) = softmax_cross_entropy(&logits, &labels).unwrap();
        last = loss;
        if loss < target {
            return (Some(step), loss);
        }
        let (grads, _) = net.backward(trace, &grad).unwrap();
        net.set_grads(grads).unwrap();
        adam_step(net.params_mut(), &mut state, &hyper).unwrap();
    }
    (None, last)
}

/// Early stopping on constructed loss sequences, then through the trainer
/// with a zero learning rate (constant validation loss).
pub fn early_stopping_suite() -> Check {
    use antispoof::corpus::Label;
    use antispoof::features::Spectrogram;
    use antispoof::nn::AdamHyper;
    use antispoof::train::{train, EarlyStopping, LabeledExample, StopDecision, TrainConfig};

    let stop_epoch = |patience: usize, losses: &[f64]| {
        let mut es = EarlyStopping::new(patience);
        let at = losses.iter().position(|&l| es.observe(l) == StopDecision::Stop).map(|i| i + 1);
        (at, es.best_epoch())
    };
    let cases: &[(usize, &[f64], Option<usize>, Option<usize>)] = &[
        (2, &[1.0, 0.9, 0.95, 0.97, 0.5], Some(4), Some(2)),
        (3, &[1.0, 0.8, 0.85, 0.7, 0.75, 0.76, 0.77, 0.1], Some(7), Some(4)),
        (1, &[3.0, 2.0, 1.0, 1.0], Some(4), Some(3)),
        (4, &[5.0, 4.0, 3.0, 2.0, 1.0], None, Some(5)),
        (2, &[1.0, 1.0, 1.0], Some(3), Some(1)),
    ];
    for (k, (patience, losses, stop, best)) in cases.iter().enumerate() {
        let got = stop_epoch(*patience, losses);
        if got != (*stop, *best) {
            return Err(format!("sequence {k}: stop/best {got:?}, expected {:?}", (stop, best)));
        }
    }

    let mut g = rng(3);
    let toy: Vec<LabeledExample<f64>> = (0..6)
        .map(|i| {
            let label = if i % 2 == 0 { Label::Genuine } else { Label::Spoof };
            let v = (0..9 * 12).map(|_| g.random_range(-1.0..1.0)).collect();
            LabeledExample::new(format!("u{i}"), vec![Spectrogram::new(v, 9, 12, 0.01).unwrap()], label).unwrap()
        })
        .collect();
    let net = Network::<f64>::build(model3_default().with_input(9, 12), 4).unwrap();
    for patience in [1usize, 3, 5] {
        let cfg = TrainConfig {
            batch_size: 2,
            max_epochs: 20,
            patience,
            adam: AdamHyper { learning_rate: 0.0, ..AdamHyper::default() },
            seed: 9,
            checkpoint: None,
        };
        let out = train(net.clone(), &toy, &toy, &cfg).map_err(|e| e.to_string())?;
        if out.logs.len() != patience + 1 || out.best_epoch != 1 {
            return Err(format!(
                "patience {patience}: ran {} epochs with best {}, expected {} and 1",
                out.logs.len(),
                out.best_epoch,
                patience + 1
            ));
        }
        if out.best.params() != net.params() {
            return Err(format!("patience {patience}: returned snapshot differs from the epoch-1 weights"));
        }
    }

    // with learning the snapshot must be the minimum-loss epoch
    let cfg = TrainConfig {
        batch_size: 2,
        max_epochs: 12,
        patience: 3,
        adam: AdamHyper { learning_rate: 3e-3, ..AdamHyper::default() },
        seed: 9,
        checkpoint: None,
    };
    let out = train(net, &toy, &toy, &cfg).map_err(|e| e.to_string())?;
    let (argmin, min) =
        out.logs
            .iter()
            .map(|l| (l.epoch, l.dev_loss))
            .fold((0, f64::INFINITY), |acc, (e, l)| if l < acc.1 { (e, l) } else { acc });
    let rescored = antispoof::train::evaluate_loss(&out.best, &toy).map_err(|e| e.to_string())?;
    ensure(
        out.best_epoch == argmin && out.best_dev_loss == min && rescored == min,
        format!("constructed sequences stop on time; trained snapshot is epoch {argmin} (dev loss {min:.4})"),
    )
}

/// Input shapes: one second at the default front end, one second with a
/// 512-point FFT, and the fixed three-second single spectrogram.
pub fn shape_suite() -> Check {
    use antispoof::experiment::{featurize_waveform, FeatureConfig, Representation};
    use antispoof::features::{log_power_spectrogram, SpectrogramConfig};
    use antispoof::Waveform;

    let mut g = rng(1);
    let second = Waveform::new((0..16_000).map(|_| g.random_range(-0.5..0.5)).collect(), 16_000).unwrap();
    let a = log_power_spectrogram(&second, &SpectrogramConfig::default()).unwrap().shape();
    let b = log_power_spectrogram(&second, &SpectrogramConfig::with_fft(512)).unwrap().shape();
    let single = FeatureConfig { representation: Representation::Single { seconds: 3.0 }, ..FeatureConfig::default() };
    let c: Vec<_> = featurize_waveform(&second, &single).unwrap().iter().map(|s| s.shape()).collect();
    let d: Vec<_> = featurize_waveform(&second, &FeatureConfig::default()).unwrap().iter().map(|s| s.shape()).collect();
    ensure(
        a == (100, 129) && b == (100, 257) && c == [(300, 129)] && d == [(100, 129)],
        format!("1 s -> {a:?}, 1 s @ FFT 512 -> {b:?}, 3 s single -> {c:?}, split -> {d:?}"),
    )
}

/// Runs the command-line tool and returns (success, stdout, stderr).
pub fn cli<I, S>(args: I) -> (bool, String, String)
where
    I: IntoIterator<Item = S>,
    S: AsRef<std::ffi::OsStr>,
{
    let out = std::process::Command::new(env!("CARGO_BIN_EXE_antispoof")).args(args).output().expect("spawn antispoof");
    (
        out.status.success(),
        String::from_utf8_lossy(&out.stdout).into_owned(),
        String::from_utf8_lossy(&out.stderr).into_owned(),
    )
}

pub fn cli_ok<I, S>(args: I) -> String
where
    I: IntoIterator<Item = S>,
    S: AsRef<std::ffi::OsStr>,
{
    let (ok, stdout, stderr) = cli(args);
    assert!(ok, "command failed:\n{stdout}\n{stderr}");
    stdout
}

/// Settings of one synth → featurize → train → score run.
pub struct PipelineRun {
    pub train_per_class: usize,
    pub dev_per_class: usize,
    pub seed: u64,
    pub max_epochs: usize,
    pub batch_size: usize,
    pub patience: usize,
    pub learning_rate: f64,
}

pub struct PipelineResult {
    pub epoch_lines: usize,
    pub scores: String,
    pub eer_line: String,
    pub gaussian_scores: String,
    pub gaussian_eer_line: String,
}

/// Drives the whole pipeline through the binary inside `dir`.
pub fn run_pipeline(dir: &std::path::Path, run: &PipelineRun) -> PipelineResult {
    let p = |name: &str| dir.join(name).to_string_lossy().into_owned();
    let s = |v: &dyn std::fmt::Display| v.to_string();
    cli_ok([
        "synth".into(),
        "--out".into(),
        p("corpus"),
        "--seed".into(),
        s(&run.seed),
        "--train-per-class".into(),
        s(&run.train_per_class),
        "--dev-per-class".into(),
        s(&run.dev_per_class),
    ]);
    cli_ok([
        "featurize",
        "--protocol",
        &p("corpus/train/protocol.txt"),
        "--out",
        &p("feat/train"),
        "--fit-norm",
        &p("feat/norm.bin"),
    ]);
    cli_ok([
        "featurize",
        "--protocol",
        &p("corpus/dev/protocol.txt"),
        "--out",
        &p("feat/dev"),
        "--norm",
        &p("feat/norm.bin"),
    ]);
    let log = cli_ok([
        "train".into(),
        "--train".into(),
        p("feat/train"),
        "--dev".into(),
        p("feat/dev"),
        "--out".into(),
        p("run"),
        "--max-epochs".into(),
        s(&run.max_epochs),
        "--batch-size".into(),
        s(&run.batch_size),
        "--patience".into(),
        s(&run.patience),
        "--learning-rate".into(),
        s(&run.learning_rate),
        "--seed".into(),
        s(&run.seed),
    ]);
    let epoch_lines = log.lines().filter(|l| l.split('\t').count() == 4 && !l.starts_with('#')).count();
    cli_ok(["score", "--checkpoint", &p("run/model.ckpt"), "--features", &p("feat/dev"), "--out", &p("dev.scores")]);
    cli_ok([
        "score",
        "--checkpoint",
        &p("run/model.ckpt"),
        "--features",
        &p("feat/dev"),
        "--out",
        &p("dev.gauss.scores"),
        "--backend",
        "gaussian",
        "--backend-train",
        &p("feat/train"),
    ]);
    PipelineResult {
        epoch_lines,
        scores: std::fs::read_to_string(p("dev.scores")).unwrap(),
        eer_line: cli_ok(["eer", &p("dev.scores")]).trim().to_string(),
        gaussian_scores: std::fs::read_to_string(p("dev.gauss.scores")).unwrap(),
        gaussian_eer_line: cli_ok(["eer", &p("dev.gauss.scores")]).trim().to_string(),
    }
}

/// Parses `EER: x.xx%` into a fraction.
pub fn parse_eer_line(line: &str) -> f64 {
    line.trim()
        .strip_prefix("EER: ")
        .and_then(|v| v.strip_suffix('%'))
        .and_then(|v| v.parse::<f64>().ok())
        .map(|v| v / 100.0)
        .unwrap_or_else(|| panic!("unexpected eer output '{line}'"))
}
