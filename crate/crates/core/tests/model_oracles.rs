use fastscreen_core::models::{
    aggressive_undersample, fit_logistic_1d, hinge_objective, hinge_subgradient, train_svm, ClassWeights, Example,
    SvmConfig,
};
use fastscreen_core::textfeat::SparseVec;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn dense(v: &[f64]) -> SparseVec {
    SparseVec::from_pairs(v.iter().enumerate().map(|(i, &x)| (i as u32, x)))
}

fn examples<'a>(rows: &'a [SparseVec], labels: &[bool]) -> Vec<Example<'a>> {
    rows.iter()
        .zip(labels)
        .enumerate()
        .map(|(i, (r, &positive))| Example {
            key: i as u32,
            features: r,
            positive,
        })
        .collect()
}

#[test]
fn separable_toy_set_matches_grid_optimum() {
    let rows = [
        dense(&[1.0, 1.0]),
        dense(&[2.0, 0.5]),
        dense(&[-1.0, -0.5]),
        dense(&[-0.5, -2.0]),
    ];
    let labels = [true, true, false, false];
    let ex = examples(&rows, &labels);
    let weights = ClassWeights::balanced(2, 2);
    let model = train_svm(&ex, 2, true, &SvmConfig::default()).unwrap();
    let trained = hinge_objective(&model.weights, model.bias, &ex, weights, 1.0);

    let grid: Vec<f64> = (-40..=40).map(|i| i as f64 * 0.05).collect();
    let mut best = (f64::INFINITY, [0.0; 3]);
    for &w0 in &grid {
        for &w1 in &grid {
            for &b in &grid {
                let f = hinge_objective(&[w0, w1], b, &ex, weights, 1.0);
                if f < best.0 {
                    best = (f, [w0, w1, b]);
                }
            }
        }
    }
    let [w0, w1, b] = best.1;
    for (r, &y) in rows.iter().zip(&labels) {
        let grid_d = w0 * r.get(0) + w1 * r.get(1) + b;
        assert_eq!(grid_d > 0.0, y, "grid optimum separates");
        assert_eq!(model.decision(r).unwrap() > 0.0, y, "trained model separates");
    }
    assert!(trained <= best.0 + 1e-2, "trained {trained} vs grid {}", best.0);
}

#[test]
fn single_class_names_the_missing_class() {
    let rows = [dense(&[1.0]), dense(&[2.0])];
    let err = train_svm(&examples(&rows, &[true, true]), 1, true, &SvmConfig::default()).unwrap_err();
    assert!(err.to_string().contains("negative"), "{err}");
    let err = train_svm(&examples(&rows, &[false, false]), 1, true, &SvmConfig::default()).unwrap_err();
    assert!(err.to_string().contains("positive"), "{err}");
}

#[test]
fn gradient_matches_central_differences() {
    let mut rng = ChaCha8Rng::seed_from_u64(17);
    let dim = 6;
    let h = 1e-5;
    let mut checked = 0;
    while checked < 100 {
        let n = rng.gen_range(3..12);
        let rows: Vec<SparseVec> = (0..n)
            .map(|_| dense(&(0..dim).map(|_| rng.gen_range(-1.0..1.0)).collect::<Vec<_>>()))
            .collect();
        let mut labels: Vec<bool> = (0..n).map(|_| rng.gen_bool(0.4)).collect();
        labels[0] = true;
        labels[1] = false;
        let ex = examples(&rows, &labels);
        let pos = labels.iter().filter(|&&y| y).count();
        let weights = ClassWeights::balanced(pos, n - pos);
        let w: Vec<f64> = (0..dim).map(|_| rng.gen_range(-2.0..2.0)).collect();
        let b = rng.gen_range(-1.0..1.0);

        // skip points within a step of a hinge kink
        let near_kink = ex.iter().any(|e| {
            let y = if e.positive { 1.0 } else { -1.0 };
            (1.0 - y * (e.features.dot(&w) + b)).abs() < 1e-3
        });
        if near_kink {
            continue;
        }
        let (gw, gb) = hinge_subgradient(&w, b, &ex, weights, 1.0);
        let mut analytic = gw.clone();
        analytic.push(gb);
        let mut numeric = Vec::with_capacity(dim + 1);
        for j in 0..=dim {
            let (mut wp, mut wm, mut bp, mut bm) = (w.clone(), w.clone(), b, b);
            if j < dim {
                wp[j] += h;
                wm[j] -= h;
            } else {
                bp += h;
                bm -= h;
            }
            let fp = hinge_objective(&wp, bp, &ex, weights, 1.0);
            let fm = hinge_objective(&wm, bm, &ex, weights, 1.0);
            numeric.push((fp - fm) / (2.0 * h));
        }
        let diff: f64 = analytic
            .iter()
            .zip(&numeric)
            .map(|(a, n)| (a - n).powi(2))
            .sum::<f64>()
            .sqrt();
        let scale: f64 = analytic.iter().map(|a| a * a).sum::<f64>().sqrt().max(1e-8);
        assert!(diff / scale <= 1e-4, "relative error {}", diff / scale);
        checked += 1;
    }
}

/// Plain gradient ascent on the log-likelihood.
fn logistic_gd(points: &[(f64, bool)]) -> (f64, f64) {
    let (mut s, mut b) = (0.0, 0.0);
    for _ in 0..200_000 {
        let (mut gs, mut gb) = (0.0, 0.0);
        for &(d, y) in points {
            let p = 1.0 / (1.0 + (-(s * d + b)).exp());
            let r = if y { 1.0 } else { 0.0 } - p;
            gs += r * d;
            gb += r;
        }
        s += 0.05 * gs;
        b += 0.05 * gb;
        if gs.abs().max(gb.abs()) < 1e-10 {
            break;
        }
    }
    (s, b)
}

#[test]
fn logistic_fit_matches_gradient_ascent() {
    let points = [
        (-1.5, false),
        (-0.7, false),
        (-0.2, true),
        (0.1, false),
        (0.8, true),
        (1.6, true),
    ];
    let (s, b) = logistic_gd(&points);
    let curve = fit_logistic_1d(&points).unwrap();
    assert!((curve.slope - s).abs() <= 1e-3, "{} vs {s}", curve.slope);
    assert!((curve.intercept - b).abs() <= 1e-3, "{} vs {b}", curve.intercept);
}

#[test]
fn undersample_keeps_lowest_scoring_negatives() {
    let rows: Vec<SparseVec> = (0..13).map(|i| dense(&[i as f64 / 10.0 - 0.6, 1.0])).collect();
    let labels: Vec<bool> = (0..13).map(|i| i >= 10).collect();
    let ex = examples(&rows, &labels);
    let base = train_svm(&ex, 2, true, &SvmConfig::default()).unwrap();
    let (pos, neg): (Vec<Example>, Vec<Example>) = ex.iter().partition(|e| e.positive);
    let retrained = aggressive_undersample(&base, &pos, &neg, &SvmConfig::default()).unwrap();
    assert!(retrained.undersampled);
    assert_eq!(retrained.trained_on.positives, 3);
    assert_eq!(retrained.trained_on.negatives, 3);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn training_ignores_input_order(
        points in prop::collection::vec((prop::collection::vec(-1.0f64..1.0, 3), any::<bool>()), 4..16),
        seed in any::<u64>(),
    ) {
        let mut labels: Vec<bool> = points.iter().map(|p| p.1).collect();
        labels[0] = true;
        labels[1] = false;
        let rows: Vec<SparseVec> = points.iter().map(|p| dense(&p.0)).collect();
        let ex = examples(&rows, &labels);
        let mut shuffled = ex.clone();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for i in (1..shuffled.len()).rev() {
            shuffled.swap(i, rng.gen_range(0..=i));
        }
        let cfg = SvmConfig { epochs: 30, ..SvmConfig::default() };
        let a = train_svm(&ex, 3, true, &cfg).unwrap();
        let b = train_svm(&shuffled, 3, true, &cfg).unwrap();
        for r in &rows {
            prop_assert!((a.decision(r).unwrap() - b.decision(r).unwrap()).abs() <= 1e-6);
        }
    }

    #[test]
    fn logistic_probability_monotone_for_positive_slope(
        points in prop::collection::vec((-3.0f64..3.0, any::<bool>()), 2..30),
        probes in prop::collection::vec(-5.0f64..5.0, 2..20),
    ) {
        let curve = fit_logistic_1d(&points).unwrap();
        prop_assert!(curve.slope.is_finite() && curve.intercept.is_finite());
        if curve.slope >= 0.0 {
            let mut probes = probes;
            probes.sort_by(f64::total_cmp);
            for w in probes.windows(2) {
                prop_assert!(curve.probability(w[0]) <= curve.probability(w[1]));
            }
        }
    }

    #[test]
    fn undersample_trains_on_expected_count(n_pos in 1usize..8, n_neg in 1usize..12) {
        let rows: Vec<SparseVec> = (0..n_pos + n_neg)
            .map(|i| dense(&[(i as f64 * 0.37).sin(), (i as f64 * 0.11).cos()]))
            .collect();
        let labels: Vec<bool> = (0..n_pos + n_neg).map(|i| i < n_pos).collect();
        let ex = examples(&rows, &labels);
        let cfg = SvmConfig { epochs: 10, ..SvmConfig::default() };
        let base = train_svm(&ex, 2, true, &cfg).unwrap();
        let (pos, neg): (Vec<Example>, Vec<Example>) = ex.iter().partition(|e| e.positive);
        let m = aggressive_undersample(&base, &pos, &neg, &cfg).unwrap();
        prop_assert_eq!(m.trained_on.positives + m.trained_on.negatives, n_neg.min(n_pos) + n_pos);
        prop_assert!(m.weights.iter().all(|w| w.is_finite()) && m.bias.is_finite());
    }
}
