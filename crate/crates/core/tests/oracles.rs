//! Library results checked against independent reference computations.

mod common;

use common::*;
use ortg_lab::features::{FeatureKey, FEATURE_COUNT};
use ortg_lab::ingest::{generate_synthetic_dataset, SyntheticSpec};
use ortg_lab::model::{fit_linear_least_squares, mse_gradient, mse_loss, MlpModel, ModelSpec, Regressor, TrainConfig, TrainedPredictor};
use ortg_lab::optimize::{derive_feasible_region, optimize_gameplan, project_feasible, OptimizeConfig};
use ortg_lab::transform::PcaModel;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

#[test]
fn least_squares_matches_normal_equations() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let xs: Vec<Vec<f64>> = (0..60).map(|_| (0..6).map(|_| rng.random_range(-1.0..1.0)).collect()).collect();
    let ys: Vec<f64> = xs
        .iter()
        .map(|x| 3.0 - 2.0 * x[0] + 0.5 * x[3] + x[5] + rng.random_range(-0.3..0.3))
        .collect();
    let fit = fit_linear_least_squares(&xs, &ys).unwrap();
    let (w, b) = normal_equations(&xs, &ys);
    for (got, want) in fit.weights().iter().zip(&w) {
        assert!((got - want).abs() <= 1e-9, "weight {got} vs {want}");
    }
    assert!((fit.bias() - b).abs() <= 1e-9);
}

#[test]
fn least_squares_on_pca_scores_matches_normal_equations() {
    let (data, _) = generate_synthetic_dataset(4, 120, &SyntheticSpec::default()).unwrap();
    let p = TrainedPredictor::fit(&data, &ModelSpec::Linear, 18, &TrainConfig::default()).unwrap();
    let inputs: Vec<Vec<f64>> = data.features().iter().map(|x| p.pipeline().forward(x).unwrap()).collect();
    let targets: Vec<f64> = data.targets().iter().map(|&t| p.pipeline().normalize_target(t)).collect();
    let (w, b) = normal_equations(&inputs, &targets);
    let Regressor::Linear(lin) = p.regressor() else { panic!("linear spec") };
    for (got, want) in lin.weights().iter().zip(&w) {
        assert!((got - want).abs() <= 1e-8, "weight {got} vs {want}");
    }
    assert!((lin.bias() - b).abs() <= 1e-8);
}

fn check_pca_against_jacobi(xs: &[Vec<f64>], k: usize, signal: usize) {
    let pca = PcaModel::fit(xs, k).unwrap();
    let (values, vectors) = jacobi_eigen(standardized_covariance(xs));
    let top = values[0];
    for i in 0..k {
        let got = pca.explained_variance()[i];
        if i < signal {
            assert!(relative_error(got, values[i]) <= 1e-8, "eigenvalue {i}: {got} vs {}", values[i]);
            let dot: f64 = pca.components()[i].iter().zip(&vectors[i]).map(|(a, b)| a * b).sum();
            assert!((dot.abs() - 1.0).abs() <= 1e-6, "component {i} alignment {dot}");
        } else {
            assert!((got - values[i]).abs() <= 1e-8 * top, "null eigenvalue {i}: {got} vs {}", values[i]);
        }
    }
}

#[test]
fn pca_matches_covariance_eigensolve_full_rank() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let xs: Vec<Vec<f64>> = (0..240)
        .map(|_| (0..FEATURE_COUNT).map(|j| rng.random_range(0.0..1.0) * (1.0 + j as f64 / 10.0)).collect())
        .collect();
    check_pca_against_jacobi(&xs, 18, 18);
}

#[test]
fn pca_matches_covariance_eigensolve_rank_ten() {
    let xs = low_rank_samples(5, 240, FEATURE_COUNT, 10);
    check_pca_against_jacobi(&xs, 18, 10);
}

#[test]
fn pca_reconstructs_rank_ten_data() {
    let xs = low_rank_samples(6, 240, FEATURE_COUNT, 10);
    let pca = PcaModel::fit(&xs, 18).unwrap();
    let worst = xs
        .iter()
        .map(|x| {
            let back = pca.reconstruct(&pca.apply(x));
            back.iter().zip(x).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max)
        })
        .fold(0.0, f64::max);
    assert!(worst <= 1e-6, "reconstruction error {worst}");
    let c = pca.components();
    for i in 0..c.len() {
        for j in 0..c.len() {
            let dot: f64 = c[i].iter().zip(&c[j]).map(|(a, b)| a * b).sum();
            let want = if i == j { 1.0 } else { 0.0 };
            assert!((dot - want).abs() <= 1e-9, "<c{i}, c{j}> = {dot}");
        }
    }
}

#[test]
fn projection_matches_kkt_enumeration() {
    let freq = freq_indices();
    let mut rng = ChaCha8Rng::seed_from_u64(21);
    for case in 0..200 {
        let m = if case % 2 == 0 { 3 } else { 5 };
        let coords = &freq[..m];
        let bounds: Vec<(f64, f64)> = (0..m)
            .map(|_| {
                let lo = rng.random_range(0.0..0.15);
                (lo, lo + rng.random_range(0.0..0.25))
            })
            .collect();
        let min_sum: f64 = bounds.iter().map(|b| b.0).sum();
        let cap = (min_sum + rng.random_range(0.0..0.4)).clamp(0.01, 1.0);
        let free: Vec<(usize, f64, f64)> = coords.iter().zip(&bounds).map(|(&j, &(lo, hi))| (j, lo, hi)).collect();
        let region = pinned_region(&free, 0.5, cap);

        let mut y = [0.5; FEATURE_COUNT];
        for &j in &freq {
            y[j] = rng.random_range(-0.2..0.6);
        }
        let p = project_feasible(&y, &region);
        let (l, u): (Vec<f64>, Vec<f64>) = bounds.iter().copied().unzip();
        let ys: Vec<f64> = coords.iter().map(|&j| y[j]).collect();
        let want = brute_force_projection(&ys, &l, &u, cap);
        for (i, &j) in coords.iter().enumerate() {
            assert!((p.values()[j] - want[i]).abs() <= 1e-6, "case {case} coord {j}: {} vs {}", p.values()[j], want[i]);
        }
        assert!(region.contains(p.values(), 1e-9));
    }
}

#[test]
fn linear_optimizer_returns_lp_corner() {
    let (data, _) = generate_synthetic_dataset(8, 120, &SyntheticSpec::default()).unwrap();
    let region = derive_feasible_region(&data, 0.0).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    for trial in 0..5 {
        let mut w = [0.0; FEATURE_COUNT];
        for v in &mut w {
            let mag = rng.random_range(0.5..20.0);
            *v = if rng.random_bool(0.5) { mag } else { -mag };
        }
        let stub = LinearStub { w, b: 100.0 };
        let got = optimize_gameplan(&stub, &region, &data, &[], &OptimizeConfig::with_seed(trial)).unwrap();
        let want = lp_corner(&w, &region);
        for key in FeatureKey::all() {
            let j = key.index();
            assert!((got.features.values()[j] - want[j]).abs() <= 1e-9, "trial {trial} {key}: {} vs {}", got.features.values()[j], want[j]);
        }
        assert!(region.contains(got.features.values(), 1e-9));
    }
}

#[test]
fn concave_optimizer_matches_grid_search() {
    let freq = freq_indices();
    let nonfreq: Vec<usize> = (0..FEATURE_COUNT).filter(|j| !freq.contains(j)).collect();
    let free = [
        (freq[0], 0.05, 0.15),
        (freq[1], 0.10, 0.20),
        (freq[2], 0.15, 0.25),
        (nonfreq[0], 0.30, 0.60),
        (nonfreq[1], 0.30, 0.60),
    ];
    let region = pinned_region(&free, 0.5, 0.45);
    let mut a = [0.0; FEATURE_COUNT];
    let mut t = [0.5; FEATURE_COUNT];
    for j in &freq {
        t[*j] = 0.0;
    }
    let weights = [30.0, 20.0, 40.0, 25.0, 35.0];
    let targets = [0.14, 0.19, 0.24, 0.45, 0.70];
    for ((&(j, _, _), w), tgt) in free.iter().zip(weights).zip(targets) {
        a[j] = w;
        t[j] = tgt;
    }
    let stub = ConcaveStub { a, t, c: 110.0 };
    let empty = ortg_lab::ingest::Dataset::default();
    let got = optimize_gameplan(&stub, &region, &empty, &[], &OptimizeConfig::with_seed(1)).unwrap();

    let h = 0.002;
    let steps = |lo: f64, hi: f64| -> Vec<f64> {
        let n = ((hi - lo) / h).round() as usize;
        (0..=n).map(|i| lo + i as f64 * h).collect()
    };
    let mut base = [0.0; FEATURE_COUNT];
    for j in 0..FEATURE_COUNT {
        base[j] = region.lower()[j];
    }
    // the non-frequency part is separable from the frequency block
    for &(j, lo, hi) in &free[3..] {
        let best = steps(lo, hi).into_iter().max_by(|x, y| {
            let fx = -a[j] * (x - t[j]).powi(2);
            let fy = -a[j] * (y - t[j]).powi(2);
            fx.total_cmp(&fy)
        });
        base[j] = best.unwrap();
    }
    let mut grid_best = f64::NEG_INFINITY;
    for x0 in steps(free[0].1, free[0].2) {
        for x1 in steps(free[1].1, free[1].2) {
            for x2 in steps(free[2].1, free[2].2) {
                if x0 + x1 + x2 > region.freq_sum_cap() + 1e-12 {
                    continue;
                }
                let mut x = base;
                x[freq[0]] = x0;
                x[freq[1]] = x1;
                x[freq[2]] = x2;
                grid_best = grid_best.max(ortg_lab::optimize::Surrogate::value(&stub, &x));
            }
        }
    }
    assert!(region.contains(got.features.values(), 1e-9));
    assert!(got.predicted_ortg >= grid_best - 1e-9, "optimizer {} below grid {grid_best}", got.predicted_ortg);
    assert!((got.predicted_ortg - grid_best).abs() <= 1e-3, "optimizer {} vs grid {grid_best}", got.predicted_ortg);
}

#[test]
fn predictor_input_gradient_matches_finite_differences() {
    let (data, _) = generate_synthetic_dataset(12, 120, &SyntheticSpec::default()).unwrap();
    let cfg = TrainConfig {
        max_epochs: 300,
        restarts: 1,
        ..TrainConfig::with_seed(2)
    };
    let p = TrainedPredictor::fit(&data, &ModelSpec::mlp(&[3]), 18, &cfg).unwrap();
    let Regressor::Mlp(mlp) = p.regressor() else { panic!("mlp spec") };
    let mut rng = ChaCha8Rng::seed_from_u64(13);
    let rows = data.features();
    let mut checked = 0;
    while checked < 20 {
        let base = rows[rng.random_range(0..rows.len())];
        let mut x = base;
        for v in &mut x {
            *v = (*v + rng.random_range(-0.01..0.01)).clamp(0.0, 1.0);
        }
        if kink_distance(mlp, &p.pipeline().forward(&x).unwrap()) < 1e-3 {
            continue;
        }
        let g = p.gradient_input(&x);
        let f = |v: &[f64]| {
            let mut a = [0.0; FEATURE_COUNT];
            a.copy_from_slice(v);
            p.predict_raw(&a).unwrap()
        };
        for j in 0..FEATURE_COUNT {
            let fd = central_difference(f, &x, j, 1e-6);
            let err = (g[j] - fd).abs() / g[j].abs().max(fd.abs()).max(1.0);
            assert!(err <= 1e-4, "feature {j}: analytic {} vs fd {fd}", g[j]);
        }
        checked += 1;
    }
}

#[test]
fn parameter_gradient_matches_finite_differences() {
    let mut rng = ChaCha8Rng::seed_from_u64(17);
    let inputs: Vec<Vec<f64>> = (0..25).map(|_| (0..18).map(|_| rng.random_range(-1.0..1.0)).collect()).collect();
    let targets: Vec<f64> = (0..25).map(|_| rng.random_range(0.0..1.0)).collect();
    let mut checked = 0;
    let mut attempt = 0;
    while checked < 20 {
        attempt += 1;
        let mut init = ChaCha8Rng::seed_from_u64(1000 + attempt);
        let glorot = MlpModel::glorot(vec![18, 3, 1], &mut init).unwrap();
        let mut params = glorot.params().to_vec();
        let sizes = glorot.layer_sizes().to_vec();
        // hidden biases away from zero keep samples off the kinks
        for b in &mut params[18 * 3..18 * 3 + 3] {
            *b = init.random_range(0.05..0.3);
        }
        let model = MlpModel::from_flat(sizes.clone(), params.clone()).unwrap();
        if inputs.iter().any(|z| kink_distance(&model, z) < 1e-3) {
            continue;
        }
        let (_, grad) = mse_gradient(&model, &inputs, &targets).unwrap();
        let loss = |p: &[f64]| mse_loss(&MlpModel::from_flat(sizes.clone(), p.to_vec()).unwrap(), &inputs, &targets).unwrap();
        for (j, g) in grad.iter().enumerate() {
            let fd = central_difference(loss, &params, j, 1e-6);
            let err = (g - fd).abs() / g.abs().max(fd.abs()).max(1e-6);
            assert!(err <= 1e-4, "parameter {j}: analytic {g} vs fd {fd}");
        }
        checked += 1;
    }
}
