//! Independent re-implementations checked against the library.

use nalgebra::{DMatrix, DVector};
use odpo::design::{design_matrix_of, frank_wolfe_design, g_value, Design, FrankWolfeConfig};
use odpo::estimator::{
    confidence_radius, h_map, likelihood_gradient, log_likelihood, mle, project_mle, sampling_design_matrix, Dataset,
    MleConfig, ProjectionConfig,
};
use odpo::evaluation::{
    chi2_bernoulli, corollary_bound, hypercube_floor, kl_bernoulli, simple_regret, theorem1_bound,
};
use odpo::instance::{build_instance, make_hypercube_instance, make_random_instance, ActionSet, FeatureVector};
use odpo::pipeline::predict;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn naive_sigmoid(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

fn random_vec(rng: &mut ChaCha8Rng, d: usize, scale: f64) -> FeatureVector {
    DVector::from_fn(d, |_, _| scale * (rng.gen::<f64>() * 2.0 - 1.0))
}

fn random_dataset(rng: &mut ChaCha8Rng, d: usize, n: usize) -> Dataset {
    let mut data = Dataset::new(d);
    for _ in 0..n {
        let b = random_vec(rng, d, 0.7);
        data.push(b, u8::from(rng.gen::<bool>()));
    }
    data
}

fn dataset_strategy() -> impl Strategy<Value = (Dataset, FeatureVector, f64)> {
    (1usize..6, 1usize..30, any::<u64>(), 0.05f64..2.0).prop_map(|(d, n, seed, lambda)| {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let data = random_dataset(&mut rng, d, n);
        let theta = random_vec(&mut rng, d, 1.5);
        (data, theta, lambda)
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn difference_arms_match_brute_force(n in 1usize..4, k in 1usize..5, d in 1usize..5, seed in any::<u64>()) {
        let inst = make_random_instance(n, k, d, seed);
        let mut expected: Vec<FeatureVector> = Vec::new();
        for set in &inst.action_sets {
            for (i, ai) in set.arms.iter().enumerate() {
                for (j, aj) in set.arms.iter().enumerate() {
                    let b = ai - aj;
                    if i != j && b.norm() > 0.0 && !expected.contains(&b) {
                        expected.push(b);
                    }
                }
            }
        }
        prop_assert!(inst.diff_arms.len() <= n * k * k);
        prop_assert_eq!(inst.diff_arms.len(), expected.len());
        for arm in &inst.diff_arms {
            prop_assert!(expected.contains(&arm.vector));
            let set = &inst.action_sets[arm.context_id];
            prop_assert_eq!(&(&set.arms[arm.i] - &set.arms[arm.j]), &arm.vector);
            let neg = -&arm.vector;
            prop_assert!(inst.diff_arms.iter().any(|o| o.vector == neg));
        }
    }

    #[test]
    fn log_likelihood_matches_naive_sum((data, theta, lambda) in dataset_strategy()) {
        let mut naive = -lambda * theta.norm_squared() / 2.0;
        for t in &data.tallies {
            let p = naive_sigmoid(theta.dot(&t.arm));
            naive += t.wins * p.ln() + (t.trials - t.wins) * (1.0 - p).ln();
        }
        let lib = log_likelihood(&data, &theta, lambda);
        prop_assert!((lib - naive).abs() <= 1e-10 * (1.0 + naive.abs()), "{} vs {}", lib, naive);
    }

    #[test]
    fn gradient_matches_central_differences((data, theta, lambda) in dataset_strategy()) {
        let grad = likelihood_gradient(&data, &theta, lambda);
        let h = 1e-6;
        let fd = DVector::from_fn(theta.len(), |i, _| {
            let mut up = theta.clone();
            let mut down = theta.clone();
            up[i] += h;
            down[i] -= h;
            (log_likelihood(&data, &up, lambda) - log_likelihood(&data, &down, lambda)) / (2.0 * h)
        });
        let err = (&grad - &fd).norm();
        prop_assert!(err <= 1e-5 * grad.norm().max(1.0), "gradient error {}", err);
    }

    #[test]
    fn h_map_identity_at_mle((data, _theta, lambda) in dataset_strategy()) {
        let fit = mle(&data, lambda, &MleConfig::default()).unwrap();
        prop_assert!(fit.grad_norm <= 1e-8);
        let h = h_map(&data, &fit.theta, lambda);
        prop_assert!((h - data.outcome_sum()).norm() <= 1e-7);
    }

    #[test]
    fn projection_stays_in_unit_ball(d in 1usize..5, n in 1usize..40, seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut data = Dataset::new(d);
        // Mostly wins so that the unconstrained fit tends to leave the ball.
        for _ in 0..n {
            let b = random_vec(&mut rng, d, 1.0);
            data.push(b, u8::from(rng.gen::<f64>() < 0.9));
        }
        let lambda = 0.01;
        let fit = mle(&data, lambda, &MleConfig::default()).unwrap();
        let v = data.design_matrix(lambda);
        let out = project_mle(&fit.theta, &data, &v, lambda, &ProjectionConfig::default()).unwrap();
        prop_assert!(out.theta.norm() <= 1.0 + 1e-9);
        if fit.theta.norm() <= 1.0 {
            prop_assert_eq!(&out.theta, &fit.theta);
        }
    }

    #[test]
    fn design_matrix_matches_brute_force(l in 1usize..12, d in 1usize..5, seed in any::<u64>(), lambda in 1e-3f64..2.0) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let arms: Vec<FeatureVector> = (0..l).map(|_| random_vec(&mut rng, d, 1.0)).collect();
        let raw: Vec<f64> = (0..l).map(|_| rng.gen::<f64>()).collect();
        let total: f64 = raw.iter().sum();
        let weights: Vec<f64> = raw.iter().map(|w| w / total).collect();
        let design = Design::from_dense(&weights, d, 0.0);
        let m = design_matrix_of(&design, &arms, lambda).unwrap();
        let mut oracle = DMatrix::<f64>::identity(d, d) * lambda;
        for (w, b) in weights.iter().zip(&arms) {
            for r in 0..d {
                for c in 0..d {
                    oracle[(r, c)] += w * b[r] * b[c];
                }
            }
        }
        prop_assert!((&m.matrix - &oracle).amax() <= 1e-12);

        let counts: Vec<(usize, usize)> = (0..l).map(|i| (i, rng.gen_range(1..5))).collect();
        let v = sampling_design_matrix(&arms, &counts, d, lambda);
        let mut oracle = DMatrix::<f64>::identity(d, d) * lambda;
        for &(i, c) in &counts {
            for _ in 0..c {
                oracle += &arms[i] * arms[i].transpose();
            }
        }
        prop_assert!((&v.matrix - &oracle).amax() <= 1e-12);
    }

    #[test]
    fn g_is_invariant_to_arm_scaling(l in 3usize..10, seed in any::<u64>(), c in 0.2f64..3.0) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let d = 2;
        let arms: Vec<FeatureVector> = (0..l).map(|_| random_vec(&mut rng, d, 1.0)).collect();
        let scaled: Vec<FeatureVector> = arms.iter().map(|b| b * c).collect();
        let design = Design::uniform(l, d);
        let g = g_value(&design, &arms, 0.0).unwrap();
        let gc = g_value(&design, &scaled, 0.0).unwrap();
        // M(π) scales by c² together with the arms, so the ratio is unchanged.
        prop_assert!((gc - g).abs() <= 1e-8 * g.abs());
    }
}

#[test]
fn uniform_design_on_orthonormal_arms() {
    let d = 5;
    let arms: Vec<FeatureVector> = (0..d).map(|i| DVector::from_fn(d, |r, _| f64::from(r == i))).collect();
    let design = Design::uniform(d, d);
    let m = design_matrix_of(&design, &arms, 0.0).unwrap();
    assert!((&m.matrix - DMatrix::<f64>::identity(d, d) / d as f64).amax() <= 1e-15);
    let g = g_value(&design, &arms, 0.0).unwrap();
    assert!((g - d as f64).abs() <= 1e-12);
}

#[test]
fn frank_wolfe_beats_uniform_on_random_pairs() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let d = 6;
    let arms: Vec<FeatureVector> = (0..100)
        .map(|_| random_vec(&mut rng, d, 0.5) - random_vec(&mut rng, d, 0.5))
        .collect();
    let cfg = FrankWolfeConfig {
        epsilon: 0.5,
        ..FrankWolfeConfig::default()
    };
    let res = frank_wolfe_design(&arms, &cfg).unwrap();
    assert!(res.converged);
    assert!(g_value(&res.design, &arms, cfg.lambda).unwrap() <= 1.5 * d as f64);
    let fw = design_matrix_of(&res.design, &arms, cfg.lambda).unwrap().log_det().unwrap();
    let uni = design_matrix_of(&Design::uniform(arms.len(), d), &arms, cfg.lambda)
        .unwrap()
        .log_det()
        .unwrap();
    assert!(fw >= uni, "{fw} < {uni}");
    for w in res.logdet_trace.windows(2) {
        assert!(w[1] >= w[0] - 1e-12);
    }
}

#[test]
fn one_dimensional_mle_matches_bisection() {
    let mut data = Dataset::new(2);
    for _ in 0..10 {
        data.push(DVector::from_vec(vec![1.0, 0.0]), 1);
    }
    let lambda = 0.5;
    let fit = mle(&data, lambda, &MleConfig::default()).unwrap();

    let f = |c: f64| 10.0 * (1.0 - naive_sigmoid(c)) - lambda * c;
    let (mut lo, mut hi) = (0.0_f64, 20.0_f64);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if f(mid) > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let c = 0.5 * (lo + hi);
    assert!((fit.theta[0] - c).abs() <= 1e-8, "{} vs {c}", fit.theta[0]);
    assert!(fit.theta[1].abs() <= 1e-12);
}

#[test]
fn one_dimensional_projection_is_a_clamp() {
    let lambda = 0.01;
    for (wins, losses) in [(9usize, 1usize), (1, 9), (20, 0), (0, 15), (6, 4)] {
        let mut data = Dataset::new(1);
        for k in 0..wins + losses {
            data.push(DVector::from_element(1, 1.0), u8::from(k < wins));
        }
        let fit = mle(&data, lambda, &MleConfig::default()).unwrap();
        let v = data.design_matrix(lambda);
        let out = project_mle(&fit.theta, &data, &v, lambda, &ProjectionConfig::default()).unwrap();
        let target = h_map(&data, &fit.theta, lambda)[0];
        let vinv = 1.0 / v.matrix[(0, 0)];
        let grid_best = (0..=20_000)
            .map(|i| -1.0 + 2.0 * i as f64 / 20_000.0)
            .min_by(|a, b| {
                let fa = (h_map(&data, &DVector::from_element(1, *a), lambda)[0] - target).powi(2) * vinv;
                let fb = (h_map(&data, &DVector::from_element(1, *b), lambda)[0] - target).powi(2) * vinv;
                fa.total_cmp(&fb)
            })
            .unwrap();
        let clamp = fit.theta[0].clamp(-1.0, 1.0);
        assert!((out.theta[0] - clamp).abs() <= 1e-6, "{} vs {clamp}", out.theta[0]);
        assert!((grid_best - clamp).abs() <= 1e-4);
    }
}

#[test]
fn mle_is_consistent_with_many_samples() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let d = 3;
    let theta_star = DVector::from_vec(vec![0.5, -0.4, 0.3]);
    let mut data = Dataset::new(d);
    for _ in 0..10_000 {
        let b = random_vec(&mut rng, d, 1.0);
        let y = u8::from(rng.gen::<f64>() < naive_sigmoid(theta_star.dot(&b)));
        data.push(b, y);
    }
    let fit = mle(&data, 1.0 / d as f64, &MleConfig::default()).unwrap();
    assert!((fit.theta - theta_star).norm() <= 0.1);
}

#[test]
fn confidence_radius_reevaluation() {
    let (t, d, lambda, delta) = (10_000.0_f64, 5.0_f64, 0.2_f64, 0.05_f64);
    let inner = 2.0 * (1.0 / delta).ln() + d * (lambda.powf(1.0 - 1.0 / d) + 4.0 * t / (d * lambda.powf(1.0 / d))).ln();
    let oracle = 20.0 * (inner.sqrt() + lambda.sqrt());
    let lib = confidence_radius(10_000, 5, 0.2, 0.05).unwrap();
    assert!((lib - oracle).abs() <= 1e-12 * oracle);

    let by_hand = 20.0 * (2.0_f64.sqrt() + 1.0);
    let lib = confidence_radius(0, 1, 1.0, (-1.0_f64).exp()).unwrap();
    assert!((lib - by_hand).abs() <= 1e-12);
}

#[test]
fn corollary_reevaluation_and_reduction() {
    let (d, t) = (5.0_f64, 10_000.0_f64);
    let oracle = 30.0 * (d + 2.0) / t.sqrt() * ((4.0 * t + 1.0) / d.powf(1.0 - 1.0 / d)).ln().sqrt() + 31.0 / t.sqrt();
    let lib = corollary_bound(5, 10_000).unwrap().expected().unwrap();
    assert!((lib - oracle).abs() <= 1e-12 * oracle);

    for d in [2usize, 4, 8, 16] {
        for t in [d * d, 4 * d * d, 100 * d * d] {
            let th = theorem1_bound(d, t, 0.5, 1.0 / d as f64, 0.05).unwrap();
            let co = corollary_bound(d, t).unwrap().high_prob(0.05).unwrap();
            assert!((th - co).abs() <= 1e-9 * co, "d={d} T={t}: {th} vs {co}");
        }
    }
}

#[test]
fn bounds_decrease_in_t_beyond_d_squared() {
    for d in [2usize, 4, 8, 16] {
        let mut prev: Option<(f64, f64, f64)> = None;
        for t in (d * d..=200 * d * d).step_by(d * d / 2 + 1) {
            let c = corollary_bound(d, t).unwrap();
            let cur = (
                c.high_prob(0.05).unwrap(),
                c.expected().unwrap(),
                theorem1_bound(d, t, 0.5, 1.0 / d as f64, 0.05).unwrap(),
            );
            if let Some(p) = prev {
                assert!(cur.0 < p.0 && cur.1 < p.1 && cur.2 < p.2, "d={d} T={t}");
            }
            prev = Some(cur);
        }
    }
}

#[test]
fn hypercube_quantities() {
    assert!((hypercube_floor(16, 256) - (-5.0f64).exp() / 4.0).abs() <= 1e-15);
    assert!((hypercube_floor(8, 64) - (-5.0f64).exp() / 4.0).abs() <= 1e-15);

    let fam = make_hypercube_instance(2, 100).unwrap();
    let theta = fam.theta(&[true, true]);
    let per_coordinate = 2.0 * (1.0_f64 / 50.0).sqrt() / 2.0_f64.sqrt();
    let best = fam.arm(&[true, true]);
    let wrong = fam.arm(&[true, false]);
    assert!((theta.dot(&(best - wrong)) - per_coordinate).abs() <= 1e-12);
    assert!((fam.regret(&theta, &[true, false]) - per_coordinate).abs() <= 1e-12);
}

#[test]
fn regret_and_prediction_match_exhaustive_loops() {
    for seed in 0..20 {
        let inst = make_random_instance(6, 4, 3, seed);
        let mut rng = ChaCha8Rng::seed_from_u64(seed + 100);
        let theta = random_vec(&mut rng, 3, 1.0);
        let pred = predict(&theta, &inst).unwrap();
        let mut worst = 0.0_f64;
        for (n, set) in inst.action_sets.iter().enumerate() {
            let mut best_idx = 0;
            for (k, a) in set.arms.iter().enumerate() {
                if theta.dot(a) > theta.dot(&set.arms[best_idx]) {
                    best_idx = k;
                }
            }
            assert_eq!(pred.choices[n], best_idx);
            let mut top = f64::NEG_INFINITY;
            for a in &set.arms {
                top = top.max(inst.theta_star.dot(a));
            }
            worst = worst.max(top - inst.theta_star.dot(&set.arms[pred.choices[n]]));
        }
        let lib = simple_regret(&inst, &pred);
        assert!((lib - worst).abs() <= 1e-12);
        assert!((0.0..=2.0).contains(&lib));
    }
}

#[test]
fn random_instance_radius_law() {
    let (n, k, d) = (50usize, 4usize, 8usize);
    let inst = make_random_instance(n, k, d, 1);
    let radii: Vec<f64> = inst.action_sets.iter().flat_map(|s| s.arms.iter().map(|a| a.norm())).collect();
    assert!(radii.iter().all(|&r| r <= 1.0 + 1e-12));
    let mean = radii.iter().sum::<f64>() / radii.len() as f64;
    let df = d as f64;
    let expected = df / (df + 1.0);
    let sd = (df / (df + 2.0) - expected * expected).sqrt();
    let se = sd / (radii.len() as f64).sqrt();
    assert!((mean - expected).abs() <= 4.0 * se, "mean {mean} vs {expected} (se {se})");
}

#[test]
fn divergence_values() {
    assert!((chi2_bernoulli(0.3, 0.6).unwrap() - 0.375).abs() <= 1e-15);
    assert_eq!(kl_bernoulli(0.5, 0.5).unwrap(), 0.0);
    let p = 0.3_f64;
    let q = 0.6_f64;
    let oracle = p * (p / q).ln() + (1.0 - p) * ((1.0 - p) / (1.0 - q)).ln();
    assert!((kl_bernoulli(p, q).unwrap() - oracle).abs() <= 1e-15);
}

#[test]
fn build_instance_on_small_sets() {
    let e1 = DVector::from_vec(vec![1.0, 0.0]);
    let e2 = DVector::from_vec(vec![0.0, 1.0]);
    let inst = build_instance(vec![ActionSet::new(0, vec![e1.clone(), e2.clone()])], e1.clone()).unwrap();
    assert_eq!(inst.diff_arms.len(), 2);
    assert_eq!(inst.diff_arms[0].vector, &e1 - &e2);
    assert_eq!(inst.diff_arms[1].vector, &e2 - &e1);
}
