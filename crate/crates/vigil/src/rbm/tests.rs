use super::exact::*;
use super::*;
use approx::assert_abs_diff_eq;
use ndarray::array;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn random_params(m: usize, k: usize, seed: u64) -> RbmParams {
    let mut r = rng(seed);
    let normal = Normal::new(0.0, 1.0).unwrap();
    RbmParams {
        visible_bias: Array1::from_shape_fn(m, |_| normal.sample(&mut r)),
        hidden_bias: Array1::from_shape_fn(k, |_| normal.sample(&mut r)),
        weights: Array2::from_shape_fn((m, k), |_| normal.sample(&mut r)),
    }
}

#[test]
fn energy_zero_configuration_is_zero() {
    let params = random_params(3, 2, 1);
    let v = Array1::zeros(3);
    let h = Array1::zeros(2);
    assert_eq!(params.energy(v.view(), h.view()).unwrap(), 0.0);
}

#[test]
fn energy_hand_computed_values() {
    let params = RbmParams::new(array![1.0], array![2.0], array![[3.0]]).unwrap();
    let e = params.energy(array![1.0].view(), array![1.0].view()).unwrap();
    assert_abs_diff_eq!(e, -6.0, epsilon = 1e-12);

    let params = RbmParams::new(array![0.0, 0.0], array![0.0], array![[1.0], [-1.0]]).unwrap();
    let e = params
        .energy(array![1.0, 1.0].view(), array![1.0].view())
        .unwrap();
    assert_abs_diff_eq!(e, 0.0, epsilon = 1e-12);
}

#[test]
fn energy_rejects_dimension_mismatch() {
    let params = RbmParams::zeros(3, 2);
    let v = Array1::zeros(4);
    let h = Array1::zeros(2);
    assert!(params.energy(v.view(), h.view()).is_err());
}

#[test]
fn params_new_rejects_inconsistent_shapes() {
    assert!(RbmParams::new(Array1::zeros(3), Array1::zeros(2), Array2::zeros((2, 2))).is_err());
    assert!(RbmParams::new(Array1::zeros(3), Array1::zeros(2), Array2::zeros((3, 1))).is_err());
}

#[test]
fn hidden_conditional_zero_params_is_half() {
    let params = RbmParams::zeros(4, 3);
    let p = params
        .hidden_conditional(array![0.1, 0.9, 0.4, 0.0].view())
        .unwrap();
    for &x in p.iter() {
        assert_eq!(x, 0.5);
    }
}

#[test]
fn hidden_conditional_saturates_at_large_bias() {
    let params = RbmParams::new(Array1::zeros(2), array![50.0, -50.0], Array2::zeros((2, 2))).unwrap();
    let p = params.hidden_conditional(array![0.3, 0.7].view()).unwrap();
    assert!((p[0] - 1.0).abs() < 1e-15);
    assert!(p[1].abs() < 1e-15);
}

#[test]
fn hidden_conditional_single_weight() {
    let params = RbmParams::new(array![0.0], array![0.0], array![[1.0]]).unwrap();
    let p = params.hidden_conditional(array![1.0].view()).unwrap();
    assert_abs_diff_eq!(p[0], sigmoid(1.0), epsilon = 1e-15);
    assert_abs_diff_eq!(p[0], 0.7310585786300049, epsilon = 1e-12);
}

#[test]
fn visible_conditional_mirrors_hidden() {
    let params = RbmParams::zeros(3, 2);
    let p = params.visible_conditional(array![1.0, 0.0].view()).unwrap();
    assert!(p.iter().all(|&x| x == 0.5));

    let params = RbmParams::new(array![-50.0, -50.0], Array1::zeros(1), Array2::zeros((2, 1))).unwrap();
    let p = params.visible_conditional(array![1.0].view()).unwrap();
    assert!(p.iter().all(|&x| x.abs() < 1e-15));

    let params = RbmParams::new(array![1.0], array![0.0, 0.0], array![[1.0, -1.0]]).unwrap();
    let p = params.visible_conditional(array![1.0, 1.0].view()).unwrap();
    assert_abs_diff_eq!(p[0], sigmoid(1.0), epsilon = 1e-15);
}

#[test]
fn conditionals_stay_inside_open_unit_interval_and_monotone_in_bias() {
    for seed in 0..20 {
        let params = random_params(5, 4, seed);
        let v = Array1::from_shape_fn(5, |i| (i as f64) / 5.0);
        let p = params.hidden_conditional(v.view()).unwrap();
        assert!(p.iter().all(|&x| x > 0.0 && x < 1.0));

        // Raising one hidden bias raises exactly that posterior.
        let mut bumped = params.clone();
        bumped.hidden_bias[1] += 0.7;
        let q = bumped.hidden_conditional(v.view()).unwrap();
        assert!(q[1] > p[1]);
        assert_eq!(q[0], p[0]);
    }
}

#[test]
fn sample_bernoulli_degenerate_probabilities() {
    let mut r = rng(7);
    let ones = sample_bernoulli(Array1::from_elem(16, 1.0).view(), &mut r).unwrap();
    assert!(ones.iter().all(|&x| x == 1.0));
    let zeros = sample_bernoulli(Array1::from_elem(16, 0.0).view(), &mut r).unwrap();
    assert!(zeros.iter().all(|&x| x == 0.0));
}

#[test]
fn sample_bernoulli_monte_carlo_mean() {
    let mut r = rng(11);
    let probs = Array1::from_elem(100_000, 0.3);
    let draws = sample_bernoulli(probs.view(), &mut r).unwrap();
    let mean = draws.sum() / draws.len() as f64;
    assert!((mean - 0.3).abs() < 0.01, "mean {mean}");
}

#[test]
fn sample_bernoulli_rejects_out_of_range() {
    let mut r = rng(0);
    assert!(sample_bernoulli(array![1.5].view(), &mut r).is_err());
    assert!(sample_bernoulli(array![-0.1].view(), &mut r).is_err());
}

#[test]
fn gibbs_chain_zero_params_is_fair_coin() {
    let params = RbmParams::zeros(8, 4);
    let v0 = Array1::from_elem(8, 0.5);
    let mut total = 0.0;
    let mut count = 0.0;
    for seed in 0..2_000 {
        let mut r = rng(seed);
        let (v, _) = gibbs_chain(v0.view(), 1, &params, &mut r).unwrap();
        total += v.sum();
        count += v.len() as f64;
    }
    let mean = total / count;
    assert!((mean - 0.5).abs() < 0.01, "mean {mean}");
}

#[test]
fn gibbs_chain_saturated_biases_pin_the_state() {
    let params = RbmParams::new(Array1::from_elem(3, 50.0), Array1::zeros(2), Array2::zeros((3, 2))).unwrap();
    let mut r = rng(3);
    let (v, _) = gibbs_chain(Array1::zeros(3).view(), 5, &params, &mut r).unwrap();
    assert!(v.iter().all(|&x| x == 1.0));
}

#[test]
fn gibbs_chain_is_reproducible_and_requires_a_step() {
    let params = random_params(4, 3, 5);
    let v0 = array![0.2, 0.8, 0.0, 1.0];
    let a = gibbs_chain(v0.view(), 3, &params, &mut rng(42)).unwrap();
    let b = gibbs_chain(v0.view(), 3, &params, &mut rng(42)).unwrap();
    assert_eq!(a, b);
    assert!(gibbs_chain(v0.view(), 0, &params, &mut rng(0)).is_err());
}

#[test]
fn cd_gradient_vanishes_at_a_fixed_point_with_exact_negative_phase() {
    // With W = 0 the model factorizes, so a single data row equal to
    // sigmoid(a) matches the model expectation exactly.
    let params = RbmParams::new(array![0.4, -1.1, 2.0], array![0.3, -0.6], Array2::zeros((3, 2))).unwrap();
    let data = params.visible_bias.mapv(sigmoid);
    let batch = data.into_shape_with_order((1, 3)).unwrap();
    let positive = data_stats(batch.view(), &params).unwrap();
    let negative = model_stats_exact(&params).unwrap();
    let grad = gradient_from_stats(&positive, &negative);
    assert!(grad.max_abs() < 1e-6, "residual {}", grad.max_abs());
}

#[test]
fn cd_gradient_visible_bias_mean_over_seeds() {
    // Zero parameters, one data row [1,1]: the data term is 1 and the model
    // term is a fair coin, so the expected visible-bias gradient is 0.5.
    let params = RbmParams::zeros(2, 1);
    let batch = array![[1.0, 1.0]];
    let mut sum = Array1::<f64>::zeros(2);
    let n = 10_000;
    for seed in 0..n {
        let mut r = rng(seed);
        let grad = cd_gradient(batch.view(), &params, 1, &mut r, None).unwrap();
        sum += &grad.d_visible_bias;
    }
    let mean = sum / n as f64;
    assert!((mean[0] - 0.5).abs() < 0.01, "mean {mean}");
    assert!((mean[1] - 0.5).abs() < 0.01, "mean {mean}");
}

#[test]
fn cd_gradient_dimensions_and_empty_batch() {
    let params = random_params(5, 3, 9);
    let batch = Array2::from_elem((4, 5), 0.5);
    let grad = cd_gradient(batch.view(), &params, 1, &mut rng(1), None).unwrap();
    assert_eq!(grad.d_visible_bias.len(), 5);
    assert_eq!(grad.d_hidden_bias.len(), 3);
    assert_eq!(grad.d_weights.dim(), (5, 3));

    let empty = Array2::<f64>::zeros((0, 5));
    assert!(cd_gradient(empty.view(), &params, 1, &mut rng(1), None).is_err());
}

#[test]
fn cd_gradient_persistent_chains_advance_in_place() {
    let params = random_params(4, 2, 13);
    let batch = Array2::from_elem((3, 4), 0.5);
    let mut chains = Array2::from_elem((3, 4), 0.0);
    let before = chains.clone();
    cd_gradient(batch.view(), &params, 1, &mut rng(2), Some(&mut chains)).unwrap();
    assert_ne!(chains, before);
    assert!(chains.iter().all(|&x| x == 0.0 || x == 1.0));
}

#[test]
fn apply_update_contract() {
    let params = RbmParams::new(array![1.0], array![0.0], array![[0.0]]).unwrap();
    let grad = RbmGradient {
        d_visible_bias: array![2.0],
        d_hidden_bias: array![0.0],
        d_weights: array![[0.0]],
    };
    assert!(apply_update(&params, &grad, 0.0).is_err());
    let updated = apply_update(&params, &grad, 0.1).unwrap();
    assert_abs_diff_eq!(updated.visible_bias[0], 1.2, epsilon = 1e-15);

    let zero = RbmGradient::zeros_like(&params);
    let same = apply_update(&params, &zero, 0.5).unwrap();
    assert_eq!(same, params);

    let bad = RbmGradient {
        d_visible_bias: array![f64::INFINITY],
        d_hidden_bias: array![0.0],
        d_weights: array![[0.0]],
    };
    assert!(apply_update(&params, &bad, 0.1).is_err());
}

#[test]
fn train_zero_epochs_returns_initialization() {
    let cfg = TrainConfig {
        epochs: 0,
        seed: 77,
        ..TrainConfig::default()
    };
    let patches = Array2::from_elem((10, 4), 0.5);
    let params = train(patches.view(), 3, &cfg).unwrap();
    let mut r = rng(77);
    let expected = RbmParams::init(4, 3, cfg.init_weight_std, &mut r);
    assert_eq!(params, expected);
}

#[test]
fn train_is_deterministic_for_a_fixed_seed() {
    let cfg = TrainConfig {
        epochs: 3,
        batch_size: 4,
        seed: 5,
        ..TrainConfig::default()
    };
    let mut r = rng(31);
    let patches = Array2::from_shape_fn((24, 6), |_| r.random::<f64>());
    let a = train(patches.view(), 3, &cfg).unwrap();
    let b = train(patches.view(), 3, &cfg).unwrap();
    assert_eq!(a, b);
}

#[test]
fn train_rejects_values_outside_unit_interval() {
    let cfg = TrainConfig::default();
    let patches = Array2::from_elem((4, 3), 1.5);
    assert!(train(patches.view(), 2, &cfg).is_err());
}

#[test]
fn train_improves_exact_likelihood_on_a_tiny_model() {
    let target = random_params(6, 3, 123);
    let data = sample_visible_exact(&target, 300, &mut rng(9)).unwrap();
    let cfg = TrainConfig {
        epochs: 30,
        batch_size: 32,
        seed: 4,
        ..TrainConfig::default()
    };
    let init_cfg = TrainConfig { epochs: 0, ..cfg.clone() };
    let init = train(data.view(), 3, &init_cfg).unwrap();
    let trained = train(data.view(), 3, &cfg).unwrap();
    let ll_init = exact_mean_log_likelihood(data.view(), &init).unwrap();
    let ll_trained = exact_mean_log_likelihood(data.view(), &trained).unwrap();
    assert!(
        ll_trained > ll_init,
        "log-likelihood did not improve: {ll_init} -> {ll_trained}"
    );
}

#[test]
fn train_with_persistent_chains_is_deterministic_and_learns() {
    let target = random_params(6, 3, 321);
    let data = sample_visible_exact(&target, 200, &mut rng(8)).unwrap();
    let cfg = TrainConfig {
        epochs: 20,
        batch_size: 20,
        seed: 6,
        persistent: true,
        ..TrainConfig::default()
    };
    let a = train(data.view(), 3, &cfg).unwrap();
    let b = train(data.view(), 3, &cfg).unwrap();
    assert_eq!(a, b);
    let init = train(data.view(), 3, &TrainConfig { epochs: 0, ..cfg.clone() }).unwrap();
    let ll_init = exact_mean_log_likelihood(data.view(), &init).unwrap();
    let ll_trained = exact_mean_log_likelihood(data.view(), &a).unwrap();
    assert!(ll_trained > ll_init);
}

#[test]
fn reconstruct_fixture_values() {
    let params = RbmParams::zeros(3, 2);
    let out = params.reconstruct(array![0.2, 0.9, 0.5].view()).unwrap();
    assert!(out.iter().all(|&x| x == 0.5));

    let saturated =
        RbmParams::new(Array1::from_elem(2, 50.0), Array1::zeros(3), Array2::zeros((2, 3))).unwrap();
    let out = saturated.reconstruct(array![0.0, 0.3].view()).unwrap();
    assert!(out.iter().all(|&x| (x - 1.0).abs() < 1e-15));

    let params = RbmParams::new(array![0.0], array![0.0], array![[2.0]]).unwrap();
    let out = params.reconstruct(array![1.0].view()).unwrap();
    let h = sigmoid(2.0);
    assert_abs_diff_eq!(out[0], sigmoid(2.0 * h), epsilon = 1e-15);
}

#[test]
fn reconstruct_batch_matches_single_rows() {
    let params = random_params(5, 4, 17);
    let mut r = rng(2);
    let batch = Array2::from_shape_fn((6, 5), |_| r.random::<f64>());
    let out = params.reconstruct_batch(batch.view());
    for (row_in, row_out) in batch.rows().into_iter().zip(out.rows()) {
        let single = params.reconstruct(row_in).unwrap();
        for (a, b) in single.iter().zip(row_out.iter()) {
            assert_abs_diff_eq!(a, b, epsilon = 1e-12);
        }
    }
}

#[test]
fn reconstruct_sampled_is_binary_and_reproducible() {
    let params = random_params(6, 3, 19);
    let v = Array1::from_elem(6, 0.4);
    let a = params.reconstruct_sampled(v.view(), &mut rng(4)).unwrap();
    let b = params.reconstruct_sampled(v.view(), &mut rng(4)).unwrap();
    assert_eq!(a, b);
    assert!(a.iter().all(|&x| x == 0.0 || x == 1.0));
}

// ---------------------------------------------------------------------------
// Exact-enumeration oracles.
// ---------------------------------------------------------------------------

/// Direct partition sum with no log-domain tricks; only safe for small,
/// mild parameters.
fn naive_partition(params: &RbmParams) -> f64 {
    let m = params.num_visible();
    let k = params.num_hidden();
    let mut z = 0.0;
    for v_code in 0..(1u32 << m) {
        let v = Array1::from_shape_fn(m, |i| ((v_code >> i) & 1) as f64);
        for h_code in 0..(1u32 << k) {
            let h = Array1::from_shape_fn(k, |j| ((h_code >> j) & 1) as f64);
            z += (-params.energy(v.view(), h.view()).unwrap()).exp();
        }
    }
    z
}

#[test]
fn exact_partition_of_the_empty_model_counts_states() {
    let params = RbmParams::zeros(1, 1);
    assert_abs_diff_eq!(exact_partition(&params).unwrap(), 4.0_f64.ln(), epsilon = 1e-12);
}

#[test]
fn exact_partition_with_suppressed_hidden_unit() {
    // Hidden activations are pushed to zero, leaving 2^M unit-weight states.
    let params = RbmParams::new(
        Array1::zeros(2),
        array![-500.0],
        Array2::from_elem((2, 1), -500.0),
    )
    .unwrap();
    assert_abs_diff_eq!(exact_partition(&params).unwrap(), 4.0_f64.ln(), epsilon = 1e-9);
}

#[test]
fn exact_partition_matches_naive_double_loop() {
    for seed in 0..10 {
        let params = random_params(3, 2, 100 + seed);
        let log_z = exact_partition(&params).unwrap();
        let naive = naive_partition(&params).ln();
        assert_abs_diff_eq!(log_z, naive, epsilon = 1e-10);
    }
}

#[test]
fn exact_partition_guard() {
    let params = RbmParams::zeros(20, 5);
    assert!(matches!(
        exact_partition(&params),
        Err(crate::error::Error::EnumGuard { .. })
    ));
}

#[test]
fn free_energy_agrees_with_explicit_hidden_sum() {
    for seed in 0..10 {
        let params = random_params(4, 3, 200 + seed);
        let v = Array1::from_shape_fn(4, |i| ((seed >> i) & 1) as f64);
        let mut direct = 0.0;
        for h_code in 0..(1u32 << 3) {
            let h = Array1::from_shape_fn(3, |j| ((h_code >> j) & 1) as f64);
            direct += (-params.energy(v.view(), h.view()).unwrap()).exp();
        }
        assert_abs_diff_eq!(
            free_energy(v.view(), &params).unwrap(),
            -direct.ln(),
            epsilon = 1e-10
        );
    }
}

#[test]
fn exact_likelihood_sums_to_one() {
    let params = random_params(4, 2, 33);
    let total: f64 = (0..16)
        .map(|code| {
            let v = Array1::from_shape_fn(4, |i| ((code >> i) & 1) as f64);
            exact_log_likelihood(v.view(), &params).unwrap().exp()
        })
        .sum();
    assert_abs_diff_eq!(total, 1.0, epsilon = 1e-10);
}

#[test]
fn joint_probability_identity_holds_for_every_state() {
    let params = random_params(3, 2, 44);
    let log_z = exact_partition(&params).unwrap();
    for v_code in 0..(1u32 << 3) {
        let v = Array1::from_shape_fn(3, |i| ((v_code >> i) & 1) as f64);
        let h_probs = params.hidden_conditional(v.view()).unwrap();
        for h_code in 0..(1u32 << 2) {
            let h = Array1::from_shape_fn(2, |j| ((h_code >> j) & 1) as f64);
            let log_p_h_given_v: f64 = h
                .iter()
                .zip(h_probs.iter())
                .map(|(&hj, &pj)| if hj == 1.0 { pj.ln() } else { (1.0 - pj).ln() })
                .sum();
            let log_joint = -free_energy(v.view(), &params).unwrap() - log_z + log_p_h_given_v;
            let energy = params.energy(v.view(), h.view()).unwrap();
            assert_abs_diff_eq!(energy + log_joint + log_z, 0.0, epsilon = 1e-10);
        }
    }
}

/// Central finite difference of the exact log-likelihood in one coordinate.
fn finite_difference(
    v: ArrayView1<f64>,
    params: &RbmParams,
    bump: impl Fn(&mut RbmParams, f64),
    step: f64,
) -> f64 {
    let mut plus = params.clone();
    bump(&mut plus, step);
    let mut minus = params.clone();
    bump(&mut minus, -step);
    (exact_log_likelihood(v, &plus).unwrap() - exact_log_likelihood(v, &minus).unwrap())
        / (2.0 * step)
}

#[test]
fn exact_gradient_matches_finite_differences() {
    let step = 1e-5;
    for seed in 0..5 {
        let params = random_params(4, 3, 300 + seed);
        let v = Array1::from_shape_fn(4, |i| (((seed + 1) >> i) & 1) as f64);
        let grad = exact_gradient(v.view(), &params).unwrap();
        let mut worst = 0.0_f64;
        for i in 0..4 {
            let fd = finite_difference(v.view(), &params, |p, s| p.visible_bias[i] += s, step);
            let g = grad.d_visible_bias[i];
            worst = worst.max((fd - g).abs() / g.abs().max(1.0));
        }
        for j in 0..3 {
            let fd = finite_difference(v.view(), &params, |p, s| p.hidden_bias[j] += s, step);
            let g = grad.d_hidden_bias[j];
            worst = worst.max((fd - g).abs() / g.abs().max(1.0));
        }
        for i in 0..4 {
            for j in 0..3 {
                let fd = finite_difference(v.view(), &params, |p, s| p.weights[[i, j]] += s, step);
                let g = grad.d_weights[[i, j]];
                worst = worst.max((fd - g).abs() / g.abs().max(1.0));
            }
        }
        assert!(worst < 1e-6, "seed {seed}: max relative error {worst}");
    }
}

#[test]
fn exact_gradient_decays_to_zero_on_a_saturating_one_point_fit() {
    // The one-point maximum sits at infinity, so a fixed learning rate only
    // shrinks the gradient like 1/t. A geometric ramp drives the biases into
    // saturation where the exact gradient vanishes numerically.
    let v = array![1.0, 0.0];
    let mut params = RbmParams::zeros(2, 2);
    let mut rate = 1.0;
    for _ in 0..2_000 {
        let grad = exact_gradient(v.view(), &params).unwrap();
        params = apply_update(&params, &grad, rate).unwrap();
        rate *= 1.03;
    }
    let grad = exact_gradient(v.view(), &params).unwrap();
    assert!(grad.max_abs() < 1e-8, "residual {}", grad.max_abs());
}

#[test]
fn exact_gradient_is_equivariant_under_hidden_permutation() {
    let params = random_params(3, 3, 55);
    let v = array![1.0, 0.0, 1.0];
    let grad = exact_gradient(v.view(), &params).unwrap();

    // Swap hidden units 0 and 2.
    let perm = [2usize, 1, 0];
    let permuted = RbmParams {
        visible_bias: params.visible_bias.clone(),
        hidden_bias: Array1::from_shape_fn(3, |j| params.hidden_bias[perm[j]]),
        weights: Array2::from_shape_fn((3, 3), |(i, j)| params.weights[[i, perm[j]]]),
    };
    let grad_perm = exact_gradient(v.view(), &permuted).unwrap();
    for (j, &pj) in perm.iter().enumerate() {
        assert_abs_diff_eq!(grad_perm.d_hidden_bias[j], grad.d_hidden_bias[pj], epsilon = 1e-12);
        for i in 0..3 {
            assert_abs_diff_eq!(grad_perm.d_weights[[i, j]], grad.d_weights[[i, pj]], epsilon = 1e-12);
        }
    }
}

#[test]
fn cd_gradient_with_exact_negative_phase_equals_exact_gradient() {
    let params = random_params(4, 3, 66);
    let v = array![1.0, 0.0, 0.5, 0.25];
    let batch = v.clone().into_shape_with_order((1, 4)).unwrap();
    let positive = data_stats(batch.view(), &params).unwrap();
    let negative = model_stats_exact(&params).unwrap();
    let via_stats = gradient_from_stats(&positive, &negative);
    let direct = exact_gradient(v.view(), &params).unwrap();
    assert_eq!(via_stats, direct);
}

#[test]
fn model_stats_of_the_empty_model_are_uniform() {
    let stats = model_stats_exact(&RbmParams::zeros(3, 2)).unwrap();
    for &x in stats.visible.iter() {
        assert_abs_diff_eq!(x, 0.5, epsilon = 1e-12);
    }
    for &x in stats.hidden.iter() {
        assert_abs_diff_eq!(x, 0.5, epsilon = 1e-12);
    }
    for &x in stats.joint.iter() {
        assert_abs_diff_eq!(x, 0.25, epsilon = 1e-12);
    }
}

#[test]
fn exact_sampler_matches_model_marginals() {
    let params = random_params(4, 2, 88);
    let samples = sample_visible_exact(&params, 40_000, &mut rng(21)).unwrap();
    let empirical = samples.sum_axis(Axis(0)) / samples.nrows() as f64;
    let stats = model_stats_exact(&params).unwrap();
    for (e, m) in empirical.iter().zip(stats.visible.iter()) {
        assert!((e - m).abs() < 0.01, "empirical {e} vs exact {m}");
    }
}
