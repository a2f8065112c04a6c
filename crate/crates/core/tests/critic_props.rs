use movac_core::critic::{gae, gae_segmented, rewards_to_go, td_residual, CorrelationMatrix, Normalizer};
use movac_core::geometry::{ValueVector, WeightVector};
use proptest::prelude::*;

/// Direct double sum `Â_t = Σ_l (γλ)^l δ_{t+l}`.
fn gae_double_sum(deltas: &[f64], gamma: f64, lambda: f64) -> Vec<f64> {
    (0..deltas.len())
        .map(|t| (t..deltas.len()).map(|k| (gamma * lambda).powi((k - t) as i32) * deltas[k]).sum())
        .collect()
}

fn deltas() -> impl Strategy<Value = Vec<f64>> {
    proptest::collection::vec(-10.0f64..10.0, 1..=1024)
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 100, .. ProptestConfig::default() })]

    #[test]
    fn recursion_matches_double_sum(d in deltas(), gamma in 0.0f64..=1.0, lambda in 0.0f64..=1.0) {
        let fast = gae(&d, gamma, lambda);
        let slow = gae_double_sum(&d, gamma, lambda);
        for (a, b) in fast.iter().zip(&slow) {
            prop_assert!((a - b).abs() <= 1e-12 * (1.0 + b.abs()), "{a} vs {b}");
        }
    }

    #[test]
    fn lambda_zero_is_one_step(d in deltas(), gamma in 0.0f64..=1.0) {
        prop_assert_eq!(gae(&d, gamma, 0.0), d);
    }

    #[test]
    fn lambda_one_telescopes(
        rv in proptest::collection::vec((-5.0f64..5.0, -5.0f64..5.0), 1..=200),
        tail in -5.0f64..5.0,
        gamma in 0.5f64..=1.0,
    ) {
        // with λ = 1 the TD residuals telescope into discounted return minus the baseline
        let n = rv.len();
        let v: Vec<f64> = rv.iter().map(|p| p.1).chain([tail]).collect();
        let d: Vec<f64> = (0..n).map(|t| td_residual(rv[t].0, v[t + 1], v[t], gamma)).collect();
        let adv = gae(&d, gamma, 1.0);
        let mut ret = tail;
        for t in (0..n).rev() {
            ret = rv[t].0 + gamma * ret;
            prop_assert!((adv[t] - (ret - v[t])).abs() < 1e-10, "t={t}: {} vs {}", adv[t], ret - v[t]);
        }
    }

    #[test]
    fn segments_never_leak(d in deltas(), cut in 0usize..1024, gamma in 0.0f64..=1.0, lambda in 0.0f64..=1.0) {
        let cut = cut % d.len();
        let mut ends = vec![false; d.len()];
        ends[cut] = true;
        *ends.last_mut().unwrap() = true;
        let seg = gae_segmented(&d, &ends, gamma, lambda);
        let head = gae(&d[..=cut], gamma, lambda);
        let tail = gae(&d[cut + 1..], gamma, lambda);
        prop_assert_eq!(&seg[..=cut], &head[..]);
        prop_assert_eq!(&seg[cut + 1..], &tail[..]);
    }

    #[test]
    fn rewards_to_go_bootstrap_at_ends(r in proptest::collection::vec(-3.0f64..3.0, 1..=50), tail in -3.0f64..3.0, gamma in 0.0f64..=1.0) {
        let n = r.len();
        let mut ends = vec![false; n];
        ends[n - 1] = true;
        let mut tails = vec![0.0; n];
        tails[n - 1] = tail;
        let g = rewards_to_go(&r, &ends, &tails, gamma);
        let direct: f64 = r.iter().enumerate().map(|(k, x)| gamma.powi(k as i32) * x).sum::<f64>() + gamma.powi(n as i32) * tail;
        prop_assert!((g[0] - direct).abs() < 1e-9);
    }

    #[test]
    fn normalizer_round_trips(xs in proptest::collection::vec(-100.0f64..100.0, 2..=64), probe in -100.0f64..100.0) {
        let mut n = Normalizer::<f64>::default();
        n.update(&xs);
        prop_assert!((n.denormalize(n.normalize(probe)) - probe).abs() < 1e-8 * (1.0 + probe.abs()));
    }

    #[test]
    fn row_updates_stay_on_the_simplex(
        raw in proptest::collection::vec(proptest::collection::vec(0.0f64..1.0, 3), 1..=6),
        payoffs in proptest::collection::vec(-5.0f64..5.0, 6),
        row in 0usize..3,
    ) {
        let weights: Vec<WeightVector<f64>> = raw.iter().filter_map(|r| WeightVector::project(r).ok()).collect();
        let evals: Vec<_> = weights.iter().cloned().zip(payoffs.iter().copied()).collect();
        let w = CorrelationMatrix::<f64>::identity(3);
        let (next, _) = w.update_w_row(row, &weights, &evals).unwrap();
        for r in next.rows() {
            prop_assert!(r.as_slice().iter().all(|x| *x >= 0.0));
            prop_assert!((r.as_slice().iter().sum::<f64>() - 1.0).abs() <= 1e-9);
        }
        let composed = next.compose(&ValueVector::new(vec![1.0, 1.0, 1.0])).unwrap();
        for x in composed.as_slice() {
            prop_assert!((x - 1.0).abs() <= 1e-9);
        }
    }
}
