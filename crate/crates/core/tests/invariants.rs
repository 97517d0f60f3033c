//! Property-based checks for the algebraic identities the library relies on.

use alr_core::fmtnum::format_sig;
use alr_core::labels::{erase, one_hot, residual_position, smooth, unerase, ClassIndex};
use alr_core::losses::{
    cross_entropy, hard_ce, kd_soft_loss, kd_target, smoothed_ce, total_loss, KdConfig, Prefactor,
};
use alr_core::numeric::{entropy, softmax};
use alr_core::residual::ResidualCorrelationMatrix;
use proptest::prelude::*;

fn logits() -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-10.0f64..10.0, 2..=10)
}

fn logits_min3() -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-10.0f64..10.0, 3..=10)
}

fn logits_mild() -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-4.0f64..4.0, 2..=10)
}

fn paired_logits(min_len: usize) -> impl Strategy<Value = (Vec<f64>, Vec<f64>)> {
    (min_len..=10).prop_flat_map(|n| {
        (
            prop::collection::vec(-10.0f64..10.0, n),
            prop::collection::vec(-10.0f64..10.0, n),
        )
    })
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

proptest! {
    #[test]
    fn softmax_is_a_shift_invariant_distribution(z in logits(), shift in -5.0f64..5.0) {
        let p = softmax(&z).unwrap();
        prop_assert!((p.iter().sum::<f64>() - 1.0).abs() <= 1e-12);
        prop_assert!(p.iter().all(|&v| v > 0.0 && v <= 1.0));

        let shifted: Vec<f64> = z.iter().map(|v| v + shift).collect();
        let p_shift = softmax(&shifted).unwrap();
        for (a, b) in p.iter().zip(&p_shift) {
            prop_assert!((a - b).abs() <= 1e-12);
        }
    }

    #[test]
    fn entropy_stays_within_bounds(z in logits()) {
        let p = softmax(&z).unwrap();
        let h = entropy(&p);
        prop_assert!(h >= 0.0);
        prop_assert!(h <= (p.len() as f64).ln() + 1e-12);
    }

    #[test]
    fn erase_then_unerase_restores_the_vector(z in logits(), pick in 0usize..100) {
        let k = z.len();
        let class = ClassIndex::new(pick % k, k).unwrap();
        let erased = erase(&z, class).unwrap();
        prop_assert_eq!(erased.len(), k - 1);
        let restored = unerase(&erased, class, z[class.k()]).unwrap();
        prop_assert_eq!(&restored, &z);

        for full in 0..k {
            match residual_position(class, full) {
                None => prop_assert_eq!(full, class.k()),
                Some(j) => prop_assert_eq!(erased[j], z[full]),
            }
        }
    }

    #[test]
    fn erased_softmax_is_the_renormalized_tail(z in logits_mild(), pick in 0usize..100) {
        let k = z.len();
        let class = ClassIndex::new(pick % k, k).unwrap();
        let p = softmax(&z).unwrap();
        let p_res = softmax(&erase(&z, class).unwrap()).unwrap();
        let keep = 1.0 - p[class.k()];
        for full in 0..k {
            if let Some(j) = residual_position(class, full) {
                prop_assert!((p_res[j] - p[full] / keep).abs() <= 1e-11);
            }
        }
    }

    #[test]
    fn label_constructors_return_distributions(z in logits(), pick in 0usize..100, eps in 0.0f64..0.9) {
        let k = z.len();
        let class = ClassIndex::new(pick % k, k).unwrap();
        let hot = one_hot(class);
        prop_assert!((hot.iter().sum::<f64>() - 1.0).abs() == 0.0);
        let smoothed = smooth(class, eps).unwrap();
        prop_assert!((smoothed.iter().sum::<f64>() - 1.0).abs() <= 1e-12);
        prop_assert!(smoothed.iter().all(|&v| (0.0..=1.0).contains(&v)));
        // The truth entry dominates as long as the mass taken from it does
        // not exceed what each other class receives.
        if eps <= (k - 1) as f64 / k as f64 {
            prop_assert!(smoothed[class.k()] >= smoothed[(class.k() + 1) % k]);
        }
    }

    #[test]
    fn gradients_sum_to_zero(z in logits(), pick in 0usize..100, eps in 0.0f64..0.9, t in 0.5f64..5.0) {
        let k = z.len();
        let class = ClassIndex::new(pick % k, k).unwrap();

        let (_, g) = hard_ce(&z, class, Prefactor::Unit).unwrap();
        prop_assert!(g.iter().sum::<f64>().abs() <= 1e-12);

        let (_, g) = smoothed_ce(&z, class, eps, Prefactor::Unit).unwrap();
        prop_assert!(g.iter().sum::<f64>().abs() <= 1e-12);

        let q_soft = softmax(&z.iter().map(|v| -v).collect::<Vec<_>>()).unwrap();
        let (_, g) = kd_soft_loss(&z, &q_soft, t, Prefactor::Unit).unwrap();
        prop_assert!(g.iter().sum::<f64>().abs() <= 1e-12);
    }

    #[test]
    fn cross_entropy_obeys_gibbs((z, target_seed) in paired_logits(2)) {
        // Cross-entropy against any target is at least the target's entropy,
        // with equality only when the prediction matches the target.
        let target = softmax(&target_seed).unwrap();
        let (loss, _) = cross_entropy(&z, &target, Prefactor::Unit).unwrap();
        prop_assert!(loss >= entropy(&target) - 1e-12);
    }

    #[test]
    fn kd_target_lies_on_the_simplex(z in logits(), pick in 0usize..100, alpha in 0.0f64..1.0, t in 0.5f64..5.0) {
        let k = z.len();
        let class = ClassIndex::new(pick % k, k).unwrap();
        let q_soft = softmax(&z).unwrap();
        let cfg = KdConfig::new(alpha, t).unwrap();
        let target = kd_target(class, &q_soft, cfg).unwrap();
        prop_assert!((target.iter().sum::<f64>() - 1.0).abs() <= 1e-12);
        prop_assert!(target.iter().all(|&v| v >= 0.0));
    }

    #[test]
    fn residual_contribution_scales_linearly_with_inaccuracy(
        z in logits_min3(),
        s_seed in logits_min3(),
        pick in 0usize..100,
        acc in 0.0f64..1.0,
    ) {
        let k = z.len();
        let class = ClassIndex::new(pick % k, k).unwrap();
        let mut s = ResidualCorrelationMatrix::new(k).unwrap();
        for r in 0..k {
            for c in 0..k - 1 {
                s.logits_mut().set(r, c, s_seed[(r + c) % s_seed.len()]);
            }
        }

        let at = |a: f64| total_loss(&z, class, &s, a, None, Prefactor::Unit).unwrap();
        let hard_only = at(1.0);
        let full = at(0.0);
        let mid = at(acc);

        // The hard-accuracy gradient carries no residual contribution, and
        // the contribution at accuracy `a` is (1 - a) times the full one.
        let contribution: Vec<f64> = mid
            .grad_z
            .iter()
            .zip(&hard_only.grad_z)
            .map(|(g, h)| g - h)
            .collect();
        let full_contribution: Vec<f64> = full
            .grad_z
            .iter()
            .zip(&hard_only.grad_z)
            .map(|(g, h)| g - h)
            .collect();
        let expected = (1.0 - acc) * norm(&full_contribution);
        prop_assert!((norm(&contribution) - expected).abs() <= 1e-9 * (1.0 + expected));

        // Monotone: more accuracy, no larger a residual term.
        prop_assert!(norm(&contribution) <= norm(&full_contribution) + 1e-12);
        prop_assert!(mid.res_weight >= 0.0 && mid.res_weight <= 1.0);
    }

    #[test]
    fn residual_rows_are_distributions_with_zero_truth_gradient(
        (z, s_seed) in paired_logits(3),
        pick in 0usize..100,
    ) {
        let k = s_seed.len();
        let class = ClassIndex::new(pick % k, k).unwrap();
        let mut s = ResidualCorrelationMatrix::new(k).unwrap();
        for r in 0..k {
            for c in 0..k - 1 {
                s.logits_mut().set(r, c, s_seed[(r * 31 + c) % k]);
            }
        }
        let q = s.residual_label(class).unwrap();
        prop_assert!((q.iter().sum::<f64>() - 1.0).abs() <= 1e-12);

        let bundle = total_loss(&z, class, &s, 0.25, None, Prefactor::Unit).unwrap();
        // The residual term never pulls on the true-class logit beyond the
        // hard loss, so the difference vanishes there exactly.
        let (_, g_hard) = hard_ce(&z, class, Prefactor::Unit).unwrap();
        prop_assert_eq!(bundle.grad_z[class.k()], g_hard[class.k()]);
    }

    #[test]
    fn formatted_numbers_round_trip_to_nine_digits(m in 1.0f64..10.0, e in -12i32..=12, neg in any::<bool>()) {
        let x = if neg { -m } else { m } * 10.0f64.powi(e);
        let text = format_sig(x, 9);
        let back: f64 = text.parse().unwrap();
        prop_assert!((back - x).abs() <= 6e-9 * x.abs(), "{x} -> {text} -> {back}");
    }
}
