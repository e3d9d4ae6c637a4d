mod common;

use common::{permutations, GradCase};
use proptest::prelude::*;
use quadrl_core::rl::{
    advantages, arpo_gradient, arpo_gradient_pairwise, arpo_loss, dpo_loss, pl_score_logprob, ArpoConfig, GroupSamples,
    Sample,
};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn plackett_luce_sums_to_one(s in proptest::collection::vec(-8.0f64..8.0, 1..=5)) {
        let total: f64 = permutations(s.len())
            .iter()
            .map(|p| pl_score_logprob(&p.iter().map(|&i| s[i]).collect::<Vec<_>>()).exp())
            .sum();
        prop_assert!((total - 1.0).abs() <= 1e-9, "{}", total);
    }

    #[test]
    fn loss_is_shift_invariant(
        logp in proptest::collection::vec(-20.0f64..0.0, 2..=6),
        shift in -50.0f64..50.0,
        beta in 0.05f64..5.0,
    ) {
        let rewards: Vec<f64> = (0..logp.len()).map(|i| (i * 7 % 5) as f64).collect();
        let group = |d: f64| GroupSamples::new(
            logp.iter().zip(&rewards).map(|(&l, &r)| Sample::new(l + d, -3.0, r)).collect()
        ).unwrap();
        let cfg = ArpoConfig { beta, ..ArpoConfig::default() };
        let (a, b) = (arpo_loss(&group(0.0), &cfg).unwrap(), arpo_loss(&group(shift), &cfg).unwrap());
        prop_assert!((a - b).abs() <= 1e-9 * a.abs().max(1.0));
    }

    #[test]
    fn two_sample_arpo_is_dpo(
        w in -10.0f64..10.0, l in -10.0f64..10.0, beta in 0.01f64..10.0, rw in 0.0f64..5.0, gap in 0.01f64..5.0,
    ) {
        let cfg = ArpoConfig { beta, eps: 0.0, k: 2 };
        let group = GroupSamples::new(vec![Sample::new(l, 0.0, rw), Sample::new(w, 0.0, rw + gap)]).unwrap();
        prop_assert!((arpo_loss(&group, &cfg).unwrap() - dpo_loss(w, l, beta)).abs() < 1e-12);
    }

    #[test]
    fn advantage_guard_scales_dpo_loss(
        w in -10.0f64..10.0, l in -10.0f64..10.0, beta in 0.01f64..10.0, rw in 0.0f64..5.0, gap in 0.01f64..5.0,
    ) {
        // the guard scales the loss by the winner's advantage gap / (gap + eps)
        let cfg = ArpoConfig { beta, eps: 1e-8, k: 2 };
        let group = GroupSamples::new(vec![Sample::new(l, 0.0, rw), Sample::new(w, 0.0, rw + gap)]).unwrap();
        let dpo = dpo_loss(w, l, beta);
        let diff = (arpo_loss(&group, &cfg).unwrap() - dpo).abs();
        prop_assert!((diff - dpo * cfg.eps / (gap + cfg.eps)).abs() < 1e-12, "{diff}");
    }

    #[test]
    fn advantages_are_normalized(r in proptest::collection::vec(-5.0f64..5.0, 1..=8)) {
        let a = advantages(&r, 1e-8);
        prop_assert!(a.iter().all(|&x| (0.0..=1.0).contains(&x)));
        let spread = r.iter().cloned().fold(f64::NEG_INFINITY, f64::max) - r.iter().cloned().fold(f64::INFINITY, f64::min);
        if spread > 1e-3 {
            prop_assert!((a.iter().sum::<f64>() - 1.0).abs() < 1e-6);
        }
    }
}

#[test]
fn gradient_matches_finite_differences() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for beta in [0.1, 1.0, 10.0] {
        for k in [2, 3, 4, 8] {
            for _ in 0..3 {
                let case = GradCase::random(&mut rng, k, beta);
                let err = case.relative_error();
                assert!(err < 1e-4, "beta {beta} k {k}: {err}");
            }
        }
    }
}

#[test]
fn pairwise_form_is_exact_only_for_two() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let grads = |c: &GradCase| -> Vec<Vec<f64>> {
        c.sequences.iter().map(|s| c.policy.logprob_grad(0, s, None).unwrap()).collect()
    };
    let group = |c: &GradCase| {
        GroupSamples::new(
            c.sequences
                .iter()
                .zip(&c.rewards)
                .map(|(s, &r)| {
                    Sample::new(
                        c.policy.sequence_logprob(0, s, None).unwrap(),
                        c.reference.sequence_logprob(0, s, None).unwrap(),
                        r,
                    )
                })
                .collect(),
        )
        .unwrap()
    };
    let two = GradCase::random(&mut rng, 2, 1.0);
    let (e, p) = (
        arpo_gradient(&group(&two), &grads(&two), &two.cfg).unwrap(),
        arpo_gradient_pairwise(&group(&two), &grads(&two), &two.cfg).unwrap(),
    );
    assert!(e.iter().zip(&p).all(|(a, b)| (a - b).abs() < 1e-12));
    let four = GradCase::random(&mut rng, 4, 1.0);
    let (e, p) = (
        arpo_gradient(&group(&four), &grads(&four), &four.cfg).unwrap(),
        arpo_gradient_pairwise(&group(&four), &grads(&four), &four.cfg).unwrap(),
    );
    assert!(e.iter().zip(&p).any(|(a, b)| (a - b).abs() > 1e-6));
}

#[test]
fn equal_rewards_give_zero_loss_and_gradient() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut case = GradCase::random(&mut rng, 4, 1.0);
    case.rewards = vec![2.5; 4];
    assert_eq!(case.loss_at(case.policy.params()), 0.0);
    assert!(case.analytic().iter().all(|&g| g == 0.0));
}
