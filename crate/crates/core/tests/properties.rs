mod common;

use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use wsne::{
    action_payoff, ane_regret, compile_reduced_circuit, expected_payoff, lift_tabular,
    majority_distribution, verify_ane, verify_wsne, wsne_regret, Game, MixedProfile, PayoffOracle,
    ReducedGame,
};

use common::*;

fn game_and_profile(seed: u64, n: usize, alpha: usize, sparse: bool) -> (Game, MixedProfile) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let game = Game::random(n, alpha, &mut rng).unwrap();
    let rows: Vec<Vec<f64>> = (0..n)
        .map(|i| {
            let mut p = random_strategy(alpha, &mut rng);
            if sparse && i % 2 == 0 {
                // zero out one action to exercise supports
                p[0] = 0.0;
                let t: f64 = p.iter().sum();
                p.iter_mut().for_each(|v| *v /= t);
            }
            p
        })
        .collect();
    (game, MixedProfile::new(to_strategies(&rows)).unwrap())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn payoff_is_linear_in_own_strategy(seed in any::<u64>(), n in 1usize..=4, alpha in 2usize..=3, sparse: bool) {
        let (game, x) = game_and_profile(seed, n, alpha, sparse);
        for i in 0..n {
            let mixed: f64 = (0..alpha)
                .map(|k| x[i].probs()[k] * action_payoff(&game, i, k, &x).unwrap())
                .sum();
            prop_assert!((expected_payoff(&game, i, &x).unwrap() - mixed).abs() <= 1e-12);
        }
    }

    #[test]
    fn regrets_are_ordered_and_bounded(seed in any::<u64>(), n in 1usize..=4, alpha in 2usize..=3, sparse: bool) {
        let (game, x) = game_and_profile(seed, n, alpha, sparse);
        let ane = ane_regret(&game, &x).unwrap();
        let wsne = wsne_regret(&game, &x, 0.0).unwrap();
        prop_assert!((-1e-12..=1.0).contains(&ane));
        prop_assert!((-1e-12..=1.0).contains(&wsne));
        prop_assert!(ane <= wsne + 1e-12);
        for eps in [0.05, 0.2, 0.5] {
            if verify_wsne(&game, &x, eps, 0.0).unwrap() {
                prop_assert!(verify_ane(&game, &x, eps, 0.0).unwrap());
            }
        }
    }

    #[test]
    fn majority_dp_matches_enumeration(seed in any::<u64>(), s in 1usize..=8, alpha in 2usize..=3) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let rows: Vec<Vec<f64>> = (0..s).map(|_| random_strategy(alpha, &mut rng)).collect();
        let dp = majority_distribution(&to_strategies(&rows), alpha).unwrap();
        let brute = brute_majority_distribution(&rows, alpha);
        for k in 0..alpha {
            prop_assert!((dp[k] - brute[k]).abs() <= 1e-12);
        }
    }

    #[test]
    fn truncation_support_and_mass(seed in any::<u64>(), n in 2usize..=3, alpha in 2usize..=3, s in 1usize..=6, eps in 0.0f64..0.5) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let rg = ReducedGame::with_group_size(n, alpha, 0.4, s).unwrap();
        let rows: Vec<Vec<f64>> = (0..rg.num_players()).map(|_| random_strategy(alpha, &mut rng)).collect();
        let x = MixedProfile::new(to_strategies(&rows)).unwrap();
        match rg.recover_wsne(&x, eps) {
            Ok(rec) => {
                for i in 0..n {
                    for k in 0..alpha {
                        if rec.profile[i][k] > 0.0 {
                            prop_assert!(rec.majority[i][k] > eps / n as f64);
                        }
                    }
                    let tv = rec.majority[i].total_variation(&rec.profile[i]);
                    prop_assert!(tv <= alpha as f64 * eps / n as f64 + 1e-15);
                    prop_assert!((rec.profile[i].probs().iter().sum::<f64>() - 1.0).abs() <= 1e-9);
                }
            }
            // only possible when every entry of some group falls below eps/n
            Err(wsne::Error::DegenerateRenormalization { .. }) => {
                prop_assert!(alpha as f64 * eps / n as f64 >= 1.0 - 1e-12);
            }
            Err(e) => return Err(TestCaseError::fail(e.to_string())),
        }
    }

    #[test]
    fn oracle_answers_are_faithful_and_counts_monotone(seed in any::<u64>(), n in 1usize..=4, alpha in 2usize..=3, raw: bool) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let game = Game::random(n, alpha, &mut rng).unwrap();
        let oracle = if raw { PayoffOracle::raw(&game) } else { PayoffOracle::new(&game) };
        let mut last = oracle.snapshot();
        for idx in (0..game.num_profiles()).chain(0..game.num_profiles()) {
            let profile = game.profile_at(idx);
            let answer = oracle.query(&profile).unwrap();
            prop_assert_eq!(answer, game.payoffs_at(&profile).to_vec());
            let now = oracle.snapshot();
            prop_assert!(now.total_queries >= last.total_queries);
            prop_assert!(now.distinct_queries >= last.distinct_queries);
            last = now;
        }
        prop_assert_eq!(last.distinct_queries, game.num_profiles() as u64);
    }

    #[test]
    fn compiled_program_matches_reduction(seed in any::<u64>(), alpha in 2usize..=3, s in 1usize..=2) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let game = Game::random(2, alpha, &mut rng).unwrap();
        let compiled = compile_reduced_circuit(&lift_tabular(&game), 0.4, Some(s)).unwrap();
        let rg = ReducedGame::with_group_size(2, alpha, 0.4, s).unwrap();
        let players = rg.num_players();
        let mut profile = vec![0usize; players];
        for mut idx in 0..alpha.pow(players as u32) {
            for slot in profile.iter_mut() {
                *slot = idx % alpha;
                idx /= alpha;
            }
            let out = compiled.evaluate(&profile).unwrap();
            for (flat, v) in out.iter().enumerate() {
                let want = rg.reduced_payoff(&game, rg.player_at(flat), &profile).unwrap();
                prop_assert!((v - want).abs() <= 1e-12);
            }
        }
    }
}
