use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use wsne::search::simplex_grid;
use wsne::{
    ane_regret, dgp_ane_to_wsne, grid_search_ane, lift_profile, perturb_certified, Game,
    MixedProfile, MixedStrategy, ReducedGame, SearchConfig,
};

#[test]
fn grid_search_on_random_two_by_two() {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let game = Game::random(2, 2, &mut rng).unwrap();
    let cfg = SearchConfig {
        grid: 40,
        eps: 0.05,
        ..Default::default()
    };
    let found = grid_search_ane(&game, &cfg)
        .unwrap()
        .expect("a 0.05-ANE on the grid");
    let regret = ane_regret(&game, &found.profile).unwrap();
    assert!(regret <= 0.05);
    assert!((regret - found.regret).abs() <= 1e-12);
}

#[test]
fn grid_search_returns_the_global_argmin() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let game = Game::random(2, 3, &mut rng).unwrap();
    let m = 6;
    let cfg = SearchConfig {
        grid: m,
        eps: 1.0,
        ..Default::default()
    };
    let found = grid_search_ane(&game, &cfg).unwrap().unwrap();
    let points = simplex_grid(3, m);
    for a in &points {
        for b in &points {
            let x = MixedProfile::new(vec![
                MixedStrategy::new(a.clone()).unwrap(),
                MixedStrategy::new(b.clone()).unwrap(),
            ])
            .unwrap();
            assert!(found.regret <= ane_regret(&game, &x).unwrap());
        }
    }
}

#[test]
fn dgp_moves_at_most_the_low_payoff_mass() {
    for t in 0..50 {
        let mut rng = ChaCha8Rng::seed_from_u64(t);
        let game = Game::random(3, 3, &mut rng).unwrap();
        let cfg = SearchConfig {
            grid: 4,
            eps: 1.0,
            ..Default::default()
        };
        let x = grid_search_ane(&game, &cfg).unwrap().unwrap().profile;
        let y = dgp_ane_to_wsne(&game, &x, 0.4, None).unwrap();
        for i in 0..3 {
            let payoffs = wsne::action_payoffs(&game, i, &x).unwrap();
            let best = payoffs.iter().cloned().fold(f64::MIN, f64::max);
            let low_mass: f64 = (0..3)
                .filter(|&k| best - payoffs[k] > 0.2)
                .map(|k| x[i][k])
                .sum();
            assert!(x[i].total_variation(&y[i]) <= low_mass + 1e-12);
            assert!((y[i].probs().iter().sum::<f64>() - 1.0).abs() <= 1e-9);
        }
    }
}

#[test]
fn certified_regret_is_reproducible() {
    let game = Game::coordination(2, 2).unwrap();
    let rg = ReducedGame::with_group_size(2, 2, 0.4, 3).unwrap();
    let x = lift_profile(&MixedProfile::pure(2, &[0, 0]).unwrap(), 3);
    let a = perturb_certified(&game, &rg, &x, 0.01, 9).unwrap();
    let b = perturb_certified(&game, &rg, &x, 0.01, 9).unwrap();
    assert_eq!(a, b);
    assert!((a.regret - rg.reduced_ane_regret(&game, &a.profile).unwrap()).abs() <= 1e-12);
    assert_eq!(a.seed, Some(9));
}
