//! Desk-scale equilibrium finders, the reallocation procedure that turns a
//! very good ANE into a WSNE, and the lift/perturb machinery that produces
//! certified approximate equilibria of reduced games.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::game::{
    action_payoffs, ane_regret, ane_regret_raw, argmax, check_tensor_size, profile_count,
    wsne_regret, Game, MixedProfile, MixedStrategy, PureProfile, DEFAULT_SIZE_LIMIT,
};
use crate::oracle::PayoffOracle;
use crate::reduction::ReducedGame;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SearchConfig {
    /// Grid resolution: probabilities are multiples of `1 / grid`.
    pub grid: usize,
    pub eps: f64,
    pub max_iterations: usize,
    pub seed: u64,
    pub tol: f64,
    /// Cap on the number of enumerated grid profiles.
    pub size_limit: u128,
}

impl Default for SearchConfig {
    fn default() -> Self {
        SearchConfig {
            grid: 10,
            eps: 0.0,
            max_iterations: 100,
            seed: 0,
            tol: crate::game::DEFAULT_TOL,
            size_limit: DEFAULT_SIZE_LIMIT,
        }
    }
}

impl SearchConfig {
    fn validate(&self) -> Result<()> {
        if self.grid == 0 {
            return Err(Error::InvalidParameter(
                "grid resolution must be >= 1".into(),
            ));
        }
        if !(self.eps >= 0.0) {
            return Err(Error::InvalidParameter(format!(
                "eps must be >= 0, got {}",
                self.eps
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EquilibriumKind {
    Ane,
    Wsne,
}

/// A profile together with its exactly recomputed regret.
#[derive(Debug, Clone, PartialEq)]
pub struct CertifiedProfile {
    pub profile: MixedProfile,
    pub regret: f64,
    pub kind: EquilibriumKind,
    /// Fingerprint of the game the regret refers to; reduced games append `/s=<s>`.
    pub game_id: String,
    pub seed: Option<u64>,
}

impl CertifiedProfile {
    pub fn certify(
        game: &Game,
        profile: MixedProfile,
        kind: EquilibriumKind,
        seed: Option<u64>,
    ) -> Result<Self> {
        let regret = match kind {
            EquilibriumKind::Ane => ane_regret(game, &profile)?,
            EquilibriumKind::Wsne => wsne_regret(game, &profile, 0.0)?,
        };
        Ok(CertifiedProfile {
            profile,
            regret,
            kind,
            game_id: game.fingerprint(),
            seed,
        })
    }

    /// ANE certificate for a profile of the reduced game.
    pub fn certify_reduced(
        game: &Game,
        rg: &ReducedGame,
        profile: MixedProfile,
        seed: Option<u64>,
    ) -> Result<Self> {
        let regret = rg.reduced_ane_regret(game, &profile)?;
        Ok(CertifiedProfile {
            profile,
            regret,
            kind: EquilibriumKind::Ane,
            game_id: format!("{}/s={}", game.fingerprint(), rg.group_size()),
            seed,
        })
    }
}

/// Every pure profile that is an `eps`-WSNE as point masses. Queries each of
/// the `alpha^n` profiles exactly once through `oracle`.
pub fn brute_force_pure_ne(oracle: &PayoffOracle<'_>, eps: f64) -> Result<Vec<PureProfile>> {
    let n = oracle.num_players();
    let alpha = oracle.num_actions();
    let profiles = check_tensor_size(n, alpha, DEFAULT_SIZE_LIMIT)?;
    let mut table = Vec::with_capacity(profiles);
    let mut profile = vec![0; n];
    for _ in 0..profiles {
        table.push(oracle.query(&profile)?);
        crate::game::advance(&mut profile, alpha);
    }
    let mut stride = vec![1usize; n];
    for p in 1..n {
        stride[p] = stride[p - 1] * alpha;
    }
    let mut found = Vec::new();
    for index in 0..profiles {
        let stable = (0..n).all(|i| {
            let own = (index / stride[i]) % alpha;
            let base = index - own * stride[i];
            let best = (0..alpha)
                .map(|k| table[base + k * stride[i]][i])
                .fold(f64::NEG_INFINITY, f64::max);
            best - table[index][i] <= eps
        });
        if stable {
            let actions = (0..n).map(|i| (index / stride[i]) % alpha).collect();
            found.push(PureProfile::new(actions, n, alpha)?);
        }
    }
    Ok(found)
}

/// Points of the simplex with coordinates in multiples of `1 / m`, in
/// lexicographic order of their count vectors.
pub fn simplex_grid(alpha: usize, m: usize) -> Vec<Vec<f64>> {
    fn rec(alpha: usize, left: usize, prefix: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if prefix.len() == alpha - 1 {
            prefix.push(left);
            out.push(prefix.clone());
            prefix.pop();
            return;
        }
        for c in 0..=left {
            prefix.push(c);
            rec(alpha, left - c, prefix, out);
            prefix.pop();
        }
    }
    let mut counts = Vec::new();
    rec(alpha, m, &mut Vec::with_capacity(alpha), &mut counts);
    counts
        .into_iter()
        .map(|c| c.into_iter().map(|k| k as f64 / m as f64).collect())
        .collect()
}

/// Exhaustive search of the product grid for the profile with the smallest
/// ANE regret; returned only if that regret is at most `cfg.eps`. Ties go to
/// the lexicographically smallest profile.
pub fn grid_search_ane(game: &Game, cfg: &SearchConfig) -> Result<Option<CertifiedProfile>> {
    cfg.validate()?;
    let n = game.num_players();
    let points = simplex_grid(game.num_actions(), cfg.grid);
    let per_player = points.len();
    let total = profile_count(n, per_player).unwrap_or(u128::MAX);
    if total > cfg.size_limit {
        return Err(Error::SizeLimit {
            required: total,
            limit: cfg.size_limit,
        });
    }
    let total = total as usize;
    let decode = |mut idx: usize, out: &mut Vec<usize>| {
        out.clear();
        out.resize(n, 0);
        // player 0 is the most significant digit
        for slot in out.iter_mut().rev() {
            *slot = idx % per_player;
            idx /= per_player;
        }
    };
    let (best_idx, _) = (0..total)
        .into_par_iter()
        .map_init(
            || Vec::with_capacity(n),
            |digits, idx| {
                decode(idx, digits);
                let strategies: Vec<&[f64]> = digits.iter().map(|&d| &points[d][..]).collect();
                (idx, ane_regret_raw(game, &strategies))
            },
        )
        .reduce(
            || (usize::MAX, f64::INFINITY),
            |a, b| {
                if b.1 < a.1 || (b.1 == a.1 && b.0 < a.0) {
                    b
                } else {
                    a
                }
            },
        );
    let mut digits = Vec::new();
    decode(best_idx, &mut digits);
    let profile = MixedProfile::new(
        digits
            .iter()
            .map(|&d| MixedStrategy::new(points[d].clone()))
            .collect::<Result<_>>()?,
    )?;
    let certified = CertifiedProfile::certify(game, profile, EquilibriumKind::Ane, None)?;
    Ok((certified.regret <= cfg.eps).then_some(certified))
}

/// Sequential pure best-response dynamics from `start` (or a seeded random
/// profile): each step moves the first player with a strictly better action
/// to its best response. Stops at a fixpoint or after `cfg.max_iterations`
/// steps and returns the lowest-regret profile visited.
pub fn best_response_dynamics(
    game: &Game,
    cfg: &SearchConfig,
    start: Option<&[usize]>,
) -> Result<CertifiedProfile> {
    let n = game.num_players();
    let alpha = game.num_actions();
    let mut current: Vec<usize> = match start {
        Some(s) => PureProfile::new(s.to_vec(), n, alpha)?.into_inner(),
        None => {
            let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
            (0..n).map(|_| rng.gen_range(0..alpha)).collect()
        }
    };
    let regret_of =
        |a: &[usize]| -> Result<f64> { ane_regret(game, &MixedProfile::pure(alpha, a)?) };
    let mut best = (regret_of(&current)?, current.clone());
    for _ in 0..cfg.max_iterations {
        let x = MixedProfile::pure(alpha, &current)?;
        let mut moved = false;
        for i in 0..n {
            let payoffs = action_payoffs(game, i, &x)?;
            let br = argmax(&payoffs);
            if payoffs[br] > payoffs[current[i]] {
                current[i] = br;
                moved = true;
                break;
            }
        }
        if !moved {
            break;
        }
        let r = regret_of(&current)?;
        if r < best.0 {
            best = (r, current.clone());
        }
    }
    CertifiedProfile::certify(
        game,
        MixedProfile::pure(alpha, &best.1)?,
        EquilibriumKind::Ane,
        start.is_none().then_some(cfg.seed),
    )
}

/// For each player, moves all mass on actions more than `theta` below its
/// best response (against the input profile) onto that best response.
/// `theta` defaults to `eps / 2`.
pub fn dgp_ane_to_wsne(
    game: &Game,
    x: &MixedProfile,
    eps: f64,
    theta: Option<f64>,
) -> Result<MixedProfile> {
    if !(eps > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "eps must be positive, got {eps}"
        )));
    }
    let theta = theta.unwrap_or(eps / 2.0);
    if !(theta > 0.0 && theta <= eps) {
        return Err(Error::InvalidParameter(format!(
            "theta must lie in (0, eps], got {theta}"
        )));
    }
    let mut strategies = Vec::with_capacity(game.num_players());
    for i in 0..game.num_players() {
        let payoffs = action_payoffs(game, i, x)?;
        let br = argmax(&payoffs);
        let mut probs = x[i].probs().to_vec();
        let mut moved = 0.0;
        for (k, p) in probs.iter_mut().enumerate() {
            if payoffs[br] - payoffs[k] > theta {
                moved += *p;
                *p = 0.0;
            }
        }
        probs[br] += moved;
        strategies.push(MixedStrategy::new(probs)?);
    }
    MixedProfile::new(strategies)
}

/// Every member of group `i` plays `x_i`.
pub fn lift_profile(x: &MixedProfile, s: usize) -> MixedProfile {
    let strategies = x
        .strategies()
        .iter()
        .flat_map(|st| std::iter::repeat_n(st.clone(), s))
        .collect();
    MixedProfile::new(strategies).expect("lifted strategies share an action count")
}

/// Adds seeded uniform noise in `[-delta, delta]` to every entry, clamps
/// negatives to zero, renormalizes, and certifies the result in the reduced
/// game. A strategy whose entries all clamp to zero is left unchanged.
pub fn perturb_certified(
    game: &Game,
    rg: &ReducedGame,
    x: &MixedProfile,
    delta: f64,
    seed: u64,
) -> Result<CertifiedProfile> {
    let perturbed = perturb(x, delta, seed)?;
    CertifiedProfile::certify_reduced(game, rg, perturbed, Some(seed))
}

pub fn perturb(x: &MixedProfile, delta: f64, seed: u64) -> Result<MixedProfile> {
    if !(0.0..1.0).contains(&delta) {
        return Err(Error::InvalidParameter(format!(
            "delta must lie in [0, 1), got {delta}"
        )));
    }
    if delta == 0.0 {
        return Ok(x.clone());
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let strategies = x
        .strategies()
        .iter()
        .map(|st| {
            let noisy: Vec<f64> = st
                .probs()
                .iter()
                .map(|&p| (p + rng.gen_range(-delta..=delta)).max(0.0))
                .collect();
            let total: f64 = noisy.iter().sum();
            if total <= 0.0 {
                return Ok(st.clone());
            }
            MixedStrategy::new(noisy.iter().map(|v| (v / total).min(1.0)).collect())
        })
        .collect::<Result<Vec<_>>>()?;
    MixedProfile::new(strategies)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn one_player(a: f64, b: f64) -> Game {
        Game::new(1, 2, vec![a, b]).unwrap()
    }

    #[test]
    fn pure_ne_enumeration() {
        let mp = Game::matching_pennies();
        assert!(brute_force_pure_ne(&PayoffOracle::new(&mp), 0.0)
            .unwrap()
            .is_empty());
        let coord = Game::coordination(2, 2).unwrap();
        let found = brute_force_pure_ne(&PayoffOracle::new(&coord), 0.0).unwrap();
        let found: Vec<Vec<usize>> = found.into_iter().map(PureProfile::into_inner).collect();
        assert_eq!(found, vec![vec![0, 0], vec![1, 1]]);
    }

    #[test]
    fn pure_ne_query_count() {
        let g = Game::coordination(3, 2).unwrap();
        let oracle = PayoffOracle::raw(&g);
        brute_force_pure_ne(&oracle, 0.0).unwrap();
        assert_eq!(oracle.snapshot().total_queries, 8);
    }

    #[test]
    fn simplex_grid_counts() {
        assert_eq!(
            simplex_grid(2, 2),
            vec![vec![0.0, 1.0], vec![0.5, 0.5], vec![1.0, 0.0]]
        );
        assert_eq!(simplex_grid(3, 4).len(), 15);
        assert_eq!(simplex_grid(2, 1).len(), 2);
    }

    #[test]
    fn grid_finds_pennies_equilibrium() {
        let mp = Game::matching_pennies();
        let cfg = SearchConfig {
            grid: 2,
            ..Default::default()
        };
        let found = grid_search_ane(&mp, &cfg).unwrap().unwrap();
        assert_eq!(found.profile, MixedProfile::uniform(2, 2));
        assert_eq!(found.regret, 0.0);
        let cfg = SearchConfig {
            grid: 1,
            ..Default::default()
        };
        assert!(grid_search_ane(&mp, &cfg).unwrap().is_none());
    }

    #[test]
    fn grid_on_constant_game() {
        let g = Game::constant(2, 3, 0.4).unwrap();
        let cfg = SearchConfig {
            grid: 1,
            eps: 0.1,
            ..Default::default()
        };
        let found = grid_search_ane(&g, &cfg).unwrap().unwrap();
        assert_eq!(found.regret, 0.0);
    }

    #[test]
    fn grid_size_limit() {
        let g = Game::constant(4, 3, 0.4).unwrap();
        let cfg = SearchConfig {
            grid: 50,
            size_limit: 1000,
            ..Default::default()
        };
        assert!(matches!(
            grid_search_ane(&g, &cfg),
            Err(Error::SizeLimit { .. })
        ));
    }

    #[test]
    fn brd_reaches_coordination() {
        let g = Game::coordination(2, 2).unwrap();
        let cfg = SearchConfig {
            max_iterations: 2,
            ..Default::default()
        };
        let found = best_response_dynamics(&g, &cfg, Some(&[0, 1])).unwrap();
        assert_eq!(found.regret, 0.0);
        let fixed = best_response_dynamics(&g, &cfg, Some(&[1, 1])).unwrap();
        assert_eq!(fixed.profile, MixedProfile::pure(2, &[1, 1]).unwrap());
    }

    #[test]
    fn brd_cycles_on_pennies() {
        let g = Game::matching_pennies();
        let cfg = SearchConfig {
            max_iterations: 20,
            seed: 3,
            ..Default::default()
        };
        assert_eq!(best_response_dynamics(&g, &cfg, None).unwrap().regret, 1.0);
    }

    #[test]
    fn dgp_examples() {
        let g = one_player(1.0, 0.2);
        let x = MixedProfile::new(vec![MixedStrategy::new(vec![0.99, 0.01]).unwrap()]).unwrap();
        let y = dgp_ane_to_wsne(&g, &x, 0.4, None).unwrap();
        assert_eq!(y[0].probs(), &[1.0, 0.0]);

        let mp = Game::matching_pennies();
        let u = MixedProfile::uniform(2, 2);
        assert_eq!(dgp_ane_to_wsne(&mp, &u, 0.1, None).unwrap(), u);
        assert!(dgp_ane_to_wsne(&mp, &u, 0.1, Some(0.2)).is_err());
        assert!(dgp_ane_to_wsne(&mp, &u, 0.0, None).is_err());
    }

    #[test]
    fn lift_and_certify() {
        let coord = Game::coordination(2, 2).unwrap();
        let rg = ReducedGame::with_group_size(2, 2, 0.4, 3).unwrap();
        let lifted = lift_profile(&MixedProfile::pure(2, &[0, 0]).unwrap(), 3);
        assert_eq!(lifted.num_players(), 6);
        assert_eq!(rg.reduced_ane_regret(&coord, &lifted).unwrap(), 0.0);

        let mp = Game::matching_pennies();
        let lifted = lift_profile(&MixedProfile::uniform(2, 2), 3);
        assert_eq!(rg.reduced_ane_regret(&mp, &lifted).unwrap(), 0.0);
    }

    #[test]
    fn singleton_lift_matches_source_regret() {
        let mp = Game::matching_pennies();
        let rg = ReducedGame::with_group_size(2, 2, 0.4, 1).unwrap();
        let x = MixedProfile::new(vec![
            MixedStrategy::new(vec![0.3, 0.7]).unwrap(),
            MixedStrategy::new(vec![0.8, 0.2]).unwrap(),
        ])
        .unwrap();
        let lifted = lift_profile(&x, 1);
        let a = rg.reduced_ane_regret(&mp, &lifted).unwrap();
        assert!((a - ane_regret(&mp, &x).unwrap()).abs() < 1e-15);
    }

    #[test]
    fn perturbation_contract() {
        let coord = Game::coordination(2, 2).unwrap();
        let rg = ReducedGame::with_group_size(2, 2, 0.4, 3).unwrap();
        let lifted = lift_profile(&MixedProfile::pure(2, &[1, 1]).unwrap(), 3);
        let same = perturb_certified(&coord, &rg, &lifted, 0.0, 1).unwrap();
        assert_eq!(same.regret, 0.0);
        assert_eq!(same.profile, lifted);
        let noisy = perturb_certified(&coord, &rg, &lifted, 0.01, 1).unwrap();
        assert_eq!(
            noisy.regret,
            rg.reduced_ane_regret(&coord, &noisy.profile).unwrap()
        );
        for st in noisy.profile.strategies() {
            assert!((st.probs().iter().sum::<f64>() - 1.0).abs() < 1e-9);
        }
        assert!(perturb(&lifted, 1.0, 0).is_err());
    }
}
