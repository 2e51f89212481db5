//! The majority-group reduction.
//!
//! Every player `i` of an `n`-player game `G` becomes a group of `s` players
//! `(i, j)` in a game `G'`. Player `(i, j)` is paid `u_i(a_{i,j}, abar_{-i})`,
//! where `abar_m` is group `m`'s majority action (ties to the smallest
//! index). With `s = 2 alpha^2 ceil(ln(n / eps))`, an `eps`-ANE of `G'`
//! yields a `4 alpha eps`-WSNE of `G` by taking each group's majority
//! distribution and truncating entries at or below `eps / n`.

use std::collections::hash_map::DefaultHasher;
use std::collections::HashMap;
use std::hash::BuildHasherDefault;

use crate::error::{Error, Result};
use crate::game::{action_payoffs_raw, check_profile, Game, MixedProfile, MixedStrategy};
use crate::oracle::PayoffOracle;

/// Distance to an integer below which `ln(n / eps)` is snapped before the ceiling.
pub const CEIL_SNAP: f64 = 1e-12;

/// `s = 2 alpha^2 ceil(ln(n / eps))`, at least 1.
///
/// A logarithm within [`CEIL_SNAP`] of an integer is treated as that integer,
/// so `n / eps = e^k` gives `k` regardless of the last ulp. When `n <= eps`
/// the formula is non-positive and the group size is 1.
pub fn group_size(n: usize, alpha: usize, eps: f64) -> Result<usize> {
    if !(eps > 0.0) || !eps.is_finite() {
        return Err(Error::InvalidParameter(format!(
            "eps must be positive, got {eps}"
        )));
    }
    if n == 0 || alpha < 2 {
        return Err(Error::InvalidParameter(format!(
            "need n >= 1 and alpha >= 2, got n={n}, alpha={alpha}"
        )));
    }
    let log = (n as f64 / eps).ln();
    let nearest = log.round();
    let ceil = if (log - nearest).abs() <= CEIL_SNAP {
        nearest
    } else {
        log.ceil()
    };
    if ceil <= 0.0 {
        return Ok(1);
    }
    let s = 2.0 * (alpha * alpha) as f64 * ceil;
    if s > u32::MAX as f64 {
        return Err(Error::InvalidParameter(format!(
            "group size {s} is too large"
        )));
    }
    Ok(s as usize)
}

/// Most frequent action, ties to the smallest index.
pub fn majority(actions: &[usize], alpha: usize) -> Result<usize> {
    if actions.is_empty() {
        return Err(Error::InvalidParameter("majority of an empty group".into()));
    }
    let mut counts = vec![0usize; alpha];
    for &a in actions {
        if a >= alpha {
            return Err(Error::ActionOutOfRange { action: a, alpha });
        }
        counts[a] += 1;
    }
    Ok(majority_of_counts(&counts))
}

fn majority_of_counts<C: Copy + PartialOrd>(counts: &[C]) -> usize {
    let mut best = 0;
    for k in 1..counts.len() {
        if counts[k] > counts[best] {
            best = k;
        }
    }
    best
}

type CountMap = HashMap<Vec<u32>, f64, BuildHasherDefault<DefaultHasher>>;

/// Exact distribution of the majority action when each member plays its own
/// strategy independently.
///
/// Members are folded in one at a time while tracking the distribution over
/// action-count vectors (compositions of the members seen so far into
/// `alpha` parts); each final count vector is then assigned to its majority.
/// The hasher is fixed so summation order, and hence output bits, are
/// reproducible.
pub fn majority_distribution(block: &[MixedStrategy], alpha: usize) -> Result<MixedStrategy> {
    if block.is_empty() {
        return Err(Error::InvalidParameter("majority of an empty group".into()));
    }
    if let Some(bad) = block.iter().find(|s| s.num_actions() != alpha) {
        return Err(Error::DimensionMismatch {
            what: "strategy length",
            expected: alpha,
            found: bad.num_actions(),
        });
    }
    let mut layer = CountMap::default();
    layer.insert(vec![0; alpha], 1.0);
    for strategy in block {
        let mut next = CountMap::with_capacity_and_hasher(layer.len() * 2, Default::default());
        for (counts, p) in &layer {
            for (k, &q) in strategy.probs().iter().enumerate() {
                if q == 0.0 {
                    continue;
                }
                let mut c = counts.clone();
                c[k] += 1;
                *next.entry(c).or_insert(0.0) += p * q;
            }
        }
        layer = next;
    }
    let mut dist = vec![0.0; alpha];
    for (counts, p) in &layer {
        dist[majority_of_counts(counts)] += p;
    }
    // rounding can push the sum a few ulps past 1 or an entry past [0, 1]
    for v in &mut dist {
        *v = v.clamp(0.0, 1.0);
    }
    MixedStrategy::new(dist)
}

/// Player `(group, member)` of the reduced game.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct ReducedPlayer {
    pub group: usize,
    pub member: usize,
}

/// Descriptor of the reduced game `G'` built from an `n`-player,
/// `alpha`-action source game. The source itself is passed to the methods
/// that need payoffs, so one descriptor serves tabular games and oracles alike.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReducedGame {
    n: usize,
    alpha: usize,
    s: usize,
    eps: f64,
}

impl ReducedGame {
    /// Group size from [`group_size`].
    pub fn new(n: usize, alpha: usize, eps: f64) -> Result<Self> {
        let s = group_size(n, alpha, eps)?;
        Ok(ReducedGame { n, alpha, s, eps })
    }

    /// Explicit group size, for tests and small brute-force checks. The
    /// recovery guarantee needs `s` at least the formula value.
    pub fn with_group_size(n: usize, alpha: usize, eps: f64, s: usize) -> Result<Self> {
        if s == 0 {
            return Err(Error::InvalidParameter("group size must be >= 1".into()));
        }
        group_size(n, alpha, eps)?;
        Ok(ReducedGame { n, alpha, s, eps })
    }

    pub fn for_game(game: &Game, eps: f64) -> Result<Self> {
        ReducedGame::new(game.num_players(), game.num_actions(), eps)
    }

    pub fn source_players(&self) -> usize {
        self.n
    }

    pub fn num_actions(&self) -> usize {
        self.alpha
    }

    pub fn group_size(&self) -> usize {
        self.s
    }

    pub fn eps(&self) -> f64 {
        self.eps
    }

    /// `s * n`.
    pub fn num_players(&self) -> usize {
        self.s * self.n
    }

    pub fn flat_index(&self, player: ReducedPlayer) -> usize {
        player.group * self.s + player.member
    }

    pub fn player_at(&self, flat: usize) -> ReducedPlayer {
        ReducedPlayer {
            group: flat / self.s,
            member: flat % self.s,
        }
    }

    fn check_source(&self, game: &Game) -> Result<()> {
        if game.num_players() != self.n || game.num_actions() != self.alpha {
            return Err(Error::DimensionMismatch {
                what: "source game players",
                expected: self.n,
                found: game.num_players(),
            });
        }
        Ok(())
    }

    fn check_player(&self, player: ReducedPlayer) -> Result<()> {
        if player.group >= self.n || player.member >= self.s {
            return Err(Error::PlayerOutOfRange {
                player: player.group * self.s + player.member,
                n: self.num_players(),
            });
        }
        Ok(())
    }

    /// Majority action of every group in a pure profile of `G'`.
    pub fn majorities(&self, profile: &[usize]) -> Result<Vec<usize>> {
        check_profile(profile, self.num_players(), self.alpha)?;
        profile
            .chunks(self.s)
            .map(|group| majority(group, self.alpha))
            .collect()
    }

    /// `u'_{i,j}(a) = u_i(a_{i,j}, abar_{-i})`.
    pub fn reduced_payoff(
        &self,
        game: &Game,
        player: ReducedPlayer,
        profile: &[usize],
    ) -> Result<f64> {
        self.check_source(game)?;
        self.check_player(player)?;
        let mut point = self.majorities(profile)?;
        point[player.group] = profile[self.flat_index(player)];
        Ok(game.payoff(player.group, &point))
    }

    /// All `s * n` payoffs of `G'` at `profile`, using only queries to the
    /// source oracle: the majority profile and, for each group, the
    /// substitutions of actions its members actually play. That is at most
    /// `n (alpha - 1) + 1 <= alpha n` distinct source profiles.
    pub fn answer_reduced_query(
        &self,
        oracle: &PayoffOracle<'_>,
        profile: &[usize],
    ) -> Result<Vec<f64>> {
        if oracle.num_players() != self.n || oracle.num_actions() != self.alpha {
            return Err(Error::DimensionMismatch {
                what: "oracle players",
                expected: self.n,
                found: oracle.num_players(),
            });
        }
        let bar = self.majorities(profile)?;
        let at_bar = oracle.query(&bar)?;
        let mut out = vec![0.0; self.num_players()];
        for (i, group) in profile.chunks(self.s).enumerate() {
            let mut by_action: Vec<Option<f64>> = vec![None; self.alpha];
            by_action[bar[i]] = Some(at_bar[i]);
            for (j, &a) in group.iter().enumerate() {
                let value = match by_action[a] {
                    Some(v) => v,
                    None => {
                        let mut point = bar.clone();
                        point[i] = a;
                        let v = oracle.query(&point)?[i];
                        by_action[a] = Some(v);
                        v
                    }
                };
                out[i * self.s + j] = value;
            }
        }
        Ok(out)
    }

    fn check_reduced_profile(&self, x: &MixedProfile) -> Result<()> {
        x.check_dims(self.num_players(), self.alpha)
    }

    /// Strategies of players `(group, 0..s)`.
    pub fn group_block<'x>(&self, x: &'x MixedProfile, group: usize) -> &'x [MixedStrategy] {
        &x.strategies()[group * self.s..(group + 1) * self.s]
    }

    /// `xbar_i` for every group.
    pub fn majority_distributions(&self, x: &MixedProfile) -> Result<Vec<MixedStrategy>> {
        self.check_reduced_profile(x)?;
        (0..self.n)
            .map(|i| majority_distribution(self.group_block(x, i), self.alpha))
            .collect()
    }

    /// `u'_{i,j}(k, x_{-(i,j)}) = u_i(k, xbar_{-i})` for every `k`, shared by
    /// all members of `group`.
    pub fn reduced_action_payoffs(
        &self,
        game: &Game,
        group: usize,
        x: &MixedProfile,
    ) -> Result<Vec<f64>> {
        self.check_source(game)?;
        let bars = self.majority_distributions(x)?;
        if group >= self.n {
            return Err(Error::PlayerOutOfRange {
                player: group,
                n: self.n,
            });
        }
        let raw: Vec<&[f64]> = bars.iter().map(MixedStrategy::probs).collect();
        Ok(action_payoffs_raw(game, group, &raw))
    }

    pub fn reduced_action_payoff(
        &self,
        game: &Game,
        player: ReducedPlayer,
        action: usize,
        x: &MixedProfile,
    ) -> Result<f64> {
        self.check_player(player)?;
        if action >= self.alpha {
            return Err(Error::ActionOutOfRange {
                action,
                alpha: self.alpha,
            });
        }
        Ok(self.reduced_action_payoffs(game, player.group, x)?[action])
    }

    /// ANE regret of `x` inside `G'`.
    pub fn reduced_ane_regret(&self, game: &Game, x: &MixedProfile) -> Result<f64> {
        self.check_source(game)?;
        let bars = self.majority_distributions(x)?;
        let raw: Vec<&[f64]> = bars.iter().map(MixedStrategy::probs).collect();
        let mut worst = f64::NEG_INFINITY;
        for i in 0..self.n {
            let payoffs = action_payoffs_raw(game, i, &raw);
            let best = payoffs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            for member in self.group_block(x, i) {
                let mixed: f64 = payoffs.iter().zip(member.probs()).map(|(u, p)| u * p).sum();
                worst = worst.max(best - mixed);
            }
        }
        Ok(worst)
    }

    /// Recovers a profile of `G` from a profile of `G'` without touching any
    /// payoffs: majority distributions, then entries `<= eps / n` zeroed and
    /// the rest renormalized.
    ///
    /// `eps = 0` is accepted and truncates only exact zeros.
    pub fn recover_wsne(&self, x: &MixedProfile, eps: f64) -> Result<Recovery> {
        if !(eps >= 0.0) || !eps.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "eps must be >= 0, got {eps}"
            )));
        }
        let majority = self.majority_distributions(x)?;
        let threshold = eps / self.n as f64;
        let mut truncated = Vec::with_capacity(self.n);
        let mut strategies = Vec::with_capacity(self.n);
        for (group, bar) in majority.iter().enumerate() {
            let cut: Vec<f64> = bar
                .probs()
                .iter()
                .map(|&p| if p <= threshold { p } else { 0.0 })
                .collect();
            let kept: f64 = bar.probs().iter().filter(|&&p| p > threshold).sum();
            if kept <= 0.0 {
                return Err(Error::DegenerateRenormalization { group });
            }
            let y = bar
                .probs()
                .iter()
                .map(|&p| {
                    if p > threshold {
                        (p / kept).min(1.0)
                    } else {
                        0.0
                    }
                })
                .collect();
            strategies.push(MixedStrategy::new(y)?);
            truncated.push(cut);
        }
        Ok(Recovery {
            majority,
            truncated,
            profile: MixedProfile::new(strategies)?,
            threshold,
        })
    }
}

/// Output of [`ReducedGame::recover_wsne`] with its intermediate quantities.
#[derive(Debug, Clone, PartialEq)]
pub struct Recovery {
    /// `xbar_i` per group.
    pub majority: Vec<MixedStrategy>,
    /// Truncated mass `c_{i,k}` per group and action.
    pub truncated: Vec<Vec<f64>>,
    /// The recovered profile `y` of the source game.
    pub profile: MixedProfile,
    /// `eps / n`.
    pub threshold: f64,
}

impl Recovery {
    /// `sum_k c_{i,k}` for group `i`.
    pub fn truncated_mass(&self, group: usize) -> f64 {
        self.truncated[group].iter().sum()
    }
}

/// `(eps_ane, n_reduced)` for a target `eps_wsne`: `eps_ane = eps_wsne / (4 alpha)`
/// and `n_reduced = group_size(n, alpha, eps_ane) * n`.
pub fn reduction_parameters(eps_wsne: f64, alpha: usize, n_source: usize) -> Result<(f64, usize)> {
    if !(eps_wsne > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "eps must be positive, got {eps_wsne}"
        )));
    }
    let eps_ane = eps_wsne / (4.0 * alpha as f64);
    Ok((eps_ane, group_size(n_source, alpha, eps_ane)? * n_source))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::game::wsne_regret;
    use crate::oracle::PayoffOracle;

    #[test]
    fn group_size_examples() {
        assert_eq!(group_size(2, 2, 0.5).unwrap(), 16);
        assert_eq!(group_size(10, 2, 0.1).unwrap(), 40);
        assert_eq!(group_size(3, 3, 1.0).unwrap(), 36);
        assert_eq!(group_size(1, 2, 1.0).unwrap(), 1);
        assert!(group_size(2, 2, 0.0).is_err());
        assert!(group_size(2, 2, -1.0).is_err());
    }

    #[test]
    fn group_size_snaps_near_integers() {
        // n / eps = e^2 up to rounding: ln is 2 within an ulp or two
        let eps = 1.0 / std::f64::consts::E.powi(2);
        assert_eq!(group_size(1, 2, eps).unwrap(), 16);
    }

    #[test]
    fn majority_examples() {
        assert_eq!(majority(&[0, 1, 0, 1], 2).unwrap(), 0);
        assert_eq!(majority(&[1, 1, 0], 2).unwrap(), 1);
        assert_eq!(majority(&[2, 2, 1, 1, 0], 3).unwrap(), 1);
        assert!(majority(&[], 2).is_err());
        assert!(majority(&[3], 3).is_err());
    }

    fn block(rows: &[&[f64]]) -> Vec<MixedStrategy> {
        rows.iter()
            .map(|r| MixedStrategy::new(r.to_vec()).unwrap())
            .collect()
    }

    #[test]
    fn majority_distribution_examples() {
        let d = majority_distribution(&vec![MixedStrategy::uniform(2); 3], 2).unwrap();
        assert!((d[0] - 0.5).abs() < 1e-15 && (d[1] - 0.5).abs() < 1e-15);
        let d = majority_distribution(&vec![MixedStrategy::uniform(2); 2], 2).unwrap();
        assert_eq!(d.probs(), &[0.75, 0.25]);
        let single = block(&[&[0.2, 0.3, 0.5]]);
        assert_eq!(majority_distribution(&single, 3).unwrap(), single[0]);
        assert!(majority_distribution(&[], 2).is_err());
    }

    #[test]
    fn reduced_payoff_examples() {
        let g = Game::matching_pennies();
        let rg = ReducedGame::with_group_size(2, 2, 0.5, 3).unwrap();
        let a = [0, 0, 1, 1, 1, 1];
        let p13 = ReducedPlayer {
            group: 0,
            member: 2,
        };
        let p11 = ReducedPlayer {
            group: 0,
            member: 0,
        };
        assert_eq!(rg.reduced_payoff(&g, p13, &a).unwrap(), 1.0);
        assert_eq!(rg.reduced_payoff(&g, p11, &a).unwrap(), 0.0);
        assert!(rg
            .reduced_payoff(
                &g,
                ReducedPlayer {
                    group: 2,
                    member: 0
                },
                &a
            )
            .is_err());
    }

    #[test]
    fn singleton_groups_reproduce_source() {
        let g = Game::coordination(3, 2).unwrap();
        let rg = ReducedGame::with_group_size(3, 2, 0.5, 1).unwrap();
        for idx in 0..g.num_profiles() {
            let a = g.profile_at(idx);
            for i in 0..3 {
                let p = rg.player_at(i);
                assert_eq!(rg.reduced_payoff(&g, p, &a).unwrap(), g.payoff(i, &a));
            }
        }
    }

    #[test]
    fn reduced_query_is_cheap_and_consistent() {
        let g = Game::matching_pennies();
        let rg = ReducedGame::with_group_size(2, 2, 0.5, 3).unwrap();
        let oracle = PayoffOracle::new(&g);
        let a = [0, 0, 1, 1, 0, 1];
        let answer = rg.answer_reduced_query(&oracle, &a).unwrap();
        assert!(oracle.snapshot().distinct_queries <= 3);
        for (flat, v) in answer.iter().enumerate() {
            assert_eq!(*v, rg.reduced_payoff(&g, rg.player_at(flat), &a).unwrap());
        }
        let before = oracle.snapshot();
        rg.answer_reduced_query(&oracle, &a).unwrap();
        assert_eq!(oracle.snapshot(), before);
    }

    #[test]
    fn truncation_example() {
        // xbar_0 = (0.98, 0.02) from one member; threshold eps/n = 0.05
        let rg = ReducedGame::with_group_size(2, 2, 0.1, 1).unwrap();
        let x = MixedProfile::new(block(&[&[0.98, 0.02], &[0.5, 0.5]])).unwrap();
        let rec = rg.recover_wsne(&x, 0.1).unwrap();
        assert_eq!(rec.threshold, 0.05);
        assert_eq!(rec.truncated[0], vec![0.0, 0.02]);
        assert_eq!(rec.profile[0].probs(), &[1.0, 0.0]);
        assert_eq!(rec.profile[1].probs(), &[0.5, 0.5]);
    }

    #[test]
    fn degenerate_renormalization_is_reported() {
        // alpha * eps / n >= 1: uniform over 3 actions falls entirely below eps/n
        let rg = ReducedGame::with_group_size(1, 3, 0.5, 1).unwrap();
        let x = MixedProfile::uniform(1, 3);
        assert_eq!(
            rg.recover_wsne(&x, 0.5),
            Err(Error::DegenerateRenormalization { group: 0 })
        );
    }

    #[test]
    fn lifted_pure_ne_recovers_exactly() {
        let g = Game::coordination(2, 2).unwrap();
        let rg = ReducedGame::new(2, 2, 0.4).unwrap();
        let x = MixedProfile::pure(2, &vec![1; rg.num_players()]).unwrap();
        assert_eq!(rg.reduced_ane_regret(&g, &x).unwrap(), 0.0);
        let rec = rg.recover_wsne(&x, 0.4).unwrap();
        assert_eq!(rec.profile, MixedProfile::pure(2, &[1, 1]).unwrap());
        assert_eq!(wsne_regret(&g, &rec.profile, 0.0).unwrap(), 0.0);
    }

    #[test]
    fn parameter_chain() {
        let (eps_ane, n_reduced) = reduction_parameters(0.8, 2, 2).unwrap();
        assert!((eps_ane - 0.1).abs() < 1e-15);
        assert_eq!(n_reduced, 48);
        for alpha in 2..5 {
            let e = 0.03;
            let (back, _) = reduction_parameters(4.0 * alpha as f64 * e, alpha, 3).unwrap();
            assert!((back - e).abs() < 1e-15);
        }
        assert!(reduction_parameters(0.0, 2, 2).is_err());
    }
}
