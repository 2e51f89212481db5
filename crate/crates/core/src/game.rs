//! Normal-form games with payoffs in `[0, 1]`, mixed strategies, and the
//! regret functions behind approximate and well-supported equilibria.
//!
//! Actions and players are 0-based in the API. Pure profiles map into the
//! dense payoff tensor with player 0 as the least-significant digit:
//! `index(a) = sum_i a_i * alpha^i`.

use rand::Rng;
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};

/// Tolerance used when checking that a strategy sums to one.
pub const SIMPLEX_TOL: f64 = 1e-9;

/// Default slack for the `verify_*` wrappers.
pub const DEFAULT_TOL: f64 = 1e-9;

/// Largest tensor (`n * alpha^n` entries) we are willing to allocate by default.
pub const DEFAULT_SIZE_LIMIT: u128 = 10_000_000;

/// Number of pure profiles `alpha^n`, or `None` on overflow.
pub fn profile_count(n: usize, alpha: usize) -> Option<u128> {
    let mut total: u128 = 1;
    for _ in 0..n {
        total = total.checked_mul(alpha as u128)?;
    }
    Some(total)
}

/// Checks that an `n`-player `alpha`-action tensor fits in `limit` entries.
pub fn check_tensor_size(n: usize, alpha: usize, limit: u128) -> Result<usize> {
    let required = profile_count(n, alpha)
        .and_then(|p| p.checked_mul(n as u128))
        .unwrap_or(u128::MAX);
    if required > limit {
        return Err(Error::SizeLimit { required, limit });
    }
    Ok((required / n.max(1) as u128) as usize)
}

/// A pure strategy profile: one action per player.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct PureProfile(Vec<usize>);

impl PureProfile {
    pub fn new(actions: Vec<usize>, n: usize, alpha: usize) -> Result<Self> {
        check_profile(&actions, n, alpha)?;
        Ok(PureProfile(actions))
    }

    pub fn actions(&self) -> &[usize] {
        &self.0
    }

    pub fn into_inner(self) -> Vec<usize> {
        self.0
    }
}

impl std::ops::Deref for PureProfile {
    type Target = [usize];

    fn deref(&self) -> &[usize] {
        &self.0
    }
}

pub(crate) fn check_profile(actions: &[usize], n: usize, alpha: usize) -> Result<()> {
    if actions.len() != n {
        return Err(Error::DimensionMismatch {
            what: "pure profile length",
            expected: n,
            found: actions.len(),
        });
    }
    if let Some(&action) = actions.iter().find(|&&a| a >= alpha) {
        return Err(Error::ActionOutOfRange { action, alpha });
    }
    Ok(())
}

/// A probability distribution over actions.
#[derive(Debug, Clone, PartialEq)]
pub struct MixedStrategy(Vec<f64>);

impl MixedStrategy {
    pub fn new(probs: Vec<f64>) -> Result<Self> {
        if probs.is_empty() {
            return Err(Error::InvalidStrategy("no actions".into()));
        }
        if let Some(p) = probs
            .iter()
            .find(|p| !p.is_finite() || **p < 0.0 || **p > 1.0)
        {
            return Err(Error::InvalidStrategy(format!("entry {p} outside [0, 1]")));
        }
        let total: f64 = probs.iter().sum();
        if (total - 1.0).abs() > SIMPLEX_TOL {
            return Err(Error::InvalidStrategy(format!("entries sum to {total}")));
        }
        Ok(MixedStrategy(probs))
    }

    pub fn pure(alpha: usize, action: usize) -> Result<Self> {
        if action >= alpha {
            return Err(Error::ActionOutOfRange { action, alpha });
        }
        let mut probs = vec![0.0; alpha];
        probs[action] = 1.0;
        Ok(MixedStrategy(probs))
    }

    pub fn uniform(alpha: usize) -> Self {
        MixedStrategy(vec![1.0 / alpha as f64; alpha])
    }

    pub fn probs(&self) -> &[f64] {
        &self.0
    }

    pub fn num_actions(&self) -> usize {
        self.0.len()
    }

    /// Actions whose probability is strictly above `threshold`.
    pub fn support(&self, threshold: f64) -> impl Iterator<Item = usize> + '_ {
        self.0
            .iter()
            .enumerate()
            .filter(move |(_, &p)| p > threshold)
            .map(|(k, _)| k)
    }

    /// Total-variation distance `1/2 * sum |p - q|`.
    pub fn total_variation(&self, other: &MixedStrategy) -> f64 {
        0.5 * self
            .0
            .iter()
            .zip(&other.0)
            .map(|(p, q)| (p - q).abs())
            .sum::<f64>()
    }
}

impl std::ops::Index<usize> for MixedStrategy {
    type Output = f64;

    fn index(&self, k: usize) -> &f64 {
        &self.0[k]
    }
}

/// One mixed strategy per player, all over the same action count.
#[derive(Debug, Clone, PartialEq)]
pub struct MixedProfile(Vec<MixedStrategy>);

impl MixedProfile {
    pub fn new(strategies: Vec<MixedStrategy>) -> Result<Self> {
        if let Some(first) = strategies.first() {
            let alpha = first.num_actions();
            if let Some(bad) = strategies.iter().find(|s| s.num_actions() != alpha) {
                return Err(Error::DimensionMismatch {
                    what: "strategy length",
                    expected: alpha,
                    found: bad.num_actions(),
                });
            }
        }
        Ok(MixedProfile(strategies))
    }

    /// Point masses on the given pure profile.
    pub fn pure(alpha: usize, actions: &[usize]) -> Result<Self> {
        actions
            .iter()
            .map(|&a| MixedStrategy::pure(alpha, a))
            .collect::<Result<Vec<_>>>()
            .map(MixedProfile)
    }

    pub fn uniform(n: usize, alpha: usize) -> Self {
        MixedProfile(vec![MixedStrategy::uniform(alpha); n])
    }

    pub fn strategies(&self) -> &[MixedStrategy] {
        &self.0
    }

    pub fn into_strategies(self) -> Vec<MixedStrategy> {
        self.0
    }

    pub fn num_players(&self) -> usize {
        self.0.len()
    }

    pub fn num_actions(&self) -> usize {
        self.0.first().map_or(0, MixedStrategy::num_actions)
    }

    pub(crate) fn check_dims(&self, n: usize, alpha: usize) -> Result<()> {
        if self.num_players() != n {
            return Err(Error::DimensionMismatch {
                what: "mixed profile length",
                expected: n,
                found: self.num_players(),
            });
        }
        if self.num_actions() != alpha {
            return Err(Error::DimensionMismatch {
                what: "strategy length",
                expected: alpha,
                found: self.num_actions(),
            });
        }
        Ok(())
    }
}

impl std::ops::Index<usize> for MixedProfile {
    type Output = MixedStrategy;

    fn index(&self, i: usize) -> &MixedStrategy {
        &self.0[i]
    }
}

/// Tabular `n`-player, `alpha`-action game with payoffs in `[0, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Game {
    n: usize,
    alpha: usize,
    profiles: usize,
    // player-major: payoffs[player * profiles + profile_index]
    payoffs: Vec<f64>,
}

impl Game {
    pub fn new(n: usize, alpha: usize, payoffs: Vec<f64>) -> Result<Self> {
        check_dimensions(n, alpha)?;
        let profiles = check_tensor_size(n, alpha, u128::from(u64::MAX))?;
        if payoffs.len() != n * profiles {
            return Err(Error::DimensionMismatch {
                what: "payoff tensor",
                expected: n * profiles,
                found: payoffs.len(),
            });
        }
        if let Some(&value) = payoffs
            .iter()
            .find(|v| !v.is_finite() || **v < 0.0 || **v > 1.0)
        {
            return Err(Error::PayoffOutOfRange { value });
        }
        Ok(Game {
            n,
            alpha,
            profiles,
            payoffs,
        })
    }

    /// Builds a game by calling `f(player, profile)` for every entry,
    /// respecting [`DEFAULT_SIZE_LIMIT`].
    pub fn from_fn(
        n: usize,
        alpha: usize,
        mut f: impl FnMut(usize, &[usize]) -> f64,
    ) -> Result<Self> {
        check_dimensions(n, alpha)?;
        let profiles = check_tensor_size(n, alpha, DEFAULT_SIZE_LIMIT)?;
        let mut payoffs = vec![0.0; n * profiles];
        let mut profile = vec![0; n];
        for index in 0..profiles {
            for player in 0..n {
                payoffs[player * profiles + index] = f(player, &profile);
            }
            advance(&mut profile, alpha);
        }
        Game::new(n, alpha, payoffs)
    }

    /// I.i.d. uniform payoffs, drawn player-major in profile-index order.
    pub fn random<R: Rng + ?Sized>(n: usize, alpha: usize, rng: &mut R) -> Result<Self> {
        check_dimensions(n, alpha)?;
        let profiles = check_tensor_size(n, alpha, DEFAULT_SIZE_LIMIT)?;
        let payoffs = (0..n * profiles).map(|_| rng.gen::<f64>()).collect();
        Game::new(n, alpha, payoffs)
    }

    /// Two players: player 0 gets 1 when the actions match, player 1 gets the complement.
    pub fn matching_pennies() -> Self {
        Game::from_fn(2, 2, |player, a| {
            let matched = a[0] == a[1];
            if (player == 0) == matched {
                1.0
            } else {
                0.0
            }
        })
        .expect("fixed dimensions")
    }

    /// Everyone gets 1 iff all players choose the same action.
    pub fn coordination(n: usize, alpha: usize) -> Result<Self> {
        Game::from_fn(n, alpha, |_, a| {
            if a.iter().all(|&x| x == a[0]) {
                1.0
            } else {
                0.0
            }
        })
    }

    pub fn constant(n: usize, alpha: usize, value: f64) -> Result<Self> {
        Game::from_fn(n, alpha, |_, _| value)
    }

    pub fn num_players(&self) -> usize {
        self.n
    }

    pub fn num_actions(&self) -> usize {
        self.alpha
    }

    pub fn num_profiles(&self) -> usize {
        self.profiles
    }

    pub fn profile_index(&self, profile: &[usize]) -> usize {
        profile.iter().rev().fold(0, |acc, &a| acc * self.alpha + a)
    }

    pub fn profile_at(&self, mut index: usize) -> Vec<usize> {
        (0..self.n)
            .map(|_| {
                let a = index % self.alpha;
                index /= self.alpha;
                a
            })
            .collect()
    }

    /// `u_i(a)`. The profile is assumed valid; use [`Game::checked_payoffs`]
    /// for untrusted input.
    pub fn payoff(&self, player: usize, profile: &[usize]) -> f64 {
        self.payoffs[player * self.profiles + self.profile_index(profile)]
    }

    pub fn payoffs_at(&self, profile: &[usize]) -> Vec<f64> {
        let index = self.profile_index(profile);
        (0..self.n)
            .map(|i| self.payoffs[i * self.profiles + index])
            .collect()
    }

    pub fn checked_payoffs(&self, profile: &[usize]) -> Result<Vec<f64>> {
        check_profile(profile, self.n, self.alpha)?;
        Ok(self.payoffs_at(profile))
    }

    /// Player `i`'s payoffs in profile-index order.
    pub fn player_payoffs(&self, player: usize) -> &[f64] {
        &self.payoffs[player * self.profiles..(player + 1) * self.profiles]
    }

    /// Short content hash used to tag certified profiles.
    pub fn fingerprint(&self) -> String {
        let mut hasher = Sha256::new();
        hasher.update((self.n as u64).to_le_bytes());
        hasher.update((self.alpha as u64).to_le_bytes());
        for v in &self.payoffs {
            hasher.update(v.to_bits().to_le_bytes());
        }
        hasher
            .finalize()
            .iter()
            .take(8)
            .map(|b| format!("{b:02x}"))
            .collect()
    }
}

fn check_dimensions(n: usize, alpha: usize) -> Result<()> {
    if n == 0 {
        return Err(Error::InvalidParameter(
            "a game needs at least one player".into(),
        ));
    }
    if alpha < 2 {
        return Err(Error::InvalidParameter(format!(
            "a game needs at least two actions, got {alpha}"
        )));
    }
    Ok(())
}

/// Steps a profile to the next one in index order; returns false on wrap-around.
pub(crate) fn advance(profile: &mut [usize], alpha: usize) -> bool {
    for a in profile.iter_mut() {
        *a += 1;
        if *a < alpha {
            return true;
        }
        *a = 0;
    }
    false
}

/// `u_i(k, x_{-i})` for every action `k`, by enumerating `alpha^(n-1)`
/// profiles of the other players. Player `i`'s own entry is ignored.
pub(crate) fn action_payoffs_raw(game: &Game, player: usize, strategies: &[&[f64]]) -> Vec<f64> {
    let n = game.n;
    let alpha = game.alpha;
    let table = game.player_payoffs(player);
    let mut stride = vec![1usize; n];
    for p in 1..n {
        stride[p] = stride[p - 1] * alpha;
    }
    let mut out = vec![0.0; alpha];
    let mut profile = vec![0usize; n];
    loop {
        let mut weight = 1.0;
        let mut base = 0;
        for p in 0..n {
            if p != player {
                weight *= strategies[p][profile[p]];
                base += profile[p] * stride[p];
            }
        }
        if weight != 0.0 {
            for (k, slot) in out.iter_mut().enumerate() {
                *slot += weight * table[base + k * stride[player]];
            }
        }
        // odometer over everyone except `player`
        let mut moved = false;
        for (p, slot) in profile.iter_mut().enumerate() {
            if p == player {
                continue;
            }
            *slot += 1;
            if *slot < alpha {
                moved = true;
                break;
            }
            *slot = 0;
        }
        if !moved {
            break;
        }
    }
    out
}

fn raw_strategies(x: &MixedProfile) -> Vec<&[f64]> {
    x.strategies().iter().map(MixedStrategy::probs).collect()
}

fn check_player(game: &Game, player: usize) -> Result<()> {
    if player >= game.n {
        return Err(Error::PlayerOutOfRange { player, n: game.n });
    }
    Ok(())
}

/// `u_i(x)` by full enumeration of the product distribution.
pub fn expected_payoff(game: &Game, player: usize, x: &MixedProfile) -> Result<f64> {
    x.check_dims(game.n, game.alpha)?;
    check_player(game, player)?;
    let table = game.player_payoffs(player);
    let mut profile = vec![0; game.n];
    let mut total = 0.0;
    for &value in table {
        let weight: f64 = profile.iter().enumerate().map(|(p, &a)| x[p][a]).product();
        total += weight * value;
        advance(&mut profile, game.alpha);
    }
    Ok(total)
}

/// `u_i(k, x_{-i})`.
pub fn action_payoff(game: &Game, player: usize, action: usize, x: &MixedProfile) -> Result<f64> {
    if action >= game.alpha {
        return Err(Error::ActionOutOfRange {
            action,
            alpha: game.alpha,
        });
    }
    Ok(action_payoffs(game, player, x)?[action])
}

/// `u_i(k, x_{-i})` for all `k` at once.
pub fn action_payoffs(game: &Game, player: usize, x: &MixedProfile) -> Result<Vec<f64>> {
    x.check_dims(game.n, game.alpha)?;
    check_player(game, player)?;
    Ok(action_payoffs_raw(game, player, &raw_strategies(x)))
}

pub(crate) fn ane_regret_raw(game: &Game, strategies: &[&[f64]]) -> f64 {
    (0..game.n)
        .map(|i| {
            let payoffs = action_payoffs_raw(game, i, strategies);
            let best = payoffs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            let mixed: f64 = payoffs.iter().zip(strategies[i]).map(|(u, p)| u * p).sum();
            best - mixed
        })
        .fold(f64::NEG_INFINITY, f64::max)
}

/// Largest gain any player gets from a unilateral deviation; `x` is an
/// `eps`-ANE iff this is at most `eps`.
pub fn ane_regret(game: &Game, x: &MixedProfile) -> Result<f64> {
    x.check_dims(game.n, game.alpha)?;
    Ok(ane_regret_raw(game, &raw_strategies(x)))
}

/// Largest gap between a best response and any action with probability
/// above `support_threshold`; `x` is an `eps`-WSNE iff this is at most `eps`.
pub fn wsne_regret(game: &Game, x: &MixedProfile, support_threshold: f64) -> Result<f64> {
    x.check_dims(game.n, game.alpha)?;
    let strategies = raw_strategies(x);
    let mut worst: f64 = 0.0;
    for i in 0..game.n {
        let payoffs = action_payoffs_raw(game, i, &strategies);
        let best = payoffs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        for a in x[i].support(support_threshold) {
            worst = worst.max(best - payoffs[a]);
        }
    }
    Ok(worst)
}

pub fn verify_ane(game: &Game, x: &MixedProfile, eps: f64, tol: f64) -> Result<bool> {
    Ok(ane_regret(game, x)? <= eps + tol)
}

pub fn verify_wsne(game: &Game, x: &MixedProfile, eps: f64, tol: f64) -> Result<bool> {
    Ok(wsne_regret(game, x, 0.0)? <= eps + tol)
}

/// Index of the first maximum.
pub(crate) fn argmax(values: &[f64]) -> usize {
    let mut best = 0;
    for (k, &v) in values.iter().enumerate().skip(1) {
        if v > values[best] {
            best = k;
        }
    }
    best
}

/// Smallest-index best response of player `i` to `x_{-i}`.
pub fn best_response(game: &Game, player: usize, x: &MixedProfile) -> Result<usize> {
    Ok(argmax(&action_payoffs(game, player, x)?))
}

/// Monte Carlo estimate of `u_i(x)` from `samples` seeded draws. Not exact;
/// meant for demonstrations on games too large to enumerate.
pub fn estimate_expected_payoff<R: Rng + ?Sized>(
    game: &Game,
    player: usize,
    x: &MixedProfile,
    samples: usize,
    rng: &mut R,
) -> Result<f64> {
    x.check_dims(game.n, game.alpha)?;
    check_player(game, player)?;
    if samples == 0 {
        return Err(Error::InvalidParameter(
            "sample count must be positive".into(),
        ));
    }
    let mut profile = vec![0; game.n];
    let mut total = 0.0;
    for _ in 0..samples {
        for (slot, strategy) in profile.iter_mut().zip(x.strategies()) {
            *slot = sample_action(strategy.probs(), rng);
        }
        total += game.payoff(player, &profile);
    }
    Ok(total / samples as f64)
}

pub(crate) fn sample_action<R: Rng + ?Sized>(probs: &[f64], rng: &mut R) -> usize {
    let mut u: f64 = rng.gen();
    for (k, &p) in probs.iter().enumerate() {
        if u < p {
            return k;
        }
        u -= p;
    }
    probs.iter().rposition(|&p| p > 0.0).unwrap_or(0)
}
