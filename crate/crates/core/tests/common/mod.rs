//! Independent oracles shared by the integration tests. Nothing here calls
//! the code paths it is used to check.

#![allow(dead_code)]

use num::bigint::BigInt;
use num::rational::BigRational;
use num::One;
use rand::Rng;
use wsne::{Game, MixedProfile, MixedStrategy};

/// Most frequent action with smallest-index ties, written out directly.
pub fn plain_majority(actions: &[usize], alpha: usize) -> usize {
    let mut counts = vec![0usize; alpha];
    for &a in actions {
        counts[a] += 1;
    }
    let top = *counts.iter().max().unwrap();
    counts.iter().position(|&c| c == top).unwrap()
}

/// Majority distribution by enumerating all `alpha^s` outcomes.
pub fn brute_majority_distribution(block: &[Vec<f64>], alpha: usize) -> Vec<f64> {
    let s = block.len();
    let mut dist = vec![0.0; alpha];
    let mut outcome = vec![0usize; s];
    let total = alpha.pow(s as u32);
    for mut idx in 0..total {
        for slot in outcome.iter_mut() {
            *slot = idx % alpha;
            idx /= alpha;
        }
        let weight: f64 = outcome.iter().zip(block).map(|(&a, st)| st[a]).product();
        dist[plain_majority(&outcome, alpha)] += weight;
    }
    dist
}

/// `u'_{(group, member)}(action, x_{-(group, member)})` by enumerating every
/// pure profile of the reduced game with the player pinned to `action`.
pub fn brute_reduced_action_payoff(
    game: &Game,
    s: usize,
    x: &MixedProfile,
    group: usize,
    member: usize,
    action: usize,
) -> f64 {
    let n = game.num_players();
    let alpha = game.num_actions();
    let players = s * n;
    let me = group * s + member;
    let mut total = 0.0;
    let mut profile = vec![0usize; players];
    for mut idx in 0..alpha.pow(players as u32) {
        for slot in profile.iter_mut() {
            *slot = idx % alpha;
            idx /= alpha;
        }
        if profile[me] != action {
            continue;
        }
        let weight: f64 = (0..players)
            .filter(|&p| p != me)
            .map(|p| x[p].probs()[profile[p]])
            .product();
        let mut point: Vec<usize> = (0..n)
            .map(|g| plain_majority(&profile[g * s..(g + 1) * s], alpha))
            .collect();
        point[group] = action;
        total += weight * game.payoff(group, &point);
    }
    total
}

/// `e^k` bracketed by rational Taylor partial sums: `lower <= e^k <= upper`.
fn exp_bounds(k: u32, terms: u32) -> (BigRational, BigRational) {
    let kq = BigRational::from_integer(BigInt::from(k));
    let mut term = BigRational::one();
    let mut sum = BigRational::one();
    for j in 1..=terms {
        term = term * &kq / BigRational::from_integer(BigInt::from(j));
        sum += &term;
    }
    // tail <= next_term / (1 - k/(terms+2)) <= 2 * next_term once terms + 2 >= 2k
    let next = term * &kq / BigRational::from_integer(BigInt::from(terms + 1));
    let upper = &sum + next * BigRational::from_integer(BigInt::from(2));
    (sum, upper)
}

/// `ceil(ln(n / eps))` in exact rational arithmetic, for `n / eps > 1`.
pub fn exact_ceil_ln(n: usize, eps: f64) -> i64 {
    let eps_q = BigRational::from_float(eps).expect("finite eps");
    let q = BigRational::from_integer(BigInt::from(n)) / eps_q;
    assert!(q > BigRational::one(), "oracle only covers n / eps > 1");
    // smallest k with e^k >= q
    let mut k = 0u32;
    loop {
        let terms = 80 + 4 * k;
        let (lower, upper) = exp_bounds(k, terms);
        if lower >= q {
            return k as i64;
        }
        assert!(upper < q, "bracket too loose at k={k}");
        k += 1;
    }
}

/// Group size from the exact ceiling.
pub fn exact_group_size(n: usize, alpha: usize, eps: f64) -> usize {
    2 * alpha * alpha * exact_ceil_ln(n, eps) as usize
}

/// A random distribution over `alpha` actions.
pub fn random_strategy<R: Rng>(alpha: usize, rng: &mut R) -> Vec<f64> {
    let raw: Vec<f64> = (0..alpha).map(|_| rng.gen::<f64>() + 1e-3).collect();
    let total: f64 = raw.iter().sum();
    raw.into_iter().map(|v| v / total).collect()
}

pub fn to_strategies(rows: &[Vec<f64>]) -> Vec<MixedStrategy> {
    rows.iter()
        .map(|r| MixedStrategy::new(r.clone()).unwrap())
        .collect()
}
