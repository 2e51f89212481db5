//! Payoff-query oracles with query accounting.
//!
//! A query submits one pure profile and returns every player's payoff. The
//! ledger counts queries in one of two modes:
//!
//! * memoizing (default): only cache misses count, so `total == distinct`;
//! * raw: every call counts, and `distinct` tracks unique profiles seen.
//!
//! The ledger and cache sit behind one mutex held for the whole query, so
//! concurrent callers see linearizable accounting and a racing duplicate is
//! never double counted.

use std::collections::HashMap;
use std::sync::Mutex;

use crate::error::{Error, Result};
use crate::game::{check_profile, Game};
use crate::succinct::SuccinctGame;

/// Anything that can answer a pure-profile payoff query.
pub trait PayoffSource: Send + Sync {
    fn num_players(&self) -> usize;
    fn num_actions(&self) -> usize;
    /// All players' payoffs at `profile`.
    fn payoffs(&self, profile: &[usize]) -> Result<Vec<f64>>;
}

impl PayoffSource for Game {
    fn num_players(&self) -> usize {
        Game::num_players(self)
    }

    fn num_actions(&self) -> usize {
        Game::num_actions(self)
    }

    fn payoffs(&self, profile: &[usize]) -> Result<Vec<f64>> {
        self.checked_payoffs(profile)
    }
}

impl PayoffSource for SuccinctGame {
    fn num_players(&self) -> usize {
        SuccinctGame::num_players(self)
    }

    fn num_actions(&self) -> usize {
        SuccinctGame::num_actions(self)
    }

    fn payoffs(&self, profile: &[usize]) -> Result<Vec<f64>> {
        self.evaluate(profile)
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct QueryLedger {
    pub total_queries: u64,
    pub distinct_queries: u64,
    pub budget: Option<u64>,
}

#[derive(Default)]
struct OracleState {
    ledger: QueryLedger,
    cache: HashMap<Vec<usize>, Vec<f64>>,
}

pub struct PayoffOracle<'a> {
    source: &'a dyn PayoffSource,
    memoize: bool,
    state: Mutex<OracleState>,
}

impl<'a> PayoffOracle<'a> {
    pub fn new(source: &'a dyn PayoffSource) -> Self {
        PayoffOracle {
            source,
            memoize: true,
            state: Mutex::default(),
        }
    }

    /// Every call counts, including repeats.
    pub fn raw(source: &'a dyn PayoffSource) -> Self {
        PayoffOracle {
            memoize: false,
            ..PayoffOracle::new(source)
        }
    }

    pub fn with_budget(self, budget: Option<u64>) -> Self {
        self.lock().ledger.budget = budget;
        self
    }

    pub fn memoizing(&self) -> bool {
        self.memoize
    }

    pub fn num_players(&self) -> usize {
        self.source.num_players()
    }

    pub fn num_actions(&self) -> usize {
        self.source.num_actions()
    }

    fn lock(&self) -> std::sync::MutexGuard<'_, OracleState> {
        // a poisoned lock only means another query panicked; counters stay consistent
        self.state.lock().unwrap_or_else(|e| e.into_inner())
    }

    pub fn query(&self, profile: &[usize]) -> Result<Vec<f64>> {
        check_profile(
            profile,
            self.source.num_players(),
            self.source.num_actions(),
        )?;
        let mut state = self.lock();
        if let Some(hit) = state.cache.get(profile) {
            if self.memoize {
                return Ok(hit.clone());
            }
            let answer = hit.clone();
            charge(&mut state.ledger)?;
            return Ok(answer);
        }
        charge(&mut state.ledger)?;
        let answer = self.source.payoffs(profile)?;
        state.ledger.distinct_queries += 1;
        state.cache.insert(profile.to_vec(), answer.clone());
        Ok(answer)
    }

    pub fn snapshot(&self) -> QueryLedger {
        self.lock().ledger
    }

    /// Zeroes the counters and clears the cache; the budget is kept.
    pub fn reset(&self) {
        let mut state = self.lock();
        let budget = state.ledger.budget;
        *state = OracleState::default();
        state.ledger.budget = budget;
    }
}

fn charge(ledger: &mut QueryLedger) -> Result<()> {
    if let Some(budget) = ledger.budget {
        if ledger.total_queries >= budget {
            return Err(Error::BudgetExhausted { ledger: *ledger });
        }
    }
    ledger.total_queries += 1;
    Ok(())
}
