//! Well-supported equilibria from approximate ones in large games.
//!
//! The crate builds the majority-group reduced game `G'` of a normal-form
//! game `G`, answers payoff queries on `G'` with at most `alpha * n` queries
//! on `G`, and recovers a `4 alpha eps`-WSNE of `G` from any `eps`-ANE of
//! `G'`. Around that it provides exact regret verifiers, query-counting
//! oracles, succinct (program-defined) games with a compiler for the
//! reduced game's program, and small equilibrium finders used to produce
//! certified inputs.

// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod format;
pub mod game;
pub mod oracle;
pub mod reduction;
pub mod search;
pub mod succinct;

pub use error::{Error, Result};
pub use game::{
    action_payoff, action_payoffs, ane_regret, best_response, estimate_expected_payoff,
    expected_payoff, verify_ane, verify_wsne, wsne_regret, Game, MixedProfile, MixedStrategy,
    PureProfile,
};
pub use oracle::{PayoffOracle, PayoffSource, QueryLedger};
pub use reduction::{
    group_size, majority, majority_distribution, reduction_parameters, Recovery, ReducedGame,
    ReducedPlayer,
};
pub use search::{
    best_response_dynamics, brute_force_pure_ne, dgp_ane_to_wsne, grid_search_ane, lift_profile,
    perturb_certified, CertifiedProfile, EquilibriumKind, SearchConfig,
};
pub use succinct::{compile_reduced_circuit, lift_tabular, materialize, SuccinctGame};
