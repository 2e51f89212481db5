//! `wsne`: generate games, build majority-group reductions, recover
//! well-supported equilibria, and count payoff queries.

mod commands;
mod report;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Debug, Parser)]
#[command(name = "wsne", version, about, long_about = None)]
#[command(after_help = "\
Exit codes: 0 success, 1 a checked property failed, 2 invalid input.

Artifacts (games, profiles, programs) go to --out, or stdout without it.
Reports are `key=value` lines on stdout, or on stderr when the artifact
itself is on stdout. Batch modes print CSV with a header row.

All randomness derives from --seed. Trial t of a batch uses seed + t.")]
pub struct Cli {
    #[command(flatten)]
    pub global: Global,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args)]
pub struct Global {
    /// Base seed for every random choice.
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,
    /// Approximation parameter; its role depends on the command.
    #[arg(long, global = true, default_value_t = 0.4)]
    pub eps: f64,
    /// Slack allowed when checking a property.
    #[arg(long, global = true, default_value_t = 1e-9)]
    pub tol: f64,
    /// Maximum number of source-game queries (counted as the oracle counts them).
    #[arg(long, global = true)]
    pub budget: Option<u64>,
    /// Count every oracle call, not only distinct profiles.
    #[arg(long, global = true)]
    pub no_memoize: bool,
    /// Where to write the command's artifact.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Append wall time in milliseconds to reports (makes output run-dependent).
    #[arg(long, global = true)]
    pub timing: bool,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum GameKind {
    Random,
    Coordination,
    Pennies,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Kind {
    Ane,
    Wsne,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum Method {
    /// Exhaustive search over the simplex grid with resolution --grid.
    Grid,
    /// Best-response dynamics from a seeded pure start.
    Brd,
    /// Every pure profile queried once; the first eps-equilibrium found.
    Pure,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Write a game in the `nfgame v1` format.
    Gen {
        #[arg(long)]
        n: usize,
        #[arg(long)]
        alpha: usize,
        #[arg(long, value_enum, default_value_t = GameKind::Random)]
        kind: GameKind,
    },
    /// Describe the reduced game: group size, player count, query bound.
    ///
    /// Fields: command,game,n,alpha,eps,s,reduced_players,query_bound,wsne_guarantee
    Reduce {
        game: PathBuf,
        /// Override the group size.
        #[arg(long)]
        s: Option<usize>,
        /// Treat --eps as the target WSNE quality and derive the ANE parameter.
        #[arg(long)]
        target: bool,
    },
    /// Recover a profile of the source game from a profile of the reduced game.
    ///
    /// Truncation uses --eps-hat, or the profile's exact reduced regret.
    /// Fields: command,game,n,alpha,s,eps_hat,wsne_regret,bound,queries,result
    Recover {
        game: PathBuf,
        profile: PathBuf,
        #[arg(long)]
        s: Option<usize>,
        #[arg(long)]
        eps_hat: Option<f64>,
    },
    /// Exact regret of a profile.
    ///
    /// Fields: command,game_id,kind,players,regret
    Certify {
        game: PathBuf,
        profile: PathBuf,
        #[arg(long, value_enum, default_value_t = Kind::Ane)]
        kind: Kind,
        /// Certify as a profile of the reduced game (ANE regret).
        #[arg(long)]
        reduced: bool,
        #[arg(long)]
        s: Option<usize>,
    },
    /// Check that a profile is an eps-ANE or eps-WSNE.
    ///
    /// Fields: command,game,kind,eps,tol,regret,result
    Verify {
        game: PathBuf,
        profile: PathBuf,
        #[arg(long, value_enum, default_value_t = Kind::Ane)]
        kind: Kind,
    },
    /// Look for an eps-ANE (grid, brd) or eps-WSNE pure profile (pure).
    ///
    /// Fields: command,game,method,eps,regret,queries,distinct,result
    Search {
        game: PathBuf,
        #[arg(long, value_enum, default_value_t = Method::Grid)]
        method: Method,
        #[arg(long, default_value_t = 10)]
        grid: usize,
        #[arg(long, default_value_t = 100)]
        max_iterations: usize,
    },
    /// Move mass off clearly worse actions to turn an ANE into an eps-WSNE.
    ///
    /// Fields: command,game,eps,theta,ane_regret,wsne_regret,result
    Dgp {
        game: PathBuf,
        profile: PathBuf,
        /// Payoff gap beyond which an action loses its mass (default eps/2).
        #[arg(long)]
        theta: Option<f64>,
    },
    /// Copy every player's strategy to all members of its group.
    Lift {
        profile: PathBuf,
        /// Group size; defaults to the formula value for --eps.
        #[arg(long)]
        s: Option<usize>,
    },
    /// Add seeded noise of size --delta and project back to the simplex.
    ///
    /// With --game the result is certified in the reduced game.
    /// Fields: command,seed,delta,players[,game,s,eps_hat]
    Perturb {
        profile: PathBuf,
        #[arg(long, default_value_t = 0.01)]
        delta: f64,
        #[arg(long)]
        game: Option<PathBuf>,
    },
    /// Lift an equilibrium, perturb, certify, recover, and check the bound.
    ///
    /// The equilibrium is --source if given, else the first pure Nash
    /// equilibrium, else the best point of a grid of resolution --grid.
    /// Fields (CSV with --trials): command,game,seed,n,alpha,s,eps,delta,
    /// eps_hat,wsne_regret,bound,recovery_queries,result[,wall_ms]
    Pipeline {
        game: PathBuf,
        #[arg(long, default_value_t = 0.0)]
        delta: f64,
        #[arg(long)]
        s: Option<usize>,
        #[arg(long)]
        source: Option<PathBuf>,
        #[arg(long, default_value_t = 40)]
        grid: usize,
        /// Run this many trials with seeds seed, seed+1, ... and print CSV.
        #[arg(long)]
        trials: Option<u64>,
    },
    /// Issue random reduced-game queries through one shared oracle.
    ///
    /// The source may be a game or a `pprog v1` program.
    /// Fields: command,source,n,alpha,s,queries,max_delta,query_bound,
    /// total_queries,distinct_queries,result
    /// With --per-query: CSV columns query,delta,total_queries,distinct_queries
    Querycount {
        source: PathBuf,
        #[arg(long, default_value_t = 100)]
        queries: u64,
        #[arg(long)]
        s: Option<usize>,
        #[arg(long)]
        per_query: bool,
    },
    /// Compile the reduced game's payoff program from a game or program.
    ///
    /// Fields: command,n,alpha,s,source_nodes,compiled_nodes,size_bound
    Compile {
        source: PathBuf,
        #[arg(long)]
        s: Option<usize>,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match commands::run(&cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::from(commands::exit_code(&err))
        }
    }
}
