use std::fs;
use std::io::{self, Read as _, Write as _};
use std::path::Path;
use std::time::Instant;

use anyhow::{anyhow, bail, Context, Result};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use wsne::format::{parse_game, parse_mixed_profile, write_game, write_mixed_profile};
use wsne::search::perturb;
use wsne::succinct::{compiled_size_bound, materialize};
use wsne::{
    ane_regret, best_response_dynamics, brute_force_pure_ne, compile_reduced_circuit,
    dgp_ane_to_wsne, grid_search_ane, group_size, lift_profile, lift_tabular, reduction_parameters,
    verify_ane, verify_wsne, wsne_regret, CertifiedProfile, EquilibriumKind, Game, MixedProfile,
    PayoffOracle, PayoffSource, ReducedGame, SearchConfig, SuccinctGame,
};

use crate::report::Report;
use crate::{Cli, Command, GameKind, Global, Kind, Method};

/// Exhausting the query budget is a failed check; anything else is bad input.
pub fn exit_code(err: &anyhow::Error) -> u8 {
    let budget = err.chain().any(|e| {
        matches!(
            e.downcast_ref::<wsne::Error>(),
            Some(wsne::Error::BudgetExhausted { .. })
        )
    });
    if budget {
        1
    } else {
        2
    }
}

/// Runs the command; `Ok(false)` means a checked property failed.
pub fn run(cli: &Cli) -> Result<bool> {
    let g = &cli.global;
    let started = Instant::now();
    match &cli.command {
        Command::Gen { n, alpha, kind } => {
            let game = match kind {
                GameKind::Random => {
                    Game::random(*n, *alpha, &mut ChaCha8Rng::seed_from_u64(g.seed))?
                }
                GameKind::Coordination => Game::coordination(*n, *alpha)?,
                GameKind::Pennies => Game::matching_pennies(),
            };
            emit_artifact(g, &write_game(&game))?;
            Ok(true)
        }
        Command::Reduce { game, s, target } => {
            let game = load_game(game)?;
            let (n, alpha) = (game.num_players(), game.num_actions());
            let eps = if *target {
                reduction_parameters(g.eps, alpha, n)?.0
            } else {
                g.eps
            };
            let rg = reduced_game(n, alpha, eps, *s)?;
            let mut r = Report::new("reduce");
            r.push("game", game.fingerprint())
                .push("n", n)
                .push("alpha", alpha)
                .num("eps", eps)
                .push("s", rg.group_size())
                .push("reduced_players", rg.num_players())
                .push("query_bound", alpha * n)
                .num("wsne_guarantee", 4.0 * alpha as f64 * eps);
            emit_report(g, &r, started, false)?;
            Ok(true)
        }
        Command::Recover {
            game,
            profile,
            s,
            eps_hat,
        } => {
            let game = load_game(game)?;
            let x = load_profile(profile)?;
            let rg = reduced_game_for(&game, &x, g.eps, *s)?;
            let eps_hat = match eps_hat {
                Some(e) => *e,
                None => rg.reduced_ane_regret(&game, &x)?.max(0.0),
            };
            let oracle = oracle(g, &game);
            let rec = rg.recover_wsne(&x, eps_hat)?;
            let regret = wsne_regret(&game, &rec.profile, 0.0)?;
            let bound = 4.0 * game.num_actions() as f64 * eps_hat;
            let ok = regret <= bound + g.tol;
            emit_artifact(g, &write_mixed_profile(&rec.profile))?;
            let mut r = Report::new("recover");
            r.push("game", game.fingerprint())
                .push("n", game.num_players())
                .push("alpha", game.num_actions())
                .push("s", rg.group_size())
                .num("eps_hat", eps_hat)
                .num("wsne_regret", regret)
                .num("bound", bound)
                .push("queries", oracle.snapshot().total_queries)
                .flag("result", ok);
            emit_report(g, &r, started, true)?;
            Ok(ok)
        }
        Command::Certify {
            game,
            profile,
            kind,
            reduced,
            s,
        } => {
            let game = load_game(game)?;
            let x = load_profile(profile)?;
            let cert = if *reduced {
                if *kind != Kind::Ane {
                    bail!("reduced profiles are certified as ANE only");
                }
                let rg = reduced_game_for(&game, &x, g.eps, *s)?;
                CertifiedProfile::certify_reduced(&game, &rg, x, None)?
            } else {
                CertifiedProfile::certify(&game, x, equilibrium_kind(*kind), None)?
            };
            let mut r = Report::new("certify");
            r.push("game_id", &cert.game_id)
                .push("kind", kind_name(*kind))
                .push("players", cert.profile.num_players())
                .num("regret", cert.regret);
            emit_report(g, &r, started, false)?;
            Ok(true)
        }
        Command::Verify {
            game,
            profile,
            kind,
        } => {
            let game = load_game(game)?;
            let x = load_profile(profile)?;
            let (regret, ok) = match kind {
                Kind::Ane => (ane_regret(&game, &x)?, verify_ane(&game, &x, g.eps, g.tol)?),
                Kind::Wsne => (
                    wsne_regret(&game, &x, 0.0)?,
                    verify_wsne(&game, &x, g.eps, g.tol)?,
                ),
            };
            let mut r = Report::new("verify");
            r.push("game", game.fingerprint())
                .push("kind", kind_name(*kind))
                .num("eps", g.eps)
                .num("tol", g.tol)
                .num("regret", regret)
                .flag("result", ok);
            emit_report(g, &r, started, false)?;
            Ok(ok)
        }
        Command::Search {
            game,
            method,
            grid,
            max_iterations,
        } => search(
            g,
            &load_game(game)?,
            *method,
            *grid,
            *max_iterations,
            started,
        ),
        Command::Dgp {
            game,
            profile,
            theta,
        } => {
            let game = load_game(game)?;
            let x = load_profile(profile)?;
            let y = dgp_ane_to_wsne(&game, &x, g.eps, *theta)?;
            let regret = wsne_regret(&game, &y, 0.0)?;
            let ok = verify_wsne(&game, &y, g.eps, g.tol)?;
            emit_artifact(g, &write_mixed_profile(&y))?;
            let mut r = Report::new("dgp");
            r.push("game", game.fingerprint())
                .num("eps", g.eps)
                .num("theta", theta.unwrap_or(g.eps / 2.0))
                .num("ane_regret", ane_regret(&game, &x)?)
                .num("wsne_regret", regret)
                .flag("result", ok);
            emit_report(g, &r, started, true)?;
            Ok(ok)
        }
        Command::Lift { profile, s } => {
            let x = load_profile(profile)?;
            let s = match s {
                Some(s) => *s,
                None => group_size(x.num_players(), x.num_actions(), g.eps)?,
            };
            if s == 0 {
                bail!("group size must be >= 1");
            }
            emit_artifact(g, &write_mixed_profile(&lift_profile(&x, s)))?;
            Ok(true)
        }
        Command::Perturb {
            profile,
            delta,
            game,
        } => {
            let x = load_profile(profile)?;
            let y = perturb(&x, *delta, g.seed)?;
            emit_artifact(g, &write_mixed_profile(&y))?;
            let mut r = Report::new("perturb");
            r.push("seed", g.seed)
                .num("delta", *delta)
                .push("players", y.num_players());
            if let Some(path) = game {
                let game = load_game(path)?;
                let rg = reduced_game_for(&game, &y, g.eps, None)?;
                let cert = CertifiedProfile::certify_reduced(&game, &rg, y, Some(g.seed))?;
                r.push("game", game.fingerprint())
                    .push("s", rg.group_size())
                    .num("eps_hat", cert.regret);
            }
            emit_report(g, &r, started, true)?;
            Ok(true)
        }
        Command::Pipeline {
            game,
            delta,
            s,
            source,
            grid,
            trials,
        } => {
            let game = load_game(game)?;
            let source = match source {
                Some(path) => load_profile(path)?,
                None => equilibrium_of(g, &game, *grid)?,
            };
            let rg = reduced_game(game.num_players(), game.num_actions(), g.eps, *s)?;
            match trials {
                None => {
                    let r = pipeline_trial(g, &game, &rg, &source, *delta, g.seed)?;
                    let ok = r.passed;
                    emit_report(g, &r.report, started, false)?;
                    Ok(ok)
                }
                Some(count) => {
                    let rows: Vec<Result<Trial>> = (0..*count)
                        .into_par_iter()
                        .map(|t| {
                            let t0 = Instant::now();
                            let mut trial =
                                pipeline_trial(g, &game, &rg, &source, *delta, g.seed + t)?;
                            if g.timing {
                                trial.report.push("wall_ms", t0.elapsed().as_millis());
                            }
                            Ok(trial)
                        })
                        .collect();
                    let mut out = String::new();
                    let mut all = true;
                    for (i, row) in rows.into_iter().enumerate() {
                        let row = row?;
                        if i == 0 {
                            out.push_str(&row.report.csv_header());
                            out.push('\n');
                        }
                        out.push_str(&row.report.csv_row());
                        out.push('\n');
                        all &= row.passed;
                    }
                    write_text(g.out.as_deref(), &out)?;
                    Ok(all)
                }
            }
        }
        Command::Querycount {
            source,
            queries,
            s,
            per_query,
        } => {
            let source = load_source(source)?;
            querycount(g, source.as_dyn(), *queries, *s, *per_query, started)
        }
        Command::Compile { source, s } => {
            let sg = match load_source(source)? {
                Source::Table(game) => lift_tabular(&game),
                Source::Program(sg) => sg,
            };
            let compiled = compile_reduced_circuit(&sg, g.eps, *s)?;
            let (n, alpha) = (sg.num_players(), sg.num_actions());
            let s = compiled.num_players() / n;
            emit_artifact(g, &compiled.to_text())?;
            let mut r = Report::new("compile");
            r.push("n", n)
                .push("alpha", alpha)
                .push("s", s)
                .push("source_nodes", sg.program().node_count())
                .push("compiled_nodes", compiled.program().node_count())
                .push(
                    "size_bound",
                    compiled_size_bound(sg.program().node_count(), n, alpha, s),
                );
            emit_report(g, &r, started, true)?;
            Ok(true)
        }
    }
}

struct Trial {
    report: Report,
    passed: bool,
}

/// lift -> perturb -> certify -> recover -> verify, with perturbation seed `seed`.
fn pipeline_trial(
    g: &Global,
    game: &Game,
    rg: &ReducedGame,
    source: &MixedProfile,
    delta: f64,
    seed: u64,
) -> Result<Trial> {
    let lifted = lift_profile(source, rg.group_size());
    let x = perturb(&lifted, delta, seed)?;
    let cert = CertifiedProfile::certify_reduced(game, rg, x, Some(seed))?;
    let eps_hat = cert.regret.max(0.0);
    let oracle = oracle(g, game);
    let rec = rg.recover_wsne(&cert.profile, eps_hat)?;
    let recovery_queries = oracle.snapshot().total_queries;
    let regret = wsne_regret(game, &rec.profile, 0.0)?;
    let bound = 4.0 * game.num_actions() as f64 * eps_hat;
    let passed = regret <= bound + g.tol;
    let mut report = Report::new("pipeline");
    report
        .push("game", game.fingerprint())
        .push("seed", seed)
        .push("n", game.num_players())
        .push("alpha", game.num_actions())
        .push("s", rg.group_size())
        .num("eps", rg.eps())
        .num("delta", delta)
        .num("eps_hat", eps_hat)
        .num("wsne_regret", regret)
        .num("bound", bound)
        .push("recovery_queries", recovery_queries)
        .flag("result", passed);
    Ok(Trial { report, passed })
}

/// First pure Nash equilibrium, else the lowest-regret grid point.
fn equilibrium_of(g: &Global, game: &Game, grid: usize) -> Result<MixedProfile> {
    let oracle = oracle(g, game);
    if let Some(a) = brute_force_pure_ne(&oracle, 0.0)?.first() {
        return Ok(MixedProfile::pure(game.num_actions(), a)?);
    }
    let cfg = SearchConfig {
        grid,
        eps: 1.0,
        seed: g.seed,
        tol: g.tol,
        ..Default::default()
    };
    let best =
        grid_search_ane(game, &cfg)?.ok_or_else(|| anyhow!("grid search returned nothing"))?;
    Ok(best.profile)
}

fn search(
    g: &Global,
    game: &Game,
    method: Method,
    grid: usize,
    max_iterations: usize,
    started: Instant,
) -> Result<bool> {
    let cfg = SearchConfig {
        grid,
        eps: g.eps,
        max_iterations,
        seed: g.seed,
        tol: g.tol,
        ..Default::default()
    };
    let oracle = oracle(g, game);
    let (name, found) = match method {
        Method::Grid => ("grid", grid_search_ane(game, &cfg)?),
        Method::Brd => {
            let best = best_response_dynamics(game, &cfg, None)?;
            let ok = best.regret <= g.eps + g.tol;
            ("brd", ok.then_some(best))
        }
        Method::Pure => {
            let found = brute_force_pure_ne(&oracle, g.eps)?;
            let cert = match found.first() {
                Some(a) => {
                    let x = MixedProfile::pure(game.num_actions(), a)?;
                    Some(CertifiedProfile::certify(
                        game,
                        x,
                        EquilibriumKind::Wsne,
                        None,
                    )?)
                }
                None => None,
            };
            ("pure", cert)
        }
    };
    let ledger = oracle.snapshot();
    let mut r = Report::new("search");
    r.push("game", game.fingerprint())
        .push("method", name)
        .num("eps", g.eps);
    match &found {
        Some(cert) => {
            emit_artifact(g, &write_mixed_profile(&cert.profile))?;
            r.num("regret", cert.regret);
        }
        None => {
            r.push("regret", "none");
        }
    }
    r.push("queries", ledger.total_queries)
        .push("distinct", ledger.distinct_queries)
        .flag("result", found.is_some());
    emit_report(g, &r, started, found.is_some())?;
    Ok(found.is_some())
}

fn querycount(
    g: &Global,
    source: &dyn PayoffSource,
    queries: u64,
    s: Option<usize>,
    per_query: bool,
    started: Instant,
) -> Result<bool> {
    let (n, alpha) = (source.num_players(), source.num_actions());
    let rg = reduced_game(n, alpha, g.eps, s)?;
    let oracle = oracle(g, source);
    let mut rng = ChaCha8Rng::seed_from_u64(g.seed);
    let bound = (alpha * n) as u64;
    let mut max_delta = 0;
    let mut rows = String::from("query,delta,total_queries,distinct_queries\n");
    for q in 0..queries {
        let profile: Vec<usize> = (0..rg.num_players())
            .map(|_| rng.gen_range(0..alpha))
            .collect();
        let before = oracle.snapshot().distinct_queries;
        rg.answer_reduced_query(&oracle, &profile)?;
        let ledger = oracle.snapshot();
        let delta = ledger.distinct_queries - before;
        max_delta = max_delta.max(delta);
        rows.push_str(&format!(
            "{q},{delta},{},{}\n",
            ledger.total_queries, ledger.distinct_queries
        ));
    }
    let ledger = oracle.snapshot();
    let ok = max_delta <= bound;
    if per_query {
        write_text(g.out.as_deref(), &rows)?;
        return Ok(ok);
    }
    let mut r = Report::new("querycount");
    r.push("n", n)
        .push("alpha", alpha)
        .push("s", rg.group_size())
        .push("queries", queries)
        .push("max_delta", max_delta)
        .push("query_bound", bound)
        .push("total_queries", ledger.total_queries)
        .push("distinct_queries", ledger.distinct_queries)
        .flag("result", ok);
    emit_report(g, &r, started, false)?;
    Ok(ok)
}

fn oracle<'a>(g: &Global, source: &'a dyn PayoffSource) -> PayoffOracle<'a> {
    let oracle = if g.no_memoize {
        PayoffOracle::raw(source)
    } else {
        PayoffOracle::new(source)
    };
    oracle.with_budget(g.budget)
}

fn reduced_game(n: usize, alpha: usize, eps: f64, s: Option<usize>) -> Result<ReducedGame> {
    Ok(match s {
        Some(s) => ReducedGame::with_group_size(n, alpha, eps, s)?,
        None => ReducedGame::new(n, alpha, eps)?,
    })
}

/// Reduced game whose player count matches `x`; the group size is inferred
/// from `x` when not given.
fn reduced_game_for(
    game: &Game,
    x: &MixedProfile,
    eps: f64,
    s: Option<usize>,
) -> Result<ReducedGame> {
    let n = game.num_players();
    if x.num_actions() != game.num_actions() {
        bail!(
            "profile has {} actions, game has {}",
            x.num_actions(),
            game.num_actions()
        );
    }
    if !x.num_players().is_multiple_of(n) {
        bail!(
            "profile has {} players, not a multiple of {n}",
            x.num_players()
        );
    }
    let s = s.unwrap_or(x.num_players() / n);
    if s * n != x.num_players() {
        bail!(
            "profile has {} players, expected s * n = {}",
            x.num_players(),
            s * n
        );
    }
    reduced_game(n, game.num_actions(), eps, Some(s))
}

fn equilibrium_kind(kind: Kind) -> EquilibriumKind {
    match kind {
        Kind::Ane => EquilibriumKind::Ane,
        Kind::Wsne => EquilibriumKind::Wsne,
    }
}

fn kind_name(kind: Kind) -> &'static str {
    match kind {
        Kind::Ane => "ane",
        Kind::Wsne => "wsne",
    }
}

enum Source {
    Table(Game),
    Program(SuccinctGame),
}

impl Source {
    fn as_dyn(&self) -> &dyn PayoffSource {
        match self {
            Source::Table(g) => g,
            Source::Program(p) => p,
        }
    }
}

fn read_text(path: &Path) -> Result<String> {
    if path == Path::new("-") {
        let mut s = String::new();
        io::stdin()
            .read_to_string(&mut s)
            .context("reading stdin")?;
        return Ok(s);
    }
    fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))
}

fn load_source(path: &Path) -> Result<Source> {
    let text = read_text(path)?;
    let parsed = if text.trim_start().starts_with("pprog") {
        SuccinctGame::parse(&text).map(Source::Program)
    } else {
        parse_game(&text).map(Source::Table)
    };
    parsed.with_context(|| format!("parsing {}", path.display()))
}

/// A game file, or a program small enough to tabulate.
fn load_game(path: &Path) -> Result<Game> {
    match load_source(path)? {
        Source::Table(g) => Ok(g),
        Source::Program(sg) => Ok(materialize(&sg)?),
    }
}

fn load_profile(path: &Path) -> Result<MixedProfile> {
    let text = read_text(path)?;
    parse_mixed_profile(&text).with_context(|| format!("parsing {}", path.display()))
}

fn write_text(path: Option<&Path>, text: &str) -> Result<()> {
    match path {
        Some(p) => fs::write(p, text).with_context(|| format!("writing {}", p.display())),
        None => {
            let mut out = io::stdout().lock();
            out.write_all(text.as_bytes())?;
            Ok(out.flush()?)
        }
    }
}

fn emit_artifact(g: &Global, text: &str) -> Result<()> {
    write_text(g.out.as_deref(), text)
}

/// Reports go to stdout unless an artifact already occupies it.
fn emit_report(g: &Global, r: &Report, started: Instant, has_artifact: bool) -> Result<()> {
    let mut r = r.clone();
    if g.timing {
        r.push("wall_ms", started.elapsed().as_millis());
    }
    let text = r.to_key_value();
    if has_artifact && g.out.is_none() {
        eprint!("{text}");
        Ok(())
    } else {
        write_text(None, &text)
    }
}
