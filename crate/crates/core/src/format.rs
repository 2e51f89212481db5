//! Text formats for games (`nfgame v1`) and mixed profiles (`mixed v1`).
//!
//! ```text
//! nfgame v1
//! <n> <alpha>
//! <alpha^n payoffs of player 1, profile-index order>
//! ...
//! <alpha^n payoffs of player n>
//! ```
//!
//! ```text
//! mixed v1
//! <alpha probabilities of player 1>
//! ...
//! ```
//!
//! Numbers are written with Rust's shortest round-trip formatting, so
//! writing then parsing is lossless and output is byte-stable.

use std::fmt::Write as _;

use crate::error::{parse_err, Error, Result};
use crate::game::{check_tensor_size, Game, MixedProfile, MixedStrategy, DEFAULT_SIZE_LIMIT};

pub const GAME_HEADER: &str = "nfgame v1";
pub const MIXED_HEADER: &str = "mixed v1";

/// Non-empty lines with their 1-based line numbers.
fn content_lines(text: &str) -> impl Iterator<Item = (usize, &str)> {
    text.lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim()))
        .filter(|(_, l)| !l.is_empty())
}

fn parse_numbers(line_no: usize, line: &str) -> Result<Vec<f64>> {
    line.split_whitespace()
        .map(|tok| {
            tok.parse::<f64>()
                .map_err(|_| parse_err(line_no, format!("not a number: {tok:?}")))
        })
        .collect()
}

fn expect_header<'a>(
    lines: &mut impl Iterator<Item = (usize, &'a str)>,
    header: &str,
) -> Result<()> {
    match lines.next() {
        Some((_, l)) if l == header => Ok(()),
        Some((no, l)) => Err(parse_err(
            no,
            format!("expected header {header:?}, found {l:?}"),
        )),
        None => Err(parse_err(1, "empty input")),
    }
}

pub fn parse_game(text: &str) -> Result<Game> {
    let mut lines = content_lines(text);
    expect_header(&mut lines, GAME_HEADER)?;
    let (dim_line, dims) = lines
        .next()
        .ok_or_else(|| parse_err(2, "missing dimensions"))?;
    let dims: Vec<usize> = dims
        .split_whitespace()
        .map(|t| {
            t.parse()
                .map_err(|_| parse_err(dim_line, format!("bad dimension {t:?}")))
        })
        .collect::<Result<_>>()?;
    let [n, alpha] = dims[..] else {
        return Err(parse_err(dim_line, "expected `n alpha`"));
    };
    if n == 0 || alpha < 2 {
        return Err(parse_err(dim_line, "need n >= 1 and alpha >= 2"));
    }
    let profiles = check_tensor_size(n, alpha, DEFAULT_SIZE_LIMIT)?;
    let mut payoffs = Vec::with_capacity(n * profiles);
    let mut rows = 0;
    for (no, line) in lines {
        if rows == n {
            return Err(parse_err(no, format!("more than {n} payoff lines")));
        }
        let row = parse_numbers(no, line)?;
        if row.len() != profiles {
            return Err(parse_err(
                no,
                format!("expected {profiles} payoffs, found {}", row.len()),
            ));
        }
        if let Some(v) = row.iter().find(|v| !(0.0..=1.0).contains(*v)) {
            return Err(parse_err(no, format!("payoff {v} outside [0, 1]")));
        }
        payoffs.extend(row);
        rows += 1;
    }
    if rows != n {
        return Err(parse_err(
            text.lines().count(),
            format!("expected {n} payoff lines, found {rows}"),
        ));
    }
    Game::new(n, alpha, payoffs)
}

pub fn write_game(game: &Game) -> String {
    let mut out = String::new();
    writeln!(out, "{GAME_HEADER}").unwrap();
    writeln!(out, "{} {}", game.num_players(), game.num_actions()).unwrap();
    for i in 0..game.num_players() {
        push_row(&mut out, game.player_payoffs(i));
    }
    out
}

fn push_row(out: &mut String, values: &[f64]) {
    for (k, v) in values.iter().enumerate() {
        if k > 0 {
            out.push(' ');
        }
        write!(out, "{v}").unwrap();
    }
    out.push('\n');
}

pub fn parse_mixed_profile(text: &str) -> Result<MixedProfile> {
    let mut lines = content_lines(text);
    expect_header(&mut lines, MIXED_HEADER)?;
    let mut strategies = Vec::new();
    let mut alpha = None;
    for (no, line) in lines {
        let row = parse_numbers(no, line)?;
        match alpha {
            None => alpha = Some(row.len()),
            Some(a) if a != row.len() => {
                return Err(parse_err(
                    no,
                    format!("expected {a} entries, found {}", row.len()),
                ))
            }
            _ => {}
        }
        let strategy = MixedStrategy::new(row).map_err(|e| match e {
            Error::InvalidStrategy(msg) => parse_err(no, msg),
            other => other,
        })?;
        strategies.push(strategy);
    }
    if strategies.is_empty() {
        return Err(parse_err(1, "profile has no strategies"));
    }
    MixedProfile::new(strategies)
}

pub fn write_mixed_profile(x: &MixedProfile) -> String {
    let mut out = String::new();
    writeln!(out, "{MIXED_HEADER}").unwrap();
    for s in x.strategies() {
        push_row(&mut out, s.probs());
    }
    out
}
