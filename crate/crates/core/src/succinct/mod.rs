//! Succinct games `(n, U)` whose payoffs come from a [`PayoffProgram`], and
//! the compiler that turns `U` into the program of the majority-group
//! reduced game.

mod program;

pub use program::{
    parse_program, ArithOp, CmpOp, Node, NodeId, PayoffProgram, ProgramBuilder, PROGRAM_HEADER,
};

use crate::error::{Error, Result};
use crate::game::{check_profile, check_tensor_size, Game, DEFAULT_SIZE_LIMIT};
use crate::reduction::group_size;

#[derive(Debug, Clone, PartialEq)]
pub struct SuccinctGame {
    n: usize,
    alpha: usize,
    program: PayoffProgram,
}

impl SuccinctGame {
    pub fn new(n: usize, alpha: usize, program: PayoffProgram) -> Result<Self> {
        if n == 0 || alpha < 2 {
            return Err(Error::InvalidParameter(format!(
                "need n >= 1 and alpha >= 2, got n={n}, alpha={alpha}"
            )));
        }
        if program.num_inputs() != n || program.num_outputs() != n {
            return Err(Error::Program(format!(
                "program has {} inputs and {} outputs, game has {n} players",
                program.num_inputs(),
                program.num_outputs()
            )));
        }
        Ok(SuccinctGame { n, alpha, program })
    }

    pub fn parse(text: &str) -> Result<Self> {
        let (n, alpha, program) = parse_program(text)?;
        SuccinctGame::new(n, alpha, program)
    }

    pub fn to_text(&self) -> String {
        self.program.to_text(self.n, self.alpha)
    }

    pub fn num_players(&self) -> usize {
        self.n
    }

    pub fn num_actions(&self) -> usize {
        self.alpha
    }

    pub fn program(&self) -> &PayoffProgram {
        &self.program
    }

    /// Payoffs of all players at a 0-based pure profile. Outputs outside
    /// `[0, 1]` mean the program is malformed and are reported as errors.
    pub fn evaluate(&self, profile: &[usize]) -> Result<Vec<f64>> {
        check_profile(profile, self.n, self.alpha)?;
        let inputs: Vec<f64> = profile.iter().map(|&a| (a + 1) as f64).collect();
        let out = self.program.eval(&inputs)?;
        if let Some(v) = out.iter().find(|v| !(0.0..=1.0).contains(*v)) {
            return Err(Error::Program(format!("output {v} outside [0, 1]")));
        }
        Ok(out)
    }
}

/// One table node per player over all inputs.
pub fn lift_tabular(game: &Game) -> SuccinctGame {
    let n = game.num_players();
    let alpha = game.num_actions();
    let mut b = ProgramBuilder::new(n);
    let inputs: Vec<NodeId> = (0..n).map(|p| b.input(p)).collect();
    let outputs = (0..n)
        .map(|i| b.table(inputs.clone(), alpha, game.player_payoffs(i).to_vec()))
        .collect();
    let program = b.build(outputs).expect("well-formed by construction");
    SuccinctGame::new(n, alpha, program).expect("dimensions match")
}

pub fn materialize(sg: &SuccinctGame) -> Result<Game> {
    materialize_with_limit(sg, DEFAULT_SIZE_LIMIT)
}

pub fn materialize_with_limit(sg: &SuccinctGame, limit: u128) -> Result<Game> {
    let (n, alpha) = (sg.n, sg.alpha);
    let profiles = check_tensor_size(n, alpha, limit)?;
    let mut payoffs = vec![0.0; n * profiles];
    let mut profile = vec![0; n];
    for index in 0..profiles {
        for (i, v) in sg.evaluate(&profile)?.into_iter().enumerate() {
            payoffs[i * profiles + index] = v;
        }
        crate::game::advance(&mut profile, alpha);
    }
    Game::new(n, alpha, payoffs)
}

/// Builds the program of the reduced game with `s * n` players, player
/// `(i, j)` at input `i * s + j`.
///
/// Per group, action counts are sums of equality indicators; the majority is
/// a chain of strict comparisons so ties keep the smaller action. The source
/// program's cone for output `i` is then instantiated once per action `k`
/// with input `i` fixed to `k` and every other input wired to that group's
/// majority. Finally each player selects the copy matching its own action.
///
/// The result has at most `alpha * n * size(U) + 3 * alpha * n * s + 3 * alpha * n + alpha`
/// nodes, see [`compiled_size_bound`].
pub fn compile_reduced_circuit(
    sg: &SuccinctGame,
    eps: f64,
    s_override: Option<usize>,
) -> Result<SuccinctGame> {
    if !(eps > 0.0 && eps < 1.0) {
        return Err(Error::InvalidParameter(format!(
            "eps must lie in (0, 1), got {eps}"
        )));
    }
    let (n, alpha) = (sg.n, sg.alpha);
    let s = match s_override {
        Some(0) => return Err(Error::InvalidParameter("group size must be >= 1".into())),
        Some(s) => s,
        None => group_size(n, alpha, eps)?,
    };
    let mut b = ProgramBuilder::new(s * n);
    let consts: Vec<NodeId> = (1..=alpha).map(|k| b.constant(k as f64)).collect();

    // indicator[i][j][k] = [a_{i,j} == k + 1]
    let mut indicator = Vec::with_capacity(n);
    let mut majority = Vec::with_capacity(n);
    for i in 0..n {
        let group: Vec<Vec<NodeId>> = (0..s)
            .map(|j| {
                let a = b.input(i * s + j);
                consts.iter().map(|&c| b.eq(a, c)).collect()
            })
            .collect();
        let counts: Vec<NodeId> = (0..alpha)
            .map(|k| {
                let mut acc = group[0][k];
                for row in &group[1..] {
                    acc = b.add(acc, row[k]);
                }
                acc
            })
            .collect();
        let mut best = consts[0];
        let mut best_count = counts[0];
        for k in 1..alpha {
            let beats = b.lt(best_count, counts[k]);
            best = b.select(beats, consts[k], best);
            best_count = b.max(best_count, counts[k]);
        }
        indicator.push(group);
        majority.push(best);
    }

    let source = sg.program();
    let mut outputs = vec![NodeId(0); s * n];
    for i in 0..n {
        let cone = source.cone(source.outputs()[i]);
        let copies: Vec<NodeId> = consts
            .iter()
            .map(|&own| {
                let wiring: Vec<NodeId> = (0..n)
                    .map(|p| if p == i { own } else { majority[p] })
                    .collect();
                copy_cone(&mut b, source, &cone, &wiring, source.outputs()[i])
            })
            .collect();
        for j in 0..s {
            let mut out = copies[alpha - 1];
            for k in (0..alpha - 1).rev() {
                out = b.select(indicator[i][j][k], copies[k], out);
            }
            outputs[i * s + j] = out;
        }
    }
    let program = b.build(outputs)?;
    SuccinctGame::new(s * n, alpha, program)
}

/// Upper bound on the node count of [`compile_reduced_circuit`]'s output.
pub fn compiled_size_bound(source_nodes: usize, n: usize, alpha: usize, s: usize) -> usize {
    alpha * n * source_nodes + 3 * alpha * n * s + 3 * alpha * n + alpha
}

fn copy_cone(
    b: &mut ProgramBuilder,
    source: &PayoffProgram,
    cone: &[usize],
    wiring: &[NodeId],
    output: NodeId,
) -> NodeId {
    let mut remap = vec![None; source.node_count()];
    let get = |remap: &[Option<NodeId>], id: NodeId| remap[id.index()].expect("cone is closed");
    for &id in cone {
        let new = match &source.nodes()[id] {
            Node::Input(p) => wiring[*p],
            Node::Const(c) => b.constant(*c),
            Node::Cmp(op, x, y) => {
                let (x, y) = (get(&remap, *x), get(&remap, *y));
                b.cmp(*op, x, y)
            }
            Node::Arith(op, x, y) => {
                let (x, y) = (get(&remap, *x), get(&remap, *y));
                b.arith(*op, x, y)
            }
            Node::Select {
                cond,
                then,
                otherwise,
            } => {
                let (c, t, o) = (
                    get(&remap, *cond),
                    get(&remap, *then),
                    get(&remap, *otherwise),
                );
                b.select(c, t, o)
            }
            Node::Table {
                args,
                radix,
                values,
            } => {
                let args = args.iter().map(|a| get(&remap, *a)).collect();
                b.table(args, *radix, values.clone())
            }
        };
        remap[id] = Some(new);
    }
    get(&remap, output)
}
