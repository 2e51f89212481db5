//! Payoff programs: arithmetic expression DAGs over action-valued inputs.
//!
//! Input `p` evaluates to player `p`'s action as a 1-based number, so a
//! program compares inputs against constants `1..=alpha`. Comparisons yield
//! `1.0` or `0.0`; `select` takes its `then` branch when the condition is
//! nonzero. A `table` node looks up `values[sum_k (arg_k - 1) * radix^k]`.
//!
//! Nodes only reference earlier nodes, so a program is acyclic and its node
//! order is a topological order.
//!
//! Text form (`pprog v1`), one node per line with ids in order:
//!
//! ```text
//! pprog v1
//! game <n> <alpha>
//! 0 input 0
//! 1 const 1
//! 2 eq 0 1
//! 3 table <radix> <k> <arg_1> .. <arg_k> <radix^k values>
//! 4 select 2 1 3
//! outputs 4 ...
//! ```

use std::collections::HashMap;
use std::fmt::{self, Write as _};

use crate::error::{parse_err, Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct NodeId(pub(crate) usize);

impl NodeId {
    pub fn index(self) -> usize {
        self.0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CmpOp {
    Eq,
    Lt,
    Le,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ArithOp {
    Add,
    Sub,
    Mul,
    Min,
    Max,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Node {
    Input(usize),
    Const(f64),
    Cmp(CmpOp, NodeId, NodeId),
    Arith(ArithOp, NodeId, NodeId),
    Select {
        cond: NodeId,
        then: NodeId,
        otherwise: NodeId,
    },
    Table {
        args: Vec<NodeId>,
        radix: usize,
        values: Vec<f64>,
    },
}

impl Node {
    pub fn args(&self) -> Vec<NodeId> {
        match self {
            Node::Input(_) | Node::Const(_) => Vec::new(),
            Node::Cmp(_, a, b) | Node::Arith(_, a, b) => vec![*a, *b],
            Node::Select {
                cond,
                then,
                otherwise,
            } => vec![*cond, *then, *otherwise],
            Node::Table { args, .. } => args.clone(),
        }
    }

    /// Size contribution: one per node plus table entries.
    fn weight(&self) -> usize {
        match self {
            Node::Table { values, .. } => 1 + values.len(),
            _ => 1,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PayoffProgram {
    inputs: usize,
    nodes: Vec<Node>,
    outputs: Vec<NodeId>,
}

impl PayoffProgram {
    pub fn new(inputs: usize, nodes: Vec<Node>, outputs: Vec<NodeId>) -> Result<Self> {
        for (id, node) in nodes.iter().enumerate() {
            validate_node(id, node, inputs)?;
        }
        if let Some(out) = outputs.iter().find(|o| o.0 >= nodes.len()) {
            return Err(Error::Program(format!(
                "output refers to missing node {}",
                out.0
            )));
        }
        Ok(PayoffProgram {
            inputs,
            nodes,
            outputs,
        })
    }

    pub fn num_inputs(&self) -> usize {
        self.inputs
    }

    pub fn num_outputs(&self) -> usize {
        self.outputs.len()
    }

    pub fn nodes(&self) -> &[Node] {
        &self.nodes
    }

    pub fn outputs(&self) -> &[NodeId] {
        &self.outputs
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    /// Node count plus embedded table entries.
    pub fn size(&self) -> usize {
        self.nodes.iter().map(Node::weight).sum()
    }

    /// Evaluates every node on 1-based action values and returns the outputs.
    pub fn eval(&self, inputs: &[f64]) -> Result<Vec<f64>> {
        if inputs.len() != self.inputs {
            return Err(Error::DimensionMismatch {
                what: "program inputs",
                expected: self.inputs,
                found: inputs.len(),
            });
        }
        let mut vals = Vec::with_capacity(self.nodes.len());
        for node in &self.nodes {
            let v = match node {
                Node::Input(p) => inputs[*p],
                Node::Const(c) => *c,
                Node::Cmp(op, a, b) => {
                    let (a, b) = (vals[a.0], vals[b.0]);
                    let hit = match op {
                        CmpOp::Eq => a == b,
                        CmpOp::Lt => a < b,
                        CmpOp::Le => a <= b,
                    };
                    if hit {
                        1.0
                    } else {
                        0.0
                    }
                }
                Node::Arith(op, a, b) => {
                    let (a, b): (f64, f64) = (vals[a.0], vals[b.0]);
                    match op {
                        ArithOp::Add => a + b,
                        ArithOp::Sub => a - b,
                        ArithOp::Mul => a * b,
                        ArithOp::Min => a.min(b),
                        ArithOp::Max => a.max(b),
                    }
                }
                Node::Select {
                    cond,
                    then,
                    otherwise,
                } => {
                    if vals[cond.0] != 0.0 {
                        vals[then.0]
                    } else {
                        vals[otherwise.0]
                    }
                }
                Node::Table {
                    args,
                    radix,
                    values,
                } => {
                    let mut index = 0usize;
                    for arg in args.iter().rev() {
                        let v: f64 = vals[arg.0];
                        if v.fract() != 0.0 || v < 1.0 || v > *radix as f64 {
                            return Err(Error::Program(format!(
                                "table key {v} outside 1..={radix}"
                            )));
                        }
                        index = index * radix + (v as usize - 1);
                    }
                    values[index]
                }
            };
            vals.push(v);
        }
        Ok(self.outputs.iter().map(|o| vals[o.0]).collect())
    }

    /// Nodes reachable from `output`, ascending.
    pub(crate) fn cone(&self, output: NodeId) -> Vec<usize> {
        let mut marked = vec![false; self.nodes.len()];
        marked[output.0] = true;
        for id in (0..=output.0).rev() {
            if marked[id] {
                for arg in self.nodes[id].args() {
                    marked[arg.0] = true;
                }
            }
        }
        (0..self.nodes.len()).filter(|&i| marked[i]).collect()
    }

    pub fn to_text(&self, n: usize, alpha: usize) -> String {
        let mut out = String::new();
        writeln!(out, "{PROGRAM_HEADER}").unwrap();
        writeln!(out, "game {n} {alpha}").unwrap();
        for (id, node) in self.nodes.iter().enumerate() {
            writeln!(out, "{id} {node}").unwrap();
        }
        out.push_str("outputs");
        for o in &self.outputs {
            write!(out, " {}", o.0).unwrap();
        }
        out.push('\n');
        out
    }
}

pub const PROGRAM_HEADER: &str = "pprog v1";

impl fmt::Display for Node {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Node::Input(p) => write!(f, "input {p}"),
            Node::Const(c) => write!(f, "const {c}"),
            Node::Cmp(op, a, b) => {
                let name = match op {
                    CmpOp::Eq => "eq",
                    CmpOp::Lt => "lt",
                    CmpOp::Le => "le",
                };
                write!(f, "{name} {} {}", a.0, b.0)
            }
            Node::Arith(op, a, b) => {
                let name = match op {
                    ArithOp::Add => "add",
                    ArithOp::Sub => "sub",
                    ArithOp::Mul => "mul",
                    ArithOp::Min => "min",
                    ArithOp::Max => "max",
                };
                write!(f, "{name} {} {}", a.0, b.0)
            }
            Node::Select {
                cond,
                then,
                otherwise,
            } => write!(f, "select {} {} {}", cond.0, then.0, otherwise.0),
            Node::Table {
                args,
                radix,
                values,
            } => {
                write!(f, "table {radix} {}", args.len())?;
                for a in args {
                    write!(f, " {}", a.0)?;
                }
                for v in values {
                    write!(f, " {v}")?;
                }
                Ok(())
            }
        }
    }
}

fn validate_node(id: usize, node: &Node, inputs: usize) -> Result<()> {
    for arg in node.args() {
        if arg.0 >= id {
            return Err(Error::Program(format!(
                "node {id} refers to node {} which is not earlier (cycle or bad order)",
                arg.0
            )));
        }
    }
    match node {
        Node::Input(p) if *p >= inputs => Err(Error::Program(format!(
            "node {id} reads input {p} but there are {inputs} inputs"
        ))),
        Node::Const(c) if !c.is_finite() => {
            Err(Error::Program(format!("node {id} has non-finite constant")))
        }
        Node::Table {
            args,
            radix,
            values,
        } => {
            let expected = u32::try_from(args.len())
                .ok()
                .and_then(|k| radix.checked_pow(k));
            if *radix == 0 || expected != Some(values.len()) {
                return Err(Error::Program(format!(
                    "table node {id} needs {radix}^{} values, has {}",
                    args.len(),
                    values.len()
                )));
            }
            if values.iter().any(|v| !v.is_finite()) {
                return Err(Error::Program(format!(
                    "table node {id} has non-finite entry"
                )));
            }
            Ok(())
        }
        _ => Ok(()),
    }
}

/// Parses `pprog v1` text into `(n, alpha, program)`.
pub fn parse_program(text: &str) -> Result<(usize, usize, PayoffProgram)> {
    let mut lines = text
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim()))
        .filter(|(_, l)| !l.is_empty());
    match lines.next() {
        Some((_, l)) if l == PROGRAM_HEADER => {}
        Some((no, l)) => {
            return Err(parse_err(
                no,
                format!("expected {PROGRAM_HEADER:?}, found {l:?}"),
            ))
        }
        None => return Err(parse_err(1, "empty input")),
    }
    let (no, dims) = lines
        .next()
        .ok_or_else(|| parse_err(2, "missing `game n alpha`"))?;
    let toks: Vec<&str> = dims.split_whitespace().collect();
    let (n, alpha) = match toks[..] {
        ["game", n, a] => (parse_usize(no, n)?, parse_usize(no, a)?),
        _ => return Err(parse_err(no, "expected `game n alpha`")),
    };
    let mut nodes = Vec::new();
    let mut outputs = None;
    for (no, line) in lines {
        if outputs.is_some() {
            return Err(parse_err(no, "content after `outputs`"));
        }
        let toks: Vec<&str> = line.split_whitespace().collect();
        if toks[0] == "outputs" {
            outputs = Some(
                toks[1..]
                    .iter()
                    .map(|t| parse_usize(no, t).map(NodeId))
                    .collect::<Result<Vec<_>>>()?,
            );
            continue;
        }
        let id = parse_usize(no, toks[0])?;
        if id != nodes.len() {
            return Err(parse_err(
                no,
                format!("expected node id {}, found {id}", nodes.len()),
            ));
        }
        let node = parse_node(no, &toks[1..])?;
        validate_node(id, &node, n).map_err(|e| parse_err(no, e.to_string()))?;
        nodes.push(node);
    }
    let outputs =
        outputs.ok_or_else(|| parse_err(text.lines().count(), "missing `outputs` line"))?;
    let program = PayoffProgram::new(n, nodes, outputs)?;
    Ok((n, alpha, program))
}

fn parse_usize(line: usize, tok: &str) -> Result<usize> {
    tok.parse()
        .map_err(|_| parse_err(line, format!("expected an integer, found {tok:?}")))
}

fn parse_f64(line: usize, tok: &str) -> Result<f64> {
    tok.parse()
        .map_err(|_| parse_err(line, format!("expected a number, found {tok:?}")))
}

fn parse_node(no: usize, toks: &[&str]) -> Result<Node> {
    let arity = |k: usize| -> Result<Vec<NodeId>> {
        if toks.len() != k + 1 {
            return Err(parse_err(no, format!("{} takes {k} arguments", toks[0])));
        }
        toks[1..]
            .iter()
            .map(|t| parse_usize(no, t).map(NodeId))
            .collect()
    };
    let kind = *toks
        .first()
        .ok_or_else(|| parse_err(no, "missing node kind"))?;
    let node = match kind {
        "input" => Node::Input(parse_usize(no, toks.get(1).copied().unwrap_or(""))?),
        "const" => Node::Const(parse_f64(no, toks.get(1).copied().unwrap_or(""))?),
        "eq" | "lt" | "le" => {
            let a = arity(2)?;
            let op = match kind {
                "eq" => CmpOp::Eq,
                "lt" => CmpOp::Lt,
                _ => CmpOp::Le,
            };
            Node::Cmp(op, a[0], a[1])
        }
        "add" | "sub" | "mul" | "min" | "max" => {
            let a = arity(2)?;
            let op = match kind {
                "add" => ArithOp::Add,
                "sub" => ArithOp::Sub,
                "mul" => ArithOp::Mul,
                "min" => ArithOp::Min,
                _ => ArithOp::Max,
            };
            Node::Arith(op, a[0], a[1])
        }
        "select" => {
            let a = arity(3)?;
            Node::Select {
                cond: a[0],
                then: a[1],
                otherwise: a[2],
            }
        }
        "table" => {
            if toks.len() < 3 {
                return Err(parse_err(no, "table needs radix and arity"));
            }
            let radix = parse_usize(no, toks[1])?;
            let k = parse_usize(no, toks[2])?;
            let rest = &toks[3..];
            if rest.len() < k {
                return Err(parse_err(no, "table is missing arguments"));
            }
            let args = rest[..k]
                .iter()
                .map(|t| parse_usize(no, t).map(NodeId))
                .collect::<Result<Vec<_>>>()?;
            let values = rest[k..]
                .iter()
                .map(|t| parse_f64(no, t))
                .collect::<Result<Vec<_>>>()?;
            Node::Table {
                args,
                radix,
                values,
            }
        }
        other => return Err(parse_err(no, format!("unknown node kind {other:?}"))),
    };
    if matches!(node, Node::Input(_) | Node::Const(_)) && toks.len() != 2 {
        return Err(parse_err(no, format!("{kind} takes 1 argument")));
    }
    Ok(node)
}

/// Incremental program construction with constant sharing.
#[derive(Debug, Default)]
pub struct ProgramBuilder {
    inputs: usize,
    nodes: Vec<Node>,
    consts: HashMap<u64, NodeId>,
    input_nodes: HashMap<usize, NodeId>,
}

impl ProgramBuilder {
    pub fn new(inputs: usize) -> Self {
        ProgramBuilder {
            inputs,
            ..Default::default()
        }
    }

    fn push(&mut self, node: Node) -> NodeId {
        self.nodes.push(node);
        NodeId(self.nodes.len() - 1)
    }

    pub fn input(&mut self, player: usize) -> NodeId {
        if let Some(&id) = self.input_nodes.get(&player) {
            return id;
        }
        let id = self.push(Node::Input(player));
        self.input_nodes.insert(player, id);
        id
    }

    pub fn constant(&mut self, value: f64) -> NodeId {
        if let Some(&id) = self.consts.get(&value.to_bits()) {
            return id;
        }
        let id = self.push(Node::Const(value));
        self.consts.insert(value.to_bits(), id);
        id
    }

    pub fn cmp(&mut self, op: CmpOp, a: NodeId, b: NodeId) -> NodeId {
        self.push(Node::Cmp(op, a, b))
    }

    pub fn eq(&mut self, a: NodeId, b: NodeId) -> NodeId {
        self.cmp(CmpOp::Eq, a, b)
    }

    pub fn lt(&mut self, a: NodeId, b: NodeId) -> NodeId {
        self.cmp(CmpOp::Lt, a, b)
    }

    pub fn arith(&mut self, op: ArithOp, a: NodeId, b: NodeId) -> NodeId {
        self.push(Node::Arith(op, a, b))
    }

    pub fn add(&mut self, a: NodeId, b: NodeId) -> NodeId {
        self.arith(ArithOp::Add, a, b)
    }

    pub fn sub(&mut self, a: NodeId, b: NodeId) -> NodeId {
        self.arith(ArithOp::Sub, a, b)
    }

    pub fn max(&mut self, a: NodeId, b: NodeId) -> NodeId {
        self.arith(ArithOp::Max, a, b)
    }

    pub fn select(&mut self, cond: NodeId, then: NodeId, otherwise: NodeId) -> NodeId {
        self.push(Node::Select {
            cond,
            then,
            otherwise,
        })
    }

    pub fn table(&mut self, args: Vec<NodeId>, radix: usize, values: Vec<f64>) -> NodeId {
        self.push(Node::Table {
            args,
            radix,
            values,
        })
    }

    /// Appends a raw node; arguments must already exist.
    pub fn node(&mut self, node: Node) -> NodeId {
        self.push(node)
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn build(self, outputs: Vec<NodeId>) -> Result<PayoffProgram> {
        PayoffProgram::new(self.inputs, self.nodes, outputs)
    }
}
