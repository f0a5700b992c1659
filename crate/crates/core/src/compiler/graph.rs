use alloc::collections::{BTreeMap, BTreeSet};
use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::error::{Error, ProgramErrorKind as Kind, Result};
use crate::tfhe::MAX_WIDTH;

/// Version of the program text format.
pub const PROGRAM_VERSION: u32 = 1;

/// Node argument: a constant or a table id.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Arg {
    Int(i64),
    Name(String),
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct NodeSpec {
    pub id: String,
    pub op: String,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub args: Vec<Arg>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub shape: Option<Vec<usize>>,
}

/// Unvalidated program as written in a program file.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ProgramSpec {
    #[serde(default = "default_version")]
    pub version: u32,
    pub nodes: Vec<NodeSpec>,
    #[serde(default)]
    pub edges: Vec<(String, String)>,
    #[serde(default)]
    pub tables: BTreeMap<String, Vec<u64>>,
}

fn default_version() -> u32 {
    PROGRAM_VERSION
}

impl Default for ProgramSpec {
    fn default() -> Self {
        ProgramSpec {
            version: PROGRAM_VERSION,
            nodes: Vec::new(),
            edges: Vec::new(),
            tables: BTreeMap::new(),
        }
    }
}

impl ProgramSpec {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn table(&mut self, id: &str, entries: Vec<u64>) -> String {
        self.tables.insert(id.to_string(), entries);
        id.to_string()
    }

    fn push(&mut self, id: &str, op: &str, args: Vec<Arg>, shape: Option<Vec<usize>>, operands: &[&str]) -> String {
        self.nodes.push(NodeSpec {
            id: id.to_string(),
            op: op.to_string(),
            args,
            shape,
        });
        for &from in operands {
            self.edges.push((from.to_string(), id.to_string()));
        }
        id.to_string()
    }

    pub fn input(&mut self, id: &str, shape: &[usize]) -> String {
        self.push(id, "input", vec![], Some(shape.to_vec()), &[])
    }

    pub fn output(&mut self, id: &str, x: &str) -> String {
        self.push(id, "output", vec![], None, &[x])
    }

    pub fn add(&mut self, id: &str, a: &str, b: &str) -> String {
        self.push(id, "add", vec![], None, &[a, b])
    }

    pub fn mul_const(&mut self, id: &str, x: &str, c: i64) -> String {
        self.push(id, "mul_const", vec![Arg::Int(c)], None, &[x])
    }

    pub fn lut(&mut self, id: &str, x: &str, table: &str) -> String {
        self.push(id, "lut", vec![Arg::Name(table.to_string())], None, &[x])
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "op", content = "arg", rename_all = "snake_case")]
pub enum Op {
    Input,
    Output,
    Add,
    MulConst(i64),
    Lut(String),
}

impl Op {
    fn arity(&self) -> usize {
        match self {
            Op::Input => 0,
            Op::Add => 2,
            _ => 1,
        }
    }

    pub fn is_linear(&self) -> bool {
        matches!(self, Op::Add | Op::MulConst(_))
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Node {
    pub id: String,
    pub op: Op,
    /// Operand indices into [`ProgramGraph::nodes`], in edge order.
    pub operands: Vec<usize>,
    pub shape: Vec<usize>,
}

impl Node {
    /// Element count of the node's tensor.
    pub fn numel(&self) -> usize {
        self.shape.iter().product()
    }
}

/// Validated program, nodes in topological order.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ProgramGraph {
    nodes: Vec<Node>,
    tables: BTreeMap<String, Vec<u64>>,
}

fn err(node: &str, kind: Kind) -> Error {
    Error::program(node, kind)
}

fn parse_op(n: &NodeSpec) -> Result<Op> {
    let syntax = |msg: &str| err(&n.id, Kind::Syntax(msg.to_string()));
    let no_args = |op: Op| {
        if n.args.is_empty() {
            Ok(op)
        } else {
            Err(syntax("unexpected arguments"))
        }
    };
    match n.op.as_str() {
        "input" => no_args(Op::Input),
        "output" => no_args(Op::Output),
        "add" => no_args(Op::Add),
        "mul_const" => match n.args.as_slice() {
            [Arg::Int(c)] => Ok(Op::MulConst(*c)),
            _ => Err(syntax("mul_const takes one integer")),
        },
        "lut" => match n.args.as_slice() {
            [Arg::Name(t)] => Ok(Op::Lut(t.clone())),
            [Arg::Int(t)] => Ok(Op::Lut(t.to_string())),
            _ => Err(syntax("lut takes one table id")),
        },
        other => Err(err(&n.id, Kind::UnknownOp(other.to_string()))),
    }
}

fn check_tables(tables: &BTreeMap<String, Vec<u64>>) -> Result<()> {
    let mut len = None;
    for (id, t) in tables {
        let bad = |msg: String| Err(err(id, Kind::InvalidTable(msg)));
        if t.len() < 2 || !t.len().is_power_of_two() || t.len() > 1 << MAX_WIDTH {
            return bad(format!("length {} is not a power of two in 2..=2^{MAX_WIDTH}", t.len()));
        }
        if *len.get_or_insert(t.len()) != t.len() {
            return bad(format!("length {} differs from other tables", t.len()));
        }
        if let Some(v) = t.iter().find(|&&v| v >= t.len() as u64) {
            return bad(format!("entry {v} outside the message space"));
        }
    }
    Ok(())
}

impl ProgramGraph {
    pub fn from_spec(spec: &ProgramSpec) -> Result<Self> {
        if spec.version != PROGRAM_VERSION {
            return Err(err(
                "<program>",
                Kind::Syntax(format!("unsupported version {}", spec.version)),
            ));
        }
        check_tables(&spec.tables)?;
        let mut index = BTreeMap::new();
        let mut ops = Vec::with_capacity(spec.nodes.len());
        for (i, n) in spec.nodes.iter().enumerate() {
            if index.insert(n.id.as_str(), i).is_some() {
                return Err(err(&n.id, Kind::DuplicateId));
            }
            let op = parse_op(n)?;
            if let Op::Lut(t) = &op {
                if !spec.tables.contains_key(t) {
                    return Err(err(&n.id, Kind::UnknownTable(t.clone())));
                }
            }
            ops.push(op);
        }
        let mut operands: Vec<Vec<usize>> = vec![Vec::new(); spec.nodes.len()];
        for (from, to) in &spec.edges {
            let lookup = |id: &String| {
                index
                    .get(id.as_str())
                    .copied()
                    .ok_or_else(|| err(id, Kind::UnknownNode(id.clone())))
            };
            let (f, t) = (lookup(from)?, lookup(to)?);
            operands[t].push(f);
        }
        for (i, n) in spec.nodes.iter().enumerate() {
            let (expected, got) = (ops[i].arity(), operands[i].len());
            if expected != got {
                return Err(err(&n.id, Kind::Arity { expected, got }));
            }
        }

        // Kahn's algorithm, always taking the earliest ready node so the
        // order is stable.
        let mut pending: Vec<usize> = operands.iter().map(Vec::len).collect();
        let mut users: Vec<Vec<usize>> = vec![Vec::new(); spec.nodes.len()];
        for (t, ops) in operands.iter().enumerate() {
            for &f in ops {
                users[f].push(t);
            }
        }
        let mut ready: BTreeSet<usize> = (0..pending.len()).filter(|&i| pending[i] == 0).collect();
        let mut order = Vec::with_capacity(pending.len());
        while let Some(i) = ready.pop_first() {
            order.push(i);
            for &u in &users[i] {
                pending[u] -= 1;
                if pending[u] == 0 {
                    ready.insert(u);
                }
            }
        }
        if order.len() != pending.len() {
            // Walking back through unfinished operands ends up on the cycle.
            let mut v = (0..pending.len()).find(|&i| pending[i] > 0).expect("unfinished node");
            for _ in 0..pending.len() {
                v = *operands[v]
                    .iter()
                    .find(|&&f| pending[f] > 0)
                    .expect("unfinished operand");
            }
            return Err(err(&spec.nodes[v].id, Kind::Cycle));
        }

        let mut position = vec![0; order.len()];
        let mut nodes: Vec<Node> = Vec::with_capacity(order.len());
        for (pos, &i) in order.iter().enumerate() {
            position[i] = pos;
            let n = &spec.nodes[i];
            let operands: Vec<usize> = operands[i].iter().map(|&f| position[f]).collect();
            let derived = match ops[i] {
                Op::Input => n.shape.clone().unwrap_or_else(|| vec![1]),
                Op::Add => {
                    let (a, b) = (&nodes[operands[0]].shape, &nodes[operands[1]].shape);
                    if a != b {
                        return Err(err(&n.id, Kind::ShapeMismatch(format!("{a:?} + {b:?}"))));
                    }
                    a.clone()
                }
                _ => nodes[operands[0]].shape.clone(),
            };
            if derived.is_empty() || derived.contains(&0) {
                return Err(err(&n.id, Kind::ShapeMismatch(format!("empty shape {derived:?}"))));
            }
            if let Some(s) = &n.shape {
                if *s != derived {
                    return Err(err(
                        &n.id,
                        Kind::ShapeMismatch(format!("declared {s:?}, derived {derived:?}")),
                    ));
                }
            }
            nodes.push(Node {
                id: n.id.clone(),
                op: ops[i].clone(),
                operands,
                shape: derived,
            });
        }
        Ok(ProgramGraph {
            nodes,
            tables: spec.tables.clone(),
        })
    }

    pub fn nodes(&self) -> &[Node] {
        &self.nodes
    }

    pub fn tables(&self) -> &BTreeMap<String, Vec<u64>> {
        &self.tables
    }

    pub fn node(&self, id: &str) -> Option<&Node> {
        self.nodes.iter().find(|n| n.id == id)
    }

    /// Message width implied by the table length, if there are tables.
    pub fn width(&self) -> Option<u32> {
        self.tables.values().next().map(|t| t.len().trailing_zeros())
    }

    pub fn inputs(&self) -> impl Iterator<Item = &Node> {
        self.nodes.iter().filter(|n| n.op == Op::Input)
    }

    pub fn outputs(&self) -> impl Iterator<Item = &Node> {
        self.nodes.iter().filter(|n| n.op == Op::Output)
    }

    /// Nodes other than inputs.
    pub fn compute_nodes(&self) -> usize {
        self.nodes.iter().filter(|n| n.op != Op::Input).count()
    }

    /// Scalar table lookups once tensors are expanded.
    pub fn lut_elements(&self) -> usize {
        self.nodes
            .iter()
            .filter(|n| matches!(n.op, Op::Lut(_)))
            .map(Node::numel)
            .sum()
    }

    /// Back to the file representation, with explicit shapes.
    pub fn to_spec(&self) -> ProgramSpec {
        let nodes = self
            .nodes
            .iter()
            .map(|n| {
                let (op, args) = match &n.op {
                    Op::Input => ("input", vec![]),
                    Op::Output => ("output", vec![]),
                    Op::Add => ("add", vec![]),
                    Op::MulConst(c) => ("mul_const", vec![Arg::Int(*c)]),
                    Op::Lut(t) => ("lut", vec![Arg::Name(t.clone())]),
                };
                NodeSpec {
                    id: n.id.clone(),
                    op: op.to_string(),
                    args,
                    shape: Some(n.shape.clone()),
                }
            })
            .collect();
        let edges = self
            .nodes
            .iter()
            .flat_map(|n| {
                n.operands
                    .iter()
                    .map(move |&f| (self.nodes[f].id.clone(), n.id.clone()))
            })
            .collect();
        ProgramSpec {
            version: PROGRAM_VERSION,
            nodes,
            edges,
            tables: self.tables.clone(),
        }
    }
}
