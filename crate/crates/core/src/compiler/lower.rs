use alloc::collections::BTreeMap;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use super::graph::{Op, ProgramGraph};

/// Index into [`LoweredGraph::nodes`].
pub type PrimId = usize;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(tag = "lin", content = "c", rename_all = "snake_case")]
pub enum LinOp {
    Add,
    MulConst(i64),
}

/// Scalar primitive step.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum PrimOp {
    /// One element of a program input.
    Input,
    Lin {
        op: LinOp,
    },
    /// Key switch with key-switching key `ksk`.
    Ks {
        ksk: u32,
    },
    Ms,
    /// Blind rotation of accumulator registry entry `acc`.
    Br {
        acc: usize,
    },
    Se,
}

impl PrimOp {
    pub fn name(&self) -> &'static str {
        match self {
            PrimOp::Input => "input",
            PrimOp::Lin { .. } => "lin",
            PrimOp::Ks { .. } => "ks",
            PrimOp::Ms => "ms",
            PrimOp::Br { .. } => "br",
            PrimOp::Se => "se",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PrimNode {
    pub op: PrimOp,
    pub inputs: Vec<PrimId>,
    /// Program node (index into [`LoweredGraph::sources`]) and tensor
    /// element this step came from.
    pub source: usize,
    pub element: usize,
}

/// Accumulator registry entry: one materialized LUT polynomial.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct AccEntry {
    /// Table id of the first user.
    pub table: String,
    pub entries: Vec<u64>,
}

/// A program tensor (input or output) as a list of scalar values.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TensorRef {
    pub id: String,
    pub shape: Vec<usize>,
    pub values: Vec<PrimId>,
}

/// Scalar dataflow graph of primitive steps, topologically ordered.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct LoweredGraph {
    pub nodes: Vec<PrimNode>,
    pub accumulators: Vec<AccEntry>,
    pub inputs: Vec<TensorRef>,
    pub outputs: Vec<TensorRef>,
    /// Program node ids, indexed by [`PrimNode::source`].
    pub sources: Vec<String>,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct PrimCounts {
    pub input: usize,
    pub lin: usize,
    pub ks: usize,
    pub ms: usize,
    pub br: usize,
    pub se: usize,
}

impl PrimCounts {
    pub fn total(&self) -> usize {
        self.input + self.lin + self.ks + self.ms + self.br + self.se
    }
}

impl LoweredGraph {
    pub fn counts(&self) -> PrimCounts {
        let mut c = PrimCounts::default();
        for n in &self.nodes {
            *match n.op {
                PrimOp::Input => &mut c.input,
                PrimOp::Lin { .. } => &mut c.lin,
                PrimOp::Ks { .. } => &mut c.ks,
                PrimOp::Ms => &mut c.ms,
                PrimOp::Br { .. } => &mut c.br,
                PrimOp::Se => &mut c.se,
            } += 1;
        }
        c
    }

    /// Accumulators that must be materialized in the accumulator buffer.
    pub fn acc_materializations(&self) -> usize {
        self.accumulators.len()
    }

    /// Consumers of every node.
    pub fn users(&self) -> Vec<Vec<PrimId>> {
        let mut users = vec![Vec::new(); self.nodes.len()];
        for (i, n) in self.nodes.iter().enumerate() {
            for &j in &n.inputs {
                users[j].push(i);
            }
        }
        users
    }
}

/// Expands tensors element-wise and splits every table lookup into the
/// KS, MS, BR, SE chain. Each BR gets its own accumulator entry.
pub fn lower(g: &ProgramGraph) -> LoweredGraph {
    let mut out = LoweredGraph {
        nodes: Vec::new(),
        accumulators: Vec::new(),
        inputs: Vec::new(),
        outputs: Vec::new(),
        sources: g.nodes().iter().map(|n| n.id.clone()).collect(),
    };
    // Value of every program node element.
    let mut values: Vec<Vec<PrimId>> = Vec::with_capacity(g.nodes().len());
    for (src, node) in g.nodes().iter().enumerate() {
        let push = |out: &mut LoweredGraph, op: PrimOp, inputs: Vec<PrimId>, element: usize| {
            out.nodes.push(PrimNode {
                op,
                inputs,
                source: src,
                element,
            });
            out.nodes.len() - 1
        };
        let operand = |k: usize, e: usize| values[node.operands[k]][e];
        let mut vals = Vec::with_capacity(node.numel());
        for e in 0..node.numel() {
            let v = match &node.op {
                Op::Input => push(&mut out, PrimOp::Input, vec![], e),
                Op::Output => operand(0, e),
                Op::Add => push(
                    &mut out,
                    PrimOp::Lin { op: LinOp::Add },
                    vec![operand(0, e), operand(1, e)],
                    e,
                ),
                Op::MulConst(c) => push(
                    &mut out,
                    PrimOp::Lin {
                        op: LinOp::MulConst(*c),
                    },
                    vec![operand(0, e)],
                    e,
                ),
                Op::Lut(t) => {
                    let ks = push(&mut out, PrimOp::Ks { ksk: 0 }, vec![operand(0, e)], e);
                    let ms = push(&mut out, PrimOp::Ms, vec![ks], e);
                    let acc = out.accumulators.len();
                    out.accumulators.push(AccEntry {
                        table: t.clone(),
                        entries: g.tables()[t].clone(),
                    });
                    let br = push(&mut out, PrimOp::Br { acc }, vec![ms], e);
                    push(&mut out, PrimOp::Se, vec![br], e)
                }
            };
            vals.push(v);
        }
        let tensor = TensorRef {
            id: node.id.clone(),
            shape: node.shape.clone(),
            values: vals.clone(),
        };
        match node.op {
            Op::Input => out.inputs.push(tensor),
            Op::Output => out.outputs.push(tensor),
            _ => {}
        }
        values.push(vals);
    }
    out
}

/// Operation counts before and after the dedup passes.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct DedupStats {
    pub ks_before: usize,
    pub ks_after: usize,
    pub acc_materializations_before: usize,
    pub acc_materializations_after: usize,
}

fn fraction(before: usize, after: usize) -> f64 {
    if before == 0 {
        0.0
    } else {
        (before - after) as f64 / before as f64
    }
}

impl DedupStats {
    pub fn unchanged(lg: &LoweredGraph) -> Self {
        let ks = lg.counts().ks;
        let acc = lg.acc_materializations();
        DedupStats {
            ks_before: ks,
            ks_after: ks,
            acc_materializations_before: acc,
            acc_materializations_after: acc,
        }
    }

    pub fn ks_reduction(&self) -> f64 {
        fraction(self.ks_before, self.ks_after)
    }

    pub fn acc_reduction(&self) -> f64 {
        fraction(self.acc_materializations_before, self.acc_materializations_after)
    }

    /// Stats of two passes applied in sequence.
    pub fn then(self, next: DedupStats) -> DedupStats {
        DedupStats {
            ks_before: self.ks_before,
            ks_after: next.ks_after,
            acc_materializations_before: self.acc_materializations_before,
            acc_materializations_after: next.acc_materializations_after,
        }
    }
}

/// Shares one KS (and its MS) among all lookups of the same ciphertext
/// under the same key-switching key.
pub fn ks_dedup(lg: &LoweredGraph) -> (LoweredGraph, DedupStats) {
    let mut nodes: Vec<PrimNode> = Vec::with_capacity(lg.nodes.len());
    let mut remap: Vec<PrimId> = Vec::with_capacity(lg.nodes.len());
    let mut seen_ks: BTreeMap<(PrimId, u32), PrimId> = BTreeMap::new();
    let mut seen_ms: BTreeMap<PrimId, PrimId> = BTreeMap::new();
    for n in &lg.nodes {
        let inputs: Vec<PrimId> = n.inputs.iter().map(|&i| remap[i]).collect();
        let existing = match n.op {
            PrimOp::Ks { ksk } => seen_ks.get(&(inputs[0], ksk)).copied(),
            PrimOp::Ms => seen_ms.get(&inputs[0]).copied(),
            _ => None,
        };
        if let Some(id) = existing {
            remap.push(id);
            continue;
        }
        let id = nodes.len();
        match n.op {
            PrimOp::Ks { ksk } => {
                seen_ks.insert((inputs[0], ksk), id);
            }
            PrimOp::Ms => {
                seen_ms.insert(inputs[0], id);
            }
            _ => {}
        }
        nodes.push(PrimNode { inputs, ..n.clone() });
        remap.push(id);
    }
    let retarget = |t: &TensorRef| TensorRef {
        values: t.values.iter().map(|&v| remap[v]).collect(),
        ..t.clone()
    };
    let out = LoweredGraph {
        nodes,
        accumulators: lg.accumulators.clone(),
        inputs: lg.inputs.iter().map(retarget).collect(),
        outputs: lg.outputs.iter().map(retarget).collect(),
        sources: lg.sources.clone(),
    };
    let stats = DedupStats::unchanged(lg).then(DedupStats::unchanged(&out));
    (out, stats)
}

/// Merges accumulator entries with identical table contents, whatever their
/// table ids.
pub fn acc_dedup(lg: &LoweredGraph) -> (LoweredGraph, DedupStats) {
    let mut by_content: BTreeMap<&[u64], usize> = BTreeMap::new();
    let mut accumulators: Vec<AccEntry> = Vec::new();
    let mut remap = Vec::with_capacity(lg.accumulators.len());
    for a in &lg.accumulators {
        let id = *by_content.entry(a.entries.as_slice()).or_insert_with(|| {
            accumulators.push(a.clone());
            accumulators.len() - 1
        });
        remap.push(id);
    }
    let nodes = lg
        .nodes
        .iter()
        .map(|n| match n.op {
            PrimOp::Br { acc } => PrimNode {
                op: PrimOp::Br { acc: remap[acc] },
                ..n.clone()
            },
            _ => n.clone(),
        })
        .collect();
    let out = LoweredGraph {
        nodes,
        accumulators,
        ..lg.clone()
    };
    let stats = DedupStats::unchanged(lg).then(DedupStats::unchanged(&out));
    (out, stats)
}

/// Which passes [`compile`] runs.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PassConfig {
    pub ks_dedup: bool,
    pub acc_dedup: bool,
}

impl Default for PassConfig {
    fn default() -> Self {
        PassConfig {
            ks_dedup: true,
            acc_dedup: true,
        }
    }
}

/// Lowers `g` and runs the enabled passes.
pub fn compile(g: &ProgramGraph, passes: PassConfig) -> (LoweredGraph, DedupStats) {
    let lg = lower(g);
    let mut stats = DedupStats::unchanged(&lg);
    let mut lg = lg;
    if passes.ks_dedup {
        let (next, s) = ks_dedup(&lg);
        stats = stats.then(s);
        lg = next;
    }
    if passes.acc_dedup {
        let (next, s) = acc_dedup(&lg);
        stats = stats.then(s);
        lg = next;
    }
    (lg, stats)
}
