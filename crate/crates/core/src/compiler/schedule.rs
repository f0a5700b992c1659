use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use super::lower::{LoweredGraph, PrimId, PrimOp};
use crate::error::{Error, Result};
use crate::perf::{MachineConfig, SyncMode};

/// One machine batch: up to `clusters * per_cluster` blind rotations.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Batch {
    /// Blind-rotation depth shared by every BR in the batch.
    pub level: usize,
    /// BR nodes in slot order; slot `i` runs on cluster `i % clusters`.
    pub bru: Vec<PrimId>,
    /// LIN, KS and MS steps the LPUs finish before this batch rotates.
    pub lpu_pre: Vec<PrimId>,
    /// Sample extractions after the rotations.
    pub lpu_post: Vec<PrimId>,
    /// Some BR here consumes a result of the batch just before it, so the
    /// two cannot overlap.
    pub depends_on_previous: bool,
}

impl Batch {
    /// Ciphertexts placed on each cluster.
    pub fn cluster_loads(&self, clusters: usize) -> Vec<usize> {
        (0..clusters)
            .map(|c| (self.bru.len() + clusters - 1 - c) / clusters)
            .collect()
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Schedule {
    pub clusters: usize,
    pub per_cluster: usize,
    pub sync: SyncMode,
    pub batches: Vec<Batch>,
    /// Linear steps that feed only program outputs.
    pub tail: Vec<PrimId>,
}

/// Where a step runs: batch index, then pre (0), BRU (1) or post (2).
type Slot = (usize, u8);

const TAIL: Slot = (usize::MAX, 0);

impl Schedule {
    pub fn capacity(&self) -> usize {
        self.clusters * self.per_cluster
    }

    /// Consecutive batch pairs whose work may overlap.
    pub fn overlap_pairs(&self) -> usize {
        self.batches.iter().skip(1).filter(|b| !b.depends_on_previous).count()
    }

    pub fn blind_rotations(&self) -> usize {
        self.batches.iter().map(|b| b.bru.len()).sum()
    }

    fn slots(&self, lg: &LoweredGraph) -> Result<Vec<Option<Slot>>> {
        let mut at = vec![None; lg.nodes.len()];
        let mut place = |ids: &[PrimId], s: Slot| -> Result<()> {
            for &id in ids {
                let cell = at
                    .get_mut(id)
                    .ok_or_else(|| Error::ScheduleMismatch(format!("node {id} out of range")))?;
                if cell.replace(s).is_some() {
                    return Err(Error::ScheduleMismatch(format!("node {id} scheduled twice")));
                }
            }
            Ok(())
        };
        for (b, batch) in self.batches.iter().enumerate() {
            place(&batch.lpu_pre, (b, 0))?;
            place(&batch.bru, (b, 1))?;
            place(&batch.lpu_post, (b, 2))?;
        }
        place(&self.tail, TAIL)?;
        Ok(at)
    }

    /// Checks that every step is placed once, every edge runs forward and
    /// no batch overfills a cluster.
    pub fn validate(&self, lg: &LoweredGraph) -> Result<()> {
        let at = self.slots(lg)?;
        for (id, n) in lg.nodes.iter().enumerate() {
            let here = match (n.op, at[id]) {
                (PrimOp::Input, None) => continue,
                (PrimOp::Input, Some(_)) => return Err(Error::ScheduleMismatch(format!("input {id} scheduled"))),
                (_, None) => return Err(Error::ScheduleMismatch(format!("node {id} not scheduled"))),
                (_, Some(s)) => s,
            };
            for &u in &n.inputs {
                if let Some(s) = at[u] {
                    if s > here {
                        return Err(Error::ScheduleMismatch(format!("edge {u} -> {id} runs backwards")));
                    }
                }
            }
        }
        for (b, batch) in self.batches.iter().enumerate() {
            if batch.bru.is_empty() || batch.bru.len() > self.capacity() {
                return Err(Error::ScheduleMismatch(format!(
                    "batch {b} holds {} ciphertexts, capacity {}",
                    batch.bru.len(),
                    self.capacity()
                )));
            }
        }
        Ok(())
    }
}

/// Greedy level-by-level batching: BRs of equal blind-rotation depth fill
/// batches of `clusters * round_robin` slots; levels never mix.
pub fn schedule(lg: &LoweredGraph, m: &MachineConfig) -> Schedule {
    let n = lg.nodes.len();
    // BR depth of each node: BRs on the longest BR chain above it.
    let mut depth = vec![0usize; n];
    for (id, node) in lg.nodes.iter().enumerate() {
        let d = node.inputs.iter().map(|&u| depth[u]).max().unwrap_or(0);
        depth[id] = d + usize::from(matches!(node.op, PrimOp::Br { .. }));
    }
    let max_level = depth.iter().copied().max().unwrap_or(0);
    let cap = m.batch_capacity();
    let mut batches = Vec::new();
    let mut batch_of = vec![usize::MAX; n];
    for level in 1..=max_level {
        let brs: Vec<PrimId> = (0..n)
            .filter(|&id| depth[id] == level && matches!(lg.nodes[id].op, PrimOp::Br { .. }))
            .collect();
        for chunk in brs.chunks(cap) {
            for &id in chunk {
                batch_of[id] = batches.len();
            }
            batches.push(Batch {
                level: level - 1,
                bru: chunk.to_vec(),
                lpu_pre: Vec::new(),
                lpu_post: Vec::new(),
                depends_on_previous: false,
            });
        }
    }

    // Latest batch among the BR ancestors of each node.
    let mut last_br: Vec<Option<usize>> = vec![None; n];
    for (id, node) in lg.nodes.iter().enumerate() {
        let above = node.inputs.iter().filter_map(|&u| last_br[u]).max();
        last_br[id] = match node.op {
            PrimOp::Br { .. } => {
                let b = batch_of[id];
                if b > 0 && above == Some(b - 1) {
                    batches[b].depends_on_previous = true;
                }
                Some(b)
            }
            _ => above,
        };
    }

    // Earliest batch that needs each node, walking users backwards.
    let users = lg.users();
    let mut need: Vec<Option<usize>> = vec![None; n];
    for id in (0..n).rev() {
        need[id] = users[id]
            .iter()
            .filter_map(|&v| match lg.nodes[v].op {
                PrimOp::Br { .. } => Some(batch_of[v]),
                _ => need[v],
            })
            .min();
    }
    let mut tail = Vec::new();
    for (id, node) in lg.nodes.iter().enumerate() {
        match node.op {
            PrimOp::Input | PrimOp::Br { .. } => {}
            PrimOp::Se => batches[batch_of[node.inputs[0]]].lpu_post.push(id),
            _ => match need[id] {
                Some(b) => batches[b].lpu_pre.push(id),
                None => tail.push(id),
            },
        }
    }
    Schedule {
        clusters: m.clusters,
        per_cluster: m.round_robin,
        sync: m.sync,
        batches,
        tail,
    }
}
