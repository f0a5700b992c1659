//! Tensor-level program IR, lowering to PBS steps, the dedup passes and
//! batch scheduling.

mod exec;
mod graph;
mod interp;
mod lower;
mod schedule;
pub mod workloads;

pub use exec::{decrypt_outputs, encrypt_inputs, execute, ExecStats};
pub use graph::{Arg, Node, NodeSpec, Op, ProgramGraph, ProgramSpec, PROGRAM_VERSION};
pub use interp::{interpret, Diagnostic, Interpretation, Severity, DECODE_RISK};
pub use lower::{
    acc_dedup, compile, ks_dedup, lower, AccEntry, DedupStats, LinOp, LoweredGraph, PassConfig, PrimCounts, PrimId,
    PrimNode, PrimOp, TensorRef,
};
pub use schedule::{schedule, Batch, Schedule};
