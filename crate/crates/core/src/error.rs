use alloc::string::String;

pub type Result<T, E = Error> = core::result::Result<T, E>;

#[derive(Clone, Debug, PartialEq, Eq, thiserror::Error)]
pub enum Error {
    #[error("unsupported polynomial degree {0}")]
    UnsupportedDegree(usize),
    #[error("invalid gadget: base_log={base_log}, depth={depth}")]
    InvalidGadget { base_log: u32, depth: u32 },
    #[error("invalid parameters: {0}")]
    InvalidParams(String),
    #[error("fixed-point overflow in {phase} stage {stage}")]
    FixedOverflow { phase: &'static str, stage: usize },
    #[error("spectrum mode or length mismatch")]
    SpectrumMismatch,
    #[error("plan built for degree {plan} used with degree {got}")]
    PlanMismatch { plan: usize, got: usize },
    #[error("message {message} does not fit in {width} bits")]
    MessageOutOfRange { message: u64, width: u32 },
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("lookup table has {got} entries, expected {expected}")]
    LutLength { expected: usize, got: usize },
    #[error("lookup table entry {value} at index {index} exceeds the message space")]
    LutEntry { index: usize, value: u64 },
    #[error("program error at node {node}: {kind}")]
    Program { node: String, kind: ProgramErrorKind },
    #[error("schedule does not fit machine: {0}")]
    ScheduleMismatch(String),
}

#[derive(Clone, Debug, PartialEq, Eq, thiserror::Error)]
pub enum ProgramErrorKind {
    #[error("syntax: {0}")]
    Syntax(String),
    #[error("unknown op `{0}`")]
    UnknownOp(String),
    #[error("dependency cycle")]
    Cycle,
    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),
    #[error("operand count: expected {expected}, got {got}")]
    Arity { expected: usize, got: usize },
    #[error("unknown node `{0}`")]
    UnknownNode(String),
    #[error("duplicate node id")]
    DuplicateId,
    #[error("unknown table `{0}`")]
    UnknownTable(String),
    #[error("invalid table: {0}")]
    InvalidTable(String),
    #[error("input: {0}")]
    Input(String),
}

impl Error {
    pub(crate) fn program(node: impl Into<String>, kind: ProgramErrorKind) -> Self {
        Error::Program {
            node: node.into(),
            kind,
        }
    }
}
