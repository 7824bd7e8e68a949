use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("syntax error at byte {offset}: {message}")]
    Syntax { offset: usize, message: String },

    #[error("unknown function `{name}` at byte {offset}")]
    UnknownFunction { name: String, offset: usize },

    #[error("unbound variable `{0}`")]
    UnboundVariable(String),

    #[error("domain error in `{expr}`: {message}")]
    Domain { expr: String, message: String },

    #[error("variable `{name}` is not allowed in {owner}")]
    Vocabulary { name: String, owner: String },

    #[error("invalid trajectory: {0}")]
    Trajectory(String),

    #[error("time {t} outside trajectory domain [{lo}, {hi}]")]
    OutOfDomain { t: f64, lo: f64, hi: f64 },

    #[error("derivative order {k} exceeds trajectory order {m}")]
    OrderTooHigh { k: usize, m: usize },

    #[error("invalid problem: {0}")]
    Problem(String),

    #[error("incompatible trajectory: {0}")]
    Incompatible(String),

    #[error("partial index {index} out of range for order {m}")]
    PartialIndex { index: usize, m: usize },

    #[error("finite-difference stencil of order {order} at t = {t} crosses a breakpoint of [{a}, {b}]")]
    StencilCrossesBreakpoint { t: f64, order: usize, a: f64, b: f64 },

    #[error("grid not commensurate: {0}")]
    Grid(String),

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error("direction does not vanish on pinned node {0}")]
    PinnedDirection(usize),

    #[error("document error: {0}")]
    Document(String),
}
