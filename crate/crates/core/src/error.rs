use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid domain: {0}")]
    InvalidDomain(String),

    #[error("empty interior: {0}")]
    EmptyInterior(String),

    #[error("ill-conditioned least-squares system (condition estimate {condition:.3e}); lower the degree or recenter the variable")]
    IllConditioned { condition: f64 },

    #[error("grid too coarse or target winds: phase jump {jump:.4} between nodes {from} and {to}")]
    BranchJump { from: usize, to: usize, jump: f64 },

    #[error("target vanishes at node {0}")]
    VanishingTarget(usize),

    #[error("pole of zeta at s = 1")]
    Pole,

    #[error("argument out of supported range: {0}")]
    OutOfRange(String),

    #[error("requested accuracy {requested:.3e} not reachable (estimated error {achievable:.3e})")]
    Precision { requested: f64, achievable: f64 },

    #[error("grid mismatch: {0}")]
    GridMismatch(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("degenerate scale pair a = {a}, b = {b}: a/b = \u{b1}1 is excluded, since the conjugation symmetry zeta(conj s) = conj zeta(s) ties the two shifts together")]
    DegenerateScales { a: i64, b: i64 },

    #[error("lattice dimension {0} exceeds the cap of 12; use the phase scan instead")]
    DimensionTooLarge(usize),

    #[error("internal consistency failure: {0}")]
    Internal(String),

    #[error("required truncation height y = {required:.3e} exceeds the cap {cap:.3e}")]
    TruncationTooLarge { required: f64, cap: f64 },
}

pub type Result<T> = std::result::Result<T, Error>;
