use thiserror::Error;

/// Errors raised while building, running or searching distribution matchers.
#[derive(Error, Debug, Clone, PartialEq)]
pub enum Error {
    #[error("target mean energy {target} outside achievable range [{min}, {max}]")]
    TargetOutOfRange { target: f64, min: f64, max: f64 },

    #[error("index {index} out of range for a matcher with {bits} input bits")]
    IndexOutOfRange { index: String, bits: usize },

    #[error("sequence composition does not match the matcher composition")]
    CompositionMismatch,

    #[error("sequence rank {rank} is not below 2^{bits}")]
    RankOverflow { rank: String, bits: usize },

    #[error("no feasible structure: {0}")]
    Infeasible(String),

    #[error("requested {requested} sequences but only {available} exist")]
    TooMany { requested: String, available: String },

    #[error("sequence is not a codeword of this LUT family")]
    NotInFamily,

    #[error("energy bound {e_max} admits no sequence of length {n}")]
    BoundTooSmall { e_max: u64, n: usize },

    #[error("layer {layer}: expected alphabet size {expected}, found {found}")]
    AlphabetMismatch {
        layer: usize,
        expected: usize,
        found: usize,
    },

    #[error("layer {layer}: matchers {first} and {second} share codeword {witness:?}")]
    NotDisjoint {
        layer: usize,
        first: usize,
        second: usize,
        witness: Vec<u16>,
    },

    #[error("layer {layer}: matchers with unequal input bits under a non constant-composition upper layer")]
    VariableRateUnsupported { layer: usize },

    #[error("expected {expected} symbols or bits, found {found}")]
    LengthMismatch { expected: usize, found: usize },

    #[error("block {0} is not a codeword of any layer-1 matcher")]
    UndecodableBlock(usize),

    #[error("layer {layer}: virtual block {position} is not a codeword of any matcher")]
    UndecodableVirtual { layer: usize, position: usize },

    #[error("{0} is not a power of two (>= 2)")]
    NotPowerOfTwo(usize),

    #[error("base matchers are not ordered by non-decreasing mean cost")]
    BaseNotOrdered,

    #[error("disjointness cannot be verified: {0}")]
    Unverifiable(String),

    #[error("invalid symbol {symbol} for alphabet of size {alphabet_size}")]
    InvalidSymbol { symbol: u32, alphabet_size: usize },

    #[error("invalid structure: {0}")]
    InvalidStructure(String),

    #[error("invalid configuration: {0}")]
    Config(String),
}

pub type Result<T> = std::result::Result<T, Error>;
