use thiserror::Error;

/// Errors raised by the arithmetic, group and curve layers.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("incompatible congruences: {0}")]
    CrtConflict(String),

    #[error("group closure exceeded the cap of {cap} elements")]
    GroupTooLarge { cap: usize },

    #[error("matrix {0} is not invertible")]
    NotAUnit(String),

    #[error("not a subgroup: {0}")]
    NotASubgroup(String),

    #[error("bad level: {0}")]
    BadLevel(String),

    #[error("search space of {size} exceeds the cap of {cap}")]
    SearchTooLarge { size: u64, cap: u64 },

    #[error("bad prime {0}")]
    BadPrime(u64),

    #[error("curve does not have CM by an order of class number one")]
    NotCm,

    #[error("unsupported input: {0}")]
    Unsupported(String),

    #[error("curve is not one of the simplest CM curves")]
    NotSimplest,

    #[error("internal invariant violated: {0}")]
    InternalInvariant(String),

    #[error("Frobenius mismatch at p = {p} (prime #{checked} tested): {detail}")]
    FrobeniusMismatch { p: u64, checked: usize, detail: String },

    #[error("entanglement pattern mismatch: {0}")]
    EntanglementMismatch(String),

    #[error("differentiation mismatch: {0}")]
    DifferentiationMismatch(String),

    #[error("data table: {0}")]
    DataTable(String),
}

pub type Result<T> = std::result::Result<T, Error>;
