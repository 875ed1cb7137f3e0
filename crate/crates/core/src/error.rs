use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("record {row}: {reason}")]
    InvalidRecord { row: usize, reason: String },

    #[error("line {line}: {reason}")]
    Parse { line: usize, reason: String },

    #[error("entropy is undefined for a location without visitors")]
    EmptyCounts,

    #[error("removing a user holding all {total} visits empties the location")]
    EmptiedLocation { total: u64 },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    /// `k` is below `C / (ln C - 1) + 1`, or `C <= e` admits no `k` at all.
    #[error("crowd-blend condition violated for C = {c}, k = {k}: {}", match .min_k {
        Some(min) => format!("k must be at least {min}"),
        None => "C must be at least 3".to_string(),
    })]
    CrowdBlendCondition { k: u64, c: u64, min_k: Option<u64> },

    #[error("location with {n} users exceeds the smooth-sensitivity table (N = {max}); recompute with N >= {n}")]
    TableTooSmall { n: u64, max: u64 },

    #[error("sensitivity table mismatch: {0}")]
    TableMismatch(String),

    #[error("instance too large to enumerate: {0}")]
    InstanceTooLarge(String),

    #[error("distribution has no mass after flooring negative values")]
    NoMass,

    #[error("infinite divergence at location {location}: published mass where actual entropy is zero")]
    InfiniteDivergence { location: String },

    #[error("metric undefined on an empty location set")]
    EmptyLocationSet,

    #[error("no location has check-ins from at least {k} users")]
    NoEligibleLocations { k: u64 },

    #[error("published locations missing from the actual data: {}", .0.join(", "))]
    Misaligned(Vec<String>),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}
