use thiserror::Error;

/// Coarse classification used by front-ends to map failures onto exit codes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorKind {
    /// Bad arguments or mixed inputs (wrong field, wrong variant, malformed data).
    Usage,
    /// The request is well-formed but exceeds an enumeration or size cap.
    Capability,
    /// A mathematical precondition does not hold (zero inverse, bound domain).
    Domain,
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum Error {
    #[error("{0} is not prime")]
    NotPrime(u64),
    #[error("field of order {order} exceeds the supported maximum 2^20")]
    FieldTooLarge { order: u128 },
    #[error("invalid modulus: {0}")]
    InvalidModulus(String),
    #[error("modulus {modulus} is reducible over Z_{p}: divisible by {witness}")]
    ReducibleModulus {
        p: u32,
        modulus: String,
        witness: String,
    },
    #[error("elements belong to different fields")]
    FieldMismatch,
    #[error("element index {index} out of range for a field of order {order}")]
    ElementOutOfRange { index: u64, order: u32 },
    #[error("zero has no multiplicative inverse")]
    ZeroInverse,
    #[error("{what}: {needed} states exceed the cap of {cap}")]
    CapExceeded {
        what: &'static str,
        needed: u128,
        cap: u128,
    },
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("malformed transcript: {0}")]
    MalformedTranscript(String),
    #[error("{m} rounds is not of tower form (k0 + t*(rho+1)); {}", nearest_tower(*.nearest))]
    NotTowerForm { m: usize, nearest: Option<usize> },
    #[error("propagation time must be even and at least 2, got {0}")]
    InvalidPropagation(usize),
    #[error("strategy targets the {found} variant, expected {expected}")]
    VariantMismatch {
        expected: &'static str,
        found: &'static str,
    },
    #[error("{0}")]
    Domain(String),
}

impl Error {
    pub fn kind(&self) -> ErrorKind {
        match self {
            Error::FieldTooLarge { .. } | Error::CapExceeded { .. } => ErrorKind::Capability,
            Error::ZeroInverse | Error::Domain(_) => ErrorKind::Domain,
            _ => ErrorKind::Usage,
        }
    }
}

fn nearest_tower(nearest: Option<usize>) -> String {
    match nearest {
        Some(n) => format!("nearest valid m is {n}"),
        None => "no valid tower fits".into(),
    }
}

pub type Result<T> = std::result::Result<T, Error>;
