use alloc::string::String;
use core::fmt;

pub type Result<T, E = Error> = core::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Error {
    /// Shapes or lengths that must agree do not.
    InvalidDimension(String),
    /// A displacement or squeeze too large for the Fock cutoff.
    CutoffExceeded(String),
    /// Non-finite values, out-of-range parameters, unknown names.
    InvalidInput(String),
    /// Fewer classes (or fewer samples per class) than the operation needs.
    DegenerateLabels(String),
}

impl Error {
    /// Prefixes the message with `ctx`, keeping the variant.
    pub fn context(self, ctx: impl fmt::Display) -> Self {
        match self {
            Error::InvalidDimension(m) => Error::InvalidDimension(alloc::format!("{ctx}: {m}")),
            Error::CutoffExceeded(m) => Error::CutoffExceeded(alloc::format!("{ctx}: {m}")),
            Error::InvalidInput(m) => Error::InvalidInput(alloc::format!("{ctx}: {m}")),
            Error::DegenerateLabels(m) => Error::DegenerateLabels(alloc::format!("{ctx}: {m}")),
        }
    }
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::InvalidDimension(msg) => write!(f, "invalid dimension: {msg}"),
            Error::CutoffExceeded(msg) => write!(f, "cutoff exceeded: {msg}"),
            Error::InvalidInput(msg) => write!(f, "invalid input: {msg}"),
            Error::DegenerateLabels(msg) => write!(f, "degenerate labels: {msg}"),
        }
    }
}

impl core::error::Error for Error {}

macro_rules! bail {
    ($variant:ident, $($arg:tt)*) => {
        return Err($crate::error::Error::$variant(alloc::format!($($arg)*)))
    };
}
pub(crate) use bail;
