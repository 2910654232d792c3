use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    /// An argument is outside the domain of the operation.
    #[error("domain error: {0}")]
    Domain(String),

    /// The root bracketing of the delta-barrier spectrum lost or gained a level.
    #[error("missed root: level {level} at k = {k} is outside its interlacing band [{lower}, {upper}]")]
    MissedRoot {
        level: usize,
        k: f64,
        lower: f64,
        upper: f64,
    },

    /// The first-order update stopped being small compared to the wavefunction.
    #[error("validity breach at step {step}: correction/psi ratio {ratio:.3e} exceeds {threshold:.1e}")]
    ValidityBreach {
        step: usize,
        ratio: f64,
        threshold: f64,
    },

    /// A truncated expansion lost more weight than allowed.
    #[error("truncation defect {defect:.3e} exceeds {allowed:.1e}; raise the mode caps")]
    Truncation { defect: f64, allowed: f64 },

    /// A computed probability fell outside [0, 1].
    #[error("internal error: {0}")]
    Internal(String),
}

pub(crate) fn domain<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Domain(msg.into()))
}
