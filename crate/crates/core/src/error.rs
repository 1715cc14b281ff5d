//! Error type shared by all modules.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    /// An element's vertices do not all lie in the material region of its centroid.
    #[error("element {element} straddles a material interface")]
    MaterialStraddle { element: usize },

    /// A left-boundary face has no matching right-boundary face (or vice versa).
    #[error("quasi-periodic pairing violation: {0}")]
    PeriodicityViolation(String),

    #[error("geometry error: {0}")]
    Geometry(String),

    /// Operation requires assumptions (e.g. real permittivity) that do not hold.
    #[error("not applicable: {0}")]
    NotApplicable(String),

    /// Argument outside the mathematical domain of an operation.
    #[error("domain error: {0}")]
    Domain(String),

    #[error("linear system is singular to working precision")]
    SingularSystem,

    #[error("invalid input: {0}")]
    InvalidInput(String),

    /// The analytic layered-medium system is singular (guided-mode resonance).
    #[error("resonance detected: analytic interface system is singular")]
    ResonanceDetected,

    /// Grazing incidence: beta_0^+ = 0, efficiencies are undefined.
    #[error("degenerate incidence: beta_0 = 0")]
    DegenerateIncidence,

    #[error("configuration error: {0}")]
    Config(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
