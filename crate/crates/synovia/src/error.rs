//! Crate-wide error type.

use std::fmt;

/// Witness data for a failed structural check on a stress or flux model.
#[derive(Debug, Clone, PartialEq)]
pub struct StructureWitness {
    /// Which inequality failed ("growth", "monotonicity", "coercivity",
    /// "flux_upper", "flux_lower").
    pub check: &'static str,
    /// Concentration sample.
    pub c: f64,
    /// First tensor sample as (xx, xy, yy).
    pub b1: [f64; 3],
    /// Second tensor sample for pairwise checks.
    pub b2: Option<[f64; 3]>,
    /// Gradient sample for flux checks.
    pub g: Option<[f64; 2]>,
    /// Observed value of the failing quantity.
    pub value: f64,
    /// Bound it had to satisfy.
    pub bound: f64,
}

#[derive(Debug)]
pub enum Error {
    /// A differential operator was applied to a field without analytic
    /// derivative data.
    NonDifferentiableField,
    /// Two fields do not share the same quadrature layout.
    QuadratureMismatch,
    /// Two space-time sample sets do not share the same grid.
    GridMismatch,
    /// A variable exponent left the admissible range (1, inf).
    ExponentOutOfRange(f64),
    /// The pointwise conjugacy relation 1/s = 1/p + 1/q failed.
    ExponentMismatch { index: usize, deficit: f64 },
    /// Bracket expansion for the Luxembourg norm blew past 2^64 scale,
    /// which signals non-finite input samples.
    NoConvergence,
    /// Requested more basis functions than the build supports, or the
    /// quadrature cannot resolve the requested modes.
    BasisTooLarge { requested: usize, max: usize },
    /// Gram/stiffness factorisation failed.
    SingularGram,
    /// Coefficient vector length does not match the basis.
    DimensionMismatch { expected: usize, got: usize },
    /// Adaptive stepping drove the step below the configured minimum.
    StepSizeUnderflow { t: f64, dt: f64 },
    /// The integration did not reach the final time within the step budget.
    StepBudgetExhausted { t: f64, steps: u64 },
    /// Fixed-point iteration of the implicit step failed to contract.
    FixedPointDivergence { t: f64, residual: f64 },
    /// A model violated one of its declared structural inequalities.
    StructureViolation(Box<StructureWitness>),
    /// Scenario data violates its invariants.
    InvalidScenario(String),
    /// Configuration file syntax error.
    Parse { line: usize, message: String },
    /// Configuration key is not recognised.
    UnknownKey { line: usize, key: String },
    /// Configuration value is outside its documented range.
    RangeError { key: String, message: String },
    Io(std::io::Error),
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::NonDifferentiableField => {
                write!(f, "field has no analytic derivative representation")
            }
            Error::QuadratureMismatch => write!(f, "fields do not share a quadrature"),
            Error::GridMismatch => write!(f, "sample sets do not share a space-time grid"),
            Error::ExponentOutOfRange(p) => {
                write!(f, "exponent {p} outside the admissible range (1, inf)")
            }
            Error::ExponentMismatch { index, deficit } => write!(
                f,
                "conjugacy 1/s = 1/p + 1/q fails at sample {index} by {deficit:e}"
            ),
            Error::NoConvergence => {
                write!(f, "norm bracketing failed to converge (non-finite input?)")
            }
            Error::BasisTooLarge { requested, max } => {
                write!(f, "basis size {requested} exceeds supported maximum {max}")
            }
            Error::SingularGram => write!(f, "Gram matrix is numerically singular"),
            Error::DimensionMismatch { expected, got } => {
                write!(f, "dimension mismatch: expected {expected}, got {got}")
            }
            Error::StepSizeUnderflow { t, dt } => {
                write!(f, "step size underflow at t = {t}: dt = {dt:e}")
            }
            Error::StepBudgetExhausted { t, steps } => {
                write!(f, "integration stalled at t = {t} after {steps} steps")
            }
            Error::FixedPointDivergence { t, residual } => write!(
                f,
                "implicit step fixed-point iteration diverged at t = {t} (residual {residual:e})"
            ),
            Error::StructureViolation(w) => write!(
                f,
                "structural check '{}' failed: value {:e} vs bound {:e} at c = {}, B = {:?}",
                w.check, w.value, w.bound, w.c, w.b1
            ),
            Error::InvalidScenario(msg) => write!(f, "invalid scenario: {msg}"),
            Error::Parse { line, message } => write!(f, "config parse error, line {line}: {message}"),
            Error::UnknownKey { line, key } => write!(f, "unknown config key '{key}' at line {line}"),
            Error::RangeError { key, message } => {
                write!(f, "config value out of range for '{key}': {message}")
            }
            Error::Io(e) => write!(f, "i/o error: {e}"),
        }
    }
}

impl std::error::Error for Error {
    fn source(&self) -> Option<&(dyn std::error::Error + 'static)> {
        match self {
            Error::Io(e) => Some(e),
            _ => None,
        }
    }
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e)
    }
}

pub type Result<T> = std::result::Result<T, Error>;
