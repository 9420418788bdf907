//! Exact symbolic computation of Segre classes, relative Segre classes and
//! Kempf-Laksov degeneracy-locus classes in oriented cohomology theories
//! (Chow ring, connective K-theory, and the rational universal theory).
//!
//! The crate is organized in layers:
//! - [`coeff`]: graded coefficient rings of the supported theories,
//! - [`series`]: truncated multivariate Laurent series over those rings,
//! - [`fgl`]: formal group laws, formal inverses and the factor series `P(z,x)`,
//! - [`segre`]: Chern polynomials, `w`/`w-tilde` classes, Segre generating
//!   series and the residue push-forward oracle,
//! - [`kl`]: Kempf-Laksov classes by three independent computation paths.

pub mod coeff;
pub mod fgl;
pub mod kl;
pub mod segre;
pub mod series;

pub use coeff::{CoeffElement, TheoryKind, TheorySpec};
pub use fgl::FormalGroupLaw;
pub use kl::{ClassExpression, GrassmannContext, Partition};
pub use segre::{Bundle, SegreSeries};
pub use series::{GradedSeries, VarAlphabet};

use thiserror::Error;

/// Errors shared by all layers.
#[derive(Debug, Error)]
pub enum Error {
    #[error("truncation order must be at least 1")]
    ZeroTruncation,
    #[error("index {0} exceeds the truncation order {1}")]
    OutOfTruncation(u32, u32),
    #[error("operands live over different alphabets")]
    AlphabetMismatch,
    #[error("operands carry different truncations")]
    TruncationMismatch,
    #[error("unknown variable `{0}`")]
    UnknownVariable(String),
    #[error("substitution into a series slot requires zero constant term")]
    NonzeroConstantTerm,
    #[error("division requires a unit constant term in the denominator")]
    NonUnitConstantTerm,
    #[error("division did not terminate within the truncation bound")]
    DivergentDivision,
    #[error("nonzero remainder when dividing by ({0} - {1})")]
    NonzeroRemainder(String, String),
    #[error("series is not symmetric in the requested variables")]
    NotSymmetric,
    #[error("formal group law axiom failed: {0}")]
    AxiomFailure(String),
    #[error("invalid partition: {0}")]
    InvalidPartition(String),
    #[error("non-integral coefficient {0} in an integral theory")]
    NonIntegral(String),
    #[error("internal consistency check failed: {0}")]
    Inconsistency(String),
}

pub type Result<T> = std::result::Result<T, Error>;
