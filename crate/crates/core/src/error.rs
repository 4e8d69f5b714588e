//! Error type shared by every module.

use thiserror::Error;

use crate::feedback::WellPosednessReport;

#[derive(Debug, Clone, Error, PartialEq)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("split mismatch: port widths m1={m1}, m2={m2} must be equal")]
    SplitMismatch { m1: usize, m2: usize },
    #[error("evaluation point {re}+{im}i is too close to the spectrum of A")]
    NearSpectrum { re: f64, im: f64 },
    #[error("feedthrough D is singular (condition {cond:e})")]
    SingularFeedthrough { cond: f64 },
    #[error("{block} singular (condition {cond:e})")]
    SingularBlock { block: String, cond: f64 },
    #[error("generator A is singular (condition {cond:e})")]
    SingularGenerator { cond: f64 },
    #[error("shifted feedthrough D+R is singular (condition {cond:e})")]
    SingularShiftedFeedthrough { cond: f64 },
    #[error("I-D is singular: 1 is an eigenvalue of D (condition {cond:e})")]
    OneEigenvalue { cond: f64 },
    #[error("I+A_d is singular: -1 is an eigenvalue of A_d (condition {cond:e})")]
    MinusOneEigenvalue { cond: f64 },
    #[error("feedback loop is not well posed (cond Δ1 = {:e}, cond Δ2 = {:e})", .0.delta1_condition, .0.delta2_condition)]
    NotWellPosed(WellPosednessReport),
    #[error("coupled resistance blocks differ: Rp.R2 != Rq.R1")]
    ResistanceMismatch,
    #[error("neither system is properly impedance passive")]
    NotProperlyPassive,
    #[error("matrix is not symmetric positive (semi)definite: {0}")]
    NotSpd(String),
    #[error("stiffness matrix K is singular (condition {cond:e})")]
    SingularStiffness { cond: f64 },
    #[error("position {x} lies outside the element [{a}, {b}]")]
    OutOfElement { x: f64, a: f64, b: f64 },
    #[error("bad geometry: {0}")]
    BadGeometry(String),
    #[error("parse error on line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("nodes are not strictly increasing at line {line}")]
    Monotonicity { line: usize },
    #[error("argument |z| = {abs} outside the supported envelope |z| <= 200")]
    OutOfEnvelope { abs: f64 },
    #[error("piston impedance is undefined at s = 0")]
    ZeroFrequency,
    #[error("interpolation points coincide: {0}")]
    CoincidentPoints(String),
    #[error("realification left imaginary residue {residue:e} above threshold")]
    PairingViolation { residue: f64 },
    #[error("reduced Löwner matrix is rank deficient (condition {cond:e})")]
    RankDeficient { cond: f64 },
    #[error("argument must be positive")]
    NonPositive,
    #[error("numerical failure: {0}")]
    Numerical(String),
    #[error("I/O error: {0}")]
    Io(String),
    #[error("JSON error: {0}")]
    Json(String),
}

impl Error {
    /// True for errors caused by a singular or ill-conditioned block.
    pub fn is_singularity(&self) -> bool {
        matches!(
            self,
            Error::SingularFeedthrough { .. }
                | Error::SingularBlock { .. }
                | Error::SingularGenerator { .. }
                | Error::SingularShiftedFeedthrough { .. }
                | Error::OneEigenvalue { .. }
                | Error::MinusOneEigenvalue { .. }
                | Error::NotWellPosed(_)
                | Error::NearSpectrum { .. }
                | Error::SingularStiffness { .. }
                | Error::RankDeficient { .. }
        )
    }
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Json(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
