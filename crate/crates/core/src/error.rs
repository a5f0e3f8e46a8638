use alloc::string::String;
use core::fmt;

/// Errors raised by the tomography core.
#[derive(Clone, Debug, PartialEq)]
pub enum Error {
    /// Operands disagree on the Hilbert-space dimension.
    DimensionMismatch { expected: usize, found: usize },
    /// A dimension or index outside the supported family.
    InvalidDimension(usize),
    InvalidIndex(String),
    NotHermitian { defect: f64 },
    NotUnitTrace { trace: f64 },
    NotPositive { min_eigenvalue: f64 },
    NotNormalized { norm: f64 },
    NotUnitary { defect: f64 },
    UnphysicalBlochVector { min_eigenvalue: f64 },
    InvalidDistribution(String),
    /// Fewer shots than bases to spread them over.
    EnsembleTooSmall { shots: u64, bases: usize },
    InvalidCounts(String),
    InvalidOptions(String),
    EmptyData,
    RankDeficientDesign { min_eigenvalue: f64 },
    SingularQfim { min_eigenvalue: f64 },
    SingularCfim,
    InvalidSpec(String),
    /// A trial failed inside an experiment sweep.
    Trial { protocol: &'static str, shots: u64, trial: usize, seed: u64, source: alloc::boxed::Box<Error> },
}

pub type Result<T> = core::result::Result<T, Error>;

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::DimensionMismatch { expected, found } => {
                write!(f, "dimension mismatch: expected {expected}, found {found}")
            }
            Error::InvalidDimension(d) => write!(f, "unsupported dimension {d} (need d >= 2)"),
            Error::InvalidIndex(msg) => write!(f, "invalid index: {msg}"),
            Error::NotHermitian { defect } => write!(f, "matrix is not Hermitian (max |A - A^H| = {defect:e})"),
            Error::NotUnitTrace { trace } => write!(f, "matrix trace is {trace}, expected 1"),
            Error::NotPositive { min_eigenvalue } => {
                write!(f, "matrix is not positive semidefinite (min eigenvalue {min_eigenvalue:e})")
            }
            Error::NotNormalized { norm } => write!(f, "state vector has norm {norm}, expected 1"),
            Error::NotUnitary { defect } => write!(f, "matrix is not unitary (max |U^H U - I| = {defect:e})"),
            Error::UnphysicalBlochVector { min_eigenvalue } => {
                write!(f, "unphysical Bloch vector (min eigenvalue {min_eigenvalue:e})")
            }
            Error::InvalidDistribution(msg) => write!(f, "invalid outcome distribution: {msg}"),
            Error::EnsembleTooSmall { shots, bases } => {
                write!(f, "ensemble smaller than basis count ({shots} shots for {bases} bases)")
            }
            Error::InvalidCounts(msg) => write!(f, "invalid count data: {msg}"),
            Error::InvalidOptions(msg) => write!(f, "invalid options: {msg}"),
            Error::EmptyData => write!(f, "count data contains no shots"),
            Error::RankDeficientDesign { min_eigenvalue } => {
                write!(f, "rank-deficient design matrix (min normal eigenvalue {min_eigenvalue:e})")
            }
            Error::SingularQfim { min_eigenvalue } => {
                write!(f, "QFIM singular for rank-deficient state (min eigenvalue {min_eigenvalue:e})")
            }
            Error::SingularCfim => write!(f, "CFIM singular: zero-probability outcome with nonzero derivative"),
            Error::InvalidSpec(msg) => write!(f, "invalid experiment spec: {msg}"),
            Error::Trial { protocol, shots, trial, seed, source } => {
                write!(f, "{protocol} trial {trial} at N={shots} (seed {seed:#018x}) failed: {source}")
            }
        }
    }
}

impl core::error::Error for Error {}
