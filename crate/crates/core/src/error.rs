use thiserror::Error;

/// Errors raised by the numerical routines.
///
/// Variants split into two families: input problems (malformed or
/// inconsistent data) and numerical-contract violations, see
/// [`Error::is_numerical`].
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("matrix is not Hermitian (deviation {deviation:.3e})")]
    NonHermitian { deviation: f64 },
    #[error("eigenvalue iteration did not converge")]
    NoConvergence,
    #[error("matrix is singular (smallest singular value {smallest:.3e})")]
    Singular { smallest: f64 },
    #[error("amplitude is rank deficient (smallest eigenvalue of W\u{2020}W {smallest:.3e})")]
    RankDeficient { smallest: f64 },
    #[error("matrix shape mismatch: {0}")]
    ShapeMismatch(String),
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimMismatch { expected: usize, found: usize },
    #[error("length mismatch: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },

    #[error("eigenvalue spectrum is not strictly descending at index {index}")]
    NotDescending { index: usize },
    #[error("spectrum is not normalized (sum m_j p_j = {sum})")]
    NotNormalized { sum: f64 },
    #[error("not a density operator: {0}")]
    NotAState(String),
    #[error("degeneracy spectrum mismatch: expected {expected:?}, found {found:?}")]
    DegeneracyMismatch { expected: Vec<usize>, found: Vec<usize> },
    #[error("eigenvalue {value:.3e} at block {block} is not positive")]
    NonPositiveEigenvalue { block: usize, value: f64 },

    #[error("curve endpoints do not match (gap {gap:.3e})")]
    EndpointMismatch { gap: f64 },
    #[error("curve grids are incompatible: {0}")]
    GridMismatch(String),
    #[error("curve has zero length")]
    ZeroLength,
    #[error("curve is not closed (gap {gap:.3e})")]
    NotClosed { gap: f64 },
    #[error("multiplicities change along the curve at sample {sample}")]
    MultiplicityChange { sample: usize },
    #[error("tangent vector is not tangent to the state space (residual {residual:.3e})")]
    NotTangent { residual: f64 },

    #[error("operator is not in the gauge group (deviation {deviation:.3e})")]
    GaugeViolation { deviation: f64 },
    #[error("value {value} outside of the admissible range {range}")]
    OutOfRange { value: f64, range: &'static str },
    #[error("geometric phase undefined (|tr| = {modulus:.3e})")]
    UndefinedPhase { modulus: f64 },
    #[error("spectral bound violated at blocks {blocks:?}")]
    SpectralBoundViolated { blocks: Vec<usize> },
    #[error("isoholonomic inequality violated: {0}")]
    BoundViolated(String),

    #[error("rotation axis is parallel to (0,0,1); the state is stationary")]
    StationaryAxis,
    #[error("invalid eigenvalue p0 = {0}; expected p0 in (1/2, 1)")]
    InvalidP(f64),
    #[error("ambient dimension {ambient} is smaller than twice the rank {rank}")]
    DimensionTooSmall { ambient: usize, rank: usize },
    #[error("saturation check failed: {0}")]
    SaturationFailed(String),

    #[error("malformed input: {0}")]
    Parse(String),
}

impl Error {
    /// True for failures of a numerical contract (as opposed to bad input).
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::NoConvergence
                | Error::BoundViolated(_)
                | Error::SaturationFailed(_)
        )
    }
}

pub type Result<T> = std::result::Result<T, Error>;
