//! Holonomies, geometric phases and isoholonomic bounds for closed curves of
//! isodegenerate density operators.
//!
//! The crate is organized bottom-up:
//!
//! * [`linalg`]: dense complex kernels (Hermitian eigensolver, polar factor,
//!   pseudoinverse, propagator steps).
//! * [`spectra`]: eigenvalue/degeneracy spectra and spectral decomposition of
//!   density operators.
//! * [`curves`]: sampled curves, concatenation, reparameterization and
//!   Fisher–Rao functionals.
//! * [`bundle`]: amplitudes, the connection form, horizontal lifts and
//!   holonomies.
//! * [`invariants`]: phase spectra, Wilson loops, geometric phases,
//!   isoholonomic bounds and the inequality checker.
//! * [`dynamics`]: unitary evolution, coherent/incoherent Hamiltonian split
//!   and the cyclic speed limit.
//! * [`synthesis`]: construction of closed evolutions that saturate the
//!   isoholonomic bound.
//! * [`io`]: JSON file formats.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod bundle;
pub mod curves;
pub mod dynamics;
pub mod error;
pub mod invariants;
pub mod io;
pub mod linalg;
pub mod random;
pub mod spectra;
pub mod synthesis;

pub use bundle::{Amplitude, ConnectionValue, GaugeElement, HorizontalLift};
pub use curves::{OperatorCurve, ProbabilityPath, TimeGrid};
pub use dynamics::{HamiltonianSchedule, QubitReference, SpeedLimitReport};
pub use error::{Error, Result};
pub use invariants::{IsoReport, PhaseSpectrum};
pub use linalg::{CMat, CVec, EigResult, C64};
pub use spectra::{
    DegeneracySpectrum, DensityOperator, EigenprojectorBasis, EigenvalueSpectrum, SpectralBound,
};
pub use synthesis::{PureLoopSpec, SaturatingPlan, SaturationReport};
