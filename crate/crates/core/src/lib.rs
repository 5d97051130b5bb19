//! Numerical laboratory for the finite Wigner chaos.
//!
//! Elements of the finite chaos are stored as their kernel sequences
//! `(f_0, ..., f_N)` expanded in the orthonormal step-function basis of a
//! uniform time grid. Products, adjoints, traces and the free Malliavin
//! operators act exactly on these kernels; truncated Fock-space matrices are
//! only used for spectra and operator-norm estimates.
//!
//! Everything is generic over the real scalar type (see [`Real`]); the
//! aliases at the crate root fix it to `f64`, which is what the command line
//! tool and the verification suite use.

pub mod chaos;
pub mod error;
pub mod fock;
pub mod grid;
pub mod io;
pub mod malliavin;
pub mod random;
pub mod reduction;
pub mod scalar;
pub mod spectra;
pub mod verify;

pub use chaos::ChaosElement;
pub use error::ChaosError;
pub use fock::{FockBasis, FockVector, LadderKind, OperatorMatrix};
pub use grid::{CoeffTensor, GridSpec};
pub use malliavin::{ChaosBitensor, ChaosTritensor, SimpleBiprocess};
pub use reduction::{KeyInequalityReport, ReductionReport, ReductionStep, ZeroDivisorReport};
pub use scalar::{Cx, Real};
pub use spectra::SpectralMeasure;

/// Double precision coefficient tensor.
pub type Tensor = CoeffTensor<f64>;
/// Double precision chaos element.
pub type Chaos = ChaosElement<f64>;
/// Double precision chaos bitensor.
pub type Bitensor = ChaosBitensor<f64>;
/// Double precision simple biprocess.
pub type Biprocess = SimpleBiprocess<f64>;
/// Double precision truncated Fock operator.
pub type Operator = OperatorMatrix<f64>;
/// Double precision vacuum spectral measure.
pub type Measure = SpectralMeasure<f64>;

/// Single precision chaos element, mostly useful for quick spectral sketches.
pub type Chaos32 = ChaosElement<f32>;
/// Single precision coefficient tensor.
pub type Tensor32 = CoeffTensor<f32>;

pub type Result<T, E = ChaosError> = std::result::Result<T, E>;
