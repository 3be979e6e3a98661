//! Dynamics of a particle moving between two wells through a reservoir that
//! is continuously watched for it.
//!
//! Four engines are provided and cross-checked against one another:
//!
//! * [`analytic`]: closed forms for symmetric coupling,
//! * [`lindblad`]: the reduced master equation,
//! * [`trajectory`]: null-result evolution and Monte-Carlo unravelling,
//! * [`bandlimited`]: exact Schrödinger evolution with a finite flat band,
//!   including repeated projections onto the wells.

pub mod analytic;
pub mod bandlimited;
pub mod error;
pub mod lindblad;
pub mod model;
pub mod ode;
mod spectrum;
pub mod trajectory;

pub use analytic::{OccupationPair, TimePoint};
pub use bandlimited::{BandModel, DressedBasis, WaveFunction, ZenoResult};
pub use error::{Error, Result};
pub use lindblad::{ConditionalSeries, TimeSeries};
pub use model::{
    JumpOperator, Parity, RateSet, ReducedDensityMatrix, WellParams, C64, EMPTY, LEFT, RIGHT,
};
pub use spectrum::Spectrum;
pub use trajectory::{ConditionalState, EnsembleSeries, TrajectoryRecord};
