//! Location-aware coded caching for multi-antenna content delivery.
//!
//! The crate is split along the delivery pipeline:
//!
//! - [`pda`]: placement delivery arrays (MLPDA / LAPDA), validation, construction and text I/O.
//! - [`placement`]: rate approximation, memory allocation, gain splitting and cache manifests.
//! - [`scheduler`]: reference selection, file mapping, index matrices and transmission plans.
//! - [`beamforming`]: weighted max-min beamformer design and delivery-time evaluation.
//! - [`sim`]: wireless environment, channel sampling, comparison schemes and Monte-Carlo runs.

pub mod beamforming;
pub mod flow;
pub mod linalg;
pub mod pda;
pub mod placement;
pub mod rational;
pub mod scalar;
pub mod scheduler;
pub mod sim;

pub use num_rational::BigRational;
pub use scalar::Real;

/// Exact rational used for memory fractions, payload sizes and conservation checks.
pub type Rational = BigRational;

pub type Allocation = placement::Allocation<f64>;
pub type Allocation32 = placement::Allocation<f32>;
pub type SlotChannel = beamforming::SlotChannel<f64>;
pub type SlotChannel32 = beamforming::SlotChannel<f32>;
pub type WmmSolution = beamforming::WmmSolution<f64>;
pub type WmmSolution32 = beamforming::WmmSolution<f32>;
pub type WmmOptions = beamforming::WmmOptions<f64>;
