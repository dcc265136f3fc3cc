//! Simulation laboratory for one-dimensional random walks amongst random
//! conductances with heavy-tailed walls and traps.
//!
//! The crate is organised around three layers:
//!
//! * samplers and analytic tools for the heavy-tailed edge laws, one-sided
//!   stable marginals and two-sided subordinators ([`params`], [`stable`],
//!   [`subordinator`]);
//! * finite-window environments, the explicit environment coupling, the
//!   event-driven walk simulator and the quasi-diffusion limit simulator
//!   ([`environment`], [`coupling`], [`walk`], [`limit`]);
//! * a config-driven experiment harness reproducing aging, sub-aging and
//!   gap-statistic convergence sweeps ([`experiments`]), together with the
//!   statistics toolkit ([`stats`]) and a Skorokhod J1 diagnostic ([`j1`]).

pub mod coupling;
pub mod environment;
mod error;
pub mod experiments;
pub mod j1;
pub mod limit;
pub mod params;
pub mod path;
pub mod rng;
pub mod scalar;
pub mod stable;
pub mod stats;
pub mod subordinator;
pub mod walk;

pub use error::{Error, MatchError};
pub use scalar::Real;

/// Concrete scalar used by the simulation engines. The numeric kernels are
/// generic over [`Real`]; the Monte Carlo state machines pin `f64` because
/// time accumulation and tail quadrature need the full mantissa.
pub type Scalar = f64;

/// Crate-wide result type.
pub type Result<T, E = Error> = std::result::Result<T, E>;
