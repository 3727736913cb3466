//! Exact simulation of multiparty simultaneous quantum identity
//! authentication by GHZ entanglement swapping.
//!
//! A trusted party, Trent, distributes `(r+1)`-qubit GHZ states to `r`
//! users, checks the channel with sampled Z/X measurements, lets each user
//! encode key bits with `I` or `iσ_y`, blinds each group with his own random
//! operator and recovers every user's bits from Bell-basis measurements.
//!
//! The numeric layers are generic over [`Scalar`] (`f64` or `f32`); the
//! aliases below fix the common choice.

pub mod adversary;
pub mod authkey;
pub mod entanglement;
mod error;
pub mod protocol;
pub mod rng;
mod scalar;
pub mod statevec;

pub use error::{Error, Result};
pub use scalar::Scalar;

pub use adversary::{AttackModel, CollectiveCoeffs};
pub use authkey::{AuthKey, Counter, IdentityNumber};
pub use entanglement::{BellKind, BellOutcome, Deduction, GhzLabel, Sign};
pub use protocol::{SessionConfig, SessionReport};
pub use rng::SimRng;
pub use statevec::{MeasBasis, PauliChoice};

/// Double-precision state vector.
pub type StateVector = statevec::StateVector<f64>;
/// Single-precision state vector.
pub type StateVector32 = statevec::StateVector<f32>;
pub type SwapDistribution = entanglement::SwapDistribution<f64>;
pub type Session = protocol::Session<f64>;
pub type Session32 = protocol::Session<f32>;

/// Runs a full session in double precision.
pub fn run_session(config: &SessionConfig) -> Result<SessionReport> {
    protocol::run_session::<f64>(config)
}
