//! The authentication session: Trent plus `r` users, steps S1 to S6.
//!
//! [`Session`] exposes each step so tests can drive or interrupt a run;
//! [`run_session`] chains them and aborts after a failed eavesdropping check.

mod config;
mod pool;
mod report;
mod session;

pub use config::{SessionConfig, UserIdentity, MAX_USERS};
pub use pool::{QubitHandle, QubitPool};
pub use report::{AuthVerdict, CheckSummary, GroupReport, SessionReport, TranscriptEvent, SCHEMA_VERSION};
pub use session::{run_session, GroupRecord, Session};

use crate::statevec::MeasBasis;

/// The S2 correlation rule. `outcomes[0]` is Trent's bit, the rest the users'.
///
/// In Z all bits must agree. In X (bit set = `|->`) the number of `|->`
/// results must be even.
pub fn violates_correlation(basis: MeasBasis, outcomes: &[bool]) -> bool {
    match basis {
        MeasBasis::Z => outcomes.iter().any(|&b| b != outcomes[0]),
        MeasBasis::X => outcomes.iter().filter(|&&b| b).count() % 2 == 1,
    }
}
