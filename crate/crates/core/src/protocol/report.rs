use serde::{Deserialize, Serialize};

use super::config::SessionConfig;
use crate::entanglement::BellOutcome;
use crate::statevec::MeasBasis;

pub const SCHEMA_VERSION: u32 = 1;

/// One classical message, in the order it was sent.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "event", rename_all = "snake_case")]
pub enum TranscriptEvent {
    /// Trent kept the T sequence and sent the user sequences.
    Distributed {
        n_states: usize,
        r: usize,
    },
    /// Trent names the sampled positions and a basis for each.
    CheckAnnounced {
        positions: Vec<usize>,
        bases: Vec<MeasBasis>,
    },
    /// A user's sampled results (1 = `|1>` or `|->`). Users are numbered from 1.
    UserCheckResults {
        user: usize,
        outcomes: Vec<u8>,
    },
    TrentCompared {
        mismatches: usize,
        pass: bool,
    },
    /// Trent reveals his own sampled results after a passing comparison.
    TrentCheckRevealed {
        outcomes: Vec<u8>,
    },
    /// Users' verification of Trent's revealed results.
    UsersVerifiedTrent {
        mismatches: usize,
        confirmed: bool,
    },
    Aborted {
        reason: String,
    },
    GroupsFormed {
        groups: Vec<[usize; 2]>,
        discarded: Vec<usize>,
    },
    /// A user has applied their key-dependent operators.
    KeyOperationsDone {
        user: usize,
    },
    /// Trent asks the users for Bell measurements (his S5 operators stay private).
    BellMeasurementRequested,
    UserBellResults {
        user: usize,
        outcomes: Vec<BellOutcome>,
    },
    VerdictsIssued {
        accepted: Vec<usize>,
        rejected: Vec<usize>,
    },
}

/// Outcome of the eavesdropping check.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckSummary {
    pub k: usize,
    pub mismatches: usize,
    pub rate: f64,
    pub pass: bool,
    /// Users' check of Trent's revealed results; absent when Trent did not reveal.
    pub users_confirmed: Option<bool>,
    pub z_samples: usize,
    pub z_mismatches: usize,
    pub x_samples: usize,
    pub x_mismatches: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroupReport {
    pub index: usize,
    pub p: usize,
    pub q: usize,
    /// Trent's private operator bit; `None` when redacted.
    pub trent_op: Option<u8>,
    /// Trent's `(T, T')` outcome first, then each user's published outcome.
    pub outcomes: Vec<BellOutcome>,
    pub deduced_bits: Vec<u8>,
    pub consistent: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AuthVerdict {
    /// User number, starting at 1.
    pub user: usize,
    pub accepted: bool,
    pub mismatching_groups: usize,
    pub inconsistent_groups: usize,
}

/// Machine-readable outcome of one session.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SessionReport {
    pub schema_version: u32,
    pub config: SessionConfig,
    pub aborted: bool,
    pub s2: CheckSummary,
    pub groups: Vec<GroupReport>,
    pub discarded: Vec<usize>,
    pub verdicts: Vec<AuthVerdict>,
    /// Next unused counter value per user.
    pub final_counters: Vec<u64>,
    pub transcript: Vec<TranscriptEvent>,
}

impl SessionReport {
    pub fn all_accepted(&self) -> bool {
        !self.aborted && !self.verdicts.is_empty() && self.verdicts.iter().all(|v| v.accepted)
    }

    /// Removes Trent's private operators.
    pub fn redact(&mut self) {
        for g in &mut self.groups {
            g.trent_op = None;
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }
}
