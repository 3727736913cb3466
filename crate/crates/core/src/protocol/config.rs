use serde::{Deserialize, Serialize};

use crate::adversary::AttackModel;
use crate::authkey::{Counter, IdentityNumber, DEFAULT_COUNTER_BITS, DEFAULT_ID_BITS};
use crate::error::{Error, Result};

/// Largest user count; two `(r+1)`-qubit GHZ states must fit one register.
pub const MAX_USERS: usize = 7;

/// Identity number and starting counter a user shares with Trent.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct UserIdentity {
    pub id_hex: String,
    #[serde(default)]
    pub counter: u64,
}

fn default_id_bits() -> usize {
    DEFAULT_ID_BITS
}

fn default_counter_bits() -> u32 {
    DEFAULT_COUNTER_BITS
}

/// Full parametrization of one session.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SessionConfig {
    /// Number of users.
    pub r: usize,
    /// GHZ states Trent prepares (N).
    pub n_states: usize,
    /// Fraction of the N states sampled by the eavesdropping check.
    pub sample_fraction: f64,
    /// Groups formed for authentication (M).
    pub m_groups: usize,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub attack: AttackModel,
    /// Largest tolerated mismatch fraction in the eavesdropping check.
    #[serde(default)]
    pub check_threshold: f64,
    #[serde(default = "default_id_bits")]
    pub id_bits: usize,
    #[serde(default = "default_counter_bits")]
    pub counter_bits: u32,
    /// Per-user identities; user `j` (0-based) defaults to ID `j + 1`, counter 0.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub users: Option<Vec<UserIdentity>>,
}

fn bad(msg: impl Into<String>) -> Error {
    Error::InvalidConfig(msg.into())
}

impl SessionConfig {
    pub fn honest(r: usize, n_states: usize, sample_fraction: f64, m_groups: usize, seed: u64) -> Self {
        Self {
            r,
            n_states,
            sample_fraction,
            m_groups,
            seed,
            attack: AttackModel::None,
            check_threshold: 0.0,
            id_bits: DEFAULT_ID_BITS,
            counter_bits: DEFAULT_COUNTER_BITS,
            users: None,
        }
    }

    pub fn with_attack(mut self, attack: AttackModel) -> Self {
        self.attack = attack;
        self
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    /// Positions sampled by the eavesdropping check: `round(sample_fraction * N)`.
    pub fn sample_count(&self) -> usize {
        (self.sample_fraction * self.n_states as f64).round() as usize
    }

    /// Checks everything except the sample-size constraints.
    pub(crate) fn validate_structure(&self) -> Result<()> {
        if !(2..=MAX_USERS).contains(&self.r) {
            return Err(bad(format!("r = {} outside 2..={MAX_USERS}", self.r)));
        }
        if !(self.sample_fraction > 0.0 && self.sample_fraction < 1.0) {
            return Err(bad(format!("sample_fraction = {} outside (0, 1)", self.sample_fraction)));
        }
        if !(0.0..=1.0).contains(&self.check_threshold) {
            return Err(bad(format!("check_threshold = {} outside [0, 1]", self.check_threshold)));
        }
        if self.m_groups == 0 {
            return Err(bad("m_groups must be at least 1"));
        }
        if let Some(users) = &self.users {
            if users.len() != self.r {
                return Err(bad(format!("{} user identities given for r = {}", users.len(), self.r)));
            }
        }
        self.attack.validate(self.r).map_err(|e| bad(e.to_string()))?;
        self.identities()?;
        Ok(())
    }

    /// Full validation, including `2M + k <= N` and `k >= 1`.
    pub fn validate(&self) -> Result<()> {
        self.validate_structure()?;
        let k = self.sample_count();
        if k == 0 {
            return Err(bad(format!(
                "eavesdropping check samples no states (N = {}, sample_fraction = {})",
                self.n_states, self.sample_fraction
            )));
        }
        if 2 * self.m_groups + k > self.n_states {
            return Err(bad(format!("2M + k = {} exceeds N = {}", 2 * self.m_groups + k, self.n_states)));
        }
        Ok(())
    }

    /// Each user's identity number and starting counter.
    pub fn identities(&self) -> Result<Vec<(IdentityNumber, Counter)>> {
        let wrap = |e: Error| bad(e.to_string());
        (0..self.r)
            .map(|j| match &self.users {
                Some(users) => Ok((
                    IdentityNumber::from_hex(&users[j].id_hex, self.id_bits).map_err(wrap)?,
                    Counter::new(users[j].counter, self.counter_bits).map_err(wrap)?,
                )),
                None => Ok((
                    IdentityNumber::from_u64(j as u64 + 1, self.id_bits).map_err(wrap)?,
                    Counter::new(0, self.counter_bits).map_err(wrap)?,
                )),
            })
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sample_count_rounds() {
        let c = SessionConfig::honest(2, 256, 0.25, 64, 0);
        assert_eq!(c.sample_count(), 64);
        assert!(c.validate().is_ok());
    }

    #[test]
    fn rejects_bad_configs() {
        let ok = SessionConfig::honest(2, 256, 0.25, 64, 0);
        let mut c = ok.clone();
        c.r = 8;
        assert!(c.validate().is_err());
        let mut c = ok.clone();
        c.sample_fraction = 1.0;
        assert!(c.validate().is_err());
        let mut c = ok.clone();
        c.m_groups = 97;
        assert!(matches!(c.validate(), Err(Error::InvalidConfig(_))));
        let mut c = ok.clone();
        c.n_states = 0;
        assert!(c.validate().is_err());
        let mut c = ok.clone();
        c.users = Some(vec![UserIdentity { id_hex: "00".into(), counter: 0 }]);
        assert!(c.validate().is_err());
    }

    #[test]
    fn json_defaults() {
        let c: SessionConfig =
            serde_json::from_str(r#"{"r":3,"n_states":40,"sample_fraction":0.5,"m_groups":4}"#).unwrap();
        assert_eq!(c.attack, AttackModel::None);
        assert_eq!(c.seed, 0);
        assert_eq!(c.id_bits, 64);
        assert!(serde_json::from_str::<SessionConfig>(
            r#"{"r":3,"n_states":40,"sample_fraction":0.5,"m_groups":4,"bogus":1}"#
        )
        .is_err());
    }

    #[test]
    fn default_identities_are_distinct() {
        let ids = SessionConfig::honest(4, 64, 0.25, 8, 0).identities().unwrap();
        assert_eq!(ids.len(), 4);
        assert_eq!(ids[2].0.to_hex(), "0000000000000003");
    }
}
