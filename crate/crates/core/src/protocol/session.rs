use crate::adversary::channel_transform;
use crate::authkey::{blocks_needed, extend_key, AuthKey, Sha256Derivation};
use crate::entanglement::{deduce_ops, BellOutcome, PauliChoice};
use crate::error::{Error, Result};
use crate::rng::{SimRng, Stream};
use crate::scalar::Scalar;
use crate::statevec::{MeasBasis, StateVector};

use super::config::SessionConfig;
use super::pool::{QubitHandle, QubitPool};
use super::report::{AuthVerdict, CheckSummary, GroupReport, SessionReport, TranscriptEvent, SCHEMA_VERSION};
use super::violates_correlation;

/// The qubits of one distributed GHZ state as the parties see them.
#[derive(Debug, Clone)]
struct Position {
    trent: QubitHandle,
    users: Vec<QubitHandle>,
}

/// One authentication group `{P, Q}`.
#[derive(Debug, Clone, PartialEq)]
pub struct GroupRecord {
    pub p: usize,
    pub q: usize,
    pub trent_op: Option<PauliChoice>,
    pub user_bits: Vec<bool>,
    pub outcomes: Vec<BellOutcome>,
    pub deduced_bits: Vec<bool>,
    pub consistent: Option<bool>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
enum Stage {
    Distributed,
    Checked,
    Aborted,
    Partitioned,
    Encoded,
    Randomized,
    Done,
}

/// A session in progress. Each step consumes the previous one's state.
#[derive(Debug, Clone)]
pub struct Session<T: Scalar = f64> {
    config: SessionConfig,
    stage: Stage,
    pool: QubitPool<T>,
    positions: Vec<Position>,
    consumed: Vec<bool>,
    trent_rng: SimRng,
    nature_rng: SimRng,
    transcript: Vec<super::TranscriptEvent>,
    check: Option<CheckSummary>,
    groups: Vec<GroupRecord>,
    discarded: Vec<usize>,
    keys: Vec<AuthKey>,
    final_counters: Vec<u64>,
    verdicts: Vec<AuthVerdict>,
}

fn stage_error(step: &str, stage: Stage) -> Error {
    Error::InvalidArgument(format!("{step} is not allowed after stage {stage:?}"))
}

impl<T: Scalar> Session<T> {
    /// S1: prepares N GHZ states and sends the user qubits through the channel.
    pub fn distribute(config: SessionConfig) -> Result<Self> {
        config.validate_structure()?;
        let mut eve_rng = SimRng::stream(config.seed, Stream::Adversary);
        let mut pool = QubitPool::new();
        let mut positions = Vec::with_capacity(config.n_states);
        for _ in 0..config.n_states {
            let ghz = StateVector::<T>::prepare_ghz(config.r + 1)?;
            let delivered = channel_transform(&config.attack, ghz, &mut eve_rng)?;
            let handles: Vec<Vec<QubitHandle>> = delivered.components.into_iter().map(|c| pool.add(c)).collect();
            let at = |q: &crate::adversary::QubitRef| handles[q.component][q.qubit];
            positions.push(Position { trent: at(&delivered.trent), users: delivered.users.iter().map(at).collect() });
        }
        let transcript = vec![TranscriptEvent::Distributed { n_states: config.n_states, r: config.r }];
        Ok(Self {
            trent_rng: SimRng::stream(config.seed, Stream::Trent),
            nature_rng: SimRng::stream(config.seed, Stream::Measurement),
            consumed: vec![false; config.n_states],
            config,
            stage: Stage::Distributed,
            pool,
            positions,
            transcript,
            check: None,
            groups: Vec::new(),
            discarded: Vec::new(),
            keys: Vec::new(),
            final_counters: Vec::new(),
            verdicts: Vec::new(),
        })
    }

    pub fn config(&self) -> &SessionConfig {
        &self.config
    }

    pub fn transcript(&self) -> &[TranscriptEvent] {
        &self.transcript
    }

    pub fn groups(&self) -> &[GroupRecord] {
        &self.groups
    }

    pub fn keys(&self) -> &[AuthKey] {
        &self.keys
    }

    pub fn is_aborted(&self) -> bool {
        self.stage == Stage::Aborted
    }

    /// Current state of the component holding user `user`'s qubit of position `pos`.
    pub fn user_qubit_state(&self, pos: usize, user: usize) -> Result<(&StateVector<T>, usize)> {
        self.pool.state_of(self.positions[pos].users[user])
    }

    pub fn trent_qubit_state(&self, pos: usize) -> Result<(&StateVector<T>, usize)> {
        self.pool.state_of(self.positions[pos].trent)
    }

    /// S2: sampled Z/X correlation check between Trent and all users.
    pub fn eavesdrop_check(&mut self) -> Result<CheckSummary> {
        if self.stage != Stage::Distributed {
            return Err(stage_error("eavesdrop_check", self.stage));
        }
        let n = self.config.n_states;
        let k = self.config.sample_count();
        if k == 0 {
            return Err(Error::InvalidConfig(format!(
                "eavesdropping check samples no states (N = {n}, sample_fraction = {})",
                self.config.sample_fraction
            )));
        }
        if k > n {
            return Err(Error::InvalidConfig(format!("cannot sample {k} of {n} states")));
        }
        let sampled = self.trent_rng.choose_indices(n, k);
        let bases: Vec<MeasBasis> =
            sampled.iter().map(|_| if self.trent_rng.bit() { MeasBasis::X } else { MeasBasis::Z }).collect();

        // Trent measures his sampled qubits before announcing
        let mut trent_results = Vec::with_capacity(k);
        for (&pos, &basis) in sampled.iter().zip(&bases) {
            trent_results.push(self.pool.measure(self.positions[pos].trent, basis, &mut self.nature_rng)?);
        }
        self.transcript.push(TranscriptEvent::CheckAnnounced { positions: sampled.clone(), bases: bases.clone() });

        let mut user_results = vec![Vec::with_capacity(k); self.config.r];
        for (user, results) in user_results.iter_mut().enumerate() {
            for (&pos, &basis) in sampled.iter().zip(&bases) {
                results.push(self.pool.measure(self.positions[pos].users[user], basis, &mut self.nature_rng)?);
            }
            self.transcript.push(TranscriptEvent::UserCheckResults {
                user: user + 1,
                outcomes: results.iter().map(|&b| u8::from(b)).collect(),
            });
        }
        for &pos in &sampled {
            self.consumed[pos] = true;
        }

        let compare = |trent: &[bool]| {
            let mut by_basis = [(0usize, 0usize); 2];
            for (i, &basis) in bases.iter().enumerate() {
                let mut bits = vec![trent[i]];
                bits.extend(user_results.iter().map(|u| u[i]));
                let slot = &mut by_basis[usize::from(basis == MeasBasis::X)];
                slot.0 += 1;
                slot.1 += usize::from(violates_correlation(basis, &bits));
            }
            by_basis
        };
        let [(z_samples, z_mismatches), (x_samples, x_mismatches)] = compare(&trent_results);
        let mismatches = z_mismatches + x_mismatches;
        let rate = mismatches as f64 / k as f64;
        let pass = rate <= self.config.check_threshold;
        self.transcript.push(TranscriptEvent::TrentCompared { mismatches, pass });

        let mut users_confirmed = None;
        if pass {
            self.transcript.push(TranscriptEvent::TrentCheckRevealed {
                outcomes: trent_results.iter().map(|&b| u8::from(b)).collect(),
            });
            // the users repeat the comparison against what Trent revealed
            let [(_, zm), (_, xm)] = compare(&trent_results);
            let confirmed = (zm + xm) as f64 / k as f64 <= self.config.check_threshold;
            self.transcript.push(TranscriptEvent::UsersVerifiedTrent { mismatches: zm + xm, confirmed });
            users_confirmed = Some(confirmed);
        }

        let summary = CheckSummary {
            k,
            mismatches,
            rate,
            pass,
            users_confirmed,
            z_samples,
            z_mismatches,
            x_samples,
            x_mismatches,
        };
        if pass && users_confirmed == Some(true) {
            self.stage = Stage::Checked;
        } else {
            self.stage = Stage::Aborted;
            self.transcript.push(TranscriptEvent::Aborted {
                reason: format!("eavesdropping check failed: {mismatches} of {k} sampled positions mismatched"),
            });
        }
        self.check = Some(summary.clone());
        Ok(summary)
    }

    /// S3: random disjoint `(P, Q)` pairs from the unconsumed states.
    pub fn partition_groups(&mut self) -> Result<()> {
        if self.stage != Stage::Checked {
            return Err(stage_error("partition_groups", self.stage));
        }
        let m = self.config.m_groups;
        let mut remaining: Vec<usize> = (0..self.config.n_states).filter(|&i| !self.consumed[i]).collect();
        if remaining.len() < 2 * m {
            return Err(Error::Capacity(format!("{} unused states cannot form {m} groups", remaining.len())));
        }
        self.trent_rng.shuffle(&mut remaining);
        let mut leftover = remaining.split_off(2 * m);
        leftover.sort_unstable();
        self.groups = remaining
            .chunks_exact(2)
            .map(|pq| GroupRecord {
                p: pq[0],
                q: pq[1],
                trent_op: None,
                user_bits: Vec::new(),
                outcomes: Vec::new(),
                deduced_bits: Vec::new(),
                consistent: None,
            })
            .collect();
        for g in &self.groups {
            self.consumed[g.p] = true;
            self.consumed[g.q] = true;
        }
        self.transcript.push(TranscriptEvent::GroupsFormed {
            groups: self.groups.iter().map(|g| [g.p, g.q]).collect(),
            discarded: leftover.clone(),
        });
        self.discarded = leftover;
        self.stage = Stage::Partitioned;
        Ok(())
    }

    /// S4: each user applies the operator named by key bit `i` to their qubit of `P(i)`.
    pub fn encode_keys(&mut self) -> Result<()> {
        if self.stage != Stage::Partitioned {
            return Err(stage_error("encode_keys", self.stage));
        }
        let m = self.config.m_groups;
        let identities = self.config.identities()?;
        self.keys.clear();
        self.final_counters.clear();
        for (id, start) in &identities {
            self.keys.push(extend_key(id, start, m)?);
            self.final_counters.push(start.advance(blocks_needed(&Sha256Derivation, m))?.value());
        }
        for user in 0..self.config.r {
            for (i, group) in self.groups.iter_mut().enumerate() {
                let bit = self.keys[user].bit(i);
                self.pool.apply_pauli(self.positions[group.p].users[user], PauliChoice::from_bit(bit))?;
                group.user_bits.push(bit);
            }
            self.transcript.push(TranscriptEvent::KeyOperationsDone { user: user + 1 });
        }
        self.stage = Stage::Encoded;
        Ok(())
    }

    /// S5: Trent applies a uniformly random operator to his qubit of each `P(i)`.
    pub fn trent_randomize(&mut self) -> Result<()> {
        if self.stage != Stage::Encoded {
            return Err(stage_error("trent_randomize", self.stage));
        }
        for group in &mut self.groups {
            let op = PauliChoice::from_bit(self.trent_rng.bit());
            self.pool.apply_pauli(self.positions[group.p].trent, op)?;
            group.trent_op = Some(op);
        }
        self.transcript.push(TranscriptEvent::BellMeasurementRequested);
        self.stage = Stage::Randomized;
        Ok(())
    }

    /// S6 with honest users.
    pub fn authenticate(&mut self) -> Result<SessionReport> {
        self.authenticate_with(|_, _, outcome| outcome)
    }

    /// S6. `publish(user, group, measured)` decides what each user announces,
    /// which lets tests model forged announcements.
    pub fn authenticate_with<F>(&mut self, mut publish: F) -> Result<SessionReport>
    where
        F: FnMut(usize, usize, BellOutcome) -> BellOutcome,
    {
        if self.stage != Stage::Randomized {
            return Err(stage_error("authenticate", self.stage));
        }
        let r = self.config.r;
        let mut published = vec![Vec::with_capacity(self.groups.len()); r];
        for (user, announced) in published.iter_mut().enumerate() {
            for (i, g) in self.groups.iter().enumerate() {
                let (a, b) = (self.positions[g.p].users[user], self.positions[g.q].users[user]);
                let measured = self.pool.measure_bell(a, b, &mut self.nature_rng)?;
                announced.push(publish(user, i, measured));
            }
            self.transcript.push(TranscriptEvent::UserBellResults { user: user + 1, outcomes: announced.clone() });
        }

        let mut verdicts: Vec<AuthVerdict> = (0..r)
            .map(|user| AuthVerdict { user: user + 1, accepted: false, mismatching_groups: 0, inconsistent_groups: 0 })
            .collect();
        for (i, g) in self.groups.iter_mut().enumerate() {
            let (t, t2) = (self.positions[g.p].trent, self.positions[g.q].trent);
            let trent_outcome = self.pool.measure_bell(t, t2, &mut self.nature_rng)?;
            let mut outcomes = vec![trent_outcome];
            outcomes.extend(published.iter().map(|u| u[i]));
            let trent_op = g.trent_op.expect("set in trent_randomize");
            let deduction = deduce_ops(&outcomes, trent_op)?;
            for (user, v) in verdicts.iter_mut().enumerate() {
                if deduction.user_bits[user] != self.keys[user].bit(i) {
                    v.mismatching_groups += 1;
                }
                if !deduction.consistent {
                    v.inconsistent_groups += 1;
                }
            }
            g.outcomes = outcomes;
            g.deduced_bits = deduction.user_bits;
            g.consistent = Some(deduction.consistent);
        }
        for v in &mut verdicts {
            v.accepted = v.mismatching_groups == 0 && v.inconsistent_groups == 0;
        }
        self.transcript.push(TranscriptEvent::VerdictsIssued {
            accepted: verdicts.iter().filter(|v| v.accepted).map(|v| v.user).collect(),
            rejected: verdicts.iter().filter(|v| !v.accepted).map(|v| v.user).collect(),
        });
        self.verdicts = verdicts;
        self.stage = Stage::Done;
        Ok(self.report())
    }

    /// Report of the session so far. Trent's operators are included.
    pub fn report(&self) -> SessionReport {
        let s2 = self.check.clone().unwrap_or(CheckSummary {
            k: 0,
            mismatches: 0,
            rate: 0.0,
            pass: false,
            users_confirmed: None,
            z_samples: 0,
            z_mismatches: 0,
            x_samples: 0,
            x_mismatches: 0,
        });
        let groups = self
            .groups
            .iter()
            .enumerate()
            .filter(|(_, g)| g.consistent.is_some())
            .map(|(index, g)| GroupReport {
                index,
                p: g.p,
                q: g.q,
                trent_op: g.trent_op.map(|op| u8::from(op.classical_bit())),
                outcomes: g.outcomes.clone(),
                deduced_bits: g.deduced_bits.iter().map(|&b| u8::from(b)).collect(),
                consistent: g.consistent.unwrap_or(false),
            })
            .collect();
        SessionReport {
            schema_version: SCHEMA_VERSION,
            config: self.config.clone(),
            aborted: self.stage == Stage::Aborted,
            s2,
            groups,
            discarded: self.discarded.clone(),
            verdicts: self.verdicts.clone(),
            final_counters: self.final_counters.clone(),
            transcript: self.transcript.clone(),
        }
    }
}

/// Runs S1 to S6, stopping with an aborted report if the check fails.
pub fn run_session<T: Scalar>(config: &SessionConfig) -> Result<SessionReport> {
    config.validate()?;
    let mut session = Session::<T>::distribute(config.clone())?;
    session.eavesdrop_check()?;
    if session.is_aborted() {
        return Ok(session.report());
    }
    session.partition_groups()?;
    session.encode_keys()?;
    session.trent_randomize()?;
    session.authenticate()
}
