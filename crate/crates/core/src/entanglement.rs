//! Bell and GHZ bases: labels, classification, the operator-to-label
//! table, entanglement-swapping outcome distributions and Trent's deduction.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{invalid, Error, Result};
use crate::scalar::Scalar;
pub use crate::statevec::PauliChoice;
use crate::statevec::StateVector;

/// Largest register `classify_ghz` accepts.
pub const MAX_CLASSIFY_QUBITS: usize = 8;

/// φ-kind pairs have equal bits, ψ-kind pairs opposite bits.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum BellKind {
    Phi,
    Psi,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Sign {
    Plus,
    Minus,
}

impl Sign {
    pub fn is_minus(self) -> bool {
        self == Sign::Minus
    }

    fn symbol(self) -> char {
        match self {
            Sign::Plus => '+',
            Sign::Minus => '-',
        }
    }
}

/// One of the four Bell states `Φ±`, `Ψ±`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct BellOutcome {
    pub kind: BellKind,
    pub sign: Sign,
}

impl BellOutcome {
    pub const PHI_PLUS: Self = Self { kind: BellKind::Phi, sign: Sign::Plus };
    pub const PHI_MINUS: Self = Self { kind: BellKind::Phi, sign: Sign::Minus };
    pub const PSI_PLUS: Self = Self { kind: BellKind::Psi, sign: Sign::Plus };
    pub const PSI_MINUS: Self = Self { kind: BellKind::Psi, sign: Sign::Minus };
    pub const ALL: [Self; 4] = [Self::PHI_PLUS, Self::PHI_MINUS, Self::PSI_PLUS, Self::PSI_MINUS];

    /// Position in the order `(Φ+, Φ-, Ψ+, Ψ-)`.
    pub fn index(self) -> usize {
        2 * usize::from(self.kind == BellKind::Psi) + usize::from(self.sign == Sign::Minus)
    }

    /// Inverse of [`index`](Self::index); only the low two bits are used.
    pub fn from_index(k: usize) -> Self {
        Self::ALL[k & 3]
    }

    pub fn is_psi(self) -> bool {
        self.kind == BellKind::Psi
    }
}

impl fmt::Display for BellOutcome {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let name = match self.kind {
            BellKind::Phi => "Phi",
            BellKind::Psi => "Psi",
        };
        write!(f, "{name}{}", self.sign.symbol())
    }
}

impl FromStr for BellOutcome {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::ALL.into_iter().find(|o| o.to_string() == s).ok_or_else(|| invalid(format!("unknown Bell outcome {s:?}")))
    }
}

impl Serialize for BellOutcome {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for BellOutcome {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// Names the GHZ-basis vector `(|s> ± |s̄>)/√2`.
///
/// The canonical `flip_pattern` has its last bit 0, which matches the
/// three-qubit names Ψ1..Ψ8 (Ψ3 = (100,+), Ψ7 = (110,+), ...).
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct GhzLabel {
    flip_pattern: Vec<bool>,
    sign: Sign,
}

impl GhzLabel {
    /// Canonicalizes `pattern` by complementing it when its last bit is set.
    /// The relative sign is unchanged by that choice.
    pub fn new(pattern: Vec<bool>, sign: Sign) -> Result<Self> {
        if pattern.len() < 2 {
            return Err(invalid("GHZ labels need at least two qubits"));
        }
        let flip_pattern =
            if *pattern.last().expect("non-empty") { pattern.into_iter().map(|b| !b).collect() } else { pattern };
        Ok(Self { flip_pattern, sign })
    }

    /// The all-zero pattern with `+`: `(|0...0> + |1...1>)/√2`.
    pub fn ghz(n: usize) -> Result<Self> {
        Self::new(vec![false; n], Sign::Plus)
    }

    /// Three-qubit label from its index `1..=8` (Ψ1..Ψ8).
    pub fn psi(k: u8) -> Result<Self> {
        if !(1..=8).contains(&k) {
            return Err(invalid(format!("Ψ index {k} outside 1..=8")));
        }
        let j = k - 1;
        let sign = if j & 1 == 0 { Sign::Plus } else { Sign::Minus };
        // consecutive pairs share a pattern: 000, 100, 010, 110
        let pair = j / 2;
        Self::new(vec![pair & 1 != 0, pair & 2 != 0, false], sign)
    }

    /// `Some(1..=8)` for three-qubit labels.
    pub fn psi_index(&self) -> Option<u8> {
        if self.n_qubits() != 3 {
            return None;
        }
        let pair = match (self.flip_pattern[0], self.flip_pattern[1]) {
            (false, false) => 0,
            (true, false) => 1,
            (false, true) => 2,
            (true, true) => 3,
        };
        Some(1 + 2 * pair + u8::from(self.sign.is_minus()))
    }

    pub fn n_qubits(&self) -> usize {
        self.flip_pattern.len()
    }

    pub fn flip_pattern(&self) -> &[bool] {
        &self.flip_pattern
    }

    pub fn sign(&self) -> Sign {
        self.sign
    }

    fn pattern_index(&self) -> usize {
        self.flip_pattern.iter().fold(0, |acc, &b| (acc << 1) | usize::from(b))
    }

    /// The basis vector this label names.
    pub fn to_state<T: Scalar>(&self) -> Result<StateVector<T>> {
        let n = self.n_qubits();
        let dim = 1usize << n;
        let s = self.pattern_index();
        let h = T::FRAC_1_SQRT_2();
        let mut amps = vec![num_complex::Complex::new(T::zero(), T::zero()); dim];
        amps[s].re = h;
        amps[(dim - 1) ^ s].re = if self.sign.is_minus() { -h } else { h };
        StateVector::from_amplitudes(amps)
    }
}

impl fmt::Display for GhzLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if let Some(k) = self.psi_index() {
            return write!(f, "Psi{k}");
        }
        let bits: String = self.flip_pattern.iter().map(|&b| if b { '1' } else { '0' }).collect();
        write!(f, "GHZ[{bits},{}]", self.sign.symbol())
    }
}

impl FromStr for GhzLabel {
    type Err = Error;

    /// Parses the [`Display`](fmt::Display) forms `Psi1`..`Psi8` and `GHZ[0110,-]`.
    fn from_str(s: &str) -> Result<Self> {
        if let Some(k) = s.strip_prefix("Psi") {
            let k: u8 = k.parse().map_err(|_| invalid(format!("bad GHZ label {s:?}")))?;
            return Self::psi(k);
        }
        let inner = s
            .strip_prefix("GHZ[")
            .and_then(|r| r.strip_suffix(']'))
            .ok_or_else(|| invalid(format!("bad GHZ label {s:?}")))?;
        let (bits, sign) = inner.split_once(',').ok_or_else(|| invalid(format!("bad GHZ label {s:?}")))?;
        let pattern = bits
            .chars()
            .map(|c| match c {
                '0' => Ok(false),
                '1' => Ok(true),
                _ => Err(invalid(format!("bad flip pattern in {s:?}"))),
            })
            .collect::<Result<Vec<bool>>>()?;
        let sign = match sign {
            "+" => Sign::Plus,
            "-" => Sign::Minus,
            _ => return Err(invalid(format!("bad sign in {s:?}"))),
        };
        Self::new(pattern, sign)
    }
}

/// Identifies which GHZ-basis vector `state` is, ignoring global phase.
///
/// Returns `Ok(None)` when no basis vector has overlap within tolerance of 1.
pub fn classify_ghz<T: Scalar>(state: &StateVector<T>) -> Result<Option<GhzLabel>> {
    let n = state.n_qubits();
    if !(2..=MAX_CLASSIFY_QUBITS).contains(&n) {
        return Err(invalid(format!("classify_ghz supports 2..={MAX_CLASSIFY_QUBITS} qubits, got {n}")));
    }
    let dim = 1usize << n;
    let half = T::one() / (T::one() + T::one());
    // canonical patterns have the last bit clear: even indices
    for s in (0..dim).step_by(2) {
        let (a, b) = (state.amplitude(s), state.amplitude((dim - 1) ^ s));
        for sign in [Sign::Plus, Sign::Minus] {
            let combined = if sign.is_minus() { a - b } else { a + b };
            if combined.norm_sqr() * half > T::one() - T::tolerance() {
                let pattern = (0..n).map(|q| s & (1 << (n - 1 - q)) != 0).collect();
                return GhzLabel::new(pattern, sign).map(Some);
            }
        }
    }
    Ok(None)
}

/// Applies `ops[i]` to qubit `offset + i`.
pub fn apply_ops<T: Scalar>(state: &StateVector<T>, ops: &[PauliChoice], offset: usize) -> Result<StateVector<T>> {
    ops.iter().enumerate().try_fold(state.clone(), |s, (i, &op)| s.apply_pauli(offset + i, op))
}

/// Label of `(ops[0] ⊗ ... ⊗ ops[n-1])` applied to the n-qubit GHZ state.
///
/// The result is obtained by simulating the operators and classifying, so
/// the sign carries the exact phase convention of `iσ_y`.
pub fn transform_label(ops: &[PauliChoice], n: usize) -> Result<GhzLabel> {
    if ops.len() != n {
        return Err(invalid(format!("{} operators given for a {n}-qubit GHZ state", ops.len())));
    }
    let ghz = StateVector::<f64>::prepare_ghz(n)?;
    let out = apply_ops(&ghz, ops, 0)?;
    classify_ghz(&out)?.ok_or_else(|| Error::Internal("Pauli image of a GHZ state left the GHZ basis".into()))
}

/// Exact joint distribution of the Bell outcomes on pairs `(P_i, Q_i)`.
#[derive(Debug, Clone, PartialEq)]
pub struct SwapDistribution<T: Scalar = f64> {
    n_pairs: usize,
    entries: BTreeMap<Vec<BellOutcome>, T>,
}

impl<T: Scalar> SwapDistribution<T> {
    pub fn n_pairs(&self) -> usize {
        self.n_pairs
    }

    /// Probability of `tuple`; zero for tuples outside the support.
    pub fn probability(&self, tuple: &[BellOutcome]) -> T {
        self.entries.get(tuple).copied().unwrap_or_else(T::zero)
    }

    /// Number of tuples with nonzero probability.
    pub fn support_size(&self) -> usize {
        self.entries.len()
    }

    pub fn support(&self) -> impl Iterator<Item = (&[BellOutcome], T)> + '_ {
        self.entries.iter().map(|(k, &v)| (k.as_slice(), v))
    }

    pub fn total(&self) -> T {
        self.entries.values().fold(T::zero(), |a, &b| a + b)
    }
}

/// Swap distribution for two registers of equal size `n`, pairing qubit `i`
/// of `p` with qubit `i` of `q`.
pub fn swap_distribution_of_states<T: Scalar>(p: &StateVector<T>, q: &StateVector<T>) -> Result<SwapDistribution<T>> {
    let n = p.n_qubits();
    if q.n_qubits() != n {
        return Err(invalid(format!("cannot pair a {n}-qubit register with a {}-qubit one", q.n_qubits())));
    }
    let joint = p.tensor(q)?;
    let pairs: Vec<(usize, usize)> = (0..n).map(|i| (i, n + i)).collect();
    let probs = joint.bell_frame_distribution(&pairs)?;
    let entries = probs
        .into_iter()
        .enumerate()
        .filter(|(_, p)| *p > T::tolerance())
        .map(|(k, p)| {
            let tuple = (0..n).map(|i| BellOutcome::from_index(k >> (2 * (n - 1 - i)))).collect();
            (tuple, p)
        })
        .collect();
    Ok(SwapDistribution { n_pairs: n, entries })
}

/// Swap distribution of the group `label_p ⊗ label_q`.
pub fn swap_distribution<T: Scalar>(label_p: &GhzLabel, label_q: &GhzLabel) -> Result<SwapDistribution<T>> {
    if label_p.n_qubits() != label_q.n_qubits() {
        return Err(invalid("GHZ labels of different sizes"));
    }
    swap_distribution_of_states(&label_p.to_state::<T>()?, &label_q.to_state::<T>()?)
}

/// Result of Trent's deduction for one group.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Deduction {
    /// Operator bits of positions `1..n`, one per user.
    pub user_bits: Vec<bool>,
    /// Whether the outcome tuple is possible for the deduced operators.
    pub consistent: bool,
}

/// Recovers the users' operator bits from a group's Bell outcomes.
///
/// `outcomes[0]` is Trent's `(T, T')` result. The kinds reproduce the
/// operator pattern up to global complement; Trent's own operator fixes the
/// complement. The count of `-` signs must have the parity of the number of
/// `iσ_y` operators in the deduced pattern, otherwise the tuple cannot occur.
pub fn deduce_ops(outcomes: &[BellOutcome], trent_op: PauliChoice) -> Result<Deduction> {
    if outcomes.len() < 2 {
        return Err(invalid("deduction needs Trent's outcome and at least one user outcome"));
    }
    let flip = outcomes[0].is_psi() ^ trent_op.classical_bit();
    let pattern: Vec<bool> = outcomes.iter().map(|o| o.is_psi() ^ flip).collect();
    let minus = outcomes.iter().filter(|o| o.sign.is_minus()).count();
    let flips = pattern.iter().filter(|&&b| b).count();
    Ok(Deduction { user_bits: pattern[1..].to_vec(), consistent: minus % 2 == flips % 2 })
}
