//! Dense pure-state simulation of small qubit registers.
//!
//! Qubit 0 is the most significant bit of an amplitude index, so the ket
//! `|q0 q1 ... q(n-1)>` lives at index `q0 * 2^(n-1) + ... + q(n-1)`.
//! Every operation takes `&self` and returns a fresh state.

use num_complex::Complex;

use crate::entanglement::{BellKind, BellOutcome, Sign};
use crate::error::{invalid, Error, Result};
use crate::rng::SimRng;
use crate::scalar::Scalar;

/// Largest register the dense simulator accepts.
pub const MAX_QUBITS: usize = 16;

pub type Amplitude<T> = Complex<T>;

/// Single-qubit measurement basis.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, serde::Serialize, serde::Deserialize)]
pub enum MeasBasis {
    Z,
    X,
}

/// The two operators users and Trent choose between, and their one-bit encoding.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum PauliChoice {
    /// Identity, encoded as 0.
    I,
    /// `iσ_y = |0><1| - |1><0|`, encoded as 1.
    ISigmaY,
}

impl PauliChoice {
    pub fn from_bit(bit: bool) -> Self {
        if bit {
            PauliChoice::ISigmaY
        } else {
            PauliChoice::I
        }
    }

    pub fn classical_bit(self) -> bool {
        matches!(self, PauliChoice::ISigmaY)
    }
}

impl std::fmt::Display for PauliChoice {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            PauliChoice::I => f.write_str("I"),
            PauliChoice::ISigmaY => f.write_str("iY"),
        }
    }
}

/// Normalized amplitude vector over an ordered register of `n_qubits`.
#[derive(Debug, Clone, PartialEq)]
pub struct StateVector<T: Scalar = f64> {
    n_qubits: usize,
    amps: Vec<Amplitude<T>>,
}

fn frac_1_sqrt2<T: Scalar>() -> T {
    T::FRAC_1_SQRT_2()
}

impl<T: Scalar> StateVector<T> {
    /// Builds a state from raw amplitudes, checking length, finiteness and norm.
    pub fn from_amplitudes(amps: Vec<Amplitude<T>>) -> Result<Self> {
        let len = amps.len();
        if len < 2 || !len.is_power_of_two() {
            return Err(invalid(format!("amplitude count {len} is not 2^n with n >= 1")));
        }
        let n_qubits = len.trailing_zeros() as usize;
        if n_qubits > MAX_QUBITS {
            return Err(invalid(format!("{n_qubits} qubits exceeds the {MAX_QUBITS}-qubit cap")));
        }
        if amps.iter().any(|a| !a.re.is_finite() || !a.im.is_finite()) {
            return Err(invalid("non-finite amplitude"));
        }
        let state = Self { n_qubits, amps };
        let norm = state.norm_sqr();
        if (norm - T::one()).abs() > T::tolerance() {
            return Err(invalid(format!("state norm {norm:?} is not 1")));
        }
        Ok(state)
    }

    /// Computational basis ket `|index>` on `n_qubits`.
    pub fn basis(n_qubits: usize, index: usize) -> Result<Self> {
        if n_qubits == 0 || n_qubits > MAX_QUBITS {
            return Err(invalid(format!("register size {n_qubits} outside 1..={MAX_QUBITS}")));
        }
        let dim = 1usize << n_qubits;
        if index >= dim {
            return Err(invalid(format!("basis index {index} out of range for {n_qubits} qubits")));
        }
        let mut amps = vec![Complex::new(T::zero(), T::zero()); dim];
        amps[index] = Complex::new(T::one(), T::zero());
        Ok(Self { n_qubits, amps })
    }

    /// `(|0...0> + |1...1>)/√2` on `n` qubits, `2 <= n <= 16`.
    pub fn prepare_ghz(n: usize) -> Result<Self> {
        if !(2..=MAX_QUBITS).contains(&n) {
            return Err(invalid(format!("GHZ size {n} outside 2..={MAX_QUBITS}")));
        }
        let dim = 1usize << n;
        let mut amps = vec![Complex::new(T::zero(), T::zero()); dim];
        amps[0] = Complex::new(frac_1_sqrt2(), T::zero());
        amps[dim - 1] = Complex::new(frac_1_sqrt2(), T::zero());
        Ok(Self { n_qubits: n, amps })
    }

    /// The Bell state named by `outcome` on two qubits.
    pub fn bell(outcome: BellOutcome) -> Self {
        let h = frac_1_sqrt2::<T>();
        let s = match outcome.sign {
            Sign::Plus => h,
            Sign::Minus => -h,
        };
        let z = Complex::new(T::zero(), T::zero());
        let amps = match outcome.kind {
            BellKind::Phi => vec![Complex::new(h, T::zero()), z, z, Complex::new(s, T::zero())],
            BellKind::Psi => vec![z, Complex::new(h, T::zero()), Complex::new(s, T::zero()), z],
        };
        Self { n_qubits: 2, amps }
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn amplitudes(&self) -> &[Amplitude<T>] {
        &self.amps
    }

    pub fn amplitude(&self, index: usize) -> Amplitude<T> {
        self.amps[index]
    }

    pub fn norm_sqr(&self) -> T {
        self.amps.iter().fold(T::zero(), |acc, a| acc + a.norm_sqr())
    }

    /// `<self|other>`.
    pub fn inner(&self, other: &Self) -> Result<Amplitude<T>> {
        if self.n_qubits != other.n_qubits {
            return Err(invalid("inner product of registers with different sizes"));
        }
        Ok(self.amps.iter().zip(&other.amps).fold(Complex::new(T::zero(), T::zero()), |acc, (a, b)| acc + a.conj() * b))
    }

    /// `|<self|other>|^2`, insensitive to global phase.
    pub fn fidelity(&self, other: &Self) -> Result<T> {
        Ok(self.inner(other)?.norm_sqr())
    }

    /// Equal up to a global phase, within tolerance.
    pub fn approx_eq_up_to_phase(&self, other: &Self) -> bool {
        self.fidelity(other).map(|f| f > T::one() - T::tolerance()).unwrap_or(false)
    }

    fn mask(&self, q: usize) -> usize {
        1 << (self.n_qubits - 1 - q)
    }

    fn check_qubit(&self, q: usize) -> Result<()> {
        if q >= self.n_qubits {
            return Err(invalid(format!("qubit {q} out of range for {}-qubit register", self.n_qubits)));
        }
        Ok(())
    }

    fn check_pair(&self, q1: usize, q2: usize) -> Result<()> {
        self.check_qubit(q1)?;
        self.check_qubit(q2)?;
        if q1 == q2 {
            return Err(invalid(format!("Bell measurement needs two distinct qubits, got {q1} twice")));
        }
        Ok(())
    }

    /// Product state; qubits of `self` come first.
    pub fn tensor(&self, other: &Self) -> Result<Self> {
        let n = self.n_qubits + other.n_qubits;
        if n > MAX_QUBITS {
            return Err(invalid(format!("tensor product of {n} qubits exceeds the {MAX_QUBITS}-qubit cap")));
        }
        let mut amps = Vec::with_capacity(1 << n);
        for a in &self.amps {
            amps.extend(other.amps.iter().map(|b| a * b));
        }
        Ok(Self { n_qubits: n, amps })
    }

    /// Applies `op` to qubit `q`. `iσ_y` acts as `[[0,1],[-1,0]]`.
    pub fn apply_pauli(&self, q: usize, op: PauliChoice) -> Result<Self> {
        self.check_qubit(q)?;
        let mut out = self.clone();
        if op == PauliChoice::I {
            return Ok(out);
        }
        let m = self.mask(q);
        for i in (0..self.amps.len()).filter(|i| i & m == 0) {
            let a0 = self.amps[i];
            let a1 = self.amps[i | m];
            out.amps[i] = a1;
            out.amps[i | m] = -a0;
        }
        Ok(out)
    }

    /// Hadamard on qubit `q`; maps `|+>`/`|->` to `|0>`/`|1>` and back.
    pub fn apply_hadamard(&self, q: usize) -> Result<Self> {
        self.check_qubit(q)?;
        let h = frac_1_sqrt2::<T>();
        let m = self.mask(q);
        let mut out = self.clone();
        for i in (0..self.amps.len()).filter(|i| i & m == 0) {
            let a0 = self.amps[i];
            let a1 = self.amps[i | m];
            out.amps[i] = (a0 + a1).scale(h);
            out.amps[i | m] = (a0 - a1).scale(h);
        }
        Ok(out)
    }

    /// Rotates the listed qubits so that a computational readout of them is
    /// equivalent to measuring them in `basis`.
    pub fn rotate_to_basis(&self, qubits: &[usize], basis: MeasBasis) -> Result<Self> {
        let mut out = self.clone();
        for &q in qubits {
            out.check_qubit(q)?;
            if basis == MeasBasis::X {
                out = out.apply_hadamard(q)?;
            }
        }
        Ok(out)
    }

    /// Exact marginal distribution of a computational readout of `qubits`.
    ///
    /// Entry `k` is the probability that the readout, read as a big-endian
    /// bit string in the order given, equals `k`.
    pub fn readout_distribution(&self, qubits: &[usize]) -> Result<Vec<T>> {
        for &q in qubits {
            self.check_qubit(q)?;
        }
        let masks: Vec<usize> = qubits.iter().map(|&q| self.mask(q)).collect();
        let mut dist = vec![T::zero(); 1 << qubits.len()];
        for (i, a) in self.amps.iter().enumerate() {
            let key = masks.iter().fold(0usize, |acc, &m| (acc << 1) | usize::from(i & m != 0));
            dist[key] = dist[key] + a.norm_sqr();
        }
        Ok(dist)
    }

    /// Born probability and renormalized post-measurement state for a
    /// single-qubit outcome. The state is `None` when the branch has zero weight.
    pub fn project_qubit(&self, q: usize, basis: MeasBasis, outcome: bool) -> Result<(T, Option<Self>)> {
        self.check_qubit(q)?;
        let m = self.mask(q);
        let h = frac_1_sqrt2::<T>();
        let zero = Complex::new(T::zero(), T::zero());
        let mut out = vec![zero; self.amps.len()];
        for i in (0..self.amps.len()).filter(|i| i & m == 0) {
            let (a0, a1) = (self.amps[i], self.amps[i | m]);
            match (basis, outcome) {
                (MeasBasis::Z, false) => out[i] = a0,
                (MeasBasis::Z, true) => out[i | m] = a1,
                (MeasBasis::X, false) => {
                    let c = (a0 + a1).scale(h);
                    out[i] = c.scale(h);
                    out[i | m] = c.scale(h);
                }
                (MeasBasis::X, true) => {
                    let c = (a0 - a1).scale(h);
                    out[i] = c.scale(h);
                    out[i | m] = -c.scale(h);
                }
            }
        }
        Ok(self.renormalized(out))
    }

    fn renormalized(&self, amps: Vec<Amplitude<T>>) -> (T, Option<Self>) {
        let p = amps.iter().fold(T::zero(), |acc, a| acc + a.norm_sqr());
        if p <= T::epsilon() {
            return (T::zero(), None);
        }
        let scale = T::one() / p.sqrt();
        let amps = amps.into_iter().map(|a| a.scale(scale)).collect();
        (p, Some(Self { n_qubits: self.n_qubits, amps }))
    }

    /// Samples a single-qubit measurement. Outcome `false` is `|0>` (Z) or
    /// `|+>` (X). The qubit stays in the register, collapsed.
    pub fn measure_qubit(&self, q: usize, basis: MeasBasis, rng: &mut SimRng) -> Result<(bool, Self)> {
        let (p0, s0) = self.project_qubit(q, basis, false)?;
        let (_, s1) = self.project_qubit(q, basis, true)?;
        let draw = T::from_f64_lossy(rng.uniform());
        match (s0, s1) {
            (Some(s0), Some(s1)) => Ok(if draw < p0 { (false, s0) } else { (true, s1) }),
            (Some(s0), None) => Ok((false, s0)),
            (None, Some(s1)) => Ok((true, s1)),
            (None, None) => Err(Error::Internal("both measurement branches have zero weight".into())),
        }
    }

    /// Exact Born probabilities of the Bell outcomes on `(q1, q2)`, ordered
    /// `(Φ+, Φ-, Ψ+, Ψ-)`.
    pub fn bell_pair_distribution(&self, q1: usize, q2: usize) -> Result<[T; 4]> {
        self.check_pair(q1, q2)?;
        let joint = self.bell_frame_distribution(&[(q1, q2)])?;
        Ok([joint[0], joint[1], joint[2], joint[3]])
    }

    /// Joint distribution of simultaneous Bell measurements on disjoint pairs.
    ///
    /// Entry `k` corresponds to the outcome tuple whose base-4 digits, most
    /// significant first, are the [`BellOutcome::index`] of each pair.
    pub fn bell_frame_distribution(&self, pairs: &[(usize, usize)]) -> Result<Vec<T>> {
        let mut seen = vec![false; self.n_qubits];
        for &(a, b) in pairs {
            self.check_pair(a, b)?;
            for q in [a, b] {
                if std::mem::replace(&mut seen[q], true) {
                    return Err(invalid(format!("qubit {q} appears in more than one Bell pair")));
                }
            }
        }
        let h = frac_1_sqrt2::<T>();
        let mut amps = self.amps.clone();
        for &(a, b) in pairs {
            let (ma, mb) = (self.mask(a), self.mask(b));
            for i in (0..amps.len()).filter(|i| i & (ma | mb) == 0) {
                let (i00, i01, i10, i11) = (i, i | mb, i | ma, i | ma | mb);
                let (a00, a01, a10, a11) = (amps[i00], amps[i01], amps[i10], amps[i11]);
                // slot bits: first qubit carries the kind, second the sign
                amps[i00] = (a00 + a11).scale(h);
                amps[i01] = (a00 - a11).scale(h);
                amps[i10] = (a01 + a10).scale(h);
                amps[i11] = (a01 - a10).scale(h);
            }
        }
        let readout: Vec<usize> = pairs.iter().flat_map(|&(a, b)| [a, b]).collect();
        let frame = Self { n_qubits: self.n_qubits, amps };
        frame.readout_distribution(&readout)
    }

    /// Probability and collapsed state for one Bell outcome on `(q1, q2)`.
    pub fn project_bell(&self, q1: usize, q2: usize, outcome: BellOutcome) -> Result<(T, Option<Self>)> {
        self.check_pair(q1, q2)?;
        let (m1, m2) = (self.mask(q1), self.mask(q2));
        let h = frac_1_sqrt2::<T>();
        let zero = Complex::new(T::zero(), T::zero());
        let mut out = vec![zero; self.amps.len()];
        for i in (0..self.amps.len()).filter(|i| i & (m1 | m2) == 0) {
            let (i00, i01, i10, i11) = (i, i | m2, i | m1, i | m1 | m2);
            let sign = match outcome.sign {
                Sign::Plus => T::one(),
                Sign::Minus => -T::one(),
            };
            let (lo, hi) = match outcome.kind {
                BellKind::Phi => (i00, i11),
                BellKind::Psi => (i01, i10),
            };
            let c = (self.amps[lo] + self.amps[hi].scale(sign)).scale(h);
            out[lo] = c.scale(h);
            out[hi] = c.scale(h * sign);
        }
        Ok(self.renormalized(out))
    }

    /// Samples a Bell-basis measurement of `(q1, q2)` and returns the collapsed register.
    pub fn measure_bell(&self, q1: usize, q2: usize, rng: &mut SimRng) -> Result<(BellOutcome, Self)> {
        let probs = self.bell_pair_distribution(q1, q2)?;
        let draw = T::from_f64_lossy(rng.uniform());
        let mut acc = T::zero();
        let mut chosen = None;
        for (k, &p) in probs.iter().enumerate() {
            acc = acc + p;
            if p > T::zero() && draw < acc {
                chosen = Some(k);
                break;
            }
        }
        // rounding can leave the draw above the final cumulative sum
        let k = chosen
            .or_else(|| probs.iter().rposition(|&p| p > T::zero()))
            .ok_or_else(|| Error::Internal("Bell distribution has no support".into()))?;
        let outcome = BellOutcome::from_index(k);
        let (_, state) = self.project_bell(q1, q2, outcome)?;
        let state = state.ok_or_else(|| Error::Internal("sampled Bell branch has zero weight".into()))?;
        Ok((outcome, state))
    }
}
