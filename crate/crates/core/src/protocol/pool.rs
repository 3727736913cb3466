use crate::entanglement::BellOutcome;
use crate::error::{invalid, Result};
use crate::rng::SimRng;
use crate::scalar::Scalar;
use crate::statevec::{MeasBasis, PauliChoice, StateVector};

/// Stable name of one qubit in a [`QubitPool`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct QubitHandle(usize);

/// All qubits of a session, stored as independent state-vector components.
///
/// Components merge only when a Bell measurement spans two of them, which
/// keeps every register at the size of one authentication group.
#[derive(Debug, Clone, Default)]
pub struct QubitPool<T: Scalar> {
    components: Vec<Option<StateVector<T>>>,
    members: Vec<Vec<QubitHandle>>,
    location: Vec<(usize, usize)>,
}

impl<T: Scalar> QubitPool<T> {
    pub fn new() -> Self {
        Self { components: Vec::new(), members: Vec::new(), location: Vec::new() }
    }

    /// Adds an unentangled component; handles follow its qubit order.
    pub fn add(&mut self, state: StateVector<T>) -> Vec<QubitHandle> {
        let comp = self.components.len();
        let handles: Vec<QubitHandle> = (0..state.n_qubits())
            .map(|q| {
                self.location.push((comp, q));
                QubitHandle(self.location.len() - 1)
            })
            .collect();
        self.components.push(Some(state));
        self.members.push(handles.clone());
        handles
    }

    fn locate(&self, h: QubitHandle) -> Result<(usize, usize)> {
        self.location.get(h.0).copied().ok_or_else(|| invalid(format!("unknown qubit handle {}", h.0)))
    }

    fn component_mut(&mut self, comp: usize) -> &mut StateVector<T> {
        self.components[comp].as_mut().expect("live component")
    }

    /// State of the component holding `h` and the qubit's index in it.
    pub fn state_of(&self, h: QubitHandle) -> Result<(&StateVector<T>, usize)> {
        let (comp, q) = self.locate(h)?;
        Ok((self.components[comp].as_ref().expect("live component"), q))
    }

    pub fn apply_pauli(&mut self, h: QubitHandle, op: PauliChoice) -> Result<()> {
        let (comp, q) = self.locate(h)?;
        let next = self.component_mut(comp).apply_pauli(q, op)?;
        *self.component_mut(comp) = next;
        Ok(())
    }

    pub fn measure(&mut self, h: QubitHandle, basis: MeasBasis, rng: &mut SimRng) -> Result<bool> {
        let (comp, q) = self.locate(h)?;
        let (bit, next) = self.component_mut(comp).measure_qubit(q, basis, rng)?;
        *self.component_mut(comp) = next;
        Ok(bit)
    }

    pub fn measure_bell(&mut self, a: QubitHandle, b: QubitHandle, rng: &mut SimRng) -> Result<BellOutcome> {
        let (ca, _) = self.locate(a)?;
        let (cb, _) = self.locate(b)?;
        if ca != cb {
            self.join(ca, cb)?;
        }
        let (comp, qa) = self.locate(a)?;
        let (_, qb) = self.locate(b)?;
        let (outcome, next) = self.component_mut(comp).measure_bell(qa, qb, rng)?;
        *self.component_mut(comp) = next;
        Ok(outcome)
    }

    /// Merges component `b` into `a`.
    fn join(&mut self, a: usize, b: usize) -> Result<()> {
        let sa = self.components[a].as_ref().expect("live component");
        let sb = self.components[b].as_ref().expect("live component");
        let offset = sa.n_qubits();
        let joined = sa.tensor(sb)?;
        self.components[a] = Some(joined);
        self.components[b] = None;
        let moved = std::mem::take(&mut self.members[b]);
        for (i, h) in moved.iter().enumerate() {
            self.location[h.0] = (a, offset + i);
        }
        self.members[a].extend(moved);
        Ok(())
    }
}
