//! Channel adversaries acting on the user-bound qubits during distribution,
//! the collective-attack error rate, and exact per-sample detection
//! probabilities of the S2 correlation check.
//!
//! `MeasureResend` is a baseline attack not analysed in the protocol's
//! security discussion; it is included for comparison.

use num_complex::Complex;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::protocol::violates_correlation;
use crate::rng::SimRng;
use crate::scalar::Scalar;
use crate::statevec::{MeasBasis, StateVector};

const COEFF_TOLERANCE: f64 = 1e-9;

/// The eight coefficients of a collective attack on two users' qubits,
/// ordered as `α1, β1, γ1, δ1` (Trent's branch 0) then `δ2, γ2, β2, α2`
/// (Trent's branch 1). In branch 0 they weight the user kets
/// `|00>, |01>, |10>, |11>`; in branch 1 the kets `|11>, |10>, |01>, |00>`.
/// `α1` and `δ2` weight the undisturbed kets.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CollectiveCoeffs {
    coeffs: [Complex<f64>; 8],
}

impl CollectiveCoeffs {
    pub fn new(coeffs: [Complex<f64>; 8]) -> Result<Self> {
        let c = Self { coeffs };
        c.validate()?;
        Ok(c)
    }

    /// Builds coefficients without checking normalization.
    pub fn unchecked(coeffs: [Complex<f64>; 8]) -> Self {
        Self { coeffs }
    }

    /// The undisturbed channel: `α1 = δ2 = 1`.
    pub fn identity() -> Self {
        let mut coeffs = [Complex::new(0.0, 0.0); 8];
        coeffs[0] = Complex::new(1.0, 0.0);
        coeffs[4] = Complex::new(1.0, 0.0);
        Self { coeffs }
    }

    pub fn as_array(&self) -> &[Complex<f64>; 8] {
        &self.coeffs
    }

    pub fn alpha1(&self) -> Complex<f64> {
        self.coeffs[0]
    }

    pub fn delta2(&self) -> Complex<f64> {
        self.coeffs[4]
    }

    fn branch_norms(&self) -> (f64, f64) {
        let norm = |s: &[Complex<f64>]| s.iter().map(|c| c.norm_sqr()).sum::<f64>();
        (norm(&self.coeffs[..4]), norm(&self.coeffs[4..]))
    }

    /// Each branch must have unit norm.
    pub fn validate(&self) -> Result<()> {
        if self.coeffs.iter().any(|c| !c.re.is_finite() || !c.im.is_finite()) {
            return Err(invalid("collective coefficients must be finite"));
        }
        let (b0, b1) = self.branch_norms();
        if (b0 - 1.0).abs() > COEFF_TOLERANCE {
            return Err(invalid(format!("branch normalization |α1|²+|β1|²+|γ1|²+|δ1|² = 1 violated (got {b0})")));
        }
        if (b1 - 1.0).abs() > COEFF_TOLERANCE {
            return Err(invalid(format!("branch normalization |δ2|²+|γ2|²+|β2|²+|α2|² = 1 violated (got {b1})")));
        }
        Ok(())
    }

    pub fn is_symmetric(&self) -> bool {
        (self.alpha1().norm() - self.delta2().norm()).abs() <= COEFF_TOLERANCE
    }

    /// Output terms for an undisturbed user ket in Trent's branch `t`:
    /// `(user ket, coefficient, probe index)`.
    fn branch(&self, t: bool) -> [(usize, Complex<f64>, usize); 4] {
        let c = &self.coeffs;
        // α1 and δ2 share the probe state |000>; the rest are orthonormal
        if t {
            [(0b11, c[4], 0b000), (0b10, c[5], 0b101), (0b01, c[6], 0b110), (0b00, c[7], 0b111)]
        } else {
            [(0b00, c[0], 0b000), (0b01, c[1], 0b001), (0b10, c[2], 0b010), (0b11, c[3], 0b011)]
        }
    }
}

impl Serialize for CollectiveCoeffs {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        let pairs: Vec<[f64; 2]> = self.coeffs.iter().map(|c| [c.re, c.im]).collect();
        pairs.serialize(s)
    }
}

impl<'de> Deserialize<'de> for CollectiveCoeffs {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let pairs = Vec::<[f64; 2]>::deserialize(d)?;
        let arr: [[f64; 2]; 8] = pairs.try_into().map_err(|v: Vec<[f64; 2]>| {
            serde::de::Error::custom(format!("collective attack needs exactly 8 [re, im] pairs, got {}", v.len()))
        })?;
        Ok(Self::unchecked(arr.map(|[re, im]| Complex::new(re, im))))
    }
}

/// Adversary on the quantum channel from Trent to the users.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum AttackModel {
    #[default]
    None,
    /// Eve keeps the user-bound qubits and forwards qubits of her own GHZ state.
    ImpersonateTrent,
    /// Eve measures every user-bound qubit in `basis` and forwards it.
    MeasureResend { basis: MeasBasis },
    /// Eve couples two users' qubits to a probe register.
    GeneralCollective { coeffs: CollectiveCoeffs },
}

impl AttackModel {
    /// Checks the model against a user count `r`.
    pub fn validate(&self, r: usize) -> Result<()> {
        if let AttackModel::GeneralCollective { coeffs } = self {
            if r != 2 {
                return Err(invalid(format!("the collective attack is defined for r = 2 users, got r = {r}")));
            }
            coeffs.validate()?;
        }
        Ok(())
    }
}

/// Addresses one qubit among the components a channel delivers.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct QubitRef {
    pub component: usize,
    pub qubit: usize,
}

/// The joint state after the channel, split into unentangled components.
#[derive(Debug, Clone)]
pub struct Delivered<T: Scalar> {
    pub components: Vec<StateVector<T>>,
    pub trent: QubitRef,
    pub users: Vec<QubitRef>,
}

impl<T: Scalar> Delivered<T> {
    /// Tensor of all components with the Trent and user qubit positions in it.
    fn joint(&self) -> Result<(StateVector<T>, Vec<usize>)> {
        let mut offsets = Vec::with_capacity(self.components.len());
        let mut acc: Option<StateVector<T>> = None;
        for comp in &self.components {
            offsets.push(acc.as_ref().map_or(0, |s| s.n_qubits()));
            acc = Some(match acc {
                None => comp.clone(),
                Some(s) => s.tensor(comp)?,
            });
        }
        let joint = acc.ok_or_else(|| invalid("no components delivered"))?;
        let at = |q: &QubitRef| offsets[q.component] + q.qubit;
        let mut qubits = vec![at(&self.trent)];
        qubits.extend(self.users.iter().map(at));
        Ok((joint, qubits))
    }
}

fn honest<T: Scalar>(state: StateVector<T>, r: usize) -> Delivered<T> {
    Delivered {
        components: vec![state],
        trent: QubitRef { component: 0, qubit: 0 },
        users: (1..=r).map(|q| QubitRef { component: 0, qubit: q }).collect(),
    }
}

/// Sends the user qubits `1..=r` of Trent's freshly prepared `(r+1)`-qubit
/// GHZ state through the channel. Trent's qubit 0 never leaves his lab.
pub fn channel_transform<T: Scalar>(
    model: &AttackModel,
    ghz: StateVector<T>,
    rng: &mut SimRng,
) -> Result<Delivered<T>> {
    let r = ghz.n_qubits() - 1;
    model.validate(r)?;
    match model {
        AttackModel::None => Ok(honest(ghz, r)),
        AttackModel::ImpersonateTrent => {
            let eve = StateVector::prepare_ghz(r + 1)?;
            Ok(Delivered {
                components: vec![ghz, eve],
                trent: QubitRef { component: 0, qubit: 0 },
                users: (1..=r).map(|q| QubitRef { component: 1, qubit: q }).collect(),
            })
        }
        AttackModel::MeasureResend { basis } => {
            let mut state = ghz;
            for q in 1..=r {
                state = state.measure_qubit(q, *basis, rng)?.1;
            }
            Ok(honest(state, r))
        }
        AttackModel::GeneralCollective { coeffs } => {
            let state = collective_isometry(coeffs, &ghz)?;
            Ok(honest(state, r))
        }
    }
}

/// Applies the collective attack to a three-qubit `(T, A1, A2)` state,
/// appending a three-qubit probe that starts in `|000>`.
///
/// Kets `|00>` and `|11>` of the users map according to the two coefficient
/// branches; `|01>` and `|10>` pass unchanged with the probe moved to `|100>`,
/// which is orthogonal to every other probe output.
pub fn collective_isometry<T: Scalar>(coeffs: &CollectiveCoeffs, input: &StateVector<T>) -> Result<StateVector<T>> {
    if input.n_qubits() != 3 {
        return Err(invalid("the collective attack acts on a (T, A1, A2) register"));
    }
    coeffs.validate()?;
    let zero = Complex::new(T::zero(), T::zero());
    let mut out = vec![zero; 1 << 6];
    for (i, &a) in input.amplitudes().iter().enumerate() {
        let t = i >> 2;
        let users = i & 0b11;
        let terms: Vec<(usize, Complex<f64>, usize)> = match users {
            0b00 => coeffs.branch(false).to_vec(),
            0b11 => coeffs.branch(true).to_vec(),
            other => vec![(other, Complex::new(1.0, 0.0), 0b100)],
        };
        for (ket, c, probe) in terms {
            let c = Complex::new(T::from_f64_lossy(c.re), T::from_f64_lossy(c.im));
            let idx = (t << 5) | (ket << 3) | probe;
            out[idx] = out[idx] + a * c;
        }
    }
    StateVector::from_amplitudes(out)
}

/// `ε = 1 - |α1|^2` for a symmetric attack (`|α1| = |δ2|`).
pub fn collective_error_rate(coeffs: &CollectiveCoeffs) -> Result<f64> {
    coeffs.validate()?;
    if !coeffs.is_symmetric() {
        return Err(invalid("|α1| != |δ2|; use collective_error_rates for asymmetric attacks"));
    }
    Ok(1.0 - coeffs.alpha1().norm_sqr())
}

/// `(1 - |α1|^2, 1 - |δ2|^2)`: the Z-check error rate conditioned on
/// Trent reading 0 and 1 respectively.
pub fn collective_error_rates(coeffs: &CollectiveCoeffs) -> Result<(f64, f64)> {
    coeffs.validate()?;
    Ok((1.0 - coeffs.alpha1().norm_sqr(), 1.0 - coeffs.delta2().norm_sqr()))
}

/// Exact probability that the correlation rule is violated at one sampled
/// position checked in `basis`, for an already-delivered state.
pub fn violation_probability<T: Scalar>(delivered: &Delivered<T>, basis: MeasBasis) -> Result<f64> {
    let (joint, qubits) = delivered.joint()?;
    let rotated = joint.rotate_to_basis(&qubits, basis)?;
    let dist = rotated.readout_distribution(&qubits)?;
    let width = qubits.len();
    Ok(dist
        .iter()
        .enumerate()
        .filter(|(key, _)| {
            let bits: Vec<bool> = (0..width).map(|b| key & (1 << (width - 1 - b)) != 0).collect();
            violates_correlation(basis, &bits)
        })
        .map(|(_, p)| p.to_f64_lossy())
        .sum())
}

/// Every delivered state the channel can produce for one GHZ state, with
/// its probability. Only `MeasureResend` branches.
pub fn delivery_branches<T: Scalar>(model: &AttackModel, r: usize) -> Result<Vec<(f64, Delivered<T>)>> {
    model.validate(r)?;
    let ghz = StateVector::<T>::prepare_ghz(r + 1)?;
    match model {
        AttackModel::MeasureResend { basis } => {
            let mut branches = vec![(1.0, ghz)];
            for q in 1..=r {
                let mut next = Vec::with_capacity(branches.len() * 2);
                for (w, state) in branches {
                    for outcome in [false, true] {
                        let (p, post) = state.project_qubit(q, *basis, outcome)?;
                        if let Some(post) = post {
                            next.push((w * p.to_f64_lossy(), post));
                        }
                    }
                }
                branches = next;
            }
            Ok(branches.into_iter().map(|(w, s)| (w, honest(s, r))).collect())
        }
        _ => {
            // deterministic channels ignore the generator
            let mut unused = SimRng::new(0);
            Ok(vec![(1.0, channel_transform(model, ghz, &mut unused)?)])
        }
    }
}

/// Exact per-sample probability that the S2 check flags a position, when
/// the basis is Z with probability `basis_mix` and X otherwise.
pub fn detection_probability<T: Scalar>(model: &AttackModel, r: usize, basis_mix: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&basis_mix) {
        return Err(invalid(format!("basis mix {basis_mix} outside [0, 1]")));
    }
    // without continuous parameters every branch weight and readout
    // probability is a multiple of 2^-(2r+2), so the exact value is recoverable
    if !matches!(model, AttackModel::GeneralCollective { .. }) {
        if let Some(p) = exact_detection::<T>(model, r, basis_mix)? {
            return Ok(p);
        }
    }
    let mut total = 0.0;
    for (w, delivered) in delivery_branches::<T>(model, r)? {
        let z = violation_probability(&delivered, MeasBasis::Z)?;
        let x = violation_probability(&delivered, MeasBasis::X)?;
        total += w * (basis_mix * z + (1.0 - basis_mix) * x);
    }
    Ok(total)
}

fn exact_detection<T: Scalar>(model: &AttackModel, r: usize, basis_mix: f64) -> Result<Option<f64>> {
    let (Some(mz), Some(mx)) = (dyadic(basis_mix), dyadic(1.0 - basis_mix)) else {
        return Ok(None);
    };
    let mut total = 0.0;
    for (w, delivered) in delivery_branches::<T>(model, r)? {
        let terms = (
            dyadic(w),
            dyadic(violation_probability(&delivered, MeasBasis::Z)?),
            dyadic(violation_probability(&delivered, MeasBasis::X)?),
        );
        let (Some(w), Some(z), Some(x)) = terms else {
            return Ok(None);
        };
        total += w * (mz * z + mx * x);
    }
    Ok(Some(total))
}

/// `value` rounded to the nearest multiple of 2^-32, if it is within 1e-12 of one.
fn dyadic(value: f64) -> Option<f64> {
    let grid = 4_294_967_296.0;
    let snapped = (value * grid).round() / grid;
    ((snapped - value).abs() < 1e-12).then_some(snapped)
}

/// Probability that `k` independent sampled positions all pass.
pub fn pass_probability<T: Scalar>(model: &AttackModel, r: usize, basis_mix: f64, k: u32) -> Result<f64> {
    let p = detection_probability::<T>(model, r, basis_mix)?;
    Ok((1.0 - p).powi(k as i32))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex<f64> {
        Complex::new(re, im)
    }

    fn close(a: f64, b: f64) -> bool {
        (a - b).abs() < 1e-9
    }

    #[test]
    fn no_attack_leaves_state() {
        let ghz = StateVector::<f64>::prepare_ghz(3).unwrap();
        let d = channel_transform(&AttackModel::None, ghz.clone(), &mut SimRng::new(0)).unwrap();
        assert_eq!(d.components, vec![ghz]);
        assert_eq!(d.users.len(), 2);
    }

    #[test]
    fn impersonation_z_outcomes() {
        // users agree with each other but not with Trent
        let ghz = StateVector::<f64>::prepare_ghz(3).unwrap();
        let d = channel_transform(&AttackModel::ImpersonateTrent, ghz, &mut SimRng::new(0)).unwrap();
        let (joint, qubits) = d.joint().unwrap();
        let dist = joint.readout_distribution(&qubits).unwrap();
        for (key, p) in dist.iter().enumerate() {
            let users_equal = (key & 0b11) == 0b00 || (key & 0b11) == 0b11;
            let want = if users_equal { 0.25 } else { 0.0 };
            assert!(close(*p, want), "key {key:03b}");
        }
    }

    #[test]
    fn identity_collective_is_ghz_times_probe() {
        let ghz = StateVector::<f64>::prepare_ghz(3).unwrap();
        let model = AttackModel::GeneralCollective { coeffs: CollectiveCoeffs::identity() };
        let d = channel_transform(&model, ghz.clone(), &mut SimRng::new(0)).unwrap();
        let expected = ghz.tensor(&StateVector::basis(3, 0).unwrap()).unwrap();
        assert!(d.components[0].approx_eq_up_to_phase(&expected));
        assert!(close(detection_probability::<f64>(&model, 2, 0.5).unwrap(), 0.0));
    }

    #[test]
    fn collective_requires_two_users_and_normalization() {
        let model = AttackModel::GeneralCollective { coeffs: CollectiveCoeffs::identity() };
        assert!(model.validate(3).is_err());
        let mut bad = [c(0.0, 0.0); 8];
        bad[0] = c(1.0, 0.0);
        bad[4] = c(0.5, 0.0);
        let err = CollectiveCoeffs::new(bad).unwrap_err();
        assert!(err.to_string().contains("δ2"), "{err}");
    }

    #[test]
    fn error_rate_formula() {
        assert!(close(collective_error_rate(&CollectiveCoeffs::identity()).unwrap(), 0.0));
        let h = std::f64::consts::FRAC_1_SQRT_2;
        let coeffs = CollectiveCoeffs::new([
            c(h, 0.0),
            c(0.5, 0.0),
            c(0.0, 0.5),
            c(0.0, 0.0),
            c(0.0, h),
            c(0.0, 0.0),
            c(0.5, 0.0),
            c(-0.5, 0.0),
        ])
        .unwrap();
        assert!(close(collective_error_rate(&coeffs).unwrap(), 0.5));
        // the exact Z-check violation probability equals ε
        let model = AttackModel::GeneralCollective { coeffs };
        assert!(close(detection_probability::<f64>(&model, 2, 1.0).unwrap(), 0.5));
    }

    #[test]
    fn asymmetric_rates() {
        let mut arr = [c(0.0, 0.0); 8];
        arr[0] = c(1.0, 0.0);
        arr[4] = c(0.6, 0.0);
        arr[5] = c(0.8, 0.0);
        let coeffs = CollectiveCoeffs::new(arr).unwrap();
        assert!(collective_error_rate(&coeffs).is_err());
        let (e0, e1) = collective_error_rates(&coeffs).unwrap();
        assert!(close(e0, 0.0) && close(e1, 0.64));
    }

    #[test]
    fn detection_values() {
        let none = detection_probability::<f64>(&AttackModel::None, 2, 0.5).unwrap();
        assert!(close(none, 0.0));
        for mix in [0.0, 0.3, 1.0] {
            for r in 2..=4 {
                let p = detection_probability::<f64>(&AttackModel::ImpersonateTrent, r, mix).unwrap();
                assert!(close(p, 0.5), "r={r} mix={mix} p={p}");
            }
        }
        let mr = AttackModel::MeasureResend { basis: MeasBasis::Z };
        assert!(close(detection_probability::<f64>(&mr, 2, 1.0).unwrap(), 0.0));
        assert!(close(detection_probability::<f64>(&mr, 2, 0.0).unwrap(), 0.5));
        assert!(close(detection_probability::<f64>(&mr, 2, 0.5).unwrap(), 0.25));
    }

    #[test]
    fn dyadic_detection_values_are_exact() {
        for r in 2..=5 {
            for mix in [0.0, 0.25, 0.5, 1.0] {
                assert_eq!(detection_probability::<f64>(&AttackModel::ImpersonateTrent, r, mix).unwrap(), 0.5);
            }
        }
        let mr = AttackModel::MeasureResend { basis: MeasBasis::X };
        // X readouts stay parity-correct, Z readouts of four qubits agree with probability 1/8
        assert_eq!(detection_probability::<f64>(&mr, 3, 0.5).unwrap(), 0.4375);
        // a non-dyadic mix falls back to the floating-point sum
        assert!(close(detection_probability::<f64>(&AttackModel::ImpersonateTrent, 2, 0.3).unwrap(), 0.5));
    }

    #[test]
    fn pass_probability_is_power() {
        let p = pass_probability::<f64>(&AttackModel::ImpersonateTrent, 2, 0.5, 4).unwrap();
        assert!(close(p, 1.0 / 16.0));
    }

    #[test]
    fn coeffs_json_shape() {
        let json =
            serde_json::to_string(&AttackModel::GeneralCollective { coeffs: CollectiveCoeffs::identity() }).unwrap();
        assert!(json.starts_with(r#"{"kind":"general_collective","coeffs":[[1.0,0.0],"#));
        let back: AttackModel = serde_json::from_str(&json).unwrap();
        assert_eq!(back, AttackModel::GeneralCollective { coeffs: CollectiveCoeffs::identity() });
        let short = r#"{"kind":"general_collective","coeffs":[[1.0,0.0]]}"#;
        let err = serde_json::from_str::<AttackModel>(short).unwrap_err();
        assert!(err.to_string().contains("exactly 8"));
    }
}
