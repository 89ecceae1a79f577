//! Standard-form two-party protocols: no measurement until all communication
//! is done, so the honest joint state stays pure throughout.
//!
//! Subsystem positions are fixed when a spec is built. A transfer only
//! relabels ownership.

mod commit_reveal;
mod json;

use std::fmt;

use serde::{Serialize, Serializer};

use crate::error::{Error, Result};
use crate::qmatrix::{
    apply_local, sample_index, validate_projectors, IndexSplit, Operator, Party, StateVector,
    SubsystemLayout, TOL,
};
use crate::sim::{run_trials, OutcomeCounts};

pub use commit_reveal::{commit_reveal_spec, section3_spec, section3_states, CommitRevealShape};
pub use json::{parse_protocol_json, protocol_to_json};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Outcome {
    Zero,
    One,
    Abort,
}

impl Outcome {
    pub const ALL: [Outcome; 3] = [Outcome::Zero, Outcome::One, Outcome::Abort];

    pub fn index(self) -> usize {
        match self {
            Outcome::Zero => 0,
            Outcome::One => 1,
            Outcome::Abort => 2,
        }
    }

    pub fn from_index(i: usize) -> Outcome {
        Outcome::ALL[i]
    }

    /// The coin value for `0`/`1`.
    pub fn bit(bit: u8) -> Outcome {
        if bit == 0 {
            Outcome::Zero
        } else {
            Outcome::One
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            Outcome::Zero => "0",
            Outcome::One => "1",
            Outcome::Abort => "abort",
        }
    }
}

impl fmt::Display for Outcome {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

impl Serialize for Outcome {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(self.label())
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize)]
pub struct OutcomeDistribution {
    #[serde(rename = "0")]
    pub zero: f64,
    #[serde(rename = "1")]
    pub one: f64,
    pub abort: f64,
}

impl OutcomeDistribution {
    pub fn from_array(p: [f64; 3]) -> Self {
        OutcomeDistribution {
            zero: p[0],
            one: p[1],
            abort: p[2],
        }
    }

    pub fn get(&self, outcome: Outcome) -> f64 {
        match outcome {
            Outcome::Zero => self.zero,
            Outcome::One => self.one,
            Outcome::Abort => self.abort,
        }
    }

    pub fn as_array(&self) -> [f64; 3] {
        [self.zero, self.one, self.abort]
    }

    pub fn total(&self) -> f64 {
        self.zero + self.one + self.abort
    }
}

/// An operator acting on a listed set of subsystems, in the order listed.
#[derive(Clone, Debug, PartialEq)]
pub struct LocalOperator {
    pub targets: Vec<usize>,
    pub matrix: Operator,
}

impl LocalOperator {
    pub fn new(targets: Vec<usize>, matrix: Operator) -> Self {
        LocalOperator { targets, matrix }
    }

    pub fn apply(&self, state: &StateVector, dims: &[usize]) -> Result<StateVector> {
        apply_local(state, &self.matrix, &self.targets, dims)
    }
}

#[derive(Clone, Debug)]
pub struct Round {
    pub sender: Party,
    /// Subsystems the unitary acts on, ascending; all owned by `sender`.
    pub targets: Vec<usize>,
    pub unitary: Operator,
    /// Subsystems handed to the other party after the unitary.
    pub transfer: Vec<usize>,
}

/// A party's final three-outcome projective measurement, on the subsystems
/// it owns once communication is over (ascending).
#[derive(Clone, Debug)]
pub struct PartyMeasurement {
    pub targets: Vec<usize>,
    /// Indexed by [`Outcome::index`].
    pub projectors: [Operator; 3],
}

impl PartyMeasurement {
    pub fn projector(&self, outcome: Outcome) -> &Operator {
        &self.projectors[outcome.index()]
    }
}

/// Initial product state, given either per party or as a full vector that
/// must factor across the initial Alice/Bob split.
#[derive(Clone, Debug)]
pub enum InitialState {
    Factors { alice: StateVector, bob: StateVector },
    Full(StateVector),
}

/// Everything needed to build a [`ProtocolSpec`]. Final measurement targets
/// are derived from ownership after the last round.
#[derive(Clone, Debug)]
pub struct ProtocolDraft {
    pub name: String,
    pub layout: SubsystemLayout,
    pub subsystem_names: Vec<String>,
    pub initial: InitialState,
    pub rounds: Vec<Round>,
    pub final_alice: [Operator; 3],
    pub final_bob: [Operator; 3],
    pub shape: Option<CommitRevealShape>,
}

/// A validated standard-form protocol.
#[derive(Clone, Debug)]
pub struct ProtocolSpec {
    name: String,
    layout: SubsystemLayout,
    subsystem_names: Vec<String>,
    initial_alice: StateVector,
    initial_bob: StateVector,
    rounds: Vec<Round>,
    final_alice: PartyMeasurement,
    final_bob: PartyMeasurement,
    shape: Option<CommitRevealShape>,
    final_state: StateVector,
}

fn factor_product(
    state: &StateVector,
    layout: &SubsystemLayout,
) -> Result<(StateVector, StateVector)> {
    layout.check_state(state)?;
    let split = IndexSplit::new(layout.dims(), &layout.owned_by(Party::Alice))?;
    let m = split.reshape(state);
    let svd = nalgebra::SVD::new(m, true, true);
    let sv = &svd.singular_values;
    let top = (0..sv.len()).max_by(|&a, &b| sv[a].total_cmp(&sv[b])).unwrap_or(0);
    let residual: f64 = (0..sv.len()).filter(|&i| i != top).map(|i| sv[i] * sv[i]).sum();
    if residual > TOL {
        return Err(Error::InvalidProtocol(format!(
            "initial state is not a product across Alice and Bob (residual {residual:e})"
        )));
    }
    let u = svd.u.as_ref().expect("U requested");
    let v_t = svd.v_t.as_ref().expect("V^dagger requested");
    let alice = StateVector::from_vector(u.column(top).into_owned());
    let bob = StateVector::from_vector(v_t.row(top).transpose().scale(sv[top]));
    Ok((alice, bob))
}

impl ProtocolSpec {
    pub fn new(draft: ProtocolDraft) -> Result<ProtocolSpec> {
        let ProtocolDraft {
            name,
            layout,
            mut subsystem_names,
            initial,
            rounds,
            final_alice,
            final_bob,
            shape,
        } = draft;
        if subsystem_names.is_empty() {
            subsystem_names = (0..layout.len()).map(|i| format!("s{i}")).collect();
        }
        if subsystem_names.len() != layout.len() {
            return Err(Error::InvalidProtocol("one name per subsystem required".into()));
        }
        let (initial_alice, initial_bob) = match initial {
            InitialState::Factors { alice, bob } => (alice, bob),
            InitialState::Full(full) => factor_product(&full, &layout)?,
        };
        for (party, factor) in [(Party::Alice, &initial_alice), (Party::Bob, &initial_bob)] {
            if factor.dim() != layout.party_dim(party) {
                return Err(Error::DimensionMismatch {
                    expected: layout.party_dim(party),
                    found: factor.dim(),
                });
            }
            if !factor.is_normalized(TOL) {
                return Err(Error::InvalidProtocol(format!(
                    "{party}'s initial factor is not normalized"
                )));
            }
        }

        let mut owners = layout.clone();
        for (r, round) in rounds.iter().enumerate() {
            let mut sorted = round.targets.clone();
            sorted.sort_unstable();
            sorted.dedup();
            if sorted != round.targets {
                return Err(Error::InvalidProtocol(format!(
                    "round {} targets must be ascending and distinct",
                    r + 1
                )));
            }
            for &t in round.targets.iter().chain(round.transfer.iter()) {
                if t >= layout.len() || owners.owners()[t] != round.sender {
                    return Err(Error::InvalidProtocol(format!(
                        "round {} touches subsystem {t} not held by {}",
                        r + 1,
                        round.sender
                    )));
                }
            }
            let expected = layout.dim_of(&round.targets);
            if round.unitary.dim() != expected {
                return Err(Error::DimensionMismatch {
                    expected,
                    found: round.unitary.dim(),
                });
            }
            if !round.unitary.is_unitary(TOL) {
                return Err(Error::InvalidProtocol(format!("round {} is not unitary", r + 1)));
            }
            for &t in &round.transfer {
                owners = owners.with_owner(t, round.sender.other());
            }
        }

        let measurement = |party: Party, projectors: [Operator; 3]| -> Result<PartyMeasurement> {
            let targets = owners.owned_by(party);
            validate_projectors(&projectors, layout.dim_of(&targets)).map_err(|e| {
                Error::InvalidProtocol(format!("{party}'s final measurement: {e}"))
            })?;
            Ok(PartyMeasurement {
                targets,
                projectors,
            })
        };
        let final_alice = measurement(Party::Alice, final_alice)?;
        let final_bob = measurement(Party::Bob, final_bob)?;

        let mut spec = ProtocolSpec {
            name,
            final_state: StateVector::zeros(1),
            layout,
            subsystem_names,
            initial_alice,
            initial_bob,
            rounds,
            final_alice,
            final_bob,
            shape,
        };
        spec.final_state = spec.state_after(spec.num_rounds())?;

        let joint = spec.joint_distribution(&spec.final_state)?;
        let disagreement: f64 = (0..3)
            .flat_map(|a| (0..3).map(move |b| (a, b)))
            .filter(|(a, b)| a != b)
            .map(|(a, b)| joint[a][b])
            .sum();
        if disagreement.sqrt() > TOL {
            return Err(Error::HonestDisagreement(disagreement));
        }
        if let Some(shape) = &spec.shape {
            shape.check(&spec)?;
        }
        Ok(spec)
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn num_rounds(&self) -> usize {
        self.rounds.len()
    }

    pub fn rounds(&self) -> &[Round] {
        &self.rounds
    }

    pub fn layout(&self) -> &SubsystemLayout {
        &self.layout
    }

    pub fn dims(&self) -> &[usize] {
        self.layout.dims()
    }

    pub fn subsystem_names(&self) -> &[String] {
        &self.subsystem_names
    }

    pub fn shape(&self) -> Option<&CommitRevealShape> {
        self.shape.as_ref()
    }

    /// Ownership once the first `i` rounds (including their transfers) are done.
    pub fn layout_after(&self, i: usize) -> SubsystemLayout {
        let mut out = self.layout.clone();
        for round in &self.rounds[..i.min(self.rounds.len())] {
            for &t in &round.transfer {
                out = out.with_owner(t, round.sender.other());
            }
        }
        out
    }

    pub fn initial_factor(&self, party: Party) -> &StateVector {
        match party {
            Party::Alice => &self.initial_alice,
            Party::Bob => &self.initial_bob,
        }
    }

    /// Full vector of the product of the two parties' initial factors.
    pub fn compose_initial(&self, alice: &StateVector, bob: &StateVector) -> Result<StateVector> {
        let split = IndexSplit::new(self.dims(), &self.layout.owned_by(Party::Alice))?;
        for (f, d) in [(alice, split.target_dim), (bob, split.rest_dim)] {
            if f.dim() != d {
                return Err(Error::DimensionMismatch {
                    expected: d,
                    found: f.dim(),
                });
            }
        }
        let m = alice.as_vector() * bob.as_vector().transpose();
        Ok(split.unreshape(&m))
    }

    pub fn initial_state(&self) -> StateVector {
        self.compose_initial(&self.initial_alice, &self.initial_bob)
            .expect("validated factors")
    }

    /// Apply round `r` (1-based).
    pub fn apply_round(&self, state: &StateVector, r: usize) -> Result<StateVector> {
        let round = &self.rounds[r - 1];
        apply_local(state, &round.unitary, &round.targets, self.dims())
    }

    pub fn apply_round_inverse(&self, state: &StateVector, r: usize) -> Result<StateVector> {
        let round = &self.rounds[r - 1];
        apply_local(state, &round.unitary.adjoint(), &round.targets, self.dims())
    }

    /// Honest joint state after `i` rounds.
    pub fn state_after(&self, i: usize) -> Result<StateVector> {
        (1..=i).try_fold(self.initial_state(), |s, r| self.apply_round(&s, r))
    }

    pub fn final_state(&self) -> &StateVector {
        &self.final_state
    }

    pub fn measurement(&self, party: Party) -> &PartyMeasurement {
        match party {
            Party::Alice => &self.final_alice,
            Party::Bob => &self.final_bob,
        }
    }

    /// `P^party_outcome |state>`
    pub fn project(&self, state: &StateVector, party: Party, outcome: Outcome) -> Result<StateVector> {
        let m = self.measurement(party);
        apply_local(state, m.projector(outcome), &m.targets, self.dims())
    }

    /// One party's outcome probabilities on a final state.
    pub fn party_distribution(&self, state: &StateVector, party: Party) -> Result<[f64; 3]> {
        let mut out = [0.0; 3];
        for o in Outcome::ALL {
            out[o.index()] = self.project(state, party, o)?.norm_sqr();
        }
        Ok(out)
    }

    /// `joint[a][b] = ||(P^A_a x P^B_b) state||^2`
    pub fn joint_distribution(&self, state: &StateVector) -> Result<[[f64; 3]; 3]> {
        let mut out = [[0.0; 3]; 3];
        for a in Outcome::ALL {
            let pa = self.project(state, Party::Alice, a)?;
            for b in Outcome::ALL {
                out[a.index()][b.index()] = self.project(&pa, Party::Bob, b)?.norm_sqr();
            }
        }
        Ok(out)
    }

    /// `(P^A_c x P^B_c) state`
    pub fn joint_project(&self, state: &StateVector, outcome: Outcome) -> Result<StateVector> {
        let pa = self.project(state, Party::Alice, outcome)?;
        self.project(&pa, Party::Bob, outcome)
    }
}

/// Exact honest outcome distribution. Any mass on which the parties disagree
/// (at most round-off for a validated spec) is counted as abort.
pub fn exact_outcome_distribution(spec: &ProtocolSpec) -> OutcomeDistribution {
    let joint = spec
        .joint_distribution(spec.final_state())
        .expect("validated spec");
    let total: f64 = joint.iter().flatten().sum();
    let zero = joint[0][0];
    let one = joint[1][1];
    OutcomeDistribution {
        zero,
        one,
        abort: (total - zero - one).max(0.0),
    }
}

fn sample_joint<R: rand::Rng + ?Sized>(joint: &[[f64; 3]; 3], rng: &mut R) -> Outcome {
    let flat: Vec<f64> = joint.iter().flatten().copied().collect();
    let k = sample_index(&flat, rng);
    let (a, b) = (k / 3, k % 3);
    if a == b {
        Outcome::from_index(a)
    } else {
        Outcome::Abort
    }
}

/// One honest execution: all rounds unitarily, then both parties measure.
pub fn honest_run(spec: &ProtocolSpec, rng_seed: u64) -> Result<Outcome> {
    let joint = spec.joint_distribution(spec.final_state())?;
    let mut rng = crate::sim::trial_rng(rng_seed, 0);
    Ok(sample_joint(&joint, &mut rng))
}

/// Tally of `trials` honest executions.
pub fn honest_frequencies(spec: &ProtocolSpec, trials: u64, seed: u64) -> Result<OutcomeCounts> {
    let joint = spec.joint_distribution(spec.final_state())?;
    Ok(run_trials(trials, seed, |rng| sample_joint(&joint, rng)))
}

/// Unnormalized outcome-0 and outcome-1 components of the honest state after
/// each round, back-propagated from the final projection.
#[derive(Clone, Debug)]
pub struct BranchStates {
    /// `rounds[i] = [psi^i_0, psi^i_1]` for `i = 0..=k`.
    pub rounds: Vec<[StateVector; 2]>,
}

impl BranchStates {
    pub fn at(&self, i: usize) -> &[StateVector; 2] {
        &self.rounds[i]
    }
}

pub fn branch_states(spec: &ProtocolSpec) -> Result<BranchStates> {
    let dist = exact_outcome_distribution(spec);
    if dist.abort > TOL {
        return Err(Error::HonestAbort(dist.abort));
    }
    if (dist.zero - 0.5).abs() > TOL {
        return Err(Error::Unfair(dist.zero));
    }
    let k = spec.num_rounds();
    let mut rounds = vec![[StateVector::zeros(1), StateVector::zeros(1)]; k + 1];
    rounds[k] = [
        spec.joint_project(spec.final_state(), Outcome::Zero)?,
        spec.joint_project(spec.final_state(), Outcome::One)?,
    ];
    for i in (0..k).rev() {
        let [b0, b1] = &rounds[i + 1];
        rounds[i] = [
            spec.apply_round_inverse(b0, i + 1)?,
            spec.apply_round_inverse(b1, i + 1)?,
        ];
    }
    Ok(BranchStates { rounds })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::qmatrix::{gates, DensityMatrix};
    use crate::qdist::trace_distance;

    /// Alice holds one qubit in |0>, Bob one qubit in |0>; no rounds; both
    /// read their own qubit.
    fn fixed_zero_spec(zero_everything: bool) -> ProtocolSpec {
        let layout = SubsystemLayout::new(vec![2, 2], vec![Party::Alice, Party::Bob]).unwrap();
        let read = if zero_everything {
            [Operator::identity(2), Operator::zeros(2), Operator::zeros(2)]
        } else {
            [Operator::diag(&[1.0, 0.0]), Operator::diag(&[0.0, 1.0]), Operator::zeros(2)]
        };
        ProtocolSpec::new(ProtocolDraft {
            name: "fixed".into(),
            layout,
            subsystem_names: vec![],
            initial: InitialState::Factors {
                alice: StateVector::basis(2, 0),
                bob: StateVector::basis(2, 0),
            },
            rounds: vec![Round {
                sender: Party::Alice,
                targets: vec![0],
                unitary: Operator::identity(2),
                transfer: vec![],
            }],
            final_alice: read.clone(),
            final_bob: read,
            shape: None,
        })
        .unwrap()
    }

    #[test]
    fn section3_is_fair() {
        let d = exact_outcome_distribution(&section3_spec());
        assert!((d.zero - 0.5).abs() < 1e-12);
        assert!((d.one - 0.5).abs() < 1e-12);
        assert!(d.abort.abs() < 1e-12);
    }

    #[test]
    fn fixed_zero_measures_zero() {
        let d = exact_outcome_distribution(&fixed_zero_spec(false));
        assert!((d.zero - 1.0).abs() < 1e-12);
        let spec = fixed_zero_spec(true);
        for seed in 0..50 {
            assert_eq!(honest_run(&spec, seed).unwrap(), Outcome::Zero);
        }
    }

    #[test]
    fn section3_round1_message_is_rho0_for_b0() {
        let spec = section3_spec();
        let shape = spec.shape().unwrap();
        let rho = shape.message_states(&spec).unwrap();
        let expected = DensityMatrix::diag(&[0.5, 0.5, 0.0]).unwrap();
        assert!(rho[0].op().max_abs_diff(expected.op()) < 1e-12);
        assert!((trace_distance(&rho[0], &rho[1]).unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn section3_conditioned_run_is_xor() {
        // Condition on b=0, x=1, b'=1 by projecting the registers.
        let spec = section3_spec();
        let shape = spec.shape().unwrap().clone();
        let mut state = spec.final_state().clone();
        for (sub, value) in [(shape.bit, 0usize), (shape.index, 1), (shape.coin, 1)] {
            let d = spec.dims()[sub];
            let p = Operator::outer(&StateVector::basis(d, value));
            state = apply_local(&state, &p, &[sub], spec.dims()).unwrap();
        }
        let state = state.normalized().unwrap();
        let bob = spec.party_distribution(&state, Party::Bob).unwrap();
        let alice = spec.party_distribution(&state, Party::Alice).unwrap();
        assert!((bob[1] - 1.0).abs() < 1e-12 && bob[2].abs() < 1e-12);
        assert!((alice[1] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn honest_runs_are_deterministic() {
        let spec = section3_spec();
        let a: Vec<Outcome> = (0..200).map(|s| honest_run(&spec, s).unwrap()).collect();
        let b: Vec<Outcome> = (0..200).map(|s| honest_run(&spec, s).unwrap()).collect();
        assert_eq!(a, b);
        assert!(a.contains(&Outcome::Zero) && a.contains(&Outcome::One));
    }

    #[test]
    fn branch_decomposition_properties() {
        let spec = section3_spec();
        let br = branch_states(&spec).unwrap();
        let k = spec.num_rounds();
        let [f0, f1] = br.at(k);
        assert!((f0.norm_sqr() - 0.5).abs() < 1e-12);
        assert!((f1.norm_sqr() - 0.5).abs() < 1e-12);
        assert!(f0.inner(f1).norm() < 1e-12);
        for i in 0..=k {
            let [b0, b1] = br.at(i);
            let sum = b0 + b1;
            assert!(sum.max_abs_diff(&spec.state_after(i).unwrap()) < 1e-12);
            // Round trip forward to the end.
            let mut fwd = b0.clone();
            for r in i + 1..=k {
                fwd = spec.apply_round(&fwd, r).unwrap();
            }
            assert!(fwd.max_abs_diff(f0) < 1e-12);
        }
    }

    #[test]
    fn branch_states_rejects_unfair() {
        assert!(matches!(branch_states(&fixed_zero_spec(false)), Err(Error::Unfair(_))));
    }

    #[test]
    fn norms_preserved_each_round() {
        let spec = section3_spec();
        for i in 0..=spec.num_rounds() {
            assert!((spec.state_after(i).unwrap().norm() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn rejects_round_touching_other_party() {
        let layout = SubsystemLayout::new(vec![2, 2], vec![Party::Alice, Party::Bob]).unwrap();
        let read = [Operator::identity(2), Operator::zeros(2), Operator::zeros(2)];
        let err = ProtocolSpec::new(ProtocolDraft {
            name: "bad".into(),
            layout,
            subsystem_names: vec![],
            initial: InitialState::Factors {
                alice: StateVector::basis(2, 0),
                bob: StateVector::basis(2, 0),
            },
            rounds: vec![Round {
                sender: Party::Alice,
                targets: vec![1],
                unitary: gates::x(),
                transfer: vec![],
            }],
            final_alice: read.clone(),
            final_bob: read,
            shape: None,
        });
        assert!(matches!(err, Err(Error::InvalidProtocol(_))));
    }

    #[test]
    fn rejects_entangled_initial_state() {
        let layout = SubsystemLayout::new(vec![2, 2], vec![Party::Alice, Party::Bob]).unwrap();
        let s = std::f64::consts::FRAC_1_SQRT_2;
        let read = [Operator::identity(2), Operator::zeros(2), Operator::zeros(2)];
        let err = ProtocolSpec::new(ProtocolDraft {
            name: "epr".into(),
            layout,
            subsystem_names: vec![],
            initial: InitialState::Full(StateVector::from_real(&[s, 0.0, 0.0, s])),
            rounds: vec![],
            final_alice: read.clone(),
            final_bob: read,
            shape: None,
        });
        assert!(matches!(err, Err(Error::InvalidProtocol(_))));
    }

    #[test]
    fn rejects_disagreeing_parties() {
        // Alice reads her |+> qubit, Bob always says 0.
        let layout = SubsystemLayout::new(vec![2, 2], vec![Party::Alice, Party::Bob]).unwrap();
        let err = ProtocolSpec::new(ProtocolDraft {
            name: "disagree".into(),
            layout,
            subsystem_names: vec![],
            initial: InitialState::Factors {
                alice: gates::plus(),
                bob: StateVector::basis(2, 0),
            },
            rounds: vec![],
            final_alice: [Operator::diag(&[1.0, 0.0]), Operator::diag(&[0.0, 1.0]), Operator::zeros(2)],
            final_bob: [Operator::identity(2), Operator::zeros(2), Operator::zeros(2)],
            shape: None,
        });
        assert!(matches!(err, Err(Error::HonestDisagreement(_))));
    }
}
