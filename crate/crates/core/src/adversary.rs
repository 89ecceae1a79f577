//! Cheating strategies and their execution against an honest counterpart.
//!
//! A strategy is a list of interventions by the cheater between rounds: a
//! replacement of its starting state, or a projective measurement followed by
//! an outcome-dependent local correction. Between interventions the cheater
//! follows the protocol. The honest party's final measurement decides the
//! outcome.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::protocol::{LocalOperator, Outcome, ProtocolSpec};
use crate::qdist::{fidelity, helstrom_measurement, trace_distance, twirl, uhlmann_unitary};
use crate::qmatrix::{
    apply_local, gates, sample_index, validate_projectors, DensityMatrix, IndexSplit, Operator,
    Party, StateVector, SubsystemLayout, TOL,
};
use crate::sim::{binomial_sigma, run_trials};

#[derive(Clone, Debug)]
pub enum Action {
    /// Start from `state` on the cheater's initial subsystems (ascending)
    /// instead of the honest factor. Only valid before round 1.
    SubstituteStart { state: StateVector },
    /// Measure `measure_on` with `projectors`; on outcome `j` apply
    /// `corrections[j]` if present.
    MeasureAndCorrect {
        measure_on: Vec<usize>,
        projectors: Vec<Operator>,
        corrections: Vec<Option<LocalOperator>>,
    },
}

#[derive(Clone, Debug)]
pub struct Intervention {
    /// Number of completed rounds (including their transfers) when the
    /// cheater acts; 0 is before the first round.
    pub after_round: usize,
    pub action: Action,
}

#[derive(Clone, Debug)]
pub struct CheatStrategy {
    pub cheater: Party,
    pub target: Outcome,
    pub label: String,
    pub interventions: Vec<Intervention>,
}

impl CheatStrategy {
    pub fn honest(cheater: Party, target: Outcome) -> Self {
        CheatStrategy {
            cheater,
            target,
            label: "honest".into(),
            interventions: vec![],
        }
    }
}

/// How the analytic value relates to the attack's true success probability.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum BoundKind {
    /// Success equals the analytic value.
    Exact,
    /// Success is at least the analytic value.
    Floor,
    /// No analytic value is claimed.
    None,
}

#[derive(Clone, Debug, Serialize)]
pub struct AttackReport {
    pub cheater: Party,
    pub mode: String,
    pub target: Outcome,
    pub analytic: Option<f64>,
    pub bound_kind: BoundKind,
    /// Success probability computed from the execution tree.
    pub exact: f64,
    pub exact_abort: f64,
    pub empirical: f64,
    pub abort: f64,
    pub trials: u64,
    pub seed: u64,
}

impl AttackReport {
    pub fn sigma(&self) -> f64 {
        binomial_sigma(self.exact, self.trials)
    }
}

/// A strategy plus what the construction guarantees about it.
#[derive(Clone, Debug)]
pub struct PlannedAttack {
    pub strategy: CheatStrategy,
    pub analytic: Option<f64>,
    pub bound_kind: BoundKind,
}

enum Node {
    Branch { probs: Vec<f64>, children: Vec<Node> },
    /// Honest party's outcome distribution.
    Leaf([f64; 3]),
}

impl Node {
    fn expectation(&self, outcome: Outcome) -> f64 {
        match self {
            Node::Leaf(p) => p[outcome.index()],
            Node::Branch { probs, children } => probs
                .iter()
                .zip(children)
                .map(|(p, c)| p * c.expectation(outcome))
                .sum(),
        }
    }

    fn sample<R: rand::Rng + ?Sized>(&self, rng: &mut R) -> Outcome {
        match self {
            Node::Leaf(p) => Outcome::from_index(sample_index(p, rng)),
            Node::Branch { probs, children } => children[sample_index(probs, rng)].sample(rng),
        }
    }
}

fn check_owned(layout: &SubsystemLayout, party: Party, subs: &[usize], round: usize) -> Result<()> {
    for &s in subs {
        if s >= layout.len() || layout.owners()[s] != party {
            return Err(Error::NotOwned {
                party,
                subsystem: s,
                round,
            });
        }
    }
    Ok(())
}

fn validate(spec: &ProtocolSpec, strategy: &CheatStrategy) -> Result<()> {
    if strategy.target == Outcome::Abort {
        return Err(Error::InvalidStrategy("target must be 0 or 1".into()));
    }
    let cheater = strategy.cheater;
    let mut last = 0;
    let mut substitutions = 0;
    for iv in &strategy.interventions {
        if iv.after_round < last {
            return Err(Error::InvalidStrategy("interventions must be in round order".into()));
        }
        last = iv.after_round;
        if iv.after_round > spec.num_rounds() {
            return Err(Error::InvalidStrategy(format!(
                "intervention after round {} of {}",
                iv.after_round,
                spec.num_rounds()
            )));
        }
        let layout = spec.layout_after(iv.after_round);
        match &iv.action {
            Action::SubstituteStart { state } => {
                substitutions += 1;
                if iv.after_round != 0 || substitutions > 1 {
                    return Err(Error::InvalidStrategy(
                        "a start substitution happens once, before round 1".into(),
                    ));
                }
                let expected = spec.layout().party_dim(cheater);
                if state.dim() != expected {
                    return Err(Error::DimensionMismatch {
                        expected,
                        found: state.dim(),
                    });
                }
                if !state.is_normalized(TOL) {
                    return Err(Error::InvalidStrategy("substituted state is not normalized".into()));
                }
            }
            Action::MeasureAndCorrect {
                measure_on,
                projectors,
                corrections,
            } => {
                check_owned(&layout, cheater, measure_on, iv.after_round)?;
                validate_projectors(projectors, layout.dim_of(measure_on))?;
                if corrections.len() != projectors.len() {
                    return Err(Error::InvalidStrategy(
                        "one correction slot per measurement outcome".into(),
                    ));
                }
                for fix in corrections.iter().flatten() {
                    check_owned(&layout, cheater, &fix.targets, iv.after_round)?;
                    let expected = layout.dim_of(&fix.targets);
                    if fix.matrix.dim() != expected {
                        return Err(Error::DimensionMismatch {
                            expected,
                            found: fix.matrix.dim(),
                        });
                    }
                    if !fix.matrix.is_unitary(TOL) {
                        return Err(Error::InvalidStrategy("correction is not unitary".into()));
                    }
                }
            }
        }
    }
    Ok(())
}

fn grow(
    spec: &ProtocolSpec,
    honest: Party,
    state: StateVector,
    done: usize,
    pending: &[Intervention],
) -> Result<Node> {
    if let Some((first, rest)) = pending.split_first() {
        if first.after_round == done {
            return match &first.action {
                Action::SubstituteStart { .. } => grow(spec, honest, state, done, rest),
                Action::MeasureAndCorrect {
                    measure_on,
                    projectors,
                    corrections,
                } => {
                    let mut probs = Vec::with_capacity(projectors.len());
                    let mut children = Vec::with_capacity(projectors.len());
                    for (p, fix) in projectors.iter().zip(corrections) {
                        let branch = apply_local(&state, p, measure_on, spec.dims())?;
                        let weight = branch.norm_sqr();
                        probs.push(weight);
                        if weight <= 1e-15 {
                            children.push(Node::Leaf([0.0; 3]));
                            continue;
                        }
                        let mut next = branch.normalized()?;
                        if let Some(fix) = fix {
                            next = fix.apply(&next, spec.dims())?;
                        }
                        children.push(grow(spec, honest, next, done, rest)?);
                    }
                    Ok(Node::Branch { probs, children })
                }
            };
        }
    }
    if done < spec.num_rounds() {
        let next = spec.apply_round(&state, done + 1)?;
        return grow(spec, honest, next, done + 1, pending);
    }
    let mut dist = spec.party_distribution(&state, honest)?;
    let total: f64 = dist.iter().sum();
    for p in &mut dist {
        *p /= total;
    }
    Ok(Node::Leaf(dist))
}

fn execution_tree(spec: &ProtocolSpec, strategy: &CheatStrategy) -> Result<Node> {
    validate(spec, strategy)?;
    let cheater = strategy.cheater;
    let substitute = strategy.interventions.iter().find_map(|iv| match &iv.action {
        Action::SubstituteStart { state } => Some(state),
        _ => None,
    });
    let start = match substitute {
        None => spec.initial_state(),
        Some(s) => match cheater {
            Party::Alice => spec.compose_initial(s, spec.initial_factor(Party::Bob))?,
            Party::Bob => spec.compose_initial(spec.initial_factor(Party::Alice), s)?,
        },
    };
    grow(spec, cheater.other(), start, 0, &strategy.interventions)
}

/// Exact probabilities of (target, abort) for the honest party under `strategy`.
pub fn exact_attack_success(spec: &ProtocolSpec, strategy: &CheatStrategy) -> Result<(f64, f64)> {
    let tree = execution_tree(spec, strategy)?;
    Ok((
        tree.expectation(strategy.target),
        tree.expectation(Outcome::Abort),
    ))
}

/// Run `trials` seeded executions of `strategy` against the honest party.
pub fn simulate_attack(
    spec: &ProtocolSpec,
    strategy: &CheatStrategy,
    trials: u64,
    seed: u64,
) -> Result<AttackReport> {
    run_planned(
        spec,
        &PlannedAttack {
            strategy: strategy.clone(),
            analytic: None,
            bound_kind: BoundKind::None,
        },
        trials,
        seed,
    )
}

pub fn run_planned(
    spec: &ProtocolSpec,
    plan: &PlannedAttack,
    trials: u64,
    seed: u64,
) -> Result<AttackReport> {
    let strategy = &plan.strategy;
    let tree = execution_tree(spec, strategy)?;
    let counts = run_trials(trials, seed, |rng| tree.sample(rng));
    Ok(AttackReport {
        cheater: strategy.cheater,
        mode: strategy.label.clone(),
        target: strategy.target,
        analytic: plan.analytic,
        bound_kind: plan.bound_kind,
        exact: tree.expectation(strategy.target),
        exact_abort: tree.expectation(Outcome::Abort),
        empirical: counts.frequency(strategy.target),
        abort: counts.frequency(Outcome::Abort),
        trials,
        seed,
    })
}

fn target_bit(target: Outcome) -> Result<usize> {
    match target {
        Outcome::Zero => Ok(0),
        Outcome::One => Ok(1),
        Outcome::Abort => Err(Error::InvalidStrategy("target must be 0 or 1".into())),
    }
}

fn shape_of(spec: &ProtocolSpec) -> Result<crate::protocol::CommitRevealShape> {
    spec.shape().cloned().ok_or_else(|| {
        Error::UnsupportedShape(format!(
            "{} is not a commit-reveal protocol",
            spec.name()
        ))
    })
}

/// Bob measures the committed message with the optimal discriminating
/// measurement for `(rho_0, rho_1)` and sets his coin to `guess xor target`.
pub fn bob_helstrom_strategy(spec: &ProtocolSpec, target: Outcome) -> Result<PlannedAttack> {
    let t = target_bit(target)?;
    let shape = shape_of(spec)?;
    let [r0, r1] = shape.message_states(spec)?;
    let m = helstrom_measurement(&r0, &r1)?;
    let analytic = 0.5 + trace_distance(&r0, &r1)? / 4.0;
    // The coin starts in |+>; H sends it to |0>, X H to |1>.
    let set_coin = |bit: usize| LocalOperator {
        targets: vec![shape.coin],
        matrix: if bit == 0 {
            gates::h()
        } else {
            &gates::x() * &gates::h()
        },
    };
    Ok(PlannedAttack {
        strategy: CheatStrategy {
            cheater: Party::Bob,
            target,
            label: "helstrom".into(),
            interventions: vec![Intervention {
                after_round: 1,
                action: Action::MeasureAndCorrect {
                    measure_on: vec![shape.message],
                    projectors: m.projectors().to_vec(),
                    corrections: vec![Some(set_coin(t)), Some(set_coin(1 - t))],
                },
            }],
        },
        analytic: Some(analytic),
        bound_kind: BoundKind::Exact,
    })
}

pub fn bob_helstrom_attack(
    spec: &ProtocolSpec,
    target: Outcome,
    trials: u64,
    seed: u64,
) -> Result<(CheatStrategy, AttackReport)> {
    let plan = bob_helstrom_strategy(spec, target)?;
    let report = run_planned(spec, &plan, trials, seed)?;
    Ok((plan.strategy, report))
}

/// The sign flips `diag(1, +-1, +-1)` that diagonalize a qutrit state by twirling.
pub fn sign_flips() -> [Operator; 4] {
    [
        Operator::diag(&[1.0, 1.0, 1.0]),
        Operator::diag(&[1.0, -1.0, 1.0]),
        Operator::diag(&[1.0, 1.0, -1.0]),
        Operator::diag(&[1.0, -1.0, -1.0]),
    ]
}

/// Average of `rho` over [`sign_flips`]: the diagonal part of `rho`.
pub fn symmetrize(rho: &DensityMatrix) -> Result<DensityMatrix> {
    if rho.dim() != 3 {
        return Err(Error::DimensionMismatch {
            expected: 3,
            found: rho.dim(),
        });
    }
    twirl(rho, &sign_flips())
}

fn check_deltas(delta1: f64, delta2: f64) -> Result<()> {
    let ok = delta1.is_finite()
        && delta2.is_finite()
        && delta1 >= 0.0
        && delta2 >= 0.0
        && delta1 + delta2 <= 1.0 + 1e-12;
    if ok {
        Ok(())
    } else {
        Err(Error::Domain(format!(
            "need delta1, delta2 >= 0 and delta1 + delta2 <= 1, got ({delta1}, {delta2})"
        )))
    }
}

fn eq2(d1: f64, d2: f64) -> f64 {
    let a = (1.0 - d1 - d2).max(0.0);
    0.5 * (a + d1 / 2.0 + d2 / 2.0 + a.sqrt() * (d1.sqrt() + d2.sqrt()))
}

/// Average fidelity of `diag(1 - d1 - d2, d1, d2)` to the two committed
/// message states: Alice's success ceiling with a symmetrized message.
pub fn alice_symmetrized_bound(delta1: f64, delta2: f64) -> Result<f64> {
    check_deltas(delta1, delta2)?;
    Ok(eq2(delta1, delta2))
}

#[derive(Clone, Copy, Debug, Serialize)]
pub struct Eq2Optimum {
    pub value: f64,
    pub delta1: f64,
    pub delta2: f64,
    pub grid_step: f64,
    pub grid_value: f64,
}

/// Grid search over the simplex `d1, d2 >= 0, d1 + d2 <= 1`, then a
/// shrinking pattern search from the best grid point.
pub fn optimize_eq2(grid_step: f64) -> Result<Eq2Optimum> {
    if !(grid_step > 0.0 && grid_step <= 0.1) {
        return Err(Error::Domain(format!("grid step must be in (0, 0.1], got {grid_step}")));
    }
    let n = (1.0 / grid_step).round() as usize;
    let h = 1.0 / n as f64;
    let mut best = (f64::NEG_INFINITY, 0.0, 0.0);
    for i in 0..=n {
        for j in 0..=(n - i) {
            let (d1, d2) = (i as f64 * h, j as f64 * h);
            let v = eq2(d1, d2);
            if v > best.0 {
                best = (v, d1, d2);
            }
        }
    }
    let grid_value = best.0;
    let inside = |d1: f64, d2: f64| d1 >= 0.0 && d2 >= 0.0 && d1 + d2 <= 1.0;
    let mut step = h;
    while step > 1e-13 {
        let mut moved = false;
        for (dx, dy) in [(1.0, 0.0), (-1.0, 0.0), (0.0, 1.0), (0.0, -1.0), (1.0, 1.0), (-1.0, -1.0), (1.0, -1.0), (-1.0, 1.0)] {
            let (d1, d2) = (best.1 + dx * step, best.2 + dy * step);
            if inside(d1, d2) {
                let v = eq2(d1, d2);
                if v > best.0 {
                    best = (v, d1, d2);
                    moved = true;
                }
            }
        }
        if !moved {
            step /= 2.0;
        }
    }
    Ok(Eq2Optimum {
        value: best.0,
        delta1: best.1,
        delta2: best.2,
        grid_step: h,
        grid_value,
    })
}

/// Reorders a state given over `regs` (in that order) into ascending
/// register order.
fn to_ascending(state: &StateVector, regs: &[usize], dims: &[usize]) -> Result<StateVector> {
    let mut sorted = regs.to_vec();
    sorted.sort_unstable();
    let local_dims: Vec<usize> = sorted.iter().map(|&r| dims[r]).collect();
    let positions: Vec<usize> = regs
        .iter()
        .map(|r| sorted.iter().position(|s| s == r).expect("present"))
        .collect();
    let split = IndexSplit::new(&local_dims, &positions)?;
    let column = nalgebra::DMatrix::from_column_slice(state.dim(), 1, state.amplitudes());
    Ok(split.unreshape(&column))
}

/// Alice holds `committed` on (bit, index, message) once round 1 is done,
/// prepared for the coin coming back 0; if it comes back 1 she applies
/// `switch` on (bit, index). Since she still runs the round-1 unitary, her
/// starting factor is `U_1^dagger` applied to the committed state.
fn alice_commit_attack(
    spec: &ProtocolSpec,
    target: Outcome,
    label: &str,
    committed: &StateVector,
    switch: Operator,
) -> Result<CheatStrategy> {
    let shape = shape_of(spec)?;
    let dims = spec.dims();
    let mut regs: Vec<usize> = shape.commit_registers().to_vec();
    let mut full = committed.clone();
    let owned = spec.layout().owned_by(Party::Alice);
    for &r in &owned {
        if !regs.contains(&r) {
            full = full.kron(&StateVector::basis(dims[r], 0));
            regs.push(r);
        }
    }
    let after = to_ascending(&full, &regs, dims)?;
    let round1 = &spec.rounds()[0];
    let local_targets: Vec<usize> = round1
        .targets
        .iter()
        .map(|t| owned.iter().position(|o| o == t).expect("round 1 acts on Alice's registers"))
        .collect();
    let local_dims: Vec<usize> = owned.iter().map(|&o| dims[o]).collect();
    let factor = apply_local(&after, &round1.unitary.adjoint(), &local_targets, &local_dims)?;
    let cm = shape.coin_message;
    Ok(CheatStrategy {
        cheater: Party::Alice,
        target,
        label: label.into(),
        interventions: vec![
            Intervention {
                after_round: 0,
                action: Action::SubstituteStart { state: factor },
            },
            Intervention {
                after_round: 2,
                action: Action::MeasureAndCorrect {
                    measure_on: vec![cm],
                    projectors: vec![Operator::diag(&[1.0, 0.0]), Operator::diag(&[0.0, 1.0])],
                    corrections: vec![
                        None,
                        Some(LocalOperator::new(vec![shape.bit, shape.index], switch)),
                    ],
                },
            },
        ],
    })
}

/// Layout of (bit, index, message) with Alice holding bit and index.
fn commit_layout(spec: &ProtocolSpec) -> Result<SubsystemLayout> {
    let shape = shape_of(spec)?;
    SubsystemLayout::new(
        shape.commit_dims(spec).to_vec(),
        vec![Party::Alice, Party::Alice, Party::Bob],
    )
}

/// Alice sends half of a purification of `diag(1 - d1 - d2, d1, d2)` and
/// steers it toward whichever committed state the returned coin requires.
pub fn alice_symmetrized_strategy(
    spec: &ProtocolSpec,
    target: Outcome,
    delta1: f64,
    delta2: f64,
) -> Result<PlannedAttack> {
    check_deltas(delta1, delta2)?;
    let t = target_bit(target)?;
    let shape = shape_of(spec)?;
    let [_, n, d] = shape.commit_dims(spec);
    if d != 3 {
        return Err(Error::UnsupportedShape(format!(
            "symmetrized attack needs a qutrit message, got dimension {d}"
        )));
    }
    if 2 * n < 3 {
        return Err(Error::UnsupportedShape("bit and index registers too small to purify a qutrit".into()));
    }
    let weights = [(1.0 - delta1 - delta2).max(0.0), delta1, delta2];
    // sum_j sqrt(w_j) |j>_(bit,index) |j>_message
    let mut phi = vec![0.0; 2 * n * d];
    for (j, w) in weights.iter().enumerate() {
        phi[j * d + j] = w.sqrt();
    }
    let phi = StateVector::from_real(&phi).normalized()?;
    let layout = commit_layout(spec)?;
    let psi = [
        shape.honest_purification(spec, 0)?,
        shape.honest_purification(spec, 1)?,
    ];
    let w0 = uhlmann_unitary(&psi[t], &phi, &layout, Party::Alice)?;
    let w1 = uhlmann_unitary(&psi[1 - t], &phi, &layout, Party::Alice)?;
    let start = apply_local(&phi, &w0, &[0, 1], layout.dims())?;
    let switch = &w1 * &w0.adjoint();
    let strategy = alice_commit_attack(spec, target, "symmetrized", &start, switch)?;

    let sigma = DensityMatrix::diag(&weights)?;
    let [r0, r1] = shape.message_states(spec)?;
    let analytic = 0.5 * (fidelity(&sigma, &r0)? + fidelity(&sigma, &r1)?);
    Ok(PlannedAttack {
        strategy,
        analytic: Some(analytic),
        bound_kind: BoundKind::Floor,
    })
}

pub fn alice_symmetrized_attack(
    spec: &ProtocolSpec,
    target: Outcome,
    delta1: f64,
    delta2: f64,
    trials: u64,
    seed: u64,
) -> Result<(CheatStrategy, AttackReport)> {
    let plan = alice_symmetrized_strategy(spec, target, delta1, delta2)?;
    let report = run_planned(spec, &plan, trials, seed)?;
    Ok((plan.strategy, report))
}

/// Alice commits to the normalized midpoint of `psi_t` and the aligned
/// `U psi_{1-t}`; if the coin requires the other bit she undoes `U`.
/// Succeeds with probability at least `(1 + sqrt F(rho_0, rho_1)) / 2`.
pub fn alice_purification_strategy(spec: &ProtocolSpec, target: Outcome) -> Result<PlannedAttack> {
    let t = target_bit(target)?;
    let shape = shape_of(spec)?;
    let layout = commit_layout(spec)?;
    let psi = [
        shape.honest_purification(spec, 0)?,
        shape.honest_purification(spec, 1)?,
    ];
    let u = uhlmann_unitary(&psi[t], &psi[1 - t], &layout, Party::Alice)?;
    let moved = apply_local(&psi[1 - t], &u, &[0, 1], layout.dims())?;
    let start = (&psi[t] + &moved).normalized()?;
    let strategy = alice_commit_attack(spec, target, "purification", &start, u.adjoint())?;
    let [r0, r1] = shape.message_states(spec)?;
    let analytic = 0.5 * (1.0 + fidelity(&r0, &r1)?.sqrt());
    Ok(PlannedAttack {
        strategy,
        analytic: Some(analytic),
        bound_kind: BoundKind::Floor,
    })
}

pub fn alice_purification_attack(
    spec: &ProtocolSpec,
    target: Outcome,
    trials: u64,
    seed: u64,
) -> Result<(CheatStrategy, AttackReport)> {
    let plan = alice_purification_strategy(spec, target)?;
    let report = run_planned(spec, &plan, trials, seed)?;
    Ok((plan.strategy, report))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::protocol::{commit_reveal_spec, section3_spec};
    use crate::qmatrix::c;
    use proptest::prelude::*;

    #[test]
    fn honest_strategy_is_fair() {
        let spec = section3_spec();
        let r = simulate_attack(&spec, &CheatStrategy::honest(Party::Bob, Outcome::Zero), 20_000, 3).unwrap();
        assert!((r.exact - 0.5).abs() < 1e-12);
        assert!(r.exact_abort.abs() < 1e-12);
        assert!((r.empirical - 0.5).abs() < 4.0 * binomial_sigma(0.5, 20_000));
    }

    #[test]
    fn bob_helstrom_reaches_three_quarters() {
        let spec = section3_spec();
        for target in [Outcome::Zero, Outcome::One] {
            let plan = bob_helstrom_strategy(&spec, target).unwrap();
            assert!((plan.analytic.unwrap() - 0.75).abs() < 1e-12);
            let (p, _) = exact_attack_success(&spec, &plan.strategy).unwrap();
            assert!((p - 0.75).abs() < 1e-12);
        }
    }

    #[test]
    fn bob_gains_nothing_on_identical_messages() {
        let s = std::f64::consts::FRAC_1_SQRT_2;
        let states = [
            vec![StateVector::from_real(&[s, s])],
            vec![StateVector::from_real(&[s, s])],
        ];
        let spec = commit_reveal_spec("same", 2, &[vec![1.0], vec![1.0]], &states).unwrap();
        let plan = bob_helstrom_strategy(&spec, Outcome::Zero).unwrap();
        assert!((plan.analytic.unwrap() - 0.5).abs() < 1e-12);
        let (p, _) = exact_attack_success(&spec, &plan.strategy).unwrap();
        assert!((p - 0.5).abs() < 1e-12);
    }

    #[test]
    fn symmetrize_examples() {
        let s = std::f64::consts::FRAC_1_SQRT_2;
        let phi00 = DensityMatrix::from_pure(&StateVector::from_real(&[s, s, 0.0])).unwrap();
        let out = symmetrize(&phi00).unwrap();
        assert!(out.op().max_abs_diff(&Operator::diag(&[0.5, 0.5, 0.0])) < 1e-12);
        let diag = DensityMatrix::diag(&[0.2, 0.3, 0.5]).unwrap();
        assert!(symmetrize(&diag).unwrap().op().max_abs_diff(diag.op()) < 1e-12);
        assert!(symmetrize(&DensityMatrix::maximally_mixed(2)).is_err());
    }

    #[test]
    fn eq2_examples() {
        assert!((alice_symmetrized_bound(1.0 / 6.0, 1.0 / 6.0).unwrap() - 0.75).abs() < 1e-12);
        assert!((alice_symmetrized_bound(0.0, 0.0).unwrap() - 0.5).abs() < 1e-12);
        assert!(alice_symmetrized_bound(0.7, 0.7).is_err());
        assert!(alice_symmetrized_bound(-0.1, 0.2).is_err());
    }

    #[test]
    fn eq2_optimum_at_one_sixth() {
        let opt = optimize_eq2(1e-2).unwrap();
        assert!((opt.value - 0.75).abs() < 1e-9);
        assert!((opt.delta1 - 1.0 / 6.0).abs() < 1e-4);
        assert!((opt.delta2 - 1.0 / 6.0).abs() < 1e-4);
        assert!(optimize_eq2(0.0).is_err() && optimize_eq2(0.2).is_err());
    }

    #[test]
    fn eq2_diagonal_is_concave_with_one_sign_change() {
        // d/dd of (1 - d + 2 sqrt(d (1 - 2d))) / 2 changes sign once on (0, 1/2).
        let f = |d: f64| 0.5 * (1.0 - d + 2.0 * (d * (1.0 - 2.0 * d)).sqrt());
        let h = 1e-6;
        let grid: Vec<f64> = (1..500).map(|i| i as f64 / 1000.0).collect();
        let deriv: Vec<f64> = grid.iter().map(|&d| (f(d + h) - f(d - h)) / (2.0 * h)).collect();
        let changes = deriv.windows(2).filter(|w| w[0] > 0.0 && w[1] <= 0.0).count();
        assert_eq!(changes, 1);
        let at = grid[deriv.iter().position(|&v| v <= 0.0).unwrap()];
        assert!((at - 1.0 / 6.0).abs() < 2e-3);
        for d in &grid {
            assert!((f(*d) - eq2(*d, *d)).abs() < 1e-12);
        }
    }

    #[test]
    fn symmetrized_attack_attains_eq2() {
        let spec = section3_spec();
        for target in [Outcome::Zero, Outcome::One] {
            let plan = alice_symmetrized_strategy(&spec, target, 1.0 / 6.0, 1.0 / 6.0).unwrap();
            assert!((plan.analytic.unwrap() - 0.75).abs() < 1e-12);
            let (p, _) = exact_attack_success(&spec, &plan.strategy).unwrap();
            assert!((p - 0.75).abs() < 1e-9, "{p}");
        }
        let plan = alice_symmetrized_strategy(&spec, Outcome::Zero, 0.1, 0.3).unwrap();
        let (p, _) = exact_attack_success(&spec, &plan.strategy).unwrap();
        assert!(p >= eq2(0.1, 0.3) - 1e-9);
    }

    #[test]
    fn purification_attack_on_section3() {
        let spec = section3_spec();
        let plan = alice_purification_strategy(&spec, Outcome::One).unwrap();
        assert!((plan.analytic.unwrap() - 0.75).abs() < 1e-12);
        let (p, _) = exact_attack_success(&spec, &plan.strategy).unwrap();
        assert!(p >= 0.75 - 1e-9);
    }

    #[test]
    fn rejects_foreign_subsystems() {
        let spec = section3_spec();
        let bad = CheatStrategy {
            cheater: Party::Bob,
            target: Outcome::Zero,
            label: "bad".into(),
            interventions: vec![Intervention {
                after_round: 0,
                action: Action::MeasureAndCorrect {
                    measure_on: vec![2],
                    projectors: vec![Operator::identity(3)],
                    corrections: vec![None],
                },
            }],
        };
        assert!(matches!(
            exact_attack_success(&spec, &bad),
            Err(Error::NotOwned { subsystem: 2, .. })
        ));
    }

    #[test]
    fn simulation_is_deterministic() {
        let spec = section3_spec();
        let (_, a) = bob_helstrom_attack(&spec, Outcome::Zero, 5_000, 11).unwrap();
        let (_, b) = bob_helstrom_attack(&spec, Outcome::Zero, 5_000, 11).unwrap();
        assert_eq!(a.empirical, b.empirical);
        assert_eq!(a.abort, b.abort);
    }

    fn random_commit(amps: &[(f64, f64)]) -> StateVector {
        StateVector::new(amps.iter().map(|&(re, im)| c(re, im)).collect())
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn eq2_never_exceeds_three_quarters(a in 0.0f64..=1.0, b in 0.0f64..=1.0) {
            let (d1, d2) = if a + b <= 1.0 { (a, b) } else { (1.0 - a, 1.0 - b) };
            prop_assert!(alice_symmetrized_bound(d1, d2).unwrap() <= 0.75 + 1e-12);
        }

        /// Rotating Alice's message by a sign flip and relabeling her declared
        /// x accordingly leaves Bob's acceptance unchanged.
        #[test]
        fn sign_flip_twirl_keeps_acceptance(
            amps in proptest::collection::vec((-1.0f64..1.0, -1.0f64..1.0), 12),
            flip in 0usize..4,
        ) {
            let Ok(start) = random_commit(&amps).normalized() else { return Ok(()); };
            let spec = section3_spec();
            let accept = |s: &StateVector| {
                let strategy = alice_commit_attack(&spec, Outcome::Zero, "probe", s, Operator::identity(4)).unwrap();
                1.0 - exact_attack_success(&spec, &strategy).unwrap().1
            };
            // U flips the sign of |1> and/or |2>; with b = 0 a flip of |1>
            // swaps x, with b = 1 a flip of |2> swaps x.
            let u = &sign_flips()[flip];
            let flip1 = flip & 1 == 1;
            let flip2 = flip & 2 == 2;
            let x = gates::x();
            let id = Operator::identity(2);
            let relabel0 = if flip1 { &x } else { &id };
            let relabel1 = if flip2 { &x } else { &id };
            let p0 = Operator::diag(&[1.0, 0.0]);
            let p1 = Operator::diag(&[0.0, 1.0]);
            let bit_index = &p0.kron(relabel0) + &p1.kron(relabel1);
            let joint = bit_index.kron(u);
            let rotated = &joint * &start;
            prop_assert!((accept(&start) - accept(&rotated)).abs() < 1e-9);
        }
    }
}
