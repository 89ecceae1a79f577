//! Per-round branch fidelities of a standard-form protocol, the attacks they
//! enable, and the round lower bound that follows.
//!
//! After round `i` the honest state splits as `psi^i_0 + psi^i_1` by final
//! outcome. `F^i_A` is the fidelity between Alice's reductions of the two
//! normalized branches, using ownership after round `i`'s transfer; `F^i_B`
//! likewise for Bob.

use serde::Serialize;

use crate::adversary::{
    run_planned, Action, AttackReport, BoundKind, CheatStrategy, Intervention, PlannedAttack,
};
use crate::error::{Error, Result};
use crate::protocol::{branch_states, BranchStates, LocalOperator, Outcome, ProtocolSpec};
use crate::qdist::{fidelity, helstrom_measurement, uhlmann_unitary};
use crate::qmatrix::{reduced_state, DensityMatrix, Party, StateVector};

/// Slack allowed on every audited inequality.
pub const AUDIT_SLACK: f64 = 1e-9;

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct TrajectoryRow {
    pub i: usize,
    #[serde(rename = "F_A")]
    pub f_a: f64,
    #[serde(rename = "F_B")]
    pub f_b: f64,
}

impl TrajectoryRow {
    pub fn fidelity(&self, party: Party) -> f64 {
        match party {
            Party::Alice => self.f_a,
            Party::Bob => self.f_b,
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct FidelityTrajectory {
    pub k: usize,
    pub rows: Vec<TrajectoryRow>,
}

fn normalized_branches(br: &BranchStates, i: usize) -> Result<[StateVector; 2]> {
    let [b0, b1] = br.at(i);
    Ok([b0.normalized()?, b1.normalized()?])
}

/// `party`'s reductions of the two normalized branches after round `i`.
pub fn branch_reductions(
    spec: &ProtocolSpec,
    branches: &BranchStates,
    i: usize,
    party: Party,
) -> Result<[DensityMatrix; 2]> {
    let owned = spec.layout_after(i).owned_by(party);
    let [n0, n1] = normalized_branches(branches, i)?;
    if owned.is_empty() {
        // Nothing held: both reductions are the trivial 1x1 state.
        let one = DensityMatrix::diag(&[1.0])?;
        return Ok([one.clone(), one]);
    }
    Ok([
        reduced_state(&n0, spec.dims(), &owned)?,
        reduced_state(&n1, spec.dims(), &owned)?,
    ])
}

pub fn fidelity_trajectory(spec: &ProtocolSpec) -> Result<FidelityTrajectory> {
    let br = branch_states(spec)?;
    trajectory_from_branches(spec, &br)
}

pub fn trajectory_from_branches(spec: &ProtocolSpec, br: &BranchStates) -> Result<FidelityTrajectory> {
    let k = spec.num_rounds();
    let mut rows = Vec::with_capacity(k + 1);
    for i in 0..=k {
        let [a0, a1] = branch_reductions(spec, br, i, Party::Alice)?;
        let [b0, b1] = branch_reductions(spec, br, i, Party::Bob)?;
        rows.push(TrajectoryRow {
            i,
            f_a: fidelity(&a0, &a1)?,
            f_b: fidelity(&b0, &b1)?,
        });
    }
    Ok(FidelityTrajectory { k, rows })
}

fn target_bit(target: Outcome) -> Result<usize> {
    match target {
        Outcome::Zero => Ok(0),
        Outcome::One => Ok(1),
        Outcome::Abort => Err(Error::InvalidStrategy("target must be 0 or 1".into())),
    }
}

/// The cheater measures its starting factor with the optimal measurement
/// separating its two branch reductions and, if the `target` side carries at
/// least half the weight, restarts from that side and plays honestly. The
/// floor `1 - sqrt F^0` is claimed only in that majority case.
pub fn start_lemma_strategy(spec: &ProtocolSpec, cheater: Party, target: Outcome) -> Result<PlannedAttack> {
    let t = target_bit(target)?;
    let br = branch_states(spec)?;
    let rho = branch_reductions(spec, &br, 0, cheater)?;
    let f0 = fidelity(&rho[0], &rho[1])?;
    let factor = spec.initial_factor(cheater);
    let label = "start-lemma".to_string();
    if spec.layout().owned_by(cheater).is_empty() {
        return Ok(PlannedAttack {
            strategy: CheatStrategy { label, ..CheatStrategy::honest(cheater, target) },
            analytic: None,
            bound_kind: BoundKind::None,
        });
    }
    let m = helstrom_measurement(&rho[t], &rho[1 - t])?;
    let kept = &m.projector0 * factor;
    let weight = kept.norm_sqr();
    if weight <= 1e-12 {
        return Ok(PlannedAttack {
            strategy: CheatStrategy { label, ..CheatStrategy::honest(cheater, target) },
            analytic: None,
            bound_kind: BoundKind::None,
        });
    }
    let majority = weight >= 0.5 - 1e-12;
    Ok(PlannedAttack {
        strategy: CheatStrategy {
            cheater,
            target,
            label,
            interventions: vec![Intervention {
                after_round: 0,
                action: Action::SubstituteStart {
                    state: kept.normalized()?,
                },
            }],
        },
        analytic: majority.then(|| (1.0 - f0.sqrt()).max(0.0)),
        bound_kind: if majority { BoundKind::Floor } else { BoundKind::None },
    })
}

pub fn start_lemma_attack(
    spec: &ProtocolSpec,
    cheater: Party,
    target: Outcome,
    trials: u64,
    seed: u64,
) -> Result<(CheatStrategy, AttackReport)> {
    let plan = start_lemma_strategy(spec, cheater, target)?;
    let report = run_planned(spec, &plan, trials, seed)?;
    Ok((plan.strategy, report))
}

/// Success floor of the mid-protocol attack for a cheater whose own branch
/// fidelity is `f_own` and whose opponent's is `f_other`:
/// `max(0, 1/sqrt2 - f_own^(1/4))^2 + max(0, sqrt(f_other/2) - f_own^(1/4))^2`.
///
/// Each term bounds the norm of a projection from below; a negative lower
/// bound on a norm says nothing, so it is clamped before squaring.
pub fn eq4_floor(f_own: f64, f_other: f64) -> f64 {
    let q = f_own.clamp(0.0, 1.0).powf(0.25);
    let a = (std::f64::consts::FRAC_1_SQRT_2 - q).max(0.0);
    let b = ((f_other.clamp(0.0, 1.0) / 2.0).sqrt() - q).max(0.0);
    a * a + b * b
}

/// After round `i` the cheater measures its registers to guess the branch;
/// on the wrong guess it rotates its purification of the other branch
/// toward the target branch, then plays honestly.
pub fn main_lemma_strategy(
    spec: &ProtocolSpec,
    cheater: Party,
    i: usize,
    target: Outcome,
) -> Result<PlannedAttack> {
    let t = target_bit(target)?;
    let k = spec.num_rounds();
    if i < 1 || i + 1 > k {
        return Err(Error::Domain(format!(
            "round index must be in 1..={}, got {i}",
            k.saturating_sub(1)
        )));
    }
    let br = branch_states(spec)?;
    let layout = spec.layout_after(i);
    let owned = layout.owned_by(cheater);
    if owned.is_empty() {
        return Err(Error::InvalidStrategy(format!(
            "{cheater} holds nothing after round {i}"
        )));
    }
    let phi = normalized_branches(&br, i)?;
    let rho = branch_reductions(spec, &br, i, cheater)?;
    let other = branch_reductions(spec, &br, i, cheater.other())?;
    let m = helstrom_measurement(&rho[t], &rho[1 - t])?;
    let u = uhlmann_unitary(&phi[t], &phi[1 - t], &layout, cheater)?;
    let f_own = fidelity(&rho[0], &rho[1])?;
    let f_other = fidelity(&other[0], &other[1])?;
    Ok(PlannedAttack {
        strategy: CheatStrategy {
            cheater,
            target,
            label: "main-lemma".into(),
            interventions: vec![Intervention {
                after_round: i,
                action: Action::MeasureAndCorrect {
                    measure_on: owned.clone(),
                    projectors: m.projectors().to_vec(),
                    corrections: vec![None, Some(LocalOperator::new(owned, u))],
                },
            }],
        },
        analytic: Some(eq4_floor(f_own, f_other)),
        bound_kind: BoundKind::Floor,
    })
}

pub fn main_lemma_attack(
    spec: &ProtocolSpec,
    cheater: Party,
    i: usize,
    target: Outcome,
    trials: u64,
    seed: u64,
) -> Result<(CheatStrategy, AttackReport)> {
    let plan = main_lemma_strategy(spec, cheater, i, target)?;
    let report = run_planned(spec, &plan, trials, seed)?;
    Ok((plan.strategy, report))
}

#[derive(Clone, Debug, Serialize)]
pub struct AuditRow {
    pub i: usize,
    #[serde(rename = "F_A")]
    pub f_a: f64,
    #[serde(rename = "F_B")]
    pub f_b: f64,
    /// `2 eps + 6 F_B^(1/4)`, the ceiling on `F_A`.
    pub bound_a: f64,
    /// `2 eps + 6 F_A^(1/4)`, the ceiling on `F_B`.
    pub bound_b: f64,
    /// `F_B - bound_b`; non-positive when the inequality holds.
    pub residual_ab: f64,
    /// `F_A - bound_a`.
    pub residual_ba: f64,
    pub maincor_ab_pass: bool,
    pub maincor_ba_pass: bool,
    /// `14 eps^(1/4^(k-i-1))` clamped to `[0, 1]`, for `i < k`.
    pub induction_bound: Option<f64>,
    pub induction_pass: Option<bool>,
}

#[derive(Clone, Debug, Serialize)]
pub struct BoundAudit {
    pub epsilon: f64,
    pub k: usize,
    pub rows: Vec<AuditRow>,
    pub maincor_pass: bool,
    pub induction_pass: bool,
    pub pass: bool,
}

fn induction_value(k: usize, i: usize, epsilon: f64) -> f64 {
    let exponent = 0.25f64.powi((k - i - 1) as i32);
    (14.0 * epsilon.powf(exponent)).clamp(0.0, 1.0)
}

/// Check both mid-protocol inequalities on every row, and the induction
/// bound on both parties' fidelities for `i < k`.
pub fn maincor_audit(traj: &FidelityTrajectory, epsilon: f64) -> Result<BoundAudit> {
    if !(0.0..=0.5).contains(&epsilon) {
        return Err(Error::Domain(format!("epsilon must be in [0, 1/2], got {epsilon}")));
    }
    let rows: Vec<AuditRow> = traj
        .rows
        .iter()
        .map(|r| {
            let bound_a = 2.0 * epsilon + 6.0 * r.f_b.max(0.0).powf(0.25);
            let bound_b = 2.0 * epsilon + 6.0 * r.f_a.max(0.0).powf(0.25);
            let induction_bound = (r.i < traj.k).then(|| induction_value(traj.k, r.i, epsilon));
            AuditRow {
                i: r.i,
                f_a: r.f_a,
                f_b: r.f_b,
                bound_a,
                bound_b,
                residual_ab: r.f_b - bound_b,
                residual_ba: r.f_a - bound_a,
                maincor_ab_pass: r.f_b <= bound_b + AUDIT_SLACK,
                maincor_ba_pass: r.f_a <= bound_a + AUDIT_SLACK,
                induction_bound,
                induction_pass: induction_bound
                    .map(|b| r.f_a <= b + AUDIT_SLACK && r.f_b <= b + AUDIT_SLACK),
            }
        })
        .collect();
    let maincor_pass = rows.iter().all(|r| r.maincor_ab_pass && r.maincor_ba_pass);
    let induction_pass = rows.iter().all(|r| r.induction_pass.unwrap_or(true));
    Ok(BoundAudit {
        epsilon,
        k: traj.k,
        rows,
        maincor_pass,
        induction_pass,
        pass: maincor_pass && induction_pass,
    })
}

fn check_epsilon(epsilon: f64) -> Result<()> {
    if epsilon > 0.0 && epsilon < 0.25 {
        Ok(())
    } else {
        Err(Error::Domain(format!("epsilon must be in (0, 1/4), got {epsilon}")))
    }
}

/// `14 eps^(1/4^(k-i-1))` for `i = 0..k`, clamped to `[0, 1]`.
pub fn induction_bound(k: usize, epsilon: f64) -> Result<Vec<f64>> {
    check_epsilon(epsilon)?;
    if k < 1 {
        return Err(Error::Domain("need at least one round".into()));
    }
    Ok((0..k).map(|i| induction_value(k, i, epsilon)).collect())
}

/// `ln(14 eps^(1/4^(k-1)))`, computed in log space so tiny `eps` cannot underflow.
fn log_lhs(k: usize, epsilon: f64) -> f64 {
    14f64.ln() + epsilon.ln() / 4f64.powi((k - 1) as i32)
}

fn smallest_k(epsilon: f64, rhs: f64) -> usize {
    let target = rhs.ln();
    (1..).find(|&k| log_lhs(k, epsilon) >= target).expect("lhs tends to 14")
}

/// Smallest `k >= 1` with `14 eps^(1/4^(k-1)) >= (1/2 - eps)^2`.
pub fn round_lower_bound(epsilon: f64) -> Result<usize> {
    check_epsilon(epsilon)?;
    Ok(smallest_k(epsilon, (0.5 - epsilon).powi(2)))
}

#[derive(Clone, Debug, Serialize)]
pub struct RoundBound {
    pub epsilon: f64,
    pub k_min: usize,
    pub constraint: &'static str,
    /// Same search with the right-hand side relaxed to `1/16`.
    pub k_min_simplified: usize,
    pub simplified_constraint: &'static str,
    /// `14 eps^(1/4^(k_min-1))`
    pub lhs_at_k_min: f64,
    pub rhs: f64,
}

pub fn round_bound_report(epsilon: f64) -> Result<RoundBound> {
    let k_min = round_lower_bound(epsilon)?;
    Ok(RoundBound {
        epsilon,
        k_min,
        constraint: "14*eps^(1/4^(k-1)) >= (0.5-eps)^2",
        k_min_simplified: smallest_k(epsilon, 1.0 / 16.0),
        simplified_constraint: "14*eps^(1/4^(k-1)) >= 1/16",
        lhs_at_k_min: log_lhs(k_min, epsilon).exp(),
        rhs: (0.5 - epsilon).powi(2),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::adversary::exact_attack_success;
    use crate::protocol::{
        exact_outcome_distribution, section3_spec, InitialState, ProtocolDraft, Round,
    };
    use crate::qmatrix::{c, gates, Operator, SubsystemLayout};
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn section3_trajectory_values() {
        let traj = fidelity_trajectory(&section3_spec()).unwrap();
        let expected = [(1.0, 1.0), (1.0, 0.25), (0.0, 0.25), (0.0, 0.0)];
        assert_eq!(traj.k, 3);
        for (row, (fa, fb)) in traj.rows.iter().zip(expected) {
            assert!((row.f_a - fa).abs() < 1e-9, "{row:?}");
            assert!((row.f_b - fb).abs() < 1e-9, "{row:?}");
        }
    }

    #[test]
    fn recomputed_trajectory_matches() {
        let spec = section3_spec();
        let a = fidelity_trajectory(&spec).unwrap();
        let b = fidelity_trajectory(&spec).unwrap();
        for (x, y) in a.rows.iter().zip(&b.rows) {
            assert!((x.f_a - y.f_a).abs() < 1e-9 && (x.f_b - y.f_b).abs() < 1e-9);
        }
    }

    /// Alice holds a |+> coin and a blank qubit, copies the coin and sends the
    /// copy; each side reads its qubit. Alice's starting branches are orthogonal.
    fn copy_coin_spec() -> ProtocolSpec {
        let layout = SubsystemLayout::new(vec![2, 2], vec![Party::Alice, Party::Alice]).unwrap();
        let read = [Operator::diag(&[1.0, 0.0]), Operator::diag(&[0.0, 1.0]), Operator::zeros(2)];
        ProtocolSpec::new(ProtocolDraft {
            name: "copy-coin".into(),
            layout,
            subsystem_names: vec![],
            initial: InitialState::Factors {
                alice: gates::plus().kron(&StateVector::basis(2, 0)),
                bob: StateVector::basis(1, 0),
            },
            rounds: vec![Round {
                sender: Party::Alice,
                targets: vec![0, 1],
                unitary: gates::cnot(),
                transfer: vec![1],
            }],
            final_alice: read.clone(),
            final_bob: read,
            shape: None,
        })
        .unwrap()
    }

    #[test]
    fn start_lemma_on_distinguishable_start_forces_outcome() {
        let spec = copy_coin_spec();
        let traj = fidelity_trajectory(&spec).unwrap();
        assert!(traj.rows[0].f_a.abs() < 1e-12);
        for target in [Outcome::Zero, Outcome::One] {
            let plan = start_lemma_strategy(&spec, Party::Alice, target).unwrap();
            assert!((plan.analytic.unwrap() - 1.0).abs() < 1e-12);
            let (p, _) = exact_attack_success(&spec, &plan.strategy).unwrap();
            assert!((p - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn start_lemma_on_section3_is_honest_play() {
        let spec = section3_spec();
        let plan = start_lemma_strategy(&spec, Party::Alice, Outcome::Zero).unwrap();
        assert!(plan.analytic.unwrap().abs() < 1e-9);
        let (p, _) = exact_attack_success(&spec, &plan.strategy).unwrap();
        assert!((p - 0.5).abs() < 1e-9);
    }

    #[test]
    fn eq4_floor_special_cases() {
        for fb in [0.0, 0.25, 0.7, 1.0] {
            assert!((eq4_floor(0.0, fb) - (0.5 + fb / 2.0)).abs() < 1e-12);
        }
        assert_eq!(eq4_floor(1.0, 0.25), 0.0);
        assert_eq!(eq4_floor(1.0, 1.0), 0.0);
    }

    #[test]
    fn main_lemma_on_section3_meets_floor() {
        let spec = section3_spec();
        for cheater in [Party::Alice, Party::Bob] {
            for i in 1..spec.num_rounds() {
                for target in [Outcome::Zero, Outcome::One] {
                    let plan = main_lemma_strategy(&spec, cheater, i, target).unwrap();
                    let (p, _) = exact_attack_success(&spec, &plan.strategy).unwrap();
                    assert!(p >= plan.analytic.unwrap() - 1e-9, "{cheater} {i} {p}");
                }
            }
        }
        let plan = main_lemma_strategy(&spec, Party::Alice, 2, Outcome::Zero).unwrap();
        assert!((plan.analytic.unwrap() - 0.625).abs() < 1e-9);
        assert!(main_lemma_strategy(&spec, Party::Alice, 0, Outcome::Zero).is_err());
        assert!(main_lemma_strategy(&spec, Party::Alice, 3, Outcome::Zero).is_err());
    }

    #[test]
    fn maincor_examples() {
        let traj = fidelity_trajectory(&section3_spec()).unwrap();
        assert!(maincor_audit(&traj, 0.25).unwrap().maincor_pass);
        let violated = FidelityTrajectory {
            k: 1,
            rows: vec![TrajectoryRow { i: 0, f_a: 0.0, f_b: 1.0 }],
        };
        assert!(!maincor_audit(&violated, 0.1).unwrap().maincor_pass);
        let zero = FidelityTrajectory {
            k: 1,
            rows: vec![TrajectoryRow { i: 0, f_a: 0.0, f_b: 0.0 }],
        };
        for eps in [0.0, 0.1, 0.5] {
            assert!(maincor_audit(&zero, eps).unwrap().maincor_pass);
        }
        assert!(maincor_audit(&zero, 0.6).is_err());
    }

    #[test]
    fn induction_examples() {
        let b = induction_bound(3, 1e-4).unwrap();
        // i = k-1 gives 14 eps
        assert!((b[2] - 14.0 * 1e-4).abs() < 1e-15);
        // Unclamped i = 0 value is 14 * 1e-4^(1/16) = 7.87...
        let raw = 14.0 * 1e-4f64.powf(1.0 / 16.0);
        assert!((raw - 7.873).abs() < 1e-3);
        assert_eq!(b[0], 1.0);
        let mut prev = vec![f64::INFINITY; 3];
        for e in [0.2, 1e-2, 1e-4, 1e-8, 1e-16] {
            let cur = induction_bound(3, e).unwrap();
            for (c, p) in cur.iter().zip(&prev) {
                assert!(c <= p);
            }
            prev = cur;
        }
        assert!(induction_bound(0, 0.1).is_err());
        assert!(induction_bound(3, 0.25).is_err());
    }

    #[test]
    fn round_bound_examples() {
        assert_eq!(round_lower_bound(0.2).unwrap(), 1);
        assert_eq!(round_lower_bound(1e-6).unwrap(), 2);
        let mut prev = 0;
        for p in 1..=12 {
            let k = round_lower_bound(10f64.powi(-p)).unwrap();
            assert!(k >= prev);
            prev = k;
        }
        assert!(round_lower_bound(0.0).is_err());
        assert!(round_lower_bound(0.3).is_err());
        let r = round_bound_report(1e-6).unwrap();
        assert!((r.lhs_at_k_min - 14.0 * 1e-6f64.powf(0.25)).abs() < 1e-12);
    }

    fn random_unitary(rng: &mut ChaCha8Rng, dim: usize) -> Operator {
        let m = Operator::from_fn(dim, |_, _| c(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5));
        m.polar_unitary().0
    }

    /// Alice flips a coin, sends Bob a copy, then the parties take turns
    /// applying coin-controlled random unitaries to what they hold and
    /// passing one random work qubit across. Each side reads its copy.
    fn random_spec(seed: u64, rounds: usize) -> ProtocolSpec {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        // 0: Alice coin, 1: Bob's copy, 2..4: work qubits.
        let dims = vec![2, 2, 2, 2];
        let mut owners = vec![Party::Alice, Party::Alice, Party::Alice, Party::Bob];
        let layout = SubsystemLayout::new(dims.clone(), owners.clone()).unwrap();
        let mut rs = vec![Round {
            sender: Party::Alice,
            targets: vec![0, 1],
            unitary: gates::cnot(),
            transfer: vec![1],
        }];
        owners[1] = Party::Bob;
        let mut sender = Party::Bob;
        for _ in 0..rounds {
            let coin = if sender == Party::Alice { 0 } else { 1 };
            let work: Vec<usize> = (2..4).filter(|&s| owners[s] == sender).collect();
            let mut targets: Vec<usize> = work.iter().copied().chain([coin]).collect();
            targets.sort_unstable();
            let unitary = if work.is_empty() {
                Operator::identity(2)
            } else {
                let wd: usize = work.iter().map(|&s| dims[s]).product();
                let v0 = random_unitary(&mut rng, wd);
                let v1 = random_unitary(&mut rng, wd);
                // Controlled on the coin copy, which may sit before or after
                // the work registers in tensor order.
                let p0 = Operator::diag(&[1.0, 0.0]);
                let p1 = Operator::diag(&[0.0, 1.0]);
                let block = &p0.kron(&v0) + &p1.kron(&v1);
                if targets[0] == coin {
                    block
                } else {
                    let order: Vec<usize> = std::iter::once(coin).chain(work.iter().copied()).collect();
                    let positions: Vec<usize> =
                        order.iter().map(|s| targets.iter().position(|t| t == s).unwrap()).collect();
                    let local: Vec<usize> = targets.iter().map(|&t| dims[t]).collect();
                    crate::qmatrix::embed(&block, &positions, &local).unwrap()
                }
            };
            let transfer: Vec<usize> = if !work.is_empty() && rng.random::<bool>() {
                vec![work[rng.random_range(0..work.len())]]
            } else {
                vec![]
            };
            for &t in &transfer {
                owners[t] = sender.other();
            }
            rs.push(Round { sender, targets, unitary, transfer });
            sender = sender.other();
        }
        let read = [Operator::diag(&[1.0, 0.0]), Operator::diag(&[0.0, 1.0]), Operator::zeros(2)];
        let expand = |party: Party| -> [Operator; 3] {
            let held: Vec<usize> = (0..4).filter(|&s| owners[s] == party).collect();
            let coin = if party == Party::Alice { 0 } else { 1 };
            let local: Vec<usize> = held.iter().map(|&s| dims[s]).collect();
            let pos = held.iter().position(|&s| s == coin).unwrap();
            read.clone().map(|p| crate::qmatrix::embed(&p, &[pos], &local).unwrap())
        };
        let (fa, fb) = (expand(Party::Alice), expand(Party::Bob));
        ProtocolSpec::new(ProtocolDraft {
            name: "random".into(),
            layout,
            subsystem_names: vec![],
            initial: InitialState::Factors {
                alice: gates::plus().kron(&StateVector::basis(4, 0)),
                bob: StateVector::basis(2, 0),
            },
            rounds: rs,
            final_alice: fa,
            final_bob: fb,
            shape: None,
        })
        .unwrap()
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(32))]

        #[test]
        fn sender_monotonicity_on_random_specs(seed in any::<u64>(), rounds in 1usize..5) {
            let spec = random_spec(seed, rounds);
            let d = exact_outcome_distribution(&spec);
            prop_assert!((d.zero - 0.5).abs() < 1e-9);
            let traj = fidelity_trajectory(&spec).unwrap();
            for r in 1..=spec.num_rounds() {
                let sender = spec.rounds()[r - 1].sender;
                let before = traj.rows[r - 1].fidelity(sender);
                let after = traj.rows[r].fidelity(sender);
                prop_assert!(after >= before - 1e-9, "round {} {}: {} -> {}", r, sender, before, after);
            }
            let end = traj.rows.last().unwrap();
            prop_assert!(end.f_a <= 1e-9 && end.f_b <= 1e-9);
        }
    }
}
