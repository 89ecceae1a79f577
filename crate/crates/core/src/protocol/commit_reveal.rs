//! Commit-then-reveal coin flips: Alice commits to a bit `b` by sending a
//! message state, Bob answers with a coin `b'`, Alice reveals `b` and the
//! label `x` of the state she sent, Bob checks, and the coin is `b xor b'`.
//!
//! All classical randomness is purified. Registers, in tensor order:
//!
//! | position | register       | dim          | initial owner |
//! |----------|----------------|--------------|---------------|
//! | 0        | `bit`          | 2            | Alice         |
//! | 1        | `index`        | `max |X_b|`  | Alice         |
//! | 2        | `message`      | `d`          | Alice         |
//! | 3        | `coin`         | 2            | Bob           |
//! | 4        | `coin_message` | 2            | Bob           |
//! | 5        | `bit_copy`     | 2            | Alice         |

use serde::{Deserialize, Serialize};

use super::{InitialState, ProtocolDraft, ProtocolSpec, Round};
use crate::error::{Error, Result};
use crate::qmatrix::{
    apply_local, gates, reduced_state, unitary_with_first_column, DensityMatrix, Operator, Party,
    StateVector, SubsystemLayout, C64, TOL,
};

/// Register positions of a commit-reveal protocol.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CommitRevealShape {
    pub bit: usize,
    pub index: usize,
    pub message: usize,
    pub coin: usize,
    pub coin_message: usize,
    pub bit_copy: usize,
}

impl Default for CommitRevealShape {
    fn default() -> Self {
        CommitRevealShape {
            bit: 0,
            index: 1,
            message: 2,
            coin: 3,
            coin_message: 4,
            bit_copy: 5,
        }
    }
}

impl CommitRevealShape {
    /// Registers Alice commits with, in tensor order.
    pub fn commit_registers(&self) -> [usize; 3] {
        [self.bit, self.index, self.message]
    }

    /// Structural check that `spec` follows the commit-reveal template with
    /// these positions.
    pub fn check(&self, spec: &ProtocolSpec) -> Result<()> {
        let bad = |what: &str| Err(Error::UnsupportedShape(what.to_string()));
        let regs = [
            self.bit,
            self.index,
            self.message,
            self.coin,
            self.coin_message,
            self.bit_copy,
        ];
        let n = spec.layout().len();
        if regs.iter().any(|&r| r >= n) {
            return bad("register position out of range");
        }
        let mut sorted = regs.to_vec();
        sorted.sort_unstable();
        sorted.dedup();
        if sorted.len() != regs.len() || n != regs.len() {
            return bad("registers must be six distinct subsystems");
        }
        let dims = spec.dims();
        for r in [self.bit, self.coin, self.coin_message, self.bit_copy] {
            if dims[r] != 2 {
                return bad("bit, coin and copy registers must be qubits");
            }
        }
        let owners = spec.layout().owners();
        let alice = [self.bit, self.index, self.message, self.bit_copy];
        if alice.iter().any(|&r| owners[r] != Party::Alice)
            || [self.coin, self.coin_message].iter().any(|&r| owners[r] != Party::Bob)
        {
            return bad("initial ownership does not match");
        }
        let rounds = spec.rounds();
        if rounds.len() != 3 {
            return bad("expected three rounds");
        }
        let mut commit: Vec<usize> = self.commit_registers().to_vec();
        commit.sort_unstable();
        if rounds[0].sender != Party::Alice || rounds[0].transfer != [self.message] {
            return bad("round 1 must send the message register from Alice");
        }
        if rounds[0].targets != commit {
            return bad("round 1 must act on bit, index and message");
        }
        // Targets are ascending, so a CNOT whose control sits later is
        // conjugated by a swap.
        let cnot_on = |round: &Round, control: usize, target: usize| {
            let expected = if control < target {
                gates::cnot()
            } else {
                gates::cnot().conjugate_by(&gates::swap())
            };
            let mut t = vec![control, target];
            t.sort_unstable();
            round.targets == t && round.unitary.max_abs_diff(&expected) < TOL
        };
        if rounds[1].sender != Party::Bob
            || rounds[1].transfer != [self.coin_message]
            || !cnot_on(&rounds[1], self.coin, self.coin_message)
        {
            return bad("round 2 must copy Bob's coin into the sent register");
        }
        let mut reveal = vec![self.index, self.bit_copy];
        reveal.sort_unstable();
        if rounds[2].sender != Party::Alice
            || rounds[2].transfer != reveal
            || !cnot_on(&rounds[2], self.bit, self.bit_copy)
        {
            return bad("round 3 must copy the bit and reveal index and copy");
        }
        let coin_state = spec.state_after(0)?;
        let coin = reduced_state(&coin_state, dims, &[self.coin])?;
        let expected = DensityMatrix::from_pure(&gates::plus())?;
        let zero = reduced_state(&coin_state, dims, &[self.coin_message])?;
        if coin.op().max_abs_diff(expected.op()) > TOL
            || (zero.op().get(0, 0).re - 1.0).abs() > TOL
        {
            return bad("Bob's coin must start in |+> with an empty message register");
        }
        Ok(())
    }

    /// Dimensions of (bit, index, message).
    pub fn commit_dims(&self, spec: &ProtocolSpec) -> [usize; 3] {
        let d = spec.dims();
        [d[self.bit], d[self.index], d[self.message]]
    }

    /// Alice's honest committed state for bit `b` on (bit, index, message):
    /// `|b> sum_x sqrt(pi_b(x)) |x> |phi_{b,x}>`.
    pub fn honest_purification(&self, spec: &ProtocolSpec, b: usize) -> Result<StateVector> {
        let dims = self.commit_dims(spec);
        let start = StateVector::basis(dims.iter().product(), b * dims[1] * dims[2]);
        apply_local(&start, &spec.rounds()[0].unitary, &[0, 1, 2], &dims)
    }

    /// The message state Bob receives when Alice's bit is `b`: `[rho_0, rho_1]`.
    pub fn message_states(&self, spec: &ProtocolSpec) -> Result<[DensityMatrix; 2]> {
        let dims = self.commit_dims(spec);
        let r0 = reduced_state(&self.honest_purification(spec, 0)?, &dims, &[2])?;
        let r1 = reduced_state(&self.honest_purification(spec, 1)?, &dims, &[2])?;
        Ok([r0, r1])
    }
}

/// Purified commit-reveal protocol for a state family: given bit `b`, Alice
/// sends `phi_{b,x}` with probability `priors[b][x]`.
pub fn commit_reveal_spec(
    name: &str,
    dim: usize,
    priors: &[Vec<f64>; 2],
    states: &[Vec<StateVector>; 2],
) -> Result<ProtocolSpec> {
    let n = priors[0].len().max(priors[1].len());
    for b in 0..2 {
        if priors[b].is_empty() || priors[b].len() != states[b].len() {
            return Err(Error::InvalidFamily(format!(
                "branch {b} needs one prior per state"
            )));
        }
        if states[b].iter().any(|s| s.dim() != dim) {
            return Err(Error::InvalidFamily(format!("branch {b} has a state of the wrong dimension")));
        }
    }

    // Block-diagonal in the bit: V_b |0,0> = sum_x sqrt(pi_b(x)) |x> |phi_{b,x}>.
    let block = n * dim;
    let mut u = Operator::zeros(2 * block).into_matrix();
    for b in 0..2 {
        let mut amps = vec![C64::new(0.0, 0.0); block];
        for (x, (p, phi)) in priors[b].iter().zip(&states[b]).enumerate() {
            for (j, a) in phi.amplitudes().iter().enumerate() {
                amps[x * dim + j] = a * p.sqrt();
            }
        }
        let v = unitary_with_first_column(&StateVector::new(amps))?;
        u.view_mut((b * block, b * block), (block, block))
            .copy_from(v.matrix());
    }
    let commit = Operator::from_matrix(u)?;

    let layout = SubsystemLayout::new(
        vec![2, n, dim, 2, 2, 2],
        vec![
            Party::Alice,
            Party::Alice,
            Party::Alice,
            Party::Bob,
            Party::Bob,
            Party::Alice,
        ],
    )?;
    let zero = |d: usize| StateVector::basis(d, 0);
    let alice_init = gates::plus().kron(&zero(n)).kron(&zero(dim)).kron(&zero(2));
    let bob_init = gates::plus().kron(&zero(2));

    // Alice's output: parity of (bit, coin_message).
    let parity = [
        Operator::diag(&[1.0, 0.0, 0.0, 1.0]),
        Operator::diag(&[0.0, 1.0, 1.0, 0.0]),
        Operator::zeros(4),
    ];

    // Bob's output on (index, message, coin, bit_copy): accept iff the
    // message matches the revealed (b, x); then the parity of coin and copy.
    let bob_dim = n * dim * 4;
    let mut accept = [Operator::zeros(bob_dim), Operator::zeros(bob_dim)];
    for (b, branch) in states.iter().enumerate() {
        let copy = Operator::outer(&StateVector::basis(2, b));
        for (x, phi) in branch.iter().enumerate() {
            let label = Operator::outer(&StateVector::basis(n, x));
            let check = label.kron(&Operator::outer(phi));
            for coin in 0..2 {
                let c = Operator::outer(&StateVector::basis(2, coin));
                let term = check.kron(&c).kron(&copy);
                let out = coin ^ b;
                accept[out] = &accept[out] + &term;
            }
        }
    }
    let abort = &(&Operator::identity(bob_dim) - &accept[0]) - &accept[1];
    let [p0, p1] = accept;

    ProtocolSpec::new(ProtocolDraft {
        name: name.to_string(),
        layout,
        subsystem_names: ["bit", "index", "message", "coin", "coin_message", "bit_copy"]
            .iter()
            .map(|s| s.to_string())
            .collect(),
        initial: InitialState::Factors {
            alice: alice_init,
            bob: bob_init,
        },
        rounds: vec![
            Round {
                sender: Party::Alice,
                targets: vec![0, 1, 2],
                unitary: commit,
                transfer: vec![2],
            },
            Round {
                sender: Party::Bob,
                targets: vec![3, 4],
                unitary: gates::cnot(),
                transfer: vec![4],
            },
            Round {
                sender: Party::Alice,
                targets: vec![0, 5],
                unitary: gates::cnot(),
                transfer: vec![1, 5],
            },
        ],
        final_alice: parity,
        final_bob: [p0, p1, abort],
        shape: Some(CommitRevealShape::default()),
    })
}

/// The four qutrit states `phi_{b,x} = (|0> + (-1)^x |b+1>) / sqrt 2`.
pub fn section3_states() -> [Vec<StateVector>; 2] {
    let s = std::f64::consts::FRAC_1_SQRT_2;
    [
        vec![
            StateVector::from_real(&[s, s, 0.0]),
            StateVector::from_real(&[s, -s, 0.0]),
        ],
        vec![
            StateVector::from_real(&[s, 0.0, s]),
            StateVector::from_real(&[s, 0.0, -s]),
        ],
    ]
}

/// The bias-1/4 qutrit protocol with uniform `b` and `x`.
pub fn section3_spec() -> ProtocolSpec {
    commit_reveal_spec(
        "section3",
        3,
        &[vec![0.5, 0.5], vec![0.5, 0.5]],
        &section3_states(),
    )
    .expect("built-in protocol is valid")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn section3_dimensions() {
        let spec = section3_spec();
        assert_eq!(spec.dims(), &[2, 2, 3, 2, 2, 2]);
        assert_eq!(spec.layout().total_dim(), 96);
        let end = spec.layout_after(3);
        assert_eq!(end.owned_by(Party::Alice), vec![0, 4]);
        assert_eq!(end.owned_by(Party::Bob), vec![1, 2, 3, 5]);
    }

    #[test]
    fn phi00_passes_bob_check() {
        let spec = section3_spec();
        let shape = spec.shape().unwrap();
        let psi = shape.honest_purification(&spec, 0).unwrap();
        // |0>_bit (|0>|phi00> + |1>|phi01>)/sqrt 2
        let mut expected = vec![0.0; 12];
        expected[0] = 0.5;
        expected[1] = 0.5;
        expected[3] = 0.5;
        expected[4] = -0.5;
        assert!(psi.max_abs_diff(&StateVector::from_real(&expected)) < 1e-12);
    }

    #[test]
    fn rejects_mismatched_family() {
        let states = section3_states();
        let err = commit_reveal_spec("bad", 3, &[vec![1.0], vec![0.5, 0.5]], &states);
        assert!(matches!(err, Err(Error::InvalidFamily(_))));
    }

    #[test]
    fn uneven_family_is_fair() {
        let s = std::f64::consts::FRAC_1_SQRT_2;
        let states = [
            vec![StateVector::from_real(&[1.0, 0.0])],
            vec![
                StateVector::from_real(&[s, s]),
                StateVector::from_real(&[0.0, 1.0]),
                StateVector::from_real(&[s, -s]),
            ],
        ];
        let spec =
            commit_reveal_spec("uneven", 2, &[vec![1.0], vec![0.2, 0.3, 0.5]], &states).unwrap();
        let d = super::super::exact_outcome_distribution(&spec);
        assert!((d.zero - 0.5).abs() < 1e-12 && d.abort.abs() < 1e-12);
    }
}
