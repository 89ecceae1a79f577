//! Commit-reveal protocols given by an arbitrary state family: for each bit
//! `b`, Alice sends `phi_{b,x}` with probability `pi_b(x)`. Every such
//! protocol has bias at least 1/4.

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand::SeedableRng;
use rand_distr::{Distribution, Exp1, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::protocol::{commit_reveal_spec, section3_states, ProtocolSpec};
use crate::qdist::{aligned_overlap, fidelity, trace_distance, uhlmann_unitary};
use crate::qmatrix::{c, DensityMatrix, Operator, Party, StateVector, SubsystemLayout, TOL};

#[derive(Clone, Debug)]
pub struct FamilyBranch {
    pub prior: Vec<f64>,
    pub states: Vec<StateVector>,
}

#[derive(Clone, Debug)]
pub struct FamilySpec {
    dim: usize,
    branches: [FamilyBranch; 2],
}

impl FamilySpec {
    pub fn new(dim: usize, branches: [FamilyBranch; 2]) -> Result<Self> {
        if dim == 0 {
            return Err(Error::InvalidFamily("message dimension must be positive".into()));
        }
        for (b, br) in branches.iter().enumerate() {
            if br.prior.is_empty() || br.prior.len() != br.states.len() {
                return Err(Error::InvalidFamily(format!(
                    "branch {b}: need one prior entry per state"
                )));
            }
            if br.prior.iter().any(|p| !p.is_finite() || *p < 0.0) {
                return Err(Error::InvalidFamily(format!("branch {b}: negative prior")));
            }
            let total: f64 = br.prior.iter().sum();
            if (total - 1.0).abs() > 1e-12 {
                return Err(Error::InvalidFamily(format!("branch {b}: prior sums to {total}")));
            }
            for (x, s) in br.states.iter().enumerate() {
                if s.dim() != dim {
                    return Err(Error::InvalidFamily(format!(
                        "branch {b} state {x} has dimension {}, expected {dim}",
                        s.dim()
                    )));
                }
                if !s.is_normalized(TOL) {
                    return Err(Error::InvalidFamily(format!("branch {b} state {x} is not unit norm")));
                }
            }
        }
        Ok(FamilySpec { dim, branches })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn branch(&self, b: usize) -> &FamilyBranch {
        &self.branches[b]
    }

    /// `rho_b = sum_x pi_b(x) |phi_{b,x}><phi_{b,x}|`
    pub fn message_state(&self, b: usize) -> Result<DensityMatrix> {
        let br = &self.branches[b];
        let mut acc = Operator::zeros(self.dim);
        for (p, s) in br.prior.iter().zip(&br.states) {
            acc = &acc + &Operator::outer(s).scale(c(*p, 0.0));
        }
        DensityMatrix::new(acc)
    }

    /// The purified commit-reveal protocol running this family.
    pub fn to_protocol(&self, name: &str) -> Result<ProtocolSpec> {
        commit_reveal_spec(
            name,
            self.dim,
            &[self.branches[0].prior.clone(), self.branches[1].prior.clone()],
            &[self.branches[0].states.clone(), self.branches[1].states.clone()],
        )
    }
}

/// Uniform priors over the four qutrit states of the bias-1/4 protocol.
pub fn section3_family() -> FamilySpec {
    let [s0, s1] = section3_states();
    FamilySpec::new(
        3,
        [
            FamilyBranch { prior: vec![0.5, 0.5], states: s0 },
            FamilyBranch { prior: vec![0.5, 0.5], states: s1 },
        ],
    )
    .expect("built-in family is valid")
}

#[derive(Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
struct RawBranch {
    prior: Vec<f64>,
    states: Vec<Vec<[f64; 2]>>,
}

#[derive(Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
struct RawFamily {
    dim: usize,
    branches: Vec<RawBranch>,
}

pub fn parse_family_json(text: &str) -> Result<FamilySpec> {
    let raw: RawFamily = serde_json::from_str(text)?;
    let [b0, b1]: [RawBranch; 2] = raw
        .branches
        .try_into()
        .map_err(|_| Error::Parse("a family has exactly two branches".into()))?;
    let convert = |rb: RawBranch| FamilyBranch {
        prior: rb.prior,
        states: rb
            .states
            .iter()
            .map(|amps| StateVector::new(amps.iter().map(|&[re, im]| c(re, im)).collect()))
            .collect(),
    };
    FamilySpec::new(raw.dim, [convert(b0), convert(b1)])
}

pub fn family_to_json(family: &FamilySpec) -> serde_json::Value {
    let raw = RawFamily {
        dim: family.dim,
        branches: family
            .branches
            .iter()
            .map(|b| RawBranch {
                prior: b.prior.clone(),
                states: b
                    .states
                    .iter()
                    .map(|s| s.amplitudes().iter().map(|z| [z.re, z.im]).collect())
                    .collect(),
            })
            .collect(),
    };
    serde_json::to_value(raw).expect("plain data serializes")
}

#[derive(Clone, Debug, Serialize)]
pub struct FamilyReport {
    pub rho0: DensityMatrix,
    pub rho1: DensityMatrix,
    pub trace_distance: f64,
    pub fidelity: f64,
    /// `1/2 + T/4`: Bob guesses `b` from the message.
    pub bob_success: f64,
    /// `(1 + sqrt F)/2`: Alice commits to a state between the two bits.
    pub alice_success: f64,
    pub max_bias: f64,
}

pub fn analyze_family(family: &FamilySpec) -> Result<FamilyReport> {
    let rho0 = family.message_state(0)?;
    let rho1 = family.message_state(1)?;
    let t = trace_distance(&rho0, &rho1)?;
    let f = fidelity(&rho0, &rho1)?;
    let bob_success = 0.5 + t / 4.0;
    let alice_success = 0.5 * (1.0 + f.sqrt());
    Ok(FamilyReport {
        rho0,
        rho1,
        trace_distance: t,
        fidelity: f,
        bob_success,
        alice_success,
        max_bias: bob_success.max(alice_success) - 0.5,
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct RestrictedCheck {
    pub max_bias: f64,
    /// Whose attack certifies bias at least 1/4.
    pub witness: Party,
    pub certificate: f64,
    /// `sqrt F / 2`
    pub alice_certificate: f64,
    /// `(1 - sqrt F)/2`, at most `T/4`.
    pub bob_certificate: f64,
    pub pass: bool,
}

/// Alice certifies when `F >= 1/4`, Bob otherwise.
pub fn restricted_bound_check(family: &FamilySpec) -> Result<RestrictedCheck> {
    let report = analyze_family(family)?;
    let root = report.fidelity.sqrt();
    let alice_certificate = root / 2.0;
    let bob_certificate = (1.0 - root) / 2.0;
    let witness = if report.fidelity >= 0.25 - 1e-12 {
        Party::Alice
    } else {
        Party::Bob
    };
    let certificate = match witness {
        Party::Alice => alice_certificate,
        Party::Bob => bob_certificate,
    };
    Ok(RestrictedCheck {
        max_bias: report.max_bias,
        witness,
        certificate,
        alice_certificate,
        bob_certificate,
        pass: report.max_bias >= 0.25 - 1e-9,
    })
}

/// Alignment of the two honest commitments by Alice's local unitary.
#[derive(Clone, Debug, Serialize)]
pub struct AlignmentCheck {
    /// `|<psi_0| U |psi_1>|` after alignment.
    pub cos_alpha: f64,
    /// `(1 + cos alpha) / 2`
    pub predicted_success: f64,
    pub alice_success: f64,
}

pub fn alignment_check(family: &FamilySpec) -> Result<AlignmentCheck> {
    let spec = family.to_protocol("family")?;
    let shape = spec.shape().expect("exported with shape");
    let [_, n, d] = shape.commit_dims(&spec);
    let layout = SubsystemLayout::new(vec![2, n, d], vec![Party::Alice, Party::Alice, Party::Bob])?;
    let psi0 = shape.honest_purification(&spec, 0)?;
    let psi1 = shape.honest_purification(&spec, 1)?;
    let u = uhlmann_unitary(&psi0, &psi1, &layout, Party::Alice)?;
    let cos_alpha = aligned_overlap(&psi0, &psi1, &u, &layout, Party::Alice)?;
    Ok(AlignmentCheck {
        cos_alpha,
        predicted_success: 0.5 * (1.0 + cos_alpha),
        alice_success: analyze_family(family)?.alice_success,
    })
}

fn haar_vector(rng: &mut ChaCha8Rng, dim: usize) -> StateVector {
    loop {
        let amps: Vec<_> = (0..dim)
            .map(|_| c(StandardNormal.sample(rng), StandardNormal.sample(rng)))
            .collect();
        if let Ok(v) = StateVector::new(amps).normalized() {
            return v;
        }
    }
}

/// Flat-Dirichlet prior; redrawn while any entry is below `1e-6`.
fn random_prior(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    loop {
        let w: Vec<f64> = (0..n).map(|_| Exp1.sample(rng)).collect();
        let total: f64 = w.iter().sum();
        let p: Vec<f64> = w.iter().map(|x| x / total).collect();
        if p.iter().all(|&x| x >= 1e-6) {
            // Renormalize so the sum is 1 to round-off.
            let s: f64 = p.iter().sum();
            return p.iter().map(|x| x / s).collect();
        }
    }
}

/// Random family with message dimension 2..=5 and 1..=4 states per bit.
pub fn random_family(seed: u64) -> FamilySpec {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let dim = rng.random_range(2..=5);
    let branch = |rng: &mut ChaCha8Rng| {
        let n = rng.random_range(1..=4);
        FamilyBranch {
            prior: random_prior(rng, n),
            states: (0..n).map(|_| haar_vector(rng, dim)).collect(),
        }
    };
    let b0 = branch(&mut rng);
    let b1 = branch(&mut rng);
    FamilySpec::new(dim, [b0, b1]).expect("generated family is valid")
}
