//! JSON protocol descriptions.
//!
//! ```json
//! {
//!   "name": "example",
//!   "subsystems": [{"dim": 2, "owner": "alice"}, {"dim": 2, "owner": "bob"}],
//!   "initial": {"product": ["plus", "zero"]},
//!   "rounds": [
//!     {"sender": "alice", "unitary": {"gates": [{"gate": "h", "on": [0]}]}, "transfer": [0]}
//!   ],
//!   "final": {
//!     "alice": {"0": [[[1,0],[0,0]],[[0,0],[0,0]]], "1": ...},
//!     "bob": {"0": ..., "1": ..., "abort": ...}
//!   }
//! }
//! ```
//!
//! Complex numbers are `[re, im]`; matrices are lists of rows. `initial` is
//! either the full amplitude list or one factor per subsystem (`"zero"`,
//! `"one"`, `"plus"`, `"minus"` or an amplitude list). A round's `targets`
//! default to every subsystem its sender holds; gate `on` positions index into
//! `targets`, and gates apply in the order listed. A missing `abort`
//! projector means the zero operator.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use super::{CommitRevealShape, InitialState, ProtocolDraft, ProtocolSpec, Round};
use crate::error::{Error, Result};
use crate::qmatrix::{c, embed, gates, Operator, Party, StateVector, SubsystemLayout, C64};

type RawMatrix = Vec<Vec<[f64; 2]>>;

#[derive(Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
struct RawSubsystem {
    dim: usize,
    owner: Party,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    name: Option<String>,
}

#[derive(Deserialize)]
#[serde(untagged)]
enum RawFactor {
    Named(String),
    Amplitudes(Vec<[f64; 2]>),
}

#[derive(Deserialize)]
#[serde(untagged)]
enum RawInitial {
    Full(Vec<[f64; 2]>),
    Product { product: Vec<RawFactor> },
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawGate {
    gate: String,
    on: Vec<usize>,
}

#[derive(Deserialize)]
#[serde(untagged)]
enum RawUnitary {
    Matrix(RawMatrix),
    Gates { gates: Vec<RawGate> },
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawRound {
    sender: Party,
    #[serde(default)]
    targets: Option<Vec<usize>>,
    unitary: RawUnitary,
    #[serde(default)]
    transfer: Vec<usize>,
}

#[derive(Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
struct RawFinal {
    alice: BTreeMap<String, RawMatrix>,
    bob: BTreeMap<String, RawMatrix>,
}

#[derive(Deserialize, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
enum RawShape {
    CommitReveal(CommitRevealShape),
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawProtocol {
    #[serde(default)]
    name: Option<String>,
    subsystems: Vec<RawSubsystem>,
    initial: RawInitial,
    rounds: Vec<RawRound>,
    #[serde(rename = "final")]
    final_: RawFinal,
    #[serde(default)]
    shape: Option<RawShape>,
}

fn parse_err(msg: impl Into<String>) -> Error {
    Error::Parse(msg.into())
}

fn matrix_from_raw(raw: &RawMatrix) -> Result<Operator> {
    let rows: Vec<Vec<C64>> = raw
        .iter()
        .map(|row| row.iter().map(|&[re, im]| c(re, im)).collect())
        .collect();
    let n = rows.len();
    if n == 0 || rows.iter().any(|r| r.len() != n) {
        return Err(parse_err(format!("matrix must be square and non-empty ({n} rows)")));
    }
    Operator::from_rows(&rows)
}

fn matrix_to_raw(op: &Operator) -> RawMatrix {
    (0..op.dim())
        .map(|i| {
            (0..op.dim())
                .map(|j| {
                    let z = op.get(i, j);
                    [z.re, z.im]
                })
                .collect()
        })
        .collect()
}

fn amplitudes(raw: &[[f64; 2]]) -> StateVector {
    StateVector::new(raw.iter().map(|&[re, im]| c(re, im)).collect())
}

fn named_factor(name: &str, dim: usize) -> Result<StateVector> {
    let qubit = |v: StateVector| {
        if dim == 2 {
            Ok(v)
        } else {
            Err(parse_err(format!("\"{name}\" needs a qubit, got dimension {dim}")))
        }
    };
    match name {
        "zero" => Ok(StateVector::basis(dim, 0)),
        "one" => qubit(StateVector::basis(2, 1)),
        "plus" => qubit(gates::plus()),
        "minus" => qubit(gates::minus()),
        other => Err(parse_err(format!("unknown initial factor \"{other}\""))),
    }
}

fn named_gate(name: &str) -> Result<(Operator, usize)> {
    Ok(match name {
        "i" => (Operator::identity(2), 1),
        "x" => (gates::x(), 1),
        "y" => (gates::y(), 1),
        "z" => (gates::z(), 1),
        "h" => (gates::h(), 1),
        "s" => (gates::s(), 1),
        "t" => (gates::t(), 1),
        "cnot" => (gates::cnot(), 2),
        "cz" => (gates::cz(), 2),
        "swap" => (gates::swap(), 2),
        other => return Err(parse_err(format!("unknown gate \"{other}\""))),
    })
}

fn compose_gates(list: &[RawGate], local_dims: &[usize]) -> Result<Operator> {
    if local_dims.iter().any(|&d| d != 2) {
        return Err(parse_err("gate lists need every target to be a qubit"));
    }
    let total: usize = local_dims.iter().product();
    let mut u = Operator::identity(total);
    for g in list {
        let (op, arity) = named_gate(&g.gate)?;
        if g.on.len() != arity || g.on.iter().any(|&q| q >= local_dims.len()) {
            return Err(parse_err(format!(
                "gate \"{}\" needs {arity} distinct positions within the round's targets",
                g.gate
            )));
        }
        let full = embed(&op, &g.on, local_dims).map_err(|e| parse_err(e.to_string()))?;
        u = &full * &u;
    }
    Ok(u)
}

fn projector_set(raw: &BTreeMap<String, RawMatrix>, party: &str) -> Result<[Operator; 3]> {
    for key in raw.keys() {
        if !["0", "1", "abort"].contains(&key.as_str()) {
            return Err(parse_err(format!("{party}: unknown outcome \"{key}\"")));
        }
    }
    let get = |k: &str| {
        raw.get(k)
            .ok_or_else(|| parse_err(format!("{party}: missing projector \"{k}\"")))
            .and_then(matrix_from_raw)
    };
    let p0 = get("0")?;
    let p1 = get("1")?;
    let abort = match raw.get("abort") {
        Some(m) => matrix_from_raw(m)?,
        None => Operator::zeros(p0.dim()),
    };
    Ok([p0, p1, abort])
}

/// Parse and validate a JSON protocol description.
pub fn parse_protocol_json(text: &str) -> Result<ProtocolSpec> {
    let raw: RawProtocol = serde_json::from_str(text)?;
    if raw.subsystems.is_empty() {
        return Err(parse_err("at least one subsystem is required"));
    }
    let dims: Vec<usize> = raw.subsystems.iter().map(|s| s.dim).collect();
    let owners: Vec<Party> = raw.subsystems.iter().map(|s| s.owner).collect();
    let layout = SubsystemLayout::new(dims.clone(), owners).map_err(|e| parse_err(e.to_string()))?;
    let names: Vec<String> = if raw.subsystems.iter().all(|s| s.name.is_none()) {
        vec![]
    } else {
        raw.subsystems
            .iter()
            .enumerate()
            .map(|(i, s)| s.name.clone().unwrap_or_else(|| format!("s{i}")))
            .collect()
    };

    let initial = match &raw.initial {
        RawInitial::Full(a) => amplitudes(a),
        RawInitial::Product { product } => {
            if product.len() != dims.len() {
                return Err(parse_err("initial product needs one factor per subsystem"));
            }
            let mut full = StateVector::basis(1, 0);
            for (f, &d) in product.iter().zip(&dims) {
                let v = match f {
                    RawFactor::Named(n) => named_factor(n, d)?,
                    RawFactor::Amplitudes(a) => amplitudes(a),
                };
                if v.dim() != d {
                    return Err(parse_err(format!("initial factor has dimension {}, expected {d}", v.dim())));
                }
                full = full.kron(&v);
            }
            full
        }
    };

    let mut owners_now = layout.clone();
    let mut rounds = Vec::with_capacity(raw.rounds.len());
    for (r, round) in raw.rounds.iter().enumerate() {
        let targets = match &round.targets {
            Some(t) => t.clone(),
            None => owners_now.owned_by(round.sender),
        };
        if targets.iter().any(|&t| t >= dims.len()) {
            return Err(parse_err(format!("round {}: target out of range", r + 1)));
        }
        let local_dims: Vec<usize> = targets.iter().map(|&t| dims[t]).collect();
        let unitary = match &round.unitary {
            RawUnitary::Matrix(m) => matrix_from_raw(m)?,
            RawUnitary::Gates { gates } => compose_gates(gates, &local_dims)?,
        };
        for &t in &round.transfer {
            if t >= dims.len() {
                return Err(parse_err(format!("round {}: transfer out of range", r + 1)));
            }
            owners_now = owners_now.with_owner(t, round.sender.other());
        }
        rounds.push(Round {
            sender: round.sender,
            targets,
            unitary,
            transfer: round.transfer.clone(),
        });
    }

    ProtocolSpec::new(ProtocolDraft {
        name: raw.name.unwrap_or_else(|| "protocol".into()),
        layout,
        subsystem_names: names,
        initial: InitialState::Full(initial),
        rounds,
        final_alice: projector_set(&raw.final_.alice, "alice")?,
        final_bob: projector_set(&raw.final_.bob, "bob")?,
        shape: raw.shape.map(|RawShape::CommitReveal(s)| s),
    })
}

#[derive(Serialize)]
struct RoundOut {
    sender: Party,
    targets: Vec<usize>,
    unitary: RawMatrix,
    transfer: Vec<usize>,
}

#[derive(Serialize)]
struct ProtocolOut {
    name: String,
    subsystems: Vec<RawSubsystem>,
    initial: Vec<[f64; 2]>,
    rounds: Vec<RoundOut>,
    #[serde(rename = "final")]
    final_: RawFinal,
    #[serde(skip_serializing_if = "Option::is_none")]
    shape: Option<RawShape>,
}

fn projectors_out(ps: &[Operator; 3]) -> BTreeMap<String, RawMatrix> {
    ["0", "1", "abort"]
        .iter()
        .zip(ps)
        .map(|(k, p)| (k.to_string(), matrix_to_raw(p)))
        .collect()
}

/// Serialize a spec in the format [`parse_protocol_json`] reads.
pub fn protocol_to_json(spec: &ProtocolSpec) -> Value {
    let layout = spec.layout();
    let out = ProtocolOut {
        name: spec.name().to_string(),
        subsystems: (0..layout.len())
            .map(|i| RawSubsystem {
                dim: layout.dims()[i],
                owner: layout.owners()[i],
                name: Some(spec.subsystem_names()[i].clone()),
            })
            .collect(),
        initial: spec
            .initial_state()
            .amplitudes()
            .iter()
            .map(|z| [z.re, z.im])
            .collect(),
        rounds: spec
            .rounds()
            .iter()
            .map(|r| RoundOut {
                sender: r.sender,
                targets: r.targets.clone(),
                unitary: matrix_to_raw(&r.unitary),
                transfer: r.transfer.clone(),
            })
            .collect(),
        final_: RawFinal {
            alice: projectors_out(&spec.measurement(Party::Alice).projectors),
            bob: projectors_out(&spec.measurement(Party::Bob).projectors),
        },
        shape: spec.shape().cloned().map(RawShape::CommitReveal),
    };
    serde_json::to_value(out).expect("plain data serializes")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::protocol::{exact_outcome_distribution, section3_spec};

    const EPR_COIN: &str = r#"{
        "name": "shared-coin",
        "subsystems": [{"dim": 2, "owner": "alice"}, {"dim": 2, "owner": "bob"}],
        "initial": {"product": ["zero", "zero"]},
        "rounds": [
            {"sender": "alice", "targets": [0], "unitary": {"gates": [{"gate": "h", "on": [0]}]}, "transfer": []},
            {"sender": "alice", "unitary": [[[1,0],[0,0]],[[0,0],[1,0]]], "transfer": [0]},
            {"sender": "bob", "unitary": {"gates": [{"gate": "cnot", "on": [0, 1]}]}, "transfer": [1]}
        ],
        "final": {
            "alice": {"0": [[[1,0],[0,0]],[[0,0],[0,0]]], "1": [[[0,0],[0,0]],[[0,0],[1,0]]]},
            "bob": {"0": [[[1,0],[0,0]],[[0,0],[0,0]]], "1": [[[0,0],[0,0]],[[0,0],[1,0]]]}
        }
    }"#;

    #[test]
    fn parses_gate_lists_and_defaults() {
        let spec = parse_protocol_json(EPR_COIN).unwrap();
        assert_eq!(spec.num_rounds(), 3);
        assert_eq!(spec.rounds()[1].targets, vec![0]);
        let d = exact_outcome_distribution(&spec);
        assert!((d.zero - 0.5).abs() < 1e-12 && d.abort.abs() < 1e-12);
    }

    #[test]
    fn round_trip_preserves_section3() {
        let spec = section3_spec();
        let text = protocol_to_json(&spec).to_string();
        let back = parse_protocol_json(&text).unwrap();
        assert_eq!(back.dims(), spec.dims());
        assert!(back.final_state().max_abs_diff(spec.final_state()) < 1e-12);
        assert!(back.shape().is_some());
    }

    #[test]
    fn malformed_inputs_are_parse_errors() {
        assert!(parse_protocol_json("{").unwrap_err().is_parse());
        let unknown_gate = EPR_COIN.replace("\"h\"", "\"q\"");
        assert!(parse_protocol_json(&unknown_gate).unwrap_err().is_parse());
        let ragged = EPR_COIN.replace("[[[1,0],[0,0]],[[0,0],[1,0]]]", "[[[1,0],[0,0]],[[0,0]]]");
        assert!(parse_protocol_json(&ragged).unwrap_err().is_parse());
    }

    #[test]
    fn non_unitary_round_is_invariant_error() {
        let text = EPR_COIN.replace("[[[1,0],[0,0]],[[0,0],[1,0]]]", "[[[1,0],[0,0]],[[0,0],[2,0]]]");
        let err = parse_protocol_json(&text).unwrap_err();
        assert!(!err.is_parse());
    }
}
