//! Report serialization: every float is rounded to 12 significant digits so
//! outputs are stable across platforms and byte-identical across reruns.

use serde::Serialize;
use serde_json::{Map, Value};

use crate::error::Result;

pub const TOOL: &str = "coinflip-lab";
pub const VERSION: &str = env!("CARGO_PKG_VERSION");
pub const SIG_DIGITS: usize = 12;

/// `x` rounded to [`SIG_DIGITS`] significant digits.
pub fn round_sig(x: f64) -> f64 {
    if !x.is_finite() || x == 0.0 {
        return x;
    }
    let s = format!("{:.*e}", SIG_DIGITS - 1, x);
    let r: f64 = s.parse().expect("formatted float parses");
    // Avoid emitting "-0.0".
    if r == 0.0 {
        0.0
    } else {
        r
    }
}

/// Shortest decimal form of `x` after rounding.
pub fn fmt_float(x: f64) -> String {
    format!("{}", round_sig(x))
}

/// Round every non-integer number in `value`.
pub fn round_floats(value: Value) -> Value {
    match value {
        Value::Number(n) if n.is_f64() => {
            let x = round_sig(n.as_f64().expect("f64 number"));
            serde_json::Number::from_f64(x).map_or(Value::Null, Value::Number)
        }
        Value::Array(items) => Value::Array(items.into_iter().map(round_floats).collect()),
        Value::Object(map) => Value::Object(map.into_iter().map(|(k, v)| (k, round_floats(v))).collect()),
        other => other,
    }
}

/// Run metadata stamped on every report.
#[derive(Clone, Debug, Serialize)]
pub struct Meta {
    pub tool: &'static str,
    pub version: &'static str,
    pub command: String,
    pub seed: u64,
    pub trials: u64,
}

impl Meta {
    pub fn new(command: &str, seed: u64, trials: u64) -> Self {
        Meta {
            tool: TOOL,
            version: VERSION,
            command: command.to_string(),
            seed,
            trials,
        }
    }
}

/// Merge `meta` and the fields of `body` into one rounded JSON object.
pub fn build_report<T: Serialize>(meta: &Meta, body: &T) -> Result<Value> {
    let mut out = Map::new();
    if let Value::Object(m) = serde_json::to_value(meta)? {
        out.extend(m);
    }
    match serde_json::to_value(body)? {
        Value::Object(m) => out.extend(m),
        other => {
            out.insert("result".into(), other);
        }
    }
    Ok(round_floats(Value::Object(out)))
}

pub fn to_pretty(value: &Value) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("JSON values serialize");
    s.push('\n');
    s
}

#[cfg(test)]
mod tests {
    use super::*;
    use serde_json::json;

    #[test]
    fn rounds_to_twelve_digits() {
        assert_eq!(round_sig(0.1 + 0.2), 0.3);
        assert_eq!(round_sig(0.749999999999999), 0.75);
        assert_eq!(round_sig(1.234567890123456e-7), 1.23456789012e-7);
        assert_eq!(round_sig(-1e-20), -1e-20);
        assert_eq!(fmt_float(0.25), "0.25");
    }

    #[test]
    fn only_floats_are_touched() {
        let v = round_floats(json!({"n": 100000u64, "x": [0.30000000000000004, 2], "s": "a"}));
        assert_eq!(v, json!({"n": 100000u64, "x": [0.3, 2], "s": "a"}));
    }
}
