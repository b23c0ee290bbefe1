//! JSON formats for behaviours, strategies and noise tables.
//!
//! Probabilities are JSON numbers (float mode) or `"p/q"` strings (exact mode);
//! a single document may not mix the two. Complex matrix entries are `[re, im]`.
//!
//! ```json
//! {"kind": "pm", "scenario": {"n_inputs_a": 2, "n_inputs_b": 1, "n_outputs": 2},
//!  "probs": [[["1"], ["1/2"]], [["0"], ["1/2"]]]}
//! ```
//! `probs` is indexed `[b][x][y]` for prepare-and-measure and `[a][b][x][y]` for Bell.

use num_complex::Complex64;
use serde_json::{json, Map, Value};

use crate::behaviour::{BellBehaviour, BellScenario, Behaviour, PmBehaviour, PmScenario};
use crate::error::{Error, Result};
use crate::noise::NoiseModel;
use crate::quantum::CMatrix;
use crate::scalar::{homogeneous_kind, Scalar};
use crate::strategy::{BellQuantumStrategy, ClassicalPmStrategy, QuantumPmStrategy};

fn parse_err(msg: impl Into<String>) -> Error {
    Error::Parse(msg.into())
}

fn field<'a>(obj: &'a Value, name: &str) -> Result<&'a Value> {
    obj.get(name).ok_or_else(|| parse_err(format!("missing field {name:?}")))
}

fn usize_field(obj: &Value, name: &str) -> Result<usize> {
    field(obj, name)?
        .as_u64()
        .map(|v| v as usize)
        .ok_or_else(|| parse_err(format!("field {name:?} must be a nonnegative integer")))
}

fn str_field<'a>(obj: &'a Value, name: &str) -> Result<&'a str> {
    field(obj, name)?.as_str().ok_or_else(|| parse_err(format!("field {name:?} must be a string")))
}

fn array<'a>(v: &'a Value, what: &str) -> Result<&'a Vec<Value>> {
    v.as_array().ok_or_else(|| parse_err(format!("{what} must be an array")))
}

pub fn parse_scalar(v: &Value) -> Result<Scalar> {
    match v {
        Value::Number(n) => n.as_f64().map(Scalar::Float).ok_or_else(|| parse_err(format!("bad number {n}"))),
        Value::String(s) => Scalar::parse_rational(s),
        other => Err(parse_err(format!("expected a number or \"p/q\" string, got {other}"))),
    }
}

pub fn scalar_to_json(s: &Scalar) -> Value {
    match s {
        Scalar::Exact(r) => Value::String(r.to_string()),
        Scalar::Float(f) => json!(f),
    }
}

/// Parses a nested array of the given shape into a flat row-major vector.
fn parse_nested(v: &Value, shape: &[usize], what: &str, out: &mut Vec<Scalar>) -> Result<()> {
    if shape.is_empty() {
        out.push(parse_scalar(v)?);
        return Ok(());
    }
    let items = array(v, what)?;
    if items.len() != shape[0] {
        return Err(Error::Structural(format!(
            "{what} has length {} where {} was expected",
            items.len(),
            shape[0]
        )));
    }
    for item in items {
        parse_nested(item, &shape[1..], what, out)?;
    }
    Ok(())
}

fn homogeneous(values: &[Scalar]) -> Result<()> {
    if homogeneous_kind(values).is_none() {
        return Err(parse_err("document mixes exact (string) and float (number) probabilities"));
    }
    Ok(())
}

fn nested_json(values: &[Scalar], shape: &[usize]) -> Value {
    if shape.is_empty() {
        return scalar_to_json(&values[0]);
    }
    let stride: usize = shape[1..].iter().product();
    Value::Array((0..shape[0]).map(|i| nested_json(&values[i * stride..(i + 1) * stride], &shape[1..])).collect())
}

pub fn parse_behaviour(text: &str) -> Result<Behaviour> {
    let v: Value = serde_json::from_str(text).map_err(|e| parse_err(format!("invalid JSON: {e}")))?;
    behaviour_from_value(&v)
}

pub fn behaviour_from_value(v: &Value) -> Result<Behaviour> {
    let scenario = field(v, "scenario")?;
    let probs = field(v, "probs")?;
    let mut flat = Vec::new();
    match str_field(v, "kind")? {
        "pm" => {
            let outputs = scenario.get("n_outputs").map_or(Some(2), Value::as_u64);
            if outputs != Some(2) {
                return Err(Error::InvalidScenario("prepare-and-measure outputs must be binary (n_outputs = 2)".into()));
            }
            let sc = PmScenario::new(usize_field(scenario, "n_inputs_a")?, usize_field(scenario, "n_inputs_b")?)?;
            parse_nested(probs, &[2, sc.n_inputs_a(), sc.n_inputs_b()], "probs", &mut flat)?;
            homogeneous(&flat)?;
            Ok(Behaviour::Pm(PmBehaviour::new(sc, flat)?))
        }
        "bell" => {
            let sc = BellScenario::new(usize_field(scenario, "m")?, usize_field(scenario, "n")?)?;
            let (m, n) = (sc.m(), sc.n());
            parse_nested(probs, &[n, n, m, m], "probs", &mut flat)?;
            homogeneous(&flat)?;
            Ok(Behaviour::Bell(BellBehaviour::new(sc, flat)?))
        }
        other => Err(parse_err(format!("unknown behaviour kind {other:?}"))),
    }
}

pub fn behaviour_to_value(beh: &Behaviour) -> Value {
    match beh {
        Behaviour::Pm(p) => {
            let sc = p.scenario();
            json!({
                "kind": "pm",
                "scenario": {"n_inputs_a": sc.n_inputs_a(), "n_inputs_b": sc.n_inputs_b(), "n_outputs": 2},
                "probs": nested_json(p.probs(), &[2, sc.n_inputs_a(), sc.n_inputs_b()]),
            })
        }
        Behaviour::Bell(p) => {
            let sc = p.scenario();
            let (m, n) = (sc.m(), sc.n());
            json!({
                "kind": "bell",
                "scenario": {"m": m, "n": n},
                "probs": nested_json(p.probs(), &[n, n, m, m]),
            })
        }
    }
}

pub fn behaviour_to_string(beh: &Behaviour) -> String {
    serde_json::to_string_pretty(&behaviour_to_value(beh)).expect("serializable")
}

/// A strategy document of any kind.
#[derive(Clone, Debug, PartialEq)]
pub enum Strategy {
    ClassicalPm(ClassicalPmStrategy),
    QuantumPm(QuantumPmStrategy),
    Bell(BellQuantumStrategy),
}

fn parse_complex(v: &Value) -> Result<Complex64> {
    let pair = array(v, "complex entry")?;
    match pair.as_slice() {
        [re, im] => match (re.as_f64(), im.as_f64()) {
            (Some(re), Some(im)) => Ok(Complex64::new(re, im)),
            _ => Err(parse_err("complex entries must be [re, im] numbers")),
        },
        _ => Err(parse_err("complex entries must be [re, im] pairs")),
    }
}

fn parse_cmatrix(v: &Value, d: usize, what: &str) -> Result<CMatrix> {
    let rows = array(v, what)?;
    if rows.len() != d {
        return Err(Error::Structural(format!("{what} has {} rows, expected {d}", rows.len())));
    }
    let mut m = CMatrix::zeros(d, d);
    for (i, row) in rows.iter().enumerate() {
        let row = array(row, what)?;
        if row.len() != d {
            return Err(Error::Structural(format!("{what} row {i} has {} entries, expected {d}", row.len())));
        }
        for (j, z) in row.iter().enumerate() {
            m[(i, j)] = parse_complex(z)?;
        }
    }
    Ok(m)
}

fn cmatrix_json(m: &CMatrix) -> Value {
    Value::Array(
        (0..m.nrows())
            .map(|i| Value::Array((0..m.ncols()).map(|j| json!([m[(i, j)].re, m[(i, j)].im])).collect()))
            .collect(),
    )
}

fn parse_measurements(v: &Value, d: usize, what: &str) -> Result<Vec<Vec<CMatrix>>> {
    array(v, what)?
        .iter()
        .enumerate()
        .map(|(i, ops)| {
            array(ops, what)?
                .iter()
                .enumerate()
                .map(|(k, e)| parse_cmatrix(e, d, &format!("{what}[{i}][{k}]")))
                .collect()
        })
        .collect()
}

fn measurements_json(ms: &[Vec<CMatrix>]) -> Value {
    Value::Array(ms.iter().map(|ops| Value::Array(ops.iter().map(cmatrix_json).collect())).collect())
}

fn parse_table(v: &Value, what: &str) -> Result<Vec<Vec<Scalar>>> {
    array(v, what)?
        .iter()
        .map(|row| array(row, what)?.iter().map(parse_scalar).collect())
        .collect()
}

fn table_json(t: &[Vec<Scalar>]) -> Value {
    Value::Array(t.iter().map(|r| Value::Array(r.iter().map(scalar_to_json).collect())).collect())
}

pub fn parse_strategy(text: &str) -> Result<Strategy> {
    let v: Value = serde_json::from_str(text).map_err(|e| parse_err(format!("invalid JSON: {e}")))?;
    match str_field(&v, "kind")? {
        "classical_pm" => {
            let d = usize_field(&v, "d")?;
            let sender = parse_table(field(&v, "sender")?, "sender")?;
            let responder = array(field(&v, "responder")?, "responder")?
                .iter()
                .map(|t| parse_table(t, "responder"))
                .collect::<Result<Vec<_>>>()?;
            let all: Vec<Scalar> = sender.iter().flatten().chain(responder.iter().flatten().flatten()).cloned().collect();
            homogeneous(&all)?;
            Ok(Strategy::ClassicalPm(ClassicalPmStrategy::new(d, sender, responder)?))
        }
        "quantum_pm" => {
            let d = usize_field(&v, "d")?;
            let states = array(field(&v, "states")?, "states")?
                .iter()
                .enumerate()
                .map(|(x, s)| parse_cmatrix(s, d, &format!("states[{x}]")))
                .collect::<Result<Vec<_>>>()?;
            let povms = parse_measurements(field(&v, "povms")?, d, "povms")?;
            Ok(Strategy::QuantumPm(QuantumPmStrategy::new(d, states, povms)?))
        }
        "bell" => {
            let (da, db) = (usize_field(&v, "d_a")?, usize_field(&v, "d_b")?);
            let state = parse_cmatrix(field(&v, "state")?, da * db, "state")?;
            let alice = parse_measurements(field(&v, "alice")?, da, "alice")?;
            let bob = parse_measurements(field(&v, "bob")?, db, "bob")?;
            Ok(Strategy::Bell(BellQuantumStrategy::new(da, db, state, alice, bob)?))
        }
        other => Err(parse_err(format!("unknown strategy kind {other:?}"))),
    }
}

pub fn strategy_to_value(st: &Strategy) -> Value {
    match st {
        Strategy::ClassicalPm(s) => json!({
            "kind": "classical_pm",
            "d": s.d(),
            "sender": table_json(&s.sender_table()),
            "responder": Value::Array(s.responder_table().iter().map(|t| table_json(t)).collect()),
        }),
        Strategy::QuantumPm(s) => {
            let mut obj = Map::new();
            obj.insert("kind".into(), json!("quantum_pm"));
            obj.insert("d".into(), json!(s.d()));
            obj.insert("states".into(), Value::Array(s.states().iter().map(cmatrix_json).collect()));
            obj.insert("povms".into(), measurements_json(s.povms()));
            if let Some(law) = s.povm_law() {
                obj.insert("povm_law".into(), serde_json::to_value(law).expect("serializable"));
            }
            Value::Object(obj)
        }
        Strategy::Bell(s) => {
            let mut obj = Map::new();
            obj.insert("kind".into(), json!("bell"));
            obj.insert("d_a".into(), json!(s.d_a()));
            obj.insert("d_b".into(), json!(s.d_b()));
            obj.insert("state".into(), cmatrix_json(s.state()));
            obj.insert("alice".into(), measurements_json(s.meas_a()));
            obj.insert("bob".into(), measurements_json(s.meas_b()));
            if let Some((a, b)) = s.povm_laws() {
                obj.insert("povm_laws".into(), json!([a, b]));
            }
            Value::Object(obj)
        }
    }
}

/// `{"kind": "pm_measurement", "table": [[p0, p1], ...]}` indexed `[y][b]`, or
/// `{"kind": "bell_product", "alice": [[...]], "bob": [[...]]}` indexed `[x][a]`, `[y][b]`.
pub fn parse_noise(text: &str) -> Result<NoiseModel> {
    let v: Value = serde_json::from_str(text).map_err(|e| parse_err(format!("invalid JSON: {e}")))?;
    let model = match str_field(&v, "kind")? {
        "pm_measurement" => NoiseModel::PmMeasurement { table: parse_table(field(&v, "table")?, "table")? },
        "bell_product" => NoiseModel::BellProduct {
            alice: parse_table(field(&v, "alice")?, "alice")?,
            bob: parse_table(field(&v, "bob")?, "bob")?,
        },
        other => return Err(parse_err(format!("unknown noise kind {other:?}"))),
    };
    model.validate()?;
    Ok(model)
}

pub fn noise_to_value(model: &NoiseModel) -> Value {
    match model {
        NoiseModel::PmMeasurement { table } => json!({"kind": "pm_measurement", "table": table_json(table)}),
        NoiseModel::BellProduct { alice, bob } => {
            json!({"kind": "bell_product", "alice": table_json(alice), "bob": table_json(bob)})
        }
    }
}
