//! JSON documents for chaos elements and reports.
//!
//! A chaos document looks like
//!
//! ```json
//! {"grid": {"horizon": 1, "cells": 2},
//!  "degrees": {"0": [0.5, 0], "2": [[[1, 0], [0, 0]], [[0, 0], [1, 0]]]}}
//! ```
//!
//! Degree `n` is a row-major array nested `n` deep with every axis of length
//! `cells`; leaves are `[re, im]` pairs. Emitted floats always carry 17
//! significant digits so reports are byte-stable.

use std::collections::BTreeMap;
use std::str::FromStr;

use num_complex::Complex;
use serde::Serialize;
use serde_json::{Map, Number, Value};
use thiserror::Error;

use crate::chaos::ChaosElement;
use crate::error::ChaosError;
use crate::grid::{CoeffTensor, GridSpec};
use crate::reduction::{ReductionReport, ReductionStep};
use crate::scalar::{Cx, Real};

#[derive(Debug, Error)]
pub enum DocumentError {
    #[error("malformed JSON: {0}")]
    Json(#[from] serde_json::Error),
    #[error("schema error: {0}")]
    Schema(String),
    #[error(transparent)]
    Chaos(#[from] ChaosError),
}

fn schema(msg: impl Into<String>) -> DocumentError {
    DocumentError::Schema(msg.into())
}

/// Formats `x` with 17 significant digits as a JSON number.
pub fn fixed_number(x: f64) -> Value {
    if !x.is_finite() {
        return Value::Null;
    }
    let text = format!("{x:.16e}");
    Value::Number(Number::from_str(&text).expect("scientific notation is a JSON number"))
}

/// Rewrites every non-integer number in `value` with [`fixed_number`].
pub fn canonical(value: Value) -> Value {
    match value {
        Value::Number(n) if !(n.is_u64() || n.is_i64()) => {
            fixed_number(n.as_f64().unwrap_or(f64::NAN))
        }
        Value::Array(items) => Value::Array(items.into_iter().map(canonical).collect()),
        Value::Object(map) => Value::Object(map.into_iter().map(|(k, v)| (k, canonical(v))).collect()),
        other => other,
    }
}

/// Pretty JSON with canonical floats and a trailing newline.
pub fn to_canonical_string<S: Serialize>(value: &S) -> Result<String, DocumentError> {
    let v = canonical(serde_json::to_value(value)?);
    let mut text = serde_json::to_string_pretty(&v)?;
    text.push('\n');
    Ok(text)
}

fn complex_value<T: Real>(c: Cx<T>) -> Value {
    Value::Array(vec![
        fixed_number(c.re.to_f64_lossy()),
        fixed_number(c.im.to_f64_lossy()),
    ])
}

fn nested_value<T: Real>(coeffs: &[Cx<T>], depth: usize, cells: usize) -> Value {
    if depth == 0 {
        return complex_value(coeffs[0]);
    }
    let stride = coeffs.len() / cells;
    Value::Array(
        coeffs
            .chunks(stride)
            .map(|chunk| nested_value(chunk, depth - 1, cells))
            .collect(),
    )
}

/// Nested-array form of one kernel.
pub fn tensor_to_value<T: Real>(f: &CoeffTensor<T>) -> Value {
    nested_value(f.coeffs(), f.degree(), f.grid().cells())
}

fn grid_value(grid: &GridSpec) -> Value {
    let mut g = Map::new();
    let horizon = grid.horizon();
    let horizon = if horizon.fract() == 0.0 && horizon < 9.0e15 {
        Value::from(horizon as u64)
    } else {
        fixed_number(horizon)
    };
    g.insert("horizon".into(), horizon);
    g.insert("cells".into(), Value::from(grid.cells()));
    Value::Object(g)
}

/// `degrees` map of a chaos element, in increasing degree.
pub fn degrees_value<T: Real>(y: &ChaosElement<T>) -> Value {
    let mut degrees = Map::new();
    for (n, f) in y.terms() {
        degrees.insert(n.to_string(), tensor_to_value(f));
    }
    Value::Object(degrees)
}

pub fn chaos_to_value<T: Real>(y: &ChaosElement<T>) -> Value {
    let mut doc = Map::new();
    doc.insert("grid".into(), grid_value(y.grid()));
    doc.insert("degrees".into(), degrees_value(y));
    Value::Object(doc)
}

pub fn emit_chaos_json<T: Real>(y: &ChaosElement<T>) -> String {
    let mut text = serde_json::to_string_pretty(&chaos_to_value(y)).expect("values serialize");
    text.push('\n');
    text
}

fn parse_pair<T: Real>(v: &Value, path: &str) -> Result<Cx<T>, DocumentError> {
    let items = v
        .as_array()
        .filter(|a| a.len() == 2)
        .ok_or_else(|| schema(format!("{path}: expected [re, im] pair")))?;
    let re = items[0]
        .as_f64()
        .ok_or_else(|| schema(format!("{path}: real part is not a number")))?;
    let im = items[1]
        .as_f64()
        .ok_or_else(|| schema(format!("{path}: imaginary part is not a number")))?;
    Ok(Complex::new(T::of(re), T::of(im)))
}

fn collect_nested<T: Real>(
    v: &Value,
    depth: usize,
    cells: usize,
    path: &str,
    out: &mut Vec<Cx<T>>,
) -> Result<(), DocumentError> {
    if depth == 0 {
        out.push(parse_pair(v, path)?);
        return Ok(());
    }
    let items = v
        .as_array()
        .ok_or_else(|| schema(format!("{path}: expected an array ({depth} more levels)")))?;
    if items.len() != cells {
        return Err(schema(format!(
            "{path}: axis length {} does not match cells = {cells}",
            items.len()
        )));
    }
    for (i, item) in items.iter().enumerate() {
        collect_nested(item, depth - 1, cells, &format!("{path}[{i}]"), out)?;
    }
    Ok(())
}

/// Parses one kernel of the given degree from its nested-array form.
pub fn tensor_from_value<T: Real>(
    grid: GridSpec,
    degree: usize,
    v: &Value,
    path: &str,
) -> Result<CoeffTensor<T>, DocumentError> {
    let mut coeffs = Vec::with_capacity(grid.tensor_len(degree));
    collect_nested(v, degree, grid.cells(), path, &mut coeffs)?;
    Ok(CoeffTensor::from_coeffs(grid, degree, coeffs)?)
}

fn parse_degree_key(key: &str) -> Result<usize, DocumentError> {
    if key.is_empty() || !key.bytes().all(|b| b.is_ascii_digit()) || (key.len() > 1 && key.starts_with('0')) {
        return Err(schema(format!("degree key {key:?} is not a decimal integer")));
    }
    key.parse()
        .map_err(|_| schema(format!("degree key {key:?} out of range")))
}

/// Builds a chaos element from a `degrees` map on a known grid.
pub fn chaos_from_degrees<T: Real>(grid: GridSpec, degrees: &Value) -> Result<ChaosElement<T>, DocumentError> {
    let map = degrees
        .as_object()
        .ok_or_else(|| schema("degrees must be an object"))?;
    let mut parsed = BTreeMap::new();
    for (key, v) in map {
        let n = parse_degree_key(key)?;
        parsed.insert(n, tensor_from_value(grid, n, v, &format!("degrees.{key}"))?);
    }
    let mut y = ChaosElement::zero(grid);
    for f in parsed.into_values() {
        y.set_component(f)?;
    }
    Ok(y)
}

fn parse_grid(v: &Value) -> Result<GridSpec, DocumentError> {
    let horizon = v
        .get("horizon")
        .and_then(Value::as_f64)
        .ok_or_else(|| schema("grid.horizon must be a number"))?;
    let cells = v
        .get("cells")
        .and_then(Value::as_u64)
        .ok_or_else(|| schema("grid.cells must be a non-negative integer"))?;
    Ok(GridSpec::new(horizon, cells as usize)?)
}

pub fn chaos_from_value<T: Real>(doc: &Value) -> Result<ChaosElement<T>, DocumentError> {
    let grid = parse_grid(doc.get("grid").ok_or_else(|| schema("missing grid"))?)?;
    let degrees = doc.get("degrees").ok_or_else(|| schema("missing degrees"))?;
    chaos_from_degrees(grid, degrees)
}

pub fn parse_chaos_json<T: Real>(text: &str) -> Result<ChaosElement<T>, DocumentError> {
    let doc: Value = serde_json::from_str(text)?;
    chaos_from_value(&doc)
}

/// Parses `{"steps": [{"p": <degrees map>, "h": [[re, im], ...]}, ...]}`;
/// `p` and `h` live on `grid`.
pub fn parse_steps_json<T: Real>(text: &str, grid: GridSpec) -> Result<Vec<ReductionStep<T>>, DocumentError> {
    let doc: Value = serde_json::from_str(text)?;
    let steps = doc
        .get("steps")
        .and_then(Value::as_array)
        .ok_or_else(|| schema("steps must be an array"))?;
    steps
        .iter()
        .enumerate()
        .map(|(i, step)| {
            let p = step
                .get("p")
                .ok_or_else(|| schema(format!("steps[{i}]: missing p")))?;
            let h = step
                .get("h")
                .ok_or_else(|| schema(format!("steps[{i}]: missing h")))?;
            let p = chaos_from_degrees(grid, p)?;
            let h = tensor_from_value(grid, 1, h, &format!("steps[{i}].h"))?;
            Ok(ReductionStep::new(p, h)?)
        })
        .collect()
}

pub fn steps_to_value<T: Real>(steps: &[ReductionStep<T>]) -> Value {
    let items = steps
        .iter()
        .map(|s| {
            let mut m = Map::new();
            m.insert("p".into(), degrees_value(&s.p));
            m.insert("h".into(), tensor_to_value(&s.h));
            Value::Object(m)
        })
        .collect();
    let mut doc = Map::new();
    doc.insert("steps".into(), Value::Array(items));
    Value::Object(doc)
}

pub fn reduction_report_value<T: Real>(report: &ReductionReport<T>) -> Value {
    let mut m = Map::new();
    m.insert("final_scalar".into(), complex_value(report.final_scalar));
    m.insert("predicted_scalar".into(), complex_value(report.predicted_scalar));
    m.insert("residual".into(), fixed_number(report.residual().to_f64_lossy()));
    m.insert(
        "intermediate_top_degrees".into(),
        Value::Array(
            report
                .intermediate_top_degrees
                .iter()
                .map(|d| d.map(Value::from).unwrap_or(Value::Null))
                .collect(),
        ),
    );
    m.insert(
        "intermediates".into(),
        Value::Array(report.intermediates.iter().map(degrees_value).collect()),
    );
    m.insert("steps".into(), steps_to_value(&report.steps)["steps"].clone());
    Value::Object(m)
}

#[cfg(test)]
mod tests {
    use super::*;

    type Y = ChaosElement<f64>;

    #[test]
    fn parses_degree_one_example() {
        let y: Y = parse_chaos_json(r#"{"grid":{"horizon":1,"cells":1},"degrees":{"1":[[1,0]]}}"#).unwrap();
        let g = GridSpec::new(1.0, 1).unwrap();
        assert_eq!(y, Y::from_tensor(CoeffTensor::basis(g, 0).unwrap()));
    }

    #[test]
    fn empty_degrees_is_zero() {
        let y: Y = parse_chaos_json(r#"{"grid":{"horizon":2,"cells":3},"degrees":{}}"#).unwrap();
        assert!(y.is_zero());
        assert_eq!(y.grid().cells(), 3);
    }

    #[test]
    fn shape_errors() {
        let bad_axis = r#"{"grid":{"horizon":1,"cells":2},"degrees":{"2":[[[1,0],[0,0],[0,0]],[[0,0],[1,0],[0,0]]]}}"#;
        assert!(matches!(parse_chaos_json::<f64>(bad_axis), Err(DocumentError::Schema(_))));
        let bad_depth = r#"{"grid":{"horizon":1,"cells":2},"degrees":{"2":[[1,0],[0,0]]}}"#;
        assert!(matches!(parse_chaos_json::<f64>(bad_depth), Err(DocumentError::Schema(_))));
        let bad_key = r#"{"grid":{"horizon":1,"cells":2},"degrees":{"x":[1,0]}}"#;
        assert!(matches!(parse_chaos_json::<f64>(bad_key), Err(DocumentError::Schema(_))));
        assert!(matches!(parse_chaos_json::<f64>("{not json"), Err(DocumentError::Json(_))));
        let bad_grid = r#"{"grid":{"horizon":0,"cells":2},"degrees":{}}"#;
        assert!(matches!(parse_chaos_json::<f64>(bad_grid), Err(DocumentError::Chaos(_))));
    }

    #[test]
    fn degree_zero_is_a_pair() {
        let y: Y = parse_chaos_json(r#"{"grid":{"horizon":1,"cells":2},"degrees":{"0":[2.5,-1]}}"#).unwrap();
        assert_eq!(y.trace(), Complex::new(2.5, -1.0));
    }

    #[test]
    fn emits_fixed_precision() {
        assert_eq!(fixed_number(0.1).to_string(), "1.0000000000000001e-1");
        assert_eq!(fixed_number(-2.0).to_string(), "-2.0000000000000000e+0");
        let v = canonical(serde_json::json!({"a": 1, "b": 0.5, "c": [0.25]}));
        assert_eq!(
            serde_json::to_string(&v).unwrap(),
            r#"{"a":1,"b":5.0000000000000000e-1,"c":[2.5000000000000000e-1]}"#
        );
    }

    #[test]
    fn steps_round_trip() {
        let g = GridSpec::new(1.0, 1).unwrap();
        let text = r#"{"steps":[{"p":{"0":[1,0]},"h":[[1,0]]},{"p":{"0":[1,0],"1":[[0.5,0]]},"h":[[1,0]]}]}"#;
        let steps = parse_steps_json::<f64>(text, g).unwrap();
        assert_eq!(steps.len(), 2);
        let again = parse_steps_json::<f64>(&steps_to_value(&steps).to_string(), g).unwrap();
        assert_eq!(steps, again);
    }
}
