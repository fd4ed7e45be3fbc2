//! MDP files: JSON objects with keys `n_states`, `n_actions`, `gamma`,
//! `reward` (`[x][a]`), `transition` (`[x][a][y]`) and the optional
//! `reference_policy` (`[x][a]`) and `initial_dist` (`[x]`), both uniform when
//! absent. Errors carry a JSON pointer to the offending field.

use std::fs;
use std::path::Path;

use erl_core::mdp::{validate_mdp, Violation, POLICY_ROW_TOL};
use erl_core::{Policy, TabularMdp};
use ndarray::{Array1, Array2, Array3};
use serde_json::{json, Map, Value};

use crate::error::{ExpError, Result};

/// A validated MDP file.
#[derive(Debug, Clone, PartialEq)]
pub struct MdpSpec {
    pub mdp: TabularMdp,
    pub reference: Policy,
    pub initial_dist: Array1<f64>,
}

pub fn load_mdp(path: &Path) -> Result<MdpSpec> {
    let text = fs::read_to_string(path).map_err(|e| ExpError::io(path, e))?;
    let value: Value = serde_json::from_str(&text).map_err(|source| ExpError::Json { path: path.into(), source })?;
    parse_mdp(&value)
}

pub fn save_mdp(path: &Path, spec: &MdpSpec) -> Result<()> {
    let text = serde_json::to_string_pretty(&mdp_to_json(spec)).expect("finite arrays serialize");
    fs::write(path, text + "\n").map_err(|e| ExpError::io(path, e))
}

pub fn mdp_to_json(spec: &MdpSpec) -> Value {
    let mdp = &spec.mdp;
    let matrix = |m: &Array2<f64>| m.outer_iter().map(|r| r.to_vec()).collect::<Vec<_>>();
    let transition: Vec<Vec<Vec<f64>>> =
        mdp.transition().outer_iter().map(|xa| xa.outer_iter().map(|r| r.to_vec()).collect()).collect();
    json!({
        "n_states": mdp.n_states(),
        "n_actions": mdp.n_actions(),
        "gamma": mdp.discount(),
        "reward": matrix(mdp.reward()),
        "transition": transition,
        "reference_policy": matrix(spec.reference.probs()),
        "initial_dist": spec.initial_dist.to_vec(),
    })
}

fn field<'a>(obj: &'a Map<String, Value>, key: &str) -> Result<&'a Value> {
    obj.get(key).ok_or_else(|| ExpError::schema(format!("/{key}"), "missing required field"))
}

fn as_array<'a>(v: &'a Value, ptr: &str, len: usize) -> Result<&'a Vec<Value>> {
    let arr = v.as_array().ok_or_else(|| ExpError::schema(ptr, "expected an array"))?;
    if arr.len() != len {
        return Err(ExpError::schema(ptr, format!("expected {len} entries, found {}", arr.len())));
    }
    Ok(arr)
}

fn as_number(v: &Value, ptr: &str) -> Result<f64> {
    v.as_f64().ok_or_else(|| ExpError::schema(ptr, "expected a number"))
}

fn as_count(obj: &Map<String, Value>, key: &str) -> Result<usize> {
    let ptr = format!("/{key}");
    let n = field(obj, key)?.as_u64().ok_or_else(|| ExpError::schema(&ptr, "expected a positive integer"))?;
    if n == 0 {
        return Err(ExpError::schema(ptr, "must be at least 1"));
    }
    Ok(n as usize)
}

fn vector(v: &Value, ptr: &str, len: usize) -> Result<Array1<f64>> {
    let arr = as_array(v, ptr, len)?;
    arr.iter().enumerate().map(|(i, e)| as_number(e, &format!("{ptr}/{i}"))).collect::<Result<Vec<_>>>().map(Array1::from)
}

fn matrix(v: &Value, ptr: &str, rows: usize, cols: usize) -> Result<Array2<f64>> {
    let mut out = Array2::zeros((rows, cols));
    for (i, row) in as_array(v, ptr, rows)?.iter().enumerate() {
        out.row_mut(i).assign(&vector(row, &format!("{ptr}/{i}"), cols)?);
    }
    Ok(out)
}

fn violation_error(v: &Violation) -> ExpError {
    let ptr = match v {
        Violation::NegativeProbability { state, action, next, .. }
        | Violation::NonFiniteProbability { state, action, next } => format!("/transition/{state}/{action}/{next}"),
        Violation::RowSum { state, action, .. } => format!("/transition/{state}/{action}"),
        Violation::NonFiniteReward { state, action, .. } => format!("/reward/{state}/{action}"),
        Violation::Discount(_) => "/gamma".to_string(),
        Violation::EmptySpace { .. } => "/n_states".to_string(),
        Violation::Shape { what, .. } => format!("/{what}"),
    };
    ExpError::schema(ptr, v.to_string())
}

fn check_distribution(row: ndarray::ArrayView1<'_, f64>, ptr: &str) -> Result<()> {
    for (i, &p) in row.iter().enumerate() {
        if !(p.is_finite() && p >= 0.0) {
            return Err(ExpError::schema(format!("{ptr}/{i}"), format!("probability {p} is not in [0, 1]")));
        }
    }
    let sum = row.sum();
    if (sum - 1.0).abs() > POLICY_ROW_TOL {
        return Err(ExpError::schema(ptr, format!("sums to {sum}, not 1")));
    }
    Ok(())
}

/// Parses and validates an MDP document.
pub fn parse_mdp(value: &Value) -> Result<MdpSpec> {
    let obj = value.as_object().ok_or_else(|| ExpError::schema("", "expected a JSON object"))?;
    let ns = as_count(obj, "n_states")?;
    let na = as_count(obj, "n_actions")?;
    let gamma = as_number(field(obj, "gamma")?, "/gamma")?;
    let reward = matrix(field(obj, "reward")?, "/reward", ns, na)?;
    let mut transition = Array3::zeros((ns, na, ns));
    for (x, per_state) in as_array(field(obj, "transition")?, "/transition", ns)?.iter().enumerate() {
        for (a, row) in as_array(per_state, &format!("/transition/{x}"), na)?.iter().enumerate() {
            let r = vector(row, &format!("/transition/{x}/{a}"), ns)?;
            transition.slice_mut(ndarray::s![x, a, ..]).assign(&r);
        }
    }
    let mdp = TabularMdp::new_unchecked(transition, reward, gamma);
    if let Some(v) = validate_mdp(&mdp).first() {
        return Err(violation_error(v));
    }

    let reference = match obj.get("reference_policy") {
        None | Some(Value::Null) => Policy::uniform(ns, na),
        Some(v) => {
            let m = matrix(v, "/reference_policy", ns, na)?;
            for x in 0..ns {
                check_distribution(m.row(x), &format!("/reference_policy/{x}"))?;
            }
            Policy::new(m)?
        }
    };
    let initial_dist = match obj.get("initial_dist") {
        None | Some(Value::Null) => Array1::from_elem(ns, 1.0 / ns as f64),
        Some(v) => {
            let d = vector(v, "/initial_dist", ns)?;
            check_distribution(d.view(), "/initial_dist")?;
            d
        }
    };
    Ok(MdpSpec { mdp, reference, initial_dist })
}
