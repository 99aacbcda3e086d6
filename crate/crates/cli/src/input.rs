use std::path::Path;

use oscidelay::{EquationSpec, Model};
use serde_json::Value;

/// A parsed input file: a linear equation or a nonlinear model. Models are
/// recognized by their `"model"` tag.
#[derive(Clone, Debug)]
pub enum Problem {
    Linear(EquationSpec),
    Model(Model),
}

impl Problem {
    pub fn from_value(v: Value) -> Result<Self, String> {
        if v.get("model").is_some() {
            serde_json::from_value(v).map(Problem::Model).map_err(|e| format!("model: {e}"))
        } else {
            serde_json::from_value(v).map(Problem::Linear).map_err(|e| format!("equation spec: {e}"))
        }
    }

    pub fn linear(&self) -> oscidelay::Result<EquationSpec> {
        match self {
            Problem::Linear(s) => Ok(s.clone()),
            Problem::Model(m) => m.linearize(),
        }
    }
}

/// Reads a JSON file, returning its bytes (for the digest) and its value.
pub fn read_json(path: &Path) -> Result<(Vec<u8>, Value), String> {
    let bytes = std::fs::read(path).map_err(|e| format!("{}: {e}", path.display()))?;
    let value = serde_json::from_slice(&bytes).map_err(|e| format!("{}: {e}", path.display()))?;
    Ok((bytes, value))
}

/// Replaces the number at each JSON pointer with `x`.
pub fn substitute(template: &Value, pointers: &[String], x: f64) -> Result<Value, String> {
    let mut v = template.clone();
    for p in pointers {
        let slot = v.pointer_mut(p).ok_or_else(|| format!("parameter path {p} not found"))?;
        if !slot.is_number() {
            return Err(format!("parameter path {p} does not hold a number"));
        }
        *slot = serde_json::json!(x);
    }
    Ok(v)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn substitution_hits_every_pointer() {
        let v = serde_json::json!({ "a": { "tau": 1.0 }, "b": [0.5, { "x": 2 }] });
        let out = substitute(&v, &["/a/tau".into(), "/b/1/x".into()], 0.25).unwrap();
        assert_eq!(out["a"]["tau"], 0.25);
        assert_eq!(out["b"][1]["x"], 0.25);
        assert!(substitute(&v, &["/missing".into()], 1.0).is_err());
        assert!(substitute(&v, &["/a".into()], 1.0).is_err());
    }

    #[test]
    fn models_are_told_apart_by_tag() {
        let m = serde_json::json!({
            "model": "mackey-glass", "a": 2.0, "b": 1.0, "gamma": 1.0,
            "r": { "kind": "const", "value": 1.0 }, "tau": 0.5
        });
        assert!(matches!(Problem::from_value(m), Ok(Problem::Model(_))));
        let s = serde_json::json!({ "terms": [{ "coef": { "kind": "const", "value": 1.0 }, "tau": 0.5 }] });
        assert!(matches!(Problem::from_value(s), Ok(Problem::Linear(_))));
    }
}
