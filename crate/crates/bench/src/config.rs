//! Grid configuration as read from JSON.

use std::path::PathBuf;

use geopd_core::{AlmParams, MultiplierMode, PdParams, SolverKind};
use geopd_zoo::ZooSpec;
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::error::{BenchError, Result};

/// How the starting point of each replication is chosen.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(tag = "rule", rename_all = "snake_case")]
pub enum StartRule {
    /// The family's default start.
    #[default]
    Default,
    /// Independent uniform draws in `[lo, hi]` per coordinate.
    Uniform { lo: f64, hi: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridEntry {
    pub problem: ZooSpec,
    pub solver: SolverKind,
    /// Partial parameter object merged over the solver defaults.
    #[serde(default)]
    pub overrides: Value,
    #[serde(default = "one")]
    pub replications: usize,
    #[serde(default)]
    pub seed_base: u64,
    #[serde(default)]
    pub start: StartRule,
}

fn one() -> usize {
    1
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchConfig {
    pub grid: Vec<GridEntry>,
    #[serde(default)]
    pub output_dir: Option<PathBuf>,
    pub time_limit_secs: f64,
}

impl BenchConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let config: BenchConfig = serde_json::from_str(text).map_err(|e| BenchError::Config(e.to_string()))?;
        config.validate()?;
        Ok(config)
    }

    pub fn validate(&self) -> Result<()> {
        if self.grid.is_empty() {
            return Err(BenchError::Config("grid is empty".into()));
        }
        if !(self.time_limit_secs > 0.0) {
            return Err(BenchError::Config(format!(
                "time limit must be positive, got {}",
                self.time_limit_secs
            )));
        }
        for (i, entry) in self.grid.iter().enumerate() {
            if entry.replications == 0 {
                return Err(BenchError::Config(format!("entry {i}: replications must be at least 1")));
            }
            if let StartRule::Uniform { lo, hi } = entry.start {
                if !(lo < hi) || !lo.is_finite() || !hi.is_finite() {
                    return Err(BenchError::Config(format!("entry {i}: uniform start needs lo < hi")));
                }
            }
            SolverParams::resolve(entry.solver, &entry.overrides, self.time_limit_secs)
                .map_err(|e| BenchError::Config(format!("entry {i}: {e}")))?;
        }
        Ok(())
    }

    pub fn run_count(&self) -> usize {
        self.grid.iter().map(|e| e.replications).sum()
    }
}

/// Fully resolved parameters of one solver.
#[derive(Debug, Clone, PartialEq)]
pub enum SolverParams {
    Pd(PdParams),
    Alm(AlmParams),
    Oracle,
}

impl SolverParams {
    pub fn defaults(solver: SolverKind) -> Self {
        match solver {
            SolverKind::Pd => SolverParams::Pd(PdParams::default()),
            SolverKind::Pdlm => SolverParams::Pd(PdParams {
                multipliers: MultiplierMode::Both,
                ..Default::default()
            }),
            SolverKind::Alm => SolverParams::Alm(AlmParams::default()),
            SolverKind::EnumerationOracle => SolverParams::Oracle,
        }
    }

    /// Solver defaults with `overrides` merged in and the time limit applied
    /// unless the overrides set a tighter one.
    pub fn resolve(solver: SolverKind, overrides: &Value, time_limit_secs: f64) -> Result<Self> {
        let tighten = |limit: Option<f64>| Some(limit.map_or(time_limit_secs, |l| l.min(time_limit_secs)));
        let out = match Self::defaults(solver) {
            SolverParams::Pd(base) => {
                let mut p: PdParams = merged(&base, overrides)?;
                p.time_limit_secs = tighten(p.time_limit_secs);
                if p.solver_kind() != solver {
                    return Err(BenchError::Config(format!(
                        "multiplier mode {:?} does not match solver {solver}",
                        p.multipliers
                    )));
                }
                p.validate()?;
                SolverParams::Pd(p)
            }
            SolverParams::Alm(base) => {
                let mut p: AlmParams = merged(&base, overrides)?;
                p.time_limit_secs = tighten(p.time_limit_secs);
                p.validate()?;
                SolverParams::Alm(p)
            }
            SolverParams::Oracle => {
                if !is_empty(overrides) {
                    return Err(BenchError::Config("the enumeration oracle takes no parameters".into()));
                }
                SolverParams::Oracle
            }
        };
        Ok(out)
    }
}

fn is_empty(v: &Value) -> bool {
    match v {
        Value::Null => true,
        Value::Object(m) => m.is_empty(),
        _ => false,
    }
}

fn merged<T: Serialize + serde::de::DeserializeOwned>(base: &T, overrides: &Value) -> Result<T> {
    let mut value = serde_json::to_value(base)?;
    if !is_empty(overrides) {
        merge_into(&mut value, overrides, "")?;
    }
    serde_json::from_value(value).map_err(|e| BenchError::Config(e.to_string()))
}

/// Recursive object merge that rejects keys absent from `target`.
pub fn merge_into(target: &mut Value, patch: &Value, path: &str) -> Result<()> {
    let Value::Object(patch) = patch else {
        return Err(BenchError::Config(format!("overrides at '{path}' must be an object")));
    };
    let Value::Object(target) = target else {
        return Err(BenchError::Config(format!("'{path}' is not a parameter group")));
    };
    for (key, value) in patch {
        let full = if path.is_empty() { key.clone() } else { format!("{path}.{key}") };
        let Some(slot) = target.get_mut(key) else {
            return Err(BenchError::Config(format!("unknown parameter '{full}'")));
        };
        match (slot.is_object(), value.is_object()) {
            (true, true) if !is_tagged(value) => merge_into(slot, value, &full)?,
            _ => *slot = value.clone(),
        }
    }
    Ok(())
}

fn is_tagged(v: &Value) -> bool {
    v.get("rule").is_some() || v.get("kind").is_some()
}

/// Parses `a.b.c=value` into a nested override object; the value is read as
/// JSON when possible and as a string otherwise.
pub fn parse_assignment(text: &str) -> Result<Value> {
    let (path, raw) = text
        .split_once('=')
        .ok_or_else(|| BenchError::Config(format!("expected key=value, got '{text}'")))?;
    let mut value = serde_json::from_str(raw).unwrap_or_else(|_| Value::String(raw.to_string()));
    for key in path.trim().rsplit('.') {
        if key.is_empty() {
            return Err(BenchError::Config(format!("empty key in '{text}'")));
        }
        let mut map = serde_json::Map::new();
        map.insert(key.to_string(), value);
        value = Value::Object(map);
    }
    Ok(value)
}

/// Deep union of override objects, later ones winning.
pub fn combine(into: &mut Value, other: Value) {
    match (into, other) {
        (Value::Object(a), Value::Object(b)) => {
            for (k, v) in b {
                match a.get_mut(&k) {
                    Some(slot) if slot.is_object() && v.is_object() => combine(slot, v),
                    _ => {
                        a.insert(k, v);
                    }
                }
            }
        }
        (slot, other) => *slot = other,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use serde_json::json;

    #[test]
    fn overrides_reach_nested_fields() {
        let p = SolverParams::resolve(
            SolverKind::Pd,
            &json!({"tau0": 0.1, "inner": {"eps_in": 0.01}}),
            30.0,
        )
        .unwrap();
        let SolverParams::Pd(p) = p else { panic!() };
        assert_eq!(p.tau0, 0.1);
        assert_eq!(p.inner.eps_in, 0.01);
        assert_eq!(p.inner.max_inner_iters, PdParams::default().inner.max_inner_iters);
        assert_eq!(p.time_limit_secs, Some(30.0));
    }

    #[test]
    fn unknown_keys_are_rejected() {
        let err = SolverParams::resolve(SolverKind::Pd, &json!({"tau_0": 1.0}), 1.0).unwrap_err();
        assert!(err.to_string().contains("tau_0"));
    }

    #[test]
    fn multiplier_mode_must_match_solver() {
        assert!(SolverParams::resolve(SolverKind::Pdlm, &json!({"multipliers": "none"}), 1.0).is_err());
        assert!(SolverParams::resolve(SolverKind::Pdlm, &json!({"multipliers": "constraints_only"}), 1.0).is_ok());
    }

    #[test]
    fn assignments_nest() {
        let mut v = parse_assignment("inner.eps_in=1e-3").unwrap();
        combine(&mut v, parse_assignment("inner.steps_per_block=20").unwrap());
        combine(&mut v, parse_assignment("multipliers=both").unwrap());
        assert_eq!(v, json!({"inner": {"eps_in": 1e-3, "steps_per_block": 20}, "multipliers": "both"}));
    }

    #[test]
    fn config_validation() {
        let text = r#"{"grid": [], "time_limit_secs": 1.0}"#;
        assert!(BenchConfig::from_json(text).is_err());
        let text = r#"{"grid": [{"problem": {"family": "beck_eldar"}, "solver": "pd"}], "time_limit_secs": 0}"#;
        assert!(BenchConfig::from_json(text).is_err());
        let text = r#"{"grid": [{"problem": {"family": "beck_eldar"}, "solver": "pd", "replications": 3}],
                       "time_limit_secs": 5}"#;
        assert_eq!(BenchConfig::from_json(text).unwrap().run_count(), 3);
    }
}
