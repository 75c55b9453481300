use std::collections::BTreeMap;

use serde::Deserialize;
use serde_json::Value;
use thiserror::Error;

use super::config::ExperimentConfig;
use super::run::{run_experiment, RunContext, RunRecord};
use super::store::{RunStore, StoreError};

#[derive(Debug, Error)]
pub enum GridError {
    #[error("grid axis {0:?} does not name a config field")]
    UnknownAxis(String),
    #[error("grid axis {0:?} matches several config fields; use a dotted path")]
    AmbiguousAxis(String),
    #[error("grid axis {0:?} has no values")]
    EmptyAxis(String),
    #[error("grid cell {cell} is not a valid config: {reason}")]
    InvalidValue { cell: String, reason: String },
    #[error(transparent)]
    Store(#[from] StoreError),
}

/// Axes file shape: `[axes]` table of dotted or bare field names to value lists.
#[derive(Debug, Clone, Default, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSpec {
    pub axes: BTreeMap<String, Vec<Value>>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GridCell {
    pub config: ExperimentConfig,
    pub assignment: Vec<(String, Value)>,
}

fn resolve_axis(root: &Value, axis: &str) -> Result<Vec<String>, GridError> {
    let obj = root.as_object().expect("config serializes to an object");
    let path: Vec<String> = axis.split('.').map(str::to_owned).collect();
    if path.len() > 1 {
        // free_params is open-ended; any key below it is settable.
        if path[0] == "free_params" && path.len() == 2 {
            return Ok(path);
        }
        let mut cur = root;
        for part in &path {
            cur = cur.get(part).ok_or_else(|| GridError::UnknownAxis(axis.into()))?;
        }
        return Ok(path);
    }
    if obj.contains_key(axis) {
        return Ok(path);
    }
    let hits: Vec<_> = obj
        .iter()
        .filter(|(k, v)| *k != "free_params" && v.as_object().is_some_and(|o| o.contains_key(axis)))
        .map(|(k, _)| vec![k.clone(), axis.to_owned()])
        .collect();
    match hits.len() {
        0 => Err(GridError::UnknownAxis(axis.into())),
        1 => Ok(hits.into_iter().next().unwrap()),
        _ => Err(GridError::AmbiguousAxis(axis.into())),
    }
}

fn set_path(root: &mut Value, path: &[String], value: Value) {
    let mut cur = root;
    for part in &path[..path.len() - 1] {
        cur = cur
            .as_object_mut()
            .expect("path resolved")
            .entry(part.clone())
            .or_insert_with(|| Value::Object(Default::default()));
    }
    cur.as_object_mut().expect("path resolved").insert(path[path.len() - 1].clone(), value);
}

fn display(v: &Value) -> String {
    match v {
        Value::String(s) => s.clone(),
        other => other.to_string(),
    }
}

/// Cartesian product of the axes in lexicographic axis-name order (the first
/// axis varies slowest). Each cell is named `base[axis=value,...]`.
pub fn expand_grid(base: &ExperimentConfig, axes: &BTreeMap<String, Vec<Value>>) -> Result<Vec<GridCell>, GridError> {
    let root = serde_json::to_value(base).expect("config serializes");
    let mut resolved = Vec::with_capacity(axes.len());
    for (axis, values) in axes {
        if values.is_empty() {
            return Err(GridError::EmptyAxis(axis.clone()));
        }
        resolved.push((axis, resolve_axis(&root, axis)?, values));
    }

    let mut cells = vec![Vec::<(String, Value)>::new()];
    for (axis, _, values) in &resolved {
        cells = cells
            .into_iter()
            .flat_map(|prefix| {
                values.iter().map(move |v| {
                    let mut a = prefix.clone();
                    a.push(((*axis).clone(), v.clone()));
                    a
                })
            })
            .collect();
    }

    cells
        .into_iter()
        .map(|assignment| {
            let mut v = root.clone();
            for ((_, path, _), (_, value)) in resolved.iter().zip(&assignment) {
                set_path(&mut v, path, value.clone());
            }
            let parts: Vec<_> = assignment.iter().map(|(a, v)| format!("{a}={}", display(v))).collect();
            let name = format!("{}[{}]", base.name, parts.join(","));
            let mut config: ExperimentConfig = serde_json::from_value(v)
                .map_err(|e| GridError::InvalidValue { cell: name.clone(), reason: e.to_string() })?;
            if !assignment.is_empty() {
                config.name = name;
            }
            Ok(GridCell { config, assignment })
        })
        .collect()
}

/// Runs every grid cell sequentially. A failing cell yields a failed record
/// and the grid carries on.
pub fn run_grid(
    base: &ExperimentConfig,
    axes: &BTreeMap<String, Vec<Value>>,
    store: &RunStore,
    ctx: &RunContext<'_>,
) -> Result<Vec<RunRecord>, GridError> {
    let cells = expand_grid(base, axes)?;
    let mut records = Vec::with_capacity(cells.len());
    for cell in cells {
        records.push(run_experiment(&cell.config, store, ctx)?);
    }
    Ok(records)
}

#[cfg(test)]
mod tests {
    use super::*;
    use serde_json::json;

    fn base() -> ExperimentConfig {
        ExperimentConfig::from_toml("name='g'\nlanguage='en'\n[corpus_paths]\ndev-test='d.tsv'\n").unwrap()
    }

    fn axes(pairs: &[(&str, Vec<Value>)]) -> BTreeMap<String, Vec<Value>> {
        pairs.iter().map(|(k, v)| (k.to_string(), v.clone())).collect()
    }

    #[test]
    fn bare_and_dotted_axes() {
        let cells = expand_grid(&base(), &axes(&[("parse_mode", vec![json!("strict"), json!("lenient")])])).unwrap();
        assert_eq!(cells.len(), 2);
        assert_eq!(cells[0].config.prompt.parse_mode, claimcheck_core::ParseMode::Strict);
        assert_eq!(cells[0].config.name, "g[parse_mode=strict]");
        let mut other = cells[1].config.clone();
        other.prompt.parse_mode = claimcheck_core::ParseMode::Strict;
        other.name = cells[0].config.name.clone();
        assert_eq!(other, cells[0].config);

        let cells = expand_grid(&base(), &axes(&[("backend.temperature", vec![json!(0.0), json!(0.7)])])).unwrap();
        assert_eq!(cells[1].config.backend.temperature, 0.7);
    }

    #[test]
    fn lexicographic_product_order() {
        let cells = expand_grid(
            &base(),
            &axes(&[("free_params.b", vec![json!("x"), json!("y")]), ("free_params.a", vec![json!(1), json!(2)])]),
        )
        .unwrap();
        let names: Vec<_> = cells.iter().map(|c| c.config.name.as_str()).collect();
        assert_eq!(
            names,
            [
                "g[free_params.a=1,free_params.b=x]",
                "g[free_params.a=1,free_params.b=y]",
                "g[free_params.a=2,free_params.b=x]",
                "g[free_params.a=2,free_params.b=y]"
            ]
        );
    }

    #[test]
    fn unknown_and_bad_values() {
        assert!(matches!(expand_grid(&base(), &axes(&[("nope", vec![json!(1)])])), Err(GridError::UnknownAxis(_))));
        assert!(matches!(
            expand_grid(&base(), &axes(&[("prompt.nope", vec![json!(1)])])),
            Err(GridError::UnknownAxis(_))
        ));
        assert!(matches!(
            expand_grid(&base(), &axes(&[("parse_mode", vec![json!("sloppy")])])),
            Err(GridError::InvalidValue { .. })
        ));
    }
}
