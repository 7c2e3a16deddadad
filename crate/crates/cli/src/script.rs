//! Experiment scripts.
//!
//! One directive per line, keyword first, `#` starts a comment:
//!
//! ```text
//! experiment  adding text
//! base        a jet plane
//! category    fighter jet
//! eval_mode   modified
//! thresholds  0.5 0.75
//! score_floor 0.3
//! weights     0.3 0.3
//!
//! user 1
//! iteration 1
//! add         fighter jet
//! sub         passenger windows
//! unselect    another, seen
//! iteration 2
//! ```
//!
//! `add` and `sub` take one text each and may repeat; `unselect` takes a
//! comma-separated concept list. An iteration with no directives is a
//! no-op probe. Users and iterations are numbered from 1 and must appear in
//! increasing order.

use std::collections::BTreeSet;

use classrefine_core::detmetrics::{EvalMode, DEFAULT_IOU_THRESHOLDS};
use classrefine_core::vectormath::AdjustmentWeights;

use crate::CliError;

#[derive(Debug, Clone, PartialEq)]
pub struct Script {
    pub name: String,
    pub base: String,
    pub category: String,
    pub mode: EvalMode,
    pub thresholds: Vec<f64>,
    pub score_floor: f64,
    pub weights: AdjustmentWeights,
    pub users: Vec<UserLane>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct UserLane {
    pub user: u32,
    pub iterations: Vec<ScriptIteration>,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct ScriptIteration {
    pub index: u32,
    pub added: Vec<String>,
    pub removed: Vec<String>,
    pub unselected: BTreeSet<String>,
}

fn err(line: usize, msg: impl std::fmt::Display) -> CliError {
    CliError::data(format!("script line {line}: {msg}"))
}

fn number<T: std::str::FromStr>(line: usize, key: &str, value: &str) -> Result<T, CliError> {
    value
        .parse()
        .map_err(|_| err(line, format!("{key}: cannot parse {value:?}")))
}

pub fn parse(text: &str) -> Result<Script, CliError> {
    let mut name = None;
    let mut base = None;
    let mut category = None;
    let mut mode = EvalMode::Modified;
    let mut thresholds = DEFAULT_IOU_THRESHOLDS.to_vec();
    let mut score_floor = 0.0;
    let mut weights = AdjustmentWeights::default();
    let mut users: Vec<UserLane> = Vec::new();

    for (i, raw) in text.lines().enumerate() {
        let n = i + 1;
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (key, value) = match line.split_once(char::is_whitespace) {
            Some((k, v)) => (k, v.trim()),
            None => (line, ""),
        };
        match key {
            "experiment" => name = Some(value.to_owned()),
            "base" => base = Some(value.to_owned()),
            "category" => category = Some(value.to_owned()),
            "eval_mode" => mode = value.parse().map_err(|_| err(n, format!("unknown mode {value:?}")))?,
            "thresholds" => {
                thresholds = value
                    .split_whitespace()
                    .map(|t| number(n, key, t))
                    .collect::<Result<_, _>>()?;
            }
            "score_floor" => score_floor = number(n, key, value)?,
            "weights" => {
                let parts: Vec<f64> = value
                    .split_whitespace()
                    .map(|t| number(n, key, t))
                    .collect::<Result<_, _>>()?;
                let [add, sub] = parts[..] else {
                    return Err(err(n, "weights takes two numbers: lambda_add lambda_sub"));
                };
                weights = AdjustmentWeights::new(add, sub).map_err(|e| err(n, e))?;
            }
            "user" => {
                let user: u32 = number(n, key, value)?;
                if users.last().is_some_and(|u| u.user >= user) || user == 0 {
                    return Err(err(n, format!("user {user} out of order")));
                }
                users.push(UserLane { user, iterations: Vec::new() });
            }
            "iteration" => {
                let index: u32 = number(n, key, value)?;
                let lane = users.last_mut().ok_or_else(|| err(n, "iteration before any user"))?;
                let expected = lane.iterations.len() as u32 + 1;
                if index != expected {
                    return Err(err(n, format!("expected iteration {expected}, found {index}")));
                }
                lane.iterations.push(ScriptIteration { index, ..Default::default() });
            }
            "add" | "sub" | "unselect" => {
                let it = users
                    .last_mut()
                    .and_then(|u| u.iterations.last_mut())
                    .ok_or_else(|| err(n, format!("{key} outside an iteration")))?;
                if value.is_empty() {
                    return Err(err(n, format!("{key} needs a value")));
                }
                match key {
                    "add" => it.added.push(value.to_owned()),
                    "sub" => it.removed.push(value.to_owned()),
                    _ => {
                        for c in value.split(',').map(str::trim) {
                            if c.is_empty() {
                                return Err(err(n, "empty concept label"));
                            }
                            it.unselected.insert(c.to_owned());
                        }
                    }
                }
            }
            other => return Err(err(n, format!("unknown directive {other:?}"))),
        }
    }

    let base = base.filter(|b| !b.is_empty()).ok_or_else(|| CliError::data("script has no base text"))?;
    if users.is_empty() || users.iter().all(|u| u.iterations.is_empty()) {
        return Err(CliError::data("script has no user iterations"));
    }
    let category = category.unwrap_or_else(|| base.clone());
    Ok(Script {
        name: name.unwrap_or_default(),
        base,
        category,
        mode,
        thresholds,
        score_floor,
        weights,
        users,
    })
}
