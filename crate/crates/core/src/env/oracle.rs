use super::EnvError;
use crate::geometry::ValueVector;

pub const MAX_ORACLE_STATES: usize = 120;
pub const MAX_ORACLE_ACTIONS: usize = 4;

/// Deterministic finite MOMDP given by explicit tables indexed `[state][action]`.
#[derive(Debug, Clone, PartialEq)]
pub struct TabularModel {
    pub next: Vec<Vec<usize>>,
    pub reward: Vec<Vec<Vec<f64>>>,
    pub terminal: Vec<Vec<bool>>,
    pub start: usize,
    pub horizon: usize,
}

impl TabularModel {
    pub fn states(&self) -> usize {
        self.next.len()
    }

    pub fn actions(&self) -> usize {
        self.next.first().map_or(0, Vec::len)
    }

    pub fn objectives(&self) -> usize {
        self.reward.first().and_then(|r| r.first()).map_or(0, Vec::len)
    }
}

fn dominates(a: &[f64], b: &[f64]) -> bool {
    a.iter().zip(b).all(|(x, y)| x >= y) && a.iter().zip(b).any(|(x, y)| x > y)
}

fn same(a: &[f64], b: &[f64]) -> bool {
    a.iter().zip(b).all(|(x, y)| (x - y).abs() <= 1e-9)
}

/// Pareto-nondominated subset, deduplicated, in the order first seen.
fn prune(candidates: Vec<Vec<f64>>) -> Vec<Vec<f64>> {
    let mut kept: Vec<Vec<f64>> = Vec::new();
    for c in candidates {
        if kept.iter().any(|k| dominates(k, &c) || same(k, &c)) {
            continue;
        }
        kept.retain(|k| !dominates(&c, k));
        kept.push(c);
    }
    kept
}

/// Non-dominated discounted return vectors from the start state, by set-based value iteration
/// over `horizon` steps.
pub fn pareto_oracle(model: &TabularModel, gamma: f64) -> Result<Vec<ValueVector<f64>>, EnvError> {
    let (n, m, k) = (model.states(), model.actions(), model.objectives());
    if n > MAX_ORACLE_STATES || m > MAX_ORACLE_ACTIONS {
        return Err(EnvError::Capacity(format!(
            "{n} states and {m} actions exceed the oracle limit of {MAX_ORACLE_STATES} states and {MAX_ORACLE_ACTIONS} actions"
        )));
    }
    if n == 0 || m == 0 || k == 0 || model.start >= n {
        return Err(EnvError::Config("empty tabular model".into()));
    }
    if model.next.iter().flatten().any(|s| *s >= n) {
        return Err(EnvError::Config("transition to an unknown state".into()));
    }
    let mut sets: Vec<Vec<Vec<f64>>> = vec![vec![vec![0.0; k]]; n];
    for _ in 0..model.horizon {
        let updated = (0..n)
            .map(|s| {
                let mut candidates = Vec::new();
                for a in 0..m {
                    let r = &model.reward[s][a];
                    if model.terminal[s][a] {
                        candidates.push(r.clone());
                    } else {
                        for v in &sets[model.next[s][a]] {
                            candidates.push(r.iter().zip(v).map(|(ri, vi)| ri + gamma * vi).collect());
                        }
                    }
                }
                prune(candidates)
            })
            .collect();
        sets = updated;
    }
    let mut front = sets.swap_remove(model.start);
    front.sort_by(|a, b| b.partial_cmp(a).unwrap());
    Ok(front.into_iter().map(ValueVector::new).collect())
}
