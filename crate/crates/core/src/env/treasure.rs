use serde::{Deserialize, Serialize};

use super::oracle::TabularModel;
use super::{Action, ActionSpace, EnvError, Environment, MomdpSpec, StepResult};
use crate::geometry::ValueVector;

/// Column `c` holds a treasure of `values[c]` at row `depths[c]`; cells below it are sea floor.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TreasureLayout {
    pub rows: usize,
    pub depths: Vec<usize>,
    pub values: Vec<f64>,
}

impl TreasureLayout {
    /// The classic 11×10 layout.
    pub fn classic() -> Self {
        Self {
            rows: 11,
            depths: vec![1, 2, 3, 4, 4, 4, 7, 7, 9, 10],
            values: vec![1.0, 2.0, 3.0, 5.0, 8.0, 16.0, 24.0, 50.0, 74.0, 124.0],
        }
    }

    pub fn cols(&self) -> usize {
        self.depths.len()
    }

    pub fn validate(&self) -> Result<(), EnvError> {
        if self.depths.is_empty() || self.depths.len() != self.values.len() {
            return Err(EnvError::Config("depths and values must be non-empty and equally long".into()));
        }
        if self.depths.iter().any(|d| *d == 0 || *d >= self.rows) {
            return Err(EnvError::Config(format!("treasure depths must lie in 1..{}", self.rows)));
        }
        if self.values.iter().any(|v| !v.is_finite()) {
            return Err(EnvError::Config("treasure values must be finite".into()));
        }
        Ok(())
    }
}

/// Deterministic treasure gridworld with objectives (treasure, time).
///
/// Actions: 0 up, 1 down, 2 left, 3 right. Moves into walls or the sea floor leave the
/// agent in place. Every step earns −1 on the time objective.
#[derive(Debug, Clone)]
pub struct TreasureGrid {
    layout: TreasureLayout,
    spec: MomdpSpec,
    pos: (usize, usize),
    t: usize,
    done: bool,
}

const MOVES: [(isize, isize); 4] = [(-1, 0), (1, 0), (0, -1), (0, 1)];

impl TreasureGrid {
    pub fn new(layout: TreasureLayout, horizon: usize) -> Result<Self, EnvError> {
        layout.validate()?;
        if horizon == 0 {
            return Err(EnvError::Config("horizon must be at least 1".into()));
        }
        let spec = MomdpSpec {
            state_dim: layout.rows * layout.cols(),
            action_space: ActionSpace::Discrete(4),
            objective_names: vec!["treasure".into(), "time".into()],
            horizon,
            discount_hint: 0.99,
        };
        Ok(Self { layout, spec, pos: (0, 0), t: 0, done: true })
    }

    pub fn classic() -> Self {
        Self::new(TreasureLayout::classic(), 100).unwrap()
    }

    pub fn layout(&self) -> &TreasureLayout {
        &self.layout
    }

    pub fn position(&self) -> (usize, usize) {
        self.pos
    }

    fn cell(&self, pos: (usize, usize)) -> usize {
        pos.0 * self.layout.cols() + pos.1
    }

    fn is_floor(&self, (r, c): (usize, usize)) -> bool {
        r > self.layout.depths[c]
    }

    fn treasure_at(&self, (r, c): (usize, usize)) -> Option<f64> {
        (r == self.layout.depths[c]).then(|| self.layout.values[c])
    }

    fn encode(&self, pos: (usize, usize)) -> Vec<f64> {
        let mut s = vec![0.0; self.spec.state_dim];
        s[self.cell(pos)] = 1.0;
        s
    }

    /// Cell reached from `pos` under `action`, with the treasure collected there if any.
    fn transition(&self, pos: (usize, usize), action: usize) -> ((usize, usize), Option<f64>) {
        let (dr, dc) = MOVES[action];
        let r = pos.0 as isize + dr;
        let c = pos.1 as isize + dc;
        let inside = r >= 0 && c >= 0 && (r as usize) < self.layout.rows && (c as usize) < self.layout.cols();
        let next = if inside && !self.is_floor((r as usize, c as usize)) { (r as usize, c as usize) } else { pos };
        (next, self.treasure_at(next))
    }

    /// Deterministic transition tables for the Pareto oracle. Sea-floor cells are included
    /// but unreachable.
    pub fn tabular(&self) -> TabularModel {
        let n = self.spec.state_dim;
        let cols = self.layout.cols();
        let mut next = vec![vec![0; 4]; n];
        let mut reward = vec![vec![vec![0.0, -1.0]; 4]; n];
        let mut terminal = vec![vec![false; 4]; n];
        for s in 0..n {
            let pos = (s / cols, s % cols);
            for a in 0..4 {
                let (to, treasure) = self.transition(pos, a);
                next[s][a] = self.cell(to);
                if let Some(v) = treasure {
                    reward[s][a][0] = v;
                    terminal[s][a] = true;
                }
            }
        }
        TabularModel { next, reward, terminal, start: 0, horizon: self.spec.horizon }
    }
}

impl Environment for TreasureGrid {
    fn spec(&self) -> &MomdpSpec {
        &self.spec
    }

    fn reset(&mut self, _seed: u64) -> Vec<f64> {
        self.pos = (0, 0);
        self.t = 0;
        self.done = false;
        self.encode(self.pos)
    }

    fn step(&mut self, action: &Action) -> Result<StepResult, EnvError> {
        let a = match action {
            Action::Discrete(a) if *a < 4 => *a,
            other => return Err(EnvError::InvalidAction(format!("{other:?} is not one of 4 moves"))),
        };
        if self.done {
            return Err(EnvError::EpisodeOver);
        }
        let (next, treasure) = self.transition(self.pos, a);
        self.pos = next;
        self.t += 1;
        let terminal = treasure.is_some();
        let truncated = !terminal && self.t >= self.spec.horizon;
        self.done = terminal || truncated;
        Ok(StepResult {
            state: self.encode(next),
            reward: ValueVector::new(vec![treasure.unwrap_or(0.0), -1.0]),
            terminal,
            truncated,
            clipped: false,
        })
    }
}
