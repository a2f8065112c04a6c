use super::{Action, EnvError, Environment, MomdpSpec, StepResult};
use crate::geometry::ValueVector;

/// Exposes a chosen subset of another environment's objectives, in the given order.
pub struct ObjectiveSubset {
    inner: Box<dyn Environment>,
    keep: Vec<usize>,
    spec: MomdpSpec,
}

impl ObjectiveSubset {
    /// `names` must be distinct objective names of `inner`.
    pub fn new(inner: Box<dyn Environment>, names: &[String]) -> Result<Self, EnvError> {
        if names.is_empty() {
            return Err(EnvError::Config("objective subset is empty".into()));
        }
        let all = &inner.spec().objective_names;
        let mut keep = Vec::with_capacity(names.len());
        for n in names {
            let k = all
                .iter()
                .position(|a| a == n)
                .ok_or_else(|| EnvError::Config(format!("unknown objective {n:?}; available: {}", all.join(", "))))?;
            if keep.contains(&k) {
                return Err(EnvError::Config(format!("objective {n:?} listed twice")));
            }
            keep.push(k);
        }
        let mut spec = inner.spec().clone();
        spec.objective_names = names.to_vec();
        Ok(Self { inner, keep, spec })
    }
}

impl Environment for ObjectiveSubset {
    fn spec(&self) -> &MomdpSpec {
        &self.spec
    }

    fn reset(&mut self, seed: u64) -> Vec<f64> {
        self.inner.reset(seed)
    }

    fn step(&mut self, action: &Action) -> Result<StepResult, EnvError> {
        let mut r = self.inner.step(action)?;
        let full = r.reward.as_slice();
        r.reward = ValueVector::new(self.keep.iter().map(|&k| full[k]).collect());
        Ok(r)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::env::TreasureGrid;

    #[test]
    fn keeps_the_named_objectives() {
        let inner = TreasureGrid::classic();
        let names = inner.spec().objective_names.clone();
        let mut env = ObjectiveSubset::new(Box::new(inner), &names[1..]).unwrap();
        assert_eq!(env.spec().objectives(), 1);
        env.reset(0);
        let r = env.step(&Action::Discrete(3)).unwrap();
        assert_eq!(r.reward.as_slice(), &[-1.0]);
    }

    #[test]
    fn rejects_unknown_and_repeated_names() {
        let names = |v: &[&str]| v.iter().map(|s| s.to_string()).collect::<Vec<_>>();
        assert!(ObjectiveSubset::new(Box::new(TreasureGrid::classic()), &names(&["speed"])).is_err());
        let inner = TreasureGrid::classic();
        let n = inner.spec().objective_names[0].clone();
        assert!(ObjectiveSubset::new(Box::new(inner), &[n.clone(), n]).is_err());
        assert!(ObjectiveSubset::new(Box::new(TreasureGrid::classic()), &[]).is_err());
    }
}
