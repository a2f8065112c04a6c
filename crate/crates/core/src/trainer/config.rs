use std::fmt;
use std::path::{Path, PathBuf};

use serde::Deserialize;

use crate::actor::{validate_two_timescale, ScheduleKind, StepsizeSchedule};
use crate::env::{
    Environment, LinearQuad, LinearQuadConfig, MomdpSpec, ObjectiveSubset, PointMass1D, PointMassConfig, TreasureGrid, TreasureLayout,
};
use crate::geometry::MAX_SUPPORTED_DIM;

/// Config problem, anchored to a file line when one can be found.
#[derive(Debug, Clone, PartialEq)]
pub struct ConfigError {
    pub path: Option<PathBuf>,
    pub line: Option<usize>,
    pub message: String,
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let path = self.path.as_ref().map_or_else(|| "<config>".to_string(), |p| p.display().to_string());
        match self.line {
            Some(line) => write!(f, "{path}:{line}: {}", self.message),
            None => write!(f, "{path}: {}", self.message),
        }
    }
}

impl std::error::Error for ConfigError {}

#[derive(Debug, Clone, PartialEq)]
pub enum EnvKind {
    TreasureGrid { layout: TreasureLayout, horizon: usize },
    PointMass(PointMassConfig),
    LinearQuad(LinearQuadConfig),
}

/// An environment plus an optional subset of its objectives.
#[derive(Debug, Clone, PartialEq)]
pub struct EnvConfig {
    pub kind: EnvKind,
    pub objectives: Option<Vec<String>>,
}

impl From<EnvKind> for EnvConfig {
    fn from(kind: EnvKind) -> Self {
        Self { kind, objectives: None }
    }
}

impl EnvConfig {
    /// Built-in environment with default settings.
    pub fn by_name(name: &str) -> Option<Self> {
        let kind = match name {
            "treasure-grid" => EnvKind::TreasureGrid { layout: TreasureLayout::classic(), horizon: 100 },
            "point-mass-1d" => EnvKind::PointMass(PointMassConfig::default()),
            "linear-quad" => EnvKind::LinearQuad(LinearQuadConfig::default()),
            _ => return None,
        };
        Some(kind.into())
    }

    pub fn name(&self) -> &'static str {
        match self.kind {
            EnvKind::TreasureGrid { .. } => "treasure-grid",
            EnvKind::PointMass(_) => "point-mass-1d",
            EnvKind::LinearQuad(_) => "linear-quad",
        }
    }

    pub fn build(&self) -> Result<Box<dyn Environment>, crate::env::EnvError> {
        let env: Box<dyn Environment> = match &self.kind {
            EnvKind::TreasureGrid { layout, horizon } => Box::new(TreasureGrid::new(layout.clone(), *horizon)?),
            EnvKind::PointMass(c) => Box::new(PointMass1D::new(*c)?),
            EnvKind::LinearQuad(c) => Box::new(LinearQuad::new(c.clone())?),
        };
        Ok(match &self.objectives {
            None => env,
            Some(names) => Box::new(ObjectiveSubset::new(env, names)?),
        })
    }

    pub fn spec(&self) -> Result<MomdpSpec, crate::env::EnvError> {
        Ok(self.build()?.spec().clone())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainConfig {
    pub name: String,
    pub seed: u64,
    /// 0 collects on the calling thread; otherwise the size of the worker pool.
    pub workers: usize,
    /// Budget in batches (one collect-and-update round each).
    pub total_episodes: u64,
    pub env: EnvConfig,
    pub gamma: f64,
    pub lambda: f64,
    pub eps_clip: f64,
    pub eps_aols: f64,
    pub aols_max_iters: usize,
    /// Steps per environment copy per batch.
    pub horizon: usize,
    pub n_envs: usize,
    pub epochs: usize,
    pub critic_epochs: usize,
    pub minibatch: usize,
    pub hidden: Vec<usize>,
    pub max_grad_norm: Option<f64>,
    pub actor_schedule: StepsizeSchedule,
    pub critic_schedule: StepsizeSchedule,
}

impl TrainConfig {
    /// Desk-scale defaults for the given environment.
    pub fn with_env(env: EnvConfig) -> Self {
        Self {
            name: "run".into(),
            seed: 0,
            workers: 0,
            total_episodes: 20,
            env,
            gamma: 0.99,
            lambda: 0.95,
            eps_clip: 0.2,
            eps_aols: 1e-3,
            aols_max_iters: 200,
            horizon: 200,
            n_envs: 4,
            epochs: 10,
            critic_epochs: 10,
            minibatch: 64,
            hidden: vec![64, 64],
            max_grad_norm: Some(0.5),
            actor_schedule: StepsizeSchedule::constant(3e-4),
            critic_schedule: StepsizeSchedule::constant(1e-3),
        }
    }

    pub fn batch_size(&self) -> usize {
        self.horizon * self.n_envs
    }

    pub fn from_path(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|e| ConfigError {
            path: Some(path.to_path_buf()),
            line: None,
            message: format!("cannot read config file {}: {e}", path.display()),
        })?;
        Self::parse(&text).map_err(|e| ConfigError { path: Some(path.to_path_buf()), ..e })
    }

    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        let raw: RawConfig = toml::from_str(text).map_err(|e| ConfigError {
            path: None,
            line: e.span().map(|s| line_of_offset(text, s.start)),
            message: e.message().to_string(),
        })?;
        raw.into_config().map_err(|(section, key, message)| ConfigError {
            path: None,
            line: locate_key(text, section, key),
            message: format!("{section}.{key}: {message}"),
        })
    }

    pub fn validate(&self) -> Result<(), (&'static str, &'static str, String)> {
        let unit = |x: f64| (0.0..=1.0).contains(&x);
        if !unit(self.gamma) {
            return Err(("algo", "gamma", format!("must lie in [0, 1], got {}", self.gamma)));
        }
        if !unit(self.lambda) {
            return Err(("algo", "lambda", format!("must lie in [0, 1], got {}", self.lambda)));
        }
        if !(self.eps_clip > 0.0) {
            return Err(("algo", "eps_clip", format!("must be positive, got {}", self.eps_clip)));
        }
        if !(self.eps_aols > 0.0) {
            return Err(("algo", "eps_aols", format!("must be positive, got {}", self.eps_aols)));
        }
        for (key, v) in [
            ("n_envs", self.n_envs),
            ("horizon", self.horizon),
            ("epochs", self.epochs),
            ("critic_epochs", self.critic_epochs),
            ("minibatch", self.minibatch),
            ("aols_max_iters", self.aols_max_iters),
        ] {
            if v == 0 {
                return Err(("algo", key, "must be at least 1".into()));
            }
        }
        if self.hidden.contains(&0) {
            return Err(("algo", "hidden", "layer widths must be positive".into()));
        }
        if let Some(g) = self.max_grad_norm {
            if !(g > 0.0) {
                return Err(("algo", "max_grad_norm", format!("must be positive, got {g}")));
            }
        }
        let spec = self.env.spec().map_err(|e| ("env", "name", e.to_string()))?;
        let objectives = spec.objectives();
        if objectives > MAX_SUPPORTED_DIM {
            return Err(("env", "name", format!("{objectives} objectives exceed the supported {MAX_SUPPORTED_DIM}")));
        }
        if !self.batch_size().is_multiple_of(objectives) {
            return Err((
                "algo",
                "horizon",
                format!(
                    "batch of {} steps ({} envs x {}) does not split into {objectives} equal sequences",
                    self.batch_size(),
                    self.n_envs,
                    self.horizon
                ),
            ));
        }
        self.actor_schedule.validate().map_err(|e| ("schedule", "actor", e.to_string()))?;
        self.critic_schedule.validate().map_err(|e| ("schedule", "critic", e.to_string()))?;
        validate_two_timescale(&self.actor_schedule, &self.critic_schedule)
            .map_err(|e| ("schedule", "actor", e.to_string()))?;
        Ok(())
    }
}

fn line_of_offset(text: &str, offset: usize) -> usize {
    text[..offset.min(text.len())].matches('\n').count() + 1
}

/// Line of `key = …` inside `[section]` (or a dotted sub-table of it), falling back to the header.
fn locate_key(text: &str, section: &str, key: &str) -> Option<usize> {
    let mut current = String::new();
    let mut header = None;
    for (n, line) in text.lines().enumerate() {
        let t = line.trim();
        if let Some(name) = t.strip_prefix('[').and_then(|r| r.strip_suffix(']')) {
            current = name.trim().to_string();
            if current == format!("{section}.{key}") {
                return Some(n + 1);
            }
            if current == section {
                header = Some(n + 1);
            }
            continue;
        }
        let in_section = current == section || current.starts_with(&format!("{section}."));
        if in_section {
            if let Some((k, _)) = t.split_once('=') {
                if k.trim() == key {
                    return Some(n + 1);
                }
            }
        }
    }
    header
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    #[serde(default)]
    run: RawRun,
    env: RawEnv,
    #[serde(default)]
    algo: RawAlgo,
    #[serde(default)]
    schedule: RawSchedules,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawRun {
    name: Option<String>,
    seed: Option<u64>,
    workers: Option<usize>,
    total_episodes: Option<u64>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawEnv {
    name: String,
    horizon: Option<usize>,
    #[serde(rename = "treasure-grid")]
    treasure_grid: Option<TreasureLayout>,
    #[serde(rename = "point-mass-1d")]
    point_mass: Option<PointMassConfig>,
    #[serde(rename = "linear-quad")]
    linear_quad: Option<LinearQuadConfig>,
    objectives: Option<Vec<String>>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawAlgo {
    gamma: Option<f64>,
    lambda: Option<f64>,
    eps_clip: Option<f64>,
    eps_aols: Option<f64>,
    aols_max_iters: Option<usize>,
    horizon: Option<usize>,
    n_envs: Option<usize>,
    epochs: Option<usize>,
    critic_epochs: Option<usize>,
    minibatch: Option<usize>,
    hidden: Option<Vec<usize>>,
    max_grad_norm: Option<f64>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawSchedules {
    actor: Option<RawSchedule>,
    critic: Option<RawSchedule>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawSchedule {
    kind: ScheduleKind,
    base: f64,
    exponent: Option<f64>,
}

impl RawSchedule {
    fn build(self) -> StepsizeSchedule {
        StepsizeSchedule { kind: self.kind, base: self.base, exponent: self.exponent.unwrap_or(0.0) }
    }
}

type RawError = (&'static str, &'static str, String);

impl RawConfig {
    fn into_config(self) -> Result<TrainConfig, RawError> {
        let kind = match self.env.name.as_str() {
            "treasure-grid" => EnvKind::TreasureGrid {
                layout: self.env.treasure_grid.unwrap_or_else(TreasureLayout::classic),
                horizon: self.env.horizon.unwrap_or(100),
            },
            "point-mass-1d" => {
                let mut c = self.env.point_mass.unwrap_or_default();
                if let Some(h) = self.env.horizon {
                    c.horizon = h;
                }
                EnvKind::PointMass(c)
            }
            "linear-quad" => {
                let mut c = self.env.linear_quad.unwrap_or_default();
                if let Some(h) = self.env.horizon {
                    c.horizon = h;
                }
                EnvKind::LinearQuad(c)
            }
            other => {
                return Err((
                    "env",
                    "name",
                    format!("unknown environment {other:?}; expected treasure-grid, point-mass-1d or linear-quad"),
                ))
            }
        };
        let env = EnvConfig { kind, objectives: self.env.objectives };
        let mut cfg = TrainConfig::with_env(env);
        let run = self.run;
        cfg.name = run.name.unwrap_or(cfg.name);
        cfg.seed = run.seed.unwrap_or(cfg.seed);
        cfg.workers = run.workers.unwrap_or(cfg.workers);
        cfg.total_episodes = run.total_episodes.unwrap_or(cfg.total_episodes);
        let a = self.algo;
        cfg.gamma = a.gamma.unwrap_or(cfg.gamma);
        cfg.lambda = a.lambda.unwrap_or(cfg.lambda);
        cfg.eps_clip = a.eps_clip.unwrap_or(cfg.eps_clip);
        cfg.eps_aols = a.eps_aols.unwrap_or(cfg.eps_aols);
        cfg.aols_max_iters = a.aols_max_iters.unwrap_or(cfg.aols_max_iters);
        cfg.horizon = a.horizon.unwrap_or(cfg.horizon);
        cfg.n_envs = a.n_envs.unwrap_or(cfg.n_envs);
        cfg.epochs = a.epochs.unwrap_or(cfg.epochs);
        cfg.critic_epochs = a.critic_epochs.unwrap_or(cfg.critic_epochs);
        cfg.minibatch = a.minibatch.unwrap_or(cfg.minibatch);
        cfg.hidden = a.hidden.unwrap_or(cfg.hidden);
        if let Some(g) = a.max_grad_norm {
            cfg.max_grad_norm = Some(g);
        }
        if let Some(s) = self.schedule.actor {
            cfg.actor_schedule = s.build();
        }
        if let Some(s) = self.schedule.critic {
            cfg.critic_schedule = s.build();
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimal_config_uses_defaults() {
        let cfg = TrainConfig::parse("[env]\nname = \"treasure-grid\"\n").unwrap();
        assert_eq!(cfg.gamma, 0.99);
        assert_eq!(cfg.horizon, 200);
        assert_eq!(cfg.n_envs, 4);
        assert_eq!(cfg.env, EnvKind::TreasureGrid { layout: TreasureLayout::classic(), horizon: 100 }.into());
        assert_eq!(cfg.actor_schedule, StepsizeSchedule::constant(3e-4));
    }

    #[test]
    fn full_config_round_trip() {
        let text = r#"
[run]
name = "lq"
seed = 9
workers = 2
total_episodes = 5

[env]
name = "linear-quad"
horizon = 20

[env.linear-quad]
rho = 0.2

[algo]
gamma = 0.9
horizon = 40
n_envs = 2
hidden = [16]

[schedule.actor]
kind = "inverse-power"
base = 1e-3
exponent = 0.8

[schedule.critic]
kind = "inverse-power"
base = 1e-3
exponent = 0.6
"#;
        let cfg = TrainConfig::parse(text).unwrap();
        assert_eq!(cfg.seed, 9);
        assert_eq!(cfg.hidden, vec![16]);
        let EnvKind::LinearQuad(lq) = &cfg.env.kind else { panic!() };
        assert_eq!(lq.rho, 0.2);
        assert_eq!(lq.horizon, 20);
        assert_eq!(cfg.actor_schedule.rate(3), 1e-3 / 4f64.powf(0.8));
    }

    #[test]
    fn errors_name_the_line() {
        let text = "[env]\nname = \"treasure-grid\"\n\n[algo]\ngamma = 1.5\n";
        let err = TrainConfig::parse(text).unwrap_err();
        assert_eq!(err.line, Some(5));
        assert!(err.message.contains("gamma"));

        let err = TrainConfig::parse("[env]\nname = \"treasure-grid\"\n[algo]\nbogus = 1\n").unwrap_err();
        assert_eq!(err.line, Some(4));

        let err = TrainConfig::parse("[env]\nname = \"mujoco\"\n").unwrap_err();
        assert_eq!(err.line, Some(2));
        assert!(err.to_string().starts_with("<config>:2:"));
    }

    #[test]
    fn indivisible_batches_rejected() {
        let text = "[env]\nname = \"point-mass-1d\"\n[algo]\nn_envs = 4\nhorizon = 200\n";
        let err = TrainConfig::parse(text).unwrap_err();
        assert!(err.message.contains("3 equal sequences"), "{err}");
        let ok = "[env]\nname = \"point-mass-1d\"\n[algo]\nn_envs = 3\nhorizon = 200\n";
        assert!(TrainConfig::parse(ok).is_ok());
    }

    #[test]
    fn equal_constant_rates_rejected() {
        let text = "[env]\nname = \"treasure-grid\"\n[schedule.actor]\nkind = \"constant\"\nbase = 1e-3\n\
                    [schedule.critic]\nkind = \"constant\"\nbase = 1e-3\n";
        let err = TrainConfig::parse(text).unwrap_err();
        assert!(err.message.contains("schedule.actor"));
        assert_eq!(err.line, Some(3));
    }

    #[test]
    fn missing_file_names_path() {
        let err = TrainConfig::from_path(Path::new("/nonexistent/run.toml")).unwrap_err();
        assert!(err.to_string().contains("/nonexistent/run.toml"));
    }
}
