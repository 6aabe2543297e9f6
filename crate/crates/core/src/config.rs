//! Run configuration: a TOML tree whose omitted entries take the defaults of
//! the selected problem.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::analysis::Disturbance;
use crate::fdm::FdmConfig;
use crate::game::{PathPlanningParams, PathPlanningProblem, Problem, PubSubParams, PubSubProblem};
use crate::net::Representation;
use crate::pinn::TrainConfig;
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ProblemConfig {
    PathPlanning(PathPlanningParams),
    #[serde(rename = "pubsub")]
    PubSub(PubSubParams),
}

impl Default for ProblemConfig {
    fn default() -> Self {
        ProblemConfig::PathPlanning(PathPlanningParams::default())
    }
}

impl ProblemConfig {
    pub fn build(&self) -> Result<Problem> {
        Ok(match self {
            ProblemConfig::PathPlanning(p) => Problem::PathPlanning(PathPlanningProblem::new(p.clone())?),
            ProblemConfig::PubSub(p) => Problem::PubSub(PubSubProblem::new(p.clone())?),
        })
    }

    /// Training settings of the reference experiments for this problem.
    pub fn default_training(&self) -> TrainConfig {
        match self {
            ProblemConfig::PathPlanning(_) => TrainConfig::default(),
            ProblemConfig::PubSub(p) => TrainConfig {
                epochs: 5000,
                outer_iterations: 500,
                n_collocation: p.dimension * 1000,
                hidden: vec![64; 3],
                ..TrainConfig::default()
            },
        }
    }

    pub fn default_fdm(&self) -> FdmConfig {
        match self {
            ProblemConfig::PathPlanning(_) => FdmConfig::path_planning(),
            ProblemConfig::PubSub(p) => {
                let mut c = FdmConfig::pubsub();
                let pick = |d: &Option<crate::game::BoxDomain>, fallback: &crate::game::BoxDomain| match d {
                    Some(b) => crate::game::BoxDomain { lower: b.lower[..2].to_vec(), upper: b.upper[..2].to_vec() },
                    None => fallback.clone(),
                };
                c.extended = pick(&p.sampling_domain, &c.extended);
                c.target = pick(&p.target_domain, &c.target);
                c
            }
        }
    }
}

/// Inputs of the `compare` subcommand.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CompareConfig {
    /// Reference grid in the CSV grid format (2D problems).
    #[serde(default)]
    pub reference: Option<PathBuf>,
    /// Pairwise grids for a high-dimensional pub-sub reference, in subscriber order.
    #[serde(default)]
    pub pair_references: Vec<PathBuf>,
    pub networks: Vec<NamedNetwork>,
    #[serde(default = "default_times")]
    pub times: Vec<f64>,
    /// Random evaluation points when comparing against pairwise references.
    #[serde(default = "default_eval_points")]
    pub eval_points: usize,
}

fn default_times() -> Vec<f64> {
    vec![0.0, 0.25, 0.5, 0.75]
}

fn default_eval_points() -> usize {
    10_000
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NamedNetwork {
    pub method: String,
    pub path: PathBuf,
    #[serde(default)]
    pub representation: Representation,
}

/// Inputs of the `trajectories` subcommand.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RolloutConfig {
    pub network: PathBuf,
    #[serde(default)]
    pub representation: Representation,
    pub starts: Vec<Vec<f64>>,
    #[serde(default = "default_paths")]
    pub paths_per_start: usize,
    #[serde(default = "default_dt")]
    pub dt: f64,
    #[serde(default)]
    pub disturbance: Disturbance,
}

fn default_paths() -> usize {
    1
}

fn default_dt() -> f64 {
    1e-2
}

/// Inputs of the `probe-theory` subcommand.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ProbeConfig {
    pub samples: usize,
    pub p_max: f64,
}

impl Default for ProbeConfig {
    fn default() -> Self {
        ProbeConfig { samples: 10_000, p_max: 1.0 }
    }
}

/// Fully resolved configuration of one run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub seed: u64,
    pub out: PathBuf,
    pub deterministic: bool,
    pub workers: Option<usize>,
    pub problem: ProblemConfig,
    pub training: TrainConfig,
    pub fdm: FdmConfig,
    pub compare: Option<CompareConfig>,
    pub rollout: Option<RolloutConfig>,
    pub probe: ProbeConfig,
}

/// Recursively overlays `patch` onto `base`; tables merge, everything else is replaced.
fn overlay(base: &mut toml::Value, patch: toml::Value) {
    match (base, patch) {
        (toml::Value::Table(b), toml::Value::Table(p)) => {
            for (k, v) in p {
                match b.get_mut(&k) {
                    Some(slot) => overlay(slot, v),
                    None => {
                        b.insert(k, v);
                    }
                }
            }
        }
        (slot, v) => *slot = v,
    }
}

fn to_value<T: Serialize>(v: &T) -> Result<toml::Value> {
    toml::Value::try_from(v).map_err(|e| Error::Config(e.to_string()))
}

fn from_value<T: for<'de> Deserialize<'de>>(v: toml::Value, section: &str) -> Result<T> {
    v.try_into().map_err(|e: toml::de::Error| Error::Parse(format!("[{section}] {}", e.message())))
}

impl RunConfig {
    /// Parses a TOML document; any omitted key takes its default and unknown
    /// keys are rejected.
    pub fn parse(text: &str) -> Result<Self> {
        let doc: toml::Table = text.parse().map_err(|e: toml::de::Error| Error::Parse(e.message().to_string()))?;
        Self::from_table(doc)
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| match e.kind() {
            std::io::ErrorKind::NotFound => Error::MissingInput(path.to_path_buf()),
            _ => Error::Io(e),
        })?;
        Self::parse(&text)
    }

    fn from_table(mut doc: toml::Table) -> Result<Self> {
        const KNOWN: [&str; 10] = ["seed", "out", "deterministic", "workers", "problem", "training", "fdm", "compare", "rollout", "probe"];
        if let Some(k) = doc.keys().find(|k| !KNOWN.contains(&k.as_str())) {
            return Err(Error::Parse(format!("unknown key `{k}`")));
        }
        let seed = match doc.remove("seed") {
            Some(v) => from_value::<i64>(v, "seed").and_then(|s| u64::try_from(s).map_err(|_| Error::Parse("seed must be >= 0".into())))?,
            None => 0,
        };
        let out = doc.remove("out").map(|v| from_value::<PathBuf>(v, "out")).transpose()?.unwrap_or_else(|| PathBuf::from("out"));
        let deterministic = doc.remove("deterministic").map(|v| from_value(v, "deterministic")).transpose()?.unwrap_or(false);
        let workers = doc.remove("workers").map(|v| from_value(v, "workers")).transpose()?;
        let problem: ProblemConfig = match doc.remove("problem") {
            Some(v) => from_value(v, "problem")?,
            None => ProblemConfig::default(),
        };
        let mut training = to_value(&problem.default_training())?;
        if let Some(v) = doc.remove("training") {
            overlay(&mut training, v);
        }
        let mut training: TrainConfig = from_value(training, "training")?;
        training.seed = seed;
        let mut fdm = to_value(&problem.default_fdm())?;
        if let Some(v) = doc.remove("fdm") {
            overlay(&mut fdm, v);
        }
        let fdm = from_value(fdm, "fdm")?;
        let compare = doc.remove("compare").map(|v| from_value(v, "compare")).transpose()?;
        let rollout = doc.remove("rollout").map(|v| from_value(v, "rollout")).transpose()?;
        let probe = doc.remove("probe").map(|v| from_value(v, "probe")).transpose()?.unwrap_or_default();
        let cfg = RunConfig { seed, out, deterministic, workers, problem, training, fdm, compare, rollout, probe };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        self.training.validate()?;
        self.fdm.validate()?;
        self.problem.build()?;
        if self.workers == Some(0) {
            return Err(Error::Config("workers must be >= 1".into()));
        }
        Ok(())
    }

    /// Sets the run seed everywhere it is used.
    pub fn set_seed(&mut self, seed: u64) {
        self.seed = seed;
        self.training.seed = seed;
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Config(e.to_string()))
    }
}

impl Default for RunConfig {
    fn default() -> Self {
        Self::from_table(toml::Table::new()).expect("defaults are valid")
    }
}
