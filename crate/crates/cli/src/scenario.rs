//! Scenario files.
//!
//! A scenario is a TOML document with flat top-level keys and one
//! `[[process]]` block per process, in id order:
//!
//! ```toml
//! mode = "synchronous"        # or "asynchronous"
//! seed = 7
//! horizon = 10                # days (synchronous) or rounds (asynchronous)
//! trials = 100000             # optional, default 1000
//! checkpoints = [1, 5, 10]    # optional, default [horizon]
//! tolerance_floor = 0.005     # optional
//!
//! [group]                     # asynchronous only
//! size = 2
//! policy = "round_robin"      # or "seeded_random"
//!
//! [output]
//! dir = "out"
//!
//! [[process]]
//! epsilon = 0.0
//!
//! [[process]]
//! schedule = [0.1, 0.5]
//! extension = "cycle"         # or "hold_last"
//! ```

use std::path::{Path, PathBuf};

use pbk_core::montecarlo::{SimMode, TrialConfig, DEFAULT_TOLERANCE_FLOOR};
use pbk_core::protocol::{profiles_from_schedules, AnswerMode};
use pbk_core::{CheatSchedule, ExtensionPolicy, GroupPolicy, GroupSchedule, Seed};
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub const DEFAULT_TRIALS: u64 = 1000;

#[derive(Debug, Error)]
pub enum ScenarioError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{0}")]
    Syntax(String),
    #[error("{field}: {message}")]
    Field { field: String, message: String },
}

fn field_err(field: impl Into<String>, message: impl Into<String>) -> ScenarioError {
    ScenarioError::Field {
        field: field.into(),
        message: message.into(),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModeSpec {
    Synchronous,
    Asynchronous,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PolicySpec {
    RoundRobin,
    SeededRandom,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExtensionSpec {
    Cycle,
    HoldLast,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GroupSpec {
    pub size: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub policy: Option<PolicySpec>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSpec {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dir: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProcessSpec {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub epsilon: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub schedule: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub extension: Option<ExtensionSpec>,
}

/// Raw file contents, before range checks.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioFile {
    pub mode: ModeSpec,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n: Option<usize>,
    pub seed: u64,
    pub horizon: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub trials: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub checkpoints: Option<Vec<u64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tolerance_floor: Option<f64>,
    /// Fixes the correct answer of every question instead of sampling it.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub correct_answer: Option<u8>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub group: Option<GroupSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output: Option<OutputSpec>,
    #[serde(rename = "process", default)]
    pub processes: Vec<ProcessSpec>,
}

/// A validated scenario.
#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub config: TrialConfig<f64>,
    pub tolerance_floor: f64,
    pub output_dir: Option<PathBuf>,
}

pub fn parse_scenario(path: &Path) -> Result<Scenario, ScenarioError> {
    let text = std::fs::read_to_string(path).map_err(|source| ScenarioError::Io {
        path: path.to_owned(),
        source,
    })?;
    parse_scenario_str(&text)
}

pub fn parse_scenario_str(text: &str) -> Result<Scenario, ScenarioError> {
    let file: ScenarioFile =
        toml::from_str(text).map_err(|e| ScenarioError::Syntax(e.to_string()))?;
    file.validate()
}

fn schedule_of(i: usize, spec: &ProcessSpec) -> Result<CheatSchedule<f64>, ScenarioError> {
    let field = |name: &str| format!("process[{}].{name}", i + 1);
    let range_msg = |v: f64| {
        format!(
            "process {} has cheat probability {v}, outside [0, 1]",
            i + 1
        )
    };
    match (spec.epsilon, &spec.schedule) {
        (Some(eps), None) => {
            if spec.extension.is_some() {
                return Err(field_err(
                    field("extension"),
                    "only valid together with `schedule`",
                ));
            }
            CheatSchedule::constant_value(eps)
                .map_err(|_| field_err(field("epsilon"), range_msg(eps)))
        }
        (None, Some(values)) => {
            if values.is_empty() {
                return Err(field_err(
                    field("schedule"),
                    "must contain at least one probability",
                ));
            }
            if let Some(&bad) = values.iter().find(|v| !(0.0..=1.0).contains(*v)) {
                return Err(field_err(field("schedule"), range_msg(bad)));
            }
            let ext = match spec.extension {
                Some(ExtensionSpec::HoldLast) => ExtensionPolicy::HoldLast,
                Some(ExtensionSpec::Cycle) | None => ExtensionPolicy::Cycle,
            };
            Ok(CheatSchedule::varying_values(values, ext).expect("validated above"))
        }
        (Some(_), Some(_)) => Err(field_err(
            format!("process[{}]", i + 1),
            "give either `epsilon` or `schedule`, not both",
        )),
        (None, None) => Err(field_err(
            format!("process[{}]", i + 1),
            "missing `epsilon` or `schedule`",
        )),
    }
}

impl ScenarioFile {
    pub fn validate(&self) -> Result<Scenario, ScenarioError> {
        if self.processes.is_empty() {
            return Err(field_err(
                "process",
                "at least one [[process]] block is required",
            ));
        }
        let n = self.processes.len();
        if let Some(declared) = self.n {
            if declared != n {
                return Err(field_err(
                    "n",
                    format!("declares {declared} processes but {n} [[process]] blocks are given"),
                ));
            }
        }
        let schedules = self
            .processes
            .iter()
            .enumerate()
            .map(|(i, p)| schedule_of(i, p))
            .collect::<Result<Vec<_>, _>>()?;

        if self.horizon == 0 {
            return Err(field_err("horizon", "must be at least 1"));
        }
        let trials = self.trials.unwrap_or(DEFAULT_TRIALS);
        if trials == 0 {
            return Err(field_err("trials", "must be at least 1"));
        }
        let checkpoints = self
            .checkpoints
            .clone()
            .unwrap_or_else(|| vec![self.horizon]);
        if checkpoints.is_empty() {
            return Err(field_err("checkpoints", "must not be empty"));
        }
        if checkpoints.windows(2).any(|w| w[0] >= w[1]) || checkpoints[0] == 0 {
            return Err(field_err(
                "checkpoints",
                "must be strictly increasing and at least 1",
            ));
        }
        if let Some(&bad) = checkpoints.iter().find(|&&c| c > self.horizon) {
            return Err(field_err(
                "checkpoints",
                format!("checkpoint {bad} exceeds horizon {}", self.horizon),
            ));
        }
        let tolerance_floor = self.tolerance_floor.unwrap_or(DEFAULT_TOLERANCE_FLOOR);
        if !(tolerance_floor >= 0.0 && tolerance_floor.is_finite()) {
            return Err(field_err(
                "tolerance_floor",
                "must be a finite non-negative number",
            ));
        }
        let answer_mode = match self.correct_answer {
            None => AnswerMode::Sampled,
            Some(a @ (0 | 1)) => AnswerMode::Fixed(a),
            Some(other) => {
                return Err(field_err(
                    "correct_answer",
                    format!("{other} is not 0 or 1"),
                ))
            }
        };

        let mode = match (self.mode, &self.group) {
            (ModeSpec::Synchronous, None) => SimMode::Synchronous,
            (ModeSpec::Synchronous, Some(_)) => {
                return Err(field_err("group", "only valid in asynchronous mode"))
            }
            (ModeSpec::Asynchronous, None) => {
                return Err(field_err(
                    "group",
                    "asynchronous mode needs a [group] table",
                ))
            }
            (ModeSpec::Asynchronous, Some(g)) => {
                if g.size > n {
                    return Err(field_err(
                        "group.size",
                        format!("k > n (k = {}, n = {n})", g.size),
                    ));
                }
                if g.size == 0 {
                    return Err(field_err("group.size", "k must be at least 1"));
                }
                let policy = match g.policy {
                    Some(PolicySpec::SeededRandom) => GroupPolicy::SeededRandom,
                    Some(PolicySpec::RoundRobin) | None => GroupPolicy::RoundRobinByIndex,
                };
                SimMode::Asynchronous {
                    group: GroupSchedule::new(g.size, policy),
                }
            }
        };

        let config = TrialConfig {
            mode,
            profiles: profiles_from_schedules(schedules).expect("non-empty"),
            horizon: self.horizon,
            trials,
            seed: Seed::new(self.seed),
            checkpoints,
            answer_mode,
        };
        config
            .validate()
            .map_err(|e| field_err("scenario", e.to_string()))?;
        Ok(Scenario {
            config,
            tolerance_floor,
            output_dir: self.output.as_ref().and_then(|o| o.dir.clone()),
        })
    }
}

impl Scenario {
    /// File form with every default written out explicitly.
    pub fn to_file(&self) -> ScenarioFile {
        let cfg = &self.config;
        let (mode, group) = match cfg.mode {
            SimMode::Synchronous => (ModeSpec::Synchronous, None),
            SimMode::Asynchronous { group } => (
                ModeSpec::Asynchronous,
                Some(GroupSpec {
                    size: group.k,
                    policy: Some(match group.policy {
                        GroupPolicy::RoundRobinByIndex => PolicySpec::RoundRobin,
                        GroupPolicy::SeededRandom => PolicySpec::SeededRandom,
                    }),
                }),
            ),
        };
        let processes = cfg
            .profiles
            .iter()
            .map(|p| match &p.schedule {
                CheatSchedule::Constant { probability } => ProcessSpec {
                    epsilon: Some(probability.value()),
                    schedule: None,
                    extension: None,
                },
                CheatSchedule::Varying {
                    probabilities,
                    extension,
                } => ProcessSpec {
                    epsilon: None,
                    schedule: Some(probabilities.iter().map(|p| p.value()).collect()),
                    extension: Some(match extension {
                        ExtensionPolicy::Cycle => ExtensionSpec::Cycle,
                        ExtensionPolicy::HoldLast => ExtensionSpec::HoldLast,
                    }),
                },
            })
            .collect();
        ScenarioFile {
            mode,
            n: Some(cfg.profiles.len()),
            seed: cfg.seed.value(),
            horizon: cfg.horizon,
            trials: Some(cfg.trials),
            checkpoints: Some(cfg.checkpoints.clone()),
            tolerance_floor: Some(self.tolerance_floor),
            correct_answer: match cfg.answer_mode {
                AnswerMode::Sampled => None,
                AnswerMode::Fixed(a) => Some(a),
            },
            group,
            output: self
                .output_dir
                .clone()
                .map(|dir| OutputSpec { dir: Some(dir) }),
            processes,
        }
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(&self.to_file()).expect("scenario serializes to TOML")
    }
}
