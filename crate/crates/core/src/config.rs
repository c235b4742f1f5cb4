//! Run configuration: one flat namespace of `key = value` settings.

use std::path::Path;

use dsqn_tensor::AdamConfig;
use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

use crate::agent::{EpsilonSchedule, Mode};
use crate::encoder::EncoderConfig;
use crate::error::{CoreError, Result};

/// How the two losses share optimizer steps.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Schedule {
    /// One step on the weighted sum.
    Joint,
    /// One step per task, each on its own weighted term.
    Independent,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainConfig {
    pub mode: Mode,
    pub schedule: Schedule,
    /// Environment steps, observation phase included.
    pub total_steps: u64,
    pub observation_steps: u64,
    pub replay_capacity: usize,
    pub epsilon_start: f64,
    pub epsilon_end: f64,
    /// Training steps over which ε decays linearly.
    pub epsilon_decay_steps: u64,
    pub dqn_batch: usize,
    /// Pairs per SNN batch; half of them share the anchor's label.
    pub snn_pairs: usize,
    /// Training steps between target-network syncs.
    pub sync_period: u64,
    pub eval_every: u64,
    pub log_every: u64,
    pub discount: f64,
    pub bandit_c: f64,
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub adam_eps: f64,
    /// Global gradient-norm clip; 0 disables clipping.
    pub clip_norm: f64,
    /// Pairs drawn from dev-episode memory at each evaluation.
    pub dev_pairs: usize,
    /// Keep a model snapshot per evaluation under `models/`.
    pub keep_series: bool,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            mode: Mode::DsqnFactored,
            schedule: Schedule::Joint,
            total_steps: 300_000,
            observation_steps: 2_000,
            replay_capacity: 50_000,
            epsilon_start: 1.0,
            epsilon_end: 0.0001,
            epsilon_decay_steps: 200_000,
            dqn_batch: 16,
            snn_pairs: 16,
            sync_period: 1_000,
            eval_every: 5_000,
            log_every: 100,
            discount: 0.9,
            bandit_c: 0.07,
            lr: 1e-3,
            beta1: 0.9,
            beta2: 0.999,
            adam_eps: 1e-8,
            clip_norm: 5.0,
            dev_pairs: 100,
            keep_series: true,
        }
    }
}

impl TrainConfig {
    pub fn epsilon(&self) -> EpsilonSchedule {
        EpsilonSchedule {
            start: self.epsilon_start,
            end: self.epsilon_end,
            decay_steps: self.epsilon_decay_steps,
        }
    }

    pub fn adam(&self) -> AdamConfig {
        AdamConfig {
            lr: self.lr,
            beta1: self.beta1,
            beta2: self.beta2,
            eps: self.adam_eps,
            clip_norm: (self.clip_norm > 0.0).then_some(self.clip_norm),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(CoreError::Config(m.to_string()));
        if self.observation_steps >= self.total_steps {
            return bad("observation_steps must be below total_steps");
        }
        if self.replay_capacity == 0 || self.dqn_batch == 0 || self.sync_period == 0 {
            return bad("replay_capacity, dqn_batch and sync_period must be positive");
        }
        if self.eval_every == 0 || self.log_every == 0 {
            return bad("eval_every and log_every must be positive");
        }
        if self.mode.trains_snn() && self.snn_pairs < 2 {
            return bad("snn_pairs must be at least 2");
        }
        if !(0.0..=1.0).contains(&self.epsilon_start) || !(0.0..=1.0).contains(&self.epsilon_end) {
            return bad("epsilon bounds must lie in [0, 1]");
        }
        if !(0.0..=1.0).contains(&self.discount) {
            return bad("discount must lie in [0, 1]");
        }
        if self.lr <= 0.0 || self.clip_norm < 0.0 {
            return bad("lr must be positive and clip_norm non-negative");
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EvalConfig {
    pub episodes: usize,
    /// Split used for pair accuracy and clustering.
    pub eval_split: String,
    pub snn_eval_pairs: usize,
    pub cluster_epsilon: f64,
    pub cluster_trajectories: usize,
    pub min_label_count: usize,
    pub kmeans_restarts: usize,
}

impl Default for EvalConfig {
    fn default() -> Self {
        EvalConfig {
            episodes: 10,
            eval_split: "test1".into(),
            snn_eval_pairs: 3_200,
            cluster_epsilon: 0.5,
            cluster_trajectories: 5_000,
            min_label_count: 10,
            kmeans_restarts: 10,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GeneralConfig {
    pub seed: u64,
    pub threads: usize,
}

impl Default for GeneralConfig {
    fn default() -> Self {
        GeneralConfig { seed: 0, threads: 1 }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub general: GeneralConfig,
    pub encoder: EncoderConfig,
    pub train: TrainConfig,
    pub eval: EvalConfig,
}

fn json_err(e: serde_json::Error) -> CoreError {
    CoreError::Config(e.to_string())
}

fn sections(v: &Value) -> &Map<String, Value> {
    v.as_object().expect("config serializes to an object")
}

impl RunConfig {
    pub fn validate(&self) -> Result<()> {
        self.encoder.validate()?;
        self.train.validate()?;
        if self.general.threads == 0 {
            return Err(CoreError::Config("threads must be positive".into()));
        }
        Ok(())
    }

    /// Every settable key with its current value, in section order.
    pub fn entries(&self) -> Vec<(String, String)> {
        let v = serde_json::to_value(self).expect("config serializes");
        let mut out = Vec::new();
        for (_, section) in sections(&v) {
            for (k, val) in sections(section) {
                let text = match val {
                    Value::String(s) => s.clone(),
                    other => other.to_string(),
                };
                out.push((k.clone(), text));
            }
        }
        out
    }

    pub fn keys() -> Vec<String> {
        RunConfig::default().entries().into_iter().map(|(k, _)| k).collect()
    }

    /// Sets one key from its textual form.
    pub fn set(&mut self, key: &str, raw: &str) -> Result<()> {
        let mut v = serde_json::to_value(&*self).map_err(json_err)?;
        let section = v
            .as_object_mut()
            .expect("object")
            .values_mut()
            .find(|s| s.as_object().is_some_and(|m| m.contains_key(key)))
            .ok_or_else(|| CoreError::Config(format!("unknown key `{key}`")))?;
        let slot = section.as_object_mut().expect("object").get_mut(key).expect("present");
        *slot = match slot {
            Value::String(_) => Value::String(raw.to_string()),
            _ => serde_json::from_str(raw).map_err(|_| CoreError::Config(format!("bad value `{raw}` for `{key}`")))?,
        };
        *self = serde_json::from_value(v).map_err(|e| CoreError::Config(format!("`{key}`: {e}")))?;
        Ok(())
    }

    /// Parses `key = value` lines; `#` starts a comment, `[section]` headers
    /// are accepted and ignored.
    pub fn parse(text: &str) -> Result<Self> {
        let mut cfg = RunConfig::default();
        cfg.apply_text(text)?;
        Ok(cfg)
    }

    /// Applies the settings of a config file on top of `self`.
    pub fn apply_text(&mut self, text: &str) -> Result<()> {
        let cfg = self;
        for (n, line) in text.lines().enumerate() {
            let line = line.split('#').next().unwrap_or("").trim();
            if line.is_empty() || (line.starts_with('[') && line.ends_with(']')) {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| CoreError::Config(format!("line {}: expected `key = value`", n + 1)))?;
            let v = v.trim();
            let v = v.strip_prefix('"').and_then(|s| s.strip_suffix('"')).unwrap_or(v);
            cfg.set(k.trim(), v).map_err(|e| CoreError::Config(format!("line {}: {e}", n + 1)))?;
        }
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| CoreError::io(path, e))?;
        Self::parse(&text)
    }

    /// The flat file form, one section header per group.
    pub fn to_text(&self) -> String {
        let v = serde_json::to_value(self).expect("config serializes");
        let mut out = String::new();
        for (name, section) in sections(&v) {
            out.push_str(&format!("[{name}]\n"));
            for (k, val) in sections(section) {
                let text = match val {
                    Value::String(s) => s.clone(),
                    other => other.to_string(),
                };
                out.push_str(&format!("{k} = {text}\n"));
            }
            out.push('\n');
        }
        out
    }

    pub fn to_json(&self) -> Value {
        serde_json::to_value(self).expect("config serializes")
    }

    pub fn from_json(v: &[u8]) -> Result<Self> {
        serde_json::from_slice(v).map_err(json_err)
    }
}
