//! Whole-pipeline configuration and its flat `key = value` file format.
//!
//! Keys are kebab-case (`n-pairs`, `flow-alpha`, `k-max`, ...); underscores
//! are accepted in their place. `#` starts a comment. Later assignments win,
//! so command-line flags applied after the file override it.

use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::flowcore::FlowSolverConfig;
use crate::grouping::GroupingConfig;
use crate::motfeat::MotionGateConfig;
use crate::pattern::{WeightMode, DEFAULT_EPSILON};

/// How the `N` correlation matrices of a pattern are picked from a video.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RhoSampling {
    /// The first `N` surviving frame pairs.
    #[default]
    Contiguous,
    /// `N` surviving frame pairs drawn without replacement.
    Random,
}

impl FromStr for RhoSampling {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "contiguous" => Ok(Self::Contiguous),
            "random" => Ok(Self::Random),
            other => Err(Error::InvalidConfig(format!("unknown sample-rho {other:?}"))),
        }
    }
}

impl std::fmt::Display for RhoSampling {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Self::Contiguous => "contiguous",
            Self::Random => "random",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PipelineConfig {
    pub flow: FlowSolverConfig,
    pub gate: MotionGateConfig,
    pub grouping: GroupingConfig,
    pub weight_mode: WeightMode,
    pub epsilon: f64,
    pub template_sample_size: usize,
    pub adaboost_rounds: usize,
    /// Seed all stochastic stages derive their streams from.
    pub seed: u64,
    /// Correlation matrices per pattern (`N`).
    pub n_pairs: usize,
    pub sample_rho: RhoSampling,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self {
            flow: FlowSolverConfig::default(),
            gate: MotionGateConfig::default(),
            grouping: GroupingConfig::default(),
            weight_mode: WeightMode::Ch,
            epsilon: DEFAULT_EPSILON,
            template_sample_size: crate::detect::DEFAULT_TEMPLATE_SAMPLE,
            adaboost_rounds: 100,
            seed: 0,
            n_pairs: 35,
            sample_rho: RhoSampling::Contiguous,
        }
    }
}

fn parse<V: FromStr>(key: &str, value: &str) -> Result<V> {
    value
        .parse()
        .map_err(|_| Error::InvalidConfig(format!("bad value {value:?} for {key}")))
}

impl PipelineConfig {
    pub fn validate(&self) -> Result<()> {
        self.flow.validate()?;
        self.gate.validate()?;
        self.grouping.validate()?;
        if self.n_pairs == 0 {
            return Err(Error::InvalidConfig("n-pairs must be >= 1".into()));
        }
        if !(self.epsilon >= 0.0 && self.epsilon.is_finite()) {
            return Err(Error::InvalidConfig("epsilon must be finite and >= 0".into()));
        }
        if self.template_sample_size == 0 {
            return Err(Error::InvalidConfig("template-sample-size must be >= 1".into()));
        }
        Ok(())
    }

    /// Applies one assignment. Unknown keys are an error.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let k = key.trim().replace('_', "-");
        let v = value.trim();
        match k.as_str() {
            "seed" => self.seed = parse(&k, v)?,
            "n-pairs" => self.n_pairs = parse(&k, v)?,
            "weight-mode" => self.weight_mode = v.parse()?,
            "sample-rho" => self.sample_rho = v.parse()?,
            "epsilon" => self.epsilon = parse(&k, v)?,
            "template-sample-size" => self.template_sample_size = parse(&k, v)?,
            "adaboost-rounds" => self.adaboost_rounds = parse(&k, v)?,
            "flow-alpha" => self.flow.alpha = parse(&k, v)?,
            "flow-psi-epsilon" => self.flow.psi_epsilon = parse(&k, v)?,
            "flow-gradient-weight" => self.flow.gradient_weight = parse(&k, v)?,
            "flow-pyramid-factor" => self.flow.pyramid_factor = parse(&k, v)?,
            "flow-pyramid-min-size" => self.flow.pyramid_min_size = parse(&k, v)?,
            "flow-outer-iterations" => self.flow.outer_iterations = parse(&k, v)?,
            "flow-inner-iterations" => self.flow.inner_iterations = parse(&k, v)?,
            "flow-sor-omega" => self.flow.sor_omega = parse(&k, v)?,
            "gate-fraction" => self.gate.fraction_p = parse(&k, v)?,
            "gate-magnitude" => self.gate.magnitude_threshold = parse(&k, v)?,
            "gate-window" => self.gate.window_half_width = parse(&k, v)?,
            "gate-sigma" => self.gate.gaussian_sigma = parse(&k, v)?,
            "k-min" => self.grouping.k_min = parse(&k, v)?,
            "k-max" => self.grouping.k_max = parse(&k, v)?,
            "kmeans-restarts" => self.grouping.kmeans_restarts = parse(&k, v)?,
            "kmeans-max-iters" => self.grouping.kmeans_max_iters = parse(&k, v)?,
            "degree-floor" => self.grouping.degree_floor = parse(&k, v)?,
            "ch-space" => self.grouping.ch_space = v.parse()?,
            _ => return Err(Error::InvalidConfig(format!("unknown config key {key:?}"))),
        }
        Ok(())
    }

    /// Applies every assignment in `text` on top of `self`.
    pub fn apply_str(&mut self, text: &str) -> Result<()> {
        for (no, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| Error::InvalidConfig(format!("line {}: expected key = value", no + 1)))?;
            self.set(key, value)
                .map_err(|e| Error::InvalidConfig(format!("line {}: {e}", no + 1)))?;
        }
        Ok(())
    }

    pub fn from_file(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let mut cfg = Self::default();
        cfg.apply_str(&text)?;
        Ok(cfg)
    }

    /// The configuration as `key = value` lines accepted by [`apply_str`](Self::apply_str).
    pub fn to_kv_string(&self) -> String {
        let pairs: Vec<(&str, String)> = vec![
            ("seed", self.seed.to_string()),
            ("n-pairs", self.n_pairs.to_string()),
            ("weight-mode", self.weight_mode.to_string()),
            ("sample-rho", self.sample_rho.to_string()),
            ("epsilon", self.epsilon.to_string()),
            ("template-sample-size", self.template_sample_size.to_string()),
            ("adaboost-rounds", self.adaboost_rounds.to_string()),
            ("flow-alpha", self.flow.alpha.to_string()),
            ("flow-psi-epsilon", self.flow.psi_epsilon.to_string()),
            ("flow-gradient-weight", self.flow.gradient_weight.to_string()),
            ("flow-pyramid-factor", self.flow.pyramid_factor.to_string()),
            ("flow-pyramid-min-size", self.flow.pyramid_min_size.to_string()),
            ("flow-outer-iterations", self.flow.outer_iterations.to_string()),
            ("flow-inner-iterations", self.flow.inner_iterations.to_string()),
            ("flow-sor-omega", self.flow.sor_omega.to_string()),
            ("gate-fraction", self.gate.fraction_p.to_string()),
            ("gate-magnitude", self.gate.magnitude_threshold.to_string()),
            ("gate-window", self.gate.window_half_width.to_string()),
            ("gate-sigma", self.gate.gaussian_sigma.to_string()),
            ("k-min", self.grouping.k_min.to_string()),
            ("k-max", self.grouping.k_max.to_string()),
            ("kmeans-restarts", self.grouping.kmeans_restarts.to_string()),
            ("kmeans-max-iters", self.grouping.kmeans_max_iters.to_string()),
            ("degree-floor", self.grouping.degree_floor.to_string()),
            ("ch-space", self.grouping.ch_space.to_string()),
        ];
        pairs.into_iter().map(|(k, v)| format!("{k} = {v}\n")).collect()
    }
}
