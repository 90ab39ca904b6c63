//! Authenticity decisions from co-motion patterns: anomaly scoring against a
//! pooled real template, ROC analysis and a boosted-stump classifier.

mod adaboost;
pub mod io;
mod roc;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

pub use adaboost::{classify, exp_loss, train_adaboost, AdaBoostConfig, Classification, Stump, StumpEnsemble};
pub use roc::{roc, OperatingPoint, RocCurve};

use crate::error::{Error, Result};
use crate::pattern::{accumulate, js_divergence, normalize, CorrelationMatrix, NormalizedPattern, WeightMode};
use crate::scalar::Scalar;

/// Default number of real correlation matrices pooled into a template.
pub const DEFAULT_TEMPLATE_SAMPLE: usize = 3000;

/// Ground-truth or predicted class. Fake is the positive class.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Label {
    Real,
    Fake,
}

impl Label {
    /// `+1` for fake, `-1` for real.
    pub fn sign(self) -> f64 {
        match self {
            Label::Real => -1.0,
            Label::Fake => 1.0,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Label::Real => "real",
            Label::Fake => "fake",
        }
    }
}

impl std::fmt::Display for Label {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for Label {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "real" => Ok(Label::Real),
            "fake" => Ok(Label::Fake),
            other => Err(Error::InvalidInput(format!("unknown label {other:?}"))),
        }
    }
}

/// Normalized pattern pooled from real-video correlation matrices.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RealTemplate<T> {
    pub pattern: NormalizedPattern<T>,
    pub source_count: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TemplateConfig {
    pub sample_size: usize,
    pub rng_seed: u64,
    pub weight_mode: WeightMode,
    pub epsilon: f64,
}

impl Default for TemplateConfig {
    fn default() -> Self {
        Self {
            sample_size: DEFAULT_TEMPLATE_SAMPLE,
            rng_seed: 0,
            weight_mode: WeightMode::Ch,
            epsilon: crate::pattern::DEFAULT_EPSILON,
        }
    }
}

/// Pools `min(sample_size, rhos.len())` matrices drawn without replacement.
/// The draw is made from the list sorted by pair id, so only the set of
/// matrices and the seed matter.
pub fn build_template<T: Scalar>(rhos: &[CorrelationMatrix<T>], cfg: &TemplateConfig) -> Result<RealTemplate<T>> {
    if rhos.is_empty() {
        return Err(Error::Empty("template correlation matrices"));
    }
    if cfg.sample_size == 0 {
        return Err(Error::InvalidConfig("template sample_size must be >= 1".into()));
    }
    let mut sorted: Vec<&CorrelationMatrix<T>> = rhos.iter().collect();
    sorted.sort_by_key(|r| r.pair);
    let chosen: Vec<CorrelationMatrix<T>> = if cfg.sample_size >= sorted.len() {
        sorted.into_iter().cloned().collect()
    } else {
        let mut rng = ChaCha8Rng::seed_from_u64(cfg.rng_seed);
        let mut idx = rand::seq::index::sample(&mut rng, sorted.len(), cfg.sample_size).into_vec();
        idx.sort_unstable();
        idx.into_iter().map(|i| sorted[i].clone()).collect()
    };
    let cp = accumulate(&chosen, cfg.weight_mode)?;
    Ok(RealTemplate { pattern: normalize(&cp, cfg.epsilon)?, source_count: chosen.len() })
}

/// Jensen-Shannon distance to the template; higher is more anomalous.
pub fn anomaly_score<T: Scalar>(p: &NormalizedPattern<T>, t: &RealTemplate<T>) -> Result<T> {
    js_divergence(p, &t.pattern)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::motfeat::PairId;

    fn rhos() -> Vec<CorrelationMatrix<f64>> {
        (0..20)
            .map(|t| {
                let labels = (0..6).map(|i| (i + t) % 3).collect();
                CorrelationMatrix::from_labels(PairId::new(t / 5, t % 5), labels, 1.0 + t as f64).unwrap()
            })
            .collect()
    }

    #[test]
    fn template_uses_everything_when_sample_is_large() {
        let all = rhos();
        let t = build_template(&all, &TemplateConfig { sample_size: 100, ..Default::default() }).unwrap();
        assert_eq!(t.source_count, 20);
        let direct = normalize(&accumulate(&all, WeightMode::Ch).unwrap(), crate::pattern::DEFAULT_EPSILON).unwrap();
        assert_eq!(t.pattern, direct);
        assert_eq!(anomaly_score(&direct, &t).unwrap(), 0.0);
    }

    #[test]
    fn template_sampling_is_seeded_and_order_free() {
        let all = rhos();
        let cfg = TemplateConfig { sample_size: 7, rng_seed: 9, ..Default::default() };
        let a = build_template(&all, &cfg).unwrap();
        assert_eq!(a.source_count, 7);
        let mut rev = all.clone();
        rev.reverse();
        assert_eq!(build_template(&rev, &cfg).unwrap(), a);
        let other = build_template(&all, &TemplateConfig { rng_seed: 10, ..cfg.clone() }).unwrap();
        assert_ne!(other, a);
    }

    #[test]
    fn template_errors() {
        assert!(matches!(build_template::<f64>(&[], &TemplateConfig::default()), Err(Error::Empty(_))));
        let cfg = TemplateConfig { sample_size: 0, ..Default::default() };
        assert!(build_template(&rhos(), &cfg).is_err());
    }

    #[test]
    fn label_text_round_trip() {
        for l in [Label::Real, Label::Fake] {
            assert_eq!(l.as_str().parse::<Label>().unwrap(), l);
        }
        assert!("maybe".parse::<Label>().is_err());
        assert_eq!(Label::Fake.sign(), 1.0);
    }
}
