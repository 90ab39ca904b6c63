//! Frames or flow fields plus a landmark track in, one co-motion pattern out.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::config::{PipelineConfig, RhoSampling};
use crate::error::{Error, Result};
use crate::flowcore::{estimate_flow, FlowField, FlowSolverConfig, Frame};
use crate::grouping::{best_partition, GroupingConfig};
use crate::motfeat::{extract_features, MotionFeatureSet, MotionGateConfig, PairId};
use crate::pattern::io::{PatternSidecar, WeightStats};
use crate::pattern::{accumulate, correlation_matrix, CoMotionPattern, CorrelationMatrix};
use crate::scalar::Scalar;
use crate::seed::{derive_seed, stage};
use crate::tracks::LandmarkTrack;

/// Flow for every consecutive pair of indexed frames, keyed by the first
/// frame's index. Pairs are estimated in parallel.
pub fn estimate_flows<T: Scalar>(
    frames: &[(usize, Frame<T>)],
    cfg: &FlowSolverConfig,
) -> Result<Vec<(usize, FlowField<T>)>> {
    let mut sorted: Vec<&(usize, Frame<T>)> = frames.iter().collect();
    sorted.sort_by_key(|(i, _)| *i);
    let pairs: Vec<_> = sorted.windows(2).filter(|w| w[1].0 == w[0].0 + 1).map(|w| (w[0], w[1])).collect();
    pairs
        .par_iter()
        .map(|((i, a), (_, b))| Ok((*i, estimate_flow(a, b, cfg)?)))
        .collect()
}

/// Motion features for each flow field whose pair `(t, t + 1)` is present in
/// the track, sampled at the landmarks of frame `t`.
pub fn features_from_flows<T: Scalar>(
    flows: &[(usize, FlowField<T>)],
    track: &LandmarkTrack,
    video: usize,
    gate: &MotionGateConfig,
) -> Result<Vec<MotionFeatureSet<T>>> {
    let mut out = Vec::new();
    for (t, flow) in flows {
        if let (Some(lm), Some(_)) = (track.frame(*t), track.frame(t + 1)) {
            out.push(extract_features(flow, lm, PairId::new(video, *t), gate)?);
        }
    }
    out.sort_by_key(|m| m.pair);
    Ok(out)
}

/// Seed of the k-means stream for one frame pair.
pub fn pair_seed(base: u64, pair: PairId) -> u64 {
    derive_seed(base, &[stage::GROUPING, pair.video as u64, pair.frame as u64])
}

/// Per-pair grouping diagnostics.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairSummary {
    pub pair: PairId,
    pub k: usize,
    pub ch_score: f64,
    pub labels: Vec<usize>,
}

/// Correlation matrices of the frame pairs that passed the motion gate.
#[derive(Debug, Clone, PartialEq)]
pub struct PairGrouping<T> {
    pub rhos: Vec<CorrelationMatrix<T>>,
    pub gated: usize,
}

impl<T: Scalar> PairGrouping<T> {
    pub fn available(&self) -> usize {
        self.rhos.len() + self.gated
    }

    pub fn summaries(&self) -> Vec<PairSummary> {
        self.rhos
            .iter()
            .map(|r| PairSummary { pair: r.pair, k: r.k(), ch_score: r.weight().as_f64(), labels: r.labels().to_vec() })
            .collect()
    }
}

/// Groups every gated-in pair in parallel; output is in pair order.
pub fn group_pairs<T: Scalar>(sets: &[MotionFeatureSet<T>], base_seed: u64, cfg: &GroupingConfig) -> Result<PairGrouping<T>> {
    cfg.validate()?;
    let results: Vec<Option<CorrelationMatrix<T>>> = sets
        .par_iter()
        .map(|m| {
            if !m.passes_gate() {
                return Ok(None);
            }
            let pair_cfg = GroupingConfig { rng_seed: pair_seed(base_seed, m.pair), ..cfg.clone() };
            let part = best_partition(m, &pair_cfg)?;
            Ok(Some(correlation_matrix(&part, m.pair)))
        })
        .collect::<Result<_>>()?;
    let gated = results.iter().filter(|r| r.is_none()).count();
    let mut rhos: Vec<_> = results.into_iter().flatten().collect();
    rhos.sort_by_key(|r| r.pair);
    Ok(PairGrouping { rhos, gated })
}

/// Picks up to `n` matrices: the first `n` in pair order, or `n` drawn
/// without replacement (kept in pair order).
pub fn select_rhos<T: Scalar>(
    rhos: &[CorrelationMatrix<T>],
    n: usize,
    sampling: RhoSampling,
    seed: u64,
) -> Vec<CorrelationMatrix<T>> {
    if n >= rhos.len() {
        return rhos.to_vec();
    }
    match sampling {
        RhoSampling::Contiguous => rhos[..n].to_vec(),
        RhoSampling::Random => {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let mut idx = rand::seq::index::sample(&mut rng, rhos.len(), n).into_vec();
            idx.sort_unstable();
            idx.into_iter().map(|i| rhos[i].clone()).collect()
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct VideoPattern<T> {
    pub pattern: CoMotionPattern<T>,
    pub sidecar: PatternSidecar,
}

/// Accumulates the selected correlation matrices of one video.
pub fn pattern_from_grouping<T: Scalar>(
    video_id: &str,
    video: usize,
    grouping: &PairGrouping<T>,
    cfg: &PipelineConfig,
) -> Result<VideoPattern<T>> {
    if grouping.rhos.is_empty() {
        return Err(Error::NoSurvivingPairs(format!(
            "{video_id}: all {} frame pairs failed the motion gate",
            grouping.available()
        )));
    }
    let sample_seed = derive_seed(cfg.seed, &[stage::SAMPLE_RHO, video as u64]);
    let chosen = select_rhos(&grouping.rhos, cfg.n_pairs, cfg.sample_rho, sample_seed);
    let pattern = accumulate(&chosen, cfg.weight_mode)?;
    let weights: Vec<f64> = chosen.iter().map(|r| r.weight_for(cfg.weight_mode).as_f64()).collect();
    let sidecar = PatternSidecar {
        video_id: video_id.to_string(),
        n: cfg.n_pairs,
        total_weight: pattern.total_weight().as_f64(),
        weight_mode: cfg.weight_mode,
        pairs_used: chosen.len(),
        pairs_gated: grouping.gated,
        pairs_available: grouping.available(),
        weights: WeightStats::from_weights(&weights),
    };
    Ok(VideoPattern { pattern, sidecar })
}

/// Features through pattern for one video.
pub fn pattern_from_features<T: Scalar>(
    video_id: &str,
    video: usize,
    sets: &[MotionFeatureSet<T>],
    cfg: &PipelineConfig,
) -> Result<(VideoPattern<T>, PairGrouping<T>)> {
    cfg.validate()?;
    let grouping = group_pairs(sets, cfg.seed, &cfg.grouping)?;
    Ok((pattern_from_grouping(video_id, video, &grouping, cfg)?, grouping))
}
