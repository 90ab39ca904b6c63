//! Desk-scale benchmark on synthetic tracks: real-like versus fake-like videos
//! scored by template anomaly and by boosted stumps, for several pattern
//! budgets `N`.

use std::fs;
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::config::PipelineConfig;
use crate::detect::io::{write_model, write_score_report, write_template, ScoreRow};
use crate::detect::{
    anomaly_score, build_template, classify, roc, train_adaboost, AdaBoostConfig, Label, TemplateConfig,
};
use crate::error::{Error, Result};
use crate::pattern::io::{write_pattern_csv, write_sidecar};
use crate::pattern::{normalize, CorrelationMatrix, NormalizedPattern};
use crate::pipeline::{group_pairs, pattern_from_grouping, PairGrouping};
use crate::seed::{derive_seed, stage};
use crate::synth::{generate_track, FaceModel, SynthConfig, SynthMode};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchmarkConfig {
    pub tracks_per_class: usize,
    /// Leading tracks of each class used for the template and for training.
    pub train_per_class: usize,
    pub n_values: Vec<usize>,
    pub seed: u64,
    /// Template for every track; mode and seed are set per track.
    pub synth: SynthConfig,
    pub pipeline: PipelineConfig,
}

impl Default for BenchmarkConfig {
    fn default() -> Self {
        Self {
            tracks_per_class: 200,
            train_per_class: 100,
            n_values: vec![1, 10, 35, 70],
            seed: 42,
            synth: SynthConfig::default(),
            pipeline: PipelineConfig::default(),
        }
    }
}

impl BenchmarkConfig {
    pub fn validate(&self) -> Result<()> {
        if self.train_per_class == 0 || self.train_per_class >= self.tracks_per_class {
            return Err(Error::InvalidConfig("need 0 < train_per_class < tracks_per_class".into()));
        }
        if self.n_values.is_empty() || self.n_values.contains(&0) {
            return Err(Error::InvalidConfig("n_values must be non-empty and positive".into()));
        }
        self.synth.validate()?;
        self.pipeline.validate()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BudgetResult {
    pub n: usize,
    pub anomaly_auc: f64,
    /// Test accuracy at the Youden-optimal threshold.
    pub anomaly_accuracy: f64,
    pub anomaly_threshold: f64,
    pub adaboost_accuracy: f64,
    pub adaboost_rounds: usize,
    /// Mean number of correlation matrices actually pooled per pattern.
    pub mean_pairs_used: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchmarkReport {
    pub results: Vec<BudgetResult>,
    pub pairs_total: usize,
    pub pairs_gated: usize,
    pub template_source_count: usize,
}

impl BenchmarkReport {
    pub fn get(&self, n: usize) -> Option<&BudgetResult> {
        self.results.iter().find(|r| r.n == n)
    }

    pub fn to_table(&self) -> String {
        let mut out = String::from("N,anomaly_auc,anomaly_accuracy,adaboost_accuracy,adaboost_rounds,mean_pairs_used\n");
        for r in &self.results {
            out.push_str(&format!(
                "{},{:.4},{:.4},{:.4},{},{:.1}\n",
                r.n, r.anomaly_auc, r.anomaly_accuracy, r.adaboost_accuracy, r.adaboost_rounds, r.mean_pairs_used
            ));
        }
        out
    }
}

struct Video {
    id: String,
    label: Label,
    train: bool,
    grouping: PairGrouping<f64>,
}

fn ensure_dir(path: &Path) -> Result<()> {
    fs::create_dir_all(path).map_err(|e| Error::io(path, e))
}

fn prepare_videos(cfg: &BenchmarkConfig) -> Result<Vec<Video>> {
    let model = FaceModel::standard();
    let per = cfg.tracks_per_class;
    (0..2 * per)
        .into_par_iter()
        .map(|v| {
            let (label, mode, i) = if v < per { (Label::Real, SynthMode::RealLike, v) } else { (Label::Fake, SynthMode::FakeLike, v - per) };
            let synth = SynthConfig {
                mode,
                rng_seed: derive_seed(cfg.seed, &[stage::SYNTH, (label == Label::Fake) as u64, i as u64]),
                ..cfg.synth.clone()
            };
            let track = generate_track(&model, &synth)?;
            let sets = track.feature_sets(v, &cfg.pipeline.gate)?;
            let grouping = group_pairs(&sets, cfg.seed, &cfg.pipeline.grouping)?;
            Ok(Video { id: format!("{label}-{i:03}"), label, train: i < cfg.train_per_class, grouping })
        })
        .collect()
}

/// Runs the benchmark; when `out_dir` is given, patterns, models, score reports
/// and the report itself are written below it.
pub fn run_benchmark(cfg: &BenchmarkConfig, out_dir: Option<&Path>) -> Result<BenchmarkReport> {
    cfg.validate()?;
    let videos = prepare_videos(cfg)?;
    let pairs_total = videos.iter().map(|v| v.grouping.available()).sum();
    let pairs_gated = videos.iter().map(|v| v.grouping.gated).sum();

    let real_train: Vec<CorrelationMatrix<f64>> = videos
        .iter()
        .filter(|v| v.train && v.label == Label::Real)
        .flat_map(|v| v.grouping.rhos.iter().cloned())
        .collect();
    let template = build_template(
        &real_train,
        &TemplateConfig {
            sample_size: cfg.pipeline.template_sample_size,
            rng_seed: derive_seed(cfg.seed, &[stage::TEMPLATE]),
            weight_mode: cfg.pipeline.weight_mode,
            epsilon: cfg.pipeline.epsilon,
        },
    )?;
    if let Some(dir) = out_dir {
        ensure_dir(dir)?;
        write_template(&template, dir.join("template.json"))?;
    }

    let mut results = Vec::with_capacity(cfg.n_values.len());
    for &n in &cfg.n_values {
        let pcfg = PipelineConfig { n_pairs: n, seed: cfg.seed, ..cfg.pipeline.clone() };
        let patterns = videos
            .par_iter()
            .enumerate()
            .map(|(idx, v)| pattern_from_grouping(&v.id, idx, &v.grouping, &pcfg))
            .collect::<Result<Vec<_>>>()?;
        let normalized: Vec<NormalizedPattern<f64>> =
            patterns.par_iter().map(|p| normalize(&p.pattern, pcfg.epsilon)).collect::<Result<_>>()?;
        let mean_pairs_used =
            patterns.iter().map(|p| p.sidecar.pairs_used as f64).sum::<f64>() / patterns.len() as f64;

        let scores: Vec<f64> =
            normalized.par_iter().map(|p| anomaly_score(p, &template)).collect::<Result<_>>()?;
        let test: Vec<usize> = (0..videos.len()).filter(|&i| !videos[i].train).collect();
        let pick = |label: Label| -> Vec<f64> { test.iter().filter(|&&i| videos[i].label == label).map(|&i| scores[i]).collect() };
        let curve = roc(&pick(Label::Real), &pick(Label::Fake))?;
        let op = curve.youden();

        let train: Vec<usize> = (0..videos.len()).filter(|&i| videos[i].train).collect();
        let x: Vec<&[f64]> = train.iter().map(|&i| normalized[i].values()).collect();
        let y: Vec<Label> = train.iter().map(|&i| videos[i].label).collect();
        let model = train_adaboost(&x, &y, &AdaBoostConfig { rounds: pcfg.adaboost_rounds })?;
        let mut hits = 0;
        let mut classify_rows = Vec::with_capacity(test.len());
        for &i in &test {
            let c = classify(&model, normalized[i].values())?;
            hits += usize::from(c.label == videos[i].label);
            classify_rows.push(ScoreRow { video_id: videos[i].id.clone(), score: c.margin, label: c.label });
        }

        if let Some(dir) = out_dir {
            let ndir = dir.join(format!("n{n:03}"));
            let pdir = ndir.join("patterns");
            ensure_dir(&pdir)?;
            for p in &patterns {
                write_pattern_csv(&p.pattern, pdir.join(format!("{}.csv", p.sidecar.video_id)))?;
                write_sidecar(&p.sidecar, pdir.join(format!("{}.json", p.sidecar.video_id)))?;
            }
            write_model(&model, ndir.join("model.json"))?;
            let anomaly_rows: Vec<ScoreRow> = test
                .iter()
                .map(|&i| ScoreRow {
                    video_id: videos[i].id.clone(),
                    score: scores[i],
                    label: if scores[i] >= op.threshold { Label::Fake } else { Label::Real },
                })
                .collect();
            write_score_report(&anomaly_rows, ndir.join("anomaly_scores.csv"))?;
            write_score_report(&classify_rows, ndir.join("classify_scores.csv"))?;
            fs::write(ndir.join("roc.csv"), curve.to_csv()).map_err(|e| Error::io(ndir.join("roc.csv"), e))?;
        }

        results.push(BudgetResult {
            n,
            anomaly_auc: curve.auc,
            anomaly_accuracy: op.accuracy,
            anomaly_threshold: op.threshold,
            adaboost_accuracy: hits as f64 / test.len() as f64,
            adaboost_rounds: model.rounds(),
            mean_pairs_used,
        });
    }

    let report = BenchmarkReport { results, pairs_total, pairs_gated, template_source_count: template.source_count };
    if let Some(dir) = out_dir {
        let path = dir.join("report.json");
        let json = serde_json::to_string_pretty(&report).expect("report serializes");
        fs::write(&path, json + "\n").map_err(|e| Error::io(&path, e))?;
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn small_benchmark_runs_and_separates() {
        let cfg = BenchmarkConfig {
            tracks_per_class: 12,
            train_per_class: 6,
            n_values: vec![5, 20],
            synth: SynthConfig { frames: 40, ..Default::default() },
            ..Default::default()
        };
        let dir = tempfile::tempdir().unwrap();
        let report = run_benchmark(&cfg, Some(dir.path())).unwrap();
        assert_eq!(report.results.len(), 2);
        assert!(report.get(20).unwrap().anomaly_auc > 0.8, "{report:?}");
        assert!(dir.path().join("n020/patterns/real-000.csv").exists());
        assert!(dir.path().join("n005/model.json").exists());
        assert!(dir.path().join("report.json").exists());
    }

    #[test]
    fn rejects_bad_split() {
        let cfg = BenchmarkConfig { tracks_per_class: 4, train_per_class: 4, ..Default::default() };
        assert!(run_benchmark(&cfg, None).is_err());
    }
}
