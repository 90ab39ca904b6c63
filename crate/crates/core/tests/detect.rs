mod common;

use comotion::config::PipelineConfig;
use comotion::detect::io::{read_model, read_score_report, read_template, write_model, write_score_report, write_template, ScoreRow};
use comotion::detect::{
    anomaly_score, build_template, classify, exp_loss, roc, train_adaboost, AdaBoostConfig, Label, Stump, StumpEnsemble,
    TemplateConfig,
};
use comotion::motfeat::PairId;
use comotion::pattern::{normalize, CorrelationMatrix, NormalizedPattern};
use comotion::pipeline::{group_pairs, pattern_from_grouping};
use comotion::synth::{generate_track, FaceModel, SynthConfig, SynthMode};
use common::mann_whitney_auc;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn rhos(count: usize, seed: u64) -> Vec<CorrelationMatrix<f64>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|t| {
            let k = rng.random_range(2..6);
            let labels = (0..51).map(|i| if i < k { i } else { rng.random_range(0..k) }).collect();
            CorrelationMatrix::from_labels(PairId::new(t / 50, t % 50), labels, rng.random_range(1.0..100.0)).unwrap()
        })
        .collect()
}

/// Samples with one informative feature out of `dim`.
fn toy_data(n: usize, dim: usize, seed: u64, informative: bool) -> (Vec<Vec<f64>>, Vec<Label>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut x = Vec::new();
    let mut y = Vec::new();
    for i in 0..n {
        let label = if i % 2 == 0 { Label::Real } else { Label::Fake };
        let mut row: Vec<f64> = (0..dim).map(|_| rng.random_range(0.0..1.0)).collect();
        if informative {
            row[3] = if label == Label::Fake { rng.random_range(0.6..1.0) } else { rng.random_range(0.0..0.4) };
        }
        x.push(row);
        y.push(label);
    }
    (x, y)
}

#[test]
fn roc_worked_example() {
    let c = roc(&[0.1, 0.2], &[0.15, 0.3]).unwrap();
    assert_eq!(c.auc, 0.75);
    let first = c.points.first().unwrap();
    let last = c.points.last().unwrap();
    assert_eq!((first.fpr, first.tpr), (0.0, 0.0));
    assert_eq!((last.fpr, last.tpr), (1.0, 1.0));
}

#[test]
fn roc_extremes() {
    assert_eq!(roc(&[0.1, 0.2, 0.3], &[0.5, 0.6]).unwrap().auc, 1.0);
    assert_eq!(roc(&[0.5, 0.6], &[0.1, 0.2]).unwrap().auc, 0.0);
    assert_eq!(roc(&[0.3; 4], &[0.3; 5]).unwrap().auc, 0.5);
    assert!(roc::<f64>(&[], &[1.0]).is_err());
    assert!(roc(&[1.0], &[f64::NAN]).is_err());
}

#[test]
fn youden_threshold_separates_clean_data() {
    let c = roc(&[0.1, 0.2, 0.25], &[0.4, 0.5]).unwrap();
    let op = c.youden();
    assert_eq!(op.threshold, 0.4);
    assert_eq!(op.accuracy, 1.0);
}

#[test]
fn template_uses_everything_when_sample_is_large() {
    let rs = rhos(30, 1);
    let t = build_template(&rs, &TemplateConfig { sample_size: 3000, ..Default::default() }).unwrap();
    assert_eq!(t.source_count, 30);
    let small = build_template(&rs, &TemplateConfig { sample_size: 10, ..Default::default() }).unwrap();
    assert_eq!(small.source_count, 10);
    assert_eq!(small, build_template(&rs, &TemplateConfig { sample_size: 10, ..Default::default() }).unwrap());
    assert!(build_template::<f64>(&[], &TemplateConfig::default()).is_err());
}

#[test]
fn template_ignores_pooling_order() {
    let rs = rhos(80, 2);
    let mut rev = rs.clone();
    rev.reverse();
    for size in [40, 3000] {
        let cfg = TemplateConfig { sample_size: size, rng_seed: 5, ..Default::default() };
        let (a, b) = (build_template(&rs, &cfg).unwrap(), build_template(&rev, &cfg).unwrap());
        let p = normalize(&comotion::pattern::accumulate(&rs[..7], cfg.weight_mode).unwrap(), 1e-8).unwrap();
        let (sa, sb) = (anomaly_score(&p, &a).unwrap(), anomaly_score(&p, &b).unwrap());
        assert!((sa - sb).abs() < 1e-9);
    }
}

#[test]
fn template_scores_itself_zero() {
    let t = build_template(&rhos(20, 3), &TemplateConfig::default()).unwrap();
    assert_eq!(anomaly_score(&t.pattern, &t).unwrap(), 0.0);
}

#[test]
fn adaboost_separable_feature() {
    let (x, y) = toy_data(60, 12, 4, true);
    let e = train_adaboost(&x, &y, &AdaBoostConfig { rounds: 50 }).unwrap();
    assert!(e.rounds() <= 50);
    assert_eq!(e.stumps[0].feature, 3);
    for (row, &label) in x.iter().zip(&y) {
        assert_eq!(classify(&e, row).unwrap().label, label);
    }
}

#[test]
fn adaboost_exp_loss_never_increases() {
    let (x, y) = toy_data(80, 10, 5, false);
    let e = train_adaboost(&x, &y, &AdaBoostConfig { rounds: 40 }).unwrap();
    let mut prev = f64::INFINITY;
    for t in 0..=e.rounds() {
        let prefix = StumpEnsemble { stumps: e.stumps[..t].to_vec() };
        let loss = exp_loss(&prefix, &x, &y).unwrap();
        assert!(loss <= prev + 1e-12, "round {t}: {loss} > {prev}");
        prev = loss;
    }
}

#[test]
fn adaboost_on_noise_is_near_chance() {
    let (x, y) = toy_data(200, 20, 6, false);
    let e = train_adaboost(&x[..100], &y[..100], &AdaBoostConfig { rounds: 30 }).unwrap();
    let hits = x[100..].iter().zip(&y[100..]).filter(|(r, l)| classify(&e, r).unwrap().label == **l).count();
    let acc = hits as f64 / 100.0;
    assert!((0.3..=0.7).contains(&acc), "{acc}");
}

#[test]
fn adaboost_rejects_single_class() {
    let (x, _) = toy_data(10, 4, 7, false);
    assert!(train_adaboost(&x, &[Label::Real; 10], &AdaBoostConfig::default()).is_err());
}

#[test]
fn classify_conventions() {
    let empty = StumpEnsemble::default();
    let c = classify(&empty, &[0.3, 0.1]).unwrap();
    assert_eq!((c.label, c.margin), (Label::Real, 0.0));
    let one = StumpEnsemble { stumps: vec![Stump { feature: 1, threshold: 0.5, polarity: 1, alpha: 0.7 }] };
    assert_eq!(classify(&one, &[0.0, 0.9]).unwrap().label, Label::Fake);
    assert_eq!(classify(&one, &[0.0, 0.1]).unwrap().label, Label::Real);
    assert!(classify(&one, &[0.0]).is_err());
}

#[test]
fn model_template_and_report_files_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let (x, y) = toy_data(40, 6, 8, true);
    let e = train_adaboost(&x, &y, &AdaBoostConfig { rounds: 10 }).unwrap();
    write_model(&e, dir.path().join("m.json")).unwrap();
    assert_eq!(read_model(dir.path().join("m.json")).unwrap(), e);

    let t = build_template(&rhos(10, 9), &TemplateConfig::default()).unwrap();
    write_template(&t, dir.path().join("t.json")).unwrap();
    assert_eq!(read_template::<f64>(dir.path().join("t.json")).unwrap(), t);
    assert!(read_template::<f64>(dir.path().join("missing.json")).is_err());

    let rows = vec![
        ScoreRow { video_id: "a".into(), score: 0.25, label: Label::Real },
        ScoreRow { video_id: "b".into(), score: 0.5, label: Label::Fake },
    ];
    write_score_report(&rows, dir.path().join("s.csv")).unwrap();
    assert_eq!(read_score_report(dir.path().join("s.csv")).unwrap(), rows);
}

fn synth_pattern(mode: SynthMode, seed: u64, video: usize, cfg: &PipelineConfig) -> (NormalizedPattern<f64>, Vec<CorrelationMatrix<f64>>) {
    let s = generate_track(&FaceModel::standard(), &SynthConfig { mode, rng_seed: seed, ..Default::default() }).unwrap();
    let sets = s.feature_sets(video, &cfg.gate).unwrap();
    let g = group_pairs(&sets, cfg.seed, &cfg.grouping).unwrap();
    let vp = pattern_from_grouping("v", video, &g, cfg).unwrap();
    (normalize(&vp.pattern, cfg.epsilon).unwrap(), g.rhos)
}

#[test]
fn fake_patterns_score_above_matched_real_patterns() {
    let cfg = PipelineConfig::default();
    let pool: Vec<CorrelationMatrix<f64>> =
        (0..20).flat_map(|i| synth_pattern(SynthMode::RealLike, 10_000 + i, i as usize, &cfg).1).collect();
    let template = build_template(&pool, &TemplateConfig::default()).unwrap();
    let trials = 40;
    let wins = (0..trials)
        .filter(|&s| {
            let real = synth_pattern(SynthMode::RealLike, s, 100, &cfg).0;
            let fake = synth_pattern(SynthMode::FakeLike, s, 101, &cfg).0;
            anomaly_score(&fake, &template).unwrap() > anomaly_score(&real, &template).unwrap()
        })
        .count();
    assert!(wins as f64 >= 0.95 * trials as f64, "{wins}/{trials}");
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    #[test]
    fn auc_equals_mann_whitney(
        real in prop::collection::vec(0u8..20, 1..40),
        fake in prop::collection::vec(0u8..20, 1..40),
    ) {
        // coarse integer scores force plenty of ties
        let real: Vec<f64> = real.into_iter().map(|v| v as f64 / 4.0).collect();
        let fake: Vec<f64> = fake.into_iter().map(|v| v as f64 / 4.0).collect();
        let c = roc(&real, &fake).unwrap();
        prop_assert!((c.auc - mann_whitney_auc(&real, &fake)).abs() <= 1e-9);
        for w in c.points.windows(2) {
            prop_assert!(w[0].fpr <= w[1].fpr && w[0].tpr <= w[1].tpr);
        }
    }

    #[test]
    fn margin_adds_over_concatenation(
        a in prop::collection::vec((0usize..5, 0.0f64..1.0, any::<bool>(), 0.01f64..2.0), 0..8),
        b in prop::collection::vec((0usize..5, 0.0f64..1.0, any::<bool>(), 0.01f64..2.0), 0..8),
        x in prop::collection::vec(0.0f64..1.0, 5),
    ) {
        let make = |v: &[(usize, f64, bool, f64)]| StumpEnsemble {
            stumps: v.iter().map(|&(feature, threshold, p, alpha)| Stump { feature, threshold, polarity: if p { 1 } else { -1 }, alpha }).collect(),
        };
        let (ea, eb) = (make(&a), make(&b));
        let joined = ea.concat(&eb).margin(&x).unwrap();
        prop_assert!((joined - ea.margin(&x).unwrap() - eb.margin(&x).unwrap()).abs() <= 1e-12);
    }
}
