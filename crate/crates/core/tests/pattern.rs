use comotion::grouping::Partition;
use comotion::linalg::Matrix;
use comotion::motfeat::PairId;
use comotion::pattern::io::{read_pattern, write_pattern_csv};
use comotion::pattern::{
    accumulate, correlation_matrix, js_divergence, normalize, CoMotionPattern, CorrelationMatrix, NormalizedPattern,
    WeightMode,
};
use proptest::prelude::*;

const LN2: f64 = std::f64::consts::LN_2;

fn rho(frame: usize, labels: Vec<usize>, w: f64) -> CorrelationMatrix<f64> {
    CorrelationMatrix::from_labels(PairId::new(0, frame), labels, w).unwrap()
}

fn dist(v: &[f64]) -> NormalizedPattern<f64> {
    NormalizedPattern::from_probabilities(v.to_vec()).unwrap()
}

fn labels_strategy(n: usize) -> impl Strategy<Value = Vec<usize>> {
    prop::collection::vec(0usize..8, n).prop_map(|raw| {
        // compact to 0..k in order of first appearance
        let mut map = std::collections::HashMap::new();
        raw.iter()
            .map(|&l| {
                let next = map.len();
                *map.entry(l).or_insert(next)
            })
            .collect()
    })
}

fn distribution_strategy(n: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(1e-6f64..1.0, n).prop_map(|v| {
        let s: f64 = v.iter().sum();
        v.into_iter().map(|x| x / s).collect()
    })
}

#[test]
fn correlation_matrix_examples() {
    let r = rho(0, vec![0, 0, 1, 1], 1.0);
    let expect = [[1, 1, 0, 0], [1, 1, 0, 0], [0, 0, 1, 1], [0, 0, 1, 1]];
    for i in 0..4 {
        for j in 0..4 {
            assert_eq!(r.get(i, j), expect[i][j] == 1);
        }
    }
    assert!((0..4).all(|i| (0..4).all(|j| rho(0, vec![0; 4], 1.0).get(i, j))));
    let id = rho(0, vec![0, 1, 2, 3], 1.0);
    assert!((0..4).all(|i| (0..4).all(|j| id.get(i, j) == (i == j))));
}

#[test]
fn correlation_matrix_carries_partition_score() {
    let part = Partition { labels: vec![1, 0, 1], k: 2, ch_score: 7.5, embedding: Matrix::zeros(3, 2) };
    let r = correlation_matrix(&part, PairId::new(2, 9));
    assert_eq!(r.weight(), 7.5);
    assert_eq!(r.pair, PairId::new(2, 9));
    assert!(r.get(0, 2) && !r.get(0, 1));
}

#[test]
fn accumulate_examples() {
    let single = accumulate(&[rho(0, vec![0, 0, 1], 5.0)], WeightMode::Ch).unwrap();
    assert_eq!(single.total_weight(), 5.0);
    assert_eq!(single.acc().get(0, 1), 5.0);
    assert_eq!(single.acc().get(0, 2), 0.0);

    let two = accumulate(&[rho(0, vec![0, 0, 1], 1.0), rho(1, vec![0, 0, 1], 3.0)], WeightMode::Ch).unwrap();
    assert_eq!(two.acc().get(0, 1), 4.0);

    // disjoint groupings: (0,1) together in the first only, (2,3) in the second only
    let mixed = accumulate(&[rho(0, vec![0, 0, 1, 2], 2.0), rho(1, vec![0, 1, 2, 2], 2.0)], WeightMode::Ch).unwrap();
    let mean = mixed.mean();
    assert_eq!(mean.get(0, 1), 0.5);
    assert_eq!(mean.get(2, 3), 0.5);
    assert_eq!(mean.get(0, 3), 0.0);
    assert_eq!(mean.get(1, 1), 1.0);

    assert!(accumulate::<f64>(&[], WeightMode::Ch).is_err());
}

#[test]
fn k_times_ch_multiplies_weights() {
    let rs = [rho(0, vec![0, 0, 1], 2.0), rho(1, vec![0, 1, 2], 1.0)];
    let p = accumulate(&rs, WeightMode::KTimesCh).unwrap();
    assert_eq!(p.total_weight(), 2.0 * 2.0 + 3.0 * 1.0);
}

#[test]
fn normalize_examples() {
    let ones = accumulate(&[rho(0, vec![0; 51], 1.0)], WeightMode::Ch).unwrap();
    let p = normalize(&ones, 1e-8).unwrap();
    assert_eq!(p.len(), 1275);
    assert!(p.values().iter().all(|&v| (v - 1.0 / 1275.0).abs() < 1e-15));

    let mut labels: Vec<usize> = (0..51).collect();
    labels[7] = 3;
    let one = accumulate(&[rho(0, labels, 2.0)], WeightMode::Ch).unwrap();
    let p = normalize(&one, 0.0).unwrap();
    assert_eq!(p.values().iter().filter(|&&v| v == 1.0).count(), 1);
    assert_eq!(p.values().iter().filter(|&&v| v == 0.0).count(), 1274);
    assert!(!p.is_smoothed());

    assert!(normalize(&CoMotionPattern::<f64>::empty(51), 1e-8).is_err());
}

#[test]
fn js_examples() {
    let d = js_divergence(&dist(&[0.5, 0.5]), &dist(&[0.25, 0.75])).unwrap();
    // independently evaluated in Python: 0.5*KL(p||m) + 0.5*KL(q||m)
    assert!((d - 0.033822075568605205).abs() < 1e-9, "{d}");
    assert!((js_divergence(&dist(&[1.0, 0.0, 0.0]), &dist(&[0.0, 1.0, 0.0])).unwrap() - LN2).abs() < 1e-12);
    let p = dist(&[0.2, 0.3, 0.5]);
    assert_eq!(js_divergence(&p, &p).unwrap(), 0.0);
    assert!(js_divergence(&p, &dist(&[0.5, 0.5])).is_err());
    assert!(NormalizedPattern::from_probabilities(vec![0.5, 0.6]).is_err());
}

#[test]
fn pattern_file_round_trip() {
    let cp = accumulate(&[rho(0, (0..51).map(|i| i % 4).collect(), 3.0), rho(1, (0..51).map(|i| i % 2).collect(), 1.5)], WeightMode::Ch)
        .unwrap();
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("v.csv");
    write_pattern_csv(&cp, &path).unwrap();
    let (back, sidecar) = read_pattern::<f64>(&path).unwrap();
    assert!(sidecar.is_none());
    let (a, b) = (normalize(&cp, 1e-8).unwrap(), normalize(&back, 1e-8).unwrap());
    for (x, y) in a.values().iter().zip(b.values()) {
        assert!((x - y).abs() < 1e-15);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn rho_is_an_equivalence_relation(labels in labels_strategy(12)) {
        let r = rho(0, labels, 1.0);
        let n = r.len();
        for i in 0..n {
            prop_assert!(r.get(i, i));
            for j in 0..n {
                prop_assert_eq!(r.get(i, j), r.get(j, i));
                for k in 0..n {
                    prop_assert!(!(r.get(i, j) && r.get(j, k)) || r.get(i, k));
                }
            }
        }
    }

    #[test]
    fn js_is_symmetric_and_bounded(p in distribution_strategy(20), q in distribution_strategy(20)) {
        let (p, q) = (dist(&p), dist(&q));
        let a = js_divergence(&p, &q).unwrap();
        let b = js_divergence(&q, &p).unwrap();
        prop_assert!((a - b).abs() <= 1e-12);
        prop_assert!((0.0..=LN2 + 1e-12).contains(&a));
    }

    #[test]
    fn accumulation_order_only_moves_rounding(
        parts in prop::collection::vec((labels_strategy(10), 0.1f64..100.0), 1..12),
        rotate in 0usize..12,
    ) {
        let rs: Vec<_> = parts.iter().enumerate().map(|(t, (l, w))| rho(t, l.clone(), *w)).collect();
        let canonical = accumulate(&rs, WeightMode::Ch).unwrap();
        let mut shuffled = rs.clone();
        shuffled.rotate_left(rotate % rs.len());
        shuffled.reverse();
        // accumulate sorts by pair id, so the result is bit-identical
        prop_assert_eq!(&accumulate(&shuffled, WeightMode::Ch).unwrap(), &canonical);
        // folding in arbitrary order stays within rounding
        let mut manual = CoMotionPattern::empty(10);
        for r in &shuffled {
            manual.add(r, WeightMode::Ch).unwrap();
        }
        let scale = canonical.total_weight();
        for (x, y) in manual.acc().data().iter().zip(canonical.acc().data()) {
            prop_assert!((x - y).abs() <= 1e-12 * scale);
        }
    }

    #[test]
    fn single_rho_pattern_ignores_weight_scale(labels in labels_strategy(15), w in 0.01f64..50.0, c in 0.01f64..100.0) {
        let a = normalize(&accumulate(&[rho(0, labels.clone(), w)], WeightMode::Ch).unwrap(), 1e-8).unwrap();
        let b = normalize(&accumulate(&[rho(0, labels, w * c)], WeightMode::Ch).unwrap(), 1e-8).unwrap();
        for (x, y) in a.values().iter().zip(b.values()) {
            prop_assert!((x - y).abs() <= 1e-12);
        }
    }

    #[test]
    fn normalized_patterns_are_distributions(
        parts in prop::collection::vec((labels_strategy(20), 0.1f64..100.0), 1..8),
        eps in prop::sample::select(vec![0.0, 1e-8, 1e-3]),
    ) {
        let rs: Vec<_> = parts.iter().enumerate().map(|(t, (l, w))| rho(t, l.clone(), *w)).collect();
        let cp = accumulate(&rs, WeightMode::Ch).unwrap();
        let acc = cp.acc();
        for i in 0..20 {
            prop_assert!((acc.get(i, i) - cp.total_weight()).abs() <= 1e-9 * cp.total_weight());
            for j in 0..20 {
                prop_assert_eq!(acc.get(i, j), acc.get(j, i));
                prop_assert!(acc.get(i, j) <= cp.total_weight() * (1.0 + 1e-12));
            }
        }
        match normalize(&cp, eps) {
            Ok(p) => {
                prop_assert_eq!(p.len(), 190);
                prop_assert!((p.values().iter().sum::<f64>() - 1.0).abs() <= 1e-9);
                if eps > 0.0 {
                    prop_assert!(p.values().iter().all(|&v| v > 0.0));
                }
            }
            // only possible when no pair is ever co-clustered and nothing is smoothed in
            Err(_) => prop_assert!(eps == 0.0),
        }
    }
}
