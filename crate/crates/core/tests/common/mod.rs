#![allow(dead_code)]

use comotion::flowcore::Frame;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Periodic band-limited texture: a sum of low-frequency cosines on a
/// `size x size` torus, evaluated analytically so any sub-pixel circular shift
/// is exact.
pub struct PeriodicTexture {
    size: f64,
    terms: Vec<(f64, f64, f64, f64)>,
}

impl PeriodicTexture {
    pub fn new(size: usize, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut terms = Vec::new();
        while terms.len() < 24 {
            let fx: i32 = rng.random_range(-6..=6);
            let fy: i32 = rng.random_range(-6..=6);
            if fx == 0 && fy == 0 {
                continue;
            }
            let amp = rng.random_range(0.02..0.06);
            let phase = rng.random_range(0.0..std::f64::consts::TAU);
            terms.push((fx as f64, fy as f64, amp, phase));
        }
        Self { size: size as f64, terms }
    }

    pub fn value(&self, x: f64, y: f64) -> f64 {
        let w = std::f64::consts::TAU / self.size;
        0.5 + self
            .terms
            .iter()
            .map(|&(fx, fy, a, p)| a * (w * (fx * x + fy * y) + p).cos())
            .sum::<f64>()
    }

    /// Frame whose content is displaced by `(dx, dy)`: `out(x) = tex(x - d)`.
    pub fn frame(&self, dx: f64, dy: f64) -> Frame<f64> {
        let n = self.size as usize;
        Frame::from_fn(n, n, |x, y| self.value(x as f64 - dx, y as f64 - dy))
    }
}

/// Mann-Whitney probability that a fake score exceeds a real one, ties at 1/2.
pub fn mann_whitney_auc(real: &[f64], fake: &[f64]) -> f64 {
    let mut wins = 0.0;
    for &f in fake {
        for &r in real {
            if f > r {
                wins += 1.0;
            } else if f == r {
                wins += 0.5;
            }
        }
    }
    wins / (real.len() * fake.len()) as f64
}

/// Calinski-Harabasz from pairwise distances: within-cluster scatter is
/// `sum_{i,j in C} |x_i - x_j|^2 / (2|C|)` and between = total - within.
pub fn ch_pairwise(points: &[Vec<f64>], labels: &[usize]) -> f64 {
    let n = points.len();
    let k = labels.iter().max().unwrap() + 1;
    let d2 = |i: usize, j: usize| points[i].iter().zip(&points[j]).map(|(a, b)| (a - b).powi(2)).sum::<f64>();
    let mut total = 0.0;
    let mut within = vec![0.0; k];
    let mut sizes = vec![0usize; k];
    for i in 0..n {
        sizes[labels[i]] += 1;
        for j in 0..n {
            total += d2(i, j);
            if labels[i] == labels[j] {
                within[labels[i]] += d2(i, j);
            }
        }
    }
    let w: f64 = within.iter().zip(&sizes).map(|(s, &c)| s / (2.0 * c as f64)).sum();
    let t = total / (2.0 * n as f64);
    ((t - w) / (k - 1) as f64) / (w / (n - k) as f64)
}

/// Features in `k` direction bundles of `per` members each. Directions are at
/// least `min_sep_deg` apart, magnitudes in [1, 3], isotropic noise with
/// standard deviation `noise` times the bundle magnitude. Returns features and
/// bundle labels.
pub fn planted_bundles(seed: u64, k: usize, per: usize, min_sep_deg: f64, noise: f64) -> (Vec<[f64; 2]>, Vec<usize>) {
    use rand_distr::{Distribution, Normal};
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let sep = min_sep_deg.to_radians();
    let angles: Vec<f64> = loop {
        let a: Vec<f64> = (0..k).map(|_| rng.random_range(0.0..std::f64::consts::TAU)).collect();
        let ok = (0..k).all(|i| {
            (0..i).all(|j| {
                let d = (a[i] - a[j]).rem_euclid(std::f64::consts::TAU);
                d.min(std::f64::consts::TAU - d) >= sep
            })
        });
        if ok {
            break a;
        }
    };
    let mut feats = Vec::new();
    let mut labels = Vec::new();
    for (b, &theta) in angles.iter().enumerate() {
        let mag = rng.random_range(1.0..3.0);
        let normal = Normal::new(0.0, noise * mag).unwrap();
        for _ in 0..per {
            feats.push([mag * theta.cos() + normal.sample(&mut rng), mag * theta.sin() + normal.sample(&mut rng)]);
            labels.push(b);
        }
    }
    (feats, labels)
}

/// Best fraction of indices on which `a` and `b` agree over all one-to-one
/// relabelings of `a` (exhaustive; fine for a handful of clusters).
pub fn label_agreement(a: &[usize], b: &[usize]) -> f64 {
    let ka = a.iter().max().unwrap() + 1;
    let kb = b.iter().max().unwrap() + 1;
    let k = ka.max(kb);
    let mut counts = vec![vec![0usize; k]; k];
    for (&x, &y) in a.iter().zip(b) {
        counts[x][y] += 1;
    }
    fn search(row: usize, used: &mut Vec<bool>, counts: &[Vec<usize>]) -> usize {
        if row == counts.len() {
            return 0;
        }
        let mut best = 0;
        for c in 0..counts.len() {
            if !used[c] {
                used[c] = true;
                best = best.max(counts[row][c] + search(row + 1, used, counts));
                used[c] = false;
            }
        }
        best
    }
    search(0, &mut vec![false; k], &counts) as f64 / a.len() as f64
}

/// Every labelling of `n` items into exactly `k` non-empty groups, each
/// partition once (restricted growth strings).
pub fn set_partitions(n: usize, k: usize) -> Vec<Vec<usize>> {
    fn grow(prefix: &mut Vec<usize>, n: usize, k: usize, max: usize, out: &mut Vec<Vec<usize>>) {
        if prefix.len() == n {
            if max + 1 == k {
                out.push(prefix.clone());
            }
            return;
        }
        for l in 0..=(max + 1).min(k - 1) {
            prefix.push(l);
            grow(prefix, n, k, max.max(l), out);
            prefix.pop();
        }
    }
    let mut out = Vec::new();
    grow(&mut vec![0], n, k, 0, &mut out);
    out
}
