//! Seeded k-means++ with restarts and a deterministic empty-cluster fallback.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::linalg::{symmetric_eigen, Matrix};
use crate::scalar::Scalar;

#[inline]
fn dist2<T: Scalar>(a: &[T], b: &[T]) -> T {
    a.iter().zip(b).map(|(&x, &y)| (x - y) * (x - y)).sum()
}

fn plus_plus_centers<T: Scalar>(points: &Matrix<T>, k: usize, rng: &mut ChaCha8Rng) -> Matrix<T> {
    let n = points.rows();
    let mut centers = Matrix::zeros(k, points.cols());
    let first = rng.random_range(0..n);
    centers.row_mut(0).copy_from_slice(points.row(first));
    let mut nearest: Vec<f64> = (0..n).map(|i| dist2(points.row(i), centers.row(0)).as_f64()).collect();
    for c in 1..k {
        let total: f64 = nearest.iter().sum();
        let pick = if total > 0.0 {
            let mut r = rng.random::<f64>() * total;
            let mut chosen = n - 1;
            for (i, &d) in nearest.iter().enumerate() {
                if r < d {
                    chosen = i;
                    break;
                }
                r -= d;
            }
            chosen
        } else {
            rng.random_range(0..n)
        };
        centers.row_mut(c).copy_from_slice(points.row(pick));
        for (i, best) in nearest.iter_mut().enumerate() {
            *best = best.min(dist2(points.row(i), centers.row(c)).as_f64());
        }
    }
    centers
}

fn assign<T: Scalar>(points: &Matrix<T>, centers: &Matrix<T>, labels: &mut [usize]) -> T {
    let mut inertia = T::zero();
    for (i, label) in labels.iter_mut().enumerate() {
        let mut best = 0;
        let mut best_d = dist2(points.row(i), centers.row(0));
        for c in 1..centers.rows() {
            let d = dist2(points.row(i), centers.row(c));
            if d < best_d {
                best = c;
                best_d = d;
            }
        }
        *label = best;
        inertia += best_d;
    }
    inertia
}

/// Recomputes centroids; returns false if any cluster is empty.
fn update_centers<T: Scalar>(points: &Matrix<T>, labels: &[usize], centers: &mut Matrix<T>) -> bool {
    let k = centers.rows();
    let mut counts = vec![0usize; k];
    *centers = Matrix::zeros(k, points.cols());
    for (i, &l) in labels.iter().enumerate() {
        counts[l] += 1;
        for (c, &x) in centers.row_mut(l).iter_mut().zip(points.row(i)) {
            *c += x;
        }
    }
    if counts.contains(&0) {
        return false;
    }
    for (l, &c) in counts.iter().enumerate() {
        let c = T::from_usize_lossy(c);
        centers.row_mut(l).iter_mut().for_each(|x| *x /= c);
    }
    true
}

/// One Lloyd run. `Err` carries the last assignment when a cluster emptied.
fn lloyd<T: Scalar>(
    points: &Matrix<T>,
    k: usize,
    max_iters: usize,
    rng: &mut ChaCha8Rng,
) -> Result<(Vec<usize>, T), Vec<usize>> {
    let n = points.rows();
    let mut centers = plus_plus_centers(points, k, rng);
    let mut labels = vec![usize::MAX; n];
    let mut next = vec![0; n];
    let mut inertia = T::zero();
    for _ in 0..max_iters.max(1) {
        inertia = assign(points, &centers, &mut next);
        if next == labels {
            break;
        }
        labels.copy_from_slice(&next);
        if !update_centers(points, &labels, &mut centers) {
            return Err(labels);
        }
    }
    Ok((labels, inertia))
}

/// Relabels clusters in order of first appearance.
pub(crate) fn canonical_labels(labels: &[usize]) -> Vec<usize> {
    let mut map = std::collections::HashMap::new();
    labels
        .iter()
        .map(|&l| {
            let next = map.len();
            *map.entry(l).or_insert(next)
        })
        .collect()
}

/// Splits the largest cluster at the median of its projection onto the
/// leading principal direction, until `k` clusters exist. Ties in the
/// projection fall back to index order.
fn split_until<T: Scalar>(points: &Matrix<T>, labels: &mut [usize], k: usize) {
    loop {
        let count = labels.iter().max().map_or(0, |&m| m + 1);
        if count >= k {
            return;
        }
        let mut sizes = vec![0usize; count];
        for &l in labels.iter() {
            sizes[l] += 1;
        }
        let largest = (0..count).fold(0, |best, c| if sizes[c] > sizes[best] { c } else { best });
        let members: Vec<usize> = (0..labels.len()).filter(|&i| labels[i] == largest).collect();
        if members.len() < 2 {
            return;
        }
        let dim = points.cols();
        let m = T::from_usize_lossy(members.len());
        let mut mean = vec![T::zero(); dim];
        for &i in &members {
            for (a, &x) in mean.iter_mut().zip(points.row(i)) {
                *a += x / m;
            }
        }
        let mut cov = Matrix::zeros(dim, dim);
        for &i in &members {
            let r = points.row(i);
            for a in 0..dim {
                for b in 0..dim {
                    let v = cov.get(a, b) + (r[a] - mean[a]) * (r[b] - mean[b]);
                    cov.set(a, b, v);
                }
            }
        }
        let direction: Vec<T> = match symmetric_eigen(&cov) {
            Ok(eig) if dim > 0 => (0..dim).map(|a| eig.vectors.get(a, dim - 1)).collect(),
            _ => vec![T::zero(); dim],
        };
        let mut ranked: Vec<(T, usize)> = members
            .iter()
            .map(|&i| {
                let p: T = points.row(i).iter().zip(&mean).zip(&direction).map(|((&x, &mu), &d)| (x - mu) * d).sum();
                (p, i)
            })
            .collect();
        ranked.sort_by(|a, b| a.0.partial_cmp(&b.0).expect("finite").then(a.1.cmp(&b.1)));
        for &(_, i) in &ranked[members.len() / 2..] {
            labels[i] = count;
        }
    }
}

/// Best-of-`restarts` k-means++ clustering of the rows of `points`. Restarts
/// in which a cluster empties are discarded; if all are, the last assignment
/// is repaired by principal-direction splits. Labels are canonical.
pub(crate) fn kmeans<T: Scalar>(points: &Matrix<T>, k: usize, restarts: usize, max_iters: usize, seed: u64) -> Vec<usize> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut best: Option<(Vec<usize>, T)> = None;
    let mut last_failed = None;
    for _ in 0..restarts.max(1) {
        match lloyd(points, k, max_iters, &mut rng) {
            Ok((labels, inertia)) => {
                if best.as_ref().is_none_or(|(_, b)| inertia < *b) {
                    best = Some((labels, inertia));
                }
            }
            Err(labels) => last_failed = Some(labels),
        }
    }
    match best {
        Some((labels, _)) => canonical_labels(&labels),
        None => {
            let mut labels = canonical_labels(&last_failed.unwrap_or_else(|| vec![0; points.rows()]));
            split_until(points, &mut labels, k);
            canonical_labels(&labels)
        }
    }
}
