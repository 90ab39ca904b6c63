use crate::error::{Error, Result};
use crate::linalg::Matrix;
use crate::scalar::Scalar;

/// Value returned when the within-cluster scatter vanishes.
pub const CH_CAP: f64 = 1e12;

/// Calinski-Harabasz index `[tr(B)/(K-1)] / [tr(W)/(n-K)]` of the labelled
/// rows of `points`, capped at [`CH_CAP`].
pub fn ch_index<T: Scalar>(points: &Matrix<T>, labels: &[usize]) -> Result<T> {
    let n = points.rows();
    let dim = points.cols();
    if labels.len() != n {
        return Err(Error::DimensionMismatch(format!("{} labels for {n} points", labels.len())));
    }
    let k = labels.iter().max().map_or(0, |&m| m + 1);
    if k < 2 {
        return Err(Error::InvalidInput("Calinski-Harabasz needs at least 2 clusters".into()));
    }
    if k >= n {
        return Err(Error::InvalidInput(format!(
            "Calinski-Harabasz needs fewer clusters than points ({k} >= {n})"
        )));
    }

    let mut counts = vec![0usize; k];
    let mut centroids = vec![T::zero(); k * dim];
    let mut center = vec![T::zero(); dim];
    for (i, &l) in labels.iter().enumerate() {
        counts[l] += 1;
        for (d, &x) in points.row(i).iter().enumerate() {
            centroids[l * dim + d] += x;
            center[d] += x;
        }
    }
    if let Some(empty) = counts.iter().position(|&c| c == 0) {
        return Err(Error::InvalidInput(format!("cluster {empty} is empty")));
    }
    for (l, &c) in counts.iter().enumerate() {
        let c = T::from_usize_lossy(c);
        centroids[l * dim..(l + 1) * dim].iter_mut().for_each(|x| *x /= c);
    }
    let nt = T::from_usize_lossy(n);
    center.iter_mut().for_each(|x| *x /= nt);

    let mut within = T::zero();
    for (i, &l) in labels.iter().enumerate() {
        for (d, &x) in points.row(i).iter().enumerate() {
            let r = x - centroids[l * dim + d];
            within += r * r;
        }
    }
    let mut between = T::zero();
    for (l, &c) in counts.iter().enumerate() {
        let s: T = (0..dim)
            .map(|d| {
                let r = centroids[l * dim + d] - center[d];
                r * r
            })
            .sum();
        between += T::from_usize_lossy(c) * s;
    }

    let cap = T::lit(CH_CAP);
    if within <= T::zero() {
        return Ok(cap);
    }
    let kt = T::from_usize_lossy(k);
    let ch = (between / (kt - T::one())) / (within / (nt - kt));
    Ok(ch.min(cap))
}
