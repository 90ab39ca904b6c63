//! Co-motion patterns: binary co-cluster matrices per frame pair, their
//! CH-weighted accumulation over a video, normalization to a distribution over
//! landmark pairs and the Jensen-Shannon distance between such distributions.

pub mod io;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grouping::Partition;
use crate::linalg::Matrix;
use crate::motfeat::PairId;
use crate::scalar::Scalar;

/// Default additive smoothing, relative to the largest accumulated entry.
pub const DEFAULT_EPSILON: f64 = 1e-8;

/// Per-pair weight used when accumulating correlation matrices.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum WeightMode {
    /// `w = ch_score`.
    #[default]
    Ch,
    /// `w = k * ch_score`.
    KTimesCh,
}

impl std::str::FromStr for WeightMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "ch" => Ok(Self::Ch),
            "k-times-ch" => Ok(Self::KTimesCh),
            other => Err(Error::InvalidConfig(format!("unknown weight-mode {other:?}"))),
        }
    }
}

impl std::fmt::Display for WeightMode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Self::Ch => "ch",
            Self::KTimesCh => "k-times-ch",
        })
    }
}

/// Binary co-cluster matrix of one frame pair, stored as the inducing labels:
/// `rho(i, j) = 1` iff `labels[i] == labels[j]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorrelationMatrix<T> {
    pub pair: PairId,
    labels: Vec<usize>,
    k: usize,
    weight: T,
}

impl<T: Scalar> CorrelationMatrix<T> {
    /// Labels need not be canonical; `k` is the number of distinct labels.
    pub fn from_labels(pair: PairId, labels: Vec<usize>, weight: T) -> Result<Self> {
        if labels.is_empty() {
            return Err(Error::Empty("labels"));
        }
        if !weight.is_finite() || weight < T::zero() {
            return Err(Error::InvalidInput(format!("weight must be finite and >= 0, got {weight}")));
        }
        let mut distinct = labels.clone();
        distinct.sort_unstable();
        distinct.dedup();
        Ok(Self { pair, k: distinct.len(), labels, weight })
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    /// Number of groups in the inducing partition.
    pub fn k(&self) -> usize {
        self.k
    }

    /// CH score of the inducing partition.
    pub fn weight(&self) -> T {
        self.weight
    }

    pub fn weight_for(&self, mode: WeightMode) -> T {
        match mode {
            WeightMode::Ch => self.weight,
            WeightMode::KTimesCh => T::from_usize_lossy(self.k) * self.weight,
        }
    }

    pub fn get(&self, i: usize, j: usize) -> bool {
        self.labels[i] == self.labels[j]
    }

    pub fn to_matrix(&self) -> Matrix<T> {
        let n = self.len();
        Matrix::from_fn(n, n, |i, j| if self.get(i, j) { T::one() } else { T::zero() })
    }
}

pub fn correlation_matrix<T: Scalar>(part: &Partition<T>, pair: PairId) -> CorrelationMatrix<T> {
    CorrelationMatrix { pair, labels: part.labels.clone(), k: part.k, weight: part.ch_score }
}

/// Weighted sum of correlation matrices over the frame pairs of a video.
#[derive(Debug, Clone, PartialEq)]
pub struct CoMotionPattern<T> {
    acc: Matrix<T>,
    total_weight: T,
    pair_count: usize,
}

impl<T: Scalar> CoMotionPattern<T> {
    /// Empty pattern over `n` landmarks, the identity of [`merge`](Self::merge).
    pub fn empty(n: usize) -> Self {
        Self { acc: Matrix::zeros(n, n), total_weight: T::zero(), pair_count: 0 }
    }

    /// Rebuilds a pattern from its mean matrix `acc / total_weight`.
    pub fn from_mean(mean: Matrix<T>, total_weight: T, pair_count: usize) -> Result<Self> {
        if mean.rows() != mean.cols() {
            return Err(Error::DimensionMismatch(format!("pattern is {}x{}", mean.rows(), mean.cols())));
        }
        if mean.data().iter().any(|v| !v.is_finite()) || !total_weight.is_finite() {
            return Err(Error::NonFinite("pattern"));
        }
        if mean.data().iter().any(|&v| v < T::zero()) || total_weight < T::zero() {
            return Err(Error::InvalidInput("pattern entries must be >= 0".into()));
        }
        let n = mean.rows();
        let acc = Matrix::from_fn(n, n, |i, j| mean.get(i, j) * total_weight);
        Ok(Self { acc, total_weight, pair_count })
    }

    pub fn len(&self) -> usize {
        self.acc.rows()
    }

    pub fn is_empty(&self) -> bool {
        self.acc.rows() == 0
    }

    pub fn acc(&self) -> &Matrix<T> {
        &self.acc
    }

    pub fn total_weight(&self) -> T {
        self.total_weight
    }

    /// Number of contributing correlation matrices (`N`).
    pub fn pair_count(&self) -> usize {
        self.pair_count
    }

    /// `acc / total_weight`; all zeros when no weight has been accumulated.
    pub fn mean(&self) -> Matrix<T> {
        let n = self.len();
        if self.total_weight <= T::zero() {
            return Matrix::zeros(n, n);
        }
        Matrix::from_fn(n, n, |i, j| self.acc.get(i, j) / self.total_weight)
    }

    pub fn add(&mut self, rho: &CorrelationMatrix<T>, mode: WeightMode) -> Result<()> {
        let n = self.len();
        if rho.len() != n {
            return Err(Error::DimensionMismatch(format!("rho over {} landmarks, pattern over {n}", rho.len())));
        }
        let w = rho.weight_for(mode);
        for i in 0..n {
            let li = rho.labels[i];
            let row = self.acc.row_mut(i);
            for (j, a) in row.iter_mut().enumerate() {
                if rho.labels[j] == li {
                    *a += w;
                }
            }
        }
        self.total_weight += w;
        self.pair_count += 1;
        Ok(())
    }

    /// Combines two partial sums.
    pub fn merge(mut self, other: &Self) -> Result<Self> {
        if other.len() != self.len() {
            return Err(Error::DimensionMismatch(format!("patterns over {} and {} landmarks", self.len(), other.len())));
        }
        for (a, b) in self.acc.data_mut().iter_mut().zip(other.acc.data()) {
            *a += *b;
        }
        self.total_weight += other.total_weight;
        self.pair_count += other.pair_count;
        Ok(self)
    }
}

/// Sums `w_t * rho_t` in `pair` order, so the result does not depend on the
/// order of the input slice (pairs sharing an id keep their relative order).
pub fn accumulate<T: Scalar>(rhos: &[CorrelationMatrix<T>], mode: WeightMode) -> Result<CoMotionPattern<T>> {
    let first = rhos.first().ok_or(Error::Empty("correlation matrices"))?;
    let mut order: Vec<&CorrelationMatrix<T>> = rhos.iter().collect();
    order.sort_by_key(|r| r.pair);
    let mut cp = CoMotionPattern::empty(first.len());
    for rho in order {
        cp.add(rho, mode)?;
    }
    Ok(cp)
}

/// Discrete distribution over the strict lower triangle of a pattern, listed
/// row by row: `(1,0), (2,0), (2,1), (3,0), ...`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NormalizedPattern<T> {
    p: Vec<T>,
    smoothed: bool,
}

/// Tolerance on `sum(p) = 1` for `len` entries of type `T`.
fn sum_tolerance<T: Scalar>(len: usize) -> f64 {
    (10.0 * len as f64 * T::epsilon().as_f64()).max(1e-9)
}

impl<T: Scalar> NormalizedPattern<T> {
    /// Wraps an explicit distribution; entries must be finite, `>= 0`, and sum
    /// to one.
    pub fn from_probabilities(p: Vec<T>) -> Result<Self> {
        if p.is_empty() {
            return Err(Error::Empty("distribution"));
        }
        if p.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("distribution"));
        }
        if p.iter().any(|&v| v < T::zero()) {
            return Err(Error::InvalidInput("distribution has negative entries".into()));
        }
        let sum: f64 = p.iter().map(|v| v.as_f64()).sum();
        if (sum - 1.0).abs() > sum_tolerance::<T>(p.len()) {
            return Err(Error::InvalidInput(format!("distribution sums to {sum}, not 1")));
        }
        let smoothed = p.iter().all(|&v| v > T::zero());
        Ok(Self { p, smoothed })
    }

    pub fn values(&self) -> &[T] {
        &self.p
    }

    pub fn len(&self) -> usize {
        self.p.len()
    }

    pub fn is_empty(&self) -> bool {
        self.p.is_empty()
    }

    /// Whether additive smoothing was applied, making every entry positive.
    pub fn is_smoothed(&self) -> bool {
        self.smoothed
    }

    pub fn cast<U: Scalar>(&self) -> NormalizedPattern<U> {
        NormalizedPattern { p: self.p.iter().map(|&v| U::lit(v.as_f64())).collect(), smoothed: self.smoothed }
    }
}

impl<T> AsRef<[T]> for NormalizedPattern<T> {
    fn as_ref(&self) -> &[T] {
        &self.p
    }
}

/// Normalizes the strict lower triangle of `acc` after adding
/// `epsilon * max(acc)` to each entry.
pub fn normalize<T: Scalar>(cp: &CoMotionPattern<T>, epsilon: f64) -> Result<NormalizedPattern<T>> {
    if !(cp.total_weight > T::zero()) {
        return Err(Error::InvalidInput("pattern has zero total weight".into()));
    }
    if !(epsilon >= 0.0 && epsilon.is_finite()) {
        return Err(Error::InvalidConfig(format!("epsilon must be finite and >= 0, got {epsilon}")));
    }
    let n = cp.len();
    let shift = T::lit(epsilon) * cp.acc.max_value();
    let mut p = Vec::with_capacity(n * n.saturating_sub(1) / 2);
    for i in 1..n {
        p.extend(cp.acc.row(i)[..i].iter().map(|&a| a + shift));
    }
    let sum: T = p.iter().copied().sum();
    if !(sum > T::zero()) {
        return Err(Error::InvalidInput("pattern has no co-clustered landmark pairs and epsilon is 0".into()));
    }
    for v in &mut p {
        *v /= sum;
    }
    Ok(NormalizedPattern { p, smoothed: epsilon > 0.0 })
}

/// Jensen-Shannon divergence with natural logarithm, in `[0, ln 2]`.
/// Zero-probability bins contribute nothing.
pub fn js_divergence<T: Scalar>(p: &NormalizedPattern<T>, q: &NormalizedPattern<T>) -> Result<T> {
    if p.len() != q.len() {
        return Err(Error::DimensionMismatch(format!("distributions of length {} and {}", p.len(), q.len())));
    }
    let half = T::lit(0.5);
    let term = |a: T, m: T| if a > T::zero() { a * (a / m).ln() } else { T::zero() };
    let d: T = p
        .p
        .iter()
        .zip(&q.p)
        .map(|(&a, &b)| {
            let m = (a + b) * half;
            half * (term(a, m) + term(b, m))
        })
        .sum();
    Ok(d.max(T::zero()).min(T::lit(std::f64::consts::LN_2)))
}
