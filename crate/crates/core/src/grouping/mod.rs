//! Motion-consistent grouping of landmark features: clamped inner-product
//! affinity, normalized spectral embedding, k-means, and Calinski-Harabasz
//! selection of the group count.

mod ch;
mod kmeans;

use serde::{Deserialize, Serialize};

pub use ch::{ch_index, CH_CAP};

use crate::error::{Error, Result};
use crate::linalg::{symmetric_eigen, Matrix, SymmetricEigen};
use crate::motfeat::MotionFeatureSet;
use crate::scalar::Scalar;
use crate::seed::derive_seed;

/// Point set the Calinski-Harabasz index is evaluated on when selecting `K`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ChSpace {
    /// The 2-D motion vectors themselves; identical point set for every `K`.
    #[default]
    Features,
    /// The `K`-column row-normalized spectral embedding.
    Embedding,
}

impl std::str::FromStr for ChSpace {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "features" => Ok(Self::Features),
            "embedding" => Ok(Self::Embedding),
            other => Err(Error::InvalidConfig(format!("unknown ch-space {other:?}"))),
        }
    }
}

impl std::fmt::Display for ChSpace {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Self::Features => "features",
            Self::Embedding => "embedding",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroupingConfig {
    pub k_min: usize,
    pub k_max: usize,
    pub kmeans_restarts: usize,
    pub kmeans_max_iters: usize,
    pub rng_seed: u64,
    pub degree_floor: f64,
    pub ch_space: ChSpace,
}

impl Default for GroupingConfig {
    fn default() -> Self {
        Self {
            k_min: 2,
            k_max: 8,
            kmeans_restarts: 10,
            kmeans_max_iters: 300,
            rng_seed: 0,
            degree_floor: 1e-12,
            ch_space: ChSpace::Features,
        }
    }
}

impl GroupingConfig {
    pub fn validate(&self) -> Result<()> {
        if !(2 <= self.k_min && self.k_min <= self.k_max && self.k_max <= 50) {
            return Err(Error::InvalidConfig(format!(
                "need 2 <= k_min <= k_max <= 50, got {}..={}",
                self.k_min, self.k_max
            )));
        }
        if self.kmeans_restarts == 0 || self.kmeans_max_iters == 0 {
            return Err(Error::InvalidConfig("k-means restarts and iterations must be positive".into()));
        }
        if !(self.degree_floor > 0.0 && self.degree_floor.is_finite()) {
            return Err(Error::InvalidConfig("degree_floor must be > 0".into()));
        }
        Ok(())
    }
}

/// Symmetric nonnegative affinity between motion features.
#[derive(Debug, Clone, PartialEq)]
pub struct AffinityMatrix<T>(Matrix<T>);

impl<T: Scalar> AffinityMatrix<T> {
    /// Wraps a hand-built matrix after checking symmetry and nonnegativity.
    pub fn from_matrix(m: Matrix<T>) -> Result<Self> {
        if !m.is_symmetric(T::lit(1e-12)) {
            return Err(Error::InvalidInput("affinity must be symmetric".into()));
        }
        if m.data().iter().any(|&v| !(v >= T::zero())) {
            return Err(Error::InvalidInput("affinity entries must be finite and >= 0".into()));
        }
        Ok(Self(m))
    }

    pub fn matrix(&self) -> &Matrix<T> {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.rows()
    }

    pub fn is_empty(&self) -> bool {
        self.0.rows() == 0
    }
}

/// `a[i][j] = max(0, m_i · m_j)`; the diagonal is `|m_i|^2`.
pub fn affinity<T: Scalar>(m: &MotionFeatureSet<T>) -> AffinityMatrix<T> {
    let f = m.features();
    AffinityMatrix(Matrix::from_fn(f.len(), f.len(), |i, j| {
        (f[i][0] * f[j][0] + f[i][1] * f[j][1]).max(T::zero())
    }))
}

/// A labelling of the features into `k` non-empty groups.
#[derive(Debug, Clone, PartialEq)]
pub struct Partition<T> {
    pub labels: Vec<usize>,
    pub k: usize,
    pub ch_score: T,
    /// Row-normalized spectral embedding the labels were computed on.
    pub embedding: Matrix<T>,
}

impl<T: Scalar> Partition<T> {
    pub fn cluster_sizes(&self) -> Vec<usize> {
        let mut sizes = vec![0; self.k];
        for &l in &self.labels {
            sizes[l] += 1;
        }
        sizes
    }
}

struct SpectralBasis<T> {
    eigen: SymmetricEigen<T>,
    isolated: Vec<bool>,
}

/// Eigen-decomposition of `D^{-1/2} (D - A) D^{-1/2}` with zero degrees
/// raised to the floor.
fn spectral_basis<T: Scalar>(a: &AffinityMatrix<T>, degree_floor: f64) -> Result<SpectralBasis<T>> {
    let m = a.matrix();
    let n = m.rows();
    let floor = T::lit(degree_floor);
    let raw: Vec<T> = (0..n).map(|i| m.row(i).iter().copied().sum()).collect();
    if raw.iter().any(|d| !d.is_finite()) {
        return Err(Error::Eigen("non-finite affinity".into()));
    }
    let isolated: Vec<bool> = raw.iter().map(|&d| d < floor).collect();
    let inv_sqrt: Vec<T> = raw.iter().map(|&d| T::one() / d.max(floor).sqrt()).collect();
    let laplacian = Matrix::from_fn(n, n, |i, j| {
        let dij = if i == j { raw[i].max(floor) } else { T::zero() };
        (dij - m.get(i, j)) * inv_sqrt[i] * inv_sqrt[j]
    });
    Ok(SpectralBasis {
        eigen: symmetric_eigen(&laplacian)?,
        isolated,
    })
}

/// First `k` eigenvectors as columns, rows scaled to unit length. Rows of
/// isolated features, and rows that are exactly zero, stay zero.
fn embedding<T: Scalar>(basis: &SpectralBasis<T>, k: usize) -> Matrix<T> {
    let n = basis.isolated.len();
    let mut f = Matrix::from_fn(n, k, |i, j| {
        if basis.isolated[i] {
            T::zero()
        } else {
            basis.eigen.vectors.get(i, j)
        }
    });
    for i in 0..n {
        let norm = f.row(i).iter().map(|&x| x * x).sum::<T>().sqrt();
        if norm > T::zero() {
            f.row_mut(i).iter_mut().for_each(|x| *x /= norm);
        }
    }
    f
}

/// Clusters the `k`-column embedding. The index is computed on `ch_points`
/// when given, otherwise on the embedding.
fn partition_from_basis<T: Scalar>(
    basis: &SpectralBasis<T>,
    k: usize,
    cfg: &GroupingConfig,
    ch_points: Option<&Matrix<T>>,
) -> Result<Partition<T>> {
    let n = basis.isolated.len();
    let emb = embedding(basis, k);
    let seed = derive_seed(cfg.rng_seed, &[k as u64]);
    let labels = kmeans::kmeans(&emb, k, cfg.kmeans_restarts, cfg.kmeans_max_iters, seed);
    let ch_score = if k < n {
        ch_index(ch_points.unwrap_or(&emb), &labels)?
    } else {
        T::zero()
    };
    Ok(Partition {
        labels,
        k,
        ch_score,
        embedding: emb,
    })
}

/// Normalized spectral clustering of the affinity into `k` groups. The
/// returned `ch_score` is evaluated on the embedding, the only point set
/// available from an affinity alone.
pub fn spectral_partition<T: Scalar>(a: &AffinityMatrix<T>, k: usize, cfg: &GroupingConfig) -> Result<Partition<T>> {
    if !(2..=50).contains(&k) || k > a.len() {
        return Err(Error::InvalidInput(format!("cannot split {} features into {k} groups", a.len())));
    }
    if !(cfg.degree_floor > 0.0) {
        return Err(Error::InvalidConfig("degree_floor must be > 0".into()));
    }
    let basis = spectral_basis(a, cfg.degree_floor)?;
    partition_from_basis(&basis, k, cfg, None)
}

/// Groups one frame pair's features, choosing `K` in `[k_min, k_max]` by
/// maximal Calinski-Harabasz index (ties go to the smaller `K`), evaluated in
/// the space selected by `cfg.ch_space`.
///
/// Features that are all identical form a single group with the capped
/// index: they carry no grouping structure and the embedding for `K >= 2`
/// would be an arbitrary basis of a degenerate eigenspace.
pub fn best_partition<T: Scalar>(m: &MotionFeatureSet<T>, cfg: &GroupingConfig) -> Result<Partition<T>> {
    cfg.validate()?;
    let n = m.len();
    if n < 3 {
        return Err(Error::InvalidInput(format!("need at least 3 features, got {n}")));
    }
    let f = m.features();
    if f.iter().all(|v| v[0] == T::zero() && v[1] == T::zero()) {
        return Err(Error::InvalidInput("all features are zero; nothing to group".into()));
    }
    if f.iter().all(|v| v == &f[0]) {
        return Ok(Partition {
            labels: vec![0; n],
            k: 1,
            ch_score: T::lit(CH_CAP),
            embedding: Matrix::from_fn(n, 1, |_, _| T::one()),
        });
    }

    let basis = spectral_basis(&affinity(m), cfg.degree_floor)?;
    let raw = Matrix::from_fn(n, 2, |i, j| f[i][j]);
    let ch_points = match cfg.ch_space {
        ChSpace::Features => Some(&raw),
        ChSpace::Embedding => None,
    };
    let k_hi = cfg.k_max.min(n - 1);
    let mut best: Option<Partition<T>> = None;
    for k in cfg.k_min..=k_hi {
        let part = partition_from_basis(&basis, k, cfg, ch_points)?;
        if best.as_ref().is_none_or(|b| part.ch_score > b.ch_score) {
            best = Some(part);
        }
    }
    best.ok_or_else(|| Error::InvalidInput(format!("no admissible K for {n} features")))
}
