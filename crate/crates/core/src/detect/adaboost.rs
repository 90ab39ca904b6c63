use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::Label;
use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Error assigned to a perfect stump when computing its weight.
const MIN_ERROR: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AdaBoostConfig {
    pub rounds: usize,
}

impl Default for AdaBoostConfig {
    fn default() -> Self {
        Self { rounds: 100 }
    }
}

/// `h(x) = polarity` if `x[feature] > threshold`, else `-polarity`;
/// `+1` votes fake.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Stump {
    pub feature: usize,
    pub threshold: f64,
    pub polarity: i8,
    pub alpha: f64,
}

impl Stump {
    #[inline]
    fn vote(&self, value: f64) -> f64 {
        let p = f64::from(self.polarity);
        if value > self.threshold {
            p
        } else {
            -p
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(transparent)]
pub struct StumpEnsemble {
    pub stumps: Vec<Stump>,
}

impl StumpEnsemble {
    pub fn rounds(&self) -> usize {
        self.stumps.len()
    }

    /// `sum(alpha * h(x))`.
    pub fn margin<T: Scalar>(&self, x: &[T]) -> Result<f64> {
        let mut m = 0.0;
        for s in &self.stumps {
            let v = x.get(s.feature).ok_or_else(|| {
                Error::DimensionMismatch(format!("stump uses feature {} of a {}-vector", s.feature, x.len()))
            })?;
            m += s.alpha * s.vote(v.as_f64());
        }
        Ok(m)
    }

    pub fn concat(&self, other: &StumpEnsemble) -> StumpEnsemble {
        StumpEnsemble { stumps: self.stumps.iter().chain(&other.stumps).copied().collect() }
    }

    pub fn validate(&self, feature_count: usize) -> Result<()> {
        for s in &self.stumps {
            if s.feature >= feature_count {
                return Err(Error::InvalidInput(format!("stump feature {} out of range {feature_count}", s.feature)));
            }
            if !(s.alpha.is_finite() && s.threshold.is_finite()) {
                return Err(Error::NonFinite("stump"));
            }
            if s.polarity != 1 && s.polarity != -1 {
                return Err(Error::InvalidInput(format!("stump polarity {} is not +/-1", s.polarity)));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Classification {
    pub label: Label,
    pub margin: f64,
}

/// Positive margin means fake; a zero margin (including the empty ensemble)
/// means real.
pub fn classify<T: Scalar>(e: &StumpEnsemble, x: &[T]) -> Result<Classification> {
    let margin = e.margin(x)?;
    let label = if margin > 0.0 { Label::Fake } else { Label::Real };
    Ok(Classification { label, margin })
}

/// Mean exponential loss `exp(-y F(x))`, the quantity boosting decreases
/// every round.
pub fn exp_loss<T: Scalar, R: AsRef<[T]>>(e: &StumpEnsemble, x: &[R], y: &[Label]) -> Result<f64> {
    if x.len() != y.len() || x.is_empty() {
        return Err(Error::DimensionMismatch(format!("{} samples, {} labels", x.len(), y.len())));
    }
    let mut total = 0.0;
    for (row, label) in x.iter().zip(y) {
        total += (-label.sign() * e.margin(row.as_ref())?).exp();
    }
    Ok(total / x.len() as f64)
}

struct Candidate {
    error: f64,
    feature: usize,
    threshold: f64,
    polarity: i8,
}

impl Candidate {
    fn better_than(&self, other: &Candidate) -> bool {
        (self.error, self.feature, self.threshold, -self.polarity)
            .partial_cmp(&(other.error, other.feature, other.threshold, -other.polarity))
            == Some(std::cmp::Ordering::Less)
    }
}

/// Best stump on one feature column; `order` sorts the column ascending.
fn best_on_feature(feature: usize, column: &[f64], order: &[usize], w: &[f64], y: &[f64]) -> Option<Candidate> {
    let (mut w_fake, mut w_real) = (0.0, 0.0);
    for (wi, yi) in w.iter().zip(y) {
        if *yi > 0.0 {
            w_fake += wi;
        } else {
            w_real += wi;
        }
    }
    let (mut below_fake, mut below_real) = (0.0, 0.0);
    let mut best: Option<Candidate> = None;
    for k in 0..order.len() - 1 {
        let i = order[k];
        if y[i] > 0.0 {
            below_fake += w[i];
        } else {
            below_real += w[i];
        }
        let (lo, hi) = (column[i], column[order[k + 1]]);
        if lo == hi {
            continue;
        }
        let mut threshold = 0.5 * (lo + hi);
        if threshold >= hi {
            threshold = lo;
        }
        // polarity +1 calls everything above the threshold fake
        let err_pos = below_fake + (w_real - below_real);
        let err_neg = below_real + (w_fake - below_fake);
        for (error, polarity) in [(err_pos, 1), (err_neg, -1)] {
            let c = Candidate { error, feature, threshold, polarity };
            if best.as_ref().is_none_or(|b| c.better_than(b)) {
                best = Some(c);
            }
        }
    }
    best
}

/// Discrete AdaBoost over decision stumps, searching every feature and every
/// midpoint between consecutive distinct values each round. Training stops
/// early when no stump beats weighted error 1/2 or one stump is perfect.
pub fn train_adaboost<T: Scalar, R: AsRef<[T]> + Sync>(
    x: &[R],
    y: &[Label],
    cfg: &AdaBoostConfig,
) -> Result<StumpEnsemble> {
    if x.is_empty() {
        return Err(Error::Empty("training samples"));
    }
    if x.len() != y.len() {
        return Err(Error::DimensionMismatch(format!("{} samples, {} labels", x.len(), y.len())));
    }
    let d = x[0].as_ref().len();
    if d == 0 || x.iter().any(|r| r.as_ref().len() != d) {
        return Err(Error::DimensionMismatch("training rows differ in length".into()));
    }
    if !(y.contains(&Label::Real) && y.contains(&Label::Fake)) {
        return Err(Error::SingleClass);
    }
    let n = x.len();
    let mut columns = vec![vec![0.0f64; n]; d];
    for (i, row) in x.iter().enumerate() {
        for (f, v) in row.as_ref().iter().enumerate() {
            let v = v.as_f64();
            if !v.is_finite() {
                return Err(Error::NonFinite("training features"));
            }
            columns[f][i] = v;
        }
    }
    let orders: Vec<Vec<usize>> = columns
        .par_iter()
        .map(|col| {
            let mut o: Vec<usize> = (0..n).collect();
            o.sort_by(|&a, &b| col[a].total_cmp(&col[b]).then(a.cmp(&b)));
            o
        })
        .collect();
    let ys: Vec<f64> = y.iter().map(|l| l.sign()).collect();
    let mut w = vec![1.0 / n as f64; n];
    let mut stumps = Vec::with_capacity(cfg.rounds);

    for _ in 0..cfg.rounds {
        let best = (0..d)
            .into_par_iter()
            .filter_map(|f| best_on_feature(f, &columns[f], &orders[f], &w, &ys))
            .reduce_with(|a, b| if b.better_than(&a) { b } else { a });
        let Some(best) = best else { break };
        if best.error >= 0.5 {
            break;
        }
        let eps = best.error.max(MIN_ERROR);
        let alpha = 0.5 * ((1.0 - eps) / eps).ln();
        let stump = Stump { feature: best.feature, threshold: best.threshold, polarity: best.polarity, alpha };
        let col = &columns[best.feature];
        let mut sum = 0.0;
        for i in 0..n {
            w[i] *= (-alpha * ys[i] * stump.vote(col[i])).exp();
            sum += w[i];
        }
        for wi in &mut w {
            *wi /= sum;
        }
        stumps.push(stump);
        if best.error <= MIN_ERROR {
            break;
        }
    }
    Ok(StumpEnsemble { stumps })
}
