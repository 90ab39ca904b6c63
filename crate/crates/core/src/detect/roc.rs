use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// One threshold of the sweep: scores `>= threshold` are called fake.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OperatingPoint {
    pub threshold: f64,
    pub fpr: f64,
    pub tpr: f64,
    pub accuracy: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RocCurve {
    /// From `(0, 0)` at threshold `+inf` to `(1, 1)` at the lowest score.
    pub points: Vec<OperatingPoint>,
    pub auc: f64,
}

impl RocCurve {
    /// Threshold maximizing `tpr - fpr`.
    pub fn youden(&self) -> OperatingPoint {
        let mut best = self.points[0];
        for &p in &self.points[1..] {
            let (j, bj) = (p.tpr - p.fpr, best.tpr - best.fpr);
            if j > bj || (j == bj && p.accuracy > best.accuracy) {
                best = p;
            }
        }
        best
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("threshold,fpr,tpr,accuracy\n");
        for p in &self.points {
            out.push_str(&format!("{},{},{},{}\n", p.threshold, p.fpr, p.tpr, p.accuracy));
        }
        out
    }
}

/// Sweeps every distinct score as a threshold with fake as the positive class;
/// the AUC is the trapezoidal area, which counts tied real/fake pairs as 1/2.
pub fn roc<T: Scalar>(scores_real: &[T], scores_fake: &[T]) -> Result<RocCurve> {
    if scores_real.is_empty() || scores_fake.is_empty() {
        return Err(Error::Empty("roc scores"));
    }
    let mut all: Vec<(f64, bool)> = scores_real
        .iter()
        .map(|s| (s.as_f64(), false))
        .chain(scores_fake.iter().map(|s| (s.as_f64(), true)))
        .collect();
    if all.iter().any(|(s, _)| s.is_nan()) {
        return Err(Error::NonFinite("roc scores"));
    }
    all.sort_by(|a, b| b.0.total_cmp(&a.0));

    let (nr, nf) = (scores_real.len() as f64, scores_fake.len() as f64);
    let point = |threshold: f64, fp: usize, tp: usize| OperatingPoint {
        threshold,
        fpr: fp as f64 / nr,
        tpr: tp as f64 / nf,
        accuracy: (tp as f64 + nr - fp as f64) / (nr + nf),
    };
    let mut points = vec![point(f64::INFINITY, 0, 0)];
    let (mut fp, mut tp) = (0usize, 0usize);
    let mut auc = 0.0;
    let mut i = 0;
    while i < all.len() {
        let threshold = all[i].0;
        let (fp0, tp0) = (fp, tp);
        while i < all.len() && all[i].0 == threshold {
            if all[i].1 {
                tp += 1;
            } else {
                fp += 1;
            }
            i += 1;
        }
        // trapezoid in count space, scaled once at the end
        auc += (fp - fp0) as f64 * (tp + tp0) as f64 * 0.5;
        points.push(point(threshold, fp, tp));
    }
    Ok(RocCurve { points, auc: auc / (nr * nf) })
}
