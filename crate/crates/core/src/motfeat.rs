//! Local motion features: Gaussian-weighted flow averages around each
//! landmark, plus the per-pair magnitude gate.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::flowcore::FlowField;
use crate::scalar::Scalar;
use crate::tracks::LandmarkFrame;

/// Identifies the frame pair `(frame, frame + 1)` of one video.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Default, Serialize, Deserialize)]
pub struct PairId {
    pub video: usize,
    pub frame: usize,
}

impl PairId {
    pub fn new(video: usize, frame: usize) -> Self {
        Self { video, frame }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MotionGateConfig {
    /// Fraction of landmarks that must move at least `magnitude_threshold`.
    pub fraction_p: f64,
    /// Pixels per frame.
    pub magnitude_threshold: f64,
    /// Half-width of the averaging window; the window is `(2k+1)^2` pixels.
    pub window_half_width: usize,
    pub gaussian_sigma: f64,
}

impl Default for MotionGateConfig {
    fn default() -> Self {
        Self {
            fraction_p: 0.5,
            magnitude_threshold: 0.85,
            window_half_width: 3,
            gaussian_sigma: 1.5,
        }
    }
}

impl MotionGateConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.fraction_p > 0.0 && self.fraction_p <= 1.0) {
            return Err(Error::InvalidConfig("fraction_p must lie in (0, 1]".into()));
        }
        if !(self.magnitude_threshold > 0.0 && self.magnitude_threshold.is_finite()) {
            return Err(Error::InvalidConfig("magnitude_threshold must be > 0".into()));
        }
        if self.window_half_width == 0 || !(self.gaussian_sigma > 0.0 && self.gaussian_sigma.is_finite()) {
            return Err(Error::InvalidConfig("window_half_width and gaussian_sigma must be > 0".into()));
        }
        Ok(())
    }

    /// Minimum count of moving landmarks, `ceil(p * n)`.
    pub fn required_count(&self, n: usize) -> usize {
        // guard against p*n landing a hair above an integer
        (self.fraction_p * n as f64 - 1e-9).ceil().max(0.0) as usize
    }
}

/// Motion vectors of all landmarks for one frame pair.
#[derive(Debug, Clone, PartialEq)]
pub struct MotionFeatureSet<T> {
    pub pair: PairId,
    features: Vec<[T; 2]>,
    magnitudes: Vec<T>,
    passes_gate: bool,
}

impl<T: Scalar> MotionFeatureSet<T> {
    pub fn new(pair: PairId, features: Vec<[T; 2]>, cfg: &MotionGateConfig) -> Result<Self> {
        if features.is_empty() {
            return Err(Error::Empty("motion features"));
        }
        if features.iter().flatten().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("motion features"));
        }
        let magnitudes: Vec<T> = features.iter().map(|m| m[0].hypot(m[1])).collect();
        let passes_gate = gate(&magnitudes, cfg);
        Ok(Self {
            pair,
            features,
            magnitudes,
            passes_gate,
        })
    }

    pub fn features(&self) -> &[[T; 2]] {
        &self.features
    }

    pub fn magnitudes(&self) -> &[T] {
        &self.magnitudes
    }

    pub fn passes_gate(&self) -> bool {
        self.passes_gate
    }

    pub fn len(&self) -> usize {
        self.features.len()
    }

    pub fn is_empty(&self) -> bool {
        self.features.is_empty()
    }
}

fn gate<T: Scalar>(magnitudes: &[T], cfg: &MotionGateConfig) -> bool {
    let threshold = T::lit(cfg.magnitude_threshold);
    let moving = magnitudes.iter().filter(|&&m| m >= threshold).count();
    moving >= cfg.required_count(magnitudes.len())
}

/// Gaussian-weighted average of `flow` in a `(2k+1)^2` window centered on
/// each landmark (rounded to the nearest pixel). Window pixels outside the
/// field are skipped.
pub fn extract_features<T: Scalar>(
    flow: &FlowField<T>,
    landmarks: &LandmarkFrame,
    pair: PairId,
    cfg: &MotionGateConfig,
) -> Result<MotionFeatureSet<T>> {
    cfg.validate()?;
    let k = cfg.window_half_width as isize;
    let inv_two_sigma2 = 1.0 / (2.0 * cfg.gaussian_sigma * cfg.gaussian_sigma);
    let (w, h) = (flow.width() as isize, flow.height() as isize);

    let mut features = Vec::with_capacity(landmarks.points.len());
    for (i, p) in landmarks.points.iter().enumerate() {
        let cx = p.x.round() as isize;
        let cy = p.y.round() as isize;
        if cx < 0 || cy < 0 || cx >= w || cy >= h {
            return Err(Error::DimensionMismatch(format!(
                "landmark {i} at ({}, {}) outside {w}x{h} flow",
                p.x, p.y
            )));
        }
        let mut sum_w = T::zero();
        let mut su = T::zero();
        let mut sv = T::zero();
        for dy in -k..=k {
            for dx in -k..=k {
                let (x, y) = (cx + dx, cy + dy);
                if x < 0 || y < 0 || x >= w || y >= h {
                    continue;
                }
                let g = T::lit((-((dx * dx + dy * dy) as f64) * inv_two_sigma2).exp());
                let (u, v) = flow.get(x as usize, y as usize);
                sum_w += g;
                su += g * u;
                sv += g * v;
            }
        }
        features.push([su / sum_w, sv / sum_w]);
    }
    MotionFeatureSet::new(pair, features, cfg)
}

/// Debug dump with header `pair,landmark,u,v,magnitude`.
pub fn features_to_csv<T: Scalar>(sets: &[MotionFeatureSet<T>]) -> String {
    let mut out = String::from("pair,landmark,u,v,magnitude\n");
    for set in sets {
        for (i, (m, mag)) in set.features.iter().zip(&set.magnitudes).enumerate() {
            writeln!(out, "{},{},{},{},{}", set.pair.frame, i, m[0], m[1], mag).expect("string write");
        }
    }
    out
}
