//! Pattern files: the mean matrix `acc / total_weight` as headerless CSV, a
//! JSON sidecar with provenance counts, and a min-max scaled PGM heatmap.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{CoMotionPattern, WeightMode};
use crate::error::{Error, Result};
use crate::flowcore::write_gray_pgm;
use crate::linalg::Matrix;
use crate::scalar::Scalar;

/// Summary statistics of the per-pair weights that entered a pattern.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct WeightStats {
    pub min: f64,
    pub max: f64,
    pub mean: f64,
}

impl WeightStats {
    pub fn from_weights(weights: &[f64]) -> Self {
        if weights.is_empty() {
            return Self::default();
        }
        let min = weights.iter().copied().fold(f64::INFINITY, f64::min);
        let max = weights.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let mean = weights.iter().sum::<f64>() / weights.len() as f64;
        Self { min, max, mean }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PatternSidecar {
    pub video_id: String,
    #[serde(rename = "N")]
    pub n: usize,
    pub total_weight: f64,
    pub weight_mode: WeightMode,
    pub pairs_used: usize,
    pub pairs_gated: usize,
    pub pairs_available: usize,
    pub weights: WeightStats,
}

pub fn pattern_to_csv<T: Scalar>(cp: &CoMotionPattern<T>) -> String {
    let mean = cp.mean();
    let mut out = String::new();
    for i in 0..mean.rows() {
        for (j, v) in mean.row(i).iter().enumerate() {
            if j > 0 {
                out.push(',');
            }
            write!(out, "{v}").expect("writing to a String cannot fail");
        }
        out.push('\n');
    }
    out
}

pub fn write_pattern_csv<T: Scalar>(cp: &CoMotionPattern<T>, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    fs::write(path, pattern_to_csv(cp)).map_err(|e| Error::io(path, e))
}

/// Reads a square mean matrix written by [`write_pattern_csv`].
pub fn read_pattern_csv<T: Scalar>(path: impl AsRef<Path>) -> Result<Matrix<T>> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut rows = Vec::new();
    for (line_no, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let row = line
            .split(',')
            .map(|field| {
                field.trim().parse::<f64>().map(T::lit).map_err(|_| {
                    Error::format(path, format!("line {}: bad number {field:?}", line_no + 1))
                })
            })
            .collect::<Result<Vec<T>>>()?;
        rows.push(row);
    }
    if rows.is_empty() {
        return Err(Error::format(path, "no rows"));
    }
    if rows.iter().any(|r| r.len() != rows.len()) {
        return Err(Error::format(path, format!("pattern must be square, found {} rows", rows.len())));
    }
    Matrix::from_rows(&rows)
}

/// Reads a pattern CSV plus its sidecar when one sits next to it
/// (`<stem>.json`); without a sidecar the total weight is taken as 1, which
/// leaves the normalized pattern unchanged.
pub fn read_pattern<T: Scalar>(path: impl AsRef<Path>) -> Result<(CoMotionPattern<T>, Option<PatternSidecar>)> {
    let path = path.as_ref();
    let mean = read_pattern_csv(path)?;
    let sidecar_path = path.with_extension("json");
    let sidecar = if sidecar_path.exists() { Some(read_sidecar(&sidecar_path)?) } else { None };
    let (total, count) = sidecar.as_ref().map_or((1.0, 0), |s| (s.total_weight, s.pairs_used));
    let cp = CoMotionPattern::from_mean(mean, T::lit(total), count)?;
    Ok((cp, sidecar))
}

pub fn write_sidecar(sidecar: &PatternSidecar, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let json = serde_json::to_string_pretty(sidecar).expect("sidecar serializes");
    fs::write(path, json + "\n").map_err(|e| Error::io(path, e))
}

pub fn read_sidecar(path: impl AsRef<Path>) -> Result<PatternSidecar> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    serde_json::from_str(&text).map_err(|e| Error::format(path, e.to_string()))
}

/// Mean matrix min-max scaled to 8 bits; a constant matrix maps to 255.
pub fn heatmap_bytes<T: Scalar>(cp: &CoMotionPattern<T>) -> Vec<u8> {
    let mean = cp.mean();
    let lo = mean.data().iter().map(|v| v.as_f64()).fold(f64::INFINITY, f64::min);
    let hi = mean.data().iter().map(|v| v.as_f64()).fold(f64::NEG_INFINITY, f64::max);
    mean.data()
        .iter()
        .map(|v| {
            let t = if hi > lo { (v.as_f64() - lo) / (hi - lo) } else { 1.0 };
            (t * 255.0).round() as u8
        })
        .collect()
}

pub fn write_heatmap<T: Scalar>(cp: &CoMotionPattern<T>, path: impl AsRef<Path>) -> Result<()> {
    write_gray_pgm(&heatmap_bytes(cp), cp.len(), cp.len(), path)
}
