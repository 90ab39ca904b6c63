//! Model, template and score-report files.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{Label, RealTemplate, StumpEnsemble};
use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Model file: a JSON array of `{feature, threshold, polarity, alpha}`.
pub fn write_model(e: &StumpEnsemble, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let json = serde_json::to_string_pretty(e).expect("model serializes");
    fs::write(path, json + "\n").map_err(|e| Error::io(path, e))
}

pub fn read_model(path: impl AsRef<Path>) -> Result<StumpEnsemble> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let e: StumpEnsemble = serde_json::from_str(&text).map_err(|e| Error::format(path, e.to_string()))?;
    e.validate(usize::MAX).map_err(|err| Error::format(path, err.to_string()))?;
    Ok(e)
}

pub fn write_template<T: Scalar + Serialize>(t: &RealTemplate<T>, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let json = serde_json::to_string(t).expect("template serializes");
    fs::write(path, json + "\n").map_err(|e| Error::io(path, e))
}

pub fn read_template<T: Scalar + for<'de> Deserialize<'de>>(path: impl AsRef<Path>) -> Result<RealTemplate<T>> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let raw: RealTemplate<T> = serde_json::from_str(&text).map_err(|e| Error::format(path, e.to_string()))?;
    // re-validate the distribution rather than trusting the file
    let pattern = crate::pattern::NormalizedPattern::from_probabilities(raw.pattern.values().to_vec())
        .map_err(|e| Error::format(path, e.to_string()))?;
    if raw.source_count == 0 {
        return Err(Error::format(path, "template has source_count 0"));
    }
    Ok(RealTemplate { pattern, source_count: raw.source_count })
}

/// One line of a score report; `label` is the decision made for the video.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoreRow {
    pub video_id: String,
    pub score: f64,
    pub label: Label,
}

pub fn score_report_to_csv(rows: &[ScoreRow]) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    for r in rows {
        w.serialize(r).expect("in-memory csv write");
    }
    String::from_utf8(w.into_inner().expect("in-memory csv flush")).expect("csv output is utf-8")
}

pub fn write_score_report(rows: &[ScoreRow], path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let mut text = score_report_to_csv(rows);
    if rows.is_empty() {
        text = "video_id,score,label\n".into();
    }
    fs::write(path, text).map_err(|e| Error::io(path, e))
}

pub fn read_score_report(path: impl AsRef<Path>) -> Result<Vec<ScoreRow>> {
    let path = path.as_ref();
    let mut r = csv::Reader::from_path(path).map_err(|e| Error::format(path, e.to_string()))?;
    r.deserialize().map(|row| row.map_err(|e| Error::format(path, e.to_string()))).collect()
}
