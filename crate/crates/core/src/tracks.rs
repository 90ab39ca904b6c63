//! Landmark track ingestion: CSV `frame,landmark,x,y`, optional 68 → 51
//! reduction, incomplete-frame dropping and consecutive frame pairing.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::io::Read;
use std::path::Path;

use serde::Deserialize;

use crate::error::{Error, Result};

/// Landmarks kept per frame.
pub const LANDMARK_COUNT: usize = 51;
/// Size of the full annotation scheme the 51 points are taken from.
pub const FULL_LANDMARK_COUNT: usize = 68;
/// Leading face-boundary (jaw line) points dropped from the full scheme.
pub const BOUNDARY_LANDMARKS: usize = FULL_LANDMARK_COUNT - LANDMARK_COUNT;

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Point {
    pub x: f64,
    pub y: f64,
}

impl Point {
    pub fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LandmarkScheme {
    /// 68-point files; indices 0–16 are dropped and 17–67 renumbered to 0–50.
    Full68,
    /// Already reduced 51-point files.
    Inner51,
}

impl LandmarkScheme {
    pub fn from_count(count: usize) -> Result<Self> {
        match count {
            FULL_LANDMARK_COUNT => Ok(Self::Full68),
            LANDMARK_COUNT => Ok(Self::Inner51),
            other => Err(Error::InvalidInput(format!("unsupported landmark count {other}"))),
        }
    }

    fn count(self) -> usize {
        match self {
            Self::Full68 => FULL_LANDMARK_COUNT,
            Self::Inner51 => LANDMARK_COUNT,
        }
    }

    /// Maps a file index to the kept 0..51 index, or `None` for a dropped point.
    fn map_index(self, index: usize) -> Option<usize> {
        match self {
            Self::Full68 => index.checked_sub(BOUNDARY_LANDMARKS),
            Self::Inner51 => Some(index),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LandmarkFrame {
    pub frame_index: usize,
    pub points: Vec<Point>,
}

impl LandmarkFrame {
    pub fn new(frame_index: usize, points: Vec<Point>) -> Result<Self> {
        if points.len() != LANDMARK_COUNT {
            return Err(Error::InvalidInput(format!(
                "frame {frame_index}: expected {LANDMARK_COUNT} landmarks, got {}",
                points.len()
            )));
        }
        if points.iter().any(|p| !p.x.is_finite() || !p.y.is_finite()) {
            return Err(Error::NonFinite("landmark coordinates"));
        }
        Ok(Self { frame_index, points })
    }

    pub fn within_bounds(&self, width: usize, height: usize) -> bool {
        self.points
            .iter()
            .all(|p| p.x >= 0.0 && p.y >= 0.0 && p.x <= (width - 1) as f64 && p.y <= (height - 1) as f64)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LandmarkTrack {
    pub video_id: String,
    frames: Vec<LandmarkFrame>,
    /// Frames discarded on load because some landmark was missing.
    pub dropped_frames: usize,
}

impl LandmarkTrack {
    pub fn new(video_id: impl Into<String>, mut frames: Vec<LandmarkFrame>) -> Result<Self> {
        if frames.is_empty() {
            return Err(Error::Empty("landmark track"));
        }
        frames.sort_by_key(|f| f.frame_index);
        if frames.windows(2).any(|w| w[0].frame_index == w[1].frame_index) {
            return Err(Error::InvalidInput("duplicate frame index in track".into()));
        }
        Ok(Self {
            video_id: video_id.into(),
            frames,
            dropped_frames: 0,
        })
    }

    pub fn frames(&self) -> &[LandmarkFrame] {
        &self.frames
    }

    pub fn frame(&self, frame_index: usize) -> Option<&LandmarkFrame> {
        self.frames
            .binary_search_by_key(&frame_index, |f| f.frame_index)
            .ok()
            .map(|i| &self.frames[i])
    }

    pub fn len(&self) -> usize {
        self.frames.len()
    }

    pub fn is_empty(&self) -> bool {
        self.frames.is_empty()
    }
}

/// Consecutive `(t, t + 1)` pairs present in the track; gaps yield no pair.
pub fn frame_pairs(track: &LandmarkTrack) -> Vec<(usize, usize)> {
    track
        .frames
        .windows(2)
        .filter(|w| w[1].frame_index == w[0].frame_index + 1)
        .map(|w| (w[0].frame_index, w[1].frame_index))
        .collect()
}

#[derive(Debug, Deserialize)]
struct Row {
    frame: usize,
    landmark: usize,
    x: f64,
    y: f64,
}

pub fn parse_track(reader: impl Read, video_id: &str, scheme: LandmarkScheme, origin: &Path) -> Result<LandmarkTrack> {
    let mut csv = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
    let headers = csv
        .headers()
        .map_err(|e| Error::format(origin, e.to_string()))?
        .clone();
    let expected = ["frame", "landmark", "x", "y"];
    if headers.len() != expected.len() || headers.iter().zip(expected).any(|(h, e)| h != e) {
        return Err(Error::format(
            origin,
            format!("expected header frame,landmark,x,y, got {:?}", headers.iter().collect::<Vec<_>>()),
        ));
    }

    let mut per_frame: BTreeMap<usize, Vec<Option<Point>>> = BTreeMap::new();
    for (line, row) in csv.deserialize::<Row>().enumerate() {
        let row = row.map_err(|e| Error::format(origin, format!("row {}: {e}", line + 2)))?;
        if row.landmark >= scheme.count() {
            return Err(Error::format(
                origin,
                format!("row {}: landmark {} out of range for {}-point scheme", line + 2, row.landmark, scheme.count()),
            ));
        }
        if !row.x.is_finite() || !row.y.is_finite() {
            return Err(Error::format(origin, format!("row {}: non-finite coordinate", line + 2)));
        }
        let Some(index) = scheme.map_index(row.landmark) else {
            continue;
        };
        let slots = per_frame.entry(row.frame).or_insert_with(|| vec![None; LANDMARK_COUNT]);
        if slots[index].replace(Point::new(row.x, row.y)).is_some() {
            return Err(Error::format(
                origin,
                format!("frame {}: landmark {} listed twice", row.frame, row.landmark),
            ));
        }
    }

    let mut dropped = 0;
    let mut frames = Vec::with_capacity(per_frame.len());
    for (frame_index, slots) in per_frame {
        if slots.iter().all(Option::is_some) {
            frames.push(LandmarkFrame {
                frame_index,
                points: slots.into_iter().flatten().collect(),
            });
        } else {
            dropped += 1;
        }
    }
    if dropped > 0 {
        log::warn!("{video_id}: dropped {dropped} frame(s) with missing landmarks");
    }
    if frames.is_empty() {
        return Err(Error::Empty("no complete landmark frames"));
    }
    let mut track = LandmarkTrack::new(video_id, frames)?;
    track.dropped_frames = dropped;
    Ok(track)
}

/// Reads a landmark CSV; the video id is the file stem.
pub fn read_track(path: impl AsRef<Path>, scheme: LandmarkScheme) -> Result<LandmarkTrack> {
    let path = path.as_ref();
    let file = fs::File::open(path).map_err(|e| Error::io(path, e))?;
    let video_id = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default();
    parse_track(file, &video_id, scheme, path)
}

pub fn track_to_csv(track: &LandmarkTrack) -> String {
    let mut out = String::from("frame,landmark,x,y\n");
    for frame in &track.frames {
        for (i, p) in frame.points.iter().enumerate() {
            writeln!(out, "{},{},{},{}", frame.frame_index, i, p.x, p.y).expect("string write");
        }
    }
    out
}

/// Writes the 51-point CSV form.
pub fn write_track(track: &LandmarkTrack, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    fs::write(path, track_to_csv(track)).map_err(|e| Error::io(path, e))
}
