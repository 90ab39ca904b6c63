//! Synthetic face-motion tracks with known labels. Real-like motion is
//! articulated: a smooth global head motion, coherent per-component offsets and
//! opposite upper/lower lip movement while talking. Fake-like motion keeps each
//! landmark's motion values but draws them from other frames, breaking the
//! coupling between landmarks.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::flowcore::Frame;
use crate::motfeat::{MotionFeatureSet, MotionGateConfig, PairId};
use crate::seed::{derive_seed, stage};
use crate::tracks::{LandmarkFrame, LandmarkTrack, Point, LANDMARK_COUNT};

/// Side of the square canvas tracks and frames live on.
pub const CANVAS: usize = 256;

/// Velocity autocorrelation of the motion processes.
const AR_COEF: f64 = 0.8;
/// Pull of accumulated displacements back toward rest, per frame.
const RESTORING: f64 = 0.05;
/// Mean length in frames of a talking segment.
const TALK_SEGMENT: f64 = 20.0;
const FACE_SCALE: f64 = 1.4;

#[derive(Debug, Clone, PartialEq)]
pub struct FaceModel {
    /// Anatomical components partitioning the landmark indices.
    pub groups: Vec<Vec<usize>>,
    pub rest_positions: Vec<Point>,
    pub upper_lip: Vec<usize>,
    pub lower_lip: Vec<usize>,
}

fn arc(n: usize, cx: f64, cy: f64, rx: f64, ry: f64, from: f64, to: f64) -> Vec<Point> {
    (0..n)
        .map(|i| {
            let t = if n == 1 { from } else { from + (to - from) * i as f64 / (n - 1) as f64 };
            Point::new(cx + rx * t.cos(), cy + ry * t.sin())
        })
        .collect()
}

fn ellipse(n: usize, cx: f64, cy: f64, rx: f64, ry: f64) -> Vec<Point> {
    let step = std::f64::consts::TAU / n as f64;
    (0..n)
        .map(|i| {
            let t = std::f64::consts::PI + step * i as f64;
            Point::new(cx + rx * t.cos(), cy + ry * t.sin())
        })
        .collect()
}

impl FaceModel {
    /// The 51 inner landmarks of the common 68-point layout: brows 0-9,
    /// nose 10-18, eyes 19-30, outer lip 31-42, inner lip 43-50.
    pub fn standard() -> Self {
        use std::f64::consts::PI;
        let mut rest = Vec::with_capacity(LANDMARK_COUNT);
        rest.extend(arc(5, 95.0, 100.0, 26.0, 12.0, 1.15 * PI, 1.85 * PI));
        rest.extend(arc(5, 161.0, 100.0, 26.0, 12.0, 1.15 * PI, 1.85 * PI));
        rest.extend((0..4).map(|i| Point::new(128.0, 105.0 + 10.0 * i as f64)));
        rest.extend((0..5).map(|i| Point::new(112.0 + 8.0 * i as f64, 148.0 + if i == 2 { 3.0 } else { 0.0 })));
        rest.extend(ellipse(6, 95.0, 112.0, 14.0, 6.0));
        rest.extend(ellipse(6, 161.0, 112.0, 14.0, 6.0));
        // corners at 31/37 and 43/47; upper half first in each ring
        rest.extend(ellipse(12, 128.0, 185.0, 30.0, 12.0));
        rest.extend(ellipse(8, 128.0, 185.0, 18.0, 5.0));
        // spread the layout over the canvas so neighbouring components sit
        // further apart than the flow regularizer's reach
        for p in &mut rest {
            p.x = 128.0 + FACE_SCALE * (p.x - 128.0);
            p.y = 128.0 + FACE_SCALE * (p.y - 142.0);
        }
        Self {
            groups: vec![(0..10).collect(), (10..19).collect(), (19..31).collect(), (31..43).collect(), (43..51).collect()],
            rest_positions: rest,
            upper_lip: (32..37).chain(44..47).collect(),
            lower_lip: (38..43).chain(48..51).collect(),
        }
    }

    /// All landmarks in one component, no lip sets.
    pub fn single_group() -> Self {
        Self { groups: vec![(0..LANDMARK_COUNT).collect()], upper_lip: vec![], lower_lip: vec![], ..Self::standard() }
    }

    pub fn validate(&self) -> Result<()> {
        if self.rest_positions.len() != LANDMARK_COUNT {
            return Err(Error::InvalidConfig(format!("face model needs {LANDMARK_COUNT} rest positions")));
        }
        let mut seen = [false; LANDMARK_COUNT];
        for &i in self.groups.iter().flatten() {
            if i >= LANDMARK_COUNT || std::mem::replace(&mut seen[i], true) {
                return Err(Error::InvalidConfig(format!("groups do not partition the landmarks (index {i})")));
            }
        }
        if seen.iter().any(|s| !s) {
            return Err(Error::InvalidConfig("groups do not cover every landmark".into()));
        }
        let lips = self.upper_lip.iter().chain(&self.lower_lip);
        if lips.clone().any(|&i| i >= LANDMARK_COUNT) || self.upper_lip.iter().any(|i| self.lower_lip.contains(i)) {
            return Err(Error::InvalidConfig("lip sets must be disjoint landmark indices".into()));
        }
        let margin = 6.0;
        let hi = CANVAS as f64 - 1.0 - margin;
        if self.rest_positions.iter().any(|p| p.x < margin || p.y < margin || p.x > hi || p.y > hi) {
            return Err(Error::InvalidConfig("rest positions too close to the canvas border".into()));
        }
        Ok(())
    }

    fn group_of(&self) -> Vec<usize> {
        let mut g = vec![0; LANDMARK_COUNT];
        for (c, members) in self.groups.iter().enumerate() {
            for &i in members {
                g[i] = c;
            }
        }
        g
    }

    fn lip_sign(&self) -> Vec<f64> {
        let mut s = vec![0.0; LANDMARK_COUNT];
        for &i in &self.upper_lip {
            s[i] = -1.0;
        }
        for &i in &self.lower_lip {
            s[i] = 1.0;
        }
        s
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SynthMode {
    #[default]
    RealLike,
    FakeLike,
}

impl std::fmt::Display for SynthMode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Self::RealLike => "real_like",
            Self::FakeLike => "fake_like",
        })
    }
}

impl std::str::FromStr for SynthMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "real_like" | "real" => Ok(Self::RealLike),
            "fake_like" | "fake" => Ok(Self::FakeLike),
            other => Err(Error::InvalidConfig(format!("unknown synth mode {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SynthConfig {
    pub frames: usize,
    /// Per-axis standard deviation of the global head velocity, px/frame.
    pub global_motion_sigma: f64,
    /// Per-axis standard deviation of each component's own velocity.
    pub group_motion_sigma: f64,
    /// Independent per-landmark jitter.
    pub noise_sigma: f64,
    /// Long-run fraction of frames spent talking.
    pub talk_probability: f64,
    pub mode: SynthMode,
    /// Probability that a landmark's motion in a fake-like frame is replaced
    /// by its motion from a random other frame.
    pub fake_decorrelation: f64,
    pub rng_seed: u64,
}

impl Default for SynthConfig {
    fn default() -> Self {
        Self {
            frames: 120,
            global_motion_sigma: 0.6,
            group_motion_sigma: 1.0,
            noise_sigma: 0.3,
            talk_probability: 0.5,
            mode: SynthMode::RealLike,
            fake_decorrelation: 1.0,
            rng_seed: 0,
        }
    }
}

impl SynthConfig {
    pub fn validate(&self) -> Result<()> {
        if self.frames < 2 {
            return Err(Error::InvalidConfig(format!("synth needs >= 2 frames, got {}", self.frames)));
        }
        for (name, v) in [
            ("global_motion_sigma", self.global_motion_sigma),
            ("group_motion_sigma", self.group_motion_sigma),
            ("noise_sigma", self.noise_sigma),
        ] {
            if !(v >= 0.0 && v.is_finite()) {
                return Err(Error::InvalidConfig(format!("{name} must be finite and >= 0")));
            }
        }
        for (name, v) in [("talk_probability", self.talk_probability), ("fake_decorrelation", self.fake_decorrelation)] {
            if !(0.0..=1.0).contains(&v) {
                return Err(Error::InvalidConfig(format!("{name} must lie in [0, 1]")));
            }
        }
        Ok(())
    }
}

/// A generated track with the exact landmark motion of every frame pair.
#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticTrack {
    pub track: LandmarkTrack,
    /// `motions[t][i]` moves landmark `i` from frame `t` to frame `t + 1`.
    pub motions: Vec<Vec<[f64; 2]>>,
    pub mode: SynthMode,
}

impl SyntheticTrack {
    pub fn feature_sets(&self, video: usize, gate: &MotionGateConfig) -> Result<Vec<MotionFeatureSet<f64>>> {
        self.motions
            .iter()
            .enumerate()
            .map(|(t, m)| MotionFeatureSet::new(PairId::new(video, t), m.clone(), gate))
            .collect()
    }

    /// CSV `pair,landmark,u,v` of the ground-truth motion.
    pub fn motion_csv(&self) -> String {
        let mut out = String::from("pair,landmark,u,v\n");
        for (t, m) in self.motions.iter().enumerate() {
            for (i, [u, v]) in m.iter().enumerate() {
                out.push_str(&format!("{t},{i},{u},{v}\n"));
            }
        }
        out
    }
}

/// Mean-reverting AR(1) velocity of a displacement in `D` dimensions.
struct Drift<const D: usize> {
    pos: [f64; D],
    vel: [f64; D],
    innovation: f64,
}

impl<const D: usize> Drift<D> {
    fn new(sigma: f64) -> Self {
        Self { pos: [0.0; D], vel: [0.0; D], innovation: sigma * (1.0 - AR_COEF * AR_COEF).sqrt() }
    }

    fn step(&mut self, rng: &mut ChaCha8Rng, excite: bool) -> [f64; D] {
        for d in 0..D {
            let z: f64 = StandardNormal.sample(rng);
            let kick = if excite { self.innovation * z } else { 0.0 };
            self.vel[d] = AR_COEF * self.vel[d] - RESTORING * self.pos[d] + kick;
            self.pos[d] += self.vel[d];
        }
        self.vel
    }
}

fn real_motions(model: &FaceModel, cfg: &SynthConfig, rng: &mut ChaCha8Rng) -> Vec<Vec<[f64; 2]>> {
    let group_of = model.group_of();
    let lip_sign = model.lip_sign();
    let mut global = Drift::<2>::new(cfg.global_motion_sigma);
    let mut groups: Vec<Drift<2>> = model.groups.iter().map(|_| Drift::new(cfg.group_motion_sigma)).collect();
    let mut lips = Drift::<1>::new(cfg.group_motion_sigma);
    let p_stop = 1.0 / TALK_SEGMENT;
    let p_start = if cfg.talk_probability >= 1.0 {
        1.0
    } else {
        (p_stop * cfg.talk_probability / (1.0 - cfg.talk_probability)).min(1.0)
    };
    let mut talking = rng.random::<f64>() < cfg.talk_probability;

    (0..cfg.frames - 1)
        .map(|_| {
            let g = global.step(rng, true);
            let offsets: Vec<[f64; 2]> = groups.iter_mut().map(|d| d.step(rng, true)).collect();
            let [s] = lips.step(rng, talking);
            talking = if talking { rng.random::<f64>() >= p_stop || cfg.talk_probability >= 1.0 } else { rng.random::<f64>() < p_start };
            (0..LANDMARK_COUNT)
                .map(|i| {
                    let o = offsets[group_of[i]];
                    let nx: f64 = StandardNormal.sample(rng);
                    let ny: f64 = StandardNormal.sample(rng);
                    [
                        g[0] + o[0] + cfg.noise_sigma * nx,
                        g[1] + o[1] + lip_sign[i] * s + cfg.noise_sigma * ny,
                    ]
                })
                .collect()
        })
        .collect()
}

/// Per landmark, picks each frame pair with probability `q` and shuffles the
/// landmark's motion among the picked pairs. Every landmark keeps its own
/// multiset of motion vectors and its end position; only the timing changes.
fn decorrelate(motions: &[Vec<[f64; 2]>], q: f64, rng: &mut ChaCha8Rng) -> Vec<Vec<[f64; 2]>> {
    let mut out = motions.to_vec();
    for i in 0..LANDMARK_COUNT {
        let picked: Vec<usize> = (0..motions.len()).filter(|_| rng.random::<f64>() < q).collect();
        let mut sources = picked.clone();
        sources.shuffle(rng);
        for (&t, &src) in picked.iter().zip(&sources) {
            out[t][i] = motions[src][i];
        }
    }
    out
}

pub fn generate_track(model: &FaceModel, cfg: &SynthConfig) -> Result<SyntheticTrack> {
    model.validate()?;
    cfg.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(cfg.rng_seed, &[stage::SYNTH]));
    let mut motions = real_motions(model, cfg, &mut rng);
    if cfg.mode == SynthMode::FakeLike {
        let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(cfg.rng_seed, &[stage::DECORRELATE]));
        motions = decorrelate(&motions, cfg.fake_decorrelation, &mut rng);
    }

    let mut points = model.rest_positions.clone();
    let mut frames = Vec::with_capacity(cfg.frames);
    frames.push(LandmarkFrame::new(0, points.clone())?);
    for (t, m) in motions.iter().enumerate() {
        for (p, d) in points.iter_mut().zip(m) {
            p.x += d[0];
            p.y += d[1];
        }
        frames.push(LandmarkFrame::new(t + 1, points.clone())?);
    }
    let id = format!("{}-{:016x}", cfg.mode, cfg.rng_seed);
    Ok(SyntheticTrack { track: LandmarkTrack::new(id, frames)?, motions, mode: cfg.mode })
}

/// Band-limited analytic texture used as the face canvas.
#[derive(Debug, Clone)]
pub struct Texture {
    terms: Vec<[f64; 4]>,
}

impl Texture {
    pub fn new(seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, &[stage::TEXTURE]));
        let terms = (0..40)
            .map(|_| {
                let wavelength = rng.random_range(4.0..16.0);
                let angle = rng.random_range(0.0..std::f64::consts::TAU);
                let k = std::f64::consts::TAU / wavelength;
                [k * f64::cos(angle), k * f64::sin(angle), rng.random_range(0.03..0.09), rng.random_range(0.0..std::f64::consts::TAU)]
            })
            .collect();
        Self { terms }
    }

    pub fn value(&self, x: f64, y: f64) -> f64 {
        let s: f64 = self.terms.iter().map(|&[kx, ky, a, p]| a * (kx * x + ky * y + p).cos()).sum();
        0.5 + 0.5 * (8.0 * s).tanh()
    }
}

/// Renders each frame of `track` as the texture pulled back through the
/// inverse-distance-weighted landmark displacement, so content that sits at a
/// landmark's rest position follows that landmark.
pub fn render_frames(track: &LandmarkTrack, rest: &[Point], texture_seed: u64) -> Result<Vec<Frame<f64>>> {
    if rest.len() != LANDMARK_COUNT {
        return Err(Error::DimensionMismatch(format!("{} rest positions", rest.len())));
    }
    let tex = Texture::new(texture_seed);
    Ok(track
        .frames()
        .iter()
        .map(|f| {
            let disp: Vec<(Point, [f64; 2])> =
                f.points.iter().zip(rest).map(|(p, r)| (*p, [p.x - r.x, p.y - r.y])).collect();
            Frame::from_fn(CANVAS, CANVAS, |x, y| {
                let (x, y) = (x as f64, y as f64);
                let (mut sw, mut dx, mut dy) = (0.0, 0.0, 0.0);
                for (p, d) in &disp {
                    let r2 = (x - p.x).powi(2) + (y - p.y).powi(2);
                    if r2 < 1e-12 {
                        return tex.value(x - d[0], y - d[1]).clamp(0.0, 1.0);
                    }
                    let w = 1.0 / (r2 * r2);
                    sw += w;
                    dx += w * d[0];
                    dy += w * d[1];
                }
                tex.value(x - dx / sw, y - dy / sw).clamp(0.0, 1.0)
            })
        })
        .collect())
}
