//! Skeleton data types, manifest ingestion, normalization and per-frame
//! feature vectors.
//!
//! A manifest is line-delimited JSON with one object per action instance:
//!
//! ```text
//! {"subject": "s01", "class": "Duck", "fps": 30.0, "joints": [[[x, y, z], ...], ...]}
//! ```
//!
//! The outer `joints` array holds frames, each frame holds `J` joints in the
//! order declared by the dataset's joint schema.

use std::fs::File;
use std::io::{BufRead, BufReader};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Derivative-mode features need a five-frame window.
pub const MIN_FRAMES_DERIVATIVE: usize = 5;

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Joint {
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl Joint {
    pub const fn new(x: f64, y: f64, z: f64) -> Self {
        Joint { x, y, z }
    }

    pub fn to_array(self) -> [f64; 3] {
        [self.x, self.y, self.z]
    }

    pub fn is_finite(&self) -> bool {
        self.x.is_finite() && self.y.is_finite() && self.z.is_finite()
    }

    pub fn sub(self, other: Joint) -> Joint {
        Joint::new(self.x - other.x, self.y - other.y, self.z - other.z)
    }

    pub fn scale(self, factor: f64) -> Joint {
        Joint::new(self.x * factor, self.y * factor, self.z * factor)
    }

    pub fn distance(self, other: Joint) -> f64 {
        let d = self.sub(other);
        (d.x * d.x + d.y * d.y + d.z * d.z).sqrt()
    }
}

impl From<[f64; 3]> for Joint {
    fn from(v: [f64; 3]) -> Self {
        Joint::new(v[0], v[1], v[2])
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Frame {
    pub joints: Vec<Joint>,
    pub timestamp_index: usize,
}

impl Frame {
    pub fn new(joints: Vec<Joint>, timestamp_index: usize) -> Self {
        Frame {
            joints,
            timestamp_index,
        }
    }

    pub fn num_joints(&self) -> usize {
        self.joints.len()
    }
}

/// One pre-segmented action instance.
#[derive(Debug, Clone, PartialEq)]
pub struct SkeletonSequence {
    frames: Vec<Frame>,
    pub subject_id: String,
    pub class_label: Option<String>,
    pub frame_rate: f64,
}

impl SkeletonSequence {
    /// Builds a sequence, checking that it is non-empty, that every frame has
    /// the same number of joints (at least two), that timestamps strictly
    /// increase and that all coordinates are finite.
    pub fn new(
        frames: Vec<Frame>,
        subject_id: impl Into<String>,
        class_label: Option<String>,
        frame_rate: f64,
    ) -> Result<Self> {
        let first = frames
            .first()
            .ok_or_else(|| Error::Schema("sequence has no frames".into()))?;
        let joints = first.num_joints();
        if joints < 2 {
            return Err(Error::Schema(format!(
                "frames need at least 2 joints, got {joints}"
            )));
        }
        for (i, frame) in frames.iter().enumerate() {
            if frame.num_joints() != joints {
                return Err(Error::Schema(format!(
                    "frame {i} has {} joints, expected {joints}",
                    frame.num_joints()
                )));
            }
            if let Some(j) = frame.joints.iter().position(|j| !j.is_finite()) {
                return Err(Error::Schema(format!(
                    "frame {i} joint {j} has a non-finite coordinate"
                )));
            }
            if i > 0 && frame.timestamp_index <= frames[i - 1].timestamp_index {
                return Err(Error::Schema(format!(
                    "frame {i} timestamp does not increase"
                )));
            }
        }
        if !(frame_rate.is_finite() && frame_rate > 0.0) {
            return Err(Error::Schema(format!("invalid frame rate {frame_rate}")));
        }
        Ok(SkeletonSequence {
            frames,
            subject_id: subject_id.into(),
            class_label,
            frame_rate,
        })
    }

    /// Builds a sequence from raw per-frame joint arrays with timestamps 0..F.
    pub fn from_positions(
        positions: Vec<Vec<[f64; 3]>>,
        subject_id: impl Into<String>,
        class_label: Option<String>,
        frame_rate: f64,
    ) -> Result<Self> {
        let frames = positions
            .into_iter()
            .enumerate()
            .map(|(t, joints)| Frame::new(joints.into_iter().map(Joint::from).collect(), t))
            .collect();
        SkeletonSequence::new(frames, subject_id, class_label, frame_rate)
    }

    pub fn frames(&self) -> &[Frame] {
        &self.frames
    }

    pub fn len(&self) -> usize {
        self.frames.len()
    }

    pub fn is_empty(&self) -> bool {
        self.frames.is_empty()
    }

    pub fn num_joints(&self) -> usize {
        self.frames[0].num_joints()
    }

    fn with_frames(&self, frames: Vec<Frame>) -> Self {
        SkeletonSequence {
            frames,
            subject_id: self.subject_id.clone(),
            class_label: self.class_label.clone(),
            frame_rate: self.frame_rate,
        }
    }
}

#[derive(Debug, Serialize, Deserialize)]
struct ManifestRecord {
    subject: String,
    class: Option<String>,
    fps: f64,
    joints: Vec<Vec<[f64; 3]>>,
}

/// Reads every sequence of a manifest in file order. Blank lines are skipped.
pub fn load_sequences(manifest_path: impl AsRef<Path>) -> Result<Vec<SkeletonSequence>> {
    let path = manifest_path.as_ref();
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut sequences = Vec::new();
    for (idx, line) in BufReader::new(file).lines().enumerate() {
        let line_no = idx + 1;
        let line = line.map_err(|e| Error::io(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        let record: ManifestRecord = serde_json::from_str(&line).map_err(|e| Error::Parse {
            line: line_no,
            message: e.to_string(),
        })?;
        let seq = SkeletonSequence::from_positions(
            record.joints,
            record.subject,
            record.class,
            record.fps,
        )
        .map_err(|e| match e {
            Error::Schema(msg) => Error::Schema(format!("line {line_no}: {msg}")),
            other => other,
        })?;
        sequences.push(seq);
    }
    Ok(sequences)
}

/// Serializes sequences in manifest format, one line per sequence.
pub fn manifest_string(sequences: &[SkeletonSequence]) -> String {
    let mut out = String::new();
    for seq in sequences {
        let record = ManifestRecord {
            subject: seq.subject_id.clone(),
            class: seq.class_label.clone(),
            fps: seq.frame_rate,
            joints: seq
                .frames
                .iter()
                .map(|f| f.joints.iter().map(|j| j.to_array()).collect())
                .collect(),
        };
        out.push_str(&serde_json::to_string(&record).expect("manifest record serializes"));
        out.push('\n');
    }
    out
}

pub fn write_sequences(path: impl AsRef<Path>, sequences: &[SkeletonSequence]) -> Result<()> {
    crate::io::write_atomic(path, manifest_string(sequences).as_bytes())
}

/// Root-centers every frame and rescales it so the two scale joints are one
/// unit apart.
pub fn normalize(
    seq: &SkeletonSequence,
    root_joint: usize,
    scale_pair: (usize, usize),
) -> Result<SkeletonSequence> {
    let joints = seq.num_joints();
    for (name, idx) in [
        ("root joint", root_joint),
        ("scale joint", scale_pair.0),
        ("scale joint", scale_pair.1),
    ] {
        if idx >= joints {
            return Err(Error::Config(format!(
                "{name} index {idx} out of range for {joints} joints"
            )));
        }
    }
    let mut frames = Vec::with_capacity(seq.len());
    for (i, frame) in seq.frames.iter().enumerate() {
        let scale = frame.joints[scale_pair.0].distance(frame.joints[scale_pair.1]);
        if !(scale > 0.0) || !scale.is_finite() {
            return Err(Error::DegenerateSkeleton { frame: i });
        }
        let root = frame.joints[root_joint];
        let inv = 1.0 / scale;
        let joints = frame
            .joints
            .iter()
            .map(|j| j.sub(root).scale(inv))
            .collect();
        frames.push(Frame::new(joints, frame.timestamp_index));
    }
    Ok(seq.with_frames(frames))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum FeatureMode {
    /// Flattened normalized joint positions, D = 3J.
    #[default]
    Positions,
    /// Positions followed by weighted velocity and acceleration blocks, D = 9J.
    PositionsVelocityAcceleration,
}

impl FeatureMode {
    pub fn as_str(self) -> &'static str {
        match self {
            FeatureMode::Positions => "positions",
            FeatureMode::PositionsVelocityAcceleration => "positions_velocity_acceleration",
        }
    }

    pub fn dimension(self, joints: usize) -> usize {
        match self {
            FeatureMode::Positions => 3 * joints,
            FeatureMode::PositionsVelocityAcceleration => 9 * joints,
        }
    }
}

impl std::str::FromStr for FeatureMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "positions" => Ok(FeatureMode::Positions),
            "positions_velocity_acceleration" | "moving_pose" => {
                Ok(FeatureMode::PositionsVelocityAcceleration)
            }
            other => Err(Error::Config(format!("unknown feature mode `{other}`"))),
        }
    }
}

/// Velocity and acceleration block weights of the moving pose descriptor.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DescriptorWeights {
    pub velocity: f64,
    pub acceleration: f64,
}

impl Default for DescriptorWeights {
    fn default() -> Self {
        DescriptorWeights {
            velocity: 0.75,
            acceleration: 0.6,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FrameFeature {
    pub vector: Vec<f64>,
    pub source_frame: usize,
}

fn flatten(frame: &Frame) -> Vec<f64> {
    frame.joints.iter().flat_map(|j| j.to_array()).collect()
}

/// Inverse of positions-mode flattening.
pub fn unflatten_positions(vector: &[f64]) -> Vec<Joint> {
    vector
        .chunks_exact(3)
        .map(|c| Joint::new(c[0], c[1], c[2]))
        .collect()
}

/// One feature per frame. Velocities use `(P[t+1] - P[t-1]) / 2` and
/// accelerations `(P[t+2] - 2P[t] + P[t-2]) / 4`; frames without a full
/// window fall back to one-sided differences.
pub fn frame_features(
    seq: &SkeletonSequence,
    mode: FeatureMode,
    weights: DescriptorWeights,
) -> Result<Vec<FrameFeature>> {
    let positions: Vec<Vec<f64>> = seq.frames.iter().map(flatten).collect();
    if mode == FeatureMode::Positions {
        return Ok(positions
            .into_iter()
            .enumerate()
            .map(|(t, vector)| FrameFeature {
                vector,
                source_frame: t,
            })
            .collect());
    }

    let n = positions.len();
    if n < MIN_FRAMES_DERIVATIVE {
        return Err(Error::InsufficientFrames {
            needed: MIN_FRAMES_DERIVATIVE,
            got: n,
        });
    }
    let dim = positions[0].len();
    let p = |t: usize, d: usize| positions[t][d];
    let mut features = Vec::with_capacity(n);
    for t in 0..n {
        let mut vector = Vec::with_capacity(3 * dim);
        vector.extend_from_slice(&positions[t]);
        for d in 0..dim {
            let v = if t == 0 {
                p(1, d) - p(0, d)
            } else if t == n - 1 {
                p(t, d) - p(t - 1, d)
            } else {
                0.5 * (p(t + 1, d) - p(t - 1, d))
            };
            vector.push(weights.velocity * v);
        }
        for d in 0..dim {
            let a = if t < 2 {
                p(t + 2, d) - 2.0 * p(t + 1, d) + p(t, d)
            } else if t + 2 >= n {
                p(t, d) - 2.0 * p(t - 1, d) + p(t - 2, d)
            } else {
                0.25 * (p(t + 2, d) - 2.0 * p(t, d) + p(t - 2, d))
            };
            vector.push(weights.acceleration * a);
        }
        features.push(FrameFeature {
            vector,
            source_frame: t,
        });
    }
    Ok(features)
}
