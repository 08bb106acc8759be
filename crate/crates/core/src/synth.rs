//! Synthetic skeleton data with a planted pose lexicon.
//!
//! Twelve canonical body configurations stand in for semantic poses `T1..T12`
//! and eight action classes are written as semantic sentences over them. An
//! instance is rendered by linear interpolation between the canonical joint
//! positions of consecutive poses, scaled by a per-subject factor and
//! perturbed with i.i.d. Gaussian joint noise. The pose geometry is a coarse
//! reading of the textual pose descriptions (e.g. "arms overhead" puts the
//! wrists above the head); the fixture table lives in the README.

use std::collections::BTreeMap;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lexicon::SemanticInstruction;
use crate::skeleton::{self, SkeletonSequence};

/// Kinect joint order used by the generated manifests.
pub const JOINT_NAMES: [&str; 20] = [
    "HipCenter",
    "Spine",
    "ShoulderCenter",
    "Head",
    "ShoulderLeft",
    "ElbowLeft",
    "WristLeft",
    "HandLeft",
    "ShoulderRight",
    "ElbowRight",
    "WristRight",
    "HandRight",
    "HipLeft",
    "KneeLeft",
    "AnkleLeft",
    "FootLeft",
    "HipRight",
    "KneeRight",
    "AnkleRight",
    "FootRight",
];

pub const HIP_CENTER: usize = 0;
pub const SPINE: usize = 1;
pub const REST_SYMBOL: &str = "T1";
/// Hip-center to spine distance of the unscaled body, in meters.
pub const REFERENCE_LENGTH: f64 = 0.3;

const FRAME_RATE: f64 = 30.0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SyntheticSpec {
    pub subjects: usize,
    pub instances_per_subject: usize,
    /// Joint noise standard deviation as a fraction of the reference length.
    pub noise_sigma: f64,
    pub frames_per_transition: usize,
    /// Subject scale factors are drawn uniformly from `1 ± scale_jitter`.
    pub scale_jitter: f64,
    pub seed: u64,
    /// Class labels to generate; empty means the whole catalogue.
    pub classes: Vec<String>,
}

impl Default for SyntheticSpec {
    fn default() -> Self {
        SyntheticSpec {
            subjects: 10,
            instances_per_subject: 10,
            noise_sigma: 0.02,
            frames_per_transition: 10,
            scale_jitter: 0.15,
            seed: 2016,
            classes: Vec::new(),
        }
    }
}

impl SyntheticSpec {
    pub fn validate(&self) -> Result<()> {
        if self.subjects == 0 || self.instances_per_subject == 0 {
            return Err(Error::Config(
                "synthetic data needs at least one subject and instance".into(),
            ));
        }
        if !(self.noise_sigma >= 0.0 && self.noise_sigma.is_finite()) {
            return Err(Error::Config("synth_noise must be non-negative".into()));
        }
        if self.frames_per_transition < 2 {
            return Err(Error::Config("synth_frames must be at least 2".into()));
        }
        if !(0.0..1.0).contains(&self.scale_jitter) {
            return Err(Error::Config("synth_scale_jitter must be in [0, 1)".into()));
        }
        let catalogue = class_catalogue();
        for c in &self.classes {
            if !catalogue.iter().any(|(label, _)| label == c) {
                return Err(Error::Config(format!("unknown synthetic class `{c}`")));
            }
        }
        Ok(())
    }

    /// Selected classes in catalogue order.
    pub fn class_definitions(&self) -> Vec<(String, Vec<String>)> {
        class_catalogue()
            .into_iter()
            .filter(|(label, _)| self.classes.is_empty() || self.classes.contains(label))
            .collect()
    }
}

type Dir = [f64; 3];

const UP: Dir = [0.0, 1.0, 0.0];
const DOWN: Dir = [0.0, -1.0, 0.0];
const FORWARD: Dir = [0.0, 0.0, 1.0];
/// Subject's left.
const LEFT: Dir = [1.0, 0.0, 0.0];
const RIGHT: Dir = [-1.0, 0.0, 0.0];

fn blend(a: Dir, wa: f64, b: Dir, wb: f64) -> Dir {
    let v = [
        a[0] * wa + b[0] * wb,
        a[1] * wa + b[1] * wb,
        a[2] * wa + b[2] * wb,
    ];
    let n = (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt();
    [v[0] / n, v[1] / n, v[2] / n]
}

/// Segment directions of a body configuration, in world coordinates
/// (x to the subject's left, y up, z forward).
#[derive(Debug, Clone, Copy)]
struct PoseSpec {
    torso_pitch_deg: f64,
    left_upper_arm: Dir,
    left_forearm: Dir,
    right_upper_arm: Dir,
    right_forearm: Dir,
    left_thigh: Dir,
    left_shin: Dir,
    right_thigh: Dir,
    right_shin: Dir,
}

const REST: PoseSpec = PoseSpec {
    torso_pitch_deg: 0.0,
    left_upper_arm: DOWN,
    left_forearm: DOWN,
    right_upper_arm: DOWN,
    right_forearm: DOWN,
    left_thigh: DOWN,
    left_shin: DOWN,
    right_thigh: DOWN,
    right_shin: DOWN,
};

fn add(p: Dir, d: Dir, len: f64) -> Dir {
    [p[0] + d[0] * len, p[1] + d[1] * len, p[2] + d[2] * len]
}

/// Joint positions of a configuration for a body of the given scale, feet on
/// the floor.
fn render(spec: &PoseSpec, scale: f64) -> Vec<[f64; 3]> {
    let pitch = spec.torso_pitch_deg.to_radians();
    let torso = [0.0, pitch.cos(), pitch.sin()];
    let hip = [0.0, 0.0, 0.0];
    let spine = add(hip, torso, 0.3);
    let shoulder_c = add(hip, torso, 0.55);
    let head = add(hip, torso, 0.75);
    let shoulder_l = add(shoulder_c, LEFT, 0.2);
    let shoulder_r = add(shoulder_c, RIGHT, 0.2);
    let arm = |shoulder: Dir, upper: Dir, fore: Dir| {
        let elbow = add(shoulder, upper, 0.3);
        let wrist = add(elbow, fore, 0.27);
        let hand = add(wrist, fore, 0.08);
        [shoulder, elbow, wrist, hand]
    };
    let [_, elbow_l, wrist_l, hand_l] = arm(shoulder_l, spec.left_upper_arm, spec.left_forearm);
    let [_, elbow_r, wrist_r, hand_r] = arm(shoulder_r, spec.right_upper_arm, spec.right_forearm);
    let hip_l = [0.1, -0.05, 0.0];
    let hip_r = [-0.1, -0.05, 0.0];
    let leg = |hip: Dir, thigh: Dir, shin: Dir| {
        let knee = add(hip, thigh, 0.45);
        let ankle = add(knee, shin, 0.43);
        let foot = add(ankle, blend(FORWARD, 1.0, DOWN, 0.3), 0.1);
        [knee, ankle, foot]
    };
    let [knee_l, ankle_l, foot_l] = leg(hip_l, spec.left_thigh, spec.left_shin);
    let [knee_r, ankle_r, foot_r] = leg(hip_r, spec.right_thigh, spec.right_shin);
    let mut joints = vec![
        hip, spine, shoulder_c, head, shoulder_l, elbow_l, wrist_l, hand_l, shoulder_r, elbow_r,
        wrist_r, hand_r, hip_l, knee_l, ankle_l, foot_l, hip_r, knee_r, ankle_r, foot_r,
    ];
    let lift = 0.08 - ankle_l[1].min(ankle_r[1]);
    for j in &mut joints {
        j[1] += lift;
        for v in j.iter_mut() {
            *v *= scale;
        }
    }
    joints
}

/// Canonical configurations of `T1..T12`, with a short description of each.
fn pose_catalogue() -> Vec<(&'static str, &'static str, PoseSpec)> {
    let fwd = FORWARD;
    let stomach_l = blend(FORWARD, 1.0, RIGHT, 0.6);
    let stomach_r = blend(FORWARD, 1.0, LEFT, 0.6);
    let reach_up = blend(FORWARD, 1.0, UP, 1.0);
    let thigh_squat = blend(FORWARD, 1.0, DOWN, 0.5);
    let shin_squat = blend(DOWN, 1.0, FORWARD, -0.4);
    let kick = blend(FORWARD, 1.0, DOWN, 0.6);
    let punch_up = blend(FORWARD, 0.4, UP, 1.0);
    let crouch_thigh = blend(FORWARD, 1.0, DOWN, 0.2);
    let crouch_shin = blend(DOWN, 1.0, FORWARD, -0.6);
    vec![
        ("T1", "arms beside legs (rest)", REST),
        (
            "T2",
            "arms overhead",
            PoseSpec {
                left_upper_arm: UP,
                left_forearm: UP,
                right_upper_arm: UP,
                right_forearm: UP,
                ..REST
            },
        ),
        (
            "T3",
            "squat with arms forward, torso leaning forward",
            PoseSpec {
                torso_pitch_deg: 35.0,
                left_thigh: thigh_squat,
                left_shin: shin_squat,
                right_thigh: thigh_squat,
                right_shin: shin_squat,
                left_upper_arm: fwd,
                left_forearm: fwd,
                right_upper_arm: fwd,
                right_forearm: fwd,
                ..REST
            },
        ),
        (
            "T4",
            "right arm thrust up and forward",
            PoseSpec {
                right_upper_arm: punch_up,
                right_forearm: punch_up,
                ..REST
            },
        ),
        (
            "T5",
            "right arm raised diagonally to the side",
            PoseSpec {
                right_upper_arm: blend(UP, 1.0, RIGHT, 0.5),
                right_forearm: blend(UP, 1.0, RIGHT, 0.5),
                ..REST
            },
        ),
        (
            "T6",
            "left arm thrust up and forward",
            PoseSpec {
                left_upper_arm: punch_up,
                left_forearm: punch_up,
                ..REST
            },
        ),
        (
            "T7",
            "both hands in front of the stomach",
            PoseSpec {
                left_forearm: stomach_l,
                right_forearm: stomach_r,
                ..REST
            },
        ),
        (
            "T8",
            "both arms raised forward and up",
            PoseSpec {
                left_upper_arm: reach_up,
                left_forearm: reach_up,
                right_upper_arm: reach_up,
                right_forearm: reach_up,
                ..REST
            },
        ),
        (
            "T9",
            "deep crouch, hands by the knees",
            PoseSpec {
                torso_pitch_deg: 45.0,
                left_thigh: crouch_thigh,
                left_shin: crouch_shin,
                right_thigh: crouch_thigh,
                right_shin: crouch_shin,
                ..REST
            },
        ),
        (
            "T10",
            "left knee raised, thigh horizontal, torso leaning forward",
            PoseSpec {
                torso_pitch_deg: 45.0,
                left_thigh: fwd,
                left_shin: DOWN,
                ..REST
            },
        ),
        (
            "T11",
            "arms raised sideways in a V",
            PoseSpec {
                left_upper_arm: blend(UP, 1.0, LEFT, 1.0),
                left_forearm: blend(UP, 1.0, LEFT, 1.0),
                right_upper_arm: blend(UP, 1.0, RIGHT, 1.0),
                right_forearm: blend(UP, 1.0, RIGHT, 1.0),
                ..REST
            },
        ),
        (
            "T12",
            "right leg kicked forward, torso leaning forward",
            PoseSpec {
                torso_pitch_deg: 45.0,
                right_thigh: kick,
                right_shin: kick,
                ..REST
            },
        ),
    ]
}

/// Class label and semantic sentence of every catalogue class.
///
/// Every sentence starts and ends in the rest pose. Along a sentence the
/// largest eigenvalue of consecutive poses alternates up and down, so each
/// interior pose is a strict extremum of the profile. No two non-rest poses
/// occur in exactly the same set of classes, even with "Lift arms" and
/// "Alternate punch" removed; poses that always co-occur would get identical
/// translation rows.
pub fn class_catalogue() -> Vec<(String, Vec<String>)> {
    let table: [(&str, &[&str]); 8] = [
        ("Lift arms", &["T1", "T2", "T1"]),
        ("Crouch and spring", &["T1", "T4", "T9", "T2", "T1"]),
        ("Push right", &["T1", "T4", "T1", "T5", "T1"]),
        ("Wind up", &["T1", "T2", "T7", "T8", "T1"]),
        ("Alternate punch", &["T1", "T4", "T1", "T6", "T1"]),
        ("Squat and reach", &["T1", "T8", "T3", "T6", "T1"]),
        ("Open arms", &["T1", "T11", "T10", "T6", "T1"]),
        ("Kick", &["T1", "T10", "T5", "T12", "T1"]),
    ];
    table
        .iter()
        .map(|(label, poses)| {
            (
                label.to_string(),
                poses.iter().map(|s| s.to_string()).collect(),
            )
        })
        .collect()
}

/// Canonical joint positions of every semantic pose at unit subject scale.
pub fn canonical_poses() -> BTreeMap<String, Vec<[f64; 3]>> {
    pose_catalogue()
        .into_iter()
        .map(|(symbol, _, spec)| (symbol.to_string(), render(&spec, 1.0)))
        .collect()
}

pub fn pose_descriptions() -> BTreeMap<String, String> {
    pose_catalogue()
        .into_iter()
        .map(|(symbol, text, _)| (symbol.to_string(), text.to_string()))
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InstanceTruth {
    pub index: usize,
    pub subject: String,
    pub class: String,
    pub semantic: Vec<String>,
    pub scale: f64,
}

/// Planted lexicon and per-instance semantic sentences.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroundTruth {
    pub joint_names: Vec<String>,
    pub rest_symbol: String,
    pub root_joint: usize,
    pub scale_joints: (usize, usize),
    pub poses: BTreeMap<String, Vec<[f64; 3]>>,
    pub descriptions: BTreeMap<String, String>,
    pub classes: BTreeMap<String, Vec<String>>,
    pub instances: Vec<InstanceTruth>,
}

impl GroundTruth {
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        crate::io::read_json(path)
    }
}

#[derive(Debug, Clone)]
pub struct SyntheticDataset {
    pub sequences: Vec<SkeletonSequence>,
    pub instructions: Vec<SemanticInstruction>,
    pub ground_truth: GroundTruth,
}

pub fn subject_id(index: usize) -> String {
    format!("s{:02}", index + 1)
}

/// Renders one noiseless-or-noisy instance through the given pose sentence.
fn render_instance(
    sentence: &[String],
    poses: &BTreeMap<String, PoseSpec>,
    scale: f64,
    frames_per_transition: usize,
    noise: Option<&Normal<f64>>,
    rng: &mut ChaCha8Rng,
) -> Vec<Vec<[f64; 3]>> {
    let keys: Vec<Vec<[f64; 3]>> = sentence.iter().map(|s| render(&poses[s], scale)).collect();
    let mut frames = Vec::new();
    for pair in keys.windows(2) {
        for t in 0..frames_per_transition {
            let w = t as f64 / frames_per_transition as f64;
            frames.push(
                pair[0]
                    .iter()
                    .zip(&pair[1])
                    .map(|(a, b)| {
                        [
                            a[0] + w * (b[0] - a[0]),
                            a[1] + w * (b[1] - a[1]),
                            a[2] + w * (b[2] - a[2]),
                        ]
                    })
                    .collect(),
            );
        }
    }
    frames.push(keys.last().expect("sentence is non-empty").clone());
    if let Some(dist) = noise {
        for frame in &mut frames {
            for joint in frame.iter_mut() {
                for v in joint.iter_mut() {
                    *v += dist.sample(rng);
                }
            }
        }
    }
    frames
}

/// Generates a dataset deterministically from the spec's seed. Sequences are
/// ordered by subject, then class, then instance.
pub fn generate(spec: &SyntheticSpec) -> Result<SyntheticDataset> {
    spec.validate()?;
    let classes = spec.class_definitions();
    let specs: BTreeMap<String, PoseSpec> = pose_catalogue()
        .into_iter()
        .map(|(s, _, p)| (s.to_string(), p))
        .collect();
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let mut sequences = Vec::new();
    let mut instances = Vec::new();
    for subject in 0..spec.subjects {
        let scale = 1.0 + spec.scale_jitter * (2.0 * rng.random::<f64>() - 1.0);
        let sigma = spec.noise_sigma * REFERENCE_LENGTH * scale;
        let noise = if sigma > 0.0 {
            Some(Normal::new(0.0, sigma).map_err(|e| Error::Config(e.to_string()))?)
        } else {
            None
        };
        for (label, sentence) in &classes {
            for _ in 0..spec.instances_per_subject {
                let frames = render_instance(
                    sentence,
                    &specs,
                    scale,
                    spec.frames_per_transition,
                    noise.as_ref(),
                    &mut rng,
                );
                let seq = SkeletonSequence::from_positions(
                    frames,
                    subject_id(subject),
                    Some(label.clone()),
                    FRAME_RATE,
                )?;
                instances.push(InstanceTruth {
                    index: sequences.len(),
                    subject: subject_id(subject),
                    class: label.clone(),
                    semantic: sentence.clone(),
                    scale,
                });
                sequences.push(seq);
            }
        }
    }
    let instructions = classes
        .iter()
        .map(|(label, poses)| SemanticInstruction::from_poses(label.clone(), poses.clone()))
        .collect::<Result<Vec<_>>>()?;
    let ground_truth = GroundTruth {
        joint_names: JOINT_NAMES.iter().map(|s| s.to_string()).collect(),
        rest_symbol: REST_SYMBOL.to_string(),
        root_joint: HIP_CENTER,
        scale_joints: (HIP_CENTER, SPINE),
        poses: canonical_poses(),
        descriptions: pose_descriptions(),
        classes: classes.into_iter().collect(),
        instances,
    };
    Ok(SyntheticDataset {
        sequences,
        instructions,
        ground_truth,
    })
}

#[derive(Serialize)]
struct JointSchema<'a> {
    joints: &'a [String],
    root_joint: usize,
    scale_joints: (usize, usize),
    units: &'static str,
    axes: &'static str,
}

/// Writes `manifest.jsonl`, `manifest.schema.json`, `instructions.json` and
/// `ground_truth.json` into `out`.
pub fn write_dataset(dataset: &SyntheticDataset, out: impl AsRef<Path>) -> Result<()> {
    let out = out.as_ref();
    crate::io::ensure_dir(out)?;
    skeleton::write_sequences(out.join("manifest.jsonl"), &dataset.sequences)?;
    let gt = &dataset.ground_truth;
    crate::io::write_json(
        out.join("manifest.schema.json"),
        &JointSchema {
            joints: &gt.joint_names,
            root_joint: gt.root_joint,
            scale_joints: gt.scale_joints,
            units: "meters",
            axes: "x subject-left, y up, z forward",
        },
    )?;
    crate::instructions::write_instructions(out.join("instructions.json"), &dataset.instructions)?;
    crate::io::write_json(out.join("ground_truth.json"), gt)
}
