//! Flat `key = value` configuration files. `#` starts a comment; unknown keys
//! are rejected so typos do not silently fall back to defaults.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use crate::decoder::DecoderOptions;
use crate::error::{Error, Result};
use crate::keyframe::{DEFAULT_SIGMA, DEFAULT_WINDOW};
use crate::lexicon::EmOptions;
use crate::skeleton::{DescriptorWeights, FeatureMode};
use crate::synth::SyntheticSpec;

/// How subjects are divided between training and testing.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub enum SplitSpec {
    /// Subjects in natural order; odd 1-based positions train, even test.
    #[default]
    OddEven,
    /// Listed subjects train, the rest test.
    TrainSubjects(Vec<String>),
}

impl FromStr for SplitSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        if s == "odd_even" {
            return Ok(SplitSpec::OddEven);
        }
        if let Some(list) = s.strip_prefix("train:") {
            let subjects: Vec<String> = list
                .split(',')
                .map(str::trim)
                .filter(|x| !x.is_empty())
                .map(String::from)
                .collect();
            if subjects.is_empty() {
                return Err(Error::Config("split `train:` lists no subjects".into()));
            }
            return Ok(SplitSpec::TrainSubjects(subjects));
        }
        Err(Error::Config(format!(
            "unknown split `{s}` (expected `odd_even` or `train:<s1,s2,...>`)"
        )))
    }
}

/// Codebook size, either absolute or as a multiple of the semantic alphabet.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CodebookSize {
    Fixed(usize),
    PerSemanticPose(usize),
}

impl CodebookSize {
    pub fn resolve(self, semantic_poses: usize) -> usize {
        match self {
            CodebookSize::Fixed(k) => k,
            CodebookSize::PerSemanticPose(m) => m * semantic_poses,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PipelineConfig {
    pub feature_mode: FeatureMode,
    pub weights: DescriptorWeights,
    pub root_joint: usize,
    pub scale_joints: (usize, usize),
    pub smoothing_window: usize,
    pub smoothing_sigma: f64,
    pub codebook_size: CodebookSize,
    pub kmeans_seed: u64,
    pub kmeans_max_iters: usize,
    pub em: EmOptions,
    pub null_row: bool,
    pub length_factor: bool,
    pub split: SplitSpec,
    pub sweep_multipliers: Vec<usize>,
    /// k-means seeds repeated at every sweep point; empty means `kmeans_seed`.
    pub sweep_seeds: Vec<u64>,
    pub manifest: Option<PathBuf>,
    pub instructions: Option<PathBuf>,
    pub novel: Option<PathBuf>,
    pub out: Option<PathBuf>,
    pub artifacts: Option<PathBuf>,
    pub ground_truth: Option<PathBuf>,
    pub keyframe_dump: bool,
    pub synth: SyntheticSpec,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            feature_mode: FeatureMode::Positions,
            weights: DescriptorWeights::default(),
            root_joint: 0,
            scale_joints: (0, 1),
            smoothing_window: DEFAULT_WINDOW,
            smoothing_sigma: DEFAULT_SIGMA,
            codebook_size: CodebookSize::PerSemanticPose(5),
            kmeans_seed: 7,
            kmeans_max_iters: 300,
            em: EmOptions::default(),
            null_row: true,
            length_factor: true,
            split: SplitSpec::OddEven,
            sweep_multipliers: (1..=7).collect(),
            sweep_seeds: Vec::new(),
            manifest: None,
            instructions: None,
            novel: None,
            out: None,
            artifacts: None,
            ground_truth: None,
            keyframe_dump: false,
            synth: SyntheticSpec::default(),
        }
    }
}

fn parse<T: FromStr>(key: &str, value: &str) -> Result<T> {
    value
        .parse()
        .map_err(|_| Error::Config(format!("invalid value `{value}` for `{key}`")))
}

fn parse_bool(key: &str, value: &str) -> Result<bool> {
    match value {
        "true" | "yes" | "1" | "on" => Ok(true),
        "false" | "no" | "0" | "off" => Ok(false),
        _ => Err(Error::Config(format!("invalid boolean `{value}` for `{key}`"))),
    }
}

fn parse_list<T: FromStr>(key: &str, value: &str) -> Result<Vec<T>> {
    value
        .split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| parse(key, s))
        .collect()
}

impl PipelineConfig {
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let base = path.parent().unwrap_or(Path::new(""));
        PipelineConfig::parse_str(&text, base)
    }

    /// Parses config text; relative paths resolve against `base`.
    pub fn parse_str(text: &str, base: &Path) -> Result<Self> {
        let mut pairs = BTreeMap::new();
        for (idx, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| Error::Parse {
                line: idx + 1,
                message: format!("expected `key = value`, got `{line}`"),
            })?;
            pairs.insert(key.trim().to_string(), value.trim().to_string());
        }
        let mut cfg = PipelineConfig::default();
        for (key, value) in &pairs {
            cfg.set(key, value, base)?;
        }
        cfg.validate()?;
        Ok(cfg)
    }

    fn set(&mut self, key: &str, v: &str, base: &Path) -> Result<()> {
        let path = |v: &str| Some(base.join(v));
        match key {
            "feature_mode" => self.feature_mode = v.parse()?,
            "alpha" => self.weights.velocity = parse(key, v)?,
            "beta" => self.weights.acceleration = parse(key, v)?,
            "root_joint" => self.root_joint = parse(key, v)?,
            "scale_joint_a" => self.scale_joints.0 = parse(key, v)?,
            "scale_joint_b" => self.scale_joints.1 = parse(key, v)?,
            "smoothing_window" => self.smoothing_window = parse(key, v)?,
            "smoothing_sigma" => self.smoothing_sigma = parse(key, v)?,
            "k" => self.codebook_size = CodebookSize::Fixed(parse(key, v)?),
            "k_multiplier" => self.codebook_size = CodebookSize::PerSemanticPose(parse(key, v)?),
            "kmeans_seed" => self.kmeans_seed = parse(key, v)?,
            "kmeans_max_iters" => self.kmeans_max_iters = parse(key, v)?,
            "em_tol" => self.em.tol = parse(key, v)?,
            "em_max_iters" => self.em.max_iters = parse(key, v)?,
            "null_row" => self.null_row = parse_bool(key, v)?,
            "length_factor" => self.length_factor = parse_bool(key, v)?,
            "split" => self.split = v.parse()?,
            "sweep_multipliers" => self.sweep_multipliers = parse_list(key, v)?,
            "sweep_seeds" => self.sweep_seeds = parse_list(key, v)?,
            "manifest" => self.manifest = path(v),
            "instructions" => self.instructions = path(v),
            "novel" => self.novel = path(v),
            "out" => self.out = path(v),
            "artifacts" => self.artifacts = path(v),
            "ground_truth" => self.ground_truth = path(v),
            "keyframe_dump" => self.keyframe_dump = parse_bool(key, v)?,
            "synth_subjects" => self.synth.subjects = parse(key, v)?,
            "synth_instances" => self.synth.instances_per_subject = parse(key, v)?,
            "synth_noise" => self.synth.noise_sigma = parse(key, v)?,
            "synth_frames" => self.synth.frames_per_transition = parse(key, v)?,
            "synth_scale_jitter" => self.synth.scale_jitter = parse(key, v)?,
            "synth_seed" => self.synth.seed = parse(key, v)?,
            "synth_classes" => self.synth.classes = parse_list(key, v)?,
            _ => return Err(Error::Config(format!("unknown config key `{key}`"))),
        }
        Ok(())
    }

    /// Seeds used by each sweep point.
    pub fn sweep_seed_list(&self) -> Vec<u64> {
        if self.sweep_seeds.is_empty() {
            vec![self.kmeans_seed]
        } else {
            self.sweep_seeds.clone()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.smoothing_window == 0 || self.smoothing_window % 2 == 0 {
            return Err(Error::Config(format!(
                "smoothing_window must be odd, got {}",
                self.smoothing_window
            )));
        }
        if !(self.smoothing_sigma > 0.0) {
            return Err(Error::Config("smoothing_sigma must be positive".into()));
        }
        if !(self.weights.velocity.is_finite() && self.weights.acceleration.is_finite()) {
            return Err(Error::Config("alpha and beta must be finite".into()));
        }
        match self.codebook_size {
            CodebookSize::Fixed(0) | CodebookSize::PerSemanticPose(0) => {
                return Err(Error::Config("k must be at least 1".into()))
            }
            _ => {}
        }
        if !(self.em.tol >= 0.0) {
            return Err(Error::Config("em_tol must be non-negative".into()));
        }
        if self.sweep_multipliers.contains(&0) {
            return Err(Error::Config("sweep multipliers must be at least 1".into()));
        }
        if self.scale_joints.0 == self.scale_joints.1 {
            return Err(Error::Config("scale joints must differ".into()));
        }
        self.synth.validate()
    }

    pub fn decoder_options(&self) -> DecoderOptions {
        DecoderOptions {
            include_null: self.null_row,
            length_factor: self.length_factor,
        }
    }
}
