//! Pose lexicon learning and action classification.
//!
//! Skeleton sequences are reduced to key frames (extrema of the largest
//! eigenvalue of the per-frame joint covariance), clustered into visual pose
//! candidates, and paired with semantic pose sentences taken from textual
//! action instructions. An EM-trained translation table links the two
//! vocabularies; actions, including ones never trained, are classified by
//! their best-alignment translation score.

pub mod codebook;
pub mod config;
pub mod decoder;
pub mod error;
pub mod instructions;
pub mod io;
pub mod keyframe;
pub mod lexicon;
pub mod pipeline;
pub mod skeleton;
pub mod synth;

pub use codebook::{VisualCodebook, VisualSentence};
pub use config::PipelineConfig;
pub use decoder::{ClassificationResult, DecoderOptions, InstructionSet};
pub use error::{Error, Result};
pub use lexicon::{ParallelCorpus, PoseLexicon, SemanticInstruction, TranslationTable};
pub use skeleton::{FeatureMode, SkeletonSequence};
