//! Action classification by best-alignment translation score against a fixed
//! set of class instructions, including instructions never seen in training.

use std::collections::BTreeMap;

use serde::Serialize;

use crate::codebook::VisualSentence;
use crate::error::{Error, Result};
use crate::lexicon::{SemanticInstruction, TranslationTable};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct DecoderOptions {
    /// Let visual elements align to the NULL pose.
    pub include_null: bool,
    /// Keep the uniform alignment prior `(l+1)^-m` in the score.
    pub length_factor: bool,
}

impl Default for DecoderOptions {
    fn default() -> Self {
        DecoderOptions {
            include_null: true,
            length_factor: true,
        }
    }
}

/// Candidate instructions keyed by class label, iterated in label order.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct InstructionSet {
    entries: BTreeMap<String, SemanticInstruction>,
}

impl InstructionSet {
    pub fn new() -> Self {
        InstructionSet::default()
    }

    pub fn from_instructions<I>(instructions: I) -> Result<Self>
    where
        I: IntoIterator<Item = SemanticInstruction>,
    {
        let mut set = InstructionSet::new();
        for ins in instructions {
            set.insert(ins)?;
        }
        Ok(set)
    }

    pub fn insert(&mut self, instruction: SemanticInstruction) -> Result<()> {
        let label = instruction.class_label.clone();
        if self.entries.contains_key(&label) {
            return Err(Error::Config(format!("duplicate class label `{label}`")));
        }
        self.entries.insert(label, instruction);
        Ok(())
    }

    pub fn get(&self, label: &str) -> Option<&SemanticInstruction> {
        self.entries.get(label)
    }

    pub fn labels(&self) -> impl Iterator<Item = &str> {
        self.entries.keys().map(String::as_str)
    }

    pub fn iter(&self) -> impl Iterator<Item = &SemanticInstruction> {
        self.entries.values()
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Errors on the first symbol the table does not know.
    pub fn check_symbols(&self, table: &TranslationTable) -> Result<()> {
        for ins in self.iter() {
            table.alphabet().encode(ins.poses())?;
        }
        Ok(())
    }

    fn union(&self, other: &InstructionSet) -> Result<InstructionSet> {
        let mut merged = self.clone();
        for ins in other.iter() {
            merged.insert(ins.clone())?;
        }
        Ok(merged)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ClassificationResult {
    pub label: String,
    pub log_score: f64,
    /// Winning instruction's alignment position per visual element, 0 = NULL.
    pub best_alignment: Vec<usize>,
    pub per_class_scores: BTreeMap<String, f64>,
    /// Every element aligned to NULL for every class, so the label came from
    /// the tie rule alone.
    pub null_dominated: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AlignmentScore {
    pub log_score: f64,
    pub alignment: Vec<usize>,
}

/// Viterbi-style score: each visual element independently takes its most
/// probable position, ties to the smallest (NULL first).
pub fn best_alignment_score(
    sentence: &VisualSentence,
    instruction: &SemanticInstruction,
    table: &TranslationTable,
    options: DecoderOptions,
) -> Result<AlignmentScore> {
    let target = table.alphabet().encode(instruction.poses())?;
    let null = if options.include_null {
        table.null_index()
    } else {
        None
    };
    let positions: Vec<Option<usize>> = std::iter::once(null)
        .chain(target.iter().map(|&r| Some(r)))
        .collect();
    let choices = target.len() + usize::from(null.is_some());
    let log_prior = if options.length_factor {
        -(choices as f64).ln()
    } else {
        0.0
    };

    let mut log_score = 0.0;
    let mut alignment = Vec::with_capacity(sentence.len());
    for &s in sentence.ids() {
        let mut best: Option<(usize, f64)> = None;
        for (i, row) in positions.iter().enumerate() {
            let Some(r) = row else { continue };
            let p = table.floored(*r, s);
            if best.is_none_or(|(_, bp)| p > bp) {
                best = Some((i, p));
            }
        }
        let (i, p) = best.expect("instructions are non-empty");
        alignment.push(i);
        log_score += p.ln() + log_prior;
    }
    Ok(AlignmentScore {
        log_score,
        alignment,
    })
}

/// Highest-scoring label; exact ties go to the lexicographically smallest.
pub fn classify(
    sentence: &VisualSentence,
    set: &InstructionSet,
    table: &TranslationTable,
    options: DecoderOptions,
) -> Result<ClassificationResult> {
    if set.is_empty() {
        return Err(Error::Config("instruction set is empty".into()));
    }
    let mut per_class_scores = BTreeMap::new();
    let mut best: Option<(&str, AlignmentScore)> = None;
    let mut all_null = true;
    for ins in set.iter() {
        let scored = best_alignment_score(sentence, ins, table, options)?;
        all_null &= scored.alignment.iter().all(|&i| i == 0);
        per_class_scores.insert(ins.class_label.clone(), scored.log_score);
        if best
            .as_ref()
            .is_none_or(|(_, b)| scored.log_score > b.log_score)
        {
            best = Some((ins.class_label.as_str(), scored));
        }
    }
    let (label, scored) = best.expect("set is non-empty");
    let null_dominated = all_null && options.include_null && table.has_null_row();
    if null_dominated {
        log::warn!("NULL wins every position for every class; `{label}` chosen by tie rule");
    }
    Ok(ClassificationResult {
        label: label.to_string(),
        log_score: scored.log_score,
        best_alignment: scored.alignment,
        per_class_scores,
        null_dominated,
    })
}

/// Composite activity: `a` followed by `b`.
pub fn compose_instruction(
    a: &SemanticInstruction,
    b: &SemanticInstruction,
    label: impl Into<String>,
) -> Result<SemanticInstruction> {
    let poses = a.poses().iter().chain(b.poses()).cloned().collect();
    SemanticInstruction::new(label, poses, a.elementary_count + b.elementary_count)
}

/// Classifies over trained plus novel instructions. Novel instructions may
/// only use symbols the table was trained with.
pub fn classify_zero_shot(
    sentence: &VisualSentence,
    trained: &InstructionSet,
    novel: &InstructionSet,
    table: &TranslationTable,
    options: DecoderOptions,
) -> Result<ClassificationResult> {
    novel.check_symbols(table)?;
    let all = trained.union(novel)?;
    classify(sentence, &all, table, options)
}
