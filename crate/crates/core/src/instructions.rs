//! Instruction files: `{"classes": {"<label>": ["T1", "T2", ...], ...}}`.

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::decoder::InstructionSet;
use crate::error::Result;
use crate::lexicon::{SemanticAlphabet, SemanticInstruction};

#[derive(Debug, Default, Serialize, Deserialize)]
struct InstructionFile {
    classes: BTreeMap<String, Vec<String>>,
}

pub fn load_instructions(path: impl AsRef<Path>) -> Result<InstructionSet> {
    let file: InstructionFile = crate::io::read_json(path)?;
    InstructionSet::from_instructions(
        file.classes
            .into_iter()
            .map(|(label, poses)| SemanticInstruction::from_poses(label, poses))
            .collect::<Result<Vec<_>>>()?,
    )
}

pub fn write_instructions(path: impl AsRef<Path>, instructions: &[SemanticInstruction]) -> Result<()> {
    let file = InstructionFile {
        classes: instructions
            .iter()
            .map(|i| (i.class_label.clone(), i.poses().to_vec()))
            .collect(),
    };
    crate::io::write_json(path, &file)
}

/// Every symbol used by the set, in natural order.
pub fn alphabet_of(set: &InstructionSet) -> SemanticAlphabet {
    SemanticAlphabet::from_symbols(set.iter().flat_map(|i| i.poses().iter().cloned()))
}
