mod common;

use common::*;
use poselex::decoder::{best_alignment_score, classify, classify_zero_shot};
use poselex::lexicon::SemanticInstruction;
use poselex::{DecoderOptions, InstructionSet, TranslationTable, VisualSentence};
use proptest::prelude::*;
use rand::seq::SliceRandom;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

const FLOOR: f64 = 1e-12;

struct Case {
    table: TranslationTable,
    sentence: Vec<usize>,
    instructions: Vec<SemanticInstruction>,
    options: DecoderOptions,
}

/// Tables with some exact zeros so the floor comes into play.
fn case(seed: u64, max_m: usize) -> Case {
    let mut r = rng(seed);
    let size = r.random_range(1..=4);
    let k = r.random_range(1..=5);
    let null_row = r.random_bool(0.7);
    let mut table = random_table(&mut r, &alphabet(size), k, null_row);
    if r.random_bool(0.5) {
        let mut rows = table.rows().to_vec();
        let row = r.random_range(0..rows.len());
        let col = r.random_range(0..k);
        let moved = rows[row][col];
        rows[row][col] = 0.0;
        rows[row][(col + 1) % k] += moved;
        table = TranslationTable::from_rows(&alphabet(size), null_row, rows).unwrap();
    }
    let sentence = (0..r.random_range(1..=max_m)).map(|_| r.random_range(0..k)).collect();
    let instructions = (0..r.random_range(1..=4))
        .map(|c| random_instruction(&mut r, size, &format!("class{c}")))
        .collect();
    let options = DecoderOptions {
        include_null: r.random_bool(0.7),
        length_factor: r.random_bool(0.8),
    };
    Case {
        table,
        sentence,
        instructions,
        options,
    }
}

fn random_instruction(r: &mut ChaCha8Rng, size: usize, label: &str) -> SemanticInstruction {
    let poses: Vec<String> = (0..r.random_range(1..=3)).map(|_| symbol(r.random_range(0..size))).collect();
    SemanticInstruction::from_poses(label, poses).unwrap()
}

/// Alignment rows in decoder position order: NULL (when used) then targets.
fn positions(case: &Case, ins: &SemanticInstruction) -> Vec<Option<usize>> {
    let null = if case.options.include_null { case.table.null_index() } else { None };
    std::iter::once(null)
        .chain(ins.poses().iter().map(|p| case.table.row_of(p)))
        .collect()
}

fn alignment_score(case: &Case, ins: &SemanticInstruction, alignment: &[usize]) -> f64 {
    let rows = positions(case, ins);
    let choices = rows.iter().flatten().count() as f64;
    let prior = if case.options.length_factor { -choices.ln() } else { 0.0 };
    case.sentence
        .iter()
        .zip(alignment)
        .map(|(&s, &i)| case.table.rows()[rows[i].unwrap()][s].max(FLOOR).ln() + prior)
        .sum()
}

/// Best score over every alignment vector.
fn brute_force_best(case: &Case, ins: &SemanticInstruction) -> f64 {
    let rows = positions(case, ins);
    let usable: Vec<usize> = (0..rows.len()).filter(|&i| rows[i].is_some()).collect();
    let mut best = f64::NEG_INFINITY;
    for_each_alignment(case.sentence.len(), usable.len(), |a| {
        let alignment: Vec<usize> = a.iter().map(|&i| usable[i]).collect();
        best = best.max(alignment_score(case, ins, &alignment));
    });
    best
}

fn visual(ids: &[usize]) -> VisualSentence {
    VisualSentence::new(ids.to_vec()).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(300))]

    #[test]
    fn best_score_equals_exhaustive_search(seed in any::<u64>()) {
        let case = case(seed, 5);
        for ins in &case.instructions {
            let scored = best_alignment_score(&visual(&case.sentence), ins, &case.table, case.options).unwrap();
            let oracle = brute_force_best(&case, ins);
            prop_assert!((scored.log_score - oracle).abs() <= 1e-9 * oracle.abs().max(1.0));
            prop_assert!((alignment_score(&case, ins, &scored.alignment) - scored.log_score).abs() < 1e-9);
        }
    }

    #[test]
    fn no_single_reassignment_improves_the_score(seed in any::<u64>()) {
        let case = case(seed, 8);
        for ins in &case.instructions {
            let scored = best_alignment_score(&visual(&case.sentence), ins, &case.table, case.options).unwrap();
            let rows = positions(&case, ins);
            for j in 0..case.sentence.len() {
                for i in (0..rows.len()).filter(|&i| rows[i].is_some()) {
                    let mut alt = scored.alignment.clone();
                    alt[j] = i;
                    prop_assert!(alignment_score(&case, ins, &alt) <= scored.log_score + 1e-12);
                }
            }
        }
    }

    #[test]
    fn score_ignores_element_order(seed in any::<u64>()) {
        let case = case(seed, 8);
        let mut shuffled = case.sentence.clone();
        shuffled.shuffle(&mut rng(seed ^ 0x5eed));
        for ins in &case.instructions {
            let a = best_alignment_score(&visual(&case.sentence), ins, &case.table, case.options).unwrap();
            let b = best_alignment_score(&visual(&shuffled), ins, &case.table, case.options).unwrap();
            prop_assert!((a.log_score - b.log_score).abs() <= 1e-12 * a.log_score.abs().max(1.0));
        }
    }

    #[test]
    fn winner_attains_the_maximum_and_survives_a_common_factor(seed in any::<u64>(), shift in -50.0..50.0f64) {
        let case = case(seed, 8);
        let set = InstructionSet::from_instructions(case.instructions.clone()).unwrap();
        let result = classify(&visual(&case.sentence), &set, &case.table, case.options).unwrap();
        prop_assert_eq!(result.best_alignment.len(), case.sentence.len());
        let max = result.per_class_scores.values().copied().fold(f64::NEG_INFINITY, f64::max);
        prop_assert_eq!(result.per_class_scores[&result.label], max);
        prop_assert_eq!(result.log_score, max);
        // Scaling every linear-domain score by e^shift moves all log scores
        // together; the first maximum in label order must not change.
        let shifted = result
            .per_class_scores
            .iter()
            .map(|(label, s)| (label, s + shift))
            .fold(None::<(&String, f64)>, |best, (l, s)| match best {
                Some((_, b)) if b >= s => best,
                _ => Some((l, s)),
            })
            .unwrap();
        prop_assert_eq!(shifted.0, &result.label);
    }

    #[test]
    fn zero_shot_without_novel_equals_classify(seed in any::<u64>()) {
        let case = case(seed, 8);
        let set = InstructionSet::from_instructions(case.instructions.clone()).unwrap();
        let sentence = visual(&case.sentence);
        let plain = classify(&sentence, &set, &case.table, case.options).unwrap();
        let zero_shot =
            classify_zero_shot(&sentence, &set, &InstructionSet::new(), &case.table, case.options).unwrap();
        prop_assert_eq!(plain, zero_shot);
    }
}
