//! The visual-to-semantic translation model.
//!
//! A visual sentence `s` (quantized key frames) is generated from a semantic
//! sentence `t` one element at a time: each visual element picks a target
//! position uniformly (position 0 is the NULL pose, when enabled) and is then
//! drawn from that pose's row of the translation table. Training maximizes
//! the corpus likelihood with EM; the lexicon is the per-pose argmax of the
//! learned table.

use std::collections::HashMap;
use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::codebook::VisualSentence;
use crate::error::{Error, Result};

/// Floor applied to table lookups in posterior and decoding computations.
pub const PROB_FLOOR: f64 = 1e-12;
/// Default cap on the number of alignments [`likelihood_enumerated`] visits.
pub const DEFAULT_ENUMERATION_CAP: u128 = 1_000_000;
pub const NULL_SYMBOL: &str = "NULL";

/// Orders symbols like `T2` before `T10`: by non-numeric prefix, then by the
/// numeric suffix, then lexically.
pub fn natural_cmp(a: &str, b: &str) -> std::cmp::Ordering {
    fn split(s: &str) -> (&str, Option<u64>) {
        let cut = s.trim_end_matches(|c: char| c.is_ascii_digit()).len();
        let (head, digits) = s.split_at(cut);
        (head, digits.parse().ok())
    }
    let (ha, na) = split(a);
    let (hb, nb) = split(b);
    ha.cmp(hb).then(na.cmp(&nb)).then(a.cmp(b))
}

/// The ordered set of semantic pose symbols.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct SemanticAlphabet {
    symbols: Vec<String>,
    index: HashMap<String, usize>,
}

impl SemanticAlphabet {
    /// Deduplicates and sorts the symbols in natural order.
    pub fn from_symbols<I, S>(symbols: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        let mut symbols: Vec<String> = symbols.into_iter().map(Into::into).collect();
        symbols.sort_by(|a, b| natural_cmp(a, b));
        symbols.dedup();
        SemanticAlphabet::ordered(symbols)
    }

    fn ordered(symbols: Vec<String>) -> Self {
        let index = symbols
            .iter()
            .enumerate()
            .map(|(i, s)| (s.clone(), i))
            .collect();
        SemanticAlphabet { symbols, index }
    }

    pub fn symbols(&self) -> &[String] {
        &self.symbols
    }

    pub fn len(&self) -> usize {
        self.symbols.len()
    }

    pub fn is_empty(&self) -> bool {
        self.symbols.is_empty()
    }

    pub fn index_of(&self, symbol: &str) -> Option<usize> {
        self.index.get(symbol).copied()
    }

    pub fn encode(&self, poses: &[String]) -> Result<Vec<usize>> {
        poses
            .iter()
            .map(|p| self.index_of(p).ok_or_else(|| Error::UnknownSymbol(p.clone())))
            .collect()
    }
}

/// The semantic pose sequence of one action class.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SemanticInstruction {
    pub class_label: String,
    poses: Vec<String>,
    /// Number of elementary actions the instruction describes.
    pub elementary_count: usize,
}

impl SemanticInstruction {
    pub fn new(
        class_label: impl Into<String>,
        poses: Vec<String>,
        elementary_count: usize,
    ) -> Result<Self> {
        let class_label = class_label.into();
        if poses.is_empty() {
            return Err(Error::Schema(format!(
                "instruction `{class_label}` has no semantic poses"
            )));
        }
        Ok(SemanticInstruction {
            class_label,
            poses,
            elementary_count,
        })
    }

    /// One elementary action per transition between consecutive poses.
    pub fn from_poses<I, S>(class_label: impl Into<String>, poses: I) -> Result<Self>
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        let poses: Vec<String> = poses.into_iter().map(Into::into).collect();
        let g = poses.len().saturating_sub(1).max(1);
        SemanticInstruction::new(class_label, poses, g)
    }

    pub fn poses(&self) -> &[String] {
        &self.poses
    }

    pub fn len(&self) -> usize {
        self.poses.len()
    }

    pub fn is_empty(&self) -> bool {
        self.poses.is_empty()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SentencePair {
    pub source: VisualSentence,
    pub target: SemanticInstruction,
    pub instance_id: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ParallelCorpus {
    pairs: Vec<SentencePair>,
    targets: Vec<Vec<usize>>,
    visual_k: usize,
    alphabet: SemanticAlphabet,
}

impl ParallelCorpus {
    pub fn new(
        pairs: Vec<SentencePair>,
        visual_k: usize,
        alphabet: SemanticAlphabet,
    ) -> Result<Self> {
        if pairs.is_empty() {
            return Err(Error::Schema("parallel corpus has no pairs".into()));
        }
        if visual_k == 0 {
            return Err(Error::Config("visual alphabet size must be positive".into()));
        }
        let mut targets = Vec::with_capacity(pairs.len());
        for pair in &pairs {
            if let Some(&bad) = pair.source.ids().iter().find(|&&id| id >= visual_k) {
                return Err(Error::Schema(format!(
                    "instance {} uses visual id {bad} outside [0, {visual_k})",
                    pair.instance_id
                )));
            }
            targets.push(alphabet.encode(pair.target.poses())?);
        }
        Ok(ParallelCorpus {
            pairs,
            targets,
            visual_k,
            alphabet,
        })
    }

    /// Corpus whose alphabet is every symbol used by its pairs.
    pub fn from_pairs(pairs: Vec<SentencePair>, visual_k: usize) -> Result<Self> {
        let alphabet = SemanticAlphabet::from_symbols(
            pairs
                .iter()
                .flat_map(|p| p.target.poses().iter().cloned()),
        );
        ParallelCorpus::new(pairs, visual_k, alphabet)
    }

    pub fn pairs(&self) -> &[SentencePair] {
        &self.pairs
    }

    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }

    pub fn visual_k(&self) -> usize {
        self.visual_k
    }

    pub fn alphabet(&self) -> &SemanticAlphabet {
        &self.alphabet
    }

    /// Source ids and encoded target rows of pair `n`.
    pub fn encoded(&self, n: usize) -> (&[usize], &[usize]) {
        (self.pairs[n].source.ids(), &self.targets[n])
    }
}

/// Conditional distribution of visual candidates given each semantic pose.
/// Rows follow the alphabet order, with the NULL row last when enabled.
#[derive(Debug, Clone, PartialEq)]
pub struct TranslationTable {
    alphabet: SemanticAlphabet,
    null_row: bool,
    k: usize,
    probs: Vec<Vec<f64>>,
}

#[derive(Serialize, Deserialize)]
struct TableFile {
    semantic: Vec<String>,
    null_row: bool,
    k: usize,
    probs: Vec<Vec<f64>>,
}

/// Row sums of a loaded table must be within this of one.
const LOAD_ROW_TOLERANCE: f64 = 1e-9;

impl TranslationTable {
    /// Every entry `1/k`, NULL row included.
    pub fn init_uniform(visual_k: usize, alphabet: &SemanticAlphabet, null_row: bool) -> Self {
        let rows = alphabet.len() + usize::from(null_row);
        let value = 1.0 / visual_k as f64;
        TranslationTable {
            alphabet: alphabet.clone(),
            null_row,
            k: visual_k,
            probs: vec![vec![value; visual_k]; rows],
        }
    }

    /// Builds a table from explicit rows, checking shape and normalization.
    pub fn from_rows(
        alphabet: &SemanticAlphabet,
        null_row: bool,
        probs: Vec<Vec<f64>>,
    ) -> Result<Self> {
        let k = probs.first().map_or(0, Vec::len);
        let table = TranslationTable {
            alphabet: alphabet.clone(),
            null_row,
            k,
            probs,
        };
        table.validate(LOAD_ROW_TOLERANCE)?;
        Ok(table)
    }

    pub fn validate(&self, tolerance: f64) -> Result<()> {
        let rows = self.alphabet.len() + usize::from(self.null_row);
        if self.k == 0 {
            return Err(Error::Schema("translation table has k = 0".into()));
        }
        if self.probs.len() != rows {
            return Err(Error::Schema(format!(
                "translation table has {} rows, expected {rows}",
                self.probs.len()
            )));
        }
        for (q, row) in self.probs.iter().enumerate() {
            if row.len() != self.k {
                return Err(Error::Schema(format!(
                    "row {q} has {} entries, expected {}",
                    row.len(),
                    self.k
                )));
            }
            if row.iter().any(|v| !(v.is_finite() && *v >= 0.0)) {
                return Err(Error::Schema(format!("row {q} has an invalid probability")));
            }
            let sum: f64 = row.iter().sum();
            if (sum - 1.0).abs() > tolerance {
                return Err(Error::Schema(format!("row {q} sums to {sum}")));
            }
        }
        Ok(())
    }

    pub fn alphabet(&self) -> &SemanticAlphabet {
        &self.alphabet
    }

    pub fn has_null_row(&self) -> bool {
        self.null_row
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn rows(&self) -> &[Vec<f64>] {
        &self.probs
    }

    pub fn null_index(&self) -> Option<usize> {
        self.null_row.then_some(self.alphabet.len())
    }

    pub fn row_of(&self, symbol: &str) -> Option<usize> {
        self.alphabet.index_of(symbol)
    }

    pub fn row_label(&self, row: usize) -> &str {
        self.alphabet
            .symbols()
            .get(row)
            .map_or(NULL_SYMBOL, String::as_str)
    }

    pub fn prob(&self, row: usize, visual: usize) -> f64 {
        self.probs[row][visual]
    }

    /// Floored lookup used wherever a zero would break a ratio or logarithm.
    pub fn floored(&self, row: usize, visual: usize) -> f64 {
        self.probs[row][visual].max(PROB_FLOOR)
    }

    /// Table rows for alignment positions `0..=L`: position 0 is NULL (absent
    /// when the NULL row is disabled), position `i` is `target[i - 1]`.
    pub fn positions(&self, target: &[usize]) -> Vec<Option<usize>> {
        std::iter::once(self.null_index())
            .chain(target.iter().map(|&r| Some(r)))
            .collect()
    }

    /// Number of positions each visual element may align to.
    pub fn alignment_choices(&self, target_len: usize) -> usize {
        target_len + usize::from(self.null_row)
    }

    fn check_alphabet(&self, corpus: &ParallelCorpus) -> Result<()> {
        if self.alphabet.symbols() != corpus.alphabet().symbols() || self.k != corpus.visual_k() {
            return Err(Error::Schema(
                "translation table and corpus use different alphabets".into(),
            ));
        }
        Ok(())
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        crate::io::write_json(path, &self.to_file())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let file: TableFile = crate::io::read_json(path)?;
        TranslationTable::from_file(file)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&self.to_file()).expect("table serializes")
    }

    fn to_file(&self) -> TableFile {
        TableFile {
            semantic: self.alphabet.symbols().to_vec(),
            null_row: self.null_row,
            k: self.k,
            probs: self.probs.clone(),
        }
    }

    fn from_file(file: TableFile) -> Result<Self> {
        let alphabet = SemanticAlphabet::ordered(file.semantic);
        if alphabet.index.len() != alphabet.symbols.len() {
            return Err(Error::Schema("duplicate semantic symbols in table".into()));
        }
        let table = TranslationTable {
            alphabet,
            null_row: file.null_row,
            k: file.k,
            probs: file.probs,
        };
        table.validate(LOAD_ROW_TOLERANCE)?;
        Ok(table)
    }
}

/// Alignment posteriors `γ[j][i]` of one pair, over positions `i = 0..=L`.
/// Column 0 is the NULL position and stays zero when NULL is disabled.
pub fn pair_posteriors(source: &[usize], target: &[usize], table: &TranslationTable) -> Vec<Vec<f64>> {
    let positions = table.positions(target);
    source
        .iter()
        .map(|&s| {
            let weights: Vec<f64> = positions
                .iter()
                .map(|row| row.map_or(0.0, |r| table.floored(r, s)))
                .collect();
            let total: f64 = weights.iter().sum();
            weights.into_iter().map(|w| w / total).collect()
        })
        .collect()
}

/// Expected co-occurrence counts, one row per table row.
pub type CountTable = Vec<Vec<f64>>;

pub fn zero_counts(table: &TranslationTable) -> CountTable {
    vec![vec![0.0; table.k()]; table.rows().len()]
}

/// Adds one pair's expected counts into `counts`.
pub fn accumulate_counts(
    source: &[usize],
    target: &[usize],
    table: &TranslationTable,
    counts: &mut CountTable,
) {
    let positions = table.positions(target);
    for (&s, gamma) in source.iter().zip(pair_posteriors(source, target, table)) {
        for (row, g) in positions.iter().zip(gamma) {
            if let Some(r) = row {
                counts[*r][s] += g;
            }
        }
    }
}

pub fn expected_counts(source: &[usize], target: &[usize], table: &TranslationTable) -> CountTable {
    let mut counts = zero_counts(table);
    accumulate_counts(source, target, table, &mut counts);
    counts
}

/// Normalizes count rows into a table; rows without mass become uniform.
pub fn normalize_counts(counts: CountTable, template: &TranslationTable) -> TranslationTable {
    let k = template.k();
    let probs = counts
        .into_iter()
        .map(|row| {
            let total: f64 = row.iter().sum();
            if total > 0.0 {
                row.into_iter().map(|c| c / total).collect()
            } else {
                vec![1.0 / k as f64; k]
            }
        })
        .collect();
    TranslationTable {
        alphabet: template.alphabet.clone(),
        null_row: template.null_row,
        k,
        probs,
    }
}

/// One EM update. Counts are reduced in pair order.
pub fn em_iteration(corpus: &ParallelCorpus, table: &TranslationTable) -> Result<TranslationTable> {
    table.check_alphabet(corpus)?;
    let mut counts = zero_counts(table);
    for n in 0..corpus.len() {
        let (source, target) = corpus.encoded(n);
        accumulate_counts(source, target, table, &mut counts);
    }
    Ok(normalize_counts(counts, table))
}

/// `P(s | t)` with the alignment sum factored per visual element.
pub fn likelihood_factored(source: &[usize], target: &[usize], table: &TranslationTable) -> f64 {
    let positions = table.positions(target);
    let prior = 1.0 / table.alignment_choices(target.len()) as f64;
    source
        .iter()
        .map(|&s| {
            let sum: f64 = positions
                .iter()
                .flatten()
                .map(|&r| table.prob(r, s))
                .sum();
            prior * sum
        })
        .product()
}

/// Log of [`likelihood_factored`], accumulated per element so long sentences
/// do not underflow.
pub fn log_likelihood_pair(source: &[usize], target: &[usize], table: &TranslationTable) -> f64 {
    let positions = table.positions(target);
    let log_prior = -(table.alignment_choices(target.len()) as f64).ln();
    source
        .iter()
        .map(|&s| {
            let sum: f64 = positions
                .iter()
                .flatten()
                .map(|&r| table.prob(r, s))
                .sum();
            sum.ln() + log_prior
        })
        .sum()
}

pub fn corpus_log_likelihood(corpus: &ParallelCorpus, table: &TranslationTable) -> f64 {
    (0..corpus.len())
        .map(|n| {
            let (source, target) = corpus.encoded(n);
            log_likelihood_pair(source, target, table)
        })
        .sum()
}

/// `P(s | t)` as an explicit sum over every alignment vector.
pub fn likelihood_enumerated(
    source: &[usize],
    target: &[usize],
    table: &TranslationTable,
    cap: u128,
) -> Result<f64> {
    let positions: Vec<usize> = table.positions(target).into_iter().flatten().collect();
    let choices = positions.len();
    let size = (choices as u128)
        .checked_pow(source.len() as u32)
        .unwrap_or(u128::MAX);
    if size > cap {
        return Err(Error::EnumerationTooLarge { size, cap });
    }
    let prior = 1.0 / choices as f64;
    let mut alignment = vec![0usize; source.len()];
    let mut total = 0.0;
    loop {
        let mut term = 1.0;
        for (&s, &a) in source.iter().zip(&alignment) {
            term *= prior * table.prob(positions[a], s);
        }
        total += term;

        // Odometer increment over {0..choices}^M.
        let mut j = 0;
        loop {
            if j == alignment.len() {
                return Ok(total);
            }
            alignment[j] += 1;
            if alignment[j] < choices {
                break;
            }
            alignment[j] = 0;
            j += 1;
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EmOptions {
    pub max_iters: usize,
    /// Stop once the relative log-likelihood gain falls below this.
    pub tol: f64,
}

impl Default for EmOptions {
    fn default() -> Self {
        EmOptions {
            max_iters: 100,
            tol: 1e-6,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainOutcome {
    pub table: TranslationTable,
    /// Corpus log-likelihood of the initial table and after every iteration.
    pub trace: Vec<f64>,
    pub converged: bool,
}

impl TrainOutcome {
    pub fn iterations(&self) -> usize {
        self.trace.len() - 1
    }

    pub fn trace_csv(&self) -> String {
        let mut out = String::from("iteration,log_likelihood\n");
        for (i, ll) in self.trace.iter().enumerate() {
            let _ = writeln!(out, "{i},{ll}");
        }
        out
    }
}

/// EM from the uniform table.
pub fn train(corpus: &ParallelCorpus, null_row: bool, options: EmOptions) -> Result<TrainOutcome> {
    let init = TranslationTable::init_uniform(corpus.visual_k(), corpus.alphabet(), null_row);
    train_from(corpus, init, options)
}

/// EM from an arbitrary valid starting table.
pub fn train_from(
    corpus: &ParallelCorpus,
    init: TranslationTable,
    options: EmOptions,
) -> Result<TrainOutcome> {
    init.check_alphabet(corpus)?;
    let mut table = init;
    let mut trace = vec![corpus_log_likelihood(corpus, &table)];
    let mut converged = false;
    for _ in 0..options.max_iters {
        table = em_iteration(corpus, &table)?;
        let ll = corpus_log_likelihood(corpus, &table);
        let prev = *trace.last().expect("trace starts non-empty");
        trace.push(ll);
        let gain = ll - prev;
        let rel = if prev != 0.0 { gain / prev.abs() } else { gain.abs() };
        if rel < options.tol {
            converged = true;
            break;
        }
    }
    Ok(TrainOutcome {
        table,
        trace,
        converged,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LexiconEntry {
    pub semantic_pose: String,
    pub visual_pose_id: usize,
    pub probability: f64,
}

/// The most probable visual candidate of every semantic pose.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PoseLexicon {
    pub entries: Vec<LexiconEntry>,
}

impl PoseLexicon {
    pub fn get(&self, symbol: &str) -> Option<&LexiconEntry> {
        self.entries.iter().find(|e| e.semantic_pose == symbol)
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("semantic_pose,visual_pose_id,probability\n");
        for e in &self.entries {
            let _ = writeln!(out, "{},{},{}", e.semantic_pose, e.visual_pose_id, e.probability);
        }
        out
    }
}

/// Argmax of each non-NULL row, ties to the smallest visual index.
pub fn extract_lexicon(table: &TranslationTable) -> PoseLexicon {
    let entries = table
        .alphabet()
        .symbols()
        .iter()
        .enumerate()
        .map(|(q, symbol)| {
            let row = &table.rows()[q];
            let mut best = 0;
            for (p, &v) in row.iter().enumerate() {
                if v > row[best] {
                    best = p;
                }
            }
            LexiconEntry {
                semantic_pose: symbol.clone(),
                visual_pose_id: best,
                probability: row[best],
            }
        })
        .collect();
    PoseLexicon { entries }
}
