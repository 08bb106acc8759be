//! Independent reference implementations shared by the integration tests.
//! None of these call into the EM or key-frame code under test.

#![allow(dead_code)]

use poselex::codebook::VisualSentence;
use poselex::lexicon::{ParallelCorpus, SemanticAlphabet, SemanticInstruction, SentencePair};
use poselex::TranslationTable;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Row index of each alignment position: NULL (if any) first, then targets.
fn oracle_positions(table: &TranslationTable, target: &[usize]) -> Vec<usize> {
    let mut rows = Vec::new();
    if let Some(null) = table.null_index() {
        rows.push(null);
    }
    rows.extend_from_slice(target);
    rows
}

/// Calls `visit` with every alignment vector in `{0..choices}^m`.
pub fn for_each_alignment(m: usize, choices: usize, mut visit: impl FnMut(&[usize])) {
    let mut a = vec![0usize; m];
    loop {
        visit(&a);
        let mut j = 0;
        loop {
            if j == m {
                return;
            }
            a[j] += 1;
            if a[j] < choices {
                break;
            }
            a[j] = 0;
            j += 1;
        }
    }
}

/// `P(s | t)` summed over explicit alignment vectors.
pub fn brute_force_likelihood(source: &[usize], target: &[usize], table: &TranslationTable) -> f64 {
    let rows = oracle_positions(table, target);
    let prior = 1.0 / rows.len() as f64;
    let mut total = 0.0;
    for_each_alignment(source.len(), rows.len(), |a| {
        let mut p = 1.0;
        for (&s, &i) in source.iter().zip(a) {
            p *= prior * table.rows()[rows[i]][s];
        }
        total += p;
    });
    total
}

/// One EM step computed by enumerating whole alignment vectors and weighting
/// each by its joint probability, then normalizing rows.
pub fn brute_force_em_step(corpus: &ParallelCorpus, table: &TranslationTable) -> Vec<Vec<f64>> {
    let k = table.k();
    let mut counts = vec![vec![0.0; k]; table.rows().len()];
    for n in 0..corpus.len() {
        let (source, target) = corpus.encoded(n);
        let rows = oracle_positions(table, target);
        let mut weighted: Vec<(Vec<usize>, f64)> = Vec::new();
        let mut z = 0.0;
        for_each_alignment(source.len(), rows.len(), |a| {
            let w: f64 = source
                .iter()
                .zip(a)
                .map(|(&s, &i)| table.rows()[rows[i]][s])
                .product();
            z += w;
            weighted.push((a.to_vec(), w));
        });
        for (a, w) in weighted {
            for (&s, &i) in source.iter().zip(&a) {
                counts[rows[i]][s] += w / z;
            }
        }
    }
    counts
        .into_iter()
        .map(|row| {
            let total: f64 = row.iter().sum();
            if total > 0.0 {
                row.into_iter().map(|c| c / total).collect()
            } else {
                vec![1.0 / k as f64; k]
            }
        })
        .collect()
}

/// Runs [`brute_force_em_step`] `iters` times from the uniform table.
pub fn brute_force_em(corpus: &ParallelCorpus, null_row: bool, iters: usize) -> Vec<Vec<f64>> {
    let mut table = TranslationTable::init_uniform(corpus.visual_k(), corpus.alphabet(), null_row);
    for _ in 0..iters {
        let rows = brute_force_em_step(corpus, &table);
        table = TranslationTable::from_rows(corpus.alphabet(), null_row, rows).unwrap();
    }
    table.rows().to_vec()
}

/// Strict interior extrema by direct comparison with both neighbours.
pub fn brute_force_extrema(values: &[f64]) -> Vec<usize> {
    (1..values.len().saturating_sub(1))
        .filter(|&t| {
            let (a, b, c) = (values[t - 1], values[t], values[t + 1]);
            (b > a && b > c) || (b < a && b < c)
        })
        .collect()
}

pub fn symbol(q: usize) -> String {
    format!("T{}", q + 1)
}

pub fn alphabet(size: usize) -> SemanticAlphabet {
    SemanticAlphabet::from_symbols((0..size).map(symbol))
}

pub fn pair(source: &[usize], target: &[&str], id: &str) -> SentencePair {
    SentencePair {
        source: VisualSentence::new(source.to_vec()).unwrap(),
        target: SemanticInstruction::from_poses(format!("c{id}"), target.iter().copied()).unwrap(),
        instance_id: id.to_string(),
    }
}

/// The two-pair corpus `[0]↔[T1]`, `[0,1]↔[T1,T2]` over `k = 2`.
pub fn toy_corpus() -> ParallelCorpus {
    ParallelCorpus::from_pairs(
        vec![pair(&[0], &["T1"], "0"), pair(&[0, 1], &["T1", "T2"], "1")],
        2,
    )
    .unwrap()
}

/// A probability row with every entry at least `1e-3` before normalizing.
pub fn random_row(rng: &mut ChaCha8Rng, k: usize) -> Vec<f64> {
    let raw: Vec<f64> = (0..k).map(|_| rng.random::<f64>() + 1e-3).collect();
    let total: f64 = raw.iter().sum();
    raw.into_iter().map(|v| v / total).collect()
}

pub fn random_table(
    rng: &mut ChaCha8Rng,
    alphabet: &SemanticAlphabet,
    k: usize,
    null_row: bool,
) -> TranslationTable {
    let rows = (0..alphabet.len() + usize::from(null_row))
        .map(|_| random_row(rng, k))
        .collect();
    TranslationTable::from_rows(alphabet, null_row, rows).unwrap()
}

/// Random corpus with up to `max_pairs` pairs over `alphabet_size` symbols.
pub fn random_corpus(
    rng: &mut ChaCha8Rng,
    max_pairs: usize,
    alphabet_size: usize,
    k: usize,
    max_len: usize,
) -> ParallelCorpus {
    let n = rng.random_range(1..=max_pairs);
    let mut pairs = Vec::with_capacity(n.max(1));
    for p in 0..n {
        let m = rng.random_range(1..=max_len);
        let l = rng.random_range(1..=max_len);
        let source: Vec<usize> = (0..m).map(|_| rng.random_range(0..k)).collect();
        let target: Vec<String> = (0..l)
            .map(|_| symbol(rng.random_range(0..alphabet_size)))
            .collect();
        pairs.push(SentencePair {
            source: VisualSentence::new(source).unwrap(),
            target: SemanticInstruction::from_poses(format!("c{p}"), target).unwrap(),
            instance_id: p.to_string(),
        });
    }
    ParallelCorpus::new(pairs, k, alphabet(alphabet_size)).unwrap()
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Largest absolute difference between two tables of equal shape.
pub fn max_abs_diff(a: &[Vec<f64>], b: &[Vec<f64>]) -> f64 {
    a.iter()
        .zip(b)
        .flat_map(|(x, y)| x.iter().zip(y).map(|(u, v)| (u - v).abs()))
        .fold(0.0, f64::max)
}
