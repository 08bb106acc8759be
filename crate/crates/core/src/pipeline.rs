//! End-to-end pipeline: skeleton → key frames → codebook → parallel corpus →
//! EM, plus cross-subject evaluation, codebook-size sweeps and artifact I/O.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use log::info;
use serde::{Deserialize, Serialize};

use crate::codebook::{self, squared_distance, VisualCodebook, VisualSentence};
use crate::config::{CodebookSize, PipelineConfig, SplitSpec};
use crate::decoder::{self, ClassificationResult, InstructionSet};
use crate::error::{Error, Result};
use crate::instructions::{alphabet_of, load_instructions};
use crate::io::{ensure_dir, write_atomic, write_json};
use crate::keyframe::{self, EigenProfile, KeyFrameSet};
use crate::lexicon::{self, natural_cmp, ParallelCorpus, PoseLexicon, SentencePair, TranslationTable};
use crate::skeleton::{self, FrameFeature, SkeletonSequence};
use crate::synth::{self, GroundTruth};

pub const CODEBOOK_FILE: &str = "codebook.json";
pub const TABLE_FILE: &str = "translation_table.json";
pub const LEXICON_FILE: &str = "lexicon.csv";
pub const TRACE_FILE: &str = "trace.csv";
pub const REPORT_FILE: &str = "eval_report.json";
pub const CONFUSION_FILE: &str = "confusion.csv";
pub const PREDICTIONS_FILE: &str = "predictions.jsonl";
pub const CLASSIFICATION_FILE: &str = "classification.jsonl";
pub const SWEEP_FILE: &str = "sweep_k.csv";

/// A sequence after normalization, feature extraction and key-frame detection.
#[derive(Debug, Clone)]
pub struct PreparedInstance {
    pub instance_id: String,
    pub subject: String,
    pub label: Option<String>,
    pub features: Vec<FrameFeature>,
    pub profile: EigenProfile,
    pub keyframes: KeyFrameSet,
}

pub fn prepare(seq: &SkeletonSequence, instance_id: String, cfg: &PipelineConfig) -> Result<PreparedInstance> {
    let norm = skeleton::normalize(seq, cfg.root_joint, cfg.scale_joints)?;
    let features = skeleton::frame_features(&norm, cfg.feature_mode, cfg.weights)?;
    let profile = EigenProfile::compute(&norm, cfg.smoothing_window, cfg.smoothing_sigma)?;
    let keyframes = keyframe::detect_keyframes_or_fallback(&profile);
    Ok(PreparedInstance {
        instance_id,
        subject: seq.subject_id.clone(),
        label: seq.class_label.clone(),
        features,
        profile,
        keyframes,
    })
}

/// Prepares every sequence; instance ids are manifest positions.
pub fn prepare_all(sequences: &[SkeletonSequence], cfg: &PipelineConfig) -> Result<Vec<PreparedInstance>> {
    sequences
        .iter()
        .enumerate()
        .map(|(i, s)| prepare(s, i.to_string(), cfg))
        .collect()
}

#[derive(Debug, Clone)]
pub struct TrainedModel {
    pub codebook: VisualCodebook,
    pub table: TranslationTable,
    pub lexicon: PoseLexicon,
    pub trace: Vec<f64>,
}

impl TrainedModel {
    pub fn quantize(&self, inst: &PreparedInstance) -> Result<VisualSentence> {
        codebook::quantize_sequence(&inst.features, &inst.keyframes, &self.codebook)
    }

    pub fn trace_csv(&self) -> String {
        let mut out = String::from("iteration,log_likelihood\n");
        for (i, ll) in self.trace.iter().enumerate() {
            let _ = writeln!(out, "{i},{ll}");
        }
        out
    }

    pub fn save(&self, dir: impl AsRef<Path>) -> Result<()> {
        let dir = dir.as_ref();
        ensure_dir(dir)?;
        self.codebook.save(dir.join(CODEBOOK_FILE))?;
        self.table.save(dir.join(TABLE_FILE))?;
        write_atomic(dir.join(LEXICON_FILE), self.lexicon.to_csv().as_bytes())?;
        write_atomic(dir.join(TRACE_FILE), self.trace_csv().as_bytes())
    }

    /// Loads the codebook and table; the lexicon is re-derived from the table.
    pub fn load(dir: impl AsRef<Path>) -> Result<Self> {
        let dir = dir.as_ref();
        let codebook = VisualCodebook::load(dir.join(CODEBOOK_FILE))?;
        let table = TranslationTable::load(dir.join(TABLE_FILE))?;
        if table.k() != codebook.k {
            return Err(Error::Schema(format!(
                "table has k={} but codebook has k={}",
                table.k(),
                codebook.k
            )));
        }
        let lexicon = lexicon::extract_lexicon(&table);
        Ok(TrainedModel {
            codebook,
            table,
            lexicon,
            trace: Vec::new(),
        })
    }
}

/// Fits the codebook and translation table on labelled instances.
pub fn train_model(
    cfg: &PipelineConfig,
    instances: &[&PreparedInstance],
    instructions: &InstructionSet,
) -> Result<TrainedModel> {
    if instances.is_empty() {
        return Err(Error::Config("no training instances".into()));
    }
    for inst in instances {
        let label = inst.label.as_deref().ok_or_else(|| {
            Error::Config(format!("training instance {} has no class label", inst.instance_id))
        })?;
        if instructions.get(label).is_none() {
            return Err(Error::Config(format!("no instruction for class `{label}`")));
        }
    }
    let alphabet = alphabet_of(instructions);
    let k = cfg.codebook_size.resolve(alphabet.len());
    if k < alphabet.len() {
        return Err(Error::Config(format!(
            "k = {k} is smaller than the {} semantic poses",
            alphabet.len()
        )));
    }

    let points: Vec<&[f64]> = instances
        .iter()
        .flat_map(|inst| inst.keyframes.indices.iter().map(|&f| inst.features[f].vector.as_slice()))
        .collect();
    let fit = codebook::fit_kmeans_vectors(
        &points,
        k,
        cfg.kmeans_seed,
        cfg.kmeans_max_iters,
        cfg.feature_mode,
    )?;
    info!(
        "k-means: k={k}, {} key frames, {} iterations, inertia {:.6}",
        points.len(),
        fit.iterations,
        fit.inertia()
    );
    let codebook = fit.codebook;

    let pairs = instances
        .iter()
        .map(|inst| {
            let label = inst.label.as_deref().expect("checked above");
            Ok(SentencePair {
                source: codebook::quantize_sequence(&inst.features, &inst.keyframes, &codebook)?,
                target: instructions.get(label).expect("checked above").clone(),
                instance_id: inst.instance_id.clone(),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let corpus = ParallelCorpus::new(pairs, k, alphabet)?;
    let outcome = lexicon::train(&corpus, cfg.null_row, cfg.em)?;
    info!(
        "EM: {} iterations, log-likelihood {:.6}",
        outcome.iterations(),
        outcome.trace.last().copied().unwrap_or(f64::NAN)
    );
    let lexicon = lexicon::extract_lexicon(&outcome.table);
    Ok(TrainedModel {
        codebook,
        table: outcome.table,
        lexicon,
        trace: outcome.trace,
    })
}

/// Divides subjects into (train, test) lists, both in natural order.
pub fn split_subjects(subjects: &[String], split: &SplitSpec) -> Result<(Vec<String>, Vec<String>)> {
    let mut unique: Vec<String> = subjects.iter().cloned().collect::<BTreeSet<_>>().into_iter().collect();
    unique.sort_by(|a, b| natural_cmp(a, b));
    if unique.len() < 2 {
        return Err(Error::Split(format!(
            "cross-subject evaluation needs at least 2 subjects, found {}",
            unique.len()
        )));
    }
    let (train, test): (Vec<String>, Vec<String>) = match split {
        SplitSpec::OddEven => {
            let (odd, even): (Vec<_>, Vec<_>) =
                unique.into_iter().enumerate().partition(|(i, _)| i % 2 == 0);
            (
                odd.into_iter().map(|p| p.1).collect(),
                even.into_iter().map(|p| p.1).collect(),
            )
        }
        SplitSpec::TrainSubjects(listed) => {
            for s in listed {
                if !unique.contains(s) {
                    return Err(Error::Split(format!("unknown training subject `{s}`")));
                }
            }
            unique.into_iter().partition(|s| listed.contains(s))
        }
    };
    if train.is_empty() || test.is_empty() {
        return Err(Error::Split("split leaves no training or no test subjects".into()));
    }
    Ok((train, test))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InstanceReport {
    pub instance: String,
    pub predicted: String,
    #[serde(rename = "true")]
    pub truth: Option<String>,
    pub log_scores: BTreeMap<String, f64>,
    pub alignment: Vec<usize>,
}

impl InstanceReport {
    fn new(inst: &PreparedInstance, result: ClassificationResult) -> Self {
        InstanceReport {
            instance: inst.instance_id.clone(),
            predicted: result.label,
            truth: inst.label.clone(),
            log_scores: result.per_class_scores,
            alignment: result.best_alignment,
        }
    }
}

pub fn reports_jsonl(reports: &[InstanceReport]) -> String {
    let mut out = String::new();
    for r in reports {
        out.push_str(&serde_json::to_string(r).expect("report serializes"));
        out.push('\n');
    }
    out
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub accuracy: f64,
    pub per_class_accuracy: BTreeMap<String, f64>,
    /// Row and column order of `confusion`.
    pub labels: Vec<String>,
    /// `confusion[true][predicted]` instance counts.
    pub confusion: Vec<Vec<usize>>,
    pub lexicon_recovery: Option<f64>,
    pub k: usize,
    pub kmeans_seed: u64,
    pub train_subjects: Vec<String>,
    pub test_subjects: Vec<String>,
    pub test_instances: usize,
}

impl EvalReport {
    pub fn confusion_csv(&self) -> String {
        let mut out = String::from("true\\predicted");
        for l in &self.labels {
            out.push(',');
            out.push_str(&csv_field(l));
        }
        out.push('\n');
        for (l, row) in self.labels.iter().zip(&self.confusion) {
            out.push_str(&csv_field(l));
            for c in row {
                let _ = write!(out, ",{c}");
            }
            out.push('\n');
        }
        out
    }
}

fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

/// Builds an accuracy report from (true, predicted) label pairs.
pub fn score_predictions(labels: &[String], outcomes: &[(String, String)]) -> Result<(f64, BTreeMap<String, f64>, Vec<Vec<usize>>)> {
    let index: BTreeMap<&str, usize> = labels.iter().enumerate().map(|(i, l)| (l.as_str(), i)).collect();
    let mut confusion = vec![vec![0usize; labels.len()]; labels.len()];
    for (truth, predicted) in outcomes {
        let (Some(&t), Some(&p)) = (index.get(truth.as_str()), index.get(predicted.as_str())) else {
            return Err(Error::Config(format!(
                "label `{truth}` or `{predicted}` missing from the instruction set"
            )));
        };
        confusion[t][p] += 1;
    }
    let correct: usize = (0..labels.len()).map(|i| confusion[i][i]).sum();
    let accuracy = if outcomes.is_empty() {
        0.0
    } else {
        correct as f64 / outcomes.len() as f64
    };
    let per_class = labels
        .iter()
        .enumerate()
        .filter_map(|(i, l)| {
            let total: usize = confusion[i].iter().sum();
            (total > 0).then(|| (l.clone(), confusion[i][i] as f64 / total as f64))
        })
        .collect();
    Ok((accuracy, per_class, confusion))
}

/// Fraction of semantic poses whose lexicon entry's codebook center is
/// closest, among all planted poses, to that pose's own canonical
/// configuration. Compared on the position block of the features.
pub fn lexicon_recovery(model: &TrainedModel, gt: &GroundTruth, cfg: &PipelineConfig) -> Result<f64> {
    let mut planted = Vec::new();
    for (symbol, joints) in &gt.poses {
        let seq = SkeletonSequence::from_positions(vec![joints.clone()], "planted", None, 1.0)?;
        let norm = skeleton::normalize(&seq, cfg.root_joint, cfg.scale_joints)?;
        let feature = skeleton::frame_features(&norm, skeleton::FeatureMode::Positions, cfg.weights)?;
        planted.push((symbol.as_str(), feature[0].vector.clone()));
    }
    let mut hits = 0usize;
    let mut total = 0usize;
    for entry in &model.lexicon.entries {
        if !gt.poses.contains_key(&entry.semantic_pose) {
            continue;
        }
        total += 1;
        let center = &model.codebook.centers[entry.visual_pose_id];
        let mut best: Option<(&str, f64)> = None;
        for (symbol, feature) in &planted {
            let d = squared_distance(&center[..feature.len()], feature);
            if best.is_none_or(|(_, bd)| d < bd) {
                best = Some((symbol, d));
            }
        }
        if best.map(|b| b.0) == Some(entry.semantic_pose.as_str()) {
            hits += 1;
        }
    }
    if total == 0 {
        return Err(Error::Config("ground truth shares no poses with the lexicon".into()));
    }
    Ok(hits as f64 / total as f64)
}

#[derive(Debug, Clone)]
pub struct Evaluation {
    pub report: EvalReport,
    pub model: TrainedModel,
    pub predictions: Vec<InstanceReport>,
}

/// Cross-subject evaluation over already prepared instances.
pub fn evaluate_prepared(
    cfg: &PipelineConfig,
    prepared: &[PreparedInstance],
    instructions: &InstructionSet,
    ground_truth: Option<&GroundTruth>,
) -> Result<Evaluation> {
    let subjects: Vec<String> = prepared.iter().map(|p| p.subject.clone()).collect();
    let (train_subjects, test_subjects) = split_subjects(&subjects, &cfg.split)?;
    let train: Vec<&PreparedInstance> = prepared
        .iter()
        .filter(|p| train_subjects.contains(&p.subject))
        .collect();
    let test: Vec<&PreparedInstance> = prepared
        .iter()
        .filter(|p| test_subjects.contains(&p.subject))
        .collect();
    let model = train_model(cfg, &train, instructions)?;
    let options = cfg.decoder_options();

    let mut predictions = Vec::with_capacity(test.len());
    let mut outcomes = Vec::with_capacity(test.len());
    for inst in test {
        let truth = inst.label.clone().ok_or_else(|| {
            Error::Config(format!("test instance {} has no class label", inst.instance_id))
        })?;
        let result = decoder::classify(&model.quantize(inst)?, instructions, &model.table, options)?;
        outcomes.push((truth, result.label.clone()));
        predictions.push(InstanceReport::new(inst, result));
    }
    let labels: Vec<String> = instructions.labels().map(String::from).collect();
    let (accuracy, per_class_accuracy, confusion) = score_predictions(&labels, &outcomes)?;
    let lexicon_recovery = ground_truth
        .map(|gt| lexicon_recovery(&model, gt, cfg))
        .transpose()?;
    let report = EvalReport {
        accuracy,
        per_class_accuracy,
        labels,
        confusion,
        lexicon_recovery,
        k: model.codebook.k,
        kmeans_seed: cfg.kmeans_seed,
        train_subjects,
        test_subjects,
        test_instances: outcomes.len(),
    };
    Ok(Evaluation {
        report,
        model,
        predictions,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub k: usize,
    pub accuracy: f64,
    pub seed: u64,
}

pub fn sweep_csv(rows: &[SweepRow]) -> String {
    let mut out = String::from("k,accuracy,seed\n");
    for r in rows {
        let _ = writeln!(out, "{},{},{}", r.k, r.accuracy, r.seed);
    }
    out
}

/// Repeats the evaluation with `k = m·|T|` for every multiplier and every
/// sweep seed. Rows are ordered by multiplier, then seed.
pub fn sweep_prepared(
    cfg: &PipelineConfig,
    prepared: &[PreparedInstance],
    instructions: &InstructionSet,
    multipliers: &[usize],
) -> Result<Vec<SweepRow>> {
    let seeds = cfg.sweep_seed_list();
    let mut rows = Vec::with_capacity(multipliers.len() * seeds.len());
    for &m in multipliers {
        if m == 0 {
            return Err(Error::Config("sweep multipliers must be at least 1".into()));
        }
        for &seed in &seeds {
            let mut run = cfg.clone();
            run.codebook_size = CodebookSize::PerSemanticPose(m);
            run.kmeans_seed = seed;
            let eval = evaluate_prepared(&run, prepared, instructions, None)?;
            info!(
                "sweep: k={} seed={} accuracy={:.4}",
                eval.report.k, seed, eval.report.accuracy
            );
            rows.push(SweepRow {
                k: eval.report.k,
                accuracy: eval.report.accuracy,
                seed,
            });
        }
    }
    Ok(rows)
}

/// Mean accuracy over seeds for each k, in first-seen order of k.
pub fn mean_accuracy_by_k(rows: &[SweepRow]) -> Vec<(usize, f64)> {
    let mut out: Vec<(usize, f64, usize)> = Vec::new();
    for r in rows {
        match out.iter_mut().find(|(k, _, _)| *k == r.k) {
            Some(entry) => {
                entry.1 += r.accuracy;
                entry.2 += 1;
            }
            None => out.push((r.k, r.accuracy, 1)),
        }
    }
    out.into_iter().map(|(k, sum, n)| (k, sum / n as f64)).collect()
}

fn require(path: Option<&PathBuf>, what: &str) -> Result<PathBuf> {
    path.cloned()
        .ok_or_else(|| Error::Config(format!("missing {what} path (flag or config key)")))
}

/// Resolved file arguments of a command; flags override config keys.
#[derive(Debug, Clone, Default)]
pub struct CommandPaths {
    pub manifest: Option<PathBuf>,
    pub instructions: Option<PathBuf>,
    pub novel: Option<PathBuf>,
    pub out: Option<PathBuf>,
}

impl CommandPaths {
    pub fn resolve(mut self, cfg: &PipelineConfig) -> Self {
        self.manifest = self.manifest.or_else(|| cfg.manifest.clone());
        self.instructions = self.instructions.or_else(|| cfg.instructions.clone());
        self.novel = self.novel.or_else(|| cfg.novel.clone());
        self.out = self.out.or_else(|| cfg.out.clone());
        self
    }
}

pub fn cmd_synth(cfg: &PipelineConfig, paths: &CommandPaths) -> Result<synth::SyntheticDataset> {
    let out = require(paths.out.as_ref(), "output directory")?;
    let data = synth::generate(&cfg.synth)?;
    synth::write_dataset(&data, &out)?;
    info!("wrote {} sequences to {}", data.sequences.len(), out.display());
    Ok(data)
}

pub fn cmd_train(cfg: &PipelineConfig, paths: &CommandPaths) -> Result<TrainedModel> {
    let manifest = require(paths.manifest.as_ref(), "manifest")?;
    let instructions = load_instructions(require(paths.instructions.as_ref(), "instructions")?)?;
    let out = require(paths.out.as_ref(), "output directory")?;
    let sequences = skeleton::load_sequences(&manifest)?;
    let prepared = prepare_all(&sequences, cfg)?;
    let refs: Vec<&PreparedInstance> = prepared.iter().collect();
    let model = train_model(cfg, &refs, &instructions)?;
    model.save(&out)?;
    if cfg.keyframe_dump {
        let dir = out.join("keyframes");
        ensure_dir(&dir)?;
        for inst in &prepared {
            keyframe::write_profile_csv(
                dir.join(format!("{}.csv", inst.instance_id)),
                &inst.profile,
                &inst.keyframes,
            )?;
        }
    }
    Ok(model)
}

fn load_ground_truth(cfg: &PipelineConfig) -> Result<Option<GroundTruth>> {
    cfg.ground_truth.as_ref().map(GroundTruth::load).transpose()
}

pub fn cmd_eval(cfg: &PipelineConfig, paths: &CommandPaths) -> Result<EvalReport> {
    let manifest = require(paths.manifest.as_ref(), "manifest")?;
    let instructions = load_instructions(require(paths.instructions.as_ref(), "instructions")?)?;
    let out = require(paths.out.as_ref(), "output directory")?;
    let sequences = skeleton::load_sequences(&manifest)?;
    let prepared = prepare_all(&sequences, cfg)?;
    let gt = load_ground_truth(cfg)?;
    let eval = evaluate_prepared(cfg, &prepared, &instructions, gt.as_ref())?;
    ensure_dir(&out)?;
    write_json(out.join(REPORT_FILE), &eval.report)?;
    write_atomic(out.join(CONFUSION_FILE), eval.report.confusion_csv().as_bytes())?;
    write_atomic(out.join(PREDICTIONS_FILE), reports_jsonl(&eval.predictions).as_bytes())?;
    Ok(eval.report)
}

pub fn cmd_sweep_k(cfg: &PipelineConfig, paths: &CommandPaths) -> Result<Vec<SweepRow>> {
    let manifest = require(paths.manifest.as_ref(), "manifest")?;
    let instructions = load_instructions(require(paths.instructions.as_ref(), "instructions")?)?;
    let out = require(paths.out.as_ref(), "output directory")?;
    let sequences = skeleton::load_sequences(&manifest)?;
    let prepared = prepare_all(&sequences, cfg)?;
    let rows = sweep_prepared(cfg, &prepared, &instructions, &cfg.sweep_multipliers)?;
    ensure_dir(&out)?;
    write_atomic(out.join(SWEEP_FILE), sweep_csv(&rows).as_bytes())?;
    Ok(rows)
}

/// Classifies every manifest instance against the trained (and optional
/// novel) instructions using saved artifacts. Artifacts are read from the
/// `artifacts` config key, falling back to the output directory.
pub fn cmd_classify(cfg: &PipelineConfig, paths: &CommandPaths) -> Result<Vec<InstanceReport>> {
    let manifest = require(paths.manifest.as_ref(), "manifest")?;
    let trained = load_instructions(require(paths.instructions.as_ref(), "instructions")?)?;
    let out = require(paths.out.as_ref(), "output directory")?;
    let artifacts = cfg.artifacts.clone().unwrap_or_else(|| out.clone());
    let model = TrainedModel::load(&artifacts)?;
    if model.codebook.feature_mode != cfg.feature_mode {
        return Err(Error::Config(format!(
            "codebook was built with feature mode `{}` but config uses `{}`",
            model.codebook.feature_mode.as_str(),
            cfg.feature_mode.as_str()
        )));
    }
    trained.check_symbols(&model.table)?;
    let novel = match &paths.novel {
        Some(p) => load_instructions(p)?,
        None => InstructionSet::new(),
    };
    novel.check_symbols(&model.table)?;

    let sequences = skeleton::load_sequences(&manifest)?;
    let options = cfg.decoder_options();
    let mut reports = Vec::with_capacity(sequences.len());
    for (i, seq) in sequences.iter().enumerate() {
        let inst = prepare(seq, i.to_string(), cfg)?;
        let sentence = model.quantize(&inst)?;
        let result = decoder::classify_zero_shot(&sentence, &trained, &novel, &model.table, options)?;
        reports.push(InstanceReport::new(&inst, result));
    }
    ensure_dir(&out)?;
    write_atomic(out.join(CLASSIFICATION_FILE), reports_jsonl(&reports).as_bytes())?;
    Ok(reports)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn names(v: &[&str]) -> Vec<String> {
        v.iter().map(|s| s.to_string()).collect()
    }

    #[test]
    fn odd_even_split() {
        let subjects: Vec<String> = (1..=10).map(|i| format!("s{i}")).collect();
        let (train, test) = split_subjects(&subjects, &SplitSpec::OddEven).unwrap();
        assert_eq!(train, names(&["s1", "s3", "s5", "s7", "s9"]));
        assert_eq!(test, names(&["s2", "s4", "s6", "s8", "s10"]));
    }

    #[test]
    fn explicit_split_and_errors() {
        let subjects = names(&["a", "b", "c", "a"]);
        let (train, test) =
            split_subjects(&subjects, &SplitSpec::TrainSubjects(names(&["b"]))).unwrap();
        assert_eq!(train, names(&["b"]));
        assert_eq!(test, names(&["a", "c"]));
        assert!(matches!(
            split_subjects(&names(&["a", "a"]), &SplitSpec::OddEven),
            Err(Error::Split(_))
        ));
        assert!(matches!(
            split_subjects(&subjects, &SplitSpec::TrainSubjects(names(&["zz"]))),
            Err(Error::Split(_))
        ));
    }

    #[test]
    fn confusion_counts_and_accuracy() {
        let labels = names(&["A", "B"]);
        let outcomes = vec![
            ("A".to_string(), "A".to_string()),
            ("A".to_string(), "B".to_string()),
            ("B".to_string(), "B".to_string()),
        ];
        let (acc, per_class, confusion) = score_predictions(&labels, &outcomes).unwrap();
        assert_eq!(confusion, vec![vec![1, 1], vec![0, 1]]);
        assert_eq!(acc, 2.0 / 3.0);
        assert_eq!(per_class["A"], 0.5);
        assert_eq!(per_class["B"], 1.0);
    }

    #[test]
    fn sweep_means_group_by_k() {
        let row = |k, accuracy, seed| SweepRow { k, accuracy, seed };
        let rows = [row(12, 0.5, 1), row(12, 1.0, 2), row(60, 0.75, 1), row(60, 0.25, 2)];
        assert_eq!(mean_accuracy_by_k(&rows), vec![(12, 0.75), (60, 0.5)]);
    }

    #[test]
    fn sweep_csv_header() {
        let rows = [SweepRow {
            k: 12,
            accuracy: 0.5,
            seed: 7,
        }];
        assert_eq!(sweep_csv(&rows), "k,accuracy,seed\n12,0.5,7\n");
    }
}
