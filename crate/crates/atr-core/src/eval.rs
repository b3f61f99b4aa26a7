//! Cross-validation protocols, confusion matrices, precision/recall
//! metrics and report rendering.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::config::{PipelineConfig, ProtocolConfig};
use crate::error::{Error, Result};
use crate::pipeline::{choose_wavelet, prepare_all, train_model, PipelineSettings};
use crate::skeleton::RawSequence;
use crate::Real;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Protocol {
    /// Leave-one-subject-out: one fold per subject.
    LeaveOneSubjectOut,
    /// Subjects shuffled and split into k groups; each group tests once.
    CrossSubjectKFold(usize),
    /// Leave-one-sequence-out: one fold per sample.
    LeaveOneSequenceOut,
    /// Random subject-level holdout with the given train fraction.
    HoldoutSplit(f64),
}

impl Protocol {
    pub fn from_config(p: &ProtocolConfig) -> Result<Protocol> {
        match p.kind.as_str() {
            "losubo" => Ok(Protocol::LeaveOneSubjectOut),
            "kfold" => {
                if p.folds < 2 {
                    return Err(Error::ConfigError("kfold needs folds >= 2".into()));
                }
                Ok(Protocol::CrossSubjectKFold(p.folds))
            }
            "loseqo" => Ok(Protocol::LeaveOneSequenceOut),
            "holdout" => {
                if !(p.train_fraction > 0.0 && p.train_fraction < 1.0) {
                    return Err(Error::ConfigError(
                        "holdout needs 0 < train_fraction < 1".into(),
                    ));
                }
                Ok(Protocol::HoldoutSplit(p.train_fraction))
            }
            other => Err(Error::ConfigError(format!("unknown protocol kind '{other}'"))),
        }
    }

    /// Deterministic protocols re-visit the same folds every repeat, so
    /// collapse their repeat count to one.
    fn effective_repeats(&self, requested: usize) -> usize {
        match self {
            Protocol::LeaveOneSubjectOut | Protocol::LeaveOneSequenceOut => 1,
            _ => requested.max(1),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FoldOutcome {
    pub repeat: usize,
    pub fold: usize,
    pub train_subjects: Vec<usize>,
    pub test_subjects: Vec<usize>,
    pub test_count: usize,
    pub correct: usize,
    /// (sample_index, true label, predicted label) per test sample.
    pub predictions: Vec<(usize, usize, usize)>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassMetrics {
    pub precision: f64,
    pub recall: f64,
    /// The denominator was zero (class never predicted / never present).
    pub precision_undefined: bool,
    pub recall_undefined: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub protocol: Protocol,
    pub repeats: usize,
    /// Row = true class, column = predicted class, both 1-based classes at
    /// index 0.. C-1; pooled over all folds and repeats.
    pub confusion: Vec<Vec<usize>>,
    pub per_class: Vec<ClassMetrics>,
    pub accuracy: f64,
    pub macro_precision: f64,
    pub macro_recall: f64,
    pub folds: Vec<FoldOutcome>,
    pub config: PipelineConfig,
}

/// Per-class precision (column-wise) and recall (row-wise) from a square
/// confusion matrix; zero denominators yield 0 with the undefined flag set.
pub fn metrics_from_confusion(confusion: &[Vec<usize>]) -> Result<Vec<ClassMetrics>> {
    let c = confusion.len();
    for row in confusion {
        if row.len() != c {
            return Err(Error::NonSquareMatrix { rows: c, cols: row.len() });
        }
    }
    Ok((0..c)
        .map(|k| {
            let col_sum: usize = confusion.iter().map(|row| row[k]).sum();
            let row_sum: usize = confusion[k].iter().sum();
            let diag = confusion[k][k];
            ClassMetrics {
                precision: if col_sum == 0 { 0.0 } else { diag as f64 / col_sum as f64 },
                recall: if row_sum == 0 { 0.0 } else { diag as f64 / row_sum as f64 },
                precision_undefined: col_sum == 0,
                recall_undefined: row_sum == 0,
            }
        })
        .collect())
}

struct Fold {
    train_subjects: Vec<usize>,
    test_subjects: Vec<usize>,
    /// For leave-one-sequence-out: the single held-out sample index.
    test_sample: Option<usize>,
}

fn build_folds(
    protocol: Protocol,
    subjects: &[usize],
    n_samples: usize,
    rng: &mut ChaCha8Rng,
) -> Result<Vec<Fold>> {
    let mut shuffled = subjects.to_vec();
    shuffled.shuffle(rng);
    match protocol {
        Protocol::LeaveOneSubjectOut => {
            if subjects.len() < 2 {
                return Err(Error::InsufficientSubjects { required: 2, available: subjects.len() });
            }
            Ok(subjects
                .iter()
                .map(|&s| Fold {
                    train_subjects: subjects.iter().copied().filter(|&t| t != s).collect(),
                    test_subjects: vec![s],
                    test_sample: None,
                })
                .collect())
        }
        Protocol::CrossSubjectKFold(k) => {
            if subjects.len() < k {
                return Err(Error::InsufficientSubjects { required: k, available: subjects.len() });
            }
            let mut groups: Vec<Vec<usize>> = vec![Vec::new(); k];
            for (i, s) in shuffled.iter().enumerate() {
                groups[i % k].push(*s);
            }
            Ok((0..k)
                .map(|g| Fold {
                    train_subjects: groups
                        .iter()
                        .enumerate()
                        .filter(|(i, _)| *i != g)
                        .flat_map(|(_, v)| v.iter().copied())
                        .collect(),
                    test_subjects: groups[g].clone(),
                    test_sample: None,
                })
                .collect())
        }
        Protocol::LeaveOneSequenceOut => Ok((0..n_samples)
            .map(|i| Fold {
                train_subjects: subjects.to_vec(),
                test_subjects: Vec::new(),
                test_sample: Some(i),
            })
            .collect()),
        Protocol::HoldoutSplit(frac) => {
            if subjects.len() < 2 {
                return Err(Error::InsufficientSubjects { required: 2, available: subjects.len() });
            }
            let n_train = ((subjects.len() as f64 * frac).round() as usize)
                .clamp(1, subjects.len() - 1);
            Ok(vec![Fold {
                train_subjects: shuffled[..n_train].to_vec(),
                test_subjects: shuffled[n_train..].to_vec(),
                test_sample: None,
            }])
        }
    }
}

/// Run a full cross-validation experiment over raw sequences.
pub fn run_protocol<F: Real>(
    sequences: &[RawSequence<F>],
    settings: &PipelineSettings,
    config: &PipelineConfig,
) -> Result<EvalReport> {
    let protocol = Protocol::from_config(&config.protocol)?;
    let samples = prepare_all(sequences, settings)?;
    let c = samples.iter().map(|s| s.class_label).max().unwrap_or(0);
    if c == 0 {
        return Err(Error::DegenerateData("no samples to evaluate".into()));
    }
    let mut subjects: Vec<usize> = samples.iter().map(|s| s.subject_id).collect();
    subjects.sort_unstable();
    subjects.dedup();

    let repeats = protocol.effective_repeats(config.protocol.repeat_count);
    let mut confusion = vec![vec![0usize; c]; c];
    let mut folds_out = Vec::new();
    for repeat in 0..repeats {
        let mut rng = ChaCha8Rng::seed_from_u64(config.seed.wrapping_add(repeat as u64));
        let folds = build_folds(protocol, &subjects, samples.len(), &mut rng)?;
        for (fold_idx, fold) in folds.iter().enumerate() {
            let (train, test): (Vec<_>, Vec<_>) = match fold.test_sample {
                Some(held_out) => {
                    let train: Vec<_> =
                        samples.iter().filter(|s| s.sample_index != held_out).cloned().collect();
                    let test: Vec<_> =
                        samples.iter().filter(|s| s.sample_index == held_out).cloned().collect();
                    (train, test)
                }
                None => (
                    samples
                        .iter()
                        .filter(|s| fold.train_subjects.contains(&s.subject_id))
                        .cloned()
                        .collect(),
                    samples
                        .iter()
                        .filter(|s| fold.test_subjects.contains(&s.subject_id))
                        .cloned()
                        .collect(),
                ),
            };
            if test.is_empty() {
                continue;
            }
            let wavelet = choose_wavelet(
                &train,
                settings,
                config.wavelet.spec()?,
                config.wavelet.autotune,
            )?;
            let model = train_model(&train, settings, wavelet)?;
            let mut correct = 0;
            let mut predictions = Vec::with_capacity(test.len());
            for sample in &test {
                let predicted = model.predict_sample(sample)?;
                confusion[sample.class_label - 1][predicted - 1] += 1;
                if predicted == sample.class_label {
                    correct += 1;
                }
                predictions.push((sample.sample_index, sample.class_label, predicted));
            }
            folds_out.push(FoldOutcome {
                repeat,
                fold: fold_idx,
                train_subjects: fold.train_subjects.clone(),
                test_subjects: fold.test_subjects.clone(),
                test_count: test.len(),
                correct,
                predictions,
            });
        }
    }

    let per_class = metrics_from_confusion(&confusion)?;
    let total: usize = confusion.iter().flatten().sum();
    let diag: usize = (0..c).map(|k| confusion[k][k]).sum();
    let macro_precision = per_class.iter().map(|m| m.precision).sum::<f64>() / c as f64;
    let macro_recall = per_class.iter().map(|m| m.recall).sum::<f64>() / c as f64;
    Ok(EvalReport {
        protocol,
        repeats,
        confusion,
        per_class,
        accuracy: if total == 0 { 0.0 } else { diag as f64 / total as f64 },
        macro_precision,
        macro_recall,
        folds: folds_out,
        config: config.clone(),
    })
}

impl EvalReport {
    /// Human-readable table: confusion matrix, per-class metrics, totals.
    pub fn render_text(&self) -> String {
        let c = self.confusion.len();
        let mut out = String::new();
        out.push_str(&format!(
            "protocol: {:?}  repeats: {}\n\nconfusion (rows = true, cols = predicted)\n",
            self.protocol, self.repeats
        ));
        out.push_str("       ");
        for k in 1..=c {
            out.push_str(&format!("{k:>6}"));
        }
        out.push('\n');
        for (i, row) in self.confusion.iter().enumerate() {
            out.push_str(&format!("  {:>4} ", i + 1));
            for v in row {
                out.push_str(&format!("{v:>6}"));
            }
            out.push('\n');
        }
        out.push_str("\nclass  precision  recall\n");
        for (i, m) in self.per_class.iter().enumerate() {
            let p = if m.precision_undefined { "   n/a".into() } else { format!("{:6.3}", m.precision) };
            let r = if m.recall_undefined { "   n/a".into() } else { format!("{:6.3}", m.recall) };
            out.push_str(&format!("  {:>4}     {p}  {r}\n", i + 1));
        }
        out.push_str(&format!(
            "\naccuracy: {:.4}  macro precision: {:.4}  macro recall: {:.4}\n",
            self.accuracy, self.macro_precision, self.macro_recall
        ));
        out
    }
}
