//! Stratified k-fold evaluation and accuracy metrics.
//!
//! Malware is the positive class. Per fold the harness trains a detector,
//! predicts every held-out sample, tallies the confusion counts and derives:
//!
//! - total accuracy `(TP + TN) / (TP + TN + FP + FN)`
//! - mean fold accuracy `(total + mean per-family TPR) / 2`, or just the
//!   total accuracy when no test malware carries a family tag
//! - MMA, the mean of the per-fold accuracies

use alloc::collections::BTreeMap;
use alloc::string::String;
use alloc::vec::Vec;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::corpus::{Label, LabeledSample};
use crate::detector::{predict, train, Aggregation, TrainConfig, DEFAULT_TOP_K};
use crate::error::{Error, Result};
use crate::lda::ClassPriors;

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct ConfusionCounts {
    pub tp: usize,
    pub fp: usize,
    pub tn: usize,
    #[cfg_attr(feature = "serde", serde(rename = "fn"))]
    pub fn_: usize,
}

impl ConfusionCounts {
    pub fn record(&mut self, actual: Label, predicted: Label) {
        match (actual, predicted) {
            (Label::Malware, Label::Malware) => self.tp += 1,
            (Label::Benign, Label::Malware) => self.fp += 1,
            (Label::Benign, Label::Benign) => self.tn += 1,
            (Label::Malware, Label::Benign) => self.fn_ += 1,
        }
    }

    pub fn total(&self) -> usize {
        self.tp + self.fp + self.tn + self.fn_
    }
}

pub fn total_accuracy(c: &ConfusionCounts) -> Result<f64> {
    match c.total() {
        0 => Err(Error::DivisionByZero),
        n => Ok((c.tp + c.tn) as f64 / n as f64),
    }
}

pub fn mean_fold_accuracy(total: f64, per_family_tpr: &BTreeMap<String, f64>) -> Result<f64> {
    if per_family_tpr.is_empty() {
        return Err(Error::EmptyFamilyMap);
    }
    let mean_tpr = per_family_tpr.values().sum::<f64>() / per_family_tpr.len() as f64;
    Ok((total + mean_tpr) / 2.0)
}

pub fn mma(fold_accuracies: &[f64]) -> Result<f64> {
    if fold_accuracies.is_empty() {
        return Err(Error::EmptyList);
    }
    Ok(fold_accuracies.iter().sum::<f64>() / fold_accuracies.len() as f64)
}

/// Sample indices of one fold, each list ascending.
#[derive(Debug, Clone, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Partition {
    pub train: Vec<usize>,
    pub test: Vec<usize>,
}

/// Stratified split: each class is shuffled with a generator seeded from
/// `seed` (malware first, then benign) and cut into `k` parts whose sizes
/// differ by at most one; fold `i` tests on part `i` of every class.
pub fn kfold_split(labels: &[Label], k: usize, seed: u64) -> Result<Vec<Partition>> {
    if k < 2 {
        return Err(Error::InvalidFoldCount(k));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut fold_of = alloc::vec![0usize; labels.len()];
    for class in [Label::Malware, Label::Benign] {
        let mut members: Vec<usize> = (0..labels.len()).filter(|&i| labels[i] == class).collect();
        if members.len() < k {
            return Err(Error::InsufficientSamples {
                label: class,
                k,
                available: members.len(),
            });
        }
        members.shuffle(&mut rng);
        let (base, extra) = (members.len() / k, members.len() % k);
        let mut start = 0;
        for fold in 0..k {
            let size = base + usize::from(fold < extra);
            for &i in &members[start..start + size] {
                fold_of[i] = fold;
            }
            start += size;
        }
    }
    Ok((0..k)
        .map(|fold| {
            let (test, train) = (0..labels.len()).partition(|&i| fold_of[i] == fold);
            Partition { train, test }
        })
        .collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct ExperimentConfig {
    pub folds: usize,
    pub top_k: usize,
    pub seed: u64,
    pub aggregation: Aggregation,
    pub prune: bool,
    pub priors: ClassPriors,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            folds: 5,
            top_k: DEFAULT_TOP_K,
            seed: 42,
            aggregation: Aggregation::Mean,
            prune: true,
            priors: ClassPriors::Equal,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct SampleVerdict {
    pub fold: usize,
    pub index: usize,
    pub sample_id: String,
    pub label: Label,
    pub family: Option<String>,
    pub predicted: Label,
    pub aggregate_score: f64,
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct FoldResult {
    pub fold_index: usize,
    pub train_size: usize,
    pub test_size: usize,
    pub counts: ConfusionCounts,
    pub total_accuracy: f64,
    pub per_family_tpr: BTreeMap<String, f64>,
    pub mean_fold_accuracy: f64,
    pub threshold_used: f64,
    pub separable: bool,
    /// `min(B) - max(M)` on the training pairs.
    pub training_gap: f64,
    pub selected_edges: Option<usize>,
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct PassReport {
    pub pruned: bool,
    pub folds: Vec<FoldResult>,
    pub mma: f64,
    pub verdicts: Vec<SampleVerdict>,
}

impl PassReport {
    pub fn total_counts(&self) -> ConfusionCounts {
        self.folds.iter().fold(ConfusionCounts::default(), |mut acc, f| {
            acc.tp += f.counts.tp;
            acc.fp += f.counts.fp;
            acc.tn += f.counts.tn;
            acc.fn_ += f.counts.fn_;
            acc
        })
    }
}

fn family_tpr(verdicts: &[SampleVerdict]) -> BTreeMap<String, f64> {
    let mut hits: BTreeMap<String, (usize, usize)> = BTreeMap::new();
    for v in verdicts.iter().filter(|v| v.label == Label::Malware) {
        if let Some(family) = &v.family {
            let e = hits.entry(family.clone()).or_default();
            e.1 += 1;
            if v.predicted == Label::Malware {
                e.0 += 1;
            }
        }
    }
    hits.into_iter().map(|(f, (tp, n))| (f, tp as f64 / n as f64)).collect()
}

fn run_fold(
    corpus: &[LabeledSample],
    holdout: &[LabeledSample],
    fold: usize,
    part: &Partition,
    config: &ExperimentConfig,
) -> Result<(FoldResult, Vec<SampleVerdict>)> {
    let train_set: Vec<LabeledSample> = part.train.iter().map(|&i| corpus[i].clone()).collect();
    let trained = train(
        &train_set,
        &TrainConfig {
            top_k: config.top_k,
            prune: config.prune,
            priors: config.priors,
        },
    )?;

    let tests = part
        .test
        .iter()
        .map(|&i| (i, &corpus[i]))
        .chain(holdout.iter().enumerate().map(|(j, s)| (corpus.len() + j, s)));
    let mut counts = ConfusionCounts::default();
    let mut verdicts = Vec::with_capacity(part.test.len() + holdout.len());
    for (index, sample) in tests {
        let v = predict(&trained.model, &sample.sequence, config.aggregation)?;
        counts.record(sample.label, v.label);
        verdicts.push(SampleVerdict {
            fold,
            index,
            sample_id: sample.source_id().into(),
            label: sample.label,
            family: sample.family.clone(),
            predicted: v.label,
            aggregate_score: v.aggregate_score,
        });
    }

    let total = total_accuracy(&counts)?;
    let per_family_tpr = family_tpr(&verdicts);
    let mean_fold = if per_family_tpr.is_empty() {
        total
    } else {
        mean_fold_accuracy(total, &per_family_tpr)?
    };
    Ok((
        FoldResult {
            fold_index: fold,
            train_size: part.train.len(),
            test_size: verdicts.len(),
            counts,
            total_accuracy: total,
            per_family_tpr,
            mean_fold_accuracy: mean_fold,
            threshold_used: trained.fit.threshold,
            separable: trained.fit.separable,
            training_gap: trained.fit.gap(),
            selected_edges: trained.model.filter().map(|f| f.len()),
        },
        verdicts,
    ))
}

/// One cross-validation pass (pruned or not, per `config.prune`).
pub fn run_experiment(corpus: &[LabeledSample], config: &ExperimentConfig) -> Result<PassReport> {
    run_experiment_with_holdout(corpus, &[], config)
}

/// Cross-validates over `corpus` and additionally tests every fold's model
/// on all of `holdout`, which never enters training. This is the protocol
/// for training on one obfuscation level and testing on the others.
/// Holdout verdicts carry index `corpus.len() + j`.
pub fn run_experiment_with_holdout(
    corpus: &[LabeledSample],
    holdout: &[LabeledSample],
    config: &ExperimentConfig,
) -> Result<PassReport> {
    let labels: Vec<Label> = corpus.iter().map(|s| s.label).collect();
    let partitions = kfold_split(&labels, config.folds, config.seed)?;
    let mut folds = Vec::with_capacity(partitions.len());
    let mut verdicts = Vec::with_capacity(corpus.len() + holdout.len() * partitions.len());
    for (index, part) in partitions.iter().enumerate() {
        let (result, mut v) = run_fold(corpus, holdout, index, part, config).map_err(|e| Error::Fold {
            index,
            source: alloc::boxed::Box::new(e),
        })?;
        folds.push(result);
        verdicts.append(&mut v);
    }
    let accuracies: Vec<f64> = folds.iter().map(|f| f.mean_fold_accuracy).collect();
    Ok(PassReport {
        pruned: config.prune,
        mma: mma(&accuracies)?,
        folds,
        verdicts,
    })
}

/// Accuracy of one malware family against the benign test files.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct FamilyAccuracy {
    pub family: String,
    /// Per fold: counts over this family's test malware plus all test benign.
    pub counts: Vec<ConfusionCounts>,
    /// Per fold: mean fold accuracy with this family as the only category.
    pub fold_accuracy: Vec<f64>,
    pub mma: f64,
}

impl PassReport {
    /// Re-derives per-family metrics from the stored verdicts.
    pub fn family_breakdown(&self) -> Result<Vec<FamilyAccuracy>> {
        let families: alloc::collections::BTreeSet<&String> = self
            .verdicts
            .iter()
            .filter(|v| v.label == Label::Malware)
            .filter_map(|v| v.family.as_ref())
            .collect();
        let folds = self.folds.len();
        families
            .into_iter()
            .map(|family| {
                let mut counts = alloc::vec![ConfusionCounts::default(); folds];
                for v in &self.verdicts {
                    let relevant = match v.label {
                        Label::Benign => true,
                        Label::Malware => v.family.as_ref() == Some(family),
                    };
                    if relevant {
                        counts[v.fold].record(v.label, v.predicted);
                    }
                }
                let fold_accuracy = counts
                    .iter()
                    .map(|c| {
                        let total = total_accuracy(c)?;
                        let tpr = match c.tp + c.fn_ {
                            0 => return Ok(total),
                            n => c.tp as f64 / n as f64,
                        };
                        let map: BTreeMap<String, f64> = [(family.clone(), tpr)].into_iter().collect();
                        mean_fold_accuracy(total, &map)
                    })
                    .collect::<Result<Vec<_>>>()?;
                Ok(FamilyAccuracy {
                    family: family.clone(),
                    mma: mma(&fold_accuracy)?,
                    counts,
                    fold_accuracy,
                })
            })
            .collect()
    }
}
