//! Evaluation runs and their on-disk reports.
//!
//! All output is a pure function of the corpus and settings: JSON objects
//! are written with sorted keys, rows keep corpus order, and nothing
//! time- or host-dependent is recorded.

use std::io;

use ogs_core::eval::{FamilyAccuracy, PassReport};
use ogs_core::{
    run_experiment_with_holdout, Aggregation, ClassPriors, EdgeRanking, Error, ExperimentConfig, Label, LabeledSample,
};
use serde::Serialize;

pub const REPORT_VERSION: u32 = 1;

/// Attached to every report so readers know how `mean_fold_accuracy` is built.
pub const MEAN_FOLD_NOTE: &str = "mean_fold_accuracy is (total accuracy + mean per-family true positive rate) / 2; \
    it is specific to this tool and not a standard metric";

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EvalSettings {
    pub folds: usize,
    pub top_k: usize,
    pub seed: u64,
    pub aggregation: Aggregation,
    pub priors: ClassPriors,
    pub prune: bool,
    /// Also run the unpruned detector on the same folds.
    pub baseline: bool,
    /// When non-empty, cross-validation uses benign samples plus malware of
    /// these families; all other malware is scored in every fold.
    pub train_families: Vec<String>,
    /// Extra top-K values to evaluate; empty skips the sweep.
    pub sweep: Vec<usize>,
}

impl Default for EvalSettings {
    fn default() -> Self {
        let d = ExperimentConfig::default();
        Self {
            folds: d.folds,
            top_k: d.top_k,
            seed: d.seed,
            aggregation: d.aggregation,
            priors: d.priors,
            prune: true,
            baseline: true,
            train_families: Vec::new(),
            sweep: Vec::new(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PassEntry {
    #[serde(flatten)]
    pub report: PassReport,
    pub families: Vec<FamilyAccuracy>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepRow {
    pub top_k: usize,
    pub mma: f64,
    pub min_training_gap: f64,
    pub separable_folds: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EvalReport {
    pub version: u32,
    pub config: EvalSettings,
    pub corpus_size: usize,
    pub holdout_size: usize,
    pub metric_note: &'static str,
    pub passes: Vec<PassEntry>,
    pub sweep: Vec<SweepRow>,
}

impl EvalReport {
    pub fn pass(&self, pruned: bool) -> Option<&PassEntry> {
        self.passes.iter().find(|p| p.report.pruned == pruned)
    }

    pub fn to_json(&self) -> String {
        let value = serde_json::to_value(self).expect("report serializes");
        let mut out = serde_json::to_string_pretty(&value).expect("value serializes");
        out.push('\n');
        out
    }
}

/// Splits samples into the cross-validated corpus and the holdout set.
pub fn split_holdout(
    samples: &[LabeledSample],
    train_families: &[String],
) -> Result<(Vec<LabeledSample>, Vec<LabeledSample>), Error> {
    if train_families.is_empty() {
        return Ok((samples.to_vec(), Vec::new()));
    }
    for f in train_families {
        if !samples.iter().any(|s| s.family.as_ref() == Some(f)) {
            return Err(Error::InvalidConfig(format!("train family `{f}` has no samples")));
        }
    }
    Ok(samples
        .iter()
        .cloned()
        .partition(|s| s.label == Label::Benign || s.family.as_ref().is_some_and(|f| train_families.contains(f))))
}

fn pass(
    corpus: &[LabeledSample],
    holdout: &[LabeledSample],
    s: &EvalSettings,
    top_k: usize,
    prune: bool,
) -> Result<PassReport, Error> {
    let config = ExperimentConfig {
        folds: s.folds,
        top_k,
        seed: s.seed,
        aggregation: s.aggregation,
        prune,
        priors: s.priors,
    };
    run_experiment_with_holdout(corpus, holdout, &config)
}

pub fn evaluate(samples: &[LabeledSample], settings: &EvalSettings) -> Result<EvalReport, Error> {
    let (corpus, holdout) = split_holdout(samples, &settings.train_families)?;
    let mut modes = vec![settings.prune];
    if settings.baseline && settings.prune {
        modes.push(false);
    }
    let mut passes = Vec::new();
    for prune in modes {
        let report = pass(&corpus, &holdout, settings, settings.top_k, prune)?;
        let families = report.family_breakdown()?;
        passes.push(PassEntry { report, families });
    }
    let mut sweep = Vec::new();
    for &k in &settings.sweep {
        let r = pass(&corpus, &holdout, settings, k, true)?;
        sweep.push(SweepRow {
            top_k: k,
            mma: r.mma,
            min_training_gap: r.folds.iter().map(|f| f.training_gap).fold(f64::INFINITY, f64::min),
            separable_folds: r.folds.iter().filter(|f| f.separable).count(),
        });
    }
    Ok(EvalReport {
        version: REPORT_VERSION,
        config: settings.clone(),
        corpus_size: corpus.len(),
        holdout_size: holdout.len(),
        metric_note: MEAN_FOLD_NOTE,
        passes,
        sweep,
    })
}

/// One row per held-out prediction:
/// `pass,fold,sample_id,label,family,aggregate_score,verdict`.
pub fn write_scores_csv<W: io::Write>(report: &EvalReport, out: W) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record([
        "pass",
        "fold",
        "sample_id",
        "label",
        "family",
        "aggregate_score",
        "verdict",
    ])?;
    for p in &report.passes {
        let pass = if p.report.pruned { "pruned" } else { "unpruned" };
        for v in &p.report.verdicts {
            w.write_record([
                pass,
                &v.fold.to_string(),
                &v.sample_id,
                v.label.as_str(),
                v.family.as_deref().unwrap_or(""),
                &v.aggregate_score.to_string(),
                v.predicted.as_str(),
            ])?;
        }
    }
    w.flush()?;
    Ok(())
}

/// Edge ranking in rank order: `rank,from,to,s_w,s_b,r_value`.
/// Perfect edges print `inf` and uninformative ones `NaN`.
pub fn write_ranking_csv<W: io::Write>(ranking: &EdgeRanking, out: W) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["rank", "from", "to", "s_w", "s_b", "r_value"])?;
    for (i, e) in ranking.ranked().iter().enumerate() {
        w.write_record([
            &(i + 1).to_string(),
            &e.edge.from,
            &e.edge.to,
            &e.s_w.to_string(),
            &e.s_b.to_string(),
            &e.r.value().to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// Plain-text top-K table: `top_k  mma  min_gap  separable/folds`.
pub fn sweep_table(report: &EvalReport) -> String {
    let mut out = String::from("top_k\tmma\tmin_training_gap\tseparable_folds\n");
    for r in &report.sweep {
        out.push_str(&format!(
            "{}\t{:.4}\t{:.3e}\t{}/{}\n",
            r.top_k, r.mma, r.min_training_gap, r.separable_folds, report.config.folds
        ));
    }
    out
}
