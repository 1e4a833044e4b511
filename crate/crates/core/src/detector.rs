//! Threshold training and prediction.
//!
//! Training builds one alphabet over every training sequence, ranks edges,
//! keeps the top-K as a scoring filter, and fits a threshold from all
//! malware/malware pair scores (`M`) against all benign/malware scores (`B`).
//! A new file is scored against every stored malware graph and called
//! malware iff the aggregate is strictly below the threshold.

use alloc::collections::BTreeSet;
use alloc::string::String;
use alloc::sync::Arc;
use alloc::vec::Vec;

use crate::corpus::{Label, LabeledSample, OpcodeSequence};
use crate::error::{Error, Result};
use crate::graph::{
    build_alphabet, build_graph, build_graph_dropping_unknown, score, Edge, EdgeFilter, OpcodeAlphabet, OpcodeGraph,
};
use crate::lda::{compute_scatter, extract_features, rank_edges, ClassPriors, EdgeRanking};

pub const FORMAT_VERSION: u32 = 1;
pub const DEFAULT_TOP_K: usize = 50;

/// How per-reference scores combine into one decision value.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "lowercase"))]
pub enum Aggregation {
    #[default]
    Mean,
    Max,
}

impl Aggregation {
    pub fn as_str(self) -> &'static str {
        match self {
            Aggregation::Mean => "mean",
            Aggregation::Max => "max",
        }
    }

    fn combine(self, scores: &[f64]) -> f64 {
        match self {
            Aggregation::Mean => scores.iter().sum::<f64>() / scores.len() as f64,
            Aggregation::Max => scores.iter().copied().fold(f64::NEG_INFINITY, f64::max),
        }
    }
}

impl core::str::FromStr for Aggregation {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "mean" => Ok(Aggregation::Mean),
            "max" => Ok(Aggregation::Max),
            other => Err(Error::InvalidConfig(alloc::format!(
                "aggregation must be \"mean\" or \"max\", got {other:?}"
            ))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct ThresholdFit {
    pub threshold: f64,
    /// `max(M) < min(B)`.
    pub separable: bool,
    pub max_malware: f64,
    pub min_benign: f64,
    /// Pair scores misclassified by `threshold`.
    pub training_errors: usize,
}

impl ThresholdFit {
    /// `min(B) - max(M)`; positive iff separable.
    pub fn gap(&self) -> f64 {
        self.min_benign - self.max_malware
    }
}

/// Threshold rule over precomputed pair scores.
///
/// Separable data gets the midpoint of the gap. Otherwise every midpoint
/// between consecutive distinct scores is tried and the one with the fewest
/// misclassified pairs wins, lowest value on ties. With no midpoints (all
/// scores equal) the common score itself is returned.
pub fn fit_threshold(malware_scores: &[f64], benign_scores: &[f64]) -> Result<ThresholdFit> {
    if malware_scores.is_empty() || benign_scores.is_empty() {
        return Err(Error::DegenerateTraining {
            malware: malware_scores.len(),
            benign: benign_scores.len(),
        });
    }
    let mut m = malware_scores.to_vec();
    let mut b = benign_scores.to_vec();
    m.sort_by(f64::total_cmp);
    b.sort_by(f64::total_cmp);
    let max_m = m[m.len() - 1];
    let min_b = b[0];

    let errors_at = |t: f64| {
        let m_err = m.len() - m.partition_point(|&x| x < t);
        let b_err = b.partition_point(|&x| x < t);
        m_err + b_err
    };

    if max_m < min_b {
        let t = (max_m + min_b) / 2.0;
        return Ok(ThresholdFit {
            threshold: t,
            separable: true,
            max_malware: max_m,
            min_benign: min_b,
            training_errors: errors_at(t),
        });
    }

    let mut merged: Vec<f64> = m.iter().chain(&b).copied().collect();
    merged.sort_by(f64::total_cmp);
    merged.dedup();
    let mut best = (usize::MAX, merged[0]);
    for w in merged.windows(2) {
        let t = (w[0] + w[1]) / 2.0;
        let e = errors_at(t);
        if e < best.0 {
            best = (e, t);
        }
    }
    if best.0 == usize::MAX {
        best.0 = errors_at(best.1);
    }
    Ok(ThresholdFit {
        threshold: best.1,
        separable: false,
        max_malware: max_m,
        min_benign: min_b,
        training_errors: best.0,
    })
}

/// All malware pairs (`M`) and all benign-vs-malware pairs (`B`).
pub fn pair_scores(
    malware: &[OpcodeGraph],
    benign: &[OpcodeGraph],
    filter: Option<&EdgeFilter>,
) -> Result<(Vec<f64>, Vec<f64>)> {
    let mut m = Vec::with_capacity(malware.len() * malware.len().saturating_sub(1) / 2);
    for (i, a) in malware.iter().enumerate() {
        for b in &malware[i + 1..] {
            m.push(score(a, b, filter)?);
        }
    }
    let mut bs = Vec::with_capacity(benign.len() * malware.len());
    for g in benign {
        for a in malware {
            bs.push(score(g, a, filter)?);
        }
    }
    Ok((m, bs))
}

pub fn set_threshold(
    malware: &[OpcodeGraph],
    benign: &[OpcodeGraph],
    filter: Option<&EdgeFilter>,
) -> Result<ThresholdFit> {
    if malware.len() < 2 || benign.is_empty() {
        return Err(Error::DegenerateTraining {
            malware: malware.len(),
            benign: benign.len(),
        });
    }
    let (m, b) = pair_scores(malware, benign, filter)?;
    fit_threshold(&m, &b)
}

#[derive(Debug, Clone, PartialEq)]
pub struct DetectorModel {
    format_version: u32,
    top_k: usize,
    threshold: f64,
    alphabet: Arc<OpcodeAlphabet>,
    selected: Option<EdgeFilter>,
    malware_graphs: Vec<OpcodeGraph>,
}

impl DetectorModel {
    /// Assembles a model and checks its invariants. `selected = None` is an
    /// unpruned model scored over the whole alphabet.
    pub fn new(
        top_k: usize,
        threshold: f64,
        alphabet: Arc<OpcodeAlphabet>,
        selected: Option<BTreeSet<Edge>>,
        malware_graphs: Vec<OpcodeGraph>,
    ) -> Result<Self> {
        if top_k == 0 {
            return Err(Error::InvalidTopK);
        }
        if !(threshold >= 0.0 && threshold.is_finite()) {
            return Err(Error::InvalidConfig(alloc::format!(
                "threshold {threshold} is not a finite non-negative number"
            )));
        }
        if malware_graphs.is_empty() {
            return Err(Error::InvalidConfig("model has no malware reference graphs".into()));
        }
        if malware_graphs.iter().any(|g| **g.alphabet() != *alphabet) {
            return Err(Error::AlphabetMismatch);
        }
        let selected = match selected {
            Some(edges) => {
                let filter = EdgeFilter::resolve(&alphabet, &edges)?;
                if filter.len() > top_k {
                    return Err(Error::InvalidConfig(alloc::format!(
                        "{} selected edges exceed top_k = {top_k}",
                        filter.len()
                    )));
                }
                for g in &malware_graphs {
                    if let Some((i, j, _)) = g.entries().find(|&(i, j, _)| !filter.contains(i, j)) {
                        return Err(Error::InvalidConfig(alloc::format!(
                            "reference graph {} has unselected edge {}",
                            g.source_id(),
                            alphabet.edge(i, j)
                        )));
                    }
                }
                Some(filter)
            }
            None => None,
        };
        Ok(Self {
            format_version: FORMAT_VERSION,
            top_k,
            threshold,
            alphabet,
            selected,
            malware_graphs,
        })
    }

    pub fn format_version(&self) -> u32 {
        self.format_version
    }

    pub fn top_k(&self) -> usize {
        self.top_k
    }

    pub fn threshold(&self) -> f64 {
        self.threshold
    }

    pub fn alphabet(&self) -> &Arc<OpcodeAlphabet> {
        &self.alphabet
    }

    pub fn is_pruned(&self) -> bool {
        self.selected.is_some()
    }

    pub fn filter(&self) -> Option<&EdgeFilter> {
        self.selected.as_ref()
    }

    pub fn selected_edges(&self) -> Option<BTreeSet<Edge>> {
        self.selected.as_ref().map(EdgeFilter::edges)
    }

    pub fn malware_graphs(&self) -> &[OpcodeGraph] {
        &self.malware_graphs
    }

    pub fn classify(&self, aggregate: f64) -> Label {
        if aggregate < self.threshold {
            Label::Malware
        } else {
            Label::Benign
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TrainConfig {
    pub top_k: usize,
    pub prune: bool,
    pub priors: ClassPriors,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            top_k: DEFAULT_TOP_K,
            prune: true,
            priors: ClassPriors::Equal,
        }
    }
}

#[derive(Debug, Clone)]
pub struct Trained {
    pub model: DetectorModel,
    pub fit: ThresholdFit,
    /// Present when pruning was on.
    pub ranking: Option<EdgeRanking>,
}

pub fn train(samples: &[LabeledSample], config: &TrainConfig) -> Result<Trained> {
    if config.top_k == 0 {
        return Err(Error::InvalidTopK);
    }
    let n_mal = samples.iter().filter(|s| s.label == Label::Malware).count();
    if n_mal == 0 {
        return Err(Error::SingleClassCorpus(Label::Benign));
    }
    if n_mal == samples.len() {
        return Err(Error::SingleClassCorpus(Label::Malware));
    }

    let alphabet = Arc::new(build_alphabet(samples.iter().map(|s| &s.sequence))?);
    let graphs = samples
        .iter()
        .map(|s| build_graph(&s.sequence, &alphabet))
        .collect::<Result<Vec<_>>>()?;
    let labels: Vec<Label> = samples.iter().map(|s| s.label).collect();

    let (filter, ranking) = if config.prune {
        let table = extract_features(&graphs, &labels)?;
        let ranking = rank_edges(&compute_scatter(&table, config.priors)?);
        (Some(ranking.top_filter(config.top_k)?), Some(ranking))
    } else {
        (None, None)
    };

    let (malware, benign): (Vec<_>, Vec<_>) = graphs.into_iter().zip(&labels).partition(|(_, &l)| l == Label::Malware);
    let malware: Vec<OpcodeGraph> = malware.into_iter().map(|(g, _)| g).collect();
    let benign: Vec<OpcodeGraph> = benign.into_iter().map(|(g, _)| g).collect();

    let fit = set_threshold(&malware, &benign, filter.as_ref())?;
    let references = match &filter {
        Some(f) => malware.iter().map(|g| g.restrict(f)).collect::<Result<Vec<_>>>()?,
        None => malware,
    };
    let model = DetectorModel {
        format_version: FORMAT_VERSION,
        top_k: config.top_k,
        threshold: fit.threshold,
        alphabet,
        selected: filter,
        malware_graphs: references,
    };
    Ok(Trained { model, fit, ranking })
}

#[derive(Debug, Clone, PartialEq)]
pub struct Verdict {
    pub source_id: String,
    pub label: Label,
    pub aggregate_score: f64,
    pub per_reference_scores: Vec<f64>,
    /// Tokens dropped because the model alphabet has no node for them.
    pub unknown_opcodes: usize,
}

pub fn predict(model: &DetectorModel, sequence: &OpcodeSequence, aggregation: Aggregation) -> Result<Verdict> {
    if sequence.is_empty() {
        return Err(Error::EmptySequence {
            source_id: sequence.source_id().into(),
        });
    }
    let (graph, unknown_opcodes) = build_graph_dropping_unknown(sequence, &model.alphabet);
    let per_reference_scores = model
        .malware_graphs
        .iter()
        .map(|r| score(r, &graph, model.selected.as_ref()))
        .collect::<Result<Vec<_>>>()?;
    let aggregate_score = aggregation.combine(&per_reference_scores);
    Ok(Verdict {
        source_id: sequence.source_id().into(),
        label: model.classify(aggregate_score),
        aggregate_score,
        per_reference_scores,
        unknown_opcodes,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::format;
    use alloc::vec;

    fn sample(id: &str, tokens: &[&str], label: Label) -> LabeledSample {
        LabeledSample::new(OpcodeSequence::from_strs(id, tokens).unwrap(), label, None)
    }

    #[test]
    fn separable_midpoint() {
        let fit = fit_threshold(&[1.0, 2.0], &[6.0, 8.0]).unwrap();
        assert_eq!(fit.threshold, 4.0);
        assert!(fit.separable);
        assert_eq!(fit.training_errors, 0);
        assert_eq!(fit.gap(), 4.0);
    }

    // Brute-force: count errors at each midpoint by direct comparison.
    fn brute_errors(m: &[f64], b: &[f64], t: f64) -> usize {
        m.iter().filter(|&&x| x >= t).count() + b.iter().filter(|&&x| x < t).count()
    }

    #[test]
    fn overlapping_scores_pick_lowest_best_cut() {
        let (m, b) = ([1.0, 5.0], [3.0, 8.0]);
        let errs: Vec<usize> = [2.0, 4.0, 6.5].iter().map(|&t| brute_errors(&m, &b, t)).collect();
        assert_eq!(errs, vec![1, 2, 1]);
        let fit = fit_threshold(&m, &b).unwrap();
        assert!(!fit.separable);
        assert_eq!(fit.threshold, 2.0);
        assert_eq!(fit.training_errors, 1);
    }

    #[test]
    fn all_equal_scores() {
        let fit = fit_threshold(&[0.0, 0.0], &[0.0]).unwrap();
        assert_eq!(fit.threshold, 0.0);
        assert!(!fit.separable);
    }

    #[test]
    fn degenerate_training() {
        let al = Arc::new(OpcodeAlphabet::from_tokens(["a"]));
        let g = OpcodeGraph::from_entries(al, "g", []).unwrap();
        assert_eq!(
            set_threshold(core::slice::from_ref(&g), core::slice::from_ref(&g), None),
            Err(Error::DegenerateTraining { malware: 1, benign: 1 })
        );
        assert!(set_threshold(&[g.clone(), g.clone()], &[], None).is_err());
    }

    #[test]
    fn aggregation_and_tie_rule() {
        assert_eq!(Aggregation::Mean.combine(&[2.0, 4.0]), 3.0);
        assert_eq!(Aggregation::Max.combine(&[2.0, 4.0]), 4.0);
        let al = Arc::new(OpcodeAlphabet::from_tokens(["a"]));
        let g = OpcodeGraph::from_entries(al.clone(), "g", []).unwrap();
        let model = DetectorModel::new(1, 4.0, al, None, vec![g]).unwrap();
        assert_eq!(model.classify(3.0), Label::Malware);
        assert_eq!(model.classify(6.0), Label::Benign);
        assert_eq!(model.classify(4.0), Label::Benign);
    }

    fn toy_corpus() -> Vec<LabeledSample> {
        // Malware always runs a->b; benign always runs a->c. Everything else is shared.
        let mut v = Vec::new();
        for i in 0..4 {
            let mut t = vec!["x", "a", "b", "y", "x", "y"];
            if i % 2 == 0 {
                t.push("x");
            }
            v.push(sample(&format!("m{i}"), &t, Label::Malware));
        }
        for i in 0..3 {
            let mut t = vec!["x", "a", "c", "y", "x", "y"];
            if i == 1 {
                t.push("x");
            }
            v.push(sample(&format!("b{i}"), &t, Label::Benign));
        }
        v
    }

    #[test]
    fn single_discriminating_edge_ranks_first() {
        // Only a->b separates the classes; benign files stop at `a`.
        let mut corpus = Vec::new();
        for i in 0..3 {
            corpus.push(sample(&format!("m{i}"), &["x", "y", "a", "b"], Label::Malware));
            corpus.push(sample(&format!("b{i}"), &["x", "y", "a"], Label::Benign));
        }
        let trained = train(
            &corpus,
            &TrainConfig {
                top_k: 1,
                ..TrainConfig::default()
            },
        )
        .unwrap();
        let ranking = trained.ranking.unwrap();
        assert_eq!(ranking.ranked()[0].edge, Edge::new("a", "b"));
        assert_eq!(ranking.ranked()[0].r, crate::lda::Discriminability::Perfect);
        assert!(ranking.ranked()[1..]
            .iter()
            .all(|e| e.r == crate::lda::Discriminability::Uninformative));
        assert_eq!(
            trained.model.selected_edges().unwrap(),
            [Edge::new("a", "b")].into_iter().collect()
        );
        assert!(trained.fit.separable);
        assert_eq!(trained.fit.threshold, 0.5);
    }

    #[test]
    fn training_data_is_classified_correctly_when_separable() {
        let corpus = toy_corpus();
        for prune in [true, false] {
            let trained = train(
                &corpus,
                &TrainConfig {
                    top_k: 3,
                    prune,
                    ..TrainConfig::default()
                },
            )
            .unwrap();
            if !trained.fit.separable {
                continue;
            }
            for s in &corpus {
                for agg in [Aggregation::Mean, Aggregation::Max] {
                    let v = predict(&trained.model, &s.sequence, agg).unwrap();
                    assert_eq!(v.label, s.label, "{} prune={prune} {agg:?}", s.source_id());
                }
            }
        }
    }

    #[test]
    fn stored_graphs_are_pruned() {
        let trained = train(
            &toy_corpus(),
            &TrainConfig {
                top_k: 2,
                ..TrainConfig::default()
            },
        )
        .unwrap();
        let f = trained.model.filter().unwrap();
        for g in trained.model.malware_graphs() {
            assert!(g.entries().all(|(i, j, _)| f.contains(i, j)));
        }
        assert_eq!(trained.model.malware_graphs().len(), 4);
    }

    #[test]
    fn predict_drops_unknown_opcodes() {
        let trained = train(&toy_corpus(), &TrainConfig::default()).unwrap();
        let s = OpcodeSequence::from_strs("q", &["x", "a", "zzz", "b", "y"]).unwrap();
        let v = predict(&trained.model, &s, Aggregation::Mean).unwrap();
        assert_eq!(v.unknown_opcodes, 1);
        assert_eq!(v.per_reference_scores.len(), 4);
        assert_eq!(v.label, Label::Malware);
        let empty = OpcodeSequence::from_strs("e", &[]).unwrap();
        assert!(matches!(
            predict(&trained.model, &empty, Aggregation::Mean),
            Err(Error::EmptySequence { .. })
        ));
    }

    #[test]
    fn train_guards() {
        let benign_only: Vec<_> = toy_corpus().into_iter().filter(|s| s.label == Label::Benign).collect();
        assert_eq!(
            train(&benign_only, &TrainConfig::default()).unwrap_err(),
            Error::SingleClassCorpus(Label::Benign)
        );
        let one_malware: Vec<_> = toy_corpus().into_iter().skip(3).collect();
        assert!(matches!(
            train(&one_malware, &TrainConfig::default()),
            Err(Error::DegenerateTraining { malware: 1, .. })
        ));
        assert!(train(
            &toy_corpus(),
            &TrainConfig {
                top_k: 0,
                ..TrainConfig::default()
            }
        )
        .is_err());
    }

    #[test]
    fn model_invariants_checked() {
        let trained = train(
            &toy_corpus(),
            &TrainConfig {
                top_k: 2,
                ..TrainConfig::default()
            },
        )
        .unwrap();
        let m = &trained.model;
        let edges = m.selected_edges().unwrap();
        assert!(DetectorModel::new(
            1,
            1.0,
            m.alphabet().clone(),
            Some(edges.clone()),
            m.malware_graphs().to_vec()
        )
        .is_err());
        assert!(DetectorModel::new(
            2,
            -1.0,
            m.alphabet().clone(),
            Some(edges.clone()),
            m.malware_graphs().to_vec()
        )
        .is_err());
        let rebuilt = DetectorModel::new(
            2,
            m.threshold(),
            m.alphabet().clone(),
            Some(edges),
            m.malware_graphs().to_vec(),
        )
        .unwrap();
        assert_eq!(&rebuilt, m);
    }
}
