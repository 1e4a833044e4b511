//! Opcode graph similarity (OGS) with discriminant edge pruning.
//!
//! A program is reduced to its opcode sequence, the sequence to a weighted
//! directed transition graph, and two graphs are compared with a normalized
//! squared L1 dissimilarity. Training ranks every observed edge by a
//! two-class scatter ratio, keeps the top-K, and fixes a decision threshold
//! from all malware/malware and benign/malware pair scores. Prediction
//! averages the pruned score of a new file against every stored malware
//! graph and compares it to that threshold.
//!
//! The crate is `no_std` and needs only `alloc`. File formats, corpus
//! loading, model persistence and the CLI live in the `ogs` crate.

#![no_std]
#![forbid(unsafe_code)]

extern crate alloc;
#[cfg(test)]
extern crate std;

pub mod corpus;
pub mod detector;
pub mod error;
pub mod eval;
pub mod graph;
pub mod lda;
pub mod morphgen;

pub use corpus::{parse_opcode_file, Label, LabeledSample, OpcodeSequence};
pub use detector::{
    predict, set_threshold, train, Aggregation, DetectorModel, ThresholdFit, TrainConfig, Trained, Verdict,
};
pub use error::{Error, Result};
pub use eval::{
    kfold_split, mean_fold_accuracy, mma, run_experiment, run_experiment_with_holdout, total_accuracy, ConfusionCounts,
    ExperimentConfig, FamilyAccuracy, FoldResult, Partition, PassReport, SampleVerdict,
};
pub use graph::{build_alphabet, build_graph, score, Edge, EdgeFilter, OpcodeAlphabet, OpcodeGraph};
pub use lda::{
    compute_scatter, extract_features, rank_edges, select_top_edges, ClassPriors, Discriminability, EdgeFeatureTable,
    EdgeRanking, EdgeScatter, RankedEdge, ScatterStats,
};
pub use morphgen::{mutate, AliasTable, BenignSampler, MorphConfig, Mutation, WormSampler};
