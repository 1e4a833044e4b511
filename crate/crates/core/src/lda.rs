//! Two-class scatter ranking of graph edges.
//!
//! Every edge seen in any training graph is a scalar feature whose value in a
//! sample is that sample's transition weight (zero when absent). Per edge:
//!
//! ```text
//! m_k = mean of class-k values
//! S_k = sum over class k of (x - m_k)^2
//! s_w = P_mal * S_mal + P_ben * S_ben
//! m   = (N_mal * m_mal + N_ben * m_ben) / (N_mal + N_ben)
//! s_b = N_mal * (m_mal - m)^2 + N_ben * (m_ben - m)^2
//! R   = (s_w + s_b) / s_w
//! ```
//!
//! Edges are kept in descending `R` order. `s_w = 0` has its own tiers: a
//! perfectly separating edge (`s_b > 0`) outranks every finite `R`, a
//! constant edge (`s_b = 0`) sorts last.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::sync::Arc;
use alloc::vec::Vec;
use core::cmp::Ordering;

use crate::corpus::Label;
use crate::error::{Error, Result};
use crate::graph::{Edge, EdgeFilter, OpcodeAlphabet, OpcodeGraph};

/// Sample-by-edge weight matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct EdgeFeatureTable {
    alphabet: Arc<OpcodeAlphabet>,
    edges: Vec<(usize, usize)>,
    values: Vec<Vec<f64>>,
    labels: Vec<Label>,
}

impl EdgeFeatureTable {
    /// Builds a table from raw columns; `values[r]` must have one entry per edge.
    pub fn new(
        alphabet: Arc<OpcodeAlphabet>,
        edges: Vec<(usize, usize)>,
        values: Vec<Vec<f64>>,
        labels: Vec<Label>,
    ) -> Result<Self> {
        let n = alphabet.len();
        if let Some(&(i, j)) = edges.iter().find(|&&(i, j)| i >= n || j >= n) {
            return Err(Error::InvalidConfig(alloc::format!(
                "edge ({i}, {j}) outside an alphabet of {n}"
            )));
        }
        if values.len() != labels.len() || values.iter().any(|row| row.len() != edges.len()) {
            return Err(Error::InvalidConfig(
                "feature table shape does not match edges and labels".into(),
            ));
        }
        Ok(Self {
            alphabet,
            edges,
            values,
            labels,
        })
    }

    pub fn alphabet(&self) -> &Arc<OpcodeAlphabet> {
        &self.alphabet
    }

    /// Feature universe as index pairs, row-major.
    pub fn edge_pairs(&self) -> &[(usize, usize)] {
        &self.edges
    }

    pub fn edges(&self) -> Vec<Edge> {
        self.edges.iter().map(|&(i, j)| self.alphabet.edge(i, j)).collect()
    }

    /// `values()[r][c]` is the weight of edge `c` in sample `r`.
    pub fn values(&self) -> &[Vec<f64>] {
        &self.values
    }

    pub fn labels(&self) -> &[Label] {
        &self.labels
    }

    pub fn column(&self, c: usize) -> impl Iterator<Item = (Label, f64)> + '_ {
        self.values.iter().zip(&self.labels).map(move |(row, &l)| (l, row[c]))
    }
}

pub fn extract_features(graphs: &[OpcodeGraph], labels: &[Label]) -> Result<EdgeFeatureTable> {
    if graphs.len() != labels.len() {
        return Err(Error::InvalidConfig(alloc::format!(
            "{} graphs but {} labels",
            graphs.len(),
            labels.len()
        )));
    }
    let Some(first) = graphs.first() else {
        return Err(Error::InvalidConfig("no training graphs".into()));
    };
    for label in [Label::Malware, Label::Benign] {
        if labels.iter().all(|&l| l == label) {
            return Err(Error::SingleClassCorpus(label));
        }
    }
    let alphabet = first.alphabet().clone();
    if graphs.iter().any(|g| **g.alphabet() != *alphabet) {
        return Err(Error::AlphabetMismatch);
    }

    let universe: BTreeSet<(usize, usize)> = graphs
        .iter()
        .flat_map(|g| g.entries().map(|(i, j, _)| (i, j)))
        .collect();
    let edges: Vec<(usize, usize)> = universe.into_iter().collect();
    let column: BTreeMap<(usize, usize), usize> = edges.iter().enumerate().map(|(c, &e)| (e, c)).collect();

    let values = graphs
        .iter()
        .map(|g| {
            let mut row = alloc::vec![0.0; edges.len()];
            for (i, j, w) in g.entries() {
                row[column[&(i, j)]] = w;
            }
            row
        })
        .collect();

    Ok(EdgeFeatureTable {
        alphabet,
        edges,
        values,
        labels: labels.to_vec(),
    })
}

/// Class prior weights used in the within-class sum.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "lowercase"))]
pub enum ClassPriors {
    /// `P = 0.5` for both classes regardless of imbalance.
    #[default]
    Equal,
    /// `P_k = N_k / N`.
    Empirical,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EdgeScatter {
    pub from: usize,
    pub to: usize,
    pub mean_malware: f64,
    pub mean_benign: f64,
    pub overall_mean: f64,
    pub s_w: f64,
    pub s_b: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScatterStats {
    pub alphabet: Arc<OpcodeAlphabet>,
    pub malware_count: usize,
    pub benign_count: usize,
    pub edges: Vec<EdgeScatter>,
}

// Exact when every value is equal, so constant features get zero scatter.
fn mean(values: &[f64]) -> f64 {
    let first = values[0];
    if values.iter().all(|&v| v == first) {
        first
    } else {
        values.iter().sum::<f64>() / values.len() as f64
    }
}

fn squared_deviation(values: &[f64], m: f64) -> f64 {
    values.iter().map(|&x| (x - m) * (x - m)).sum()
}

pub fn compute_scatter(table: &EdgeFeatureTable, priors: ClassPriors) -> Result<ScatterStats> {
    let n_mal = table.labels.iter().filter(|&&l| l == Label::Malware).count();
    let n_ben = table.labels.len() - n_mal;
    if n_mal == 0 {
        return Err(Error::SingleClassCorpus(Label::Benign));
    }
    if n_ben == 0 {
        return Err(Error::SingleClassCorpus(Label::Malware));
    }
    let total = (n_mal + n_ben) as f64;
    let (p_mal, p_ben) = match priors {
        ClassPriors::Equal => (0.5, 0.5),
        ClassPriors::Empirical => (n_mal as f64 / total, n_ben as f64 / total),
    };

    let mut mal = Vec::with_capacity(n_mal);
    let mut ben = Vec::with_capacity(n_ben);
    let edges = table
        .edges
        .iter()
        .enumerate()
        .map(|(c, &(from, to))| {
            mal.clear();
            ben.clear();
            for (label, x) in table.column(c) {
                match label {
                    Label::Malware => mal.push(x),
                    Label::Benign => ben.push(x),
                }
            }
            let m_mal = mean(&mal);
            let m_ben = mean(&ben);
            let m = if m_mal == m_ben {
                m_mal
            } else {
                (n_mal as f64 * m_mal + n_ben as f64 * m_ben) / total
            };
            let s_w = p_mal * squared_deviation(&mal, m_mal) + p_ben * squared_deviation(&ben, m_ben);
            let s_b = n_mal as f64 * (m_mal - m) * (m_mal - m) + n_ben as f64 * (m_ben - m) * (m_ben - m);
            EdgeScatter {
                from,
                to,
                mean_malware: m_mal,
                mean_benign: m_ben,
                overall_mean: m,
                s_w,
                s_b,
            }
        })
        .collect();

    Ok(ScatterStats {
        alphabet: table.alphabet.clone(),
        malware_count: n_mal,
        benign_count: n_ben,
        edges,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Discriminability {
    /// `s_w = 0` and `s_b > 0`.
    Perfect,
    Finite(f64),
    /// `s_w = 0` and `s_b = 0`.
    Uninformative,
}

impl Discriminability {
    pub fn of(s_w: f64, s_b: f64) -> Self {
        if s_w > 0.0 {
            Discriminability::Finite((s_w + s_b) / s_w)
        } else if s_b > 0.0 {
            Discriminability::Perfect
        } else {
            Discriminability::Uninformative
        }
    }

    /// `R` as a float: infinite for perfect edges, NaN for constant ones.
    pub fn value(self) -> f64 {
        match self {
            Discriminability::Perfect => f64::INFINITY,
            Discriminability::Finite(r) => r,
            Discriminability::Uninformative => f64::NAN,
        }
    }

    fn tier(self) -> u8 {
        match self {
            Discriminability::Perfect => 0,
            Discriminability::Finite(_) => 1,
            Discriminability::Uninformative => 2,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RankedEdge {
    pub edge: Edge,
    pub from: usize,
    pub to: usize,
    pub s_w: f64,
    pub s_b: f64,
    pub r: Discriminability,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EdgeRanking {
    alphabet: Arc<OpcodeAlphabet>,
    ranked: Vec<RankedEdge>,
}

impl EdgeRanking {
    pub fn alphabet(&self) -> &Arc<OpcodeAlphabet> {
        &self.alphabet
    }

    pub fn ranked(&self) -> &[RankedEdge] {
        &self.ranked
    }

    pub fn len(&self) -> usize {
        self.ranked.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ranked.is_empty()
    }

    /// The top `k` edges as a scoring filter.
    pub fn top_filter(&self, k: usize) -> Result<EdgeFilter> {
        if k == 0 {
            return Err(Error::InvalidTopK);
        }
        EdgeFilter::from_pairs(&self.alphabet, self.ranked.iter().take(k).map(|e| (e.from, e.to)))
    }
}

fn rank_order(a: &RankedEdge, b: &RankedEdge) -> Ordering {
    a.r.tier()
        .cmp(&b.r.tier())
        .then_with(|| match (a.r, b.r) {
            (Discriminability::Finite(x), Discriminability::Finite(y)) => y.total_cmp(&x),
            (Discriminability::Perfect, Discriminability::Perfect) => b.s_b.total_cmp(&a.s_b),
            _ => Ordering::Equal,
        })
        .then_with(|| (a.from, a.to).cmp(&(b.from, b.to)))
}

pub fn rank_edges(stats: &ScatterStats) -> EdgeRanking {
    let mut ranked: Vec<RankedEdge> = stats
        .edges
        .iter()
        .map(|e| RankedEdge {
            edge: stats.alphabet.edge(e.from, e.to),
            from: e.from,
            to: e.to,
            s_w: e.s_w,
            s_b: e.s_b,
            r: Discriminability::of(e.s_w, e.s_b),
        })
        .collect();
    ranked.sort_by(rank_order);
    EdgeRanking {
        alphabet: stats.alphabet.clone(),
        ranked,
    }
}

/// The first `min(k, |ranking|)` edges.
pub fn select_top_edges(ranking: &EdgeRanking, k: usize) -> Result<BTreeSet<Edge>> {
    if k == 0 {
        return Err(Error::InvalidTopK);
    }
    Ok(ranking.ranked.iter().take(k).map(|e| e.edge.clone()).collect())
}
