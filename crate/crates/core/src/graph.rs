//! Opcode transition graphs and the pairwise dissimilarity score.
//!
//! Nodes are the opcodes of a shared, lexicographically ordered alphabet.
//! The weight of edge `i -> j` is the fraction of `i`'s outgoing transitions
//! that go to `j`, so every row either sums to one or is entirely zero.
//! Rows are stored sparsely as `(column, weight)` pairs sorted by column.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::string::String;
use alloc::sync::Arc;
use alloc::vec::Vec;
use core::fmt;

use crate::corpus::OpcodeSequence;
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OpcodeAlphabet {
    opcodes: Vec<String>,
    index: BTreeMap<String, usize>,
}

impl OpcodeAlphabet {
    /// Sorted, deduplicated alphabet over `tokens`. May be empty.
    pub fn from_tokens<I, S>(tokens: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        let set: BTreeSet<String> = tokens.into_iter().map(Into::into).collect();
        let opcodes: Vec<String> = set.into_iter().collect();
        let index = opcodes.iter().enumerate().map(|(i, t)| (t.clone(), i)).collect();
        Self { opcodes, index }
    }

    pub fn len(&self) -> usize {
        self.opcodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.opcodes.is_empty()
    }

    pub fn opcodes(&self) -> &[String] {
        &self.opcodes
    }

    pub fn index_of(&self, token: &str) -> Option<usize> {
        self.index.get(token).copied()
    }

    pub fn token(&self, i: usize) -> &str {
        &self.opcodes[i]
    }

    pub fn edge(&self, from: usize, to: usize) -> Edge {
        Edge::new(self.token(from), self.token(to))
    }

    pub fn resolve(&self, edge: &Edge) -> Option<(usize, usize)> {
        Some((self.index_of(&edge.from)?, self.index_of(&edge.to)?))
    }
}

/// Sorted union of all tokens of `sequences`.
pub fn build_alphabet<'a, I>(sequences: I) -> Result<OpcodeAlphabet>
where
    I: IntoIterator<Item = &'a OpcodeSequence>,
{
    let alphabet = OpcodeAlphabet::from_tokens(sequences.into_iter().flat_map(|s| s.tokens().iter().cloned()));
    if alphabet.is_empty() {
        return Err(Error::EmptyAlphabet);
    }
    Ok(alphabet)
}

/// A directed edge named by its endpoint opcodes. Orders by `(from, to)`,
/// which matches row-major order over a lexicographic alphabet.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Edge {
    pub from: String,
    pub to: String,
}

impl Edge {
    pub fn new(from: impl Into<String>, to: impl Into<String>) -> Self {
        Self {
            from: from.into(),
            to: to.into(),
        }
    }
}

impl fmt::Display for Edge {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}->{}", self.from, self.to)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct OpcodeGraph {
    alphabet: Arc<OpcodeAlphabet>,
    rows: Vec<Vec<(usize, f64)>>,
    source_id: String,
}

impl OpcodeGraph {
    /// Rebuilds a graph from explicit `(from, to, weight)` entries, e.g. a
    /// stored pruned reference graph. Entries must be in the alphabet, weights
    /// in `[0, 1]`; zero weights are dropped and no row sum is enforced.
    pub fn from_entries<I>(alphabet: Arc<OpcodeAlphabet>, source_id: impl Into<String>, entries: I) -> Result<Self>
    where
        I: IntoIterator<Item = (Edge, f64)>,
    {
        let mut rows = alloc::vec![Vec::new(); alphabet.len()];
        let mut seen = BTreeMap::new();
        for (edge, w) in entries {
            let (i, j) = alphabet
                .resolve(&edge)
                .ok_or_else(|| Error::EdgeOutsideAlphabet(edge.clone()))?;
            if !(0.0..=1.0).contains(&w) {
                return Err(Error::InvalidConfig(alloc::format!(
                    "weight {w} of edge {edge} outside [0, 1]"
                )));
            }
            if seen.insert((i, j), w).is_some() {
                return Err(Error::InvalidConfig(alloc::format!("duplicate edge {edge}")));
            }
        }
        for ((i, j), w) in seen {
            if w != 0.0 {
                rows[i].push((j, w));
            }
        }
        Ok(Self {
            alphabet,
            rows,
            source_id: source_id.into(),
        })
    }

    pub fn alphabet(&self) -> &Arc<OpcodeAlphabet> {
        &self.alphabet
    }

    pub fn source_id(&self) -> &str {
        &self.source_id
    }

    pub fn size(&self) -> usize {
        self.rows.len()
    }

    /// Nonzero entries of row `i`, sorted by column.
    pub fn row(&self, i: usize) -> &[(usize, f64)] {
        &self.rows[i]
    }

    pub fn weight(&self, from: usize, to: usize) -> f64 {
        let row = &self.rows[from];
        match row.binary_search_by_key(&to, |&(j, _)| j) {
            Ok(pos) => row[pos].1,
            Err(_) => 0.0,
        }
    }

    pub fn weight_of(&self, edge: &Edge) -> f64 {
        self.alphabet.resolve(edge).map_or(0.0, |(i, j)| self.weight(i, j))
    }

    /// Nonzero entries in row-major order.
    pub fn entries(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        self.rows
            .iter()
            .enumerate()
            .flat_map(|(i, row)| row.iter().map(move |&(j, w)| (i, j, w)))
    }

    pub fn edge_count(&self) -> usize {
        self.rows.iter().map(Vec::len).sum()
    }

    /// Keeps only the entries on `filter`. Rows are not re-normalized.
    pub fn restrict(&self, filter: &EdgeFilter) -> Result<Self> {
        check_filter(&self.alphabet, filter)?;
        let mut rows = alloc::vec![Vec::new(); self.rows.len()];
        for &(i, j) in filter.pairs() {
            let w = self.weight(i, j);
            if w != 0.0 {
                rows[i].push((j, w));
            }
        }
        Ok(Self {
            alphabet: self.alphabet.clone(),
            rows,
            source_id: self.source_id.clone(),
        })
    }

    pub fn to_dense(&self) -> Vec<Vec<f64>> {
        let n = self.size();
        let mut m = alloc::vec![alloc::vec![0.0; n]; n];
        for (i, j, w) in self.entries() {
            m[i][j] = w;
        }
        m
    }
}

/// Transition-probability graph of `sequence` over `alphabet`.
///
/// A sequence of length `L` contributes `L - 1` transitions.
pub fn build_graph(sequence: &OpcodeSequence, alphabet: &Arc<OpcodeAlphabet>) -> Result<OpcodeGraph> {
    let idx = sequence
        .tokens()
        .iter()
        .map(|t| alphabet.index_of(t).ok_or_else(|| Error::UnknownOpcode(t.clone())))
        .collect::<Result<Vec<_>>>()?;
    Ok(graph_from_indices(&idx, alphabet, sequence.source_id()))
}

/// Like [`build_graph`] but drops tokens outside the alphabet first, so the
/// neighbours of a dropped token become consecutive. Returns the drop count.
pub fn build_graph_dropping_unknown(sequence: &OpcodeSequence, alphabet: &Arc<OpcodeAlphabet>) -> (OpcodeGraph, usize) {
    let idx: Vec<usize> = sequence.tokens().iter().filter_map(|t| alphabet.index_of(t)).collect();
    let dropped = sequence.len() - idx.len();
    (graph_from_indices(&idx, alphabet, sequence.source_id()), dropped)
}

fn graph_from_indices(idx: &[usize], alphabet: &Arc<OpcodeAlphabet>, source_id: &str) -> OpcodeGraph {
    let mut counts: Vec<BTreeMap<usize, u64>> = alloc::vec![BTreeMap::new(); alphabet.len()];
    for pair in idx.windows(2) {
        *counts[pair[0]].entry(pair[1]).or_insert(0) += 1;
    }
    let rows = counts
        .into_iter()
        .map(|row| {
            let total: u64 = row.values().sum();
            row.into_iter().map(|(j, c)| (j, c as f64 / total as f64)).collect()
        })
        .collect();
    OpcodeGraph {
        alphabet: alphabet.clone(),
        rows,
        source_id: source_id.into(),
    }
}

/// A non-empty set of edges resolved to index pairs of one alphabet, kept in
/// row-major order.
#[derive(Debug, Clone, PartialEq)]
pub struct EdgeFilter {
    alphabet: Arc<OpcodeAlphabet>,
    pairs: Vec<(usize, usize)>,
}

impl EdgeFilter {
    pub fn resolve<'a, I>(alphabet: &Arc<OpcodeAlphabet>, edges: I) -> Result<Self>
    where
        I: IntoIterator<Item = &'a Edge>,
    {
        let pairs = edges
            .into_iter()
            .map(|e| alphabet.resolve(e).ok_or_else(|| Error::EdgeOutsideAlphabet(e.clone())))
            .collect::<Result<BTreeSet<_>>>()?;
        Self::from_pairs(alphabet, pairs)
    }

    pub fn from_pairs<I>(alphabet: &Arc<OpcodeAlphabet>, pairs: I) -> Result<Self>
    where
        I: IntoIterator<Item = (usize, usize)>,
    {
        let n = alphabet.len();
        let set: BTreeSet<(usize, usize)> = pairs.into_iter().collect();
        if let Some(&(i, j)) = set.iter().find(|&&(i, j)| i >= n || j >= n) {
            return Err(Error::InvalidConfig(alloc::format!(
                "edge index ({i}, {j}) outside alphabet of size {n}"
            )));
        }
        if set.is_empty() {
            return Err(Error::EmptyFilter);
        }
        Ok(Self {
            alphabet: alphabet.clone(),
            pairs: set.into_iter().collect(),
        })
    }

    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }

    pub fn pairs(&self) -> &[(usize, usize)] {
        &self.pairs
    }

    pub fn contains(&self, from: usize, to: usize) -> bool {
        self.pairs.binary_search(&(from, to)).is_ok()
    }

    pub fn edges(&self) -> BTreeSet<Edge> {
        self.pairs.iter().map(|&(i, j)| self.alphabet.edge(i, j)).collect()
    }
}

fn same_alphabet(a: &Arc<OpcodeAlphabet>, b: &Arc<OpcodeAlphabet>) -> bool {
    Arc::ptr_eq(a, b) || a == b
}

fn check_filter(alphabet: &Arc<OpcodeAlphabet>, filter: &EdgeFilter) -> Result<()> {
    if same_alphabet(alphabet, &filter.alphabet) {
        Ok(())
    } else {
        Err(Error::AlphabetMismatch)
    }
}

/// Dissimilarity `(sum |a_ij - b_ij|)^2 / N^2` over the whole alphabet, or
/// `(sum over filter)^2 / K^2` when a filter of `K` edges is given.
///
/// Terms are accumulated row-major in alphabet order, so the result is
/// bit-reproducible and symmetric in `a` and `b`.
pub fn score(a: &OpcodeGraph, b: &OpcodeGraph, filter: Option<&EdgeFilter>) -> Result<f64> {
    if !same_alphabet(&a.alphabet, &b.alphabet) {
        return Err(Error::AlphabetMismatch);
    }
    let (sum, count) = match filter {
        Some(filter) => {
            check_filter(&a.alphabet, filter)?;
            let sum = filter
                .pairs
                .iter()
                .fold(0.0, |acc, &(i, j)| acc + (a.weight(i, j) - b.weight(i, j)).abs());
            (sum, filter.len())
        }
        None => {
            let mut sum = 0.0;
            for (ra, rb) in a.rows.iter().zip(&b.rows) {
                sum += row_l1(ra, rb);
            }
            (sum, a.size())
        }
    };
    let k = count as f64;
    Ok(sum * sum / (k * k))
}

// Sum of |x - y| over the union of two sorted sparse rows, in column order.
fn row_l1(a: &[(usize, f64)], b: &[(usize, f64)]) -> f64 {
    let (mut p, mut q) = (0, 0);
    let mut sum = 0.0;
    while p < a.len() || q < b.len() {
        let ja = a.get(p).map_or(usize::MAX, |e| e.0);
        let jb = b.get(q).map_or(usize::MAX, |e| e.0);
        if ja == jb {
            sum += (a[p].1 - b[q].1).abs();
            p += 1;
            q += 1;
        } else if ja < jb {
            sum += a[p].1.abs();
            p += 1;
        } else {
            sum += b[q].1.abs();
            q += 1;
        }
    }
    sum
}
