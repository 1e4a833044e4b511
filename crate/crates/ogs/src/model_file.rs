//! Versioned JSON detector models.
//!
//! ```json
//! {"alphabet":["add","mov"],
//!  "malware_graphs":[{"edges":[["add","mov",1.0]],"source_id":"w1"}],
//!  "selected_edges":[["add","mov"]],
//!  "threshold":0.25,"top_k":50,"version":1}
//! ```
//!
//! Keys are written in lexicographic order and weights use the shortest
//! decimal form that parses back to the same `f64`, so save/load/save is
//! byte-stable. `selected_edges` is `null` for an unpruned model.

use std::collections::BTreeSet;
use std::fs;
use std::io;
use std::path::Path;
use std::sync::Arc;

use ogs_core::detector::FORMAT_VERSION;
use ogs_core::{DetectorModel, Edge, OpcodeAlphabet, OpcodeGraph};
use serde::{Deserialize, Serialize};

#[derive(Debug, thiserror::Error)]
pub enum ModelError {
    #[error("model format version {found} is not supported (expected {expected})")]
    FormatVersionMismatch { found: u64, expected: u32 },
    #[error("model schema error at `{path}`: {message}")]
    SchemaError { path: String, message: String },
    #[error("cannot access model file: {0}")]
    Io(#[from] io::Error),
}

fn schema(path: impl Into<String>, message: impl ToString) -> ModelError {
    ModelError::SchemaError {
        path: path.into(),
        message: message.to_string(),
    }
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ModelDoc {
    version: u64,
    top_k: usize,
    threshold: f64,
    alphabet: Vec<String>,
    selected_edges: Option<Vec<(String, String)>>,
    malware_graphs: Vec<GraphDoc>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct GraphDoc {
    source_id: String,
    edges: Vec<(String, String, f64)>,
}

pub fn to_json(model: &DetectorModel) -> String {
    let alphabet = model.alphabet();
    let doc = ModelDoc {
        version: u64::from(model.format_version()),
        top_k: model.top_k(),
        threshold: model.threshold(),
        alphabet: alphabet.opcodes().to_vec(),
        selected_edges: model.filter().map(|f| {
            f.pairs()
                .iter()
                .map(|&(i, j)| (alphabet.token(i).to_owned(), alphabet.token(j).to_owned()))
                .collect()
        }),
        malware_graphs: model
            .malware_graphs()
            .iter()
            .map(|g| GraphDoc {
                source_id: g.source_id().to_owned(),
                edges: g
                    .entries()
                    .map(|(i, j, w)| (alphabet.token(i).to_owned(), alphabet.token(j).to_owned(), w))
                    .collect(),
            })
            .collect(),
    };
    // Going through `Value` sorts object keys.
    let value = serde_json::to_value(&doc).expect("model serializes");
    let mut out = serde_json::to_string(&value).expect("value serializes");
    out.push('\n');
    out
}

pub fn from_json(text: &str) -> Result<DetectorModel, ModelError> {
    let value: serde_json::Value = serde_json::from_str(text).map_err(|e| schema("", e))?;
    let version = value.get("version").ok_or_else(|| schema("version", "missing field"))?;
    let version = version
        .as_u64()
        .ok_or_else(|| schema("version", "expected an unsigned integer"))?;
    if version != u64::from(FORMAT_VERSION) {
        return Err(ModelError::FormatVersionMismatch {
            found: version,
            expected: FORMAT_VERSION,
        });
    }
    let doc: ModelDoc = serde_path_to_error::deserialize(value).map_err(|e| schema(e.path().to_string(), e.inner()))?;

    for (i, w) in doc.alphabet.windows(2).enumerate() {
        if w[0] >= w[1] {
            return Err(schema(
                format!("alphabet[{}]", i + 1),
                "opcodes must be sorted and distinct",
            ));
        }
    }
    let alphabet = Arc::new(OpcodeAlphabet::from_tokens(doc.alphabet.iter()));
    let lookup = |path: String, token: &str| {
        alphabet
            .index_of(token)
            .ok_or_else(|| schema(path, format!("opcode `{token}` is not in the alphabet")))
    };

    let mut graphs = Vec::with_capacity(doc.malware_graphs.len());
    for (g, graph) in doc.malware_graphs.iter().enumerate() {
        let mut entries = Vec::with_capacity(graph.edges.len());
        for (e, (from, to, w)) in graph.edges.iter().enumerate() {
            let path = format!("malware_graphs[{g}].edges[{e}]");
            lookup(path.clone(), from)?;
            lookup(path, to)?;
            entries.push((Edge::new(from.clone(), to.clone()), *w));
        }
        let built = OpcodeGraph::from_entries(alphabet.clone(), graph.source_id.clone(), entries)
            .map_err(|e| schema(format!("malware_graphs[{g}]"), e))?;
        graphs.push(built);
    }

    let selected = match &doc.selected_edges {
        None => None,
        Some(edges) => {
            let mut set = BTreeSet::new();
            for (e, (from, to)) in edges.iter().enumerate() {
                let path = format!("selected_edges[{e}]");
                lookup(path.clone(), from)?;
                lookup(path.clone(), to)?;
                if !set.insert(Edge::new(from.clone(), to.clone())) {
                    return Err(schema(path, "duplicate edge"));
                }
            }
            Some(set)
        }
    };
    DetectorModel::new(doc.top_k, doc.threshold, alphabet, selected, graphs).map_err(|e| schema("", e))
}

pub fn save(model: &DetectorModel, path: &Path) -> Result<(), ModelError> {
    fs::write(path, to_json(model))?;
    Ok(())
}

pub fn load(path: &Path) -> Result<DetectorModel, ModelError> {
    from_json(&fs::read_to_string(path)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use ogs_core::{train, Label, LabeledSample, OpcodeSequence, TrainConfig};

    fn sample(id: &str, text: &str, label: Label) -> LabeledSample {
        let tokens: Vec<&str> = text.split(' ').collect();
        LabeledSample::new(OpcodeSequence::from_strs(id, &tokens).unwrap(), label, None)
    }

    fn corpus() -> Vec<LabeledSample> {
        vec![
            sample("m1", "push mov add mov sub pop ret", Label::Malware),
            sample("m2", "push mov add mov add pop ret", Label::Malware),
            sample("m3", "push mov sub mov add pop ret", Label::Malware),
            sample("b1", "xor xor call cmp jz ret", Label::Benign),
            sample("b2", "call xor cmp jz jz ret", Label::Benign),
        ]
    }

    fn model(prune: bool) -> DetectorModel {
        let config = TrainConfig {
            top_k: 5,
            prune,
            ..TrainConfig::default()
        };
        train(&corpus(), &config).unwrap().model
    }

    #[test]
    fn round_trip_is_exact_and_stable() {
        for prune in [true, false] {
            let m = model(prune);
            let text = to_json(&m);
            let back = from_json(&text).unwrap();
            assert_eq!(back, m);
            assert_eq!(to_json(&back), text);
        }
    }

    #[test]
    fn keys_are_sorted_and_unpruned_is_null() {
        let text = to_json(&model(false));
        let keys = [
            "\"alphabet\"",
            "\"malware_graphs\"",
            "\"selected_edges\"",
            "\"threshold\"",
            "\"top_k\"",
            "\"version\"",
        ];
        let pos: Vec<usize> = keys.iter().map(|k| text.find(k).unwrap()).collect();
        assert!(pos.windows(2).all(|w| w[0] < w[1]));
        assert!(text.contains("\"selected_edges\":null"));
    }

    #[test]
    fn version_mismatch() {
        let text = to_json(&model(true)).replace("\"version\":1", "\"version\":2");
        assert!(matches!(
            from_json(&text),
            Err(ModelError::FormatVersionMismatch { found: 2, expected: 1 })
        ));
    }

    #[test]
    fn truncated_file_is_schema_error() {
        let text = to_json(&model(true));
        let cut = &text[..text.len() / 2];
        assert!(matches!(from_json(cut), Err(ModelError::SchemaError { .. })));
    }

    #[test]
    fn schema_error_names_the_field() {
        let text = to_json(&model(true)).replace("\"top_k\":5", "\"top_k\":\"five\"");
        match from_json(&text) {
            Err(ModelError::SchemaError { path, .. }) => assert_eq!(path, "top_k"),
            other => panic!("{other:?}"),
        }
        let mut v: serde_json::Value = serde_json::from_str(&to_json(&model(true))).unwrap();
        v["malware_graphs"][1]["edges"][0][1] = "bogus".into();
        match from_json(&v.to_string()) {
            Err(ModelError::SchemaError { path, .. }) => assert_eq!(path, "malware_graphs[1].edges[0]"),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn odd_weights_survive() {
        let alphabet = Arc::new(OpcodeAlphabet::from_tokens(["a", "b", "c"]));
        let w = [1.0 / 3.0, 0.1 + 0.2, 1.0 - 1.0 / 3.0 - (0.1 + 0.2)];
        let g = OpcodeGraph::from_entries(
            alphabet.clone(),
            "g",
            [
                (Edge::new("a", "a"), w[0]),
                (Edge::new("a", "b"), w[1]),
                (Edge::new("a", "c"), w[2]),
                (Edge::new("c", "b"), 1.0),
            ],
        )
        .unwrap();
        let m = DetectorModel::new(3, 0.1 + 0.7, alphabet, None, vec![g]).unwrap();
        let back = from_json(&to_json(&m)).unwrap();
        assert_eq!(back.threshold().to_bits(), (0.1f64 + 0.7).to_bits());
        for (a, b) in m.malware_graphs()[0].entries().zip(back.malware_graphs()[0].entries()) {
            assert_eq!(a.2.to_bits(), b.2.to_bits());
        }
    }
}
