//! JSON-lines corpus manifests.
//!
//! Each non-blank line is an object `{"path": ..., "label": "malware" |
//! "benign", "family": ...}` with `family` optional. Relative paths resolve
//! against the manifest's directory.

use std::fs;
use std::io;
use std::path::{Path, PathBuf};

use ogs_core::{parse_opcode_file, Label, LabeledSample};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ManifestEntry {
    pub path: String,
    pub label: Label,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub family: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CorpusManifest {
    pub root: PathBuf,
    pub entries: Vec<ManifestEntry>,
}

#[derive(Debug, thiserror::Error)]
pub enum ManifestError {
    #[error("cannot read manifest {path}: {source}")]
    Io { path: PathBuf, source: io::Error },
    #[error("{path}:{line}: {source}")]
    Syntax {
        path: PathBuf,
        line: usize,
        source: serde_json::Error,
    },
}

impl CorpusManifest {
    pub fn parse(text: &str, root: impl Into<PathBuf>, origin: &Path) -> Result<Self, ManifestError> {
        let entries = text
            .lines()
            .enumerate()
            .filter(|(_, l)| !l.trim().is_empty())
            .map(|(i, l)| {
                serde_json::from_str(l).map_err(|source| ManifestError::Syntax {
                    path: origin.to_path_buf(),
                    line: i + 1,
                    source,
                })
            })
            .collect::<Result<_, _>>()?;
        Ok(Self {
            root: root.into(),
            entries,
        })
    }

    pub fn read(path: &Path) -> Result<Self, ManifestError> {
        let text = fs::read_to_string(path).map_err(|source| ManifestError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        let root = path.parent().map(Path::to_path_buf).unwrap_or_default();
        Self::parse(&text, root, path)
    }

    pub fn to_jsonl(&self) -> String {
        let mut out = String::new();
        for e in &self.entries {
            out.push_str(&serde_json::to_string(e).expect("manifest entries serialize"));
            out.push('\n');
        }
        out
    }

    pub fn resolve(&self, entry: &ManifestEntry) -> PathBuf {
        self.root.join(&entry.path)
    }
}

#[derive(Debug, thiserror::Error)]
pub enum EntryError {
    #[error("{source_id}: {source}")]
    Io { source_id: String, source: io::Error },
    #[error(transparent)]
    Parse(#[from] ogs_core::Error),
}

/// Samples that loaded, in manifest order, plus every per-entry failure
/// as `(entry index, error)`.
#[derive(Debug, Default)]
pub struct LoadedCorpus {
    pub samples: Vec<LabeledSample>,
    pub errors: Vec<(usize, EntryError)>,
}

/// Reads every entry; failures are collected rather than aborting the load.
/// Each sample's source id is the entry's `path` as written in the manifest.
pub fn load_corpus(manifest: &CorpusManifest) -> LoadedCorpus {
    let mut loaded = LoadedCorpus::default();
    for (i, entry) in manifest.entries.iter().enumerate() {
        let result = fs::read(manifest.resolve(entry))
            .map_err(|source| EntryError::Io {
                source_id: entry.path.clone(),
                source,
            })
            .and_then(|bytes| {
                let text = String::from_utf8_lossy(&bytes);
                Ok(parse_opcode_file(&text, &entry.path)?)
            });
        match result {
            Ok(sequence) => loaded
                .samples
                .push(LabeledSample::new(sequence, entry.label, entry.family.clone())),
            Err(e) => loaded.errors.push((i, e)),
        }
    }
    loaded
}

#[cfg(test)]
mod tests {
    use super::*;

    fn write(dir: &Path, name: &str, text: &str) {
        let p = dir.join(name);
        fs::create_dir_all(p.parent().unwrap()).unwrap();
        fs::write(p, text).unwrap();
    }

    #[test]
    fn loads_in_manifest_order_with_labels() {
        let dir = tempfile::tempdir().unwrap();
        write(dir.path(), "m1.ops", "push ebp\nmov ebp, esp\n");
        write(dir.path(), "m2.ops", "xor eax, eax\nret\n");
        write(dir.path(), "b/b1.ops", "nop\n");
        write(
            dir.path(),
            "manifest.jsonl",
            concat!(
                r#"{"path":"m1.ops","label":"malware","family":"pad_0.5"}"#,
                "\n",
                r#"{"path":"b/b1.ops","label":"benign"}"#,
                "\n",
                "\n",
                r#"{"path":"m2.ops","label":"malware"}"#,
                "\n",
            ),
        );
        let m = CorpusManifest::read(&dir.path().join("manifest.jsonl")).unwrap();
        let loaded = load_corpus(&m);
        assert!(loaded.errors.is_empty());
        let ids: Vec<_> = loaded.samples.iter().map(|s| (s.source_id(), s.label)).collect();
        assert_eq!(
            ids,
            vec![
                ("m1.ops", Label::Malware),
                ("b/b1.ops", Label::Benign),
                ("m2.ops", Label::Malware)
            ]
        );
        assert_eq!(loaded.samples[0].family.as_deref(), Some("pad_0.5"));
        assert_eq!(
            CorpusManifest::parse(&m.to_jsonl(), m.root.clone(), Path::new("x")).unwrap(),
            m
        );
    }

    #[test]
    fn missing_and_empty_files_are_reported_per_entry() {
        let dir = tempfile::tempdir().unwrap();
        write(dir.path(), "ok.ops", "mov\n");
        write(dir.path(), "empty.ops", "# nothing\n");
        let m = CorpusManifest {
            root: dir.path().to_path_buf(),
            entries: ["ok.ops", "gone.ops", "empty.ops", "ok.ops"]
                .iter()
                .map(|p| ManifestEntry {
                    path: p.to_string(),
                    label: Label::Benign,
                    family: None,
                })
                .collect(),
        };
        let loaded = load_corpus(&m);
        assert_eq!(loaded.samples.len(), 2);
        assert_eq!(loaded.errors.len(), 2);
        assert!(matches!(loaded.errors[0], (1, EntryError::Io { .. })));
        assert!(matches!(
            loaded.errors[1],
            (2, EntryError::Parse(ogs_core::Error::EmptySequence { .. }))
        ));
    }

    #[test]
    fn bad_label_is_a_syntax_error() {
        let err =
            CorpusManifest::parse("{\"path\":\"a\",\"label\":\"evil\"}\n", ".", Path::new("m.jsonl")).unwrap_err();
        assert!(matches!(err, ManifestError::Syntax { line: 1, .. }));
    }
}
