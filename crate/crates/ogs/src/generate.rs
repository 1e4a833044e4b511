//! Writes a synthetic corpus to disk as `.ops` files plus `manifest.jsonl`.

use std::fs;
use std::io;
use std::path::{Path, PathBuf};

use ogs_core::morphgen::{generate_corpus, AliasTable, SyntheticCorpusSpec};

use crate::manifest::{CorpusManifest, ManifestEntry};

pub const MANIFEST_NAME: &str = "manifest.jsonl";

#[derive(Debug, thiserror::Error)]
pub enum GenerateError {
    #[error("invalid corpus spec: {0}")]
    Config(String),
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: io::Error },
}

fn io_err(path: &Path) -> impl FnOnce(io::Error) -> GenerateError + '_ {
    move |source| GenerateError::Io {
        path: path.to_path_buf(),
        source,
    }
}

pub fn parse_spec(text: &str) -> Result<SyntheticCorpusSpec, GenerateError> {
    let de = &mut serde_json::Deserializer::from_str(text);
    let spec: SyntheticCorpusSpec = serde_path_to_error::deserialize(de)
        .map_err(|e| GenerateError::Config(format!("{}: {}", e.path(), e.inner())))?;
    spec.validate().map_err(|e| GenerateError::Config(e.to_string()))?;
    Ok(spec)
}

pub fn read_spec(path: &Path) -> Result<SyntheticCorpusSpec, GenerateError> {
    parse_spec(&fs::read_to_string(path).map_err(io_err(path))?)
}

/// Generates the corpus under `out_dir` and returns its manifest.
pub fn write_corpus(spec: &SyntheticCorpusSpec, out_dir: &Path) -> Result<CorpusManifest, GenerateError> {
    let files = generate_corpus(spec, &AliasTable::default()).map_err(|e| GenerateError::Config(e.to_string()))?;
    let mut manifest = CorpusManifest {
        root: out_dir.to_path_buf(),
        entries: Vec::with_capacity(files.len()),
    };
    for f in files {
        let rel = format!("{}.ops", f.name);
        let path = out_dir.join(&rel);
        if let Some(parent) = path.parent() {
            fs::create_dir_all(parent).map_err(io_err(parent))?;
        }
        fs::write(&path, f.sample.sequence.to_text()).map_err(io_err(&path))?;
        manifest.entries.push(ManifestEntry {
            path: rel,
            label: f.sample.label,
            family: f.sample.family,
        });
    }
    let path = out_dir.join(MANIFEST_NAME);
    fs::write(&path, manifest.to_jsonl()).map_err(io_err(&path))?;
    Ok(manifest)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::manifest::load_corpus;

    const SPEC: &str = r#"{
        "seed": 3,
        "base_worm": {"generate": {"length": 40}},
        "variants_per_ratio": 2,
        "ratios": [0.5, 1.0],
        "benign_count": 3,
        "benign": {"min_len": 50, "max_len": 80, "heterogeneity": 0.5}
    }"#;

    #[test]
    fn writes_loadable_corpus() {
        let dir = tempfile::tempdir().unwrap();
        let spec = parse_spec(SPEC).unwrap();
        let m = write_corpus(&spec, dir.path()).unwrap();
        assert_eq!(m.entries.len(), 7);
        let reread = CorpusManifest::read(&dir.path().join(MANIFEST_NAME)).unwrap();
        assert_eq!(reread.entries, m.entries);
        let loaded = load_corpus(&reread);
        assert!(loaded.errors.is_empty());
        let in_memory = generate_corpus(&spec, &AliasTable::default()).unwrap();
        for (disk, mem) in loaded.samples.iter().zip(&in_memory) {
            assert_eq!(disk.sequence.tokens(), mem.sample.sequence.tokens());
            assert_eq!(disk.family, mem.sample.family);
        }
    }

    #[test]
    fn config_errors_name_the_field() {
        let e = parse_spec(&SPEC.replace("[0.5, 1.0]", "[]")).unwrap_err().to_string();
        assert!(e.contains("ratios"), "{e}");
        let e = parse_spec(&SPEC.replace("\"benign_count\": 3", "\"benign_count\": -1"))
            .unwrap_err()
            .to_string();
        assert!(e.contains("benign_count"), "{e}");
    }
}
