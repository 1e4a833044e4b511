//! Opcode sequences and labeled samples.
//!
//! Input text holds one instruction per line. Everything after the first
//! whitespace run is an operand and is dropped, mnemonics are lowercased, and
//! blank lines or lines whose first non-space character is `#` are skipped.

use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::fmt;
use core::str::FromStr;

use crate::error::{Error, Result};

/// Ordered opcode tokens of one program.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct OpcodeSequence {
    source_id: String,
    tokens: Vec<String>,
}

impl OpcodeSequence {
    /// Tokens must be non-empty and free of whitespace. An empty token list is
    /// allowed here; [`parse_opcode_file`] is where emptiness becomes an error.
    pub fn new(source_id: impl Into<String>, tokens: Vec<String>) -> Result<Self> {
        if let Some(bad) = tokens
            .iter()
            .find(|t| t.is_empty() || t.chars().any(char::is_whitespace))
        {
            return Err(Error::InvalidToken(bad.clone()));
        }
        Ok(Self {
            source_id: source_id.into(),
            tokens,
        })
    }

    pub fn from_strs(source_id: impl Into<String>, tokens: &[&str]) -> Result<Self> {
        Self::new(source_id, tokens.iter().map(|t| t.to_string()).collect())
    }

    pub fn source_id(&self) -> &str {
        &self.source_id
    }

    pub fn tokens(&self) -> &[String] {
        &self.tokens
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    pub fn into_tokens(self) -> Vec<String> {
        self.tokens
    }

    /// One token per line, LF terminated. Parsing the result yields `self`.
    pub fn to_text(&self) -> String {
        let mut out = String::with_capacity(self.tokens.iter().map(|t| t.len() + 1).sum());
        for t in &self.tokens {
            out.push_str(t);
            out.push('\n');
        }
        out
    }
}

pub fn parse_opcode_file(raw_text: &str, source_id: &str) -> Result<OpcodeSequence> {
    let tokens: Vec<String> = raw_text
        .lines()
        .filter_map(|line| {
            let line = line.trim_start();
            if line.is_empty() || line.starts_with('#') {
                return None;
            }
            line.split_whitespace().next().map(str::to_lowercase)
        })
        .collect();
    if tokens.is_empty() {
        return Err(Error::EmptySequence {
            source_id: source_id.to_string(),
        });
    }
    Ok(OpcodeSequence {
        source_id: source_id.to_string(),
        tokens,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "lowercase"))]
pub enum Label {
    Malware,
    Benign,
}

impl Label {
    pub fn as_str(self) -> &'static str {
        match self {
            Label::Malware => "malware",
            Label::Benign => "benign",
        }
    }
}

impl fmt::Display for Label {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Label {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "malware" => Ok(Label::Malware),
            "benign" => Ok(Label::Benign),
            other => Err(Error::InvalidConfig(alloc::format!(
                "label must be \"malware\" or \"benign\", got {other:?}"
            ))),
        }
    }
}

/// A sequence with its class and optional family tag (e.g. `pad_2.0`).
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct LabeledSample {
    pub sequence: OpcodeSequence,
    pub label: Label,
    pub family: Option<String>,
}

impl LabeledSample {
    pub fn new(sequence: OpcodeSequence, label: Label, family: Option<String>) -> Self {
        Self {
            sequence,
            label,
            family,
        }
    }

    pub fn source_id(&self) -> &str {
        self.sequence.source_id()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;
    use proptest::prelude::*;

    fn toks(seq: &OpcodeSequence) -> Vec<&str> {
        seq.tokens().iter().map(String::as_str).collect()
    }

    #[test]
    fn drops_operands_and_lowercases() {
        let seq = parse_opcode_file("MOV eax, ebx\nADD eax, 1\n", "a").unwrap();
        assert_eq!(toks(&seq), vec!["mov", "add"]);
        assert_eq!(seq.source_id(), "a");
    }

    #[test]
    fn skips_comments_and_blank_lines() {
        let seq = parse_opcode_file("# header\n\npush\n", "b").unwrap();
        assert_eq!(toks(&seq), vec!["push"]);
    }

    #[test]
    fn indented_comment_and_crlf() {
        let seq = parse_opcode_file("   # note\r\n\tPOP\tebx\r\n  \r\nret\r\n", "c").unwrap();
        assert_eq!(toks(&seq), vec!["pop", "ret"]);
    }

    #[test]
    fn empty_input_is_an_error() {
        assert_eq!(
            parse_opcode_file("", "e"),
            Err(Error::EmptySequence { source_id: "e".into() })
        );
        assert!(parse_opcode_file("# only\n\n", "e").is_err());
    }

    #[test]
    fn distinct_spellings_stay_distinct() {
        let seq = parse_opcode_file("movl\nmov\n", "s").unwrap();
        assert_eq!(toks(&seq), vec!["movl", "mov"]);
    }

    #[test]
    fn constructor_rejects_bad_tokens() {
        assert!(OpcodeSequence::from_strs("x", &["mov", ""]).is_err());
        assert!(OpcodeSequence::from_strs("x", &["mov eax"]).is_err());
        assert!(OpcodeSequence::from_strs("x", &[]).unwrap().is_empty());
    }

    #[test]
    fn label_round_trips_through_str() {
        for l in [Label::Malware, Label::Benign] {
            assert_eq!(l.as_str().parse::<Label>().unwrap(), l);
        }
        assert!("Malware".parse::<Label>().is_err());
    }

    proptest! {
        #[test]
        fn parse_is_idempotent(text in "([ \t]*(#[a-z ]*|[A-Za-z]{1,6}([ \t]+[a-z0-9, ]{0,8})?)?\r?\n){0,30}") {
            if let Ok(first) = parse_opcode_file(&text, "p") {
                let again = parse_opcode_file(&first.to_text(), "p").unwrap();
                prop_assert_eq!(&again, &first);
                prop_assert!(first.len() <= text.lines().count());
                for t in first.tokens() {
                    prop_assert!(!t.is_empty() && !t.chars().any(char::is_whitespace));
                }
            }
        }
    }
}
