//! Files and command line around [`ogs_core`].
//!
//! - `.ops` opcode files and JSON-lines corpus manifests ([`manifest`])
//! - versioned JSON detector models ([`model_file`])
//! - evaluation reports and CSV exports ([`report`])
//! - on-disk synthetic corpus generation ([`generate`])
//! - the `ogs` binary ([`cli`])

pub mod cli;
pub mod generate;
pub mod manifest;
pub mod model_file;
pub mod report;

pub use ogs_core;
