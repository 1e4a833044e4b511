//! Synthetic metamorphic corpora.
//!
//! A base "worm" sequence is mutated into variants by three obfuscations
//! applied in order: instruction substitution from a fixed alias table,
//! adjacent-block transposition, and dead-code insertion of contiguous
//! snippets taken from benign programs. The padding ratio is the number of
//! inserted dead-code opcodes per worm opcode, so a variant of a base of
//! length `n` has exactly `n + floor(ratio * n)` opcodes.
//!
//! Benign programs come from [`BenignSampler`], a per-file perturbation of a
//! dense Markov chain; the base worm comes from [`WormSampler`], a sparse
//! chain that leans on a few mnemonics benign code never uses. Every random
//! choice flows from a seed, and corpus files get independent seeds derived
//! from `(corpus_seed, file_index)`.

use alloc::collections::BTreeMap;
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use rand::seq::SliceRandom;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::corpus::{Label, LabeledSample, OpcodeSequence};
use crate::error::{Error, Result};

const DEFAULT_ALIASES: &str = include_str!("aliases.txt");

/// Mnemonics shared by worm and benign code.
pub const COMMON_OPCODES: &[&str] = &[
    "add", "and", "call", "cmp", "dec", "inc", "jmp", "jnz", "jz", "lea", "mov", "or", "pop", "push", "ret", "sub",
    "test", "xor",
];
/// Mnemonics only the worm core uses.
pub const WORM_OPCODES: &[&str] = &["lodsb", "loop", "neg", "not", "rol", "ror", "stosb", "xchg"];
/// Mnemonics only benign code uses.
pub const BENIGN_OPCODES: &[&str] = &[
    "adc", "cdq", "cld", "cmovz", "idiv", "imul", "leave", "movsd", "movsx", "movzx", "nop", "sar", "sbb", "setz",
    "shl", "shr",
];

/// Groups of interchangeable mnemonics.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AliasTable {
    groups: Vec<Vec<String>>,
    group_of: BTreeMap<String, usize>,
}

impl AliasTable {
    /// Parses one whitespace-separated group per line; `#` starts a comment.
    pub fn parse(text: &str) -> Result<Self> {
        let mut groups = Vec::new();
        let mut group_of = BTreeMap::new();
        for line in text.lines() {
            let line = line.split('#').next().unwrap_or("");
            let members: Vec<String> = line.split_whitespace().map(str::to_lowercase).collect();
            if members.is_empty() {
                continue;
            }
            if members.len() < 2 {
                return Err(Error::InvalidConfig(alloc::format!(
                    "alias group `{}` needs at least two members",
                    members[0]
                )));
            }
            for m in &members {
                if group_of.insert(m.clone(), groups.len()).is_some() {
                    return Err(Error::InvalidConfig(alloc::format!(
                        "`{m}` appears in two alias groups"
                    )));
                }
            }
            groups.push(members);
        }
        Ok(Self { groups, group_of })
    }

    pub fn groups(&self) -> &[Vec<String>] {
        &self.groups
    }

    pub fn group(&self, token: &str) -> Option<&[String]> {
        self.group_of.get(token).map(|&g| self.groups[g].as_slice())
    }
}

impl Default for AliasTable {
    fn default() -> Self {
        Self::parse(DEFAULT_ALIASES).expect("bundled alias table is valid")
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct MorphConfig {
    pub padding_ratio: f64,
    pub substitution_rate: f64,
    pub block_transpositions: usize,
    pub seed: u64,
}

impl MorphConfig {
    pub fn identity() -> Self {
        Self {
            padding_ratio: 0.0,
            substitution_rate: 0.0,
            block_transpositions: 0,
            seed: 0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.padding_ratio >= 0.0 && self.padding_ratio.is_finite()) {
            return Err(Error::InvalidConfig(alloc::format!(
                "padding_ratio must be finite and >= 0, got {}",
                self.padding_ratio
            )));
        }
        if !(0.0..=1.0).contains(&self.substitution_rate) {
            return Err(Error::InvalidConfig(alloc::format!(
                "substitution_rate must lie in [0, 1], got {}",
                self.substitution_rate
            )));
        }
        Ok(())
    }

    /// `floor(padding_ratio * base_len)`.
    pub fn dead_code_len(&self, base_len: usize) -> usize {
        (self.padding_ratio * base_len as f64) as usize
    }
}

/// A mutated sequence plus a mask marking inserted dead-code positions.
#[derive(Debug, Clone, PartialEq)]
pub struct Mutation {
    pub sequence: OpcodeSequence,
    pub dead_code: Vec<bool>,
}

impl Mutation {
    /// The substituted and transposed worm core, dead code removed.
    pub fn worm_core(&self) -> Vec<&str> {
        self.sequence
            .tokens()
            .iter()
            .zip(&self.dead_code)
            .filter(|(_, &dead)| !dead)
            .map(|(t, _)| t.as_str())
            .collect()
    }

    pub fn dead_code_len(&self) -> usize {
        self.dead_code.iter().filter(|&&d| d).count()
    }
}

const SNIPPET_MIN: usize = 3;
const SNIPPET_MAX: usize = 10;
const BLOCK_MAX: usize = 8;

pub fn mutate(
    base: &OpcodeSequence,
    config: &MorphConfig,
    benign_pool: &[OpcodeSequence],
    aliases: &AliasTable,
) -> Result<Mutation> {
    config.validate()?;
    if base.is_empty() {
        return Err(Error::EmptyBase);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);

    let mut core: Vec<String> = base
        .tokens()
        .iter()
        .map(|t| {
            let hit = rng.gen_bool(config.substitution_rate);
            match aliases.group(t) {
                Some(group) if hit => {
                    let others: Vec<&String> = group.iter().filter(|m| *m != t).collect();
                    others[rng.gen_range(0..others.len())].clone()
                }
                _ => t.clone(),
            }
        })
        .collect();

    if core.len() >= 2 {
        let max_block = (core.len() / 2).clamp(1, BLOCK_MAX);
        for _ in 0..config.block_transpositions {
            let a = rng.gen_range(1..=max_block);
            let b = rng.gen_range(1..=max_block);
            let p = rng.gen_range(0..=core.len() - a - b);
            core[p..p + a + b].rotate_left(a);
        }
    }

    let mut remaining = config.dead_code_len(core.len());
    let mut gaps: Vec<Vec<&str>> = alloc::vec![Vec::new(); core.len() + 1];
    if remaining > 0 {
        let pool: Vec<&OpcodeSequence> = benign_pool.iter().filter(|s| !s.is_empty()).collect();
        if pool.is_empty() {
            return Err(Error::EmptyBenignPool);
        }
        while remaining > 0 {
            let src = pool[rng.gen_range(0..pool.len())];
            let len = rng.gen_range(SNIPPET_MIN..=SNIPPET_MAX).min(remaining).min(src.len());
            let start = rng.gen_range(0..=src.len() - len);
            let gap = rng.gen_range(0..=core.len());
            gaps[gap].extend(src.tokens()[start..start + len].iter().map(String::as_str));
            remaining -= len;
        }
    }

    let total = core.len() + gaps.iter().map(Vec::len).sum::<usize>();
    let mut tokens = Vec::with_capacity(total);
    let mut dead_code = Vec::with_capacity(total);
    for (g, snippet) in gaps.iter().enumerate() {
        tokens.extend(snippet.iter().map(|t| t.to_string()));
        dead_code.extend(core::iter::repeat_n(true, snippet.len()));
        if let Some(t) = core.get(g) {
            tokens.push(t.clone());
            dead_code.push(false);
        }
    }

    Ok(Mutation {
        sequence: OpcodeSequence::new(alloc::format!("{}#{}", base.source_id(), config.seed), tokens)?,
        dead_code,
    })
}

/// SplitMix64 finalizer over `(seed, index)`; independent per-file streams.
pub fn derive_seed(seed: u64, index: u64) -> u64 {
    let mut z = seed ^ index.wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

// Row-wise transition weights over `vocab`, sampled by inverse CDF.
#[derive(Debug, Clone, PartialEq)]
struct Chain {
    vocab: Vec<String>,
    rows: Vec<Vec<f64>>,
}

impl Chain {
    fn sample(&self, rng: &mut ChaCha8Rng, len: usize, id: String) -> OpcodeSequence {
        let mut state = rng.gen_range(0..self.vocab.len());
        let mut tokens = Vec::with_capacity(len);
        for _ in 0..len {
            tokens.push(self.vocab[state].clone());
            let row = &self.rows[state];
            let total: f64 = row.iter().sum();
            let mut u = rng.gen::<f64>() * total;
            state = row.len() - 1;
            for (j, &w) in row.iter().enumerate() {
                if u < w {
                    state = j;
                    break;
                }
                u -= w;
            }
        }
        OpcodeSequence::new(id, tokens).expect("vocabulary tokens are valid")
    }
}

/// Benign program generator.
///
/// A shared base chain over common and benign-only mnemonics is drawn once
/// from `seed`. Each file mixes that chain with its own random chain,
/// `(1 - heterogeneity) * base + heterogeneity * own`, so programs share a
/// style without being copies of each other.
#[derive(Debug, Clone, PartialEq)]
pub struct BenignSampler {
    chain: Chain,
    heterogeneity: f64,
    min_len: usize,
    max_len: usize,
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(default))]
pub struct BenignParams {
    pub min_len: usize,
    pub max_len: usize,
    pub heterogeneity: f64,
}

impl Default for BenignParams {
    fn default() -> Self {
        Self {
            min_len: 400,
            max_len: 1200,
            heterogeneity: 0.5,
        }
    }
}

fn dense_row(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    // Cubing skews mass towards a few favourite successors.
    (0..n)
        .map(|_| {
            let u = rng.gen::<f64>();
            u * u * u
        })
        .collect()
}

impl BenignSampler {
    pub fn new(seed: u64, params: BenignParams) -> Result<Self> {
        if params.min_len < 2 || params.min_len > params.max_len {
            return Err(Error::InvalidConfig(alloc::format!(
                "benign length range [{}, {}] is invalid",
                params.min_len,
                params.max_len
            )));
        }
        if !(0.0..=1.0).contains(&params.heterogeneity) {
            return Err(Error::InvalidConfig("benign heterogeneity must lie in [0, 1]".into()));
        }
        let vocab: Vec<String> = COMMON_OPCODES
            .iter()
            .chain(BENIGN_OPCODES)
            .map(|s| s.to_string())
            .collect();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let rows = (0..vocab.len()).map(|_| dense_row(&mut rng, vocab.len())).collect();
        Ok(Self {
            chain: Chain { vocab, rows },
            heterogeneity: params.heterogeneity,
            min_len: params.min_len,
            max_len: params.max_len,
        })
    }

    pub fn sample(&self, seed: u64, id: impl Into<String>) -> OpcodeSequence {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let n = self.chain.vocab.len();
        let h = self.heterogeneity;
        let rows = self
            .chain
            .rows
            .iter()
            .map(|base| {
                let own = dense_row(&mut rng, n);
                let (sb, so): (f64, f64) = (base.iter().sum(), own.iter().sum());
                base.iter()
                    .zip(&own)
                    .map(|(b, o)| (1.0 - h) * b / sb + h * o / so)
                    .collect()
            })
            .collect();
        let len = rng.gen_range(self.min_len..=self.max_len);
        let chain = Chain {
            vocab: self.chain.vocab.clone(),
            rows,
        };
        chain.sample(&mut rng, len, id.into())
    }
}

/// Base worm generator: a sparse chain whose rows each carry one successor
/// on a random cycle through the whole vocabulary plus up to two extra
/// branches, never a self-loop. Worm code therefore touches every worm
/// mnemonic and has a few strongly preferred transitions.
#[derive(Debug, Clone, PartialEq)]
pub struct WormSampler {
    chain: Chain,
}

impl WormSampler {
    pub fn new(seed: u64) -> Self {
        let vocab: Vec<String> = COMMON_OPCODES
            .iter()
            .chain(WORM_OPCODES)
            .map(|s| s.to_string())
            .collect();
        let n = vocab.len();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut cycle: Vec<usize> = (0..n).collect();
        cycle.shuffle(&mut rng);
        let mut rows = alloc::vec![alloc::vec![0.0; n]; n];
        for (pos, &i) in cycle.iter().enumerate() {
            rows[i][cycle[(pos + 1) % n]] += rng.gen_range(0.3..1.0);
            for _ in 0..rng.gen_range(0..=2) {
                let j = rng.gen_range(0..n - 1);
                rows[i][if j >= i { j + 1 } else { j }] += rng.gen_range(0.2..1.0);
            }
        }
        Self {
            chain: Chain { vocab, rows },
        }
    }

    pub fn sample(&self, seed: u64, len: usize, id: impl Into<String>) -> OpcodeSequence {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        self.chain.sample(&mut rng, len, id.into())
    }
}

/// Where the base worm comes from.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum BaseWorm {
    Generate { length: usize },
    Tokens(Vec<String>),
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct SyntheticCorpusSpec {
    pub seed: u64,
    pub base_worm: BaseWorm,
    pub variants_per_ratio: usize,
    pub ratios: Vec<f64>,
    #[cfg_attr(feature = "serde", serde(default))]
    pub substitution_rate: f64,
    #[cfg_attr(feature = "serde", serde(default))]
    pub block_transpositions: usize,
    pub benign_count: usize,
    #[cfg_attr(feature = "serde", serde(default))]
    pub benign: BenignParams,
}

impl SyntheticCorpusSpec {
    pub fn validate(&self) -> Result<()> {
        let bad = |field: &str, why: &str| Err(Error::InvalidConfig(alloc::format!("{field}: {why}")));
        if self.ratios.is_empty() {
            return bad("ratios", "must list at least one padding ratio");
        }
        if self.variants_per_ratio == 0 {
            return bad("variants_per_ratio", "must be at least 1");
        }
        if self.benign_count == 0 {
            return bad("benign_count", "must be at least 1");
        }
        match &self.base_worm {
            BaseWorm::Generate { length } if *length == 0 => {
                return bad("base_worm.generate.length", "must be at least 1")
            }
            BaseWorm::Tokens(t) if t.is_empty() => return bad("base_worm.tokens", "must not be empty"),
            _ => {}
        }
        for &r in &self.ratios {
            MorphConfig {
                padding_ratio: r,
                substitution_rate: self.substitution_rate,
                block_transpositions: self.block_transpositions,
                seed: 0,
            }
            .validate()
            .or_else(|e| bad("ratios", &e.to_string()))?;
        }
        if !(0.0..=1.0).contains(&self.substitution_rate) {
            return bad("substitution_rate", "must lie in [0, 1]");
        }
        Ok(())
    }
}

/// Family tag of a padding ratio, e.g. `pad_2.0`.
pub fn family_name(ratio: f64) -> String {
    alloc::format!("pad_{ratio:?}")
}

/// One generated corpus file; `name` is a relative path stem.
#[derive(Debug, Clone, PartialEq)]
pub struct GeneratedFile {
    pub name: String,
    pub sample: LabeledSample,
}

/// Builds the corpus in memory: benign files first, then
/// `variants_per_ratio` variants for each ratio in order.
pub fn generate_corpus(spec: &SyntheticCorpusSpec, aliases: &AliasTable) -> Result<Vec<GeneratedFile>> {
    spec.validate()?;
    let sampler = BenignSampler::new(derive_seed(spec.seed, u64::MAX), spec.benign)?;
    let mut files = Vec::with_capacity(spec.benign_count + spec.ratios.len() * spec.variants_per_ratio);
    for i in 0..spec.benign_count {
        let name = alloc::format!("benign/benign_{i:03}");
        let seq = sampler.sample(derive_seed(spec.seed, i as u64), name.clone());
        files.push(GeneratedFile {
            name,
            sample: LabeledSample::new(seq, Label::Benign, None),
        });
    }
    let pool: Vec<OpcodeSequence> = files.iter().map(|f| f.sample.sequence.clone()).collect();

    let base = match &spec.base_worm {
        BaseWorm::Generate { length } => WormSampler::new(derive_seed(spec.seed, u64::MAX - 1)).sample(
            derive_seed(spec.seed, u64::MAX - 2),
            *length,
            "worm",
        ),
        BaseWorm::Tokens(t) => OpcodeSequence::new("worm", t.clone())?,
    };

    let mut index = spec.benign_count as u64;
    for &ratio in &spec.ratios {
        let family = family_name(ratio);
        for v in 0..spec.variants_per_ratio {
            let config = MorphConfig {
                padding_ratio: ratio,
                substitution_rate: spec.substitution_rate,
                block_transpositions: spec.block_transpositions,
                seed: derive_seed(spec.seed, index),
            };
            let name = alloc::format!("malware/{family}/variant_{v:03}");
            let m = mutate(&base, &config, &pool, aliases)?;
            let seq = OpcodeSequence::new(name.clone(), m.sequence.into_tokens())?;
            files.push(GeneratedFile {
                name,
                sample: LabeledSample::new(seq, Label::Malware, Some(family.clone())),
            });
            index += 1;
        }
    }
    Ok(files)
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;
    use proptest::prelude::*;

    fn pool() -> Vec<OpcodeSequence> {
        let s = BenignSampler::new(1, BenignParams::default()).unwrap();
        (0..4).map(|i| s.sample(i, alloc::format!("b{i}"))).collect()
    }

    fn worm(len: usize) -> OpcodeSequence {
        WormSampler::new(3).sample(4, len, "w")
    }

    #[test]
    fn bundled_alias_table() {
        let t = AliasTable::default();
        assert_eq!(t.group("je").unwrap(), &["jz", "je"]);
        assert!(t.group("push").is_none());
        assert!(AliasTable::parse("a b\nb c\n").is_err());
        assert!(AliasTable::parse("solo\n").is_err());
    }

    #[test]
    fn padding_two_triples_length() {
        let cfg = MorphConfig {
            padding_ratio: 2.0,
            substitution_rate: 0.2,
            block_transpositions: 3,
            seed: 9,
        };
        let m = mutate(&worm(100), &cfg, &pool(), &AliasTable::default()).unwrap();
        assert_eq!(m.sequence.len(), 300);
        assert_eq!(m.dead_code_len(), 200);
    }

    #[test]
    fn no_op_config_is_identity() {
        let base = worm(50);
        let m = mutate(&base, &MorphConfig::identity(), &[], &AliasTable::default()).unwrap();
        assert_eq!(m.sequence.tokens(), base.tokens());
        assert!(m.dead_code.iter().all(|d| !d));
    }

    #[test]
    fn deterministic_given_seed() {
        let cfg = MorphConfig {
            padding_ratio: 1.5,
            substitution_rate: 0.3,
            block_transpositions: 5,
            seed: 77,
        };
        let a = mutate(&worm(80), &cfg, &pool(), &AliasTable::default()).unwrap();
        let b = mutate(&worm(80), &cfg, &pool(), &AliasTable::default()).unwrap();
        assert_eq!(a, b);
        let c = mutate(
            &worm(80),
            &MorphConfig { seed: 78, ..cfg },
            &pool(),
            &AliasTable::default(),
        )
        .unwrap();
        assert_ne!(a.sequence.tokens(), c.sequence.tokens());
    }

    #[test]
    fn error_cases() {
        let aliases = AliasTable::default();
        let empty = OpcodeSequence::new("e", vec![]).unwrap();
        assert_eq!(
            mutate(&empty, &MorphConfig::identity(), &[], &aliases),
            Err(Error::EmptyBase)
        );
        let cfg = MorphConfig {
            padding_ratio: 0.5,
            ..MorphConfig::identity()
        };
        assert_eq!(mutate(&worm(10), &cfg, &[], &aliases), Err(Error::EmptyBenignPool));
        assert_eq!(mutate(&worm(10), &cfg, &[empty], &aliases), Err(Error::EmptyBenignPool));
        let bad = MorphConfig {
            substitution_rate: 1.5,
            ..MorphConfig::identity()
        };
        assert!(mutate(&worm(10), &bad, &[], &aliases).is_err());
    }

    #[test]
    fn substitution_stays_within_alias_groups() {
        let aliases = AliasTable::default();
        let base = OpcodeSequence::from_strs("b", &["jz", "add", "push", "rol"]).unwrap();
        let cfg = MorphConfig {
            substitution_rate: 1.0,
            ..MorphConfig::identity()
        };
        let m = mutate(&base, &cfg, &[], &aliases).unwrap();
        assert_eq!(m.worm_core(), vec!["je", "sub", "push", "ror"]);
    }

    #[test]
    fn benign_and_worm_vocabularies() {
        let b = pool();
        assert!(b.iter().all(|s| s.len() >= 400 && s.len() <= 1200));
        assert!(b
            .iter()
            .flat_map(|s| s.tokens())
            .all(|t| !WORM_OPCODES.contains(&t.as_str())));
        let w = worm(500);
        assert!(w.tokens().iter().all(|t| !BENIGN_OPCODES.contains(&t.as_str())));
    }

    #[test]
    fn corpus_counts_and_families() {
        let spec = SyntheticCorpusSpec {
            seed: 5,
            base_worm: BaseWorm::Generate { length: 60 },
            variants_per_ratio: 10,
            ratios: vec![0.5, 1.0, 1.5, 2.0, 2.5, 3.0, 3.5, 4.0],
            substitution_rate: 0.1,
            block_transpositions: 2,
            benign_count: 20,
            benign: BenignParams {
                min_len: 50,
                max_len: 80,
                heterogeneity: 0.5,
            },
        };
        let files = generate_corpus(&spec, &AliasTable::default()).unwrap();
        assert_eq!(files.len(), 80 + 20);
        assert_eq!(files.iter().filter(|f| f.sample.label == Label::Benign).count(), 20);
        let pad2: Vec<_> = files
            .iter()
            .filter(|f| f.sample.family.as_deref() == Some("pad_2.0"))
            .collect();
        assert_eq!(pad2.len(), 10);
        assert!(pad2.iter().all(|f| f.sample.sequence.len() == 180));
        assert_eq!(files, generate_corpus(&spec, &AliasTable::default()).unwrap());

        let empty = SyntheticCorpusSpec { ratios: vec![], ..spec };
        match generate_corpus(&empty, &AliasTable::default()) {
            Err(Error::InvalidConfig(msg)) => assert!(msg.starts_with("ratios")),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn derived_seeds_differ() {
        let seeds: alloc::collections::BTreeSet<u64> = (0..1000).map(|i| derive_seed(42, i)).collect();
        assert_eq!(seeds.len(), 1000);
    }

    proptest! {
        #[test]
        fn length_law_and_core_preservation(
            len in 1usize..120,
            ratio in 0.0f64..4.0,
            subst in 0.0f64..1.0,
            swaps in 0usize..6,
            seed: u64,
        ) {
            let aliases = AliasTable::default();
            let base = worm(len);
            let cfg = MorphConfig { padding_ratio: ratio, substitution_rate: subst, block_transpositions: swaps, seed };
            let m = mutate(&base, &cfg, &pool(), &aliases).unwrap();
            prop_assert_eq!(m.sequence.len(), len + (ratio * len as f64) as usize);

            // Redo substitution and transposition alone; the worm core must match.
            let bare = MorphConfig { padding_ratio: 0.0, ..cfg };
            let core_only = mutate(&base, &bare, &[], &aliases).unwrap();
            let expected: Vec<&str> = core_only.sequence.tokens().iter().map(String::as_str).collect();
            prop_assert_eq!(m.worm_core(), expected);
        }
    }
}
