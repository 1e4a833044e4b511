//! Dead-code padding effects measured on generated corpora.

use std::sync::Arc;

use ogs_core::morphgen::{
    derive_seed, generate_corpus, AliasTable, BaseWorm, BenignParams, BenignSampler, SyntheticCorpusSpec, WormSampler,
};
use ogs_core::{build_alphabet, build_graph, mutate, score, train, MorphConfig, TrainConfig};

const RATIOS: [f64; 8] = [0.5, 1.0, 1.5, 2.0, 2.5, 3.0, 3.5, 4.0];

#[test]
fn mean_distance_to_base_grows_with_padding() {
    let aliases = AliasTable::default();
    let sampler = BenignSampler::new(11, BenignParams::default()).unwrap();
    let pool: Vec<_> = (0..10).map(|i| sampler.sample(i, format!("b{i}"))).collect();
    let seeds = 40u64;
    let mut means = Vec::new();
    for &ratio in &RATIOS {
        let mut total = 0.0;
        for s in 0..seeds {
            let base = WormSampler::new(derive_seed(s, 0)).sample(derive_seed(s, 1), 200, "worm");
            let config = MorphConfig {
                padding_ratio: ratio,
                substitution_rate: 0.1,
                block_transpositions: 5,
                seed: derive_seed(s, 2),
            };
            let variant = mutate(&base, &config, &pool, &aliases).unwrap().sequence;
            let alphabet = Arc::new(build_alphabet([&base, &variant].into_iter().chain(&pool)).unwrap());
            let a = build_graph(&base, &alphabet).unwrap();
            let b = build_graph(&variant, &alphabet).unwrap();
            total += score(&a, &b, None).unwrap();
        }
        means.push(total / seeds as f64);
    }
    for w in means.windows(2) {
        assert!(w[1] >= w[0], "{means:?}");
    }
}

#[test]
fn pruning_does_not_shrink_training_gap_under_heavy_padding() {
    for ratio in [2.0, 2.5, 3.0, 4.0] {
        for seed in [42, 7] {
            let spec = SyntheticCorpusSpec {
                seed,
                base_worm: BaseWorm::Generate { length: 200 },
                variants_per_ratio: 40,
                ratios: vec![ratio],
                substitution_rate: 0.1,
                block_transpositions: 5,
                benign_count: 20,
                benign: BenignParams::default(),
            };
            let samples: Vec<_> = generate_corpus(&spec, &AliasTable::default())
                .unwrap()
                .into_iter()
                .map(|f| f.sample)
                .collect();
            let gap = |prune| {
                let config = TrainConfig {
                    prune,
                    ..TrainConfig::default()
                };
                train(&samples, &config).unwrap().fit.gap()
            };
            let (pruned, unpruned) = (gap(true), gap(false));
            assert!(
                pruned >= unpruned,
                "ratio {ratio} seed {seed}: pruned {pruned} < unpruned {unpruned}"
            );
        }
    }
}
