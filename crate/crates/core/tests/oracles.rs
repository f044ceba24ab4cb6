//! Engine components against exhaustive reference implementations.

mod common;

use std::collections::BTreeSet;

use depsearch::engine::{self, AttrKind, CorpusIndex};
use depsearch::par::Execution;
use depsearch::{sampling, Corpus};
use rand::Rng;

#[test]
fn matcher_agrees_with_enumeration() {
    let mut rng = sampling::rng(101);
    let mut hits = 0;
    for _ in 0..400 {
        hits += common::matcher_trial(&mut rng, 12, 4).unwrap_or_else(|e| panic!("{e}"));
    }
    assert!(hits > 100, "too few matches to be informative: {hits}");
}

#[test]
fn pruning_agrees_with_subset_search() {
    let mut rng = sampling::rng(202);
    for _ in 0..300 {
        common::steiner_trial(&mut rng, 10).unwrap_or_else(|e| panic!("{e}"));
    }
}

fn random_index(seed: u64, n: usize) -> CorpusIndex {
    let mut rng = sampling::rng(seed);
    let sentences = (0..n)
        .map(|i| common::random_sentence(&mut rng, &format!("r{i}"), 10))
        .collect();
    CorpusIndex::build(Corpus::new(sentences).unwrap())
}

#[test]
fn postings_equal_a_linear_scan() {
    let idx = random_index(7, 300);
    let mut keys = 0;
    for (kind, value) in idx.posting_keys() {
        keys += 1;
        let list = idx.postings(*kind, value).unwrap();
        let mut want: Vec<(u32, Vec<u32>)> = Vec::new();
        for (o, s) in idx.corpus().sentences().iter().enumerate() {
            let heads: BTreeSet<(usize, String)> = common::oracle_mentions(s).into_iter().map(|(t, _, h)| (h, t)).collect();
            let pos: Vec<u32> = s
                .tokens
                .iter()
                .filter(|t| match kind {
                    AttrKind::Word => t.word.to_lowercase() == *value,
                    AttrKind::Lemma => t.lemma.to_lowercase() == *value,
                    AttrKind::Pos => t.pos == *value,
                    AttrKind::DepLabel => t.dep_label == *value,
                    AttrKind::EntityType => heads.contains(&(t.index, value.clone())),
                })
                .map(|t| t.index as u32)
                .collect();
            if !pos.is_empty() {
                want.push((o as u32, pos));
            }
        }
        let got: Vec<(u32, Vec<u32>)> = list.iter().map(|(s, p)| (s, p.to_vec())).collect();
        assert_eq!(got, want, "{kind:?} {value}");
    }
    assert!(keys > 10);
}

#[test]
fn indexed_search_equals_scanning_every_sentence() {
    let idx = random_index(8, 300);
    let mut rng = sampling::rng(9);
    for _ in 0..60 {
        let p = common::random_pattern(&mut rng, 3);
        let scanned: Vec<_> = idx
            .corpus()
            .sentences()
            .iter()
            .flat_map(|s| engine::match_pattern(&p, s))
            .collect();
        let cands: BTreeSet<String> = engine::candidates(&p, &idx).into_iter().collect();
        for m in &scanned {
            assert!(cands.contains(&m.sentence_id), "candidate filter dropped {}", m.sentence_id);
        }
        assert_eq!(engine::search_all(&p, &idx, Execution::Sequential), scanned);
        assert_eq!(engine::search_all(&p, &idx, Execution::default()), scanned);
        let limit = rng.gen_range(0..5);
        let offset = rng.gen_range(0..5);
        let page = engine::search(&p, &idx, limit, offset);
        assert_eq!(page.total, scanned.len());
        assert_eq!(page.matches, scanned.iter().skip(offset).take(limit).cloned().collect::<Vec<_>>());
    }
}

#[test]
fn sampling_is_uniform() {
    // Each of 20 items is drawn 5 at a time over 4000 seeds; the per-item
    // counts should fit a uniform distribution. 43.82 is the chi-square
    // critical value for 19 degrees of freedom at p = 0.001.
    let (items, k, runs) = (20usize, 5usize, 4000u64);
    let mut counts = vec![0f64; items];
    for seed in 0..runs {
        for i in sampling::sample_indices(items, k, seed) {
            counts[i] += 1.0;
        }
    }
    let expected = (runs as f64) * k as f64 / items as f64;
    let chi2: f64 = counts.iter().map(|c| (c - expected).powi(2) / expected).sum();
    assert!(chi2 < 43.82, "chi-square {chi2:.2}");
}

#[test]
fn build_modes_agree() {
    let mut rng = sampling::rng(3);
    let sentences: Vec<_> = (0..5000)
        .map(|i| common::random_sentence(&mut rng, &format!("r{i}"), 8))
        .collect();
    let seq = CorpusIndex::build_with(Corpus::new(sentences.clone()).unwrap(), Execution::Sequential);
    let par = CorpusIndex::build_with(Corpus::new(sentences).unwrap(), Execution::default());
    assert_eq!(seq.metadata(), par.metadata());
    for key in seq.posting_keys() {
        assert_eq!(seq.postings(key.0, &key.1), par.postings(key.0, &key.1));
    }
}
