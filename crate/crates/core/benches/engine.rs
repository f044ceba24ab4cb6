use std::collections::{BTreeMap, HashSet};
use std::path::Path;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use depsearch::bootstrap::{self, Label};
use depsearch::corpus::{self, ParseOptions};
use depsearch::engine::{self, CorpusIndex};
use depsearch::extractor::{self, GoldInstance};
use depsearch::par::Execution;
use depsearch::patterns::{self, Pattern};
use depsearch::querylang;
use depsearch::synth::{self, SynthSpec, FOUNDED_BY};
use depsearch::Corpus;

const MODES: [(&str, Execution); 2] = [("sequential", Execution::Sequential), ("parallel", Execution::Parallel)];

fn seed_patterns() -> Vec<Pattern> {
    let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures");
    let queries = querylang::parse_query_file(&std::fs::read_to_string(dir.join("example_queries.txt")).unwrap()).unwrap();
    let text = std::fs::read_to_string(dir.join("example_queries.conllu")).unwrap();
    let parses: BTreeMap<String, _> = corpus::parse_conllu_str(&text, ParseOptions::default())
        .unwrap()
        .into_iter()
        .map(|s| (s.id.clone(), s))
        .collect();
    queries
        .iter()
        .filter(|q| q.id.starts_with("founded_by_") && q.id != "founded_by_dated" && q.id != "founded_by_founder_noun")
        .map(|q| patterns::compile(q, &parses[&q.id]).unwrap())
        .collect()
}

fn bench_index(c: &mut Criterion) {
    let sentences = synth::generate(&SynthSpec::scaled(20_000, 1)).sentences;
    let mut g = c.benchmark_group("build_index");
    g.sample_size(10);
    for (name, exec) in MODES {
        g.bench_function(BenchmarkId::from_parameter(name), |b| {
            b.iter(|| CorpusIndex::build_with(Corpus::new(sentences.clone()).unwrap(), exec))
        });
    }
    g.finish();
}

fn bench_search(c: &mut Criterion) {
    let idx = CorpusIndex::build(Corpus::new(synth::generate(&SynthSpec::scaled(50_000, 2)).sentences).unwrap());
    let pats = seed_patterns();
    let mut g = c.benchmark_group("search_all");
    for (name, exec) in MODES {
        g.bench_function(BenchmarkId::from_parameter(name), |b| {
            b.iter(|| pats.iter().map(|p| engine::search_all(p, &idx, exec).len()).sum::<usize>())
        });
    }
    g.finish();
}

fn bench_negatives(c: &mut Criterion) {
    let idx = CorpusIndex::build(Corpus::new(synth::generate(&SynthSpec::scaled(20_000, 3)).sentences).unwrap());
    let pats = seed_patterns();
    let kept: Vec<&Pattern> = pats.iter().collect();
    let sig = bootstrap::relation_signature(&kept).unwrap();
    let none = HashSet::new();
    let mut g = c.benchmark_group("negative_candidates");
    g.sample_size(20);
    for (name, exec) in MODES {
        g.bench_function(BenchmarkId::from_parameter(name), |b| {
            b.iter(|| bootstrap::negative_candidates(&idx, &sig, &kept, &none, exec).len())
        });
    }
    g.finish();
}

fn bench_evaluate(c: &mut Criterion) {
    let planted = synth::generate(&SynthSpec::extraction_eval(4));
    let by_id: BTreeMap<&str, _> = planted.sentences.iter().map(|s| (s.id.as_str(), s)).collect();
    let mut gold: Vec<GoldInstance> = planted
        .facts_for(FOUNDED_BY)
        .map(|f| GoldInstance::from_sentence("p", FOUNDED_BY, Label::Positive, by_id[f.sentence_id.as_str()].clone(), f.e1, f.e2))
        .collect();
    for (i, e1, e2) in planted.typed_non_facts(FOUNDED_BY, &["ORG"], &["PER"]) {
        gold.push(GoldInstance::from_sentence("n", FOUNDED_BY, Label::Negative, planted.sentences[i].clone(), e1, e2));
    }
    let pats = seed_patterns();
    let mut g = c.benchmark_group("evaluate");
    for (name, exec) in MODES {
        g.bench_function(BenchmarkId::from_parameter(name), |b| {
            b.iter(|| extractor::evaluate(&pats, &gold, exec).unwrap().tp)
        });
    }
    g.finish();
}

criterion_group!(benches, bench_index, bench_search, bench_negatives, bench_evaluate);
criterion_main!(benches);
