//! Sequential vs parallel execution of the two data-parallel stages:
//! per-pattern extraction and stability sampling.
//!
//! Build with `--no-default-features` to confirm the parallel arm falls back
//! to the sequential path.

use std::hint::black_box;
use std::path::Path;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};

use wildq::analysis::{stability_experiment, GraphFamily, StabilityConfig};
use wildq::corpus::{ingest, Corpus};
use wildq::extract::extract_all_with;
use wildq::par::Execution;
use wildq::rank::{PtHits, Ranker};
use wildq::rewrite::builtin_rules;
use wildq::{expand_all, parse_query, Lexicon};

const MODES: [(&str, Execution); 2] = [
    ("sequential", Execution::Sequential),
    ("parallel", Execution::Parallel),
];

fn states_corpus(copies: usize) -> Corpus {
    let base = ingest(&[Path::new(env!("CARGO_MANIFEST_DIR")).join("data/states_corpus")]).unwrap();
    let mut c = Corpus::default();
    for _ in 0..copies {
        for d in &base.documents {
            let text: Vec<String> = d
                .sentences
                .iter()
                .map(|s| s.surface(0..s.tokens.len()))
                .collect();
            c.add_text(&d.source, &text.join(" "));
        }
    }
    c
}

fn extraction(c: &mut Criterion) {
    let lex = Lexicon::builtin();
    let patterns = expand_all(
        &parse_query("US states such as %").unwrap(),
        &builtin_rules(),
        &lex,
    );
    let mut group = c.benchmark_group("extract_all");
    for copies in [1, 8] {
        let corpus = states_corpus(copies);
        for (name, exec) in MODES {
            group.bench_with_input(
                BenchmarkId::new(name, corpus.sentence_count()),
                &corpus,
                |b, corpus| {
                    b.iter(|| {
                        extract_all_with(
                            exec,
                            black_box(&patterns),
                            corpus,
                            corpus,
                            usize::MAX,
                            &lex,
                        )
                    })
                },
            );
        }
    }
    group.finish();
}

fn stability(c: &mut Criterion) {
    let families = [GraphFamily::Random {
        m: 12,
        n: 1000,
        p: 0.2,
        weight_max: 5,
        seed: 1,
    }];
    let scorers = [Ranker::NPages, Ranker::PtHits(PtHits::default())];
    let mut group = c.benchmark_group("stability");
    group.sample_size(10);
    for (name, exec) in MODES {
        let cfg = StabilityConfig {
            k: 5,
            samples: 200,
            seed: 3,
            exec,
        };
        group.bench_function(name, |b| {
            b.iter(|| stability_experiment(black_box(&scorers), &families, &cfg).unwrap())
        });
    }
    group.finish();
}

criterion_group!(benches, extraction, stability);
criterion_main!(benches);
