//! Acceptance suite: one PASS/FAIL line per criterion, non-zero exit on any
//! failure. Runs without the libtest harness so the lines always print.

use std::collections::{BTreeMap, BTreeSet};
use std::path::{Path, PathBuf};
use std::process::Command;
use std::time::{Duration, Instant};

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use wildq::analysis::{
    enumerate_graphs, kendall_tau, locality_check, locality_check_with_margin, manhattan,
    monotonicity_check, precision_at_recall, precision_recall, stability_experiment, GraphFamily,
    StabilityConfig, Truth,
};
use wildq::corpus::{ingest, Corpus};
use wildq::extract::{extract_all, match_pattern};
use wildq::pipeline::{run_query, QueryConfig};
use wildq::rank::{mutual_information, npages, BipartiteGraph, MiCounts, PtHits, Ranker, Scorer};
use wildq::rewrite::{
    apply_rules, builtin_hyponym_rules, builtin_rules, parse_rules, EXAMPLE_RULE,
};
use wildq::{expand_all, parse_query, Lexicon, Pattern, Provenance};

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome);

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn within(elapsed: Duration, limit: Duration, what: &str) -> Result<(), String> {
    ensure(elapsed < limit, || {
        format!("{what} took {elapsed:?}, limit {limit:?}")
    })
}

fn data_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("data")
}

fn states_corpus() -> Corpus {
    ingest(&[data_dir().join("states_corpus")]).expect("bundled corpus")
}

fn texts(ps: &[Pattern]) -> BTreeSet<String> {
    ps.iter().map(|p| p.text.clone()).collect()
}

fn rewriting_fidelity() -> Outcome {
    let start = Instant::now();
    let lex = Lexicon::builtin();
    let example = parse_rules(EXAMPLE_RULE).map_err(|e| e.to_string())?;
    let got = texts(&apply_rules("movies such as %", &example, &lex));
    let want: BTreeSet<String> = ["movies such as %", "%, and other movies", "% is a movie"]
        .map(String::from)
        .into();
    ensure(got == want, || format!("example rule gave {got:?}"))?;

    let got = texts(&apply_rules(
        "US states such as %",
        &builtin_hyponym_rules(),
        &lex,
    ));
    let want: BTreeSet<String> = [
        "US states, including %",
        "US states such as %",
        "% and other US states",
        "% is a US state",
        "such US states as %",
        "US states, especially %",
        "% or other US states",
        "% is the US state",
        "US states %",
        "%, the US state",
        "US state %",
        "%, a US state",
    ]
    .map(String::from)
    .into();
    ensure(got == want, || format!("hyponym pack gave {got:?}"))?;
    within(start.elapsed(), Duration::from_secs(1), "rewriting")?;
    Ok("3-pattern and 12-pattern sets exact".into())
}

fn pipeline_end_to_end() -> Outcome {
    let start = Instant::now();
    let lex = Lexicon::builtin();
    let rules = builtin_rules();
    let corpus = states_corpus();
    let truth = Truth::load(&data_dir().join("states_truth.txt")).map_err(|e| e.to_string())?;
    ensure(truth.len() == 50, || {
        format!("truth has {} entries", truth.len())
    })?;

    let mut details = Vec::new();
    for (rank, recall, min_precision) in [
        (wildq::rank::Algorithm::PtHits, 0.8, 1.0),
        (wildq::rank::Algorithm::NPages, 0.5, 0.9),
        (wildq::rank::Algorithm::NPatterns, 0.5, 0.9),
    ] {
        let cfg = QueryConfig {
            rank,
            ..QueryConfig::default()
        };
        let res = run_query("US states such as %", &rules, &lex, &corpus, &cfg)
            .map_err(|e| e.to_string())?;
        ensure(res.patterns.len() == 12, || {
            format!("{} patterns", res.patterns.len())
        })?;
        let ranked: Vec<String> = res.results.iter().map(|r| r.values.join(" ")).collect();
        let p = precision_at_recall(&precision_recall(&ranked, &truth), recall);
        ensure(p.is_some_and(|p| p >= min_precision), || {
            format!("{rank:?}: precision {p:?} at recall {recall}, need {min_precision}")
        })?;
        details.push(format!("{rank:?} P={:.2}@R={recall}", p.unwrap()));

        if rank == wildq::rank::Algorithm::PtHits {
            // pattern weights keep the qualitative order of the web data
            let w: BTreeMap<&str, f64> = res
                .patterns
                .iter()
                .map(|p| (p.text.as_str(), p.weight))
                .collect();
            let top = res
                .patterns
                .iter()
                .max_by(|a, b| a.weight.total_cmp(&b.weight))
                .unwrap();
            ensure(top.text == "US states, including %", || {
                format!("top pattern {}", top.text)
            })?;
            for zero in ["%, a US state", "%, the US state", "US state %"] {
                ensure(w[zero] == 0.0, || format!("{zero} has weight {}", w[zero]))?;
            }
        }
    }
    let traps = ["joe", "guam"];
    let res = run_query(
        "US states such as %",
        &rules,
        &lex,
        &corpus,
        &QueryConfig::default(),
    )
    .map_err(|e| e.to_string())?;
    ensure(
        traps
            .iter()
            .all(|t| res.ranked_keys().contains(&t.to_string())),
        || "trap sentences were not extracted; the corpus is too easy".into(),
    )?;
    within(start.elapsed(), Duration::from_secs(10), "pipeline")?;
    Ok(details.join(", "))
}

fn power_iteration_ratio() -> f64 {
    // w_T = A^T w_P, w_P = A w_T on the 2x2 graph p1-t1, p1-t2, p2-t1
    let a = [[1.0, 1.0], [1.0, 0.0]];
    let mut p = [0.5, 0.5];
    let mut t = [0.5, 0.5];
    for _ in 0..10_000 {
        let nt = [
            a[0][0] * p[0] + a[1][0] * p[1],
            a[0][1] * p[0] + a[1][1] * p[1],
        ];
        let s = nt[0] + nt[1];
        t = [nt[0] / s, nt[1] / s];
        let np = [
            a[0][0] * t[0] + a[0][1] * t[1],
            a[1][0] * t[0] + a[1][1] * t[1],
        ];
        let s = np[0] + np[1];
        p = [np[0] / s, np[1] / s];
    }
    t[1] / t[0]
}

fn pt_hits_numerics() -> Outcome {
    let golden = (5f64.sqrt() - 1.0) / 2.0;
    let oracle = power_iteration_ratio();
    ensure((oracle - golden).abs() < 1e-9, || {
        format!("oracle ratio {oracle}")
    })?;

    let pt = PtHits::default();
    let g = BipartiteGraph::from_pairs(2, 2, &[(0, 0), (0, 1), (1, 0)]).unwrap();
    let r = pt.run(&g).map_err(|e| e.to_string())?;
    let ratio = r.tuples.scores[1] / r.tuples.scores[0];
    ensure(
        (ratio - golden).abs() < 1e-6 && (ratio - oracle).abs() < 1e-6,
        || format!("ratio {ratio}, want {golden}"),
    )?;

    let mut graphs = vec![g];
    for (m, n) in [(1, 1), (2, 3), (3, 7), (12, 50)] {
        let pairs: Vec<(usize, usize)> = (0..m).flat_map(|p| (0..n).map(move |t| (p, t))).collect();
        let k = BipartiteGraph::from_pairs(m, n, &pairs).unwrap();
        let r = pt.run(&k).map_err(|e| e.to_string())?;
        let s = &r.tuples.scores;
        ensure(s.iter().all(|x| x.to_bits() == s[0].to_bits()), || {
            format!("K_{m},{n} not uniform: {s:?}")
        })?;
        ensure((s[0] - 1.0 / n as f64).abs() <= 1e-15, || {
            format!("K_{m},{n} entry {}", s[0])
        })?;
        graphs.push(k);
    }
    for seed in 0..20 {
        graphs.push(
            GraphFamily::Random {
                m: 12,
                n: 100,
                p: 0.2,
                weight_max: 5,
                seed,
            }
            .generate()
            .unwrap(),
        );
    }
    let mut worst = 0;
    for g in &graphs {
        let r = pt.run(g).map_err(|e| e.to_string())?;
        ensure(r.converged && r.iterations <= 100, || {
            format!("no convergence after {}", r.iterations)
        })?;
        worst = worst.max(r.iterations);
    }
    Ok(format!(
        "ratio {ratio:.9} vs {golden:.9}; {} graphs converged, max {worst} iterations",
        graphs.len()
    ))
}

fn stability_bounds() -> Outcome {
    let start = Instant::now();
    let families: Vec<GraphFamily> = [50, 100, 500, 1000]
        .iter()
        .enumerate()
        .map(|(i, &n)| GraphFamily::Random {
            m: 12,
            n,
            p: 0.2,
            weight_max: 5,
            seed: 100 + i as u64,
        })
        .collect();
    let mut measurements = 0;
    for k in [1, 5] {
        let cfg = StabilityConfig {
            k,
            samples: 200,
            seed: 7,
            ..StabilityConfig::default()
        };
        let report = stability_experiment(&[Ranker::NPatterns, Ranker::NPages], &families, &cfg)
            .map_err(|e| e.to_string())?;
        for row in &report.rows {
            ensure(row.pass == Some(true), || {
                format!(
                    "{} {:?} n={} k={}: {} > {:?}",
                    row.scorer, row.distance, row.n, row.k, row.observed_max, row.bound
                )
            })?;
            measurements += row.measurements;
        }
    }
    within(start.elapsed(), Duration::from_secs(60), "stability")?;
    Ok(format!("{measurements} measurements within bounds"))
}

fn locality() -> Outcome {
    let mut checked = 0;
    for m in 1..=3 {
        for n in 1..=4 {
            for g in enumerate_graphs(m, n) {
                for e in g.edges().to_vec() {
                    for f in [Ranker::NPatterns, Ranker::NPages] {
                        let flips = locality_check(&f, &g, (e.pattern, e.tuple))
                            .map_err(|e| e.to_string())?;
                        ensure(flips.is_empty(), || {
                            format!("{} flips on {g:?} without {e:?}", f.name())
                        })?;
                        checked += 1;
                    }
                }
            }
        }
    }
    let g = GraphFamily::TwoCommunity {
        m: 12,
        n: 50,
        bridges: 3,
        seed: 1,
    }
    .generate()
    .unwrap();
    let pt = Ranker::PtHits(PtHits::default());
    let witness = g.edges().iter().find_map(|e| {
        let flips = locality_check_with_margin(&pt, &g, (e.pattern, e.tuple), 1e-6).ok()?;
        (!flips.is_empty()).then_some((*e, flips.len()))
    });
    let (e, flips) = witness.ok_or("no PT-hits locality violation on the two-community graph")?;
    Ok(format!(
        "{checked} removals local for NPatterns/NPages; PT-hits: removing p{}-t{} flips {flips} pairs",
        e.pattern, e.tuple
    ))
}

fn monotonicity() -> Outcome {
    let scorers: Vec<(&str, Box<dyn Scorer>)> = vec![
        ("npages", Box::new(Ranker::NPages)),
        ("npatterns", Box::new(Ranker::NPatterns)),
        ("pt-hits", Box::new(Ranker::PtHits(PtHits::default()))),
        (
            "pt-hits weighted",
            Box::new(Ranker::PtHits(PtHits {
                weighted: true,
                ..PtHits::default()
            })),
        ),
    ];
    let mut graphs: Vec<BipartiteGraph> = (0..100)
        .map(|seed| {
            GraphFamily::Random {
                m: 6,
                n: 40,
                p: 0.3,
                weight_max: 4,
                seed,
            }
            .generate()
            .unwrap()
        })
        .collect();
    let random = graphs.len();
    for m in 1..=3 {
        for n in 1..=4 {
            graphs.extend(enumerate_graphs(m, n));
        }
    }
    for (name, f) in &scorers {
        for g in &graphs {
            let v = monotonicity_check(f.as_ref(), g);
            ensure(v.is_empty(), || format!("{name}: {v:?}"))?;
        }
    }
    let negated =
        |g: &BipartiteGraph| -> Vec<f64> { npages(g).scores.iter().map(|s| -s).collect() };
    let caught = monotonicity_check(&negated, &graphs[0]).len();
    ensure(caught >= 1, || "negated scorer passed".into())?;
    Ok(format!(
        "{random} random + {} exhaustive graphs clean; negated control: {caught} violations",
        graphs.len() - random
    ))
}

fn brute_kendall(a: &[f64], b: &[f64]) -> f64 {
    let n = a.len();
    let mut c = 0u64;
    for i in 0..n {
        for j in 0..n {
            if a[i] < a[j] && b[i] > b[j] {
                c += 1;
            }
        }
    }
    2.0 * c as f64 / (n as f64 * (n as f64 - 1.0))
}

fn metrics() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for _ in 0..1000 {
        let n = rng.gen_range(2..=64);
        let tied = rng.gen_bool(0.5);
        let draw = |rng: &mut ChaCha8Rng| -> Vec<f64> {
            (0..n)
                .map(|_| {
                    if tied {
                        f64::from(rng.gen_range(0..5))
                    } else {
                        rng.gen::<f64>()
                    }
                })
                .collect()
        };
        let a = draw(&mut rng);
        let b = draw(&mut rng);
        let kt = kendall_tau(&a, &b).map_err(|e| e.to_string())?;
        ensure(kt == brute_kendall(&a, &b), || {
            format!("kendall {kt} on {a:?} {b:?}")
        })?;
        let md = manhattan(&a, &b).map_err(|e| e.to_string())?;
        let oracle = a.iter().zip(&b).map(|(x, y)| (x - y).abs()).sum::<f64>() / n as f64;
        ensure(md == oracle, || format!("manhattan {md} vs {oracle}"))?;
    }
    let up = [1.0, 2.0, 3.0];
    let down = [3.0, 2.0, 1.0];
    ensure(kendall_tau(&up, &down).unwrap() == 1.0, || {
        "full reversal".into()
    })?;
    ensure(
        kendall_tau(&up, &up).unwrap() == 0.0 && manhattan(&up, &up).unwrap() == 0.0,
        || "identical vectors".into(),
    )?;
    Ok("1000 random pairs match oracles exactly".into())
}

fn mi_arithmetic() -> Outcome {
    let s = mutual_information(MiCounts {
        df_q: 10,
        df_r: 20,
        df_qr: 5,
        n: 100,
    })
    .map_err(|e| e.to_string())?;
    ensure(s.score == 0.25, || format!("score {}", s.score))?;
    ensure((s.mi - 2.5f64.ln()).abs() < 1e-12, || {
        format!("mi {}", s.mi)
    })?;
    let s = mutual_information(MiCounts {
        df_q: 10,
        df_r: 7,
        df_qr: 7,
        n: 100,
    })
    .map_err(|e| e.to_string())?;
    ensure(s.score == 1.0, || format!("df_qr = df_r score {}", s.score))?;
    Ok("score 0.25, mi = ln 2.5, saturated score 1.0".into())
}

/// Graph built by matching every pattern against every sentence.
fn oracle_edges(
    patterns: &[Pattern],
    corpus: &Corpus,
    lex: &Lexicon,
) -> BTreeMap<(usize, Vec<String>), usize> {
    let mut docs: BTreeMap<(usize, Vec<String>), BTreeSet<usize>> = BTreeMap::new();
    for (pi, p) in patterns.iter().enumerate() {
        for (_, s) in corpus.sentences() {
            for t in match_pattern(p, s, lex) {
                docs.entry((pi, t.key)).or_default().insert(s.doc);
            }
        }
    }
    docs.into_iter().map(|(k, d)| (k, d.len())).collect()
}

fn graph_matches_oracle(
    patterns: &[Pattern],
    corpus: &Corpus,
    lex: &Lexicon,
) -> Result<usize, String> {
    let ex = extract_all(patterns, corpus, usize::MAX, lex);
    let got: BTreeMap<(usize, Vec<String>), usize> = ex
        .graph
        .edges()
        .iter()
        .map(|e| {
            (
                (e.pattern, ex.tuples[e.tuple].key.clone()),
                e.weight as usize,
            )
        })
        .collect();
    let want = oracle_edges(patterns, corpus, lex);
    ensure(got == want, || {
        format!("graph differs from oracle:\n{got:?}\n{want:?}")
    })?;
    Ok(got.len())
}

const SENTENCE_BANK: &[&str] = &[
    "Popular summer movies such as Harry Potter, Shrek and Spiderman appeal to audience of all ages.",
    "Thomas Edison is often said to have invented the light bulb.",
    "We all learned in our history classes that Thomas Edison invented the light bulb in 1879.",
    "Many US states, including Texas and Ohio, allow early voting.",
    "US states such as Utah, Maine and Iowa have large rural populations.",
    "Voters in Oregon, Idaho and other US states went to the polls.",
    "Everyone knows that New York is a US state.",
    "Everyone says Joe is a US state employee.",
    "Joe is a country singer.",
    "Countries such as France and Japan export many cars.",
    "Residents of Nevada or Arizona or other US states may apply online.",
    "In March Google and Apple acquired YouTube, Skype and Zoom.",
    "The weather in Texas was mild last week.",
    "Such US states as Vermont rely heavily on tourism.",
];

fn extraction_semantics() -> Outcome {
    let lex = Lexicon::builtin();
    let sent = |text: &str| Corpus::from_texts([text]).documents[0].sentences[0].clone();
    let pat = |text: &str| Pattern::new(text, Provenance::UserQuery).unwrap();

    let got: Vec<String> = match_pattern(
        &pat("summer movies such as %"),
        &sent(SENTENCE_BANK[0]),
        &lex,
    )
    .into_iter()
    .map(|t| t.values[0].clone())
    .collect();
    ensure(got == ["Harry Potter", "Shrek", "Spiderman"], || {
        format!("movies: {got:?}")
    })?;

    let edison = pat("% invented the light bulb");
    let first = match_pattern(&edison, &sent(SENTENCE_BANK[1]), &lex);
    ensure(first.is_empty(), || {
        format!("first Edison snippet gave {first:?}")
    })?;
    let second: Vec<String> = match_pattern(&edison, &sent(SENTENCE_BANK[2]), &lex)
        .into_iter()
        .map(|t| t.values[0].clone())
        .collect();
    ensure(second == ["Thomas Edison"], || {
        format!("second Edison snippet gave {second:?}")
    })?;

    let patterns = expand_all(
        &parse_query("US states such as %").unwrap(),
        &builtin_rules(),
        &lex,
    );
    let mut other: Vec<Pattern> = [
        "summer movies such as %",
        "% invented the light bulb",
        "% acquired %",
        "% is a country singer",
    ]
    .iter()
    .map(|t| pat(t))
    .collect();
    let mut corpora = 0;
    let mut edges = 0;
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for _ in 0..25 {
        let sentences = rng.gen_range(1..=100);
        let docs = rng.gen_range(1..=8);
        let mut texts = vec![String::new(); docs];
        for _ in 0..sentences {
            let s = SENTENCE_BANK.choose(&mut rng).unwrap();
            let d = rng.gen_range(0..docs);
            texts[d].push_str(s);
            texts[d].push(' ');
        }
        let corpus = Corpus::from_texts(texts.iter().map(String::as_str));
        edges += graph_matches_oracle(&patterns, &corpus, &lex)?;
        edges += graph_matches_oracle(&other, &corpus, &lex)?;
        corpora += 1;
    }
    other.extend(patterns.iter().cloned());
    edges += graph_matches_oracle(&other, &states_corpus(), &lex)?;
    Ok(format!(
        "examples exact; {} corpora, {edges} edges equal the full-scan oracle",
        corpora + 1
    ))
}

fn run_cli(args: &[&str]) -> Result<(i32, Vec<u8>), String> {
    let out = Command::new(env!("CARGO_BIN_EXE_wildq"))
        .args(args)
        .output()
        .map_err(|e| e.to_string())?;
    Ok((out.status.code().unwrap_or(-1), out.stdout))
}

fn determinism() -> Outcome {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let corpus_dir = data_dir().join("states_corpus");
    let truth = data_dir().join("states_truth.txt");
    let built = [dir.path().join("a.corpus"), dir.path().join("b.corpus")];
    let mut outputs = Vec::new();
    for b in &built {
        outputs.push(run_cli(&[
            "corpus",
            "build",
            corpus_dir.to_str().unwrap(),
            "--out",
            b.to_str().unwrap(),
        ])?);
    }
    ensure(outputs[0] == outputs[1] && outputs[0].0 == 0, || {
        "corpus build output differs".into()
    })?;
    let bytes: Vec<Vec<u8>> = built.iter().map(|b| std::fs::read(b).unwrap()).collect();
    ensure(bytes[0] == bytes[1], || "corpus files differ".into())?;

    let corpus = built[0].to_str().unwrap();
    let commands: Vec<Vec<&str>> = vec![
        vec![
            "query",
            "US states such as %",
            "--corpus",
            corpus,
            "--seed",
            "3",
        ],
        vec![
            "query",
            "US states such as %",
            "--corpus",
            corpus,
            "--format",
            "tsv",
            "--rank",
            "npages",
        ],
        vec![
            "query",
            "US states such as %",
            "--corpus",
            corpus,
            "--format",
            "json",
            "--rank",
            "mi",
        ],
        vec![
            "query",
            "% is a *country*",
            "--corpus",
            corpus,
            "--format",
            "json",
            "--weighted-edges",
        ],
        vec!["rules", "check"],
        vec!["stability", "--seed", "9"],
        vec![
            "stability",
            "--family",
            "two-community",
            "--n",
            "50,100",
            "--seed",
            "9",
        ],
        vec![
            "eval",
            "--truth",
            truth.to_str().unwrap(),
            "US states such as %",
            "--corpus",
            corpus,
        ],
    ];
    for args in &commands {
        let a = run_cli(args)?;
        let b = run_cli(args)?;
        ensure(a == b, || {
            format!("`{}` output differs between runs", args.join(" "))
        })?;
        ensure(a.0 == 0, || format!("`{}` exited {}", args.join(" "), a.0))?;
        ensure(!a.1.is_empty(), || {
            format!("`{}` printed nothing", args.join(" "))
        })?;
    }
    Ok(format!(
        "{} commands byte-identical across two runs",
        commands.len() + 1
    ))
}

fn main() {
    let criteria: [Criterion; 10] = [
        ("rewriting fidelity", rewriting_fidelity),
        ("pipeline end-to-end", pipeline_end_to_end),
        ("PT-hits numerics", pt_hits_numerics),
        ("stability bounds", stability_bounds),
        ("locality", locality),
        ("monotonicity", monotonicity),
        ("metric correctness", metrics),
        ("MI arithmetic", mi_arithmetic),
        ("extraction semantics", extraction_semantics),
        ("determinism", determinism),
    ];
    let mut failed = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let outcome = std::panic::catch_unwind(check).unwrap_or_else(|_| Err("panicked".into()));
        match outcome {
            Ok(detail) => println!(
                "[PASS] {:>2} {name}: {detail} ({:.2?})",
                i + 1,
                start.elapsed()
            ),
            Err(why) => {
                failed += 1;
                println!("[FAIL] {:>2} {name}: {why}", i + 1);
            }
        }
    }
    println!(
        "acceptance: {} passed, {failed} failed",
        criteria.len() - failed
    );
    if failed > 0 {
        std::process::exit(1);
    }
}
