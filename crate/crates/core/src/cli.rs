//! Command-line interface. Exit codes: 0 success, 1 validation failure,
//! 2 usage or I/O error.

use std::error::Error;
use std::fmt::Write as _;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::analysis::{
    pr_to_tsv, precision_recall, stability_experiment, GraphFamily, StabilityConfig, Truth,
};
use crate::corpus::{ingest, Corpus};
use crate::lexicon::Lexicon;
use crate::pipeline::{run_query, QueryConfig, QueryResult};
use crate::rank::{Algorithm, PtHits, Ranker};
use crate::rewrite::{builtin_rule_files, builtin_rules, parse_rules_named, RewriteRule};

pub type CliResult = Result<u8, Box<dyn Error>>;

#[derive(Debug, Parser)]
#[command(
    name = "wildq",
    version,
    about = "Wildcard queries over a local text corpus"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Corpus management.
    #[command(subcommand)]
    Corpus(CorpusCommand),
    /// Evaluate a wildcard query.
    ///
    /// Prints the extraction patterns with their final weights, then the
    /// ranked tuples. With --format tsv the two tables are separated by a
    /// blank line: `pattern, weight, tuples, provenance` and
    /// `rank, score, pages, patterns, tuple` (tuple columns joined by " | ").
    Query(QueryArgs),
    /// Rule file tools.
    #[command(subcommand)]
    Rules(RulesCommand),
    /// Rank-stability experiment under random edge removal.
    ///
    /// TSV columns: family, m, n, k, metric (scorer:distance),
    /// observed_max, bound, pass. Exits 1 if any bound is violated.
    Stability(StabilityArgs),
    /// Precision/recall of a ranking against a truth list.
    ///
    /// The truth file has one entry per line with `|`-separated alternates.
    /// TSV columns: rank, correct (0/1), recall, precision.
    Eval(EvalArgs),
}

#[derive(Debug, Subcommand)]
pub enum CorpusCommand {
    /// Ingest text files (directories contribute their .txt files) into a corpus file.
    Build {
        #[arg(required = true)]
        paths: Vec<PathBuf>,
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(Debug, Subcommand)]
pub enum RulesCommand {
    /// Validate rule files; without paths, the built-in packs.
    Check { paths: Vec<PathBuf> },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum RankArg {
    PtHits,
    Npages,
    Npatterns,
    Mi,
}

impl From<RankArg> for Algorithm {
    fn from(r: RankArg) -> Self {
        match r {
            RankArg::PtHits => Algorithm::PtHits,
            RankArg::Npages => Algorithm::NPages,
            RankArg::Npatterns => Algorithm::NPatterns,
            RankArg::Mi => Algorithm::Mi,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Table,
    Tsv,
    Json,
}

#[derive(Debug, Args)]
pub struct PipelineArgs {
    /// Corpus file, or a text file / directory to ingest on the fly.
    #[arg(long)]
    pub corpus: PathBuf,
    /// Extra rule file (repeatable).
    #[arg(long = "rules")]
    pub rules: Vec<PathBuf>,
    /// Do not load the built-in hyponym and morphology packs.
    #[arg(long)]
    pub no_builtin_rules: bool,
    /// Directory of lexicon files merged over the built-in lexicon (repeatable).
    #[arg(long = "lexicon")]
    pub lexicon: Vec<PathBuf>,
    /// Maximum sentences retrieved per pattern.
    #[arg(long, default_value_t = 200, value_parser = clap::value_parser!(u64).range(1..))]
    pub cap: u64,
    #[arg(long, value_enum, default_value = "pt-hits")]
    pub rank: RankArg,
    /// Drop tuples scoring below this.
    #[arg(long, default_value_t = 0.0)]
    pub cutoff: f64,
    /// Accepted for symmetry with `stability`; query evaluation is deterministic.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Weight PT-hits propagation by each edge's document count.
    #[arg(long)]
    pub weighted_edges: bool,
}

#[derive(Debug, Args)]
pub struct QueryArgs {
    pub query: String,
    #[command(flatten)]
    pub pipeline: PipelineArgs,
    #[arg(long, value_enum, default_value = "table")]
    pub format: Format,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum FamilyArg {
    Random,
    TwoCommunity,
}

#[derive(Debug, Args)]
pub struct StabilityArgs {
    #[arg(long, value_enum, default_value = "random")]
    pub family: FamilyArg,
    #[arg(long, default_value_t = 12)]
    pub m: usize,
    /// Tuple counts, comma separated.
    #[arg(long, value_delimiter = ',', default_value = "50,100,500,1000")]
    pub n: Vec<usize>,
    /// Numbers of removed edges, comma separated.
    #[arg(long, value_delimiter = ',', default_value = "1,5")]
    pub k: Vec<usize>,
    #[arg(long, default_value_t = 200)]
    pub samples: usize,
    /// Edge probability (random family).
    #[arg(long, default_value_t = 0.2)]
    pub p: f64,
    /// Largest edge weight (random family).
    #[arg(long, default_value_t = 5)]
    pub weight_max: u32,
    /// Cross-community edges (two-community family).
    #[arg(long, default_value_t = 3)]
    pub bridges: usize,
    /// Scorers, comma separated.
    #[arg(
        long,
        value_delimiter = ',',
        default_value = "npatterns,npages,pt-hits"
    )]
    pub scorers: Vec<RankArg>,
    #[arg(long, default_value_t = 42)]
    pub seed: u64,
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    #[arg(long)]
    pub truth: PathBuf,
    /// Ranked candidates, one per line (first tab-separated column used).
    #[arg(long, conflicts_with_all = ["query", "corpus"])]
    pub ranked: Option<PathBuf>,
    /// Query to evaluate instead of a ranked file.
    #[arg(requires = "corpus")]
    pub query: Option<String>,
    #[arg(long)]
    pub corpus: Option<PathBuf>,
    #[arg(long = "rules")]
    pub rules: Vec<PathBuf>,
    #[arg(long)]
    pub no_builtin_rules: bool,
    #[arg(long = "lexicon")]
    pub lexicon: Vec<PathBuf>,
    #[arg(long, default_value_t = 200, value_parser = clap::value_parser!(u64).range(1..))]
    pub cap: u64,
    #[arg(long, value_enum, default_value = "pt-hits")]
    pub rank: RankArg,
    #[arg(long)]
    pub weighted_edges: bool,
}

pub fn run(cli: Cli, out: &mut dyn Write) -> CliResult {
    match cli.command {
        Command::Corpus(CorpusCommand::Build { paths, out: dest }) => {
            corpus_build(&paths, &dest, out)
        }
        Command::Query(args) => query(&args, out),
        Command::Rules(RulesCommand::Check { paths }) => rules_check(&paths, out),
        Command::Stability(args) => stability(&args, out),
        Command::Eval(args) => eval(&args, out),
    }
}

fn corpus_build(paths: &[PathBuf], dest: &Path, out: &mut dyn Write) -> CliResult {
    let corpus = ingest(paths)?;
    corpus.save(dest)?;
    let docs = corpus.doc_count();
    writeln!(
        out,
        "{docs} document{}, {} sentences",
        if docs == 1 { "" } else { "s" },
        corpus.sentence_count()
    )?;
    Ok(0)
}

pub fn load_corpus(path: &Path) -> Result<Corpus, Box<dyn Error>> {
    if path.is_file() && Corpus::is_corpus_file(path) {
        Ok(Corpus::load(path)?)
    } else {
        Ok(ingest(&[path.to_path_buf()])?)
    }
}

fn load_lexicon(dirs: &[PathBuf]) -> Result<Lexicon, Box<dyn Error>> {
    let mut lex = Lexicon::builtin();
    for d in dirs {
        lex.load_dir(d)?;
    }
    Ok(lex)
}

fn load_rules(paths: &[PathBuf], builtin: bool) -> Result<Vec<RewriteRule>, Box<dyn Error>> {
    let mut rules = if builtin { builtin_rules() } else { Vec::new() };
    for p in paths {
        let text = fs::read_to_string(p).map_err(|e| format!("{}: {e}", p.display()))?;
        let name = p
            .file_stem()
            .map_or("rules".into(), |s| s.to_string_lossy().into_owned());
        rules.extend(parse_rules_named(&text, &name).map_err(|e| format!("{}: {e}", p.display()))?);
    }
    Ok(rules)
}

fn evaluate(
    query: &str,
    corpus: &Path,
    rules: &[PathBuf],
    no_builtin: bool,
    lexicon: &[PathBuf],
    cfg: &QueryConfig,
) -> Result<QueryResult, Box<dyn Error>> {
    let lex = load_lexicon(lexicon)?;
    let rules = load_rules(rules, !no_builtin)?;
    let corpus = load_corpus(corpus)?;
    Ok(run_query(query, &rules, &lex, &corpus, cfg)?)
}

fn query(args: &QueryArgs, out: &mut dyn Write) -> CliResult {
    let p = &args.pipeline;
    let cfg = QueryConfig {
        cap: p.cap as usize,
        rank: p.rank.into(),
        cutoff: p.cutoff,
        weighted_edges: p.weighted_edges,
        ..QueryConfig::default()
    };
    let res = evaluate(
        &args.query,
        &p.corpus,
        &p.rules,
        p.no_builtin_rules,
        &p.lexicon,
        &cfg,
    )?;
    let text = match args.format {
        Format::Table => format_table(&res),
        Format::Tsv => format_tsv(&res),
        Format::Json => serde_json::to_string_pretty(&res)? + "\n",
    };
    out.write_all(text.as_bytes())?;
    Ok(0)
}

fn rank_name(a: Algorithm) -> &'static str {
    match a {
        Algorithm::PtHits => "pt-hits",
        Algorithm::NPages => "npages",
        Algorithm::NPatterns => "npatterns",
        Algorithm::Mi => "mi",
    }
}

fn format_table(res: &QueryResult) -> String {
    let mut s = String::new();
    let width = res
        .patterns
        .iter()
        .map(|p| p.text.len())
        .max()
        .unwrap_or(7)
        .max(7);
    let _ = writeln!(
        s,
        "{:<width$}  {:>10}  {:>6}",
        "pattern", "weight", "tuples"
    );
    for p in &res.patterns {
        let _ = writeln!(s, "{:<width$}  {:>10.6}  {:>6}", p.text, p.weight, p.tuples);
    }
    let _ = writeln!(s);
    let _ = writeln!(
        s,
        "{:>4}  {:>10}  {:>5}  {:>8}  tuple ({})",
        "rank",
        "score",
        "pages",
        "patterns",
        rank_name(res.algorithm)
    );
    for r in &res.results {
        let _ = writeln!(
            s,
            "{:>4}  {:>10.6}  {:>5}  {:>8}  {}",
            r.rank,
            r.score,
            r.pages,
            r.patterns,
            r.values.join(" | ")
        );
    }
    s
}

fn format_tsv(res: &QueryResult) -> String {
    let mut s = String::from("pattern\tweight\ttuples\tprovenance\n");
    for p in &res.patterns {
        let _ = writeln!(
            s,
            "{}\t{:.6}\t{}\t{}",
            p.text, p.weight, p.tuples, p.provenance
        );
    }
    s.push_str("\nrank\tscore\tpages\tpatterns\ttuple\n");
    for r in &res.results {
        let _ = writeln!(
            s,
            "{}\t{:.6}\t{}\t{}\t{}",
            r.rank,
            r.score,
            r.pages,
            r.patterns,
            r.values.join(" | ")
        );
    }
    s
}

fn rules_check(paths: &[PathBuf], out: &mut dyn Write) -> CliResult {
    let mut files: Vec<(String, String)> = Vec::new();
    if paths.is_empty() {
        for (name, text) in builtin_rule_files() {
            files.push((name.to_string(), text.to_string()));
        }
    } else {
        for p in paths {
            let text = fs::read_to_string(p).map_err(|e| format!("{}: {e}", p.display()))?;
            files.push((p.display().to_string(), text));
        }
    }
    let mut failed = false;
    for (name, text) in &files {
        let source = Path::new(name)
            .file_stem()
            .map_or(name.clone(), |s| s.to_string_lossy().into_owned());
        match parse_rules_named(text, &source) {
            Ok(rules) => {
                writeln!(
                    out,
                    "{name}: {} rule{}",
                    rules.len(),
                    if rules.len() == 1 { "" } else { "s" }
                )?;
                for r in rules {
                    writeln!(
                        out,
                        "  {}\t{} heads\t{} bodies",
                        r.id,
                        r.head_count(),
                        r.body.len()
                    )?;
                }
            }
            Err(e) => {
                failed = true;
                writeln!(out, "{name}: FAILED: {e}")?;
            }
        }
    }
    Ok(u8::from(failed))
}

fn stability(args: &StabilityArgs, out: &mut dyn Write) -> CliResult {
    let scorers: Vec<Ranker> = args
        .scorers
        .iter()
        .map(|s| match s {
            RankArg::Npatterns => Ok(Ranker::NPatterns),
            RankArg::Npages => Ok(Ranker::NPages),
            RankArg::PtHits => Ok(Ranker::PtHits(PtHits::default())),
            RankArg::Mi => Err("mi needs a corpus and cannot be used in stability experiments"),
        })
        .collect::<Result<_, _>>()?;
    let families: Vec<GraphFamily> = args
        .n
        .iter()
        .enumerate()
        .map(|(i, &n)| {
            let seed = args.seed.wrapping_add(i as u64);
            match args.family {
                FamilyArg::Random => GraphFamily::Random {
                    m: args.m,
                    n,
                    p: args.p,
                    weight_max: args.weight_max,
                    seed,
                },
                FamilyArg::TwoCommunity => GraphFamily::TwoCommunity {
                    m: args.m,
                    n,
                    bridges: args.bridges,
                    seed,
                },
            }
        })
        .collect();
    let mut all_pass = true;
    let mut header = true;
    for &k in &args.k {
        let cfg = StabilityConfig {
            k,
            samples: args.samples,
            seed: args.seed,
            ..StabilityConfig::default()
        };
        let report = stability_experiment(&scorers, &families, &cfg)?;
        all_pass &= report.all_pass();
        let tsv = report.to_tsv();
        let body = if header {
            tsv.as_str()
        } else {
            tsv.split_once('\n').map_or("", |x| x.1)
        };
        out.write_all(body.as_bytes())?;
        header = false;
    }
    Ok(u8::from(!all_pass))
}

fn eval(args: &EvalArgs, out: &mut dyn Write) -> CliResult {
    let truth = Truth::load(&args.truth)?;
    let ranked: Vec<String> = match (&args.ranked, &args.query, &args.corpus) {
        (Some(path), _, _) => fs::read_to_string(path)
            .map_err(|e| format!("{}: {e}", path.display()))?
            .lines()
            .map(|l| l.split('\t').next().unwrap_or("").trim().to_string())
            .filter(|l| !l.is_empty())
            .collect(),
        (None, Some(q), Some(corpus)) => {
            let cfg = QueryConfig {
                cap: args.cap as usize,
                rank: args.rank.into(),
                weighted_edges: args.weighted_edges,
                ..QueryConfig::default()
            };
            let res = evaluate(
                q,
                corpus,
                &args.rules,
                args.no_builtin_rules,
                &args.lexicon,
                &cfg,
            )?;
            res.results.iter().map(|r| r.values.join(" ")).collect()
        }
        _ => return Err("eval needs --ranked FILE or a query with --corpus".into()),
    };
    out.write_all(pr_to_tsv(&precision_recall(&ranked, &truth)).as_bytes())?;
    Ok(0)
}
