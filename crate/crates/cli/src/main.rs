//! `medgraph` command-line front end.
//!
//! Exit codes: 0 success, 1 artifact or environment error, 2 no query match.

use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand};
use medgraph_core::pipeline::{
    self, append_run, PipelineConfig, PipelineError, PipelineManifest, QueryEngine, QueryOutcome,
};
use medgraph_core::synth::{generate_synthetic, SynthConfig};

mod repl;

#[derive(Parser)]
#[command(
    name = "medgraph",
    version,
    about = "Knowledge-graph semantic retrieval over bibliographic tables"
)]
struct Cli {
    #[command(flatten)]
    global: GlobalOpts,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct GlobalOpts {
    /// key=value configuration file
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Read configuration from a pipeline manifest
    #[arg(long, global = true)]
    manifest: Option<PathBuf>,
    /// Input root; defaults to $MEDGRAPH_DATA_DIR, then ./data
    #[arg(long, global = true)]
    data_dir: Option<PathBuf>,
    #[arg(long, global = true)]
    out_dir: Option<PathBuf>,
    /// Override any configuration key (repeatable)
    #[arg(long = "set", value_name = "KEY=VALUE", global = true)]
    overrides: Vec<String>,
    /// Training threads (ignored with --deterministic)
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Single-threaded training for byte-identical outputs
    #[arg(long, global = true)]
    deterministic: bool,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a planted-community synthetic dataset
    Synth(SynthArgs),
    /// Validate the source tables and report row counts
    Ingest,
    /// Extract triples and build the graph
    BuildKg,
    /// Generate the random-walk corpus
    Walks(WalkArgs),
    /// Train node embeddings on the walk corpus
    Train(TrainArgs),
    /// Pool node embeddings into article vectors
    Pool,
    /// Build the entity surface index
    Index,
    /// Rank articles for one free-text query
    Query(QueryArgs),
    /// Interactive query loop
    Repl(ReplArgs),
    /// Rank every query in the queries file
    RankAll,
    /// Build the TF-IDF vocabulary and document vectors
    TfidfBuild,
    /// Rank every query with TF-IDF
    TfidfRank,
    /// Score the run file against the qrels
    Eval(EvalArgs),
    /// Print the evaluation grid as a table
    Report,
    /// Run every stage and write the manifest
    Run,
}

#[derive(Args)]
struct SynthArgs {
    /// Output directory (defaults to the data directory)
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, default_value_t = 2)]
    communities: usize,
    #[arg(long, default_value_t = 50)]
    articles: usize,
    #[arg(long, default_value_t = 3)]
    authors: usize,
    #[arg(long, default_value_t = 3)]
    entities: usize,
    #[arg(long, default_value_t = 2)]
    mentions: usize,
    #[arg(long, default_value_t = 3)]
    citations: usize,
    #[arg(long, default_value_t = 0.1)]
    leak: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Args)]
struct WalkArgs {
    #[arg(long)]
    p: Option<f64>,
    #[arg(long)]
    q: Option<f64>,
    #[arg(long)]
    walk_length: Option<usize>,
    #[arg(long)]
    walks_per_node: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Args)]
struct TrainArgs {
    #[arg(long)]
    dim: Option<usize>,
    #[arg(long)]
    window: Option<usize>,
    #[arg(long)]
    negatives: Option<usize>,
    #[arg(long)]
    epochs: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Args)]
struct QueryArgs {
    text: String,
    #[arg(short, long, default_value_t = 10)]
    k: usize,
    /// Append the ranking to this TREC run file
    #[arg(long)]
    append_run: Option<PathBuf>,
    #[arg(long, default_value = "q")]
    query_id: String,
}

#[derive(Args)]
struct ReplArgs {
    #[arg(short, long, default_value_t = 10)]
    k: usize,
}

#[derive(Args)]
struct EvalArgs {
    /// Comma-separated cutoffs
    #[arg(long)]
    cutoffs: Option<String>,
    /// Comma-separated average precision variants: standard, divide-by-k
    #[arg(long)]
    variants: Option<String>,
    /// Truncate ground truth to the top K at each cutoff
    #[arg(long)]
    prune: bool,
}

fn resolve_config(g: &GlobalOpts) -> Result<PipelineConfig> {
    let mut cfg = match &g.manifest {
        Some(m) => PipelineManifest::read(m)?.to_config()?,
        None => PipelineConfig::default(),
    };
    if let Some(c) = &g.config {
        let text = std::fs::read_to_string(c).with_context(|| format!("reading {}", c.display()))?;
        cfg.apply_text(&text)?;
    }
    if let Some(d) = &g.data_dir {
        cfg.data_dir = d.clone();
    }
    if let Some(d) = &g.out_dir {
        cfg.out_dir = Some(d.clone());
    }
    for kv in &g.overrides {
        let (k, v) = kv
            .split_once('=')
            .with_context(|| format!("--set expects KEY=VALUE, got {kv:?}"))?;
        cfg.set(k, v)?;
    }
    if let Some(t) = g.threads {
        cfg.train.threads = t;
    }
    if g.deterministic {
        cfg.deterministic = true;
    }
    Ok(cfg)
}

fn set_opt<T: ToString>(cfg: &mut PipelineConfig, key: &str, v: &Option<T>) -> Result<()> {
    if let Some(v) = v {
        cfg.set(key, &v.to_string())?;
    }
    Ok(())
}

pub(crate) fn print_outcome(out: &mut impl Write, o: &QueryOutcome) -> std::io::Result<()> {
    for (i, (pmid, score)) in o.list.entries.iter().enumerate() {
        writeln!(out, "{}\t{}\t{:.6}", i + 1, pmid, score)?;
    }
    Ok(())
}

pub(crate) fn describe_matches(o: &QueryOutcome) -> Vec<String> {
    o.matched
        .matches
        .iter()
        .map(|m| {
            let ids: Vec<&str> = m.entity_ids.iter().map(String::as_str).collect();
            if m.distance == 0 {
                format!("{:?} -> {}", m.candidate.text, ids.join(","))
            } else {
                format!(
                    "{:?} ~ {:?} (d={}) -> {}",
                    m.candidate.text,
                    m.surface,
                    m.distance,
                    ids.join(",")
                )
            }
        })
        .collect()
}

fn run(cli: Cli) -> Result<()> {
    let mut cfg = resolve_config(&cli.global)?;
    match cli.command {
        Command::Synth(a) => {
            let sc = SynthConfig {
                communities: a.communities,
                articles_per_community: a.articles,
                authors_per_article: a.authors,
                entities_per_community: a.entities,
                mentions_per_article: a.mentions,
                citations_per_article: a.citations,
                entity_leak_fraction: a.leak,
                rng_seed: a.seed,
            };
            let out = a.out.unwrap_or_else(|| cfg.data_dir.clone());
            let data = generate_synthetic(&sc)?;
            data.write(&out)?;
            println!(
                "wrote {} articles, {} queries to {}",
                data.tables.articles.len(),
                data.queries.len(),
                out.display()
            );
        }
        Command::Ingest => {
            let ing = pipeline::ingest(&cfg)?;
            let s = &ing.summary;
            println!("articles\t{}\nseeds\t{}\nscope\t{}", s.articles, s.seeds, s.scope);
            for (table, n) in &s.malformed.by_table {
                println!("malformed\t{}\t{n}", table.name());
            }
        }
        Command::BuildKg => print!("{}", pipeline::build_kg(&cfg)?.to_tsv()),
        Command::Walks(a) => {
            set_opt(&mut cfg, "walk.p", &a.p)?;
            set_opt(&mut cfg, "walk.q", &a.q)?;
            set_opt(&mut cfg, "walk.length", &a.walk_length)?;
            set_opt(&mut cfg, "walk.per_node", &a.walks_per_node)?;
            set_opt(&mut cfg, "walk.seed", &a.seed)?;
            let c = pipeline::walks(&cfg)?;
            println!("{} walks, {} tokens", c.walks().len(), c.token_count());
        }
        Command::Train(a) => {
            set_opt(&mut cfg, "train.dim", &a.dim)?;
            set_opt(&mut cfg, "train.window", &a.window)?;
            set_opt(&mut cfg, "train.negatives", &a.negatives)?;
            set_opt(&mut cfg, "train.epochs", &a.epochs)?;
            set_opt(&mut cfg, "train.seed", &a.seed)?;
            for (e, l) in pipeline::train(&cfg)?.iter().enumerate() {
                println!("epoch {}\tloss {l:.6}", e + 1);
            }
        }
        Command::Pool => println!("{} article vectors", pipeline::pool(&cfg)?),
        Command::Index => println!("{} entities", pipeline::index(&cfg)?.len()),
        Command::Query(a) => {
            let o = QueryEngine::load(&cfg)?.query(&a.query_id, &a.text, a.k)?;
            for d in describe_matches(&o) {
                eprintln!("matched {d}");
            }
            print_outcome(&mut std::io::stdout().lock(), &o)?;
            if let Some(p) = a.append_run {
                append_run(&p, &o.list, pipeline::MEDGRAPH_TAG)?;
            }
        }
        Command::Repl(a) => {
            let engine = QueryEngine::load(&cfg)?;
            let stdin = std::io::stdin();
            repl::run(&engine, a.k, stdin.lock(), &mut std::io::stdout().lock())?;
        }
        Command::RankAll => println!("{} queries ranked", pipeline::rank_all(&cfg)?.len()),
        Command::TfidfBuild => {
            let idx = pipeline::tfidf_build(&cfg)?;
            println!("{} terms, {} target documents", idx.vocab.len(), idx.docs.len());
        }
        Command::TfidfRank => println!("{} queries ranked", pipeline::tfidf_rank(&cfg)?.len()),
        Command::Eval(a) => {
            set_opt(&mut cfg, "eval.cutoffs", &a.cutoffs)?;
            set_opt(&mut cfg, "eval.variants", &a.variants)?;
            if a.prune {
                cfg.eval.prune = true;
            }
            print!("{}", pipeline::eval(&cfg)?.to_csv());
        }
        Command::Report => print!("{}", pipeline::report(&cfg)?),
        Command::Run => {
            let m = pipeline::run_pipeline(&cfg)?;
            for (k, p) in &m.artifacts {
                println!("{k}\t{}", p.display());
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            match e.downcast_ref::<PipelineError>() {
                Some(PipelineError::NoMatch { .. }) => ExitCode::from(2),
                _ => ExitCode::from(1),
            }
        }
    }
}
