//! File-to-file pipeline stages, their configuration and the run manifest.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::fs::{File, OpenOptions};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use thiserror::Error;

use crate::eval::{evaluate, read_report_csv, run_from_lists, ApVariant, EvalConfig, EvalReport, Qrels, Run};
use crate::index::{build_index, read_index, write_index, EntityIndex};
use crate::kg::{
    build_graph, expand_citations, extract_triples, graph_stats, read_triples, write_triples, GraphStats,
    KnowledgeGraph, NodeType,
};
use crate::pooling::{pool_stage1, pool_stage2, PoolingConfig};
use crate::query::{embed_query, expand, match_keywords, MatchConfig, QueryError, QueryMatch, Tokenizer};
use crate::rank::{rank_articles, read_trec, runs_by_tag, write_trec, CutoffSchedule, RankedList, TrecLine};
use crate::sgns::{train_with_report, TrainConfig};
use crate::synth::{read_queries, read_seeds};
use crate::tables::{load_tables, MalformedTally, RelationalTables, TablePaths};
use crate::tfidf::{document_text, IdfVariant, TfidfError, TfidfIndex};
use crate::vectors::NodeVectors;
use crate::walk::{generate_walks, WalkConfig, WalkCorpus};

pub const DATA_DIR_ENV: &str = "MEDGRAPH_DATA_DIR";
pub const MEDGRAPH_TAG: &str = "medgraph";
pub const TFIDF_TAG: &str = "tfidf";

type BoxError = Box<dyn std::error::Error + Send + Sync>;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StageName {
    Ingest,
    BuildKg,
    Walks,
    Train,
    Pool,
    Index,
    RankAll,
    TfidfBuild,
    TfidfRank,
    Eval,
    Report,
    Query,
}

impl fmt::Display for StageName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            StageName::Ingest => "ingest",
            StageName::BuildKg => "build-kg",
            StageName::Walks => "walks",
            StageName::Train => "train",
            StageName::Pool => "pool",
            StageName::Index => "index",
            StageName::RankAll => "rank-all",
            StageName::TfidfBuild => "tfidf-build",
            StageName::TfidfRank => "tfidf-rank",
            StageName::Eval => "eval",
            StageName::Report => "report",
            StageName::Query => "query",
        })
    }
}

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error("{stage} stage failed: {source}")]
    Stage {
        stage: StageName,
        #[source]
        source: BoxError,
    },
    #[error("no query keyword matched the entity index (candidates: {})", .unmatched.join(", "))]
    NoMatch { unmatched: Vec<String> },
    #[error("config: {0}")]
    Config(String),
    #[error("manifest {path}: {msg}")]
    Manifest { path: String, msg: String },
}

impl PipelineError {
    pub fn stage(&self) -> Option<StageName> {
        match self {
            PipelineError::Stage { stage, .. } => Some(*stage),
            _ => None,
        }
    }
}

trait StageContext<T> {
    fn in_stage(self, stage: StageName) -> Result<T, PipelineError>;
}

impl<T, E: Into<BoxError>> StageContext<T> for Result<T, E> {
    fn in_stage(self, stage: StageName) -> Result<T, PipelineError> {
        self.map_err(|e| PipelineError::Stage {
            stage,
            source: e.into(),
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PipelineConfig {
    pub data_dir: PathBuf,
    pub tables_dir: Option<PathBuf>,
    pub seeds: Option<PathBuf>,
    pub queries: Option<PathBuf>,
    pub qrels: Option<PathBuf>,
    pub out_dir: Option<PathBuf>,
    pub stop_words: Option<PathBuf>,
    pub query_verbs: Option<PathBuf>,
    pub walk: WalkConfig,
    pub train: TrainConfig,
    pub pooling: PoolingConfig,
    pub matching: MatchConfig,
    pub top_k: usize,
    pub idf: IdfVariant,
    pub eval: EvalConfig,
    /// Forces single-threaded training.
    pub deterministic: bool,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        let data_dir = std::env::var_os(DATA_DIR_ENV).map_or_else(|| PathBuf::from("data"), PathBuf::from);
        PipelineConfig::with_data_dir(data_dir)
    }
}

fn parse<T: std::str::FromStr>(key: &str, value: &str) -> Result<T, PipelineError> {
    value
        .trim()
        .parse()
        .map_err(|_| PipelineError::Config(format!("bad value {value:?} for {key}")))
}

impl PipelineConfig {
    pub fn with_data_dir(data_dir: impl Into<PathBuf>) -> Self {
        PipelineConfig {
            data_dir: data_dir.into(),
            tables_dir: None,
            seeds: None,
            queries: None,
            qrels: None,
            out_dir: None,
            stop_words: None,
            query_verbs: None,
            walk: WalkConfig::default(),
            train: TrainConfig::default(),
            pooling: PoolingConfig::default(),
            matching: MatchConfig::default(),
            top_k: 1000,
            idf: IdfVariant::Plain,
            eval: EvalConfig::default(),
            deterministic: false,
        }
    }

    pub fn tables_dir(&self) -> PathBuf {
        self.tables_dir.clone().unwrap_or_else(|| self.data_dir.join("tables"))
    }

    pub fn seeds_path(&self) -> PathBuf {
        self.seeds.clone().unwrap_or_else(|| self.data_dir.join("seeds.txt"))
    }

    pub fn queries_path(&self) -> PathBuf {
        self.queries
            .clone()
            .unwrap_or_else(|| self.data_dir.join("queries.tsv"))
    }

    pub fn qrels_path(&self) -> PathBuf {
        self.qrels.clone().unwrap_or_else(|| self.data_dir.join("qrels.txt"))
    }

    pub fn out_dir(&self) -> PathBuf {
        self.out_dir.clone().unwrap_or_else(|| self.data_dir.join("out"))
    }

    pub fn artifact(&self, a: Artifact) -> PathBuf {
        match a {
            Artifact::Tables => self.tables_dir(),
            other => self.out_dir().join(other.file_name()),
        }
    }

    pub fn tfidf_dir(&self) -> PathBuf {
        self.out_dir().join("tfidf")
    }

    pub fn effective_train(&self) -> TrainConfig {
        let mut t = self.train;
        if self.deterministic {
            t.threads = 1;
        }
        t
    }

    pub fn set(&mut self, key: &str, value: &str) -> Result<(), PipelineError> {
        let path = || Some(PathBuf::from(value.trim()));
        let flag = |v: &str| -> Result<bool, PipelineError> { parse(key, v) };
        match key.trim() {
            "data_dir" => self.data_dir = PathBuf::from(value.trim()),
            "tables_dir" => self.tables_dir = path(),
            "seeds" => self.seeds = path(),
            "queries" => self.queries = path(),
            "qrels" => self.qrels = path(),
            "out_dir" => self.out_dir = path(),
            "query.stop_words" => self.stop_words = path(),
            "query.verbs" => self.query_verbs = path(),
            "walk.p" => self.walk.p = parse(key, value)?,
            "walk.q" => self.walk.q = parse(key, value)?,
            "walk.length" => self.walk.walk_length = parse(key, value)?,
            "walk.per_node" => self.walk.walks_per_node = parse(key, value)?,
            "walk.seed" => self.walk.rng_seed = parse(key, value)?,
            "train.dim" => self.train.dim = parse(key, value)?,
            "train.window" => self.train.window = parse(key, value)?,
            "train.negatives" => self.train.negatives = parse(key, value)?,
            "train.epochs" => self.train.epochs = parse(key, value)?,
            "train.learning_rate" => self.train.learning_rate = parse(key, value)?,
            "train.min_learning_rate" => self.train.min_learning_rate = parse(key, value)?,
            "train.neg_exponent" => self.train.neg_exponent = parse(key, value)?,
            "train.seed" => self.train.rng_seed = parse(key, value)?,
            "train.threads" => self.train.threads = parse(key, value)?,
            "pool.stage1_self" => self.pooling.include_self_stage1 = flag(value)?,
            "pool.stage2_self" => self.pooling.include_self_stage2 = flag(value)?,
            "match.threshold" => self.matching.threshold = parse(key, value)?,
            "match.suppress_subspans" => self.matching.suppress_subspans = flag(value)?,
            "rank.k" => self.top_k = parse(key, value)?,
            "tfidf.idf" => self.idf = parse(key, value)?,
            "eval.cutoffs" => {
                self.eval.cutoffs = value
                    .parse::<CutoffSchedule>()
                    .map_err(|e| PipelineError::Config(e.to_string()))?
            }
            "eval.variants" => {
                self.eval.variants = value
                    .split(',')
                    .map(|v| {
                        v.trim()
                            .parse::<ApVariant>()
                            .map_err(|e| PipelineError::Config(e.to_string()))
                    })
                    .collect::<Result<_, _>>()?
            }
            "eval.prune" => self.eval.prune = flag(value)?,
            "deterministic" => self.deterministic = flag(value)?,
            other => return Err(PipelineError::Config(format!("unknown key {other:?}"))),
        }
        Ok(())
    }

    /// Applies `key=value` lines; `#` starts a comment line.
    pub fn apply_text(&mut self, text: &str) -> Result<(), PipelineError> {
        for line in text.lines() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| PipelineError::Config(format!("expected key=value, got {line:?}")))?;
            self.set(k, v)?;
        }
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self, PipelineError> {
        let text =
            std::fs::read_to_string(path).map_err(|e| PipelineError::Config(format!("{}: {e}", path.display())))?;
        let mut cfg = PipelineConfig::default();
        cfg.apply_text(&text)?;
        Ok(cfg)
    }

    /// Every key with its resolved value, in a fixed order.
    pub fn to_pairs(&self) -> Vec<(String, String)> {
        let p = |x: PathBuf| x.display().to_string();
        let mut v: Vec<(&str, String)> = vec![
            ("data_dir", p(self.data_dir.clone())),
            ("tables_dir", p(self.tables_dir())),
            ("seeds", p(self.seeds_path())),
            ("queries", p(self.queries_path())),
            ("qrels", p(self.qrels_path())),
            ("out_dir", p(self.out_dir())),
        ];
        if let Some(s) = &self.stop_words {
            v.push(("query.stop_words", p(s.clone())));
        }
        if let Some(s) = &self.query_verbs {
            v.push(("query.verbs", p(s.clone())));
        }
        let variants: Vec<&str> = self
            .eval
            .variants
            .iter()
            .map(|v| match v {
                ApVariant::Standard => "standard",
                ApVariant::DivideByK => "divide-by-k",
            })
            .collect();
        v.extend([
            ("walk.p", self.walk.p.to_string()),
            ("walk.q", self.walk.q.to_string()),
            ("walk.length", self.walk.walk_length.to_string()),
            ("walk.per_node", self.walk.walks_per_node.to_string()),
            ("walk.seed", self.walk.rng_seed.to_string()),
            ("train.dim", self.train.dim.to_string()),
            ("train.window", self.train.window.to_string()),
            ("train.negatives", self.train.negatives.to_string()),
            ("train.epochs", self.train.epochs.to_string()),
            ("train.learning_rate", self.train.learning_rate.to_string()),
            ("train.min_learning_rate", self.train.min_learning_rate.to_string()),
            ("train.neg_exponent", self.train.neg_exponent.to_string()),
            ("train.seed", self.train.rng_seed.to_string()),
            ("train.threads", self.train.threads.to_string()),
            ("pool.stage1_self", self.pooling.include_self_stage1.to_string()),
            ("pool.stage2_self", self.pooling.include_self_stage2.to_string()),
            ("match.threshold", self.matching.threshold.to_string()),
            ("match.suppress_subspans", self.matching.suppress_subspans.to_string()),
            ("rank.k", self.top_k.to_string()),
            ("tfidf.idf", self.idf.to_string()),
            ("eval.cutoffs", self.eval.cutoffs.to_string()),
            ("eval.variants", variants.join(",")),
            ("eval.prune", self.eval.prune.to_string()),
            ("deterministic", self.deterministic.to_string()),
        ]);
        v.into_iter().map(|(k, x)| (k.to_string(), x)).collect()
    }

    pub fn tokenizer(&self) -> Result<Tokenizer, QueryError> {
        Tokenizer::from_files(self.stop_words.as_deref(), self.query_verbs.as_deref())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Artifact {
    Tables,
    Triples,
    Walks,
    Embeddings,
    Pooled,
    Index,
    Runs,
    Report,
}

impl Artifact {
    pub const ALL: [Artifact; 8] = [
        Artifact::Tables,
        Artifact::Triples,
        Artifact::Walks,
        Artifact::Embeddings,
        Artifact::Pooled,
        Artifact::Index,
        Artifact::Runs,
        Artifact::Report,
    ];

    pub fn key(self) -> &'static str {
        match self {
            Artifact::Tables => "tables",
            Artifact::Triples => "triples",
            Artifact::Walks => "walks",
            Artifact::Embeddings => "embeddings",
            Artifact::Pooled => "pooled",
            Artifact::Index => "index",
            Artifact::Runs => "runs",
            Artifact::Report => "report",
        }
    }

    fn file_name(self) -> &'static str {
        match self {
            Artifact::Tables => "tables",
            Artifact::Triples => "triples.tsv",
            Artifact::Walks => "walks.txt",
            Artifact::Embeddings => "embeddings.txt",
            Artifact::Pooled => "pooled.txt",
            Artifact::Index => "entity_index.tsv",
            Artifact::Runs => "runs.trec",
            Artifact::Report => "report.csv",
        }
    }
}

/// Artifact paths plus the configuration that produced them.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PipelineManifest {
    pub artifacts: BTreeMap<String, PathBuf>,
    pub config: Vec<(String, String)>,
}

impl PipelineManifest {
    pub fn from_config(cfg: &PipelineConfig) -> Self {
        PipelineManifest {
            artifacts: Artifact::ALL
                .iter()
                .map(|&a| (a.key().to_string(), cfg.artifact(a)))
                .collect(),
            config: cfg.to_pairs(),
        }
    }

    pub fn to_text(&self) -> String {
        let mut s = String::new();
        for (k, p) in &self.artifacts {
            s.push_str(&format!("artifact.{k}={}\n", p.display()));
        }
        for (k, v) in &self.config {
            s.push_str(&format!("config.{k}={v}\n"));
        }
        s
    }

    pub fn write(&self, path: &Path) -> std::io::Result<()> {
        std::fs::write(path, self.to_text())
    }

    pub fn read(path: &Path) -> Result<Self, PipelineError> {
        let err = |msg: String| PipelineError::Manifest {
            path: path.display().to_string(),
            msg,
        };
        let text = std::fs::read_to_string(path).map_err(|e| err(e.to_string()))?;
        let mut m = PipelineManifest {
            artifacts: BTreeMap::new(),
            config: Vec::new(),
        };
        for line in text.lines().filter(|l| !l.trim().is_empty()) {
            let (k, v) = line.split_once('=').ok_or_else(|| err(format!("bad line {line:?}")))?;
            if let Some(a) = k.strip_prefix("artifact.") {
                m.artifacts.insert(a.to_string(), PathBuf::from(v));
            } else if let Some(c) = k.strip_prefix("config.") {
                m.config.push((c.to_string(), v.to_string()));
            } else {
                return Err(err(format!("unknown key {k:?}")));
            }
        }
        Ok(m)
    }

    pub fn to_config(&self) -> Result<PipelineConfig, PipelineError> {
        let mut cfg = PipelineConfig::with_data_dir("data");
        for (k, v) in &self.config {
            cfg.set(k, v)?;
        }
        Ok(cfg)
    }

    /// Paths recorded in the manifest that are not on disk.
    pub fn missing(&self) -> Vec<&Path> {
        self.artifacts
            .values()
            .filter(|p| !p.exists())
            .map(PathBuf::as_path)
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct IngestSummary {
    pub articles: usize,
    pub seeds: usize,
    pub scope: usize,
    pub malformed: MalformedTally,
}

pub struct Ingested {
    pub tables: RelationalTables,
    pub seeds: BTreeSet<String>,
    pub scope: BTreeSet<String>,
    pub summary: IngestSummary,
}

fn ensure_out(cfg: &PipelineConfig, stage: StageName) -> Result<(), PipelineError> {
    std::fs::create_dir_all(cfg.out_dir()).in_stage(stage)
}

/// Loads the tables and seeds and widens the seeds by one citation hop.
pub fn ingest(cfg: &PipelineConfig) -> Result<Ingested, PipelineError> {
    let s = StageName::Ingest;
    let dir = cfg.tables_dir();
    if !dir.is_dir() {
        return Err(PipelineError::Stage {
            stage: s,
            source: format!("tables directory {} not found", dir.display()).into(),
        });
    }
    let (tables, malformed) = load_tables(&TablePaths::in_dir(&dir)).in_stage(s)?;
    let seeds_path = cfg.seeds_path();
    let seeds = if seeds_path.exists() {
        read_seeds(&seeds_path).in_stage(s)?
    } else {
        log::info!("no seed list at {}; every article is a seed", seeds_path.display());
        tables.articles.iter().map(|a| a.pmid.clone()).collect()
    };
    let scope = expand_citations(&tables, &seeds);
    if malformed.total() > 0 {
        log::warn!("{} malformed rows skipped", malformed.total());
    }
    let summary = IngestSummary {
        articles: tables.articles.len(),
        seeds: seeds.len(),
        scope: scope.len(),
        malformed,
    };
    Ok(Ingested {
        tables,
        seeds,
        scope,
        summary,
    })
}

pub fn build_kg(cfg: &PipelineConfig) -> Result<GraphStats, PipelineError> {
    let ing = ingest(cfg)?;
    let s = StageName::BuildKg;
    ensure_out(cfg, s)?;
    let triples = extract_triples(&ing.tables, &ing.scope);
    let g = build_graph(&triples).in_stage(s)?;
    write_triples(&triples, &cfg.artifact(Artifact::Triples)).in_stage(s)?;
    let stats = graph_stats(&g);
    std::fs::write(cfg.out_dir().join("graph_stats.tsv"), stats.to_tsv()).in_stage(s)?;
    Ok(stats)
}

fn load_graph(cfg: &PipelineConfig, s: StageName) -> Result<KnowledgeGraph, PipelineError> {
    let triples = read_triples(&cfg.artifact(Artifact::Triples)).in_stage(s)?;
    build_graph(&triples).in_stage(s)
}

pub fn walks(cfg: &PipelineConfig) -> Result<WalkCorpus, PipelineError> {
    let s = StageName::Walks;
    let g = load_graph(cfg, s)?;
    let corpus = generate_walks(&g, &cfg.walk).in_stage(s)?;
    corpus.write(&cfg.artifact(Artifact::Walks)).in_stage(s)?;
    Ok(corpus)
}

/// Returns per-epoch mean losses.
pub fn train(cfg: &PipelineConfig) -> Result<Vec<f64>, PipelineError> {
    let s = StageName::Train;
    let corpus = WalkCorpus::read(&cfg.artifact(Artifact::Walks)).in_stage(s)?;
    let (m, report) = train_with_report::<f64>(&corpus, &cfg.effective_train()).in_stage(s)?;
    m.to_vectors().write(&cfg.artifact(Artifact::Embeddings)).in_stage(s)?;
    Ok(report.epoch_losses)
}

/// The seed list, or every article in the graph when there is none.
fn pool_targets(cfg: &PipelineConfig, g: &KnowledgeGraph) -> std::io::Result<BTreeSet<String>> {
    let path = cfg.seeds_path();
    if path.exists() {
        return read_seeds(&path);
    }
    Ok(g.indices_of_type(NodeType::Article)
        .map(|i| g.node_id(i).local_id().to_string())
        .collect())
}

pub fn pool(cfg: &PipelineConfig) -> Result<usize, PipelineError> {
    let s = StageName::Pool;
    let g = load_graph(cfg, s)?;
    let x = NodeVectors::<f64>::read(&cfg.artifact(Artifact::Embeddings)).in_stage(s)?;
    let seeds = pool_targets(cfg, &g).in_stage(s)?;
    let stage1 = pool_stage1(&g, &x, &cfg.pooling).in_stage(s)?;
    let stage2 = pool_stage2(&g, &stage1, &seeds, &cfg.pooling).in_stage(s)?;
    stage2.vectors.write(&cfg.artifact(Artifact::Pooled)).in_stage(s)?;
    Ok(stage2.len())
}

pub fn index(cfg: &PipelineConfig) -> Result<EntityIndex, PipelineError> {
    let ing = ingest(cfg)?;
    let s = StageName::Index;
    ensure_out(cfg, s)?;
    let idx = build_index(ing.tables.mentions.iter().filter(|m| ing.scope.contains(&m.pmid))).in_stage(s)?;
    write_index(&idx, &cfg.artifact(Artifact::Index)).in_stage(s)?;
    Ok(idx)
}

/// Everything needed to answer free-text queries, loaded once.
pub struct QueryEngine {
    pub tokenizer: Tokenizer,
    pub index: EntityIndex,
    pub node_vectors: NodeVectors<f64>,
    pub articles: NodeVectors<f64>,
    pub matching: MatchConfig,
}

#[derive(Debug, Clone)]
pub struct QueryOutcome {
    pub list: RankedList,
    pub matched: QueryMatch,
}

impl QueryEngine {
    pub fn load(cfg: &PipelineConfig) -> Result<Self, PipelineError> {
        let s = StageName::Query;
        Ok(QueryEngine {
            tokenizer: cfg.tokenizer().in_stage(s)?,
            index: read_index(&cfg.artifact(Artifact::Index)).in_stage(s)?,
            node_vectors: NodeVectors::read(&cfg.artifact(Artifact::Embeddings)).in_stage(s)?,
            articles: NodeVectors::read(&cfg.artifact(Artifact::Pooled)).in_stage(s)?,
            matching: cfg.matching,
        })
    }

    pub fn query(&self, query_id: &str, text: &str, k: usize) -> Result<QueryOutcome, PipelineError> {
        let s = StageName::Query;
        let expanded = expand(&self.tokenizer.tokenize(text));
        let matched = match match_keywords(&expanded, &self.index, &self.matching) {
            Ok(m) => m,
            Err(QueryError::NoMatch { unmatched }) => return Err(PipelineError::NoMatch { unmatched }),
            Err(e) => return Err(e).in_stage(s),
        };
        let q = embed_query(&matched, &self.node_vectors).in_stage(s)?;
        let list = rank_articles(query_id, &q.vector, &self.articles, Some(k)).in_stage(s)?;
        Ok(QueryOutcome { list, matched })
    }
}

pub fn query_once(cfg: &PipelineConfig, text: &str, k: usize) -> Result<QueryOutcome, PipelineError> {
    QueryEngine::load(cfg)?.query("q", text, k)
}

/// Appends one ranked list to a run file.
pub fn append_run(path: &Path, list: &RankedList, tag: &str) -> std::io::Result<()> {
    let f = OpenOptions::new().create(true).append(true).open(path)?;
    let mut w = BufWriter::new(f);
    write_trec(&mut w, std::slice::from_ref(list), tag)?;
    w.flush()
}

/// Rewrites the run file with `tag`'s lines replaced by `lists`.
fn replace_run_tag(path: &Path, tag: &str, lists: &[RankedList]) -> Result<(), BoxError> {
    let mut others: BTreeMap<String, Vec<TrecLine>> = BTreeMap::new();
    if path.exists() {
        for l in read_trec(path)? {
            if l.tag != tag {
                others.entry(l.tag.clone()).or_default().push(l);
            }
        }
    }
    let mut w = BufWriter::new(File::create(path)?);
    let mut wrote_own = false;
    for (t, lines) in &others {
        if !wrote_own && t.as_str() > tag {
            write_trec(&mut w, lists, tag)?;
            wrote_own = true;
        }
        for l in lines {
            writeln!(w, "{} Q0 {} {} {} {}", l.query_id, l.pmid, l.rank, l.score, l.tag)?;
        }
    }
    if !wrote_own {
        write_trec(&mut w, lists, tag)?;
    }
    w.flush()?;
    Ok(())
}

fn load_queries(cfg: &PipelineConfig, s: StageName) -> Result<Vec<(String, String)>, PipelineError> {
    read_queries(&cfg.queries_path()).in_stage(s)
}

/// Ranks every query in the queries file; unmatched queries get an empty list.
pub fn rank_all(cfg: &PipelineConfig) -> Result<Vec<RankedList>, PipelineError> {
    let s = StageName::RankAll;
    let queries = load_queries(cfg, s)?;
    let engine = QueryEngine::load(cfg).map_err(|e| match e {
        PipelineError::Stage { source, .. } => PipelineError::Stage { stage: s, source },
        other => other,
    })?;
    let mut lists = Vec::with_capacity(queries.len());
    for (qid, text) in &queries {
        match engine.query(qid, text, cfg.top_k) {
            Ok(o) => lists.push(o.list),
            Err(PipelineError::NoMatch { .. }) => {
                log::warn!("query {qid} matched no entity");
                lists.push(RankedList {
                    query_id: qid.clone(),
                    entries: Vec::new(),
                    excluded: Vec::new(),
                });
            }
            Err(e) => return Err(e),
        }
    }
    replace_run_tag(&cfg.artifact(Artifact::Runs), MEDGRAPH_TAG, &lists).in_stage(s)?;
    Ok(lists)
}

pub fn tfidf_build(cfg: &PipelineConfig) -> Result<TfidfIndex<f64>, PipelineError> {
    let ing = ingest(cfg)?;
    let s = StageName::TfidfBuild;
    let corpus: Vec<(String, String)> = ing
        .tables
        .articles
        .iter()
        .map(|a| (a.pmid.clone(), document_text(a)))
        .collect();
    let targets: Vec<(String, String)> = corpus.iter().filter(|(p, _)| ing.seeds.contains(p)).cloned().collect();
    let tokenizer = cfg.tokenizer().in_stage(s)?;
    let idx = TfidfIndex::build(&corpus, &targets, &tokenizer, cfg.idf).in_stage(s)?;
    idx.write(&cfg.tfidf_dir()).in_stage(s)?;
    Ok(idx)
}

pub fn tfidf_rank(cfg: &PipelineConfig) -> Result<Vec<RankedList>, PipelineError> {
    let s = StageName::TfidfRank;
    let queries = load_queries(cfg, s)?;
    let idx = TfidfIndex::<f64>::read(&cfg.tfidf_dir()).in_stage(s)?;
    let tokenizer = cfg.tokenizer().in_stage(s)?;
    let mut lists = Vec::with_capacity(queries.len());
    for (qid, text) in &queries {
        match idx.rank(qid, text, &tokenizer, Some(cfg.top_k)) {
            Ok(l) => lists.push(l),
            Err(TfidfError::NoMatch) => {
                log::warn!("query {qid} has no weighted term");
                lists.push(RankedList {
                    query_id: qid.clone(),
                    entries: Vec::new(),
                    excluded: Vec::new(),
                });
            }
            Err(e) => return Err(e).in_stage(s),
        }
    }
    replace_run_tag(&cfg.artifact(Artifact::Runs), TFIDF_TAG, &lists).in_stage(s)?;
    Ok(lists)
}

/// Evaluates every tag in the run file, medgraph first.
pub fn eval(cfg: &PipelineConfig) -> Result<EvalReport, PipelineError> {
    let s = StageName::Eval;
    let qrels = Qrels::read(&cfg.qrels_path()).in_stage(s)?;
    let lines = read_trec(&cfg.artifact(Artifact::Runs)).in_stage(s)?;
    let mut by_tag = runs_by_tag(&lines);
    let mut runs: Vec<(String, Run)> = Vec::new();
    for tag in [MEDGRAPH_TAG, TFIDF_TAG] {
        if let Some(r) = by_tag.remove(tag) {
            runs.push((tag.to_string(), r));
        }
    }
    runs.extend(by_tag);
    let report = evaluate(&runs, &qrels, &cfg.eval).in_stage(s)?;
    std::fs::write(cfg.artifact(Artifact::Report), report.to_csv()).in_stage(s)?;
    std::fs::write(cfg.out_dir().join("per_query.csv"), report.per_query_csv()).in_stage(s)?;
    Ok(report)
}

/// Evaluates in-memory lists without touching the run file.
pub fn eval_lists(
    runs: &[(&str, &[RankedList])],
    qrels: &Qrels,
    cfg: &EvalConfig,
) -> Result<EvalReport, PipelineError> {
    let runs: Vec<(String, Run)> = runs.iter().map(|(t, l)| (t.to_string(), run_from_lists(l))).collect();
    evaluate(&runs, qrels, cfg).in_stage(StageName::Eval)
}

pub fn report(cfg: &PipelineConfig) -> Result<String, PipelineError> {
    let r = read_report_csv(&cfg.artifact(Artifact::Report)).in_stage(StageName::Report)?;
    Ok(r.to_markdown())
}

/// Runs every stage in order and writes `manifest.txt` into the output directory.
pub fn run_pipeline(cfg: &PipelineConfig) -> Result<PipelineManifest, PipelineError> {
    let stats = build_kg(cfg)?;
    log::info!("graph: {} nodes, {} edges", stats.total_nodes(), stats.total_edges());
    walks(cfg)?;
    let losses = train(cfg)?;
    log::info!("training losses per epoch: {losses:?}");
    pool(cfg)?;
    index(cfg)?;
    let runs = cfg.artifact(Artifact::Runs);
    if runs.exists() {
        std::fs::remove_file(&runs).in_stage(StageName::RankAll)?;
    }
    rank_all(cfg)?;
    tfidf_build(cfg)?;
    tfidf_rank(cfg)?;
    eval(cfg)?;
    let manifest = PipelineManifest::from_config(cfg);
    manifest
        .write(&cfg.out_dir().join("manifest.txt"))
        .in_stage(StageName::Report)?;
    Ok(manifest)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn config_round_trips_through_pairs() {
        let mut cfg = PipelineConfig::with_data_dir("/tmp/x");
        cfg.apply_text(
            "# comment\nwalk.p = 4\ntrain.dim=16\neval.variants=standard\neval.cutoffs=1,10\ndeterministic=false\n",
        )
        .unwrap();
        assert_eq!(cfg.walk.p, 4.0);
        assert_eq!(cfg.train.dim, 16);
        assert_eq!(cfg.eval.variants, vec![ApVariant::Standard]);
        let mut back = PipelineConfig::with_data_dir("elsewhere");
        for (k, v) in cfg.to_pairs() {
            back.set(&k, &v).unwrap();
        }
        assert_eq!(back.to_pairs(), cfg.to_pairs());
        assert!(cfg.set("nope", "1").is_err());
        assert!(cfg.set("walk.p", "abc").is_err());
    }

    #[test]
    fn manifest_lists_eight_artifacts() {
        let cfg = PipelineConfig::with_data_dir("/d");
        let m = PipelineManifest::from_config(&cfg);
        assert_eq!(m.artifacts.len(), 8);
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("manifest.txt");
        m.write(&p).unwrap();
        let back = PipelineManifest::read(&p).unwrap();
        assert_eq!(back, m);
        assert_eq!(back.to_config().unwrap().to_pairs(), cfg.to_pairs());
    }

    #[test]
    fn missing_tables_names_ingest() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = PipelineConfig::with_data_dir(dir.path());
        let err = run_pipeline(&cfg).unwrap_err();
        assert_eq!(err.stage(), Some(StageName::Ingest));
        assert!(err.to_string().starts_with("ingest stage failed"));
    }

    #[test]
    fn run_file_tags_are_replaced_in_place() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("runs.trec");
        let l = |q: &str, pm: &str| RankedList {
            query_id: q.into(),
            entries: vec![(pm.into(), 0.5)],
            excluded: vec![],
        };
        replace_run_tag(&p, TFIDF_TAG, &[l("a", "1")]).unwrap();
        replace_run_tag(&p, MEDGRAPH_TAG, &[l("a", "2")]).unwrap();
        replace_run_tag(&p, MEDGRAPH_TAG, &[l("a", "3")]).unwrap();
        let text = std::fs::read_to_string(&p).unwrap();
        assert_eq!(text, "a Q0 3 1 0.5 medgraph\na Q0 1 1 0.5 tfidf\n");
    }
}
