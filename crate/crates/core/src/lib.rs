//! Knowledge-graph embeddings for semantic article retrieval.
//!
//! Relational bibliographic tables become a typed graph; second-order random
//! walks feed a skip-gram trainer; article vectors are pooled from their
//! neighbours; free-text queries are matched to entities and ranked by cosine
//! similarity. A TF-IDF ranker and an evaluation harness sit alongside.
//!
//! Numeric code is generic over [`Scalar`] (`f32` or `f64`); the aliases below
//! fix the precision.

pub mod eval;
pub mod index;
pub mod kg;
pub mod pipeline;
pub mod pooling;
pub mod query;
pub mod rank;
pub mod scalar;
pub mod sgns;
pub mod synth;
pub mod tables;
pub mod tfidf;
pub mod vectors;
pub mod walk;

pub use eval::{evaluate, ApVariant, EvalConfig, EvalReport, Qrels, Run};
pub use index::{build_index, EntityIndex};
pub use kg::{build_graph, extract_triples, EdgeType, KnowledgeGraph, NodeId, NodeType, Triple};
pub use pipeline::{query_once, run_pipeline, PipelineConfig, PipelineError, PipelineManifest, QueryEngine};
pub use pooling::{pool_stage1, pool_stage2, ArticleEmbeddingSet, PoolingConfig};
pub use query::{embed_query, expand, match_keywords, MatchConfig, QueryMatch, QueryVector, Tokenizer};
pub use rank::{cosine, rank_articles, CutoffSchedule, RankedList};
pub use scalar::Scalar;
pub use sgns::{train, EmbeddingMatrix, TrainConfig};
pub use synth::{generate_synthetic, SynthConfig, SynthData};
pub use tables::{load_tables, EntityType, RelationalTables};
pub use tfidf::{IdfVariant, SparseVector, TfidfIndex, Vocabulary};
pub use vectors::NodeVectors;
pub use walk::{generate_walks, WalkConfig, WalkCorpus};

pub type EmbeddingMatrix32 = EmbeddingMatrix<f32>;
pub type EmbeddingMatrix64 = EmbeddingMatrix<f64>;
pub type NodeVectors32 = NodeVectors<f32>;
pub type NodeVectors64 = NodeVectors<f64>;
pub type ArticleEmbeddingSet32 = ArticleEmbeddingSet<f32>;
pub type ArticleEmbeddingSet64 = ArticleEmbeddingSet<f64>;
pub type QueryVector32 = QueryVector<f32>;
pub type QueryVector64 = QueryVector<f64>;
pub type TfidfIndex32 = TfidfIndex<f32>;
pub type TfidfIndex64 = TfidfIndex<f64>;
