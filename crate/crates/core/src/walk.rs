//! Second-order biased random walks over the knowledge graph.
//!
//! From a step `prev -> cur`, a neighbor `x` of `cur` gets unnormalized weight
//! `1/p` when `x == prev`, `1` when `x` is adjacent to `prev`, and `1/q`
//! otherwise. The first step of each walk is uniform. Edge types and
//! multiplicities are ignored.

use std::collections::HashMap;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use thiserror::Error;

use crate::kg::{GraphError, KnowledgeGraph, NodeId};

#[derive(Debug, Error)]
pub enum WalkError {
    #[error("invalid walk config: {0}")]
    Config(&'static str),
    #[error("node {0} has no neighbors")]
    Isolated(NodeId),
    #[error("walks need a nonempty graph")]
    EmptyGraph,
    #[error("{path}:{line}: {source}")]
    Parse {
        path: String,
        line: usize,
        #[source]
        source: GraphError,
    },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WalkConfig {
    /// Return bias.
    pub p: f64,
    /// In-out bias.
    pub q: f64,
    pub walk_length: usize,
    pub walks_per_node: usize,
    pub rng_seed: u64,
}

impl Default for WalkConfig {
    fn default() -> Self {
        WalkConfig {
            p: 2.0,
            q: 0.5,
            walk_length: 50,
            walks_per_node: 5,
            rng_seed: 0,
        }
    }
}

impl WalkConfig {
    pub fn validate(&self) -> Result<(), WalkError> {
        if !(self.p > 0.0 && self.p.is_finite()) {
            return Err(WalkError::Config("p must be positive"));
        }
        if !(self.q > 0.0 && self.q.is_finite()) {
            return Err(WalkError::Config("q must be positive"));
        }
        if self.walk_length == 0 {
            return Err(WalkError::Config("walk_length must be at least 1"));
        }
        if self.walks_per_node == 0 {
            return Err(WalkError::Config("walks_per_node must be at least 1"));
        }
        Ok(())
    }
}

/// Walks as sequences of indices into an interned node table.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct WalkCorpus {
    nodes: Vec<NodeId>,
    walks: Vec<Vec<u32>>,
}

impl WalkCorpus {
    pub fn from_walks(walks: impl IntoIterator<Item = Vec<NodeId>>) -> Self {
        let mut nodes = Vec::new();
        let mut lookup: HashMap<NodeId, u32> = HashMap::new();
        let walks = walks
            .into_iter()
            .map(|walk| {
                walk.into_iter()
                    .map(|id| {
                        *lookup.entry(id).or_insert_with_key(|id| {
                            nodes.push(id.clone());
                            (nodes.len() - 1) as u32
                        })
                    })
                    .collect()
            })
            .collect();
        WalkCorpus { nodes, walks }
    }

    pub fn len(&self) -> usize {
        self.walks.len()
    }

    pub fn is_empty(&self) -> bool {
        self.walks.is_empty()
    }

    /// Interned node table; walk entries index into it.
    pub fn nodes(&self) -> &[NodeId] {
        &self.nodes
    }

    pub fn walks(&self) -> &[Vec<u32>] {
        &self.walks
    }

    pub fn walk_ids(&self, i: usize) -> impl Iterator<Item = &NodeId> + '_ {
        self.walks[i].iter().map(|&t| &self.nodes[t as usize])
    }

    pub fn token_count(&self) -> usize {
        self.walks.iter().map(Vec::len).sum()
    }

    pub fn write_text<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        for walk in &self.walks {
            let mut first = true;
            for &t in walk {
                if !first {
                    w.write_all(b" ")?;
                }
                first = false;
                w.write_all(self.nodes[t as usize].as_str().as_bytes())?;
            }
            w.write_all(b"\n")?;
        }
        Ok(())
    }

    pub fn write(&self, path: &Path) -> Result<(), WalkError> {
        let mut w = BufWriter::new(File::create(path)?);
        self.write_text(&mut w)?;
        w.flush()?;
        Ok(())
    }

    pub fn read(path: &Path) -> Result<Self, WalkError> {
        let reader = BufReader::new(File::open(path)?);
        let mut walks = Vec::new();
        for (i, line) in reader.lines().enumerate() {
            let line = line?;
            let walk = line
                .split_whitespace()
                .map(str::parse)
                .collect::<Result<Vec<NodeId>, _>>()
                .map_err(|source| WalkError::Parse {
                    path: path.display().to_string(),
                    line: i + 1,
                    source,
                })?;
            if !walk.is_empty() {
                walks.push(walk);
            }
        }
        Ok(WalkCorpus::from_walks(walks))
    }
}

/// Normalized next-step distribution over `neighbors(cur)`, in neighbor order.
pub fn transition_weights(
    g: &KnowledgeGraph,
    prev: Option<usize>,
    cur: usize,
    cfg: &WalkConfig,
) -> Result<Vec<(usize, f64)>, WalkError> {
    let mut w = unnormalized_weights(g, prev, cur, cfg);
    if w.is_empty() {
        return Err(WalkError::Isolated(g.node_id(cur).clone()));
    }
    let total: f64 = w.iter().map(|&(_, x)| x).sum();
    for (_, x) in &mut w {
        *x /= total;
    }
    Ok(w)
}

fn unnormalized_weights(g: &KnowledgeGraph, prev: Option<usize>, cur: usize, cfg: &WalkConfig) -> Vec<(usize, f64)> {
    let neighbors = g.neighbors(cur);
    match prev {
        None => neighbors.iter().map(|&x| (x, 1.0)).collect(),
        Some(prev) => neighbors
            .iter()
            .map(|&x| {
                let w = if x == prev {
                    1.0 / cfg.p
                } else if g.is_adjacent(x, prev) {
                    1.0
                } else {
                    1.0 / cfg.q
                };
                (x, w)
            })
            .collect(),
    }
}

fn draw(weights: &[(usize, f64)], rng: &mut impl Rng) -> usize {
    let total: f64 = weights.iter().map(|&(_, w)| w).sum();
    let mut r = rng.gen::<f64>() * total;
    for &(x, w) in weights {
        if r < w {
            return x;
        }
        r -= w;
    }
    weights.last().expect("nonempty weights").0
}

/// RNG for one walk; depends only on the seed, start node and walk index.
pub fn walk_rng(cfg: &WalkConfig, start: usize, walk_index: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.rng_seed);
    rng.set_stream((start as u64) * (cfg.walks_per_node as u64) + walk_index as u64);
    rng
}

/// A single walk of at most `walk_length` nodes starting at `start`.
pub fn walk_from(g: &KnowledgeGraph, start: usize, cfg: &WalkConfig, rng: &mut impl Rng) -> Vec<usize> {
    let mut walk = Vec::with_capacity(cfg.walk_length);
    walk.push(start);
    let mut prev = None;
    let mut cur = start;
    while walk.len() < cfg.walk_length {
        let weights = unnormalized_weights(g, prev, cur, cfg);
        if weights.is_empty() {
            break;
        }
        let next = draw(&weights, rng);
        walk.push(next);
        prev = Some(cur);
        cur = next;
    }
    walk
}

/// `walks_per_node` rounds, each visiting every node in index order.
/// Isolated nodes contribute single-node walks. Output is independent of
/// the rayon thread count.
pub fn generate_walks(g: &KnowledgeGraph, cfg: &WalkConfig) -> Result<WalkCorpus, WalkError> {
    cfg.validate()?;
    if g.is_empty() {
        return Err(WalkError::EmptyGraph);
    }
    let n = g.node_count();
    let mut walks = Vec::with_capacity(n * cfg.walks_per_node);
    for round in 0..cfg.walks_per_node {
        let batch: Vec<Vec<u32>> = (0..n)
            .into_par_iter()
            .map(|start| {
                let mut rng = walk_rng(cfg, start, round);
                walk_from(g, start, cfg, &mut rng)
                    .into_iter()
                    .map(|i| i as u32)
                    .collect()
            })
            .collect();
        walks.extend(batch);
    }
    Ok(WalkCorpus {
        nodes: g.node_ids().to_vec(),
        walks,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kg::{build_graph, EdgeType, NodeType, Triple};

    fn art(i: u32) -> NodeId {
        NodeId::article(&i.to_string())
    }

    fn cites(edges: &[(u32, u32)]) -> KnowledgeGraph {
        let triples: Vec<Triple> = edges
            .iter()
            .map(|&(a, b)| Triple::new(art(a), EdgeType::Cites, art(b)))
            .collect();
        build_graph(&triples).unwrap()
    }

    fn cfg(p: f64, q: f64) -> WalkConfig {
        WalkConfig {
            p,
            q,
            walk_length: 10,
            walks_per_node: 2,
            rng_seed: 7,
        }
    }

    fn idx(g: &KnowledgeGraph, i: u32) -> usize {
        g.index_of(&art(i)).unwrap()
    }

    #[test]
    fn first_step_is_uniform() {
        let g = cites(&[(0, 1), (0, 2), (0, 3)]);
        let w = transition_weights(&g, None, idx(&g, 0), &cfg(2.0, 0.5)).unwrap();
        assert_eq!(w.len(), 3);
        for (_, p) in w {
            assert!((p - 1.0 / 3.0).abs() < 1e-15);
        }
    }

    #[test]
    fn biased_step_weights() {
        // prev=1 (u), cur=0, neighbors of 0: u=1, x=2 (adjacent to u), y=3.
        let g = cites(&[(0, 1), (0, 2), (0, 3), (1, 2)]);
        let w: HashMap<usize, f64> = transition_weights(&g, Some(idx(&g, 1)), idx(&g, 0), &cfg(2.0, 0.5))
            .unwrap()
            .into_iter()
            .collect();
        assert!((w[&idx(&g, 1)] - 1.0 / 7.0).abs() < 1e-12);
        assert!((w[&idx(&g, 2)] - 2.0 / 7.0).abs() < 1e-12);
        assert!((w[&idx(&g, 3)] - 4.0 / 7.0).abs() < 1e-12);
    }

    #[test]
    fn unbiased_is_uniform() {
        let g = cites(&[(0, 1), (0, 2), (0, 3), (1, 2)]);
        let w = transition_weights(&g, Some(idx(&g, 1)), idx(&g, 0), &cfg(1.0, 1.0)).unwrap();
        for (_, p) in w {
            assert!((p - 1.0 / 3.0).abs() < 1e-15);
        }
    }

    #[test]
    fn isolated_node_errors() {
        let mut triples = vec![Triple::new(art(0), EdgeType::Cites, art(1))];
        triples.push(Triple::new(art(5), EdgeType::Cites, art(5)));
        let g = build_graph(&triples).unwrap();
        let lone = idx(&g, 5);
        assert!(matches!(
            transition_weights(&g, None, lone, &cfg(1.0, 1.0)),
            Err(WalkError::Isolated(_))
        ));
        let corpus = generate_walks(&g, &cfg(1.0, 1.0)).unwrap();
        let single: Vec<_> = corpus.walks().iter().filter(|w| w[0] as usize == lone).collect();
        assert_eq!(single.len(), 2);
        assert!(single.iter().all(|w| w.len() == 1));
    }

    #[test]
    fn two_node_path_alternates() {
        let g = cites(&[(0, 1)]);
        let c = WalkConfig {
            walk_length: 3,
            ..cfg(2.0, 0.5)
        };
        let corpus = generate_walks(&g, &c).unwrap();
        for w in corpus.walks() {
            assert_eq!(w.len(), 3);
            assert_eq!(w[0], w[2]);
            assert_ne!(w[0], w[1]);
        }
    }

    #[test]
    fn walk_count_contract() {
        let edges: Vec<(u32, u32)> = (0..9).map(|i| (i, i + 1)).collect();
        let g = cites(&edges);
        let c = WalkConfig {
            walks_per_node: 5,
            ..cfg(1.0, 1.0)
        };
        let corpus = generate_walks(&g, &c).unwrap();
        assert_eq!(corpus.len(), 50);
        for w in corpus.walks() {
            assert!(w.len() <= c.walk_length);
            for pair in w.windows(2) {
                assert!(g.is_adjacent(pair[0] as usize, pair[1] as usize));
            }
        }
    }

    #[test]
    fn deterministic_across_thread_pools() {
        let edges: Vec<(u32, u32)> = (0..30).map(|i| (i, (i * 7 + 3) % 31)).collect();
        let g = cites(&edges);
        let c = cfg(2.0, 0.5);
        let a = generate_walks(&g, &c).unwrap();
        let pool = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap();
        let b = pool.install(|| generate_walks(&g, &c).unwrap());
        assert_eq!(a, b);
    }

    #[test]
    fn config_validation() {
        assert!(generate_walks(&cites(&[(0, 1)]), &cfg(0.0, 1.0)).is_err());
        assert!(generate_walks(&cites(&[(0, 1)]), &cfg(1.0, -1.0)).is_err());
        assert!(matches!(
            generate_walks(&KnowledgeGraph::default(), &cfg(1.0, 1.0)),
            Err(WalkError::EmptyGraph)
        ));
    }

    #[test]
    fn text_round_trip() {
        let g = build_graph(&[
            Triple::new(art(1), EdgeType::WrittenBy, NodeId::new(NodeType::Author, "9")),
            Triple::new(art(1), EdgeType::Cites, art(2)),
        ])
        .unwrap();
        let corpus = generate_walks(&g, &cfg(1.0, 1.0)).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("walks.txt");
        corpus.write(&path).unwrap();
        let back = WalkCorpus::read(&path).unwrap();
        assert_eq!(back.len(), corpus.len());
        for i in 0..corpus.len() {
            assert!(back.walk_ids(i).eq(corpus.walk_ids(i)));
        }
    }
}
