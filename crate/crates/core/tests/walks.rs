use std::collections::BTreeSet;

use medgraph_core::walk::transition_weights;
use medgraph_core::{build_graph, generate_walks, EdgeType, KnowledgeGraph, NodeId, Triple, WalkConfig};

fn graph(edges: &[(u32, u32)]) -> KnowledgeGraph {
    let triples: Vec<Triple> = edges
        .iter()
        .map(|&(a, b)| {
            Triple::new(
                NodeId::article(&a.to_string()),
                EdgeType::Cites,
                NodeId::article(&b.to_string()),
            )
        })
        .collect();
    build_graph(&triples).unwrap()
}

fn ring_with_chords() -> KnowledgeGraph {
    let mut edges: Vec<(u32, u32)> = (0..30).map(|i| (i, (i + 1) % 30)).collect();
    edges.extend((0..30).step_by(3).map(|i| (i, (i + 7) % 30)));
    graph(&edges)
}

fn walks_with_threads(g: &KnowledgeGraph, cfg: &WalkConfig, threads: usize) -> Vec<Vec<u32>> {
    let pool = rayon::ThreadPoolBuilder::new().num_threads(threads).build().unwrap();
    pool.install(|| generate_walks(g, cfg).unwrap().walks().to_vec())
}

#[test]
fn corpus_is_independent_of_thread_count() {
    let g = ring_with_chords();
    let cfg = WalkConfig {
        walk_length: 25,
        walks_per_node: 4,
        rng_seed: 99,
        ..WalkConfig::default()
    };
    let one = walks_with_threads(&g, &cfg, 1);
    assert_eq!(one, walks_with_threads(&g, &cfg, 4));
    assert_eq!(one, walks_with_threads(&g, &cfg, 7));
}

#[test]
fn walks_follow_edges_and_have_full_length() {
    let g = ring_with_chords();
    let cfg = WalkConfig {
        walk_length: 40,
        walks_per_node: 3,
        ..WalkConfig::default()
    };
    let corpus = generate_walks(&g, &cfg).unwrap();
    assert_eq!(corpus.len(), g.node_count() * 3);
    for w in corpus.walks() {
        assert_eq!(w.len(), 40);
        for pair in w.windows(2) {
            assert!(g.is_adjacent(pair[0] as usize, pair[1] as usize));
        }
    }
    // every round starts once at every node
    for round in corpus.walks().chunks(g.node_count()) {
        let starts: BTreeSet<u32> = round.iter().map(|w| w[0]).collect();
        assert_eq!(starts.len(), g.node_count());
    }
}

#[test]
fn different_seeds_give_different_corpora() {
    let g = ring_with_chords();
    let a = WalkConfig {
        rng_seed: 1,
        walk_length: 20,
        walks_per_node: 2,
        ..WalkConfig::default()
    };
    let b = WalkConfig { rng_seed: 2, ..a };
    assert_ne!(
        generate_walks(&g, &a).unwrap().walks(),
        generate_walks(&g, &b).unwrap().walks()
    );
}

#[test]
fn unbiased_walk_is_uniform_over_neighbors() {
    let g = ring_with_chords();
    let cfg = WalkConfig {
        p: 1.0,
        q: 1.0,
        ..WalkConfig::default()
    };
    for cur in 0..g.node_count() {
        let prev = g.neighbors(cur)[0];
        let w = transition_weights(&g, Some(prev), cur, &cfg).unwrap();
        let expected = 1.0 / g.degree(cur) as f64;
        for (_, x) in w {
            assert!((x - expected).abs() < 1e-15);
        }
    }
}

#[test]
fn corpus_round_trips_through_text() {
    let g = graph(&[(1, 2), (2, 3), (3, 1), (3, 4)]);
    let cfg = WalkConfig {
        walk_length: 8,
        walks_per_node: 2,
        ..WalkConfig::default()
    };
    let corpus = generate_walks(&g, &cfg).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("walks.txt");
    corpus.write(&path).unwrap();
    let back = medgraph_core::WalkCorpus::read(&path).unwrap();
    let ids = |c: &medgraph_core::WalkCorpus| -> Vec<Vec<String>> {
        (0..c.len())
            .map(|i| c.walk_ids(i).map(|n| n.to_string()).collect())
            .collect()
    };
    assert_eq!(ids(&corpus), ids(&back));
}
