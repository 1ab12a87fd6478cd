//! Two-stage article pooling.
//!
//! Stage 1 averages every first-order neighbor of an article (any node
//! type), optionally with the article's own vector. Stage 2 averages the
//! stage-1 vectors of an article's citation neighbors only.

use std::collections::BTreeSet;
use std::fmt;

use rayon::prelude::*;
use thiserror::Error;

use crate::kg::{KnowledgeGraph, NodeId, NodeType};
use crate::scalar::Scalar;
use crate::vectors::{mean, NodeVectors};

#[derive(Debug, Error)]
pub enum PoolingError {
    #[error("article {0} has no embedding")]
    MissingVector(NodeId),
    #[error("{0} is not an article node in the graph")]
    NotAnArticle(NodeId),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PoolingConfig {
    pub include_self_stage1: bool,
    pub include_self_stage2: bool,
}

impl Default for PoolingConfig {
    fn default() -> Self {
        PoolingConfig {
            include_self_stage1: true,
            include_self_stage2: false,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stage {
    Stage1,
    Stage2,
}

impl fmt::Display for Stage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Stage::Stage1 => "stage1",
            Stage::Stage2 => "stage2",
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ArticleEmbeddingSet<F> {
    pub vectors: NodeVectors<F>,
    pub stage: Stage,
}

impl<F: Scalar> ArticleEmbeddingSet<F> {
    pub fn get(&self, article: &NodeId) -> Option<&[F]> {
        self.vectors.get(article)
    }

    pub fn len(&self) -> usize {
        self.vectors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vectors.is_empty()
    }
}

/// Stage 1 over every article node of `g`, in graph order.
pub fn pool_stage1<F: Scalar>(
    g: &KnowledgeGraph,
    x: &NodeVectors<F>,
    cfg: &PoolingConfig,
) -> Result<ArticleEmbeddingSet<F>, PoolingError> {
    let articles: Vec<usize> = g.indices_of_type(NodeType::Article).collect();
    let pooled: Vec<Vec<F>> = articles
        .par_iter()
        .map(|&a| {
            let own = x
                .get(g.node_id(a))
                .ok_or_else(|| PoolingError::MissingVector(g.node_id(a).clone()))?;
            let mut rows: Vec<&[F]> = Vec::with_capacity(g.degree(a) + 1);
            for &n in g.neighbors(a) {
                rows.push(
                    x.get(g.node_id(n))
                        .ok_or_else(|| PoolingError::MissingVector(g.node_id(n).clone()))?,
                );
            }
            if cfg.include_self_stage1 {
                rows.push(own);
            }
            Ok(mean(x.dim(), rows).unwrap_or_else(|| {
                log::warn!("{} has no neighbors; keeping its own vector", g.node_id(a));
                own.to_vec()
            }))
        })
        .collect::<Result<_, PoolingError>>()?;

    let mut vectors = NodeVectors::new(x.dim());
    for (&a, v) in articles.iter().zip(pooled) {
        vectors
            .push(g.node_id(a).clone(), &v)
            .expect("pooled vectors are finite and unique");
    }
    Ok(ArticleEmbeddingSet {
        vectors,
        stage: Stage::Stage1,
    })
}

/// Stage 2 for the target pmids, in ascending pmid-node order.
pub fn pool_stage2<F: Scalar>(
    g: &KnowledgeGraph,
    stage1: &ArticleEmbeddingSet<F>,
    targets: &BTreeSet<String>,
    cfg: &PoolingConfig,
) -> Result<ArticleEmbeddingSet<F>, PoolingError> {
    let dim = stage1.vectors.dim();
    let target_nodes: BTreeSet<NodeId> = targets.iter().map(|p| NodeId::article(p)).collect();
    let mut vectors = NodeVectors::new(dim);
    for id in target_nodes {
        let a = g.index_of(&id).ok_or_else(|| PoolingError::NotAnArticle(id.clone()))?;
        let own = stage1.get(&id).ok_or_else(|| PoolingError::MissingVector(id.clone()))?;
        let mut rows: Vec<&[F]> = g
            .neighbors(a)
            .iter()
            .filter(|&&n| g.node_type(n) == NodeType::Article)
            .map(|&n| {
                stage1
                    .get(g.node_id(n))
                    .ok_or_else(|| PoolingError::MissingVector(g.node_id(n).clone()))
            })
            .collect::<Result<_, _>>()?;
        let has_citations = !rows.is_empty();
        if cfg.include_self_stage2 {
            rows.push(own);
        }
        let v = if has_citations {
            mean(dim, rows).expect("nonempty")
        } else {
            own.to_vec()
        };
        vectors.push(id, &v).expect("pooled vectors are finite and unique");
    }
    Ok(ArticleEmbeddingSet {
        vectors,
        stage: Stage::Stage2,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kg::{build_graph, EdgeType, Triple};
    use proptest::prelude::*;

    fn art(i: u32) -> NodeId {
        NodeId::article(&i.to_string())
    }

    fn author(i: u32) -> NodeId {
        NodeId::new(NodeType::Author, &i.to_string())
    }

    fn vectors(rows: &[(NodeId, Vec<f64>)]) -> NodeVectors<f64> {
        let mut v = NodeVectors::new(rows[0].1.len());
        for (id, r) in rows {
            v.push(id.clone(), r).unwrap();
        }
        v
    }

    const NO_SELF: PoolingConfig = PoolingConfig {
        include_self_stage1: false,
        include_self_stage2: false,
    };

    #[test]
    fn single_neighbor_is_copied() {
        let g = build_graph(&[Triple::new(art(1), EdgeType::WrittenBy, author(1))]).unwrap();
        let x = vectors(&[(art(1), vec![9.0, 9.0]), (author(1), vec![1.0, -2.0])]);
        let s1 = pool_stage1(&g, &x, &NO_SELF).unwrap();
        assert_eq!(s1.get(&art(1)).unwrap(), &[1.0, -2.0]);
        assert_eq!(s1.stage, Stage::Stage1);
    }

    #[test]
    fn mean_of_two_neighbors() {
        let g = build_graph(&[
            Triple::new(art(1), EdgeType::WrittenBy, author(1)),
            Triple::new(art(1), EdgeType::WrittenBy, author(2)),
        ])
        .unwrap();
        let x = vectors(&[
            (art(1), vec![5.0, 5.0]),
            (author(1), vec![1.0, 0.0]),
            (author(2), vec![0.0, 1.0]),
        ]);
        assert_eq!(
            pool_stage1(&g, &x, &NO_SELF).unwrap().get(&art(1)).unwrap(),
            &[0.5, 0.5]
        );
        let with_self = pool_stage1(&g, &x, &PoolingConfig::default()).unwrap();
        assert_eq!(with_self.get(&art(1)).unwrap(), &[2.0, 2.0]);
    }

    #[test]
    fn missing_vector_is_fatal() {
        let g = build_graph(&[Triple::new(art(1), EdgeType::WrittenBy, author(1))]).unwrap();
        let x = vectors(&[(author(1), vec![1.0])]);
        assert!(matches!(
            pool_stage1(&g, &x, &NO_SELF),
            Err(PoolingError::MissingVector(_))
        ));
    }

    #[test]
    fn stage2_averages_article_neighbors_only() {
        // a3 cites a2, a4, a6 and has an author; only articles count.
        let g = build_graph(&[
            Triple::new(art(3), EdgeType::Cites, art(2)),
            Triple::new(art(3), EdgeType::Cites, art(4)),
            Triple::new(art(6), EdgeType::Cites, art(3)),
            Triple::new(art(3), EdgeType::WrittenBy, author(1)),
            Triple::new(art(7), EdgeType::WrittenBy, author(1)),
        ])
        .unwrap();
        let s1 = ArticleEmbeddingSet {
            vectors: vectors(&[
                (art(2), vec![3.0, 0.0]),
                (art(3), vec![100.0, 100.0]),
                (art(4), vec![0.0, 6.0]),
                (art(6), vec![3.0, 3.0]),
                (art(7), vec![-1.0, -1.0]),
            ]),
            stage: Stage::Stage1,
        };
        let targets: BTreeSet<String> = ["3", "7"].iter().map(|s| s.to_string()).collect();
        let s2 = pool_stage2(&g, &s1, &targets, &PoolingConfig::default()).unwrap();
        assert_eq!(s2.get(&art(3)).unwrap(), &[2.0, 3.0]);
        // no citations: falls back to its own stage-1 vector
        assert_eq!(s2.get(&art(7)).unwrap(), &[-1.0, -1.0]);
        assert_eq!(s2.len(), 2);
        assert_eq!(s2.stage, Stage::Stage2);

        let with_self = PoolingConfig {
            include_self_stage2: true,
            ..Default::default()
        };
        let s2 = pool_stage2(&g, &s1, &targets, &with_self).unwrap();
        assert_eq!(s2.get(&art(3)).unwrap(), &[26.5, 27.25]);
    }

    #[test]
    fn ten_neighbors_match_independent_sum() {
        let triples: Vec<Triple> = (1..=10)
            .map(|i| Triple::new(art(0), EdgeType::WrittenBy, author(i)))
            .collect();
        let g = build_graph(&triples).unwrap();
        let mut rows = vec![(art(0), vec![0.0; 3])];
        for i in 1..=10u32 {
            let f = f64::from(i);
            rows.push((author(i), vec![f.sin(), f.cos() * 1e3, 1.0 / f]));
        }
        let x = vectors(&rows);
        let got = pool_stage1(&g, &x, &NO_SELF).unwrap();
        for k in 0..3 {
            let mut sum = 0.0;
            for i in (1..=10u32).rev() {
                sum += x.get(&author(i)).unwrap()[k];
            }
            assert!((got.get(&art(0)).unwrap()[k] - sum / 10.0).abs() < 1e-12);
        }
    }

    #[test]
    fn stage2_is_order_free() {
        let mut triples: Vec<Triple> = (1..=6).map(|i| Triple::new(art(0), EdgeType::Cites, art(i))).collect();
        let g1 = build_graph(&triples).unwrap();
        triples.reverse();
        let g2 = build_graph(&triples).unwrap();
        let mut rows = vec![(art(0), vec![0.0, 0.0])];
        for i in 1..=6u32 {
            rows.push((art(i), vec![f64::from(i).sqrt(), 1.0 / f64::from(i)]));
        }
        let s1 = ArticleEmbeddingSet {
            vectors: vectors(&rows),
            stage: Stage::Stage1,
        };
        let targets: BTreeSet<String> = ["0".to_string()].into();
        let a = pool_stage2(&g1, &s1, &targets, &NO_SELF).unwrap();
        let b = pool_stage2(&g2, &s1, &targets, &NO_SELF).unwrap();
        for (x, y) in a.get(&art(0)).unwrap().iter().zip(b.get(&art(0)).unwrap()) {
            assert!((x - y).abs() < 1e-12);
        }
    }

    fn star(neighbors: &[Vec<f64>]) -> (KnowledgeGraph, NodeVectors<f64>) {
        let triples: Vec<Triple> = (0..neighbors.len() as u32)
            .map(|i| Triple::new(art(0), EdgeType::WrittenBy, author(i)))
            .collect();
        let g = build_graph(&triples).unwrap();
        let mut rows = vec![(art(0), vec![0.0; neighbors[0].len()])];
        for (i, v) in neighbors.iter().enumerate() {
            rows.push((author(i as u32), v.clone()));
        }
        (g, vectors(&rows))
    }

    proptest! {
        #[test]
        fn pooled_coordinates_stay_in_hull(rows in proptest::collection::vec(proptest::collection::vec(-100.0f64..100.0, 3), 1..12)) {
            let (g, x) = star(&rows);
            let out = pool_stage1(&g, &x, &NO_SELF).unwrap();
            let v = out.get(&art(0)).unwrap();
            for k in 0..3 {
                let lo = rows.iter().map(|r| r[k]).fold(f64::INFINITY, f64::min);
                let hi = rows.iter().map(|r| r[k]).fold(f64::NEG_INFINITY, f64::max);
                prop_assert!(v[k] >= lo - 1e-9 && v[k] <= hi + 1e-9);
            }
        }

        #[test]
        fn uniform_inputs_are_fixed(w in proptest::collection::vec(-100.0f64..100.0, 3), n in 1usize..10) {
            let (g, x) = star(&vec![w.clone(); n]);
            let out = pool_stage1(&g, &x, &NO_SELF).unwrap();
            for (a, b) in out.get(&art(0)).unwrap().iter().zip(&w) {
                prop_assert!((a - b).abs() <= 1e-12 * b.abs().max(1.0));
            }
        }
    }
}
