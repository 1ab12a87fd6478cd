//! Typed knowledge graph extracted from the relational tables.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;
use std::str::FromStr;

use thiserror::Error;

use crate::tables::{EntityType, RelationalTables};

#[derive(Debug, Error)]
pub enum GraphError {
    #[error("malformed node id {0:?}")]
    BadNodeId(String),
    #[error("unknown edge type {0:?}")]
    BadEdgeType(String),
    #[error("type-inconsistent triple {0}")]
    TypeMismatch(Triple),
    #[error("{path}:{line}: {msg}")]
    Parse { path: String, line: usize, msg: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum NodeType {
    Article,
    Author,
    NihProject,
    MeshTerm,
    ChemicalSubstance,
    Disease,
    Drug,
    Gene,
    Species,
}

impl NodeType {
    pub const ALL: [NodeType; 9] = [
        NodeType::Article,
        NodeType::Author,
        NodeType::NihProject,
        NodeType::MeshTerm,
        NodeType::ChemicalSubstance,
        NodeType::Disease,
        NodeType::Drug,
        NodeType::Gene,
        NodeType::Species,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            NodeType::Article => "article",
            NodeType::Author => "author",
            NodeType::NihProject => "nih_project",
            NodeType::MeshTerm => "mesh_term",
            NodeType::ChemicalSubstance => "chemical_substance",
            NodeType::Disease => "disease",
            NodeType::Drug => "drug",
            NodeType::Gene => "gene",
            NodeType::Species => "species",
        }
    }

    /// Identifier namespace used in canonical node ids.
    pub fn namespace(self) -> &'static str {
        match self {
            NodeType::Article => "pmid",
            NodeType::Author => "aid",
            NodeType::NihProject => "project_id",
            NodeType::MeshTerm => "mesh_id",
            NodeType::ChemicalSubstance => "substance_id",
            NodeType::Disease | NodeType::Drug | NodeType::Gene | NodeType::Species => "eid",
        }
    }
}

impl From<EntityType> for NodeType {
    fn from(t: EntityType) -> Self {
        match t {
            EntityType::Drug => NodeType::Drug,
            EntityType::Disease => NodeType::Disease,
            EntityType::Gene => NodeType::Gene,
            EntityType::Species => NodeType::Species,
        }
    }
}

impl fmt::Display for NodeType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for NodeType {
    type Err = GraphError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        NodeType::ALL
            .into_iter()
            .find(|t| t.as_str() == s)
            .ok_or_else(|| GraphError::BadNodeId(s.to_string()))
    }
}

/// Canonical `type/namespace/localid` node identifier.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct NodeId(String);

impl NodeId {
    pub fn new(node_type: NodeType, local_id: &str) -> Self {
        debug_assert!(!local_id.is_empty() && !local_id.contains('/'));
        NodeId(format!("{}/{}/{}", node_type.as_str(), node_type.namespace(), local_id))
    }

    pub fn article(pmid: &str) -> Self {
        NodeId::new(NodeType::Article, pmid)
    }

    pub fn entity(entity_type: EntityType, entity_id: &str) -> Self {
        NodeId::new(entity_type.into(), entity_id)
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }

    pub fn node_type(&self) -> NodeType {
        let head = self.0.split('/').next().unwrap_or_default();
        head.parse().expect("NodeId is validated at construction")
    }

    pub fn namespace(&self) -> &str {
        self.0.split('/').nth(1).unwrap_or_default()
    }

    pub fn local_id(&self) -> &str {
        self.0.rsplit('/').next().unwrap_or_default()
    }
}

impl fmt::Display for NodeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl FromStr for NodeId {
    type Err = GraphError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let bad = || GraphError::BadNodeId(s.to_string());
        let parts: Vec<&str> = s.split('/').collect();
        if parts.len() != 3 || parts.iter().any(|p| p.is_empty()) || s.contains(char::is_whitespace) {
            return Err(bad());
        }
        let node_type: NodeType = parts[0].parse().map_err(|_| bad())?;
        if parts[1] != node_type.namespace() {
            return Err(bad());
        }
        Ok(NodeId(s.to_string()))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum EdgeType {
    Cites,
    WrittenBy,
    MentionsDisease,
    MentionsDrug,
    MentionsGene,
    MentionsSpecies,
    FundedBy,
    RelatedToMesh,
    RelatedToSubstance,
}

impl EdgeType {
    pub const ALL: [EdgeType; 9] = [
        EdgeType::Cites,
        EdgeType::WrittenBy,
        EdgeType::MentionsDisease,
        EdgeType::MentionsDrug,
        EdgeType::MentionsGene,
        EdgeType::MentionsSpecies,
        EdgeType::FundedBy,
        EdgeType::RelatedToMesh,
        EdgeType::RelatedToSubstance,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            EdgeType::Cites => "cites",
            EdgeType::WrittenBy => "writtenBy",
            EdgeType::MentionsDisease => "mentionsDisease",
            EdgeType::MentionsDrug => "mentionsDrug",
            EdgeType::MentionsGene => "mentionsGene",
            EdgeType::MentionsSpecies => "mentionsSpecies",
            EdgeType::FundedBy => "fundedBy",
            EdgeType::RelatedToMesh => "relatedToMeSH",
            EdgeType::RelatedToSubstance => "relatedToSubstance",
        }
    }

    /// (subject type, object type). The subject is always an article.
    pub fn endpoints(self) -> (NodeType, NodeType) {
        let object = match self {
            EdgeType::Cites => NodeType::Article,
            EdgeType::WrittenBy => NodeType::Author,
            EdgeType::MentionsDisease => NodeType::Disease,
            EdgeType::MentionsDrug => NodeType::Drug,
            EdgeType::MentionsGene => NodeType::Gene,
            EdgeType::MentionsSpecies => NodeType::Species,
            EdgeType::FundedBy => NodeType::NihProject,
            EdgeType::RelatedToMesh => NodeType::MeshTerm,
            EdgeType::RelatedToSubstance => NodeType::ChemicalSubstance,
        };
        (NodeType::Article, object)
    }

    pub fn mentions(entity_type: EntityType) -> Self {
        match entity_type {
            EntityType::Drug => EdgeType::MentionsDrug,
            EntityType::Disease => EdgeType::MentionsDisease,
            EntityType::Gene => EdgeType::MentionsGene,
            EntityType::Species => EdgeType::MentionsSpecies,
        }
    }
}

impl fmt::Display for EdgeType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for EdgeType {
    type Err = GraphError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        EdgeType::ALL
            .into_iter()
            .find(|t| t.as_str() == s)
            .ok_or_else(|| GraphError::BadEdgeType(s.to_string()))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Triple {
    pub subject: NodeId,
    pub predicate: EdgeType,
    pub object: NodeId,
}

impl Triple {
    pub fn new(subject: NodeId, predicate: EdgeType, object: NodeId) -> Self {
        Triple {
            subject,
            predicate,
            object,
        }
    }

    pub fn is_type_consistent(&self) -> bool {
        let (s, o) = self.predicate.endpoints();
        self.subject.node_type() == s && self.object.node_type() == o
    }
}

impl fmt::Display for Triple {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "<{}, {}, {}>", self.subject, self.predicate, self.object)
    }
}

/// First-order citation closure: the seeds, everything they cite, and
/// everything citing them.
pub fn expand_citations(tables: &RelationalTables, seeds: &BTreeSet<String>) -> BTreeSet<String> {
    let mut out = seeds.clone();
    for r in &tables.references {
        if seeds.contains(&r.pmid) {
            out.insert(r.ref_pmid.clone());
        }
        if seeds.contains(&r.ref_pmid) {
            out.insert(r.pmid.clone());
        }
    }
    out
}

/// Emits the deduplicated, sorted triples for every in-scope article.
pub fn extract_triples(tables: &RelationalTables, scope: &BTreeSet<String>) -> Vec<Triple> {
    let mut triples = BTreeSet::new();
    let in_scope = |pmid: &String| scope.contains(pmid);

    for r in tables.authors.iter().filter(|r| in_scope(&r.pmid)) {
        triples.insert(Triple::new(
            NodeId::article(&r.pmid),
            EdgeType::WrittenBy,
            NodeId::new(NodeType::Author, &r.aid),
        ));
    }
    for r in tables.mentions.iter().filter(|r| in_scope(&r.pmid)) {
        triples.insert(Triple::new(
            NodeId::article(&r.pmid),
            EdgeType::mentions(r.entity_type),
            NodeId::entity(r.entity_type, &r.entity_id),
        ));
    }
    for r in tables.nih_links.iter().filter(|r| in_scope(&r.pmid)) {
        triples.insert(Triple::new(
            NodeId::article(&r.pmid),
            EdgeType::FundedBy,
            NodeId::new(NodeType::NihProject, &r.project_id),
        ));
    }
    for r in tables.mesh_links.iter().filter(|r| in_scope(&r.pmid)) {
        triples.insert(Triple::new(
            NodeId::article(&r.pmid),
            EdgeType::RelatedToMesh,
            NodeId::new(NodeType::MeshTerm, &r.mesh_id),
        ));
    }
    for r in tables.substance_links.iter().filter(|r| in_scope(&r.pmid)) {
        triples.insert(Triple::new(
            NodeId::article(&r.pmid),
            EdgeType::RelatedToSubstance,
            NodeId::new(NodeType::ChemicalSubstance, &r.substance_id),
        ));
    }
    for r in &tables.references {
        if r.pmid != r.ref_pmid && in_scope(&r.pmid) && in_scope(&r.ref_pmid) {
            triples.insert(Triple::new(
                NodeId::article(&r.pmid),
                EdgeType::Cites,
                NodeId::article(&r.ref_pmid),
            ));
        }
    }
    triples.into_iter().collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Edge {
    pub subject: usize,
    pub object: usize,
    pub edge_type: EdgeType,
}

/// Undirected typed graph with dense node indices assigned in sorted
/// node-id order.
#[derive(Debug, Clone, Default)]
pub struct KnowledgeGraph {
    ids: Vec<NodeId>,
    lookup: HashMap<NodeId, usize>,
    adjacency: Vec<Vec<(usize, EdgeType)>>,
    neighbors: Vec<Vec<usize>>,
    edges: Vec<Edge>,
}

impl KnowledgeGraph {
    pub fn node_count(&self) -> usize {
        self.ids.len()
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }

    pub fn node_ids(&self) -> &[NodeId] {
        &self.ids
    }

    pub fn node_id(&self, index: usize) -> &NodeId {
        &self.ids[index]
    }

    pub fn node_type(&self, index: usize) -> NodeType {
        self.ids[index].node_type()
    }

    pub fn index_of(&self, id: &NodeId) -> Option<usize> {
        self.lookup.get(id).copied()
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    /// Distinct neighbor indices, ascending. Edge types are ignored.
    pub fn neighbors(&self, index: usize) -> &[usize] {
        &self.neighbors[index]
    }

    /// Neighbors together with the type of the connecting edge.
    pub fn typed_neighbors(&self, index: usize) -> &[(usize, EdgeType)] {
        &self.adjacency[index]
    }

    pub fn degree(&self, index: usize) -> usize {
        self.neighbors[index].len()
    }

    pub fn is_adjacent(&self, a: usize, b: usize) -> bool {
        self.neighbors[a].binary_search(&b).is_ok()
    }

    pub fn indices_of_type(&self, node_type: NodeType) -> impl Iterator<Item = usize> + '_ {
        (0..self.ids.len()).filter(move |&i| self.node_type(i) == node_type)
    }

    /// Re-expands the graph into one triple per edge.
    pub fn triples(&self) -> Vec<Triple> {
        self.edges
            .iter()
            .map(|e| Triple::new(self.ids[e.subject].clone(), e.edge_type, self.ids[e.object].clone()))
            .collect()
    }
}

/// Builds the graph. Duplicate undirected `(u, v, type)` edges collapse to
/// the first occurrence in sorted triple order; self-loops are dropped.
pub fn build_graph(triples: &[Triple]) -> Result<KnowledgeGraph, GraphError> {
    if let Some(bad) = triples.iter().find(|t| !t.is_type_consistent()) {
        return Err(GraphError::TypeMismatch(bad.clone()));
    }
    let mut sorted: Vec<&Triple> = triples.iter().collect();
    sorted.sort();

    let ids: Vec<NodeId> = sorted
        .iter()
        .flat_map(|t| [&t.subject, &t.object])
        .collect::<BTreeSet<_>>()
        .into_iter()
        .cloned()
        .collect();
    let lookup: HashMap<NodeId, usize> = ids.iter().enumerate().map(|(i, id)| (id.clone(), i)).collect();

    let mut seen = BTreeSet::new();
    let mut edges = Vec::new();
    let mut self_loops = 0usize;
    for t in sorted {
        let s = lookup[&t.subject];
        let o = lookup[&t.object];
        if s == o {
            self_loops += 1;
            continue;
        }
        if seen.insert((s.min(o), s.max(o), t.predicate)) {
            edges.push(Edge {
                subject: s,
                object: o,
                edge_type: t.predicate,
            });
        }
    }
    if self_loops > 0 {
        log::warn!("dropped {self_loops} self-loop triple(s)");
    }

    let mut adjacency = vec![Vec::new(); ids.len()];
    for e in &edges {
        adjacency[e.subject].push((e.object, e.edge_type));
        adjacency[e.object].push((e.subject, e.edge_type));
    }
    let mut neighbors = Vec::with_capacity(ids.len());
    for adj in &mut adjacency {
        adj.sort_unstable();
        let mut n: Vec<usize> = adj.iter().map(|&(v, _)| v).collect();
        n.dedup();
        neighbors.push(n);
    }

    Ok(KnowledgeGraph {
        ids,
        lookup,
        adjacency,
        neighbors,
        edges,
    })
}

/// Per-type node and edge counts; every type is present, zero or not.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GraphStats {
    pub nodes: BTreeMap<NodeType, usize>,
    pub edges: BTreeMap<EdgeType, usize>,
}

impl GraphStats {
    pub fn total_nodes(&self) -> usize {
        self.nodes.values().sum()
    }

    pub fn total_edges(&self) -> usize {
        self.edges.values().sum()
    }

    /// Two-column report, nodes first then edges.
    pub fn to_tsv(&self) -> String {
        let mut out = String::from("kind\ttype\tcount\n");
        out.push_str(&format!("node\t*\t{}\n", self.total_nodes()));
        for (t, n) in &self.nodes {
            out.push_str(&format!("node\t{t}\t{n}\n"));
        }
        out.push_str(&format!("edge\t*\t{}\n", self.total_edges()));
        for (t, n) in &self.edges {
            out.push_str(&format!("edge\t{t}\t{n}\n"));
        }
        out
    }
}

pub fn graph_stats(g: &KnowledgeGraph) -> GraphStats {
    let mut nodes: BTreeMap<NodeType, usize> = NodeType::ALL.iter().map(|&t| (t, 0)).collect();
    let mut edges: BTreeMap<EdgeType, usize> = EdgeType::ALL.iter().map(|&t| (t, 0)).collect();
    for id in &g.ids {
        *nodes.get_mut(&id.node_type()).unwrap() += 1;
    }
    for e in &g.edges {
        *edges.get_mut(&e.edge_type).unwrap() += 1;
    }
    GraphStats { nodes, edges }
}

pub fn write_triples(triples: &[Triple], path: &Path) -> Result<(), GraphError> {
    let mut w = BufWriter::new(File::create(path)?);
    for t in triples {
        writeln!(w, "{}\t{}\t{}", t.subject, t.predicate, t.object)?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_triples(path: &Path) -> Result<Vec<Triple>, GraphError> {
    let reader = BufReader::new(File::open(path)?);
    let mut out = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line = line?;
        if line.is_empty() {
            continue;
        }
        let parse_err = |msg: String| GraphError::Parse {
            path: path.display().to_string(),
            line: i + 1,
            msg,
        };
        let fields: Vec<&str> = line.split('\t').collect();
        if fields.len() != 3 {
            return Err(parse_err(format!("expected 3 fields, got {}", fields.len())));
        }
        let subject = fields[0].parse().map_err(|e: GraphError| parse_err(e.to_string()))?;
        let predicate = fields[1].parse().map_err(|e: GraphError| parse_err(e.to_string()))?;
        let object = fields[2].parse().map_err(|e: GraphError| parse_err(e.to_string()))?;
        out.push(Triple::new(subject, predicate, object));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tables::{AuthorRow, MentionRow, NihLinkRow, ReferenceRow};

    fn set(xs: &[&str]) -> BTreeSet<String> {
        xs.iter().map(|s| s.to_string()).collect()
    }

    fn refs(pairs: &[(&str, &str)]) -> RelationalTables {
        RelationalTables {
            references: pairs
                .iter()
                .map(|(a, b)| ReferenceRow {
                    pmid: a.to_string(),
                    ref_pmid: b.to_string(),
                })
                .collect(),
            ..Default::default()
        }
    }

    #[test]
    fn closure_examples() {
        assert_eq!(expand_citations(&refs(&[("1", "2")]), &set(&["1"])), set(&["1", "2"]));
        assert_eq!(expand_citations(&refs(&[]), &set(&["1"])), set(&["1"]));
        let t = refs(&[("1", "2"), ("3", "1"), ("2", "4")]);
        assert_eq!(expand_citations(&t, &set(&["1"])), set(&["1", "2", "3"]));
    }

    #[test]
    fn closure_is_stable_for_same_seeds() {
        let t = refs(&[("1", "2"), ("3", "1"), ("2", "4")]);
        let seeds = set(&["1"]);
        assert_eq!(expand_citations(&t, &seeds), expand_citations(&t, &seeds));
    }

    #[test]
    fn literal_triples() {
        let tables = RelationalTables {
            authors: vec![AuthorRow {
                pmid: "86509".into(),
                aid: "6754".into(),
                display_name: "J. Doe".into(),
            }],
            mentions: vec![
                MentionRow {
                    pmid: "78456".into(),
                    surface_form: "aspirin".into(),
                    entity_id: "1256".into(),
                    entity_type: EntityType::Drug,
                },
                MentionRow {
                    pmid: "78456".into(),
                    surface_form: "Aspirin".into(),
                    entity_id: "1256".into(),
                    entity_type: EntityType::Drug,
                },
            ],
            nih_links: vec![NihLinkRow {
                pmid: "5678".into(),
                project_id: "4123".into(),
            }],
            references: vec![ReferenceRow {
                pmid: "652148".into(),
                ref_pmid: "415923".into(),
            }],
            ..Default::default()
        };
        let scope = set(&["86509", "78456", "5678", "652148", "415923"]);
        let triples = extract_triples(&tables, &scope);
        let rendered: Vec<String> = triples.iter().map(|t| t.to_string()).collect();
        assert_eq!(triples.len(), 4);
        assert!(rendered.contains(&"<article/pmid/86509, writtenBy, author/aid/6754>".into()));
        assert!(rendered.contains(&"<article/pmid/78456, mentionsDrug, drug/eid/1256>".into()));
        assert!(rendered.contains(&"<article/pmid/5678, fundedBy, nih_project/project_id/4123>".into()));
        assert!(rendered.contains(&"<article/pmid/652148, cites, article/pmid/415923>".into()));
    }

    #[test]
    fn out_of_scope_rows_are_dropped() {
        let t = refs(&[("1", "2"), ("1", "9")]);
        let triples = extract_triples(&t, &set(&["1", "2"]));
        assert_eq!(triples.len(), 1);
    }

    #[test]
    fn empty_graph() {
        let g = build_graph(&[]).unwrap();
        assert_eq!((g.node_count(), g.edge_count()), (0, 0));
        let s = graph_stats(&g);
        assert!(s.nodes.values().all(|&n| n == 0));
        assert!(s.edges.values().all(|&n| n == 0));
        assert_eq!(s.nodes.len(), 9);
        assert_eq!(s.edges.len(), 9);
    }

    #[test]
    fn single_edge_graph() {
        let t = Triple::new(
            NodeId::article("1"),
            EdgeType::WrittenBy,
            NodeId::new(NodeType::Author, "7"),
        );
        let g = build_graph(&[t]).unwrap();
        assert_eq!((g.node_count(), g.edge_count()), (2, 1));
        let a = g.index_of(&NodeId::article("1")).unwrap();
        let b = g.index_of(&"author/aid/7".parse().unwrap()).unwrap();
        assert_eq!(g.typed_neighbors(a), &[(b, EdgeType::WrittenBy)]);
        assert_eq!(g.typed_neighbors(b), &[(a, EdgeType::WrittenBy)]);
        let s = graph_stats(&g);
        assert_eq!(s.nodes[&NodeType::Article], 1);
        assert_eq!(s.nodes[&NodeType::Author], 1);
        assert_eq!(s.edges[&EdgeType::WrittenBy], 1);
        assert_eq!(s.total_edges(), 1);
    }

    #[test]
    fn reciprocal_citations_collapse() {
        let a = NodeId::article("1");
        let b = NodeId::article("2");
        let g = build_graph(&[
            Triple::new(a.clone(), EdgeType::Cites, b.clone()),
            Triple::new(b, EdgeType::Cites, a.clone()),
            Triple::new(a.clone(), EdgeType::Cites, a),
        ])
        .unwrap();
        assert_eq!(g.edge_count(), 1);
        assert_eq!(g.node_count(), 2);
    }

    #[test]
    fn type_mismatch_is_reported() {
        let t = Triple::new(
            NodeId::new(NodeType::Author, "7"),
            EdgeType::WrittenBy,
            NodeId::article("1"),
        );
        match build_graph(std::slice::from_ref(&t)) {
            Err(GraphError::TypeMismatch(bad)) => assert_eq!(bad, t),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn node_id_parsing() {
        for ok in [
            "article/pmid/86509",
            "author/aid/6754",
            "drug/eid/1256",
            "nih_project/project_id/4123",
        ] {
            assert_eq!(ok.parse::<NodeId>().unwrap().to_string(), ok);
        }
        for bad in [
            "article/pmid",
            "article/pmid/1/2",
            "bioentity/drug/1256",
            "article/aid/1",
            "article//1",
            "article/pmid/1 2",
        ] {
            assert!(bad.parse::<NodeId>().is_err(), "{bad}");
        }
        let id: NodeId = "drug/eid/1256".parse().unwrap();
        assert_eq!(id.node_type(), NodeType::Drug);
        assert_eq!(id.local_id(), "1256");
        assert_eq!(id.namespace(), "eid");
    }

    #[test]
    fn triples_file_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("t.tsv");
        let triples = vec![Triple::new(
            NodeId::article("1"),
            EdgeType::RelatedToMesh,
            NodeId::new(NodeType::MeshTerm, "D003920"),
        )];
        write_triples(&triples, &path).unwrap();
        assert_eq!(
            std::fs::read_to_string(&path).unwrap(),
            "article/pmid/1\trelatedToMeSH\tmesh_term/mesh_id/D003920\n"
        );
        assert_eq!(read_triples(&path).unwrap(), triples);
    }
}
