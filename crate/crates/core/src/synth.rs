//! Planted-community synthetic corpora with known ground truth.
//!
//! Each community gets its own authors, citation tree, funding project,
//! MeSH terms, substances, background entities and planted query entities.
//! A planted entity is written into the text and mention rows of only a
//! fraction of its community's articles; every article of the community is
//! relevant to it.

use std::collections::{BTreeMap, BTreeSet, HashSet};
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use rand::seq::{index, SliceRandom};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::eval::{EvalError, Qrels};
use crate::kg::{EdgeType, GraphStats, NodeType};
use crate::tables::{
    write_tables, ArticleRow, AuthorRow, EntityType, MentionRow, MeshLinkRow, NihLinkRow, ReferenceRow,
    RelationalTables, SubstanceLinkRow, TableError,
};

pub const SEEDS_FILE: &str = "seeds.txt";
pub const QRELS_FILE: &str = "qrels.txt";
pub const QUERIES_FILE: &str = "queries.tsv";
pub const STATS_FILE: &str = "synth_stats.tsv";
pub const TABLES_DIR: &str = "tables";

const FILLER_WORDS: usize = 300;
const ABSTRACT_WORDS: usize = 40;
const TITLE_WORDS: usize = 6;

#[derive(Debug, Error)]
pub enum SynthError {
    #[error("invalid synthetic config: {0}")]
    Config(String),
    #[error(transparent)]
    Tables(#[from] TableError),
    #[error(transparent)]
    Qrels(#[from] EvalError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, PartialEq)]
pub struct SynthConfig {
    pub communities: usize,
    pub articles_per_community: usize,
    pub authors_per_article: usize,
    /// Planted query entities per community.
    pub entities_per_community: usize,
    /// Background entity mentions per article.
    pub mentions_per_article: usize,
    pub citations_per_article: usize,
    /// Share of a community's articles whose text names each planted entity.
    pub entity_leak_fraction: f64,
    pub rng_seed: u64,
}

impl Default for SynthConfig {
    fn default() -> Self {
        SynthConfig {
            communities: 2,
            articles_per_community: 50,
            authors_per_article: 3,
            entities_per_community: 3,
            mentions_per_article: 2,
            citations_per_article: 3,
            entity_leak_fraction: 0.1,
            rng_seed: 0,
        }
    }
}

impl SynthConfig {
    pub fn validate(&self) -> Result<(), SynthError> {
        let positive = [
            ("communities", self.communities),
            ("articles_per_community", self.articles_per_community),
            ("authors_per_article", self.authors_per_article),
            ("entities_per_community", self.entities_per_community),
            ("mentions_per_article", self.mentions_per_article),
            ("citations_per_article", self.citations_per_article),
        ];
        for (name, v) in positive {
            if v == 0 {
                return Err(SynthError::Config(format!("{name} must be positive")));
            }
        }
        if !(0.0..1.0).contains(&self.entity_leak_fraction) {
            return Err(SynthError::Config("entity_leak_fraction must be in [0, 1)".into()));
        }
        Ok(())
    }

    /// Articles per community whose text carries a given planted entity.
    pub fn leaked_articles(&self) -> usize {
        ((self.entity_leak_fraction * self.articles_per_community as f64).round() as usize)
            .clamp(1, self.articles_per_community)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PlantedEntity {
    pub entity_id: String,
    pub entity_type: EntityType,
    pub surface: String,
    pub community: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SynthData {
    pub tables: RelationalTables,
    pub seeds: BTreeSet<String>,
    pub qrels: Qrels,
    /// `(query id, query text)`.
    pub queries: Vec<(String, String)>,
    pub planted: Vec<PlantedEntity>,
    /// pmid to community index.
    pub community_of: BTreeMap<String, usize>,
    /// Node and edge counts the graph built from these tables should have.
    pub expected_stats: GraphStats,
}

struct Namer {
    rng: ChaCha8Rng,
    used: HashSet<String>,
}

impl Namer {
    const CONSONANTS: &'static [u8] = b"bcdfghklmnprstvz";
    const VOWELS: &'static [u8] = b"aeiou";

    /// Fresh pronounceable lowercase word of 7 to 10 letters.
    fn word(&mut self) -> String {
        loop {
            let len = self.rng.gen_range(7..=10);
            let w: String = (0..len)
                .map(|i| {
                    let set = if i % 2 == 0 { Self::CONSONANTS } else { Self::VOWELS };
                    set[self.rng.gen_range(0..set.len())] as char
                })
                .collect();
            if self.used.insert(w.clone()) {
                return w;
            }
        }
    }
}

fn capitalize(w: &str) -> String {
    let mut c = w.chars();
    match c.next() {
        Some(f) => f.to_uppercase().chain(c).collect(),
        None => String::new(),
    }
}

pub fn generate_synthetic(cfg: &SynthConfig) -> Result<SynthData, SynthError> {
    cfg.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.rng_seed);
    let mut namer = Namer {
        rng: ChaCha8Rng::seed_from_u64(cfg.rng_seed ^ 0x9e37_79b9_7f4a_7c15),
        used: HashSet::new(),
    };
    let filler: Vec<String> = (0..FILLER_WORDS).map(|_| namer.word()).collect();

    let n_total = cfg.communities * cfg.articles_per_community;
    let mut pmid_pool: Vec<usize> = (0..n_total).map(|i| 10_001 + i).collect();
    pmid_pool.shuffle(&mut rng);

    let mut t = RelationalTables::default();
    let mut seeds = BTreeSet::new();
    let mut qrels = Qrels::default();
    let mut queries = Vec::new();
    let mut planted = Vec::new();
    let mut community_of = BTreeMap::new();

    let mut node_sets: BTreeMap<NodeType, BTreeSet<String>> = BTreeMap::new();
    let mut edge_sets: BTreeMap<EdgeType, BTreeSet<(String, String)>> = BTreeMap::new();
    let mut record = |et: EdgeType, nt: NodeType, pmid: &str, obj: &str| {
        node_sets.entry(NodeType::Article).or_default().insert(pmid.to_string());
        node_sets.entry(nt).or_default().insert(obj.to_string());
        edge_sets
            .entry(et)
            .or_default()
            .insert((pmid.to_string(), obj.to_string()));
    };

    let author_pool = (cfg.articles_per_community / 4).max(cfg.authors_per_article);
    let background_pool = (3 * cfg.entities_per_community).max(cfg.mentions_per_article);
    for c in 0..cfg.communities {
        let pmids: Vec<String> = pmid_pool[c * cfg.articles_per_community..(c + 1) * cfg.articles_per_community]
            .iter()
            .map(|p| p.to_string())
            .collect();
        let authors: Vec<(String, String)> = (0..author_pool)
            .map(|i| {
                (
                    format!("A{c}x{i}"),
                    format!("{} {}", capitalize(&namer.word()), capitalize(&namer.word())),
                )
            })
            .collect();
        let background: Vec<(String, EntityType, String)> = (0..background_pool)
            .map(|i| {
                let ty = EntityType::ALL[rng.gen_range(0..EntityType::ALL.len())];
                (format!("B{c}x{i}"), ty, namer.word())
            })
            .collect();
        let project = format!("P{c}");
        let mesh: Vec<(String, String)> = (0..3)
            .map(|i| (format!("M{c}x{i}"), capitalize(&namer.word())))
            .collect();
        let substances: Vec<(String, String)> = (0..2)
            .map(|i| (format!("S{c}x{i}"), capitalize(&namer.word())))
            .collect();

        let mut texts: Vec<Vec<String>> = Vec::with_capacity(pmids.len());
        for (j, pmid) in pmids.iter().enumerate() {
            seeds.insert(pmid.clone());
            community_of.insert(pmid.clone(), c);
            let mut words: Vec<String> = (0..ABSTRACT_WORDS)
                .map(|_| filler[rng.gen_range(0..filler.len())].clone())
                .collect();

            for a in index::sample(&mut rng, authors.len(), cfg.authors_per_article).iter() {
                let (aid, name) = &authors[a];
                t.authors.push(AuthorRow {
                    pmid: pmid.clone(),
                    aid: aid.clone(),
                    display_name: name.clone(),
                });
                record(EdgeType::WrittenBy, NodeType::Author, pmid, aid);
            }
            for b in index::sample(&mut rng, background.len(), cfg.mentions_per_article).iter() {
                let (eid, ty, surface) = &background[b];
                t.mentions.push(MentionRow {
                    pmid: pmid.clone(),
                    surface_form: surface.clone(),
                    entity_id: eid.clone(),
                    entity_type: *ty,
                });
                words.push(surface.clone());
                record(EdgeType::mentions(*ty), (*ty).into(), pmid, eid);
            }
            // Citations point at earlier articles of the same community, so
            // the community is connected and no pair is cited both ways.
            for r in index::sample(&mut rng, j.max(1), cfg.citations_per_article.min(j)).iter() {
                t.references.push(ReferenceRow {
                    pmid: pmid.clone(),
                    ref_pmid: pmids[r].clone(),
                });
                record(EdgeType::Cites, NodeType::Article, pmid, &pmids[r]);
            }
            if rng.gen_bool(0.5) {
                t.nih_links.push(NihLinkRow {
                    pmid: pmid.clone(),
                    project_id: project.clone(),
                });
                record(EdgeType::FundedBy, NodeType::NihProject, pmid, &project);
            }
            let (mid, term) = &mesh[rng.gen_range(0..mesh.len())];
            t.mesh_links.push(MeshLinkRow {
                pmid: pmid.clone(),
                mesh_id: mid.clone(),
                term: term.clone(),
            });
            record(EdgeType::RelatedToMesh, NodeType::MeshTerm, pmid, mid);
            if rng.gen_bool(0.5) {
                let (sid, name) = &substances[rng.gen_range(0..substances.len())];
                t.substance_links.push(SubstanceLinkRow {
                    pmid: pmid.clone(),
                    substance_id: sid.clone(),
                    name: name.clone(),
                });
                record(EdgeType::RelatedToSubstance, NodeType::ChemicalSubstance, pmid, sid);
            }
            texts.push(words);
        }

        let leaked = cfg.leaked_articles();
        for e in 0..cfg.entities_per_community {
            let ty = [EntityType::Disease, EntityType::Drug, EntityType::Gene][e % 3];
            let p = PlantedEntity {
                entity_id: format!("E{c}x{e}"),
                entity_type: ty,
                surface: namer.word(),
                community: c,
            };
            let carriers: Vec<usize> = {
                let mut v = index::sample(&mut rng, pmids.len(), leaked).into_vec();
                v.sort_unstable();
                v
            };
            for &j in &carriers {
                t.mentions.push(MentionRow {
                    pmid: pmids[j].clone(),
                    surface_form: p.surface.clone(),
                    entity_id: p.entity_id.clone(),
                    entity_type: ty,
                });
                texts[j].push(p.surface.clone());
                record(EdgeType::mentions(ty), ty.into(), &pmids[j], &p.entity_id);
            }
            // Ground truth ranks the text-bearing articles first.
            let qid = format!("q{c}_{e}");
            for &j in &carriers {
                qrels.insert(&qid, &pmids[j]);
            }
            for pmid in &pmids {
                qrels.insert(&qid, pmid);
            }
            queries.push((qid, p.surface.clone()));
            planted.push(p);
        }

        for (j, pmid) in pmids.iter().enumerate() {
            let words = &mut texts[j];
            words.shuffle(&mut rng);
            let title: Vec<String> = (0..TITLE_WORDS)
                .map(|_| filler[rng.gen_range(0..filler.len())].clone())
                .collect();
            t.articles.push(ArticleRow {
                pmid: pmid.clone(),
                title: capitalize(&title.join(" ")),
                abstract_text: words.join(" "),
                completion_date: format!("20{:02}-{:02}-{:02}", 10 + j % 10, 1 + j % 12, 1 + j % 28),
            });
        }
    }
    t.articles.sort_by_key(|a| a.pmid.parse::<u64>().unwrap_or(u64::MAX));

    let expected_stats = GraphStats {
        nodes: NodeType::ALL
            .iter()
            .map(|&nt| (nt, node_sets.get(&nt).map_or(0, |s| s.len())))
            .collect(),
        edges: EdgeType::ALL
            .iter()
            .map(|&et| (et, edge_sets.get(&et).map_or(0, |s| s.len())))
            .collect(),
    };
    Ok(SynthData {
        tables: t,
        seeds,
        qrels,
        queries,
        planted,
        community_of,
        expected_stats,
    })
}

impl SynthData {
    /// Writes `tables/`, seeds, qrels, queries and the expected graph counts.
    pub fn write(&self, out_dir: &Path) -> Result<(), SynthError> {
        std::fs::create_dir_all(out_dir)?;
        write_tables(&self.tables, &out_dir.join(TABLES_DIR))?;
        write_lines(&out_dir.join(SEEDS_FILE), self.seeds.iter().map(String::as_str))?;
        self.qrels.write(&out_dir.join(QRELS_FILE))?;
        let mut w = BufWriter::new(File::create(out_dir.join(QUERIES_FILE))?);
        for (qid, text) in &self.queries {
            writeln!(w, "{qid}\t{text}")?;
        }
        w.flush()?;
        std::fs::write(out_dir.join(STATS_FILE), self.expected_stats.to_tsv())?;
        Ok(())
    }
}

fn write_lines<'a>(path: &Path, lines: impl Iterator<Item = &'a str>) -> std::io::Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    for l in lines {
        writeln!(w, "{l}")?;
    }
    w.flush()
}

/// One pmid per line; blank lines ignored.
pub fn read_seeds(path: &Path) -> std::io::Result<BTreeSet<String>> {
    Ok(std::fs::read_to_string(path)?
        .lines()
        .map(str::trim)
        .filter(|l| !l.is_empty())
        .map(String::from)
        .collect())
}

/// `query_id<TAB>text` lines.
pub fn read_queries(path: &Path) -> std::io::Result<Vec<(String, String)>> {
    let text = std::fs::read_to_string(path)?;
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let (q, t) = line.split_once('\t').ok_or_else(|| {
            std::io::Error::new(
                std::io::ErrorKind::InvalidData,
                format!("{}:{}: expected \"query_id<TAB>text\"", path.display(), i + 1),
            )
        })?;
        out.push((q.to_string(), t.to_string()));
    }
    Ok(out)
}
