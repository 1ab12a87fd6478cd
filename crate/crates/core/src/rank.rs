//! Cosine ranking of article vectors and TREC run files.

use std::cmp::Ordering;
use std::collections::BTreeMap;
use std::fmt;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;
use std::str::FromStr;

use rayon::prelude::*;
use thiserror::Error;

use crate::kg::NodeType;
use crate::scalar::{dot, norm, Scalar};
use crate::vectors::NodeVectors;

pub const DEFAULT_CUTOFFS: [usize; 12] = [1, 2, 5, 10, 25, 50, 75, 100, 150, 250, 500, 1000];

#[derive(Debug, Error)]
pub enum RankError {
    #[error("zero-norm vector")]
    ZeroNorm,
    #[error("vector dimensions differ: {0} vs {1}")]
    Dimension(usize, usize),
    #[error("bad cutoff schedule {0:?}")]
    Cutoffs(String),
    #[error("{path}:{line}: {msg}")]
    Parse { path: String, line: usize, msg: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Cosine similarity clamped to [-1, 1].
pub fn cosine<F: Scalar>(a: &[F], b: &[F]) -> Result<F, RankError> {
    if a.len() != b.len() {
        return Err(RankError::Dimension(a.len(), b.len()));
    }
    let (na, nb) = (norm(a), norm(b));
    if na == F::zero() || nb == F::zero() {
        return Err(RankError::ZeroNorm);
    }
    Ok((dot(a, b) / (na * nb)).max(-F::one()).min(F::one()))
}

/// Numeric order for digit strings, lexicographic otherwise.
pub fn pmid_cmp(a: &str, b: &str) -> Ordering {
    match (a.parse::<u64>(), b.parse::<u64>()) {
        (Ok(x), Ok(y)) => x.cmp(&y).then_with(|| a.cmp(b)),
        _ => a.cmp(b),
    }
}

/// Descending score, ascending pmid on ties.
pub fn sort_scored(entries: &mut [(String, f64)]) {
    entries.sort_by(|a, b| b.1.total_cmp(&a.1).then_with(|| pmid_cmp(&a.0, &b.0)));
}

#[derive(Debug, Clone, PartialEq)]
pub struct RankedList {
    pub query_id: String,
    pub entries: Vec<(String, f64)>,
    /// Articles skipped because their vector has zero norm.
    pub excluded: Vec<String>,
}

impl RankedList {
    pub fn pmids(&self) -> impl Iterator<Item = &str> {
        self.entries.iter().map(|(p, _)| p.as_str())
    }

    pub fn truncate(&mut self, k: usize) {
        self.entries.truncate(k);
    }
}

/// Scores every article in `articles` against `query` and keeps the top `k`
/// (all of them when `k` is `None`).
pub fn rank_articles<F: Scalar>(
    query_id: &str,
    query: &[F],
    articles: &NodeVectors<F>,
    k: Option<usize>,
) -> Result<RankedList, RankError> {
    if query.len() != articles.dim() {
        return Err(RankError::Dimension(query.len(), articles.dim()));
    }
    if norm(query) == F::zero() {
        return Err(RankError::ZeroNorm);
    }
    let scored: Vec<(String, Option<f64>)> = articles
        .ids()
        .par_iter()
        .enumerate()
        .filter(|(_, id)| id.node_type() == NodeType::Article)
        .map(|(i, id)| {
            let s = match cosine(query, articles.row(i)) {
                Ok(s) => Some(s.as_f64()),
                Err(_) => None,
            };
            (id.local_id().to_string(), s)
        })
        .collect();
    let mut entries = Vec::with_capacity(scored.len());
    let mut excluded = Vec::new();
    for (pmid, s) in scored {
        match s {
            Some(s) => entries.push((pmid, s)),
            None => excluded.push(pmid),
        }
    }
    if !excluded.is_empty() {
        log::warn!("{query_id}: {} zero-norm article vectors skipped", excluded.len());
    }
    sort_scored(&mut entries);
    if let Some(k) = k {
        entries.truncate(k);
    }
    Ok(RankedList {
        query_id: query_id.to_string(),
        entries,
        excluded,
    })
}

/// Ascending, distinct, positive cutoffs.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CutoffSchedule(Vec<usize>);

impl Default for CutoffSchedule {
    fn default() -> Self {
        CutoffSchedule(DEFAULT_CUTOFFS.to_vec())
    }
}

impl CutoffSchedule {
    pub fn new(mut ks: Vec<usize>) -> Result<Self, RankError> {
        ks.sort_unstable();
        ks.dedup();
        if ks.is_empty() || ks[0] == 0 {
            return Err(RankError::Cutoffs(format!("{ks:?}")));
        }
        Ok(CutoffSchedule(ks))
    }

    pub fn as_slice(&self) -> &[usize] {
        &self.0
    }

    pub fn max(&self) -> usize {
        *self.0.last().expect("schedule is nonempty")
    }
}

impl FromStr for CutoffSchedule {
    type Err = RankError;

    fn from_str(s: &str) -> Result<Self, RankError> {
        let ks = s
            .split(',')
            .map(|k| k.trim().parse::<usize>().map_err(|_| RankError::Cutoffs(s.to_string())))
            .collect::<Result<Vec<_>, _>>()?;
        CutoffSchedule::new(ks)
    }
}

impl fmt::Display for CutoffSchedule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.0.iter().map(|k| k.to_string()).collect();
        f.write_str(&parts.join(","))
    }
}

/// One line of a TREC run file: `query_id Q0 pmid rank score tag`.
#[derive(Debug, Clone, PartialEq)]
pub struct TrecLine {
    pub query_id: String,
    pub pmid: String,
    pub rank: usize,
    pub score: f64,
    pub tag: String,
}

pub fn write_trec<W: Write>(mut w: W, lists: &[RankedList], tag: &str) -> std::io::Result<()> {
    for list in lists {
        for (i, (pmid, score)) in list.entries.iter().enumerate() {
            writeln!(w, "{} Q0 {} {} {} {}", list.query_id, pmid, i + 1, score, tag)?;
        }
    }
    Ok(())
}

pub fn write_trec_file(path: &Path, runs: &[(&str, &[RankedList])]) -> Result<(), RankError> {
    let mut w = BufWriter::new(File::create(path)?);
    for (tag, lists) in runs {
        write_trec(&mut w, lists, tag)?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_trec(path: &Path) -> Result<Vec<TrecLine>, RankError> {
    let name = path.display().to_string();
    let mut out = Vec::new();
    for (i, line) in BufReader::new(File::open(path)?).lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let err = |msg: &str| RankError::Parse {
            path: name.clone(),
            line: i + 1,
            msg: msg.to_string(),
        };
        let f: Vec<&str> = line.split_whitespace().collect();
        if f.len() != 6 || f[1] != "Q0" {
            return Err(err("expected \"query_id Q0 pmid rank score tag\""));
        }
        out.push(TrecLine {
            query_id: f[0].to_string(),
            pmid: f[2].to_string(),
            rank: f[3].parse().map_err(|_| err("bad rank"))?,
            score: f[4].parse().map_err(|_| err("bad score"))?,
            tag: f[5].to_string(),
        });
    }
    Ok(out)
}

/// Groups run lines by tag, then query, ordered by rank.
pub fn runs_by_tag(lines: &[TrecLine]) -> BTreeMap<String, BTreeMap<String, Vec<String>>> {
    let mut grouped: BTreeMap<String, BTreeMap<String, Vec<(usize, String)>>> = BTreeMap::new();
    for l in lines {
        grouped
            .entry(l.tag.clone())
            .or_default()
            .entry(l.query_id.clone())
            .or_default()
            .push((l.rank, l.pmid.clone()));
    }
    grouped
        .into_iter()
        .map(|(tag, qs)| {
            let qs = qs
                .into_iter()
                .map(|(q, mut v)| {
                    v.sort_by_key(|(r, _)| *r);
                    (q, v.into_iter().map(|(_, p)| p).collect())
                })
                .collect();
            (tag, qs)
        })
        .collect()
}
