//! Ranked-retrieval metrics at a cutoff schedule.

use std::collections::{BTreeMap, HashSet};
use std::fmt::Write as _;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;
use std::str::FromStr;

use rayon::prelude::*;
use thiserror::Error;

use crate::rank::{CutoffSchedule, RankedList};

#[derive(Debug, Error)]
pub enum EvalError {
    #[error("qrels are empty")]
    EmptyQrels,
    #[error("no runs to evaluate")]
    NoRuns,
    #[error("cutoff must be at least 1")]
    ZeroCutoff,
    #[error("unknown average precision variant {0:?}")]
    Variant(String),
    #[error("{path}:{line}: {msg}")]
    Parse { path: String, line: usize, msg: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Query id to ordered relevant pmids.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Qrels {
    pub queries: BTreeMap<String, Vec<String>>,
}

impl Qrels {
    pub fn insert(&mut self, query_id: &str, pmid: &str) {
        let rel = self.queries.entry(query_id.to_string()).or_default();
        if !rel.iter().any(|p| p == pmid) {
            rel.push(pmid.to_string());
        }
    }

    pub fn len(&self) -> usize {
        self.queries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.queries.is_empty()
    }

    /// `query_id 0 pmid rel` lines; rel 0 lines register the query only.
    pub fn read(path: &Path) -> Result<Self, EvalError> {
        let name = path.display().to_string();
        let mut q = Qrels::default();
        for (i, line) in BufReader::new(File::open(path)?).lines().enumerate() {
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            let f: Vec<&str> = line.split_whitespace().collect();
            let [qid, _, pmid, rel] = f.as_slice() else {
                return Err(EvalError::Parse {
                    path: name,
                    line: i + 1,
                    msg: "expected \"query_id 0 pmid rel\"".into(),
                });
            };
            match *rel {
                "1" => q.insert(qid, pmid),
                "0" => {
                    q.queries.entry(qid.to_string()).or_default();
                }
                _ => {
                    return Err(EvalError::Parse {
                        path: name,
                        line: i + 1,
                        msg: format!("relevance must be 0 or 1, got {rel:?}"),
                    })
                }
            }
        }
        Ok(q)
    }

    pub fn write(&self, path: &Path) -> Result<(), EvalError> {
        let mut w = BufWriter::new(File::create(path)?);
        for (qid, rel) in &self.queries {
            for pmid in rel {
                writeln!(w, "{qid} 0 {pmid} 1")?;
            }
        }
        w.flush()?;
        Ok(())
    }
}

/// Query id to ranked pmids.
pub type Run = BTreeMap<String, Vec<String>>;

pub fn run_from_lists(lists: &[RankedList]) -> Run {
    lists
        .iter()
        .map(|l| (l.query_id.clone(), l.pmids().map(String::from).collect()))
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Prf {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
}

fn hits_at(retrieved: &[String], relevant: &HashSet<&str>, k: usize) -> usize {
    retrieved
        .iter()
        .take(k)
        .filter(|p| relevant.contains(p.as_str()))
        .count()
}

pub fn prf_at_k(retrieved: &[String], relevant: &[String], k: usize) -> Result<Prf, EvalError> {
    if k == 0 {
        return Err(EvalError::ZeroCutoff);
    }
    let rel: HashSet<&str> = relevant.iter().map(String::as_str).collect();
    let hits = hits_at(retrieved, &rel, k) as f64;
    let shown = k.min(retrieved.len());
    let precision = if shown == 0 { 0.0 } else { hits / shown as f64 };
    let recall = if rel.is_empty() { 0.0 } else { hits / rel.len() as f64 };
    let f1 = if precision + recall == 0.0 {
        0.0
    } else {
        2.0 * precision * recall / (precision + recall)
    };
    Ok(Prf { precision, recall, f1 })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum ApVariant {
    /// Sum of P@i at relevant ranks over `min(|relevant|, K)`.
    Standard,
    /// The same sum over `K`.
    DivideByK,
}

impl ApVariant {
    pub fn metric_name(self) -> &'static str {
        match self {
            ApVariant::Standard => "map",
            ApVariant::DivideByK => "map_divk",
        }
    }
}

impl FromStr for ApVariant {
    type Err = EvalError;

    fn from_str(s: &str) -> Result<Self, EvalError> {
        match s {
            "standard" => Ok(ApVariant::Standard),
            "divide-by-k" | "divk" => Ok(ApVariant::DivideByK),
            _ => Err(EvalError::Variant(s.to_string())),
        }
    }
}

pub fn average_precision(
    retrieved: &[String],
    relevant: &[String],
    k: usize,
    variant: ApVariant,
) -> Result<f64, EvalError> {
    if k == 0 {
        return Err(EvalError::ZeroCutoff);
    }
    let rel: HashSet<&str> = relevant.iter().map(String::as_str).collect();
    if rel.is_empty() {
        return Ok(0.0);
    }
    let mut hits = 0usize;
    let mut sum = 0.0;
    for (i, p) in retrieved.iter().take(k).enumerate() {
        if rel.contains(p.as_str()) {
            hits += 1;
            sum += hits as f64 / (i + 1) as f64;
        }
    }
    let denom = match variant {
        ApVariant::Standard => rel.len().min(k),
        ApVariant::DivideByK => k,
    };
    Ok(sum / denom as f64)
}

/// Mean AP over every qrels query; queries without a run score 0.
pub fn map_at_k(run: &Run, qrels: &Qrels, k: usize, variant: ApVariant) -> Result<f64, EvalError> {
    if qrels.is_empty() {
        return Err(EvalError::EmptyQrels);
    }
    let mut total = 0.0;
    for (qid, rel) in &qrels.queries {
        if let Some(r) = run.get(qid) {
            total += average_precision(r, rel, k, variant)?;
        }
    }
    Ok(total / qrels.len() as f64)
}

/// Keeps the first `k` relevant pmids of each query.
pub fn prune_relevant(qrels: &Qrels, k: usize) -> Qrels {
    Qrels {
        queries: qrels
            .queries
            .iter()
            .map(|(q, rel)| (q.clone(), rel.iter().take(k).cloned().collect()))
            .collect(),
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EvalConfig {
    pub cutoffs: CutoffSchedule,
    pub variants: Vec<ApVariant>,
    /// Truncate each query's relevant list to K before scoring at K.
    pub prune: bool,
}

impl Default for EvalConfig {
    fn default() -> Self {
        EvalConfig {
            cutoffs: CutoffSchedule::default(),
            variants: vec![ApVariant::Standard, ApVariant::DivideByK],
            prune: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct QueryScore {
    pub method: String,
    pub query_id: String,
    pub k: usize,
    pub prf: Prf,
    pub ap: Vec<(ApVariant, f64)>,
    pub missing_run: bool,
    pub empty_relevant: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReportRow {
    pub metric: String,
    pub method: String,
    pub values: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EvalReport {
    pub cutoffs: Vec<usize>,
    pub rows: Vec<ReportRow>,
    pub per_query: Vec<QueryScore>,
}

impl EvalReport {
    pub fn value(&self, metric: &str, method: &str, k: usize) -> Option<f64> {
        let col = self.cutoffs.iter().position(|&c| c == k)?;
        self.rows
            .iter()
            .find(|r| r.metric == metric && r.method == method)
            .map(|r| r.values[col])
    }

    pub fn to_csv(&self) -> String {
        let mut s = String::from("metric,method");
        for k in &self.cutoffs {
            let _ = write!(s, ",K{k}");
        }
        s.push('\n');
        for r in &self.rows {
            let _ = write!(s, "{},{}", r.metric, r.method);
            for v in &r.values {
                let _ = write!(s, ",{v:.6}");
            }
            s.push('\n');
        }
        s
    }

    pub fn per_query_csv(&self) -> String {
        let variants: Vec<ApVariant> = self
            .per_query
            .first()
            .map(|q| q.ap.iter().map(|(v, _)| *v).collect())
            .unwrap_or_default();
        let mut s = String::from("method,query_id,K,precision,recall,f1");
        for v in &variants {
            let _ = write!(s, ",{}", v.metric_name().replacen("map", "ap", 1));
        }
        s.push_str(",missing_run,empty_relevant\n");
        for q in &self.per_query {
            let _ = write!(
                s,
                "{},{},{},{:.6},{:.6},{:.6}",
                q.method, q.query_id, q.k, q.prf.precision, q.prf.recall, q.prf.f1
            );
            for (_, a) in &q.ap {
                let _ = write!(s, ",{a:.6}");
            }
            let _ = writeln!(s, ",{},{}", q.missing_run, q.empty_relevant);
        }
        s
    }

    /// Markdown table with one row per metric and method.
    pub fn to_markdown(&self) -> String {
        let mut s = String::from("| metric | method |");
        for k in &self.cutoffs {
            let _ = write!(s, " K={k} |");
        }
        s.push_str("\n|---|---|");
        s.push_str(&"---:|".repeat(self.cutoffs.len()));
        s.push('\n');
        for r in &self.rows {
            let _ = write!(s, "| {} | {} |", r.metric, r.method);
            for v in &r.values {
                let _ = write!(s, " {v:.3} |");
            }
            s.push('\n');
        }
        s
    }
}

/// Reads back the grid written by [`EvalReport::to_csv`].
pub fn read_report_csv(path: &Path) -> Result<EvalReport, EvalError> {
    let name = path.display().to_string();
    let perr = |line: usize, msg: &str| EvalError::Parse {
        path: name.clone(),
        line,
        msg: msg.to_string(),
    };
    let text = std::fs::read_to_string(path)?;
    let mut lines = text.lines();
    let header = lines.next().ok_or_else(|| perr(1, "empty report"))?;
    let cols: Vec<&str> = header.split(',').collect();
    if cols.len() < 3 || cols[0] != "metric" || cols[1] != "method" {
        return Err(perr(1, "expected header \"metric,method,K...\""));
    }
    let cutoffs = cols[2..]
        .iter()
        .map(|c| {
            c.strip_prefix('K')
                .and_then(|k| k.parse().ok())
                .ok_or_else(|| perr(1, "bad cutoff column"))
        })
        .collect::<Result<Vec<usize>, _>>()?;
    let mut rows = Vec::new();
    for (i, line) in lines.enumerate() {
        let f: Vec<&str> = line.split(',').collect();
        if f.len() != cols.len() {
            return Err(perr(i + 2, "wrong column count"));
        }
        let values = f[2..]
            .iter()
            .map(|v| v.parse::<f64>().map_err(|_| perr(i + 2, "bad value")))
            .collect::<Result<Vec<_>, _>>()?;
        rows.push(ReportRow {
            metric: f[0].to_string(),
            method: f[1].to_string(),
            values,
        });
    }
    Ok(EvalReport {
        cutoffs,
        rows,
        per_query: Vec::new(),
    })
}

/// Full metric by method by K grid, averaged over qrels queries.
pub fn evaluate(runs: &[(String, Run)], qrels: &Qrels, cfg: &EvalConfig) -> Result<EvalReport, EvalError> {
    if runs.is_empty() {
        return Err(EvalError::NoRuns);
    }
    if qrels.is_empty() {
        return Err(EvalError::EmptyQrels);
    }
    let cutoffs = cfg.cutoffs.as_slice().to_vec();
    let empty: Vec<String> = Vec::new();
    let jobs: Vec<(&str, &Run, usize, &str, &Vec<String>)> = runs
        .iter()
        .flat_map(|(m, run)| {
            cutoffs.iter().flat_map(move |&k| {
                qrels
                    .queries
                    .iter()
                    .map(move |(q, rel)| (m.as_str(), run, k, q.as_str(), rel))
            })
        })
        .collect();
    let per_query = jobs
        .par_iter()
        .map(|&(method, run, k, qid, rel)| {
            let rel: Vec<String> = if cfg.prune {
                rel.iter().take(k).cloned().collect()
            } else {
                rel.clone()
            };
            let retrieved = run.get(qid).unwrap_or(&empty);
            let prf = prf_at_k(retrieved, &rel, k)?;
            let ap = cfg
                .variants
                .iter()
                .map(|&v| Ok((v, average_precision(retrieved, &rel, k, v)?)))
                .collect::<Result<Vec<_>, EvalError>>()?;
            Ok(QueryScore {
                method: method.to_string(),
                query_id: qid.to_string(),
                k,
                prf,
                ap,
                missing_run: !run.contains_key(qid),
                empty_relevant: rel.is_empty(),
            })
        })
        .collect::<Result<Vec<_>, EvalError>>()?;

    let n = qrels.len() as f64;
    let mut metrics: Vec<&str> = vec!["recall", "precision", "f1"];
    metrics.extend(cfg.variants.iter().map(|v| v.metric_name()));
    let mut rows = Vec::new();
    for (mi, metric) in metrics.iter().enumerate() {
        for (method, _) in runs {
            let values = cutoffs
                .iter()
                .map(|&k| {
                    per_query
                        .iter()
                        .filter(|q| &q.method == method && q.k == k)
                        .map(|q| match mi {
                            0 => q.prf.recall,
                            1 => q.prf.precision,
                            2 => q.prf.f1,
                            _ => q.ap[mi - 3].1,
                        })
                        .sum::<f64>()
                        / n
                })
                .collect();
            rows.push(ReportRow {
                metric: metric.to_string(),
                method: method.clone(),
                values,
            });
        }
    }
    Ok(EvalReport {
        cutoffs,
        rows,
        per_query,
    })
}
