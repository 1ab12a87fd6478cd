//! Bag-of-words TF-IDF baseline ranker.

use std::collections::{BTreeMap, HashMap, HashSet};
use std::fmt;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;
use std::str::FromStr;

use rayon::prelude::*;
use thiserror::Error;

use crate::query::Tokenizer;
use crate::rank::{sort_scored, RankedList};
use crate::scalar::Scalar;
use crate::tables::ArticleRow;

#[derive(Debug, Error)]
pub enum TfidfError {
    #[error("corpus has no tokens")]
    EmptyCorpus,
    #[error("no query token carries weight")]
    NoMatch,
    #[error("unknown idf variant {0:?}")]
    Variant(String),
    #[error("{path}:{line}: {msg}")]
    Parse { path: String, line: usize, msg: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum IdfVariant {
    /// `ln(N / df)`; terms present in every document get zero weight.
    #[default]
    Plain,
    /// `ln(1 + N / df)`.
    Smooth,
}

impl IdfVariant {
    pub fn idf(self, n: usize, df: usize) -> f64 {
        let r = n as f64 / df as f64;
        match self {
            IdfVariant::Plain => r.ln(),
            IdfVariant::Smooth => r.ln_1p(),
        }
    }
}

impl fmt::Display for IdfVariant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            IdfVariant::Plain => "plain",
            IdfVariant::Smooth => "smooth",
        })
    }
}

impl FromStr for IdfVariant {
    type Err = TfidfError;

    fn from_str(s: &str) -> Result<Self, TfidfError> {
        match s {
            "plain" => Ok(IdfVariant::Plain),
            "smooth" => Ok(IdfVariant::Smooth),
            _ => Err(TfidfError::Variant(s.to_string())),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Vocabulary {
    ids: BTreeMap<String, usize>,
    df: Vec<usize>,
    n_docs: usize,
}

impl Vocabulary {
    pub fn len(&self) -> usize {
        self.df.len()
    }

    pub fn is_empty(&self) -> bool {
        self.df.is_empty()
    }

    pub fn n_docs(&self) -> usize {
        self.n_docs
    }

    pub fn id(&self, token: &str) -> Option<usize> {
        self.ids.get(token).copied()
    }

    pub fn df(&self, token: &str) -> Option<usize> {
        self.id(token).map(|i| self.df[i])
    }

    pub fn tokens(&self) -> impl Iterator<Item = (&str, usize, usize)> {
        self.ids.iter().map(|(t, &i)| (t.as_str(), i, self.df[i]))
    }
}

/// Sorted `(token id, weight)` pairs with nonzero finite weights.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct SparseVector<F> {
    pub entries: Vec<(usize, F)>,
}

impl<F: Scalar> SparseVector<F> {
    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn norm(&self) -> F {
        self.entries.iter().map(|&(_, w)| w * w).sum::<F>().sqrt()
    }

    pub fn dot(&self, other: &SparseVector<F>) -> F {
        let (mut i, mut j, mut acc) = (0, 0, F::zero());
        while i < self.entries.len() && j < other.entries.len() {
            let (a, b) = (self.entries[i], other.entries[j]);
            match a.0.cmp(&b.0) {
                std::cmp::Ordering::Less => i += 1,
                std::cmp::Ordering::Greater => j += 1,
                std::cmp::Ordering::Equal => {
                    acc += a.1 * b.1;
                    i += 1;
                    j += 1;
                }
            }
        }
        acc
    }

    /// Clamped cosine; `None` when either side has zero norm.
    pub fn cosine(&self, other: &SparseVector<F>) -> Option<F> {
        let (na, nb) = (self.norm(), other.norm());
        if na == F::zero() || nb == F::zero() {
            return None;
        }
        Some((self.dot(other) / (na * nb)).max(-F::one()).min(F::one()))
    }
}

/// Title and abstract joined by a space.
pub fn document_text(a: &ArticleRow) -> String {
    format!("{} {}", a.title, a.abstract_text)
}

pub fn build_vocab<S: AsRef<str> + Sync>(docs: &[S], tokenizer: &Tokenizer) -> Result<Vocabulary, TfidfError> {
    let df_counts = docs
        .par_iter()
        .map(|d| {
            let distinct: HashSet<String> = tokenizer.tokenize(d.as_ref()).into_iter().collect();
            distinct.into_iter().map(|t| (t, 1usize)).collect::<HashMap<_, _>>()
        })
        .reduce(HashMap::new, |mut a, b| {
            for (t, c) in b {
                *a.entry(t).or_default() += c;
            }
            a
        });
    if df_counts.is_empty() {
        return Err(TfidfError::EmptyCorpus);
    }
    let sorted: BTreeMap<String, usize> = df_counts.into_iter().collect();
    let mut ids = BTreeMap::new();
    let mut df = Vec::with_capacity(sorted.len());
    for (i, (t, c)) in sorted.into_iter().enumerate() {
        ids.insert(t, i);
        df.push(c);
    }
    Ok(Vocabulary {
        ids,
        df,
        n_docs: docs.len(),
    })
}

/// `tf · idf` over known tokens; zero weights are dropped.
pub fn tfidf_vectorize<F: Scalar>(tokens: &[String], vocab: &Vocabulary, variant: IdfVariant) -> SparseVector<F> {
    let mut tf: BTreeMap<usize, usize> = BTreeMap::new();
    for t in tokens {
        if let Some(id) = vocab.id(t) {
            *tf.entry(id).or_default() += 1;
        }
    }
    let entries = tf
        .into_iter()
        .filter_map(|(id, count)| {
            let w = count as f64 * variant.idf(vocab.n_docs, vocab.df[id]);
            (w != 0.0 && w.is_finite()).then(|| (id, F::of(w)))
        })
        .collect();
    SparseVector { entries }
}

/// Vocabulary over the full corpus plus vectors for the ranking targets.
#[derive(Debug, Clone, PartialEq)]
pub struct TfidfIndex<F> {
    pub vocab: Vocabulary,
    pub variant: IdfVariant,
    pub docs: Vec<(String, SparseVector<F>)>,
}

impl<F: Scalar> TfidfIndex<F> {
    /// `corpus` and `targets` are `(pmid, text)` pairs.
    pub fn build(
        corpus: &[(String, String)],
        targets: &[(String, String)],
        tokenizer: &Tokenizer,
        variant: IdfVariant,
    ) -> Result<Self, TfidfError> {
        let texts: Vec<&str> = corpus.iter().map(|(_, t)| t.as_str()).collect();
        let vocab = build_vocab(&texts, tokenizer)?;
        let docs = targets
            .par_iter()
            .map(|(pmid, text)| {
                (
                    pmid.clone(),
                    tfidf_vectorize(&tokenizer.tokenize(text), &vocab, variant),
                )
            })
            .collect();
        Ok(TfidfIndex { vocab, variant, docs })
    }

    pub fn rank(
        &self,
        query_id: &str,
        query: &str,
        tokenizer: &Tokenizer,
        k: Option<usize>,
    ) -> Result<RankedList, TfidfError> {
        let q: SparseVector<F> = tfidf_vectorize(&tokenizer.tokenize(query), &self.vocab, self.variant);
        if q.norm() == F::zero() {
            return Err(TfidfError::NoMatch);
        }
        let scored: Vec<(String, Option<f64>)> = self
            .docs
            .par_iter()
            .map(|(pmid, d)| (pmid.clone(), q.cosine(d).map(|s| s.as_f64())))
            .collect();
        let mut entries = Vec::with_capacity(scored.len());
        let mut excluded = Vec::new();
        for (pmid, s) in scored {
            match s {
                Some(s) => entries.push((pmid, s)),
                None => excluded.push(pmid),
            }
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

    /// Writes `vocab.tsv` and `matrix.tsv` into `dir`.
    pub fn write(&self, dir: &Path) -> Result<(), TfidfError> {
        std::fs::create_dir_all(dir)?;
        let mut w = BufWriter::new(File::create(dir.join("vocab.tsv"))?);
        writeln!(w, "#n_docs={}\tidf={}", self.vocab.n_docs, self.variant)?;
        writeln!(w, "token\tid\tdf")?;
        for (t, id, df) in self.vocab.tokens() {
            writeln!(w, "{t}\t{id}\t{df}")?;
        }
        w.flush()?;
        let mut w = BufWriter::new(File::create(dir.join("matrix.tsv"))?);
        writeln!(w, "pmid\ttoken_id\tweight")?;
        for (pmid, v) in &self.docs {
            if v.is_empty() {
                writeln!(w, "{pmid}\t\t")?;
            }
            for (id, x) in &v.entries {
                writeln!(w, "{pmid}\t{id}\t{x}")?;
            }
        }
        w.flush()?;
        Ok(())
    }

    pub fn read(dir: &Path) -> Result<Self, TfidfError> {
        let vpath = dir.join("vocab.tsv");
        let name = vpath.display().to_string();
        let perr = |name: &str, line: usize, msg: &str| TfidfError::Parse {
            path: name.to_string(),
            line,
            msg: msg.to_string(),
        };
        let mut lines = BufReader::new(File::open(&vpath)?).lines();
        let meta = lines.next().ok_or_else(|| perr(&name, 1, "empty file"))??;
        let mut n_docs = None;
        let mut variant = IdfVariant::Plain;
        for kv in meta.trim_start_matches('#').split('\t') {
            match kv.split_once('=') {
                Some(("n_docs", v)) => n_docs = v.parse().ok(),
                Some(("idf", v)) => variant = v.parse()?,
                _ => return Err(perr(&name, 1, "bad metadata line")),
            }
        }
        let n_docs = n_docs.ok_or_else(|| perr(&name, 1, "missing n_docs"))?;
        lines.next();
        let mut ids = BTreeMap::new();
        let mut df_by_id = BTreeMap::new();
        for (i, line) in lines.enumerate() {
            let line = line?;
            let f: Vec<&str> = line.split('\t').collect();
            let (id, df) = match f.as_slice() {
                [t, id, df] => {
                    let id: usize = id.parse().map_err(|_| perr(&name, i + 3, "bad id"))?;
                    ids.insert(t.to_string(), id);
                    (id, df.parse::<usize>().map_err(|_| perr(&name, i + 3, "bad df"))?)
                }
                _ => return Err(perr(&name, i + 3, "expected 3 columns")),
            };
            df_by_id.insert(id, df);
        }
        if df_by_id.keys().enumerate().any(|(i, &id)| i != id) {
            return Err(perr(&name, 0, "token ids are not dense"));
        }
        let vocab = Vocabulary {
            ids,
            df: df_by_id.into_values().collect(),
            n_docs,
        };

        let mpath = dir.join("matrix.tsv");
        let name = mpath.display().to_string();
        let mut docs: Vec<(String, SparseVector<F>)> = Vec::new();
        for (i, line) in BufReader::new(File::open(&mpath)?).lines().enumerate().skip(1) {
            let line = line?;
            let f: Vec<&str> = line.split('\t').collect();
            let [pmid, id, w] = f.as_slice() else {
                return Err(perr(&name, i + 1, "expected 3 columns"));
            };
            if docs.last().map(|(p, _)| p.as_str()) != Some(*pmid) {
                docs.push((pmid.to_string(), SparseVector::default()));
            }
            if id.is_empty() {
                continue;
            }
            let id: usize = id.parse().map_err(|_| perr(&name, i + 1, "bad token id"))?;
            let w: F = w.parse().map_err(|_| perr(&name, i + 1, "bad weight"))?;
            docs.last_mut().expect("pushed above").1.entries.push((id, w));
        }
        Ok(TfidfIndex { vocab, variant, docs })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pairs(xs: &[(&str, &str)]) -> Vec<(String, String)> {
        xs.iter().map(|(a, b)| (a.to_string(), b.to_string())).collect()
    }

    #[test]
    fn vocab_counts_documents() {
        let t = Tokenizer::default();
        let v = build_vocab(&["cancer cell", "cancer gene gene"], &t).unwrap();
        assert_eq!(v.n_docs(), 2);
        assert_eq!(v.df("cancer"), Some(2));
        assert_eq!(v.df("cell"), Some(1));
        assert_eq!(v.df("gene"), Some(1));
        assert_eq!(v.id("cancer"), Some(0));
        assert!(matches!(build_vocab(&["", "the of"], &t), Err(TfidfError::EmptyCorpus)));
    }

    #[test]
    fn weights() {
        let t = Tokenizer::default();
        let v = build_vocab(&["cancer cell", "cancer gene"], &t).unwrap();
        let x: SparseVector<f64> = tfidf_vectorize(&t.tokenize("cancer cell"), &v, IdfVariant::Plain);
        assert_eq!(x.entries.len(), 1);
        assert_eq!(x.entries[0].0, v.id("cell").unwrap());
        assert!((x.entries[0].1 - 2f64.ln()).abs() < 1e-15);
        let s: SparseVector<f64> = tfidf_vectorize(&t.tokenize("cancer cell"), &v, IdfVariant::Smooth);
        assert_eq!(s.entries.len(), 2);
        assert!((s.entries[0].1 - 2f64.ln()).abs() < 1e-15);
        assert!(tfidf_vectorize::<f64>(&[], &v, IdfVariant::Plain).is_empty());
    }

    #[test]
    fn ranking() {
        let t = Tokenizer::default();
        let corpus = pairs(&[
            ("1", "aspirin headache relief"),
            ("2", "warfarin bleeding risk"),
            ("3", "aspirin bleeding risk"),
            ("4", "unrelated text here"),
        ]);
        let idx = TfidfIndex::<f64>::build(&corpus, &corpus[..3], &t, IdfVariant::Plain).unwrap();
        let r = idx.rank("q", "aspirin headache relief", &t, None).unwrap();
        assert_eq!(r.entries[0].0, "1");
        assert!((r.entries[0].1 - 1.0).abs() < 1e-12);
        assert_eq!(r.entries.len(), 3);
        assert!(matches!(
            idx.rank("q", "nothing known", &t, None),
            Err(TfidfError::NoMatch)
        ));
    }

    #[test]
    fn sidecar_round_trip() {
        let t = Tokenizer::default();
        let corpus = pairs(&[("1", "alpha beta"), ("2", "beta gamma"), ("3", "beta")]);
        let idx = TfidfIndex::<f64>::build(&corpus, &corpus, &t, IdfVariant::Smooth).unwrap();
        let dir = tempfile::tempdir().unwrap();
        idx.write(dir.path()).unwrap();
        assert_eq!(TfidfIndex::<f64>::read(dir.path()).unwrap(), idx);

        let plain = TfidfIndex::<f64>::build(&corpus, &corpus, &t, IdfVariant::Plain).unwrap();
        assert!(plain.docs[2].1.is_empty());
        plain.write(dir.path()).unwrap();
        assert_eq!(TfidfIndex::<f64>::read(dir.path()).unwrap(), plain);
    }
}
