//! Free-text query to query vector: tokenize, expand with sliding windows,
//! match against the entity index, and average the matched node vectors.

use std::collections::{BTreeSet, HashSet};
use std::path::Path;

use thiserror::Error;

use crate::index::{normalize_surface, EntityIndex};
use crate::kg::NodeId;
use crate::scalar::Scalar;
use crate::vectors::{mean, NodeVectors};

pub const DEFAULT_STOP_WORDS: &str = include_str!("../resources/stopwords.txt");
pub const DEFAULT_QUERY_VERBS: &str = include_str!("../resources/query_verbs.txt");

/// Window sizes used by [`expand`], in emission order after the unigrams.
pub const WINDOW_SIZES: [usize; 3] = [2, 3, 4];

#[derive(Debug, Error)]
pub enum QueryError {
    #[error("no query keyword matched the entity index (candidates: {})", .unmatched.join(", "))]
    NoMatch { unmatched: Vec<String> },
    #[error("matched entity {0} has no embedding")]
    MissingVector(NodeId),
    #[error("{path}: {source}")]
    Resource {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

#[derive(Debug, Clone)]
pub struct Tokenizer {
    stop: HashSet<String>,
}

impl Default for Tokenizer {
    fn default() -> Self {
        Tokenizer::from_lists(DEFAULT_STOP_WORDS, DEFAULT_QUERY_VERBS)
    }
}

impl Tokenizer {
    /// Builds a stop-list from newline-separated word lists.
    pub fn from_lists(stop_words: &str, verbs: &str) -> Self {
        let stop = stop_words
            .lines()
            .chain(verbs.lines())
            .map(|w| w.trim().to_lowercase())
            .filter(|w| !w.is_empty() && !w.starts_with('#'))
            .collect();
        Tokenizer { stop }
    }

    /// Loads either list from disk, falling back to the built-in one.
    pub fn from_files(stop_words: Option<&Path>, verbs: Option<&Path>) -> Result<Self, QueryError> {
        let read = |p: Option<&Path>, default: &str| -> Result<String, QueryError> {
            match p {
                Some(p) => std::fs::read_to_string(p).map_err(|source| QueryError::Resource {
                    path: p.display().to_string(),
                    source,
                }),
                None => Ok(default.to_string()),
            }
        };
        Ok(Tokenizer::from_lists(
            &read(stop_words, DEFAULT_STOP_WORDS)?,
            &read(verbs, DEFAULT_QUERY_VERBS)?,
        ))
    }

    pub fn is_stop_word(&self, token: &str) -> bool {
        self.stop.contains(token)
    }

    /// Lowercases, strips punctuation (apostrophes vanish, anything else
    /// becomes a space), splits on whitespace and drops stop-list tokens.
    /// Duplicates are kept.
    pub fn tokenize(&self, text: &str) -> Vec<String> {
        let mut cleaned = String::with_capacity(text.len());
        for c in text.chars() {
            if c.is_alphanumeric() {
                cleaned.extend(c.to_lowercase());
            } else if c == '\'' || c == '\u{2019}' {
                continue;
            } else {
                cleaned.push(' ');
            }
        }
        cleaned
            .split_whitespace()
            .filter(|t| !self.stop.contains(*t))
            .map(str::to_string)
            .collect()
    }
}

/// A contiguous run of query tokens.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Candidate {
    pub text: String,
    pub start: usize,
    pub len: usize,
}

impl Candidate {
    fn contains(&self, other: &Candidate) -> bool {
        self.start <= other.start && other.start + other.len <= self.start + self.len
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ExpandedKeywords {
    pub candidates: Vec<Candidate>,
}

impl ExpandedKeywords {
    pub fn texts(&self) -> Vec<&str> {
        self.candidates.iter().map(|c| c.text.as_str()).collect()
    }
}

/// Unigrams, then every contiguous 2-, 3- and 4-gram, first occurrence kept.
pub fn expand(tokens: &[String]) -> ExpandedKeywords {
    let mut seen = HashSet::new();
    let mut candidates = Vec::new();
    for len in std::iter::once(1).chain(WINDOW_SIZES) {
        for (start, window) in tokens.windows(len).enumerate() {
            let text = window.join(" ");
            if seen.insert(text.clone()) {
                candidates.push(Candidate { text, start, len });
            }
        }
    }
    ExpandedKeywords { candidates }
}

/// Unit-cost edit distance over Unicode scalar values.
pub fn levenshtein(a: &str, b: &str) -> usize {
    let a: Vec<char> = a.chars().collect();
    let b: Vec<char> = b.chars().collect();
    if a.is_empty() {
        return b.len();
    }
    let mut prev: Vec<usize> = (0..=b.len()).collect();
    let mut cur = vec![0; b.len() + 1];
    for (i, ca) in a.iter().enumerate() {
        cur[0] = i + 1;
        for (j, cb) in b.iter().enumerate() {
            let sub = prev[j] + usize::from(ca != cb);
            cur[j + 1] = sub.min(prev[j + 1] + 1).min(cur[j] + 1);
        }
        std::mem::swap(&mut prev, &mut cur);
    }
    prev[b.len()]
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MatchConfig {
    /// Largest accepted `levenshtein / max(len)`.
    pub threshold: f64,
    /// Drop matches whose span lies inside a longer matched span.
    pub suppress_subspans: bool,
}

impl Default for MatchConfig {
    fn default() -> Self {
        MatchConfig {
            threshold: 0.25,
            suppress_subspans: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct KeywordMatch {
    pub candidate: Candidate,
    pub surface: String,
    pub distance: usize,
    pub normalized: f64,
    pub entity_ids: BTreeSet<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct QueryMatch {
    pub entity_ids: BTreeSet<String>,
    pub nodes: BTreeSet<NodeId>,
    pub matches: Vec<KeywordMatch>,
}

fn char_len(s: &str) -> usize {
    s.chars().count()
}

fn best_fuzzy<'a>(
    candidate: &str,
    index: &'a EntityIndex,
    threshold: f64,
) -> Option<(&'a str, usize, usize, &'a BTreeSet<String>)> {
    let clen = char_len(candidate);
    let mut best: Option<(&str, usize, usize, &BTreeSet<String>)> = None;
    for (surface, ids) in index.surfaces() {
        let slen = char_len(surface);
        let longest = clen.max(slen);
        if longest == 0 || clen.abs_diff(slen) as f64 / longest as f64 > threshold {
            continue;
        }
        let d = levenshtein(candidate, surface);
        if d as f64 / longest as f64 > threshold {
            continue;
        }
        // d/longest < best_d/best_len, compared exactly; surfaces arrive in
        // ascending order so the first of equal distances wins.
        let better = match best {
            None => true,
            Some((_, bd, bl, _)) => d * bl < bd * longest,
        };
        if better {
            best = Some((surface, d, longest, ids));
        }
    }
    best
}

/// Exact lookup first, then the closest surface within the threshold.
/// Unmatched candidates are skipped; only a query with no match at all fails.
pub fn match_keywords(
    expanded: &ExpandedKeywords,
    index: &EntityIndex,
    cfg: &MatchConfig,
) -> Result<QueryMatch, QueryError> {
    let mut matches = Vec::new();
    let mut unmatched = Vec::new();
    for cand in &expanded.candidates {
        let normalized = normalize_surface(&cand.text);
        let exact = index.lookup_exact(&normalized);
        if !exact.is_empty() {
            matches.push(KeywordMatch {
                candidate: cand.clone(),
                surface: normalized,
                distance: 0,
                normalized: 0.0,
                entity_ids: exact,
            });
            continue;
        }
        match best_fuzzy(&normalized, index, cfg.threshold) {
            Some((surface, d, longest, ids)) => matches.push(KeywordMatch {
                candidate: cand.clone(),
                surface: surface.to_string(),
                distance: d,
                normalized: d as f64 / longest as f64,
                entity_ids: ids.clone(),
            }),
            None => unmatched.push(cand.text.clone()),
        }
    }
    if cfg.suppress_subspans {
        let spans: Vec<Candidate> = matches.iter().map(|m| m.candidate.clone()).collect();
        matches.retain(|m| {
            !spans
                .iter()
                .any(|s| s.len > m.candidate.len && s.contains(&m.candidate))
        });
    }
    if matches.is_empty() {
        return Err(QueryError::NoMatch { unmatched });
    }
    let entity_ids: BTreeSet<String> = matches.iter().flat_map(|m| m.entity_ids.iter().cloned()).collect();
    let nodes = entity_ids
        .iter()
        .map(|id| index.record(id).expect("index is consistent").node_id())
        .collect();
    Ok(QueryMatch {
        entity_ids,
        nodes,
        matches,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct QueryVector<F> {
    pub vector: Vec<F>,
    pub provenance: BTreeSet<String>,
}

/// Mean of the matched entities' node vectors.
pub fn embed_query<F: Scalar>(m: &QueryMatch, x: &NodeVectors<F>) -> Result<QueryVector<F>, QueryError> {
    let rows = m
        .nodes
        .iter()
        .map(|n| x.get(n).ok_or_else(|| QueryError::MissingVector(n.clone())))
        .collect::<Result<Vec<&[F]>, _>>()?;
    let vector = mean(x.dim(), rows).ok_or(QueryError::NoMatch { unmatched: Vec::new() })?;
    Ok(QueryVector {
        vector,
        provenance: m.entity_ids.clone(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::index::build_index;
    use crate::tables::{EntityType, MentionRow};
    use proptest::prelude::*;

    fn toks(xs: &[&str]) -> Vec<String> {
        xs.iter().map(|s| s.to_string()).collect()
    }

    fn index(rows: &[(&str, &str, EntityType)]) -> EntityIndex {
        let rows: Vec<MentionRow> = rows
            .iter()
            .enumerate()
            .map(|(i, (surface, id, t))| MentionRow {
                pmid: (i + 1).to_string(),
                surface_form: surface.to_string(),
                entity_id: id.to_string(),
                entity_type: *t,
            })
            .collect();
        build_index(&rows).unwrap()
    }

    #[test]
    fn tokenizer_examples() {
        let t = Tokenizer::default();
        assert_eq!(
            t.tokenize("show me articles on depression and type 2 diabetes"),
            toks(&["articles", "depression", "type", "2", "diabetes"])
        );
        assert!(t.tokenize("").is_empty());
        assert_eq!(t.tokenize("Aspirin, aspirin!"), toks(&["aspirin", "aspirin"]));
        assert_eq!(t.tokenize("Crohn's disease"), toks(&["crohns", "disease"]));
        assert_eq!(t.tokenize("IL-6"), toks(&["il", "6"]));
    }

    #[test]
    fn tokenizer_custom_lists() {
        let t = Tokenizer::from_lists("the\n", "# comment\nfind\n");
        assert_eq!(t.tokenize("find the me"), toks(&["me"]));
    }

    #[test]
    fn expansion_examples() {
        let e = expand(&toks(&["articles", "depression", "type", "2", "diabetes"]));
        assert_eq!(
            e.texts(),
            vec![
                "articles",
                "depression",
                "type",
                "2",
                "diabetes",
                "articles depression",
                "depression type",
                "type 2",
                "2 diabetes",
                "articles depression type",
                "depression type 2",
                "type 2 diabetes",
                "articles depression type 2",
                "depression type 2 diabetes",
            ]
        );
        assert_eq!(expand(&toks(&["a"])).texts(), vec!["a"]);
        assert_eq!(expand(&toks(&["a", "b"])).texts(), vec!["a", "b", "a b"]);
        assert_eq!(expand(&toks(&["a", "a"])).texts(), vec!["a", "a a"]);
    }

    #[test]
    fn levenshtein_examples() {
        assert_eq!(levenshtein("aspirin", "aspirin"), 0);
        assert_eq!(levenshtein("", "abc"), 3);
        assert_eq!(levenshtein("abc", ""), 3);
        assert_eq!(levenshtein("kitten", "sitting"), 3);
        assert_eq!(levenshtein("gene", "bone"), 2);
        assert_eq!(levenshtein("naïve", "naive"), 1);
    }

    #[test]
    fn exact_and_fuzzy_matching() {
        let idx = index(&[
            ("type 2 diabetes", "d1", EntityType::Disease),
            ("diabetes", "d2", EntityType::Disease),
            ("depression", "d3", EntityType::Disease),
        ]);
        let m = match_keywords(
            &expand(&toks(&["type", "2", "diabetes"])),
            &idx,
            &MatchConfig::default(),
        )
        .unwrap();
        let exact = m
            .matches
            .iter()
            .find(|k| k.candidate.text == "type 2 diabetes")
            .unwrap();
        assert_eq!(
            (exact.distance, exact.entity_ids.clone()),
            (0, ["d1".to_string()].into())
        );
        assert!(m.entity_ids.contains("d2"));

        let m = match_keywords(&expand(&toks(&["diabtes"])), &idx, &MatchConfig::default()).unwrap();
        assert_eq!(m.matches[0].surface, "diabetes");
        assert_eq!(m.matches[0].distance, 1);
        assert!((m.matches[0].normalized - 0.125).abs() < 1e-15);
        assert_eq!(m.nodes, [NodeId::entity(EntityType::Disease, "d2")].into());
    }

    #[test]
    fn articles_token_is_dropped_silently() {
        let idx = index(&[("depression", "d3", EntityType::Disease)]);
        let m = match_keywords(
            &expand(&toks(&["articles", "depression"])),
            &idx,
            &MatchConfig::default(),
        )
        .unwrap();
        assert_eq!(m.entity_ids, ["d3".to_string()].into());
    }

    #[test]
    fn short_words_are_not_confused() {
        let idx = index(&[("bone", "g1", EntityType::Gene)]);
        let err = match_keywords(&expand(&toks(&["gene"])), &idx, &MatchConfig::default()).unwrap_err();
        assert!(matches!(err, QueryError::NoMatch { unmatched } if unmatched == vec!["gene".to_string()]));
    }

    #[test]
    fn fuzzy_ties_prefer_smaller_surface() {
        let idx = index(&[("abcdx", "e2", EntityType::Gene), ("abcdy", "e1", EntityType::Gene)]);
        let m = match_keywords(&expand(&toks(&["abcdz"])), &idx, &MatchConfig::default()).unwrap();
        assert_eq!(m.matches[0].surface, "abcdx");
    }

    #[test]
    fn subspan_suppression() {
        let idx = index(&[
            ("type 2 diabetes", "d1", EntityType::Disease),
            ("diabetes", "d2", EntityType::Disease),
        ]);
        let cfg = MatchConfig {
            suppress_subspans: true,
            ..Default::default()
        };
        let m = match_keywords(&expand(&toks(&["type", "2", "diabetes"])), &idx, &cfg).unwrap();
        assert_eq!(m.entity_ids, ["d1".to_string()].into());
    }

    #[test]
    fn embedding_means() {
        let idx = index(&[
            ("aspirin", "e1", EntityType::Drug),
            ("warfarin", "e2", EntityType::Drug),
        ]);
        let mut x = NodeVectors::<f64>::new(2);
        x.push(NodeId::entity(EntityType::Drug, "e1"), &[2.0, 0.0]).unwrap();
        x.push(NodeId::entity(EntityType::Drug, "e2"), &[0.0, 2.0]).unwrap();
        let one = match_keywords(&expand(&toks(&["aspirin"])), &idx, &MatchConfig::default()).unwrap();
        assert_eq!(embed_query(&one, &x).unwrap().vector, vec![2.0, 0.0]);
        let both = match_keywords(&expand(&toks(&["aspirin", "warfarin"])), &idx, &MatchConfig::default()).unwrap();
        let q = embed_query(&both, &x).unwrap();
        assert_eq!(q.vector, vec![1.0, 1.0]);
        assert_eq!(q.provenance.len(), 2);

        let empty = NodeVectors::<f64>::new(2);
        assert!(matches!(embed_query(&one, &empty), Err(QueryError::MissingVector(_))));
    }

    fn naive_levenshtein(a: &[char], b: &[char]) -> usize {
        match (a.split_first(), b.split_first()) {
            (None, _) => b.len(),
            (_, None) => a.len(),
            (Some((ca, ra)), Some((cb, rb))) => {
                let sub = naive_levenshtein(ra, rb) + usize::from(ca != cb);
                sub.min(naive_levenshtein(ra, b) + 1).min(naive_levenshtein(a, rb) + 1)
            }
        }
    }

    proptest! {
        #[test]
        fn levenshtein_matches_recursive_definition(a in "[abc]{0,6}", b in "[abc]{0,6}") {
            let (ca, cb): (Vec<char>, Vec<char>) = (a.chars().collect(), b.chars().collect());
            prop_assert_eq!(levenshtein(&a, &b), naive_levenshtein(&ca, &cb));
        }

        #[test]
        fn levenshtein_is_a_metric(a in "[a-d ]{0,10}", b in "[a-d ]{0,10}", c in "[a-d ]{0,10}") {
            prop_assert_eq!(levenshtein(&a, &b) == 0, a == b);
            prop_assert_eq!(levenshtein(&a, &b), levenshtein(&b, &a));
            prop_assert!(levenshtein(&a, &c) <= levenshtein(&a, &b) + levenshtein(&b, &c));
        }

        #[test]
        fn tokenize_is_idempotent(text in "[A-Za-z0-9 ,.!?'-]{0,60}") {
            let t = Tokenizer::default();
            let once = t.tokenize(&text);
            prop_assert_eq!(t.tokenize(&once.join(" ")), once);
        }

        #[test]
        fn expansion_size(tokens in proptest::collection::vec("[a-z]{1,3}", 0..9)) {
            let u = tokens.len();
            let bound = u + WINDOW_SIZES.iter().map(|&w| (u + 1).saturating_sub(w)).sum::<usize>();
            let e = expand(&tokens);
            prop_assert!(e.candidates.len() <= bound);
            for t in &tokens {
                prop_assert!(e.texts().contains(&t.as_str()));
            }
            let distinct: HashSet<&String> = tokens.iter().collect();
            if distinct.len() == u {
                prop_assert_eq!(e.candidates.len(), bound);
            }
        }

        #[test]
        fn zero_threshold_is_exact_lookup(words in proptest::collection::vec("[a-c]{1,4}", 1..5)) {
            let idx = index(&[
                ("ab", "e1", EntityType::Gene),
                ("abc", "e2", EntityType::Gene),
                ("ca b", "e3", EntityType::Drug),
            ]);
            let e = expand(&words);
            let cfg = MatchConfig { threshold: 0.0, ..Default::default() };
            let exact: BTreeSet<String> = e.texts().iter().flat_map(|t| idx.lookup_exact(t)).collect();
            match match_keywords(&e, &idx, &cfg) {
                Ok(m) => prop_assert_eq!(m.entity_ids, exact),
                Err(_) => prop_assert!(exact.is_empty()),
            }
        }
    }
}
