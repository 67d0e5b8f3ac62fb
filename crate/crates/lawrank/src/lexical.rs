//! Tokenization, inverted index, Okapi BM25, tf-idf cosine, and top-K
//! candidate pruning.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::num::Real;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TokenizerMode {
    /// Split on non-alphanumeric boundaries.
    UnicodeWord,
    /// One token per non-space character, for unsegmented scripts.
    Character,
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct TokenizerConfig {
    pub mode: TokenizerMode,
    pub lowercase: bool,
}

impl Default for TokenizerConfig {
    fn default() -> Self {
        TokenizerConfig {
            mode: TokenizerMode::UnicodeWord,
            lowercase: true,
        }
    }
}

pub fn tokenize(text: &str, config: &TokenizerConfig) -> Vec<String> {
    let mut tokens = Vec::new();
    match config.mode {
        TokenizerMode::UnicodeWord => {
            let mut cur = String::new();
            for ch in text.chars() {
                if ch.is_alphanumeric() {
                    if config.lowercase {
                        cur.extend(ch.to_lowercase());
                    } else {
                        cur.push(ch);
                    }
                } else if !cur.is_empty() {
                    tokens.push(std::mem::take(&mut cur));
                }
            }
            if !cur.is_empty() {
                tokens.push(cur);
            }
        }
        TokenizerMode::Character => {
            for ch in text.chars() {
                if ch.is_whitespace() {
                    continue;
                }
                if config.lowercase {
                    tokens.push(ch.to_lowercase().collect());
                } else {
                    tokens.push(ch.to_string());
                }
            }
        }
    }
    tokens
}

/// Join tokens back into display text: spaces between word tokens,
/// straight concatenation for character tokens.
pub fn render_tokens(tokens: &[String], mode: TokenizerMode) -> String {
    match mode {
        TokenizerMode::UnicodeWord => tokens.join(" "),
        TokenizerMode::Character => tokens.concat(),
    }
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct Bm25Params<T: Real = crate::Score> {
    pub k1: T,
    pub b: T,
}

impl<T: Real> Default for Bm25Params<T> {
    fn default() -> Self {
        Bm25Params {
            k1: T::from_f64(1.5).unwrap(),
            b: T::from_f64(0.75).unwrap(),
        }
    }
}

impl<T: Real> Bm25Params<T> {
    pub fn validate(&self) -> Result<()> {
        if self.k1 < T::zero() {
            return Err(Error::InvalidConfig("bm25 k1 must be >= 0".into()));
        }
        if self.b < T::zero() || self.b > T::one() {
            return Err(Error::InvalidConfig("bm25 b must be in [0,1]".into()));
        }
        Ok(())
    }
}

/// Postings keyed by term, each sorted by unit id.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct InvertedIndex {
    postings: BTreeMap<String, Vec<(String, u32)>>,
    unit_lengths: BTreeMap<String, u32>,
    total_tokens: u64,
}

const SNAPSHOT_VERSION: u32 = 1;

#[derive(Serialize, Deserialize)]
struct Snapshot {
    version: u32,
    index: InvertedIndex,
}

impl InvertedIndex {
    pub fn build<I, S>(units: I) -> Result<InvertedIndex>
    where
        I: IntoIterator<Item = (S, Vec<String>)>,
        S: Into<String>,
    {
        let mut postings: BTreeMap<String, Vec<(String, u32)>> = BTreeMap::new();
        let mut unit_lengths = BTreeMap::new();
        let mut total_tokens = 0u64;
        for (id, tokens) in units {
            let id = id.into();
            if unit_lengths.contains_key(&id) {
                return Err(Error::DuplicateId(id));
            }
            total_tokens += tokens.len() as u64;
            let mut counts: BTreeMap<String, u32> = BTreeMap::new();
            for t in &tokens {
                *counts.entry(t.clone()).or_default() += 1;
            }
            for (term, tf) in counts {
                postings.entry(term).or_default().push((id.clone(), tf));
            }
            unit_lengths.insert(id, tokens.len() as u32);
        }
        // BTreeMap insertion order is arbitrary per unit; postings lists must
        // be sorted by unit id for lookup.
        for list in postings.values_mut() {
            list.sort_by(|a, b| a.0.cmp(&b.0));
        }
        Ok(InvertedIndex {
            postings,
            unit_lengths,
            total_tokens,
        })
    }

    pub fn len(&self) -> usize {
        self.unit_lengths.len()
    }

    pub fn is_empty(&self) -> bool {
        self.unit_lengths.is_empty()
    }

    pub fn avg_length(&self) -> f64 {
        if self.unit_lengths.is_empty() {
            0.0
        } else {
            self.total_tokens as f64 / self.unit_lengths.len() as f64
        }
    }

    pub fn unit_length(&self, unit_id: &str) -> Option<u32> {
        self.unit_lengths.get(unit_id).copied()
    }

    pub fn unit_ids(&self) -> impl Iterator<Item = &str> {
        self.unit_lengths.keys().map(String::as_str)
    }

    /// Document frequency of a term.
    pub fn df(&self, term: &str) -> usize {
        self.postings.get(term).map_or(0, Vec::len)
    }

    fn tf(&self, term: &str, unit_id: &str) -> u32 {
        self.postings
            .get(term)
            .and_then(|list| {
                list.binary_search_by(|(id, _)| id.as_str().cmp(unit_id))
                    .ok()
                    .map(|i| list[i].1)
            })
            .unwrap_or(0)
    }

    pub fn save(&self, path: &std::path::Path) -> Result<()> {
        let snap = Snapshot {
            version: SNAPSHOT_VERSION,
            index: self.clone(),
        };
        let file = std::fs::File::create(path)?;
        serde_json::to_writer(std::io::BufWriter::new(file), &snap)?;
        Ok(())
    }

    pub fn load(path: &std::path::Path) -> Result<InvertedIndex> {
        let file = std::fs::File::open(path)?;
        let snap: Snapshot = serde_json::from_reader(std::io::BufReader::new(file))?;
        if snap.version != SNAPSHOT_VERSION {
            return Err(Error::SnapshotVersion(snap.version));
        }
        Ok(snap.index)
    }
}

/// Okapi BM25 with the +1-inside-log idf variant:
/// `idf(t) = ln((N - df + 0.5)/(df + 0.5) + 1)`.
pub fn bm25_score<T: Real>(
    index: &InvertedIndex,
    query: &[String],
    unit_id: &str,
    params: &Bm25Params<T>,
) -> Result<T> {
    if index.is_empty() {
        return Err(Error::EmptyIndex);
    }
    let len = index
        .unit_length(unit_id)
        .ok_or_else(|| Error::UnknownId(unit_id.to_string()))?;
    let n = T::from_usize_(index.len());
    let avg = T::from_f64(index.avg_length()).unwrap();
    let len = T::from_u32(len).unwrap();
    let half = T::from_f64(0.5).unwrap();
    let mut score = T::zero();
    for term in query {
        let tf = index.tf(term, unit_id);
        if tf == 0 {
            continue;
        }
        let df = T::from_usize_(index.df(term));
        let idf = ((n - df + half) / (df + half) + T::one()).ln();
        let tf = T::from_u32(tf).unwrap();
        let denom = tf + params.k1 * (T::one() - params.b + params.b * len / avg);
        score += idf * tf * (params.k1 + T::one()) / denom;
    }
    Ok(score)
}

/// Top-K units by BM25 score, descending; ties broken by ascending unit id.
pub fn prune_candidates<T: Real>(
    index: &InvertedIndex,
    query: &[String],
    k: usize,
    params: &Bm25Params<T>,
) -> Result<Vec<(String, T)>> {
    if k == 0 {
        return Err(Error::InvalidConfig("prune K must be >= 1".into()));
    }
    if index.is_empty() {
        return Err(Error::EmptyIndex);
    }
    let mut scored: Vec<(String, T)> = index
        .unit_ids()
        .map(|id| bm25_score(index, query, id, params).map(|s| (id.to_string(), s)))
        .collect::<Result<_>>()?;
    scored.sort_by(|a, b| b.1.partial_cmp(&a.1).unwrap().then_with(|| a.0.cmp(&b.0)));
    scored.truncate(k);
    Ok(scored)
}

/// Cosine similarity of tf-idf vectors with `idf = ln(N/(1+df)) + 1` and raw
/// term counts. Returns 0 when either vector is all-zero.
pub fn tfidf_cosine<T: Real>(a: &[String], b: &[String], corpus_stats: &InvertedIndex) -> T {
    let n = corpus_stats.len();
    debug_assert!(n >= 1, "corpus stats must cover at least one unit");
    let vec_of = |tokens: &[String]| -> BTreeMap<String, T> {
        let mut counts: BTreeMap<String, u32> = BTreeMap::new();
        for t in tokens {
            *counts.entry(t.clone()).or_default() += 1;
        }
        counts
            .into_iter()
            .map(|(term, tf)| {
                let df = corpus_stats.df(&term);
                let idf = (T::from_usize_(n) / T::from_usize_(1 + df)).ln() + T::one();
                (term, T::from_u32(tf).unwrap() * idf)
            })
            .collect()
    };
    let va = vec_of(a);
    let vb = vec_of(b);
    let dot: T = va
        .iter()
        .filter_map(|(term, wa)| vb.get(term).map(|wb| *wa * *wb))
        .sum();
    let norm = |v: &BTreeMap<String, T>| v.values().map(|w| *w * *w).sum::<T>().sqrt();
    let na = norm(&va);
    let nb = norm(&vb);
    if na == T::zero() || nb == T::zero() {
        T::zero()
    } else {
        // Rounding can nudge identical vectors just past 1.
        (dot / (na * nb)).min(T::one())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn toks(s: &str) -> Vec<String> {
        s.split_whitespace().map(str::to_string).collect()
    }

    fn small_index() -> InvertedIndex {
        InvertedIndex::build(vec![
            ("d1", toks("a b")),
            ("d2", toks("b c")),
            ("d3", toks("c d")),
        ])
        .unwrap()
    }

    #[test]
    fn tokenize_words() {
        let cfg = TokenizerConfig::default();
        assert_eq!(tokenize("The Court, today", &cfg), toks("the court today"));
        assert_eq!(tokenize("", &cfg), Vec::<String>::new());
    }

    #[test]
    fn tokenize_characters() {
        let cfg = TokenizerConfig {
            mode: TokenizerMode::Character,
            lowercase: true,
        };
        assert_eq!(tokenize("日本法", &cfg).len(), 3);
        assert_eq!(tokenize("a b", &cfg), toks("a b"));
    }

    #[test]
    fn build_index_statistics() {
        let idx = small_index();
        assert_eq!(idx.len(), 3);
        assert_eq!(idx.avg_length(), 2.0);
        assert_eq!(idx.df("b"), 2);
        assert_eq!(idx.df("z"), 0);
    }

    #[test]
    fn build_index_rejects_duplicate_unit() {
        let err = InvertedIndex::build(vec![("d1", toks("a")), ("d1", toks("b"))]).unwrap_err();
        assert!(matches!(err, Error::DuplicateId(_)));
    }

    #[test]
    fn build_index_single_unit_avg() {
        let idx = InvertedIndex::build(vec![("only", toks("x y z"))]).unwrap();
        assert_eq!(idx.avg_length(), 3.0);
    }

    #[test]
    fn bm25_hand_computed() {
        let idx = small_index();
        let params = Bm25Params::<f64>::default();
        let score = bm25_score(&idx, &toks("c"), "d2", &params).unwrap();
        assert!((score - 1.6f64.ln()).abs() < 1e-9);
    }

    #[test]
    fn bm25_empty_query_and_missing_term() {
        let idx = small_index();
        let params = Bm25Params::<f64>::default();
        assert_eq!(bm25_score(&idx, &[], "d1", &params).unwrap(), 0.0);
        assert_eq!(bm25_score(&idx, &toks("zzz"), "d1", &params).unwrap(), 0.0);
    }

    #[test]
    fn bm25_unknown_unit_errors() {
        let idx = small_index();
        let params = Bm25Params::<f64>::default();
        assert!(matches!(
            bm25_score(&idx, &toks("a"), "nope", &params),
            Err(Error::UnknownId(_))
        ));
    }

    #[test]
    fn bm25_empty_index_errors() {
        let idx = InvertedIndex::build(Vec::<(String, Vec<String>)>::new()).unwrap();
        let params = Bm25Params::<f64>::default();
        assert!(matches!(
            bm25_score(&idx, &toks("a"), "d1", &params),
            Err(Error::EmptyIndex)
        ));
    }

    #[test]
    fn prune_returns_all_when_k_exceeds_n() {
        let idx = small_index();
        let params = Bm25Params::<f64>::default();
        let got = prune_candidates(&idx, &toks("c"), 10, &params).unwrap();
        assert_eq!(got.len(), 3);
        assert_eq!(got[0].0, "d2");
    }

    #[test]
    fn prune_tie_break_by_id() {
        let idx = InvertedIndex::build(vec![("b", toks("x")), ("a", toks("x"))]).unwrap();
        let params = Bm25Params::<f64>::default();
        let got = prune_candidates(&idx, &toks("x"), 2, &params).unwrap();
        assert_eq!(got[0].0, "a");
        assert_eq!(got[1].0, "b");
    }

    #[test]
    fn tfidf_cosine_bounds() {
        let idx = small_index();
        let a = toks("a b");
        assert!((tfidf_cosine::<f64>(&a, &a, &idx) - 1.0).abs() < 1e-9);
        assert_eq!(tfidf_cosine::<f64>(&a, &toks("c d"), &idx), 0.0);
        assert_eq!(tfidf_cosine::<f64>(&a, &[], &idx), 0.0);
    }

    #[test]
    fn tfidf_cosine_hand_computed() {
        let idx = small_index();
        let a = toks("x y");
        let b = toks("y z");
        // df(x)=df(y)=df(z)=0 over the 3-doc stats, so all idf = ln(3)+1.
        let w = 3.0f64.ln() + 1.0;
        let expected = (w * w) / ((w * w * 2.0).sqrt() * (w * w * 2.0).sqrt());
        let got: f64 = tfidf_cosine(&a, &b, &idx);
        assert!((got - expected).abs() < 1e-12);
        assert!((got - 0.5).abs() < 1e-12);
    }

    #[test]
    fn snapshot_round_trip() {
        let idx = small_index();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("index.json");
        idx.save(&path).unwrap();
        let loaded = InvertedIndex::load(&path).unwrap();
        let params = Bm25Params::<f64>::default();
        for id in ["d1", "d2", "d3"] {
            let a = bm25_score(&idx, &toks("a b c"), id, &params).unwrap();
            let b = bm25_score(&loaded, &toks("a b c"), id, &params).unwrap();
            assert_eq!(a, b);
        }
    }
}
