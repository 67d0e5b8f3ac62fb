//! Paragraph-level score matrices, convex lexical/semantic fusion, and the
//! pruned case-retrieval pipeline.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::corpus::{CaseDocument, DocumentStore};
use crate::error::{Error, Result};
use crate::lexical::{bm25_score, prune_candidates, tokenize, Bm25Params, InvertedIndex, TokenizerConfig};
use crate::num::Real;
use crate::scorer::SemanticScorer;
use crate::Score;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Channel {
    Lexical,
    Semantic,
    Fused,
}

/// N×M paragraph-pair scores for one (query case, candidate case) pair.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ScoreMatrix<T: Real = Score> {
    pub query_case_id: String,
    pub candidate_case_id: String,
    pub channel: Channel,
    pub rows: usize,
    pub cols: usize,
    values: Vec<T>,
}

impl<T: Real> ScoreMatrix<T> {
    pub fn new(
        query_case_id: impl Into<String>,
        candidate_case_id: impl Into<String>,
        channel: Channel,
        rows: usize,
        cols: usize,
        values: Vec<T>,
    ) -> Result<ScoreMatrix<T>> {
        if rows == 0 || cols == 0 || values.len() != rows * cols {
            return Err(Error::DimensionMismatch(format!(
                "{rows}x{cols} matrix with {} values",
                values.len()
            )));
        }
        Ok(ScoreMatrix {
            query_case_id: query_case_id.into(),
            candidate_case_id: candidate_case_id.into(),
            channel,
            rows,
            cols,
            values,
        })
    }

    pub fn get(&self, row: usize, col: usize) -> T {
        self.values[row * self.cols + col]
    }

    pub fn values(&self) -> &[T] {
        &self.values
    }

    fn same_shape(&self, other: &ScoreMatrix<T>) -> bool {
        self.rows == other.rows
            && self.cols == other.cols
            && self.query_case_id == other.query_case_id
            && self.candidate_case_id == other.candidate_case_id
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LexicalNormalization {
    PerMatrixMinMax,
    None,
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct FusionConfig<T: Real = Score> {
    pub alpha: T,
    pub lexical_normalization: LexicalNormalization,
}

impl<T: Real> FusionConfig<T> {
    pub fn new(alpha: T) -> Result<FusionConfig<T>> {
        if alpha < T::zero() || alpha > T::one() {
            return Err(Error::InvalidConfig("alpha must be in [0,1]".into()));
        }
        Ok(FusionConfig {
            alpha,
            lexical_normalization: LexicalNormalization::PerMatrixMinMax,
        })
    }
}

fn kept_paragraph_tokens(case: &CaseDocument, tokenizer: &TokenizerConfig) -> Result<Vec<Vec<String>>> {
    let tokens: Vec<Vec<String>> = case
        .kept_paragraphs()
        .map(|p| tokenize(&p.text, tokenizer))
        .collect();
    if tokens.is_empty() {
        return Err(Error::NoKeptParagraphs(case.id.clone()));
    }
    Ok(tokens)
}

/// BM25 of each query paragraph against each candidate paragraph, the index
/// built over the candidate case's own paragraphs.
pub fn lexical_matrix<T: Real>(
    query_case: &CaseDocument,
    candidate_case: &CaseDocument,
    params: &Bm25Params<T>,
    tokenizer: &TokenizerConfig,
) -> Result<ScoreMatrix<T>> {
    let query_paragraphs = kept_paragraph_tokens(query_case, tokenizer)?;
    let candidate_paragraphs = kept_paragraph_tokens(candidate_case, tokenizer)?;
    let unit_ids: Vec<String> = (0..candidate_paragraphs.len())
        .map(|j| format!("{j:08}"))
        .collect();
    let index = InvertedIndex::build(
        unit_ids
            .iter()
            .cloned()
            .zip(candidate_paragraphs.iter().cloned()),
    )?;
    let mut values = Vec::with_capacity(query_paragraphs.len() * unit_ids.len());
    for query in &query_paragraphs {
        for unit in &unit_ids {
            values.push(bm25_score(&index, query, unit, params)?);
        }
    }
    ScoreMatrix::new(
        &query_case.id,
        &candidate_case.id,
        Channel::Lexical,
        query_paragraphs.len(),
        unit_ids.len(),
        values,
    )
}

/// Pair scorer applied to each (query paragraph, candidate paragraph) text
/// pair; dimensions match [`lexical_matrix`].
pub fn semantic_matrix(
    query_case: &CaseDocument,
    candidate_case: &CaseDocument,
    scorer: &dyn SemanticScorer,
) -> Result<ScoreMatrix<Score>> {
    let query_paragraphs: Vec<&str> =
        query_case.kept_paragraphs().map(|p| p.text.as_str()).collect();
    let candidate_paragraphs: Vec<&str> = candidate_case
        .kept_paragraphs()
        .map(|p| p.text.as_str())
        .collect();
    if query_paragraphs.is_empty() {
        return Err(Error::NoKeptParagraphs(query_case.id.clone()));
    }
    if candidate_paragraphs.is_empty() {
        return Err(Error::NoKeptParagraphs(candidate_case.id.clone()));
    }
    let pairs: Vec<(&str, &str)> = query_paragraphs
        .iter()
        .flat_map(|q| candidate_paragraphs.iter().map(move |c| (*q, *c)))
        .collect();
    let values = scorer.score_batch(&pairs)?;
    for (k, v) in values.iter().enumerate() {
        if !(0.0..=1.0).contains(v) {
            return Err(Error::ScoreOutOfRange {
                query: format!("{}#{}", query_case.id, k / candidate_paragraphs.len()),
                candidate: format!("{}#{}", candidate_case.id, k % candidate_paragraphs.len()),
                score: *v,
            });
        }
    }
    ScoreMatrix::new(
        &query_case.id,
        &candidate_case.id,
        Channel::Semantic,
        query_paragraphs.len(),
        candidate_paragraphs.len(),
        values,
    )
}

fn minmax_matrix<T: Real>(values: &[T]) -> Vec<T> {
    let min = values.iter().cloned().fold(T::infinity(), T::min);
    let max = values.iter().cloned().fold(T::neg_infinity(), T::max);
    if max == min {
        return vec![T::zero(); values.len()];
    }
    values.iter().map(|&v| (v - min) / (max - min)).collect()
}

/// Union score: `alpha * semantic + (1 - alpha) * normalized_lexical`.
pub fn fuse<T: Real>(
    lex: &ScoreMatrix<T>,
    sem: &ScoreMatrix<T>,
    config: &FusionConfig<T>,
) -> Result<ScoreMatrix<T>> {
    if lex.channel != Channel::Lexical || sem.channel != Channel::Semantic {
        return Err(Error::DimensionMismatch(
            "fuse expects a lexical and a semantic matrix".into(),
        ));
    }
    if !lex.same_shape(sem) {
        return Err(Error::DimensionMismatch(format!(
            "lexical {}x{} vs semantic {}x{} for ({}, {})",
            lex.rows, lex.cols, sem.rows, sem.cols, lex.query_case_id, lex.candidate_case_id
        )));
    }
    let lex_values = match config.lexical_normalization {
        LexicalNormalization::PerMatrixMinMax => minmax_matrix(lex.values()),
        LexicalNormalization::None => lex.values().to_vec(),
    };
    let values = lex_values
        .iter()
        .zip(sem.values())
        .map(|(&l, &s)| config.alpha * s + (T::one() - config.alpha) * l)
        .collect();
    ScoreMatrix::new(
        &lex.query_case_id,
        &lex.candidate_case_id,
        Channel::Fused,
        lex.rows,
        lex.cols,
        values,
    )
}

/// Mean over query paragraphs of each row's best candidate-paragraph score.
pub fn aggregate_case_score<T: Real>(fused: &ScoreMatrix<T>) -> T {
    let row_max_sum: T = (0..fused.rows)
        .map(|i| {
            (0..fused.cols)
                .map(|j| fused.get(i, j))
                .fold(T::neg_infinity(), T::max)
        })
        .sum();
    row_max_sum / T::from_usize_(fused.rows)
}

#[derive(Debug, Clone)]
pub struct RetrieveConfig {
    pub prune_k: usize,
    pub alpha: Score,
    pub top_n: usize,
    pub lexical_normalization: LexicalNormalization,
    pub bm25: Bm25Params<Score>,
    pub tokenizer: TokenizerConfig,
}

impl Default for RetrieveConfig {
    fn default() -> Self {
        RetrieveConfig {
            prune_k: 100,
            alpha: 0.7,
            top_n: 5,
            lexical_normalization: LexicalNormalization::PerMatrixMinMax,
            bm25: Bm25Params::default(),
            tokenizer: TokenizerConfig::default(),
        }
    }
}

/// Index over whole-case concatenated text (kept paragraphs only), used for
/// candidate pruning.
pub fn build_case_index(corpus: &DocumentStore, tokenizer: &TokenizerConfig) -> Result<InvertedIndex> {
    InvertedIndex::build(
        corpus
            .iter()
            .map(|doc| (doc.id.clone(), doc.tokens(tokenizer))),
    )
}

/// Full pipeline: prune to top-K cases by whole-case BM25, score paragraph
/// matrices per surviving candidate, fuse, aggregate, rank.
pub fn retrieve(
    query_case: &CaseDocument,
    corpus: &DocumentStore,
    case_index: &InvertedIndex,
    scorer: &dyn SemanticScorer,
    config: &RetrieveConfig,
) -> Result<Vec<(String, Score)>> {
    let fusion = FusionConfig {
        alpha: config.alpha,
        lexical_normalization: config.lexical_normalization,
    };
    let query_tokens = query_case.tokens(&config.tokenizer);
    let pruned = prune_candidates(case_index, &query_tokens, config.prune_k, &config.bm25)?;
    let candidates: Vec<&CaseDocument> = pruned
        .iter()
        .filter(|(id, _)| id != &query_case.id)
        .map(|(id, _)| corpus.get(id).ok_or_else(|| Error::UnknownId(id.clone())))
        .collect::<Result<_>>()?;
    let mut ranked: Vec<(String, Score)> = candidates
        .par_iter()
        .map(|candidate| -> Result<(String, Score)> {
            let lex = lexical_matrix(query_case, candidate, &config.bm25, &config.tokenizer)?;
            let sem = semantic_matrix(query_case, candidate, scorer)?;
            let fused = fuse(&lex, &sem, &fusion)?;
            Ok((candidate.id.clone(), aggregate_case_score(&fused)))
        })
        .collect::<Result<_>>()?;
    ranked.sort_by(|a, b| b.1.partial_cmp(&a.1).unwrap().then_with(|| a.0.cmp(&b.0)));
    ranked.truncate(config.top_n);
    Ok(ranked)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{ingest_reader, LangFilterConfig, SourceKind};
    use crate::scorer::TfidfScorer;
    use std::io::Cursor;

    fn store(records: &[(&str, &str)]) -> DocumentStore {
        let input: String = records
            .iter()
            .map(|(id, text)| {
                format!(
                    "{}\n",
                    serde_json::json!({"id": id, "kind": "case_law", "text": text})
                )
            })
            .collect();
        ingest_reader(Cursor::new(input), SourceKind::CaseLaw, &LangFilterConfig::default()).unwrap()
    }

    fn matrix(channel: Channel, rows: usize, cols: usize, values: Vec<f64>) -> ScoreMatrix {
        ScoreMatrix::new("q", "c", channel, rows, cols, values).unwrap()
    }

    #[test]
    fn lexical_matrix_dimensions_and_zero_row() {
        let s = store(&[
            ("q", "alpha beta\n\nunrelatedterm"),
            ("c", "alpha beta gamma\n\ndelta epsilon\n\nbeta beta"),
        ]);
        let m = lexical_matrix(
            s.get("q").unwrap(),
            s.get("c").unwrap(),
            &Bm25Params::<f64>::default(),
            &TokenizerConfig::default(),
        )
        .unwrap();
        assert_eq!((m.rows, m.cols), (2, 3));
        // Second query paragraph shares no terms with any candidate paragraph.
        assert!((0..3).all(|j| m.get(1, j) == 0.0));
    }

    #[test]
    fn semantic_matrix_self_similarity() {
        let s = store(&[("q", "alpha beta"), ("c", "alpha beta")]);
        let scorer = TfidfScorer::from_store(&s, TokenizerConfig::default()).unwrap();
        let m = semantic_matrix(s.get("q").unwrap(), s.get("c").unwrap(), &scorer).unwrap();
        assert!((m.get(0, 0) - 1.0).abs() < 1e-9);
    }

    struct BadScorer;
    impl SemanticScorer for BadScorer {
        fn score(&self, _: &str, _: &str) -> Result<Score> {
            Ok(1.2)
        }
    }

    #[test]
    fn semantic_matrix_rejects_out_of_range() {
        let s = store(&[("q", "alpha"), ("c", "beta")]);
        let err = semantic_matrix(s.get("q").unwrap(), s.get("c").unwrap(), &BadScorer).unwrap_err();
        assert!(matches!(err, Error::ScoreOutOfRange { .. }));
    }

    #[test]
    fn fuse_hand_computed_cell() {
        let lex = matrix(Channel::Lexical, 1, 2, vec![0.0, 3.0]);
        let sem = matrix(Channel::Semantic, 1, 2, vec![0.2, 0.5]);
        let cfg = FusionConfig::new(0.7).unwrap();
        let fused = fuse(&lex, &sem, &cfg).unwrap();
        // normalized lex = [0, 1]; cell(0,1) = 0.7*0.5 + 0.3*1.0
        assert!((fused.get(0, 1) - 0.65).abs() < 1e-12);
    }

    #[test]
    fn fuse_alpha_boundaries() {
        let lex = matrix(Channel::Lexical, 1, 3, vec![1.0, 2.0, 3.0]);
        let sem = matrix(Channel::Semantic, 1, 3, vec![0.1, 0.9, 0.4]);
        let zero = fuse(&lex, &sem, &FusionConfig::new(0.0).unwrap()).unwrap();
        assert_eq!(zero.values(), &[0.0, 0.5, 1.0]);
        let one = fuse(&lex, &sem, &FusionConfig::new(1.0).unwrap()).unwrap();
        assert_eq!(one.values(), sem.values());
    }

    #[test]
    fn fuse_constant_lexical_normalizes_to_zero() {
        let lex = matrix(Channel::Lexical, 1, 2, vec![5.0, 5.0]);
        let sem = matrix(Channel::Semantic, 1, 2, vec![0.4, 0.6]);
        let fused = fuse(&lex, &sem, &FusionConfig::new(0.5).unwrap()).unwrap();
        assert_eq!(fused.values(), &[0.2, 0.3]);
    }

    #[test]
    fn fuse_dimension_mismatch_errors() {
        let lex = matrix(Channel::Lexical, 1, 2, vec![0.0, 1.0]);
        let sem = matrix(Channel::Semantic, 2, 1, vec![0.0, 1.0]);
        assert!(matches!(
            fuse(&lex, &sem, &FusionConfig::new(0.5).unwrap()),
            Err(Error::DimensionMismatch(_))
        ));
    }

    #[test]
    fn aggregate_row_max_mean() {
        let m = matrix(Channel::Fused, 2, 2, vec![0.9, 0.1, 0.2, 0.8]);
        assert!((aggregate_case_score(&m) - 0.85).abs() < 1e-12);
        let one = matrix(Channel::Fused, 1, 1, vec![0.42]);
        assert_eq!(aggregate_case_score(&one), 0.42);
        let zero = matrix(Channel::Fused, 2, 2, vec![0.0; 4]);
        assert_eq!(aggregate_case_score(&zero), 0.0);
    }

    #[test]
    fn aggregate_invariant_under_column_permutation() {
        let m = matrix(Channel::Fused, 2, 3, vec![0.1, 0.7, 0.3, 0.9, 0.2, 0.4]);
        let permuted = matrix(Channel::Fused, 2, 3, vec![0.3, 0.1, 0.7, 0.4, 0.9, 0.2]);
        assert_eq!(aggregate_case_score(&m), aggregate_case_score(&permuted));
    }

    #[test]
    fn retrieve_ranks_planted_duplicate_first() {
        let s = store(&[
            ("query", "officer reviewed evidence\n\nappeal dismissed with costs"),
            ("dup", "officer reviewed evidence\n\nappeal dismissed with costs"),
            ("other1", "unrelated fishing regulations\n\nmaritime boundaries dispute"),
            ("other2", "tax assessment fiscal year\n\ncorporate filings late"),
        ]);
        let scorer = TfidfScorer::from_store(&s, TokenizerConfig::default()).unwrap();
        let cfg = RetrieveConfig::default();
        let index = build_case_index(&s, &cfg.tokenizer).unwrap();
        for alpha in [0.0, 0.3, 0.7, 1.0] {
            let cfg = RetrieveConfig { alpha, ..RetrieveConfig::default() };
            let ranked = retrieve(s.get("query").unwrap(), &s, &index, &scorer, &cfg).unwrap();
            assert_eq!(ranked[0].0, "dup", "alpha={alpha}");
        }
    }

    #[test]
    fn retrieve_top_n_one() {
        let s = store(&[
            ("query", "alpha beta"),
            ("c1", "alpha beta"),
            ("c2", "gamma delta"),
        ]);
        let scorer = TfidfScorer::from_store(&s, TokenizerConfig::default()).unwrap();
        let cfg = RetrieveConfig { top_n: 1, ..RetrieveConfig::default() };
        let index = build_case_index(&s, &cfg.tokenizer).unwrap();
        let ranked = retrieve(s.get("query").unwrap(), &s, &index, &scorer, &cfg).unwrap();
        assert_eq!(ranked.len(), 1);
    }
}
