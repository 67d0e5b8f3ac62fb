//! Labeled training-pair generation: tf-idf-capped negatives, article
//! augmentation, silver supporting pairs, and the self-labeled refinement
//! loop.

use std::collections::BTreeSet;
use std::io::{BufRead, BufReader, Write};
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::corpus::DocumentStore;
use crate::error::{Error, Result};
use crate::lexical::{tfidf_cosine, tokenize, InvertedIndex, TokenizerConfig};
use crate::scorer::SemanticScorer;
use crate::Score;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum PairLabel {
    #[serde(rename = "pos")]
    Positive,
    #[serde(rename = "neg")]
    Negative,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PairOrigin {
    Gold,
    DerivedChunk,
    Silver,
    SelfFlipped,
}

/// Field order is the wire order of the pair-dataset JSONL format.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LabeledPair {
    pub query_id: String,
    pub passage_id: String,
    pub query: String,
    pub passage: String,
    pub label: PairLabel,
    pub origin: PairOrigin,
}

pub fn write_pairs(path: &Path, pairs: &[LabeledPair]) -> Result<()> {
    let file = std::fs::File::create(path)?;
    let mut w = std::io::BufWriter::new(file);
    for pair in pairs {
        serde_json::to_writer(&mut w, pair)?;
        w.write_all(b"\n")?;
    }
    Ok(())
}

pub fn read_pairs(path: &Path) -> Result<Vec<LabeledPair>> {
    let file = std::fs::File::open(path)?;
    let mut pairs = Vec::new();
    for (lineno, line) in BufReader::new(file).lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        pairs.push(
            serde_json::from_str(&line).map_err(|e| Error::MalformedRecord {
                line: lineno + 1,
                msg: e.to_string(),
            })?,
        );
    }
    Ok(pairs)
}

#[derive(Debug, Clone)]
pub struct Question {
    pub id: String,
    pub text: String,
    pub gold: Vec<String>,
}

/// Rank article ids by tf-idf cosine against the question, descending with
/// ascending-id tie-break, excluding `exclude`.
fn rank_articles(
    question_tokens: &[String],
    articles: &DocumentStore,
    stats: &InvertedIndex,
    tokenizer: &TokenizerConfig,
    exclude: &BTreeSet<&str>,
) -> Vec<(String, Score)> {
    let mut ranked: Vec<(String, Score)> = articles
        .iter()
        .filter(|a| !exclude.contains(a.id.as_str()))
        .map(|a| {
            let score = tfidf_cosine(question_tokens, &a.tokens(tokenizer), stats);
            (a.id.clone(), score)
        })
        .collect();
    ranked.sort_by(|a, b| b.1.partial_cmp(&a.1).unwrap().then_with(|| a.0.cmp(&b.0)));
    ranked
}

/// Positives = every (question, gold article); negatives = the top
/// `neg_cap` non-gold articles by tf-idf rank.
pub fn generate_retrieval_pairs(
    questions: &[Question],
    articles: &DocumentStore,
    neg_cap: usize,
    tokenizer: &TokenizerConfig,
) -> Result<Vec<LabeledPair>> {
    let stats = InvertedIndex::build(
        articles
            .iter()
            .map(|a| (a.id.clone(), a.tokens(tokenizer))),
    )?;
    let mut pairs = Vec::new();
    for question in questions {
        let gold: BTreeSet<&str> = question.gold.iter().map(String::as_str).collect();
        for gold_id in &question.gold {
            let article = articles
                .get(gold_id)
                .ok_or_else(|| Error::MissingGold(gold_id.clone()))?;
            pairs.push(LabeledPair {
                query_id: question.id.clone(),
                passage_id: gold_id.clone(),
                query: question.text.clone(),
                passage: article.kept_text(),
                label: PairLabel::Positive,
                origin: PairOrigin::Gold,
            });
        }
        let question_tokens = tokenize(&question.text, tokenizer);
        for (id, _) in rank_articles(&question_tokens, articles, &stats, tokenizer, &gold)
            .into_iter()
            .take(neg_cap)
        {
            let article = articles.get(&id).expect("ranked id exists");
            pairs.push(LabeledPair {
                query_id: question.id.clone(),
                passage_id: id,
                query: question.text.clone(),
                passage: article.kept_text(),
                label: PairLabel::Negative,
                origin: PairOrigin::Gold,
            });
        }
    }
    Ok(pairs)
}

/// The given articles followed by the top `n_augment` tf-idf-ranked
/// articles not already given.
pub fn augment_articles(
    question_text: &str,
    given_article_ids: &[String],
    articles: &DocumentStore,
    n_augment: usize,
    tokenizer: &TokenizerConfig,
) -> Result<Vec<String>> {
    for id in given_article_ids {
        if !articles.contains(id) {
            return Err(Error::UnknownId(id.clone()));
        }
    }
    if n_augment == 0 {
        return Ok(given_article_ids.to_vec());
    }
    let stats = InvertedIndex::build(
        articles
            .iter()
            .map(|a| (a.id.clone(), a.tokens(tokenizer))),
    )?;
    let given: BTreeSet<&str> = given_article_ids.iter().map(String::as_str).collect();
    let question_tokens = tokenize(question_text, tokenizer);
    let mut out = given_article_ids.to_vec();
    out.extend(
        rank_articles(&question_tokens, articles, &stats, tokenizer, &given)
            .into_iter()
            .take(n_augment)
            .map(|(id, _)| id),
    );
    Ok(out)
}

/// Silver supporting pairs: positives are consecutive sentences within one
/// kept paragraph; negatives pair the same first sentence with a random
/// sentence from a different case.
pub fn generate_silver_supporting(
    corpus: &DocumentStore,
    ratio_neg: usize,
    seed: u64,
) -> Vec<LabeledPair> {
    // (case ordinal, sentence id, text) pool for negative sampling.
    let mut pool: Vec<(usize, String, String)> = Vec::new();
    for (case_ord, doc) in corpus.iter().enumerate() {
        for p in doc.kept_paragraphs() {
            for (si, sentence) in p.sentences.iter().enumerate() {
                pool.push((
                    case_ord,
                    format!("{}:p{}:s{}", doc.id, p.index, si),
                    sentence.clone(),
                ));
            }
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut pairs = Vec::new();
    let mut seen: BTreeSet<(String, String)> = BTreeSet::new();
    for (case_ord, doc) in corpus.iter().enumerate() {
        for p in doc.kept_paragraphs() {
            for si in 0..p.sentences.len().saturating_sub(1) {
                let first_id = format!("{}:p{}:s{}", doc.id, p.index, si);
                let second_id = format!("{}:p{}:s{}", doc.id, p.index, si + 1);
                seen.insert((first_id.clone(), second_id.clone()));
                pairs.push(LabeledPair {
                    query_id: first_id.clone(),
                    passage_id: second_id,
                    query: p.sentences[si].clone(),
                    passage: p.sentences[si + 1].clone(),
                    label: PairLabel::Positive,
                    origin: PairOrigin::Silver,
                });
                for _ in 0..ratio_neg {
                    // Reject same-case draws and duplicate pairs.
                    for _attempt in 0..100 {
                        let (other_ord, other_id, other_text) =
                            &pool[rng.gen_range(0..pool.len())];
                        if *other_ord == case_ord {
                            continue;
                        }
                        let key = (first_id.clone(), other_id.clone());
                        if seen.contains(&key) {
                            continue;
                        }
                        seen.insert(key);
                        pairs.push(LabeledPair {
                            query_id: first_id.clone(),
                            passage_id: other_id.clone(),
                            query: p.sentences[si].clone(),
                            passage: other_text.clone(),
                            label: PairLabel::Negative,
                            origin: PairOrigin::Silver,
                        });
                        break;
                    }
                }
            }
        }
    }
    pairs
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct SelfLabelConfig {
    /// Pre-refinement training epochs; metadata for external trainers.
    pub e1: u32,
    /// Post-refinement training epochs; metadata for external trainers.
    pub e2: u32,
    pub threshold: Score,
    pub iterations: u32,
}

impl Default for SelfLabelConfig {
    fn default() -> Self {
        SelfLabelConfig {
            e1: 2,
            e2: 3,
            threshold: 0.5,
            iterations: 1,
        }
    }
}

impl SelfLabelConfig {
    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.threshold) {
            return Err(Error::InvalidConfig("threshold must be in [0,1]".into()));
        }
        if self.iterations == 0 {
            return Err(Error::InvalidConfig("iterations must be >= 1".into()));
        }
        Ok(())
    }
}

/// Per iteration, every positive pair the predictor scores below the
/// threshold flips to negative; negatives never flip back.
pub fn self_label_refine(
    mut dataset: Vec<LabeledPair>,
    predictor: &dyn SemanticScorer,
    config: &SelfLabelConfig,
) -> Result<Vec<LabeledPair>> {
    config.validate()?;
    for _ in 0..config.iterations {
        let positives: Vec<usize> = dataset
            .iter()
            .enumerate()
            .filter(|(_, p)| p.label == PairLabel::Positive)
            .map(|(i, _)| i)
            .collect();
        let texts: Vec<(&str, &str)> = positives
            .iter()
            .map(|&i| (dataset[i].query.as_str(), dataset[i].passage.as_str()))
            .collect();
        let scores = predictor.score_batch(&texts).map_err(|e| match e {
            Error::ScorerFailure { .. } | Error::ScoreOutOfRange { .. } => e,
            other => Error::ScorerFailure {
                query: texts.first().map(|t| t.0.to_string()).unwrap_or_default(),
                candidate: texts.first().map(|t| t.1.to_string()).unwrap_or_default(),
                msg: other.to_string(),
            },
        })?;
        for (&i, score) in positives.iter().zip(scores) {
            if score < config.threshold {
                dataset[i].label = PairLabel::Negative;
                dataset[i].origin = PairOrigin::SelfFlipped;
            }
        }
    }
    Ok(dataset)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{ingest_reader, LangFilterConfig, SourceKind};
    use std::collections::HashMap;
    use std::io::Cursor;

    fn articles(n: usize) -> DocumentStore {
        let input: String = (0..n)
            .map(|i| {
                format!(
                    "{}\n",
                    serde_json::json!({
                        "id": format!("a{i:03}"),
                        "kind": "statute_article",
                        "text": format!("article number {i} about topic{} and clauses", i % 7)
                    })
                )
            })
            .collect();
        ingest_reader(Cursor::new(input), SourceKind::StatuteArticle, &LangFilterConfig::default())
            .unwrap()
    }

    #[test]
    fn retrieval_pairs_cap_and_counts() {
        let store = articles(400);
        let q = Question {
            id: "q1".into(),
            text: "about topic3 and clauses".into(),
            gold: vec!["a003".into(), "a010".into()],
        };
        let pairs =
            generate_retrieval_pairs(&[q], &store, 150, &TokenizerConfig::default()).unwrap();
        let pos = pairs.iter().filter(|p| p.label == PairLabel::Positive).count();
        let neg = pairs.iter().filter(|p| p.label == PairLabel::Negative).count();
        assert_eq!(pos, 2);
        assert_eq!(neg, 150);
        assert!(pairs
            .iter()
            .filter(|p| p.label == PairLabel::Negative)
            .all(|p| p.passage_id != "a003" && p.passage_id != "a010"));
    }

    #[test]
    fn retrieval_pairs_small_corpus_and_zero_cap() {
        let store = articles(10);
        let q = Question {
            id: "q1".into(),
            text: "topic1".into(),
            gold: vec!["a001".into()],
        };
        let pairs =
            generate_retrieval_pairs(std::slice::from_ref(&q), &store, 150, &TokenizerConfig::default())
                .unwrap();
        assert_eq!(pairs.iter().filter(|p| p.label == PairLabel::Negative).count(), 9);
        let pairs =
            generate_retrieval_pairs(&[q], &store, 0, &TokenizerConfig::default()).unwrap();
        assert!(pairs.iter().all(|p| p.label == PairLabel::Positive));
    }

    #[test]
    fn retrieval_pairs_missing_gold_errors() {
        let store = articles(5);
        let q = Question {
            id: "q1".into(),
            text: "x".into(),
            gold: vec!["missing".into()],
        };
        assert!(matches!(
            generate_retrieval_pairs(&[q], &store, 10, &TokenizerConfig::default()),
            Err(Error::MissingGold(_))
        ));
    }

    #[test]
    fn augment_appends_without_duplicates() {
        let store = articles(20);
        let given = vec!["a001".into()];
        let out = augment_articles("about topic2", &given, &store, 2, &TokenizerConfig::default())
            .unwrap();
        assert_eq!(out.len(), 3);
        assert_eq!(out[0], "a001");
        let unique: BTreeSet<&String> = out.iter().collect();
        assert_eq!(unique.len(), out.len());
    }

    #[test]
    fn augment_zero_is_identity() {
        let store = articles(5);
        let given: Vec<String> = vec!["a002".into(), "a004".into()];
        let out =
            augment_articles("anything", &given, &store, 0, &TokenizerConfig::default()).unwrap();
        assert_eq!(out, given);
    }

    #[test]
    fn augment_exceeding_corpus_appends_all() {
        let store = articles(4);
        let given: Vec<String> = vec!["a000".into()];
        let out =
            augment_articles("anything", &given, &store, 100, &TokenizerConfig::default()).unwrap();
        assert_eq!(out.len(), 4);
    }

    fn silver_corpus() -> DocumentStore {
        let input = concat!(
            "{\"id\":\"c1\",\"text\":\"First point made. Second point follows. Third point ends.\"}\n",
            "{\"id\":\"c2\",\"text\":\"Another case entirely. With its own sentences.\"}\n",
        );
        ingest_reader(Cursor::new(input), SourceKind::CaseLaw, &LangFilterConfig::default()).unwrap()
    }

    #[test]
    fn silver_positive_counts() {
        let pairs = generate_silver_supporting(&silver_corpus(), 0, 7);
        // c1: 3 sentences -> 2 positives; c2: 2 sentences -> 1 positive.
        assert_eq!(pairs.len(), 3);
        assert!(pairs.iter().all(|p| p.label == PairLabel::Positive));
        assert!(pairs.iter().all(|p| p.origin == PairOrigin::Silver));
    }

    #[test]
    fn silver_negatives_cross_case_and_deterministic() {
        let corpus = silver_corpus();
        let a = generate_silver_supporting(&corpus, 1, 42);
        let b = generate_silver_supporting(&corpus, 1, 42);
        assert_eq!(serde_json::to_string(&a).unwrap(), serde_json::to_string(&b).unwrap());
        for p in a.iter().filter(|p| p.label == PairLabel::Negative) {
            let qcase = p.query_id.split(':').next().unwrap();
            let pcase = p.passage_id.split(':').next().unwrap();
            assert_ne!(qcase, pcase);
        }
    }

    struct MapScorer(HashMap<(String, String), Score>);
    impl SemanticScorer for MapScorer {
        fn score(&self, a: &str, b: &str) -> Result<Score> {
            Ok(*self.0.get(&(a.to_string(), b.to_string())).unwrap_or(&1.0))
        }
    }

    fn pair(q: &str, p: &str, label: PairLabel) -> LabeledPair {
        LabeledPair {
            query_id: q.to_string(),
            passage_id: p.to_string(),
            query: q.to_string(),
            passage: p.to_string(),
            label,
            origin: PairOrigin::Gold,
        }
    }

    #[test]
    fn self_label_flips_low_scoring_positives_only() {
        let dataset = vec![
            pair("q", "p1", PairLabel::Positive),
            pair("q", "p2", PairLabel::Positive),
            pair("q", "p3", PairLabel::Negative),
        ];
        let mut scores = HashMap::new();
        scores.insert(("q".to_string(), "p1".to_string()), 0.2);
        scores.insert(("q".to_string(), "p2".to_string()), 0.9);
        scores.insert(("q".to_string(), "p3".to_string()), 0.9);
        let out = self_label_refine(dataset, &MapScorer(scores), &SelfLabelConfig::default())
            .unwrap();
        assert_eq!(out[0].label, PairLabel::Negative);
        assert_eq!(out[0].origin, PairOrigin::SelfFlipped);
        assert_eq!(out[1].label, PairLabel::Positive);
        assert_eq!(out[2].label, PairLabel::Negative);
        assert_eq!(out[2].origin, PairOrigin::Gold);
    }

    #[test]
    fn self_label_fixed_point_and_zero_threshold() {
        let dataset = vec![pair("q", "p1", PairLabel::Positive)];
        let scores = HashMap::new(); // MapScorer defaults to 1.0
        let out = self_label_refine(
            dataset.clone(),
            &MapScorer(scores.clone()),
            &SelfLabelConfig { iterations: 3, ..Default::default() },
        )
        .unwrap();
        assert_eq!(out[0].label, PairLabel::Positive);

        let mut low = HashMap::new();
        low.insert(("q".to_string(), "p1".to_string()), 0.0);
        let out = self_label_refine(
            dataset,
            &MapScorer(low),
            &SelfLabelConfig { threshold: 0.0, ..Default::default() },
        )
        .unwrap();
        // No score is < 0, so nothing flips at threshold 0.
        assert_eq!(out[0].label, PairLabel::Positive);
    }

    #[test]
    fn pair_jsonl_round_trip_and_field_order() {
        let pairs = vec![pair("q1", "a1", PairLabel::Positive)];
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("pairs.jsonl");
        write_pairs(&path, &pairs).unwrap();
        let raw = std::fs::read_to_string(&path).unwrap();
        assert!(raw.starts_with("{\"query_id\":"));
        let loaded = read_pairs(&path).unwrap();
        assert_eq!(loaded.len(), 1);
        assert_eq!(loaded[0].query_id, "q1");
    }
}
