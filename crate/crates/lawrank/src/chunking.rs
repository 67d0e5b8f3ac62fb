//! Sliding-window chunking of long articles and chunk-level label
//! derivation.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::trainpairs::{LabeledPair, PairLabel, PairOrigin};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ChunkConfig {
    pub window: usize,
    pub stride: usize,
}

impl ChunkConfig {
    pub fn new(window: usize, stride: usize) -> Result<ChunkConfig> {
        let cfg = ChunkConfig { window, stride };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if self.stride == 0 || self.stride > self.window {
            return Err(Error::InvalidConfig(format!(
                "chunk stride must satisfy 1 <= stride <= window (got {}/{})",
                self.window, self.stride
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Chunk {
    pub article_id: String,
    pub start: usize,
    pub tokens: Vec<String>,
    pub config: ChunkConfig,
}

impl Chunk {
    pub fn id(&self) -> String {
        format!("{}#{}", self.article_id, self.start)
    }
}

/// Windows start at 0, stride, 2*stride, ...; a window that would overrun
/// is replaced by one final chunk ending exactly at the last token. An
/// article no longer than the window yields a single chunk.
pub fn chunk_article(article_id: &str, tokens: &[String], config: &ChunkConfig) -> Result<Vec<Chunk>> {
    config.validate()?;
    if tokens.is_empty() {
        return Ok(Vec::new());
    }
    let make = |start: usize, end: usize| Chunk {
        article_id: article_id.to_string(),
        start,
        tokens: tokens[start..end].to_vec(),
        config: *config,
    };
    if tokens.len() <= config.window {
        return Ok(vec![make(0, tokens.len())]);
    }
    let mut chunks = Vec::new();
    let mut start = 0;
    loop {
        if start + config.window >= tokens.len() {
            let adjusted = tokens.len() - config.window;
            // Skip the duplicate when the grid already landed on the end.
            if chunks.last().map_or(true, |c: &Chunk| c.start != adjusted) {
                chunks.push(make(adjusted, tokens.len()));
            }
            break;
        }
        chunks.push(make(start, start + config.window));
        start += config.stride;
    }
    Ok(chunks)
}

/// Every (question, chunk) pair inherits the article-level label.
pub fn derive_chunk_labels(
    question_id: &str,
    question_text: &str,
    pair_label: PairLabel,
    chunks: &[Chunk],
    render: impl Fn(&Chunk) -> String,
) -> Vec<LabeledPair> {
    chunks
        .iter()
        .map(|chunk| LabeledPair {
            query_id: question_id.to_string(),
            passage_id: chunk.id(),
            query: question_text.to_string(),
            passage: render(chunk),
            label: pair_label,
            origin: PairOrigin::DerivedChunk,
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lexical::{render_tokens, TokenizerMode};

    fn toks(n: usize) -> Vec<String> {
        (0..n).map(|i| format!("t{i}")).collect()
    }

    fn starts(chunks: &[Chunk]) -> Vec<usize> {
        chunks.iter().map(|c| c.start).collect()
    }

    #[test]
    fn window_three_stride_two() {
        let cfg = ChunkConfig::new(3, 2).unwrap();
        let chunks = chunk_article("a", &toks(7), &cfg).unwrap();
        assert_eq!(starts(&chunks), vec![0, 2, 4]);
    }

    #[test]
    fn final_chunk_snaps_to_end() {
        let cfg = ChunkConfig::new(4, 4).unwrap();
        let chunks = chunk_article("a", &toks(10), &cfg).unwrap();
        assert_eq!(starts(&chunks), vec![0, 4, 6]);
        assert_eq!(chunks.last().unwrap().tokens.len(), 4);
    }

    #[test]
    fn short_article_single_chunk() {
        let cfg = ChunkConfig::new(10, 3).unwrap();
        let chunks = chunk_article("a", &toks(5), &cfg).unwrap();
        assert_eq!(starts(&chunks), vec![0]);
        assert_eq!(chunks[0].tokens.len(), 5);
    }

    #[test]
    fn empty_tokens_yield_no_chunks() {
        let cfg = ChunkConfig::new(3, 1).unwrap();
        assert!(chunk_article("a", &[], &cfg).unwrap().is_empty());
    }

    #[test]
    fn grid_landing_on_end_not_duplicated() {
        // 9 tokens, window 3, stride 3: exact cover at 0, 3, 6.
        let cfg = ChunkConfig::new(3, 3).unwrap();
        let chunks = chunk_article("a", &toks(9), &cfg).unwrap();
        assert_eq!(starts(&chunks), vec![0, 3, 6]);
    }

    #[test]
    fn invalid_stride_rejected() {
        assert!(ChunkConfig::new(3, 0).is_err());
        assert!(ChunkConfig::new(3, 4).is_err());
    }

    #[test]
    fn coverage_and_overlap() {
        let cfg = ChunkConfig::new(5, 2).unwrap();
        let n = 23;
        let chunks = chunk_article("a", &toks(n), &cfg).unwrap();
        let mut covered = vec![false; n];
        for c in &chunks {
            for i in c.start..c.start + c.tokens.len() {
                covered[i] = true;
            }
        }
        assert!(covered.iter().all(|&c| c));
        for pair in chunks.windows(2) {
            let (a, b) = (&pair[0], &pair[1]);
            if b.start + cfg.window < n {
                assert_eq!(a.start + cfg.window - b.start, cfg.window - cfg.stride);
            }
        }
    }

    #[test]
    fn labels_inherit_from_article() {
        let cfg = ChunkConfig::new(2, 1).unwrap();
        let chunks = chunk_article("art1", &toks(5), &cfg).unwrap();
        let pairs = derive_chunk_labels("q1", "the question", PairLabel::Positive, &chunks, |c| {
            render_tokens(&c.tokens, TokenizerMode::UnicodeWord)
        });
        assert_eq!(pairs.len(), chunks.len());
        assert!(pairs.iter().all(|p| p.label == PairLabel::Positive));
        assert!(pairs.iter().all(|p| p.origin == PairOrigin::DerivedChunk));
        assert_eq!(pairs[0].passage_id, "art1#0");
    }
}
