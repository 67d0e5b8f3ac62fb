//! Pluggable paragraph-pair scorers: the deterministic tf-idf cosine
//! baseline and a line-delimited JSON subprocess plugin.
//!
//! Plugin protocol: the engine writes one request per line,
//! `{"id": <int>, "a": <text>, "b": <text>}`, to the plugin's stdin; the
//! plugin replies `{"id": <int>, "score": <real in [0,1]>}` per line on
//! stdout, in any order. EOF on its stdin tells the plugin to shut down.

use std::collections::HashMap;
use std::io::{BufRead, BufReader, Write};
use std::process::{Child, ChildStdin, Command, Stdio};
use std::sync::mpsc::{channel, Receiver};
use std::sync::Mutex;
use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};

use crate::corpus::DocumentStore;
use crate::error::{Error, Result};
use crate::lexical::{tfidf_cosine, tokenize, InvertedIndex, TokenizerConfig};
use crate::Score;

/// Deterministic pair scorer with scores in [0,1].
pub trait SemanticScorer: Send + Sync {
    fn score(&self, a: &str, b: &str) -> Result<Score>;

    fn score_batch(&self, pairs: &[(&str, &str)]) -> Result<Vec<Score>> {
        pairs.iter().map(|(a, b)| self.score(a, b)).collect()
    }
}

/// Baseline semantic scorer: tf-idf cosine over corpus paragraph statistics.
pub struct TfidfScorer {
    stats: InvertedIndex,
    tokenizer: TokenizerConfig,
}

impl TfidfScorer {
    /// Corpus statistics are taken over all kept paragraphs.
    pub fn from_store(store: &DocumentStore, tokenizer: TokenizerConfig) -> Result<TfidfScorer> {
        let units = store.iter().flat_map(|doc| {
            doc.kept_paragraphs().map(move |p| {
                (format!("{}#{}", doc.id, p.index), tokenize(&p.text, &tokenizer))
            })
        });
        Ok(TfidfScorer {
            stats: InvertedIndex::build(units)?,
            tokenizer,
        })
    }

    pub fn from_index(stats: InvertedIndex, tokenizer: TokenizerConfig) -> TfidfScorer {
        TfidfScorer { stats, tokenizer }
    }
}

impl SemanticScorer for TfidfScorer {
    fn score(&self, a: &str, b: &str) -> Result<Score> {
        if self.stats.is_empty() {
            return Err(Error::EmptyIndex);
        }
        let ta = tokenize(a, &self.tokenizer);
        let tb = tokenize(b, &self.tokenizer);
        Ok(tfidf_cosine(&ta, &tb, &self.stats))
    }
}

#[derive(Serialize)]
struct PluginRequest<'a> {
    id: u64,
    a: &'a str,
    b: &'a str,
}

#[derive(Deserialize)]
struct PluginResponse {
    id: u64,
    score: serde_json::Value,
}

struct PluginProcess {
    child: Child,
    stdin: Option<ChildStdin>,
    responses: Receiver<std::result::Result<PluginResponse, String>>,
    next_id: u64,
}

/// External scorer running as a child process speaking the line-delimited
/// JSON protocol. Single-flight: concurrent callers are serialized.
pub struct SubprocessScorer {
    process: Mutex<PluginProcess>,
    timeout: Duration,
    command: String,
}

impl SubprocessScorer {
    pub fn spawn(command: &str, timeout: Duration) -> Result<SubprocessScorer> {
        let mut child = Command::new("sh")
            .arg("-c")
            .arg(command)
            .stdin(Stdio::piped())
            .stdout(Stdio::piped())
            .spawn()?;
        let stdin = child.stdin.take().expect("piped stdin");
        let stdout = child.stdout.take().expect("piped stdout");
        let (tx, rx) = channel();
        std::thread::spawn(move || {
            for line in BufReader::new(stdout).lines() {
                let parsed = match line {
                    Ok(line) => serde_json::from_str::<PluginResponse>(&line)
                        .map_err(|e| format!("bad plugin reply `{line}`: {e}")),
                    Err(e) => Err(format!("plugin stdout: {e}")),
                };
                if tx.send(parsed).is_err() {
                    break;
                }
            }
        });
        Ok(SubprocessScorer {
            process: Mutex::new(PluginProcess {
                child,
                stdin: Some(stdin),
                responses: rx,
                next_id: 0,
            }),
            timeout,
            command: command.to_string(),
        })
    }

    fn failure(&self, a: &str, b: &str, msg: impl Into<String>) -> Error {
        let clip = |s: &str| s.chars().take(40).collect::<String>();
        Error::ScorerFailure {
            query: clip(a),
            candidate: clip(b),
            msg: format!("[{}] {}", self.command, msg.into()),
        }
    }
}

impl SemanticScorer for SubprocessScorer {
    fn score(&self, a: &str, b: &str) -> Result<Score> {
        Ok(self.score_batch(&[(a, b)])?[0])
    }

    fn score_batch(&self, pairs: &[(&str, &str)]) -> Result<Vec<Score>> {
        if pairs.is_empty() {
            return Ok(Vec::new());
        }
        let mut proc = self.process.lock().expect("scorer mutex poisoned");
        let base_id = proc.next_id;
        proc.next_id += pairs.len() as u64;
        let mut payload = Vec::new();
        for (i, (a, b)) in pairs.iter().enumerate() {
            serde_json::to_writer(&mut payload, &PluginRequest {
                id: base_id + i as u64,
                a,
                b,
            })?;
            payload.push(b'\n');
        }
        let stdin = proc
            .stdin
            .as_mut()
            .ok_or_else(|| self.failure(pairs[0].0, pairs[0].1, "plugin already shut down"))?;
        stdin
            .write_all(&payload)
            .and_then(|_| stdin.flush())
            .map_err(|e| self.failure(pairs[0].0, pairs[0].1, e.to_string()))?;

        let mut scores: HashMap<u64, Score> = HashMap::with_capacity(pairs.len());
        let deadline = Instant::now() + self.timeout;
        while scores.len() < pairs.len() {
            let remaining = deadline
                .checked_duration_since(Instant::now())
                .ok_or_else(|| self.failure(pairs[0].0, pairs[0].1, "plugin timed out"))?;
            let reply = proc
                .responses
                .recv_timeout(remaining)
                .map_err(|_| self.failure(pairs[0].0, pairs[0].1, "plugin timed out"))?;
            let reply = reply.map_err(|msg| self.failure(pairs[0].0, pairs[0].1, msg))?;
            if reply.id < base_id || reply.id >= base_id + pairs.len() as u64 {
                return Err(self.failure(pairs[0].0, pairs[0].1, format!("unexpected reply id {}", reply.id)));
            }
            let idx = (reply.id - base_id) as usize;
            let (a, b) = pairs[idx];
            let score = reply
                .score
                .as_f64()
                .ok_or_else(|| self.failure(a, b, format!("non-numeric score {}", reply.score)))?;
            if !(0.0..=1.0).contains(&score) {
                return Err(Error::ScoreOutOfRange {
                    query: a.chars().take(40).collect(),
                    candidate: b.chars().take(40).collect(),
                    score,
                });
            }
            scores.insert(reply.id, score);
        }
        Ok((0..pairs.len()).map(|i| scores[&(base_id + i as u64)]).collect())
    }
}

impl Drop for SubprocessScorer {
    fn drop(&mut self) {
        let proc = match self.process.get_mut() {
            Ok(p) => p,
            Err(poisoned) => poisoned.into_inner(),
        };
        // Closing stdin is the shutdown signal; give the plugin a moment
        // to exit on its own before killing it.
        drop(proc.stdin.take());
        let deadline = Instant::now() + Duration::from_secs(2);
        loop {
            match proc.child.try_wait() {
                Ok(Some(_)) => return,
                Ok(None) if Instant::now() < deadline => {
                    std::thread::sleep(Duration::from_millis(20));
                }
                _ => break,
            }
        }
        let _ = proc.child.kill();
        let _ = proc.child.wait();
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{ingest_reader, LangFilterConfig, SourceKind};
    use std::io::Cursor;

    fn store() -> DocumentStore {
        let input = concat!(
            "{\"id\":\"c1\",\"text\":\"the quick brown fox\"}\n",
            "{\"id\":\"c2\",\"text\":\"the slow brown bear\"}\n",
        );
        ingest_reader(Cursor::new(input), SourceKind::CaseLaw, &LangFilterConfig::default()).unwrap()
    }

    #[test]
    fn tfidf_scorer_self_similarity() {
        let scorer = TfidfScorer::from_store(&store(), TokenizerConfig::default()).unwrap();
        let s = scorer.score("the quick brown fox", "the quick brown fox").unwrap();
        assert!((s - 1.0).abs() < 1e-9);
    }

    #[test]
    fn tfidf_scorer_disjoint_is_zero() {
        let scorer = TfidfScorer::from_store(&store(), TokenizerConfig::default()).unwrap();
        assert_eq!(scorer.score("quick fox", "slow bear").unwrap(), 0.0);
    }

    const ECHO_HALF_PLUGIN: &str = r#"python3 -c '
import json, sys
for line in sys.stdin:
    req = json.loads(line)
    print(json.dumps({"id": req["id"], "score": 0.5}), flush=True)
'"#;

    #[test]
    fn subprocess_scorer_round_trip() {
        let scorer = SubprocessScorer::spawn(ECHO_HALF_PLUGIN, Duration::from_secs(10)).unwrap();
        assert_eq!(scorer.score("a", "b").unwrap(), 0.5);
        let batch = scorer.score_batch(&[("x", "y"), ("u", "v")]).unwrap();
        assert_eq!(batch, vec![0.5, 0.5]);
    }

    #[test]
    fn subprocess_scorer_rejects_out_of_range() {
        let plugin = r#"python3 -c '
import json, sys
for line in sys.stdin:
    req = json.loads(line)
    print(json.dumps({"id": req["id"], "score": 1.2}), flush=True)
'"#;
        let scorer = SubprocessScorer::spawn(plugin, Duration::from_secs(10)).unwrap();
        assert!(matches!(
            scorer.score("a", "b"),
            Err(Error::ScoreOutOfRange { .. })
        ));
    }

    #[test]
    fn subprocess_scorer_rejects_non_numeric() {
        let plugin = r#"python3 -c '
import json, sys
for line in sys.stdin:
    req = json.loads(line)
    print(json.dumps({"id": req["id"], "score": "high"}), flush=True)
'"#;
        let scorer = SubprocessScorer::spawn(plugin, Duration::from_secs(10)).unwrap();
        assert!(matches!(scorer.score("a", "b"), Err(Error::ScorerFailure { .. })));
    }

    #[test]
    fn subprocess_scorer_times_out() {
        let plugin = "python3 -c 'import time; time.sleep(60)'";
        let scorer = SubprocessScorer::spawn(plugin, Duration::from_millis(200)).unwrap();
        assert!(matches!(scorer.score("a", "b"), Err(Error::ScorerFailure { .. })));
    }
}
