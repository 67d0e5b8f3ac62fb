//! Document ingestion, paragraph and sentence segmentation, and the
//! English/French stopword-ratio language filter.

use std::collections::{HashMap, HashSet};
use std::io::{BufRead, BufReader};
use std::path::Path;
use std::sync::OnceLock;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lexical::{tokenize, TokenizerConfig};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SourceKind {
    CaseLaw,
    StatuteArticle,
    BarQuestion,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Paragraph {
    pub index: usize,
    pub text: String,
    pub sentences: Vec<String>,
    pub kept: bool,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CaseDocument {
    pub id: String,
    pub kind: SourceKind,
    pub paragraphs: Vec<Paragraph>,
}

impl CaseDocument {
    pub fn kept_paragraphs(&self) -> impl Iterator<Item = &Paragraph> {
        self.paragraphs.iter().filter(|p| p.kept)
    }

    /// Concatenated text of kept paragraphs, for whole-case indexing.
    pub fn kept_text(&self) -> String {
        let mut out = String::new();
        for p in self.kept_paragraphs() {
            if !out.is_empty() {
                out.push('\n');
            }
            out.push_str(&p.text);
        }
        out
    }

    pub fn tokens(&self, config: &TokenizerConfig) -> Vec<String> {
        let mut out = Vec::new();
        for p in self.kept_paragraphs() {
            out.extend(tokenize(&p.text, config));
        }
        out
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct AlignedBitext {
    pub doc_id: String,
    pub lang_a: String,
    pub lang_b: String,
    pub pairs: Vec<(String, String)>,
}

/// Immutable, id-addressable collection of ingested documents.
#[derive(Debug, Clone, Default)]
pub struct DocumentStore {
    docs: Vec<CaseDocument>,
    by_id: HashMap<String, usize>,
}

impl DocumentStore {
    pub fn from_documents(docs: Vec<CaseDocument>) -> Result<DocumentStore> {
        let mut by_id = HashMap::with_capacity(docs.len());
        for (i, doc) in docs.iter().enumerate() {
            if by_id.insert(doc.id.clone(), i).is_some() {
                return Err(Error::DuplicateId(doc.id.clone()));
            }
        }
        Ok(DocumentStore { docs, by_id })
    }

    pub fn get(&self, id: &str) -> Option<&CaseDocument> {
        self.by_id.get(id).map(|&i| &self.docs[i])
    }

    pub fn contains(&self, id: &str) -> bool {
        self.by_id.contains_key(id)
    }

    pub fn iter(&self) -> impl Iterator<Item = &CaseDocument> {
        self.docs.iter()
    }

    pub fn len(&self) -> usize {
        self.docs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.docs.is_empty()
    }

    pub fn save_jsonl(&self, path: &Path) -> Result<()> {
        use std::io::Write;
        let file = std::fs::File::create(path)?;
        let mut w = std::io::BufWriter::new(file);
        for doc in &self.docs {
            serde_json::to_writer(&mut w, doc)?;
            w.write_all(b"\n")?;
        }
        Ok(())
    }

    /// Load a store previously written by [`DocumentStore::save_jsonl`].
    pub fn load_jsonl(path: &Path) -> Result<DocumentStore> {
        let file = std::fs::File::open(path)?;
        let mut docs = Vec::new();
        for (lineno, line) in BufReader::new(file).lines().enumerate() {
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            let doc: CaseDocument =
                serde_json::from_str(&line).map_err(|e| Error::MalformedRecord {
                    line: lineno + 1,
                    msg: e.to_string(),
                })?;
            docs.push(doc);
        }
        DocumentStore::from_documents(docs)
    }
}

#[derive(Debug, Clone, Copy)]
pub struct LangFilterConfig {
    /// Minimum foreign-stopword ratio before a paragraph is dropped.
    pub min_ratio: f64,
}

impl Default for LangFilterConfig {
    fn default() -> Self {
        LangFilterConfig { min_ratio: 0.05 }
    }
}

fn stopwords(data: &'static str, cell: &'static OnceLock<HashSet<&'static str>>) -> &'static HashSet<&'static str> {
    cell.get_or_init(|| data.lines().map(str::trim).filter(|w| !w.is_empty()).collect())
}

fn english_stopwords() -> &'static HashSet<&'static str> {
    static CELL: OnceLock<HashSet<&'static str>> = OnceLock::new();
    stopwords(include_str!("../data/stopwords_en.txt"), &CELL)
}

fn french_stopwords() -> &'static HashSet<&'static str> {
    static CELL: OnceLock<HashSet<&'static str>> = OnceLock::new();
    stopwords(include_str!("../data/stopwords_fr.txt"), &CELL)
}

/// Ratio of tokens found in `list`, over the paragraph's own tokens.
fn stopword_ratio(tokens: &[String], list: &HashSet<&str>) -> f64 {
    if tokens.is_empty() {
        return 0.0;
    }
    let hits = tokens.iter().filter(|t| list.contains(t.as_str())).count();
    hits as f64 / tokens.len() as f64
}

/// Sets the paragraph's `kept` flag: dropped iff the French stopword ratio
/// strictly exceeds the English one and reaches `config.min_ratio`.
pub fn filter_language(mut paragraph: Paragraph, config: &LangFilterConfig) -> Paragraph {
    let tokens = tokenize(&paragraph.text, &TokenizerConfig::default());
    let fr = stopword_ratio(&tokens, french_stopwords());
    let en = stopword_ratio(&tokens, english_stopwords());
    paragraph.kept = !(fr > en && fr >= config.min_ratio);
    paragraph
}

fn is_marker_line(line: &str) -> bool {
    let rest = match line.strip_prefix('[') {
        Some(r) => r,
        None => return false,
    };
    match rest.find(']') {
        Some(end) if end > 0 => rest[..end].bytes().all(|b| b.is_ascii_digit()),
        _ => false,
    }
}

/// Split raw text into paragraphs at lines beginning with a bracketed
/// integer marker `[<digits>]`; if no marker exists, split on blank-line
/// runs. Markers are retained in the paragraph text.
pub fn segment_paragraphs(raw_text: &str) -> Vec<String> {
    let has_markers = raw_text.lines().any(|l| is_marker_line(l.trim_start()));
    let mut paragraphs: Vec<String> = Vec::new();
    let mut cur = String::new();
    let flush = |cur: &mut String, out: &mut Vec<String>| {
        let trimmed = cur.trim();
        if !trimmed.is_empty() {
            out.push(trimmed.to_string());
        }
        cur.clear();
    };
    for line in raw_text.lines() {
        let boundary = if has_markers {
            is_marker_line(line.trim_start())
        } else {
            line.trim().is_empty()
        };
        if boundary {
            flush(&mut cur, &mut paragraphs);
        }
        if !line.trim().is_empty() {
            if !cur.is_empty() {
                cur.push('\n');
            }
            cur.push_str(line);
        }
    }
    flush(&mut cur, &mut paragraphs);
    if paragraphs.is_empty() && !raw_text.trim().is_empty() {
        paragraphs.push(raw_text.trim().to_string());
    }
    paragraphs
}

/// Abbreviations whose trailing period never ends a sentence.
const ABBREVIATIONS: &[&str] = &[
    "no.", "nos.", "v.", "vs.", "mr.", "mrs.", "ms.", "dr.", "prof.", "hon.", "art.", "arts.",
    "para.", "paras.", "sec.", "ss.", "s.", "p.", "pp.", "cf.", "e.g.", "i.e.", "etc.", "inc.",
    "ltd.", "co.", "st.", "j.", "jj.", "c.j.", "al.", "ex.", "r.",
];

/// Split paragraph text at `.`, `?`, `!` followed by whitespace and an
/// uppercase letter, or at end of text, with an abbreviation guard on `.`.
pub fn segment_sentences(paragraph_text: &str) -> Vec<String> {
    assert!(
        !paragraph_text.trim().is_empty(),
        "segment_sentences requires non-empty text"
    );
    let chars: Vec<char> = paragraph_text.chars().collect();
    let mut sentences = Vec::new();
    let mut start = 0usize;
    for i in 0..chars.len() {
        let ch = chars[i];
        if ch != '.' && ch != '?' && ch != '!' {
            continue;
        }
        if ch == '.' && is_abbreviation(&chars, i) {
            continue;
        }
        // Look past the terminal for whitespace + uppercase, or end of text.
        let mut j = i + 1;
        while j < chars.len() && chars[j].is_whitespace() {
            j += 1;
        }
        let splits = if j == chars.len() {
            true
        } else {
            j > i + 1 && chars[j].is_uppercase()
        };
        if splits {
            let sentence: String = chars[start..=i].iter().collect();
            let sentence = sentence.trim();
            if !sentence.is_empty() {
                sentences.push(sentence.to_string());
            }
            start = i + 1;
        }
    }
    if start < chars.len() {
        let tail: String = chars[start..].iter().collect();
        let tail = tail.trim();
        if !tail.is_empty() {
            sentences.push(tail.to_string());
        }
    }
    if sentences.is_empty() {
        sentences.push(paragraph_text.trim().to_string());
    }
    sentences
}

fn is_abbreviation(chars: &[char], dot: usize) -> bool {
    // Walk back over the word (letters and interior dots) preceding `dot`.
    let mut begin = dot;
    while begin > 0 && (chars[begin - 1].is_alphanumeric() || chars[begin - 1] == '.') {
        begin -= 1;
    }
    if begin == dot {
        return false;
    }
    let word: String = chars[begin..=dot].iter().collect::<String>().to_lowercase();
    ABBREVIATIONS.contains(&word.as_str())
}

/// Segment raw text into fully processed paragraphs.
pub fn process_text(raw_text: &str, lang: &LangFilterConfig) -> Vec<Paragraph> {
    segment_paragraphs(raw_text)
        .into_iter()
        .enumerate()
        .map(|(index, text)| {
            let sentences = segment_sentences(&text);
            filter_language(
                Paragraph {
                    index,
                    text,
                    sentences,
                    kept: true,
                },
                lang,
            )
        })
        .collect()
}

#[derive(Deserialize)]
struct RawRecord {
    id: String,
    kind: Option<SourceKind>,
    text: Option<String>,
    paragraphs: Option<Vec<String>>,
}

/// Ingest a corpus JSONL file. Each record is either
/// `{"id","kind","text"}` or the pre-segmented `{"id","kind","paragraphs"}`.
pub fn ingest(path: &Path, default_kind: SourceKind, lang: &LangFilterConfig) -> Result<DocumentStore> {
    let file = std::fs::File::open(path)?;
    ingest_reader(BufReader::new(file), default_kind, lang)
}

pub fn ingest_reader<R: BufRead>(
    reader: R,
    default_kind: SourceKind,
    lang: &LangFilterConfig,
) -> Result<DocumentStore> {
    let mut docs = Vec::new();
    let mut seen = HashSet::new();
    for (lineno, line) in reader.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let record: RawRecord = serde_json::from_str(&line).map_err(|e| Error::MalformedRecord {
            line: lineno + 1,
            msg: e.to_string(),
        })?;
        if !seen.insert(record.id.clone()) {
            return Err(Error::DuplicateId(record.id));
        }
        let paragraphs = match (&record.text, &record.paragraphs) {
            (Some(text), _) => process_text(text, lang),
            (None, Some(given)) => given
                .iter()
                .filter(|t| !t.trim().is_empty())
                .enumerate()
                .map(|(index, text)| {
                    let text = text.trim().to_string();
                    let sentences = segment_sentences(&text);
                    filter_language(
                        Paragraph {
                            index,
                            text,
                            sentences,
                            kept: true,
                        },
                        lang,
                    )
                })
                .collect(),
            (None, None) => {
                return Err(Error::MalformedRecord {
                    line: lineno + 1,
                    msg: "record needs either \"text\" or \"paragraphs\"".into(),
                })
            }
        };
        docs.push(CaseDocument {
            id: record.id,
            kind: record.kind.unwrap_or(default_kind),
            paragraphs,
        });
    }
    DocumentStore::from_documents(docs)
}

/// Read bitext JSONL: `{"doc_id","lang_a","lang_b","pairs":[[a,b],...]}`.
pub fn read_bitext(path: &Path) -> Result<Vec<AlignedBitext>> {
    let file = std::fs::File::open(path)?;
    let mut out = Vec::new();
    for (lineno, line) in BufReader::new(file).lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let bitext: AlignedBitext =
            serde_json::from_str(&line).map_err(|e| Error::MalformedRecord {
                line: lineno + 1,
                msg: e.to_string(),
            })?;
        if bitext.pairs.is_empty() {
            return Err(Error::MalformedRecord {
                line: lineno + 1,
                msg: "bitext record has no pairs".into(),
            });
        }
        if bitext.pairs.iter().any(|(a, b)| a.trim().is_empty() || b.trim().is_empty()) {
            return Err(Error::MalformedRecord {
                line: lineno + 1,
                msg: "bitext pair with an empty side".into(),
            });
        }
        out.push(bitext);
    }
    Ok(out)
}
