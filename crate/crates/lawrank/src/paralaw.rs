//! Cross-lingual pretraining pair generation from aligned bitext.
//!
//! For every consecutive sentence index, 12 examples are emitted: forward
//! pairs (next-sentence, nmsp=1), reversed pairs (previous-sentence,
//! nmsp=2), and random pairs (unrelated, nmsp=0), each in all four
//! language combinations. The binary next-foreign-sentence label (nfsp) is
//! defined only on cross-lingual forward/random pairs.

use std::collections::{BTreeMap, HashSet};
use std::io::{BufRead, BufReader, Write};
use std::path::Path;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::corpus::AlignedBitext;
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PretrainExample {
    pub first: String,
    pub second: String,
    pub lang_first: String,
    pub lang_second: String,
    pub nfsp: Option<u8>,
    pub nmsp: u8,
}

/// Sentences per language used as unrelated second sentences. They must
/// not occur in the bitext being expanded.
#[derive(Debug, Clone, Default)]
pub struct RandomPool {
    by_lang: BTreeMap<String, Vec<String>>,
}

impl RandomPool {
    pub fn add(&mut self, lang: &str, sentence: impl Into<String>) {
        self.by_lang.entry(lang.to_string()).or_default().push(sentence.into());
    }

    pub fn sentences(&self, lang: &str) -> Option<&[String]> {
        self.by_lang.get(lang).map(Vec::as_slice)
    }
}

/// Which side of the bitext pair fills a slot.
#[derive(Clone, Copy, PartialEq)]
enum Side {
    A,
    B,
}

const COMBOS: [(Side, Side); 4] = [
    (Side::A, Side::A),
    (Side::A, Side::B),
    (Side::B, Side::A),
    (Side::B, Side::B),
];

pub fn generate_examples(
    bitext: &AlignedBitext,
    pool: &RandomPool,
    seed: u64,
    passes: u32,
) -> Result<Vec<PretrainExample>> {
    if bitext.pairs.len() < 2 {
        return Err(Error::InvalidInput(format!(
            "bitext `{}` needs at least 2 aligned pairs",
            bitext.doc_id
        )));
    }
    for lang in [&bitext.lang_a, &bitext.lang_b] {
        match pool.sentences(lang) {
            Some(s) if !s.is_empty() => {}
            _ => {
                return Err(Error::InvalidInput(format!(
                    "random pool has no sentences for language `{lang}`"
                )))
            }
        }
    }
    let mut bitext_sentences: HashSet<&str> = HashSet::new();
    for (a, b) in &bitext.pairs {
        bitext_sentences.insert(a);
        bitext_sentences.insert(b);
    }
    for lang in [&bitext.lang_a, &bitext.lang_b] {
        if let Some(hit) = pool
            .sentences(lang)
            .unwrap()
            .iter()
            .find(|s| bitext_sentences.contains(s.as_str()))
        {
            return Err(Error::InvalidInput(format!(
                "random pool sentence occurs in bitext: `{hit}`"
            )));
        }
    }
    if passes == 0 {
        return Err(Error::InvalidConfig("passes must be >= 1".into()));
    }

    let lang_of = |side: Side| match side {
        Side::A => bitext.lang_a.clone(),
        Side::B => bitext.lang_b.clone(),
    };
    let sent_of = |i: usize, side: Side| -> &str {
        match side {
            Side::A => &bitext.pairs[i].0,
            Side::B => &bitext.pairs[i].1,
        }
    };

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::new();
    for _ in 0..passes {
        for i in 0..bitext.pairs.len() - 1 {
            // Forward: second sentence follows the first.
            for (fs, ss) in COMBOS {
                out.push(PretrainExample {
                    first: sent_of(i, fs).to_string(),
                    second: sent_of(i + 1, ss).to_string(),
                    lang_first: lang_of(fs),
                    lang_second: lang_of(ss),
                    nfsp: (fs != ss).then_some(1),
                    nmsp: 1,
                });
            }
            // Reversed: second sentence precedes the first.
            for (fs, ss) in COMBOS {
                out.push(PretrainExample {
                    first: sent_of(i + 1, fs).to_string(),
                    second: sent_of(i, ss).to_string(),
                    lang_first: lang_of(fs),
                    lang_second: lang_of(ss),
                    nfsp: None,
                    nmsp: 2,
                });
            }
            // Random: unrelated second sentence in the slot's language.
            for (fs, ss) in COMBOS {
                let candidates = pool.sentences(&lang_of(ss)).unwrap();
                let random = &candidates[rng.gen_range(0..candidates.len())];
                out.push(PretrainExample {
                    first: sent_of(i, fs).to_string(),
                    second: random.clone(),
                    lang_first: lang_of(fs),
                    lang_second: lang_of(ss),
                    nfsp: (fs != ss).then_some(0),
                    nmsp: 0,
                });
            }
        }
    }
    Ok(out)
}

/// Seeded shuffle, then split; sizes are within one of the exact ratio.
pub fn split_dataset(
    examples: Vec<PretrainExample>,
    ratio_train: f64,
    seed: u64,
) -> Result<(Vec<PretrainExample>, Vec<PretrainExample>)> {
    if !(ratio_train > 0.0 && ratio_train < 1.0) {
        return Err(Error::InvalidConfig("ratio_train must be in (0,1)".into()));
    }
    let mut examples = examples;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    examples.shuffle(&mut rng);
    let train_size = (ratio_train * examples.len() as f64).round() as usize;
    let validation = examples.split_off(train_size.min(examples.len()));
    Ok((examples, validation))
}

pub fn write_examples(path: &Path, examples: &[PretrainExample]) -> Result<()> {
    let file = std::fs::File::create(path)?;
    let mut w = std::io::BufWriter::new(file);
    for ex in examples {
        serde_json::to_writer(&mut w, ex)?;
        w.write_all(b"\n")?;
    }
    Ok(())
}

pub fn read_examples(path: &Path) -> Result<Vec<PretrainExample>> {
    let file = std::fs::File::open(path)?;
    let mut out = Vec::new();
    for (lineno, line) in BufReader::new(file).lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        out.push(serde_json::from_str(&line).map_err(|e| Error::MalformedRecord {
            line: lineno + 1,
            msg: e.to_string(),
        })?);
    }
    Ok(out)
}
