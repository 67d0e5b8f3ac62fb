//! Retrieval evaluation: per-query and macro precision/recall, the
//! recall-weighted F2 of the macro means, and classification accuracy.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::num::Real;
use crate::Score;

/// `F2 = 5 * P * R / (4 * P + R)`, zero when the denominator is zero.
pub fn f2_score<T: Real>(precision: T, recall: T) -> T {
    let five = T::from_f64(5.0).unwrap();
    let four = T::from_f64(4.0).unwrap();
    let denom = four * precision + recall;
    if denom == T::zero() {
        T::zero()
    } else {
        five * precision * recall / denom
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EvalReport {
    pub return_count: u64,
    pub retrieved_count: u64,
    pub macro_precision: Score,
    pub macro_recall: Score,
    pub f2: Score,
    pub per_query: BTreeMap<String, (Score, Score)>,
}

impl EvalReport {
    /// Aligned text table with Return / Retrieved / P / R / F2 columns.
    pub fn to_table(&self) -> String {
        let mut out = String::new();
        writeln!(out, "{:>8} {:>10} {:>7} {:>7} {:>7}", "Return", "Retrieved", "P", "R", "F2")
            .unwrap();
        writeln!(
            out,
            "{:>8} {:>10} {:>7.2} {:>7.2} {:>7.2}",
            self.return_count,
            self.retrieved_count,
            self.macro_precision * 100.0,
            self.macro_recall * 100.0,
            self.f2 * 100.0,
        )
        .unwrap();
        out
    }
}

/// Macro precision/recall over gold queries, with F2 computed from the
/// macro means. Queries absent from `predictions` count as empty
/// prediction sets.
pub fn evaluate_retrieval(
    predictions: &BTreeMap<String, BTreeSet<String>>,
    gold: &BTreeMap<String, BTreeSet<String>>,
) -> Result<EvalReport> {
    for query in predictions.keys() {
        if !gold.contains_key(query) {
            return Err(Error::UnknownId(format!("prediction query `{query}` not in gold")));
        }
    }
    if gold.is_empty() {
        return Err(Error::InvalidInput("gold is empty".into()));
    }
    let mut per_query = BTreeMap::new();
    let mut return_count = 0u64;
    let mut retrieved_count = 0u64;
    let mut precision_sum = 0.0;
    let mut recall_sum = 0.0;
    static EMPTY: BTreeSet<String> = BTreeSet::new();
    for (query, relevant) in gold {
        if relevant.is_empty() {
            return Err(Error::InvalidInput(format!(
                "gold entry for `{query}` has no relevant ids"
            )));
        }
        let predicted = predictions.get(query).unwrap_or(&EMPTY);
        let hits = predicted.intersection(relevant).count();
        let precision = if predicted.is_empty() {
            0.0
        } else {
            hits as Score / predicted.len() as Score
        };
        let recall = hits as Score / relevant.len() as Score;
        return_count += predicted.len() as u64;
        retrieved_count += hits as u64;
        precision_sum += precision;
        recall_sum += recall;
        per_query.insert(query.clone(), (precision, recall));
    }
    let n = gold.len() as Score;
    let macro_precision = precision_sum / n;
    let macro_recall = recall_sum / n;
    Ok(EvalReport {
        return_count,
        retrieved_count,
        macro_precision,
        macro_recall,
        f2: f2_score(macro_precision, macro_recall),
        per_query,
    })
}

/// Fraction of ids whose predicted boolean matches gold.
pub fn evaluate_accuracy(
    predictions: &BTreeMap<String, bool>,
    gold: &BTreeMap<String, bool>,
) -> Result<Score> {
    if predictions.len() != gold.len()
        || !predictions.keys().all(|k| gold.contains_key(k))
    {
        return Err(Error::InvalidInput(
            "prediction and gold key sets differ".into(),
        ));
    }
    let correct = predictions
        .iter()
        .filter(|(id, &value)| gold[*id] == value)
        .count();
    Ok(correct as Score / gold.len() as Score)
}
