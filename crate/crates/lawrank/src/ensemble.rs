//! Min-max normalization of per-model score vectors, weighted
//! combination, and simplex grid search for ensemble weights.

use std::collections::{BTreeMap, BTreeSet};
use std::io::{BufRead, BufReader, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::metrics::{evaluate_retrieval, f2_score};
use crate::num::Real;
use crate::Score;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ModelOutputs<T: Real = Score> {
    pub model_id: String,
    pub scores: BTreeMap<String, T>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EnsembleWeights<T: Real = Score> {
    weights: BTreeMap<String, T>,
}

impl<T: Real> EnsembleWeights<T> {
    pub fn new(weights: BTreeMap<String, T>) -> Result<EnsembleWeights<T>> {
        if weights.values().any(|w| *w < T::zero()) {
            return Err(Error::InvalidConfig("ensemble weights must be >= 0".into()));
        }
        let sum: T = weights.values().cloned().sum();
        let tolerance = T::from_f64(1e-9).unwrap();
        if (sum - T::one()).abs() > tolerance {
            return Err(Error::InvalidConfig(format!(
                "ensemble weights must sum to 1 (got {sum:?})"
            )));
        }
        Ok(EnsembleWeights { weights })
    }

    pub fn get(&self, model_id: &str) -> Option<T> {
        self.weights.get(model_id).copied()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, T)> {
        self.weights.iter().map(|(id, w)| (id.as_str(), *w))
    }
}

/// `v -> (v - min) / (max - min)`; constant input maps to all zeros.
pub fn minmax_normalize<T: Real>(scores: &BTreeMap<String, T>) -> BTreeMap<String, T> {
    let min = scores.values().cloned().fold(T::infinity(), T::min);
    let max = scores.values().cloned().fold(T::neg_infinity(), T::max);
    if max == min {
        return scores.keys().map(|k| (k.clone(), T::zero())).collect();
    }
    scores
        .iter()
        .map(|(k, &v)| (k.clone(), (v - min) / (max - min)))
        .collect()
}

/// Per candidate, the weight-combined min-max-normalized model scores.
pub fn combine<T: Real>(
    outputs: &[ModelOutputs<T>],
    weights: &EnsembleWeights<T>,
) -> Result<BTreeMap<String, T>> {
    let keys: Option<&BTreeMap<String, T>> = outputs.first().map(|o| &o.scores);
    let keys = keys.ok_or_else(|| Error::InvalidInput("no model outputs".into()))?;
    for output in outputs {
        if output.scores.len() != keys.len()
            || !output.scores.keys().eq(keys.keys())
        {
            return Err(Error::InvalidInput(format!(
                "candidate key sets differ between models (at `{}`)",
                output.model_id
            )));
        }
    }
    let by_model: BTreeMap<&str, &ModelOutputs<T>> =
        outputs.iter().map(|o| (o.model_id.as_str(), o)).collect();
    let mut combined: BTreeMap<String, T> =
        keys.keys().map(|k| (k.clone(), T::zero())).collect();
    for (model_id, weight) in weights.iter() {
        let output = by_model
            .get(model_id)
            .ok_or_else(|| Error::UnknownId(model_id.to_string()))?;
        for (candidate, value) in minmax_normalize(&output.scores) {
            *combined.get_mut(&candidate).unwrap() += weight * value;
        }
    }
    Ok(combined)
}

/// Per-model, per-query candidate scores on the development set.
pub type DevOutputs = BTreeMap<String, BTreeMap<String, BTreeMap<String, Score>>>;

/// Integer compositions of `steps` into `parts` slots, lexicographic in the
/// first coordinate ascending. This is the documented grid order used for
/// deterministic tie-breaking.
fn weight_grid(parts: usize, steps: usize) -> Vec<Vec<usize>> {
    fn rec(parts: usize, remaining: usize, prefix: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if parts == 1 {
            prefix.push(remaining);
            out.push(prefix.clone());
            prefix.pop();
            return;
        }
        for first in 0..=remaining {
            prefix.push(first);
            rec(parts - 1, remaining - first, prefix, out);
            prefix.pop();
        }
    }
    let mut out = Vec::new();
    rec(parts, steps, &mut Vec::new(), &mut out);
    out
}

/// Exhaustive grid search over the weight simplex, maximizing macro F2 of
/// per-query top-|gold| predictions; ties keep the first grid point.
pub fn fit_weights(
    dev_outputs: &DevOutputs,
    dev_gold: &BTreeMap<String, BTreeSet<String>>,
    grid_step: Score,
) -> Result<EnsembleWeights<Score>> {
    if dev_outputs.is_empty() {
        return Err(Error::InvalidInput("no models to fit".into()));
    }
    if dev_gold.is_empty() {
        return Err(Error::InvalidInput("gold is empty".into()));
    }
    if !(grid_step > 0.0 && grid_step <= 1.0) {
        return Err(Error::InvalidConfig("grid_step must be in (0,1]".into()));
    }
    let models: Vec<&String> = dev_outputs.keys().collect();
    for model in &models {
        for query in dev_gold.keys() {
            if !dev_outputs[*model].contains_key(query) {
                return Err(Error::UnknownId(format!(
                    "model `{model}` has no outputs for query `{query}`"
                )));
            }
        }
    }
    let steps = (1.0 / grid_step).round() as usize;
    let mut best: Option<(Score, EnsembleWeights<Score>)> = None;
    for point in weight_grid(models.len(), steps) {
        let weights = EnsembleWeights::new(
            models
                .iter()
                .zip(&point)
                .map(|(m, &k)| ((*m).clone(), k as Score / steps as Score))
                .collect(),
        )?;
        let mut predictions: BTreeMap<String, BTreeSet<String>> = BTreeMap::new();
        for (query, relevant) in dev_gold {
            let outputs: Vec<ModelOutputs<Score>> = models
                .iter()
                .map(|m| ModelOutputs {
                    model_id: (*m).clone(),
                    scores: dev_outputs[*m][query].clone(),
                })
                .collect();
            let combined = combine(&outputs, &weights)?;
            let mut ranked: Vec<(&String, Score)> =
                combined.iter().map(|(k, &v)| (k, v)).collect();
            ranked.sort_by(|a, b| b.1.partial_cmp(&a.1).unwrap().then_with(|| a.0.cmp(b.0)));
            predictions.insert(
                query.clone(),
                ranked.iter().take(relevant.len()).map(|(k, _)| (*k).clone()).collect(),
            );
        }
        let report = evaluate_retrieval(&predictions, dev_gold)?;
        let objective = f2_score(report.macro_precision, report.macro_recall);
        let better = best.as_ref().map_or(true, |(b, _)| objective > *b);
        if better {
            best = Some((objective, weights));
        }
    }
    Ok(best.expect("grid is non-empty").1)
}

#[derive(Debug, Serialize, Deserialize)]
struct ModelOutputRecord {
    model_id: String,
    query_id: String,
    candidate_id: String,
    score: Score,
}

/// Read model-output JSONL records into per-model, per-query score maps.
pub fn read_model_outputs(path: &Path) -> Result<DevOutputs> {
    let file = std::fs::File::open(path)?;
    let mut out: DevOutputs = BTreeMap::new();
    for (lineno, line) in BufReader::new(file).lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let record: ModelOutputRecord =
            serde_json::from_str(&line).map_err(|e| Error::MalformedRecord {
                line: lineno + 1,
                msg: e.to_string(),
            })?;
        out.entry(record.model_id)
            .or_default()
            .entry(record.query_id)
            .or_default()
            .insert(record.candidate_id, record.score);
    }
    Ok(out)
}

pub fn write_weights(path: &Path, weights: &EnsembleWeights<Score>) -> Result<()> {
    let map: BTreeMap<&str, Score> = weights.iter().collect();
    let file = std::fs::File::create(path)?;
    let mut w = std::io::BufWriter::new(file);
    serde_json::to_writer_pretty(&mut w, &map)?;
    w.write_all(b"\n")?;
    Ok(())
}

pub fn read_weights(path: &Path) -> Result<EnsembleWeights<Score>> {
    let file = std::fs::File::open(path)?;
    let map: BTreeMap<String, Score> = serde_json::from_reader(BufReader::new(file))?;
    EnsembleWeights::new(map)
}
