use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use super::logistic::{fit_logistic, Standardizer};
use crate::metrics::MetricTable;
use crate::{rng, Error, Result};

/// Minimum examples per class.
const MIN_PER_CLASS: usize = 20;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FeatureSet {
    /// The `gltr_bin*` columns only.
    Gltr,
    /// Every metric column.
    All,
}

impl std::fmt::Display for FeatureSet {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            FeatureSet::Gltr => "gltr",
            FeatureSet::All => "all",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DetectorConfig {
    pub learning_rate: f64,
    pub l2: f64,
    pub max_epochs: usize,
    pub tolerance: f64,
    pub seed: u64,
    pub train_fraction: f64,
}

impl Default for DetectorConfig {
    fn default() -> Self {
        DetectorConfig {
            learning_rate: 0.1,
            l2: 1e-3,
            max_epochs: 10_000,
            tolerance: 1e-6,
            seed: 0,
            train_fraction: 0.8,
        }
    }
}

/// Logistic regression over standardized features. Label 1 is synthetic.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DetectorModel {
    pub features: Vec<String>,
    pub mean: Vec<f64>,
    pub std: Vec<f64>,
    pub weights: Vec<f64>,
    pub bias: f64,
    /// Requested features removed for having no spread on the training fold
    /// or missing values.
    pub dropped: Vec<String>,
    pub config: DetectorConfig,
    pub epochs: usize,
    pub converged: bool,
}

impl DetectorModel {
    /// Probability that `row` (raw values for `self.features`) is synthetic.
    pub fn predict_proba(&self, row: &[f64]) -> f64 {
        let z: f64 = row
            .iter()
            .zip(self.mean.iter().zip(&self.std))
            .zip(&self.weights)
            .map(|((&x, (&m, &s)), &w)| (x - m) / s * w)
            .sum::<f64>()
            + self.bias;
        1.0 / (1.0 + (-z).exp())
    }

    pub fn predict(&self, row: &[f64]) -> bool {
        self.predict_proba(row) >= 0.5
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DetectorReport {
    pub feature_set: FeatureSet,
    pub model: DetectorModel,
    /// F1 of the synthetic class on the held-out fold.
    pub f1: f64,
    pub macro_f1: f64,
    pub n_train: usize,
    pub n_test: usize,
}

/// F1 of the positive class; 0 when precision + recall is 0.
pub fn f1_score(predictions: &[bool], labels: &[bool]) -> Result<f64> {
    if predictions.len() != labels.len() {
        return Err(Error::LengthMismatch(predictions.len(), labels.len()));
    }
    let (mut tp, mut fp, mut fn_) = (0usize, 0usize, 0usize);
    for (&p, &l) in predictions.iter().zip(labels) {
        match (p, l) {
            (true, true) => tp += 1,
            (true, false) => fp += 1,
            (false, true) => fn_ += 1,
            _ => {}
        }
    }
    if tp == 0 {
        return Ok(0.0);
    }
    let precision = tp as f64 / (tp + fp) as f64;
    let recall = tp as f64 / (tp + fn_) as f64;
    Ok(2.0 * precision * recall / (precision + recall))
}

fn select_features(real: &MetricTable, synth: &MetricTable, set: FeatureSet) -> Result<(Vec<String>, Vec<String>)> {
    let wanted = match set {
        FeatureSet::Gltr => real.gltr_columns(),
        FeatureSet::All => real.columns.clone(),
    };
    let mut kept = Vec::new();
    let mut dropped = Vec::new();
    for name in wanted {
        let complete = [real, synth].iter().all(|t| {
            t.column_index(&name)
                .is_some_and(|i| t.rows.iter().all(|r| r.values[i].is_some()))
        });
        if complete {
            kept.push(name);
        } else {
            log::warn!("feature `{name}` is missing values and is left out");
            dropped.push(name);
        }
    }
    if kept.is_empty() {
        return Err(Error::InsufficientData(format!("no usable {set:?} features")));
    }
    Ok((kept, dropped))
}

fn matrix(table: &MetricTable, features: &[String]) -> Result<Vec<Vec<f64>>> {
    let idx: Vec<usize> = features
        .iter()
        .map(|f| table.column_index(f).expect("feature was checked"))
        .collect();
    table
        .rows
        .iter()
        .map(|r| {
            idx.iter()
                .zip(features)
                .map(|(&i, name)| {
                    let v = r.values[i].expect("feature was checked");
                    if v.is_finite() {
                        Ok(v)
                    } else {
                        Err(Error::NonFiniteFeature(name.clone()))
                    }
                })
                .collect()
        })
        .collect()
}

/// Seeded split of `0..n` into (train, test); class `stream` gets its own
/// generator stream so the two classes shuffle independently.
fn split(n: usize, fraction: f64, seed: u64, stream: u64) -> (Vec<usize>, Vec<usize>) {
    let mut idx: Vec<usize> = (0..n).collect();
    idx.shuffle(&mut rng::stream_rng(seed, stream));
    let n_train = ((n as f64 * fraction).round() as usize).clamp(1, n - 1);
    let test = idx.split_off(n_train);
    (idx, test)
}

/// Fits a real-vs-synthetic classifier on a stratified split of the two
/// tables and scores it on the held-out rows.
pub fn train_detector(
    real: &MetricTable,
    synth: &MetricTable,
    set: FeatureSet,
    config: &DetectorConfig,
) -> Result<DetectorReport> {
    for (name, t) in [("real", real), ("synthetic", synth)] {
        if t.rows.len() < MIN_PER_CLASS {
            return Err(Error::InsufficientData(format!(
                "{name} class has {} examples, need {MIN_PER_CLASS}",
                t.rows.len()
            )));
        }
    }
    if !(config.train_fraction > 0.0 && config.train_fraction < 1.0) {
        return Err(Error::Invalid("train fraction must lie in (0, 1)".into()));
    }
    let (features, mut dropped) = select_features(real, synth, set)?;
    let xr = matrix(real, &features)?;
    let xs = matrix(synth, &features)?;

    let (real_train, real_test) = split(xr.len(), config.train_fraction, config.seed, 0);
    let (synth_train, synth_test) = split(xs.len(), config.train_fraction, config.seed, 1);
    let gather = |rows: &[Vec<f64>], idx: &[usize]| -> Vec<Vec<f64>> {
        idx.iter().map(|&i| rows[i].clone()).collect()
    };
    let mut train_x = gather(&xr, &real_train);
    train_x.extend(gather(&xs, &synth_train));
    let mut train_y = vec![false; real_train.len()];
    train_y.extend(vec![true; synth_train.len()]);
    let mut test_x = gather(&xr, &real_test);
    test_x.extend(gather(&xs, &synth_test));
    let mut test_y = vec![false; real_test.len()];
    test_y.extend(vec![true; synth_test.len()]);

    let scaler = Standardizer::fit(&train_x)?;
    for (i, name) in features.iter().enumerate() {
        if !scaler.kept.contains(&i) {
            log::warn!("feature `{name}` has zero variance on the training fold; dropped");
            dropped.push(name.clone());
        }
    }
    if scaler.kept.is_empty() {
        return Err(Error::InsufficientData("every feature has zero variance".into()));
    }
    let z: Vec<Vec<f64>> = train_x.iter().map(|r| scaler.apply(r)).collect();
    let fit = fit_logistic(
        &z,
        &train_y,
        config.learning_rate,
        config.l2,
        config.max_epochs,
        config.tolerance,
    )?;

    let model = DetectorModel {
        features: scaler.kept.iter().map(|&i| features[i].clone()).collect(),
        mean: scaler.mean.clone(),
        std: scaler.std.clone(),
        weights: fit.weights,
        bias: fit.bias,
        dropped,
        config: *config,
        epochs: fit.epochs,
        converged: fit.converged,
    };
    let predictions: Vec<bool> = test_x
        .iter()
        .map(|r| {
            let kept: Vec<f64> = scaler.kept.iter().map(|&i| r[i]).collect();
            model.predict(&kept)
        })
        .collect();
    let f1 = f1_score(&predictions, &test_y)?;
    let inverted_pred: Vec<bool> = predictions.iter().map(|p| !p).collect();
    let inverted_y: Vec<bool> = test_y.iter().map(|y| !y).collect();
    let f1_real = f1_score(&inverted_pred, &inverted_y)?;
    Ok(DetectorReport {
        feature_set: set,
        model,
        f1,
        macro_f1: (f1 + f1_real) / 2.0,
        n_train: train_y.len(),
        n_test: test_y.len(),
    })
}
