//! Multinomial logistic regression, the software baseline the spiking
//! circuit is compared with.

use serde::{Deserialize, Serialize};

use crate::dataset::{split, Dataset, Posture, PostureSample};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LogisticConfig {
    pub learning_rate: f64,
    pub epochs: usize,
    pub l2: f64,
}

impl Default for LogisticConfig {
    fn default() -> Self {
        Self {
            learning_rate: 0.5,
            epochs: 2000,
            l2: 0.0,
        }
    }
}

/// Softmax classifier over standardized (pitch, roll).
#[derive(Debug, Clone, PartialEq)]
pub struct LogisticModel {
    classes: Vec<Posture>,
    mean: [f64; 2],
    scale: [f64; 2],
    /// Per class: two feature weights then the intercept.
    weights: Vec<[f64; 3]>,
}

impl LogisticModel {
    pub fn fit(train: &Dataset, cfg: &LogisticConfig) -> Result<Self> {
        if train.is_empty() {
            return Err(Error::InvalidArgument("cannot fit on an empty dataset".into()));
        }
        let classes = train.classes();
        let n = train.len() as f64;
        let mut mean = [0.0; 2];
        let mut scale = [0.0; 2];
        for axis in 0..2 {
            mean[axis] = train.samples.iter().map(|s| s.features()[axis]).sum::<f64>() / n;
            let var = train
                .samples
                .iter()
                .map(|s| (s.features()[axis] - mean[axis]).powi(2))
                .sum::<f64>()
                / n;
            scale[axis] = if var > 0.0 { var.sqrt() } else { 1.0 };
        }
        let mut model = Self {
            weights: vec![[0.0; 3]; classes.len()],
            classes,
            mean,
            scale,
        };
        let rows: Vec<([f64; 3], usize)> = train
            .samples
            .iter()
            .map(|s| {
                let k = model.classes.iter().position(|c| *c == s.label).expect("class present");
                (model.design_row(s), k)
            })
            .collect();

        for epoch in 0..cfg.epochs {
            let mut grad = vec![[0.0; 3]; model.classes.len()];
            let mut loss = 0.0;
            for (x, k) in &rows {
                let p = model.probabilities(x);
                if p[*k].is_nan() {
                    return Err(Error::TrainingDiverged { epoch });
                }
                loss -= p[*k].max(f64::MIN_POSITIVE).ln();
                for (c, g) in grad.iter_mut().enumerate() {
                    let err = p[c] - if c == *k { 1.0 } else { 0.0 };
                    for j in 0..3 {
                        g[j] += err * x[j];
                    }
                }
            }
            if !loss.is_finite() {
                return Err(Error::TrainingDiverged { epoch });
            }
            for (w, g) in model.weights.iter_mut().zip(&grad) {
                for j in 0..3 {
                    let decay = if j < 2 { cfg.l2 * w[j] } else { 0.0 };
                    w[j] -= cfg.learning_rate * (g[j] / n + decay);
                }
            }
        }
        Ok(model)
    }

    fn design_row(&self, s: &PostureSample) -> [f64; 3] {
        let f = s.features();
        [
            (f[0] - self.mean[0]) / self.scale[0],
            (f[1] - self.mean[1]) / self.scale[1],
            1.0,
        ]
    }

    fn probabilities(&self, x: &[f64; 3]) -> Vec<f64> {
        let logits: Vec<f64> = self
            .weights
            .iter()
            .map(|w| w.iter().zip(x).map(|(a, b)| a * b).sum())
            .collect();
        let top = logits.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let exps: Vec<f64> = logits.iter().map(|z| (z - top).exp()).collect();
        let total: f64 = exps.iter().sum();
        exps.into_iter().map(|e| e / total).collect()
    }

    pub fn classes(&self) -> &[Posture] {
        &self.classes
    }

    pub fn predict(&self, pitch: f64, roll: f64) -> Posture {
        let p = self.probabilities(&self.design_row(&PostureSample::new(pitch, roll, Posture::Stand)));
        let mut best = 0;
        for (i, v) in p.iter().enumerate() {
            if *v > p[best] {
                best = i;
            }
        }
        self.classes[best]
    }

    pub fn accuracy(&self, data: &Dataset) -> Result<f64> {
        if data.is_empty() {
            return Err(Error::InvalidArgument("accuracy of an empty dataset".into()));
        }
        let hits = data
            .samples
            .iter()
            .filter(|s| self.predict(s.pitch, s.roll) == s.label)
            .count();
        Ok(hits as f64 / data.len() as f64)
    }
}

pub const BASELINE_TRAIN_FRACTION: f64 = 0.8;

/// Splits `dataset` 80/20 with `seed`, fits on the training side and
/// returns the model with its held-out accuracy. A dataset too small to
/// leave a test side is scored on itself.
pub fn train_logistic_baseline(dataset: &Dataset, seed: u64) -> Result<(LogisticModel, f64)> {
    if dataset.is_empty() {
        return Err(Error::InvalidArgument("cannot fit on an empty dataset".into()));
    }
    let (train, test) = split(dataset, BASELINE_TRAIN_FRACTION, seed)?;
    let (train, test) = if train.is_empty() || test.is_empty() {
        (dataset.clone(), dataset.clone())
    } else {
        (train, test)
    };
    let model = LogisticModel::fit(&train, &LogisticConfig::default())?;
    let acc = model.accuracy(&test)?;
    Ok((model, acc))
}
