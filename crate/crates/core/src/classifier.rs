//! Linear softmax classifier trained by full-batch gradient descent.
//!
//! Zero-initialized and fully deterministic: the loss is mean cross-entropy
//! plus (l2/2) * ||W||^2 (bias unpenalized), accumulated in example order.

use std::fs;
use std::path::Path;

use crate::error::{Error, Result};
use crate::features::FeatureVector;

#[derive(Debug, Clone, PartialEq)]
pub struct ClassifierModel {
    /// C x D weight matrix.
    pub weights: Vec<Vec<f64>>,
    /// Length-C bias vector.
    pub bias: Vec<f64>,
    pub class_names: Vec<String>,
    pub schema: String,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrainHyper {
    pub learning_rate: f64,
    pub epochs: usize,
    pub l2: f64,
}

impl Default for TrainHyper {
    fn default() -> Self {
        TrainHyper { learning_rate: 0.5, epochs: 2000, l2: 1e-4 }
    }
}

/// Numerically stable softmax.
pub fn softmax(scores: &[f64]) -> Vec<f64> {
    let max = scores.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = scores.iter().map(|&s| (s - max).exp()).collect();
    let total: f64 = exps.iter().sum();
    exps.iter().map(|&e| e / total).collect()
}

/// Mean cross-entropy loss with L2 on the weights, and its analytic gradient.
pub fn loss_and_gradient(
    weights: &[Vec<f64>],
    bias: &[f64],
    examples: &[Vec<f64>],
    labels: &[usize],
    l2: f64,
) -> (f64, Vec<Vec<f64>>, Vec<f64>) {
    let c = weights.len();
    let d = weights[0].len();
    let m = examples.len() as f64;
    let mut grad_w = vec![vec![0.0; d]; c];
    let mut grad_b = vec![0.0; c];
    let mut loss = 0.0;
    for (x, &y) in examples.iter().zip(labels.iter()) {
        let scores: Vec<f64> = (0..c)
            .map(|k| {
                bias[k]
                    + weights[k]
                        .iter()
                        .zip(x.iter())
                        .map(|(w, xi)| w * xi)
                        .sum::<f64>()
            })
            .collect();
        let probs = softmax(&scores);
        loss -= probs[y].max(f64::MIN_POSITIVE).ln();
        for k in 0..c {
            let coef = probs[k] - if k == y { 1.0 } else { 0.0 };
            grad_b[k] += coef;
            for (g, xi) in grad_w[k].iter_mut().zip(x.iter()) {
                *g += coef * xi;
            }
        }
    }
    loss /= m;
    for k in 0..c {
        grad_b[k] /= m;
        for (g, w) in grad_w[k].iter_mut().zip(weights[k].iter()) {
            *g = *g / m + l2 * w;
        }
        loss += 0.5 * l2 * weights[k].iter().map(|w| w * w).sum::<f64>();
    }
    (loss, grad_w, grad_b)
}

#[derive(Debug)]
pub struct Training {
    pub model: ClassifierModel,
    pub loss_trace: Vec<f64>,
}

/// Train a multinomial logistic regression on labeled feature vectors.
/// `labels` index into `class_names`; every class needs at least one example.
pub fn train_classifier(
    features: &[FeatureVector],
    labels: &[usize],
    class_names: &[String],
    hyper: &TrainHyper,
) -> Result<Training> {
    let c = class_names.len();
    if c < 2 {
        return Err(Error::invalid("need at least two classes"));
    }
    if features.is_empty() || features.len() != labels.len() {
        return Err(Error::invalid("features and labels must be non-empty and aligned"));
    }
    let schema = features[0].schema.clone();
    let d = features[0].len();
    for fv in features {
        if fv.schema != schema {
            return Err(Error::SchemaMismatch { expected: schema, got: fv.schema.clone() });
        }
        if fv.values.iter().any(|v| !v.is_finite()) {
            return Err(Error::invalid("non-finite feature value"));
        }
    }
    let mut class_counts = vec![0usize; c];
    for &y in labels {
        if y >= c {
            return Err(Error::invalid(format!("label index {y} out of range for {c} classes")));
        }
        class_counts[y] += 1;
    }
    if let Some(empty) = class_counts.iter().position(|&n| n == 0) {
        return Err(Error::invalid(format!(
            "class `{}` has zero examples",
            class_names[empty]
        )));
    }

    let examples: Vec<Vec<f64>> = features.iter().map(|f| f.values.clone()).collect();
    let mut weights = vec![vec![0.0f64; d]; c];
    let mut bias = vec![0.0f64; c];
    let mut loss_trace = Vec::with_capacity(hyper.epochs);
    for epoch in 0..hyper.epochs {
        let (loss, grad_w, grad_b) = loss_and_gradient(&weights, &bias, &examples, labels, hyper.l2);
        if !loss.is_finite() {
            return Err(Error::numeric(format!("NaN loss at epoch {epoch}")));
        }
        loss_trace.push(loss);
        for k in 0..c {
            bias[k] -= hyper.learning_rate * grad_b[k];
            for (w, g) in weights[k].iter_mut().zip(grad_w[k].iter()) {
                *w -= hyper.learning_rate * g;
            }
        }
    }
    Ok(Training {
        model: ClassifierModel {
            weights,
            bias,
            class_names: class_names.to_vec(),
            schema,
        },
        loss_trace,
    })
}

impl ClassifierModel {
    pub fn num_classes(&self) -> usize {
        self.class_names.len()
    }

    /// Raw scores W x + b; rankings from these drive top-k. Softmax scoring
    /// is available on top via [`softmax`] and never changes the argmax.
    pub fn scores(&self, feature: &FeatureVector) -> Result<Vec<f64>> {
        if feature.schema != self.schema {
            return Err(Error::SchemaMismatch {
                expected: self.schema.clone(),
                got: feature.schema.clone(),
            });
        }
        Ok(self
            .weights
            .iter()
            .zip(self.bias.iter())
            .map(|(row, b)| {
                b + row
                    .iter()
                    .zip(feature.values.iter())
                    .map(|(w, x)| w * x)
                    .sum::<f64>()
            })
            .collect())
    }

    /// Model file: header `schema,C,D,<class names...>` then C rows of
    /// D weights followed by the class bias.
    pub fn to_csv(&self) -> String {
        let c = self.num_classes();
        let d = self.weights[0].len();
        let mut out = format!("{},{},{}", self.schema, c, d);
        for name in &self.class_names {
            out.push(',');
            out.push_str(name);
        }
        out.push('\n');
        for (row, b) in self.weights.iter().zip(self.bias.iter()) {
            let mut cells: Vec<String> = row.iter().map(|w| w.to_string()).collect();
            cells.push(b.to_string());
            out.push_str(&cells.join(","));
            out.push('\n');
        }
        out
    }

    pub fn from_csv(text: &str) -> Result<Self> {
        let mut lines = text.lines();
        let header = lines.next().ok_or_else(|| Error::format("empty model file"))?;
        let cells: Vec<&str> = header.split(',').collect();
        if cells.len() < 3 {
            return Err(Error::format("model header needs schema, C, D"));
        }
        let schema = cells[0].to_string();
        let c: usize = cells[1].parse().map_err(|_| Error::format("bad class count"))?;
        let d: usize = cells[2].parse().map_err(|_| Error::format("bad dimension"))?;
        if cells.len() != 3 + c {
            return Err(Error::format(format!(
                "model header lists {} class names, expected {c}",
                cells.len() - 3
            )));
        }
        let class_names: Vec<String> = cells[3..].iter().map(|s| s.to_string()).collect();
        let mut weights = Vec::with_capacity(c);
        let mut bias = Vec::with_capacity(c);
        for _ in 0..c {
            let line = lines.next().ok_or_else(|| Error::format("truncated model file"))?;
            let row: Vec<f64> = line
                .split(',')
                .map(|s| s.parse::<f64>().map_err(|_| Error::format("bad weight value")))
                .collect::<Result<_>>()?;
            if row.len() != d + 1 {
                return Err(Error::format(format!(
                    "model row has {} values, expected {}",
                    row.len(),
                    d + 1
                )));
            }
            bias.push(row[d]);
            weights.push(row[..d].to_vec());
        }
        Ok(ClassifierModel { weights, bias, class_names, schema })
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        fs::write(path, self.to_csv())?;
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_csv(&fs::read_to_string(path)?)
    }
}

/// Fraction of examples whose true label ranks among the k highest scores.
/// Ties break toward the lower class index.
pub fn topk_accuracy(predictions: &[Vec<f64>], labels: &[usize], k: usize) -> Result<f64> {
    if predictions.is_empty() || predictions.len() != labels.len() {
        return Err(Error::invalid("predictions and labels must be non-empty and aligned"));
    }
    let c = predictions[0].len();
    if k == 0 || k > c {
        return Err(Error::invalid(format!("k {k} out of range for {c} classes")));
    }
    let mut hits = 0usize;
    for (scores, &y) in predictions.iter().zip(labels.iter()) {
        let better = scores
            .iter()
            .enumerate()
            .filter(|&(i, &s)| s > scores[y] || (s == scores[y] && i < y))
            .count();
        if better < k {
            hits += 1;
        }
    }
    Ok(hits as f64 / predictions.len() as f64)
}
