//! Evaluation classifiers: naive Bayes and a pruned C4.5-style tree.

use serde::{Deserialize, Serialize};

use crate::data::{AttributeKind, Dataset, Instance, Value};
use crate::tree::{grow_tree, prune, GrowParams, TreeNode};

pub trait Classifier: Send + Sync {
    /// Index of the predicted class label.
    fn predict(&self, instance: &Instance) -> usize;
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LearnerKind {
    #[serde(rename = "nb")]
    NaiveBayes,
    Tree,
}

impl LearnerKind {
    pub fn fit(&self, train: &Dataset) -> Box<dyn Classifier> {
        match self {
            LearnerKind::NaiveBayes => Box::new(train_nb(train)),
            LearnerKind::Tree => Box::new(train_tree(train)),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            LearnerKind::NaiveBayes => "nb",
            LearnerKind::Tree => "tree",
        }
    }
}

/// Percentage of `dataset` the classifier labels correctly.
pub fn accuracy(model: &dyn Classifier, dataset: &Dataset) -> f64 {
    if dataset.is_empty() {
        return 0.0;
    }
    let correct = dataset
        .instances()
        .iter()
        .filter(|i| model.predict(i) == i.label)
        .count();
    100.0 * correct as f64 / dataset.len() as f64
}

pub const VARIANCE_FLOOR: f64 = 1e-9;

#[derive(Clone, Debug, PartialEq)]
enum AttributeModel {
    Gaussian { mean: Vec<f64>, variance: Vec<f64> },
    /// Log of the add-one smoothed value frequencies, `[class][value]`.
    Categorical { log_probs: Vec<Vec<f64>> },
}

#[derive(Clone, Debug, PartialEq)]
pub struct NaiveBayesModel {
    priors: Vec<f64>,
    attributes: Vec<AttributeModel>,
}

fn mean_variance(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let var = xs.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / n;
    (mean, var.max(VARIANCE_FLOOR))
}

/// Gaussian likelihoods for numeric attributes, Laplace-smoothed frequency
/// tables for nominal ones, maximum-likelihood priors. Missing values are
/// skipped attribute by attribute.
pub fn train_nb(train: &Dataset) -> NaiveBayesModel {
    let n_classes = train.class_labels().len();
    let counts = train.class_counts();
    let total = train.len().max(1) as f64;
    let priors = counts.iter().map(|&c| c as f64 / total).collect();

    let attributes = train
        .attributes()
        .iter()
        .enumerate()
        .map(|(a, attr)| match &attr.kind {
            AttributeKind::Numeric => {
                let mut per_class: Vec<Vec<f64>> = vec![Vec::new(); n_classes];
                for inst in train.instances() {
                    if let Value::Numeric(x) = inst.values[a] {
                        per_class[inst.label].push(x);
                    }
                }
                let all: Vec<f64> = per_class.iter().flatten().copied().collect();
                // A class without observed values falls back to the pooled estimate.
                let pooled = if all.is_empty() { (0.0, 1.0) } else { mean_variance(&all) };
                let (mean, variance) = per_class
                    .iter()
                    .map(|xs| if xs.is_empty() { pooled } else { mean_variance(xs) })
                    .unzip();
                AttributeModel::Gaussian { mean, variance }
            }
            AttributeKind::Nominal(domain) => {
                let mut table = vec![vec![0usize; domain.len()]; n_classes];
                for inst in train.instances() {
                    if let Value::Nominal(v) = inst.values[a] {
                        table[inst.label][v as usize] += 1;
                    }
                }
                let log_probs = table
                    .iter()
                    .map(|row| {
                        let denom = (row.iter().sum::<usize>() + domain.len()) as f64;
                        row.iter().map(|&c| ((c + 1) as f64 / denom).ln()).collect()
                    })
                    .collect();
                AttributeModel::Categorical { log_probs }
            }
        })
        .collect();

    NaiveBayesModel { priors, attributes }
}

impl NaiveBayesModel {
    /// Unnormalized log posterior per class.
    pub fn log_scores(&self, instance: &Instance) -> Vec<f64> {
        (0..self.priors.len())
            .map(|c| {
                let mut s = self.priors[c].ln();
                for (model, value) in self.attributes.iter().zip(&instance.values) {
                    match (model, value) {
                        (AttributeModel::Gaussian { mean, variance }, Value::Numeric(x)) => {
                            let v = variance[c];
                            let d = x - mean[c];
                            s += -0.5 * (2.0 * std::f64::consts::PI * v).ln() - d * d / (2.0 * v);
                        }
                        (AttributeModel::Categorical { log_probs }, Value::Nominal(i)) => {
                            s += log_probs[c][*i as usize];
                        }
                        _ => {}
                    }
                }
                s
            })
            .collect()
    }

    /// Normalized class posteriors.
    pub fn posteriors(&self, instance: &Instance) -> Vec<f64> {
        let scores = self.log_scores(instance);
        let max = scores.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let exp: Vec<f64> = scores.iter().map(|s| (s - max).exp()).collect();
        let z: f64 = exp.iter().sum();
        exp.into_iter().map(|e| e / z).collect()
    }

    pub fn priors(&self) -> &[f64] {
        &self.priors
    }
}

impl Classifier for NaiveBayesModel {
    /// Highest log posterior; ties go to the earlier class.
    fn predict(&self, instance: &Instance) -> usize {
        let scores = self.log_scores(instance);
        let mut best = 0;
        for (c, &s) in scores.iter().enumerate() {
            if s > scores[best] {
                best = c;
            }
        }
        best
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct PrunedTreeModel {
    pub root: TreeNode,
}

/// Grows with at least two instances on two branches of every split, then
/// applies pessimistic-error subtree replacement at confidence 0.25.
pub fn train_tree(train: &Dataset) -> PrunedTreeModel {
    let ids: Vec<usize> = train.ids().collect();
    let root = grow_tree(train, &ids, GrowParams { min_instances: 2 });
    PrunedTreeModel { root: prune(root) }
}

impl Classifier for PrunedTreeModel {
    fn predict(&self, instance: &Instance) -> usize {
        self.root.predict(instance)
    }
}
