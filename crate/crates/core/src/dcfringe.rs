//! Iterated DC-Fringe feature construction.
//!
//! Each round learns a pruned tree on the current data. Every leaf at depth
//! two or more contributes the conjunction and the disjunction of the last
//! two tests on its path. New columns are appended as `{0,1}` attributes
//! and the loop repeats until the tree stops changing or the cap is hit.
//!
//! Candidates are dropped when their column is constant, equal to (or the
//! complement of) an operand's indicator, or equal to (or the complement
//! of) a column already constructed. A column and its complement induce the
//! same split, so keeping both would only add noise.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::data::{Attribute, Dataset, Instance, Value};
use crate::error::{Error, Result};
use crate::learners::train_tree;
use crate::tree::AttributeTest;

pub const DEFAULT_MAX_ITERATIONS: usize = 100;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Combinator {
    And,
    Or,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FringeFeature {
    /// Column name of the constructed attribute.
    pub name: String,
    pub combinator: Combinator,
    /// Tests on columns that precede this feature in the augmented schema.
    pub operands: [AttributeTest; 2],
    /// Round (1-based) in which the feature was built.
    pub iteration: usize,
}

impl FringeFeature {
    pub fn evaluate(&self, instance: &Instance) -> bool {
        let [a, b] = &self.operands;
        match self.combinator {
            Combinator::And => a.matches(instance) && b.matches(instance),
            Combinator::Or => a.matches(instance) || b.matches(instance),
        }
    }

    /// `(a<=2 AND c=red)`; `dataset` must contain the operand columns.
    pub fn render(&self, dataset: &Dataset) -> String {
        let word = match self.combinator {
            Combinator::And => "AND",
            Combinator::Or => "OR",
        };
        format!(
            "({} {} {})",
            self.operands[0].render(dataset),
            word,
            self.operands[1].render(dataset)
        )
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StopReason {
    /// The tree learned this round equals the previous one.
    TreeRepeated,
    /// The tree offered no usable candidate, so the data and hence the
    /// next tree would be unchanged.
    NoNewFeatures,
    IterationCap,
}

#[derive(Clone, Debug, PartialEq)]
pub struct FringeResult {
    pub features: Vec<FringeFeature>,
    /// Input plus one column per feature, in construction order.
    pub dataset: Dataset,
    /// Number of trees learned.
    pub iterations: usize,
    pub stop_reason: StopReason,
    /// Cumulative feature count after each round.
    pub feature_counts: Vec<usize>,
}

fn binary_attribute(name: String) -> Attribute {
    Attribute::nominal(name, ["0", "1"])
}

fn indicator(b: bool) -> Value {
    Value::Nominal(u32::from(b))
}

fn fresh_name(dataset: &Dataset, taken: &BTreeSet<String>, counter: &mut usize) -> String {
    loop {
        *counter += 1;
        let name = format!("dcf_{}", counter);
        if !taken.contains(&name) && dataset.attributes().iter().all(|a| a.name != name) {
            return name;
        }
    }
}

/// True iff the two columns are equal or complementary.
fn same_split(a: &[bool], b: &[bool]) -> bool {
    a == b || a.iter().zip(b).all(|(x, y)| x != y)
}

/// Runs the construction loop on `dataset` with at most `max_iterations`
/// trees.
pub fn dc_fringe(dataset: &Dataset, max_iterations: usize) -> Result<FringeResult> {
    if max_iterations == 0 {
        return Err(Error::Config("max_iterations must be at least 1".into()));
    }
    let mut current = dataset.clone();
    let mut features: Vec<FringeFeature> = Vec::new();
    let mut columns: Vec<Vec<bool>> = Vec::new();
    let mut names = BTreeSet::new();
    let mut counter = 0;
    let mut previous: Option<String> = None;
    let mut feature_counts = Vec::new();

    for iteration in 1..=max_iterations {
        let tree = train_tree(&current).root;
        let signature = tree.signature();
        if previous.as_ref() == Some(&signature) {
            feature_counts.push(features.len());
            return Ok(FringeResult {
                features,
                dataset: current,
                iterations: iteration,
                stop_reason: StopReason::TreeRepeated,
                feature_counts,
            });
        }
        previous = Some(signature);

        let mut seen_defs: BTreeSet<(Combinator, AttributeTest, AttributeTest)> = features
            .iter()
            .map(|f| (f.combinator, f.operands[0], f.operands[1]))
            .collect();
        let mut new_features = Vec::new();
        let mut new_columns: Vec<Vec<bool>> = Vec::new();
        for (path, _) in tree.leaf_paths() {
            if path.len() < 2 {
                continue;
            }
            let (mut a, mut b) = (path[path.len() - 2], path[path.len() - 1]);
            if a == b {
                continue;
            }
            if b < a {
                std::mem::swap(&mut a, &mut b);
            }
            let col_a: Vec<bool> = current.instances().iter().map(|i| a.matches(i)).collect();
            let col_b: Vec<bool> = current.instances().iter().map(|i| b.matches(i)).collect();
            for combinator in [Combinator::And, Combinator::Or] {
                if !seen_defs.insert((combinator, a, b)) {
                    continue;
                }
                let column: Vec<bool> = col_a
                    .iter()
                    .zip(&col_b)
                    .map(|(&x, &y)| match combinator {
                        Combinator::And => x && y,
                        Combinator::Or => x || y,
                    })
                    .collect();
                let constant = column.iter().all(|&v| v == column[0]);
                if constant
                    || same_split(&column, &col_a)
                    || same_split(&column, &col_b)
                    || columns.iter().chain(&new_columns).any(|c| same_split(c, &column))
                {
                    continue;
                }
                let name = fresh_name(&current, &names, &mut counter);
                names.insert(name.clone());
                new_features.push(FringeFeature {
                    name,
                    combinator,
                    operands: [a, b],
                    iteration,
                });
                new_columns.push(column);
            }
        }

        if new_features.is_empty() {
            feature_counts.push(features.len());
            return Ok(FringeResult {
                features,
                dataset: current,
                iterations: iteration,
                stop_reason: StopReason::NoNewFeatures,
                feature_counts,
            });
        }
        let attrs = new_features.iter().map(|f| binary_attribute(f.name.clone())).collect();
        let values = new_columns
            .iter()
            .map(|c| c.iter().map(|&b| indicator(b)).collect())
            .collect();
        current = current.with_columns(attrs, values)?;
        features.extend(new_features);
        columns.extend(new_columns);
        feature_counts.push(features.len());
    }

    Ok(FringeResult {
        features,
        dataset: current,
        iterations: max_iterations,
        stop_reason: StopReason::IterationCap,
        feature_counts,
    })
}

/// Appends the constructed columns to data with the schema the loop
/// started from, one feature at a time so later features can read earlier
/// ones.
pub fn apply(features: &[FringeFeature], dataset: &Dataset) -> Result<Dataset> {
    let mut current = dataset.clone();
    for f in features {
        let column = current.instances().iter().map(|i| indicator(f.evaluate(i))).collect();
        current = current.with_columns(vec![binary_attribute(f.name.clone())], vec![column])?;
    }
    Ok(current)
}

/// JSON form of a constructed feature.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FringeRecord {
    pub name: String,
    pub rule: String,
    pub combinator: Combinator,
    pub iteration: usize,
}

/// `augmented` must hold every column the features refer to.
pub fn records(features: &[FringeFeature], augmented: &Dataset) -> Vec<FringeRecord> {
    features
        .iter()
        .map(|f| FringeRecord {
            name: f.name.clone(),
            rule: f.render(augmented),
            combinator: f.combinator,
            iteration: f.iteration,
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::learners::accuracy;
    use crate::tree::{grow_tree, GrowParams, TreeNode};
    use proptest::prelude::*;

    fn nominal_xor(copies: usize) -> Dataset {
        let attrs = vec![Attribute::nominal("a", ["0", "1"]), Attribute::nominal("b", ["0", "1"])];
        let mut instances = Vec::new();
        for c in 0..copies {
            for (i, (a, b)) in [(0u32, 0u32), (0, 1), (1, 0), (1, 1)].into_iter().enumerate() {
                instances.push(Instance {
                    id: c * 4 + i,
                    values: vec![Value::Nominal(a), Value::Nominal(b)],
                    label: (a ^ b) as usize,
                });
            }
        }
        Dataset::new("xor", attrs, Attribute::nominal("class", ["even", "odd"]), instances).unwrap()
    }

    fn random_numeric(points: &[(f64, f64, usize)]) -> Dataset {
        let instances = points
            .iter()
            .enumerate()
            .map(|(id, &(x, y, label))| Instance {
                id,
                values: vec![Value::Numeric(x), Value::Numeric(y)],
                label,
            })
            .collect();
        Dataset::new(
            "r",
            vec![Attribute::numeric("x"), Attribute::numeric("y")],
            Attribute::nominal("class", ["p", "q"]),
            instances,
        )
        .unwrap()
    }

    /// Training accuracy of the best single-split tree on attribute `a`.
    fn best_stump_accuracy(ds: &Dataset, a: usize) -> f64 {
        let mut best = 0.0f64;
        let attr = &ds.attributes()[a];
        if let Some(domain) = attr.values() {
            // Every labeling of the branches: each value predicts its
            // majority class.
            let mut counts = vec![vec![0usize; ds.class_labels().len()]; domain.len()];
            for inst in ds.instances() {
                if let Value::Nominal(v) = inst.values[a] {
                    counts[v as usize][inst.label] += 1;
                }
            }
            let correct: usize = counts.iter().map(|c| c.iter().copied().max().unwrap_or(0)).sum();
            best = best.max(100.0 * correct as f64 / ds.len() as f64);
        }
        best
    }

    #[test]
    fn stump_yields_nothing() {
        let points: Vec<(f64, f64, usize)> = (0..20).map(|i| (i as f64, 0.0, usize::from(i >= 10))).collect();
        let ds = random_numeric(&points);
        let r = dc_fringe(&ds, DEFAULT_MAX_ITERATIONS).unwrap();
        assert!(r.features.is_empty());
        assert_eq!(r.iterations, 1);
        assert_eq!(r.stop_reason, StopReason::NoNewFeatures);
        assert_eq!(r.dataset, ds);
    }

    #[test]
    fn xor_gets_a_conjunction_that_splits_at_depth_one() {
        let ds = nominal_xor(4);
        let first = dc_fringe(&ds, 1).unwrap();
        assert!(!first.features.is_empty());
        assert!(first.features.iter().any(|f| f.combinator == Combinator::And));
        let n = ds.attributes().len();
        // Exhaustively over depth-1 trees: originals stay at chance, a
        // round-one conjunction reaches 3 of 4 cells.
        for a in 0..n {
            assert_eq!(best_stump_accuracy(&first.dataset, a), 50.0);
        }
        let best_new = (n..first.dataset.attributes().len())
            .map(|a| best_stump_accuracy(&first.dataset, a))
            .fold(0.0, f64::max);
        assert_eq!(best_new, 75.0);
        let ids: Vec<usize> = first.dataset.ids().collect();
        match grow_tree(&first.dataset, &ids, GrowParams { min_instances: 2 }) {
            TreeNode::Split { attribute, .. } => assert!(attribute >= n),
            TreeNode::Leaf { .. } => panic!("expected a split"),
        }
        // Later rounds combine conjunctions into the parity itself.
        let full = dc_fringe(&ds, DEFAULT_MAX_ITERATIONS).unwrap();
        let best_full = (n..full.dataset.attributes().len())
            .map(|a| best_stump_accuracy(&full.dataset, a))
            .fold(0.0, f64::max);
        assert_eq!(best_full, 100.0);
        assert_eq!(accuracy(&train_tree(&full.dataset), &full.dataset), 100.0);
    }

    #[test]
    fn repeated_tree_stops_the_loop() {
        let ds = nominal_xor(4);
        let r = dc_fringe(&ds, DEFAULT_MAX_ITERATIONS).unwrap();
        assert!(matches!(r.stop_reason, StopReason::TreeRepeated | StopReason::NoNewFeatures));
        assert!(r.iterations >= 2);
        // Re-running on the final data adds nothing.
        let again = dc_fringe(&r.dataset, DEFAULT_MAX_ITERATIONS).unwrap();
        assert!(again.features.is_empty() || again.stop_reason != StopReason::IterationCap);
    }

    #[test]
    fn cap_is_respected() {
        let ds = nominal_xor(4);
        let r = dc_fringe(&ds, 1).unwrap();
        assert_eq!(r.iterations, 1);
        assert_eq!(r.stop_reason, StopReason::IterationCap);
        assert!(dc_fringe(&ds, 0).is_err());
    }

    #[test]
    fn apply_reproduces_training_columns() {
        let ds = nominal_xor(4);
        let r = dc_fringe(&ds, DEFAULT_MAX_ITERATIONS).unwrap();
        assert_eq!(apply(&r.features, &ds).unwrap(), r.dataset);
        let rec = records(&r.features, &r.dataset);
        assert_eq!(rec.len(), r.features.len());
        assert!(rec[0].rule.starts_with('('));
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]

        #[test]
        fn columns_match_operands(points in prop::collection::vec((0.0..10.0f64, 0.0..10.0f64, 0usize..2), 8..40)) {
            let labels: BTreeSet<usize> = points.iter().map(|p| p.2).collect();
            prop_assume!(labels.len() == 2);
            let ds = random_numeric(&points);
            let r = dc_fringe(&ds, 10).unwrap();
            prop_assert!(r.iterations <= 10);
            prop_assert!(r.feature_counts.windows(2).all(|w| w[0] <= w[1]));
            let base = ds.attributes().len();
            for (j, f) in r.features.iter().enumerate() {
                prop_assert!(f.operands[0] != f.operands[1]);
                prop_assert!(f.operands.iter().all(|t| t.attribute < base + j));
                for inst in r.dataset.instances() {
                    let a = f.operands[0].matches(inst);
                    let b = f.operands[1].matches(inst);
                    let want = match f.combinator { Combinator::And => a && b, Combinator::Or => a || b };
                    prop_assert_eq!(inst.values[base + j], indicator(want));
                }
            }
        }
    }
}
