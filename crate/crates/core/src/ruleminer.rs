//! Discriminative rule mining on merged neighborhoods.
//!
//! Each neighborhood gets an unpruned tree grown down to single instances.
//! Every root-to-leaf path becomes a conjunctive feature; features are kept
//! when they are consistent on the neighborhood, reach the minimum support
//! on the whole training set and were not seen before.

use std::collections::{BTreeMap, BTreeSet};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::data::{Dataset, Instance};
use crate::neighborhood::Neighborhood;
use crate::tree::{grow_tree, AttributeTest, GrowParams, TestOp, TreeNode};

/// Canonical form of a conjunction: sorted tests, at most one lower and one
/// upper bound per numeric attribute (the tighter wins), duplicates removed.
/// Returns `None` for conjunctions no instance can satisfy on account of
/// contradictory tests on one attribute.
pub fn canonicalize(tests: &[AttributeTest]) -> Option<Vec<AttributeTest>> {
    let mut by_attr: BTreeMap<usize, Vec<TestOp>> = BTreeMap::new();
    for t in tests {
        by_attr.entry(t.attribute).or_default().push(t.op);
    }
    let mut out = Vec::with_capacity(tests.len());
    for (attribute, ops) in by_attr {
        let mut upper: Option<f64> = None;
        let mut lower: Option<f64> = None;
        let mut equals: Option<u32> = None;
        let mut missing = false;
        for op in ops {
            match op {
                TestOp::LessEq(t) => upper = Some(upper.map_or(t, |u| u.min(t))),
                TestOp::Greater(t) => lower = Some(lower.map_or(t, |l| l.max(t))),
                TestOp::Equals(v) => {
                    if equals.is_some_and(|e| e != v) {
                        return None;
                    }
                    equals = Some(v);
                }
                TestOp::IsMissing => missing = true,
            }
        }
        let has_value_test = upper.is_some() || lower.is_some() || equals.is_some();
        if missing && has_value_test {
            return None;
        }
        if let (Some(l), Some(u)) = (lower, upper) {
            if l >= u {
                return None;
            }
        }
        if let Some(u) = upper {
            out.push(AttributeTest::new(attribute, TestOp::LessEq(u)));
        }
        if let Some(l) = lower {
            out.push(AttributeTest::new(attribute, TestOp::Greater(l)));
        }
        if let Some(v) = equals {
            out.push(AttributeTest::new(attribute, TestOp::Equals(v)));
        }
        if missing {
            out.push(AttributeTest::new(attribute, TestOp::IsMissing));
        }
    }
    Some(out)
}

/// A conjunction of attribute tests used as a 0/1 feature.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConjunctiveFeature {
    /// Canonical, see [`canonicalize`].
    pub tests: Vec<AttributeTest>,
    /// Outlier ids of the neighborhood the feature was mined from.
    pub origin: Vec<usize>,
    /// Majority label of the leaf the rule came from.
    pub predicted_class: String,
}

impl ConjunctiveFeature {
    pub fn new(tests: &[AttributeTest], origin: Vec<usize>, predicted_class: impl Into<String>) -> Option<Self> {
        Some(ConjunctiveFeature {
            tests: canonicalize(tests)?,
            origin,
            predicted_class: predicted_class.into(),
        })
    }

    pub fn matches(&self, instance: &Instance) -> bool {
        self.tests.iter().all(|t| t.matches(instance))
    }

    /// Rule text such as `a<=2.5 AND color=red`; `TRUE` for the empty
    /// conjunction.
    pub fn render(&self, dataset: &Dataset) -> String {
        if self.tests.is_empty() {
            return "TRUE".to_string();
        }
        self.tests
            .iter()
            .map(|t| t.render(dataset))
            .collect::<Vec<_>>()
            .join(" AND ")
    }

    pub fn to_record(&self, dataset: &Dataset) -> FeatureRecord {
        FeatureRecord {
            name: feature_name(self, dataset),
            rule: self.render(dataset),
            tests: self
                .tests
                .iter()
                .map(|t| {
                    let attr = &dataset.attributes()[t.attribute];
                    let operand = match t.op {
                        TestOp::LessEq(x) | TestOp::Greater(x) => serde_json::json!(x),
                        TestOp::Equals(v) => serde_json::json!(attr.values().map_or("", |d| d[v as usize].as_str())),
                        TestOp::IsMissing => serde_json::json!("?"),
                    };
                    TestRecord {
                        attr: attr.name.clone(),
                        op: t.op.symbol().to_string(),
                        operand,
                    }
                })
                .collect(),
            origin: self.origin.clone(),
            predicted_class: self.predicted_class.clone(),
        }
    }
}

/// JSON form of a feature with attribute names resolved.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FeatureRecord {
    pub name: String,
    pub rule: String,
    pub tests: Vec<TestRecord>,
    pub origin: Vec<usize>,
    pub predicted_class: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TestRecord {
    pub attr: String,
    pub op: String,
    pub operand: serde_json::Value,
}

/// Column name `f_<hash>` derived from the rule text.
pub fn feature_name(feature: &ConjunctiveFeature, dataset: &Dataset) -> String {
    use sha2::{Digest, Sha256};
    let digest = Sha256::digest(feature.render(dataset).as_bytes());
    let hex: String = digest.iter().take(4).map(|b| format!("{:02x}", b)).collect();
    format!("f_{}", hex)
}

/// One feature per leaf, tests taken from the root-to-leaf path.
pub fn extract_rules(tree: &TreeNode, dataset: &Dataset, origin: &[usize]) -> Vec<ConjunctiveFeature> {
    tree.leaf_paths()
        .into_iter()
        .filter_map(|(path, leaf)| ConjunctiveFeature::new(&path, origin.to_vec(), dataset.label_name(leaf.majority())))
        .collect()
}

/// Ids among `ids` that the feature matches.
pub fn cover<I: IntoIterator<Item = usize>>(feature: &ConjunctiveFeature, ids: I, dataset: &Dataset) -> BTreeSet<usize> {
    ids.into_iter()
        .filter(|&id| dataset.instance(id).is_some_and(|inst| feature.matches(inst)))
        .collect()
}

pub fn support(feature: &ConjunctiveFeature, dataset: &Dataset) -> usize {
    dataset.instances().iter().filter(|i| feature.matches(i)).count()
}

/// True iff every instance of `neighborhood` covered by the feature has the
/// same label.
pub fn is_consistent(feature: &ConjunctiveFeature, neighborhood: &BTreeSet<usize>, dataset: &Dataset) -> bool {
    let mut labels = cover(feature, neighborhood.iter().copied(), dataset)
        .into_iter()
        .filter_map(|id| dataset.label_of(id));
    match labels.next() {
        None => true,
        Some(first) => labels.all(|l| l == first),
    }
}

/// Keeps non-empty, consistent features with support at least
/// `min_support` on `dataset`, dropping repeated canonical forms.
pub fn filter_features(
    features: Vec<ConjunctiveFeature>,
    neighborhood: &BTreeSet<usize>,
    dataset: &Dataset,
    min_support: usize,
) -> Vec<ConjunctiveFeature> {
    let mut seen = BTreeSet::new();
    features
        .into_iter()
        .filter(|f| {
            !f.tests.is_empty()
                && is_consistent(f, neighborhood, dataset)
                && support(f, dataset) >= min_support
                && seen.insert(f.tests.clone())
        })
        .collect()
}

/// Mines every neighborhood and returns the union of the surviving
/// features, each canonical form once (first neighborhood wins), sorted by
/// canonical form.
pub fn mine(neighborhoods: &[Neighborhood], dataset: &Dataset, min_support: usize) -> Vec<ConjunctiveFeature> {
    let per_neighborhood: Vec<Vec<ConjunctiveFeature>> = neighborhoods
        .par_iter()
        .map(|n| {
            let instances = n.mining_set();
            let ids: Vec<usize> = instances.iter().copied().collect();
            let tree = grow_tree(dataset, &ids, GrowParams::UNPRUNED);
            let origin: Vec<usize> = n.sources.iter().copied().collect();
            filter_features(extract_rules(&tree, dataset, &origin), &instances, dataset, min_support)
        })
        .collect();

    let mut kept: BTreeMap<Vec<AttributeTest>, ConjunctiveFeature> = BTreeMap::new();
    for f in per_neighborhood.into_iter().flatten() {
        kept.entry(f.tests.clone()).or_insert(f);
    }
    kept.into_values().collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::{Attribute, Value};
    use crate::tree::TreeNode;
    use proptest::prelude::*;

    fn numeric(values: &[(f64, f64, usize)]) -> Dataset {
        let instances = values
            .iter()
            .enumerate()
            .map(|(id, &(x, y, label))| Instance {
                id,
                values: vec![Value::Numeric(x), Value::Numeric(y)],
                label,
            })
            .collect();
        Dataset::new(
            "num",
            vec![Attribute::numeric("x"), Attribute::numeric("y")],
            Attribute::nominal("class", ["p", "q"]),
            instances,
        )
        .unwrap()
    }

    fn le(a: usize, t: f64) -> AttributeTest {
        AttributeTest::new(a, TestOp::LessEq(t))
    }
    fn gt(a: usize, t: f64) -> AttributeTest {
        AttributeTest::new(a, TestOp::Greater(t))
    }

    #[test]
    fn single_leaf_gives_empty_rule() {
        let ds = numeric(&[(1.0, 0.0, 0), (2.0, 0.0, 0)]);
        let tree = grow_tree(&ds, &[0, 1], GrowParams::UNPRUNED);
        let rules = extract_rules(&tree, &ds, &[]);
        assert_eq!(rules.len(), 1);
        assert!(rules[0].tests.is_empty());
        assert_eq!(cover(&rules[0], ds.ids(), &ds).len(), 2);
        assert_eq!(rules[0].render(&ds), "TRUE");
    }

    #[test]
    fn stump_rules() {
        let ds = numeric(&[(1.0, 0.0, 0), (3.0, 0.0, 1)]);
        let tree = grow_tree(&ds, &[0, 1], GrowParams::UNPRUNED);
        let rules = extract_rules(&tree, &ds, &[]);
        let tests: Vec<_> = rules.iter().map(|r| r.tests.clone()).collect();
        assert_eq!(tests, vec![vec![le(0, 2.0)], vec![gt(0, 2.0)]]);
        assert_eq!(rules[0].render(&ds), "x<=2");
        assert_eq!(cover(&rules[0], ds.ids(), &ds), BTreeSet::from([0]));
    }

    #[test]
    fn bounds_tighten() {
        assert_eq!(canonicalize(&[le(0, 5.0), le(0, 3.0)]), Some(vec![le(0, 3.0)]));
        assert_eq!(
            canonicalize(&[gt(1, 0.5), le(0, 3.0), gt(1, 1.5)]),
            Some(vec![le(0, 3.0), gt(1, 1.5)])
        );
        let eq = |v| AttributeTest::new(2, TestOp::Equals(v));
        assert_eq!(canonicalize(&[eq(0), eq(1)]), None);
        assert_eq!(canonicalize(&[eq(1), eq(1)]), Some(vec![eq(1)]));
        assert_eq!(canonicalize(&[le(0, 1.0), AttributeTest::new(0, TestOp::IsMissing)]), None);
    }

    #[test]
    fn filter_drops_inconsistent_and_duplicates() {
        let ds = numeric(&[(1.0, 0.0, 0), (2.0, 0.0, 1), (3.0, 0.0, 0), (9.0, 0.0, 0)]);
        let hood: BTreeSet<usize> = [0, 1, 2].into();
        let mixed = ConjunctiveFeature::new(&[le(0, 2.5)], vec![], "p").unwrap();
        let pure = ConjunctiveFeature::new(&[gt(0, 2.5)], vec![], "p").unwrap();
        let empty = ConjunctiveFeature::new(&[], vec![], "p").unwrap();
        let kept = filter_features(vec![mixed, pure.clone(), pure.clone(), empty], &hood, &ds, 1);
        assert_eq!(kept, vec![pure.clone()]);
        // Support of x>2.5 on the full data is 2.
        assert_eq!(filter_features(vec![pure.clone()], &hood, &ds, 2).len(), 1);
        assert!(filter_features(vec![pure], &hood, &ds, 3).is_empty());
    }

    #[test]
    fn record_and_name() {
        let ds = numeric(&[(1.0, 0.0, 0), (3.0, 0.0, 1)]);
        let f = ConjunctiveFeature::new(&[le(0, 2.0), gt(1, -1.0)], vec![7], "q").unwrap();
        let rec = f.to_record(&ds);
        assert_eq!(rec.rule, "x<=2 AND y>-1");
        assert_eq!(rec.tests[0].attr, "x");
        assert_eq!(rec.tests[0].op, "<=");
        assert_eq!(rec.tests[0].operand, serde_json::json!(2.0));
        assert!(rec.name.starts_with("f_") && rec.name.len() == 10);
        assert_eq!(rec.name, feature_name(&f, &ds));
    }

    fn arb_dataset() -> impl Strategy<Value = Dataset> {
        prop::collection::vec((0u8..6, 0u8..6, prop::option::weighted(0.9, 0u8..3), 0usize..2), 1..30).prop_map(|rows| {
            let instances = rows
                .iter()
                .enumerate()
                .map(|(id, &(x, y, c, label))| Instance {
                    id,
                    values: vec![
                        Value::Numeric(x as f64),
                        Value::Numeric(y as f64 * 0.5),
                        c.map_or(Value::Missing, |c| Value::Nominal(c as u32)),
                    ],
                    label,
                })
                .collect();
            Dataset::new(
                "rand",
                vec![Attribute::numeric("x"), Attribute::numeric("y"), Attribute::nominal("c", ["r", "g", "b"])],
                Attribute::nominal("class", ["p", "q"]),
                instances,
            )
            .unwrap()
        })
    }

    fn arb_test() -> impl Strategy<Value = AttributeTest> {
        prop_oneof![
            (0usize..2, 0u8..12).prop_map(|(a, t)| le(a, t as f64 * 0.5)),
            (0usize..2, 0u8..12).prop_map(|(a, t)| gt(a, t as f64 * 0.5)),
            (0u32..3).prop_map(|v| AttributeTest::new(2, TestOp::Equals(v))),
            (0usize..3).prop_map(|a| AttributeTest::new(a, TestOp::IsMissing)),
        ]
    }

    /// Evaluates a raw test list directly against instance values.
    fn brute_match(tests: &[AttributeTest], inst: &Instance) -> bool {
        tests.iter().all(|t| match (t.op, inst.values[t.attribute]) {
            (TestOp::LessEq(th), Value::Numeric(x)) => x <= th,
            (TestOp::Greater(th), Value::Numeric(x)) => x > th,
            (TestOp::Equals(v), Value::Nominal(i)) => v == i,
            (TestOp::IsMissing, Value::Missing) => true,
            _ => false,
        })
    }

    proptest! {
        #[test]
        fn cover_agrees_with_brute_force(ds in arb_dataset(), tests in prop::collection::vec(arb_test(), 0..5)) {
            let expected: BTreeSet<usize> = ds.instances().iter().filter(|i| brute_match(&tests, i)).map(|i| i.id).collect();
            match ConjunctiveFeature::new(&tests, vec![], "p") {
                Some(f) => {
                    prop_assert_eq!(cover(&f, ds.ids(), &ds), expected);
                    // Idempotent.
                    prop_assert_eq!(canonicalize(&f.tests), Some(f.tests.clone()));
                    // Order-independent.
                    let mut reversed = tests.clone();
                    reversed.reverse();
                    prop_assert_eq!(canonicalize(&reversed), Some(f.tests.clone()));
                }
                None => prop_assert!(expected.is_empty()),
            }
        }

        #[test]
        fn leaf_cover_identity_and_purity(ds in arb_dataset()) {
            let ids: Vec<usize> = ds.ids().collect();
            let tree = grow_tree(&ds, &ids, GrowParams::UNPRUNED);
            for (path, leaf) in tree.leaf_paths() {
                let TreeNode::Leaf { instances, histogram } = leaf else { unreachable!() };
                let f = ConjunctiveFeature::new(&path, vec![], "p").expect("tree paths are satisfiable");
                let covered: Vec<usize> = cover(&f, ids.iter().copied(), &ds).into_iter().collect();
                prop_assert_eq!(&covered, instances);
                // Impure leaves only hold instances identical on every attribute.
                if histogram.iter().filter(|&&c| c > 0).count() > 1 {
                    let first = &ds.instance(instances[0]).unwrap().values;
                    for id in instances {
                        prop_assert_eq!(&ds.instance(*id).unwrap().values, first);
                    }
                }
            }
        }
    }
}
