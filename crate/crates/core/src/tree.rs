//! C4.5-style decision trees shared by the rule miner, the pruned tree
//! learner and DC-Fringe.
//!
//! Splits are chosen by gain ratio. Numeric attributes are split in two at
//! midpoints between consecutive distinct values, nominal attributes split
//! multiway on the values present at the node. Instances with a missing
//! split value descend a dedicated `is-missing` branch instead of being
//! distributed fractionally, so every instance reaches exactly one leaf.

use std::cmp::Ordering;
use std::fmt::Write as _;
use std::hash::{Hash, Hasher};

use serde::{Deserialize, Serialize};

use crate::data::{Dataset, Instance, Value};

#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub enum TestOp {
    LessEq(f64),
    Greater(f64),
    Equals(u32),
    IsMissing,
}

impl TestOp {
    fn rank(&self) -> u8 {
        match self {
            TestOp::LessEq(_) => 0,
            TestOp::Greater(_) => 1,
            TestOp::Equals(_) => 2,
            TestOp::IsMissing => 3,
        }
    }

    pub fn symbol(&self) -> &'static str {
        match self {
            TestOp::LessEq(_) => "<=",
            TestOp::Greater(_) => ">",
            TestOp::Equals(_) | TestOp::IsMissing => "=",
        }
    }
}

/// An atomic test on one attribute. Missing values only satisfy
/// [`TestOp::IsMissing`].
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct AttributeTest {
    pub attribute: usize,
    pub op: TestOp,
}

impl AttributeTest {
    pub fn new(attribute: usize, op: TestOp) -> Self {
        AttributeTest { attribute, op }
    }

    pub fn matches_value(&self, value: &Value) -> bool {
        match (self.op, value) {
            (TestOp::LessEq(t), Value::Numeric(x)) => *x <= t,
            (TestOp::Greater(t), Value::Numeric(x)) => *x > t,
            (TestOp::Equals(v), Value::Nominal(i)) => *i == v,
            (TestOp::IsMissing, Value::Missing) => true,
            _ => false,
        }
    }

    pub fn matches(&self, instance: &Instance) -> bool {
        self.matches_value(&instance.values[self.attribute])
    }

    /// Human readable form, e.g. `petalwidth<=0.8` or `color=red`.
    pub fn render(&self, dataset: &Dataset) -> String {
        let attr = &dataset.attributes()[self.attribute];
        match self.op {
            TestOp::LessEq(t) => format!("{}<={}", attr.name, t),
            TestOp::Greater(t) => format!("{}>{}", attr.name, t),
            TestOp::Equals(v) => format!("{}={}", attr.name, attr.values().map_or("?", |d| d[v as usize].as_str())),
            TestOp::IsMissing => format!("{}=?", attr.name),
        }
    }

    fn operand_cmp(&self, other: &Self) -> Ordering {
        match (self.op, other.op) {
            (TestOp::LessEq(a), TestOp::LessEq(b)) | (TestOp::Greater(a), TestOp::Greater(b)) => a.total_cmp(&b),
            (TestOp::Equals(a), TestOp::Equals(b)) => a.cmp(&b),
            _ => Ordering::Equal,
        }
    }
}

impl PartialEq for AttributeTest {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for AttributeTest {}

impl PartialOrd for AttributeTest {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// Orders by attribute, then operator, then operand.
impl Ord for AttributeTest {
    fn cmp(&self, other: &Self) -> Ordering {
        self.attribute
            .cmp(&other.attribute)
            .then(self.op.rank().cmp(&other.op.rank()))
            .then_with(|| self.operand_cmp(other))
    }
}

impl Hash for AttributeTest {
    fn hash<H: Hasher>(&self, state: &mut H) {
        self.attribute.hash(state);
        self.op.rank().hash(state);
        match self.op {
            TestOp::LessEq(t) | TestOp::Greater(t) => t.to_bits().hash(state),
            TestOp::Equals(v) => v.hash(state),
            TestOp::IsMissing => {}
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Branch {
    pub test: AttributeTest,
    pub child: TreeNode,
}

#[derive(Clone, Debug, PartialEq)]
pub enum TreeNode {
    Leaf {
        /// Class counts of the training instances at this leaf.
        histogram: Vec<usize>,
        /// Ids of those instances, ascending.
        instances: Vec<usize>,
    },
    Split {
        histogram: Vec<usize>,
        attribute: usize,
        branches: Vec<Branch>,
    },
}

fn majority(histogram: &[usize]) -> usize {
    let mut best = 0;
    for (i, &c) in histogram.iter().enumerate() {
        if c > histogram[best] {
            best = i;
        }
    }
    best
}

impl TreeNode {
    pub fn histogram(&self) -> &[usize] {
        match self {
            TreeNode::Leaf { histogram, .. } | TreeNode::Split { histogram, .. } => histogram,
        }
    }

    /// Majority class, ties broken by class order.
    pub fn majority(&self) -> usize {
        majority(self.histogram())
    }

    pub fn is_leaf(&self) -> bool {
        matches!(self, TreeNode::Leaf { .. })
    }

    pub fn depth(&self) -> usize {
        match self {
            TreeNode::Leaf { .. } => 0,
            TreeNode::Split { branches, .. } => 1 + branches.iter().map(|b| b.child.depth()).max().unwrap_or(0),
        }
    }

    pub fn leaf_count(&self) -> usize {
        match self {
            TreeNode::Leaf { .. } => 1,
            TreeNode::Split { branches, .. } => branches.iter().map(|b| b.child.leaf_count()).sum(),
        }
    }

    /// Every leaf with the tests on its root-to-leaf path, left to right.
    pub fn leaf_paths(&self) -> Vec<(Vec<AttributeTest>, &TreeNode)> {
        fn walk<'a>(node: &'a TreeNode, path: &mut Vec<AttributeTest>, out: &mut Vec<(Vec<AttributeTest>, &'a TreeNode)>) {
            match node {
                TreeNode::Leaf { .. } => out.push((path.clone(), node)),
                TreeNode::Split { branches, .. } => {
                    for b in branches {
                        path.push(b.test);
                        walk(&b.child, path, out);
                        path.pop();
                    }
                }
            }
        }
        let mut out = Vec::new();
        walk(self, &mut Vec::new(), &mut out);
        out
    }

    /// Ids of all training instances below this node.
    pub fn instances(&self) -> Vec<usize> {
        let mut out = Vec::new();
        for (_, leaf) in self.leaf_paths() {
            if let TreeNode::Leaf { instances, .. } = leaf {
                out.extend_from_slice(instances);
            }
        }
        out.sort_unstable();
        out
    }

    /// Follows matching branches; falls back to the majority of the
    /// deepest node reached when no branch matches.
    pub fn predict(&self, instance: &Instance) -> usize {
        let mut node = self;
        loop {
            match node {
                TreeNode::Leaf { .. } => return node.majority(),
                TreeNode::Split { branches, .. } => match branches.iter().find(|b| b.test.matches(instance)) {
                    Some(b) => node = &b.child,
                    None => return node.majority(),
                },
            }
        }
    }

    /// Canonical pre-order serialization of tests and leaf classes. Two
    /// trees have equal signatures iff they have the same shape, tests and
    /// leaf predictions.
    pub fn signature(&self) -> String {
        fn walk(node: &TreeNode, out: &mut String) {
            match node {
                TreeNode::Leaf { .. } => {
                    let _ = write!(out, "L{}", node.majority());
                }
                TreeNode::Split { branches, .. } => {
                    out.push('(');
                    for (i, b) in branches.iter().enumerate() {
                        if i > 0 {
                            out.push('|');
                        }
                        let _ = write!(out, "{}{}", b.test.attribute, b.test.op.symbol());
                        match b.test.op {
                            TestOp::LessEq(t) | TestOp::Greater(t) => {
                                let _ = write!(out, "{:016x}", t.to_bits());
                            }
                            TestOp::Equals(v) => {
                                let _ = write!(out, "#{}", v);
                            }
                            TestOp::IsMissing => out.push('?'),
                        }
                        out.push(':');
                        walk(&b.child, out);
                    }
                    out.push(')');
                }
            }
        }
        let mut out = String::new();
        walk(self, &mut out);
        out
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct GrowParams {
    /// A split is admissible only if at least two branches receive this
    /// many instances.
    pub min_instances: usize,
}

impl GrowParams {
    /// Unpruned growth down to single instances.
    pub const UNPRUNED: GrowParams = GrowParams { min_instances: 1 };
}

/// Gain below this is treated as zero.
const GAIN_EPSILON: f64 = 1e-12;

fn entropy(counts: &[usize], total: usize) -> f64 {
    if total == 0 {
        return 0.0;
    }
    let n = total as f64;
    counts
        .iter()
        .filter(|&&c| c > 0)
        .map(|&c| {
            let p = c as f64 / n;
            -p * p.log2()
        })
        .sum()
}

/// Information gain and split information of a partition given per-part
/// class histograms.
pub fn gain_and_split_info(parent: &[usize], parts: &[Vec<usize>]) -> (f64, f64) {
    let total: usize = parent.iter().sum();
    let n = total as f64;
    let mut remainder = 0.0;
    let mut split_info = 0.0;
    for part in parts {
        let size: usize = part.iter().sum();
        if size == 0 {
            continue;
        }
        let w = size as f64 / n;
        remainder += w * entropy(part, size);
        split_info -= w * w.log2();
    }
    (entropy(parent, total) - remainder, split_info)
}

#[derive(Clone, Copy, Debug)]
enum SplitKind {
    Numeric(f64),
    Nominal,
}

#[derive(Clone, Copy, Debug)]
struct Candidate {
    attribute: usize,
    kind: SplitKind,
    ratio: f64,
}

fn admissible(parts: &[Vec<usize>], min_instances: usize) -> bool {
    parts
        .iter()
        .filter(|p| p.iter().sum::<usize>() >= min_instances.max(1))
        .count()
        >= 2
}

fn ratio_of(parent: &[usize], parts: &[Vec<usize>]) -> Option<f64> {
    let (gain, split_info) = gain_and_split_info(parent, parts);
    if split_info <= 0.0 {
        return None;
    }
    let gain = if gain < GAIN_EPSILON { 0.0 } else { gain };
    Some(gain / split_info)
}

struct Grower<'a> {
    dataset: &'a Dataset,
    n_classes: usize,
    params: GrowParams,
}

impl Grower<'_> {
    fn histogram(&self, rows: &[usize]) -> Vec<usize> {
        let mut h = vec![0; self.n_classes];
        for &r in rows {
            h[self.dataset.instances()[r].label] += 1;
        }
        h
    }

    fn best_split(&self, rows: &[usize], parent: &[usize]) -> Option<Candidate> {
        let instances = self.dataset.instances();
        let mut best: Option<Candidate> = None;
        let mut consider = |c: Candidate| {
            if best.is_none_or(|b| c.ratio > b.ratio) {
                best = Some(c);
            }
        };
        for (attribute, attr) in self.dataset.attributes().iter().enumerate() {
            if attr.is_numeric() {
                let mut known: Vec<(f64, usize)> = Vec::with_capacity(rows.len());
                let mut missing = vec![0; self.n_classes];
                for &r in rows {
                    match instances[r].values[attribute] {
                        Value::Numeric(x) => known.push((x, instances[r].label)),
                        _ => missing[instances[r].label] += 1,
                    }
                }
                if known.len() < 2 {
                    continue;
                }
                known.sort_by(|a, b| a.0.total_cmp(&b.0));
                let mut left = vec![0; self.n_classes];
                let mut right = vec![0; self.n_classes];
                for &(_, l) in &known {
                    right[l] += 1;
                }
                for i in 0..known.len() - 1 {
                    let (x, l) = known[i];
                    left[l] += 1;
                    right[l] -= 1;
                    let next = known[i + 1].0;
                    if x == next {
                        continue;
                    }
                    let mut threshold = x + (next - x) / 2.0;
                    if threshold >= next {
                        threshold = x;
                    }
                    let parts = [left.clone(), right.clone(), missing.clone()];
                    if !admissible(&parts, self.params.min_instances) {
                        continue;
                    }
                    if let Some(ratio) = ratio_of(parent, &parts) {
                        consider(Candidate {
                            attribute,
                            kind: SplitKind::Numeric(threshold),
                            ratio,
                        });
                    }
                }
            } else {
                let width = attr.values().map_or(0, |v| v.len());
                let mut parts = vec![vec![0; self.n_classes]; width + 1];
                for &r in rows {
                    let slot = match instances[r].values[attribute] {
                        Value::Nominal(i) => i as usize,
                        _ => width,
                    };
                    parts[slot][instances[r].label] += 1;
                }
                if !admissible(&parts, self.params.min_instances) {
                    continue;
                }
                if let Some(ratio) = ratio_of(parent, &parts) {
                    consider(Candidate {
                        attribute,
                        kind: SplitKind::Nominal,
                        ratio,
                    });
                }
            }
        }
        best
    }

    fn grow(&self, rows: Vec<usize>) -> TreeNode {
        let histogram = self.histogram(&rows);
        let pure = histogram.iter().filter(|&&c| c > 0).count() <= 1;
        let split = if pure { None } else { self.best_split(&rows, &histogram) };
        let Some(split) = split else {
            let mut ids: Vec<usize> = rows.iter().map(|&r| self.dataset.instances()[r].id).collect();
            ids.sort_unstable();
            return TreeNode::Leaf { histogram, instances: ids };
        };

        let instances = self.dataset.instances();
        let attribute = split.attribute;
        let mut groups: Vec<(AttributeTest, Vec<usize>)> = match split.kind {
            SplitKind::Numeric(t) => vec![
                (AttributeTest::new(attribute, TestOp::LessEq(t)), Vec::new()),
                (AttributeTest::new(attribute, TestOp::Greater(t)), Vec::new()),
                (AttributeTest::new(attribute, TestOp::IsMissing), Vec::new()),
            ],
            SplitKind::Nominal => {
                let width = self.dataset.attributes()[attribute].values().map_or(0, |v| v.len());
                (0..width as u32)
                    .map(|v| (AttributeTest::new(attribute, TestOp::Equals(v)), Vec::new()))
                    .chain(std::iter::once((AttributeTest::new(attribute, TestOp::IsMissing), Vec::new())))
                    .collect()
            }
        };
        for r in rows {
            let slot = groups
                .iter()
                .position(|(t, _)| t.matches(&instances[r]))
                .expect("split tests are exhaustive");
            groups[slot].1.push(r);
        }
        let branches = groups
            .into_iter()
            .filter(|(_, rows)| !rows.is_empty())
            .map(|(test, rows)| Branch {
                test,
                child: self.grow(rows),
            })
            .collect();
        TreeNode::Split {
            histogram,
            attribute,
            branches,
        }
    }
}

/// Grows a tree on the instances with the given ids.
///
/// Nodes are split by the admissible test with the highest gain ratio
/// (ties to the lower attribute index, then the lower threshold). A node
/// becomes a leaf when it is pure or no admissible split exists. Splits
/// with zero gain are still taken on impure nodes, so with
/// `min_instances = 1` every leaf is pure unless its instances agree on
/// all attributes.
pub fn grow_tree(dataset: &Dataset, ids: &[usize], params: GrowParams) -> TreeNode {
    let mut rows: Vec<usize> = ids.iter().filter_map(|&id| dataset.row_of(id)).collect();
    rows.sort_unstable();
    rows.dedup();
    let grower = Grower {
        dataset,
        n_classes: dataset.class_labels().len(),
        params,
    };
    grower.grow(rows)
}

/// Confidence level for pessimistic-error pruning.
pub const PRUNING_CONFIDENCE: f64 = 0.25;
/// Standard normal quantile at `1 - PRUNING_CONFIDENCE`.
const Z_PRUNING: f64 = 0.674_489_750_196_081_7;

/// Expected additional errors on top of `errors` observed among `n`
/// instances: the upper confidence bound of the binomial error rate at
/// confidence 0.25 (C4.5's estimate) times `n`, minus `errors`.
pub fn added_errors(n: f64, errors: f64) -> f64 {
    if n <= 0.0 {
        return 0.0;
    }
    if errors < 1.0 {
        let base = n * (1.0 - PRUNING_CONFIDENCE.powf(1.0 / n));
        if errors == 0.0 {
            return base;
        }
        return base + errors * (added_errors(n, 1.0) - base);
    }
    if errors + 0.5 >= n {
        return (n - errors).max(0.0);
    }
    let z = Z_PRUNING;
    let f = (errors + 0.5) / n;
    let r = (f + z * z / (2.0 * n) + z * (f / n - f * f / n + z * z / (4.0 * n * n)).sqrt()) / (1.0 + z * z / n);
    r * n - errors
}

/// Pessimistic error estimate of a node turned into a leaf.
pub fn leaf_error_estimate(histogram: &[usize]) -> f64 {
    let n: usize = histogram.iter().sum();
    let errors = n - histogram[majority(histogram)];
    errors as f64 + added_errors(n as f64, errors as f64)
}

/// Sum of the leaf estimates of a subtree.
pub fn subtree_error_estimate(node: &TreeNode) -> f64 {
    match node {
        TreeNode::Leaf { histogram, .. } => leaf_error_estimate(histogram),
        TreeNode::Split { branches, .. } => branches.iter().map(|b| subtree_error_estimate(&b.child)).sum(),
    }
}

/// Bottom-up subtree replacement: a subtree collapses into a leaf when the
/// leaf's pessimistic error is at most the subtree's plus 0.1.
pub fn prune(node: TreeNode) -> TreeNode {
    match node {
        TreeNode::Leaf { .. } => node,
        TreeNode::Split {
            histogram,
            attribute,
            branches,
        } => {
            let branches: Vec<Branch> = branches
                .into_iter()
                .map(|b| Branch {
                    test: b.test,
                    child: prune(b.child),
                })
                .collect();
            let node = TreeNode::Split {
                histogram,
                attribute,
                branches,
            };
            let as_leaf = leaf_error_estimate(node.histogram());
            if as_leaf <= subtree_error_estimate(&node) + 0.1 {
                TreeNode::Leaf {
                    histogram: node.histogram().to_vec(),
                    instances: node.instances(),
                }
            } else {
                node
            }
        }
    }
}
