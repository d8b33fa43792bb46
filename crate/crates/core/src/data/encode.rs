use serde::{Deserialize, Serialize};

use super::{AttributeKind, Dataset, Value};
use crate::error::{Error, Result};

/// Distance used for outlier detection and neighborhoods.
///
/// Both variants see every attribute: numeric attributes are min/max
/// normalized and nominal attributes are one-hot expanded. They differ
/// in the norm (L2 vs L1) and in which attribute kind they require.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Metric {
    EuclideanNormalized,
    ManhattanBinarized,
}

impl Metric {
    /// Euclidean when more than half of the attributes are numeric,
    /// Manhattan otherwise.
    pub fn for_dataset(dataset: &Dataset) -> Metric {
        let numeric = dataset.attributes().iter().filter(|a| a.is_numeric()).count();
        if 2 * numeric > dataset.attributes().len() {
            Metric::EuclideanNormalized
        } else {
            Metric::ManhattanBinarized
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
enum Block {
    Numeric { attr: usize, min: f64, max: f64 },
    OneHot { attr: usize, width: usize },
}

impl Block {
    fn width(&self) -> usize {
        match self {
            Block::Numeric { .. } => 1,
            Block::OneHot { width, .. } => *width,
        }
    }
}

/// Normalization statistics and layout fitted on one dataset (a training
/// fold) and applicable to any dataset with the same schema.
#[derive(Clone, Debug, PartialEq)]
pub struct Encoder {
    metric: Metric,
    blocks: Vec<Block>,
}

impl Encoder {
    pub fn fit(dataset: &Dataset, metric: Metric) -> Result<Encoder> {
        let attrs = dataset.attributes();
        let has_numeric = attrs.iter().any(|a| a.is_numeric());
        let has_nominal = attrs.iter().any(|a| !a.is_numeric());
        match metric {
            Metric::EuclideanNormalized if !has_numeric => {
                return Err(Error::Config("euclidean_normalized needs at least one numeric attribute".into()))
            }
            Metric::ManhattanBinarized if !has_nominal => {
                return Err(Error::Config("manhattan_binarized needs at least one nominal attribute".into()))
            }
            _ => {}
        }

        // Primary kind first, the other kind appended.
        let primary_numeric = metric == Metric::EuclideanNormalized;
        let mut blocks = Vec::with_capacity(attrs.len());
        for pass_numeric in [primary_numeric, !primary_numeric] {
            for (i, attr) in attrs.iter().enumerate() {
                match &attr.kind {
                    AttributeKind::Numeric if pass_numeric => {
                        let (mut min, mut max) = (f64::INFINITY, f64::NEG_INFINITY);
                        for inst in dataset.instances() {
                            if let Value::Numeric(x) = inst.values[i] {
                                min = min.min(x);
                                max = max.max(x);
                            }
                        }
                        if !min.is_finite() {
                            min = 0.0;
                            max = 0.0;
                        }
                        blocks.push(Block::Numeric { attr: i, min, max });
                    }
                    AttributeKind::Nominal(values) if !pass_numeric => {
                        blocks.push(Block::OneHot { attr: i, width: values.len() });
                    }
                    _ => {}
                }
            }
        }
        Ok(Encoder { metric, blocks })
    }

    pub fn metric(&self) -> Metric {
        self.metric
    }

    pub fn dimension(&self) -> usize {
        self.blocks.iter().map(Block::width).sum()
    }

    /// Encodes every instance. Numeric values are scaled with the fitted
    /// min/max (a constant attribute maps to 0); values outside the fitted
    /// range are kept as is and clamped when distances are taken. Missing
    /// numeric values are NaN, missing nominal values an all-zero block.
    pub fn transform(&self, dataset: &Dataset) -> EncodedView {
        let dim = self.dimension();
        let vectors = dataset
            .instances()
            .iter()
            .map(|inst| {
                let mut v = Vec::with_capacity(dim);
                for block in &self.blocks {
                    match *block {
                        Block::Numeric { attr, min, max } => v.push(match inst.values[attr] {
                            Value::Numeric(x) if max > min => (x - min) / (max - min),
                            Value::Numeric(_) => 0.0,
                            _ => f64::NAN,
                        }),
                        Block::OneHot { attr, width } => {
                            let hot = match inst.values[attr] {
                                Value::Nominal(i) => Some(i as usize),
                                _ => None,
                            };
                            v.extend((0..width).map(|j| if Some(j) == hot { 1.0 } else { 0.0 }));
                        }
                    }
                }
                v
            })
            .collect();
        let layout = self
            .blocks
            .iter()
            .map(|b| match b {
                Block::Numeric { .. } => BlockLayout::Numeric,
                Block::OneHot { width, .. } => BlockLayout::OneHot(*width),
            })
            .collect();
        EncodedView {
            metric: self.metric,
            ids: dataset.ids().collect(),
            vectors,
            layout,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
enum BlockLayout {
    Numeric,
    OneHot(usize),
}

/// Per-instance numeric vectors plus the metric to compare them with.
/// Rows follow the order of the dataset the view was built from.
#[derive(Clone, Debug, PartialEq)]
pub struct EncodedView {
    metric: Metric,
    ids: Vec<usize>,
    vectors: Vec<Vec<f64>>,
    layout: Vec<BlockLayout>,
}

/// Fits an encoder on `dataset` and encodes it.
pub fn encode(dataset: &Dataset, metric: Metric) -> Result<EncodedView> {
    Ok(Encoder::fit(dataset, metric)?.transform(dataset))
}

/// Contribution of a missing numeric coordinate.
const NUMERIC_PENALTY: f64 = 1.0;
/// Contribution of a missing one-hot block (two differing indicators).
const ONE_HOT_PENALTY: f64 = 2.0;

impl EncodedView {
    pub fn metric(&self) -> Metric {
        self.metric
    }

    pub fn len(&self) -> usize {
        self.vectors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vectors.is_empty()
    }

    pub fn ids(&self) -> &[usize] {
        &self.ids
    }

    pub fn row_of(&self, id: usize) -> Option<usize> {
        self.ids.binary_search(&id).ok()
    }

    pub fn vector(&self, row: usize) -> &[f64] {
        &self.vectors[row]
    }

    /// Distance between the instances at rows `a` and `b`.
    pub fn distance(&self, a: usize, b: usize) -> f64 {
        if a == b {
            return 0.0;
        }
        let (x, y) = (&self.vectors[a], &self.vectors[b]);
        let euclid = self.metric == Metric::EuclideanNormalized;
        let mut acc = 0.0;
        let mut pos = 0;
        for block in &self.layout {
            match *block {
                BlockLayout::Numeric => {
                    let (u, v) = (x[pos], y[pos]);
                    let d = if u.is_nan() || v.is_nan() {
                        NUMERIC_PENALTY
                    } else {
                        (u.clamp(0.0, 1.0) - v.clamp(0.0, 1.0)).abs()
                    };
                    acc += if euclid { d * d } else { d };
                    pos += 1;
                }
                BlockLayout::OneHot(width) => {
                    let (u, v) = (&x[pos..pos + width], &y[pos..pos + width]);
                    let missing = |s: &[f64]| s.iter().all(|&c| c == 0.0);
                    // One-hot differences are 0/1, so L1 and squared L2 coincide.
                    acc += if missing(u) || missing(v) {
                        ONE_HOT_PENALTY
                    } else {
                        u.iter().zip(v).map(|(p, q)| (p - q).abs()).sum::<f64>()
                    };
                    pos += width;
                }
            }
        }
        if euclid {
            acc.sqrt()
        } else {
            acc
        }
    }

    /// Distance between two instance ids, `None` if either is absent.
    pub fn distance_by_id(&self, a: usize, b: usize) -> Option<f64> {
        Some(self.distance(self.row_of(a)?, self.row_of(b)?))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::{Attribute, Instance};

    fn numeric_ds(cols: &[&[f64]]) -> Dataset {
        let n = cols[0].len();
        let attrs = (0..cols.len()).map(|i| Attribute::numeric(format!("x{}", i))).collect();
        let instances = (0..n)
            .map(|r| Instance {
                id: r,
                values: cols.iter().map(|c| Value::Numeric(c[r])).collect(),
                label: 0,
            })
            .collect();
        Dataset::new("n", attrs, Attribute::nominal("class", ["a"]), instances).unwrap()
    }

    #[test]
    fn min_max_scaling() {
        let view = encode(&numeric_ds(&[&[2.0, 4.0, 6.0]]), Metric::EuclideanNormalized).unwrap();
        let coords: Vec<f64> = (0..3).map(|r| view.vector(r)[0]).collect();
        assert_eq!(coords, vec![0.0, 0.5, 1.0]);
    }

    #[test]
    fn constant_column_maps_to_zero() {
        let view = encode(&numeric_ds(&[&[5.0, 5.0, 5.0]]), Metric::EuclideanNormalized).unwrap();
        assert!((0..3).all(|r| view.vector(r)[0] == 0.0));
    }

    #[test]
    fn one_hot_indicator() {
        let attrs = vec![Attribute::nominal("c", ["x", "y", "z"])];
        let instances = vec![
            Instance { id: 0, values: vec![Value::Nominal(1)], label: 0 },
            Instance { id: 1, values: vec![Value::Nominal(0)], label: 0 },
            Instance { id: 2, values: vec![Value::Missing], label: 0 },
        ];
        let ds = Dataset::new("c", attrs, Attribute::nominal("class", ["a"]), instances).unwrap();
        let view = encode(&ds, Metric::ManhattanBinarized).unwrap();
        assert_eq!(view.vector(0), &[0.0, 1.0, 0.0]);
        assert_eq!(view.vector(2), &[0.0, 0.0, 0.0]);
        assert_eq!(view.distance(0, 1), 2.0);
        assert_eq!(view.distance(0, 2), 2.0);
        assert_eq!(view.distance(2, 2), 0.0);
        assert!(encode(&ds, Metric::EuclideanNormalized).is_err());
    }

    #[test]
    fn euclidean_diagonal() {
        let view = encode(&numeric_ds(&[&[0.0, 1.0], &[0.0, 1.0]]), Metric::EuclideanNormalized).unwrap();
        assert_eq!(view.distance(0, 1), 2f64.sqrt());
        assert_eq!(view.distance(1, 1), 0.0);
        assert!(encode(&numeric_ds(&[&[0.0]]), Metric::ManhattanBinarized).is_err());
    }

    #[test]
    fn missing_numeric_penalty_and_clamping() {
        let train = numeric_ds(&[&[0.0, 10.0]]);
        let enc = Encoder::fit(&train, Metric::EuclideanNormalized).unwrap();
        let attrs = vec![Attribute::numeric("x0")];
        let test = Dataset::new(
            "t",
            attrs,
            Attribute::nominal("class", ["a"]),
            vec![
                Instance { id: 0, values: vec![Value::Numeric(20.0)], label: 0 },
                Instance { id: 1, values: vec![Value::Numeric(0.0)], label: 0 },
                Instance { id: 2, values: vec![Value::Missing], label: 0 },
            ],
        )
        .unwrap();
        let view = enc.transform(&test);
        assert_eq!(view.vector(0)[0], 2.0);
        assert_eq!(view.distance(0, 1), 1.0);
        assert_eq!(view.distance(1, 2), 1.0);
    }

    #[test]
    fn auto_metric_rule() {
        let mixed = Dataset::new(
            "m",
            vec![Attribute::numeric("a"), Attribute::nominal("b", ["x"])],
            Attribute::nominal("class", ["p"]),
            vec![],
        )
        .unwrap();
        // Exactly half numeric is not a majority.
        assert_eq!(Metric::for_dataset(&mixed), Metric::ManhattanBinarized);
        assert_eq!(Metric::for_dataset(&numeric_ds(&[&[1.0]])), Metric::EuclideanNormalized);
    }
}
