//! Local outlier factor and per-class outlier detection.
//!
//! Scores follow the usual density-ratio definition: the k-distance
//! neighborhood of `p` holds every other point within the distance of its
//! `min_pts`-th nearest neighbor (ties included), reachability distance is
//! `max(k-distance(o), d(p, o))`, the local reachability density is the
//! inverse mean reachability distance, and LOF is the mean ratio of the
//! neighbors' densities to the point's own.
//!
//! Class outliers are found by scoring each class on its own instances
//! only, while distances are still measured in the encoded space of the
//! whole dataset.

use std::collections::{BTreeMap, BTreeSet};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::data::{Dataset, EncodedView};
use crate::error::{Error, Result};

/// Upper bound on the local reachability density. Reached when a point
/// has at least `min_pts` exact duplicates.
pub const LRD_CAP: f64 = 1e12;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LofParams {
    pub min_pts: usize,
    /// Scores strictly above this mark an outlier.
    pub threshold: f64,
}

impl Default for LofParams {
    fn default() -> Self {
        LofParams {
            min_pts: 10,
            threshold: 1.5,
        }
    }
}

impl LofParams {
    pub fn validate(&self) -> Result<()> {
        if self.min_pts == 0 {
            return Err(Error::Config("min_pts must be at least 1".into()));
        }
        if !(self.threshold > 0.0 && self.threshold.is_finite()) {
            return Err(Error::Config(format!("LOF threshold must be positive, got {}", self.threshold)));
        }
        Ok(())
    }
}

/// LOF score of every instance in `subset`, computed against the other
/// members of `subset` only.
pub fn lof_scores(view: &EncodedView, subset: &[usize], params: &LofParams) -> Result<BTreeMap<usize, f64>> {
    params.validate()?;
    let mut ids: Vec<usize> = subset.to_vec();
    ids.sort_unstable();
    ids.dedup();
    if ids.len() <= params.min_pts {
        return Err(Error::Data(format!(
            "LOF needs more than min_pts={} points, got {}",
            params.min_pts,
            ids.len()
        )));
    }
    let rows: Vec<usize> = ids
        .iter()
        .map(|&id| {
            view.row_of(id)
                .ok_or_else(|| Error::Data(format!("instance {} is not in the encoded view", id)))
        })
        .collect::<Result<_>>()?;
    let n = rows.len();
    let k = params.min_pts;

    let dist: Vec<Vec<f64>> = rows
        .par_iter()
        .map(|&a| rows.iter().map(|&b| view.distance(a, b)).collect())
        .collect();

    // Neighborhoods as ascending index lists, so that every sum below runs
    // in ascending instance-id order.
    let neighborhoods: Vec<(f64, Vec<usize>)> = (0..n)
        .into_par_iter()
        .map(|p| {
            let mut others: Vec<f64> = (0..n).filter(|&q| q != p).map(|q| dist[p][q]).collect();
            others.sort_unstable_by(f64::total_cmp);
            let k_distance = others[k - 1];
            let members = (0..n).filter(|&q| q != p && dist[p][q] <= k_distance).collect();
            (k_distance, members)
        })
        .collect();

    let lrd: Vec<f64> = (0..n)
        .map(|p| {
            let members = &neighborhoods[p].1;
            let total: f64 = members
                .iter()
                .map(|&o| neighborhoods[o].0.max(dist[p][o]))
                .sum();
            let mean = total / members.len() as f64;
            if mean > 0.0 {
                (1.0 / mean).min(LRD_CAP)
            } else {
                LRD_CAP
            }
        })
        .collect();

    Ok((0..n)
        .map(|p| {
            let members = &neighborhoods[p].1;
            let total: f64 = members.iter().map(|&o| lrd[o] / lrd[p]).sum();
            (ids[p], total / members.len() as f64)
        })
        .collect())
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScoredInstance {
    pub id: usize,
    pub score: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ClassOutliers {
    pub label: String,
    pub size: usize,
    /// False when the class was too small to score.
    pub scored: bool,
    pub scores: Vec<ScoredInstance>,
    pub outliers: Vec<usize>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ClassOutlierReport {
    pub params: LofParams,
    /// One entry per class present in the data, in class-domain order.
    pub classes: Vec<ClassOutliers>,
    /// The union of all per-class outlier sets.
    pub outliers: BTreeSet<usize>,
    /// Classes present in the data that contribute no outliers, whether
    /// because they are too small to score or because no score passes the
    /// threshold.
    pub classes_without_outliers: usize,
}

impl ClassOutlierReport {
    pub fn score_of(&self, id: usize) -> Option<f64> {
        self.classes
            .iter()
            .flat_map(|c| c.scores.iter())
            .find(|s| s.id == id)
            .map(|s| s.score)
    }

    pub fn per_class_counts(&self) -> BTreeMap<String, usize> {
        self.classes.iter().map(|c| (c.label.clone(), c.outliers.len())).collect()
    }
}

/// Runs LOF on every class partition of `dataset` and collects the ids
/// whose score exceeds the threshold. Classes with at most `min_pts`
/// instances are not scored.
pub fn detect_class_outliers(dataset: &Dataset, view: &EncodedView, params: &LofParams) -> Result<ClassOutlierReport> {
    params.validate()?;
    let partition = dataset.class_partition();
    let classes: Vec<ClassOutliers> = partition
        .par_iter()
        .enumerate()
        .filter(|(_, ids)| !ids.is_empty())
        .map(|(label, ids)| {
            let name = dataset.label_name(label).to_string();
            if ids.len() <= params.min_pts {
                return Ok(ClassOutliers {
                    label: name,
                    size: ids.len(),
                    scored: false,
                    scores: Vec::new(),
                    outliers: Vec::new(),
                });
            }
            let scores = lof_scores(view, ids, params)?;
            let outliers = scores
                .iter()
                .filter(|(_, &s)| s > params.threshold)
                .map(|(&id, _)| id)
                .collect();
            Ok(ClassOutliers {
                label: name,
                size: ids.len(),
                scored: true,
                scores: scores.into_iter().map(|(id, score)| ScoredInstance { id, score }).collect(),
                outliers,
            })
        })
        .collect::<Result<_>>()?;

    let outliers = classes.iter().flat_map(|c| c.outliers.iter().copied()).collect();
    let classes_without_outliers = classes.iter().filter(|c| c.outliers.is_empty()).count();
    Ok(ClassOutlierReport {
        params: *params,
        classes,
        outliers,
        classes_without_outliers,
    })
}
