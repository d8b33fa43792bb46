//! k-neighborhoods of class outliers: assembly, the mixed-class gate and
//! transitive merging of overlapping neighborhoods.

use std::cmp::Ordering;
use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::data::{Dataset, EncodedView};
use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Neighborhood {
    /// Outliers the neighborhood was built from (several after merging).
    pub sources: BTreeSet<usize>,
    /// Neighbor ids; the sources themselves are not members unless another
    /// source's neighborhood contained them.
    pub members: BTreeSet<usize>,
    /// Label counts over members and sources.
    pub class_histogram: BTreeMap<String, usize>,
}

impl Neighborhood {
    pub fn new(sources: BTreeSet<usize>, members: BTreeSet<usize>, dataset: &Dataset) -> Self {
        let mut class_histogram = BTreeMap::new();
        for id in sources.union(&members) {
            if let Some(label) = dataset.label_of(*id) {
                *class_histogram.entry(dataset.label_name(label).to_string()).or_insert(0) += 1;
            }
        }
        Neighborhood {
            sources,
            members,
            class_histogram,
        }
    }

    /// Members plus sources: the instances handed to the rule miner.
    pub fn mining_set(&self) -> BTreeSet<usize> {
        self.members.union(&self.sources).copied().collect()
    }

    fn min_source(&self) -> usize {
        self.sources.iter().next().copied().unwrap_or(usize::MAX)
    }
}

/// The instances other than `id` with at most `k - 1` instances strictly
/// closer to `id`. Ties at the k-th distance are all included, so the
/// result can be larger than `k`.
pub fn k_neighborhood(view: &EncodedView, dataset: &Dataset, id: usize, k: usize) -> Result<Neighborhood> {
    if k == 0 {
        return Err(Error::Config("k must be at least 1".into()));
    }
    if k >= view.len() {
        return Err(Error::Config(format!("k={} must be smaller than the dataset size {}", k, view.len())));
    }
    let row = view
        .row_of(id)
        .ok_or_else(|| Error::Data(format!("instance {} is not in the encoded view", id)))?;
    let mut others: Vec<(f64, usize)> = (0..view.len())
        .filter(|&r| r != row)
        .map(|r| (view.distance(row, r), view.ids()[r]))
        .collect();
    others.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
    let kth = others[k - 1].0;
    let members = others.iter().take_while(|(d, _)| *d <= kth).map(|&(_, o)| o).collect();
    Ok(Neighborhood::new(BTreeSet::from([id]), members, dataset))
}

/// True iff members and sources together carry at least two labels.
pub fn gate_mixed_class(neighborhood: &Neighborhood, dataset: &Dataset) -> bool {
    let mut labels = neighborhood
        .sources
        .iter()
        .chain(&neighborhood.members)
        .filter_map(|&id| dataset.label_of(id));
    match labels.next() {
        None => false,
        Some(first) => labels.any(|l| l != first),
    }
}

/// Overlap of two member sets as the fraction `(|A ∩ B|, min(|A|, |B|))`.
fn overlap(a: &BTreeSet<usize>, b: &BTreeSet<usize>) -> (usize, usize) {
    let (small, large) = if a.len() <= b.len() { (a, b) } else { (b, a) };
    (small.iter().filter(|x| large.contains(x)).count(), small.len())
}

/// `a / b >= 1/2` on integer fractions.
fn qualifies((shared, smaller): (usize, usize)) -> bool {
    smaller > 0 && 2 * shared >= smaller
}

fn cmp_ratio((a, b): (usize, usize), (c, d): (usize, usize)) -> Ordering {
    (a as u128 * d as u128).cmp(&(c as u128 * b as u128))
}

/// True iff some pair in `neighborhoods` still shares at least half of the
/// smaller member set.
pub fn has_mergeable_pair(neighborhoods: &[Neighborhood]) -> bool {
    (0..neighborhoods.len()).any(|i| {
        (i + 1..neighborhoods.len()).any(|j| qualifies(overlap(&neighborhoods[i].members, &neighborhoods[j].members)))
    })
}

/// Overlap fraction, tie-break key and index pair of a mergeable pair.
type Candidate = ((usize, usize), (usize, usize), (usize, usize));

/// Repeatedly replaces the pair with the largest member overlap (at least
/// half of the smaller neighborhood) by its union until no pair qualifies.
/// Ties go to the pair with the smallest (min source of A, min source of B).
/// The output is ordered by smallest source id.
pub fn merge_neighborhoods(neighborhoods: Vec<Neighborhood>, dataset: &Dataset) -> Vec<Neighborhood> {
    let mut current = neighborhoods;
    current.sort_by_key(Neighborhood::min_source);
    loop {
        let mut best: Option<Candidate> = None;
        for i in 0..current.len() {
            for j in i + 1..current.len() {
                let ov = overlap(&current[i].members, &current[j].members);
                if !qualifies(ov) {
                    continue;
                }
                let key = {
                    let (a, b) = (current[i].min_source(), current[j].min_source());
                    (a.min(b), a.max(b))
                };
                let better = match best {
                    None => true,
                    Some((best_ov, best_key, _)) => match cmp_ratio(ov, best_ov) {
                        Ordering::Greater => true,
                        Ordering::Equal => key < best_key,
                        Ordering::Less => false,
                    },
                };
                if better {
                    best = Some((ov, key, (i, j)));
                }
            }
        }
        let Some((_, _, (i, j))) = best else { break };
        let b = current.remove(j);
        let a = current.remove(i);
        let merged = Neighborhood::new(
            a.sources.union(&b.sources).copied().collect(),
            a.members.union(&b.members).copied().collect(),
            dataset,
        );
        let pos = current.partition_point(|n| n.min_source() < merged.min_source());
        current.insert(pos, merged);
    }
    current
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::{encode, Attribute, Instance, Metric, Value};

    fn line(points: &[f64], labels: &[usize]) -> Dataset {
        let instances = points
            .iter()
            .zip(labels)
            .enumerate()
            .map(|(id, (&x, &label))| Instance {
                id,
                values: vec![Value::Numeric(x)],
                label,
            })
            .collect();
        Dataset::new("line", vec![Attribute::numeric("x")], Attribute::nominal("class", ["o", "+"]), instances).unwrap()
    }

    fn hood(sources: &[usize], members: &[usize]) -> Neighborhood {
        Neighborhood {
            sources: sources.iter().copied().collect(),
            members: members.iter().copied().collect(),
            class_histogram: BTreeMap::new(),
        }
    }

    fn members(ns: &[Neighborhood]) -> Vec<Vec<usize>> {
        ns.iter().map(|n| n.members.iter().copied().collect()).collect()
    }

    #[test]
    fn nearest_two() {
        let ds = line(&[0.0, 1.0, 2.0, 3.0, 10.0], &[0; 5]);
        let view = encode(&ds, Metric::EuclideanNormalized).unwrap();
        let n = k_neighborhood(&view, &ds, 0, 2).unwrap();
        assert_eq!(n.members, BTreeSet::from([1, 2]));
        assert_eq!(n.sources, BTreeSet::from([0]));
    }

    #[test]
    fn ties_are_included() {
        let ds = line(&[0.0, 1.0, 1.0, 3.0], &[0; 4]);
        let view = encode(&ds, Metric::EuclideanNormalized).unwrap();
        let n = k_neighborhood(&view, &ds, 0, 1).unwrap();
        assert_eq!(n.members, BTreeSet::from([1, 2]));
        assert!(k_neighborhood(&view, &ds, 0, 4).is_err());
    }

    #[test]
    fn gate() {
        let ds = line(&[0.0, 1.0, 2.0, 3.0], &[0, 0, 0, 1]);
        assert!(!gate_mixed_class(&Neighborhood::new([0].into(), [1, 2].into(), &ds), &ds));
        assert!(gate_mixed_class(&Neighborhood::new([0].into(), [1, 3].into(), &ds), &ds));
        // The source alone brings the second label.
        assert!(gate_mixed_class(&Neighborhood::new([3].into(), [0, 1].into(), &ds), &ds));
        let n = Neighborhood::new([3].into(), [0, 1].into(), &ds);
        assert_eq!(n.class_histogram, BTreeMap::from([("o".to_string(), 2), ("+".to_string(), 1)]));
    }

    #[test]
    fn disjoint_unchanged() {
        let ds = line(&[0.0; 10], &[0; 10]);
        let input = vec![hood(&[0], &[1, 2]), hood(&[5], &[6, 7])];
        let out = merge_neighborhoods(input, &ds);
        assert_eq!(members(&out), vec![vec![1, 2], vec![6, 7]]);
    }

    #[test]
    fn half_overlap_merges() {
        let ds = line(&[0.0; 12], &[0; 12]);
        let out = merge_neighborhoods(vec![hood(&[10], &[1, 2, 3, 4]), hood(&[11], &[3, 4, 9])], &ds);
        assert_eq!(members(&out), vec![vec![1, 2, 3, 4, 9]]);
        assert_eq!(out[0].sources, BTreeSet::from([10, 11]));
    }

    /// Every possible sequence of merges, returning the set of final
    /// partitions (as sorted member lists).
    fn all_fixed_points(sets: Vec<BTreeSet<usize>>) -> BTreeSet<Vec<Vec<usize>>> {
        let mut out = BTreeSet::new();
        let mut any = false;
        for i in 0..sets.len() {
            for j in i + 1..sets.len() {
                if qualifies(overlap(&sets[i], &sets[j])) {
                    any = true;
                    let mut next: Vec<BTreeSet<usize>> =
                        sets.iter().enumerate().filter(|(k, _)| *k != i && *k != j).map(|(_, s)| s.clone()).collect();
                    next.push(sets[i].union(&sets[j]).copied().collect());
                    out.extend(all_fixed_points(next));
                }
            }
        }
        if !any {
            let mut v: Vec<Vec<usize>> = sets.into_iter().map(|s| s.into_iter().collect()).collect();
            v.sort();
            out.insert(v);
        }
        out
    }

    #[test]
    fn chain_merges_transitively() {
        let sets: Vec<BTreeSet<usize>> = vec![[1, 2, 3, 4].into(), [3, 4, 5, 6].into(), [5, 6, 7, 8].into()];
        let fixed = all_fixed_points(sets.clone());
        assert_eq!(fixed.len(), 1, "merge order matters: {:?}", fixed);
        let expected = fixed.into_iter().next().unwrap();
        assert_eq!(expected, vec![vec![1, 2, 3, 4, 5, 6, 7, 8]]);

        let ds = line(&[0.0; 30], &[0; 30]);
        let input = vec![
            hood(&[20], &[1, 2, 3, 4]),
            hood(&[21], &[3, 4, 5, 6]),
            hood(&[22], &[5, 6, 7, 8]),
        ];
        let out = merge_neighborhoods(input, &ds);
        assert_eq!(members(&out), expected);
        assert_eq!(out[0].sources, BTreeSet::from([20, 21, 22]));
    }

    #[test]
    fn largest_overlap_first() {
        let ds = line(&[0.0; 40], &[0; 40]);
        // B overlaps C completely but A only by half; B and C must merge
        // first, after which A ∪ (B ∪ C) still qualifies.
        let out = merge_neighborhoods(
            vec![hood(&[30], &[1, 2, 3, 4]), hood(&[31], &[3, 4, 5, 6]), hood(&[32], &[3, 4, 5, 6, 7])],
            &ds,
        );
        assert_eq!(out.len(), 1);
        assert!(!has_mergeable_pair(&out));
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        fn arb_hoods() -> impl Strategy<Value = Vec<Neighborhood>> {
            prop::collection::vec(prop::collection::btree_set(0usize..25, 1..8), 0..8).prop_map(|sets| {
                sets.into_iter().enumerate().map(|(i, m)| hood(&[100 + i], &m.into_iter().collect::<Vec<_>>())).collect()
            })
        }

        proptest! {
            #[test]
            fn merge_invariants(input in arb_hoods()) {
                let ds = line(&[0.0; 120], &[0; 120]);
                let before: BTreeSet<usize> = input.iter().flat_map(|n| n.members.iter().copied()).collect();
                let out = merge_neighborhoods(input.clone(), &ds);
                prop_assert!(out.len() <= input.len());
                prop_assert!(!has_mergeable_pair(&out));
                let after: BTreeSet<usize> = out.iter().flat_map(|n| n.members.iter().copied()).collect();
                prop_assert_eq!(before, after);
                let sources: usize = out.iter().map(|n| n.sources.len()).sum();
                prop_assert_eq!(sources, input.len());
                prop_assert_eq!(out, merge_neighborhoods(input, &ds));
            }

            #[test]
            fn neighborhood_matches_full_sort(xs in prop::collection::vec(0u16..50, 20), k in 1usize..6, pick in 0usize..20) {
                let points: Vec<f64> = xs.iter().map(|&x| x as f64).collect();
                let ds = line(&points, &[0; 20]);
                let view = encode(&ds, Metric::EuclideanNormalized).unwrap();
                let n = k_neighborhood(&view, &ds, pick, k).unwrap();
                // Oracle: count strictly closer points for every candidate.
                let d = |a: usize, b: usize| view.distance(a, b);
                let expected: BTreeSet<usize> = (0..20)
                    .filter(|&o| o != pick)
                    .filter(|&o| (0..20).filter(|&q| q != pick && d(q, pick) < d(o, pick)).count() <= k - 1)
                    .collect();
                prop_assert_eq!(&n.members, &expected);
                prop_assert!(n.members.len() >= k);
            }
        }
    }
}
