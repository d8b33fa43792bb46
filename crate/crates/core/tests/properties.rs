use std::collections::BTreeMap;

use cobfc::data::{encode, read_arff, read_csv, write_arff, write_csv, Attribute, Dataset, Instance, Metric, Value};
use cobfc::lof::{detect_class_outliers, lof_scores, LofParams};
use proptest::prelude::*;

#[derive(Clone, Debug)]
enum Col {
    Num,
    Nom(Vec<String>),
}

fn arb_schema() -> impl Strategy<Value = Vec<Col>> {
    let nominal_value = prop::sample::select(vec!["red", "blue", "two words", "it's", "a,b", "{x}", "%pct", "7"]);
    let col = prop_oneof![
        Just(Col::Num),
        prop::collection::btree_set(nominal_value, 1..4).prop_map(|s| Col::Nom(s.into_iter().map(String::from).collect())),
    ];
    prop::collection::vec(col, 1..5)
}

fn arb_value(col: &Col) -> BoxedStrategy<Value> {
    match col {
        Col::Num => prop_oneof![
            1 => Just(Value::Missing),
            6 => prop::num::f64::NORMAL.prop_map(Value::Numeric),
            3 => (-1000i32..1000).prop_map(|i| Value::Numeric(i as f64 / 8.0)),
        ]
        .boxed(),
        Col::Nom(d) => prop_oneof![
            1 => Just(Value::Missing),
            6 => (0..d.len() as u32).prop_map(Value::Nominal),
        ]
        .boxed(),
    }
}

fn arb_dataset() -> impl Strategy<Value = Dataset> {
    arb_schema().prop_flat_map(|schema| {
        let row = schema.iter().map(arb_value).collect::<Vec<_>>();
        let rows = prop::collection::vec((row, 0usize..2), 1..20);
        (Just(schema), rows).prop_map(|(schema, rows)| {
            let attrs = schema
                .iter()
                .enumerate()
                .map(|(i, c)| match c {
                    Col::Num => Attribute::numeric(format!("n {}", i)),
                    Col::Nom(d) => Attribute::nominal(format!("c{}", i), d.clone()),
                })
                .collect();
            let instances = rows
                .into_iter()
                .enumerate()
                .map(|(id, (values, label))| Instance { id, values, label })
                .collect();
            Dataset::new("gen", attrs, Attribute::nominal("class", ["yes", "no"]), instances).unwrap()
        })
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn arff_round_trip(ds in arb_dataset()) {
        let text = write_arff(&ds);
        let back = read_arff(&text, None).unwrap();
        prop_assert_eq!(back, ds);
    }

    #[test]
    fn csv_write_is_a_fixed_point(ds in arb_dataset()) {
        // Type inference may change the schema on the first read, so the
        // law is idempotence of write . read from the first written form.
        let first = write_csv(&ds);
        if let Ok(once) = read_csv(&first, None) {
            let second = write_csv(&once);
            let twice = read_csv(&second, None).unwrap();
            prop_assert_eq!(&twice, &once);
            prop_assert_eq!(write_csv(&twice), second);
        }
    }
}

fn arb_encodable() -> impl Strategy<Value = (Dataset, Metric)> {
    arb_dataset().prop_flat_map(|ds| {
        let has_num = ds.attributes().iter().any(|a| a.is_numeric());
        let has_nom = ds.attributes().iter().any(|a| !a.is_numeric());
        let metrics: Vec<Metric> = [
            (has_num, Metric::EuclideanNormalized),
            (has_nom, Metric::ManhattanBinarized),
        ]
        .into_iter()
        .filter(|(ok, _)| *ok)
        .map(|(_, m)| m)
        .collect();
        (Just(ds), prop::sample::select(metrics))
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn metric_axioms((ds, metric) in arb_encodable()) {
        let view = encode(&ds, metric).unwrap();
        let n = view.len();
        for a in 0..n {
            prop_assert_eq!(view.distance(a, a), 0.0);
            for b in 0..n {
                let d = view.distance(a, b);
                prop_assert!(d >= 0.0 && d.is_finite());
                prop_assert_eq!(d, view.distance(b, a));
                for c in 0..n {
                    prop_assert!(view.distance(a, c) <= d + view.distance(b, c) + 1e-12);
                }
            }
        }
    }
}

fn two_class(points: &[(f64, f64, usize)]) -> Dataset {
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
        "pts",
        vec![Attribute::numeric("x"), Attribute::numeric("y")],
        Attribute::nominal("class", ["a", "b"]),
        instances,
    )
    .unwrap()
}

fn class_scores(ds: &Dataset, label: &str, params: &LofParams) -> BTreeMap<usize, f64> {
    let view = encode(ds, Metric::EuclideanNormalized).unwrap();
    let report = detect_class_outliers(ds, &view, params).unwrap();
    let class = report.classes.iter().find(|c| c.label == label).unwrap();
    class.scores.iter().map(|s| (s.id, s.score)).collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    /// Scores of one class ignore where the other class lies, as long as
    /// the normalization range stays put.
    #[test]
    fn class_scores_are_local(
        a in prop::collection::vec((0.0..10.0f64, 0.0..10.0f64), 12..30),
        b1 in prop::collection::vec((0.0..10.0f64, 0.0..10.0f64), 12..20),
        b2 in prop::collection::vec((0.0..10.0f64, 0.0..10.0f64), 12..20),
    ) {
        let pins = [(0.0, 0.0, 0usize), (10.0, 10.0, 0usize)];
        let build = |b: &[(f64, f64)]| {
            let mut pts: Vec<(f64, f64, usize)> = pins.to_vec();
            pts.extend(a.iter().map(|&(x, y)| (x, y, 0)));
            pts.extend(b.iter().map(|&(x, y)| (x, y, 1)));
            two_class(&pts)
        };
        let params = LofParams { min_pts: 5, threshold: 1.5 };
        prop_assert_eq!(class_scores(&build(&b1), "a", &params), class_scores(&build(&b2), "a", &params));
    }

    /// Detection agrees with scoring the class partition directly.
    #[test]
    fn detection_uses_class_partitions(pts in prop::collection::vec((0.0..10.0f64, 0.0..10.0f64, 0usize..2), 30..60)) {
        let ds = two_class(&pts);
        let params = LofParams { min_pts: 4, threshold: 1.3 };
        let view = encode(&ds, Metric::EuclideanNormalized).unwrap();
        let report = detect_class_outliers(&ds, &view, &params).unwrap();
        for (label, ids) in ds.class_partition().into_iter().enumerate() {
            let name = ds.label_name(label);
            let Some(class) = report.classes.iter().find(|c| c.label == name) else { continue };
            if ids.len() <= params.min_pts {
                prop_assert!(!class.scored);
                continue;
            }
            let direct = lof_scores(&view, &ids, &params).unwrap();
            for s in &class.scores {
                prop_assert_eq!(direct[&s.id], s.score);
                prop_assert_eq!(class.outliers.contains(&s.id), s.score > params.threshold);
            }
        }
    }
}

/// Moving a lone point away from its class never lowers its score, and far
/// enough out it is flagged.
#[test]
fn planted_score_grows_with_distance() {
    let mut base = Vec::new();
    for i in 0..5 {
        for j in 0..5 {
            base.push((i as f64 * 0.25, j as f64 * 0.25, 0usize));
        }
    }
    // Other-class pins fix the normalization range.
    base.push((0.0, 0.0, 1));
    base.push((40.0, 40.0, 1));
    let params = LofParams { min_pts: 5, threshold: 1.5 };
    let mut last = 0.0;
    for step in 0..12 {
        let t = 3.0 + step as f64 * 2.0;
        let mut pts = base.clone();
        pts.push((t, t, 0));
        let ds = two_class(&pts);
        let planted = ds.len() - 1;
        let score = class_scores(&ds, "a", &params)[&planted];
        assert!(score >= last, "t={} score {} < previous {}", t, score, last);
        assert!(score > params.threshold, "t={} score {}", t, score);
        last = score;
    }
}
