//! Seeded synthetic datasets used by the tests, the acceptance suite and
//! the `synth` CLI command.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::data::{Attribute, Dataset, Instance, Value};

fn two_d(relation: &str, labels: [&str; 2], points: Vec<(f64, f64, usize)>) -> Dataset {
    let instances = points
        .into_iter()
        .enumerate()
        .map(|(id, (x, y, label))| Instance {
            id,
            values: vec![Value::Numeric(x), Value::Numeric(y)],
            label,
        })
        .collect();
    Dataset::new(
        relation,
        vec![Attribute::numeric("x"), Attribute::numeric("y")],
        Attribute::nominal("class", labels),
        instances,
    )
    .expect("generated data is well formed")
}

fn blob(rng: &mut ChaCha8Rng, center: (f64, f64), sd: f64, n: usize, label: usize) -> Vec<(f64, f64, usize)> {
    let normal = Normal::new(0.0, sd).expect("positive sd");
    (0..n)
        .map(|_| (center.0 + normal.sample(rng), center.1 + normal.sample(rng), label))
        .collect()
}

/// Two classes with two 100-point Gaussian blobs each, plus three points
/// planted inside blobs of the other class.
#[derive(Clone, Debug)]
pub struct FigureOne {
    pub dataset: Dataset,
    /// Ids of the planted points.
    pub planted: Vec<usize>,
}

pub fn figure_one(seed: u64) -> FigureOne {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut points = Vec::new();
    points.extend(blob(&mut rng, (0.0, 0.0), 1.0, 100, 0));
    points.extend(blob(&mut rng, (0.0, 12.0), 1.0, 100, 0));
    points.extend(blob(&mut rng, (12.0, 0.0), 1.0, 100, 1));
    points.extend(blob(&mut rng, (12.0, 12.0), 1.0, 100, 1));
    let first = points.len();
    points.push((12.3, 0.4, 0));
    points.push((11.6, 11.5, 0));
    points.push((0.5, 12.2, 1));
    FigureOne {
        dataset: two_d("figure_one", ["circle", "plus"], points),
        planted: (first..first + 3).collect(),
    }
}

/// Four 100-point blobs at the corners of a square, opposite corners
/// sharing a label. No line separates the classes.
pub fn xor_blobs(seed: u64) -> Dataset {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut points = Vec::new();
    points.extend(blob(&mut rng, (-2.0, -2.0), 1.0, 100, 0));
    points.extend(blob(&mut rng, (2.0, 2.0), 1.0, 100, 0));
    points.extend(blob(&mut rng, (-2.0, 2.0), 1.0, 100, 1));
    points.extend(blob(&mut rng, (2.0, -2.0), 1.0, 100, 1));
    two_d("xor_blobs", ["even", "odd"], points)
}

/// Two 10x10 unit grids 30 units apart, one per class.
pub fn separated_grids() -> Dataset {
    let mut points = Vec::new();
    for (label, offset) in [(0, 0.0), (1, 30.0)] {
        for i in 0..10 {
            for j in 0..10 {
                points.push((offset + i as f64, j as f64, label));
            }
        }
    }
    two_d("separated_grids", ["left", "right"], points)
}

/// Points uniform in a disc of radius 2 and a ring between radii 2 and 3,
/// 200 each.
pub fn rings(seed: u64) -> Dataset {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut points = Vec::new();
    for (label, lo, hi) in [(0usize, 0.0f64, 2.0f64), (1, 2.0, 3.0)] {
        for _ in 0..200 {
            let r = rng.gen_range(lo * lo..hi * hi).sqrt();
            let t = rng.gen_range(0.0..std::f64::consts::TAU);
            points.push((r * t.cos(), r * t.sin(), label));
        }
    }
    two_d("rings", ["inner", "outer"], points)
}

/// 400 uniform points on a 3x3 checkerboard.
pub fn checkerboard(seed: u64) -> Dataset {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let points = (0..400)
        .map(|_| {
            let x: f64 = rng.gen_range(0.0..3.0);
            let y: f64 = rng.gen_range(0.0..3.0);
            (x, y, (x.floor() as usize + y.floor() as usize) % 2)
        })
        .collect();
    two_d("checkerboard", ["dark", "light"], points)
}

/// A linear boundary with 5% of labels flipped.
pub fn noisy_linear(seed: u64) -> Dataset {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let points = (0..400)
        .map(|_| {
            let x: f64 = rng.gen_range(0.0..10.0);
            let y: f64 = rng.gen_range(0.0..10.0);
            let mut label = usize::from(x + y > 10.0);
            if rng.gen_bool(0.05) {
                label = 1 - label;
            }
            (x, y, label)
        })
        .collect();
    two_d("noisy_linear", ["below", "above"], points)
}

/// Datasets used for trend checks, all derived from `seed`.
pub fn suite(seed: u64) -> Vec<Dataset> {
    vec![
        figure_one(seed).dataset,
        xor_blobs(seed),
        rings(seed),
        checkerboard(seed),
        noisy_linear(seed),
    ]
}
