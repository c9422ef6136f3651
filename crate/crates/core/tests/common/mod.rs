//! Test-only oracles and generators shared by the integration suites.
#![allow(dead_code)]

use std::path::Path;

use ordtree::criteria::{split_gain, ClassHistogram, CriterionSpec, GainResult};
use ordtree::dataset::{Dataset, OrdinalLabel};
use ordtree::metrics::ConfusionMatrix;
use ordtree::tree::{candidate_thresholds, SplitSpec, MIN_RELATIVE_GAIN};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn labels(ix: &[u32]) -> Vec<OrdinalLabel> {
    ix.iter().map(|&i| OrdinalLabel::new(i).unwrap()).collect()
}

/// Random dataset with `n` rows, `k` features and `q` classes. Feature values
/// come from a small integer pool so ties and constant features occur.
pub fn random_dataset(rng: &mut ChaCha8Rng, n: usize, k: usize, q: usize) -> Dataset {
    let pool = rng.random_range(2..=8);
    let rows: Vec<Vec<f64>> = (0..n)
        .map(|_| {
            (0..k)
                .map(|_| rng.random_range(0..pool) as f64 * 0.5 - 1.0)
                .collect()
        })
        .collect();
    let ls = (0..n)
        .map(|_| OrdinalLabel::from_zero_based(rng.random_range(0..q)))
        .collect();
    Dataset::new("random", rows, ls, q).unwrap()
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Exhaustive scan: every feature, every candidate threshold, partition by
/// `x < t`, count both sides by hand and score with `split_gain`. Keeps the
/// first maximum in (feature, threshold) order.
pub fn brute_force_split(
    ds: &Dataset,
    rows: &[usize],
    spec: &CriterionSpec,
) -> Option<(SplitSpec, GainResult)> {
    let q = ds.num_classes();
    let count = |rs: &[usize]| {
        let mut c = vec![0u64; q];
        for &r in rs {
            c[ds.label(r).zero_based()] += 1;
        }
        ClassHistogram::from_counts(c)
    };
    let parent = count(rows);
    if rows.len() < 2 || parent.counts().iter().filter(|&&c| c > 0).count() < 2 {
        return None;
    }
    let parent_impurity = spec.impurity(&parent).unwrap();
    let mut best: Option<(SplitSpec, GainResult)> = None;
    for feature in 0..ds.num_features() {
        let values: Vec<f64> = rows.iter().map(|&r| ds.row(r)[feature]).collect();
        for t in candidate_thresholds(&values) {
            let left: Vec<usize> = rows
                .iter()
                .copied()
                .filter(|&r| ds.row(r)[feature] < t)
                .collect();
            let right: Vec<usize> = rows
                .iter()
                .copied()
                .filter(|&r| ds.row(r)[feature] >= t)
                .collect();
            assert!(!left.is_empty() && !right.is_empty());
            let g = split_gain(spec, &parent, &count(&left), &count(&right)).unwrap();
            if g.gain <= MIN_RELATIVE_GAIN * parent_impurity.abs() {
                continue;
            }
            let better = match &best {
                None => true,
                Some((_, b)) => g.gain > b.gain,
            };
            if better {
                best = Some((
                    SplitSpec {
                        feature,
                        threshold: t,
                    },
                    g,
                ));
            }
        }
    }
    best
}

/// QWK by direct summation over patterns rather than the confusion matrix.
pub fn qwk_direct(y: &[usize], p: &[usize], q: usize, score: impl Fn(usize) -> f64) -> Option<f64> {
    let n = y.len() as f64;
    let w = |a: usize, b: usize| (score(a) - score(b)).powi(2) / ((q - 1) * (q - 1)) as f64;
    let num: f64 = y.iter().zip(p).map(|(&a, &b)| w(a, b)).sum();
    let mut den = 0.0;
    for &a in y {
        for &b in p {
            den += w(a, b);
        }
    }
    den /= n;
    (den != 0.0).then(|| 1.0 - num / den)
}

pub fn random_confusion(rng: &mut ChaCha8Rng) -> ConfusionMatrix {
    let q = rng.random_range(2..=7);
    let rows = (0..q)
        .map(|_| (0..q).map(|_| rng.random_range(0..12u64)).collect())
        .collect();
    ConfusionMatrix::from_rows(rows)
}

/// Learnable ordinal problem: the label is a noisy linear score cut into `q`
/// equal-width bins.
pub fn ordinal_problem(name: &str, n: usize, k: usize, q: usize, noise: f64, seed: u64) -> Dataset {
    let mut r = rng(seed);
    let rows: Vec<Vec<f64>> = (0..n)
        .map(|_| {
            (0..k)
                .map(|_| (r.random_range(0.0..1.0f64) * 100.0).round() / 100.0)
                .collect()
        })
        .collect();
    let ls = rows
        .iter()
        .map(|x| {
            let s = x
                .iter()
                .enumerate()
                .map(|(j, v)| v / (j + 1) as f64)
                .sum::<f64>()
                / (1..=k).map(|j| 1.0 / j as f64).sum::<f64>()
                + r.random_range(-noise..=noise);
            OrdinalLabel::from_zero_based(((s * q as f64).floor().max(0.0) as usize).min(q - 1))
        })
        .collect();
    Dataset::new(name, rows, ls, q).unwrap()
}

/// Writes `<name>_train.csv` (first `n_train` rows) and `<name>_test.csv`,
/// each with a header and the one-based label last.
pub fn write_split(dir: &Path, ds: &Dataset, n_train: usize) {
    let header: Vec<String> = (1..=ds.num_features())
        .map(|j| format!("x{j}"))
        .chain(["y".to_string()])
        .collect();
    let render = |rows: std::ops::Range<usize>| {
        let mut s = header.join(",") + "\n";
        for i in rows {
            let cells: Vec<String> = ds.row(i).iter().map(|v| v.to_string()).collect();
            s += &format!("{},{}\n", cells.join(","), ds.label(i).index());
        }
        s
    };
    std::fs::write(
        dir.join(format!("{}_train.csv", ds.name())),
        render(0..n_train),
    )
    .unwrap();
    std::fs::write(
        dir.join(format!("{}_test.csv", ds.name())),
        render(n_train..ds.len()),
    )
    .unwrap();
}
