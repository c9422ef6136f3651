mod common;

use common::{labels, qwk_direct, random_confusion, rng};
use ordtree::criteria::ScoreMap;
use ordtree::dataset::OrdinalLabel;
use ordtree::metrics::{mae, qwk, rps, ConfusionMatrix, EvalReport};
use rand::Rng;

/// Every vector of length `n` over `q` classes, zero-based.
fn all_vectors(n: usize, q: usize) -> Vec<Vec<usize>> {
    let mut out = vec![vec![]];
    for _ in 0..n {
        out = out
            .into_iter()
            .flat_map(|v| {
                (0..q).map(move |c| {
                    let mut w = v.clone();
                    w.push(c);
                    w
                })
            })
            .collect();
    }
    out
}

fn to_labels(v: &[usize]) -> Vec<OrdinalLabel> {
    v.iter()
        .map(|&c| OrdinalLabel::from_zero_based(c))
        .collect()
}

fn one_hot(v: &[usize], q: usize) -> Vec<Vec<f64>> {
    v.iter()
        .map(|&c| (0..q).map(|j| if j == c { 1.0 } else { 0.0 }).collect())
        .collect()
}

#[test]
fn exhaustive_small_cases_agree_with_direct_sums() {
    let scores = ScoreMap::Identity;
    for q in 2..=3 {
        for n in 1..=5 {
            let vectors = all_vectors(n, q);
            for y in &vectors {
                for p in &vectors {
                    let yt = to_labels(y);
                    let yp = to_labels(p);
                    let direct_mae = y
                        .iter()
                        .zip(p)
                        .map(|(&a, &b)| (a as f64 - b as f64).abs())
                        .sum::<f64>()
                        / n as f64;
                    assert!((mae(&yt, &yp, &scores).unwrap() - direct_mae).abs() < 1e-12);

                    let cm = ConfusionMatrix::from_labels(&yt, &yp, q).unwrap();
                    let k = qwk(&cm, &scores).unwrap();
                    match qwk_direct(y, p, q, |c| c as f64 + 1.0) {
                        Some(v) => {
                            assert!(!k.degenerate);
                            assert!((k.value - v).abs() < 1e-12, "y={y:?} p={p:?}");
                        }
                        None => {
                            assert!(k.degenerate);
                            assert_eq!(k.value, 0.0);
                        }
                    }

                    // With one-hot forecasts the cumulative distributions differ
                    // in exactly |y - p| positions.
                    let r = rps(&yt, &one_hot(p, q)).unwrap();
                    assert!((r - direct_mae).abs() < 1e-12);
                }
            }
        }
    }
}

#[test]
fn kappa_extremes() {
    let s = ScoreMap::Identity;
    let y = labels(&[1, 2, 3, 4]);
    let cm = ConfusionMatrix::from_labels(&y, &y, 4).unwrap();
    assert_eq!(qwk(&cm, &s).unwrap().value, 1.0);

    // Independent marginals give zero agreement beyond chance.
    let y = labels(&[1, 1, 2, 2]);
    let p = labels(&[1, 2, 1, 2]);
    let cm = ConfusionMatrix::from_labels(&y, &p, 2).unwrap();
    assert!(qwk(&cm, &s).unwrap().value.abs() < 1e-15);

    // Full reversal: sum W*O = 2, sum W*E = (0.5 + 0.5) * 1 = 1.
    let y = labels(&[1, 3]);
    let p = labels(&[3, 1]);
    let cm = ConfusionMatrix::from_labels(&y, &p, 3).unwrap();
    assert!((qwk(&cm, &s).unwrap().value - (-1.0)).abs() < 1e-12);
}

#[test]
fn three_class_denominator_by_hand() {
    // rows = (2, 1, 1), cols = (1, 2, 1), N = 4
    let cm = ConfusionMatrix::from_rows(vec![vec![1, 1, 0], vec![0, 1, 0], vec![0, 0, 1]]);
    // W = [[0,.25,1],[.25,0,.25],[1,.25,0]]
    // sum W*E = (2*2*.25 + 2*1*1 + 1*1*.25 + 1*1*.25 + 1*1*1 + 1*2*.25) / 4 = 5/4
    // sum W*O = .25
    let k = qwk(&cm, &ScoreMap::Identity).unwrap();
    assert!((k.value - (1.0 - 0.25 / 1.25)).abs() < 1e-12);
}

#[test]
fn kappa_is_invariant_to_affine_scores() {
    let mut r = rng(31);
    let mut checked = 0;
    while checked < 100 {
        let cm = random_confusion(&mut r);
        if cm.total() == 0 {
            continue;
        }
        let q = cm.num_classes();
        let a = r.random_range(-5.0..5.0);
        let b = r.random_range(0.1..10.0);
        let affine = ScoreMap::custom((1..=q).map(|c| a + b * c as f64).collect()).unwrap();
        let base = qwk(&cm, &ScoreMap::Identity).unwrap();
        let moved = qwk(&cm, &affine).unwrap();
        assert_eq!(base.degenerate, moved.degenerate);
        assert!((base.value - moved.value).abs() < 1e-9);
        assert!(base.value <= 1.0 + 1e-12);
        checked += 1;
    }
}

#[test]
fn single_class_is_degenerate() {
    let y = labels(&[2, 2, 2]);
    let cm = ConfusionMatrix::from_labels(&y, &y, 3).unwrap();
    let k = qwk(&cm, &ScoreMap::Identity).unwrap();
    assert!(k.degenerate);
    assert_eq!(k.value, 0.0);
}

#[test]
fn rps_hand_values_and_bounds() {
    let y = labels(&[1]);
    let uniform = vec![vec![1.0 / 3.0; 3]];
    assert!((rps(&y, &uniform).unwrap() - 5.0 / 9.0).abs() < 1e-12);
    let y = labels(&[2]);
    assert!((rps(&y, &uniform).unwrap() - 2.0 / 9.0).abs() < 1e-12);

    let mut r = rng(4);
    for _ in 0..500 {
        let q = r.random_range(2..=8);
        let raw: Vec<f64> = (0..q).map(|_| r.random_range(0.0..1.0)).collect();
        let s: f64 = raw.iter().sum();
        let p: Vec<f64> = raw.iter().map(|v| v / s).collect();
        let y = vec![OrdinalLabel::from_zero_based(r.random_range(0..q))];
        let v = rps(&y, &[p]).unwrap();
        assert!((0.0..=(q - 1) as f64).contains(&v));
    }
    let worst = rps(&labels(&[1]), &[vec![0.0, 0.0, 0.0, 1.0]]).unwrap();
    assert_eq!(worst, 3.0);
}

#[test]
fn invalid_inputs_are_rejected() {
    assert!(rps(&labels(&[1]), &[vec![0.5, 0.4]]).is_err());
    assert!(rps(&labels(&[1]), &[vec![1.5, -0.5]]).is_err());
    assert!(rps(&labels(&[3]), &[vec![0.5, 0.5]]).is_err());
    assert!(mae(&labels(&[1, 2]), &labels(&[1]), &ScoreMap::Identity).is_err());
    assert!(ConfusionMatrix::from_labels(&labels(&[4]), &labels(&[1]), 3).is_err());
}

#[test]
fn custom_scores_change_mae_only_by_spacing() {
    let y = labels(&[1, 2, 3]);
    let p = labels(&[2, 2, 1]);
    let spaced = ScoreMap::custom(vec![0.0, 10.0, 11.0]).unwrap();
    assert!((mae(&y, &p, &spaced).unwrap() - (10.0 + 0.0 + 11.0) / 3.0).abs() < 1e-12);
    assert!((mae(&y, &p, &ScoreMap::Identity).unwrap() - 1.0).abs() < 1e-12);
}

#[test]
fn report_bundles_all_metrics() {
    let y = labels(&[1, 2, 3, 3]);
    let p = labels(&[1, 3, 3, 2]);
    let probas = one_hot(&[0, 2, 2, 1], 3);
    let e = EvalReport::compute(&y, &p, &probas, 3, &ScoreMap::Identity).unwrap();
    assert!((e.mae - 0.5).abs() < 1e-12);
    assert!((e.rps - 0.5).abs() < 1e-12);
    assert_eq!(e.confusion.total(), 4);
    let direct = qwk_direct(&[0, 1, 2, 2], &[0, 2, 2, 1], 3, |c| c as f64).unwrap();
    assert!((e.qwk - direct).abs() < 1e-12);
    assert_eq!(
        e.confusion.to_csv().lines().next().unwrap(),
        "true\\pred,1,2,3"
    );
}
