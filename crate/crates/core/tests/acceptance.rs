//! Acceptance gate. Each test prints one `PASS`/`FAIL` line for its
//! criterion; run with `--nocapture` to see all of them.

mod common;

use std::collections::HashMap;
use std::path::{Path, PathBuf};

use common::{
    brute_force_split, labels, ordinal_problem, random_confusion, random_dataset, rng, write_split,
};
use ordtree::bench::{run_experiment, ExperimentConfig, Protocol};
use ordtree::criteria::{
    impurity_entropy, impurity_gini, impurity_ogini, impurity_ranking, impurity_weighted_entropy,
    split_gain, ClassHistogram, CriterionKind, CriterionSpec, ScoreMap,
};
use ordtree::dataset::{archive_manifest, Manifest, ManifestEntry};
use ordtree::metrics::{qwk, rps, ConfusionMatrix};
use ordtree::tree::{best_split, DecisionTree, GrowConfig};
use rand::Rng;

fn verdict(id: u32, title: &str, failures: Vec<String>) {
    if failures.is_empty() {
        println!("criterion {id} PASS: {title}");
    } else {
        println!("criterion {id} FAIL: {title}");
        for f in &failures {
            println!("    {f}");
        }
        panic!("criterion {id} failed with {} problem(s)", failures.len());
    }
}

fn h(counts: &[u64]) -> ClassHistogram {
    ClassHistogram::from_counts(counts.to_vec())
}

fn spec(kind: CriterionKind) -> CriterionSpec {
    CriterionSpec::new(kind)
}

#[test]
fn criterion_1_impurity_anchors() {
    let mut failures = Vec::new();
    let x = h(&[10, 0, 0, 10]);
    let g = impurity_gini(&x).unwrap();
    let e = impurity_entropy(&x).unwrap();
    if (g - 0.5).abs() > 1e-12 {
        failures.push(format!("gini = {g}, want 0.5"));
    }
    if (e - 1.0).abs() > 1e-12 {
        failures.push(format!("entropy = {e}, want 1.0"));
    }
    verdict(1, "gini 0.5 and entropy 1.0 bit on (10,0,0,10)", failures);
}

#[test]
fn criterion_2_ordinal_preference() {
    let mut failures = Vec::new();
    let far = h(&[10, 0, 0, 10]);
    let near = h(&[10, 10, 0, 0]);
    let pairs = [
        (
            "gini",
            impurity_gini(&far).unwrap(),
            impurity_gini(&near).unwrap(),
        ),
        (
            "entropy",
            impurity_entropy(&far).unwrap(),
            impurity_entropy(&near).unwrap(),
        ),
    ];
    for (name, a, b) in pairs {
        if a != b {
            failures.push(format!("{name}: {a} != {b}"));
        }
    }
    let wig = spec(CriterionKind::Wig);
    let ri = spec(CriterionKind::Ri);
    let ordinal = [
        (
            "ogini",
            impurity_ogini(&far).unwrap(),
            impurity_ogini(&near).unwrap(),
        ),
        (
            "weighted entropy",
            impurity_weighted_entropy(&far, &wig).unwrap(),
            impurity_weighted_entropy(&near, &wig).unwrap(),
        ),
        (
            "ranking",
            impurity_ranking(&far, &ri),
            impurity_ranking(&near, &ri),
        ),
    ];
    for (name, a, b) in ordinal {
        if b >= a {
            failures.push(format!("{name}: adjacent {b} not below distant {a}"));
        }
    }

    for n in [1u64, 5, 10, 37] {
        let parent = h(&[n, n, n, n]);
        let (al, ar) = (h(&[n, 0, 0, n]), h(&[0, n, n, 0]));
        let (bl, br) = (h(&[n, n, 0, 0]), h(&[0, 0, n, n]));
        for kind in CriterionKind::ALL {
            let s = spec(kind);
            let ga = split_gain(&s, &parent, &al, &ar).unwrap().gain;
            let gb = split_gain(&s, &parent, &bl, &br).unwrap().gain;
            let ok = match kind {
                CriterionKind::Gini | CriterionKind::Ig => ga == gb,
                _ => gb > ga,
            };
            if !ok {
                failures.push(format!("n={n} {kind}: gain(A)={ga} gain(B)={gb}"));
            }
        }
    }
    verdict(
        2,
        "nominal measures ignore adjacency, ordinal measures prefer it",
        failures,
    );
}

#[test]
fn criterion_3_split_search_oracle() {
    let mut failures = Vec::new();
    let mut r = rng(2024);
    for case in 0..200 {
        let n = r.random_range(2..=50);
        let k = r.random_range(1..=4);
        let q = r.random_range(2..=5);
        let ds = random_dataset(&mut r, n, k, q);
        let rows: Vec<usize> = (0..n).collect();
        for kind in CriterionKind::ALL {
            let s = spec(kind);
            let fast = best_split(&ds, &rows, &s);
            let slow = brute_force_split(&ds, &rows, &s);
            if fast != slow {
                failures.push(format!("case {case} {kind}: {fast:?} vs {slow:?}"));
            }
        }
    }
    verdict(
        3,
        "best split equals exhaustive scan on 200 random datasets",
        failures,
    );
}

#[test]
fn criterion_4_metric_oracles() {
    let mut failures = Vec::new();
    let id = ScoreMap::Identity;
    for q in 2..=6 {
        let rows = (0..q)
            .map(|i| {
                (0..q)
                    .map(|j| if i == j { 3 + i as u64 } else { 0 })
                    .collect()
            })
            .collect();
        let k = qwk(&ConfusionMatrix::from_rows(rows), &id).unwrap().value;
        if k != 1.0 {
            failures.push(format!("diagonal Q={q}: qwk {k}"));
        }
    }
    let anti = qwk(
        &ConfusionMatrix::from_rows(vec![vec![0, 1], vec![1, 0]]),
        &id,
    )
    .unwrap()
    .value;
    if (anti + 1.0).abs() > 1e-12 {
        failures.push(format!("anti-diagonal qwk {anti}"));
    }
    let r = rps(&labels(&[2]), &[vec![0.2, 0.5, 0.3]]).unwrap();
    if (r - 0.13).abs() > 1e-12 {
        failures.push(format!("rps {r}, want 0.13"));
    }

    let mut g = rng(77);
    let mut checked = 0;
    while checked < 100 {
        let cm = random_confusion(&mut g);
        if cm.total() == 0 {
            continue;
        }
        let q = cm.num_classes();
        let a = g.random_range(0.05..20.0);
        let b = g.random_range(-10.0..10.0);
        let moved = ScoreMap::custom((1..=q).map(|c| a * c as f64 + b).collect()).unwrap();
        let k0 = qwk(&cm, &id).unwrap();
        let k1 = qwk(&cm, &moved).unwrap();
        if k0.degenerate != k1.degenerate || (k0.value - k1.value).abs() > 1e-9 {
            failures.push(format!("affine a={a} b={b}: {k0:?} vs {k1:?}"));
        }
        checked += 1;
    }
    verdict(
        4,
        "kappa extremes, rps hand value, kappa affine invariance",
        failures,
    );
}

/// Published 20-seed mean test MAE, in the order IG, Gini, OGini, WIG, RI.
const REFERENCE_MAE: [(&str, [f64; 5]); 6] = [
    ("contact-lenses", [0.383, 0.383, 0.350, 0.383, 0.367]),
    ("pasture", [0.228, 0.217, 0.222, 0.250, 0.328]),
    ("squash-stored", [0.431, 0.438, 0.423, 0.412, 0.400]),
    ("squash-unstored", [0.242, 0.242, 0.242, 0.227, 0.246]),
    ("bondrate", [0.757, 0.707, 0.653, 0.693, 0.810]),
    ("tae", [0.571, 0.572, 0.607, 0.575, 0.600]),
];
const REFERENCE_ORDER: [CriterionKind; 5] = [
    CriterionKind::Ig,
    CriterionKind::Gini,
    CriterionKind::OGini,
    CriterionKind::Wig,
    CriterionKind::Ri,
];
const MAE_TOLERANCE: f64 = 0.15;
const MANY_CLASS_SUBSET: [&str; 4] = ["ERA", "ESL", "automobile", "winequality-red"];
const OGINI_SLACK: f64 = 0.02;

/// `ORDTREE_DATA_DIR`, or `data/` at the workspace root.
fn data_dir() -> PathBuf {
    std::env::var_os("ORDTREE_DATA_DIR")
        .map(PathBuf::from)
        .unwrap_or_else(|| {
            let root = Path::new(env!("CARGO_MANIFEST_DIR"))
                .ancestors()
                .nth(2)
                .unwrap();
            root.join("data")
        })
}

#[test]
fn criterion_5_archive_reproduction() {
    let title =
        "20-seed MAE within 0.15 on six small archives; OGini <= Gini + 0.02 on four Q>=6 archives";
    let dir = data_dir();
    let names: Vec<&str> = REFERENCE_MAE
        .iter()
        .map(|(n, _)| *n)
        .chain(MANY_CLASS_SUBSET)
        .collect();
    let missing: Vec<String> = names
        .iter()
        .flat_map(|n| [format!("{n}_train.csv"), format!("{n}_test.csv")])
        .filter(|f| !dir.join(f).is_file())
        .collect();
    if !missing.is_empty() {
        verdict(
            5,
            title,
            vec![format!(
                "datasets missing from {}: {}",
                dir.display(),
                missing.join(", ")
            )],
        );
    }

    let config = ExperimentConfig {
        manifest: Some(archive_manifest()),
        datasets: names.iter().map(|s| s.to_string()).collect(),
        seeds: (0..20).collect(),
        ..ExperimentConfig::new(&dir)
    };
    let output = run_experiment(&config).expect("experiment runs");
    let mut failures: Vec<String> = output
        .failures
        .iter()
        .map(|f| format!("{}: {}", f.dataset, f.error))
        .collect();

    let mut sums: HashMap<(String, CriterionKind), (f64, usize)> = HashMap::new();
    for r in output.records() {
        let e = sums.entry((r.dataset.clone(), r.criterion)).or_default();
        e.0 += r.mae;
        e.1 += 1;
    }
    let mean =
        |ds: &str, c: CriterionKind| sums.get(&(ds.to_string(), c)).map(|(s, n)| s / *n as f64);

    for (ds, reference) in REFERENCE_MAE {
        for (c, want) in REFERENCE_ORDER.iter().zip(reference) {
            match mean(ds, *c) {
                Some(got) if (got - want).abs() <= MAE_TOLERANCE => {}
                Some(got) => {
                    failures.push(format!("{ds} {c}: mean MAE {got:.3}, reference {want:.3}"))
                }
                None => failures.push(format!("{ds} {c}: no runs")),
            }
        }
    }
    let subset_mean = |c| {
        let v: Vec<f64> = MANY_CLASS_SUBSET
            .iter()
            .filter_map(|d| mean(d, c))
            .collect();
        (v.len() == MANY_CLASS_SUBSET.len()).then(|| v.iter().sum::<f64>() / v.len() as f64)
    };
    match (
        subset_mean(CriterionKind::OGini),
        subset_mean(CriterionKind::Gini),
    ) {
        (Some(o), Some(g)) if o <= g + OGINI_SLACK => {}
        (Some(o), Some(g)) => failures.push(format!(
            "Q>=6 subset: OGini {o:.3} > Gini {g:.3} + {OGINI_SLACK}"
        )),
        _ => failures.push("Q>=6 subset incomplete".into()),
    }
    verdict(5, title, failures);
}

#[test]
fn criterion_6_grid_accounting() {
    let data = tempfile::tempdir().unwrap();
    let a = ordinal_problem("first", 160, 3, 4, 0.1, 10).with_original_split(120, 40);
    let b = ordinal_problem("second", 200, 4, 7, 0.05, 11).with_original_split(150, 50);
    write_split(data.path(), &a, 120);
    write_split(data.path(), &b, 150);
    let manifest = Manifest {
        entries: vec![ManifestEntry::describe(&a), ManifestEntry::describe(&b)],
    };
    let config = ExperimentConfig {
        manifest: Some(manifest),
        seeds: (0..20).collect(),
        protocol: Protocol::default(),
        ..ExperimentConfig::new(data.path())
    };
    let output = run_experiment(&config).unwrap();

    let mut failures = Vec::new();
    let expected = config.criteria.len() * config.seeds.len() * 2;
    if output.runs.len() != expected {
        failures.push(format!("{} records, want {expected}", output.runs.len()));
    }
    failures.extend(
        output
            .failures
            .iter()
            .map(|f| format!("{}: {}", f.dataset, f.error)),
    );
    let mut hashes: HashMap<(String, u64), String> = HashMap::new();
    for run in &output.runs {
        let r = &run.record;
        if ![3, 5, 8, 16].contains(&r.chosen_depth) {
            failures.push(format!(
                "{} {} seed {}: depth {}",
                r.dataset, r.criterion, r.seed, r.chosen_depth
            ));
        }
        let key = (r.dataset.clone(), r.seed);
        match hashes.get(&key) {
            Some(prev) if *prev != run.partition_hash => failures.push(format!(
                "{} seed {}: partition differs for {}",
                r.dataset, r.seed, r.criterion
            )),
            Some(_) => {}
            None => {
                hashes.insert(key, run.partition_hash.clone());
            }
        }
    }
    verdict(
        6,
        "5 criteria x 20 seeds x 2 datasets, grid depths, shared partitions",
        failures,
    );
}

#[test]
fn criterion_7_property_suite() {
    let mut failures = Vec::new();
    let wig = spec(CriterionKind::Wig);
    let ri = spec(CriterionKind::Ri);
    for q in 2..=8 {
        for class in 0..q {
            let mut counts = vec![0; q];
            counts[class] = 13;
            let x = h(&counts);
            let values = [
                impurity_gini(&x).unwrap(),
                impurity_entropy(&x).unwrap(),
                impurity_ogini(&x).unwrap(),
                impurity_weighted_entropy(&x, &wig).unwrap(),
                impurity_ranking(&x, &ri),
            ];
            if values.iter().any(|&v| v != 0.0) {
                failures.push(format!("pure node Q={q} class {class}: {values:?}"));
            }
        }
    }

    let mut r = rng(99);
    let dir = tempfile::tempdir().unwrap();
    for case in 0..20 {
        let ds = random_dataset(&mut r, 60, 3, 5);
        for kind in CriterionKind::ALL {
            let config = GrowConfig::new(spec(kind), 1 + case % 8);
            let tree = DecisionTree::fit_all(&ds, &config).unwrap();
            if DecisionTree::fit_all(&ds, &config).unwrap() != tree {
                failures.push(format!("case {case} {kind}: refit differs"));
            }
            let path = dir.path().join(format!("{case}_{kind}.json"));
            tree.save(&path).unwrap();
            if DecisionTree::load(&path).unwrap() != tree {
                failures.push(format!("case {case} {kind}: JSON round trip differs"));
            }
            for i in 0..ds.len() {
                let p = tree.predict_proba(ds.row(i)).unwrap();
                let label = tree.predict(ds.row(i)).unwrap();
                let max = p.iter().cloned().fold(f64::MIN, f64::max);
                if (p.iter().sum::<f64>() - 1.0).abs() > 1e-12 {
                    failures.push(format!(
                        "case {case} {kind} row {i}: probabilities sum to {}",
                        p.iter().sum::<f64>()
                    ));
                }
                if p.iter().position(|&v| v == max) != Some(label.zero_based()) {
                    failures.push(format!(
                        "case {case} {kind} row {i}: argmax disagrees with {label}"
                    ));
                }
            }
        }
    }
    verdict(
        7,
        "pure nodes, probability rows, determinism, JSON round trip",
        failures,
    );
}
