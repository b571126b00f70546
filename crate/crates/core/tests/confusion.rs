mod common;

use std::collections::{BTreeMap, BTreeSet};

use proptest::prelude::*;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use phonrec::confusion::{
    compare_with_dictionary, components_with_cap, confusion_graph_components, major_confusions, per_class_recall,
    pronunciation_table, table_confusion_matrix, ConfusionMatrix,
};
use phonrec::phoneme::label;
use phonrec::PhonemeLabel;

#[test]
fn embedded_table_matches_transcription() {
    let table = pronunciation_table();
    let rows = common::table2_rows();
    assert_eq!(table.rows.len(), rows.len());
    for ((l, entry), (want, dict, cls)) in table.rows.iter().zip(rows) {
        assert_eq!(*l, want);
        assert_eq!(entry.dictionary, dict, "{l} dictionary column");
        assert_eq!(entry.classifier, cls, "{l} classifier column");
    }
    assert!(table.get(label("k")).unwrap().dictionary.is_empty());
    assert_eq!(table.get(label("nx")).unwrap().classifier, vec![label("m")]);
}

#[test]
fn table_matrix_reproduces_its_classifier_column() {
    let cm = table_confusion_matrix();
    let major = major_confusions(&cm, 6, 0.05).unwrap();
    let table = pronunciation_table();
    for l in PhonemeLabel::all() {
        let want = table.get(l).map(|e| e.classifier.clone()).unwrap_or_default();
        assert_eq!(major[&l], want, "{l}");
    }
    // Fewer slots keep the strongest confusions.
    let top2 = major_confusions(&cm, 2, 0.05).unwrap();
    assert_eq!(top2[&label("ix")], vec![label("ax"), label("ih")]);
}

#[test]
fn dictionary_comparison_of_the_table_with_itself() {
    let table = pronunciation_table();
    let report = compare_with_dictionary(&table.dictionary_map(), &table);
    assert_eq!(report.summary.identical, report.summary.labels);
    assert_eq!(report.summary.observed_total, report.summary.shared_total);
    let classifier = compare_with_dictionary(&table.classifier_map(), &table);
    let ao = classifier.rows.iter().find(|r| r.label == label("ao")).unwrap();
    assert_eq!(ao.observed, ao.dictionary);
    let uw = classifier.rows.iter().find(|r| r.label == label("uw")).unwrap();
    assert_eq!(uw.intersection, BTreeSet::from([label("ux")]));
    assert!(classifier.to_text().contains("labels"));
}

#[test]
fn recall_by_hand() {
    let mut cm = ConfusionMatrix::canonical();
    cm.add(label("aa"), label("aa"), 3).unwrap();
    cm.add(label("aa"), label("ao"), 1).unwrap();
    cm.add(label("s"), label("z"), 2).unwrap();
    let r = per_class_recall(&cm, "x");
    assert_eq!(r.recall(label("aa")), Some(0.75));
    assert_eq!(r.recall(label("s")), Some(0.0));
    assert_eq!(r.recall(label("iy")), None);
    assert_eq!((r.total, r.correct), (6, 3));
    assert_eq!(r.overall, Some(0.5));
    assert_eq!(r.mean_recall(&[label("aa"), label("s"), label("iy")]), Some(0.375));
}

#[test]
fn major_confusion_filters() {
    let l = |s| label(s);
    let labels = [l("aa"), l("ah"), l("ao"), l("iy")];
    let cm = ConfusionMatrix::from_counts(
        &labels,
        vec![vec![90, 6, 4, 0], vec![0, 1, 0, 0], vec![5, 5, 90, 0], vec![0, 0, 0, 0]],
    )
    .unwrap();
    let m = major_confusions(&cm, 6, 0.05).unwrap();
    assert_eq!(m[&l("aa")], vec![l("ah")]);
    assert_eq!(m[&l("ao")], vec![l("aa"), l("ah")]);
    assert!(m[&l("ah")].is_empty() && m[&l("iy")].is_empty());
    assert!(major_confusions(&cm, 0, 0.05).is_err());
    assert!(major_confusions(&cm, 1, 1.0).is_err());
}

fn random_matrix(rng: &mut ChaCha8Rng) -> (ConfusionMatrix, Vec<PhonemeLabel>) {
    let mut labels = PhonemeLabel::all();
    labels.shuffle(rng);
    labels.truncate(rng.random_range(1..=20));
    let n = labels.len();
    let counts = (0..n)
        .map(|i| {
            (0..n)
                .map(|j| {
                    if i == j || rng.random_bool(0.25) {
                        rng.random_range(0..50)
                    } else {
                        0
                    }
                })
                .collect()
        })
        .collect();
    (ConfusionMatrix::from_counts(&labels, counts).unwrap(), labels)
}

#[test]
fn components_agree_with_closure_oracle() {
    let mut rng = ChaCha8Rng::seed_from_u64(31);
    for _ in 0..100 {
        let (cm, labels) = random_matrix(&mut rng);
        let tau = rng.random_range(0.01..0.9);
        let got: BTreeSet<Vec<PhonemeLabel>> = confusion_graph_components(&cm, &labels, tau)
            .unwrap()
            .into_iter()
            .collect();
        let fraction = |i: usize, j: usize| cm.fraction(labels[i], labels[j]).unwrap();
        let oracle = common::closure_components(&labels, |i, j| i != j && fraction(i, j) >= tau);
        assert_eq!(got, oracle);
    }
}

#[test]
fn capped_components_refine_uncapped_ones() {
    let mut rng = ChaCha8Rng::seed_from_u64(37);
    for _ in 0..100 {
        let (cm, labels) = random_matrix(&mut rng);
        let tau = rng.random_range(0.01..0.5);
        let cap = rng.random_range(1..5);
        let whole = confusion_graph_components(&cm, &labels, tau).unwrap();
        let pieces = components_with_cap(&cm, &labels, tau, Some(cap)).unwrap();
        let mut all: Vec<PhonemeLabel> = pieces.iter().flatten().copied().collect();
        all.sort();
        let mut want = labels.clone();
        want.sort();
        assert_eq!(all, want);
        for p in &pieces {
            assert!(p.len() <= cap);
            assert!(whole.iter().any(|c| p.iter().all(|l| c.contains(l))));
        }
    }
    let (cm, labels) = random_matrix(&mut rng);
    assert!(components_with_cap(&cm, &labels, 0.2, Some(0)).is_err());
    assert!(confusion_graph_components(&cm, &labels, 1.0).is_err());
    let small = ConfusionMatrix::zeros(&[label("aa"), label("iy")]).unwrap();
    assert!(confusion_graph_components(&small, &[label("s")], 0.1).is_err());
}

#[test]
fn table_components_keep_open_back_vowels_together() {
    let comps = confusion_graph_components(&table_confusion_matrix(), &PhonemeLabel::all(), 0.1).unwrap();
    let owner: BTreeMap<PhonemeLabel, usize> = comps
        .iter()
        .enumerate()
        .flat_map(|(i, c)| c.iter().map(move |&l| (l, i)))
        .collect();
    assert_eq!(owner[&label("aa")], owner[&label("ah")]);
    assert_eq!(owner[&label("aa")], owner[&label("ao")]);
    assert_eq!(owner[&label("s")], owner[&label("z")]);
    assert_ne!(owner[&label("aa")], owner[&label("s")]);
}

proptest! {
    #[test]
    fn csv_round_trip(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let (cm, _) = random_matrix(&mut rng);
        let mut out = Vec::new();
        cm.write_csv(&mut out).unwrap();
        prop_assert_eq!(ConfusionMatrix::read_csv(out.as_slice()).unwrap(), cm);
    }
}

#[test]
fn csv_errors_carry_line_numbers() {
    let bad = "true,aa,iy\naa,1,2\niy,3\n";
    let err = ConfusionMatrix::read_csv(bad.as_bytes()).unwrap_err().to_string();
    assert!(err.contains('3'), "{err}");
    assert!(ConfusionMatrix::read_csv("true,aa,zz\n".as_bytes()).is_err());
    assert!(ConfusionMatrix::read_csv("true,aa\naa,1\naa,2\n".as_bytes()).is_err());
}
