mod common;

use std::collections::BTreeSet;

use rand::seq::{IndexedRandom, SliceRandom};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use phonrec::confusion::{table_confusion_matrix, ConfusionMatrix};
use phonrec::hierarchy::{
    build_hsco, build_hstc, load_trained, save_trained, train_hierarchy, Hierarchy, HierarchyTrainConfig, HscoParams,
    NodeId, NodeModel,
};
use phonrec::phoneme::label;
use phonrec::{BroadClass, PhonemeLabel};

fn identity_plus(pairs: &[(&str, &str, u64)]) -> ConfusionMatrix {
    let mut cm = ConfusionMatrix::canonical();
    for l in PhonemeLabel::all() {
        cm.add(l, l, 100).unwrap();
    }
    for &(a, b, n) in pairs {
        cm.add(label(a), label(b), n).unwrap();
    }
    cm
}

fn random_canonical(rng: &mut ChaCha8Rng) -> ConfusionMatrix {
    let all = PhonemeLabel::all();
    let mut cm = ConfusionMatrix::canonical();
    for &l in &all {
        cm.add(l, l, rng.random_range(50..150)).unwrap();
        for _ in 0..rng.random_range(0..4) {
            cm.add(l, *all.choose(rng).unwrap(), rng.random_range(1..60)).unwrap();
        }
    }
    cm
}

fn subtree_set(h: &Hierarchy, id: NodeId) -> BTreeSet<PhonemeLabel> {
    h.subtree_labels(id).into_iter().collect()
}

/// The deepest node whose subtree is exactly `members`.
fn node_with(h: &Hierarchy, members: &[&str]) -> Option<NodeId> {
    let want: BTreeSet<PhonemeLabel> = members.iter().map(|l| label(l)).collect();
    h.internal_nodes().into_iter().rfind(|&id| subtree_set(h, id) == want)
}

#[test]
fn hstc_matches_articulatory_table() {
    let h = build_hstc();
    for (heading, members) in common::table1_groups() {
        let id = h.find(&heading.to_lowercase().replace(' ', "-")).unwrap();
        assert_eq!(subtree_set(&h, id), members.iter().copied().collect());
        for l in members {
            let class = l.broad_class();
            assert_eq!(h.node(h.parent(h.leaf(l).unwrap()).unwrap()).name, class.name());
        }
    }
    assert!(h.is_partition_of(&PhonemeLabel::all()));
    assert_eq!(h.leaf_depths(), BTreeSet::from([2]));
}

#[test]
fn crafted_cliques_become_clusters() {
    let cm = identity_plus(&[
        ("s", "sh", 30),
        ("sh", "z", 30),
        ("z", "s", 30),
        ("f", "th", 30),
        ("th", "f", 30),
    ]);
    let h = build_hsco(&cm, &HscoParams::default()).unwrap();
    let sibilants = node_with(&h, &["s", "sh", "z"]).expect("s/sh/z cluster");
    let labiodental = node_with(&h, &["f", "th"]).expect("f/th cluster");
    assert_eq!(h.children(sibilants).len(), 3);
    assert_eq!(h.children(labiodental).len(), 2);
    let fricatives = h.parent(sibilants).unwrap();
    assert_eq!(h.parent(labiodental), Some(fricatives));
    // Unconfused fricatives and affricates sit in singleton clusters next to them.
    assert_eq!(h.children(fricatives).len(), 2 + 5);
    assert!(h.is_partition_of(&PhonemeLabel::all()));
    assert_eq!(h.leaf_depths(), BTreeSet::from([4]));
}

#[test]
fn table_matrix_isolates_open_back_vowels() {
    let h = build_hsco(&table_confusion_matrix(), &HscoParams::default()).unwrap();
    let cluster = h.parent(h.leaf(label("aa")).unwrap()).unwrap();
    let members = subtree_set(&h, cluster);
    assert!(["ah", "ao"].iter().all(|l| members.contains(&label(l))));
    assert_eq!(Hierarchy::parse(&h.to_text()).unwrap().to_text(), h.to_text());
}

#[test]
fn hsco_properties_on_random_matrices() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for _ in 0..40 {
        let cm = random_canonical(&mut rng);
        let params = HscoParams {
            tau: rng.random_range(0.05..0.5),
            semivowels_in_vowel_branch: rng.random_bool(0.5),
            max_cluster_size: if rng.random_bool(0.5) {
                Some(rng.random_range(1..6))
            } else {
                None
            },
        };
        let h = build_hsco(&cm, &params).unwrap();
        assert!(h.is_partition_of(&PhonemeLabel::all()));
        assert_eq!(h.leaf_depths(), BTreeSet::from([4]));

        // Every level-3 cluster stays inside a single level-2 branch, whose
        // members all share the branch's broad classes.
        for branch in h.children(h.root()).iter().flat_map(|&b| h.children(b).to_vec()) {
            let classes: BTreeSet<BroadClass> = h.subtree_labels(branch).iter().map(|l| l.broad_class()).collect();
            for &cluster in h.children(branch) {
                let inside: BTreeSet<BroadClass> = h.subtree_labels(cluster).iter().map(|l| l.broad_class()).collect();
                assert!(inside.is_subset(&classes));
                if let Some(cap) = params.max_cluster_size {
                    assert!(h.subtree_labels(cluster).len() <= cap);
                }
            }
        }

        let mut order = PhonemeLabel::all();
        order.shuffle(&mut rng);
        let again = build_hsco(&cm.reordered(&order).unwrap(), &params).unwrap();
        assert_eq!(again.to_text(), h.to_text());
    }
}

fn toy_data(rng: &mut ChaCha8Rng, labels: &[PhonemeLabel], per: usize) -> (Vec<Vec<f64>>, Vec<PhonemeLabel>) {
    let mut xs = Vec::new();
    let mut ys = Vec::new();
    for (k, &l) in labels.iter().enumerate() {
        for _ in 0..per {
            xs.push(
                (0..6)
                    .map(|d| if d == k % 6 { 3.0 } else { 0.0 } + (k / 6) as f64 * 3.0 + rng.random_range(-1.0..1.0))
                    .collect(),
            );
            ys.push(l);
        }
    }
    (xs, ys)
}

#[test]
fn classify_equals_node_by_node_replay() {
    let mut rng = ChaCha8Rng::seed_from_u64(17);
    let labels: Vec<PhonemeLabel> = ["aa", "iy", "s", "z", "m", "b", "l", "ch"]
        .iter()
        .map(|l| label(l))
        .collect();
    let (xs, ys) = toy_data(&mut rng, &labels, 12);
    let h = build_hstc();
    let th = train_hierarchy(&h, &xs, &ys, &HierarchyTrainConfig::default()).unwrap();

    for _ in 0..100 {
        let x: Vec<f64> = (0..6).map(|_| rng.random_range(-2.0..8.0)).collect();
        let got = th.classify(&x).unwrap();

        let mut id = h.root();
        let mut path = Vec::new();
        while !h.children(id).is_empty() {
            path.push(id);
            let pos = match th.model(id).unwrap() {
                NodeModel::Classifier(m) => m.predict(&x).unwrap(),
                NodeModel::Forced(c) => *c,
                NodeModel::Empty => panic!("replay reached an untrained node"),
            };
            id = h.children(id)[pos];
        }
        assert_eq!(got.path, path);
        assert_eq!(h.leaf(got.label), Some(id));

        // Each step descends into a child, and the chosen leaf lies under every visited node.
        for w in got.path.windows(2) {
            assert_eq!(h.parent(w[1]), Some(w[0]));
        }
        for &node in &got.path {
            assert!(h.subtree_labels(node).contains(&got.label));
        }
        assert!(labels.contains(&got.label), "predicted a label never seen in training");
    }

    let dir = tempfile::tempdir().unwrap();
    save_trained(&th, dir.path()).unwrap();
    let back = load_trained(dir.path()).unwrap();
    let probe: Vec<Vec<f64>> = (0..50)
        .map(|_| (0..6).map(|_| rng.random_range(-2.0..8.0)).collect())
        .collect();
    assert_eq!(back.predict_batch(&probe).unwrap(), th.predict_batch(&probe).unwrap());
}

#[test]
fn training_reaches_separable_accuracy() {
    let mut rng = ChaCha8Rng::seed_from_u64(23);
    let labels: Vec<PhonemeLabel> = ["aa", "ah", "iy", "s", "m", "n"].iter().map(|l| label(l)).collect();
    let (xs, ys) = toy_data(&mut rng, &labels, 15);
    let cm = identity_plus(&[("aa", "ah", 40), ("m", "n", 40)]);
    let h = build_hsco(&cm, &HscoParams::default()).unwrap();
    let th = train_hierarchy(&h, &xs, &ys, &HierarchyTrainConfig::default()).unwrap();
    let predicted = th.predict_batch(&xs).unwrap();
    let correct = predicted.iter().zip(&ys).filter(|(p, y)| p == y).count();
    assert_eq!(correct, ys.len());
    let absent: BTreeSet<PhonemeLabel> = th.metadata.absent_leaves.iter().copied().collect();
    assert_eq!(absent.len(), 60 - labels.len());
}
