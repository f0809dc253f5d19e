//! Acceptance suite for the whole pipeline. Each test checks one
//! numbered behavioural guarantee end to end and prints a single
//! pass/fail line (visible with `--nocapture`).

use lpg_core::eval::{
    evaluate, mean_recall_at_k, recall_at_k, EvalConfig, EvalTask, PredictedTriple,
    SceneGroundTruth,
};
use lpg_core::geometry::{
    classify_pair, max_zoom_in_factor, min_zoom_out_factor, RelativePosition, ScaleSearchConfig,
};
use lpg_core::lpg::{
    build_adjacency, forward_on_tape, lpg_forward, train, Activation, LpgConfig, LpgModel,
    LpgVariant,
};
use lpg_core::prd::{abs_prd, iou_prd, prd_recall, PrdConfig, Provenance};
use lpg_core::priors::build_priors;
use lpg_core::scene::split_corpus;
use lpg_core::tensor::{Matrix, Tape};
use lpg_core::{BoundingBox, Corpus, ZoomConfig};
use lpg_tools::synth::generate_corpus;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::time::Instant;

fn verdict(number: u32, what: &str, ok: bool) {
    println!(
        "acceptance {number:02} {what}: {}",
        if ok { "pass" } else { "fail" }
    );
    assert!(ok, "acceptance {number:02} {what} failed");
}

fn random_box(rng: &mut ChaCha8Rng) -> BoundingBox {
    let x0 = rng.random_range(0.0..260.0);
    let y0 = rng.random_range(0.0..260.0);
    let w = rng.random_range(8.0..48.0);
    let h = rng.random_range(8.0..48.0);
    BoundingBox::new(x0, y0, x0 + w, y0 + h).unwrap()
}

/// Disjoint pairs that come to touch somewhere inside the default
/// zoom-in interval.
fn disjoint_pairs(count: usize, seed: u64) -> Vec<(BoundingBox, BoundingBox)> {
    let cfg = ScaleSearchConfig::zoom_in_default();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut pairs = Vec::with_capacity(count);
    while pairs.len() < count {
        let a = random_box(&mut rng);
        let b = random_box(&mut rng);
        if classify_pair(&a, &b) == RelativePosition::Disjoint
            && matches!(max_zoom_in_factor(&a, &b, &cfg), Ok(Some(_)))
        {
            pairs.push((a, b));
        }
    }
    pairs
}

/// Overlapping non-nested pairs built by sliding a copy of the first box.
fn overlapping_pairs(count: usize, seed: u64) -> Vec<(BoundingBox, BoundingBox)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut pairs = Vec::with_capacity(count);
    while pairs.len() < count {
        let a = random_box(&mut rng);
        let dx = a.width() * rng.random_range(0.3..0.9);
        let dy = a.height() * rng.random_range(0.3..0.9);
        let b = BoundingBox::new(a.x_min() + dx, a.y_min() + dy, a.x_max() + dx, a.y_max() + dy)
            .unwrap();
        if classify_pair(&a, &b) == RelativePosition::IntersectNoContain {
            pairs.push((a, b));
        }
    }
    pairs
}

/// Independent oracle: walk the factor axis with a fixed step and return
/// the first factor at which the scaled boxes overlap.
fn linear_scan_touch(a: &BoundingBox, b: &BoundingBox, lo: f64, hi: f64, step: f64) -> Option<f64> {
    let mut factor = lo;
    while factor <= hi {
        let sa = a.scale(factor).unwrap();
        let sb = b.scale(factor).unwrap();
        if sa.intersection_area(&sb) > 0.0 {
            return Some(factor);
        }
        factor += step;
    }
    None
}

#[test]
fn acceptance_01_bisection_matches_linear_scan() {
    let started = Instant::now();
    let zoom_in_cfg = ScaleSearchConfig::zoom_in_default();
    let zoom_out_cfg = ScaleSearchConfig::zoom_out_default();
    let mut worst = 0.0f64;

    for (a, b) in disjoint_pairs(1000, 101) {
        let bisected = max_zoom_in_factor(&a, &b, &zoom_in_cfg).unwrap().unwrap();
        let scanned = linear_scan_touch(&a, &b, 1.0, 8.0, 1e-4).unwrap();
        worst = worst.max((bisected - scanned).abs() / scanned);
    }
    for (a, b) in overlapping_pairs(1000, 102) {
        let bisected = min_zoom_out_factor(&a, &b, &zoom_out_cfg).unwrap();
        let scanned = linear_scan_touch(&a, &b, 0.01, 1.0, 1e-4).unwrap();
        worst = worst.max((bisected - scanned).abs() / scanned);
    }

    let elapsed = started.elapsed();
    verdict(
        1,
        "bisection within 1e-2 of a 1e-4-step linear scan on 2x1000 pairs under 10s",
        worst <= 1e-2 && elapsed.as_secs_f64() < 10.0,
    );
}

#[test]
fn acceptance_02_touch_factor_brackets_the_transition() {
    let cfg = ScaleSearchConfig::zoom_in_default();
    let mut ok = true;
    for (a, b) in disjoint_pairs(1000, 101) {
        let l = max_zoom_in_factor(&a, &b, &cfg).unwrap().unwrap();
        let below = a
            .scale(l * 0.999)
            .unwrap()
            .intersection_area(&b.scale(l * 0.999).unwrap());
        let above = a
            .scale(l * 1.001)
            .unwrap()
            .intersection_area(&b.scale(l * 1.001).unwrap());
        ok &= below == 0.0 && above > 0.0;
    }
    verdict(
        2,
        "every touch factor L separates at 0.999L and overlaps at 1.001L",
        ok,
    );
}

fn scene_recalls(corpus: &Corpus, priors: &lpg_core::PriorDictionary, abs: bool) -> Vec<f64> {
    let prd_cfg = PrdConfig::default();
    corpus
        .scenes
        .iter()
        .map(|scene| {
            let objects: Vec<(usize, BoundingBox)> =
                scene.objects.iter().map(|o| (o.category, o.bbox)).collect();
            let candidates = if abs {
                abs_prd(&objects, priors, &prd_cfg).unwrap()
            } else {
                iou_prd(&objects, &prd_cfg).unwrap()
            };
            let gt: Vec<(usize, usize)> = scene
                .indexed_triples()
                .iter()
                .map(|&(s, o, _)| (s, o))
                .collect();
            prd_recall(&candidates, &gt)
        })
        .collect()
}

#[test]
fn acceptance_03_priors_recover_their_source_corpus() {
    let (corpus, _) = generate_corpus(120, 7);
    let priors = build_priors(&corpus, &ZoomConfig::default()).unwrap();
    let ok = scene_recalls(&corpus, &priors, true)
        .iter()
        .all(|&r| r == 1.0);
    verdict(
        3,
        "scaling filter recall is exactly 1.0 on the prior-source corpus",
        ok,
    );
}

#[test]
fn acceptance_04_scaling_filter_beats_the_overlap_baseline() {
    let (corpus, manifests) = generate_corpus(200, 11);
    let total: usize = manifests.iter().map(|m| m.triples).sum();
    let disjoint: usize = manifests.iter().map(|m| m.disjoint_triples).sum();
    let disjoint_share = disjoint as f64 / total as f64;

    let priors = build_priors(&corpus, &ZoomConfig::default()).unwrap();
    let abs = scene_recalls(&corpus, &priors, true);
    let iou = scene_recalls(&corpus, &priors, false);
    let mean = |v: &[f64]| v.iter().sum::<f64>() / v.len() as f64;

    // On scenes holding planted meaningless overlaps, count the
    // intersecting candidates each filter lets through.
    let prd_cfg = PrdConfig::default();
    let mut abs_intersecting = 0usize;
    let mut iou_intersecting = 0usize;
    for (scene, manifest) in corpus.scenes.iter().zip(&manifests) {
        if manifest.distractor_pairs == 0 {
            continue;
        }
        let objects: Vec<(usize, BoundingBox)> =
            scene.objects.iter().map(|o| (o.category, o.bbox)).collect();
        abs_intersecting += abs_prd(&objects, &priors, &prd_cfg)
            .unwrap()
            .iter()
            .filter(|c| c.provenance != Provenance::ZoomIn)
            .count();
        iou_intersecting += iou_prd(&objects, &prd_cfg).unwrap().len();
    }

    verdict(
        4,
        "with >=30% disjoint ground truth: overlap baseline <=0.70, scaling filter 1.0, fewer spurious intersecting candidates",
        disjoint_share >= 0.30
            && mean(&iou) <= 0.70
            && abs.iter().all(|&r| r == 1.0)
            && abs_intersecting < iou_intersecting,
    );
}

#[test]
fn acceptance_05_local_columns_survive_stacking_bitwise() {
    let mut rng = ChaCha8Rng::seed_from_u64(55);
    let mut ok = true;
    for graph in 0..100 {
        let layers = 1 + graph % 3;
        let n = rng.random_range(2..10usize);
        let f = rng.random_range(3..10usize);
        let features = Matrix::from_vec(
            n,
            f,
            (0..n * f).map(|_| rng.random_range(-2.0..2.0)).collect(),
        )
        .unwrap();
        let mut edges = Vec::new();
        for i in 0..n {
            for j in 0..n {
                if i != j && rng.random::<f64>() < 0.3 {
                    edges.push((i, j));
                }
            }
        }
        let adjacency = build_adjacency(n, &edges).unwrap();
        let cfg = LpgConfig {
            layers,
            hidden: 8,
            seed: graph as u64,
            ..Default::default()
        };
        let model = LpgModel::init(f, 3, &cfg).unwrap();
        let out = lpg_forward(&features, &adjacency, &model, &cfg).unwrap();
        ok &= out.cols() == f + cfg.hidden;
        for r in 0..n {
            for c in 0..f {
                ok &= out.get(r, c).to_bits() == features.get(r, c).to_bits();
            }
        }
    }
    verdict(
        5,
        "first F output columns equal the input features bitwise over 100 graphs, 1-3 layers",
        ok,
    );
}

/// Full loss of a 3-node scene for the current parameters, replaying the
/// exact training graph.
fn scene_loss(
    model: &LpgModel,
    features: &Matrix,
    adjacency: &Matrix,
    pairs: &[(usize, usize)],
    labels: &[usize],
    cfg: &LpgConfig,
) -> f64 {
    let mut tape = Tape::new();
    let vl = tape.leaf(features.clone());
    let a = tape.leaf(adjacency.clone());
    let ws: Vec<_> = model
        .layer_weights
        .iter()
        .map(|w| tape.leaf(w.clone()))
        .collect();
    let cl = tape.leaf(model.classifier.clone());
    let vc = forward_on_tape(&mut tape, vl, a, &ws, cfg.activation, cfg.variant).unwrap();
    let pf = tape.gather_pairs(vc, pairs).unwrap();
    let logits = tape.matmul(pf, cl).unwrap();
    let loss = tape.softmax_cross_entropy(logits, labels).unwrap();
    tape.value(loss).get(0, 0)
}

#[test]
fn acceptance_06_gradients_match_finite_differences() {
    let cfg = LpgConfig {
        layers: 2,
        hidden: 4,
        activation: Activation::Tanh,
        seed: 6,
        ..Default::default()
    };
    let mut rng = ChaCha8Rng::seed_from_u64(66);
    let f = 5;
    let features = Matrix::from_vec(
        3,
        f,
        (0..3 * f).map(|_| rng.random_range(-1.0..1.0)).collect(),
    )
    .unwrap();
    let pairs = [(0usize, 1usize), (1, 2), (0, 2)];
    let labels = [0usize, 1, 2];
    let adjacency = build_adjacency(3, &pairs).unwrap();
    let mut model = LpgModel::init(f, 2, &cfg).unwrap();

    // analytic gradients from one reverse pass
    let mut tape = Tape::new();
    let vl = tape.leaf(features.clone());
    let a = tape.leaf(adjacency.clone());
    let ws: Vec<_> = model
        .layer_weights
        .iter()
        .map(|w| tape.leaf(w.clone()))
        .collect();
    let cl = tape.leaf(model.classifier.clone());
    let vc = forward_on_tape(&mut tape, vl, a, &ws, cfg.activation, cfg.variant).unwrap();
    let pf = tape.gather_pairs(vc, &pairs).unwrap();
    let logits = tape.matmul(pf, cl).unwrap();
    let loss = tape.softmax_cross_entropy(logits, &labels).unwrap();
    let grads = tape.backward(loss).unwrap();
    let analytic: Vec<Matrix> = ws
        .iter()
        .map(|id| grads.get(*id).clone())
        .chain(std::iter::once(grads.get(cl).clone()))
        .collect();

    // central finite differences over every parameter
    let h = 1e-5;
    let mut worst = 0.0f64;
    let param_count = model.layer_weights.len() + 1;
    for p in 0..param_count {
        let (rows, cols) = {
            let m = analytic.get(p).unwrap();
            (m.rows(), m.cols())
        };
        for r in 0..rows {
            for c in 0..cols {
                let read = |m: &LpgModel| {
                    if p < m.layer_weights.len() {
                        m.layer_weights[p].get(r, c)
                    } else {
                        m.classifier.get(r, c)
                    }
                };
                let write = |m: &mut LpgModel, v: f64| {
                    if p < m.layer_weights.len() {
                        m.layer_weights[p].set(r, c, v);
                    } else {
                        m.classifier.set(r, c, v);
                    }
                };
                let original = read(&model);
                write(&mut model, original + h);
                let up = scene_loss(&model, &features, &adjacency, &pairs, &labels, &cfg);
                write(&mut model, original - h);
                let down = scene_loss(&model, &features, &adjacency, &pairs, &labels, &cfg);
                write(&mut model, original);
                let fd = (up - down) / (2.0 * h);
                let g = analytic[p].get(r, c);
                worst = worst.max((g - fd).abs() / g.abs().max(fd.abs()).max(1e-6));
            }
        }
    }
    verdict(
        6,
        "reverse-mode gradients within 1e-4 of central differences on a 3-node scene",
        worst <= 1e-4,
    );
}

/// Independent recall oracle: greedy one-to-one matching of the top-k
/// predictions against the ground truth, in prediction order.
fn brute_force_matches(
    predictions: &[PredictedTriple],
    gt: &SceneGroundTruth<'_>,
    k: usize,
    task: EvalTask,
) -> Vec<bool> {
    let mut used = vec![false; gt.triples.len()];
    for pred in predictions.iter().take(k) {
        for (i, &(s, o, p)) in gt.triples.iter().enumerate() {
            if used[i] || pred.subject_index != s || pred.object_index != o || pred.predicate != p {
                continue;
            }
            if task == EvalTask::SgCls
                && (pred.subject_class != Some(gt.categories[s])
                    || pred.object_class != Some(gt.categories[o]))
            {
                continue;
            }
            used[i] = true;
            break;
        }
    }
    used
}

fn brute_force_recall(
    predictions: &[PredictedTriple],
    gt: &SceneGroundTruth<'_>,
    k: usize,
    task: EvalTask,
) -> Option<f64> {
    if gt.triples.is_empty() {
        return None;
    }
    let used = brute_force_matches(predictions, gt, k, task);
    Some(used.iter().filter(|u| **u).count() as f64 / gt.triples.len() as f64)
}

fn brute_force_mean_recall(
    scenes: &[(&[PredictedTriple], SceneGroundTruth<'_>)],
    k: usize,
    task: EvalTask,
) -> f64 {
    use std::collections::BTreeMap;
    let mut per_class: BTreeMap<usize, Vec<f64>> = BTreeMap::new();
    for (predictions, gt) in scenes {
        if gt.triples.is_empty() {
            continue;
        }
        let used = brute_force_matches(predictions, gt, k, task);
        let mut hits: BTreeMap<usize, (usize, usize)> = BTreeMap::new();
        for (i, &(_, _, p)) in gt.triples.iter().enumerate() {
            let e = hits.entry(p).or_default();
            e.1 += 1;
            if used[i] {
                e.0 += 1;
            }
        }
        for (p, (hit, total)) in hits {
            per_class
                .entry(p)
                .or_default()
                .push(hit as f64 / total as f64);
        }
    }
    if per_class.is_empty() {
        return 0.0;
    }
    per_class
        .values()
        .map(|v| v.iter().sum::<f64>() / v.len() as f64)
        .sum::<f64>()
        / per_class.len() as f64
}

#[test]
fn acceptance_07_recall_metrics_match_a_brute_force_matcher() {
    let mut rng = ChaCha8Rng::seed_from_u64(77);
    let mut ok = true;
    // predictions, ground-truth triples, and object categories per scene
    type SceneInstance = (Vec<PredictedTriple>, Vec<(usize, usize, usize)>, Vec<usize>);
    let mut batch: Vec<SceneInstance> = Vec::new();

    for instance in 0..1000 {
        let n = rng.random_range(2..7usize);
        let categories: Vec<usize> = (0..n).map(|_| rng.random_range(0..4usize)).collect();
        let gt: Vec<(usize, usize, usize)> = (0..rng.random_range(1..7usize))
            .map(|_| {
                (
                    rng.random_range(0..n),
                    rng.random_range(0..n),
                    rng.random_range(0..5usize),
                )
            })
            .collect();
        let predictions: Vec<PredictedTriple> = (0..rng.random_range(0..30usize))
            .map(|i| {
                let s = rng.random_range(0..n);
                let o = rng.random_range(0..n);
                PredictedTriple {
                    subject_index: s,
                    object_index: o,
                    predicate: rng.random_range(0..5usize),
                    rank_score: 1.0 / (i + 1) as f64,
                    // sometimes right, sometimes wrong, sometimes absent
                    subject_class: match rng.random_range(0..3u8) {
                        0 => Some(categories[s]),
                        1 => Some(rng.random_range(0..4usize)),
                        _ => None,
                    },
                    object_class: Some(categories[o]),
                }
            })
            .collect();
        let k = rng.random_range(1..26usize);

        for task in [EvalTask::PredCls, EvalTask::SgCls] {
            let gt_view = SceneGroundTruth {
                triples: &gt,
                categories: &categories,
            };
            let ours = recall_at_k(&predictions, &gt_view, k, task);
            let oracle = brute_force_recall(&predictions, &gt_view, k, task);
            ok &= match (ours, oracle) {
                (Some(a), Some(b)) => (a - b).abs() <= 1e-12,
                (None, None) => true,
                _ => false,
            };
        }

        batch.push((predictions, gt, categories));
        if batch.len() == 10 || instance == 999 {
            let views: Vec<(&[PredictedTriple], SceneGroundTruth<'_>)> = batch
                .iter()
                .map(|(p, g, c)| {
                    (
                        p.as_slice(),
                        SceneGroundTruth {
                            triples: g,
                            categories: c,
                        },
                    )
                })
                .collect();
            for task in [EvalTask::PredCls, EvalTask::SgCls] {
                let a = mean_recall_at_k(&views, 20, task);
                let b = brute_force_mean_recall(&views, 20, task);
                ok &= (a - b).abs() <= 1e-12;
            }
            batch.clear();
        }
    }
    verdict(
        7,
        "R@K and mR@K agree with the brute-force matcher within 1e-12 on 1000 instances",
        ok,
    );
}

/// Shared training setup for the learning criteria: a 200-scene corpus,
/// its priors, and the seeded 80/20 split.
fn training_fixture() -> (Corpus, lpg_core::PriorDictionary, Corpus, Corpus) {
    let (corpus, _) = generate_corpus(200, 2022);
    let priors = build_priors(&corpus, &ZoomConfig::default()).unwrap();
    let (train_part, heldout) = split_corpus(&corpus, 0.8, 2022).unwrap();
    (corpus, priors, train_part, heldout)
}

fn training_config() -> LpgConfig {
    LpgConfig {
        layers: 2,
        epochs: 200,
        learning_rate: 0.05,
        seed: 2022,
        ..Default::default()
    }
}

fn heldout_r50(
    cfg: &LpgConfig,
    priors: &lpg_core::PriorDictionary,
    train_part: &Corpus,
    heldout: &Corpus,
) -> (f64, f64) {
    let prd_cfg = PrdConfig::default();
    let (model, _) = train(train_part, priors, cfg, &prd_cfg).unwrap();
    let report = evaluate(&model, heldout, priors, cfg, &prd_cfg, &EvalConfig::default()).unwrap();
    let row = report.rows.iter().find(|r| r.k == 50).unwrap();
    (row.recall, row.mean_recall)
}

#[test]
fn acceptance_08_training_reaches_the_recall_targets() {
    let (_, priors, train_part, heldout) = training_fixture();
    let cfg = training_config();

    let started = Instant::now();
    let (r50, mr50) = heldout_r50(&cfg, &priors, &train_part, &heldout);
    let train_secs = started.elapsed().as_secs_f64();

    let shallow = LpgConfig {
        layers: 1,
        ..cfg
    };
    let (r50_l1, _) = heldout_r50(&shallow, &priors, &train_part, &heldout);

    verdict(
        8,
        "2-layer training <2min reaches held-out R@50>=0.90, mR@50>=0.80 and is >= 1 layer",
        train_secs < 120.0 && r50 >= 0.90 && mr50 >= 0.80 && r50 >= r50_l1,
    );
}

#[test]
fn acceptance_09_ablations_lose_recall() {
    let (_, priors, train_part, heldout) = training_fixture();
    let full_cfg = training_config();
    let no_locality = LpgConfig {
        variant: LpgVariant::NoLocality,
        ..full_cfg
    };
    let no_attributes = LpgConfig {
        use_attributes: false,
        ..full_cfg
    };

    let (full, _) = heldout_r50(&full_cfg, &priors, &train_part, &heldout);
    let (ablated_locality, _) = heldout_r50(&no_locality, &priors, &train_part, &heldout);
    let (ablated_attributes, _) = heldout_r50(&no_attributes, &priors, &train_part, &heldout);

    verdict(
        9,
        "full model beats the no-locality and no-attribute ablations on held-out R@50",
        full > ablated_locality && full > ablated_attributes,
    );
}

#[test]
fn acceptance_10_reruns_are_byte_identical() {
    use std::process::Command;
    let dir = tempfile::tempdir().unwrap();
    let run = |args: &[&str]| {
        let out = Command::new(env!("CARGO_BIN_EXE_lpg"))
            .current_dir(dir.path())
            .args(args)
            .output()
            .expect("binary runs");
        assert!(
            out.status.success(),
            "{}",
            String::from_utf8_lossy(&out.stderr)
        );
    };
    let bytes = |name: &str| std::fs::read(dir.path().join(name)).unwrap();

    run(&["synth", "--out", "corpus.txt", "--scenes", "30", "--seed", "5"]);
    run(&["build-priors", "corpus.txt", "--out", "p1.txt", "--seed", "5"]);
    run(&["build-priors", "corpus.txt", "--out", "p2.txt", "--seed", "5"]);

    let train = |model: &str| {
        run(&[
            "train", "corpus.txt", "--priors", "p1.txt", "--out", model,
            "--epochs", "5", "--seed", "5",
        ]);
    };
    train("m1.txt");
    train("m2.txt");

    let eval = |report: &str| {
        run(&[
            "eval", "m1.txt.heldout", "--priors", "p1.txt", "--model", "m1.txt",
            "--out", report, "--seed", "5",
        ]);
    };
    eval("r1.txt");
    eval("r2.txt");

    let ok = bytes("p1.txt") == bytes("p2.txt")
        && bytes("m1.txt") == bytes("m2.txt")
        && bytes("m1.txt.loss") == bytes("m2.txt.loss")
        && bytes("m1.txt.heldout") == bytes("m2.txt.heldout")
        && bytes("r1.txt") == bytes("r2.txt");
    verdict(
        10,
        "same seed and config reproduce priors, model, and report byte for byte",
        ok,
    );
}
