//! Recall@K and mean-recall@K over ranked predicted triples, plus the
//! corpus-level evaluation driver that turns a trained model into a
//! metric report.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;

use crate::lpg::{predict, prepare_scene, LpgConfig, LpgError, LpgModel};
use crate::prd::PrdConfig;
use crate::priors::PriorDictionary;
use crate::scene::Corpus;
use crate::tensor::Matrix;

/// One ranked prediction: a directed pair, its predicate, and the score
/// it was ranked by. Class labels are carried for the class-sensitive
/// matching rule and may be omitted for predicate-only matching.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PredictedTriple {
    pub subject_index: usize,
    pub object_index: usize,
    pub predicate: usize,
    pub rank_score: f64,
    pub subject_class: Option<usize>,
    pub object_class: Option<usize>,
}

/// Evaluation protocol. PredCls matches on (subject, object, predicate);
/// SGCls additionally requires the predicted subject and object class
/// labels to equal the ground-truth categories.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EvalTask {
    PredCls,
    SgCls,
}

impl fmt::Display for EvalTask {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            EvalTask::PredCls => f.write_str("predcls"),
            EvalTask::SgCls => f.write_str("sgcls"),
        }
    }
}

/// How the prediction list is ordered before taking the top K.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RankingMode {
    /// Candidate-pair IOU score order from the filter (the default used
    /// at test time).
    IouScore,
    /// Classifier probability order.
    ClassifierConfidence,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EvalConfig {
    /// Ascending recall cutoffs.
    pub k_values: Vec<usize>,
    pub task: EvalTask,
    pub ranking: RankingMode,
    /// With the graph constraint each pair contributes only its single
    /// top-ranked predicate.
    pub graph_constraint: bool,
}

impl Default for EvalConfig {
    fn default() -> Self {
        Self {
            k_values: alloc::vec![50, 150, 250],
            task: EvalTask::PredCls,
            ranking: RankingMode::IouScore,
            graph_constraint: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum EvalError {
    Lpg(LpgError),
    InvalidConfig(&'static str),
}

impl fmt::Display for EvalError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            EvalError::Lpg(e) => write!(f, "{e}"),
            EvalError::InvalidConfig(msg) => write!(f, "invalid eval config: {msg}"),
        }
    }
}

impl From<LpgError> for EvalError {
    fn from(e: LpgError) -> Self {
        EvalError::Lpg(e)
    }
}

impl EvalConfig {
    pub fn validate(&self) -> Result<(), EvalError> {
        if self.k_values.is_empty() {
            return Err(EvalError::InvalidConfig("at least one K value required"));
        }
        if self.k_values.contains(&0) {
            return Err(EvalError::InvalidConfig("K values must be positive"));
        }
        if self.k_values.windows(2).any(|w| w[0] >= w[1]) {
            return Err(EvalError::InvalidConfig("K values must be ascending"));
        }
        Ok(())
    }
}

/// Ground truth for one scene: (subject_index, object_index, predicate)
/// plus the object categories for the class-sensitive match rule.
pub struct SceneGroundTruth<'a> {
    pub triples: &'a [(usize, usize, usize)],
    pub categories: &'a [usize],
}

fn triple_matches(
    pred: &PredictedTriple,
    gt: &(usize, usize, usize),
    task: EvalTask,
    categories: &[usize],
) -> bool {
    let (s, o, p) = *gt;
    if pred.subject_index != s || pred.object_index != o || pred.predicate != p {
        return false;
    }
    match task {
        EvalTask::PredCls => true,
        EvalTask::SgCls => {
            pred.subject_class == Some(categories[s]) && pred.object_class == Some(categories[o])
        }
    }
}

/// Indices of the ground-truth triples matched within the top `k`
/// predictions, each ground-truth triple matchable at most once.
/// Predictions must already be in rank order.
fn matched_gt_indices(
    predictions: &[PredictedTriple],
    gt: &SceneGroundTruth<'_>,
    k: usize,
    task: EvalTask,
) -> BTreeSet<usize> {
    let mut matched = BTreeSet::new();
    for pred in predictions.iter().take(k) {
        for (idx, triple) in gt.triples.iter().enumerate() {
            if !matched.contains(&idx) && triple_matches(pred, triple, task, gt.categories) {
                matched.insert(idx);
                break;
            }
        }
    }
    matched
}

/// Fraction of ground-truth triples recovered within the top `k`
/// predictions. `None` for scenes with empty ground truth (excluded from
/// averages by the caller).
pub fn recall_at_k(
    predictions: &[PredictedTriple],
    gt: &SceneGroundTruth<'_>,
    k: usize,
    task: EvalTask,
) -> Option<f64> {
    if gt.triples.is_empty() {
        return None;
    }
    let matched = matched_gt_indices(predictions, gt, k, task);
    Some(matched.len() as f64 / gt.triples.len() as f64)
}

/// Mean recall over predicate classes: per class, the recall is averaged
/// over the scenes holding at least one ground-truth instance of that
/// class, then classes are averaged unweighted.
pub fn mean_recall_at_k(
    scenes: &[(&[PredictedTriple], SceneGroundTruth<'_>)],
    k: usize,
    task: EvalTask,
) -> f64 {
    // class -> (sum of per-scene class recalls, scene count)
    let mut per_class: BTreeMap<usize, (f64, usize)> = BTreeMap::new();
    for (predictions, gt) in scenes {
        if gt.triples.is_empty() {
            continue;
        }
        let matched = matched_gt_indices(predictions, gt, k, task);
        let mut class_total: BTreeMap<usize, (usize, usize)> = BTreeMap::new();
        for (idx, &(_, _, p)) in gt.triples.iter().enumerate() {
            let slot = class_total.entry(p).or_insert((0, 0));
            slot.1 += 1;
            if matched.contains(&idx) {
                slot.0 += 1;
            }
        }
        for (class, (hit, total)) in class_total {
            let slot = per_class.entry(class).or_insert((0.0, 0));
            slot.0 += hit as f64 / total as f64;
            slot.1 += 1;
        }
    }
    if per_class.is_empty() {
        return 0.0;
    }
    let sum: f64 = per_class.values().map(|(s, n)| s / *n as f64).sum();
    sum / per_class.len() as f64
}

/// Builds the ranked prediction list for one scene from per-pair
/// predicate distributions. The background class never becomes a
/// prediction; each candidate contributes its best non-background
/// predicate (all non-background predicates without the graph
/// constraint).
pub fn rank_predictions(
    candidates: &[crate::prd::CandidatePair],
    probabilities: &Matrix,
    background_class: usize,
    categories: &[usize],
    cfg: &EvalConfig,
) -> Vec<PredictedTriple> {
    let mut predictions = Vec::new();
    for (row, cand) in candidates.iter().enumerate() {
        let probs = probabilities.row(row);
        let mut ranked: Vec<(usize, f64)> = probs
            .iter()
            .copied()
            .enumerate()
            .filter(|(c, _)| *c != background_class)
            .collect();
        ranked.sort_by(|a, b| b.1.total_cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
        let take = if cfg.graph_constraint { 1 } else { ranked.len() };
        for &(predicate, prob) in ranked.iter().take(take) {
            predictions.push(PredictedTriple {
                subject_index: cand.subject_index,
                object_index: cand.object_index,
                predicate,
                rank_score: match cfg.ranking {
                    RankingMode::IouScore => cand.score,
                    RankingMode::ClassifierConfidence => prob,
                },
                subject_class: Some(categories[cand.subject_index]),
                object_class: Some(categories[cand.object_index]),
            });
        }
    }
    match cfg.ranking {
        // Candidates are already in filter rank order; within a pair the
        // predicates are in descending probability.
        RankingMode::IouScore => {}
        RankingMode::ClassifierConfidence => {
            predictions.sort_by(|a, b| {
                b.rank_score
                    .total_cmp(&a.rank_score)
                    .then_with(|| a.subject_index.cmp(&b.subject_index))
                    .then_with(|| a.object_index.cmp(&b.object_index))
                    .then_with(|| a.predicate.cmp(&b.predicate))
            });
        }
    }
    predictions
}

/// One metric table row.
#[derive(Debug, Clone, PartialEq)]
pub struct MetricRow {
    pub task: EvalTask,
    pub k: usize,
    pub recall: f64,
    pub mean_recall: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MetricReport {
    pub rows: Vec<MetricRow>,
    pub scenes_evaluated: usize,
    /// Scenes skipped for empty ground truth or no candidates.
    pub scenes_skipped: usize,
    pub skipped_image_ids: Vec<String>,
}

/// Runs the model over every scene of the corpus and reports R@K and
/// mR@K for every configured K. Deterministic for fixed model and
/// configs; scene iteration order does not affect the averages.
pub fn evaluate(
    model: &LpgModel,
    corpus: &Corpus,
    priors: &PriorDictionary,
    lpg_cfg: &LpgConfig,
    prd_cfg: &PrdConfig,
    eval_cfg: &EvalConfig,
) -> Result<MetricReport, EvalError> {
    // predictions, ground-truth triples, and object categories per scene
    type SceneResult = (Vec<PredictedTriple>, Vec<(usize, usize, usize)>, Vec<usize>);
    eval_cfg.validate()?;
    let background = model.background_class();
    let mut scene_results: Vec<SceneResult> = Vec::new();
    let mut skipped_image_ids = Vec::new();
    for scene in &corpus.scenes {
        if scene.triples.is_empty() {
            skipped_image_ids.push(scene.image_id.clone());
            continue;
        }
        let Some(prepared) = prepare_scene(
            scene,
            &corpus.vocabulary,
            priors,
            lpg_cfg,
            prd_cfg,
            background,
        )?
        else {
            skipped_image_ids.push(scene.image_id.clone());
            continue;
        };
        let vc = crate::lpg::lpg_forward(&prepared.features, &prepared.adjacency, model, lpg_cfg)?;
        let pair_feats = crate::lpg::pair_features(&vc, &prepared.candidates)?;
        let probs = predict(&pair_feats, model)?;
        let categories: Vec<usize> = scene.objects.iter().map(|o| o.category).collect();
        let predictions =
            rank_predictions(&prepared.candidates, &probs, background, &categories, eval_cfg);
        scene_results.push((predictions, prepared.gt_triples, categories));
    }

    let mut rows = Vec::new();
    for &k in &eval_cfg.k_values {
        let mut recall_sum = 0.0;
        let mut recall_count = 0usize;
        let mut mr_input: Vec<(&[PredictedTriple], SceneGroundTruth<'_>)> = Vec::new();
        for (predictions, gt, categories) in &scene_results {
            let gt_ref = SceneGroundTruth {
                triples: gt,
                categories,
            };
            if let Some(r) = recall_at_k(predictions, &gt_ref, k, eval_cfg.task) {
                recall_sum += r;
                recall_count += 1;
            }
            mr_input.push((
                predictions.as_slice(),
                SceneGroundTruth {
                    triples: gt,
                    categories,
                },
            ));
        }
        let recall = if recall_count > 0 {
            recall_sum / recall_count as f64
        } else {
            0.0
        };
        rows.push(MetricRow {
            task: eval_cfg.task,
            k,
            recall,
            mean_recall: mean_recall_at_k(&mr_input, k, eval_cfg.task),
        });
    }
    Ok(MetricReport {
        rows,
        scenes_evaluated: scene_results.len(),
        scenes_skipped: skipped_image_ids.len(),
        skipped_image_ids,
    })
}
