//! The locality-preserving graph convolutional network: node features
//! from attributes, normalized box geometry, and category encoding; a
//! row-normalized adjacency built from candidate edges; stacked message
//! passing whose final output carries each node's untouched input
//! features alongside the aggregated neighborhood features; and the
//! per-scene training loop over filtered candidate pairs.

use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;

use rand::seq::SliceRandom;
use rand::Rng;

use crate::geometry::classify_pair;
use crate::prd::{abs_prd, CandidatePair, PrdConfig, PrdError, Provenance};
use crate::priors::PriorDictionary;
use crate::rng::substream;
use crate::scene::{Corpus, SceneAnnotation, Vocabulary};
use crate::tensor::{sgd_step, Matrix, Tape, TensorError, VarId};

#[derive(Debug, Clone, PartialEq)]
pub enum LpgError {
    Tensor(TensorError),
    Prd(PrdError),
    InvalidConfig(&'static str),
    /// Scene data does not match the vocabulary the model was built for.
    VocabularyMismatch(&'static str),
    EdgeOutOfRange { edge: (usize, usize), nodes: usize },
    EmptyCorpus,
    /// No scene produced any candidate pair; nothing to train on.
    NoCandidates,
}

impl fmt::Display for LpgError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            LpgError::Tensor(e) => write!(f, "tensor failure: {e}"),
            LpgError::Prd(e) => write!(f, "candidate generation failure: {e}"),
            LpgError::InvalidConfig(msg) => write!(f, "invalid network config: {msg}"),
            LpgError::VocabularyMismatch(msg) => write!(f, "vocabulary mismatch: {msg}"),
            LpgError::EdgeOutOfRange { edge, nodes } => write!(
                f,
                "edge ({}, {}) out of range for {nodes} nodes",
                edge.0, edge.1
            ),
            LpgError::EmptyCorpus => write!(f, "training corpus has no scenes"),
            LpgError::NoCandidates => write!(f, "no scene yielded any candidate pair"),
        }
    }
}

impl From<TensorError> for LpgError {
    fn from(e: TensorError) -> Self {
        LpgError::Tensor(e)
    }
}

impl From<PrdError> for LpgError {
    fn from(e: PrdError) -> Self {
        LpgError::Prd(e)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Activation {
    Relu,
    Tanh,
}

impl Activation {
    fn apply(&self, tape: &mut Tape, x: VarId) -> VarId {
        match self {
            Activation::Relu => tape.relu(x),
            Activation::Tanh => tape.tanh(x),
        }
    }
}

/// Which features feed the predicate classifier.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LpgVariant {
    /// Pair features over [V_local | V_global]: the node's raw input
    /// columns survive verbatim next to the aggregated ones.
    Full,
    /// Ablation: pair features over the final-layer V_global only.
    NoLocality,
}

/// Where training and evaluation get their candidate pairs.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CandidateSource {
    /// The adaptive-scaling filter, matching inference.
    AbsPrd,
    /// Ground-truth pairs, for the filter ablation.
    GroundTruth,
}

/// Source of the category encoding in node features.
pub enum ClsSource<'a> {
    /// One-hot ground-truth category (PredCls / SGCls style input).
    GroundTruth,
    /// Externally supplied per-object class distributions, one row per
    /// object over the object vocabulary (detector-fed mode).
    Predicted(&'a Matrix),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LpgConfig {
    /// Number of message-passing layers.
    pub layers: usize,
    /// Width of each layer's output (the aggregated feature size).
    pub hidden: usize,
    pub activation: Activation,
    pub learning_rate: f64,
    pub epochs: usize,
    pub seed: u64,
    pub variant: LpgVariant,
    pub use_attributes: bool,
    pub candidate_source: CandidateSource,
}

impl Default for LpgConfig {
    fn default() -> Self {
        Self {
            layers: 2,
            hidden: 32,
            activation: Activation::Relu,
            learning_rate: 0.01,
            epochs: 50,
            seed: 0,
            variant: LpgVariant::Full,
            use_attributes: true,
            candidate_source: CandidateSource::AbsPrd,
        }
    }
}

impl LpgConfig {
    pub fn validate(&self) -> Result<(), LpgError> {
        if self.layers == 0 {
            return Err(LpgError::InvalidConfig("layer count must be >= 1"));
        }
        if self.hidden == 0 {
            return Err(LpgError::InvalidConfig("hidden width must be >= 1"));
        }
        if !(self.learning_rate.is_finite() && self.learning_rate >= 0.0) {
            return Err(LpgError::InvalidConfig(
                "learning rate must be finite and non-negative",
            ));
        }
        Ok(())
    }

    /// Node feature width for a given vocabulary.
    pub fn feature_dim(&self, vocab: &Vocabulary) -> usize {
        let attrs = if self.use_attributes {
            vocab.attributes.len()
        } else {
            0
        };
        attrs + 4 + vocab.objects.len()
    }
}

/// Layer weights plus the predicate classifier. Dimensions chain as
/// F -> F' for the first layer, (F + F') -> F' afterwards; the classifier
/// maps concatenated pair features to predicate classes plus one
/// background class for unmatched candidates.
#[derive(Debug, Clone, PartialEq)]
pub struct LpgModel {
    pub layer_weights: Vec<Matrix>,
    pub classifier: Matrix,
    pub feature_dim: usize,
    /// Predicate classes including the trailing background class.
    pub num_classes: usize,
}

impl LpgModel {
    /// Seeded uniform initialization in [-1/sqrt(fan_in), 1/sqrt(fan_in)].
    pub fn init(
        feature_dim: usize,
        num_predicates: usize,
        cfg: &LpgConfig,
    ) -> Result<Self, LpgError> {
        cfg.validate()?;
        if feature_dim == 0 || num_predicates == 0 {
            return Err(LpgError::InvalidConfig(
                "feature and predicate dimensions must be positive",
            ));
        }
        let mut rng = substream(cfg.seed, "init");
        let mut uniform = |rows: usize, cols: usize| {
            let bound = 1.0 / libm::sqrt(rows as f64);
            let data = (0..rows * cols)
                .map(|_| (rng.random::<f64>() * 2.0 - 1.0) * bound)
                .collect();
            Matrix::from_vec(rows, cols, data).expect("finite init")
        };
        let mut layer_weights = Vec::with_capacity(cfg.layers);
        for layer in 0..cfg.layers {
            let input = if layer == 0 {
                feature_dim
            } else {
                feature_dim + cfg.hidden
            };
            layer_weights.push(uniform(input, cfg.hidden));
        }
        let pair_width = match cfg.variant {
            LpgVariant::Full => 2 * (feature_dim + cfg.hidden),
            LpgVariant::NoLocality => 2 * cfg.hidden,
        };
        let num_classes = num_predicates + 1;
        Ok(Self {
            layer_weights,
            classifier: uniform(pair_width, num_classes),
            feature_dim,
            num_classes,
        })
    }

    /// Index of the background class used for unmatched candidates.
    pub fn background_class(&self) -> usize {
        self.num_classes - 1
    }
}

/// Builds the n x F node feature matrix: per row the multi-hot
/// attributes (when enabled), the center/size of the box normalized by
/// the image dimensions, and the category encoding.
pub fn featurize(
    scene: &SceneAnnotation,
    vocab: &Vocabulary,
    cls: ClsSource<'_>,
    use_attributes: bool,
) -> Result<Matrix, LpgError> {
    let n = scene.objects.len();
    let num_categories = vocab.objects.len();
    if let ClsSource::Predicted(m) = &cls {
        if m.rows() != n || m.cols() != num_categories {
            return Err(LpgError::VocabularyMismatch(
                "predicted class matrix must be objects x object-vocabulary",
            ));
        }
    }
    let attr_len = if use_attributes {
        vocab.attributes.len()
    } else {
        0
    };
    let width = attr_len + 4 + num_categories;
    let mut data = Vec::with_capacity(n * width);
    for (row, obj) in scene.objects.iter().enumerate() {
        if obj.attributes.len() != vocab.attributes.len() {
            return Err(LpgError::VocabularyMismatch(
                "object attribute vector does not match attribute vocabulary",
            ));
        }
        if obj.category >= num_categories {
            return Err(LpgError::VocabularyMismatch(
                "object category outside the object vocabulary",
            ));
        }
        if use_attributes {
            data.extend(obj.attributes.iter().map(|a| if *a { 1.0 } else { 0.0 }));
        }
        let (cx, cy) = obj.bbox.center();
        data.push(cx / scene.width);
        data.push(cy / scene.height);
        data.push(obj.bbox.width() / scene.width);
        data.push(obj.bbox.height() / scene.height);
        match &cls {
            ClsSource::GroundTruth => {
                for c in 0..num_categories {
                    data.push(if c == obj.category { 1.0 } else { 0.0 });
                }
            }
            ClsSource::Predicted(m) => data.extend_from_slice(m.row(row)),
        }
    }
    Matrix::from_vec(n, width, data).map_err(LpgError::Tensor)
}

/// Binary incidence of the directed edges plus self-loops, then
/// row-normalized so every row sums to 1.
pub fn build_adjacency(n: usize, edges: &[(usize, usize)]) -> Result<Matrix, LpgError> {
    let mut a = Matrix::identity(n);
    for &(i, j) in edges {
        if i >= n || j >= n {
            return Err(LpgError::EdgeOutOfRange {
                edge: (i, j),
                nodes: n,
            });
        }
        a.set(i, j, 1.0);
    }
    for r in 0..n {
        let sum: f64 = a.row(r).iter().sum();
        for c in 0..n {
            a.set(r, c, a.get(r, c) / sum);
        }
    }
    Ok(a)
}

/// Records the stacked message-passing layers on `tape` and returns the
/// output feature handle: `[V_local | V_global]` for the full variant,
/// the final V_global alone for the locality ablation.
pub fn forward_on_tape(
    tape: &mut Tape,
    v_local: VarId,
    adjacency: VarId,
    weight_ids: &[VarId],
    activation: Activation,
    variant: LpgVariant,
) -> Result<VarId, LpgError> {
    if weight_ids.is_empty() {
        return Err(LpgError::InvalidConfig("layer count must be >= 1"));
    }
    let mut global: Option<VarId> = None;
    for &w in weight_ids {
        let input = match global {
            None => v_local,
            Some(g) => tape.concat_cols(v_local, g)?,
        };
        let aggregated = tape.matmul(adjacency, input)?;
        let pre = tape.matmul(aggregated, w)?;
        global = Some(activation.apply(tape, pre));
    }
    let g = global.expect("at least one layer");
    match variant {
        LpgVariant::Full => Ok(tape.concat_cols(v_local, g)?),
        LpgVariant::NoLocality => Ok(g),
    }
}

/// Plain forward pass for inference; returns the n x (F + F') output
/// (or n x F' for the locality ablation).
pub fn lpg_forward(
    v_local: &Matrix,
    adjacency: &Matrix,
    model: &LpgModel,
    cfg: &LpgConfig,
) -> Result<Matrix, LpgError> {
    let mut tape = Tape::new();
    let vl = tape.leaf(v_local.clone());
    let a = tape.leaf(adjacency.clone());
    let weights: Vec<VarId> = model
        .layer_weights
        .iter()
        .map(|w| tape.leaf(w.clone()))
        .collect();
    let vc = forward_on_tape(&mut tape, vl, a, &weights, cfg.activation, cfg.variant)?;
    Ok(tape.value(vc).clone())
}

/// Pair feature rows [V_c[subject] | V_c[object]] in candidate rank order.
pub fn pair_features(v_c: &Matrix, pairs: &[CandidatePair]) -> Result<Matrix, LpgError> {
    let index_pairs: Vec<(usize, usize)> = pairs
        .iter()
        .map(|p| (p.subject_index, p.object_index))
        .collect();
    let mut tape = Tape::new();
    let id = tape.leaf(v_c.clone());
    let gathered = tape.gather_pairs(id, &index_pairs)?;
    Ok(tape.value(gathered).clone())
}

/// Per-pair predicate distributions: softmax of the classifier output.
pub fn predict(pair_feats: &Matrix, model: &LpgModel) -> Result<Matrix, LpgError> {
    Ok(pair_feats.matmul(&model.classifier)?.row_softmax())
}

/// A scene reduced to network inputs: features, candidate pairs with
/// their edges and adjacency, and per-candidate training labels
/// (matching ground-truth predicate or the background class).
pub struct PreparedScene {
    pub image_id: String,
    pub features: Matrix,
    pub adjacency: Matrix,
    pub candidates: Vec<CandidatePair>,
    pub labels: Vec<usize>,
    /// Ground truth as (subject_index, object_index, predicate).
    pub gt_triples: Vec<(usize, usize, usize)>,
}

/// Builds network inputs for one scene. Returns `None` when the scene
/// has fewer than two objects or the filter admits no pair.
pub fn prepare_scene(
    scene: &SceneAnnotation,
    vocab: &Vocabulary,
    priors: &PriorDictionary,
    cfg: &LpgConfig,
    prd_cfg: &PrdConfig,
    background_class: usize,
) -> Result<Option<PreparedScene>, LpgError> {
    if scene.objects.len() < 2 {
        return Ok(None);
    }
    let objects: Vec<(usize, crate::geometry::BoundingBox)> = scene
        .objects
        .iter()
        .map(|o| (o.category, o.bbox))
        .collect();
    let gt_triples = scene.indexed_triples();
    let candidates = match cfg.candidate_source {
        CandidateSource::AbsPrd => abs_prd(&objects, priors, prd_cfg)?,
        CandidateSource::GroundTruth => {
            let mut pairs: Vec<(usize, usize)> =
                gt_triples.iter().map(|&(s, o, _)| (s, o)).collect();
            pairs.sort_unstable();
            pairs.dedup();
            pairs
                .into_iter()
                .map(|(s, o)| {
                    let score = objects[s].1.iou(&objects[o].1);
                    let provenance = if score > 0.0 {
                        match classify_pair(&objects[s].1, &objects[o].1) {
                            crate::geometry::RelativePosition::IntersectNoContain => {
                                Provenance::Intersection
                            }
                            _ => Provenance::Containment,
                        }
                    } else {
                        Provenance::ZoomIn
                    };
                    CandidatePair {
                        subject_index: s,
                        object_index: o,
                        score,
                        provenance,
                        zoom_in_factor: None,
                    }
                })
                .collect()
        }
    };
    if candidates.is_empty() {
        return Ok(None);
    }
    let features = featurize(scene, vocab, ClsSource::GroundTruth, cfg.use_attributes)?;
    let edges: Vec<(usize, usize)> = candidates
        .iter()
        .map(|c| (c.subject_index, c.object_index))
        .collect();
    let adjacency = build_adjacency(scene.objects.len(), &edges)?;
    let labels = candidates
        .iter()
        .map(|c| {
            gt_triples
                .iter()
                .find(|&&(s, o, _)| s == c.subject_index && o == c.object_index)
                .map(|&(_, _, p)| p)
                .unwrap_or(background_class)
        })
        .collect();
    Ok(Some(PreparedScene {
        image_id: scene.image_id.clone(),
        features,
        adjacency,
        candidates,
        labels,
        gt_triples,
    }))
}

/// One gradient step on a prepared scene; returns the loss before the
/// update.
fn train_step(
    prepared: &PreparedScene,
    model: &mut LpgModel,
    cfg: &LpgConfig,
) -> Result<f64, LpgError> {
    let mut tape = Tape::new();
    let vl = tape.leaf(prepared.features.clone());
    let a = tape.leaf(prepared.adjacency.clone());
    let weight_ids: Vec<VarId> = model
        .layer_weights
        .iter()
        .map(|w| tape.leaf(w.clone()))
        .collect();
    let classifier_id = tape.leaf(model.classifier.clone());
    let vc = forward_on_tape(&mut tape, vl, a, &weight_ids, cfg.activation, cfg.variant)?;
    let index_pairs: Vec<(usize, usize)> = prepared
        .candidates
        .iter()
        .map(|c| (c.subject_index, c.object_index))
        .collect();
    let pair_feats = tape.gather_pairs(vc, &index_pairs)?;
    let logits = tape.matmul(pair_feats, classifier_id)?;
    let loss = tape.softmax_cross_entropy(logits, &prepared.labels)?;
    let loss_value = tape.value(loss).get(0, 0);
    let grads = tape.backward(loss)?;
    for (w, id) in model.layer_weights.iter_mut().zip(&weight_ids) {
        sgd_step(w, grads.get(*id), cfg.learning_rate)?;
    }
    sgd_step(&mut model.classifier, grads.get(classifier_id), cfg.learning_rate)?;
    Ok(loss_value)
}

/// Trains on one scene graph per step with plain gradient descent,
/// visiting scenes in a seeded shuffled order each epoch. Returns the
/// model and the mean loss per epoch.
pub fn train(
    corpus: &Corpus,
    priors: &PriorDictionary,
    cfg: &LpgConfig,
    prd_cfg: &PrdConfig,
) -> Result<(LpgModel, Vec<f64>), LpgError> {
    cfg.validate()?;
    if corpus.scenes.is_empty() {
        return Err(LpgError::EmptyCorpus);
    }
    let feature_dim = cfg.feature_dim(&corpus.vocabulary);
    let num_predicates = corpus.vocabulary.predicates.len();
    let mut model = LpgModel::init(feature_dim, num_predicates, cfg)?;
    let background = model.background_class();

    let mut prepared = Vec::new();
    for scene in &corpus.scenes {
        if let Some(p) = prepare_scene(scene, &corpus.vocabulary, priors, cfg, prd_cfg, background)?
        {
            prepared.push(p);
        }
    }
    if prepared.is_empty() {
        return Err(LpgError::NoCandidates);
    }

    let mut order: Vec<usize> = (0..prepared.len()).collect();
    let mut rng = substream(cfg.seed, "train-order");
    let mut trace = Vec::with_capacity(cfg.epochs);
    for _ in 0..cfg.epochs {
        order.shuffle(&mut rng);
        let mut total = 0.0;
        for &idx in &order {
            total += train_step(&prepared[idx], &mut model, cfg)?;
        }
        trace.push(total / prepared.len() as f64);
    }
    Ok((model, trace))
}
