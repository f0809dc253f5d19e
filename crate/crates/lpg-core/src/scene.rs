//! Annotation data model and validation: vocabularies, per-image scenes
//! with objects and relationship triples, connectivity and duplicate
//! checks, corpus statistics, and the seeded train/test split.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;

use rand::seq::SliceRandom;

use crate::geometry::BoundingBox;
use crate::rng::substream;

#[derive(Debug, Clone, PartialEq)]
pub enum SceneError {
    EmptyVocabularyEntry {
        section: &'static str,
    },
    DuplicateVocabularyEntry {
        section: &'static str,
        name: String,
    },
    /// Vocabulary names double as file-format tokens, so whitespace is out.
    VocabularyEntryWhitespace {
        section: &'static str,
        name: String,
    },
    DuplicateObjectId {
        image_id: String,
        object_id: u32,
    },
    CategoryOutOfRange {
        image_id: String,
        object_id: u32,
        category: usize,
    },
    AttributeLengthMismatch {
        image_id: String,
        object_id: u32,
        got: usize,
        expected: usize,
    },
    BoxOutOfImage {
        image_id: String,
        object_id: u32,
    },
    DanglingTripleId {
        image_id: String,
        object_id: u32,
    },
    SelfRelation {
        image_id: String,
        object_id: u32,
    },
    PredicateOutOfRange {
        image_id: String,
        predicate: usize,
    },
    DuplicateTriple {
        image_id: String,
        subject_id: u32,
        object_id: u32,
        predicate: usize,
    },
    InvalidImageSize {
        image_id: String,
    },
    InvalidSplitFraction(f64),
}

impl fmt::Display for SceneError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SceneError::EmptyVocabularyEntry { section } => {
                write!(f, "vocabulary section '{section}' contains an empty name")
            }
            SceneError::DuplicateVocabularyEntry { section, name } => {
                write!(f, "vocabulary section '{section}' repeats '{name}'")
            }
            SceneError::VocabularyEntryWhitespace { section, name } => write!(
                f,
                "vocabulary section '{section}' entry '{name}' contains whitespace"
            ),
            SceneError::DuplicateObjectId {
                image_id,
                object_id,
            } => write!(f, "scene {image_id}: duplicate object id {object_id}"),
            SceneError::CategoryOutOfRange {
                image_id,
                object_id,
                category,
            } => write!(
                f,
                "scene {image_id}: object {object_id} category index {category} out of range"
            ),
            SceneError::AttributeLengthMismatch {
                image_id,
                object_id,
                got,
                expected,
            } => write!(
                f,
                "scene {image_id}: object {object_id} attribute vector length {got}, vocabulary has {expected}"
            ),
            SceneError::BoxOutOfImage {
                image_id,
                object_id,
            } => write!(
                f,
                "scene {image_id}: object {object_id} box exceeds image bounds"
            ),
            SceneError::DanglingTripleId {
                image_id,
                object_id,
            } => write!(
                f,
                "scene {image_id}: triple references missing object id {object_id}"
            ),
            SceneError::SelfRelation {
                image_id,
                object_id,
            } => write!(
                f,
                "scene {image_id}: triple relates object {object_id} to itself"
            ),
            SceneError::PredicateOutOfRange {
                image_id,
                predicate,
            } => write!(
                f,
                "scene {image_id}: predicate index {predicate} out of range"
            ),
            SceneError::DuplicateTriple {
                image_id,
                subject_id,
                object_id,
                predicate,
            } => write!(
                f,
                "scene {image_id}: duplicate triple ({subject_id}, {object_id}, predicate {predicate})"
            ),
            SceneError::InvalidImageSize { image_id } => {
                write!(f, "scene {image_id}: image dimensions must be positive")
            }
            SceneError::InvalidSplitFraction(v) => {
                write!(f, "train fraction {v} must lie strictly between 0 and 1")
            }
        }
    }
}

/// Ordered category lists for objects, predicates, and attributes.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Vocabulary {
    pub objects: Vec<String>,
    pub predicates: Vec<String>,
    pub attributes: Vec<String>,
}

impl Vocabulary {
    pub fn validate(&self) -> Result<(), SceneError> {
        for (section, names) in [
            ("objects", &self.objects),
            ("predicates", &self.predicates),
            ("attributes", &self.attributes),
        ] {
            let mut seen = BTreeSet::new();
            for name in names {
                if name.is_empty() {
                    return Err(SceneError::EmptyVocabularyEntry { section });
                }
                if name.chars().any(char::is_whitespace) {
                    return Err(SceneError::VocabularyEntryWhitespace {
                        section,
                        name: name.clone(),
                    });
                }
                if !seen.insert(name.clone()) {
                    return Err(SceneError::DuplicateVocabularyEntry {
                        section,
                        name: name.clone(),
                    });
                }
            }
        }
        Ok(())
    }

    pub fn object_index(&self, name: &str) -> Option<usize> {
        self.objects.iter().position(|n| n == name)
    }

    pub fn predicate_index(&self, name: &str) -> Option<usize> {
        self.predicates.iter().position(|n| n == name)
    }

    pub fn attribute_index(&self, name: &str) -> Option<usize> {
        self.attributes.iter().position(|n| n == name)
    }
}

/// One annotated object: category, box, and a multi-hot attribute vector
/// over the attribute vocabulary.
#[derive(Debug, Clone, PartialEq)]
pub struct ObjectInstance {
    pub id: u32,
    pub category: usize,
    pub bbox: BoundingBox,
    pub attributes: Vec<bool>,
}

/// Directed subject -> object relationship with a predicate index.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RelationshipTriple {
    pub subject_id: u32,
    pub object_id: u32,
    pub predicate: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SceneAnnotation {
    pub image_id: String,
    pub width: f64,
    pub height: f64,
    pub objects: Vec<ObjectInstance>,
    pub triples: Vec<RelationshipTriple>,
}

impl SceneAnnotation {
    pub fn validate(&self, vocab: &Vocabulary) -> Result<(), SceneError> {
        if !(self.width.is_finite() && self.height.is_finite())
            || self.width <= 0.0
            || self.height <= 0.0
        {
            return Err(SceneError::InvalidImageSize {
                image_id: self.image_id.clone(),
            });
        }
        let mut ids = BTreeSet::new();
        for obj in &self.objects {
            if !ids.insert(obj.id) {
                return Err(SceneError::DuplicateObjectId {
                    image_id: self.image_id.clone(),
                    object_id: obj.id,
                });
            }
            if obj.category >= vocab.objects.len() {
                return Err(SceneError::CategoryOutOfRange {
                    image_id: self.image_id.clone(),
                    object_id: obj.id,
                    category: obj.category,
                });
            }
            if obj.attributes.len() != vocab.attributes.len() {
                return Err(SceneError::AttributeLengthMismatch {
                    image_id: self.image_id.clone(),
                    object_id: obj.id,
                    got: obj.attributes.len(),
                    expected: vocab.attributes.len(),
                });
            }
            let b = &obj.bbox;
            if b.x_min() < 0.0 || b.y_min() < 0.0 || b.x_max() > self.width || b.y_max() > self.height
            {
                return Err(SceneError::BoxOutOfImage {
                    image_id: self.image_id.clone(),
                    object_id: obj.id,
                });
            }
        }
        let mut seen_triples = BTreeSet::new();
        for t in &self.triples {
            if t.subject_id == t.object_id {
                return Err(SceneError::SelfRelation {
                    image_id: self.image_id.clone(),
                    object_id: t.subject_id,
                });
            }
            for endpoint in [t.subject_id, t.object_id] {
                if !ids.contains(&endpoint) {
                    return Err(SceneError::DanglingTripleId {
                        image_id: self.image_id.clone(),
                        object_id: endpoint,
                    });
                }
            }
            if t.predicate >= vocab.predicates.len() {
                return Err(SceneError::PredicateOutOfRange {
                    image_id: self.image_id.clone(),
                    predicate: t.predicate,
                });
            }
            if !seen_triples.insert((t.subject_id, t.object_id, t.predicate)) {
                return Err(SceneError::DuplicateTriple {
                    image_id: self.image_id.clone(),
                    subject_id: t.subject_id,
                    object_id: t.object_id,
                    predicate: t.predicate,
                });
            }
        }
        Ok(())
    }

    /// Position of the object with the given id in `objects`.
    pub fn object_index(&self, id: u32) -> Option<usize> {
        self.objects.iter().position(|o| o.id == id)
    }

    /// Triples rewritten as (subject_index, object_index, predicate).
    /// Validation guarantees every id resolves.
    pub fn indexed_triples(&self) -> Vec<(usize, usize, usize)> {
        self.triples
            .iter()
            .map(|t| {
                (
                    self.object_index(t.subject_id).expect("validated scene"),
                    self.object_index(t.object_id).expect("validated scene"),
                    t.predicate,
                )
            })
            .collect()
    }
}

/// Ids of objects that appear in no triple, neither as subject nor as
/// object. Empty iff the scene satisfies the connected-annotation
/// property.
pub fn check_connectivity(scene: &SceneAnnotation) -> Vec<u32> {
    let mut related = BTreeSet::new();
    for t in &scene.triples {
        related.insert(t.subject_id);
        related.insert(t.object_id);
    }
    scene
        .objects
        .iter()
        .map(|o| o.id)
        .filter(|id| !related.contains(id))
        .collect()
}

/// Pairs of object ids sharing the same category and identical box
/// coordinates. Reported as a warning, never auto-fixed.
pub fn duplicate_groundings(scene: &SceneAnnotation) -> Vec<(u32, u32)> {
    let mut dups = Vec::new();
    for (i, a) in scene.objects.iter().enumerate() {
        for b in &scene.objects[i + 1..] {
            if a.category == b.category && a.bbox == b.bbox {
                dups.push((a.id, b.id));
            }
        }
    }
    dups
}

#[derive(Debug, Clone, PartialEq)]
pub struct Corpus {
    pub corpus_id: String,
    pub vocabulary: Vocabulary,
    pub scenes: Vec<SceneAnnotation>,
}

impl Corpus {
    pub fn validate(&self) -> Result<(), SceneError> {
        self.vocabulary.validate()?;
        for scene in &self.scenes {
            scene.validate(&self.vocabulary)?;
        }
        Ok(())
    }
}

/// Per-image means and per-category frequency tables.
#[derive(Debug, Clone, PartialEq)]
pub struct CorpusStats {
    pub scene_count: usize,
    pub mean_objects_per_image: f64,
    pub mean_relations_per_image: f64,
    pub mean_attributes_per_image: f64,
    pub object_histogram: BTreeMap<usize, u64>,
    pub predicate_histogram: BTreeMap<usize, u64>,
    pub attribute_histogram: BTreeMap<usize, u64>,
}

pub fn corpus_stats(corpus: &Corpus) -> CorpusStats {
    let mut object_histogram = BTreeMap::new();
    let mut predicate_histogram = BTreeMap::new();
    let mut attribute_histogram = BTreeMap::new();
    let mut objects = 0u64;
    let mut relations = 0u64;
    let mut attributes = 0u64;
    for scene in &corpus.scenes {
        objects += scene.objects.len() as u64;
        relations += scene.triples.len() as u64;
        for obj in &scene.objects {
            *object_histogram.entry(obj.category).or_insert(0) += 1;
            for (idx, set) in obj.attributes.iter().enumerate() {
                if *set {
                    attributes += 1;
                    *attribute_histogram.entry(idx).or_insert(0) += 1;
                }
            }
        }
        for t in &scene.triples {
            *predicate_histogram.entry(t.predicate).or_insert(0) += 1;
        }
    }
    let n = corpus.scenes.len() as f64;
    let mean = |total: u64| if n > 0.0 { total as f64 / n } else { 0.0 };
    CorpusStats {
        scene_count: corpus.scenes.len(),
        mean_objects_per_image: mean(objects),
        mean_relations_per_image: mean(relations),
        mean_attributes_per_image: mean(attributes),
        object_histogram,
        predicate_histogram,
        attribute_histogram,
    }
}

/// Deterministic scene-level split: shuffles scene indices with the
/// "split" substream of `seed` and takes the first round(fraction * n)
/// scenes as the train half. Disjoint and exhaustive by construction.
pub fn split_corpus(
    corpus: &Corpus,
    train_fraction: f64,
    seed: u64,
) -> Result<(Corpus, Corpus), SceneError> {
    if !(train_fraction > 0.0 && train_fraction < 1.0) {
        return Err(SceneError::InvalidSplitFraction(train_fraction));
    }
    let mut indices: Vec<usize> = (0..corpus.scenes.len()).collect();
    let mut rng = substream(seed, "split");
    indices.shuffle(&mut rng);
    let train_len = libm::round(train_fraction * corpus.scenes.len() as f64) as usize;
    let pick = |idxs: &[usize]| {
        let mut sorted: Vec<usize> = idxs.into();
        sorted.sort_unstable();
        Corpus {
            corpus_id: corpus.corpus_id.clone(),
            vocabulary: corpus.vocabulary.clone(),
            scenes: sorted.iter().map(|&i| corpus.scenes[i].clone()).collect(),
        }
    };
    Ok((pick(&indices[..train_len]), pick(&indices[train_len..])))
}
