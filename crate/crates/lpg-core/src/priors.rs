//! The category-pair prior dictionary: per ordered pair of object
//! categories, how often the subject's box surrounds the object's (and
//! vice versa), plus the raw lists of zoom-out and zoom-in touch factors
//! observed over annotated related pairs.

use alloc::collections::BTreeMap;
use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;

use crate::geometry::{
    classify_pair, max_zoom_in_factor, min_zoom_out_factor, BoundingBox, GeometryError,
    RelativePosition, ZoomConfig,
};
use crate::scene::Corpus;

#[derive(Debug, Clone, PartialEq)]
pub enum PriorsError {
    Geometry(GeometryError),
    /// A corpus triple referenced an object id missing from its scene.
    DanglingObjectId { image_id: String, object_id: u32 },
    /// Merging dictionaries built over different category vocabularies.
    VocabularyMismatch,
    CategoryOutOfRange(usize),
}

impl fmt::Display for PriorsError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PriorsError::Geometry(e) => write!(f, "geometry failure while recording pair: {e}"),
            PriorsError::DanglingObjectId {
                image_id,
                object_id,
            } => write!(
                f,
                "scene {image_id}: triple references missing object id {object_id}"
            ),
            PriorsError::VocabularyMismatch => {
                write!(f, "prior dictionaries cover different category vocabularies")
            }
            PriorsError::CategoryOutOfRange(c) => write!(f, "category index {c} out of range"),
        }
    }
}

impl From<GeometryError> for PriorsError {
    fn from(e: GeometryError) -> Self {
        PriorsError::Geometry(e)
    }
}

/// Min, max, mean, and population variance of a factor list. Recomputed
/// from the raw list by [`PriorDictionary::fit_gaussians`]; absent for
/// empty lists.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FactorSummary {
    pub min: f64,
    pub max: f64,
    pub mean: f64,
    pub variance: f64,
}

impl FactorSummary {
    pub fn from_list(values: &[f64]) -> Option<Self> {
        if values.is_empty() {
            return None;
        }
        let n = values.len() as f64;
        let mean = values.iter().sum::<f64>() / n;
        let variance = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
        let min = values.iter().copied().fold(f64::INFINITY, f64::min);
        let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        Some(Self {
            min,
            max,
            mean,
            variance,
        })
    }
}

/// Statistics for one ordered category pair. Factor lists are kept
/// verbatim; summaries are derived views.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct PairStats {
    /// Times the subject's box surrounded the object's.
    pub contain_count_so: u64,
    /// Times the object's box surrounded the subject's.
    pub contain_count_os: u64,
    /// Minimum zoom-out factors of intersecting pairs, each in (0, 1].
    pub zoom_out_factors: Vec<f64>,
    /// Maximum zoom-in factors of disjoint pairs, each >= 1.
    pub zoom_in_factors: Vec<f64>,
    zoom_out_summary: Option<FactorSummary>,
    zoom_in_summary: Option<FactorSummary>,
}

impl PairStats {
    /// Assembles an entry from raw counts and factor lists, e.g. when
    /// loading a dictionary from disk. Summaries stay unfitted.
    pub fn from_parts(
        contain_count_so: u64,
        contain_count_os: u64,
        zoom_out_factors: Vec<f64>,
        zoom_in_factors: Vec<f64>,
    ) -> Self {
        Self {
            contain_count_so,
            contain_count_os,
            zoom_out_factors,
            zoom_in_factors,
            zoom_out_summary: None,
            zoom_in_summary: None,
        }
    }

    /// One observation per recorded pair, whichever bucket it landed in.
    pub fn total_observations(&self) -> u64 {
        self.contain_count_so
            + self.contain_count_os
            + self.zoom_out_factors.len() as u64
            + self.zoom_in_factors.len() as u64
    }

    /// Containment counts as fractions of this entry's observations.
    /// Exposed read-only; the filter itself only tests nonzero-ness.
    pub fn contain_frequency_so(&self) -> f64 {
        let total = self.total_observations();
        if total == 0 {
            0.0
        } else {
            self.contain_count_so as f64 / total as f64
        }
    }

    pub fn contain_frequency_os(&self) -> f64 {
        let total = self.total_observations();
        if total == 0 {
            0.0
        } else {
            self.contain_count_os as f64 / total as f64
        }
    }

    pub fn zoom_out_summary(&self) -> Option<&FactorSummary> {
        self.zoom_out_summary.as_ref()
    }

    pub fn zoom_in_summary(&self) -> Option<&FactorSummary> {
        self.zoom_in_summary.as_ref()
    }

    fn refit(&mut self) {
        self.zoom_out_summary = FactorSummary::from_list(&self.zoom_out_factors);
        self.zoom_in_summary = FactorSummary::from_list(&self.zoom_in_factors);
    }
}

/// The dictionary over ordered category pairs. (A, B) and (B, A) are
/// distinct keys: the containment tests are asymmetric.
#[derive(Debug, Clone, PartialEq)]
pub struct PriorDictionary {
    categories: Vec<String>,
    corpus_id: String,
    entries: BTreeMap<(usize, usize), PairStats>,
    fitted: bool,
}

impl PriorDictionary {
    pub fn new(categories: Vec<String>, corpus_id: String) -> Self {
        Self {
            categories,
            corpus_id,
            entries: BTreeMap::new(),
            fitted: false,
        }
    }

    pub fn categories(&self) -> &[String] {
        &self.categories
    }

    pub fn corpus_id(&self) -> &str {
        &self.corpus_id
    }

    pub fn entries(&self) -> impl Iterator<Item = (&(usize, usize), &PairStats)> {
        self.entries.iter()
    }

    pub fn entry(&self, subj_cat: usize, obj_cat: usize) -> Option<&PairStats> {
        self.entries.get(&(subj_cat, obj_cat))
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn is_fitted(&self) -> bool {
        self.fitted
    }

    pub fn total_observations(&self) -> u64 {
        self.entries.values().map(PairStats::total_observations).sum()
    }

    /// Inserts a fully formed entry, e.g. when loading from a file.
    /// Leaves the dictionary unfitted.
    pub fn insert_entry(
        &mut self,
        subj_cat: usize,
        obj_cat: usize,
        stats: PairStats,
    ) -> Result<(), PriorsError> {
        if subj_cat >= self.categories.len() {
            return Err(PriorsError::CategoryOutOfRange(subj_cat));
        }
        if obj_cat >= self.categories.len() {
            return Err(PriorsError::CategoryOutOfRange(obj_cat));
        }
        self.entries.insert((subj_cat, obj_cat), stats);
        self.fitted = false;
        Ok(())
    }

    /// Records one annotated (subject, object) pair. Exactly one bucket
    /// of the entry changes, picked by the pair's relative position; a
    /// disjoint pair whose boxes never touch within the search interval
    /// records nothing (clamping it would inflate the zoom-in maximum
    /// used as the acceptance bound).
    pub fn record_pair(
        &mut self,
        subj_cat: usize,
        obj_cat: usize,
        subj_box: &BoundingBox,
        obj_box: &BoundingBox,
        cfg: &ZoomConfig,
    ) -> Result<(), PriorsError> {
        if subj_cat >= self.categories.len() {
            return Err(PriorsError::CategoryOutOfRange(subj_cat));
        }
        if obj_cat >= self.categories.len() {
            return Err(PriorsError::CategoryOutOfRange(obj_cat));
        }
        match classify_pair(subj_box, obj_box) {
            RelativePosition::AContainsB => {
                self.bucket(subj_cat, obj_cat).contain_count_so += 1;
            }
            RelativePosition::BContainsA => {
                self.bucket(subj_cat, obj_cat).contain_count_os += 1;
            }
            RelativePosition::IntersectNoContain => {
                let factor = min_zoom_out_factor(subj_box, obj_box, &cfg.zoom_out)?;
                self.bucket(subj_cat, obj_cat).zoom_out_factors.push(factor);
            }
            RelativePosition::Disjoint => {
                if let Some(factor) = max_zoom_in_factor(subj_box, obj_box, &cfg.zoom_in)? {
                    self.bucket(subj_cat, obj_cat).zoom_in_factors.push(factor);
                }
            }
        }
        self.fitted = false;
        Ok(())
    }

    fn bucket(&mut self, subj_cat: usize, obj_cat: usize) -> &mut PairStats {
        self.entries.entry((subj_cat, obj_cat)).or_default()
    }

    /// Attaches min/max/mean/variance summaries to every factor list.
    pub fn fit_gaussians(&mut self) {
        for stats in self.entries.values_mut() {
            stats.refit();
        }
        self.fitted = true;
    }

    /// Per-entry counts summed and factor lists concatenated. Both
    /// dictionaries must share the category vocabulary. The result is
    /// unfitted.
    pub fn merge(&self, other: &PriorDictionary) -> Result<PriorDictionary, PriorsError> {
        if self.categories != other.categories {
            return Err(PriorsError::VocabularyMismatch);
        }
        let mut merged = self.clone();
        merged.fitted = false;
        for (key, stats) in &other.entries {
            let slot = merged.entries.entry(*key).or_default();
            slot.contain_count_so += stats.contain_count_so;
            slot.contain_count_os += stats.contain_count_os;
            slot.zoom_out_factors.extend_from_slice(&stats.zoom_out_factors);
            slot.zoom_in_factors.extend_from_slice(&stats.zoom_in_factors);
            slot.zoom_out_summary = None;
            slot.zoom_in_summary = None;
        }
        Ok(merged)
    }
}

/// Builds a dictionary by recording every annotated relationship triple
/// of the corpus, in subject -> object order. Statistics are gathered
/// only over annotated triples, never over all object pairs: the absence
/// of an entry is itself the "no relationship" signal.
pub fn build_priors(corpus: &Corpus, cfg: &ZoomConfig) -> Result<PriorDictionary, PriorsError> {
    cfg.validate()?;
    let mut dict = PriorDictionary::new(
        corpus.vocabulary.objects.clone(),
        corpus.corpus_id.clone(),
    );
    for scene in &corpus.scenes {
        for triple in &scene.triples {
            let subj = scene.object_index(triple.subject_id).ok_or_else(|| {
                PriorsError::DanglingObjectId {
                    image_id: scene.image_id.clone(),
                    object_id: triple.subject_id,
                }
            })?;
            let obj = scene.object_index(triple.object_id).ok_or_else(|| {
                PriorsError::DanglingObjectId {
                    image_id: scene.image_id.clone(),
                    object_id: triple.object_id,
                }
            })?;
            let subj_obj = &scene.objects[subj];
            let obj_obj = &scene.objects[obj];
            dict.record_pair(
                subj_obj.category,
                obj_obj.category,
                &subj_obj.bbox,
                &obj_obj.bbox,
                cfg,
            )?;
        }
    }
    dict.fit_gaussians();
    Ok(dict)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scene::{ObjectInstance, RelationshipTriple, SceneAnnotation, Vocabulary};
    use alloc::string::ToString;
    use alloc::vec;

    fn bb(x0: f64, y0: f64, x1: f64, y1: f64) -> BoundingBox {
        BoundingBox::new(x0, y0, x1, y1).unwrap()
    }

    fn dict() -> PriorDictionary {
        PriorDictionary::new(vec!["man".into(), "hat".into(), "woman".into()], "t".into())
    }

    #[test]
    fn nested_pair_increments_containment_only() {
        let mut d = dict();
        let man = bb(0.0, 0.0, 10.0, 20.0);
        let hat = bb(3.0, 1.0, 7.0, 4.0);
        d.record_pair(0, 1, &man, &hat, &ZoomConfig::default()).unwrap();
        let stats = d.entry(0, 1).unwrap();
        assert_eq!(stats.contain_count_so, 1);
        assert_eq!(stats.contain_count_os, 0);
        assert!(stats.zoom_out_factors.is_empty());
        assert!(stats.zoom_in_factors.is_empty());
    }

    #[test]
    fn disjoint_pair_records_touch_factor() {
        let mut d = dict();
        // touch factor 2: edges meet when 1 + L = 5 - L
        let woman = bb(0.0, 0.0, 2.0, 2.0);
        let man = bb(4.0, 4.0, 6.0, 6.0);
        d.record_pair(2, 0, &woman, &man, &ZoomConfig::default()).unwrap();
        let stats = d.entry(2, 0).unwrap();
        assert_eq!(stats.zoom_in_factors.len(), 1);
        assert!((stats.zoom_in_factors[0] - 2.0).abs() < 1e-3);
        assert_eq!(stats.total_observations(), 1);
    }

    #[test]
    fn no_touch_records_nothing() {
        let mut d = dict();
        let a = bb(0.0, 0.0, 2.0, 2.0);
        let b = bb(100.0, 0.0, 102.0, 2.0);
        d.record_pair(0, 1, &a, &b, &ZoomConfig::default()).unwrap();
        match d.entry(0, 1) {
            None => {}
            Some(stats) => assert_eq!(stats.total_observations(), 0),
        }
    }

    #[test]
    fn bucket_exclusivity_by_observation_count() {
        let mut d = dict();
        let cfg = ZoomConfig::default();
        let cases = [
            (bb(0.0, 0.0, 10.0, 10.0), bb(2.0, 2.0, 4.0, 4.0)),
            (bb(2.0, 2.0, 4.0, 4.0), bb(0.0, 0.0, 10.0, 10.0)),
            (bb(0.0, 0.0, 4.0, 4.0), bb(2.0, 2.0, 6.0, 6.0)),
            (bb(0.0, 0.0, 2.0, 2.0), bb(4.0, 4.0, 6.0, 6.0)),
        ];
        for (i, (a, b)) in cases.iter().enumerate() {
            let before = d.entry(0, 1).map_or(0, PairStats::total_observations);
            d.record_pair(0, 1, a, b, &cfg).unwrap();
            let after = d.entry(0, 1).unwrap().total_observations();
            assert_eq!(after, before + 1, "case {i}");
        }
        let stats = d.entry(0, 1).unwrap();
        assert_eq!(stats.contain_count_so, 1);
        assert_eq!(stats.contain_count_os, 1);
        assert_eq!(stats.zoom_out_factors.len(), 1);
        assert_eq!(stats.zoom_in_factors.len(), 1);
    }

    #[test]
    fn summaries_match_recomputation() {
        assert_eq!(
            FactorSummary::from_list(&[2.0, 2.0, 2.0]),
            Some(FactorSummary {
                min: 2.0,
                max: 2.0,
                mean: 2.0,
                variance: 0.0
            })
        );
        let s = FactorSummary::from_list(&[1.0, 3.0]).unwrap();
        assert_eq!(s.mean, 2.0);
        assert_eq!(s.variance, 1.0); // population variance
        assert_eq!(FactorSummary::from_list(&[]), None);
    }

    #[test]
    fn singleton_list_has_zero_variance() {
        let s = FactorSummary::from_list(&[1.7]).unwrap();
        assert_eq!(s.variance, 0.0);
        assert_eq!(s.min, 1.7);
        assert_eq!(s.max, 1.7);
    }

    #[test]
    fn merge_identity_and_additivity() {
        let mut a = dict();
        let cfg = ZoomConfig::default();
        a.record_pair(0, 1, &bb(0.0, 0.0, 10.0, 10.0), &bb(2.0, 2.0, 4.0, 4.0), &cfg)
            .unwrap();
        a.record_pair(2, 0, &bb(0.0, 0.0, 2.0, 2.0), &bb(4.0, 4.0, 6.0, 6.0), &cfg)
            .unwrap();
        let empty = dict();
        let merged = a.merge(&empty).unwrap();
        assert_eq!(merged.total_observations(), a.total_observations());

        let mut b = dict();
        b.record_pair(0, 1, &bb(0.0, 0.0, 4.0, 4.0), &bb(2.0, 2.0, 6.0, 6.0), &cfg)
            .unwrap();
        let ab = a.merge(&b).unwrap();
        assert_eq!(
            ab.total_observations(),
            a.total_observations() + b.total_observations()
        );
    }

    #[test]
    fn merge_rejects_vocabulary_mismatch() {
        let a = dict();
        let b = PriorDictionary::new(vec!["car".into()], "t".into());
        assert!(matches!(a.merge(&b), Err(PriorsError::VocabularyMismatch)));
    }

    fn one_triple_corpus() -> Corpus {
        Corpus {
            corpus_id: "t".into(),
            vocabulary: Vocabulary {
                objects: vec!["man".into(), "hat".into()],
                predicates: vec!["wears".into()],
                attributes: vec![],
            },
            scenes: vec![SceneAnnotation {
                image_id: "img0".to_string(),
                width: 100.0,
                height: 100.0,
                objects: vec![
                    ObjectInstance {
                        id: 1,
                        category: 0,
                        bbox: bb(0.0, 0.0, 10.0, 20.0),
                        attributes: vec![],
                    },
                    ObjectInstance {
                        id: 2,
                        category: 1,
                        bbox: bb(3.0, 1.0, 7.0, 4.0),
                        attributes: vec![],
                    },
                ],
                triples: vec![RelationshipTriple {
                    subject_id: 1,
                    object_id: 2,
                    predicate: 0,
                }],
            }],
        }
    }

    #[test]
    fn build_on_empty_corpus() {
        let mut corpus = one_triple_corpus();
        corpus.scenes.clear();
        let d = build_priors(&corpus, &ZoomConfig::default()).unwrap();
        assert!(d.is_empty());
        assert!(d.is_fitted());
    }

    #[test]
    fn build_single_triple() {
        let d = build_priors(&one_triple_corpus(), &ZoomConfig::default()).unwrap();
        assert_eq!(d.len(), 1);
        assert_eq!(d.total_observations(), 1);
        assert_eq!(d.entry(0, 1).unwrap().contain_count_so, 1);
    }

    #[test]
    fn build_reports_dangling_id() {
        let mut corpus = one_triple_corpus();
        corpus.scenes[0].triples.push(RelationshipTriple {
            subject_id: 1,
            object_id: 99,
            predicate: 0,
        });
        assert!(matches!(
            build_priors(&corpus, &ZoomConfig::default()),
            Err(PriorsError::DanglingObjectId { object_id: 99, .. })
        ));
    }

    #[test]
    fn split_build_merge_equals_single_pass() {
        let mut corpus = one_triple_corpus();
        let mut second = corpus.scenes[0].clone();
        second.image_id = "img1".to_string();
        second.objects[1].bbox = bb(40.0, 40.0, 50.0, 50.0); // disjoint now
        corpus.scenes.push(second);

        let cfg = ZoomConfig::default();
        let whole = build_priors(&corpus, &cfg).unwrap();

        let mut first_half = corpus.clone();
        first_half.scenes.truncate(1);
        let mut second_half = corpus.clone();
        second_half.scenes.remove(0);
        let mut merged = build_priors(&first_half, &cfg)
            .unwrap()
            .merge(&build_priors(&second_half, &cfg).unwrap())
            .unwrap();
        merged.fit_gaussians();
        assert_eq!(merged, whole);
    }
}
