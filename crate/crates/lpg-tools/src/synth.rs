//! Synthetic corpus generator. Every predicate is a deterministic
//! function of the category pair, the relative box position, and (for
//! the on/overlaps split) one subject attribute, so a correctly wired
//! model can learn the rules to near-perfect recall:
//!
//! - containment cells: a car on a road or a boat on a lake, annotated
//!   in both directions (`inside` and `covers`);
//! - overlap cells: a building overlapping a tree — `on` when the
//!   building carries the `elevated` attribute, `overlaps` otherwise;
//! - disjoint cells: a person and a truck separated so the pair touches
//!   at a common zoom factor in [1.3, 3], annotated `left-of` or
//!   `right-of` by the subject's side.
//!
//! Pair types follow a fixed cycle giving just over 30% disjoint
//! triples corpus-wide. Every third scene additionally plants an
//! overlapping rock/bush pair with no annotation (a meaningless overlap
//! for the filter to prune); those scenes violate the
//! every-object-related property and are flagged in the manifest.

use crate::formats::manifest::SceneManifest;
use lpg_core::rng::substream;
use lpg_core::{
    BoundingBox, Corpus, ObjectInstance, RelationshipTriple, SceneAnnotation, Vocabulary,
};
use rand::seq::SliceRandom;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

pub const IMAGE_SIZE: f64 = 1000.0;
const GRID_COLS: usize = 3;
const GRID_ROWS: usize = 2;

pub fn synth_vocabulary() -> Vocabulary {
    Vocabulary {
        objects: [
            "building", "tree", "road", "lake", "car", "boat", "person", "truck", "rock", "bush",
        ]
        .iter()
        .map(|s| s.to_string())
        .collect(),
        predicates: ["inside", "covers", "on", "overlaps", "left-of", "right-of"]
            .iter()
            .map(|s| s.to_string())
            .collect(),
        attributes: ["elevated", "small", "dark", "round"]
            .iter()
            .map(|s| s.to_string())
            .collect(),
    }
}

#[derive(Clone, Copy)]
enum PairKind {
    Containment,
    Overlap,
    Disjoint,
}

/// Pair-type cycle: 3 containment, 3 overlap, 4 disjoint per 10 pairs.
/// Containment pairs carry two triples each, so disjoint triples are
/// 4 of every 13 (~31%) corpus-wide.
const PAIR_CYCLE: [PairKind; 10] = [
    PairKind::Containment,
    PairKind::Overlap,
    PairKind::Disjoint,
    PairKind::Overlap,
    PairKind::Disjoint,
    PairKind::Containment,
    PairKind::Disjoint,
    PairKind::Overlap,
    PairKind::Disjoint,
    PairKind::Containment,
];

struct Cell {
    x0: f64,
    y0: f64,
    w: f64,
    h: f64,
}

fn grid_cells() -> Vec<Cell> {
    let w = IMAGE_SIZE / GRID_COLS as f64;
    let h = IMAGE_SIZE / GRID_ROWS as f64;
    let mut cells = Vec::new();
    for row in 0..GRID_ROWS {
        for col in 0..GRID_COLS {
            cells.push(Cell {
                x0: col as f64 * w,
                y0: row as f64 * h,
                w,
                h,
            });
        }
    }
    cells
}

fn uniform(rng: &mut ChaCha8Rng, lo: f64, hi: f64) -> f64 {
    lo + rng.random::<f64>() * (hi - lo)
}

struct SceneBuilder<'a> {
    vocab: &'a Vocabulary,
    objects: Vec<ObjectInstance>,
    triples: Vec<RelationshipTriple>,
    disjoint_triples: usize,
}

impl<'a> SceneBuilder<'a> {
    fn category(&self, name: &str) -> usize {
        self.vocab.object_index(name).expect("known category")
    }

    fn predicate(&self, name: &str) -> usize {
        self.vocab.predicate_index(name).expect("known predicate")
    }

    fn add_object(
        &mut self,
        rng: &mut ChaCha8Rng,
        category: &str,
        bbox: BoundingBox,
        elevated: bool,
    ) -> u32 {
        let id = self.objects.len() as u32;
        let mut attributes = vec![false; self.vocab.attributes.len()];
        attributes[0] = elevated;
        // noise attributes, uncorrelated with any predicate rule
        for slot in attributes.iter_mut().skip(1) {
            *slot = rng.random::<f64>() < 0.3;
        }
        self.objects.push(ObjectInstance {
            id,
            category: self.category(category),
            bbox,
            attributes,
        });
        id
    }

    fn add_triple(&mut self, subject_id: u32, predicate: &str, object_id: u32) {
        self.triples.push(RelationshipTriple {
            subject_id,
            object_id,
            predicate: self.predicate(predicate),
        });
    }

    fn plant_containment(&mut self, rng: &mut ChaCha8Rng, cell: &Cell) {
        let (parent_cat, child_cat) = if rng.random::<f64>() < 0.5 {
            ("road", "car")
        } else {
            ("lake", "boat")
        };
        let pw = uniform(rng, 120.0, 200.0);
        let ph = uniform(rng, 120.0, 200.0);
        let px = cell.x0 + uniform(rng, 5.0, cell.w - pw - 5.0);
        let py = cell.y0 + uniform(rng, 5.0, cell.h - ph - 5.0);
        let cw = pw * uniform(rng, 0.2, 0.4);
        let ch = ph * uniform(rng, 0.2, 0.4);
        let cx = px + uniform(rng, 2.0, pw - cw - 2.0);
        let cy = py + uniform(rng, 2.0, ph - ch - 2.0);
        let parent = BoundingBox::new(px, py, px + pw, py + ph).expect("valid parent box");
        let child = BoundingBox::new(cx, cy, cx + cw, cy + ch).expect("valid child box");
        let parent_id = self.add_object(rng, parent_cat, parent, false);
        let child_id = self.add_object(rng, child_cat, child, false);
        self.add_triple(child_id, "inside", parent_id);
        self.add_triple(parent_id, "covers", child_id);
    }

    fn overlapping_boxes(rng: &mut ChaCha8Rng, cell: &Cell) -> (BoundingBox, BoundingBox) {
        let wa = uniform(rng, 80.0, 140.0);
        let ha = uniform(rng, 80.0, 140.0);
        // offset fraction + size ratio chosen so fx + rb > 1 strictly:
        // the second box always pokes out past the first (no nesting)
        // while still overlapping it
        let fx = uniform(rng, 0.35, 0.7);
        let fy = uniform(rng, 0.35, 0.7);
        let wb = wa * uniform(rng, 0.75, 1.25);
        let hb = ha * uniform(rng, 0.75, 1.25);
        let extent_x = fx * wa + wb;
        let extent_y = fy * ha + hb;
        let ax = cell.x0 + uniform(rng, 5.0, cell.w - extent_x - 5.0);
        let ay = cell.y0 + uniform(rng, 5.0, cell.h - extent_y - 5.0);
        let a = BoundingBox::new(ax, ay, ax + wa, ay + ha).expect("valid box");
        let bx = ax + fx * wa;
        let by = ay + fy * ha;
        let b = BoundingBox::new(bx, by, bx + wb, by + hb).expect("valid box");
        (a, b)
    }

    fn plant_overlap(&mut self, rng: &mut ChaCha8Rng, cell: &Cell) {
        let (a, b) = Self::overlapping_boxes(rng, cell);
        let elevated = rng.random::<f64>() < 0.5;
        let building_id = self.add_object(rng, "building", a, elevated);
        let tree_id = self.add_object(rng, "tree", b, false);
        let predicate = if elevated { "on" } else { "overlaps" };
        self.add_triple(building_id, predicate, tree_id);
    }

    fn plant_disjoint(&mut self, rng: &mut ChaCha8Rng, cell: &Cell) {
        let wa = uniform(rng, 30.0, 60.0);
        let ha = uniform(rng, 30.0, 60.0);
        let wb = uniform(rng, 30.0, 60.0);
        let hb = uniform(rng, 30.0, 60.0);
        // touch factor is exactly this zoom value: the boxes share a
        // vertical center, so they meet when the scaled half-widths
        // span the center gap
        let zoom = uniform(rng, 1.3, 3.0);
        let dx = zoom * (wa + wb) / 2.0;
        let extent = wa / 2.0 + dx + wb / 2.0;
        let left_cx = cell.x0 + wa / 2.0 + uniform(rng, 5.0, cell.w - extent - 10.0);
        let right_cx = left_cx + dx;
        let max_h = ha.max(hb);
        let cy = cell.y0 + uniform(rng, max_h / 2.0 + 5.0, cell.h - max_h / 2.0 - 5.0);
        let left = BoundingBox::new(left_cx - wa / 2.0, cy - ha / 2.0, left_cx + wa / 2.0, cy + ha / 2.0)
            .expect("valid box");
        let right =
            BoundingBox::new(right_cx - wb / 2.0, cy - hb / 2.0, right_cx + wb / 2.0, cy + hb / 2.0)
                .expect("valid box");
        let (person_box, truck_box, predicate) = if rng.random::<f64>() < 0.5 {
            (left, right, "left-of")
        } else {
            (right, left, "right-of")
        };
        let person_id = self.add_object(rng, "person", person_box, false);
        let truck_id = self.add_object(rng, "truck", truck_box, false);
        self.add_triple(person_id, predicate, truck_id);
        self.disjoint_triples += 1;
    }

    fn plant_distractor(&mut self, rng: &mut ChaCha8Rng, cell: &Cell) {
        let (a, b) = Self::overlapping_boxes(rng, cell);
        self.add_object(rng, "rock", a, false);
        self.add_object(rng, "bush", b, false);
    }
}

/// Generates `scene_count` scenes from the given seed. Deterministic:
/// the same seed and count always produce the same corpus and manifest.
pub fn generate_corpus(scene_count: usize, seed: u64) -> (Corpus, Vec<SceneManifest>) {
    let vocab = synth_vocabulary();
    let mut rng = substream(seed, "synth");
    let mut scenes = Vec::with_capacity(scene_count);
    let mut manifests = Vec::with_capacity(scene_count);
    let mut pair_counter = 0usize;

    for scene_idx in 0..scene_count {
        let mut cells = grid_cells();
        cells.shuffle(&mut rng);
        let pair_count = rng.random_range(3..=5usize);
        let with_distractor = scene_idx % 3 == 2;

        let mut builder = SceneBuilder {
            vocab: &vocab,
            objects: Vec::new(),
            triples: Vec::new(),
            disjoint_triples: 0,
        };
        for cell in cells.iter().take(pair_count) {
            match PAIR_CYCLE[pair_counter % PAIR_CYCLE.len()] {
                PairKind::Containment => builder.plant_containment(&mut rng, cell),
                PairKind::Overlap => builder.plant_overlap(&mut rng, cell),
                PairKind::Disjoint => builder.plant_disjoint(&mut rng, cell),
            }
            pair_counter += 1;
        }
        if with_distractor {
            builder.plant_distractor(&mut rng, &cells[pair_count]);
        }

        let image_id = format!("synth-{scene_idx:04}");
        manifests.push(SceneManifest {
            image_id: image_id.clone(),
            connected: !with_distractor,
            triples: builder.triples.len(),
            disjoint_triples: builder.disjoint_triples,
            distractor_pairs: usize::from(with_distractor),
        });
        scenes.push(SceneAnnotation {
            image_id,
            width: IMAGE_SIZE,
            height: IMAGE_SIZE,
            objects: builder.objects,
            triples: builder.triples,
        });
    }

    let corpus = Corpus {
        corpus_id: format!("synth-seed{seed}-n{scene_count}"),
        vocabulary: vocab,
        scenes,
    };
    (corpus, manifests)
}

#[cfg(test)]
mod tests {
    use super::*;
    use lpg_core::geometry::classify_pair;
    use lpg_core::scene::check_connectivity;
    use lpg_core::RelativePosition;

    #[test]
    fn generated_corpus_validates() {
        let (corpus, manifests) = generate_corpus(30, 7);
        corpus.validate().unwrap();
        assert_eq!(corpus.scenes.len(), 30);
        assert_eq!(manifests.len(), 30);
    }

    #[test]
    fn same_seed_same_corpus_different_seed_different() {
        let (a, ma) = generate_corpus(12, 3);
        let (b, mb) = generate_corpus(12, 3);
        assert_eq!(a, b);
        assert_eq!(ma, mb);
        let (c, _) = generate_corpus(12, 4);
        assert_ne!(a, c);
    }

    #[test]
    fn manifest_connectivity_matches_checker() {
        let (corpus, manifests) = generate_corpus(20, 1);
        for (scene, manifest) in corpus.scenes.iter().zip(&manifests) {
            let isolated = check_connectivity(scene);
            assert_eq!(isolated.is_empty(), manifest.connected, "{}", scene.image_id);
            if !manifest.connected {
                // exactly the planted rock/bush pair is isolated
                assert_eq!(isolated.len(), 2, "{}", scene.image_id);
            }
        }
    }

    #[test]
    fn planted_positions_match_their_predicates() {
        let (corpus, _) = generate_corpus(25, 42);
        let vocab = &corpus.vocabulary;
        for scene in &corpus.scenes {
            for t in &scene.triples {
                let s = &scene.objects[scene.object_index(t.subject_id).unwrap()];
                let o = &scene.objects[scene.object_index(t.object_id).unwrap()];
                let pos = classify_pair(&s.bbox, &o.bbox);
                match vocab.predicates[t.predicate].as_str() {
                    "inside" => assert_eq!(pos, RelativePosition::BContainsA),
                    "covers" => assert_eq!(pos, RelativePosition::AContainsB),
                    "on" | "overlaps" => {
                        assert_eq!(pos, RelativePosition::IntersectNoContain);
                        let elevated = s.attributes[0];
                        let expected = if elevated { "on" } else { "overlaps" };
                        assert_eq!(vocab.predicates[t.predicate], expected);
                    }
                    "left-of" => {
                        assert_eq!(pos, RelativePosition::Disjoint);
                        assert!(s.bbox.center().0 < o.bbox.center().0);
                    }
                    "right-of" => {
                        assert_eq!(pos, RelativePosition::Disjoint);
                        assert!(s.bbox.center().0 > o.bbox.center().0);
                    }
                    other => panic!("unexpected predicate {other}"),
                }
            }
        }
    }

    #[test]
    fn disjoint_triples_exceed_thirty_percent() {
        let (_, manifests) = generate_corpus(200, 0);
        let total: usize = manifests.iter().map(|m| m.triples).sum();
        let disjoint: usize = manifests.iter().map(|m| m.disjoint_triples).sum();
        let fraction = disjoint as f64 / total as f64;
        assert!(fraction >= 0.30, "disjoint fraction {fraction}");
        assert!(fraction <= 0.35, "disjoint fraction {fraction}");
    }

    #[test]
    fn disjoint_pairs_touch_within_the_planted_zoom_range() {
        use lpg_core::geometry::max_zoom_in_factor;
        use lpg_core::ScaleSearchConfig;
        let (corpus, _) = generate_corpus(15, 9);
        let cfg = ScaleSearchConfig::zoom_in_default();
        for scene in &corpus.scenes {
            for t in &scene.triples {
                let s = &scene.objects[scene.object_index(t.subject_id).unwrap()];
                let o = &scene.objects[scene.object_index(t.object_id).unwrap()];
                if classify_pair(&s.bbox, &o.bbox) == RelativePosition::Disjoint {
                    let factor = max_zoom_in_factor(&s.bbox, &o.bbox, &cfg)
                        .unwrap()
                        .expect("planted pairs always touch");
                    assert!((1.29..=3.01).contains(&factor), "factor {factor}");
                }
            }
        }
    }
}
