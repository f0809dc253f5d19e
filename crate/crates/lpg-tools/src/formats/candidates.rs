//! Candidate-pair listings produced by the filter stage: one block per
//! scene with the ranked pairs and a per-scene recall against the
//! annotated triples, then a corpus-level summary. Layout:
//!
//! ```text
//! lpg-candidates v1
//! mode <abs|iou>
//! scene <image_id> candidates <n> recall <r>
//! <subject_index> <object_index> <score> <provenance>
//! summary scenes <n> mean_recall <r>
//! ```

use lpg_core::prd::CandidatePair;
use std::fmt::Write as _;

pub struct SceneCandidates {
    pub image_id: String,
    pub candidates: Vec<CandidatePair>,
    pub recall: f64,
}

pub fn render_candidates(mode: &str, scenes: &[SceneCandidates], config_echo: &str) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "lpg-candidates v1");
    s.push_str(config_echo);
    let _ = writeln!(s, "mode {mode}");
    let mut recall_sum = 0.0;
    for scene in scenes {
        let _ = writeln!(
            s,
            "scene {} candidates {} recall {}",
            scene.image_id,
            scene.candidates.len(),
            scene.recall
        );
        for c in &scene.candidates {
            let _ = writeln!(
                s,
                "{} {} {} {}",
                c.subject_index, c.object_index, c.score, c.provenance
            );
        }
        recall_sum += scene.recall;
    }
    let mean = if scenes.is_empty() {
        0.0
    } else {
        recall_sum / scenes.len() as f64
    };
    let _ = writeln!(s, "summary scenes {} mean_recall {}", scenes.len(), mean);
    s
}

#[cfg(test)]
mod tests {
    use super::*;
    use lpg_core::prd::Provenance;

    #[test]
    fn listing_has_rank_order_and_summary() {
        let scenes = vec![
            SceneCandidates {
                image_id: "s0".into(),
                candidates: vec![CandidatePair {
                    subject_index: 0,
                    object_index: 1,
                    score: 0.25,
                    provenance: Provenance::Intersection,
                    zoom_in_factor: None,
                }],
                recall: 1.0,
            },
            SceneCandidates {
                image_id: "s1".into(),
                candidates: vec![],
                recall: 0.5,
            },
        ];
        let out = render_candidates("abs", &scenes, "# seed = 0\n");
        assert!(out.contains("mode abs"));
        assert!(out.contains("scene s0 candidates 1 recall 1"));
        assert!(out.contains("0 1 0.25 intersection"));
        assert!(out.contains("summary scenes 2 mean_recall 0.75"));
    }
}
