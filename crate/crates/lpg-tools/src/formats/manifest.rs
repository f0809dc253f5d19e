//! The generator manifest written alongside a synthetic corpus: one row
//! per scene recording the planted structure, so tests can check the
//! corpus against what the generator intended without re-deriving it.

use std::fmt::Write as _;

#[derive(Debug, Clone, PartialEq)]
pub struct SceneManifest {
    pub image_id: String,
    /// Whether every object takes part in at least one triple.
    pub connected: bool,
    pub triples: usize,
    /// Triples whose subject and object boxes are disjoint.
    pub disjoint_triples: usize,
    /// Planted overlapping object pairs with no annotated relationship.
    pub distractor_pairs: usize,
}

pub fn render_manifest(scenes: &[SceneManifest], config_echo: &str) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "lpg-manifest v1");
    s.push_str(config_echo);
    let _ = writeln!(
        s,
        "scene\tconnected\ttriples\tdisjoint_triples\tdistractor_pairs"
    );
    let mut triples = 0usize;
    let mut disjoint = 0usize;
    for scene in scenes {
        let _ = writeln!(
            s,
            "{}\t{}\t{}\t{}\t{}",
            scene.image_id,
            scene.connected,
            scene.triples,
            scene.disjoint_triples,
            scene.distractor_pairs
        );
        triples += scene.triples;
        disjoint += scene.disjoint_triples;
    }
    let _ = writeln!(s, "total_triples\t{triples}");
    let _ = writeln!(s, "total_disjoint_triples\t{disjoint}");
    s
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn totals_sum_the_rows() {
        let scenes = vec![
            SceneManifest {
                image_id: "s0".into(),
                connected: true,
                triples: 5,
                disjoint_triples: 2,
                distractor_pairs: 0,
            },
            SceneManifest {
                image_id: "s1".into(),
                connected: false,
                triples: 4,
                disjoint_triples: 1,
                distractor_pairs: 1,
            },
        ];
        let out = render_manifest(&scenes, "");
        assert!(out.contains("s1\tfalse\t4\t1\t1"));
        assert!(out.contains("total_triples\t9"));
        assert!(out.contains("total_disjoint_triples\t3"));
    }
}
