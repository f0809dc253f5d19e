//! The corpus document: explicit vocabulary block followed by one block
//! per scene. Attributes are stored as sparse name lists and expanded
//! to multi-hot vectors on load. Layout:
//!
//! ```text
//! lpg-corpus v1
//! corpus <corpus_id>
//! objects <name> ...
//! predicates <name> ...
//! attributes <name> ...
//! scene <image_id> <width> <height>
//! object <id> <category> <x_min> <y_min> <x_max> <y_max> [<attribute> ...]
//! triple <subject_id> <predicate> <object_id>
//! end
//! ```

use super::{content_lines, expect_header, parse_f64, parse_u32, FormatError};
use lpg_core::{
    BoundingBox, Corpus, ObjectInstance, RelationshipTriple, SceneAnnotation, Vocabulary,
};
use std::fmt::Write as _;
use std::path::Path;

pub fn read_corpus(path: &Path) -> Result<Corpus, FormatError> {
    let text = std::fs::read_to_string(path).map_err(|e| FormatError::io(path, e))?;
    parse_corpus(&text, &path.display().to_string())
}

pub fn write_corpus(path: &Path, corpus: &Corpus, config_echo: &str) -> Result<(), FormatError> {
    std::fs::write(path, render_corpus(corpus, config_echo)).map_err(|e| FormatError::io(path, e))
}

pub fn parse_corpus(text: &str, file: &str) -> Result<Corpus, FormatError> {
    let mut lines = content_lines(text).peekable();
    expect_header(file, &mut lines, "lpg-corpus")?;

    let corpus_id = expect_keyword_rest(file, &mut lines, "corpus")?
        .trim()
        .to_string();
    let vocabulary = Vocabulary {
        objects: expect_name_list(file, &mut lines, "objects")?,
        predicates: expect_name_list(file, &mut lines, "predicates")?,
        attributes: expect_name_list(file, &mut lines, "attributes")?,
    };
    vocabulary
        .validate()
        .map_err(|e| FormatError::semantic(file, e.to_string()))?;

    let mut scenes = Vec::new();
    while let Some((n, line)) = lines.next() {
        let mut tokens = line.split_whitespace();
        match tokens.next() {
            Some("scene") => {}
            Some(other) => {
                return Err(FormatError::syntax(
                    file,
                    n,
                    format!("expected `scene`, got `{other}`"),
                ))
            }
            None => unreachable!("blank lines filtered"),
        }
        let image_id = tokens
            .next()
            .ok_or_else(|| FormatError::syntax(file, n, "scene is missing its image id"))?
            .to_string();
        let width = parse_f64(file, n, required(file, n, tokens.next(), "image width")?)?;
        let height = parse_f64(file, n, required(file, n, tokens.next(), "image height")?)?;
        if tokens.next().is_some() {
            return Err(FormatError::syntax(file, n, "trailing tokens after scene"));
        }

        let mut objects = Vec::new();
        let mut triples = Vec::new();
        loop {
            let Some((n, line)) = lines.next() else {
                return Err(FormatError::syntax(
                    file,
                    n,
                    format!("scene {image_id} is not terminated by `end`"),
                ));
            };
            let mut tokens = line.split_whitespace();
            match tokens.next().unwrap() {
                "object" => {
                    let id = parse_u32(file, n, required(file, n, tokens.next(), "object id")?)?;
                    let cat_name = required(file, n, tokens.next(), "object category")?;
                    let category = vocabulary.object_index(cat_name).ok_or_else(|| {
                        FormatError::semantic(
                            file,
                            format!("scene {image_id}: unknown object category `{cat_name}`"),
                        )
                    })?;
                    let mut coords = [0.0; 4];
                    for (i, label) in ["x_min", "y_min", "x_max", "y_max"].iter().enumerate() {
                        coords[i] = parse_f64(file, n, required(file, n, tokens.next(), label)?)?;
                    }
                    let bbox = BoundingBox::new(coords[0], coords[1], coords[2], coords[3])
                        .map_err(|e| {
                            FormatError::semantic(
                                file,
                                format!("scene {image_id}, object {id}: {e}"),
                            )
                        })?;
                    let mut attributes = vec![false; vocabulary.attributes.len()];
                    for attr_name in tokens {
                        let idx = vocabulary.attribute_index(attr_name).ok_or_else(|| {
                            FormatError::semantic(
                                file,
                                format!("scene {image_id}: unknown attribute `{attr_name}`"),
                            )
                        })?;
                        attributes[idx] = true;
                    }
                    objects.push(ObjectInstance {
                        id,
                        category,
                        bbox,
                        attributes,
                    });
                }
                "triple" => {
                    let subject_id =
                        parse_u32(file, n, required(file, n, tokens.next(), "subject id")?)?;
                    let pred_name = required(file, n, tokens.next(), "predicate")?;
                    let predicate = vocabulary.predicate_index(pred_name).ok_or_else(|| {
                        FormatError::semantic(
                            file,
                            format!("scene {image_id}: unknown predicate `{pred_name}`"),
                        )
                    })?;
                    let object_id =
                        parse_u32(file, n, required(file, n, tokens.next(), "object id")?)?;
                    if tokens.next().is_some() {
                        return Err(FormatError::syntax(file, n, "trailing tokens after triple"));
                    }
                    triples.push(RelationshipTriple {
                        subject_id,
                        object_id,
                        predicate,
                    });
                }
                "end" => break,
                other => {
                    return Err(FormatError::syntax(
                        file,
                        n,
                        format!("expected `object`, `triple`, or `end`, got `{other}`"),
                    ))
                }
            }
        }
        scenes.push(SceneAnnotation {
            image_id,
            width,
            height,
            objects,
            triples,
        });
    }

    let corpus = Corpus {
        corpus_id,
        vocabulary,
        scenes,
    };
    corpus
        .validate()
        .map_err(|e| FormatError::semantic(file, e.to_string()))?;
    Ok(corpus)
}

/// Canonical serialization: fixed block order, single spaces, sparse
/// attribute names, shortest round-trip decimals. Two corpora are equal
/// iff their canonical renderings are byte-identical.
pub fn render_corpus(corpus: &Corpus, config_echo: &str) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "lpg-corpus v1");
    s.push_str(config_echo);
    let _ = writeln!(s, "corpus {}", corpus.corpus_id);
    let _ = writeln!(s, "objects {}", corpus.vocabulary.objects.join(" "));
    let _ = writeln!(s, "predicates {}", corpus.vocabulary.predicates.join(" "));
    let _ = writeln!(s, "attributes {}", corpus.vocabulary.attributes.join(" "));
    for scene in &corpus.scenes {
        let _ = writeln!(s, "scene {} {} {}", scene.image_id, scene.width, scene.height);
        for obj in &scene.objects {
            let _ = write!(
                s,
                "object {} {} {} {} {} {}",
                obj.id,
                corpus.vocabulary.objects[obj.category],
                obj.bbox.x_min(),
                obj.bbox.y_min(),
                obj.bbox.x_max(),
                obj.bbox.y_max()
            );
            for (i, set) in obj.attributes.iter().enumerate() {
                if *set {
                    let _ = write!(s, " {}", corpus.vocabulary.attributes[i]);
                }
            }
            s.push('\n');
        }
        for t in &scene.triples {
            let _ = writeln!(
                s,
                "triple {} {} {}",
                t.subject_id, corpus.vocabulary.predicates[t.predicate], t.object_id
            );
        }
        let _ = writeln!(s, "end");
    }
    s
}

fn required<'a>(
    file: &str,
    line: usize,
    token: Option<&'a str>,
    what: &str,
) -> Result<&'a str, FormatError> {
    token.ok_or_else(|| FormatError::syntax(file, line, format!("missing {what}")))
}

fn expect_keyword_rest<'a, I>(
    file: &str,
    lines: &mut I,
    keyword: &str,
) -> Result<String, FormatError>
where
    I: Iterator<Item = (usize, &'a str)>,
{
    match lines.next() {
        Some((n, l)) => {
            if l == keyword {
                Ok(String::new())
            } else if let Some(rest) = l.strip_prefix(&format!("{keyword} ")) {
                Ok(rest.to_string())
            } else {
                Err(FormatError::syntax(
                    file,
                    n,
                    format!("expected `{keyword} ...`, got `{l}`"),
                ))
            }
        }
        None => Err(FormatError::syntax(file, 0, format!("missing `{keyword}`"))),
    }
}

fn expect_name_list<'a, I>(
    file: &str,
    lines: &mut I,
    keyword: &str,
) -> Result<Vec<String>, FormatError>
where
    I: Iterator<Item = (usize, &'a str)>,
{
    let rest = expect_keyword_rest(file, lines, keyword)?;
    Ok(rest.split_whitespace().map(|s| s.to_string()).collect())
}
