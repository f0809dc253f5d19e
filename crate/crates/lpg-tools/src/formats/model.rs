//! The model checkpoint: dimensions and a hash of the vocabulary the
//! model was trained against, followed by every weight matrix row by
//! row in full decimal precision. Layout:
//!
//! ```text
//! lpg-model v1
//! vocab_hash <hex sha256 of the canonical vocabulary block>
//! feature_dim <F>
//! classes <C>
//! activation <relu|tanh>
//! variant <full|no-locality>
//! use_attributes <true|false>
//! layer <index> <rows> <cols>
//! <value> ... (one line per row)
//! classifier <rows> <cols>
//! <value> ...
//! ```

use super::{content_lines, expect_header, parse_f64, parse_usize, FormatError};
use crate::config::{
    activation_name, parse_activation, parse_variant, variant_name,
};
use lpg_core::lpg::{Activation, LpgModel, LpgVariant};
use lpg_core::tensor::Matrix;
use lpg_core::Vocabulary;
use sha2::{Digest, Sha256};
use std::fmt::Write as _;
use std::path::Path;

/// Hash of the vocabulary's canonical form, stored in checkpoints so a
/// model is never silently applied to a different vocabulary.
pub fn vocabulary_hash(vocab: &Vocabulary) -> String {
    let mut canonical = String::new();
    let _ = writeln!(canonical, "objects {}", vocab.objects.join(" "));
    let _ = writeln!(canonical, "predicates {}", vocab.predicates.join(" "));
    let _ = writeln!(canonical, "attributes {}", vocab.attributes.join(" "));
    let digest = Sha256::digest(canonical.as_bytes());
    let mut hex = String::with_capacity(64);
    for byte in digest {
        let _ = write!(hex, "{byte:02x}");
    }
    hex
}

/// Structural properties of a trained model that the weights alone do
/// not determine; evaluation must replay the forward pass with exactly
/// these settings.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelMeta {
    pub vocab_hash: String,
    pub activation: Activation,
    pub variant: LpgVariant,
    pub use_attributes: bool,
}

pub fn read_model(path: &Path) -> Result<(LpgModel, ModelMeta), FormatError> {
    let text = std::fs::read_to_string(path).map_err(|e| FormatError::io(path, e))?;
    parse_model(&text, &path.display().to_string())
}

pub fn write_model(
    path: &Path,
    model: &LpgModel,
    vocab: &Vocabulary,
    meta: &ModelMeta,
    config_echo: &str,
) -> Result<(), FormatError> {
    std::fs::write(path, render_model(model, vocab, meta, config_echo))
        .map_err(|e| FormatError::io(path, e))
}

pub fn render_model(
    model: &LpgModel,
    vocab: &Vocabulary,
    meta: &ModelMeta,
    config_echo: &str,
) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "lpg-model v1");
    s.push_str(config_echo);
    let _ = writeln!(s, "vocab_hash {}", vocabulary_hash(vocab));
    let _ = writeln!(s, "feature_dim {}", model.feature_dim);
    let _ = writeln!(s, "classes {}", model.num_classes);
    let _ = writeln!(s, "activation {}", activation_name(meta.activation));
    let _ = writeln!(s, "variant {}", variant_name(meta.variant));
    let _ = writeln!(s, "use_attributes {}", meta.use_attributes);
    for (i, w) in model.layer_weights.iter().enumerate() {
        let _ = writeln!(s, "layer {} {} {}", i, w.rows(), w.cols());
        render_rows(&mut s, w);
    }
    let _ = writeln!(
        s,
        "classifier {} {}",
        model.classifier.rows(),
        model.classifier.cols()
    );
    render_rows(&mut s, &model.classifier);
    s
}

fn render_rows(s: &mut String, m: &Matrix) {
    for r in 0..m.rows() {
        let mut first = true;
        for v in m.row(r) {
            if !first {
                s.push(' ');
            }
            let _ = write!(s, "{v}");
            first = false;
        }
        s.push('\n');
    }
}

/// Returns the model and its stored structural metadata; the caller
/// checks the vocabulary hash against the corpus it is about to use.
pub fn parse_model(text: &str, file: &str) -> Result<(LpgModel, ModelMeta), FormatError> {
    let mut lines = content_lines(text).peekable();
    expect_header(file, &mut lines, "lpg-model")?;

    let vocab_hash = expect_field(file, &mut lines, "vocab_hash")?;
    let feature_dim = parse_usize(file, 0, &expect_field(file, &mut lines, "feature_dim")?)?;
    let num_classes = parse_usize(file, 0, &expect_field(file, &mut lines, "classes")?)?;
    let activation = parse_activation(&expect_field(file, &mut lines, "activation")?)
        .map_err(|e| FormatError::semantic(file, e.to_string()))?;
    let variant = parse_variant(&expect_field(file, &mut lines, "variant")?)
        .map_err(|e| FormatError::semantic(file, e.to_string()))?;
    let use_attributes = match expect_field(file, &mut lines, "use_attributes")?.as_str() {
        "true" => true,
        "false" => false,
        other => {
            return Err(FormatError::semantic(
                file,
                format!("invalid use_attributes value `{other}`"),
            ))
        }
    };

    let mut layer_weights = Vec::new();
    let mut classifier: Option<Matrix> = None;
    while let Some((n, line)) = lines.next() {
        let tokens: Vec<&str> = line.split_whitespace().collect();
        match tokens.as_slice() {
            ["layer", idx, rows, cols] => {
                let idx = parse_usize(file, n, idx)?;
                if idx != layer_weights.len() {
                    return Err(FormatError::syntax(
                        file,
                        n,
                        format!("layer {idx} out of order"),
                    ));
                }
                if classifier.is_some() {
                    return Err(FormatError::syntax(file, n, "layer after classifier"));
                }
                let rows = parse_usize(file, n, rows)?;
                let cols = parse_usize(file, n, cols)?;
                layer_weights.push(parse_matrix(file, &mut lines, rows, cols)?);
            }
            ["classifier", rows, cols] => {
                if classifier.is_some() {
                    return Err(FormatError::syntax(file, n, "duplicate classifier"));
                }
                let rows = parse_usize(file, n, rows)?;
                let cols = parse_usize(file, n, cols)?;
                classifier = Some(parse_matrix(file, &mut lines, rows, cols)?);
            }
            _ => {
                return Err(FormatError::syntax(
                    file,
                    n,
                    format!("expected `layer` or `classifier`, got `{line}`"),
                ))
            }
        }
    }
    let classifier =
        classifier.ok_or_else(|| FormatError::semantic(file, "missing classifier block"))?;
    if layer_weights.is_empty() {
        return Err(FormatError::semantic(file, "missing layer blocks"));
    }
    Ok((
        LpgModel {
            layer_weights,
            classifier,
            feature_dim,
            num_classes,
        },
        ModelMeta {
            vocab_hash,
            activation,
            variant,
            use_attributes,
        },
    ))
}

fn expect_field<'a, I>(file: &str, lines: &mut I, key: &str) -> Result<String, FormatError>
where
    I: Iterator<Item = (usize, &'a str)>,
{
    match lines.next() {
        Some((n, l)) => {
            let mut tokens = l.split_whitespace();
            if tokens.next() == Some(key) {
                if let Some(v) = tokens.next() {
                    return Ok(v.to_string());
                }
            }
            Err(FormatError::syntax(
                file,
                n,
                format!("expected `{key} <value>`, got `{l}`"),
            ))
        }
        None => Err(FormatError::syntax(file, 0, format!("missing `{key}`"))),
    }
}

fn parse_matrix<'a, I>(
    file: &str,
    lines: &mut I,
    rows: usize,
    cols: usize,
) -> Result<Matrix, FormatError>
where
    I: Iterator<Item = (usize, &'a str)>,
{
    let mut data = Vec::with_capacity(rows * cols);
    for _ in 0..rows {
        let Some((n, line)) = lines.next() else {
            return Err(FormatError::syntax(file, 0, "truncated matrix block"));
        };
        let values: Vec<&str> = line.split_whitespace().collect();
        if values.len() != cols {
            return Err(FormatError::syntax(
                file,
                n,
                format!("expected {cols} values, got {}", values.len()),
            ));
        }
        for v in values {
            data.push(parse_f64(file, n, v)?);
        }
    }
    Matrix::from_vec(rows, cols, data).map_err(|e| FormatError::semantic(file, e.to_string()))
}
