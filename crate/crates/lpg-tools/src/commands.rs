//! Subcommand implementations. Each takes the fully resolved config,
//! reads its inputs, writes its artifacts with the config echoed into
//! them, and prints a short human summary to stdout.

use crate::config::ResolvedConfig;
use crate::formats::candidates::{render_candidates, SceneCandidates};
use crate::formats::corpus::{read_corpus, write_corpus};
use crate::formats::manifest::render_manifest;
use crate::formats::model::{read_model, vocabulary_hash, write_model, ModelMeta};
use crate::formats::priors::{read_priors, write_priors};
use crate::formats::report::{format_report_table, render_loss_trace, render_report};
use crate::formats::FormatError;
use crate::parallel::parallel_map;
use crate::synth::generate_corpus;
use lpg_core::eval::evaluate;
use lpg_core::lpg::train;
use lpg_core::prd::{abs_prd, iou_prd, prd_recall, CandidatePair, PrdError};
use lpg_core::priors::build_priors;
use lpg_core::scene::{check_connectivity, corpus_stats, duplicate_groundings, split_corpus};
use lpg_core::{BoundingBox, Corpus, PriorDictionary, SceneAnnotation};
use std::path::{Path, PathBuf};

#[derive(Debug, thiserror::Error)]
pub enum CommandError {
    #[error(transparent)]
    Format(#[from] FormatError),
    #[error("{0}")]
    Semantic(String),
}

fn semantic(msg: impl Into<String>) -> CommandError {
    CommandError::Semantic(msg.into())
}

/// Parses, validates, and reports connectivity and duplicate-grounding
/// warnings. Warnings do not fail the command; parse or invariant
/// violations do (via the parse error).
pub fn cmd_validate(corpus_path: &Path) -> Result<(), CommandError> {
    let corpus = read_corpus(corpus_path)?;
    let mut isolated_total = 0usize;
    let mut duplicate_total = 0usize;
    for scene in &corpus.scenes {
        let isolated = check_connectivity(scene);
        if !isolated.is_empty() {
            isolated_total += isolated.len();
            let ids: Vec<String> = isolated.iter().map(|id| id.to_string()).collect();
            println!(
                "warning: scene {} has isolated objects: {}",
                scene.image_id,
                ids.join(" ")
            );
        }
        for (a, b) in duplicate_groundings(scene) {
            duplicate_total += 1;
            println!(
                "warning: scene {} has duplicate groundings: objects {a} and {b}",
                scene.image_id
            );
        }
    }
    println!(
        "ok: {} scenes, {} isolated objects, {} duplicate groundings",
        corpus.scenes.len(),
        isolated_total,
        duplicate_total
    );
    Ok(())
}

pub fn cmd_stats(corpus_path: &Path) -> Result<(), CommandError> {
    let corpus = read_corpus(corpus_path)?;
    let stats = corpus_stats(&corpus);
    println!("scenes: {}", stats.scene_count);
    println!("mean objects per image: {}", stats.mean_objects_per_image);
    println!("mean relations per image: {}", stats.mean_relations_per_image);
    println!(
        "mean attributes per image: {}",
        stats.mean_attributes_per_image
    );
    println!("object histogram:");
    for (idx, count) in &stats.object_histogram {
        println!("  {} {}", corpus.vocabulary.objects[*idx], count);
    }
    println!("predicate histogram:");
    for (idx, count) in &stats.predicate_histogram {
        println!("  {} {}", corpus.vocabulary.predicates[*idx], count);
    }
    println!("attribute histogram:");
    for (idx, count) in &stats.attribute_histogram {
        println!("  {} {}", corpus.vocabulary.attributes[*idx], count);
    }
    Ok(())
}

/// Builds the prior dictionary. With several workers the corpus is cut
/// into contiguous shards built independently and merged in shard
/// order, which reproduces the sequential result exactly.
pub fn cmd_build_priors(
    corpus_path: &Path,
    out: &Path,
    cfg: &ResolvedConfig,
) -> Result<(), CommandError> {
    let corpus = read_corpus(corpus_path)?;
    let priors = build_priors_parallel(&corpus, cfg)?;
    write_priors(out, &priors, &cfg.echo())?;
    println!(
        "priors: {} category-pair entries, {} observations -> {}",
        priors.len(),
        priors.total_observations(),
        out.display()
    );
    Ok(())
}

pub fn build_priors_parallel(
    corpus: &Corpus,
    cfg: &ResolvedConfig,
) -> Result<PriorDictionary, CommandError> {
    if cfg.workers <= 1 || corpus.scenes.len() <= 1 {
        return build_priors(corpus, &cfg.zoom).map_err(|e| semantic(e.to_string()));
    }
    let chunk_size = corpus.scenes.len().div_ceil(cfg.workers);
    let shards: Vec<&[SceneAnnotation]> = corpus.scenes.chunks(chunk_size).collect();
    let partials = parallel_map(&shards, cfg.workers, |scenes| {
        let shard = Corpus {
            corpus_id: corpus.corpus_id.clone(),
            vocabulary: corpus.vocabulary.clone(),
            scenes: scenes.to_vec(),
        };
        build_priors(&shard, &cfg.zoom)
    });
    let mut merged: Option<PriorDictionary> = None;
    for partial in partials {
        let partial = partial.map_err(|e| semantic(e.to_string()))?;
        merged = Some(match merged {
            None => partial,
            Some(acc) => acc.merge(&partial).map_err(|e| semantic(e.to_string()))?,
        });
    }
    let mut priors = merged.expect("at least one shard");
    priors.fit_gaussians();
    Ok(priors)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FilterMode {
    Abs,
    Iou,
}

/// Runs the chosen filter over every scene (scene-parallel), writes the
/// candidate listing, and prints the recall summary.
pub fn cmd_filter(
    corpus_path: &Path,
    priors_path: &Path,
    mode: FilterMode,
    out: &Path,
    cfg: &ResolvedConfig,
) -> Result<(), CommandError> {
    let corpus = read_corpus(corpus_path)?;
    let priors = read_priors(priors_path)?;
    if priors.categories() != corpus.vocabulary.objects {
        return Err(semantic(
            "priors were built for a different object vocabulary",
        ));
    }
    let scenes = filter_corpus(&corpus, &priors, mode, cfg).map_err(|e| semantic(e.to_string()))?;
    let mode_name = match mode {
        FilterMode::Abs => "abs",
        FilterMode::Iou => "iou",
    };
    let text = render_candidates(mode_name, &scenes, &cfg.echo());
    std::fs::write(out, text).map_err(|e| FormatError::io(out, e))?;
    let mean = if scenes.is_empty() {
        0.0
    } else {
        scenes.iter().map(|s| s.recall).sum::<f64>() / scenes.len() as f64
    };
    println!(
        "{mode_name} filter: {} scenes, mean recall {mean} -> {}",
        scenes.len(),
        out.display()
    );
    Ok(())
}

pub fn filter_corpus(
    corpus: &Corpus,
    priors: &PriorDictionary,
    mode: FilterMode,
    cfg: &ResolvedConfig,
) -> Result<Vec<SceneCandidates>, PrdError> {
    let results = parallel_map(&corpus.scenes, cfg.workers, |scene| {
        filter_scene(scene, priors, mode, cfg)
    });
    results.into_iter().collect()
}

fn filter_scene(
    scene: &SceneAnnotation,
    priors: &PriorDictionary,
    mode: FilterMode,
    cfg: &ResolvedConfig,
) -> Result<SceneCandidates, PrdError> {
    let objects: Vec<(usize, BoundingBox)> =
        scene.objects.iter().map(|o| (o.category, o.bbox)).collect();
    let candidates: Vec<CandidatePair> = if objects.len() < 2 {
        Vec::new()
    } else {
        match mode {
            FilterMode::Abs => abs_prd(&objects, priors, &cfg.prd)?,
            FilterMode::Iou => iou_prd(&objects, &cfg.prd)?,
        }
    };
    let gt_pairs: Vec<(usize, usize)> = scene
        .indexed_triples()
        .iter()
        .map(|&(s, o, _)| (s, o))
        .collect();
    let recall = prd_recall(&candidates, &gt_pairs);
    Ok(SceneCandidates {
        image_id: scene.image_id.clone(),
        candidates,
        recall,
    })
}

/// Trains on the seeded train split of the corpus and writes the model
/// checkpoint, the loss trace (`<out>.loss`), and — when a held-out
/// fraction remains — the held-out corpus (`<out>.heldout`).
pub fn cmd_train(
    corpus_path: &Path,
    priors_path: &Path,
    out: &Path,
    cfg: &ResolvedConfig,
) -> Result<(), CommandError> {
    let corpus = read_corpus(corpus_path)?;
    let priors = read_priors(priors_path)?;
    if priors.categories() != corpus.vocabulary.objects {
        return Err(semantic(
            "priors were built for a different object vocabulary",
        ));
    }
    let (train_part, heldout) = if cfg.train_fraction >= 1.0 {
        (corpus.clone(), None)
    } else {
        let (a, b) = split_corpus(&corpus, cfg.train_fraction, cfg.seed)
            .map_err(|e| semantic(e.to_string()))?;
        (a, Some(b))
    };
    let (model, losses) =
        train(&train_part, &priors, &cfg.lpg, &cfg.prd).map_err(|e| semantic(e.to_string()))?;
    let meta = ModelMeta {
        vocab_hash: vocabulary_hash(&corpus.vocabulary),
        activation: cfg.lpg.activation,
        variant: cfg.lpg.variant,
        use_attributes: cfg.lpg.use_attributes,
    };
    write_model(out, &model, &corpus.vocabulary, &meta, &cfg.echo())?;
    let trace_path = sibling(out, "loss");
    std::fs::write(&trace_path, render_loss_trace(&losses, &cfg.echo()))
        .map_err(|e| FormatError::io(&trace_path, e))?;
    if let Some(heldout) = &heldout {
        let heldout_path = sibling(out, "heldout");
        write_corpus(&heldout_path, heldout, &cfg.echo())?;
        println!(
            "held-out split: {} scenes -> {}",
            heldout.scenes.len(),
            heldout_path.display()
        );
    }
    let final_loss = losses.last().copied().unwrap_or(f64::NAN);
    println!(
        "trained on {} scenes for {} epochs, final mean loss {final_loss} -> {}",
        train_part.scenes.len(),
        losses.len(),
        out.display()
    );
    Ok(())
}

pub fn cmd_eval(
    corpus_path: &Path,
    priors_path: &Path,
    model_path: &Path,
    out: &Path,
    cfg: &ResolvedConfig,
) -> Result<(), CommandError> {
    let corpus = read_corpus(corpus_path)?;
    let priors = read_priors(priors_path)?;
    let (model, meta) = read_model(model_path)?;
    let hash = vocabulary_hash(&corpus.vocabulary);
    if meta.vocab_hash != hash {
        return Err(semantic(format!(
            "model was trained against a different vocabulary (checkpoint {}, corpus {hash})",
            meta.vocab_hash
        )));
    }
    // The checkpoint records the structural settings the model was
    // trained with; the forward pass must replay them exactly.
    let mut lpg_cfg = cfg.lpg;
    lpg_cfg.activation = meta.activation;
    lpg_cfg.variant = meta.variant;
    lpg_cfg.use_attributes = meta.use_attributes;
    let report = evaluate(&model, &corpus, &priors, &lpg_cfg, &cfg.prd, &cfg.eval)
        .map_err(|e| semantic(e.to_string()))?;
    std::fs::write(out, render_report(&report, &cfg.echo()))
        .map_err(|e| FormatError::io(out, e))?;
    print!("{}", format_report_table(&report));
    println!("report -> {}", out.display());
    Ok(())
}

/// Generates the synthetic corpus and its manifest (`<out>.manifest`).
pub fn cmd_synth(out: &Path, cfg: &ResolvedConfig) -> Result<(), CommandError> {
    let (corpus, manifests) = generate_corpus(cfg.synth_scenes, cfg.seed);
    write_corpus(out, &corpus, &cfg.echo())?;
    let manifest_path = sibling(out, "manifest");
    std::fs::write(&manifest_path, render_manifest(&manifests, &cfg.echo()))
        .map_err(|e| FormatError::io(&manifest_path, e))?;
    println!(
        "synthesized {} scenes -> {} (manifest {})",
        corpus.scenes.len(),
        out.display(),
        manifest_path.display()
    );
    Ok(())
}

fn sibling(path: &Path, suffix: &str) -> PathBuf {
    let mut name = path.file_name().unwrap_or_default().to_os_string();
    name.push(format!(".{suffix}"));
    path.with_file_name(name)
}
