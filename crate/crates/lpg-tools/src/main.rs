use clap::{Parser, Subcommand};
use lpg_tools::commands::{
    cmd_build_priors, cmd_eval, cmd_filter, cmd_stats, cmd_synth, cmd_train, cmd_validate,
    FilterMode,
};
use lpg_tools::config::{
    parse_accept_mode, parse_activation, parse_candidate_source, parse_ranking, parse_task,
    parse_variant, ResolvedConfig,
};
use std::path::PathBuf;
use std::process::ExitCode;

/// Scene-graph relationship tooling: prior dictionaries, the adaptive
/// scaling filter, graph-network training, and recall evaluation.
#[derive(Parser)]
#[command(name = "lpg", version, max_term_width = 100)]
struct Cli {
    /// TOML config file layered between built-in defaults and flags
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Root seed for every random stage (split, init, training order,
    /// synthesis)
    #[arg(long, global = true)]
    seed: Option<u64>,

    /// Worker threads for scene-parallel stages
    #[arg(long, global = true)]
    workers: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Parse and validate a corpus, reporting connectivity warnings
    Validate {
        corpus: PathBuf,
    },
    /// Per-image means and category histograms of a corpus
    Stats {
        corpus: PathBuf,
    },
    /// Build the category-pair prior dictionary from a corpus
    BuildPriors {
        corpus: PathBuf,
        /// Output priors file
        #[arg(long)]
        out: PathBuf,
    },
    /// Generate candidate pairs and report recall against annotations
    Filter {
        corpus: PathBuf,
        /// Priors file from build-priors
        #[arg(long)]
        priors: PathBuf,
        /// abs (scaling filter) or iou (overlap baseline)
        #[arg(long, default_value = "abs")]
        mode: String,
        /// Acceptance mode for abs: max-bound or gaussian
        #[arg(long)]
        accept: Option<String>,
        /// Keep only the top K candidates per scene
        #[arg(long)]
        top_k: Option<usize>,
        /// Output candidate listing
        #[arg(long)]
        out: PathBuf,
    },
    /// Train the graph network on the seeded train split of a corpus
    Train {
        corpus: PathBuf,
        #[arg(long)]
        priors: PathBuf,
        /// Output model checkpoint; the loss trace is written next to
        /// it as <out>.loss and any held-out split as <out>.heldout
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        layers: Option<usize>,
        #[arg(long)]
        hidden: Option<usize>,
        /// relu or tanh
        #[arg(long)]
        activation: Option<String>,
        #[arg(long)]
        learning_rate: Option<f64>,
        #[arg(long)]
        epochs: Option<usize>,
        /// full or no-locality
        #[arg(long)]
        variant: Option<String>,
        /// Drop attribute features from the node encoding
        #[arg(long)]
        no_attributes: bool,
        /// abs-prd or ground-truth
        #[arg(long)]
        candidate_source: Option<String>,
        /// Fraction of scenes trained on; the rest is held out (1.0
        /// trains on everything)
        #[arg(long)]
        train_fraction: Option<f64>,
    },
    /// Evaluate a trained model: R@K and mR@K over a corpus
    Eval {
        corpus: PathBuf,
        #[arg(long)]
        priors: PathBuf,
        #[arg(long)]
        model: PathBuf,
        /// Recall cutoffs, ascending
        #[arg(long, value_delimiter = ',')]
        k: Option<Vec<usize>>,
        /// predcls or sgcls
        #[arg(long)]
        task: Option<String>,
        /// iou-score or classifier-confidence
        #[arg(long)]
        ranking: Option<String>,
        /// Let every pair contribute all predicates, not just its top one
        #[arg(long)]
        no_graph_constraint: bool,
        /// Output metric report
        #[arg(long)]
        out: PathBuf,
    },
    /// Generate a synthetic corpus with planted predicate rules
    Synth {
        /// Output corpus file; the generator manifest is written next
        /// to it as <out>.manifest
        #[arg(long)]
        out: PathBuf,
        /// Number of scenes
        #[arg(long)]
        scenes: Option<usize>,
    },
}

fn run() -> Result<(), String> {
    let cli = Cli::parse();
    let mut cfg =
        ResolvedConfig::load(cli.config.as_deref()).map_err(|e| e.to_string())?;
    if let Some(seed) = cli.seed {
        cfg.seed = seed;
    }
    if let Some(workers) = cli.workers {
        cfg.workers = workers;
    }

    match cli.command {
        Command::Validate { corpus } => {
            cfg.finalize();
            cmd_validate(&corpus).map_err(|e| e.to_string())
        }
        Command::Stats { corpus } => {
            cfg.finalize();
            cmd_stats(&corpus).map_err(|e| e.to_string())
        }
        Command::BuildPriors { corpus, out } => {
            cfg.finalize();
            cmd_build_priors(&corpus, &out, &cfg).map_err(|e| e.to_string())
        }
        Command::Filter {
            corpus,
            priors,
            mode,
            accept,
            top_k,
            out,
        } => {
            if let Some(accept) = accept {
                cfg.prd.mode = parse_accept_mode(&accept).map_err(|e| e.to_string())?;
            }
            if let Some(k) = top_k {
                cfg.prd.top_k = Some(k);
            }
            cfg.finalize();
            let mode = match mode.as_str() {
                "abs" => FilterMode::Abs,
                "iou" => FilterMode::Iou,
                other => return Err(format!("invalid filter mode `{other}` (abs or iou)")),
            };
            cmd_filter(&corpus, &priors, mode, &out, &cfg).map_err(|e| e.to_string())
        }
        Command::Train {
            corpus,
            priors,
            out,
            layers,
            hidden,
            activation,
            learning_rate,
            epochs,
            variant,
            no_attributes,
            candidate_source,
            train_fraction,
        } => {
            if let Some(v) = layers {
                cfg.lpg.layers = v;
            }
            if let Some(v) = hidden {
                cfg.lpg.hidden = v;
            }
            if let Some(v) = activation {
                cfg.lpg.activation = parse_activation(&v).map_err(|e| e.to_string())?;
            }
            if let Some(v) = learning_rate {
                cfg.lpg.learning_rate = v;
            }
            if let Some(v) = epochs {
                cfg.lpg.epochs = v;
            }
            if let Some(v) = variant {
                cfg.lpg.variant = parse_variant(&v).map_err(|e| e.to_string())?;
            }
            if no_attributes {
                cfg.lpg.use_attributes = false;
            }
            if let Some(v) = candidate_source {
                cfg.lpg.candidate_source =
                    parse_candidate_source(&v).map_err(|e| e.to_string())?;
            }
            if let Some(v) = train_fraction {
                cfg.train_fraction = v;
            }
            cfg.finalize();
            cmd_train(&corpus, &priors, &out, &cfg).map_err(|e| e.to_string())
        }
        Command::Eval {
            corpus,
            priors,
            model,
            k,
            task,
            ranking,
            no_graph_constraint,
            out,
        } => {
            if let Some(k) = k {
                cfg.eval.k_values = k;
            }
            if let Some(task) = task {
                cfg.eval.task = parse_task(&task).map_err(|e| e.to_string())?;
            }
            if let Some(ranking) = ranking {
                cfg.eval.ranking = parse_ranking(&ranking).map_err(|e| e.to_string())?;
            }
            if no_graph_constraint {
                cfg.eval.graph_constraint = false;
            }
            cfg.finalize();
            cmd_eval(&corpus, &priors, &model, &out, &cfg).map_err(|e| e.to_string())
        }
        Command::Synth { out, scenes } => {
            if let Some(scenes) = scenes {
                cfg.synth_scenes = scenes;
            }
            cfg.finalize();
            cmd_synth(&out, &cfg).map_err(|e| e.to_string())
        }
    }
}

fn main() -> ExitCode {
    match run() {
        Ok(()) => ExitCode::SUCCESS,
        Err(message) => {
            eprintln!("error: {message}");
            ExitCode::FAILURE
        }
    }
}
