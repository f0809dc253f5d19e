//! Layered run configuration: built-in defaults, overridden by an
//! optional TOML file, overridden by command-line flags. The fully
//! resolved result is echoed into every artifact so any output can be
//! traced back to the exact settings that produced it.

use lpg_core::eval::{EvalConfig, EvalTask, RankingMode};
use lpg_core::lpg::{Activation, CandidateSource, LpgConfig, LpgVariant};
use lpg_core::prd::{AcceptMode, PrdConfig};
use lpg_core::{ScaleSearchConfig, ZoomConfig};
use serde::Deserialize;
use std::fmt::Write as _;
use std::path::Path;

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("cannot read config file {path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error("cannot parse config file {path}: {source}")]
    Toml {
        path: String,
        source: toml::de::Error,
    },
    #[error("invalid config value for {key}: {value}")]
    Value { key: &'static str, value: String },
}

/// Every knob of every stage, fully materialized.
#[derive(Debug, Clone, PartialEq)]
pub struct ResolvedConfig {
    pub seed: u64,
    pub workers: usize,
    pub zoom: ZoomConfig,
    pub prd: PrdConfig,
    pub lpg: LpgConfig,
    pub eval: EvalConfig,
    pub train_fraction: f64,
    pub synth_scenes: usize,
}

impl Default for ResolvedConfig {
    fn default() -> Self {
        let zoom = ZoomConfig::default();
        Self {
            seed: 0,
            workers: 1,
            prd: PrdConfig {
                zoom,
                ..Default::default()
            },
            zoom,
            lpg: LpgConfig::default(),
            eval: EvalConfig::default(),
            train_fraction: 0.8,
            synth_scenes: 200,
        }
    }
}

// ---------------------------------------------------------------------------
// TOML file layer

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct FileConfig {
    seed: Option<u64>,
    workers: Option<usize>,
    scale: Option<FileScale>,
    prd: Option<FilePrd>,
    lpg: Option<FileLpg>,
    eval: Option<FileEval>,
    split: Option<FileSplit>,
    synth: Option<FileSynth>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct FileScale {
    zoom_in: Option<FileInterval>,
    zoom_out: Option<FileInterval>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct FileInterval {
    min: f64,
    max: f64,
    iterations: u32,
    threshold: f64,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct FilePrd {
    mode: Option<String>,
    gaussian_k: Option<f64>,
    top_k: Option<usize>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct FileLpg {
    layers: Option<usize>,
    hidden: Option<usize>,
    activation: Option<String>,
    learning_rate: Option<f64>,
    epochs: Option<usize>,
    variant: Option<String>,
    use_attributes: Option<bool>,
    candidate_source: Option<String>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct FileEval {
    k: Option<Vec<usize>>,
    task: Option<String>,
    ranking: Option<String>,
    graph_constraint: Option<bool>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct FileSplit {
    train_fraction: Option<f64>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct FileSynth {
    scenes: Option<usize>,
}

// ---------------------------------------------------------------------------
// Name <-> enum mappings shared by the TOML layer, the flag layer, and echo

pub fn parse_accept_mode(s: &str) -> Result<AcceptMode, ConfigError> {
    match s {
        "max-bound" => Ok(AcceptMode::MaxBound),
        "gaussian" => Ok(AcceptMode::Gaussian),
        other => Err(ConfigError::Value {
            key: "prd.mode",
            value: other.into(),
        }),
    }
}

pub fn accept_mode_name(m: AcceptMode) -> &'static str {
    match m {
        AcceptMode::MaxBound => "max-bound",
        AcceptMode::Gaussian => "gaussian",
    }
}

pub fn parse_activation(s: &str) -> Result<Activation, ConfigError> {
    match s {
        "relu" => Ok(Activation::Relu),
        "tanh" => Ok(Activation::Tanh),
        other => Err(ConfigError::Value {
            key: "lpg.activation",
            value: other.into(),
        }),
    }
}

pub fn activation_name(a: Activation) -> &'static str {
    match a {
        Activation::Relu => "relu",
        Activation::Tanh => "tanh",
    }
}

pub fn parse_variant(s: &str) -> Result<LpgVariant, ConfigError> {
    match s {
        "full" => Ok(LpgVariant::Full),
        "no-locality" => Ok(LpgVariant::NoLocality),
        other => Err(ConfigError::Value {
            key: "lpg.variant",
            value: other.into(),
        }),
    }
}

pub fn variant_name(v: LpgVariant) -> &'static str {
    match v {
        LpgVariant::Full => "full",
        LpgVariant::NoLocality => "no-locality",
    }
}

pub fn parse_candidate_source(s: &str) -> Result<CandidateSource, ConfigError> {
    match s {
        "abs-prd" => Ok(CandidateSource::AbsPrd),
        "ground-truth" => Ok(CandidateSource::GroundTruth),
        other => Err(ConfigError::Value {
            key: "lpg.candidate_source",
            value: other.into(),
        }),
    }
}

pub fn candidate_source_name(c: CandidateSource) -> &'static str {
    match c {
        CandidateSource::AbsPrd => "abs-prd",
        CandidateSource::GroundTruth => "ground-truth",
    }
}

pub fn parse_task(s: &str) -> Result<EvalTask, ConfigError> {
    match s {
        "predcls" => Ok(EvalTask::PredCls),
        "sgcls" => Ok(EvalTask::SgCls),
        other => Err(ConfigError::Value {
            key: "eval.task",
            value: other.into(),
        }),
    }
}

pub fn task_name(t: EvalTask) -> &'static str {
    match t {
        EvalTask::PredCls => "predcls",
        EvalTask::SgCls => "sgcls",
    }
}

pub fn parse_ranking(s: &str) -> Result<RankingMode, ConfigError> {
    match s {
        "iou-score" => Ok(RankingMode::IouScore),
        "classifier-confidence" => Ok(RankingMode::ClassifierConfidence),
        other => Err(ConfigError::Value {
            key: "eval.ranking",
            value: other.into(),
        }),
    }
}

pub fn ranking_name(r: RankingMode) -> &'static str {
    match r {
        RankingMode::IouScore => "iou-score",
        RankingMode::ClassifierConfidence => "classifier-confidence",
    }
}

impl ResolvedConfig {
    /// Defaults layered with an optional TOML file. Flag overrides are
    /// applied afterwards by the CLI layer.
    pub fn load(config_path: Option<&Path>) -> Result<Self, ConfigError> {
        let mut resolved = Self::default();
        let Some(path) = config_path else {
            return Ok(resolved);
        };
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
            path: path.display().to_string(),
            source,
        })?;
        let file: FileConfig = toml::from_str(&text).map_err(|source| ConfigError::Toml {
            path: path.display().to_string(),
            source,
        })?;
        resolved.apply_file(file)?;
        Ok(resolved)
    }

    fn apply_file(&mut self, file: FileConfig) -> Result<(), ConfigError> {
        if let Some(seed) = file.seed {
            self.seed = seed;
        }
        if let Some(workers) = file.workers {
            self.workers = workers;
        }
        if let Some(scale) = file.scale {
            if let Some(iv) = scale.zoom_in {
                self.zoom.zoom_in =
                    ScaleSearchConfig::new(iv.min, iv.max, iv.iterations, iv.threshold).map_err(
                        |e| ConfigError::Value {
                            key: "scale.zoom_in",
                            value: e.to_string(),
                        },
                    )?;
            }
            if let Some(iv) = scale.zoom_out {
                self.zoom.zoom_out =
                    ScaleSearchConfig::new(iv.min, iv.max, iv.iterations, iv.threshold).map_err(
                        |e| ConfigError::Value {
                            key: "scale.zoom_out",
                            value: e.to_string(),
                        },
                    )?;
            }
        }
        if let Some(prd) = file.prd {
            if let Some(mode) = prd.mode {
                self.prd.mode = parse_accept_mode(&mode)?;
            }
            if let Some(k) = prd.gaussian_k {
                self.prd.gaussian_k = k;
            }
            if let Some(k) = prd.top_k {
                self.prd.top_k = Some(k);
            }
        }
        if let Some(lpg) = file.lpg {
            if let Some(v) = lpg.layers {
                self.lpg.layers = v;
            }
            if let Some(v) = lpg.hidden {
                self.lpg.hidden = v;
            }
            if let Some(v) = lpg.activation {
                self.lpg.activation = parse_activation(&v)?;
            }
            if let Some(v) = lpg.learning_rate {
                self.lpg.learning_rate = v;
            }
            if let Some(v) = lpg.epochs {
                self.lpg.epochs = v;
            }
            if let Some(v) = lpg.variant {
                self.lpg.variant = parse_variant(&v)?;
            }
            if let Some(v) = lpg.use_attributes {
                self.lpg.use_attributes = v;
            }
            if let Some(v) = lpg.candidate_source {
                self.lpg.candidate_source = parse_candidate_source(&v)?;
            }
        }
        if let Some(eval) = file.eval {
            if let Some(v) = eval.k {
                self.eval.k_values = v;
            }
            if let Some(v) = eval.task {
                self.eval.task = parse_task(&v)?;
            }
            if let Some(v) = eval.ranking {
                self.eval.ranking = parse_ranking(&v)?;
            }
            if let Some(v) = eval.graph_constraint {
                self.eval.graph_constraint = v;
            }
        }
        if let Some(split) = file.split {
            if let Some(v) = split.train_fraction {
                self.train_fraction = v;
            }
        }
        if let Some(synth) = file.synth {
            if let Some(v) = synth.scenes {
                self.synth_scenes = v;
            }
        }
        Ok(())
    }

    /// Propagates shared settings into the nested configs after all
    /// layers applied: the PRD search intervals and the LPG/eval seed.
    pub fn finalize(&mut self) {
        self.prd.zoom = self.zoom;
        self.lpg.seed = self.seed;
    }

    /// The resolved configuration as `# key = value` comment lines,
    /// embedded verbatim at the top of every artifact.
    pub fn echo(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "# seed = {}", self.seed);
        let _ = writeln!(s, "# workers = {}", self.workers);
        for (name, iv) in [
            ("zoom_in", &self.zoom.zoom_in),
            ("zoom_out", &self.zoom.zoom_out),
        ] {
            let _ = writeln!(
                s,
                "# scale.{} = min {} max {} iterations {} threshold {}",
                name, iv.scale_min, iv.scale_max, iv.iter_num, iv.iter_threshold
            );
        }
        let _ = writeln!(s, "# prd.mode = {}", accept_mode_name(self.prd.mode));
        let _ = writeln!(s, "# prd.gaussian_k = {}", self.prd.gaussian_k);
        let _ = writeln!(
            s,
            "# prd.top_k = {}",
            self.prd
                .top_k
                .map_or("none".to_string(), |k| k.to_string())
        );
        let _ = writeln!(s, "# lpg.layers = {}", self.lpg.layers);
        let _ = writeln!(s, "# lpg.hidden = {}", self.lpg.hidden);
        let _ = writeln!(
            s,
            "# lpg.activation = {}",
            activation_name(self.lpg.activation)
        );
        let _ = writeln!(s, "# lpg.learning_rate = {}", self.lpg.learning_rate);
        let _ = writeln!(s, "# lpg.epochs = {}", self.lpg.epochs);
        let _ = writeln!(s, "# lpg.variant = {}", variant_name(self.lpg.variant));
        let _ = writeln!(s, "# lpg.use_attributes = {}", self.lpg.use_attributes);
        let _ = writeln!(
            s,
            "# lpg.candidate_source = {}",
            candidate_source_name(self.lpg.candidate_source)
        );
        let ks: Vec<String> = self.eval.k_values.iter().map(|k| k.to_string()).collect();
        let _ = writeln!(s, "# eval.k = {}", ks.join(" "));
        let _ = writeln!(s, "# eval.task = {}", task_name(self.eval.task));
        let _ = writeln!(s, "# eval.ranking = {}", ranking_name(self.eval.ranking));
        let _ = writeln!(s, "# eval.graph_constraint = {}", self.eval.graph_constraint);
        let _ = writeln!(s, "# split.train_fraction = {}", self.train_fraction);
        let _ = writeln!(s, "# synth.scenes = {}", self.synth_scenes);
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Write;

    #[test]
    fn defaults_without_file() {
        let cfg = ResolvedConfig::load(None).unwrap();
        assert_eq!(cfg.seed, 0);
        assert_eq!(cfg.lpg.layers, 2);
        assert_eq!(cfg.eval.k_values, vec![50, 150, 250]);
        assert_eq!(cfg.train_fraction, 0.8);
    }

    #[test]
    fn file_overrides_defaults() {
        let mut f = tempfile::NamedTempFile::new().unwrap();
        write!(
            f,
            "seed = 7\n\
             [lpg]\nlayers = 3\nvariant = \"no-locality\"\n\
             [eval]\nk = [10, 20]\n\
             [scale]\nzoom_in = {{ min = 1.0, max = 4.0, iterations = 20, threshold = 0.01 }}\n"
        )
        .unwrap();
        let mut cfg = ResolvedConfig::load(Some(f.path())).unwrap();
        cfg.finalize();
        assert_eq!(cfg.seed, 7);
        assert_eq!(cfg.lpg.seed, 7);
        assert_eq!(cfg.lpg.layers, 3);
        assert_eq!(cfg.lpg.variant, LpgVariant::NoLocality);
        assert_eq!(cfg.eval.k_values, vec![10, 20]);
        assert_eq!(cfg.zoom.zoom_in.scale_max, 4.0);
        assert_eq!(cfg.prd.zoom.zoom_in.scale_max, 4.0);
        // untouched knobs keep their defaults
        assert_eq!(cfg.lpg.hidden, 32);
    }

    #[test]
    fn unknown_keys_rejected() {
        let mut f = tempfile::NamedTempFile::new().unwrap();
        writeln!(f, "not_a_key = 1").unwrap();
        assert!(ResolvedConfig::load(Some(f.path())).is_err());
    }

    #[test]
    fn bad_enum_value_rejected() {
        let mut f = tempfile::NamedTempFile::new().unwrap();
        write!(f, "[prd]\nmode = \"sometimes\"\n").unwrap();
        assert!(ResolvedConfig::load(Some(f.path())).is_err());
    }

    #[test]
    fn echo_materializes_every_default() {
        let cfg = ResolvedConfig::default();
        let echo = cfg.echo();
        for key in [
            "seed", "workers", "scale.zoom_in", "scale.zoom_out", "prd.mode", "prd.gaussian_k",
            "prd.top_k", "lpg.layers", "lpg.hidden", "lpg.activation", "lpg.learning_rate",
            "lpg.epochs", "lpg.variant", "lpg.use_attributes", "lpg.candidate_source", "eval.k",
            "eval.task", "eval.ranking", "eval.graph_constraint", "split.train_fraction",
            "synth.scenes",
        ] {
            assert!(echo.contains(&format!("# {key} = ")), "missing {key}");
        }
    }
}
