//! Run configuration: one JSON file, overridable flag by flag.

use std::fs;
use std::path::{Path, PathBuf};

use clap::Args;
use serde::{Deserialize, Serialize};
use socatt_core::line::LineConfig;
use socatt_core::model::{Mode, ModelShape};
use socatt_core::optim::AdamConfig;
use socatt_core::synth::SynthConfig;
use socatt_core::training::{FitConfig, PretrainConfig, TrainConfig};

use crate::CliError;

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Paths {
    pub graph: Option<PathBuf>,
    pub corpus: Option<PathBuf>,
    pub train: Option<PathBuf>,
    pub dev: Option<PathBuf>,
    pub test: Option<PathBuf>,
    pub words: Option<PathBuf>,
    pub authors: Option<PathBuf>,
    pub checkpoint: Option<PathBuf>,
    pub compare: Option<PathBuf>,
    pub predictions: Option<PathBuf>,
    pub compare_predictions: Option<PathBuf>,
    pub write_predictions: Option<PathBuf>,
    pub positive_lexicon: Option<PathBuf>,
    pub negative_lexicon: Option<PathBuf>,
    pub output: Option<PathBuf>,
    pub history: Option<PathBuf>,
    pub out_dir: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ModelSection {
    /// One of social, random, moe, concat, single.
    pub mode: String,
    pub experts: usize,
    pub filters: usize,
}

impl Default for ModelSection {
    fn default() -> Self {
        ModelSection {
            mode: "social".into(),
            experts: 5,
            filters: 100,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PretrainSection {
    pub sigma: f64,
    pub epochs: usize,
}

impl Default for PretrainSection {
    fn default() -> Self {
        PretrainSection { sigma: 1.0, epochs: 1 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainSection {
    pub max_epochs: usize,
    pub learning_rate: f64,
    pub adam_beta1: f64,
    pub adam_beta2: f64,
    pub adam_epsilon: f64,
    pub batch_size: usize,
}

impl Default for TrainSection {
    fn default() -> Self {
        let t = TrainConfig::default();
        TrainSection {
            max_epochs: t.max_epochs,
            learning_rate: t.adam.learning_rate,
            adam_beta1: t.adam.beta1,
            adam_beta2: t.adam.beta2,
            adam_epsilon: t.adam.epsilon,
            batch_size: t.batch_size,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct HomophilySection {
    pub epochs: usize,
    pub trials: usize,
}

impl Default for HomophilySection {
    fn default() -> Self {
        HomophilySection { epochs: 5, trials: 10 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EvalSection {
    pub bootstrap_samples: usize,
    pub top_n: usize,
}

impl Default for EvalSection {
    fn default() -> Self {
        EvalSection {
            bootstrap_samples: 100,
            top_n: 5,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub seed: u64,
    pub paths: Paths,
    pub model: ModelSection,
    pub pretrain: PretrainSection,
    pub train: TrainSection,
    pub line: LineConfig,
    pub homophily: HomophilySection,
    pub eval: EvalSection,
    /// Its own `seed` field is replaced by the global seed.
    pub synth: SynthConfig,
}

/// Flags shared by every subcommand. Each one overrides the matching entry
/// of the `--config` file.
#[derive(Debug, Clone, Default, Args)]
pub struct Flags {
    /// JSON run configuration; flags given on the command line win.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub seed: Option<u64>,

    #[arg(long, help_heading = "Files")]
    pub graph: Option<PathBuf>,
    /// Labeled corpus used by the homophily pilot.
    #[arg(long, help_heading = "Files")]
    pub corpus: Option<PathBuf>,
    #[arg(long, help_heading = "Files")]
    pub train: Option<PathBuf>,
    #[arg(long, help_heading = "Files")]
    pub dev: Option<PathBuf>,
    #[arg(long, help_heading = "Files")]
    pub test: Option<PathBuf>,
    /// Word embeddings ("V D" header, then one vector per line).
    #[arg(long, help_heading = "Files")]
    pub words: Option<PathBuf>,
    /// Author (network) embeddings.
    #[arg(long, help_heading = "Files")]
    pub authors: Option<PathBuf>,
    /// Checkpoint to write (train) or read (eval, analyze-words).
    #[arg(long, help_heading = "Files")]
    pub checkpoint: Option<PathBuf>,
    /// Second checkpoint for a bootstrap comparison.
    #[arg(long, help_heading = "Files")]
    pub compare: Option<PathBuf>,
    /// Predictions file ("id<TAB>label" per line) to score instead of a checkpoint.
    #[arg(long, help_heading = "Files")]
    pub predictions: Option<PathBuf>,
    #[arg(long, help_heading = "Files")]
    pub compare_predictions: Option<PathBuf>,
    /// Where eval writes the primary system's predictions.
    #[arg(long, help_heading = "Files")]
    pub write_predictions: Option<PathBuf>,
    #[arg(long, help_heading = "Files")]
    pub positive_lexicon: Option<PathBuf>,
    #[arg(long, help_heading = "Files")]
    pub negative_lexicon: Option<PathBuf>,
    /// Primary output file of the subcommand.
    #[arg(long, help_heading = "Files")]
    pub output: Option<PathBuf>,
    /// Training history TSV (defaults to `<checkpoint>.history.tsv`).
    #[arg(long, help_heading = "Files")]
    pub history: Option<PathBuf>,
    #[arg(long, help_heading = "Files")]
    pub out_dir: Option<PathBuf>,

    /// social, random, moe, concat or single.
    #[arg(long, help_heading = "Model")]
    pub mode: Option<String>,
    /// Number of basis models K.
    #[arg(long, help_heading = "Model")]
    pub experts: Option<usize>,
    /// Number of bigram filters m.
    #[arg(long, help_heading = "Model")]
    pub filters: Option<usize>,

    #[arg(long, help_heading = "Training")]
    pub sigma: Option<f64>,
    #[arg(long, help_heading = "Training")]
    pub pretrain_epochs: Option<usize>,
    #[arg(long, help_heading = "Training")]
    pub max_epochs: Option<usize>,
    #[arg(long, help_heading = "Training")]
    pub learning_rate: Option<f64>,
    #[arg(long, help_heading = "Training")]
    pub adam_beta1: Option<f64>,
    #[arg(long, help_heading = "Training")]
    pub adam_beta2: Option<f64>,
    #[arg(long, help_heading = "Training")]
    pub adam_epsilon: Option<f64>,
    #[arg(long, help_heading = "Training")]
    pub batch_size: Option<usize>,

    #[arg(long, help_heading = "Network embedding")]
    pub line_dimension: Option<usize>,
    #[arg(long, help_heading = "Network embedding")]
    pub line_negatives: Option<usize>,
    #[arg(long, help_heading = "Network embedding")]
    pub line_learning_rate: Option<f64>,
    #[arg(long, help_heading = "Network embedding")]
    pub line_final_learning_rate: Option<f64>,
    #[arg(long, help_heading = "Network embedding")]
    pub line_epochs: Option<usize>,
    #[arg(long, help_heading = "Network embedding")]
    pub line_noise_exponent: Option<f64>,

    #[arg(long, help_heading = "Analysis")]
    pub rewiring_epochs: Option<usize>,
    #[arg(long, help_heading = "Analysis")]
    pub rewiring_trials: Option<usize>,
    #[arg(long, help_heading = "Analysis")]
    pub bootstrap_samples: Option<usize>,
    #[arg(long, help_heading = "Analysis")]
    pub top_n: Option<usize>,

    #[arg(long, help_heading = "Synthetic data")]
    pub nodes_per_community: Option<usize>,
    #[arg(long, help_heading = "Synthetic data")]
    pub intra_prob: Option<f64>,
    #[arg(long, help_heading = "Synthetic data")]
    pub inter_prob: Option<f64>,
    /// Comma-separated list.
    #[arg(long, value_delimiter = ',', help_heading = "Synthetic data")]
    pub flip_words: Option<Vec<String>>,
    #[arg(long, help_heading = "Synthetic data")]
    pub docs_per_author: Option<usize>,
    #[arg(long, help_heading = "Synthetic data")]
    pub vocab_size: Option<usize>,
    #[arg(long, help_heading = "Synthetic data")]
    pub lexicon_size: Option<usize>,
    #[arg(long, help_heading = "Synthetic data")]
    pub flip_rate: Option<f64>,
    #[arg(long, help_heading = "Synthetic data")]
    pub neutral_rate: Option<f64>,
    #[arg(long, help_heading = "Synthetic data")]
    pub word_dim: Option<usize>,
}

fn set<T: Clone>(slot: &mut T, value: &Option<T>) {
    if let Some(v) = value {
        *slot = v.clone();
    }
}

fn set_path(slot: &mut Option<PathBuf>, value: &Option<PathBuf>) {
    if value.is_some() {
        slot.clone_from(value);
    }
}

impl Flags {
    /// Read the config file (if any) and apply the flags on top.
    pub fn resolve(&self) -> Result<RunConfig, CliError> {
        let mut cfg = match &self.config {
            Some(path) => {
                let text = fs::read_to_string(path)
                    .map_err(|e| CliError::Usage(format!("cannot read config {}: {e}", path.display())))?;
                serde_json::from_str(&text)
                    .map_err(|e| CliError::Usage(format!("invalid config {}: {e}", path.display())))?
            }
            None => RunConfig::default(),
        };
        self.apply(&mut cfg);
        cfg.synth.seed = cfg.seed;
        Ok(cfg)
    }

    fn apply(&self, c: &mut RunConfig) {
        set(&mut c.seed, &self.seed);

        let p = &mut c.paths;
        set_path(&mut p.graph, &self.graph);
        set_path(&mut p.corpus, &self.corpus);
        set_path(&mut p.train, &self.train);
        set_path(&mut p.dev, &self.dev);
        set_path(&mut p.test, &self.test);
        set_path(&mut p.words, &self.words);
        set_path(&mut p.authors, &self.authors);
        set_path(&mut p.checkpoint, &self.checkpoint);
        set_path(&mut p.compare, &self.compare);
        set_path(&mut p.predictions, &self.predictions);
        set_path(&mut p.compare_predictions, &self.compare_predictions);
        set_path(&mut p.write_predictions, &self.write_predictions);
        set_path(&mut p.positive_lexicon, &self.positive_lexicon);
        set_path(&mut p.negative_lexicon, &self.negative_lexicon);
        set_path(&mut p.output, &self.output);
        set_path(&mut p.history, &self.history);
        set_path(&mut p.out_dir, &self.out_dir);

        set(&mut c.model.mode, &self.mode);
        set(&mut c.model.experts, &self.experts);
        set(&mut c.model.filters, &self.filters);
        set(&mut c.pretrain.sigma, &self.sigma);
        set(&mut c.pretrain.epochs, &self.pretrain_epochs);
        set(&mut c.train.max_epochs, &self.max_epochs);
        set(&mut c.train.learning_rate, &self.learning_rate);
        set(&mut c.train.adam_beta1, &self.adam_beta1);
        set(&mut c.train.adam_beta2, &self.adam_beta2);
        set(&mut c.train.adam_epsilon, &self.adam_epsilon);
        set(&mut c.train.batch_size, &self.batch_size);

        set(&mut c.line.dimension, &self.line_dimension);
        set(&mut c.line.negatives, &self.line_negatives);
        set(&mut c.line.learning_rate, &self.line_learning_rate);
        set(&mut c.line.final_learning_rate, &self.line_final_learning_rate);
        set(&mut c.line.epochs, &self.line_epochs);
        set(&mut c.line.noise_exponent, &self.line_noise_exponent);

        set(&mut c.homophily.epochs, &self.rewiring_epochs);
        set(&mut c.homophily.trials, &self.rewiring_trials);
        set(&mut c.eval.bootstrap_samples, &self.bootstrap_samples);
        set(&mut c.eval.top_n, &self.top_n);

        let s = &mut c.synth;
        set(&mut s.nodes_per_community, &self.nodes_per_community);
        set(&mut s.intra_prob, &self.intra_prob);
        set(&mut s.inter_prob, &self.inter_prob);
        set(&mut s.flip_words, &self.flip_words);
        set(&mut s.docs_per_author, &self.docs_per_author);
        set(&mut s.vocab_size, &self.vocab_size);
        set(&mut s.lexicon_size, &self.lexicon_size);
        set(&mut s.flip_rate, &self.flip_rate);
        set(&mut s.neutral_rate, &self.neutral_rate);
        set(&mut s.word_dim, &self.word_dim);
    }
}

/// Whether a subcommand reads a path, writes it, or may do either.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Need {
    Input,
    Output,
}

fn require(errs: &mut Vec<String>, name: &str, path: &Option<PathBuf>, need: Need) {
    match path {
        None => errs.push(format!("paths.{name}: required (--{})", name.replace('_', "-"))),
        Some(p) => check(errs, name, p, need),
    }
}

fn check(errs: &mut Vec<String>, name: &str, p: &Path, need: Need) {
    if need == Need::Input && !p.is_file() {
        errs.push(format!("paths.{name}: cannot read {}", p.display()));
    }
}

fn optional(errs: &mut Vec<String>, name: &str, path: &Option<PathBuf>) {
    if let Some(p) = path {
        check(errs, name, p, Need::Input);
    }
}

impl RunConfig {
    pub fn mode(&self) -> Result<Mode, String> {
        self.model.mode.parse::<Mode>().map_err(|e| e.to_string())
    }

    pub fn fit_config(&self) -> Result<FitConfig, String> {
        Ok(FitConfig {
            shape: ModelShape {
                mode: self.mode()?,
                experts: self.model.experts,
                filters: self.model.filters,
            },
            pretrain: PretrainConfig {
                sigma: self.pretrain.sigma,
                epochs: self.pretrain.epochs,
                seed: self.seed,
            },
            train: self.train_config(),
        })
    }

    pub fn train_config(&self) -> TrainConfig {
        TrainConfig {
            max_epochs: self.train.max_epochs,
            adam: AdamConfig {
                learning_rate: self.train.learning_rate,
                beta1: self.train.adam_beta1,
                beta2: self.train.adam_beta2,
                epsilon: self.train.adam_epsilon,
            },
            batch_size: self.train.batch_size,
            seed: self.seed,
        }
    }

    fn training_errors(&self) -> Vec<String> {
        let mut errs = Vec::new();
        if let Err(e) = self.mode() {
            errs.push(format!("model.mode: {e}"));
        }
        if self.model.experts == 0 {
            errs.push("model.experts: must be positive".into());
        }
        if self.model.filters == 0 {
            errs.push("model.filters: must be positive".into());
        }
        if !(self.pretrain.sigma > 0.0 && self.pretrain.sigma.is_finite()) {
            errs.push(format!("pretrain.sigma: must be positive, got {}", self.pretrain.sigma));
        }
        errs.extend(self.train_config().validate().into_iter().map(|e| format!("train: {e}")));
        errs
    }

    /// Every violated field for `command`, including missing or unreadable
    /// input files.
    pub fn validate(&self, command: &str) -> Vec<String> {
        let mut errs = Vec::new();
        let p = &self.paths;
        match command {
            "embed-network" => {
                errs.extend(self.line.validate());
                require(&mut errs, "graph", &p.graph, Need::Input);
                require(&mut errs, "output", &p.output, Need::Output);
            }
            "train" => {
                errs.extend(self.training_errors());
                require(&mut errs, "train", &p.train, Need::Input);
                require(&mut errs, "dev", &p.dev, Need::Input);
                require(&mut errs, "words", &p.words, Need::Input);
                require(&mut errs, "checkpoint", &p.checkpoint, Need::Output);
                if self.mode().is_ok_and(|m| m.uses_authors()) {
                    require(&mut errs, "authors", &p.authors, Need::Input);
                } else {
                    optional(&mut errs, "authors", &p.authors);
                }
            }
            "eval" => {
                require(&mut errs, "test", &p.test, Need::Input);
                match (&p.checkpoint, &p.predictions) {
                    (Some(_), Some(_)) => errs.push("paths: give either --checkpoint or --predictions, not both".into()),
                    (None, None) => errs.push("paths.checkpoint: required (--checkpoint or --predictions)".into()),
                    _ => {}
                }
                if p.compare.is_some() && p.compare_predictions.is_some() {
                    errs.push("paths: give either --compare or --compare-predictions, not both".into());
                }
                optional(&mut errs, "checkpoint", &p.checkpoint);
                optional(&mut errs, "predictions", &p.predictions);
                optional(&mut errs, "compare", &p.compare);
                optional(&mut errs, "compare_predictions", &p.compare_predictions);
                if self.eval.bootstrap_samples < 2 {
                    errs.push("eval.bootstrap_samples: must be at least 2".into());
                }
            }
            "homophily" => {
                require(&mut errs, "graph", &p.graph, Need::Input);
                require(&mut errs, "corpus", &p.corpus, Need::Input);
                require(&mut errs, "positive_lexicon", &p.positive_lexicon, Need::Input);
                require(&mut errs, "negative_lexicon", &p.negative_lexicon, Need::Input);
                require(&mut errs, "output", &p.output, Need::Output);
                if self.homophily.trials == 0 {
                    errs.push("homophily.trials: must be positive".into());
                }
            }
            "analyze-words" => {
                require(&mut errs, "checkpoint", &p.checkpoint, Need::Input);
                require(&mut errs, "positive_lexicon", &p.positive_lexicon, Need::Input);
                require(&mut errs, "negative_lexicon", &p.negative_lexicon, Need::Input);
                if self.eval.top_n == 0 {
                    errs.push("eval.top_n: must be positive".into());
                }
            }
            "synth" => {
                errs.extend(self.synth.validate().into_iter().map(|e| format!("synth: {e}")));
                require(&mut errs, "out_dir", &p.out_dir, Need::Output);
            }
            other => errs.push(format!("unknown command {other}")),
        }
        errs
    }
}
