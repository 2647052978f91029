//! Centralized defaults and the TOML configuration file.
//!
//! Every section is optional; missing keys fall back to [`Config::default`].

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::corpus::VocabConfig;
use crate::error::{Error, Result};
use crate::eval::ProbeConfig;
use crate::lda::{InferConfig, LdaConfig};
use crate::nnet::{LossKind, SgdConfig};
use crate::retrieval::{KlMode, QueryOptions, DEFAULT_KL_EPS};
use crate::synth::FeatureMap;
use crate::trainer::{Head, TrainConfig};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(default, deny_unknown_fields)]
pub struct Config {
    pub corpus: CorpusSection,
    pub lda: LdaSection,
    pub infer: InferSection,
    pub nnet: NnetSection,
    pub trainer: TrainerSection,
    pub retrieval: RetrievalSection,
    pub eval: EvalSection,
    pub synth: SynthSection,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CorpusSection {
    pub min_words: usize,
    pub require_caption: bool,
    pub min_df: usize,
    pub max_df_fraction: f64,
    pub max_vocab: usize,
}

impl Default for CorpusSection {
    fn default() -> Self {
        let v = VocabConfig::default();
        CorpusSection {
            min_words: 50,
            require_caption: true,
            min_df: v.min_df,
            max_df_fraction: v.max_df_fraction,
            max_vocab: v.max_size,
        }
    }
}

impl CorpusSection {
    pub fn vocab_config(&self) -> VocabConfig {
        VocabConfig {
            min_df: self.min_df,
            max_df_fraction: self.max_df_fraction,
            max_size: self.max_vocab,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LdaSection {
    pub k: usize,
    /// Defaults to `50 / k` when absent.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub alpha: Option<f64>,
    pub beta: f64,
    pub sweeps: usize,
    /// Independent chains; the one with the lowest training perplexity is kept.
    pub restarts: usize,
}

impl Default for LdaSection {
    fn default() -> Self {
        let d = LdaConfig::default();
        LdaSection {
            k: d.k,
            alpha: None,
            beta: d.beta,
            sweeps: d.sweeps,
            restarts: 1,
        }
    }
}

impl LdaSection {
    pub fn lda_config(&self, seed: u64) -> LdaConfig {
        LdaConfig {
            k: self.k,
            alpha: self.alpha.unwrap_or(50.0 / self.k as f64),
            beta: self.beta,
            sweeps: self.sweeps,
            seed,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct InferSection {
    pub sweeps: usize,
    pub burn_in: usize,
}

impl Default for InferSection {
    fn default() -> Self {
        let d = InferConfig::default();
        InferSection {
            sweeps: d.sweeps,
            burn_in: d.burn_in,
        }
    }
}

impl InferSection {
    pub fn infer_config(&self, seed: u64) -> InferConfig {
        InferConfig {
            sweeps: self.sweeps,
            burn_in: self.burn_in,
            seed,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct NnetSection {
    pub hidden: Vec<usize>,
    pub head_hidden: Vec<usize>,
    pub loss: LossKind,
}

impl Default for NnetSection {
    fn default() -> Self {
        NnetSection {
            hidden: vec![256, 128],
            head_hidden: Vec::new(),
            loss: LossKind::SigmoidCrossEntropy,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainerSection {
    pub epochs: usize,
    pub batch_size: usize,
    pub base_lr: f64,
    pub momentum: f64,
    pub decay_factor: f64,
    pub decay_every: u64,
}

impl Default for TrainerSection {
    fn default() -> Self {
        let t = TrainConfig::default();
        TrainerSection {
            epochs: t.epochs,
            batch_size: t.batch_size,
            base_lr: t.sgd.base_lr,
            momentum: t.sgd.momentum,
            decay_factor: t.sgd.decay_factor,
            decay_every: t.sgd.decay_every,
        }
    }
}

impl TrainerSection {
    pub fn train_config(&self, loss: LossKind, shuffle_seed: u64) -> TrainConfig {
        TrainConfig {
            epochs: self.epochs,
            batch_size: self.batch_size,
            sgd: SgdConfig {
                base_lr: self.base_lr,
                decay_factor: self.decay_factor,
                decay_every: self.decay_every,
                momentum: self.momentum,
            },
            loss,
            shuffle_seed,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RetrievalSection {
    pub eps: f64,
    pub kl: KlMode,
    pub head: Head,
    pub top: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub model: Option<PathBuf>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub vocab: Option<PathBuf>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub net: Option<PathBuf>,
}

impl Default for RetrievalSection {
    fn default() -> Self {
        RetrievalSection {
            eps: DEFAULT_KL_EPS,
            kl: KlMode::Forward,
            head: Head::Local,
            top: 8,
            model: None,
            vocab: None,
            net: None,
        }
    }
}

impl RetrievalSection {
    pub fn query_options(&self) -> QueryOptions {
        QueryOptions {
            eps: self.eps,
            mode: self.kl,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EvalSection {
    pub probe_epochs: usize,
    pub probe_learning_rates: Vec<f64>,
    pub probe_l2: Vec<f64>,
    pub probe_val_fraction: f64,
}

impl Default for EvalSection {
    fn default() -> Self {
        let p = ProbeConfig::default();
        EvalSection {
            probe_epochs: p.epochs,
            probe_learning_rates: p.learning_rates,
            probe_l2: p.l2_penalties,
            probe_val_fraction: p.val_fraction,
        }
    }
}

impl EvalSection {
    pub fn probe_config(&self, split_seed: u64) -> ProbeConfig {
        ProbeConfig {
            epochs: self.probe_epochs,
            learning_rates: self.probe_learning_rates.clone(),
            l2_penalties: self.probe_l2.clone(),
            val_fraction: self.probe_val_fraction,
            split_seed,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SynthSection {
    pub k: usize,
    pub vocab_size: usize,
    pub alpha: f64,
    pub articles: usize,
    pub images_per_article: usize,
    pub doc_len: usize,
    pub caption_len: usize,
    pub feature_dim: usize,
    pub noise: f64,
    pub feature_map: FeatureMap,
}

impl Default for SynthSection {
    fn default() -> Self {
        SynthSection {
            k: 5,
            vocab_size: 100,
            alpha: 0.2,
            articles: 500,
            images_per_article: 2,
            doc_len: 60,
            caption_len: 30,
            feature_dim: 16,
            noise: 0.01,
            feature_map: FeatureMap::Random,
        }
    }
}

impl Config {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Format(format!("config: {e}")))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Config::from_toml_str(&text).map_err(|e| match e {
            Error::Format(m) => Error::Format(format!("{}: {m}", path.display())),
            other => other,
        })
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string(self).expect("config always serializes")
    }
}

/// `(file kind, format name, version)` for every artifact this crate writes.
pub fn schema_versions() -> Vec<(&'static str, &'static str, u32)> {
    vec![
        ("corpus", "jsonl", 1),
        ("vocabulary", "text", 1),
        ("lda-model", crate::lda::MODEL_FORMAT, crate::lda::MODEL_VERSION),
        ("synth-truth", crate::synth::TRUTH_FORMAT, crate::synth::TRUTH_VERSION),
        ("triples", "TNTRIPLE", crate::trainer::TRIPLES_VERSION),
        ("checkpoint", crate::nnet::CHECKPOINT_FORMAT, crate::nnet::CHECKPOINT_VERSION),
        ("index", "jsonl", 1),
    ]
}
