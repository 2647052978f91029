//! Self-supervised training: every image is paired with the topic
//! distribution of its whole article (global target) and of its own caption
//! (local target), and the network learns to predict both from pixels or
//! features alone.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use rand::seq::SliceRandom;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::corpus::{encode, RawDocument, Tokenizer, Vocabulary};
use crate::distribution::TopicDistribution;
use crate::error::{Error, Result};
use crate::lda::{infer, InferConfig, TopicModel};
use crate::linalg::Matrix;
use crate::nnet::{sgd_step, LossBreakdown, LossKind, Network, OptimizerState, SgdConfig};
use crate::sampling::{content_seed, rng_from_seed};

const TRIPLES_MAGIC: &[u8; 8] = b"TNTRIPLE";
pub const TRIPLES_VERSION: u32 = 1;

/// One training example: image features with its article and caption topic targets.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainingTriple {
    pub x: Vec<f64>,
    pub target_global: TopicDistribution,
    pub target_local: TopicDistribution,
}

/// Which network branch to read.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum Head {
    Global,
    #[default]
    Local,
}

/// Topic projections of one document and its images.
#[derive(Debug, Clone, PartialEq)]
pub struct DocumentTopics {
    pub doc_id: String,
    pub label: Option<String>,
    pub article: TopicDistribution,
    pub images: Vec<ImageTopics>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ImageTopics {
    pub image_id: String,
    pub caption: TopicDistribution,
    pub features: Vec<f64>,
}

/// Settings shared by [`project_corpus`] and [`build_triples`].
#[derive(Debug, Clone)]
pub struct ProjectionConfig {
    pub tokenizer: Tokenizer,
    pub infer: InferConfig,
    /// Directory that relative `features_path` entries resolve against.
    pub base_dir: PathBuf,
}

impl Default for ProjectionConfig {
    fn default() -> Self {
        ProjectionConfig {
            tokenizer: Tokenizer::english(),
            infer: InferConfig::default(),
            base_dir: PathBuf::from("."),
        }
    }
}

pub fn check_vocab(model: &TopicModel, vocab: &Vocabulary) -> Result<()> {
    if model.v() != vocab.len() {
        return Err(Error::VocabularyMismatch(format!(
            "model has {} words, vocabulary {}",
            model.v(),
            vocab.len()
        )));
    }
    if let Some(h) = model.vocab_hash() {
        if h != vocab.hash() {
            return Err(Error::VocabularyMismatch(format!(
                "model was fitted on vocabulary {h}, given {}",
                vocab.hash()
            )));
        }
    }
    Ok(())
}

/// Topic distribution of a text, with the sampler seeded from the text itself
/// so identical texts always map to identical distributions.
pub fn text_topics(
    text: &str,
    model: &TopicModel,
    vocab: &Vocabulary,
    tokenizer: &Tokenizer,
    config: &InferConfig,
) -> Result<TopicDistribution> {
    let doc = encode(&tokenizer.tokenize(text), vocab);
    let cfg = InferConfig {
        seed: config.seed ^ content_seed(text.as_bytes()),
        ..*config
    };
    infer(model, &doc, &cfg)
}

/// Projects every article once and every caption once; documents are handled in parallel.
pub fn project_corpus(
    corpus: &[RawDocument],
    model: &TopicModel,
    vocab: &Vocabulary,
    config: &ProjectionConfig,
) -> Result<Vec<DocumentTopics>> {
    check_vocab(model, vocab)?;
    corpus
        .par_iter()
        .map(|doc| {
            let article = text_topics(&doc.article_text, model, vocab, &config.tokenizer, &config.infer)?;
            let images = doc
                .images
                .iter()
                .map(|img| {
                    if img.caption.trim().is_empty() {
                        return Err(Error::EmptyCaption(img.image_id.clone()));
                    }
                    Ok(ImageTopics {
                        image_id: img.image_id.clone(),
                        caption: text_topics(&img.caption, model, vocab, &config.tokenizer, &config.infer)?,
                        features: img.features.resolve(&config.base_dir)?,
                    })
                })
                .collect::<Result<Vec<_>>>()?;
            Ok(DocumentTopics {
                doc_id: doc.doc_id.clone(),
                label: doc.class_label.clone(),
                article,
                images,
            })
        })
        .collect()
}

/// One triple per image. The global target is inferred once per article and
/// shared by all of its images; the local target comes from the image's caption.
pub fn build_triples(
    corpus: &[RawDocument],
    model: &TopicModel,
    vocab: &Vocabulary,
    config: &ProjectionConfig,
) -> Result<Vec<TrainingTriple>> {
    let projected = project_corpus(corpus, model, vocab, config)?;
    triples_from_topics(&projected)
}

pub fn triples_from_topics(projected: &[DocumentTopics]) -> Result<Vec<TrainingTriple>> {
    let mut triples = Vec::new();
    let mut dim = None;
    for doc in projected {
        for img in &doc.images {
            let d = *dim.get_or_insert(img.features.len());
            if img.features.len() != d {
                return Err(Error::DimensionMismatch {
                    expected: d,
                    got: img.features.len(),
                });
            }
            triples.push(TrainingTriple {
                x: img.features.clone(),
                target_global: doc.article.clone(),
                target_local: img.caption.clone(),
            });
        }
    }
    Ok(triples)
}

/// Binary cache: magic, version, model hash, record count, dimensions, then
/// little-endian f64 records of `x ‖ target_global ‖ target_local`.
pub fn write_triples<W: Write>(mut out: W, triples: &[TrainingTriple], model_hash: &str) -> std::io::Result<()> {
    let x_dim = triples.first().map_or(0, |t| t.x.len());
    let k = triples.first().map_or(0, |t| t.target_global.len());
    out.write_all(TRIPLES_MAGIC)?;
    out.write_all(&TRIPLES_VERSION.to_le_bytes())?;
    out.write_all(&(model_hash.len() as u32).to_le_bytes())?;
    out.write_all(model_hash.as_bytes())?;
    out.write_all(&(triples.len() as u64).to_le_bytes())?;
    out.write_all(&(x_dim as u32).to_le_bytes())?;
    out.write_all(&(k as u32).to_le_bytes())?;
    for t in triples {
        for v in t.x.iter().chain(t.target_global.as_slice()).chain(t.target_local.as_slice()) {
            out.write_all(&v.to_le_bytes())?;
        }
    }
    Ok(())
}

/// Parses a cache written by [`write_triples`]; returns the triples and the stored model hash.
pub fn read_triples(bytes: &[u8]) -> Result<(Vec<TrainingTriple>, String)> {
    struct Cursor<'a>(&'a [u8]);
    impl<'a> Cursor<'a> {
        fn take(&mut self, n: usize) -> Result<&'a [u8]> {
            if self.0.len() < n {
                return Err(Error::TruncatedFile("triples cache".into()));
            }
            let (head, tail) = self.0.split_at(n);
            self.0 = tail;
            Ok(head)
        }
        fn u32(&mut self) -> Result<u32> {
            Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
        }
        fn u64(&mut self) -> Result<u64> {
            Ok(u64::from_le_bytes(self.take(8)?.try_into().unwrap()))
        }
        fn f64s(&mut self, n: usize) -> Result<Vec<f64>> {
            Ok(self
                .take(n * 8)?
                .chunks_exact(8)
                .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
                .collect())
        }
    }
    let mut c = Cursor(bytes);
    if c.take(8)? != TRIPLES_MAGIC {
        return Err(Error::Format("not a triples cache".into()));
    }
    let version = c.u32()?;
    if version != TRIPLES_VERSION {
        return Err(Error::Format(format!("triples cache version {version}")));
    }
    let hash_len = c.u32()? as usize;
    let hash = String::from_utf8(c.take(hash_len)?.to_vec())
        .map_err(|_| Error::Format("model hash is not UTF-8".into()))?;
    let n = c.u64()? as usize;
    let x_dim = c.u32()? as usize;
    let k = c.u32()? as usize;
    let mut triples = Vec::with_capacity(n.min(1 << 20));
    for _ in 0..n {
        triples.push(TrainingTriple {
            x: c.f64s(x_dim)?,
            target_global: TopicDistribution::new(c.f64s(k)?)?,
            target_local: TopicDistribution::new(c.f64s(k)?)?,
        });
    }
    if !c.0.is_empty() {
        return Err(Error::Format("trailing bytes in triples cache".into()));
    }
    Ok((triples, hash))
}

pub fn save_triples(path: impl AsRef<Path>, triples: &[TrainingTriple], model_hash: &str) -> Result<()> {
    let path = path.as_ref();
    let mut buf = Vec::new();
    write_triples(&mut buf, triples, model_hash).map_err(|e| Error::io(path, e))?;
    fs::write(path, buf).map_err(|e| Error::io(path, e))
}

pub fn load_triples(path: impl AsRef<Path>) -> Result<(Vec<TrainingTriple>, String)> {
    let path = path.as_ref();
    read_triples(&fs::read(path).map_err(|e| Error::io(path, e))?)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub epochs: usize,
    pub batch_size: usize,
    pub sgd: SgdConfig,
    pub loss: LossKind,
    pub shuffle_seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            epochs: 50,
            batch_size: 128,
            sgd: SgdConfig::default(),
            loss: LossKind::SigmoidCrossEntropy,
            shuffle_seed: 0,
        }
    }
}

/// Mean losses over one epoch, weighted by batch size.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EpochRecord {
    pub epoch: usize,
    /// Optimizer iterations completed at the end of the epoch.
    pub iteration: u64,
    /// Learning rate of the epoch's last step.
    pub lr: f64,
    pub loss_global: f64,
    pub loss_local: f64,
    pub loss_total: f64,
}

#[derive(Debug, Clone)]
pub struct TrainOutcome {
    pub network: Network,
    pub optimizer: OptimizerState,
    pub history: Vec<EpochRecord>,
}

fn batch_matrices(triples: &[TrainingTriple], idx: &[usize]) -> Result<(Matrix, Matrix, Matrix)> {
    let x: Vec<&[f64]> = idx.iter().map(|&i| triples[i].x.as_slice()).collect();
    let g: Vec<&[f64]> = idx.iter().map(|&i| triples[i].target_global.as_slice()).collect();
    let l: Vec<&[f64]> = idx.iter().map(|&i| triples[i].target_local.as_slice()).collect();
    Ok((Matrix::from_rows(&x)?, Matrix::from_rows(&g)?, Matrix::from_rows(&l)?))
}

fn check_triples(net: &Network, triples: &[TrainingTriple]) -> Result<()> {
    for t in triples {
        if t.x.len() != net.input_dim() {
            return Err(Error::DimensionMismatch {
                expected: net.input_dim(),
                got: t.x.len(),
            });
        }
        if t.target_global.len() != net.k() || t.target_local.len() != net.k() {
            return Err(Error::DimensionMismatch {
                expected: net.k(),
                got: t.target_global.len(),
            });
        }
    }
    Ok(())
}

/// Mean loss of the network over all triples without updating it.
pub fn evaluate_loss(net: &Network, triples: &[TrainingTriple], kind: LossKind) -> Result<LossBreakdown> {
    check_triples(net, triples)?;
    if triples.is_empty() {
        return Err(Error::EmptyCorpus);
    }
    let idx: Vec<usize> = (0..triples.len()).collect();
    let (x, g, l) = batch_matrices(triples, &idx)?;
    let pass = net.forward(&x)?;
    net.loss(&pass, &g, &l, kind)
}

/// Shuffled mini-batch SGD for `epochs` passes over the triples.
pub fn train(net: Network, triples: &[TrainingTriple], config: &TrainConfig) -> Result<TrainOutcome> {
    let opt = OptimizerState::new(&net, config.sgd);
    train_from(net, opt, triples, config)
}

/// Like [`train`], resuming from an existing optimizer state.
pub fn train_from(
    mut net: Network,
    mut opt: OptimizerState,
    triples: &[TrainingTriple],
    config: &TrainConfig,
) -> Result<TrainOutcome> {
    if config.batch_size == 0 {
        return Err(Error::InvalidHyperparameter("batch_size must be ≥ 1".into()));
    }
    if config.epochs > 0 && triples.is_empty() {
        return Err(Error::EmptyCorpus);
    }
    check_triples(&net, triples)?;
    let mut rng = rng_from_seed(config.shuffle_seed);
    let mut order: Vec<usize> = (0..triples.len()).collect();
    let mut history = Vec::with_capacity(config.epochs);
    for epoch in 0..config.epochs {
        order.shuffle(&mut rng);
        let (mut sg, mut sl) = (0.0, 0.0);
        let mut lr = opt.current_lr();
        for chunk in order.chunks(config.batch_size) {
            let (x, g, l) = batch_matrices(triples, chunk)?;
            let (loss, grads) = net.loss_and_gradients(&x, &g, &l, config.loss)?;
            if !loss.total.is_finite() {
                return Err(Error::NonFiniteLoss);
            }
            sg += loss.global * chunk.len() as f64;
            sl += loss.local * chunk.len() as f64;
            lr = opt.current_lr();
            sgd_step(&mut net, &grads, &mut opt)?;
        }
        let n = triples.len() as f64;
        history.push(EpochRecord {
            epoch,
            iteration: opt.iteration,
            lr,
            loss_global: sg / n,
            loss_local: sl / n,
            loss_total: (sg + sl) / n,
        });
    }
    Ok(TrainOutcome {
        network: net,
        optimizer: opt,
        history,
    })
}

pub fn write_history_csv<W: Write>(mut out: W, history: &[EpochRecord]) -> std::io::Result<()> {
    writeln!(out, "iteration,lr,loss_global,loss_local,loss_total")?;
    for r in history {
        writeln!(
            out,
            "{},{},{},{},{}",
            r.iteration, r.lr, r.loss_global, r.loss_local, r.loss_total
        )?;
    }
    Ok(())
}

fn normalize_head(outputs: &[f64]) -> Result<TopicDistribution> {
    let sum: f64 = outputs.iter().sum();
    if !(sum >= 1e-9) || !sum.is_finite() {
        return Err(Error::DegenerateOutput(sum));
    }
    TopicDistribution::from_weights(outputs.to_vec())
}

/// Both heads' logistic outputs, each rescaled to sum to one.
pub fn embed_image(net: &Network, x: &[f64]) -> Result<(TopicDistribution, TopicDistribution)> {
    if x.len() != net.input_dim() {
        return Err(Error::DimensionMismatch {
            expected: net.input_dim(),
            got: x.len(),
        });
    }
    let pass = net.forward(&Matrix::from_vec(1, x.len(), x.to_vec())?)?;
    Ok((
        normalize_head(pass.global_outputs().row(0))?,
        normalize_head(pass.local_outputs().row(0))?,
    ))
}

pub fn embed_image_head(net: &Network, x: &[f64], head: Head) -> Result<TopicDistribution> {
    let (g, l) = embed_image(net, x)?;
    Ok(match head {
        Head::Global => g,
        Head::Local => l,
    })
}
