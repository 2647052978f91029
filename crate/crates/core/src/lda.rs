//! Latent Dirichlet allocation fitted by collapsed Gibbs sampling, plus
//! fixed-topic inference for unseen documents.

use std::fs;
use std::path::Path;

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::corpus::SparseDoc;
use crate::distribution::{TopicDistribution, SIMPLEX_TOL};
use crate::error::{Error, Result};
use crate::linalg::Matrix;
use crate::sampling::{categorical, rng_from_seed, SeededRng};

pub const MODEL_FORMAT: &str = "topicnet-lda-model";
pub const MODEL_VERSION: u32 = 1;

/// Hyperparameters for [`fit`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LdaConfig {
    pub k: usize,
    pub alpha: f64,
    pub beta: f64,
    pub sweeps: usize,
    pub seed: u64,
}

impl LdaConfig {
    /// `alpha = 50/K`, `beta = 0.01`, 1000 sweeps.
    pub fn with_topics(k: usize) -> Self {
        LdaConfig {
            k,
            alpha: 50.0 / k as f64,
            beta: 0.01,
            sweeps: 1000,
            seed: 0,
        }
    }
}

impl Default for LdaConfig {
    fn default() -> Self {
        LdaConfig::with_topics(40)
    }
}

/// Settings for [`infer`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct InferConfig {
    pub sweeps: usize,
    pub burn_in: usize,
    pub seed: u64,
}

impl Default for InferConfig {
    fn default() -> Self {
        InferConfig {
            sweeps: 1000,
            burn_in: 200,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct Counts {
    n_kw: Vec<u64>,
    n_k: Vec<u64>,
}

/// Fitted topic-word distributions.
///
/// `phi` is K×V row-stochastic. Models produced by [`fit`] also carry the
/// topic-word count tables they were derived from, with
/// `phi[k][w] = (n_kw + beta) / (n_k + V·beta)`.
#[derive(Debug, Clone, PartialEq)]
pub struct TopicModel {
    k: usize,
    v: usize,
    alpha: f64,
    beta: f64,
    phi: Vec<f64>,
    counts: Option<Counts>,
    vocab_hash: Option<String>,
}

impl TopicModel {
    /// Wraps a given topic-word matrix (no count tables).
    pub fn from_phi(phi: &Matrix, alpha: f64, beta: f64) -> Result<Self> {
        check_hyper(phi.rows().max(2), alpha, beta)?;
        if phi.rows() == 0 || phi.cols() == 0 {
            return Err(Error::InvalidDimension("empty topic-word matrix".into()));
        }
        check_phi_rows(phi)?;
        Ok(TopicModel {
            k: phi.rows(),
            v: phi.cols(),
            alpha,
            beta,
            phi: phi.as_slice().to_vec(),
            counts: None,
            vocab_hash: None,
        })
    }

    fn from_counts(k: usize, v: usize, alpha: f64, beta: f64, n_kw: Vec<u64>, n_k: Vec<u64>) -> Self {
        let vb = v as f64 * beta;
        let mut phi = vec![0.0; k * v];
        for t in 0..k {
            let denom = n_k[t] as f64 + vb;
            for w in 0..v {
                phi[t * v + w] = (n_kw[t * v + w] as f64 + beta) / denom;
            }
        }
        TopicModel {
            k,
            v,
            alpha,
            beta,
            phi,
            counts: Some(Counts { n_kw, n_k }),
            vocab_hash: None,
        }
    }

    pub fn with_vocab_hash(mut self, hash: impl Into<String>) -> Self {
        self.vocab_hash = Some(hash.into());
        self
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn v(&self) -> usize {
        self.v
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    pub fn vocab_hash(&self) -> Option<&str> {
        self.vocab_hash.as_deref()
    }

    pub fn phi(&self) -> Matrix {
        Matrix::from_vec(self.k, self.v, self.phi.clone()).expect("shape is fixed")
    }

    pub fn phi_row(&self, topic: usize) -> &[f64] {
        &self.phi[topic * self.v..(topic + 1) * self.v]
    }

    pub fn topic_word_counts(&self) -> Option<(&[u64], &[u64])> {
        self.counts.as_ref().map(|c| (c.n_kw.as_slice(), c.n_k.as_slice()))
    }

    /// Checks phi rows and, when present, the count-table identities.
    pub fn validate(&self) -> Result<()> {
        check_phi_rows(&self.phi())?;
        if let Some(c) = &self.counts {
            if c.n_kw.len() != self.k * self.v || c.n_k.len() != self.k {
                return Err(Error::Format("count table shape".into()));
            }
            for t in 0..self.k {
                let row: u64 = c.n_kw[t * self.v..(t + 1) * self.v].iter().sum();
                if row != c.n_k[t] {
                    return Err(Error::Consistency(format!("n_k[{t}] != Σ_w n_kw[{t}][w]")));
                }
            }
            let expect = TopicModel::from_counts(
                self.k,
                self.v,
                self.alpha,
                self.beta,
                c.n_kw.clone(),
                c.n_k.clone(),
            );
            if expect.phi != self.phi {
                return Err(Error::Consistency("phi does not match count tables".into()));
            }
        }
        Ok(())
    }

    /// Most probable word ids of a topic.
    pub fn top_words(&self, topic: usize, n: usize) -> Vec<u32> {
        let mut ids: Vec<u32> = (0..self.v as u32).collect();
        let row = self.phi_row(topic);
        ids.sort_by(|&a, &b| row[b as usize].total_cmp(&row[a as usize]).then(a.cmp(&b)));
        ids.truncate(n);
        ids
    }

    pub fn to_json(&self) -> Result<String> {
        let file = ModelFile {
            format: MODEL_FORMAT.into(),
            version: MODEL_VERSION,
            k: self.k,
            v: self.v,
            alpha: self.alpha,
            beta: self.beta,
            vocab_hash: self.vocab_hash.clone(),
            phi: self.phi.clone(),
            n_kw: self.counts.as_ref().map(|c| c.n_kw.clone()),
            n_k: self.counts.as_ref().map(|c| c.n_k.clone()),
        };
        Ok(serde_json::to_string(&file)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let f: ModelFile = serde_json::from_str(text)?;
        if f.format != MODEL_FORMAT || f.version != MODEL_VERSION {
            return Err(Error::Format(format!(
                "expected {MODEL_FORMAT} v{MODEL_VERSION}, found {} v{}",
                f.format, f.version
            )));
        }
        if f.phi.len() != f.k * f.v {
            return Err(Error::Format("phi length differs from K·V".into()));
        }
        let counts = match (f.n_kw, f.n_k) {
            (Some(n_kw), Some(n_k)) => Some(Counts { n_kw, n_k }),
            (None, None) => None,
            _ => return Err(Error::Format("incomplete count tables".into())),
        };
        let model = TopicModel {
            k: f.k,
            v: f.v,
            alpha: f.alpha,
            beta: f.beta,
            phi: f.phi,
            counts,
            vocab_hash: f.vocab_hash,
        };
        check_hyper(model.k, model.alpha, model.beta)?;
        model.validate()?;
        Ok(model)
    }

    /// Hex digest of the serialized model.
    pub fn content_hash(&self) -> Result<String> {
        let digest = Sha256::digest(self.to_json()?.as_bytes());
        Ok(hex::encode(&digest[..16]))
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        fs::write(path, self.to_json()?).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        TopicModel::from_json(&text)
    }
}

#[derive(Serialize, Deserialize)]
struct ModelFile {
    format: String,
    version: u32,
    k: usize,
    v: usize,
    alpha: f64,
    beta: f64,
    vocab_hash: Option<String>,
    phi: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    n_kw: Option<Vec<u64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    n_k: Option<Vec<u64>>,
}

fn check_hyper(k: usize, alpha: f64, beta: f64) -> Result<()> {
    if k < 2 {
        return Err(Error::InvalidHyperparameter(format!("K = {k}, need at least 2 topics")));
    }
    if !(alpha > 0.0 && alpha.is_finite()) {
        return Err(Error::InvalidHyperparameter(format!("alpha = {alpha}")));
    }
    if !(beta > 0.0 && beta.is_finite()) {
        return Err(Error::InvalidHyperparameter(format!("beta = {beta}")));
    }
    Ok(())
}

pub(crate) fn check_phi_rows(phi: &Matrix) -> Result<()> {
    for (row, r) in phi.iter_rows().enumerate() {
        let sum: f64 = r.iter().sum();
        if r.iter().any(|p| !(*p >= 0.0)) || (sum - 1.0).abs() > SIMPLEX_TOL {
            return Err(Error::InvalidPhi { row });
        }
    }
    Ok(())
}

/// Token-level topic assignments and the count tables of a collapsed Gibbs chain.
#[derive(Debug, Clone)]
pub struct GibbsState {
    k: usize,
    v: usize,
    words: Vec<Vec<u32>>,
    z: Vec<Vec<u32>>,
    n_dk: Vec<u32>,
    n_kw: Vec<u32>,
    n_k: Vec<u64>,
    rng: SeededRng,
}

impl GibbsState {
    /// Expands the corpus into token sequences and assigns topics uniformly at random.
    pub fn new(corpus: &[SparseDoc], k: usize, v: usize, seed: u64) -> Result<Self> {
        let mut rng = rng_from_seed(seed);
        let mut words = Vec::with_capacity(corpus.len());
        let mut z = Vec::with_capacity(corpus.len());
        for doc in corpus {
            if let Some(max) = doc.max_word_id() {
                if max as usize >= v {
                    return Err(Error::VocabularyMismatch(format!(
                        "word id {max} ≥ vocabulary size {v}"
                    )));
                }
            }
            let w: Vec<u32> = doc.tokens().collect();
            z.push(w.iter().map(|_| rng.random_range(0..k as u32)).collect());
            words.push(w);
        }
        GibbsState::assemble(words, z, k, v, rng)
    }

    /// Builds a state from explicit assignments (`z[d][i]` is the topic of token `i` of doc `d`).
    pub fn from_assignments(
        words: Vec<Vec<u32>>,
        z: Vec<Vec<u32>>,
        k: usize,
        v: usize,
        seed: u64,
    ) -> Result<Self> {
        if words.len() != z.len() || words.iter().zip(&z).any(|(w, z)| w.len() != z.len()) {
            return Err(Error::InvalidDimension("assignments do not match tokens".into()));
        }
        if words.iter().flatten().any(|&w| w as usize >= v) {
            return Err(Error::VocabularyMismatch("word id out of range".into()));
        }
        if z.iter().flatten().any(|&t| t as usize >= k) {
            return Err(Error::InvalidDimension("topic id out of range".into()));
        }
        GibbsState::assemble(words, z, k, v, rng_from_seed(seed))
    }

    fn assemble(
        words: Vec<Vec<u32>>,
        z: Vec<Vec<u32>>,
        k: usize,
        v: usize,
        rng: SeededRng,
    ) -> Result<Self> {
        let mut n_dk = vec![0u32; words.len() * k];
        let mut n_kw = vec![0u32; k * v];
        let mut n_k = vec![0u64; k];
        for (d, (ws, zs)) in words.iter().zip(&z).enumerate() {
            for (&w, &t) in ws.iter().zip(zs) {
                n_dk[d * k + t as usize] += 1;
                n_kw[t as usize * v + w as usize] += 1;
                n_k[t as usize] += 1;
            }
        }
        Ok(GibbsState {
            k,
            v,
            words,
            z,
            n_dk,
            n_kw,
            n_k,
            rng,
        })
    }

    pub fn num_docs(&self) -> usize {
        self.words.len()
    }

    pub fn doc_len(&self, d: usize) -> usize {
        self.words[d].len()
    }

    pub fn assignments(&self) -> &[Vec<u32>] {
        &self.z
    }

    pub fn doc_topic_counts(&self, d: usize) -> &[u32] {
        &self.n_dk[d * self.k..(d + 1) * self.k]
    }

    /// Full conditional of token `(d, i)` given all other assignments. The
    /// token's own assignment is excluded from the counts before evaluation.
    pub fn conditional(&self, d: usize, i: usize, alpha: f64, beta: f64) -> TopicDistribution {
        let w = self.words[d][i] as usize;
        let own = self.z[d][i] as usize;
        let vb = self.v as f64 * beta;
        let weights = (0..self.k)
            .map(|t| {
                let minus = (t == own) as u32;
                let ndk = (self.n_dk[d * self.k + t] - minus) as f64;
                let nkw = (self.n_kw[t * self.v + w] - minus) as f64;
                let nk = (self.n_k[t] - minus as u64) as f64;
                (ndk + alpha) * (nkw + beta) / (nk + vb)
            })
            .collect();
        TopicDistribution::from_weights(weights).expect("conditional weights are positive")
    }

    /// One systematic-scan pass resampling every token.
    pub fn sweep(&mut self, alpha: f64, beta: f64) {
        let (k, v) = (self.k, self.v);
        let vb = v as f64 * beta;
        let mut weights = vec![0.0; k];
        for d in 0..self.words.len() {
            for i in 0..self.words[d].len() {
                let w = self.words[d][i] as usize;
                let old = self.z[d][i] as usize;
                self.n_dk[d * k + old] -= 1;
                self.n_kw[old * v + w] -= 1;
                self.n_k[old] -= 1;

                let mut total = 0.0;
                for (t, wt) in weights.iter_mut().enumerate() {
                    *wt = (self.n_dk[d * k + t] as f64 + alpha)
                        * (self.n_kw[t * v + w] as f64 + beta)
                        / (self.n_k[t] as f64 + vb);
                    total += *wt;
                }
                let new = categorical(&mut self.rng, &weights, total);

                self.z[d][i] = new as u32;
                self.n_dk[d * k + new] += 1;
                self.n_kw[new * v + w] += 1;
                self.n_k[new] += 1;
            }
        }
    }

    /// Verifies the count tables against the assignments.
    pub fn check_counts(&self) -> Result<()> {
        let mut per_topic = vec![0u64; self.k];
        for d in 0..self.words.len() {
            let row = self.doc_topic_counts(d);
            let len: u64 = row.iter().map(|&c| c as u64).sum();
            if len != self.words[d].len() as u64 {
                return Err(Error::Consistency(format!(
                    "document {d}: topic counts sum to {len}, length is {}",
                    self.words[d].len()
                )));
            }
            for (t, &c) in row.iter().enumerate() {
                per_topic[t] += c as u64;
            }
        }
        if per_topic != self.n_k {
            return Err(Error::Consistency("Σ_d n_dk differs from n_k".into()));
        }
        for t in 0..self.k {
            let s: u64 = self.n_kw[t * self.v..(t + 1) * self.v].iter().map(|&c| c as u64).sum();
            if s != self.n_k[t] {
                return Err(Error::Consistency(format!("Σ_w n_kw[{t}] differs from n_k")));
            }
        }
        Ok(())
    }

    fn into_model(self, alpha: f64, beta: f64) -> TopicModel {
        TopicModel::from_counts(
            self.k,
            self.v,
            alpha,
            beta,
            self.n_kw.into_iter().map(u64::from).collect(),
            self.n_k,
        )
    }
}

/// Fits a topic model over a vocabulary of `vocab_size` words.
///
/// Counts are checked after every sweep; phi comes from the final sweep.
pub fn fit(corpus: &[SparseDoc], vocab_size: usize, config: &LdaConfig) -> Result<TopicModel> {
    Ok(run_chain(corpus, vocab_size, config)?.0)
}

/// Runs `restarts` chains seeded `seed, seed+1, …` and keeps the one whose
/// final state gives the lowest training perplexity. Chains that settle in a
/// merged-topic mode are discarded this way without any reference model.
pub fn fit_with_restarts(
    corpus: &[SparseDoc],
    vocab_size: usize,
    config: &LdaConfig,
    restarts: usize,
) -> Result<TopicModel> {
    if restarts == 0 {
        return Err(Error::InvalidHyperparameter("restarts must be ≥ 1".into()));
    }
    let mut best: Option<(f64, TopicModel)> = None;
    for r in 0..restarts as u64 {
        let cfg = LdaConfig {
            seed: config.seed.wrapping_add(r),
            ..*config
        };
        let (model, thetas) = run_chain(corpus, vocab_size, &cfg)?;
        let ppl = perplexity_with_thetas(&model, corpus, &thetas)?;
        if best.as_ref().is_none_or(|(b, _)| ppl < *b) {
            best = Some((ppl, model));
        }
    }
    Ok(best.expect("at least one chain").1)
}

/// Fitted model plus each document's topic proportions from the final state.
fn run_chain(corpus: &[SparseDoc], vocab_size: usize, config: &LdaConfig) -> Result<(TopicModel, Vec<TopicDistribution>)> {
    check_hyper(config.k, config.alpha, config.beta)?;
    if config.sweeps < 1 {
        return Err(Error::InvalidHyperparameter("sweeps must be ≥ 1".into()));
    }
    if vocab_size == 0 {
        return Err(Error::EmptyVocabulary);
    }
    if corpus.iter().all(SparseDoc::is_empty) {
        return Err(Error::EmptyCorpus);
    }
    let mut state = GibbsState::new(corpus, config.k, vocab_size, config.seed)?;
    for _ in 0..config.sweeps {
        state.sweep(config.alpha, config.beta);
        state.check_counts()?;
    }
    let ka = config.k as f64 * config.alpha;
    let thetas = (0..state.num_docs())
        .map(|d| {
            let len = state.doc_len(d) as f64;
            let probs = state
                .doc_topic_counts(d)
                .iter()
                .map(|&n| (n as f64 + config.alpha) / (len + ka))
                .collect();
            TopicDistribution::from_weights(probs)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok((state.into_model(config.alpha, config.beta), thetas))
}

/// Estimates a document's topic proportions with phi held fixed.
///
/// Runs `sweeps` Gibbs passes over the document's tokens and averages the
/// document-topic counts of the passes after `burn_in`:
/// `theta[k] = (mean n_dk[k] + alpha) / (len + K·alpha)`.
pub fn infer(model: &TopicModel, doc: &SparseDoc, config: &InferConfig) -> Result<TopicDistribution> {
    if config.sweeps <= config.burn_in {
        return Err(Error::InvalidHyperparameter(format!(
            "sweeps ({}) must exceed burn_in ({})",
            config.sweeps, config.burn_in
        )));
    }
    if let Some(max) = doc.max_word_id() {
        if max as usize >= model.v {
            return Err(Error::VocabularyMismatch(format!(
                "word id {max} ≥ vocabulary size {}",
                model.v
            )));
        }
    }
    let k = model.k;
    if doc.is_empty() {
        return Ok(TopicDistribution::uniform(k));
    }
    let mut rng = rng_from_seed(config.seed);
    let words: Vec<usize> = doc.tokens().map(|w| w as usize).collect();
    let mut z: Vec<usize> = words.iter().map(|_| rng.random_range(0..k)).collect();
    let mut n_dk = vec![0u32; k];
    for &t in &z {
        n_dk[t] += 1;
    }
    let mut acc = vec![0u64; k];
    let mut weights = vec![0.0; k];
    for sweep in 0..config.sweeps {
        for (i, &w) in words.iter().enumerate() {
            n_dk[z[i]] -= 1;
            let mut total = 0.0;
            for (t, wt) in weights.iter_mut().enumerate() {
                *wt = (n_dk[t] as f64 + model.alpha) * model.phi[t * model.v + w];
                total += *wt;
            }
            let new = categorical(&mut rng, &weights, total);
            z[i] = new;
            n_dk[new] += 1;
        }
        if sweep >= config.burn_in {
            for (a, &c) in acc.iter_mut().zip(&n_dk) {
                *a += c as u64;
            }
        }
    }
    let samples = (config.sweeps - config.burn_in) as f64;
    let denom = words.len() as f64 + k as f64 * model.alpha;
    let theta = acc
        .iter()
        .map(|&a| (a as f64 / samples + model.alpha) / denom)
        .collect();
    // renormalize away rounding in the mean
    TopicDistribution::from_weights(theta)
}

/// [`infer`] over many documents in parallel; document `d` uses seed `seed + d`.
pub fn infer_all(
    model: &TopicModel,
    docs: &[SparseDoc],
    config: &InferConfig,
) -> Result<Vec<TopicDistribution>> {
    docs.par_iter()
        .enumerate()
        .map(|(d, doc)| {
            let cfg = InferConfig {
                seed: config.seed.wrapping_add(d as u64),
                ..*config
            };
            infer(model, doc, &cfg)
        })
        .collect()
}

/// Per-word perplexity of held-out documents under given topic proportions.
pub fn perplexity_with_thetas(
    model: &TopicModel,
    heldout: &[SparseDoc],
    thetas: &[TopicDistribution],
) -> Result<f64> {
    if heldout.len() != thetas.len() {
        return Err(Error::DimensionMismatch {
            expected: heldout.len(),
            got: thetas.len(),
        });
    }
    let mut log_lik = 0.0;
    let mut tokens = 0usize;
    for (doc, theta) in heldout.iter().zip(thetas) {
        if theta.len() != model.k {
            return Err(Error::DimensionMismatch {
                expected: model.k,
                got: theta.len(),
            });
        }
        for &(w, c) in doc.entries() {
            if w as usize >= model.v {
                return Err(Error::VocabularyMismatch(format!("word id {w}")));
            }
            let p: f64 = (0..model.k)
                .map(|t| theta.as_slice()[t] * model.phi[t * model.v + w as usize])
                .sum();
            log_lik += c as f64 * p.ln();
        }
        tokens += doc.total_tokens();
    }
    if tokens == 0 {
        return Err(Error::EmptyCorpus);
    }
    Ok((-log_lik / tokens as f64).exp())
}

/// `exp(−Σ log p(w) / N)` with `p(w) = Σ_k theta_d[k]·phi[k][w]` and
/// `theta_d` from [`infer_all`].
pub fn perplexity(model: &TopicModel, heldout: &[SparseDoc], config: &InferConfig) -> Result<f64> {
    if heldout.iter().all(SparseDoc::is_empty) {
        return Err(Error::EmptyCorpus);
    }
    let thetas = infer_all(model, heldout, config)?;
    perplexity_with_thetas(model, heldout, &thetas)
}

/// Greedy one-to-one matching of estimated topics to reference topics by
/// largest overlap `Σ_w min(a_w, b_w)`. Entry `j` of the result is the
/// estimated topic matched to reference topic `j`.
pub fn align_topics(estimated: &Matrix, reference: &Matrix) -> Result<Vec<usize>> {
    if estimated.rows() != reference.rows() || estimated.cols() != reference.cols() {
        return Err(Error::DimensionMismatch {
            expected: reference.rows() * reference.cols(),
            got: estimated.rows() * estimated.cols(),
        });
    }
    let k = reference.rows();
    let mut pairs: Vec<(f64, usize, usize)> = Vec::with_capacity(k * k);
    for e in 0..k {
        for r in 0..k {
            let overlap = estimated
                .row(e)
                .iter()
                .zip(reference.row(r))
                .map(|(a, b)| a.min(*b))
                .sum();
            pairs.push((overlap, e, r));
        }
    }
    pairs.sort_by(|a, b| b.0.total_cmp(&a.0).then(a.1.cmp(&b.1)).then(a.2.cmp(&b.2)));
    let mut used_e = vec![false; k];
    let mut assign = vec![usize::MAX; k];
    for (_, e, r) in pairs {
        if !used_e[e] && assign[r] == usize::MAX {
            used_e[e] = true;
            assign[r] = e;
        }
    }
    Ok(assign)
}

/// Mean per-topic L1 distance between reference rows and their greedily aligned estimates.
pub fn topic_recovery_l1(estimated: &Matrix, reference: &Matrix) -> Result<f64> {
    let assign = align_topics(estimated, reference)?;
    let total: f64 = assign
        .iter()
        .enumerate()
        .map(|(r, &e)| {
            estimated
                .row(e)
                .iter()
                .zip(reference.row(r))
                .map(|(a, b)| (a - b).abs())
                .sum::<f64>()
        })
        .sum();
    Ok(total / reference.rows() as f64)
}
