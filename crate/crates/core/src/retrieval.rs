//! Cross-modal ranking by KL divergence between topic distributions.

use std::collections::HashSet;
use std::fmt;
use std::fs;
use std::io::{BufRead, BufReader, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::corpus::{Tokenizer, Vocabulary};
use crate::distribution::TopicDistribution;
use crate::error::{Error, Result};
use crate::lda::{InferConfig, TopicModel};
use crate::nnet::Network;
use crate::trainer::{embed_image_head, text_topics, DocumentTopics, Head};

pub const DEFAULT_KL_EPS: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Modality {
    Image,
    Text,
}

impl Modality {
    pub fn opposite(self) -> Modality {
        match self {
            Modality::Image => Modality::Text,
            Modality::Text => Modality::Image,
        }
    }
}

impl fmt::Display for Modality {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Modality::Image => "image",
            Modality::Text => "text",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum KlMode {
    /// `D(query ‖ candidate)`
    #[default]
    Forward,
    /// `D(q ‖ c) + D(c ‖ q)`
    Symmetric,
}

fn smooth(p: &[f64], eps: f64) -> Vec<f64> {
    let total: f64 = p.iter().map(|x| x + eps).sum();
    p.iter().map(|x| (x + eps) / total).collect()
}

/// `Σ p'·ln(p'/q')` where `p'`, `q'` are the inputs plus `eps`, renormalized.
pub fn kl_divergence(p: &[f64], q: &[f64], eps: f64) -> Result<f64> {
    if p.len() != q.len() {
        return Err(Error::DimensionMismatch {
            expected: p.len(),
            got: q.len(),
        });
    }
    if !(eps > 0.0) {
        return Err(Error::InvalidHyperparameter(format!("eps = {eps}")));
    }
    let (ps, qs) = (smooth(p, eps), smooth(q, eps));
    let d: f64 = ps.iter().zip(&qs).map(|(a, b)| a * (a / b).ln()).sum();
    // rounding can push identical inputs a hair below zero
    Ok(d.max(0.0))
}

pub fn divergence(p: &[f64], q: &[f64], eps: f64, mode: KlMode) -> Result<f64> {
    match mode {
        KlMode::Forward => kl_divergence(p, q, eps),
        KlMode::Symmetric => Ok(kl_divergence(p, q, eps)? + kl_divergence(q, p, eps)?),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IndexedItem {
    pub item_id: String,
    pub modality: Modality,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub label: Option<String>,
    pub distribution: TopicDistribution,
}

/// Immutable collection of items searched by exhaustive scan.
#[derive(Debug, Clone, PartialEq)]
pub struct RetrievalIndex {
    items: Vec<IndexedItem>,
    k: usize,
}

/// One ranked result.
#[derive(Debug, Clone, PartialEq)]
pub struct Hit {
    pub item_id: String,
    pub divergence: f64,
    pub label: Option<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QueryOptions {
    pub eps: f64,
    pub mode: KlMode,
}

impl Default for QueryOptions {
    fn default() -> Self {
        QueryOptions {
            eps: DEFAULT_KL_EPS,
            mode: KlMode::Forward,
        }
    }
}

pub fn build_index(items: Vec<IndexedItem>) -> Result<RetrievalIndex> {
    let k = items.first().map_or(0, |i| i.distribution.len());
    let mut seen = HashSet::with_capacity(items.len());
    for item in &items {
        if item.distribution.len() != k {
            return Err(Error::DimensionMismatch {
                expected: k,
                got: item.distribution.len(),
            });
        }
        if !seen.insert(item.item_id.as_str()) {
            return Err(Error::DuplicateId(item.item_id.clone()));
        }
    }
    Ok(RetrievalIndex { items, k })
}

impl RetrievalIndex {
    pub fn items(&self) -> &[IndexedItem] {
        &self.items
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }

    pub fn of_modality(&self, modality: Modality) -> impl Iterator<Item = &IndexedItem> {
        self.items.iter().filter(move |i| i.modality == modality)
    }

    /// Every item of `target`, ascending by divergence from the query, ties by id.
    pub fn rank_all(&self, q: &TopicDistribution, target: Modality, opts: &QueryOptions) -> Result<Vec<Hit>> {
        if q.len() != self.k {
            return Err(Error::DimensionMismatch {
                expected: self.k,
                got: q.len(),
            });
        }
        let mut hits = self
            .of_modality(target)
            .map(|item| {
                Ok(Hit {
                    item_id: item.item_id.clone(),
                    divergence: divergence(q.as_slice(), item.distribution.as_slice(), opts.eps, opts.mode)?,
                    label: item.label.clone(),
                })
            })
            .collect::<Result<Vec<_>>>()?;
        if hits.is_empty() {
            return Err(Error::EmptyModality(target.to_string()));
        }
        hits.sort_by(|a, b| a.divergence.total_cmp(&b.divergence).then_with(|| a.item_id.cmp(&b.item_id)));
        Ok(hits)
    }

    pub fn query_with(
        &self,
        q: &TopicDistribution,
        target: Modality,
        top_k: usize,
        opts: &QueryOptions,
    ) -> Result<Vec<Hit>> {
        if top_k == 0 {
            return Err(Error::InvalidHyperparameter("top_k must be ≥ 1".into()));
        }
        let mut hits = self.rank_all(q, target, opts)?;
        hits.truncate(top_k);
        Ok(hits)
    }

    /// Nearest `top_k` items of `target` under forward KL with default smoothing.
    pub fn query(&self, q: &TopicDistribution, target: Modality, top_k: usize) -> Result<Vec<Hit>> {
        self.query_with(q, target, top_k, &QueryOptions::default())
    }

    pub fn write_jsonl<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        for item in &self.items {
            let line = serde_json::to_string(item).map_err(std::io::Error::other)?;
            writeln!(out, "{line}")?;
        }
        Ok(())
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let mut buf = Vec::new();
        self.write_jsonl(&mut buf).map_err(|e| Error::io(path, e))?;
        fs::write(path, buf).map_err(|e| Error::io(path, e))
    }

    pub fn read_jsonl<R: BufRead>(reader: R, source: &str) -> Result<Self> {
        let mut items = Vec::new();
        for (i, line) in reader.lines().enumerate() {
            let line = line.map_err(|e| Error::io(source, e))?;
            if line.trim().is_empty() {
                continue;
            }
            let item: IndexedItem = serde_json::from_str(&line).map_err(|e| Error::Parse {
                path: source.into(),
                line: i + 1,
                message: e.to_string(),
            })?;
            items.push(item);
        }
        build_index(items)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let file = fs::File::open(path).map_err(|e| Error::io(path, e))?;
        RetrievalIndex::read_jsonl(BufReader::new(file), &path.display().to_string())
    }
}

/// Index of article texts (by doc id) and images (by image id, embedded with `head`).
pub fn index_from_topics(projected: &[DocumentTopics], net: &Network, head: Head) -> Result<RetrievalIndex> {
    let mut items = Vec::new();
    for doc in projected {
        items.push(IndexedItem {
            item_id: doc.doc_id.clone(),
            modality: Modality::Text,
            label: doc.label.clone(),
            distribution: doc.article.clone(),
        });
        for img in &doc.images {
            items.push(IndexedItem {
                item_id: img.image_id.clone(),
                modality: Modality::Image,
                label: doc.label.clone(),
                distribution: embed_image_head(net, &img.features, head)?,
            });
        }
    }
    build_index(items)
}

/// One headerless line per hit: `rank, item_id, divergence, label`.
pub fn write_hits_tsv<W: Write>(mut out: W, hits: &[Hit]) -> std::io::Result<()> {
    for (r, h) in hits.iter().enumerate() {
        writeln!(
            out,
            "{}\t{}\t{}\t{}",
            r + 1,
            h.item_id,
            h.divergence,
            h.label.as_deref().unwrap_or("")
        )?;
    }
    Ok(())
}

/// A query in either modality.
#[derive(Debug, Clone, PartialEq)]
pub enum QueryPayload {
    Text(String),
    Features(Vec<f64>),
}

/// Everything needed to embed a raw query.
pub struct QueryEngine<'a> {
    pub net: &'a Network,
    pub model: &'a TopicModel,
    pub vocab: &'a Vocabulary,
    pub tokenizer: &'a Tokenizer,
    pub infer: InferConfig,
    pub head: Head,
    pub options: QueryOptions,
}

impl QueryEngine<'_> {
    /// Text is projected with the topic model and searched against images;
    /// features go through the network and are searched against texts.
    pub fn embed(&self, payload: &QueryPayload) -> Result<(TopicDistribution, Modality)> {
        match payload {
            QueryPayload::Text(text) => Ok((
                text_topics(text, self.model, self.vocab, self.tokenizer, &self.infer)?,
                Modality::Image,
            )),
            QueryPayload::Features(x) => Ok((embed_image_head(self.net, x, self.head)?, Modality::Text)),
        }
    }

    pub fn retrieve(&self, index: &RetrievalIndex, payload: &QueryPayload, top_k: usize) -> Result<Vec<Hit>> {
        let (q, target) = self.embed(payload)?;
        index.query_with(&q, target, top_k, &self.options)
    }
}

pub fn cross_modal_retrieve(
    engine: &QueryEngine<'_>,
    index: &RetrievalIndex,
    payload: &QueryPayload,
    top_k: usize,
) -> Result<Vec<Hit>> {
    engine.retrieve(index, payload, top_k)
}
