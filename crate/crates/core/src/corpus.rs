//! Multimodal document ingestion: filtering, tokenization, vocabulary and
//! bag-of-words encoding.

use std::collections::{BTreeMap, HashMap, HashSet};
use std::fs;
use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};

/// Where an image's feature vector lives.
#[derive(Debug, Clone, PartialEq)]
pub enum ImageFeatures {
    Inline(Vec<f64>),
    /// Relative paths resolve against the corpus file's directory.
    File(PathBuf),
}

impl ImageFeatures {
    /// Materializes the vector. `.ppm` files go through the pixmap reader,
    /// anything else is read as whitespace- or comma-separated decimals.
    pub fn resolve(&self, base_dir: &Path) -> Result<Vec<f64>> {
        match self {
            ImageFeatures::Inline(v) => Ok(v.clone()),
            ImageFeatures::File(p) => {
                let path = if p.is_absolute() {
                    p.clone()
                } else {
                    base_dir.join(p)
                };
                if path.extension().is_some_and(|e| e.eq_ignore_ascii_case("ppm")) {
                    return crate::nnet::read_ppm(&path);
                }
                let text = fs::read_to_string(&path).map_err(|e| Error::io(&path, e))?;
                text.split(|c: char| c.is_whitespace() || c == ',')
                    .filter(|s| !s.is_empty())
                    .map(|s| {
                        s.parse::<f64>().map_err(|e| Error::Parse {
                            path: path.display().to_string(),
                            line: 0,
                            message: format!("bad feature value `{s}`: {e}"),
                        })
                    })
                    .collect()
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RawImage {
    pub image_id: String,
    pub caption: String,
    pub features: ImageFeatures,
}

/// An article with its captioned images and optional class label.
#[derive(Debug, Clone, PartialEq)]
pub struct RawDocument {
    pub doc_id: String,
    pub article_text: String,
    pub images: Vec<RawImage>,
    pub class_label: Option<String>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct WireImage {
    image_id: String,
    #[serde(default)]
    caption: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    features: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    features_path: Option<String>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct WireDocument {
    doc_id: String,
    text: String,
    #[serde(default)]
    images: Vec<WireImage>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    label: Option<String>,
}

impl TryFrom<WireDocument> for RawDocument {
    type Error = String;

    fn try_from(w: WireDocument) -> std::result::Result<Self, String> {
        if w.doc_id.is_empty() {
            return Err("empty doc_id".into());
        }
        let images = w
            .images
            .into_iter()
            .map(|img| {
                if img.image_id.is_empty() {
                    return Err("image with empty image_id".to_string());
                }
                let features = match (img.features, img.features_path) {
                    (Some(v), None) => ImageFeatures::Inline(v),
                    (None, Some(p)) => ImageFeatures::File(PathBuf::from(p)),
                    _ => {
                        return Err(format!(
                            "image `{}` needs exactly one of `features` or `features_path`",
                            img.image_id
                        ))
                    }
                };
                Ok(RawImage {
                    image_id: img.image_id,
                    caption: img.caption,
                    features,
                })
            })
            .collect::<std::result::Result<_, _>>()?;
        Ok(RawDocument {
            doc_id: w.doc_id,
            article_text: w.text,
            images,
            class_label: w.label,
        })
    }
}

impl From<&RawDocument> for WireDocument {
    fn from(d: &RawDocument) -> Self {
        WireDocument {
            doc_id: d.doc_id.clone(),
            text: d.article_text.clone(),
            images: d
                .images
                .iter()
                .map(|img| {
                    let (features, features_path) = match &img.features {
                        ImageFeatures::Inline(v) => (Some(v.clone()), None),
                        ImageFeatures::File(p) => (None, Some(p.display().to_string())),
                    };
                    WireImage {
                        image_id: img.image_id.clone(),
                        caption: img.caption.clone(),
                        features,
                        features_path,
                    }
                })
                .collect(),
            label: d.class_label.clone(),
        }
    }
}

/// Reads a JSON-Lines corpus. Blank lines are skipped.
pub fn load_corpus(path: impl AsRef<Path>) -> Result<Vec<RawDocument>> {
    let path = path.as_ref();
    let file = fs::File::open(path).map_err(|e| Error::io(path, e))?;
    read_corpus(BufReader::new(file), &path.display().to_string())
}

pub fn read_corpus<R: BufRead>(reader: R, source: &str) -> Result<Vec<RawDocument>> {
    let mut docs = Vec::new();
    let mut seen = HashSet::new();
    for (i, line) in reader.lines().enumerate() {
        let line = line.map_err(|e| Error::io(source, e))?;
        if line.trim().is_empty() {
            continue;
        }
        let parse_err = |message: String| Error::Parse {
            path: source.to_string(),
            line: i + 1,
            message,
        };
        let wire: WireDocument =
            serde_json::from_str(&line).map_err(|e| parse_err(e.to_string()))?;
        let doc = RawDocument::try_from(wire).map_err(parse_err)?;
        if !seen.insert(doc.doc_id.clone()) {
            return Err(Error::DuplicateId(doc.doc_id));
        }
        docs.push(doc);
    }
    Ok(docs)
}

pub fn write_corpus<W: Write>(mut out: W, docs: &[RawDocument]) -> std::io::Result<()> {
    for d in docs {
        let line = serde_json::to_string(&WireDocument::from(d)).map_err(std::io::Error::other)?;
        writeln!(out, "{line}")?;
    }
    Ok(())
}

pub fn save_corpus(path: impl AsRef<Path>, docs: &[RawDocument]) -> Result<()> {
    let path = path.as_ref();
    let mut buf = Vec::new();
    write_corpus(&mut buf, docs).map_err(|e| Error::io(path, e))?;
    fs::write(path, buf).map_err(|e| Error::io(path, e))
}

const ENGLISH_STOPWORDS: &[&str] = &[
    "about", "above", "after", "again", "against", "all", "also", "am", "an", "and", "any",
    "are", "as", "at", "be", "because", "been", "before", "being", "below", "between", "both",
    "but", "by", "can", "could", "did", "do", "does", "doing", "down", "during", "each", "few",
    "for", "from", "further", "had", "has", "have", "having", "he", "her", "here", "hers",
    "herself", "him", "himself", "his", "how", "if", "in", "into", "is", "it", "its", "itself",
    "just", "may", "me", "might", "more", "most", "must", "my", "myself", "no", "nor", "not",
    "now", "of", "off", "on", "once", "one", "only", "or", "other", "our", "ours", "ourselves",
    "out", "over", "own", "same", "she", "should", "so", "some", "such", "than", "that", "the",
    "their", "theirs", "them", "themselves", "then", "there", "these", "they", "this", "those",
    "through", "to", "too", "under", "until", "up", "upon", "us", "very", "was", "we", "were",
    "what", "when", "where", "which", "while", "who", "whom", "why", "will", "with", "within",
    "would", "you", "your", "yours", "yourself", "yourselves",
];

/// The bundled English stopword list.
pub fn english_stopwords() -> HashSet<String> {
    ENGLISH_STOPWORDS.iter().map(|s| s.to_string()).collect()
}

/// Lowercased maximal alphanumeric runs of at least two characters that are
/// not stopwords, in original order.
pub fn tokenize(text: &str, stopwords: &HashSet<String>) -> Vec<String> {
    text.split(|c: char| !c.is_alphanumeric())
        .filter(|run| run.chars().nth(1).is_some())
        .map(str::to_lowercase)
        .filter(|tok| !stopwords.contains(tok))
        .collect()
}

/// A [`tokenize`] configuration bundled with its stopword set.
#[derive(Debug, Clone)]
pub struct Tokenizer {
    stopwords: HashSet<String>,
}

impl Tokenizer {
    pub fn new(stopwords: HashSet<String>) -> Self {
        Tokenizer { stopwords }
    }

    pub fn english() -> Self {
        Tokenizer::new(english_stopwords())
    }

    pub fn tokenize(&self, text: &str) -> Vec<String> {
        tokenize(text, &self.stopwords)
    }
}

impl Default for Tokenizer {
    fn default() -> Self {
        Tokenizer::english()
    }
}

/// Keeps documents whose article has at least `min_words` tokens. With
/// `require_caption`, images with blank captions are removed first; documents
/// left without images are dropped either way.
pub fn filter_corpus(
    docs: &[RawDocument],
    min_words: usize,
    require_caption: bool,
    tokenizer: &Tokenizer,
) -> Vec<RawDocument> {
    docs.iter()
        .filter(|d| tokenizer.tokenize(&d.article_text).len() >= min_words)
        .filter_map(|d| {
            let mut d = d.clone();
            if require_caption {
                d.images.retain(|img| !img.caption.trim().is_empty());
            }
            (!d.images.is_empty()).then_some(d)
        })
        .collect()
}

/// Word ↔ id mapping. Ids are contiguous from zero.
#[derive(Debug, Clone)]
pub struct Vocabulary {
    words: Vec<String>,
    word_to_id: HashMap<String, u32>,
    // empty when loaded from a file, which stores words only
    doc_freq: Vec<usize>,
}

impl PartialEq for Vocabulary {
    fn eq(&self, other: &Self) -> bool {
        self.words == other.words
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VocabConfig {
    pub min_df: usize,
    pub max_df_fraction: f64,
    pub max_size: usize,
}

impl Default for VocabConfig {
    fn default() -> Self {
        VocabConfig {
            min_df: 5,
            max_df_fraction: 0.5,
            max_size: 10_000,
        }
    }
}

impl Vocabulary {
    /// Builds a vocabulary from an explicit word list; ids follow list order.
    pub fn from_words<S: Into<String>>(words: impl IntoIterator<Item = S>) -> Result<Self> {
        let words: Vec<String> = words.into_iter().map(Into::into).collect();
        if words.is_empty() {
            return Err(Error::EmptyVocabulary);
        }
        let mut word_to_id = HashMap::with_capacity(words.len());
        for (i, w) in words.iter().enumerate() {
            if w.is_empty() || w.chars().any(char::is_whitespace) {
                return Err(Error::VocabularyMismatch(format!("invalid word `{w}`")));
            }
            if word_to_id.insert(w.clone(), i as u32).is_some() {
                return Err(Error::DuplicateId(w.clone()));
            }
        }
        Ok(Vocabulary {
            words,
            word_to_id,
            doc_freq: Vec::new(),
        })
    }

    pub fn len(&self) -> usize {
        self.words.len()
    }

    pub fn is_empty(&self) -> bool {
        self.words.is_empty()
    }

    pub fn id(&self, word: &str) -> Option<u32> {
        self.word_to_id.get(word).copied()
    }

    pub fn word(&self, id: u32) -> Option<&str> {
        self.words.get(id as usize).map(String::as_str)
    }

    pub fn words(&self) -> &[String] {
        &self.words
    }

    /// Document frequency recorded at build time; `None` for loaded vocabularies.
    pub fn doc_freq(&self, id: u32) -> Option<usize> {
        self.doc_freq.get(id as usize).copied()
    }

    /// File form: a `V=<count>` header, then one word per line (line order = id).
    pub fn to_text(&self) -> String {
        let mut s = format!("V={}\n", self.words.len());
        for w in &self.words {
            s.push_str(w);
            s.push('\n');
        }
        s
    }

    pub fn from_text(text: &str, source: &str) -> Result<Self> {
        let perr = |line: usize, message: String| Error::Parse {
            path: source.to_string(),
            line,
            message,
        };
        let mut lines = text.lines();
        let header = lines.next().ok_or_else(|| perr(1, "missing header".into()))?;
        let count: usize = header
            .strip_prefix("V=")
            .and_then(|n| n.parse().ok())
            .ok_or_else(|| perr(1, format!("bad header `{header}`")))?;
        let words: Vec<&str> = lines.collect();
        if words.len() != count {
            return Err(perr(
                words.len() + 1,
                format!("header declares {count} words, found {}", words.len()),
            ));
        }
        if let Some(i) = words.iter().position(|w| w.is_empty()) {
            return Err(perr(i + 2, "empty word".into()));
        }
        Vocabulary::from_words(words.iter().copied())
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        fs::write(path, self.to_text()).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Vocabulary::from_text(&text, &path.display().to_string())
    }

    /// Hex digest identifying this exact word list.
    pub fn hash(&self) -> String {
        let digest = Sha256::digest(self.to_text().as_bytes());
        hex::encode(&digest[..16])
    }
}

/// Keeps words with `min_df ≤ df ≤ max_df_fraction·|docs|`, ranks them by
/// descending total count (ties lexicographic), truncates to `max_size`.
pub fn build_vocabulary(docs: &[Vec<String>], config: &VocabConfig) -> Result<Vocabulary> {
    if config.min_df < 1 {
        return Err(Error::InvalidHyperparameter("min_df must be ≥ 1".into()));
    }
    if !(config.max_df_fraction > 0.0 && config.max_df_fraction <= 1.0) {
        return Err(Error::InvalidHyperparameter(
            "max_df_fraction must lie in (0, 1]".into(),
        ));
    }
    let mut stats: HashMap<&str, (usize, usize)> = HashMap::new();
    for doc in docs {
        let mut seen = HashSet::new();
        for tok in doc {
            let entry = stats.entry(tok.as_str()).or_default();
            entry.1 += 1;
            if seen.insert(tok.as_str()) {
                entry.0 += 1;
            }
        }
    }
    let max_df = config.max_df_fraction * docs.len() as f64;
    let mut kept: Vec<(&str, usize, usize)> = stats
        .into_iter()
        .filter(|(_, (df, _))| *df >= config.min_df && *df as f64 <= max_df)
        .map(|(w, (df, total))| (w, df, total))
        .collect();
    kept.sort_by(|a, b| b.2.cmp(&a.2).then_with(|| a.0.cmp(b.0)));
    kept.truncate(config.max_size);
    if kept.is_empty() {
        return Err(Error::EmptyVocabulary);
    }
    let mut vocab = Vocabulary::from_words(kept.iter().map(|k| k.0))?;
    vocab.doc_freq = kept.iter().map(|k| k.1).collect();
    Ok(vocab)
}

/// Bag of words: `(word_id, count)` pairs with strictly increasing ids.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct SparseDoc {
    entries: Vec<(u32, u32)>,
    total_tokens: usize,
}

impl SparseDoc {
    pub fn new(entries: Vec<(u32, u32)>) -> Result<Self> {
        if entries.windows(2).any(|w| w[0].0 >= w[1].0) {
            return Err(Error::InvalidDimension(
                "word ids must be strictly increasing".into(),
            ));
        }
        if entries.iter().any(|e| e.1 == 0) {
            return Err(Error::InvalidDimension("counts must be positive".into()));
        }
        let total_tokens = entries.iter().map(|e| e.1 as usize).sum();
        Ok(SparseDoc {
            entries,
            total_tokens,
        })
    }

    /// Counts a sequence of word ids.
    pub fn from_word_ids(ids: impl IntoIterator<Item = u32>) -> Self {
        let mut counts = BTreeMap::new();
        for id in ids {
            *counts.entry(id).or_insert(0u32) += 1;
        }
        let entries: Vec<_> = counts.into_iter().collect();
        let total_tokens = entries.iter().map(|e| e.1 as usize).sum();
        SparseDoc {
            entries,
            total_tokens,
        }
    }

    pub fn entries(&self) -> &[(u32, u32)] {
        &self.entries
    }

    pub fn total_tokens(&self) -> usize {
        self.total_tokens
    }

    pub fn is_empty(&self) -> bool {
        self.total_tokens == 0
    }

    /// One word id per token, grouped by id in ascending order.
    pub fn tokens(&self) -> impl Iterator<Item = u32> + '_ {
        self.entries
            .iter()
            .flat_map(|&(w, c)| std::iter::repeat_n(w, c as usize))
    }

    pub fn max_word_id(&self) -> Option<u32> {
        self.entries.last().map(|e| e.0)
    }
}

/// Counts in-vocabulary tokens; unknown tokens are dropped.
pub fn encode<S: AsRef<str>>(tokens: &[S], vocab: &Vocabulary) -> SparseDoc {
    SparseDoc::from_word_ids(tokens.iter().filter_map(|t| vocab.id(t.as_ref())))
}
