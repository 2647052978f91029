//! Ground-truth corpora drawn from the LDA generative process, with images
//! whose features are a noisy linear embedding of their caption's topics.

use std::fs;
use std::path::Path;

use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::corpus::{ImageFeatures, RawDocument, RawImage, SparseDoc, Vocabulary};
use crate::distribution::TopicDistribution;
use crate::error::{Error, Result};
use crate::lda::check_phi_rows;
use crate::linalg::Matrix;
use crate::sampling::{categorical, dirichlet, rng_from_seed, SeededRng};

pub const TRUTH_FORMAT: &str = "topicnet-synth-truth";
pub const TRUTH_VERSION: u32 = 1;

/// Weight of the article's proportions in each caption's proportions.
pub const CAPTION_ARTICLE_WEIGHT: f64 = 0.5;

/// K topics over V words; topic `t` is uniform over its own contiguous block
/// of roughly V/K words and zero elsewhere.
pub fn disjoint_phi(k: usize, v: usize) -> Result<Matrix> {
    if k == 0 || v < k {
        return Err(Error::InvalidDimension(format!(
            "cannot split {v} words into {k} disjoint topics"
        )));
    }
    let mut phi = Matrix::zeros(k, v);
    for w in 0..v {
        phi[(w * k / v, w)] = 1.0;
    }
    for t in 0..k {
        let row = phi.row_mut(t);
        let n: f64 = row.iter().sum();
        row.iter_mut().for_each(|p| *p /= n);
    }
    Ok(phi)
}

/// Synthetic word token `id` as it appears in emitted text.
pub fn word_name(id: u32) -> String {
    format!("w{id:04}")
}

#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticImage {
    pub article: usize,
    pub caption: SparseDoc,
    pub caption_words: Vec<u32>,
    pub caption_theta: TopicDistribution,
    pub features: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticCorpus {
    pub true_phi: Matrix,
    pub alpha: f64,
    pub docs: Vec<SparseDoc>,
    pub true_thetas: Vec<TopicDistribution>,
    /// Words of each document in generation order.
    pub doc_words: Vec<Vec<u32>>,
    /// Topic drawn for each token of `doc_words`.
    pub doc_topics: Vec<Vec<u32>>,
    pub images: Vec<SyntheticImage>,
    pub feature_map: Option<Matrix>,
}

/// Image-feature embedding used by [`generate_multimodal`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum FeatureMap {
    /// Seeded standard-normal entries, redrawn until full rank.
    #[default]
    Random,
    /// Identity on the first K coordinates, zeros after.
    IdentityPadded,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MultimodalConfig {
    pub alpha: f64,
    pub n_articles: usize,
    pub images_per_article: usize,
    pub doc_len: usize,
    pub caption_len: usize,
    pub feature_dim: usize,
    pub noise_sigma: f64,
    pub feature_map: FeatureMap,
    pub seed: u64,
}

impl Default for MultimodalConfig {
    fn default() -> Self {
        MultimodalConfig {
            alpha: 0.2,
            n_articles: 500,
            images_per_article: 2,
            doc_len: 60,
            caption_len: 30,
            feature_dim: 16,
            noise_sigma: 0.01,
            feature_map: FeatureMap::Random,
            seed: 0,
        }
    }
}

fn draw_words(rng: &mut SeededRng, theta: &[f64], phi: &Matrix, len: usize) -> (Vec<u32>, Vec<u32>) {
    let mut words = Vec::with_capacity(len);
    let mut topics = Vec::with_capacity(len);
    for _ in 0..len {
        let t = categorical(rng, theta, 1.0);
        let w = categorical(rng, phi.row(t), 1.0);
        topics.push(t as u32);
        words.push(w as u32);
    }
    (words, topics)
}

fn check_inputs(true_phi: &Matrix, alpha: f64) -> Result<()> {
    if true_phi.rows() == 0 || true_phi.cols() == 0 {
        return Err(Error::InvalidDimension("empty topic-word matrix".into()));
    }
    check_phi_rows(true_phi)?;
    if !(alpha > 0.0 && alpha.is_finite()) {
        return Err(Error::InvalidHyperparameter(format!("alpha = {alpha}")));
    }
    Ok(())
}

/// Per document: theta ~ Dirichlet(alpha); per token: topic ~ theta, then
/// word ~ phi[topic].
pub fn generate_corpus(
    true_phi: &Matrix,
    alpha: f64,
    n_docs: usize,
    doc_len: usize,
    seed: u64,
) -> Result<SyntheticCorpus> {
    check_inputs(true_phi, alpha)?;
    if doc_len == 0 {
        return Err(Error::InvalidDimension("doc_len must be ≥ 1".into()));
    }
    let mut rng = rng_from_seed(seed);
    let k = true_phi.rows();
    let mut corpus = SyntheticCorpus {
        true_phi: true_phi.clone(),
        alpha,
        docs: Vec::with_capacity(n_docs),
        true_thetas: Vec::with_capacity(n_docs),
        doc_words: Vec::with_capacity(n_docs),
        doc_topics: Vec::with_capacity(n_docs),
        images: Vec::new(),
        feature_map: None,
    };
    for _ in 0..n_docs {
        let theta = dirichlet(&mut rng, alpha, k);
        let (words, topics) = draw_words(&mut rng, &theta, true_phi, doc_len);
        corpus.docs.push(SparseDoc::from_word_ids(words.iter().copied()));
        corpus.true_thetas.push(TopicDistribution::from_weights(theta)?);
        corpus.doc_words.push(words);
        corpus.doc_topics.push(topics);
    }
    Ok(corpus)
}

fn feature_matrix(rng: &mut SeededRng, map: FeatureMap, dim: usize, k: usize) -> Matrix {
    match map {
        FeatureMap::IdentityPadded => {
            let mut a = Matrix::zeros(dim, k);
            for i in 0..k {
                a[(i, i)] = 1.0;
            }
            a
        }
        FeatureMap::Random => {
            let normal = Normal::new(0.0, 1.0).unwrap();
            loop {
                let data = (0..dim * k).map(|_| normal.sample(rng)).collect();
                let a = Matrix::from_vec(dim, k, data).unwrap();
                if a.rank(1e-9) == k {
                    return a;
                }
            }
        }
    }
}

/// Articles as in [`generate_corpus`], each with `images_per_article` images.
///
/// A caption's proportions mix its article's proportions with a fresh
/// Dirichlet draw at equal weight; its words follow the generative process;
/// its image features are `A·theta_caption + N(0, noise_sigma²)` for a fixed
/// `feature_dim × K` matrix `A`.
pub fn generate_multimodal(true_phi: &Matrix, config: &MultimodalConfig) -> Result<SyntheticCorpus> {
    let k = true_phi.rows();
    if config.feature_dim < k {
        return Err(Error::InvalidDimension(format!(
            "feature_dim {} < K {k}",
            config.feature_dim
        )));
    }
    if !(config.noise_sigma >= 0.0 && config.noise_sigma.is_finite()) {
        return Err(Error::InvalidDimension(format!("noise_sigma = {}", config.noise_sigma)));
    }
    if config.caption_len == 0 {
        return Err(Error::InvalidDimension("caption_len must be ≥ 1".into()));
    }
    let mut corpus = generate_corpus(true_phi, config.alpha, config.n_articles, config.doc_len, config.seed)?;
    // separate stream so the text part matches generate_corpus for the same seed
    let mut rng = rng_from_seed(config.seed ^ 0x9e37_79b9_7f4a_7c15);
    let a = feature_matrix(&mut rng, config.feature_map, config.feature_dim, k);
    let noise = Normal::new(0.0, config.noise_sigma).unwrap();
    for (d, article_theta) in corpus.true_thetas.iter().enumerate() {
        for _ in 0..config.images_per_article {
            let fresh = dirichlet(&mut rng, config.alpha, k);
            let mixed: Vec<f64> = article_theta
                .as_slice()
                .iter()
                .zip(&fresh)
                .map(|(g, f)| CAPTION_ARTICLE_WEIGHT * g + (1.0 - CAPTION_ARTICLE_WEIGHT) * f)
                .collect();
            let caption_theta = TopicDistribution::from_weights(mixed)?;
            let (words, _) = draw_words(&mut rng, caption_theta.as_slice(), true_phi, config.caption_len);
            let mut features = a.mat_vec(caption_theta.as_slice())?;
            if config.noise_sigma > 0.0 {
                features.iter_mut().for_each(|x| *x += noise.sample(&mut rng));
            }
            corpus.images.push(SyntheticImage {
                article: d,
                caption: SparseDoc::from_word_ids(words.iter().copied()),
                caption_words: words,
                caption_theta,
                features,
            });
        }
    }
    corpus.feature_map = Some(a);
    Ok(corpus)
}

impl SyntheticCorpus {
    pub fn k(&self) -> usize {
        self.true_phi.rows()
    }

    /// Vocabulary whose ids coincide with the generator's word ids.
    pub fn vocabulary(&self) -> Vocabulary {
        Vocabulary::from_words((0..self.true_phi.cols() as u32).map(word_name))
            .expect("synthetic vocabulary is non-empty")
    }

    /// Class of each article: its dominant true topic.
    pub fn article_labels(&self) -> Vec<String> {
        self.true_thetas
            .iter()
            .map(|t| format!("topic{}", t.argmax()))
            .collect()
    }

    pub fn doc_id(d: usize) -> String {
        format!("a{d:05}")
    }

    pub fn image_id(&self, i: usize) -> String {
        let img = &self.images[i];
        let nth = self.images[..i].iter().filter(|o| o.article == img.article).count();
        format!("{}-i{nth}", SyntheticCorpus::doc_id(img.article))
    }

    /// Renders the corpus as ingestible documents with inline features.
    pub fn to_raw_documents(&self) -> Vec<RawDocument> {
        let labels = self.article_labels();
        let text = |ws: &[u32]| ws.iter().map(|&w| word_name(w)).collect::<Vec<_>>().join(" ");
        let mut docs: Vec<RawDocument> = self
            .doc_words
            .iter()
            .enumerate()
            .map(|(d, ws)| RawDocument {
                doc_id: SyntheticCorpus::doc_id(d),
                article_text: text(ws),
                images: Vec::new(),
                class_label: Some(labels[d].clone()),
            })
            .collect();
        for (i, img) in self.images.iter().enumerate() {
            let image_id = self.image_id(i);
            docs[img.article].images.push(RawImage {
                image_id,
                caption: text(&img.caption_words),
                features: ImageFeatures::Inline(img.features.clone()),
            });
        }
        docs
    }

    pub fn truth(&self) -> Truth {
        Truth {
            format: TRUTH_FORMAT.into(),
            version: TRUTH_VERSION,
            alpha: self.alpha,
            true_phi: self.true_phi.iter_rows().map(<[f64]>::to_vec).collect(),
            article_thetas: self.true_thetas.clone(),
            caption_thetas: self
                .images
                .iter()
                .enumerate()
                .map(|(i, img)| (self.image_id(i), img.caption_theta.clone()))
                .collect(),
        }
    }

    /// Mean of the true article proportions.
    pub fn mean_theta(&self) -> Vec<f64> {
        let mut mean = vec![0.0; self.k()];
        for t in &self.true_thetas {
            for (m, p) in mean.iter_mut().zip(t.as_slice()) {
                *m += p;
            }
        }
        let n = self.true_thetas.len().max(1) as f64;
        mean.iter_mut().for_each(|m| *m /= n);
        mean
    }

    /// Empirical word distribution across all documents.
    pub fn empirical_word_distribution(&self) -> Vec<f64> {
        let mut counts = vec![0.0; self.true_phi.cols()];
        let mut total = 0.0;
        for d in &self.docs {
            for &(w, c) in d.entries() {
                counts[w as usize] += c as f64;
                total += c as f64;
            }
        }
        counts.iter_mut().for_each(|c| *c /= total);
        counts
    }
}

/// Sidecar file with the generator's hidden variables.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Truth {
    pub format: String,
    pub version: u32,
    pub alpha: f64,
    pub true_phi: Vec<Vec<f64>>,
    pub article_thetas: Vec<TopicDistribution>,
    pub caption_thetas: Vec<(String, TopicDistribution)>,
}

impl Truth {
    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        fs::write(path, serde_json::to_string(self)?).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let truth: Truth = serde_json::from_str(&text)?;
        if truth.format != TRUTH_FORMAT || truth.version != TRUTH_VERSION {
            return Err(Error::Format(format!("not a {TRUTH_FORMAT} v{TRUTH_VERSION} file")));
        }
        Ok(truth)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::least_squares;

    #[test]
    fn disjoint_phi_blocks() {
        let phi = disjoint_phi(3, 30).unwrap();
        for t in 0..3 {
            let row = phi.row(t);
            assert_eq!(row.iter().filter(|&&p| p > 0.0).count(), 10);
            assert!((row.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        }
        assert!(disjoint_phi(4, 3).is_err());
    }

    #[test]
    fn one_hot_topics_force_words() {
        let phi = Matrix::from_rows(&[[1.0, 0.0], [0.0, 1.0]]).unwrap();
        let c = generate_corpus(&phi, 0.5, 50, 20, 9).unwrap();
        for (ws, ts) in c.doc_words.iter().zip(&c.doc_topics) {
            assert_eq!(ws, ts);
        }
    }

    #[test]
    fn large_alpha_gives_near_uniform_mean() {
        let phi = disjoint_phi(4, 8).unwrap();
        let c = generate_corpus(&phi, 1000.0, 1000, 1, 2).unwrap();
        for m in c.mean_theta() {
            assert!((m - 0.25).abs() < 0.05);
        }
    }

    #[test]
    fn generation_is_seeded() {
        let phi = disjoint_phi(3, 12).unwrap();
        let cfg = MultimodalConfig {
            n_articles: 20,
            ..Default::default()
        };
        assert_eq!(generate_multimodal(&phi, &cfg).unwrap(), generate_multimodal(&phi, &cfg).unwrap());
        let other = MultimodalConfig { seed: 1, ..cfg };
        assert_ne!(generate_multimodal(&phi, &cfg).unwrap(), generate_multimodal(&phi, &other).unwrap());
    }

    #[test]
    fn invalid_phi_rejected() {
        let bad = Matrix::from_rows(&[[0.5, 0.4], [0.5, 0.5]]).unwrap();
        assert!(matches!(generate_corpus(&bad, 0.1, 5, 5, 0), Err(Error::InvalidPhi { row: 0 })));
        let phi = disjoint_phi(3, 9).unwrap();
        let cfg = MultimodalConfig {
            feature_dim: 2,
            ..Default::default()
        };
        assert!(matches!(generate_multimodal(&phi, &cfg), Err(Error::InvalidDimension(_))));
    }

    #[test]
    fn identity_map_without_noise_reproduces_caption_theta() {
        let phi = disjoint_phi(3, 9).unwrap();
        let cfg = MultimodalConfig {
            n_articles: 10,
            feature_dim: 5,
            noise_sigma: 0.0,
            feature_map: FeatureMap::IdentityPadded,
            ..Default::default()
        };
        let c = generate_multimodal(&phi, &cfg).unwrap();
        for img in &c.images {
            assert_eq!(&img.features[..3], img.caption_theta.as_slice());
            assert_eq!(&img.features[3..], &[0.0, 0.0]);
        }
    }

    #[test]
    fn images_share_their_article() {
        let phi = disjoint_phi(3, 9).unwrap();
        let cfg = MultimodalConfig {
            n_articles: 4,
            images_per_article: 3,
            ..Default::default()
        };
        let c = generate_multimodal(&phi, &cfg).unwrap();
        assert_eq!(c.images.len(), 12);
        for (i, img) in c.images.iter().enumerate() {
            assert_eq!(img.article, i / 3);
        }
        let raw = c.to_raw_documents();
        assert!(raw.iter().all(|d| d.images.len() == 3));
        assert_eq!(raw[1].images[2].image_id, "a00001-i2");
    }

    #[test]
    fn features_are_linearly_decodable() {
        let phi = disjoint_phi(4, 20).unwrap();
        let cfg = MultimodalConfig {
            n_articles: 500,
            images_per_article: 2,
            noise_sigma: 0.01,
            seed: 5,
            ..Default::default()
        };
        let c = generate_multimodal(&phi, &cfg).unwrap();
        assert_eq!(c.images.len(), 1000);
        // least squares per topic coordinate: theta_k ≈ x·w_k + b_k
        let design: Vec<Vec<f64>> = c
            .images
            .iter()
            .map(|img| img.features.iter().copied().chain([1.0]).collect())
            .collect();
        let a = Matrix::from_rows(&design).unwrap();
        let mut l1 = 0.0;
        let coefs: Vec<Vec<f64>> = (0..4)
            .map(|t| {
                let y: Vec<f64> = c.images.iter().map(|i| i.caption_theta.as_slice()[t]).collect();
                least_squares(&a, &y, 1e-9).unwrap()
            })
            .collect();
        for (row, img) in design.iter().zip(&c.images) {
            for t in 0..4 {
                let pred: f64 = row.iter().zip(&coefs[t]).map(|(x, w)| x * w).sum();
                l1 += (pred - img.caption_theta.as_slice()[t]).abs();
            }
        }
        assert!(l1 / 1000.0 < 0.05, "mean L1 {}", l1 / 1000.0);
    }

    #[test]
    fn empirical_word_distribution_converges() {
        let phi = disjoint_phi(3, 30).unwrap();
        let c = generate_corpus(&phi, 0.5, 2000, 60, 8).unwrap();
        let emp = c.empirical_word_distribution();
        // E[theta] is uniform under a symmetric prior
        let expected: Vec<f64> = (0..30)
            .map(|w| (0..3).map(|t| phi[(t, w)] / 3.0).sum())
            .collect();
        let tv: f64 = emp.iter().zip(&expected).map(|(a, b)| (a - b).abs()).sum::<f64>() / 2.0;
        assert!(tv < 0.05, "tv {tv}");
    }
}
