//! Ranking metrics and the linear-probe feature evaluation.

use std::collections::BTreeMap;
use std::io::Write;

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::distribution::TopicDistribution;
use crate::error::{Error, Result};
use crate::linalg::{dot, Matrix};
use crate::nnet::logistic;
use crate::retrieval::{Modality, QueryOptions, RetrievalIndex};
use crate::sampling::rng_from_seed;

/// Non-interpolated average precision of a full ranking:
/// the mean, over relevant positions `r`, of precision at `r`.
pub fn average_precision(relevance: &[bool]) -> Result<f64> {
    let mut hits = 0usize;
    let mut sum = 0.0;
    for (i, &rel) in relevance.iter().enumerate() {
        if rel {
            hits += 1;
            sum += hits as f64 / (i + 1) as f64;
        }
    }
    if hits == 0 {
        return Err(Error::NoRelevantItems(Vec::new()));
    }
    Ok(sum / hits as f64)
}

/// AP of items ranked by descending score (ties by position).
pub fn average_precision_from_scores(scores: &[f64], relevant: &[bool]) -> Result<f64> {
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]).then(a.cmp(&b)));
    let ranked: Vec<bool> = order.iter().map(|&i| relevant[i]).collect();
    average_precision(&ranked)
}

/// A labeled query searched against one modality.
#[derive(Debug, Clone, PartialEq)]
pub struct EvalQuery {
    pub distribution: TopicDistribution,
    pub label: String,
    pub target: Modality,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MapReport {
    pub map: f64,
    pub per_class: BTreeMap<String, f64>,
    pub average_precisions: Vec<f64>,
}

/// Ranks the full target-modality list for each query, with relevance meaning
/// an equal class label. Queries lacking any relevant item are reported together.
pub fn map_score(index: &RetrievalIndex, queries: &[EvalQuery], opts: &QueryOptions) -> Result<MapReport> {
    if queries.is_empty() {
        return Err(Error::EmptyCorpus);
    }
    let mut aps = Vec::with_capacity(queries.len());
    let mut failed = Vec::new();
    for (qi, q) in queries.iter().enumerate() {
        let ranked = index.rank_all(&q.distribution, q.target, opts)?;
        let rel: Vec<bool> = ranked
            .iter()
            .map(|h| h.label.as_deref() == Some(q.label.as_str()))
            .collect();
        match average_precision(&rel) {
            Ok(ap) => aps.push(ap),
            Err(_) => failed.push(qi),
        }
    }
    if !failed.is_empty() {
        return Err(Error::NoRelevantItems(failed));
    }
    let mut per_class: BTreeMap<String, (f64, usize)> = BTreeMap::new();
    for (q, ap) in queries.iter().zip(&aps) {
        let e = per_class.entry(q.label.clone()).or_default();
        e.0 += ap;
        e.1 += 1;
    }
    Ok(MapReport {
        map: aps.iter().sum::<f64>() / aps.len() as f64,
        per_class: per_class.into_iter().map(|(k, (s, n))| (k, s / n as f64)).collect(),
        average_precisions: aps,
    })
}

/// Every labeled item of `modality` as a query against the opposite modality.
pub fn queries_from_index(index: &RetrievalIndex, modality: Modality) -> Vec<EvalQuery> {
    index
        .of_modality(modality)
        .filter_map(|item| {
            item.label.as_ref().map(|label| EvalQuery {
                distribution: item.distribution.clone(),
                label: label.clone(),
                target: modality.opposite(),
            })
        })
        .collect()
}

/// MAP of image→text and text→image retrieval over one index.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CrossModalReport {
    pub image_query: MapReport,
    pub text_query: MapReport,
}

impl CrossModalReport {
    pub fn average(&self) -> f64 {
        (self.image_query.map + self.text_query.map) / 2.0
    }
}

pub fn cross_modal_map(index: &RetrievalIndex, opts: &QueryOptions) -> Result<CrossModalReport> {
    Ok(CrossModalReport {
        image_query: map_score(index, &queries_from_index(index, Modality::Image), opts)?,
        text_query: map_score(index, &queries_from_index(index, Modality::Text), opts)?,
    })
}

/// MAP after randomly permuting the class labels of the index items.
pub fn label_permutation_baseline(
    index: &RetrievalIndex,
    queries: &[EvalQuery],
    opts: &QueryOptions,
    seed: u64,
) -> Result<f64> {
    let mut labels: Vec<Option<String>> = index.items().iter().map(|i| i.label.clone()).collect();
    labels.shuffle(&mut rng_from_seed(seed));
    let items = index
        .items()
        .iter()
        .cloned()
        .zip(labels)
        .map(|(mut item, label)| {
            item.label = label;
            item
        })
        .collect();
    let permuted = crate::retrieval::build_index(items)?;
    Ok(map_score(&permuted, queries, opts)?.map)
}

/// Mean of [`label_permutation_baseline`] over `permutations` shuffles seeded
/// `seed, seed+1, …`.
pub fn mean_permutation_baseline(
    index: &RetrievalIndex,
    queries: &[EvalQuery],
    opts: &QueryOptions,
    seed: u64,
    permutations: usize,
) -> Result<f64> {
    if permutations == 0 {
        return Err(Error::InvalidHyperparameter("permutations must be ≥ 1".into()));
    }
    let mut total = 0.0;
    for i in 0..permutations as u64 {
        total += label_permutation_baseline(index, queries, opts, seed.wrapping_add(i))?;
    }
    Ok(total / permutations as f64)
}

/// `class,ap` rows in label order.
pub fn write_per_class_csv<W: Write>(mut out: W, per_class: &BTreeMap<String, f64>) -> std::io::Result<()> {
    writeln!(out, "class,ap")?;
    for (class, ap) in per_class {
        writeln!(out, "{class},{ap}")?;
    }
    Ok(())
}

/// `query_modality,map` rows for image queries, text queries and their average.
pub fn write_summary_csv<W: Write>(mut out: W, report: &CrossModalReport) -> std::io::Result<()> {
    writeln!(out, "query_modality,map")?;
    writeln!(out, "image,{}", report.image_query.map)?;
    writeln!(out, "text,{}", report.text_query.map)?;
    writeln!(out, "average,{}", report.average())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProbeConfig {
    pub epochs: usize,
    pub learning_rates: Vec<f64>,
    pub l2_penalties: Vec<f64>,
    /// Fraction of each class held out for validation.
    pub val_fraction: f64,
    pub split_seed: u64,
}

impl Default for ProbeConfig {
    fn default() -> Self {
        ProbeConfig {
            epochs: 200,
            learning_rates: vec![0.1, 0.01],
            l2_penalties: vec![1e-4, 1e-3, 1e-2],
            val_fraction: 0.3,
            split_seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ProbeReport {
    pub per_class_ap: Vec<f64>,
    pub mean_ap: f64,
    /// Selected `(learning_rate, l2)` per class.
    pub selected: Vec<(f64, f64)>,
    /// Share of validation examples in each class.
    pub class_priors: Vec<f64>,
}

fn stratified_split(labels: &[usize], n_classes: usize, cfg: &ProbeConfig) -> Result<(Vec<usize>, Vec<usize>)> {
    let mut rng = rng_from_seed(cfg.split_seed);
    let (mut train, mut val) = (Vec::new(), Vec::new());
    for c in 0..n_classes {
        let mut members: Vec<usize> = (0..labels.len()).filter(|&i| labels[i] == c).collect();
        members.shuffle(&mut rng);
        let n_val = ((members.len() as f64 * cfg.val_fraction).round() as usize).max(1);
        if members.len() < n_val + 2 {
            return Err(Error::DegenerateSplit(format!(
                "class {c} has {} examples; need ≥ 2 for training and ≥ 1 for validation",
                members.len()
            )));
        }
        val.extend_from_slice(&members[..n_val]);
        train.extend_from_slice(&members[n_val..]);
    }
    train.sort_unstable();
    val.sort_unstable();
    Ok((train, val))
}

fn fit_logistic(rows: &[Vec<f64>], y: &[f64], lr: f64, l2: f64, epochs: usize) -> (Vec<f64>, f64) {
    let d = rows.first().map_or(0, Vec::len);
    let n = rows.len() as f64;
    let (mut w, mut b) = (vec![0.0; d], 0.0);
    let mut gw = vec![0.0; d];
    for _ in 0..epochs {
        gw.iter_mut().for_each(|g| *g = 0.0);
        let mut gb = 0.0;
        for (x, &t) in rows.iter().zip(y) {
            let err = logistic(dot(&w, x) + b) - t;
            for (g, xi) in gw.iter_mut().zip(x) {
                *g += err * xi;
            }
            gb += err;
        }
        for (wi, g) in w.iter_mut().zip(&gw) {
            *wi -= lr * (g / n + l2 * *wi);
        }
        b -= lr * gb / n;
    }
    (w, b)
}

/// One-vs-all logistic classifiers on frozen features. Each class's
/// `(lr, l2)` is chosen by validation AP on a stratified held-out split,
/// and that AP is reported.
pub fn linear_probe(features: &Matrix, labels: &[usize], n_classes: usize, cfg: &ProbeConfig) -> Result<ProbeReport> {
    if features.rows() != labels.len() {
        return Err(Error::DimensionMismatch {
            expected: features.rows(),
            got: labels.len(),
        });
    }
    if features.as_slice().iter().any(|v| !v.is_finite()) {
        return Err(Error::InvalidDimension("features must be finite".into()));
    }
    if let Some(&bad) = labels.iter().find(|&&l| l >= n_classes) {
        return Err(Error::InvalidDimension(format!("label {bad} ≥ n_classes {n_classes}")));
    }
    if cfg.learning_rates.is_empty() || cfg.l2_penalties.is_empty() {
        return Err(Error::InvalidHyperparameter("empty search grid".into()));
    }
    let (train, val) = stratified_split(labels, n_classes, cfg)?;

    // standardize with training statistics
    let d = features.cols();
    let mut mean = vec![0.0; d];
    let mut var = vec![0.0; d];
    for &i in &train {
        for (m, x) in mean.iter_mut().zip(features.row(i)) {
            *m += x;
        }
    }
    mean.iter_mut().for_each(|m| *m /= train.len() as f64);
    for &i in &train {
        for ((v, x), m) in var.iter_mut().zip(features.row(i)).zip(&mean) {
            *v += (x - m) * (x - m);
        }
    }
    let scale: Vec<f64> = var
        .iter()
        .map(|v| {
            let sd = (v / train.len() as f64).sqrt();
            if sd > 1e-12 {
                1.0 / sd
            } else {
                0.0
            }
        })
        .collect();
    let standardize = |i: usize| -> Vec<f64> {
        features
            .row(i)
            .iter()
            .zip(&mean)
            .zip(&scale)
            .map(|((x, m), s)| (x - m) * s)
            .collect()
    };
    let train_x: Vec<Vec<f64>> = train.iter().map(|&i| standardize(i)).collect();
    let val_x: Vec<Vec<f64>> = val.iter().map(|&i| standardize(i)).collect();

    let mut per_class_ap = Vec::with_capacity(n_classes);
    let mut selected = Vec::with_capacity(n_classes);
    let mut class_priors = Vec::with_capacity(n_classes);
    for c in 0..n_classes {
        let y: Vec<f64> = train.iter().map(|&i| (labels[i] == c) as u8 as f64).collect();
        let rel: Vec<bool> = val.iter().map(|&i| labels[i] == c).collect();
        class_priors.push(rel.iter().filter(|&&r| r).count() as f64 / rel.len() as f64);
        let mut best: Option<(f64, f64, f64)> = None;
        for &lr in &cfg.learning_rates {
            for &l2 in &cfg.l2_penalties {
                let (w, b) = fit_logistic(&train_x, &y, lr, l2, cfg.epochs);
                let scores: Vec<f64> = val_x.iter().map(|x| dot(&w, x) + b).collect();
                let ap = average_precision_from_scores(&scores, &rel)?;
                if best.is_none_or(|(a, _, _)| ap > a) {
                    best = Some((ap, lr, l2));
                }
            }
        }
        let (ap, lr, l2) = best.expect("grid is non-empty");
        per_class_ap.push(ap);
        selected.push((lr, l2));
    }
    Ok(ProbeReport {
        mean_ap: per_class_ap.iter().sum::<f64>() / n_classes as f64,
        per_class_ap,
        selected,
        class_priors,
    })
}
