//! Average precision, MAP in both directions, and the shuffled-label baseline.

use topicnet::eval::{average_precision, cross_modal_map, mean_permutation_baseline, queries_from_index, write_summary_csv};
use topicnet::retrieval::{build_index, IndexedItem, Modality, QueryOptions};
use topicnet::sampling::{dirichlet, rng_from_seed};
use topicnet::TopicDistribution;

fn main() -> topicnet::Result<()> {
    println!("AP of [rel, miss, rel] = {:.5}", average_precision(&[true, false, true])?);

    // three classes, each concentrated on its own topic with Dirichlet noise
    let mut rng = rng_from_seed(0);
    let mut items = Vec::new();
    for c in 0..3 {
        for j in 0..10 {
            for (m, tag) in [(Modality::Text, "t"), (Modality::Image, "i")] {
                let mut p = dirichlet(&mut rng, 1.0, 3);
                p[c] += 1.0;
                items.push(IndexedItem {
                    item_id: format!("{tag}{c}_{j}"),
                    modality: m,
                    label: Some(format!("class{c}")),
                    distribution: TopicDistribution::from_weights(p)?,
                });
            }
        }
    }
    let index = build_index(items)?;
    let opts = QueryOptions::default();
    let report = cross_modal_map(&index, &opts)?;
    write_summary_csv(std::io::stdout(), &report).unwrap();
    for (class, ap) in &report.image_query.per_class {
        println!("  image queries, {class}: {ap:.4}");
    }

    let queries = queries_from_index(&index, Modality::Image);
    let base = mean_permutation_baseline(&index, &queries, &opts, 0, 50)?;
    println!("shuffled-label baseline for image queries: {base:.4}");
    Ok(())
}
