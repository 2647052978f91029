//! Draw a captioned-image corpus from the generative model and look at its truth.

use topicnet::synth::{disjoint_phi, generate_multimodal, MultimodalConfig};

fn main() -> topicnet::Result<()> {
    let phi = disjoint_phi(4, 40)?;
    let cfg = MultimodalConfig { n_articles: 6, feature_dim: 8, seed: 3, ..MultimodalConfig::default() };
    let synth = generate_multimodal(&phi, &cfg)?;

    println!("{} articles, {} images, K = {}", synth.docs.len(), synth.images.len(), synth.k());
    for (d, theta) in synth.true_thetas.iter().enumerate().take(3) {
        println!("article {d}: theta {:.3?}", theta.as_slice());
    }
    for (i, img) in synth.images.iter().enumerate().take(4) {
        println!(
            "{} (article {}): caption theta {:.3?}, x[..3] {:.3?}",
            synth.image_id(i),
            img.article,
            img.caption_theta.as_slice(),
            &img.features[..3]
        );
    }

    let raw = synth.to_raw_documents();
    let doc = &raw[0];
    println!("\n{} [{}]: {}…", doc.doc_id, doc.class_label.as_deref().unwrap_or("-"), &doc.article_text[..60]);
    Ok(())
}
