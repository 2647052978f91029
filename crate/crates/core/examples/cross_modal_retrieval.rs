//! Text-to-image and image-to-text search over a shared topic index.

use topicnet::corpus::{build_vocabulary, encode, Tokenizer, VocabConfig};
use topicnet::lda::{fit, InferConfig, LdaConfig};
use topicnet::nnet::{Architecture, Network, SgdConfig};
use topicnet::retrieval::{index_from_topics, write_hits_tsv, QueryEngine, QueryOptions, QueryPayload};
use topicnet::synth::{disjoint_phi, generate_multimodal, MultimodalConfig};
use topicnet::trainer::{project_corpus, train, triples_from_topics, Head, ProjectionConfig, TrainConfig};

fn main() -> topicnet::Result<()> {
    let k = 4;
    let phi = disjoint_phi(k, 60)?;
    let synth = generate_multimodal(&phi, &MultimodalConfig { alpha: 0.1, n_articles: 150, caption_len: 60, ..Default::default() })?;
    let raw = synth.to_raw_documents();

    let tok = Tokenizer::english();
    let tokens: Vec<Vec<String>> = raw.iter().map(|d| tok.tokenize(&d.article_text)).collect();
    let vocab = build_vocabulary(&tokens, &VocabConfig::default())?;
    let bows: Vec<_> = tokens.iter().map(|t| encode(t, &vocab)).collect();
    let model = fit(&bows, vocab.len(), &LdaConfig { k, alpha: 0.1, beta: 0.01, sweeps: 300, seed: 1 })?;
    let infer = InferConfig { sweeps: 200, burn_in: 50, seed: 2 };
    let projected = project_corpus(&raw, &model, &vocab, &ProjectionConfig { infer, ..Default::default() })?;

    let triples = triples_from_topics(&projected)?;
    let cfg = TrainConfig { epochs: 30, batch_size: 32, sgd: SgdConfig { base_lr: 0.01, ..Default::default() }, ..Default::default() };
    let net = train(Network::new(Architecture::mlp(16, &[32], k), 3)?, &triples, &cfg)?.network;

    // articles enter the index as text, images through the network
    let index = index_from_topics(&projected, &net, Head::Local)?;
    println!("index: {} items over {k} topics", index.len());

    let engine = QueryEngine {
        net: &net,
        model: &model,
        vocab: &vocab,
        tokenizer: &tok,
        infer,
        head: Head::Local,
        options: QueryOptions::default(),
    };
    let stdout = std::io::stdout();

    let text = &raw[0].article_text;
    println!("\ntext query from {} [{}] -> images:", raw[0].doc_id, raw[0].class_label.as_deref().unwrap_or("-"));
    write_hits_tsv(stdout.lock(), &engine.retrieve(&index, &QueryPayload::Text(text.clone()), 5)?).unwrap();

    let x = synth.images[0].features.clone();
    println!("\nimage query {} -> articles:", synth.image_id(0));
    write_hits_tsv(stdout.lock(), &engine.retrieve(&index, &QueryPayload::Features(x), 5)?).unwrap();
    Ok(())
}
