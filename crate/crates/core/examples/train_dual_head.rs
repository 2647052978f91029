//! Build training triples from a synthetic corpus and train the two-headed network.

use topicnet::corpus::{build_vocabulary, encode, Tokenizer, VocabConfig};
use topicnet::lda::{fit, InferConfig, LdaConfig};
use topicnet::nnet::{Architecture, LossKind, Network, SgdConfig};
use topicnet::synth::{disjoint_phi, generate_multimodal, MultimodalConfig};
use topicnet::trainer::{build_triples, embed_image, train, ProjectionConfig, TrainConfig};

fn main() -> topicnet::Result<()> {
    let k = 4;
    let phi = disjoint_phi(k, 60)?;
    let synth = generate_multimodal(&phi, &MultimodalConfig { alpha: 0.1, n_articles: 200, caption_len: 60, ..Default::default() })?;
    let raw = synth.to_raw_documents();

    let tok = Tokenizer::english();
    let tokens: Vec<Vec<String>> = raw.iter().map(|d| tok.tokenize(&d.article_text)).collect();
    let vocab = build_vocabulary(&tokens, &VocabConfig::default())?;
    let bows: Vec<_> = tokens.iter().map(|t| encode(t, &vocab)).collect();
    let model = fit(&bows, vocab.len(), &LdaConfig { k, alpha: 0.1, beta: 0.01, sweeps: 300, seed: 1 })?;

    let pc = ProjectionConfig { infer: InferConfig { sweeps: 200, burn_in: 50, seed: 2 }, ..Default::default() };
    let triples = build_triples(&raw, &model, &vocab, &pc)?;
    println!("{} triples, x in R^{}, targets in the {k}-simplex", triples.len(), triples[0].x.len());

    let net = Network::new(Architecture::mlp(triples[0].x.len(), &[32], k), 3)?;
    let cfg = TrainConfig {
        epochs: 30,
        batch_size: 32,
        sgd: SgdConfig { base_lr: 0.01, ..SgdConfig::default() },
        loss: LossKind::SigmoidCrossEntropy,
        shuffle_seed: 4,
    };
    let out = train(net, &triples, &cfg)?;
    for r in out.history.iter().step_by(5) {
        println!("epoch {:>2}: global {:.4} local {:.4} total {:.4}", r.epoch, r.loss_global, r.loss_local, r.loss_total);
    }

    let t = &triples[0];
    let (g, l) = embed_image(&out.network, &t.x)?;
    println!("\nfirst image:");
    println!("  global target {:.3?}  embedding {:.3?}", t.target_global.as_slice(), g.as_slice());
    println!("  local  target {:.3?}  embedding {:.3?}", t.target_local.as_slice(), l.as_slice());
    Ok(())
}
