//! Fit LDA by collapsed Gibbs sampling and compare the topics with the generator's.

use std::time::Instant;

use topicnet::lda::{fit_with_restarts, infer, perplexity, topic_recovery_l1, InferConfig, LdaConfig};
use topicnet::synth::{disjoint_phi, generate_corpus};

fn main() -> topicnet::Result<()> {
    let (k, v) = (5, 50);
    let phi = disjoint_phi(k, v)?;
    let train = generate_corpus(&phi, 0.1, 400, 60, 1)?;
    let heldout = generate_corpus(&phi, 0.1, 50, 60, 2)?;

    let start = Instant::now();
    let cfg = LdaConfig { k, alpha: 0.1, beta: 0.01, sweeps: 500, seed: 7 };
    let model = fit_with_restarts(&train.docs, v, &cfg, 2)?;
    println!("fit in {:.2?}", start.elapsed());

    let l1 = topic_recovery_l1(&model.phi(), &phi)?;
    println!("aligned mean L1 between fitted and true topics: {l1:.4}");
    for t in 0..k {
        println!("topic {t}: top words {:?}", model.top_words(t, 5));
    }

    let icfg = InferConfig { sweeps: 200, burn_in: 50, seed: 0 };
    println!("held-out perplexity {:.2}", perplexity(&model, &heldout.docs, &icfg)?);
    let theta = infer(&model, &heldout.docs[0], &icfg)?;
    println!("held-out doc 0: inferred {:.3?}", theta.as_slice());
    println!("               true     {:.3?} (topic order differs)", heldout.true_thetas[0].as_slice());
    Ok(())
}
