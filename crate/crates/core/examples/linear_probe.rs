//! One-vs-all logistic probes on learned embeddings versus raw noise.

use rand::Rng;
use topicnet::eval::{linear_probe, ProbeConfig};
use topicnet::sampling::rng_from_seed;
use topicnet::Matrix;

fn main() -> topicnet::Result<()> {
    let (classes, per_class, dim) = (3, 40, 4);
    let mut rng = rng_from_seed(1);
    let mut informative = Vec::new();
    let mut noise = Vec::new();
    let mut labels = Vec::new();
    for c in 0..classes {
        for _ in 0..per_class {
            let mut row: Vec<f64> = (0..dim).map(|_| rng.random_range(0.0..0.5)).collect();
            row[c] += 1.0;
            informative.push(row);
            noise.push((0..dim).map(|_| rng.random_range(0.0..1.0)).collect::<Vec<f64>>());
            labels.push(c);
        }
    }

    let cfg = ProbeConfig::default();
    for (name, rows) in [("class-informative", &informative), ("uniform noise", &noise)] {
        let r = linear_probe(&Matrix::from_rows(rows)?, &labels, classes, &cfg)?;
        println!("{name}: mean AP {:.3}, per class {:.3?}, priors {:.2?}", r.mean_ap, r.per_class_ap, r.class_priors);
    }
    Ok(())
}
