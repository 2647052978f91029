//! Compare backprop gradients of the dual-head network with central differences.

use rand::Rng;
use topicnet::nnet::{grad_check, Architecture, LossKind, Network};
use topicnet::sampling::{dirichlet, rng_from_seed};
use topicnet::Matrix;

fn main() -> topicnet::Result<()> {
    let (d, k, n) = (6, 4, 5);
    let mut rng = rng_from_seed(11);
    let x: Vec<Vec<f64>> = (0..n).map(|_| (0..d).map(|_| rng.random_range(-1.0..1.0)).collect()).collect();
    let g: Vec<Vec<f64>> = (0..n).map(|_| dirichlet(&mut rng, 0.5, k)).collect();
    let l: Vec<Vec<f64>> = (0..n).map(|_| dirichlet(&mut rng, 0.5, k)).collect();
    let (x, g, l) = (Matrix::from_rows(&x)?, Matrix::from_rows(&g)?, Matrix::from_rows(&l)?);

    for hidden in [vec![], vec![8], vec![8, 6]] {
        let net = Network::new(Architecture::mlp(d, &hidden, k), 5)?;
        for kind in [LossKind::SigmoidCrossEntropy, LossKind::SoftmaxCrossEntropy] {
            let err = grad_check(&net, &x, &g, &l, 1e-5, kind)?;
            println!("hidden {hidden:?} {kind:?}: {} params, max relative error {err:.2e}", net.num_params());
        }
    }
    Ok(())
}
