use cnnmrf::nn::{cross_entropy, one_hot, ConvSpec, InitScheme, Network, NetworkConfig};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn miniature() -> NetworkConfig {
    NetworkConfig {
        patch_size: 5,
        bands: 3,
        classes: 2,
        conv: vec![ConvSpec { filters: 4, kernel: 3 }, ConvSpec { filters: 6, kernel: 2 }],
        dense: vec![8, 4],
        dropout: 0.0,
        init: InitScheme::Scaled,
    }
}

fn loss(net: &Network, x: &[f64], y: &[f64], batch: usize) -> f64 {
    cross_entropy(y, &net.forward_eval(x, batch).unwrap(), 2)
}

/// Max relative error between backprop and central differences over every parameter.
pub fn max_gradient_error(seed: u64) -> f64 {
    let batch = 3;
    let mut net = Network::init(miniature(), seed).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0xabc);
    // small positive biases keep ReLUs away from their kink
    for layer in net.layers_mut() {
        layer.bias.iter_mut().for_each(|b| *b = rng.random_range(0.05..0.2));
    }
    let x: Vec<f64> = (0..batch * net.patch_len()).map(|_| rng.random::<f64>()).collect();
    let y = one_hot(&[1, 2, 2], 2);
    let cache = net.forward_train(&x, batch, false).unwrap();
    let grads = net.backward(&cache, &y).unwrap();
    let analytic: Vec<f64> = grads
        .layers()
        .flat_map(|l| l.weights.iter().chain(&l.bias).copied().collect::<Vec<_>>())
        .collect();

    let h = 1e-5;
    let mut worst: f64 = 0.0;
    let mut idx = 0;
    let n_layers = net.layers().count();
    for li in 0..n_layers {
        let (nw, nb) = {
            let l = net.layers().nth(li).unwrap();
            (l.weights.len(), l.bias.len())
        };
        for p in 0..nw + nb {
            let probe = |delta: f64| {
                let mut n = net.clone();
                let layer = n.layers_mut().nth(li).unwrap();
                if p < nw {
                    layer.weights[p] += delta;
                } else {
                    layer.bias[p - nw] += delta;
                }
                loss(&n, &x, &y, batch)
            };
            let numeric = (probe(h) - probe(-h)) / (2.0 * h);
            let a = analytic[idx];
            let rel = (a - numeric).abs() / a.abs().max(numeric.abs()).max(1e-6);
            worst = worst.max(rel);
            idx += 1;
        }
    }
    assert_eq!(idx, analytic.len());
    worst
}

#[test]
fn backprop_matches_finite_differences() {
    for seed in 0..3 {
        let err = max_gradient_error(seed);
        assert!(err < 1e-4, "seed {seed}: relative error {err:e}");
    }
}
