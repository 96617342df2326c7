use cnnmrf::data::HsiCube;
use cnnmrf::nn::{predict_probmap, predict_probmap_per_patch, ConvSpec, Network, NetworkConfig};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn random_cube(h: usize, w: usize, d: usize, seed: u64) -> HsiCube {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    HsiCube::new(h, w, d, (0..h * w * d).map(|_| rng.random::<f64>()).collect()).unwrap()
}

#[test]
fn whole_image_prediction_matches_per_patch() {
    let cases = [
        (9, vec![ConvSpec { filters: 5, kernel: 5 }, ConvSpec { filters: 7, kernel: 3 }], vec![6, 4]),
        (7, vec![ConvSpec { filters: 3, kernel: 2 }, ConvSpec { filters: 4, kernel: 2 }], vec![5]),
        (5, vec![ConvSpec { filters: 4, kernel: 3 }], vec![]),
        (1, vec![ConvSpec { filters: 4, kernel: 1 }, ConvSpec { filters: 3, kernel: 1 }], vec![6]),
    ];
    for (i, (k, conv, dense)) in cases.into_iter().enumerate() {
        let mut cfg = NetworkConfig::new(4, 3);
        cfg.patch_size = k;
        cfg.conv = conv;
        cfg.dense = dense;
        let net = Network::init(cfg, i as u64).unwrap();
        let cube = random_cube(11, 13, 4, 40 + i as u64);
        let fast = predict_probmap(&net, &cube).unwrap();
        let slow = predict_probmap_per_patch(&net, &cube).unwrap();
        assert_eq!(fast.rows(), 11 * 13);
        for (a, b) in fast.probs().iter().zip(slow.probs()) {
            assert!((a - b).abs() < 1e-12, "case {i}: {a} vs {b}");
        }
    }
}
