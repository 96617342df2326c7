use cnnmrf::data::{PatchSource, SampleSet};
use cnnmrf::nn::{train_epochs, Network, NetworkConfig, TrainConfig};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const K: usize = 5;
const D: usize = 3;
const PER_CLASS: usize = 50;

/// Independent random 5x5x3 patches; the class is the side of a fixed
/// hyperplane the center spectrum falls on, pushed apart by a margin.
struct Toy {
    patches: Vec<Vec<f64>>,
}

impl Toy {
    fn new(seed: u64) -> (Self, SampleSet) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let normal = [0.6, -0.3, 0.74];
        let center = (K / 2 * K + K / 2) * D;
        let mut patches = Vec::new();
        let mut samples = Vec::new();
        for i in 0..2 * PER_CLASS {
            let class = if i < PER_CLASS { 1 } else { 2 };
            let mut p: Vec<f64> = (0..K * K * D).map(|_| rng.random_range(-1.0..1.0)).collect();
            let side: f64 = normal.iter().zip(&p[center..center + D]).map(|(a, b)| a * b).sum();
            let shift = if class == 1 { 0.5 - side.min(0.0) } else { -0.5 - side.max(0.0) };
            for (b, n) in normal.iter().enumerate() {
                p[center + b] += shift * n;
            }
            patches.push(p);
            samples.push((i, class));
        }
        (Self { patches }, SampleSet::new(samples, 2).unwrap())
    }
}

impl PatchSource for Toy {
    fn patch_size(&self) -> usize {
        K
    }
    fn bands(&self) -> usize {
        D
    }
    fn pixels(&self) -> usize {
        self.patches.len()
    }
    fn fill(&self, index: usize, out: &mut [f64]) {
        out.copy_from_slice(&self.patches[index]);
    }
}

fn toy_net(seed: u64) -> Network {
    Network::init(NetworkConfig::new(D, 2).fitted_to_patch(K), seed).unwrap()
}

fn toy_train(seed: u64) -> TrainConfig {
    TrainConfig {
        learning_rate: 0.05,
        batch_size: 10,
        seed,
        ..TrainConfig::default()
    }
}

fn accuracy(net: &Network, toy: &Toy, samples: &SampleSet) -> f64 {
    let x: Vec<f64> = toy.patches.concat();
    let probs = net.forward_eval(&x, toy.patches.len()).unwrap();
    let hits = samples
        .samples()
        .iter()
        .filter(|&&(i, c)| {
            let row = &probs[2 * i..2 * i + 2];
            let pred = if row[1] > row[0] { 2 } else { 1 };
            pred == c
        })
        .count();
    hits as f64 / samples.len() as f64
}

#[test]
fn separable_toy_reaches_98_percent() {
    for seed in 0..5 {
        let (toy, samples) = Toy::new(seed);
        let mut net = toy_net(seed);
        train_epochs(&mut net, &toy, &samples, &toy_train(seed), 30).unwrap();
        let acc = accuracy(&net, &toy, &samples);
        assert!(acc >= 0.98, "seed {seed}: accuracy {acc}");
    }
}

#[test]
fn toy_loss_tail_below_head() {
    for seed in 0..5 {
        let (toy, samples) = Toy::new(seed);
        let mut net = toy_net(seed);
        let losses = train_epochs(&mut net, &toy, &samples, &toy_train(seed), 30).unwrap();
        let head: f64 = losses[..5].iter().sum::<f64>() / 5.0;
        let tail: f64 = losses[25..].iter().sum::<f64>() / 5.0;
        assert!(tail < head, "seed {seed}: {losses:?}");
    }
}

#[test]
fn zero_epochs_leave_the_network_alone() {
    let (toy, samples) = Toy::new(9);
    let mut net = toy_net(9);
    let before = net.clone();
    let losses = train_epochs(&mut net, &toy, &samples, &toy_train(9), 0).unwrap();
    assert!(losses.is_empty());
    assert_eq!(net, before);
}

#[test]
fn training_is_bit_reproducible() {
    let (toy, samples) = Toy::new(3);
    let mut a = toy_net(3);
    let mut b = toy_net(3);
    let la = train_epochs(&mut a, &toy, &samples, &toy_train(3), 5).unwrap();
    let lb = train_epochs(&mut b, &toy, &samples, &toy_train(3), 5).unwrap();
    assert_eq!(la, lb);
    assert_eq!(a, b);
}
