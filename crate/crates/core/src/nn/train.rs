use rand::seq::SliceRandom;
use rand_chacha::ChaCha8Rng;

use super::augment::Dihedral;
use super::config::TrainConfig;
use super::network::Network;
use super::ops::{cross_entropy, one_hot};
use crate::data::{PatchSource, SampleSet};
use crate::error::{Error, Result};
use crate::rng::{rng_for, tags};

/// Mini-batch SGD driver. Keeps its shuffling stream across calls so that a
/// run split into several phases stays reproducible.
pub struct Trainer {
    config: TrainConfig,
    shuffle: ChaCha8Rng,
    augment: ChaCha8Rng,
    losses: Vec<f64>,
}

impl Trainer {
    pub fn new(config: TrainConfig) -> Result<Self> {
        config.validate()?;
        Ok(Self {
            shuffle: rng_for(config.seed, tags::SHUFFLE),
            augment: rng_for(config.seed, tags::AUGMENT),
            config,
            losses: Vec::new(),
        })
    }

    pub fn config(&self) -> &TrainConfig {
        &self.config
    }

    /// Mean training loss of every epoch run so far.
    pub fn losses(&self) -> &[f64] {
        &self.losses
    }

    /// Runs `epochs` passes over `samples` (pixel index, class). Each epoch
    /// shuffles, then steps once per batch; the last batch may be short.
    /// Returns the mean loss of each epoch.
    pub fn run_epochs(
        &mut self,
        net: &mut Network,
        source: &dyn PatchSource,
        samples: &[(usize, u32)],
        epochs: usize,
    ) -> Result<Vec<f64>> {
        if epochs == 0 {
            return Ok(Vec::new());
        }
        if samples.is_empty() {
            return Err(Error::invalid("no training samples"));
        }
        let cfg = net.config();
        if source.patch_size() != cfg.patch_size || source.bands() != cfg.bands {
            return Err(Error::shape(format!(
                "patch source gives {}x{}x{}, network expects {}x{}x{}",
                source.patch_size(),
                source.patch_size(),
                source.bands(),
                cfg.patch_size,
                cfg.patch_size,
                cfg.bands
            )));
        }
        let (k, d, classes) = (cfg.patch_size, cfg.bands, cfg.classes);
        if let Some(&(i, l)) = samples.iter().find(|&&(i, l)| l == 0 || l as usize > classes || i >= source.pixels()) {
            return Err(Error::invalid(format!("sample (pixel {i}, label {l}) is out of range")));
        }
        let len = source.patch_len();
        let mut order: Vec<usize> = (0..samples.len()).collect();
        let mut buf = vec![0.0; self.config.batch_size * len];
        let mut scratch = vec![0.0; len];
        let mut out = Vec::with_capacity(epochs);
        for _ in 0..epochs {
            order.shuffle(&mut self.shuffle);
            let mut total = 0.0;
            for chunk in order.chunks(self.config.batch_size) {
                let b = chunk.len();
                let mut labels = Vec::with_capacity(b);
                for (slot, &s) in chunk.iter().enumerate() {
                    let (pixel, label) = samples[s];
                    let dst = &mut buf[slot * len..(slot + 1) * len];
                    if self.config.augment {
                        source.fill(pixel, &mut scratch);
                        Dihedral::random(&mut self.augment).apply_flat(&scratch, k, d, dst);
                    } else {
                        source.fill(pixel, dst);
                    }
                    labels.push(label);
                }
                let targets = one_hot(&labels, classes);
                let cache = net.forward_train(&buf[..b * len], b, self.config.dropout)?;
                total += cross_entropy(&targets, cache.probs(), classes) * b as f64;
                let grads = net.backward(&cache, &targets)?;
                net.sgd_step(&grads, self.config.learning_rate)?;
            }
            let mean = total / samples.len() as f64;
            self.losses.push(mean);
            out.push(mean);
        }
        Ok(out)
    }
}

/// Trains a network for `epochs` epochs on a sample set; returns per-epoch mean loss.
pub fn train_epochs(
    net: &mut Network,
    source: &dyn PatchSource,
    samples: &SampleSet,
    config: &TrainConfig,
    epochs: usize,
) -> Result<Vec<f64>> {
    Trainer::new(config.clone())?.run_epochs(net, source, samples.samples(), epochs)
}
