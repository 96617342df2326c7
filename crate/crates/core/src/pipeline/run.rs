use std::time::Instant;

use rand::seq::index::sample;
use rand_chacha::ChaCha8Rng;

use super::config::{Method, RunConfig};
use crate::data::{normalize_bands, stratified_split, HsiCube, LabelMap, PaddedCube, ProbMap, SampleSet};
use crate::error::{Error, Result, Stage, StageExt};
use crate::metrics::{confusion, per_class_accuracy, scores, Scores};
use crate::mrf::smooth_labels;
use crate::nn::{predict_padded, Network, Trainer};
use crate::regularize::{majority_vote_labels, median_filter_labels, WindowSpec};
use crate::rng::{rng_for, tags};

/// Scores on the test pixels after a label update.
#[derive(Debug, Clone, PartialEq)]
pub struct Checkpoint {
    pub epoch: usize,
    /// Scores of the regularized labels.
    pub scores: Scores,
    pub per_class: Vec<Option<f64>>,
    /// Scores of the plain per-pixel argmax.
    pub cnn_scores: Scores,
}

/// Wall-clock seconds spent per stage.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct Timings {
    pub train: f64,
    pub predict: f64,
    pub regularize: f64,
    pub total: f64,
}

#[derive(Debug, Clone)]
pub struct RunResult {
    pub method: Method,
    pub seed: u64,
    pub train: SampleSet,
    pub test: SampleSet,
    /// Regularized labels after the last update.
    pub labels: LabelMap,
    /// Per-pixel argmax of the last posterior map.
    pub cnn_labels: LabelMap,
    pub probmap: ProbMap,
    pub checkpoints: Vec<Checkpoint>,
    pub losses: Vec<f64>,
    pub timings: Timings,
    pub network: Network,
}

impl RunResult {
    /// The last checkpoint; every run records at least one.
    pub fn last(&self) -> &Checkpoint {
        self.checkpoints.last().expect("runs always record a checkpoint")
    }

    pub fn checkpoint_at(&self, epoch: usize) -> Option<&Checkpoint> {
        self.checkpoints.iter().find(|c| c.epoch == epoch)
    }
}

/// Applies the method's label update to a posterior map.
pub fn regularize_probmap(cfg: &RunConfig, probmap: &ProbMap, height: usize, width: usize) -> Result<LabelMap> {
    match cfg.method {
        Method::Cnn => probmap.argmax_map(height, width),
        Method::CnnMrf => smooth_labels(probmap, height, width, cfg.mu, cfg.neighborhood, cfg.max_sweeps),
        Method::CnnMedian => median_filter_labels(&probmap.argmax_map(height, width)?, WindowSpec::new(cfg.window)?),
        Method::CnnMajority => {
            majority_vote_labels(&probmap.argmax_map(height, width)?, WindowSpec::new(cfg.window)?)
        }
    }
}

/// The alternating train / predict / regularize loop, one chunk of epochs
/// per step.
pub struct RunState<'a> {
    cfg: RunConfig,
    truth: &'a LabelMap,
    padded: PaddedCube,
    train: SampleSet,
    test: SampleSet,
    test_truth: LabelMap,
    network: Network,
    trainer: Trainer,
    subsample: ChaCha8Rng,
    epoch: usize,
    pseudo: Option<LabelMap>,
    last: Option<(ProbMap, LabelMap, LabelMap)>,
    checkpoints: Vec<Checkpoint>,
    timings: Timings,
    started: Instant,
}

impl<'a> RunState<'a> {
    /// Normalizes the cube, splits the labels and initializes the network.
    pub fn new(cfg: &RunConfig, cube: &HsiCube, truth: &'a LabelMap) -> Result<Self> {
        let started = Instant::now();
        cfg.validate().stage(Stage::Load)?;
        if cube.height() != truth.height() || cube.width() != truth.width() {
            return Err(Error::shape(format!(
                "cube is {}×{}, labels are {}×{}",
                cube.height(),
                cube.width(),
                truth.height(),
                truth.width()
            )))
            .stage(Stage::Load);
        }
        let (train, test) = stratified_split(truth, cfg.train_split, cfg.seed).stage(Stage::Split)?;
        let net_cfg = cfg.network_config(cube.bands(), truth.num_classes());
        let network = Network::init(net_cfg, cfg.seed).stage(Stage::Train)?;
        let normalized = normalize_bands(cube).stage(Stage::Load)?;
        let padded = PaddedCube::new(&normalized, cfg.patch_size).stage(Stage::Load)?;
        let test_truth = truth.restricted_to(&test);
        log::info!(
            "{} seed {}: {} training and {} test pixels, {} parameters",
            cfg.method,
            cfg.seed,
            train.len(),
            test.len(),
            network.parameter_count()
        );
        Ok(Self {
            trainer: Trainer::new(cfg.train_config()).stage(Stage::Train)?,
            subsample: rng_for(cfg.seed, tags::SUBSAMPLE),
            cfg: cfg.clone(),
            truth,
            padded,
            train,
            test,
            test_truth,
            network,
            epoch: 0,
            pseudo: None,
            last: None,
            checkpoints: Vec::new(),
            timings: Timings::default(),
            started,
        })
    }

    pub fn epoch(&self) -> usize {
        self.epoch
    }

    pub fn is_done(&self) -> bool {
        self.epoch >= self.cfg.max_epochs && self.last.is_some()
    }

    pub fn network(&self) -> &Network {
        &self.network
    }

    pub fn checkpoints(&self) -> &[Checkpoint] {
        &self.checkpoints
    }

    /// Training pairs for the next epoch: the labeled split during the
    /// initial phase (and always for the plain network), afterwards every
    /// pixel under its regularized label with training pixels keeping their
    /// ground truth, subsampled to at most `retrain_cap` pixels.
    fn epoch_samples(&mut self) -> Vec<(usize, u32)> {
        let pseudo = match &self.pseudo {
            Some(p) if self.cfg.method != Method::Cnn && self.epoch >= self.cfg.initial_epochs => p,
            _ => return self.train.samples().to_vec(),
        };
        let mut labels = pseudo.labels().to_vec();
        for &(i, l) in self.train.samples() {
            labels[i] = l;
        }
        let n = labels.len();
        if n <= self.cfg.retrain_cap {
            return labels.into_iter().enumerate().collect();
        }
        let mut picked = sample(&mut self.subsample, n, self.cfg.retrain_cap).into_vec();
        picked.sort_unstable();
        picked.into_iter().map(|i| (i, labels[i])).collect()
    }

    fn train_epochs(&mut self, epochs: usize) -> Result<()> {
        let t = Instant::now();
        for _ in 0..epochs {
            let samples = self.epoch_samples();
            self.trainer
                .run_epochs(&mut self.network, &self.padded, &samples, 1)
                .stage(Stage::Train)?;
            self.epoch += 1;
        }
        self.timings.train += t.elapsed().as_secs_f64();
        Ok(())
    }

    fn checkpoint(&mut self) -> Result<()> {
        let (h, w) = (self.truth.height(), self.truth.width());
        let k = self.truth.num_classes();
        let t = Instant::now();
        let probmap = predict_padded(&self.network, &self.padded).stage(Stage::Predict)?;
        self.timings.predict += t.elapsed().as_secs_f64();

        let t = Instant::now();
        let regularized = regularize_probmap(&self.cfg, &probmap, h, w).stage(Stage::Regularize)?;
        self.timings.regularize += t.elapsed().as_secs_f64();

        let argmax = probmap.argmax_map(h, w).stage(Stage::Evaluate)?;
        let cm = confusion(&self.test_truth, &regularized, k).stage(Stage::Evaluate)?;
        let cnn_cm = confusion(&self.test_truth, &argmax, k).stage(Stage::Evaluate)?;
        let cp = Checkpoint {
            epoch: self.epoch,
            scores: scores(&cm).stage(Stage::Evaluate)?,
            per_class: per_class_accuracy(&cm),
            cnn_scores: scores(&cnn_cm).stage(Stage::Evaluate)?,
        };
        log::info!(
            "{} seed {} epoch {}: OA {:.2} (argmax {:.2}), loss {:.4}",
            self.cfg.method,
            self.cfg.seed,
            self.epoch,
            100.0 * cp.scores.oa,
            100.0 * cp.cnn_scores.oa,
            self.trainer.losses().last().copied().unwrap_or(f64::NAN)
        );
        self.checkpoints.push(cp);
        self.pseudo = Some(regularized.clone());
        self.last = Some((probmap, argmax, regularized));
        Ok(())
    }

    /// Trains up to the next label update and performs it. Returns `false`
    /// once the epoch budget is spent.
    pub fn step(&mut self) -> Result<bool> {
        if self.is_done() {
            return Ok(false);
        }
        let (max, initial, period) = (self.cfg.max_epochs, self.cfg.initial_epochs, self.cfg.period);
        let mut chunk = period.min(max - self.epoch);
        if self.epoch < initial {
            chunk = chunk.min(initial - self.epoch);
        }
        self.train_epochs(chunk)?;
        self.checkpoint()?;
        Ok(!self.is_done())
    }

    pub fn finish(mut self) -> Result<RunResult> {
        while self.step()? {}
        let (probmap, cnn_labels, labels) = self.last.take().expect("checkpoint recorded");
        self.timings.total = self.started.elapsed().as_secs_f64();
        Ok(RunResult {
            method: self.cfg.method,
            seed: self.cfg.seed,
            train: self.train,
            test: self.test,
            labels,
            cnn_labels,
            probmap,
            checkpoints: self.checkpoints,
            losses: self.trainer.losses().to_vec(),
            timings: self.timings,
            network: self.network,
        })
    }
}

/// One full run on in-memory data with `cfg.seed`.
pub fn run_on_data(cfg: &RunConfig, cube: &HsiCube, truth: &LabelMap) -> Result<RunResult> {
    RunState::new(cfg, cube, truth)?.finish()
}
