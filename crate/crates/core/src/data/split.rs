use rand::seq::SliceRandom;

use super::LabelMap;
use crate::error::{Error, Result};
use crate::rng::{rng_for, tags};

/// Labeled pixels as `(pixel index, class)` pairs, sorted by pixel index.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct SampleSet {
    samples: Vec<(usize, u32)>,
    class_counts: Vec<usize>,
}

impl SampleSet {
    /// Builds a set from pairs; `num_classes` sizes the per-class counts.
    pub fn new(mut samples: Vec<(usize, u32)>, num_classes: usize) -> Result<Self> {
        samples.sort_unstable();
        let mut class_counts = vec![0; num_classes];
        for w in samples.windows(2) {
            if w[0].0 == w[1].0 {
                return Err(Error::invalid(format!("pixel {} appears twice", w[0].0)));
            }
        }
        for &(i, l) in &samples {
            if l == 0 || l as usize > num_classes {
                return Err(Error::invalid(format!("pixel {i} has invalid label {l}")));
            }
            class_counts[l as usize - 1] += 1;
        }
        Ok(Self {
            samples,
            class_counts,
        })
    }

    pub fn samples(&self) -> &[(usize, u32)] {
        &self.samples
    }

    /// `l^(k)` for k = 1..K, stored at index k-1.
    pub fn class_counts(&self) -> &[usize] {
        &self.class_counts
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn contains(&self, pixel: usize) -> bool {
        self.samples.binary_search_by_key(&pixel, |&(i, _)| i).is_ok()
    }
}

/// How many pixels per class go into the training set.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SplitSpec {
    /// Fraction of each class, rounded to nearest with a floor of one.
    Fraction(f64),
    /// Fixed count per class, capped at the class size.
    Count(usize),
}

impl SplitSpec {
    fn train_size(self, total: usize) -> usize {
        match self {
            SplitSpec::Fraction(f) => ((f * total as f64).round() as usize).clamp(1, total),
            SplitSpec::Count(c) => c.min(total),
        }
    }
}

/// Draws a per-class random training subset; everything else labeled is test.
pub fn stratified_split(
    truth: &LabelMap,
    spec: SplitSpec,
    seed: u64,
) -> Result<(SampleSet, SampleSet)> {
    match spec {
        SplitSpec::Fraction(f) if !(f > 0.0 && f < 1.0) => {
            return Err(Error::invalid(format!("training fraction must be in (0, 1), got {f}")))
        }
        SplitSpec::Count(0) => return Err(Error::invalid("training count must be at least 1")),
        _ => {}
    }
    let k = truth.num_classes();
    let mut per_class: Vec<Vec<usize>> = vec![Vec::new(); k];
    for (i, &l) in truth.labels().iter().enumerate() {
        if l != 0 {
            per_class[l as usize - 1].push(i);
        }
    }
    if let Some(empty) = per_class.iter().position(|v| v.is_empty()) {
        return Err(Error::invalid(format!(
            "class {} has no labeled pixels",
            empty + 1
        )));
    }
    let mut rng = rng_for(seed, tags::SPLIT);
    let mut train = Vec::new();
    let mut test = Vec::new();
    for (c, mut pixels) in per_class.into_iter().enumerate() {
        let n_train = spec.train_size(pixels.len());
        pixels.shuffle(&mut rng);
        let label = c as u32 + 1;
        train.extend(pixels[..n_train].iter().map(|&i| (i, label)));
        test.extend(pixels[n_train..].iter().map(|&i| (i, label)));
    }
    Ok((SampleSet::new(train, k)?, SampleSet::new(test, k)?))
}
