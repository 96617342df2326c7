//! Confusion matrices and the overall, average and kappa accuracy scores.

use crate::data::LabelMap;
use crate::error::{Error, Result};

/// K×K counts indexed `[true][predicted]`, both 0-based class indices.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConfusionMatrix {
    classes: usize,
    counts: Vec<u64>,
}

impl ConfusionMatrix {
    pub fn new(classes: usize) -> Self {
        Self {
            classes,
            counts: vec![0; classes * classes],
        }
    }

    /// Builds a matrix from row-major `[true][predicted]` counts.
    pub fn from_counts(classes: usize, counts: Vec<u64>) -> Result<Self> {
        if counts.len() != classes * classes {
            return Err(Error::shape(format!(
                "{} counts do not form a {classes}×{classes} matrix",
                counts.len()
            )));
        }
        Ok(Self { classes, counts })
    }

    pub fn classes(&self) -> usize {
        self.classes
    }

    /// Count for 1-based true and predicted labels.
    pub fn get(&self, truth: u32, pred: u32) -> u64 {
        self.counts[(truth as usize - 1) * self.classes + pred as usize - 1]
    }

    pub fn add(&mut self, truth: u32, pred: u32) {
        self.counts[(truth as usize - 1) * self.classes + pred as usize - 1] += 1;
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().sum()
    }

    pub fn trace(&self) -> u64 {
        (0..self.classes).map(|t| self.counts[t * self.classes + t]).sum()
    }

    pub fn row_total(&self, t: usize) -> u64 {
        self.counts[t * self.classes..(t + 1) * self.classes].iter().sum()
    }

    pub fn col_total(&self, p: usize) -> u64 {
        (0..self.classes).map(|t| self.counts[t * self.classes + p]).sum()
    }

    fn require_samples(&self) -> Result<f64> {
        match self.total() {
            0 => Err(Error::invalid("confusion matrix is empty")),
            m => Ok(m as f64),
        }
    }
}

/// Counts every pixel whose true label is nonzero.
pub fn confusion(truth: &LabelMap, pred: &LabelMap, classes: usize) -> Result<ConfusionMatrix> {
    if truth.height() != pred.height() || truth.width() != pred.width() {
        return Err(Error::shape(format!(
            "truth is {}×{}, prediction is {}×{}",
            truth.height(),
            truth.width(),
            pred.height(),
            pred.width()
        )));
    }
    let mut cm = ConfusionMatrix::new(classes);
    for (i, (&t, &p)) in truth.labels().iter().zip(pred.labels()).enumerate() {
        if t == 0 {
            continue;
        }
        if t as usize > classes || p == 0 || p as usize > classes {
            return Err(Error::invalid(format!(
                "pixel {i}: truth {t} / prediction {p} outside 1..={classes}"
            )));
        }
        cm.add(t, p);
    }
    Ok(cm)
}

pub fn oa(cm: &ConfusionMatrix) -> Result<f64> {
    let m = cm.require_samples()?;
    Ok(cm.trace() as f64 / m)
}

/// Recall per class; `None` for classes without true pixels.
pub fn per_class_accuracy(cm: &ConfusionMatrix) -> Vec<Option<f64>> {
    (0..cm.classes)
        .map(|t| {
            let row = cm.row_total(t);
            (row > 0).then(|| cm.counts[t * cm.classes + t] as f64 / row as f64)
        })
        .collect()
}

/// Mean recall over classes that have true pixels.
pub fn aa(cm: &ConfusionMatrix) -> Result<f64> {
    cm.require_samples()?;
    let present: Vec<f64> = per_class_accuracy(cm).into_iter().flatten().collect();
    Ok(present.iter().sum::<f64>() / present.len() as f64)
}

/// Cohen's kappa; zero when chance agreement is total.
pub fn kappa(cm: &ConfusionMatrix) -> Result<f64> {
    let m = cm.require_samples()?;
    let po = cm.trace() as f64 / m;
    let pe = chance_agreement(cm, m);
    if (1.0 - pe).abs() < f64::EPSILON {
        return Ok(0.0);
    }
    Ok((po - pe) / (1.0 - pe))
}

fn chance_agreement(cm: &ConfusionMatrix, m: f64) -> f64 {
    (0..cm.classes)
        .map(|t| cm.row_total(t) as f64 * cm.col_total(t) as f64)
        .sum::<f64>()
        / (m * m)
}

/// OA, AA and kappa together.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Scores {
    pub oa: f64,
    pub aa: f64,
    pub kappa: f64,
}

pub fn scores(cm: &ConfusionMatrix) -> Result<Scores> {
    Ok(Scores {
        oa: oa(cm)?,
        aa: aa(cm)?,
        kappa: kappa(cm)?,
    })
}
