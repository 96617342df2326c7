//! Image cubes, label fields, posteriors and everything that touches them
//! before the network sees a patch.
//!
//! Pixels are addressed row-major everywhere: `i = row * width + col`.

mod io;
mod patch;
mod split;

pub use io::{
    decode_cube, decode_labels, decode_probmap, encode_cube, encode_labels, encode_probmap, read_cube,
    read_labels, read_probmap, write_cube, write_labels, write_probmap, CUBE_MAGIC, PROBMAP_MAGIC,
};
pub use patch::{extract_patch, mirror_index, PaddedCube, Patch, PatchSource};
pub use split::{stratified_split, SampleSet, SplitSpec};

use crate::error::{Error, Result};

/// An h×w×d reflectance volume, stored row-major with the band index fastest.
#[derive(Debug, Clone, PartialEq)]
pub struct HsiCube {
    height: usize,
    width: usize,
    bands: usize,
    values: Vec<f64>,
}

impl HsiCube {
    pub fn new(height: usize, width: usize, bands: usize, values: Vec<f64>) -> Result<Self> {
        if height == 0 || width == 0 || bands == 0 {
            return Err(Error::invalid(format!(
                "cube dimensions must be positive, got {height}x{width}x{bands}"
            )));
        }
        if values.len() != height * width * bands {
            return Err(Error::shape(format!(
                "cube {height}x{width}x{bands} needs {} values, got {}",
                height * width * bands,
                values.len()
            )));
        }
        if let Some(pos) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::invalid(format!("non-finite cube value at element {pos}")));
        }
        Ok(Self {
            height,
            width,
            bands,
            values,
        })
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn bands(&self) -> usize {
        self.bands
    }

    /// Number of pixels, which is also the number of patches.
    pub fn pixels(&self) -> usize {
        self.height * self.width
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn spectrum(&self, row: usize, col: usize) -> &[f64] {
        let start = (row * self.width + col) * self.bands;
        &self.values[start..start + self.bands]
    }

    pub fn get(&self, row: usize, col: usize, band: usize) -> f64 {
        self.values[(row * self.width + col) * self.bands + band]
    }
}

/// Rescales every band independently to [0, 1]; constant bands become 0.
pub fn normalize_bands(cube: &HsiCube) -> Result<HsiCube> {
    let d = cube.bands;
    let mut lo = vec![f64::INFINITY; d];
    let mut hi = vec![f64::NEG_INFINITY; d];
    for (i, &v) in cube.values.iter().enumerate() {
        if !v.is_finite() {
            return Err(Error::invalid(format!("non-finite cube value at element {i}")));
        }
        let b = i % d;
        lo[b] = lo[b].min(v);
        hi[b] = hi[b].max(v);
    }
    let values = cube
        .values
        .iter()
        .enumerate()
        .map(|(i, &v)| {
            let b = i % d;
            let span = hi[b] - lo[b];
            if span > 0.0 {
                (v - lo[b]) / span
            } else {
                0.0
            }
        })
        .collect();
    HsiCube::new(cube.height, cube.width, d, values)
}

/// An h×w field of class labels in `0..=K`, where 0 marks an unlabeled pixel.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LabelMap {
    height: usize,
    width: usize,
    num_classes: usize,
    labels: Vec<u32>,
}

impl LabelMap {
    pub fn new(height: usize, width: usize, num_classes: usize, labels: Vec<u32>) -> Result<Self> {
        if height == 0 || width == 0 {
            return Err(Error::invalid(format!(
                "label map dimensions must be positive, got {height}x{width}"
            )));
        }
        if num_classes == 0 {
            return Err(Error::invalid("label map needs at least one class"));
        }
        if labels.len() != height * width {
            return Err(Error::shape(format!(
                "label map {height}x{width} needs {} entries, got {}",
                height * width,
                labels.len()
            )));
        }
        if let Some((i, &l)) = labels
            .iter()
            .enumerate()
            .find(|(_, &l)| l as usize > num_classes)
        {
            return Err(Error::invalid(format!(
                "label {l} at pixel {i} exceeds class count {num_classes}"
            )));
        }
        Ok(Self {
            height,
            width,
            num_classes,
            labels,
        })
    }

    /// Builds a map whose class count is the largest label present (at least 1).
    pub fn from_labels(height: usize, width: usize, labels: Vec<u32>) -> Result<Self> {
        let k = labels.iter().copied().max().unwrap_or(0).max(1) as usize;
        Self::new(height, width, k, labels)
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn num_classes(&self) -> usize {
        self.num_classes
    }

    pub fn pixels(&self) -> usize {
        self.labels.len()
    }

    pub fn labels(&self) -> &[u32] {
        &self.labels
    }

    pub fn get(&self, row: usize, col: usize) -> u32 {
        self.labels[row * self.width + col]
    }

    pub fn is_fully_labeled(&self) -> bool {
        self.labels.iter().all(|&l| l != 0)
    }

    pub fn with_num_classes(mut self, num_classes: usize) -> Result<Self> {
        if self.labels.iter().any(|&l| l as usize > num_classes) || num_classes == 0 {
            return Err(Error::invalid(format!(
                "cannot widen label map to {num_classes} classes"
            )));
        }
        self.num_classes = num_classes;
        Ok(self)
    }

    /// A copy that keeps only the listed pixels labeled.
    pub fn restricted_to(&self, samples: &SampleSet) -> LabelMap {
        let mut labels = vec![0; self.labels.len()];
        for &(i, l) in samples.samples() {
            labels[i] = l;
        }
        LabelMap {
            labels,
            ..self.clone()
        }
    }

    /// Count of pixels carrying each class; index 0 counts unlabeled pixels.
    pub fn class_counts(&self) -> Vec<usize> {
        let mut counts = vec![0; self.num_classes + 1];
        for &l in &self.labels {
            counts[l as usize] += 1;
        }
        counts
    }
}

/// An n×K row-stochastic matrix of per-pixel class posteriors.
#[derive(Debug, Clone, PartialEq)]
pub struct ProbMap {
    rows: usize,
    classes: usize,
    probs: Vec<f64>,
}

impl ProbMap {
    pub fn new(rows: usize, classes: usize, probs: Vec<f64>) -> Result<Self> {
        if classes == 0 {
            return Err(Error::invalid("probability map needs at least one class"));
        }
        if probs.len() != rows * classes {
            return Err(Error::shape(format!(
                "probability map {rows}x{classes} needs {} entries, got {}",
                rows * classes,
                probs.len()
            )));
        }
        for (i, row) in probs.chunks(classes).enumerate() {
            if row.iter().any(|&p| !p.is_finite() || p < 0.0) {
                return Err(Error::invalid(format!("row {i} has a negative or non-finite entry")));
            }
            let s: f64 = row.iter().sum();
            if (s - 1.0).abs() > 1e-9 {
                return Err(Error::invalid(format!("row {i} sums to {s}, not 1")));
            }
        }
        Ok(Self {
            rows,
            classes,
            probs,
        })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn classes(&self) -> usize {
        self.classes
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.probs[i * self.classes..(i + 1) * self.classes]
    }

    /// Per-row argmax as 1-based labels, ties broken toward the smaller class.
    pub fn argmax_labels(&self) -> Vec<u32> {
        self.probs
            .chunks(self.classes)
            .map(|row| argmax(row) as u32 + 1)
            .collect()
    }

    pub fn argmax_map(&self, height: usize, width: usize) -> Result<LabelMap> {
        if height * width != self.rows {
            return Err(Error::shape(format!(
                "{height}x{width} grid does not match {} rows",
                self.rows
            )));
        }
        LabelMap::new(height, width, self.classes, self.argmax_labels())
    }
}

/// Index of the first maximum.
pub(crate) fn argmax(xs: &[f64]) -> usize {
    let mut best = 0;
    for (i, &x) in xs.iter().enumerate().skip(1) {
        if x > xs[best] {
            best = i;
        }
    }
    best
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn normalize_affine_and_constant_bands() {
        let cube = HsiCube::new(1, 3, 1, vec![2.0, 4.0, 6.0]).unwrap();
        assert_eq!(normalize_bands(&cube).unwrap().values(), &[0.0, 0.5, 1.0]);

        let cube = HsiCube::new(1, 2, 1, vec![5.0, 5.0]).unwrap();
        assert_eq!(normalize_bands(&cube).unwrap().values(), &[0.0, 0.0]);

        // two bands, pixel-major: band 0 = {0, 10}, band 1 = {-1, 1}
        let cube = HsiCube::new(1, 2, 2, vec![0.0, -1.0, 10.0, 1.0]).unwrap();
        assert_eq!(normalize_bands(&cube).unwrap().values(), &[0.0, 0.0, 1.0, 1.0]);
    }

    #[test]
    fn cube_rejects_non_finite() {
        assert!(HsiCube::new(1, 1, 2, vec![0.0, f64::NAN]).is_err());
        assert!(HsiCube::new(1, 1, 1, vec![f64::INFINITY]).is_err());
    }

    #[test]
    fn label_map_bounds() {
        assert!(LabelMap::new(1, 2, 2, vec![1, 3]).is_err());
        let m = LabelMap::from_labels(2, 2, vec![1, 0, 2, 2]).unwrap();
        assert_eq!(m.num_classes(), 2);
        assert_eq!(m.class_counts(), vec![1, 1, 2]);
        assert!(!m.is_fully_labeled());
    }

    #[test]
    fn probmap_validates_rows() {
        assert!(ProbMap::new(1, 2, vec![0.5, 0.6]).is_err());
        assert!(ProbMap::new(1, 2, vec![1.5, -0.5]).is_err());
        let p = ProbMap::new(2, 2, vec![0.5, 0.5, 0.2, 0.8]).unwrap();
        // tie goes to class 1
        assert_eq!(p.argmax_labels(), vec![1, 2]);
    }
}
