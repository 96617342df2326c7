use super::HsiCube;
use crate::error::{Error, Result};

/// Reflects an out-of-range coordinate back into `0..n` without repeating
/// the border sample (`-1 -> 1`, `n -> n - 2`).
pub fn mirror_index(i: isize, n: usize) -> usize {
    if n == 1 {
        return 0;
    }
    let period = 2 * (n as isize - 1);
    let m = i.rem_euclid(period);
    if m < n as isize {
        m as usize
    } else {
        (period - m) as usize
    }
}

/// A k×k×d window centred on one pixel, row-major with the band index fastest.
#[derive(Debug, Clone, PartialEq)]
pub struct Patch {
    pub size: usize,
    pub bands: usize,
    pub center: (usize, usize),
    pub values: Vec<f64>,
}

impl Patch {
    pub fn get(&self, row: usize, col: usize, band: usize) -> f64 {
        self.values[(row * self.size + col) * self.bands + band]
    }
}

fn check_window(cube: &HsiCube, row: usize, col: usize, k: usize) -> Result<()> {
    if k.is_multiple_of(2) {
        return Err(Error::invalid(format!("patch size must be odd, got {k}")));
    }
    if row >= cube.height() || col >= cube.width() {
        return Err(Error::invalid(format!(
            "centre ({row}, {col}) outside {}x{} cube",
            cube.height(),
            cube.width()
        )));
    }
    Ok(())
}

/// Extracts the k×k window centred at `(row, col)`, mirroring at the borders.
pub fn extract_patch(cube: &HsiCube, row: usize, col: usize, k: usize) -> Result<Patch> {
    check_window(cube, row, col, k)?;
    let d = cube.bands();
    let half = (k / 2) as isize;
    let mut values = Vec::with_capacity(k * k * d);
    for dr in -half..=half {
        let r = mirror_index(row as isize + dr, cube.height());
        for dc in -half..=half {
            let c = mirror_index(col as isize + dc, cube.width());
            values.extend_from_slice(cube.spectrum(r, c));
        }
    }
    Ok(Patch {
        size: k,
        bands: d,
        center: (row, col),
        values,
    })
}

/// Anything that can hand out the flattened patch of a pixel.
pub trait PatchSource {
    fn patch_size(&self) -> usize;
    fn bands(&self) -> usize;
    fn pixels(&self) -> usize;
    /// Writes the `k*k*d` values of pixel `index` (row-major pixel order) into `out`.
    fn fill(&self, index: usize, out: &mut [f64]);

    fn patch_len(&self) -> usize {
        self.patch_size() * self.patch_size() * self.bands()
    }
}

/// A cube with a mirrored border of `k / 2` pixels so every patch is a plain
/// window copy. Produces the same values as [`extract_patch`].
#[derive(Debug, Clone)]
pub struct PaddedCube {
    height: usize,
    width: usize,
    bands: usize,
    k: usize,
    padded_width: usize,
    values: Vec<f64>,
}

impl PaddedCube {
    pub fn new(cube: &HsiCube, k: usize) -> Result<Self> {
        if k.is_multiple_of(2) {
            return Err(Error::invalid(format!("patch size must be odd, got {k}")));
        }
        let pad = (k / 2) as isize;
        let (h, w, d) = (cube.height(), cube.width(), cube.bands());
        let padded_width = w + k - 1;
        let mut values = Vec::with_capacity((h + k - 1) * padded_width * d);
        for r in -pad..h as isize + pad {
            let sr = mirror_index(r, h);
            for c in -pad..w as isize + pad {
                let sc = mirror_index(c, w);
                values.extend_from_slice(cube.spectrum(sr, sc));
            }
        }
        Ok(Self {
            height: h,
            width: w,
            bands: d,
            k,
            padded_width,
            values,
        })
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn padded_height(&self) -> usize {
        self.height + self.k - 1
    }

    pub fn padded_width(&self) -> usize {
        self.padded_width
    }

    /// The padded volume, row-major, band fastest.
    pub fn values(&self) -> &[f64] {
        &self.values
    }
}

impl PatchSource for PaddedCube {
    fn patch_size(&self) -> usize {
        self.k
    }

    fn bands(&self) -> usize {
        self.bands
    }

    fn pixels(&self) -> usize {
        self.height * self.width
    }

    fn fill(&self, index: usize, out: &mut [f64]) {
        let (row, col) = (index / self.width, index % self.width);
        let run = self.k * self.bands;
        for dr in 0..self.k {
            let src = ((row + dr) * self.padded_width + col) * self.bands;
            out[dr * run..(dr + 1) * run].copy_from_slice(&self.values[src..src + run]);
        }
    }
}
