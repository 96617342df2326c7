//! Synthetic hyperspectral scenes from the generalized bilinear mixing model.
//!
//! Abundances come from smooth Gaussian random fields pushed through a
//! per-pixel softmax, so non-negativity and sum-to-one hold exactly. Each
//! pixel mixes the endmembers linearly plus pairwise bilinear terms, then
//! white Gaussian noise is added at a requested SNR. The ground-truth class
//! of a pixel is its dominant abundance.

use rand::Rng;
use rand_distr::{Distribution, Normal, StandardNormal};

use crate::data::{HsiCube, LabelMap};
use crate::error::{Error, Result};
use crate::rng::{counter_rng, rng_for, tags};

/// K pure-material spectra, each of length d.
#[derive(Debug, Clone, PartialEq)]
pub struct EndmemberSet {
    spectra: Vec<Vec<f64>>,
}

impl EndmemberSet {
    pub fn new(spectra: Vec<Vec<f64>>) -> Result<Self> {
        if spectra.len() < 2 {
            return Err(Error::invalid("need at least two endmembers"));
        }
        let d = spectra[0].len();
        if d == 0 || spectra.iter().any(|s| s.len() != d) {
            return Err(Error::shape("endmembers must share a positive length"));
        }
        if spectra.iter().flatten().any(|&v| !v.is_finite() || v < 0.0) {
            return Err(Error::invalid("endmember entries must be finite and non-negative"));
        }
        for i in 0..spectra.len() {
            for j in i + 1..spectra.len() {
                if spectra[i] == spectra[j] {
                    return Err(Error::invalid(format!("endmembers {i} and {j} coincide")));
                }
            }
        }
        Ok(Self { spectra })
    }

    pub fn len(&self) -> usize {
        self.spectra.len()
    }

    pub fn is_empty(&self) -> bool {
        self.spectra.is_empty()
    }

    pub fn bands(&self) -> usize {
        self.spectra[0].len()
    }

    pub fn spectrum(&self, i: usize) -> &[f64] {
        &self.spectra[i]
    }

    pub fn spectra(&self) -> &[Vec<f64>] {
        &self.spectra
    }
}

const ENDMEMBER_LO: f64 = 0.1;
const ENDMEMBER_HI: f64 = 0.9;

fn l2(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
}

/// K smooth spectra: a Gaussian random walk, box-smoothed, then rescaled so
/// its minimum is 0.1 and its maximum 0.9.
pub fn sample_endmembers(d: usize, k: usize, seed: u64) -> Result<EndmemberSet> {
    if k < 2 {
        return Err(Error::invalid(format!("need at least two endmembers, got {k}")));
    }
    if k > d {
        return Err(Error::invalid(format!("{k} endmembers exceed {d} bands")));
    }
    let mut rng = rng_for(seed, tags::ENDMEMBERS);
    let radius = (d / 24).max(1).min((d - 1) / 2);
    let min_distance = 0.05 * (d as f64).sqrt();
    let mut spectra: Vec<Vec<f64>> = Vec::with_capacity(k);
    let mut attempts = 0;
    while spectra.len() < k {
        attempts += 1;
        if attempts > 10_000 {
            return Err(Error::invalid(format!("could not draw {k} distinct endmembers over {d} bands")));
        }
        let mut walk = Vec::with_capacity(d);
        let mut x = 0.0;
        for _ in 0..d {
            let step: f64 = rng.sample(StandardNormal);
            x += step;
            walk.push(x);
        }
        let smooth: Vec<f64> = (0..d)
            .map(|i| {
                let lo = i.saturating_sub(radius);
                let hi = (i + radius + 1).min(d);
                walk[lo..hi].iter().sum::<f64>() / (hi - lo) as f64
            })
            .collect();
        let lo = smooth.iter().cloned().fold(f64::INFINITY, f64::min);
        let hi = smooth.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        if hi - lo <= 0.0 {
            continue;
        }
        let spectrum: Vec<f64> = smooth
            .iter()
            .map(|v| ENDMEMBER_LO + (ENDMEMBER_HI - ENDMEMBER_LO) * (v - lo) / (hi - lo))
            .collect();
        let threshold = if d <= 2 { 1e-9 } else { min_distance };
        if spectra.iter().all(|s| l2(s, &spectrum) > threshold) {
            spectra.push(spectrum);
        }
    }
    EndmemberSet::new(spectra)
}

/// Per-pixel abundance vectors, h×w×K, row-major with the class index fastest.
#[derive(Debug, Clone, PartialEq)]
pub struct AbundanceField {
    height: usize,
    width: usize,
    classes: usize,
    values: Vec<f64>,
}

impl AbundanceField {
    pub fn height(&self) -> usize {
        self.height
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn classes(&self) -> usize {
        self.classes
    }

    pub fn at(&self, pixel: usize) -> &[f64] {
        &self.values[pixel * self.classes..(pixel + 1) * self.classes]
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Dominant class per pixel (1-based, ties toward the smaller index).
    pub fn argmax_labels(&self) -> Vec<u32> {
        self.values
            .chunks(self.classes)
            .map(|a| crate::data::argmax(a) as u32 + 1)
            .collect()
    }
}

fn gaussian_kernel(sigma: f64) -> Vec<f64> {
    if sigma < 1e-3 {
        return vec![1.0];
    }
    let radius = (3.0 * sigma).ceil() as isize;
    let w: Vec<f64> = (-radius..=radius)
        .map(|x| (-(x * x) as f64 / (2.0 * sigma * sigma)).exp())
        .collect();
    let s: f64 = w.iter().sum();
    w.into_iter().map(|v| v / s).collect()
}

/// One smooth field: white noise on a grid enlarged by the kernel radius,
/// separable Gaussian blur, then standardized to zero mean and unit variance.
fn smooth_field(h: usize, w: usize, kernel: &[f64], rng: &mut impl Rng) -> Vec<f64> {
    let r = kernel.len() / 2;
    let (ph, pw) = (h + 2 * r, w + 2 * r);
    let noise: Vec<f64> = (0..ph * pw).map(|_| rng.sample(StandardNormal)).collect();
    // rows: ph x w
    let mut horiz = vec![0.0; ph * w];
    for y in 0..ph {
        for x in 0..w {
            horiz[y * w + x] = kernel
                .iter()
                .enumerate()
                .map(|(t, kv)| kv * noise[y * pw + x + t])
                .sum();
        }
    }
    let mut field = vec![0.0; h * w];
    for y in 0..h {
        for x in 0..w {
            field[y * w + x] = kernel
                .iter()
                .enumerate()
                .map(|(t, kv)| kv * horiz[(y + t) * w + x])
                .sum();
        }
    }
    let n = field.len() as f64;
    let mean = field.iter().sum::<f64>() / n;
    let var = field.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
    let scale = if var > 0.0 { 1.0 / var.sqrt() } else { 0.0 };
    field.iter_mut().for_each(|v| *v = (*v - mean) * scale);
    field
}

/// K standardized Gaussian fields with length scale `smoothness` (pixels),
/// multiplied by `sharpness` and normalized per pixel by a softmax.
/// Larger sharpness gives purer pixels and narrower mixed borders.
pub fn gaussian_abundance_fields(
    h: usize,
    w: usize,
    k: usize,
    smoothness: f64,
    sharpness: f64,
    seed: u64,
) -> Result<AbundanceField> {
    if h == 0 || w == 0 || k == 0 {
        return Err(Error::invalid(format!("invalid field shape {h}x{w}x{k}")));
    }
    if !(smoothness.is_finite() && smoothness >= 0.0) {
        return Err(Error::invalid(format!("smoothness must be non-negative, got {smoothness}")));
    }
    if !(sharpness.is_finite() && sharpness >= 0.0) {
        return Err(Error::invalid(format!("sharpness must be non-negative, got {sharpness}")));
    }
    let kernel = gaussian_kernel(smoothness);
    let mut rng = rng_for(seed, tags::FIELDS);
    let fields: Vec<Vec<f64>> = (0..k).map(|_| smooth_field(h, w, &kernel, &mut rng)).collect();
    let mut values = Vec::with_capacity(h * w * k);
    let mut logits = vec![0.0; k];
    for p in 0..h * w {
        for (c, f) in fields.iter().enumerate() {
            logits[c] = sharpness * f[p];
        }
        let m = logits.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let exps: Vec<f64> = logits.iter().map(|l| (l - m).exp()).collect();
        let s: f64 = exps.iter().sum();
        values.extend(exps.iter().map(|e| e / s));
    }
    Ok(AbundanceField {
        height: h,
        width: w,
        classes: k,
        values,
    })
}

/// Bilinear interaction coefficients γ_ij for i < j, row-major K×K; entries
/// on and below the diagonal are ignored.
pub type Gamma<'a> = &'a [f64];

/// z = Σ a_i e_i + Σ_{i<j} γ_ij a_i a_j (e_i ⊙ e_j) + n
pub fn gbm_mix(abundances: &[f64], endmembers: &EndmemberSet, gamma: Gamma<'_>, noise: &[f64]) -> Vec<f64> {
    let k = endmembers.len();
    let d = endmembers.bands();
    debug_assert_eq!(abundances.len(), k);
    debug_assert_eq!(gamma.len(), k * k);
    debug_assert_eq!(noise.len(), d);
    let mut z = noise.to_vec();
    for (i, &a) in abundances.iter().enumerate() {
        if a != 0.0 {
            for (zb, e) in z.iter_mut().zip(endmembers.spectrum(i)) {
                *zb += a * e;
            }
        }
    }
    for i in 0..k.saturating_sub(1) {
        for j in i + 1..k {
            let coef = gamma[i * k + j] * abundances[i] * abundances[j];
            if coef != 0.0 {
                let (ei, ej) = (endmembers.spectrum(i), endmembers.spectrum(j));
                for b in 0..d {
                    z[b] += coef * ei[b] * ej[b];
                }
            }
        }
    }
    z
}

/// Noise variance for a signal of mean power `power` at `snr_db`.
pub fn noise_variance(power: f64, snr_db: f64) -> f64 {
    power / 10f64.powf(snr_db / 10.0)
}

/// Adds i.i.d. zero-mean Gaussian noise whose variance makes
/// `10 log10(P_signal / σ²)` equal `snr_db`, with P_signal the mean square of `clean`.
pub fn add_noise_snr(clean: &[f64], snr_db: f64, seed: u64) -> Result<Vec<f64>> {
    if !snr_db.is_finite() {
        return Err(Error::invalid(format!("SNR must be finite, got {snr_db}")));
    }
    if clean.is_empty() {
        return Err(Error::invalid("cannot add noise to an empty signal"));
    }
    let power = clean.iter().map(|v| v * v).sum::<f64>() / clean.len() as f64;
    if power.is_nan() || power <= 0.0 {
        return Err(Error::invalid("signal power is zero, SNR undefined"));
    }
    let sigma = noise_variance(power, snr_db).sqrt();
    let normal = Normal::new(0.0, sigma).map_err(|e| Error::invalid(e.to_string()))?;
    let mut rng = rng_for(seed, tags::NOISE);
    Ok(clean.iter().map(|v| v + normal.sample(&mut rng)).collect())
}

/// Whether bilinear coefficients are drawn per pixel or once for the scene.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GammaMode {
    PerPixel,
    Global,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GbmConfig {
    pub height: usize,
    pub width: usize,
    pub bands: usize,
    pub classes: usize,
    /// `None` disables noise.
    pub snr_db: Option<f64>,
    /// Gaussian field length scale in pixels.
    pub smoothness: f64,
    /// Logit scale applied to the standardized fields before the softmax.
    pub sharpness: f64,
    pub gamma_mode: GammaMode,
    pub seed: u64,
}

impl Default for GbmConfig {
    fn default() -> Self {
        Self {
            height: 100,
            width: 100,
            bands: 64,
            classes: 5,
            snr_db: Some(30.0),
            smoothness: 16.0,
            sharpness: 15.0,
            gamma_mode: GammaMode::PerPixel,
            seed: 0,
        }
    }
}

impl GbmConfig {
    fn validate(&self) -> Result<()> {
        if self.height == 0 || self.width == 0 || self.bands == 0 {
            return Err(Error::invalid("scene dimensions must be positive"));
        }
        if self.classes > self.bands {
            return Err(Error::invalid(format!(
                "{} classes exceed {} bands",
                self.classes, self.bands
            )));
        }
        if let Some(snr) = self.snr_db {
            if !snr.is_finite() {
                return Err(Error::invalid("SNR must be finite"));
            }
        }
        Ok(())
    }
}

/// Everything produced while synthesizing a scene.
#[derive(Debug, Clone)]
pub struct SyntheticScene {
    pub cube: HsiCube,
    pub labels: LabelMap,
    pub endmembers: EndmemberSet,
    pub abundances: AbundanceField,
}

fn draw_gamma(k: usize, rng: &mut impl Rng) -> Vec<f64> {
    let mut g = vec![0.0; k * k];
    for i in 0..k {
        for j in i + 1..k {
            g[i * k + j] = rng.random::<f64>();
        }
    }
    g
}

pub fn generate_scene(cfg: &GbmConfig) -> Result<SyntheticScene> {
    cfg.validate()?;
    let (h, w, d, k) = (cfg.height, cfg.width, cfg.bands, cfg.classes);
    let endmembers = sample_endmembers(d, k, cfg.seed)?;
    let abundances = gaussian_abundance_fields(h, w, k, cfg.smoothness, cfg.sharpness, cfg.seed)?;
    let zero = vec![0.0; d];
    let global_gamma = draw_gamma(k, &mut rng_for(cfg.seed, tags::GAMMA));
    let mut clean = Vec::with_capacity(h * w * d);
    for p in 0..h * w {
        let z = match cfg.gamma_mode {
            GammaMode::Global => gbm_mix(abundances.at(p), &endmembers, &global_gamma, &zero),
            GammaMode::PerPixel => {
                let gamma = draw_gamma(k, &mut counter_rng(cfg.seed, tags::GAMMA, p as u64));
                gbm_mix(abundances.at(p), &endmembers, &gamma, &zero)
            }
        };
        clean.extend(z);
    }
    let values = match cfg.snr_db {
        Some(snr) => add_noise_snr(&clean, snr, cfg.seed)?,
        None => clean,
    };
    let cube = HsiCube::new(h, w, d, values)?;
    let labels = LabelMap::new(h, w, k, abundances.argmax_labels())?;
    Ok(SyntheticScene {
        cube,
        labels,
        endmembers,
        abundances,
    })
}

pub fn generate_synthetic(cfg: &GbmConfig) -> Result<(HsiCube, LabelMap)> {
    let scene = generate_scene(cfg)?;
    Ok((scene.cube, scene.labels))
}
