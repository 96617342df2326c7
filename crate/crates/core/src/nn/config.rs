use crate::error::{Error, Result};

/// One convolution + ReLU + 2×2 ceil-mode max-pool block.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ConvSpec {
    pub filters: usize,
    pub kernel: usize,
}

/// Weight initialization. `Scaled` draws N(0, 1) and divides by √fan_in;
/// `Raw` keeps the unit variance.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum InitScheme {
    Scaled,
    Raw,
}

impl InitScheme {
    pub fn name(self) -> &'static str {
        match self {
            InitScheme::Scaled => "scaled",
            InitScheme::Raw => "raw",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "scaled" => Some(InitScheme::Scaled),
            "raw" => Some(InitScheme::Raw),
            _ => None,
        }
    }
}

pub const POOL: usize = 2;

pub(crate) fn pooled(n: usize) -> usize {
    n.div_ceil(POOL)
}

#[derive(Debug, Clone, PartialEq)]
pub struct NetworkConfig {
    pub patch_size: usize,
    pub bands: usize,
    pub classes: usize,
    pub conv: Vec<ConvSpec>,
    /// Hidden fully connected widths; the K-way output layer is implicit.
    pub dense: Vec<usize>,
    pub dropout: f64,
    pub init: InitScheme,
}

impl NetworkConfig {
    /// k = 9, conv 100@5×5 and 200@3×3, dense 200 and 100, dropout 0.5.
    pub fn new(bands: usize, classes: usize) -> Self {
        Self {
            patch_size: 9,
            bands,
            classes,
            conv: vec![
                ConvSpec {
                    filters: 100,
                    kernel: 5,
                },
                ConvSpec {
                    filters: 200,
                    kernel: 3,
                },
            ],
            dense: vec![200, 100],
            dropout: 0.5,
            init: InitScheme::Scaled,
        }
    }

    /// Spatial side of every feature map: `[k, conv1, pool1, conv2, pool2, ...]`.
    pub fn feature_sizes(&self) -> Result<Vec<usize>> {
        if self.patch_size == 0 || self.patch_size.is_multiple_of(2) {
            return Err(Error::config(format!(
                "patch size must be odd and positive, got {}",
                self.patch_size
            )));
        }
        if self.bands == 0 || self.classes == 0 {
            return Err(Error::config("bands and classes must be positive"));
        }
        if self.conv.is_empty() {
            return Err(Error::config("at least one convolution block is required"));
        }
        if !(0.0..1.0).contains(&self.dropout) {
            return Err(Error::config(format!("dropout rate must be in [0, 1), got {}", self.dropout)));
        }
        let mut sizes = vec![self.patch_size];
        let mut side = self.patch_size as isize;
        for (i, spec) in self.conv.iter().enumerate() {
            if spec.filters == 0 || spec.kernel == 0 {
                return Err(Error::config(format!("conv{} needs positive filters and kernel", i + 1)));
            }
            let out = side - spec.kernel as isize + 1;
            if out < 1 {
                return Err(Error::config(format!(
                    "n{} = {} - {} + 1 = {} violates n{} >= 1 (patch size {} too small for conv{} kernel {})",
                    2 * i + 1,
                    side,
                    spec.kernel,
                    out,
                    2 * i + 1,
                    self.patch_size,
                    i + 1,
                    spec.kernel
                )));
            }
            sizes.push(out as usize);
            side = pooled(out as usize) as isize;
            sizes.push(side as usize);
        }
        if self.dense.contains(&0) {
            return Err(Error::config("dense layer widths must be positive"));
        }
        Ok(sizes)
    }

    pub fn validate(&self) -> Result<()> {
        self.feature_sizes().map(|_| ())
    }

    /// Length of the flattened input to the first dense layer.
    pub fn flat_len(&self) -> Result<usize> {
        let sizes = self.feature_sizes()?;
        let side = *sizes.last().unwrap();
        Ok(side * side * self.conv.last().unwrap().filters)
    }

    pub fn patch_len(&self) -> usize {
        self.patch_size * self.patch_size * self.bands
    }

    /// Shrinks convolution kernels so every feature map keeps a side of at
    /// least one at the given patch size. Used by the patch-size sweep,
    /// where k = 1 or 3 cannot host a 5×5 first kernel.
    pub fn fitted_to_patch(&self, patch_size: usize) -> Self {
        let mut cfg = self.clone();
        cfg.patch_size = patch_size;
        let mut side = patch_size;
        for spec in &mut cfg.conv {
            spec.kernel = spec.kernel.min(side).max(1);
            side = pooled(side - spec.kernel + 1);
        }
        cfg
    }

    /// Layer presets by total depth (conv, pool and dense layers counted,
    /// output included): 5 drops the second conv block, 7 is the default,
    /// and 9, 11, 13 append 2, 4, 6 hidden layers of width 100.
    pub fn with_depth(&self, depth: usize) -> Result<Self> {
        let mut cfg = self.clone();
        let base = NetworkConfig::new(self.bands, self.classes);
        cfg.dense = base.dense.clone();
        cfg.conv = base.conv.clone();
        cfg.conv[0] = self.conv[0];
        if self.conv.len() > 1 {
            cfg.conv[1].filters = self.conv[1].filters;
        }
        match depth {
            5 => {
                cfg.conv.truncate(1);
            }
            7 => {}
            9 | 11 | 13 => {
                let extra = depth - 7;
                cfg.dense.extend(std::iter::repeat_n(100, extra));
            }
            _ => {
                return Err(Error::config(format!(
                    "depth preset must be one of 5, 7, 9, 11, 13, got {depth}"
                )))
            }
        }
        Ok(cfg)
    }

    /// Depth as counted by [`NetworkConfig::with_depth`].
    pub fn depth(&self) -> usize {
        2 * self.conv.len() + self.dense.len() + 1
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainConfig {
    pub learning_rate: f64,
    pub batch_size: usize,
    pub dropout: bool,
    pub augment: bool,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            learning_rate: 1e-3,
            batch_size: 100,
            dropout: true,
            augment: false,
            seed: 0,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return Err(Error::config(format!(
                "learning rate must be positive, got {}",
                self.learning_rate
            )));
        }
        if self.batch_size == 0 {
            return Err(Error::config("batch size must be at least 1"));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_dimension_chain() {
        let cfg = NetworkConfig::new(162, 5);
        assert_eq!(cfg.feature_sizes().unwrap(), vec![9, 5, 3, 1, 1]);
        assert_eq!(cfg.flat_len().unwrap(), 200);
    }

    #[test]
    fn chain_matches_closed_form() {
        for k in (9..=21).step_by(2) {
            let mut cfg = NetworkConfig::new(3, 2);
            cfg.patch_size = k;
            let s = cfg.feature_sizes().unwrap();
            let n1 = k - 4;
            let n2 = n1.div_ceil(2);
            let n3 = n2 - 2;
            let n4 = n3.div_ceil(2);
            assert_eq!(s, vec![k, n1, n2, n3, n4]);
        }
    }

    #[test]
    fn patch_too_small() {
        let mut cfg = NetworkConfig::new(3, 2);
        cfg.patch_size = 5;
        let err = cfg.validate().unwrap_err();
        assert!(err.to_string().contains("n3"), "{err}");
        cfg.patch_size = 4;
        assert!(cfg.validate().is_err());
    }

    #[test]
    fn fitted_kernels() {
        let cfg = NetworkConfig::new(10, 3);
        for k in [1, 3, 5, 9, 13] {
            let fitted = cfg.fitted_to_patch(k);
            fitted.validate().unwrap();
        }
        assert_eq!(cfg.fitted_to_patch(9), cfg);
        let k1 = cfg.fitted_to_patch(1);
        assert_eq!((k1.conv[0].kernel, k1.conv[1].kernel), (1, 1));
    }

    #[test]
    fn depth_presets() {
        let cfg = NetworkConfig::new(10, 3);
        for d in [5, 7, 9, 11, 13] {
            let c = cfg.with_depth(d).unwrap();
            assert_eq!(c.depth(), d);
            c.validate().unwrap();
        }
        assert!(cfg.with_depth(6).is_err());
    }
}
