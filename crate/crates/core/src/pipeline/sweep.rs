use std::fmt::Write as _;
use std::str::FromStr;

use super::config::RunConfig;
use super::run::{run_on_data, RunResult};
use crate::data::{HsiCube, LabelMap};
use crate::error::{Error, Result};

/// Parameters the sensitivity sweeps can vary.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SweepParam {
    /// First convolution kernel side.
    Kernel1,
    /// Filter count of the second convolution.
    Conv2Width,
    /// Network depth preset (5, 7, 9, 11, 13).
    DepthPreset,
    /// Patch side; kernels shrink when the patch cannot hold them.
    PatchSize,
    /// Smoothness weight.
    Mu,
}

impl SweepParam {
    pub const ALL: [SweepParam; 5] = [
        SweepParam::Kernel1,
        SweepParam::Conv2Width,
        SweepParam::DepthPreset,
        SweepParam::PatchSize,
        SweepParam::Mu,
    ];

    pub fn name(self) -> &'static str {
        match self {
            SweepParam::Kernel1 => "kernel1",
            SweepParam::Conv2Width => "conv2_width",
            SweepParam::DepthPreset => "depth_preset",
            SweepParam::PatchSize => "patch_size",
            SweepParam::Mu => "mu",
        }
    }

    /// The base config with this parameter set to `value`.
    pub fn apply(self, base: &RunConfig, value: &str) -> Result<RunConfig> {
        let mut cfg = base.clone();
        match self {
            SweepParam::Kernel1 => cfg.set("conv1_kernel", value)?,
            SweepParam::Conv2Width => cfg.set("conv2_width", value)?,
            SweepParam::DepthPreset => cfg.set("depth_preset", value)?,
            SweepParam::Mu => cfg.set("mu", value)?,
            SweepParam::PatchSize => {
                cfg.set("patch_size", value)?;
                if cfg.patch_size.is_multiple_of(2) || cfg.patch_size == 0 {
                    return Err(Error::config(format!("patch size must be odd, got {value}")));
                }
                cfg.conv = cfg.network_config(1, 1).fitted_to_patch(cfg.patch_size).conv;
            }
        }
        Ok(cfg)
    }
}

impl FromStr for SweepParam {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        SweepParam::ALL.into_iter().find(|p| p.name() == s).ok_or_else(|| {
            let names: Vec<&str> = SweepParam::ALL.iter().map(|p| p.name()).collect();
            Error::config(format!("unknown sweep parameter `{s}`; valid: {}", names.join(", ")))
        })
    }
}

#[derive(Debug, Clone)]
pub struct SweepRow {
    pub value: String,
    pub result: RunResult,
}

/// One run per value, all with the base seed.
pub fn run_sweep(
    base: &RunConfig,
    param: SweepParam,
    values: &[String],
    cube: &HsiCube,
    truth: &LabelMap,
) -> Result<Vec<SweepRow>> {
    let configs: Vec<RunConfig> = values
        .iter()
        .map(|v| param.apply(base, v))
        .collect::<Result<_>>()?;
    let mut rows = Vec::with_capacity(values.len());
    for (value, cfg) in values.iter().zip(&configs) {
        log::info!("sweep {} = {}", param.name(), value);
        rows.push(SweepRow {
            value: value.clone(),
            result: run_on_data(cfg, cube, truth)?,
        });
    }
    Ok(rows)
}

/// `parameter,value,oa,aa,kappa,argmax_oa` in percent.
pub fn sweep_csv(param: SweepParam, rows: &[SweepRow]) -> String {
    let mut out = String::from("parameter,value,oa,aa,kappa,argmax_oa\n");
    for row in rows {
        let cp = row.result.last();
        let _ = writeln!(
            out,
            "{},{},{:.6},{:.6},{:.6},{:.6}",
            param.name(),
            row.value,
            100.0 * cp.scores.oa,
            100.0 * cp.scores.aa,
            100.0 * cp.scores.kappa,
            100.0 * cp.cnn_scores.oa
        );
    }
    out
}
