use std::fs;
use std::path::{Path, PathBuf};

use super::config::RunConfig;
use super::render::write_ppm;
use super::report::{checkpoints_csv, loss_csv, metrics_csv, timings_csv};
use super::run::{run_on_data, RunResult};
use crate::data::{read_cube, read_labels, write_labels, write_probmap, HsiCube, LabelMap};
use crate::error::{Error, Result, Stage, StageExt};
use crate::nn::write_network;

pub const CONFIG_FILE: &str = "config.txt";
pub const METRICS_FILE: &str = "metrics.csv";
pub const CHECKPOINTS_FILE: &str = "checkpoints.csv";
pub const LOSS_FILE: &str = "loss.csv";
pub const TIMINGS_FILE: &str = "timings.csv";
/// Regularized labels of a run, inside its repeat directory.
pub const LABELS_FILE: &str = "labels.csv";
pub const CNN_LABELS_FILE: &str = "cnn_labels.csv";
pub const TEST_LABELS_FILE: &str = "test_labels.csv";
pub const TRAIN_LABELS_FILE: &str = "train_labels.csv";
pub const PROBMAP_FILE: &str = "probmap.prob";
pub const NETWORK_FILE: &str = "network.cnnw";

pub fn repeat_dir(output: &Path, repeat: usize) -> PathBuf {
    output.join(format!("repeat-{repeat}"))
}

fn required<'a>(path: &'a Option<PathBuf>, key: &str) -> Result<&'a Path> {
    path.as_deref()
        .ok_or_else(|| Error::config(format!("`{key}` is not set")))
}

/// Loads the cube and ground truth named by the config.
pub fn load_inputs(cfg: &RunConfig) -> Result<(HsiCube, LabelMap)> {
    let cube = read_cube(required(&cfg.cube, "cube")?).stage(Stage::Load)?;
    let truth = read_labels(required(&cfg.labels, "labels")?).stage(Stage::Load)?;
    Ok((cube, truth))
}

/// Writes one run's maps, posteriors and network into `dir`.
pub fn write_run_artifacts(dir: &Path, result: &RunResult, truth: &LabelMap) -> Result<()> {
    fs::create_dir_all(dir)?;
    let (h, w) = (truth.height(), truth.width());
    write_labels(dir.join(LABELS_FILE), &result.labels)?;
    write_labels(dir.join(CNN_LABELS_FILE), &result.cnn_labels)?;
    write_labels(dir.join(TEST_LABELS_FILE), &truth.restricted_to(&result.test))?;
    write_labels(dir.join(TRAIN_LABELS_FILE), &truth.restricted_to(&result.train))?;
    write_probmap(dir.join(PROBMAP_FILE), &result.probmap, h, w)?;
    write_network(dir.join(NETWORK_FILE), &result.network)?;
    if truth.num_classes() <= 16 {
        write_ppm(dir.join("labels.ppm"), &result.labels, None)?;
        write_ppm(dir.join("cnn_labels.ppm"), &result.cnn_labels, None)?;
        write_ppm(dir.join("truth.ppm"), truth, None)?;
    }
    Ok(())
}

/// Writes the run-level reports for a set of `(repeat, result)` pairs.
pub fn write_reports(output: &Path, runs: &[(usize, &RunResult)]) -> Result<()> {
    fs::write(output.join(METRICS_FILE), metrics_csv(runs))?;
    fs::write(output.join(CHECKPOINTS_FILE), checkpoints_csv(runs))?;
    fs::write(output.join(LOSS_FILE), loss_csv(runs))?;
    fs::write(output.join(TIMINGS_FILE), timings_csv(runs))?;
    Ok(())
}

/// Full run from files: every repeat uses seed `seed + repeat`; artifacts
/// land under the configured output directory.
pub fn run_to_dir(cfg: &RunConfig) -> Result<Vec<RunResult>> {
    cfg.validate()?;
    let output = required(&cfg.output, "output")?.to_path_buf();
    let (cube, truth) = load_inputs(cfg)?;
    run_data_to_dir(cfg, &cube, &truth, &output)
}

pub fn run_data_to_dir(cfg: &RunConfig, cube: &HsiCube, truth: &LabelMap, output: &Path) -> Result<Vec<RunResult>> {
    fs::create_dir_all(output).stage(Stage::Write)?;
    fs::write(output.join(CONFIG_FILE), cfg.echo()).stage(Stage::Write)?;
    let mut results = Vec::with_capacity(cfg.repeats);
    for repeat in 0..cfg.repeats {
        let mut run_cfg = cfg.clone();
        run_cfg.seed = cfg.seed.wrapping_add(repeat as u64);
        let result = run_on_data(&run_cfg, cube, truth)?;
        write_run_artifacts(&repeat_dir(output, repeat), &result, truth).stage(Stage::Write)?;
        results.push(result);
    }
    let pairs: Vec<(usize, &RunResult)> = results.iter().enumerate().collect();
    write_reports(output, &pairs).stage(Stage::Write)?;
    Ok(results)
}
