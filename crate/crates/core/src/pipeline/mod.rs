//! The alternating training loop, parameter sweeps, reports and rendering.

mod config;
mod output;
mod render;
mod report;
mod run;
mod sweep;

pub use config::{Method, RunConfig, KEYS};
pub use output::{
    load_inputs, repeat_dir, run_data_to_dir, run_to_dir, write_reports, write_run_artifacts, CHECKPOINTS_FILE,
    CNN_LABELS_FILE, CONFIG_FILE, LABELS_FILE, LOSS_FILE, METRICS_FILE, NETWORK_FILE, PROBMAP_FILE,
    TEST_LABELS_FILE, TIMINGS_FILE, TRAIN_LABELS_FILE,
};
pub use render::{parse_palette, read_palette, render_ppm, write_ppm, Rgb, PALETTE};
pub use report::{checkpoints_csv, loss_csv, metrics_csv, timings_csv};
pub use run::{regularize_probmap, run_on_data, Checkpoint, RunResult, RunState, Timings};
pub use sweep::{run_sweep, sweep_csv, SweepParam, SweepRow};
