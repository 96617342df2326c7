use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};

use cnnmrf::data::{
    read_cube, read_labels, read_probmap, stratified_split, write_cube, write_labels, write_probmap, LabelMap,
};
use cnnmrf::metrics::{confusion, per_class_accuracy, scores};
use cnnmrf::mrf::{smooth_labels, Neighborhood};
use cnnmrf::nn::{predict_probmap, read_network, train_epochs, write_network, Network};
use cnnmrf::pipeline::{
    read_palette, run_data_to_dir, run_sweep, sweep_csv, write_ppm, RunConfig, SweepParam, CONFIG_FILE,
};
use cnnmrf::regularize::{majority_vote_labels, median_filter_labels, WindowSpec};
use cnnmrf::synth::{generate_synthetic, GammaMode, GbmConfig};

/// Environment variable holding the log filter (`error`, `warn`, `info`, `debug`).
const LOG_ENV: &str = "CNNMRF_LOG";

#[derive(Parser)]
#[command(name = "cnnmrf", version, about = "CNN + Potts MRF classification of hyperspectral cubes")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a synthetic bilinear-mixture scene.
    Synth(SynthArgs),
    /// Train a network on a stratified split of the labels.
    Train(TrainArgs),
    /// Predict per-pixel class probabilities with a trained network.
    Classify(ClassifyArgs),
    /// Smooth the argmax of a probability map.
    Regularize(RegularizeArgs),
    /// Compare predicted labels against ground truth.
    Evaluate(EvaluateArgs),
    /// Render a label map as a PPM image.
    Render(RenderArgs),
    /// Run the full loop once per value of one parameter.
    Sweep(SweepArgs),
    /// Run the full alternating train / regularize loop.
    Run(RunArgs),
}

#[derive(Args)]
struct SynthArgs {
    #[arg(long)]
    out_cube: PathBuf,
    #[arg(long)]
    out_labels: PathBuf,
    #[arg(long, default_value_t = 100)]
    height: usize,
    #[arg(long, default_value_t = 100)]
    width: usize,
    #[arg(long, default_value_t = 64)]
    bands: usize,
    #[arg(long, default_value_t = 5)]
    classes: usize,
    /// Signal-to-noise ratio in dB.
    #[arg(long, default_value_t = 30.0)]
    snr_db: f64,
    /// Skip the noise stage.
    #[arg(long)]
    noiseless: bool,
    /// Gaussian field length scale in pixels.
    #[arg(long)]
    smoothness: Option<f64>,
    #[arg(long)]
    sharpness: Option<f64>,
    #[arg(long, value_enum, default_value_t = GammaArg::PerPixel)]
    gamma: GammaArg,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Clone, Copy, ValueEnum)]
enum GammaArg {
    PerPixel,
    Global,
}

/// Config file plus `key=value` overrides shared by the loop commands.
#[derive(Args)]
struct ConfigArgs {
    /// Text file of `key = value` lines.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Override one config key; repeatable.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    set: Vec<String>,
    #[arg(long)]
    cube: Option<PathBuf>,
    #[arg(long)]
    labels: Option<PathBuf>,
    #[arg(long)]
    output: Option<PathBuf>,
    #[arg(long)]
    method: Option<String>,
    #[arg(long)]
    mu: Option<f64>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    max_epochs: Option<usize>,
}

impl ConfigArgs {
    fn resolve(&self) -> Result<RunConfig> {
        let mut cfg = RunConfig::default();
        if let Some(path) = &self.config {
            let text = fs::read_to_string(path).with_context(|| format!("reading config {}", path.display()))?;
            cfg.apply_text(&text).with_context(|| format!("in config {}", path.display()))?;
        }
        for kv in &self.set {
            let (k, v) = kv
                .split_once('=')
                .with_context(|| format!("--set expects KEY=VALUE, got `{kv}`"))?;
            cfg.set(k.trim(), v.trim())?;
        }
        let flags: [(&str, Option<String>); 7] = [
            ("cube", self.cube.as_ref().map(|p| p.display().to_string())),
            ("labels", self.labels.as_ref().map(|p| p.display().to_string())),
            ("output", self.output.as_ref().map(|p| p.display().to_string())),
            ("method", self.method.clone()),
            ("mu", self.mu.map(|v| v.to_string())),
            ("seed", self.seed.map(|v| v.to_string())),
            ("max_epochs", self.max_epochs.map(|v| v.to_string())),
        ];
        for (key, value) in flags {
            if let Some(v) = value {
                cfg.set(key, &v)?;
            }
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

#[derive(Args)]
struct TrainArgs {
    #[command(flatten)]
    config: ConfigArgs,
    /// Epochs to train; defaults to `initial_epochs`.
    #[arg(long)]
    epochs: Option<usize>,
    /// Where to write the trained network.
    #[arg(long)]
    network: PathBuf,
}

#[derive(Args)]
struct ClassifyArgs {
    #[arg(long)]
    cube: PathBuf,
    #[arg(long)]
    network: PathBuf,
    /// Probability map output.
    #[arg(long)]
    out: PathBuf,
    /// Also write the per-pixel argmax labels.
    #[arg(long)]
    labels_out: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum RegularizeMethod {
    Mrf,
    Median,
    Majority,
}

#[derive(Args)]
struct RegularizeArgs {
    #[arg(long)]
    probmap: PathBuf,
    #[arg(long, value_enum, default_value_t = RegularizeMethod::Mrf)]
    method: RegularizeMethod,
    #[arg(long, default_value_t = 3)]
    window: usize,
    #[arg(long, default_value_t = 20.0)]
    mu: f64,
    /// Use 8-connected neighbourhoods for the MRF.
    #[arg(long)]
    eight: bool,
    #[arg(long, default_value_t = cnnmrf::mrf::DEFAULT_MAX_SWEEPS)]
    max_sweeps: usize,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct EvaluateArgs {
    /// Ground truth; zero marks pixels to ignore.
    #[arg(long)]
    truth: PathBuf,
    #[arg(long)]
    pred: PathBuf,
    /// Class count; defaults to the largest label seen.
    #[arg(long)]
    classes: Option<usize>,
}

#[derive(Args)]
struct RenderArgs {
    #[arg(long)]
    labels: PathBuf,
    #[arg(long)]
    out: PathBuf,
    /// One `r g b` line per class, for maps with more than 16 classes.
    #[arg(long)]
    palette: Option<PathBuf>,
}

#[derive(Args)]
struct SweepArgs {
    #[command(flatten)]
    config: ConfigArgs,
    /// One of kernel1, conv2_width, depth_preset, patch_size, mu.
    #[arg(long)]
    param: String,
    /// Comma-separated values.
    #[arg(long, value_delimiter = ',', required = true)]
    values: Vec<String>,
}

#[derive(Args)]
struct RunArgs {
    #[command(flatten)]
    config: ConfigArgs,
}

fn main() {
    env_logger::Builder::from_env(env_logger::Env::new().filter_or(LOG_ENV, "warn"))
        .format_timestamp(None)
        .init();
    if let Err(e) = run(Cli::parse()) {
        eprintln!("error: {e:#}");
        std::process::exit(1);
    }
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Synth(a) => synth(a),
        Command::Train(a) => train(a),
        Command::Classify(a) => classify(a),
        Command::Regularize(a) => regularize(a),
        Command::Evaluate(a) => evaluate(a),
        Command::Render(a) => render(a),
        Command::Sweep(a) => sweep(a),
        Command::Run(a) => full_run(a),
    }
}

fn synth(a: SynthArgs) -> Result<()> {
    let defaults = GbmConfig::default();
    let cfg = GbmConfig {
        height: a.height,
        width: a.width,
        bands: a.bands,
        classes: a.classes,
        snr_db: (!a.noiseless).then_some(a.snr_db),
        smoothness: a.smoothness.unwrap_or(defaults.smoothness),
        sharpness: a.sharpness.unwrap_or(defaults.sharpness),
        gamma_mode: match a.gamma {
            GammaArg::PerPixel => GammaMode::PerPixel,
            GammaArg::Global => GammaMode::Global,
        },
        seed: a.seed,
    };
    let (cube, labels) = generate_synthetic(&cfg)?;
    write_cube(&a.out_cube, &cube).with_context(|| format!("writing {}", a.out_cube.display()))?;
    write_labels(&a.out_labels, &labels).with_context(|| format!("writing {}", a.out_labels.display()))?;
    println!(
        "wrote {}x{}x{} cube to {} and {} classes to {}",
        cube.height(),
        cube.width(),
        cube.bands(),
        a.out_cube.display(),
        labels.num_classes(),
        a.out_labels.display()
    );
    Ok(())
}

fn load_pair(cfg: &RunConfig) -> Result<(cnnmrf::data::HsiCube, LabelMap)> {
    let cube_path = cfg.cube.as_ref().context("no cube given (--cube or `cube =`)")?;
    let labels_path = cfg.labels.as_ref().context("no labels given (--labels or `labels =`)")?;
    let cube = read_cube(cube_path).with_context(|| format!("reading {}", cube_path.display()))?;
    let labels = read_labels(labels_path).with_context(|| format!("reading {}", labels_path.display()))?;
    Ok((cube, labels))
}

fn train(a: TrainArgs) -> Result<()> {
    let cfg = a.config.resolve()?;
    let (cube, truth) = load_pair(&cfg)?;
    let (train_set, _) = stratified_split(&truth, cfg.train_split, cfg.seed)?;
    let normalized = cnnmrf::data::normalize_bands(&cube)?;
    let padded = cnnmrf::data::PaddedCube::new(&normalized, cfg.patch_size)?;
    let mut net = Network::init(cfg.network_config(cube.bands(), truth.num_classes()), cfg.seed)?;
    let epochs = a.epochs.unwrap_or(cfg.initial_epochs);
    let losses = train_epochs(&mut net, &padded, &train_set, &cfg.train_config(), epochs)?;
    write_network(&a.network, &net).with_context(|| format!("writing {}", a.network.display()))?;
    if let (Some(first), Some(last)) = (losses.first(), losses.last()) {
        println!("trained {epochs} epochs on {} pixels, loss {first:.4} -> {last:.4}", train_set.len());
    }
    Ok(())
}

fn classify(a: ClassifyArgs) -> Result<()> {
    let cube = read_cube(&a.cube).with_context(|| format!("reading {}", a.cube.display()))?;
    let net = read_network(&a.network).with_context(|| format!("reading {}", a.network.display()))?;
    let normalized = cnnmrf::data::normalize_bands(&cube)?;
    let probmap = predict_probmap(&net, &normalized)?;
    write_probmap(&a.out, &probmap, cube.height(), cube.width())?;
    if let Some(path) = &a.labels_out {
        write_labels(path, &probmap.argmax_map(cube.height(), cube.width())?)?;
    }
    println!("wrote {} posteriors over {} classes to {}", probmap.rows(), probmap.classes(), a.out.display());
    Ok(())
}

fn regularize(a: RegularizeArgs) -> Result<()> {
    let (h, w, probmap) = read_probmap(&a.probmap).with_context(|| format!("reading {}", a.probmap.display()))?;
    let labels = match a.method {
        RegularizeMethod::Mrf => {
            let hood = if a.eight { Neighborhood::Eight } else { Neighborhood::Four };
            smooth_labels(&probmap, h, w, a.mu, hood, a.max_sweeps)?
        }
        RegularizeMethod::Median => median_filter_labels(&probmap.argmax_map(h, w)?, WindowSpec::new(a.window)?)?,
        RegularizeMethod::Majority => {
            majority_vote_labels(&probmap.argmax_map(h, w)?, WindowSpec::new(a.window)?)?
        }
    };
    write_labels(&a.out, &labels)?;
    println!("wrote {h}x{w} labels to {}", a.out.display());
    Ok(())
}

fn evaluate(a: EvaluateArgs) -> Result<()> {
    let truth = read_labels(&a.truth).with_context(|| format!("reading {}", a.truth.display()))?;
    let pred = read_labels(&a.pred).with_context(|| format!("reading {}", a.pred.display()))?;
    let k = a.classes.unwrap_or(truth.num_classes().max(pred.num_classes()));
    let cm = confusion(&truth, &pred, k)?;
    let s = scores(&cm)?;
    println!("pixels {}", cm.total());
    println!("OA    {:.2}", 100.0 * s.oa);
    println!("AA    {:.2}", 100.0 * s.aa);
    println!("kappa {:.2}", 100.0 * s.kappa);
    for (i, acc) in per_class_accuracy(&cm).iter().enumerate() {
        match acc {
            Some(v) => println!("class {:>3} {:.2}", i + 1, 100.0 * v),
            None => println!("class {:>3} -", i + 1),
        }
    }
    Ok(())
}

fn render(a: RenderArgs) -> Result<()> {
    let labels = read_labels(&a.labels).with_context(|| format!("reading {}", a.labels.display()))?;
    let palette = a.palette.as_ref().map(read_palette).transpose()?;
    write_ppm(&a.out, &labels, palette.as_deref())?;
    println!("wrote {}x{} image to {}", labels.width(), labels.height(), a.out.display());
    Ok(())
}

fn output_dir(cfg: &RunConfig) -> Result<&Path> {
    cfg.output.as_deref().context("no output directory (--output or `output =`)")
}

fn sweep(a: SweepArgs) -> Result<()> {
    let cfg = a.config.resolve()?;
    let param: SweepParam = a.param.parse()?;
    let out = output_dir(&cfg)?;
    let (cube, truth) = load_pair(&cfg)?;
    fs::create_dir_all(out)?;
    fs::write(out.join(CONFIG_FILE), cfg.echo())?;
    let rows = run_sweep(&cfg, param, &a.values, &cube, &truth)?;
    let csv = sweep_csv(param, &rows);
    let path = out.join(format!("sweep_{}.csv", param.name()));
    fs::write(&path, &csv)?;
    print!("{csv}");
    Ok(())
}

fn full_run(a: RunArgs) -> Result<()> {
    let cfg = a.config.resolve()?;
    let out = output_dir(&cfg)?.to_path_buf();
    let (cube, truth) = load_pair(&cfg)?;
    if cube.height() != truth.height() || cube.width() != truth.width() {
        bail!(
            "cube is {}x{} but labels are {}x{}",
            cube.height(),
            cube.width(),
            truth.height(),
            truth.width()
        );
    }
    let results = run_data_to_dir(&cfg, &cube, &truth, &out)?;
    for (repeat, r) in results.iter().enumerate() {
        let cp = r.last();
        println!(
            "{} seed {} repeat {}: OA {:.2} AA {:.2} kappa {:.2} (network alone OA {:.2})",
            r.method,
            r.seed,
            repeat,
            100.0 * cp.scores.oa,
            100.0 * cp.scores.aa,
            100.0 * cp.scores.kappa,
            100.0 * cp.cnn_scores.oa
        );
    }
    println!("artifacts in {}", out.display());
    Ok(())
}
