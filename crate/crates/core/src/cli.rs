//! `rcif` command line.

use std::ffi::OsString;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::bundled;
use crate::config::RunConfig;
use crate::dataset::{self, Dataset};
use crate::error::{Error, Result};
use crate::hardware::{self, ReadoutNoise, ResistorCatalog};
use crate::model_io;
use crate::neuron::{infer_neuron, Network};
use crate::ode::{self, IntegratorConfig, Method};
use crate::training::{self, logistic, BatchMode};

/// Model argument that loads the bundled reference weights instead of a file.
pub const BUILTIN_TABLE1: &str = "builtin:table1";

#[derive(Debug, Parser)]
#[command(name = "rcif", version, about = "Switched-RC integrate-and-fire neurons")]
struct Cli {
    /// TOML run configuration; flags given here override it.
    #[arg(long, global = true, value_name = "FILE")]
    config: Option<PathBuf>,

    /// Seed for every random stream.
    #[arg(long, global = true)]
    seed: Option<u64>,

    /// Do not echo the effective configuration on stderr.
    #[arg(long, short, global = true)]
    quiet: bool,

    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Generate a synthetic posture dataset as CSV.
    GenData(GenDataArgs),
    /// Train resistances by gradient descent.
    Train(TrainArgs),
    /// Report classification accuracy of a model on a dataset.
    Eval(EvalArgs),
    /// Drop synapses whose resistance reached the ceiling.
    Prune(PruneArgs),
    /// Round every resistance to a standard value.
    Quantize(QuantizeArgs),
    /// Run one inference and print potentials, spikes and the class.
    Infer(InferArgs),
    /// Write potentials over a regular grid of the input square.
    ResponseMap(ResponseMapArgs),
    /// Energy drawn and dissipated by one inference, as JSON.
    Energy(EnergyArgs),
    /// Compare closed-form inference with numerical integration.
    Validate(ValidateArgs),
}

#[derive(Debug, Args)]
struct GenDataArgs {
    /// Samples per class.
    #[arg(long)]
    n: Option<usize>,
    #[arg(long)]
    sigma: Option<f64>,
    /// Whole dataset, or the training part when --test-out is given.
    #[arg(long)]
    out: PathBuf,
    /// Also split off a held-out set and write it here.
    #[arg(long)]
    test_out: Option<PathBuf>,
    #[arg(long)]
    train_fraction: Option<f64>,
}

#[derive(Debug, Args)]
struct TrainArgs {
    #[arg(long)]
    data: PathBuf,
    #[arg(long)]
    out: PathBuf,
    /// Per-epoch loss as `epoch,loss` CSV.
    #[arg(long)]
    loss_out: Option<PathBuf>,
    /// Held-out set to report accuracy on after training.
    #[arg(long)]
    test: Option<PathBuf>,
    #[arg(long)]
    lr: Option<f64>,
    #[arg(long)]
    epochs: Option<usize>,
    #[arg(long)]
    r_min: Option<f64>,
    #[arg(long)]
    r_max: Option<f64>,
    #[arg(long)]
    scale_factor: Option<f64>,
    #[arg(long, value_enum)]
    batch_mode: Option<BatchArg>,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum BatchArg {
    Full,
    PerSample,
}

#[derive(Debug, Args)]
struct EvalArgs {
    #[arg(long)]
    model: String,
    #[arg(long)]
    data: PathBuf,
    /// Fit a logistic-regression baseline on this set and score it on --data.
    #[arg(long)]
    baseline_train: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct PruneArgs {
    #[arg(long)]
    model: String,
    #[arg(long)]
    out: PathBuf,
    /// Resistance ceiling in ohms.
    #[arg(long)]
    r_max: Option<f64>,
    /// Synapses at or above this fraction of the ceiling are removed.
    #[arg(long)]
    fraction: Option<f64>,
}

#[derive(Debug, Args)]
struct QuantizeArgs {
    #[arg(long)]
    model: String,
    #[arg(long)]
    out: PathBuf,
    /// one-significant-digit, e12, e24 or custom:<ohms>,<ohms>,...
    #[arg(long)]
    catalog: Option<String>,
}

#[derive(Debug, Args)]
struct InferArgs {
    #[arg(long)]
    model: String,
    #[arg(long, allow_negative_numbers = true)]
    pitch: f64,
    #[arg(long, allow_negative_numbers = true)]
    roll: f64,
    /// Gaussian readout noise in volts.
    #[arg(long)]
    noise_sigma: Option<f64>,
}

#[derive(Debug, Args)]
struct ResponseMapArgs {
    #[arg(long)]
    model: String,
    #[arg(long)]
    out: PathBuf,
    #[arg(long)]
    step: Option<f64>,
    #[arg(long)]
    noise_sigma: Option<f64>,
}

#[derive(Debug, Args)]
struct EnergyArgs {
    #[arg(long)]
    model: String,
    #[arg(long, allow_negative_numbers = true)]
    pitch: f64,
    #[arg(long, allow_negative_numbers = true)]
    roll: f64,
    /// Write the JSON report here instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct ValidateArgs {
    #[arg(long)]
    model: String,
    #[arg(long)]
    trials: Option<usize>,
    /// Largest acceptable relative error.
    #[arg(long)]
    tolerance: Option<f64>,
    #[arg(long, value_enum, default_value = "rk4")]
    method: MethodArg,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum MethodArg {
    Rk4,
    Euler,
}

enum Failure {
    User(Error),
    Internal(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::TrainingDiverged { .. } => Failure::Internal(e.to_string()),
            e => Failure::User(e),
        }
    }
}

type CmdResult = std::result::Result<(), Failure>;

/// Parses `args` (program name first), runs the subcommand and returns the
/// process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let stdout = std::io::stdout();
    let stderr = std::io::stderr();
    run_with(args, &mut stdout.lock(), &mut stderr.lock())
}

pub fn run_with<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            if e.use_stderr() {
                let _ = write!(err, "{}", e.render());
                return 1;
            }
            let _ = write!(out, "{}", e.render());
            return 0;
        }
    };
    let result = effective_config(&cli).map_err(Failure::from).and_then(|cfg| {
        if !cli.quiet {
            let _ = writeln!(err, "# effective config");
            for line in cfg.to_toml().lines() {
                let _ = writeln!(err, "# {line}");
            }
        }
        dispatch(&cli.command, &cfg, out)
    });
    match result {
        Ok(()) => 0,
        Err(Failure::User(e)) => {
            let _ = writeln!(err, "error: {e}");
            1
        }
        Err(Failure::Internal(msg)) => {
            let _ = writeln!(err, "error: {msg}");
            2
        }
    }
}

fn effective_config(cli: &Cli) -> Result<RunConfig> {
    let mut cfg = match &cli.config {
        Some(path) => RunConfig::load(path)?,
        None => RunConfig::default(),
    };
    if let Some(seed) = cli.seed {
        cfg.set_seed(seed);
    }
    match &cli.command {
        Command::GenData(a) => {
            set(&mut cfg.dataset.n_per_class, a.n);
            set(&mut cfg.dataset.noise_sigma, a.sigma);
            set(&mut cfg.split.train_fraction, a.train_fraction);
        }
        Command::Train(a) => {
            set(&mut cfg.train.learning_rate, a.lr);
            set(&mut cfg.train.epochs, a.epochs);
            set(&mut cfg.train.r_min, a.r_min);
            set(&mut cfg.train.r_max, a.r_max);
            set(&mut cfg.train.scale_factor, a.scale_factor);
            set(
                &mut cfg.train.batch_mode,
                a.batch_mode.map(|b| match b {
                    BatchArg::Full => BatchMode::Full,
                    BatchArg::PerSample => BatchMode::PerSample,
                }),
            );
        }
        Command::Prune(a) => {
            set(&mut cfg.hardware.r_max, a.r_max);
            set(&mut cfg.hardware.prune_fraction, a.fraction);
        }
        Command::Quantize(a) => set(&mut cfg.hardware.catalog, a.catalog.clone()),
        Command::Infer(a) => set(&mut cfg.hardware.readout_noise_sigma, a.noise_sigma),
        Command::ResponseMap(a) => {
            set(&mut cfg.hardware.grid_step, a.step);
            set(&mut cfg.hardware.readout_noise_sigma, a.noise_sigma);
        }
        Command::Validate(a) => {
            set(&mut cfg.validate.trials, a.trials);
            set(&mut cfg.validate.tolerance, a.tolerance);
        }
        Command::Eval(_) | Command::Energy(_) => {}
    }
    cfg.hardware.catalog()?;
    Ok(cfg)
}

fn set<T>(slot: &mut T, value: Option<T>) {
    if let Some(v) = value {
        *slot = v;
    }
}

fn dispatch(cmd: &Command, cfg: &RunConfig, out: &mut dyn Write) -> CmdResult {
    match cmd {
        Command::GenData(a) => gen_data(a, cfg, out),
        Command::Train(a) => train(a, cfg, out),
        Command::Eval(a) => eval(a, out),
        Command::Prune(a) => prune(a, cfg, out),
        Command::Quantize(a) => quantize(a, cfg, out),
        Command::Infer(a) => infer(a, cfg, out),
        Command::ResponseMap(a) => response_map(a, cfg, out),
        Command::Energy(a) => energy(a, out),
        Command::Validate(a) => validate(a, cfg, out),
    }
}

fn load_model(arg: &str) -> Result<Network> {
    if arg == BUILTIN_TABLE1 {
        Ok(bundled::table1())
    } else {
        model_io::load_model(arg)
    }
}

fn write_file(path: &Path, contents: &str) -> Result<()> {
    fs::write(path, contents).map_err(|e| Error::io(path, e))
}

fn say(out: &mut dyn Write, text: std::fmt::Arguments) -> CmdResult {
    out.write_fmt(text)
        .and_then(|_| out.write_all(b"\n"))
        .map_err(|e| Failure::Internal(format!("writing output: {e}")))
}

macro_rules! say {
    ($out:expr, $($t:tt)*) => { say($out, format_args!($($t)*)) };
}

fn gen_data(a: &GenDataArgs, cfg: &RunConfig, out: &mut dyn Write) -> CmdResult {
    let data = dataset::generate(&cfg.dataset)?;
    match &a.test_out {
        None => {
            dataset::write_csv(&data, &a.out)?;
            say!(out, "wrote {} samples to {}", data.len(), a.out.display())
        }
        Some(test_out) => {
            let (train, test) = dataset::split(&data, cfg.split.train_fraction, cfg.seed)?;
            dataset::write_csv(&train, &a.out)?;
            dataset::write_csv(&test, test_out)?;
            say!(out, "wrote {} training samples to {}", train.len(), a.out.display())?;
            say!(out, "wrote {} test samples to {}", test.len(), test_out.display())
        }
    }
}

fn train(a: &TrainArgs, cfg: &RunConfig, out: &mut dyn Write) -> CmdResult {
    let data = dataset::read_csv(&a.data)?;
    let outcome = training::train(&data, &cfg.train)?;
    model_io::save_model(&outcome.network, &a.out)?;
    if let Some(path) = &a.loss_out {
        write_file(path, &training::loss_history_csv(&outcome.loss_history))?;
    }
    let h = &outcome.loss_history;
    say!(out, "epochs: {}", h.len())?;
    say!(out, "initial loss: {:.6}", h[0])?;
    say!(out, "final loss: {:.6}", h[h.len() - 1])?;
    say!(out, "train accuracy: {:.4}", training::accuracy(&outcome.network, &data)?)?;
    if let Some(test) = &a.test {
        let test = dataset::read_csv(test)?;
        say!(out, "test accuracy: {:.4}", training::accuracy(&outcome.network, &test)?)?;
    }
    say!(out, "wrote model to {}", a.out.display())
}

fn eval(a: &EvalArgs, out: &mut dyn Write) -> CmdResult {
    let net = load_model(&a.model)?;
    let data = dataset::read_csv(&a.data)?;
    let acc = training::accuracy(&net, &data)?;
    say!(out, "samples: {}", data.len())?;
    say!(out, "accuracy: {acc:.4}")?;
    confusion(&net, &data, out)?;
    if let Some(path) = &a.baseline_train {
        let train = dataset::read_csv(path)?;
        let model = logistic::LogisticModel::fit(&train, &logistic::LogisticConfig::default())?;
        let base = model.accuracy(&data)?;
        say!(out, "baseline accuracy: {base:.4}")?;
        say!(out, "gap: {:.4}", base - acc)?;
    }
    Ok(())
}

fn confusion(net: &Network, data: &Dataset, out: &mut dyn Write) -> CmdResult {
    let labels = net.labels();
    let mut counts = vec![vec![0usize; labels.len()]; labels.len()];
    for s in &data.samples {
        let Some(truth) = labels.iter().position(|l| *l == s.label.as_str()) else {
            continue;
        };
        counts[truth][net.classify(&s.features())?] += 1;
    }
    say!(out, "confusion (rows true, columns predicted): {}", labels.join(" "))?;
    for (l, row) in labels.iter().zip(&counts) {
        let cells: Vec<String> = row.iter().map(usize::to_string).collect();
        say!(out, "  {l}: {}", cells.join(" "))?;
    }
    Ok(())
}

fn prune(a: &PruneArgs, cfg: &RunConfig, out: &mut dyn Write) -> CmdResult {
    let net = load_model(&a.model)?;
    let pruned = training::prune(&net, cfg.hardware.r_max, cfg.hardware.prune_fraction);
    model_io::save_model(&pruned, &a.out)?;
    say!(out, "synapses: {} of {} kept", pruned.synapse_count(), net.synapse_count())?;
    say!(
        out,
        "max inference time: {:.3} s -> {:.3} s",
        hardware::max_inference_time(&net),
        hardware::max_inference_time(&pruned)
    )?;
    say!(out, "wrote model to {}", a.out.display())
}

fn quantize(a: &QuantizeArgs, cfg: &RunConfig, out: &mut dyn Write) -> CmdResult {
    let catalog: ResistorCatalog = cfg.hardware.catalog()?;
    let net = load_model(&a.model)?;
    let q = hardware::quantize_network(&net, &catalog);
    model_io::save_model(&q, &a.out)?;
    let worst = net
        .neurons()
        .iter()
        .zip(q.neurons())
        .flat_map(|(n, m)| n.synapses().iter().zip(m.synapses()))
        .map(|(s, t)| ((t.resistance - s.resistance) / s.resistance).abs())
        .fold(0.0, f64::max);
    say!(out, "catalog: {catalog}")?;
    say!(out, "max relative resistance change: {worst:.4}")?;
    say!(out, "wrote model to {}", a.out.display())
}

fn noisy_potentials(net: &Network, x: &[f64], noise: &mut ReadoutNoise) -> Result<Vec<f64>> {
    Ok(net
        .infer(x)?
        .into_iter()
        .map(|v| noise.perturb(v, net.supply_voltage()))
        .collect())
}

fn infer(a: &InferArgs, cfg: &RunConfig, out: &mut dyn Write) -> CmdResult {
    let net = load_model(&a.model)?;
    let mut noise = ReadoutNoise::new(cfg.hardware.readout_noise_sigma, cfg.seed)?;
    let potentials = noisy_potentials(&net, &[a.pitch, a.roll], &mut noise)?;
    let spikes = net.spikes(&potentials);
    for ((label, v), s) in net.labels().iter().zip(&potentials).zip(spikes) {
        say!(out, "{label}: {v:.6} V{}", if s { " spike" } else { "" })?;
    }
    let k = crate::neuron::classify(&potentials)?;
    say!(out, "class: {}", net.labels()[k])
}

fn response_map(a: &ResponseMapArgs, cfg: &RunConfig, out: &mut dyn Write) -> CmdResult {
    let net = load_model(&a.model)?;
    let mut noise = ReadoutNoise::new(cfg.hardware.readout_noise_sigma, cfg.seed)?;
    let mut map = hardware::response_map(&net, cfg.hardware.grid_step)?;
    for p in &mut map.points {
        for v in &mut p.potentials {
            *v = noise.perturb(*v, net.supply_voltage());
        }
    }
    write_file(&a.out, &map.to_csv())?;
    say!(out, "wrote {} grid points to {}", map.points.len(), a.out.display())
}

fn energy(a: &EnergyArgs, out: &mut dyn Write) -> CmdResult {
    let net = load_model(&a.model)?;
    let report = hardware::energy_per_inference(&net, &[a.pitch, a.roll])?;
    let json = serde_json::to_string_pretty(&report).map_err(Error::from)? + "\n";
    match &a.out {
        Some(path) => {
            write_file(path, &json)?;
            say!(out, "supply energy: {:.6e} J", report.supply_energy)?;
            say!(out, "dissipated energy: {:.6e} J", report.dissipated_energy)?;
            say!(out, "wrote report to {}", path.display())
        }
        None => out
            .write_all(json.as_bytes())
            .map_err(|e| Failure::Internal(format!("writing output: {e}"))),
    }
}

fn validate(a: &ValidateArgs, cfg: &RunConfig, out: &mut dyn Write) -> CmdResult {
    let net = load_model(&a.model)?;
    let tol = cfg.validate.tolerance;
    if !(tol.is_finite() && tol >= 0.0) {
        return Err(Error::InvalidArgument(format!("tolerance must be >= 0, got {tol}")).into());
    }
    let integrator = IntegratorConfig {
        step: None,
        method: match a.method {
            MethodArg::Rk4 => Method::Rk4,
            MethodArg::Euler => Method::Euler,
        },
    };
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut worst: f64 = 0.0;
    for _ in 0..cfg.validate.trials {
        let x: Vec<f64> = (0..net.n_inputs()).map(|_| rng.random_range(0.0..=1.0)).collect();
        let schedule = net.schedule(&x)?;
        for n in net.neurons() {
            let exact = infer_neuron(n, &schedule, net.supply_voltage())?;
            let numeric = ode::integrate_schedule(n, &schedule, net.supply_voltage(), &integrator)?;
            let scale = exact.abs().max(numeric.abs());
            if scale > 0.0 {
                worst = worst.max((exact - numeric).abs() / scale);
            }
        }
    }
    say!(out, "trials: {}", cfg.validate.trials)?;
    say!(out, "max relative error: {worst:.3e}")?;
    if worst <= tol {
        say!(out, "ok (tolerance {tol:e})")
    } else {
        Err(Failure::Internal(format!(
            "closed form and numerical integration disagree: {worst:.3e} > {tol:e}"
        )))
    }
}
