//! Gradient-descent training of synapse resistances.
//!
//! Hardware resistances span 1 kΩ..1 MΩ, which makes raw gradients explode.
//! Training therefore runs on `R * scale_factor` with the capacitance divided
//! by the same factor; every time constant, and so every potential, is
//! unchanged while the gradients shrink to a usable range.

pub mod logistic;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::dataset::{Dataset, Posture};
use crate::error::{Error, Result};
use crate::neuron::{
    self, classify, decay_exponents, IfNeuron, Network, Polarity, StimulationSchedule,
    DEFAULT_CAPACITANCE, DEFAULT_SUPPLY_VOLTAGE, DEFAULT_T_MAX,
};

pub const DEFAULT_PRUNE_FRACTION: f64 = 0.999;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainConfig {
    pub learning_rate: f64,
    pub epochs: usize,
    pub seed: u64,
    /// Ohms.
    pub r_min: f64,
    /// Ohms.
    pub r_max: f64,
    /// Initial resistances are drawn log-uniformly from this range (ohms).
    pub init_r_min: f64,
    pub init_r_max: f64,
    pub scale_factor: f64,
    /// Defaults to the supply voltage.
    pub target_high: Option<f64>,
    pub target_low: f64,
    pub capacitance: f64,
    pub supply_voltage: f64,
    pub t_max: f64,
    /// Stop once the loss moved less than this over `early_stop_window` epochs.
    pub early_stop_tolerance: f64,
    pub early_stop_window: usize,
    pub batch_mode: BatchMode,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BatchMode {
    /// One update per epoch from the mean gradient over all samples.
    #[default]
    Full,
    /// One update per sample, visiting samples in a seeded shuffled order.
    PerSample,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            learning_rate: 5e-4,
            epochs: 5000,
            seed: 42,
            r_min: 1e3,
            r_max: 1000e3,
            init_r_min: 10e3,
            init_r_max: 1000e3,
            scale_factor: 1e-6,
            target_high: None,
            target_low: 0.0,
            capacitance: DEFAULT_CAPACITANCE,
            supply_voltage: DEFAULT_SUPPLY_VOLTAGE,
            t_max: DEFAULT_T_MAX,
            early_stop_tolerance: 1e-9,
            early_stop_window: 100,
            batch_mode: BatchMode::Full,
        }
    }
}

impl TrainConfig {
    pub fn target_high(&self) -> f64 {
        self.target_high.unwrap_or(self.supply_voltage)
    }

    fn validate(&self) -> Result<()> {
        let positive = |name: &str, v: f64| {
            if v.is_finite() && v > 0.0 {
                Ok(())
            } else {
                Err(Error::InvalidArgument(format!("{name} must be positive, got {v}")))
            }
        };
        positive("learning_rate", self.learning_rate)?;
        positive("r_min", self.r_min)?;
        positive("scale_factor", self.scale_factor)?;
        positive("capacitance", self.capacitance)?;
        positive("supply_voltage", self.supply_voltage)?;
        positive("t_max", self.t_max)?;
        positive("init_r_min", self.init_r_min)?;
        if !(self.r_min < self.r_max && self.r_max.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "need r_min < r_max, got {} and {}",
                self.r_min, self.r_max
            )));
        }
        if !(self.init_r_min <= self.init_r_max && self.init_r_max.is_finite()) {
            return Err(Error::InvalidArgument("need init_r_min <= init_r_max".into()));
        }
        if self.epochs == 0 {
            return Err(Error::InvalidArgument("epochs must be positive".into()));
        }
        Ok(())
    }
}

/// One-hot target potentials: `high` for `true_class`, `low` elsewhere.
pub fn target_vector(n_classes: usize, true_class: usize, high: f64, low: f64) -> Vec<f64> {
    (0..n_classes)
        .map(|k| if k == true_class { high } else { low })
        .collect()
}

pub fn mse_loss(potentials: &[f64], targets: &[f64]) -> Result<f64> {
    if potentials.len() != targets.len() || potentials.is_empty() {
        return Err(Error::InvalidArgument(format!(
            "mse needs equal non-empty lengths, got {} and {}",
            potentials.len(),
            targets.len()
        )));
    }
    let sum: f64 = potentials
        .iter()
        .zip(targets)
        .map(|(v, t)| (v - t) * (v - t))
        .sum();
    Ok(sum / potentials.len() as f64)
}

/// `dV/dR` for every synapse of `neuron`, in synapse order, where `V` is the
/// final potential `v_in * (1 - A) * B` with `A`, `B` the products of the
/// excitatory and inhibitory decay factors.
pub fn potential_gradients(neuron: &IfNeuron, schedule: &StimulationSchedule, v_in: f64) -> Result<Vec<f64>> {
    if !(v_in.is_finite() && v_in > 0.0) {
        return Err(Error::InvalidArgument(format!("supply voltage must be positive, got {v_in}")));
    }
    let (e, i) = decay_exponents(neuron, schedule);
    let (a, one_minus_a, b) = ((-e).exp(), -(-e).exp_m1(), (-i).exp());
    let c = neuron.capacitance();
    Ok(neuron
        .synapses()
        .iter()
        .map(|s| {
            let dt = schedule.duration(s.input_index, s.polarity).unwrap_or(0.0);
            if dt == 0.0 {
                return 0.0;
            }
            let sensitivity = dt / (s.resistance * s.resistance * c);
            match s.polarity {
                Polarity::Excitatory => -v_in * a * b * sensitivity,
                Polarity::Inhibitory => v_in * one_minus_a * b * sensitivity,
            }
        })
        .collect())
}

/// Multiplies every resistance by `k` and divides every capacitance by `k`.
pub fn rescale_network(net: &Network, k: f64) -> Result<Network> {
    if !(k.is_finite() && k > 0.0) {
        return Err(Error::InvalidArgument(format!("rescale factor must be positive, got {k}")));
    }
    let mut out = net.clone();
    for n in out.neurons_mut() {
        n.resistances_mut().for_each(|r| *r *= k);
        let c = n.capacitance() / k;
        n.set_capacitance(c);
    }
    Ok(out)
}

pub fn clamp_resistances(net: &Network, r_min: f64, r_max: f64) -> Network {
    let mut out = net.clone();
    clamp_in_place(&mut out, r_min, r_max);
    out
}

fn clamp_in_place(net: &mut Network, r_min: f64, r_max: f64) {
    for n in net.neurons_mut() {
        n.resistances_mut().for_each(|r| *r = r.clamp(r_min, r_max));
    }
}

/// Drops every synapse whose resistance reached `threshold_fraction * r_max`.
pub fn prune(net: &Network, r_max: f64, threshold_fraction: f64) -> Network {
    let cutoff = threshold_fraction * r_max;
    let mut out = net.clone();
    for n in out.neurons_mut() {
        n.retain_synapses(|s| s.resistance < cutoff);
    }
    out
}

/// Fully connected network with log-uniform resistances in
/// `[cfg.init_r_min, cfg.init_r_max]`, one neuron per label.
pub fn initial_network(labels: &[impl AsRef<str>], n_inputs: usize, cfg: &TrainConfig) -> Result<Network> {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let (lo, hi) = (cfg.init_r_min.ln(), cfg.init_r_max.ln());
    let net = Network::fully_connected(labels, n_inputs, cfg.capacitance, |_, _, _| {
        if hi > lo {
            rng.random_range(lo..hi).exp()
        } else {
            cfg.init_r_min
        }
    })?;
    net.with_supply_voltage(cfg.supply_voltage)?
        .with_t_max(cfg.t_max)
}

#[derive(Debug, Clone)]
pub struct TrainOutcome {
    /// Hardware units.
    pub network: Network,
    /// Mean loss at the start of each epoch.
    pub loss_history: Vec<f64>,
}

/// Full-batch gradient descent on the mean-squared error between the final
/// potentials and one-hot targets. Per-sample gradients are accumulated in
/// sample order, so a given seed always produces the same bits.
pub fn train(dataset: &Dataset, cfg: &TrainConfig) -> Result<TrainOutcome> {
    let labels = dataset.classes();
    let init = initial_network(&labels.iter().map(|p| p.as_str()).collect::<Vec<_>>(), 2, cfg)?;
    train_from(init, dataset, cfg)
}

/// Like [`train`] but starting from a given hardware-unit network, whose
/// neuron labels must name postures.
pub fn train_from(init: Network, dataset: &Dataset, cfg: &TrainConfig) -> Result<TrainOutcome> {
    cfg.validate()?;
    if dataset.is_empty() {
        return Err(Error::InvalidArgument("cannot train on an empty dataset".into()));
    }
    let labels: Vec<Posture> = init
        .labels()
        .iter()
        .map(|l| l.parse())
        .collect::<Result<_>>()?;
    let n_classes = labels.len();
    let v_in = init.supply_voltage();
    let (lo, hi) = (cfg.r_min * cfg.scale_factor, cfg.r_max * cfg.scale_factor);

    let mut work = clamp_resistances(&rescale_network(&init, cfg.scale_factor)?, lo, hi);

    let batch: Vec<(StimulationSchedule, Vec<f64>)> = dataset
        .samples
        .iter()
        .map(|s| {
            let truth = labels.iter().position(|l| *l == s.label).ok_or_else(|| {
                Error::InvalidArgument(format!("sample label {} has no neuron", s.label))
            })?;
            let targets = target_vector(n_classes, truth, cfg.target_high(), cfg.target_low);
            Ok((work.schedule(&s.features())?, targets))
        })
        .collect::<Result<_>>()?;
    let n = batch.len() as f64;

    let mut history = Vec::with_capacity(cfg.epochs);
    let mut grads: Vec<Vec<f64>> = work
        .neurons()
        .iter()
        .map(|nr| vec![0.0; nr.synapses().len()])
        .collect();

    let accumulate = |work: &Network, sample: &(StimulationSchedule, Vec<f64>), grads: &mut [Vec<f64>]| -> Result<f64> {
        let (schedule, targets) = sample;
        let potentials = work.infer_schedule(schedule)?;
        for (k, nr) in work.neurons().iter().enumerate() {
            let dloss = 2.0 * (potentials[k] - targets[k]) / n_classes as f64;
            for (g, dv) in grads[k].iter_mut().zip(potential_gradients(nr, schedule, v_in)?) {
                *g += dloss * dv;
            }
        }
        mse_loss(&potentials, targets)
    };
    let descend = |work: &mut Network, grads: &mut [Vec<f64>], step: f64| {
        for (nr, g) in work.neurons_mut().iter_mut().zip(grads.iter_mut()) {
            for (r, gk) in nr.resistances_mut().zip(g.iter_mut()) {
                *r = (*r - step * *gk).clamp(lo, hi);
                *gk = 0.0;
            }
        }
    };
    let mut order: Vec<usize> = (0..batch.len()).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed ^ 0x5eed);

    for epoch in 0..cfg.epochs {
        let loss = match cfg.batch_mode {
            BatchMode::Full => {
                let mut loss = 0.0;
                for sample in &batch {
                    loss += accumulate(&work, sample, &mut grads)?;
                }
                descend(&mut work, &mut grads, cfg.learning_rate / n);
                loss / n
            }
            BatchMode::PerSample => {
                let mut loss = 0.0;
                for (schedule, targets) in &batch {
                    loss += mse_loss(&work.infer_schedule(schedule)?, targets)?;
                }
                order.shuffle(&mut rng);
                for &i in &order {
                    accumulate(&work, &batch[i], &mut grads)?;
                    descend(&mut work, &mut grads, cfg.learning_rate);
                }
                loss / n
            }
        };
        if !loss.is_finite() {
            return Err(Error::TrainingDiverged { epoch });
        }
        history.push(loss);

        let w = cfg.early_stop_window;
        if w > 0 && history.len() > w {
            let recent = history[history.len() - 1];
            let past = history[history.len() - 1 - w];
            if (past - recent).abs() < cfg.early_stop_tolerance {
                break;
            }
        }
    }

    let mut network = init.clone();
    for (hw, nr) in network.neurons_mut().iter_mut().zip(work.neurons()) {
        for (r, scaled) in hw.resistances_mut().zip(nr.synapses()) {
            *r = scaled.resistance / cfg.scale_factor;
        }
    }
    clamp_in_place(&mut network, cfg.r_min, cfg.r_max);
    Ok(TrainOutcome {
        network,
        loss_history: history,
    })
}

/// Fraction of samples whose argmax neuron carries the sample's label.
pub fn accuracy(net: &Network, dataset: &Dataset) -> Result<f64> {
    if dataset.is_empty() {
        return Err(Error::InvalidArgument("accuracy of an empty dataset".into()));
    }
    let labels = net.labels();
    let mut correct = 0usize;
    for s in &dataset.samples {
        let k = classify(&neuron::infer_network(net, &s.features())?)?;
        if labels[k] == s.label.as_str() {
            correct += 1;
        }
    }
    Ok(correct as f64 / dataset.len() as f64)
}

/// `epoch,loss` CSV.
pub fn loss_history_csv(history: &[f64]) -> String {
    let mut out = String::from("epoch,loss\n");
    for (e, l) in history.iter().enumerate() {
        out.push_str(&format!("{e},{l}\n"));
    }
    out
}
