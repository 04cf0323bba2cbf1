//! Integrate-and-fire neuron evaluated as a recurrent sequence of synapse
//! stimulations: every excitatory synapse charges the capacitor in turn,
//! then every inhibitory synapse drains it.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rc::{self, RcParams};

pub const DEFAULT_CAPACITANCE: f64 = 1e-6;
pub const DEFAULT_T_MAX: f64 = 50e-3;
pub const DEFAULT_SUPPLY_VOLTAGE: f64 = 1.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Polarity {
    Excitatory,
    Inhibitory,
}

impl Polarity {
    pub const BOTH: [Polarity; 2] = [Polarity::Excitatory, Polarity::Inhibitory];

    pub fn as_str(self) -> &'static str {
        match self {
            Polarity::Excitatory => "excitatory",
            Polarity::Inhibitory => "inhibitory",
        }
    }
}

impl fmt::Display for Polarity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Polarity {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "excitatory" => Ok(Polarity::Excitatory),
            "inhibitory" => Ok(Polarity::Inhibitory),
            other => Err(Error::InvalidArgument(format!("unknown polarity {other:?}"))),
        }
    }
}

/// One resistive input channel.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Synapse {
    pub input_index: usize,
    pub polarity: Polarity,
    /// Ohms.
    pub resistance: f64,
}

impl Synapse {
    pub fn new(input_index: usize, polarity: Polarity, resistance: f64) -> Result<Self> {
        if !(resistance.is_finite() && resistance > 0.0) {
            return Err(Error::InvalidParams(format!(
                "synapse ({input_index}, {polarity}) resistance must be finite and positive, got {resistance}"
            )));
        }
        Ok(Self {
            input_index,
            polarity,
            resistance,
        })
    }

    pub fn excitatory(input_index: usize, resistance: f64) -> Result<Self> {
        Self::new(input_index, Polarity::Excitatory, resistance)
    }

    pub fn inhibitory(input_index: usize, resistance: f64) -> Result<Self> {
        Self::new(input_index, Polarity::Inhibitory, resistance)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct IfNeuron {
    label: String,
    capacitance: f64,
    synapses: Vec<Synapse>,
}

impl IfNeuron {
    pub fn new(label: impl Into<String>, capacitance: f64, synapses: Vec<Synapse>) -> Result<Self> {
        if !(capacitance.is_finite() && capacitance > 0.0) {
            return Err(Error::InvalidParams(format!(
                "capacitance must be finite and positive, got {capacitance}"
            )));
        }
        for (i, s) in synapses.iter().enumerate() {
            if synapses[..i]
                .iter()
                .any(|o| o.input_index == s.input_index && o.polarity == s.polarity)
            {
                return Err(Error::InvalidArgument(format!(
                    "duplicate {} synapse on input {}",
                    s.polarity, s.input_index
                )));
            }
        }
        Ok(Self {
            label: label.into(),
            capacitance,
            synapses,
        })
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn capacitance(&self) -> f64 {
        self.capacitance
    }

    pub fn synapses(&self) -> &[Synapse] {
        &self.synapses
    }

    pub fn synapse(&self, input_index: usize, polarity: Polarity) -> Option<&Synapse> {
        self.synapses
            .iter()
            .find(|s| s.input_index == input_index && s.polarity == polarity)
    }

    pub(crate) fn resistances_mut(&mut self) -> impl Iterator<Item = &mut f64> {
        self.synapses.iter_mut().map(|s| &mut s.resistance)
    }

    pub(crate) fn set_capacitance(&mut self, capacitance: f64) {
        self.capacitance = capacitance;
    }

    pub(crate) fn retain_synapses(&mut self, keep: impl FnMut(&Synapse) -> bool) {
        self.synapses.retain(keep);
    }

    fn params(&self, synapse: &Synapse) -> Result<RcParams> {
        RcParams::new(synapse.resistance, self.capacitance)
    }
}

/// One stimulation step: drive synapse `(input_index, polarity)` for `duration` seconds.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Slot {
    pub input_index: usize,
    pub polarity: Polarity,
    pub duration: f64,
}

/// Ordered stimulation steps; every excitatory slot precedes every inhibitory one.
#[derive(Debug, Clone, PartialEq)]
pub struct StimulationSchedule {
    slots: Vec<Slot>,
    t_max: f64,
}

impl StimulationSchedule {
    pub fn new(slots: Vec<Slot>, t_max: f64) -> Result<Self> {
        if !(t_max.is_finite() && t_max > 0.0) {
            return Err(Error::InvalidSchedule(format!("t_max must be positive, got {t_max}")));
        }
        let mut inhibiting = false;
        for slot in &slots {
            if !(slot.duration.is_finite() && (0.0..=t_max).contains(&slot.duration)) {
                return Err(Error::InvalidSchedule(format!(
                    "slot ({}, {}) duration {} outside [0, {t_max}]",
                    slot.input_index, slot.polarity, slot.duration
                )));
            }
            match slot.polarity {
                Polarity::Inhibitory => inhibiting = true,
                Polarity::Excitatory if inhibiting => {
                    return Err(Error::InvalidSchedule(format!(
                        "excitatory slot on input {} follows an inhibitory slot",
                        slot.input_index
                    )))
                }
                Polarity::Excitatory => {}
            }
        }
        Ok(Self { slots, t_max })
    }

    pub fn slots(&self) -> &[Slot] {
        &self.slots
    }

    pub fn t_max(&self) -> f64 {
        self.t_max
    }

    pub fn duration(&self, input_index: usize, polarity: Polarity) -> Option<f64> {
        self.slots
            .iter()
            .find(|s| s.input_index == input_index && s.polarity == polarity)
            .map(|s| s.duration)
    }
}

/// Turns a stimulus into a schedule. A bias input of 1 is appended; each
/// component becomes `clamp(x, 0, 1) * t_max` seconds on both its
/// excitatory and its inhibitory synapse.
pub fn build_schedule(stimulus: &[f64], t_max: f64) -> Result<StimulationSchedule> {
    if let Some(i) = stimulus.iter().position(|x| x.is_nan()) {
        return Err(Error::InvalidStimulus(format!("component {i} is NaN")));
    }
    let durations: Vec<f64> = stimulus
        .iter()
        .chain(std::iter::once(&1.0))
        .map(|x| x.clamp(0.0, 1.0) * t_max)
        .collect();
    let slots = Polarity::BOTH
        .iter()
        .flat_map(|&polarity| {
            durations.iter().enumerate().map(move |(input_index, &duration)| Slot {
                input_index,
                polarity,
                duration,
            })
        })
        .collect();
    StimulationSchedule::new(slots, t_max)
}

/// Folds the charge and discharge steps over the schedule from an empty
/// capacitor. Slots without a matching synapse leave the voltage unchanged.
pub fn infer_neuron(neuron: &IfNeuron, schedule: &StimulationSchedule, v_in: f64) -> Result<f64> {
    check_supply(v_in)?;
    schedule.slots().iter().try_fold(0.0, |v, slot| {
        let Some(synapse) = neuron.synapse(slot.input_index, slot.polarity) else {
            return Ok(v);
        };
        let params = neuron.params(synapse)?;
        match slot.polarity {
            Polarity::Excitatory => rc::charge_step(v, &params, v_in, slot.duration),
            Polarity::Inhibitory => rc::discharge_step(v, &params, slot.duration),
        }
    })
}

/// Summed `dt / tau` over the matched slots of each phase, `(excitatory, inhibitory)`.
/// The decay products are `exp(-sum)`.
pub(crate) fn decay_exponents(neuron: &IfNeuron, schedule: &StimulationSchedule) -> (f64, f64) {
    let mut excitatory = 0.0;
    let mut inhibitory = 0.0;
    for slot in schedule.slots() {
        if let Some(s) = neuron.synapse(slot.input_index, slot.polarity) {
            let x = slot.duration / (s.resistance * neuron.capacitance);
            match slot.polarity {
                Polarity::Excitatory => excitatory += x,
                Polarity::Inhibitory => inhibitory += x,
            }
        }
    }
    (excitatory, inhibitory)
}

/// `v_in * (1 - prod_e exp(-dt_e/tau_e)) * prod_i exp(-dt_i/tau_i)`.
pub fn closed_form_potential(neuron: &IfNeuron, schedule: &StimulationSchedule, v_in: f64) -> Result<f64> {
    check_supply(v_in)?;
    let (e, i) = decay_exponents(neuron, schedule);
    Ok(v_in * -(-e).exp_m1() * (-i).exp())
}

fn check_supply(v_in: f64) -> Result<()> {
    if v_in.is_finite() && v_in > 0.0 {
        Ok(())
    } else {
        Err(Error::InvalidArgument(format!("supply voltage must be positive, got {v_in}")))
    }
}

/// Index of the largest potential; ties go to the lowest index.
pub fn classify(potentials: &[f64]) -> Result<usize> {
    if potentials.is_empty() {
        return Err(Error::InvalidArgument("cannot classify an empty potential vector".into()));
    }
    if let Some(i) = potentials.iter().position(|v| !v.is_finite()) {
        return Err(Error::InvalidArgument(format!("potential {i} is not finite")));
    }
    let mut best = 0;
    for (i, &v) in potentials.iter().enumerate().skip(1) {
        if v > potentials[best] {
            best = i;
        }
    }
    Ok(best)
}

pub fn spike(potential: f64, threshold: f64) -> bool {
    potential >= threshold
}

/// Neurons sharing a supply, a stimulation window and a readout threshold.
#[derive(Debug, Clone, PartialEq)]
pub struct Network {
    neurons: Vec<IfNeuron>,
    n_inputs: usize,
    supply_voltage: f64,
    t_max: f64,
    threshold: f64,
}

impl Network {
    /// `n_inputs` counts the stimulus components; the bias is input `n_inputs`.
    pub fn new(
        neurons: Vec<IfNeuron>,
        n_inputs: usize,
        supply_voltage: f64,
        t_max: f64,
        threshold: f64,
    ) -> Result<Self> {
        check_supply(supply_voltage)?;
        if !(t_max.is_finite() && t_max > 0.0) {
            return Err(Error::InvalidArgument(format!("t_max must be positive, got {t_max}")));
        }
        if !(threshold.is_finite() && threshold >= 0.0) {
            return Err(Error::InvalidArgument(format!("threshold must be >= 0, got {threshold}")));
        }
        for n in &neurons {
            if let Some(s) = n.synapses.iter().find(|s| s.input_index > n_inputs) {
                return Err(Error::InvalidArgument(format!(
                    "neuron {:?} has a synapse on input {} but the network has {n_inputs} inputs plus bias",
                    n.label, s.input_index
                )));
            }
        }
        Ok(Self {
            neurons,
            n_inputs,
            supply_voltage,
            t_max,
            threshold,
        })
    }

    /// Every neuron gets an excitatory and an inhibitory synapse on every
    /// input and the bias, all at `resistance(neuron, input, polarity)`.
    pub fn fully_connected(
        labels: &[impl AsRef<str>],
        n_inputs: usize,
        capacitance: f64,
        mut resistance: impl FnMut(usize, usize, Polarity) -> f64,
    ) -> Result<Self> {
        let neurons = labels
            .iter()
            .enumerate()
            .map(|(k, label)| {
                let synapses = Polarity::BOTH
                    .iter()
                    .flat_map(|&p| (0..=n_inputs).map(move |i| (i, p)))
                    .map(|(i, p)| Synapse::new(i, p, resistance(k, i, p)))
                    .collect::<Result<Vec<_>>>()?;
                IfNeuron::new(label.as_ref(), capacitance, synapses)
            })
            .collect::<Result<Vec<_>>>()?;
        Self::new(
            neurons,
            n_inputs,
            DEFAULT_SUPPLY_VOLTAGE,
            DEFAULT_T_MAX,
            0.5 * DEFAULT_SUPPLY_VOLTAGE,
        )
    }

    pub fn neurons(&self) -> &[IfNeuron] {
        &self.neurons
    }

    pub(crate) fn neurons_mut(&mut self) -> &mut [IfNeuron] {
        &mut self.neurons
    }

    pub fn labels(&self) -> Vec<&str> {
        self.neurons.iter().map(IfNeuron::label).collect()
    }

    pub fn n_inputs(&self) -> usize {
        self.n_inputs
    }

    pub fn bias_index(&self) -> usize {
        self.n_inputs
    }

    pub fn supply_voltage(&self) -> f64 {
        self.supply_voltage
    }

    pub fn t_max(&self) -> f64 {
        self.t_max
    }

    pub fn threshold(&self) -> f64 {
        self.threshold
    }

    pub fn synapse_count(&self) -> usize {
        self.neurons.iter().map(|n| n.synapses.len()).sum()
    }

    /// Returns a copy with a different supply voltage; the threshold keeps
    /// its fraction of the supply.
    pub fn with_supply_voltage(&self, supply_voltage: f64) -> Result<Self> {
        check_supply(supply_voltage)?;
        let mut net = self.clone();
        net.threshold = self.threshold / self.supply_voltage * supply_voltage;
        net.supply_voltage = supply_voltage;
        Ok(net)
    }

    pub fn with_threshold(mut self, threshold: f64) -> Result<Self> {
        if !(threshold.is_finite() && threshold >= 0.0) {
            return Err(Error::InvalidArgument(format!("threshold must be >= 0, got {threshold}")));
        }
        self.threshold = threshold;
        Ok(self)
    }

    pub fn with_t_max(mut self, t_max: f64) -> Result<Self> {
        if !(t_max.is_finite() && t_max > 0.0) {
            return Err(Error::InvalidArgument(format!("t_max must be positive, got {t_max}")));
        }
        self.t_max = t_max;
        Ok(self)
    }

    pub fn schedule(&self, stimulus: &[f64]) -> Result<StimulationSchedule> {
        if stimulus.len() != self.n_inputs {
            return Err(Error::InvalidStimulus(format!(
                "expected {} components, got {}",
                self.n_inputs,
                stimulus.len()
            )));
        }
        build_schedule(stimulus, self.t_max)
    }

    /// Final membrane potential of every neuron, in neuron order.
    pub fn infer(&self, stimulus: &[f64]) -> Result<Vec<f64>> {
        let schedule = self.schedule(stimulus)?;
        self.infer_schedule(&schedule)
    }

    pub fn infer_schedule(&self, schedule: &StimulationSchedule) -> Result<Vec<f64>> {
        self.neurons
            .iter()
            .map(|n| infer_neuron(n, schedule, self.supply_voltage))
            .collect()
    }

    pub fn classify(&self, stimulus: &[f64]) -> Result<usize> {
        classify(&self.infer(stimulus)?)
    }

    pub fn spikes(&self, potentials: &[f64]) -> Vec<bool> {
        potentials.iter().map(|&v| spike(v, self.threshold)).collect()
    }
}

pub fn infer_network(net: &Network, stimulus: &[f64]) -> Result<Vec<f64>> {
    net.infer(stimulus)
}
