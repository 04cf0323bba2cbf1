//! Energy drawn and dissipated by the RC path during one inference.
//!
//! Charging `C` from `v0` to `v1` off a supply `v_in` draws
//! `v_in * C * (v1 - v0)`; the capacitor keeps `C * (v1^2 - v0^2) / 2` and
//! the series resistor burns the rest. Discharging dissipates the stored
//! energy lost, `C * (v0^2 - v1^2) / 2`, and draws nothing.

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::neuron::{IfNeuron, Network, Polarity};
use crate::rc::{self, RcParams};

pub const ENERGY_SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StepEnergy {
    pub input_index: usize,
    pub polarity: Polarity,
    pub duration: f64,
    pub v_start: f64,
    pub v_end: f64,
    pub supply_energy: f64,
    pub stored_energy_delta: f64,
    pub dissipated_energy: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NeuronEnergy {
    pub label: String,
    pub supply_energy: f64,
    /// Energy left on the capacitor at readout.
    pub stored_energy: f64,
    pub dissipated_energy: f64,
    pub steps: Vec<StepEnergy>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnergyReport {
    pub schema_version: u32,
    pub supply_voltage: f64,
    pub stimulus: Vec<f64>,
    pub supply_energy: f64,
    pub stored_energy: f64,
    pub dissipated_energy: f64,
    pub neurons: Vec<NeuronEnergy>,
}

/// `(supply, stored, dissipated)` for a charge from `v0` that gains `gain`
/// volts. The resistor heat comes from its own closed form,
/// `C * (v_in - v0)^2 * (1 - exp(-2 dt / tau)) / 2`, rewritten in `gain`.
pub fn charge_energy(v0: f64, gain: f64, v_in: f64, capacitance: f64) -> (f64, f64, f64) {
    let supply = v_in * capacitance * gain;
    let stored = 0.5 * capacitance * gain * (2.0 * v0 + gain);
    let dissipated = 0.5 * capacitance * gain * (2.0 * (v_in - v0) - gain);
    (supply, stored, dissipated)
}

/// Heat from a discharge of `v0` that loses `loss` volts.
pub fn discharge_energy(v0: f64, loss: f64, capacitance: f64) -> f64 {
    0.5 * capacitance * loss * (2.0 * v0 - loss)
}

fn neuron_energy(neuron: &IfNeuron, net: &Network, stimulus: &[f64]) -> Result<NeuronEnergy> {
    let schedule = net.schedule(stimulus)?;
    let c = neuron.capacitance();
    let v_in = net.supply_voltage();
    let mut v = 0.0;
    let mut steps = Vec::new();
    for slot in schedule.slots() {
        let Some(s) = neuron.synapse(slot.input_index, slot.polarity) else {
            continue;
        };
        let params = RcParams::new(s.resistance, c)?;
        let v0 = v;
        let (supply, stored, dissipated) = match slot.polarity {
            Polarity::Excitatory => {
                let gain = rc::charge_gain(v0, &params, v_in, slot.duration)?;
                v = rc::charge_step(v0, &params, v_in, slot.duration)?;
                charge_energy(v0, gain, v_in, c)
            }
            Polarity::Inhibitory => {
                let loss = rc::discharge_loss(v0, &params, slot.duration)?;
                v = rc::discharge_step(v0, &params, slot.duration)?;
                let lost = discharge_energy(v0, loss, c);
                (0.0, -lost, lost)
            }
        };
        steps.push(StepEnergy {
            input_index: slot.input_index,
            polarity: slot.polarity,
            duration: slot.duration,
            v_start: v0,
            v_end: v,
            supply_energy: supply,
            stored_energy_delta: stored,
            dissipated_energy: dissipated,
        });
    }
    Ok(NeuronEnergy {
        label: neuron.label().to_owned(),
        supply_energy: steps.iter().map(|s| s.supply_energy).sum(),
        stored_energy: 0.5 * c * v * v,
        dissipated_energy: steps.iter().map(|s| s.dissipated_energy).sum(),
        steps,
    })
}

/// Energy of one inference from fully discharged capacitors.
pub fn energy_per_inference(net: &Network, stimulus: &[f64]) -> Result<EnergyReport> {
    let neurons = net
        .neurons()
        .iter()
        .map(|n| neuron_energy(n, net, stimulus))
        .collect::<Result<Vec<_>>>()?;
    Ok(EnergyReport {
        schema_version: ENERGY_SCHEMA_VERSION,
        supply_voltage: net.supply_voltage(),
        stimulus: stimulus.to_vec(),
        supply_energy: neurons.iter().map(|n| n.supply_energy).sum(),
        stored_energy: neurons.iter().map(|n| n.stored_energy).sum(),
        dissipated_energy: neurons.iter().map(|n| n.dissipated_energy).sum(),
        neurons,
    })
}
