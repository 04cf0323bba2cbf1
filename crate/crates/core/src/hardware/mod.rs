//! How far a built circuit can drift from the simulation: resistor
//! rounding, readout noise, full response maps, energy and timing.

pub mod catalog;
pub mod energy;

use std::collections::BTreeSet;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::neuron::{Network, Polarity};

pub use catalog::{quantize_network, round_resistance, ResistorCatalog};
pub use energy::{energy_per_inference, EnergyReport, NeuronEnergy, StepEnergy};

/// Seeded Gaussian readout noise, clamped to the supply rails.
#[derive(Debug, Clone)]
pub struct ReadoutNoise {
    rng: ChaCha8Rng,
    normal: Normal<f64>,
}

impl ReadoutNoise {
    pub fn new(sigma: f64, seed: u64) -> Result<Self> {
        let normal = Normal::new(0.0, sigma)
            .ok()
            .filter(|_| sigma >= 0.0)
            .ok_or_else(|| Error::InvalidArgument(format!("noise sigma must be >= 0, got {sigma}")))?;
        Ok(Self {
            rng: ChaCha8Rng::seed_from_u64(seed),
            normal,
        })
    }

    pub fn perturb(&mut self, potential: f64, supply_voltage: f64) -> f64 {
        if self.normal.std_dev() == 0.0 {
            return potential;
        }
        (potential + self.normal.sample(&mut self.rng)).clamp(0.0, supply_voltage)
    }
}

pub fn perturb_readout(potential: f64, sigma: f64, supply_voltage: f64, seed: u64) -> Result<f64> {
    Ok(ReadoutNoise::new(sigma, seed)?.perturb(potential, supply_voltage))
}

#[derive(Debug, Clone, PartialEq)]
pub struct ResponsePoint {
    pub pitch: f64,
    pub roll: f64,
    pub potentials: Vec<f64>,
}

/// Potentials of every unit over a regular grid of `[0, 1]^2`.
#[derive(Debug, Clone, PartialEq)]
pub struct ResponseMap {
    pub labels: Vec<String>,
    pub points: Vec<ResponsePoint>,
}

impl ResponseMap {
    /// `pitch,roll,<label>...`, pitch-major.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("pitch,roll");
        for l in &self.labels {
            out.push(',');
            out.push_str(l);
        }
        out.push('\n');
        for p in &self.points {
            out.push_str(&format!("{},{}", p.pitch, p.roll));
            for v in &p.potentials {
                out.push_str(&format!(",{v}"));
            }
            out.push('\n');
        }
        out
    }

    pub fn at(&self, pitch: f64, roll: f64) -> Option<&ResponsePoint> {
        self.points.iter().find(|p| p.pitch == pitch && p.roll == roll)
    }
}

/// Grid coordinates `0, step, 2*step, ..., 1`. When `1/step` is a whole
/// number the points are computed as `i / n` so they land exactly.
pub fn grid_axis(step: f64) -> Result<Vec<f64>> {
    if !(step.is_finite() && step > 0.0 && step <= 1.0) {
        return Err(Error::InvalidArgument(format!("grid step must be in (0, 1], got {step}")));
    }
    let n = (1.0 / step).round();
    if (n * step - 1.0).abs() < 1e-9 {
        let n = n as usize;
        return Ok((0..=n).map(|i| i as f64 / n as f64).collect());
    }
    Ok((0..)
        .map(|i| i as f64 * step)
        .take_while(|x| *x <= 1.0 + 1e-12)
        .map(|x| x.min(1.0))
        .collect())
}

pub fn response_map(net: &Network, grid_step: f64) -> Result<ResponseMap> {
    if net.n_inputs() != 2 {
        return Err(Error::InvalidArgument(format!(
            "response maps need a two-input network, got {} inputs",
            net.n_inputs()
        )));
    }
    let axis = grid_axis(grid_step)?;
    let rows = axis
        .par_iter()
        .map(|&pitch| {
            axis.iter()
                .map(|&roll| {
                    Ok(ResponsePoint {
                        pitch,
                        roll,
                        potentials: net.infer(&[pitch, roll])?,
                    })
                })
                .collect::<Result<Vec<_>>>()
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(ResponseMap {
        labels: net.labels().into_iter().map(str::to_owned).collect(),
        points: rows.into_iter().flatten().collect(),
    })
}

/// Worst-case inference time: one full `t_max` window per distinct
/// (input, polarity) slot that any neuron still uses. Homologous synapses
/// of different neurons are stimulated together.
pub fn max_inference_time(net: &Network) -> f64 {
    let slots: BTreeSet<(Polarity, usize)> = net
        .neurons()
        .iter()
        .flat_map(|n| n.synapses().iter().map(|s| (s.polarity, s.input_index)))
        .collect();
    slots.len() as f64 * net.t_max()
}
