//! Closed-form transients of the two switched RC circuits.
//!
//! Charging goes through a series resistor from the supply
//! (`tau * dV/dt = v_in - V`), discharging through a transistor-gated
//! parallel resistor to ground (`tau * dV/dt = -V`). Both have exact
//! exponential solutions, so a stimulation of any length is one step.

use crate::error::{Error, Result};

/// Resistance (ohms) and capacitance (farads) of one RC branch.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RcParams {
    resistance: f64,
    capacitance: f64,
}

impl RcParams {
    pub fn new(resistance: f64, capacitance: f64) -> Result<Self> {
        if !(resistance.is_finite() && resistance > 0.0) {
            return Err(Error::InvalidParams(format!(
                "resistance must be finite and positive, got {resistance}"
            )));
        }
        if !(capacitance.is_finite() && capacitance > 0.0) {
            return Err(Error::InvalidParams(format!(
                "capacitance must be finite and positive, got {capacitance}"
            )));
        }
        Ok(Self {
            resistance,
            capacitance,
        })
    }

    pub fn resistance(&self) -> f64 {
        self.resistance
    }

    pub fn capacitance(&self) -> f64 {
        self.capacitance
    }

    /// `R * C` in seconds.
    pub fn time_constant(&self) -> f64 {
        self.resistance * self.capacitance
    }
}

/// Capacitor voltage, the neuron's membrane potential.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Default)]
pub struct CapacitorState {
    pub voltage: f64,
}

impl CapacitorState {
    pub fn discharged() -> Self {
        Self { voltage: 0.0 }
    }

    pub fn charge(self, params: &RcParams, v_in: f64, dt: f64) -> Result<Self> {
        charge_step(self.voltage, params, v_in, dt).map(|voltage| Self { voltage })
    }

    pub fn discharge(self, params: &RcParams, dt: f64) -> Result<Self> {
        discharge_step(self.voltage, params, dt).map(|voltage| Self { voltage })
    }
}

pub fn time_constant(params: &RcParams) -> f64 {
    params.time_constant()
}

fn check_duration(dt: f64) -> Result<()> {
    if dt.is_finite() && dt >= 0.0 {
        Ok(())
    } else {
        Err(Error::InvalidDuration(dt))
    }
}

/// Voltage after charging from `v0` toward `v_in` for `dt` seconds.
///
/// Requires `0 <= v0 <= v_in`; a capacitor above the supply would discharge
/// through the series branch, which the switched topology never does.
pub fn charge_step(v0: f64, params: &RcParams, v_in: f64, dt: f64) -> Result<f64> {
    let gain = charge_gain(v0, params, v_in, dt)?;
    Ok((v0 + gain).clamp(v0, v_in))
}

/// Voltage gained by a charge step, `(v_in - v0) * (1 - exp(-dt / tau))`,
/// without the cancellation of subtracting two nearly equal voltages.
pub fn charge_gain(v0: f64, params: &RcParams, v_in: f64, dt: f64) -> Result<f64> {
    check_duration(dt)?;
    if !(v0.is_finite() && v_in.is_finite() && v0 >= 0.0 && v0 <= v_in) {
        return Err(Error::InvalidArgument(format!(
            "charge step needs 0 <= v0 <= v_in, got v0={v0}, v_in={v_in}"
        )));
    }
    Ok((v_in - v0) * -(-dt / params.time_constant()).exp_m1())
}

/// Voltage after discharging `v0` through the parallel branch for `dt` seconds.
pub fn discharge_step(v0: f64, params: &RcParams, dt: f64) -> Result<f64> {
    check_duration(dt)?;
    if !(v0.is_finite() && v0 >= 0.0) {
        return Err(Error::InvalidArgument(format!(
            "discharge step needs v0 >= 0, got {v0}"
        )));
    }
    Ok(v0 * (-dt / params.time_constant()).exp())
}

/// Voltage lost by a discharge step, `v0 * (1 - exp(-dt / tau))`.
pub fn discharge_loss(v0: f64, params: &RcParams, dt: f64) -> Result<f64> {
    check_duration(dt)?;
    if !(v0.is_finite() && v0 >= 0.0) {
        return Err(Error::InvalidArgument(format!(
            "discharge step needs v0 >= 0, got {v0}"
        )));
    }
    Ok(v0 * -(-dt / params.time_constant()).exp_m1())
}
