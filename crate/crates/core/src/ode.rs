//! Fixed-step numerical integration of the RC differential equations.
//!
//! This is the reference the closed-form model is checked against; it
//! never calls into [`crate::rc`].

use crate::error::{Error, Result};
use crate::neuron::{IfNeuron, Polarity, StimulationSchedule};
use crate::rc::RcParams;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Method {
    Euler,
    #[default]
    Rk4,
}

/// Step size in seconds; `None` picks `tau / 1000` of the branch being driven.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct IntegratorConfig {
    pub step: Option<f64>,
    pub method: Method,
}

impl IntegratorConfig {
    pub const AUTO_DIVISOR: f64 = 1000.0;
    /// Fixed steps must resolve the time constant at least this finely.
    pub const MIN_RESOLUTION: f64 = 100.0;

    pub fn euler() -> Self {
        Self {
            step: None,
            method: Method::Euler,
        }
    }

    pub fn with_step(step: f64) -> Self {
        Self {
            step: Some(step),
            method: Method::Rk4,
        }
    }

    fn step_for(&self, tau: f64) -> Result<f64> {
        match self.step {
            None => Ok(tau / Self::AUTO_DIVISOR),
            Some(h) if !(h.is_finite() && h > 0.0) => {
                Err(Error::Config(format!("step must be positive, got {h}")))
            }
            Some(h) if h > tau / Self::MIN_RESOLUTION => Err(Error::Config(format!(
                "step {h} s is coarser than tau/{} = {} s",
                Self::MIN_RESOLUTION,
                tau / Self::MIN_RESOLUTION
            ))),
            Some(h) => Ok(h),
        }
    }
}

/// Integrates the scalar ODE `dv/dt = f(v)` over `dt` with fixed `step`;
/// the last step is shortened so the total is exactly `dt`.
pub fn integrate(f: impl Fn(f64) -> f64, v0: f64, dt: f64, step: f64, method: Method) -> Result<f64> {
    if !(dt.is_finite() && dt >= 0.0) {
        return Err(Error::InvalidDuration(dt));
    }
    if !(step.is_finite() && step > 0.0) {
        return Err(Error::Config(format!("step must be positive, got {step}")));
    }
    let advance = |v: f64, h: f64| match method {
        Method::Euler => v + h * f(v),
        Method::Rk4 => {
            let k1 = f(v);
            let k2 = f(v + 0.5 * h * k1);
            let k3 = f(v + 0.5 * h * k2);
            let k4 = f(v + h * k3);
            v + h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        }
    };
    let full = (dt / step).floor();
    let mut v = v0;
    for _ in 0..full as u64 {
        v = advance(v, step);
    }
    let rest = dt - full * step;
    if rest > 0.0 {
        v = advance(v, rest);
    }
    Ok(v)
}

/// Numerical solution of `tau * dV/dt = v_in - V`.
pub fn integrate_charge(v0: f64, params: &RcParams, v_in: f64, dt: f64, cfg: &IntegratorConfig) -> Result<f64> {
    let tau = params.time_constant();
    integrate(|v| (v_in - v) / tau, v0, dt, cfg.step_for(tau)?, cfg.method)
}

/// Numerical solution of `tau * dV/dt = -V`.
pub fn integrate_discharge(v0: f64, params: &RcParams, dt: f64, cfg: &IntegratorConfig) -> Result<f64> {
    let tau = params.time_constant();
    integrate(|v| -v / tau, v0, dt, cfg.step_for(tau)?, cfg.method)
}

/// Slot-by-slot numerical counterpart of [`crate::neuron::infer_neuron`].
pub fn integrate_schedule(
    neuron: &IfNeuron,
    schedule: &StimulationSchedule,
    v_in: f64,
    cfg: &IntegratorConfig,
) -> Result<f64> {
    schedule.slots().iter().try_fold(0.0, |v, slot| {
        let Some(s) = neuron.synapse(slot.input_index, slot.polarity) else {
            return Ok(v);
        };
        let params = RcParams::new(s.resistance, neuron.capacitance())?;
        match slot.polarity {
            Polarity::Excitatory => integrate_charge(v, &params, v_in, slot.duration, cfg),
            Polarity::Inhibitory => integrate_discharge(v, &params, slot.duration, cfg),
        }
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bundled;
    use crate::neuron::{build_schedule, infer_neuron, Slot};
    use crate::rc;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn tau10() -> RcParams {
        RcParams::new(10e3, 1e-6).unwrap()
    }

    #[test]
    fn charge_examples() {
        let cfg = IntegratorConfig::default();
        let v = integrate_charge(0.0, &tau10(), 1.0, 10e-3, &cfg).unwrap();
        assert!((v - 0.632_120_558_8).abs() < 1e-6);
        assert_eq!(integrate_charge(0.3, &tau10(), 1.0, 0.0, &cfg).unwrap(), 0.3);
    }

    #[test]
    fn discharge_examples() {
        let cfg = IntegratorConfig::default();
        let v = integrate_discharge(1.0, &tau10(), 10e-3, &cfg).unwrap();
        assert!((v - 0.367_879_441_2).abs() < 1e-6);
        assert_eq!(integrate_discharge(0.3, &tau10(), 0.0, &cfg).unwrap(), 0.3);
    }

    #[test]
    fn bad_steps_are_config_errors() {
        let p = tau10();
        for h in [0.0, -1e-6, f64::NAN, 1e-3] {
            let cfg = IntegratorConfig::with_step(h);
            assert!(matches!(integrate_charge(0.0, &p, 1.0, 1e-3, &cfg), Err(Error::Config(_))), "{h}");
        }
    }

    #[test]
    fn step_longer_than_duration_takes_one_partial_step() {
        let cfg = IntegratorConfig::with_step(1e-5);
        let v = integrate_discharge(1.0, &tau10(), 4e-6, &cfg).unwrap();
        assert!((v - (-4e-4f64).exp()).abs() < 1e-15);
    }

    #[test]
    fn random_single_steps_match_closed_form() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let cfg = IntegratorConfig::default();
        for _ in 0..200 {
            let p = RcParams::new(rng.random_range(1e3..1e6), 1e-6).unwrap();
            let v_in = rng.random_range(0.5..5.0);
            let v0 = rng.random_range(0.0..v_in);
            let dt = rng.random_range(0.0..0.05);
            let a = integrate_charge(v0, &p, v_in, dt, &cfg).unwrap();
            let b = rc::charge_step(v0, &p, v_in, dt).unwrap();
            assert!((a - b).abs() <= 1e-6 * b.abs(), "charge {a} vs {b}");
            let a = integrate_discharge(v0, &p, dt, &cfg).unwrap();
            let b = rc::discharge_step(v0, &p, dt).unwrap();
            assert!((a - b).abs() <= 1e-6 * b.abs().max(1e-300), "discharge {a} vs {b}");
        }
    }

    #[test]
    fn schedule_examples() {
        let sit = bundled::table1_pruned().neurons()[2].clone();
        let sit = &sit;
        let s = build_schedule(&[0.0, 0.25], 50e-3).unwrap();
        let v = integrate_schedule(sit, &s, 1.0, &IntegratorConfig::default()).unwrap();
        assert!((v - 0.900_368).abs() < 1e-5);

        let empty = StimulationSchedule::new(Vec::<Slot>::new(), 50e-3).unwrap();
        assert_eq!(integrate_schedule(sit, &empty, 1.0, &IntegratorConfig::default()).unwrap(), 0.0);
    }

    #[test]
    fn random_schedules_match_recurrent_model() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let net = bundled::table1();
        let cfg = IntegratorConfig::default();
        let mut worst: f64 = 0.0;
        for _ in 0..100 {
            let x = [rng.random_range(0.0..1.0), rng.random_range(0.0..1.0)];
            let s = build_schedule(&x, 50e-3).unwrap();
            for n in net.neurons() {
                let a = integrate_schedule(n, &s, 1.0, &cfg).unwrap();
                let b = infer_neuron(n, &s, 1.0).unwrap();
                if a != b {
                    worst = worst.max((a - b).abs() / a.abs().max(b.abs()));
                }
            }
        }
        assert!(worst <= 1e-6, "{worst}");
    }

    fn deviation(method: Method, step: f64) -> f64 {
        let tau = 10e-3;
        let dt = 20e-3;
        let v = integrate(|v| (1.0 - v) / tau, 0.0, dt, step, method).unwrap();
        (v - (1.0 - (-dt / tau).exp())).abs()
    }

    #[test]
    fn rk4_converges_at_fourth_order() {
        let tau = 10e-3;
        for h in [tau / 4.0, tau / 8.0, tau / 16.0] {
            let ratio = deviation(Method::Rk4, h) / deviation(Method::Rk4, h / 2.0);
            assert!(ratio >= 8.0, "h={h}: ratio {ratio}");
        }
    }

    #[test]
    fn euler_converges_at_first_order() {
        let tau = 10e-3;
        for h in [tau / 50.0, tau / 100.0, tau / 200.0] {
            let ratio = deviation(Method::Euler, h) / deviation(Method::Euler, h / 2.0);
            assert!((1.8..2.2).contains(&ratio), "h={h}: ratio {ratio}");
        }
    }
}
