//! Surrogate pitch dynamics of a 1-DoF helicopter beam.
//!
//! The beam obeys
//!
//! ```text
//! J·θ̈ = Kv·V − D·θ̇ − Ks·sin θ
//! ```
//!
//! where `V` is the differential motor voltage. The voltage is held constant
//! over one sample interval and the ODE is integrated with classical RK4 using
//! a fixed number of uniform substeps.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Physical constants of the surrogate plant (SI units).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PlantParams {
    /// Moment of inertia `J` in kg·m².
    pub inertia: f64,
    /// Viscous damping `D` in N·m·s/rad.
    pub damping: f64,
    /// Voltage-to-torque gain `Kv` in N·m/V.
    pub voltage_gain: f64,
    /// Gravity / restoring coefficient `Ks` in N·m.
    pub restoring: f64,
    /// Actuator limit in volts.
    pub v_max: f64,
    /// Sample time in seconds.
    pub dt: f64,
    /// RK4 substeps per sample.
    pub substeps: u32,
}

impl Default for PlantParams {
    fn default() -> Self {
        Self {
            inertia: 0.02,
            damping: 0.05,
            voltage_gain: 0.003,
            restoring: 0.04,
            v_max: 24.0,
            dt: 0.1,
            substeps: 10,
        }
    }
}

/// Largest target magnitude the task ever asks for, in degrees.
const MAX_TARGET_DEG: f64 = 40.0;

impl PlantParams {
    pub fn validate(&self) -> Result<()> {
        let finite = [
            self.inertia,
            self.damping,
            self.voltage_gain,
            self.restoring,
            self.v_max,
            self.dt,
        ]
        .iter()
        .all(|v| v.is_finite());
        if !finite {
            return Err(Error::Config("plant parameters must be finite".into()));
        }
        if !(self.inertia > 0.0) {
            return Err(Error::Config("plant.inertia must be > 0".into()));
        }
        if self.damping < 0.0 {
            return Err(Error::Config("plant.damping must be >= 0".into()));
        }
        if !(self.voltage_gain > 0.0) {
            return Err(Error::Config("plant.voltage_gain must be > 0".into()));
        }
        if self.restoring < 0.0 {
            return Err(Error::Config("plant.restoring must be >= 0".into()));
        }
        if !(self.v_max > 0.0) {
            return Err(Error::Config("plant.v_max must be > 0".into()));
        }
        if !(self.dt > 0.0) {
            return Err(Error::Config("plant.dt must be > 0".into()));
        }
        if self.substeps < 1 {
            return Err(Error::Config("plant.substeps must be >= 1".into()));
        }
        // Every target in [-40°, 40°] must be holdable at full voltage.
        let holdable = self.voltage_gain * self.v_max;
        if holdable < self.restoring * MAX_TARGET_DEG.to_radians().sin() {
            return Err(Error::Config(format!(
                "full voltage torque {holdable} N·m cannot hold a {MAX_TARGET_DEG}° pitch"
            )));
        }
        Ok(())
    }

    /// Pitch at which full positive voltage balances the restoring torque,
    /// or `None` when full voltage overpowers gravity everywhere.
    pub fn full_voltage_equilibrium(&self) -> Option<f64> {
        if self.restoring == 0.0 {
            return None;
        }
        let ratio = self.voltage_gain * self.v_max / self.restoring;
        (ratio <= 1.0).then(|| ratio.asin())
    }

    /// Voltage that holds `pitch` at rest.
    pub fn holding_voltage(&self, pitch: f64) -> f64 {
        self.restoring * pitch.sin() / self.voltage_gain
    }

    fn check_voltage(&self, voltage: f64) -> Result<()> {
        if voltage.is_finite() && voltage.abs() <= self.v_max {
            Ok(())
        } else {
            Err(Error::Contract(format!(
                "voltage {voltage} outside [-{0}, {0}]",
                self.v_max
            )))
        }
    }
}

/// Beam pitch, angular rate and elapsed samples.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct PlantState {
    pub theta: f64,
    pub theta_dot: f64,
    pub steps: u64,
}

impl PlantState {
    pub fn at_rest(theta: f64) -> Self {
        Self {
            theta,
            theta_dot: 0.0,
            steps: 0,
        }
    }

    pub fn is_finite(&self) -> bool {
        self.theta.is_finite() && self.theta_dot.is_finite()
    }

    /// Mechanical energy `½Jθ̇² + Ks(1 − cos θ)`.
    pub fn energy(&self, params: &PlantParams) -> f64 {
        0.5 * params.inertia * self.theta_dot * self.theta_dot
            + params.restoring * (1.0 - self.theta.cos())
    }
}

#[inline]
fn rhs(params: &PlantParams, theta: f64, theta_dot: f64, voltage: f64) -> (f64, f64) {
    let torque = params.voltage_gain * voltage
        - params.damping * theta_dot
        - params.restoring * theta.sin();
    (theta_dot, torque / params.inertia)
}

/// Right-hand side of the pitch ODE: `(dθ/dt, dθ̇/dt)`.
pub fn derivative(state: &PlantState, voltage: f64, params: &PlantParams) -> Result<(f64, f64)> {
    params.check_voltage(voltage)?;
    Ok(rhs(params, state.theta, state.theta_dot, voltage))
}

/// Integrate `(θ, θ̇)` over `duration` with `substeps` RK4 steps at constant voltage.
pub fn integrate(
    theta: f64,
    theta_dot: f64,
    voltage: f64,
    duration: f64,
    substeps: u32,
    params: &PlantParams,
) -> (f64, f64) {
    let h = duration / f64::from(substeps);
    let (mut x, mut v) = (theta, theta_dot);
    for _ in 0..substeps {
        let (k1x, k1v) = rhs(params, x, v, voltage);
        let (k2x, k2v) = rhs(params, x + 0.5 * h * k1x, v + 0.5 * h * k1v, voltage);
        let (k3x, k3v) = rhs(params, x + 0.5 * h * k2x, v + 0.5 * h * k2v, voltage);
        let (k4x, k4v) = rhs(params, x + h * k3x, v + h * k3v, voltage);
        x += h / 6.0 * (k1x + 2.0 * k2x + 2.0 * k3x + k4x);
        v += h / 6.0 * (k1v + 2.0 * k2v + 2.0 * k3v + k4v);
    }
    (x, v)
}

/// Advance the plant by one sample under a zero-order-held voltage.
pub fn step(state: &PlantState, voltage: f64, params: &PlantParams) -> Result<PlantState> {
    params.check_voltage(voltage)?;
    if !state.is_finite() {
        return Err(Error::NonFiniteState {
            theta: state.theta,
            theta_dot: state.theta_dot,
        });
    }
    let (theta, theta_dot) = integrate(
        state.theta,
        state.theta_dot,
        voltage,
        params.dt,
        params.substeps,
        params,
    );
    let next = PlantState {
        theta,
        theta_dot,
        steps: state.steps + 1,
    };
    if !next.is_finite() {
        return Err(Error::NonFiniteState { theta, theta_dot });
    }
    Ok(next)
}
