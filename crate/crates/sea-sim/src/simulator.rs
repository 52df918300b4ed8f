//! Fixed-step simulation of the force-controlled joint.
//!
//! The spring/surface interaction mode sits at |g(x1)| rad/s (about 2.4e5
//! at mid-range, 3.4e5 at the swing extreme) with only a few units of
//! damping, so the loop is integrated as one coupled system: the control
//! law is evaluated inside every integrator stage. RK4's imaginary-axis
//! stability limit |g| dt < 2 sqrt(2) then caps the step; the default
//! dt_plant = 5e-6 s keeps |g| dt below 1.71 across the operating range.
//! The sampled realization (hold the command between controller updates)
//! is retained for the reduced inner-loop mode and for documenting why the
//! full cascade cannot run sample-and-hold: per-sample pumping of the
//! interaction mode, about (|g| T)^2 / 2 per period, outstrips its decay
//! at every realizable rate.

use serde::{Deserialize, Serialize};

use crate::controller::{
    continuous_eval, controller_step, smc_virtual_control, ControlOutput, ControllerConfig,
    ControllerGains, ControllerState,
};
use crate::error::{ModelError, SimError};
use crate::geometry::LinkGeometry;
use crate::plant::{
    evaluate_disturbance, f_term, g_term, joint_accel, plant_derivative, sea_torque,
    DisturbanceProfile, PlantParams, PlantState,
};
use crate::reference::Reference;

/// What the simulation closes the loop around.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum Mode {
    /// Full cascade: controller commands the spring drive U_eq.
    #[default]
    ClosedLoop,
    /// Inner loop idealized: the virtual control u_x is applied as the
    /// spring deflection directly.
    IdealInner,
    /// No control at all; optionally freeze the spring deflection at its
    /// initial value to watch the bare joint.
    Unforced {
        #[serde(default)]
        freeze_spring: bool,
    },
}

/// How controller derivatives and timing are realized.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Realization {
    /// Control law co-integrated with the plant (evaluated every stage).
    #[default]
    Continuous,
    /// Sample-and-hold at the controller update period.
    Sampled,
}

/// Integration and logging settings.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SimConfig {
    /// Plant integration step, s.
    pub dt_plant: f64,
    /// Total simulated time, s.
    pub duration: f64,
    /// Trace every n-th plant step.
    pub decimation: usize,
    /// State magnitude that aborts the run.
    pub divergence_limit: f64,
    /// Validated spring-angle operating range, rad.
    pub theta_min: f64,
    pub theta_max: f64,
    /// Initial plant state.
    pub initial_phi: f64,
    pub initial_phi_dot: f64,
    pub initial_delta: f64,
    pub initial_delta_dot: f64,
    pub mode: Mode,
    pub realization: Realization,
}

impl Default for SimConfig {
    fn default() -> Self {
        Self {
            dt_plant: 5e-6,
            duration: 8.0,
            decimation: 200,
            divergence_limit: 1e6,
            theta_min: -1.2,
            theta_max: 1.2,
            initial_phi: 0.0,
            initial_phi_dot: 0.0,
            initial_delta: 0.0,
            initial_delta_dot: 0.0,
            mode: Mode::ClosedLoop,
            realization: Realization::Continuous,
        }
    }
}

impl SimConfig {
    pub fn initial_state(&self) -> PlantState {
        PlantState {
            phi: self.initial_phi,
            phi_dot: self.initial_phi_dot,
            delta: self.initial_delta,
            delta_dot: self.initial_delta_dot,
        }
    }

    pub fn validate(&self, ctrl: &ControllerConfig) -> Result<(), SimError> {
        if !self.dt_plant.is_finite() || self.dt_plant <= 0.0 {
            return Err(SimError::Setup(format!(
                "dt_plant must be positive, got {}",
                self.dt_plant
            )));
        }
        if !self.duration.is_finite() || self.duration < ctrl.update_period {
            return Err(SimError::Setup(format!(
                "duration {} must cover at least one controller period {}",
                self.duration, ctrl.update_period
            )));
        }
        if self.decimation == 0 {
            return Err(SimError::Setup("decimation must be at least 1".into()));
        }
        if !self.divergence_limit.is_finite() || self.divergence_limit <= 0.0 {
            return Err(SimError::Setup(format!(
                "divergence_limit must be positive, got {}",
                self.divergence_limit
            )));
        }
        if !(self.theta_min < self.theta_max) {
            return Err(SimError::Setup(format!(
                "theta range [{}, {}] is empty",
                self.theta_min, self.theta_max
            )));
        }
        let ratio = ctrl.update_period / self.dt_plant;
        if (ratio - ratio.round()).abs() > 1e-9 * ratio.max(1.0) || ratio < 1.0 - 1e-9 {
            return Err(SimError::Setup(format!(
                "update_period {} must be an integer multiple of dt_plant {}",
                ctrl.update_period, self.dt_plant
            )));
        }
        Ok(())
    }

    fn steps_per_update(&self, ctrl: &ControllerConfig) -> u64 {
        (ctrl.update_period / self.dt_plant).round() as u64
    }
}

/// One decimated trace row.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TraceRecord {
    pub t: f64,
    pub phi_d: f64,
    pub phi: f64,
    pub e1: f64,
    pub sigma: f64,
    pub delta: f64,
    pub delta_dot: f64,
    pub u_x: f64,
    pub u1: f64,
    pub u_eq: f64,
    pub tau_sea: f64,
    pub tau_d: f64,
}

/// A fully assembled scenario, ready to run.
#[derive(Debug, Clone)]
pub struct Simulation {
    pub params: PlantParams,
    pub geom: LinkGeometry,
    pub gains: ControllerGains,
    pub ctrl: ControllerConfig,
    pub sim: SimConfig,
    pub reference: Reference,
    pub disturbance: DisturbanceProfile,
}

/// One RK4 step of y' = f(t, y). The derivative may fail (for example on a
/// singular configuration); the error aborts the step.
pub fn rk4_step<const N: usize, F>(
    t: f64,
    dt: f64,
    y: &[f64; N],
    f: &mut F,
) -> Result<[f64; N], SimError>
where
    F: FnMut(f64, &[f64; N]) -> Result<[f64; N], SimError>,
{
    fn shifted<const N: usize>(y: &[f64; N], k: &[f64; N], s: f64) -> [f64; N] {
        let mut out = *y;
        for i in 0..N {
            out[i] += s * k[i];
        }
        out
    }
    let k1 = f(t, y)?;
    let k2 = f(t + 0.5 * dt, &shifted(y, &k1, 0.5 * dt))?;
    let k3 = f(t + 0.5 * dt, &shifted(y, &k2, 0.5 * dt))?;
    let k4 = f(t + dt, &shifted(y, &k3, dt))?;
    let mut out = *y;
    for i in 0..N {
        out[i] += dt / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
    }
    Ok(out)
}

fn check_bounds<const N: usize>(
    t: f64,
    y: &[f64; N],
    names: &[&'static str; N],
    limit: f64,
) -> Result<(), SimError> {
    for i in 0..N {
        if !y[i].is_finite() || y[i].abs() > limit {
            return Err(SimError::Divergence {
                t,
                component: names[i],
                value: y[i],
                limit,
            });
        }
    }
    Ok(())
}

impl Simulation {
    /// Integrates the configured scenario and returns the decimated trace.
    /// The first row is t = 0 and the last is t = duration.
    pub fn run(&self) -> Result<Vec<TraceRecord>, SimError> {
        self.sim.validate(&self.ctrl)?;
        self.gains
            .validate()
            .map_err(|e| SimError::Setup(e.to_string()))?;
        self.ctrl
            .validate()
            .map_err(|e| SimError::Setup(e.to_string()))?;
        self.geom
            .validate_operating_range(self.sim.theta_min, self.sim.theta_max)
            .map_err(|e| SimError::Setup(e.to_string()))?;
        if let Some(period) = self.reference.period() {
            // The geometry validation only covers the configured theta range,
            // and metrics windows assume the trajectory is fully exercised.
            if self.sim.duration + 1e-12 < period {
                return Err(SimError::Setup(format!(
                    "duration {} s is shorter than one reference period {} s",
                    self.sim.duration, period
                )));
            }
        }

        match (self.sim.mode, self.sim.realization) {
            (Mode::ClosedLoop, Realization::Continuous) => self.run_closed_continuous(),
            (Mode::ClosedLoop, Realization::Sampled) => self.run_closed_sampled(),
            (Mode::IdealInner, Realization::Continuous) => self.run_ideal_continuous(),
            (Mode::IdealInner, Realization::Sampled) => self.run_ideal_sampled(),
            (Mode::Unforced { freeze_spring }, _) => self.run_unforced(freeze_spring),
        }
    }

    fn step_count(&self) -> u64 {
        (self.sim.duration / self.sim.dt_plant).round() as u64
    }

    /// Rejects non-finite or runaway states, and joint angles that leave the
    /// validated operating range (the geometry is only trustworthy inside it).
    /// Every integration loop keeps phi in y[0].
    fn check_state<const N: usize>(
        &self,
        t: f64,
        y: &[f64; N],
        names: &[&'static str; N],
    ) -> Result<(), SimError> {
        check_bounds(t, y, names, self.sim.divergence_limit)?;
        let theta = y[0] - self.geom.alpha;
        if theta < self.sim.theta_min || theta > self.sim.theta_max {
            let limit = if theta < self.sim.theta_min {
                self.sim.theta_min
            } else {
                self.sim.theta_max
            };
            return Err(SimError::Divergence {
                t,
                component: "theta (operating range)",
                value: theta,
                limit,
            });
        }
        Ok(())
    }

    fn model_err(t: f64) -> impl Fn(ModelError) -> SimError {
        move |source| SimError::Model { t, source }
    }

    fn record_instant(
        &self,
        t: f64,
        state: &PlantState,
        out: &ControlOutput,
    ) -> TraceRecord {
        let r = self.reference.sample(t);
        let e1 = r.phi_d - state.phi;
        let sigma = (r.phi_d_dot - state.phi_dot) + self.gains.c * e1;
        TraceRecord {
            t,
            phi_d: r.phi_d,
            phi: state.phi,
            e1,
            sigma,
            delta: state.delta,
            delta_dot: state.delta_dot,
            u_x: out.u_x,
            u1: out.u1,
            u_eq: out.u_eq,
            tau_sea: sea_torque(&self.geom, self.params.k, state.phi, state.delta),
            tau_d: evaluate_disturbance(&self.disturbance, t),
        }
    }

    fn run_closed_continuous(&self) -> Result<Vec<TraceRecord>, SimError> {
        const NAMES: [&str; 6] = [
            "phi",
            "phi_dot",
            "delta",
            "delta_dot",
            "jerk_memory",
            "ux_rate",
        ];
        let dt = self.sim.dt_plant;
        let n = self.step_count();
        let init = self.sim.initial_state();
        let mut y = [
            init.phi,
            init.phi_dot,
            init.delta,
            init.delta_dot,
            0.0,
            0.0,
        ];
        let mut trace = Vec::with_capacity((n / self.sim.decimation as u64 + 2) as usize);

        let mut deriv = |t: f64, s: &[f64; 6]| -> Result<[f64; 6], SimError> {
            let plant = PlantState {
                phi: s[0],
                phi_dot: s[1],
                delta: s[2],
                delta_dot: s[3],
            };
            let r = self.reference.sample(t);
            let ev = continuous_eval(
                &r,
                &plant,
                &self.params,
                &self.geom,
                &self.gains,
                &self.ctrl,
                s[4],
                s[5],
            )
            .map_err(Self::model_err(t))?;
            let tau_d = evaluate_disturbance(&self.disturbance, t);
            let pd = plant_derivative(&self.params, &self.geom, &plant, ev.out.u_eq, tau_d)
                .map_err(Self::model_err(t))?;
            Ok([pd[0], pd[1], pd[2], pd[3], ev.d_jerk_memory, ev.d_ux_rate])
        };

        for i in 0..=n {
            let t = i as f64 * dt;
            if i % self.sim.decimation as u64 == 0 || i == n {
                let plant = PlantState {
                    phi: y[0],
                    phi_dot: y[1],
                    delta: y[2],
                    delta_dot: y[3],
                };
                let r = self.reference.sample(t);
                let ev = continuous_eval(
                    &r,
                    &plant,
                    &self.params,
                    &self.geom,
                    &self.gains,
                    &self.ctrl,
                    y[4],
                    y[5],
                )
                .map_err(Self::model_err(t))?;
                trace.push(self.record_instant(t, &plant, &ev.out));
            }
            if i < n {
                y = rk4_step(t, dt, &y, &mut deriv)?;
                self.check_state(t + dt, &y, &NAMES)?;
            }
        }
        Ok(trace)
    }

    fn run_closed_sampled(&self) -> Result<Vec<TraceRecord>, SimError> {
        const NAMES: [&str; 4] = ["phi", "phi_dot", "delta", "delta_dot"];
        let dt = self.sim.dt_plant;
        let n = self.step_count();
        let spu = self.sim.steps_per_update(&self.ctrl);
        let init = self.sim.initial_state();
        let mut y = [init.phi, init.phi_dot, init.delta, init.delta_dot];
        let mut ctrl_state = ControllerState::default();
        let mut held = ControlOutput {
            u_eq: 0.0,
            u_x: 0.0,
            u1: 0.0,
            sigma: 0.0,
            e1: 0.0,
        };
        let mut trace = Vec::with_capacity((n / self.sim.decimation as u64 + 2) as usize);

        for i in 0..=n {
            let t = i as f64 * dt;
            let plant = PlantState {
                phi: y[0],
                phi_dot: y[1],
                delta: y[2],
                delta_dot: y[3],
            };
            if i < n && i % spu == 0 {
                let r = self.reference.sample(t);
                held = controller_step(
                    &r,
                    &plant,
                    &self.params,
                    &self.geom,
                    &self.gains,
                    &self.ctrl,
                    &mut ctrl_state,
                )
                .map_err(Self::model_err(t))?;
            }
            if i % self.sim.decimation as u64 == 0 || i == n {
                trace.push(self.record_instant(t, &plant, &held));
            }
            if i < n {
                let u_eq = held.u_eq;
                let mut deriv = |tt: f64, s: &[f64; 4]| -> Result<[f64; 4], SimError> {
                    let ps = PlantState {
                        phi: s[0],
                        phi_dot: s[1],
                        delta: s[2],
                        delta_dot: s[3],
                    };
                    let tau_d = evaluate_disturbance(&self.disturbance, tt);
                    plant_derivative(&self.params, &self.geom, &ps, u_eq, tau_d)
                        .map_err(Self::model_err(tt))
                };
                y = rk4_step(t, dt, &y, &mut deriv)?;
                self.check_state(t + dt, &y, &NAMES)?;
            }
        }
        Ok(trace)
    }

    fn ideal_output(&self, t: f64, phi: f64, phi_dot: f64) -> Result<ControlOutput, SimError> {
        let r = self.reference.sample(t);
        let state = PlantState {
            phi,
            phi_dot,
            delta: 0.0,
            delta_dot: 0.0,
        };
        let u_x = smc_virtual_control(
            &r,
            &state,
            &self.params,
            &self.geom,
            &self.gains,
            &self.ctrl,
        )
        .map_err(Self::model_err(t))?;
        let e1 = r.phi_d - phi;
        Ok(ControlOutput {
            u_eq: 0.0,
            u_x,
            u1: 0.0,
            sigma: (r.phi_d_dot - phi_dot) + self.gains.c * e1,
            e1,
        })
    }

    fn ideal_record(&self, t: f64, phi: f64, phi_dot: f64, u_x: f64) -> TraceRecord {
        let state = PlantState {
            phi,
            phi_dot,
            delta: u_x,
            delta_dot: 0.0,
        };
        let out = ControlOutput {
            u_eq: 0.0,
            u_x,
            u1: 0.0,
            sigma: 0.0,
            e1: 0.0,
        };
        self.record_instant(t, &state, &out)
    }

    fn run_ideal_continuous(&self) -> Result<Vec<TraceRecord>, SimError> {
        const NAMES: [&str; 2] = ["phi", "phi_dot"];
        let dt = self.sim.dt_plant;
        let n = self.step_count();
        let mut y = [self.sim.initial_phi, self.sim.initial_phi_dot];
        let mut trace = Vec::with_capacity((n / self.sim.decimation as u64 + 2) as usize);

        let mut deriv = |t: f64, s: &[f64; 2]| -> Result<[f64; 2], SimError> {
            let out = self.ideal_output(t, s[0], s[1])?;
            let tau_d = evaluate_disturbance(&self.disturbance, t);
            let accel = f_term(&self.params, &self.geom, s[0], s[1], tau_d)
                + g_term(&self.params, &self.geom, s[0]) * out.u_x;
            Ok([s[1], accel])
        };

        for i in 0..=n {
            let t = i as f64 * dt;
            if i % self.sim.decimation as u64 == 0 || i == n {
                let out = self.ideal_output(t, y[0], y[1])?;
                trace.push(self.ideal_record(t, y[0], y[1], out.u_x));
            }
            if i < n {
                y = rk4_step(t, dt, &y, &mut deriv)?;
                self.check_state(t + dt, &y, &NAMES)?;
            }
        }
        Ok(trace)
    }

    fn run_ideal_sampled(&self) -> Result<Vec<TraceRecord>, SimError> {
        const NAMES: [&str; 2] = ["phi", "phi_dot"];
        let dt = self.sim.dt_plant;
        let n = self.step_count();
        let spu = self.sim.steps_per_update(&self.ctrl);
        let mut y = [self.sim.initial_phi, self.sim.initial_phi_dot];
        let mut held_ux = 0.0;
        let mut trace = Vec::with_capacity((n / self.sim.decimation as u64 + 2) as usize);

        for i in 0..=n {
            let t = i as f64 * dt;
            if i < n && i % spu == 0 {
                held_ux = self.ideal_output(t, y[0], y[1])?.u_x;
            }
            if i % self.sim.decimation as u64 == 0 || i == n {
                trace.push(self.ideal_record(t, y[0], y[1], held_ux));
            }
            if i < n {
                let u_x = held_ux;
                let mut deriv = |tt: f64, s: &[f64; 2]| -> Result<[f64; 2], SimError> {
                    let tau_d = evaluate_disturbance(&self.disturbance, tt);
                    let accel = f_term(&self.params, &self.geom, s[0], s[1], tau_d)
                        + g_term(&self.params, &self.geom, s[0]) * u_x;
                    Ok([s[1], accel])
                };
                y = rk4_step(t, dt, &y, &mut deriv)?;
                self.check_state(t + dt, &y, &NAMES)?;
            }
        }
        Ok(trace)
    }

    fn run_unforced(&self, freeze_spring: bool) -> Result<Vec<TraceRecord>, SimError> {
        let dt = self.sim.dt_plant;
        let n = self.step_count();
        let init = self.sim.initial_state();
        let zero_out = ControlOutput {
            u_eq: 0.0,
            u_x: 0.0,
            u1: 0.0,
            sigma: 0.0,
            e1: 0.0,
        };
        let mut trace = Vec::with_capacity((n / self.sim.decimation as u64 + 2) as usize);

        if freeze_spring {
            const NAMES: [&str; 2] = ["phi", "phi_dot"];
            let delta = init.delta;
            let mut y = [init.phi, init.phi_dot];
            let mut deriv = |tt: f64, s: &[f64; 2]| -> Result<[f64; 2], SimError> {
                let ps = PlantState {
                    phi: s[0],
                    phi_dot: s[1],
                    delta,
                    delta_dot: 0.0,
                };
                let tau_d = evaluate_disturbance(&self.disturbance, tt);
                Ok([s[1], joint_accel(&self.params, &self.geom, &ps, tau_d)])
            };
            for i in 0..=n {
                let t = i as f64 * dt;
                if i % self.sim.decimation as u64 == 0 || i == n {
                    let ps = PlantState {
                        phi: y[0],
                        phi_dot: y[1],
                        delta,
                        delta_dot: 0.0,
                    };
                    trace.push(self.record_instant(t, &ps, &zero_out));
                }
                if i < n {
                    y = rk4_step(t, dt, &y, &mut deriv)?;
                    self.check_state(t + dt, &y, &NAMES)?;
                }
            }
        } else {
            const NAMES: [&str; 4] = ["phi", "phi_dot", "delta", "delta_dot"];
            let mut y = [init.phi, init.phi_dot, init.delta, init.delta_dot];
            let mut deriv = |tt: f64, s: &[f64; 4]| -> Result<[f64; 4], SimError> {
                let ps = PlantState {
                    phi: s[0],
                    phi_dot: s[1],
                    delta: s[2],
                    delta_dot: s[3],
                };
                let tau_d = evaluate_disturbance(&self.disturbance, tt);
                plant_derivative(&self.params, &self.geom, &ps, 0.0, tau_d)
                    .map_err(Self::model_err(tt))
            };
            for i in 0..=n {
                let t = i as f64 * dt;
                if i % self.sim.decimation as u64 == 0 || i == n {
                    let ps = PlantState {
                        phi: y[0],
                        phi_dot: y[1],
                        delta: y[2],
                        delta_dot: y[3],
                    };
                    trace.push(self.record_instant(t, &ps, &zero_out));
                }
                if i < n {
                    y = rk4_step(t, dt, &y, &mut deriv)?;
                    self.check_state(t + dt, &y, &NAMES)?;
                }
            }
        }
        Ok(trace)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::reference::ReferenceSource;

    fn base_sim() -> Simulation {
        Simulation {
            params: PlantParams::new(2.0, 0.5, 20_000.0, 9.81).unwrap(),
            geom: LinkGeometry::derive(0.028, 0.0525, 0.0525, 0.035, 0.118).unwrap(),
            gains: ControllerGains::default(),
            ctrl: ControllerConfig::default(),
            sim: SimConfig::default(),
            reference: Reference::compile(&ReferenceSource::default()).unwrap(),
            disturbance: DisturbanceProfile::None,
        }
    }

    #[test]
    fn rk4_reproduces_spring_closed_form() {
        // delta'' = -omega^2 delta with omega = 100 from delta = 1e-3:
        // the solution is 1e-3 cos(100 t).
        let omega = 100.0;
        let mut f = |_t: f64, y: &[f64; 2]| Ok([y[1], -omega * omega * y[0]]);
        let dt = 1e-4;
        let mut y = [1e-3, 0.0];
        let mut worst = 0.0_f64;
        for i in 0..10_000 {
            y = rk4_step(i as f64 * dt, dt, &y, &mut f).unwrap();
            let t = (i + 1) as f64 * dt;
            worst = worst.max((y[0] - 1e-3 * (omega * t).cos()).abs());
        }
        assert!(worst <= 1e-6, "worst deviation {worst:e}");
    }

    #[test]
    fn rk4_error_shrinks_sixteen_fold() {
        // Damped pendulum integrated at dt, dt/2, dt/4; the Richardson
        // ratio of successive differences is 2^4 for a fourth-order method.
        fn run(dt: f64) -> f64 {
            let mut f =
                |_t: f64, y: &[f64; 2]| Ok::<_, SimError>([y[1], -y[0].sin() - 0.1 * y[1]]);
            let steps = (2.0 / dt).round() as usize;
            let mut y = [1.0, 0.0];
            for i in 0..steps {
                y = rk4_step(i as f64 * dt, dt, &y, &mut f).unwrap();
            }
            y[0]
        }
        let a = run(4e-3);
        let b = run(2e-3);
        let c = run(1e-3);
        let ratio = (a - b) / (b - c);
        assert!(
            (12.0..20.0).contains(&ratio),
            "Richardson ratio {ratio} (a-b={:e}, b-c={:e})",
            a - b,
            b - c
        );
    }

    #[test]
    fn setup_validation_rejects_bad_timing() {
        let mut s = base_sim();
        s.sim.dt_plant = 3e-4; // not a divisor of the 1e-3 update period
        s.sim.realization = Realization::Sampled;
        assert!(matches!(s.run(), Err(SimError::Setup(_))));

        let mut s = base_sim();
        s.sim.duration = 1e-4; // shorter than one controller period
        assert!(matches!(s.run(), Err(SimError::Setup(_))));

        let mut s = base_sim();
        s.sim.decimation = 0;
        assert!(matches!(s.run(), Err(SimError::Setup(_))));
    }

    #[test]
    fn duration_must_cover_one_reference_period() {
        let mut s = base_sim(); // default walk, period 1.6 s
        s.sim.duration = 0.5;
        match s.run() {
            Err(SimError::Setup(msg)) => assert!(msg.contains("period"), "{msg}"),
            other => panic!("expected a setup error, got {other:?}"),
        }
    }

    #[test]
    fn leaving_the_operating_range_aborts() {
        let mut s = base_sim();
        s.reference = Reference::compile(&ReferenceSource::Constant { value: 0.0 }).unwrap();
        s.sim.duration = 0.1;
        // The plant starts at theta = -alpha, outside this narrowed range.
        s.sim.theta_min = -0.01;
        s.sim.theta_max = 0.01;
        match s.run() {
            Err(SimError::Divergence { component, .. }) => {
                assert_eq!(component, "theta (operating range)");
            }
            other => panic!("expected a range abort, got {other:?}"),
        }
    }

    #[test]
    fn trace_covers_full_span() {
        let mut s = base_sim();
        s.sim.duration = 0.01;
        s.sim.dt_plant = 5e-6;
        s.sim.decimation = 200;
        s.reference = Reference::compile(&ReferenceSource::Constant { value: 0.0 }).unwrap();
        let trace = s.run().unwrap();
        assert_eq!(trace.first().unwrap().t, 0.0);
        assert!((trace.last().unwrap().t - 0.01).abs() < 1e-12);
        assert_eq!(trace.len(), 11);
    }

    #[test]
    fn unforced_frozen_spring_is_damped_pendulum() {
        let mut s = base_sim();
        s.sim.mode = Mode::Unforced {
            freeze_spring: true,
        };
        s.sim.duration = 2.0;
        s.sim.dt_plant = 1e-4;
        s.sim.decimation = 10;
        s.sim.initial_phi = 0.5;
        s.reference = Reference::compile(&ReferenceSource::Constant { value: 0.0 }).unwrap();
        let trace = s.run().unwrap();
        // Joint damping dominates here (zeta ~ 3), so the release from rest
        // decays monotonically without ever crossing zero.
        for pair in trace.windows(2) {
            assert!(
                pair[1].phi <= pair[0].phi + 1e-12,
                "angle grew: {} -> {} at t = {}",
                pair[0].phi,
                pair[1].phi,
                pair[1].t
            );
        }
        let last = trace.last().unwrap();
        assert!(last.phi > 0.0 && last.phi < 0.05, "final angle {}", last.phi);
        // Spring stays exactly frozen.
        assert!(trace.iter().all(|r| r.delta == 0.0 && r.delta_dot == 0.0));
    }
}
