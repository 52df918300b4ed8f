//! Backstepping sliding-mode force controller.
//!
//! Outer loop: a sliding surface sigma = e2 + c e1 on the joint tracking
//! error, with a reaching term rho sgn(sigma) cancelled through the joint's
//! input gain g(x1) to give the virtual spring deflection u_x. Two
//! backstepping layers then walk the command through the spring states
//! (z1 = delta, z2 = delta_dot) to the equivalent actuator acceleration.
//!
//! Two realizations of the derivative chain are provided:
//! - `controller_step`: sampled pipeline; u_x_dot and u1_dot come from
//!   discrete washout (dirty-derivative) filters over the held samples.
//! - `continuous_eval`: analytic derivatives along model trajectories,
//!   with the filter transfer function kept only on u_x_dot (as a lag
//!   state) and the reference jerk estimated by a washout filter. This is
//!   the form the fixed-step integrator co-integrates with the plant; the
//!   cross term sigma_dot g in u1_dot is what damps the spring/surface
//!   interaction mode at |g(x1)| rad/s, so it must enter without lag.

use serde::{Deserialize, Serialize};

use crate::error::ModelError;
use crate::geometry::{LinkGeometry, SINGULAR_ARM_FLOOR};
use crate::plant::{f_term, g_term, PlantParams, PlantState};
use crate::reference::TrajectorySample;

/// Surface slope, reaching gain, and the two backstepping gains.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ControllerGains {
    /// Sliding-surface pole, 1/s.
    pub c: f64,
    /// Reaching-law gain, rad/s^2.
    pub rho: f64,
    /// First backstepping gain, 1/s.
    pub k1: f64,
    /// Second backstepping gain, 1/s.
    pub k2: f64,
}

impl ControllerGains {
    pub fn new(c: f64, rho: f64, k1: f64, k2: f64) -> Result<Self, ModelError> {
        let gains = Self { c, rho, k1, k2 };
        gains.validate()?;
        Ok(gains)
    }

    pub fn validate(&self) -> Result<(), ModelError> {
        for (field, value) in [
            ("c", self.c),
            ("rho", self.rho),
            ("k1", self.k1),
            ("k2", self.k2),
        ] {
            if !value.is_finite() || value <= 0.0 {
                return Err(ModelError::NonPositive { field, value });
            }
        }
        Ok(())
    }
}

impl Default for ControllerGains {
    fn default() -> Self {
        Self {
            c: 10.0,
            rho: 3.0,
            k1: 1.0,
            k2: 5.0,
        }
    }
}

/// Timing and shaping knobs of the control law.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ControllerConfig {
    /// Sample-and-hold period of the sampled realization, s.
    pub update_period: f64,
    /// Washout-filter time constant for derivative estimates, s.
    pub deriv_filter_tau: f64,
    /// Half-width of the sgn smoothing band; 0 keeps the hard switch.
    pub boundary_layer: f64,
    /// Disturbance torque the control law assumes, N m.
    pub nominal_tau_d: f64,
}

impl Default for ControllerConfig {
    fn default() -> Self {
        Self {
            update_period: 1e-3,
            deriv_filter_tau: 1e-3,
            boundary_layer: 0.0,
            nominal_tau_d: 0.0,
        }
    }
}

impl ControllerConfig {
    pub fn validate(&self) -> Result<(), ModelError> {
        if !self.update_period.is_finite() || self.update_period <= 0.0 {
            return Err(ModelError::NonPositive {
                field: "update_period",
                value: self.update_period,
            });
        }
        if !self.deriv_filter_tau.is_finite() || self.deriv_filter_tau < self.update_period {
            // A filter faster than the sample rate only amplifies hold noise.
            return Err(ModelError::Negative {
                field: "deriv_filter_tau (must be >= update_period)",
                value: self.deriv_filter_tau,
            });
        }
        if !self.boundary_layer.is_finite() || self.boundary_layer < 0.0 {
            return Err(ModelError::Negative {
                field: "boundary_layer",
                value: self.boundary_layer,
            });
        }
        if !self.nominal_tau_d.is_finite() {
            return Err(ModelError::NonFinite {
                field: "nominal_tau_d",
                value: self.nominal_tau_d,
            });
        }
        Ok(())
    }
}

/// Filter memories. The sampled pipeline uses `ux_memory`/`u1_memory`;
/// the continuous realization integrates `jerk_memory`/`ux_rate`.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct ControllerState {
    pub ux_memory: f64,
    pub u1_memory: f64,
    pub jerk_memory: f64,
    pub ux_rate: f64,
}

impl ControllerState {
    pub fn reset(&mut self) {
        *self = Self::default();
    }
}

/// sigma = e2 + c e1.
pub fn sliding_sigma(e1: f64, e2: f64, c: f64) -> f64 {
    e2 + c * e1
}

/// Reaching term: rho sgn(sigma), softened to rho sat(sigma/width) when a
/// boundary layer is configured. sgn(0) = 0.
pub fn switching_term(sigma: f64, rho: f64, boundary_layer: f64) -> f64 {
    if boundary_layer > 0.0 {
        rho * (sigma / boundary_layer).clamp(-1.0, 1.0)
    } else if sigma == 0.0 {
        0.0
    } else {
        rho * sigma.signum()
    }
}

/// Virtual control: the spring deflection that would place the joint
/// acceleration on the sliding surface's reaching law,
/// u_x = (rho sgn(sigma) + phi_d_ddot - f + c e2) / g(x1).
pub fn smc_virtual_control(
    reference: &TrajectorySample,
    measured: &PlantState,
    params: &PlantParams,
    geom: &LinkGeometry,
    gains: &ControllerGains,
    cfg: &ControllerConfig,
) -> Result<f64, ModelError> {
    let arm = geom.moment_arm(geom.theta_from_phi(measured.phi));
    if arm.abs() < SINGULAR_ARM_FLOOR {
        return Err(ModelError::SingularConfiguration {
            phi: measured.phi,
            arm,
            limit: SINGULAR_ARM_FLOOR,
        });
    }
    let gx = g_term(params, geom, measured.phi);
    let fx = f_term(params, geom, measured.phi, measured.phi_dot, cfg.nominal_tau_d);
    let e1 = reference.phi_d - measured.phi;
    let e2 = reference.phi_d_dot - measured.phi_dot;
    let sigma = sliding_sigma(e1, e2, gains.c);
    let sw = switching_term(sigma, gains.rho, cfg.boundary_layer);
    Ok((sw + reference.phi_d_ddot - fx + gains.c * e2) / gx)
}

/// First backstepping layer: u1 = k1 (u_x - z1) + u_x_dot + sigma g(x1).
pub fn backstep_u1(u_x: f64, u_x_dot: f64, z1: f64, sigma: f64, g_x1: f64, k1: f64) -> f64 {
    k1 * (u_x - z1) + u_x_dot + sigma * g_x1
}

/// Second backstepping layer: the commanded equivalent acceleration
/// U_eq = -f2 + k2 (u1 - z2) + u1_dot + (u_x - z1),
/// where f2 = -omega^2 z1 - F_R/m is the spring drift.
pub fn control_voltage(
    u1: f64,
    u1_dot: f64,
    u_x: f64,
    z1: f64,
    z2: f64,
    f2: f64,
    k2: f64,
) -> f64 {
    -f2 + k2 * (u1 - z2) + u1_dot + (u_x - z1)
}

/// Discrete washout (dirty-derivative) filter step. Returns the rate
/// estimate and the updated memory:
/// estimate = (sample - memory)/tau, memory += dt * estimate.
pub fn filtered_derivative(sample: f64, dt: f64, tau: f64, memory: f64) -> (f64, f64) {
    let estimate = (sample - memory) / tau;
    (estimate, memory + dt * estimate)
}

/// Everything the simulator wants back from one control evaluation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ControlOutput {
    pub u_eq: f64,
    pub u_x: f64,
    pub u1: f64,
    pub sigma: f64,
    pub e1: f64,
}

/// Sampled pipeline: one controller update at a sampling instant.
/// Derivative estimates come from the washout filters held in `state`.
pub fn controller_step(
    reference: &TrajectorySample,
    measured: &PlantState,
    params: &PlantParams,
    geom: &LinkGeometry,
    gains: &ControllerGains,
    cfg: &ControllerConfig,
    state: &mut ControllerState,
) -> Result<ControlOutput, ModelError> {
    let e1 = reference.phi_d - measured.phi;
    let e2 = reference.phi_d_dot - measured.phi_dot;
    let sigma = sliding_sigma(e1, e2, gains.c);
    let u_x = smc_virtual_control(reference, measured, params, geom, gains, cfg)?;
    let gx = g_term(params, geom, measured.phi);
    let (u_x_dot, ux_mem) =
        filtered_derivative(u_x, cfg.update_period, cfg.deriv_filter_tau, state.ux_memory);
    state.ux_memory = ux_mem;
    let u1 = backstep_u1(u_x, u_x_dot, measured.delta, sigma, gx, gains.k1);
    let (u1_dot, u1_mem) =
        filtered_derivative(u1, cfg.update_period, cfg.deriv_filter_tau, state.u1_memory);
    state.u1_memory = u1_mem;
    let f_r_over_m = geom.gravity_reaction_force(params.m, params.g, measured.phi)? / params.m;
    let f2 = -params.omega_sq * measured.delta - f_r_over_m;
    let u_eq = control_voltage(
        u1,
        u1_dot,
        u_x,
        measured.delta,
        measured.delta_dot,
        f2,
        gains.k2,
    );
    Ok(ControlOutput {
        u_eq,
        u_x,
        u1,
        sigma,
        e1,
    })
}

/// One control evaluation plus the rates of the controller's own states,
/// for co-integration with the plant.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ControlEval {
    pub out: ControlOutput,
    /// d/dt of `ControllerState::jerk_memory`.
    pub d_jerk_memory: f64,
    /// d/dt of `ControllerState::ux_rate`.
    pub d_ux_rate: f64,
}

/// Continuous realization: derivatives computed analytically along model
/// trajectories. `jerk_memory` filters the reference acceleration to an
/// estimated jerk; `ux_rate` is u_x_dot passed through the washout lag.
/// u1_dot is exact for the realized u1, keeping the sigma_dot g damping
/// path free of phase lag.
pub fn continuous_eval(
    reference: &TrajectorySample,
    plant: &PlantState,
    params: &PlantParams,
    geom: &LinkGeometry,
    gains: &ControllerGains,
    cfg: &ControllerConfig,
    jerk_memory: f64,
    ux_rate: f64,
) -> Result<ControlEval, ModelError> {
    let theta = geom.theta_from_phi(plant.phi);
    let arm = geom.moment_arm(theta);
    if arm.abs() < SINGULAR_ARM_FLOOR {
        return Err(ModelError::SingularConfiguration {
            phi: plant.phi,
            arm,
            limit: SINGULAR_ARM_FLOOR,
        });
    }
    let inertia = params.inertia(geom);
    let gx = -params.k * arm / inertia;
    let gx_dot_dphi = -params.k * geom.moment_arm_deriv(theta) / inertia;
    let fx = f_term(params, geom, plant.phi, plant.phi_dot, cfg.nominal_tau_d);
    let f_r_over_m = params.g * geom.d3 * plant.phi.sin() / arm;

    let e1 = reference.phi_d - plant.phi;
    let e2 = reference.phi_d_dot - plant.phi_dot;
    let sigma = sliding_sigma(e1, e2, gains.c);
    let sw = switching_term(sigma, gains.rho, cfg.boundary_layer);
    let u_x = (sw + reference.phi_d_ddot - fx + gains.c * e2) / gx;

    // Model-side rates: the joint acceleration the control model predicts.
    let accel_model = fx + gx * plant.delta;
    let sigma_dot = (reference.phi_d_ddot - accel_model) + gains.c * e2;
    let jerk_est = (reference.phi_d_ddot - jerk_memory) / cfg.deriv_filter_tau;
    let f_dot = -(params.b_damp * accel_model
        + params.m * params.g * geom.d3 * plant.phi.cos() * plant.phi_dot)
        / inertia;
    let g_dot = gx_dot_dphi * plant.phi_dot;
    // The switch contributes no rate outside the boundary layer (piecewise
    // constant); inside it the saturation ramp has slope rho/width.
    let sw_dot = if cfg.boundary_layer > 0.0 && sigma.abs() < cfg.boundary_layer {
        gains.rho * sigma_dot / cfg.boundary_layer
    } else {
        0.0
    };
    let u_x_dot_analytic =
        ((sw_dot + jerk_est - f_dot + gains.c * (reference.phi_d_ddot - accel_model))
            - u_x * g_dot)
            / gx;
    let d_ux_rate = (u_x_dot_analytic - ux_rate) / cfg.deriv_filter_tau;

    let u1 = backstep_u1(u_x, ux_rate, plant.delta, sigma, gx, gains.k1);
    // Exact derivative of the realized u1 above.
    let u1_dot = gains.k1 * (u_x_dot_analytic - plant.delta_dot)
        + d_ux_rate
        + sigma_dot * gx
        + sigma * g_dot;

    let f2 = -params.omega_sq * plant.delta - f_r_over_m;
    let u_eq = control_voltage(u1, u1_dot, u_x, plant.delta, plant.delta_dot, f2, gains.k2);
    Ok(ControlEval {
        out: ControlOutput {
            u_eq,
            u_x,
            u1,
            sigma,
            e1,
        },
        d_jerk_memory: jerk_est,
        d_ux_rate,
    })
}
