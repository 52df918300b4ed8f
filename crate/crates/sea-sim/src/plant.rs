//! Joint and spring dynamics, motor-model reduction, disturbance profiles.
//!
//! The limb is a point mass m at distance d3 from the hip, damped by B,
//! loaded by gravity and by the spring torque. The spring deflection state
//! `delta` follows a forced oscillator at omega^2 = k/m whose drive U_eq is
//! the controller output (an equivalent linear acceleration at the spring).

use serde::{Deserialize, Serialize};

use crate::error::ModelError;
use crate::geometry::LinkGeometry;

/// Rigid-limb and spring constants.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PlantParams {
    /// Limb (and reflected spring load) mass, kg.
    pub m: f64,
    /// Viscous joint damping, N m s/rad.
    pub b_damp: f64,
    /// Spring stiffness, N/m.
    pub k: f64,
    /// Gravitational acceleration, m/s^2.
    pub g: f64,
    /// k/m, cached exactly as the ratio of the stored fields.
    pub omega_sq: f64,
}

impl PlantParams {
    pub fn new(m: f64, b_damp: f64, k: f64, g: f64) -> Result<Self, ModelError> {
        for (field, value) in [("m", m), ("k", k), ("g", g)] {
            if !value.is_finite() || value <= 0.0 {
                return Err(ModelError::NonPositive { field, value });
            }
        }
        if !b_damp.is_finite() || b_damp < 0.0 {
            return Err(ModelError::Negative {
                field: "b_damp",
                value: b_damp,
            });
        }
        Ok(Self {
            m,
            b_damp,
            k,
            g,
            omega_sq: k / m,
        })
    }

    /// Joint inertia m d3^2 about the hip.
    pub fn inertia(&self, geom: &LinkGeometry) -> f64 {
        self.m * geom.d3 * geom.d3
    }
}

/// Full plant state: limb angle/rate and spring deflection/rate.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct PlantState {
    pub phi: f64,
    pub phi_dot: f64,
    pub delta: f64,
    pub delta_dot: f64,
}

/// Exogenous joint torque, N m.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum DisturbanceProfile {
    #[default]
    None,
    Constant {
        torque: f64,
    },
    Sinusoid {
        amplitude: f64,
        frequency_hz: f64,
    },
    Pulse {
        amplitude: f64,
        start: f64,
        duration: f64,
    },
}

/// Disturbance torque at time `t`.
pub fn evaluate_disturbance(profile: &DisturbanceProfile, t: f64) -> f64 {
    match *profile {
        DisturbanceProfile::None => 0.0,
        DisturbanceProfile::Constant { torque } => torque,
        DisturbanceProfile::Sinusoid {
            amplitude,
            frequency_hz,
        } => amplitude * (2.0 * std::f64::consts::PI * frequency_hz * t).sin(),
        DisturbanceProfile::Pulse {
            amplitude,
            start,
            duration,
        } => {
            if t >= start && t < start + duration {
                amplitude
            } else {
                0.0
            }
        }
    }
}

/// Torque the deflected spring applies about the joint:
/// tau = (-k delta) * r(phi - alpha).
pub fn sea_torque(geom: &LinkGeometry, k: f64, phi: f64, delta: f64) -> f64 {
    -k * delta * geom.moment_arm(geom.theta_from_phi(phi))
}

/// Drift part of the joint acceleration:
/// f(x1, x2, tau_D) = -(B x2 + m g d3 sin x1 - tau_D) / (m d3^2).
pub fn f_term(params: &PlantParams, geom: &LinkGeometry, x1: f64, x2: f64, tau_d: f64) -> f64 {
    let i = params.inertia(geom);
    -(params.b_damp * x2 + params.m * params.g * geom.d3 * x1.sin() - tau_d) / i
}

/// Input gain of the joint acceleration with respect to spring deflection:
/// g(x1) = -k r(x1 - alpha) / (m d3^2).
pub fn g_term(params: &PlantParams, geom: &LinkGeometry, x1: f64) -> f64 {
    -params.k * geom.moment_arm(geom.theta_from_phi(x1)) / params.inertia(geom)
}

/// Joint angular acceleration under gravity, damping, spring torque, and an
/// exogenous torque.
pub fn joint_accel(
    params: &PlantParams,
    geom: &LinkGeometry,
    state: &PlantState,
    tau_d: f64,
) -> f64 {
    let i = params.inertia(geom);
    let gravity = -params.m * params.g * geom.d3 * state.phi.sin();
    let damping = -params.b_damp * state.phi_dot;
    let spring = sea_torque(geom, params.k, state.phi, state.delta);
    (gravity + damping + tau_d + spring) / i
}

/// Spring deflection acceleration:
/// delta_ddot = -omega^2 delta - F_R(phi)/m_sea_load + U_eq.
///
/// Errors when phi sits on a singular moment arm (F_R undefined there).
pub fn sea_accel(
    params: &PlantParams,
    geom: &LinkGeometry,
    state: &PlantState,
    u_eq: f64,
    m_sea_load: f64,
) -> Result<f64, ModelError> {
    let f_r = geom.gravity_reaction_force(params.m, params.g, state.phi)?;
    Ok(-params.omega_sq * state.delta - f_r / m_sea_load + u_eq)
}

/// Time derivative of the full plant state under command `u_eq` and
/// disturbance torque `tau_d`.
pub fn plant_derivative(
    params: &PlantParams,
    geom: &LinkGeometry,
    state: &PlantState,
    u_eq: f64,
    tau_d: f64,
) -> Result<[f64; 4], ModelError> {
    Ok([
        state.phi_dot,
        joint_accel(params, geom, state, tau_d),
        state.delta_dot,
        sea_accel(params, geom, state, u_eq, params.m)?,
    ])
}

/// DC-motor electrical/mechanical constants for the inner actuator.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MotorParams {
    /// Armature resistance, ohm.
    pub r: f64,
    /// Armature inductance, H.
    pub l_ind: f64,
    /// Torque constant, N m/A.
    pub k_t: f64,
    /// Back-EMF constant, V s/rad.
    pub k_emf: f64,
    /// Rotor inertia, kg m^2.
    pub j_m: f64,
    /// Rotor viscous damping, N m s/rad.
    pub b_m: f64,
    /// Screw inertia, gear ratio, lead, carriage mass, efficiencies.
    /// All six are needed to compute the equivalent inertia when `j_eq`
    /// is not given directly.
    pub j_s: Option<f64>,
    pub m0: Option<f64>,
    pub n: Option<f64>,
    pub l_lead: Option<f64>,
    pub eta1: Option<f64>,
    pub eta2: Option<f64>,
    /// Equivalent inertia seen at the rotor; overrides the computed value.
    pub j_eq: Option<f64>,
}

impl MotorParams {
    /// Equivalent rotor-side inertia:
    /// J_eq = J_M + J_s/(n^2 eta1) + l^2 m0 / (4 pi^2 n^2 eta1 eta2).
    pub fn equivalent_inertia(&self) -> Result<f64, ModelError> {
        if let Some(j_eq) = self.j_eq {
            return Ok(j_eq);
        }
        match (self.j_s, self.m0, self.n, self.l_lead, self.eta1, self.eta2) {
            (Some(j_s), Some(m0), Some(n), Some(l), Some(eta1), Some(eta2)) => {
                let pi2 = std::f64::consts::PI * std::f64::consts::PI;
                Ok(self.j_m + j_s / (n * n * eta1) + l * l * m0 / (4.0 * pi2 * n * n * eta1 * eta2))
            }
            _ => Err(ModelError::MissingMotorParams {
                missing: "j_s, m0, n, l_lead, eta1, eta2",
            }),
        }
    }
}

/// Second-order voltage-to-force transfer coefficients and the first-order
/// reduction: a2 s^2 + a1 s + a0 collapses to c_v = a0/a1 once the a2 term
/// is negligible at the loop's characteristic rate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MotorReduction {
    pub a2: f64,
    pub a1: f64,
    pub a0: f64,
    pub c_v: f64,
}

impl MotorReduction {
    /// Relative weight of the neglected second-order term at `rate` rad/s:
    /// (a2/a1) * rate.
    pub fn neglect_ratio(&self, rate: f64) -> f64 {
        self.a2 / self.a1 * rate
    }
}

/// Reduces the motor's second-order voltage dynamics to the first-order gain
/// used by the force loop.
pub fn reduce_motor_model(motor: &MotorParams) -> Result<MotorReduction, ModelError> {
    for (field, value) in [
        ("r", motor.r),
        ("l_ind", motor.l_ind),
        ("k_t", motor.k_t),
        ("k_emf", motor.k_emf),
        ("b_m", motor.b_m),
    ] {
        if !value.is_finite() || value <= 0.0 {
            return Err(ModelError::NonPositive { field, value });
        }
    }
    let j_eq = motor.equivalent_inertia()?;
    if !j_eq.is_finite() || j_eq <= 0.0 {
        return Err(ModelError::NonPositive {
            field: "j_eq",
            value: j_eq,
        });
    }
    let a2 = motor.l_ind * j_eq;
    let a1 = motor.r * j_eq + motor.l_ind * motor.b_m;
    let a0 = motor.b_m * motor.r + motor.k_t * motor.k_emf;
    Ok(MotorReduction {
        a2,
        a1,
        a0,
        c_v: a0 / a1,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn fixture() -> (PlantParams, LinkGeometry) {
        (
            PlantParams::new(2.0, 0.5, 20_000.0, 9.81).unwrap(),
            LinkGeometry::derive(0.028, 0.0525, 0.0525, 0.035, 0.118).unwrap(),
        )
    }

    fn motor_fixture() -> MotorParams {
        MotorParams {
            r: 5.56,
            l_ind: 4.6e-3,
            k_t: 0.202,
            k_emf: 0.202,
            j_m: 1.574e-4,
            b_m: 16.5e-5,
            j_s: None,
            m0: None,
            n: None,
            l_lead: None,
            eta1: None,
            eta2: None,
            j_eq: Some(1.574e-4),
        }
    }

    #[test]
    fn params_cache_frequency_ratio() {
        let (p, _) = fixture();
        assert_eq!(p.omega_sq, 10_000.0);
    }

    #[test]
    fn params_reject_nonpositive() {
        assert!(PlantParams::new(0.0, 0.5, 20_000.0, 9.81).is_err());
        assert!(PlantParams::new(2.0, -0.1, 20_000.0, 9.81).is_err());
        assert!(PlantParams::new(2.0, 0.0, 20_000.0, 9.81).is_ok());
    }

    #[test]
    fn spring_torque_opposes_stretch_when_arm_positive() {
        let (p, g) = fixture();
        let arm = g.moment_arm(g.theta_from_phi(0.3));
        assert!(arm > 0.0);
        assert!(sea_torque(&g, p.k, 0.3, 0.001) < 0.0);
        assert!(sea_torque(&g, p.k, 0.3, -0.001) > 0.0);
    }

    #[test]
    fn accel_splits_into_drift_and_gain() {
        let (p, g) = fixture();
        let s = PlantState {
            phi: 0.27,
            phi_dot: -1.3,
            delta: 2.4e-3,
            delta_dot: 0.05,
        };
        let tau_d = 0.17;
        let whole = joint_accel(&p, &g, &s, tau_d);
        let split = f_term(&p, &g, s.phi, s.phi_dot, tau_d) + g_term(&p, &g, s.phi) * s.delta;
        assert!((whole - split).abs() <= 1e-12 * whole.abs().max(1.0));
    }

    #[test]
    fn sea_accel_balances_at_equilibrium() {
        // With delta = 0 and U_eq = F_R/m the deflection holds still.
        let (p, g) = fixture();
        let s = PlantState {
            phi: 0.2,
            ..Default::default()
        };
        let f_r = g.gravity_reaction_force(p.m, p.g, 0.2).unwrap();
        let acc = sea_accel(&p, &g, &s, f_r / p.m, p.m).unwrap();
        assert!(acc.abs() < 1e-12);
    }

    #[test]
    fn reduction_matches_hand_arithmetic() {
        let red = reduce_motor_model(&motor_fixture()).unwrap();
        assert!((red.a2 - 7.2404e-7).abs() < 1e-11);
        assert!((red.a1 - 8.75903e-4).abs() < 1e-9);
        assert!((red.a0 - 0.0417214).abs() < 1e-7);
        assert!((red.c_v - 47.6324).abs() < 1e-3);
        assert!(red.neglect_ratio(10.0) < 0.05);
    }

    #[test]
    fn equivalent_inertia_pipeline() {
        let mut m = motor_fixture();
        m.j_eq = None;
        assert!(matches!(
            reduce_motor_model(&m),
            Err(ModelError::MissingMotorParams { .. })
        ));
        m.j_m = 1.0e-4;
        m.j_s = Some(2.0e-3);
        m.n = Some(10.0);
        m.eta1 = Some(0.8);
        m.l_lead = Some(0.01);
        m.m0 = Some(0.5);
        m.eta2 = Some(0.9);
        let j_eq = m.equivalent_inertia().unwrap();
        let pi2 = std::f64::consts::PI * std::f64::consts::PI;
        let expect = 1.0e-4 + 2.0e-3 / (100.0 * 0.8) + 1e-4 * 0.5 / (4.0 * pi2 * 100.0 * 0.8 * 0.9);
        assert!((j_eq - expect).abs() < 1e-18);
    }

    #[test]
    fn disturbance_profiles() {
        assert_eq!(evaluate_disturbance(&DisturbanceProfile::None, 3.0), 0.0);
        assert_eq!(
            evaluate_disturbance(&DisturbanceProfile::Constant { torque: 0.2 }, 3.0),
            0.2
        );
        let sine = DisturbanceProfile::Sinusoid {
            amplitude: 1.0,
            frequency_hz: 1.0,
        };
        assert!((evaluate_disturbance(&sine, 0.25) - 1.0).abs() < 1e-15);
        let pulse = DisturbanceProfile::Pulse {
            amplitude: 0.3,
            start: 1.0,
            duration: 0.5,
        };
        assert_eq!(evaluate_disturbance(&pulse, 0.999), 0.0);
        assert_eq!(evaluate_disturbance(&pulse, 1.0), 0.3);
        assert_eq!(evaluate_disturbance(&pulse, 1.499), 0.3);
        assert_eq!(evaluate_disturbance(&pulse, 1.5), 0.0);
    }
}
