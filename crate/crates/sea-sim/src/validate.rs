//! Runtime self-check suite: re-derives the library's core invariants and
//! reports one machine-readable line per check. Fault-injection knobs
//! deliberately break the model so the suite's sensitivity can be shown.

use crate::controller::{filtered_derivative, ControllerConfig, ControllerGains};
use crate::geometry::LinkGeometry;
use crate::plant::{
    f_term, g_term, joint_accel, reduce_motor_model, DisturbanceProfile, MotorParams,
    PlantParams, PlantState,
};
use crate::reference::{Reference, ReferenceSource};
use crate::simulator::{rk4_step, Mode, Realization, SimConfig, Simulation};
use crate::trace::trace_to_string;

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct ValidationOptions {
    /// Fractional perturbation applied to the derived d6 after construction.
    /// Non-zero values must make the geometry checks fail.
    pub perturb_d6: f64,
    /// Replace the default integration step in the dynamic checks.
    pub override_dt: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CheckResult {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

impl CheckResult {
    pub fn line(&self) -> String {
        format!(
            "{} {} {}",
            if self.passed { "ok  " } else { "FAIL" },
            self.name,
            self.detail
        )
    }
}

fn lcg(state: &mut u64) -> f64 {
    *state = state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
    (*state >> 11) as f64 / (1u64 << 53) as f64
}

fn check(name: &'static str, passed: bool, detail: String) -> CheckResult {
    CheckResult {
        name,
        passed,
        detail,
    }
}

fn base_sim(geom: LinkGeometry, dt: f64) -> Simulation {
    Simulation {
        params: PlantParams::new(2.0, 0.5, 20_000.0, 9.81).unwrap(),
        geom,
        gains: ControllerGains::default(),
        ctrl: ControllerConfig::default(),
        sim: SimConfig {
            dt_plant: dt,
            // One full period of the default gait reference.
            duration: 1.6,
            decimation: 200,
            ..Default::default()
        },
        reference: Reference::compile(&ReferenceSource::default()).unwrap(),
        disturbance: DisturbanceProfile::None,
    }
}

/// Runs every check; returns the results in a fixed order.
pub fn run_validation_suite(opts: &ValidationOptions) -> Vec<CheckResult> {
    let mut results = Vec::new();
    let mut geom = LinkGeometry::derive(0.028, 0.0525, 0.0525, 0.035, 0.118).unwrap();
    if opts.perturb_d6 != 0.0 {
        geom.d6 *= 1.0 + opts.perturb_d6;
    }
    let params = PlantParams::new(2.0, 0.5, 20_000.0, 9.81).unwrap();
    let dt = opts.override_dt.unwrap_or(5e-6);

    // --- derived lengths and angles re-checked from the primitives ---
    {
        let d6 = geom.d1.hypot(geom.d2 + geom.d3);
        let d7 = geom.d4.hypot(geom.d5);
        let worst = (geom.d6 - d6)
            .abs()
            .max((geom.d7 - d7).abs())
            .max((geom.alpha - geom.d1.atan2(geom.d2 + geom.d3)).abs())
            .max((geom.sigma - geom.d4.atan2(geom.d5)).abs());
        results.push(check(
            "geometry_derived_consistency",
            worst <= 1e-15,
            format!("max_err={worst:.3e} tol=1e-15"),
        ));
    }

    // --- geometry against the coordinate construction ---
    // The oracle builds both anchor points purely from the primitive
    // lengths, so a corrupted derived field cannot hide.
    {
        let b = (geom.d5, geom.d4);
        let d6_primitive = geom.d1.hypot(geom.d2 + geom.d3);
        let mut worst_len = 0.0_f64;
        let mut worst_arm = 0.0_f64;
        for i in 0..=10_000 {
            let theta = -1.2 + 2.4 * (i as f64) / 10_000.0;
            let c = (-d6_primitive * theta.sin(), -d6_primitive * theta.cos());
            let direct = (b.0 - c.0).hypot(b.1 - c.1);
            worst_len = worst_len.max((geom.sea_length(theta) - direct).abs());
            let (ux, uy) = (b.0 - c.0, b.1 - c.1);
            let dist = (ux * (-c.1) - uy * (-c.0)).abs() / ux.hypot(uy);
            worst_arm = worst_arm.max((geom.moment_arm(theta).abs() - dist).abs());
        }
        results.push(check(
            "geometry_length_oracle",
            worst_len <= 1e-12,
            format!("max_err={worst_len:.3e} tol=1e-12"),
        ));
        results.push(check(
            "geometry_arm_oracle",
            worst_arm <= 1e-12,
            format!("max_err={worst_arm:.3e} tol=1e-12"),
        ));
    }

    // --- gravity reaction torque identity ---
    {
        let mut worst = 0.0_f64;
        for i in 0..=4_000 {
            let phi = -0.9 + 1.8 * (i as f64) / 4_000.0;
            if let Ok(f) = geom.gravity_reaction_force(params.m, params.g, phi) {
                let arm = geom.moment_arm(geom.theta_from_phi(phi));
                worst = worst
                    .max((f * arm - params.m * params.g * geom.d3 * phi.sin()).abs());
            }
        }
        results.push(check(
            "geometry_torque_identity",
            worst <= 1e-12,
            format!("max_err={worst:.3e} tol=1e-12"),
        ));
    }

    // --- length rate vs finite difference ---
    {
        let h = 1e-6;
        let mut worst = 0.0_f64;
        for i in 0..=2_000 {
            let theta = -1.2 + 2.4 * (i as f64) / 2_000.0;
            let fd = (geom.sea_length(theta + h) - geom.sea_length(theta - h)) / (2.0 * h);
            worst = worst.max((geom.sea_length_deriv(theta) - fd).abs());
        }
        results.push(check(
            "geometry_length_rate_fd",
            worst <= 1e-6,
            format!("max_err={worst:.3e} tol=1e-6"),
        ));
    }

    // --- joint acceleration drift/gain decomposition ---
    {
        let mut seed = 0x5eed_01u64;
        let mut worst = 0.0_f64;
        for _ in 0..1_000 {
            let s = PlantState {
                phi: 2.0 * (lcg(&mut seed) - 0.5),
                phi_dot: 20.0 * (lcg(&mut seed) - 0.5),
                delta: 0.02 * (lcg(&mut seed) - 0.5),
                delta_dot: 2.0 * (lcg(&mut seed) - 0.5),
            };
            let tau_d = 2.0 * (lcg(&mut seed) - 0.5);
            let whole = joint_accel(&params, &geom, &s, tau_d);
            let split =
                f_term(&params, &geom, s.phi, s.phi_dot, tau_d) + g_term(&params, &geom, s.phi) * s.delta;
            worst = worst.max((whole - split).abs() / whole.abs().max(1.0));
        }
        results.push(check(
            "plant_accel_decomposition",
            worst <= 1e-12,
            format!("max_rel_err={worst:.3e} tol=1e-12"),
        ));
    }

    // --- motor reduction sanity ---
    {
        let motor = MotorParams {
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
        };
        match reduce_motor_model(&motor) {
            Ok(red) => {
                let identity = (red.c_v - red.a0 / red.a1).abs();
                let ratio = red.neglect_ratio(10.0);
                results.push(check(
                    "motor_reduction",
                    identity <= 1e-15 && ratio < 0.05,
                    format!("c_v={:.4} neglect_ratio@10rad/s={ratio:.3e}", red.c_v),
                ));
            }
            Err(e) => results.push(check("motor_reduction", false, e.to_string())),
        }
    }

    // --- reference self-consistency ---
    {
        let r = Reference::compile(&ReferenceSource::default()).unwrap();
        let s0 = r.sample(0.0);
        let rest = s0.phi_d.abs().max(s0.phi_d_dot.abs()).max(s0.phi_d_ddot.abs());
        let mut peak = 0.0_f64;
        let mut drift = 0.0_f64;
        let ddt = 1e-4;
        let (mut v, mut p) = (s0.phi_d_dot, s0.phi_d);
        let mut prev = s0;
        for i in 1..=16_000 {
            let s = r.sample(ddt * i as f64);
            peak = peak.max(s.phi_d.abs());
            v += 0.5 * ddt * (prev.phi_d_ddot + s.phi_d_ddot);
            p += 0.5 * ddt * (prev.phi_d_dot + s.phi_d_dot);
            drift = drift.max((p - s.phi_d).abs()).max((v - s.phi_d_dot).abs());
            prev = s;
        }
        results.push(check(
            "reference_walk_consistency",
            rest < 1e-9 && (peak - 0.4).abs() < 1e-6 && drift < 1e-3,
            format!("rest={rest:.2e} peak={peak:.6} integration_drift={drift:.3e}"),
        ));
    }

    // --- derivative filter behavior ---
    {
        let (fdt, tau) = (1e-3, 1e-2);
        let mut mem = 0.0;
        let mut est = 0.0;
        for n in 0..2_000 {
            let (e, m) = filtered_derivative(2.0 * (n as f64) * fdt, fdt, tau, mem);
            est = e;
            mem = m;
        }
        results.push(check(
            "filter_ramp_slope",
            (est - 2.0).abs() <= 0.02,
            format!("slope={est:.4} expected 2.0 within 1%"),
        ));
    }

    // --- integrator order on the free spring ---
    {
        let omega = 100.0;
        let mut f = |_t: f64, y: &[f64; 2]| Ok([y[1], -omega * omega * y[0]]);
        let idt = opts.override_dt.unwrap_or(1e-4);
        let steps = (1.0 / idt).max(1.0).round() as usize;
        let mut y = [1e-3, 0.0];
        let mut worst = 0.0_f64;
        for i in 0..steps {
            match rk4_step(i as f64 * idt, idt, &y, &mut f) {
                Ok(next) => y = next,
                Err(_) => break,
            }
            let t = (i + 1) as f64 * idt;
            worst = worst.max((y[0] - 1e-3 * (omega * t).cos()).abs());
        }
        results.push(check(
            "integrator_spring_closed_form",
            worst <= 1e-6,
            format!("max_err={worst:.3e} tol=1e-6 dt={idt:.1e}"),
        ));
    }

    // --- closed-loop determinism and tracking smoke ---
    {
        let sim = base_sim(geom, dt);
        match (sim.run(), sim.run()) {
            (Ok(t1), Ok(t2)) => {
                let identical = trace_to_string(&t1) == trace_to_string(&t2);
                let settled = t1
                    .iter()
                    .filter(|r| r.t >= 0.5)
                    .map(|r| r.e1.abs())
                    .fold(0.0_f64, f64::max);
                results.push(check(
                    "simulation_determinism",
                    identical,
                    format!("reruns byte-identical={identical}"),
                ));
                results.push(check(
                    "closed_loop_tracking_smoke",
                    settled < 1e-3,
                    format!("max|e1|={settled:.3e} tol=1e-3 for t in [0.5, 1.6]"),
                ));
            }
            (Err(e), _) | (_, Err(e)) => {
                results.push(check("simulation_determinism", false, e.to_string()));
                results.push(check("closed_loop_tracking_smoke", false, e.to_string()));
            }
        }
    }

    // --- hold pattern of the sampled reduced loop ---
    {
        let mut sim = base_sim(geom, opts.override_dt.unwrap_or(1e-4));
        sim.sim.mode = Mode::IdealInner;
        sim.sim.realization = Realization::Sampled;
        sim.sim.decimation = 1;
        sim.sim.duration = 0.05;
        sim.reference = Reference::compile(&ReferenceSource::Constant { value: 0.2 }).unwrap();
        match sim.run() {
            Ok(trace) => {
                let spu = (sim.ctrl.update_period / sim.sim.dt_plant).round() as usize;
                let mut holds = true;
                if spu > 1 {
                    for (i, w) in trace.windows(2).enumerate() {
                        let boundary = (i + 1) % spu == 0;
                        if !boundary && w[1].u_x != w[0].u_x {
                            holds = false;
                            break;
                        }
                    }
                } else {
                    holds = trace.windows(2).any(|w| w[1].u_x != w[0].u_x);
                }
                results.push(check(
                    "zoh_hold_pattern",
                    holds,
                    format!("command constant between updates={holds}"),
                ));
            }
            Err(e) => results.push(check("zoh_hold_pattern", false, e.to_string())),
        }
    }

    // --- energy decay of the unforced joint ---
    {
        let mut sim = base_sim(geom, opts.override_dt.unwrap_or(1e-4));
        sim.sim.mode = Mode::Unforced {
            freeze_spring: true,
        };
        sim.sim.duration = 2.0;
        sim.sim.decimation = 50;
        sim.sim.initial_phi = 0.5;
        sim.reference = Reference::compile(&ReferenceSource::Constant { value: 0.0 }).unwrap();
        match sim.run() {
            Ok(trace) => {
                // The joint is overdamped, so release from rest must decay
                // monotonically and end close to hanging equilibrium.
                let monotone = trace.windows(2).all(|w| w[1].phi <= w[0].phi + 1e-12);
                let last = trace.last().map(|r| r.phi).unwrap_or(f64::NAN);
                let settled = last > 0.0 && last < 0.05;
                results.push(check(
                    "unforced_energy_decay",
                    monotone && settled,
                    format!("monotone={monotone} final_angle={last:.3e}"),
                ));
            }
            Err(e) => results.push(check("unforced_energy_decay", false, e.to_string())),
        }
    }

    results
}
