//! Structural invariants of the plant equations.

use sea_sim::geometry::LinkGeometry;
use sea_sim::plant::{f_term, g_term, joint_accel, PlantParams, PlantState};

fn fixture() -> (PlantParams, LinkGeometry) {
    (
        PlantParams::new(2.0, 0.5, 20_000.0, 9.81).unwrap(),
        LinkGeometry::derive(0.028, 0.0525, 0.0525, 0.035, 0.118).unwrap(),
    )
}

fn lcg(state: &mut u64) -> f64 {
    *state = state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
    (*state >> 11) as f64 / (1u64 << 53) as f64
}

#[test]
fn accel_decomposition_holds_on_random_states() {
    // joint_accel(state, tau_d) == f(x1, x2, tau_d) + g(x1) * delta
    let (p, g) = fixture();
    let mut seed = 0x28_c0_01u64;
    for _ in 0..1_000 {
        let s = PlantState {
            phi: 2.0 * (lcg(&mut seed) - 0.5),
            phi_dot: 20.0 * (lcg(&mut seed) - 0.5),
            delta: 0.02 * (lcg(&mut seed) - 0.5),
            delta_dot: 2.0 * (lcg(&mut seed) - 0.5),
        };
        let tau_d = 2.0 * (lcg(&mut seed) - 0.5);
        let whole = joint_accel(&p, &g, &s, tau_d);
        let split = f_term(&p, &g, s.phi, s.phi_dot, tau_d) + g_term(&p, &g, s.phi) * s.delta;
        let scale = whole.abs().max(1.0);
        assert!(
            (whole - split).abs() <= 1e-12 * scale,
            "decomposition broke at {s:?} tau_d={tau_d}"
        );
    }
}

#[test]
fn accel_is_affine_in_delta_and_disturbance() {
    let (p, g) = fixture();
    let mut seed = 0xaffe_11u64;
    for _ in 0..1_000 {
        let base = PlantState {
            phi: 1.6 * (lcg(&mut seed) - 0.5),
            phi_dot: 10.0 * (lcg(&mut seed) - 0.5),
            delta: 0.0,
            delta_dot: 0.0,
        };
        let (da, db) = (0.012 * (lcg(&mut seed) - 0.5), 0.012 * (lcg(&mut seed) - 0.5));
        let (ta, tb) = (lcg(&mut seed) - 0.5, lcg(&mut seed) - 0.5);
        let at = |delta: f64, tau: f64| {
            joint_accel(&p, &g, &PlantState { delta, ..base }, tau)
        };
        // Superposition of increments about a common operating point.
        let lhs = at(da + db, ta + tb) - at(0.0, 0.0);
        let rhs = (at(da, ta) - at(0.0, 0.0)) + (at(db, tb) - at(0.0, 0.0));
        assert!(
            (lhs - rhs).abs() <= 1e-9 * lhs.abs().max(1.0),
            "superposition broke: lhs={lhs} rhs={rhs}"
        );
    }
}

#[test]
fn gain_magnitude_over_operating_range() {
    // |g(x1)| stays within the band the integrator step size is sized for.
    let (p, g) = fixture();
    let mut max_abs: f64 = 0.0;
    let mut min_abs = f64::INFINITY;
    for i in 0..=4_000 {
        let phi = -0.6 + 1.2 * (i as f64) / 4_000.0;
        let gv = g_term(&p, &g, phi).abs();
        max_abs = max_abs.max(gv);
        min_abs = min_abs.min(gv);
    }
    assert!(min_abs > 1.0e5, "gain floor {min_abs}");
    assert!(max_abs < 4.0e5, "gain ceiling {max_abs}");
}
