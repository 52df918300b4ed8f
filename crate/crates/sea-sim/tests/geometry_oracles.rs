//! Independent geometric oracles for the linkage formulas.
//!
//! The closed forms in `geometry` are checked against a direct 2-D
//! coordinate construction: joint E at the origin, spring attachment
//! C(theta) = (-d6 sin theta, -d6 cos theta) on the limb, anchor B = (d5, d4)
//! fixed on the frame. All lengths and arms must agree with plain vector
//! arithmetic on those points.

use sea_sim::geometry::LinkGeometry;

fn table_geom() -> LinkGeometry {
    LinkGeometry::derive(0.028, 0.0525, 0.0525, 0.035, 0.118).unwrap()
}

fn attachment(g: &LinkGeometry, theta: f64) -> (f64, f64) {
    (-g.d6 * theta.sin(), -g.d6 * theta.cos())
}

fn anchor(g: &LinkGeometry) -> (f64, f64) {
    (g.d5, g.d4)
}

/// Perpendicular distance from the origin to the line through c and b.
fn point_line_distance(c: (f64, f64), b: (f64, f64)) -> f64 {
    let (ux, uy) = (b.0 - c.0, b.1 - c.1);
    let cross = ux * (-c.1) - uy * (-c.0);
    cross.abs() / ux.hypot(uy)
}

fn lcg(state: &mut u64) -> f64 {
    // Constants from Knuth's MMIX generator; top 53 bits to a unit double.
    *state = state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
    (*state >> 11) as f64 / (1u64 << 53) as f64
}

#[test]
fn length_matches_coordinate_construction() {
    let g = table_geom();
    let b = anchor(&g);
    let mut seed = 0x5ea0_11u64;
    for i in 0..10_000 {
        let theta = if i < 5000 {
            -std::f64::consts::FRAC_PI_2 + std::f64::consts::PI * (i as f64) / 4999.0
        } else {
            std::f64::consts::PI * (lcg(&mut seed) - 0.5)
        };
        let c = attachment(&g, theta);
        let direct = (b.0 - c.0).hypot(b.1 - c.1);
        let len = g.sea_length(theta);
        assert!(
            (len - direct).abs() <= 1e-12,
            "length mismatch at theta = {theta}: {len} vs {direct}"
        );
        // Triangle bounds: the spring spans two fixed-radius attachments.
        assert!(len >= (g.d7 - g.d6).abs() - 1e-12, "below floor at {theta}");
        assert!(len <= g.d6 + g.d7 + 1e-12, "above ceiling at {theta}");
    }
}

#[test]
fn moment_arm_matches_point_line_distance() {
    let g = table_geom();
    let b = anchor(&g);
    let mut seed = 0xa53_1eu64;
    for i in 0..10_000 {
        let theta = if i < 5000 {
            -1.2 + 2.4 * (i as f64) / 4999.0
        } else {
            2.4 * (lcg(&mut seed) - 0.5)
        };
        let c = attachment(&g, theta);
        let dist = point_line_distance(c, b);
        assert!(
            (g.moment_arm(theta).abs() - dist).abs() <= 1e-12,
            "arm mismatch at theta = {theta}"
        );
    }
}

#[test]
fn arm_sign_flips_exactly_at_collapse_angle() {
    let g = table_geom();
    let collapse = std::f64::consts::FRAC_PI_2 - g.sigma;
    assert!(g.moment_arm(collapse - 1e-3) > 0.0);
    assert!(g.moment_arm(collapse + 1e-3) < 0.0);
}

#[test]
fn gravity_reaction_torque_identity() {
    let g = table_geom();
    let (m, grav) = (2.0, 9.81);
    for i in 0..10_000 {
        let phi = -0.9 + 1.8 * (i as f64) / 9999.0;
        let f = g.gravity_reaction_force(m, grav, phi).unwrap();
        let arm = g.moment_arm(g.theta_from_phi(phi));
        assert!(
            (f * arm - m * grav * g.d3 * phi.sin()).abs() <= 1e-12,
            "torque identity broken at phi = {phi}"
        );
    }
}

#[test]
fn length_rate_matches_finite_difference() {
    let g = table_geom();
    let h = 1e-6;
    for i in 0..2_000 {
        let theta = -1.2 + 2.4 * (i as f64) / 1999.0;
        let fd = (g.sea_length(theta + h) - g.sea_length(theta - h)) / (2.0 * h);
        assert!(
            (g.sea_length_deriv(theta) - fd).abs() <= 1e-6,
            "dL/dtheta mismatch at theta = {theta}"
        );
    }
}

#[test]
fn length_rate_equals_moment_arm() {
    // Two independent closed forms of the same quantity.
    let g = table_geom();
    for i in 0..2_000 {
        let theta = -1.2 + 2.4 * (i as f64) / 1999.0;
        assert!((g.sea_length_deriv(theta) - g.moment_arm(theta)).abs() <= 1e-12);
    }
}

#[test]
fn arm_rate_matches_finite_difference() {
    let g = table_geom();
    let h = 1e-6;
    for i in 0..2_000 {
        let theta = -1.2 + 2.4 * (i as f64) / 1999.0;
        let fd = (g.moment_arm(theta + h) - g.moment_arm(theta - h)) / (2.0 * h);
        assert!(
            (g.moment_arm_deriv(theta) - fd).abs() <= 1e-6,
            "arm rate mismatch at theta = {theta}"
        );
    }
}
