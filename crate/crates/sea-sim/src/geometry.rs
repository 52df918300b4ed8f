//! Linkage geometry of the series-elastic actuator.
//!
//! The spring connects a point B fixed on the pelvis frame to a point C on
//! the thigh at distance `d6` from the hip joint E. Offsets `d1, d2, d3`
//! locate C relative to the limb axis; `d4, d5` locate B relative to the
//! joint. Everything downstream needs only the two synthetic lengths
//! `d6, d7` and the two fixed angles `alpha, sigma`.

use crate::error::ModelError;

/// Moment arms smaller than this are treated as singular (meters).
pub const SINGULAR_ARM_FLOOR: f64 = 1e-6;

/// Margin by which the spring length must clear its geometric floor over the
/// operating range (meters).
pub const LENGTH_FLOOR_MARGIN: f64 = 1e-9;

/// Derived linkage constants. Construct with [`LinkGeometry::derive`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinkGeometry {
    pub d1: f64,
    pub d2: f64,
    pub d3: f64,
    pub d4: f64,
    pub d5: f64,
    /// Joint-to-spring-attachment distance on the limb: sqrt(d1^2 + (d2+d3)^2).
    pub d6: f64,
    /// Joint-to-anchor distance on the frame: sqrt(d4^2 + d5^2).
    pub d7: f64,
    /// Fixed angle between the limb axis and the attachment ray: atan(d1 / (d2+d3)).
    pub alpha: f64,
    /// Fixed angle of the anchor ray: atan(d4 / d5).
    pub sigma: f64,
}

impl LinkGeometry {
    /// Derives the synthetic lengths and angles from the five raw offsets.
    ///
    /// `d1` may be zero (straight link, `alpha = 0`); the remaining offsets
    /// must be strictly positive.
    pub fn derive(d1: f64, d2: f64, d3: f64, d4: f64, d5: f64) -> Result<Self, ModelError> {
        for (field, value) in [("d1", d1), ("d2", d2), ("d3", d3), ("d4", d4), ("d5", d5)] {
            if !value.is_finite() {
                return Err(ModelError::NonFinite { field, value });
            }
        }
        if d1 < 0.0 {
            return Err(ModelError::Negative {
                field: "d1",
                value: d1,
            });
        }
        for (field, value) in [("d2", d2), ("d3", d3), ("d4", d4), ("d5", d5)] {
            if value <= 0.0 {
                return Err(ModelError::NonPositive { field, value });
            }
        }
        let d6 = d1.hypot(d2 + d3);
        let d7 = d4.hypot(d5);
        Ok(Self {
            d1,
            d2,
            d3,
            d4,
            d5,
            d6,
            d7,
            alpha: (d1 / (d2 + d3)).atan(),
            sigma: (d4 / d5).atan(),
        })
    }

    /// Spring length at deviation angle `theta` (measured from the vertical
    /// attachment ray, `theta = phi - alpha`).
    pub fn sea_length(&self, theta: f64) -> f64 {
        let r2 = self.d4 * self.d4
            + self.d5 * self.d5
            + self.d6 * self.d6
            + 2.0 * self.d6 * (self.d5 * theta.sin() + self.d4 * theta.cos());
        // Radicand is (d6 - d7)^2 at minimum; clamp shields rounding only.
        r2.max(0.0).sqrt()
    }

    /// Effective moment arm of the spring force about the joint,
    /// r(theta) = d6 d7 cos(theta + sigma) / L(theta).
    ///
    /// Equals the perpendicular distance from the joint to the spring line,
    /// signed by which side the joint falls on; |r| never exceeds d6.
    pub fn moment_arm(&self, theta: f64) -> f64 {
        let arm = self.d6 * self.d7 * (theta + self.sigma).cos() / self.sea_length(theta);
        debug_assert!(arm.abs() <= self.d6 * (1.0 + 1e-12));
        arm
    }

    /// d(moment arm)/d(theta), used by the controller's derivative chain:
    /// r'(theta) = -d6 d7 sin(theta + sigma)/L - r^2/L.
    pub fn moment_arm_deriv(&self, theta: f64) -> f64 {
        let l = self.sea_length(theta);
        let arm = self.d6 * self.d7 * (theta + self.sigma).cos() / l;
        -self.d6 * self.d7 * (theta + self.sigma).sin() / l - arm * arm / l
    }

    /// dL/dtheta. Identical to the moment arm; kept as a named operation
    /// because length-rate and torque-arm uses read differently.
    pub fn sea_length_deriv(&self, theta: f64) -> f64 {
        self.d6 * (self.d5 * theta.cos() - self.d4 * theta.sin()) / self.sea_length(theta)
    }

    /// Spring force that exactly balances gravity about the joint at limb
    /// angle `phi`: F = m g d3 sin(phi) / r(phi - alpha).
    ///
    /// Errors when the moment arm is inside the singularity floor.
    pub fn gravity_reaction_force(&self, m: f64, g: f64, phi: f64) -> Result<f64, ModelError> {
        let arm = self.moment_arm(self.theta_from_phi(phi));
        if arm.abs() < SINGULAR_ARM_FLOOR {
            return Err(ModelError::SingularConfiguration {
                phi,
                arm,
                limit: SINGULAR_ARM_FLOOR,
            });
        }
        Ok(m * g * self.d3 * phi.sin() / arm)
    }

    /// Converts limb angle (from vertical) to spring deviation angle.
    pub fn theta_from_phi(&self, phi: f64) -> f64 {
        phi - self.alpha
    }

    /// Converts spring deviation angle to limb angle.
    pub fn phi_from_theta(&self, theta: f64) -> f64 {
        theta + self.alpha
    }

    /// Checks that over `[theta_min, theta_max]` the spring never approaches
    /// its geometric length floor |d7 - d6|. Sampled densely; the length is
    /// unimodal in theta over any span shorter than a full turn, so sampling
    /// at this pitch cannot skip the minimum basin.
    pub fn validate_operating_range(
        &self,
        theta_min: f64,
        theta_max: f64,
    ) -> Result<(), ModelError> {
        let floor = (self.d7 - self.d6).abs() + LENGTH_FLOOR_MARGIN;
        let n = 2048;
        for i in 0..=n {
            let theta = theta_min + (theta_max - theta_min) * (i as f64) / (n as f64);
            let l = self.sea_length(theta);
            if l < floor {
                return Err(ModelError::DegenerateLinkage {
                    theta,
                    length: l,
                    floor,
                });
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn table_geom() -> LinkGeometry {
        LinkGeometry::derive(0.028, 0.0525, 0.0525, 0.035, 0.118).unwrap()
    }

    #[test]
    fn derive_matches_hand_values() {
        let g = table_geom();
        assert!((g.d6 - 0.10866922287382016).abs() < 1e-12);
        assert!((g.d7 - 0.12308127396155760).abs() < 1e-12);
        assert!((g.alpha - (0.028f64 / 0.105).atan()).abs() < 1e-15);
        assert!((g.sigma - (0.035f64 / 0.118).atan()).abs() < 1e-15);
    }

    #[test]
    fn derive_unit_square_case() {
        // d1..d5 all 1: d6 = sqrt(5), d7 = sqrt(2), alpha = atan(1/2), sigma = pi/4.
        let g = LinkGeometry::derive(1.0, 1.0, 1.0, 1.0, 1.0).unwrap();
        assert!((g.d6 - 5f64.sqrt()).abs() < 1e-15);
        assert!((g.d7 - 2f64.sqrt()).abs() < 1e-15);
        assert!((g.alpha - 0.5f64.atan()).abs() < 1e-15);
        assert!((g.sigma - std::f64::consts::FRAC_PI_4).abs() < 1e-15);
    }

    #[test]
    fn derive_straight_link() {
        let g = LinkGeometry::derive(0.0, 0.05, 0.05, 0.03, 0.1).unwrap();
        assert_eq!(g.alpha, 0.0);
        assert!((g.d6 - 0.1).abs() < 1e-15);
    }

    #[test]
    fn derive_rejects_bad_fields() {
        match LinkGeometry::derive(0.028, 0.0, 0.0525, 0.035, 0.118) {
            Err(ModelError::NonPositive { field, .. }) => assert_eq!(field, "d2"),
            other => panic!("expected NonPositive(d2), got {other:?}"),
        }
        match LinkGeometry::derive(-0.01, 0.0525, 0.0525, 0.035, 0.118) {
            Err(ModelError::Negative { field, .. }) => assert_eq!(field, "d1"),
            other => panic!("expected Negative(d1), got {other:?}"),
        }
        match LinkGeometry::derive(0.028, 0.0525, 0.0525, f64::NAN, 0.118) {
            Err(ModelError::NonFinite { field, .. }) => assert_eq!(field, "d4"),
            other => panic!("expected NonFinite(d4), got {other:?}"),
        }
    }

    #[test]
    fn length_special_angles() {
        let g = table_geom();
        // theta = 0: anchor and attachment are d4+d6 apart horizontally, d5 vertically.
        let l0 = g.sea_length(0.0);
        let expect = ((g.d4 + g.d6).powi(2) + g.d5 * g.d5).sqrt();
        assert!((l0 - expect).abs() < 1e-15);
        // theta = pi/2 - sigma: rays collinear, maximum extension d6 + d7.
        let l1 = g.sea_length(std::f64::consts::FRAC_PI_2 - g.sigma);
        assert!((l1 - (g.d6 + g.d7)).abs() < 1e-12);
        // Same angle: spring line passes through the joint, arm collapses.
        assert!(g.moment_arm(std::f64::consts::FRAC_PI_2 - g.sigma).abs() < 1e-12);
    }

    #[test]
    fn arm_at_neutral_anchor_angle() {
        let g = table_geom();
        // theta = -sigma: cos factor is 1, arm = d6 d7 / L.
        let arm = g.moment_arm(-g.sigma);
        let expect = g.d6 * g.d7 / g.sea_length(-g.sigma);
        assert!((arm - expect).abs() < 1e-15);
    }

    #[test]
    fn gravity_reaction_balances_torque() {
        let g = table_geom();
        let phi = 0.3;
        let f = g.gravity_reaction_force(2.0, 9.81, phi).unwrap();
        let arm = g.moment_arm(g.theta_from_phi(phi));
        assert!((f * arm - 2.0 * 9.81 * g.d3 * phi.sin()).abs() < 1e-12);
    }

    #[test]
    fn gravity_reaction_singular_guard() {
        let g = table_geom();
        // Arm collapses at theta = pi/2 - sigma, i.e. phi = alpha + pi/2 - sigma.
        let phi = g.alpha + std::f64::consts::FRAC_PI_2 - g.sigma;
        match g.gravity_reaction_force(2.0, 9.81, phi) {
            Err(ModelError::SingularConfiguration { limit, .. }) => {
                assert_eq!(limit, SINGULAR_ARM_FLOOR)
            }
            other => panic!("expected singular configuration, got {other:?}"),
        }
    }

    #[test]
    fn operating_range_validates() {
        let g = table_geom();
        g.validate_operating_range(-1.2, 1.2).unwrap();
        // Pushing the range onto the collapse angle of a near-degenerate
        // linkage (d6 close to d7, anchor nearly on the limb circle) fails.
        let tight = LinkGeometry::derive(1e-9, 0.06, 0.06, 1e-9, 0.12).unwrap();
        assert!(tight
            .validate_operating_range(-std::f64::consts::PI, std::f64::consts::PI)
            .is_err());
    }

    #[test]
    fn angle_conversions_roundtrip() {
        let g = table_geom();
        for i in -10..=10 {
            let phi = 0.12 * i as f64;
            let back = g.phi_from_theta(g.theta_from_phi(phi));
            assert!((back - phi).abs() < 1e-15);
        }
    }
}
