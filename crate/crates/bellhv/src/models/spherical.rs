//! The spherical models: Hall's measurement-dependent model with λ on the
//! unit sphere, and its continuous-M3 counterpart where the background
//! variables project onto the analyzer directions.

use std::f64::consts::PI;

use crate::core::{Outcome, UnitVector3};

/// sgn with sgn(0) = +1.
fn sgn(v: f64) -> f64 {
    if v >= 0.0 {
        1.0
    } else {
        -1.0
    }
}

/// A(λ,a) = sgn(a·λ).
pub fn hall_outcome_a(lambda: UnitVector3, a: UnitVector3) -> Outcome {
    Outcome::sign_of(a.dot(lambda))
}

/// B(λ,b) = −sgn(b·λ).
pub fn hall_outcome_b(lambda: UnitVector3, b: UnitVector3) -> Outcome {
    Outcome::sign_of(b.dot(lambda)).flip()
}

/// The biased hidden-variable density ρ(λ|a,b):
/// (1 + a·b)/(8(π − φ)) where sgn(a·λ) = sgn(b·λ),
/// (1 − a·b)/(8φ) where they differ; zero where the applicable denominator
/// vanishes.
pub fn hall_density(lambda: UnitVector3, a: UnitVector3, b: UnitVector3) -> f64 {
    let dot = a.dot(b).clamp(-1.0, 1.0);
    let phi = dot.acos();
    if sgn(a.dot(lambda)) == sgn(b.dot(lambda)) {
        let den = 8.0 * (PI - phi);
        if den == 0.0 {
            0.0
        } else {
            (1.0 + dot) / den
        }
    } else {
        let den = 8.0 * phi;
        if den == 0.0 {
            0.0
        } else {
            (1.0 - dot) / den
        }
    }
}

/// A(ξ,λ1,a) = sgn(a·λ1) sgn(a·ξ).
pub fn m3c_outcome_a(xi: UnitVector3, lambda1: UnitVector3, a: UnitVector3) -> Outcome {
    Outcome::sign_of(sgn(a.dot(lambda1)) * sgn(a.dot(xi)))
}

/// B(ξ,λ2,b) = −sgn(b·λ2) sgn(b·ξ).
pub fn m3c_outcome_b(xi: UnitVector3, lambda2: UnitVector3, b: UnitVector3) -> Outcome {
    Outcome::sign_of(sgn(b.dot(lambda2)) * sgn(b.dot(xi))).flip()
}

/// ρ(ξ|λ1,λ2), the same two-region form as the Hall density with the
/// particle-pair variable ξ biased by the background pair (λ1, λ2).
pub fn m3c_density(xi: UnitVector3, lambda1: UnitVector3, lambda2: UnitVector3) -> f64 {
    let dot = lambda1.dot(lambda2).clamp(-1.0, 1.0);
    let phi = dot.acos();
    if sgn(xi.dot(lambda1)) == sgn(xi.dot(lambda2)) {
        let den = 8.0 * (PI - phi);
        if den == 0.0 {
            0.0
        } else {
            (1.0 + dot) / den
        }
    } else {
        let den = 8.0 * phi;
        if den == 0.0 {
            0.0
        } else {
            (1.0 - dot) / den
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::core::PlanarSetting;
    use std::f64::consts::FRAC_PI_2;

    #[test]
    fn hall_outcome_signs() {
        let a = PlanarSetting::new(0.4).to_unit_vector();
        assert_eq!(hall_outcome_a(a, a), Outcome::Plus);
        assert_eq!(hall_outcome_a(a.negated(), a), Outcome::Minus);
        // perpendicular: forced by the sgn(0) = +1 convention
        let perp = UnitVector3::new(0.0, 0.0, 1.0).unwrap();
        assert_eq!(hall_outcome_a(perp, a), Outcome::Plus);
        assert_eq!(hall_outcome_b(a, a), Outcome::Minus);
        assert_eq!(hall_outcome_b(a.negated(), a), Outcome::Plus);
        assert_eq!(hall_outcome_b(perp, a), Outcome::Minus);
    }

    #[test]
    fn hall_ab_product_fixed_per_region() {
        // A·B = −1 on the sign-agreement region, +1 on the disagreement region
        let a = PlanarSetting::new(0.0).to_unit_vector();
        let b = PlanarSetting::new(1.1).to_unit_vector();
        for i in 0..200 {
            let t = i as f64 * 0.031;
            let lam = UnitVector3::normalized(t.cos(), (2.0 * t).sin(), (3.0 * t).cos()).unwrap();
            let agree = (a.dot(lam) >= 0.0) == (b.dot(lam) >= 0.0);
            let prod = hall_outcome_a(lam, a).value() * hall_outcome_b(lam, b).value();
            assert_eq!(prod, if agree { -1.0 } else { 1.0 });
        }
    }

    #[test]
    fn hall_density_equal_settings_is_uniform() {
        // a = b: the agreement region is the whole sphere, density 1/(4π)
        let a = PlanarSetting::new(0.7).to_unit_vector();
        let lam = UnitVector3::new(0.0, 0.0, 1.0).unwrap();
        let rho = hall_density(lam, a, a);
        assert!((rho - 1.0 / (4.0 * PI)).abs() < 1e-12);
    }

    #[test]
    fn hall_density_orthogonal_settings_is_uniform() {
        let a = PlanarSetting::new(0.0).to_unit_vector();
        let b = PlanarSetting::new(FRAC_PI_2).to_unit_vector();
        for lam in [
            UnitVector3::normalized(1.0, 1.0, 0.3).unwrap(),  // agreement
            UnitVector3::normalized(1.0, -1.0, 0.3).unwrap(), // disagreement
        ] {
            assert!((hall_density(lam, a, b) - 1.0 / (4.0 * PI)).abs() < 1e-12);
        }
    }

    #[test]
    fn hall_density_degenerate_antipodal_settings() {
        // a = −b: φ = π, the agreement-region denominator vanishes and the
        // density is zero there; the disagreement region carries all mass.
        let a = PlanarSetting::new(0.0).to_unit_vector();
        let b = a.negated();
        let agree = UnitVector3::new(0.0, 0.0, 1.0).unwrap(); // sgn 0 = +1 on both
        assert_eq!(hall_density(agree, a, b), 0.0);
        let disagree = PlanarSetting::new(0.3).to_unit_vector();
        assert!((hall_density(disagree, a, b) - 2.0 / (8.0 * PI)).abs() < 1e-12);
    }

    #[test]
    fn m3c_outcome_examples() {
        let a = PlanarSetting::new(0.9).to_unit_vector();
        assert_eq!(m3c_outcome_a(a, a, a), Outcome::Plus);
        assert_eq!(m3c_outcome_a(a.negated(), a, a), Outcome::Minus);
    }

    #[test]
    fn m3c_projection_reduces_to_hall() {
        // with λ1 = a the left outcome is Hall's; same for the density with
        // (λ1, λ2) = (a, b)
        for i in 0..100 {
            let t = i as f64 * 0.097;
            let xi = UnitVector3::normalized((4.0 * t).sin(), t.cos(), (t * 0.5).sin() - 0.3)
                .unwrap();
            let a = PlanarSetting::new(t).to_unit_vector();
            let b = PlanarSetting::new(2.3 * t + 0.4).to_unit_vector();
            assert_eq!(m3c_outcome_a(xi, a, a), hall_outcome_a(xi, a));
            assert_eq!(m3c_outcome_b(xi, b, b), hall_outcome_b(xi, b));
            assert_eq!(m3c_density(xi, a, b), hall_density(xi, a, b));
        }
    }
}
