//! Shared domain types, CHSH algebra, and the singlet-state reference
//! statistics that the hidden-variable models are measured against.

use std::f64::consts::TAU;

use crate::error::{Error, Result};

/// Tolerance for normalization checks on probabilities.
///
/// All constructions in this crate are short floating-point sums, so 1e-12
/// leaves ample headroom over accumulated rounding.
pub const PROB_TOL: f64 = 1e-12;

/// A dichotomic measurement outcome, ±1.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Outcome {
    Plus,
    Minus,
}

impl Outcome {
    pub fn value(self) -> f64 {
        match self {
            Outcome::Plus => 1.0,
            Outcome::Minus => -1.0,
        }
    }

    /// Sign convention used throughout: sgn(0) = +1, so outcomes are total
    /// functions and the zero set (measure zero under every density we use)
    /// is resolved deterministically.
    pub fn sign_of(x: f64) -> Self {
        if x >= 0.0 {
            Outcome::Plus
        } else {
            Outcome::Minus
        }
    }

    pub fn flip(self) -> Self {
        match self {
            Outcome::Plus => Outcome::Minus,
            Outcome::Minus => Outcome::Plus,
        }
    }

    /// Index into outcome-probability arrays: `[P(+1), P(-1)]`.
    pub fn index(self) -> usize {
        match self {
            Outcome::Plus => 0,
            Outcome::Minus => 1,
        }
    }
}

/// An analyzer setting as an angle in the plane, stored reduced mod 2π.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PlanarSetting(f64);

impl PlanarSetting {
    pub fn new(angle: f64) -> Self {
        PlanarSetting(angle.rem_euclid(TAU))
    }

    pub fn from_degrees(deg: f64) -> Self {
        Self::new(deg.to_radians())
    }

    pub fn radians(self) -> f64 {
        self.0
    }

    /// Canonical embedding in the sphere's equatorial plane, so that
    /// embed(a)·embed(b) = cos(a−b) and the same CHSH machinery serves both
    /// the planar and the spherical models.
    pub fn to_unit_vector(self) -> UnitVector3 {
        UnitVector3 {
            x: self.0.cos(),
            y: self.0.sin(),
            z: 0.0,
        }
    }
}

/// A point on the unit sphere; carrier for settings and hidden variables in
/// the spherical models.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct UnitVector3 {
    x: f64,
    y: f64,
    z: f64,
}

impl UnitVector3 {
    pub fn new(x: f64, y: f64, z: f64) -> Result<Self> {
        let norm2 = x * x + y * y + z * z;
        if (norm2 - 1.0).abs() > 1e-12 {
            return Err(Error::Validation(format!(
                "not a unit vector: |v|^2 = {norm2}"
            )));
        }
        Ok(UnitVector3 { x, y, z })
    }

    /// Normalizes an arbitrary nonzero vector onto the sphere.
    pub fn normalized(x: f64, y: f64, z: f64) -> Result<Self> {
        let norm = (x * x + y * y + z * z).sqrt();
        if norm == 0.0 || !norm.is_finite() {
            return Err(Error::Validation("cannot normalize zero vector".into()));
        }
        Ok(UnitVector3 {
            x: x / norm,
            y: y / norm,
            z: z / norm,
        })
    }

    pub fn x(self) -> f64 {
        self.x
    }

    pub fn y(self) -> f64 {
        self.y
    }

    pub fn z(self) -> f64 {
        self.z
    }

    pub fn dot(self, other: UnitVector3) -> f64 {
        self.x * other.x + self.y * other.y + self.z * other.z
    }

    /// Angle between two unit vectors, in [0, π].
    pub fn angle_to(self, other: UnitVector3) -> f64 {
        self.dot(other).clamp(-1.0, 1.0).acos()
    }

    pub fn negated(self) -> UnitVector3 {
        UnitVector3 {
            x: -self.x,
            y: -self.y,
            z: -self.z,
        }
    }
}

/// The four probabilities P(σ1,σ2|a,b) for (σ1,σ2) = (+,+),(+,−),(−,+),(−,−).
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct JointOutcomeDistribution {
    pub p_pp: f64,
    pub p_pm: f64,
    pub p_mp: f64,
    pub p_mm: f64,
}

impl JointOutcomeDistribution {
    pub fn new(p_pp: f64, p_pm: f64, p_mp: f64, p_mm: f64) -> Result<Self> {
        let j = JointOutcomeDistribution {
            p_pp,
            p_pm,
            p_mp,
            p_mm,
        };
        j.validate()?;
        Ok(j)
    }

    /// Frequency estimate from cell counts; cells sum to 1 by construction.
    pub fn from_counts(counts: [u64; 4], total: u64) -> Result<Self> {
        if counts.iter().sum::<u64>() != total || total == 0 {
            return Err(Error::Validation("counts do not sum to total".into()));
        }
        // direct count ratios: zero-count cells are exactly 0.0, and the
        // four ratios sum to 1 well within PROB_TOL
        let n = total as f64;
        Self::new(
            counts[0] as f64 / n,
            counts[1] as f64 / n,
            counts[2] as f64 / n,
            counts[3] as f64 / n,
        )
    }

    fn validate(&self) -> Result<()> {
        for (name, p) in self.cells_named() {
            if !(0.0 - PROB_TOL..=1.0 + PROB_TOL).contains(&p) {
                return Err(Error::Validation(format!("{name} = {p} outside [0,1]")));
            }
        }
        let sum = self.p_pp + self.p_pm + self.p_mp + self.p_mm;
        if (sum - 1.0).abs() > PROB_TOL {
            return Err(Error::Validation(format!("joint sums to {sum}, not 1")));
        }
        Ok(())
    }

    pub fn cells(&self) -> [f64; 4] {
        [self.p_pp, self.p_pm, self.p_mp, self.p_mm]
    }

    fn cells_named(&self) -> [(&'static str, f64); 4] {
        [
            ("p_pp", self.p_pp),
            ("p_pm", self.p_pm),
            ("p_mp", self.p_mp),
            ("p_mm", self.p_mm),
        ]
    }

    /// The correlator M = ⟨σ1σ2⟩ = 2[p_pp + p_mm] − 1.
    pub fn correlation(&self) -> f64 {
        2.0 * (self.p_pp + self.p_mm) - 1.0
    }
}

/// The correlator ⟨σ1σ2⟩ of a joint distribution.
pub fn joint_to_correlation(j: &JointOutcomeDistribution) -> f64 {
    j.correlation()
}

/// X_BI = M(a,b) + M(a',b) + M(a,b') − M(a',b'), unclamped.
pub fn chsh_value(m_ab: f64, m_apb: f64, m_abp: f64, m_apbp: f64) -> Result<f64> {
    for (name, m) in [
        ("m_ab", m_ab),
        ("m_apb", m_apb),
        ("m_abp", m_abp),
        ("m_apbp", m_apbp),
    ] {
        if m.abs() > 1.0 + PROB_TOL {
            return Err(Error::Validation(format!(
                "{name} = {m} outside [-1,1]"
            )));
        }
    }
    Ok(m_ab + m_apb + m_abp - m_apbp)
}

/// The singlet-state prediction P(σ1,σ2|a,b) = ¼[1 − σ1σ2 cos(a−b)].
pub fn quantum_joint(s1: Outcome, s2: Outcome, a: PlanarSetting, b: PlanarSetting) -> f64 {
    0.25 * (1.0 - s1.value() * s2.value() * (a.radians() - b.radians()).cos())
}

/// The singlet correlator, −cos(a−b).
pub fn quantum_correlation(a: PlanarSetting, b: PlanarSetting) -> f64 {
    -(a.radians() - b.radians()).cos()
}

/// The full singlet joint distribution at a setting pair.
pub fn quantum_joint_distribution(a: PlanarSetting, b: PlanarSetting) -> JointOutcomeDistribution {
    JointOutcomeDistribution {
        p_pp: quantum_joint(Outcome::Plus, Outcome::Plus, a, b),
        p_pm: quantum_joint(Outcome::Plus, Outcome::Minus, a, b),
        p_mp: quantum_joint(Outcome::Minus, Outcome::Plus, a, b),
        p_mm: quantum_joint(Outcome::Minus, Outcome::Minus, a, b),
    }
}

/// A quadruple of settings entering the CHSH combination.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ChshScenario<S> {
    pub a: S,
    pub a_prime: S,
    pub b: S,
    pub b_prime: S,
}

/// Four correlators plus their CHSH combination.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ChshReport {
    pub m_ab: f64,
    pub m_apb: f64,
    pub m_abp: f64,
    pub m_apbp: f64,
    pub x_bi: f64,
}

impl ChshReport {
    pub fn new(m_ab: f64, m_apb: f64, m_abp: f64, m_apbp: f64) -> Result<Self> {
        let x_bi = chsh_value(m_ab, m_apb, m_abp, m_apbp)?;
        Ok(ChshReport {
            m_ab,
            m_apb,
            m_abp,
            m_apbp,
            x_bi,
        })
    }

    pub fn correlators(&self) -> [f64; 4] {
        [self.m_ab, self.m_apb, self.m_abp, self.m_apbp]
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use std::f64::consts::{FRAC_PI_2, FRAC_PI_3, PI, SQRT_2};

    #[test]
    fn correlation_of_uniform_joint_is_zero() {
        let j = JointOutcomeDistribution::new(0.25, 0.25, 0.25, 0.25).unwrap();
        assert_eq!(joint_to_correlation(&j), 0.0);
    }

    #[test]
    fn correlation_of_perfectly_correlated_joint_is_one() {
        let j = JointOutcomeDistribution::new(0.5, 0.0, 0.0, 0.5).unwrap();
        assert_eq!(joint_to_correlation(&j), 1.0);
    }

    #[test]
    fn correlation_of_singlet_at_equal_settings_is_minus_one() {
        // quantum joint at a−b = 0 is (0, 0.5, 0.5, 0)
        let a = PlanarSetting::new(0.3);
        let j = quantum_joint_distribution(a, a);
        assert!((j.p_pp).abs() < PROB_TOL && (j.p_mm).abs() < PROB_TOL);
        assert!((j.p_pm - 0.5).abs() < PROB_TOL);
        assert_eq!(joint_to_correlation(&j), -1.0);
    }

    #[test]
    fn non_normalized_joint_rejected() {
        assert!(JointOutcomeDistribution::new(0.5, 0.5, 0.5, 0.5).is_err());
        assert!(JointOutcomeDistribution::new(-0.1, 0.6, 0.3, 0.2).is_err());
    }

    #[test]
    fn chsh_value_examples() {
        assert_eq!(chsh_value(1.0, 1.0, 1.0, 1.0).unwrap(), 2.0);
        assert_eq!(chsh_value(1.0, 1.0, 1.0, -1.0).unwrap(), 4.0);
        assert!(chsh_value(1.2, 0.0, 0.0, 0.0).is_err());
    }

    /// Independent oracle for the quantum correlator: the explicit outcome
    /// sum Σ σ1σ2 P(σ1,σ2|a,b) over the four cells of the singlet joint.
    fn correlator_by_outcome_sum(a: PlanarSetting, b: PlanarSetting) -> f64 {
        let mut sum = 0.0;
        for s1 in [Outcome::Plus, Outcome::Minus] {
            for s2 in [Outcome::Plus, Outcome::Minus] {
                sum += s1.value() * s2.value() * quantum_joint(s1, s2, a, b);
            }
        }
        sum
    }

    #[test]
    fn quantum_correlation_examples() {
        let zero = PlanarSetting::new(0.0);
        assert_eq!(quantum_correlation(zero, zero), -1.0);
        // derived via the outcome-sum oracle: −cos(π/3) = −0.5
        let b = PlanarSetting::new(FRAC_PI_3);
        let oracle = correlator_by_outcome_sum(zero, b);
        assert!((oracle - (-0.5)).abs() < PROB_TOL);
        assert!((quantum_correlation(zero, b) - oracle).abs() < PROB_TOL);
        assert!(quantum_correlation(zero, PlanarSetting::new(FRAC_PI_2)).abs() < PROB_TOL);
    }

    #[test]
    fn quantum_joint_examples() {
        let a = PlanarSetting::new(1.0);
        assert!(quantum_joint(Outcome::Plus, Outcome::Plus, a, a).abs() < PROB_TOL);
        assert!((quantum_joint(Outcome::Plus, Outcome::Minus, a, a) - 0.5).abs() < PROB_TOL);
        let b = PlanarSetting::new(1.0 + FRAC_PI_2);
        for s1 in [Outcome::Plus, Outcome::Minus] {
            for s2 in [Outcome::Plus, Outcome::Minus] {
                assert!((quantum_joint(s1, s2, a, b) - 0.25).abs() < PROB_TOL);
            }
        }
    }

    #[test]
    fn quantum_joint_matches_correlator_on_grid() {
        for i in 0..10 {
            for k in 0..10 {
                let a = PlanarSetting::new(i as f64 * TAU / 10.0);
                let b = PlanarSetting::new(k as f64 * TAU / 10.0 + 0.05);
                let j = quantum_joint_distribution(a, b);
                let sum: f64 = j.cells().iter().sum();
                assert!((sum - 1.0).abs() < PROB_TOL);
                assert!(j.cells().iter().all(|&p| p >= -PROB_TOL));
                assert!((j.correlation() - quantum_correlation(a, b)).abs() < PROB_TOL);
            }
        }
    }

    #[test]
    fn chsh_optimum_reference_quadruple() {
        // a=0, a'=3π/2, b=3π/4, b'=5π/4 gives 2√2 for M = −cos(x−y)
        let m = |x: f64, y: f64| -(x - y).cos();
        let x = chsh_value(
            m(0.0, 3.0 * PI / 4.0),
            m(3.0 * PI / 2.0, 3.0 * PI / 4.0),
            m(0.0, 5.0 * PI / 4.0),
            m(3.0 * PI / 2.0, 5.0 * PI / 4.0),
        )
        .unwrap();
        assert!((x - 2.0 * SQRT_2).abs() < 1e-12);
    }

    use std::f64::consts::TAU;

    proptest! {
        #[test]
        fn chsh_value_bounded(m1 in -1.0..=1.0f64, m2 in -1.0..=1.0f64,
                              m3 in -1.0..=1.0f64, m4 in -1.0..=1.0f64) {
            let x = chsh_value(m1, m2, m3, m4).unwrap();
            prop_assert!(x.abs() <= 4.0 + PROB_TOL);
        }

        #[test]
        fn planar_embedding_preserves_dot_products(a in 0.0..TAU, b in 0.0..TAU) {
            let pa = PlanarSetting::new(a);
            let pb = PlanarSetting::new(b);
            let dot = pa.to_unit_vector().dot(pb.to_unit_vector());
            prop_assert!((dot - (a - b).cos()).abs() < 1e-12);
        }

        #[test]
        fn planar_setting_reduced_mod_tau(angle in -100.0..100.0f64) {
            let s = PlanarSetting::new(angle);
            prop_assert!((0.0..TAU).contains(&s.radians()));
            // reduction preserves the angle up to a multiple of 2π
            prop_assert!((s.radians().cos() - angle.cos()).abs() < 1e-9);
        }
    }
}
