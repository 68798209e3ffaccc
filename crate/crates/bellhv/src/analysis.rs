//! Audits, enumerations, searches, and scans over the models: normalization
//! audits, exact CHSH evaluation, the 256-point binary-α census, the planar
//! grid search, and the background-decoupling scan.

use rand_chacha::ChaCha8Rng;

use crate::core::{
    chsh_value, ChshReport, ChshScenario, JointOutcomeDistribution, PlanarSetting, UnitVector3,
    PROB_TOL,
};
use crate::error::{Error, Result};
use crate::models::discrete::{
    m1_var_specs, setting_labels, AlphaConstruction, DichotomicM3Model, M1Model, M2Model,
    SelectionTables,
};
use crate::models::table::{ProbabilityTable, VarSpec};
use crate::sampling::{run_chunks, sample_uniform_sphere, McEstimate, SeededStream};

/// A model with exact joint evaluation over finite setting domains.
pub trait ExactJoint {
    fn joint(&self, x: usize, y: usize) -> Result<JointOutcomeDistribution>;
    fn n_settings_left(&self) -> usize;
    fn n_settings_right(&self) -> usize;
    /// All (name, table) pairs plus any extra distributions for audits.
    fn audit_rows(&self) -> Vec<(String, f64)>;
}

fn table_residuals(out: &mut Vec<(String, f64)>, name: &str, t: &ProbabilityTable) {
    for i in 0..t.n_rows() {
        let tuple = t.decode_row(i);
        let sum: f64 = t.row(&tuple).iter().sum();
        out.push((format!("{name}[{}]", t.row_key(i)), (sum - 1.0).abs()));
    }
}

impl ExactJoint for M1Model {
    fn joint(&self, x: usize, y: usize) -> Result<JointOutcomeDistribution> {
        M1Model::joint(self, x, y)
    }

    fn n_settings_left(&self) -> usize {
        M1Model::n_settings_left(self)
    }

    fn n_settings_right(&self) -> usize {
        M1Model::n_settings_right(self)
    }

    fn audit_rows(&self) -> Vec<(String, f64)> {
        let mut rows = vec![(
            "prior".to_string(),
            (self.prior().iter().sum::<f64>() - 1.0).abs(),
        )];
        table_residuals(&mut rows, "left", self.left_table());
        table_residuals(&mut rows, "right", self.right_table());
        rows
    }
}

impl ExactJoint for M2Model {
    fn joint(&self, x: usize, y: usize) -> Result<JointOutcomeDistribution> {
        M2Model::joint(self, x, y)
    }

    fn n_settings_left(&self) -> usize {
        M2Model::n_settings_left(self)
    }

    fn n_settings_right(&self) -> usize {
        M2Model::n_settings_right(self)
    }

    fn audit_rows(&self) -> Vec<(String, f64)> {
        let mut rows = Vec::new();
        table_residuals(&mut rows, "left_bg", self.left_bg());
        table_residuals(&mut rows, "right_bg", self.right_bg());
        table_residuals(&mut rows, "left", self.left_table());
        table_residuals(&mut rows, "right", self.right_table());
        rows
    }
}

impl ExactJoint for DichotomicM3Model {
    fn joint(&self, x: usize, y: usize) -> Result<JointOutcomeDistribution> {
        DichotomicM3Model::joint(self, x, y)
    }

    fn n_settings_left(&self) -> usize {
        2
    }

    fn n_settings_right(&self) -> usize {
        2
    }

    fn audit_rows(&self) -> Vec<(String, f64)> {
        let mut rows = Vec::new();
        for (name, t) in self.tables() {
            table_residuals(&mut rows, name, t);
        }
        rows
    }
}

/// Per-row normalization residuals of a model's tables.
#[derive(Clone, Debug)]
pub struct AuditReport {
    pub residuals: Vec<(String, f64)>,
    pub worst: f64,
    pub pass: bool,
}

pub fn normalization_audit(model: &impl ExactJoint) -> AuditReport {
    let residuals = model.audit_rows();
    let worst = residuals.iter().map(|(_, r)| *r).fold(0.0, f64::max);
    AuditReport {
        residuals,
        worst,
        pass: worst <= PROB_TOL,
    }
}

/// MC estimate of ∫ ρ dλ over the sphere: (4π) × mean of ρ over uniform
/// draws, with standard error.
pub fn density_normalization_check(
    density: impl Fn(UnitVector3) -> f64 + Sync,
    n: u64,
    stream: SeededStream,
) -> Result<McEstimate> {
    if n < 100_000 {
        return Err(Error::Config(format!(
            "density check needs at least 1e5 draws, got {n}"
        )));
    }
    let area = 4.0 * std::f64::consts::PI;
    let partials = run_chunks(n, stream, |rng: &mut ChaCha8Rng, len| {
        let mut sum = 0.0;
        let mut sum_sq = 0.0;
        for _ in 0..len {
            let v = area * density(sample_uniform_sphere(rng));
            sum += v;
            sum_sq += v * v;
        }
        (sum, sum_sq)
    });
    let (mut sum, mut sum_sq) = (0.0, 0.0);
    for (s, q) in partials {
        sum += s;
        sum_sq += q;
    }
    let nf = n as f64;
    let mean = sum / nf;
    let var = ((sum_sq - sum * sum / nf) / (nf - 1.0)).max(0.0);
    Ok(McEstimate {
        mean,
        standard_error: (var / nf).sqrt(),
        samples: n,
    })
}

/// Exact CHSH report for a discrete model over the setting quadruple
/// (x, x', y, y').
pub fn chsh_exact(model: &impl ExactJoint, quad: [usize; 4]) -> Result<ChshReport> {
    let [x, xp, y, yp] = quad;
    ChshReport::new(
        model.joint(x, y)?.correlation(),
        model.joint(xp, y)?.correlation(),
        model.joint(x, yp)?.correlation(),
        model.joint(xp, yp)?.correlation(),
    )
}

/// One row of the binary-α census.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AlphaCensusRow {
    /// Bit pattern, MSB = α1 ... LSB = α8.
    pub bits: u8,
    pub x_bi: f64,
}

impl AlphaCensusRow {
    pub fn bits_string(&self) -> String {
        format!("{:08b}", self.bits)
    }
}

/// Evaluates all 2⁸ binary α-assignments against the given selection tables,
/// sorted by descending X_BI then ascending bit pattern.
pub fn enumerate_binary_alphas(selection: &SelectionTables) -> Result<Vec<AlphaCensusRow>> {
    let mut rows = Vec::with_capacity(256);
    for bits in 0..=255u8 {
        let mut c = AlphaConstruction::from_bits(bits);
        c.selection = *selection;
        let x_bi = c.build()?.chsh()?.x_bi;
        rows.push(AlphaCensusRow { bits, x_bi });
    }
    rows.sort_by(|a, b| {
        b.x_bi
            .partial_cmp(&a.x_bi)
            .unwrap()
            .then(a.bits.cmp(&b.bits))
    });
    Ok(rows)
}

/// Exhaustive search over the planar-angle grid (angles 2πk/resolution) for
/// the quadruple (a, a', b, b') maximizing X_BI; ties broken by lexicographic
/// order of the quadruple.
pub fn grid_search_chsh(
    corr: impl Fn(PlanarSetting, PlanarSetting) -> f64 + Sync,
    resolution: usize,
) -> Result<(ChshScenario<PlanarSetting>, f64)> {
    if resolution < 8 {
        return Err(Error::Config(format!(
            "grid resolution {resolution} below minimum 8"
        )));
    }
    let angle = |i: usize| PlanarSetting::new(i as f64 * std::f64::consts::TAU / resolution as f64);
    let matrix: Vec<Vec<f64>> = (0..resolution)
        .map(|i| (0..resolution).map(|k| corr(angle(i), angle(k))).collect())
        .collect();
    let (quad, best) = grid_search_matrix(&matrix)?;
    Ok((
        ChshScenario {
            a: angle(quad[0]),
            a_prime: angle(quad[1]),
            b: angle(quad[2]),
            b_prime: angle(quad[3]),
        },
        best,
    ))
}

/// Quadruple search over a precomputed correlator matrix M[x][y]. Returns
/// the lexicographically-first maximizing (x, x', y, y') and its X_BI.
pub fn grid_search_matrix(matrix: &[Vec<f64>]) -> Result<([usize; 4], f64)> {
    let nx = matrix.len();
    let ny = matrix.first().map(Vec::len).unwrap_or(0);
    if nx == 0 || ny == 0 {
        return Err(Error::Config("empty correlator matrix".into()));
    }
    // partition by the first index; merge in ascending order so the
    // lexicographic tie-break is independent of worker count
    let per_a: Vec<([usize; 4], f64)> = {
        let search_a = |a: usize| {
            let mut best = ([a, 0, 0, 0], f64::NEG_INFINITY);
            for ap in 0..nx {
                for b in 0..ny {
                    let m_ab = matrix[a][b];
                    let m_apb = matrix[ap][b];
                    for bp in 0..ny {
                        let x = m_ab + m_apb + matrix[a][bp] - matrix[ap][bp];
                        if x > best.1 {
                            best = ([a, ap, b, bp], x);
                        }
                    }
                }
            }
            best
        };
        #[cfg(feature = "parallel")]
        {
            use rayon::prelude::*;
            (0..nx).into_par_iter().map(search_a).collect()
        }
        #[cfg(not(feature = "parallel"))]
        {
            (0..nx).map(search_a).collect()
        }
    };
    let mut best = ([0; 4], f64::NEG_INFINITY);
    for candidate in per_a {
        if candidate.1 > best.1 {
            best = candidate;
        }
    }
    // sanity-check the winner's correlators
    let [x, xp, y, yp] = best.0;
    chsh_value(matrix[x][y], matrix[xp][y], matrix[x][yp], matrix[xp][yp])?;
    Ok(best)
}

/// Exact correlator matrix M[x][y] of a discrete model.
pub fn correlator_matrix(model: &(impl ExactJoint + ?Sized)) -> Result<Vec<Vec<f64>>> {
    (0..model.n_settings_left())
        .map(|x| {
            (0..model.n_settings_right())
                .map(|y| Ok(model.joint(x, y)?.correlation()))
                .collect()
        })
        .collect()
}

/// One point of the background-decoupling scan.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DecouplingPoint {
    pub kappa: f64,
    pub report: ChshReport,
}

impl DecouplingPoint {
    pub fn x_bi(&self) -> f64 {
        self.report.x_bi
    }
}

/// Scans the analyzer–background coupling strength: for each κ the base
/// model's background rows are mixed toward uniform (κ = 1 full coupling,
/// κ = 0 setting-independent backgrounds) and the CHSH quantity is evaluated
/// exactly.
pub fn decoupling_scan(
    base: &AlphaConstruction,
    kappas: &[f64],
) -> Result<Vec<DecouplingPoint>> {
    let model = base.build()?;
    kappas
        .iter()
        .map(|&kappa| {
            let report = model.with_mixed_backgrounds(kappa)?.chsh()?;
            Ok(DecouplingPoint { kappa, report })
        })
        .collect()
}

/// Shape bounds for the random-model generators.
pub const MAX_LAMBDA_SUPPORT: usize = 8;

fn check_shape(n_settings: usize, n_lambda: usize) -> Result<()> {
    if n_lambda == 0 || n_lambda > MAX_LAMBDA_SUPPORT {
        return Err(Error::Config(format!(
            "lambda support {n_lambda} outside 1..={MAX_LAMBDA_SUPPORT}"
        )));
    }
    if n_settings == 0 {
        return Err(Error::Config("need at least one setting".into()));
    }
    Ok(())
}

/// A random M1 model: tables drawn entrywise from U(0,1) then row-normalized;
/// deterministic per stream.
pub fn random_m1(n_settings: usize, n_lambda: usize, stream: SeededStream) -> Result<M1Model> {
    check_shape(n_settings, n_lambda)?;
    let mut rng = stream.rng();
    let (x, y, l) = m1_var_specs(n_settings, n_lambda);
    let mut prior: Vec<f64> = (0..n_lambda).map(|_| rand::Rng::gen::<f64>(&mut rng)).collect();
    let sum: f64 = prior.iter().sum();
    for p in &mut prior {
        *p /= sum;
    }
    M1Model::new(
        prior,
        ProbabilityTable::random(vec![x, l.clone()], VarSpec::outcome("s1"), &mut rng),
        ProbabilityTable::random(vec![y, l], VarSpec::outcome("s2"), &mut rng),
    )
}

/// A random M2 model; when `setting_independent_bg` is set, both background
/// tables use one shared row per wing, so measurement independence holds by
/// construction.
pub fn random_m2(
    n_settings: usize,
    n_lambda: usize,
    setting_independent_bg: bool,
    stream: SeededStream,
) -> Result<M2Model> {
    check_shape(n_settings, n_lambda)?;
    let mut rng = stream.rng();
    let x = VarSpec::new("x", setting_labels(n_settings));
    let y = VarSpec::new("y", setting_labels(n_settings));
    let l1 = VarSpec::new("l1", (1..=n_lambda).map(|i| i.to_string()).collect());
    let l2 = VarSpec::new("l2", (1..=n_lambda).map(|i| i.to_string()).collect());
    let mut bg = |var: &VarSpec, lam: &VarSpec| -> Result<ProbabilityTable> {
        let t = ProbabilityTable::random(vec![var.clone()], lam.clone(), &mut rng);
        if !setting_independent_bg {
            return Ok(t);
        }
        let shared = t.row(&[0]).to_vec();
        ProbabilityTable::new(
            vec![var.clone()],
            lam.clone(),
            vec![shared; n_settings],
        )
    };
    let left_bg = bg(&x, &l1)?;
    let right_bg = bg(&y, &l2)?;
    M2Model::new(
        left_bg,
        right_bg,
        ProbabilityTable::random(vec![x, l1], VarSpec::outcome("s1"), &mut rng),
        ProbabilityTable::random(vec![y, l2], VarSpec::outcome("s2"), &mut rng),
    )
}

/// A random dichotomic M3 model with fully general normalized tables.
pub fn random_m3(stream: SeededStream) -> Result<DichotomicM3Model> {
    let mut rng = stream.rng();
    let (x, y, l1, l2, xi) = DichotomicM3Model::variable_specs();
    DichotomicM3Model::new(
        ProbabilityTable::random(vec![x.clone()], l1.clone(), &mut rng),
        ProbabilityTable::random(vec![y.clone()], l2.clone(), &mut rng),
        ProbabilityTable::random(vec![l1.clone(), l2.clone()], xi.clone(), &mut rng),
        ProbabilityTable::random(vec![xi.clone(), l1, x], VarSpec::outcome("s1"), &mut rng),
        ProbabilityTable::random(vec![xi, l2, y], VarSpec::outcome("s2"), &mut rng),
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::core::quantum_correlation;
    use crate::models::spherical::{hall_density, m3c_density};
    use std::f64::consts::{FRAC_PI_2, SQRT_2};

    #[test]
    fn audit_passes_for_alpha_construction() {
        let m = AlphaConstruction::maximal().build().unwrap();
        let report = normalization_audit(&m);
        assert!(report.pass);
        assert_eq!(report.worst, 0.0);
    }

    #[test]
    fn audit_flags_corrupted_row() {
        let mut m = AlphaConstruction::maximal().build().unwrap();
        m.corrupt_for_audit(1e-3);
        let report = normalization_audit(&m);
        assert!(!report.pass);
        assert!(report.worst >= 1e-3 - PROB_TOL);
    }

    #[test]
    fn chsh_exact_alpha_construction_is_four() {
        let m = AlphaConstruction::maximal().build().unwrap();
        let r = chsh_exact(&m, [0, 1, 0, 1]).unwrap();
        assert_eq!(r.x_bi, 4.0);
    }

    #[test]
    fn enumerate_finds_sixteen_maximizers() {
        let rows = enumerate_binary_alphas(&SelectionTables::default()).unwrap();
        assert_eq!(rows.len(), 256);
        let maximizers: Vec<&AlphaCensusRow> =
            rows.iter().filter(|r| r.x_bi == 4.0).collect();
        assert_eq!(maximizers.len(), 16);
        assert!(maximizers.iter().any(|r| r.bits == 0b1111_1110));
        // sorted: the 16 maximizers lead
        assert!(rows[..16].iter().all(|r| r.x_bi == 4.0));
        assert!(rows[16].x_bi < 4.0);
    }

    #[test]
    fn grid_search_reaches_quantum_optimum() {
        let (scenario, x) = grid_search_chsh(quantum_correlation, 64).unwrap();
        assert!((x - 2.0 * SQRT_2).abs() < 0.01, "x = {x}");
        // the winner's correlators reproduce the reported maximum
        let r = chsh_value(
            quantum_correlation(scenario.a, scenario.b),
            quantum_correlation(scenario.a_prime, scenario.b),
            quantum_correlation(scenario.a, scenario.b_prime),
            quantum_correlation(scenario.a_prime, scenario.b_prime),
        )
        .unwrap();
        assert_eq!(r, x);
    }

    #[test]
    fn grid_search_constant_correlator_gives_two() {
        let (_, x) = grid_search_chsh(|_, _| 1.0, 16).unwrap();
        assert_eq!(x, 2.0);
    }

    #[test]
    fn grid_search_resolution_minimum() {
        assert!(grid_search_chsh(quantum_correlation, 7).is_err());
    }

    #[test]
    fn random_m1_respects_bi_bound() {
        for i in 0..50 {
            let m = random_m1(8, 1 + (i as usize % 8), SeededStream::with_stream(100, i)).unwrap();
            assert!(normalization_audit(&m).pass);
            let matrix = correlator_matrix(&m).unwrap();
            let (_, x) = grid_search_matrix(&matrix).unwrap();
            assert!(x <= 2.0 + 1e-9, "X_BI = {x}");
        }
    }

    #[test]
    fn random_m2_respects_bi_bound_and_factorizes() {
        for i in 0..50 {
            let m =
                random_m2(8, 1 + (i as usize % 8), false, SeededStream::with_stream(200, i))
                    .unwrap();
            let matrix = correlator_matrix(&m).unwrap();
            let (_, x) = grid_search_matrix(&matrix).unwrap();
            assert!(x <= 2.0 + 1e-9, "X_BI = {x}");
            let j = m.joint(0, 1).unwrap();
            let ml = m.marginal_left(0);
            let mr = m.marginal_right(1);
            assert!((j.p_pp - ml[0] * mr[0]).abs() < PROB_TOL);
        }
    }

    #[test]
    fn random_models_are_deterministic() {
        let a = random_m1(4, 3, SeededStream::new(0)).unwrap();
        let b = random_m1(4, 3, SeededStream::new(0)).unwrap();
        assert_eq!(a.prior(), b.prior());
        assert_eq!(a.left_table(), b.left_table());
    }

    #[test]
    fn decoupling_scan_endpoints_and_continuity() {
        let base = AlphaConstruction::maximal();
        let kappas: Vec<f64> = (0..=100).map(|i| i as f64 / 100.0).collect();
        let points = decoupling_scan(&base, &kappas).unwrap();
        assert_eq!(points.last().unwrap().x_bi(), 4.0);
        assert!(points[0].x_bi() <= 2.0 + 1e-9);
        for pair in points.windows(2) {
            assert!((pair[1].x_bi() - pair[0].x_bi()).abs() < 0.1);
        }
        // κ = 1 reproduces the base model bit-for-bit
        let direct = base.build().unwrap().chsh().unwrap();
        assert_eq!(points.last().unwrap().report, direct);
        // frozen regression value: X_BI(κ) = (1+κ)² for the maximal
        // construction, so X_BI(0.5) = 2.25
        let mid = points.iter().find(|p| p.kappa == 0.5).unwrap();
        assert!((mid.x_bi() - 2.25).abs() < PROB_TOL);
        assert!(decoupling_scan(&base, &[1.5]).is_err());
    }

    #[test]
    fn density_checks_integrate_to_one() {
        let a = PlanarSetting::new(0.0).to_unit_vector();
        let b = PlanarSetting::new(FRAC_PI_2).to_unit_vector();
        let e = density_normalization_check(|v| hall_density(v, a, b), 200_000, SeededStream::new(8))
            .unwrap();
        assert!((e.mean - 1.0).abs() < 3.0 * e.standard_error + 1e-9);
        let l1 = PlanarSetting::new(0.9).to_unit_vector();
        let l2 = PlanarSetting::new(2.0).to_unit_vector();
        let e =
            density_normalization_check(|v| m3c_density(v, l1, l2), 200_000, SeededStream::new(9))
                .unwrap();
        assert!((e.mean - 1.0).abs() < 3.0 * e.standard_error + 1e-9);
        assert!(
            density_normalization_check(|v| hall_density(v, a, b), 10, SeededStream::new(0))
                .is_err()
        );
    }
}
