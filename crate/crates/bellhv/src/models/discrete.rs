//! The discrete correlation-graph models: Bell's M1, the naive background
//! model M2, and the dichotomic background model M3 with its 0/1 selection
//! construction that reaches X_BI = 4.

use crate::core::{ChshReport, JointOutcomeDistribution, PROB_TOL};
use crate::error::{Error, Result};
use crate::models::table::{ProbabilityTable, VarSpec};

/// Labels for an arbitrary finite setting domain: "s0", "s1", ...
pub fn setting_labels(n: usize) -> Vec<String> {
    (0..n).map(|i| format!("s{i}")).collect()
}

fn lambda_labels(n: usize) -> Vec<String> {
    (1..=n).map(|i| i.to_string()).collect()
}

/// Bell's local hidden-variable model: a setting-independent prior P(λ) and
/// per-wing outcome tables P(σ|x,λ).
#[derive(Clone, Debug, PartialEq)]
pub struct M1Model {
    prior: Vec<f64>,
    /// P(σ1 | x, λ), conditioning order (x, λ).
    left: ProbabilityTable,
    /// P(σ2 | y, λ).
    right: ProbabilityTable,
}

impl M1Model {
    pub fn new(prior: Vec<f64>, left: ProbabilityTable, right: ProbabilityTable) -> Result<Self> {
        let sum: f64 = prior.iter().sum();
        if (sum - 1.0).abs() > PROB_TOL || prior.iter().any(|&p| !(0.0..=1.0 + PROB_TOL).contains(&p)) {
            return Err(Error::Validation(format!("prior sums to {sum}")));
        }
        for t in [&left, &right] {
            if t.cond_vars().len() != 2 || t.cond_vars()[1].cardinality() != prior.len() {
                return Err(Error::Validation(
                    "outcome table must condition on (setting, lambda)".into(),
                ));
            }
        }
        Ok(M1Model { prior, left, right })
    }

    pub fn lambda_count(&self) -> usize {
        self.prior.len()
    }

    pub fn n_settings_left(&self) -> usize {
        self.left.cond_vars()[0].cardinality()
    }

    pub fn n_settings_right(&self) -> usize {
        self.right.cond_vars()[0].cardinality()
    }

    pub fn prior(&self) -> &[f64] {
        &self.prior
    }

    pub fn left_table(&self) -> &ProbabilityTable {
        &self.left
    }

    pub fn right_table(&self) -> &ProbabilityTable {
        &self.right
    }

    fn check_settings(&self, x: usize, y: usize) -> Result<()> {
        if x >= self.n_settings_left() || y >= self.n_settings_right() {
            return Err(Error::Domain(format!(
                "setting pair ({x},{y}) outside domain {}x{}",
                self.n_settings_left(),
                self.n_settings_right()
            )));
        }
        Ok(())
    }

    /// Exact joint: Σ_λ P(σ1|x,λ) P(σ2|y,λ) P(λ).
    pub fn joint(&self, x: usize, y: usize) -> Result<JointOutcomeDistribution> {
        self.check_settings(x, y)?;
        let mut p = [0.0f64; 4];
        for (l, &pl) in self.prior.iter().enumerate() {
            let lr = self.left.row(&[x, l]);
            let rr = self.right.row(&[y, l]);
            p[0] += pl * lr[0] * rr[0];
            p[1] += pl * lr[0] * rr[1];
            p[2] += pl * lr[1] * rr[0];
            p[3] += pl * lr[1] * rr[1];
        }
        JointOutcomeDistribution::new(p[0], p[1], p[2], p[3])
    }
}

/// The naive background model: per-wing background tables P(λ_i|setting) and
/// outcome tables P(σ|setting,λ_i); no factor couples the wings.
#[derive(Clone, Debug, PartialEq)]
pub struct M2Model {
    /// P(λ1 | x).
    left_bg: ProbabilityTable,
    /// P(λ2 | y).
    right_bg: ProbabilityTable,
    /// P(σ1 | x, λ1).
    left: ProbabilityTable,
    /// P(σ2 | y, λ2).
    right: ProbabilityTable,
}

impl M2Model {
    pub fn new(
        left_bg: ProbabilityTable,
        right_bg: ProbabilityTable,
        left: ProbabilityTable,
        right: ProbabilityTable,
    ) -> Result<Self> {
        for (bg, out) in [(&left_bg, &left), (&right_bg, &right)] {
            if bg.cond_vars().len() != 1
                || out.cond_vars().len() != 2
                || out.cond_vars()[0].cardinality() != bg.cond_vars()[0].cardinality()
                || out.cond_vars()[1].cardinality() != bg.outcome_var().cardinality()
            {
                return Err(Error::Validation("inconsistent M2 table shapes".into()));
            }
        }
        Ok(M2Model {
            left_bg,
            right_bg,
            left,
            right,
        })
    }

    pub fn n_settings_left(&self) -> usize {
        self.left_bg.n_rows()
    }

    pub fn n_settings_right(&self) -> usize {
        self.right_bg.n_rows()
    }

    pub fn left_bg(&self) -> &ProbabilityTable {
        &self.left_bg
    }

    pub fn right_bg(&self) -> &ProbabilityTable {
        &self.right_bg
    }

    pub fn left_table(&self) -> &ProbabilityTable {
        &self.left
    }

    pub fn right_table(&self) -> &ProbabilityTable {
        &self.right
    }

    fn check_settings(&self, x: usize, y: usize) -> Result<()> {
        if x >= self.n_settings_left() || y >= self.n_settings_right() {
            return Err(Error::Domain(format!("setting pair ({x},{y}) outside domain")));
        }
        Ok(())
    }

    /// Marginal P(σ1|x) with λ1 summed out.
    pub fn marginal_left(&self, x: usize) -> [f64; 2] {
        let bg = self.left_bg.row(&[x]);
        let mut m = [0.0; 2];
        for (l, &pl) in bg.iter().enumerate() {
            let r = self.left.row(&[x, l]);
            m[0] += pl * r[0];
            m[1] += pl * r[1];
        }
        m
    }

    /// Marginal P(σ2|y) with λ2 summed out.
    pub fn marginal_right(&self, y: usize) -> [f64; 2] {
        let bg = self.right_bg.row(&[y]);
        let mut m = [0.0; 2];
        for (l, &pl) in bg.iter().enumerate() {
            let r = self.right.row(&[y, l]);
            m[0] += pl * r[0];
            m[1] += pl * r[1];
        }
        m
    }

    /// Exact joint: Σ_{λ1,λ2} P(σ1|x,λ1) P(σ2|y,λ2) P(λ1|x) P(λ2|y).
    pub fn joint(&self, x: usize, y: usize) -> Result<JointOutcomeDistribution> {
        self.check_settings(x, y)?;
        let lbg = self.left_bg.row(&[x]);
        let rbg = self.right_bg.row(&[y]);
        let mut p = [0.0f64; 4];
        for (l1, &p1) in lbg.iter().enumerate() {
            let lr = self.left.row(&[x, l1]);
            for (l2, &p2) in rbg.iter().enumerate() {
                let rr = self.right.row(&[y, l2]);
                let w = p1 * p2;
                p[0] += w * lr[0] * rr[0];
                p[1] += w * lr[0] * rr[1];
                p[2] += w * lr[1] * rr[0];
                p[3] += w * lr[1] * rr[1];
            }
        }
        JointOutcomeDistribution::new(p[0], p[1], p[2], p[3])
    }
}

/// Value of the measurement-independence ratio P(λ,ξ|x,y) / P(λ,ξ|x',y').
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum MiRatio {
    Finite(f64),
    /// Denominator vanishes while the numerator does not.
    Infinite,
    /// Both numerator and denominator vanish.
    Indeterminate,
}

impl MiRatio {
    fn from_parts(num: f64, den: f64) -> Self {
        match (num == 0.0, den == 0.0) {
            (true, true) => MiRatio::Indeterminate,
            (false, true) => MiRatio::Infinite,
            _ => MiRatio::Finite(num / den),
        }
    }

    /// True when the ratio equals 1 within `tol` (Indeterminate tuples carry
    /// no probability mass on either side and count as unity).
    pub fn is_unity(&self, tol: f64) -> bool {
        match self {
            MiRatio::Finite(r) => (r - 1.0).abs() <= tol,
            MiRatio::Infinite => false,
            MiRatio::Indeterminate => true,
        }
    }
}

/// Setting labels of the dichotomic model: index 0 is the unprimed setting
/// (a or b), index 1 the primed one (a' or b').
pub const SETTING_LABELS: [&str; 2] = ["a", "ap"];
pub const SETTING_LABELS_RIGHT: [&str; 2] = ["b", "bp"];

/// The dichotomic background model of Eq-style five-factor form: binary
/// hidden variables λ1, λ2, ξ, two settings per wing, and full tables
///
///   P(λ1|x), P(λ2|y), P(ξ|λ1,λ2), P(σ1|ξ,λ1,x), P(σ2|ξ,λ2,y).
#[derive(Clone, Debug, PartialEq)]
pub struct DichotomicM3Model {
    /// P(λ1 | x), x ∈ {a, a'}.
    left_bg: ProbabilityTable,
    /// P(λ2 | y), y ∈ {b, b'}.
    right_bg: ProbabilityTable,
    /// P(ξ | λ1, λ2).
    xi: ProbabilityTable,
    /// P(σ1 | ξ, λ1, x).
    left: ProbabilityTable,
    /// P(σ2 | ξ, λ2, y).
    right: ProbabilityTable,
}

impl DichotomicM3Model {
    pub fn new(
        left_bg: ProbabilityTable,
        right_bg: ProbabilityTable,
        xi: ProbabilityTable,
        left: ProbabilityTable,
        right: ProbabilityTable,
    ) -> Result<Self> {
        let shapes = [
            (left_bg.n_rows(), 2, "left_bg"),
            (right_bg.n_rows(), 2, "right_bg"),
            (xi.n_rows(), 4, "xi"),
            (left.n_rows(), 8, "left"),
            (right.n_rows(), 8, "right"),
        ];
        for (got, want, name) in shapes {
            if got != want {
                return Err(Error::Validation(format!(
                    "{name} table has {got} rows, expected {want}"
                )));
            }
        }
        Ok(DichotomicM3Model {
            left_bg,
            right_bg,
            xi,
            left,
            right,
        })
    }

    pub fn variable_specs() -> (VarSpec, VarSpec, VarSpec, VarSpec, VarSpec) {
        (
            VarSpec::new("x", SETTING_LABELS.iter().map(|s| s.to_string()).collect()),
            VarSpec::new(
                "y",
                SETTING_LABELS_RIGHT.iter().map(|s| s.to_string()).collect(),
            ),
            VarSpec::dichotomic("l1"),
            VarSpec::dichotomic("l2"),
            VarSpec::dichotomic("xi"),
        )
    }

    pub fn left_bg(&self) -> &ProbabilityTable {
        &self.left_bg
    }

    pub fn right_bg(&self) -> &ProbabilityTable {
        &self.right_bg
    }

    pub fn xi_table(&self) -> &ProbabilityTable {
        &self.xi
    }

    pub fn left_table(&self) -> &ProbabilityTable {
        &self.left
    }

    pub fn right_table(&self) -> &ProbabilityTable {
        &self.right
    }

    pub fn tables(&self) -> [(&'static str, &ProbabilityTable); 5] {
        [
            ("left_bg", &self.left_bg),
            ("right_bg", &self.right_bg),
            ("xi", &self.xi),
            ("left_outcome", &self.left),
            ("right_outcome", &self.right),
        ]
    }

    /// Exact joint: the triple sum over (λ1, λ2, ξ) ∈ {1,2}³ of
    /// P(σ1|ξ,λ1,x) P(σ2|ξ,λ2,y) P(ξ|λ1,λ2) P(λ1|x) P(λ2|y).
    pub fn joint(&self, x: usize, y: usize) -> Result<JointOutcomeDistribution> {
        if x >= 2 || y >= 2 {
            return Err(Error::Domain(format!("setting pair ({x},{y}) outside {{0,1}}²")));
        }
        let lbg = self.left_bg.row(&[x]);
        let rbg = self.right_bg.row(&[y]);
        let mut p = [0.0f64; 4];
        for l1 in 0..2 {
            for l2 in 0..2 {
                let xr = self.xi.row(&[l1, l2]);
                let w12 = lbg[l1] * rbg[l2];
                for xi in 0..2 {
                    let w = w12 * xr[xi];
                    let lr = self.left.row(&[xi, l1, x]);
                    let rr = self.right.row(&[xi, l2, y]);
                    p[0] += w * lr[0] * rr[0];
                    p[1] += w * lr[0] * rr[1];
                    p[2] += w * lr[1] * rr[0];
                    p[3] += w * lr[1] * rr[1];
                }
            }
        }
        JointOutcomeDistribution::new(p[0], p[1], p[2], p[3])
    }

    /// CHSH report over the canonical quadruple, Eq-ordering
    /// M(a,b) + M(a',b) + M(a,b') − M(a',b').
    pub fn chsh(&self) -> Result<ChshReport> {
        ChshReport::new(
            self.joint(0, 0)?.correlation(),
            self.joint(1, 0)?.correlation(),
            self.joint(0, 1)?.correlation(),
            self.joint(1, 1)?.correlation(),
        )
    }

    /// The measurement-independence ratio
    /// P(λ1,λ2,ξ|x,y) / P(λ1,λ2,ξ|x',y') = [P(λ1|x)P(λ2|y)] / [P(λ1|x')P(λ2|y')].
    ///
    /// The ξ factor cancels; the argument is kept so callers can enumerate
    /// full hidden-variable tuples.
    pub fn mi_ratio(
        &self,
        l1: usize,
        l2: usize,
        _xi: usize,
        (x, y): (usize, usize),
        (xp, yp): (usize, usize),
    ) -> MiRatio {
        let num = self.left_bg.prob(&[x], l1) * self.right_bg.prob(&[y], l2);
        let den = self.left_bg.prob(&[xp], l1) * self.right_bg.prob(&[yp], l2);
        MiRatio::from_parts(num, den)
    }

    /// Replaces each background row by κ·row + (1−κ)·uniform on both wings,
    /// leaving the ξ and outcome tables fixed. κ = 1 is the unchanged model;
    /// κ = 0 renders the backgrounds setting-independent.
    pub fn with_mixed_backgrounds(&self, kappa: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&kappa) {
            return Err(Error::Validation(format!("kappa = {kappa} outside [0,1]")));
        }
        let mut out = self.clone();
        for table in [&mut out.left_bg, &mut out.right_bg] {
            for row in table.rows_mut() {
                for p in row.iter_mut() {
                    *p = kappa * *p + (1.0 - kappa) * 0.5;
                }
            }
        }
        Ok(out)
    }

    /// Deliberately breaks normalization of one outcome row by `epsilon`,
    /// bypassing construction-time validation. Used for audit fault
    /// injection.
    pub fn corrupt_for_audit(&mut self, epsilon: f64) {
        self.left.rows_mut()[0][0] += epsilon;
    }
}

/// The deterministic 0/1 selection tables of the maximal-violation
/// construction: which λ1 each x selects, which λ2 each y selects, and which
/// ξ each (λ1, λ2) pair selects. All values are indices in {0, 1}
/// (representing hidden-variable values 1 and 2).
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct SelectionTables {
    /// λ1 selected by x = a, a'.
    pub lambda1: [usize; 2],
    /// λ2 selected by y = b, b'.
    pub lambda2: [usize; 2],
    /// ξ selected by (λ1, λ2).
    pub xi: [[usize; 2]; 2],
}

impl Default for SelectionTables {
    /// The canonical choice: P(1|a) = P(1|b) = P(1|1,1) = 1 and
    /// P(2|b') = P(2|1,2) = 1, completed with P(2|a') = 1, P(2|2,1) = 1,
    /// P(1|2,2) = 1 so that the induced (ξ,λ1,x) and (ξ,λ2,y) triples are
    /// distinct across the four setting pairs.
    fn default() -> Self {
        SelectionTables {
            lambda1: [0, 1],
            lambda2: [0, 1],
            xi: [[0, 1], [1, 0]],
        }
    }
}

impl SelectionTables {
    /// The (ξ, λ1, λ2) triple selected by a setting pair.
    pub fn selected(&self, x: usize, y: usize) -> (usize, usize, usize) {
        let l1 = self.lambda1[x];
        let l2 = self.lambda2[y];
        (self.xi[l1][l2], l1, l2)
    }

    fn validate(&self) -> Result<()> {
        let all = self
            .lambda1
            .iter()
            .chain(self.lambda2.iter())
            .chain(self.xi.iter().flatten());
        if all.clone().any(|&v| v > 1) {
            return Err(Error::Validation("selection indices must be 0 or 1".into()));
        }
        // The eight degrees of freedom require that the realized left triple
        // (ξ, λ1, x) and right triple (ξ, λ2, y) each differ across the four
        // setting pairs.
        let mut left = Vec::new();
        let mut right = Vec::new();
        for x in 0..2 {
            for y in 0..2 {
                let (xi, l1, l2) = self.selected(x, y);
                left.push((xi, l1, x));
                right.push((xi, l2, y));
            }
        }
        for triples in [&left, &right] {
            for i in 0..4 {
                for k in (i + 1)..4 {
                    if triples[i] == triples[k] {
                        return Err(Error::Validation(
                            "selection tables do not separate the four setting pairs".into(),
                        ));
                    }
                }
            }
        }
        Ok(())
    }
}

/// The eight-parameter maximal-violation construction: deterministic
/// selection tables plus free outcome probabilities α1..α8, one pair per
/// setting couple in the order (a,b) → (α1,α2), (a,b') → (α3,α4),
/// (a',b) → (α5,α6), (a',b') → (α7,α8).
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AlphaConstruction {
    pub alphas: [f64; 8],
    pub selection: SelectionTables,
}

/// (x, y, left α index, right α index) per setting couple.
const COUPLE_ALPHAS: [(usize, usize, usize, usize); 4] =
    [(0, 0, 0, 1), (0, 1, 2, 3), (1, 0, 4, 5), (1, 1, 6, 7)];

impl AlphaConstruction {
    pub fn new(alphas: [f64; 8]) -> Self {
        AlphaConstruction {
            alphas,
            selection: SelectionTables::default(),
        }
    }

    /// The paper-style maximal choice: all αi = 1 except α8 = 0.
    pub fn maximal() -> Self {
        Self::new([1.0, 1.0, 1.0, 1.0, 1.0, 1.0, 1.0, 0.0])
    }

    /// Binary assignment from a bit pattern; bit 7 (MSB) is α1, bit 0 α8.
    pub fn from_bits(bits: u8) -> Self {
        let mut alphas = [0.0; 8];
        for (i, a) in alphas.iter_mut().enumerate() {
            *a = ((bits >> (7 - i)) & 1) as f64;
        }
        Self::new(alphas)
    }

    /// Builds the fully-specified dichotomic model: deterministic background
    /// and ξ tables from the selection, outcome rows equal to (α, 1−α) at the
    /// realized triples and 0.5 elsewhere (those rows carry zero weight).
    pub fn build(&self) -> Result<DichotomicM3Model> {
        if self.alphas.iter().any(|a| !(0.0..=1.0).contains(a)) {
            return Err(Error::Validation("alphas must lie in [0,1]".into()));
        }
        self.selection.validate()?;
        let (x_var, y_var, l1_var, l2_var, xi_var) = DichotomicM3Model::variable_specs();

        let det_row = |chosen: usize| {
            if chosen == 0 {
                vec![1.0, 0.0]
            } else {
                vec![0.0, 1.0]
            }
        };
        let left_bg = ProbabilityTable::new(
            vec![x_var.clone()],
            l1_var.clone(),
            self.selection.lambda1.iter().map(|&l| det_row(l)).collect(),
        )?;
        let right_bg = ProbabilityTable::new(
            vec![y_var.clone()],
            l2_var.clone(),
            self.selection.lambda2.iter().map(|&l| det_row(l)).collect(),
        )?;
        let xi = ProbabilityTable::new(
            vec![l1_var.clone(), l2_var.clone()],
            xi_var.clone(),
            self.selection
                .xi
                .iter()
                .flatten()
                .map(|&v| det_row(v))
                .collect(),
        )?;

        let mut left_rows = vec![vec![0.5, 0.5]; 8];
        let mut right_rows = vec![vec![0.5, 0.5]; 8];
        for (x, y, li, ri) in COUPLE_ALPHAS {
            let (xi_v, l1, l2) = self.selection.selected(x, y);
            let al = self.alphas[li];
            let ar = self.alphas[ri];
            // conditioning order (ξ, λ1, x) / (ξ, λ2, y), last varies fastest
            left_rows[xi_v * 4 + l1 * 2 + x] = vec![al, 1.0 - al];
            right_rows[xi_v * 4 + l2 * 2 + y] = vec![ar, 1.0 - ar];
        }
        let left = ProbabilityTable::new(
            vec![xi_var.clone(), l1_var, x_var],
            VarSpec::outcome("s1"),
            left_rows,
        )?;
        let right = ProbabilityTable::new(
            vec![xi_var, l2_var, y_var],
            VarSpec::outcome("s2"),
            right_rows,
        )?;
        DichotomicM3Model::new(left_bg, right_bg, xi, left, right)
    }
}

/// MI ratio for an M1 model: P(λ|x,y) / P(λ|x',y') = P(λ)/P(λ).
pub fn mi_ratio_m1(m: &M1Model, lambda: usize) -> MiRatio {
    let p = m.prior()[lambda];
    if p == 0.0 {
        MiRatio::Indeterminate
    } else {
        MiRatio::Finite(1.0)
    }
}

/// MI ratio for an M2 model:
/// P(λ1,λ2|x,y) / P(λ1,λ2|x',y') = [P(λ1|x)P(λ2|y)] / [P(λ1|x')P(λ2|y')].
pub fn mi_ratio_m2(
    m: &M2Model,
    l1: usize,
    l2: usize,
    (x, y): (usize, usize),
    (xp, yp): (usize, usize),
) -> MiRatio {
    let num = m.left_bg().prob(&[x], l1) * m.right_bg().prob(&[y], l2);
    let den = m.left_bg().prob(&[xp], l1) * m.right_bg().prob(&[yp], l2);
    MiRatio::from_parts(num, den)
}

pub fn m1_var_specs(n_settings: usize, n_lambda: usize) -> (VarSpec, VarSpec, VarSpec) {
    (
        VarSpec::new("x", setting_labels(n_settings)),
        VarSpec::new("y", setting_labels(n_settings)),
        VarSpec::new("l", lambda_labels(n_lambda)),
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::core::PROB_TOL;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn uniform_m1(n_lambda: usize) -> M1Model {
        let (x, y, l) = m1_var_specs(2, n_lambda);
        M1Model::new(
            vec![1.0 / n_lambda as f64; n_lambda],
            ProbabilityTable::uniform(vec![x, l.clone()], VarSpec::outcome("s1")),
            ProbabilityTable::uniform(vec![y, l], VarSpec::outcome("s2")),
        )
        .unwrap()
    }

    #[test]
    fn m1_uniform_single_lambda_gives_uniform_joint() {
        let m = uniform_m1(1);
        let j = m.joint(0, 1).unwrap();
        for p in j.cells() {
            assert!((p - 0.25).abs() < PROB_TOL);
        }
    }

    #[test]
    fn m1_deterministic_tables_give_perfect_correlation() {
        // two λ values, each forcing (+,+) or (−,−), uniform prior
        let (x, y, l) = m1_var_specs(1, 2);
        let rows = vec![vec![1.0, 0.0], vec![0.0, 1.0]];
        let m = M1Model::new(
            vec![0.5, 0.5],
            ProbabilityTable::new(vec![x, l.clone()], VarSpec::outcome("s1"), rows.clone())
                .unwrap(),
            ProbabilityTable::new(vec![y, l], VarSpec::outcome("s2"), rows).unwrap(),
        )
        .unwrap();
        let j = m.joint(0, 0).unwrap();
        assert!((j.p_pp - 0.5).abs() < PROB_TOL && (j.p_mm - 0.5).abs() < PROB_TOL);
        assert!((j.correlation() - 1.0).abs() < PROB_TOL);
    }

    #[test]
    fn m1_unknown_setting_is_domain_error() {
        let m = uniform_m1(2);
        assert!(matches!(m.joint(2, 0), Err(Error::Domain(_))));
    }

    fn random_m2(seed: u64) -> M2Model {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let x = VarSpec::new("x", setting_labels(3));
        let y = VarSpec::new("y", setting_labels(3));
        let l1 = VarSpec::new("l1", lambda_labels(4));
        let l2 = VarSpec::new("l2", lambda_labels(4));
        M2Model::new(
            ProbabilityTable::random(vec![x.clone()], l1.clone(), &mut rng),
            ProbabilityTable::random(vec![y.clone()], l2.clone(), &mut rng),
            ProbabilityTable::random(vec![x, l1], VarSpec::outcome("s1"), &mut rng),
            ProbabilityTable::random(vec![y, l2], VarSpec::outcome("s2"), &mut rng),
        )
        .unwrap()
    }

    #[test]
    fn m2_joint_factorizes_into_marginals() {
        for seed in 0..20 {
            let m = random_m2(seed);
            for x in 0..3 {
                for y in 0..3 {
                    let j = m.joint(x, y).unwrap();
                    let ml = m.marginal_left(x);
                    let mr = m.marginal_right(y);
                    let product = [
                        ml[0] * mr[0],
                        ml[0] * mr[1],
                        ml[1] * mr[0],
                        ml[1] * mr[1],
                    ];
                    for (got, want) in j.cells().iter().zip(product) {
                        assert!((got - want).abs() < PROB_TOL);
                    }
                }
            }
        }
    }

    #[test]
    fn m3_degenerate_to_m2_product_form() {
        // uniform ξ-independent tables: joint is the outer product of the
        // wing marginals
        let (x_var, y_var, l1, l2, xi) = DichotomicM3Model::variable_specs();
        let m = DichotomicM3Model::new(
            ProbabilityTable::uniform(vec![x_var.clone()], l1.clone()),
            ProbabilityTable::uniform(vec![y_var.clone()], l2.clone()),
            ProbabilityTable::uniform(vec![l1.clone(), l2.clone()], xi.clone()),
            ProbabilityTable::new(
                vec![xi.clone(), l1, x_var],
                VarSpec::outcome("s1"),
                vec![vec![0.7, 0.3]; 8],
            )
            .unwrap(),
            ProbabilityTable::new(
                vec![xi, l2, y_var],
                VarSpec::outcome("s2"),
                vec![vec![0.2, 0.8]; 8],
            )
            .unwrap(),
        )
        .unwrap();
        let j = m.joint(0, 0).unwrap();
        let want = [0.7 * 0.2, 0.7 * 0.8, 0.3 * 0.2, 0.3 * 0.8];
        for (got, w) in j.cells().iter().zip(want) {
            assert!((got - w).abs() < PROB_TOL);
        }
    }

    #[test]
    fn alpha_construction_first_term_survives() {
        // α1 = α2 = 1 forces p_pp = 1 at (a,b), hence M(a,b) = 1
        let c = AlphaConstruction::new([1.0; 8]);
        let m = c.build().unwrap();
        let j = m.joint(0, 0).unwrap();
        assert_eq!(j.p_pp, 1.0);
        assert_eq!(j.correlation(), 1.0);
    }

    /// Closed-form oracle: X_BI as the explicit α-polynomial
    /// 2[α1α2 + (1−α1)(1−α2) + α3α4 + ... − α7α8 − (1−α7)(1−α8)] − 2.
    fn x_bi_closed_form(a: &[f64; 8]) -> f64 {
        let pair = |i: usize, k: usize| a[i] * a[k] + (1.0 - a[i]) * (1.0 - a[k]);
        2.0 * (pair(0, 1) + pair(2, 3) + pair(4, 5) - pair(6, 7)) - 2.0
    }

    #[test]
    fn alpha_model_matches_closed_form() {
        let cases = [
            [1.0, 1.0, 1.0, 1.0, 1.0, 1.0, 1.0, 0.0],
            [1.0; 8],
            [1.0, 1.0, 1.0, 1.0, 1.0, 1.0, 0.0, 1.0],
            [0.5; 8],
            [0.3, 0.9, 0.1, 0.7, 0.8, 0.2, 0.6, 0.4],
        ];
        for alphas in cases {
            let report = AlphaConstruction::new(alphas).build().unwrap().chsh().unwrap();
            assert!(
                (report.x_bi - x_bi_closed_form(&alphas)).abs() < PROB_TOL,
                "alphas {alphas:?}: {} vs {}",
                report.x_bi,
                x_bi_closed_form(&alphas)
            );
        }
    }

    #[test]
    fn alpha_maximal_reaches_four_exactly() {
        let report = AlphaConstruction::maximal().build().unwrap().chsh().unwrap();
        assert_eq!(report.x_bi, 4.0);
    }

    #[test]
    fn alpha_all_ones_gives_two() {
        let report = AlphaConstruction::new([1.0; 8]).build().unwrap().chsh().unwrap();
        assert_eq!(report.x_bi, 2.0);
    }

    #[test]
    fn alpha_all_half_gives_zero() {
        let report = AlphaConstruction::new([0.5; 8]).build().unwrap().chsh().unwrap();
        assert_eq!(report.x_bi, 0.0);
    }

    #[test]
    fn degenerate_selection_tables_rejected() {
        let mut c = AlphaConstruction::maximal();
        // same λ1 for a and a' and same ξ everywhere collapses the triples
        c.selection = SelectionTables {
            lambda1: [0, 0],
            lambda2: [0, 0],
            xi: [[0, 0], [0, 0]],
        };
        assert!(c.build().is_err());
    }

    #[test]
    fn mi_ratio_detects_violation_in_alpha_construction() {
        let m = AlphaConstruction::maximal().build().unwrap();
        // (λ1,λ2) = (1,1): comparing (a,b) against (a,b') where P(2|b') = 1
        let r = m.mi_ratio(0, 0, 0, (0, 0), (0, 1));
        assert_eq!(r, MiRatio::Infinite);
    }

    #[test]
    fn mi_ratio_unity_for_setting_independent_backgrounds() {
        let (x_var, y_var, l1, l2, xi) = DichotomicM3Model::variable_specs();
        let m = DichotomicM3Model::new(
            ProbabilityTable::new(vec![x_var.clone()], l1.clone(), vec![vec![0.3, 0.7]; 2])
                .unwrap(),
            ProbabilityTable::new(vec![y_var.clone()], l2.clone(), vec![vec![0.6, 0.4]; 2])
                .unwrap(),
            ProbabilityTable::uniform(vec![l1.clone(), l2.clone()], xi.clone()),
            ProbabilityTable::uniform(vec![xi.clone(), l1, x_var], VarSpec::outcome("s1")),
            ProbabilityTable::uniform(vec![xi, l2, y_var], VarSpec::outcome("s2")),
        )
        .unwrap();
        for l1 in 0..2 {
            for l2 in 0..2 {
                for (q, qp) in [((0, 0), (1, 1)), ((0, 1), (1, 0)), ((0, 0), (0, 1))] {
                    assert!(m.mi_ratio(l1, l2, 0, q, qp).is_unity(PROB_TOL));
                }
            }
        }
    }

    #[test]
    fn mi_ratio_m1_is_unity() {
        let m = uniform_m1(4);
        for l in 0..4 {
            assert!(mi_ratio_m1(&m, l).is_unity(PROB_TOL));
        }
    }

    #[test]
    fn kappa_mixing_endpoints() {
        let m = AlphaConstruction::maximal().build().unwrap();
        let same = m.with_mixed_backgrounds(1.0).unwrap();
        assert_eq!(m.chsh().unwrap().x_bi, same.chsh().unwrap().x_bi);
        let flat = m.with_mixed_backgrounds(0.0).unwrap();
        for x in 0..2 {
            assert_eq!(flat.left_bg().row(&[x]), &[0.5, 0.5]);
        }
        assert!(m.with_mixed_backgrounds(1.5).is_err());
    }
}
