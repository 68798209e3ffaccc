//! Conditional probability tables over discrete variables.
//!
//! A table maps every conditioning tuple to a normalized distribution over
//! the outcome variable. Rows are validated once at construction; evaluation
//! is the hot path for enumeration and scanning and performs no checks.

use rand::Rng;
use serde_json::{Map, Value};

use crate::core::PROB_TOL;
use crate::error::{Error, Result};

/// A named discrete variable with labeled values.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct VarSpec {
    pub name: String,
    pub labels: Vec<String>,
}

impl VarSpec {
    pub fn new(name: impl Into<String>, labels: Vec<String>) -> Self {
        VarSpec {
            name: name.into(),
            labels,
        }
    }

    /// A binary hidden variable with values written "1" and "2".
    pub fn dichotomic(name: impl Into<String>) -> Self {
        Self::new(name, vec!["1".into(), "2".into()])
    }

    /// A dichotomic outcome variable with values "+1" and "-1".
    pub fn outcome(name: impl Into<String>) -> Self {
        Self::new(name, vec!["+1".into(), "-1".into()])
    }

    pub fn cardinality(&self) -> usize {
        self.labels.len()
    }
}

/// A conditional probability table P(outcome | conditioning variables).
#[derive(Clone, Debug, PartialEq)]
pub struct ProbabilityTable {
    cond: Vec<VarSpec>,
    outcome: VarSpec,
    /// One normalized row per conditioning tuple, row-major in the
    /// conditioning variables (last variable varies fastest).
    rows: Vec<Vec<f64>>,
}

impl ProbabilityTable {
    pub fn new(cond: Vec<VarSpec>, outcome: VarSpec, rows: Vec<Vec<f64>>) -> Result<Self> {
        let t = ProbabilityTable {
            cond,
            outcome,
            rows,
        };
        t.validate()?;
        Ok(t)
    }

    pub fn uniform(cond: Vec<VarSpec>, outcome: VarSpec) -> Self {
        let n_rows: usize = cond.iter().map(VarSpec::cardinality).product();
        let k = outcome.cardinality();
        let rows = vec![vec![1.0 / k as f64; k]; n_rows];
        ProbabilityTable {
            cond,
            outcome,
            rows,
        }
    }

    /// Rows drawn entrywise from U(0,1), then normalized.
    pub fn random<R: Rng>(cond: Vec<VarSpec>, outcome: VarSpec, rng: &mut R) -> Self {
        let n_rows: usize = cond.iter().map(VarSpec::cardinality).product();
        let k = outcome.cardinality();
        let rows = (0..n_rows)
            .map(|_| {
                let mut row: Vec<f64> = (0..k).map(|_| rng.gen::<f64>()).collect();
                let sum: f64 = row.iter().sum();
                for p in &mut row {
                    *p /= sum;
                }
                row
            })
            .collect();
        ProbabilityTable {
            cond,
            outcome,
            rows,
        }
    }

    fn validate(&self) -> Result<()> {
        let expected: usize = self.cond.iter().map(VarSpec::cardinality).product();
        if self.rows.len() != expected {
            return Err(Error::Validation(format!(
                "table over {:?} has {} rows, expected {expected}",
                self.var_names(),
                self.rows.len()
            )));
        }
        let k = self.outcome.cardinality();
        for (i, row) in self.rows.iter().enumerate() {
            if row.len() != k {
                return Err(Error::Validation(format!(
                    "row {} has {} entries, expected {k}",
                    self.row_key(i),
                    row.len()
                )));
            }
            for &p in row {
                if !(0.0 - PROB_TOL..=1.0 + PROB_TOL).contains(&p) {
                    return Err(Error::Validation(format!(
                        "entry {p} in row {} outside [0,1]",
                        self.row_key(i)
                    )));
                }
            }
            let sum: f64 = row.iter().sum();
            if (sum - 1.0).abs() > PROB_TOL {
                return Err(Error::Validation(format!(
                    "row {} sums to {sum}",
                    self.row_key(i)
                )));
            }
        }
        Ok(())
    }

    fn var_names(&self) -> Vec<&str> {
        self.cond.iter().map(|v| v.name.as_str()).collect()
    }

    pub fn cond_vars(&self) -> &[VarSpec] {
        &self.cond
    }

    pub fn outcome_var(&self) -> &VarSpec {
        &self.outcome
    }

    pub fn n_rows(&self) -> usize {
        self.rows.len()
    }

    /// Mixed-radix row index for a conditioning tuple.
    pub fn row_index(&self, cond: &[usize]) -> usize {
        debug_assert_eq!(cond.len(), self.cond.len());
        let mut idx = 0;
        for (k, &i) in cond.iter().enumerate() {
            debug_assert!(i < self.cond[k].cardinality());
            idx = idx * self.cond[k].cardinality() + i;
        }
        idx
    }

    /// Inverse of `row_index`.
    pub fn decode_row(&self, mut idx: usize) -> Vec<usize> {
        let mut tuple = vec![0usize; self.cond.len()];
        for k in (0..self.cond.len()).rev() {
            let card = self.cond[k].cardinality();
            tuple[k] = idx % card;
            idx /= card;
        }
        tuple
    }

    pub fn row(&self, cond: &[usize]) -> &[f64] {
        &self.rows[self.row_index(cond)]
    }

    pub fn prob(&self, cond: &[usize], outcome: usize) -> f64 {
        self.rows[self.row_index(cond)][outcome]
    }

    pub fn rows_mut(&mut self) -> &mut Vec<Vec<f64>> {
        &mut self.rows
    }

    /// Conditioning-tuple key of a row, e.g. `"xi=1,l1=2,x=a"`.
    pub fn row_key(&self, idx: usize) -> String {
        let tuple = self.decode_row(idx);
        self.cond
            .iter()
            .zip(&tuple)
            .map(|(v, &i)| format!("{}={}", v.name, v.labels[i]))
            .collect::<Vec<_>>()
            .join(",")
    }

    /// Worst |row sum − 1| across all rows, with the offending row's key.
    pub fn worst_residual(&self) -> (String, f64) {
        let mut worst = (String::new(), 0.0);
        for (i, row) in self.rows.iter().enumerate() {
            let r = (row.iter().sum::<f64>() - 1.0).abs();
            if r >= worst.1 {
                worst = (self.row_key(i), r);
            }
        }
        worst
    }

    /// JSON object with one key per conditioning tuple and the
    /// outcome-probability array as value.
    pub fn to_json_object(&self) -> Value {
        let mut map = Map::new();
        for (i, row) in self.rows.iter().enumerate() {
            map.insert(
                self.row_key(i),
                Value::Array(row.iter().map(|&p| p.into()).collect()),
            );
        }
        Value::Object(map)
    }

    /// Rebuilds a table from its JSON object given the variable specs.
    pub fn from_json_object(cond: Vec<VarSpec>, outcome: VarSpec, obj: &Value) -> Result<Self> {
        let map = obj
            .as_object()
            .ok_or_else(|| Error::Config("table is not a JSON object".into()))?;
        let n_rows: usize = cond.iter().map(VarSpec::cardinality).product();
        if map.len() != n_rows {
            return Err(Error::Config(format!(
                "table has {} rows, expected {n_rows}",
                map.len()
            )));
        }
        let mut rows = vec![Vec::new(); n_rows];
        for (key, value) in map {
            let tuple = parse_key(&cond, key)?;
            let mut idx = 0;
            for (k, &i) in tuple.iter().enumerate() {
                idx = idx * cond[k].cardinality() + i;
            }
            let arr = value
                .as_array()
                .ok_or_else(|| Error::Config(format!("row {key} is not an array")))?;
            let row: Option<Vec<f64>> = arr.iter().map(Value::as_f64).collect();
            rows[idx] =
                row.ok_or_else(|| Error::Config(format!("row {key} has non-numeric entries")))?;
        }
        if rows.iter().any(Vec::is_empty) && outcome.cardinality() > 0 {
            return Err(Error::Config("duplicate or missing conditioning tuples".into()));
        }
        Self::new(cond, outcome, rows)
    }
}

fn parse_key(cond: &[VarSpec], key: &str) -> Result<Vec<usize>> {
    let parts: Vec<&str> = if key.is_empty() {
        Vec::new()
    } else {
        key.split(',').collect()
    };
    if parts.len() != cond.len() {
        return Err(Error::Config(format!(
            "key '{key}' has {} components, expected {}",
            parts.len(),
            cond.len()
        )));
    }
    let mut tuple = Vec::with_capacity(cond.len());
    for (part, var) in parts.iter().zip(cond) {
        let (name, label) = part
            .split_once('=')
            .ok_or_else(|| Error::Config(format!("bad key component '{part}'")))?;
        if name != var.name {
            return Err(Error::Config(format!(
                "key component '{part}' does not match variable '{}'",
                var.name
            )));
        }
        let i = var
            .labels
            .iter()
            .position(|l| l == label)
            .ok_or_else(|| Error::Config(format!("unknown label '{label}' for '{name}'")))?;
        tuple.push(i);
    }
    Ok(tuple)
}
