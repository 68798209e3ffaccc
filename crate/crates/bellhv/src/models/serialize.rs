//! JSON model documents, schema "bellhv/1".
//!
//! Each discrete model serializes to one object per table; table keys are
//! conditioning-tuple strings (e.g. `"xi=1,l1=2,x=a"`) and values are
//! outcome-probability arrays ordered `[P(+1), P(-1)]` for outcome variables
//! (or by hidden-variable value for background and ξ tables).

use serde_json::{json, Map, Value};

use crate::error::{Error, Result};
use crate::models::discrete::{
    m1_var_specs, setting_labels, AlphaConstruction, DichotomicM3Model, M1Model, M2Model,
};
use crate::models::table::{ProbabilityTable, VarSpec};

pub const SCHEMA: &str = "bellhv/1";

/// A parsed model document.
#[derive(Clone, Debug)]
pub enum ModelDocument {
    M1(M1Model),
    M2(M2Model),
    M3(DichotomicM3Model),
    Alpha(AlphaConstruction),
    /// The spherical Hall model; fully determined by its functional forms.
    Hall,
    /// The singlet-state reference statistics.
    Quantum,
}

impl ModelDocument {
    pub fn kind(&self) -> &'static str {
        match self {
            ModelDocument::M1(_) => "m1",
            ModelDocument::M2(_) => "m2",
            ModelDocument::M3(_) => "m3-dichotomic",
            ModelDocument::Alpha(_) => "alpha",
            ModelDocument::Hall => "hall",
            ModelDocument::Quantum => "quantum",
        }
    }

    pub fn to_json(&self) -> Value {
        match self {
            ModelDocument::M1(m) => json!({
                "schema": SCHEMA,
                "kind": "m1",
                "n_settings_left": m.n_settings_left(),
                "n_settings_right": m.n_settings_right(),
                "n_lambda": m.lambda_count(),
                "prior": m.prior(),
                "tables": {
                    "left": m.left_table().to_json_object(),
                    "right": m.right_table().to_json_object(),
                },
            }),
            ModelDocument::M2(m) => json!({
                "schema": SCHEMA,
                "kind": "m2",
                "n_settings_left": m.n_settings_left(),
                "n_settings_right": m.n_settings_right(),
                "n_lambda_left": m.left_bg().outcome_var().cardinality(),
                "n_lambda_right": m.right_bg().outcome_var().cardinality(),
                "tables": {
                    "left_bg": m.left_bg().to_json_object(),
                    "right_bg": m.right_bg().to_json_object(),
                    "left": m.left_table().to_json_object(),
                    "right": m.right_table().to_json_object(),
                },
            }),
            ModelDocument::M3(m) => json!({
                "schema": SCHEMA,
                "kind": "m3-dichotomic",
                "tables": {
                    "left_bg": m.left_bg().to_json_object(),
                    "right_bg": m.right_bg().to_json_object(),
                    "xi": m.xi_table().to_json_object(),
                    "left_outcome": m.left_table().to_json_object(),
                    "right_outcome": m.right_table().to_json_object(),
                },
            }),
            ModelDocument::Alpha(c) => json!({
                "schema": SCHEMA,
                "kind": "alpha",
                "alphas": c.alphas,
            }),
            ModelDocument::Hall => json!({ "schema": SCHEMA, "kind": "hall" }),
            ModelDocument::Quantum => json!({ "schema": SCHEMA, "kind": "quantum" }),
        }
    }

    pub fn from_json(doc: &Value) -> Result<Self> {
        let obj = doc
            .as_object()
            .ok_or_else(|| Error::Config("model document is not a JSON object".into()))?;
        match obj.get("schema").and_then(Value::as_str) {
            Some(SCHEMA) => {}
            other => {
                return Err(Error::Config(format!(
                    "unsupported schema {other:?}, expected \"{SCHEMA}\""
                )))
            }
        }
        let kind = obj
            .get("kind")
            .and_then(Value::as_str)
            .ok_or_else(|| Error::Config("missing model kind".into()))?;
        match kind {
            "m1" => Ok(ModelDocument::M1(m1_from_json(obj)?)),
            "m2" => Ok(ModelDocument::M2(m2_from_json(obj)?)),
            "m3-dichotomic" => Ok(ModelDocument::M3(m3_from_json(obj)?)),
            "alpha" => {
                let alphas: Vec<f64> = obj
                    .get("alphas")
                    .and_then(Value::as_array)
                    .map(|a| a.iter().filter_map(Value::as_f64).collect())
                    .ok_or_else(|| Error::Config("alpha model needs an 'alphas' array".into()))?;
                let alphas: [f64; 8] = alphas
                    .try_into()
                    .map_err(|_| Error::Config("'alphas' must have exactly 8 entries".into()))?;
                Ok(ModelDocument::Alpha(AlphaConstruction::new(alphas)))
            }
            "hall" => Ok(ModelDocument::Hall),
            "quantum" => Ok(ModelDocument::Quantum),
            other => Err(Error::Config(format!("unknown model kind '{other}'"))),
        }
    }
}

fn get_usize(obj: &Map<String, Value>, key: &str) -> Result<usize> {
    obj.get(key)
        .and_then(Value::as_u64)
        .map(|v| v as usize)
        .ok_or_else(|| Error::Config(format!("missing or non-integer field '{key}'")))
}

fn get_table<'a>(obj: &'a Map<String, Value>, name: &str) -> Result<&'a Value> {
    obj.get("tables")
        .and_then(Value::as_object)
        .and_then(|t| t.get(name))
        .ok_or_else(|| Error::Config(format!("missing table '{name}'")))
}

fn m1_from_json(obj: &Map<String, Value>) -> Result<M1Model> {
    let nl = get_usize(obj, "n_settings_left")?;
    let nr = get_usize(obj, "n_settings_right")?;
    let nlam = get_usize(obj, "n_lambda")?;
    let prior: Vec<f64> = obj
        .get("prior")
        .and_then(Value::as_array)
        .map(|a| a.iter().filter_map(Value::as_f64).collect())
        .ok_or_else(|| Error::Config("missing 'prior' array".into()))?;
    let (x, _, l) = m1_var_specs(nl, nlam);
    let (_, y, _) = m1_var_specs(nr, nlam);
    let left = ProbabilityTable::from_json_object(
        vec![x, l.clone()],
        VarSpec::outcome("s1"),
        get_table(obj, "left")?,
    )?;
    let right = ProbabilityTable::from_json_object(
        vec![y, l],
        VarSpec::outcome("s2"),
        get_table(obj, "right")?,
    )?;
    M1Model::new(prior, left, right)
}

fn m2_from_json(obj: &Map<String, Value>) -> Result<M2Model> {
    let nl = get_usize(obj, "n_settings_left")?;
    let nr = get_usize(obj, "n_settings_right")?;
    let nl1 = get_usize(obj, "n_lambda_left")?;
    let nl2 = get_usize(obj, "n_lambda_right")?;
    let x = VarSpec::new("x", setting_labels(nl));
    let y = VarSpec::new("y", setting_labels(nr));
    let l1 = VarSpec::new("l1", (1..=nl1).map(|i| i.to_string()).collect());
    let l2 = VarSpec::new("l2", (1..=nl2).map(|i| i.to_string()).collect());
    M2Model::new(
        ProbabilityTable::from_json_object(vec![x.clone()], l1.clone(), get_table(obj, "left_bg")?)?,
        ProbabilityTable::from_json_object(
            vec![y.clone()],
            l2.clone(),
            get_table(obj, "right_bg")?,
        )?,
        ProbabilityTable::from_json_object(
            vec![x, l1],
            VarSpec::outcome("s1"),
            get_table(obj, "left")?,
        )?,
        ProbabilityTable::from_json_object(
            vec![y, l2],
            VarSpec::outcome("s2"),
            get_table(obj, "right")?,
        )?,
    )
}

fn m3_from_json(obj: &Map<String, Value>) -> Result<DichotomicM3Model> {
    let (x, y, l1, l2, xi) = DichotomicM3Model::variable_specs();
    DichotomicM3Model::new(
        ProbabilityTable::from_json_object(vec![x.clone()], l1.clone(), get_table(obj, "left_bg")?)?,
        ProbabilityTable::from_json_object(
            vec![y.clone()],
            l2.clone(),
            get_table(obj, "right_bg")?,
        )?,
        ProbabilityTable::from_json_object(
            vec![l1.clone(), l2.clone()],
            xi.clone(),
            get_table(obj, "xi")?,
        )?,
        ProbabilityTable::from_json_object(
            vec![xi.clone(), l1, x],
            VarSpec::outcome("s1"),
            get_table(obj, "left_outcome")?,
        )?,
        ProbabilityTable::from_json_object(
            vec![xi, l2, y],
            VarSpec::outcome("s2"),
            get_table(obj, "right_outcome")?,
        )?,
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::core::PROB_TOL;
    use crate::models::discrete::m1_var_specs;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn m3_round_trip() {
        let m = AlphaConstruction::new([0.9, 0.8, 0.7, 0.6, 0.5, 0.4, 0.3, 0.2])
            .build()
            .unwrap();
        let doc = ModelDocument::M3(m.clone()).to_json();
        match ModelDocument::from_json(&doc).unwrap() {
            ModelDocument::M3(back) => assert_eq!(m, back),
            other => panic!("wrong kind {}", other.kind()),
        }
    }

    #[test]
    fn m1_round_trip() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let (x, y, l) = m1_var_specs(4, 3);
        let m = M1Model::new(
            vec![0.2, 0.5, 0.3],
            ProbabilityTable::random(vec![x, l.clone()], VarSpec::outcome("s1"), &mut rng),
            ProbabilityTable::random(vec![y, l], VarSpec::outcome("s2"), &mut rng),
        )
        .unwrap();
        let doc = ModelDocument::M1(m.clone()).to_json();
        match ModelDocument::from_json(&doc).unwrap() {
            ModelDocument::M1(back) => {
                assert_eq!(m.prior(), back.prior());
                for xs in 0..4 {
                    for ys in 0..4 {
                        let a = m.joint(xs, ys).unwrap();
                        let b = back.joint(xs, ys).unwrap();
                        for (pa, pb) in a.cells().iter().zip(b.cells()) {
                            assert!((pa - pb).abs() < PROB_TOL);
                        }
                    }
                }
            }
            other => panic!("wrong kind {}", other.kind()),
        }
    }

    #[test]
    fn bad_schema_rejected() {
        let doc = serde_json::json!({"schema": "bellhv/2", "kind": "hall"});
        assert!(ModelDocument::from_json(&doc).is_err());
        let doc = serde_json::json!({"kind": "hall"});
        assert!(ModelDocument::from_json(&doc).is_err());
    }
}
