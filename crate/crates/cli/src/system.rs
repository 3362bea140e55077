//! System files: generators and target over named variables.
//!
//! ```json
//! {"vars": ["x"],
//!  "generators": [{"terms": [{"coeff": "1", "exps": [1]}]}, ...],
//!  "target": {"terms": [{"coeff": "1", "exps": [0]}]}}
//! ```
//!
//! For modules, `generators` is an `r × m` matrix (rows of polynomials) and
//! `target` a column of `r` polynomials.

use std::path::Path;

use nullcert::bounds::parse_rational;
use nullcert::format::PolyJson;
use nullcert::polyring::Poly;
use nullcert::MembershipProblem;
use num_rational::BigRational;
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::error::CliError;

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SystemFile {
    pub vars: Vec<String>,
    pub generators: Value,
    pub target: Value,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub nu_inf: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub degrees: Option<Vec<u32>>,
}

#[derive(Debug)]
pub struct LoadedSystem {
    pub problem: MembershipProblem,
    pub nu_inf: Option<BigRational>,
    /// SHA-256 of the canonical JSON of the file.
    pub sha256: String,
}

fn poly_at(v: &Value, field: &str, vars: &[String]) -> Result<Poly, CliError> {
    let pj: PolyJson =
        serde_json::from_value(v.clone()).map_err(|e| CliError::Schema(format!("{field}: {e}")))?;
    pj.to_poly(vars)
        .map_err(|e| CliError::Schema(format!("{field}: {e}")))
}

fn array<'a>(v: &'a Value, field: &str) -> Result<&'a Vec<Value>, CliError> {
    match v {
        Value::Array(a) if !a.is_empty() => Ok(a),
        Value::Array(_) => Err(CliError::Schema(format!("{field}: must not be empty"))),
        _ => Err(CliError::Schema(format!("{field}: expected an array"))),
    }
}

impl SystemFile {
    pub fn parse(text: &str) -> Result<SystemFile, CliError> {
        serde_json::from_str(text).map_err(|e| CliError::Schema(e.to_string()))
    }

    /// Generator columns (`columns[j][i]`) and target rows.
    fn shape(&self) -> Result<(Vec<Vec<Poly>>, Vec<Poly>), CliError> {
        let vars = &self.vars;
        let gens = array(&self.generators, "generators")?;
        let columns = if gens.iter().all(Value::is_array) {
            let rows: Vec<Vec<Poly>> = gens
                .iter()
                .enumerate()
                .map(|(i, row)| {
                    array(row, &format!("generators[{i}]"))?
                        .iter()
                        .enumerate()
                        .map(|(j, p)| poly_at(p, &format!("generators[{i}][{j}]"), vars))
                        .collect()
                })
                .collect::<Result<_, CliError>>()?;
            let m = rows[0].len();
            if let Some(i) = rows.iter().position(|r| r.len() != m) {
                return Err(CliError::Schema(format!(
                    "generators[{i}]: expected {m} entries like row 0"
                )));
            }
            (0..m)
                .map(|j| rows.iter().map(|r| r[j].clone()).collect())
                .collect()
        } else {
            gens.iter()
                .enumerate()
                .map(|(j, p)| Ok(vec![poly_at(p, &format!("generators[{j}]"), vars)?]))
                .collect::<Result<Vec<Vec<Poly>>, CliError>>()?
        };
        let target = match &self.target {
            Value::Array(items) => items
                .iter()
                .enumerate()
                .map(|(i, p)| poly_at(p, &format!("target[{i}]"), vars))
                .collect::<Result<Vec<_>, _>>()?,
            other => vec![poly_at(other, "target", vars)?],
        };
        Ok((columns, target))
    }

    pub fn load(&self) -> Result<LoadedSystem, CliError> {
        if self.vars.is_empty() {
            return Err(CliError::Schema(
                "vars: at least one variable is required".into(),
            ));
        }
        let mut seen = self.vars.clone();
        seen.sort();
        seen.dedup();
        if seen.len() != self.vars.len() {
            return Err(CliError::Schema("vars: names must be distinct".into()));
        }
        let (columns, target) = self.shape()?;
        let problem = MembershipProblem::module(columns, target, self.degrees.clone())
            .map_err(|e| CliError::Schema(e.to_string()))?;
        let nu_inf = self
            .nu_inf
            .as_deref()
            .map(parse_rational)
            .transpose()
            .map_err(|e| CliError::Schema(format!("nu_inf: {e}")))?;
        let canonical = serde_json::to_vec(self).expect("system serializes");
        Ok(LoadedSystem {
            problem,
            nu_inf,
            sha256: crate::sha256_hex(&canonical),
        })
    }
}

pub fn read_system(path: &Path) -> Result<LoadedSystem, CliError> {
    let text = crate::read_text(path)?;
    SystemFile::parse(&text)
        .and_then(|s| s.load())
        .map_err(|e| e.in_file(path))
}

#[cfg(test)]
mod tests {
    use super::*;

    const PAIR: &str = r#"{"vars":["x"],"generators":[{"terms":[{"coeff":"1","exps":[1]}]},{"terms":[{"coeff":"1","exps":[1]},{"coeff":"-1","exps":[0]}]}],"target":{"terms":[{"coeff":"1","exps":[0]}]}}"#;

    #[test]
    fn ideal_instance() {
        let sys = SystemFile::parse(PAIR).unwrap().load().unwrap();
        assert_eq!(sys.problem.m(), 2);
        assert_eq!(sys.problem.r(), 1);
        assert_eq!(sys.problem.degrees(), &[1, 1]);
        assert_eq!(sys.sha256.len(), 64);
    }

    #[test]
    fn module_matrix() {
        let text = r#"{"vars":["x","y"],
            "generators":[[{"terms":[{"coeff":"1","exps":[1,0]}]},{"terms":[]}],
                          [{"terms":[]},{"terms":[{"coeff":"1","exps":[0,1]}]}]],
            "target":[{"terms":[{"coeff":"1","exps":[2,0]}]},{"terms":[{"coeff":"1","exps":[0,2]}]}]}"#;
        let sys = SystemFile::parse(text).unwrap().load().unwrap();
        assert_eq!((sys.problem.r(), sys.problem.m()), (2, 2));
    }

    #[test]
    fn schema_errors_name_the_field() {
        let e = SystemFile::parse(r#"{"vars":["x"],"generators":[]}"#).unwrap_err();
        assert!(e.to_string().contains("target"), "{e}");
        let e = SystemFile::parse(&PAIR.replace("\"-1\"", "\"0.5\""))
            .unwrap()
            .load()
            .unwrap_err();
        assert!(e.to_string().contains("generators[1]"), "{e}");
        let e = SystemFile::parse(&PAIR.replace("[0]}]}],", "[0,2]}]}],"))
            .unwrap()
            .load()
            .unwrap_err();
        assert!(e.to_string().contains("generators[1]"), "{e}");
        let e = SystemFile::parse(&PAIR.replace("\"vars\"", "\"variables\"")).unwrap_err();
        assert!(e.to_string().contains("variables"), "{e}");
    }
}
