//! Canonical JSON forms for polynomials.
//!
//! Exact: `{"terms":[{"coeff":"p/q","exps":[e1,…]}, …]}` with coefficients in
//! `p/q` or `p/q+r/s i` syntax. Numeric: same shape with `"coeff":[re, im]`.
//! Terms are emitted in descending graded-lex order so output is stable.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::polyring::{GaussRational, Monomial, NumPoly, Poly, PolyError};

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TermJson {
    pub coeff: String,
    pub exps: Vec<u32>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PolyJson {
    pub terms: Vec<TermJson>,
}

impl PolyJson {
    pub fn from_poly(p: &Poly) -> Self {
        PolyJson {
            terms: p
                .terms()
                .rev()
                .map(|(m, c)| TermJson {
                    coeff: c.to_string(),
                    exps: m.0.clone(),
                })
                .collect(),
        }
    }

    pub fn to_poly(&self, vars: &[String]) -> Result<Poly, PolyError> {
        let terms = self
            .terms
            .iter()
            .map(|t| Ok((t.coeff.parse::<GaussRational>()?, t.exps.clone())))
            .collect::<Result<Vec<_>, PolyError>>()?;
        Poly::from_terms(vars.to_vec(), terms)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NumTermJson {
    pub coeff: [f64; 2],
    pub exps: Vec<u32>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NumPolyJson {
    pub terms: Vec<NumTermJson>,
}

impl NumPolyJson {
    pub fn from_poly(p: &NumPoly) -> Self {
        NumPolyJson {
            terms: p
                .terms()
                .rev()
                .map(|(m, c)| NumTermJson {
                    coeff: [c.re, c.im],
                    exps: m.0.clone(),
                })
                .collect(),
        }
    }

    pub fn to_poly(&self, vars: &[String]) -> Result<NumPoly, PolyError> {
        for t in &self.terms {
            if t.exps.len() != vars.len() {
                return Err(PolyError::ArityMismatch {
                    expected: vars.len(),
                    got: t.exps.len(),
                });
            }
        }
        Ok(NumPoly::from_terms(
            vars.to_vec(),
            self.terms.iter().map(|t| {
                (
                    Monomial(t.exps.clone()),
                    Complex64::new(t.coeff[0], t.coeff[1]),
                )
            }),
        ))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exact_round_trip() {
        let vars = vec!["x".to_string(), "y".to_string()];
        let json = r#"{"terms":[{"coeff":"1/2+3 i","exps":[1,2]},{"coeff":"-4","exps":[0,0]}]}"#;
        let pj: PolyJson = serde_json::from_str(json).unwrap();
        let p = pj.to_poly(&vars).unwrap();
        assert_eq!(p.num_terms(), 2);
        assert_eq!(PolyJson::from_poly(&p), pj);
    }

    #[test]
    fn decimal_rejected() {
        let pj: PolyJson =
            serde_json::from_str(r#"{"terms":[{"coeff":"0.5","exps":[1]}]}"#).unwrap();
        assert!(matches!(
            pj.to_poly(&["x".into()]),
            Err(PolyError::BadCoefficient(_))
        ));
    }
}
