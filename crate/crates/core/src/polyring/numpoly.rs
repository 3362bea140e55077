use std::collections::BTreeMap;
use std::fmt;

use num_complex::Complex64;

use super::{Monomial, PolyError};

/// Polynomial with complex floating coefficients; carries numeric
/// certificates and integrated kernel coefficients.
#[derive(Clone, Debug, PartialEq)]
pub struct NumPoly {
    vars: Vec<String>,
    terms: BTreeMap<Monomial, Complex64>,
}

impl NumPoly {
    pub fn zero(vars: Vec<String>) -> Self {
        NumPoly {
            vars,
            terms: BTreeMap::new(),
        }
    }

    pub fn from_terms<I>(vars: Vec<String>, terms: I) -> Self
    where
        I: IntoIterator<Item = (Monomial, Complex64)>,
    {
        let mut p = NumPoly::zero(vars);
        for (m, c) in terms {
            p.add_term(m, c);
        }
        p
    }

    pub fn vars(&self) -> &[String] {
        &self.vars
    }

    pub fn terms(&self) -> impl DoubleEndedIterator<Item = (&Monomial, &Complex64)> {
        self.terms.iter()
    }

    pub fn add_term(&mut self, m: Monomial, c: Complex64) {
        debug_assert_eq!(m.len(), self.vars.len());
        *self.terms.entry(m).or_default() += c;
    }

    pub fn coeff(&self, m: &Monomial) -> Complex64 {
        self.terms.get(m).copied().unwrap_or_default()
    }

    pub fn degree(&self) -> Option<u32> {
        self.terms
            .iter()
            .filter(|(_, c)| c.norm() > 0.0)
            .map(|(m, _)| m.degree())
            .max()
    }

    pub fn evaluate(&self, point: &[Complex64]) -> Result<Complex64, PolyError> {
        if point.len() != self.vars.len() {
            return Err(PolyError::ArityMismatch {
                expected: self.vars.len(),
                got: point.len(),
            });
        }
        Ok(self
            .terms
            .iter()
            .map(|(m, c)| m.0.iter().zip(point).fold(*c, |t, (&e, x)| t * x.powu(e)))
            .sum())
    }

    /// Sets `homvar = 1` and drops it from the ring; no homogeneity check.
    pub fn dehomogenize(&self, homvar: &str) -> Result<NumPoly, PolyError> {
        let h = self
            .vars
            .iter()
            .position(|v| v == homvar)
            .ok_or_else(|| PolyError::UnknownVariable(homvar.to_string()))?;
        let vars = self
            .vars
            .iter()
            .enumerate()
            .filter(|&(k, _)| k != h)
            .map(|(_, v)| v.clone());
        let mut out = NumPoly::zero(vars.collect());
        for (m, c) in &self.terms {
            let e =
                m.0.iter()
                    .enumerate()
                    .filter(|&(k, _)| k != h)
                    .map(|(_, &x)| x);
            out.add_term(Monomial(e.collect()), *c);
        }
        Ok(out)
    }

    /// Largest coefficient-wise distance to `other` over the same ring.
    pub fn max_coeff_distance(&self, other: &NumPoly) -> f64 {
        let mut keys: Vec<&Monomial> = self.terms.keys().chain(other.terms.keys()).collect();
        keys.sort();
        keys.dedup();
        keys.into_iter()
            .map(|m| (self.coeff(m) - other.coeff(m)).norm())
            .fold(0.0, f64::max)
    }
}

impl fmt::Display for NumPoly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut first = true;
        for (m, c) in self.terms.iter().rev() {
            if !first {
                write!(f, " + ")?;
            }
            first = false;
            write!(f, "({:.6}{:+.6}i)", c.re, c.im)?;
            for (v, &e) in self.vars.iter().zip(&m.0) {
                match e {
                    0 => {}
                    1 => write!(f, " * {v}")?,
                    _ => write!(f, " * {v}^{e}")?,
                }
            }
        }
        if first {
            write!(f, "0")?;
        }
        Ok(())
    }
}
