//! Polynomials in the target point `z` with floating coefficients.
//!
//! Exponent vectors are packed into a `u64`, eight bits per coordinate, so
//! at most eight coordinates and exponents up to 255.

use num_complex::Complex64;

use crate::polyring::{Monomial, NumPoly};

pub const MAX_Z_VARS: usize = 8;

pub fn pack(exps: &[u32]) -> u64 {
    debug_assert!(exps.len() <= MAX_Z_VARS);
    exps.iter().enumerate().fold(0u64, |acc, (k, &e)| {
        debug_assert!(e < 256);
        acc | ((e as u64) << (8 * k))
    })
}

pub fn unpack(key: u64, nz: usize) -> Vec<u32> {
    (0..nz).map(|k| ((key >> (8 * k)) & 0xff) as u32).collect()
}

fn key_degree(key: u64) -> u32 {
    key.to_le_bytes().iter().map(|&b| b as u32).sum()
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct ZPoly {
    /// Sorted by key, no repeated keys, no zero coefficients.
    terms: Vec<(u64, Complex64)>,
}

impl ZPoly {
    pub fn constant(c: Complex64) -> Self {
        ZPoly::monomial(0, c)
    }

    pub fn monomial(key: u64, c: Complex64) -> Self {
        if c == Complex64::new(0.0, 0.0) {
            ZPoly::default()
        } else {
            ZPoly {
                terms: vec![(key, c)],
            }
        }
    }

    /// `Σ_k c_k z_k`.
    pub fn linear(coeffs: &[Complex64]) -> Self {
        let mut v: Vec<(u64, Complex64)> = coeffs
            .iter()
            .enumerate()
            .map(|(k, c)| (1u64 << (8 * k), *c))
            .collect();
        v.sort_by_key(|t| t.0);
        ZPoly::normalize(v)
    }

    pub fn terms(&self) -> &[(u64, Complex64)] {
        &self.terms
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn coeff(&self, key: u64) -> Complex64 {
        match self.terms.binary_search_by_key(&key, |t| t.0) {
            Ok(i) => self.terms[i].1,
            Err(_) => Complex64::new(0.0, 0.0),
        }
    }

    /// Degrees of the terms present, lowest and highest.
    pub fn degree_range(&self) -> Option<(u32, u32)> {
        let degs = self.terms.iter().map(|t| key_degree(t.0));
        let lo = degs.clone().min()?;
        Some((lo, degs.max()?))
    }

    fn normalize(mut v: Vec<(u64, Complex64)>) -> Self {
        v.sort_by_key(|t| t.0);
        let mut out: Vec<(u64, Complex64)> = Vec::with_capacity(v.len());
        for (k, c) in v {
            match out.last_mut() {
                Some(last) if last.0 == k => last.1 += c,
                _ => out.push((k, c)),
            }
        }
        out.retain(|t| t.1 != Complex64::new(0.0, 0.0));
        ZPoly { terms: out }
    }

    pub fn add(&self, o: &ZPoly) -> ZPoly {
        let mut out = Vec::with_capacity(self.terms.len() + o.terms.len());
        let (mut i, mut j) = (0, 0);
        while i < self.terms.len() || j < o.terms.len() {
            let take_left =
                j >= o.terms.len() || (i < self.terms.len() && self.terms[i].0 < o.terms[j].0);
            let take_right =
                i >= self.terms.len() || (j < o.terms.len() && o.terms[j].0 < self.terms[i].0);
            if take_left {
                out.push(self.terms[i]);
                i += 1;
            } else if take_right {
                out.push(o.terms[j]);
                j += 1;
            } else {
                let c = self.terms[i].1 + o.terms[j].1;
                if c != Complex64::new(0.0, 0.0) {
                    out.push((self.terms[i].0, c));
                }
                i += 1;
                j += 1;
            }
        }
        ZPoly { terms: out }
    }

    pub fn mul(&self, o: &ZPoly) -> ZPoly {
        if self.is_zero() || o.is_zero() {
            return ZPoly::default();
        }
        if self.terms.len() == 1 && self.terms[0].0 == 0 {
            return o.scale(self.terms[0].1);
        }
        if o.terms.len() == 1 && o.terms[0].0 == 0 {
            return self.scale(o.terms[0].1);
        }
        let mut v = Vec::with_capacity(self.terms.len() * o.terms.len());
        for (ka, ca) in &self.terms {
            for (kb, cb) in &o.terms {
                v.push((ka + kb, ca * cb));
            }
        }
        ZPoly::normalize(v)
    }

    pub fn scale(&self, c: Complex64) -> ZPoly {
        if c == Complex64::new(0.0, 0.0) {
            return ZPoly::default();
        }
        ZPoly {
            terms: self.terms.iter().map(|(k, v)| (*k, v * c)).collect(),
        }
    }

    pub fn evaluate(&self, z: &[Complex64]) -> Complex64 {
        self.terms
            .iter()
            .map(|(k, c)| {
                let e = unpack(*k, z.len());
                c * e
                    .iter()
                    .zip(z)
                    .map(|(&ei, zi)| zi.powu(ei))
                    .product::<Complex64>()
            })
            .sum()
    }

    pub fn to_numpoly(&self, vars: &[String]) -> NumPoly {
        NumPoly::from_terms(
            vars.to_vec(),
            self.terms
                .iter()
                .map(|(k, c)| (Monomial(unpack(*k, vars.len())), *c)),
        )
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64) -> Complex64 {
        Complex64::new(re, 0.0)
    }

    #[test]
    fn pack_round_trip() {
        let e = vec![3, 0, 7, 1];
        assert_eq!(unpack(pack(&e), 4), e);
        assert_eq!(key_degree(pack(&e)), 11);
    }

    #[test]
    fn arithmetic() {
        let x = ZPoly::linear(&[c(1.0), c(0.0)]);
        let y = ZPoly::linear(&[c(0.0), c(1.0)]);
        let s = x.add(&y);
        let sq = s.mul(&s);
        let z = [Complex64::new(0.5, 1.0), Complex64::new(-2.0, 0.25)];
        let expect = (z[0] + z[1]) * (z[0] + z[1]);
        assert!((sq.evaluate(&z) - expect).norm() < 1e-14);
        assert_eq!(sq.coeff(pack(&[1, 1])), c(2.0));
        assert_eq!(sq.degree_range(), Some((2, 2)));
        assert!(s.add(&s.scale(c(-1.0))).is_zero());
    }
}
