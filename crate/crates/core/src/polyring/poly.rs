use std::collections::BTreeMap;
use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use num_complex::Complex64;
use num_traits::{One, Zero};

use super::{GaussRational, Monomial, NumPoly, PolyError};

/// Sparse multivariate polynomial with Gaussian-rational coefficients.
///
/// Zero coefficients are never stored; every monomial has one exponent per
/// entry of `vars`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Poly {
    vars: Vec<String>,
    terms: BTreeMap<Monomial, GaussRational>,
}

/// The binary operations accepted by [`poly_arith`].
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ArithOp {
    Add,
    Sub,
    Mul,
}

/// Right operand of [`poly_arith`]: another polynomial or a scalar.
pub enum Operand<'a> {
    Poly(&'a Poly),
    Scalar(&'a GaussRational),
}

/// Ring operation on two polynomials after embedding both into the union of
/// their variable lists; a scalar operand is treated as a constant.
pub fn poly_arith(op: ArithOp, a: &Poly, b: Operand<'_>) -> Result<Poly, PolyError> {
    let b = match b {
        Operand::Poly(p) => p.clone(),
        Operand::Scalar(c) => Poly::constant(a.vars.clone(), c.clone())?,
    };
    let (a, b) = a.align(&b)?;
    Ok(match op {
        ArithOp::Add => a.add_same(&b),
        ArithOp::Sub => a.add_same(&b.neg_ref()),
        ArithOp::Mul => a.mul_same(&b),
    })
}

fn check_vars(vars: &[String]) -> Result<(), PolyError> {
    for (k, v) in vars.iter().enumerate() {
        if vars[..k].contains(v) {
            return Err(PolyError::DuplicateVariable(v.clone()));
        }
    }
    Ok(())
}

impl Poly {
    pub fn zero(vars: Vec<String>) -> Result<Self, PolyError> {
        check_vars(&vars)?;
        Ok(Poly {
            vars,
            terms: BTreeMap::new(),
        })
    }

    pub fn constant(vars: Vec<String>, c: GaussRational) -> Result<Self, PolyError> {
        let mut p = Poly::zero(vars)?;
        let one = Monomial::one(p.nvars());
        p.add_term(one, c);
        Ok(p)
    }

    pub fn var(vars: Vec<String>, name: &str) -> Result<Self, PolyError> {
        let mut p = Poly::zero(vars)?;
        let idx = p.var_index(name)?;
        p.add_term(Monomial::var(p.nvars(), idx), GaussRational::one());
        Ok(p)
    }

    /// Builds a polynomial from `(coefficient, exponents)` pairs; repeated
    /// monomials are summed.
    pub fn from_terms<I>(vars: Vec<String>, terms: I) -> Result<Self, PolyError>
    where
        I: IntoIterator<Item = (GaussRational, Vec<u32>)>,
    {
        let mut p = Poly::zero(vars)?;
        for (c, exps) in terms {
            if exps.len() != p.nvars() {
                return Err(PolyError::ArityMismatch {
                    expected: p.nvars(),
                    got: exps.len(),
                });
            }
            p.add_term(Monomial(exps), c);
        }
        Ok(p)
    }

    /// Convenience constructor for small integer-coefficient test polynomials.
    pub fn from_int_terms(vars: &[&str], terms: &[(i64, &[u32])]) -> Self {
        Poly::from_terms(
            vars.iter().map(|s| s.to_string()).collect(),
            terms
                .iter()
                .map(|(c, e)| (GaussRational::from_integer(*c), e.to_vec())),
        )
        .expect("valid literal polynomial")
    }

    pub fn vars(&self) -> &[String] {
        &self.vars
    }

    pub fn nvars(&self) -> usize {
        self.vars.len()
    }

    pub fn terms(&self) -> impl DoubleEndedIterator<Item = (&Monomial, &GaussRational)> {
        self.terms.iter()
    }

    pub fn num_terms(&self) -> usize {
        self.terms.len()
    }

    pub fn coeff(&self, m: &Monomial) -> GaussRational {
        self.terms
            .get(m)
            .cloned()
            .unwrap_or_else(GaussRational::zero)
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn var_index(&self, name: &str) -> Result<usize, PolyError> {
        self.vars
            .iter()
            .position(|v| v == name)
            .ok_or_else(|| PolyError::UnknownVariable(name.to_string()))
    }

    /// Adds `c·m` in place, dropping the entry if it cancels.
    pub fn add_term(&mut self, m: Monomial, c: GaussRational) {
        debug_assert_eq!(m.len(), self.nvars());
        if c.is_zero() {
            return;
        }
        match self.terms.entry(m) {
            std::collections::btree_map::Entry::Vacant(v) => {
                v.insert(c);
            }
            std::collections::btree_map::Entry::Occupied(mut o) => {
                *o.get_mut() += &c;
                if o.get().is_zero() {
                    o.remove();
                }
            }
        }
    }

    /// Total degree; `None` for the zero polynomial.
    pub fn degree(&self) -> Option<u32> {
        self.terms.keys().map(Monomial::degree).max()
    }

    pub fn is_homogeneous(&self) -> bool {
        let mut degs = self.terms.keys().map(Monomial::degree);
        match degs.next() {
            None => true,
            Some(d) => degs.all(|e| e == d),
        }
    }

    /// Re-expresses the polynomial over `vars`, which must contain every
    /// variable of `self` that occurs with a nonzero exponent.
    pub fn embed(&self, vars: &[String]) -> Result<Poly, PolyError> {
        check_vars(vars)?;
        let map: Vec<Option<usize>> = self
            .vars
            .iter()
            .map(|v| vars.iter().position(|w| w == v))
            .collect();
        let mut out = Poly {
            vars: vars.to_vec(),
            terms: BTreeMap::new(),
        };
        for (m, c) in &self.terms {
            let mut e = vec![0; vars.len()];
            for (k, &x) in m.0.iter().enumerate() {
                if x == 0 {
                    continue;
                }
                match map[k] {
                    Some(j) => e[j] = x,
                    None => return Err(PolyError::UnknownVariable(self.vars[k].clone())),
                }
            }
            out.add_term(Monomial(e), c.clone());
        }
        Ok(out)
    }

    /// Embeds both operands into the union ring: `self`'s variables first,
    /// then `other`'s new ones in their order.
    pub fn align(&self, other: &Poly) -> Result<(Poly, Poly), PolyError> {
        if self.vars == other.vars {
            return Ok((self.clone(), other.clone()));
        }
        let mut union = self.vars.clone();
        for v in &other.vars {
            if !union.contains(v) {
                union.push(v.clone());
            }
        }
        Ok((self.embed(&union)?, other.embed(&union)?))
    }

    fn add_same(&self, other: &Poly) -> Poly {
        let mut out = self.clone();
        for (m, c) in &other.terms {
            out.add_term(m.clone(), c.clone());
        }
        out
    }

    fn neg_ref(&self) -> Poly {
        Poly {
            vars: self.vars.clone(),
            terms: self.terms.iter().map(|(m, c)| (m.clone(), -c)).collect(),
        }
    }

    fn mul_same(&self, other: &Poly) -> Poly {
        let mut out = Poly {
            vars: self.vars.clone(),
            terms: BTreeMap::new(),
        };
        for (ma, ca) in &self.terms {
            for (mb, cb) in &other.terms {
                out.add_term(ma.mul(mb), ca * cb);
            }
        }
        out
    }

    pub fn scale(&self, c: &GaussRational) -> Poly {
        let mut out = Poly {
            vars: self.vars.clone(),
            terms: BTreeMap::new(),
        };
        for (m, a) in &self.terms {
            out.add_term(m.clone(), a * c);
        }
        out
    }

    pub fn pow(&self, e: u32) -> Poly {
        let mut acc =
            Poly::constant(self.vars.clone(), GaussRational::one()).expect("vars checked");
        for _ in 0..e {
            acc = acc.mul_same(self);
        }
        acc
    }

    /// `z0^d · F(z'/z0)` over the ring `(homvar, vars…)`.
    pub fn homogenize(&self, d: u32, homvar: &str) -> Result<Poly, PolyError> {
        if let Some(deg) = self.degree() {
            if d < deg {
                return Err(PolyError::DegreeTooSmall {
                    requested: d,
                    degree: deg,
                });
            }
        }
        let mut vars = vec![homvar.to_string()];
        vars.extend(self.vars.iter().cloned());
        check_vars(&vars)?;
        let mut out = Poly {
            vars,
            terms: BTreeMap::new(),
        };
        for (m, c) in &self.terms {
            let mut e = Vec::with_capacity(m.len() + 1);
            e.push(d - m.degree());
            e.extend_from_slice(&m.0);
            out.add_term(Monomial(e), c.clone());
        }
        Ok(out)
    }

    /// Sets `homvar = 1` and removes it from the ring.
    pub fn dehomogenize(&self, homvar: &str) -> Result<Poly, PolyError> {
        if !self.is_homogeneous() {
            return Err(PolyError::NotHomogeneous);
        }
        let h = self.var_index(homvar)?;
        let vars: Vec<String> = self
            .vars
            .iter()
            .enumerate()
            .filter(|&(k, _)| k != h)
            .map(|(_, v)| v.clone())
            .collect();
        let mut out = Poly {
            vars,
            terms: BTreeMap::new(),
        };
        for (m, c) in &self.terms {
            let e: Vec<u32> =
                m.0.iter()
                    .enumerate()
                    .filter(|&(k, _)| k != h)
                    .map(|(_, &x)| x)
                    .collect();
            out.add_term(Monomial(e), c.clone());
        }
        Ok(out)
    }

    /// Formal derivative with respect to `var`.
    pub fn partial_derivative(&self, var: &str) -> Result<Poly, PolyError> {
        let k = self.var_index(var)?;
        Ok(self.partial_derivative_idx(k))
    }

    pub fn partial_derivative_idx(&self, k: usize) -> Poly {
        let mut out = Poly {
            vars: self.vars.clone(),
            terms: BTreeMap::new(),
        };
        for (m, c) in &self.terms {
            if m.0[k] == 0 {
                continue;
            }
            let mut e = m.0.clone();
            let mult = GaussRational::from_integer(e[k] as i64);
            e[k] -= 1;
            out.add_term(Monomial(e), c * &mult);
        }
        out
    }

    /// Replaces every variable `x` by `x^b`.
    pub fn substitute_power(&self, b: u32) -> Result<Poly, PolyError> {
        if b == 0 {
            return Err(PolyError::ZeroPower);
        }
        Ok(Poly {
            vars: self.vars.clone(),
            terms: self
                .terms
                .iter()
                .map(|(m, c)| (Monomial(m.0.iter().map(|e| e * b).collect()), c.clone()))
                .collect(),
        })
    }

    /// Exact evaluation at a Gaussian-rational point.
    pub fn evaluate_exact(&self, point: &[GaussRational]) -> Result<GaussRational, PolyError> {
        if point.len() != self.nvars() {
            return Err(PolyError::ArityMismatch {
                expected: self.nvars(),
                got: point.len(),
            });
        }
        let mut acc = GaussRational::zero();
        for (m, c) in &self.terms {
            let mut t = c.clone();
            for (x, &e) in point.iter().zip(&m.0) {
                if e > 0 {
                    t *= &x.pow(e);
                }
            }
            acc += &t;
        }
        Ok(acc)
    }

    /// Floating evaluation at a complex point.
    pub fn evaluate(&self, point: &[Complex64]) -> Result<Complex64, PolyError> {
        if point.len() != self.nvars() {
            return Err(PolyError::ArityMismatch {
                expected: self.nvars(),
                got: point.len(),
            });
        }
        Ok(self
            .terms
            .iter()
            .map(|(m, c)| {
                m.0.iter()
                    .zip(point)
                    .fold(c.to_complex64(), |t, (&e, x)| t * x.powu(e))
            })
            .sum())
    }

    /// Substitutes polynomials (over a common ring) for every variable.
    pub fn compose(&self, images: &[Poly]) -> Result<Poly, PolyError> {
        if images.len() != self.nvars() {
            return Err(PolyError::ArityMismatch {
                expected: self.nvars(),
                got: images.len(),
            });
        }
        let ring = images.first().map(|p| p.vars.clone()).unwrap_or_default();
        let images: Vec<Poly> = images
            .iter()
            .map(|p| p.embed(&ring))
            .collect::<Result<_, _>>()?;
        let mut out = Poly::zero(ring.clone())?;
        for (m, c) in &self.terms {
            let mut t = Poly::constant(ring.clone(), c.clone())?;
            for (img, &e) in images.iter().zip(&m.0) {
                if e > 0 {
                    t = t.mul_same(&img.pow(e));
                }
            }
            out = out.add_same(&t);
        }
        Ok(out)
    }

    pub fn to_num(&self) -> NumPoly {
        NumPoly::from_terms(
            self.vars.clone(),
            self.terms
                .iter()
                .map(|(m, c)| (m.clone(), c.to_complex64())),
        )
    }
}

impl Add for &Poly {
    type Output = Poly;
    fn add(self, rhs: &Poly) -> Poly {
        poly_arith(ArithOp::Add, self, Operand::Poly(rhs)).expect("aligned rings")
    }
}

impl Sub for &Poly {
    type Output = Poly;
    fn sub(self, rhs: &Poly) -> Poly {
        poly_arith(ArithOp::Sub, self, Operand::Poly(rhs)).expect("aligned rings")
    }
}

impl Mul for &Poly {
    type Output = Poly;
    fn mul(self, rhs: &Poly) -> Poly {
        poly_arith(ArithOp::Mul, self, Operand::Poly(rhs)).expect("aligned rings")
    }
}

impl Neg for &Poly {
    type Output = Poly;
    fn neg(self) -> Poly {
        self.neg_ref()
    }
}

/// Signed sum of `c * x1^e1 …` terms, highest graded-lex monomial first.
impl fmt::Display for Poly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return write!(f, "0");
        }
        for (k, (m, c)) in self.terms.iter().rev().enumerate() {
            let text = c.to_string();
            let complex = !c.re.is_zero() && !c.im.is_zero();
            let (sign, body) = match text.strip_prefix('-') {
                Some(rest) if !complex => ("-", rest.to_string()),
                _ => ("+", text),
            };
            let body = if complex { format!("({body})") } else { body };
            if k == 0 {
                if sign == "-" {
                    write!(f, "-")?;
                }
            } else {
                write!(f, " {sign} ")?;
            }
            write!(f, "{body}")?;
            for (v, &e) in self.vars.iter().zip(&m.0) {
                match e {
                    0 => {}
                    1 => write!(f, " * {v}")?,
                    _ => write!(f, " * {v}^{e}")?,
                }
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p(vars: &[&str], terms: &[(i64, &[u32])]) -> Poly {
        Poly::from_int_terms(vars, terms)
    }

    #[test]
    fn difference_of_squares() {
        let a = p(&["x"], &[(1, &[1]), (1, &[0])]);
        let b = p(&["x"], &[(1, &[1]), (-1, &[0])]);
        assert_eq!(&a * &b, p(&["x"], &[(1, &[2]), (-1, &[0])]));
    }

    #[test]
    fn alignment_by_name() {
        let x = p(&["x"], &[(1, &[1])]);
        let y = p(&["y"], &[(1, &[1])]);
        let s = &x + &y;
        assert_eq!(s.vars(), &["x".to_string(), "y".to_string()]);
        assert_eq!(s, p(&["x", "y"], &[(1, &[1, 0]), (1, &[0, 1])]));
    }

    #[test]
    fn homogenize_examples() {
        // x² + y − 1, d = 2 → z1² + z2·z0 − z0² with z0 = h
        let f = p(&["x", "y"], &[(1, &[2, 0]), (1, &[0, 1]), (-1, &[0, 0])]);
        let h = f.homogenize(2, "h").unwrap();
        assert_eq!(
            h,
            p(
                &["h", "x", "y"],
                &[(1, &[0, 2, 0]), (1, &[1, 0, 1]), (-1, &[2, 0, 0])]
            )
        );
        assert_eq!(h.dehomogenize("h").unwrap(), f);

        let one = p(&["x"], &[(1, &[0])]);
        let h3 = one.homogenize(3, "h").unwrap();
        assert_eq!(h3, p(&["h", "x"], &[(1, &[3, 0])]));
        assert_eq!(h3.dehomogenize("h").unwrap(), one);

        let x = p(&["x"], &[(1, &[1])]);
        assert_eq!(
            x.homogenize(2, "h").unwrap(),
            p(&["h", "x"], &[(1, &[1, 1])])
        );
        assert!(matches!(
            x.homogenize(0, "h"),
            Err(PolyError::DegreeTooSmall { .. })
        ));
    }

    #[test]
    fn dehomogenize_rejects_inhomogeneous() {
        let f = p(&["h", "x"], &[(1, &[1, 0]), (1, &[0, 2])]);
        assert_eq!(f.dehomogenize("h"), Err(PolyError::NotHomogeneous));
    }

    #[test]
    fn evaluation() {
        let f = p(&["x", "y"], &[(1, &[2, 0]), (1, &[0, 1])]);
        let v = f.evaluate_exact(&[2.into(), 3.into()]).unwrap();
        assert_eq!(v, GaussRational::from_integer(7));
        let c = p(&["x", "y"], &[(5, &[0, 0]), (1, &[1, 1])]);
        assert_eq!(c.evaluate_exact(&[0.into(), 0.into()]).unwrap(), 5.into());
        assert!(f.evaluate(&[Complex64::new(1.0, 0.0)]).is_err());
    }

    #[test]
    fn derivatives() {
        let f = p(&["x", "y"], &[(1, &[2, 1])]);
        assert_eq!(
            f.partial_derivative("x").unwrap(),
            p(&["x", "y"], &[(2, &[1, 1])])
        );
        let c = p(&["x"], &[(7, &[0])]);
        assert!(c.partial_derivative("x").unwrap().is_zero());
        assert!(f.partial_derivative("q").is_err());
    }

    #[test]
    fn power_substitution() {
        let f = p(&["x", "y"], &[(1, &[2, 1]), (3, &[0, 0])]);
        assert_eq!(f.substitute_power(1).unwrap(), f);
        assert_eq!(
            f.substitute_power(3).unwrap(),
            p(&["x", "y"], &[(1, &[6, 3]), (3, &[0, 0])])
        );
        assert_eq!(f.substitute_power(0), Err(PolyError::ZeroPower));
    }

    #[test]
    fn display_is_graded_lex_descending() {
        let f = p(&["x", "y"], &[(1, &[2, 0]), (1, &[0, 1]), (-1, &[0, 0])]);
        assert_eq!(f.to_string(), "1 * x^2 + 1 * y - 1");
        let g =
            Poly::from_terms(vec!["x".into()], [("1/2-1/3 i".parse().unwrap(), vec![1])]).unwrap();
        assert_eq!(g.to_string(), "(1/2-1/3 i) * x");
    }

    #[test]
    fn duplicate_variables_rejected() {
        assert!(Poly::zero(vec!["x".into(), "x".into()]).is_err());
        let x = p(&["x"], &[(1, &[1])]);
        assert!(x.homogenize(1, "x").is_err());
    }
}
