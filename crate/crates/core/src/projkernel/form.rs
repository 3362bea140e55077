//! Exterior algebra on `C^{n+1}` tensored with the Koszul algebra of `E`.
//!
//! Generators, all odd, are numbered `dζ₀..dζ_n`, `dζ̄₀..dζ̄_n`, `e₁..e_m`
//! and a basis element (blade) is the bitmask of the generators it contains,
//! read in increasing bit order. With this normal order the `e_j` of the
//! Koszul complex anticommute with differential forms, which is exactly the
//! sign rule of the superbundle calculus.

use std::collections::BTreeMap;

use num_complex::Complex64;

use super::zpoly::ZPoly;
use super::KernelError;

/// Coefficient ring of a [`FormValue`]: complex numbers, or polynomials in
/// `z` when the target point is kept symbolic.
pub trait Coeff: Clone + std::fmt::Debug + Send + Sync {
    fn zero() -> Self;
    fn is_zero(&self) -> bool;
    fn from_scalar(c: Complex64) -> Self;
    fn add_assign(&mut self, o: &Self);
    fn mul(&self, o: &Self) -> Self;
    fn scale(&self, c: Complex64) -> Self;
}

impl Coeff for Complex64 {
    fn zero() -> Self {
        Complex64::new(0.0, 0.0)
    }
    fn is_zero(&self) -> bool {
        self.re == 0.0 && self.im == 0.0
    }
    fn from_scalar(c: Complex64) -> Self {
        c
    }
    fn add_assign(&mut self, o: &Self) {
        *self += o;
    }
    fn mul(&self, o: &Self) -> Self {
        self * o
    }
    fn scale(&self, c: Complex64) -> Self {
        self * c
    }
}

impl Coeff for ZPoly {
    fn zero() -> Self {
        ZPoly::default()
    }
    fn is_zero(&self) -> bool {
        ZPoly::is_zero(self)
    }
    fn from_scalar(c: Complex64) -> Self {
        ZPoly::constant(c)
    }
    fn add_assign(&mut self, o: &Self) {
        *self = self.add(o);
    }
    fn mul(&self, o: &Self) -> Self {
        ZPoly::mul(self, o)
    }
    fn scale(&self, c: Complex64) -> Self {
        ZPoly::scale(self, c)
    }
}

/// Layout of the generators, and the chart pullback if any.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct FormSpace {
    /// Projective dimension; there are `n + 1` coordinates.
    pub n: usize,
    /// Number of Koszul generators `e_j`.
    pub m: usize,
    /// Generators set to zero by the pullback to a chart `ζ_c = 1`.
    dropped: u32,
    chart: Option<usize>,
}

impl FormSpace {
    pub fn new(n: usize, m: usize) -> Result<Self, KernelError> {
        if 2 * (n + 1) + m > 32 {
            return Err(KernelError::TooLarge { n, m });
        }
        Ok(FormSpace {
            n,
            m,
            dropped: 0,
            chart: None,
        })
    }

    /// Same layout pulled back to the chart `ζ_c = 1`.
    pub fn with_chart(self, c: usize) -> Self {
        let mut s = self;
        s.chart = Some(c);
        s.dropped = s.dz(c) | s.dzbar(c);
        s
    }

    pub fn chart(&self) -> Option<usize> {
        self.chart
    }

    pub fn dz(&self, k: usize) -> u32 {
        1 << k
    }

    pub fn dzbar(&self, k: usize) -> u32 {
        1 << (self.n + 1 + k)
    }

    /// Bit of `e_j`, with `j` counted from 0.
    pub fn e(&self, j: usize) -> u32 {
        1 << (2 * (self.n + 1) + j)
    }

    fn dz_mask(&self) -> u32 {
        (1 << (self.n + 1)) - 1
    }

    fn dzbar_mask(&self) -> u32 {
        self.dz_mask() << (self.n + 1)
    }

    fn e_mask(&self) -> u32 {
        (((1u64 << self.m) - 1) as u32) << (2 * (self.n + 1))
    }

    /// `(p, q)` of a blade.
    pub fn bidegree(&self, blade: u32) -> (usize, usize) {
        (
            (blade & self.dz_mask()).count_ones() as usize,
            (blade & self.dzbar_mask()).count_ones() as usize,
        )
    }

    /// Generator multi-index of a blade, as a bitmask over `0..m`.
    pub fn e_index(&self, blade: u32) -> u32 {
        (blade & self.e_mask()) >> (2 * (self.n + 1))
    }

    /// `dζ_I ∧ dζ̄_I` over the chart coordinates, the blade integrated over `ℙⁿ`.
    pub fn top_blade(&self) -> Option<u32> {
        let c = self.chart?;
        Some(
            (0..=self.n)
                .filter(|&k| k != c)
                .map(|k| self.dz(k) | self.dzbar(k))
                .fold(0, |a, b| a | b),
        )
    }

    /// Blade as a wedge of `dz<k>`, `dzb<k>`, `e<j>` in storage order, `1` for the empty blade.
    pub fn label(&self, blade: u32) -> String {
        let w = self.n + 1;
        let parts: Vec<String> = (0..32)
            .filter(|b| blade & (1 << b) != 0)
            .map(|b| match b {
                b if b < w => format!("dz{b}"),
                b if b < 2 * w => format!("dzb{}", b - w),
                b => format!("e{}", b - 2 * w),
            })
            .collect();
        if parts.is_empty() {
            "1".into()
        } else {
            parts.join("^")
        }
    }

    fn allows(&self, blade: u32) -> bool {
        blade & self.dropped == 0
    }
}

/// Sign of moving the generators of `b` past those of `a`: `a·b = ± (a|b)`.
pub(crate) fn reorder_sign(a: u32, b: u32) -> bool {
    let mut count = 0;
    let mut rest = b;
    while rest != 0 {
        let y = rest.trailing_zeros();
        count += (a >> y >> 1).count_ones();
        rest &= rest - 1;
    }
    count % 2 == 1
}

/// Element of the (pulled back) graded algebra with coefficients in `C`.
#[derive(Clone, Debug, PartialEq)]
pub struct FormValue<C> {
    space: FormSpace,
    terms: BTreeMap<u32, C>,
}

impl<C: Coeff> FormValue<C> {
    pub fn zero(space: FormSpace) -> Self {
        FormValue {
            space,
            terms: BTreeMap::new(),
        }
    }

    /// `c` times a basis blade (zero when the chart kills it).
    pub fn basis(space: FormSpace, blade: u32, c: C) -> Self {
        let mut f = FormValue::zero(space);
        f.add_term(blade, c);
        f
    }

    pub fn scalar(space: FormSpace, c: C) -> Self {
        FormValue::basis(space, 0, c)
    }

    pub fn space(&self) -> FormSpace {
        self.space
    }

    pub fn terms(&self) -> impl Iterator<Item = (u32, &C)> {
        self.terms.iter().map(|(b, c)| (*b, c))
    }

    pub fn coeff(&self, blade: u32) -> Option<&C> {
        self.terms.get(&blade)
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn add_term(&mut self, blade: u32, c: C) {
        if !self.space.allows(blade) || c.is_zero() {
            return;
        }
        match self.terms.get_mut(&blade) {
            Some(v) => v.add_assign(&c),
            None => {
                self.terms.insert(blade, c);
            }
        }
    }

    pub fn add_assign(&mut self, o: &FormValue<C>) {
        for (b, c) in &o.terms {
            self.add_term(*b, c.clone());
        }
    }

    pub fn scale(&self, c: Complex64) -> Self {
        FormValue {
            space: self.space,
            terms: self.terms.iter().map(|(b, v)| (*b, v.scale(c))).collect(),
        }
    }

    pub fn mul_coeff(&self, c: &C) -> Self {
        FormValue {
            space: self.space,
            terms: self.terms.iter().map(|(b, v)| (*b, v.mul(c))).collect(),
        }
    }

    /// Components satisfying a predicate on the blade.
    pub fn filter(&self, keep: impl Fn(u32) -> bool) -> Self {
        FormValue {
            space: self.space,
            terms: self
                .terms
                .iter()
                .filter(|(b, _)| keep(**b))
                .map(|(b, c)| (*b, c.clone()))
                .collect(),
        }
    }

    /// Component of form bidegree `(p, q)`.
    pub fn component(&self, p: usize, q: usize) -> Self {
        let s = self.space;
        self.filter(|b| s.bidegree(b) == (p, q))
    }

    /// Part of Koszul degree `k`.
    pub fn e_degree(&self, k: usize) -> Self {
        let s = self.space;
        self.filter(|b| s.e_index(b).count_ones() as usize == k)
    }

    pub fn wedge(&self, o: &FormValue<C>) -> Result<Self, KernelError> {
        if self.space != o.space {
            return Err(KernelError::SpaceMismatch);
        }
        Ok(wedge_with(self, o, |a, b| a.mul(b)))
    }

    /// Wedge with a form that has plain complex coefficients.
    pub fn wedge_num(&self, o: &FormValue<Complex64>) -> Result<Self, KernelError> {
        if self.space != o.space {
            return Err(KernelError::SpaceMismatch);
        }
        Ok(wedge_with(self, o, |a, b| a.scale(*b)))
    }

    /// Interior product with `e_j^*` from the left.
    pub fn contract_e(&self, j: usize) -> Self {
        self.contract_bit(self.space.e(j), |_| Complex64::new(1.0, 0.0))
    }

    /// Interior product with the vector field `Σ_k v_k ∂/∂ζ_k`.
    pub fn contract_dz(&self, v: &[Complex64]) -> Self {
        let mut out = FormValue::zero(self.space);
        for (k, vk) in v.iter().enumerate() {
            out.add_assign(&self.contract_bit(self.space.dz(k), |_| *vk));
        }
        out
    }

    fn contract_bit(&self, bit: u32, factor: impl Fn(u32) -> Complex64) -> Self {
        let mut out = FormValue::zero(self.space);
        for (b, c) in &self.terms {
            if b & bit == 0 {
                continue;
            }
            let before = (b & (bit - 1)).count_ones();
            let f = factor(*b);
            let f = if before % 2 == 1 { -f } else { f };
            out.add_term(b & !bit, c.scale(f));
        }
        out
    }

    pub fn map<D: Coeff>(&self, f: impl Fn(&C) -> D) -> FormValue<D> {
        let mut out = FormValue::zero(self.space);
        for (b, c) in &self.terms {
            out.add_term(*b, f(c));
        }
        out
    }
}

impl FormValue<Complex64> {
    pub fn lift<C: Coeff>(&self) -> FormValue<C> {
        self.map(|c| C::from_scalar(*c))
    }

    /// Largest coefficient modulus.
    pub fn max_norm(&self) -> f64 {
        self.terms.values().map(|c| c.norm()).fold(0.0, f64::max)
    }

    /// Largest coefficient difference against another form.
    pub fn distance(&self, o: &FormValue<Complex64>) -> f64 {
        let mut d = 0.0f64;
        for (b, c) in &self.terms {
            d = d.max((c - o.terms.get(b).copied().unwrap_or_default()).norm());
        }
        for (b, c) in &o.terms {
            if !self.terms.contains_key(b) {
                d = d.max(c.norm());
            }
        }
        d
    }
}

fn wedge_with<A, B, C: Coeff>(
    a: &FormValue<A>,
    b: &FormValue<B>,
    mul: impl Fn(&A, &B) -> C,
) -> FormValue<C> {
    let mut out = FormValue::zero(a.space);
    for (ba, ca) in &a.terms {
        for (bb, cb) in &b.terms {
            if ba & bb != 0 {
                continue;
            }
            let prod = mul(ca, cb);
            let prod = if reorder_sign(*ba, *bb) {
                prod.scale(Complex64::new(-1.0, 0.0))
            } else {
                prod
            };
            out.add_term(ba | bb, prod);
        }
    }
    out
}

/// One-form `Σ_k c_k dζ_k` (`bar = false`) or `Σ_k c_k dζ̄_k`.
pub fn one_form(space: FormSpace, coeffs: &[Complex64], bar: bool) -> FormValue<Complex64> {
    let mut f = FormValue::zero(space);
    for (k, c) in coeffs.iter().enumerate() {
        f.add_term(if bar { space.dzbar(k) } else { space.dz(k) }, *c);
    }
    f
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn blade_labels() {
        let s = FormSpace::new(1, 2).unwrap();
        assert_eq!(s.label(0), "1");
        assert_eq!(s.label(s.dz(1) | s.dzbar(0) | s.e(1)), "dz1^dzb0^e1");
        assert_eq!(
            s.with_chart(0).top_blade().map(|b| s.label(b)),
            Some("dz1^dzb1".to_string())
        );
    }

    fn random_form(space: FormSpace, rng: &mut ChaCha8Rng, nterms: usize) -> FormValue<Complex64> {
        let nbits = 2 * (space.n + 1) + space.m;
        let mut f = FormValue::zero(space);
        for _ in 0..nterms {
            let blade = rng.random_range(0..(1u32 << nbits));
            f.add_term(
                blade,
                c(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)),
            );
        }
        f
    }

    fn homogeneous_part(f: &FormValue<Complex64>, odd: bool) -> FormValue<Complex64> {
        f.filter(|b| (b.count_ones() % 2 == 1) == odd)
    }

    #[test]
    fn basic_antisymmetry() {
        let s = FormSpace::new(1, 0).unwrap();
        let a = FormValue::basis(s, s.dz(0), c(1.0, 0.0));
        let b = FormValue::basis(s, s.dz(1), c(1.0, 0.0));
        let ab = a.wedge(&b).unwrap();
        let ba = b.wedge(&a).unwrap();
        assert_eq!(ab.scale(c(-1.0, 0.0)), ba);
        assert!(a.wedge(&a).unwrap().is_zero());
    }

    #[test]
    fn graded_commutativity_and_associativity() {
        let s = FormSpace::new(2, 2).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..50 {
            let a = random_form(s, &mut rng, 6);
            let b = random_form(s, &mut rng, 6);
            let d = random_form(s, &mut rng, 6);
            for (pa, pb) in [(false, false), (false, true), (true, false), (true, true)] {
                let ha = homogeneous_part(&a, pa);
                let hb = homogeneous_part(&b, pb);
                let sign = if pa && pb { -1.0 } else { 1.0 };
                let lhs = ha.wedge(&hb).unwrap();
                let rhs = hb.wedge(&ha).unwrap().scale(c(sign, 0.0));
                assert!(lhs.distance(&rhs) < 1e-12);
            }
            let odd = homogeneous_part(&a, true);
            assert!(odd.wedge(&odd).unwrap().max_norm() < 1e-12);
            let l = a.wedge(&b).unwrap().wedge(&d).unwrap();
            let r = a.wedge(&b.wedge(&d).unwrap()).unwrap();
            assert!(l.distance(&r) < 1e-12);
        }
    }

    #[test]
    fn contraction_is_odd_derivation() {
        let s = FormSpace::new(1, 2).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let v = [c(0.3, -1.2), c(2.0, 0.5)];
        for _ in 0..20 {
            let a = homogeneous_part(&random_form(s, &mut rng, 5), true);
            let b = random_form(s, &mut rng, 5);
            let lhs = a.wedge(&b).unwrap().contract_dz(&v);
            let rhs = a.contract_dz(&v).wedge(&b).unwrap();
            let rhs2 = a.wedge(&b.contract_dz(&v)).unwrap().scale(c(-1.0, 0.0));
            let mut sum = rhs.clone();
            sum.add_assign(&rhs2);
            assert!(lhs.distance(&sum) < 1e-12);
            // the same rule for e-contractions
            let lhs = a.wedge(&b).unwrap().contract_e(1);
            let mut sum = a.contract_e(1).wedge(&b).unwrap();
            sum.add_assign(&a.wedge(&b.contract_e(1)).unwrap().scale(c(-1.0, 0.0)));
            assert!(lhs.distance(&sum) < 1e-12);
        }
    }

    #[test]
    fn chart_drops_generators() {
        let s = FormSpace::new(1, 1).unwrap().with_chart(0);
        let f = FormValue::basis(s, s.dz(0), c(1.0, 0.0));
        assert!(f.is_zero());
        assert_eq!(s.top_blade(), Some(s.dz(1) | s.dzbar(1)));
        assert_eq!(s.bidegree(s.dz(1) | s.dzbar(1) | s.e(0)), (1, 1));
        assert_eq!(s.e_index(s.e(0) | s.dz(1)), 1);
    }

    #[test]
    fn space_mismatch() {
        let a = FormValue::<Complex64>::zero(FormSpace::new(1, 0).unwrap());
        let b = FormValue::<Complex64>::zero(FormSpace::new(2, 0).unwrap());
        assert!(matches!(a.wedge(&b), Err(KernelError::SpaceMismatch)));
    }
}
