//! Weighted Hefer forms and the division integrand.
//!
//! Everything that carries powers of the weight `α` is kept as a formal
//! series `Σ_N X_N·A^N` in a symbol `A`, with `N` allowed to be negative while
//! a product is being assembled (`N` contains `α^{−d_j}`). Only the final
//! product is resolved, by expanding `A^N = Σ_s C(N, s) α_{0,0}^{N−s} α_{1,1}^s`;
//! a negative `N` at that point is a hard error.
//!
//! With `δ_ĥ = −Σ_j A^{−d_j} τ*h_j ∧ ι_{e_j}` the operator
//! `T = A^κ exp(δ_ĥ)` satisfies `[∇_η, T] = A^κ (δ_f − δ_{f̃(z)}) exp(δ_ĥ)`,
//! where `f̃(z) = Σ_j A^{−d_j} f^j(z) e_j^*`. Applied to `u = Σ_k u_k` this
//! yields `α^κ = ∇_η[Tu]_0 + Σ_i f^i(z) A^{κ−d_i} ι_{e_i}[exp(δ_ĥ)u]_1`, so
//!
//! ```text
//! q_i(z) = Σ_k ∫ ( A^{κ−d_i} ι_{e_i} (δ_ĥ)^{k−1}/(k−1)! u_k )_{n,n} ψ.
//! ```
//!
//! With the cutoff `χ` the same computation for `χu` leaves the extra term
//! `∫ ((1−χ)α^κ + Σ_k A^κ (δ_ĥ)^k/k! (∂̄χ ∧ u_k))_{n,n} ψ`.

use std::collections::BTreeMap;

use num_complex::Complex64;

use super::form::{one_form, reorder_sign, Coeff, FormSpace, FormValue};
use super::kernels::{
    alpha00, alpha11, compile_hefer, cutoff, gamma_eval, power_table, sigma_data, wedge_num,
    CompiledPoly, HeferTerm, KernelPoint, KernelSystem, SymbolicZ, ZMode,
};
use super::zpoly::ZPoly;
use super::KernelError;
use crate::polyring::Poly;

/// Sign in `δ_ĥ = HEFER_SIGN · Σ_j A^{−d_j} τ*h_j ∧ ι_{e_j}`. It makes the
/// contraction `δ_η τ*h_j = f^j(z) − α^{d_j} f^j(ζ)` cancel against `δ_f`.
pub const HEFER_SIGN: f64 = -1.0;

/// Formal series in the weight symbol `A`.
#[derive(Clone, Debug)]
pub struct AlphaSeries<C> {
    space: FormSpace,
    terms: BTreeMap<i32, FormValue<C>>,
}

impl<C: Coeff> AlphaSeries<C> {
    pub fn zero(space: FormSpace) -> Self {
        AlphaSeries {
            space,
            terms: BTreeMap::new(),
        }
    }

    /// `form · A^exp`.
    pub fn single(form: FormValue<C>, exp: i32) -> Self {
        let mut s = AlphaSeries::zero(form.space());
        s.add_at(exp, &form);
        s
    }

    pub fn terms(&self) -> impl Iterator<Item = (i32, &FormValue<C>)> {
        self.terms.iter().map(|(e, f)| (*e, f))
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    fn add_at(&mut self, exp: i32, form: &FormValue<C>) {
        if form.is_zero() {
            return;
        }
        let slot = self
            .terms
            .entry(exp)
            .or_insert_with(|| FormValue::zero(self.space));
        slot.add_assign(form);
        if slot.is_zero() {
            self.terms.remove(&exp);
        }
    }

    pub fn add_assign(&mut self, o: &AlphaSeries<C>) {
        for (e, f) in &o.terms {
            self.add_at(*e, f);
        }
    }

    pub fn shift(&self, d: i32) -> Self {
        AlphaSeries {
            space: self.space,
            terms: self.terms.iter().map(|(e, f)| (e + d, f.clone())).collect(),
        }
    }

    pub fn scale(&self, c: Complex64) -> Self {
        AlphaSeries {
            space: self.space,
            terms: self.terms.iter().map(|(e, f)| (*e, f.scale(c))).collect(),
        }
    }

    pub fn wedge(&self, o: &AlphaSeries<C>) -> Result<Self, KernelError> {
        let mut out = AlphaSeries::zero(self.space);
        for (ea, fa) in &self.terms {
            for (eb, fb) in &o.terms {
                out.add_at(ea + eb, &fa.wedge(fb)?);
            }
        }
        Ok(out)
    }

    pub fn contract_e(&self, j: usize) -> Self {
        let mut out = AlphaSeries::zero(self.space);
        for (e, f) in &self.terms {
            out.add_at(*e, &f.contract_e(j));
        }
        out
    }

    /// Components whose generator multi-index contains `j`.
    pub fn with_e(&self, j: usize) -> Self {
        let bit = self.space.e(j);
        let mut out = AlphaSeries::zero(self.space);
        for (e, f) in &self.terms {
            out.add_at(*e, &f.filter(|b| b & bit != 0));
        }
        out
    }

    pub fn min_exponent(&self) -> Option<i32> {
        self.terms.keys().next().copied()
    }

    /// Expands every `A^N` into `α`'s components.
    pub fn resolve(&self, alpha: &AlphaPowers<C>) -> Result<FormValue<C>, KernelError> {
        let mut out = FormValue::zero(self.space);
        for (&e, f) in &self.terms {
            if e < 0 {
                return Err(KernelError::NegativeAlphaPower(e));
            }
            let n = e as usize;
            for s in 0..=n.min(alpha.a11.len() - 1) {
                let part = f.wedge_num(&alpha.a11[s])?;
                if part.is_zero() {
                    continue;
                }
                let w = alpha
                    .a00_pow(n - s)
                    .scale(Complex64::new(binomial(n, s), 0.0));
                out.add_assign(&part.mul_coeff(&w));
            }
        }
        Ok(out)
    }

    /// Coefficient of the chart's top blade after [`resolve`](Self::resolve),
    /// computed without forming the lower components.
    pub fn resolve_top(&self, alpha: &AlphaPowers<C>) -> Result<C, KernelError> {
        let top = self.space.top_blade().ok_or(KernelError::NoChart)?;
        let n = self.space.n;
        let mut acc = C::zero();
        for (&e, f) in &self.terms {
            if e < 0 {
                return Err(KernelError::NegativeAlphaPower(e));
            }
            let big_n = e as usize;
            for (b, c) in f.terms() {
                if b & !top != 0 {
                    continue;
                }
                let (p, q) = self.space.bidegree(b);
                if p != q || n - p > big_n {
                    continue;
                }
                let s = n - p;
                let comp = top & !b;
                let Some(a) = alpha.a11.get(s).and_then(|p| p.coeff(comp)) else {
                    continue;
                };
                let mut factor = a * binomial(big_n, s);
                if reorder_sign(b, comp) {
                    factor = -factor;
                }
                acc.add_assign(&alpha.a00_pow(big_n - s).mul(c).scale(factor));
            }
        }
        Ok(acc)
    }
}

fn binomial(n: usize, k: usize) -> f64 {
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

fn factorial(k: usize) -> f64 {
    (1..=k).map(|v| v as f64).product()
}

/// `α_{0,0}` and the powers `α_{1,1}^s`, `s ≤ n + 1`, at one point.
#[derive(Clone, Debug)]
pub struct AlphaPowers<C> {
    a00: C,
    pows00: Vec<C>,
    a11: Vec<FormValue<Complex64>>,
}

impl<C: Coeff> AlphaPowers<C> {
    /// Precomputes `α_{0,0}^k` for `k ≤ max_exp`; higher powers are formed on demand.
    pub fn new<Z: ZMode<C = C>>(pt: &KernelPoint, max_exp: u32) -> Result<Self, KernelError> {
        let a11 = alpha11(pt);
        let s = pt.space();
        let mut pows = vec![FormValue::scalar(s, Complex64::new(1.0, 0.0))];
        for _ in 0..=pt.n() {
            let next = wedge_num(pows.last().expect("nonempty"), &a11);
            if next.is_zero() {
                break;
            }
            pows.push(next);
        }
        let a00 = alpha00::<Z>(pt)?;
        let mut pows00 = vec![C::from_scalar(Complex64::new(1.0, 0.0))];
        for i in 0..max_exp as usize {
            pows00.push(pows00[i].mul(&a00));
        }
        Ok(AlphaPowers {
            a00,
            pows00,
            a11: pows,
        })
    }

    fn a00_pow(&self, k: usize) -> C {
        if k < self.pows00.len() {
            self.pows00[k].clone()
        } else {
            (0..k).fold(C::from_scalar(Complex64::new(1.0, 0.0)), |acc, _| {
                acc.mul(&self.a00)
            })
        }
    }

    /// `α_{1,1}^s`.
    pub fn a11_power(&self, s: usize) -> Option<&FormValue<Complex64>> {
        self.a11.get(s)
    }
}

/// Substitutes `w ↦ αζ` and `dw_k ↦ γ_k` in the precompiled terms of one
/// coefficient, multiplied by `scale`.
fn tau_terms<Z: ZMode>(
    terms: &[HeferTerm],
    label: Option<usize>,
    scale: Complex64,
    pt: &KernelPoint,
    gammas: &[FormValue<Complex64>],
    zpows: &[Vec<Complex64>],
) -> Result<AlphaSeries<Z::C>, KernelError> {
    let s = pt.space();
    let base = match label {
        Some(k) => gammas.get(k).cloned().ok_or(KernelError::BadLabel(k))?,
        None => FormValue::scalar(s, Complex64::new(1.0, 0.0)),
    };
    let mut by_exp: BTreeMap<u32, Z::C> = BTreeMap::new();
    for t in terms {
        let mut v = t.c * scale;
        for (k, &e) in t.w.iter().enumerate() {
            if e > 0 {
                v *= zpows[k][e as usize];
            }
        }
        let c = Z::monomial(pt, t.zkey, v)?;
        by_exp
            .entry(t.wdeg)
            .or_insert_with(Z::C::zero)
            .add_assign(&c);
    }
    let mut out = AlphaSeries::zero(s);
    for (e, c) in by_exp {
        out.add_at(e as i32, &base.lift::<Z::C>().mul_coeff(&c));
    }
    Ok(out)
}

/// `τ*(h · dw_label)`: replace `w` by `αζ` and `dw_k` by `γ_k`, as a series in
/// `A`. `h` lives on the doubled ring `(w₀..w_n, z₀..z_n)`; the result is
/// multiplied by `(2πi)^{two_pi_i_power}`.
pub fn tau_substitute<Z: ZMode>(
    h: &Poly,
    label: Option<usize>,
    two_pi_i_power: i32,
    pt: &KernelPoint,
) -> Result<AlphaSeries<Z::C>, KernelError> {
    let width = pt.n() + 1;
    if h.nvars() != 2 * width {
        return Err(KernelError::PointDimension {
            expected: 2 * width,
            got: h.nvars(),
        });
    }
    let terms = compile_hefer(std::slice::from_ref(h), width).remove(0);
    let maxw = terms
        .iter()
        .flat_map(|t| t.w.iter().copied())
        .max()
        .unwrap_or(0);
    let zpows = power_table(&pt.zeta, maxw);
    let scale = super::kernels::two_pi_i().powi(two_pi_i_power);
    tau_terms::<Z>(&terms, label, scale, pt, &gamma_eval(pt), &zpows)
}

/// Per-point data shared by the `H` assembly and the integrand.
struct PointContext<C> {
    alpha: AlphaPowers<C>,
    /// `HEFER_SIGN · A^{−d_j} τ*h_j`.
    hhat: Vec<AlphaSeries<C>>,
}

impl<C: Coeff> PointContext<C> {
    fn new<Z: ZMode<C = C>>(
        sys: &KernelSystem,
        pt: &KernelPoint,
        kappa: u32,
    ) -> Result<Self, KernelError> {
        if pt.f_values().len() != sys.m() {
            return Err(KernelError::PointDimension {
                expected: sys.m(),
                got: pt.f_values().len(),
            });
        }
        let gammas = gamma_eval(pt);
        let maxw = sys.degrees().iter().copied().max().unwrap_or(0);
        let zpows = power_table(&pt.zeta, maxw);
        let mut hhat = Vec::with_capacity(sys.m());
        for (j, row) in sys.hefer.iter().enumerate() {
            let mut hj = AlphaSeries::zero(pt.space());
            for (k, terms) in row.iter().enumerate() {
                hj.add_assign(&tau_terms::<Z>(
                    terms,
                    Some(k),
                    sys.hefer_scale,
                    pt,
                    &gammas,
                    &zpows,
                )?);
            }
            hhat.push(
                hj.shift(-(sys.degrees()[j] as i32))
                    .scale(Complex64::new(HEFER_SIGN, 0.0)),
            );
        }
        Ok(PointContext {
            alpha: AlphaPowers::new::<Z>(pt, kappa)?,
            hhat,
        })
    }

    fn apply_dhhat(&self, x: &AlphaSeries<C>) -> Result<AlphaSeries<C>, KernelError> {
        let mut out = AlphaSeries::zero(x.space);
        for (j, h) in self.hhat.iter().enumerate() {
            let cx = x.contract_e(j);
            if !cx.is_zero() {
                out.add_assign(&h.wedge(&cx)?);
            }
        }
        Ok(out)
    }

    /// `(δ_ĥ)^k / k!` applied to `x`.
    fn dhhat_power(&self, x: &AlphaSeries<C>, k: usize) -> Result<AlphaSeries<C>, KernelError> {
        let mut y = x.clone();
        for _ in 0..k {
            y = self.apply_dhhat(&y)?;
        }
        Ok(y.scale(Complex64::new(1.0 / factorial(k), 0.0)))
    }
}

/// Level of a Hefer morphism component.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Level {
    /// `H_k^0 = α^κ (δ_ĥ)_k : E_k → E_0`.
    Zero,
    /// `H_k^1 = α^κ N (δ_ĥ)_{k−1} : E_k → E_1`, `N = Σ_j α^{−d_j} e_j ⊗ e_j^*`.
    One,
}

fn check_kappa(sys: &KernelSystem, kappa: u32) -> Result<(), KernelError> {
    let need = sys.kappa_min();
    if kappa < need {
        return Err(KernelError::KappaTooSmall { kappa, need });
    }
    Ok(())
}

/// `H_k^ℓ e_J` for every generator multi-index `J` with `|J| = k`, returned
/// as `(J as bitmask, value)`; for level one the value carries the target
/// generator in its `e`-bits. `(δ_ĥ)_k` stands for `(δ_ĥ)^k/k!`.
pub fn assemble_h<Z: ZMode>(
    sys: &KernelSystem,
    kappa: u32,
    level: Level,
    k: usize,
    pt: &KernelPoint,
) -> Result<Vec<(u32, FormValue<Z::C>)>, KernelError> {
    check_kappa(sys, kappa)?;
    if k == 0 || k > sys.m().min(sys.n() + 1) {
        return Err(KernelError::BadLevel(k));
    }
    let ctx = PointContext::<Z::C>::new::<Z>(sys, pt, kappa)?;
    let s = pt.space();
    let mut out = Vec::new();
    for jmask in 0u32..(1 << sys.m()) {
        if jmask.count_ones() as usize != k {
            continue;
        }
        let blade = (0..sys.m())
            .filter(|j| jmask >> j & 1 == 1)
            .map(|j| s.e(j))
            .fold(0, |a, b| a | b);
        let x = AlphaSeries::single(
            FormValue::basis(s, blade, Z::C::from_scalar(Complex64::new(1.0, 0.0))),
            0,
        );
        let y = match level {
            Level::Zero => ctx.dhhat_power(&x, k)?,
            Level::One => {
                let y = ctx.dhhat_power(&x, k - 1)?;
                let mut nz = AlphaSeries::zero(s);
                for (i, &d) in sys.degrees().iter().enumerate() {
                    nz.add_assign(&y.with_e(i).shift(-(d as i32)));
                }
                nz
            }
        };
        out.push((jmask, y.shift(kappa as i32).resolve(&ctx.alpha)?));
    }
    Ok(out)
}

/// Densities of one sample: per generator, the `z`-polynomial multiplying
/// the top blade; and the same for the cutoff remainder.
#[derive(Clone, Debug, PartialEq)]
pub struct IntegrandValue {
    pub q: Vec<ZPoly>,
    pub residue: ZPoly,
}

/// The division integrand for fixed `(f, ψ, κ, ε)`.
#[derive(Clone, Debug)]
pub struct Integrand<'a> {
    sys: &'a KernelSystem,
    psi: CompiledPoly,
    psi_max: u32,
    kappa: u32,
    eps: Option<f64>,
}

impl<'a> Integrand<'a> {
    pub fn new(
        sys: &'a KernelSystem,
        psi: &Poly,
        kappa: u32,
        eps: Option<f64>,
    ) -> Result<Self, KernelError> {
        check_kappa(sys, kappa)?;
        if psi.nvars() != sys.n() + 1 {
            return Err(KernelError::PointDimension {
                expected: sys.n() + 1,
                got: psi.nvars(),
            });
        }
        if !psi.is_homogeneous() {
            return Err(KernelError::PsiNotHomogeneous);
        }
        let rho = kappa as i64 - sys.n() as i64;
        if let Some(d) = psi.degree() {
            if d as i64 != rho {
                return Err(KernelError::DegreeMismatch {
                    kappa,
                    n: sys.n(),
                    psi_degree: d,
                });
            }
        }
        if eps.is_some_and(|e| !(e > 0.0) || !e.is_finite()) {
            return Err(KernelError::BadEps);
        }
        let psi = CompiledPoly::new(psi);
        Ok(Integrand {
            psi_max: psi.max_exponent(),
            psi,
            sys,
            kappa,
            eps,
        })
    }

    pub fn kappa(&self) -> u32 {
        self.kappa
    }

    /// `ρ = κ − n`.
    pub fn rho(&self) -> u32 {
        self.kappa - self.sys.n() as u32
    }

    pub fn system(&self) -> &KernelSystem {
        self.sys
    }

    pub fn eps(&self) -> Option<f64> {
        self.eps
    }

    fn psi_at(&self, pt: &KernelPoint) -> Complex64 {
        self.psi.eval(&power_table(&pt.zeta, self.psi_max))
    }

    /// The series whose top components give `q_i` and the remainder.
    fn series(
        &self,
        pt: &KernelPoint,
    ) -> Result<
        (
            PointContext<ZPoly>,
            Vec<AlphaSeries<ZPoly>>,
            AlphaSeries<ZPoly>,
        ),
        KernelError,
    > {
        let sys = self.sys;
        let s = pt.space();
        let kappa = self.kappa as i32;
        let (chi, dchi) = match self.eps {
            None => (1.0, None),
            Some(e) => cutoff(sys, pt, e),
        };
        let ctx = PointContext::<ZPoly>::new::<SymbolicZ>(sys, pt, self.kappa)?;
        let mut q: Vec<AlphaSeries<ZPoly>> = (0..sys.m()).map(|_| AlphaSeries::zero(s)).collect();
        let mut res = AlphaSeries::zero(s);
        if chi < 1.0 {
            res.add_at(
                kappa,
                &FormValue::scalar(s, ZPoly::constant(Complex64::new(1.0 - chi, 0.0))),
            );
        }
        if chi == 0.0 {
            return Ok((ctx, q, res));
        }
        let sd = sigma_data(sys, pt)?;
        for k in 1..=sys.m().min(sys.n() + 1) {
            let uk = sd.u_form(s, k).scale(Complex64::new(chi, 0.0));
            let y = ctx.dhhat_power(&AlphaSeries::single(uk.lift(), 0), k - 1)?;
            for (i, qi) in q.iter_mut().enumerate() {
                qi.add_assign(&y.contract_e(i).shift(kappa - sys.degrees()[i] as i32));
            }
        }
        if let Some(d) = dchi {
            let dform = one_form(s, &d, true);
            for k in 1..=sys.m().min(sys.n()) {
                let x = wedge_num(&dform, &sd.u_form(s, k));
                let y = ctx.dhhat_power(&AlphaSeries::single(x.lift(), 0), k)?;
                res.add_assign(&y.shift(kappa));
            }
        }
        Ok((ctx, q, res))
    }

    /// Top-blade densities in the chart of `pt`, multiplied by `ψ(ζ)`.
    pub fn eval(&self, pt: &KernelPoint) -> Result<IntegrandValue, KernelError> {
        if pt.space().chart().is_none() {
            return Err(KernelError::NoChart);
        }
        let (ctx, q, res) = self.series(pt)?;
        let psi = self.psi_at(pt);
        Ok(IntegrandValue {
            q: q.iter()
                .map(|s| Ok(s.resolve_top(&ctx.alpha)?.scale(psi)))
                .collect::<Result<_, KernelError>>()?,
            residue: res.resolve_top(&ctx.alpha)?.scale(psi),
        })
    }

    /// Full `(n, n)` components times `ψ(ζ)`, on whatever space `pt` carries.
    pub fn eval_forms(
        &self,
        pt: &KernelPoint,
    ) -> Result<(Vec<FormValue<ZPoly>>, FormValue<ZPoly>), KernelError> {
        let n = self.sys.n();
        let (ctx, q, res) = self.series(pt)?;
        let psi = self.psi_at(pt);
        let q = q
            .iter()
            .map(|s| Ok(s.resolve(&ctx.alpha)?.component(n, n).scale(psi)))
            .collect::<Result<_, KernelError>>()?;
        Ok((q, res.resolve(&ctx.alpha)?.component(n, n).scale(psi)))
    }
}

/// One-shot form of [`Integrand::eval`].
pub fn integrand_eval(
    sys: &KernelSystem,
    psi: &Poly,
    kappa: u32,
    pt: &KernelPoint,
    eps: Option<f64>,
) -> Result<IntegrandValue, KernelError> {
    Integrand::new(sys, psi, kappa, eps)?.eval(pt)
}

/// Top-blade coefficient of `(α^κ)_{n,n}` at a chart point.
pub fn weight_density<Z: ZMode>(pt: &KernelPoint, kappa: u32) -> Result<Z::C, KernelError> {
    let alpha = AlphaPowers::<Z::C>::new::<Z>(pt, kappa)?;
    let one = FormValue::scalar(pt.space(), Z::C::from_scalar(Complex64::new(1.0, 0.0)));
    AlphaSeries::single(one, kappa as i32).resolve_top(&alpha)
}

/// Top-blade coefficient of `α_{1,1}^n` at a chart point.
pub fn alpha11_top_density(pt: &KernelPoint) -> Result<Complex64, KernelError> {
    let top = pt.space().top_blade().ok_or(KernelError::NoChart)?;
    let a11 = alpha11(pt);
    let mut p = FormValue::scalar(pt.space(), Complex64::new(1.0, 0.0));
    for _ in 0..pt.n() {
        p = wedge_num(&p, &a11);
    }
    Ok(p.coeff(top).copied().unwrap_or_default())
}

#[cfg(test)]
mod tests {
    use super::super::fd_dbar;
    use super::super::kernels::{two_pi_i, NumericZ};
    use super::*;
    use crate::hefer::hefer_tuple;
    use crate::polyring::GaussRational;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn rand_vec(rng: &mut ChaCha8Rng, len: usize) -> Vec<Complex64> {
        (0..len)
            .map(|_| c(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)))
            .collect()
    }

    fn sub(a: &FormValue<Complex64>, b: &FormValue<Complex64>) -> FormValue<Complex64> {
        let mut d = a.clone();
        d.add_assign(&b.scale(c(-1.0, 0.0)));
        d
    }

    fn nabla_eta(
        x: &FormValue<Complex64>,
        zeta: &[Complex64],
        z: &[Complex64],
        f: impl Fn(&[Complex64]) -> FormValue<Complex64>,
    ) -> FormValue<Complex64> {
        let eta: Vec<Complex64> = z
            .iter()
            .zip(zeta)
            .map(|(a, b)| two_pi_i() * (a - b))
            .collect();
        sub(&x.contract_dz(&eta), &fd_dbar(x.space(), zeta, f))
    }

    #[test]
    fn tau_trivial_cases() {
        let dv = ["w_a", "w_b", "z_a", "z_b"];
        let zeta = vec![c(0.7, 0.2), c(-0.3, 1.1)];
        let z = vec![c(0.1, -0.4), c(1.0, 0.5)];
        let pt = KernelPoint::bare(zeta.clone(), Some(z), None).unwrap();
        let alpha = AlphaPowers::<Complex64>::new::<NumericZ>(&pt, 8).unwrap();
        let w0 = Poly::from_int_terms(&dv, &[(1, &[1, 0, 0, 0])]);
        let got = tau_substitute::<NumericZ>(&w0, None, 0, &pt)
            .unwrap()
            .resolve(&alpha)
            .unwrap();
        let want = super::super::kernels::alpha_eval::<NumericZ>(&pt)
            .unwrap()
            .scale(zeta[0]);
        assert!(got.distance(&want) < 1e-14);
        let one = Poly::from_int_terms(&dv, &[(1, &[0, 0, 0, 0])]);
        let got = tau_substitute::<NumericZ>(&one, Some(0), 0, &pt)
            .unwrap()
            .resolve(&alpha)
            .unwrap();
        assert!(got.distance(&gamma_eval(&pt)[0]) < 1e-14);
    }

    #[test]
    fn relation_tau_commutes_with_nabla() {
        // ∇_η τ*(g dw_k) = τ*(2πi (z_k − w_k) g)
        let dv = ["w_a", "w_b", "z_a", "z_b"];
        let h = Poly::from_int_terms(&dv, &[(1, &[1, 1, 0, 0]), (2, &[0, 1, 1, 0])]);
        let mut rng = ChaCha8Rng::seed_from_u64(31);
        for k in 0..2 {
            let zk = Poly::from_int_terms(&dv, &[(1, &[0, 0, (k == 0) as u32, (k == 1) as u32])]);
            let wk = Poly::from_int_terms(&dv, &[(1, &[(k == 0) as u32, (k == 1) as u32, 0, 0])]);
            let rhs_poly = &(&zk - &wk) * &h;
            for _ in 0..10 {
                let zeta = rand_vec(&mut rng, 2);
                let z = rand_vec(&mut rng, 2);
                let eval = |x: &[Complex64]| {
                    let p = KernelPoint::bare(x.to_vec(), Some(z.clone()), None).unwrap();
                    let a = AlphaPowers::<Complex64>::new::<NumericZ>(&p, 8).unwrap();
                    tau_substitute::<NumericZ>(&h, Some(k), 0, &p)
                        .unwrap()
                        .resolve(&a)
                        .unwrap()
                };
                let pt = KernelPoint::bare(zeta.clone(), Some(z.clone()), None).unwrap();
                let a = AlphaPowers::<Complex64>::new::<NumericZ>(&pt, 8).unwrap();
                let rhs = tau_substitute::<NumericZ>(&rhs_poly, None, 1, &pt)
                    .unwrap()
                    .resolve(&a)
                    .unwrap();
                let x = eval(&zeta);
                // the δ_η part of the lowest component is exact
                let eta: Vec<Complex64> = z
                    .iter()
                    .zip(&zeta)
                    .map(|(a, b)| two_pi_i() * (a - b))
                    .collect();
                let low = x.component(1, 0).contract_dz(&eta);
                assert!(low.distance(&rhs.component(0, 0)) < 1e-10);
                let lhs = nabla_eta(&x, &zeta, &z, eval);
                assert!(lhs.distance(&rhs) < 1e-6 * rhs.max_norm().max(1.0));
            }
        }
    }

    fn two_generator_system() -> (Vec<Poly>, KernelSystem) {
        let vars = ["a", "b"];
        let gens = vec![
            Poly::from_int_terms(&vars, &[(1, &[1, 1]), (-2, &[0, 2]), (1, &[2, 0])]),
            Poly::from_int_terms(&vars, &[(3, &[0, 1]), (1, &[1, 0])]),
        ];
        let sys = KernelSystem::new(&gens).unwrap();
        (gens, sys)
    }

    fn lookup(h: &[(u32, FormValue<Complex64>)], j: u32) -> FormValue<Complex64> {
        h.iter()
            .find(|(m, _)| *m == j)
            .map(|(_, f)| f.clone())
            .unwrap()
    }

    #[test]
    fn hefer_morphism_relation() {
        // ∇_η H_k^0 e_J = H_{k−1}^0 (δ_f e_J) − δ_{f(z)} H_k^1 e_J, with H_0^0 = α^κ
        let (gens, sys) = two_generator_system();
        let kappa = 3;
        let mut rng = ChaCha8Rng::seed_from_u64(41);
        for _ in 0..5 {
            let zeta = rand_vec(&mut rng, 2);
            let z = rand_vec(&mut rng, 2);
            let point = |x: &[Complex64]| {
                KernelPoint::new(&sys, x.to_vec(), Some(z.clone()), None).unwrap()
            };
            let pt = point(&zeta);
            let s = pt.space();
            let fz: Vec<Complex64> = gens.iter().map(|g| g.evaluate(&z).unwrap()).collect();
            let fzeta = pt.f_values().to_vec();
            let h = |level, k, x: &[Complex64]| {
                assemble_h::<NumericZ>(&sys, kappa, level, k, &point(x)).unwrap()
            };
            let alpha = AlphaPowers::<Complex64>::new::<NumericZ>(&pt, 8).unwrap();
            let ak = AlphaSeries::single(FormValue::scalar(s, c(1.0, 0.0)), kappa as i32)
                .resolve(&alpha)
                .unwrap();
            for k in 1..=2usize {
                let h0 = h(Level::Zero, k, &zeta);
                let h1 = h(Level::One, k, &zeta);
                let hprev = if k == 2 {
                    Some(h(Level::Zero, 1, &zeta))
                } else {
                    None
                };
                for (jmask, x) in &h0 {
                    // H_{k−1}^0 (δ_f e_J)
                    let mut rhs = FormValue::zero(s);
                    let ej = (0..2)
                        .filter(|j| jmask >> j & 1 == 1)
                        .map(|j| s.e(j))
                        .fold(0, |a, b| a | b);
                    let dfe = FormValue::basis(s, ej, c(1.0, 0.0));
                    for j in 0..2 {
                        let part = dfe.contract_e(j).scale(fzeta[j]);
                        for (b, v) in part.terms() {
                            let img = match &hprev {
                                None => ak.clone(),
                                Some(hp) => lookup(hp, s.e_index(b)),
                            };
                            rhs.add_assign(&img.scale(*v));
                        }
                    }
                    let y = lookup(&h1, *jmask);
                    for i in 0..2 {
                        rhs.add_assign(&y.contract_e(i).scale(-fz[i]));
                    }
                    let lhs = nabla_eta(x, &zeta, &z, |xx| lookup(&h(Level::Zero, k, xx), *jmask));
                    assert!(
                        lhs.distance(&rhs) < 1e-5 * rhs.max_norm().max(1.0),
                        "k = {k}"
                    );
                    let eta: Vec<Complex64> = z
                        .iter()
                        .zip(&zeta)
                        .map(|(a, b)| two_pi_i() * (a - b))
                        .collect();
                    let low = x.component(k, 0).contract_dz(&eta);
                    assert!(low.distance(&rhs.component(k - 1, 0)) < 1e-10);
                }
            }
        }
    }

    #[test]
    fn single_generator_level_one_collapse() {
        let f = Poly::from_int_terms(&["a", "b"], &[(1, &[1, 1]), (1, &[0, 2])]);
        let sys = KernelSystem::new(std::slice::from_ref(&f)).unwrap();
        let pt = KernelPoint::new(
            &sys,
            vec![c(0.3, 0.9), c(-1.0, 0.2)],
            Some(vec![c(0.5, 0.0), c(0.1, 0.1)]),
            None,
        )
        .unwrap();
        let kappa = 4;
        let h = assemble_h::<NumericZ>(&sys, kappa, Level::One, 1, &pt).unwrap();
        let alpha = AlphaPowers::<Complex64>::new::<NumericZ>(&pt, 8).unwrap();
        let s = pt.space();
        let want = AlphaSeries::single(FormValue::basis(s, s.e(0), c(1.0, 0.0)), 2)
            .resolve(&alpha)
            .unwrap();
        assert!(h[0].1.distance(&want) < 1e-14);
        assert!(matches!(
            assemble_h::<NumericZ>(&sys, 1, Level::One, 1, &pt),
            Err(KernelError::KappaTooSmall { kappa: 1, need: 2 })
        ));
    }

    #[test]
    fn twist_degree_audit() {
        let (gens, sys) = two_generator_system();
        let vars = gens[0].vars().to_vec();
        for kappa in 3..=5u32 {
            let psi = Poly::from_terms(
                vars.clone(),
                vec![
                    (GaussRational::from_integer(1), vec![kappa - 1, 0]),
                    (GaussRational::from_integer(2), vec![0, kappa - 1]),
                ],
            )
            .unwrap();
            let ig = Integrand::new(&sys, &psi, kappa, None).unwrap();
            let pt =
                KernelPoint::new(&sys, vec![c(1.0, 0.0), c(0.4, -0.3)], None, Some(0)).unwrap();
            let v = ig.eval(&pt).unwrap();
            for (i, q) in v.q.iter().enumerate() {
                let want = kappa - 1 - sys.degrees()[i];
                if let Some(r) = q.degree_range() {
                    assert_eq!(r, (want, want));
                }
            }
        }
    }

    #[test]
    fn cutoff_support() {
        let vars = ["a", "b"];
        let gens = vec![
            Poly::from_int_terms(&vars, &[(1, &[0, 2])]),
            Poly::from_int_terms(&vars, &[(1, &[0, 1])]),
        ];
        let sys = KernelSystem::new(&gens).unwrap();
        let psi = Poly::from_int_terms(&vars, &[(1, &[1, 1])]);
        let ig = Integrand::new(&sys, &psi, 3, Some(0.1)).unwrap();
        let pt = KernelPoint::new(&sys, vec![c(1.0, 0.0), c(0.05, 0.02)], None, Some(0)).unwrap();
        assert!(pt.f_norm2().sqrt() < 0.1);
        let v = ig.eval(&pt).unwrap();
        assert!(v.q.iter().all(ZPoly::is_zero));
        // on Z itself the cutoff needs no section
        let pt = KernelPoint::new(&sys, vec![c(1.0, 0.0), c(0.0, 0.0)], None, Some(0)).unwrap();
        assert!(ig.eval(&pt).unwrap().q.iter().all(ZPoly::is_zero));
        let bare = Integrand::new(&sys, &psi, 3, None).unwrap();
        assert!(matches!(bare.eval(&pt), Err(KernelError::OnZeroSet)));
    }

    #[test]
    fn integrand_is_projective() {
        let mut rng = ChaCha8Rng::seed_from_u64(51);
        let vars = ["a", "b", "c"];
        let gens = vec![
            Poly::from_int_terms(&vars, &[(1, &[0, 1, 0]), (-1, &[1, 0, 0])]),
            Poly::from_int_terms(&vars, &[(1, &[0, 0, 2]), (2, &[1, 1, 0])]),
            Poly::from_int_terms(&vars, &[(1, &[1, 0, 0]), (1, &[0, 0, 1])]),
        ];
        let sys = KernelSystem::new(&gens).unwrap();
        let psi = Poly::from_int_terms(&vars, &[(1, &[1, 1, 1]), (-2, &[0, 0, 3])]);
        let ig = Integrand::new(&sys, &psi, 5, None).unwrap();
        let z = rand_vec(&mut rng, 3);
        for _ in 0..3 {
            let zeta = rand_vec(&mut rng, 3);
            let lambda = rand_vec(&mut rng, 1)[0] * 1.7;
            let scaled: Vec<Complex64> = zeta.iter().map(|x| x * lambda).collect();
            let a = ig
                .eval_forms(&KernelPoint::new(&sys, zeta.clone(), None, None).unwrap())
                .unwrap();
            let b = ig
                .eval_forms(&KernelPoint::new(&sys, scaled, None, None).unwrap())
                .unwrap();
            let s = a.1.space();
            for (fa, fb) in a.0.iter().zip(&b.0) {
                let fa = fa.map(|p| p.evaluate(&z));
                let fb = fb.map(|p| p.evaluate(&z));
                let mut adj = FormValue::zero(s);
                for (blade, v) in fb.terms() {
                    let (p, q) = s.bidegree(blade);
                    adj.add_term(
                        blade,
                        v * lambda.powi(p as i32) * lambda.conj().powi(q as i32),
                    );
                }
                assert!(fa.distance(&adj) < 1e-9 * fa.max_norm());
                // basic: no component along the Euler field
                assert!(fa.contract_dz(&zeta).max_norm() < 1e-9 * fa.max_norm());
            }
        }
    }

    #[test]
    fn bounded_density_off_zero_set() {
        // Z = ∅ for (b, b − a); sample the sphere and check finiteness and a bound
        let vars = ["a", "b"];
        let gens = vec![
            Poly::from_int_terms(&vars, &[(1, &[0, 1])]),
            Poly::from_int_terms(&vars, &[(1, &[0, 1]), (-1, &[1, 0])]),
        ];
        let sys = KernelSystem::new(&gens).unwrap();
        let psi = Poly::from_int_terms(&vars, &[(1, &[1, 0])]);
        let ig = Integrand::new(&sys, &psi, 2, None).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(61);
        let mut worst = 0.0f64;
        for _ in 0..10_000 {
            let v = rand_vec(&mut rng, 2);
            let pt = KernelPoint::new(&sys, vec![c(1.0, 0.0), v[1] / v[0]], None, Some(0)).unwrap();
            let val = ig.eval(&pt).unwrap();
            // density relative to the Fubini–Study volume
            let fs = (1.0 + pt.zeta[1].norm_sqr()).powi(2);
            for q in &val.q {
                for (_, x) in q.terms() {
                    assert!(x.is_finite());
                    worst = worst.max(x.norm() * fs);
                }
            }
        }
        assert!(worst < 1e3, "{worst}");
    }

    #[test]
    fn weight_density_matches_binomial_expansion() {
        let pt = KernelPoint::bare(
            vec![c(1.0, 0.0), c(0.3, -0.8)],
            Some(vec![c(0.2, 0.1), c(1.0, -1.0)]),
            Some(0),
        )
        .unwrap();
        let a00 = alpha00::<NumericZ>(&pt).unwrap();
        let top = alpha11_top_density(&pt).unwrap();
        let got = weight_density::<NumericZ>(&pt, 3).unwrap();
        assert!((got - 3.0 * a00 * a00 * top).norm() < 1e-14);
        let table = hefer_tuple(&[Poly::from_int_terms(&["a", "b"], &[(1, &[1, 0])])]).unwrap();
        assert_eq!(table.normalization, -1);
    }
}
