//! Pointwise building blocks: the weight `α`, the projective forms `γ_j`, the
//! minimal-norm Koszul section `σ` and the forms `u_k = σ ∧ (∂̄σ)^{k−1}`.

use std::f64::consts::PI;

use num_complex::Complex64;

use super::form::{one_form, Coeff, FormSpace, FormValue};
use super::zpoly::{pack, ZPoly, MAX_Z_VARS};
use super::KernelError;
use crate::hefer::{hefer_tuple, HeferTable};
use crate::polyring::Poly;

pub(crate) fn two_pi_i() -> Complex64 {
    Complex64::new(0.0, 2.0 * PI)
}

/// Polynomial compiled for repeated floating evaluation.
#[derive(Clone, Debug)]
pub(crate) struct CompiledPoly {
    terms: Vec<(Complex64, Vec<u32>)>,
}

impl CompiledPoly {
    pub(crate) fn new(p: &Poly) -> Self {
        CompiledPoly {
            terms: p
                .terms()
                .map(|(m, c)| (c.to_complex64(), m.0.clone()))
                .collect(),
        }
    }

    pub(crate) fn max_exponent(&self) -> u32 {
        self.terms
            .iter()
            .flat_map(|t| t.1.iter().copied())
            .max()
            .unwrap_or(0)
    }

    /// Evaluates with a table `pows[k][e] = ζ_k^e`.
    pub(crate) fn eval(&self, pows: &[Vec<Complex64>]) -> Complex64 {
        let mut s = Complex64::new(0.0, 0.0);
        for (c, e) in &self.terms {
            let mut t = *c;
            for (k, &ek) in e.iter().enumerate() {
                if ek > 0 {
                    t *= pows[k][ek as usize];
                }
            }
            s += t;
        }
        s
    }
}

pub(crate) fn power_table(zeta: &[Complex64], max: u32) -> Vec<Vec<Complex64>> {
    zeta.iter()
        .map(|&x| {
            let mut v = Vec::with_capacity(max as usize + 1);
            let mut acc = Complex64::new(1.0, 0.0);
            for _ in 0..=max {
                v.push(acc);
                acc *= x;
            }
            v
        })
        .collect()
}

/// One term `c·w^β z^γ` of a Hefer coefficient.
#[derive(Clone, Debug)]
pub(crate) struct HeferTerm {
    pub c: Complex64,
    pub w: Vec<u32>,
    pub wdeg: u32,
    pub zkey: u64,
}

pub(crate) fn compile_hefer(coeffs: &[Poly], width: usize) -> Vec<Vec<HeferTerm>> {
    coeffs
        .iter()
        .map(|h| {
            h.terms()
                .map(|(m, c)| {
                    let w = m.0[..width].to_vec();
                    HeferTerm {
                        c: c.to_complex64(),
                        wdeg: w.iter().sum(),
                        w,
                        zkey: pack(&m.0[width..]),
                    }
                })
                .collect()
        })
        .collect()
}

/// Homogeneous generators prepared for kernel evaluation.
#[derive(Clone, Debug)]
pub struct KernelSystem {
    n: usize,
    degrees: Vec<u32>,
    f: Vec<CompiledPoly>,
    grad: Vec<Vec<CompiledPoly>>,
    pub(crate) hefer: Vec<Vec<Vec<HeferTerm>>>,
    /// `(2πi)^normalization` from the table.
    pub(crate) hefer_scale: Complex64,
    max_exp: u32,
    /// Points with `|f|²_{E*}` at or below this value count as lying on `Z`.
    pub guard: f64,
}

impl KernelSystem {
    /// Generators must be homogeneous over a common ring of `n + 1` coordinates.
    pub fn new(generators: &[Poly]) -> Result<Self, KernelError> {
        let table = hefer_tuple(generators)?;
        KernelSystem::with_table(generators, &table)
    }

    pub fn with_table(generators: &[Poly], table: &HeferTable) -> Result<Self, KernelError> {
        let first = generators.first().ok_or(KernelError::NoGenerators)?;
        let width = first.nvars();
        if !(2..=MAX_Z_VARS).contains(&width) {
            return Err(KernelError::UnsupportedDimension(width.saturating_sub(1)));
        }
        if table.rows.len() != generators.len() || table.width() != width {
            return Err(KernelError::TableMismatch);
        }
        let mut degrees = Vec::new();
        for (j, g) in generators.iter().enumerate() {
            if g.vars() != first.vars() {
                return Err(KernelError::TableMismatch);
            }
            if !g.is_homogeneous() || g.is_zero() {
                return Err(KernelError::NotHomogeneous(j));
            }
            degrees.push(g.degree().unwrap_or(0));
        }
        FormSpace::new(width - 1, generators.len())?;
        let f: Vec<CompiledPoly> = generators.iter().map(CompiledPoly::new).collect();
        let grad: Vec<Vec<CompiledPoly>> = generators
            .iter()
            .map(|g| {
                (0..width)
                    .map(|k| CompiledPoly::new(&g.partial_derivative_idx(k)))
                    .collect()
            })
            .collect();
        let max_exp = f.iter().map(CompiledPoly::max_exponent).max().unwrap_or(0);
        Ok(KernelSystem {
            n: width - 1,
            degrees,
            f,
            grad,
            hefer: table
                .rows
                .iter()
                .map(|r| compile_hefer(&r.coeffs, width))
                .collect(),
            hefer_scale: two_pi_i().powi(table.normalization),
            max_exp,
            guard: 0.0,
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn m(&self) -> usize {
        self.f.len()
    }

    pub fn degrees(&self) -> &[u32] {
        &self.degrees
    }

    /// `Σ_{i ≤ min(m, n+1)} d_i` over the degrees sorted decreasingly.
    pub fn kappa_min(&self) -> u32 {
        let mut d = self.degrees.clone();
        d.sort_unstable_by(|a, b| b.cmp(a));
        d.iter().take(self.m().min(self.n + 1)).sum()
    }

    pub fn equal_degrees(&self) -> bool {
        self.degrees.windows(2).all(|w| w[0] == w[1])
    }
}

/// Evaluation point `ζ`, optional target point `z`, and cached values.
#[derive(Clone, Debug)]
pub struct KernelPoint {
    pub zeta: Vec<Complex64>,
    pub z: Option<Vec<Complex64>>,
    space: FormSpace,
    norm2: f64,
    zbar_dot_zeta: Option<Complex64>,
    fvals: Vec<Complex64>,
    grads: Vec<Vec<Complex64>>,
    fnorm2: f64,
}

impl KernelPoint {
    /// Point for `α`/`γ` evaluation only (no generators).
    pub fn bare(
        zeta: Vec<Complex64>,
        z: Option<Vec<Complex64>>,
        chart: Option<usize>,
    ) -> Result<Self, KernelError> {
        KernelPoint::build(None, zeta, z, chart)
    }

    pub fn new(
        sys: &KernelSystem,
        zeta: Vec<Complex64>,
        z: Option<Vec<Complex64>>,
        chart: Option<usize>,
    ) -> Result<Self, KernelError> {
        KernelPoint::build(Some(sys), zeta, z, chart)
    }

    fn build(
        sys: Option<&KernelSystem>,
        zeta: Vec<Complex64>,
        z: Option<Vec<Complex64>>,
        chart: Option<usize>,
    ) -> Result<Self, KernelError> {
        if zeta.len() < 2 {
            return Err(KernelError::UnsupportedDimension(
                zeta.len().saturating_sub(1),
            ));
        }
        let n = zeta.len() - 1;
        if let Some(s) = sys {
            if s.n != n {
                return Err(KernelError::PointDimension {
                    expected: s.n + 1,
                    got: zeta.len(),
                });
            }
        }
        if let Some(zz) = &z {
            if zz.len() != zeta.len() {
                return Err(KernelError::PointDimension {
                    expected: zeta.len(),
                    got: zz.len(),
                });
            }
        }
        if chart.is_some_and(|c| c > n) {
            return Err(KernelError::BadChart(chart.unwrap_or(0)));
        }
        let norm2: f64 = zeta.iter().map(Complex64::norm_sqr).sum();
        if norm2 == 0.0 || !norm2.is_finite() {
            return Err(KernelError::ZetaZero);
        }
        let m = sys.map_or(0, |s| s.m());
        let mut space = FormSpace::new(n, m)?;
        if let Some(c) = chart {
            space = space.with_chart(c);
        }
        let zbar_dot_zeta = z
            .as_ref()
            .map(|zz| zz.iter().zip(&zeta).map(|(a, b)| a * b.conj()).sum());
        let (mut fvals, mut grads, mut fnorm2) = (Vec::new(), Vec::new(), 0.0);
        if let Some(s) = sys {
            let pows = power_table(&zeta, s.max_exp);
            fvals = s.f.iter().map(|p| p.eval(&pows)).collect();
            grads = s
                .grad
                .iter()
                .map(|g| g.iter().map(|p| p.eval(&pows)).collect())
                .collect();
            fnorm2 = fvals
                .iter()
                .zip(&s.degrees)
                .map(|(v, &d)| v.norm_sqr() * norm2.powi(-(d as i32)))
                .sum();
        }
        Ok(KernelPoint {
            zeta,
            z,
            space,
            norm2,
            zbar_dot_zeta,
            fvals,
            grads,
            fnorm2,
        })
    }

    pub fn n(&self) -> usize {
        self.zeta.len() - 1
    }

    pub fn space(&self) -> FormSpace {
        self.space
    }

    pub fn norm2(&self) -> f64 {
        self.norm2
    }

    /// `Σ_k z_k ζ̄_k`, when `z` is given.
    pub fn zbar_dot_zeta(&self) -> Option<Complex64> {
        self.zbar_dot_zeta
    }

    /// `f^j(ζ)`.
    pub fn f_values(&self) -> &[Complex64] {
        &self.fvals
    }

    /// `|f(ζ)|²_{E*} = Σ_j |f^j(ζ)|² |ζ|^{−2d_j}`.
    pub fn f_norm2(&self) -> f64 {
        self.fnorm2
    }
}

/// How the target point enters: numerically from the point, or symbolically.
pub trait ZMode {
    type C: Coeff;
    /// `Σ_k c_k z_k`.
    fn linear(pt: &KernelPoint, coeffs: &[Complex64]) -> Result<Self::C, KernelError>;
    /// `c·z^γ` with `γ` packed.
    fn monomial(pt: &KernelPoint, key: u64, c: Complex64) -> Result<Self::C, KernelError>;
}

pub struct NumericZ;
pub struct SymbolicZ;

impl ZMode for NumericZ {
    type C = Complex64;
    fn linear(pt: &KernelPoint, coeffs: &[Complex64]) -> Result<Complex64, KernelError> {
        let z = pt.z.as_ref().ok_or(KernelError::MissingZ)?;
        Ok(coeffs.iter().zip(z).map(|(a, b)| a * b).sum())
    }
    fn monomial(pt: &KernelPoint, key: u64, c: Complex64) -> Result<Complex64, KernelError> {
        let z = pt.z.as_ref().ok_or(KernelError::MissingZ)?;
        let mut v = c;
        for (k, zk) in z.iter().enumerate() {
            let e = ((key >> (8 * k)) & 0xff) as u32;
            if e > 0 {
                v *= zk.powu(e);
            }
        }
        Ok(v)
    }
}

impl ZMode for SymbolicZ {
    type C = ZPoly;
    fn linear(_pt: &KernelPoint, coeffs: &[Complex64]) -> Result<ZPoly, KernelError> {
        Ok(ZPoly::linear(coeffs))
    }
    fn monomial(_pt: &KernelPoint, key: u64, c: Complex64) -> Result<ZPoly, KernelError> {
        Ok(ZPoly::monomial(key, c))
    }
}

/// `α_{0,0} = z·ζ̄ / |ζ|²`.
pub fn alpha00<Z: ZMode>(pt: &KernelPoint) -> Result<Z::C, KernelError> {
    let c: Vec<Complex64> = pt.zeta.iter().map(|x| x.conj() / pt.norm2).collect();
    Z::linear(pt, &c)
}

/// `∂̄|ζ|^{2s} = s|ζ|^{2(s−1)} Σ_k ζ_k dζ̄_k`, as coefficients of `dζ̄_k`.
fn dbar_norm_power(pt: &KernelPoint, s: f64) -> Vec<Complex64> {
    let f = s * pt.norm2.powf(s - 1.0);
    pt.zeta.iter().map(|x| x * f).collect()
}

/// `α_{1,1} = −∂̄(ζ̄·dζ / 2πi|ζ|²)`.
pub fn alpha11(pt: &KernelPoint) -> FormValue<Complex64> {
    let s = pt.space;
    let n2 = pt.norm2;
    let mut inner = FormValue::zero(s);
    for k in 0..pt.zeta.len() {
        // dζ̄_k ∧ dζ_k = −dζ_k ∧ dζ̄_k in normal order
        inner.add_term(s.dz(k) | s.dzbar(k), Complex64::new(-1.0 / n2, 0.0));
    }
    let a = one_form(s, &pt.zeta, true);
    let conj: Vec<Complex64> = pt.zeta.iter().map(|x| x.conj()).collect();
    let b = one_form(s, &conj, false);
    let ab = wedge_num(&a, &b).scale(Complex64::new(-1.0 / (n2 * n2), 0.0));
    inner.add_assign(&ab);
    inner.scale(-1.0 / two_pi_i())
}

pub(crate) fn wedge_num(
    a: &FormValue<Complex64>,
    b: &FormValue<Complex64>,
) -> FormValue<Complex64> {
    a.wedge(b).expect("forms share a space")
}

/// `α = α_{0,0} + α_{1,1}`.
pub fn alpha_eval<Z: ZMode>(pt: &KernelPoint) -> Result<FormValue<Z::C>, KernelError> {
    let mut out = alpha11(pt).lift::<Z::C>();
    out.add_term(0, alpha00::<Z>(pt)?);
    Ok(out)
}

/// `γ_j = dζ_j − ζ_j (ζ̄·dζ)/|ζ|²` for `j = 0..=n`.
pub fn gamma_eval(pt: &KernelPoint) -> Vec<FormValue<Complex64>> {
    let s = pt.space;
    let conj: Vec<Complex64> = pt.zeta.iter().map(|x| x.conj() / pt.norm2).collect();
    (0..pt.zeta.len())
        .map(|j| {
            let mut coeffs: Vec<Complex64> = conj.iter().map(|c| -c * pt.zeta[j]).collect();
            coeffs[j] += 1.0;
            one_form(s, &coeffs, false)
        })
        .collect()
}

/// `σ_j` and the `dζ̄_k`-coefficients of `∂̄σ_j`.
#[derive(Clone, Debug)]
pub struct SigmaData {
    pub sigma: Vec<Complex64>,
    pub dbar: Vec<Vec<Complex64>>,
}

fn require_off_zero(sys: &KernelSystem, pt: &KernelPoint) -> Result<(), KernelError> {
    if pt.fvals.len() != sys.m() {
        return Err(KernelError::PointDimension {
            expected: sys.m(),
            got: pt.fvals.len(),
        });
    }
    if !(pt.fnorm2 > sys.guard) || !pt.fnorm2.is_finite() {
        return Err(KernelError::OnZeroSet);
    }
    Ok(())
}

/// Minimal-norm section `σ_j = f̄^j |ζ|^{−2d_j} / |f|²_{E*}` and its `∂̄`.
pub fn sigma_data(sys: &KernelSystem, pt: &KernelPoint) -> Result<SigmaData, KernelError> {
    require_off_zero(sys, pt)?;
    let w = pt.n() + 1;
    let s = pt.fnorm2;
    let weights: Vec<f64> = sys
        .degrees
        .iter()
        .map(|&d| pt.norm2.powi(-(d as i32)))
        .collect();
    let dweights: Vec<Vec<Complex64>> = sys
        .degrees
        .iter()
        .map(|&d| dbar_norm_power(pt, -(d as f64)))
        .collect();
    let mut ds = vec![Complex64::new(0.0, 0.0); w];
    for i in 0..sys.m() {
        let fi = pt.fvals[i];
        for k in 0..w {
            ds[k] += fi * pt.grads[i][k].conj() * weights[i] + dweights[i][k] * fi.norm_sqr();
        }
    }
    let mut sigma = Vec::with_capacity(sys.m());
    let mut dbar = Vec::with_capacity(sys.m());
    for j in 0..sys.m() {
        let fb = pt.fvals[j].conj();
        sigma.push(fb * weights[j] / s);
        dbar.push(
            (0..w)
                .map(|k| {
                    (pt.grads[j][k].conj() * weights[j] + fb * dweights[j][k]) / s
                        - fb * weights[j] * ds[k] / (s * s)
                })
                .collect(),
        );
    }
    Ok(SigmaData { sigma, dbar })
}

/// Equal-degree form of [`sigma_data`]: `σ_j = f̄^j/|f|²`, where the metric
/// factors cancel.
pub fn sigma_data_equal_degree(
    sys: &KernelSystem,
    pt: &KernelPoint,
) -> Result<SigmaData, KernelError> {
    require_off_zero(sys, pt)?;
    if !sys.equal_degrees() {
        return Err(KernelError::UnequalDegrees);
    }
    let w = pt.n() + 1;
    let s: f64 = pt.fvals.iter().map(Complex64::norm_sqr).sum();
    let mut ds = vec![Complex64::new(0.0, 0.0); w];
    for i in 0..sys.m() {
        for k in 0..w {
            ds[k] += pt.fvals[i] * pt.grads[i][k].conj();
        }
    }
    let sigma = pt.fvals.iter().map(|f| f.conj() / s).collect();
    let dbar = (0..sys.m())
        .map(|j| {
            let fb = pt.fvals[j].conj();
            (0..w)
                .map(|k| pt.grads[j][k].conj() / s - fb * ds[k] / (s * s))
                .collect()
        })
        .collect();
    Ok(SigmaData { sigma, dbar })
}

impl SigmaData {
    pub fn sigma_form(&self, space: FormSpace) -> FormValue<Complex64> {
        let mut f = FormValue::zero(space);
        for (j, s) in self.sigma.iter().enumerate() {
            f.add_term(space.e(j), *s);
        }
        f
    }

    pub fn dbar_form(&self, space: FormSpace) -> FormValue<Complex64> {
        let mut f = FormValue::zero(space);
        for (j, row) in self.dbar.iter().enumerate() {
            for (k, c) in row.iter().enumerate() {
                f.add_term(space.dzbar(k) | space.e(j), *c);
            }
        }
        f
    }

    /// `σ ∧ (∂̄σ)^{k−1}`.
    pub fn u_form(&self, space: FormSpace, k: usize) -> FormValue<Complex64> {
        let d = self.dbar_form(space);
        let mut u = self.sigma_form(space);
        for _ in 1..k {
            u = wedge_num(&u, &d);
        }
        u
    }
}

/// `Σ_j σ_j e_j`.
pub fn sigma_eval(
    sys: &KernelSystem,
    pt: &KernelPoint,
) -> Result<FormValue<Complex64>, KernelError> {
    Ok(sigma_data(sys, pt)?.sigma_form(pt.space))
}

/// `Σ_j ∂̄σ_j ∧ e_j`.
pub fn dbar_sigma_eval(
    sys: &KernelSystem,
    pt: &KernelPoint,
) -> Result<FormValue<Complex64>, KernelError> {
    Ok(sigma_data(sys, pt)?.dbar_form(pt.space))
}

/// `u_k = σ ∧ (∂̄σ)^{k−1}` for `1 ≤ k ≤ min(m, n+1)`.
pub fn u_eval(
    sys: &KernelSystem,
    pt: &KernelPoint,
    k: usize,
) -> Result<FormValue<Complex64>, KernelError> {
    if k == 0 || k > sys.m().min(sys.n + 1) {
        return Err(KernelError::BadLevel(k));
    }
    Ok(sigma_data(sys, pt)?.u_form(pt.space, k))
}

/// Smooth cutoff: 0 on `t ≤ 1`, 1 on `t ≥ 2`, `3s² − 2s³` in between.
pub fn chi(t: f64) -> f64 {
    if t <= 1.0 {
        0.0
    } else if t >= 2.0 {
        1.0
    } else {
        let s = t - 1.0;
        s * s * (3.0 - 2.0 * s)
    }
}

pub fn chi_prime(t: f64) -> f64 {
    if t <= 1.0 || t >= 2.0 {
        0.0
    } else {
        let s = t - 1.0;
        6.0 * s * (1.0 - s)
    }
}

/// `χ(|f|_{E*}/ε)` and the `dζ̄_k`-coefficients of its `∂̄`.
pub fn cutoff(sys: &KernelSystem, pt: &KernelPoint, eps: f64) -> (f64, Option<Vec<Complex64>>) {
    let r = pt.fnorm2.sqrt();
    let t = r / eps;
    let value = chi(t);
    if chi_prime(t) == 0.0 {
        return (value, None);
    }
    let w = pt.n() + 1;
    let mut ds = vec![Complex64::new(0.0, 0.0); w];
    for (i, &d) in sys.degrees.iter().enumerate() {
        let wt = pt.norm2.powi(-(d as i32));
        let dw = dbar_norm_power(pt, -(d as f64));
        let fi = pt.fvals[i];
        for k in 0..w {
            ds[k] += fi * pt.grads[i][k].conj() * wt + dw[k] * fi.norm_sqr();
        }
    }
    let f = chi_prime(t) / eps / (2.0 * r);
    (value, Some(ds.into_iter().map(|c| c * f).collect()))
}
