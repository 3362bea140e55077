use std::collections::HashMap;

use num_bigint::BigInt;
use num_complex::Complex64;
use num_rational::BigRational;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::Serialize;

use super::{integrate_raw, CalibrationStore, IntegralEstimate, QuadConfig, QuadError, Strategy};
use crate::bounds::{check_global_solvability, Theorem};
use crate::certsolver::{
    certify_module, numeric_residual, projective_zero_set_empty, solution_dimension, Certificate,
    Cofactors, MembershipProblem, ResidualStats,
};
use crate::polyring::{GaussRational, Monomial, NumPoly, Poly};
use crate::projkernel::{
    pack, weight_density, Integrand, KernelPoint, KernelSystem, NumericZ, MAX_Z_VARS,
};

/// Cutoff radius used when `Z ≠ ∅` and no `eps` is configured.
pub const DEFAULT_EPS: f64 = 1e-3;
/// Largest denominator tried by [`nearest_rational`] in certificates.
pub const RATIONAL_DENOMINATOR: u64 = 64;
const RESIDUAL_POINTS: usize = 20;
const RESIDUAL_SEED: u64 = 0x5eed;

/// `∫_{ℙⁿ} (α^κ)_{n,n} ψ` at the point `z`, which should reproduce `ψ(z)`.
pub fn reproduce_section(
    psi: &Poly,
    kappa: u32,
    z: &[Complex64],
    config: &QuadConfig,
    store: &CalibrationStore,
) -> Result<IntegralEstimate, QuadError> {
    let n = psi
        .nvars()
        .checked_sub(1)
        .filter(|&n| n >= 1)
        .ok_or(QuadError::Config("ψ needs n + 1 ≥ 2 variables".into()))?;
    if !psi.is_homogeneous() {
        return Err(crate::projkernel::KernelError::PsiNotHomogeneous.into());
    }
    let deg = psi.degree().unwrap_or(0);
    if deg as i64 != kappa as i64 - n as i64 {
        return Err(crate::projkernel::KernelError::DegreeMismatch {
            kappa,
            n,
            psi_degree: deg,
        }
        .into());
    }
    if z.len() != n + 1 {
        return Err(QuadError::Config(format!(
            "z has {} coordinates, expected {}",
            z.len(),
            n + 1
        )));
    }
    let cal = store.require(n, config.strategy)?;
    let psi = psi.to_num();
    let chart = config.chart;
    let raw = integrate_raw(n, 1, config, |zeta| {
        let pt = KernelPoint::bare(zeta.to_vec(), Some(z.to_vec()), Some(chart)).ok()?;
        let w = weight_density::<NumericZ>(&pt, kappa).ok()?;
        Some(vec![w * psi.evaluate(zeta).ok()?])
    })?;
    Ok(raw[0].scaled(cal.constant))
}

/// Closest `p/q + (r/s) i` with `q, s ≤ max_den`, and its distance.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct NearestRational {
    pub value: String,
    pub distance: f64,
}

fn nearest_real(x: f64, max_den: u64) -> (BigRational, f64) {
    let mut best = (0i64, 1u64, f64::INFINITY);
    for q in 1..=max_den.max(1) {
        let p = (x * q as f64).round();
        let d = (x - p / q as f64).abs();
        if d < best.2 - 1e-15 {
            best = (p as i64, q, d);
        }
    }
    (
        BigRational::new(BigInt::from(best.0), BigInt::from(best.1)),
        best.2,
    )
}

pub fn nearest_rational(x: Complex64, max_den: u64) -> NearestRational {
    let (re, dr) = nearest_real(x.re, max_den);
    let (im, di) = nearest_real(x.im, max_den);
    NearestRational {
        value: GaussRational::new(re, im).to_string(),
        distance: dr.hypot(di),
    }
}

/// One integrated coefficient.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CoefficientEstimate {
    /// Exponents over the affine variables (cofactors) or the homogeneous
    /// ones (residue).
    pub exps: Vec<u32>,
    pub estimate: IntegralEstimate,
    pub nearest_rational: NearestRational,
}

#[derive(Clone, Debug, PartialEq)]
pub struct IntegralCertificate {
    /// Numeric cofactors with the sampled residual.
    pub certificate: Certificate,
    pub kappa: u32,
    pub eps: Option<f64>,
    /// `eps` was chosen here because `Z ≠ ∅`.
    pub eps_auto: bool,
    pub zero_set_empty: bool,
    pub strategy: Strategy,
    pub samples: usize,
    pub seed: u64,
    /// Per generator, every coefficient of the affine cofactor.
    pub coefficients: Vec<Vec<CoefficientEstimate>>,
    /// Coefficients of the remainder integral in the homogeneous `z`.
    pub residue: Vec<CoefficientEstimate>,
    pub max_std_error: f64,
    /// `max |ψ(z) − Σ f_i(z) q_i(z) − R(z)| / max |ψ(z)|` at random `z`.
    pub decomposition_defect: f64,
    /// Dimension of the exact solution space at `ρ`; `Some(0)` means unique.
    pub solution_dimension: Option<usize>,
    /// Largest coefficient distance to the exact cofactors, when those are unique.
    pub exact_distance: Option<f64>,
}

impl IntegralCertificate {
    pub fn cofactors(&self) -> &[NumPoly] {
        match &self.certificate.cofactors {
            Cofactors::Numeric(q) => q,
            Cofactors::Exact(_) => unreachable!("integral certificates are numeric"),
        }
    }

    pub fn residual(&self) -> &ResidualStats {
        self.certificate
            .residual
            .as_ref()
            .expect("residual is always sampled")
    }

    /// Largest absolute remainder coefficient.
    pub fn residue_norm(&self) -> f64 {
        self.residue
            .iter()
            .map(|c| c.estimate.value.norm())
            .fold(0.0, f64::max)
    }
}

fn evaluate_homogeneous(poly: &[(u64, Complex64)], z: &[Complex64]) -> Complex64 {
    poly.iter()
        .map(|(k, c)| {
            let e = crate::projkernel::unpack(*k, z.len());
            c * e
                .iter()
                .zip(z)
                .map(|(&ei, zi)| zi.powu(ei))
                .product::<Complex64>()
        })
        .sum()
}

/// Integrates the division formula at degree `ρ` and returns the affine
/// cofactors `Q_i` of `Φ = Σ F_i Q_i`, with diagnostics.
pub fn certify_integral(
    problem: &MembershipProblem,
    rho: i64,
    theorem: Option<Theorem>,
    config: &QuadConfig,
    store: &CalibrationStore,
) -> Result<IntegralCertificate, QuadError> {
    if problem.r() != 1 {
        return Err(QuadError::Config(
            "the integral formula is implemented for ideals (r = 1) only".into(),
        ));
    }
    let n = problem.n();
    if n + 1 > MAX_Z_VARS {
        return Err(QuadError::Config(format!(
            "n = {n} is too large for symbolic z"
        )));
    }
    config.validate(n)?;
    let cal = store.require(n, config.strategy)?;
    let profile = problem
        .profile(None)
        .map_err(|e| QuadError::Config(e.to_string()))?;
    if !check_global_solvability(rho, &profile) {
        return Err(QuadError::Config(format!(
            "rho = {rho} fails the global solvability condition"
        )));
    }
    let hcols = problem.homogeneous_columns()?;
    let gens: Vec<Poly> = hcols.iter().map(|c| c[0].clone()).collect();
    let psi = problem.homogeneous_target(rho)?.remove(0);
    let hvars = gens[0].vars().to_vec();
    let homvar = problem.homvar();
    let kappa = (rho + n as i64) as u32;
    let zero_set_empty = projective_zero_set_empty(problem)?;
    let (eps, eps_auto) = match config.eps {
        Some(e) => (Some(e), false),
        None if zero_set_empty => (None, false),
        None => (Some(DEFAULT_EPS), true),
    };
    let sys = KernelSystem::new(&gens)?;
    let integrand = Integrand::new(&sys, &psi, kappa, eps)?;

    // one output slot per (generator, z-monomial), then the remainder
    let nh = n + 1;
    let mut slots: Vec<(Option<usize>, Monomial)> = Vec::new();
    for (i, &d) in problem.degrees().iter().enumerate() {
        if rho >= d as i64 {
            for mono in Monomial::all_of_degree(nh, (rho - d as i64) as u32) {
                slots.push((Some(i), mono));
            }
        }
    }
    for mono in Monomial::all_of_degree(nh, rho as u32) {
        slots.push((None, mono));
    }
    let index: HashMap<(Option<usize>, u64), usize> = slots
        .iter()
        .enumerate()
        .map(|(s, (i, m))| ((*i, pack(&m.0)), s))
        .collect();
    let chart = config.chart;
    let mut raw_config = config.clone();
    raw_config.max_std_error = None;
    raw_config.eps = eps;
    let raw = integrate_raw(n, slots.len(), &raw_config, |zeta| {
        let pt = KernelPoint::new(&sys, zeta.to_vec(), None, Some(chart)).ok()?;
        let val = integrand.eval(&pt).ok()?;
        let mut out = vec![Complex64::new(0.0, 0.0); slots.len()];
        let labelled = val
            .q
            .iter()
            .enumerate()
            .map(|(i, q)| (Some(i), q))
            .chain([(None, &val.residue)]);
        for (label, poly) in labelled {
            for (key, c) in poly.terms() {
                match index.get(&(label, *key)) {
                    Some(&s) => out[s] += c,
                    None => debug_assert!(false, "z-monomial outside the expected degree"),
                }
            }
        }
        Some(out)
    })?;
    let est: Vec<IntegralEstimate> = raw.iter().map(|e| e.scaled(cal.constant)).collect();
    let max_std_error = est.iter().map(|e| e.std_error).fold(0.0, f64::max);
    if let Some(t) = config.max_std_error {
        if max_std_error > t {
            return Err(QuadError::NotConverged {
                std_error: max_std_error,
                threshold: t,
            });
        }
    }

    let m = problem.m();
    let mut qh: Vec<Vec<(u64, Complex64)>> = vec![Vec::new(); m];
    let mut res: Vec<(u64, Complex64)> = Vec::new();
    let mut coefficients: Vec<Vec<CoefficientEstimate>> = vec![Vec::new(); m];
    let mut residue = Vec::new();
    let h = hvars
        .iter()
        .position(|v| *v == homvar)
        .expect("homogenizing variable present");
    for ((label, mono), e) in slots.iter().zip(&est) {
        let nearest = nearest_rational(e.value, RATIONAL_DENOMINATOR);
        match label {
            Some(i) => {
                qh[*i].push((pack(&mono.0), e.value));
                let exps = mono
                    .0
                    .iter()
                    .enumerate()
                    .filter(|&(k, _)| k != h)
                    .map(|(_, &x)| x)
                    .collect();
                coefficients[*i].push(CoefficientEstimate {
                    exps,
                    estimate: *e,
                    nearest_rational: nearest,
                });
            }
            None => {
                res.push((pack(&mono.0), e.value));
                residue.push(CoefficientEstimate {
                    exps: mono.0.clone(),
                    estimate: *e,
                    nearest_rational: nearest,
                });
            }
        }
    }
    let q: Vec<NumPoly> = qh
        .iter()
        .map(|terms| {
            let p = NumPoly::from_terms(
                hvars.clone(),
                terms
                    .iter()
                    .map(|(k, c)| (Monomial(crate::projkernel::unpack(*k, nh)), *c)),
            );
            p.dehomogenize(&homvar)
        })
        .collect::<Result<_, _>>()?;

    let mut rng = ChaCha8Rng::seed_from_u64(RESIDUAL_SEED);
    let gens_num: Vec<NumPoly> = gens.iter().map(Poly::to_num).collect();
    let psi_num = psi.to_num();
    let (mut worst, mut scale) = (0.0f64, 0.0f64);
    for _ in 0..RESIDUAL_POINTS {
        let z: Vec<Complex64> = (0..nh)
            .map(|_| {
                Complex64::new(
                    rng.sample::<f64, _>(StandardNormal),
                    rng.sample::<f64, _>(StandardNormal),
                )
            })
            .collect();
        let lhs = psi_num.evaluate(&z)?;
        let mut rhs = evaluate_homogeneous(&res, &z);
        for (g, qi) in gens_num.iter().zip(&qh) {
            rhs += g.evaluate(&z)? * evaluate_homogeneous(qi, &z);
        }
        worst = worst.max((lhs - rhs).norm());
        scale = scale.max(lhs.norm());
    }
    let decomposition_defect = if scale > 0.0 { worst / scale } else { worst };

    let residual = numeric_residual(problem, &q, RESIDUAL_POINTS, RESIDUAL_SEED)?;
    let solution_dimension = solution_dimension(problem, rho)?;
    let exact_distance = if solution_dimension == Some(0) {
        certify_module(problem, rho)?
            .certificate()
            .and_then(|c| c.exact_cofactors())
            .map(|exact| {
                exact
                    .iter()
                    .zip(&q)
                    .map(|(e, qn)| qn.max_coeff_distance(&e.to_num()))
                    .fold(0.0, f64::max)
            })
    } else {
        None
    };
    Ok(IntegralCertificate {
        certificate: Certificate {
            rho,
            cofactors: Cofactors::Numeric(q),
            theorem,
            residual: Some(residual),
        },
        kappa,
        eps,
        eps_auto,
        zero_set_empty,
        strategy: config.strategy,
        samples: config.samples,
        seed: config.seed,
        coefficients,
        residue,
        max_std_error,
        decomposition_defect,
        solution_dimension,
        exact_distance,
    })
}

/// One row of an `ε`-study.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct EpsRow {
    pub eps: f64,
    pub residual_max_abs: f64,
    pub residual_max_rel: f64,
    pub residue_norm: f64,
    pub max_std_error: f64,
    pub decomposition_defect: f64,
}

/// Residual of the `ε`-regularized cofactors along `config.eps_sequence`.
/// Every run uses the same seed, so the rows differ only through `ε`.
pub fn regularized_residual_study(
    problem: &MembershipProblem,
    rho: i64,
    config: &QuadConfig,
    store: &CalibrationStore,
) -> Result<Vec<EpsRow>, QuadError> {
    config.validate(problem.n())?;
    let seq = config
        .eps_sequence
        .clone()
        .ok_or_else(|| QuadError::Config("an eps sequence is required".into()))?;
    seq.iter()
        .map(|&e| {
            let cfg = config.clone().with_eps(Some(e));
            let cert = certify_integral(problem, rho, None, &cfg, store)?;
            let r = cert.residual();
            Ok(EpsRow {
                eps: e,
                residual_max_abs: r.max_abs,
                residual_max_rel: r.max_rel,
                residue_norm: cert.residue_norm(),
                max_std_error: cert.max_std_error,
                decomposition_defect: cert.decomposition_defect,
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::super::calibrate;
    use super::*;

    fn p(vars: &[&str], terms: &[(i64, &[u32])]) -> Poly {
        Poly::from_int_terms(vars, terms)
    }

    fn grid_store() -> CalibrationStore {
        let mut s = CalibrationStore::new();
        s.insert(calibrate(1, &QuadConfig::new(Strategy::ChartGrid, 4000, 0)).unwrap());
        s
    }

    #[test]
    fn nearest_rationals() {
        let r = nearest_rational(Complex64::new(0.6666667, -2.0), 64);
        assert_eq!(r.value, "2/3-2 i");
        assert!(r.distance < 1e-6);
        assert_eq!(
            nearest_rational(Complex64::new(-1.0000001, 0.0), 64).value,
            "-1"
        );
    }

    #[test]
    fn reproduces_linear_sections() {
        let store = grid_store();
        let cfg = QuadConfig::new(Strategy::ChartGrid, 20_000, 0);
        let psi = p(&["z0", "z1"], &[(2, &[1, 0]), (-1, &[0, 1])]);
        let z = [Complex64::new(0.3, -1.2), Complex64::new(0.7, 0.4)];
        let got = reproduce_section(&psi, 2, &z, &cfg, &store).unwrap();
        let want = psi.to_num().evaluate(&z).unwrap();
        assert!(
            (got.value - want).norm() < 1e-8 * want.norm(),
            "{} vs {want}",
            got.value
        );
        assert!(matches!(
            reproduce_section(&psi, 3, &z, &cfg, &store),
            Err(QuadError::Kernel(_))
        ));
        assert!(matches!(
            reproduce_section(&psi, 2, &z, &cfg, &CalibrationStore::new()),
            Err(QuadError::NotCalibrated { .. })
        ));
    }

    #[test]
    fn linear_pair_recovers_unique_cofactors() {
        let problem = MembershipProblem::ideal(
            &[p(&["x"], &[(1, &[1])]), p(&["x"], &[(1, &[1]), (-1, &[0])])],
            &p(&["x"], &[(1, &[0])]),
        )
        .unwrap();
        let cfg = QuadConfig::new(Strategy::ChartGrid, 20_000, 0);
        let cert = certify_integral(&problem, 1, None, &cfg, &grid_store()).unwrap();
        assert!(cert.zero_set_empty);
        assert_eq!(cert.eps, None);
        assert_eq!(cert.solution_dimension, Some(0));
        let q = cert.cofactors();
        let one = Monomial(vec![0]);
        assert!((q[0].coeff(&one) - 1.0).norm() < 1e-6, "{}", q[0]);
        assert!((q[1].coeff(&one) + 1.0).norm() < 1e-6, "{}", q[1]);
        assert!(cert.exact_distance.unwrap() < 1e-6);
        assert!(cert.decomposition_defect < 1e-6);
        assert!(cert.residue_norm() < 1e-8);
    }

    #[test]
    fn refuses_without_calibration() {
        let problem =
            MembershipProblem::ideal(&[p(&["x"], &[(1, &[1])])], &p(&["x"], &[(1, &[1])])).unwrap();
        let cfg = QuadConfig::new(Strategy::ChartGrid, 100, 0);
        let e = certify_integral(&problem, 1, None, &cfg, &CalibrationStore::new());
        assert!(matches!(e, Err(QuadError::NotCalibrated { n: 1, .. })));
    }
}
