//! Exact membership certificates.
//!
//! `Σ_j F^j Q_j = Φ` with `deg(F^j Q_j) ≤ ρ` is equivalent to the homogeneous
//! identity `Σ_j f^j q_j = z₀^{ρ − deg Φ} φ` with `q_j` homogeneous of degree
//! `ρ − d_j`. The unknown coefficients of the `q_j` enter linearly, so the
//! question is decided by exact elimination.

mod linsolve;

pub use linsolve::{solve_augmented, Reduction};

use std::collections::HashMap;

use num_complex::Complex64;
use num_traits::Zero;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::bounds::{check_global_solvability, SystemProfile, Theorem};
use crate::polyring::{GaussRational, Monomial, NumPoly, Poly, PolyError};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SolverError {
    #[error(transparent)]
    Poly(#[from] PolyError),
    #[error("problem shape: {0}")]
    Shape(String),
    #[error("rho = {rho} is below deg Φ = {deg_phi}")]
    RhoBelowTarget { rho: i64, deg_phi: u32 },
}

/// `r × m` module membership problem over an affine ring.
///
/// `columns[j][i]` is entry `(i, j)` of the generator matrix; column `j` is
/// homogenized with degree `degrees[j]`.
#[derive(Clone, Debug, PartialEq)]
pub struct MembershipProblem {
    vars: Vec<String>,
    columns: Vec<Vec<Poly>>,
    degrees: Vec<u32>,
    target: Vec<Poly>,
}

impl MembershipProblem {
    /// Ideal membership of `phi` in `(generators)`, degrees taken as actual degrees.
    pub fn ideal(generators: &[Poly], phi: &Poly) -> Result<Self, SolverError> {
        let columns = generators.iter().map(|g| vec![g.clone()]).collect();
        MembershipProblem::module(columns, vec![phi.clone()], None)
    }

    /// Module membership; `degrees` overrides the column degrees when given
    /// (each must be at least the actual column degree).
    pub fn module(
        columns: Vec<Vec<Poly>>,
        target: Vec<Poly>,
        degrees: Option<Vec<u32>>,
    ) -> Result<Self, SolverError> {
        if columns.is_empty() {
            return Err(SolverError::Shape(
                "at least one generator is required".into(),
            ));
        }
        let r = target.len();
        if r == 0 || columns.iter().any(|c| c.len() != r) {
            return Err(SolverError::Shape(format!(
                "every column must have {r} entries"
            )));
        }
        // common ring in order of first appearance
        let mut vars: Vec<String> = Vec::new();
        for p in columns.iter().flatten().chain(&target) {
            for v in p.vars() {
                if !vars.contains(v) {
                    vars.push(v.clone());
                }
            }
        }
        if vars.is_empty() {
            return Err(SolverError::Shape("the ring has no variables".into()));
        }
        let embed = |p: &Poly| p.embed(&vars);
        let columns: Vec<Vec<Poly>> = columns
            .iter()
            .map(|c| c.iter().map(embed).collect::<Result<_, _>>())
            .collect::<Result<_, _>>()?;
        let target: Vec<Poly> = target.iter().map(embed).collect::<Result<_, _>>()?;
        let actual: Vec<u32> = columns
            .iter()
            .map(|c| c.iter().filter_map(Poly::degree).max().unwrap_or(0))
            .collect();
        let degrees = match degrees {
            None => actual,
            Some(d) => {
                if d.len() != columns.len() {
                    return Err(SolverError::Shape(
                        "one declared degree per generator".into(),
                    ));
                }
                if let Some(j) = (0..d.len()).find(|&j| d[j] < actual[j]) {
                    return Err(SolverError::Shape(format!(
                        "declared degree {} of generator {} is below its actual degree {}",
                        d[j], j, actual[j]
                    )));
                }
                d
            }
        };
        if degrees.contains(&0) {
            return Err(SolverError::Shape(
                "constant generators are not supported".into(),
            ));
        }
        Ok(MembershipProblem {
            vars,
            columns,
            degrees,
            target,
        })
    }

    pub fn vars(&self) -> &[String] {
        &self.vars
    }

    pub fn n(&self) -> usize {
        self.vars.len()
    }

    pub fn m(&self) -> usize {
        self.columns.len()
    }

    pub fn r(&self) -> usize {
        self.target.len()
    }

    pub fn degrees(&self) -> &[u32] {
        &self.degrees
    }

    pub fn columns(&self) -> &[Vec<Poly>] {
        &self.columns
    }

    pub fn target(&self) -> &[Poly] {
        &self.target
    }

    /// Generators of an ideal problem (`r = 1`).
    pub fn generators(&self) -> Vec<Poly> {
        self.columns.iter().map(|c| c[0].clone()).collect()
    }

    pub fn deg_phi(&self) -> u32 {
        self.target
            .iter()
            .filter_map(Poly::degree)
            .max()
            .unwrap_or(0)
    }

    pub fn profile(
        &self,
        nu_inf: Option<num_rational::BigRational>,
    ) -> Result<SystemProfile, crate::bounds::BoundsError> {
        SystemProfile::new(
            self.n(),
            self.r(),
            self.degrees.clone(),
            self.deg_phi(),
            nu_inf,
        )
    }

    /// Name of the homogenizing coordinate: `z0` unless the ring uses it.
    pub fn homvar(&self) -> String {
        let mut name = "z0".to_string();
        while self.vars.contains(&name) {
            name.push('_');
        }
        name
    }

    /// Homogenized generator matrix, column-major.
    pub fn homogeneous_columns(&self) -> Result<Vec<Vec<Poly>>, SolverError> {
        let h = self.homvar();
        self.columns
            .iter()
            .zip(&self.degrees)
            .map(|(c, &d)| c.iter().map(|p| Ok(p.homogenize(d, &h)?)).collect())
            .collect()
    }

    /// `z₀^{ρ − deg Φ} φ`, componentwise.
    pub fn homogeneous_target(&self, rho: i64) -> Result<Vec<Poly>, SolverError> {
        let deg_phi = self.deg_phi();
        if rho < deg_phi as i64 {
            return Err(SolverError::RhoBelowTarget { rho, deg_phi });
        }
        let h = self.homvar();
        self.target
            .iter()
            .map(|p| Ok(p.homogenize(rho as u32, &h)?))
            .collect()
    }
}

/// Exact or numeric cofactors `Q_j` (dehomogenized).
#[derive(Clone, Debug, PartialEq)]
pub enum Cofactors {
    Exact(Vec<Poly>),
    Numeric(Vec<NumPoly>),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    Exact,
    Numeric,
}

/// Residual `|Σ F^j Q_j − Φ|` sampled at random affine points.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ResidualStats {
    pub max_abs: f64,
    /// `max_abs / max |Φ|` over the same points.
    pub max_rel: f64,
    pub phi_scale: f64,
    pub samples: usize,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Certificate {
    pub rho: i64,
    pub cofactors: Cofactors,
    pub theorem: Option<Theorem>,
    pub residual: Option<ResidualStats>,
}

impl Certificate {
    pub fn mode(&self) -> Mode {
        match self.cofactors {
            Cofactors::Exact(_) => Mode::Exact,
            Cofactors::Numeric(_) => Mode::Numeric,
        }
    }

    pub fn exact_cofactors(&self) -> Option<&[Poly]> {
        match &self.cofactors {
            Cofactors::Exact(q) => Some(q),
            Cofactors::Numeric(_) => None,
        }
    }
}

/// Why a solve at a fixed `ρ` has no solution. The hypotheses of the degree
/// theorems (Φ in the ideal, codimension) are not decidable here; the list
/// records only what was checked.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct InfeasibleReport {
    pub rho: i64,
    pub unknowns: usize,
    pub equations: usize,
    pub rank: usize,
    pub augmented_rank: usize,
    pub checklist: Vec<HypothesisCheck>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct HypothesisCheck {
    pub name: String,
    pub holds: bool,
}

#[derive(Clone, Debug, PartialEq)]
pub enum Outcome {
    Feasible(Certificate),
    Infeasible(InfeasibleReport),
}

impl Outcome {
    pub fn certificate(&self) -> Option<&Certificate> {
        match self {
            Outcome::Feasible(c) => Some(c),
            Outcome::Infeasible(_) => None,
        }
    }

    pub fn is_feasible(&self) -> bool {
        matches!(self, Outcome::Feasible(_))
    }
}

/// The coefficient system of the homogeneous identity at a fixed `ρ`.
struct LinearSystem {
    /// `(column, monomial)` of every unknown, in elimination order.
    unknowns: Vec<(usize, Monomial)>,
    rows: Vec<Vec<GaussRational>>,
}

fn build_system(problem: &MembershipProblem, rho: i64) -> Result<LinearSystem, SolverError> {
    let hcols = problem.homogeneous_columns()?;
    let target = problem.homogeneous_target(rho)?;
    let nh = problem.n() + 1;
    let mut unknowns = Vec::new();
    for (j, &d) in problem.degrees.iter().enumerate() {
        if rho >= d as i64 {
            for mono in Monomial::all_of_degree(nh, (rho - d as i64) as u32) {
                unknowns.push((j, mono));
            }
        }
    }
    let row_monos = Monomial::all_of_degree(nh, rho as u32);
    let r = problem.r();
    let nmono = row_monos.len();
    let mut row_index: HashMap<(usize, &Monomial), usize> = HashMap::new();
    for i in 0..r {
        for (k, m) in row_monos.iter().enumerate() {
            row_index.insert((i, m), i * nmono + k);
        }
    }
    let width = unknowns.len() + 1;
    let mut rows = vec![vec![GaussRational::zero(); width]; r * row_monos.len()];
    for (u, (j, mono)) in unknowns.iter().enumerate() {
        for (i, entry) in hcols[*j].iter().enumerate() {
            for (fm, c) in entry.terms() {
                let prod = fm.mul(mono);
                let row = row_index[&(i, &prod)];
                rows[row][u] += c;
            }
        }
    }
    for (i, t) in target.iter().enumerate() {
        for (m, c) in t.terms() {
            let row = row_index[&(i, m)];
            rows[row][width - 1] += c;
        }
    }
    Ok(LinearSystem { unknowns, rows })
}

fn checklist(problem: &MembershipProblem, rho: i64) -> Vec<HypothesisCheck> {
    let mut out = vec![
        HypothesisCheck {
            name: "rho >= deg Φ".into(),
            holds: rho >= problem.deg_phi() as i64,
        },
        HypothesisCheck {
            name: "rho >= max d_j (otherwise some q_j are forced to 0)".into(),
            holds: problem.degrees.iter().all(|&d| rho >= d as i64),
        },
    ];
    if let Ok(p) = problem.profile(None) {
        out.push(HypothesisCheck {
            name: "Koszul global solvability at rho".into(),
            holds: check_global_solvability(rho, &p),
        });
    }
    out
}

/// Solves `Σ_j F^j Q_j = Φ` componentwise with `deg(F^j Q_j) ≤ ρ`.
pub fn certify_module(problem: &MembershipProblem, rho: i64) -> Result<Outcome, SolverError> {
    let sys = build_system(problem, rho)?;
    let equations = sys.rows.len();
    let nunk = sys.unknowns.len();
    let red = solve_augmented(sys.rows, nunk);
    let Some(x) = red.solution else {
        return Ok(Outcome::Infeasible(InfeasibleReport {
            rho,
            unknowns: nunk,
            equations,
            rank: red.rank,
            augmented_rank: red.augmented_rank,
            checklist: checklist(problem, rho),
        }));
    };
    let h = problem.homvar();
    let mut hvars = vec![h.clone()];
    hvars.extend(problem.vars.iter().cloned());
    let mut q: Vec<Poly> = (0..problem.m())
        .map(|_| Poly::zero(hvars.clone()))
        .collect::<Result<_, _>>()?;
    for ((j, mono), c) in sys.unknowns.into_iter().zip(x) {
        q[j].add_term(mono, c);
    }
    let cofactors = q
        .iter()
        .map(|qj| Ok(qj.dehomogenize(&h)?.embed(&problem.vars)?))
        .collect::<Result<Vec<_>, SolverError>>()?;
    Ok(Outcome::Feasible(Certificate {
        rho,
        cofactors: Cofactors::Exact(cofactors),
        theorem: None,
        residual: None,
    }))
}

/// Ideal case of [`certify_module`].
pub fn certify_exact(generators: &[Poly], phi: &Poly, rho: i64) -> Result<Outcome, SolverError> {
    certify_module(&MembershipProblem::ideal(generators, phi)?, rho)
}

/// Dimension of the affine space of solutions at `ρ`, `None` if infeasible.
/// A value of 0 means the certificate at this `ρ` is unique.
pub fn solution_dimension(
    problem: &MembershipProblem,
    rho: i64,
) -> Result<Option<usize>, SolverError> {
    let sys = build_system(problem, rho)?;
    let nunk = sys.unknowns.len();
    let red = solve_augmented(sys.rows, nunk);
    Ok(red.solution.is_some().then(|| red.nullity(nunk)))
}

/// Whether the homogenized generators (first row for modules) have no
/// common zero in `ℙⁿ`.
///
/// Decided by one rank computation: `Z = ∅` exactly when the ideal contains
/// every form of degree `D = d₁ + ⋯ + d_{n+1} − n`, degrees sorted
/// decreasingly. With fewer than `n + 1` generators `Z` is never empty.
pub fn projective_zero_set_empty(problem: &MembershipProblem) -> Result<bool, SolverError> {
    let n = problem.n();
    let m = problem.m();
    if m < n + 1 {
        return Ok(false);
    }
    let mut degs = problem.degrees.clone();
    degs.sort_unstable_by(|a, b| b.cmp(a));
    let big: i64 = degs[..=n].iter().map(|&d| d as i64).sum::<i64>() - n as i64;
    let target = big.max(0) as u32;
    let hcols = problem.homogeneous_columns()?;
    let nh = n + 1;
    let row_monos = Monomial::all_of_degree(nh, target);
    let index: HashMap<&Monomial, usize> =
        row_monos.iter().enumerate().map(|(k, m)| (m, k)).collect();
    let mut unknowns = 0;
    let mut cols: Vec<Vec<(usize, GaussRational)>> = Vec::new();
    for (j, &d) in problem.degrees.iter().enumerate() {
        if d > target {
            continue;
        }
        for mono in Monomial::all_of_degree(nh, target - d) {
            let col = hcols[j][0]
                .terms()
                .map(|(fm, c)| (index[&fm.mul(&mono)], c.clone()))
                .collect();
            cols.push(col);
            unknowns += 1;
        }
    }
    let mut rows = vec![vec![GaussRational::zero(); unknowns + 1]; row_monos.len()];
    for (u, col) in cols.into_iter().enumerate() {
        for (r, c) in col {
            rows[r][u] += &c;
        }
    }
    Ok(solve_augmented(rows, unknowns).rank == row_monos.len())
}

/// Smallest `ρ ∈ [deg Φ, rho_max]` at which the exact solve is feasible.
pub fn minimal_rho(problem: &MembershipProblem, rho_max: i64) -> Result<Option<i64>, SolverError> {
    let lo = problem.deg_phi() as i64;
    for rho in lo..=rho_max {
        if certify_module(problem, rho)?.is_feasible() {
            return Ok(Some(rho));
        }
    }
    Ok(None)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct VerifyReport {
    pub mode: Mode,
    /// Exact identity check (exact certificates only).
    pub exact_equality: Option<bool>,
    /// `max_j deg(F^j Q_j)`; `None` when every product vanishes.
    pub max_degree: Option<u32>,
    pub bound_satisfied: bool,
    pub residual: Option<ResidualStats>,
}

impl VerifyReport {
    pub fn passed(&self) -> bool {
        self.bound_satisfied && self.exact_equality.unwrap_or(true)
    }
}

fn product_degree(col: &[Poly], q_deg: Option<u32>) -> Option<u32> {
    let cdeg = col.iter().filter_map(Poly::degree).max()?;
    Some(cdeg + q_deg?)
}

/// Rechecks a certificate against the problem.
///
/// Exact certificates are checked by exact expansion; numeric ones by the
/// residual over 20 seeded random points.
pub fn verify_certificate(
    problem: &MembershipProblem,
    cert: &Certificate,
) -> Result<VerifyReport, SolverError> {
    let m = problem.m();
    match &cert.cofactors {
        Cofactors::Exact(q) => {
            if q.len() != m {
                return Err(SolverError::Shape(format!(
                    "{} cofactors for {} generators",
                    q.len(),
                    m
                )));
            }
            let mut equal = true;
            for i in 0..problem.r() {
                let mut acc = Poly::zero(problem.vars.clone())?;
                for (col, qj) in problem.columns.iter().zip(q) {
                    acc = &acc + &(&col[i] * qj);
                }
                let diff = &acc - &problem.target[i];
                equal &= diff.is_zero();
            }
            let max_degree = problem
                .columns
                .iter()
                .zip(q)
                .filter_map(|(c, qj)| product_degree(c, qj.degree()))
                .max();
            Ok(VerifyReport {
                mode: Mode::Exact,
                exact_equality: Some(equal),
                max_degree,
                bound_satisfied: max_degree.is_none_or(|d| d as i64 <= cert.rho),
                residual: None,
            })
        }
        Cofactors::Numeric(q) => {
            if q.len() != m {
                return Err(SolverError::Shape(format!(
                    "{} cofactors for {} generators",
                    q.len(),
                    m
                )));
            }
            let max_degree = problem
                .columns
                .iter()
                .zip(q)
                .filter_map(|(c, qj)| product_degree(c, qj.degree()))
                .max();
            let residual = numeric_residual(problem, q, 20, 0x5eed)?;
            Ok(VerifyReport {
                mode: Mode::Numeric,
                exact_equality: None,
                max_degree,
                bound_satisfied: max_degree.is_none_or(|d| d as i64 <= cert.rho),
                residual: Some(residual),
            })
        }
    }
}

/// `max |Σ_j F^j(x) Q_j(x) − Φ(x)|` over `samples` complex Gaussian points.
pub fn numeric_residual(
    problem: &MembershipProblem,
    q: &[NumPoly],
    samples: usize,
    seed: u64,
) -> Result<ResidualStats, SolverError> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = problem.n();
    let cols: Vec<Vec<NumPoly>> = problem
        .columns
        .iter()
        .map(|c| c.iter().map(Poly::to_num).collect())
        .collect();
    let target: Vec<NumPoly> = problem.target.iter().map(Poly::to_num).collect();
    let (mut max_abs, mut phi_scale) = (0.0f64, 0.0f64);
    for _ in 0..samples {
        let x: Vec<Complex64> = (0..n)
            .map(|_| Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)))
            .collect();
        for (i, t) in target.iter().enumerate() {
            let phi = t.evaluate(&x)?;
            let mut acc = Complex64::zero();
            for (col, qj) in cols.iter().zip(q) {
                acc += col[i].evaluate(&x)? * qj.evaluate(&x)?;
            }
            max_abs = max_abs.max((acc - phi).norm());
            phi_scale = phi_scale.max(phi.norm());
        }
    }
    Ok(ResidualStats {
        max_abs,
        max_rel: if phi_scale > 0.0 {
            max_abs / phi_scale
        } else {
            max_abs
        },
        phi_scale,
        samples,
    })
}
