//! Degree-bound calculators for ideal and module membership, and the
//! global solvability test for the Koszul complex.
//!
//! `ν∞` (the order of contact of the zero set with the hyperplane at
//! infinity) is never computed here: it is either supplied by the caller or
//! replaced by its upper bound [`hickel_n`].

use std::fmt;
use std::str::FromStr;

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum BoundsError {
    #[error("invalid profile: {0}")]
    InvalidProfile(String),
    #[error("{theorem} does not apply: {reason}")]
    NotApplicable { theorem: Theorem, reason: String },
    #[error("unknown theorem `{0}` (expected thm12, thm13, thm14 or macaulay)")]
    UnknownTheorem(String),
}

/// Which degree estimate to evaluate.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Theorem {
    /// Integral-closure (Briançon–Skoda type) hypothesis.
    Thm12,
    /// `codim Z ≥ m` and Φ in the ideal.
    Thm13,
    /// Submodules of `ℂ[z]^r`.
    Thm14,
    /// Classical Macaulay / Max Noether estimate, i.e. `ν∞ = 0`.
    MacaulayNoether,
}

impl fmt::Display for Theorem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Theorem::Thm12 => "thm12",
            Theorem::Thm13 => "thm13",
            Theorem::Thm14 => "thm14",
            Theorem::MacaulayNoether => "macaulay_noether",
        })
    }
}

impl FromStr for Theorem {
    type Err = BoundsError;
    fn from_str(s: &str) -> Result<Self, BoundsError> {
        match s.to_ascii_lowercase().as_str() {
            "thm12" | "1.2" => Ok(Theorem::Thm12),
            "thm13" | "1.3" => Ok(Theorem::Thm13),
            "thm14" | "1.4" => Ok(Theorem::Thm14),
            "macaulay" | "noether" | "macaulay_noether" | "macaulay-noether" => {
                Ok(Theorem::MacaulayNoether)
            }
            _ => Err(BoundsError::UnknownTheorem(s.to_string())),
        }
    }
}

/// The numeric data every bound is a function of.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SystemProfile {
    /// Affine dimension.
    pub n: usize,
    /// Number of generators (columns).
    pub m: usize,
    /// Module rank; 1 for ideals.
    pub r: usize,
    /// Generator degrees, sorted non-increasing.
    pub degrees: Vec<u32>,
    pub deg_phi: u32,
    pub nu_inf: Option<BigRational>,
}

impl SystemProfile {
    /// Validates and sorts the degrees.
    pub fn new(
        n: usize,
        r: usize,
        mut degrees: Vec<u32>,
        deg_phi: u32,
        nu_inf: Option<BigRational>,
    ) -> Result<Self, BoundsError> {
        if n == 0 {
            return Err(BoundsError::InvalidProfile("n must be at least 1".into()));
        }
        if r == 0 {
            return Err(BoundsError::InvalidProfile("r must be at least 1".into()));
        }
        if degrees.is_empty() {
            return Err(BoundsError::InvalidProfile(
                "at least one generator is required".into(),
            ));
        }
        if degrees.contains(&0) {
            return Err(BoundsError::InvalidProfile(
                "generator degrees must be positive".into(),
            ));
        }
        if nu_inf.as_ref().is_some_and(|v| v.is_negative()) {
            return Err(BoundsError::InvalidProfile(
                "nu_inf must be non-negative".into(),
            ));
        }
        degrees.sort_unstable_by(|a, b| b.cmp(a));
        Ok(SystemProfile {
            n,
            m: degrees.len(),
            r,
            degrees,
            deg_phi,
            nu_inf,
        })
    }

    pub fn ideal(n: usize, degrees: Vec<u32>, deg_phi: u32) -> Result<Self, BoundsError> {
        SystemProfile::new(n, 1, degrees, deg_phi, None)
    }

    pub fn with_nu_inf(mut self, nu: BigRational) -> Result<Self, BoundsError> {
        if nu.is_negative() {
            return Err(BoundsError::InvalidProfile(
                "nu_inf must be non-negative".into(),
            ));
        }
        self.nu_inf = Some(nu);
        Ok(self)
    }

    /// `d₁ + ⋯ + d_k`, clamped to the available generators.
    pub fn leading_degree_sum(&self, k: usize) -> i64 {
        self.degrees.iter().take(k).map(|&d| d as i64).sum()
    }

    /// Kollár's caveat `dᵢ ≠ 2`, reported but never enforced.
    pub fn has_degree_two(&self) -> bool {
        self.degrees.contains(&2)
    }
}

fn product(ds: &[u32]) -> BigInt {
    ds.iter()
        .fold(BigInt::one(), |acc, &d| acc * BigInt::from(d))
}

/// `N_ko`: `d₁⋯d_m` if `m ≤ n`, otherwise `d₁⋯d_{n−1}·d_m`.
pub fn kollar_n(p: &SystemProfile) -> BigInt {
    if p.m <= p.n {
        product(&p.degrees)
    } else {
        product(&p.degrees[..p.n - 1]) * BigInt::from(p.degrees[p.m - 1])
    }
}

/// `N_hi`: `d₁⋯d_m` if `m ≤ n`, otherwise `min(d₁ⁿ, d₁⋯d_m / d_m^{m−n})`.
///
/// The quotient need not be an integer for arbitrary sorted degrees
/// (e.g. `n = 1, d = (3, 3, 2)` gives 9/2), so the value is exact rational.
pub fn hickel_n(p: &SystemProfile) -> BigRational {
    if p.m <= p.n {
        return BigRational::from_integer(product(&p.degrees));
    }
    let d1 = BigInt::from(p.degrees[0]);
    let first = BigRational::from_integer(num_traits::pow(d1, p.n));
    let head = product(&p.degrees[..p.n]);
    let tail = product(&p.degrees[p.n..]);
    let dm = BigInt::from(p.degrees[p.m - 1]);
    let second = BigRational::new(head * tail, num_traits::pow(dm, p.m - p.n));
    first.min(second)
}

/// `ν∞` when supplied, otherwise the fallback `ν∞ ≤ N_hi`.
pub fn nu_inf_or_fallback(p: &SystemProfile) -> BigRational {
    p.nu_inf.clone().unwrap_or_else(|| hickel_n(p))
}

/// Exact ceiling of a rational.
pub fn ceil_rational(x: &BigRational) -> BigInt {
    let (q, r) = x.numer().div_mod_floor(x.denom());
    if r.is_zero() {
        q
    } else {
        q + 1
    }
}

/// Koszul-complex solvability condition: `m ≤ n` or `ρ − (d₁+⋯+d_{n+1}) ≥ −n`.
pub fn check_global_solvability(rho: i64, p: &SystemProfile) -> bool {
    p.m <= p.n || rho - p.leading_degree_sum(p.n + 1) >= -(p.n as i64)
}

/// Named intermediate values of a bound evaluation.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct FormulaTerms {
    pub kollar_n: String,
    pub hickel_n: String,
    /// `ν` used in the formula (after fallback / forced zero).
    pub nu: String,
    pub nu_source: NuSource,
    /// Multiplier of `ν` (e.g. `min(m, n)`).
    pub nu_multiplier: usize,
    /// `deg Φ + ⌈multiplier·ν⌉`.
    pub phi_term: i64,
    /// Number of leading degrees summed.
    pub degree_sum_len: usize,
    /// `d₁ + ⋯ + d_len − n`.
    pub degree_sum_term: i64,
    pub kollar_degree_two_caveat: bool,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum NuSource {
    Supplied,
    HickelFallback,
    ForcedZero,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BoundReport {
    pub theorem: Theorem,
    pub rho: i64,
    pub formula_terms: FormulaTerms,
    pub solvable_globally: bool,
}

/// Degree bound `ρ` for `deg(FᵢQᵢ)` under the chosen estimate.
pub fn rho_for(theorem: Theorem, p: &SystemProfile) -> Result<BoundReport, BoundsError> {
    let (n, m, r) = (p.n, p.m, p.r);
    let (nu, source) = match theorem {
        Theorem::MacaulayNoether => (BigRational::zero(), NuSource::ForcedZero),
        _ => match &p.nu_inf {
            Some(v) => (v.clone(), NuSource::Supplied),
            None => (hickel_n(p), NuSource::HickelFallback),
        },
    };
    let (multiplier, sum_len) = match theorem {
        Theorem::Thm12 => {
            if r != 1 {
                return Err(BoundsError::NotApplicable {
                    theorem,
                    reason: "ideal estimate requested for a module (use thm14)".into(),
                });
            }
            (m.min(n), m.min(n + 1))
        }
        Theorem::Thm13 => {
            if r != 1 {
                return Err(BoundsError::NotApplicable {
                    theorem,
                    reason: "ideal estimate requested for a module (use thm14)".into(),
                });
            }
            if m > n {
                return Err(BoundsError::NotApplicable {
                    theorem,
                    reason: format!("codim Z ≥ m is impossible with m = {m} > n = {n}"),
                });
            }
            (m, m)
        }
        Theorem::Thm14 => {
            if m < r {
                return Err(BoundsError::NotApplicable {
                    theorem,
                    reason: format!(
                        "an r × m map with m = {m} < r = {r} is never generically surjective"
                    ),
                });
            }
            (n.min(m - r + 1), m.min(n + r))
        }
        Theorem::MacaulayNoether => (m.min(n), m.min(n + r)),
    };
    let scaled = &nu * BigRational::from_integer(BigInt::from(multiplier));
    let ceil = ceil_rational(&scaled)
        .to_i64()
        .ok_or_else(|| BoundsError::InvalidProfile("ν∞ multiple does not fit in 64 bits".into()))?;
    let phi_term = p.deg_phi as i64 + ceil;
    let degree_sum_term = p.leading_degree_sum(sum_len) - n as i64;
    let rho = phi_term.max(degree_sum_term);
    Ok(BoundReport {
        theorem,
        rho,
        formula_terms: FormulaTerms {
            kollar_n: kollar_n(p).to_string(),
            hickel_n: fmt_rational(&hickel_n(p)),
            nu: fmt_rational(&nu),
            nu_source: source,
            nu_multiplier: multiplier,
            phi_term,
            degree_sum_len: sum_len,
            degree_sum_term,
            kollar_degree_two_caveat: p.has_degree_two(),
        },
        solvable_globally: check_global_solvability(rho, p),
    })
}

pub(crate) fn fmt_rational(r: &BigRational) -> String {
    if r.is_integer() {
        r.numer().to_string()
    } else {
        format!("{}/{}", r.numer(), r.denom())
    }
}

/// Parses a non-negative rational written `p` or `p/q`.
pub fn parse_rational(s: &str) -> Result<BigRational, BoundsError> {
    let bad = || BoundsError::InvalidProfile(format!("`{s}` is not a rational p/q"));
    let v: crate::polyring::GaussRational = s.parse().map_err(|_| bad())?;
    if !v.is_real() {
        return Err(bad());
    }
    Ok(v.re)
}
