//! Hefer divided differences `f(w) − f(z) = Σ_k (w_k − z_k)·h̃_k(w, z)`.
//!
//! The coefficients are built by telescoping, swapping one coordinate at a
//! time in the order `k = 0, 1, …, n`:
//!
//! ```text
//! h̃_k = [f(z₀..z_{k−1}, w_k, …, w_n) − f(z₀..z_k, w_{k+1}, …, w_n)] / (w_k − z_k)
//! ```
//!
//! For a monomial the quotient is the complete homogeneous sum
//! `Σ_{a+b=e−1} w_k^a z_k^b`, so no polynomial division is needed.
//!
//! Tables store polynomials `h̃_k` normalized so that the plain identity above
//! holds. The kernel objects carry an extra factor `(2πi)^{normalization}`
//! (here always `−1`, because contraction with `2πi Σ (w_k − z_k) ∂/∂w_k`
//! reproduces the difference); that factor is resolved numerically only in
//! the kernel evaluation.

use serde::Serialize;
use thiserror::Error;

use crate::polyring::{GaussRational, Monomial, Poly, PolyError};

/// Power of `2πi` relating stored coefficients to the contracted forms.
pub const HEFER_TWO_PI_I_POWER: i32 = -1;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum HeferError {
    #[error("generator {0} is not homogeneous")]
    NotHomogeneous(usize),
    #[error("generators live in different rings")]
    RingMismatch,
    #[error(transparent)]
    Poly(#[from] PolyError),
}

/// Divided-difference coefficients of one homogeneous generator.
#[derive(Clone, Debug, PartialEq)]
pub struct HeferRow {
    /// Degree of the generator.
    pub degree: u32,
    /// `h̃_k` for `k = 0..=n`, polynomials in `(w₀..w_n, z₀..z_n)`.
    pub coeffs: Vec<Poly>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct HeferTable {
    /// Names of the homogeneous coordinates `z₀..z_n` of the generators.
    pub base_vars: Vec<String>,
    pub rows: Vec<HeferRow>,
    /// Stored value × `(2πi)^normalization` is the contracted form.
    pub normalization: i32,
}

impl HeferTable {
    /// Number of homogeneous coordinates, `n + 1`.
    pub fn width(&self) -> usize {
        self.base_vars.len()
    }

    /// Variable names of the doubled ring: `w_…` then `z_…`.
    pub fn doubled_vars(&self) -> Vec<String> {
        doubled_vars(&self.base_vars)
    }
}

fn doubled_vars(base: &[String]) -> Vec<String> {
    base.iter()
        .map(|v| format!("w_{v}"))
        .chain(base.iter().map(|v| format!("z_{v}")))
        .collect()
}

fn hefer_row(f: &Poly) -> Result<HeferRow, HeferError> {
    let width = f.nvars();
    let dvars = doubled_vars(f.vars());
    let degree = f.degree().unwrap_or(0);
    let mut coeffs: Vec<Poly> = (0..width)
        .map(|_| Poly::zero(dvars.clone()))
        .collect::<Result<_, _>>()?;
    for (mono, c) in f.terms() {
        let e = &mono.0;
        for k in 0..width {
            if e[k] == 0 {
                continue;
            }
            // z-coordinates before k, w-coordinates after k
            let mut base = vec![0u32; 2 * width];
            base[width..width + k].copy_from_slice(&e[..k]);
            base[k + 1..width].copy_from_slice(&e[k + 1..width]);
            for a in 0..e[k] {
                let mut exps = base.clone();
                exps[k] += a;
                exps[width + k] += e[k] - 1 - a;
                coeffs[k].add_term(Monomial(exps), c.clone());
            }
        }
    }
    Ok(HeferRow { degree, coeffs })
}

/// Builds the Hefer table of a tuple of homogeneous polynomials over a
/// common ring.
pub fn hefer_tuple(f: &[Poly]) -> Result<HeferTable, HeferError> {
    let base_vars = f.first().map(|p| p.vars().to_vec()).unwrap_or_default();
    let mut rows = Vec::with_capacity(f.len());
    for (j, p) in f.iter().enumerate() {
        if p.vars() != base_vars.as_slice() {
            return Err(HeferError::RingMismatch);
        }
        if !p.is_homogeneous() {
            return Err(HeferError::NotHomogeneous(j));
        }
        rows.push(hefer_row(p)?);
    }
    Ok(HeferTable {
        base_vars,
        rows,
        normalization: HEFER_TWO_PI_I_POWER,
    })
}

/// `f(w)` and `f(z)` as polynomials over the doubled ring.
fn doubled_images(f: &Poly, dvars: &[String]) -> Result<(Poly, Poly), PolyError> {
    let width = f.nvars();
    let w: Vec<Poly> = (0..width)
        .map(|k| Poly::var(dvars.to_vec(), &dvars[k]))
        .collect::<Result<_, _>>()?;
    let z: Vec<Poly> = (0..width)
        .map(|k| Poly::var(dvars.to_vec(), &dvars[width + k]))
        .collect::<Result<_, _>>()?;
    Ok((f.compose(&w)?, f.compose(&z)?))
}

/// Checks `Σ_k (w_k − z_k)·h̃_k = f(w) − f(z)` exactly, and that every
/// nonzero `h̃_k` is homogeneous of degree `deg f − 1`.
pub fn verify_hefer(table: &HeferTable, f: &[Poly]) -> Result<bool, HeferError> {
    if table.rows.len() != f.len() {
        return Ok(false);
    }
    let dvars = table.doubled_vars();
    let width = table.width();
    for (row, p) in table.rows.iter().zip(f) {
        if p.vars() != table.base_vars.as_slice() || row.coeffs.len() != width {
            return Ok(false);
        }
        let (fw, fz) = doubled_images(p, &dvars)?;
        let mut lhs = Poly::zero(dvars.clone())?;
        for (k, h) in row.coeffs.iter().enumerate() {
            let diff = &Poly::var(dvars.clone(), &dvars[k])?
                - &Poly::var(dvars.clone(), &dvars[width + k])?;
            lhs = &lhs + &(&diff * h);
        }
        if lhs != &fw - &fz {
            return Ok(false);
        }
        let expected = p.degree().map(|d| d.saturating_sub(1));
        for h in &row.coeffs {
            if h.is_zero() {
                continue;
            }
            if !h.is_homogeneous() || h.degree() != expected {
                return Ok(false);
            }
        }
    }
    Ok(true)
}

/// JSON view of a table: polynomial entries in the canonical term format.
#[derive(Serialize)]
pub struct HeferTableJson {
    pub base_vars: Vec<String>,
    pub doubled_vars: Vec<String>,
    pub normalization_two_pi_i_power: i32,
    pub rows: Vec<HeferRowJson>,
}

#[derive(Serialize)]
pub struct HeferRowJson {
    pub degree: u32,
    pub coeffs: Vec<crate::format::PolyJson>,
}

impl HeferTable {
    pub fn to_json(&self) -> HeferTableJson {
        HeferTableJson {
            base_vars: self.base_vars.clone(),
            doubled_vars: self.doubled_vars(),
            normalization_two_pi_i_power: self.normalization,
            rows: self
                .rows
                .iter()
                .map(|r| HeferRowJson {
                    degree: r.degree,
                    coeffs: r
                        .coeffs
                        .iter()
                        .map(crate::format::PolyJson::from_poly)
                        .collect(),
                })
                .collect(),
        }
    }
}

/// Adds `delta` to one stored coefficient (test helper for corruption checks).
pub fn perturb(table: &mut HeferTable, row: usize, k: usize, delta: GaussRational) {
    let width = table.width();
    let h = &mut table.rows[row].coeffs[k];
    let deg = h.degree().unwrap_or(0);
    let mut e = vec![0; 2 * width];
    e[0] = deg;
    h.add_term(Monomial(e), delta);
}
