//! Pointwise evaluation of the kernels in the division integral on `ℙⁿ`.
//!
//! Forms live on `C^{n+1} \ {0}` with coordinates `ζ`; a [`KernelPoint`] can
//! carry an affine chart `ζ_c = 1`, in which case every form is pulled back
//! (the generators `dζ_c`, `dζ̄_c` are dropped) and the top blade of the chart
//! is what gets integrated. The target point `z` is either numeric or kept
//! symbolic, so that one sample yields a whole polynomial in `z`.

mod assemble;
mod form;
mod kernels;
mod zpoly;

use thiserror::Error;

pub use assemble::{
    alpha11_top_density, assemble_h, integrand_eval, tau_substitute, weight_density, AlphaPowers,
    AlphaSeries, Integrand, IntegrandValue, Level, HEFER_SIGN,
};
pub use form::{one_form, Coeff, FormSpace, FormValue};
pub use kernels::{
    alpha00, alpha11, alpha_eval, chi, chi_prime, cutoff, dbar_sigma_eval, gamma_eval, sigma_data,
    sigma_data_equal_degree, sigma_eval, u_eval, KernelPoint, KernelSystem, NumericZ, SigmaData,
    SymbolicZ, ZMode,
};
pub use zpoly::{pack, unpack, ZPoly, MAX_Z_VARS};

use crate::hefer::HeferError;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum KernelError {
    #[error("n = {n}, m = {m} exceeds the 32 generators of the form algebra")]
    TooLarge { n: usize, m: usize },
    #[error("projective dimension {0} is not supported (need 1 ≤ n ≤ 7)")]
    UnsupportedDimension(usize),
    #[error("forms from different spaces")]
    SpaceMismatch,
    #[error("ζ = 0")]
    ZetaZero,
    #[error("point lies on the zero set of the generators")]
    OnZeroSet,
    #[error("expected {expected} coordinates, got {got}")]
    PointDimension { expected: usize, got: usize },
    #[error("chart index {0} out of range")]
    BadChart(usize),
    #[error("no chart: the top blade is only defined on a chart")]
    NoChart,
    #[error("numeric-z evaluation needs a target point z")]
    MissingZ,
    #[error("no generators")]
    NoGenerators,
    #[error("generator {0} is not homogeneous")]
    NotHomogeneous(usize),
    #[error("Hefer table does not match the generators")]
    TableMismatch,
    #[error("equal-degree path needs equal generator degrees")]
    UnequalDegrees,
    #[error("level index {0} out of range")]
    BadLevel(usize),
    #[error("dw label {0} out of range")]
    BadLabel(usize),
    #[error("kappa = {kappa} is below the required {need}")]
    KappaTooSmall { kappa: u32, need: u32 },
    #[error("negative net weight exponent {0}")]
    NegativeAlphaPower(i32),
    #[error("ψ is not homogeneous")]
    PsiNotHomogeneous,
    #[error("deg ψ = {psi_degree} but κ − n = {kappa} − {n}")]
    DegreeMismatch {
        kappa: u32,
        n: usize,
        psi_degree: u32,
    },
    #[error("eps must be positive and finite")]
    BadEps,
    #[error(transparent)]
    Hefer(#[from] HeferError),
}

/// Central-difference `∂̄` of a form-valued function, Richardson-extrapolated.
#[cfg(test)]
pub(crate) fn fd_dbar(
    space: FormSpace,
    zeta: &[num_complex::Complex64],
    f: impl Fn(&[num_complex::Complex64]) -> FormValue<num_complex::Complex64>,
) -> FormValue<num_complex::Complex64> {
    use num_complex::Complex64;
    let scale = zeta.iter().map(|v| v.norm()).fold(1.0f64, f64::max);
    let diff = |l: usize, h: f64| {
        let shifted = |step: Complex64| {
            let mut p = zeta.to_vec();
            p[l] += step;
            let mut m = zeta.to_vec();
            m[l] -= step;
            let mut d = f(&p);
            d.add_assign(&f(&m).scale(Complex64::new(-1.0, 0.0)));
            d.scale(Complex64::new(0.5 / h, 0.0))
        };
        // ∂/∂ζ̄ = (∂_x + i ∂_y) / 2
        let mut d = shifted(Complex64::new(h, 0.0));
        d.add_assign(&shifted(Complex64::new(0.0, h)).scale(Complex64::new(0.0, 1.0)));
        d.scale(Complex64::new(0.5, 0.0))
    };
    let h = 1e-3 * scale;
    let mut out = FormValue::zero(space);
    for l in 0..zeta.len() {
        let mut d = diff(l, h / 2.0).scale(Complex64::new(4.0 / 3.0, 0.0));
        d.add_assign(&diff(l, h).scale(Complex64::new(-1.0 / 3.0, 0.0)));
        let basis = FormValue::basis(space, space.dzbar(l), Complex64::new(1.0, 0.0));
        out.add_assign(&basis.wedge(&d).expect("same space"));
    }
    out
}
